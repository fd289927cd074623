//! Consensus solver for the fused kernel-weight subproblem:
//!
//!   minimize over rows theta_t of the weight matrix
//!     sum_t <q_t, theta_t> + lambda * sum_{t<s} ||theta_t - theta_s||_2
//!     subject to theta_t >= 0, ||theta_t||_1 <= 1 per row.
//!
//! Each unordered task pair gets a local copy of its two rows; the pair
//! coupling is handled by an exact two-block shrinkage prox, the rows are
//! re-averaged in closed form, and the feasible set is enforced on a global
//! copy through a pluggable projection backend. Scaled dual variables tie the
//! three copies together; iteration stops when all primal and dual residual
//! norms fall below tolerance.

use crate::projection::{project_box_l1, shrink, ProjectionRegistry, ProjectionState, ZProjection};
use ndarray::{Array2, ArrayView2};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum AdmmError {
    #[error("invalid solver input: {0}")]
    InvalidInput(String),
    #[error("iteration cap {iterations} exceeded; last residuals {residuals:?}")]
    IterationCap { iterations: usize, residuals: ResidualNorms },
    #[error("numerical breakdown at iteration {iteration}: non-finite iterate")]
    NumericalBreakdown { iteration: usize },
    #[error("unknown projection backend {0:?}")]
    UnknownProjection(String),
}

/// Absolute/relative tolerances combined into norm-scaled residual limits.
#[derive(Debug, Clone, Copy)]
pub struct StoppingTolerances {
    pub eps_abs: f64,
    pub eps_rel: f64,
}

impl Default for StoppingTolerances {
    fn default() -> Self {
        StoppingTolerances { eps_abs: 1e-4, eps_rel: 1e-3 }
    }
}

/// Norms of the primal and dual residuals after an iteration. The `aux`
/// entries belong to the Dykstra backend's extra splitting and are zero in
/// exact-projection mode.
#[derive(Debug, Clone, Copy, Default)]
pub struct ResidualNorms {
    pub pair_primal: f64,
    pub global_primal: f64,
    pub aux_primal: f64,
    pub pair_dual: f64,
    pub global_dual: f64,
    pub aux_dual: f64,
}

/// One row of the per-iteration diagnostic trace.
#[derive(Debug, Clone, Copy)]
pub struct IterationRecord {
    pub iteration: usize,
    /// Objective evaluated at the feasible global iterate.
    pub objective: f64,
    pub residuals: ResidualNorms,
    pub rho: f64,
}

#[derive(Debug, Clone)]
pub struct AdmmConfig {
    pub rho: f64,
    pub tolerances: StoppingTolerances,
    pub max_iters: usize,
    /// Rescale rho by the primal/dual residual ratio every 10 iterations.
    pub adaptive_rho: bool,
    /// Projection backend name; see `ProjectionRegistry`.
    pub projection: String,
    /// Compatibility variant that averages with divisor T-1 instead of the
    /// stationarity-correct T. Off by default; kept for comparison runs.
    pub legacy_divisor: bool,
    /// Record a per-iteration trace in the outcome.
    pub track_trace: bool,
}

impl Default for AdmmConfig {
    fn default() -> Self {
        AdmmConfig {
            rho: 1.0,
            tolerances: StoppingTolerances::default(),
            max_iters: 5000,
            adaptive_rho: false,
            projection: "exact".into(),
            legacy_divisor: false,
            track_trace: false,
        }
    }
}

#[derive(Debug, Clone)]
pub struct AdmmOutcome {
    /// Feasible weight matrix (rows projected), T x M.
    pub theta: Array2<f64>,
    pub objective: f64,
    pub iterations: usize,
    pub residuals: ResidualNorms,
    /// Norm-scaled stopping limits the residuals satisfied at exit; infinite
    /// when the closed-form shortcut skipped iteration entirely.
    pub limits: ResidualNorms,
    pub rho_final: f64,
    pub trace: Vec<IterationRecord>,
}

/// Fused penalty sum_{t<s} ||theta_t - theta_s||_2.
pub fn fusion_value(theta: ArrayView2<f64>) -> f64 {
    let t_count = theta.nrows();
    let mut total = 0.0;
    for t in 0..t_count {
        for s in (t + 1)..t_count {
            let d: f64 = (0..theta.ncols())
                .map(|m| {
                    let d = theta[(t, m)] - theta[(s, m)];
                    d * d
                })
                .sum();
            total += d.sqrt();
        }
    }
    total
}

/// Subproblem objective sum_t <q_t, theta_t> + lambda * fusion.
pub fn theta_objective(q: ArrayView2<f64>, theta: ArrayView2<f64>, lambda: f64) -> f64 {
    let linear: f64 = q.iter().zip(theta.iter()).map(|(a, b)| a * b).sum();
    linear + lambda * fusion_value(theta)
}

/// Exact minimizer of lambda*||a - b||_2 + (rho/2)(||a - p_t||^2 + ||b - p_s||^2):
/// the mean of the pair is preserved and the difference is group-shrunk with
/// threshold 2*lambda/rho.
pub fn pair_prox(p_t: &[f64], p_s: &[f64], lambda: f64, rho: f64) -> (Vec<f64>, Vec<f64>) {
    let m = p_t.len();
    let diff: Vec<f64> = (0..m).map(|j| p_t[j] - p_s[j]).collect();
    let shrunk = shrink(&diff, 2.0 * lambda / rho);
    let mut a = vec![0.0; m];
    let mut b = vec![0.0; m];
    for j in 0..m {
        let mean = 0.5 * (p_t[j] + p_s[j]);
        let half = 0.5 * shrunk[j];
        a[j] = mean + half;
        b[j] = mean - half;
    }
    (a, b)
}

/// Per-row linear-program solution used when no pairs couple the rows
/// (lambda = 0 or a single task): full mass on the most negative cost
/// coordinate, ties to the lowest index.
fn vertex_rows(q: ArrayView2<f64>) -> Array2<f64> {
    let (t_count, m_count) = q.dim();
    let mut theta = Array2::zeros((t_count, m_count));
    for t in 0..t_count {
        let mut best = 0usize;
        for m in 1..m_count {
            if q[(t, m)] < q[(t, best)] {
                best = m;
            }
        }
        theta[(t, best)] = 1.0;
    }
    theta
}

fn frob(a: &Array2<f64>) -> f64 {
    a.iter().map(|v| v * v).sum::<f64>().sqrt()
}

fn frob2(a: &Array2<f64>, b: &Array2<f64>) -> f64 {
    (a.iter().map(|v| v * v).sum::<f64>() + b.iter().map(|v| v * v).sum::<f64>()).sqrt()
}

/// Solve the fused weight subproblem. `q` is T x M with q[t][m] the linear
/// cost of loading row t on kernel m; `warm` seeds the iteration.
pub fn solve_theta(
    q: ArrayView2<f64>,
    lambda: f64,
    cfg: &AdmmConfig,
    warm: Option<ArrayView2<f64>>,
) -> Result<AdmmOutcome, AdmmError> {
    let (t_count, m_count) = q.dim();
    if t_count == 0 || m_count == 0 {
        return Err(AdmmError::InvalidInput("empty cost matrix".into()));
    }
    if !q.iter().all(|v| v.is_finite()) {
        return Err(AdmmError::InvalidInput("non-finite cost entry".into()));
    }
    if !(lambda >= 0.0) {
        return Err(AdmmError::InvalidInput(format!("lambda must be >= 0, got {lambda}")));
    }
    if !(cfg.rho > 0.0) {
        return Err(AdmmError::InvalidInput(format!("rho must be > 0, got {}", cfg.rho)));
    }
    if let Some(w) = warm {
        if w.dim() != q.dim() {
            return Err(AdmmError::InvalidInput("warm start shape mismatch".into()));
        }
    }

    // Without pair coupling the problem is a per-row linear program over the
    // feasible set; solve it exactly by vertex enumeration.
    if lambda == 0.0 || t_count == 1 {
        let theta = vertex_rows(q);
        let objective = theta_objective(q, theta.view(), lambda);
        return Ok(AdmmOutcome {
            theta,
            objective,
            iterations: 0,
            residuals: ResidualNorms::default(),
            limits: ResidualNorms {
                pair_primal: f64::INFINITY,
                global_primal: f64::INFINITY,
                aux_primal: f64::INFINITY,
                pair_dual: f64::INFINITY,
                global_dual: f64::INFINITY,
                aux_dual: f64::INFINITY,
            },
            rho_final: cfg.rho,
            trace: Vec::new(),
        });
    }

    let registry = ProjectionRegistry::standard();
    let backend: Box<dyn ZProjection> = registry
        .build(&cfg.projection)
        .ok_or_else(|| AdmmError::UnknownProjection(cfg.projection.clone()))?;
    let dykstra = backend.uses_auxiliary();

    let pairs: Vec<(usize, usize)> = (0..t_count)
        .flat_map(|t| ((t + 1)..t_count).map(move |s| (t, s)))
        .collect();
    let n_pairs = pairs.len();

    let mut theta = match warm {
        Some(w) => w.to_owned(),
        None => Array2::from_elem((t_count, m_count), 1.0 / m_count as f64),
    };
    let mut z = theta.clone();
    let mut s_first: Array2<f64> = Array2::zeros((n_pairs, m_count));
    let mut s_second: Array2<f64> = Array2::zeros((n_pairs, m_count));
    let mut u_first: Array2<f64> = Array2::zeros((n_pairs, m_count));
    let mut u_second: Array2<f64> = Array2::zeros((n_pairs, m_count));
    let mut v: Array2<f64> = Array2::zeros((t_count, m_count));
    let mut proj_state = ProjectionState::new(t_count, m_count);

    let mut rho = cfg.rho;
    let divisor = if cfg.legacy_divisor { (t_count - 1) as f64 } else { t_count as f64 };
    let tol = cfg.tolerances;
    let mut trace = Vec::new();
    let mut residuals = ResidualNorms::default();

    for iteration in 1..=cfg.max_iters {
        // Pair prox on each local copy, driven by the current global rows.
        for (i, &(t, s)) in pairs.iter().enumerate() {
            let p_t: Vec<f64> = (0..m_count).map(|j| theta[(t, j)] - u_first[(i, j)]).collect();
            let p_s: Vec<f64> = (0..m_count).map(|j| theta[(s, j)] - u_second[(i, j)]).collect();
            let (a, b) = pair_prox(&p_t, &p_s, lambda, rho);
            for j in 0..m_count {
                s_first[(i, j)] = a[j];
                s_second[(i, j)] = b[j];
            }
        }

        // Closed-form re-averaging of each row across its pair copies, the
        // projected copy, and the linear cost.
        let theta_prev = theta.clone();
        let mut accum: Array2<f64> = Array2::zeros((t_count, m_count));
        for (i, &(t, s)) in pairs.iter().enumerate() {
            for j in 0..m_count {
                accum[(t, j)] += s_first[(i, j)] + u_first[(i, j)];
                accum[(s, j)] += s_second[(i, j)] + u_second[(i, j)];
            }
        }
        for t in 0..t_count {
            for j in 0..m_count {
                theta[(t, j)] = (accum[(t, j)] + z[(t, j)] + v[(t, j)] - q[(t, j)] / rho) / divisor;
            }
        }

        // Projection of the global copy.
        let z_prev = z.clone();
        proj_state.y_prev.assign(&proj_state.y);
        for t in 0..t_count {
            let target: Vec<f64> = (0..m_count).map(|j| theta[(t, j)] - v[(t, j)]).collect();
            let row = backend.project_row(&target, t, &mut proj_state);
            for j in 0..m_count {
                z[(t, j)] = row[j];
            }
        }

        // Scaled dual ascent.
        for (i, &(t, s)) in pairs.iter().enumerate() {
            for j in 0..m_count {
                u_first[(i, j)] += s_first[(i, j)] - theta[(t, j)];
                u_second[(i, j)] += s_second[(i, j)] - theta[(s, j)];
            }
        }
        for t in 0..t_count {
            for j in 0..m_count {
                v[(t, j)] += z[(t, j)] - theta[(t, j)];
            }
        }

        // Residual norms.
        let mut pair_primal = 0.0;
        let mut theta_tilde_sq = 0.0;
        for (i, &(t, s)) in pairs.iter().enumerate() {
            for j in 0..m_count {
                let d1 = s_first[(i, j)] - theta[(t, j)];
                let d2 = s_second[(i, j)] - theta[(s, j)];
                pair_primal += d1 * d1 + d2 * d2;
                theta_tilde_sq += theta[(t, j)] * theta[(t, j)] + theta[(s, j)] * theta[(s, j)];
            }
        }
        let pair_primal = pair_primal.sqrt();
        let global_primal = {
            let mut acc = 0.0;
            for t in 0..t_count {
                for j in 0..m_count {
                    let d = z[(t, j)] - theta[(t, j)];
                    acc += d * d;
                }
            }
            acc.sqrt()
        };
        let pair_dual = rho * {
            let mut acc = 0.0;
            for t in 0..t_count {
                for j in 0..m_count {
                    let d = theta[(t, j)] - theta_prev[(t, j)];
                    acc += d * d;
                }
            }
            acc.sqrt()
        };
        let global_dual = rho * {
            let mut acc = 0.0;
            for t in 0..t_count {
                for j in 0..m_count {
                    let d = z_prev[(t, j)] - z[(t, j)];
                    acc += d * d;
                }
            }
            acc.sqrt()
        };
        let (aux_primal, aux_dual) = if dykstra {
            let mut p = 0.0;
            let mut d = 0.0;
            for t in 0..t_count {
                for j in 0..m_count {
                    let dp = proj_state.y[(t, j)] - z[(t, j)];
                    p += dp * dp;
                    let dd = proj_state.y_prev[(t, j)] - proj_state.y[(t, j)];
                    d += dd * dd;
                }
            }
            (p.sqrt(), rho * d.sqrt())
        } else {
            (0.0, 0.0)
        };
        residuals = ResidualNorms { pair_primal, global_primal, aux_primal, pair_dual, global_dual, aux_dual };

        let all = [pair_primal, global_primal, aux_primal, pair_dual, global_dual, aux_dual];
        if !all.iter().all(|v| v.is_finite()) || !theta.iter().all(|v| v.is_finite()) {
            return Err(AdmmError::NumericalBreakdown { iteration });
        }

        // Norm-scaled stopping limits.
        let pair_count_dim = (2 * n_pairs * m_count) as f64;
        let global_dim = (t_count * m_count) as f64;
        let s_norm = frob2(&s_first, &s_second);
        let pri1_limit = pair_count_dim.sqrt() * tol.eps_abs + tol.eps_rel * s_norm.max(theta_tilde_sq.sqrt());
        let pri2_limit = global_dim.sqrt() * tol.eps_abs + tol.eps_rel * frob(&z).max(frob(&theta));
        let dual1_limit = global_dim.sqrt() * tol.eps_abs + tol.eps_rel * rho * frob2(&u_first, &u_second);
        let dual2_limit = global_dim.sqrt() * tol.eps_abs + tol.eps_rel * rho * frob(&v);
        let (pri3_limit, dual3_limit) = if dykstra {
            (
                global_dim.sqrt() * tol.eps_abs + tol.eps_rel * frob(&proj_state.y).max(frob(&z)),
                global_dim.sqrt() * tol.eps_abs + tol.eps_rel * rho * frob(&proj_state.beta),
            )
        } else {
            (f64::INFINITY, f64::INFINITY)
        };

        if cfg.track_trace {
            trace.push(IterationRecord {
                iteration,
                objective: theta_objective(q, z.view(), lambda),
                residuals,
                rho,
            });
        }

        let primal_ok = pair_primal <= pri1_limit
            && global_primal <= pri2_limit
            && (!dykstra || aux_primal <= pri3_limit);
        let dual_ok = pair_dual <= dual1_limit
            && global_dual <= dual2_limit
            && (!dykstra || aux_dual <= dual3_limit);
        if primal_ok && dual_ok {
            let mut final_theta = theta.clone();
            for t in 0..t_count {
                let row: Vec<f64> = (0..m_count).map(|j| final_theta[(t, j)]).collect();
                let projected = project_box_l1(&row);
                for j in 0..m_count {
                    final_theta[(t, j)] = projected[j];
                }
            }
            let objective = theta_objective(q, final_theta.view(), lambda);
            return Ok(AdmmOutcome {
                theta: final_theta,
                objective,
                iterations: iteration,
                residuals,
                limits: ResidualNorms {
                    pair_primal: pri1_limit,
                    global_primal: pri2_limit,
                    aux_primal: pri3_limit,
                    pair_dual: dual1_limit,
                    global_dual: dual2_limit,
                    aux_dual: dual3_limit,
                },
                rho_final: rho,
                trace,
            });
        }

        if cfg.adaptive_rho && iteration % 10 == 0 {
            let pri = (pair_primal * pair_primal + global_primal * global_primal + aux_primal * aux_primal).sqrt();
            let dua = (pair_dual * pair_dual + global_dual * global_dual + aux_dual * aux_dual).sqrt();
            if pri > 10.0 * dua {
                rho *= 2.0;
                u_first.mapv_inplace(|x| x / 2.0);
                u_second.mapv_inplace(|x| x / 2.0);
                v.mapv_inplace(|x| x / 2.0);
                proj_state.beta.mapv_inplace(|x| x / 2.0);
            } else if dua > 10.0 * pri {
                rho /= 2.0;
                u_first.mapv_inplace(|x| x * 2.0);
                u_second.mapv_inplace(|x| x * 2.0);
                v.mapv_inplace(|x| x * 2.0);
                proj_state.beta.mapv_inplace(|x| x * 2.0);
            }
        }
    }

    Err(AdmmError::IterationCap { iterations: cfg.max_iters, residuals })
}

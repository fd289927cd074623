//! Training loop for the fused multi-task kernel machine. Each outer
//! iteration alternates (a) per-task dual solves on the currently weighted
//! kernels, (b) per-kernel cost extraction, and (c) the consensus solve for
//! new kernel weights, damped by a backtracking step so the primal objective
//!
//!   sum_t ||w_t||^2/2 + C * hinge + lambda * fusion
//!
//! never increases. Stops when the relative objective change falls below
//! tolerance or the iteration cap is reached; returns the best iterate seen.

use crate::admm::{solve_theta, AdmmConfig, AdmmError, ResidualNorms};
use crate::admm::{fusion_value, theta_objective};
use crate::kernel::{KernelBank, KernelError};
use crate::svm::{decision_values, kernel_cost, solve_dual, support_indices, SvmError};
use ndarray::{Array2, ArrayView2};
use rayon::prelude::*;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("invalid training config: {0}")]
    Config(String),
    #[error("task {task} ({name}): {source}")]
    Task {
        task: usize,
        name: String,
        #[source]
        source: SvmError,
    },
    #[error(transparent)]
    Admm(#[from] AdmmError),
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error("infeasible model: {0}")]
    Infeasible(String),
}

#[derive(Debug, Clone)]
pub enum ThetaInit {
    Uniform,
    Custom(Array2<f64>),
}

#[derive(Debug, Clone)]
pub struct TrainConfig {
    pub c: f64,
    pub lambda: f64,
    pub svm_tol: f64,
    /// Stop when |F_prev - F| <= outer_tol * max(1, |F_prev|).
    pub outer_tol: f64,
    pub outer_max_iters: usize,
    pub admm: AdmmConfig,
    pub theta_init: ThetaInit,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            c: 1.0,
            lambda: 0.0,
            svm_tol: 1e-3,
            outer_tol: 1e-4,
            outer_max_iters: 50,
            admm: AdmmConfig::default(),
            theta_init: ThetaInit::Uniform,
        }
    }
}

/// One row of the structured training log.
#[derive(Debug, Clone)]
pub struct OuterRecord {
    pub iteration: usize,
    pub objective: f64,
    pub quad_term: f64,
    pub hinge_term: f64,
    pub fusion_term: f64,
    /// Damping accepted by the backtracking step (1 = full consensus step).
    pub step_scale: f64,
    pub admm_iterations: usize,
    pub admm_residuals: ResidualNorms,
    pub admm_limits: ResidualNorms,
}

#[derive(Debug, Clone)]
pub struct TrainedModel {
    /// Per-task kernel weights, T x M, rows feasible.
    pub theta: Array2<f64>,
    pub alphas: Vec<Vec<f64>>,
    pub biases: Vec<f64>,
    pub support: Vec<Vec<usize>>,
    pub objective: f64,
    pub trace: Vec<OuterRecord>,
    pub outer_iterations: usize,
    pub admm_iterations_total: usize,
    /// False when the outer cap expired before the objective stabilized;
    /// the model is still usable, callers should surface a warning.
    pub converged: bool,
    pub wall_seconds: f64,
}

/// Sign convention for predictions: nonnegative decision values map to +1.
pub fn predict_labels(values: &[f64]) -> Vec<f64> {
    values.iter().map(|&v| if v >= 0.0 { 1.0 } else { -1.0 }).collect()
}

/// Fraction of agreeing labels.
pub fn accuracy(predicted: &[f64], truth: &[f64]) -> f64 {
    assert_eq!(predicted.len(), truth.len());
    assert!(!truth.is_empty(), "accuracy of an empty slice is undefined");
    let hits = predicted.iter().zip(truth).filter(|(p, t)| p == t).count();
    hits as f64 / truth.len() as f64
}

/// Result of refitting every task against a fixed weight matrix.
struct Sweep {
    alphas: Vec<Vec<f64>>,
    biases: Vec<f64>,
    /// kernel costs q[t][m] = -1/2 (a o y)' K_t^m (a o y)
    q: Array2<f64>,
    /// per-task hinge sums (without the C factor)
    hinges: Vec<f64>,
}

fn alpha_sweep(
    bank: &KernelBank,
    labels: &[Vec<f64>],
    names: &[String],
    theta: ArrayView2<f64>,
    c: f64,
    svm_tol: f64,
) -> Result<Sweep, TrainError> {
    let m_count = bank.num_kernels();
    let per_task: Vec<(Vec<f64>, f64, Vec<f64>, f64)> = (0..labels.len())
        .into_par_iter()
        .map(|t| {
            let theta_row: Vec<f64> = (0..m_count).map(|m| theta[(t, m)]).collect();
            let combined = bank.combine(t, &theta_row)?;
            let sol = solve_dual(combined.view(), &labels[t], c, svm_tol, false).map_err(|source| {
                TrainError::Task { task: t, name: names[t].clone(), source }
            })?;
            let q_row: Vec<f64> =
                (0..m_count).map(|m| kernel_cost(&sol.alpha, &labels[t], bank.gram(t, m).view())).collect();
            let f = decision_values(combined.view(), &sol.alpha, &labels[t], sol.bias);
            let hinge: f64 =
                f.iter().zip(&labels[t]).map(|(fi, yi)| (1.0 - yi * fi).max(0.0)).sum();
            Ok((sol.alpha, sol.bias, q_row, hinge))
        })
        .collect::<Result<Vec<_>, TrainError>>()?;
    let t_count = labels.len();
    let mut q = Array2::zeros((t_count, m_count));
    let mut alphas = Vec::with_capacity(t_count);
    let mut biases = Vec::with_capacity(t_count);
    let mut hinges = Vec::with_capacity(t_count);
    for (t, (alpha, bias, q_row, hinge)) in per_task.into_iter().enumerate() {
        for (m, v) in q_row.into_iter().enumerate() {
            q[(t, m)] = v;
        }
        alphas.push(alpha);
        biases.push(bias);
        hinges.push(hinge);
    }
    Ok(Sweep { alphas, biases, q, hinges })
}

/// Objective terms from a completed sweep: the quadratic term equals
/// -sum_{t,m} theta q because the costs were extracted from the same alphas.
fn sweep_terms(sweep: &Sweep, theta: ArrayView2<f64>, c: f64, lambda: f64) -> (f64, f64, f64) {
    let quad: f64 = -theta.iter().zip(sweep.q.iter()).map(|(th, qv)| th * qv).sum::<f64>();
    let hinge: f64 = c * sweep.hinges.iter().sum::<f64>();
    let fused = lambda * fusion_value(theta);
    (quad, hinge, fused)
}

fn validate_theta(theta: ArrayView2<f64>, t_count: usize, m_count: usize) -> Result<(), TrainError> {
    if theta.dim() != (t_count, m_count) {
        return Err(TrainError::Infeasible(format!(
            "weight matrix is {:?}, expected ({t_count}, {m_count})",
            theta.dim()
        )));
    }
    for t in 0..t_count {
        let mut sum = 0.0;
        for m in 0..m_count {
            let v = theta[(t, m)];
            if !(v >= -1e-9) {
                return Err(TrainError::Infeasible(format!("theta[{t}][{m}] = {v} is negative")));
            }
            sum += v.max(0.0);
        }
        if sum > 1.0 + 1e-9 {
            return Err(TrainError::Infeasible(format!("theta row {t} sums to {sum} > 1")));
        }
    }
    Ok(())
}

/// Full primal objective for an explicit (theta, alpha, bias) triple, with
/// feasibility checks; the training loop uses the cheaper sweep-based path.
pub fn primal_objective(
    bank: &KernelBank,
    labels: &[Vec<f64>],
    theta: ArrayView2<f64>,
    alphas: &[Vec<f64>],
    biases: &[f64],
    c: f64,
    lambda: f64,
) -> Result<f64, TrainError> {
    let t_count = labels.len();
    validate_theta(theta, t_count, bank.num_kernels())?;
    if alphas.len() != t_count || biases.len() != t_count {
        return Err(TrainError::Infeasible("alpha/bias count differs from task count".into()));
    }
    let mut total = lambda * fusion_value(theta);
    for t in 0..t_count {
        let y = &labels[t];
        let alpha = &alphas[t];
        if alpha.len() != y.len() {
            return Err(TrainError::Infeasible(format!("task {t}: alpha length mismatch")));
        }
        let mut balance = 0.0;
        for (i, &a) in alpha.iter().enumerate() {
            if !(-1e-9..=c + 1e-9).contains(&a) {
                return Err(TrainError::Infeasible(format!("task {t}: alpha[{i}] = {a} outside [0, {c}]")));
            }
            balance += a * y[i];
        }
        if balance.abs() > 1e-6 * (1.0 + c * y.len() as f64) {
            return Err(TrainError::Infeasible(format!("task {t}: sum alpha*y = {balance} is not zero")));
        }
        let theta_row: Vec<f64> = (0..bank.num_kernels()).map(|m| theta[(t, m)]).collect();
        let combined = bank.combine(t, &theta_row)?;
        let coeff: Vec<f64> = alpha.iter().zip(y).map(|(a, yi)| a * yi).collect();
        let mut quad = 0.0;
        for i in 0..y.len() {
            let mut row = 0.0;
            for j in 0..y.len() {
                row += combined[(i, j)] * coeff[j];
            }
            quad += coeff[i] * row;
        }
        total += 0.5 * quad;
        let f = decision_values(combined.view(), alpha, y, biases[t]);
        total += c * f.iter().zip(y).map(|(fi, yi)| (1.0 - yi * fi).max(0.0)).sum::<f64>();
    }
    Ok(total)
}

/// Train on the given tasks. The bank must have been built on each task's
/// train split, in the same task order.
pub fn train(
    tasks: &[crate::data::TaskDataset],
    bank: &KernelBank,
    cfg: &TrainConfig,
) -> Result<TrainedModel, TrainError> {
    let started = std::time::Instant::now();
    if !(cfg.c > 0.0) || !cfg.c.is_finite() {
        return Err(TrainError::Config(format!("C must be positive, got {}", cfg.c)));
    }
    if !(cfg.lambda >= 0.0) || !cfg.lambda.is_finite() {
        return Err(TrainError::Config(format!("lambda must be nonnegative, got {}", cfg.lambda)));
    }
    if cfg.outer_max_iters == 0 {
        return Err(TrainError::Config("outer_max_iters must be at least 1".into()));
    }
    let t_count = tasks.len();
    if t_count == 0 {
        return Err(TrainError::Config("no tasks".into()));
    }
    if bank.num_tasks() != t_count {
        return Err(TrainError::Config(format!(
            "bank holds {} tasks, data has {t_count}",
            bank.num_tasks()
        )));
    }
    let m_count = bank.num_kernels();
    let labels: Vec<Vec<f64>> = tasks.iter().map(|t| t.train_data().1).collect();
    let names: Vec<String> = tasks.iter().map(|t| t.name.clone()).collect();
    for (t, y) in labels.iter().enumerate() {
        if bank.features(t).nrows() != y.len() {
            return Err(TrainError::Config(format!(
                "task {t}: bank built on {} rows but train split has {}",
                bank.features(t).nrows(),
                y.len()
            )));
        }
    }

    let mut theta = match &cfg.theta_init {
        ThetaInit::Uniform => Array2::from_elem((t_count, m_count), 1.0 / m_count as f64),
        ThetaInit::Custom(custom) => {
            validate_theta(custom.view(), t_count, m_count)?;
            custom.clone()
        }
    };

    let mut sweep = alpha_sweep(bank, &labels, &names, theta.view(), cfg.c, cfg.svm_tol)?;
    let (quad, hinge, fused) = sweep_terms(&sweep, theta.view(), cfg.c, cfg.lambda);
    let mut objective = quad + hinge + fused;
    let infinite = ResidualNorms {
        pair_primal: f64::INFINITY,
        global_primal: f64::INFINITY,
        aux_primal: f64::INFINITY,
        pair_dual: f64::INFINITY,
        global_dual: f64::INFINITY,
        aux_dual: f64::INFINITY,
    };
    let mut trace = vec![OuterRecord {
        iteration: 0,
        objective,
        quad_term: quad,
        hinge_term: hinge,
        fusion_term: fused,
        step_scale: 1.0,
        admm_iterations: 0,
        admm_residuals: ResidualNorms::default(),
        admm_limits: infinite,
    }];

    let mut best_objective = objective;
    let mut best = (theta.clone(), sweep.alphas.clone(), sweep.biases.clone());
    let mut admm_iterations_total = 0;
    let mut converged = false;
    let mut outer_iterations = 0;

    for iteration in 1..=cfg.outer_max_iters {
        let target = solve_theta(sweep.q.view(), cfg.lambda, &cfg.admm, Some(theta.view()))?;
        admm_iterations_total += target.iterations;

        // Backtrack along the segment to the consensus target until the
        // refitted objective stops increasing; the segment stays feasible
        // because both endpoints are.
        let mut scale = 1.0;
        let mut accepted = None;
        while scale >= 1e-4 {
            let mut trial = theta.clone();
            for t in 0..t_count {
                for m in 0..m_count {
                    trial[(t, m)] = (1.0 - scale) * theta[(t, m)] + scale * target.theta[(t, m)];
                }
            }
            let trial_sweep = alpha_sweep(bank, &labels, &names, trial.view(), cfg.c, cfg.svm_tol)?;
            let (q2, h2, f2) = sweep_terms(&trial_sweep, trial.view(), cfg.c, cfg.lambda);
            let trial_objective = q2 + h2 + f2;
            if trial_objective <= objective + 1e-12 {
                accepted = Some((trial, trial_sweep, trial_objective, q2, h2, f2));
                break;
            }
            scale *= 0.5;
        }
        let Some((new_theta, new_sweep, new_objective, q2, h2, f2)) = accepted else {
            // No damping level descends; the current iterate is a fixed
            // point of the alternation up to solver tolerance.
            converged = true;
            outer_iterations = iteration;
            break;
        };
        theta = new_theta;
        sweep = new_sweep;
        let previous = objective;
        objective = new_objective;
        outer_iterations = iteration;
        trace.push(OuterRecord {
            iteration,
            objective,
            quad_term: q2,
            hinge_term: h2,
            fusion_term: f2,
            step_scale: scale,
            admm_iterations: target.iterations,
            admm_residuals: target.residuals,
            admm_limits: target.limits,
        });
        if objective < best_objective {
            best_objective = objective;
            best = (theta.clone(), sweep.alphas.clone(), sweep.biases.clone());
        }
        if (previous - objective).abs() <= cfg.outer_tol * previous.abs().max(1.0) {
            converged = true;
            break;
        }
    }

    let (theta, alphas, biases) = best;
    let support = alphas.iter().map(|a| support_indices(a, cfg.c)).collect();
    Ok(TrainedModel {
        theta,
        alphas,
        biases,
        support,
        objective: best_objective,
        trace,
        outer_iterations,
        admm_iterations_total,
        converged,
        wall_seconds: started.elapsed().as_secs_f64(),
    })
}

/// Convenience wrapper exposing the weight-subproblem objective for
/// diagnostics (linear cost plus fused penalty).
pub fn weight_objective(q: ArrayView2<f64>, theta: ArrayView2<f64>, lambda: f64) -> f64 {
    theta_objective(q, theta, lambda)
}

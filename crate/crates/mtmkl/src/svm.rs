//! Dual solver for the soft-margin kernel SVM:
//!
//!   maximize 1'alpha - 1/2 alpha' Q alpha,  Q_ij = y_i y_j K_ij,
//!   subject to 0 <= alpha_i <= C and sum_i alpha_i y_i = 0.
//!
//! Solved by two-variable ascent on the maximal violating pair: pick the
//! steepest feasible ascent coordinate from the up set and the steepest
//! descent coordinate from the low set, take the exact box-clipped step along
//! the constraint-preserving direction, and stop when the pair gap falls
//! below tolerance. The bias is the mean of y_i - f_i over free support
//! vectors, falling back to the midpoint of the interval the bounded points
//! imply when no multiplier is strictly inside the box.

use ndarray::ArrayView2;
use thiserror::Error;

/// Multipliers at or below this fraction of the box are treated as inactive
/// when classifying support vectors and boundary sets.
const BOUNDARY_TOL: f64 = 1e-12;
const ETA_FLOOR: f64 = 1e-15;

#[derive(Debug, Error)]
pub enum SvmError {
    #[error("invalid solver input: {0}")]
    InvalidInput(String),
    #[error("label at index {index} is {value}, expected +1 or -1")]
    InvalidLabel { index: usize, value: f64 },
    #[error("all labels share one class; the dual is unbounded in bias")]
    SingleClass,
    #[error("kernel matrix is not symmetric at ({i},{j}): difference {delta:e}")]
    AsymmetricKernel { i: usize, j: usize, delta: f64 },
    #[error("pair gap {gap:e} still above tolerance after {iterations} iterations")]
    IterationCap { iterations: usize, gap: f64, best: Box<DualSolution> },
}

#[derive(Debug, Clone)]
pub struct DualSolution {
    pub alpha: Vec<f64>,
    pub bias: f64,
    /// Dual objective 1'alpha - 1/2 alpha' Q alpha at exit.
    pub objective: f64,
    pub iterations: usize,
    /// Final maximal violating pair gap.
    pub gap: f64,
    /// Dual objective after each update when tracing is on.
    pub trace: Vec<f64>,
}

/// Linear kernel cost -1/2 (alpha o y)' K (alpha o y). Never positive when K
/// is positive semidefinite; the weight solver consumes one per kernel.
pub fn kernel_cost(alpha: &[f64], y: &[f64], k: ArrayView2<f64>) -> f64 {
    let n = alpha.len();
    assert_eq!(y.len(), n);
    assert_eq!(k.dim(), (n, n));
    let coeff: Vec<f64> = (0..n).map(|i| alpha[i] * y[i]).collect();
    let mut total = 0.0;
    for i in 0..n {
        if coeff[i] == 0.0 {
            continue;
        }
        let mut row = 0.0;
        for j in 0..n {
            row += k[(i, j)] * coeff[j];
        }
        total += coeff[i] * row;
    }
    -0.5 * total
}

/// Decision values f(x) = sum_i alpha_i y_i K(x, x_i) + b for each query row
/// of a query-by-train cross kernel.
pub fn decision_values(cross: ArrayView2<f64>, alpha: &[f64], y: &[f64], bias: f64) -> Vec<f64> {
    let (n_query, n_train) = cross.dim();
    assert_eq!(alpha.len(), n_train);
    assert_eq!(y.len(), n_train);
    let coeff: Vec<f64> = (0..n_train).map(|i| alpha[i] * y[i]).collect();
    (0..n_query)
        .map(|q| {
            let mut f = bias;
            for i in 0..n_train {
                f += coeff[i] * cross[(q, i)];
            }
            f
        })
        .collect()
}

/// Indices with a multiplier meaningfully above zero.
pub fn support_indices(alpha: &[f64], c: f64) -> Vec<usize> {
    let cut = BOUNDARY_TOL * c.max(1.0);
    alpha
        .iter()
        .enumerate()
        .filter_map(|(i, &a)| (a > cut).then_some(i))
        .collect()
}

fn validate(k: ArrayView2<f64>, y: &[f64], c: f64, tol: f64) -> Result<(), SvmError> {
    let n = y.len();
    if n == 0 {
        return Err(SvmError::InvalidInput("empty training set".into()));
    }
    if k.dim() != (n, n) {
        return Err(SvmError::InvalidInput(format!(
            "kernel is {:?}, labels have length {n}",
            k.dim()
        )));
    }
    if !(c >= 0.0) || !c.is_finite() {
        return Err(SvmError::InvalidInput(format!("C must be finite and >= 0, got {c}")));
    }
    if !(tol > 0.0) || !tol.is_finite() {
        return Err(SvmError::InvalidInput(format!("tolerance must be positive, got {tol}")));
    }
    for (index, &value) in y.iter().enumerate() {
        if value != 1.0 && value != -1.0 {
            return Err(SvmError::InvalidLabel { index, value });
        }
    }
    for i in 0..n {
        for j in (i + 1)..n {
            let delta = (k[(i, j)] - k[(j, i)]).abs();
            if !(delta <= 1e-8) {
                return Err(SvmError::AsymmetricKernel { i, j, delta });
            }
        }
    }
    if !k.iter().all(|v| v.is_finite()) {
        return Err(SvmError::InvalidInput("non-finite kernel entry".into()));
    }
    Ok(())
}

/// Bias and fresh margins from the final multipliers. Returns (bias, e) with
/// e_i = y_i - f_i.
fn bias_from_kkt(k: ArrayView2<f64>, y: &[f64], alpha: &[f64], c: f64) -> (f64, Vec<f64>) {
    let n = y.len();
    let coeff: Vec<f64> = (0..n).map(|i| alpha[i] * y[i]).collect();
    let e: Vec<f64> = (0..n)
        .map(|i| {
            let mut f = 0.0;
            for j in 0..n {
                f += coeff[j] * k[(i, j)];
            }
            y[i] - f
        })
        .collect();
    let lo_cut = BOUNDARY_TOL * c.max(1.0);
    let hi_cut = c - lo_cut;
    let free: Vec<usize> = (0..n).filter(|&i| alpha[i] > lo_cut && alpha[i] < hi_cut).collect();
    if !free.is_empty() {
        let bias = free.iter().map(|&i| e[i]).sum::<f64>() / free.len() as f64;
        return (bias, e);
    }
    // Every multiplier is at a box face; each face yields a one-sided bound
    // on the bias and the KKT conditions hold anywhere in between.
    let mut lower = f64::NEG_INFINITY;
    let mut upper = f64::INFINITY;
    for i in 0..n {
        let at_zero = alpha[i] <= lo_cut;
        if (at_zero && y[i] > 0.0) || (!at_zero && y[i] < 0.0) {
            lower = lower.max(e[i]);
        } else {
            upper = upper.min(e[i]);
        }
    }
    let bias = match (lower.is_finite(), upper.is_finite()) {
        (true, true) => 0.5 * (lower + upper),
        (true, false) => lower,
        (false, true) => upper,
        (false, false) => 0.0,
    };
    (bias, e)
}

/// Solve the box-constrained dual for one task. `k` is the combined training
/// gram, `y` the +/-1 labels, `c` the box bound, `tol` the violating-pair
/// stopping gap. Set `trace` to record the dual objective after every step.
pub fn solve_dual(
    k: ArrayView2<f64>,
    y: &[f64],
    c: f64,
    tol: f64,
    trace: bool,
) -> Result<DualSolution, SvmError> {
    validate(k, y, c, tol)?;
    let n = y.len();
    if c == 0.0 {
        return Ok(DualSolution {
            alpha: vec![0.0; n],
            bias: 0.0,
            objective: 0.0,
            iterations: 0,
            gap: 0.0,
            trace: Vec::new(),
        });
    }
    let pos = y.iter().any(|&v| v > 0.0);
    let neg = y.iter().any(|&v| v < 0.0);
    if !(pos && neg) {
        return Err(SvmError::SingleClass);
    }

    let mut alpha = vec![0.0; n];
    // Gradient of 1/2 a'Qa - 1'a; e_i = -y_i grad_i = y_i - f_i.
    let mut grad = vec![-1.0; n];
    let mut objective = 0.0;
    let mut trace_log = Vec::new();
    let lo_cut = BOUNDARY_TOL * c.max(1.0);
    let hi_cut = c - lo_cut;
    let cap = 10 * n * 1000;
    let mut iterations = 0;
    let mut gap = f64::INFINITY;

    while iterations < cap {
        // Maximal violating pair over the feasible ascent/descent sets.
        let mut i_up = usize::MAX;
        let mut e_up = f64::NEG_INFINITY;
        let mut i_lo = usize::MAX;
        let mut e_lo = f64::INFINITY;
        for idx in 0..n {
            let e = -y[idx] * grad[idx];
            let in_up = (y[idx] > 0.0 && alpha[idx] < hi_cut) || (y[idx] < 0.0 && alpha[idx] > lo_cut);
            let in_lo = (y[idx] < 0.0 && alpha[idx] < hi_cut) || (y[idx] > 0.0 && alpha[idx] > lo_cut);
            if in_up && e > e_up {
                e_up = e;
                i_up = idx;
            }
            if in_lo && e < e_lo {
                e_lo = e;
                i_lo = idx;
            }
        }
        if i_up == usize::MAX || i_lo == usize::MAX {
            gap = 0.0;
            break;
        }
        gap = e_up - e_lo;
        if gap <= tol {
            break;
        }
        iterations += 1;
        let (i, j) = (i_up, i_lo);

        // Exact minimizer along d with d_i = y_i, d_j = -y_j, which keeps
        // sum alpha y fixed; curvature along d is K_ii + K_jj - 2 K_ij.
        let eta = (k[(i, i)] + k[(j, j)] - 2.0 * k[(i, j)]).max(ETA_FLOOR);
        let mut step = gap / eta;
        step = step.min(if y[i] > 0.0 { c - alpha[i] } else { alpha[i] });
        step = step.min(if y[j] > 0.0 { alpha[j] } else { c - alpha[j] });
        if step <= 0.0 {
            break;
        }
        let da_i = y[i] * step;
        let da_j = -y[j] * step;
        alpha[i] = (alpha[i] + da_i).clamp(0.0, c);
        alpha[j] = (alpha[j] + da_j).clamp(0.0, c);
        for idx in 0..n {
            grad[idx] += y[idx] * (y[i] * k[(idx, i)] * da_i + y[j] * k[(idx, j)] * da_j);
        }
        if trace {
            // Ascent along d raises the dual by step*gap - step^2*eta/2.
            objective += step * gap - 0.5 * step * step * eta;
            trace_log.push(objective);
        }
    }

    let (bias, e) = bias_from_kkt(k, y, &alpha, c);
    let fresh_objective = {
        // 1'a - 1/2 a'Qa with f_i = y_i - e_i = sum_j coeff_j K_ij.
        let mut obj = 0.0;
        for idx in 0..n {
            obj += alpha[idx] - 0.5 * alpha[idx] * y[idx] * (y[idx] - e[idx]);
        }
        obj
    };
    let solution = DualSolution {
        alpha,
        bias,
        objective: fresh_objective,
        iterations,
        gap,
        trace: trace_log,
    };
    if gap > tol {
        return Err(SvmError::IterationCap { iterations, gap, best: Box::new(solution) });
    }
    Ok(solution)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::{array, Array2};

    fn margins(k: ArrayView2<f64>, sol: &DualSolution, y: &[f64]) -> Vec<f64> {
        let f = decision_values(k, &sol.alpha, y, sol.bias);
        y.iter().zip(f).map(|(yi, fi)| yi * fi).collect()
    }

    #[test]
    fn two_point_problem_has_the_analytic_solution() {
        let k = array![[1.0, -1.0], [-1.0, 1.0]];
        let y = [1.0, -1.0];
        let sol = solve_dual(k.view(), &y, 10.0, 1e-8, false).unwrap();
        assert!((sol.alpha[0] - 0.5).abs() < 1e-8, "alpha {:?}", sol.alpha);
        assert!((sol.alpha[1] - 0.5).abs() < 1e-8);
        assert!(sol.bias.abs() < 1e-8);
        assert!((sol.objective - 0.5).abs() < 1e-8);
        let m = margins(k.view(), &sol, &y);
        assert!((m[0] - 1.0).abs() < 1e-6 && (m[1] - 1.0).abs() < 1e-6);
    }

    #[test]
    fn zero_box_returns_the_trivial_solution() {
        let k = array![[1.0, 0.0], [0.0, 1.0]];
        let sol = solve_dual(k.view(), &[1.0, -1.0], 0.0, 1e-3, false).unwrap();
        assert_eq!(sol.alpha, vec![0.0, 0.0]);
        assert_eq!(sol.bias, 0.0);
        assert_eq!(sol.objective, 0.0);
    }

    #[test]
    fn single_class_is_rejected() {
        let k = array![[1.0, 0.5], [0.5, 1.0]];
        assert!(matches!(
            solve_dual(k.view(), &[1.0, 1.0], 1.0, 1e-3, false),
            Err(SvmError::SingleClass)
        ));
    }

    #[test]
    fn asymmetric_kernel_is_rejected_with_location() {
        let k = array![[1.0, 0.5], [0.2, 1.0]];
        match solve_dual(k.view(), &[1.0, -1.0], 1.0, 1e-3, false) {
            Err(SvmError::AsymmetricKernel { i: 0, j: 1, delta }) => {
                assert!((delta - 0.3).abs() < 1e-12)
            }
            other => panic!("expected asymmetry error, got {other:?}"),
        }
    }

    #[test]
    fn bad_labels_are_rejected() {
        let k = array![[1.0, 0.0], [0.0, 1.0]];
        assert!(matches!(
            solve_dual(k.view(), &[1.0, 0.5], 1.0, 1e-3, false),
            Err(SvmError::InvalidLabel { index: 1, .. })
        ));
    }

    fn gaussian_gram(points: &[[f64; 2]], spread: f64) -> Array2<f64> {
        let n = points.len();
        let mut k = Array2::zeros((n, n));
        for i in 0..n {
            for j in 0..n {
                let d2 = (points[i][0] - points[j][0]).powi(2) + (points[i][1] - points[j][1]).powi(2);
                k[(i, j)] = (-d2 / (2.0 * spread * spread)).exp();
            }
        }
        k
    }

    #[test]
    fn xor_solution_satisfies_kkt_conditions() {
        let pts = [[0.0, 0.0], [1.0, 1.0], [0.0, 1.0], [1.0, 0.0]];
        let y = [1.0, 1.0, -1.0, -1.0];
        let c = 5.0;
        let k = gaussian_gram(&pts, 0.8);
        let sol = solve_dual(k.view(), &y, c, 1e-8, false).unwrap();
        let m = margins(k.view(), &sol, &y);
        for i in 0..4 {
            if sol.alpha[i] < 1e-9 {
                assert!(m[i] >= 1.0 - 1e-6, "zero multiplier with margin {}", m[i]);
            } else if sol.alpha[i] > c - 1e-9 {
                assert!(m[i] <= 1.0 + 1e-6, "bound multiplier with margin {}", m[i]);
            } else {
                assert!((m[i] - 1.0).abs() < 1e-6, "free multiplier with margin {}", m[i]);
            }
        }
        let balance: f64 = sol.alpha.iter().zip(&y).map(|(a, yi)| a * yi).sum();
        assert!(balance.abs() < 1e-12);
    }

    #[test]
    fn dual_objective_trace_is_nondecreasing() {
        let pts = [
            [0.1, 0.2],
            [0.9, 1.1],
            [0.2, 0.85],
            [1.05, 0.1],
            [0.4, 0.45],
            [0.6, 0.55],
        ];
        let y = [1.0, 1.0, -1.0, -1.0, 1.0, -1.0];
        let k = gaussian_gram(&pts, 0.6);
        let sol = solve_dual(k.view(), &y, 2.0, 1e-10, true).unwrap();
        assert!(!sol.trace.is_empty());
        for w in sol.trace.windows(2) {
            assert!(w[1] >= w[0] - 1e-12, "objective fell from {} to {}", w[0], w[1]);
        }
        let last = *sol.trace.last().unwrap();
        assert!((last - sol.objective).abs() < 1e-8, "trace end {last} vs fresh {}", sol.objective);
    }

    #[test]
    fn multipliers_respect_the_box_and_balance() {
        let pts = [[0.0, 0.0], [0.05, 0.02], [1.0, 1.0], [0.9, 1.1], [0.1, 0.9], [0.95, 0.05]];
        let y = [1.0, 1.0, 1.0, -1.0, -1.0, -1.0];
        let k = gaussian_gram(&pts, 0.5);
        let c = 0.3;
        let sol = solve_dual(k.view(), &y, c, 1e-6, false).unwrap();
        for &a in &sol.alpha {
            assert!((-1e-12..=c + 1e-12).contains(&a));
        }
        let balance: f64 = sol.alpha.iter().zip(&y).map(|(a, yi)| a * yi).sum();
        assert!(balance.abs() < 1e-10);
        assert!(sol.gap <= 1e-6);
    }

    #[test]
    fn kernel_cost_is_nonpositive_on_a_gram() {
        let pts = [[0.0, 0.0], [1.0, 0.3], [0.4, 0.8], [0.2, 0.1]];
        let y = [1.0, -1.0, 1.0, -1.0];
        let k = gaussian_gram(&pts, 1.0);
        let sol = solve_dual(k.view(), &y, 1.0, 1e-6, false).unwrap();
        let cost = kernel_cost(&sol.alpha, &y, k.view());
        assert!(cost <= 0.0, "cost {cost}");
    }

    #[test]
    fn support_indices_skip_zero_multipliers() {
        let alpha = [0.0, 0.4, 1e-15, 0.9];
        assert_eq!(support_indices(&alpha, 1.0), vec![1, 3]);
    }

    #[test]
    fn decision_values_reproduce_training_margins() {
        let pts = [[0.0, 0.0], [1.0, 1.0], [0.0, 1.0], [1.0, 0.0]];
        let y = [1.0, 1.0, -1.0, -1.0];
        let k = gaussian_gram(&pts, 0.8);
        let sol = solve_dual(k.view(), &y, 5.0, 1e-8, false).unwrap();
        let f = decision_values(k.view(), &sol.alpha, &y, sol.bias);
        for (fi, yi) in f.iter().zip(&y) {
            assert_eq!(fi.signum(), *yi);
        }
    }
}

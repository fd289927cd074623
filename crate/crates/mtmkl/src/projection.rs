//! Projections and shrinkage used by the consensus solver, plus the
//! pluggable projection backend (exact closed form or Dykstra sweeps).

use ndarray::Array2;

/// Group soft-thresholding: (1 - kappa/||a||)_+ a, with shrink(0) = 0.
pub fn shrink(a: &[f64], kappa: f64) -> Vec<f64> {
    assert!(kappa >= 0.0, "shrink threshold must be nonnegative");
    let norm = a.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm <= kappa || norm == 0.0 {
        return vec![0.0; a.len()];
    }
    let factor = 1.0 - kappa / norm;
    a.iter().map(|v| factor * v).collect()
}

/// Euclidean projection onto the probability simplex {x >= 0, sum x = 1},
/// by the sort-and-threshold rule.
pub fn project_simplex(v: &[f64]) -> Vec<f64> {
    let mut sorted = v.to_vec();
    sorted.sort_by(|a, b| b.partial_cmp(a).expect("non-finite value in projection input"));
    let mut cumsum = 0.0;
    let mut tau = 0.0;
    let mut found = false;
    for (j, &u) in sorted.iter().enumerate() {
        cumsum += u;
        let candidate = (cumsum - 1.0) / (j as f64 + 1.0);
        if u - candidate > 0.0 {
            tau = candidate;
            found = true;
        }
    }
    // Every input admits at least rho = 1 unless all entries tie exactly at
    // the boundary; fall back to uniform mass in that degenerate case.
    if !found {
        return vec![1.0 / v.len() as f64; v.len()];
    }
    v.iter().map(|&x| (x - tau).max(0.0)).collect()
}

/// Exact Euclidean projection onto {x >= 0, ||x||_1 <= 1}: clip negatives,
/// and when the clipped mass still exceeds 1 the inequality binds and the
/// problem reduces to the simplex projection.
pub fn project_box_l1(v: &[f64]) -> Vec<f64> {
    let clipped: Vec<f64> = v.iter().map(|&x| x.max(0.0)).collect();
    if clipped.iter().sum::<f64>() <= 1.0 {
        clipped
    } else {
        project_simplex(v)
    }
}

/// Euclidean projection onto the signed l1 ball {||x||_1 <= 1}.
pub fn project_l1_ball(v: &[f64]) -> Vec<f64> {
    if v.iter().map(|x| x.abs()).sum::<f64>() <= 1.0 {
        return v.to_vec();
    }
    let abs: Vec<f64> = v.iter().map(|x| x.abs()).collect();
    let w = project_simplex(&abs);
    v.iter().zip(w.iter()).map(|(&x, &wi)| wi * x.signum()).collect()
}

/// Auxiliary state for projection backends that carry memory across solver
/// iterations (Dykstra correction terms and the intermediate orthant point).
pub struct ProjectionState {
    pub beta: Array2<f64>,
    pub y: Array2<f64>,
    pub y_prev: Array2<f64>,
}

impl ProjectionState {
    pub fn new(tasks: usize, kernels: usize) -> Self {
        ProjectionState {
            beta: Array2::zeros((tasks, kernels)),
            y: Array2::zeros((tasks, kernels)),
            y_prev: Array2::zeros((tasks, kernels)),
        }
    }
}

/// Backend for the feasible-set projection of the consensus solver's global
/// variable. Implementations are selected by name at run time.
pub trait ZProjection: Send + Sync {
    fn name(&self) -> &'static str;
    /// Project one row. `target` is the unconstrained update; backends with
    /// memory read and write their slice of `state`.
    fn project_row(&self, target: &[f64], task: usize, state: &mut ProjectionState) -> Vec<f64>;
    /// Whether this backend maintains the auxiliary (y, beta) sequences, and
    /// therefore contributes the third residual pair.
    fn uses_auxiliary(&self) -> bool {
        false
    }
}

/// Closed-form projection; stateless.
pub struct ExactProjection;

impl ZProjection for ExactProjection {
    fn name(&self) -> &'static str {
        "exact"
    }
    fn project_row(&self, target: &[f64], _task: usize, _state: &mut ProjectionState) -> Vec<f64> {
        project_box_l1(target)
    }
}

/// One Dykstra alternation per solver iteration between the nonnegative
/// orthant and the l1 ball, with the correction term persisted across
/// iterations: y = (target - beta)_+, z = P_l1(y + beta), beta += y - z.
pub struct DykstraProjection;

impl ZProjection for DykstraProjection {
    fn name(&self) -> &'static str {
        "dykstra"
    }
    fn project_row(&self, target: &[f64], task: usize, state: &mut ProjectionState) -> Vec<f64> {
        let m = target.len();
        let y: Vec<f64> = (0..m).map(|j| (target[j] - state.beta[(task, j)]).max(0.0)).collect();
        let shifted: Vec<f64> = (0..m).map(|j| y[j] + state.beta[(task, j)]).collect();
        let z = project_l1_ball(&shifted);
        for j in 0..m {
            state.beta[(task, j)] += y[j] - z[j];
            state.y[(task, j)] = y[j];
        }
        z
    }
    fn uses_auxiliary(&self) -> bool {
        true
    }
}

/// Constructor signature a projection backend registers under its name.
pub type ProjectionCtor = fn() -> Box<dyn ZProjection>;

/// Registry of projection backends, selected by name at run time.
pub struct ProjectionRegistry {
    entries: Vec<(&'static str, ProjectionCtor)>,
}

impl ProjectionRegistry {
    pub fn standard() -> Self {
        ProjectionRegistry {
            entries: vec![
                ("exact", || Box::new(ExactProjection) as Box<dyn ZProjection>),
                ("dykstra", || Box::new(DykstraProjection) as Box<dyn ZProjection>),
            ],
        }
    }

    pub fn register(&mut self, name: &'static str, ctor: ProjectionCtor) {
        if let Some(slot) = self.entries.iter_mut().find(|(n, _)| *n == name) {
            slot.1 = ctor;
        } else {
            self.entries.push((name, ctor));
        }
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.entries.iter().map(|(n, _)| *n).collect()
    }

    pub fn build(&self, name: &str) -> Option<Box<dyn ZProjection>> {
        self.entries.iter().find(|(n, _)| *n == name).map(|(_, ctor)| ctor())
    }
}

impl Default for ProjectionRegistry {
    fn default() -> Self {
        ProjectionRegistry::standard()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shrink_hand_values() {
        let s = shrink(&[3.0, 4.0], 1.0);
        assert!((s[0] - 2.4).abs() < 1e-12 && (s[1] - 3.2).abs() < 1e-12, "got {s:?}");
        assert_eq!(shrink(&[3.0, 4.0], 5.0), vec![0.0, 0.0]);
        assert_eq!(shrink(&[3.0, 4.0], 6.0), vec![0.0, 0.0]);
        assert_eq!(shrink(&[3.0, 4.0], 0.0), vec![3.0, 4.0]);
        assert_eq!(shrink(&[0.0, 0.0], 2.0), vec![0.0, 0.0]);
    }

    #[test]
    fn box_l1_hand_values() {
        assert_eq!(project_box_l1(&[0.2, 0.3]), vec![0.2, 0.3]);
        assert_eq!(project_box_l1(&[-1.0, -1.0]), vec![0.0, 0.0]);
        let p = project_box_l1(&[1.0, 1.0]);
        assert!((p[0] - 0.5).abs() < 1e-15 && (p[1] - 0.5).abs() < 1e-15);
        let q = project_box_l1(&[2.0, -5.0]);
        assert!((q[0] - 1.0).abs() < 1e-15 && q[1] == 0.0);
    }

    #[test]
    fn simplex_projection_sums_to_one() {
        let p = project_simplex(&[0.9, 0.8, -0.3]);
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(p.iter().all(|&x| x >= 0.0));
    }

    #[test]
    fn l1_ball_keeps_interior_and_projects_signs() {
        assert_eq!(project_l1_ball(&[0.3, -0.4]), vec![0.3, -0.4]);
        let p = project_l1_ball(&[2.0, -2.0]);
        assert!((p[0] - 0.5).abs() < 1e-12);
        assert!((p[1] + 0.5).abs() < 1e-12);
    }

    #[test]
    fn registry_knows_both_backends() {
        let reg = ProjectionRegistry::standard();
        assert_eq!(reg.names(), vec!["exact", "dykstra"]);
        assert!(reg.build("exact").is_some());
        assert!(reg.build("dykstra").is_some());
        assert!(reg.build("apron").is_none());
    }

    #[test]
    fn dykstra_sweeps_approach_exact_projection() {
        // Repeated sweeps on a fixed target converge to the exact projection.
        let target = vec![1.4, -0.3, 0.6];
        let exact = project_box_l1(&target);
        let backend = DykstraProjection;
        let mut state = ProjectionState::new(1, 3);
        let mut z = vec![0.0; 3];
        for _ in 0..200 {
            z = backend.project_row(&target, 0, &mut state);
        }
        for j in 0..3 {
            assert!((z[j] - exact[j]).abs() < 1e-10, "component {j}: {z:?} vs {exact:?}");
        }
    }
}

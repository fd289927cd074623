//! Closed-form capacity diagnostic for the shared-weight learner: the value
//! sqrt(sqrt(3) * gamma * R * M / (n * T)) shrinks as samples per task or the
//! task count grow and scales with the kernel menu size, the trace radius of
//! the menu, and the weight-scale parameter. Purely informational; nothing in
//! training consumes it.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum BoundError {
    #[error("{name} must be positive, got {value}")]
    NonPositive { name: &'static str, value: f64 },
}

/// Evaluate the capacity diagnostic. `gamma` is the weight-scale parameter,
/// `radius` the kernel trace radius, `kernels` the menu size, `samples` the
/// per-task training count, and `tasks` the task count.
pub fn bound_value(
    gamma: f64,
    radius: f64,
    kernels: usize,
    samples: usize,
    tasks: usize,
) -> Result<f64, BoundError> {
    if !(gamma > 0.0) || !gamma.is_finite() {
        return Err(BoundError::NonPositive { name: "gamma", value: gamma });
    }
    if !(radius > 0.0) || !radius.is_finite() {
        return Err(BoundError::NonPositive { name: "radius", value: radius });
    }
    if kernels == 0 {
        return Err(BoundError::NonPositive { name: "kernels", value: 0.0 });
    }
    if samples == 0 {
        return Err(BoundError::NonPositive { name: "samples", value: 0.0 });
    }
    if tasks == 0 {
        return Err(BoundError::NonPositive { name: "tasks", value: 0.0 });
    }
    let numerator = 3.0_f64.sqrt() * gamma * radius * kernels as f64;
    Ok((numerator / (samples as f64 * tasks as f64)).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_inputs_give_the_fourth_root_of_three() {
        let v = bound_value(1.0, 1.0, 1, 1, 1).unwrap();
        assert!((v - 3.0_f64.powf(0.25)).abs() < 1e-12, "got {v}");
    }

    #[test]
    fn quadrupling_tasks_halves_the_value() {
        let base = bound_value(2.0, 1.5, 3, 10, 2).unwrap();
        let quad = bound_value(2.0, 1.5, 3, 10, 8).unwrap();
        assert!((quad - 0.5 * base).abs() < 1e-12);
    }

    #[test]
    fn worked_example_matches_the_closed_form() {
        let v = bound_value(2.0, 1.0, 10, 100, 5).unwrap();
        let expected = (3.0_f64.sqrt() * 20.0 / 500.0).sqrt();
        assert!((v - expected).abs() < 1e-12);
        assert!((v - 0.26321).abs() < 1e-5);
    }

    #[test]
    fn value_decreases_in_samples_and_tasks() {
        let mut prev = f64::INFINITY;
        for n in [10, 20, 40, 80] {
            let v = bound_value(1.0, 2.0, 4, n, 3).unwrap();
            assert!(v < prev);
            prev = v;
        }
        let mut prev = f64::INFINITY;
        for t in [1, 2, 4, 8] {
            let v = bound_value(1.0, 2.0, 4, 30, t).unwrap();
            assert!(v < prev);
            prev = v;
        }
    }

    #[test]
    fn nonpositive_inputs_are_rejected_by_name() {
        assert!(matches!(
            bound_value(0.0, 1.0, 1, 1, 1),
            Err(BoundError::NonPositive { name: "gamma", .. })
        ));
        assert!(matches!(
            bound_value(1.0, -2.0, 1, 1, 1),
            Err(BoundError::NonPositive { name: "radius", .. })
        ));
        assert!(bound_value(1.0, 1.0, 0, 1, 1).is_err());
        assert!(bound_value(1.0, 1.0, 1, 0, 1).is_err());
        assert!(bound_value(1.0, 1.0, 1, 1, 0).is_err());
        assert!(bound_value(f64::NAN, 1.0, 1, 1, 1).is_err());
    }
}

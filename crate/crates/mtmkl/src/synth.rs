//! Synthetic two-group benchmark: six XOR-quadrant tasks over [-s, s]^2
//! whose label is the sign of x0*x1, with label-flip noise. Group A
//! (tasks 0-1) lives at scale 1 and is separable under a narrow Gaussian
//! bandwidth; group B (tasks 2-5) lives at scale 50 and needs a wide one.
//! Task 5 is under-resourced (few, noisy samples), so weight fusion has
//! something to repair. Splits are generated directly rather than sampled
//! from a pool, because train/validation/test use different noise rates.

use crate::data::{SplitIndices, TaskDataset};
use crate::kernel::KernelDef;
use ndarray::Array2;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub const TASK_COUNT: usize = 6;
pub const SCALES: [f64; TASK_COUNT] = [1.0, 1.0, 50.0, 50.0, 50.0, 50.0];
pub const TRAIN_SIZES: [usize; TASK_COUNT] = [60, 60, 60, 60, 60, 14];
pub const TRAIN_NOISE: [f64; TASK_COUNT] = [0.05, 0.05, 0.05, 0.05, 0.05, 0.20];
pub const VALIDATION_SIZE: usize = 80;
pub const VALIDATION_NOISE: f64 = 0.05;
pub const TEST_SIZE: usize = 150;

/// Group index of each task: tasks 0-1 form group 0, tasks 2-5 group 1.
pub fn group_of(task: usize) -> usize {
    assert!(task < TASK_COUNT);
    usize::from(task >= 2)
}

/// Kernel menu matched to the two planted scales.
pub fn two_group_menu() -> Vec<KernelDef> {
    vec![KernelDef::gaussian(0.5), KernelDef::gaussian(32.0)]
}

/// Draw one portion of a task, redrawing until both classes appear.
fn quadrant_portion(rng: &mut ChaCha8Rng, n: usize, scale: f64, noise: f64) -> (Array2<f64>, Vec<f64>) {
    assert!(n >= 2, "a portion needs at least two samples");
    loop {
        let mut x = Array2::zeros((n, 2));
        let mut y = Vec::with_capacity(n);
        for i in 0..n {
            let a = rng.gen::<f64>() * 2.0 * scale - scale;
            let b = rng.gen::<f64>() * 2.0 * scale - scale;
            x[(i, 0)] = a;
            x[(i, 1)] = b;
            let mut label = if a * b > 0.0 { 1.0 } else { -1.0 };
            if noise > 0.0 && rng.gen::<f64>() < noise {
                label = -label;
            }
            y.push(label);
        }
        if y.contains(&1.0) && y.contains(&-1.0) {
            return (x, y);
        }
    }
}

/// Generate the six benchmark tasks for one seed, with splits attached.
pub fn two_group_tasks(seed: u64) -> Vec<TaskDataset> {
    (0..TASK_COUNT)
        .map(|t| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_mul(1000).wrapping_add(t as u64));
            let (x_tr, y_tr) = quadrant_portion(&mut rng, TRAIN_SIZES[t], SCALES[t], TRAIN_NOISE[t]);
            let (x_va, y_va) = quadrant_portion(&mut rng, VALIDATION_SIZE, SCALES[t], VALIDATION_NOISE);
            let (x_te, y_te) = quadrant_portion(&mut rng, TEST_SIZE, SCALES[t], 0.0);
            let n = y_tr.len() + y_va.len() + y_te.len();
            let mut x = Array2::zeros((n, 2));
            let mut y = Vec::with_capacity(n);
            let mut row = 0;
            for (xs, ys) in [(&x_tr, &y_tr), (&x_va, &y_va), (&x_te, &y_te)] {
                for i in 0..ys.len() {
                    x[(row, 0)] = xs[(i, 0)];
                    x[(row, 1)] = xs[(i, 1)];
                    y.push(ys[i]);
                    row += 1;
                }
            }
            let split = SplitIndices {
                train: (0..y_tr.len()).collect(),
                validation: (y_tr.len()..y_tr.len() + y_va.len()).collect(),
                test: (y_tr.len() + y_va.len()..n).collect(),
            };
            TaskDataset::with_split(format!("task{t}"), x, y, split).unwrap()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generator_is_deterministic() {
        let a = two_group_tasks(7);
        let b = two_group_tasks(7);
        for (ta, tb) in a.iter().zip(&b) {
            assert_eq!(ta.features, tb.features);
            assert_eq!(ta.labels, tb.labels);
            assert_eq!(ta.split, tb.split);
        }
        let c = two_group_tasks(8);
        assert_ne!(a[0].features, c[0].features);
    }

    #[test]
    fn portions_have_the_documented_sizes_and_noise_free_test_labels() {
        let tasks = two_group_tasks(3);
        assert_eq!(tasks.len(), TASK_COUNT);
        for (t, task) in tasks.iter().enumerate() {
            assert_eq!(task.split.train.len(), TRAIN_SIZES[t]);
            assert_eq!(task.split.validation.len(), VALIDATION_SIZE);
            assert_eq!(task.split.test.len(), TEST_SIZE);
            let (x, y) = task.test_data();
            for i in 0..y.len() {
                let clean = if x[(i, 0)] * x[(i, 1)] > 0.0 { 1.0 } else { -1.0 };
                assert_eq!(y[i], clean, "test labels must be noise-free");
            }
            let scale = SCALES[t];
            for v in task.features.iter() {
                assert!(v.abs() <= scale, "sample outside the task's box");
            }
        }
    }

    #[test]
    fn groups_partition_the_tasks() {
        assert_eq!(group_of(0), 0);
        assert_eq!(group_of(1), 0);
        for t in 2..TASK_COUNT {
            assert_eq!(group_of(t), 1);
        }
    }
}

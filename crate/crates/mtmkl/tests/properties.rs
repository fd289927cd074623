//! Randomized structural properties: linearity and symmetry of the kernel
//! bank, contraction properties of the proximal pieces, split hygiene, and
//! parser robustness under line mutations.

use mtmkl::data::{load_sparse_file, stratified_split, write_sparse_file, DataError, TaskDataset};
use mtmkl::kernel::{build_bank, KernelDef, KernelRegistry};
use mtmkl::projection::{project_box_l1, shrink};
use mtmkl::svm::solve_dual;
use ndarray::Array2;
use proptest::prelude::*;

fn small_matrix(rows: usize, cols: usize) -> impl Strategy<Value = Array2<f64>> {
    proptest::collection::vec(-3.0f64..3.0, rows * cols)
        .prop_map(move |v| Array2::from_shape_vec((rows, cols), v).unwrap())
}

fn weight_vector(len: usize) -> impl Strategy<Value = Vec<f64>> {
    proptest::collection::vec(0.0f64..1.0, len).prop_map(|mut v| {
        let sum: f64 = v.iter().sum();
        if sum > 1.0 {
            for x in &mut v {
                *x /= sum;
            }
        }
        v
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn combined_gram_is_linear_in_the_weights(
        x in small_matrix(7, 2),
        wa in weight_vector(3),
        wb in weight_vector(3),
        s in 0.0f64..1.0,
    ) {
        let menu = vec![KernelDef::gaussian(0.7), KernelDef::gaussian(2.0), KernelDef::linear()];
        let bank = build_bank(&[x], &menu, &KernelRegistry::standard(), true).unwrap();
        let mix: Vec<f64> = wa.iter().zip(&wb).map(|(a, b)| s * a + (1.0 - s) * b).collect();
        let left = bank.combine(0, &mix).unwrap();
        let ka = bank.combine(0, &wa).unwrap();
        let kb = bank.combine(0, &wb).unwrap();
        for i in 0..7 {
            for j in 0..7 {
                let right = s * ka[(i, j)] + (1.0 - s) * kb[(i, j)];
                prop_assert!((left[(i, j)] - right).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn gram_construction_commutes_with_sample_permutation(
        x in small_matrix(6, 2),
    ) {
        let menu = vec![KernelDef::gaussian(1.0)];
        let registry = KernelRegistry::standard();
        let bank = build_bank(std::slice::from_ref(&x), &menu, &registry, true).unwrap();
        let perm = [5usize, 3, 0, 1, 4, 2];
        let mut xp = Array2::zeros((6, 2));
        for (new, &old) in perm.iter().enumerate() {
            for j in 0..2 {
                xp[(new, j)] = x[(old, j)];
            }
        }
        let bank_p = build_bank(&[xp], &menu, &registry, true).unwrap();
        let g = bank.gram(0, 0);
        let gp = bank_p.gram(0, 0);
        for a in 0..6 {
            for b in 0..6 {
                prop_assert!((gp[(a, b)] - g[(perm[a], perm[b])]).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn shrink_is_nonexpansive(
        a in proptest::collection::vec(-5.0f64..5.0, 4),
        b in proptest::collection::vec(-5.0f64..5.0, 4),
        kappa in 0.0f64..3.0,
    ) {
        let sa = shrink(&a, kappa);
        let sb = shrink(&b, kappa);
        let d_in: f64 = a.iter().zip(&b).map(|(u, v)| (u - v) * (u - v)).sum::<f64>().sqrt();
        let d_out: f64 = sa.iter().zip(&sb).map(|(u, v)| (u - v) * (u - v)).sum::<f64>().sqrt();
        prop_assert!(d_out <= d_in + 1e-12);
    }

    #[test]
    fn projection_is_idempotent_feasible_and_nonexpansive(
        a in proptest::collection::vec(-4.0f64..4.0, 5),
        b in proptest::collection::vec(-4.0f64..4.0, 5),
    ) {
        let pa = project_box_l1(&a);
        let pb = project_box_l1(&b);
        prop_assert!(pa.iter().all(|&v| v >= 0.0));
        prop_assert!(pa.iter().sum::<f64>() <= 1.0 + 1e-12);
        let twice = project_box_l1(&pa);
        for (u, v) in pa.iter().zip(&twice) {
            prop_assert!((u - v).abs() < 1e-12);
        }
        let d_in: f64 = a.iter().zip(&b).map(|(u, v)| (u - v) * (u - v)).sum::<f64>().sqrt();
        let d_out: f64 = pa.iter().zip(&pb).map(|(u, v)| (u - v) * (u - v)).sum::<f64>().sqrt();
        prop_assert!(d_out <= d_in + 1e-12);
    }

    #[test]
    fn splits_partition_without_leakage(
        n_pos in 4usize..30,
        n_neg in 4usize..30,
        frac in 0.2f64..0.8,
        seed in 0u64..1000,
    ) {
        let n = n_pos + n_neg;
        let x = Array2::zeros((n, 2));
        let y: Vec<f64> = (0..n).map(|i| if i < n_pos { 1.0 } else { -1.0 }).collect();
        let ds = TaskDataset::new("p", x, y).unwrap();
        if let Ok(split) = stratified_split(&ds, frac, seed, false) {
            let s = &split.split;
            let mut all: Vec<usize> = s.train.iter().chain(&s.validation).chain(&s.test).copied().collect();
            all.sort_unstable();
            prop_assert_eq!(all, (0..n).collect::<Vec<_>>());
            prop_assert!(s.train.iter().any(|&i| split.labels[i] == 1.0));
            prop_assert!(s.train.iter().any(|&i| split.labels[i] == -1.0));
            prop_assert!((s.validation.len() as i64 - s.test.len() as i64) <= 1);
        }
    }

    #[test]
    fn sparse_round_trip_is_lossless(
        rows in proptest::collection::vec(
            proptest::collection::vec(proptest::num::f64::NORMAL.prop_map(|v| v % 1e6), 4),
            1..8,
        ),
    ) {
        let n = rows.len();
        let mut x = Array2::zeros((n, 4));
        for (i, row) in rows.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                x[(i, j)] = v;
            }
        }
        let y: Vec<f64> = (0..n).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("rt.txt");
        write_sparse_file(&path, x.view(), &y).unwrap();
        let (x2, y2) = load_sparse_file(&path, 4).unwrap();
        prop_assert_eq!(x, x2);
        prop_assert_eq!(y, y2);
    }

    #[test]
    fn mutated_lines_are_rejected_with_the_right_line_number(
        idx in 1usize..5,
        val in -10.0f64..10.0,
        mutation in 0usize..5,
    ) {
        let good = format!("+1 {idx}:{val}");
        let bad = match mutation {
            0 => good.replace(':', ";"),
            1 => format!("+1 0:{val}"),
            2 => format!("+1 {idx}:{val} {idx}:{val}"),
            3 => format!("+1 9:{val}"),
            4 => format!("+1 {idx}:not_a_number"),
            _ => unreachable!(),
        };
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("fuzz.txt");
        std::fs::write(&path, format!("+1 1:1.0\n{bad}\n")).unwrap();
        match load_sparse_file(&path, 5) {
            Err(DataError::Parse { line, .. }) => prop_assert_eq!(line, 2),
            other => prop_assert!(false, "expected a located parse error, got {:?}", other),
        }
    }

    #[test]
    fn dual_objective_is_monotone_in_the_box_bound(
        seed in 0u64..200,
    ) {
        use rand::{Rng as _, SeedableRng as _};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let n = 8;
        let mut x = Array2::zeros((n, 2));
        let mut y = Vec::with_capacity(n);
        for i in 0..n {
            let label = if i % 2 == 0 { 1.0 } else { -1.0 };
            x[(i, 0)] = label * 0.4 + rng.gen::<f64>();
            x[(i, 1)] = rng.gen::<f64>();
            y.push(label);
        }
        let bank = build_bank(&[x], &[KernelDef::gaussian(1.0)], &KernelRegistry::standard(), true).unwrap();
        let k = bank.gram(0, 0);
        let mut last = -f64::INFINITY;
        for c in [0.1, 0.5, 1.0, 5.0] {
            let sol = solve_dual(k.view(), &y, c, 1e-6, false).unwrap();
            prop_assert!(sol.objective >= last - 1e-8, "objective fell at C={}", c);
            last = sol.objective;
        }
    }
}

//! Multi-task multiple kernel learning with fused per-task kernel weights.
//!
//! Each task t learns an SVM on a convex combination of a shared kernel
//! menu, k_t = sum_m theta[t][m] k_m, and a group penalty
//! lambda * sum_{t<s} ||theta_t - theta_s||_2 pulls related tasks toward a
//! common weighting. Training alternates per-task dual solves with a
//! consensus solve for the weight matrix:
//!
//! - [`kernel`]: kernel menu, Gram precomputation, normalization, banks.
//! - [`svm`]: two-variable ascent on the box-constrained SVM dual.
//! - [`projection`]: simplex/box projections and strategy backends.
//! - [`admm`]: the fused weight subproblem solver.
//! - [`trainer`]: the outer alternation with monotone damping.
//! - [`bound`]: closed-form capacity diagnostic.
//! - [`data`]: sparse format, manifests, splits, task construction.
//! - [`model`]: versioned saved-model format and standalone prediction.
//! - [`synth`]: planted two-group benchmark generator.

// !(x > 0.0) rejects NaN where x <= 0.0 would accept it; keep the negated
// forms. Indexed loops stay because they mirror the t/s/m subscripts of the
// math they implement.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![allow(clippy::needless_range_loop)]

pub mod admm;
pub mod bound;
pub mod data;
pub mod kernel;
pub mod model;
pub mod projection;
pub mod svm;
pub mod synth;
pub mod trainer;

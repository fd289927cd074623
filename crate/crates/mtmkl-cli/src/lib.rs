//! Library surface of the `mtmkl` binary: configuration loading, report
//! assembly, and the command implementations. Kept as a library so
//! integration tests can drive every command in-process.

// !(x > 0.0) rejects NaN where x <= 0.0 would accept it. Indexed loops
// mirror the t/s matrix subscripts. The grid/report plumbing passes wide
// tuples between private helpers; naming each would add indirection only.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![allow(clippy::needless_range_loop)]
#![allow(clippy::type_complexity)]

pub mod commands;
pub mod config;
pub mod report;

//! Scenario-driven runner behind the `ebg` binary.

// `!(x > y)` comparisons are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod checks;
pub mod commands;
pub mod output;
pub mod scenario;

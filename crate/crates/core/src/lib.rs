//! Sampling-based optimal motion planning for hybrid dynamical systems.
//!
//! The search keeps a sparse tree: each witness point owns one active
//! representative vertex, and dominated vertices are deactivated or pruned.
//! [`planner::hysst_plan`] is the entry point; [`systems`] provides two
//! ready-made problems and [`bench`] the file formats and benchmark harness.

#![allow(clippy::neg_cmp_op_on_partial_ord)] // negated comparisons reject NaN

pub mod bench;
pub mod hybrid;
pub mod planner;
pub mod simulation;
pub mod systems;

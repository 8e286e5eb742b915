//! Hybrid time, sampled hybrid arcs, solution pairs, and hybrid system data.

mod arc;
mod problem;
mod system;
mod time;

pub use arc::{euclidean, is_close, HybridArc, Segment, SolutionPair, ENDPOINT_TOL};
pub use problem::{FinalSet, InitialSet, MotionPlanProblem, UnsafeSet};
pub use system::{
    inflate, validate_solution, HybridSystemDef, PairFn, Region, Sampler, SlackFn, StateFn,
    StateRegion, Validation, Violation,
};
pub use time::{HybridTime, HybridTimeDomain};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum HybridError {
    #[error("invalid hybrid time domain: {0}")]
    InvalidDomain(String),
    #[error("invalid hybrid arc: {0}")]
    InvalidArc(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("state and input arcs have different domains")]
    DomainMismatch,
    #[error("arcs do not connect: endpoint gap {gap:e}")]
    EndpointMismatch { gap: f64 },
    #[error("hybrid time ({t}, {j}) is not in the domain")]
    OutsideDomain { t: f64, j: usize },
    #[error("truncation bounds must satisfy from <= to componentwise")]
    UnorderedTruncation,
    #[error("closeness needs tau >= 0 and eps > 0, got tau = {tau}, eps = {eps}")]
    InvalidCloseness { tau: f64, eps: f64 },
    #[error("inflation radius must be positive, got {0}")]
    NonPositiveInflation(f64),
}

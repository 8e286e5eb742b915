use std::fmt;

use crate::hybrid::HybridArc;

/// A cost on state arcs. Implementations used by the planner must be
/// additive under concatenation and therefore monotone.
pub trait CostFunctional: fmt::Debug + Send + Sync {
    fn evaluate(&self, arc: &HybridArc) -> f64;

    /// True when `c(φ0|φ1) = c(φ0) + c(φ1)` holds, which the planner relies on
    /// to price a path edge by edge.
    fn is_incremental(&self) -> bool {
        true
    }
}

/// `T + J` at the maximum of the arc's domain.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct HybridTimeCost;

impl CostFunctional for HybridTimeCost {
    fn evaluate(&self, arc: &HybridArc) -> f64 {
        let end = arc.domain().max();
        end.t + end.j as f64
    }
}

/// Reads elapsed time and jump count from two appended clock states
/// `(τ, k)` at `offset` and `offset + 1`.
///
/// The cost of an arc is the change of `τ + k` along it, so a plan's total is
/// `τ + k` at its end when the clocks start at zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AuxiliaryClockCost {
    pub offset: usize,
}

impl CostFunctional for AuxiliaryClockCost {
    fn evaluate(&self, arc: &HybridArc) -> f64 {
        let (a, b) = (arc.initial(), arc.terminal());
        let i = self.offset;
        (b[i] - a[i]) + (b[i + 1] - a[i + 1])
    }
}

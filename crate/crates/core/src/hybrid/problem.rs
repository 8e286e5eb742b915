use std::fmt;
use std::sync::Arc;

use rand::RngCore;

use super::system::{HybridSystemDef, PairFn, Sampler, StateFn};
use crate::planner::CostFunctional;

/// `X_0`: membership test plus a sampler used to seed the tree.
#[derive(Clone)]
pub struct InitialSet {
    pub contains: StateFn<bool>,
    pub sampler: Sampler,
}

impl InitialSet {
    /// `X_0 = {x0}`.
    pub fn singleton(x0: Vec<f64>) -> Self {
        let point = x0.clone();
        Self {
            contains: Arc::new(move |x| x == point.as_slice()),
            sampler: Arc::new(move |_| x0.clone()),
        }
    }

    pub fn sample(&self, rng: &mut dyn RngCore) -> Vec<f64> {
        (self.sampler)(rng)
    }
}

/// `X_f`, described by the distance from a state to it.
#[derive(Clone)]
pub struct FinalSet {
    pub distance: StateFn<f64>,
}

impl FinalSet {
    pub fn new(distance: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Self {
        Self {
            distance: Arc::new(distance),
        }
    }

    pub fn distance(&self, x: &[f64]) -> f64 {
        (self.distance)(x)
    }
}

/// `X_u ⊂ Rⁿ × Rᵐ`.
#[derive(Clone)]
pub struct UnsafeSet {
    pub contains: PairFn<bool>,
}

impl UnsafeSet {
    pub fn new(contains: impl Fn(&[f64], &[f64]) -> bool + Send + Sync + 'static) -> Self {
        Self {
            contains: Arc::new(contains),
        }
    }

    pub fn empty() -> Self {
        Self::new(|_, _| false)
    }

    pub fn contains(&self, x: &[f64], u: &[f64]) -> bool {
        (self.contains)(x, u)
    }
}

/// An optimal motion planning problem `(X_0, X_f, X_u, (C, f, D, g), c)`.
#[derive(Clone)]
pub struct MotionPlanProblem {
    pub system: HybridSystemDef,
    pub initial_set: InitialSet,
    pub final_set: FinalSet,
    pub unsafe_set: UnsafeSet,
    pub cost: Arc<dyn CostFunctional>,
}

impl fmt::Debug for MotionPlanProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MotionPlanProblem")
            .field("system", &self.system)
            .finish_non_exhaustive()
    }
}

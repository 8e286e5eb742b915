use std::fmt;
use std::sync::Arc;

use rand::RngCore;

use super::arc::{euclidean, SolutionPair};
use super::HybridError;

/// A function of a state/input pair.
pub type PairFn<T> = Arc<dyn Fn(&[f64], &[f64]) -> T + Send + Sync>;
/// A function of a state.
pub type StateFn<T> = Arc<dyn Fn(&[f64]) -> T + Send + Sync>;
/// Draws one point from a set.
pub type Sampler = Arc<dyn Fn(&mut dyn RngCore) -> Vec<f64> + Send + Sync>;
/// Maps an inflation radius to the extra allowance on a region's excess.
pub type SlackFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

fn identity_slack() -> SlackFn {
    Arc::new(|delta| delta)
}

/// A subset of `Rⁿ × Rᵐ` described as `{(x, u) : h(x, u) ≤ level}`.
///
/// `h` is distance-like: the δ-inflation of the set is
/// `{h(x, u) ≤ level + slack(δ)}`. When `h` is the exact distance to the set
/// the slack is the identity.
#[derive(Clone)]
pub struct Region {
    excess: PairFn<f64>,
    slack: SlackFn,
    level: f64,
}

impl Region {
    pub fn new(excess: impl Fn(&[f64], &[f64]) -> f64 + Send + Sync + 'static) -> Self {
        Self {
            excess: Arc::new(excess),
            slack: identity_slack(),
            level: 0.0,
        }
    }

    /// Accept points with `h ≤ level`; used to give equality constraints a
    /// numerical contact tolerance.
    pub fn with_level(mut self, level: f64) -> Self {
        self.level = level;
        self
    }

    pub fn with_slack(mut self, slack: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        self.slack = Arc::new(slack);
        self
    }

    pub fn level(&self) -> f64 {
        self.level
    }

    pub fn contains(&self, x: &[f64], u: &[f64]) -> bool {
        self.margin(x, u) <= 0.0
    }

    /// `h(x, u) − level`; nonpositive inside the set, zero on its boundary.
    pub fn margin(&self, x: &[f64], u: &[f64]) -> f64 {
        (self.excess)(x, u) - self.level
    }

    pub fn inflate(&self, delta: f64) -> Region {
        Region {
            excess: self.excess.clone(),
            slack: self.slack.clone(),
            level: self.level + (self.slack)(delta),
        }
    }

    /// The same region for a larger state whose first `n` coordinates are
    /// the original state.
    pub fn lift(&self, n: usize) -> Region {
        let excess = self.excess.clone();
        Region {
            excess: Arc::new(move |x, u| excess(&x[..n], u)),
            slack: self.slack.clone(),
            level: self.level,
        }
    }
}

impl fmt::Debug for Region {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Region")
            .field("level", &self.level)
            .finish()
    }
}

/// A subset of `Rⁿ` with a uniform sampler over (a subset of) it.
#[derive(Clone)]
pub struct StateRegion {
    excess: StateFn<f64>,
    slack: SlackFn,
    level: f64,
    sampler: Sampler,
}

impl StateRegion {
    pub fn new(
        excess: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
        sampler: impl Fn(&mut dyn RngCore) -> Vec<f64> + Send + Sync + 'static,
    ) -> Self {
        Self {
            excess: Arc::new(excess),
            slack: identity_slack(),
            level: 0.0,
            sampler: Arc::new(sampler),
        }
    }

    pub fn with_level(mut self, level: f64) -> Self {
        self.level = level;
        self
    }

    pub fn with_slack(mut self, slack: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        self.slack = Arc::new(slack);
        self
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        (self.excess)(x) <= self.level
    }

    pub fn sample(&self, rng: &mut dyn RngCore) -> Vec<f64> {
        (self.sampler)(rng)
    }

    pub fn inflate(&self, delta: f64) -> StateRegion {
        StateRegion {
            excess: self.excess.clone(),
            slack: self.slack.clone(),
            level: self.level + (self.slack)(delta),
            sampler: self.sampler.clone(),
        }
    }

    /// Lifts the region to a larger state whose first `n` coordinates are the
    /// original state; `extra` samples the appended coordinates.
    pub fn lift(
        &self,
        n: usize,
        extra: impl Fn(&mut dyn RngCore) -> Vec<f64> + Send + Sync + 'static,
    ) -> StateRegion {
        let excess = self.excess.clone();
        let sampler = self.sampler.clone();
        StateRegion {
            excess: Arc::new(move |x| excess(&x[..n])),
            slack: self.slack.clone(),
            level: self.level,
            sampler: Arc::new(move |rng| {
                let mut x = sampler(rng);
                x.extend(extra(rng));
                x
            }),
        }
    }
}

impl fmt::Debug for StateRegion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("StateRegion")
            .field("level", &self.level)
            .finish()
    }
}

/// Data `(C, f, D, g)` of a hybrid system with inputs, plus the state
/// projections `C′` and `D′` used for sampling.
#[derive(Clone)]
pub struct HybridSystemDef {
    pub name: String,
    pub state_dim: usize,
    pub input_dim: usize,
    pub flow_set: Region,
    pub flow_map: PairFn<Vec<f64>>,
    pub jump_set: Region,
    pub jump_map: PairFn<Vec<f64>>,
    /// Closure of `C′ = Π_C(C)`.
    pub flow_proj: StateRegion,
    /// `D′ = Π_D(D)`.
    pub jump_proj: StateRegion,
    /// Per-coordinate sampling bounds.
    pub bounding_box: Vec<(f64, f64)>,
}

impl HybridSystemDef {
    pub fn flow(&self, x: &[f64], u: &[f64]) -> Vec<f64> {
        (self.flow_map)(x, u)
    }

    pub fn jump(&self, x: &[f64], u: &[f64]) -> Vec<f64> {
        (self.jump_map)(x, u)
    }
}

impl fmt::Debug for HybridSystemDef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("HybridSystemDef")
            .field("name", &self.name)
            .field("state_dim", &self.state_dim)
            .field("input_dim", &self.input_dim)
            .field("flow_set", &self.flow_set)
            .field("jump_set", &self.jump_set)
            .finish_non_exhaustive()
    }
}

/// The δf-inflation: flow and jump sets (and their projections) are enlarged by
/// `delta_f`; the maps are unchanged.
pub fn inflate(system: &HybridSystemDef, delta_f: f64) -> Result<HybridSystemDef, HybridError> {
    if !(delta_f > 0.0) || !delta_f.is_finite() {
        return Err(HybridError::NonPositiveInflation(delta_f));
    }
    Ok(HybridSystemDef {
        name: format!("{}+inflated({delta_f})", system.name),
        flow_set: system.flow_set.inflate(delta_f),
        jump_set: system.jump_set.inflate(delta_f),
        flow_proj: system.flow_proj.inflate(delta_f),
        jump_proj: system.jump_proj.inflate(delta_f),
        ..system.clone()
    })
}

/// A condition of the solution-pair definition that a sampled pair violates.
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    /// State or input dimension differs from the system's.
    Dimension { state: usize, input: usize },
    /// An interior flow sample lies outside `C`.
    FlowSet { t: f64, j: usize },
    /// A difference quotient disagrees with the flow map.
    FlowMap { t: f64, j: usize, mismatch: f64 },
    /// A pre-jump sample lies outside `D`.
    JumpSet { t: f64, j: usize },
    /// A post-jump sample differs from `g` of the pre-jump sample.
    JumpMap { t: f64, j: usize, mismatch: f64 },
    /// The initial point is in neither the closure of `C` nor `D`.
    Initial,
}

/// Outcome of [`validate_solution`].
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Validation {
    pub violations: Vec<Violation>,
}

impl Validation {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn has_flow_map_violation(&self) -> bool {
        self.violations
            .iter()
            .any(|v| matches!(v, Violation::FlowMap { .. }))
    }
}

/// Checks a sampled pair against the solution-pair conditions.
///
/// Flow is checked by comparing the difference quotient of consecutive samples
/// with the trapezoidal average of `f`, holding the left sample's input over
/// the step. Mismatches below the floating-point resolution of the quotient
/// are ignored on top of `tol`.
pub fn validate_solution(system: &HybridSystemDef, psi: &SolutionPair, tol: f64) -> Validation {
    let mut violations = Vec::new();
    let (state, input) = (psi.state(), psi.input());
    if state.dim() != system.state_dim || input.dim() != system.input_dim {
        violations.push(Violation::Dimension {
            state: state.dim(),
            input: input.dim(),
        });
        return Validation { violations };
    }

    let u0 = input.value_at(crate::hybrid::HybridTime::ZERO).unwrap();
    let x0 = state.initial();
    if system.flow_set.margin(x0, &u0) > tol && !system.jump_set.contains(x0, &u0) {
        violations.push(Violation::Initial);
    }

    let n = system.state_dim;
    for (j, seg) in state.segments().iter().enumerate() {
        let times = seg.times();
        let inputs: Vec<Vec<f64>> = times
            .iter()
            .map(|&t| {
                input
                    .value_at(crate::hybrid::HybridTime::new(t, j))
                    .unwrap()
            })
            .collect();
        for k in 1..times.len().saturating_sub(1) {
            if !system
                .flow_set
                .contains(state.segment_value(j, k), &inputs[k])
            {
                violations.push(Violation::FlowSet { t: times[k], j });
            }
        }
        for k in 0..times.len().saturating_sub(1) {
            let dt = times[k + 1] - times[k];
            let xa = state.segment_value(j, k);
            let xb = state.segment_value(j, k + 1);
            let u = &inputs[k];
            let fa = system.flow(xa, u);
            let fb = system.flow(xb, u);
            let mut mismatch = 0.0f64;
            let mut scale = 1.0f64;
            for i in 0..n {
                let quotient = (xb[i] - xa[i]) / dt;
                let avg = 0.5 * (fa[i] + fb[i]);
                mismatch += (quotient - avg).powi(2);
                scale = scale.max(xa[i].abs()).max(xb[i].abs());
            }
            let mismatch = mismatch.sqrt();
            let noise = 8.0 * f64::EPSILON * scale / dt;
            if !(mismatch <= tol + noise) {
                violations.push(Violation::FlowMap {
                    t: times[k],
                    j,
                    mismatch,
                });
            }
        }
        if j + 1 < state.segments().len() {
            let last = times.len() - 1;
            let pre = state.segment_value(j, last);
            let u = &inputs[last];
            let t = times[last];
            if !system.jump_set.contains(pre, u) {
                violations.push(Violation::JumpSet { t, j });
            }
            let post = state.segment_value(j + 1, 0);
            let mismatch = euclidean(&system.jump(pre, u), post);
            if !(mismatch <= tol) {
                violations.push(Violation::JumpMap { t, j, mismatch });
            }
        }
    }
    Validation { violations }
}

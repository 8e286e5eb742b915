//! Forward propagation of hybrid dynamics: fixed-step RK4 flow with flow-set
//! exit detection, single jumps, and the input library.

use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::hybrid::{
    HybridArc, HybridError, HybridSystemDef, HybridTime, HybridTimeDomain, Segment, SolutionPair,
    UnsafeSet,
};
use crate::planner::CostFunctional;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("initial point is not in the flow set (margin {margin:e})")]
    NotInFlowSet { margin: f64 },
    #[error("point is not in the jump set")]
    NotInJumpSet,
    #[error("state is in neither the flow nor the jump projection")]
    NeitherSet,
    #[error("flow needs {needed} steps, more than the limit of {limit}")]
    TooManySteps { needed: usize, limit: usize },
    #[error("flow duration must be positive and finite, got {0}")]
    InvalidDuration(f64),
    #[error("flow left the flow set immediately")]
    DegenerateFlow,
    #[error("invalid integrator configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Hybrid(#[from] HybridError),
}

/// An axis-aligned box of input values; a coordinate with `lo == hi` is fixed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputBox {
    bounds: Vec<(f64, f64)>,
}

impl InputBox {
    pub fn new(bounds: Vec<(f64, f64)>) -> Result<Self, SimError> {
        if bounds
            .iter()
            .any(|&(lo, hi)| !(lo <= hi) || !lo.is_finite() || !hi.is_finite())
        {
            return Err(SimError::InvalidConfig(format!(
                "input bounds must be finite with lo <= hi: {bounds:?}"
            )));
        }
        Ok(Self { bounds })
    }

    pub fn singleton(value: &[f64]) -> Self {
        Self {
            bounds: value.iter().map(|&v| (v, v)).collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.bounds.len()
    }

    pub fn bounds(&self) -> &[(f64, f64)] {
        &self.bounds
    }

    pub fn contains(&self, u: &[f64]) -> bool {
        u.len() == self.dim()
            && self
                .bounds
                .iter()
                .zip(u)
                .all(|(&(lo, hi), &v)| lo <= v && v <= hi)
    }

    pub fn sample(&self, rng: &mut dyn RngCore) -> Vec<f64> {
        self.bounds
            .iter()
            .map(|&(lo, hi)| {
                if lo == hi {
                    lo
                } else {
                    rng.random_range(lo..=hi)
                }
            })
            .collect()
    }
}

/// Constant flow inputs with durations in `(0, T_m]`, plus jump input values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputLibrary {
    pub flow_values: InputBox,
    pub max_flow_duration: f64,
    pub jump_values: InputBox,
}

impl InputLibrary {
    pub fn new(
        flow_values: InputBox,
        max_flow_duration: f64,
        jump_values: InputBox,
    ) -> Result<Self, SimError> {
        if !(max_flow_duration > 0.0) || !max_flow_duration.is_finite() {
            return Err(SimError::InvalidDuration(max_flow_duration));
        }
        Ok(Self {
            flow_values,
            max_flow_duration,
            jump_values,
        })
    }
}

/// A constant flow input and its duration, uniform over `U_C × (0, T_m]`.
pub fn sample_flow_input(lib: &InputLibrary, rng: &mut dyn RngCore) -> (Vec<f64>, f64) {
    let value = lib.flow_values.sample(rng);
    // random() is in [0, 1), so 1 - r is in (0, 1]
    let duration = lib.max_flow_duration * (1.0 - rng.random::<f64>());
    (value, duration)
}

pub fn sample_jump_input(lib: &InputLibrary, rng: &mut dyn RngCore) -> Vec<f64> {
    lib.jump_values.sample(rng)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IntegratorConfig {
    /// RK4 step in seconds.
    pub step_size: f64,
    /// Accuracy of the flow-set exit point, in units of the set's margin.
    pub boundary_tol: f64,
    pub max_steps: usize,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self {
            step_size: 0.01,
            boundary_tol: 1e-8,
            max_steps: 100_000,
        }
    }
}

impl IntegratorConfig {
    pub fn validate(&self) -> Result<(), SimError> {
        if !(self.step_size > 0.0) || !self.step_size.is_finite() {
            return Err(SimError::InvalidConfig(format!(
                "step_size must be positive, got {}",
                self.step_size
            )));
        }
        if !(self.boundary_tol > 0.0) {
            return Err(SimError::InvalidConfig(format!(
                "boundary_tol must be positive, got {}",
                self.boundary_tol
            )));
        }
        if self.max_steps == 0 {
            return Err(SimError::InvalidConfig("max_steps must be positive".into()));
        }
        Ok(())
    }
}

fn rk4(system: &HybridSystemDef, x: &[f64], u: &[f64], dt: f64) -> Vec<f64> {
    let axpy = |a: &[f64], k: &[f64], s: f64| -> Vec<f64> {
        a.iter().zip(k).map(|(x, k)| x + s * k).collect()
    };
    let k1 = system.flow(x, u);
    let k2 = system.flow(&axpy(x, &k1, dt / 2.0), u);
    let k3 = system.flow(&axpy(x, &k2, dt / 2.0), u);
    let k4 = system.flow(&axpy(x, &k3, dt), u);
    (0..x.len())
        .map(|i| x[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
        .collect()
}

/// Integrates `ẋ = f(x, u)` with constant `u` for `duration` seconds.
///
/// Steps are uniform and no longer than `cfg.step_size`. If a step leaves the
/// flow set, the exit time inside that step is bisected until the state is
/// within `cfg.boundary_tol` of the boundary and the arc ends there.
pub fn integrate_flow(
    system: &HybridSystemDef,
    x0: &[f64],
    u: &[f64],
    duration: f64,
    cfg: &IntegratorConfig,
) -> Result<SolutionPair, SimError> {
    cfg.validate()?;
    if !(duration > 0.0) || !duration.is_finite() {
        return Err(SimError::InvalidDuration(duration));
    }
    check_dims(system, x0, u)?;
    let margin = system.flow_set.margin(x0, u);
    if margin > 0.0 {
        return Err(SimError::NotInFlowSet { margin });
    }
    let ratio = (duration / cfg.step_size).ceil();
    if ratio > cfg.max_steps as f64 {
        return Err(SimError::TooManySteps {
            needed: ratio as usize,
            limit: cfg.max_steps,
        });
    }
    let n_steps = (ratio as usize).max(1);
    let dt = duration / n_steps as f64;
    let min_dt = 1e-3 * dt;

    let n = x0.len();
    let mut times = vec![0.0];
    let mut values = x0.to_vec();
    let mut x = x0.to_vec();
    let mut t = 0.0;
    for k in 1..=n_steps {
        let t_next = if k == n_steps {
            duration
        } else {
            k as f64 * dt
        };
        let x_next = rk4(system, &x, u, t_next - t);
        if system.flow_set.margin(&x_next, u) <= 0.0 {
            times.push(t_next);
            values.extend_from_slice(&x_next);
            x = x_next;
            t = t_next;
            continue;
        }

        let (lo, x_lo) = bisect_exit(system, &x, u, t_next - t, cfg.boundary_tol);
        if lo >= min_dt || (lo > 0.0 && times.len() == 1) {
            times.push(t + lo);
            values.extend_from_slice(&x_lo);
        } else if lo > 0.0 {
            // fold a sliver step into the previous one
            let m = times.len();
            let (t_prev, x_prev) = (times[m - 2], values[(m - 2) * n..(m - 1) * n].to_vec());
            let merged = rk4(system, &x_prev, u, t + lo - t_prev);
            times.pop();
            values.truncate((m - 1) * n);
            if system.flow_set.margin(&merged, u) <= 0.0 {
                times.push(t + lo);
                values.extend_from_slice(&merged);
            } else {
                times.push(t);
                values.extend_from_slice(&x);
                times.push(t + lo);
                values.extend_from_slice(&x_lo);
            }
        }
        break;
    }

    let t_end = *times.last().unwrap();
    let domain = HybridTimeDomain::interval(t_end)?;
    let input_values = u.repeat(times.len());
    let state = HybridArc::new(domain.clone(), n, vec![Segment::new(times.clone(), values)])?;
    let input = HybridArc::new(domain, u.len(), vec![Segment::new(times, input_values)])?;
    Ok(SolutionPair::new(state, input)?)
}

/// Largest sub-step in `[0, step]` that stays in the flow set, refined until
/// the state is within `tol` of the boundary.
fn bisect_exit(
    system: &HybridSystemDef,
    x: &[f64],
    u: &[f64],
    step: f64,
    tol: f64,
) -> (f64, Vec<f64>) {
    let (mut lo, mut hi) = (0.0, step);
    let mut x_lo = x.to_vec();
    for _ in 0..200 {
        if system.flow_set.margin(&x_lo, u) >= -tol {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let xm = rk4(system, x, u, mid);
        if system.flow_set.margin(&xm, u) <= 0.0 {
            lo = mid;
            x_lo = xm;
        } else {
            hi = mid;
        }
    }
    (lo, x_lo)
}

fn check_dims(system: &HybridSystemDef, x: &[f64], u: &[f64]) -> Result<(), SimError> {
    if x.len() != system.state_dim {
        return Err(HybridError::DimensionMismatch {
            expected: system.state_dim,
            got: x.len(),
        }
        .into());
    }
    if u.len() != system.input_dim {
        return Err(HybridError::DimensionMismatch {
            expected: system.input_dim,
            got: u.len(),
        }
        .into());
    }
    Ok(())
}

/// `x⁺ = g(x, u)` for `(x, u) ∈ D`.
pub fn apply_jump(system: &HybridSystemDef, x: &[f64], u: &[f64]) -> Result<Vec<f64>, SimError> {
    check_dims(system, x, u)?;
    if !system.jump_set.contains(x, u) {
        return Err(SimError::NotInJumpSet);
    }
    Ok(system.jump(x, u))
}

/// The one-jump pair on `{0} × {0, 1}`; the jump input is held on both samples.
pub fn jump_pair(system: &HybridSystemDef, x: &[f64], u: &[f64]) -> Result<SolutionPair, SimError> {
    let post = apply_jump(system, x, u)?;
    let state = HybridArc::from_samples(
        x.len(),
        [
            (HybridTime::new(0.0, 0), x.to_vec()),
            (HybridTime::new(0.0, 1), post),
        ],
    )?;
    let input = HybridArc::from_samples(
        u.len(),
        [
            (HybridTime::new(0.0, 0), u.to_vec()),
            (HybridTime::new(0.0, 1), u.to_vec()),
        ],
    )?;
    Ok(SolutionPair::new(state, input)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    Flow,
    Jump,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PropagationResult {
    /// False when some sample of `psi` lies in the unsafe set.
    pub generated: bool,
    pub regime: Regime,
    pub psi: SolutionPair,
    pub x_new: Vec<f64>,
    pub cost_new: f64,
}

/// Everything `new_state` needs besides the current vertex and the RNG.
#[derive(Clone, Copy)]
pub struct Propagator<'a> {
    pub system: &'a HybridSystemDef,
    pub library: &'a InputLibrary,
    pub unsafe_set: &'a UnsafeSet,
    pub cost: &'a dyn CostFunctional,
    pub integrator: &'a IntegratorConfig,
    /// Probability of flowing when the state is in both `C′` and `D′`.
    pub flow_probability: f64,
}

impl Propagator<'_> {
    /// Picks the regime from `x_cur`'s membership in `C′` and `D′`, applies a
    /// sampled input, and prices the resulting pair.
    pub fn new_state(
        &self,
        x_cur: &[f64],
        cost_cur: f64,
        rng: &mut dyn RngCore,
    ) -> Result<PropagationResult, SimError> {
        let in_flow = self.system.flow_proj.contains(x_cur);
        let in_jump = self.system.jump_proj.contains(x_cur);
        let regime = match (in_flow, in_jump) {
            (true, false) => Regime::Flow,
            (false, true) => Regime::Jump,
            (true, true) => {
                if rng.random::<f64>() < self.flow_probability {
                    Regime::Flow
                } else {
                    Regime::Jump
                }
            }
            (false, false) => return Err(SimError::NeitherSet),
        };
        let psi = match regime {
            Regime::Flow => {
                let (u, duration) = sample_flow_input(self.library, rng);
                let psi = integrate_flow(self.system, x_cur, &u, duration, self.integrator)?;
                if psi.domain().end_time() == 0.0 {
                    return Err(SimError::DegenerateFlow);
                }
                psi
            }
            Regime::Jump => {
                let u = sample_jump_input(self.library, rng);
                jump_pair(self.system, x_cur, &u)?
            }
        };
        let generated = !psi
            .samples()
            .any(|(_, x, u)| self.unsafe_set.contains(x, &u));
        let cost_new = cost_cur + self.cost.evaluate(psi.state());
        let x_new = psi.state().terminal().to_vec();
        Ok(PropagationResult {
            generated,
            regime,
            psi,
            x_new,
            cost_new,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hybrid::validate_solution;
    use crate::planner::HybridTimeCost;
    use crate::systems::{BouncingBallParams, MulticopterParams};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    const GAMMA: f64 = 9.81;

    fn ball() -> HybridSystemDef {
        crate::systems::bouncing_ball_problem(&BouncingBallParams::default()).system
    }

    fn cfg(h: f64) -> IntegratorConfig {
        IntegratorConfig {
            step_size: h,
            ..Default::default()
        }
    }

    #[test]
    fn free_fall_for_one_second() {
        let psi = integrate_flow(&ball(), &[15.0, 0.0], &[0.0], 1.0, &cfg(1e-3)).unwrap();
        let x = psi.state().terminal();
        assert!((x[0] - (15.0 - GAMMA / 2.0)).abs() < 1e-9);
        assert!((x[1] + GAMMA).abs() < 1e-9);
        assert_eq!(psi.domain().end_time(), 1.0);
    }

    #[test]
    fn drop_stops_on_the_ground() {
        let c = cfg(1e-3);
        let psi = integrate_flow(&ball(), &[15.0, 0.0], &[0.0], 3.0, &c).unwrap();
        let t_star = (2.0 * 15.0 / GAMMA).sqrt();
        let x = psi.state().terminal();
        assert!((psi.domain().end_time() - t_star).abs() < 1e-6);
        assert!(x[0] >= 0.0 && x[0] <= c.boundary_tol);
        assert!((x[1] + GAMMA * t_star).abs() < 1e-6);
        assert!((x[1] + 17.1552).abs() < 1e-4);
        // penultimate sample strictly inside
        let seg = &psi.state().segments()[0];
        assert!(psi.state().segment_value(0, seg.len() - 2)[0] > 0.0);
    }

    #[test]
    fn tiny_duration_gives_two_samples() {
        let psi = integrate_flow(&ball(), &[15.0, 0.0], &[0.0], 1e-9, &cfg(1e-3)).unwrap();
        assert_eq!(psi.state().len(), 2);
        assert!(psi.state().terminal()[1].abs() < 1e-7);
    }

    #[test]
    fn flow_outside_flow_set_is_rejected() {
        let r = integrate_flow(&ball(), &[-1.0, 0.0], &[0.0], 1.0, &cfg(1e-3));
        assert!(matches!(r, Err(SimError::NotInFlowSet { .. })));
        let r = integrate_flow(
            &ball(),
            &[1.0, 0.0],
            &[0.0],
            10.0,
            &IntegratorConfig {
                step_size: 1e-3,
                max_steps: 100,
                ..Default::default()
            },
        );
        assert!(matches!(r, Err(SimError::TooManySteps { .. })));
        assert!(integrate_flow(&ball(), &[1.0, 0.0], &[0.0], 0.0, &cfg(1e-3)).is_err());
    }

    #[test]
    fn integrated_arcs_validate() {
        let sys = ball();
        for (x0, d) in [([15.0, 0.0], 1.5), ([15.0, 0.0], 3.0), ([0.0, 12.0], 2.0)] {
            let h = 1e-3;
            let psi = integrate_flow(&sys, &x0, &[0.0], d, &cfg(h)).unwrap();
            let v = validate_solution(&sys, &psi, 10.0 * h * h);
            assert!(v.is_valid(), "{v:?}");
        }
    }

    #[test]
    fn ball_jumps() {
        let sys = ball();
        let x = apply_jump(&sys, &[0.0, -17.1552], &[4.0]).unwrap();
        assert_eq!(x[0], 0.0);
        assert!((x[1] - 17.72416).abs() < 1e-12);
        assert_eq!(
            apply_jump(&sys, &[0.0, 0.0], &[0.0]).unwrap(),
            vec![0.0, 0.0]
        );
        assert_eq!(
            apply_jump(&sys, &[1.0, -1.0], &[0.0]),
            Err(SimError::NotInJumpSet)
        );
    }

    #[test]
    fn multicopter_jump_off_wall() {
        let params = MulticopterParams::default();
        let sys = crate::systems::multicopter_problem(&params).system;
        // left face of the first wall has normal (-1, 0)
        let w = &params.walls[0];
        let x = [w.x_min, 0.5 * (w.y_min + w.y_max), 1.0, 2.0, 0.3, -0.7];
        let post = apply_jump(&sys, &x, &[0.0, 0.0]).unwrap();
        // v_n = -1, v_t = 2 in the wall frame
        assert_eq!(&post[..2], &x[..2]);
        assert!((post[2] + 0.43).abs() < 1e-12);
        assert!((post[3] - 1.683_35).abs() < 1e-4);
        assert_eq!(&post[4..], &[0.0, 0.0]);
    }

    #[test]
    fn flow_samples_statistics() {
        let lib = InputLibrary::new(
            InputBox::new(vec![(0.0, 5.0)]).unwrap(),
            0.5,
            InputBox::singleton(&[4.0]),
        )
        .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let n = 10_000;
        let (mut sv, mut sd) = (0.0, 0.0);
        for _ in 0..n {
            let (u, d) = sample_flow_input(&lib, &mut rng);
            assert!(d > 0.0 && d <= 0.5);
            assert!((0.0..=5.0).contains(&u[0]));
            sv += u[0];
            sd += d;
            assert_eq!(sample_jump_input(&lib, &mut rng), vec![4.0]);
        }
        assert!((sv / n as f64 - 2.5).abs() < 0.15);
        assert!((sd / n as f64 - 0.25).abs() < 0.015);
    }

    fn ball_propagator<'a>(
        sys: &'a HybridSystemDef,
        lib: &'a InputLibrary,
        unsafe_set: &'a UnsafeSet,
        integrator: &'a IntegratorConfig,
    ) -> Propagator<'a> {
        Propagator {
            system: sys,
            library: lib,
            unsafe_set,
            cost: &HybridTimeCost,
            integrator,
            flow_probability: 0.5,
        }
    }

    #[test]
    fn new_state_jumps_from_the_ground() {
        let sys = ball();
        let lib = BouncingBallParams::default().input_library(0.5);
        let unsafe_set = UnsafeSet::new(|x, u| x[0] >= 20.0 && u[0] >= 5.0);
        let integrator = cfg(1e-2);
        let prop = ball_propagator(&sys, &lib, &unsafe_set, &integrator);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        // x2 < 0 at x1 = 0 is outside C′ only when x1 < 0, so nudge into D′ \ C′
        let x = [-1e-9, -17.1552];
        let r = prop.new_state(&x, 2.0, &mut rng).unwrap();
        assert_eq!(r.regime, Regime::Jump);
        assert!(r.generated);
        assert_eq!(r.psi.domain().boundaries(), &[0.0, 0.0, 0.0]);
        assert!((r.cost_new - 3.0).abs() < 1e-12);
    }

    #[test]
    fn new_state_rejects_unsafe_samples() {
        let sys = ball();
        let lib = BouncingBallParams::default().input_library(0.5);
        let integrator = cfg(1e-2);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let safe = UnsafeSet::new(|x, u| x[0] >= 20.0 && u[0] >= 5.0);
        let prop = ball_propagator(&sys, &lib, &safe, &integrator);
        for _ in 0..100 {
            let r = prop.new_state(&[15.0, 0.0], 0.0, &mut rng).unwrap();
            assert!(r.generated);
        }
        // an unsafe set that catches the first sample
        let hot = UnsafeSet::new(|x, _| x[0] == 15.0);
        let prop = ball_propagator(&sys, &lib, &hot, &integrator);
        let r = prop.new_state(&[15.0, 0.0], 0.0, &mut rng).unwrap();
        assert!(!r.generated);
    }

    #[test]
    fn new_state_is_deterministic() {
        let sys = ball();
        let lib = BouncingBallParams::default().input_library(0.5);
        let unsafe_set = UnsafeSet::empty();
        let integrator = cfg(1e-2);
        let prop = ball_propagator(&sys, &lib, &unsafe_set, &integrator);
        let run = |seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            prop.new_state(&[0.0, -3.0], 1.0, &mut rng)
        };
        assert_eq!(run(5), run(5));
    }

    #[test]
    fn new_state_outside_both_sets_errors() {
        let sys = ball();
        let lib = BouncingBallParams::default().input_library(0.5);
        let unsafe_set = UnsafeSet::empty();
        let integrator = cfg(1e-2);
        let prop = ball_propagator(&sys, &lib, &unsafe_set, &integrator);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(
            prop.new_state(&[-5.0, 1.0], 0.0, &mut rng),
            Err(SimError::NeitherSet)
        );
    }
}

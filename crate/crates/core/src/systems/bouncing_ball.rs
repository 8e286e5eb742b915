use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::hybrid::{
    FinalSet, HybridSystemDef, InitialSet, MotionPlanProblem, Region, StateRegion, UnsafeSet,
};
use crate::planner::{AuxiliaryClockCost, HybridTimeCost, PlannerConfig};
use crate::simulation::{InputBox, InputLibrary, IntegratorConfig};

/// Vertical ball with height `x1`, velocity `x2`, and an actuated bounce.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BouncingBallParams {
    pub gamma: f64,
    /// Coefficient of restitution.
    pub lambda: f64,
    /// Largest velocity kick applied at a bounce.
    pub u_max: f64,
    /// Accepted distance from the ground for a bounce.
    pub contact_tol: f64,
    pub x0: [f64; 2],
    pub goal: [f64; 2],
    /// Random states are drawn from `[0, max_height] × [-max_speed, max_speed]`.
    pub max_height: f64,
    pub max_speed: f64,
}

impl Default for BouncingBallParams {
    fn default() -> Self {
        Self {
            gamma: 9.81,
            lambda: 0.8,
            u_max: 5.0,
            contact_tol: 1e-6,
            x0: [15.0, 0.0],
            goal: [10.0, 0.0],
            max_height: 20.0,
            max_speed: 20.0,
        }
    }
}

impl BouncingBallParams {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.gamma > 0.0) {
            return Err(format!("gamma must be positive, got {}", self.gamma));
        }
        if !(self.lambda > 0.0 && self.lambda < 1.0) {
            return Err(format!("lambda must lie in (0, 1), got {}", self.lambda));
        }
        if !(self.u_max >= 0.0) || !(self.contact_tol > 0.0) {
            return Err("u_max must be nonnegative and contact_tol positive".into());
        }
        if !(self.max_height > 0.0 && self.max_speed > 0.0) {
            return Err("sampling bounds must be positive".into());
        }
        Ok(())
    }

    /// Zero input while flowing (the flow map ignores it) and kicks in
    /// `[0, u_max]` at bounces.
    pub fn input_library(&self, max_flow_duration: f64) -> InputLibrary {
        InputLibrary::new(
            InputBox::singleton(&[0.0]),
            max_flow_duration,
            InputBox::new(vec![(0.0, self.u_max)]).expect("u_max is nonnegative"),
        )
        .expect("positive flow duration")
    }

    pub fn default_planner_config(&self) -> PlannerConfig {
        PlannerConfig {
            p_n: 0.8,
            max_iterations: 2000,
            delta_bn: 8.0,
            delta_s: 0.06,
            eps_final: 0.5,
            ..Default::default()
        }
    }

    pub fn default_flow_duration(&self) -> f64 {
        1.0
    }

    pub fn default_integrator(&self) -> IntegratorConfig {
        IntegratorConfig::default()
    }
}

fn ground_distance(x: &[f64]) -> f64 {
    x[0].hypot(x[1].max(0.0))
}

pub fn bouncing_ball_system(params: &BouncingBallParams) -> HybridSystemDef {
    let BouncingBallParams {
        gamma,
        lambda,
        contact_tol,
        max_height,
        max_speed,
        ..
    } = *params;
    // distance to {x1 = 0, x2 <= 0} x {u >= 0}
    let jump_excess = |x: &[f64], u: &[f64]| ground_distance(x).hypot((-u[0]).max(0.0));
    HybridSystemDef {
        name: "bouncing_ball".into(),
        state_dim: 2,
        input_dim: 1,
        flow_set: Region::new(|x, _| -x[0]),
        flow_map: Arc::new(move |x, _| vec![x[1], -gamma]),
        jump_set: Region::new(jump_excess).with_level(contact_tol),
        jump_map: Arc::new(move |x, u| vec![x[0], -lambda * x[1] + u[0]]),
        flow_proj: StateRegion::new(
            |x| -x[0],
            move |rng| {
                vec![
                    rng.random_range(0.0..=max_height),
                    rng.random_range(-max_speed..=max_speed),
                ]
            },
        ),
        jump_proj: StateRegion::new(ground_distance, move |rng| {
            vec![0.0, rng.random_range(-max_speed..=0.0)]
        })
        .with_level(contact_tol),
        bounding_box: vec![(0.0, max_height), (-max_speed, max_speed)],
    }
}

/// Reach `goal` from `x0` in least hybrid time; kicks of `u_max` at or above
/// height 20 are unsafe.
pub fn bouncing_ball_problem(params: &BouncingBallParams) -> MotionPlanProblem {
    let goal = params.goal;
    MotionPlanProblem {
        system: bouncing_ball_system(params),
        initial_set: InitialSet::singleton(params.x0.to_vec()),
        final_set: FinalSet::new(move |x| (x[0] - goal[0]).hypot(x[1] - goal[1])),
        unsafe_set: UnsafeSet::new(|x, u| x[0] >= 20.0 && u[0] >= 5.0),
        cost: Arc::new(HybridTimeCost),
    }
}

/// Largest clock values drawn when sampling the extended state.
const CLOCK_SAMPLE_TIME: f64 = 10.0;
const CLOCK_SAMPLE_JUMPS: u32 = 5;

/// Appends a flow clock `τ` and jump counter `k` to the state. Both start at
/// zero; `τ` grows at rate one and `k` increments at every jump, and the cost
/// of an arc is the growth of `τ + k` along it.
pub fn auxiliary_extension(problem: &MotionPlanProblem) -> MotionPlanProblem {
    let base = problem.system.clone();
    let n = base.state_dim;
    let clocks = |rng: &mut dyn rand::RngCore| {
        vec![
            rng.random_range(0.0..=CLOCK_SAMPLE_TIME),
            rng.random_range(0..=CLOCK_SAMPLE_JUMPS) as f64,
        ]
    };
    let (f, g) = (base.flow_map.clone(), base.jump_map.clone());
    let mut bounding_box = base.bounding_box.clone();
    bounding_box.extend([(0.0, CLOCK_SAMPLE_TIME), (0.0, CLOCK_SAMPLE_JUMPS as f64)]);
    let system = HybridSystemDef {
        name: format!("{}+clocks", base.name),
        state_dim: n + 2,
        input_dim: base.input_dim,
        flow_set: base.flow_set.lift(n),
        flow_map: Arc::new(move |x, u| {
            let mut dx = f(&x[..n], u);
            dx.extend([1.0, 0.0]);
            dx
        }),
        jump_set: base.jump_set.lift(n),
        jump_map: Arc::new(move |x, u| {
            let mut xp = g(&x[..n], u);
            xp.extend([x[n], x[n + 1] + 1.0]);
            xp
        }),
        flow_proj: base.flow_proj.lift(n, clocks),
        jump_proj: base.jump_proj.lift(n, clocks),
        bounding_box,
    };

    let (init, fin, unsafe_set) = (
        problem.initial_set.clone(),
        problem.final_set.clone(),
        problem.unsafe_set.clone(),
    );
    let (init_contains, init_sample) = (init.contains.clone(), init.sampler.clone());
    MotionPlanProblem {
        system,
        initial_set: InitialSet {
            contains: Arc::new(move |x| x[n] == 0.0 && x[n + 1] == 0.0 && init_contains(&x[..n])),
            sampler: Arc::new(move |rng| {
                let mut x = init_sample(rng);
                x.extend([0.0, 0.0]);
                x
            }),
        },
        final_set: FinalSet::new(move |x| fin.distance(&x[..n])),
        unsafe_set: UnsafeSet::new(move |x, u| unsafe_set.contains(&x[..n], u)),
        cost: Arc::new(AuxiliaryClockCost { offset: n }),
    }
}

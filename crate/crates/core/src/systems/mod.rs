//! The bundled benchmark systems and lookup by name.

mod bouncing_ball;
mod multicopter;

pub use bouncing_ball::{
    auxiliary_extension, bouncing_ball_problem, bouncing_ball_system, BouncingBallParams,
};
pub use multicopter::{
    impact_velocity, multicopter_problem, multicopter_system, multicopter_unsafe, wall_contact,
    MulticopterParams, Rect, WallContact,
};

use crate::hybrid::MotionPlanProblem;
use crate::planner::PlannerConfig;
use crate::simulation::{InputLibrary, IntegratorConfig};

pub const SYSTEM_NAMES: [&str; 2] = ["bouncing_ball", "multicopter"];

/// A problem instance together with the defaults tuned for it.
#[derive(Debug, Clone)]
pub struct SystemBundle {
    pub name: String,
    pub problem: MotionPlanProblem,
    pub library: InputLibrary,
    pub planner: PlannerConfig,
    pub integrator: IntegratorConfig,
    /// Wall rectangles, empty for systems without walls.
    pub walls: Vec<Rect>,
}

/// Builds a bundled system. `params` is a JSON object of parameter overrides
/// (unknown keys are rejected); `max_flow_duration` overrides `T_m`.
pub fn by_name(
    name: &str,
    params: Option<&serde_json::Value>,
    max_flow_duration: Option<f64>,
) -> Result<SystemBundle, String> {
    fn parse<T: serde::de::DeserializeOwned + Default>(
        params: Option<&serde_json::Value>,
    ) -> Result<T, String> {
        match params {
            None | Some(serde_json::Value::Null) => Ok(T::default()),
            Some(v) => {
                serde_json::from_value(v.clone()).map_err(|e| format!("system parameters: {e}"))
            }
        }
    }
    let t_m = |default: f64| -> Result<f64, String> {
        let t = max_flow_duration.unwrap_or(default);
        if t > 0.0 && t.is_finite() {
            Ok(t)
        } else {
            Err(format!("max flow duration must be positive, got {t}"))
        }
    };
    match name {
        "bouncing_ball" => {
            let p: BouncingBallParams = parse(params)?;
            p.validate()?;
            Ok(SystemBundle {
                name: name.into(),
                problem: bouncing_ball_problem(&p),
                library: p.input_library(t_m(p.default_flow_duration())?),
                planner: p.default_planner_config(),
                integrator: p.default_integrator(),
                walls: Vec::new(),
            })
        }
        "multicopter" => {
            let p: MulticopterParams = parse(params)?;
            p.validate()?;
            Ok(SystemBundle {
                name: name.into(),
                problem: multicopter_problem(&p),
                library: p.input_library(t_m(p.default_flow_duration())?),
                planner: p.default_planner_config(),
                integrator: p.default_integrator(),
                walls: p.walls.clone(),
            })
        }
        other => Err(format!(
            "unknown system {other:?}; expected one of {}",
            SYSTEM_NAMES.join(", ")
        )),
    }
}

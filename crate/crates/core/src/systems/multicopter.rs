use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::hybrid::{
    FinalSet, HybridSystemDef, InitialSet, MotionPlanProblem, Region, StateRegion, UnsafeSet,
};
use crate::planner::{HybridTimeCost, PlannerConfig};
use crate::simulation::{InputBox, InputLibrary, IntegratorConfig};

/// Axis-aligned rectangle in the plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
}

impl Rect {
    pub fn new(x_min: f64, x_max: f64, y_min: f64, y_max: f64) -> Self {
        Self {
            x_min,
            x_max,
            y_min,
            y_max,
        }
    }

    /// Negative inside, zero on the boundary, Euclidean distance outside.
    pub fn signed_distance(&self, p: &[f64]) -> f64 {
        let dx = (self.x_min - p[0]).max(p[0] - self.x_max);
        let dy = (self.y_min - p[1]).max(p[1] - self.y_max);
        if dx > 0.0 || dy > 0.0 {
            dx.max(0.0).hypot(dy.max(0.0))
        } else {
            dx.max(dy)
        }
    }

    pub fn contains_interior(&self, p: &[f64]) -> bool {
        self.x_min < p[0] && p[0] < self.x_max && self.y_min < p[1] && p[1] < self.y_max
    }

    /// The four faces in contact priority order: x-faces, then y-faces.
    fn faces(&self) -> [Face; 4] {
        [
            Face::new(
                [-1.0, 0.0],
                [self.x_min, self.y_min],
                [self.x_min, self.y_max],
            ),
            Face::new(
                [1.0, 0.0],
                [self.x_max, self.y_min],
                [self.x_max, self.y_max],
            ),
            Face::new(
                [0.0, -1.0],
                [self.x_min, self.y_min],
                [self.x_max, self.y_min],
            ),
            Face::new(
                [0.0, 1.0],
                [self.x_min, self.y_max],
                [self.x_max, self.y_max],
            ),
        ]
    }

    fn is_valid(&self) -> bool {
        [self.x_min, self.x_max, self.y_min, self.y_max]
            .iter()
            .all(|v| v.is_finite())
            && self.x_min < self.x_max
            && self.y_min < self.y_max
    }
}

#[derive(Debug, Clone, Copy)]
struct Face {
    normal: [f64; 2],
    a: [f64; 2],
    b: [f64; 2],
}

impl Face {
    fn new(normal: [f64; 2], a: [f64; 2], b: [f64; 2]) -> Self {
        Self { normal, a, b }
    }

    fn distance(&self, p: &[f64]) -> f64 {
        let cx = p[0].clamp(self.a[0], self.b[0]);
        let cy = p[1].clamp(self.a[1], self.b[1]);
        (p[0] - cx).hypot(p[1] - cy)
    }

    fn length(&self) -> f64 {
        (self.b[0] - self.a[0]) + (self.b[1] - self.a[1])
    }

    fn frame(&self, wall: usize) -> WallContact {
        WallContact {
            wall,
            normal: self.normal,
            tangent: [self.normal[1].abs(), self.normal[0].abs()],
        }
    }
}

/// Contact frame at a wall face: unit normal into free space and unit tangent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WallContact {
    pub wall: usize,
    pub normal: [f64; 2],
    pub tangent: [f64; 2],
}

impl WallContact {
    /// `(v_n, v_t)` of a planar vector.
    pub fn to_frame(&self, v: [f64; 2]) -> [f64; 2] {
        [
            v[0] * self.normal[0] + v[1] * self.normal[1],
            v[0] * self.tangent[0] + v[1] * self.tangent[1],
        ]
    }

    pub fn from_frame(&self, w: [f64; 2]) -> [f64; 2] {
        [
            w[0] * self.normal[0] + w[1] * self.tangent[0],
            w[0] * self.normal[1] + w[1] * self.tangent[1],
        ]
    }
}

fn faces(walls: &[Rect]) -> impl Iterator<Item = (usize, Face)> + '_ {
    walls
        .iter()
        .enumerate()
        .flat_map(|(i, w)| w.faces().into_iter().map(move |f| (i, f)))
}

/// First face within `tol` of `p`, by wall id and then x-faces before y-faces.
pub fn wall_contact(walls: &[Rect], p: &[f64], tol: f64) -> Option<WallContact> {
    faces(walls)
        .find(|(_, f)| f.distance(p) <= tol)
        .map(|(i, f)| f.frame(i))
}

/// Per-face jump excess `sqrt(d² + max(v_n, 0)²)`: zero exactly on a face
/// while moving into it.
fn face_excess(face: &Face, x: &[f64]) -> f64 {
    let v_n = x[2] * face.normal[0] + x[3] * face.normal[1];
    face.distance(x).hypot(v_n.max(0.0))
}

/// The face achieving the jump-set excess. Ties (corners) go to the face with
/// the most negative normal velocity, then to the earliest face.
fn jump_face(walls: &[Rect], x: &[f64]) -> Option<WallContact> {
    let mut best: Option<((f64, f64), WallContact)> = None;
    for (i, f) in faces(walls) {
        let key = (face_excess(&f, x), x[2] * f.normal[0] + x[3] * f.normal[1]);
        if best.is_none_or(|(bk, _)| key < bk) {
            best = Some((key, f.frame(i)));
        }
    }
    best.map(|(_, c)| c)
}

/// Planar triple integrator bouncing off rectangular walls.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MulticopterParams {
    /// Normal restitution coefficient.
    pub e: f64,
    /// Tangential friction coefficient.
    pub kappa: f64,
    pub walls: Vec<Rect>,
    pub arena: Rect,
    /// Jerk bound per axis.
    pub u_max: f64,
    /// Velocity and acceleration bounds of the random-state sampler.
    pub v_max: f64,
    pub a_max: f64,
    pub contact_tol: f64,
    pub x0: [f64; 6],
    pub goal: [f64; 2],
}

impl Default for MulticopterParams {
    fn default() -> Self {
        Self {
            e: 0.43,
            kappa: 0.20,
            walls: vec![Rect::new(2.5, 3.0, 0.0, 2.6), Rect::new(2.5, 3.0, 3.6, 5.0)],
            arena: Rect::new(0.0, 6.0, 0.0, 5.0),
            u_max: 3.0,
            v_max: 2.0,
            a_max: 2.0,
            contact_tol: 1e-6,
            x0: [1.0, 2.0, 0.0, 0.0, 0.0, 0.0],
            goal: [5.0, 4.0],
        }
    }
}

impl MulticopterParams {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.e > 0.0 && self.e < 1.0) {
            return Err(format!("e must lie in (0, 1), got {}", self.e));
        }
        if !(self.kappa >= 0.0) {
            return Err(format!("kappa must be nonnegative, got {}", self.kappa));
        }
        if !self.arena.is_valid() {
            return Err("arena is degenerate".into());
        }
        for (i, w) in self.walls.iter().enumerate() {
            if !w.is_valid() {
                return Err(format!("wall {i} is degenerate"));
            }
            let a = &self.arena;
            if w.x_min < a.x_min || w.x_max > a.x_max || w.y_min < a.y_min || w.y_max > a.y_max {
                return Err(format!("wall {i} leaves the arena"));
            }
        }
        if !(self.u_max > 0.0 && self.v_max > 0.0 && self.a_max > 0.0 && self.contact_tol > 0.0) {
            return Err("bounds and tolerances must be positive".into());
        }
        Ok(())
    }

    pub fn input_library(&self, max_flow_duration: f64) -> InputLibrary {
        InputLibrary::new(
            InputBox::new(vec![(-self.u_max, self.u_max); 2]).expect("u_max is positive"),
            max_flow_duration,
            InputBox::singleton(&[0.0, 0.0]),
        )
        .expect("positive flow duration")
    }

    pub fn default_planner_config(&self) -> PlannerConfig {
        PlannerConfig {
            p_n: 0.9,
            max_iterations: 20_000,
            delta_bn: 2.0,
            delta_s: 0.6,
            eps_final: 0.3,
            ..Default::default()
        }
    }

    pub fn default_flow_duration(&self) -> f64 {
        1.0
    }

    pub fn default_integrator(&self) -> IntegratorConfig {
        IntegratorConfig {
            step_size: 0.02,
            ..Default::default()
        }
    }
}

/// `v⁺` from `v⁻` at a face: the normal part is reflected and scaled by `e`,
/// the tangential part loses `κ (e + 1) |v_n| atan(v_t / v_n)`.
pub fn impact_velocity(contact: &WallContact, v: [f64; 2], e: f64, kappa: f64) -> [f64; 2] {
    let [v_n, v_t] = contact.to_frame(v);
    let v_n_post = -e * v_n;
    let v_t_post = if v_n == 0.0 {
        v_t
    } else {
        v_t + kappa * (-e - 1.0) * (v_t / v_n).atan() * v_n
    };
    contact.from_frame([v_n_post, v_t_post])
}

pub fn multicopter_system(params: &MulticopterParams) -> HybridSystemDef {
    let walls = Arc::new(params.walls.clone());
    let (e, kappa, tol) = (params.e, params.kappa, params.contact_tol);
    let (arena, v_max, a_max) = (params.arena, params.v_max, params.a_max);

    let w = walls.clone();
    let flow_excess = move |x: &[f64]| {
        w.iter()
            .map(|r| -r.signed_distance(x))
            .fold(f64::NEG_INFINITY, f64::max)
    };
    let fe = flow_excess.clone();

    let w = walls.clone();
    let jump_excess = move |x: &[f64]| {
        faces(&w)
            .map(|(_, f)| face_excess(&f, x))
            .fold(f64::INFINITY, f64::min)
    };
    let je = jump_excess.clone();

    let w = walls.clone();
    let jump_map = move |x: &[f64], _: &[f64]| {
        let contact = jump_face(&w, x).expect("jump set requires a wall");
        let v = impact_velocity(&contact, [x[2], x[3]], e, kappa);
        vec![x[0], x[1], v[0], v[1], 0.0, 0.0]
    };

    let w = walls.clone();
    let free_sampler = move |rng: &mut dyn rand::RngCore| loop {
        let p = [
            rng.random_range(arena.x_min..=arena.x_max),
            rng.random_range(arena.y_min..=arena.y_max),
        ];
        if w.iter().any(|r| r.contains_interior(&p)) {
            continue;
        }
        return vec![
            p[0],
            p[1],
            rng.random_range(-v_max..=v_max),
            rng.random_range(-v_max..=v_max),
            rng.random_range(-a_max..=a_max),
            rng.random_range(-a_max..=a_max),
        ];
    };

    let all_faces: Vec<(usize, Face)> = faces(&walls).collect();
    let total: f64 = all_faces.iter().map(|(_, f)| f.length()).sum();
    let contact_sampler = move |rng: &mut dyn rand::RngCore| {
        // face chosen with probability proportional to its length
        let mut r = rng.random::<f64>() * total;
        let (i, face) = *all_faces
            .iter()
            .find(|(_, f)| {
                r -= f.length();
                r < 0.0
            })
            .unwrap_or(all_faces.last().expect("at least one wall"));
        let s = rng.random::<f64>();
        let p = [
            face.a[0] + s * (face.b[0] - face.a[0]),
            face.a[1] + s * (face.b[1] - face.a[1]),
        ];
        let c = face.frame(i);
        // v_n in [-v_max, 0): strictly toward the wall
        let v_n = -v_max * (1.0 - rng.random::<f64>());
        let v_t = rng.random_range(-v_max..=v_max);
        let v = c.from_frame([v_n, v_t]);
        vec![
            p[0],
            p[1],
            v[0],
            v[1],
            rng.random_range(-a_max..=a_max),
            rng.random_range(-a_max..=a_max),
        ]
    };

    HybridSystemDef {
        name: "multicopter".into(),
        state_dim: 6,
        input_dim: 2,
        flow_set: Region::new(move |x, _| flow_excess(x)),
        flow_map: Arc::new(|x, u| vec![x[2], x[3], x[4], x[5], u[0], u[1]]),
        jump_set: Region::new(move |x, _| jump_excess(x)).with_level(tol),
        jump_map: Arc::new(jump_map),
        flow_proj: StateRegion::new(fe, free_sampler),
        jump_proj: StateRegion::new(je, contact_sampler).with_level(tol),
        bounding_box: vec![
            (arena.x_min, arena.x_max),
            (arena.y_min, arena.y_max),
            (-v_max, v_max),
            (-v_max, v_max),
            (-a_max, a_max),
            (-a_max, a_max),
        ],
    }
}

/// Positions outside the open arena or inside a wall are unsafe.
pub fn multicopter_unsafe(params: &MulticopterParams) -> UnsafeSet {
    let (arena, walls) = (params.arena, params.walls.clone());
    UnsafeSet::new(move |x, _| {
        x[0] <= arena.x_min
            || x[0] >= arena.x_max
            || x[1] <= arena.y_min
            || x[1] >= arena.y_max
            || walls.iter().any(|w| w.contains_interior(x))
    })
}

/// Fly from `x0` to within the goal position in least hybrid time.
pub fn multicopter_problem(params: &MulticopterParams) -> MotionPlanProblem {
    let goal = params.goal;
    MotionPlanProblem {
        system: multicopter_system(params),
        initial_set: InitialSet::singleton(params.x0.to_vec()),
        final_set: FinalSet::new(move |x| (x[0] - goal[0]).hypot(x[1] - goal[1])),
        unsafe_set: multicopter_unsafe(params),
        cost: Arc::new(HybridTimeCost),
    }
}

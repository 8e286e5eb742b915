//! Sparse tree search over hybrid solution pairs, with witness-based pruning
//! and a plain nearest-neighbor baseline.

mod cost;
mod tree;
mod witness;

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use cost::{AuxiliaryClockCost, CostFunctional, HybridTimeCost};
pub use tree::{Edge, SearchTree, Vertex, VertexId};
pub use witness::{
    is_vertex_locally_the_best, prune_dominated_vertices, PruneOutcome, Witness, WitnessSet,
};

use crate::hybrid::{
    euclidean, HybridArc, HybridError, HybridTime, MotionPlanProblem, SolutionPair, StateFn,
};
use crate::simulation::{InputLibrary, IntegratorConfig, Propagator, SimError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlannerMode {
    #[default]
    Hysst,
    HyrrtBaseline,
}

impl fmt::Display for PlannerMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PlannerMode::Hysst => "hysst",
            PlannerMode::HyrrtBaseline => "hyrrt_baseline",
        })
    }
}

impl std::str::FromStr for PlannerMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "hysst" => Ok(PlannerMode::Hysst),
            "hyrrt_baseline" | "baseline" => Ok(PlannerMode::HyrrtBaseline),
            other => Err(format!("unknown planner mode {other:?}")),
        }
    }
}

#[derive(Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlannerConfig {
    /// Probability of sampling the random state from `C′` rather than `D′`.
    pub p_n: f64,
    /// Iteration budget `K`.
    pub max_iterations: usize,
    pub delta_bn: f64,
    pub delta_s: f64,
    pub eps_final: f64,
    pub n_init_roots: usize,
    pub seed: u64,
    pub mode: PlannerMode,
    /// Probability of flowing from a vertex in both `C′` and `D′`.
    pub flow_coin: f64,
    /// Vertex constraint for flow-branch selection; defaults to `C′`.
    #[serde(skip)]
    pub flow_constraint: Option<StateFn<bool>>,
    /// Vertex constraint for jump-branch selection; defaults to `D′`.
    #[serde(skip)]
    pub jump_constraint: Option<StateFn<bool>>,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        Self {
            p_n: 0.5,
            max_iterations: 2000,
            delta_bn: 1.2,
            delta_s: 0.4,
            eps_final: 0.5,
            n_init_roots: 1,
            seed: 0,
            mode: PlannerMode::Hysst,
            flow_coin: 0.5,
            flow_constraint: None,
            jump_constraint: None,
        }
    }
}

impl fmt::Debug for PlannerConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PlannerConfig")
            .field("p_n", &self.p_n)
            .field("max_iterations", &self.max_iterations)
            .field("delta_bn", &self.delta_bn)
            .field("delta_s", &self.delta_s)
            .field("eps_final", &self.eps_final)
            .field("n_init_roots", &self.n_init_roots)
            .field("seed", &self.seed)
            .field("mode", &self.mode)
            .field("flow_coin", &self.flow_coin)
            .finish_non_exhaustive()
    }
}

impl PlannerConfig {
    pub fn validate(&self) -> Result<(), PlannerError> {
        let bad = |msg: String| Err(PlannerError::InvalidConfig(msg));
        if !(self.p_n > 0.0 && self.p_n < 1.0) {
            return bad(format!("p_n must lie in (0, 1), got {}", self.p_n));
        }
        for (name, v) in [
            ("delta_bn", self.delta_bn),
            ("delta_s", self.delta_s),
            ("eps_final", self.eps_final),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return bad(format!("{name} must be positive, got {v}"));
            }
        }
        if self.n_init_roots == 0 {
            return bad("n_init_roots must be at least 1".into());
        }
        if !(0.0..=1.0).contains(&self.flow_coin) {
            return bad(format!(
                "flow_coin must lie in [0, 1], got {}",
                self.flow_coin
            ));
        }
        Ok(())
    }

    /// Heuristic parameter warnings; the clearance of the optimal plan is
    /// unknown, so only the relation between the two radii is checked.
    pub fn warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.mode == PlannerMode::Hysst && self.delta_bn <= 2.0 * self.delta_s {
            out.push(format!(
                "delta_bn ({}) <= 2 * delta_s ({}): selection radius is small relative to the witness radius",
                self.delta_bn, self.delta_s
            ));
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PlannerError {
    #[error("invalid planner configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Hybrid(#[from] HybridError),
}

/// A path from a root to a vertex near `X_f` with its concatenated pair.
#[derive(Debug, Clone, PartialEq)]
pub struct MotionPlan {
    pub path: Vec<VertexId>,
    pub psi: SolutionPair,
    pub cost: f64,
    /// Iteration at which the plan was found; 0 means during initialisation.
    pub iteration: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IterationStats {
    pub iter: usize,
    pub n_active: usize,
    pub n_inactive: usize,
    pub n_witnesses: usize,
    pub best_cost: Option<f64>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counters {
    pub iterations: usize,
    pub admitted: usize,
    pub propagation_errors: usize,
    pub unsafe_rejections: usize,
    pub dominated_rejections: usize,
    pub removed: usize,
}

/// Outcome of one planner iteration.
#[derive(Debug, Clone, PartialEq)]
pub enum StepOutcome {
    Admitted {
        vertex: VertexId,
        prune: PruneOutcome,
    },
    Dominated,
    Unsafe,
    PropagationError(SimError),
}

#[derive(Debug, Clone)]
pub struct PlanResult {
    pub mode: PlannerMode,
    pub tree: SearchTree,
    pub witnesses: WitnessSet,
    pub best: Option<MotionPlan>,
    pub stats: Vec<IterationStats>,
    pub counters: Counters,
}

/// Uniform draw from `C′` when `flow` is set, else from `D′`.
pub fn random_state(
    problem: &MotionPlanProblem,
    flow: bool,
    rng: &mut dyn rand::RngCore,
) -> Vec<f64> {
    if flow {
        problem.system.flow_proj.sample(rng)
    } else {
        problem.system.jump_proj.sample(rng)
    }
}

/// Lowest-cost active vertex within `delta_bn` of `x_rand` whose state passes
/// `constraint`; if there is none, the active vertex nearest to `x_rand`.
/// Ties go to the lowest id.
pub fn best_near_selection(
    x_rand: &[f64],
    tree: &SearchTree,
    delta_bn: f64,
    constraint: &dyn Fn(&[f64]) -> bool,
) -> Option<VertexId> {
    let mut best: Option<(VertexId, f64)> = None;
    for id in tree.active_ids() {
        let v = tree.vertex(id).unwrap();
        if euclidean(&v.state, x_rand) <= delta_bn
            && constraint(&v.state)
            && best.is_none_or(|(_, c)| v.cost < c)
        {
            best = Some((id, v.cost));
        }
    }
    best.map(|(id, _)| id)
        .or_else(|| nearest_active(x_rand, tree))
}

/// Active vertex nearest to `x`, lowest id on ties.
pub fn nearest_active(x: &[f64], tree: &SearchTree) -> Option<VertexId> {
    let mut best: Option<(VertexId, f64)> = None;
    for id in tree.active_ids() {
        let d = euclidean(&tree.vertex(id).unwrap().state, x);
        if best.is_none_or(|(_, bd)| d < bd) {
            best = Some((id, d));
        }
    }
    best.map(|(id, _)| id)
}

/// Samples `n_init_roots` points of `X_0` and keeps those that are locally
/// best; the rest are discarded.
pub fn tree_init(
    problem: &MotionPlanProblem,
    n_init_roots: usize,
    delta_s: f64,
    rng: &mut dyn rand::RngCore,
) -> (SearchTree, WitnessSet) {
    let mut tree = SearchTree::new();
    let mut witnesses = WitnessSet::new();
    for _ in 0..n_init_roots {
        let x0 = problem.initial_set.sample(rng);
        let v0 = tree.add_root(x0.clone(), false);
        match is_vertex_locally_the_best(&x0, 0.0, &mut witnesses, delta_s, &tree) {
            Some(w) => {
                prune_dominated_vertices(v0, w, &mut witnesses, &mut tree);
            }
            None => {
                tree.remove_leaf(v0);
            }
        }
    }
    (tree, witnesses)
}

/// Path and concatenated pair to `leaf`, if it is within `eps` of `X_f`.
pub fn solution_check(
    tree: &SearchTree,
    problem: &MotionPlanProblem,
    leaf: VertexId,
    eps: f64,
) -> Result<Option<MotionPlan>, HybridError> {
    let v = tree.vertex(leaf).expect("candidate exists");
    if !(problem.final_set.distance(&v.state) <= eps) {
        return Ok(None);
    }
    let path = tree.path_to(leaf);
    let root = tree.vertex(path[0]).unwrap();
    if !(problem.initial_set.contains)(&root.state) {
        return Ok(None);
    }
    Ok(Some(MotionPlan {
        psi: concatenate_path(tree, problem, &path)?,
        path,
        cost: v.cost,
        iteration: 0,
    }))
}

fn concatenate_path(
    tree: &SearchTree,
    problem: &MotionPlanProblem,
    path: &[VertexId],
) -> Result<SolutionPair, HybridError> {
    let mut edges = path[1..].iter().map(|&id| &tree.edge_into(id).unwrap().psi);
    let Some(first) = edges.next() else {
        let x = &tree.vertex(path[0]).unwrap().state;
        let u = vec![0.0; problem.system.input_dim];
        return SolutionPair::new(
            HybridArc::from_samples(x.len(), [(HybridTime::ZERO, x.clone())])?,
            HybridArc::from_samples(u.len(), [(HybridTime::ZERO, u)])?,
        );
    };
    let mut psi = first.clone();
    let mut prev = first;
    for next in edges {
        if prev.is_purely_continuous() && next.is_purely_continuous() {
            let x = next.state().initial();
            let u = next.input().value_at(HybridTime::ZERO).unwrap();
            debug_assert!(
                problem.system.flow_set.margin(x, &u) <= 1e-6,
                "consecutive flows must meet inside the flow set"
            );
        }
        psi = psi.concatenate(next)?;
        prev = next;
    }
    Ok(psi)
}

/// The main search loop. Construct with [`Planner::new`], then call
/// [`Planner::step`] repeatedly or [`Planner::run`] once.
pub struct Planner<'a> {
    problem: &'a MotionPlanProblem,
    library: &'a InputLibrary,
    integrator: IntegratorConfig,
    config: PlannerConfig,
    rng: ChaCha8Rng,
    tree: SearchTree,
    witnesses: WitnessSet,
    best: Option<MotionPlan>,
    stats: Vec<IterationStats>,
    counters: Counters,
}

impl<'a> Planner<'a> {
    pub fn new(
        problem: &'a MotionPlanProblem,
        library: &'a InputLibrary,
        integrator: IntegratorConfig,
        config: PlannerConfig,
    ) -> Result<Self, PlannerError> {
        config.validate()?;
        integrator
            .validate()
            .map_err(|e| PlannerError::InvalidConfig(e.to_string()))?;
        for w in config.warnings() {
            log::warn!("{w}");
        }
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let (tree, witnesses) = match config.mode {
            PlannerMode::Hysst => tree_init(problem, config.n_init_roots, config.delta_s, &mut rng),
            PlannerMode::HyrrtBaseline => {
                let mut tree = SearchTree::new();
                for _ in 0..config.n_init_roots {
                    tree.add_root(problem.initial_set.sample(&mut rng), true);
                }
                (tree, WitnessSet::new())
            }
        };
        let mut planner = Self {
            problem,
            library,
            integrator,
            config,
            rng,
            tree,
            witnesses,
            best: None,
            stats: Vec::new(),
            counters: Counters::default(),
        };
        let roots: Vec<VertexId> = planner.tree.active_ids().collect();
        for r in roots {
            planner.offer_plan(r)?;
        }
        Ok(planner)
    }

    pub fn tree(&self) -> &SearchTree {
        &self.tree
    }

    pub fn witnesses(&self) -> &WitnessSet {
        &self.witnesses
    }

    pub fn best(&self) -> Option<&MotionPlan> {
        self.best.as_ref()
    }

    pub fn stats(&self) -> &[IterationStats] {
        &self.stats
    }

    pub fn counters(&self) -> &Counters {
        &self.counters
    }

    pub fn config(&self) -> &PlannerConfig {
        &self.config
    }

    pub fn iteration(&self) -> usize {
        self.counters.iterations
    }

    fn offer_plan(&mut self, vertex: VertexId) -> Result<(), HybridError> {
        let better = |c: f64, best: &Option<MotionPlan>| best.as_ref().is_none_or(|b| c < b.cost);
        let cost = self.tree.vertex(vertex).unwrap().cost;
        if !better(cost, &self.best) {
            return Ok(());
        }
        if let Some(mut plan) =
            solution_check(&self.tree, self.problem, vertex, self.config.eps_final)?
        {
            plan.iteration = self.counters.iterations;
            log::debug!(
                "iteration {}: plan with cost {:.4} through {} vertices",
                plan.iteration,
                plan.cost,
                plan.path.len()
            );
            self.best = Some(plan);
        }
        Ok(())
    }

    /// One iteration of the search loop.
    pub fn step(&mut self) -> Result<StepOutcome, PlannerError> {
        self.counters.iterations += 1;
        let outcome = self.extend()?;
        match &outcome {
            StepOutcome::Admitted { prune, .. } => {
                self.counters.admitted += 1;
                self.counters.removed += prune.removed.len();
            }
            StepOutcome::Dominated => self.counters.dominated_rejections += 1,
            StepOutcome::Unsafe => self.counters.unsafe_rejections += 1,
            StepOutcome::PropagationError(e) => {
                log::trace!("propagation failed: {e}");
                self.counters.propagation_errors += 1;
            }
        }
        self.stats.push(IterationStats {
            iter: self.counters.iterations,
            n_active: self.tree.n_active(),
            n_inactive: self.tree.n_inactive(),
            n_witnesses: self.witnesses.len(),
            best_cost: self.best.as_ref().map(|b| b.cost),
        });
        Ok(outcome)
    }

    fn extend(&mut self) -> Result<StepOutcome, PlannerError> {
        let problem = self.problem;
        let flow = self.rng.random::<f64>() <= self.config.p_n;
        let x_rand = random_state(problem, flow, &mut self.rng);
        let v_cur = match self.config.mode {
            PlannerMode::Hysst => {
                let system = &problem.system;
                let custom = if flow {
                    self.config.flow_constraint.as_ref()
                } else {
                    self.config.jump_constraint.as_ref()
                };
                let default = |x: &[f64]| {
                    if flow {
                        system.flow_proj.contains(x)
                    } else {
                        system.jump_proj.contains(x)
                    }
                };
                match custom {
                    Some(c) => best_near_selection(&x_rand, &self.tree, self.config.delta_bn, &**c),
                    None => {
                        best_near_selection(&x_rand, &self.tree, self.config.delta_bn, &default)
                    }
                }
            }
            PlannerMode::HyrrtBaseline => nearest_active(&x_rand, &self.tree),
        };
        let Some(v_cur) = v_cur else {
            return Ok(StepOutcome::PropagationError(SimError::NeitherSet));
        };

        let propagator = Propagator {
            system: &problem.system,
            library: self.library,
            unsafe_set: &problem.unsafe_set,
            cost: problem.cost.as_ref(),
            integrator: &self.integrator,
            flow_probability: self.config.flow_coin,
        };
        let cur = self.tree.vertex(v_cur).unwrap();
        let result = match propagator.new_state(&cur.state, cur.cost, &mut self.rng) {
            Ok(r) => r,
            Err(e) => return Ok(StepOutcome::PropagationError(e)),
        };
        if !result.generated {
            return Ok(StepOutcome::Unsafe);
        }

        let (vertex, prune) = match self.config.mode {
            PlannerMode::Hysst => {
                let Some(w) = is_vertex_locally_the_best(
                    &result.x_new,
                    result.cost_new,
                    &mut self.witnesses,
                    self.config.delta_s,
                    &self.tree,
                ) else {
                    return Ok(StepOutcome::Dominated);
                };
                let v =
                    self.tree
                        .add_vertex(v_cur, result.x_new, result.cost_new, result.psi, false);
                let prune = prune_dominated_vertices(v, w, &mut self.witnesses, &mut self.tree);
                (v, prune)
            }
            PlannerMode::HyrrtBaseline => {
                let v =
                    self.tree
                        .add_vertex(v_cur, result.x_new, result.cost_new, result.psi, true);
                (v, PruneOutcome::default())
            }
        };
        self.offer_plan(vertex)?;
        Ok(StepOutcome::Admitted { vertex, prune })
    }

    /// Runs the remaining iterations of the budget.
    pub fn run(mut self) -> Result<PlanResult, PlannerError> {
        while self.counters.iterations < self.config.max_iterations {
            self.step()?;
        }
        Ok(self.finish())
    }

    pub fn finish(self) -> PlanResult {
        PlanResult {
            mode: self.config.mode,
            tree: self.tree,
            witnesses: self.witnesses,
            best: self.best,
            stats: self.stats,
            counters: self.counters,
        }
    }

    /// Structural invariants of the current tree and witness set.
    pub fn audit(&self) -> Vec<String> {
        audit(
            &self.tree,
            &self.witnesses,
            self.config.mode,
            self.config.delta_s,
            self.problem.cost.as_ref(),
        )
    }
}

/// Runs a full search with the given configuration.
pub fn hysst_plan(
    problem: &MotionPlanProblem,
    library: &InputLibrary,
    integrator: IntegratorConfig,
    config: PlannerConfig,
) -> Result<PlanResult, PlannerError> {
    Planner::new(problem, library, integrator, config)?.run()
}

/// Checks witness sparsity, the active/representative bijection, absence of
/// inactive leaves and edge consistency. Returns one message per violation.
pub fn audit(
    tree: &SearchTree,
    witnesses: &WitnessSet,
    mode: PlannerMode,
    delta_s: f64,
    cost: &dyn CostFunctional,
) -> Vec<String> {
    let mut out = Vec::new();
    if mode == PlannerMode::Hysst {
        let ws: Vec<&Witness> = witnesses.iter().collect();
        for i in 0..ws.len() {
            for k in i + 1..ws.len() {
                let d = euclidean(&ws[i].point, &ws[k].point);
                if !(d > delta_s) {
                    out.push(format!("witnesses {i} and {k} are {d} apart"));
                }
            }
        }
        let mut reps: Vec<VertexId> = ws.iter().filter_map(|w| w.rep).collect();
        for (i, w) in ws.iter().enumerate() {
            if let Some(r) = w.rep {
                match tree.vertex(r) {
                    Some(v) if euclidean(&v.state, &w.point) > delta_s => out.push(format!(
                        "witness {i} is farther than delta_s from its rep {r}"
                    )),
                    None => out.push(format!("witness {i} points at missing vertex {r}")),
                    _ => {}
                }
            }
        }
        reps.sort_unstable();
        let n_reps = reps.len();
        reps.dedup();
        if reps.len() != n_reps {
            out.push("a vertex represents two witnesses".into());
        }
        let active: Vec<VertexId> = tree.active_ids().collect();
        if active != reps {
            out.push(format!(
                "active set ({} vertices) differs from representatives ({})",
                active.len(),
                reps.len()
            ));
        }
        for v in tree.vertices() {
            if !v.active && tree.is_leaf(v.id) {
                out.push(format!("inactive leaf {}", v.id));
            }
        }
    }
    for v in tree.vertices() {
        if v.active != tree.is_active(v.id) {
            out.push(format!("vertex {} has a stale active flag", v.id));
        }
        if !(v.cost >= 0.0) {
            out.push(format!("vertex {} has cost {}", v.id, v.cost));
        }
        match (v.parent, tree.edge_into(v.id)) {
            (None, None) => {
                if v.cost != 0.0 {
                    out.push(format!("root {} has cost {}", v.id, v.cost));
                }
            }
            (Some(p), Some(e)) => {
                let Some(from) = tree.vertex(p) else {
                    out.push(format!("vertex {} has missing parent {p}", v.id));
                    continue;
                };
                if e.from != p || e.to != v.id {
                    out.push(format!("edge into {} is mislabelled", v.id));
                }
                if e.psi.state().initial() != from.state.as_slice()
                    || e.psi.state().terminal() != v.state.as_slice()
                {
                    out.push(format!(
                        "edge {p}->{} endpoints differ from vertex states",
                        v.id
                    ));
                }
                let gap = (v.cost - from.cost - cost.evaluate(e.psi.state())).abs();
                if gap > 1e-9 {
                    out.push(format!("edge {p}->{} cost mismatch {gap:e}", v.id));
                }
            }
            _ => out.push(format!("vertex {} parent and edge disagree", v.id)),
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::systems::{bouncing_ball_problem, BouncingBallParams};

    #[test]
    fn best_near_prefers_cheapest_in_ball() {
        let mut t = SearchTree::new();
        let r = t.add_root(vec![-100.0], false);
        let mk = |a: f64, b: f64| {
            let s = HybridArc::from_samples(
                1,
                [
                    (HybridTime::new(0.0, 0), vec![a]),
                    (HybridTime::new(1.0, 0), vec![b]),
                ],
            )
            .unwrap();
            SolutionPair::new(s, HybridArc::constant(&[0.0], &[0.0, 1.0]).unwrap()).unwrap()
        };
        let a = t.add_vertex(r, vec![0.0], 5.0, mk(-100.0, 0.0), true);
        let b = t.add_vertex(r, vec![0.5], 3.0, mk(-100.0, 0.5), true);
        let c = t.add_vertex(r, vec![2.0], 7.0, mk(-100.0, 2.0), true);
        let any = |_: &[f64]| true;
        assert_eq!(best_near_selection(&[0.4], &t, 0.6, &any), Some(b));
        assert_eq!(best_near_selection(&[10.0], &t, 0.6, &any), Some(c));
        // constraint excludes b
        let no_b = |x: &[f64]| x[0] != 0.5;
        assert_eq!(best_near_selection(&[0.4], &t, 0.6, &no_b), Some(a));
    }

    #[test]
    fn zero_budget_leaves_only_roots() {
        let problem = bouncing_ball_problem(&BouncingBallParams::default());
        let lib = BouncingBallParams::default().input_library(0.5);
        let config = PlannerConfig {
            max_iterations: 0,
            ..Default::default()
        };
        let r = hysst_plan(&problem, &lib, IntegratorConfig::default(), config).unwrap();
        assert_eq!(r.tree.len(), 1);
        assert_eq!(r.witnesses.len(), 1);
        assert!(r.best.is_none());
        assert!(r.stats.is_empty());
    }

    #[test]
    fn duplicate_roots_collapse() {
        let problem = bouncing_ball_problem(&BouncingBallParams::default());
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let (tree, w) = tree_init(&problem, 3, 0.4, &mut rng);
        assert_eq!(tree.len(), 1);
        assert_eq!(w.len(), 1);
        assert_eq!(w.get(0).rep, Some(0));
    }

    #[test]
    fn rejects_bad_config() {
        let bad = PlannerConfig {
            p_n: 1.0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let warn = PlannerConfig {
            delta_bn: 0.5,
            delta_s: 0.4,
            ..Default::default()
        };
        assert_eq!(warn.warnings().len(), 1);
    }
}

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::BenchError;
use crate::hybrid::{HybridArc, HybridTime, SolutionPair};
use crate::planner::{MotionPlan, SearchTree, Vertex, VertexId, Witness, WitnessSet};
use crate::systems::Rect;

/// A solution pair on disk.
///
/// `domain` rows are `[t_start, t_end, j]`; `states` and `inputs` rows are
/// `[t, j, values...]` in hybrid-time order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PairFile {
    pub domain: Vec<[f64; 3]>,
    pub states: Vec<Vec<f64>>,
    pub inputs: Vec<Vec<f64>>,
}

fn arc_rows(arc: &HybridArc) -> Vec<Vec<f64>> {
    arc.samples()
        .map(|(time, x)| {
            let mut row = Vec::with_capacity(x.len() + 2);
            row.push(time.t);
            row.push(time.j as f64);
            row.extend_from_slice(x);
            row
        })
        .collect()
}

fn arc_from_rows(rows: &[Vec<f64>], what: &str) -> Result<HybridArc, BenchError> {
    let bad = |msg: String| BenchError::Format(format!("{what}: {msg}"));
    let first = rows.first().ok_or_else(|| bad("no samples".into()))?;
    if first.len() < 2 {
        return Err(bad("rows need at least t and j".into()));
    }
    let dim = first.len() - 2;
    let mut samples = Vec::with_capacity(rows.len());
    for row in rows {
        if row.len() != dim + 2 {
            return Err(bad(format!(
                "row of length {} (expected {})",
                row.len(),
                dim + 2
            )));
        }
        let j = row[1];
        if !(j >= 0.0 && j.fract() == 0.0) {
            return Err(bad(format!("jump index {j} is not a nonnegative integer")));
        }
        samples.push((HybridTime::new(row[0], j as usize), row[2..].to_vec()));
    }
    HybridArc::from_samples(dim, samples).map_err(|e| bad(e.to_string()))
}

impl PairFile {
    pub fn from_pair(psi: &SolutionPair) -> Self {
        let b = psi.domain().boundaries();
        let domain = (0..psi.domain().num_intervals())
            .map(|j| [b[j], b[j + 1], j as f64])
            .collect();
        Self {
            domain,
            states: arc_rows(psi.state()),
            inputs: arc_rows(psi.input()),
        }
    }

    /// Rebuilds the pair, rejecting files whose `domain` disagrees with the
    /// sample rows.
    pub fn to_pair(&self) -> Result<SolutionPair, BenchError> {
        let state = arc_from_rows(&self.states, "states")?;
        let input = arc_from_rows(&self.inputs, "inputs")?;
        let psi = SolutionPair::new(state, input)
            .map_err(|e| BenchError::Format(format!("solution pair: {e}")))?;
        if Self::from_pair(&psi).domain != self.domain {
            return Err(BenchError::Format(
                "domain does not match the sample rows".into(),
            ));
        }
        Ok(psi)
    }
}

/// A motion plan on disk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanFile {
    pub system: String,
    pub cost: f64,
    pub iteration: usize,
    pub path: Vec<VertexId>,
    pub psi: PairFile,
}

impl PlanFile {
    pub fn new(system: &str, plan: &MotionPlan) -> Self {
        Self {
            system: system.into(),
            cost: plan.cost,
            iteration: plan.iteration,
            path: plan.path.clone(),
            psi: PairFile::from_pair(&plan.psi),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeRecord {
    pub from: VertexId,
    pub to: VertexId,
    /// `[t_start, t_end, j]` rows of the edge's domain.
    pub domain: Vec<[f64; 3]>,
    /// Full solution pair, present only in dumps written with arcs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub psi: Option<PairFile>,
}

/// Search tree and witnesses on disk.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TreeDump {
    pub vertices: Vec<Vertex>,
    pub edges: Vec<EdgeRecord>,
    pub witnesses: Vec<Witness>,
}

impl TreeDump {
    pub fn new(tree: &SearchTree, witnesses: &WitnessSet, with_arcs: bool) -> Self {
        let edges = tree
            .edges()
            .map(|e| {
                let file = PairFile::from_pair(&e.psi);
                EdgeRecord {
                    from: e.from,
                    to: e.to,
                    domain: file.domain.clone(),
                    psi: with_arcs.then_some(file),
                }
            })
            .collect();
        Self {
            vertices: tree.vertices().cloned().collect(),
            edges,
            witnesses: witnesses.iter().cloned().collect(),
        }
    }
}

pub fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<(), BenchError> {
    let text = serde_json::to_string_pretty(value)
        .map_err(|e| BenchError::Format(format!("{}: {e}", path.display())))?;
    fs::write(path, text + "\n").map_err(|e| BenchError::io(path, e))
}

pub fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, BenchError> {
    let text = fs::read_to_string(path).map_err(|e| BenchError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| BenchError::Format(format!("{}: {e}", path.display())))
}

/// Reads a wall layout: a JSON list of `{x_min, x_max, y_min, y_max}`.
pub fn read_walls(path: &Path) -> Result<Vec<Rect>, BenchError> {
    read_json(path)
}

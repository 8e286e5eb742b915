use serde::{Deserialize, Serialize};

use super::tree::{SearchTree, VertexId};
use crate::hybrid::euclidean;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub point: Vec<f64>,
    pub rep: Option<VertexId>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct WitnessSet {
    witnesses: Vec<Witness>,
}

impl WitnessSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.witnesses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.witnesses.is_empty()
    }

    pub fn get(&self, index: usize) -> &Witness {
        &self.witnesses[index]
    }

    pub fn iter(&self) -> impl Iterator<Item = &Witness> + '_ {
        self.witnesses.iter()
    }

    /// Index of and distance to the closest witness; the lowest index wins ties.
    pub fn nearest(&self, x: &[f64]) -> Option<(usize, f64)> {
        let mut best: Option<(usize, f64)> = None;
        for (i, w) in self.witnesses.iter().enumerate() {
            let d = euclidean(&w.point, x);
            if best.is_none_or(|(_, bd)| d < bd) {
                best = Some((i, d));
            }
        }
        best
    }

    pub fn insert(&mut self, point: Vec<f64>) -> usize {
        self.witnesses.push(Witness { point, rep: None });
        self.witnesses.len() - 1
    }

    pub fn set_rep(&mut self, index: usize, rep: VertexId) {
        self.witnesses[index].rep = Some(rep);
    }
}

/// Finds the witness closest to `x`, creating one at `x` if none lies within
/// `delta_s`. Returns that witness's index when `x` at `cost` would beat its
/// current representative (or it has none), and `None` otherwise.
pub fn is_vertex_locally_the_best(
    x: &[f64],
    cost: f64,
    witnesses: &mut WitnessSet,
    delta_s: f64,
    tree: &SearchTree,
) -> Option<usize> {
    let index = match witnesses.nearest(x) {
        Some((i, d)) if d <= delta_s => i,
        _ => witnesses.insert(x.to_vec()),
    };
    match witnesses.get(index).rep {
        None => Some(index),
        Some(rep) => {
            let rep_cost = tree.vertex(rep).expect("representative exists").cost;
            (cost < rep_cost).then_some(index)
        }
    }
}

/// What a call to [`prune_dominated_vertices`] changed.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PruneOutcome {
    /// The previous representative, now inactive (possibly also removed).
    pub deactivated: Option<VertexId>,
    /// Vertices deleted by the leaf cascade, in deletion order.
    pub removed: Vec<VertexId>,
}

/// Makes `v_new` the representative of witness `index`, deactivates the
/// previous one and deletes inactive leaves up the tree from it.
pub fn prune_dominated_vertices(
    v_new: VertexId,
    index: usize,
    witnesses: &mut WitnessSet,
    tree: &mut SearchTree,
) -> PruneOutcome {
    let peer = witnesses.get(index).rep;
    if let Some(p) = peer {
        tree.set_active(p, false);
    }
    witnesses.set_rep(index, v_new);
    tree.set_active(v_new, true);

    let mut removed = Vec::new();
    let mut cur = peer;
    while let Some(p) = cur {
        if !tree.is_leaf(p) || tree.is_active(p) {
            break;
        }
        cur = tree.remove_leaf(p);
        removed.push(p);
    }
    PruneOutcome {
        deactivated: peer,
        removed,
    }
}

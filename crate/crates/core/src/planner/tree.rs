use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::hybrid::SolutionPair;

pub type VertexId = usize;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Vertex {
    pub id: VertexId,
    pub state: Vec<f64>,
    pub cost: f64,
    pub parent: Option<VertexId>,
    pub active: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Edge {
    pub from: VertexId,
    pub to: VertexId,
    pub psi: SolutionPair,
}

/// Vertices live in id-indexed slots; ids are never reused, so removal leaves
/// a hole and iteration order is always by id.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SearchTree {
    slots: Vec<Option<Vertex>>,
    incoming: Vec<Option<Edge>>,
    children: Vec<Vec<VertexId>>,
    active: BTreeSet<VertexId>,
    len: usize,
}

impl SearchTree {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_root(&mut self, state: Vec<f64>, active: bool) -> VertexId {
        self.push(state, 0.0, None, active)
    }

    /// Adds `edge.to` with the given cost and connects it under `from`.
    pub fn add_vertex(
        &mut self,
        from: VertexId,
        state: Vec<f64>,
        cost: f64,
        psi: SolutionPair,
        active: bool,
    ) -> VertexId {
        assert!(self.contains(from), "parent {from} is not in the tree");
        let id = self.push(state, cost, Some(from), active);
        self.children[from].push(id);
        self.incoming[id] = Some(Edge { from, to: id, psi });
        id
    }

    fn push(
        &mut self,
        state: Vec<f64>,
        cost: f64,
        parent: Option<VertexId>,
        active: bool,
    ) -> VertexId {
        let id = self.slots.len();
        self.slots.push(Some(Vertex {
            id,
            state,
            cost,
            parent,
            active,
        }));
        self.incoming.push(None);
        self.children.push(Vec::new());
        if active {
            self.active.insert(id);
        }
        self.len += 1;
        id
    }

    pub fn contains(&self, id: VertexId) -> bool {
        matches!(self.slots.get(id), Some(Some(_)))
    }

    pub fn vertex(&self, id: VertexId) -> Option<&Vertex> {
        self.slots.get(id).and_then(Option::as_ref)
    }

    /// The edge ending at `id`; roots have none.
    pub fn edge_into(&self, id: VertexId) -> Option<&Edge> {
        self.incoming.get(id).and_then(Option::as_ref)
    }

    pub fn children(&self, id: VertexId) -> &[VertexId] {
        &self.children[id]
    }

    pub fn is_leaf(&self, id: VertexId) -> bool {
        self.children[id].is_empty()
    }

    pub fn is_active(&self, id: VertexId) -> bool {
        self.active.contains(&id)
    }

    pub fn set_active(&mut self, id: VertexId, active: bool) {
        let v = self.slots[id].as_mut().expect("vertex exists");
        v.active = active;
        if active {
            self.active.insert(id);
        } else {
            self.active.remove(&id);
        }
    }

    /// Deletes a leaf and its incoming edge, returning its parent.
    pub fn remove_leaf(&mut self, id: VertexId) -> Option<VertexId> {
        assert!(self.is_leaf(id), "vertex {id} has children");
        let v = self.slots[id].take().expect("vertex exists");
        self.incoming[id] = None;
        self.active.remove(&id);
        self.len -= 1;
        if let Some(p) = v.parent {
            self.children[p].retain(|&c| c != id);
        }
        v.parent
    }

    pub fn vertices(&self) -> impl Iterator<Item = &Vertex> + '_ {
        self.slots.iter().flatten()
    }

    pub fn edges(&self) -> impl Iterator<Item = &Edge> + '_ {
        self.incoming.iter().flatten()
    }

    pub fn active_ids(&self) -> impl Iterator<Item = VertexId> + '_ {
        self.active.iter().copied()
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn n_active(&self) -> usize {
        self.active.len()
    }

    pub fn n_inactive(&self) -> usize {
        self.len - self.active.len()
    }

    /// Vertex ids from the root down to `id`.
    pub fn path_to(&self, id: VertexId) -> Vec<VertexId> {
        let mut path = vec![id];
        let mut cur = id;
        while let Some(p) = self.vertex(cur).and_then(|v| v.parent) {
            path.push(p);
            cur = p;
        }
        path.reverse();
        path
    }
}

use serde::{Deserialize, Serialize};

use super::HybridError;

/// A hybrid time instant: elapsed flow time `t` and jump count `j`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HybridTime {
    pub t: f64,
    pub j: usize,
}

impl HybridTime {
    pub const ZERO: HybridTime = HybridTime { t: 0.0, j: 0 };

    pub fn new(t: f64, j: usize) -> Self {
        Self { t, j }
    }

    /// `t + j`, the quantity bounded by `tau` in closeness checks.
    pub fn magnitude(&self) -> f64 {
        self.t + self.j as f64
    }
}

/// A compact hybrid time domain `⋃_{j=0}^{J} [t_j, t_{j+1}] × {j}`.
///
/// Stored as the boundary sequence `0 = t_0 ≤ t_1 ≤ … ≤ t_{J+1} = T`; interval
/// `j` is `[boundaries[j], boundaries[j + 1]]`.
#[derive(Debug, Clone, PartialEq)]
pub struct HybridTimeDomain {
    boundaries: Vec<f64>,
}

impl HybridTimeDomain {
    pub fn new(boundaries: Vec<f64>) -> Result<Self, HybridError> {
        if boundaries.len() < 2 {
            return Err(HybridError::InvalidDomain(
                "at least two boundaries are required".into(),
            ));
        }
        if boundaries[0] != 0.0 {
            return Err(HybridError::InvalidDomain(format!(
                "domain must start at t = 0, got {}",
                boundaries[0]
            )));
        }
        if boundaries.iter().any(|t| !t.is_finite()) {
            return Err(HybridError::InvalidDomain("non-finite boundary".into()));
        }
        if boundaries.windows(2).any(|w| w[1] < w[0]) {
            return Err(HybridError::InvalidDomain(
                "boundaries must be nondecreasing".into(),
            ));
        }
        Ok(Self { boundaries })
    }

    /// The single-point domain `{(0, 0)}`.
    pub fn point() -> Self {
        Self {
            boundaries: vec![0.0, 0.0],
        }
    }

    /// A purely continuous domain `[0, duration] × {0}`.
    pub fn interval(duration: f64) -> Result<Self, HybridError> {
        Self::new(vec![0.0, duration])
    }

    pub fn boundaries(&self) -> &[f64] {
        &self.boundaries
    }

    pub fn num_intervals(&self) -> usize {
        self.boundaries.len() - 1
    }

    /// Number of jumps `J`.
    pub fn jumps(&self) -> usize {
        self.boundaries.len() - 2
    }

    /// `[t_j, t_{j+1}]`, if `j ≤ J`.
    pub fn interval_bounds(&self, j: usize) -> Option<(f64, f64)> {
        (j < self.num_intervals()).then(|| (self.boundaries[j], self.boundaries[j + 1]))
    }

    /// `max dom = (T, J)`.
    pub fn max(&self) -> HybridTime {
        HybridTime::new(*self.boundaries.last().unwrap(), self.jumps())
    }

    pub fn end_time(&self) -> f64 {
        *self.boundaries.last().unwrap()
    }

    pub fn contains(&self, time: HybridTime) -> bool {
        match self.interval_bounds(time.j) {
            Some((lo, hi)) => lo <= time.t && time.t <= hi,
            None => false,
        }
    }

    /// True when the domain is the single point `{(0, 0)}`.
    pub fn is_point(&self) -> bool {
        self.boundaries.len() == 2 && self.boundaries[1] == 0.0
    }

    /// `dom self ∪ (dom other + {(T, J)})`.
    pub fn concatenate(&self, other: &HybridTimeDomain) -> HybridTimeDomain {
        let shift = self.end_time();
        let mut boundaries = self.boundaries[..self.boundaries.len() - 1].to_vec();
        boundaries.extend(other.boundaries[1..].iter().map(|t| t + shift));
        HybridTimeDomain { boundaries }
    }

    /// `dom self ∩ ([from.t, to.t] × {from.j, …, to.j}) − {(from.t, from.j)}`.
    ///
    /// Both endpoints must lie in the domain and be ordered.
    pub fn truncate(
        &self,
        from: HybridTime,
        to: HybridTime,
    ) -> Result<HybridTimeDomain, HybridError> {
        for time in [from, to] {
            if !self.contains(time) {
                return Err(HybridError::OutsideDomain {
                    t: time.t,
                    j: time.j,
                });
            }
        }
        if from.t > to.t || from.j > to.j {
            return Err(HybridError::UnorderedTruncation);
        }
        let mut boundaries = Vec::with_capacity(to.j - from.j + 2);
        boundaries.push(0.0);
        for j in from.j + 1..=to.j {
            boundaries.push(self.boundaries[j] - from.t);
        }
        boundaries.push(to.t - from.t);
        Ok(HybridTimeDomain { boundaries })
    }
}

use super::time::{HybridTime, HybridTimeDomain};
use super::HybridError;

/// Absolute tolerance on the state gap when concatenating solution pairs.
pub const ENDPOINT_TOL: f64 = 1e-9;

/// Samples recorded on one interval `[t_j, t_{j+1}] × {j}` of a hybrid arc.
///
/// Values are stored row-major, `dim` entries per sample.
#[derive(Debug, Clone, PartialEq)]
pub struct Segment {
    times: Vec<f64>,
    values: Vec<f64>,
}

impl Segment {
    pub fn new(times: Vec<f64>, values: Vec<f64>) -> Self {
        Self { times, values }
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    fn value(&self, k: usize, dim: usize) -> &[f64] {
        &self.values[k * dim..(k + 1) * dim]
    }

    fn push(&mut self, t: f64, value: &[f64]) {
        self.times.push(t);
        self.values.extend_from_slice(value);
    }

    fn pop(&mut self, dim: usize) {
        self.times.pop();
        self.values.truncate(self.values.len() - dim);
    }

    fn shifted(&self, dt: f64) -> Segment {
        Segment {
            times: self.times.iter().map(|t| t + dt).collect(),
            values: self.values.clone(),
        }
    }
}

/// A sampled hybrid arc `φ: dom φ → Rⁿ`.
///
/// Each interval of the domain carries at least one sample; the first sample
/// of interval `j` sits at `t_j` and the last at `t_{j+1}`, with strictly
/// increasing times in between. Values between samples are read by linear
/// interpolation.
#[derive(Debug, Clone, PartialEq)]
pub struct HybridArc {
    domain: HybridTimeDomain,
    dim: usize,
    segments: Vec<Segment>,
}

impl HybridArc {
    pub fn new(
        domain: HybridTimeDomain,
        dim: usize,
        segments: Vec<Segment>,
    ) -> Result<Self, HybridError> {
        if segments.len() != domain.num_intervals() {
            return Err(HybridError::InvalidArc(format!(
                "{} segments for {} intervals",
                segments.len(),
                domain.num_intervals()
            )));
        }
        for (j, seg) in segments.iter().enumerate() {
            let (lo, hi) = domain.interval_bounds(j).unwrap();
            if seg.times.is_empty() {
                return Err(HybridError::InvalidArc(format!(
                    "interval {j} has no samples"
                )));
            }
            if seg.values.len() != seg.times.len() * dim {
                return Err(HybridError::InvalidArc(format!(
                    "interval {j}: {} values for {} samples of dimension {dim}",
                    seg.values.len(),
                    seg.times.len()
                )));
            }
            if seg.times[0] != lo || *seg.times.last().unwrap() != hi {
                return Err(HybridError::InvalidArc(format!(
                    "interval {j}: samples must span [{lo}, {hi}]"
                )));
            }
            if seg.times.windows(2).any(|w| w[1] <= w[0]) {
                return Err(HybridError::InvalidArc(format!(
                    "interval {j}: sample times must strictly increase"
                )));
            }
            if seg.values.iter().any(|v| !v.is_finite()) {
                return Err(HybridError::InvalidArc(format!(
                    "interval {j}: non-finite value"
                )));
            }
        }
        Ok(Self {
            domain,
            dim,
            segments,
        })
    }

    /// Builds an arc from `(t, j, value)` samples ordered by hybrid time.
    /// The domain is inferred from the first and last sample of each `j`.
    pub fn from_samples(
        dim: usize,
        samples: impl IntoIterator<Item = (HybridTime, Vec<f64>)>,
    ) -> Result<Self, HybridError> {
        let mut segments: Vec<Segment> = Vec::new();
        for (time, value) in samples {
            if value.len() != dim {
                return Err(HybridError::DimensionMismatch {
                    expected: dim,
                    got: value.len(),
                });
            }
            if time.j == segments.len() {
                segments.push(Segment::new(Vec::new(), Vec::new()));
            } else if time.j + 1 != segments.len() {
                return Err(HybridError::InvalidArc(format!(
                    "samples must visit jump indices in order, got j = {}",
                    time.j
                )));
            }
            segments.last_mut().unwrap().push(time.t, &value);
        }
        if segments.is_empty() {
            return Err(HybridError::InvalidArc("no samples".into()));
        }
        let mut boundaries = vec![segments[0].times[0]];
        for seg in &segments {
            boundaries.push(*seg.times.last().unwrap());
        }
        for pair in segments.windows(2) {
            if pair[1].times[0] != *pair[0].times.last().unwrap() {
                return Err(HybridError::InvalidArc(
                    "a jump must occur at a single flow time".into(),
                ));
            }
        }
        let domain = HybridTimeDomain::new(boundaries)?;
        Self::new(domain, dim, segments)
    }

    /// A constant arc on `[0, duration] × {0}`, sampled at the given times.
    pub fn constant(value: &[f64], times: &[f64]) -> Result<Self, HybridError> {
        let samples = times
            .iter()
            .map(|&t| (HybridTime::new(t, 0), value.to_vec()));
        Self::from_samples(value.len(), samples)
    }

    pub fn domain(&self) -> &HybridTimeDomain {
        &self.domain
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn segment_value(&self, j: usize, k: usize) -> &[f64] {
        self.segments[j].value(k, self.dim)
    }

    /// Total number of recorded samples.
    pub fn len(&self) -> usize {
        self.segments.iter().map(Segment::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// All samples in hybrid-time order.
    pub fn samples(&self) -> impl Iterator<Item = (HybridTime, &[f64])> + '_ {
        self.segments.iter().enumerate().flat_map(move |(j, seg)| {
            seg.times
                .iter()
                .enumerate()
                .map(move |(k, &t)| (HybridTime::new(t, j), seg.value(k, self.dim)))
        })
    }

    pub fn initial(&self) -> &[f64] {
        self.segments[0].value(0, self.dim)
    }

    /// `φ(T, J)` at `(T, J) = max dom φ`.
    pub fn terminal(&self) -> &[f64] {
        let seg = self.segments.last().unwrap();
        seg.value(seg.len() - 1, self.dim)
    }

    /// Value at `time`, interpolating linearly between recorded samples.
    pub fn value_at(&self, time: HybridTime) -> Option<Vec<f64>> {
        if !self.domain.contains(time) {
            return None;
        }
        let seg = &self.segments[time.j];
        let k = seg.times.partition_point(|&s| s < time.t);
        if k < seg.len() && seg.times[k] == time.t {
            return Some(seg.value(k, self.dim).to_vec());
        }
        // time.t lies strictly between samples k-1 and k
        let (t0, t1) = (seg.times[k - 1], seg.times[k]);
        let w = (time.t - t0) / (t1 - t0);
        let a = seg.value(k - 1, self.dim);
        let b = seg.value(k, self.dim);
        Some(a.iter().zip(b).map(|(x, y)| x + w * (y - x)).collect())
    }

    /// `self | other`: `other` shifted by `max dom self`, with `other(0, 0)`
    /// replacing `self(T, J)`.
    pub fn concatenate(&self, other: &HybridArc) -> Result<HybridArc, HybridError> {
        if self.dim != other.dim {
            return Err(HybridError::DimensionMismatch {
                expected: self.dim,
                got: other.dim,
            });
        }
        let shift = self.domain.end_time();
        let domain = self.domain.concatenate(&other.domain);
        let mut segments = self.segments.clone();
        let mut last = segments.pop().unwrap();
        last.pop(self.dim);
        let head = other.segments[0].shifted(shift);
        last.times.extend(head.times);
        last.values.extend(head.values);
        segments.push(last);
        segments.extend(other.segments[1..].iter().map(|s| s.shifted(shift)));
        Ok(HybridArc {
            domain,
            dim: self.dim,
            segments,
        })
    }

    /// Truncation between `from` and `to`, translated so `from` maps to `(0, 0)`.
    ///
    /// Cut points that fall between recorded samples get an interpolated sample.
    pub fn truncate(&self, from: HybridTime, to: HybridTime) -> Result<HybridArc, HybridError> {
        let domain = self.domain.truncate(from, to)?;
        let mut segments = Vec::with_capacity(to.j - from.j + 1);
        for j in from.j..=to.j {
            let (mut lo, mut hi) = self.domain.interval_bounds(j).unwrap();
            if j == from.j {
                lo = from.t;
            }
            if j == to.j {
                hi = to.t;
            }
            let src = &self.segments[j];
            let mut seg = Segment::new(Vec::new(), Vec::new());
            let first = src.times.partition_point(|&s| s < lo);
            if src.times.get(first) != Some(&lo) {
                let v = self.value_at(HybridTime::new(lo, j)).unwrap();
                seg.push(lo - from.t, &v);
            }
            let mut k = first;
            while k < src.len() && src.times[k] <= hi {
                seg.push(src.times[k] - from.t, src.value(k, self.dim));
                k += 1;
            }
            if *seg.times.last().unwrap() != hi - from.t {
                let v = self.value_at(HybridTime::new(hi, j)).unwrap();
                seg.push(hi - from.t, &v);
            }
            segments.push(seg);
        }
        HybridArc::new(domain, self.dim, segments)
    }
}

/// `(τ, ε)`-closeness evaluated on recorded samples: every sample of each arc
/// with `t + j ≤ τ` has a sample of the other arc at the same `j` closer than `ε`.
pub fn is_close(a: &HybridArc, b: &HybridArc, tau: f64, eps: f64) -> Result<bool, HybridError> {
    if a.dim() != b.dim() {
        return Err(HybridError::DimensionMismatch {
            expected: a.dim(),
            got: b.dim(),
        });
    }
    if !(eps > 0.0) || !(tau >= 0.0) {
        return Err(HybridError::InvalidCloseness { tau, eps });
    }
    Ok(one_sided_close(a, b, tau, eps) && one_sided_close(b, a, tau, eps))
}

fn one_sided_close(a: &HybridArc, b: &HybridArc, tau: f64, eps: f64) -> bool {
    a.samples()
        .filter(|(time, _)| time.magnitude() <= tau)
        .all(|(time, x)| {
            b.segments
                .get(time.j)
                .is_some_and(|seg| (0..seg.len()).any(|k| euclidean(x, seg.value(k, b.dim)) < eps))
        })
}

pub fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// A state arc and an input arc on a shared hybrid time domain.
#[derive(Debug, Clone, PartialEq)]
pub struct SolutionPair {
    state: HybridArc,
    input: HybridArc,
}

impl SolutionPair {
    pub fn new(state: HybridArc, input: HybridArc) -> Result<Self, HybridError> {
        if state.domain() != input.domain() {
            return Err(HybridError::DomainMismatch);
        }
        Ok(Self { state, input })
    }

    pub fn state(&self) -> &HybridArc {
        &self.state
    }

    pub fn input(&self) -> &HybridArc {
        &self.input
    }

    pub fn domain(&self) -> &HybridTimeDomain {
        self.state.domain()
    }

    pub fn into_parts(self) -> (HybridArc, HybridArc) {
        (self.state, self.input)
    }

    /// `(t, j, x, u)` at every state sample; `u` is read from the input arc at
    /// the same hybrid time.
    pub fn samples(&self) -> impl Iterator<Item = (HybridTime, &[f64], Vec<f64>)> + '_ {
        self.state.samples().map(|(time, x)| {
            let u = self
                .input
                .value_at(time)
                .expect("input arc shares the state domain");
            (time, x, u)
        })
    }

    /// True when the domain has no jumps.
    pub fn is_purely_continuous(&self) -> bool {
        self.domain().jumps() == 0
    }

    pub fn concatenate(&self, other: &SolutionPair) -> Result<SolutionPair, HybridError> {
        if self.state.dim() != other.state.dim() {
            return Err(HybridError::DimensionMismatch {
                expected: self.state.dim(),
                got: other.state.dim(),
            });
        }
        if self.input.dim() != other.input.dim() {
            return Err(HybridError::DimensionMismatch {
                expected: self.input.dim(),
                got: other.input.dim(),
            });
        }
        let gap = euclidean(self.state.terminal(), other.state.initial());
        if gap > ENDPOINT_TOL {
            return Err(HybridError::EndpointMismatch { gap });
        }
        Ok(SolutionPair {
            state: self.state.concatenate(&other.state)?,
            input: self.input.concatenate(&other.input)?,
        })
    }

    pub fn truncate(&self, from: HybridTime, to: HybridTime) -> Result<SolutionPair, HybridError> {
        Ok(SolutionPair {
            state: self.state.truncate(from, to)?,
            input: self.input.truncate(from, to)?,
        })
    }
}

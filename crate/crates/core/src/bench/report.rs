use std::io::Write;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::run::{ResolvedRun, RunConfig};
use super::BenchError;
use crate::planner::{hysst_plan, PlannerMode};

/// One seeded trial. For the baseline every vertex is active, so
/// `n_inactive` is zero and `n_total = n_active`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRow {
    pub seed: u64,
    pub mode: PlannerMode,
    pub found: bool,
    pub plan_cost: Option<f64>,
    pub n_active: usize,
    pub n_inactive: usize,
    pub n_total: usize,
    /// Seconds; zero when timing is disabled.
    pub wall_time: f64,
}

/// Aggregates of one mode's rows. Cost statistics cover successful trials
/// only and are absent when there are none.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeSummary {
    pub mode: PlannerMode,
    pub trials: usize,
    pub successes: usize,
    pub success_rate: f64,
    pub mean_cost: Option<f64>,
    pub median_cost: Option<f64>,
    pub mean_active: f64,
    pub mean_inactive: f64,
    pub mean_total: f64,
    pub mean_wall_time: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkReport {
    pub system: String,
    pub base_seed: u64,
    pub rows: Vec<TrialRow>,
    pub summary: Vec<ModeSummary>,
}

/// Median of a nonempty slice; the mean of the two middle values for even
/// lengths.
pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Some(if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    })
}

fn mean(values: impl Iterator<Item = f64>) -> Option<f64> {
    let (mut sum, mut n) = (0.0, 0usize);
    for v in values {
        sum += v;
        n += 1;
    }
    (n > 0).then(|| sum / n as f64)
}

/// Per-mode aggregates in order of first appearance.
pub fn summarize(rows: &[TrialRow]) -> Vec<ModeSummary> {
    let mut modes: Vec<PlannerMode> = Vec::new();
    for r in rows {
        if !modes.contains(&r.mode) {
            modes.push(r.mode);
        }
    }
    modes
        .into_iter()
        .map(|mode| {
            let rs: Vec<&TrialRow> = rows.iter().filter(|r| r.mode == mode).collect();
            let costs: Vec<f64> = rs.iter().filter_map(|r| r.plan_cost).collect();
            let n = rs.len();
            let successes = rs.iter().filter(|r| r.found).count();
            ModeSummary {
                mode,
                trials: n,
                successes,
                success_rate: successes as f64 / n as f64,
                mean_cost: mean(costs.iter().copied()),
                median_cost: median(&costs),
                mean_active: mean(rs.iter().map(|r| r.n_active as f64)).unwrap(),
                mean_inactive: mean(rs.iter().map(|r| r.n_inactive as f64)).unwrap(),
                mean_total: mean(rs.iter().map(|r| r.n_total as f64)).unwrap(),
                mean_wall_time: mean(rs.iter().map(|r| r.wall_time)).unwrap(),
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchOptions {
    pub n_trials: usize,
    pub modes: Vec<PlannerMode>,
    /// Trial `i` of every mode uses seed `base_seed + i`.
    pub base_seed: u64,
    pub parallel: bool,
    /// Record wall time per trial; disable for byte-identical reports.
    pub timing: bool,
}

impl Default for BenchOptions {
    fn default() -> Self {
        Self {
            n_trials: 20,
            modes: vec![PlannerMode::Hysst, PlannerMode::HyrrtBaseline],
            base_seed: 0,
            parallel: true,
            timing: true,
        }
    }
}

fn trial(run: &ResolvedRun, mode: PlannerMode, seed: u64, timing: bool) -> TrialRow {
    let mut cfg = run.planner.clone();
    cfg.mode = mode;
    cfg.seed = seed;
    let b = &run.bundle;
    let start = Instant::now();
    let result = hysst_plan(&b.problem, &b.library, run.integrator, cfg);
    let wall_time = if timing {
        start.elapsed().as_secs_f64()
    } else {
        0.0
    };
    match result {
        Ok(r) => TrialRow {
            seed,
            mode,
            found: r.best.is_some(),
            plan_cost: r.best.map(|p| p.cost),
            n_active: r.tree.n_active(),
            n_inactive: r.tree.n_inactive(),
            n_total: r.tree.len(),
            wall_time,
        },
        Err(e) => {
            log::warn!("trial {mode} seed {seed} failed: {e}");
            TrialRow {
                seed,
                mode,
                found: false,
                plan_cost: None,
                n_active: 0,
                n_inactive: 0,
                n_total: 0,
                wall_time,
            }
        }
    }
}

/// Runs `n_trials` seeded trials per mode. Rows are ordered by mode, then
/// trial index, whether or not trials run concurrently.
pub fn run_benchmark(
    config: &RunConfig,
    opts: &BenchOptions,
) -> Result<BenchmarkReport, BenchError> {
    if opts.n_trials == 0 {
        return Err(BenchError::Config("n_trials must be at least 1".into()));
    }
    if opts.modes.is_empty() {
        return Err(BenchError::Config("no planner modes requested".into()));
    }
    let run = config.resolve()?;
    let jobs: Vec<(PlannerMode, u64)> = opts
        .modes
        .iter()
        .flat_map(|&m| (0..opts.n_trials as u64).map(move |i| (m, opts.base_seed.wrapping_add(i))))
        .collect();
    let rows: Vec<TrialRow> = if opts.parallel {
        jobs.par_iter()
            .map(|&(m, s)| trial(&run, m, s, opts.timing))
            .collect()
    } else {
        jobs.iter()
            .map(|&(m, s)| trial(&run, m, s, opts.timing))
            .collect()
    };
    let summary = summarize(&rows);
    Ok(BenchmarkReport {
        system: run.bundle.name.clone(),
        base_seed: opts.base_seed,
        rows,
        summary,
    })
}

fn opt(v: Option<f64>) -> String {
    v.map(|c| c.to_string()).unwrap_or_default()
}

/// Trial rows as CSV.
pub fn write_report_csv<W: Write>(report: &BenchmarkReport, out: W) -> Result<(), BenchError> {
    let err = |e: csv::Error| BenchError::Format(format!("csv: {e}"));
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "seed",
        "mode",
        "found",
        "plan_cost",
        "n_active",
        "n_inactive",
        "n_total",
        "wall_time",
    ])
    .map_err(err)?;
    for r in &report.rows {
        w.write_record([
            r.seed.to_string(),
            r.mode.to_string(),
            r.found.to_string(),
            opt(r.plan_cost),
            r.n_active.to_string(),
            r.n_inactive.to_string(),
            r.n_total.to_string(),
            r.wall_time.to_string(),
        ])
        .map_err(err)?;
    }
    w.flush().map_err(|e| BenchError::Format(e.to_string()))
}

/// Per-mode aggregates as CSV.
pub fn write_summary_csv<W: Write>(report: &BenchmarkReport, out: W) -> Result<(), BenchError> {
    let err = |e: csv::Error| BenchError::Format(format!("csv: {e}"));
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "mode",
        "trials",
        "successes",
        "success_rate",
        "mean_cost",
        "median_cost",
        "mean_active",
        "mean_inactive",
        "mean_total",
        "mean_wall_time",
    ])
    .map_err(err)?;
    for s in &report.summary {
        w.write_record([
            s.mode.to_string(),
            s.trials.to_string(),
            s.successes.to_string(),
            s.success_rate.to_string(),
            opt(s.mean_cost),
            opt(s.median_cost),
            s.mean_active.to_string(),
            s.mean_inactive.to_string(),
            s.mean_total.to_string(),
            s.mean_wall_time.to_string(),
        ])
        .map_err(err)?;
    }
    w.flush().map_err(|e| BenchError::Format(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn medians() {
        assert_eq!(median(&[]), None);
        assert_eq!(median(&[3.0, 1.0, 2.0]), Some(2.0));
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), Some(2.5));
    }

    #[test]
    fn summary_counts() {
        let row = |mode, found: bool, cost: f64, active| TrialRow {
            seed: 0,
            mode,
            found,
            plan_cost: found.then_some(cost),
            n_active: active,
            n_inactive: 1,
            n_total: active + 1,
            wall_time: 0.0,
        };
        let rows = vec![
            row(PlannerMode::Hysst, true, 4.0, 10),
            row(PlannerMode::Hysst, false, 0.0, 20),
            row(PlannerMode::HyrrtBaseline, true, 6.0, 50),
        ];
        let s = summarize(&rows);
        assert_eq!(s.len(), 2);
        assert_eq!(s[0].success_rate, 0.5);
        assert_eq!(s[0].median_cost, Some(4.0));
        assert_eq!(s[0].mean_active, 15.0);
        assert_eq!(s[1].mode, PlannerMode::HyrrtBaseline);
        assert_eq!(s[1].mean_total, 51.0);
    }
}

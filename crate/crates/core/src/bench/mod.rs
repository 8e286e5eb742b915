//! Run configuration, artifact files and the seeded benchmark harness.

mod io;
mod plotdata;
mod report;
mod run;

use std::path::Path;

use thiserror::Error;

pub use io::{read_json, read_walls, write_json, EdgeRecord, PairFile, PlanFile, TreeDump};
pub use plotdata::{write_segments, write_trace};
pub use report::{
    median, run_benchmark, summarize, write_report_csv, write_summary_csv, BenchOptions,
    BenchmarkReport, ModeSummary, TrialRow,
};
pub use run::{
    run_plan, write_stats, EmitFlags, ResolvedRun, RunConfig, RunOutcome, RunStatus, PLAN_FILE,
    SEGMENTS_FILE, STATS_FILE, TRACE_FILE, TREE_FILE,
};

/// Exit status for configuration errors.
pub const EXIT_CONFIG_ERROR: i32 = 64;

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("malformed data: {0}")]
    Format(String),
}

impl BenchError {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        BenchError::Io {
            path: path.display().to_string(),
            source,
        }
    }
}

use std::fs;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use super::io::{read_walls, write_json, PlanFile, TreeDump};
use super::plotdata::{write_segments, write_trace};
use super::BenchError;
use crate::hybrid::inflate;
use crate::planner::{hysst_plan, IterationStats, PlanResult, PlannerConfig};
use crate::simulation::IntegratorConfig;
use crate::systems::{self, auxiliary_extension, SystemBundle};

/// Which artifacts a run writes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EmitFlags {
    pub tree: bool,
    pub plan: bool,
    pub stats: bool,
    pub plotdata: bool,
    /// Store every edge's solution pair in the tree dump.
    pub tree_arcs: bool,
}

impl Default for EmitFlags {
    fn default() -> Self {
        Self {
            tree: true,
            plan: true,
            stats: true,
            plotdata: true,
            tree_arcs: false,
        }
    }
}

/// One JSON document describing a run. Planner and integrator entries are
/// overrides on top of the system's defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub system: String,
    /// Overrides of the system parameters.
    pub system_params: Value,
    /// Wall layout file replacing the multicopter walls.
    pub walls_file: Option<PathBuf>,
    pub planner: Map<String, Value>,
    pub integrator: Map<String, Value>,
    /// `T_m`; the system default when absent.
    pub max_flow_duration: Option<f64>,
    /// Plan on the δf-inflated system.
    pub inflate: Option<f64>,
    /// Plan on the system extended with a flow clock and a jump counter.
    pub auxiliary_clocks: bool,
    pub output_dir: PathBuf,
    pub emit: EmitFlags,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            system: "bouncing_ball".into(),
            system_params: Value::Null,
            walls_file: None,
            planner: Map::new(),
            integrator: Map::new(),
            max_flow_duration: None,
            inflate: None,
            auxiliary_clocks: false,
            output_dir: PathBuf::from("out"),
            emit: EmitFlags::default(),
        }
    }
}

/// A config with everything looked up and validated.
#[derive(Debug, Clone)]
pub struct ResolvedRun {
    pub bundle: SystemBundle,
    pub planner: PlannerConfig,
    pub integrator: IntegratorConfig,
}

fn overlay<T: Serialize + serde::de::DeserializeOwned>(
    base: &T,
    overrides: &Map<String, Value>,
    what: &str,
) -> Result<T, BenchError> {
    let mut v = serde_json::to_value(base).map_err(|e| BenchError::Config(e.to_string()))?;
    let obj = v
        .as_object_mut()
        .expect("config structs serialize to objects");
    for (k, val) in overrides {
        obj.insert(k.clone(), val.clone());
    }
    serde_json::from_value(v).map_err(|e| BenchError::Config(format!("{what}: {e}")))
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, BenchError> {
        let text = fs::read_to_string(path)
            .map_err(|e| BenchError::Config(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| BenchError::Config(format!("{}: {e}", path.display())))
    }

    pub fn resolve(&self) -> Result<ResolvedRun, BenchError> {
        let mut params = self.system_params.clone();
        if let Some(path) = &self.walls_file {
            let walls = read_walls(path).map_err(|e| BenchError::Config(e.to_string()))?;
            if params.is_null() {
                params = Value::Object(Map::new());
            }
            let obj = params
                .as_object_mut()
                .ok_or_else(|| BenchError::Config("system_params must be an object".into()))?;
            obj.insert("walls".into(), serde_json::to_value(walls).unwrap());
        }
        let mut bundle = systems::by_name(&self.system, Some(&params), self.max_flow_duration)
            .map_err(BenchError::Config)?;
        if let Some(delta) = self.inflate {
            bundle.problem.system = inflate(&bundle.problem.system, delta)
                .map_err(|e| BenchError::Config(e.to_string()))?;
        }
        if self.auxiliary_clocks {
            bundle.problem = auxiliary_extension(&bundle.problem);
        }
        let planner: PlannerConfig = overlay(&bundle.planner, &self.planner, "planner")?;
        planner
            .validate()
            .map_err(|e| BenchError::Config(e.to_string()))?;
        let integrator: IntegratorConfig =
            overlay(&bundle.integrator, &self.integrator, "integrator")?;
        integrator
            .validate()
            .map_err(|e| BenchError::Config(e.to_string()))?;
        Ok(ResolvedRun {
            bundle,
            planner,
            integrator,
        })
    }
}

impl ResolvedRun {
    pub fn plan(&self) -> Result<PlanResult, BenchError> {
        let b = &self.bundle;
        hysst_plan(
            &b.problem,
            &b.library,
            self.integrator,
            self.planner.clone(),
        )
        .map_err(|e| BenchError::Config(e.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunStatus {
    PlanFound,
    NoPlan,
}

impl RunStatus {
    pub fn exit_code(self) -> i32 {
        match self {
            RunStatus::PlanFound => 0,
            RunStatus::NoPlan => 2,
        }
    }
}

#[derive(Debug)]
pub struct RunOutcome {
    pub status: RunStatus,
    pub result: PlanResult,
    pub artifacts: Vec<PathBuf>,
}

pub const PLAN_FILE: &str = "plan.json";
pub const TREE_FILE: &str = "tree.json";
pub const STATS_FILE: &str = "stats.csv";
pub const TRACE_FILE: &str = "trace.csv";
pub const SEGMENTS_FILE: &str = "segments.csv";

/// Writes per-iteration statistics; `best_cost` is empty until a plan exists.
pub fn write_stats<W: std::io::Write>(stats: &[IterationStats], out: W) -> Result<(), BenchError> {
    let err = |e: csv::Error| BenchError::Format(format!("csv: {e}"));
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["iter", "n_active", "n_inactive", "n_witnesses", "best_cost"])
        .map_err(err)?;
    for s in stats {
        w.write_record([
            s.iter.to_string(),
            s.n_active.to_string(),
            s.n_inactive.to_string(),
            s.n_witnesses.to_string(),
            s.best_cost.map(|c| c.to_string()).unwrap_or_default(),
        ])
        .map_err(err)?;
    }
    w.flush().map_err(|e| BenchError::Format(e.to_string()))
}

fn create(path: &Path) -> Result<BufWriter<fs::File>, BenchError> {
    fs::File::create(path)
        .map(BufWriter::new)
        .map_err(|e| BenchError::io(path, e))
}

/// Resolves the config, runs the planner once and writes the requested
/// artifacts into `output_dir`. Nothing is written when the config is invalid.
pub fn run_plan(config: &RunConfig) -> Result<RunOutcome, BenchError> {
    let run = config.resolve()?;
    for w in run.planner.warnings() {
        log::warn!("{w}");
    }
    let result = run.plan()?;
    let dir = &config.output_dir;
    fs::create_dir_all(dir).map_err(|e| BenchError::Config(format!("{}: {e}", dir.display())))?;

    let mut artifacts = Vec::new();
    let emit = config.emit;
    if let Some(best) = result.best.as_ref().filter(|_| emit.plan) {
        let path = dir.join(PLAN_FILE);
        write_json(&PlanFile::new(&run.bundle.name, best), &path)?;
        artifacts.push(path);
    }
    let dump = (emit.tree || emit.plotdata)
        .then(|| TreeDump::new(&result.tree, &result.witnesses, emit.tree_arcs));
    if let Some(dump) = dump.as_ref().filter(|_| emit.tree) {
        let path = dir.join(TREE_FILE);
        write_json(dump, &path)?;
        artifacts.push(path);
    }
    if emit.stats {
        let path = dir.join(STATS_FILE);
        write_stats(&result.stats, create(&path)?)?;
        artifacts.push(path);
    }
    if emit.plotdata {
        if let Some(best) = &result.best {
            let path = dir.join(TRACE_FILE);
            write_trace(&best.psi, create(&path)?)?;
            artifacts.push(path);
        }
        let path = dir.join(SEGMENTS_FILE);
        write_segments(dump.as_ref().unwrap(), create(&path)?)?;
        artifacts.push(path);
    }

    let status = if result.best.is_some() {
        RunStatus::PlanFound
    } else {
        RunStatus::NoPlan
    };
    Ok(RunOutcome {
        status,
        result,
        artifacts,
    })
}

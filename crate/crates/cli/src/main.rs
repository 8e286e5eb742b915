use std::fs;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::Value;

use hysst::bench::{
    read_json, run_benchmark, run_plan, write_report_csv, write_segments, write_summary_csv,
    write_trace, BenchError, BenchOptions, PlanFile, RunConfig, TreeDump, EXIT_CONFIG_ERROR,
    SEGMENTS_FILE, TRACE_FILE,
};
use hysst::hybrid::validate_solution;
use hysst::planner::PlannerMode;

#[derive(Parser)]
#[command(
    name = "hysst",
    version,
    about = "Sparse sampling-based motion planning for hybrid systems"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the planner once and write plan, tree, stats and plot files.
    Plan(ConfigArgs),
    /// Run seeded trials per planner mode and write a CSV report.
    Bench(BenchArgs),
    /// Convert a plan file and/or tree dump into plot-ready CSV.
    PlotData(PlotArgs),
    /// Check a plan file against the system it was planned for.
    Validate(ValidateArgs),
}

/// Run configuration. Flags override values from `--config`, which override
/// the system defaults.
#[derive(Args, Debug, Default)]
struct ConfigArgs {
    /// JSON run configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    system: Option<String>,
    /// JSON object of system parameter overrides.
    #[arg(long)]
    system_params: Option<String>,
    #[arg(long)]
    walls_file: Option<PathBuf>,
    #[arg(long)]
    output_dir: Option<PathBuf>,

    #[arg(long)]
    p_n: Option<f64>,
    /// Iteration budget K.
    #[arg(long)]
    max_iterations: Option<usize>,
    #[arg(long)]
    delta_bn: Option<f64>,
    #[arg(long)]
    delta_s: Option<f64>,
    #[arg(long)]
    eps_final: Option<f64>,
    #[arg(long)]
    n_init_roots: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// hysst or hyrrt_baseline.
    #[arg(long)]
    mode: Option<PlannerMode>,
    #[arg(long)]
    flow_coin: Option<f64>,

    #[arg(long)]
    step_size: Option<f64>,
    #[arg(long)]
    boundary_tol: Option<f64>,
    #[arg(long)]
    max_steps: Option<usize>,

    /// Largest flow duration T_m.
    #[arg(long)]
    max_flow_duration: Option<f64>,
    /// Plan on the inflated system with this radius.
    #[arg(long)]
    inflate: Option<f64>,
    /// Extend the state with a flow clock and a jump counter.
    #[arg(long)]
    auxiliary_clocks: bool,

    #[arg(long)]
    no_tree: bool,
    #[arg(long)]
    no_plan: bool,
    #[arg(long)]
    no_stats: bool,
    #[arg(long)]
    no_plotdata: bool,
    /// Include every edge's solution pair in the tree dump.
    #[arg(long)]
    tree_arcs: bool,
}

impl ConfigArgs {
    fn build(&self) -> Result<RunConfig, BenchError> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        if let Some(s) = &self.system {
            cfg.system = s.clone();
        }
        if let Some(text) = &self.system_params {
            let v: Value = serde_json::from_str(text)
                .map_err(|e| BenchError::Config(format!("--system-params: {e}")))?;
            match (&mut cfg.system_params, v) {
                (Value::Object(base), Value::Object(over)) => base.extend(over),
                (slot, v) => *slot = v,
            }
        }
        if let Some(p) = &self.walls_file {
            cfg.walls_file = Some(p.clone());
        }
        if let Some(p) = &self.output_dir {
            cfg.output_dir = p.clone();
        }
        let set = |map: &mut serde_json::Map<String, Value>, key: &str, v: Option<Value>| {
            if let Some(v) = v {
                map.insert(key.into(), v);
            }
        };
        let p = &mut cfg.planner;
        set(p, "p_n", self.p_n.map(Value::from));
        set(p, "max_iterations", self.max_iterations.map(Value::from));
        set(p, "delta_bn", self.delta_bn.map(Value::from));
        set(p, "delta_s", self.delta_s.map(Value::from));
        set(p, "eps_final", self.eps_final.map(Value::from));
        set(p, "n_init_roots", self.n_init_roots.map(Value::from));
        set(p, "seed", self.seed.map(Value::from));
        set(p, "mode", self.mode.map(|m| Value::from(m.to_string())));
        set(p, "flow_coin", self.flow_coin.map(Value::from));
        let i = &mut cfg.integrator;
        set(i, "step_size", self.step_size.map(Value::from));
        set(i, "boundary_tol", self.boundary_tol.map(Value::from));
        set(i, "max_steps", self.max_steps.map(Value::from));
        if self.max_flow_duration.is_some() {
            cfg.max_flow_duration = self.max_flow_duration;
        }
        if self.inflate.is_some() {
            cfg.inflate = self.inflate;
        }
        cfg.auxiliary_clocks |= self.auxiliary_clocks;
        cfg.emit.tree &= !self.no_tree;
        cfg.emit.plan &= !self.no_plan;
        cfg.emit.stats &= !self.no_stats;
        cfg.emit.plotdata &= !self.no_plotdata;
        cfg.emit.tree_arcs |= self.tree_arcs;
        Ok(cfg)
    }
}

#[derive(Args)]
struct BenchArgs {
    #[command(flatten)]
    config: ConfigArgs,
    #[arg(long, default_value_t = 20)]
    trials: usize,
    /// Comma-separated planner modes.
    #[arg(long, value_delimiter = ',', default_values_t = [PlannerMode::Hysst, PlannerMode::HyrrtBaseline])]
    modes: Vec<PlannerMode>,
    /// Trial i uses seed base_seed + i.
    #[arg(long, default_value_t = 0)]
    base_seed: u64,
    /// Run trials one after another.
    #[arg(long)]
    sequential: bool,
    /// Write zero wall times so repeated reports are byte-identical.
    #[arg(long)]
    no_timing: bool,
}

#[derive(Args)]
struct PlotArgs {
    #[arg(long)]
    plan: Option<PathBuf>,
    #[arg(long)]
    tree: Option<PathBuf>,
    #[arg(long, default_value = "out")]
    output_dir: PathBuf,
}

#[derive(Args)]
struct ValidateArgs {
    #[arg(long)]
    plan: PathBuf,
    /// Tolerance of the flow and jump checks; 10·h² of the integrator step
    /// when absent.
    #[arg(long)]
    tol: Option<f64>,
    #[command(flatten)]
    config: ConfigArgs,
}

fn create(path: &Path) -> Result<BufWriter<fs::File>, BenchError> {
    fs::File::create(path)
        .map(BufWriter::new)
        .map_err(|e| BenchError::Config(format!("{}: {e}", path.display())))
}

fn plan(args: &ConfigArgs) -> Result<i32, BenchError> {
    let outcome = run_plan(&args.build()?)?;
    let c = &outcome.result.counters;
    match &outcome.result.best {
        Some(best) => println!(
            "plan found: cost {} with {} jumps at iteration {}",
            best.cost,
            best.psi.domain().jumps(),
            best.iteration
        ),
        None => println!("no plan within {} iterations", c.iterations),
    }
    println!(
        "tree: {} active, {} inactive; {} admitted, {} dominated, {} unsafe, {} propagation errors",
        outcome.result.tree.n_active(),
        outcome.result.tree.n_inactive(),
        c.admitted,
        c.dominated_rejections,
        c.unsafe_rejections,
        c.propagation_errors
    );
    for a in &outcome.artifacts {
        println!("wrote {}", a.display());
    }
    Ok(outcome.status.exit_code())
}

fn bench(args: &BenchArgs) -> Result<i32, BenchError> {
    let cfg = args.config.build()?;
    let opts = BenchOptions {
        n_trials: args.trials,
        modes: args.modes.clone(),
        base_seed: args.base_seed,
        parallel: !args.sequential,
        timing: !args.no_timing,
    };
    let report = run_benchmark(&cfg, &opts)?;
    let dir = &cfg.output_dir;
    fs::create_dir_all(dir).map_err(|e| BenchError::Config(format!("{}: {e}", dir.display())))?;
    write_report_csv(&report, create(&dir.join("report.csv"))?)?;
    write_summary_csv(&report, create(&dir.join("summary.csv"))?)?;
    for s in &report.summary {
        let cost = |c: Option<f64>| c.map_or("-".to_string(), |c| format!("{c:.4}"));
        println!(
            "{:<15} success {}/{}  median cost {}  mean cost {}  active {:.1}  inactive {:.1}  total {:.1}  time {:.3}s",
            s.mode.to_string(),
            s.successes,
            s.trials,
            cost(s.median_cost),
            cost(s.mean_cost),
            s.mean_active,
            s.mean_inactive,
            s.mean_total,
            s.mean_wall_time
        );
    }
    println!("wrote {}", dir.join("report.csv").display());
    Ok(0)
}

fn plot_data(args: &PlotArgs) -> Result<i32, BenchError> {
    if args.plan.is_none() && args.tree.is_none() {
        return Err(BenchError::Config("give --plan and/or --tree".into()));
    }
    let plan: Option<PlanFile> = args.plan.as_deref().map(read_json).transpose()?;
    let tree: Option<TreeDump> = args.tree.as_deref().map(read_json).transpose()?;
    let psi = plan.map(|p| p.psi.to_pair()).transpose()?;
    fs::create_dir_all(&args.output_dir)
        .map_err(|e| BenchError::Config(format!("{}: {e}", args.output_dir.display())))?;
    if let Some(psi) = psi {
        let path = args.output_dir.join(TRACE_FILE);
        write_trace(&psi, create(&path)?)?;
        println!("wrote {}", path.display());
    }
    if let Some(tree) = tree {
        let path = args.output_dir.join(SEGMENTS_FILE);
        write_segments(&tree, create(&path)?)?;
        println!("wrote {}", path.display());
    }
    Ok(0)
}

fn validate(args: &ValidateArgs) -> Result<i32, BenchError> {
    let mut cfg = args.config.build()?;
    let file: PlanFile = read_json(&args.plan)?;
    if args.config.system.is_none() && args.config.config.is_none() {
        cfg.system = file.system.clone();
    }
    let run = cfg.resolve()?;
    let psi = file.psi.to_pair()?;
    let problem = &run.bundle.problem;
    let h = run.integrator.step_size;
    let v = validate_solution(&problem.system, &psi, args.tol.unwrap_or(10.0 * h * h));
    let x0 = psi.state().initial();
    let xf = psi.state().terminal();
    let starts = (problem.initial_set.contains)(x0);
    let dist = problem.final_set.distance(xf);
    let safe = !psi
        .samples()
        .any(|(_, x, u)| problem.unsafe_set.contains(x, &u));
    for violation in &v.violations {
        println!("violation: {violation:?}");
    }
    println!(
        "solution pair {}; starts in X_0: {starts}; distance to X_f: {dist}; avoids X_u: {safe}",
        if v.is_valid() { "valid" } else { "invalid" }
    );
    let ok = v.is_valid() && starts && safe && dist <= run.planner.eps_final;
    Ok(if ok { 0 } else { 1 })
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    // usage errors share the config-error code; 2 means "no plan"
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            let code = if e.use_stderr() { EXIT_CONFIG_ERROR } else { 0 };
            return ExitCode::from(code as u8);
        }
    };
    let result = match &cli.command {
        Command::Plan(a) => plan(a),
        Command::Bench(a) => bench(a),
        Command::PlotData(a) => plot_data(a),
        Command::Validate(a) => validate(a),
    };
    match result {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_CONFIG_ERROR as u8)
        }
    }
}

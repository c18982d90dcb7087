//! Command-line front end.
//!
//! Every command parses and validates its whole configuration before doing
//! any work, and writes each artifact once, through a temporary file that is
//! renamed into place.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::error::Error;
use crate::format::{fmt_f64, to_json_string};
use crate::graph::{gen_random_connected, gen_regular, gen_tree, Graph, SpectralStats};
use crate::harness::{compare_tuning, single_run, sweep, ExperimentConfig, SweepAxis};

/// Exit status for a successful command.
pub const EXIT_OK: i32 = 0;
/// Exit status when a valid configuration fails while running.
pub const EXIT_RUNTIME: i32 = 1;
/// Exit status for a rejected configuration or command line.
pub const EXIT_INVALID: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "consensus-admm",
    version,
    about = "Decentralized consensus ADMM with additive node error"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum GraphKind {
    Random,
    Regular,
    Tree,
}

/// Flags shared by every subcommand.
#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Experiment config file (JSON); flags override its keys.
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Seed override (topology seed for `graph`, base noise seed otherwise).
    #[arg(long, value_name = "U64")]
    pub seed: Option<u64>,
    /// Output directory, created if missing.
    #[arg(long, value_name = "DIR", default_value = ".")]
    pub out: PathBuf,
    /// Maximum number of worker threads.
    #[arg(long, value_name = "N")]
    pub jobs: Option<usize>,
    /// Format of the primary artifact.
    #[arg(long, value_enum, default_value = "csv")]
    pub format: OutputFormat,
}

/// Per-key overrides of an [`ExperimentConfig`].
#[derive(Debug, Clone, Default, Args)]
pub struct Overrides {
    /// Noise half-width.
    #[arg(long)]
    pub epsilon: Option<f64>,
    /// Iteration budget.
    #[arg(long)]
    pub iterations: Option<usize>,
    /// Number of Monte Carlo seeds.
    #[arg(long)]
    pub seeds: Option<usize>,
    /// Fixed penalty instead of the rate-optimal one.
    #[arg(long)]
    pub c: Option<f64>,
    /// Burn-in fraction for steady-state estimates.
    #[arg(long)]
    pub burn_in: Option<f64>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a topology; writes graph.txt and spectral.json.
    Graph {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum)]
        kind: GraphKind,
        #[arg(long)]
        nodes: usize,
        /// Edge density of a random graph.
        #[arg(long)]
        density: Option<f64>,
        /// Degree of a regular graph.
        #[arg(long)]
        degree: Option<usize>,
        /// Branch factor of a tree.
        #[arg(long)]
        branch: Option<usize>,
    },
    /// Run one noisy trajectory; writes trace.csv or trace.json.
    Run {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        overrides: Overrides,
        /// Record the G-norm distance to the KKT point.
        #[arg(long)]
        track_dual: bool,
        /// Also write bounds.json for the run's topology.
        #[arg(long)]
        bounds: bool,
    },
    /// Compute the rate parameters and steady-state bounds; writes bounds.json or bounds.csv.
    Bounds {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Monte Carlo sweep over one parameter; writes sweep.csv and sweep.json.
    Sweep {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        overrides: Overrides,
        /// One of epsilon, edge_density, degree, branch_factor, c.
        #[arg(long)]
        axis: String,
        /// Comma-separated axis values.
        #[arg(long, value_delimiter = ',', num_args = 1.., required = true)]
        values: Vec<f64>,
    },
    /// Compare a penalty switch against fixed penalties; writes compare.json.
    Compare {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        overrides: Overrides,
        /// Iteration at which the penalty is scaled.
        #[arg(long)]
        k0: usize,
        /// Scale applied at the switch.
        #[arg(long)]
        gamma: f64,
    },
}

impl Command {
    fn common(&self) -> &Common {
        match self {
            Command::Graph { common, .. }
            | Command::Run { common, .. }
            | Command::Bounds { common, .. }
            | Command::Sweep { common, .. }
            | Command::Compare { common, .. } => common,
        }
    }
}

/// Failure of a command, split by exit status.
#[derive(Debug)]
pub enum CliError {
    Invalid(String),
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Invalid(_) => EXIT_INVALID,
            CliError::Runtime(_) => EXIT_RUNTIME,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            CliError::Invalid(m) | CliError::Runtime(m) => m,
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::SingularSystem
            | Error::NoConvergence(_)
            | Error::GenerationFailed { .. }
            | Error::DegenerateSeries(_) => CliError::Runtime(e.to_string()),
            _ => CliError::Invalid(e.to_string()),
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

fn io_err(path: &Path, e: std::io::Error) -> CliError {
    CliError::Runtime(format!("{}: {e}", path.display()))
}

/// Writes `contents` to `dir/name` via a temporary sibling and a rename.
fn write_atomic(dir: &Path, name: &str, contents: &str) -> CliResult<PathBuf> {
    fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    let path = dir.join(name);
    let tmp = dir.join(format!(".{name}.tmp"));
    fs::write(&tmp, contents).map_err(|e| io_err(&tmp, e))?;
    fs::rename(&tmp, &path).map_err(|e| io_err(&path, e))?;
    Ok(path)
}

fn load_config(common: &Common, overrides: &Overrides) -> CliResult<ExperimentConfig> {
    let mut cfg = match &common.config {
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| CliError::Invalid(format!("{}: {e}", path.display())))?;
            serde_json::from_str(&text)
                .map_err(|e| CliError::Invalid(format!("{}: {e}", path.display())))?
        }
        None => ExperimentConfig::strongly_convex_suite(1e-4),
    };
    if let Some(seed) = common.seed {
        cfg.base_seed = seed;
    }
    if let Some(v) = overrides.epsilon {
        cfg.epsilon = v;
    }
    if let Some(v) = overrides.iterations {
        cfg.iterations = v;
    }
    if let Some(v) = overrides.seeds {
        cfg.seeds = v;
    }
    if let Some(v) = overrides.c {
        if !(v > 0.0) {
            return Err(CliError::Invalid(format!("c must be positive, got {v}")));
        }
        cfg.schedule.c = Some(v);
    }
    if let Some(v) = overrides.burn_in {
        cfg.burn_in = v;
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Key/value CSV of a serializable record.
fn flat_csv<T: Serialize>(value: &T) -> String {
    let mut out = String::from("key,value\n");
    if let serde_json::Value::Object(map) = serde_json::to_value(value).expect("serializable") {
        for (k, v) in map {
            let cell = match v {
                serde_json::Value::Number(n) if n.is_f64() => fmt_f64(n.as_f64().unwrap()),
                serde_json::Value::Null => String::new(),
                other => other.to_string(),
            };
            out.push_str(&format!("{k},{cell}\n"));
        }
    }
    out
}

fn build_graph(
    kind: GraphKind,
    nodes: usize,
    density: Option<f64>,
    degree: Option<usize>,
    branch: Option<usize>,
    seed: u64,
) -> CliResult<Graph> {
    let need = |flag: &str| CliError::Invalid(format!("--kind needs --{flag}"));
    let g = match kind {
        GraphKind::Random => {
            gen_random_connected(nodes, density.ok_or_else(|| need("density"))?, seed)
        }
        GraphKind::Regular => gen_regular(nodes, degree.ok_or_else(|| need("degree"))?, seed),
        GraphKind::Tree => gen_tree(nodes, branch.ok_or_else(|| need("branch"))?),
    };
    Ok(g?)
}

/// Executes a parsed command line and returns the paths it wrote.
pub fn execute(cli: &Cli) -> CliResult<Vec<PathBuf>> {
    let common = cli.command.common();
    if common.jobs == Some(0) {
        return Err(CliError::Invalid("--jobs must be at least 1".into()));
    }
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(j) = common.jobs {
        builder = builder.num_threads(j);
    }
    let pool = builder
        .build()
        .map_err(|e| CliError::Runtime(format!("thread pool: {e}")))?;
    pool.install(|| dispatch(&cli.command))
}

fn dispatch(command: &Command) -> CliResult<Vec<PathBuf>> {
    match command {
        Command::Graph {
            common,
            kind,
            nodes,
            density,
            degree,
            branch,
        } => {
            let g = build_graph(
                *kind,
                *nodes,
                *density,
                *degree,
                *branch,
                common.seed.unwrap_or(0),
            )?;
            let stats = SpectralStats::of_graph(&g);
            Ok(vec![
                write_atomic(&common.out, "graph.txt", &g.to_edge_list())?,
                write_atomic(&common.out, "spectral.json", &to_json_string(&stats))?,
            ])
        }
        Command::Run {
            common,
            overrides,
            track_dual,
            bounds,
        } => {
            let cfg = load_config(common, overrides)?;
            let (inst, trace) = single_run(&cfg, 0, *track_dual)?;
            let mut written = vec![match common.format {
                OutputFormat::Csv => write_atomic(&common.out, "trace.csv", &trace.to_csv())?,
                OutputFormat::Json => {
                    write_atomic(&common.out, "trace.json", &to_json_string(&trace.records))?
                }
            }];
            if *bounds {
                let report = inst.bounds.ok_or_else(|| {
                    CliError::Invalid("bounds need a strongly convex problem".into())
                })?;
                written.push(write_atomic(
                    &common.out,
                    "bounds.json",
                    &to_json_string(&report),
                )?);
            }
            Ok(written)
        }
        Command::Bounds { common, overrides } => {
            let cfg = load_config(common, overrides)?;
            let problem = crate::objectives::make_scaled_least_squares(&cfg.problem)?;
            let inst = crate::harness::build_instance(&cfg, &problem, 0)?;
            let report = inst
                .bounds
                .ok_or_else(|| CliError::Invalid("bounds need a strongly convex problem".into()))?;
            Ok(vec![match common.format {
                OutputFormat::Json => {
                    write_atomic(&common.out, "bounds.json", &to_json_string(&report))?
                }
                OutputFormat::Csv => write_atomic(&common.out, "bounds.csv", &flat_csv(&report))?,
            }])
        }
        Command::Sweep {
            common,
            overrides,
            axis,
            values,
        } => {
            let cfg = load_config(common, overrides)?;
            let axis: SweepAxis = axis.parse()?;
            let result = sweep(&cfg, axis, values)?;
            Ok(vec![
                write_atomic(&common.out, "sweep.csv", &result.to_csv())?,
                write_atomic(&common.out, "sweep.json", &to_json_string(&result))?,
            ])
        }
        Command::Compare {
            common,
            overrides,
            k0,
            gamma,
        } => {
            let cfg = load_config(common, overrides)?;
            let result = compare_tuning(&cfg, *k0, *gamma)?;
            let mut written = vec![write_atomic(
                &common.out,
                "compare.json",
                &to_json_string(&result),
            )?];
            if common.format == OutputFormat::Csv {
                if let Some([sched, fixed, reduced]) = &result.traces {
                    let mut csv = String::from("iter,scheduled,fixed_c,fixed_gamma_c\n");
                    for k in 0..sched.records.len() {
                        csv.push_str(&format!(
                            "{k},{},{},{}\n",
                            fmt_f64(sched.records[k].rel_error),
                            fmt_f64(fixed.records[k].rel_error),
                            fmt_f64(reduced.records[k].rel_error)
                        ));
                    }
                    written.push(write_atomic(&common.out, "compare_traces.csv", &csv)?);
                }
            }
            Ok(written)
        }
    }
}

/// Parses `args`, executes, and returns the process exit status.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                EXIT_INVALID
            } else {
                EXIT_OK
            };
        }
    };
    match execute(&cli) {
        Ok(paths) => {
            for p in paths {
                println!("{}", p.display());
            }
            EXIT_OK
        }
        Err(e) => {
            eprintln!("error: {}", e.message());
            e.exit_code()
        }
    }
}

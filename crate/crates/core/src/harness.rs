//! Monte Carlo experiment driver: steady-state estimation, parameter sweeps,
//! the penalty-tuning comparison, and the noise-propagation check.
//!
//! Seeds are identified by their index `s ∈ [0, S)`; every per-seed quantity is
//! a pure function of `(config, s)`, and aggregation is an ordered reduction
//! over the index, so results do not depend on how seeds are scheduled.

use std::fmt::Write as _;
use std::path::PathBuf;
use std::sync::Arc;

use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::admm::{run_with_reference, NoiseModel, PenaltySchedule, RunConfig, RunTrace};
use crate::bounds::{dual_optimum, experimental_rate, optimal_params, BoundsReport, DisplayBounds};
use crate::error::{Error, Result};
use crate::format::fmt_f64;
use crate::graph::{
    gen_random_connected, gen_regular, gen_tree, Graph, NetworkMatrices, SpectralStats,
};
use crate::objectives::{make_scaled_least_squares, GeneratedProblem, LeastSquaresSpec};

/// Minimum number of post-burn-in samples for a steady-state estimate.
pub const MIN_TAIL_SAMPLES: usize = 50;
/// Two-sided 95% normal quantile.
pub const Z_95: f64 = 1.959963984540054;

/// `‖x − x^C‖² / ‖x^C‖²` with `x^C` repeated once per node.
pub fn relative_error(x_stacked: &DVector<f64>, x_c: &DVector<f64>) -> Result<f64> {
    let n = x_c.len();
    if n == 0 || !x_stacked.len().is_multiple_of(n) {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: x_stacked.len(),
        });
    }
    let nodes = x_stacked.len() / n;
    let ref_sq = x_c.norm_squared() * nodes as f64;
    if ref_sq == 0.0 {
        return Err(Error::ZeroReference);
    }
    let mut err = 0.0;
    for (k, v) in x_stacked.iter().enumerate() {
        let d = v - x_c[k % n];
        err += d * d;
    }
    Ok(err / ref_sq)
}

/// Mean and standard error of a sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub stderr: f64,
    pub samples: usize,
}

impl Estimate {
    pub fn of(values: &[f64]) -> Self {
        let m = values.len();
        let mean = values.iter().sum::<f64>() / m as f64;
        let stderr = if m > 1 {
            let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (m - 1) as f64;
            (var / m as f64).sqrt()
        } else {
            0.0
        };
        Self {
            mean,
            stderr,
            samples: m,
        }
    }

    /// Normal-approximation 95% interval.
    pub fn ci95(&self) -> (f64, f64) {
        (
            self.mean - Z_95 * self.stderr,
            self.mean + Z_95 * self.stderr,
        )
    }
}

/// Mean and standard error of the values after the first `burn_in` fraction.
pub fn steady_state_of(values: &[f64], burn_in: f64) -> Result<Estimate> {
    if !(0.0..1.0).contains(&burn_in) {
        return Err(Error::InvalidParameter(format!(
            "burn-in fraction must lie in [0, 1), got {burn_in}"
        )));
    }
    let start = (values.len() as f64 * burn_in).floor() as usize;
    let tail = &values[start..];
    if tail.len() < MIN_TAIL_SAMPLES {
        return Err(Error::TooShort {
            available: tail.len(),
            required: MIN_TAIL_SAMPLES,
        });
    }
    Ok(Estimate::of(tail))
}

/// Steady-state relative error of a trace.
pub fn estimate_steady_state(trace: &RunTrace, burn_in: f64) -> Result<Estimate> {
    steady_state_of(&trace.rel_errors(), burn_in)
}

/// Topology recipe.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GraphSpec {
    Random { nodes: usize, density: f64 },
    Regular { nodes: usize, degree: usize },
    Tree { nodes: usize, branch: usize },
    EdgeList { path: PathBuf },
}

impl GraphSpec {
    pub fn build(&self, seed: u64) -> Result<Graph> {
        match self {
            GraphSpec::Random { nodes, density } => gen_random_connected(*nodes, *density, seed),
            GraphSpec::Regular { nodes, degree } => gen_regular(*nodes, *degree, seed),
            GraphSpec::Tree { nodes, branch } => gen_tree(*nodes, *branch),
            GraphSpec::EdgeList { path } => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
                Graph::parse_edge_list(&text)
            }
        }
    }

    pub fn is_random(&self) -> bool {
        matches!(self, GraphSpec::Random { .. } | GraphSpec::Regular { .. })
    }
}

/// Penalty schedule recipe; `c = None` means the rate-optimal `c*`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ScheduleSpec {
    #[serde(default)]
    pub c: Option<f64>,
    #[serde(default)]
    pub switch_iter: Option<usize>,
    #[serde(default)]
    pub factor: Option<f64>,
}

impl ScheduleSpec {
    fn resolve(&self, c_star: Option<f64>) -> Result<PenaltySchedule> {
        let c0 = match (self.c, c_star) {
            (Some(c), _) => c,
            (None, Some(c)) => c,
            (None, None) => {
                return Err(Error::InvalidParameter(
                    "c* needs strong convexity; set an explicit penalty".into(),
                ))
            }
        };
        let schedule = match self.switch_iter {
            Some(k0) => PenaltySchedule::switched(c0, k0, self.factor.unwrap_or(1.0)),
            None => PenaltySchedule::constant(c0),
        };
        schedule.validate()?;
        Ok(schedule)
    }
}

fn default_burn_in() -> f64 {
    0.5
}

fn default_true() -> bool {
    true
}

/// Everything needed to reproduce one Monte Carlo experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub graph: GraphSpec,
    #[serde(default)]
    pub graph_seed: u64,
    /// Draw a fresh topology for every Monte Carlo seed.
    #[serde(default)]
    pub resample_graph: bool,
    pub problem: LeastSquaresSpec,
    /// Noise half-width `ε`.
    pub epsilon: f64,
    #[serde(default)]
    pub schedule: ScheduleSpec,
    pub iterations: usize,
    #[serde(default = "default_burn_in")]
    pub burn_in: f64,
    /// Number of Monte Carlo seeds `S`.
    pub seeds: usize,
    #[serde(default)]
    pub base_seed: u64,
    /// Also compute the rate-measured upper bound from a noiseless tracked run.
    #[serde(default = "default_true")]
    pub experimental_bound: bool,
}

impl ExperimentConfig {
    /// The strongly convex suite: `N = 20`, `r = 0.5`, `n = p = 3`,
    /// `m_f = 1`, `M_f = 10`, `σ² = 0.1`, `c = c*`, `K = 3000`, `S = 20`.
    pub fn strongly_convex_suite(epsilon: f64) -> Self {
        Self {
            graph: GraphSpec::Random {
                nodes: 20,
                density: 0.5,
            },
            graph_seed: 7,
            resample_graph: false,
            problem: LeastSquaresSpec {
                nodes: 20,
                dim: 3,
                rows: 3,
                m_f: 1.0,
                lipschitz: 10.0,
                obs_var: 0.1,
                seed: 1,
            },
            epsilon,
            schedule: ScheduleSpec::default(),
            iterations: 3000,
            burn_in: 0.5,
            seeds: 20,
            base_seed: 1000,
            experimental_bound: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.burn_in) {
            return Err(Error::InvalidParameter(format!(
                "burn-in fraction must lie in [0, 1), got {}",
                self.burn_in
            )));
        }
        if self.seeds == 0 {
            return Err(Error::InvalidParameter("need at least one seed".into()));
        }
        if self.iterations == 0 {
            return Err(Error::InvalidParameter(
                "iterations must be at least 1".into(),
            ));
        }
        let tail =
            self.iterations + 1 - ((self.iterations + 1) as f64 * self.burn_in).floor() as usize;
        if tail < MIN_TAIL_SAMPLES {
            return Err(Error::TooShort {
                available: tail,
                required: MIN_TAIL_SAMPLES,
            });
        }
        NoiseModel::from_epsilon(self.epsilon)?;
        let nodes = match &self.graph {
            GraphSpec::Random { nodes, .. }
            | GraphSpec::Regular { nodes, .. }
            | GraphSpec::Tree { nodes, .. } => Some(*nodes),
            GraphSpec::EdgeList { .. } => None,
        };
        if let Some(nodes) = nodes {
            if nodes != self.problem.nodes {
                return Err(Error::SizeMismatch {
                    problem: self.problem.nodes,
                    graph: nodes,
                });
            }
        }
        Ok(())
    }

    /// Noise seed of Monte Carlo index `s`.
    pub fn noise_seed(&self, s: usize) -> u64 {
        split_seed(self.base_seed, s as u64)
    }

    /// Topology seed of Monte Carlo index `s`.
    pub fn topology_seed(&self, s: usize) -> u64 {
        if self.resample_graph {
            split_seed(self.graph_seed, s as u64)
        } else {
            self.graph_seed
        }
    }
}

/// SplitMix64 finalizer of `base + index`.
pub fn split_seed(base: u64, index: u64) -> u64 {
    let mut z = base.wrapping_add(index.wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// A topology with everything the runs and bounds need.
#[derive(Debug, Clone)]
pub struct Instance {
    pub graph: Graph,
    pub stats: SpectralStats,
    pub schedule: PenaltySchedule,
    pub c_star: Option<f64>,
    pub bounds: Option<BoundsReport>,
}

struct Prepared {
    problem: Arc<GeneratedProblem>,
    x_c: DVector<f64>,
    reference_norm_sq: f64,
}

fn prepare(config: &ExperimentConfig) -> Result<Prepared> {
    config.validate()?;
    let problem = make_scaled_least_squares(&config.problem)?;
    let x_c = problem.problem.centralized_solution()?;
    let reference_norm_sq = x_c.norm_squared() * config.problem.nodes as f64;
    if reference_norm_sq == 0.0 {
        return Err(Error::ZeroReference);
    }
    Ok(Prepared {
        problem: Arc::new(problem),
        x_c,
        reference_norm_sq,
    })
}

/// Builds the topology for Monte Carlo index `s`, resolves the penalty, and
/// computes the bounds (with the measured rate when requested).
pub fn build_instance(
    config: &ExperimentConfig,
    problem: &GeneratedProblem,
    s: usize,
) -> Result<Instance> {
    let graph = config.graph.build(config.topology_seed(s))?;
    if graph.node_count() != problem.problem.node_count() {
        return Err(Error::SizeMismatch {
            problem: problem.problem.node_count(),
            graph: graph.node_count(),
        });
    }
    let stats = SpectralStats::of_graph(&graph);
    let prob = &problem.problem;
    let c_star = if prob.strongly_convex() {
        Some(
            optimal_params(
                prob.m_f(),
                prob.lipschitz(),
                stats.sigma_max_mplus,
                stats.sigma_min_nz_mminus,
            )?
            .c,
        )
    } else {
        None
    };
    let schedule = config.schedule.resolve(c_star)?;
    let bounds = if prob.strongly_convex() {
        let c = schedule.final_c();
        let measured = if config.experimental_bound {
            Some(measured_rate(problem, &graph, c, config.iterations)?)
        } else {
            None
        };
        let sigma_n_sq = NoiseModel::from_epsilon(config.epsilon)?.variance();
        Some(BoundsReport::compute(
            &stats,
            prob.m_f(),
            prob.lipschitz(),
            prob.dim(),
            c,
            sigma_n_sq,
            measured.as_ref(),
        )?)
    } else {
        None
    };
    Ok(Instance {
        graph,
        stats,
        schedule,
        c_star,
        bounds,
    })
}

/// Geometric-mean contraction of a noiseless dual-tracked run at constant `c`.
pub fn measured_rate(
    problem: &GeneratedProblem,
    graph: &Graph,
    c: f64,
    iterations: usize,
) -> Result<crate::bounds::ExperimentalRate> {
    let dual = dual_optimum(&problem.problem, graph, c)?;
    let cfg = RunConfig {
        schedule: PenaltySchedule::constant(c),
        noise: NoiseModel::none(),
        iterations,
        seed: 0,
        track_dual: true,
    };
    let trace = run_with_reference(&problem.problem, graph, &cfg, &dual.x_c, Some(&dual))?;
    let d = trace.d_series().expect("tracked run");
    experimental_rate(&d, iterations)
}

/// One noisy run of Monte Carlo index `s`, optionally with dual tracking.
pub fn single_run(
    config: &ExperimentConfig,
    s: usize,
    track_dual: bool,
) -> Result<(Instance, RunTrace)> {
    let prepared = prepare(config)?;
    let inst = build_instance(config, &prepared.problem, s)?;
    let dual = if track_dual {
        Some(dual_optimum(
            &prepared.problem.problem,
            &inst.graph,
            inst.schedule.c0,
        )?)
    } else {
        None
    };
    let cfg = RunConfig {
        schedule: inst.schedule,
        noise: NoiseModel::from_epsilon(config.epsilon)?,
        iterations: config.iterations,
        seed: config.noise_seed(s),
        track_dual,
    };
    let trace = run_with_reference(
        &prepared.problem.problem,
        &inst.graph,
        &cfg,
        &prepared.x_c,
        dual.as_ref(),
    )?;
    Ok((inst, trace))
}

/// Outcome of one Monte Carlo seed.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SeedOutcome {
    pub index: usize,
    pub noise_seed: u64,
    pub graph_seed: u64,
    /// Tail mean of `‖x − x*‖²`.
    pub mse: f64,
    /// Tail estimate of the relative error.
    pub rel: Estimate,
    pub bounds: Option<BoundsReport>,
    #[serde(skip)]
    pub trace: Option<Arc<RunTrace>>,
}

/// Aggregate over seeds.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MonteCarloResult {
    /// Absolute steady-state MSE across seeds.
    pub mse: Estimate,
    pub mse_ci95: (f64, f64),
    /// Relative steady-state error across seeds.
    pub rel: Estimate,
    /// `√(mean relative error)`, the display metric.
    pub display: f64,
    /// Delta-method standard error of [`MonteCarloResult::display`].
    pub display_stderr: f64,
    /// Bounds of the fixed topology, or the per-seed average when resampling.
    pub bounds: Option<BoundsReport>,
    pub display_bounds: Option<DisplayBounds>,
    pub reference_norm_sq: f64,
    pub per_seed: Vec<SeedOutcome>,
}

/// Runs `S` independent seeds of `config` and aggregates their steady state.
pub fn monte_carlo(config: &ExperimentConfig, keep_traces: bool) -> Result<MonteCarloResult> {
    let prepared = prepare(config)?;
    let noise = NoiseModel::from_epsilon(config.epsilon)?;
    let shared = if config.resample_graph {
        None
    } else {
        Some(build_instance(config, &prepared.problem, 0)?)
    };
    let per_seed: Vec<SeedOutcome> = (0..config.seeds)
        .into_par_iter()
        .map(|s| -> Result<SeedOutcome> {
            let own;
            let inst = match &shared {
                Some(inst) => inst,
                None => {
                    own = build_instance(config, &prepared.problem, s)?;
                    &own
                }
            };
            let cfg = RunConfig {
                schedule: inst.schedule,
                noise,
                iterations: config.iterations,
                seed: config.noise_seed(s),
                track_dual: false,
            };
            let trace = run_with_reference(
                &prepared.problem.problem,
                &inst.graph,
                &cfg,
                &prepared.x_c,
                None,
            )?;
            let rel = estimate_steady_state(&trace, config.burn_in)?;
            let mse = steady_state_of(&trace.sq_errors(), config.burn_in)?.mean;
            Ok(SeedOutcome {
                index: s,
                noise_seed: cfg.seed,
                graph_seed: config.topology_seed(s),
                mse,
                rel,
                bounds: inst.bounds,
                trace: keep_traces.then(|| Arc::new(trace)),
            })
        })
        .collect::<Result<_>>()?;

    let mse = Estimate::of(&per_seed.iter().map(|o| o.mse).collect::<Vec<_>>());
    let rel = Estimate::of(&per_seed.iter().map(|o| o.rel.mean).collect::<Vec<_>>());
    let display = rel.mean.sqrt();
    let display_stderr = if display > 0.0 {
        rel.stderr / (2.0 * display)
    } else {
        0.0
    };
    let bounds = match &shared {
        Some(inst) => inst.bounds,
        None => average_bounds(&per_seed),
    };
    let display_bounds = bounds.map(|b| b.display_scale(prepared.reference_norm_sq));
    Ok(MonteCarloResult {
        mse_ci95: mse.ci95(),
        mse,
        rel,
        display,
        display_stderr,
        bounds,
        display_bounds,
        reference_norm_sq: prepared.reference_norm_sq,
        per_seed,
    })
}

fn average_bounds(per_seed: &[SeedOutcome]) -> Option<BoundsReport> {
    let all: Vec<BoundsReport> = per_seed.iter().map(|o| o.bounds).collect::<Option<_>>()?;
    let k = all.len() as f64;
    let mean = |f: &dyn Fn(&BoundsReport) -> f64| all.iter().map(f).sum::<f64>() / k;
    let mean_opt = |f: &dyn Fn(&BoundsReport) -> Option<f64>| {
        all.iter()
            .map(f)
            .collect::<Option<Vec<_>>>()
            .map(|v| v.iter().sum::<f64>() / k)
    };
    let mut out = all[0];
    out.ub_theoretical = mean(&|b| b.ub_theoretical);
    out.ub_experimental = mean_opt(&|b| b.ub_experimental);
    out.lb = mean(&|b| b.lb);
    out.delta_star = mean(&|b| b.delta_star);
    out.delta_used = mean(&|b| b.delta_used);
    out.mu_used = mean(&|b| b.mu_used);
    out.delta_e = mean_opt(&|b| b.delta_e);
    out.rho_bar_e = mean_opt(&|b| b.rho_bar_e);
    out.c = mean(&|b| b.c);
    out.c_star = mean(&|b| b.c_star);
    out.mu_star = mean(&|b| b.mu_star);
    out.sigma_max_mplus = mean(&|b| b.sigma_max_mplus);
    out.sigma_min_nz_mminus = mean(&|b| b.sigma_min_nz_mminus);
    out.lambda_min_w = mean(&|b| b.lambda_min_w);
    out.sigma_max_w = mean(&|b| b.sigma_max_w);
    out.lb_above_ub = out.lb > out.ub_theoretical;
    Some(out)
}

/// Parameter varied by a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    Epsilon,
    EdgeDensity,
    Degree,
    BranchFactor,
    C,
}

impl std::str::FromStr for SweepAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "epsilon" => Ok(Self::Epsilon),
            "edge_density" => Ok(Self::EdgeDensity),
            "degree" => Ok(Self::Degree),
            "branch_factor" => Ok(Self::BranchFactor),
            "c" => Ok(Self::C),
            other => Err(Error::InvalidParameter(format!(
                "unknown sweep axis {other:?}"
            ))),
        }
    }
}

/// `config` with `axis` set to `value`.
pub fn apply_axis(
    config: &ExperimentConfig,
    axis: SweepAxis,
    value: f64,
) -> Result<ExperimentConfig> {
    let mut out = config.clone();
    let as_count = |v: f64| -> Result<usize> {
        if v >= 1.0 && v.fract() == 0.0 {
            Ok(v as usize)
        } else {
            Err(Error::InvalidParameter(format!(
                "{axis:?} needs a positive integer, got {v}"
            )))
        }
    };
    match axis {
        SweepAxis::Epsilon => {
            NoiseModel::from_epsilon(value)?;
            out.epsilon = value;
        }
        SweepAxis::C => {
            if !(value > 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "c must be positive, got {value}"
                )));
            }
            out.schedule.c = Some(value);
        }
        SweepAxis::EdgeDensity => match &mut out.graph {
            GraphSpec::Random { density, .. } => *density = value,
            _ => {
                return Err(Error::InvalidParameter(
                    "edge_density sweeps need a random graph".into(),
                ))
            }
        },
        SweepAxis::Degree => match &mut out.graph {
            GraphSpec::Regular { degree, .. } => *degree = as_count(value)?,
            _ => {
                return Err(Error::InvalidParameter(
                    "degree sweeps need a regular graph".into(),
                ))
            }
        },
        SweepAxis::BranchFactor => match &mut out.graph {
            GraphSpec::Tree { branch, .. } => *branch = as_count(value)?,
            _ => {
                return Err(Error::InvalidParameter(
                    "branch_factor sweeps need a tree".into(),
                ))
            }
        },
    }
    out.validate()?;
    Ok(out)
}

/// One swept value.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepRow {
    pub value: f64,
    pub mse: Estimate,
    /// Display-scale `√E[relative error]` and its standard error.
    pub mean_ss_error: f64,
    pub stderr: f64,
    pub bounds: Option<BoundsReport>,
    pub display_bounds: Option<DisplayBounds>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepResult {
    pub axis: SweepAxis,
    pub rows: Vec<SweepRow>,
    pub config: ExperimentConfig,
}

impl SweepResult {
    /// CSV `axis_value,mean_ss_error,stderr,ub_t,ub_e,lb` on the display scale.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("axis_value,mean_ss_error,stderr,ub_t,ub_e,lb\n");
        for r in &self.rows {
            let (ub_t, ub_e, lb) = match r.display_bounds {
                Some(b) => (
                    fmt_f64(b.ub_t),
                    b.ub_e.map(fmt_f64).unwrap_or_default(),
                    fmt_f64(b.lb),
                ),
                None => Default::default(),
            };
            writeln!(
                out,
                "{},{},{},{ub_t},{ub_e},{lb}",
                fmt_f64(r.value),
                fmt_f64(r.mean_ss_error),
                fmt_f64(r.stderr)
            )
            .unwrap();
        }
        out
    }
}

/// One Monte Carlo experiment per value, all sharing the same seed set.
pub fn sweep(config: &ExperimentConfig, axis: SweepAxis, values: &[f64]) -> Result<SweepResult> {
    if values.is_empty() {
        return Err(Error::InvalidParameter(
            "sweep needs at least one value".into(),
        ));
    }
    let configs = values
        .iter()
        .map(|&v| apply_axis(config, axis, v))
        .collect::<Result<Vec<_>>>()?;
    let rows = values
        .par_iter()
        .zip(configs.par_iter())
        .map(|(&value, cfg)| {
            let mc = monte_carlo(cfg, false)?;
            Ok(SweepRow {
                value,
                mse: mc.mse,
                mean_ss_error: mc.display,
                stderr: mc.display_stderr,
                bounds: mc.bounds,
                display_bounds: mc.display_bounds,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepResult {
        axis,
        rows,
        config: config.clone(),
    })
}

/// Paired outcome of the three tuning runs on one seed.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct TuningSeed {
    pub index: usize,
    pub scheduled_ss: f64,
    pub fixed_ss: f64,
    pub reduced_ss: f64,
    pub scheduled_at_switch: f64,
    pub fixed_at_switch: f64,
    pub reduced_at_switch: f64,
}

/// Switching `c* → γc*` at `k0` versus fixed `c*` and fixed `γc*`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TuningComparison {
    pub k0: usize,
    pub gamma: f64,
    pub c: f64,
    pub per_seed: Vec<TuningSeed>,
    pub scheduled_ss: Estimate,
    pub fixed_ss: Estimate,
    pub reduced_ss: Estimate,
    /// Seeds where the scheduled steady state is at most the fixed-`c` one.
    pub ss_wins: usize,
    /// Seeds where the scheduled error at `k0` is at most the fixed-`γc` one.
    pub switch_wins: usize,
    /// Mean scheduled steady state ≤ mean fixed-`c` steady state.
    pub verdict_steady_state: bool,
    /// Mean scheduled error at `k0` ≤ mean fixed-`γc` error at `k0`.
    pub verdict_early: bool,
    #[serde(skip)]
    pub traces: Option<[Arc<RunTrace>; 3]>,
}

/// Absolute slack on relative-error comparisons so exact-zero ties still pass.
pub const COMPARE_TOL: f64 = 1e-20;

pub fn compare_tuning(
    config: &ExperimentConfig,
    k0: usize,
    gamma: f64,
) -> Result<TuningComparison> {
    if k0 >= config.iterations {
        return Err(Error::InvalidParameter(format!(
            "switch iteration {k0} must precede the iteration budget {}",
            config.iterations
        )));
    }
    if !(gamma > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "gamma must be positive, got {gamma}"
        )));
    }
    let mut base = config.clone();
    base.schedule.switch_iter = None;
    base.schedule.factor = None;
    base.experimental_bound = false;
    let prepared = prepare(&base)?;
    let noise = NoiseModel::from_epsilon(config.epsilon)?;
    let shared = if base.resample_graph {
        None
    } else {
        Some(build_instance(&base, &prepared.problem, 0)?)
    };
    let c_of = |inst: &Instance| inst.schedule.c0;

    let results: Vec<(TuningSeed, Option<[Arc<RunTrace>; 3]>)> = (0..base.seeds)
        .into_par_iter()
        .map(|s| {
            let own;
            let inst = match &shared {
                Some(inst) => inst,
                None => {
                    own = build_instance(&base, &prepared.problem, s)?;
                    &own
                }
            };
            let c = c_of(inst);
            let schedules = [
                PenaltySchedule::switched(c, k0, gamma),
                PenaltySchedule::constant(c),
                PenaltySchedule::constant(gamma * c),
            ];
            let traces = schedules
                .iter()
                .map(|&schedule| {
                    let cfg = RunConfig {
                        schedule,
                        noise,
                        iterations: base.iterations,
                        seed: base.noise_seed(s),
                        track_dual: false,
                    };
                    run_with_reference(
                        &prepared.problem.problem,
                        &inst.graph,
                        &cfg,
                        &prepared.x_c,
                        None,
                    )
                })
                .collect::<Result<Vec<_>>>()?;
            let ss = |t: &RunTrace| estimate_steady_state(t, base.burn_in).map(|e| e.mean);
            let seed = TuningSeed {
                index: s,
                scheduled_ss: ss(&traces[0])?,
                fixed_ss: ss(&traces[1])?,
                reduced_ss: ss(&traces[2])?,
                scheduled_at_switch: traces[0].records[k0].rel_error,
                fixed_at_switch: traces[1].records[k0].rel_error,
                reduced_at_switch: traces[2].records[k0].rel_error,
            };
            let kept = (s == 0).then(|| {
                let mut it = traces.into_iter().map(Arc::new);
                [it.next().unwrap(), it.next().unwrap(), it.next().unwrap()]
            });
            Ok((seed, kept))
        })
        .collect::<Result<_>>()?;

    let c = match &shared {
        Some(inst) => c_of(inst),
        None => build_instance(&base, &prepared.problem, 0).map(|i| c_of(&i))?,
    };
    let mut traces = None;
    let mut per_seed = Vec::with_capacity(results.len());
    for (seed, kept) in results {
        if kept.is_some() {
            traces = kept;
        }
        per_seed.push(seed);
    }
    let est = |f: fn(&TuningSeed) -> f64| Estimate::of(&per_seed.iter().map(f).collect::<Vec<_>>());
    let scheduled_ss = est(|t| t.scheduled_ss);
    let fixed_ss = est(|t| t.fixed_ss);
    let reduced_ss = est(|t| t.reduced_ss);
    let sched_k0 = est(|t| t.scheduled_at_switch).mean;
    let reduced_k0 = est(|t| t.reduced_at_switch).mean;
    let ss_wins = per_seed
        .iter()
        .filter(|t| t.scheduled_ss <= t.fixed_ss + COMPARE_TOL)
        .count();
    let switch_wins = per_seed
        .iter()
        .filter(|t| t.scheduled_at_switch <= t.reduced_at_switch + COMPARE_TOL)
        .count();
    Ok(TuningComparison {
        k0,
        gamma,
        c,
        verdict_steady_state: scheduled_ss.mean <= fixed_ss.mean + COMPARE_TOL,
        verdict_early: sched_k0 <= reduced_k0 + COMPARE_TOL,
        per_seed,
        scheduled_ss,
        fixed_ss,
        reduced_ss,
        ss_wins,
        switch_wins,
        traces,
    })
}

/// Monte Carlo estimate of `E‖(L+ − L-)e‖²` for i.i.d. `U(−ε, ε)` node errors
/// next to its closed form `8nEσ_n²`. Returns `(empirical, analytic)`.
pub fn noise_propagation_check(
    g: &Graph,
    n: usize,
    epsilon: f64,
    samples: usize,
    seed: u64,
) -> Result<(f64, f64)> {
    if samples < 10_000 {
        return Err(Error::InvalidParameter(format!(
            "need at least 1e4 samples, got {samples}"
        )));
    }
    let noise = NoiseModel::from_epsilon(epsilon)?;
    let analytic = 8.0 * n as f64 * g.edge_count() as f64 * noise.variance();
    if noise.is_silent() {
        return Ok((0.0, analytic));
    }
    let m = NetworkMatrices::new(g, n)?;
    let p = &m.lplus - &m.lminus;
    let rows: Vec<Vec<(usize, f64)>> = (0..p.nrows())
        .map(|r| {
            (0..p.ncols())
                .filter_map(|c| (p[(r, c)] != 0.0).then_some((c, p[(r, c)])))
                .collect()
        })
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dim = p.ncols();
    let mut total = 0.0;
    for _ in 0..samples {
        let e = crate::admm::sample_noise(&noise, dim, &mut rng);
        total += rows
            .iter()
            .map(|row| row.iter().map(|&(c, v)| v * e[c]).sum::<f64>().powi(2))
            .sum::<f64>();
    }
    Ok((total / samples as f64, analytic))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn relative_error_cases() {
        let xc = DVector::from_vec(vec![1.0, -2.0]);
        let same = DVector::from_vec(vec![1.0, -2.0, 1.0, -2.0, 1.0, -2.0]);
        assert_eq!(relative_error(&same, &xc).unwrap(), 0.0);
        assert_eq!(relative_error(&(&same * 2.0), &xc).unwrap(), 1.0);
        let mut off = same.clone();
        off[2] += 0.5;
        off[3] -= 1.0;
        // ‖Δ‖² / (N‖x^C‖²) = 1.25 / 15
        assert!((relative_error(&off, &xc).unwrap() - 1.25 / 15.0).abs() < 1e-15);
        assert_eq!(
            relative_error(&same, &DVector::zeros(2)),
            Err(Error::ZeroReference)
        );
    }

    #[test]
    fn steady_state_cases() {
        let mut v = vec![100.0; 100];
        v.extend(std::iter::repeat_n(0.25, 100));
        let e = steady_state_of(&v, 0.5).unwrap();
        assert_eq!((e.mean, e.stderr), (0.25, 0.0));
        let alt: Vec<f64> = (0..200)
            .map(|k| if k % 2 == 0 { 1.5 } else { 0.5 })
            .collect();
        assert!((steady_state_of(&alt, 0.5).unwrap().mean - 1.0).abs() < 1e-15);
        assert!(matches!(
            steady_state_of(&alt[..90], 0.5),
            Err(Error::TooShort { .. })
        ));
    }

    #[test]
    fn seeds_are_distinct() {
        let s: std::collections::BTreeSet<u64> = (0..1000).map(|k| split_seed(5, k)).collect();
        assert_eq!(s.len(), 1000);
    }

    #[test]
    fn axis_validation() {
        let base = ExperimentConfig::strongly_convex_suite(1e-4);
        assert!(apply_axis(&base, SweepAxis::Degree, 4.0).is_err());
        assert_eq!(
            apply_axis(&base, SweepAxis::EdgeDensity, 0.8)
                .unwrap()
                .graph,
            GraphSpec::Random {
                nodes: 20,
                density: 0.8
            }
        );
        assert_eq!(
            apply_axis(&base, SweepAxis::C, 0.3).unwrap().schedule.c,
            Some(0.3)
        );
        let mut tree = base.clone();
        tree.graph = GraphSpec::Tree {
            nodes: 20,
            branch: 2,
        };
        assert!(apply_axis(&tree, SweepAxis::BranchFactor, 2.5).is_err());
        assert!("bogus".parse::<SweepAxis>().is_err());
    }

    #[test]
    fn config_validation() {
        let mut c = ExperimentConfig::strongly_convex_suite(1e-4);
        c.burn_in = 1.0;
        assert!(c.validate().is_err());
        let mut c = ExperimentConfig::strongly_convex_suite(1e-4);
        c.seeds = 0;
        assert!(c.validate().is_err());
        let mut c = ExperimentConfig::strongly_convex_suite(1e-4);
        c.problem.nodes = 21;
        assert!(matches!(c.validate(), Err(Error::SizeMismatch { .. })));
        let mut c = ExperimentConfig::strongly_convex_suite(1e-4);
        c.iterations = 60;
        assert!(matches!(c.validate(), Err(Error::TooShort { .. })));
    }

    #[test]
    fn noise_propagation_examples() {
        let edge = Graph::from_edges(2, &[(0, 1)]).unwrap();
        let eps = 0.3;
        let (emp, ana) = noise_propagation_check(&edge, 1, eps, 100_000, 1).unwrap();
        assert!((ana - 8.0 * eps * eps / 3.0).abs() < 1e-15);
        assert!((emp / ana - 1.0).abs() < 0.05);
        assert_eq!(
            noise_propagation_check(&edge, 1, 0.0, 10_000, 1).unwrap(),
            (0.0, 0.0)
        );
        let k3 = Graph::from_edges(3, &[(0, 1), (1, 2), (0, 2)]).unwrap();
        let (_, ana) = noise_propagation_check(&k3, 2, eps, 10_000, 1).unwrap();
        assert!((ana - 48.0 * eps * eps / 3.0).abs() < 1e-14);
    }
}

//! Decentralized consensus ADMM with optional additive node error.
//!
//! Each synchronous round every node
//! 1. solves `∇f_i(x_i) + α_i + 2c|N_i|x_i − c(|N_i|x̂_i + Σ_{j∈N_i} x̂_j) = 0`
//!    using the messages `x̂` transmitted in the previous round,
//! 2. transmits `x̂_i = x_i + e_i`,
//! 3. updates `α_i += c(|N_i|x̂_i − Σ_{j∈N_i} x̂_j)`.
//!
//! With no noise `x̂ = x` and the iteration is the error-free algorithm.

use std::fmt::Write as _;

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bounds::{dual_optimum, g_norm_distance_at, DualOptimum};
use crate::error::{Error, Result};
use crate::format::fmt_f64;
use crate::graph::Graph;
use crate::harness::relative_error;
use crate::objectives::{update_terms, ConsensusProblem, LocalObjective};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NoiseKind {
    None,
    Uniform,
}

/// Additive transmission error: i.i.d. `U(−ε, ε)` entries or none.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    pub kind: NoiseKind,
    pub epsilon: f64,
}

impl NoiseModel {
    pub fn none() -> Self {
        Self {
            kind: NoiseKind::None,
            epsilon: 0.0,
        }
    }

    pub fn uniform(epsilon: f64) -> Result<Self> {
        if !(epsilon >= 0.0 && epsilon.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "noise half-width must be finite and non-negative, got {epsilon}"
            )));
        }
        Ok(Self {
            kind: NoiseKind::Uniform,
            epsilon,
        })
    }

    /// `ε = 0` collapses to [`NoiseModel::none`].
    pub fn from_epsilon(epsilon: f64) -> Result<Self> {
        if epsilon == 0.0 {
            Ok(Self::none())
        } else {
            Self::uniform(epsilon)
        }
    }

    /// Per-entry variance `σ_n² = ε²/3`.
    pub fn variance(&self) -> f64 {
        match self.kind {
            NoiseKind::None => 0.0,
            NoiseKind::Uniform => self.epsilon * self.epsilon / 3.0,
        }
    }

    pub fn is_silent(&self) -> bool {
        self.kind == NoiseKind::None || self.epsilon == 0.0
    }

    fn draw(&self, rng: &mut impl Rng) -> f64 {
        match self.kind {
            NoiseKind::None => 0.0,
            NoiseKind::Uniform => self.epsilon * (2.0 * rng.random::<f64>() - 1.0),
        }
    }
}

/// `count` i.i.d. samples from `noise`.
pub fn sample_noise(noise: &NoiseModel, count: usize, rng: &mut impl Rng) -> Vec<f64> {
    (0..count).map(|_| noise.draw(rng)).collect()
}

/// Deterministic per-node, per-iteration noise streams.
///
/// Node `i`'s error at iteration `k` (`k ≥ 1`) is read from a ChaCha8 generator
/// seeded with the master seed, on stream `i`, starting at word `2n(k − 1)`.
/// Every sample consumes exactly one 64-bit output, so the `n` samples of
/// `(i, k)` never overlap another pair and no draw depends on processing order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NoiseSource {
    pub seed: u64,
}

impl NoiseSource {
    pub fn new(seed: u64) -> Self {
        Self { seed }
    }

    pub fn node_error(
        &self,
        noise: &NoiseModel,
        node: usize,
        iteration: usize,
        n: usize,
    ) -> DVector<f64> {
        if noise.is_silent() {
            return DVector::zeros(n);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(node as u64);
        rng.set_word_pos(2 * n as u128 * (iteration as u128 - 1));
        DVector::from_fn(n, |_, _| noise.draw(&mut rng))
    }
}

/// Penalty `c(k) = c0` for `k < k0`, `c0·γ` from `k0` on; constant without a switch.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PenaltySchedule {
    pub c0: f64,
    pub switch_iter: Option<usize>,
    pub factor: f64,
}

impl PenaltySchedule {
    pub fn constant(c0: f64) -> Self {
        Self {
            c0,
            switch_iter: None,
            factor: 1.0,
        }
    }

    pub fn switched(c0: f64, switch_iter: usize, factor: f64) -> Self {
        Self {
            c0,
            switch_iter: Some(switch_iter),
            factor,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.c0 > 0.0 && self.factor > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "penalty and switch factor must be positive, got c0 = {}, factor = {}",
                self.c0, self.factor
            )));
        }
        Ok(())
    }

    /// Penalty used by the step from iteration `k` to `k + 1`.
    pub fn c_at(&self, k: usize) -> f64 {
        match self.switch_iter {
            Some(k0) if k >= k0 => self.c0 * self.factor,
            _ => self.c0,
        }
    }

    /// Penalty in effect after the switch (or `c0`).
    pub fn final_c(&self) -> f64 {
        match self.switch_iter {
            Some(_) => self.c0 * self.factor,
            None => self.c0,
        }
    }
}

/// Per-node iterates after `k` rounds.
#[derive(Debug, Clone, PartialEq)]
pub struct AdmmState {
    pub x: Vec<DVector<f64>>,
    pub alpha: Vec<DVector<f64>>,
    /// Last transmitted estimates `x + e`.
    pub x_hat: Vec<DVector<f64>>,
    pub k: usize,
}

impl AdmmState {
    /// Node-stacked `x`.
    pub fn stacked_x(&self) -> DVector<f64> {
        stack(&self.x)
    }

    pub fn stacked_x_hat(&self) -> DVector<f64> {
        stack(&self.x_hat)
    }

    /// `Σ_i α_i`; stays zero since every round adds a Laplacian image.
    pub fn alpha_sum(&self) -> DVector<f64> {
        self.alpha
            .iter()
            .fold(DVector::zeros(self.alpha[0].len()), |acc, a| acc + a)
    }
}

fn stack(blocks: &[DVector<f64>]) -> DVector<f64> {
    let n = blocks[0].len();
    let mut out = DVector::zeros(blocks.len() * n);
    for (i, b) in blocks.iter().enumerate() {
        out.rows_mut(i * n, n).copy_from(b);
    }
    out
}

/// All-zero state at `k = 0`.
pub fn init_state<F: LocalObjective>(prob: &ConsensusProblem<F>, g: &Graph) -> Result<AdmmState> {
    if prob.node_count() != g.node_count() {
        return Err(Error::SizeMismatch {
            problem: prob.node_count(),
            graph: g.node_count(),
        });
    }
    let zeros = vec![DVector::zeros(prob.dim()); g.node_count()];
    Ok(AdmmState {
        x: zeros.clone(),
        alpha: zeros.clone(),
        x_hat: zeros,
        k: 0,
    })
}

/// Node-update factorizations for one penalty value.
pub struct LocalFactors<F: LocalObjective> {
    c: f64,
    factors: Vec<F::Factor>,
}

impl<F: LocalObjective> LocalFactors<F> {
    pub fn new(prob: &ConsensusProblem<F>, g: &Graph, c: f64) -> Result<Self> {
        if c <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "c must be positive, got {c}"
            )));
        }
        let factors = prob
            .locals()
            .iter()
            .enumerate()
            .map(|(i, f)| f.factor(2.0 * c * g.degree(i) as f64))
            .collect::<Result<_>>()?;
        Ok(Self { c, factors })
    }

    pub fn c(&self) -> f64 {
        self.c
    }
}

/// One synchronous round with penalty `c`.
pub fn step<F: LocalObjective>(
    prob: &ConsensusProblem<F>,
    g: &Graph,
    state: &AdmmState,
    c: f64,
    noise: &NoiseModel,
    source: &NoiseSource,
) -> Result<AdmmState> {
    let factors = LocalFactors::new(prob, g, c)?;
    let order: Vec<usize> = (0..g.node_count()).collect();
    step_ordered(prob, g, state, &factors, noise, source, &order)
}

/// [`step`] with cached factorizations and an explicit node processing order.
///
/// Every update reads only round-`k` data, so `order` does not affect the result.
pub fn step_ordered<F: LocalObjective>(
    prob: &ConsensusProblem<F>,
    g: &Graph,
    state: &AdmmState,
    factors: &LocalFactors<F>,
    noise: &NoiseModel,
    source: &NoiseSource,
    order: &[usize],
) -> Result<AdmmState> {
    let nodes = g.node_count();
    let n = prob.dim();
    let c = factors.c;
    let next_k = state.k + 1;

    let mut x = state.x.clone();
    for &i in order {
        let neighbor_sum = neighbor_sum(g, &state.x_hat, i, n);
        let (shift, linear) = update_terms(
            c,
            g.degree(i),
            &state.alpha[i],
            &state.x_hat[i],
            &neighbor_sum,
        );
        x[i] =
            prob.locals()[i].solve_penalized(&factors.factors[i], shift, &linear, &state.x[i])?;
    }

    let mut x_hat = x.clone();
    if !noise.is_silent() {
        for &i in order {
            x_hat[i] += source.node_error(noise, i, next_k, n);
        }
    }

    let mut alpha = state.alpha.clone();
    for &i in order {
        let deg = g.degree(i) as f64;
        let disagreement = &x_hat[i] * deg - neighbor_sum(g, &x_hat, i, n);
        alpha[i] += disagreement * c;
    }
    debug_assert_eq!(x.len(), nodes);
    Ok(AdmmState {
        x,
        alpha,
        x_hat,
        k: next_k,
    })
}

fn neighbor_sum(g: &Graph, values: &[DVector<f64>], i: usize, n: usize) -> DVector<f64> {
    g.neighbors(i)
        .iter()
        .fold(DVector::zeros(n), |acc, &j| acc + &values[j])
}

/// One row of a [`RunTrace`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub k: usize,
    /// `‖x^k − x*‖² / ‖x*‖²` on the node-stacked vectors.
    pub rel_error: f64,
    /// `‖x^k − x*‖²`.
    pub sq_error: f64,
    /// `c‖ẑ^k − z*‖² + (1/c)‖β̂^k − β*‖²` when dual tracking is on.
    pub d_gnorm: Option<f64>,
    /// Penalty used to produce iteration `k` (`c(0)` for the initial row).
    pub c_effective: f64,
}

/// Iteration history of one run, including the initial state.
#[derive(Debug, Clone)]
pub struct RunTrace {
    pub records: Vec<TraceRecord>,
    pub final_state: AdmmState,
    pub seed: u64,
    /// `‖x*‖²` of the node-stacked optimum.
    pub reference_norm_sq: f64,
}

impl RunTrace {
    pub fn rel_errors(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.rel_error).collect()
    }

    pub fn sq_errors(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.sq_error).collect()
    }

    /// The G-norm series, if every row has one.
    pub fn d_series(&self) -> Option<Vec<f64>> {
        self.records.iter().map(|r| r.d_gnorm).collect()
    }

    /// CSV with header `iter,rel_error,d_gnorm,c_effective`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("iter,rel_error,d_gnorm,c_effective\n");
        for r in &self.records {
            let d = r.d_gnorm.map(fmt_f64).unwrap_or_default();
            writeln!(
                out,
                "{},{},{},{}",
                r.k,
                fmt_f64(r.rel_error),
                d,
                fmt_f64(r.c_effective)
            )
            .unwrap();
        }
        out
    }
}

/// Settings for [`run`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunConfig {
    pub schedule: PenaltySchedule,
    pub noise: NoiseModel,
    pub iterations: usize,
    pub seed: u64,
    pub track_dual: bool,
}

/// Runs `iterations` rounds from the zero state and records the error history.
///
/// With dual tracking the observer keeps `ẑ^k = ½M+ᵀx̂^k` and
/// `β̂^{k+1} = β̂^k + (c/2)M-ᵀx̂^{k+1}` and records their G-norm distance to the
/// KKT point. Cached factorizations are rebuilt when the schedule switches;
/// `α` carries over unchanged.
pub fn run<F: LocalObjective>(
    prob: &ConsensusProblem<F>,
    g: &Graph,
    cfg: &RunConfig,
) -> Result<RunTrace> {
    let dual = if cfg.track_dual {
        Some(dual_optimum(prob, g, cfg.schedule.c0)?)
    } else {
        None
    };
    let x_c = match &dual {
        Some(d) => d.x_c.clone(),
        None => prob.centralized_solution()?,
    };
    run_with_reference(prob, g, cfg, &x_c, dual.as_ref())
}

/// [`run`] with a precomputed centralized solution and dual optimum.
pub fn run_with_reference<F: LocalObjective>(
    prob: &ConsensusProblem<F>,
    g: &Graph,
    cfg: &RunConfig,
    x_c: &DVector<f64>,
    dual: Option<&DualOptimum>,
) -> Result<RunTrace> {
    if cfg.iterations == 0 {
        return Err(Error::InvalidParameter(
            "iterations must be at least 1".into(),
        ));
    }
    cfg.schedule.validate()?;
    if cfg.track_dual && dual.is_none() {
        return Err(Error::InvalidParameter(
            "dual tracking needs a dual optimum".into(),
        ));
    }
    let dual = if cfg.track_dual { dual } else { None };
    let n = prob.dim();
    let source = NoiseSource::new(cfg.seed);
    let mut state = init_state(prob, g)?;
    let order: Vec<usize> = (0..g.node_count()).collect();

    let x_star = DVector::from_fn(g.node_count() * n, |k, _| x_c[k % n]);
    let reference_norm_sq = x_star.norm_squared();
    let mut beta_hat = DVector::zeros(g.arcs().len() * n);
    let mut z_hat = g.half_mplus_t(&state.stacked_x_hat(), n);

    let mut records = Vec::with_capacity(cfg.iterations + 1);
    let record =
        |state: &AdmmState, z: &DVector<f64>, b: &DVector<f64>, c: f64| -> Result<TraceRecord> {
            let x = state.stacked_x();
            let sq_error = (&x - &x_star).norm_squared();
            Ok(TraceRecord {
                k: state.k,
                rel_error: relative_error(&x, x_c)?,
                sq_error,
                d_gnorm: dual.map(|d| g_norm_distance_at(z, b, d, c)).transpose()?,
                c_effective: c,
            })
        };
    records.push(record(&state, &z_hat, &beta_hat, cfg.schedule.c_at(0))?);

    let mut factors = LocalFactors::new(prob, g, cfg.schedule.c_at(0))?;
    for k in 0..cfg.iterations {
        let c = cfg.schedule.c_at(k);
        if c != factors.c {
            factors = LocalFactors::new(prob, g, c)?;
        }
        state = step_ordered(prob, g, &state, &factors, &cfg.noise, &source, &order)?;
        if dual.is_some() {
            let x_hat = state.stacked_x_hat();
            beta_hat += g.mminus_t(&x_hat, n) * (c / 2.0);
            z_hat = g.half_mplus_t(&x_hat, n);
        }
        records.push(record(&state, &z_hat, &beta_hat, c)?);
    }
    Ok(RunTrace {
        records,
        final_state: state,
        seed: cfg.seed,
        reference_norm_sq,
    })
}

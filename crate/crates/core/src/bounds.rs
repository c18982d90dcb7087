//! Convergence-rate constants, steady-state error bounds, the KKT dual
//! optimum, and the empirical rate estimator.
//!
//! The bound formulas take [`SpectralStats`] scalars rather than matrices so
//! they can be checked against hand arithmetic.

use nalgebra::{DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Graph, SpectralStats};
use crate::objectives::{ConsensusProblem, LocalObjective};

/// Number of log-spaced `μ` points used when maximizing the rate over `μ`.
pub const MU_GRID_POINTS: usize = 400;
/// Range of `μ − 1` covered by the grid, so `μ ∈ [1 + 1e-4, 100]`.
pub const MU_GRID_RANGE: (f64, f64) = (1e-4, 99.0);
/// Series values at or below `FLOOR · d⁰` are excluded from the rate estimate.
pub const RATE_FLOOR: f64 = 1e-24;

/// A rate `ρ = 1/(1+δ)` together with the `(μ, c)` it was evaluated at.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateParams {
    pub mu: f64,
    pub c: f64,
    pub delta: f64,
    pub rho: f64,
}

impl RateParams {
    pub fn new(mu: f64, c: f64, delta: f64) -> Self {
        Self {
            mu,
            c,
            delta,
            rho: 1.0 / (1.0 + delta),
        }
    }
}

/// Contraction constant
/// `δ = min{ (μ−1)σ̃²_min(M-) / (μσ²_max(M+)), m_f / ((c/4)σ²_max(M+) + (μ/c)M_f²σ̃⁻²_min(M-)) }`.
pub fn delta_theoretical(
    mu: f64,
    c: f64,
    m_f: f64,
    lipschitz: f64,
    sigma_max_mplus: f64,
    sigma_min_nz_mminus: f64,
) -> Result<f64> {
    if m_f <= 0.0 {
        return Err(Error::RequiresStrongConvexity(m_f));
    }
    if mu <= 1.0 || c <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "need mu > 1 and c > 0, got mu = {mu}, c = {c}"
        )));
    }
    let smax2 = sigma_max_mplus * sigma_max_mplus;
    let smin2 = sigma_min_nz_mminus * sigma_min_nz_mminus;
    let consensus = (mu - 1.0) * smin2 / (mu * smax2);
    let curvature = m_f / (c / 4.0 * smax2 + mu / c * lipschitz * lipschitz / smin2);
    Ok(consensus.min(curvature))
}

/// `(μ*, c*, δ*)` maximizing [`delta_theoretical`] in closed form.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimalParams {
    pub mu: f64,
    pub c: f64,
    pub delta: f64,
    /// Network condition number `σ_max(M+)/σ̃_min(M-)`.
    pub k_g: f64,
    /// Objective condition number `M_f/m_f`.
    pub k_f: f64,
}

impl OptimalParams {
    pub fn rate(&self) -> RateParams {
        RateParams::new(self.mu, self.c, self.delta)
    }
}

pub fn optimal_params(
    m_f: f64,
    lipschitz: f64,
    sigma_max_mplus: f64,
    sigma_min_nz_mminus: f64,
) -> Result<OptimalParams> {
    if m_f <= 0.0 {
        return Err(Error::RequiresStrongConvexity(m_f));
    }
    let k_g = sigma_max_mplus / sigma_min_nz_mminus;
    let k_f = lipschitz / m_f;
    let ratio = k_g / k_f;
    let mu = 1.0 / (1.0 + ratio * ratio / 2.0 - ratio / 2.0 * (ratio * ratio + 4.0).sqrt());
    let c = 2.0 * mu.sqrt() * lipschitz / (sigma_max_mplus * sigma_min_nz_mminus);
    let delta =
        (1.0 / (k_f * k_f) + 4.0 / (k_g * k_g)).sqrt() / (2.0 * k_f) - 1.0 / (2.0 * k_f * k_f);
    Ok(OptimalParams {
        mu,
        c,
        delta,
        k_g,
        k_f,
    })
}

/// Log-spaced `μ` grid over `1 + [1e-4, 99]`.
pub fn mu_grid() -> impl Iterator<Item = f64> {
    let (lo, hi) = (MU_GRID_RANGE.0.ln(), MU_GRID_RANGE.1.ln());
    (0..MU_GRID_POINTS).map(move |k| {
        let t = k as f64 / (MU_GRID_POINTS - 1) as f64;
        1.0 + (lo + t * (hi - lo)).exp()
    })
}

/// Best [`delta_theoretical`] over [`mu_grid`] for a fixed penalty `c`.
pub fn delta_max_over_mu(
    c: f64,
    m_f: f64,
    lipschitz: f64,
    sigma_max_mplus: f64,
    sigma_min_nz_mminus: f64,
) -> Result<RateParams> {
    let mut best = RateParams::new(f64::NAN, c, f64::NEG_INFINITY);
    for mu in mu_grid() {
        let d = delta_theoretical(mu, c, m_f, lipschitz, sigma_max_mplus, sigma_min_nz_mminus)?;
        if d > best.delta {
            best = RateParams::new(mu, c, d);
        }
    }
    Ok(best)
}

/// The `δ` feeding the theoretical upper bound at penalty `c`: the closed-form
/// `δ*` when `c` equals `c*` (to 1e-12 relative), otherwise the `μ`-grid maximum.
pub fn delta_for_penalty(
    c: f64,
    m_f: f64,
    lipschitz: f64,
    sigma_max_mplus: f64,
    sigma_min_nz_mminus: f64,
) -> Result<RateParams> {
    let opt = optimal_params(m_f, lipschitz, sigma_max_mplus, sigma_min_nz_mminus)?;
    if (c - opt.c).abs() <= 1e-12 * opt.c {
        Ok(opt.rate())
    } else {
        delta_max_over_mu(c, m_f, lipschitz, sigma_max_mplus, sigma_min_nz_mminus)
    }
}

/// Upper bound on `lim E‖x^k − x*‖²`:
/// `(4+3δ) / (δ(m_f + 2cλ_min(W))) · 2cnEσ_n²`.
pub fn ub_steady_state(
    delta: f64,
    c: f64,
    n: usize,
    edge_count: usize,
    m_f: f64,
    lambda_min_w: f64,
    sigma_n_sq: f64,
) -> Result<f64> {
    if !(delta > 0.0) {
        return Err(Error::NonpositiveDelta(delta));
    }
    if m_f <= 0.0 {
        return Err(Error::RequiresStrongConvexity(m_f));
    }
    if c <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "c must be positive, got {c}"
        )));
    }
    let scale = 2.0 * c * n as f64 * edge_count as f64 * sigma_n_sq;
    Ok((4.0 + 3.0 * delta) / (delta * (m_f + 2.0 * c * lambda_min_w)) * scale)
}

/// Lower bound on `E‖x^k − x*‖²`: `8nEc²σ_n² / (M_f + 2cσ_max(W))²`.
pub fn lb_steady_state(
    c: f64,
    n: usize,
    edge_count: usize,
    lipschitz: f64,
    sigma_max_w: f64,
    sigma_n_sq: f64,
) -> Result<f64> {
    if c <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "c must be positive, got {c}"
        )));
    }
    let denom = lipschitz + 2.0 * c * sigma_max_w;
    Ok(8.0 * n as f64 * edge_count as f64 * c * c * sigma_n_sq / (denom * denom))
}

/// Primal-dual optimum satisfying the KKT system of the edge-split problem.
#[derive(Debug, Clone)]
pub struct DualOptimum {
    /// Centralized minimizer `x^C`.
    pub x_c: DVector<f64>,
    /// `N` stacked copies of `x^C`.
    pub x_star: DVector<f64>,
    /// `½ M+ᵀ x*`.
    pub z_star: DVector<f64>,
    /// Minimum-norm solution of `M- β = −∇f(x*)`.
    pub beta_star: DVector<f64>,
    /// Penalty defining the G-norm.
    pub c: f64,
    pub n: usize,
}

impl DualOptimum {
    /// `‖∇f(x*) + M-β*‖`.
    pub fn stationarity_residual<F: LocalObjective>(
        &self,
        prob: &ConsensusProblem<F>,
        g: &Graph,
    ) -> f64 {
        (stacked_gradient(prob, &self.x_star) + g.mminus(&self.beta_star, self.n)).norm()
    }
}

/// Node-stacked gradient `∇f(x) = (∇f_1(x_1); …; ∇f_N(x_N))`.
pub fn stacked_gradient<F: LocalObjective>(
    prob: &ConsensusProblem<F>,
    x: &DVector<f64>,
) -> DVector<f64> {
    let n = prob.dim();
    let mut out = DVector::zeros(x.len());
    for i in 0..prob.node_count() {
        let xi = x.rows(i * n, n).into_owned();
        out.rows_mut(i * n, n).copy_from(&prob.gradient(i, &xi));
    }
    out
}

/// Builds `(x*, z*, β*)` from the centralized solution.
///
/// `β*` is `M-ᵀ y` with `y = (M-M-ᵀ)⁺(−∇f(x*))`; since `M-M-ᵀ = 2(L ⊗ Iₙ)`
/// the pseudo-inverse is applied per coordinate through an eigen-decomposition
/// of the plain Laplacian. Being in the range of `M-ᵀ`, this `β*` is the
/// minimum-norm least-squares solution.
pub fn dual_optimum<F: LocalObjective>(
    prob: &ConsensusProblem<F>,
    g: &Graph,
    c: f64,
) -> Result<DualOptimum> {
    if prob.node_count() != g.node_count() {
        return Err(Error::SizeMismatch {
            problem: prob.node_count(),
            graph: g.node_count(),
        });
    }
    let n = prob.dim();
    let nodes = g.node_count();
    let x_c = prob.centralized_solution()?;
    let x_star = DVector::from_fn(nodes * n, |k, _| x_c[k % n]);
    let z_star = g.half_mplus_t(&x_star, n);
    let rhs = -stacked_gradient(prob, &x_star);

    let eig = SymmetricEigen::new(g.laplacian());
    let cutoff = 1e-10 * eig.eigenvalues.amax();
    let mut y = DVector::zeros(nodes * n);
    for r in 0..n {
        let b = DVector::from_fn(nodes, |i, _| rhs[i * n + r]);
        let mut sol = DVector::zeros(nodes);
        for (k, &lambda) in eig.eigenvalues.iter().enumerate() {
            if lambda > cutoff {
                let v = eig.eigenvectors.column(k);
                sol += v * (v.dot(&b) / (2.0 * lambda));
            }
        }
        for i in 0..nodes {
            y[i * n + r] = sol[i];
        }
    }
    let beta_star = g.mminus_t(&y, n);
    Ok(DualOptimum {
        x_c,
        x_star,
        z_star,
        beta_star,
        c,
        n,
    })
}

/// G-norm distance `c‖z − z*‖² + (1/c)‖β − β*‖²`.
pub fn g_norm_distance(z: &DVector<f64>, beta: &DVector<f64>, opt: &DualOptimum) -> Result<f64> {
    g_norm_distance_at(z, beta, opt, opt.c)
}

/// [`g_norm_distance`] with an explicit penalty, for schedules that change `c`.
pub fn g_norm_distance_at(
    z: &DVector<f64>,
    beta: &DVector<f64>,
    opt: &DualOptimum,
    c: f64,
) -> Result<f64> {
    for v in [z, beta] {
        if v.len() != opt.z_star.len() {
            return Err(Error::DimensionMismatch {
                expected: opt.z_star.len(),
                actual: v.len(),
            });
        }
    }
    Ok(c * (z - &opt.z_star).norm_squared() + (beta - &opt.beta_star).norm_squared() / c)
}

/// Geometric-mean contraction of a noiseless G-norm series.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExperimentalRate {
    pub rho_bar: f64,
    pub delta_e: f64,
    /// Number of ratios averaged.
    pub k_used: usize,
    /// Largest single-step ratio `d^k / d^{k-1}` among those averaged.
    pub max_ratio: f64,
}

/// `ρ̄_e = (Π_{k=1..K} d^k/d^{k−1})^{1/K}` accumulated in log-space and
/// `δ_e = 1/ρ̄_e − 1`.
///
/// `K` is the length of the leading run of values above `RATE_FLOOR · d⁰`,
/// capped at `k_cap`.
pub fn experimental_rate(d: &[f64], k_cap: usize) -> Result<ExperimentalRate> {
    let d0 = *d.first().ok_or(Error::DegenerateSeries("empty series"))?;
    if !(d0 > 0.0) {
        return Err(Error::DegenerateSeries("d0 must be positive"));
    }
    let floor = RATE_FLOOR * d0;
    let above = d[1..].iter().take_while(|&&v| v > floor).count();
    let k = above.min(k_cap);
    if k == 0 {
        return Err(Error::DegenerateSeries("no ratios above the floor"));
    }
    let mut log_sum = 0.0;
    let mut max_ratio = f64::NEG_INFINITY;
    for w in d[..=k].windows(2) {
        let ratio = w[1] / w[0];
        log_sum += ratio.ln();
        max_ratio = max_ratio.max(ratio);
    }
    let rho_bar = (log_sum / k as f64).exp();
    Ok(ExperimentalRate {
        rho_bar,
        delta_e: 1.0 / rho_bar - 1.0,
        k_used: k,
        max_ratio,
    })
}

/// Theoretical and experimental steady-state bounds for one configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundsReport {
    pub ub_theoretical: f64,
    pub ub_experimental: Option<f64>,
    pub lb: f64,
    pub delta_star: f64,
    pub delta_used: f64,
    pub mu_used: f64,
    pub delta_e: Option<f64>,
    pub rho_bar_e: Option<f64>,
    pub c: f64,
    pub c_star: f64,
    pub mu_star: f64,
    #[serde(rename = "sigma_max_Mplus")]
    pub sigma_max_mplus: f64,
    #[serde(rename = "sigma_min_nz_Mminus")]
    pub sigma_min_nz_mminus: f64,
    #[serde(rename = "lambda_min_W")]
    pub lambda_min_w: f64,
    #[serde(rename = "sigma_max_W")]
    pub sigma_max_w: f64,
    pub n: usize,
    #[serde(rename = "E")]
    pub edge_count: usize,
    pub sigma_n_sq: f64,
    pub m_f: f64,
    #[serde(rename = "M_f")]
    pub lipschitz: f64,
    /// Set when the lower bound exceeds the theoretical upper bound; the two
    /// are derived independently so this is reported, not prevented.
    pub lb_above_ub: bool,
}

impl BoundsReport {
    /// Assembles every bound for penalty `c`, noise variance `σ_n²`, and an
    /// optional measured rate.
    pub fn compute(
        stats: &SpectralStats,
        m_f: f64,
        lipschitz: f64,
        n: usize,
        c: f64,
        sigma_n_sq: f64,
        measured: Option<&ExperimentalRate>,
    ) -> Result<Self> {
        let (smax, smin) = (stats.sigma_max_mplus, stats.sigma_min_nz_mminus);
        let opt = optimal_params(m_f, lipschitz, smax, smin)?;
        let used = delta_for_penalty(c, m_f, lipschitz, smax, smin)?;
        let e = stats.edge_count;
        let ub = |delta| ub_steady_state(delta, c, n, e, m_f, stats.lambda_min_w, sigma_n_sq);
        let ub_theoretical = ub(used.delta)?;
        let ub_experimental = measured.map(|r| ub(r.delta_e)).transpose()?;
        let lb = lb_steady_state(c, n, e, lipschitz, stats.sigma_max_w, sigma_n_sq)?;
        Ok(Self {
            ub_theoretical,
            ub_experimental,
            lb,
            delta_star: opt.delta,
            delta_used: used.delta,
            mu_used: used.mu,
            delta_e: measured.map(|r| r.delta_e),
            rho_bar_e: measured.map(|r| r.rho_bar),
            c,
            c_star: opt.c,
            mu_star: opt.mu,
            sigma_max_mplus: smax,
            sigma_min_nz_mminus: smin,
            lambda_min_w: stats.lambda_min_w,
            sigma_max_w: stats.sigma_max_w,
            n,
            edge_count: e,
            sigma_n_sq,
            m_f,
            lipschitz,
            lb_above_ub: lb > ub_theoretical,
        })
    }

    /// The bounds on the relative display scale `√(bound / ‖x*‖²)`.
    pub fn display_scale(&self, x_star_norm_sq: f64) -> DisplayBounds {
        let f = |v: f64| (v / x_star_norm_sq).sqrt();
        DisplayBounds {
            ub_t: f(self.ub_theoretical),
            ub_e: self.ub_experimental.map(f),
            lb: f(self.lb),
        }
    }
}

/// Bounds converted to the relative-error display scale.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DisplayBounds {
    pub ub_t: f64,
    pub ub_e: Option<f64>,
    pub lb: f64,
}

//! Per-node objectives, the local x-update, and the centralized reference solution.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn, SymmetricEigen};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::format::{fmt_f64, parse_f64};

/// Newton tolerance on the gradient norm for non-quadratic local solves.
pub const NEWTON_TOL: f64 = 1e-10;
/// Iteration cap for the damped Newton solver.
pub const NEWTON_MAX_ITER: usize = 50;

/// A smooth convex local objective as seen by the ADMM node update.
///
/// The node update minimizes `f(x) + (shift/2)‖x‖² − ⟨linear, x⟩`, i.e. solves
/// `∇f(x) + shift·x = linear`. `Factor` caches whatever can be reused while
/// `shift` stays fixed.
pub trait LocalObjective: Send + Sync {
    type Factor: Send + Sync;

    fn dim(&self) -> usize;
    fn value(&self, x: &DVector<f64>) -> f64;
    fn gradient(&self, x: &DVector<f64>) -> DVector<f64>;
    fn hessian(&self, x: &DVector<f64>) -> DMatrix<f64>;
    fn factor(&self, shift: f64) -> Result<Self::Factor>;
    fn solve_penalized(
        &self,
        factor: &Self::Factor,
        shift: f64,
        linear: &DVector<f64>,
        warm: &DVector<f64>,
    ) -> Result<DVector<f64>>;
}

/// Damped Newton on `f(x) + (shift/2)‖x‖² − ⟨linear, x⟩` with Armijo backtracking.
///
/// Generic fallback for [`LocalObjective::solve_penalized`].
pub fn damped_newton<F: LocalObjective + ?Sized>(
    obj: &F,
    shift: f64,
    linear: &DVector<f64>,
    warm: &DVector<f64>,
) -> Result<DVector<f64>> {
    if shift <= 0.0 {
        return Err(Error::SingularSystem);
    }
    let phi = |x: &DVector<f64>| obj.value(x) + 0.5 * shift * x.norm_squared() - linear.dot(x);
    let tol = NEWTON_TOL * (1.0 + linear.norm());
    let mut x = warm.clone();
    for _ in 0..NEWTON_MAX_ITER {
        let g = obj.gradient(&x) + &x * shift - linear;
        if g.norm() <= tol {
            return Ok(x);
        }
        let mut h = obj.hessian(&x);
        for d in 0..h.nrows() {
            h[(d, d)] += shift;
        }
        let step = Cholesky::new(h).ok_or(Error::SingularSystem)?.solve(&(-&g));
        let slope = g.dot(&step);
        let base = phi(&x);
        let mut t = 1.0;
        while t > 1e-12 && phi(&(&x + &step * t)) > base + 1e-4 * t * slope {
            t *= 0.5;
        }
        x += step * t;
    }
    let g = obj.gradient(&x) + &x * shift - linear;
    if g.norm() <= tol {
        Ok(x)
    } else {
        Err(Error::NoConvergence(NEWTON_MAX_ITER))
    }
}

/// `f(x) = ½‖y − Mx‖²` with cached `H = MᵀM` and `Mᵀy`.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalQuadratic {
    measurement: DMatrix<f64>,
    observation: DVector<f64>,
    hessian: DMatrix<f64>,
    mty: DVector<f64>,
}

impl LocalQuadratic {
    pub fn new(measurement: DMatrix<f64>, observation: DVector<f64>) -> Result<Self> {
        if measurement.nrows() != observation.len() {
            return Err(Error::DimensionMismatch {
                expected: measurement.nrows(),
                actual: observation.len(),
            });
        }
        let hessian = measurement.tr_mul(&measurement);
        let mty = measurement.tr_mul(&observation);
        Ok(Self {
            measurement,
            observation,
            hessian,
            mty,
        })
    }

    pub fn measurement(&self) -> &DMatrix<f64> {
        &self.measurement
    }

    pub fn observation(&self) -> &DVector<f64> {
        &self.observation
    }

    pub fn hessian_matrix(&self) -> &DMatrix<f64> {
        &self.hessian
    }

    pub fn mty(&self) -> &DVector<f64> {
        &self.mty
    }

    /// Extreme eigenvalues `(λ_min, λ_max)` of the Hessian.
    pub fn curvature(&self) -> (f64, f64) {
        let eig = SymmetricEigen::new(self.hessian.clone()).eigenvalues;
        (eig.min().max(0.0), eig.max())
    }
}

impl LocalObjective for LocalQuadratic {
    type Factor = Cholesky<f64, Dyn>;

    fn dim(&self) -> usize {
        self.measurement.ncols()
    }

    fn value(&self, x: &DVector<f64>) -> f64 {
        0.5 * (&self.observation - &self.measurement * x).norm_squared()
    }

    fn gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.hessian * x - &self.mty
    }

    fn hessian(&self, _x: &DVector<f64>) -> DMatrix<f64> {
        self.hessian.clone()
    }

    fn factor(&self, shift: f64) -> Result<Self::Factor> {
        if shift <= 0.0 {
            return Err(Error::SingularSystem);
        }
        let mut system = self.hessian.clone();
        for d in 0..system.nrows() {
            system[(d, d)] += shift;
        }
        Cholesky::new(system).ok_or(Error::SingularSystem)
    }

    fn solve_penalized(
        &self,
        factor: &Self::Factor,
        _shift: f64,
        linear: &DVector<f64>,
        _warm: &DVector<f64>,
    ) -> Result<DVector<f64>> {
        Ok(factor.solve(&(&self.mty + linear)))
    }
}

/// Right-hand side of the node update, `−α + c(|N_i|·self + Σ_j neighbor_j)`,
/// and the matching shift `2c|N_i|`.
pub fn update_terms(
    c: f64,
    degree: usize,
    alpha: &DVector<f64>,
    self_prev: &DVector<f64>,
    neighbor_sum: &DVector<f64>,
) -> (f64, DVector<f64>) {
    let deg = degree as f64;
    let linear = (self_prev * deg + neighbor_sum) * c - alpha;
    (2.0 * c * deg, linear)
}

/// Sum of local objectives plus certified curvature constants.
#[derive(Debug, Clone)]
pub struct ConsensusProblem<F = LocalQuadratic> {
    locals: Vec<F>,
    m_f: f64,
    lipschitz: f64,
}

impl<F: LocalObjective> ConsensusProblem<F> {
    /// Builds a problem from objectives whose constants the caller vouches for.
    pub fn with_constants(locals: Vec<F>, m_f: f64, lipschitz: f64) -> Result<Self> {
        check_dims(&locals)?;
        if !(m_f >= 0.0 && m_f <= lipschitz) {
            return Err(Error::InvalidParameter(format!(
                "need 0 <= m_f <= M_f, got m_f = {m_f}, M_f = {lipschitz}"
            )));
        }
        Ok(Self {
            locals,
            m_f,
            lipschitz,
        })
    }

    pub fn locals(&self) -> &[F] {
        &self.locals
    }

    pub fn node_count(&self) -> usize {
        self.locals.len()
    }

    pub fn dim(&self) -> usize {
        self.locals[0].dim()
    }

    /// Strong convexity modulus `min_i m_{f_i}`.
    pub fn m_f(&self) -> f64 {
        self.m_f
    }

    /// Gradient Lipschitz constant `max_i M_{f_i}`.
    pub fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    pub fn strongly_convex(&self) -> bool {
        self.m_f > 1e-10 * self.lipschitz.max(1.0)
    }

    pub fn gradient(&self, i: usize, x: &DVector<f64>) -> DVector<f64> {
        self.locals[i].gradient(x)
    }

    /// Solves node `i`'s x-update
    /// `∇f_i(x) + α_i + 2c|N_i|x − c(|N_i|·self_prev + neighbor_sum) = 0`.
    pub fn local_x_update(
        &self,
        i: usize,
        c: f64,
        degree: usize,
        alpha: &DVector<f64>,
        self_prev: &DVector<f64>,
        neighbor_sum: &DVector<f64>,
    ) -> Result<DVector<f64>> {
        if c <= 0.0 || degree == 0 {
            return Err(Error::SingularSystem);
        }
        let (shift, linear) = update_terms(c, degree, alpha, self_prev, neighbor_sum);
        let local = &self.locals[i];
        local.solve_penalized(&local.factor(shift)?, shift, &linear, self_prev)
    }

    /// Minimizer of `Σ_i f_i` by Newton's method on the aggregate.
    ///
    /// Fails with [`Error::SingularAggregate`] when the summed Hessian is
    /// numerically rank-deficient; no pseudo-inverse fallback.
    pub fn centralized_solution(&self) -> Result<DVector<f64>> {
        let n = self.dim();
        let mut x = DVector::zeros(n);
        let total_grad = |x: &DVector<f64>| {
            self.locals
                .iter()
                .fold(DVector::zeros(n), |acc, f| acc + f.gradient(x))
        };
        let g0 = total_grad(&x).norm();
        let tol = 1e-13 * (1.0 + g0);
        let mut best = f64::INFINITY;
        for _ in 0..NEWTON_MAX_ITER {
            let g = total_grad(&x);
            let gn = g.norm();
            if gn <= tol || gn >= best {
                break;
            }
            best = gn;
            let h = self
                .locals
                .iter()
                .fold(DMatrix::zeros(n, n), |acc, f| acc + f.hessian(&x));
            let eig = SymmetricEigen::new(h.clone()).eigenvalues;
            let (min_eig, max_eig) = (eig.min(), eig.max());
            if min_eig <= 1e-12 * max_eig.abs().max(f64::MIN_POSITIVE) {
                return Err(Error::SingularAggregate { min_eig, max_eig });
            }
            let step = Cholesky::new(h)
                .ok_or(Error::SingularAggregate { min_eig, max_eig })?
                .solve(&(-&g));
            x += step;
        }
        Ok(x)
    }
}

impl ConsensusProblem<LocalQuadratic> {
    /// Builds a least-squares problem and certifies `m_f`, `M_f` by eigen-solve.
    pub fn from_quadratics(locals: Vec<LocalQuadratic>) -> Result<Self> {
        check_dims(&locals)?;
        let (m_f, lipschitz) = certify_constants(&locals);
        Ok(Self {
            locals,
            m_f,
            lipschitz,
        })
    }

    /// Recomputes `(m_f, M_f)` from the local Hessians.
    pub fn certify_constants(&self) -> (f64, f64) {
        certify_constants(&self.locals)
    }
}

fn check_dims<F: LocalObjective>(locals: &[F]) -> Result<usize> {
    let first = locals
        .first()
        .ok_or_else(|| Error::InvalidParameter("problem needs at least one node".into()))?
        .dim();
    for f in locals {
        if f.dim() != first {
            return Err(Error::DimensionMismatch {
                expected: first,
                actual: f.dim(),
            });
        }
    }
    Ok(first)
}

/// `(min_i λ_min(H_i), max_i λ_max(H_i))`.
pub fn certify_constants(locals: &[LocalQuadratic]) -> (f64, f64) {
    locals
        .iter()
        .map(LocalQuadratic::curvature)
        .fold((f64::INFINITY, 0.0f64), |(lo, hi), (a, b)| {
            (lo.min(a), hi.max(b))
        })
}

/// Parameters of the synthetic least-squares suites.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LeastSquaresSpec {
    pub nodes: usize,
    pub dim: usize,
    pub rows: usize,
    /// Target strong-convexity modulus; `0` disables singular-value rescaling.
    pub m_f: f64,
    pub lipschitz: f64,
    pub obs_var: f64,
    pub seed: u64,
}

/// Synthetic least-squares problem with shared ground truth.
#[derive(Debug, Clone)]
pub struct GeneratedProblem {
    pub problem: ConsensusProblem,
    pub x_true: DVector<f64>,
    pub seed: u64,
}

/// Draws `x_true ~ N(0, I)`, Gaussian measurement matrices, and noisy
/// observations `y_i = M_i x_true + n_i`, `n_i ~ N(0, σ² I)`.
///
/// When `m_f > 0` each `M_i`'s singular values are mapped affinely onto
/// `[√m_f, √M_f]` (smallest to `√m_f`, largest to `√M_f`), so the certified
/// constants equal the targets.
pub fn make_scaled_least_squares(spec: &LeastSquaresSpec) -> Result<GeneratedProblem> {
    let LeastSquaresSpec {
        nodes,
        dim,
        rows,
        m_f,
        lipschitz,
        obs_var,
        seed,
    } = *spec;
    if nodes == 0 || dim == 0 || rows == 0 {
        return Err(Error::InvalidParameter(
            "nodes, dim and rows must be positive".into(),
        ));
    }
    if !(m_f >= 0.0 && m_f <= lipschitz) || obs_var < 0.0 {
        return Err(Error::InvalidParameter(format!(
            "need 0 <= m_f <= M_f and obs_var >= 0, got ({m_f}, {lipschitz}, {obs_var})"
        )));
    }
    let rescale = m_f > 0.0;
    if rescale && rows < dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            actual: rows,
        });
    }
    if rescale && dim == 1 && m_f != lipschitz {
        return Err(Error::InvalidParameter(
            "a single singular value cannot span [m_f, M_f] with m_f < M_f".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut normal = || -> f64 { StandardNormal.sample(&mut rng) };
    let x_true = DVector::from_fn(dim, |_, _| normal());
    let obs_sd = obs_var.sqrt();
    let mut locals = Vec::with_capacity(nodes);
    for _ in 0..nodes {
        let mut m = DMatrix::zeros(rows, dim);
        // row-major draw order
        for r in 0..rows {
            for c in 0..dim {
                m[(r, c)] = normal();
            }
        }
        if rescale {
            m = remap_singular_values(m, m_f.sqrt(), lipschitz.sqrt());
        }
        let noise = DVector::from_fn(rows, |_, _| normal() * obs_sd);
        let y = &m * &x_true + noise;
        locals.push(LocalQuadratic::new(m, y)?);
    }
    Ok(GeneratedProblem {
        problem: ConsensusProblem::from_quadratics(locals)?,
        x_true,
        seed,
    })
}

fn remap_singular_values(m: DMatrix<f64>, lo: f64, hi: f64) -> DMatrix<f64> {
    let svd = m.svd(true, true);
    let s = &svd.singular_values;
    let (s_min, s_max) = (s.min(), s.max());
    let span = s_max - s_min;
    let mapped = s.map(|v| {
        if span > 0.0 {
            lo + (v - s_min) / span * (hi - lo)
        } else {
            lo
        }
    });
    let u = svd.u.expect("requested U");
    let v_t = svd.v_t.expect("requested Vᵀ");
    u * DMatrix::from_diagonal(&mapped) * v_t
}

/// On-disk problem representation; floats are 17-significant-digit strings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemFile {
    pub n: usize,
    pub p: usize,
    pub seed: u64,
    pub x_true: Vec<String>,
    pub nodes: Vec<NodeFile>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeFile {
    /// Measurement matrix, row-major `p × n`.
    pub m: Vec<String>,
    pub y: Vec<String>,
}

impl GeneratedProblem {
    pub fn to_file(&self) -> ProblemFile {
        let locals = self.problem.locals();
        let n = self.problem.dim();
        let p = locals[0].measurement().nrows();
        ProblemFile {
            n,
            p,
            seed: self.seed,
            x_true: self.x_true.iter().map(|&v| fmt_f64(v)).collect(),
            nodes: locals
                .iter()
                .map(|l| NodeFile {
                    m: (0..p)
                        .flat_map(|r| (0..n).map(move |c| (r, c)))
                        .map(|(r, c)| fmt_f64(l.measurement()[(r, c)]))
                        .collect(),
                    y: l.observation().iter().map(|&v| fmt_f64(v)).collect(),
                })
                .collect(),
        }
    }

    pub fn from_file(file: &ProblemFile) -> Result<Self> {
        let parse_all = |v: &[String]| v.iter().map(|s| parse_f64(s)).collect::<Result<Vec<_>>>();
        let x_true = DVector::from_vec(parse_all(&file.x_true)?);
        if x_true.len() != file.n {
            return Err(Error::DimensionMismatch {
                expected: file.n,
                actual: x_true.len(),
            });
        }
        let mut locals = Vec::with_capacity(file.nodes.len());
        for node in &file.nodes {
            let m = parse_all(&node.m)?;
            if m.len() != file.p * file.n {
                return Err(Error::DimensionMismatch {
                    expected: file.p * file.n,
                    actual: m.len(),
                });
            }
            let y = DVector::from_vec(parse_all(&node.y)?);
            locals.push(LocalQuadratic::new(
                DMatrix::from_row_slice(file.p, file.n, &m),
                y,
            )?);
        }
        Ok(Self {
            problem: ConsensusProblem::from_quadratics(locals)?,
            x_true,
            seed: file.seed,
        })
    }
}

//! Benchmark objectives with analytic monitoring derivatives.

mod objectives;

#[allow(unused_imports)] // shadowed by inherent methods whenever std is linked
use num_traits::Float;
use alloc::boxed::Box;
use alloc::vec::Vec;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

pub use objectives::{Karcher, Procrustes, SphereQuadratic, TraceQuadratic};

use crate::error::{contract, Error, Result};
use crate::linalg::{expm_sym, sqrtm_spd, sym, sym_eigen, Mat};
use crate::manifold::{gaussian, Manifold};
use crate::oracle::{Objective, OracleMode, ZeroOrderOracle};
use crate::rng::{mix, setup_rng, Domain};
use crate::theory::TheoryConstants;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProblemKind {
    Procrustes {
        n: usize,
        p: usize,
        l: usize,
        /// `B = A X*` for a random `X*` instead of a Gaussian `B`.
        #[serde(default)]
        planted: bool,
    },
    Kpca { n: usize, p: usize },
    SparsePca { rows: usize, n: usize, p: usize, lambda: f64 },
    Karcher { dim: usize, count: usize },
    Rayleigh { n: usize },
}

/// Serializable description of a benchmark instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemSpec {
    #[serde(flatten)]
    pub kind: ProblemKind,
    /// Data seed; the harness substitutes the run seed when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Additive oracle noise; switches the oracle to noisy mode when positive.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise_sd: Option<f64>,
    /// Overrides the problem's default oracle mode.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mode: Option<OracleMode>,
}

impl ProblemSpec {
    pub fn new(kind: ProblemKind) -> Self {
        Self { kind, seed: None, noise_sd: None, mode: None }
    }

    pub fn build(&self, default_seed: u64) -> Result<BenchmarkProblem> {
        let seed = self.seed.unwrap_or(default_seed);
        let mut problem = match self.kind {
            ProblemKind::Procrustes { n, p, l, planted: false } => make_procrustes(n, p, l, seed)?,
            ProblemKind::Procrustes { n, p, l, planted: true } => make_planted_procrustes(n, p, l, seed)?,
            ProblemKind::Kpca { n, p } => make_kpca(n, p, seed)?,
            ProblemKind::SparsePca { rows, n, p, lambda } => make_sparse_pca(rows, n, p, lambda, seed)?,
            ProblemKind::Karcher { dim, count } => make_karcher(dim, count, seed)?,
            ProblemKind::Rayleigh { n } => make_rayleigh(n, seed)?,
        };
        if let Some(mode) = self.mode {
            problem.mode = mode;
        }
        if let Some(sd) = self.noise_sd {
            if sd > 0.0 {
                problem = with_noise(problem, sd, seed)?;
            }
        }
        problem.spec = self.clone();
        problem.spec.seed = Some(seed);
        Ok(problem)
    }
}

/// An objective bundled with its oracle mode and known optimum, if any.
pub struct BenchmarkProblem {
    pub spec: ProblemSpec,
    pub objective: Box<dyn Objective>,
    pub mode: OracleMode,
    pub noise_seed: u64,
    pub optimum: Option<Mat>,
    pub optimal_value: Option<f64>,
}

impl core::fmt::Debug for BenchmarkProblem {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_struct("BenchmarkProblem")
            .field("spec", &self.spec)
            .field("mode", &self.mode)
            .field("manifold", &self.objective.manifold())
            .finish()
    }
}

impl BenchmarkProblem {
    fn new(kind: ProblemKind, seed: u64, objective: Box<dyn Objective>, mode: OracleMode) -> Self {
        let mut spec = ProblemSpec::new(kind);
        spec.seed = Some(seed);
        Self { spec, objective, mode, noise_seed: mix(&[seed, Domain::Noise as u64]), optimum: None, optimal_value: None }
    }

    pub fn manifold(&self) -> Manifold {
        self.objective.manifold()
    }

    pub fn oracle(&self) -> ZeroOrderOracle<'_> {
        ZeroOrderOracle::new(self.objective.as_ref(), self.mode, self.noise_seed).expect("validated at construction")
    }

    /// Random feasible starting point for run `seed`.
    pub fn initial_point(&self, seed: u64) -> Result<Mat> {
        self.manifold().random_point(&mut setup_rng(seed, Domain::Init))
    }

    /// `f(x) + λ‖x‖₁`.
    pub fn composite_value(&self, x: &Mat) -> f64 {
        let lambda = self.objective.l1_weight();
        let f = self.objective.value(x);
        if lambda == 0.0 {
            f
        } else {
            f + lambda * x.abs().sum()
        }
    }
}

/// Procrustes regression `‖AX − B‖²_F` on `St(n, p)` with `A` an `l × n`
/// Gaussian matrix scaled by `1/√l` and `B` an `l × p` standard Gaussian.
pub fn make_procrustes(n: usize, p: usize, l: usize, seed: u64) -> Result<BenchmarkProblem> {
    procrustes(n, p, l, false, seed)
}

/// Procrustes regression with `B = A X*` for a random `X*`, so the optimum
/// `X*` and the optimal value `0` are known.
pub fn make_planted_procrustes(n: usize, p: usize, l: usize, seed: u64) -> Result<BenchmarkProblem> {
    procrustes(n, p, l, true, seed)
}

fn procrustes(n: usize, p: usize, l: usize, planted: bool, seed: u64) -> Result<BenchmarkProblem> {
    if l == 0 || p == 0 || p > n {
        return Err(contract("procrustes needs l >= 1 and 1 <= p <= n"));
    }
    let obj = Procrustes::generate(n, p, l, planted, seed)?;
    let x_star = obj.x_star.clone();
    let kind = ProblemKind::Procrustes { n, p, l, planted };
    let mut problem = BenchmarkProblem::new(kind, seed, Box::new(obj), OracleMode::Deterministic);
    check_gradient(problem.objective.as_ref(), seed)?;
    if x_star.is_some() {
        problem.optimum = x_star;
        problem.optimal_value = Some(0.0);
    }
    Ok(problem)
}

impl Procrustes {
    pub fn generate(n: usize, p: usize, l: usize, planted: bool, seed: u64) -> Result<Self> {
        let manifold = Manifold::stiefel(n, p);
        let mut rng = setup_rng(seed, Domain::Problem);
        let a = gaussian(l, n, &mut rng) / (l as f64).sqrt();
        let (b, x_star) = if planted {
            let x_star = manifold.random_point(&mut rng)?;
            (&a * &x_star, Some(x_star))
        } else {
            (gaussian(l, p, &mut rng), None)
        };
        Ok(Self::new(a, b, x_star, manifold))
    }
}

/// kPCA `−½ Tr(XᵀHX)` on `Gr(n, p)` with `H = AAᵀ`, `A ∈ ℝ^{n×p}` with unit columns.
pub fn make_kpca(n: usize, p: usize, seed: u64) -> Result<BenchmarkProblem> {
    if p == 0 || p >= n {
        return Err(contract("kpca needs 1 <= p < n"));
    }
    let mut rng = setup_rng(seed, Domain::Problem);
    let mut a = gaussian(n, p, &mut rng);
    for mut c in a.column_iter_mut() {
        let nrm = c.norm();
        c /= nrm;
    }
    let obj = TraceQuadratic { factors: a, manifold: Manifold::grassmann(n, p), l1_weight: 0.0 };
    let (vals, vecs) = sym_eigen(&obj.h());
    let top = vecs.columns(n - p, p).into_owned();
    let opt_value = -0.5 * vals.iter().rev().take(p).sum::<f64>();
    let mut problem = BenchmarkProblem::new(ProblemKind::Kpca { n, p }, seed, Box::new(obj), OracleMode::FiniteSum);
    check_gradient(problem.objective.as_ref(), seed)?;
    problem.optimum = Some(top);
    problem.optimal_value = Some(opt_value);
    Ok(problem)
}

/// Sparse PCA `−½ Tr(XᵀAᵀAX) + λ‖X‖₁` on `St(n, p)`, `A ∈ ℝ^{rows×n}` with unit rows.
pub fn make_sparse_pca(rows: usize, n: usize, p: usize, lambda: f64, seed: u64) -> Result<BenchmarkProblem> {
    if rows == 0 || p == 0 || p > n {
        return Err(contract("sparse pca needs rows >= 1 and 1 <= p <= n"));
    }
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return Err(contract("l1 weight must be nonnegative"));
    }
    let mut rng = setup_rng(seed, Domain::Problem);
    let mut a = gaussian(rows, n, &mut rng);
    for mut r in a.row_iter_mut() {
        let nrm = r.norm();
        r /= nrm;
    }
    let obj = TraceQuadratic { factors: a.transpose(), manifold: Manifold::stiefel(n, p), l1_weight: lambda };
    let problem = BenchmarkProblem::new(
        ProblemKind::SparsePca { rows, n, p, lambda },
        seed,
        Box::new(obj),
        OracleMode::Deterministic,
    );
    check_gradient(problem.objective.as_ref(), seed)?;
    Ok(problem)
}

/// Karcher mean of `count` random SPD matrices of size `dim`.
pub fn make_karcher(dim: usize, count: usize, seed: u64) -> Result<BenchmarkProblem> {
    if dim == 0 || count == 0 {
        return Err(contract("karcher needs dim >= 1 and count >= 1"));
    }
    let mut rng = setup_rng(seed, Domain::Problem);
    let center = expm_sym(&(sym(&gaussian(dim, dim, &mut rng)) * 0.5));
    let root = sqrtm_spd(&center)?;
    let points: Vec<Mat> = (0..count)
        .map(|_| {
            let s = expm_sym(&(sym(&gaussian(dim, dim, &mut rng)) * 0.5));
            sym(&(&root * s * &root))
        })
        .collect();
    karcher_problem(points, seed)
}

/// Karcher mean of given SPD matrices.
pub fn karcher_problem(points: Vec<Mat>, seed: u64) -> Result<BenchmarkProblem> {
    let obj = Karcher::new(points);
    for p in &obj.points {
        obj.manifold.check_point(p)?;
    }
    let kind = ProblemKind::Karcher { dim: obj.manifold.shape().0, count: obj.points.len() };
    let problem = BenchmarkProblem::new(kind, seed, Box::new(obj), OracleMode::FiniteSum);
    check_gradient(problem.objective.as_ref(), seed)?;
    Ok(problem)
}

/// Rayleigh quotient `−½ xᵀAx` on `S^{n−1}`; `A` has eigenvalues
/// `1, 1 − 1/n, …, 1/n` and the optimum is its top eigenvector.
pub fn make_rayleigh(n: usize, seed: u64) -> Result<BenchmarkProblem> {
    if n < 2 {
        return Err(contract("rayleigh needs n >= 2"));
    }
    let mut rng = setup_rng(seed, Domain::Problem);
    let q = crate::linalg::qf_positive(&gaussian(n, n, &mut rng))?;
    let spectrum = DVector::from_iterator(n, (0..n).map(|k| 1.0 - k as f64 / n as f64));
    let a = &q * Mat::from_diagonal(&spectrum) * q.transpose();
    let obj = SphereQuadratic::new(-a, 1.0);
    let mut problem = BenchmarkProblem::new(ProblemKind::Rayleigh { n }, seed, Box::new(obj), OracleMode::Deterministic);
    check_gradient(problem.objective.as_ref(), seed)?;
    problem.optimum = Some(q.columns(0, 1).into_owned());
    problem.optimal_value = Some(-0.5);
    Ok(problem)
}

/// Switches a problem to additive Gaussian oracle noise keyed by the sample key.
pub fn with_noise(mut problem: BenchmarkProblem, noise_sd: f64, seed: u64) -> Result<BenchmarkProblem> {
    if !(noise_sd >= 0.0) || !noise_sd.is_finite() {
        return Err(contract("noise_sd must be finite and nonnegative"));
    }
    problem.mode = OracleMode::AdditiveNoise { noise_sd };
    problem.noise_seed = mix(&[seed, Domain::Noise as u64]);
    problem.spec.noise_sd = Some(noise_sd);
    Ok(problem)
}

/// Central differences of the pullback `f ∘ R_x` against the analytic
/// gradient at ten random points.
pub fn check_gradient(objective: &dyn Objective, seed: u64) -> Result<()> {
    const STEP: f64 = 1e-6;
    const TOL: f64 = 1e-5;
    let manifold = objective.manifold();
    let mut rng = setup_rng(seed, Domain::Auxiliary);
    for _ in 0..10 {
        let x = manifold.random_point(&mut rng)?;
        let chart = manifold.at(&x)?;
        let mut eta = chart.sample(&mut rng);
        eta /= chart.norm(&eta);
        let fp = objective.value(&chart.retract(&(&eta * STEP))?);
        let fm = objective.value(&chart.retract(&(&eta * -STEP))?);
        let fd = (fp - fm) / (2.0 * STEP);
        let g = objective.gradient(&x);
        let an = chart.inner(&g, &eta);
        let scale = an.abs().max(chart.norm(&g)).max(f64::MIN_POSITIVE);
        if (fd - an).abs() > TOL * scale {
            return Err(Error::Numerical(alloc::format!(
                "analytic gradient disagrees with finite differences: {fd:e} vs {an:e}"
            )));
        }
    }
    Ok(())
}

/// Sampled smoothness constants of the pullback: the largest observed
/// second- and third-order Taylor remainders over `pairs` random `(x, η)`,
/// scaled by 1.5. The gradient bound and, for finite sums, the summand
/// gradient spread `σ` are sampled at the same points.
pub fn estimate_constants(objective: &dyn Objective, seed: u64, pairs: usize) -> Result<TheoryConstants> {
    let manifold = objective.manifold();
    let mut rng = setup_rng(seed, Domain::Auxiliary);
    let (mut l_g, mut l_h, mut sigma, mut grad_bound): (f64, f64, f64, f64) = (0.0, 0.0, 0.0, 0.0);
    let k_sum = objective.summands();
    for k in 0..pairs {
        let x = manifold.random_point(&mut rng)?;
        let chart = manifold.at(&x)?;
        let mut eta = chart.sample(&mut rng);
        let r = [1e-1, 3e-2, 1e-2][k % 3];
        eta *= r / chart.norm(&eta);
        let f0 = objective.value(&x);
        let f1 = objective.value(&chart.retract(&eta)?);
        let g = objective.gradient(&x);
        let lin = f1 - f0 - chart.inner(&g, &eta);
        l_g = l_g.max(2.0 * lin.abs() / (r * r));
        grad_bound = grad_bound.max(chart.norm(&g));
        if k_sum > 1 {
            let spread: f64 = (0..k_sum)
                .map(|i| {
                    let e = objective.summand_gradient(&x, i) - &g;
                    chart.inner(&e, &e)
                })
                .sum();
            sigma = sigma.max((spread / k_sum as f64).sqrt());
        }
        if let Some(h) = objective.hessian_action(&x, &eta) {
            let quad = lin - 0.5 * chart.inner(&eta, &h);
            l_h = l_h.max(6.0 * quad.abs() / (r * r * r));
        }
    }
    Ok(TheoryConstants {
        l_g: 1.5 * l_g,
        l_h: 1.5 * l_h,
        sigma: 1.5 * sigma,
        grad_bound: 1.5 * grad_bound,
        ..TheoryConstants::default()
    })
}

#[cfg(test)]
mod tests;

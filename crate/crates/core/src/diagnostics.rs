//! Monte-Carlo checks of the estimators against their closed-form bounds.

#[allow(unused_imports)] // shadowed by inherent methods whenever std is linked
use num_traits::Float;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{contract, Result};
use crate::estimators::{estimate_gradient, estimate_hessian, TangentOperator};
use crate::linalg::{add_scaled, power_iteration, Mat};
use crate::oracle::ZeroOrderOracle;
use crate::rng::{Domain, SampleStream};
use crate::theory::{self, TheoryConstants};

/// Multiplier on the Monte-Carlo standard error added to every bound.
pub const MC_SIGMAS: f64 = 4.0;
pub const POWER_ITERATIONS: usize = 200;
pub const POWER_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundCheck {
    pub name: String,
    pub empirical: f64,
    pub mc_radius: f64,
    pub bound: f64,
    pub passed: bool,
}

impl BoundCheck {
    fn new(name: &str, empirical: f64, mc_radius: f64, bound: f64) -> Self {
        let passed = empirical.is_finite() && empirical <= bound + mc_radius;
        Self { name: name.into(), empirical, mc_radius, bound, passed }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsReport {
    pub manifold: String,
    pub dim: usize,
    pub mu: f64,
    pub checks: Vec<BoundCheck>,
    /// Fraction of forward differences lost to cancellation.
    pub cancellation_fraction: f64,
}

impl DiagnosticsReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

/// Which checks to run and at what sizes. A zero size skips the check.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DiagnosticsConfig {
    pub mu: f64,
    /// Single-sample estimates for the bias and second-moment checks.
    pub samples: usize,
    /// Batch sizes of the averaged-estimator check.
    pub m: usize,
    pub m_trials: usize,
    pub b: usize,
    pub b_trials: usize,
    pub seed: u64,
}

impl Default for DiagnosticsConfig {
    fn default() -> Self {
        Self { mu: 1e-3, samples: 100_000, m: 0, m_trials: 200, b: 0, b_trials: 20, seed: 0 }
    }
}

/// Sample statistics of single-sample gradient estimates.
#[derive(Debug, Clone)]
pub struct SingleSampleStats {
    pub mean: Mat,
    /// Trace of the sample covariance.
    pub total_variance: f64,
    pub mean_sq_norm: f64,
    pub sd_sq_norm: f64,
    pub samples: usize,
    pub cancelled: usize,
}

pub fn single_sample_stats(
    oracle: &ZeroOrderOracle<'_>,
    x: &Mat,
    mu: f64,
    samples: usize,
    seed: u64,
) -> Result<SingleSampleStats> {
    if samples < 2 {
        return Err(contract("need at least two samples"));
    }
    let manifold = oracle.manifold();
    let chart = manifold.at(x)?;
    let mut sum = Mat::zeros(x.nrows(), x.ncols());
    let (mut s1, mut s2) = (0.0, 0.0);
    let mut cancelled = 0;
    for i in 0..samples {
        let g = estimate_gradient(oracle, &chart, mu, 1, SampleStream::new(seed, i as u64))?;
        let q = chart.inner(&g.vector, &g.vector);
        s1 += q;
        s2 += q * q;
        cancelled += g.cancelled_terms;
        add_scaled(&mut sum, 1.0, &g.vector);
    }
    let n = samples as f64;
    let mean = sum / n;
    let mean_sq_norm = s1 / n;
    let var_sq = ((s2 / n - mean_sq_norm * mean_sq_norm) * n / (n - 1.0)).max(0.0);
    let total_variance = ((mean_sq_norm - chart.inner(&mean, &mean)) * n / (n - 1.0)).max(0.0);
    Ok(SingleSampleStats { mean, total_variance, mean_sq_norm, sd_sq_norm: var_sq.sqrt(), samples, cancelled })
}

/// `‖E g_μ − grad f‖` against `μ L_g (d+3)^{3/2}/2`.
pub fn bias_check(stats: &SingleSampleStats, oracle: &ZeroOrderOracle<'_>, x: &Mat, mu: f64, l_g: f64) -> Result<BoundCheck> {
    let manifold = oracle.manifold();
    let chart = manifold.at(x)?;
    let grad = oracle.objective().gradient(x);
    let err = chart.norm(&(&stats.mean - grad));
    let radius = MC_SIGMAS * (stats.total_variance / stats.samples as f64).sqrt();
    let bound = theory::gradient_bias_bound(mu, l_g, manifold.intrinsic_dim());
    Ok(BoundCheck::new("gradient_bias", err, radius, bound))
}

/// `E‖g_μ‖²` against `μ² L_g² (d+6)³/2 + 2(d+4)‖grad f‖²`.
pub fn second_moment_check(stats: &SingleSampleStats, oracle: &ZeroOrderOracle<'_>, x: &Mat, mu: f64, l_g: f64) -> Result<BoundCheck> {
    let manifold = oracle.manifold();
    let chart = manifold.at(x)?;
    let gn = chart.norm(&oracle.objective().gradient(x));
    let radius = MC_SIGMAS * stats.sd_sq_norm / (stats.samples as f64).sqrt();
    let bound = theory::gradient_second_moment_bound(mu, l_g, manifold.intrinsic_dim(), gn);
    Ok(BoundCheck::new("gradient_second_moment", stats.mean_sq_norm, radius, bound))
}

/// `E‖ḡ − grad f‖²` of the averaged estimator against
/// `μ² L_g² (d+6)³ + 8(d+4)(σ² + ‖grad f‖²)/m`.
pub fn averaged_deviation_check(
    oracle: &ZeroOrderOracle<'_>,
    x: &Mat,
    mu: f64,
    m: usize,
    trials: usize,
    seed: u64,
    constants: &TheoryConstants,
) -> Result<BoundCheck> {
    if trials < 2 {
        return Err(contract("need at least two trials"));
    }
    let manifold = oracle.manifold();
    let chart = manifold.at(x)?;
    let grad = oracle.objective().gradient(x);
    let (mut s1, mut s2) = (0.0, 0.0);
    for t in 0..trials {
        let g = estimate_gradient(oracle, &chart, mu, m, SampleStream::new(seed, t as u64))?;
        let e = &g.vector - &grad;
        let q = chart.inner(&e, &e);
        s1 += q;
        s2 += q * q;
    }
    let n = trials as f64;
    let mean = s1 / n;
    let sd = ((s2 / n - mean * mean) * n / (n - 1.0)).max(0.0).sqrt();
    let bound = theory::averaged_deviation_bound(mu, constants.l_g, manifold.intrinsic_dim(), constants.sigma, chart.norm(&grad), m);
    Ok(BoundCheck::new("averaged_deviation", mean, MC_SIGMAS * sd / n.sqrt(), bound))
}

/// `E‖H̄ − Hess f‖²_op` against `(d+16)⁴ L_g/(√2 b) + μ² L_H² (d+6)⁵/18`.
pub fn hessian_deviation_check(
    oracle: &ZeroOrderOracle<'_>,
    x: &Mat,
    mu: f64,
    b: usize,
    trials: usize,
    seed: u64,
    constants: &TheoryConstants,
) -> Result<BoundCheck> {
    if trials < 2 {
        return Err(contract("need at least two trials"));
    }
    let manifold = oracle.manifold();
    let chart = manifold.at(x)?;
    let objective = oracle.objective();
    let probe = Mat::zeros(x.nrows(), x.ncols());
    if objective.hessian_action(x, &probe).is_none() {
        return Err(contract("Hessian check needs an analytic Hessian"));
    }
    let (mut s1, mut s2) = (0.0, 0.0);
    for t in 0..trials {
        let stream = SampleStream::new(seed, t as u64);
        let h = estimate_hessian(oracle, &chart, mu, b, stream)?;
        let start = chart.sample(&mut stream.rng(Domain::Auxiliary, 0));
        let diff = |v: &Mat| {
            let pv = chart.project_unchecked(v);
            let exact = objective.hessian_action(x, &pv).unwrap_or_else(|| Mat::zeros(pv.nrows(), pv.ncols()));
            h.apply(&pv) - chart.project_unchecked(&exact)
        };
        let op = power_iteration(start, diff, |a, b| chart.inner(a, b), POWER_ITERATIONS, POWER_TOL);
        let q = op * op;
        s1 += q;
        s2 += q * q;
    }
    let n = trials as f64;
    let mean = s1 / n;
    let sd = ((s2 / n - mean * mean) * n / (n - 1.0)).max(0.0).sqrt();
    let bound = theory::hessian_deviation_bound(mu, constants.l_g, constants.l_h, manifold.intrinsic_dim(), b);
    Ok(BoundCheck::new("hessian_deviation", mean, MC_SIGMAS * sd / n.sqrt(), bound))
}

/// Runs every check enabled in `config` at the point `x`.
pub fn estimator_diagnostics(
    oracle: &ZeroOrderOracle<'_>,
    x: &Mat,
    config: &DiagnosticsConfig,
    constants: &TheoryConstants,
) -> Result<DiagnosticsReport> {
    constants.validate()?;
    let manifold = oracle.manifold();
    let mut checks = Vec::new();
    let mut cancellation_fraction = 0.0;
    if config.samples > 0 {
        let stats = single_sample_stats(oracle, x, config.mu, config.samples, config.seed)?;
        cancellation_fraction = stats.cancelled as f64 / stats.samples as f64;
        checks.push(bias_check(&stats, oracle, x, config.mu, constants.l_g)?);
        checks.push(second_moment_check(&stats, oracle, x, config.mu, constants.l_g)?);
    }
    if config.m > 0 {
        let seed = config.seed ^ 0xA5A5;
        checks.push(averaged_deviation_check(oracle, x, config.mu, config.m, config.m_trials, seed, constants)?);
    }
    if config.b > 0 {
        let seed = config.seed ^ 0x5A5A;
        checks.push(hessian_deviation_check(oracle, x, config.mu, config.b, config.b_trials, seed, constants)?);
    }
    Ok(DiagnosticsReport {
        manifold: manifold.name().into(),
        dim: manifold.intrinsic_dim(),
        mu: config.mu,
        checks,
        cancellation_fraction,
    })
}

/// Pointwise noise level `σ² = (1/k) Σ ‖grad f_i(x) − grad f(x)‖²` of a
/// finite-sum objective.
pub fn finite_sum_sigma(oracle: &ZeroOrderOracle<'_>, x: &Mat) -> Result<f64> {
    let obj = oracle.objective();
    let manifold = oracle.manifold();
    let chart = manifold.at(x)?;
    let g = obj.gradient(x);
    let k = obj.summands();
    let mut acc = 0.0;
    for i in 0..k {
        let e = obj.summand_gradient(x, i) - &g;
        acc += chart.inner(&e, &e);
    }
    Ok((acc / k as f64).sqrt())
}

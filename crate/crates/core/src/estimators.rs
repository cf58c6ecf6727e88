//! Gaussian-smoothing estimators of the Riemannian gradient and Hessian.
//!
//! Directions are drawn from the tangent-space normal distribution and every
//! draw is keyed by `(run_seed, iteration, index)`, so the result does not
//! depend on evaluation order. Sums are accumulated in index order.

use alloc::vec::Vec;

use crate::error::{contract, Result};
use crate::linalg::{add_scaled, Mat};
use crate::manifold::Chart;
use crate::oracle::ZeroOrderOracle;
use crate::rng::{Domain, SampleStream};

/// Smallest accepted smoothing radius.
pub const MU_FLOOR: f64 = 1e-12;

/// Differences below `CANCELLATION_ULPS · ε · |F(x)|` are dominated by rounding.
const CANCELLATION_ULPS: f64 = 64.0;

fn check_params(mu: f64, batch: usize, what: &str) -> Result<()> {
    if !(mu >= MU_FLOOR) || !mu.is_finite() {
        return Err(contract(alloc::format!("smoothing parameter mu must be finite and at least {MU_FLOOR:e}")));
    }
    if batch == 0 {
        return Err(contract(alloc::format!("{what} must be at least 1")));
    }
    Ok(())
}

fn cancelled(diff: f64, base: f64) -> bool {
    diff.abs() < CANCELLATION_ULPS * f64::EPSILON * base.abs()
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradientEstimate {
    pub vector: Mat,
    pub mu: f64,
    pub batch: usize,
    pub oracle_calls: u64,
    /// Terms whose forward difference fell into the rounding regime.
    pub cancelled_terms: usize,
}

/// Averaged forward-difference estimator `(1/m) Σ [F(R_x(μu_i), ξ_i) − F(x, ξ_i)]/μ · u_i`.
///
/// In deterministic mode the baseline `F(x)` is evaluated once (`m + 1`
/// calls); stochastic modes evaluate it per sample with the same key as the
/// displaced point (`2m` calls).
pub fn estimate_gradient(
    oracle: &ZeroOrderOracle<'_>,
    chart: &Chart<'_>,
    mu: f64,
    m: usize,
    stream: SampleStream,
) -> Result<GradientEstimate> {
    check_params(mu, m, "gradient batch m")?;
    let x = chart.point();
    let stochastic = oracle.mode().is_stochastic();
    let shared = if stochastic { None } else { Some(oracle.eval(x, 0)) };
    let mut calls = u64::from(!stochastic);
    let mut acc = Mat::zeros(x.nrows(), x.ncols());
    let mut cancelled_terms = 0;
    for i in 0..m as u64 {
        let u = chart.sample(&mut stream.rng(Domain::Direction, i));
        let y = chart.retract(&(&u * mu))?;
        let key = stream.key(Domain::OracleKey, i);
        let fy = oracle.eval(&y, key);
        let fx = match shared {
            Some(f) => f,
            None => {
                calls += 1;
                oracle.eval(x, key)
            }
        };
        calls += 1;
        let diff = fy - fx;
        if diff != 0.0 && cancelled(diff, fx) {
            cancelled_terms += 1;
        }
        add_scaled(&mut acc, diff / mu, &u);
    }
    acc /= m as f64;
    let vector = chart.project(&acc)?;
    Ok(GradientEstimate { vector, mu, batch: m, oracle_calls: calls, cancelled_terms })
}

/// Self-adjoint linear map on a tangent space.
pub trait TangentOperator {
    fn apply(&self, v: &Mat) -> Mat;
}

impl<F: Fn(&Mat) -> Mat> TangentOperator for F {
    fn apply(&self, v: &Mat) -> Mat {
        self(v)
    }
}

/// The averaged Hessian estimator `(1/b) Σ c_i (u_i u_iᵀ − P)` kept in
/// factored form.
#[derive(Debug, Clone)]
pub struct HessianOperator<'a> {
    chart: Chart<'a>,
    terms: Vec<(f64, Mat)>,
    coefficient_sum: f64,
    pub mu: f64,
    pub oracle_calls: u64,
}

impl<'a> HessianOperator<'a> {
    pub fn chart(&self) -> &Chart<'a> {
        &self.chart
    }

    pub fn terms(&self) -> &[(f64, Mat)] {
        &self.terms
    }

    pub fn batch(&self) -> usize {
        self.terms.len()
    }
}

impl TangentOperator for HessianOperator<'_> {
    fn apply(&self, eta: &Mat) -> Mat {
        let p_eta = self.chart.project_unchecked(eta);
        let mut out = &p_eta * -self.coefficient_sum;
        for (c, u) in &self.terms {
            if *c != 0.0 {
                add_scaled(&mut out, c * self.chart.inner(u, &p_eta), u);
            }
        }
        out / self.terms.len() as f64
    }
}

/// Builds the averaged Hessian estimator from `b` symmetric second differences
/// `c_i = [F(R_x(μu_i)) + F(R_x(−μu_i)) − 2F(x)] / (2μ²)`.
///
/// Deterministic mode shares `F(x)` across terms (`2b + 1` calls); stochastic
/// modes spend three calls per term with one key per term.
pub fn estimate_hessian<'a>(
    oracle: &ZeroOrderOracle<'_>,
    chart: &Chart<'a>,
    mu: f64,
    b: usize,
    stream: SampleStream,
) -> Result<HessianOperator<'a>> {
    check_params(mu, b, "Hessian batch b")?;
    let x = chart.point();
    let stochastic = oracle.mode().is_stochastic();
    let shared = if stochastic { None } else { Some(oracle.eval(x, 0)) };
    let mut calls = u64::from(!stochastic);
    let mut terms = Vec::with_capacity(b);
    let mut coefficient_sum = 0.0;
    for i in 0..b as u64 {
        let u = chart.sample(&mut stream.rng(Domain::Hessian, i));
        let key = stream.key(Domain::HessianKey, i);
        let plus = oracle.eval(&chart.retract(&(&u * mu))?, key);
        let minus = oracle.eval(&chart.retract(&(&u * -mu))?, key);
        let base = match shared {
            Some(f) => f,
            None => {
                calls += 1;
                oracle.eval(x, key)
            }
        };
        calls += 2;
        let c = (plus + minus - 2.0 * base) / (2.0 * mu * mu);
        coefficient_sum += c;
        terms.push((c, u));
    }
    Ok(HessianOperator { chart: chart.clone(), terms, coefficient_sum, mu, oracle_calls: calls })
}

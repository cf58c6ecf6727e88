//! Objectives and the zeroth-order oracle that samples them.

use core::sync::atomic::{AtomicU64, Ordering};

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{contract, Result};
use crate::linalg::Mat;
use crate::manifold::Manifold;
use crate::rng::{mix, rng_from_key, Domain};

/// A smooth objective on a manifold, optionally a finite sum, with analytic
/// derivatives used only for monitoring and testing.
pub trait Objective: Send + Sync {
    fn manifold(&self) -> Manifold;

    /// `f(x)`, the smooth part.
    fn value(&self, x: &Mat) -> f64;

    /// Riemannian gradient of `f` at `x`.
    fn gradient(&self, x: &Mat) -> Mat;

    /// Riemannian Hessian of `f` applied to a tangent vector, when available.
    fn hessian_action(&self, _x: &Mat, _eta: &Mat) -> Option<Mat> {
        None
    }

    /// Number of summands `k` with `f = (1/k) Σ f_i`.
    fn summands(&self) -> usize {
        1
    }

    fn summand_value(&self, x: &Mat, _i: usize) -> f64 {
        self.value(x)
    }

    fn summand_gradient(&self, x: &Mat, _i: usize) -> Mat {
        self.gradient(x)
    }

    /// Weight `λ` of the nonsmooth part `λ‖x‖₁`; zero for smooth problems.
    fn l1_weight(&self) -> f64 {
        0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum OracleMode {
    Deterministic,
    AdditiveNoise { noise_sd: f64 },
    /// Samples one summand uniformly per key.
    FiniteSum,
}

impl OracleMode {
    pub fn is_stochastic(&self) -> bool {
        !matches!(self, OracleMode::Deterministic)
    }
}

/// Function-value source `F(x, ξ)` with call accounting.
pub struct ZeroOrderOracle<'a> {
    objective: &'a dyn Objective,
    mode: OracleMode,
    noise_seed: u64,
    calls: AtomicU64,
}

impl<'a> ZeroOrderOracle<'a> {
    pub fn new(objective: &'a dyn Objective, mode: OracleMode, noise_seed: u64) -> Result<Self> {
        match mode {
            OracleMode::AdditiveNoise { noise_sd } if !(noise_sd >= 0.0) || !noise_sd.is_finite() => {
                return Err(contract("noise_sd must be finite and nonnegative"));
            }
            OracleMode::FiniteSum if objective.summands() == 0 => {
                return Err(contract("finite-sum oracle needs at least one summand"));
            }
            _ => {}
        }
        Ok(Self { objective, mode, noise_seed, calls: AtomicU64::new(0) })
    }

    pub fn deterministic(objective: &'a dyn Objective) -> Self {
        Self { objective, mode: OracleMode::Deterministic, noise_seed: 0, calls: AtomicU64::new(0) }
    }

    pub fn objective(&self) -> &'a dyn Objective {
        self.objective
    }

    pub fn mode(&self) -> OracleMode {
        self.mode
    }

    pub fn manifold(&self) -> Manifold {
        self.objective.manifold()
    }

    /// `F(x, ξ)` for the sample key `ξ`; deterministic mode ignores the key.
    pub fn eval(&self, x: &Mat, key: u64) -> f64 {
        self.calls.fetch_add(1, Ordering::Relaxed);
        match self.mode {
            OracleMode::Deterministic => self.objective.value(x),
            OracleMode::AdditiveNoise { noise_sd } => {
                self.objective.value(x) + noise_sd * self.noise(key)
            }
            OracleMode::FiniteSum => {
                let i = self.summand_index(key);
                self.objective.summand_value(x, i)
            }
        }
    }

    /// Summand selected by a key, uniform over `0..k`.
    pub fn summand_index(&self, key: u64) -> usize {
        let k = self.objective.summands() as u128;
        ((mix(&[self.noise_seed, key]) as u128 * k) >> 64) as usize
    }

    /// The standard normal variate behind the additive noise of `key`.
    pub fn noise(&self, key: u64) -> f64 {
        rng_from_key(mix(&[self.noise_seed, key, Domain::Noise as u64])).sample(StandardNormal)
    }

    pub fn calls(&self) -> u64 {
        self.calls.load(Ordering::Relaxed)
    }
}

impl core::fmt::Debug for ZeroOrderOracle<'_> {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_struct("ZeroOrderOracle")
            .field("manifold", &self.objective.manifold())
            .field("mode", &self.mode)
            .field("calls", &self.calls())
            .finish()
    }
}

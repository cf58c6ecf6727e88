//! Zeroth-order solvers and the run trace they produce.
//!
//! Every solver consumes function values only. The analytic gradient of the
//! objective is evaluated on the side for the `grad_norm` column and the stop
//! rule; those evaluations never touch the oracle's call counter.

mod baseline;
mod driver;

use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{contract, Result};
use crate::linalg::Mat;
use crate::manifold::Manifold;
use crate::theory::TheoryConstants;

pub use baseline::{riemannian_gradient_descent, BaselineResult};
pub use driver::{zo_manpg, zo_rgd, zo_rscrn, zo_rsgd, zo_rsgd_projected};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverKind {
    ZoRgd,
    ZoRsgd,
    ZoRsgdProjected,
    ZoManpg,
    ZoRscrn,
}

impl SolverKind {
    pub fn name(self) -> &'static str {
        match self {
            SolverKind::ZoRgd => "zo_rgd",
            SolverKind::ZoRsgd => "zo_rsgd",
            SolverKind::ZoRsgdProjected => "zo_rsgd_projected",
            SolverKind::ZoManpg => "zo_manpg",
            SolverKind::ZoRscrn => "zo_rscrn",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case", deny_unknown_fields)]
pub enum StepRule {
    Fixed { eta: f64 },
    /// `1/(2(d+4)L_g)` for small batches, `1/L_g` once `m ≥ 8(d+4)`.
    TheoryRgd,
    /// `1/L_g`.
    TheoryRsgd,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case", deny_unknown_fields)]
pub enum StopRule {
    MaxIter,
    /// Stop once the monitored gradient norm is at most `eps`.
    MonitorGradNorm { eps: f64 },
    /// Stop once the exact proximal step satisfies `‖v̄‖ ≤ eps/L_g`.
    ManpgStep { eps: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub mu: f64,
    /// Gradient batch.
    pub m: usize,
    /// Hessian batch.
    pub b: usize,
    /// Defaults to a fixed `1e-2`, or `1` for ZO-ManPG.
    pub step: Option<StepRule>,
    /// Proximal step; defaults to `1/L_g`.
    pub t: Option<f64>,
    /// `ℓ₁` weight; defaults to the objective's own.
    pub lambda: Option<f64>,
    /// Cubic weight.
    pub alpha: f64,
    pub max_iter: usize,
    pub seed: u64,
    pub stop: StopRule,
    /// Halve the proximal step until the composite value decreases.
    pub backtracking: bool,
    pub krylov_dim: usize,
    pub theory: Option<TheoryConstants>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            mu: 1e-4,
            m: 1,
            b: 1,
            step: None,
            t: None,
            lambda: None,
            alpha: 1.0,
            max_iter: 100,
            seed: 0,
            stop: StopRule::MaxIter,
            backtracking: false,
            krylov_dim: 50,
            theory: None,
        }
    }
}

impl SolverConfig {
    fn l_g(&self) -> Option<f64> {
        self.theory.map(|t| t.l_g).filter(|&l| l > 0.0)
    }

    /// Step size for a run on a manifold of intrinsic dimension `d`.
    pub fn step_size(&self, kind: SolverKind, d: usize) -> Result<f64> {
        let default = if kind == SolverKind::ZoManpg { 1.0 } else { 1e-2 };
        let eta = match self.step.unwrap_or(StepRule::Fixed { eta: default }) {
            StepRule::Fixed { eta } => eta,
            StepRule::TheoryRgd => {
                let l = self.l_g().ok_or_else(|| contract("theory step rule requires theory.l_g > 0"))?;
                if self.m >= 8 * (d + 4) {
                    1.0 / l
                } else {
                    1.0 / (2.0 * (d as f64 + 4.0) * l)
                }
            }
            StepRule::TheoryRsgd => {
                let l = self.l_g().ok_or_else(|| contract("theory step rule requires theory.l_g > 0"))?;
                1.0 / l
            }
        };
        if !(eta > 0.0) || !eta.is_finite() {
            return Err(contract("step size must be positive and finite"));
        }
        Ok(eta)
    }

    pub fn validate(&self, kind: SolverKind, manifold: &Manifold) -> Result<()> {
        if let Some(t) = &self.theory {
            t.validate()?;
        }
        if self.m == 0 {
            return Err(contract("gradient batch m must be at least 1"));
        }
        if kind == SolverKind::ZoRscrn {
            if self.b == 0 {
                return Err(contract("Hessian batch b must be at least 1"));
            }
            if !(self.alpha > 0.0) || !self.alpha.is_finite() {
                return Err(contract("cubic weight alpha must be positive"));
            }
            if self.krylov_dim == 0 {
                return Err(contract("krylov_dim must be at least 1"));
            }
        } else {
            self.step_size(kind, manifold.intrinsic_dim())?;
        }
        match self.stop {
            StopRule::MaxIter => {}
            StopRule::MonitorGradNorm { eps } | StopRule::ManpgStep { eps } if !(eps > 0.0) => {
                return Err(contract("stop tolerance must be positive"));
            }
            StopRule::ManpgStep { .. } if self.l_g().is_none() => {
                return Err(contract("manpg_step stop rule requires theory.l_g > 0"));
            }
            _ => {}
        }
        if let Some(t) = self.t {
            if !(t > 0.0) || !t.is_finite() {
                return Err(contract("prox step t must be positive"));
            }
        }
        if let Some(l) = self.lambda {
            if !(l >= 0.0) || !l.is_finite() {
                return Err(contract("lambda must be nonnegative"));
            }
        }
        Ok(())
    }
}

/// Bits of [`IterRecord::flags`].
pub mod flags {
    pub const PROX_FALLBACK: u32 = 1;
    pub const CUBIC_FALLBACK: u32 = 1 << 1;
    pub const HARD_CASE: u32 = 1 << 2;
    pub const BACKTRACKED: u32 = 1 << 3;
    pub const BALL_PROJECTED: u32 = 1 << 4;
    pub const CANCELLATION: u32 = 1 << 5;
}

/// State after `iter` iterations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IterRecord {
    pub iter: usize,
    /// Monitored objective, including the `ℓ₁` term when present.
    pub f: f64,
    /// `‖grad f‖`, or `‖v̄‖` of the exact proximal step for the proximal solver.
    pub grad_norm: f64,
    /// Norm of the step into this iterate (`‖v_k‖` for the proximal solver).
    pub step_norm: f64,
    /// Cumulative oracle calls.
    pub calls: u64,
    pub flags: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "reason", rename_all = "snake_case")]
pub enum StopReason {
    MaxIter,
    Converged,
    Aborted { message: String },
}

/// The iterate with the shortest cubic step, `x_{k+1}` for `k = argmin ‖η_k‖`.
#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    pub iter: usize,
    pub step_norm: f64,
    pub point: Mat,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunTrace {
    pub solver: SolverKind,
    pub manifold: Manifold,
    pub step_size: f64,
    pub constants: Option<TheoryConstants>,
    pub records: Vec<IterRecord>,
    pub reason: StopReason,
    pub total_calls: u64,
    pub final_point: Mat,
    pub candidate: Option<Candidate>,
}

impl RunTrace {
    /// First iteration whose monitored gradient norm is at most `eps`.
    pub fn iterations_to(&self, eps: f64) -> Option<usize> {
        self.records.iter().find(|r| r.grad_norm <= eps).map(|r| r.iter)
    }

    pub fn last(&self) -> &IterRecord {
        self.records.last().expect("a trace always holds the initial point")
    }

    pub fn aborted(&self) -> bool {
        matches!(self.reason, StopReason::Aborted { .. })
    }
}

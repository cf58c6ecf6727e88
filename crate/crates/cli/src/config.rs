//! JSON experiment descriptions.

use std::path::{Path, PathBuf};

use manifold_zo_core::problems::ProblemSpec;
use manifold_zo_core::solvers::{SolverConfig, SolverKind, StepRule, StopRule};
use manifold_zo_core::Manifold;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, HarnessError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Seeds {
    List(Vec<u64>),
    /// Inclusive range.
    Range { from: u64, to: u64 },
}

impl Seeds {
    pub fn to_vec(&self) -> Vec<u64> {
        match self {
            Seeds::List(v) => v.clone(),
            Seeds::Range { from, to } => (*from..=*to).collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum BallCenter {
    /// The problem's known optimum.
    Optimum,
    /// A random point drawn from this seed.
    Random { seed: u64 },
}

/// Geodesic ball of the projected stochastic solver.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BallSpec {
    pub center: BallCenter,
    pub radius: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Prefix of every output file.
    pub name: String,
    pub problem: ProblemSpec,
    /// Must match the problem's manifold; only the retraction may differ.
    #[serde(default)]
    pub manifold: Option<Manifold>,
    pub solver: SolverKind,
    #[serde(default)]
    pub config: SolverConfig,
    pub seeds: Seeds,
    /// Fill missing theory constants from sampled curvature estimates.
    #[serde(default)]
    pub estimate_constants: bool,
    /// Threshold of the iterations-to-ε summary; defaults to the stop rule's.
    #[serde(default)]
    pub epsilon: Option<f64>,
    /// Write every k-th record to the trace CSV (the last one always).
    #[serde(default = "one")]
    pub monitor_every: usize,
    #[serde(default)]
    pub ball: Option<BallSpec>,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
}

fn one() -> usize {
    1
}

impl ExperimentConfig {
    /// Checks that do not need the problem data.
    pub fn validate(&self) -> Result<(), HarnessError> {
        validate_name(&self.name)?;
        if self.seeds.to_vec().is_empty() {
            return Err(invalid("seeds must not be empty"));
        }
        if self.monitor_every == 0 {
            return Err(invalid("monitor_every must be at least 1"));
        }
        if let Some(eps) = self.epsilon {
            if !(eps > 0.0) {
                return Err(invalid("epsilon must be positive"));
            }
        }
        let theory_rule = matches!(self.config.step, Some(StepRule::TheoryRgd | StepRule::TheoryRsgd))
            || matches!(self.config.stop, StopRule::ManpgStep { .. });
        if theory_rule && self.config.theory.is_none() && !self.estimate_constants {
            return Err(invalid("theory step/stop rules need config.theory or estimate_constants"));
        }
        match (self.solver, &self.ball) {
            (SolverKind::ZoRsgdProjected, None) => return Err(invalid("zo_rsgd_projected needs a ball")),
            (SolverKind::ZoRsgdProjected, Some(_)) => {}
            (_, Some(_)) => return Err(invalid("ball is only used by zo_rsgd_projected")),
            _ => {}
        }
        Ok(())
    }

    /// Threshold for iterations-to-ε.
    pub fn epsilon(&self) -> Option<f64> {
        self.epsilon.or(match self.config.stop {
            StopRule::MonitorGradNorm { eps } => Some(eps),
            StopRule::ManpgStep { eps } => self.config.theory.map(|t| eps / t.l_g),
            StopRule::MaxIter => None,
        })
    }
}

pub(crate) fn validate_name(name: &str) -> Result<(), HarnessError> {
    let ok = !name.is_empty() && name.chars().all(|c| c.is_ascii_alphanumeric() || matches!(c, '_' | '-' | '.'));
    if ok {
        Ok(())
    } else {
        Err(invalid("name must be non-empty and use only [A-Za-z0-9_.-]"))
    }
}

/// Reads and parses a JSON config; any failure is a validation error.
pub fn load<T: DeserializeOwned>(path: &Path) -> Result<T, HarnessError> {
    let text = std::fs::read_to_string(path).map_err(|e| invalid(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| invalid(format!("{}: {e}", path.display())))
}

//! The `check-estimators` subcommand.

use std::path::Path;

use manifold_zo_core::diagnostics::{estimator_diagnostics, DiagnosticsConfig, DiagnosticsReport};
use manifold_zo_core::problems::{estimate_constants, ProblemSpec};
use manifold_zo_core::theory::TheoryConstants;
use serde::{Deserialize, Serialize};

use crate::config::validate_name;
use crate::error::{invalid, HarnessError};
use crate::output::write_json;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PointChoice {
    /// A random point drawn from the case seed.
    #[default]
    Random,
    Optimum,
}

/// One problem and the grid of smoothing radii and batch sizes to check on it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiagnosticsCase {
    pub problem: ProblemSpec,
    #[serde(default)]
    pub point: PointChoice,
    pub mu: Vec<f64>,
    /// Single-sample estimates per `μ` for the bias and second-moment checks.
    #[serde(default)]
    pub samples: usize,
    #[serde(default)]
    pub m: Vec<usize>,
    #[serde(default = "default_m_trials")]
    pub m_trials: usize,
    #[serde(default)]
    pub b: Vec<usize>,
    #[serde(default = "default_b_trials")]
    pub b_trials: usize,
    /// Sampled from the problem when absent.
    #[serde(default)]
    pub constants: Option<TheoryConstants>,
}

fn default_m_trials() -> usize {
    200
}

fn default_b_trials() -> usize {
    20
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiagnosticsSuite {
    pub name: String,
    #[serde(default)]
    pub seed: u64,
    pub cases: Vec<DiagnosticsCase>,
    #[serde(default)]
    pub output_dir: Option<std::path::PathBuf>,
}

#[derive(Debug, Clone, Serialize)]
pub struct CaseReport {
    pub case: usize,
    pub problem: ProblemSpec,
    pub constants: TheoryConstants,
    pub m: usize,
    pub b: usize,
    pub report: DiagnosticsReport,
}

#[derive(Debug, Clone, Serialize)]
pub struct SuiteReport {
    pub name: String,
    pub passed: bool,
    pub checks: usize,
    pub failed: usize,
    pub reports: Vec<CaseReport>,
}

impl DiagnosticsSuite {
    pub fn validate(&self) -> Result<(), HarnessError> {
        validate_name(&self.name)?;
        if self.cases.is_empty() {
            return Err(invalid("cases must not be empty"));
        }
        for (i, c) in self.cases.iter().enumerate() {
            if c.mu.is_empty() || c.mu.iter().any(|&mu| !(mu > 0.0)) {
                return Err(invalid(format!("case {i}: mu must be a non-empty list of positive radii")));
            }
            if c.samples == 0 && c.m.is_empty() && c.b.is_empty() {
                return Err(invalid(format!("case {i}: nothing to check")));
            }
            if c.m.contains(&0) || c.b.contains(&0) {
                return Err(invalid(format!("case {i}: batch sizes must be positive")));
            }
            if (!c.m.is_empty() && c.m_trials < 2) || (!c.b.is_empty() && c.b_trials < 2) {
                return Err(invalid(format!("case {i}: at least two trials are needed")));
            }
            if c.samples == 1 {
                return Err(invalid(format!("case {i}: at least two samples are needed")));
            }
            if let Some(t) = &c.constants {
                t.validate().map_err(invalid)?;
            }
        }
        Ok(())
    }
}

/// Runs the whole grid and writes `<name>_estimators.json`; fails with
/// [`HarnessError::ChecksFailed`] if any bound is violated.
pub fn check_estimators(suite: &DiagnosticsSuite, out: &Path) -> Result<SuiteReport, HarnessError> {
    suite.validate()?;
    let mut prepared = Vec::new();
    for (i, case) in suite.cases.iter().enumerate() {
        let seed = suite.seed.wrapping_add(i as u64);
        let problem = case.problem.build(seed).map_err(invalid)?;
        let x = match case.point {
            PointChoice::Random => problem.initial_point(seed).map_err(invalid)?,
            PointChoice::Optimum => problem.optimum.clone().ok_or_else(|| invalid(format!("case {i}: no known optimum")))?,
        };
        let constants = match case.constants {
            Some(c) => c,
            None => estimate_constants(problem.objective.as_ref(), seed, 100).map_err(invalid)?,
        };
        prepared.push((seed, problem, x, constants));
    }
    std::fs::create_dir_all(out).map_err(|e| HarnessError::io(out, e))?;

    let mut reports = Vec::new();
    for (i, (case, (seed, problem, x, constants))) in suite.cases.iter().zip(&prepared).enumerate() {
        let oracle = problem.oracle();
        let base = DiagnosticsConfig { samples: 0, m: 0, b: 0, m_trials: case.m_trials, b_trials: case.b_trials, seed: *seed, mu: 0.0 };
        let mut grid = Vec::new();
        for &mu in &case.mu {
            if case.samples > 0 {
                grid.push(DiagnosticsConfig { mu, samples: case.samples, ..base });
            }
            grid.extend(case.m.iter().map(|&m| DiagnosticsConfig { mu, m, ..base }));
            grid.extend(case.b.iter().map(|&b| DiagnosticsConfig { mu, b, ..base }));
        }
        for dc in grid {
            let report = estimator_diagnostics(&oracle, x, &dc, constants).map_err(|e| HarnessError::Aborted(e.to_string()))?;
            for c in &report.checks {
                eprintln!(
                    "case {i} mu {:.0e} m {} b {}: {} {:.3e} <= {:.3e} + {:.1e}: {}",
                    dc.mu,
                    dc.m,
                    dc.b,
                    c.name,
                    c.empirical,
                    c.bound,
                    c.mc_radius,
                    if c.passed { "pass" } else { "FAIL" }
                );
            }
            reports.push(CaseReport { case: i, problem: problem.spec.clone(), constants: *constants, m: dc.m, b: dc.b, report });
        }
    }
    let checks = reports.iter().map(|r| r.report.checks.len()).sum();
    let failed = reports.iter().flat_map(|r| &r.report.checks).filter(|c| !c.passed).count();
    let summary = SuiteReport { name: suite.name.clone(), passed: failed == 0, checks, failed, reports };
    write_json(&out.join(format!("{}_estimators.json", suite.name)), &summary)?;
    if failed > 0 {
        return Err(HarnessError::ChecksFailed { failed, total: checks });
    }
    Ok(summary)
}

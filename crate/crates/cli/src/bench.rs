//! The `bench` subcommand: wall-clock timings of the inner kernels.

use std::hint::black_box;
use std::path::Path;
use std::time::Instant;

use manifold_zo_core::estimators::{estimate_gradient, estimate_hessian};
use manifold_zo_core::manifold::gaussian;
use manifold_zo_core::problems::ProblemSpec;
use manifold_zo_core::rng::{setup_rng, Domain, SampleStream};
use manifold_zo_core::subproblem::{solve_cubic, solve_prox_tangent, CubicOptions, ProxOptions};
use serde::{Deserialize, Serialize};

use crate::config::validate_name;
use crate::error::{invalid, HarnessError};
use crate::output::write_json;

/// Fewest timed repetitions accepted.
pub const MIN_REPETITIONS: usize = 30;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kernel", rename_all = "snake_case", deny_unknown_fields)]
pub enum Kernel {
    Retraction { problem: ProblemSpec },
    Gradient { problem: ProblemSpec, mu: f64, m: usize },
    Hessian { problem: ProblemSpec, mu: f64, b: usize },
    /// Tangent proximal step on a random tangent gradient.
    Prox { problem: ProblemSpec, t: f64, lambda: f64 },
    /// Cubic model built from estimated derivatives.
    Cubic { problem: ProblemSpec, mu: f64, b: usize, alpha: f64 },
}

impl Kernel {
    fn label(&self) -> String {
        let (kind, p) = match self {
            Kernel::Retraction { problem } => ("retraction", problem),
            Kernel::Gradient { problem, .. } => ("gradient", problem),
            Kernel::Hessian { problem, .. } => ("hessian", problem),
            Kernel::Prox { problem, .. } => ("prox", problem),
            Kernel::Cubic { problem, .. } => ("cubic", problem),
        };
        let problem = serde_json::to_value(&p.kind).expect("problem kinds serialize");
        format!("{kind} {problem}")
    }

    fn problem(&self) -> &ProblemSpec {
        match self {
            Kernel::Retraction { problem }
            | Kernel::Gradient { problem, .. }
            | Kernel::Hessian { problem, .. }
            | Kernel::Prox { problem, .. }
            | Kernel::Cubic { problem, .. } => problem,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchSuite {
    pub name: String,
    #[serde(default = "default_repetitions")]
    pub repetitions: usize,
    #[serde(default = "default_warmup")]
    pub warmup: usize,
    #[serde(default)]
    pub seed: u64,
    pub kernels: Vec<Kernel>,
    #[serde(default)]
    pub output_dir: Option<std::path::PathBuf>,
}

fn default_repetitions() -> usize {
    MIN_REPETITIONS
}

fn default_warmup() -> usize {
    3
}

#[derive(Debug, Clone, Serialize)]
pub struct Timing {
    pub kernel: String,
    pub repetitions: usize,
    pub median_ns: u128,
    pub min_ns: u128,
    pub max_ns: u128,
}

#[derive(Debug, Clone, Serialize)]
pub struct BenchReport {
    pub name: String,
    pub timings: Vec<Timing>,
}

/// Times every kernel and writes `<name>_bench.json`.
pub fn bench(suite: &BenchSuite, out: &Path) -> Result<BenchReport, HarnessError> {
    validate_name(&suite.name)?;
    if suite.repetitions < MIN_REPETITIONS {
        return Err(invalid(format!("repetitions must be at least {MIN_REPETITIONS}")));
    }
    if suite.kernels.is_empty() {
        return Err(invalid("kernels must not be empty"));
    }
    let problems = suite
        .kernels
        .iter()
        .map(|k| k.problem().build(suite.seed).map_err(invalid))
        .collect::<Result<Vec<_>, _>>()?;
    std::fs::create_dir_all(out).map_err(|e| HarnessError::io(out, e))?;

    let mut timings = Vec::new();
    for (kernel, problem) in suite.kernels.iter().zip(&problems) {
        let manifold = problem.manifold();
        let x = problem.initial_point(suite.seed).map_err(invalid)?;
        let chart = manifold.at(&x).map_err(invalid)?;
        let oracle = problem.oracle();
        let mut rng = setup_rng(suite.seed, Domain::Auxiliary);
        let tangent = chart.project(&gaussian(x.nrows(), x.ncols(), &mut rng)).map_err(invalid)?;
        let mut rep = 0u64;
        let mut step = || -> manifold_zo_core::Result<()> {
            rep += 1;
            let stream = SampleStream::new(suite.seed, rep);
            match kernel {
                Kernel::Retraction { .. } => {
                    black_box(chart.retract(&(&tangent * 1e-2))?);
                }
                Kernel::Gradient { mu, m, .. } => {
                    black_box(estimate_gradient(&oracle, &chart, *mu, *m, stream)?);
                }
                Kernel::Hessian { mu, b, .. } => {
                    black_box(estimate_hessian(&oracle, &chart, *mu, *b, stream)?);
                }
                Kernel::Prox { t, lambda, .. } => {
                    black_box(solve_prox_tangent(&chart, &tangent, *t, *lambda, &ProxOptions::default())?);
                }
                Kernel::Cubic { mu, b, alpha, .. } => {
                    let g = estimate_gradient(&oracle, &chart, *mu, 1, stream)?;
                    let h = estimate_hessian(&oracle, &chart, *mu, *b, stream)?;
                    let options = CubicOptions { seed: rep, ..CubicOptions::default() };
                    black_box(solve_cubic(&chart, &g.vector, &h, *alpha, &options)?);
                }
            }
            Ok(())
        };
        let fail = |e: manifold_zo_core::Error| HarnessError::Aborted(format!("{}: {e}", kernel.label()));
        for _ in 0..suite.warmup {
            step().map_err(fail)?;
        }
        let mut ns = Vec::with_capacity(suite.repetitions);
        for _ in 0..suite.repetitions {
            let t = Instant::now();
            step().map_err(fail)?;
            ns.push(t.elapsed().as_nanos());
        }
        ns.sort_unstable();
        let timing = Timing {
            kernel: kernel.label(),
            repetitions: ns.len(),
            median_ns: ns[ns.len() / 2],
            min_ns: ns[0],
            max_ns: ns[ns.len() - 1],
        };
        eprintln!("{}: median {:.3} ms", timing.kernel, timing.median_ns as f64 * 1e-6);
        timings.push(timing);
    }
    let report = BenchReport { name: suite.name.clone(), timings };
    write_json(&out.join(format!("{}_bench.json", suite.name)), &report)?;
    Ok(report)
}

//! The `run` subcommand: a seed sweep of one solver on one problem.

use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use manifold_zo_core::problems::{estimate_constants, BenchmarkProblem};
use manifold_zo_core::rng::{setup_rng, Domain};
use manifold_zo_core::solvers::{self, RunTrace, SolverConfig, SolverKind, StopReason};
use manifold_zo_core::{Manifold, Mat};
use serde::Serialize;

use crate::config::{BallCenter, ExperimentConfig};
use crate::error::{invalid, HarnessError};
use crate::output::{quantile, write_json, write_trace};

/// Constant-estimation sample pairs.
const CONSTANT_PAIRS: usize = 100;

/// A validated run, ready to execute.
pub struct PreparedRun {
    pub seed: u64,
    pub problem: BenchmarkProblem,
    pub manifold: Manifold,
    pub config: SolverConfig,
    pub x0: Mat,
    pub ball: Option<(Mat, f64)>,
}

impl PreparedRun {
    pub fn execute(&self, solver: SolverKind) -> manifold_zo_core::Result<RunTrace> {
        self.execute_with(solver, &self.config)
    }

    fn execute_with(&self, solver: SolverKind, c: &SolverConfig) -> manifold_zo_core::Result<RunTrace> {
        let oracle = self.problem.oracle();
        let (m, x0) = (&self.manifold, &self.x0);
        match solver {
            SolverKind::ZoRgd => solvers::zo_rgd(&oracle, m, c, x0),
            SolverKind::ZoRsgd => solvers::zo_rsgd(&oracle, m, c, x0),
            SolverKind::ZoRsgdProjected => {
                let (center, radius) = self.ball.as_ref().expect("validated ball");
                solvers::zo_rsgd_projected(&oracle, m, c, x0, center, *radius)
            }
            SolverKind::ZoManpg => solvers::zo_manpg(&oracle, m, c, x0),
            SolverKind::ZoRscrn => solvers::zo_rscrn(&oracle, m, c, x0),
        }
    }
}

/// Builds every run of the sweep and dry-runs it for zero iterations so that
/// setup errors surface before any output exists.
pub fn prepare(cfg: &ExperimentConfig) -> Result<Vec<PreparedRun>, HarnessError> {
    cfg.validate()?;
    let mut runs = Vec::new();
    for seed in cfg.seeds.to_vec() {
        let problem = cfg.problem.build(seed).map_err(invalid)?;
        let mut manifold = problem.manifold();
        if let Some(m) = cfg.manifold {
            if m.kind != manifold.kind {
                return Err(invalid(format!("manifold {} does not match the problem's {}", m.name(), manifold.name())));
            }
            manifold = manifold.with_retraction(m.retraction).map_err(invalid)?;
        }
        let mut config = SolverConfig { seed, ..cfg.config.clone() };
        if config.theory.is_none() && cfg.estimate_constants {
            config.theory = Some(estimate_constants(problem.objective.as_ref(), seed, CONSTANT_PAIRS).map_err(invalid)?);
        }
        let x0 = problem.initial_point(seed).map_err(invalid)?;
        let ball = match cfg.ball {
            None => None,
            Some(b) => {
                let center = match b.center {
                    BallCenter::Optimum => {
                        problem.optimum.clone().ok_or_else(|| invalid("problem has no known optimum for the ball"))?
                    }
                    BallCenter::Random { seed } => {
                        manifold.random_point(&mut setup_rng(seed, Domain::Init)).map_err(invalid)?
                    }
                };
                Some((center, b.radius))
            }
        };
        let run = PreparedRun { seed, problem, manifold, config, x0, ball };
        let dry = SolverConfig { max_iter: 0, ..run.config.clone() };
        run.execute_with(cfg.solver, &dry).map_err(invalid)?;
        runs.push(run);
    }
    Ok(runs)
}

#[derive(Debug, Clone, Serialize)]
pub struct RunSummary {
    pub seed: u64,
    pub trace: String,
    pub iterations: usize,
    pub iterations_to_eps: Option<usize>,
    pub final_f: f64,
    pub final_grad_norm: f64,
    pub total_calls: u64,
    pub reason: StopReason,
    pub step_size: f64,
    pub constants: Option<manifold_zo_core::theory::TheoryConstants>,
    pub wall_time_s: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ExperimentSummary {
    pub name: String,
    pub solver: &'static str,
    pub manifold: String,
    pub epsilon: Option<f64>,
    pub seeds: usize,
    pub reached_eps: usize,
    /// Runs that never reached ε count as infinitely long.
    pub median_iters: Option<f64>,
    pub iqr_iters: Option<[f64; 2]>,
    pub total_calls: u64,
    pub aborted: usize,
    pub wall_time_s: f64,
    pub jobs: usize,
    pub finished_at_unix_s: u64,
    pub runs: Vec<RunSummary>,
}

struct Finished {
    trace: RunTrace,
    wall: f64,
}

/// Runs the sweep on `jobs` threads and writes traces and the summary into `out`.
pub fn run_experiment(cfg: &ExperimentConfig, out: &Path, jobs: usize) -> Result<ExperimentSummary, HarnessError> {
    let runs = prepare(cfg)?;
    std::fs::create_dir_all(out).map_err(|e| HarnessError::io(out, e))?;
    let log = ProgressLog::open(&out.join(format!("{}.log", cfg.name)))?;
    let start = Instant::now();
    let jobs = jobs.max(1).min(runs.len());
    let next = AtomicUsize::new(0);
    let slots: Vec<Mutex<Option<Result<Finished, String>>>> = runs.iter().map(|_| Mutex::new(None)).collect();
    std::thread::scope(|s| {
        for _ in 0..jobs {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(run) = runs.get(i) else { break };
                let t = Instant::now();
                let result = std::panic::catch_unwind(std::panic::AssertUnwindSafe(|| run.execute(cfg.solver)))
                    .unwrap_or_else(|_| Err(manifold_zo_core::Error::Numerical("solver panicked".into())))
                    .map(|trace| Finished { trace, wall: t.elapsed().as_secs_f64() });
                match &result {
                    Ok(f) => log.line(&format!(
                        "{} seed {}: {} iterations, grad_norm {:.3e}, {:?}",
                        cfg.name,
                        run.seed,
                        f.trace.records.len() - 1,
                        f.trace.last().grad_norm,
                        f.trace.reason
                    )),
                    Err(e) => log.line(&format!("{} seed {}: error {e}", cfg.name, run.seed)),
                }
                *slots[i].lock().expect("slot lock") = Some(result.map_err(|e| e.to_string()));
            });
        }
    });

    let eps = cfg.epsilon();
    let mut summaries = Vec::with_capacity(runs.len());
    let mut first_error = None;
    for (run, slot) in runs.iter().zip(slots) {
        let finished = slot.into_inner().expect("slot lock").expect("every run executes");
        let f = match finished {
            Ok(f) => f,
            Err(e) => {
                first_error.get_or_insert(format!("seed {}: {e}", run.seed));
                continue;
            }
        };
        let trace_name = format!("{}_{}.csv", cfg.name, run.seed);
        write_trace(&out.join(&trace_name), &f.trace.records, cfg.monitor_every)?;
        if let StopReason::Aborted { message } = &f.trace.reason {
            first_error.get_or_insert(format!("seed {}: {message}", run.seed));
        }
        let last = f.trace.last();
        summaries.push(RunSummary {
            seed: run.seed,
            trace: trace_name,
            iterations: f.trace.records.len() - 1,
            iterations_to_eps: eps.and_then(|e| f.trace.iterations_to(e)),
            final_f: last.f,
            final_grad_norm: last.grad_norm,
            total_calls: f.trace.total_calls,
            reason: f.trace.reason.clone(),
            step_size: f.trace.step_size,
            constants: f.trace.constants,
            wall_time_s: f.wall,
        });
    }

    let mut iters: Vec<f64> =
        summaries.iter().map(|s| s.iterations_to_eps.map_or(f64::INFINITY, |k| k as f64)).collect();
    iters.sort_by(f64::total_cmp);
    let (q1, q3) = (quantile(&iters, 0.25), quantile(&iters, 0.75));
    let summary = ExperimentSummary {
        name: cfg.name.clone(),
        solver: cfg.solver.name(),
        manifold: runs[0].manifold.name().to_string(),
        epsilon: eps,
        seeds: runs.len(),
        reached_eps: summaries.iter().filter(|s| s.iterations_to_eps.is_some()).count(),
        median_iters: eps.and(quantile(&iters, 0.5)),
        iqr_iters: eps.and(q1.zip(q3).map(|(a, b)| [a, b])),
        total_calls: summaries.iter().map(|s| s.total_calls).sum(),
        aborted: runs.len() - summaries.iter().filter(|s| !matches!(s.reason, StopReason::Aborted { .. })).count(),
        wall_time_s: start.elapsed().as_secs_f64(),
        jobs,
        finished_at_unix_s: SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs()),
        runs: summaries,
    };
    write_json(&summary_path(out, &cfg.name), &summary)?;
    match first_error {
        Some(e) => Err(HarnessError::Aborted(e)),
        None => Ok(summary),
    }
}

pub fn summary_path(out: &Path, name: &str) -> PathBuf {
    out.join(format!("{name}_summary.json"))
}

/// Append-only progress log shared by the worker threads.
pub(crate) struct ProgressLog {
    file: Mutex<std::fs::File>,
    path: PathBuf,
}

impl ProgressLog {
    pub(crate) fn open(path: &Path) -> Result<Self, HarnessError> {
        let file = std::fs::OpenOptions::new()
            .create(true)
            .append(true)
            .open(path)
            .map_err(|e| HarnessError::io(path, e))?;
        Ok(Self { file: Mutex::new(file), path: path.to_path_buf() })
    }

    pub(crate) fn line(&self, text: &str) {
        use std::io::Write;
        let mut f = self.file.lock().expect("log lock");
        eprintln!("{text}");
        if let Err(e) = writeln!(f, "{text}") {
            eprintln!("warning: cannot append to {}: {e}", self.path.display());
        }
    }
}

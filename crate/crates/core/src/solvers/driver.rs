use alloc::string::ToString;
use alloc::vec::Vec;

use super::{flags, Candidate, IterRecord, RunTrace, SolverConfig, SolverKind, StopReason, StopRule};
use crate::error::{contract, Result};
use crate::estimators::{estimate_gradient, estimate_hessian, GradientEstimate};
use crate::linalg::Mat;
use crate::manifold::{Chart, Manifold, Retraction};
use crate::oracle::ZeroOrderOracle;
use crate::rng::{Domain, SampleStream};
use crate::subproblem::{solve_cubic, solve_prox_tangent, CubicOptions, ProxOptions};

struct Step {
    next: Mat,
    step_norm: f64,
    flags: u32,
}

/// How the monitored gradient norm is computed.
#[derive(Clone, Copy)]
enum Monitor {
    Gradient,
    /// `‖v̄‖` of the exact-gradient proximal step with `(t, λ)`.
    Prox { t: f64, lambda: f64 },
}

struct Run<'o, 'c> {
    kind: SolverKind,
    oracle: &'o ZeroOrderOracle<'o>,
    manifold: Manifold,
    config: &'c SolverConfig,
    step_size: f64,
    lambda: f64,
    monitor: Monitor,
}

impl Run<'_, '_> {
    fn record(&self, x: &Mat, iter: usize, step_norm: f64, calls: u64, flags: u32) -> Result<IterRecord> {
        let obj = self.oracle.objective();
        let mut f = obj.value(x);
        if self.lambda != 0.0 {
            f += self.lambda * x.abs().sum();
        }
        let chart = self.manifold.at(x)?;
        let grad = obj.gradient(x);
        let grad_norm = match self.monitor {
            Monitor::Gradient => chart.norm(&grad),
            Monitor::Prox { t, lambda } => {
                let sol = solve_prox_tangent(&chart, &grad, t, lambda, &ProxOptions::default())?;
                sol.v.norm()
            }
        };
        Ok(IterRecord { iter, f, grad_norm, step_norm, calls, flags })
    }

    fn stop(&self, r: &IterRecord) -> bool {
        match self.config.stop {
            StopRule::MaxIter => false,
            StopRule::MonitorGradNorm { eps } => r.grad_norm <= eps,
            StopRule::ManpgStep { eps } => {
                let l = self.config.theory.map_or(0.0, |t| t.l_g);
                r.grad_norm <= eps / l
            }
        }
    }

    /// Iterates `step` from `x0`, recording the monitored state after each step.
    fn drive(
        &self,
        x0: &Mat,
        mut step: impl FnMut(&Chart<'_>, SampleStream) -> Result<Step>,
    ) -> Result<RunTrace> {
        self.manifold.check_point(x0)?;
        let start_calls = self.oracle.calls();
        let mut x = x0.clone();
        let mut records = Vec::with_capacity(self.config.max_iter.min(1 << 16) + 1);
        records.push(self.record(&x, 0, 0.0, 0, 0)?);
        let mut candidate: Option<Candidate> = None;
        let mut reason = StopReason::MaxIter;
        for k in 0..self.config.max_iter {
            if self.stop(records.last().expect("initial record")) {
                reason = StopReason::Converged;
                break;
            }
            let stream = SampleStream::new(self.config.seed, k as u64);
            let outcome = self.manifold.at(&x).and_then(|chart| step(&chart, stream)).and_then(|s| {
                let calls = self.oracle.calls() - start_calls;
                let rec = self.record(&s.next, k + 1, s.step_norm, calls, s.flags)?;
                Ok((s, rec))
            });
            match outcome {
                Ok((s, rec)) => {
                    if self.kind == SolverKind::ZoRscrn && candidate.as_ref().is_none_or(|c| s.step_norm < c.step_norm) {
                        candidate = Some(Candidate { iter: k + 1, step_norm: s.step_norm, point: s.next.clone() });
                    }
                    x = s.next;
                    records.push(rec);
                }
                Err(e) => {
                    reason = StopReason::Aborted { message: e.to_string() };
                    break;
                }
            }
        }
        if reason == StopReason::MaxIter && self.stop(records.last().expect("initial record")) {
            reason = StopReason::Converged;
        }
        Ok(RunTrace {
            solver: self.kind,
            manifold: self.manifold,
            step_size: self.step_size,
            constants: self.config.theory,
            records,
            reason,
            total_calls: self.oracle.calls() - start_calls,
            final_point: x,
            candidate,
        })
    }
}

fn check_manifold(oracle: &ZeroOrderOracle<'_>, manifold: &Manifold) -> Result<()> {
    if oracle.manifold().kind != manifold.kind {
        return Err(contract("solver manifold does not match the objective's manifold"));
    }
    Ok(())
}

fn gradient_flags(g: &GradientEstimate) -> u32 {
    if g.cancelled_terms > 0 {
        flags::CANCELLATION
    } else {
        0
    }
}

fn descent_run<'o, 'c>(
    kind: SolverKind,
    oracle: &'o ZeroOrderOracle<'o>,
    manifold: &Manifold,
    config: &'c SolverConfig,
) -> Result<Run<'o, 'c>> {
    check_manifold(oracle, manifold)?;
    config.validate(kind, manifold)?;
    if oracle.objective().l1_weight() != 0.0 {
        return Err(contract("gradient solvers need a smooth objective (lambda = 0)"));
    }
    Ok(Run {
        kind,
        oracle,
        manifold: *manifold,
        config,
        step_size: config.step_size(kind, manifold.intrinsic_dim())?,
        lambda: 0.0,
        monitor: Monitor::Gradient,
    })
}

fn gradient_step(run: &Run<'_, '_>, chart: &Chart<'_>, stream: SampleStream) -> Result<(Mat, f64, u32, Mat)> {
    let g = estimate_gradient(run.oracle, chart, run.config.mu, run.config.m, stream)?;
    let eta = &g.vector * -run.step_size;
    let step_norm = chart.norm(&eta);
    Ok((eta, step_norm, gradient_flags(&g), g.vector))
}

/// Zeroth-order Riemannian gradient descent `x_{k+1} = R_{x_k}(−η ḡ_μ(x_k))`
/// on a deterministic oracle.
pub fn zo_rgd(oracle: &ZeroOrderOracle<'_>, manifold: &Manifold, config: &SolverConfig, x0: &Mat) -> Result<RunTrace> {
    if oracle.mode().is_stochastic() {
        return Err(contract("zo_rgd needs a deterministic oracle"));
    }
    let run = descent_run(SolverKind::ZoRgd, oracle, manifold, config)?;
    run.drive(x0, |chart, stream| {
        let (eta, step_norm, flags, _) = gradient_step(&run, chart, stream)?;
        Ok(Step { next: chart.retract(&eta)?, step_norm, flags })
    })
}

/// Zeroth-order Riemannian stochastic gradient descent on a noisy or
/// finite-sum oracle.
pub fn zo_rsgd(oracle: &ZeroOrderOracle<'_>, manifold: &Manifold, config: &SolverConfig, x0: &Mat) -> Result<RunTrace> {
    if !oracle.mode().is_stochastic() {
        return Err(contract("zo_rsgd needs a stochastic oracle"));
    }
    let run = descent_run(SolverKind::ZoRsgd, oracle, manifold, config)?;
    run.drive(x0, |chart, stream| {
        let (eta, step_norm, flags, _) = gradient_step(&run, chart, stream)?;
        Ok(Step { next: chart.retract(&eta)?, step_norm, flags })
    })
}

/// Stochastic gradient steps along geodesics followed by projection onto the
/// geodesic ball of radius `radius` around `center`.
pub fn zo_rsgd_projected(
    oracle: &ZeroOrderOracle<'_>,
    manifold: &Manifold,
    config: &SolverConfig,
    x0: &Mat,
    center: &Mat,
    radius: f64,
) -> Result<RunTrace> {
    let manifold = manifold.with_retraction(Retraction::Exponential)?;
    let mut run = descent_run(SolverKind::ZoRsgdProjected, oracle, &manifold, config)?;
    run.manifold = manifold;
    manifold.check_point(center)?;
    if !(radius > 0.0) || !radius.is_finite() {
        return Err(contract("ball radius must be positive"));
    }
    // Exp/log support is checked up front rather than at the first step.
    manifold.log(center, center)?;
    let x0 = manifold.project_geodesic_ball(x0, center, radius)?;
    run.drive(&x0, |chart, stream| {
        let (eta, step_norm, mut flags, _) = gradient_step(&run, chart, stream)?;
        let y = chart.exp(&eta)?;
        let next = manifold.project_geodesic_ball(&y, center, radius)?;
        if next != y {
            flags |= flags::BALL_PROJECTED;
        }
        Ok(Step { next, step_norm, flags })
    })
}

/// Zeroth-order manifold proximal gradient for `f + λ‖·‖₁` on the Stiefel
/// manifold: `v_k` solves the tangent proximal problem with the estimated
/// gradient and `x_{k+1} = R_{x_k}(η v_k)`.
pub fn zo_manpg(oracle: &ZeroOrderOracle<'_>, manifold: &Manifold, config: &SolverConfig, x0: &Mat) -> Result<RunTrace> {
    check_manifold(oracle, manifold)?;
    config.validate(SolverKind::ZoManpg, manifold)?;
    if !matches!(manifold.kind, crate::ManifoldKind::Stiefel { .. }) {
        return Err(contract("zo_manpg runs on the Stiefel manifold"));
    }
    let t = match config.t {
        Some(t) => t,
        None => 1.0 / config.l_g().ok_or_else(|| contract("zo_manpg needs t or theory.l_g > 0"))?,
    };
    let lambda = config.lambda.unwrap_or_else(|| oracle.objective().l1_weight());
    let run = Run {
        kind: SolverKind::ZoManpg,
        oracle,
        manifold: *manifold,
        config,
        step_size: config.step_size(SolverKind::ZoManpg, manifold.intrinsic_dim())?,
        lambda,
        monitor: Monitor::Prox { t, lambda },
    };
    let prox = ProxOptions::default();
    let composite = |x: &Mat, key: u64| oracle.eval(x, key) + lambda * x.abs().sum();
    run.drive(x0, |chart, stream| {
        let g = estimate_gradient(oracle, chart, config.mu, config.m, stream)?;
        let sol = solve_prox_tangent(chart, &g.vector, t, lambda, &prox)?;
        let mut flags = gradient_flags(&g);
        if sol.fallback_used {
            flags |= flags::PROX_FALLBACK;
        }
        let step_norm = sol.v.norm();
        let mut eta = run.step_size;
        let mut next = chart.retract(&(&sol.v * eta))?;
        if config.backtracking && step_norm > 0.0 {
            let key = stream.key(Domain::Auxiliary, 0);
            let p0 = composite(chart.point(), key);
            for _ in 0..20 {
                if composite(&next, key) <= p0 - eta * step_norm * step_norm / (4.0 * t) {
                    break;
                }
                eta *= 0.5;
                flags |= flags::BACKTRACKED;
                next = chart.retract(&(&sol.v * eta))?;
            }
        }
        Ok(Step { next, step_norm, flags })
    })
}

/// Zeroth-order Riemannian stochastic cubic-regularized Newton.
pub fn zo_rscrn(oracle: &ZeroOrderOracle<'_>, manifold: &Manifold, config: &SolverConfig, x0: &Mat) -> Result<RunTrace> {
    check_manifold(oracle, manifold)?;
    config.validate(SolverKind::ZoRscrn, manifold)?;
    if oracle.objective().l1_weight() != 0.0 {
        return Err(contract("zo_rscrn needs a smooth objective (lambda = 0)"));
    }
    let run = Run {
        kind: SolverKind::ZoRscrn,
        oracle,
        manifold: *manifold,
        config,
        step_size: 1.0,
        lambda: 0.0,
        monitor: Monitor::Gradient,
    };
    run.drive(x0, |chart, stream| {
        let g = estimate_gradient(oracle, chart, config.mu, config.m, stream)?;
        let h = estimate_hessian(oracle, chart, config.mu, config.b, stream)?;
        let options = CubicOptions { krylov_dim: config.krylov_dim, seed: stream.key(Domain::Auxiliary, 1), ..CubicOptions::default() };
        let sol = solve_cubic(chart, &g.vector, &h, config.alpha, &options)?;
        let mut flags = gradient_flags(&g);
        if sol.cauchy_fallback {
            flags |= flags::CUBIC_FALLBACK;
        }
        if sol.hard_case {
            flags |= flags::HARD_CASE;
        }
        let eta = chart.project(&sol.eta)?;
        let step_norm = chart.norm(&eta);
        Ok(Step { next: chart.retract(&eta)?, step_norm, flags })
    })
}

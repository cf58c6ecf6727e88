use manifold_zo_core::estimators::{estimate_gradient, estimate_hessian, TangentOperator};
use manifold_zo_core::linalg::{inner, sym};
use manifold_zo_core::manifold::gaussian;
use manifold_zo_core::problems::{make_planted_procrustes, make_rayleigh};
use manifold_zo_core::rng::SampleStream;
use manifold_zo_core::subproblem::{
    cubic_model, prox_objective, solve_cubic, solve_prox_tangent, CubicOptions, ProxOptions, TOL_CUBIC,
};
use manifold_zo_core::{Manifold, Mat, Retraction, SpdMetric, TOL_FEAS};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn manifolds() -> Vec<Manifold> {
    vec![
        Manifold::euclidean(3, 2),
        Manifold::sphere(6),
        Manifold::sphere_with_radius(4, 2.5),
        Manifold::stiefel(5, 2),
        Manifold::stiefel(5, 2).with_retraction(Retraction::Polar).unwrap(),
        Manifold::stiefel(3, 3),
        Manifold::grassmann(6, 2),
        Manifold::grassmann(5, 2).with_retraction(Retraction::Exponential).unwrap(),
        Manifold::spd(3, SpdMetric::Euclidean),
        Manifold::spd(3, SpdMetric::AffineInvariant),
        Manifold::spd(3, SpdMetric::AffineInvariant).with_retraction(Retraction::SecondOrderSpd).unwrap(),
    ]
}

fn any_manifold() -> impl Strategy<Value = Manifold> {
    (0..manifolds().len()).prop_map(|i| manifolds()[i])
}

fn point_and_rng(manifold: &Manifold, seed: u64) -> (Mat, ChaCha8Rng) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x = manifold.random_point(&mut rng).unwrap();
    (x, rng)
}

fn ambient(manifold: &Manifold, rng: &mut ChaCha8Rng) -> Mat {
    let (r, c) = manifold.shape();
    gaussian(r, c, rng)
}

/// Log-log slope of `e(t)` between `t` and `t/4`.
fn slope(e: impl Fn(f64) -> f64, t: f64) -> f64 {
    (e(t) / e(t / 4.0)).ln() / 4f64.ln()
}

fn second_order(manifold: &Manifold) -> bool {
    use manifold_zo_core::ManifoldKind::*;
    matches!(
        (manifold.kind, manifold.retraction),
        (Sphere { .. }, Retraction::Exponential)
            | (Stiefel { .. }, Retraction::Polar)
            | (Grassmann { .. }, Retraction::Exponential)
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn projector_is_idempotent_and_self_adjoint(manifold in any_manifold(), seed in any::<u64>()) {
        let (x, mut rng) = point_and_rng(&manifold, seed);
        let chart = manifold.at(&x).unwrap();
        let v = ambient(&manifold, &mut rng);
        let w = ambient(&manifold, &mut rng);
        let pv = chart.project(&v).unwrap();
        let ppv = chart.project(&pv).unwrap();
        prop_assert!((&ppv - &pv).norm() <= 1e-10 * (1.0 + pv.norm()));
        let pw = chart.project(&w).unwrap();
        let lhs = inner(&pv, &w);
        let rhs = inner(&v, &pw);
        prop_assert!((lhs - rhs).abs() <= 1e-10 * (1.0 + v.norm() * w.norm()));
    }

    #[test]
    fn retraction_preserves_feasibility(manifold in any_manifold(), seed in any::<u64>(), scale in 0.0f64..3.0) {
        let (x, mut rng) = point_and_rng(&manifold, seed);
        let chart = manifold.at(&x).unwrap();
        let eta = chart.sample(&mut rng);
        let eta = &eta * (scale / chart.norm(&eta).max(1e-300));
        let y = chart.retract(&eta).unwrap();
        prop_assert!(manifold.feasibility_residual(&y) <= TOL_FEAS);
    }

    #[test]
    fn retraction_at_zero_is_identity(manifold in any_manifold(), seed in any::<u64>()) {
        let (x, _) = point_and_rng(&manifold, seed);
        let chart = manifold.at(&x).unwrap();
        let (r, c) = manifold.shape();
        prop_assert_eq!(chart.retract(&Mat::zeros(r, c)).unwrap(), x);
    }

    #[test]
    fn retraction_is_first_order(manifold in any_manifold(), seed in any::<u64>()) {
        let (x, mut rng) = point_and_rng(&manifold, seed);
        let chart = manifold.at(&x).unwrap();
        let eta = chart.sample(&mut rng);
        let eta = &eta / chart.norm(&eta);
        let err = |t: f64| ((chart.retract(&(&eta * t)).unwrap() - &x) / t - &eta).norm();
        // Flat cases have an exactly linear retraction; nothing to measure.
        if err(1e-2) > 1e-9 {
            prop_assert!(slope(err, 1e-2) >= 0.9, "slope {}", slope(err, 1e-2));
        }
    }

    #[test]
    fn second_order_retractions_have_no_tangential_acceleration(manifold in any_manifold(), seed in any::<u64>()) {
        prop_assume!(second_order(&manifold));
        let (x, mut rng) = point_and_rng(&manifold, seed);
        let chart = manifold.at(&x).unwrap();
        let eta = chart.sample(&mut rng);
        let eta = &eta / chart.norm(&eta);
        let acc = |t: f64| {
            let d = chart.retract(&(&eta * t)).unwrap() - &x - &eta * t;
            chart.project(&d).unwrap().norm() / t
        };
        prop_assert!(slope(acc, 5e-2) >= 1.9, "slope {}", slope(acc, 5e-2));
    }

    #[test]
    fn spd_second_order_retraction_tracks_the_geodesic(seed in any::<u64>()) {
        let manifold = Manifold::spd(3, SpdMetric::AffineInvariant).with_retraction(Retraction::SecondOrderSpd).unwrap();
        let (x, mut rng) = point_and_rng(&manifold, seed);
        let chart = manifold.at(&x).unwrap();
        let eta = chart.sample(&mut rng);
        let eta = &eta / chart.norm(&eta);
        let gap = |t: f64| {
            let r = chart.retract(&(&eta * t)).unwrap();
            manifold.distance(&r, &chart.exp(&(&eta * t)).unwrap()).unwrap()
        };
        prop_assert!(slope(gap, 5e-2) >= 2.8, "slope {}", slope(gap, 5e-2));
    }

    #[test]
    fn log_inverts_exp(manifold in any_manifold(), seed in any::<u64>(), scale in 0.01f64..1.0) {
        let (x, mut rng) = point_and_rng(&manifold, seed);
        let chart = manifold.at(&x).unwrap();
        let eta = chart.sample(&mut rng);
        let eta = &eta * (scale / chart.norm(&eta));
        let Ok(y) = chart.exp(&eta) else { return Ok(()) };
        let back = chart.log(&y).unwrap();
        prop_assert!((&back - &eta).norm() <= 1e-8);
        let dist = manifold.distance(&x, &y).unwrap();
        prop_assert!((dist - scale).abs() <= 1e-8);
    }

    #[test]
    fn gradient_estimates_are_tangent(seed in any::<u64>(), it in 0u64..1000) {
        let problem = make_planted_procrustes(5, 2, 8, seed).unwrap();
        let manifold = problem.manifold();
        let x = problem.initial_point(seed).unwrap();
        let chart = manifold.at(&x).unwrap();
        let oracle = problem.oracle();
        let g = estimate_gradient(&oracle, &chart, 1e-4, 12, SampleStream::new(seed, it)).unwrap();
        let pg = chart.project(&g.vector).unwrap();
        prop_assert!((&pg - &g.vector).norm() <= 1e-10 * (1.0 + g.vector.norm()));
    }

    #[test]
    fn hessian_estimate_is_self_adjoint_and_kills_normals(seed in any::<u64>()) {
        let problem = make_planted_procrustes(5, 2, 8, seed).unwrap();
        let manifold = problem.manifold();
        let x = problem.initial_point(seed).unwrap();
        let chart = manifold.at(&x).unwrap();
        let oracle = problem.oracle();
        let h = estimate_hessian(&oracle, &chart, 1e-3, 15, SampleStream::new(seed, 0)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 7);
        let a = chart.sample(&mut rng);
        let b = chart.sample(&mut rng);
        let lhs = chart.inner(&a, &h.apply(&b));
        let rhs = chart.inner(&h.apply(&a), &b);
        prop_assert!((lhs - rhs).abs() <= 1e-9 * (1.0 + lhs.abs()));
        let v = ambient(&manifold, &mut rng);
        let normal = &v - chart.project(&v).unwrap();
        prop_assert!(h.apply(&normal).norm() <= 1e-9 * (1.0 + v.norm()));
        let image = h.apply(&v);
        prop_assert!((chart.project(&image).unwrap() - &image).norm() <= 1e-9 * (1.0 + image.norm()));
    }

    #[test]
    fn prox_step_beats_feasible_perturbations(seed in any::<u64>(), lambda in 0.0f64..1.0, t in 0.05f64..2.0) {
        let manifold = Manifold::stiefel(4, 2);
        let (x, mut rng) = point_and_rng(&manifold, seed);
        let chart = manifold.at(&x).unwrap();
        let g = chart.sample(&mut rng);
        let sol = solve_prox_tangent(&chart, &g, t, lambda, &ProxOptions::default()).unwrap();
        let best = prox_objective(&x, &g, t, lambda, &sol.v);
        for i in 0..1000 {
            let scale = 10f64.powi(-(i % 6));
            let dir = chart.sample(&mut rng);
            let w = &sol.v + &dir * scale;
            prop_assert!(prox_objective(&x, &g, t, lambda, &w) >= best - 1e-8);
        }
    }

    #[test]
    fn cubic_solution_certifies_and_decreases_the_model(seed in any::<u64>(), alpha in 0.1f64..10.0, d in 2usize..10) {
        let manifold = Manifold::euclidean(d, 1);
        let x = Mat::zeros(d, 1);
        let chart = manifold.at(&x).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = sym(&gaussian(d, d, &mut rng));
        let g = gaussian(d, 1, &mut rng) * rng.random_range(0.01..2.0);
        let h = |v: &Mat| &s * v;
        let sol = solve_cubic(&chart, &g, &h, alpha, &CubicOptions { seed, ..CubicOptions::default() }).unwrap();
        prop_assert!(!sol.cauchy_fallback);
        prop_assert!(sol.orthogonality <= 1e-8);
        let n = sol.eta.norm();
        prop_assert!((sol.lambda - alpha * n / 2.0).abs() <= TOL_CUBIC * (1.0 + sol.lambda));
        prop_assert!(sol.shifted_min_eig >= -TOL_CUBIC);
        let m = cubic_model(&chart, &g, &h, alpha, &sol.eta);
        prop_assert!(m <= -alpha * n * n * n / 12.0 + 1e-10);
        prop_assert!((m - sol.model_value).abs() <= 1e-10 * (1.0 + m.abs()));
    }
}

#[test]
fn rayleigh_analytic_hessian_is_self_adjoint() {
    let problem = make_rayleigh(6, 3).unwrap();
    let manifold = problem.manifold();
    let x = problem.initial_point(1).unwrap();
    let chart = manifold.at(&x).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let a = chart.sample(&mut rng);
    let b = chart.sample(&mut rng);
    let ha = problem.objective.hessian_action(&x, &a).unwrap();
    let hb = problem.objective.hessian_action(&x, &b).unwrap();
    assert!((chart.inner(&a, &hb) - chart.inner(&ha, &b)).abs() < 1e-12);
}

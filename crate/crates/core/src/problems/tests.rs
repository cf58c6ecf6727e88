use super::*;
use crate::manifold::{Retraction, SpdMetric};
use alloc::vec;

#[test]
fn procrustes_optimum_is_planted() {
    let p = make_planted_procrustes(8, 3, 12, 4).unwrap();
    let x = p.optimum.clone().unwrap();
    assert!(p.objective.value(&x).abs() < 1e-12);
    assert!(p.objective.gradient(&x).norm() < 1e-12);
}

#[test]
fn construction_is_reproducible() {
    let a = make_procrustes(6, 2, 5, 9).unwrap();
    let b = make_procrustes(6, 2, 5, 9).unwrap();
    let x = a.initial_point(1).unwrap();
    assert_eq!(a.objective.value(&x), b.objective.value(&x));
    let c = make_procrustes(6, 2, 5, 10).unwrap();
    assert_ne!(a.objective.value(&x), c.objective.value(&x));
}

#[test]
fn kpca_stationary_at_top_subspace() {
    let p = make_kpca(12, 4, 3).unwrap();
    let x = p.optimum.clone().unwrap();
    assert!(p.objective.gradient(&x).norm() < 1e-12);
    assert!((p.objective.value(&x) - p.optimal_value.unwrap()).abs() < 1e-12);
    // No random subspace does better.
    let mut rng = setup_rng(1, Domain::Init);
    for _ in 0..50 {
        let y = p.manifold().random_point(&mut rng).unwrap();
        assert!(p.objective.value(&y) >= p.optimal_value.unwrap() - 1e-12);
    }
}

#[test]
fn finite_sums_average_to_the_objective() {
    let problems = [make_kpca(10, 3, 1).unwrap(), make_karcher(3, 20, 2).unwrap(), make_procrustes(6, 2, 7, 3).unwrap()];
    for p in problems {
        let x = p.initial_point(5).unwrap();
        let k = p.objective.summands();
        let avg: f64 = (0..k).map(|i| p.objective.summand_value(&x, i)).sum::<f64>() / k as f64;
        let f = p.objective.value(&x);
        assert!((avg - f).abs() <= 1e-12 * f.abs().max(1.0), "{:?}", p.spec.kind);
        let mut g = Mat::zeros(x.nrows(), x.ncols());
        for i in 0..k {
            g += p.objective.summand_gradient(&x, i);
        }
        assert!((g / k as f64 - p.objective.gradient(&x)).norm() < 1e-10);
    }
}

#[test]
fn sparse_pca_splits_consistently() {
    let smooth = make_sparse_pca(8, 12, 3, 0.0, 6).unwrap();
    let sparse = make_sparse_pca(8, 12, 3, 0.5, 6).unwrap();
    let x = smooth.initial_point(2).unwrap();
    let f = smooth.objective.value(&x);
    assert_eq!(smooth.composite_value(&x), f);
    assert_eq!(sparse.objective.value(&x), f);
    assert!((sparse.composite_value(&x) - (f + 0.5 * x.abs().sum())).abs() < 1e-14);
    // λ = 0 is kPCA on the Stiefel manifold: −½‖AX‖².
    let ProblemKind::SparsePca { .. } = smooth.spec.kind else { panic!() };
    assert!(f <= 0.0);
}

#[test]
fn karcher_of_identical_points() {
    let a = Mat::from_row_slice(3, 3, &[2.0, 0.3, 0.1, 0.3, 1.5, 0.2, 0.1, 0.2, 1.0]);
    let p = karcher_problem(vec![a.clone(); 4], 0).unwrap();
    assert!(p.objective.value(&a) < 1e-24);
    assert!(p.objective.gradient(&a).norm() < 1e-12);
}

#[test]
fn karcher_gradient_vanishes_at_geodesic_midpoint() {
    let m = Manifold::spd(3, SpdMetric::AffineInvariant);
    let mut rng = setup_rng(3, Domain::Init);
    let a1 = m.random_point(&mut rng).unwrap();
    let a2 = m.random_point(&mut rng).unwrap();
    let half = m.log(&a1, &a2).unwrap() * 0.5;
    let mid = m.exp(&a1, &half).unwrap();
    let p = karcher_problem(vec![a1, a2], 0).unwrap();
    assert!(p.objective.gradient(&mid).norm() < 1e-10);
}

#[test]
fn karcher_is_congruence_invariant() {
    let m = Manifold::spd(3, SpdMetric::AffineInvariant);
    let mut rng = setup_rng(4, Domain::Init);
    let points: Vec<Mat> = (0..10).map(|_| m.random_point(&mut rng).unwrap()).collect();
    let mm = gaussian(3, 3, &mut rng) + Mat::identity(3, 3) * 2.0;
    let congr = |a: &Mat| sym(&(mm.transpose() * a * &mm));
    let x = m.random_point(&mut rng).unwrap();
    let p = karcher_problem(points.clone(), 0).unwrap();
    let moved = karcher_problem(points.iter().map(congr).collect(), 0).unwrap();
    let f = p.objective.value(&x);
    let g = moved.objective.value(&congr(&x));
    assert!((f - g).abs() < 1e-8 * f.max(1.0));
}

#[test]
fn noise_wrapper() {
    let base = make_procrustes(6, 2, 5, 1).unwrap();
    let x = base.initial_point(3).unwrap();
    let f = base.objective.value(&x);
    let silent = with_noise(make_procrustes(6, 2, 5, 1).unwrap(), 0.0, 7).unwrap();
    let oracle = silent.oracle();
    assert!((0..100).all(|k| oracle.eval(&x, k) == f));

    let sd = 0.25;
    let noisy = with_noise(make_procrustes(6, 2, 5, 1).unwrap(), sd, 7).unwrap();
    let oracle = noisy.oracle();
    const N: u64 = 100_000;
    let (mut s1, mut s2) = (0.0, 0.0);
    for k in 0..N {
        let e = oracle.eval(&x, k) - f;
        s1 += e;
        s2 += e * e;
    }
    let n = N as f64;
    let mean = s1 / n;
    let emp_sd = (s2 / n - mean * mean).sqrt();
    assert!(mean.abs() <= 4.0 * sd / n.sqrt());
    assert!((emp_sd / sd - 1.0).abs() <= 0.03);
    // Monitoring is untouched.
    assert_eq!(noisy.objective.gradient(&x), base.objective.gradient(&x));
}

#[test]
fn gradients_are_tangent() {
    let problems = [
        make_procrustes(7, 3, 9, 1).unwrap(),
        make_kpca(9, 3, 1).unwrap(),
        make_sparse_pca(6, 9, 2, 0.3, 1).unwrap(),
        make_karcher(3, 5, 1).unwrap(),
        make_rayleigh(6, 1).unwrap(),
    ];
    for p in problems {
        let x = p.initial_point(9).unwrap();
        let g = p.objective.gradient(&x);
        let pg = p.manifold().project_tangent(&x, &g).unwrap();
        assert!((pg - &g).norm() < 1e-10 * g.norm().max(1.0));
    }
}

/// Second differences of the pullback along a second-order retraction equal
/// `⟨η, Hess f[η]⟩`.
#[test]
fn hessians_match_second_differences() {
    let cases: Vec<(BenchmarkProblem, Retraction)> = vec![
        (make_procrustes(7, 3, 9, 2).unwrap(), Retraction::Polar),
        (make_kpca(9, 3, 2).unwrap(), Retraction::Exponential),
        (make_sparse_pca(6, 9, 2, 0.0, 2).unwrap(), Retraction::Polar),
        (make_rayleigh(6, 2).unwrap(), Retraction::Exponential),
    ];
    for (p, r) in cases {
        let m = p.manifold().with_retraction(r).unwrap();
        let mut rng = setup_rng(5, Domain::Init);
        for _ in 0..5 {
            let x = m.random_point(&mut rng).unwrap();
            let chart = m.at(&x).unwrap();
            let mut eta = chart.sample(&mut rng);
            eta /= eta.norm();
            let h = 1e-4;
            let f0 = p.objective.value(&x);
            let fp = p.objective.value(&chart.retract(&(&eta * h)).unwrap());
            let fm = p.objective.value(&chart.retract(&(&eta * -h)).unwrap());
            let fd = (fp + fm - 2.0 * f0) / (h * h);
            let an = eta.dot(&p.objective.hessian_action(&x, &eta).unwrap());
            assert!((fd - an).abs() < 1e-4 * an.abs().max(1.0), "{:?}: {fd} vs {an}", p.spec.kind);
        }
    }
}

#[test]
fn rayleigh_optimum_is_top_eigenvector() {
    let p = make_rayleigh(10, 3).unwrap();
    let v = p.optimum.clone().unwrap();
    assert!(p.objective.gradient(&v).norm() < 1e-12);
    assert!((p.objective.value(&v) + 0.5).abs() < 1e-12);
}

#[test]
fn spec_round_trips_and_builds() {
    let spec = ProblemSpec { kind: ProblemKind::Kpca { n: 8, p: 2 }, seed: Some(3), noise_sd: None, mode: Some(OracleMode::Deterministic) };
    let p = spec.build(99).unwrap();
    assert_eq!(p.mode, OracleMode::Deterministic);
    assert_eq!(p.spec.seed, Some(3));
    let noisy = ProblemSpec { kind: ProblemKind::Rayleigh { n: 4 }, seed: None, noise_sd: Some(1e-3), mode: None }.build(5).unwrap();
    assert_eq!(noisy.mode, OracleMode::AdditiveNoise { noise_sd: 1e-3 });
    assert_eq!(noisy.spec.seed, Some(5));
}

#[test]
fn invalid_dimensions_are_rejected() {
    assert!(make_procrustes(3, 4, 2, 0).is_err());
    assert!(make_procrustes(3, 2, 0, 0).is_err());
    assert!(make_kpca(4, 4, 0).is_err());
    assert!(make_sparse_pca(2, 4, 2, -1.0, 0).is_err());
    assert!(make_karcher(0, 3, 0).is_err());
}

#[test]
fn constant_estimates_bound_the_rayleigh_quotient() {
    let p = make_rayleigh(6, 4).unwrap();
    let c = estimate_constants(p.objective.as_ref(), 1, 100).unwrap();
    // For ½xᵀAx with the exponential map, L_g = λmax − λmin = 5/6.
    assert!(c.l_g > 0.0 && c.l_g <= 1.5 * (5.0 / 6.0) + 1e-9);
    assert!(c.l_h > 0.0);
}

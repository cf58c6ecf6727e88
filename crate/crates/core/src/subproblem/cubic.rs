//! Cubic-regularized Newton subproblem
//! `min ⟨g, η⟩ + ½⟨η, Hη⟩ + (α/6)‖η‖³` over a tangent space.
//!
//! The operator is reduced to a tridiagonal matrix by Lanczos with full
//! reorthogonalization; the reduced problem is solved exactly through the
//! secular equation `λ = α‖y(λ)‖/2`, `y(λ) = −(T + λI)⁻¹ Qᵀg`.

#[allow(unused_imports)] // shadowed by inherent methods whenever std is linked
use num_traits::Float;
use alloc::vec::Vec;

use nalgebra::DVector;

use crate::error::{contract, Result};
use crate::estimators::TangentOperator;
use crate::linalg::{add_scaled, sym_eigen, Mat};
use crate::manifold::Chart;
use crate::rng::{mix, rng_from_key};

pub const TOL_CUBIC: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CubicOptions {
    /// Krylov dimension cap; the default is 50.
    pub krylov_dim: usize,
    pub tol_cubic: f64,
    /// Seeds restart vectors after a Lanczos breakdown.
    pub seed: u64,
}

impl Default for CubicOptions {
    fn default() -> Self {
        Self { krylov_dim: 50, tol_cubic: TOL_CUBIC, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CubicSolution {
    pub eta: Mat,
    pub lambda: f64,
    pub model_value: f64,
    pub krylov_dim: usize,
    /// `‖(T + λI)y + Qᵀg‖`.
    pub residual: f64,
    /// `λ_min(T) + λ`.
    pub shifted_min_eig: f64,
    /// `‖QᵀQ − I‖_F` of the Lanczos basis.
    pub orthogonality: f64,
    pub hard_case: bool,
    pub cauchy_fallback: bool,
}

/// `⟨g, η⟩ + ½⟨η, Hη⟩ + (α/6)‖η‖³` in the chart's metric.
pub fn cubic_model(chart: &Chart<'_>, g: &Mat, h: &dyn TangentOperator, alpha: f64, eta: &Mat) -> f64 {
    let n = chart.norm(eta);
    chart.inner(g, eta) + 0.5 * chart.inner(eta, &h.apply(eta)) + alpha / 6.0 * n * n * n
}

struct Lanczos {
    basis: Vec<Mat>,
    diag: Vec<f64>,
    off: Vec<f64>,
}

fn lanczos(chart: &Chart<'_>, g: &Mat, h: &dyn TangentOperator, q: usize, seed: u64) -> Lanczos {
    let scale = chart.norm(g).max(1.0);
    let mut restarts = 0u64;
    let fresh = |basis: &[Mat], restarts: u64| -> Option<Mat> {
        for attempt in 0..8u64 {
            let mut rng = rng_from_key(mix(&[seed, restarts, attempt]));
            let mut v = chart.sample(&mut rng);
            orthogonalize(chart, &mut v, basis);
            let n = chart.norm(&v);
            if n > 1e-8 {
                return Some(v / n);
            }
        }
        None
    };
    let mut basis: Vec<Mat> = Vec::with_capacity(q);
    let mut diag = Vec::with_capacity(q);
    let mut off = Vec::with_capacity(q);
    let gn = chart.norm(g);
    let first = if gn > 1e-14 * scale {
        Some(chart.project_unchecked(g) / gn)
    } else {
        restarts += 1;
        fresh(&basis, restarts)
    };
    let Some(mut current) = first else {
        return Lanczos { basis, diag, off };
    };
    loop {
        let mut w = h.apply(&current);
        let a = chart.inner(&current, &w);
        basis.push(current);
        diag.push(a);
        if basis.len() == q {
            break;
        }
        orthogonalize(chart, &mut w, &basis);
        let beta = chart.norm(&w);
        let next = if beta > 1e-10 * scale.max(a.abs()) {
            off.push(beta);
            Some(w / beta)
        } else {
            off.push(0.0);
            restarts += 1;
            fresh(&basis, restarts)
        };
        match next {
            Some(v) => current = v,
            None => {
                off.pop();
                break;
            }
        }
    }
    Lanczos { basis, diag, off }
}

/// Two passes of classical Gram–Schmidt against `basis`.
fn orthogonalize(chart: &Chart<'_>, v: &mut Mat, basis: &[Mat]) {
    for _ in 0..2 {
        for b in basis {
            let c = chart.inner(b, v);
            add_scaled(v, -c, b);
        }
    }
}

/// Exact minimizer of the reduced model `γᵀy + ½yᵀTy + (α/6)‖y‖³`
/// given `T = W diag(θ) Wᵀ`; returns `(y, λ, hard_case)`.
fn secular(theta: &DVector<f64>, w: &Mat, gamma: &DVector<f64>, alpha: f64) -> (DVector<f64>, f64, bool) {
    let n = theta.len();
    // Coefficients of γ in the eigenbasis.
    let c = w.transpose() * gamma;
    let theta_min = theta[0];
    let lo = (-theta_min).max(0.0);
    let scale = theta.amax().max(c.norm()).max(1e-300);
    let degenerate: Vec<bool> = (0..n).map(|i| theta[i] - theta_min <= 1e-10 * scale.max(1.0)).collect();
    let weight_min: f64 = (0..n).filter(|&i| degenerate[i]).map(|i| c[i] * c[i]).sum::<f64>().sqrt();

    let norm_y = |lam: f64, skip_min: bool| -> f64 {
        let mut s = 0.0;
        for i in 0..n {
            if skip_min && degenerate[i] {
                continue;
            }
            let den = theta[i] + lam;
            s += c[i] * c[i] / (den * den);
        }
        s.sqrt()
    };
    let y_of = |lam: f64, skip_min: bool| -> DVector<f64> {
        let mut coef = DVector::zeros(n);
        for i in 0..n {
            if skip_min && degenerate[i] {
                continue;
            }
            coef[i] = -c[i] / (theta[i] + lam);
        }
        w * coef
    };

    if c.norm() == 0.0 && theta_min >= -1e-12 * scale.max(1.0) {
        return (DVector::zeros(n), 0.0, false);
    }
    let hard_threshold = 1e-10 * c.norm().max(1e-300);
    let min_negligible = weight_min <= hard_threshold || c.norm() == 0.0;
    if min_negligible && theta_min < 0.0 {
        let rest = norm_y(lo, true);
        if rest <= 2.0 * lo / alpha {
            let mut y = y_of(lo, true);
            let tau = ((2.0 * lo / alpha).powi(2) - rest * rest).max(0.0).sqrt();
            let i_min = (0..n).find(|&i| degenerate[i]).unwrap_or(0);
            y += w.column(i_min) * tau;
            return (y, lo, true);
        }
    }
    let skip = min_negligible && theta_min < 0.0;
    // φ(λ) = ‖y(λ)‖ − 2λ/α is strictly decreasing on (lo, ∞).
    let phi = |lam: f64| norm_y(lam, skip) - 2.0 * lam / alpha;
    let mut a = lo;
    let mut b = lo + 1.0;
    while phi(b) > 0.0 {
        a = b;
        b = lo + 2.0 * (b - lo);
    }
    let mut lam = 0.5 * (a + b);
    for _ in 0..300 {
        let f = phi(lam);
        if f > 0.0 {
            a = lam;
        } else {
            b = lam;
        }
        if f.abs() <= 1e-13 * (1.0 + lam) || b - a <= 1e-15 * (1.0 + b) {
            break;
        }
        let ny = norm_y(lam, skip);
        let mut dn = 0.0;
        for i in 0..n {
            if skip && degenerate[i] {
                continue;
            }
            let den = theta[i] + lam;
            dn -= c[i] * c[i] / (den * den * den);
        }
        let dphi = if ny > 0.0 { dn / ny } else { 0.0 } - 2.0 / alpha;
        let newton = lam - f / dphi;
        lam = if newton > a && newton < b && newton.is_finite() { newton } else { 0.5 * (a + b) };
    }
    (y_of(lam, skip), lam, false)
}

/// Solves the cubic subproblem for operator `h` and gradient `g` on `chart`.
pub fn solve_cubic(
    chart: &Chart<'_>,
    g: &Mat,
    h: &dyn TangentOperator,
    alpha: f64,
    options: &CubicOptions,
) -> Result<CubicSolution> {
    if !(alpha > 0.0) || !alpha.is_finite() {
        return Err(contract("cubic weight alpha must be positive"));
    }
    if options.krylov_dim == 0 {
        return Err(contract("krylov_dim must be at least 1"));
    }
    chart.manifold().check_shape(g)?;
    let d = chart.manifold().intrinsic_dim();
    let q = options.krylov_dim.min(d);
    let (r, cdim) = chart.manifold().shape();
    if q == 0 {
        let zero = Mat::zeros(r, cdim);
        return Ok(CubicSolution {
            eta: zero,
            lambda: 0.0,
            model_value: 0.0,
            krylov_dim: 0,
            residual: 0.0,
            shifted_min_eig: 0.0,
            orthogonality: 0.0,
            hard_case: false,
            cauchy_fallback: false,
        });
    }
    let lz = lanczos(chart, g, h, q, options.seed);
    let k = lz.basis.len();
    let mut t = Mat::zeros(k, k);
    for i in 0..k {
        t[(i, i)] = lz.diag[i];
        if i + 1 < k {
            t[(i, i + 1)] = lz.off[i];
            t[(i + 1, i)] = lz.off[i];
        }
    }
    let gamma = DVector::from_iterator(k, lz.basis.iter().map(|b| chart.inner(b, g)));
    let mut orth = 0.0;
    for i in 0..k {
        for j in 0..k {
            let want = if i == j { 1.0 } else { 0.0 };
            let e = chart.inner(&lz.basis[i], &lz.basis[j]) - want;
            orth += e * e;
        }
    }
    let orthogonality = orth.sqrt();
    let (theta, w) = sym_eigen(&t);
    let (y, lambda_raw, hard_case) = secular(&theta, &w, &gamma, alpha);

    let mut eta = Mat::zeros(r, cdim);
    for (i, b) in lz.basis.iter().enumerate() {
        add_scaled(&mut eta, y[i], b);
    }
    let eta = chart.project_unchecked(&eta);
    let lambda = alpha * chart.norm(&eta) / 2.0;
    let residual = (&t * &y + &y * lambda + &gamma).norm();
    let shifted_min_eig = theta[0] + lambda;
    let gnorm = chart.norm(g);
    let certified = residual <= options.tol_cubic * gnorm.max(1.0)
        && shifted_min_eig >= -options.tol_cubic
        && (lambda - lambda_raw).abs() <= 1e-8 * lambda.max(1.0);
    if certified {
        let model_value = cubic_model(chart, g, h, alpha, &eta);
        return Ok(CubicSolution {
            eta,
            lambda,
            model_value,
            krylov_dim: k,
            residual,
            shifted_min_eig,
            orthogonality,
            hard_case,
            cauchy_fallback: false,
        });
    }
    // Cauchy point: minimize the model along −g.
    let eta = if gnorm > 0.0 {
        let hg = h.apply(g);
        let ghg = chart.inner(g, &hg);
        let s = (-ghg + (ghg * ghg + 2.0 * alpha * gnorm.powi(5)).sqrt()) / (alpha * gnorm.powi(3));
        g * -s
    } else {
        Mat::zeros(r, cdim)
    };
    let lambda = alpha * chart.norm(&eta) / 2.0;
    let model_value = cubic_model(chart, g, h, alpha, &eta);
    Ok(CubicSolution {
        eta,
        lambda,
        model_value,
        krylov_dim: k,
        residual,
        shifted_min_eig,
        orthogonality,
        hard_case,
        cauchy_fallback: true,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::manifold::Manifold;

    fn flat(d: usize) -> (Manifold, Mat) {
        (Manifold::euclidean(d, 1), Mat::zeros(d, 1))
    }

    fn col(v: &[f64]) -> Mat {
        Mat::from_column_slice(v.len(), 1, v)
    }

    #[test]
    fn zero_gradient_psd_gives_zero() {
        let (m, x) = flat(4);
        let chart = m.at(&x).unwrap();
        let h = Mat::from_diagonal(&DVector::from_vec(alloc::vec![1.0, 2.0, 0.0, 3.0]));
        let op = |v: &Mat| &h * v;
        let sol = solve_cubic(&chart, &Mat::zeros(4, 1), &op, 1.0, &CubicOptions::default()).unwrap();
        assert_eq!(sol.eta.norm(), 0.0);
        assert_eq!(sol.lambda, 0.0);
    }

    #[test]
    fn one_dimensional_closed_form() {
        let (m, x) = flat(1);
        let chart = m.at(&x).unwrap();
        let op = |v: &Mat| v * 2.0;
        let sol = solve_cubic(&chart, &col(&[1.0]), &op, 6.0, &CubicOptions::default()).unwrap();
        assert!((sol.eta[(0, 0)] + 1.0 / 3.0).abs() < 1e-12);
        assert!((sol.lambda - 1.0).abs() < 1e-12);
        // (2 + 3|η|)η = −1 by substitution.
        let e = sol.eta[(0, 0)];
        assert!(((2.0 + 3.0 * e.abs()) * e + 1.0).abs() < 1e-12);
    }

    #[test]
    fn zero_gradient_negative_curvature_moves() {
        let (m, x) = flat(3);
        let chart = m.at(&x).unwrap();
        let h = Mat::from_diagonal(&DVector::from_vec(alloc::vec![1.0, -2.0, 0.5]));
        let op = |v: &Mat| &h * v;
        let sol = solve_cubic(&chart, &Mat::zeros(3, 1), &op, 2.0, &CubicOptions::default()).unwrap();
        assert!(sol.hard_case && !sol.cauchy_fallback);
        // λ = 2, ‖η‖ = 2λ/α = 2 along e₂.
        assert!((sol.lambda - 2.0).abs() < 1e-10);
        assert!((sol.eta[(1, 0)].abs() - 2.0).abs() < 1e-10);
        assert!(sol.model_value < 0.0);
    }

    #[test]
    fn rejects_bad_alpha() {
        let (m, x) = flat(2);
        let chart = m.at(&x).unwrap();
        let op = |v: &Mat| v.clone();
        assert!(solve_cubic(&chart, &col(&[1.0, 0.0]), &op, 0.0, &CubicOptions::default()).is_err());
    }
}

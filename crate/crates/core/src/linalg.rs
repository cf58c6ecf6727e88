//! Dense helpers shared by the manifolds and solvers.
//!
//! Everything works on `DMatrix<f64>`; vectors are `n x 1` matrices so that
//! the Frobenius inner product is the only inner product needed.

#[allow(unused_imports)] // shadowed by inherent methods whenever std is linked
use num_traits::Float;
use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

pub type Mat = DMatrix<f64>;

/// Eigenvalue floor used by the SPD matrix functions.
pub const EIG_FLOOR: f64 = 1e-12;

#[inline]
pub fn inner(a: &Mat, b: &Mat) -> f64 {
    a.dot(b)
}

#[inline]
pub fn norm(a: &Mat) -> f64 {
    a.norm()
}

/// `acc += alpha * x` without a temporary.
#[inline]
pub fn add_scaled(acc: &mut Mat, alpha: f64, x: &Mat) {
    acc.zip_apply(x, |a, b| *a += alpha * b);
}

pub fn sym(a: &Mat) -> Mat {
    (a + a.transpose()) * 0.5
}

pub fn skew(a: &Mat) -> Mat {
    (a - a.transpose()) * 0.5
}

/// Symmetric eigendecomposition with eigenvalues sorted ascending.
pub fn sym_eigen(a: &Mat) -> (DVector<f64>, Mat) {
    let eig = SymmetricEigen::new(sym(a));
    let n = eig.eigenvalues.len();
    let mut order: alloc::vec::Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let vals = DVector::from_iterator(n, order.iter().map(|&i| eig.eigenvalues[i]));
    let mut vecs = Mat::zeros(n, n);
    for (k, &i) in order.iter().enumerate() {
        vecs.set_column(k, &eig.eigenvectors.column(i));
    }
    (vals, vecs)
}

/// `V diag(f(λ)) Vᵀ` for a symmetric matrix.
pub fn sym_apply(a: &Mat, f: impl Fn(f64) -> f64) -> Mat {
    let (vals, vecs) = sym_eigen(a);
    let mut scaled = vecs.clone();
    for (j, &v) in vals.iter().enumerate() {
        let fv = f(v);
        scaled.column_mut(j).scale_mut(fv);
    }
    scaled * vecs.transpose()
}

fn spd_apply(a: &Mat, f: impl Fn(f64) -> f64) -> Result<Mat> {
    let (vals, vecs) = sym_eigen(a);
    if !(vals[0] > 0.0) {
        return Err(Error::Infeasible { residual: -vals[0], tol: 0.0 });
    }
    let mut scaled = vecs.clone();
    for (j, &v) in vals.iter().enumerate() {
        scaled.column_mut(j).scale_mut(f(v.max(EIG_FLOOR)));
    }
    Ok(scaled * vecs.transpose())
}

pub fn sqrtm_spd(a: &Mat) -> Result<Mat> {
    spd_apply(a, Float::sqrt)
}

pub fn inv_sqrtm_spd(a: &Mat) -> Result<Mat> {
    spd_apply(a, |v| 1.0 / v.sqrt())
}

pub fn logm_spd(a: &Mat) -> Result<Mat> {
    spd_apply(a, Float::ln)
}

pub fn expm_sym(a: &Mat) -> Mat {
    sym_apply(a, Float::exp)
}

/// Q factor of a full-column-rank matrix with a positive R diagonal.
///
/// Uses Cholesky of the Gram matrix; falls back to Householder QR when the
/// Gram matrix is too ill conditioned for Cholesky.
pub fn qf_positive(y: &Mat) -> Result<Mat> {
    let gram = y.tr_mul(y);
    if let Some(chol) = nalgebra::Cholesky::new(gram) {
        let l = chol.l();
        // Y = Q Lᵀ  =>  Qᵀ = L⁻¹ Yᵀ
        if let Some(qt) = l.solve_lower_triangular(&y.transpose()) {
            let q = qt.transpose();
            if q.iter().all(|v| v.is_finite()) {
                return Ok(q);
            }
        }
    }
    householder_qf(y)
}

fn householder_qf(y: &Mat) -> Result<Mat> {
    let qr = y.clone().qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..q.ncols() {
        let d = r[(j, j)];
        if d == 0.0 || !d.is_finite() {
            return Err(Error::Numerical("rank-deficient QR input".into()));
        }
        if d < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    Ok(q)
}

/// Orthogonal polar factor `Y (YᵀY)^{-1/2}`.
pub fn polar_factor(y: &Mat) -> Result<Mat> {
    let gram = y.tr_mul(y);
    let inv_sqrt = inv_sqrtm_spd(&gram)?;
    Ok(y * inv_sqrt)
}

/// Largest-magnitude eigenvalue of a self-adjoint operator by power iteration.
///
/// `apply` maps a vector of the working space to itself, `inner` is the
/// working inner product. Returns `|λ|max`.
pub fn power_iteration(
    start: Mat,
    apply: impl Fn(&Mat) -> Mat,
    inner: impl Fn(&Mat, &Mat) -> f64,
    max_iter: usize,
    rel_tol: f64,
) -> f64 {
    let nrm = |v: &Mat| inner(v, v).max(0.0).sqrt();
    let s = nrm(&start);
    if s == 0.0 {
        return 0.0;
    }
    let mut v = start / s;
    let mut estimate = 0.0;
    for _ in 0..max_iter {
        let w = apply(&v);
        let wn = nrm(&w);
        if wn == 0.0 {
            return 0.0;
        }
        let converged = (wn - estimate).abs() <= rel_tol * wn;
        estimate = wn;
        v = w / wn;
        if converged {
            break;
        }
    }
    estimate
}

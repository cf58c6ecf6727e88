
#[allow(unused_imports)] // shadowed by inherent methods whenever std is linked
use num_traits::Float;
use crate::error::Result;
use crate::linalg::{qf_positive, sym, Mat};

/// `(I − XXᵀ)v + X skew(Xᵀv)`, written as `v − X sym(Xᵀv)`.
pub(super) fn project(x: &Mat, v: &Mat) -> Mat {
    let xtv = x.tr_mul(v);
    v - x * sym(&xtv)
}

/// Horizontal projection `(I − XXᵀ)v` for Grassmann representatives.
pub(super) fn project_horizontal(x: &Mat, v: &Mat) -> Mat {
    let xtv = x.tr_mul(v);
    v - x * xtv
}

pub(super) fn feasibility(x: &Mat) -> f64 {
    let p = x.ncols();
    (x.tr_mul(x) - Mat::identity(p, p)).norm()
}

pub(super) fn qr_retract(x: &Mat, eta: &Mat) -> Result<Mat> {
    qf_positive(&(x + eta))
}

/// Grassmann geodesic through the compact SVD of the horizontal vector.
pub(super) fn grassmann_exp(x: &Mat, eta: &Mat) -> Result<Mat> {
    let svd = eta.clone().svd(true, true);
    let u = svd.u.expect("requested U");
    let vt = svd.v_t.expect("requested Vᵀ");
    let k = svd.singular_values.len();
    let mut cos_part = vt.transpose();
    let mut sin_part = u;
    for j in 0..k {
        let s = svd.singular_values[j];
        cos_part.column_mut(j).scale_mut(s.cos());
        sin_part.column_mut(j).scale_mut(s.sin());
    }
    let y = x * cos_part * &vt + sin_part * &vt;
    // Re-orthonormalize away the rounding drift of the trigonometric formula.
    qf_positive(&y)
}

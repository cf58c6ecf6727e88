
#[allow(unused_imports)] // shadowed by inherent methods whenever std is linked
use num_traits::Float;
use crate::error::{Error, Result};
use crate::linalg::{inner, Mat};

pub(super) fn project(x: &Mat, v: &Mat, radius: f64) -> Mat {
    let c = inner(x, v) / (radius * radius);
    v - x * c
}

pub(super) fn exp(x: &Mat, eta: &Mat, radius: f64) -> Mat {
    let len = eta.norm();
    if len == 0.0 {
        return x.clone();
    }
    let theta = len / radius;
    x * theta.cos() + eta * (radius * theta.sin() / len)
}

/// Metric projection `R (x + η)/‖x + η‖`.
pub(super) fn normalize_retract(x: &Mat, eta: &Mat, radius: f64) -> Result<Mat> {
    let y = x + eta;
    let n = y.norm();
    if n == 0.0 {
        return Err(Error::Numerical("sphere retraction through the origin".into()));
    }
    Ok(y * (radius / n))
}

pub(super) fn log(x: &Mat, y: &Mat, radius: f64) -> Result<Mat> {
    let r2 = radius * radius;
    let cos_t = inner(x, y) / r2;
    if cos_t <= -1.0 + 1e-12 {
        return Err(Error::Singular("antipodal points on the sphere".into()));
    }
    let w = y - x * cos_t;
    let wn = w.norm();
    if wn == 0.0 {
        return Ok(Mat::zeros(x.nrows(), x.ncols()));
    }
    let theta = Float::atan2(wn / radius, cos_t);
    Ok(w * (radius * theta / wn))
}

/// Transport of `xi` along the geodesic `t ↦ Exp_x(tη)` to `t = 1`.
pub(super) fn transport(x: &Mat, eta: &Mat, xi: &Mat, radius: f64) -> Mat {
    let len = eta.norm();
    if len == 0.0 {
        return xi.clone();
    }
    let e = eta / len;
    let t = len / radius;
    let a = inner(&e, xi);
    xi + &e * (a * (t.cos() - 1.0)) - x * (a * t.sin() / radius)
}

use crate::error::Result;
use crate::linalg::{expm_sym, logm_spd, sym, Mat};

/// Square root, inverse square root and inverse of an SPD base point.
#[derive(Debug, Clone)]
pub(super) struct SpdFactors {
    pub sqrt: Mat,
    pub inv_sqrt: Mat,
    pub inv: Mat,
}

impl SpdFactors {
    pub fn new(x: &Mat) -> Result<Self> {
        let sqrt = crate::linalg::sqrtm_spd(x)?;
        let inv_sqrt = crate::linalg::inv_sqrtm_spd(x)?;
        let inv = &inv_sqrt * &inv_sqrt;
        Ok(Self { sqrt, inv_sqrt, inv })
    }

    /// `X^{-1/2} a X^{-1/2}`, the whitened representative of a tangent vector.
    pub fn whiten(&self, a: &Mat) -> Mat {
        sym(&(&self.inv_sqrt * a * &self.inv_sqrt))
    }

    pub fn color(&self, a: &Mat) -> Mat {
        sym(&(&self.sqrt * a * &self.sqrt))
    }
}

/// `X + η + ½ η X⁻¹ η`, symmetrized.
pub(super) fn second_order_retract(x: &Mat, eta: &Mat, f: &SpdFactors) -> Mat {
    sym(&(x + eta + (eta * &f.inv * eta) * 0.5))
}

/// Affine-invariant exponential `X^{1/2} expm(X^{-1/2} η X^{-1/2}) X^{1/2}`.
pub(super) fn exp(eta: &Mat, f: &SpdFactors) -> Mat {
    f.color(&expm_sym(&f.whiten(eta)))
}

pub(super) fn log(y: &Mat, f: &SpdFactors) -> Result<Mat> {
    Ok(f.color(&logm_spd(&f.whiten(y))?))
}

/// Transport to `Exp_X(η)`: `E ξ Eᵀ` with `E = X^{1/2} expm(½ X^{-1/2}ηX^{-1/2}) X^{-1/2}`.
pub(super) fn transport(eta: &Mat, xi: &Mat, f: &SpdFactors) -> Mat {
    let half = expm_sym(&(f.whiten(eta) * 0.5));
    let e = &f.sqrt * half * &f.inv_sqrt;
    sym(&(&e * xi * e.transpose()))
}

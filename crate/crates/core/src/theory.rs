//! Problem constants and the closed-form error bounds of the estimators.

#[allow(unused_imports)] // shadowed by inherent methods whenever std is linked
use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::error::{contract, Result};

/// Smoothness, noise and geometry constants a run may rely on.
///
/// `zeta` is not stored; it is always derived from `curvature_lb` and
/// `diameter` by [`TheoryConstants::zeta`].
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct TheoryConstants {
    pub l_g: f64,
    pub l_h: f64,
    pub sigma: f64,
    pub grad_bound: f64,
    pub curvature_lb: f64,
    pub diameter: f64,
}

impl TheoryConstants {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("l_g", self.l_g),
            ("l_h", self.l_h),
            ("sigma", self.sigma),
            ("grad_bound", self.grad_bound),
            ("diameter", self.diameter),
        ];
        for (name, v) in fields {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(contract(alloc::format!("theory constant {name} must be finite and nonnegative")));
            }
        }
        if !self.curvature_lb.is_finite() {
            return Err(contract("curvature lower bound must be finite"));
        }
        Ok(())
    }

    pub fn zeta(&self) -> f64 {
        curvature_factor(self.curvature_lb, self.diameter)
    }
}

/// `ζ(ϱ, D) = D√|ϱ| / tanh(D√|ϱ|)`, with the limit 1 at zero curvature.
pub fn curvature_factor(curvature_lb: f64, diameter: f64) -> f64 {
    let s = diameter * curvature_lb.abs().sqrt();
    if s < 1e-8 {
        // s/tanh(s) = 1 + s²/3 + O(s⁴)
        return 1.0 + s * s / 3.0;
    }
    s / s.tanh()
}

fn df(d: usize) -> f64 {
    d as f64
}

/// Bias of the single-sample gradient estimator: `μ L_g (d+3)^{3/2} / 2`.
pub fn gradient_bias_bound(mu: f64, l_g: f64, d: usize) -> f64 {
    mu * l_g * (df(d) + 3.0).powf(1.5) / 2.0
}

/// `E‖g_μ‖² ≤ μ² L_g² (d+6)³ / 2 + 2 (d+4) ‖grad f‖²`.
pub fn gradient_second_moment_bound(mu: f64, l_g: f64, d: usize, grad_norm: f64) -> f64 {
    let d = df(d);
    mu * mu * l_g * l_g * (d + 6.0).powi(3) / 2.0 + 2.0 * (d + 4.0) * grad_norm * grad_norm
}

/// `E‖ḡ − grad f‖² ≤ μ² L_g² (d+6)³ + 8 (d+4)(σ² + ‖grad f‖²) / m` for the
/// stochastic averaged estimator.
pub fn averaged_deviation_bound(mu: f64, l_g: f64, d: usize, sigma: f64, grad_norm: f64, m: usize) -> f64 {
    let d = df(d);
    mu * mu * l_g * l_g * (d + 6.0).powi(3) + 8.0 * (d + 4.0) * (sigma * sigma + grad_norm * grad_norm) / m as f64
}

/// `E‖H̄ − Hess f‖²_op ≤ (d+16)⁴ L_g / (√2 b) + μ² L_H² (d+6)⁵ / 18`.
pub fn hessian_deviation_bound(mu: f64, l_g: f64, l_h: f64, d: usize, b: usize) -> f64 {
    let d = df(d);
    (d + 16.0).powi(4) * l_g / (core::f64::consts::SQRT_2 * b as f64) + mu * mu * l_h * l_h * (d + 6.0).powi(5) / 18.0
}

/// The per-iteration floor `C(μ)` in the zeroth-order gradient descent rate.
pub fn rgd_floor(mu: f64, l_g: f64, d: usize) -> f64 {
    let d = df(d);
    let m2 = mu * mu / 16.0;
    m2 * l_g * (d + 3.0).powi(3) / (d + 4.0) + m2 * (d + 6.0).powi(3) / (d + 4.0) + m2 * l_g * (d + 6.0).powi(3) / ((d + 4.0) * (d + 4.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zeta_at_zero_curvature_is_one() {
        assert_eq!(curvature_factor(0.0, 3.0), 1.0);
        assert!(curvature_factor(-0.5, 0.0) >= 1.0);
    }

    #[test]
    fn zeta_matches_closed_form() {
        let c = TheoryConstants { curvature_lb: -0.25, diameter: 4.0, ..Default::default() };
        let s: f64 = 2.0;
        assert!((c.zeta() - s / s.tanh()).abs() < 1e-15);
        assert!(c.zeta() >= 1.0);
        // Continuity across the series cut-over.
        let a = curvature_factor(-1.0, 0.99e-8);
        let b = curvature_factor(-1.0, 1.01e-8);
        assert!((a - b).abs() < 1e-15);
    }

    #[test]
    fn validation_rejects_negative_constants() {
        let c = TheoryConstants { l_g: -1.0, ..Default::default() };
        assert!(c.validate().is_err());
        assert!(TheoryConstants { sigma: f64::NAN, ..Default::default() }.validate().is_err());
        assert!(TheoryConstants::default().validate().is_ok());
    }

    #[test]
    fn bound_values() {
        // d = 1: (d+3)^{3/2} = 8.
        assert!((gradient_bias_bound(0.1, 2.0, 1) - 0.8).abs() < 1e-15);
        // d = 2: 0.5·(8)³·1/2 ... μ=1, L=1 → 256 + 2·6·4 = 304.
        assert!((gradient_second_moment_bound(1.0, 1.0, 2, 2.0) - 304.0).abs() < 1e-12);
        assert!((averaged_deviation_bound(0.0, 1.0, 4, 1.0, 1.0, 16) - 8.0).abs() < 1e-12);
        let h = hessian_deviation_bound(0.0, 1.0, 0.0, 4, 1);
        assert!((h - 160000.0 / core::f64::consts::SQRT_2).abs() < 1e-9);
    }
}

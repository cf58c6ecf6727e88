//! Embedded matrix manifolds.
//!
//! Points and tangent vectors are stored in ambient coordinates as dense
//! matrices (`n x 1` for the sphere). A [`Manifold`] is a descriptor: the kind
//! with its dimensions plus the retraction a solver run uses. Per-point work
//! (feasibility check, SPD square roots) is done once by [`Manifold::at`],
//! which returns a [`Chart`] carrying the cached factors.

mod sphere;
mod spd;
mod stiefel;

#[allow(unused_imports)] // shadowed by inherent methods whenever std is linked
use num_traits::Float;
use alloc::vec::Vec;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{contract, Error, Result};
use crate::linalg::{self, inner, sym, Mat};
use spd::SpdFactors;

/// Feasibility tolerance shared by every manifold check.
pub const TOL_FEAS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpdMetric {
    Euclidean,
    AffineInvariant,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Retraction {
    Exponential,
    Qr,
    Polar,
    SecondOrderSpd,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ManifoldKind {
    /// Flat `rows x cols` space; the identity chart, used for sanity checks.
    Euclidean { rows: usize, cols: usize },
    Sphere { n: usize, radius: f64 },
    Stiefel { n: usize, p: usize },
    Grassmann { n: usize, p: usize },
    Spd { dim: usize, metric: SpdMetric },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Manifold {
    pub kind: ManifoldKind,
    pub retraction: Retraction,
}

impl Manifold {
    pub fn euclidean(rows: usize, cols: usize) -> Self {
        Self { kind: ManifoldKind::Euclidean { rows, cols }, retraction: Retraction::Exponential }
    }

    pub fn sphere(n: usize) -> Self {
        Self::sphere_with_radius(n, 1.0)
    }

    pub fn sphere_with_radius(n: usize, radius: f64) -> Self {
        Self { kind: ManifoldKind::Sphere { n, radius }, retraction: Retraction::Exponential }
    }

    pub fn stiefel(n: usize, p: usize) -> Self {
        Self { kind: ManifoldKind::Stiefel { n, p }, retraction: Retraction::Qr }
    }

    pub fn grassmann(n: usize, p: usize) -> Self {
        Self { kind: ManifoldKind::Grassmann { n, p }, retraction: Retraction::Qr }
    }

    /// SPD matrices; the Euclidean metric defaults to the second-order
    /// retraction, the affine-invariant metric to the exponential map.
    pub fn spd(dim: usize, metric: SpdMetric) -> Self {
        let retraction = match metric {
            SpdMetric::Euclidean => Retraction::SecondOrderSpd,
            SpdMetric::AffineInvariant => Retraction::Exponential,
        };
        Self { kind: ManifoldKind::Spd { dim, metric }, retraction }
    }

    pub fn with_retraction(mut self, retraction: Retraction) -> Result<Self> {
        use Retraction::*;
        let ok = match self.kind {
            ManifoldKind::Euclidean { .. } => retraction == Exponential,
            ManifoldKind::Sphere { .. } => matches!(retraction, Exponential | Polar),
            ManifoldKind::Stiefel { .. } => matches!(retraction, Qr | Polar),
            ManifoldKind::Grassmann { .. } => matches!(retraction, Qr | Exponential),
            ManifoldKind::Spd { .. } => matches!(retraction, SecondOrderSpd | Exponential),
        };
        if !ok {
            return Err(Error::Unsupported { manifold: self.name(), what: "requested retraction" });
        }
        self.retraction = retraction;
        Ok(self)
    }

    pub fn name(&self) -> &'static str {
        match self.kind {
            ManifoldKind::Euclidean { .. } => "euclidean",
            ManifoldKind::Sphere { .. } => "sphere",
            ManifoldKind::Stiefel { .. } => "stiefel",
            ManifoldKind::Grassmann { .. } => "grassmann",
            ManifoldKind::Spd { .. } => "spd",
        }
    }

    /// Ambient shape of points and tangent vectors.
    pub fn shape(&self) -> (usize, usize) {
        match self.kind {
            ManifoldKind::Euclidean { rows, cols } => (rows, cols),
            ManifoldKind::Sphere { n, .. } => (n, 1),
            ManifoldKind::Stiefel { n, p } | ManifoldKind::Grassmann { n, p } => (n, p),
            ManifoldKind::Spd { dim, .. } => (dim, dim),
        }
    }

    pub fn intrinsic_dim(&self) -> usize {
        match self.kind {
            ManifoldKind::Euclidean { rows, cols } => rows * cols,
            ManifoldKind::Sphere { n, .. } => n - 1,
            ManifoldKind::Stiefel { n, p } => n * p - p * (p + 1) / 2,
            ManifoldKind::Grassmann { n, p } => p * (n - p),
            ManifoldKind::Spd { dim, .. } => dim * (dim + 1) / 2,
        }
    }

    /// True when the inner product on every tangent space is the Frobenius one.
    pub fn has_induced_metric(&self) -> bool {
        !matches!(self.kind, ManifoldKind::Spd { metric: SpdMetric::AffineInvariant, .. })
    }

    pub fn check_shape(&self, m: &Mat) -> Result<()> {
        let (r, c) = self.shape();
        if m.nrows() != r || m.ncols() != c {
            return Err(contract(alloc::format!(
                "expected a {}x{} matrix on {}, got {}x{}",
                r,
                c,
                self.name(),
                m.nrows(),
                m.ncols()
            )));
        }
        Ok(())
    }

    /// Distance of `x` from the manifold's defining equations.
    pub fn feasibility_residual(&self, x: &Mat) -> f64 {
        match self.kind {
            ManifoldKind::Euclidean { .. } => 0.0,
            ManifoldKind::Sphere { radius, .. } => (x.norm() - radius).abs(),
            ManifoldKind::Stiefel { .. } | ManifoldKind::Grassmann { .. } => stiefel::feasibility(x),
            ManifoldKind::Spd { .. } => {
                let asym = (x - x.transpose()).norm();
                let (vals, _) = linalg::sym_eigen(x);
                if vals[0] > 0.0 {
                    asym
                } else {
                    f64::INFINITY
                }
            }
        }
    }

    pub fn check_point(&self, x: &Mat) -> Result<()> {
        self.check_shape(x)?;
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numerical("non-finite point coordinates".into()));
        }
        let residual = self.feasibility_residual(x);
        if residual > TOL_FEAS {
            return Err(Error::Infeasible { residual, tol: TOL_FEAS });
        }
        Ok(())
    }

    /// Validates `x` and caches the per-point factors.
    pub fn at<'a>(&'a self, x: &'a Mat) -> Result<Chart<'a>> {
        self.check_point(x)?;
        let spd = match self.kind {
            ManifoldKind::Spd { .. } => Some(SpdFactors::new(x)?),
            _ => None,
        };
        Ok(Chart { manifold: self, x, spd })
    }

    pub fn project_tangent(&self, x: &Mat, v: &Mat) -> Result<Mat> {
        self.at(x)?.project(v)
    }

    pub fn retract(&self, x: &Mat, eta: &Mat) -> Result<Mat> {
        self.at(x)?.retract(eta)
    }

    pub fn inner(&self, x: &Mat, a: &Mat, b: &Mat) -> Result<f64> {
        Ok(self.at(x)?.inner(a, b))
    }

    pub fn log(&self, x: &Mat, y: &Mat) -> Result<Mat> {
        self.check_point(y)?;
        self.at(x)?.log(y)
    }

    pub fn exp(&self, x: &Mat, eta: &Mat) -> Result<Mat> {
        self.at(x)?.exp(eta)
    }

    pub fn distance(&self, x: &Mat, y: &Mat) -> Result<f64> {
        self.check_point(y)?;
        let here = self.at(x)?;
        let eta = here.log(y)?;
        Ok(here.norm(&eta))
    }

    /// Projection onto the closed geodesic ball of radius `radius` around `center`.
    pub fn project_geodesic_ball(&self, x: &Mat, center: &Mat, radius: f64) -> Result<Mat> {
        if !(radius >= 0.0) {
            return Err(contract("ball radius must be nonnegative"));
        }
        self.check_point(x)?;
        let c = self.at(center)?;
        let eta = c.log(x)?;
        let dist = c.norm(&eta);
        if dist <= radius {
            return Ok(x.clone());
        }
        c.exp(&(eta * (radius / dist)))
    }

    /// Parallel transport of `xi` from `x` to `Exp_x(eta)` (sphere and
    /// affine-invariant SPD only).
    pub fn parallel_transport(&self, x: &Mat, eta: &Mat, xi: &Mat) -> Result<Mat> {
        let here = self.at(x)?;
        match (self.kind, &here.spd) {
            (ManifoldKind::Sphere { radius, .. }, _) => Ok(sphere::transport(x, eta, xi, radius)),
            (ManifoldKind::Spd { metric: SpdMetric::AffineInvariant, .. }, Some(f)) => {
                Ok(spd::transport(eta, xi, f))
            }
            _ => Err(Error::Unsupported { manifold: self.name(), what: "parallel transport" }),
        }
    }

    /// A random feasible point.
    pub fn random_point<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Mat> {
        let (r, c) = self.shape();
        let g = gaussian(r, c, rng);
        match self.kind {
            ManifoldKind::Euclidean { .. } => Ok(g),
            ManifoldKind::Sphere { radius, .. } => Ok(&g * (radius / g.norm())),
            ManifoldKind::Stiefel { .. } | ManifoldKind::Grassmann { .. } => linalg::qf_positive(&g),
            ManifoldKind::Spd { .. } => Ok(linalg::expm_sym(&(sym(&g) * 0.5))),
        }
    }
}

/// Standard normal `rows x cols` matrix.
pub fn gaussian<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> Mat {
    Mat::from_fn(rows, cols, |_, _| rng.sample::<f64, _>(StandardNormal))
}

/// A manifold bound to one validated base point.
#[derive(Debug, Clone)]
pub struct Chart<'a> {
    manifold: &'a Manifold,
    x: &'a Mat,
    spd: Option<SpdFactors>,
}

impl<'a> Chart<'a> {
    pub fn manifold(&self) -> &Manifold {
        self.manifold
    }

    pub fn point(&self) -> &Mat {
        self.x
    }

    pub fn project(&self, v: &Mat) -> Result<Mat> {
        self.manifold.check_shape(v)?;
        Ok(self.project_unchecked(v))
    }

    pub(crate) fn project_unchecked(&self, v: &Mat) -> Mat {
        match self.manifold.kind {
            ManifoldKind::Euclidean { .. } => v.clone(),
            ManifoldKind::Sphere { radius, .. } => sphere::project(self.x, v, radius),
            ManifoldKind::Stiefel { .. } => stiefel::project(self.x, v),
            ManifoldKind::Grassmann { .. } => stiefel::project_horizontal(self.x, v),
            ManifoldKind::Spd { .. } => sym(v),
        }
    }

    /// Riemannian inner product at the base point.
    pub fn inner(&self, a: &Mat, b: &Mat) -> f64 {
        match (&self.manifold.kind, &self.spd) {
            (ManifoldKind::Spd { metric: SpdMetric::AffineInvariant, .. }, Some(f)) => {
                // tr(X⁻¹ a X⁻¹ b)
                inner(&f.whiten(a), &f.whiten(b))
            }
            _ => inner(a, b),
        }
    }

    pub fn norm(&self, a: &Mat) -> f64 {
        self.inner(a, a).max(0.0).sqrt()
    }

    /// Draws `u ~ N(0, P)` on the tangent space.
    ///
    /// For the induced metric this is the projection of an ambient standard
    /// normal; for the affine-invariant SPD metric the coefficients are drawn
    /// in the metric-orthonormal basis `{X^{1/2} E_ij X^{1/2}}`.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Mat {
        let (r, c) = self.manifold.shape();
        let u0 = gaussian(r, c, rng);
        match (&self.manifold.kind, &self.spd) {
            (ManifoldKind::Spd { metric: SpdMetric::AffineInvariant, .. }, Some(f)) => f.color(&sym(&u0)),
            _ => self.project_unchecked(&u0),
        }
    }

    pub fn retract(&self, eta: &Mat) -> Result<Mat> {
        self.manifold.check_shape(eta)?;
        // R_x(0) = x exactly, without factorization round-off.
        if eta.iter().all(|&v| v == 0.0) {
            return Ok(self.x.clone());
        }
        let y = self.retract_unchecked(eta)?;
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numerical("retraction overflowed".into()));
        }
        // Huge SPD steps can round to an indefinite matrix without overflowing.
        if matches!(self.manifold.kind, ManifoldKind::Spd { .. }) && nalgebra::Cholesky::new(y.clone()).is_none() {
            return Err(Error::Numerical("retraction lost positive definiteness".into()));
        }
        debug_assert!(
            self.manifold.feasibility_residual(&y) <= TOL_FEAS,
            "retraction left the manifold: residual {}",
            self.manifold.feasibility_residual(&y)
        );
        Ok(y)
    }

    fn retract_unchecked(&self, eta: &Mat) -> Result<Mat> {
        let x = self.x;
        match (self.manifold.kind, self.manifold.retraction) {
            (ManifoldKind::Euclidean { .. }, _) => Ok(x + eta),
            (ManifoldKind::Sphere { radius, .. }, Retraction::Exponential) => Ok(sphere::exp(x, eta, radius)),
            (ManifoldKind::Sphere { radius, .. }, _) => sphere::normalize_retract(x, eta, radius),
            (ManifoldKind::Stiefel { .. }, Retraction::Polar) => linalg::polar_factor(&(x + eta)),
            (ManifoldKind::Stiefel { .. } | ManifoldKind::Grassmann { .. }, Retraction::Qr) => {
                stiefel::qr_retract(x, eta)
            }
            (ManifoldKind::Grassmann { .. }, _) => stiefel::grassmann_exp(x, eta),
            (ManifoldKind::Spd { .. }, Retraction::Exponential) => {
                Ok(spd::exp(eta, self.spd.as_ref().expect("spd factors")))
            }
            (ManifoldKind::Spd { .. }, _) => {
                Ok(spd::second_order_retract(x, eta, self.spd.as_ref().expect("spd factors")))
            }
            (ManifoldKind::Stiefel { .. }, _) => {
                Err(Error::Unsupported { manifold: "stiefel", what: "retraction" })
            }
        }
    }

    /// Exponential map, regardless of the configured retraction.
    pub fn exp(&self, eta: &Mat) -> Result<Mat> {
        self.manifold.check_shape(eta)?;
        match (self.manifold.kind, &self.spd) {
            (ManifoldKind::Euclidean { .. }, _) => Ok(self.x + eta),
            (ManifoldKind::Sphere { radius, .. }, _) => Ok(sphere::exp(self.x, eta, radius)),
            (ManifoldKind::Spd { metric: SpdMetric::AffineInvariant, .. }, Some(f)) => Ok(spd::exp(eta, f)),
            _ => Err(Error::Unsupported { manifold: self.manifold.name(), what: "exponential map" }),
        }
    }

    /// Inverse exponential map `Exp_x^{-1}(y)`.
    pub fn log(&self, y: &Mat) -> Result<Mat> {
        self.manifold.check_shape(y)?;
        match (self.manifold.kind, &self.spd) {
            (ManifoldKind::Euclidean { .. }, _) => Ok(y - self.x),
            (ManifoldKind::Sphere { radius, .. }, _) => sphere::log(self.x, y, radius),
            (ManifoldKind::Spd { metric: SpdMetric::AffineInvariant, .. }, Some(f)) => spd::log(y, f),
            _ => Err(Error::Unsupported { manifold: self.manifold.name(), what: "logarithm map" }),
        }
    }

    /// Orthonormal basis of the tangent space in the working metric.
    pub fn tangent_basis(&self) -> Vec<Mat> {
        let (r, c) = self.manifold.shape();
        let d = self.manifold.intrinsic_dim();
        if let (ManifoldKind::Spd { metric: SpdMetric::AffineInvariant, .. }, Some(f)) =
            (&self.manifold.kind, &self.spd)
        {
            return symmetric_basis(r).iter().map(|e| f.color(e)).collect();
        }
        let mut basis: Vec<Mat> = Vec::with_capacity(d);
        for idx in 0..r * c {
            let mut e = Mat::zeros(r, c);
            e[(idx % r, idx / r)] = 1.0;
            let mut v = self.project_unchecked(&e);
            for _ in 0..2 {
                for b in &basis {
                    let a = inner(b, &v);
                    v -= b * a;
                }
            }
            let n = v.norm();
            if n > 1e-8 {
                basis.push(v / n);
                if basis.len() == d {
                    break;
                }
            }
        }
        basis
    }
}

/// Frobenius-orthonormal basis of symmetric `n x n` matrices.
pub fn symmetric_basis(n: usize) -> Vec<Mat> {
    let mut out = Vec::with_capacity(n * (n + 1) / 2);
    let s = core::f64::consts::FRAC_1_SQRT_2;
    for i in 0..n {
        for j in i..n {
            let mut e = Mat::zeros(n, n);
            if i == j {
                e[(i, i)] = 1.0;
            } else {
                e[(i, j)] = s;
                e[(j, i)] = s;
            }
            out.push(e);
        }
    }
    out
}

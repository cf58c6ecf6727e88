#[allow(unused_imports)] // shadowed by inherent methods whenever std is linked
use num_traits::Float;
use alloc::vec::Vec;

use crate::linalg::{sym, Mat};
use crate::manifold::{Manifold, SpdMetric};
use crate::oracle::Objective;

/// `‖AX − B‖²_F` on the Stiefel manifold; summand `i` is `l‖a_iᵀX − b_iᵀ‖²`.
#[derive(Debug, Clone)]
pub struct Procrustes {
    pub a: Mat,
    pub b: Mat,
    /// Known minimizer when `B = A X*` was planted.
    pub x_star: Option<Mat>,
    pub manifold: Manifold,
    gram: Mat,
    atb: Mat,
    b_sq: f64,
}

impl Procrustes {
    pub fn new(a: Mat, b: Mat, x_star: Option<Mat>, manifold: Manifold) -> Self {
        let gram = a.tr_mul(&a);
        let atb = a.tr_mul(&b);
        let b_sq = b.norm_squared();
        Self { a, b, x_star, manifold, gram, atb, b_sq }
    }

    fn euclidean_gradient(&self, x: &Mat) -> Mat {
        (&self.gram * x - &self.atb) * 2.0
    }
}

/// `P_X(∇²f[η] − η sym(Xᵀ∇f))`, the embedded Stiefel Hessian.
fn stiefel_hessian(manifold: &Manifold, x: &Mat, eta: &Mat, egrad: &Mat, ehess: &Mat) -> Mat {
    let correction = eta * sym(&x.tr_mul(egrad));
    project(manifold, x, &(ehess - correction))
}

fn project(manifold: &Manifold, x: &Mat, v: &Mat) -> Mat {
    manifold.project_tangent(x, v).expect("monitoring called at a feasible point")
}

impl Objective for Procrustes {
    fn manifold(&self) -> Manifold {
        self.manifold
    }

    /// `⟨X, AᵀA X − 2AᵀB⟩ + ‖B‖²`, which costs `n²p` instead of `lnp`.
    fn value(&self, x: &Mat) -> f64 {
        let gx = &self.gram * x;
        x.dot(&gx) - 2.0 * x.dot(&self.atb) + self.b_sq
    }

    fn gradient(&self, x: &Mat) -> Mat {
        project(&self.manifold, x, &self.euclidean_gradient(x))
    }

    fn hessian_action(&self, x: &Mat, eta: &Mat) -> Option<Mat> {
        let egrad = self.euclidean_gradient(x);
        let ehess = &self.gram * eta * 2.0;
        Some(stiefel_hessian(&self.manifold, x, eta, &egrad, &ehess))
    }

    fn summands(&self) -> usize {
        self.a.nrows()
    }

    fn summand_value(&self, x: &Mat, i: usize) -> f64 {
        if self.a.nrows() == 1 {
            // The lone summand is `f` itself; keep it bitwise equal.
            return self.value(x);
        }
        let r = self.a.row(i) * x - self.b.row(i);
        self.a.nrows() as f64 * r.norm_squared()
    }

    fn summand_gradient(&self, x: &Mat, i: usize) -> Mat {
        let ai = self.a.row(i).transpose();
        let r = self.a.row(i) * x - self.b.row(i);
        let e = &ai * r * (2.0 * self.a.nrows() as f64);
        project(&self.manifold, x, &e)
    }
}

/// `−½ Tr(XᵀHX)` with `H = Σ h_i h_iᵀ`; summand `i` is `−(k/2)‖Xᵀh_i‖²`.
///
/// Used on the Grassmann manifold for kPCA and on the Stiefel manifold for
/// the smooth part of sparse PCA.
#[derive(Debug, Clone)]
pub struct TraceQuadratic {
    /// Columns are the `h_i`.
    pub factors: Mat,
    pub manifold: Manifold,
    pub l1_weight: f64,
}

impl TraceQuadratic {
    fn h_times(&self, x: &Mat) -> Mat {
        &self.factors * self.factors.tr_mul(x)
    }

    pub fn h(&self) -> Mat {
        &self.factors * self.factors.transpose()
    }
}

impl Objective for TraceQuadratic {
    fn manifold(&self) -> Manifold {
        self.manifold
    }

    fn value(&self, x: &Mat) -> f64 {
        -0.5 * self.factors.tr_mul(x).norm_squared()
    }

    fn gradient(&self, x: &Mat) -> Mat {
        project(&self.manifold, x, &-self.h_times(x))
    }

    fn hessian_action(&self, x: &Mat, eta: &Mat) -> Option<Mat> {
        let egrad = -self.h_times(x);
        let ehess = -self.h_times(eta);
        match self.manifold.kind {
            crate::ManifoldKind::Grassmann { .. } => {
                // Horizontal lift: (I − XXᵀ)∇²f[η] − η Xᵀ∇f.
                let lifted = project(&self.manifold, x, &ehess) - eta * x.tr_mul(&egrad);
                Some(project(&self.manifold, x, &lifted))
            }
            _ => Some(stiefel_hessian(&self.manifold, x, eta, &egrad, &ehess)),
        }
    }

    fn summands(&self) -> usize {
        self.factors.ncols()
    }

    fn summand_value(&self, x: &Mat, i: usize) -> f64 {
        let k = self.factors.ncols() as f64;
        let hx = self.factors.column(i).tr_mul(x);
        -0.5 * k * hx.norm_squared()
    }

    fn summand_gradient(&self, x: &Mat, i: usize) -> Mat {
        let k = self.factors.ncols() as f64;
        let h = self.factors.column(i);
        let e = h * h.tr_mul(x) * -k;
        project(&self.manifold, x, &e)
    }

    fn l1_weight(&self) -> f64 {
        self.l1_weight
    }
}

/// `½ xᵀAx` on a sphere.
#[derive(Debug, Clone)]
pub struct SphereQuadratic {
    pub a: Mat,
    pub manifold: Manifold,
}

impl SphereQuadratic {
    pub fn new(a: Mat, radius: f64) -> Self {
        let manifold = Manifold::sphere_with_radius(a.nrows(), radius);
        Self { a: sym(&a), manifold }
    }

    fn radius(&self) -> f64 {
        match self.manifold.kind {
            crate::ManifoldKind::Sphere { radius, .. } => radius,
            _ => 1.0,
        }
    }
}

impl Objective for SphereQuadratic {
    fn manifold(&self) -> Manifold {
        self.manifold
    }

    fn value(&self, x: &Mat) -> f64 {
        0.5 * x.dot(&(&self.a * x))
    }

    fn gradient(&self, x: &Mat) -> Mat {
        project(&self.manifold, x, &(&self.a * x))
    }

    /// `P(Aη) − (xᵀAx/R²) η`.
    fn hessian_action(&self, x: &Mat, eta: &Mat) -> Option<Mat> {
        let r2 = self.radius() * self.radius();
        let pe = project(&self.manifold, x, eta);
        let rq = x.dot(&(&self.a * x)) / r2;
        Some(project(&self.manifold, x, &(&self.a * &pe)) - pe * rq)
    }
}

/// `(1/2n) Σ dist²(X, A_i)` under the affine-invariant metric.
#[derive(Debug, Clone)]
pub struct Karcher {
    pub points: Vec<Mat>,
    pub manifold: Manifold,
}

impl Karcher {
    pub fn new(points: Vec<Mat>) -> Self {
        let dim = points.first().map_or(1, |p| p.nrows());
        Self { points, manifold: Manifold::spd(dim, SpdMetric::AffineInvariant) }
    }

    /// `(−1/n) Σ Log_X(A_i)` and the objective value from one pass.
    fn value_and_gradient(&self, x: &Mat) -> (f64, Mat) {
        let chart = self.manifold.at(x).expect("monitoring called at a feasible point");
        let n = self.points.len() as f64;
        let mut g = Mat::zeros(x.nrows(), x.ncols());
        let mut v = 0.0;
        for a in &self.points {
            let l = chart.log(a).expect("SPD data");
            v += chart.inner(&l, &l);
            g -= l;
        }
        (v / (2.0 * n), g / n)
    }

    fn distance_sq(&self, x: &Mat, i: usize) -> f64 {
        let d = self.manifold.distance(x, &self.points[i]).expect("SPD data");
        d * d
    }
}

impl Objective for Karcher {
    fn manifold(&self) -> Manifold {
        self.manifold
    }

    fn value(&self, x: &Mat) -> f64 {
        // One whitening of X shared by every data point.
        let is = match crate::linalg::inv_sqrtm_spd(x) {
            Ok(m) => m,
            Err(_) => return f64::INFINITY,
        };
        let mut v = 0.0;
        for a in &self.points {
            let w = sym(&(&is * a * &is));
            let (vals, _) = crate::linalg::sym_eigen(&w);
            v += vals.iter().map(|&e| e.max(crate::linalg::EIG_FLOOR).ln().powi(2)).sum::<f64>();
        }
        v / (2.0 * self.points.len() as f64)
    }

    fn gradient(&self, x: &Mat) -> Mat {
        self.value_and_gradient(x).1
    }

    fn summands(&self) -> usize {
        self.points.len()
    }

    fn summand_value(&self, x: &Mat, i: usize) -> f64 {
        0.5 * self.distance_sq(x, i)
    }

    fn summand_gradient(&self, x: &Mat, i: usize) -> Mat {
        -self.manifold.log(x, &self.points[i]).expect("SPD data")
    }
}

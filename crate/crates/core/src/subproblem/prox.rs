//! Tangent-space proximal step for `h = λ‖·‖₁` on the Stiefel manifold.
//!
//! Solves `min ⟨g, v⟩ + ‖v‖²/(2t) + λ‖X + v‖₁` subject to `Xᵀv + vᵀX = 0` by
//! semismooth Newton on the symmetric multiplier `Λ`. For fixed `Λ` the
//! minimizer is `v(Λ) = soft(X − t(g − 2XΛ), tλ) − X`; Newton drives the
//! constraint residual `E(Λ) = Xᵀv(Λ) + v(Λ)ᵀX` to zero.


use crate::error::{contract, Error, Result};
use crate::linalg::{inner, sym, Mat};
use crate::manifold::{Chart, ManifoldKind};

pub const TOL_KKT: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProxOptions {
    pub tol_kkt: f64,
    pub max_inner: usize,
    pub fallback_iterations: usize,
}

impl Default for ProxOptions {
    fn default() -> Self {
        Self { tol_kkt: TOL_KKT, max_inner: 100, fallback_iterations: 5000 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProxSolution {
    pub v: Mat,
    pub multiplier: Mat,
    /// `‖Xᵀv + vᵀX‖_F` at return.
    pub feasibility: f64,
    pub newton_iterations: usize,
    pub fallback_used: bool,
}

/// `⟨g, v⟩ + ‖v‖²/(2t) + λ‖x + v‖₁`.
pub fn prox_objective(x: &Mat, g: &Mat, t: f64, lambda: f64, v: &Mat) -> f64 {
    inner(g, v) + v.norm_squared() / (2.0 * t) + lambda * (x + v).abs().sum()
}

fn soft(z: f64, tau: f64) -> f64 {
    if z > tau {
        z - tau
    } else if z < -tau {
        z + tau
    } else {
        0.0
    }
}

struct Dual<'a> {
    x: &'a Mat,
    g: &'a Mat,
    t: f64,
    tau: f64,
}

impl Dual<'_> {
    /// `z(Λ) = X − t(g − 2XΛ)`.
    fn z(&self, lam: &Mat) -> Mat {
        self.x - (self.g - self.x * lam * 2.0) * self.t
    }

    fn v(&self, z: &Mat) -> Mat {
        z.map(|e| soft(e, self.tau)) - self.x
    }

    fn residual(&self, v: &Mat) -> Mat {
        let xtv = self.x.tr_mul(v);
        &xtv + xtv.transpose()
    }

    /// Generalized Jacobian `2t[Xᵀ(M∘XD) + (M∘XD)ᵀX]` with `M` the active mask.
    fn jacobian(&self, mask: &Mat, d: &Mat) -> Mat {
        let w = (self.x * d).component_mul(mask);
        let a = self.x.tr_mul(&w);
        (&a + a.transpose()) * (2.0 * self.t)
    }
}

/// Conjugate gradients for `(J + εI) D = rhs` on symmetric matrices.
fn cg(apply: impl Fn(&Mat) -> Mat, rhs: &Mat, max_iter: usize, rel_tol: f64) -> Mat {
    let mut d = Mat::zeros(rhs.nrows(), rhs.ncols());
    let mut r = rhs.clone();
    let mut p = r.clone();
    let mut rr = r.norm_squared();
    let stop = rel_tol * rel_tol * rr;
    for _ in 0..max_iter {
        if rr <= stop || rr == 0.0 {
            break;
        }
        let ap = apply(&p);
        let pap = inner(&p, &ap);
        if !(pap > 0.0) {
            break;
        }
        let a = rr / pap;
        d += &p * a;
        r -= &ap * a;
        let rr_new = r.norm_squared();
        p = &r + &p * (rr_new / rr);
        rr = rr_new;
    }
    d
}

/// Solves the proximal subproblem at a Stiefel point.
pub fn solve_prox_tangent(chart: &Chart<'_>, g: &Mat, t: f64, lambda: f64, options: &ProxOptions) -> Result<ProxSolution> {
    if !matches!(chart.manifold().kind, ManifoldKind::Stiefel { .. }) {
        return Err(Error::Unsupported { manifold: chart.manifold().name(), what: "l1 proximal subproblem" });
    }
    if !(t > 0.0) || !t.is_finite() {
        return Err(contract("prox step t must be positive"));
    }
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return Err(contract("l1 weight must be nonnegative"));
    }
    chart.manifold().check_shape(g)?;
    let x = chart.point();
    let p = x.ncols();
    let xtg = x.tr_mul(g);
    // Exact multiplier for λ = 0; a warm start otherwise.
    let mut lam = sym(&xtg) * 0.5;
    if lambda == 0.0 {
        let v = chart.project(g)? * -t;
        let feasibility = {
            let xtv = x.tr_mul(&v);
            (&xtv + xtv.transpose()).norm()
        };
        return Ok(ProxSolution { v, multiplier: lam, feasibility, newton_iterations: 0, fallback_used: false });
    }

    let dual = Dual { x, g, t, tau: t * lambda };
    let target = options.tol_kkt * 1e-4;
    let mut z = dual.z(&lam);
    let mut v = dual.v(&z);
    let mut e = dual.residual(&v);
    let mut en = e.norm();
    let mut iterations = 0;
    while en > target && iterations < options.max_inner {
        iterations += 1;
        let mask = z.map(|zi| if zi.abs() > dual.tau { 1.0 } else { 0.0 });
        let eps = en.min(1e-2);
        let rhs = -&e;
        let d = cg(|dd| dual.jacobian(&mask, dd) + dd * eps, &rhs, 4 * p * p + 10, 1e-12);
        let mut step = 1.0;
        let mut accepted = false;
        for _ in 0..40 {
            let trial = &lam + &d * step;
            let zt = dual.z(&trial);
            let vt = dual.v(&zt);
            let et = dual.residual(&vt);
            let etn = et.norm();
            if etn < en {
                lam = trial;
                z = zt;
                v = vt;
                e = et;
                en = etn;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    if en <= options.tol_kkt {
        return Ok(ProxSolution { v, multiplier: lam, feasibility: en, newton_iterations: iterations, fallback_used: false });
    }
    let v = subgradient_fallback(chart, g, t, lambda, options.fallback_iterations);
    let xtv = x.tr_mul(&v);
    let feasibility = (&xtv + xtv.transpose()).norm();
    Ok(ProxSolution { v, multiplier: lam, feasibility, newton_iterations: iterations, fallback_used: true })
}

/// Projected subgradient descent with steps `t/(k+1)`, keeping the best iterate.
fn subgradient_fallback(chart: &Chart<'_>, g: &Mat, t: f64, lambda: f64, iterations: usize) -> Mat {
    let x = chart.point();
    let mut v = chart.project_unchecked(g) * -t;
    let mut best = v.clone();
    let mut best_val = prox_objective(x, g, t, lambda, &v);
    for k in 0..iterations {
        let w = x + &v;
        let s = g + &v / t + w.map(|e| lambda * e.signum() * f64::from(u8::from(e != 0.0)));
        v = chart.project_unchecked(&(&v - s * (t / (k as f64 + 1.0))));
        let val = prox_objective(x, g, t, lambda, &v);
        if val < best_val {
            best_val = val;
            best = v.clone();
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::manifold::{gaussian, Manifold};
    use crate::rng::{setup_rng, Domain};

    #[test]
    fn zero_weight_is_scaled_projected_gradient() {
        let m = Manifold::stiefel(5, 2);
        let mut rng = setup_rng(1, Domain::Auxiliary);
        let x = m.random_point(&mut rng).unwrap();
        let g = gaussian(5, 2, &mut rng);
        let chart = m.at(&x).unwrap();
        let sol = solve_prox_tangent(&chart, &g, 0.3, 0.0, &ProxOptions::default()).unwrap();
        assert!((sol.v - chart.project(&g).unwrap() * -0.3).norm() < 1e-15);
    }

    #[test]
    fn newton_solution_is_feasible_and_locally_optimal() {
        let m = Manifold::stiefel(8, 3);
        let mut rng = setup_rng(2, Domain::Auxiliary);
        for _ in 0..20 {
            let x = m.random_point(&mut rng).unwrap();
            let g = gaussian(8, 3, &mut rng);
            let chart = m.at(&x).unwrap();
            let sol = solve_prox_tangent(&chart, &g, 0.5, 0.2, &ProxOptions::default()).unwrap();
            assert!(!sol.fallback_used);
            assert!(sol.feasibility <= TOL_KKT);
            let base = prox_objective(&x, &g, 0.5, 0.2, &sol.v);
            for _ in 0..200 {
                let mut d = chart.sample(&mut rng);
                d *= 1e-3 / d.norm();
                assert!(prox_objective(&x, &g, 0.5, 0.2, &(&sol.v + d)) >= base - 1e-10);
            }
        }
    }

    #[test]
    fn fallback_approaches_newton_solution() {
        let m = Manifold::stiefel(4, 2);
        let mut rng = setup_rng(3, Domain::Auxiliary);
        let x = m.random_point(&mut rng).unwrap();
        let g = gaussian(4, 2, &mut rng);
        let chart = m.at(&x).unwrap();
        let exact = solve_prox_tangent(&chart, &g, 0.5, 0.1, &ProxOptions::default()).unwrap();
        let forced = ProxOptions { max_inner: 0, ..ProxOptions::default() };
        let fb = solve_prox_tangent(&chart, &g, 0.5, 0.1, &forced).unwrap();
        assert!(fb.fallback_used);
        assert!(fb.feasibility < 1e-12);
        assert!((fb.v - exact.v).norm() < 1e-2);
    }

    #[test]
    fn rejects_other_manifolds_and_bad_steps() {
        let m = Manifold::sphere(3);
        let x = Mat::from_column_slice(3, 1, &[1.0, 0.0, 0.0]);
        let chart = m.at(&x).unwrap();
        assert!(solve_prox_tangent(&chart, &x, 1.0, 0.1, &ProxOptions::default()).is_err());
        let st = Manifold::stiefel(3, 1);
        let chart = st.at(&x).unwrap();
        assert!(solve_prox_tangent(&chart, &x, 0.0, 0.1, &ProxOptions::default()).is_err());
        assert!(solve_prox_tangent(&chart, &x, 1.0, -0.1, &ProxOptions::default()).is_err());
    }
}

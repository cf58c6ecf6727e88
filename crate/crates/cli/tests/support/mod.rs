//! Independent reference solvers for the acceptance checks.

use manifold_zo_core::linalg::sym_eigen;
use manifold_zo_core::Mat;

/// Orthonormal basis of `{V : XᵀV + VᵀX = 0}`, as columns over `vec(V)`,
/// taken from the null space of the constraint map.
pub fn stiefel_tangent_basis(x: &Mat) -> Mat {
    let (n, p) = x.shape();
    let mut rows = Vec::new();
    for a in 0..p {
        for b in a..p {
            let mut row = vec![0.0; n * p];
            for i in 0..n {
                row[b * n + i] += x[(i, a)];
                row[a * n + i] += x[(i, b)];
            }
            rows.push(row);
        }
    }
    let c = Mat::from_fn(rows.len(), n * p, |r, k| rows[r][k]);
    let (vals, vecs) = sym_eigen(&(c.transpose() * &c));
    let null: Vec<usize> = (0..n * p).filter(|&k| vals[k].abs() < 1e-10).collect();
    Mat::from_fn(n * p, null.len(), |r, j| vecs[(r, null[j])])
}

/// `⟨g, v⟩ + ‖v‖²/(2t) + λ‖X + v‖₁`.
pub fn prox_value(x: &Mat, g: &Mat, t: f64, lambda: f64, v: &Mat) -> f64 {
    g.dot(v) + v.norm_squared() / (2.0 * t) + lambda * (x + v).iter().map(|e| e.abs()).sum::<f64>()
}

/// Exact minimizer of the tangent prox subproblem by enumerating every sign
/// pattern of `X + v`. Each pattern fixes the ℓ₁ term to a linear one with
/// some entries pinned at zero, leaving an equality-constrained quadratic.
/// Every candidate is feasible, so the smallest objective is the optimum.
pub fn prox_by_enumeration(x: &Mat, g: &Mat, t: f64, lambda: f64) -> Mat {
    let basis = stiefel_tangent_basis(x);
    let (n, p) = x.shape();
    let len = n * p;
    let dim = basis.ncols();
    let mut best: Option<(f64, Mat)> = None;
    for code in 0..3usize.pow(len as u32) {
        let mut signs = vec![0.0; len];
        let mut c = code;
        for s in signs.iter_mut() {
            *s = [0.0, 1.0, -1.0][c % 3];
            c /= 3;
        }
        let zeros: Vec<usize> = (0..len).filter(|&k| signs[k] == 0.0).collect();
        if zeros.len() > dim {
            continue;
        }
        let lin = Mat::from_fn(len, 1, |k, _| g[k] + lambda * signs[k]);
        let q = basis.transpose() * lin;
        let free = &q * -t;
        let coeffs = if zeros.is_empty() {
            free
        } else {
            // min ‖c + tq‖² subject to E c = r, with E the pinned rows of the basis.
            let e = Mat::from_fn(zeros.len(), dim, |r, j| basis[(zeros[r], j)]);
            let r = Mat::from_fn(zeros.len(), 1, |k, _| -x[zeros[k]]);
            let gram = &e * e.transpose();
            let Some(w) = gram.clone().lu().solve(&(&r - &e * &free)) else { continue };
            let c = &free + e.transpose() * w;
            if (&e * &c - &r).norm() > 1e-9 {
                continue;
            }
            c
        };
        let v = Mat::from_column_slice(n, p, (&basis * coeffs).as_slice());
        let value = prox_value(x, g, t, lambda, &v);
        if best.as_ref().is_none_or(|(b, _)| value < *b) {
            best = Some((value, v));
        }
    }
    best.expect("the all-nonzero pattern is always a candidate").1
}

/// `gᵀη + ½ηᵀHη + (α/6)‖η‖³`.
pub fn cubic_value(h: &Mat, g: &Mat, alpha: f64, eta: &Mat) -> f64 {
    g.dot(eta) + 0.5 * eta.dot(&(h * eta)) + alpha / 6.0 * eta.norm().powi(3)
}

fn cubic_gradient(h: &Mat, g: &Mat, alpha: f64, eta: &Mat) -> Mat {
    g + h * eta + eta * (alpha / 2.0 * eta.norm())
}

fn cubic_hessian(h: &Mat, alpha: f64, eta: &Mat) -> Mat {
    let n = eta.norm();
    let mut out = h + Mat::identity(h.nrows(), h.ncols()) * (alpha / 2.0 * n);
    if n > 0.0 {
        out += eta * eta.transpose() * (alpha / (2.0 * n));
    }
    out
}

/// Local descent with backtracking, then Newton polishing while it helps.
fn descend(h: &Mat, g: &Mat, alpha: f64, start: Mat) -> Mat {
    let mut eta = start;
    let mut step = 1.0;
    for _ in 0..2_000 {
        let grad = cubic_gradient(h, g, alpha, &eta);
        if grad.norm() < 1e-13 {
            break;
        }
        let f = cubic_value(h, g, alpha, &eta);
        step *= 2.0;
        loop {
            let trial = &eta - &grad * step;
            if cubic_value(h, g, alpha, &trial) <= f - 0.25 * step * grad.norm_squared() || step < 1e-16 {
                eta = trial;
                break;
            }
            step *= 0.5;
        }
    }
    for _ in 0..50 {
        let grad = cubic_gradient(h, g, alpha, &eta);
        let Some(delta) = cubic_hessian(h, alpha, &eta).lu().solve(&grad) else { break };
        let trial = &eta - delta;
        let better = cubic_gradient(h, g, alpha, &trial).norm() < grad.norm()
            && cubic_value(h, g, alpha, &trial) <= cubic_value(h, g, alpha, &eta) + 1e-15;
        if !better {
            break;
        }
        eta = trial;
    }
    eta
}

/// Global minimum of the cubic model by multi-start local descent, seeded
/// along `-g`, every eigenvector in both directions and the given random
/// directions, each at several radii.
pub fn cubic_by_multistart(h: &Mat, g: &Mat, alpha: f64, random: &[Mat]) -> (f64, Mat) {
    let d = h.nrows();
    let (_, vecs) = sym_eigen(h);
    let mut dirs: Vec<Mat> = vec![-g / g.norm().max(1e-300)];
    for j in 0..d {
        let v: Mat = vecs.columns(j, 1).into_owned();
        dirs.push(v.clone());
        dirs.push(-v);
    }
    dirs.extend(random.iter().map(|r| r / r.norm()));
    let scale = (h.norm() + g.norm().sqrt()) / alpha + 1.0;
    let mut starts = vec![Mat::zeros(d, 1)];
    for dir in &dirs {
        for r in [0.1, 1.0, 4.0] {
            starts.push(dir * (r * scale));
        }
    }
    starts
        .into_iter()
        .map(|s| {
            let eta = descend(h, g, alpha, s);
            (cubic_value(h, g, alpha, &eta), eta)
        })
        .min_by(|a, b| a.0.total_cmp(&b.0))
        .expect("at least one start")
}

/// Smallest eigenvalue of a symmetric matrix.
pub fn min_eig(h: &Mat) -> f64 {
    sym_eigen(h).0.iter().copied().fold(f64::INFINITY, f64::min)
}

/// Dense matrix of a quadratic form `x ↦ xᵀAx` recovered by polarization.
pub fn polarize(n: usize, q: impl Fn(&Mat) -> f64) -> Mat {
    Mat::from_fn(n, n, |i, j| {
        let mut v = Mat::zeros(n, 1);
        let mut w = Mat::zeros(n, 1);
        v[i] += 1.0;
        v[j] += 1.0;
        w[i] += 1.0;
        w[j] -= 1.0;
        (q(&v) - q(&w)) / 4.0
    })
}

/// Mean of the last `k` `grad_norm` entries of a trace CSV.
pub fn tail_grad_norm(csv: &str, k: usize) -> f64 {
    let mut lines = csv.lines();
    let header: Vec<&str> = lines.next().expect("header").split(',').collect();
    let col = header.iter().position(|h| *h == "grad_norm").expect("grad_norm column");
    let values: Vec<f64> = lines.map(|l| l.split(',').nth(col).expect("field").parse().expect("number")).collect();
    let tail = &values[values.len().saturating_sub(k)..];
    tail.iter().sum::<f64>() / tail.len() as f64
}

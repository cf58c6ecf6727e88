use crate::error::Result;
use crate::linalg::Mat;
use crate::manifold::Manifold;
use crate::oracle::Objective;

#[derive(Debug, Clone, PartialEq)]
pub struct BaselineResult {
    pub point: Mat,
    pub value: f64,
    pub grad_norm: f64,
    pub iterations: usize,
}

/// First-order Riemannian gradient descent on the analytic gradient, with a
/// fixed step. Serves as a reference solution, not as a competitor.
pub fn riemannian_gradient_descent(
    objective: &dyn Objective,
    manifold: &Manifold,
    x0: &Mat,
    step: f64,
    max_iter: usize,
    tol: f64,
) -> Result<BaselineResult> {
    let mut x = x0.clone();
    let mut iterations = 0;
    loop {
        let chart = manifold.at(&x)?;
        let g = objective.gradient(&x);
        let gn = chart.norm(&g);
        if gn <= tol || iterations == max_iter {
            let value = objective.value(&x);
            return Ok(BaselineResult { point: x, value, grad_norm: gn, iterations });
        }
        x = chart.retract(&(g * -step))?;
        iterations += 1;
    }
}

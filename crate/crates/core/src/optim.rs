//! Minimal dense BFGS with backtracking Armijo line search.
//!
//! Sized for the low-dimensional problems in this crate (the 7-parameter
//! plane fit); not a general-purpose solver.

use nalgebra::{DMatrix, DVector};

pub struct MinimizeOutcome {
    pub x: DVector<f64>,
    pub f: f64,
    pub converged: bool,
    pub iterations: usize,
}

/// Minimizes `eval`, which must return the objective and write its gradient.
///
/// Convergence: max-norm of the gradient below `grad_tol`, or the objective
/// stalling below resolvable improvement. Line-search failure terminates with
/// `converged = false` unless the gradient is already small.
pub fn minimize<F>(
    x0: DVector<f64>,
    mut eval: F,
    max_iterations: usize,
    grad_tol: f64,
) -> MinimizeOutcome
where
    F: FnMut(&DVector<f64>, &mut DVector<f64>) -> f64,
{
    let n = x0.len();
    let mut x = x0;
    let mut g = DVector::zeros(n);
    let mut f = eval(&x, &mut g);
    let mut h: DMatrix<f64> = DMatrix::identity(n, n);
    let mut iterations = 0;
    let mut stalls = 0;

    loop {
        if g.amax() <= grad_tol {
            return MinimizeOutcome { x, f, converged: true, iterations };
        }
        if iterations >= max_iterations {
            return MinimizeOutcome { x, f, converged: false, iterations };
        }
        iterations += 1;

        let mut dir = -(&h * &g);
        let mut slope = g.dot(&dir);
        if !(slope < 0.0) {
            // curvature estimate went bad: restart from steepest descent
            h = DMatrix::identity(n, n);
            dir = -g.clone();
            slope = g.dot(&dir);
            if !(slope < 0.0) {
                return MinimizeOutcome { x, f, converged: true, iterations };
            }
        }

        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..60 {
            let x_new = &x + &dir * step;
            let mut g_new = DVector::zeros(n);
            let f_new = eval(&x_new, &mut g_new);
            if f_new.is_finite() && f_new <= f + 1e-4 * step * slope {
                accepted = Some((x_new, f_new, g_new));
                break;
            }
            step *= 0.5;
        }
        let (x_new, f_new, g_new) = match accepted {
            Some(t) => t,
            None => {
                // no resolvable descent along this direction
                let converged = g.amax() <= grad_tol * 1e3 || stalls > 0;
                return MinimizeOutcome { x, f, converged, iterations };
            }
        };

        if f - f_new <= 1e-16 * f.abs().max(1e-12) {
            stalls += 1;
            if stalls >= 3 {
                return MinimizeOutcome { x: x_new, f: f_new, converged: true, iterations };
            }
        } else {
            stalls = 0;
        }

        let s = &x_new - &x;
        let y = &g_new - &g;
        let sy = s.dot(&y);
        if sy > 1e-12 * s.norm() * y.norm() {
            let rho = 1.0 / sy;
            let hy = &h * &y;
            let yhy = y.dot(&hy);
            // H' = (I - rho s y^T) H (I - rho y s^T) + rho s s^T
            let term = &s * hy.transpose();
            h = &h - (&term + term.transpose()) * rho
                + (&s * s.transpose()) * (rho * rho * yhy + rho);
        }
        x = x_new;
        f = f_new;
        g = g_new;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimizes_quadratic() {
        // f(x) = (x0-1)^2 + 10 (x1+2)^2
        let out = minimize(
            DVector::from_vec(vec![5.0, 5.0]),
            |x, g| {
                g[0] = 2.0 * (x[0] - 1.0);
                g[1] = 20.0 * (x[1] + 2.0);
                (x[0] - 1.0).powi(2) + 10.0 * (x[1] + 2.0).powi(2)
            },
            200,
            1e-12,
        );
        assert!(out.converged);
        assert!((out.x[0] - 1.0).abs() < 1e-8);
        assert!((out.x[1] + 2.0).abs() < 1e-8);
    }

    #[test]
    fn minimizes_rosenbrock() {
        let out = minimize(
            DVector::from_vec(vec![-1.2, 1.0]),
            |x, g| {
                let (a, b) = (x[0], x[1]);
                g[0] = -2.0 * (1.0 - a) - 400.0 * a * (b - a * a);
                g[1] = 200.0 * (b - a * a);
                (1.0 - a).powi(2) + 100.0 * (b - a * a).powi(2)
            },
            2000,
            1e-10,
        );
        assert!((out.x[0] - 1.0).abs() < 1e-5, "x = {:?}", out.x);
        assert!((out.x[1] - 1.0).abs() < 1e-5);
    }
}

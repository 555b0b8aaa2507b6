//! First Dirichlet eigenvalues: inverse iteration for the quadratic case,
//! normalized Rayleigh-quotient descent for general (p, q).

use super::linear::conjugate_gradient;
use super::stencil::DirichletProblem;
use crate::error::{Error, Result};

pub struct EigenOutcome {
    pub lambda: f64,
    pub field: Vec<f64>,
    pub iterations: usize,
    pub residual: f64,
    pub descent_ok: bool,
}

/// Smallest eigenvalue of the discrete Dirichlet Laplacian via inverse
/// iteration (p = q = 2).
pub fn first_eigenvalue_quadratic(
    prob: &DirichletProblem,
    tol: f64,
    max_outer: usize,
) -> Result<EigenOutcome> {
    let n = prob.n_free();
    let h = prob.spacing;
    let (_, diag) = prob.quadratic_rhs_diag();
    let mut x: Vec<f64> = vec![1.0; n];
    normalize_l2(&mut x);
    let mut ax = vec![0.0; n];
    let mut lambda_prev = f64::INFINITY;
    let mut total_inner = 0usize;
    for outer in 0..max_outer {
        let mut y = x.clone(); // warm start
        let out = conjugate_gradient(
            |v, w| prob.quadratic_apply(v, w),
            &x,
            &mut y,
            &diag,
            1e-10,
            40_000,
        )?;
        total_inner += out.iterations;
        normalize_l2(&mut y);
        prob.quadratic_apply(&y, &mut ax);
        let num: f64 = y.iter().zip(ax.iter()).map(|(a, b)| a * b).sum();
        let lambda = num / (h * h);
        x = y;
        if (lambda - lambda_prev).abs() <= tol * lambda.abs() && outer >= 3 {
            return Ok(EigenOutcome {
                lambda,
                field: prob.full_field(&x),
                iterations: total_inner,
                residual: (lambda - lambda_prev).abs() / lambda.abs(),
                descent_ok: true,
            });
        }
        lambda_prev = lambda;
    }
    Err(Error::NonConvergence {
        residual: f64::NAN,
        iterations: total_inner,
    })
}

fn normalize_l2(x: &mut [f64]) {
    let n = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    if n > 0.0 {
        x.iter_mut().for_each(|v| *v /= n);
    }
}

/// Minimize the Rayleigh quotient `E_p(phi) / ||phi||_q^p` over nonnegative
/// fields vanishing outside the domain, with unit discrete L^q norm.
///
/// Monotone BB descent with renormalization after every step; the iterate is
/// kept nonnegative (the first eigenfunction can be taken nonnegative since
/// replacing `phi` by `|phi|` leaves the quotient unchanged).
pub fn first_eigenvalue_general(
    prob: &DirichletProblem,
    p: f64,
    q: f64,
    init: Option<Vec<f64>>,
    tolerance: f64,
    max_iterations: usize,
) -> Result<EigenOutcome> {
    let n = prob.n_free();
    let h = prob.spacing;
    let cell_vol = h.powi(prob.dim as i32);
    let mu2 = (1e-9 / h) * (1e-9 / h);
    let window = 50usize;

    let norm_q = |x: &[f64]| -> f64 {
        (x.iter().map(|v| v.abs().powf(q)).sum::<f64>() * cell_vol).powf(1.0 / q)
    };
    let mut x = init.unwrap_or_else(|| vec![1.0; n]);
    for v in x.iter_mut() {
        *v = v.max(0.0);
    }
    let nq = norm_q(&x);
    if !(nq > 0.0) {
        return Err(Error::Precondition("zero initial field".into()));
    }
    x.iter_mut().for_each(|v| *v /= nq);

    let mut grad_e = vec![0.0; n];
    let mut grad = vec![0.0; n];
    // at unit q-norm: grad R = grad E - p E |x|^{q-2} x * cell_vol
    let rayleigh = |x: &[f64], grad_e: &mut [f64], grad: &mut [f64]| -> f64 {
        let e = prob.energy_and_grad(x, p, mu2, grad_e);
        for i in 0..x.len() {
            let xq = if q == 2.0 {
                x[i]
            } else {
                x[i].abs().powf(q - 1.0) * x[i].signum()
            };
            grad[i] = grad_e[i] - p * e * xq * cell_vol;
        }
        e
    };

    let mut r = rayleigh(&x, &mut grad_e, &mut grad);
    let mut alpha = h * h / (8.0 * prob.dim as f64 * p);
    let mut x_prev = x.clone();
    let mut g_prev = grad.clone();
    let mut history = vec![r];
    let mut descent_ok = true;

    for iter in 0..max_iterations {
        let mut accepted = false;
        let mut step = alpha;
        for _ in 0..40 {
            for i in 0..n {
                x[i] = (x_prev[i] - step * g_prev[i]).max(0.0);
            }
            let nq = norm_q(&x);
            if nq > 0.0 {
                x.iter_mut().for_each(|v| *v /= nq);
                let e_new = prob.energy(&x, p, mu2);
                if e_new <= r * (1.0 + 1e-14) {
                    accepted = true;
                    break;
                }
            }
            step *= 0.5;
        }
        if !accepted {
            x.copy_from_slice(&x_prev);
            return Ok(EigenOutcome {
                lambda: r,
                field: prob.full_field(&x),
                iterations: iter,
                residual: 0.0,
                descent_ok,
            });
        }
        let r_prev_it = r;
        r = rayleigh(&x, &mut grad_e, &mut grad);
        if r > r_prev_it * (1.0 + 1e-12) {
            descent_ok = false;
        }
        let mut ss = 0.0;
        let mut sy = 0.0;
        for i in 0..n {
            let s = x[i] - x_prev[i];
            let y = grad[i] - g_prev[i];
            ss += s * s;
            sy += s * y;
        }
        alpha = if sy > 1e-300 {
            (ss / sy).clamp(1e-14, 1e10)
        } else {
            step * 2.0
        };
        x_prev.copy_from_slice(&x);
        g_prev.copy_from_slice(&grad);
        history.push(r);
        if history.len() > window {
            let r_old = history[history.len() - 1 - window];
            let rel = (r_old - r).abs() / r.abs().max(1e-300);
            if rel < tolerance {
                return Ok(EigenOutcome {
                    lambda: r,
                    field: prob.full_field(&x),
                    iterations: iter + 1,
                    residual: rel,
                    descent_ok,
                });
            }
        }
    }
    Err(Error::NonConvergence {
        residual: history
            .len()
            .checked_sub(window + 1)
            .map(|i| (history[i] - r).abs() / r.abs().max(1e-300))
            .unwrap_or(f64::INFINITY),
        iterations: max_iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::shapes::grid::BoxBounds;
    use crate::shapes::GridDomain;

    fn unit_square(n: usize) -> GridDomain {
        let mut g = GridDomain::empty(
            2,
            1.0 / n as f64,
            BoxBounds::new([0.0; 3], [1.0, 1.0, 0.0]),
        )
        .unwrap();
        for cell in g.clone().iter_cells() {
            g.set(cell, true);
        }
        g
    }

    #[test]
    fn square_eigenvalue_matches_separation_of_variables() {
        // lambda_2((0,1)^2) = 2 pi^2, discretization error O(h^2)
        let g = unit_square(32);
        let prob = DirichletProblem::assemble(&g, None).unwrap();
        let out = first_eigenvalue_quadratic(&prob, 1e-10, 200).unwrap();
        let expected = 2.0 * std::f64::consts::PI * std::f64::consts::PI;
        let err = (out.lambda - expected).abs() / expected;
        assert!(err < 5e-3, "lambda {} vs {expected}, err {err}", out.lambda);
    }

    #[test]
    fn general_path_agrees_with_quadratic_at_p2() {
        let g = unit_square(24);
        let prob = DirichletProblem::assemble(&g, None).unwrap();
        let quad = first_eigenvalue_quadratic(&prob, 1e-10, 200).unwrap();
        let init = quad
            .field
            .iter()
            .zip(prob.class.iter())
            .filter(|(_, c)| matches!(c, super::super::stencil::CellClass::Free(_)))
            .map(|(v, _)| *v)
            .collect::<Vec<_>>();
        let gen = first_eigenvalue_general(&prob, 2.0, 2.0, Some(init), 1e-9, 40_000).unwrap();
        assert!(gen.descent_ok);
        let rel = (gen.lambda - quad.lambda).abs() / quad.lambda;
        assert!(rel < 2e-3, "general {} vs quadratic {}", gen.lambda, quad.lambda);
    }
}

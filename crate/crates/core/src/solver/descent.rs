//! Projected gradient descent with Barzilai-Borwein steps, made monotone by
//! backtracking so the objective is non-increasing across iterations.

use crate::error::{Error, Result};

pub struct DescentOutcome {
    pub iterations: usize,
    /// Relative objective decrease over the last convergence window.
    pub residual: f64,
    /// Objective value at the final iterate.
    pub objective: f64,
    /// True when no iteration increased the objective (monotone descent).
    pub descent_ok: bool,
}

pub struct DescentParams {
    pub tolerance: f64,
    pub max_iterations: usize,
    pub window: usize,
    pub initial_step: f64,
    /// Clamp interval for the iterate, e.g. [0, 1] for capacitary potentials.
    pub clamp: (f64, f64),
}

impl Default for DescentParams {
    fn default() -> Self {
        Self {
            tolerance: 1e-7,
            max_iterations: 50_000,
            window: 50,
            initial_step: 1.0,
            clamp: (0.0, 1.0),
        }
    }
}

/// Minimize a smooth convex objective over a box via monotone BB steps.
///
/// `eval(x, grad) -> objective` fills the gradient; `x` is updated in place.
pub fn projected_bb_descent(
    mut eval: impl FnMut(&[f64], &mut [f64]) -> f64,
    mut energy_only: impl FnMut(&[f64]) -> f64,
    x: &mut Vec<f64>,
    params: &DescentParams,
) -> Result<DescentOutcome> {
    let n = x.len();
    let (lo, hi) = params.clamp;
    let clamp = |v: f64| v.max(lo).min(hi);
    for v in x.iter_mut() {
        *v = clamp(*v);
    }

    let mut grad = vec![0.0; n];
    let mut e = eval(x, &mut grad);
    let mut alpha = params.initial_step;
    let mut x_prev = x.clone();
    let mut g_prev = grad.clone();
    let mut history: Vec<f64> = vec![e];
    let mut descent_ok = true;

    for iter in 0..params.max_iterations {
        // trial step with backtracking until the energy does not increase
        let mut accepted = false;
        let mut e_new = e;
        let mut step = alpha;
        for _ in 0..40 {
            for i in 0..n {
                x[i] = clamp(x_prev[i] - step * g_prev[i]);
            }
            e_new = energy_only(x);
            if e_new <= e * (1.0 + 1e-14) + 1e-300 {
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            // gradient step cannot decrease further: converged to tolerance
            x.copy_from_slice(&x_prev);
            return Ok(DescentOutcome {
                iterations: iter,
                residual: 0.0,
                objective: e,
                descent_ok,
            });
        }
        if e_new > e {
            descent_ok = false;
        }
        let e_prev_it = e;
        e = eval(x, &mut grad);
        debug_assert!(
            e <= e_prev_it * (1.0 + 1e-12) + 1e-300,
            "objective increased: {e_prev_it} -> {e}"
        );

        // BB1 step from the accepted move
        let mut ss = 0.0;
        let mut sy = 0.0;
        for i in 0..n {
            let s = x[i] - x_prev[i];
            let y = grad[i] - g_prev[i];
            ss += s * s;
            sy += s * y;
        }
        alpha = if sy > 1e-300 {
            (ss / sy).clamp(1e-12, 1e12)
        } else {
            step * 2.0
        };
        x_prev.copy_from_slice(x);
        g_prev.copy_from_slice(&grad);

        history.push(e);
        if history.len() > params.window {
            let e_old = history[history.len() - 1 - params.window];
            let rel = (e_old - e).abs() / e.abs().max(1e-300);
            if rel < params.tolerance {
                return Ok(DescentOutcome {
                    iterations: iter + 1,
                    residual: rel,
                    objective: e,
                    descent_ok,
                });
            }
        }
    }
    let rel = if history.len() > params.window {
        let e_old = history[history.len() - 1 - params.window];
        (e_old - e).abs() / e.abs().max(1e-300)
    } else {
        f64::INFINITY
    };
    Err(Error::NonConvergence {
        residual: rel,
        iterations: params.max_iterations,
    })
}

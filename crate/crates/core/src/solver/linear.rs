//! Linear solvers for the quadratic (p = 2) case: Jacobi-preconditioned
//! conjugate gradients as the general path and a banded Cholesky direct
//! factorization as the reference path on small 2-d grids.

use crate::error::{Error, Result};

pub struct CgOutcome {
    pub iterations: usize,
    pub rel_residual: f64,
}

/// Preconditioned conjugate gradients for SPD `A` given as a matvec.
pub fn conjugate_gradient(
    apply: impl Fn(&[f64], &mut [f64]),
    b: &[f64],
    x: &mut [f64],
    diag: &[f64],
    tol: f64,
    max_iter: usize,
) -> Result<CgOutcome> {
    let n = b.len();
    let mut r = vec![0.0; n];
    let mut z = vec![0.0; n];
    let mut p = vec![0.0; n];
    let mut ap = vec![0.0; n];

    apply(x, &mut ap);
    for i in 0..n {
        r[i] = b[i] - ap[i];
    }
    let bnorm = b.iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-300);
    let mut rz = 0.0;
    for i in 0..n {
        z[i] = r[i] / diag[i];
        rz += r[i] * z[i];
        p[i] = z[i];
    }
    let mut iter = 0;
    loop {
        let rnorm = r.iter().map(|v| v * v).sum::<f64>().sqrt();
        if rnorm <= tol * bnorm {
            return Ok(CgOutcome {
                iterations: iter,
                rel_residual: rnorm / bnorm,
            });
        }
        if iter >= max_iter {
            return Err(Error::NonConvergence {
                residual: rnorm / bnorm,
                iterations: iter,
            });
        }
        apply(&p, &mut ap);
        let pap: f64 = p.iter().zip(ap.iter()).map(|(a, b)| a * b).sum();
        if pap <= 0.0 {
            return Err(Error::Inconsistency(
                "operator lost positive definiteness in CG".into(),
            ));
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        let mut rz_next = 0.0;
        for i in 0..n {
            z[i] = r[i] / diag[i];
            rz_next += r[i] * z[i];
        }
        let beta = rz_next / rz;
        rz = rz_next;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
        iter += 1;
    }
}

/// Symmetric banded matrix in lower-band storage: `band[k][i] = A[i+k][i]`
/// for `k = 0..=bw`.
pub struct BandedSpd {
    pub n: usize,
    pub bw: usize,
    pub band: Vec<f64>, // (bw + 1) x n, row k holds sub-diagonal k
}

impl BandedSpd {
    pub fn zeros(n: usize, bw: usize) -> Self {
        Self {
            n,
            bw,
            band: vec![0.0; (bw + 1) * n],
        }
    }

    #[inline]
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let (lo, hi) = if i <= j { (i, j) } else { (j, i) };
        let k = hi - lo;
        debug_assert!(k <= self.bw);
        self.band[k * self.n + lo] += v;
    }

    /// In-place Cholesky factorization (band-respecting).
    pub fn factor(&mut self) -> Result<()> {
        let n = self.n;
        let bw = self.bw;
        for j in 0..n {
            let mut d = self.band[j];
            let kmin = j.saturating_sub(bw);
            for k in kmin..j {
                let l = self.band[(j - k) * n + k];
                d -= l * l;
            }
            if d <= 0.0 {
                return Err(Error::Inconsistency(
                    "banded matrix is not positive definite".into(),
                ));
            }
            let d = d.sqrt();
            self.band[j] = d;
            let imax = (j + bw).min(n - 1);
            for i in (j + 1)..=imax {
                let mut s = self.band[(i - j) * n + j];
                let kmin = i.saturating_sub(bw).max(0);
                for k in kmin..j {
                    if i - k <= bw {
                        s -= self.band[(i - k) * n + k] * self.band[(j - k) * n + k];
                    }
                }
                self.band[(i - j) * n + j] = s / d;
            }
        }
        Ok(())
    }

    /// Solve `L L^T x = b` after [`Self::factor`].
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        let bw = self.bw;
        let mut y = b.to_vec();
        for i in 0..n {
            let kmin = i.saturating_sub(bw);
            let mut s = y[i];
            for k in kmin..i {
                s -= self.band[(i - k) * n + k] * y[k];
            }
            y[i] = s / self.band[i];
        }
        for i in (0..n).rev() {
            let imax = (i + bw).min(n - 1);
            let mut s = y[i];
            for k in (i + 1)..=imax {
                s -= self.band[(k - i) * n + i] * y[k];
            }
            y[i] = s / self.band[i];
        }
        y
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cg_solves_small_spd_system() {
        // 1-d Laplacian, n = 50
        let n = 50;
        let apply = |x: &[f64], y: &mut [f64]| {
            for i in 0..n {
                let mut v = 2.0 * x[i];
                if i > 0 {
                    v -= x[i - 1];
                }
                if i + 1 < n {
                    v -= x[i + 1];
                }
                y[i] = v;
            }
        };
        let b = vec![1.0; n];
        let diag = vec![2.0; n];
        let mut x = vec![0.0; n];
        let out = conjugate_gradient(apply, &b, &mut x, &diag, 1e-12, 1000).unwrap();
        assert!(out.rel_residual <= 1e-12);
        // check residual explicitly
        let mut ax = vec![0.0; n];
        apply(&x, &mut ax);
        for i in 0..n {
            assert!((ax[i] - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn banded_cholesky_agrees_with_cg() {
        let n = 40;
        let bw = 5;
        let mut m = BandedSpd::zeros(n, bw);
        for i in 0..n {
            m.add(i, i, 4.0);
            if i + 1 < n {
                m.add(i, i + 1, -1.0);
            }
            if i + 5 < n {
                m.add(i, i + 5, -1.0);
            }
        }
        let apply = |x: &[f64], y: &mut [f64]| {
            for i in 0..n {
                let mut v = 4.0 * x[i];
                if i > 0 {
                    v -= x[i - 1];
                }
                if i + 1 < n {
                    v -= x[i + 1];
                }
                if i >= 5 {
                    v -= x[i - 5];
                }
                if i + 5 < n {
                    v -= x[i + 5];
                }
                y[i] = v;
            }
        };
        let b: Vec<f64> = (0..n).map(|i| (i as f64).sin()).collect();
        let mut mf = m;
        mf.factor().unwrap();
        let xd = mf.solve(&b);
        let mut xc = vec![0.0; n];
        conjugate_gradient(apply, &b, &mut xc, &vec![4.0; n], 1e-13, 1000).unwrap();
        for i in 0..n {
            assert!((xd[i] - xc[i]).abs() < 1e-8);
        }
    }
}

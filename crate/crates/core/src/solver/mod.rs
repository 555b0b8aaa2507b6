//! Discrete variational engine: minimizes p-Dirichlet energies on grids to
//! produce capacities and Poincaré-Sobolev constants.

pub mod descent;
pub mod eigen;
pub mod linear;
pub mod stencil;

use serde::{Deserialize, Serialize};

use crate::analytic::{absolute_sandwich_factor, unit_ball_volume, ConstantsContext};
use crate::error::{Error, Result};
use crate::shapes::grid::BoxBounds;
use crate::shapes::GridDomain;
use descent::{projected_bb_descent, DescentParams};
use eigen::{first_eigenvalue_general, first_eigenvalue_quadratic};
use linear::{conjugate_gradient, BandedSpd};
use stencil::{CellClass, DirichletProblem};

/// What a solve is asked to compute; serialized in job records.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ProblemKind {
    RelativeCapacity,
    InhomogeneousCapacity,
    AbsoluteCapacity,
    Poincare { q: f64 },
    Cheeger,
}

/// Job record for a variational solve.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VariationalProblem {
    pub kind: ProblemKind,
    pub p: f64,
    pub tolerance: f64,
    pub max_iterations: usize,
}

/// Tunable solve parameters (spec defaults).
#[derive(Debug, Clone)]
pub struct SolveOptions {
    /// Relative energy change over the convergence window.
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Smoothing exponent shift used for p = 1 problems.
    pub p1_epsilon: f64,
    /// Retain the minimizing field.
    pub keep_field: bool,
    /// Cell budget per axis when the absolute-capacity schedule rebuilds
    /// grids for growing envelopes.
    pub cells_per_axis: [usize; 3],
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            tolerance: 1e-7,
            max_iterations: 60_000,
            p1_epsilon: 0.05,
            keep_field: false,
            cells_per_axis: [0, 512, 128], // indexed by dim - 1
        }
    }
}

/// Outcome of a variational minimization.
#[derive(Debug, Clone, Serialize)]
pub struct CapacityResult {
    pub value: f64,
    /// Last relative energy decrease over the convergence window.
    pub residual: f64,
    pub iterations: usize,
    /// Heuristic or sandwich-certified enclosure, when available.
    pub bracket: Option<(f64, f64)>,
    /// (parameter, value) pairs for scheduled solves (envelope radius for the
    /// absolute capacity, smoothed exponent for the Cheeger constant).
    pub schedule: Vec<(f64, f64)>,
    /// Independent coarse estimate, when the operation defines one.
    pub cross_check: Option<f64>,
    pub warnings: Vec<String>,
    /// True when the iteration never increased its objective.
    pub descent_ok: bool,
    /// Minimizing field over the grid cells (kept on request).
    #[serde(skip)]
    pub field: Option<Vec<f64>>,
}

impl CapacityResult {
    fn simple(value: f64) -> Self {
        Self {
            value,
            residual: 0.0,
            iterations: 0,
            bracket: None,
            schedule: Vec::new(),
            cross_check: None,
            warnings: Vec::new(),
            descent_ok: true,
            field: None,
        }
    }
}

fn validate_exponent(p: f64, dim: usize) -> Result<()> {
    if !(p >= 1.0 && p <= dim as f64) {
        return Err(Error::Precondition(format!(
            "exponent must satisfy 1 <= p <= N = {dim}, got {p}"
        )));
    }
    Ok(())
}

/// Exponent actually solved: p = 1 is smoothed to 1 + epsilon.
fn effective_p(p: f64, opts: &SolveOptions, warnings: &mut Vec<String>) -> f64 {
    if (p - 1.0).abs() < 1e-12 {
        warnings.push(format!(
            "p = 1 solved at p = {} as an upper proxy",
            1.0 + opts.p1_epsilon
        ));
        1.0 + opts.p1_epsilon
    } else {
        p
    }
}

fn free_init_from_field(prob: &DirichletProblem, field: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; prob.n_free()];
    for (idx, class) in prob.class.iter().enumerate() {
        if let CellClass::Free(d) = class {
            out[*d as usize] = field[idx];
        }
    }
    out
}

/// Minimize the quadratic energy; banded Cholesky on small 2-d problems,
/// Jacobi-preconditioned CG otherwise.
fn solve_quadratic(prob: &DirichletProblem) -> Result<(Vec<f64>, usize, f64)> {
    let n = prob.n_free();
    let (rhs, diag) = prob.quadratic_rhs_diag();

    // bandwidth of the dof numbering (cell order)
    let mut bw = 0usize;
    for t in &prob.terms {
        if t.center >= 0 {
            for a in 0..prob.dim {
                if t.fwd[a] >= 0 {
                    bw = bw.max((t.fwd[a] - t.center).unsigned_abs() as usize);
                }
            }
        }
    }
    if prob.dim <= 2 && n <= 128 * 128 && bw <= 192 {
        let mut m = BandedSpd::zeros(n, bw);
        for (i, d) in diag.iter().enumerate() {
            m.add(i, i, *d);
        }
        for t in &prob.terms {
            if t.center < 0 {
                continue;
            }
            for a in 0..prob.dim {
                if t.fwd[a] >= 0 && t.inv_d[a] != 0.0 {
                    let w = (t.inv_d[a] as f64 * prob.spacing).powi(2);
                    m.add(t.center as usize, t.fwd[a] as usize, -w);
                }
            }
        }
        m.factor()?;
        let x = m.solve(&rhs);
        return Ok((x, 1, 0.0));
    }
    let mut x = vec![0.0; n];
    let out = conjugate_gradient(
        |v, w| prob.quadratic_apply(v, w),
        &rhs,
        &mut x,
        &diag,
        1e-10,
        60_000,
    )?;
    Ok((x, out.iterations, out.rel_residual))
}

/// p-capacity of `sigma` relative to the environment `env`, both given as
/// masks on a shared lattice. The minimizer is pinned to 1 on `sigma`, to 0
/// outside `env`, and clamped to [0, 1] (truncation decreases the energy).
pub fn relative_capacity(
    sigma: &GridDomain,
    env: &GridDomain,
    p: f64,
    opts: &SolveOptions,
) -> Result<CapacityResult> {
    validate_exponent(p, env.dim())?;
    if sigma.is_empty() {
        return Ok(CapacityResult::simple(0.0));
    }
    if !sigma.is_subset_of(env) {
        return Err(Error::Precondition(
            "constraint set must lie inside the environment".into(),
        ));
    }
    let mut warnings = Vec::new();
    let p_eff = effective_p(p, opts, &mut warnings);
    let prob = DirichletProblem::assemble(env, Some(sigma))?;

    let (x, iterations, residual, descent_ok) = if (p_eff - 2.0).abs() < 1e-12 {
        let (x, it, res) = solve_quadratic(&prob)?;
        (x, it, res, true)
    } else {
        // warm start from the quadratic minimizer
        let (x2, _, _) = solve_quadratic(&prob)?;
        let mut x = x2;
        let h = prob.spacing;
        let mu2 = (1e-9 / h) * (1e-9 / h);
        let params = DescentParams {
            tolerance: opts.tolerance,
            max_iterations: opts.max_iterations,
            initial_step: h * h / (8.0 * prob.dim as f64 * p_eff),
            ..Default::default()
        };
        let out = projected_bb_descent(
            |v, g| prob.energy_and_grad(v, p_eff, mu2, g),
            |v| prob.energy(v, p_eff, mu2),
            &mut x,
            &params,
        )?;
        (x, out.iterations, out.residual, out.descent_ok)
    };
    let mu2 = 0.0;
    let value = prob.energy(&x, p_eff, mu2);
    let field = opts.keep_field.then(|| prob.full_field(&x));
    Ok(CapacityResult {
        value,
        residual,
        iterations,
        bracket: None,
        schedule: Vec::new(),
        cross_check: None,
        warnings,
        descent_ok,
        field,
    })
}

/// Sharp constant of the (p, q) Poincaré-Sobolev inequality on the domain:
/// the minimum of the p-Dirichlet energy over fields vanishing outside the
/// domain with unit discrete L^q norm.
pub fn poincare_constant(
    omega: &GridDomain,
    p: f64,
    q: f64,
    opts: &SolveOptions,
) -> Result<CapacityResult> {
    validate_exponent(p, omega.dim())?;
    if omega.is_empty() {
        return Err(Error::Precondition(
            "the Poincaré constant of the empty set is undefined".into(),
        ));
    }
    let n = omega.dim() as f64;
    if q < 1.0 {
        return Err(Error::Precondition("q must be at least 1".into()));
    }
    if p < n {
        let p_star = n * p / (n - p);
        if q >= p_star {
            return Err(Error::Precondition(format!(
                "q = {q} is supercritical: need q < p* = {p_star}"
            )));
        }
    } else if q > 10.0 {
        // p = N allows any finite q; degenerate normalizations are cut off
        return Err(Error::Unsupported(
            "q capped at 10 for the conformal exponent (normalization degenerates)".into(),
        ));
    }
    let mut warnings = Vec::new();
    let p_eff = effective_p(p, opts, &mut warnings);
    let q_eff = if (q - 1.0).abs() < 1e-12 && (p - 1.0).abs() < 1e-12 {
        1.0 + opts.p1_epsilon
    } else {
        q
    };
    let prob = DirichletProblem::assemble(omega, None)?;
    let out = if (p_eff - 2.0).abs() < 1e-12 && (q_eff - 2.0).abs() < 1e-12 {
        first_eigenvalue_quadratic(&prob, 1e-10, 300)?
    } else {
        let quad = first_eigenvalue_quadratic(&prob, 1e-8, 200)?;
        let init = free_init_from_field(&prob, &quad.field);
        first_eigenvalue_general(
            &prob,
            p_eff,
            q_eff,
            Some(init),
            opts.tolerance,
            opts.max_iterations,
        )?
    };
    Ok(CapacityResult {
        value: out.lambda,
        residual: out.residual,
        iterations: out.iterations,
        bracket: None,
        schedule: Vec::new(),
        cross_check: None,
        warnings,
        descent_ok: out.descent_ok,
        field: opts.keep_field.then_some(out.field),
    })
}

/// Hull of a mask: centroid-ish reference point and max distance to it.
fn mask_hull(sigma: &GridDomain) -> Option<([f64; 3], f64)> {
    let mut lo = [f64::INFINITY; 3];
    let mut hi = [f64::NEG_INFINITY; 3];
    let mut any = false;
    for cell in sigma.iter_cells() {
        if sigma.occupied(cell) {
            any = true;
            let c = sigma.cell_center(cell);
            for a in 0..sigma.dim() {
                lo[a] = lo[a].min(c[a]);
                hi[a] = hi[a].max(c[a]);
            }
        }
    }
    if !any {
        return None;
    }
    let mut center = [0.0; 3];
    for a in 0..sigma.dim() {
        center[a] = (lo[a] + hi[a]) / 2.0;
    }
    let mut r = 0.0f64;
    for cell in sigma.iter_cells() {
        if sigma.occupied(cell) {
            let c = sigma.cell_center(cell);
            let d2: f64 = (0..sigma.dim()).map(|a| (c[a] - center[a]).powi(2)).sum();
            r = r.max(d2.sqrt());
        }
    }
    Some((center, r))
}

/// Absolute inhomogeneous p-capacity of `sigma`: gradient energy plus the
/// L^p norm, minimized over fields equal to 1 on `sigma` and vanishing
/// outside `bounds` (which stands in for the whole space). The sensitivity
/// to enlarging the box is reported as the bracket.
pub fn inhomogeneous_capacity(
    sigma: &GridDomain,
    bounds: BoxBounds,
    p: f64,
    opts: &SolveOptions,
) -> Result<CapacityResult> {
    if sigma.is_empty() {
        return Ok(CapacityResult::simple(0.0));
    }
    let dim = sigma.dim();
    if !(p >= 1.0) {
        return Err(Error::Precondition("p must be at least 1".into()));
    }
    let mut warnings = Vec::new();
    let (center, hull_r) = mask_hull(sigma).expect("nonempty");
    let diam = 2.0 * hull_r;
    for a in 0..dim {
        let margin = (center[a] - hull_r - bounds.min[a]).min(bounds.max[a] - center[a] - hull_r);
        if margin < diam {
            warnings.push(format!(
                "box margin {margin:.4} along axis {a} is below the set diameter {diam:.4}"
            ));
        }
    }
    let value = inhomogeneous_on_box(sigma, bounds, p, opts, &mut warnings)?;
    let big = bounds.inflate(0.5 * diam.max(4.0 * sigma.spacing()), dim);
    let value_big = inhomogeneous_on_box(sigma, big, p, opts, &mut warnings)?;
    Ok(CapacityResult {
        value,
        residual: 0.0,
        iterations: 0,
        bracket: Some((value_big.min(value), value)),
        schedule: vec![(bounds.side(0), value), (big.side(0), value_big)],
        cross_check: None,
        warnings,
        descent_ok: true,
        field: None,
    })
}

fn inhomogeneous_on_box(
    sigma: &GridDomain,
    bounds: BoxBounds,
    p: f64,
    opts: &SolveOptions,
    warnings: &mut Vec<String>,
) -> Result<f64> {
    let p_eff = effective_p(p, opts, &mut Vec::new());
    let sigma_emb = sigma.embed(bounds);
    let mut env = sigma_emb.clone();
    for v in env.occupancy_mut().iter_mut() {
        *v = true;
    }
    let prob = DirichletProblem::assemble(&env, Some(&sigma_emb))?;
    let h = prob.spacing;
    let cell_vol = h.powi(prob.dim as i32);
    let sigma_vol = sigma_emb.volume();
    let mu2 = (1e-9 / h) * (1e-9 / h);

    if (p_eff - 2.0).abs() < 1e-12 {
        // operator gains a zeroth-order diagonal h^2 (in face-weight units)
        let (rhs, mut diag) = prob.quadratic_rhs_diag();
        for d in diag.iter_mut() {
            *d += h * h;
        }
        let apply = |v: &[f64], w: &mut [f64]| {
            prob.quadratic_apply(v, w);
            for i in 0..v.len() {
                w[i] += h * h * v[i];
            }
        };
        let mut x = vec![0.0; prob.n_free()];
        conjugate_gradient(apply, &rhs, &mut x, &diag, 1e-10, 60_000)?;
        let grad_part = prob.energy(&x, 2.0, 0.0);
        let mass_part = x.iter().map(|v| v * v).sum::<f64>() * cell_vol;
        return Ok(grad_part + mass_part + sigma_vol);
    }
    let params = DescentParams {
        tolerance: opts.tolerance,
        max_iterations: opts.max_iterations,
        initial_step: h * h / (8.0 * prob.dim as f64 * p_eff),
        ..Default::default()
    };
    let mut x = vec![0.0; prob.n_free()];
    let out = projected_bb_descent(
        |v, g| {
            let e = prob.energy_and_grad(v, p_eff, mu2, g);
            let mut mass = 0.0;
            for i in 0..v.len() {
                mass += v[i].abs().powf(p_eff);
                g[i] += p_eff * v[i].abs().powf(p_eff - 1.0) * v[i].signum() * cell_vol;
            }
            e + mass * cell_vol
        },
        |v| {
            prob.energy(v, p_eff, mu2)
                + v.iter().map(|w| w.abs().powf(p_eff)).sum::<f64>() * cell_vol
        },
        &mut x,
        &params,
    )?;
    let _ = warnings;
    Ok(out.objective + sigma_vol)
}

/// Absolute homogeneous p-capacity (p < N, or p = N = 1): relative solves
/// against an increasing schedule of ball envelopes, then the far-field tail
/// `cap(S; B_R) = cap(S) / (1 - (rho/R)^{(N-p)/(p-1)})^{p-1}` is fitted from
/// the last two solves. The sandwich against the largest envelope is the
/// reported bracket.
pub fn absolute_capacity(sigma: &GridDomain, p: f64, opts: &SolveOptions) -> Result<CapacityResult> {
    let dim = sigma.dim();
    validate_exponent(p, dim)?;
    if p >= dim as f64 && dim >= 2 {
        return Err(Error::Unsupported(
            "the absolute capacity vanishes identically for p >= N >= 2; the restriction p < N is unavoidable".into(),
        ));
    }
    if sigma.is_empty() {
        return Ok(CapacityResult::simple(0.0));
    }
    let mut warnings = Vec::new();
    let p_eff = effective_p(p, opts, &mut warnings);
    let (center, hull_r) = mask_hull(sigma).expect("nonempty");
    let hull_r = hull_r.max(2.0 * sigma.spacing());
    let r0 = 2.0 * hull_r;

    let budget = opts.cells_per_axis[dim - 1].max(32);
    let mut schedule = Vec::new();
    for k in [1.0, 2.0, 4.0] {
        let big_r = k * r0;
        // grow the spacing with the envelope to keep the cell count bounded
        let h = sigma.spacing().max(2.0 * big_r / budget as f64);
        let factor = (h / sigma.spacing()).round().max(1.0) as usize;
        let sigma_coarse = sigma.coarsen(factor);
        let bounds = BoxBounds::centered(center, big_r + 2.0 * sigma_coarse.spacing(), dim);
        let sigma_emb = sigma_coarse.embed(bounds);
        let mut env = GridDomain::empty(dim, sigma_emb.spacing(), sigma_emb.bounds())?;
        for cell in env.clone().iter_cells() {
            let c = env.cell_center(cell);
            let d2: f64 = (0..dim).map(|a| (c[a] - center[a]).powi(2)).sum();
            if d2 < big_r * big_r {
                env.set(cell, true);
            }
        }
        let env = env.union(&sigma_emb)?; // guard against coarsening overhang
        let res = relative_capacity(&sigma_emb, &env, p_eff.min(dim as f64), opts)?;
        schedule.push((big_r, res.value));
    }
    for w in schedule.windows(2) {
        if w[1].1 > w[0].1 * 1.02 {
            warnings.push(format!(
                "schedule not monotone: cap at R = {} exceeds cap at R = {}",
                w[1].0, w[0].0
            ));
        }
    }
    let (r1, v1) = schedule[schedule.len() - 2];
    let (r2, v2) = schedule[schedule.len() - 1];
    let kappa = (dim as f64 - p_eff) / (p_eff - 1.0);
    let tail = fit_far_field(v1, v2, r1, r2, kappa, p_eff);
    let value = match tail {
        Some(c) => c.min(v2),
        None => {
            warnings.push("far-field fit failed; using the largest envelope".into());
            v2
        }
    };
    // sandwich bracket from the largest envelope
    let ctx = ConstantsContext::new(dim, p.min(dim as f64))?;
    let vol_e = unit_ball_volume(dim) * r2.powf(dim as f64);
    let dist = r2 - hull_r;
    let factor = absolute_sandwich_factor(&ctx, vol_e, dist)?;
    Ok(CapacityResult {
        value,
        residual: 0.0,
        iterations: 0,
        bracket: Some((v2 / factor, v2)),
        schedule,
        cross_check: None,
        warnings,
        descent_ok: true,
        field: None,
    })
}

/// Solve `v1 (1 - z)^{p-1} = v2 (1 - z s)^{p-1}` for `z = (rho/R1)^kappa`,
/// returning the limit capacity `v1 (1 - z)^{p-1}`.
fn fit_far_field(v1: f64, v2: f64, r1: f64, r2: f64, kappa: f64, p: f64) -> Option<f64> {
    if !(v1 > v2) || kappa <= 0.0 {
        return None;
    }
    let s = (r1 / r2).powf(kappa);
    let g = |z: f64| v1 * (1.0 - z).powf(p - 1.0) - v2 * (1.0 - z * s).powf(p - 1.0);
    let (mut lo, mut hi) = (0.0, 1.0 - 1e-12);
    if g(lo) <= 0.0 || g(hi) >= 0.0 {
        return None;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if g(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let z = 0.5 * (lo + hi);
    Some(v1 * (1.0 - z).powf(p - 1.0))
}

/// Cheeger constant: `lambda_{1+e,1+e}` for a decreasing schedule of
/// smoothing exponents, extrapolated linearly to e = 0, cross-checked by
/// perimeter/volume over the family of maximal inscribed-ball erosions.
pub fn cheeger_constant(omega: &GridDomain, opts: &SolveOptions) -> Result<CapacityResult> {
    if omega.is_empty() {
        return Err(Error::Precondition(
            "the Cheeger constant of the empty set is undefined".into(),
        ));
    }
    let eps_schedule = [0.2, 0.1, 0.05];
    let mut schedule = Vec::new();
    let mut iterations = 0usize;
    let mut residual = 0.0f64;
    let mut descent_ok = true;
    for &eps in &eps_schedule {
        let pe = 1.0 + eps;
        let res = poincare_constant(omega, pe, pe, opts)?;
        iterations += res.iterations;
        residual = residual.max(res.residual);
        descent_ok &= res.descent_ok;
        schedule.push((pe, res.value));
    }
    let l_mid = schedule[1].1;
    let l_fine = schedule[2].1;
    let value = 2.0 * l_fine - l_mid; // linear extrapolation in epsilon
    let cross = opening_perimeter_ratio(omega);
    Ok(CapacityResult {
        value,
        residual,
        iterations,
        bracket: Some((value.min(l_fine), value.max(l_fine))),
        schedule,
        cross_check: cross,
        warnings: Vec::new(),
        descent_ok,
        field: None,
    })
}

/// `min_rho perimeter/volume` over morphological openings of the mask, with
/// the staircase perimeter corrected by the isotropic factor (pi/4 in 2-d,
/// 2/3 in 3-d).
fn opening_perimeter_ratio(omega: &GridDomain) -> Option<f64> {
    let d2 = crate::shapes::edt::squared_distance_to_complement(omega);
    let h = omega.spacing();
    let r_in = d2.iter().cloned().fold(0.0, f64::max).sqrt() * h;
    if r_in <= 0.0 {
        return None;
    }
    let iso = match omega.dim() {
        2 => std::f64::consts::FRAC_PI_4,
        3 => 2.0 / 3.0,
        _ => 1.0,
    };
    let mut best: Option<f64> = None;
    for frac in [0.0, 0.25, 0.5, 0.75] {
        let rho = frac * r_in;
        let mut opened = omega.clone();
        if rho > 0.0 {
            // erode by rho, then dilate by rho
            let mut eroded = omega.clone();
            let thr = (rho / h) * (rho / h);
            for (i, v) in eroded.occupancy_mut().iter_mut().enumerate() {
                *v = d2[i] > thr;
            }
            if eroded.is_empty() {
                continue;
            }
            let mut inv = eroded.clone();
            for v in inv.occupancy_mut().iter_mut() {
                *v = !*v;
            }
            let d2_out = crate::shapes::edt::squared_distance_to_complement(&inv);
            for (i, v) in opened.occupancy_mut().iter_mut().enumerate() {
                *v = !(d2_out[i] > thr);
            }
        }
        let vol = opened.volume();
        if vol <= 0.0 {
            continue;
        }
        // count boundary faces
        let mut faces = 0usize;
        for idx in 0..opened.len() {
            if !opened.occupied_idx(idx) {
                continue;
            }
            let cell = opened.cell_of_index(idx);
            for a in 0..opened.dim() {
                for dir in [-1i64, 1] {
                    let np = cell[a] as i64 + dir;
                    let outside = np < 0
                        || np >= opened.shape()[a] as i64
                        || !opened.occupied({
                            let mut c = cell;
                            c[a] = np as usize;
                            c
                        });
                    if outside {
                        faces += 1;
                    }
                }
            }
        }
        let perim = faces as f64 * h.powi(omega.dim() as i32 - 1) * iso;
        let ratio = perim / vol;
        best = Some(best.map_or(ratio, |b: f64| b.min(ratio)));
    }
    best
}

//! Closed-form capacities, comparison constants and explicit parameters.
//!
//! Everything here is a pure function of its inputs; quantities that have no
//! closed form (Poincaré constants of general sets, capacities of general
//! bodies) are taken as arguments and are computed by the solver module.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use crate::error::{Error, Result};
use crate::shapes::StandardBody;

/// Volume of the k-dimensional unit ball (`w_0 = 1`, `w_1 = 2`, `w_2 = pi`).
pub fn unit_ball_volume(k: usize) -> f64 {
    match k {
        0 => 1.0,
        1 => 2.0,
        2 => std::f64::consts::PI,
        3 => 4.0 * std::f64::consts::PI / 3.0,
        _ => std::f64::consts::PI.powf(k as f64 / 2.0) / gamma(k as f64 / 2.0 + 1.0),
    }
}

/// Source of the sharp Sobolev constant `S_{N,p}`.
///
/// The classical closed form is the Bliss/Talenti constant for
/// `||u||_{p*} <= C ||grad u||_p`, reported as `S = C^p`; for `p = 1` it is
/// the isoperimetric constant `C = (N w_N^{1/N})^{-1}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SobolevConstant {
    ClosedForm,
    UserSupplied(f64),
}

/// Dimension, exponent and the constants every formula needs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstantsContext {
    n: usize,
    p: f64,
    sobolev: SobolevConstant,
}

impl ConstantsContext {
    pub fn new(n: usize, p: f64) -> Result<Self> {
        Self::with_sobolev(n, p, SobolevConstant::ClosedForm)
    }

    pub fn with_sobolev(n: usize, p: f64, sobolev: SobolevConstant) -> Result<Self> {
        if !(1..=3).contains(&n) {
            return Err(Error::Precondition(format!(
                "dimension must be 1, 2 or 3, got {n}"
            )));
        }
        if !(p >= 1.0 && p <= n as f64) {
            return Err(Error::Precondition(format!(
                "exponent must satisfy 1 <= p <= N, got p = {p}, N = {n}"
            )));
        }
        if let SobolevConstant::UserSupplied(s) = sobolev {
            if !(s > 0.0) {
                return Err(Error::Precondition(
                    "user-supplied Sobolev constant must be positive".into(),
                ));
            }
        }
        Ok(Self { n, p, sobolev })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn omega_n(&self) -> f64 {
        unit_ball_volume(self.n)
    }

    pub fn sobolev_source(&self) -> SobolevConstant {
        self.sobolev
    }

    /// `S_{N,p}`, defined for p < N only.
    pub fn sobolev_constant(&self) -> Result<f64> {
        if self.p >= self.n as f64 {
            return Err(Error::Unsupported(
                "the sharp Sobolev constant requires p < N".into(),
            ));
        }
        Ok(match self.sobolev {
            SobolevConstant::UserSupplied(s) => s,
            SobolevConstant::ClosedForm => sobolev_closed_form(self.n, self.p),
        })
    }
}

/// Bliss/Talenti sharp constant, as `S = C^p` with
/// `C = pi^{-1/2} N^{-1/p} ((p-1)/(N-p))^{1-1/p}
///      (Gamma(1+N/2) Gamma(N) / (Gamma(N/p) Gamma(1+N-N/p)))^{1/N}`
/// and the isoperimetric value for p = 1.
pub fn sobolev_closed_form(n: usize, p: f64) -> f64 {
    let nf = n as f64;
    if (p - 1.0).abs() < 1e-14 {
        return 1.0 / (nf * unit_ball_volume(n).powf(1.0 / nf));
    }
    let c = std::f64::consts::PI.powf(-0.5)
        * nf.powf(-1.0 / p)
        * ((p - 1.0) / (nf - p)).powf(1.0 - 1.0 / p)
        * (gamma(1.0 + nf / 2.0) * gamma(nf) / (gamma(nf / p) * gamma(1.0 + nf - nf / p)))
            .powf(1.0 / nf);
    c.powf(p)
}

/// A named constant together with the quantities it was built from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonConstants {
    pub which: String,
    pub value: f64,
    pub inputs: BTreeMap<String, f64>,
}

impl ComparisonConstants {
    fn new(which: &str, value: f64, inputs: &[(&str, f64)]) -> Self {
        Self {
            which: which.to_string(),
            value,
            inputs: inputs
                .iter()
                .map(|(k, v)| (k.to_string(), *v))
                .collect(),
        }
    }
}

/// `cap_p` of the closed ball `B_r` relative to the concentric ball `B_R`:
///
/// * p = 1:      `N w_N r^{N-1}`
/// * 1 < p < N:  `N w_N ((N-p)/(p-1))^{p-1} r^{N-p} / (1 - (r/R)^{(N-p)/(p-1)})^{p-1}`
/// * p = N:      `N w_N (log(R/r))^{1-N}`
pub fn cap_ball_relative(ctx: &ConstantsContext, r: f64, big_r: f64) -> Result<f64> {
    if !(r > 0.0 && big_r > r) {
        return Err(Error::Precondition(format!(
            "need 0 < r < R, got r = {r}, R = {big_r}"
        )));
    }
    let n = ctx.n as f64;
    let p = ctx.p;
    let nw = n * ctx.omega_n();
    if (p - 1.0).abs() < 1e-14 {
        Ok(nw * r.powf(n - 1.0))
    } else if (p - n).abs() < 1e-14 {
        Ok(nw * (big_r / r).ln().powf(1.0 - n))
    } else {
        let k = (n - p) / (p - 1.0);
        Ok(nw * k.powf(p - 1.0) * r.powf(n - p) / (1.0 - (r / big_r).powf(k)).powf(p - 1.0))
    }
}

/// Absolute homogeneous capacity of a closed ball (the `R -> infinity` limit
/// of [`cap_ball_relative`]); requires p < N or p = N = 1.
pub fn cap_ball_absolute(ctx: &ConstantsContext, r: f64) -> Result<f64> {
    if !(r > 0.0) {
        return Err(Error::Precondition("ball radius must be positive".into()));
    }
    let n = ctx.n as f64;
    let p = ctx.p;
    if p >= n && ctx.n >= 2 {
        return Err(Error::Unsupported(
            "the absolute capacity vanishes identically for p >= N >= 2; the restriction p < N is unavoidable".into(),
        ));
    }
    let nw = n * ctx.omega_n();
    if (p - 1.0).abs() < 1e-14 {
        Ok(nw * r.powf(n - 1.0))
    } else {
        let k = (n - p) / (p - 1.0);
        Ok(nw * k.powf(p - 1.0) * r.powf(n - p))
    }
}

/// Homogeneity of the relative capacity: scaling lengths by `t` multiplies
/// capacities by `t^{N-p}`.
pub fn capacity_scaling(ctx: &ConstantsContext, value: f64, t: f64) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::Precondition("scale must be positive".into()));
    }
    Ok(t.powf(ctx.n as f64 - ctx.p) * value)
}

/// The two constants comparing the ball inradius with the inradius relative
/// to a standard body:
///
/// `c = cap_ratio * (2 / lambda_K^{1/p} + 1)^{-p}` and
/// `d = max(1, r_max^{N-p} * cap_ratio * ((2/gap) * r_max / lambda_B1^{1/p} + 1)^p)`,
/// with `cap_ratio = cap_p(B_1; B_2) / cap_p(K; K_2)` and `gap` the distance
/// from the body closure to the boundary of its doubled copy.
pub fn body_constants(
    ctx: &ConstantsContext,
    cap_ratio: f64,
    lambda_k: f64,
    lambda_b1: f64,
    body: &StandardBody,
) -> Result<(ComparisonConstants, ComparisonConstants)> {
    if !(cap_ratio > 0.0 && lambda_k > 0.0 && lambda_b1 > 0.0) {
        return Err(Error::Precondition(
            "capacity ratio and Poincaré constants must be positive".into(),
        ));
    }
    let gap = body.inner_gap();
    if !(gap > 0.0) {
        return Err(Error::Degenerate("body has zero inner gap".into()));
    }
    let p = ctx.p;
    let r_max = body.r_max();
    let c = cap_ratio * (2.0 / lambda_k.powf(1.0 / p) + 1.0).powf(-p);
    let d = (r_max.powf(ctx.n as f64 - p)
        * cap_ratio
        * ((2.0 / gap) * r_max / lambda_b1.powf(1.0 / p) + 1.0).powf(p))
    .max(1.0);
    let inputs = [
        ("cap_ratio", cap_ratio),
        ("lambda_K", lambda_k),
        ("lambda_B1", lambda_b1),
        ("r_max", r_max),
        ("inner_gap", gap),
        ("p", p),
        ("N", ctx.n as f64),
    ];
    Ok((
        ComparisonConstants::new("c", c, &inputs),
        ComparisonConstants::new("d", d, &inputs),
    ))
}

/// Constants comparing the relative-capacity inradius with the one built on
/// the absolute capacity:
///
/// `alpha = 2^{1-p} (1 + (2 w_N)^{p/N} S_{N,p})^{-1}` and
/// `beta = (1 - (1/2)^{(N-p)/(p-1)})^{1-p}` for 1 < p < N, `beta = 1` at p = 1.
pub fn ms_constants(
    ctx: &ConstantsContext,
) -> Result<(ComparisonConstants, ComparisonConstants)> {
    let n = ctx.n as f64;
    let p = ctx.p;
    if p >= n && ctx.n >= 2 {
        return Err(Error::Unsupported(
            "the restriction p < N is unavoidable for the absolute capacity".into(),
        ));
    }
    let (alpha, s) = if ctx.n == 1 {
        // 1-d: the sandwich factor is 1 + |B_2|/dist * 1/2 = 1 + (4r)/r / 2 = 3
        (1.0 / 3.0, f64::NAN)
    } else {
        let s = ctx.sobolev_constant()?;
        (
            2f64.powf(1.0 - p) / (1.0 + (2.0 * ctx.omega_n()).powf(p / n) * s),
            s,
        )
    };
    let beta = if (p - 1.0).abs() < 1e-14 {
        1.0
    } else {
        (1.0 - 0.5f64.powf((n - p) / (p - 1.0))).powf(1.0 - p)
    };
    let inputs = [("p", p), ("N", n), ("S_Np", s)];
    Ok((
        ComparisonConstants::new("alpha", alpha, &inputs),
        ComparisonConstants::new("beta", beta, &inputs),
    ))
}

/// Factor in the sandwich `cap_p(S) <= cap_p(S; E) <= factor * cap_p(S)`:
/// `2^{p-1} (1 + |E|^{p/N} S_{N,p} / dist^p)` for N >= 2 and
/// `1 + |E| / (2 dist)` in one dimension.
pub fn absolute_sandwich_factor(ctx: &ConstantsContext, vol_e: f64, dist: f64) -> Result<f64> {
    if !(vol_e > 0.0 && dist > 0.0) {
        return Err(Error::Precondition(
            "environment volume and distance must be positive".into(),
        ));
    }
    if ctx.n == 1 {
        return Ok(1.0 + vol_e / (2.0 * dist));
    }
    let p = ctx.p;
    let s = ctx.sobolev_constant()?;
    Ok(2f64.powf(p - 1.0) * (1.0 + vol_e.powf(p / ctx.n as f64) * s / dist.powf(p)))
}

/// Factors in the sandwich between the relative capacity and the absolute
/// inhomogeneous capacity:
/// `lambda_E/(1+lambda_E) * C_p(S) <= cap_p(S;E) <= 2^{p-1} max(1, dist^{-p}) C_p(S)`.
pub fn inhomogeneous_sandwich_factors(
    ctx: &ConstantsContext,
    lambda_e: f64,
    dist: f64,
) -> (f64, f64) {
    let lower = lambda_e / (1.0 + lambda_e);
    let upper = 2f64.powf(ctx.p - 1.0) * 1f64.max(dist.powf(-ctx.p));
    (lower, upper)
}

/// Rescaling bounds for the inhomogeneous capacity:
/// `min(t^{N-p}, t^N) C_p(S) <= C_p(tS) <= max(t^{N-p}, t^N) C_p(S)`.
pub fn inhomogeneous_rescaling_bounds(ctx: &ConstantsContext, t: f64) -> Result<(f64, f64)> {
    if !(t > 0.0) {
        return Err(Error::Precondition("scale must be positive".into()));
    }
    let a = t.powf(ctx.n as f64 - ctx.p);
    let b = t.powf(ctx.n as f64);
    Ok((a.min(b), a.max(b)))
}

/// Cut-off factors comparing capacities relative to a ball and to a body:
///
/// * `ball_to_body`: `cap_p(S; B_rho) <= factor * cap_p(S; K_rho)` with
///   `factor = (rho/dist * lambda_K^{-1/p} + 1)^p`;
/// * `body_to_ball`: `cap_p(S; K_rho) <= factor * cap_p(S; B_{r_max rho})` with
///   `factor = (rho/dist * r_max / lambda_B1^{1/p} + 1)^p`.
///
/// `dist` is the distance from `S` to the boundary of the respective
/// environment.
pub fn body_capacity_factors(
    ctx: &ConstantsContext,
    body: &StandardBody,
    lambda_k: f64,
    lambda_b1: f64,
    dist: f64,
    rho: f64,
) -> Result<(f64, f64)> {
    if !(dist > 0.0 && rho > 0.0 && lambda_k > 0.0 && lambda_b1 > 0.0) {
        return Err(Error::Precondition(
            "distances, scale and Poincaré constants must be positive".into(),
        ));
    }
    let p = ctx.p;
    let ball_to_body = (rho / dist / lambda_k.powf(1.0 / p) + 1.0).powf(p);
    let body_to_ball = (rho / dist * body.r_max() / lambda_b1.powf(1.0 / p) + 1.0).powf(p);
    Ok((ball_to_body, body_to_ball))
}

/// The explicit constants of the two-sided comparison between capacitary and
/// classical inradius under a measure density condition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasureDensityConstants {
    /// `A = 2 sqrt(N) (2 + min(1, alpha))`, always `<= 6 sqrt(N)`.
    pub a: ComparisonConstants,
    /// Tiling length `l = r_Omega (2 + min(1, alpha))`.
    pub ell: ComparisonConstants,
    /// Threshold parameter `gamma_0 < 1`.
    pub gamma0: ComparisonConstants,
}

/// `A`, `l` and `gamma_0` from the density index `theta_star`, the decay
/// order `t`, the density radius `r0` and the classical inradius, with
/// `alpha = r0 / r_Omega`:
///
/// `gamma_0 = (lambda_p(B_2) w_N / cap_p(B_1;B_2))
///            * [ (1/(4 * 2^{t/N} sqrt(N))) * min(alpha^{-t/N}, alpha) / (2 + min(1, alpha)) ]^N
///            * theta_star`.
pub fn theorem52_constants(
    ctx: &ConstantsContext,
    t: f64,
    theta_star: f64,
    r0: f64,
    r_omega: f64,
    cap12: f64,
    lambda_b2: f64,
) -> Result<MeasureDensityConstants> {
    if !(theta_star > 0.0 && theta_star <= 1.0) {
        return Err(Error::Precondition(
            "the density index must lie in (0, 1]".into(),
        ));
    }
    if !(r0 > 0.0) || !(t >= 0.0) || !(cap12 > 0.0) || !(lambda_b2 > 0.0) {
        return Err(Error::Precondition(
            "r0, cap_p(B1;B2) and lambda_p(B2) must be positive, t >= 0".into(),
        ));
    }
    if !r_omega.is_finite() || !(r_omega > 0.0) {
        return Err(Error::Degenerate(
            "infinite inradius: the comparison constants are undefined".into(),
        ));
    }
    let n = ctx.n as f64;
    let alpha = r0 / r_omega;
    let m = 1f64.min(alpha);
    let a = 2.0 * n.sqrt() * (2.0 + m);
    let ell = r_omega * (2.0 + m);
    let bracket = (1.0 / (4.0 * 2f64.powf(t / n) * n.sqrt())) * alpha.powf(-t / n).min(alpha)
        / (2.0 + m);
    let gamma0 = (lambda_b2 * ctx.omega_n() / cap12) * bracket.powf(n) * theta_star;
    let inputs = [
        ("alpha", alpha),
        ("theta_star", theta_star),
        ("t", t),
        ("r0", r0),
        ("r_Omega", r_omega),
        ("cap_p(B1;B2)", cap12),
        ("lambda_p(B2)", lambda_b2),
        ("p", ctx.p),
        ("N", n),
    ];
    Ok(MeasureDensityConstants {
        a: ComparisonConstants::new("A", a, &inputs),
        ell: ComparisonConstants::new("ell", ell, &inputs),
        gamma0: ComparisonConstants::new("gamma0", gamma0, &inputs),
    })
}

/// Equivalence factor between the boundary-based and complement-based
/// density indices: `theta <= theta_star <= 2^{N+t} theta`.
pub fn theta_equivalence_factor(n: usize, t: f64) -> f64 {
    2f64.powf(n as f64 + t)
}

/// Output of [`funnel_index_bound`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FunnelIndexBound {
    /// Density radius `r0 = sqrt(h0^2 + (h0/delta)^{2/beta})`.
    pub r0: f64,
    /// Decay order `t = (N-1)(1/beta - 1)`.
    pub t: f64,
    /// `c_{N,beta} = (w_{N-1}/w_N) (beta/(N-1+beta)) (1/sqrt 2)^{(N-1+beta)/beta}`.
    pub c_n_beta: f64,
    /// Lower bound on the density index `theta_star(t)`.
    pub lower_bound: f64,
}

/// Density index guaranteed by a uniform exterior funnel condition with
/// exponent `beta`, opening `delta` and height `h0`:
///
/// `theta_star >= c_{N,beta} min( (h0^{1-beta}/delta)^{(N-1)/beta^2},
///                                (delta/h0^{1-beta})^{1/beta} )`.
pub fn funnel_index_bound(n: usize, beta: f64, delta: f64, h0: f64) -> Result<FunnelIndexBound> {
    if !(beta > 0.0 && beta <= 1.0) || !(delta > 0.0) || !(h0 > 0.0) {
        return Err(Error::Precondition(
            "need 0 < beta <= 1, delta > 0, h0 > 0".into(),
        ));
    }
    let nf = n as f64;
    let r0 = (h0 * h0 + (h0 / delta).powf(2.0 / beta)).sqrt();
    let t = (nf - 1.0) * (1.0 / beta - 1.0);
    let c_n_beta = unit_ball_volume(n - 1) / unit_ball_volume(n) * (beta / (nf - 1.0 + beta))
        * (1.0 / 2f64.sqrt()).powf((nf - 1.0 + beta) / beta);
    let u = h0.powf(1.0 - beta) / delta;
    let lower_bound = c_n_beta * u.powf((nf - 1.0) / (beta * beta)).min(u.powf(-1.0 / beta));
    Ok(FunnelIndexBound {
        r0,
        t,
        c_n_beta,
        lower_bound,
    })
}

/// Constant of the Cheeger-type inequality between Poincaré constants:
/// `(p/q)^q (lambda_p)^{q/p} <= lambda_q` for `1 <= p < q`; returns `(p/q)^q`.
pub fn cheeger_type_constant(p: f64, q: f64) -> Result<f64> {
    if !(p >= 1.0 && q > p) {
        return Err(Error::Precondition(format!(
            "need 1 <= p < q, got p = {p}, q = {q}"
        )));
    }
    Ok((p / q).powf(q))
}

#[cfg(test)]
mod tests {
    use super::*;

    const J01: f64 = 2.404825557695773;

    fn ctx(n: usize, p: f64) -> ConstantsContext {
        ConstantsContext::new(n, p).unwrap()
    }

    #[test]
    fn cap_ball_p1_is_perimeter() {
        // N = 2, p = 1: N w_N r^{N-1} = 2 pi for any R
        for big_r in [1.5, 2.0, 10.0] {
            let v = cap_ball_relative(&ctx(2, 1.0), 1.0, big_r).unwrap();
            assert!((v - 2.0 * std::f64::consts::PI).abs() < 1e-12);
        }
    }

    #[test]
    fn cap_ball_n3_p2() {
        let v = cap_ball_relative(&ctx(3, 2.0), 1.0, 2.0).unwrap();
        assert!((v - 8.0 * std::f64::consts::PI).abs() < 1e-12);
    }

    #[test]
    fn cap_ball_conformal() {
        let v = cap_ball_relative(&ctx(2, 2.0), 1.0, 2.0).unwrap();
        let expected = 2.0 * std::f64::consts::PI / 2f64.ln();
        assert!((v - expected).abs() < 1e-12);
    }

    #[test]
    fn cap_ball_rejects_r_geq_big_r() {
        assert!(cap_ball_relative(&ctx(2, 2.0), 1.0, 1.0).is_err());
        assert!(cap_ball_relative(&ctx(2, 2.0), 2.0, 1.0).is_err());
    }

    #[test]
    fn cap_ball_nondecreasing_in_r_at_fixed_ratio() {
        for n in [2usize, 3] {
            for p in [1.0, 1.5, 2.0, n as f64] {
                let c = ctx(n, p);
                let mut last = 0.0;
                for k in 0..60 {
                    let r = 10f64.powf(-2.0 + 4.0 * k as f64 / 59.0);
                    let v = cap_ball_relative(&c, r, 2.0 * r).unwrap();
                    assert!(
                        v >= last - 1e-12 * v.abs(),
                        "N={n} p={p}: f({r}) = {v} < previous {last}"
                    );
                    last = v;
                }
            }
        }
    }

    #[test]
    fn cap_ball_tends_to_absolute_as_big_r_grows() {
        let c = ctx(3, 2.0);
        let absolute = cap_ball_absolute(&c, 1.0).unwrap();
        assert!((absolute - 4.0 * std::f64::consts::PI).abs() < 1e-12);
        let mut prev_err = f64::INFINITY;
        for big_r in [2.0, 8.0, 32.0, 128.0] {
            let v = cap_ball_relative(&c, 1.0, big_r).unwrap();
            let err = (v - absolute).abs();
            assert!(err < prev_err);
            prev_err = err;
        }
        assert!(prev_err < 1e-2 * absolute);
    }

    #[test]
    fn cap_ball_absolute_rejects_conformal() {
        assert!(matches!(
            cap_ball_absolute(&ctx(2, 2.0), 1.0),
            Err(Error::Unsupported(_))
        ));
    }

    #[test]
    fn scaling_rules() {
        let c3 = ctx(3, 2.0);
        let v = capacity_scaling(&c3, 4.0 * std::f64::consts::PI, 2.0).unwrap();
        assert!((v - 8.0 * std::f64::consts::PI).abs() < 1e-12);
        assert_eq!(capacity_scaling(&c3, 5.0, 1.0).unwrap(), 5.0);
        // p = N: conformal invariance
        let c2 = ctx(2, 2.0);
        assert!((capacity_scaling(&c2, 5.0, 7.3).unwrap() - 5.0).abs() < 1e-12);
    }

    #[test]
    fn body_constants_for_unit_ball() {
        // K = B1: cap ratio collapses to 1 and c = (2/lambda^{1/p} + 1)^{-p}
        let c = ctx(2, 2.0);
        let lambda_b1 = J01 * J01;
        let ball = StandardBody::ball(2);
        let (cc, dd) = body_constants(&c, 1.0, lambda_b1, lambda_b1, &ball).unwrap();
        // frozen from (2/j01 + 1)^{-2}
        assert!((cc.value - 0.29806414028978423).abs() < 1e-9, "c = {}", cc.value);
        assert!(cc.value <= 1.0 && dd.value >= 1.0);
        assert_eq!(cc.inputs["lambda_K"], lambda_b1);
    }

    #[test]
    fn ms_constants_values() {
        let (a, b) = ms_constants(&ctx(3, 2.0)).unwrap();
        assert!((b.value - 2.0).abs() < 1e-12);
        assert!(a.value <= 1.0 && a.value > 0.0);
        let (_, b1) = ms_constants(&ctx(2, 1.0)).unwrap();
        assert!((b1.value - 1.0).abs() < 1e-12);
        assert!(matches!(
            ms_constants(&ctx(2, 2.0)),
            Err(Error::Unsupported(_))
        ));
    }

    #[test]
    fn ms_alpha_vanishes_towards_conformal() {
        // with the closed-form S_{N,p} ~ (N-p)^{1-p} the constant alpha
        // collapses as p approaches N
        let mut prev = f64::INFINITY;
        for p in [2.0, 2.5, 2.8, 2.95, 2.99] {
            let (a, _) = ms_constants(&ctx(3, p)).unwrap();
            assert!(a.value < prev);
            prev = a.value;
        }
        assert!(prev < 5e-2, "alpha should collapse, got {prev}");
    }

    #[test]
    fn absolute_sandwich_values() {
        // dist -> infinity: factor -> 2^{p-1}
        let c = ctx(3, 2.0);
        let f = absolute_sandwich_factor(&c, 1.0, 1e9).unwrap();
        assert!((f - 2.0).abs() < 1e-6);
        // 1-d lemma display: 1 + |E|/dist * 1/2
        let c1 = ctx(1, 1.0);
        let f1 = absolute_sandwich_factor(&c1, 2.0, 1.0).unwrap();
        assert!((f1 - 2.0).abs() < 1e-12);
        // p = 1, N = 2 with the isoperimetric constant
        let c21 = ctx(2, 1.0);
        let s21 = c21.sobolev_constant().unwrap();
        assert!((s21 - 0.28209479177387814).abs() < 1e-12);
        let f21 = absolute_sandwich_factor(&c21, 4.0, 2.0).unwrap();
        assert!((f21 - (1.0 + 2.0 * s21 / 2.0)).abs() < 1e-12);
    }

    #[test]
    fn inhomogeneous_sandwich_values() {
        let c = ctx(2, 2.0);
        let (lo, _) = inhomogeneous_sandwich_factors(&c, 1e12, 1.0);
        assert!((lo - 1.0).abs() < 1e-9);
        let c1 = ctx(2, 1.0);
        let (_, up) = inhomogeneous_sandwich_factors(&c1, 1.0, 2.0);
        assert!((up - 1.0).abs() < 1e-12);
        let (_, up8) = inhomogeneous_sandwich_factors(&c, 1.0, 0.5);
        assert!((up8 - 8.0).abs() < 1e-12);
    }

    #[test]
    fn rescaling_bounds() {
        let c = ctx(2, 2.0);
        assert_eq!(inhomogeneous_rescaling_bounds(&c, 1.0).unwrap(), (1.0, 1.0));
        let (lo, hi) = inhomogeneous_rescaling_bounds(&c, 3.0).unwrap();
        assert!((lo - 1.0).abs() < 1e-12 && (hi - 9.0).abs() < 1e-12);
        // t < 1 swaps which exponent attains the min
        let c32 = ctx(3, 2.0);
        let (lo2, hi2) = inhomogeneous_rescaling_bounds(&c32, 0.5).unwrap();
        assert!((lo2 - 0.125).abs() < 1e-12 && (hi2 - 0.5).abs() < 1e-12);
    }

    #[test]
    fn body_factors_properties() {
        let c = ctx(2, 2.0);
        let ball = StandardBody::ball(2);
        let lambda = J01 * J01;
        let (f1, f2) = body_capacity_factors(&c, &ball, lambda, lambda, 1.0, 2.0).unwrap();
        assert!(f1 >= 1.0 && f2 >= 1.0);
        // for the unit ball both factors coincide (r_max = 1, same lambda)
        assert!((f1 - f2).abs() < 1e-12);
        let (g1, g2) = body_capacity_factors(&c, &ball, lambda, lambda, 1e12, 2.0).unwrap();
        assert!((g1 - 1.0).abs() < 1e-9 && (g2 - 1.0).abs() < 1e-9);
    }

    #[test]
    fn theorem52_bounds() {
        let c = ctx(2, 2.0);
        let cap12 = cap_ball_relative(&c, 1.0, 2.0).unwrap();
        let lambda_b2 = J01 * J01 / 4.0;
        for &(t, th, r0, ro) in &[
            (0.0, 0.5, 0.25, 0.5),
            (1.5, 0.027, 1.118, 0.4),
            (0.0, 1.0, 10.0, 0.1),
            (2.0, 0.9, 0.01, 5.0),
        ] {
            let k = theorem52_constants(&c, t, th, r0, ro, cap12, lambda_b2).unwrap();
            assert!(k.a.value <= 6.0 * (2f64).sqrt() + 1e-12);
            assert!(k.gamma0.value < 1.0 && k.gamma0.value > 0.0);
            assert!(k.ell.value > 0.0);
        }
    }

    #[test]
    fn theorem52_gamma0_limits() {
        let c = ctx(2, 2.0);
        let cap12 = cap_ball_relative(&c, 1.0, 2.0).unwrap();
        let lb2 = J01 * J01 / 4.0;
        let g = |t: f64, th: f64, r0: f64| {
            theorem52_constants(&c, t, th, r0, 1.0, cap12, lb2)
                .unwrap()
                .gamma0
                .value
        };
        // gamma0 -> 0 with theta_star
        assert!(g(1.0, 1e-9, 1.0) < 1e-9);
        // gamma0 -> 0 as alpha -> 0, and (t > 0) as alpha -> infinity
        assert!(g(1.0, 0.5, 1e-9) < 1e-6);
        assert!(g(1.0, 0.5, 1e9) < 1e-3);
        // t = 0 is special: gamma0 stays bounded away from 0 as alpha grows
        let g_large = g(0.0, 0.5, 1e9);
        let g_unit = g(0.0, 0.5, 1.0);
        assert!(g_large > 0.5 * g_unit);
    }

    #[test]
    fn theorem52_rejects_infinite_inradius() {
        let c = ctx(2, 2.0);
        assert!(matches!(
            theorem52_constants(&c, 0.0, 0.5, 1.0, f64::INFINITY, 9.0, 1.4),
            Err(Error::Degenerate(_))
        ));
    }

    #[test]
    fn theta_factor_values() {
        assert_eq!(theta_equivalence_factor(2, 0.0), 4.0);
        assert_eq!(theta_equivalence_factor(3, 1.0), 16.0);
        for t in [0.0, 0.3, 2.0] {
            assert!(theta_equivalence_factor(2, t) >= 4.0);
        }
    }

    #[test]
    fn funnel_bound_cone_case() {
        let b = funnel_index_bound(2, 1.0, 0.5, 1.0).unwrap();
        assert_eq!(b.t, 0.0);
        assert!((b.c_n_beta - 1.0 / (2.0 * std::f64::consts::PI)).abs() < 1e-12);
        assert!((b.lower_bound - 1.0 / (4.0 * std::f64::consts::PI)).abs() < 1e-12);
    }

    #[test]
    fn funnel_bound_cusp_case() {
        let b = funnel_index_bound(2, 0.4, 0.5, 0.5).unwrap();
        assert!((b.r0 - 1.25f64.sqrt()).abs() < 1e-12);
        assert!((b.t - 1.5).abs() < 1e-12);
        // frozen plug-in values
        assert!((b.c_n_beta - 0.0540766259179243).abs() < 1e-12);
        assert!((b.lower_bound - 0.027038312958962158).abs() < 1e-12);
    }

    #[test]
    fn cheeger_type_values() {
        assert!((cheeger_type_constant(1.0, 2.0).unwrap() - 0.25).abs() < 1e-15);
        assert!((cheeger_type_constant(2.0, 4.0).unwrap() - 1.0 / 16.0).abs() < 1e-15);
        // p -> q limit tends to 1
        assert!((cheeger_type_constant(2.0, 2.0 + 1e-9).unwrap() - 1.0).abs() < 1e-6);
        assert!(cheeger_type_constant(2.0, 2.0).is_err());
    }

    #[test]
    fn sobolev_matches_bubble_oracle_values() {
        // frozen from radial quadrature of the extremal profile
        // U(r) = (1 + r^{p/(p-1)})^{-(N-p)/p}
        assert!((sobolev_closed_form(3, 2.0) - 0.182551571487181).abs() < 1e-12);
        assert!((sobolev_closed_form(2, 1.5) - 0.24905918028707624).abs() < 1e-12);
    }

    #[test]
    fn context_validation() {
        assert!(ConstantsContext::new(2, 0.5).is_err());
        assert!(ConstantsContext::new(2, 2.5).is_err());
        assert!(ConstantsContext::new(4, 2.0).is_err());
        let c = ConstantsContext::with_sobolev(2, 1.5, SobolevConstant::UserSupplied(0.3)).unwrap();
        assert_eq!(c.sobolev_constant().unwrap(), 0.3);
    }

    #[test]
    fn unit_ball_volumes() {
        assert_eq!(unit_ball_volume(0), 1.0);
        assert_eq!(unit_ball_volume(1), 2.0);
        assert_eq!(unit_ball_volume(2), std::f64::consts::PI);
        assert!((unit_ball_volume(3) - 4.0 * std::f64::consts::PI / 3.0).abs() < 1e-15);
    }
}

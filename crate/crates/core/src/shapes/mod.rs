//! Parametric shape descriptions, rasterization onto grids, standard bodies
//! and purely geometric quantities.

pub mod body;
pub mod edt;
pub mod export;
pub mod grid;

use serde::{Deserialize, Serialize};

pub use body::StandardBody;
pub use edt::{classical_inradius, squared_distance_to_complement, InradiusResult};
pub use grid::{BoxBounds, GridDomain};

use crate::analytic::unit_ball_volume;
use crate::error::{Error, Result};

/// Declarative description of an open subset of R^N.
///
/// Membership is evaluated pointwise at cell centers; composites combine the
/// member predicates with set algebra. The funnel is the one closed set of
/// the family (its defining inequalities are not strict); it is meant to be
/// subtracted from an open environment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ShapeSpec {
    Ball {
        center: Vec<f64>,
        radius: f64,
    },
    Box {
        min: Vec<f64>,
        max: Vec<f64>,
    },
    HalfSpace {
        normal: Vec<f64>,
        offset: f64,
    },
    StandardBodyInstance {
        body: StandardBody,
        scale: f64,
        center: Vec<f64>,
    },
    /// Complement of closed balls of the given radius centered at every
    /// integer lattice point, clipped to `bounds` (lattice spacing is 1).
    PerforatedLattice {
        hole_radius: f64,
        bounds: BoxBounds,
        dim: usize,
    },
    /// `{ x : opening * |x_perp|^exponent <= x_axis <= height }` with the
    /// axial coordinate measured from `apex` along `axis`.
    Funnel {
        axis: Vec<f64>,
        opening: f64,
        height: f64,
        exponent: f64,
        apex: Vec<f64>,
    },
    Union {
        parts: Vec<ShapeSpec>,
    },
    Intersection {
        parts: Vec<ShapeSpec>,
    },
    Difference {
        minuend: Box<ShapeSpec>,
        subtrahend: Box<ShapeSpec>,
    },
}

impl ShapeSpec {
    pub fn ball(center: &[f64], radius: f64) -> Self {
        ShapeSpec::Ball {
            center: center.to_vec(),
            radius,
        }
    }

    pub fn rect(min: &[f64], max: &[f64]) -> Self {
        ShapeSpec::Box {
            min: min.to_vec(),
            max: max.to_vec(),
        }
    }

    pub fn difference(minuend: ShapeSpec, subtrahend: ShapeSpec) -> Self {
        ShapeSpec::Difference {
            minuend: Box::new(minuend),
            subtrahend: Box::new(subtrahend),
        }
    }

    /// Spatial dimension of the shape, inferred from its coordinates.
    pub fn dim(&self) -> usize {
        match self {
            ShapeSpec::Ball { center, .. } => center.len(),
            ShapeSpec::Box { min, .. } => min.len(),
            ShapeSpec::HalfSpace { normal, .. } => normal.len(),
            ShapeSpec::StandardBodyInstance { body, .. } => body.dim(),
            ShapeSpec::PerforatedLattice { dim, .. } => *dim,
            ShapeSpec::Funnel { axis, .. } => axis.len(),
            ShapeSpec::Union { parts } | ShapeSpec::Intersection { parts } => {
                parts.first().map_or(0, |p| p.dim())
            }
            ShapeSpec::Difference { minuend, .. } => minuend.dim(),
        }
    }

    /// Check the structural invariants of the description.
    pub fn validate(&self) -> Result<()> {
        let dim = self.dim();
        if !(1..=3).contains(&dim) {
            return Err(Error::InvalidShape(format!(
                "shape dimension must be 1, 2 or 3, got {dim}"
            )));
        }
        match self {
            ShapeSpec::Ball { radius, .. } => {
                if !(*radius > 0.0) {
                    return Err(Error::InvalidShape("ball radius must be positive".into()));
                }
            }
            ShapeSpec::Box { min, max } => {
                if min.len() != max.len() {
                    return Err(Error::InvalidShape("box corners differ in dimension".into()));
                }
                for a in 0..min.len() {
                    if !(max[a] > min[a]) {
                        return Err(Error::InvalidShape(format!(
                            "box degenerate along axis {a}"
                        )));
                    }
                }
            }
            ShapeSpec::HalfSpace { normal, .. } => {
                let n2: f64 = normal.iter().map(|v| v * v).sum();
                if !(n2 > 0.0) {
                    return Err(Error::InvalidShape("half-space normal is zero".into()));
                }
            }
            ShapeSpec::StandardBodyInstance { scale, .. } => {
                if !(*scale > 0.0) {
                    return Err(Error::InvalidShape("body scale must be positive".into()));
                }
            }
            ShapeSpec::PerforatedLattice { hole_radius, .. } => {
                if !(*hole_radius > 0.0 && *hole_radius < 0.25) {
                    return Err(Error::InvalidShape(
                        "perforated lattice requires 0 < hole radius < 1/4".into(),
                    ));
                }
            }
            ShapeSpec::Funnel {
                opening,
                height,
                exponent,
                axis,
                ..
            } => {
                if !(*exponent > 0.0 && *exponent <= 1.0) {
                    return Err(Error::InvalidShape(
                        "funnel exponent must lie in (0, 1]".into(),
                    ));
                }
                if !(*opening > 0.0) || !(*height > 0.0) {
                    return Err(Error::InvalidShape(
                        "funnel opening and height must be positive".into(),
                    ));
                }
                let n2: f64 = axis.iter().map(|v| v * v).sum();
                if !(n2 > 0.0) {
                    return Err(Error::InvalidShape("funnel axis is zero".into()));
                }
            }
            ShapeSpec::Union { parts } | ShapeSpec::Intersection { parts } => {
                if parts.is_empty() {
                    return Err(Error::InvalidShape("empty composite".into()));
                }
                for p in parts {
                    p.validate()?;
                    if p.dim() != dim {
                        return Err(Error::InvalidShape("mixed dimensions in composite".into()));
                    }
                }
            }
            ShapeSpec::Difference {
                minuend,
                subtrahend,
            } => {
                minuend.validate()?;
                subtrahend.validate()?;
                if minuend.dim() != subtrahend.dim() {
                    return Err(Error::InvalidShape("mixed dimensions in composite".into()));
                }
            }
        }
        Ok(())
    }

    /// Pointwise membership test.
    pub fn contains(&self, x: &[f64]) -> bool {
        match self {
            ShapeSpec::Ball { center, radius } => {
                let d2: f64 = center
                    .iter()
                    .enumerate()
                    .map(|(a, c)| (x[a] - c) * (x[a] - c))
                    .sum();
                d2 < radius * radius
            }
            ShapeSpec::Box { min, max } => {
                (0..min.len()).all(|a| x[a] > min[a] && x[a] < max[a])
            }
            ShapeSpec::HalfSpace { normal, offset } => {
                let dot: f64 = normal.iter().enumerate().map(|(a, n)| n * x[a]).sum();
                dot < *offset
            }
            ShapeSpec::StandardBodyInstance {
                body,
                scale,
                center,
            } => body.contains(x, *scale, center),
            ShapeSpec::PerforatedLattice {
                hole_radius,
                bounds,
                dim,
            } => {
                if !(0..*dim).all(|a| x[a] > bounds.min[a] && x[a] < bounds.max[a]) {
                    return false;
                }
                // nearest integer lattice point
                let mut d2 = 0.0;
                for a in 0..*dim {
                    let d = x[a] - x[a].round();
                    d2 += d * d;
                }
                d2 > hole_radius * hole_radius
            }
            ShapeSpec::Funnel {
                axis,
                opening,
                height,
                exponent,
                apex,
            } => funnel_contains(axis, *opening, *height, *exponent, apex, x),
            ShapeSpec::Union { parts } => parts.iter().any(|p| p.contains(x)),
            ShapeSpec::Intersection { parts } => parts.iter().all(|p| p.contains(x)),
            ShapeSpec::Difference {
                minuend,
                subtrahend,
            } => minuend.contains(x) && !subtrahend.contains(x),
        }
    }

    /// Smallest geometric feature, for resolution checks.
    pub fn min_feature(&self) -> f64 {
        match self {
            ShapeSpec::Ball { radius, .. } => *radius,
            ShapeSpec::Box { min, max } => (0..min.len())
                .map(|a| (max[a] - min[a]) / 2.0)
                .fold(f64::INFINITY, f64::min),
            ShapeSpec::HalfSpace { .. } => f64::INFINITY,
            ShapeSpec::StandardBodyInstance { scale, .. } => *scale,
            ShapeSpec::PerforatedLattice { hole_radius, .. } => *hole_radius,
            ShapeSpec::Funnel {
                opening,
                height,
                exponent,
                ..
            } => height.min((height / opening).powf(1.0 / exponent)),
            ShapeSpec::Union { parts } | ShapeSpec::Intersection { parts } => parts
                .iter()
                .map(|p| p.min_feature())
                .fold(f64::INFINITY, f64::min),
            ShapeSpec::Difference {
                minuend,
                subtrahend,
            } => minuend.min_feature().min(subtrahend.min_feature()),
        }
    }
}

fn funnel_contains(
    axis: &[f64],
    opening: f64,
    height: f64,
    exponent: f64,
    apex: &[f64],
    x: &[f64],
) -> bool {
    let dim = axis.len();
    let norm: f64 = axis.iter().map(|v| v * v).sum::<f64>().sqrt();
    let mut axial = 0.0;
    for a in 0..dim {
        axial += (x[a] - apex[a]) * axis[a] / norm;
    }
    let mut perp2 = 0.0;
    for a in 0..dim {
        let p = (x[a] - apex[a]) - axial * axis[a] / norm;
        perp2 += p * p;
    }
    let perp = perp2.sqrt();
    opening * perp.powf(exponent) <= axial && axial <= height
}

/// Mark every cell whose center lies in the set described by `spec`.
///
/// Fails when the spacing cannot resolve the smallest feature of the shape.
pub fn rasterize(spec: &ShapeSpec, spacing: f64, bounds: BoxBounds) -> Result<GridDomain> {
    spec.validate()?;
    let feature = spec.min_feature();
    if spacing >= feature {
        return Err(Error::UnderResolved(format!(
            "spacing {spacing} does not resolve the smallest feature {feature}"
        )));
    }
    let mut grid = GridDomain::empty(spec.dim(), spacing, bounds)?;
    for cell in grid.clone().iter_cells() {
        let x = grid.cell_center(cell);
        if spec.contains(&x[..spec.dim()]) {
            grid.set(cell, true);
        }
    }
    Ok(grid)
}

/// Mark every cell whose center lies in the *closed* ball `B_r(c)`.
pub fn rasterize_closed_ball(
    grid_like: &GridDomain,
    center: &[f64],
    radius: f64,
) -> GridDomain {
    let mut out = GridDomain::empty(grid_like.dim(), grid_like.spacing(), grid_like.bounds())
        .expect("template grid is valid");
    for cell in out.clone().iter_cells() {
        let x = out.cell_center(cell);
        let d2: f64 = (0..out.dim()).map(|a| (x[a] - center[a]).powi(2)).sum();
        if d2 <= radius * radius {
            out.set(cell, true);
        }
    }
    out
}

/// Volume of the funnel with the given parameters:
/// `(w_{N-1} / opening^{(N-1)/b}) * (b / (N-1+b)) * height^{(N-1+b)/b}`.
pub fn funnel_volume(dim: usize, exponent: f64, opening: f64, height: f64) -> Result<f64> {
    if !(exponent > 0.0 && exponent <= 1.0) || !(opening > 0.0) || !(height >= 0.0) {
        return Err(Error::Precondition(
            "funnel volume needs 0 < exponent <= 1, opening > 0, height >= 0".into(),
        ));
    }
    let n = dim as f64;
    let b = exponent;
    Ok(unit_ball_volume(dim - 1) / opening.powf((n - 1.0) / b) * (b / (n - 1.0 + b))
        * height.powf((n - 1.0 + b) / b))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn disk_volume_converges_to_pi() {
        let spec = ShapeSpec::ball(&[0.0, 0.0], 1.0);
        let b = BoxBounds::new([-1.25, -1.25, 0.0], [1.25, 1.25, 0.0]);
        let g = rasterize(&spec, 1.0 / 64.0, b).unwrap();
        let err = (g.volume() - std::f64::consts::PI).abs() / std::f64::consts::PI;
        assert!(err < 0.02, "relative volume error {err}");
    }

    #[test]
    fn volume_error_halves_under_refinement() {
        let spec = ShapeSpec::ball(&[0.0, 0.0], 1.0);
        let b = BoxBounds::new([-1.25, -1.25, 0.0], [1.25, 1.25, 0.0]);
        let coarse = rasterize(&spec, 1.0 / 32.0, b).unwrap();
        let fine = rasterize(&spec, 1.0 / 64.0, b).unwrap();
        let e1 = (coarse.volume() - std::f64::consts::PI).abs();
        let e2 = (fine.volume() - std::f64::consts::PI).abs();
        assert!(e2 <= e1 / 1.5 + 1e-4, "e1={e1}, e2={e2}");
    }

    #[test]
    fn empty_difference_is_empty() {
        let ball = ShapeSpec::ball(&[0.0, 0.0], 1.0);
        let spec = ShapeSpec::difference(ball.clone(), ball);
        let b = BoxBounds::new([-1.5, -1.5, 0.0], [1.5, 1.5, 0.0]);
        let g = rasterize(&spec, 1.0 / 32.0, b).unwrap();
        assert_eq!(g.occupied_count(), 0);
    }

    #[test]
    fn perforated_lattice_removes_nine_holes_worth_of_area() {
        // holes at the 16 lattice points of [0,3]^2; corner and edge holes
        // are clipped, totalling the area of 9 full holes
        let delta = 0.2;
        let spec = ShapeSpec::PerforatedLattice {
            hole_radius: delta,
            bounds: BoxBounds::new([0.0, 0.0, 0.0], [3.0, 3.0, 0.0]),
            dim: 2,
        };
        let b = BoxBounds::new([0.0, 0.0, 0.0], [3.0, 3.0, 0.0]);
        let g = rasterize(&spec, 1.0 / 64.0, b).unwrap();
        let expected = 9.0 - 9.0 * std::f64::consts::PI * delta * delta;
        let err = (g.volume() - expected).abs() / expected;
        assert!(err < 0.01, "volume {} vs {}", g.volume(), expected);
    }

    #[test]
    fn under_resolved_spacing_is_rejected() {
        let spec = ShapeSpec::PerforatedLattice {
            hole_radius: 0.2,
            bounds: BoxBounds::new([0.0; 3], [3.0, 3.0, 0.0]),
            dim: 2,
        };
        let err = rasterize(&spec, 0.25, BoxBounds::new([0.0; 3], [3.0, 3.0, 0.0])).unwrap_err();
        assert!(matches!(err, Error::UnderResolved(_)));
    }

    #[test]
    fn perforated_inradius_matches_lattice_geometry() {
        // the farthest point from the holes is a half-integer lattice point
        let delta = 0.2;
        let spec = ShapeSpec::PerforatedLattice {
            hole_radius: delta,
            bounds: BoxBounds::new([-2.0, -2.0, 0.0], [3.0, 3.0, 0.0]),
            dim: 2,
        };
        let b = BoxBounds::new([-2.0, -2.0, 0.0], [3.0, 3.0, 0.0]);
        let g = rasterize(&spec, 1.0 / 64.0, b).unwrap();
        let r = classical_inradius(&g);
        let expected = 2f64.sqrt() / 2.0 - delta;
        // interior optimum, away from the clipped boundary ring
        assert!(
            (r.value - expected).abs() <= g.spacing() * 2f64.sqrt(),
            "inradius {} vs {}",
            r.value,
            expected
        );
    }

    #[test]
    fn funnel_volume_triangle() {
        // N=2, b=1, opening 1, height 1: triangle with vertices (0,0), (+-1, 1)
        let v = funnel_volume(2, 1.0, 1.0, 1.0).unwrap();
        assert!((v - 1.0).abs() < 1e-12);
        assert_eq!(funnel_volume(2, 1.0, 1.0, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn funnel_membership_matches_defining_inequalities() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(42);
        let spec = ShapeSpec::Funnel {
            axis: vec![0.0, 1.0],
            opening: 0.5,
            height: 1.0,
            exponent: 0.4,
            apex: vec![0.25, -0.5],
        };
        for _ in 0..10_000 {
            let x = [rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)];
            let axial = x[1] - (-0.5);
            let perp = (x[0] - 0.25f64).abs();
            let expected = 0.5 * perp.powf(0.4) <= axial && axial <= 1.0;
            assert_eq!(spec.contains(&x), expected, "at {x:?}");
        }
    }

    #[test]
    fn funnel_monte_carlo_volume() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(17);
        let spec = ShapeSpec::Funnel {
            axis: vec![0.0, 1.0],
            opening: 1.0,
            height: 1.0,
            exponent: 1.0,
            apex: vec![0.0, 0.0],
        };
        // bounding box [-1,1] x [0,1], area 2
        let samples = 200_000;
        let mut hits = 0usize;
        for _ in 0..samples {
            let x = [rng.gen_range(-1.0..1.0), rng.gen_range(0.0..1.0)];
            if spec.contains(&x) {
                hits += 1;
            }
        }
        let mc = hits as f64 / samples as f64 * 2.0;
        let closed = funnel_volume(2, 1.0, 1.0, 1.0).unwrap();
        assert!((mc - closed).abs() / closed < 0.02, "mc {mc} vs {closed}");
    }

    #[test]
    fn shape_spec_roundtrips_through_json() {
        let spec = ShapeSpec::difference(
            ShapeSpec::rect(&[0.0, 0.0], &[1.0, 1.0]),
            ShapeSpec::ball(&[0.5, 0.5], 0.25),
        );
        let s = serde_json::to_string(&spec).unwrap();
        let back: ShapeSpec = serde_json::from_str(&s).unwrap();
        assert_eq!(spec, back);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let bad = r#"{"kind":"ball","center":[0,0],"radius":1,"color":"red"}"#;
        assert!(serde_json::from_str::<ShapeSpec>(bad).is_err());
    }
}

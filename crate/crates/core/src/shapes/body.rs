use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A bounded open set star-shaped with respect to the unit ball, described
/// by radial samples on a fixed angular mesh of the unit sphere.
///
/// The radial function satisfies `1 <= r(w) <= r_max` for every direction,
/// so the unit ball is contained in the body and the body in `B_{r_max}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "BodyData", into = "BodyData")]
pub struct StandardBody {
    dim: usize,
    samples: Vec<f64>,
    #[serde(skip)]
    dirs: Vec<[f64; 3]>,
    #[serde(skip)]
    r_max: f64,
    #[serde(skip)]
    inner_gap: f64,
}

#[derive(Serialize, Deserialize)]
struct BodyData {
    dim: usize,
    samples: Vec<f64>,
}

impl TryFrom<BodyData> for StandardBody {
    type Error = Error;
    fn try_from(d: BodyData) -> Result<Self> {
        StandardBody::from_samples(d.dim, d.samples)
    }
}

impl From<StandardBody> for BodyData {
    fn from(b: StandardBody) -> Self {
        BodyData {
            dim: b.dim,
            samples: b.samples,
        }
    }
}

/// Default angular resolution for planar bodies.
pub const DEFAULT_ANGULAR_SAMPLES_2D: usize = 720;
/// Default icosphere subdivision level for three-dimensional bodies.
pub const DEFAULT_ICOSPHERE_LEVEL: usize = 4;

impl StandardBody {
    /// Build a body from radial samples on the canonical mesh for `dim`.
    ///
    /// For `dim == 2` the mesh is `samples.len()` uniformly spaced angles
    /// starting at angle zero; for `dim == 3` the sample count must match an
    /// icosphere mesh (levels 0..=5); for `dim == 1` exactly two samples
    /// (directions -1 and +1).
    pub fn from_samples(dim: usize, samples: Vec<f64>) -> Result<Self> {
        let dirs = match dim {
            1 => {
                if samples.len() != 2 {
                    return Err(Error::InvalidShape(
                        "a 1-d body takes exactly two radial samples".into(),
                    ));
                }
                vec![[-1.0, 0.0, 0.0], [1.0, 0.0, 0.0]]
            }
            2 => {
                if samples.len() < 8 {
                    return Err(Error::InvalidShape(
                        "a 2-d body needs at least 8 radial samples".into(),
                    ));
                }
                uniform_circle(samples.len())
            }
            3 => {
                let level = (0..=5)
                    .find(|&l| icosphere_vertex_count(l) == samples.len())
                    .ok_or_else(|| {
                        Error::InvalidShape(format!(
                            "a 3-d body takes icosphere sample counts {:?}, got {}",
                            (0..=5).map(icosphere_vertex_count).collect::<Vec<_>>(),
                            samples.len()
                        ))
                    })?;
                icosphere(level)
            }
            d => {
                return Err(Error::Precondition(format!(
                    "dimension must be 1, 2 or 3, got {d}"
                )))
            }
        };
        for (k, &r) in samples.iter().enumerate() {
            if !(r >= 1.0 - 1e-12) || !r.is_finite() {
                return Err(Error::InvalidShape(format!(
                    "not starshaped w.r.t. unit ball: sample {k} has r = {r}"
                )));
            }
        }
        let r_max = samples.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let inner_gap = inner_gap(&dirs, &samples);
        if !(inner_gap > 0.0) {
            return Err(Error::Degenerate(
                "body closure touches the boundary of its doubled copy".into(),
            ));
        }
        Ok(Self {
            dim,
            samples,
            dirs,
            r_max,
            inner_gap,
        })
    }

    /// Sample a radial function on the default mesh for `dim`.
    pub fn from_radial_fn(dim: usize, f: impl Fn(&[f64; 3]) -> f64) -> Result<Self> {
        let dirs = match dim {
            1 => vec![[-1.0, 0.0, 0.0], [1.0, 0.0, 0.0]],
            2 => uniform_circle(DEFAULT_ANGULAR_SAMPLES_2D),
            3 => icosphere(DEFAULT_ICOSPHERE_LEVEL),
            d => {
                return Err(Error::Precondition(format!(
                    "dimension must be 1, 2 or 3, got {d}"
                )))
            }
        };
        let samples = dirs.iter().map(|w| f(w)).collect();
        Self::from_samples(dim, samples)
    }

    /// The unit Euclidean ball as a body (radial function identically 1).
    pub fn ball(dim: usize) -> Self {
        Self::from_radial_fn(dim, |_| 1.0).expect("unit ball is a valid body")
    }

    /// The hypercube `(-1, 1)^N`, the unit ball of the sup norm.
    pub fn cube(dim: usize) -> Self {
        Self::from_radial_fn(dim, |w| {
            let m = (0..dim).map(|a| w[a].abs()).fold(0.0, f64::max);
            1.0 / m
        })
        .expect("unit cube is a valid body")
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn directions(&self) -> &[[f64; 3]] {
        &self.dirs
    }

    /// Largest radial value `r_max = max_w r(w)`.
    pub fn r_max(&self) -> f64 {
        self.r_max
    }

    /// Distance from the body closure to the boundary of the doubled body.
    pub fn inner_gap(&self) -> f64 {
        self.inner_gap
    }

    /// Radial value in direction `w` (need not be normalized).
    pub fn radial(&self, w: &[f64; 3]) -> f64 {
        match self.dim {
            1 => {
                if w[0] < 0.0 {
                    self.samples[0]
                } else {
                    self.samples[1]
                }
            }
            2 => {
                let theta = w[1].atan2(w[0]);
                let m = self.samples.len() as f64;
                let t = theta.rem_euclid(std::f64::consts::TAU) / std::f64::consts::TAU * m;
                let k0 = (t.floor() as usize) % self.samples.len();
                let k1 = (k0 + 1) % self.samples.len();
                let frac = t - t.floor();
                self.samples[k0] * (1.0 - frac) + self.samples[k1] * frac
            }
            _ => {
                // nearest mesh vertex; radial functions are Lipschitz so the
                // mesh resolution controls the error
                let norm = (w[0] * w[0] + w[1] * w[1] + w[2] * w[2]).sqrt();
                let u = [w[0] / norm, w[1] / norm, w[2] / norm];
                let mut best = 0usize;
                let mut best_dot = f64::NEG_INFINITY;
                for (k, d) in self.dirs.iter().enumerate() {
                    let dot = d[0] * u[0] + d[1] * u[1] + d[2] * u[2];
                    if dot > best_dot {
                        best_dot = dot;
                        best = k;
                    }
                }
                self.samples[best]
            }
        }
    }

    /// Membership of `x` in the open scaled body `K_scale(center)`.
    pub fn contains(&self, x: &[f64], scale: f64, center: &[f64]) -> bool {
        let mut v = [0.0; 3];
        let mut norm2 = 0.0;
        for a in 0..self.dim {
            v[a] = (x[a] - center[a]) / scale;
            norm2 += v[a] * v[a];
        }
        let norm = norm2.sqrt();
        if norm < 1.0 {
            return true; // the unit ball is always inside
        }
        norm < self.radial(&v)
    }
}

/// `dist(closure(K), boundary(K_2))`, evaluated on the sample mesh.
fn inner_gap(dirs: &[[f64; 3]], samples: &[f64]) -> f64 {
    let mut gap = f64::INFINITY;
    for (i, wi) in dirs.iter().enumerate() {
        let pi = [
            samples[i] * wi[0],
            samples[i] * wi[1],
            samples[i] * wi[2],
        ];
        let mut best = f64::INFINITY;
        for (j, wj) in dirs.iter().enumerate() {
            let qj = [
                2.0 * samples[j] * wj[0],
                2.0 * samples[j] * wj[1],
                2.0 * samples[j] * wj[2],
            ];
            let d2 = (pi[0] - qj[0]).powi(2) + (pi[1] - qj[1]).powi(2) + (pi[2] - qj[2]).powi(2);
            if d2 < best {
                best = d2;
            }
        }
        gap = gap.min(best.sqrt());
    }
    gap
}

fn uniform_circle(n: usize) -> Vec<[f64; 3]> {
    (0..n)
        .map(|k| {
            let theta = std::f64::consts::TAU * k as f64 / n as f64;
            [theta.cos(), theta.sin(), 0.0]
        })
        .collect()
}

pub(crate) fn icosphere_vertex_count(level: usize) -> usize {
    // 12 vertices, 30 edges, 20 faces; each subdivision quadruples faces
    10 * 4usize.pow(level as u32) + 2
}

/// Icosahedron subdivided `level` times, vertices projected to the sphere.
pub(crate) fn icosphere(level: usize) -> Vec<[f64; 3]> {
    let phi = (1.0 + 5f64.sqrt()) / 2.0;
    let mut verts: Vec<[f64; 3]> = vec![
        [-1.0, phi, 0.0],
        [1.0, phi, 0.0],
        [-1.0, -phi, 0.0],
        [1.0, -phi, 0.0],
        [0.0, -1.0, phi],
        [0.0, 1.0, phi],
        [0.0, -1.0, -phi],
        [0.0, 1.0, -phi],
        [phi, 0.0, -1.0],
        [phi, 0.0, 1.0],
        [-phi, 0.0, -1.0],
        [-phi, 0.0, 1.0],
    ];
    let mut faces: Vec<[usize; 3]> = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];
    for v in verts.iter_mut() {
        normalize(v);
    }
    for _ in 0..level {
        let mut midpoints: std::collections::HashMap<(usize, usize), usize> =
            std::collections::HashMap::new();
        let mut next = Vec::with_capacity(faces.len() * 4);
        for f in &faces {
            let m01 = midpoint(&mut verts, &mut midpoints, f[0], f[1]);
            let m12 = midpoint(&mut verts, &mut midpoints, f[1], f[2]);
            let m20 = midpoint(&mut verts, &mut midpoints, f[2], f[0]);
            next.push([f[0], m01, m20]);
            next.push([f[1], m12, m01]);
            next.push([f[2], m20, m12]);
            next.push([m01, m12, m20]);
        }
        faces = next;
    }
    debug_assert_eq!(verts.len(), icosphere_vertex_count(level));
    verts
}

fn midpoint(
    verts: &mut Vec<[f64; 3]>,
    cache: &mut std::collections::HashMap<(usize, usize), usize>,
    a: usize,
    b: usize,
) -> usize {
    let key = (a.min(b), a.max(b));
    if let Some(&idx) = cache.get(&key) {
        return idx;
    }
    let va = verts[a];
    let vb = verts[b];
    let mut m = [
        (va[0] + vb[0]) / 2.0,
        (va[1] + vb[1]) / 2.0,
        (va[2] + vb[2]) / 2.0,
    ];
    normalize(&mut m);
    verts.push(m);
    let idx = verts.len() - 1;
    cache.insert(key, idx);
    idx
}

fn normalize(v: &mut [f64; 3]) {
    let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
    v[0] /= n;
    v[1] /= n;
    v[2] /= n;
}

use super::grid::GridDomain;

/// Exact squared Euclidean distance transform (Felzenszwalb-Huttenlocher
/// lower envelopes, one pass per axis).
///
/// Returns, for every cell, the squared distance (in cell units) from the
/// cell center to the nearest center of an unoccupied cell. The grid is
/// virtually padded with one ring of unoccupied cells, so cells outside the
/// bounding box count as complement.
pub fn squared_distance_to_complement(grid: &GridDomain) -> Vec<f64> {
    let [nx, ny, nz] = grid.shape();
    let dim = grid.dim();
    let px = nx + 2;
    let py = if dim >= 2 { ny + 2 } else { 1 };
    let pz = if dim >= 3 { nz + 2 } else { 1 };
    let pad_idx = |i: usize, j: usize, k: usize| (k * py + j) * px + i;
    const INF: f64 = 1e18;

    let mut f = vec![0.0f64; px * py * pz];
    for k in 0..pz {
        for j in 0..py {
            for i in 0..px {
                let inside = i >= 1
                    && i <= nx
                    && (dim < 2 || (j >= 1 && j <= ny))
                    && (dim < 3 || (k >= 1 && k <= nz));
                let occ = if inside {
                    let cell = [
                        i - 1,
                        if dim >= 2 { j - 1 } else { 0 },
                        if dim >= 3 { k - 1 } else { 0 },
                    ];
                    grid.occupied(cell)
                } else {
                    false
                };
                f[pad_idx(i, j, k)] = if occ { INF } else { 0.0 };
            }
        }
    }

    // padding for unused axes collapses to a single layer
    let dims = [px, py, pz];
    let mut scratch_f = Vec::new();
    let mut scratch_d = Vec::new();
    for axis in 0..grid.dim().max(1) {
        let n = dims[axis];
        let stride = match axis {
            0 => 1,
            1 => px,
            _ => px * py,
        };
        let lines: Vec<usize> = match axis {
            0 => (0..pz)
                .flat_map(|k| (0..py).map(move |j| pad_idx(0, j, k)))
                .collect(),
            1 => (0..pz)
                .flat_map(|k| (0..px).map(move |i| pad_idx(i, 0, k)))
                .collect(),
            _ => (0..py)
                .flat_map(|j| (0..px).map(move |i| pad_idx(i, j, 0)))
                .collect(),
        };
        scratch_f.resize(n, 0.0);
        scratch_d.resize(n, 0.0);
        for start in lines {
            for t in 0..n {
                scratch_f[t] = f[start + t * stride];
            }
            dt_1d(&scratch_f, &mut scratch_d);
            for t in 0..n {
                f[start + t * stride] = scratch_d[t];
            }
        }
    }

    let mut out = vec![0.0f64; grid.len()];
    for cell in grid.iter_cells() {
        let (i, j, k) = (
            cell[0] + 1,
            if grid.dim() >= 2 { cell[1] + 1 } else { 0 },
            if grid.dim() >= 3 { cell[2] + 1 } else { 0 },
        );
        out[grid.index(cell)] = f[pad_idx(i, j, k)];
    }
    out
}

/// 1-d squared distance transform with sampled parabolas.
fn dt_1d(f: &[f64], d: &mut [f64]) {
    let n = f.len();
    let mut v = vec![0usize; n];
    let mut z = vec![0.0f64; n + 1];
    let mut k = 0usize;
    v[0] = 0;
    z[0] = f64::NEG_INFINITY;
    z[1] = f64::INFINITY;
    for q in 1..n {
        loop {
            let p = v[k];
            let s = ((f[q] + (q * q) as f64) - (f[p] + (p * p) as f64))
                / (2.0 * q as f64 - 2.0 * p as f64);
            if s <= z[k] {
                if k == 0 {
                    break;
                }
                k -= 1;
            } else {
                k += 1;
                v[k] = q;
                z[k] = s;
                z[k + 1] = f64::INFINITY;
                break;
            }
        }
    }
    k = 0;
    for q in 0..n {
        while z[k + 1] < q as f64 {
            k += 1;
        }
        let dq = q as f64 - v[k] as f64;
        d[q] = dq * dq + f[v[k]];
    }
}

/// Classical inradius of the rasterized set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InradiusResult {
    /// `max` over occupied cells of the distance to the complement.
    pub value: f64,
    /// One cell diagonal of slack on either side.
    pub bracket: (f64, f64),
    /// A cell realizing the maximum (useful to seed searches).
    pub argmax_cell: [usize; 3],
}

/// Radius of a largest inscribed ball, up to one cell diagonal.
///
/// Returns a zero estimate for the empty set.
pub fn classical_inradius(grid: &GridDomain) -> InradiusResult {
    let d2 = squared_distance_to_complement(grid);
    let mut best = 0.0f64;
    let mut arg = [0usize; 3];
    for (idx, &v) in d2.iter().enumerate() {
        if v > best {
            best = v;
            arg = grid.cell_of_index(idx);
        }
    }
    let h = grid.spacing();
    let value = best.sqrt() * h;
    let diag = h * (grid.dim() as f64).sqrt();
    InradiusResult {
        value,
        bracket: ((value - diag).max(0.0), value + diag),
        argmax_cell: arg,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::shapes::grid::BoxBounds;

    #[test]
    fn inradius_of_full_square_is_half_side() {
        // unit square (0,2)^2: inradius 1
        let n = 64;
        let mut g = GridDomain::empty(
            2,
            2.0 / n as f64,
            BoxBounds::new([0.0, 0.0, 0.0], [2.0, 2.0, 0.0]),
        )
        .unwrap();
        for cell in g.clone().iter_cells() {
            g.set(cell, true);
        }
        let r = classical_inradius(&g);
        let diag = g.spacing() * 2f64.sqrt();
        assert!(
            (r.value - 1.0).abs() <= diag,
            "inradius {} should be 1 within {}",
            r.value,
            diag
        );
    }

    #[test]
    fn empty_set_has_zero_inradius() {
        let g = GridDomain::empty(2, 0.1, BoxBounds::new([0.0; 3], [1.0, 1.0, 0.0])).unwrap();
        assert_eq!(classical_inradius(&g).value, 0.0);
    }

    #[test]
    fn inradius_1d_interval() {
        let n = 100;
        let mut g = GridDomain::empty(
            1,
            1.0 / n as f64,
            BoxBounds::new([0.0; 3], [1.0, 0.0, 0.0]),
        )
        .unwrap();
        for i in 0..n {
            g.set([i, 0, 0], true);
        }
        let r = classical_inradius(&g);
        assert!((r.value - 0.5).abs() <= 2.0 * g.spacing());
    }

    #[test]
    fn monotone_under_inclusion() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..5 {
            let n = 48;
            let mut big = GridDomain::empty(
                2,
                1.0 / n as f64,
                BoxBounds::new([0.0; 3], [1.0, 1.0, 0.0]),
            )
            .unwrap();
            for cell in big.clone().iter_cells() {
                big.set(cell, true);
            }
            // bite random balls out to get the smaller set
            let mut small = big.clone();
            for _ in 0..4 {
                let cx = rng.gen_range(0.0..1.0);
                let cy = rng.gen_range(0.0..1.0);
                let r = rng.gen_range(0.05..0.2);
                for cell in small.clone().iter_cells() {
                    let c = small.cell_center(cell);
                    if (c[0] - cx).powi(2) + (c[1] - cy).powi(2) < r * r {
                        small.set(cell, false);
                    }
                }
            }
            let r_small = classical_inradius(&small).value;
            let r_big = classical_inradius(&big).value;
            assert!(r_small <= r_big + 1e-12);
        }
    }
}

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Axis-aligned bounding box in up to three dimensions.
///
/// Coordinates beyond `dim` are ignored; helpers keep them zeroed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoxBounds {
    pub min: [f64; 3],
    pub max: [f64; 3],
}

impl BoxBounds {
    pub fn new(min: [f64; 3], max: [f64; 3]) -> Self {
        Self { min, max }
    }

    /// A cube centered at `center` with half-side `half`.
    pub fn centered(center: [f64; 3], half: f64, dim: usize) -> Self {
        let mut min = [0.0; 3];
        let mut max = [0.0; 3];
        for a in 0..dim {
            min[a] = center[a] - half;
            max[a] = center[a] + half;
        }
        Self { min, max }
    }

    pub fn side(&self, axis: usize) -> f64 {
        self.max[axis] - self.min[axis]
    }

    pub fn inflate(&self, margin: f64, dim: usize) -> Self {
        let mut out = *self;
        for a in 0..dim {
            out.min[a] -= margin;
            out.max[a] += margin;
        }
        out
    }

    pub fn contains(&self, x: &[f64], dim: usize) -> bool {
        (0..dim).all(|a| x[a] > self.min[a] && x[a] < self.max[a])
    }
}

/// A rasterized open set: a uniform lattice of cells, each marked as
/// belonging to the set or not. Cells outside the bounding box are
/// implicitly *not* in the set.
///
/// Cell `(i, j, k)` covers `origin + [i, i+1) x [j, j+1) x [k, k+1) * h`
/// and its center sits at `origin + (i + 1/2, j + 1/2, k + 1/2) * h`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridDomain {
    dim: usize,
    shape: [usize; 3],
    origin: [f64; 3],
    spacing: f64,
    occupancy: Vec<bool>,
}

impl GridDomain {
    pub fn empty(dim: usize, spacing: f64, bounds: BoxBounds) -> Result<Self> {
        if !(1..=3).contains(&dim) {
            return Err(Error::Precondition(format!(
                "dimension must be 1, 2 or 3, got {dim}"
            )));
        }
        if !(spacing > 0.0) {
            return Err(Error::Precondition("spacing must be positive".into()));
        }
        let mut shape = [1usize; 3];
        let mut origin = [0.0; 3];
        for a in 0..dim {
            let side = bounds.side(a);
            if !(side > 0.0) {
                return Err(Error::Precondition(format!(
                    "bounding box degenerate along axis {a}"
                )));
            }
            let n = (side / spacing).round().max(1.0) as usize;
            shape[a] = n;
            origin[a] = bounds.min[a];
        }
        let cells = shape[0] * shape[1] * shape[2];
        Ok(Self {
            dim,
            shape,
            origin,
            spacing,
            occupancy: vec![false; cells],
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn shape(&self) -> [usize; 3] {
        self.shape
    }

    pub fn origin(&self) -> [f64; 3] {
        self.origin
    }

    pub fn bounds(&self) -> BoxBounds {
        let mut max = [0.0; 3];
        for a in 0..3 {
            max[a] = self.origin[a] + self.shape[a] as f64 * self.spacing;
        }
        BoxBounds::new(self.origin, max)
    }

    pub fn len(&self) -> usize {
        self.occupancy.len()
    }

    pub fn is_empty(&self) -> bool {
        !self.occupancy.iter().any(|&b| b)
    }

    #[inline]
    pub fn index(&self, cell: [usize; 3]) -> usize {
        (cell[2] * self.shape[1] + cell[1]) * self.shape[0] + cell[0]
    }

    #[inline]
    pub fn cell_of_index(&self, idx: usize) -> [usize; 3] {
        let nx = self.shape[0];
        let ny = self.shape[1];
        [idx % nx, (idx / nx) % ny, idx / (nx * ny)]
    }

    #[inline]
    pub fn occupied(&self, cell: [usize; 3]) -> bool {
        self.occupancy[self.index(cell)]
    }

    #[inline]
    pub fn occupied_idx(&self, idx: usize) -> bool {
        self.occupancy[idx]
    }

    pub fn set(&mut self, cell: [usize; 3], value: bool) {
        let idx = self.index(cell);
        self.occupancy[idx] = value;
    }

    pub fn occupancy(&self) -> &[bool] {
        &self.occupancy
    }

    pub fn occupancy_mut(&mut self) -> &mut [bool] {
        &mut self.occupancy
    }

    #[inline]
    pub fn cell_center(&self, cell: [usize; 3]) -> [f64; 3] {
        let mut x = [0.0; 3];
        for a in 0..self.dim {
            x[a] = self.origin[a] + (cell[a] as f64 + 0.5) * self.spacing;
        }
        x
    }

    /// Cell whose box contains `x`, or `None` when outside the grid.
    pub fn cell_at(&self, x: &[f64]) -> Option<[usize; 3]> {
        let mut cell = [0usize; 3];
        for a in 0..self.dim {
            let t = (x[a] - self.origin[a]) / self.spacing;
            if t < 0.0 || t >= self.shape[a] as f64 {
                return None;
            }
            cell[a] = t as usize;
        }
        Some(cell)
    }

    pub fn occupied_count(&self) -> usize {
        self.occupancy.iter().filter(|&&b| b).count()
    }

    /// Volume estimate `(#occupied cells) * h^N`.
    pub fn volume(&self) -> f64 {
        self.occupied_count() as f64 * self.cell_volume()
    }

    pub fn cell_volume(&self) -> f64 {
        self.spacing.powi(self.dim as i32)
    }

    pub fn iter_cells(&self) -> impl Iterator<Item = [usize; 3]> + '_ {
        let [nx, ny, nz] = self.shape;
        (0..nz).flat_map(move |k| (0..ny).flat_map(move |j| (0..nx).map(move |i| [i, j, k])))
    }

    /// Same lattice (spacing, alignment and extent).
    pub fn is_compatible(&self, other: &GridDomain) -> bool {
        self.dim == other.dim
            && self.shape == other.shape
            && (self.spacing - other.spacing).abs() <= 1e-12 * self.spacing
            && (0..self.dim)
                .all(|a| (self.origin[a] - other.origin[a]).abs() <= 1e-9 * self.spacing)
    }

    /// Mask inclusion on a shared lattice.
    pub fn is_subset_of(&self, other: &GridDomain) -> bool {
        self.is_compatible(other)
            && self
                .occupancy
                .iter()
                .zip(other.occupancy.iter())
                .all(|(&a, &b)| !a || b)
    }

    /// Intersect with the mask of another grid on the same lattice.
    pub fn intersect(&self, other: &GridDomain) -> Result<GridDomain> {
        self.zip_with(other, |a, b| a && b)
    }

    pub fn subtract(&self, other: &GridDomain) -> Result<GridDomain> {
        self.zip_with(other, |a, b| a && !b)
    }

    pub fn union(&self, other: &GridDomain) -> Result<GridDomain> {
        self.zip_with(other, |a, b| a || b)
    }

    fn zip_with(&self, other: &GridDomain, f: impl Fn(bool, bool) -> bool) -> Result<GridDomain> {
        if !self.is_compatible(other) {
            return Err(Error::Precondition(
                "grids must share spacing, origin and extent".into(),
            ));
        }
        let mut out = self.clone();
        for (o, (&a, &b)) in out
            .occupancy
            .iter_mut()
            .zip(self.occupancy.iter().zip(other.occupancy.iter()))
        {
            *o = f(a, b);
        }
        Ok(out)
    }

    /// Re-embed the mask into a larger bounding box on the same lattice.
    /// New cells are unoccupied. The new bounds are snapped outward so the
    /// two lattices stay aligned.
    pub fn embed(&self, bounds: BoxBounds) -> GridDomain {
        let h = self.spacing;
        let mut shift = [0i64; 3];
        let mut shape = [1usize; 3];
        let mut origin = [0.0; 3];
        for a in 0..self.dim {
            let below = ((self.origin[a] - bounds.min[a]) / h).ceil().max(0.0) as i64;
            let above = ((bounds.max[a] - (self.origin[a] + self.shape[a] as f64 * h)) / h)
                .ceil()
                .max(0.0) as i64;
            shift[a] = below;
            shape[a] = self.shape[a] + below as usize + above as usize;
            origin[a] = self.origin[a] - below as f64 * h;
        }
        let mut out = GridDomain {
            dim: self.dim,
            shape,
            origin,
            spacing: h,
            occupancy: vec![false; shape[0] * shape[1] * shape[2]],
        };
        for cell in self.iter_cells() {
            if self.occupied(cell) {
                let moved = [
                    cell[0] + shift[0] as usize,
                    cell[1] + shift[1] as usize,
                    cell[2] + shift[2] as usize,
                ];
                out.set(moved, true);
            }
        }
        out
    }

    /// Extract the sub-grid covering `bounds` (clipped to this grid).
    pub fn crop(&self, bounds: BoxBounds) -> GridDomain {
        let h = self.spacing;
        let mut lo = [0usize; 3];
        let mut hi = [1usize; 3];
        for a in 0..self.dim {
            let l = ((bounds.min[a] - self.origin[a]) / h).floor().max(0.0) as usize;
            let u = (((bounds.max[a] - self.origin[a]) / h).ceil() as usize).min(self.shape[a]);
            lo[a] = l.min(self.shape[a].saturating_sub(1));
            hi[a] = u.max(lo[a] + 1);
        }
        let mut shape = [1usize; 3];
        let mut origin = [0.0; 3];
        for a in 0..self.dim {
            shape[a] = hi[a] - lo[a];
            origin[a] = self.origin[a] + lo[a] as f64 * h;
        }
        let mut out = GridDomain {
            dim: self.dim,
            shape,
            origin,
            spacing: h,
            occupancy: vec![false; shape[0] * shape[1] * shape[2]],
        };
        for cell in out.clone().iter_cells() {
            let src = [cell[0] + lo[0], cell[1] + lo[1], cell[2] + lo[2]];
            out.set(cell, self.occupied(src));
        }
        out
    }

    /// Coarsen the mask by an integer factor; a coarse cell is occupied when
    /// at least half of its fine children are.
    pub fn coarsen(&self, factor: usize) -> GridDomain {
        if factor <= 1 {
            return self.clone();
        }
        let mut shape = [1usize; 3];
        for a in 0..self.dim {
            shape[a] = (self.shape[a] + factor - 1) / factor;
        }
        let mut out = GridDomain {
            dim: self.dim,
            shape,
            origin: self.origin,
            spacing: self.spacing * factor as f64,
            occupancy: vec![false; shape[0] * shape[1] * shape[2]],
        };
        for coarse in out.clone().iter_cells() {
            let mut inside = 0usize;
            let mut total = 0usize;
            let fz = if self.dim >= 3 { factor } else { 1 };
            let fy = if self.dim >= 2 { factor } else { 1 };
            for dz in 0..fz {
                for dy in 0..fy {
                    for dx in 0..factor {
                        let fine = [
                            coarse[0] * factor + dx,
                            coarse[1] * if self.dim >= 2 { factor } else { 1 } + dy,
                            coarse[2] * if self.dim >= 3 { factor } else { 1 } + dz,
                        ];
                        if (0..self.dim).all(|a| fine[a] < self.shape[a]) {
                            total += 1;
                            if self.occupied(fine) {
                                inside += 1;
                            }
                        }
                    }
                }
            }
            if total > 0 && 2 * inside >= total {
                out.set(coarse, true);
            }
        }
        out
    }

    /// Face-neighbor indices of `idx` that stay inside the grid.
    pub fn face_neighbors(&self, idx: usize) -> impl Iterator<Item = usize> + '_ {
        let cell = self.cell_of_index(idx);
        (0..self.dim).flat_map(move |a| {
            let mut out = Vec::with_capacity(2);
            if cell[a] > 0 {
                let mut c = cell;
                c[a] -= 1;
                out.push(self.index(c));
            }
            if cell[a] + 1 < self.shape[a] {
                let mut c = cell;
                c[a] += 1;
                out.push(self.index(c));
            }
            out
        })
    }

    /// Does the cell touch the complement (an unoccupied face neighbor or
    /// the grid border)?
    pub fn touches_complement(&self, idx: usize) -> bool {
        let cell = self.cell_of_index(idx);
        for a in 0..self.dim {
            if cell[a] == 0 || cell[a] + 1 == self.shape[a] {
                return true;
            }
            let mut c = cell;
            c[a] -= 1;
            if !self.occupied(c) {
                return true;
            }
            c[a] += 2;
            if !self.occupied(c) {
                return true;
            }
        }
        false
    }
}

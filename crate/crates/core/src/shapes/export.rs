use std::io::Write;

use super::grid::GridDomain;
use crate::error::Result;

/// Binary PGM (P5): 0 = outside, 255 = inside. For 3-d grids each z-slice is
/// stacked vertically.
pub fn to_pgm(grid: &GridDomain) -> Vec<u8> {
    let [nx, ny, nz] = grid.shape();
    let rows = ny * nz;
    let mut out = Vec::with_capacity(64 + nx * rows);
    write!(out, "P5\n{} {}\n255\n", nx, rows).expect("write to vec");
    for k in 0..nz {
        // image convention: first row on top
        for j in (0..ny).rev() {
            for i in 0..nx {
                let v = if grid.occupied([i, j, k]) { 255u8 } else { 0u8 };
                out.push(v);
            }
        }
    }
    out
}

pub fn write_pgm(grid: &GridDomain, path: &std::path::Path) -> Result<()> {
    std::fs::write(path, to_pgm(grid))?;
    Ok(())
}

/// Extra geometry drawn on top of the occupancy raster.
#[derive(Debug, Clone, Default)]
pub struct SvgOverlay {
    /// Circles: center, radius, css color.
    pub circles: Vec<([f64; 2], f64, &'static str)>,
    /// Points: position, css color.
    pub points: Vec<([f64; 2], &'static str)>,
}

/// SVG rendering of a 2-d grid: occupied cells as row runs, plus overlays.
pub fn to_svg(grid: &GridDomain, overlay: &SvgOverlay) -> String {
    assert_eq!(grid.dim(), 2, "SVG export is two-dimensional");
    let [nx, ny, _] = grid.shape();
    let h = grid.spacing();
    let o = grid.origin();
    let w = nx as f64 * h;
    let ht = ny as f64 * h;
    let mut s = String::new();
    s.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"{:.6} {:.6} {:.6} {:.6}\" width=\"640\">\n",
        o[0], -(o[1] + ht), w, ht
    ));
    s.push_str(&format!(
        "<rect x=\"{:.6}\" y=\"{:.6}\" width=\"{:.6}\" height=\"{:.6}\" fill=\"#f7f7f7\"/>\n",
        o[0],
        -(o[1] + ht),
        w,
        ht
    ));
    // merge consecutive occupied cells per row into single rects
    for j in 0..ny {
        let mut i = 0usize;
        while i < nx {
            if grid.occupied([i, j, 0]) {
                let start = i;
                while i < nx && grid.occupied([i, j, 0]) {
                    i += 1;
                }
                let x = o[0] + start as f64 * h;
                let y = -(o[1] + (j + 1) as f64 * h);
                s.push_str(&format!(
                    "<rect x=\"{:.6}\" y=\"{:.6}\" width=\"{:.6}\" height=\"{:.6}\" fill=\"#4a78b8\"/>\n",
                    x,
                    y,
                    (i - start) as f64 * h,
                    h
                ));
            } else {
                i += 1;
            }
        }
    }
    for (c, r, color) in &overlay.circles {
        s.push_str(&format!(
            "<circle cx=\"{:.6}\" cy=\"{:.6}\" r=\"{:.6}\" fill=\"none\" stroke=\"{}\" stroke-width=\"{:.6}\"/>\n",
            c[0], -c[1], r, color, h
        ));
    }
    for (p, color) in &overlay.points {
        s.push_str(&format!(
            "<circle cx=\"{:.6}\" cy=\"{:.6}\" r=\"{:.6}\" fill=\"{}\"/>\n",
            p[0],
            -p[1],
            1.5 * h,
            color
        ));
    }
    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::shapes::grid::BoxBounds;
    use crate::shapes::{rasterize, ShapeSpec};

    #[test]
    fn pgm_header_and_size() {
        let g = rasterize(
            &ShapeSpec::ball(&[0.0, 0.0], 1.0),
            0.25,
            BoxBounds::new([-1.0, -1.0, 0.0], [1.0, 1.0, 0.0]),
        )
        .unwrap();
        let bytes = to_pgm(&g);
        assert!(bytes.starts_with(b"P5\n8 8\n255\n"));
        assert_eq!(bytes.len(), b"P5\n8 8\n255\n".len() + 64);
        // deterministic
        assert_eq!(bytes, to_pgm(&g));
    }

    #[test]
    fn svg_is_deterministic_and_wellformed() {
        let g = rasterize(
            &ShapeSpec::ball(&[0.0, 0.0], 1.0),
            0.125,
            BoxBounds::new([-1.0, -1.0, 0.0], [1.0, 1.0, 0.0]),
        )
        .unwrap();
        let overlay = SvgOverlay {
            circles: vec![([0.0, 0.0], 0.9, "#d03030")],
            points: vec![([0.1, 0.2], "#30a030")],
        };
        let svg = to_svg(&g, &overlay);
        assert!(svg.starts_with("<svg"));
        assert!(svg.trim_end().ends_with("</svg>"));
        assert_eq!(svg, to_svg(&g, &overlay));
    }
}

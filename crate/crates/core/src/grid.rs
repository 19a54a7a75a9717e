//! Uniform node-centered grid covering the domain box, grid-sampled scalar
//! and vector fields, and the boundary-data families.

use std::fmt;

use crate::geometry::{Point, Rect};

#[derive(Debug, Clone, PartialEq)]
pub enum GridError {
    IncommensurateSpacing { length: f64, h: f64 },
    NonPositiveSpacing { h: f64 },
}

impl fmt::Display for GridError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GridError::IncommensurateSpacing { length, h } => {
                write!(f, "spacing {h} does not divide box edge length {length}")
            }
            GridError::NonPositiveSpacing { h } => write!(f, "spacing must be positive, got {h}"),
        }
    }
}

impl std::error::Error for GridError {}

/// Node-centered uniform grid including boundary nodes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub domain: Rect,
    pub h: f64,
    /// Node count along x (cells + 1).
    pub nx: usize,
    /// Node count along y (cells + 1).
    pub ny: usize,
}

impl Grid {
    #[inline]
    pub fn idx(&self, ix: usize, iy: usize) -> usize {
        iy * self.nx + ix
    }

    #[inline]
    pub fn x(&self, ix: usize) -> f64 {
        self.domain.lo.x + ix as f64 * self.h
    }

    #[inline]
    pub fn y(&self, iy: usize) -> f64 {
        self.domain.lo.y + iy as f64 * self.h
    }

    #[inline]
    pub fn node(&self, ix: usize, iy: usize) -> Point {
        Point::new(self.x(ix), self.y(iy))
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn is_boundary(&self, ix: usize, iy: usize) -> bool {
        ix == 0 || iy == 0 || ix == self.nx - 1 || iy == self.ny - 1
    }

    /// Grid row whose ordinate is nearest to `y`.
    pub fn nearest_row(&self, y: f64) -> usize {
        let t = ((y - self.domain.lo.y) / self.h).round();
        (t.max(0.0) as usize).min(self.ny - 1)
    }

    /// Grid column whose abscissa is nearest to `x`.
    pub fn nearest_col(&self, x: f64) -> usize {
        let t = ((x - self.domain.lo.x) / self.h).round();
        (t.max(0.0) as usize).min(self.nx - 1)
    }
}

/// Builds a node-centered grid; `h` must divide both box edge lengths to a
/// relative accuracy of 1e-12.
pub fn build_grid(domain: Rect, h: f64) -> Result<Grid, GridError> {
    if !(h > 0.0) {
        return Err(GridError::NonPositiveSpacing { h });
    }
    let mut counts = [0usize; 2];
    for (slot, length) in counts.iter_mut().zip([domain.width(), domain.height()]) {
        let cells = length / h;
        let rounded = cells.round();
        if (cells - rounded).abs() > 1e-12 * cells.max(1.0) || rounded < 1.0 {
            return Err(GridError::IncommensurateSpacing { length, h });
        }
        *slot = rounded as usize + 1;
    }
    Ok(Grid {
        domain,
        h,
        nx: counts[0],
        ny: counts[1],
    })
}

/// Grid-sampled scalar function, one value per node.
#[derive(Debug, Clone)]
pub struct ScalarField {
    pub grid: Grid,
    pub values: Vec<f64>,
}

impl ScalarField {
    pub fn zeros(grid: Grid) -> Self {
        ScalarField {
            grid,
            values: vec![0.0; grid.len()],
        }
    }

    pub fn from_fn(grid: Grid, f: impl Fn(Point) -> f64) -> Self {
        let mut values = vec![0.0; grid.len()];
        for iy in 0..grid.ny {
            for ix in 0..grid.nx {
                values[grid.idx(ix, iy)] = f(grid.node(ix, iy));
            }
        }
        ScalarField { grid, values }
    }

    pub fn all_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    /// Maximum over nodes selected by `mask`.
    pub fn max_over(&self, mask: &[bool]) -> f64 {
        self.values
            .iter()
            .zip(mask)
            .filter(|(_, &m)| m)
            .map(|(v, _)| *v)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min_over(&self, mask: &[bool]) -> f64 {
        self.values
            .iter()
            .zip(mask)
            .filter(|(_, &m)| m)
            .map(|(v, _)| *v)
            .fold(f64::INFINITY, f64::min)
    }
}

/// Grid-sampled vector function, two values per node.
#[derive(Debug, Clone)]
pub struct VectorField {
    pub grid: Grid,
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
}

impl VectorField {
    pub fn zeros(grid: Grid) -> Self {
        VectorField {
            grid,
            xs: vec![0.0; grid.len()],
            ys: vec![0.0; grid.len()],
        }
    }

    pub fn magnitude(&self) -> ScalarField {
        let values = self
            .xs
            .iter()
            .zip(&self.ys)
            .map(|(gx, gy)| (gx * gx + gy * gy).sqrt())
            .collect();
        ScalarField {
            grid: self.grid,
            values,
        }
    }

    pub fn all_finite(&self) -> bool {
        self.xs.iter().chain(&self.ys).all(|v| v.is_finite())
    }
}

/// Families of Dirichlet boundary data.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BoundaryFamily {
    /// phi(x) = x1
    X1,
    /// phi(x) = x2
    X2,
    /// phi(x) = x1 * x2
    BilinearX1X2,
    Constant(f64),
    /// phi(x) = Re((x1 + i x2)^k), the degree-k harmonic polynomial.
    FourierMode(u32),
}

/// Boundary data specification. When `normalized` is set, the data is scaled
/// so that the sup of |phi| over the boundary nodes equals 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundarySpec {
    pub family: BoundaryFamily,
    pub normalized: bool,
}

impl BoundarySpec {
    pub fn new(family: BoundaryFamily, normalized: bool) -> Self {
        BoundarySpec { family, normalized }
    }

    /// Unscaled family value at a point.
    pub fn raw(&self, p: Point) -> f64 {
        match self.family {
            BoundaryFamily::X1 => p.x,
            BoundaryFamily::X2 => p.y,
            BoundaryFamily::BilinearX1X2 => p.x * p.y,
            BoundaryFamily::Constant(c) => c,
            BoundaryFamily::FourierMode(k) => {
                // Re((x + iy)^k) by repeated multiplication.
                let (mut re, mut im) = (1.0, 0.0);
                for _ in 0..k {
                    let nre = re * p.x - im * p.y;
                    im = re * p.y + im * p.x;
                    re = nre;
                }
                re
            }
        }
    }

    /// Sup of |phi| over the boundary nodes of `grid`, before normalization.
    pub fn raw_boundary_sup(&self, grid: &Grid) -> f64 {
        let mut sup: f64 = 0.0;
        for iy in 0..grid.ny {
            for ix in 0..grid.nx {
                if grid.is_boundary(ix, iy) {
                    sup = sup.max(self.raw(grid.node(ix, iy)).abs());
                }
            }
        }
        sup
    }

    /// Scaling factor applied to the raw family.
    pub fn scale(&self, grid: &Grid) -> f64 {
        if self.normalized {
            let sup = self.raw_boundary_sup(grid);
            if sup > 0.0 {
                return 1.0 / sup;
            }
        }
        1.0
    }

    /// Nodal evaluation over the whole grid (with normalization applied).
    pub fn values(&self, grid: &Grid) -> Vec<f64> {
        let scale = self.scale(grid);
        let mut values = vec![0.0; grid.len()];
        for iy in 0..grid.ny {
            for ix in 0..grid.nx {
                values[grid.idx(ix, iy)] = scale * self.raw(grid.node(ix, iy));
            }
        }
        values
    }

    /// Sup of |phi| over boundary nodes after normalization.
    pub fn boundary_sup(&self, grid: &Grid) -> f64 {
        self.scale(grid) * self.raw_boundary_sup(grid)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Point;

    fn default_box() -> Rect {
        Rect::new(Point::new(-4.0, -7.0), Point::new(4.0, 3.0))
    }

    #[test]
    fn grid_node_counts() {
        let g = build_grid(default_box(), 1.0 / 16.0).unwrap();
        assert_eq!((g.nx, g.ny), (129, 161));
        let g = build_grid(Rect::new(Point::new(0.0, 0.0), Point::new(1.0, 1.0)), 0.5).unwrap();
        assert_eq!((g.nx, g.ny), (3, 3));
    }

    #[test]
    fn grid_rejects_incommensurate_spacing() {
        let err = build_grid(default_box(), 0.3).unwrap_err();
        assert!(matches!(err, GridError::IncommensurateSpacing { .. }));
        assert!(build_grid(default_box(), -0.5).is_err());
    }

    #[test]
    fn grid_nodes_cover_box() {
        let g = build_grid(default_box(), 0.25).unwrap();
        assert_eq!(g.node(0, 0), Point::new(-4.0, -7.0));
        let last = g.node(g.nx - 1, g.ny - 1);
        assert!((last.x - 4.0).abs() < 1e-12 && (last.y - 3.0).abs() < 1e-12);
    }

    #[test]
    fn boundary_normalization() {
        let g = build_grid(default_box(), 0.25).unwrap();
        let phi = BoundarySpec::new(BoundaryFamily::X1, true);
        assert!((phi.boundary_sup(&g) - 1.0).abs() < 1e-15);
        // sup |x1| over the boundary is 4, so the scale is 1/4.
        assert!((phi.scale(&g) - 0.25).abs() < 1e-15);
        let raw = BoundarySpec::new(BoundaryFamily::X1, false);
        assert_eq!(raw.scale(&g), 1.0);
    }

    #[test]
    fn fourier_mode_matches_harmonic_polynomials() {
        let spec = BoundarySpec::new(BoundaryFamily::FourierMode(2), false);
        let p = Point::new(0.7, -1.3);
        assert!((spec.raw(p) - (p.x * p.x - p.y * p.y)).abs() < 1e-14);
        let spec = BoundarySpec::new(BoundaryFamily::FourierMode(3), false);
        assert!((spec.raw(p) - (p.x.powi(3) - 3.0 * p.x * p.y * p.y)).abs() < 1e-13);
    }
}

//! Two-disk configuration: the rectangular domain, the disks `B+` and `B-`,
//! and the derived regions used by the gradient-bound argument.
//!
//! `B+` is the unit disk centered at the origin; `B-` is the unit disk
//! centered at `(0, -2-2*delta)`, so the disks are `2*delta` apart and the
//! horizontal line `x2 = -1-delta` runs midway between them.

use std::fmt;

use crate::grid::Grid;

/// Default cap on the half-gap parameter.
pub const DEFAULT_DELTA_CAP: f64 = 0.5;
/// Default interior-margin parameter.
pub const DEFAULT_MU: f64 = 0.25;

/// Slack used when testing membership in the closed regions, so that grid
/// nodes landing exactly on a region boundary are kept.
pub const MASK_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn dist(self, other: Point) -> f64 {
        ((self.x - other.x).powi(2) + (self.y - other.y).powi(2)).sqrt()
    }

    pub fn norm(self) -> f64 {
        (self.x * self.x + self.y * self.y).sqrt()
    }
}

/// Axis-aligned rectangle, the computational domain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect {
    pub lo: Point,
    pub hi: Point,
}

impl Rect {
    pub const fn new(lo: Point, hi: Point) -> Self {
        Rect { lo, hi }
    }

    pub fn contains(&self, p: Point) -> bool {
        p.x >= self.lo.x - MASK_TOL
            && p.x <= self.hi.x + MASK_TOL
            && p.y >= self.lo.y - MASK_TOL
            && p.y <= self.hi.y + MASK_TOL
    }

    /// Distance from `p` to the rectangle boundary (for interior points).
    pub fn boundary_distance(&self, p: Point) -> f64 {
        let dx = (p.x - self.lo.x).min(self.hi.x - p.x);
        let dy = (p.y - self.lo.y).min(self.hi.y - p.y);
        dx.min(dy)
    }

    pub fn width(&self) -> f64 {
        self.hi.x - self.lo.x
    }

    pub fn height(&self) -> f64 {
        self.hi.y - self.lo.y
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum GeometryError {
    NonPositiveParameter { name: &'static str, value: f64 },
    InvalidParameter { name: &'static str, value: f64 },
    GapTooWide { delta: f64, limit: f64 },
    MarginViolation { required: f64, actual: f64 },
    OutOfDomain { x: f64, y: f64 },
}

impl fmt::Display for GeometryError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GeometryError::NonPositiveParameter { name, value } => {
                write!(f, "parameter {name} must be positive, got {value}")
            }
            GeometryError::InvalidParameter { name, value } => {
                write!(f, "parameter {name} out of range, got {value}")
            }
            GeometryError::GapTooWide { delta, limit } => {
                write!(f, "half-gap delta = {delta} must be below {limit}")
            }
            GeometryError::MarginViolation { required, actual } => {
                write!(
                    f,
                    "disks must keep distance >= {required} to the box boundary, got {actual}"
                )
            }
            GeometryError::OutOfDomain { x, y } => {
                write!(f, "point ({x}, {y}) lies outside the domain box")
            }
        }
    }
}

impl std::error::Error for GeometryError {}

/// Validated two-disk configuration. Immutable after construction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Geometry {
    pub domain: Rect,
    pub delta: f64,
    pub mu: f64,
    pub radius: f64,
    pub center_plus: Point,
    pub center_minus: Point,
    pub delta_cap: f64,
}

impl Geometry {
    pub fn build(delta: f64, mu: f64, domain: Rect) -> Result<Geometry, GeometryError> {
        Geometry::build_with_cap(delta, mu, domain, DEFAULT_DELTA_CAP)
    }

    pub fn build_with_cap(
        delta: f64,
        mu: f64,
        domain: Rect,
        delta_cap: f64,
    ) -> Result<Geometry, GeometryError> {
        if !(delta > 0.0) {
            return Err(GeometryError::NonPositiveParameter {
                name: "delta",
                value: delta,
            });
        }
        if !(mu > 0.0) {
            return Err(GeometryError::NonPositiveParameter {
                name: "mu",
                value: mu,
            });
        }
        if mu >= 1.0 {
            return Err(GeometryError::InvalidParameter {
                name: "mu",
                value: mu,
            });
        }
        if delta >= delta_cap {
            return Err(GeometryError::GapTooWide {
                delta,
                limit: delta_cap,
            });
        }
        if delta >= mu {
            return Err(GeometryError::GapTooWide { delta, limit: mu });
        }
        let radius = 1.0;
        let center_plus = Point::new(0.0, 0.0);
        let center_minus = Point::new(0.0, -2.0 - 2.0 * delta);
        let geometry = Geometry {
            domain,
            delta,
            mu,
            radius,
            center_plus,
            center_minus,
            delta_cap,
        };
        // Both closed disks must keep distance >= 2*mu to the box walls.
        let mut margin = f64::INFINITY;
        for c in [center_plus, center_minus] {
            let wall = Rect::boundary_distance(&domain, c);
            margin = margin.min(wall - radius);
        }
        if margin < 2.0 * mu - MASK_TOL {
            return Err(GeometryError::MarginViolation {
                required: 2.0 * mu,
                actual: margin,
            });
        }
        Ok(geometry)
    }

    /// Distance from `p` to the circle bounding `B+`.
    pub fn dist_circle_plus(&self, p: Point) -> f64 {
        (p.dist(self.center_plus) - self.radius).abs()
    }

    /// Distance from `p` to the circle bounding `B-`.
    pub fn dist_circle_minus(&self, p: Point) -> f64 {
        (p.dist(self.center_minus) - self.radius).abs()
    }

    /// The gap midline ordinate `x2 = -1 - delta`.
    pub fn midline(&self) -> f64 {
        -1.0 - self.delta
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RegionLabel {
    DiskPlus,
    DiskMinus,
    Exterior,
}

/// Builds a validated two-disk configuration.
pub fn build_geometry(delta: f64, mu: f64, domain: Rect) -> Result<Geometry, GeometryError> {
    Geometry::build(delta, mu, domain)
}

/// Labels a point by the closed-disk convention: points on a bounding circle
/// are assigned to the disk. `B+` is tested first; the disks are disjoint so
/// the order only matters on a measure-zero set that no caller relies on.
pub fn classify(g: &Geometry, p: Point) -> Result<RegionLabel, GeometryError> {
    if !g.domain.contains(p) {
        return Err(GeometryError::OutOfDomain { x: p.x, y: p.y });
    }
    if p.dist(g.center_plus) <= g.radius {
        Ok(RegionLabel::DiskPlus)
    } else if p.dist(g.center_minus) <= g.radius {
        Ok(RegionLabel::DiskMinus)
    } else {
        Ok(RegionLabel::Exterior)
    }
}

/// Half-length `c1` of the gap segment `S`: the largest constant such that
/// every point `(x1, -1-delta)` with `|x1| <= c1` lies within distance `mu`
/// of the circle bounding `B+` (equivalently `B-`, by symmetry).
///
/// Closed form: the distance from `(x1, -1-delta)` to the circle is
/// `sqrt(x1^2 + (1+delta)^2) - 1`, so `c1 = sqrt((1+mu)^2 - (1+delta)^2)`.
pub fn gap_segment_halfwidth(g: &Geometry) -> Result<f64, GeometryError> {
    let arg = (1.0 + g.mu).powi(2) - (1.0 + g.delta).powi(2);
    if arg <= 0.0 {
        return Err(GeometryError::GapTooWide {
            delta: g.delta,
            limit: g.mu,
        });
    }
    Ok(arg.sqrt())
}

/// Per-node membership masks for the derived regions, on a given grid.
#[derive(Debug, Clone)]
pub struct RegionMasks {
    /// Nodes with distance >= mu to the box boundary.
    pub omega_mu: Vec<bool>,
    /// Collar of `B+` above the midline: `dist(x, circle+) <= mu`, `x2 >= -1-delta`.
    pub w_plus: Vec<bool>,
    /// Mirror collar of `B-` below the midline.
    pub w_minus: Vec<bool>,
    /// Thin rectangle `|x1| <= c1`, `|x2 + 1 + delta| <= delta/2`.
    pub e_region: Vec<bool>,
    /// Nodes of `E` on the grid row nearest the midline.
    pub s_band: Vec<bool>,
    pub c1: f64,
}

impl RegionMasks {
    pub fn count(mask: &[bool]) -> usize {
        mask.iter().filter(|&&b| b).count()
    }
}

/// Computes all region masks node-wise. Total on valid inputs.
pub fn region_masks(g: &Geometry, grid: &Grid) -> RegionMasks {
    let c1 = gap_segment_halfwidth(g).expect("geometry invariant delta < mu");
    let n = grid.len();
    let mut omega_mu = vec![false; n];
    let mut w_plus = vec![false; n];
    let mut w_minus = vec![false; n];
    let mut e_region = vec![false; n];
    let mut s_band = vec![false; n];
    let midline = g.midline();
    let s_row = grid.nearest_row(midline);
    for iy in 0..grid.ny {
        for ix in 0..grid.nx {
            let p = grid.node(ix, iy);
            let k = grid.idx(ix, iy);
            omega_mu[k] = g.domain.boundary_distance(p) >= g.mu - MASK_TOL;
            w_plus[k] = g.dist_circle_plus(p) <= g.mu + MASK_TOL && p.y >= midline - MASK_TOL;
            w_minus[k] = g.dist_circle_minus(p) <= g.mu + MASK_TOL && p.y <= midline + MASK_TOL;
            e_region[k] =
                p.x.abs() <= c1 + MASK_TOL && (p.y - midline).abs() <= 0.5 * g.delta + MASK_TOL;
            s_band[k] = e_region[k] && iy == s_row;
        }
    }
    RegionMasks {
        omega_mu,
        w_plus,
        w_minus,
        e_region,
        s_band,
        c1,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::build_grid;
    use rand::Rng;
    use rand::SeedableRng;

    fn default_box() -> Rect {
        Rect::new(Point::new(-4.0, -7.0), Point::new(4.0, 3.0))
    }

    #[test]
    fn builds_valid_geometry() {
        let g = build_geometry(0.1, 0.25, default_box()).unwrap();
        assert_eq!(g.center_minus, Point::new(0.0, -2.2));
        assert_eq!(g.center_plus, Point::new(0.0, 0.0));
        assert_eq!(g.radius, 1.0);
    }

    #[test]
    fn rejects_narrow_box() {
        let narrow = Rect::new(Point::new(-1.2, -7.0), Point::new(1.2, 3.0));
        let err = build_geometry(0.1, 0.25, narrow).unwrap_err();
        assert!(matches!(err, GeometryError::MarginViolation { .. }));
    }

    #[test]
    fn rejects_wide_gap() {
        let err = build_geometry(0.3, 0.25, default_box()).unwrap_err();
        assert!(matches!(err, GeometryError::GapTooWide { .. }));
    }

    #[test]
    fn rejects_nonpositive_parameters() {
        assert!(matches!(
            build_geometry(-0.1, 0.25, default_box()).unwrap_err(),
            GeometryError::NonPositiveParameter { name: "delta", .. }
        ));
        assert!(matches!(
            build_geometry(0.1, 0.0, default_box()).unwrap_err(),
            GeometryError::NonPositiveParameter { name: "mu", .. }
        ));
    }

    #[test]
    fn rejects_delta_above_cap() {
        let err = Geometry::build_with_cap(0.45, 0.6, default_box(), 0.4).unwrap_err();
        assert!(matches!(err, GeometryError::GapTooWide { limit, .. } if limit == 0.4));
    }

    #[test]
    fn classify_three_cases() {
        let g = build_geometry(0.1, 0.25, default_box()).unwrap();
        assert_eq!(
            classify(&g, Point::new(0.0, 0.0)).unwrap(),
            RegionLabel::DiskPlus
        );
        assert_eq!(
            classify(&g, Point::new(0.0, -1.1)).unwrap(),
            RegionLabel::Exterior
        );
        assert_eq!(
            classify(&g, Point::new(3.0, 2.0)).unwrap(),
            RegionLabel::Exterior
        );
        assert_eq!(
            classify(&g, Point::new(0.0, -2.2)).unwrap(),
            RegionLabel::DiskMinus
        );
        assert!(classify(&g, Point::new(9.0, 0.0)).is_err());
    }

    #[test]
    fn classify_mirror_symmetric() {
        let g = build_geometry(0.1, 0.25, default_box()).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(42);
        for _ in 0..10_000 {
            let x = rng.gen_range(-4.0..4.0);
            let y = rng.gen_range(-7.0..3.0);
            let a = classify(&g, Point::new(x, y)).unwrap();
            let b = classify(&g, Point::new(-x, y)).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn circle_distance_matches_definition() {
        let g = build_geometry(0.1, 0.25, default_box()).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..1_000_000 {
            let p = Point::new(rng.gen_range(-4.0..4.0), rng.gen_range(-7.0..3.0));
            let expect = ((p.x * p.x + p.y * p.y).sqrt() - 1.0).abs();
            assert!((g.dist_circle_plus(p) - expect).abs() <= 1e-15 * (1.0 + expect));
        }
    }

    // Frozen from the closed form sqrt((1+mu)^2 - (1+delta)^2), cross-checked
    // below by bisection on the distance predicate.
    #[test]
    fn gap_halfwidth_closed_form() {
        let g = build_geometry(0.1, 0.25, default_box()).unwrap();
        let c1 = gap_segment_halfwidth(&g).unwrap();
        assert!((c1 - 0.5937171043518959).abs() < 1e-15);

        let g = build_geometry(0.05, 0.25, default_box()).unwrap();
        let c1 = gap_segment_halfwidth(&g).unwrap();
        assert!((c1 - 0.6782329983125268).abs() < 1e-15);

        let g = build_geometry(0.249, 0.25, default_box()).unwrap();
        assert!(gap_segment_halfwidth(&g).is_ok());
    }

    #[test]
    fn gap_halfwidth_matches_bisection() {
        for (delta, mu) in [(0.1, 0.25), (0.05, 0.25), (0.2, 0.3), (0.01, 0.1)] {
            let g = build_geometry(delta, mu, default_box()).unwrap();
            let c1 = gap_segment_halfwidth(&g).unwrap();
            // Bisection on the membership predicate dist((x, -1-delta), circle+) <= mu.
            let inside = |x: f64| g.dist_circle_plus(Point::new(x, g.midline())) <= mu;
            let (mut lo, mut hi) = (0.0, 2.0);
            assert!(inside(lo) && !inside(hi));
            for _ in 0..60 {
                let mid = 0.5 * (lo + hi);
                if inside(mid) {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            assert!((0.5 * (lo + hi) - c1).abs() < 1e-10);
        }
    }

    #[test]
    fn masks_membership_cases() {
        // h = 0.05 puts the midline x2 = -1.1 exactly on a grid row.
        let g = build_geometry(0.1, 0.25, default_box()).unwrap();
        let grid = build_grid(g.domain, 0.05).unwrap();
        let masks = region_masks(&g, &grid);

        // (0, -1-delta+mu/2) is in W+ but not E since mu/2 > delta/2.
        let iy = grid.nearest_row(g.midline() + g.mu / 2.0);
        let ix = grid.nearest_col(0.0);
        let k = grid.idx(ix, iy);
        assert!(masks.w_plus[k] && !masks.e_region[k]);

        // The midline node is in every region.
        let iy = grid.nearest_row(g.midline());
        let k = grid.idx(ix, iy);
        assert!(masks.w_plus[k] && masks.w_minus[k]);
        assert!(masks.e_region[k] && masks.s_band[k] && masks.omega_mu[k]);

        // (0, 1+2mu) is in Omega^mu but its distance to the circle is 2mu > mu.
        let iy = grid.nearest_row(1.0 + 2.0 * g.mu);
        let k = grid.idx(ix, iy);
        assert!(masks.omega_mu[k] && !masks.w_plus[k]);
    }

    #[test]
    fn e_contained_in_w_and_omega_mu() {
        for delta in [0.2, 0.1, 0.05] {
            let g = build_geometry(delta, 0.25, default_box()).unwrap();
            let grid = build_grid(g.domain, 1.0 / 64.0).unwrap();
            let masks = region_masks(&g, &grid);
            assert!(RegionMasks::count(&masks.e_region) > 0);
            assert!(RegionMasks::count(&masks.s_band) > 0);
            for k in 0..grid.len() {
                if masks.e_region[k] {
                    assert!(masks.w_plus[k] || masks.w_minus[k]);
                    assert!(masks.omega_mu[k]);
                }
                if masks.s_band[k] {
                    assert!(masks.e_region[k]);
                }
            }
        }
    }
}

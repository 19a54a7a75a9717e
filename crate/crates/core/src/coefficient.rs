//! Conductivity field in two modes: sharp piecewise constant, and a radial
//! C^1 smoothing supported in an epsilon-collar of each circle, with an
//! analytic gradient. Also the exact edge-averaged coefficients used by the
//! flux-form discretization.

use std::fmt;

use crate::geometry::{classify, Geometry, GeometryError, Point, RegionLabel};

#[derive(Debug, Clone, PartialEq)]
pub enum CoefficientError {
    NonPositiveConductivity { name: &'static str, value: f64 },
    CollarsOverlap { epsilon: f64, limit: f64 },
    OutOfDomain { x: f64, y: f64 },
}

impl fmt::Display for CoefficientError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CoefficientError::NonPositiveConductivity { name, value } => {
                write!(f, "conductivity {name} must be positive, got {value}")
            }
            CoefficientError::CollarsOverlap { epsilon, limit } => {
                write!(f, "epsilon = {epsilon} must stay below delta/4 = {limit}")
            }
            CoefficientError::OutOfDomain { x, y } => {
                write!(f, "point ({x}, {y}) lies outside the domain box")
            }
        }
    }
}

impl std::error::Error for CoefficientError {}

impl From<GeometryError> for CoefficientError {
    fn from(e: GeometryError) -> Self {
        match e {
            GeometryError::OutOfDomain { x, y } => CoefficientError::OutOfDomain { x, y },
            other => panic!("unexpected geometry error during evaluation: {other}"),
        }
    }
}

/// Piecewise-constant conductivity: `kappa_plus` on `B+`, `kappa_minus` on
/// `B-`, 1 outside (closed-disk convention).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SharpCoefficient {
    pub geometry: Geometry,
    pub kappa_plus: f64,
    pub kappa_minus: f64,
}

impl SharpCoefficient {
    pub fn new(
        geometry: Geometry,
        kappa_plus: f64,
        kappa_minus: f64,
    ) -> Result<Self, CoefficientError> {
        if !(kappa_plus > 0.0) {
            return Err(CoefficientError::NonPositiveConductivity {
                name: "kappa_plus",
                value: kappa_plus,
            });
        }
        if !(kappa_minus > 0.0) {
            return Err(CoefficientError::NonPositiveConductivity {
                name: "kappa_minus",
                value: kappa_minus,
            });
        }
        Ok(SharpCoefficient {
            geometry,
            kappa_plus,
            kappa_minus,
        })
    }

    pub fn region_value(&self, label: RegionLabel) -> f64 {
        match label {
            RegionLabel::DiskPlus => self.kappa_plus,
            RegionLabel::DiskMinus => self.kappa_minus,
            RegionLabel::Exterior => 1.0,
        }
    }

    pub fn eval(&self, p: Point) -> Result<f64, CoefficientError> {
        Ok(self.region_value(classify(&self.geometry, p)?))
    }
}

/// Evaluates the sharp three-case conductivity at a point.
pub fn eval_sharp(c: &SharpCoefficient, p: Point) -> Result<f64, CoefficientError> {
    c.eval(p)
}

/// Radial C^1 ramp connecting the inner value `kappa` at `r = 1-eps` to 1 at
/// `r = 1+eps`, monotone across the collar.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Profile {
    /// a(r) = 1 + (kappa-1) * (1 - sin(pi (r-1) / (2 eps))) / 2
    CosineRamp,
    /// a(r) = kappa + (1-kappa) * s(t), s(t) = t^2 (3 - 2t), t = (r-1+eps)/(2 eps)
    Smoothstep,
}

impl Profile {
    /// Ramp value at radius `r` in the collar `[1-eps, 1+eps]`.
    pub fn value(&self, kappa: f64, eps: f64, r: f64) -> f64 {
        match self {
            Profile::CosineRamp => {
                let s = (std::f64::consts::PI * (r - 1.0) / (2.0 * eps)).sin();
                1.0 + (kappa - 1.0) * (1.0 - s) / 2.0
            }
            Profile::Smoothstep => {
                let t = (r - (1.0 - eps)) / (2.0 * eps);
                kappa + (1.0 - kappa) * t * t * (3.0 - 2.0 * t)
            }
        }
    }

    /// Radial derivative of the ramp at `r` in the collar.
    pub fn deriv(&self, kappa: f64, eps: f64, r: f64) -> f64 {
        match self {
            Profile::CosineRamp => {
                let c = (std::f64::consts::PI * (r - 1.0) / (2.0 * eps)).cos();
                -(kappa - 1.0) * std::f64::consts::PI / (4.0 * eps) * c
            }
            Profile::Smoothstep => {
                let t = (r - (1.0 - eps)) / (2.0 * eps);
                (1.0 - kappa) * 6.0 * t * (1.0 - t) / (2.0 * eps)
            }
        }
    }
}

/// Smoothed conductivity: equals the sharp field outside the epsilon-collars
/// of the two circles, and the radial ramp inside them.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmoothCoefficient {
    pub base: SharpCoefficient,
    pub epsilon: f64,
    pub profile: Profile,
}

impl SmoothCoefficient {
    /// Requires `eps < delta/4` so the two collars never meet.
    pub fn new(
        base: SharpCoefficient,
        epsilon: f64,
        profile: Profile,
    ) -> Result<Self, CoefficientError> {
        let limit = base.geometry.delta / 4.0;
        if !(epsilon > 0.0) || epsilon >= limit {
            return Err(CoefficientError::CollarsOverlap { epsilon, limit });
        }
        Ok(SmoothCoefficient {
            base,
            epsilon,
            profile,
        })
    }

    /// Value and exact gradient. The gradient is parallel to the radial
    /// direction of the owning disk inside a collar and zero elsewhere.
    pub fn eval(&self, p: Point) -> Result<(f64, [f64; 2]), CoefficientError> {
        if !self.base.geometry.domain.contains(p) {
            return Err(CoefficientError::OutOfDomain { x: p.x, y: p.y });
        }
        let eps = self.epsilon;
        for (center, kappa) in [
            (self.base.geometry.center_plus, self.base.kappa_plus),
            (self.base.geometry.center_minus, self.base.kappa_minus),
        ] {
            let r = p.dist(center);
            if (r - 1.0).abs() <= eps {
                let value = self.profile.value(kappa, eps, r);
                let da = self.profile.deriv(kappa, eps, r);
                let inv_r = 1.0 / r;
                return Ok((
                    value,
                    [da * (p.x - center.x) * inv_r, da * (p.y - center.y) * inv_r],
                ));
            }
        }
        Ok((self.base.eval(p)?, [0.0, 0.0]))
    }

    /// Value of the radial profile about one disk center, as a function of
    /// the distance `r` from that center.
    pub fn radial_value(&self, kappa: f64, r: f64) -> f64 {
        if r <= 1.0 - self.epsilon {
            kappa
        } else if r >= 1.0 + self.epsilon {
            1.0
        } else {
            self.profile.value(kappa, self.epsilon, r)
        }
    }
}

/// Value and gradient of the smoothed conductivity.
pub fn eval_smooth(c: &SmoothCoefficient, p: Point) -> Result<(f64, [f64; 2]), CoefficientError> {
    c.eval(p)
}

/// Harmonic average of the sharp conductivity along the axis-aligned segment
/// between two adjacent nodes: `|pq| / integral over pq of 1/a`.
///
/// The integral is exact: the segment is split at its intersections with
/// each circle and each piece contributes length/value.
pub fn edge_harmonic_mean(c: &SharpCoefficient, p: Point, q: Point) -> f64 {
    let d = Point::new(q.x - p.x, q.y - p.y);
    let mut cuts = [0.0f64; 6];
    let mut ncuts = 0;
    cuts[ncuts] = 0.0;
    ncuts += 1;
    for center in [c.geometry.center_plus, c.geometry.center_minus] {
        let ex = p.x - center.x;
        let ey = p.y - center.y;
        // |p + t d - center|^2 = radius^2
        let a2 = d.x * d.x + d.y * d.y;
        let b = 2.0 * (ex * d.x + ey * d.y);
        let c0 = ex * ex + ey * ey - c.geometry.radius * c.geometry.radius;
        let disc = b * b - 4.0 * a2 * c0;
        if disc > 0.0 {
            let sq = disc.sqrt();
            for t in [(-b - sq) / (2.0 * a2), (-b + sq) / (2.0 * a2)] {
                if t > 0.0 && t < 1.0 {
                    cuts[ncuts] = t;
                    ncuts += 1;
                }
            }
        }
    }
    cuts[ncuts] = 1.0;
    ncuts += 1;
    let cuts = &mut cuts[..ncuts];
    cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());

    let mut inv_sum = 0.0;
    for w in cuts.windows(2) {
        let (t0, t1) = (w[0], w[1]);
        if t1 <= t0 {
            continue;
        }
        let tm = 0.5 * (t0 + t1);
        let mid = Point::new(p.x + tm * d.x, p.y + tm * d.y);
        let label = classify(&c.geometry, mid).unwrap_or(RegionLabel::Exterior);
        inv_sum += (t1 - t0) / c.region_value(label);
    }
    1.0 / inv_sum
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_geometry, Rect};
    use rand::Rng;
    use rand::SeedableRng;

    fn geometry(delta: f64) -> Geometry {
        build_geometry(
            delta,
            0.25,
            Rect::new(Point::new(-4.0, -7.0), Point::new(4.0, 3.0)),
        )
        .unwrap()
    }

    #[test]
    fn sharp_three_case_values() {
        let c = SharpCoefficient::new(geometry(0.1), 5.0, 0.2).unwrap();
        assert_eq!(c.eval(Point::new(0.0, 0.0)).unwrap(), 5.0);
        assert_eq!(c.eval(Point::new(0.0, -1.1)).unwrap(), 1.0);
        assert_eq!(c.eval(Point::new(0.0, -2.2)).unwrap(), 0.2);
        assert!(c.eval(Point::new(5.0, 0.0)).is_err());
        assert!(SharpCoefficient::new(geometry(0.1), 0.0, 1.0).is_err());
    }

    #[test]
    fn smooth_matches_sharp_outside_collars() {
        let base = SharpCoefficient::new(geometry(0.1), 5.0, 0.2).unwrap();
        let c = SmoothCoefficient::new(base, 0.1 / 8.0, Profile::CosineRamp).unwrap();
        let eps = c.epsilon;
        // On the collar edges the ramp meets the sharp values exactly.
        let (v, g) = c.eval(Point::new(0.0, 1.0 + eps)).unwrap();
        assert!((v - 1.0).abs() < 1e-14 && g[0].abs() < 1e-12);
        let (v, _) = c.eval(Point::new(0.0, 1.0 - eps)).unwrap();
        assert!((v - 5.0).abs() < 1e-14);
        // Far from both collars the smooth field is the sharp field.
        let (v, g) = c.eval(Point::new(2.0, 2.0)).unwrap();
        assert_eq!(v, 1.0);
        assert_eq!(g, [0.0, 0.0]);
    }

    #[test]
    fn collar_overlap_rejected() {
        let base = SharpCoefficient::new(geometry(0.1), 5.0, 0.2).unwrap();
        let err = SmoothCoefficient::new(base, 0.1 / 4.0, Profile::CosineRamp).unwrap_err();
        assert!(matches!(err, CoefficientError::CollarsOverlap { .. }));
    }

    // Mid-collar value and gradient of the cosine ramp, checked symbolically:
    // a(1) = (1+kappa)/2 and |grad a|(1) = (kappa-1) pi / (4 eps), inward.
    #[test]
    fn cosine_ramp_midpoint() {
        let base = SharpCoefficient::new(geometry(0.1), 5.0, 0.2).unwrap();
        let eps = 0.0125;
        let c = SmoothCoefficient::new(base, eps, Profile::CosineRamp).unwrap();
        let (v, g) = c.eval(Point::new(1.0, 0.0)).unwrap();
        assert!((v - 3.0).abs() < 1e-14);
        let expected = (5.0 - 1.0) * std::f64::consts::PI / (4.0 * eps);
        assert!((g[0] + expected).abs() < 1e-10 * expected);
        assert!(g[1].abs() < 1e-14);
    }

    #[test]
    fn smooth_gradient_matches_finite_differences() {
        let base = SharpCoefficient::new(geometry(0.1), 5.0, 0.2).unwrap();
        for profile in [Profile::CosineRamp, Profile::Smoothstep] {
            let c = SmoothCoefficient::new(base, 0.0125, profile).unwrap();
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
            let mut checked = 0;
            while checked < 200 {
                let theta = rng.gen_range(0.0..std::f64::consts::TAU);
                let r = rng.gen_range(1.0 - 0.8 * c.epsilon..1.0 + 0.8 * c.epsilon);
                let p = Point::new(r * theta.cos(), r * theta.sin());
                // Keep the whole 4th-order stencil inside the collar.
                let step = 0.02 * c.epsilon;
                if (p.dist(c.base.geometry.center_plus) - 1.0).abs() + 2.0 * step >= c.epsilon {
                    continue;
                }
                let (_, g) = c.eval(p).unwrap();
                for axis in 0..2 {
                    let ev = |t: f64| {
                        let q = if axis == 0 {
                            Point::new(p.x + t, p.y)
                        } else {
                            Point::new(p.x, p.y + t)
                        };
                        c.eval(q).unwrap().0
                    };
                    let coarse = (ev(step) - ev(-step)) / (2.0 * step);
                    let fine = (ev(step / 2.0) - ev(-step / 2.0)) / step;
                    // Richardson: the centered difference has O(step^2) error.
                    let extrap = (4.0 * fine - coarse) / 3.0;
                    assert!(
                        (g[axis] - extrap).abs() <= 1e-6 * (1.0 + g[axis].abs()),
                        "axis {axis}: analytic {} vs extrapolated {}",
                        g[axis],
                        extrap
                    );
                }
                checked += 1;
            }
        }
    }

    #[test]
    fn smooth_profile_monotone_and_bounded() {
        let base = SharpCoefficient::new(geometry(0.1), 5.0, 0.2).unwrap();
        for profile in [Profile::CosineRamp, Profile::Smoothstep] {
            let c = SmoothCoefficient::new(base, 0.0125, profile).unwrap();
            for (kappa, increasing) in [(5.0, false), (0.2, true)] {
                let mut prev = None;
                for i in 0..=1000 {
                    let r = 1.0 - c.epsilon + 2.0 * c.epsilon * i as f64 / 1000.0;
                    let v = c.radial_value(kappa, r);
                    assert!(v >= kappa.min(1.0) - 1e-14 && v <= kappa.max(1.0) + 1e-14);
                    if let Some(p) = prev {
                        if increasing {
                            assert!(v >= p - 1e-14);
                        } else {
                            assert!(v <= p + 1e-14);
                        }
                    }
                    prev = Some(v);
                }
            }
        }
    }

    #[test]
    fn smooth_converges_to_sharp() {
        let base = SharpCoefficient::new(geometry(0.1), 5.0, 0.2).unwrap();
        let pts = [
            Point::new(0.3, 0.4),
            Point::new(0.99, 0.0),
            Point::new(1.01, 0.0),
            Point::new(0.0, -1.1),
            Point::new(0.0, -2.0),
        ];
        for p in pts {
            let sharp = base.eval(p).unwrap();
            let mut prev_err = f64::INFINITY;
            for frac in [1e-1, 1e-2, 1e-3] {
                let c = SmoothCoefficient::new(base, 0.1 * frac, Profile::CosineRamp).unwrap();
                let (v, _) = c.eval(p).unwrap();
                let err = (v - sharp).abs();
                assert!(err <= prev_err + 1e-14);
                prev_err = err;
            }
            assert!(prev_err < 1e-12, "point {p:?} did not converge");
        }
    }

    #[test]
    fn harmonic_mean_constant_pieces() {
        let c = SharpCoefficient::new(geometry(0.1), 5.0, 0.2).unwrap();
        // Fully outside both disks.
        let hm = edge_harmonic_mean(&c, Point::new(2.0, 2.0), Point::new(2.0, 2.1));
        assert!((hm - 1.0).abs() < 1e-14);
        // Fully inside B+.
        let hm = edge_harmonic_mean(&c, Point::new(0.0, 0.0), Point::new(0.1, 0.0));
        assert!((hm - 5.0).abs() < 1e-14);
    }

    // Frozen: a segment half inside B+ (kappa = 5) and half outside has
    // harmonic mean 2 / (1/5 + 1) = 5/3.
    #[test]
    fn harmonic_mean_split_segment() {
        let c = SharpCoefficient::new(geometry(0.1), 5.0, 0.2).unwrap();
        let h = 0.05;
        let p = Point::new(0.0, 1.0 - h);
        let q = Point::new(0.0, 1.0 + h);
        let hm = edge_harmonic_mean(&c, p, q);
        assert!((hm - 5.0 / 3.0).abs() < 1e-12, "got {hm}");
    }

    #[test]
    fn harmonic_mean_matches_quadrature() {
        let c = SharpCoefficient::new(geometry(0.1), 5.0, 0.2).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..300 {
            let x = rng.gen_range(-2.0..2.0);
            let y = rng.gen_range(-3.5..2.0);
            let h = 1.0 / 64.0;
            let (p, q) = if rng.gen_bool(0.5) {
                (Point::new(x, y), Point::new(x + h, y))
            } else {
                (Point::new(x, y), Point::new(x, y + h))
            };
            let hm = edge_harmonic_mean(&c, p, q);
            // 10^4-point midpoint quadrature of 1/a along the segment.
            let n = 10_000;
            let mut inv = 0.0;
            for i in 0..n {
                let t = (i as f64 + 0.5) / n as f64;
                let m = Point::new(p.x + t * (q.x - p.x), p.y + t * (q.y - p.y));
                inv += 1.0 / c.eval(m).unwrap();
            }
            let quad = n as f64 / inv;
            assert!(
                (hm - quad).abs() < 2e-3 * quad,
                "hm {hm} vs quadrature {quad}"
            );
            // The mean lies between the min and max of a on the segment.
            let lo = c.kappa_plus.min(c.kappa_minus).min(1.0) - 1e-12;
            let hi = c.kappa_plus.max(c.kappa_minus).max(1.0) + 1e-12;
            assert!(hm >= lo && hm <= hi);
        }
    }
}

//! Derived quantities built from a solve: the tangential and radial
//! derivative fields about the upper disk center, their linear combinations,
//! the radial barrier profile, and the comparison quantities used by the
//! maximum-principle diagnostics.

use std::fmt;

use crate::coefficient::SmoothCoefficient;
use crate::geometry::Point;
use crate::grid::{ScalarField, VectorField};
use crate::solver::CoefficientMode;

#[derive(Debug, Clone, PartialEq)]
pub enum FieldsError {
    SharpModeUnsupported,
    OriginInRegion { x: f64, y: f64 },
    GridMismatch,
}

impl fmt::Display for FieldsError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FieldsError::SharpModeUnsupported => {
                write!(f, "barrier profile requires the smooth coefficient mode")
            }
            FieldsError::OriginInRegion { x, y } => {
                write!(
                    f,
                    "node ({x}, {y}) too close to the origin for |x|^-2 weights"
                )
            }
            FieldsError::GridMismatch => write!(f, "fields live on different grids"),
        }
    }
}

impl std::error::Error for FieldsError {}

/// Coefficients of a linear combination of the tangential and radial
/// quantities. Unit pairs (alpha^2 + beta^2 = 1) are required by the
/// comparison quantity; identity checks use arbitrary pairs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CombinationParams {
    pub alpha: f64,
    pub beta: f64,
}

impl CombinationParams {
    pub fn new(alpha: f64, beta: f64) -> Self {
        CombinationParams { alpha, beta }
    }

    pub fn is_unit(&self) -> bool {
        (self.alpha * self.alpha + self.beta * self.beta - 1.0).abs() < 1e-12
    }
}

/// Tangential quantity about the origin: `-x2 u_1 + x1 u_2`, the angular
/// derivative of `u` about the upper disk center.
pub fn tangential_quantity(grad: &VectorField) -> ScalarField {
    let grid = grad.grid;
    let mut out = ScalarField::zeros(grid);
    for iy in 0..grid.ny {
        for ix in 0..grid.nx {
            let k = grid.idx(ix, iy);
            let p = grid.node(ix, iy);
            out.values[k] = -p.y * grad.xs[k] + p.x * grad.ys[k];
        }
    }
    out
}

/// Radial quantity about the origin: `a (x1 u_1 + x2 u_2)`, the
/// coefficient-weighted radial derivative. Uses the nodal coefficient value
/// (region value in sharp mode, smoothed value otherwise).
pub fn radial_quantity(grad: &VectorField, coeff: CoefficientMode) -> ScalarField {
    let grid = grad.grid;
    let mut out = ScalarField::zeros(grid);
    for iy in 0..grid.ny {
        for ix in 0..grid.nx {
            let k = grid.idx(ix, iy);
            let p = grid.node(ix, iy);
            let a = coeff.node_value(p);
            out.values[k] = a * (p.x * grad.xs[k] + p.y * grad.ys[k]);
        }
    }
    out
}

/// Nodal `alpha T + beta R`.
pub fn combination(
    t: &ScalarField,
    r: &ScalarField,
    params: CombinationParams,
) -> Result<ScalarField, FieldsError> {
    if t.grid != r.grid {
        return Err(FieldsError::GridMismatch);
    }
    let values = t
        .values
        .iter()
        .zip(&r.values)
        .map(|(tv, rv)| params.alpha * tv + params.beta * rv)
        .collect();
    Ok(ScalarField {
        grid: t.grid,
        values,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Disk {
    Plus,
    Minus,
}

/// Barrier slope convention: for inner conductivity `kappa >= 1` the slope is
/// `1 - a^K <= 0`; for `kappa < 1` it is `1 - a^-K <= 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BarrierVariant {
    PowerK,
    PowerNegK,
}

/// Radial barrier sampled on `[1 - mu - eps, 1 + eps]` with monotone-cubic
/// interpolation between samples: `b(1+eps) = 0`, `b'(r) = 1 - a(r)^{+-K}`,
/// and `b = 0` for `r > 1 + eps`.
#[derive(Debug, Clone)]
pub struct BarrierProfile {
    pub kappa: f64,
    pub epsilon: f64,
    pub k_exponent: f64,
    pub variant: BarrierVariant,
    pub radii: Vec<f64>,
    pub values: Vec<f64>,
    /// Exact slope 1 - a^{+-K} at each sample.
    pub derivs: Vec<f64>,
    tangents: Vec<f64>,
}

pub const BARRIER_SAMPLES: usize = 512;
const SIMPSON_TOL: f64 = 1e-12;

fn adaptive_simpson(f: &impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn simpson(fa: f64, fm: f64, fb: f64, a: f64, b: f64) -> f64 {
        (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    }
    fn recurse(
        f: &impl Fn(f64) -> f64,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let lm = 0.5 * (a + m);
        let rm = 0.5 * (m + b);
        let flm = f(lm);
        let frm = f(rm);
        let left = simpson(fa, flm, fm, a, m);
        let right = simpson(fm, frm, fb, m, b);
        if depth == 0 || (left + right - whole).abs() <= 15.0 * tol {
            return left + right + (left + right - whole) / 15.0;
        }
        recurse(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)
            + recurse(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
    }
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    recurse(f, a, b, fa, fm, fb, simpson(fa, fm, fb, a, b), tol, 40)
}

/// Fritsch-Carlson monotone tangents for cubic Hermite interpolation.
fn monotone_tangents(radii: &[f64], values: &[f64]) -> Vec<f64> {
    let n = values.len();
    let mut slopes = vec![0.0; n - 1];
    for i in 0..n - 1 {
        slopes[i] = (values[i + 1] - values[i]) / (radii[i + 1] - radii[i]);
    }
    let mut m = vec![0.0; n];
    m[0] = slopes[0];
    m[n - 1] = slopes[n - 2];
    for i in 1..n - 1 {
        m[i] = if slopes[i - 1] * slopes[i] <= 0.0 {
            0.0
        } else {
            0.5 * (slopes[i - 1] + slopes[i])
        };
    }
    for i in 0..n - 1 {
        if slopes[i] == 0.0 {
            m[i] = 0.0;
            m[i + 1] = 0.0;
            continue;
        }
        let a = m[i] / slopes[i];
        let b = m[i + 1] / slopes[i];
        let s = a * a + b * b;
        if s > 9.0 {
            let tau = 3.0 / s.sqrt();
            m[i] = tau * a * slopes[i];
            m[i + 1] = tau * b * slopes[i];
        }
    }
    m
}

impl BarrierProfile {
    /// Trivial profile `b = 0` with no slope, used when a diagnostic wants
    /// the comparison quantity without a barrier (sharp-mode sweeps).
    pub fn zero() -> Self {
        BarrierProfile {
            kappa: 1.0,
            epsilon: 0.0,
            k_exponent: 0.0,
            variant: BarrierVariant::PowerK,
            radii: vec![0.0, 1.0],
            values: vec![0.0, 0.0],
            derivs: vec![0.0, 0.0],
            tangents: vec![0.0, 0.0],
        }
    }

    /// Barrier value at radius `r` (monotone cubic between samples, 0 beyond
    /// the collar).
    pub fn eval(&self, r: f64) -> f64 {
        let n = self.radii.len();
        let r_hi = self.radii[n - 1];
        if r >= r_hi {
            return 0.0;
        }
        if r <= self.radii[0] {
            return self.values[0];
        }
        let step = (r_hi - self.radii[0]) / (n - 1) as f64;
        let mut i = ((r - self.radii[0]) / step) as usize;
        if i >= n - 1 {
            i = n - 2;
        }
        // Guard against rounding at interval edges.
        if r < self.radii[i] && i > 0 {
            i -= 1;
        } else if r > self.radii[i + 1] && i + 2 < n {
            i += 1;
        }
        let h = self.radii[i + 1] - self.radii[i];
        let t = (r - self.radii[i]) / h;
        let t2 = t * t;
        let t3 = t2 * t;
        let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
        let h10 = t3 - 2.0 * t2 + t;
        let h01 = -2.0 * t3 + 3.0 * t2;
        let h11 = t3 - t2;
        h00 * self.values[i]
            + h10 * h * self.tangents[i]
            + h01 * self.values[i + 1]
            + h11 * h * self.tangents[i + 1]
    }

    /// Exact slope `1 - a(r)^{+-K}` at radius `r`.
    pub fn slope(&self, coeff: &SmoothCoefficient, r: f64) -> f64 {
        let a = coeff.radial_value(self.kappa, r);
        match self.variant {
            BarrierVariant::PowerK => 1.0 - a.powf(self.k_exponent),
            BarrierVariant::PowerNegK => 1.0 - a.powf(-self.k_exponent),
        }
    }

    /// Upper bound from the variant: `kappa^K` or `kappa^-K`.
    pub fn value_bound(&self) -> f64 {
        match self.variant {
            BarrierVariant::PowerK => self.kappa.powf(self.k_exponent),
            BarrierVariant::PowerNegK => self.kappa.powf(-self.k_exponent),
        }
    }
}

/// Builds the barrier profile for one disk of a smoothed coefficient by
/// integrating the slope inward from `r = 1 + eps` with adaptive Simpson
/// quadrature.
pub fn barrier_profile(
    coeff: &SmoothCoefficient,
    k_exponent: f64,
    which: Disk,
) -> Result<BarrierProfile, FieldsError> {
    assert!(k_exponent > 0.0, "barrier exponent must be positive");
    let kappa = match which {
        Disk::Plus => coeff.base.kappa_plus,
        Disk::Minus => coeff.base.kappa_minus,
    };
    let variant = if kappa >= 1.0 {
        BarrierVariant::PowerK
    } else {
        BarrierVariant::PowerNegK
    };
    let eps = coeff.epsilon;
    let mu = coeff.base.geometry.mu;
    let r_lo = 1.0 - mu - eps;
    let r_hi = 1.0 + eps;
    let n = BARRIER_SAMPLES;
    let step = (r_hi - r_lo) / (n - 1) as f64;

    // b'(r) integrand magnitude: a^K - 1 (or a^-K - 1), so that
    // b(r) = integral from r to 1+eps.
    let integrand = |s: f64| -> f64 {
        let a = coeff.radial_value(kappa, s);
        match variant {
            BarrierVariant::PowerK => a.powf(k_exponent) - 1.0,
            BarrierVariant::PowerNegK => a.powf(-k_exponent) - 1.0,
        }
    };

    let mut radii = vec![0.0; n];
    let mut values = vec![0.0; n];
    let mut derivs = vec![0.0; n];
    for (i, r) in radii.iter_mut().enumerate() {
        *r = r_lo + i as f64 * step;
    }
    radii[n - 1] = r_hi;
    values[n - 1] = 0.0;
    for i in (0..n - 1).rev() {
        values[i] =
            values[i + 1] + adaptive_simpson(&integrand, radii[i], radii[i + 1], SIMPSON_TOL);
    }
    for i in 0..n {
        let a = coeff.radial_value(kappa, radii[i]);
        derivs[i] = match variant {
            BarrierVariant::PowerK => 1.0 - a.powf(k_exponent),
            BarrierVariant::PowerNegK => 1.0 - a.powf(-k_exponent),
        };
    }
    let tangents = monotone_tangents(&radii, &values);
    Ok(BarrierProfile {
        kappa,
        epsilon: eps,
        k_exponent,
        variant,
        radii,
        values,
        derivs,
        tangents,
    })
}

/// Barrier for the active coefficient mode; sharp mode is unsupported.
pub fn barrier_for_mode(
    coeff: CoefficientMode,
    k_exponent: f64,
    which: Disk,
) -> Result<BarrierProfile, FieldsError> {
    match coeff {
        CoefficientMode::Sharp(_) => Err(FieldsError::SharpModeUnsupported),
        CoefficientMode::Smooth(c) => barrier_profile(c, k_exponent, which),
    }
}

/// The zeroth-order weight `A` and exponent `K` of the comparison
/// quantities: `A = C * max(kp^2K, kp^-2K, km^2K, km^-2K)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComparisonConstants {
    pub a_weight: f64,
    pub k_exponent: f64,
    pub c_scale: f64,
}

impl ComparisonConstants {
    pub fn new(kappa_plus: f64, kappa_minus: f64, k_exponent: f64, c_scale: f64) -> Self {
        let m = [
            kappa_plus.powf(2.0 * k_exponent),
            kappa_plus.powf(-2.0 * k_exponent),
            kappa_minus.powf(2.0 * k_exponent),
            kappa_minus.powf(-2.0 * k_exponent),
        ]
        .into_iter()
        .fold(f64::NEG_INFINITY, f64::max);
        let a_weight = c_scale * m;
        debug_assert!(a_weight >= 1.0);
        ComparisonConstants {
            a_weight,
            k_exponent,
            c_scale,
        }
    }
}

/// Nodal `M = |grad u|^2 + A u^2`.
pub fn quantity_m(u: &ScalarField, grad: &VectorField, a_weight: f64) -> ScalarField {
    let grid = u.grid;
    let values = u
        .values
        .iter()
        .zip(grad.xs.iter().zip(&grad.ys))
        .map(|(uv, (gx, gy))| gx * gx + gy * gy + a_weight * uv * uv)
        .collect();
    ScalarField { grid, values }
}

/// Nodal `N = (alpha T + beta R)^2 / |x|^2 * (1 + b) + A u^2` on the nodes
/// selected by `mask` (the collar of the upper disk); zero elsewhere.
pub fn quantity_n(
    u: &ScalarField,
    t: &ScalarField,
    r: &ScalarField,
    params: CombinationParams,
    barrier: &BarrierProfile,
    a_weight: f64,
    mask: &[bool],
) -> Result<ScalarField, FieldsError> {
    let grid = u.grid;
    let mut out = ScalarField::zeros(grid);
    for iy in 0..grid.ny {
        for ix in 0..grid.nx {
            let k = grid.idx(ix, iy);
            if !mask[k] {
                continue;
            }
            let p = grid.node(ix, iy);
            let rad2 = p.x * p.x + p.y * p.y;
            if rad2 < 1e-12 {
                return Err(FieldsError::OriginInRegion { x: p.x, y: p.y });
            }
            let combo = params.alpha * t.values[k] + params.beta * r.values[k];
            let b = barrier.eval(rad2.sqrt());
            out.values[k] = combo * combo / rad2 * (1.0 + b) + a_weight * u.values[k] * u.values[k];
        }
    }
    Ok(out)
}

/// Unit pair from the tangential/radial decomposition at the argmax node of
/// `m` over `mask` (ties broken by the smallest node index): alpha and beta
/// proportional to T and R there. Falls back to (1, 0) when the gradient is
/// degenerate at the argmax.
pub fn argmax_combination_params(
    m: &ScalarField,
    t: &ScalarField,
    r: &ScalarField,
    mask: &[bool],
) -> (CombinationParams, Option<usize>) {
    let mut best: Option<(usize, f64)> = None;
    for (k, &inside) in mask.iter().enumerate() {
        if !inside {
            continue;
        }
        let v = m.values[k];
        if best.map(|(_, bv)| v > bv).unwrap_or(true) {
            best = Some((k, v));
        }
    }
    let Some((k, _)) = best else {
        return (CombinationParams::new(1.0, 0.0), None);
    };
    let tv = t.values[k];
    let rv = r.values[k];
    let norm = (tv * tv + rv * rv).sqrt();
    if norm < 1e-12 {
        return (CombinationParams::new(1.0, 0.0), Some(k));
    }
    (CombinationParams::new(tv / norm, rv / norm), Some(k))
}

/// Squared-magnitude identity underlying the orthonormal decomposition:
/// at every off-origin node, `T^2 + (R/a)^2 = |x|^2 |grad u|^2`.
pub fn decomposition_residual(
    t: &ScalarField,
    r: &ScalarField,
    grad: &VectorField,
    coeff: CoefficientMode,
    p: Point,
    k: usize,
) -> f64 {
    let a = coeff.node_value(p);
    let lhs = t.values[k] * t.values[k] + (r.values[k] / a) * (r.values[k] / a);
    let rad2 = p.x * p.x + p.y * p.y;
    let g2 = grad.xs[k] * grad.xs[k] + grad.ys[k] * grad.ys[k];
    lhs - rad2 * g2
}

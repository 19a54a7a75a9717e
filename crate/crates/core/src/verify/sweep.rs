//! Gap-width sweep: for each (delta, h) pair, solve the two-disk problem,
//! record the gradient sups over the derived regions, the comparison
//! quantities, and the maximum-principle certificates.

use crate::coefficient::{Profile, SharpCoefficient, SmoothCoefficient};
use crate::fields::{
    argmax_combination_params, barrier_profile, quantity_m, quantity_n, radial_quantity,
    tangential_quantity, BarrierProfile, ComparisonConstants, Disk,
};
use crate::geometry::{build_geometry, region_masks, Rect, RegionMasks};
use crate::grid::{build_grid, BoundarySpec, ScalarField};
use crate::solver::{assemble, gradient, solve_with_values, CoefficientMode};

use super::VerifyError;

/// Gradient sups over the derived regions, plus the bound-shape ratio
/// `sup over the margin region / (sup over the gap segment + 1)`.
#[derive(Debug, Clone, Copy)]
pub struct GradientBoundReport {
    pub sup_omega_mu: f64,
    pub sup_s: f64,
    pub sup_e: f64,
    pub ratio: f64,
}

pub fn gradient_bound_report(grad_mag: &ScalarField, masks: &RegionMasks) -> GradientBoundReport {
    let sup_omega_mu = grad_mag.max_over(&masks.omega_mu);
    let sup_s = grad_mag.max_over(&masks.s_band);
    let sup_e = grad_mag.max_over(&masks.e_region);
    GradientBoundReport {
        sup_omega_mu,
        sup_s,
        sup_e,
        ratio: sup_omega_mu / (sup_s + 1.0),
    }
}

/// Location and margin of the interior maximum of a subharmonic quantity
/// over the thin rectangle, against its maximum over the rectangle's
/// boundary nodes.
#[derive(Debug, Clone, Copy)]
pub struct MaxPrincipleReport {
    pub interior_max: f64,
    pub boundary_max: f64,
    pub interior_node: usize,
    pub boundary_node: usize,
    /// interior_max - boundary_max; nonpositive when the maximum sits on
    /// the boundary.
    pub margin: f64,
    /// Range of the quantity over the rectangle, for the h-scaled tolerance.
    pub range: f64,
}

impl MaxPrincipleReport {
    /// Discretization-aware acceptance: margin <= 10 h (range over E).
    pub fn passes(&self, h: f64) -> bool {
        self.margin <= 10.0 * h * self.range + 1e-14
    }
}

/// Checks that the quantity attains its maximum over the thin rectangle on
/// the rectangle's node boundary, up to an h-scaled tolerance. The rectangle
/// must have at least 3 interior node rows.
pub fn subharmonic_max_check(
    m: &ScalarField,
    masks: &RegionMasks,
) -> Result<MaxPrincipleReport, VerifyError> {
    let grid = m.grid;
    let e = &masks.e_region;
    let mut rows = std::collections::BTreeSet::new();
    for iy in 0..grid.ny {
        for ix in 0..grid.nx {
            if e[grid.idx(ix, iy)] {
                rows.insert(iy);
            }
        }
    }
    if rows.len() < 5 {
        return Err(VerifyError::EmptyRegion {
            region: "thin rectangle needs at least 3 interior node rows",
        });
    }
    let is_boundary_of_e = |ix: usize, iy: usize| -> bool {
        let neighbors = [
            (ix.wrapping_sub(1), iy),
            (ix + 1, iy),
            (ix, iy.wrapping_sub(1)),
            (ix, iy + 1),
        ];
        neighbors
            .iter()
            .any(|&(jx, jy)| jx >= grid.nx || jy >= grid.ny || !e[grid.idx(jx, jy)])
    };
    let mut interior_max = f64::NEG_INFINITY;
    let mut boundary_max = f64::NEG_INFINITY;
    let mut interior_node = 0;
    let mut boundary_node = 0;
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for iy in 0..grid.ny {
        for ix in 0..grid.nx {
            let k = grid.idx(ix, iy);
            if !e[k] {
                continue;
            }
            let v = m.values[k];
            lo = lo.min(v);
            hi = hi.max(v);
            if is_boundary_of_e(ix, iy) {
                if v > boundary_max {
                    boundary_max = v;
                    boundary_node = k;
                }
            } else if v > interior_max {
                interior_max = v;
                interior_node = k;
            }
        }
    }
    Ok(MaxPrincipleReport {
        interior_max,
        boundary_max,
        interior_node,
        boundary_node,
        margin: interior_max - boundary_max,
        range: hi - lo,
    })
}

/// Coefficient mode selector for a sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SweepMode {
    Sharp,
    /// Smooth with `epsilon = fraction * delta`.
    Smooth {
        profile: Profile,
        epsilon_fraction: f64,
    },
}

impl SweepMode {
    pub fn label(&self) -> &'static str {
        match self {
            SweepMode::Sharp => "sharp",
            SweepMode::Smooth { .. } => "smooth",
        }
    }
}

#[derive(Debug, Clone)]
pub struct SweepParams<'a> {
    pub deltas: &'a [f64],
    pub kappa_plus: f64,
    pub kappa_minus: f64,
    pub phi: BoundarySpec,
    pub h_levels: &'a [f64],
    pub mode: SweepMode,
    pub domain: Rect,
    pub mu: f64,
    pub k_exponent: f64,
    pub c_scale: f64,
    pub tol: f64,
    /// None means the solver's default cap of 10 sqrt(node count).
    pub max_iter: Option<usize>,
}

/// One sweep row: configuration, gradient sups, comparison quantities, and
/// the solver certificate.
#[derive(Debug, Clone)]
pub struct SweepRow {
    pub delta: f64,
    pub h: f64,
    pub mode: &'static str,
    pub epsilon: f64,
    pub kappa_plus: f64,
    pub kappa_minus: f64,
    pub sup_grad_omega_mu: f64,
    pub sup_grad_s: f64,
    pub sup_grad_e: f64,
    pub ratio: f64,
    pub max_n_wplus: f64,
    pub alpha: f64,
    pub beta: f64,
    /// Max over the thin rectangle of N - M (sign certificate for the
    /// comparison step; nonpositive up to rounding).
    pub n_minus_m_max_e: f64,
    pub m_interior_max: f64,
    pub m_boundary_max: f64,
    pub m_margin: f64,
    pub m_range: f64,
    pub iterations: usize,
    pub relative_residual: f64,
    pub sup_abs_u: f64,
    pub max_principle_ok: bool,
}

#[derive(Debug, Clone)]
pub struct SweepTable {
    pub rows: Vec<SweepRow>,
}

impl SweepTable {
    pub fn all_max_principle_ok(&self) -> bool {
        self.rows.iter().all(|r| r.max_principle_ok)
    }

    pub fn all_subharmonic_ok(&self) -> bool {
        self.rows
            .iter()
            .all(|r| r.m_margin <= 10.0 * r.h * r.m_range + 1e-14)
    }
}

/// Runs the sweep: one row per (delta, h), rows in the given order. The
/// finest spacing must resolve the smallest gap (h <= delta_min / 8).
pub fn delta_sweep(params: &SweepParams) -> Result<SweepTable, VerifyError> {
    let delta_min = params.deltas.iter().cloned().fold(f64::INFINITY, f64::min);
    let finest = params
        .h_levels
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min);
    if finest > delta_min / 8.0 + 1e-15 {
        return Err(VerifyError::SweepUnresolved {
            h: finest,
            delta: delta_min,
        });
    }
    let mut rows = Vec::new();
    for &delta in params.deltas {
        for &h in params.h_levels {
            rows.push(sweep_row(params, delta, h)?);
        }
    }
    Ok(SweepTable { rows })
}

/// One (delta, h) run: solve, derived quantities, certificates. The `solve`
/// command and the sweep share this path.
pub fn sweep_row(params: &SweepParams, delta: f64, h: f64) -> Result<SweepRow, VerifyError> {
    let geometry = build_geometry(delta, params.mu, params.domain)?;
    let sharp = SharpCoefficient::new(geometry, params.kappa_plus, params.kappa_minus)?;
    let smooth = match params.mode {
        SweepMode::Sharp => None,
        SweepMode::Smooth {
            profile,
            epsilon_fraction,
        } => Some(SmoothCoefficient::new(
            sharp,
            epsilon_fraction * delta,
            profile,
        )?),
    };
    let mode = match &smooth {
        Some(s) => CoefficientMode::Smooth(s),
        None => CoefficientMode::Sharp(&sharp),
    };

    let grid = build_grid(params.domain, h)?;
    let system = assemble(&grid, mode)?;
    let boundary = params.phi.values(&grid);
    let (u, report) = solve_with_values(&system, &boundary, params.tol, params.max_iter)?;
    let grad = gradient(&u);
    let masks = region_masks(&geometry, &grid);
    let grad_mag = grad.magnitude();
    let bound = gradient_bound_report(&grad_mag, &masks);

    let constants = ComparisonConstants::new(
        params.kappa_plus,
        params.kappa_minus,
        params.k_exponent,
        params.c_scale,
    );
    let t = tangential_quantity(&grad);
    let r = radial_quantity(&grad, mode);
    let m = quantity_m(&u, &grad, constants.a_weight);
    let (ab, _) = argmax_combination_params(&m, &t, &r, &masks.e_region);
    let barrier = match &smooth {
        Some(s) => barrier_profile(s, params.k_exponent, Disk::Plus)?,
        // No smooth collar in sharp mode; the comparison quantity is
        // recorded without a barrier factor (b = 0 on the gap rectangle in
        // either mode, so the N <= M comparison is unaffected).
        None => BarrierProfile::zero(),
    };
    let n = quantity_n(&u, &t, &r, ab, &barrier, constants.a_weight, &masks.w_plus)?;
    let max_n = n.max_over(&masks.w_plus);
    // N - M on the thin rectangle, computed without the shared A u^2 term:
    // the weight A reaches kappa^(2K) and its rounding would otherwise bury
    // the comparison entirely.
    let mut n_minus_m_max_e = f64::NEG_INFINITY;
    for iy in 0..grid.ny {
        for ix in 0..grid.nx {
            let k = grid.idx(ix, iy);
            if !masks.e_region[k] {
                continue;
            }
            let p = grid.node(ix, iy);
            let rad2 = p.x * p.x + p.y * p.y;
            let combo = ab.alpha * t.values[k] + ab.beta * r.values[k];
            let b = barrier.eval(rad2.sqrt());
            let core_n = combo * combo / rad2 * (1.0 + b);
            let core_m = grad.xs[k] * grad.xs[k] + grad.ys[k] * grad.ys[k];
            n_minus_m_max_e = n_minus_m_max_e.max(core_n - core_m);
        }
    }
    let mp = subharmonic_max_check(&m, &masks)?;

    Ok(SweepRow {
        delta,
        h,
        mode: params.mode.label(),
        epsilon: smooth.map(|s| s.epsilon).unwrap_or(0.0),
        kappa_plus: params.kappa_plus,
        kappa_minus: params.kappa_minus,
        sup_grad_omega_mu: bound.sup_omega_mu,
        sup_grad_s: bound.sup_s,
        sup_grad_e: bound.sup_e,
        ratio: bound.ratio,
        max_n_wplus: max_n,
        alpha: ab.alpha,
        beta: ab.beta,
        n_minus_m_max_e,
        m_interior_max: mp.interior_max,
        m_boundary_max: mp.boundary_max,
        m_margin: mp.margin,
        m_range: mp.range,
        iterations: report.iterations,
        relative_residual: report.relative_residual,
        sup_abs_u: report.sup_abs_u,
        max_principle_ok: report.max_principle_ok,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Point;
    use crate::grid::BoundaryFamily;

    fn small_domain() -> Rect {
        Rect::new(Point::new(-1.5, -4.0), Point::new(1.5, 1.5))
    }

    #[test]
    fn unit_conductivity_sweep_is_delta_independent() {
        let deltas = [0.2, 0.1];
        let hs = [1.0 / 80.0];
        let params = SweepParams {
            deltas: &deltas,
            kappa_plus: 1.0,
            kappa_minus: 1.0,
            phi: BoundarySpec::new(BoundaryFamily::X1, true),
            h_levels: &hs,
            mode: SweepMode::Sharp,
            domain: small_domain(),
            mu: 0.25,
            k_exponent: 4.0,
            c_scale: 4.0,
            tol: 1e-10,
            max_iter: None,
        };
        let table = delta_sweep(&params).unwrap();
        assert!(table.all_max_principle_ok());
        assert!(table.all_subharmonic_ok());
        // With a == 1 the solution ignores the disks entirely, so the sup
        // is independent of delta to solver tolerance.
        let a = table.rows[0].sup_grad_omega_mu;
        let b = table.rows[1].sup_grad_omega_mu;
        assert!((a - b).abs() <= 1e-6 * a.max(b), "{a} vs {b}");
        // N <= M on the gap rectangle.
        for row in &table.rows {
            assert!(row.n_minus_m_max_e <= 1e-12);
        }
    }

    #[test]
    fn comparison_sign_is_stable_at_extreme_weight() {
        // kappa = 1e3 puts the zeroth-order weight at 4e24; the N - M
        // certificate must still come out at rounding scale, not at the
        // cancellation scale of the shared A u^2 term.
        let deltas = [0.1];
        let hs = [1.0 / 96.0];
        let params = SweepParams {
            deltas: &deltas,
            kappa_plus: 1000.0,
            kappa_minus: 1000.0,
            phi: BoundarySpec::new(BoundaryFamily::X1, true),
            h_levels: &hs,
            mode: SweepMode::Sharp,
            domain: small_domain(),
            mu: 0.25,
            k_exponent: 4.0,
            c_scale: 4.0,
            tol: 1e-10,
            max_iter: None,
        };
        let table = delta_sweep(&params).unwrap();
        assert!(table.rows[0].n_minus_m_max_e <= 1e-12);
        assert!(table.rows[0].n_minus_m_max_e > -1.0);
    }

    #[test]
    fn sweep_requires_resolved_gap() {
        let deltas = [0.05];
        let hs = [1.0 / 32.0];
        let params = SweepParams {
            deltas: &deltas,
            kappa_plus: 5.0,
            kappa_minus: 5.0,
            phi: BoundarySpec::new(BoundaryFamily::X1, true),
            h_levels: &hs,
            mode: SweepMode::Sharp,
            domain: small_domain(),
            mu: 0.25,
            k_exponent: 4.0,
            c_scale: 4.0,
            tol: 1e-10,
            max_iter: None,
        };
        assert!(matches!(
            delta_sweep(&params).unwrap_err(),
            VerifyError::SweepUnresolved { .. }
        ));
    }

    #[test]
    fn subharmonic_check_on_explicit_quantity() {
        // kappa = 1, phi = x1: on the continuum M = 1 + A x1^2 over the gap
        // rectangle, so the interior max sits on the side edges.
        let domain = small_domain();
        let geometry = build_geometry(0.1, 0.25, domain).unwrap();
        let grid = build_grid(domain, 1.0 / 80.0).unwrap();
        let masks = region_masks(&geometry, &grid);
        let m = ScalarField::from_fn(grid, |p| 1.0 + 4.0 * p.x * p.x);
        let report = subharmonic_max_check(&m, &masks).unwrap();
        assert!(report.margin <= 0.0);
        assert!(report.passes(grid.h));

        // A constant field has zero margin.
        let m = ScalarField::from_fn(grid, |_| 2.0);
        let report = subharmonic_max_check(&m, &masks).unwrap();
        assert_eq!(report.margin, 0.0);
        assert_eq!(report.range, 0.0);
    }

    #[test]
    fn subharmonic_check_rejects_thin_rectangle() {
        let domain = small_domain();
        let geometry = build_geometry(0.05, 0.25, domain).unwrap();
        let grid = build_grid(domain, 1.0 / 32.0).unwrap();
        let masks = region_masks(&geometry, &grid);
        let m = ScalarField::zeros(grid);
        assert!(matches!(
            subharmonic_max_check(&m, &masks),
            Err(VerifyError::EmptyRegion { .. })
        ));
    }

    #[test]
    fn constant_boundary_data_gives_flat_solution() {
        let deltas = [0.1];
        let hs = [1.0 / 80.0];
        let params = SweepParams {
            deltas: &deltas,
            kappa_plus: 5.0,
            kappa_minus: 0.2,
            phi: BoundarySpec::new(BoundaryFamily::Constant(2.0), true),
            h_levels: &hs,
            mode: SweepMode::Sharp,
            domain: small_domain(),
            mu: 0.25,
            k_exponent: 4.0,
            c_scale: 4.0,
            tol: 1e-10,
            max_iter: None,
        };
        let table = delta_sweep(&params).unwrap();
        let row = &table.rows[0];
        assert!(row.sup_grad_omega_mu <= 1e-8);
        assert!(row.max_principle_ok);
    }
}

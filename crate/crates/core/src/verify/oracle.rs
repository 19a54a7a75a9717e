//! Solver validation against closed-form transmission solutions: the single
//! dielectric disk in a uniform far field, and a concentric radial solution
//! whose coefficient-weighted radial derivative is exactly constant.

use crate::coefficient::SharpCoefficient;
use crate::geometry::{build_geometry, Point, Rect};
use crate::grid::build_grid;
use crate::solver::{assemble_masked, gradient, solve_with_values, CoefficientMode};

use super::fields_radius_excluded;
use super::VerifyError;

/// Closed-form field for one unit disk of conductivity `kappa` at the origin
/// in the uniform background field `x1`:
/// inside `u = 2 x1 / (1+kappa)`, outside `u = x1 + lam x1 / |x|^2` with
/// `lam = (1-kappa)/(1+kappa)`. Continuity of `u` and of the flux
/// `a du/dr` across the circle is checked by a unit test below.
#[derive(Debug, Clone, Copy)]
pub struct SingleDiskExact {
    pub kappa: f64,
}

impl SingleDiskExact {
    fn lambda(&self) -> f64 {
        (1.0 - self.kappa) / (1.0 + self.kappa)
    }

    pub fn u(&self, p: Point) -> f64 {
        let r2 = p.x * p.x + p.y * p.y;
        if r2 <= 1.0 {
            2.0 * p.x / (1.0 + self.kappa)
        } else {
            p.x + self.lambda() * p.x / r2
        }
    }

    pub fn grad(&self, p: Point) -> [f64; 2] {
        let r2 = p.x * p.x + p.y * p.y;
        if r2 <= 1.0 {
            [2.0 / (1.0 + self.kappa), 0.0]
        } else {
            let lam = self.lambda();
            let r4 = r2 * r2;
            [
                1.0 + lam * (1.0 / r2 - 2.0 * p.x * p.x / r4),
                -2.0 * lam * p.x * p.y / r4,
            ]
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SingleDiskRow {
    pub h: f64,
    pub u_err: f64,
    pub grad_err_omega_mu: f64,
    pub iterations: usize,
    pub relative_residual: f64,
}

#[derive(Debug, Clone)]
pub struct SingleDiskReport {
    pub kappa: f64,
    pub rows: Vec<SingleDiskRow>,
}

/// Solves the single-disk configuration (the lower disk inert at background
/// conductivity) on the box [-8,8]^2 with the exact exterior trace as
/// boundary data, and reports L-infinity errors of `u` over the whole grid
/// and of `|grad u|` over the interior margin region, per level.
pub fn single_disk_oracle(
    kappa: f64,
    h_levels: &[f64],
    tol: f64,
) -> Result<SingleDiskReport, VerifyError> {
    let domain = Rect::new(Point::new(-8.0, -8.0), Point::new(8.0, 8.0));
    let geometry = build_geometry(0.1, 0.25, domain)?;
    let coeff = SharpCoefficient::new(geometry, kappa, 1.0)?;
    let exact = SingleDiskExact { kappa };
    let mut rows = Vec::new();
    for &h in h_levels {
        let grid = build_grid(domain, h)?;
        let system = assemble_masked(&grid, CoefficientMode::Sharp(&coeff), None)?;
        let mut g = vec![0.0; grid.len()];
        for iy in 0..grid.ny {
            for ix in 0..grid.nx {
                g[grid.idx(ix, iy)] = exact.u(grid.node(ix, iy));
            }
        }
        let (u, report) = solve_with_values(&system, &g, tol, None)?;
        let masks = crate::geometry::region_masks(&geometry, &grid);
        let grad = gradient(&u);
        let mut u_err = 0.0f64;
        let mut grad_err = 0.0f64;
        for iy in 0..grid.ny {
            for ix in 0..grid.nx {
                let k = grid.idx(ix, iy);
                let p = grid.node(ix, iy);
                u_err = u_err.max((u.values[k] - exact.u(p)).abs());
                if masks.omega_mu[k] {
                    let ge = exact.grad(p);
                    let mag_e = (ge[0] * ge[0] + ge[1] * ge[1]).sqrt();
                    let mag_h = (grad.xs[k] * grad.xs[k] + grad.ys[k] * grad.ys[k]).sqrt();
                    grad_err = grad_err.max((mag_h - mag_e).abs());
                }
            }
        }
        rows.push(SingleDiskRow {
            h,
            u_err,
            grad_err_omega_mu: grad_err,
            iterations: report.iterations,
            relative_residual: report.relative_residual,
        });
    }
    Ok(SingleDiskReport { kappa, rows })
}

/// Radial solution of the concentric problem `(r a g')' = 0` with the
/// piecewise coefficient `kappa` inside the unit circle: `g' = C / (r a)`,
/// normalized by `g(r_lo) = 0`, `g(r_hi) = 1`. `C` is fixed by one
/// quadrature of `1/(s a(s))`.
#[derive(Debug, Clone, Copy)]
pub struct RadialExact {
    pub kappa: f64,
    pub r_lo: f64,
    pub r_hi: f64,
    pub constant: f64,
}

impl RadialExact {
    pub fn new(kappa: f64, r_lo: f64, r_hi: f64) -> Self {
        // One adaptive-Simpson quadrature, split at the coefficient jump.
        let f = |s: f64| 1.0 / (s * if s <= 1.0 { kappa } else { 1.0 });
        let mut total = 0.0;
        let mut lo = r_lo;
        for edge in [1.0, r_hi] {
            if edge > lo && edge <= r_hi {
                total += simpson(&f, lo, edge, 1e-13);
                lo = edge;
            }
        }
        RadialExact {
            kappa,
            r_lo,
            r_hi,
            constant: 1.0 / total,
        }
    }

    /// g(r) = C * integral from r_lo to r of 1/(s a(s)).
    pub fn g(&self, r: f64) -> f64 {
        let c = self.constant;
        if r <= 1.0 {
            c * (r / self.r_lo).ln() / self.kappa
        } else {
            c * ((1.0 / self.r_lo).ln() / self.kappa + r.ln())
        }
    }
}

fn simpson(f: &impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn rec(
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
        let flm = f(0.5 * (a + m));
        let frm = f(0.5 * (m + b));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        if depth == 0 || (left + right - whole).abs() <= 15.0 * tol {
            return left + right + (left + right - whole) / 15.0;
        }
        rec(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)
            + rec(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
    }
    let fa = f(a);
    let fb = f(b);
    let fm = f(0.5 * (a + b));
    rec(
        f,
        a,
        b,
        fa,
        fm,
        fb,
        (b - a) / 6.0 * (fa + 4.0 * fm + fb),
        tol,
        40,
    )
}

#[derive(Debug, Clone, Copy)]
pub struct RadialRow {
    pub h: f64,
    pub deviation: f64,
    pub constant: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone)]
pub struct RadialReport {
    pub kappa: f64,
    pub rows: Vec<RadialRow>,
}

/// Concentric check: solves on the box minus a grid-aligned square hole
/// around the origin, with the exact radial trace on both boundaries, and
/// verifies that the nodal radial quantity is constant.
///
/// The deviation is measured over nodes away from the coefficient circle:
/// the nodal gradient is a centered difference, which smears the interface
/// kink into an O(1) error layer a few cells wide, and the layer's discrete
/// tail only dies off with distance, so the excluded band has a fixed
/// physical width (never thinner than 3h). The identity is about the
/// continuum field; on the measured set the deviation shrinks with h.
///
/// The band width is the same at every level so that refinement compares
/// deviations over one fixed node population.
pub const RADIAL_BAND: f64 = 0.2;

pub fn radial_constancy_check(
    kappa: f64,
    h_levels: &[f64],
    tol: f64,
) -> Result<RadialReport, VerifyError> {
    let domain = Rect::new(Point::new(-2.0, -4.0), Point::new(2.0, 2.0));
    let geometry = build_geometry(0.1, 0.25, domain)?;
    let coeff = SharpCoefficient::new(geometry, kappa, 1.0)?;
    let hole_half = 0.5;
    let exact = RadialExact::new(kappa, hole_half, 2.0);
    let mut rows = Vec::new();
    for &h in h_levels {
        let grid = build_grid(domain, h)?;
        let mut hole = vec![false; grid.len()];
        for iy in 0..grid.ny {
            for ix in 0..grid.nx {
                let p = grid.node(ix, iy);
                if p.x.abs().max(p.y.abs()) <= hole_half + 1e-12 {
                    hole[grid.idx(ix, iy)] = true;
                }
            }
        }
        let system = assemble_masked(&grid, CoefficientMode::Sharp(&coeff), Some(&hole))?;
        let mut g = vec![0.0; grid.len()];
        for iy in 0..grid.ny {
            for ix in 0..grid.nx {
                let p = grid.node(ix, iy);
                // Clamp inside the hole so the fill values stay finite; they
                // are never read by active-node stencils.
                g[grid.idx(ix, iy)] = exact.g(p.norm().max(0.4 * hole_half));
            }
        }
        let (u, report) = solve_with_values(&system, &g, tol, None)?;
        let grad = gradient(&u);
        let radial = crate::fields::radial_quantity(&grad, CoefficientMode::Sharp(&coeff));
        let mut deviation = 0.0f64;
        for iy in 0..grid.ny {
            for ix in 0..grid.nx {
                let k = grid.idx(ix, iy);
                if !system.is_active(k) {
                    continue;
                }
                let p = grid.node(ix, iy);
                if fields_radius_excluded(p.norm(), RADIAL_BAND) {
                    continue;
                }
                deviation = deviation.max((radial.values[k] - exact.constant).abs());
            }
        }
        rows.push(RadialRow {
            h,
            deviation,
            constant: exact.constant,
            iterations: report.iterations,
        });
    }
    Ok(RadialReport { kappa, rows })
}

#[cfg(test)]
mod tests {
    use super::*;

    // Pre-verification of the oracle itself: continuity of u and of the
    // radial flux a du/dr across the circle.
    #[test]
    fn single_disk_exact_is_a_transmission_solution() {
        for kappa in [0.2, 5.0, 1000.0] {
            let e = SingleDiskExact { kappa };
            for i in 0..64 {
                let th = i as f64 * std::f64::consts::TAU / 64.0;
                let inside = Point::new((1.0 - 1e-9) * th.cos(), (1.0 - 1e-9) * th.sin());
                let outside = Point::new((1.0 + 1e-9) * th.cos(), (1.0 + 1e-9) * th.sin());
                assert!((e.u(inside) - e.u(outside)).abs() < 1e-8);
                let gi = e.grad(inside);
                let go = e.grad(outside);
                let flux_i = kappa * (gi[0] * th.cos() + gi[1] * th.sin());
                let flux_o = go[0] * th.cos() + go[1] * th.sin();
                assert!(
                    (flux_i - flux_o).abs() < 1e-7 * (1.0 + flux_o.abs()),
                    "kappa {kappa} theta {th}: {flux_i} vs {flux_o}"
                );
                // The tangential derivative is continuous as well.
                let tan_i = -gi[0] * th.sin() + gi[1] * th.cos();
                let tan_o = -go[0] * th.sin() + go[1] * th.cos();
                assert!((tan_i - tan_o).abs() < 1e-7 * (1.0 + tan_o.abs()));
            }
        }
    }

    #[test]
    fn single_disk_trivial_kappa_is_exact() {
        let report = single_disk_oracle(1.0, &[1.0 / 16.0], 1e-11).unwrap();
        assert!(report.rows[0].u_err <= 1e-8, "err {}", report.rows[0].u_err);
    }

    #[test]
    fn single_disk_errors_shrink_under_refinement() {
        for kappa in [5.0, 0.2] {
            let report = single_disk_oracle(kappa, &[1.0 / 32.0, 1.0 / 64.0], 1e-10).unwrap();
            let r = &report.rows;
            assert!(
                r[1].u_err <= 0.6 * r[0].u_err,
                "kappa {kappa}: {} -> {}",
                r[0].u_err,
                r[1].u_err
            );
        }
    }

    #[test]
    fn radial_exact_normalization() {
        let e = RadialExact::new(5.0, 0.5, 2.0);
        assert!(e.g(0.5).abs() < 1e-12);
        assert!((e.g(2.0) - 1.0).abs() < 1e-12);
        // Closed form for the constant: C = 1 / (ln 2 / kappa + ln 2).
        let expect = 1.0 / (2.0f64.ln() / 5.0 + 2.0f64.ln());
        assert!((e.constant - expect).abs() < 1e-12);
    }

    #[test]
    fn radial_quantity_constant_for_uniform_coefficient() {
        let report = radial_constancy_check(1.0, &[1.0 / 16.0, 1.0 / 32.0], 1e-11).unwrap();
        let r = &report.rows;
        assert!(r[1].deviation < r[0].deviation);
        assert!(r[1].deviation < 0.05 * r[1].constant);
    }

    #[test]
    fn radial_quantity_constant_across_interface() {
        let report = radial_constancy_check(5.0, &[1.0 / 16.0, 1.0 / 32.0], 1e-11).unwrap();
        let r = &report.rows;
        assert!(
            r[1].deviation <= 0.6 * r[0].deviation,
            "{} -> {}",
            r[0].deviation,
            r[1].deviation
        );
    }

    #[test]
    fn radial_constant_vanishes_for_flat_data() {
        // u identically constant has R identically zero; quick direct check
        // of the field path rather than the solver.
        use crate::grid::{build_grid, ScalarField};
        let domain = Rect::new(Point::new(-2.0, -2.0), Point::new(2.0, 2.0));
        let grid = build_grid(domain, 0.25).unwrap();
        let u = ScalarField::from_fn(grid, |_| 3.5);
        let grad = gradient(&u);
        let geometry = build_geometry(
            0.1,
            0.25,
            Rect::new(Point::new(-4.0, -7.0), Point::new(4.0, 3.0)),
        )
        .unwrap();
        let coeff = SharpCoefficient::new(geometry, 5.0, 0.2).unwrap();
        let radial = crate::fields::radial_quantity(&grad, CoefficientMode::Sharp(&coeff));
        assert!(radial.values.iter().all(|v| v.abs() < 1e-12));
    }
}

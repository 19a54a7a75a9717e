//! Verification of the quantitative and structural claims: closed-form
//! solution families, residual checks of the derivative identities,
//! transmission oracles for the solver, the gap-width sweep, and the
//! maximum-principle diagnostics.

use std::fmt;

pub mod analytic;
pub mod oracle;
pub mod residuals;
pub mod sweep;

pub use analytic::{analytic_family_2d, analytic_family_3d, AnalyticFamily};
pub use oracle::{
    radial_constancy_check, single_disk_oracle, RadialExact, RadialReport, SingleDiskExact,
    SingleDiskReport,
};
pub use residuals::{
    identity_residuals_2d, identity_residuals_nd, ResidualReport, DEFAULT_SPACINGS,
};
pub use sweep::{
    delta_sweep, gradient_bound_report, subharmonic_max_check, GradientBoundReport,
    MaxPrincipleReport, SweepMode, SweepParams, SweepRow, SweepTable,
};

use crate::coefficient::CoefficientError;
use crate::fields::FieldsError;
use crate::geometry::GeometryError;
use crate::grid::GridError;
use crate::solver::SolverError;

#[derive(Debug)]
pub enum VerifyError {
    EmptyRegion { region: &'static str },
    SweepUnresolved { h: f64, delta: f64 },
    Geometry(GeometryError),
    Coefficient(CoefficientError),
    Grid(GridError),
    Solver(SolverError),
    Fields(FieldsError),
}

impl fmt::Display for VerifyError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            VerifyError::EmptyRegion { region } => write!(f, "region check failed: {region}"),
            VerifyError::SweepUnresolved { h, delta } => {
                write!(
                    f,
                    "finest spacing {h} does not resolve the gap {delta} (need h <= delta/8)"
                )
            }
            VerifyError::Geometry(e) => write!(f, "{e}"),
            VerifyError::Coefficient(e) => write!(f, "{e}"),
            VerifyError::Grid(e) => write!(f, "{e}"),
            VerifyError::Solver(e) => write!(f, "{e}"),
            VerifyError::Fields(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for VerifyError {}

impl From<GeometryError> for VerifyError {
    fn from(e: GeometryError) -> Self {
        VerifyError::Geometry(e)
    }
}

impl From<CoefficientError> for VerifyError {
    fn from(e: CoefficientError) -> Self {
        VerifyError::Coefficient(e)
    }
}

impl From<GridError> for VerifyError {
    fn from(e: GridError) -> Self {
        VerifyError::Grid(e)
    }
}

impl From<SolverError> for VerifyError {
    fn from(e: SolverError) -> Self {
        VerifyError::Solver(e)
    }
}

impl From<FieldsError> for VerifyError {
    fn from(e: FieldsError) -> Self {
        VerifyError::Fields(e)
    }
}

/// Least-squares slope of ln(residual) against ln(spacing). `None` when
/// fewer than 3 spacings are present or any residual sits at the exact-zero
/// floor, where the fit is meaningless.
pub fn fitted_order(spacings: &[f64], linf: &[f64]) -> Option<f64> {
    if spacings.len() < 3 || spacings.len() != linf.len() {
        return None;
    }
    if linf.iter().any(|&r| !(r > 1e-14)) {
        return None;
    }
    let n = spacings.len() as f64;
    let xs: Vec<f64> = spacings.iter().map(|h| h.ln()).collect();
    let ys: Vec<f64> = linf.iter().map(|r| r.ln()).collect();
    let xbar = xs.iter().sum::<f64>() / n;
    let ybar = ys.iter().sum::<f64>() / n;
    let mut num = 0.0;
    let mut den = 0.0;
    for (x, y) in xs.iter().zip(&ys) {
        num += (x - xbar) * (y - ybar);
        den += (x - xbar) * (x - xbar);
    }
    Some(num / den)
}

/// Shared exclusion predicate for nodal-gradient measurements near the unit
/// circle: centered stencils straddling the coefficient jump carry an O(1)
/// smear, so nodes within `band` of the circle are left out.
pub fn fields_radius_excluded(r: f64, band: f64) -> bool {
    (r - 1.0).abs() <= band
}

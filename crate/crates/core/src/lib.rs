//! Solver and verification toolkit for the two-disk composite-media Dirichlet
//! problem: a divergence-form elliptic equation `(a u_i)_i = 0` with
//! piecewise-constant conductivity `a` equal to `kappa_plus` on one disk,
//! `kappa_minus` on the other, and 1 in the background.
//!
//! The crate provides
//! - the two-disk geometry with the derived regions used by the gradient
//!   bound argument (`geometry`),
//! - sharp and smoothed conductivity fields (`coefficient`),
//! - a flux-form finite-difference discretization with a preconditioned
//!   conjugate-gradient solve and a discrete maximum-principle certificate
//!   (`grid`, `solver`),
//! - the derived tangential/radial quantities, barrier profile and
//!   comparison quantities (`fields`),
//! - residual checks of the structural identities on closed-form solution
//!   families, transmission oracles, and the gap-width sweep (`verify`),
//! - configuration and CSV/JSON emission for experiment campaigns
//!   (`config`, `output`, `cli`).

pub mod cli;
pub mod coefficient;
pub mod config;
pub mod fields;
pub mod geometry;
pub mod grid;
pub mod output;
pub mod solver;
pub mod verify;

pub use coefficient::{edge_harmonic_mean, Profile, SharpCoefficient, SmoothCoefficient};
pub use geometry::{build_geometry, classify, gap_segment_halfwidth, region_masks};
pub use geometry::{Geometry, Point, Rect, RegionLabel, RegionMasks};
pub use grid::{build_grid, BoundaryFamily, BoundarySpec, Grid, ScalarField, VectorField};
pub use solver::{assemble, gradient, solve_dirichlet, CoefficientMode, LinearSystem, SolveReport};

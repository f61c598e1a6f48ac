//! Numerical workbench for moment maps of unitary-group actions, their
//! stability conditions, and vortex-equation flows on a lattice torus.
//!
//! The crate is organised bottom-up:
//!
//! * [`algebra`]: product unitary groups, Lie algebra elements, subgroup settings.
//! * [`moment`]: representations on tensor spaces and their moment maps.
//! * [`kempf_ness`]: maximal weights, filtrations, the Kempf–Ness functional and
//!   the finite-dimensional gradient flow.
//! * [`lattice`]: torus lattice, line bundles, ∂̄ operators, curvature and the
//!   metric heat flow, plus the scalar Newton solver.
//! * [`stability`]: slope-stability verdicts for decomposable curve fixtures.
//! * [`experiments`]: config parsing, batch runs and reports.

pub mod algebra;
pub mod error;
pub mod experiments;
pub mod format;
pub mod kempf_ness;
pub mod lattice;
pub mod linalg;
pub mod moment;
pub mod par;
pub mod random;
pub mod stability;

pub use error::{Error, Result};

/// Complex scalar used throughout.
pub type C64 = num_complex::Complex64;
/// Dense complex matrix.
pub type CMat = nalgebra::DMatrix<C64>;
/// Dense complex vector.
pub type CVec = nalgebra::DVector<C64>;

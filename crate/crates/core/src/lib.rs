//! Reconstruction of 2-D SPECT images under uniform attenuation.
//!
//! The exponential Radon transform of an activity map is reduced, by a
//! weighted differential backprojection, to a family of one-dimensional
//! finite cosh-weighted Hilbert transforms (one per vertical image line).
//! Each of those is inverted by the finite Hilbert (Tricomi) inversion
//! followed by a correction built from the low-order moments of the unknown,
//! which are obtained from two small linear systems.
//!
//! Module map:
//!
//! * [`tables`] - special coefficients (Chebyshev moments, weighted Hilbert
//!   transforms of monomials, Gauss-Chebyshev rules).
//! * [`phantom`] - ellipse phantoms, rasterization and analytic projections.
//! * [`sinogram`] - sinogram container, s-derivative, noise, truncation.
//! * [`dbp`] - weighted differential backprojection.
//! * [`cht`] - per-line cosh-weighted Hilbert transform inversion.
//! * [`recon`] - full reconstruction pipeline, profiles and metrics.
//! * [`io`] - on-disk formats.

// NaN inputs must fail the range checks, hence the negated comparisons.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod cht;
pub mod dbp;
mod error;
pub mod grid;
pub mod interp;
pub mod io;
pub mod phantom;
pub mod recon;
pub mod sinogram;
pub mod tables;

pub use crate::cht::{MomentSystems, MomentVector, StandardLine};
pub use crate::dbp::BField;
pub use crate::error::{Error, Result};
pub use crate::grid::{ImageGrid, Rect};
pub use crate::phantom::{Ellipse, Phantom};
pub use crate::recon::{ReconConfig, ReconReport};
pub use crate::sinogram::{DerivativeSinogram, Sinogram};
pub use crate::tables::CoeffCache;

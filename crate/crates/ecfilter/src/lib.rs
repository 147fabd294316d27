//! Spectral graph filtering with eigenvalue correction.
//!
//! Polynomial spectral filters take the eigenvalues of the normalized
//! Laplacian as input, and repeated eigenvalues cap how much such a
//! filter can express. This crate builds the normalized operators,
//! decomposes them, mixes the spectrum with an equidistant grid over
//! `[0, 2]` to break ties (`mu = beta * lambda + (1 - beta) * upsilon`),
//! and fits three polynomial filter families against predefined target
//! responses, with closed-form and gradient-descent fitting paths that
//! cross-check each other.
//!
//! Modules follow the pipeline order:
//!
//! - [`graph`]: graph construction (files, grids, random models) and the
//!   dense normalized adjacency/Laplacian pair.
//! - [`spectral`]: symmetric eigendecomposition, spectrum statistics,
//!   graph Fourier transform, histograms.
//! - [`correction`]: the equidistant grid, beta-mixing, and the corrected
//!   operator.
//! - [`filters`]: monomial/Bernstein/Jacobi bases, target responses, and
//!   the two equivalent filtering routes (eigenvalue polynomials vs
//!   matrix polynomials).
//! - [`learning`]: filter fitting (least squares oracle and gradient
//!   descent), the synthetic filter-learning experiment, and a linear
//!   spectral classifier.

pub mod correction;
pub mod error;
pub mod filters;
pub mod graph;
pub mod learning;
pub mod spectral;

pub use error::{Error, Result};

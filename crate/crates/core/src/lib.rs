//! Lightning-method solver for the planar heat equation outside polygonal
//! absorbing bodies.
//!
//! The time-dependent problem `u_t = D Δu` is Laplace transformed into a
//! family of modified Helmholtz problems `D Δû − s û = −u₀`. Each transform
//! problem is split into a free-space particular solution plus a homogeneous
//! correction, and the correction is expanded in modified-Bessel "lightning"
//! basis functions: pole clusters that crowd exponentially into every corner
//! (the Newman part) plus one or more multipole expansions (the Runge part).
//! Coefficients come from an overdetermined least-squares collocation fit on
//! the boundary. Time-domain values are recovered with a midpoint rule on the
//! modified Talbot contour.
//!
//! The crate is `no_std` (with `alloc`) when the default `std` feature is
//! disabled. File formats, the command-line driver and thread pools live in
//! the companion `lightning-heat-cli` crate.
//!
//! Module map:
//!
//! - [`geometry`]: polygons, corner angles, boundary sampling.
//! - [`specfun`]: `K_n(z)` for complex `z`, Green's function, basis functions.
//! - [`linalg`]: column-pivoted Householder least squares.
//! - [`helmholtz`]: pole placement, collocation, solve, evaluation, errors.
//! - [`ltinv`]: modified Talbot contour inversion.
//! - [`heat`]: the full pipeline, fields and boundary fluxes.
//! - [`asym`]: small-body matched-asymptotics reference model.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod asym;
mod error;
pub mod exec;
pub mod geometry;
pub mod heat;
pub mod helmholtz;
pub mod linalg;
pub mod ltinv;
mod quadrature;
pub mod specfun;
pub mod stats;

pub use error::{Error, Result};
pub use num_complex::Complex64;

/// Shorthand for `Complex64::new`.
#[inline]
pub fn c64(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

//! Phaseless short-time Fourier transform sampling on square-root lattices.
//!
//! The crate is organised around six modules:
//!
//! * [`windows`]: analytic windows (Gaussian, Hermite, polynomial times Gaussian)
//!   and growth-class certificates.
//! * [`lattices`]: square-root lattices `A(√ℤ)^m`, SL(2,ℝ) deformations and
//!   admissibility thresholds.
//! * [`stft`]: the discretised STFT engine, tensor products, fractional Fourier
//!   transform and metaplectic Gaussians.
//! * [`retrieval`]: reconstruction from full spectrograms, phase alignment,
//!   least-squares fitting from lattice samples and distinguishability reports.
//! * [`analysis`]: maximum modulus, order, Jensen's formula, zero-count bounds,
//!   density classification and the Weierstrass-product counterexample.
//! * [`cli`]: the `phaseless` command line front end.

pub mod analysis;
pub mod cli;
pub mod grid;
pub mod io;
pub mod lattices;
pub mod retrieval;
pub mod stft;
pub mod windows;

pub use grid::UniformGrid;
pub use num_complex::Complex64;

/// Library version embedded in every report.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

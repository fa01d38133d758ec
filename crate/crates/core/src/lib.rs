//! Numerical library for randomized eigenspaces of the harmonic oscillator
//! `H = -Δ + |x|²` on ℝ^d.
//!
//! The crate provides:
//!
//! * stable evaluation of 1-D Hermite functions and Gauss–Hermite rules
//!   ([`hermite`], [`quadrature`]),
//! * d-dimensional spectral windows, the spectral function `e_x` and the
//!   Mehler heat-kernel oracle ([`spectral`]),
//! * coefficient profiles, random laws and sphere measures ([`measures`]),
//! * weighted Lebesgue / harmonic Sobolev / dyadic Besov norms ([`norms`],
//!   [`grid`]),
//! * seeded Monte-Carlo experiments estimating tails, medians and scaling
//!   laws of norm functionals on random spheres ([`lab`]),
//! * Haar-random orthonormal eigenbases and their sup-norm decay profile
//!   ([`basis`]).
//!
//! All sampling is keyed by `(seed, sample index)` through a counter-based
//! generator so results are reproducible independently of the number of
//! worker threads.

pub mod basis;
pub mod error;
pub mod eval;
pub mod grid;
pub mod hermite;
pub mod lab;
pub mod measures;
pub mod norms;
pub mod quadrature;
pub mod report;
pub mod rng;
pub mod selftest;
pub mod spectral;
pub mod stats;

pub use error::{CoreError, Result};

//! Coupled Floquet-channel scattering through periodically driven barriers.
//!
//! The wave function is expanded in sidebands E + nω in the
//! Kramers–Henneberger frame, where the drive turns into a quivering barrier.
//! Transmission and reflection follow from backward integration of the
//! quasi-amplitude equations over the barrier support.

pub mod bessel;
pub mod error;
pub mod floquet;
pub mod kh;
pub mod oracles;
pub mod quadrature;
pub mod resonance;
pub mod setup;
pub mod units;

pub use error::{Error, Result};
pub use num_complex::Complex64 as c64;

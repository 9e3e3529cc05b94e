//! Spectral simulation of the cubic nonlinear Schrödinger equation with a repulsive
//! delta potential, and numerical checks of its long-time asymptotics.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod battery;
pub mod config;
pub mod dft;
pub mod error;
pub mod experiment;
pub mod fft;
pub mod fresnel;
pub mod grid;
pub mod modscat;
pub mod propagator;
pub mod rates;
pub mod scattering;
pub mod vops;

pub use error::{Error, Result};
pub use grid::{ComplexField, GridSpec, Norm, Space};
pub use num_complex::Complex64 as C64;
pub use scattering::ScatteringCoeffs;

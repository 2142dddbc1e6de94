//! Spectral laboratory for the cubic Schrödinger half-wave equation
//! `i u_t + (d_xx - |D_y|) u = mu |u|^2 u` on a periodic box, with Wiener-randomized
//! data, a renormalization-ladder solver and ill-posedness diagnostics.

pub mod ansatz;
pub mod data;
pub mod error;
pub mod evolve;
pub mod exponents;
pub mod grid;
pub mod illposedness;
pub mod multipliers;
pub mod norms;
pub mod numerics;
pub mod random_data;

pub use error::{LabError, Result};
pub use grid::{Field, Grid, Repr};
pub use rustfft::num_complex::Complex64 as C64;

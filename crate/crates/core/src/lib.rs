//! Pseudo-spectral laboratory for the three-dimensional KP-II equation
//!
//! `d_x(d_t u + d_x^3 u + d_x(u^2)) + Lap_y u = 0`
//!
//! on periodic boxes and on exact frequency boxes.

pub mod checks;
pub mod cli;
pub mod data;
pub mod decomposition;
pub mod error;
pub mod estimates;
pub mod fit;
pub mod illposed;
pub mod quad;
pub mod report;
pub mod rng;
pub mod scattering;
pub mod solver;
pub mod spaces;
pub mod spectral;

pub use error::{KpError, Result};

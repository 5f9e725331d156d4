//! Periodic anisotropic lattice, Fourier fields, the unitary transform, the
//! KP-II symbol and linear group, symmetries, and snapshot IO.

pub mod field;
pub mod grid;
pub mod propagator;
pub mod snapshot;
pub mod transform;

pub use field::{PhysicalField, SpectralField};
pub use grid::{dyadic_exponent, shell_exponent, signed_wavenumber, GridSpec};
pub use propagator::{
    apply_linear_propagator, dispersion_symbol, galilean_shift, galilean_transform, omega, omega_table,
    scaling_transform, GalileanShift,
};
pub use transform::{forward_transform, from_physical_complex, inverse_transform, to_physical_complex};

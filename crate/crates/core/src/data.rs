//! Data generators on the lattice: Gaussian derivatives, sector indicators,
//! random Hermitian fields.

use num_complex::Complex64;
use rand::Rng;
use std::f64::consts::PI;

use crate::decomposition::sector_of;
use crate::spectral::{GridSpec, SpectralField};

/// Factor turning continuum Fourier values `u_hat(zeta)` (unitary transform on
/// R^3) into unitary DFT coefficients on the box, so that the lattice mass
/// equals the continuum Plancherel sum.
pub fn continuum_factor(grid: &GridSpec) -> f64 {
    (grid.len() as f64).sqrt() * (2.0 * PI).powf(1.5) / grid.volume()
}

/// Lattice field sampling the continuum transform `f`, band-limited to the
/// retained modes.
pub fn from_continuum<F>(grid: &GridSpec, real_flag: bool, f: F) -> SpectralField
where
    F: Fn(f64, [f64; 2]) -> Complex64 + Sync,
{
    let s = continuum_factor(grid);
    let mut u = SpectralField::from_fn(grid, real_flag, |xi, eta| f(xi, eta) * s);
    u.band_limit();
    u
}

/// `amplitude * d_x g` for the Gaussian `g(x) = exp(-sum (x_i - c_i)^2 / (2 w_i^2))`.
/// Real and zero-x-mean.
pub fn gaussian_derivative(grid: &GridSpec, widths: [f64; 3], center: [f64; 3], amplitude: f64) -> SpectralField {
    let [wx, w1, w2] = widths;
    from_continuum(grid, true, move |xi, eta| {
        let e = (-(wx * wx * xi * xi + w1 * w1 * eta[0] * eta[0] + w2 * w2 * eta[1] * eta[1]) / 2.0).exp();
        let phase = -(xi * center[0] + eta[0] * center[1] + eta[1] * center[2]);
        Complex64::new(0.0, xi) * (amplitude * wx * w1 * w2 * e) * Complex64::from_polar(1.0, phase)
    })
}

/// Real indicator of the sector `Gamma_{2^e, 2^e m}` (both signs of xi).
pub fn sector_indicator(grid: &GridSpec, e: i32, m: [i64; 2]) -> SpectralField {
    from_continuum(grid, true, move |xi, eta| {
        if sector_of(xi, eta) == (e, m) {
            Complex64::new(1.0, 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        }
    })
}

/// Random real field with independent Gaussian coefficients on
/// `|k_i| <= band_i`, `k_x != 0`.
pub fn random_real_field<R: Rng>(grid: &GridSpec, rng: &mut R, band: [i64; 3]) -> SpectralField {
    let mut u = SpectralField::zeros(grid, true);
    let n = grid.dims();
    for a in 0..3 {
        assert!(2 * band[a] < n[a] as i64, "band exceeds the lattice");
    }
    for idx in 0..grid.len() {
        let k = grid.wavenumbers(idx);
        if k[0] <= 0 || (0..3).any(|a| k[a].abs() > band[a]) {
            continue;
        }
        let z = Complex64::new(normal(rng), normal(rng));
        u.coeff[idx] = z;
        let j = grid.mode_index([-k[0], -k[1], -k[2]]).expect("band keeps -k on the lattice");
        u.coeff[j] = z.conj();
    }
    u
}

/// Random complex field (no symmetry) on `|k_i| <= band_i`, `k_x != 0`.
pub fn random_complex_field<R: Rng>(grid: &GridSpec, rng: &mut R, band: [i64; 3]) -> SpectralField {
    let mut u = SpectralField::zeros(grid, false);
    for idx in 0..grid.len() {
        let k = grid.wavenumbers(idx);
        if k[0] == 0 || (0..3).any(|a| k[a].abs() > band[a]) {
            continue;
        }
        u.coeff[idx] = Complex64::new(normal(rng), normal(rng));
    }
    u
}

/// Standard normal deviate by Box-Muller.
pub fn normal<R: Rng>(rng: &mut R) -> f64 {
    let u1: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (2.0 * PI * u2).cos()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::member_rng;

    #[test]
    fn gaussian_derivative_is_real_and_mean_free() {
        let g = GridSpec::cube(16, 2.0, false).unwrap();
        let u = gaussian_derivative(&g, [1.0; 3], [3.0, 4.0, 5.0], 1.0);
        u.validate().unwrap();
        assert!(u.hermitian_defect() < 1e-14);
    }

    #[test]
    fn continuum_mass_matches_closed_form() {
        // ||d_x g||^2 = int xi^2 w^6 e^{-w^2|zeta|^2} = pi^{3/2} / (2 w) for isotropic width w.
        let g = GridSpec::cube(64, 4.0, false).unwrap();
        let u = gaussian_derivative(&g, [1.0; 3], [0.0; 3], 1.0);
        let exact = PI.powf(1.5) / 2.0;
        assert!((u.mass() - exact).abs() < 1e-10 * exact);
    }

    #[test]
    fn random_real_field_is_hermitian() {
        let g = GridSpec::cube(8, 1.0, false).unwrap();
        let u = random_real_field(&g, &mut member_rng(1, 0), [3, 3, 3]);
        u.validate().unwrap();
    }
}

use num_complex::Complex64;

use super::field::SpectralField;
use super::grid::dyadic_exponent;
use crate::error::{KpError, Result};

/// `omega(xi, eta) = xi^3 - |eta|^2 / xi`.
pub fn dispersion_symbol(xi: f64, eta: [f64; 2]) -> Result<f64> {
    if xi == 0.0 {
        return Err(KpError::Domain("dispersion symbol is singular at xi = 0".into()));
    }
    Ok(omega(xi, eta))
}

/// Unchecked symbol for hot loops; callers guarantee `xi != 0`.
#[inline]
pub fn omega(xi: f64, eta: [f64; 2]) -> f64 {
    xi * xi * xi - (eta[0] * eta[0] + eta[1] * eta[1]) / xi
}

/// Symbol table in array order, zero on the `xi = 0` plane.
pub fn omega_table(grid: &super::GridSpec) -> Vec<f64> {
    let xs = grid.xi_table();
    let [e1, e2] = grid.eta_tables();
    let mut out = Vec::with_capacity(grid.len());
    for &xi in &xs {
        for &a in &e1 {
            for &b in &e2 {
                out.push(if xi == 0.0 { 0.0 } else { omega(xi, [a, b]) });
            }
        }
    }
    out
}

/// `S(t)`: multiply each coefficient by `exp(i t omega)`.
pub fn apply_linear_propagator(u: &SpectralField, t: f64) -> SpectralField {
    if t == 0.0 {
        return u.clone();
    }
    let w = omega_table(&u.grid);
    u.with_coeff(u.coeff.iter().zip(&w).map(|(c, &om)| c * Complex64::from_polar(1.0, t * om)).collect())
}

/// Result of a Galilean relocation on the truncated lattice.
#[derive(Clone, Debug)]
pub struct GalileanShift {
    pub field: SpectralField,
    /// Integer transverse steps `m` with `c_i = m_i * deta_i / dxi`.
    pub steps: [i64; 2],
    /// Continuum `L^2` mass of modes pushed off the lattice.
    pub dropped_mass: f64,
    /// Set when `dropped_mass` exceeds `DROP_WARN` of the input mass.
    pub warning: bool,
}

pub const DROP_WARN: f64 = 1e-10;

fn aligned_steps(u: &SpectralField, c: [f64; 2]) -> Result<[i64; 2]> {
    let g = &u.grid;
    let d = g.deta();
    let mut m = [0i64; 2];
    for i in 0..2 {
        let r = c[i] * g.dxi() / d[i];
        let ri = r.round();
        if (r - ri).abs() > 1e-9 * r.abs().max(1.0) {
            return Err(KpError::Precondition(format!(
                "Galilean slope c_{} = {} is not grid-aligned; admissible values are m * {} for integer m",
                i + 1,
                c[i],
                d[i] / g.dxi()
            )));
        }
        m[i] = ri as i64;
    }
    Ok(m)
}

/// Fourier action `u_hat(xi, eta) -> u_hat(xi, eta + c xi)` on aligned slopes.
pub fn galilean_shift(u: &SpectralField, c: [f64; 2]) -> Result<GalileanShift> {
    galilean_transform(u, c, 0.0)
}

/// Galilean map at time `t`: the shear of [`galilean_shift`] followed by the
/// translation `exp(i t (2 c.eta + |c|^2 xi))` that makes it commute with the flow.
pub fn galilean_transform(u: &SpectralField, c: [f64; 2], t: f64) -> Result<GalileanShift> {
    let m = aligned_steps(u, c)?;
    let g = &u.grid;
    let mut out = SpectralField::zeros(g, u.real_flag);
    let mut moved = vec![false; g.len()];
    for idx in 0..g.len() {
        let k = g.wavenumbers(idx);
        if k[0] == 0 {
            continue;
        }
        let src = [k[0], k[1] + m[0] * k[0], k[2] + m[1] * k[0]];
        if let Some(j) = g.mode_index(src) {
            let (xi, eta) = g.frequency(idx);
            let phase = t * (2.0 * (c[0] * eta[0] + c[1] * eta[1]) + (c[0] * c[0] + c[1] * c[1]) * xi);
            out.coeff[idx] = u.coeff[j] * Complex64::from_polar(1.0, phase);
            moved[j] = true;
        }
    }
    let dropped: f64 = (0..g.len()).filter(|&j| !moved[j]).map(|j| u.coeff[j].norm_sqr()).sum::<f64>()
        * g.cell_volume();
    let total = u.mass();
    Ok(GalileanShift {
        field: out,
        steps: m,
        dropped_mass: dropped,
        warning: total > 0.0 && dropped > DROP_WARN * total,
    })
}

/// `u -> lam^2 u(lam x, lam^2 y)` realized on the nested grid with lengths
/// `(Lx/lam, Ly/lam^2)`: the coefficient array is kept and multiplied by `lam^2`.
pub fn scaling_transform(u: &SpectralField, lam: f64) -> Result<SpectralField> {
    let e = dyadic_exponent(lam)?;
    if e.abs() > 20 {
        return Err(KpError::Config(format!("scaling factor 2^{e} is outside the supported range 2^-20..2^20")));
    }
    let grid = u.grid.rescaled(lam);
    grid.validate()?;
    Ok(SpectralField { grid, coeff: u.coeff.iter().map(|c| c * (lam * lam)).collect(), real_flag: u.real_flag })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::GridSpec;
    use std::f64::consts::PI;

    #[test]
    fn symbol_values() {
        assert_eq!(dispersion_symbol(1.0, [0.0, 0.0]).unwrap(), 1.0);
        assert_eq!(dispersion_symbol(2.0, [2.0, 0.0]).unwrap(), 6.0);
        assert_eq!(dispersion_symbol(-1.0, [1.0, 1.0]).unwrap(), 1.0);
        assert!(dispersion_symbol(0.0, [1.0, 0.0]).is_err());
    }

    #[test]
    fn single_mode_phase_advance() {
        let g = GridSpec::new([8, 8, 8], [2.0 * PI, PI, 2.0 * PI], false).unwrap();
        let mut u = SpectralField::zeros(&g, false);
        u.set_mode([1, 2, -1], Complex64::new(1.0, 0.0)).unwrap();
        let t = 0.37;
        let v = apply_linear_propagator(&u, t);
        let om = omega(1.0, [4.0, -1.0]);
        let got = v.mode([1, 2, -1]).unwrap();
        assert!((got - Complex64::from_polar(1.0, t * om)).norm() < 1e-15);
        assert_eq!(apply_linear_propagator(&u, 0.0), u);
    }

    #[test]
    fn galilean_single_mode_relocates() {
        let g = GridSpec::new([16, 16, 16], [2.0 * PI; 3], false).unwrap();
        let mut u = SpectralField::zeros(&g, false);
        u.set_mode([2, 1, 0], Complex64::new(1.0, 0.0)).unwrap();
        let s = galilean_shift(&u, [1.0, 0.0]).unwrap();
        // new(xi, eta) = old(xi, eta + c xi): the mass moves to eta = 1 - 2.
        assert_eq!(s.field.mode([2, -1, 0]).unwrap(), Complex64::new(1.0, 0.0));
        assert_eq!(s.dropped_mass, 0.0);
        assert!(galilean_shift(&u, [0.5, 0.0]).is_err());
        assert_eq!(galilean_shift(&u, [0.0, 0.0]).unwrap().field, u);
    }

    #[test]
    fn scaling_single_mode() {
        let g = GridSpec::new([8, 8, 8], [2.0 * PI; 3], false).unwrap();
        let mut u = SpectralField::zeros(&g, false);
        u.set_mode([1, 1, 0], Complex64::new(1.0, 0.0)).unwrap();
        let v = scaling_transform(&u, 2.0).unwrap();
        let idx = v.grid.mode_index([1, 1, 0]).unwrap();
        let (xi, eta) = v.grid.frequency(idx);
        assert_eq!((xi, eta[0]), (2.0, 4.0));
        assert_eq!(v.coeff[idx], Complex64::new(4.0, 0.0));
        // lam^4 * lam^-5: continuum mass scales by 1/lam.
        assert!((v.mass() - u.mass() / 2.0).abs() < 1e-12 * u.mass());
        assert!(scaling_transform(&u, 3.0).is_err());
        assert_eq!(scaling_transform(&u, 1.0).unwrap(), u);
    }
}

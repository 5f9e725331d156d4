//! Dyadic shells, slope sectors, the l^q l^p L^2 norm and the space-time
//! norms on sampled traces.

mod modulation;
mod trace;
mod variation;

pub use modulation::{modulation_projection, xdot_norm, Side};
pub use trace::{SpaceTimeTrace, Window};
pub use variation::{pullback_distances, u1_from_distances, u1_variation_norm, v2_from_distances, v2_variation_norm};

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

use crate::error::{KpError, Result};
use crate::spectral::{dyadic_exponent, shell_exponent, SpectralField};

/// Sector `Gamma_{lam, k}` with `lam = 2^exp` and `k = lam * m`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct SectorIndex {
    pub exp: i32,
    pub m: [i64; 2],
}

/// Refined sector `Gamma_{lam, k, L}`: slope boxes of side `L lam` around `k L`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct RefinedSectorIndex {
    pub exp: i32,
    pub m: [i64; 2],
    pub l_exp: u32,
}

impl SectorIndex {
    pub fn new(lam: f64, m: [i64; 2]) -> Result<Self> {
        Ok(SectorIndex { exp: dyadic_exponent(lam)?, m })
    }

    pub fn lam(&self) -> f64 {
        2f64.powi(self.exp)
    }

    /// Center slope `k` of the sector.
    pub fn k(&self) -> [f64; 2] {
        let l = self.lam();
        [l * self.m[0] as f64, l * self.m[1] as f64]
    }
}

impl RefinedSectorIndex {
    pub fn contains(&self, xi: f64, eta: [f64; 2]) -> bool {
        if xi == 0.0 {
            return false;
        }
        let lam = 2f64.powi(self.exp);
        let big_l = 2f64.powi(self.l_exp as i32);
        let w = lam * big_l;
        shell_exponent(xi.abs()) == self.exp
            && (0..2).all(|i| ((eta[i] / xi) / w + 0.5).floor() as i64 == self.m[i])
    }
}

/// Shell exponent and sector of a nonzero frequency. Slope boxes are
/// half-open, `eta/xi - k in [-lam/2, lam/2)^2`, so at fixed `lam` the sectors
/// partition the shell.
#[inline]
pub fn sector_of(xi: f64, eta: [f64; 2]) -> (i32, [i64; 2]) {
    let e = shell_exponent(xi.abs());
    let lam = 2f64.powi(e);
    let m = [((eta[0] / xi) / lam + 0.5).floor() as i64, ((eta[1] / xi) / lam + 0.5).floor() as i64];
    (e, m)
}

/// `(q, p, b)`: sequence exponents of the l^q l^p L^2 norm (`f64::INFINITY`
/// allowed) and the modulation exponent of the X^{0,b} component.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormParams {
    pub q: f64,
    pub p: f64,
    pub b: f64,
}

impl Default for NormParams {
    fn default() -> Self {
        NormParams { q: 2.0, p: 1.5, b: 0.9 }
    }
}

impl NormParams {
    pub fn new(q: f64, p: f64, b: f64) -> Result<Self> {
        for (n, v) in [("q", q), ("p", p)] {
            if !(v >= 1.0) {
                return Err(KpError::Config(format!("{n} = {v} must lie in [1, inf]")));
            }
        }
        if !(b > 0.5 && b <= 1.0) {
            return Err(KpError::Config(format!("b = {b} must lie in (1/2, 1]")));
        }
        Ok(NormParams { q, p, b })
    }

    pub fn qp(q: f64, p: f64) -> Result<Self> {
        Self::new(q, p, 0.9)
    }
}

/// Keep `lam <= |xi| < 2 lam`.
pub fn dyadic_projection(u: &SpectralField, lam: f64) -> Result<SpectralField> {
    let e = dyadic_exponent(lam)?;
    let mut out = u.clone();
    for idx in 0..out.coeff.len() {
        let (xi, _) = u.grid.frequency(idx);
        if xi == 0.0 || shell_exponent(xi.abs()) != e {
            out.coeff[idx] = num_complex::Complex64::new(0.0, 0.0);
        }
    }
    Ok(out)
}

pub fn sector_projection(u: &SpectralField, s: SectorIndex) -> SpectralField {
    let mut out = u.clone();
    for idx in 0..out.coeff.len() {
        let (xi, eta) = u.grid.frequency(idx);
        if xi == 0.0 || sector_of(xi, eta) != (s.exp, s.m) {
            out.coeff[idx] = num_complex::Complex64::new(0.0, 0.0);
        }
    }
    out
}

/// Squared continuum masses `||u_Gamma||_2^2`, keyed by sector.
pub type SectorMasses = BTreeMap<SectorIndex, f64>;

pub fn sector_masses(u: &SpectralField) -> SectorMasses {
    let mut out = SectorMasses::new();
    let cv = u.grid.cell_volume();
    for (idx, c) in u.coeff.iter().enumerate() {
        let m2 = c.norm_sqr();
        if m2 == 0.0 {
            continue;
        }
        let (xi, eta) = u.grid.frequency(idx);
        let (exp, m) = sector_of(xi, eta);
        *out.entry(SectorIndex { exp, m }).or_insert(0.0) += cv * m2;
    }
    out
}

/// Sector masses of a quadrature-sampled Fourier function: each sample is
/// `(xi, eta, weight * |f_hat|^2)`.
pub fn sector_masses_from_samples<I>(samples: I) -> SectorMasses
where
    I: IntoIterator<Item = (f64, [f64; 2], f64)>,
{
    let mut out = SectorMasses::new();
    for (xi, eta, w) in samples {
        if xi == 0.0 || w == 0.0 {
            continue;
        }
        let (exp, m) = sector_of(xi, eta);
        *out.entry(SectorIndex { exp, m }).or_insert(0.0) += w;
    }
    out
}

fn lp_combine<I: Iterator<Item = f64>>(vals: I, p: f64) -> f64 {
    if p.is_infinite() {
        vals.fold(0.0, f64::max)
    } else {
        vals.map(|v| v.powf(p)).sum::<f64>().powf(1.0 / p)
    }
}

/// Per-shell values `(Sum_k ||u_Gamma||^p)^{1/p}` keyed by shell exponent.
pub fn shell_lp(masses: &SectorMasses, p: f64) -> BTreeMap<i32, f64> {
    let mut grouped: BTreeMap<i32, Vec<f64>> = BTreeMap::new();
    for (s, m) in masses {
        grouped.entry(s.exp).or_default().push(m.sqrt());
    }
    grouped.into_iter().map(|(e, v)| (e, lp_combine(v.into_iter(), p))).collect()
}

/// `(Sum_lam lam^{q/2} (Sum_k ||u_Gamma||^p)^{q/p})^{1/q}` with max-reductions at infinity.
pub fn lqlp_from_masses(masses: &SectorMasses, q: f64, p: f64) -> f64 {
    let shells = shell_lp(masses, p);
    lp_combine(shells.into_iter().map(|(e, v)| 2f64.powi(e).sqrt() * v), q)
}

pub fn lqlp_norm(u: &SpectralField, np: &NormParams) -> f64 {
    lqlp_from_masses(&sector_masses(u), np.q, np.p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{random_real_field, sector_indicator};
    use crate::rng::member_rng;
    use crate::spectral::GridSpec;
    use num_complex::Complex64;
    use std::f64::consts::PI;

    #[test]
    fn shell_membership() {
        let g = GridSpec::new([16, 8, 8], [2.0 * PI; 3], false).unwrap();
        let mut u = SpectralField::zeros(&g, false);
        u.set_mode([3, 0, 0], Complex64::new(1.0, 0.0)).unwrap();
        assert_eq!(dyadic_projection(&u, 2.0).unwrap(), u);
        assert_eq!(dyadic_projection(&u, 1.0).unwrap().coeff_energy(), 0.0);
        assert_eq!(dyadic_projection(&u, 4.0).unwrap().coeff_energy(), 0.0);
    }

    #[test]
    fn unit_mode_sector() {
        assert_eq!(sector_of(1.0, [0.0, 0.0]), (0, [0, 0]));
        // Right boundary belongs to the next box.
        assert_eq!(sector_of(1.0, [0.5, -0.5]), (0, [1, 0]));
    }

    #[test]
    fn single_sector_norm_is_weighted_mass() {
        let g = GridSpec::new([32, 16, 16], [4.0 * PI, PI, PI], false).unwrap();
        let f = sector_indicator(&g, 1, [1, 0]);
        assert!(f.mass() > 0.0);
        let want = 2f64.sqrt() * f.l2_norm();
        for (q, p) in [(1.0, 1.0), (2.0, 1.5), (f64::INFINITY, 3.0), (f64::INFINITY, f64::INFINITY)] {
            let v = lqlp_norm(&f, &NormParams::qp(q, p).unwrap());
            assert!((v - want).abs() < 1e-12 * want);
        }
    }

    #[test]
    fn two_equal_sectors_lp_ratio() {
        let mut masses = SectorMasses::new();
        masses.insert(SectorIndex { exp: 0, m: [0, 0] }, 4.0);
        masses.insert(SectorIndex { exp: 0, m: [1, 0] }, 4.0);
        let r = lqlp_from_masses(&masses, 2.0, 2.0) / lqlp_from_masses(&masses, 2.0, 1.0);
        assert!((r - 2f64.powf(-0.5)).abs() < 1e-15);
    }

    #[test]
    fn parseval_over_shells_and_sectors() {
        let g = GridSpec::new([32, 16, 16], [2.0 * PI, PI, 0.5 * PI], false).unwrap();
        let u = random_real_field(&g, &mut member_rng(7, 0), [15, 7, 7]);
        let (lo, hi) = g.dyadic_range();
        let mut shell_sum = 0.0;
        let mut recon = SpectralField::zeros(&g, true);
        for e in lo..=hi {
            let ue = dyadic_projection(&u, 2f64.powi(e)).unwrap();
            shell_sum += ue.mass();
            recon = recon.add(&ue);
        }
        assert_eq!(recon, u);
        assert!((shell_sum - u.mass()).abs() < 1e-12 * u.mass());
        let sector_sum: f64 = sector_masses(&u).values().sum();
        assert!((sector_sum - u.mass()).abs() < 1e-12 * u.mass());
    }
}

//! Smooth bilinear projections `T_L` splitting the product by the slope
//! separation `(eta_1/xi_1 - eta_2/xi_2) / (xi_1 + xi_2)`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

use crate::error::{KpError, Result};
use crate::spectral::{GridSpec, SpectralField};

/// Largest lattice (mode count) accepted by the quadratic-cost pair sums.
pub const MAX_TL_MODES: usize = 24 * 24 * 24;

/// Tensor cutoff `phi1(s) = r(|s_1|) r(|s_2|)` with `r = 1` on `[0, plateau]`,
/// `0` beyond `edge` and a quintic smoothstep in between.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MultiplierProfile {
    pub plateau: f64,
    pub edge: f64,
}

impl Default for MultiplierProfile {
    fn default() -> Self {
        MultiplierProfile { plateau: 128.0, edge: 129.0 }
    }
}

impl MultiplierProfile {
    fn ramp(&self, x: f64) -> f64 {
        let x = x.abs();
        if x <= self.plateau {
            1.0
        } else if x >= self.edge {
            0.0
        } else {
            let t = (x - self.plateau) / (self.edge - self.plateau);
            1.0 - t * t * t * (10.0 - 15.0 * t + 6.0 * t * t)
        }
    }

    pub fn phi1(&self, s: [f64; 2]) -> f64 {
        self.ramp(s[0]) * self.ramp(s[1])
    }

    /// `phi1(s / L) - phi1(2 s / L)` for `L >= 2`.
    pub fn psi(&self, l: u32, s: [f64; 2]) -> f64 {
        let lf = l as f64;
        self.phi1([s[0] / lf, s[1] / lf]) - self.phi1([2.0 * s[0] / lf, 2.0 * s[1] / lf])
    }

    /// `rho_1 = phi1`, `rho_L = psi_L` for `L >= 2`.
    pub fn rho(&self, l: u32, s: [f64; 2]) -> f64 {
        if l == 1 {
            self.phi1(s)
        } else {
            self.psi(l, s)
        }
    }

    /// `sum_{L = 1, 2, ..., l_max} rho_L(s)`.
    pub fn partition_sum(&self, s: [f64; 2], l_max: u32) -> f64 {
        let mut l = 1;
        let mut acc = 0.0;
        while l <= l_max {
            acc += self.rho(l, s);
            l *= 2;
        }
        acc
    }

    /// Dyadic levels with `rho_L(s) != 0`.
    pub fn support_levels(&self, s: [f64; 2]) -> Vec<u32> {
        let m = s[0].abs().max(s[1].abs());
        let mut out = vec![];
        if m < self.edge {
            out.push(1);
        }
        let mut l: u32 = 2;
        // psi_L vanishes unless plateau * L / 2 < m < edge * L.
        while (l as f64) * self.plateau / 2.0 <= m.max(self.plateau) {
            if m > self.plateau * l as f64 / 2.0 && m < self.edge * l as f64 {
                out.push(l);
            }
            l = l.checked_mul(2).expect("slope separation out of range");
        }
        out
    }
}

/// `(eta_1/xi_1 - eta_2/xi_2) / (xi_1 + xi_2)`.
#[inline]
pub fn pair_slope(xi1: f64, eta1: [f64; 2], xi2: f64, eta2: [f64; 2]) -> [f64; 2] {
    let d = xi1 + xi2;
    [(eta1[0] / xi1 - eta2[0] / xi2) / d, (eta1[1] / xi1 - eta2[1] / xi2) / d]
}

/// Output of a pair sum: the field and the number of nonzero pairs whose
/// `xi_1 + xi_2 = 0` sends them to the dropped `xi = 0` plane.
#[derive(Clone, Debug)]
pub struct TlProduct {
    pub field: SpectralField,
    pub zero_plane_pairs: usize,
}

struct Support {
    k: Vec<[i64; 3]>,
    c: Vec<Complex64>,
    freq: Vec<(f64, [f64; 2])>,
}

fn support(u: &SpectralField) -> Support {
    let mut s = Support { k: vec![], c: vec![], freq: vec![] };
    for (idx, &c) in u.coeff.iter().enumerate() {
        if c != Complex64::new(0.0, 0.0) {
            s.k.push(u.grid.wavenumbers(idx));
            s.c.push(c);
            s.freq.push(u.grid.frequency(idx));
        }
    }
    s
}

fn check(u: &SpectralField, v: &SpectralField) -> Result<()> {
    if u.grid != v.grid {
        return Err(KpError::Config("T_L factors must share one grid".into()));
    }
    if u.grid.len() > MAX_TL_MODES {
        return Err(KpError::Config(format!(
            "T_L pair sums are limited to {MAX_TL_MODES} modes, grid has {}",
            u.grid.len()
        )));
    }
    Ok(())
}

/// Visit every pair of nonzero modes whose sum is a lattice mode without
/// wrap-around: `f(out_index, xi1, eta1, xi2, eta2, c1 c2 / sqrt(N))`.
fn for_pairs<F>(u: &SpectralField, v: &SpectralField, mut f: F) -> usize
where
    F: FnMut(usize, (f64, [f64; 2]), (f64, [f64; 2]), Complex64),
{
    let g: &GridSpec = &u.grid;
    let (a, b) = (support(u), support(v));
    let norm = 1.0 / (g.len() as f64).sqrt();
    let mut zero_plane = 0;
    for i in 0..a.k.len() {
        for j in 0..b.k.len() {
            let k = [a.k[i][0] + b.k[j][0], a.k[i][1] + b.k[j][1], a.k[i][2] + b.k[j][2]];
            if k[0] == 0 {
                zero_plane += 1;
                continue;
            }
            if let Some(idx) = g.mode_index(k) {
                f(idx, a.freq[i], b.freq[j], a.c[i] * b.c[j] * norm);
            }
        }
    }
    zero_plane
}

/// Product `u v` by the direct pair sum (no multiplier), the ground truth for
/// the partition of unity.
pub fn product_direct(u: &SpectralField, v: &SpectralField) -> Result<TlProduct> {
    check(u, v)?;
    let mut out = SpectralField::zeros(&u.grid, u.real_flag && v.real_flag);
    let zero_plane_pairs = for_pairs(u, v, |idx, _, _, c| out.coeff[idx] += c);
    Ok(TlProduct { field: out, zero_plane_pairs })
}

/// `T_L(u, v)`: pair sum weighted by `rho_L` of the slope separation.
pub fn apply_tl(u: &SpectralField, v: &SpectralField, l: u32, prof: &MultiplierProfile) -> Result<TlProduct> {
    if !l.is_power_of_two() {
        return Err(KpError::Config(format!("L = {l} must be a power of 2")));
    }
    check(u, v)?;
    let mut out = SpectralField::zeros(&u.grid, u.real_flag && v.real_flag);
    let zero_plane_pairs = for_pairs(u, v, |idx, (x1, e1), (x2, e2), c| {
        let r = prof.rho(l, pair_slope(x1, e1, x2, e2));
        if r != 0.0 {
            out.coeff[idx] += c * r;
        }
    });
    Ok(TlProduct { field: out, zero_plane_pairs })
}

/// All nonzero `T_L(u, v)` in one pass, keyed by `L`.
pub fn tl_decomposition(
    u: &SpectralField,
    v: &SpectralField,
    prof: &MultiplierProfile,
) -> Result<(BTreeMap<u32, SpectralField>, usize)> {
    check(u, v)?;
    let mut parts: BTreeMap<u32, SpectralField> = BTreeMap::new();
    let real = u.real_flag && v.real_flag;
    let zero = for_pairs(u, v, |idx, (x1, e1), (x2, e2), c| {
        let s = pair_slope(x1, e1, x2, e2);
        for l in prof.support_levels(s) {
            let r = prof.rho(l, s);
            if r != 0.0 {
                parts.entry(l).or_insert_with(|| SpectralField::zeros(&u.grid, real)).coeff[idx] += c * r;
            }
        }
    });
    Ok((parts, zero))
}

/// Smallest dyadic `L` with `|s|_inf <= plateau L` for every contributing pair;
/// the levels `1..=L` then sum to the plain product.
pub fn max_level(u: &SpectralField, v: &SpectralField, prof: &MultiplierProfile) -> Result<u32> {
    check(u, v)?;
    let mut m: f64 = 0.0;
    for_pairs(u, v, |_, (x1, e1), (x2, e2), _| {
        let s = pair_slope(x1, e1, x2, e2);
        m = m.max(s[0].abs()).max(s[1].abs());
    });
    let mut l: u32 = 1;
    while (l as f64) * prof.plateau < m {
        l *= 2;
    }
    Ok(l)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn profile_shape() {
        let p = MultiplierProfile::default();
        assert_eq!(p.phi1([127.9, -128.0]), 1.0);
        assert_eq!(p.phi1([129.0, 0.0]), 0.0);
        assert_eq!(p.phi1([128.5, 3.0]), 0.5);
        assert_eq!(p.phi1([-128.3, 7.0]), p.phi1([128.3, -7.0]));
        assert_eq!(p.psi(4, [0.0, 0.0]), 0.0);
    }

    #[test]
    fn support_levels_cover_nonzero_rho() {
        let p = MultiplierProfile::default();
        for &m in &[0.0, 10.0, 63.9, 64.0, 128.2, 200.0, 258.1, 1e4, 3.3e5] {
            let s = [m, 0.3 * m];
            let lv = p.support_levels(s);
            let mut l = 1;
            while l < 1 << 16 {
                assert_eq!(p.rho(l, s) != 0.0, lv.contains(&l), "m = {m}, L = {l}");
                l *= 2;
            }
        }
    }
}

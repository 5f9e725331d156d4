//! Function-space witnesses on continuum data: sector sums of Gaussians at
//! small and large dyadic scales, the zero-x-mean dichotomy, and a Besov comb
//! bounded in norm whose pairing with a fixed low-pass function diverges.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{KpError, Result};
use crate::fit::{fit_line, LineFit};
use crate::quad::gauss_legendre;
use crate::spectral::dyadic_exponent;

/// `g(x, y) = exp(-sum x_a^2 / (2 w_a^2))`, or its x-derivative when `dx`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaussianDatum {
    pub widths: [f64; 3],
    pub dx: bool,
}

impl GaussianDatum {
    pub fn new(widths: [f64; 3], dx: bool) -> Result<Self> {
        if !widths.iter().all(|w| *w > 0.0 && w.is_finite()) {
            return Err(KpError::Config(format!("Gaussian widths {widths:?} must be positive")));
        }
        Ok(GaussianDatum { widths, dx })
    }

    /// `|f_hat(xi, eta)|^2` with the unitary transform.
    pub fn fourier_sq(&self, xi: f64, eta: [f64; 2]) -> f64 {
        let [a, b, c] = self.widths;
        let e = (a * xi).powi(2) + (b * eta[0]).powi(2) + (c * eta[1]).powi(2);
        let base = (a * b * c).powi(2) * (-e).exp();
        if self.dx {
            base * xi * xi
        } else {
            base
        }
    }

    /// `|f_hat(0, .)|` does not vanish identically.
    pub fn has_nonzero_x_mean(&self) -> bool {
        !self.dx
    }
}

/// Per-axis lattice sums beyond this many sectors switch to the Poisson
/// limit `sum_k F(k) -> int F(k) dk`, exact up to exponentially small
/// aliasing once the Gaussian spans many sectors.
pub const LATTICE_LIMIT: usize = 1500;
/// Transverse cutoff in units of the width: `exp(-CUT^2)` is negligible.
const CUT: f64 = 9.0;
const XI_NODES: usize = 32;

/// `int exp(-w^2 t^2) dt` over `[a, b]` without cancellation in the tails.
fn gauss_window(w: f64, a: f64, b: f64) -> f64 {
    let k = std::f64::consts::PI.sqrt() / (2.0 * w);
    let (x, y) = (w * a, w * b);
    if x >= 0.0 {
        k * (libm::erfc(x) - libm::erfc(y))
    } else if y <= 0.0 {
        k * (libm::erfc(-y) - libm::erfc(-x))
    } else {
        k * (libm::erf(y) - libm::erf(x))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SumMode {
    /// Lattice up to [`LATTICE_LIMIT`] sectors per axis, Poisson beyond.
    Auto,
    Lattice,
    Poisson,
}

/// `(sum_k ||f_Gamma||^p)^{1/p}` over the sectors of shell `lam` (both signs
/// of `xi`), with `p = inf` giving the largest sector.
pub fn sector_sum(d: &GaussianDatum, lam: f64, p: f64) -> Result<f64> {
    sector_sum_with(d, lam, p, SumMode::Auto)
}

pub fn sector_sum_with(d: &GaussianDatum, lam: f64, p: f64, mode: SumMode) -> Result<f64> {
    dyadic_exponent(lam)?;
    if !(p >= 1.0) {
        return Err(KpError::Config(format!("p = {p} must be >= 1")));
    }
    let [wx, w1, w2] = d.widths;
    let (xs, ws) = gauss_legendre(XI_NODES, lam, 2.0 * lam);
    // 2 for the mirror half xi < 0, which has the same sector masses.
    let gw: Vec<f64> = xs
        .iter()
        .zip(&ws)
        .map(|(&x, &w)| {
            let dx = if d.dx { x * x } else { 1.0 };
            2.0 * w * (wx * w1 * w2).powi(2) * (-(wx * x).powi(2)).exp() * dx
        })
        .collect();
    let window = |w: f64, k: f64, x: f64| gauss_window(w, x * lam * (k - 0.5), x * lam * (k + 0.5));
    let count = |w: f64| (CUT / (w * lam * lam)).ceil() as usize + 1;
    let (k1, k2) = (count(w1), count(w2));
    let mass = |h1: &[f64], h2: &[f64]| -> f64 { (0..XI_NODES).map(|j| gw[j] * h1[j] * h2[j]).sum() };
    let combine = |m: f64| if p.is_infinite() { m.sqrt() } else { m.powf(p / 2.0) };
    let lattice = match mode {
        SumMode::Auto => k1.max(k2) <= LATTICE_LIMIT,
        SumMode::Lattice => true,
        SumMode::Poisson => false,
    };
    // Window masses fall off in |k| for a centred Gaussian, so the largest
    // sector is k = 0.
    let (k1, k2, lattice) = if p.is_infinite() { (0, 0, true) } else { (k1, k2, lattice) };
    // Nodes and weights in k per axis; the weights fold in the k -> -k symmetry.
    let axis = |kmax: usize| -> (Vec<f64>, Vec<f64>) {
        if lattice {
            let ks: Vec<f64> = (0..=kmax).map(|k| k as f64).collect();
            let wt = ks.iter().map(|&k| if k == 0.0 { 1.0 } else { 2.0 }).collect();
            (ks, wt)
        } else {
            let panels = 64;
            let h = kmax as f64 / panels as f64;
            let (mut ks, mut wt) = (vec![], vec![]);
            for i in 0..panels {
                let (n, q) = gauss_legendre(8, i as f64 * h, (i + 1) as f64 * h);
                ks.extend(n);
                wt.extend(q.into_iter().map(|v| 2.0 * v));
            }
            (ks, wt)
        }
    };
    let (n1, c1) = axis(k1);
    let (n2, c2) = axis(k2);
    let table = |w: f64, ks: &[f64]| -> Vec<Vec<f64>> {
        ks.iter().map(|&k| xs.iter().map(|&x| window(w, k, x)).collect()).collect()
    };
    let (h1, h2) = (table(w1, &n1), table(w2, &n2));
    let terms = h1.par_iter().zip(&c1).map(|(a, &ca)| {
        h2.iter().zip(&c2).map(|(b, &cb)| (ca * cb, combine(mass(a, b)))).collect::<Vec<_>>()
    });
    if p.is_infinite() {
        Ok(terms.flatten().map(|(_, v)| v).reduce(|| 0.0, f64::max))
    } else {
        let s: f64 = terms.map(|row| row.iter().map(|(c, v)| c * v).sum::<f64>()).sum();
        Ok(s.powf(1.0 / p))
    }
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct ShellRow {
    pub lam: f64,
    pub value: f64,
}

pub fn sector_sum_table(d: &GaussianDatum, lams: &[f64], p: f64) -> Result<Vec<ShellRow>> {
    lams.iter().map(|&lam| Ok(ShellRow { lam, value: sector_sum(d, lam, p)? })).collect()
}

/// Shells used for low-frequency slopes.
pub fn low_shells() -> Vec<f64> {
    (5..=8).rev().map(|e| 2f64.powi(-e)).collect()
}

/// Log-log fit of `value` against `lam` on the four smallest shells.
fn low_fit(rows: &[ShellRow]) -> Result<LineFit> {
    let mut r: Vec<&ShellRow> = rows.iter().collect();
    r.sort_by(|a, b| a.lam.partial_cmp(&b.lam).unwrap());
    if r.len() < 4 {
        return Err(KpError::Precondition(format!("slope fit needs 4 shells, got {}", r.len())));
    }
    let xs: Vec<f64> = r[..4].iter().map(|s| s.lam.log2()).collect();
    let ys: Vec<f64> = r[..4].iter().map(|s| s.value.log2()).collect();
    Ok(fit_line(&xs, &ys))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DecayReport {
    pub p: f64,
    pub rows: Vec<ShellRow>,
    pub low_slope: f64,
    /// `3/2 - 2/p`, the displayed dyadic bound.
    pub bound_exponent: f64,
    /// `5/2 - 4/p`: sector volume `lam^5` and `lam^{-4}` occupied sectors.
    pub lattice_exponent: f64,
    /// Value at `lam = 8` over value at `lam = 1`.
    pub tail_ratio: f64,
}

/// Low-shell slope and high-shell decay of the sector sums.
pub fn sector_sum_decay(d: &GaussianDatum, p: f64) -> Result<DecayReport> {
    let mut lams = low_shells();
    lams.extend([1.0, 2.0, 4.0, 8.0]);
    let rows: Vec<ShellRow> =
        lams.par_iter().map(|&lam| Ok(ShellRow { lam, value: sector_sum(d, lam, p)? })).collect::<Result<_>>()?;
    let low = low_fit(&rows)?;
    let at = |l: f64| rows.iter().find(|r| r.lam == l).unwrap().value;
    let dx = if d.dx { 1.0 } else { 0.0 };
    Ok(DecayReport {
        p,
        low_slope: low.slope,
        bound_exponent: 1.5 - 2.0 / p,
        lattice_exponent: 2.5 - 4.0 / p + dx,
        tail_ratio: at(8.0) / at(1.0),
        rows,
    })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ZeroMeanReport {
    pub p: f64,
    pub nonzero_mean: bool,
    /// `(lam, lam^{1/2} (sum_k ||f_Gamma||^p)^{1/p})`.
    pub rows: Vec<ShellRow>,
    pub slope: f64,
    /// `3/2 - 2/p`.
    pub bound_exponent: f64,
    /// `3 - 4/p`, or `4 - 4/p` for an x-derivative datum.
    pub lattice_exponent: f64,
    /// Partial values grow as `lam -> 0`.
    pub divergent: bool,
}

/// The weighted partial value `lam^{1/2} (sum_k ||f_Gamma||^p)^{1/p}` as
/// `lam -> 0`: it blows up for `p < 4/3` exactly when `f_hat(0, .)` is not zero.
pub fn zero_mean_blowup(d: &GaussianDatum, p: f64) -> Result<ZeroMeanReport> {
    let rows: Vec<ShellRow> = low_shells()
        .par_iter()
        .map(|&lam| Ok(ShellRow { lam, value: lam.sqrt() * sector_sum(d, lam, p)? }))
        .collect::<Result<_>>()?;
    let fit = low_fit(&rows)?;
    let dx = if d.dx { 1.0 } else { 0.0 };
    Ok(ZeroMeanReport {
        p,
        nonzero_mean: d.has_nonzero_x_mean(),
        slope: fit.slope,
        bound_exponent: 1.5 - 2.0 / p,
        lattice_exponent: 3.0 - 4.0 / p + dx,
        divergent: fit.slope < 0.0,
        rows,
    })
}

/// `(sum_lam lam^{q/2} S_lam^q)^{1/q}` over the dyadic shells `2^e`, `e` in `exps`.
pub fn gaussian_lqlp(d: &GaussianDatum, q: f64, p: f64, exps: std::ops::RangeInclusive<i32>) -> Result<f64> {
    let vals: Vec<f64> = exps
        .map(|e| {
            let lam = 2f64.powi(e);
            Ok(lam.sqrt() * sector_sum(d, lam, p)?)
        })
        .collect::<Result<_>>()?;
    Ok(if q.is_infinite() {
        vals.iter().fold(0.0, |a: f64, &v| a.max(v))
    } else {
        vals.iter().map(|v| v.powf(q)).sum::<f64>().powf(1.0 / q)
    })
}

/// One-dimensional comb `phi_mu = |ln mu|^{-1/p} sum_{mu^2 <= lam <= mu} f_lam`
/// with `f_lam_hat = 1/lam` on `lam <= |xi| < 2 lam`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BesovComb {
    pub mu: f64,
    pub p: f64,
    /// Dyadic shells present, ascending.
    pub shells: Vec<f64>,
}

impl BesovComb {
    pub fn new(mu: f64, p: f64) -> Result<Self> {
        let e = dyadic_exponent(mu)?;
        if e >= 0 {
            return Err(KpError::Config(format!("mu = {mu} must be below 1")));
        }
        if !(p >= 1.0 && p.is_finite()) {
            return Err(KpError::Config(format!("p = {p} must lie in [1, inf)")));
        }
        if 2 * e < f64::MIN_EXP - 1 {
            return Err(KpError::Config(format!("mu^2 = 2^{} is not representable", 2 * e)));
        }
        Ok(BesovComb { mu, p, shells: (2 * e..=e).map(|k| 2f64.powi(k)).collect() })
    }

    fn weight(&self) -> f64 {
        self.mu.ln().abs().powf(-1.0 / self.p)
    }

    /// `phi_hat(xi)`.
    pub fn fourier(&self, xi: f64) -> f64 {
        let a = xi.abs();
        self.shells.iter().filter(|&&l| a >= l && a < 2.0 * l).map(|l| self.weight() / l).sum()
    }

    /// `(sum_lam (lam^{1/2} ||P_lam phi||_2)^q)^{1/q}`, with each shell's
    /// `L^2` norm integrated over both signs of `xi`.
    pub fn besov_norm(&self, q: f64) -> f64 {
        let vals = self.shells.iter().map(|&l| {
            let (x, w) = gauss_legendre(4, l, 2.0 * l);
            let m2: f64 = x.iter().zip(&w).map(|(&x, &w)| 2.0 * w * self.fourier(x).powi(2)).sum();
            l.sqrt() * m2.sqrt()
        });
        if q.is_infinite() {
            vals.fold(0.0, f64::max)
        } else {
            vals.map(|v| v.powf(q)).sum::<f64>().powf(1.0 / q)
        }
    }

    /// `int psi_hat(xi) phi_hat(xi) dxi` shell by shell.
    pub fn pairing(&self, psi: &LowPass) -> f64 {
        self.shells
            .par_iter()
            .map(|&l| {
                let mut s = 0.0;
                for seg in psi.breaks(l, 2.0 * l).windows(2) {
                    let (x, w) = gauss_legendre(8, seg[0], seg[1]);
                    s += x.iter().zip(&w).map(|(&x, &w)| 2.0 * w * psi.fourier(x) * self.fourier(x)).sum::<f64>();
                }
                s
            })
            .sum()
    }
}

/// `psi_hat = 1` on `|xi| <= 1`, `0` on `|xi| >= 2`, quintic smoothstep between.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct LowPass;

impl LowPass {
    pub fn fourier(&self, xi: f64) -> f64 {
        let a = xi.abs();
        if a <= 1.0 {
            1.0
        } else if a >= 2.0 {
            0.0
        } else {
            let t = 2.0 - a;
            t * t * t * (10.0 - 15.0 * t + 6.0 * t * t)
        }
    }

    fn breaks(&self, a: f64, b: f64) -> Vec<f64> {
        let mut v = vec![a];
        v.extend([1.0, 2.0].into_iter().filter(|&c| c > a && c < b));
        v.push(b);
        v
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CombRow {
    pub mu: f64,
    pub norm: f64,
    pub pairing: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DivergenceReport {
    pub p: f64,
    pub rows: Vec<CombRow>,
    /// Fitted exponent of the pairing against `|ln mu|`.
    pub pairing_exponent: f64,
    /// `1 - 1/p`.
    pub predicted_exponent: f64,
    /// Pairing at the smallest `mu` over pairing at the largest.
    pub growth: f64,
    pub norms_bounded: bool,
    pub pairing_monotone: bool,
}

/// Norm bounded in `[1/4, 4]` for every `mu` while the pairing with
/// [`LowPass`] grows like `|ln mu|^{1 - 1/p}`.
pub fn divergent_sequence_check(mu_list: &[f64], p: f64) -> Result<DivergenceReport> {
    if mu_list.len() < 2 {
        return Err(KpError::Precondition("need at least two values of mu".into()));
    }
    let psi = LowPass;
    let mut rows = mu_list
        .iter()
        .map(|&mu| {
            let c = BesovComb::new(mu, p)?;
            Ok(CombRow { mu, norm: c.besov_norm(p), pairing: c.pairing(&psi) })
        })
        .collect::<Result<Vec<_>>>()?;
    rows.sort_by(|a, b| b.mu.partial_cmp(&a.mu).unwrap());
    let xs: Vec<f64> = rows.iter().map(|r| r.mu.ln().abs().ln()).collect();
    let ys: Vec<f64> = rows.iter().map(|r| r.pairing.ln()).collect();
    let fit = fit_line(&xs, &ys);
    Ok(DivergenceReport {
        p,
        pairing_exponent: fit.slope,
        predicted_exponent: 1.0 - 1.0 / p,
        growth: rows.last().unwrap().pairing / rows[0].pairing,
        norms_bounded: rows.iter().all(|r| (0.25..=4.0).contains(&r.norm)),
        pairing_monotone: rows.windows(2).all(|w| w[1].pairing >= w[0].pairing),
        rows,
    })
}

/// The comb scales `2^{-j}` used for the divergence witness.
pub fn comb_scales() -> Vec<f64> {
    [3, 6, 12, 24, 48, 96].iter().map(|&j| 2f64.powi(-j)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn window_matches_erf_difference() {
        for (a, b) in [(-1.0, 0.5), (0.2, 0.9), (-3.0, -2.0), (4.0, 6.0)] {
            let want = std::f64::consts::PI.sqrt() / 2.0 * (libm::erf(b) - libm::erf(a));
            assert!((gauss_window(1.0, a, b) - want).abs() < 1e-15);
        }
        assert!(gauss_window(1.0, 10.0, 11.0) > 0.0);
    }

    #[test]
    fn lattice_and_poisson_agree_when_many_sectors() {
        let d = GaussianDatum::new([1.0, 0.8, 1.3], false).unwrap();
        for p in [1.0, 1.5, 3.0] {
            let a = sector_sum_with(&d, 0.125, p, SumMode::Lattice).unwrap();
            let b = sector_sum_with(&d, 0.125, p, SumMode::Poisson).unwrap();
            assert!((a - b).abs() < 1e-9 * a, "p = {p}: {a} {b}");
        }
    }

    #[test]
    fn comb_shells() {
        let c = BesovComb::new(0.125, 2.0).unwrap();
        assert_eq!(c.shells, vec![1.0 / 64.0, 1.0 / 32.0, 1.0 / 16.0, 0.125]);
        assert!(BesovComb::new(2.0, 2.0).is_err());
        assert!(BesovComb::new(0.3, 2.0).is_err());
    }

    #[test]
    fn lowpass_profile() {
        let f = LowPass;
        assert_eq!(f.fourier(0.5), 1.0);
        assert_eq!(f.fourier(-2.5), 0.0);
        assert!((f.fourier(1.5) - 0.5).abs() < 1e-15);
    }
}

//! The two-bump counterexample: box data at frequencies `mu` and `lam`, the
//! cross term of the second Picard iterate and its sector-norm growth.

use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::decomposition::{lqlp_from_masses, sector_masses_from_samples};
use crate::error::{KpError, Result};
use crate::estimates::resonance::resonance_r_unchecked;
use crate::fit::{fit_line, LineFit};
use crate::quad::gauss_legendre;
use crate::rng::member_rng;
use crate::spectral::{dyadic_exponent, omega, shell_exponent};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IllposedParams {
    pub mu: f64,
    pub lam: f64,
    pub p: f64,
    /// Enforce `mu lam^2 in [1/2, 2]`.
    pub coupling: bool,
}

impl IllposedParams {
    /// `mu = lam^{-2}` with the coupling enforced.
    pub fn coupled(lam: f64, p: f64) -> Result<Self> {
        let ip = IllposedParams { mu: 1.0 / (lam * lam), lam, p, coupling: true };
        ip.validate()?;
        Ok(ip)
    }

    pub fn validate(&self) -> Result<()> {
        dyadic_exponent(self.mu)?;
        dyadic_exponent(self.lam)?;
        if !(self.mu <= 0.5 && self.lam >= 2.0) {
            return Err(KpError::Config(format!(
                "need mu <= 1/2 and lam >= 2 to separate the bumps, got mu = {}, lam = {}",
                self.mu, self.lam
            )));
        }
        if !(self.p > 1.0 && self.p.is_finite()) {
            return Err(KpError::Config(format!("p = {} must lie in (1, inf)", self.p)));
        }
        let c = self.mu * self.lam * self.lam;
        if self.coupling && !(0.5..=2.0).contains(&c) {
            return Err(KpError::Config(format!("coupling mu lam^2 = {c} outside [1/2, 2]")));
        }
        Ok(())
    }
}

/// `amplitude * chi_xi * chi_eta * chi_eta` with a square transverse box.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrequencyBox {
    pub xi: [f64; 2],
    pub eta: [f64; 2],
    pub amplitude: f64,
}

impl FrequencyBox {
    pub fn volume(&self) -> f64 {
        (self.xi[1] - self.xi[0]) * (self.eta[1] - self.eta[0]).powi(2)
    }

    pub fn l2_norm(&self) -> f64 {
        self.amplitude * self.volume().sqrt()
    }

    pub fn contains(&self, xi: f64, eta: [f64; 2]) -> bool {
        let inside = |x: f64, r: [f64; 2]| x >= r[0] && x <= r[1];
        inside(xi, self.xi) && inside(eta[0], self.eta) && inside(eta[1], self.eta)
    }

    /// Support of the convolution of two boxes.
    pub fn minkowski(&self, other: &FrequencyBox) -> FrequencyBox {
        FrequencyBox {
            xi: [self.xi[0] + other.xi[0], self.xi[1] + other.xi[1]],
            eta: [self.eta[0] + other.eta[0], self.eta[1] + other.eta[1]],
            amplitude: 1.0,
        }
    }

    /// Disjoint up to a null set.
    pub fn disjoint(&self, other: &FrequencyBox) -> bool {
        let sep = |a: [f64; 2], b: [f64; 2]| a[1] <= b[0] || b[1] <= a[0];
        sep(self.xi, other.xi) || sep(self.eta, other.eta)
    }
}

/// The two boxes `phi_1` (near `mu`) and `phi_2` (near `lam`).
pub fn build_phi(ip: &IllposedParams) -> Result<(FrequencyBox, FrequencyBox)> {
    ip.validate()?;
    let (mu, lam, p) = (ip.mu, ip.lam, ip.p);
    let eta = [lam * mu / 2.0, 2.0 * lam * mu];
    let b1 = FrequencyBox { xi: [mu / 2.0, mu], eta, amplitude: mu.powi(-3) * (lam / mu).powf(-2.0 / p) };
    let b2 = FrequencyBox { xi: [lam + mu / 2.0, lam + mu], eta, amplitude: (mu * lam).powf(-1.5) };
    for b in [&b1, &b2] {
        if shell_exponent(b.xi[0]) != shell_exponent(b.xi[1] * (1.0 - 1e-15)) {
            return Err(KpError::Config(format!("box xi range {:?} straddles a dyadic shell", b.xi)));
        }
    }
    Ok((b1, b2))
}

/// Sector counts up to which [`box_sector_norm`] enumerates exactly.
pub const EXACT_SECTOR_LIMIT: f64 = 4e5;

/// `|[lo, hi] cap [a, b]|`.
fn overlap(lo: f64, hi: f64, a: f64, b: f64) -> f64 {
    (hi.min(b) - lo.max(a)).max(0.0)
}

/// Exact squared sector masses of a box with positive ranges inside one
/// shell, by Simpson (exact for the piecewise quadratic integrand) between the
/// breakpoints of the overlap lengths.
pub fn box_sector_masses_exact(b: &FrequencyBox) -> Result<Vec<f64>> {
    let lp = box_shell(b)?;
    let [x0, x1] = b.xi;
    let [e0, e1] = b.eta;
    let m_lo = ((e0 / x1) / lp + 0.5).floor() as i64;
    let m_hi = ((e1 / x0) / lp + 0.5).floor() as i64;
    let cuts = |m: i64| -> Vec<f64> {
        let mut v = vec![];
        for s in [m as f64 - 0.5, m as f64 + 0.5] {
            for e in [e0, e1] {
                if s > 0.0 {
                    let x = e / (s * lp);
                    if x > x0 && x < x1 {
                        v.push(x);
                    }
                }
            }
        }
        v
    };
    let ov = |x: f64, m: i64| overlap(e0, e1, x * (m as f64 - 0.5) * lp, x * (m as f64 + 0.5) * lp);
    let a2 = b.amplitude * b.amplitude;
    let mut out = vec![];
    for m1 in m_lo..=m_hi {
        let c1 = cuts(m1);
        for m2 in m_lo..=m_hi {
            let mut pts = vec![x0, x1];
            pts.extend(&c1);
            pts.extend(cuts(m2));
            pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let mut mass = 0.0;
            for w in pts.windows(2) {
                let (a, c) = (w[0], w[1]);
                if c <= a {
                    continue;
                }
                let m = 0.5 * (a + c);
                let f = |x: f64| ov(x, m1) * ov(x, m2);
                mass += (c - a) / 6.0 * (f(a) + 4.0 * f(m) + f(c));
            }
            if mass > 0.0 {
                out.push(a2 * mass);
            }
        }
    }
    Ok(out)
}

fn box_shell(b: &FrequencyBox) -> Result<f64> {
    if !(b.xi[0] > 0.0 && b.eta[0] > 0.0 && b.xi[1] > b.xi[0] && b.eta[1] > b.eta[0]) {
        return Err(KpError::Config(format!("box {:?} must have positive increasing ranges", b)));
    }
    let e = shell_exponent(b.xi[0]);
    if shell_exponent(b.xi[1] * (1.0 - 1e-15)) != e {
        return Err(KpError::Config(format!("box xi range {:?} straddles a dyadic shell", b.xi)));
    }
    Ok(2f64.powi(e))
}

/// Estimated number of sectors meeting the box.
pub fn box_sector_count(b: &FrequencyBox) -> Result<f64> {
    let lp = box_shell(b)?;
    Ok(((b.eta[1] / b.xi[0] - b.eta[0] / b.xi[1]) / lp + 2.0).powi(2))
}

/// `(sum_k ||f_Gamma||^p)^{1/p}` of a box inside one shell, in the limit of
/// sectors small against the box slopes: with `M(kappa) = int xi^2 dxi` over
/// the `xi` where `xi kappa` lies in the transverse box, the sum is
/// `lam'^{-2} int (a^2 lam'^2 M)^{p/2} dkappa`.
pub fn box_lp_continuum(b: &FrequencyBox, p: f64) -> Result<f64> {
    let lp = box_shell(b)?;
    let [x0, x1] = b.xi;
    let [e0, e1] = b.eta;
    let big_m = |k: [f64; 2]| {
        let lo = x0.max(e0 / k[0]).max(e0 / k[1]);
        let hi = x1.min(e1 / k[0]).min(e1 / k[1]);
        if hi > lo {
            (hi.powi(3) - lo.powi(3)) / 3.0
        } else {
            0.0
        }
    };
    let a2l2 = (b.amplitude * lp).powi(2);
    let mut brk = vec![e0 / x1, e0 / x0, e1 / x1, e1 / x0];
    brk.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let (nodes, weights) = composite(&brk, 64, 6);
    if p.is_infinite() {
        let mut best: f64 = 0.0;
        for &k1 in &nodes {
            for &k2 in &nodes {
                best = best.max(big_m([k1, k2]));
            }
        }
        return Ok((a2l2 * best).sqrt());
    }
    let s: f64 = nodes
        .par_iter()
        .zip(&weights)
        .map(|(&k1, &w1)| {
            nodes.iter().zip(&weights).map(|(&k2, &w2)| w1 * w2 * (a2l2 * big_m([k1, k2])).powf(p / 2.0)).sum::<f64>()
        })
        .sum();
    Ok((s / (lp * lp)).powf(1.0 / p))
}

/// Composite Gauss-Legendre over consecutive breakpoints, `panels` per piece.
fn composite(brk: &[f64], panels: usize, order: usize) -> (Vec<f64>, Vec<f64>) {
    let (mut x, mut w) = (vec![], vec![]);
    for seg in brk.windows(2) {
        if seg[1] <= seg[0] {
            continue;
        }
        let h = (seg[1] - seg[0]) / panels as f64;
        for i in 0..panels {
            let (n, wt) = gauss_legendre(order, seg[0] + i as f64 * h, seg[0] + (i + 1) as f64 * h);
            x.extend(n);
            w.extend(wt);
        }
    }
    (x, w)
}

/// `lam'^{1/2} (sum_k ||f_Gamma||^p)^{1/p}` for a box inside the shell `lam'`:
/// exact enumeration up to [`EXACT_SECTOR_LIMIT`] sectors, the continuum
/// limit beyond.
pub fn box_sector_norm(b: &FrequencyBox, p: f64) -> Result<f64> {
    let lp = box_shell(b)?;
    let inner = if box_sector_count(b)? <= EXACT_SECTOR_LIMIT {
        let m = box_sector_masses_exact(b)?;
        if p.is_infinite() {
            m.iter().fold(0.0f64, |a, &v| a.max(v)).sqrt()
        } else {
            m.iter().map(|v| v.powf(p / 2.0)).sum::<f64>().powf(1.0 / p)
        }
    } else {
        box_lp_continuum(b, p)?
    };
    Ok(lp.sqrt() * inner)
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct PhiNorms {
    pub phi1: f64,
    pub phi2: f64,
    /// `l^inf` over the two (distinct) shells.
    pub phi: f64,
}

pub fn phi_norms(ip: &IllposedParams) -> Result<PhiNorms> {
    let (b1, b2) = build_phi(ip)?;
    let (n1, n2) = (box_sector_norm(&b1, ip.p)?, box_sector_norm(&b2, ip.p)?);
    Ok(PhiNorms { phi1: n1, phi2: n2, phi: n1.max(n2) })
}

/// Supports of `f_1 = (S phi_1)^2`, `f_2 = (S phi_2)^2`, `f_3 = 2 S phi_1 S phi_2`.
pub fn product_supports(b1: &FrequencyBox, b2: &FrequencyBox) -> [FrequencyBox; 3] {
    [b1.minkowski(b1), b2.minkowski(b2), b1.minkowski(b2)]
}

/// `(e^{iR} - 1) / R` without cancellation.
#[inline]
pub fn phase_kernel(r: f64) -> Complex64 {
    if r.abs() < 1e-8 {
        return Complex64::new(-r / 2.0, 1.0);
    }
    let h = (0.5 * r).sin();
    Complex64::new(-2.0 * h * h, r.sin()) / r
}

/// `{zeta_1 in b1 : zeta - zeta_1 in b2}` as `(xi range, eta ranges)`, or `None`.
pub fn interaction_set(b1: &FrequencyBox, b2: &FrequencyBox, xi: f64, eta: [f64; 2]) -> Option<[[f64; 2]; 3]> {
    let r = |lo1: f64, hi1: f64, lo2: f64, hi2: f64, x: f64| [lo1.max(x - hi2), hi1.min(x - lo2)];
    let out = [
        r(b1.xi[0], b1.xi[1], b2.xi[0], b2.xi[1], xi),
        r(b1.eta[0], b1.eta[1], b2.eta[0], b2.eta[1], eta[0]),
        r(b1.eta[0], b1.eta[1], b2.eta[0], b2.eta[1], eta[1]),
    ];
    if out.iter().all(|s| s[1] > s[0]) {
        Some(out)
    } else {
        None
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct F3Quadrature {
    pub out: [usize; 3],
    /// Nodes per axis over the interaction set for the closed form.
    pub closed: usize,
    /// Nodes per axis over the interaction set for the time-domain route.
    pub direct: usize,
    pub time: usize,
}

impl Default for F3Quadrature {
    fn default() -> Self {
        F3Quadrature { out: [8, 8, 8], closed: 24, direct: 20, time: 24 }
    }
}

fn box_nodes(r: [[f64; 2]; 3], n: [usize; 3]) -> Vec<([f64; 3], f64)> {
    let (a, wa) = gauss_legendre(n[0], r[0][0], r[0][1]);
    let (b, wb) = gauss_legendre(n[1], r[1][0], r[1][1]);
    let (c, wc) = gauss_legendre(n[2], r[2][0], r[2][1]);
    let mut out = Vec::with_capacity(n[0] * n[1] * n[2]);
    for i in 0..n[0] {
        for j in 0..n[1] {
            for k in 0..n[2] {
                out.push(([a[i], b[j], c[k]], wa[i] * wb[j] * wc[k]));
            }
        }
    }
    out
}

/// `4 (2 pi)^{-3/2} xi e^{i omega} a_1 a_2 int_A (e^{iR} - 1) / R`: the
/// cross-term magnitude and phase up to the overall sign.
fn f3_closed(b1: &FrequencyBox, b2: &FrequencyBox, xi: f64, eta: [f64; 2], n: usize) -> Complex64 {
    let Some(a) = interaction_set(b1, b2, xi, eta) else {
        return Complex64::new(0.0, 0.0);
    };
    let mut s = Complex64::new(0.0, 0.0);
    for (z, w) in box_nodes(a, [n; 3]) {
        s += w * phase_kernel(resonance_r_unchecked(xi, z[0], eta, [z[1], z[2]]));
    }
    let pre = 4.0 * (2.0 * PI).powf(-1.5) * xi * b1.amplitude * b2.amplitude;
    s * Complex64::from_polar(pre, omega(xi, eta))
}

/// `-2 int_0^1 S(1 - s) d_x (2 S phi_1 S phi_2)(s) ds` at one frequency, with
/// the product formed in Fourier space at each Gauss time node.
fn f3_direct(b1: &FrequencyBox, b2: &FrequencyBox, xi: f64, eta: [f64; 2], n: usize, nt: usize) -> Complex64 {
    let Some(a) = interaction_set(b1, b2, xi, eta) else {
        return Complex64::new(0.0, 0.0);
    };
    let nodes: Vec<([f64; 3], f64, f64)> = box_nodes(a, [n; 3])
        .into_iter()
        .map(|(z, w)| {
            let e1 = [z[1], z[2]];
            let e2 = [eta[0] - e1[0], eta[1] - e1[1]];
            (z, w, omega(z[0], e1) + omega(xi - z[0], e2))
        })
        .collect();
    let (ts, wt) = gauss_legendre(nt, 0.0, 1.0);
    let om = omega(xi, eta);
    let conv = 2.0 * (2.0 * PI).powf(-1.5) * b1.amplitude * b2.amplitude;
    let mut acc = Complex64::new(0.0, 0.0);
    for (&s, &w) in ts.iter().zip(&wt) {
        let f3: Complex64 = nodes.iter().map(|(_, wn, ph)| Complex64::from_polar(*wn, s * ph)).sum::<Complex64>() * conv;
        acc += w * Complex64::from_polar(1.0, (1.0 - s) * om) * f3;
    }
    acc * Complex64::new(0.0, -2.0 * xi)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct F3Report {
    pub mu: f64,
    pub lam: f64,
    /// Sign `s` with direct = `s` * closed magnitude-phase expression.
    pub sign: f64,
    /// `||direct - s closed|| / ||direct||` in `L^2` over the output box.
    pub rel_gap: f64,
    pub rel_gap_other_sign: f64,
    pub l2_norm: f64,
    /// `||F_3(1)||_{l^inf l^p L^2}` per requested `p`.
    pub sector_norms: Vec<(f64, f64)>,
    /// `min |F_3| / (lam^3 mu^3 a_1 a_2)` on the inner box. The interaction
    /// set degenerates at the edge `xi = lam + mu`, so this tends to zero
    /// under refinement.
    pub lower_bound_min: f64,
    /// The same ratio in root mean square over the inner box.
    pub lower_bound_rms: f64,
    pub refined: bool,
}

/// Output-box samples `(zeta, weight, closed, direct)`.
pub type F3Samples = Vec<([f64; 3], f64, Complex64, Complex64)>;

fn f3_samples(b1: &FrequencyBox, b2: &FrequencyBox, q: &F3Quadrature) -> F3Samples {
    let outb = b1.minkowski(b2);
    let r = [outb.xi, outb.eta, outb.eta];
    box_nodes(r, q.out)
        .into_par_iter()
        .map(|(z, w)| {
            let eta = [z[1], z[2]];
            (z, w, f3_closed(b1, b2, z[0], eta, q.closed), f3_direct(b1, b2, z[0], eta, q.direct, q.time))
        })
        .collect()
}

fn gaps(s: &F3Samples) -> (f64, f64, f64) {
    let mut d2 = 0.0;
    let (mut gp, mut gm) = (0.0, 0.0);
    for (_, w, c, d) in s {
        d2 += w * d.norm_sqr();
        gp += w * (d - c).norm_sqr();
        gm += w * (d + c).norm_sqr();
    }
    (d2.sqrt(), (gp / d2).sqrt(), (gm / d2).sqrt())
}

/// Tolerance for the two routes before a refinement pass.
pub const F3_AGREE: f64 = 0.05;

/// Second-iterate cross term at `t = 1` on the output box, with sector norms
/// for every exponent in `ps` (the datum is built for `ip.p`; other exponents
/// rescale the amplitude of `phi_1`). The closed form and the time-domain route must
/// agree within [`F3_AGREE`] after at most one refinement.
pub fn second_iterate_f3(ip: &IllposedParams, ps: &[f64], q: &F3Quadrature) -> Result<(F3Report, F3Samples)> {
    let (b1, b2) = build_phi(ip)?;
    if ip.coupling {
        ip.validate()?;
    }
    let mut quad = *q;
    let mut samples = f3_samples(&b1, &b2, &quad);
    let mut refined = false;
    let (mut norm, mut gp, mut gm) = gaps(&samples);
    if gp.min(gm) > F3_AGREE {
        quad.closed = quad.closed * 3 / 2;
        quad.direct = quad.direct * 3 / 2;
        quad.time = quad.time * 3 / 2;
        samples = f3_samples(&b1, &b2, &quad);
        refined = true;
        (norm, gp, gm) = gaps(&samples);
        if gp.min(gm) > F3_AGREE {
            return Err(KpError::Accuracy(format!(
                "closed-form and direct F_3 disagree by {:.3} after refinement",
                gp.min(gm)
            )));
        }
    }
    let sign = if gp <= gm { 1.0 } else { -1.0 };
    let sector_norms = ps
        .iter()
        .map(|&p| {
            let scale = (ip.lam / ip.mu).powf(2.0 / ip.p - 2.0 / p);
            let m = sector_masses_from_samples(
                samples.iter().map(|(z, w, _, d)| (z[0], [z[1], z[2]], w * d.norm_sqr() * scale * scale)),
            );
            (p, lqlp_from_masses(&m, f64::INFINITY, p))
        })
        .collect();
    let (mu, lam) = (ip.mu, ip.lam);
    let inner = [[lam + mu, lam + 1.5 * mu], [lam * mu, 2.0 * lam * mu], [lam * mu, 2.0 * lam * mu]];
    let scale = lam.powi(3) * mu.powi(3) * b1.amplitude * b2.amplitude;
    let vol = 0.5 * mu * (lam * mu).powi(2);
    let ratios: Vec<(f64, f64)> = box_nodes(inner, [6, 6, 6])
        .into_par_iter()
        .map(|(z, w)| (w, f3_closed(&b1, &b2, z[0], [z[1], z[2]], quad.closed).norm() / scale))
        .collect();
    let lower_min = ratios.iter().fold(f64::INFINITY, |a, r| a.min(r.1));
    let lower_rms = (ratios.iter().map(|(w, r)| w * r * r).sum::<f64>() / vol).sqrt();
    Ok((
        F3Report {
            mu,
            lam,
            sign,
            rel_gap: gp.min(gm),
            rel_gap_other_sign: gp.max(gm),
            l2_norm: norm,
            sector_norms,
            lower_bound_min: lower_min,
            lower_bound_rms: lower_rms,
            refined,
        },
        samples,
    ))
}

/// Cross term for arbitrary boxes (closed form only), for support checks.
pub fn f3_closed_on(b1: &FrequencyBox, b2: &FrequencyBox, xi: f64, eta: [f64; 2], n: usize) -> Complex64 {
    f3_closed(b1, b2, xi, eta, n)
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct ResonanceRange {
    pub min_ratio: f64,
    pub max_ratio: f64,
    /// `min Re (e^{iR} - 1) / R` over the samples.
    pub min_re_kernel: f64,
    /// `min Re (e^{iR} - 1) / (iR)`.
    pub min_re_kernel_i: f64,
    pub samples: usize,
}

/// Extremes of `|R| / (lam^2 mu)` over uniform samples of
/// `{(zeta, zeta_1) : zeta_1 in A(zeta)}`.
pub fn resonance_range(ip: &IllposedParams, samples: usize, seed: u64) -> Result<ResonanceRange> {
    let (b1, b2) = build_phi(ip)?;
    let outb = b1.minkowski(&b2);
    let mut rng = member_rng(seed, 0);
    let scale = ip.lam * ip.lam * ip.mu;
    let mut out = ResonanceRange {
        min_ratio: f64::INFINITY,
        max_ratio: 0.0,
        min_re_kernel: f64::INFINITY,
        min_re_kernel_i: f64::INFINITY,
        samples: 0,
    };
    while out.samples < samples {
        let xi = rng.gen_range(outb.xi[0]..outb.xi[1]);
        let eta = [rng.gen_range(outb.eta[0]..outb.eta[1]), rng.gen_range(outb.eta[0]..outb.eta[1])];
        let Some(a) = interaction_set(&b1, &b2, xi, eta) else { continue };
        let z: Vec<f64> = a.iter().map(|r| rng.gen_range(r[0]..r[1])).collect();
        let r = resonance_r_unchecked(xi, z[0], eta, [z[1], z[2]]);
        let k = phase_kernel(r);
        out.min_ratio = out.min_ratio.min(r.abs() / scale);
        out.max_ratio = out.max_ratio.max(r.abs() / scale);
        out.min_re_kernel = out.min_re_kernel.min(k.re);
        out.min_re_kernel_i = out.min_re_kernel_i.min((k / Complex64::new(0.0, 1.0)).re);
        out.samples += 1;
    }
    Ok(out)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GrowthRow {
    pub lam: f64,
    pub mu: f64,
    pub p: f64,
    pub norm: f64,
    pub rel_gap: f64,
    pub sign: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct GrowthReport {
    pub rows: Vec<GrowthRow>,
    /// `(p, fitted slope of log2 norm against log2 lam, predicted 3 - 6/p)`.
    pub fits: Vec<(f64, LineFit, f64)>,
    pub reports: Vec<F3Report>,
}

/// `||F_3(1)||` against `lam` with `mu = lam^{-2}` for every exponent in `ps`.
pub fn growth_sweep(lams: &[f64], ps: &[f64], q: &F3Quadrature) -> Result<GrowthReport> {
    if lams.len() < 3 {
        return Err(KpError::Precondition(format!("growth fit needs at least 3 lam values, got {}", lams.len())));
    }
    if ps.is_empty() {
        return Err(KpError::Config("no exponents requested".into()));
    }
    let mut rows = vec![];
    let mut reports = vec![];
    for &lam in lams {
        let ip = IllposedParams::coupled(lam, ps[0])?;
        let (rep, _) = second_iterate_f3(&ip, ps, q)?;
        for &(p, norm) in &rep.sector_norms {
            rows.push(GrowthRow { lam, mu: ip.mu, p, norm, rel_gap: rep.rel_gap, sign: rep.sign });
        }
        reports.push(rep);
    }
    let fits = ps
        .iter()
        .map(|&p| {
            let sel: Vec<&GrowthRow> = rows.iter().filter(|r| r.p == p).collect();
            let xs: Vec<f64> = sel.iter().map(|r| r.lam.log2()).collect();
            let ys: Vec<f64> = sel.iter().map(|r| r.norm.log2()).collect();
            (p, fit_line(&xs, &ys), 3.0 - 6.0 / p)
        })
        .collect();
    Ok(GrowthReport { rows, fits, reports })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn amplitudes_and_volumes() {
        let ip = IllposedParams { mu: 1.0 / 64.0, lam: 8.0, p: 2.0, coupling: true };
        let (b1, b2) = build_phi(&ip).unwrap();
        let (mu, lam) = (ip.mu, ip.lam);
        assert!((b1.amplitude - mu.powi(-3) * mu / lam).abs() < 1e-12 * b1.amplitude);
        assert!((b1.volume() - (mu / 2.0) * (1.5 * lam * mu).powi(2)).abs() < 1e-15);
        assert!((lam.sqrt() * b2.l2_norm() - 1.5 / 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn coupling_is_enforced() {
        assert!(IllposedParams { mu: 1.0 / 16.0, lam: 16.0, p: 3.0, coupling: true }.validate().is_err());
        assert!(IllposedParams { mu: 1.0 / 16.0, lam: 16.0, p: 3.0, coupling: false }.validate().is_ok());
        assert!(IllposedParams { mu: 1.0 / 64.0, lam: 8.0, p: 1.0, coupling: true }.validate().is_err());
    }

    #[test]
    fn kernel_is_stable() {
        for r in [1e-12, 1e-6, 0.3, 5.0, -2.0] {
            let want = (Complex64::new(0.0, r).exp() - 1.0) / r;
            assert!((phase_kernel(r) - want).norm() < 1e-9);
        }
    }

    #[test]
    fn single_bump_has_no_cross_term() {
        let ip = IllposedParams { mu: 1.0 / 64.0, lam: 8.0, p: 3.0, coupling: true };
        let (b1, mut b2) = build_phi(&ip).unwrap();
        b2.amplitude = 0.0;
        let out = b1.minkowski(&b2);
        let v = f3_closed_on(&b1, &b2, 0.5 * (out.xi[0] + out.xi[1]), [out.eta[0] * 1.5; 2], 8);
        assert_eq!(v, Complex64::new(0.0, 0.0));
    }
}

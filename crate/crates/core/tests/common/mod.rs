//! Independent test-side oracles. Nothing here calls the routine it checks.
#![allow(dead_code)]

use kplab::spectral::{GridSpec, SpectralField};
use num_complex::Complex64;

/// Non-cyclic convolution `(1/sqrt N) sum_j a_j b_{k-j}` by a full
/// double loop over wavenumber triples.
pub fn naive_product(a: &SpectralField, b: &SpectralField) -> Vec<Complex64> {
    let g = &a.grid;
    let n = g.dims();
    let half = |m: usize| (m / 2) as i64;
    let mut out = vec![Complex64::new(0.0, 0.0); g.len()];
    let norm = 1.0 / (g.len() as f64).sqrt();
    for i in 0..g.len() {
        let ki = g.wavenumbers(i);
        for j in 0..g.len() {
            let kj = g.wavenumbers(j);
            let k = [ki[0] + kj[0], ki[1] + kj[1], ki[2] + kj[2]];
            if (0..3).any(|ax| k[ax] < -half(n[ax]) || k[ax] >= half(n[ax])) {
                continue;
            }
            let idx = g.mode_index(k).unwrap();
            out[idx] += a.coeff[i] * b.coeff[j] * norm;
        }
    }
    out
}

/// `-i xi` times the masked naive square, the oracle for the nonlinearity.
pub fn naive_nonlinearity(u: &SpectralField) -> Vec<Complex64> {
    let sq = naive_product(u, u);
    let g = &u.grid;
    (0..g.len())
        .map(|i| {
            let (xi, _) = g.frequency(i);
            if xi == 0.0 || !retained_23(g, i) {
                Complex64::new(0.0, 0.0)
            } else {
                sq[i] * Complex64::new(0.0, -xi)
            }
        })
        .collect()
}

/// Independent statement of the two-thirds rule.
pub fn retained_23(g: &GridSpec, idx: usize) -> bool {
    let k = g.wavenumbers(idx);
    let n = g.dims();
    (0..3).all(|a| (3 * k[a].abs() as usize) < n[a])
}

/// `sup` over partitions `0 <= i_0 < ... < i_K <= n-1` of `sum d^2`, by
/// enumerating every subset of indices (exponential; `n <= 12`).
pub fn brute_force_v2(d: &[Vec<f64>]) -> f64 {
    let n = d.len();
    let mut best: f64 = 0.0;
    for mask in 1u32..(1 << n) {
        let idx: Vec<usize> = (0..n).filter(|i| mask & (1 << i) != 0).collect();
        let s: f64 = idx.windows(2).map(|w| d[w[0]][w[1]].powi(2)).sum();
        best = best.max(s);
    }
    best.sqrt()
}

pub fn max_gap(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

pub fn max_abs(a: &[Complex64]) -> f64 {
    a.iter().map(|x| x.norm()).fold(0.0, f64::max)
}

/// Real roots of a polynomial (ascending coefficients) on `[lo, hi]` by a
/// dense sign scan refined with bisection. Roots of even multiplicity are
/// missed; callers use generic data.
pub fn sign_scan_roots(p: &[f64], lo: f64, hi: f64, cells: usize) -> Vec<f64> {
    let ev = |x: f64| p.iter().rev().fold(0.0, |acc, c| acc * x + c);
    let mut out = vec![];
    let h = (hi - lo) / cells as f64;
    for i in 0..cells {
        let (mut a, mut b) = (lo + i as f64 * h, lo + (i + 1) as f64 * h);
        let (fa, fb) = (ev(a), ev(b));
        if fa == 0.0 {
            out.push(a);
            continue;
        }
        if fa * fb < 0.0 {
            for _ in 0..200 {
                let m = 0.5 * (a + b);
                if ev(a) * ev(m) <= 0.0 {
                    b = m;
                } else {
                    a = m;
                }
            }
            out.push(0.5 * (a + b));
        }
    }
    out
}

//! Roots of `g_rho(xi) = tau` along a fixed slope `rho = (eta - eta_2)/(xi - xi_2)`
//! and the derivative identity at each root.

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{KpError, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GRhoConfig {
    pub xi1: f64,
    pub xi2: f64,
    /// `eta_2 - eta_1`.
    pub deta: [f64; 2],
    pub rho: [f64; 2],
    pub tau: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GRhoRoot {
    pub xi: f64,
    pub residual: f64,
    /// `|g_rho'|` by complex-step differentiation of `g_rho`.
    pub dg_direct: f64,
    /// `|3 (xi - xi_1)^2 - 3 (xi - xi_2)^2 + |(eta - eta_2)/(xi - xi_2) - (eta - eta_1)/(xi - xi_1)|^2|`.
    pub dg_identity: f64,
    pub defect: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GRhoReport {
    /// Degree of the cleared polynomial `(xi - xi_1)(g_rho - tau)`.
    pub degree: usize,
    pub coefficients: Vec<f64>,
    pub roots: Vec<GRhoRoot>,
    /// Polynomial roots discarded at the pole `xi = xi_1`.
    pub spurious: usize,
}

impl GRhoConfig {
    fn g_complex(&self, z: Complex64) -> Complex64 {
        let a1 = z - self.xi1;
        let a2 = z - self.xi2;
        let v = [self.rho[0] * a2 + self.deta[0], self.rho[1] * a2 + self.deta[1]];
        let r2 = self.rho[0] * self.rho[0] + self.rho[1] * self.rho[1];
        a1 * a1 * a1 - (v[0] * v[0] + v[1] * v[1]) / a1 - a2 * a2 * a2 + a2 * r2
    }

    /// `(xi - xi_1)^3 - |rho (xi - xi_2) + eta_2 - eta_1|^2 / (xi - xi_1) - (xi - xi_2)^3 + (xi - xi_2) |rho|^2`.
    pub fn g(&self, xi: f64) -> f64 {
        self.g_complex(Complex64::new(xi, 0.0)).re
    }

    pub fn dg_complex_step(&self, xi: f64) -> f64 {
        const H: f64 = 1e-30;
        self.g_complex(Complex64::new(xi, H)).im / H
    }

    /// Right-hand side of the derivative identity and the size of its largest term.
    pub fn dg_identity(&self, xi: f64) -> (f64, f64) {
        let a1 = xi - self.xi1;
        let a2 = xi - self.xi2;
        // (eta - eta_2)/(xi - xi_2) = rho, (eta - eta_1)/(xi - xi_1) = w.
        let w = [0, 1].map(|i| (self.rho[i] * a2 + self.deta[i]) / a1);
        let d = [w[0] - self.rho[0], w[1] - self.rho[1]];
        let s = d[0] * d[0] + d[1] * d[1];
        let t1 = 3.0 * a1 * a1;
        let t2 = 3.0 * a2 * a2;
        (t1 - t2 + s, t1.max(t2).max(s))
    }

    /// Coefficients (ascending) of `(xi - xi_1)(g_rho(xi) - tau)`.
    pub fn cleared_polynomial(&self) -> Vec<f64> {
        let a1 = [-self.xi1, 1.0];
        let a2 = [-self.xi2, 1.0];
        let r2 = self.rho[0] * self.rho[0] + self.rho[1] * self.rho[1];
        let a1_2 = pmul(&a1, &a1);
        let a2_3 = pmul(&pmul(&a2, &a2), &a2);
        let mut p = pmul(&a1_2, &a1_2);
        p = padd(&p, &pscale(&pmul(&a2_3, &a1), -1.0));
        p = padd(&p, &pscale(&pmul(&a1, &a2), r2));
        p = padd(&p, &pscale(&a1, -self.tau));
        for i in 0..2 {
            let v = [self.deta[i] - self.rho[i] * self.xi2, self.rho[i]];
            p = padd(&p, &pscale(&pmul(&v, &v), -1.0));
        }
        while p.len() > 1 && *p.last().unwrap() == 0.0 {
            p.pop();
        }
        p
    }
}

fn pmul(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

fn padd(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len().max(b.len())];
    for (i, x) in a.iter().enumerate() {
        out[i] += x;
    }
    for (i, y) in b.iter().enumerate() {
        out[i] += y;
    }
    out
}

fn pscale(a: &[f64], s: f64) -> Vec<f64> {
    a.iter().map(|x| x * s).collect()
}

fn peval(p: &[f64], x: f64) -> f64 {
    p.iter().rev().fold(0.0, |acc, c| acc * x + c)
}

fn pderiv(p: &[f64]) -> Vec<f64> {
    if p.len() <= 1 {
        return vec![0.0];
    }
    p.iter().enumerate().skip(1).map(|(i, c)| i as f64 * c).collect()
}

fn bisect<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64) -> f64 {
    let flo = f(lo);
    for _ in 0..300 {
        let mid = 0.5 * (lo + hi);
        if mid == lo || mid == hi {
            break;
        }
        if f(mid).signum() == flo.signum() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Real roots of a polynomial of degree at most 4, isolated on monotone
/// pieces between the roots of the derivative.
pub fn real_roots(p: &[f64]) -> Vec<f64> {
    let n = p.len() - 1;
    if n == 0 {
        return vec![];
    }
    if n == 1 {
        return vec![-p[0] / p[1]];
    }
    let lead = p[n];
    let bound = 1.0 + p[..n].iter().map(|c| (c / lead).abs()).fold(0.0, f64::max);
    let mut cuts = vec![-bound];
    let mut crit = real_roots(&pderiv(p));
    crit.retain(|c| c.abs() < bound);
    crit.sort_by(|a, b| a.partial_cmp(b).unwrap());
    cuts.extend(crit);
    cuts.push(bound);
    let mut roots = Vec::new();
    for w in cuts.windows(2) {
        let (fa, fb) = (peval(p, w[0]), peval(p, w[1]));
        if fa == 0.0 {
            roots.push(w[0]);
        } else if fa.signum() != fb.signum() && fb != 0.0 {
            roots.push(bisect(|x| peval(p, x), w[0], w[1]));
        }
    }
    if peval(p, bound) == 0.0 {
        roots.push(bound);
    }
    roots.dedup_by(|a, b| (*a - *b).abs() <= 1e-14 * a.abs().max(1.0));
    roots
}

/// All real solutions of `g_rho(xi) = tau`, optionally restricted to an
/// interval, with both sides of the derivative identity at each.
pub fn g_rho_analysis(c: &GRhoConfig, interval: Option<[f64; 2]>) -> Result<GRhoReport> {
    let finite = [c.xi1, c.xi2, c.deta[0], c.deta[1], c.rho[0], c.rho[1], c.tau].iter().all(|v| v.is_finite());
    if !finite {
        return Err(KpError::Domain("g_rho arguments must be finite".into()));
    }
    if let Some([lo, hi]) = interval {
        if !(lo < hi) || (lo <= c.xi1 && c.xi1 <= hi) {
            return Err(KpError::Precondition(format!(
                "interval [{lo}, {hi}] must be nonempty and exclude the pole xi_1 = {}",
                c.xi1
            )));
        }
    }
    let poly = c.cleared_polynomial();
    let degree = poly.len() - 1;
    let scale = 1.0 + c.xi1.abs().max(c.xi2.abs());
    let mut roots = Vec::new();
    let mut spurious = 0;
    for x in real_roots(&poly) {
        if (x - c.xi1).abs() <= 1e-9 * scale {
            spurious += 1;
            continue;
        }
        if let Some([lo, hi]) = interval {
            if x < lo || x > hi {
                continue;
            }
        }
        let dg_direct = c.dg_complex_step(x).abs();
        let (rhs, size) = c.dg_identity(x);
        let dg_identity = rhs.abs();
        let residual = c.g(x) - c.tau;
        if !residual.is_finite() {
            return Err(KpError::Accuracy(format!("root finder produced a non-finite residual at xi = {x}")));
        }
        roots.push(GRhoRoot {
            xi: x,
            residual,
            dg_direct,
            dg_identity,
            defect: (dg_direct - dg_identity).abs() / size.max(f64::MIN_POSITIVE),
        });
    }
    Ok(GRhoReport { degree, coefficients: poly, roots, spurious })
}

pub fn random_grho_config<R: Rng>(rng: &mut R) -> GRhoConfig {
    GRhoConfig {
        xi1: rng.gen_range(-4.0..4.0),
        xi2: rng.gen_range(-4.0..4.0),
        deta: [rng.gen_range(-4.0..4.0), rng.gen_range(-4.0..4.0)],
        rho: [rng.gen_range(-4.0..4.0), rng.gen_range(-4.0..4.0)],
        tau: rng.gen_range(-50.0..50.0),
    }
}

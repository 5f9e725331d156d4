//! Space-time `L^2(R^4)` norms of products of two free waves, from the
//! Fourier-side formula
//!
//! `||u v||^2 = (2 pi)^{-2} int d zeta int d tau |G_zeta(tau)|^2`,
//! `G_zeta(tau) = int delta(tau - omega(zeta_1) - omega(zeta - zeta_1)) h d zeta_1`,
//!
//! where `h = w u0_hat(zeta_1) v0_hat(zeta - zeta_1)`. At fixed `zeta, xi_1` the
//! phase is `A - a |eta_1 - c|^2`, so the `eta_1` integral is a ring average.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{KpError, Result};
use crate::fit::{log2_slope, LineFit};
use crate::quad::gauss_legendre;
use crate::rng::member_rng;

/// `sum_j amp_j (1 - s^2)^2`, `s = (x - c_j) / h_j`, on `[lo, hi]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BumpProfile {
    pub lo: f64,
    pub hi: f64,
    pub centers: Vec<f64>,
    pub halves: Vec<f64>,
    pub amps: Vec<f64>,
}

impl BumpProfile {
    pub fn flat(lo: f64, hi: f64, amp: f64) -> Self {
        BumpProfile { lo, hi, centers: vec![0.5 * (lo + hi)], halves: vec![0.5 * (hi - lo)], amps: vec![amp] }
    }

    /// Random positive profile of `n` bumps supported in `[lo, hi]`.
    pub fn random<R: Rng>(rng: &mut R, lo: f64, hi: f64, n: usize) -> Self {
        let mut p = BumpProfile { lo, hi, centers: vec![], halves: vec![], amps: vec![] };
        let len = hi - lo;
        for _ in 0..n {
            let h = len * rng.gen_range(0.2..0.5);
            p.centers.push(rng.gen_range(lo + h..=hi - h));
            p.halves.push(h);
            p.amps.push(rng.gen_range(0.5..1.5));
        }
        p
    }

    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        let mut s = 0.0;
        for j in 0..self.centers.len() {
            let z = (x - self.centers[j]) / self.halves[j];
            if z.abs() < 1.0 {
                let q = 1.0 - z * z;
                s += self.amps[j] * q * q;
            }
        }
        s
    }

    /// Bump edges, sorted; the profile is polynomial between them.
    fn breakpoints(&self) -> Vec<f64> {
        let mut b = vec![self.lo, self.hi];
        for j in 0..self.centers.len() {
            b.push((self.centers[j] - self.halves[j]).max(self.lo));
            b.push((self.centers[j] + self.halves[j]).min(self.hi));
        }
        b.sort_by(|a, c| a.partial_cmp(c).unwrap());
        b.dedup();
        b
    }

    /// `int f(x)^2 x^k dx`, exact for the piecewise polynomial.
    pub fn square_moment(&self, k: i32) -> f64 {
        let b = self.breakpoints();
        let mut s = 0.0;
        for w in b.windows(2) {
            let (x, wt) = gauss_legendre(8, w[0], w[1]);
            s += x.iter().zip(&wt).map(|(x, w)| w * self.eval(*x).powi(2) * x.powi(k)).sum::<f64>();
        }
        s
    }
}

/// Separable Fourier datum. `Cartesian`: `f(xi) g_1(eta_1) g_2(eta_2)`.
/// `Slope { scale }`: `f(xi) g_1(eta_1 / (scale xi)) g_2(eta_2 / (scale xi))`,
/// i.e. the slope `eta / xi` ranges over `scale * Gamma` with `Gamma` the
/// product of the `g` supports.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FourierBox {
    pub xi: BumpProfile,
    pub eta: [BumpProfile; 2],
    pub slope_scale: Option<f64>,
}

impl FourierBox {
    #[inline]
    pub fn eval(&self, xi: f64, eta: [f64; 2]) -> f64 {
        if xi < self.xi.lo || xi > self.xi.hi {
            return 0.0;
        }
        let (a, b) = match self.slope_scale {
            None => (eta[0], eta[1]),
            Some(s) => (eta[0] / (s * xi), eta[1] / (s * xi)),
        };
        if a < self.eta[0].lo || a > self.eta[0].hi || b < self.eta[1].lo || b > self.eta[1].hi {
            return 0.0;
        }
        let f = self.xi.eval(xi);
        if f == 0.0 {
            return 0.0;
        }
        f * self.eta[0].eval(a) * self.eta[1].eval(b)
    }

    /// `eta` bounding box of the support at a fixed `xi`.
    pub fn eta_box(&self, xi: f64) -> [[f64; 2]; 2] {
        [0, 1].map(|i| match self.slope_scale {
            None => [self.eta[i].lo, self.eta[i].hi],
            Some(s) => {
                let (p, q) = (s * xi * self.eta[i].lo, s * xi * self.eta[i].hi);
                [p.min(q), p.max(q)]
            }
        })
    }

    /// `eta` bounding box over the whole `xi` support.
    pub fn eta_hull(&self) -> [[f64; 2]; 2] {
        let a = self.eta_box(self.xi.lo);
        let b = self.eta_box(self.xi.hi);
        [0, 1].map(|i| [a[i][0].min(b[i][0]), a[i][1].max(b[i][1])])
    }

    pub fn l2_norm(&self) -> f64 {
        let e = self.eta[0].square_moment(0) * self.eta[1].square_moment(0);
        let m = match self.slope_scale {
            None => self.xi.square_moment(0),
            Some(s) => s * s * self.xi.square_moment(2),
        };
        (m * e).sqrt()
    }

    /// Measure of the slope set `Gamma` (slope coordinates only).
    pub fn gamma_measure(&self) -> Option<f64> {
        self.slope_scale.map(|_| (self.eta[0].hi - self.eta[0].lo) * (self.eta[1].hi - self.eta[1].lo))
    }
}

/// Node counts of the product rule.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BilinearQuadrature {
    pub zeta: [usize; 3],
    pub xi1: usize,
    pub tau: usize,
    pub theta: usize,
}

impl Default for BilinearQuadrature {
    fn default() -> Self {
        BilinearQuadrature { zeta: [8, 8, 8], xi1: 12, tau: 48, theta: 24 }
    }
}

/// Weight in the product: `1` or `lam + |eta_1/xi_1 - eta_2/xi_2|`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum ProductWeight {
    Unit,
    Slope { lam: f64 },
}

fn intersect(a: [f64; 2], b: [f64; 2]) -> Option<[f64; 2]> {
    let lo = a[0].max(b[0]);
    let hi = a[1].min(b[1]);
    (lo < hi).then_some([lo, hi])
}

struct RingNode {
    xi1: f64,
    w: f64,
    a: f64,
    big_a: f64,
    c: [f64; 2],
    tau_lo: f64,
    tau_hi: f64,
    /// Angular range `[theta_0, theta_0 + span]` seen from `c` that meets the support box.
    theta0: f64,
    span: f64,
}

/// Smallest arc of directions from `c` covering the box; the full circle if
/// `c` lies inside.
fn subtended_arc(c: [f64; 2], b0: [f64; 2], b1: [f64; 2]) -> (f64, f64) {
    if c[0] >= b0[0] && c[0] <= b0[1] && c[1] >= b1[0] && c[1] <= b1[1] {
        return (0.0, 2.0 * PI);
    }
    let mid = (0.5 * (b1[0] + b1[1]) - c[1]).atan2(0.5 * (b0[0] + b0[1]) - c[0]);
    let mut lo: f64 = 0.0;
    let mut hi: f64 = 0.0;
    for x in b0 {
        for y in b1 {
            let mut d = (y - c[1]).atan2(x - c[0]) - mid;
            d = (d + PI).rem_euclid(2.0 * PI) - PI;
            lo = lo.min(d);
            hi = hi.max(d);
        }
    }
    (mid + lo, hi - lo)
}

/// `(2 pi)^{-2} int d tau |G_zeta(tau)|^2` at one output frequency.
fn zeta_density(u: &FourierBox, v: &FourierBox, wt: ProductWeight, xi: f64, eta: [f64; 2], q: &BilinearQuadrature, trig: &[(f64, f64, f64)]) -> f64 {
    let Some(r1) = intersect([u.xi.lo, u.xi.hi], [xi - v.xi.hi, xi - v.xi.lo]) else {
        return 0.0;
    };
    // Split at xi_1 = 0 where the ring coefficient changes sign.
    let mut panels = vec![r1];
    if r1[0] < 0.0 && r1[1] > 0.0 {
        panels = vec![[r1[0], 0.0], [0.0, r1[1]]];
    }
    let mut nodes = Vec::new();
    let e2 = eta[0] * eta[0] + eta[1] * eta[1];
    for p in panels {
        let (xs, ws) = gauss_legendre(q.xi1, p[0], p[1]);
        for (&x1, &w1) in xs.iter().zip(&ws) {
            let x2 = xi - x1;
            let ub = u.eta_box(x1);
            let vb = v.eta_box(x2);
            let bx = [0, 1].map(|i| intersect(ub[i], [eta[i] - vb[i][1], eta[i] - vb[i][0]]));
            let (Some(b0), Some(b1)) = (bx[0], bx[1]) else { continue };
            let a = 1.0 / x1 + 1.0 / x2;
            let c = [eta[0] * x1 / xi, eta[1] * x1 / xi];
            let big_a = x1 * x1 * x1 + x2 * x2 * x2 - e2 / xi;
            let dist = |lo: f64, hi: f64, z: f64| if z < lo { lo - z } else if z > hi { z - hi } else { 0.0 };
            let far = |lo: f64, hi: f64, z: f64| (z - lo).abs().max((hi - z).abs());
            let rmin2 = dist(b0[0], b0[1], c[0]).powi(2) + dist(b1[0], b1[1], c[1]).powi(2);
            let rmax2 = far(b0[0], b0[1], c[0]).powi(2) + far(b1[0], b1[1], c[1]).powi(2);
            let (t1, t2) = (big_a - a * rmin2, big_a - a * rmax2);
            let (theta0, span) = subtended_arc(c, b0, b1);
            nodes.push(RingNode { xi1: x1, w: w1, a, big_a, c, tau_lo: t1.min(t2), tau_hi: t1.max(t2), theta0, span });
        }
    }
    if nodes.is_empty() {
        return 0.0;
    }
    let tlo = nodes.iter().map(|n| n.tau_lo).fold(f64::INFINITY, f64::min);
    let thi = nodes.iter().map(|n| n.tau_hi).fold(f64::NEG_INFINITY, f64::max);
    if !(thi > tlo) {
        return 0.0;
    }
    let (ts, tw) = gauss_legendre(q.tau, tlo, thi);
    let mut total = 0.0;
    for (&tau, &wt_tau) in ts.iter().zip(&tw) {
        let mut g = 0.0;
        for n in &nodes {
            if tau < n.tau_lo || tau > n.tau_hi {
                continue;
            }
            let r2 = (n.big_a - tau) / n.a;
            if r2 < 0.0 {
                continue;
            }
            let r = r2.sqrt();
            let x2 = xi - n.xi1;
            let mut ring = 0.0;
            let full = n.span >= 2.0 * PI;
            let (ca, sa) = (n.theta0.cos(), n.theta0.sin());
            for &(tj, ct0, st0) in trig {
                // Rotate the unit-circle node into the arc.
                let (ct, st) = if full {
                    (ct0, st0)
                } else {
                    let th = tj * n.span / (2.0 * PI);
                    let (c1, s1) = (th.cos(), th.sin());
                    (ca * c1 - sa * s1, sa * c1 + ca * s1)
                };
                let e1 = [n.c[0] + r * ct, n.c[1] + r * st];
                let fu = u.eval(n.xi1, e1);
                if fu == 0.0 {
                    continue;
                }
                let e2v = [eta[0] - e1[0], eta[1] - e1[1]];
                let fv = v.eval(x2, e2v);
                if fv == 0.0 {
                    continue;
                }
                let w = match wt {
                    ProductWeight::Unit => 1.0,
                    ProductWeight::Slope { lam } => {
                        let d = [e1[0] / n.xi1 - e2v[0] / x2, e1[1] / n.xi1 - e2v[1] / x2];
                        lam + (d[0] * d[0] + d[1] * d[1]).sqrt()
                    }
                };
                ring += w * fu * fv;
            }
            g += n.w * ring * (n.span / trig.len() as f64) / (2.0 * n.a.abs());
        }
        total += wt_tau * g * g;
    }
    total / (4.0 * PI * PI)
}

/// `|| w(zeta_1, zeta_2) (S(t) u0)(S(t) v0) ||_{L^2(R x R^3)}` for the weight
/// `w` acting as a bilinear Fourier multiplier.
pub fn bilinear_product_norm(u: &FourierBox, v: &FourierBox, wt: ProductWeight, q: &BilinearQuadrature) -> f64 {
    let uh = u.eta_hull();
    let vh = v.eta_hull();
    let (xs, xw) = gauss_legendre(q.zeta[0], u.xi.lo + v.xi.lo, u.xi.hi + v.xi.hi);
    let (e1, w1) = gauss_legendre(q.zeta[1], uh[0][0] + vh[0][0], uh[0][1] + vh[0][1]);
    let (e2, w2) = gauss_legendre(q.zeta[2], uh[1][0] + vh[1][0], uh[1][1] + vh[1][1]);
    let trig: Vec<(f64, f64, f64)> =
        (0..q.theta).map(|j| 2.0 * PI * (j as f64 + 0.5) / q.theta as f64).map(|t| (t, t.cos(), t.sin())).collect();
    let jobs: Vec<(usize, usize)> = (0..xs.len()).flat_map(|i| (0..e1.len()).map(move |j| (i, j))).collect();
    let s: f64 = jobs
        .par_iter()
        .map(|&(i, j)| {
            let mut acc = 0.0;
            for k in 0..e2.len() {
                if xs[i] == 0.0 {
                    continue;
                }
                acc += w2[k] * zeta_density(u, v, wt, xs[i], [e1[j], e2[k]], q, &trig);
            }
            acc * xw[i] * w1[j]
        })
        .sum();
    s.sqrt()
}

/// Node counts of the root route: transverse coordinates of `u`, the time
/// frequency, and the scan used to bracket roots in `xi_1`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RootQuadrature {
    pub zeta: [usize; 3],
    pub transverse: usize,
    pub tau: usize,
    pub scan: usize,
}

impl Default for RootQuadrature {
    fn default() -> Self {
        RootQuadrature { zeta: [8, 8, 8], transverse: 12, tau: 48, scan: 8 }
    }
}

impl FourierBox {
    /// `eta` at coordinates `(xi, s)` and `d eta_i / d xi`.
    #[inline]
    fn eta_at(&self, xi: f64, s: [f64; 2]) -> ([f64; 2], [f64; 2]) {
        match self.slope_scale {
            None => (s, [0.0, 0.0]),
            Some(k) => ([k * xi * s[0], k * xi * s[1]], [k * s[0], k * s[1]]),
        }
    }

    #[inline]
    fn jacobian(&self, xi: f64) -> f64 {
        match self.slope_scale {
            None => 1.0,
            Some(k) => (k * xi) * (k * xi),
        }
    }
}

/// Same norm as [`bilinear_product_norm`], with the delta resolved in `xi_1`
/// along lines of fixed transverse coordinate of `u`:
/// `G(tau) = int ds sum_{Omega(xi_1) = tau} J h / |d Omega / d xi_1|`.
pub fn bilinear_product_norm_roots(u: &FourierBox, v: &FourierBox, wt: ProductWeight, q: &RootQuadrature) -> f64 {
    let uh = u.eta_hull();
    let vh = v.eta_hull();
    let (xs, xw) = gauss_legendre(q.zeta[0], u.xi.lo + v.xi.lo, u.xi.hi + v.xi.hi);
    let (e1, w1) = gauss_legendre(q.zeta[1], uh[0][0] + vh[0][0], uh[0][1] + vh[0][1]);
    let (e2, w2) = gauss_legendre(q.zeta[2], uh[1][0] + vh[1][0], uh[1][1] + vh[1][1]);
    let (s1, sw1) = gauss_legendre(q.transverse, u.eta[0].lo, u.eta[0].hi);
    let (s2, sw2) = gauss_legendre(q.transverse, u.eta[1].lo, u.eta[1].hi);
    let jobs: Vec<(usize, usize)> = (0..xs.len()).flat_map(|i| (0..e1.len()).map(move |j| (i, j))).collect();
    let total: f64 = jobs
        .par_iter()
        .map(|&(i, j)| {
            let mut acc = 0.0;
            for k in 0..e2.len() {
                let d = root_density(u, v, wt, xs[i], [e1[j], e2[k]], q, (&s1, &sw1), (&s2, &sw2));
                acc += w2[k] * d;
            }
            acc * xw[i] * w1[j]
        })
        .sum();
    total.sqrt()
}

#[allow(clippy::too_many_arguments)]
fn root_density(
    u: &FourierBox,
    v: &FourierBox,
    wt: ProductWeight,
    xi: f64,
    eta: [f64; 2],
    q: &RootQuadrature,
    ax1: (&[f64], &[f64]),
    ax2: (&[f64], &[f64]),
) -> f64 {
    let Some(r1) = intersect([u.xi.lo, u.xi.hi], [xi - v.xi.hi, xi - v.xi.lo]) else {
        return 0.0;
    };
    if r1[0] < 0.0 && r1[1] > 0.0 {
        // The root route is used for data away from xi_1 = 0.
        return f64::NAN;
    }
    let phase = |x1: f64, s: [f64; 2]| -> (f64, f64, f64) {
        let (e1, de1) = u.eta_at(x1, s);
        let x2 = xi - x1;
        let e2 = [eta[0] - e1[0], eta[1] - e1[1]];
        let n1 = e1[0] * e1[0] + e1[1] * e1[1];
        let n2 = e2[0] * e2[0] + e2[1] * e2[1];
        let om = x1 * x1 * x1 - n1 / x1 + x2 * x2 * x2 - n2 / x2;
        let d = 3.0 * x1 * x1 + n1 / (x1 * x1) - 2.0 * (e1[0] * de1[0] + e1[1] * de1[1]) / x1 - 3.0 * x2 * x2
            - n2 / (x2 * x2)
            + 2.0 * (e2[0] * de1[0] + e2[1] * de1[1]) / x2;
        let fu = u.eval(x1, e1);
        let h = if fu == 0.0 {
            0.0
        } else {
            let fv = v.eval(x2, e2);
            let w = match wt {
                ProductWeight::Unit => 1.0,
                ProductWeight::Slope { lam } => {
                    let dd = [e1[0] / x1 - e2[0] / x2, e1[1] / x1 - e2[1] / x2];
                    lam + (dd[0] * dd[0] + dd[1] * dd[1]).sqrt()
                }
            };
            w * fu * fv * u.jacobian(x1)
        };
        (om, d, h)
    };
    // Per transverse node: scan of the phase in xi_1.
    let ns = q.scan;
    let grid: Vec<f64> = (0..=ns).map(|m| r1[0] + (r1[1] - r1[0]) * m as f64 / ns as f64).collect();
    struct Line {
        s: [f64; 2],
        w: f64,
        om: Vec<f64>,
    }
    let mut lines = Vec::new();
    let (mut tlo, mut thi) = (f64::INFINITY, f64::NEG_INFINITY);
    for (a, wa) in ax1.0.iter().zip(ax1.1) {
        for (b, wb) in ax2.0.iter().zip(ax2.1) {
            let s = [*a, *b];
            let mut alive = false;
            let om: Vec<f64> = grid
                .iter()
                .map(|&x1| {
                    let (o, _, h) = phase(x1, s);
                    alive |= h != 0.0;
                    o
                })
                .collect();
            let live_any = alive || {
                // Supports may fall between scan points.
                let fine = 4 * ns;
                (0..=fine).any(|m| phase(r1[0] + (r1[1] - r1[0]) * m as f64 / fine as f64, s).2 != 0.0)
            };
            if !live_any {
                continue;
            }
            for &o in &om {
                tlo = tlo.min(o);
                thi = thi.max(o);
            }
            lines.push(Line { s, w: wa * wb, om });
        }
    }
    if lines.is_empty() || !(thi > tlo) {
        return 0.0;
    }
    let (ts, tw) = gauss_legendre(q.tau, tlo, thi);
    let mut total = 0.0;
    for (&tau, &wtau) in ts.iter().zip(&tw) {
        let mut g = 0.0;
        for l in &lines {
            for m in 0..ns {
                let (fa, fb) = (l.om[m] - tau, l.om[m + 1] - tau);
                if fa.signum() == fb.signum() && fa != 0.0 {
                    continue;
                }
                // Safeguarded Newton inside the bracket.
                let (mut lo, mut hi) = (grid[m], grid[m + 1]);
                let mut x = lo + (hi - lo) * fa / (fa - fb);
                let mut out = phase(x, l.s);
                for _ in 0..40 {
                    let f = out.0 - tau;
                    if (f > 0.0) == (fa > 0.0) {
                        lo = x;
                    } else {
                        hi = x;
                    }
                    let mut nx = x - f / out.1;
                    if !(nx > lo && nx < hi) {
                        nx = 0.5 * (lo + hi);
                    }
                    let done = (nx - x).abs() <= 1e-14 * x.abs().max(1e-300);
                    x = nx;
                    out = phase(x, l.s);
                    if done {
                        break;
                    }
                }
                if out.2 != 0.0 {
                    g += l.w * out.2 / out.1.abs();
                }
            }
        }
        total += wtau * g * g;
    }
    total / (4.0 * PI * PI)
}

/// Low datum on the dyadic band `mu/2 <= xi <= mu` with transverse box
/// `[-beta, beta]^2`. Support reaching `xi = 0` sends the ring coefficient
/// `1/xi_1` to infinity and the fixed `tau` rule loses almost all the mass.
pub fn low_datum<R: Rng>(rng: &mut R, mu: f64, beta: f64, bumps: usize) -> FourierBox {
    FourierBox {
        xi: BumpProfile::random(rng, 0.5 * mu, mu, bumps),
        eta: [BumpProfile::random(rng, -beta, beta, bumps), BumpProfile::random(rng, -beta, beta, bumps)],
        slope_scale: None,
    }
}

/// High datum `lam <= xi <= 2 lam` with transverse box `[-beta, beta]^2`.
pub fn high_datum<R: Rng>(rng: &mut R, lam: f64, beta: f64, bumps: usize) -> FourierBox {
    FourierBox {
        xi: BumpProfile::random(rng, lam, 2.0 * lam, bumps),
        eta: [BumpProfile::random(rng, -beta, beta, bumps), BumpProfile::random(rng, -beta, beta, bumps)],
        slope_scale: None,
    }
}

/// Datum on `{mu <= xi <= 2 mu, eta/xi in mu Gamma}` with `Gamma` the square
/// of side `side` centred at `center`.
pub fn sector_datum<R: Rng>(rng: &mut R, mu: f64, center: [f64; 2], side: f64, bumps: usize) -> FourierBox {
    let h = side / 2.0;
    FourierBox {
        xi: BumpProfile::random(rng, mu, 2.0 * mu, bumps),
        eta: [
            BumpProfile::random(rng, center[0] - h, center[0] + h, bumps),
            BumpProfile::random(rng, center[1] - h, center[1] + h, bumps),
        ],
        slope_scale: Some(mu),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepReport {
    pub check: String,
    /// Swept parameter values (`mu` or `|Gamma|`).
    pub params: Vec<f64>,
    /// Ensemble means of `||product|| / (||u0|| ||v0||)`.
    pub mean_ratios: Vec<f64>,
    pub per_seed: Vec<Vec<f64>>,
    pub fit: LineFit,
}

/// Transverse half-width of both data in the low-high experiment; it must
/// dominate `lam mu` for the `mu` scaling to be attained.
pub fn default_beta(lam: f64) -> f64 {
    4.0 * lam
}

/// `||u_{<mu} v_{lam}|| / (||u0|| ||v0||)` for one ensemble member.
pub fn bilinear_lowhigh_member(mu: f64, lam: f64, seed: u64, member: u64, q: &BilinearQuadrature) -> Result<f64> {
    if !(mu > 0.0 && lam > 0.0) {
        return Err(KpError::Config("frequency ranges must be nonempty".into()));
    }
    if mu > lam / 2.0 * (1.0 + 1e-12) {
        return Err(KpError::Precondition(format!("need mu <= lam/2, got mu = {mu}, lam = {lam}")));
    }
    let mut rng = member_rng(seed, member);
    let beta = default_beta(lam);
    let u = low_datum(&mut rng, mu, beta, 3);
    let v = high_datum(&mut rng, lam, beta, 3);
    Ok(bilinear_product_norm(&u, &v, ProductWeight::Unit, q) / (u.l2_norm() * v.l2_norm()))
}

/// Ensemble `mu`-sweep at fixed `lam`; fitted `log2` slope of the mean ratio.
pub fn bilinear_lowhigh_sweep(mus: &[f64], lam: f64, ensemble: usize, seed: u64, q: &BilinearQuadrature) -> Result<SweepReport> {
    if mus.len() < 2 || ensemble == 0 {
        return Err(KpError::Config("a sweep needs at least two mu values and one member".into()));
    }
    let mut per_seed = Vec::new();
    for &mu in mus {
        // Member streams are shared across mu so each seed is one fixed shape.
        let r: Result<Vec<f64>> = (0..ensemble as u64).map(|m| bilinear_lowhigh_member(mu, lam, seed, m, q)).collect();
        per_seed.push(r?);
    }
    let mean_ratios: Vec<f64> = per_seed.iter().map(|v| v.iter().sum::<f64>() / v.len() as f64).collect();
    let fit = log2_slope(mus, &mean_ratios);
    Ok(SweepReport { check: "bilinear".into(), params: mus.to_vec(), mean_ratios, per_seed, fit })
}

/// Which support hypothesis of the sector estimate holds.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum SectorHypothesis {
    Separated,
    Excluded,
}

/// Checks `mu <= lam/8`, or `lam/8 < mu <= lam` with `Gamma` inside `B_lam(0)`
/// and the `v` support outside `R x R x B_{10 lam^2}(0)`.
pub fn sector_hypothesis(mu: f64, lam: f64, u: &FourierBox, v: &FourierBox) -> Result<SectorHypothesis> {
    if mu <= lam / 8.0 {
        return Ok(SectorHypothesis::Separated);
    }
    if mu > lam {
        return Err(KpError::Precondition(format!("sector estimate needs mu <= lam, got mu = {mu}, lam = {lam}")));
    }
    let g = [[u.eta[0].lo, u.eta[0].hi], [u.eta[1].lo, u.eta[1].hi]];
    let far = (g[0][0].abs().max(g[0][1].abs())).hypot(g[1][0].abs().max(g[1][1].abs()));
    if far > lam {
        return Err(KpError::Precondition(format!(
            "lam/8 < mu: Gamma must lie in B_lam(0), but reaches radius {far}"
        )));
    }
    let h = v.eta_hull();
    let near = |r: [f64; 2]| if r[0] > 0.0 { r[0] } else if r[1] < 0.0 { -r[1] } else { 0.0 };
    if near(h[0]).hypot(near(h[1])) < 10.0 * lam * lam {
        return Err(KpError::Precondition(
            "lam/8 < mu: the Fourier support of v must avoid R x R x B_{10 lam^2}(0)".into(),
        ));
    }
    Ok(SectorHypothesis::Excluded)
}

/// Weighted product over `|Gamma|`-scaled slope squares, normalized by
/// `||u0|| ||v0||`; the fitted slope against `|Gamma|` is the reported exponent.
pub fn sector_bilinear_sweep(mu: f64, lam: f64, sides: &[f64], ensemble: usize, seed: u64, q: &RootQuadrature) -> Result<SweepReport> {
    if sides.len() < 2 || ensemble == 0 {
        return Err(KpError::Config("a sweep needs at least two Gamma sizes and one member".into()));
    }
    let beta = default_beta(lam);
    let mut per_seed = Vec::new();
    for &side in sides {
        let mut row = Vec::new();
        for m in 0..ensemble as u64 {
            let mut rng = member_rng(seed, m);
            let u = sector_datum(&mut rng, mu, [0.0, 0.0], side, 3);
            let v = high_datum(&mut rng, lam, beta, 3);
            sector_hypothesis(mu, lam, &u, &v)?;
            let n = bilinear_product_norm_roots(&u, &v, ProductWeight::Slope { lam }, q);
            row.push(n / (u.l2_norm() * v.l2_norm()));
        }
        per_seed.push(row);
    }
    let gammas: Vec<f64> = sides.iter().map(|s| s * s).collect();
    let mean_ratios: Vec<f64> = per_seed.iter().map(|v| v.iter().sum::<f64>() / v.len() as f64).collect();
    let fit = log2_slope(&gammas, &mean_ratios);
    Ok(SweepReport { check: "sector-bilinear".into(), params: gammas, mean_ratios, per_seed, fit })
}

use rand::Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{KpError, Result};
use crate::spectral::omega;

/// Level set `{eta : phi(xi - xi_1, eta - eta_1) - phi(xi - xi_2, eta - eta_2) = tau}` data.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeasureConfig {
    pub xi: f64,
    pub xi1: f64,
    pub xi2: f64,
    pub eta1: [f64; 2],
    pub eta2: [f64; 2],
    pub tau: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CircleMeasure {
    /// Coarea integral `int delta(F - tau) d eta`; 0 when degenerate.
    pub value: f64,
    /// `|I_n - I_2n|` between the base and doubled angular rules.
    pub richardson_gap: f64,
    pub radius: f64,
    pub degenerate: bool,
}

pub const ANGULAR_NODES: usize = 4096;
const DEGENERATE_RADIUS: f64 = 1e-8;

impl MeasureConfig {
    fn offsets(&self) -> Result<(f64, f64)> {
        let a = self.xi - self.xi1;
        let b = self.xi - self.xi2;
        if a == 0.0 || b == 0.0 {
            return Err(KpError::Domain("xi - xi_1 and xi - xi_2 must be nonzero".into()));
        }
        if self.xi1 == self.xi2 {
            return Err(KpError::Domain("xi_1 = xi_2 makes the level set a line, not a circle".into()));
        }
        Ok((a, b))
    }

    /// `F(eta) = phi(xi - xi_1, eta - eta_1) - phi(xi - xi_2, eta - eta_2)`.
    pub fn level_function(&self, eta: [f64; 2]) -> f64 {
        let d1 = [eta[0] - self.eta1[0], eta[1] - self.eta1[1]];
        let d2 = [eta[0] - self.eta2[0], eta[1] - self.eta2[1]];
        omega(self.xi - self.xi1, d1) - omega(self.xi - self.xi2, d2)
    }

    pub fn level_gradient(&self, eta: [f64; 2]) -> [f64; 2] {
        let a = self.xi - self.xi1;
        let b = self.xi - self.xi2;
        [0, 1].map(|i| -2.0 * (eta[i] - self.eta1[i]) / a + 2.0 * (eta[i] - self.eta2[i]) / b)
    }

    /// Critical point of `F`, where the gradient vanishes.
    pub fn center(&self) -> Result<[f64; 2]> {
        let (a, b) = self.offsets()?;
        Ok([0, 1].map(|i| (b * self.eta1[i] - a * self.eta2[i]) / (b - a)))
    }
}

/// Corrected closed form `pi |xi - xi_1| |xi - xi_2| / |xi_2 - xi_1|`: the
/// reciprocal `pi / |kappa|` of the quadratic coefficient of `F`.
pub fn circle_measure_closed_form(c: &MeasureConfig) -> Result<f64> {
    let (a, b) = c.offsets()?;
    Ok(PI * (a * b).abs() / (c.xi2 - c.xi1).abs())
}

/// The constant `4 pi |xi_2 - xi_1| / (|xi - xi_1| |xi - xi_2|)` as displayed
/// in the source; kept for the comparison report.
pub fn circle_measure_displayed_form(c: &MeasureConfig) -> Result<f64> {
    let (a, b) = c.offsets()?;
    Ok(4.0 * PI * (c.xi2 - c.xi1).abs() / (a * b).abs())
}

/// Root of `F(center + r e) = tau` along the ray `e`, by bracketing and
/// bisection on the direct level function.
fn ray_radius(c: &MeasureConfig, ctr: [f64; 2], e: [f64; 2]) -> Option<f64> {
    let f = |r: f64| c.level_function([ctr[0] + r * e[0], ctr[1] + r * e[1]]) - c.tau;
    let f0 = f(0.0);
    if f0 == 0.0 {
        return Some(0.0);
    }
    let mut hi = 1e-6;
    while f(hi).signum() == f0.signum() {
        hi *= 2.0;
        if hi > 1e12 {
            return None;
        }
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid).signum() == f0.signum() {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-15 * hi {
            break;
        }
    }
    // Newton polish; the bracket is already tight.
    let mut r = 0.5 * (lo + hi);
    for _ in 0..3 {
        let p = [ctr[0] + r * e[0], ctr[1] + r * e[1]];
        let g = c.level_gradient(p);
        let dr = g[0] * e[0] + g[1] * e[1];
        if dr == 0.0 {
            break;
        }
        let step = f(r) / dr;
        if !(r - step >= lo && r - step <= hi) {
            break;
        }
        r -= step;
    }
    Some(r)
}

fn polar_rule(c: &MeasureConfig, ctr: [f64; 2], n: usize) -> Option<(f64, f64)> {
    let mut sum = 0.0;
    let mut rsum = 0.0;
    for j in 0..n {
        let th = 2.0 * PI * j as f64 / n as f64;
        let e = [th.cos(), th.sin()];
        let r = ray_radius(c, ctr, e)?;
        let g = c.level_gradient([ctr[0] + r * e[0], ctr[1] + r * e[1]]);
        let dr = (g[0] * e[0] + g[1] * e[1]).abs();
        sum += r / dr;
        rsum += r;
    }
    let h = 2.0 * PI / n as f64;
    Some((sum * h, rsum / n as f64))
}

/// Coarea integral over the level circle in polar coordinates about the
/// critical point: `int_0^{2 pi} r(theta) / |d_r F| d theta`.
pub fn circle_measure_integral(c: &MeasureConfig) -> Result<CircleMeasure> {
    let ctr = c.center()?;
    let degenerate = CircleMeasure { value: 0.0, richardson_gap: 0.0, radius: 0.0, degenerate: true };
    let Some((coarse, radius)) = polar_rule(c, ctr, ANGULAR_NODES) else {
        return Ok(degenerate);
    };
    if radius < DEGENERATE_RADIUS {
        return Ok(CircleMeasure { radius, ..degenerate });
    }
    let (fine, _) = polar_rule(c, ctr, 2 * ANGULAR_NODES).ok_or_else(|| {
        KpError::Accuracy("level circle lost between the base and doubled angular rules".into())
    })?;
    Ok(CircleMeasure { value: fine, richardson_gap: (fine - coarse).abs(), radius, degenerate: false })
}

/// Random configuration whose level set is a circle with radius in `[0.1, 3]`.
pub fn random_measure_config<R: Rng>(rng: &mut R) -> MeasureConfig {
    loop {
        let xi: f64 = rng.gen_range(-4.0..4.0);
        let xi1: f64 = rng.gen_range(-4.0..4.0);
        let xi2: f64 = rng.gen_range(-4.0..4.0);
        if (xi - xi1).abs() < 0.1 || (xi - xi2).abs() < 0.1 || (xi1 - xi2).abs() < 0.1 {
            continue;
        }
        let eta1 = [rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0)];
        let eta2 = [rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0)];
        let mut c = MeasureConfig { xi, xi1, xi2, eta1, eta2, tau: 0.0 };
        let ctr = c.center().expect("offsets checked above");
        let f0 = c.level_function(ctr);
        // F grows like kappa r^2 away from the centre.
        let kappa = (xi2 - xi1) / ((xi - xi1) * (xi - xi2));
        let r: f64 = rng.gen_range(0.1..3.0);
        c.tau = f0 + kappa * r * r;
        return c;
    }
}

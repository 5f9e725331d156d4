use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{KpError, Result};
use crate::spectral::omega;

/// Point `(xi_i, eta_i, tau_i)`, `i = 1..3`, on the hyperplane where each
/// component sums to zero.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResonancePoint {
    pub xi: [f64; 3],
    pub eta: [[f64; 2]; 3],
    pub tau: [f64; 3],
}

impl ResonancePoint {
    /// Completes `(xi_1, eta_1, tau_1), (xi_2, eta_2, tau_2)` by the third
    /// triple that puts the point on the hyperplane.
    pub fn from_pair(xi: [f64; 2], eta: [[f64; 2]; 2], tau: [f64; 2]) -> Self {
        ResonancePoint {
            xi: [xi[0], xi[1], -xi[0] - xi[1]],
            eta: [eta[0], eta[1], [-eta[0][0] - eta[1][0], -eta[0][1] - eta[1][1]]],
            tau: [tau[0], tau[1], -tau[0] - tau[1]],
        }
    }

    /// Same point with `tau_i = omega_i` for `i = 1, 2`.
    pub fn on_shell(xi: [f64; 2], eta: [[f64; 2]; 2]) -> Self {
        Self::from_pair(xi, eta, [omega(xi[0], eta[0]), omega(xi[1], eta[1])])
    }

    pub fn validate(&self) -> Result<()> {
        if self.xi.iter().any(|&x| x == 0.0) {
            return Err(KpError::Domain("resonance identity needs all xi_i != 0".into()));
        }
        Ok(())
    }
}

/// `sum (tau_i - omega_i)` and `-3 xi_1 xi_2 xi_3 - (xi_1 xi_2 / xi_3) |eta_1/xi_1 - eta_2/xi_2|^2`,
/// with the magnitude of the largest term in either.
pub fn resonance_sides(p: &ResonancePoint) -> Result<(f64, f64, f64)> {
    p.validate()?;
    let om: Vec<f64> = (0..3).map(|i| omega(p.xi[i], p.eta[i])).collect();
    let lhs: f64 = (0..3).map(|i| p.tau[i] - om[i]).sum();
    let [x1, x2, x3] = p.xi;
    let s = [p.eta[0][0] / x1 - p.eta[1][0] / x2, p.eta[0][1] / x1 - p.eta[1][1] / x2];
    let cubic = -3.0 * x1 * x2 * x3;
    let quad = -(x1 * x2 / x3) * (s[0] * s[0] + s[1] * s[1]);
    let scale = p
        .tau
        .iter()
        .chain(om.iter())
        .chain([cubic, quad].iter())
        .fold(0.0f64, |m, v| m.max(v.abs()));
    Ok((lhs, cubic + quad, scale))
}

/// `|LHS - RHS|` relative to the largest term.
pub fn resonance_identity_defect(p: &ResonancePoint) -> Result<f64> {
    let (l, r, s) = resonance_sides(p)?;
    Ok(if s == 0.0 { 0.0 } else { (l - r).abs() / s })
}

/// Random hyperplane point with `|xi_i| in [lo, hi]`, transverse frequencies
/// in `[-eta_max, eta_max]^2` and modulations `tau_i` in `[-tau_max, tau_max]`.
pub fn random_resonance_point<R: Rng>(rng: &mut R, lo: f64, hi: f64, eta_max: f64, tau_max: f64) -> ResonancePoint {
    loop {
        let mut xi = [0.0; 2];
        for x in xi.iter_mut() {
            let m: f64 = rng.gen_range(lo..=hi);
            *x = if rng.gen::<bool>() { m } else { -m };
        }
        let x3 = (xi[0] + xi[1]).abs();
        if x3 < lo || x3 > hi {
            continue;
        }
        let mut eta = [[0.0; 2]; 2];
        for e in eta.iter_mut().flatten() {
            *e = rng.gen_range(-eta_max..=eta_max);
        }
        let tau = [rng.gen_range(-tau_max..=tau_max), rng.gen_range(-tau_max..=tau_max)];
        return ResonancePoint::from_pair(xi, eta, tau);
    }
}

/// Resonance function of the ill-posedness datum,
/// `R = -3 xi xi_1 (xi - xi_1) - (xi xi_1 / (xi - xi_1)) |eta/xi - eta_1/xi_1|^2`,
/// which equals `omega(xi_1, eta_1) + omega(xi - xi_1, eta - eta_1) - omega(xi, eta)`.
pub fn resonance_r(xi: f64, xi1: f64, eta: [f64; 2], eta1: [f64; 2]) -> Result<f64> {
    let x2 = xi - xi1;
    if xi == 0.0 || xi1 == 0.0 || x2 == 0.0 {
        return Err(KpError::Domain(format!("resonance function has a pole at xi = {xi}, xi_1 = {xi1}")));
    }
    Ok(resonance_r_unchecked(xi, xi1, eta, eta1))
}

#[inline]
pub fn resonance_r_unchecked(xi: f64, xi1: f64, eta: [f64; 2], eta1: [f64; 2]) -> f64 {
    let s = [eta[0] / xi - eta1[0] / xi1, eta[1] / xi - eta1[1] / xi1];
    -3.0 * xi * xi1 * (xi - xi1) - (xi * xi1 / (xi - xi1)) * (s[0] * s[0] + s[1] * s[1])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::member_rng;

    #[test]
    fn parallel_slopes_reduce_to_cubic() {
        let p = ResonancePoint::on_shell([1.0, 2.0], [[0.5, -1.0], [1.0, -2.0]]);
        let (l, r, _) = resonance_sides(&p).unwrap();
        let cubic = -3.0 * 1.0 * 2.0 * -3.0;
        assert!((l - cubic).abs() < 1e-12 && (r - cubic).abs() < 1e-12);
    }

    #[test]
    fn unit_example() {
        let p = ResonancePoint::on_shell([1.0, 1.0], [[1.0, 0.0], [0.0, 0.0]]);
        let (l, r, _) = resonance_sides(&p).unwrap();
        assert!((l - r).abs() <= 1e-12);
    }

    #[test]
    fn zero_xi_is_rejected() {
        let p = ResonancePoint::from_pair([0.0, 1.0], [[0.0; 2]; 2], [0.0; 2]);
        assert!(resonance_identity_defect(&p).is_err());
    }

    #[test]
    fn r_matches_symbol_sum() {
        let mut rng = member_rng(11, 0);
        for _ in 0..100 {
            let p = random_resonance_point(&mut rng, 0.25, 8.0, 4.0, 0.0);
            let xi = p.xi[0] + p.xi[1];
            let eta = [p.eta[0][0] + p.eta[1][0], p.eta[0][1] + p.eta[1][1]];
            let r = resonance_r(xi, p.xi[0], eta, p.eta[0]).unwrap();
            let direct = omega(p.xi[0], p.eta[0]) + omega(p.xi[1], p.eta[1]) - omega(xi, eta);
            assert!((r - direct).abs() <= 1e-10 * r.abs().max(1.0));
        }
    }
}

//! Asymptotic states: pullbacks `S(-t) u(t)` at dyadic checkpoints, their
//! Cauchy gaps and the wave-operator residual.

use serde::{Deserialize, Serialize};

use crate::decomposition::{lqlp_norm, NormParams, SpaceTimeTrace, Window};
use crate::error::{KpError, Result};
use rand::Rng;

use crate::data::gaussian_derivative;
use crate::rng::member_rng;
use crate::spectral::{apply_linear_propagator, GridSpec, SpectralField};

/// `v(t_j) = S(-t_j) u(t_j)` on every sample.
pub fn pullback_trace(tr: &SpaceTimeTrace) -> SpaceTimeTrace {
    SpaceTimeTrace { times: tr.times.clone(), states: tr.pullbacks(), window: Window::None }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ScatterReport {
    /// Dyadic checkpoints `1, 2, 4, ...` found among the samples.
    pub sample_times: Vec<f64>,
    /// `||v(t_{j+1}) - v(t_j)||` in the sector norm, one per consecutive pair.
    pub cauchy_gaps: Vec<f64>,
    /// `||u(t_j) - S(t_j) u_plus||` in the sector norm.
    pub residuals: Vec<f64>,
    pub gaps_strictly_decreasing: bool,
    pub datum_norm: f64,
    pub u_plus_norm: f64,
    #[serde(skip)]
    pub pullbacks: Vec<SpectralField>,
    /// Last pullback, kept only when the final three gaps decrease.
    #[serde(skip)]
    pub u_plus: Option<SpectralField>,
}

fn dyadic_checkpoints(tr: &SpaceTimeTrace) -> Vec<usize> {
    let mut out = vec![];
    let mut t = 1.0;
    while t <= tr.times[tr.len() - 1] * (1.0 + 1e-12) {
        if let Some(i) = tr.times.iter().position(|&s| (s - t).abs() <= 1e-9 * t) {
            out.push(i);
        }
        t *= 2.0;
    }
    out
}

/// Gaps below this fraction of the datum norm count as an exact linear flow.
pub const EXACT_FLOOR: f64 = 1e-13;

fn strictly_decreasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[1] < w[0])
}

/// Gaps, residuals and (when justified) `u_plus` without raising on the
/// no-scattering path.
pub fn scatter_report(tr: &SpaceTimeTrace, np: &NormParams) -> Result<ScatterReport> {
    let idx = dyadic_checkpoints(tr);
    let times: Vec<f64> = idx.iter().map(|&i| tr.times[i]).collect();
    if times.len() < 4 || *times.last().unwrap() < 8.0 {
        return Err(KpError::Precondition(format!(
            "trace must contain the dyadic checkpoints 1, 2, 4, 8; found {times:?}"
        )));
    }
    let pb: Vec<SpectralField> =
        idx.iter().map(|&i| apply_linear_propagator(&tr.states[i], -tr.times[i])).collect();
    let gaps: Vec<f64> = pb.windows(2).map(|w| lqlp_norm(&w[1].sub(&w[0]), np)).collect();
    let last = pb.last().unwrap();
    let residuals = pb.iter().map(|v| lqlp_norm(&v.sub(last), np)).collect();
    let tail = &gaps[gaps.len().saturating_sub(3)..];
    let datum_norm = lqlp_norm(&tr.states[0], np);
    let ok = strictly_decreasing(tail) || tail.iter().all(|&g| g <= EXACT_FLOOR * datum_norm);
    Ok(ScatterReport {
        sample_times: times,
        gaps_strictly_decreasing: strictly_decreasing(&gaps),
        cauchy_gaps: gaps,
        residuals,
        datum_norm,
        u_plus_norm: lqlp_norm(last, np),
        u_plus: if ok { Some(last.clone()) } else { None },
        pullbacks: pb,
    })
}

/// `u_plus` as the pullback at the final checkpoint; errors with "no
/// scattering detected" unless the last three Cauchy gaps strictly decrease
/// (or vanish to rounding).
pub fn asymptotic_state(tr: &SpaceTimeTrace, np: &NormParams) -> Result<ScatterReport> {
    let rep = scatter_report(tr, np)?;
    if rep.u_plus.is_none() {
        let g = &rep.cauchy_gaps;
        return Err(KpError::Divergence(format!(
            "no scattering detected: Cauchy gaps {:?} do not decrease over the last checkpoints (datum too large or horizon too short)",
            &g[g.len().saturating_sub(3)..]
        )));
    }
    Ok(rep)
}

/// Localized small datum for the scattering ensemble: an x-derivative of a
/// Gaussian with widths in `[1.6, 2.4]` and a random center in the middle half
/// of the box, scaled to sector norm `eps`.
pub fn small_datum(grid: &GridSpec, seed: u64, member: u64, eps: f64, np: &NormParams) -> SpectralField {
    let mut rng = member_rng(seed, member);
    let l = grid.lengths();
    let widths = [rng.gen_range(1.6..2.4), rng.gen_range(1.6..2.4), rng.gen_range(1.6..2.4)];
    let center = [0, 1, 2].map(|a| l[a] * rng.gen_range(0.25..0.75));
    let sign = if rng.gen::<bool>() { 1.0 } else { -1.0 };
    let u = gaussian_derivative(grid, widths, center, sign);
    u.scaled(eps / lqlp_norm(&u, np))
}

/// Residual curve `(t, residual)` as CSV rows.
pub fn residual_rows(rep: &ScatterReport) -> Vec<(f64, f64)> {
    rep.sample_times.iter().copied().zip(rep.residuals.iter().copied()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::random_real_field;

    #[test]
    fn linear_flow_is_exact() {
        let g = GridSpec::cube(8, 1.0, false).unwrap();
        let u0 = random_real_field(&g, &mut member_rng(1, 0), [3, 3, 3]);
        let tr = SpaceTimeTrace::linear(&u0, (0..=16).map(|i| i as f64).collect(), Window::None).unwrap();
        let pb = pullback_trace(&tr);
        assert!(pb.states.iter().all(|s| s.l2_distance(&u0) < 1e-12 * u0.l2_norm()));
        let rep = scatter_report(&tr, &NormParams::default()).unwrap();
        assert_eq!(rep.sample_times, vec![1.0, 2.0, 4.0, 8.0, 16.0]);
        assert!(rep.cauchy_gaps.iter().all(|&g| g < 1e-12));
        assert!(rep.residuals.iter().all(|&r| r < 1e-12));
        let up = asymptotic_state(&tr, &NormParams::default()).unwrap().u_plus.unwrap();
        assert!(up.l2_distance(&u0) < 1e-12 * u0.l2_norm());
    }

    #[test]
    fn short_trace_is_rejected() {
        let g = GridSpec::cube(8, 1.0, false).unwrap();
        let u0 = SpectralField::zeros(&g, true);
        let tr = SpaceTimeTrace::linear(&u0, vec![0.0, 1.0, 2.0, 4.0], Window::None).unwrap();
        assert!(matches!(scatter_report(&tr, &NormParams::default()), Err(KpError::Precondition(_))));
    }
}

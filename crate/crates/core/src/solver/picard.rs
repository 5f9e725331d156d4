//! Picard iteration `w <- S(t) u0 + int_0^t S(t - s) (-d_x(w^2))(s) ds` on the
//! stepper grid with contraction diagnostics.

use serde::{Deserialize, Serialize};

use super::{duhamel_trace, nonlinearity, SimConfig};
use crate::decomposition::{lqlp_norm, v2_variation_norm, NormParams, SpaceTimeTrace, Window};
use crate::error::{KpError, Result};
use crate::spectral::SpectralField;

/// Default bound on `||u0||_{l^inf l^{3/2} L^2}` accepted by the iteration,
/// calibrated from the contraction diagnostic on the desk grid.
pub const DEFAULT_SMALLNESS: f64 = 1.0;

/// Two components of the discrete space-time norm: `sup_t` of the sector norm
/// and the 2-variation of the pullback in `L^2`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct XSurrogate {
    pub lqlp_sup: f64,
    pub v2: f64,
}

impl XSurrogate {
    pub fn total(&self) -> f64 {
        self.lqlp_sup + self.v2
    }
}

pub fn x_surrogate(tr: &SpaceTimeTrace, np: &NormParams) -> Result<XSurrogate> {
    let lqlp_sup = tr.states.iter().map(|s| lqlp_norm(s, np)).fold(0.0, f64::max);
    let v2 = if tr.len() >= 2 { v2_variation_norm(tr)? } else { 0.0 };
    Ok(XSurrogate { lqlp_sup, v2 })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PicardOptions {
    pub n_max: usize,
    pub tol: f64,
    pub smallness: f64,
    pub norm: NormParams,
}

impl Default for PicardOptions {
    fn default() -> Self {
        PicardOptions {
            n_max: 30,
            tol: 1e-13,
            smallness: DEFAULT_SMALLNESS,
            norm: NormParams { q: f64::INFINITY, p: 1.5, b: 0.9 },
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PicardReport {
    pub iterates: usize,
    /// `X(w^(n+1) - w^(n))` per step.
    pub diffs: Vec<f64>,
    pub diff_components: Vec<XSurrogate>,
    pub ratios: Vec<f64>,
    pub converged: bool,
    pub datum_norm: f64,
    /// `X(w - S(t) u0)` of the final iterate.
    pub nonlinear_part: XSurrogate,
}

/// [`picard_iterate_with`] with default smallness and norm.
pub fn picard_iterate(
    u0: &SpectralField,
    cfg: &SimConfig,
    n_max: usize,
    tol: f64,
) -> Result<(SpaceTimeTrace, PicardReport)> {
    picard_iterate_with(u0, cfg, &PicardOptions { n_max, tol, ..Default::default() })
}

fn gap_trace(a: &SpaceTimeTrace, b: &SpaceTimeTrace) -> Result<SpaceTimeTrace> {
    SpaceTimeTrace::new(a.times.clone(), a.states.iter().zip(&b.states).map(|(x, y)| x.sub(y)).collect(), Window::None)
}

/// Iterates on every time step of `cfg`. The iteration stops when the
/// difference falls below `tol`, after `n_max` steps, or with a divergence
/// error once three successive ratios reach 1.
pub fn picard_iterate_with(
    u0: &SpectralField,
    cfg: &SimConfig,
    opt: &PicardOptions,
) -> Result<(SpaceTimeTrace, PicardReport)> {
    let cfg = cfg.every_step();
    cfg.validate()?;
    let datum_norm = lqlp_norm(u0, &opt.norm);
    if datum_norm > opt.smallness {
        return Err(KpError::Precondition(format!(
            "datum norm {datum_norm:.3e} exceeds the smallness threshold {:.3e}",
            opt.smallness
        )));
    }
    let mut u0 = u0.clone();
    u0.band_limit();
    let linear = SpaceTimeTrace::linear(&u0, cfg.sample_times()?, Window::None)?;
    let mut report = PicardReport {
        iterates: 0,
        diffs: vec![],
        diff_components: vec![],
        ratios: vec![],
        converged: false,
        datum_norm,
        nonlinear_part: XSurrogate::default(),
    };
    if u0.coeff_energy() == 0.0 {
        report.converged = true;
        return Ok((linear, report));
    }
    let mut w = linear.clone();
    let mut streak = 0;
    for n in 0..opt.n_max {
        let forcing: Vec<SpectralField> = w.states.iter().map(|s| nonlinearity(s).scaled(cfg.alpha)).collect();
        let forcing = SpaceTimeTrace::new(w.times.clone(), forcing, Window::None)?;
        let duh = duhamel_trace(&forcing)?;
        let next = SpaceTimeTrace::new(
            w.times.clone(),
            linear.states.iter().zip(&duh.states).map(|(l, d)| l.add(d)).collect(),
            Window::None,
        )?;
        let comp = x_surrogate(&gap_trace(&next, &w)?, &opt.norm)?;
        let d = comp.total();
        if let Some(&prev) = report.diffs.last() {
            let r = d / prev;
            report.ratios.push(r);
            streak = if r >= 1.0 { streak + 1 } else { 0 };
        }
        report.diffs.push(d);
        report.diff_components.push(comp);
        report.iterates = n + 1;
        w = next;
        if streak >= 3 {
            return Err(KpError::Divergence(format!(
                "successive-difference ratio >= 1 for 3 steps (last {:.3}); datum too large",
                report.ratios.last().unwrap()
            )));
        }
        if d < opt.tol {
            report.converged = true;
            break;
        }
    }
    report.nonlinear_part = x_surrogate(&gap_trace(&w, &linear)?, &opt.norm)?;
    Ok((w, report))
}

//! Windowed time-DFT of traces in the interaction picture: the transform of
//! `w(t) S(-t) u(t)` is centred on the modulation `sigma = tau - omega`.

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use super::trace::{SpaceTimeTrace, Window};
use crate::error::Result;
use crate::spectral::omega_table;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Side {
    /// `|tau - omega| >= Lambda` (the tie set is null in the continuum; bins on
    /// it go above so that `Lambda = 0` keeps everything)
    Above,
    /// `|tau - omega| < Lambda`
    Below,
}

fn modulation_grid(n: usize, dt: f64) -> Vec<f64> {
    let d = 2.0 * PI / (n as f64 * dt);
    (0..n).map(|m| crate::spectral::signed_wavenumber(m, n) as f64 * d).collect()
}

/// Interaction-picture samples `w_n exp(-i omega t_n) u_hat(t_n)` per mode.
fn pulled_columns(tr: &SpaceTimeTrace) -> Result<(Vec<Vec<Complex64>>, Vec<f64>)> {
    let w = tr.weights()?;
    let grid = &tr.states[0].grid;
    let om = omega_table(grid);
    let cols = (0..grid.len())
        .into_par_iter()
        .map(|idx| {
            tr.times
                .iter()
                .zip(&tr.states)
                .zip(&w)
                .map(|((&t, s), &wn)| s.coeff[idx] * Complex64::from_polar(wn, -om[idx] * t))
                .collect()
        })
        .collect();
    Ok((cols, om))
}

/// Part of the windowed trace with modulation above or below `lam`.
pub fn modulation_projection(tr: &SpaceTimeTrace, lam: f64, side: Side) -> Result<SpaceTimeTrace> {
    let dt = tr.uniform_dt()?;
    let n = tr.len();
    let sigma = modulation_grid(n, dt);
    let (cols, om) = pulled_columns(tr)?;
    let mut planner = FftPlanner::new();
    let fwd = planner.plan_fft_forward(n);
    let inv = planner.plan_fft_inverse(n);
    let keep: Vec<bool> = sigma
        .iter()
        .map(|s| match side {
            Side::Above => s.abs() >= lam,
            Side::Below => s.abs() < lam,
        })
        .collect();
    let cols: Vec<Vec<Complex64>> = cols
        .into_par_iter()
        .map(|mut c| {
            fwd.process(&mut c);
            for (v, k) in c.iter_mut().zip(&keep) {
                if !k {
                    *v = Complex64::new(0.0, 0.0);
                }
            }
            inv.process(&mut c);
            let s = 1.0 / n as f64;
            c.iter_mut().for_each(|v| *v *= s);
            c
        })
        .collect();
    let mut states = tr.states.clone();
    for (ti, (&t, st)) in tr.times.iter().zip(states.iter_mut()).enumerate() {
        for (idx, c) in st.coeff.iter_mut().enumerate() {
            *c = cols[idx][ti] * Complex64::from_polar(1.0, om[idx] * t);
        }
    }
    SpaceTimeTrace::new(tr.times.clone(), states, Window::None)
}

/// Discrete `|| |tau - omega|^b F(w u) ||_{L^2}` over the windowed trace.
pub fn xdot_norm(tr: &SpaceTimeTrace, b: f64) -> Result<f64> {
    let dt = tr.uniform_dt()?;
    let n = tr.len();
    let sigma = modulation_grid(n, dt);
    let weight: Vec<f64> = sigma.iter().map(|s| if b == 0.0 { 1.0 } else { s.abs().powf(2.0 * b) }).collect();
    let (cols, _) = pulled_columns(tr)?;
    let fwd = FftPlanner::new().plan_fft_forward(n);
    let total: f64 = cols
        .into_par_iter()
        .map(|mut c| {
            fwd.process(&mut c);
            c.iter().zip(&weight).map(|(v, w)| w * v.norm_sqr()).sum::<f64>()
        })
        .sum();
    let cv = tr.states[0].grid.cell_volume();
    Ok((cv * total * dt / n as f64).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::random_real_field;
    use crate::rng::member_rng;
    use crate::spectral::{GridSpec, SpectralField};

    fn trace(u0: &SpectralField, n: usize, dt: f64, window: Window) -> SpaceTimeTrace {
        SpaceTimeTrace::linear(u0, (0..n).map(|i| i as f64 * dt).collect(), window).unwrap()
    }

    #[test]
    fn b_zero_is_windowed_l2() {
        let g = GridSpec::cube(8, 1.0, false).unwrap();
        let u0 = random_real_field(&g, &mut member_rng(3, 0), [3, 3, 3]);
        let tr = trace(&u0, 64, 0.05, Window::Hann);
        let x = xdot_norm(&tr, 0.0).unwrap();
        assert!((x - u0.l2_norm()).abs() < 1e-12 * u0.l2_norm());
    }

    #[test]
    fn full_window_above_zero_threshold() {
        let g = GridSpec::cube(8, 1.0, false).unwrap();
        let u0 = random_real_field(&g, &mut member_rng(4, 0), [3, 3, 3]);
        let tr = trace(&u0, 32, 0.05, Window::None);
        let above = modulation_projection(&tr, 0.0, Side::Above).unwrap();
        assert!(tr.sup_l2_gap(&above) < 1e-12 * u0.l2_norm());
    }
}

//! `int_0^t S(t - s) f(s) ds` by fourth-order quadrature of the pulled-back
//! integrand `S(-s) f(s)` on the forcing samples.

use num_complex::Complex64;

use crate::decomposition::{SpaceTimeTrace, Window};
use crate::error::{KpError, Result};
use crate::spectral::{apply_linear_propagator, SpectralField};

/// Relative disagreement between the rules on `h` and `2h` above which the
/// forcing is declared undersampled.
pub const DUHAMEL_TOL: f64 = 1e-8;

/// Weights of a fourth-order rule for `int_0^{j h}` on equispaced samples:
/// composite Simpson for even `j`, Simpson plus the 3/8 rule on the last three
/// intervals for odd `j >= 3`, and a four-point rule for `j = 1`. The returned
/// vector may extend past index `j` (only for `j = 1`).
pub fn cumulative_weights(j: usize, h: f64) -> Vec<f64> {
    match j {
        0 => vec![0.0],
        1 => vec![9.0 * h / 24.0, 19.0 * h / 24.0, -5.0 * h / 24.0, h / 24.0],
        _ if j % 2 == 0 => crate::quad::simpson_weights(j, h),
        _ => {
            let mut w = vec![0.0; j + 1];
            if j > 3 {
                w[..j - 2].copy_from_slice(&crate::quad::simpson_weights(j - 3, h));
            }
            for (o, c) in [1.0, 3.0, 3.0, 1.0].iter().enumerate() {
                w[j - 3 + o] += 3.0 * h / 8.0 * c;
            }
            w
        }
    }
}

fn pulled(forcing: &SpaceTimeTrace) -> Vec<SpectralField> {
    forcing.pullbacks()
}

fn weighted_sum(pb: &[SpectralField], w: &[f64]) -> SpectralField {
    let mut acc = SpectralField::zeros(&pb[0].grid, pb[0].real_flag);
    for (f, &wi) in pb.iter().zip(w) {
        if wi != 0.0 {
            acc.axpy(Complex64::new(wi, 0.0), f);
        }
    }
    acc
}

fn sample_index(forcing: &SpaceTimeTrace, t: f64) -> Result<usize> {
    let dt = forcing.uniform_dt()?;
    if forcing.times[0].abs() > 1e-12 * dt {
        return Err(KpError::Precondition("forcing samples must start at t = 0".into()));
    }
    let j = (t / dt).round();
    if j < 0.0 || (t - j * dt).abs() > 1e-9 * dt || j as usize >= forcing.len() {
        return Err(KpError::Precondition(format!("t = {t} is not a forcing sample time")));
    }
    Ok(j as usize)
}

/// `int_0^t S(t - s) f(s) ds` with `t` a sample time. When the step count is
/// a multiple of 4 the rule on every other sample is compared and an
/// accuracy error quoting the needed refinement is raised if they disagree.
pub fn duhamel_integral(forcing: &SpaceTimeTrace, t: f64) -> Result<SpectralField> {
    let j = sample_index(forcing, t)?;
    let grid = &forcing.states[0].grid;
    if j == 0 {
        return Ok(SpectralField::zeros(grid, forcing.states[0].real_flag));
    }
    if forcing.len() < 4 {
        return Err(KpError::Accuracy("the Duhamel rule needs at least 4 forcing samples".into()));
    }
    let h = forcing.uniform_dt()?;
    let pb = pulled(forcing);
    let fine = weighted_sum(&pb, &cumulative_weights(j, h));
    if j % 4 == 0 {
        let coarse_pb: Vec<SpectralField> = pb.iter().step_by(2).take(j / 2 + 1).cloned().collect();
        let coarse = weighted_sum(&coarse_pb, &cumulative_weights(j / 2, 2.0 * h));
        let scale = pb.iter().take(j + 1).map(|f| f.l2_norm()).fold(0.0, f64::max) * t;
        let err = fine.l2_distance(&coarse) / 15.0;
        if scale > 0.0 && err > DUHAMEL_TOL * scale {
            let factor = (err / (DUHAMEL_TOL * scale)).powf(0.25).ceil();
            return Err(KpError::Accuracy(format!(
                "Duhamel integrand undersampled: error estimate {:.2e}, refine the forcing samples by a factor of at least {factor}",
                err / scale
            )));
        }
    }
    Ok(apply_linear_propagator(&fine, t))
}

/// Duhamel integral at every sample time (no accuracy probe).
pub fn duhamel_trace(forcing: &SpaceTimeTrace) -> Result<SpaceTimeTrace> {
    let h = forcing.uniform_dt()?;
    if forcing.len() < 4 {
        return Err(KpError::Accuracy("the Duhamel rule needs at least 4 forcing samples".into()));
    }
    let pb = pulled(forcing);
    let n = pb.len();
    let c = |x: f64| Complex64::new(x * h, 0.0);
    // even[m] = Simpson over [0, 2 m h]; odd prefixes reuse even[(j - 3) / 2].
    let mut even = vec![SpectralField::zeros(&pb[0].grid, pb[0].real_flag)];
    let mut states = Vec::with_capacity(n);
    for j in 0..n {
        let integral = if j == 0 {
            even[0].clone()
        } else if j == 1 {
            weighted_sum(&pb, &cumulative_weights(1, h))
        } else if j % 2 == 0 {
            let mut s = even[j / 2 - 1].clone();
            s.axpy(c(1.0 / 3.0), &pb[j - 2]);
            s.axpy(c(4.0 / 3.0), &pb[j - 1]);
            s.axpy(c(1.0 / 3.0), &pb[j]);
            even.push(s.clone());
            s
        } else {
            let mut s = even[(j - 3) / 2].clone();
            for (o, w) in [1.0, 3.0, 3.0, 1.0].iter().enumerate() {
                s.axpy(c(3.0 / 8.0 * w), &pb[j - 3 + o]);
            }
            s
        };
        states.push(apply_linear_propagator(&integral, forcing.times[j]));
    }
    SpaceTimeTrace::new(forcing.times.clone(), states, Window::None)
}

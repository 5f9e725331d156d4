//! Unitary three-dimensional DFT on the [`GridSpec`] layout.

use num_complex::Complex64;
use rustfft::{Fft, FftDirection, FftPlanner};
use std::sync::{Arc, Mutex, OnceLock};

use super::field::{PhysicalField, SpectralField};
use super::grid::GridSpec;
use crate::error::{KpError, Result};

fn plan(n: usize, dir: FftDirection) -> Arc<dyn Fft<f64>> {
    static PLANNER: OnceLock<Mutex<FftPlanner<f64>>> = OnceLock::new();
    let planner = PLANNER.get_or_init(|| Mutex::new(FftPlanner::new()));
    let mut p = planner.lock().unwrap_or_else(|e| e.into_inner());
    p.plan_fft(n, dir)
}

fn transform_axis(data: &mut [Complex64], dims: [usize; 3], axis: usize, dir: FftDirection) {
    let n = dims[axis];
    let fft = plan(n, dir);
    let mut scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
    if axis == 2 {
        fft.process_with_scratch(data, &mut scratch);
        return;
    }
    let stride: usize = dims[axis + 1..].iter().product();
    let outer: usize = dims[..axis].iter().product();
    let lines = data.len() / n;
    let mut buf = vec![Complex64::new(0.0, 0.0); data.len()];
    let mut line = 0;
    for o in 0..outer {
        for s in 0..stride {
            let base = o * n * stride + s;
            for j in 0..n {
                buf[line * n + j] = data[base + j * stride];
            }
            line += 1;
        }
    }
    debug_assert_eq!(line, lines);
    fft.process_with_scratch(&mut buf, &mut scratch);
    line = 0;
    for o in 0..outer {
        for s in 0..stride {
            let base = o * n * stride + s;
            for j in 0..n {
                data[base + j * stride] = buf[line * n + j];
            }
            line += 1;
        }
    }
}

/// In-place unitary DFT; `inverse` selects the `e^{+i}` kernel.
pub fn fft3_inplace(data: &mut [Complex64], grid: &GridSpec, inverse: bool) {
    let dims = grid.dims();
    assert_eq!(data.len(), grid.len());
    let dir = if inverse { FftDirection::Inverse } else { FftDirection::Forward };
    for axis in 0..3 {
        transform_axis(data, dims, axis, dir);
    }
    let s = 1.0 / (grid.len() as f64).sqrt();
    for v in data.iter_mut() {
        *v *= s;
    }
}

/// Complex samples of the field on the space grid.
pub fn to_physical_complex(u: &SpectralField) -> Vec<Complex64> {
    let mut d = u.coeff.clone();
    fft3_inplace(&mut d, &u.grid, true);
    d
}

/// Spectral field of complex samples; the `xi = 0` plane is removed.
pub fn from_physical_complex(grid: &GridSpec, samples: Vec<Complex64>, real_flag: bool) -> SpectralField {
    let mut d = samples;
    fft3_inplace(&mut d, grid, false);
    let plane = grid.modes_y1 * grid.modes_y2;
    for c in d[..plane].iter_mut() {
        *c = Complex64::new(0.0, 0.0);
    }
    SpectralField { grid: grid.clone(), coeff: d, real_flag }
}

const MEAN_TOL: f64 = 1e-10;

pub fn forward_transform(f: &PhysicalField) -> Result<SpectralField> {
    f.grid.validate()?;
    if f.samples.len() != f.grid.len() {
        return Err(KpError::Config(format!(
            "sample count {} does not match grid modes {}",
            f.samples.len(),
            f.grid.len()
        )));
    }
    let defect = f.x_mean_defect();
    if defect > MEAN_TOL {
        return Err(KpError::Domain(format!("x-mean of the field is {defect:e} of its peak")));
    }
    let samples = f.samples.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    Ok(from_physical_complex(&f.grid, samples, true))
}

/// Real part of the synthesized samples.
pub fn inverse_transform(u: &SpectralField) -> PhysicalField {
    let d = to_physical_complex(u);
    PhysicalField { grid: u.grid.clone(), samples: d.iter().map(|c| c.re).collect() }
}

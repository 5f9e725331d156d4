use num_complex::Complex64;
use rayon::prelude::*;

use super::grid::GridSpec;
use crate::error::{KpError, Result};

/// Fourier coefficients `u_hat(xi, eta)` on a [`GridSpec`] lattice, stored in
/// FFT order, k_x-major. Coefficients are those of the unitary DFT of the
/// sample array.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralField {
    pub grid: GridSpec,
    pub coeff: Vec<Complex64>,
    pub real_flag: bool,
}

/// Samples of a real field on the uniform space grid, same layout as
/// [`SpectralField::coeff`].
#[derive(Clone, Debug, PartialEq)]
pub struct PhysicalField {
    pub grid: GridSpec,
    pub samples: Vec<f64>,
}

const HERMITIAN_TOL: f64 = 1e-12;

impl SpectralField {
    pub fn zeros(grid: &GridSpec, real_flag: bool) -> Self {
        SpectralField { grid: grid.clone(), coeff: vec![Complex64::new(0.0, 0.0); grid.len()], real_flag }
    }

    /// Field with `coeff = f(xi, eta)`; the `xi = 0` plane is left at zero.
    pub fn from_fn<F>(grid: &GridSpec, real_flag: bool, f: F) -> Self
    where
        F: Fn(f64, [f64; 2]) -> Complex64 + Sync,
    {
        let coeff = (0..grid.len())
            .into_par_iter()
            .map(|idx| {
                let (xi, eta) = grid.frequency(idx);
                if xi == 0.0 {
                    Complex64::new(0.0, 0.0)
                } else {
                    f(xi, eta)
                }
            })
            .collect();
        SpectralField { grid: grid.clone(), coeff, real_flag }
    }

    pub fn with_coeff(&self, coeff: Vec<Complex64>) -> Self {
        debug_assert_eq!(coeff.len(), self.coeff.len());
        SpectralField { grid: self.grid.clone(), coeff, real_flag: self.real_flag }
    }

    pub fn mode(&self, k: [i64; 3]) -> Option<Complex64> {
        self.grid.mode_index(k).map(|i| self.coeff[i])
    }

    pub fn set_mode(&mut self, k: [i64; 3], value: Complex64) -> Result<()> {
        let idx = self
            .grid
            .mode_index(k)
            .ok_or_else(|| KpError::Config(format!("mode {k:?} is not on the grid")))?;
        if k[0] == 0 && value != Complex64::new(0.0, 0.0) {
            return Err(KpError::Domain("the xi = 0 plane is identically zero".into()));
        }
        self.coeff[idx] = value;
        Ok(())
    }

    /// `sum |c|^2` without the cell volume.
    pub fn coeff_energy(&self) -> f64 {
        self.coeff.iter().map(|c| c.norm_sqr()).sum()
    }

    /// Continuum `||u||_{L^2(box)}^2`.
    pub fn mass(&self) -> f64 {
        self.grid.cell_volume() * self.coeff_energy()
    }

    pub fn l2_norm(&self) -> f64 {
        self.mass().sqrt()
    }

    /// Continuum `L^2` distance to `other` (same grid).
    pub fn l2_distance(&self, other: &SpectralField) -> f64 {
        let s: f64 = self.coeff.iter().zip(&other.coeff).map(|(a, b)| (a - b).norm_sqr()).sum();
        (self.grid.cell_volume() * s).sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.coeff.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    pub fn scaled(&self, a: f64) -> Self {
        self.with_coeff(self.coeff.iter().map(|c| c * a).collect())
    }

    pub fn add(&self, other: &SpectralField) -> Self {
        self.with_coeff(self.coeff.iter().zip(&other.coeff).map(|(a, b)| a + b).collect())
    }

    pub fn sub(&self, other: &SpectralField) -> Self {
        self.with_coeff(self.coeff.iter().zip(&other.coeff).map(|(a, b)| a - b).collect())
    }

    /// `self += a * other`.
    pub fn axpy(&mut self, a: Complex64, other: &SpectralField) {
        for (s, o) in self.coeff.iter_mut().zip(&other.coeff) {
            *s += a * o;
        }
    }

    /// Zero the Nyquist planes and, if dealiasing is on, every masked mode.
    pub fn band_limit(&mut self) {
        for idx in 0..self.coeff.len() {
            if !self.grid.retained(idx) {
                self.coeff[idx] = Complex64::new(0.0, 0.0);
            }
        }
    }

    /// Energy on the `xi = 0` plane relative to the total.
    pub fn x_mean_defect(&self) -> f64 {
        let plane = self.grid.modes_y1 * self.grid.modes_y2;
        let e0: f64 = self.coeff[..plane].iter().map(|c| c.norm_sqr()).sum();
        let tot = self.coeff_energy();
        if tot == 0.0 {
            0.0
        } else {
            (e0 / tot).sqrt()
        }
    }

    /// Largest `|c(-k) - conj c(k)|` relative to the peak coefficient, over
    /// modes whose negation is representable.
    pub fn hermitian_defect(&self) -> f64 {
        let peak = self.max_abs();
        if peak == 0.0 {
            return 0.0;
        }
        let mut worst: f64 = 0.0;
        for idx in 0..self.coeff.len() {
            let k = self.grid.wavenumbers(idx);
            if let Some(j) = self.grid.mode_index([-k[0], -k[1], -k[2]]) {
                worst = worst.max((self.coeff[j] - self.coeff[idx].conj()).norm());
            }
        }
        worst / peak
    }

    /// Checks the zero-x-mean and, for real fields, Hermitian invariants.
    pub fn validate(&self) -> Result<()> {
        self.grid.validate()?;
        if self.coeff.len() != self.grid.len() {
            return Err(KpError::Config(format!(
                "coefficient count {} does not match grid size {}",
                self.coeff.len(),
                self.grid.len()
            )));
        }
        let plane = self.grid.modes_y1 * self.grid.modes_y2;
        if self.coeff[..plane].iter().any(|c| *c != Complex64::new(0.0, 0.0)) {
            return Err(KpError::Domain("xi = 0 plane must vanish".into()));
        }
        if self.real_flag {
            let d = self.hermitian_defect();
            if d > HERMITIAN_TOL {
                return Err(KpError::Domain(format!("real field violates Hermitian symmetry by {d:e}")));
            }
        }
        Ok(())
    }

    /// Unconjugated pairing `sum_k c_a(k) c_b(-k)`, the discrete `int a b`
    /// up to the cell volume.
    pub fn bilinear_pairing(&self, other: &SpectralField) -> Complex64 {
        let mut s = Complex64::new(0.0, 0.0);
        for idx in 0..self.coeff.len() {
            let k = self.grid.wavenumbers(idx);
            if let Some(j) = self.grid.mode_index([-k[0], -k[1], -k[2]]) {
                s += self.coeff[idx] * other.coeff[j];
            }
        }
        s * self.grid.cell_volume()
    }
}

impl PhysicalField {
    pub fn zeros(grid: &GridSpec) -> Self {
        PhysicalField { grid: grid.clone(), samples: vec![0.0; grid.len()] }
    }

    /// Position of sample `idx`.
    pub fn position(grid: &GridSpec, idx: usize) -> [f64; 3] {
        let (ix, i1, i2) = grid.unindex(idx);
        [
            ix as f64 * grid.length_x / grid.modes_x as f64,
            i1 as f64 * grid.length_y1 / grid.modes_y1 as f64,
            i2 as f64 * grid.length_y2 / grid.modes_y2 as f64,
        ]
    }

    pub fn from_fn<F: Fn([f64; 3]) -> f64>(grid: &GridSpec, f: F) -> Self {
        let samples = (0..grid.len()).map(|i| f(Self::position(grid, i))).collect();
        PhysicalField { grid: grid.clone(), samples }
    }

    pub fn max_abs(&self) -> f64 {
        self.samples.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Largest |x-mean| over transverse positions, relative to the peak sample.
    pub fn x_mean_defect(&self) -> f64 {
        let g = &self.grid;
        let peak = self.max_abs();
        if peak == 0.0 {
            return 0.0;
        }
        let mut worst: f64 = 0.0;
        for i1 in 0..g.modes_y1 {
            for i2 in 0..g.modes_y2 {
                let m: f64 = (0..g.modes_x).map(|ix| self.samples[g.index(ix, i1, i2)]).sum::<f64>()
                    / g.modes_x as f64;
                worst = worst.max(m.abs());
            }
        }
        worst / peak
    }

    pub fn l2_norm(&self) -> f64 {
        (self.grid.cell_volume() * self.samples.iter().map(|v| v * v).sum::<f64>()).sqrt()
    }
}

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{KpError, Result};

/// Periodic box `[0,Lx) x [0,Ly1) x [0,Ly2)` with a uniform mode lattice.
///
/// Array index `i` along an axis with `n` modes carries the signed wavenumber
/// `i` for `i < n/2` and `i - n` otherwise; physical frequencies are the
/// wavenumbers times `2 pi / L`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub modes_x: usize,
    pub modes_y1: usize,
    pub modes_y2: usize,
    pub length_x: f64,
    pub length_y1: f64,
    pub length_y2: f64,
    pub dealias: bool,
}

pub fn signed_wavenumber(i: usize, n: usize) -> i64 {
    if i < n / 2 {
        i as i64
    } else {
        i as i64 - n as i64
    }
}

fn array_index(k: i64, n: usize) -> Option<usize> {
    let h = (n / 2) as i64;
    if k < -h || k >= h {
        return None;
    }
    Some(if k >= 0 { k as usize } else { (k + n as i64) as usize })
}

/// Exponent `e` with `2^e <= x < 2^(e+1)`, exact at powers of two.
pub fn shell_exponent(x: f64) -> i32 {
    debug_assert!(x > 0.0 && x.is_finite());
    let mut e = x.log2().floor() as i32;
    if 2f64.powi(e) > x {
        e -= 1;
    } else if 2f64.powi(e + 1) <= x {
        e += 1;
    }
    e
}

/// Returns `e` when `lam == 2^e` exactly.
pub fn dyadic_exponent(lam: f64) -> Result<i32> {
    if !(lam > 0.0 && lam.is_finite()) {
        return Err(KpError::Config(format!("dyadic scale must be positive, got {lam}")));
    }
    let e = shell_exponent(lam);
    if 2f64.powi(e) != lam {
        return Err(KpError::Config(format!("{lam} is not a power of two")));
    }
    Ok(e)
}

impl GridSpec {
    pub fn new(
        modes: [usize; 3],
        lengths: [f64; 3],
        dealias: bool,
    ) -> Result<Self> {
        let g = GridSpec {
            modes_x: modes[0],
            modes_y1: modes[1],
            modes_y2: modes[2],
            length_x: lengths[0],
            length_y1: lengths[1],
            length_y2: lengths[2],
            dealias,
        };
        g.validate()?;
        Ok(g)
    }

    /// Box of side `2 pi * scale` in every direction.
    pub fn cube(n: usize, scale: f64, dealias: bool) -> Result<Self> {
        Self::new([n, n, n], [2.0 * PI * scale; 3], dealias)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, n) in [("modes_x", self.modes_x), ("modes_y1", self.modes_y1), ("modes_y2", self.modes_y2)] {
            if n < 8 || n % 2 != 0 {
                return Err(KpError::Config(format!("{name} = {n}: mode counts must be even and >= 8")));
            }
        }
        for (name, l) in [("length_x", self.length_x), ("length_y1", self.length_y1), ("length_y2", self.length_y2)] {
            if !(l > 0.0 && l.is_finite()) {
                return Err(KpError::Config(format!("{name} = {l}: lengths must be positive")));
            }
        }
        Ok(())
    }

    pub fn dims(&self) -> [usize; 3] {
        [self.modes_x, self.modes_y1, self.modes_y2]
    }

    pub fn lengths(&self) -> [f64; 3] {
        [self.length_x, self.length_y1, self.length_y2]
    }

    pub fn len(&self) -> usize {
        self.modes_x * self.modes_y1 * self.modes_y2
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn dxi(&self) -> f64 {
        2.0 * PI / self.length_x
    }

    pub fn deta(&self) -> [f64; 2] {
        [2.0 * PI / self.length_y1, 2.0 * PI / self.length_y2]
    }

    pub fn volume(&self) -> f64 {
        self.length_x * self.length_y1 * self.length_y2
    }

    /// Physical volume per sample; the continuum L^2 norm of a field is
    /// `sqrt(cell_volume * sum |c|^2)` for unitary coefficients `c`.
    pub fn cell_volume(&self) -> f64 {
        self.volume() / self.len() as f64
    }

    #[inline]
    pub fn index(&self, ix: usize, i1: usize, i2: usize) -> usize {
        (ix * self.modes_y1 + i1) * self.modes_y2 + i2
    }

    #[inline]
    pub fn unindex(&self, idx: usize) -> (usize, usize, usize) {
        let i2 = idx % self.modes_y2;
        let r = idx / self.modes_y2;
        (r / self.modes_y1, r % self.modes_y1, i2)
    }

    pub fn wavenumbers(&self, idx: usize) -> [i64; 3] {
        let (ix, i1, i2) = self.unindex(idx);
        [
            signed_wavenumber(ix, self.modes_x),
            signed_wavenumber(i1, self.modes_y1),
            signed_wavenumber(i2, self.modes_y2),
        ]
    }

    /// Array index of the mode with integer wavenumbers `k`, if representable.
    pub fn mode_index(&self, k: [i64; 3]) -> Option<usize> {
        let ix = array_index(k[0], self.modes_x)?;
        let i1 = array_index(k[1], self.modes_y1)?;
        let i2 = array_index(k[2], self.modes_y2)?;
        Some(self.index(ix, i1, i2))
    }

    /// Physical frequency `(xi, eta)` of the mode at `idx`.
    pub fn frequency(&self, idx: usize) -> (f64, [f64; 2]) {
        let k = self.wavenumbers(idx);
        let d = self.deta();
        (k[0] as f64 * self.dxi(), [k[1] as f64 * d[0], k[2] as f64 * d[1]])
    }

    pub fn xi_table(&self) -> Vec<f64> {
        (0..self.modes_x).map(|i| signed_wavenumber(i, self.modes_x) as f64 * self.dxi()).collect()
    }

    pub fn eta_tables(&self) -> [Vec<f64>; 2] {
        let d = self.deta();
        [
            (0..self.modes_y1).map(|i| signed_wavenumber(i, self.modes_y1) as f64 * d[0]).collect(),
            (0..self.modes_y2).map(|i| signed_wavenumber(i, self.modes_y2) as f64 * d[1]).collect(),
        ]
    }

    pub fn is_nyquist(&self, idx: usize) -> bool {
        let (ix, i1, i2) = self.unindex(idx);
        ix == self.modes_x / 2 || i1 == self.modes_y1 / 2 || i2 == self.modes_y2 / 2
    }

    /// Two-thirds rule: a mode survives iff `3|k| < n` on every axis.
    /// Without dealiasing every mode except the Nyquist planes survives.
    pub fn retained(&self, idx: usize) -> bool {
        let k = self.wavenumbers(idx);
        let n = self.dims();
        if self.dealias {
            (0..3).all(|a| 3 * k[a].unsigned_abs() < n[a] as u64)
        } else {
            !self.is_nyquist(idx)
        }
    }

    /// Dyadic exponents `e` whose shells `[2^e, 2^(e+1))` contain lattice frequencies.
    pub fn dyadic_range(&self) -> (i32, i32) {
        let lo = shell_exponent(self.dxi());
        let top = (self.modes_x / 2) as f64 * self.dxi();
        (lo, shell_exponent(top))
    }

    /// Same lattice with lengths scaled by `(1/lam, 1/lam^2, 1/lam^2)`.
    pub fn rescaled(&self, lam: f64) -> GridSpec {
        GridSpec {
            length_x: self.length_x / lam,
            length_y1: self.length_y1 / (lam * lam),
            length_y2: self.length_y2 / (lam * lam),
            ..self.clone()
        }
    }
}

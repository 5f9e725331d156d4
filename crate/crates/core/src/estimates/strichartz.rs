use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{KpError, Result};
use crate::quad::gauss_legendre;
use crate::spectral::{apply_linear_propagator, to_physical_complex, SpectralField};

/// Scaling line of an admissible Strichartz pair.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum StrichartzFamily {
    /// `2/p + 3/q = 3/2`, `2 <= p <= inf`, derivative `|D_x|^{1/(3p)}`.
    Dispersive,
    /// `1/p + 1/q = 1/2`, `2 <= q < inf`, derivative `|D_x|^{2/p}`.
    Transversal,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StrichartzRatio {
    pub family: StrichartzFamily,
    pub s: f64,
    pub numerator: f64,
    pub denominator: f64,
    pub ratio: f64,
}

const ADMISSIBLE_TOL: f64 = 1e-12;

fn inv(x: f64) -> f64 {
    if x.is_infinite() {
        0.0
    } else {
        1.0 / x
    }
}

/// Family and derivative order of `(p, q)`, or a precondition error naming
/// both lines.
pub fn strichartz_family(p: f64, q: f64) -> Result<(StrichartzFamily, f64)> {
    if p >= 2.0 && (2.0 * inv(p) + 3.0 * inv(q) - 1.5).abs() < ADMISSIBLE_TOL {
        return Ok((StrichartzFamily::Dispersive, inv(p) / 3.0));
    }
    if q >= 2.0 && q.is_finite() && (inv(p) + inv(q) - 0.5).abs() < ADMISSIBLE_TOL {
        return Ok((StrichartzFamily::Transversal, 2.0 * inv(p)));
    }
    Err(KpError::Precondition(format!(
        "(p, q) = ({p}, {q}) is not admissible: need 2/p + 3/q = 3/2 with p >= 2, or 1/p + 1/q = 1/2 with 2 <= q < inf"
    )))
}

/// `||f||_{L^q}` of the synthesized samples.
pub fn lq_norm(u: &SpectralField, q: f64) -> f64 {
    let s = to_physical_complex(u);
    if q.is_infinite() {
        return s.iter().map(|c| c.norm()).fold(0.0, f64::max);
    }
    let cv = u.grid.cell_volume();
    (cv * s.iter().map(|c| c.norm().powf(q)).sum::<f64>()).powf(1.0 / q)
}

/// `|| |D_x|^s u ||_2`.
pub fn dx_sobolev_norm(u: &SpectralField, s: f64) -> f64 {
    let xs = u.grid.xi_table();
    let plane = u.grid.modes_y1 * u.grid.modes_y2;
    let e: f64 = u
        .coeff
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let xi = xs[i / plane].abs();
            if xi == 0.0 {
                0.0
            } else {
                xi.powf(2.0 * s) * c.norm_sqr()
            }
        })
        .sum();
    (u.grid.cell_volume() * e).sqrt()
}

/// `||S(t) u0||_{L^p_t([0,T]) L^q} / || |D_x|^s u0 ||_2` with Gauss-Legendre
/// quadrature in time (`p = inf` takes the maximum over the nodes).
pub fn strichartz_ratio(u0: &SpectralField, p: f64, q: f64, horizon: f64, time_nodes: usize) -> Result<StrichartzRatio> {
    let (family, s) = strichartz_family(p, q)?;
    if !(horizon > 0.0) {
        return Err(KpError::Config(format!("horizon T = {horizon} must be positive")));
    }
    let denominator = dx_sobolev_norm(u0, s);
    if denominator == 0.0 {
        return Err(KpError::Precondition("u0 must be nonzero".into()));
    }
    let (t, w) = gauss_legendre(time_nodes, 0.0, horizon);
    let vals: Vec<f64> = t.par_iter().map(|&ti| lq_norm(&apply_linear_propagator(u0, ti), q)).collect();
    let numerator = if p.is_infinite() {
        vals.iter().cloned().fold(0.0, f64::max)
    } else {
        vals.iter().zip(&w).map(|(v, wi)| wi * v.powf(p)).sum::<f64>().powf(1.0 / p)
    };
    Ok(StrichartzRatio { family, s, numerator, denominator, ratio: numerator / denominator })
}

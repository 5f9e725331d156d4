//! Nonlinear evolution, the Duhamel integral, Picard iteration and the
//! bilinear projections `T_L`.

mod duhamel;
mod picard;
mod tl;

pub use duhamel::{cumulative_weights, duhamel_integral, duhamel_trace};
pub use picard::{
    picard_iterate, picard_iterate_with, x_surrogate, PicardOptions, PicardReport, XSurrogate, DEFAULT_SMALLNESS,
};
pub use tl::{
    apply_tl, max_level, pair_slope, product_direct, tl_decomposition, MultiplierProfile, TlProduct,
    MAX_TL_MODES,
};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::decomposition::{SpaceTimeTrace, Window};
use crate::error::{KpError, Result};
use crate::spectral::transform::fft3_inplace;
use crate::spectral::{omega_table, GridSpec, SpectralField};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Integrator {
    /// Integrating factor with the classical four-stage Runge-Kutta scheme
    /// (Lawson form): the linear group is applied exactly.
    #[default]
    IfRk4,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub grid: GridSpec,
    pub dt: f64,
    pub horizon: f64,
    /// Trace samples per unit time; `1 / (samples_per_unit * dt)` must be an integer.
    pub samples_per_unit: f64,
    #[serde(default)]
    pub integrator: Integrator,
    /// Factor in front of the nonlinearity; 0 gives the linear flow.
    #[serde(default = "unit")]
    pub alpha: f64,
}

fn unit() -> f64 {
    1.0
}

/// Advective Courant number above which a step is rejected.
pub const CFL_LIMIT: f64 = 2.5;
/// Mass growth factor treated as blow-up.
pub const BLOWUP_FACTOR: f64 = 1e6;

impl SimConfig {
    pub fn new(grid: GridSpec, dt: f64, horizon: f64, samples_per_unit: f64) -> Result<Self> {
        let c = SimConfig { grid, dt, horizon, samples_per_unit, integrator: Integrator::IfRk4, alpha: 1.0 };
        c.validate()?;
        Ok(c)
    }

    /// Same run sampled at every step.
    pub fn every_step(&self) -> Self {
        SimConfig { samples_per_unit: 1.0 / self.dt, ..self.clone() }
    }

    pub fn validate(&self) -> Result<()> {
        self.grid.validate()?;
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(KpError::Config(format!("dt = {} must be positive", self.dt)));
        }
        if !(self.horizon >= self.dt * (1.0 - 1e-12)) {
            return Err(KpError::Config(format!("horizon {} must be at least dt = {}", self.horizon, self.dt)));
        }
        if self.alpha != 0.0 && !self.grid.dealias {
            return Err(KpError::Config("nonlinear runs need a dealiased grid".into()));
        }
        self.layout().map(|_| ())
    }

    /// `(steps, stride)`: total step count and steps between samples.
    pub fn layout(&self) -> Result<(usize, usize)> {
        let steps = integral(self.horizon / self.dt, "horizon / dt")?;
        if !(self.samples_per_unit > 0.0) {
            return Err(KpError::Config("samples_per_unit must be positive".into()));
        }
        let stride = integral(1.0 / (self.samples_per_unit * self.dt), "1 / (samples_per_unit * dt)")?;
        if stride == 0 || steps % stride != 0 {
            return Err(KpError::Config(format!("{steps} steps are not a multiple of the sample stride {stride}")));
        }
        Ok((steps, stride))
    }

    pub fn sample_times(&self) -> Result<Vec<f64>> {
        let (steps, stride) = self.layout()?;
        Ok((0..=steps / stride).map(|j| (j * stride) as f64 * self.dt).collect())
    }
}

fn integral(x: f64, what: &str) -> Result<usize> {
    let r = x.round();
    if !x.is_finite() || r < 0.0 || (x - r).abs() > 1e-9 * r.max(1.0) {
        return Err(KpError::Config(format!("{what} = {x} must be a nonnegative integer")));
    }
    Ok(r as usize)
}

/// `(-d_x(u^2))^` together with `sup |u|` on the space grid. The square is
/// formed on the complex samples, masked by the grid's retention rule and the
/// `xi = 0` plane is cleared.
fn nonlinear_term(u: &SpectralField) -> (SpectralField, f64) {
    let g = &u.grid;
    let mut d = u.coeff.clone();
    fft3_inplace(&mut d, g, true);
    let mut sup: f64 = 0.0;
    for v in d.iter_mut() {
        sup = sup.max(v.norm());
        *v = *v * *v;
    }
    fft3_inplace(&mut d, g, false);
    let xs = g.xi_table();
    let plane = g.modes_y1 * g.modes_y2;
    for (idx, c) in d.iter_mut().enumerate() {
        let xi = xs[idx / plane];
        *c = if xi == 0.0 || !g.retained(idx) { Complex64::new(0.0, 0.0) } else { *c * Complex64::new(0.0, -xi) };
    }
    (u.with_coeff(d), sup)
}

/// Spectral representation of `-d_x(u^2)`.
pub fn nonlinearity(u: &SpectralField) -> SpectralField {
    nonlinear_term(u).0
}

/// Counters gathered during [`evolve`].
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct EvolveDiagnostics {
    pub steps: usize,
    pub mass_initial: f64,
    pub mass_final: f64,
    pub max_courant: f64,
}

impl EvolveDiagnostics {
    pub fn mass_drift(&self) -> f64 {
        if self.mass_initial == 0.0 {
            0.0
        } else {
            (self.mass_final - self.mass_initial).abs() / self.mass_initial
        }
    }
}

struct Stepper {
    half: Vec<Complex64>,
    full: Vec<Complex64>,
    h: f64,
    alpha: f64,
    xi_max: f64,
}

impl Stepper {
    fn new(grid: &GridSpec, h: f64, alpha: f64) -> Self {
        let om = omega_table(grid);
        let xi_max = grid.xi_table().iter().fold(0.0f64, |m, x| m.max(x.abs()));
        Stepper {
            half: om.iter().map(|&w| Complex64::from_polar(1.0, 0.5 * h * w)).collect(),
            full: om.iter().map(|&w| Complex64::from_polar(1.0, h * w)).collect(),
            h,
            alpha,
            xi_max,
        }
    }

    fn rhs(&self, u: &SpectralField, courant: &mut f64) -> SpectralField {
        let (mut n, sup) = nonlinear_term(u);
        *courant = courant.max(2.0 * self.alpha.abs() * sup * self.xi_max * self.h);
        n.coeff.iter_mut().for_each(|c| *c *= self.alpha);
        n
    }

    /// One Lawson step; returns the new state and the stage Courant number.
    fn step(&self, u: &SpectralField) -> (SpectralField, f64) {
        let h = self.h;
        let mut cr = 0.0;
        if self.alpha == 0.0 {
            return (u.with_coeff(u.coeff.iter().zip(&self.full).map(|(c, e)| c * e).collect()), 0.0);
        }
        let a = self.rhs(u, &mut cr);
        let ua = u.with_coeff(
            u.coeff.iter().zip(&a.coeff).zip(&self.half).map(|((c, k), e)| (c + 0.5 * h * k) * e).collect(),
        );
        let b = self.rhs(&ua, &mut cr);
        let ub = u.with_coeff(
            u.coeff.iter().zip(&b.coeff).zip(&self.half).map(|((c, k), e)| c * e + 0.5 * h * k).collect(),
        );
        let c = self.rhs(&ub, &mut cr);
        let uc = u.with_coeff(
            u.coeff
                .iter()
                .zip(&c.coeff)
                .zip(self.half.iter().zip(&self.full))
                .map(|((x, k), (eh, ef))| x * ef + h * eh * k)
                .collect(),
        );
        let d = self.rhs(&uc, &mut cr);
        let out = (0..u.coeff.len())
            .map(|i| {
                let (eh, ef) = (self.half[i], self.full[i]);
                u.coeff[i] * ef + h / 6.0 * (ef * a.coeff[i] + 2.0 * eh * (b.coeff[i] + c.coeff[i]) + d.coeff[i])
            })
            .collect();
        (u.with_coeff(out), cr)
    }
}

/// Nonlinear flow sampled per the configuration.
pub fn evolve(u0: &SpectralField, cfg: &SimConfig) -> Result<SpaceTimeTrace> {
    evolve_report(u0, cfg).map(|(tr, _)| tr)
}

/// [`evolve`] with step counters. A step whose advective Courant number
/// exceeds [`CFL_LIMIT`], or a non-finite or exploding mass, stops the run
/// with a blow-up diagnostic.
pub fn evolve_report(u0: &SpectralField, cfg: &SimConfig) -> Result<(SpaceTimeTrace, EvolveDiagnostics)> {
    cfg.validate()?;
    if u0.grid != cfg.grid {
        return Err(KpError::Config("datum grid differs from the configured grid".into()));
    }
    let (steps, stride) = cfg.layout()?;
    let mut u = u0.clone();
    u.band_limit();
    let st = Stepper::new(&cfg.grid, cfg.dt, cfg.alpha);
    let m0 = u.mass();
    let mut diag = EvolveDiagnostics { steps, mass_initial: m0, ..Default::default() };
    let mut times = vec![0.0];
    let mut states = vec![u.clone()];
    for n in 0..steps {
        let t = n as f64 * cfg.dt;
        let (next, cr) = st.step(&u);
        diag.max_courant = diag.max_courant.max(cr);
        if cr > CFL_LIMIT {
            return Err(KpError::BlowUp {
                time: t,
                cause: format!("step rejected: advective Courant number {cr:.3} exceeds {CFL_LIMIT}"),
            });
        }
        let m = next.mass();
        if !m.is_finite() || m > BLOWUP_FACTOR * m0.max(f64::MIN_POSITIVE) {
            return Err(KpError::BlowUp { time: t + cfg.dt, cause: format!("mass {m:e} from {m0:e}") });
        }
        u = next;
        if (n + 1) % stride == 0 {
            times.push((n + 1) as f64 * cfg.dt);
            states.push(u.clone());
        }
    }
    diag.mass_final = u.mass();
    Ok((SpaceTimeTrace::new(times, states, Window::None)?, diag))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{gaussian_derivative, random_real_field};
    use crate::rng::member_rng;
    use crate::spectral::apply_linear_propagator;

    fn grid() -> GridSpec {
        GridSpec::cube(16, 1.0, true).unwrap()
    }

    #[test]
    fn zero_datum_stays_zero() {
        let g = grid();
        let cfg = SimConfig::new(g.clone(), 0.01, 0.1, 50.0).unwrap();
        let tr = evolve(&SpectralField::zeros(&g, true), &cfg).unwrap();
        assert_eq!(tr.len(), 6);
        assert!(tr.states.iter().all(|s| s.coeff_energy() == 0.0));
    }

    #[test]
    fn cosine_mode_square() {
        let g = GridSpec::cube(16, 1.0, true).unwrap();
        let mut u = SpectralField::zeros(&g, true);
        u.set_mode([2, 1, 0], Complex64::new(1.0, 0.0)).unwrap();
        u.set_mode([-2, -1, 0], Complex64::new(1.0, 0.0)).unwrap();
        let n = nonlinearity(&u);
        for idx in 0..g.len() {
            let k = g.wavenumbers(idx);
            if k != [4, 2, 0] && k != [-4, -2, 0] {
                assert!(n.coeff[idx].norm() < 1e-14, "{k:?}");
            }
        }
        let (xi, _) = g.frequency(g.mode_index([4, 2, 0]).unwrap());
        let want = Complex64::new(0.0, -xi) / (g.len() as f64).sqrt();
        assert!((n.mode([4, 2, 0]).unwrap() - want).norm() < 1e-14);
    }

    #[test]
    fn linear_limit_is_exact() {
        let g = grid();
        let u0 = random_real_field(&g, &mut member_rng(2, 0), [4, 4, 4]);
        let mut cfg = SimConfig::new(g, 0.01, 0.2, 50.0).unwrap();
        cfg.alpha = 0.0;
        let tr = evolve(&u0, &cfg).unwrap();
        for (t, s) in tr.times.iter().zip(&tr.states) {
            assert!(s.l2_distance(&apply_linear_propagator(&u0, *t)) < 1e-12 * u0.l2_norm());
        }
    }

    #[test]
    fn rejects_bad_layout() {
        assert!(SimConfig::new(grid(), 0.01, 0.1, 30.0).is_err());
        assert!(SimConfig::new(GridSpec::cube(16, 1.0, false).unwrap(), 0.01, 0.1, 50.0).is_err());
    }

    #[test]
    fn large_datum_is_rejected() {
        let g = grid();
        let u0 = gaussian_derivative(&g, [0.5; 3], [0.0; 3], 1e4);
        let cfg = SimConfig::new(g, 0.01, 0.1, 10.0).unwrap();
        assert!(matches!(evolve(&u0, &cfg), Err(KpError::BlowUp { .. })));
    }
}

use serde::{Deserialize, Serialize};

use crate::error::{KpError, Result};
use crate::spectral::{apply_linear_propagator, SpectralField};

/// Time taper used by the transform-based norms.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum Window {
    /// Unit weights; the samples are taken as they are.
    #[default]
    None,
    /// `sin^2` taper over the sample span, normalized to unit discrete `L^2_t`.
    Hann,
}

/// Sampled trajectory `{t_n, u(t_n)}` on one grid.
#[derive(Clone, Debug)]
pub struct SpaceTimeTrace {
    pub times: Vec<f64>,
    pub states: Vec<SpectralField>,
    pub window: Window,
}

const UNIFORM_TOL: f64 = 1e-9;

impl SpaceTimeTrace {
    pub fn new(times: Vec<f64>, states: Vec<SpectralField>, window: Window) -> Result<Self> {
        if times.len() != states.len() || times.is_empty() {
            return Err(KpError::Config(format!(
                "trace needs equally many times and states, got {} and {}",
                times.len(),
                states.len()
            )));
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(KpError::Config("trace times must be strictly increasing".into()));
        }
        if states.iter().any(|s| s.grid != states[0].grid) {
            return Err(KpError::Config("all trace states must share one grid".into()));
        }
        Ok(SpaceTimeTrace { times, states, window })
    }

    /// Exact linear solution `S(t) u0` sampled at `times`.
    pub fn linear(u0: &SpectralField, times: Vec<f64>, window: Window) -> Result<Self> {
        let states = times.iter().map(|&t| apply_linear_propagator(u0, t)).collect();
        Self::new(times, states, window)
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Common step of a uniform grid.
    pub fn uniform_dt(&self) -> Result<f64> {
        if self.times.len() < 2 {
            return Err(KpError::Precondition("a uniform time grid needs at least 2 samples".into()));
        }
        let dt = (self.times[self.times.len() - 1] - self.times[0]) / (self.times.len() - 1) as f64;
        for w in self.times.windows(2) {
            if ((w[1] - w[0]) - dt).abs() > UNIFORM_TOL * dt.abs().max(1.0) {
                return Err(KpError::Precondition("time samples are not uniformly spaced".into()));
            }
        }
        Ok(dt)
    }

    /// Taper weights for the samples.
    pub fn weights(&self) -> Result<Vec<f64>> {
        let n = self.times.len();
        match self.window {
            Window::None => Ok(vec![1.0; n]),
            Window::Hann => {
                let dt = self.uniform_dt()?;
                let span = dt * n as f64;
                let raw: Vec<f64> = (0..n)
                    .map(|i| (std::f64::consts::PI * (i as f64 + 0.5) * dt / span).sin().powi(2))
                    .collect();
                let l2: f64 = (dt * raw.iter().map(|w| w * w).sum::<f64>()).sqrt();
                Ok(raw.into_iter().map(|w| w / l2).collect())
            }
        }
    }

    /// Pullbacks `S(-t_n) u(t_n)`.
    pub fn pullbacks(&self) -> Vec<SpectralField> {
        self.times.iter().zip(&self.states).map(|(&t, u)| apply_linear_propagator(u, -t)).collect()
    }

    /// `sup_n ||u(t_n)||_2`.
    pub fn sup_l2(&self) -> f64 {
        self.states.iter().map(|s| s.l2_norm()).fold(0.0, f64::max)
    }

    /// `sup_n ||u(t_n) - v(t_n)||_2` against a trace on the same samples.
    pub fn sup_l2_gap(&self, other: &SpaceTimeTrace) -> f64 {
        self.states.iter().zip(&other.states).map(|(a, b)| a.l2_distance(b)).fold(0.0, f64::max)
    }
}

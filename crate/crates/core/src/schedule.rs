//! Layer angle schedules.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    pub p: usize,
    /// Time step of the discretized anneal, zero for free-form schedules.
    pub delta_t: f64,
    pub gammas: Vec<f64>,
    pub betas: Vec<f64>,
}

impl Schedule {
    pub fn new(gammas: Vec<f64>, betas: Vec<f64>) -> Result<Self> {
        if gammas.len() != betas.len() {
            return Err(Error::LengthMismatch { expected: gammas.len(), actual: betas.len() });
        }
        Ok(Self { p: gammas.len(), delta_t: 0.0, gammas, betas })
    }

    /// Linear anneal of `p` steps of size `delta_t`, sampled at step midpoints.
    pub fn fixed_angles(p: usize, delta_t: f64) -> Result<Self> {
        if p == 0 {
            return Err(Error::InvalidArgument("fixed-angle schedule needs p >= 1".into()));
        }
        if !(delta_t > 0.0 && delta_t.is_finite()) {
            return Err(Error::InvalidArgument(format!("delta_t must be positive, got {delta_t}")));
        }
        let s = |j: usize| (2 * j - 1) as f64 / (2 * p) as f64;
        Ok(Self {
            p,
            delta_t,
            gammas: (1..=p).map(|j| s(j) * delta_t).collect(),
            betas: (1..=p).map(|j| (1.0 - s(j)) * delta_t).collect(),
        })
    }

    /// Total anneal time `p * delta_t`.
    pub fn total_time(&self) -> f64 {
        self.p as f64 * self.delta_t
    }

    /// `[gamma_1 .. gamma_p, beta_1 .. beta_p]` divided by the per-family units.
    pub fn to_params(&self, gamma_unit: f64, beta_unit: f64) -> Vec<f64> {
        self.gammas.iter().map(|g| g / gamma_unit).chain(self.betas.iter().map(|b| b / beta_unit)).collect()
    }

    /// Inverse of [`Self::to_params`]; keeps `delta_t` from `self`.
    pub fn with_params(&self, params: &[f64], gamma_unit: f64, beta_unit: f64) -> Result<Self> {
        if params.len() != 2 * self.p {
            return Err(Error::LengthMismatch { expected: 2 * self.p, actual: params.len() });
        }
        let (g, b) = params.split_at(self.p);
        Ok(Self {
            p: self.p,
            delta_t: self.delta_t,
            gammas: g.iter().map(|v| v * gamma_unit).collect(),
            betas: b.iter().map(|v| v * beta_unit).collect(),
        })
    }
}

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::Grid;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    /// `S(dt/2)`, RK4 on the nonlinearity, `S(dt/2)`, then the noise increment.
    Strang,
    /// `S(dt) [u + dt N(u)]` plus the noise increment.
    ExpEuler,
}

impl Scheme {
    pub fn name(self) -> &'static str {
        match self {
            Scheme::Strang => "strang",
            Scheme::ExpEuler => "exp-euler",
        }
    }
}

/// Full description of a single-trajectory run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    /// Nonlinearity power, 2 (mKdV) or 3.
    pub k: u32,
    /// +1 focusing, -1 defocusing.
    pub mu: i32,
    pub n: usize,
    pub length: f64,
    pub dt: f64,
    pub horizon: f64,
    pub scheme: Scheme,
    /// Oversampling of the dealiased product grid.
    pub pad_factor: usize,
    pub seed: u64,
    pub save_every: usize,
    /// Courant constant for the transport-like nonlinear substep.
    pub cfl: f64,
    /// Switch the nonlinearity off to get the linear (Airy + noise) flow.
    pub nonlinear: bool,
}

impl SimConfig {
    pub fn new(k: u32, n: usize, length: f64, dt: f64, horizon: f64) -> Self {
        SimConfig {
            k,
            mu: 1,
            n,
            length,
            dt,
            horizon,
            scheme: Scheme::Strang,
            pad_factor: default_pad_factor(k),
            seed: 0,
            save_every: 1,
            cfl: 1.0,
            nonlinear: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        check_power(self.k)?;
        if self.mu != 1 && self.mu != -1 {
            return Err(Error::invalid("mu", format!("must be +1 or -1, got {}", self.mu)));
        }
        if self.n < 8 || self.n % 2 != 0 {
            return Err(Error::invalid("n", format!("need an even count >= 8, got {}", self.n)));
        }
        if !(self.length > 0.0) || !self.length.is_finite() {
            return Err(Error::invalid("length", format!("need L > 0, got {}", self.length)));
        }
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(Error::invalid("dt", format!("need dt > 0, got {}", self.dt)));
        }
        if !(self.horizon >= self.dt) {
            return Err(Error::invalid(
                "horizon",
                format!("need T >= dt, got T = {} with dt = {}", self.horizon, self.dt),
            ));
        }
        check_pad_factor(self.k, self.pad_factor)?;
        if self.save_every == 0 {
            return Err(Error::invalid("save_every", "stride must be >= 1"));
        }
        if !(self.cfl > 0.0) {
            return Err(Error::invalid("cfl", format!("must be > 0, got {}", self.cfl)));
        }
        Ok(())
    }

    pub fn grid(&self) -> Result<Grid> {
        Grid::new(self.n, self.length)
    }

    /// Step count; the final time `n_steps * dt` is within `dt/2` of `T`.
    pub fn n_steps(&self) -> usize {
        ((self.horizon / self.dt).round() as usize).max(1)
    }

    pub fn sign(&self) -> f64 {
        self.mu as f64
    }
}

pub fn check_power(k: u32) -> Result<()> {
    if k == 2 || k == 3 {
        Ok(())
    } else {
        Err(Error::invalid("k", format!("only k = 2 (mKdV) and k = 3 are supported, got {k}")))
    }
}

/// 2 for k = 2, 3 for k = 3.
pub fn default_pad_factor(k: u32) -> usize {
    if k <= 2 {
        2
    } else {
        3
    }
}

/// Smallest oversampling ratio that resolves a degree-(k+1) product exactly
/// on the retained modes: `(k + 2) / 2`.
pub fn dealias_threshold(k: u32) -> f64 {
    (k as f64 + 2.0) / 2.0
}

pub fn check_pad_factor(k: u32, pad_factor: usize) -> Result<()> {
    let need = dealias_threshold(k);
    if (pad_factor as f64) < need {
        Err(Error::invalid(
            "pad_factor",
            format!("k = {k} needs pad_factor >= {need} (exact dealiasing of u^{}), got {pad_factor}", k + 1),
        ))
    } else {
        Ok(())
    }
}

/// Regularity index of the local theory: 1/4 for k = 2, 1/12 for k = 3.
pub fn sigma_k(k: u32) -> f64 {
    if k == 2 {
        0.25
    } else {
        1.0 / 12.0
    }
}

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dynamics::{default_pad_factor, InitialData, Scheme, SimConfig};
use crate::error::{Error, Result};
use crate::experiments::{Observable, ScalingQuantity};
use crate::noise::CovarianceOperator;
use crate::observables::ExistenceConstants;
use crate::spectral::Grid;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    pub k: u32,
    #[serde(default = "one_i32")]
    pub mu: i32,
    #[serde(default = "yes")]
    pub nonlinear: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub n: usize,
    pub length: f64,
    /// Defaults to 2 for k = 2 and 3 for k = 3.
    pub pad_factor: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeSection {
    pub dt: f64,
    pub horizon: f64,
    #[serde(default = "strang")]
    pub scheme: Scheme,
    #[serde(default = "one_usize")]
    pub save_every: usize,
    #[serde(default = "one_f64")]
    pub cfl: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NoiseKind {
    None,
    PowerLaw,
    BandLimited,
    Table,
}

/// `phi_m` profile. With `normalize_sigma` set, the profile is rescaled so
/// that `||Phi||_{HS(normalize_sigma)} = amplitude`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSection {
    #[serde(default = "no_noise")]
    pub kind: NoiseKind,
    #[serde(default = "one_f64")]
    pub amplitude: f64,
    #[serde(default = "two_f64")]
    pub decay_r: f64,
    pub cutoff: Option<f64>,
    pub values: Option<Vec<f64>>,
    pub normalize_sigma: Option<f64>,
}

impl Default for NoiseSection {
    fn default() -> Self {
        NoiseSection {
            kind: NoiseKind::None,
            amplitude: 1.0,
            decay_r: 2.0,
            cutoff: None,
            values: None,
            normalize_sigma: None,
        }
    }
}

impl NoiseSection {
    pub fn build(&self, grid: &Grid) -> Result<CovarianceOperator> {
        let raw_amp = if self.normalize_sigma.is_some() { 1.0 } else { self.amplitude };
        let phi = match self.kind {
            NoiseKind::None => return Ok(CovarianceOperator::zero(grid)),
            NoiseKind::PowerLaw => CovarianceOperator::power_law(grid, raw_amp, self.decay_r)?,
            NoiseKind::BandLimited => {
                let cutoff = self
                    .cutoff
                    .ok_or_else(|| Error::config("noise.cutoff", "required for kind = \"band-limited\""))?;
                CovarianceOperator::band_limited(grid, raw_amp, cutoff)?
            }
            NoiseKind::Table => {
                let values = self
                    .values
                    .clone()
                    .ok_or_else(|| Error::config("noise.values", "required for kind = \"table\""))?;
                CovarianceOperator::table(grid, values)?
            }
        };
        match self.normalize_sigma {
            Some(s) => phi.normalized(s, self.amplitude),
            None => Ok(phi),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_traj")]
    pub n_traj: usize,
}

impl Default for RunSection {
    fn default() -> Self {
        RunSection {
            seed: 0,
            n_traj: default_traj(),
        }
    }
}

/// Settings read by the individual commands; each ignores the rest.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSection {
    /// `ensemble`.
    #[serde(default = "default_observables")]
    pub observables: Vec<Observable>,
    /// `conv-check`.
    #[serde(default = "default_sigmas")]
    pub sigmas: Vec<f64>,
    /// Steps per horizon for `conv-check` and `scaling`.
    #[serde(default = "default_steps")]
    pub n_steps: usize,
    /// `moment-check`.
    #[serde(default = "two_u32")]
    pub q: u32,
    #[serde(default = "default_windows")]
    pub windows: usize,
    /// `scaling`.
    #[serde(default = "default_quantity")]
    pub quantity: ScalingQuantity,
    #[serde(default = "default_horizons")]
    pub horizons: Vec<f64>,
    #[serde(default = "default_boot")]
    pub n_boot: usize,
    /// Accepted slope interval; the bootstrap interval must also contain
    /// `expected_slope` when given.
    pub slope_band: Option<[f64; 2]>,
    pub expected_slope: Option<f64>,
    /// Largest accepted max/min ratio to the envelope.
    pub max_spread: Option<f64>,
    /// `picard`.
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
    #[serde(default = "default_ratio_bound")]
    pub ratio_bound: f64,
}

impl Default for ExperimentSection {
    fn default() -> Self {
        toml::from_str("").expect("all fields have defaults")
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub model: ModelSection,
    pub grid: GridSection,
    pub time: TimeSection,
    #[serde(default)]
    pub noise: NoiseSection,
    #[serde(default = "zero_data")]
    pub initial: InitialData,
    #[serde(default)]
    pub run: RunSection,
    #[serde(default)]
    pub experiment: ExperimentSection,
    #[serde(default)]
    pub constants: ExistenceConstants,
}

fn one_i32() -> i32 {
    1
}
fn one_usize() -> usize {
    1
}
fn one_f64() -> f64 {
    1.0
}
fn two_f64() -> f64 {
    2.0
}
fn two_u32() -> u32 {
    2
}
fn yes() -> bool {
    true
}
fn strang() -> Scheme {
    Scheme::Strang
}
fn no_noise() -> NoiseKind {
    NoiseKind::None
}
fn zero_data() -> InitialData {
    InitialData::Zero
}
fn default_traj() -> usize {
    100
}
fn default_observables() -> Vec<Observable> {
    vec![Observable::Mass, Observable::Hamiltonian]
}
fn default_sigmas() -> Vec<f64> {
    vec![0.0, 0.25, 1.0]
}
fn default_steps() -> usize {
    64
}
fn default_windows() -> usize {
    4
}
fn default_quantity() -> ScalingQuantity {
    ScalingQuantity::SupSobolevMoment { sigma: 0.25, q: 1 }
}
fn default_horizons() -> Vec<f64> {
    vec![0.25, 0.5, 1.0, 2.0, 4.0]
}
fn default_boot() -> usize {
    1000
}
fn default_tol() -> f64 {
    1e-10
}
fn default_max_iter() -> usize {
    60
}
fn default_ratio_bound() -> f64 {
    0.9
}

impl FileConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: FileConfig = toml::from_str(text).map_err(|e| {
            let key = e.span().map(|s| text[s].trim().to_string()).unwrap_or_default();
            Error::config(key, e.message().trim().to_string())
        })?;
        cfg.fill_defaults().validated()
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::config(path.display().to_string(), format!("cannot read config: {e}")))?;
        Self::parse(&text)
    }

    fn fill_defaults(mut self) -> Self {
        if self.grid.pad_factor.is_none() {
            self.grid.pad_factor = Some(default_pad_factor(self.model.k));
        }
        self
    }

    fn validated(self) -> Result<Self> {
        let sim = self.sim_config();
        sim.validate()?;
        self.constants.validate()?;
        let grid = sim.grid()?;
        self.noise.build(&grid)?;
        Ok(self)
    }

    /// Configuration with every default written out, as echoed in the
    /// manifest.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn sim_config(&self) -> SimConfig {
        SimConfig {
            k: self.model.k,
            mu: self.model.mu,
            n: self.grid.n,
            length: self.grid.length,
            dt: self.time.dt,
            horizon: self.time.horizon,
            scheme: self.time.scheme,
            pad_factor: self.grid.pad_factor.unwrap_or_else(|| default_pad_factor(self.model.k)),
            seed: self.run.seed,
            save_every: self.time.save_every,
            cfl: self.time.cfl,
            nonlinear: self.model.nonlinear,
        }
    }

    pub fn phi(&self) -> Result<CovarianceOperator> {
        self.noise.build(&self.sim_config().grid()?)
    }
}

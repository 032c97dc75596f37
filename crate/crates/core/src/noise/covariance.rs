use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::{Grid, SpectralMultiplier};

/// How the spectral profile of the covariance operator is parameterized.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum NoiseProfile {
    /// No forcing.
    None,
    /// `phi_m = A (1 + xi_m^2)^(-r/2)`.
    PowerLaw { amplitude: f64, decay_r: f64 },
    /// `phi_m = A` for `|xi_m| <= cutoff`, zero above.
    BandLimited { amplitude: f64, cutoff: f64 },
    /// Explicit values for `m = 0, ..., n/2` (the Nyquist entry is ignored).
    Table { values: Vec<f64> },
}

/// Covariance operator diagonal in the Fourier basis: `Phi e_m = phi_m e_m`
/// with an even, nonnegative profile. The Nyquist mode carries no noise.
#[derive(Clone, Debug)]
pub struct CovarianceOperator {
    grid: Grid,
    profile: Vec<f64>,
    kind: NoiseProfile,
}

impl CovarianceOperator {
    pub fn zero(grid: &Grid) -> Self {
        CovarianceOperator {
            grid: grid.clone(),
            profile: vec![0.0; grid.modes()],
            kind: NoiseProfile::None,
        }
    }

    pub fn power_law(grid: &Grid, amplitude: f64, decay_r: f64) -> Result<Self> {
        check_amplitude(amplitude)?;
        if !decay_r.is_finite() {
            return Err(Error::invalid("decay_r", "must be finite"));
        }
        let profile = grid
            .xi()
            .iter()
            .map(|xi| amplitude * (1.0 + xi * xi).powf(-0.5 * decay_r))
            .collect();
        Ok(Self::with_profile(grid, profile, NoiseProfile::PowerLaw { amplitude, decay_r }))
    }

    pub fn band_limited(grid: &Grid, amplitude: f64, cutoff: f64) -> Result<Self> {
        check_amplitude(amplitude)?;
        if !(cutoff >= 0.0) {
            return Err(Error::invalid("cutoff", format!("must be >= 0, got {cutoff}")));
        }
        let profile = grid
            .xi()
            .iter()
            .map(|&xi| if xi <= cutoff { amplitude } else { 0.0 })
            .collect();
        Ok(Self::with_profile(grid, profile, NoiseProfile::BandLimited { amplitude, cutoff }))
    }

    /// Explicit profile for the stored modes `m = 0, ..., n/2`.
    pub fn table(grid: &Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.modes() {
            return Err(Error::GridMismatch(format!(
                "noise table has {} entries, grid stores {} modes",
                values.len(),
                grid.modes()
            )));
        }
        if values.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
            return Err(Error::invalid("noise.values", "entries must be finite and >= 0"));
        }
        let kind = NoiseProfile::Table {
            values: values.clone(),
        };
        Ok(Self::with_profile(grid, values, kind))
    }

    pub fn from_profile(grid: &Grid, kind: &NoiseProfile) -> Result<Self> {
        match kind {
            NoiseProfile::None => Ok(Self::zero(grid)),
            NoiseProfile::PowerLaw { amplitude, decay_r } => Self::power_law(grid, *amplitude, *decay_r),
            NoiseProfile::BandLimited { amplitude, cutoff } => {
                Self::band_limited(grid, *amplitude, *cutoff)
            }
            NoiseProfile::Table { values } => Self::table(grid, values.clone()),
        }
    }

    fn with_profile(grid: &Grid, mut profile: Vec<f64>, kind: NoiseProfile) -> Self {
        let ny = grid.nyquist();
        profile[ny] = 0.0;
        CovarianceOperator {
            grid: grid.clone(),
            profile,
            kind,
        }
    }

    /// Rescales the profile so that `hs_norm(sigma) == target`.
    pub fn normalized(&self, sigma: f64, target: f64) -> Result<Self> {
        let current = self.hs_norm(sigma);
        if current == 0.0 {
            return Err(Error::invalid("noise", "cannot normalize a zero covariance operator"));
        }
        Ok(self.scaled(target / current))
    }

    pub fn scaled(&self, a: f64) -> Self {
        let kind = match &self.kind {
            NoiseProfile::None => NoiseProfile::None,
            NoiseProfile::PowerLaw { amplitude, decay_r } => NoiseProfile::PowerLaw {
                amplitude: amplitude * a,
                decay_r: *decay_r,
            },
            NoiseProfile::BandLimited { amplitude, cutoff } => NoiseProfile::BandLimited {
                amplitude: amplitude * a,
                cutoff: *cutoff,
            },
            NoiseProfile::Table { values } => NoiseProfile::Table {
                values: values.iter().map(|v| v * a).collect(),
            },
        };
        CovarianceOperator {
            grid: self.grid.clone(),
            profile: self.profile.iter().map(|p| p * a.abs()).collect(),
            kind,
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    /// `phi_m` for the stored modes.
    pub fn profile(&self) -> &[f64] {
        &self.profile
    }

    pub fn kind(&self) -> &NoiseProfile {
        &self.kind
    }

    pub fn phi(&self, m: isize) -> f64 {
        self.profile[m.unsigned_abs()]
    }

    pub fn is_zero(&self) -> bool {
        self.profile.iter().all(|p| *p == 0.0)
    }

    /// Hilbert-Schmidt norm from `L^2` into `H^sigma`:
    /// `sqrt(sum_m phi_m^2 (1 + xi_m^2)^sigma)` over the full mode table.
    pub fn hs_norm(&self, sigma: f64) -> f64 {
        let g = &self.grid;
        self.profile
            .iter()
            .zip(g.xi())
            .enumerate()
            .map(|(i, (p, xi))| g.multiplicity(i) * p * p * (1.0 + xi * xi).powf(sigma))
            .sum::<f64>()
            .sqrt()
    }

    /// `sum_m phi_m^2 w(xi_m)` over the full mode table.
    pub fn weighted_trace(&self, weight: impl Fn(f64) -> f64) -> f64 {
        let g = &self.grid;
        self.profile
            .iter()
            .zip(g.xi())
            .enumerate()
            .map(|(i, (p, xi))| g.multiplicity(i) * p * p * weight(*xi))
            .sum()
    }

    pub fn as_multiplier(&self) -> SpectralMultiplier {
        let values = self.profile.iter().map(|p| Complex64::new(*p, 0.0)).collect();
        SpectralMultiplier::new(&self.grid, values, "Phi").expect("profile matches grid")
    }
}

pub fn hs_norm(phi: &CovarianceOperator, sigma: f64) -> f64 {
    phi.hs_norm(sigma)
}

fn check_amplitude(a: f64) -> Result<()> {
    if a.is_finite() && a >= 0.0 {
        Ok(())
    } else {
        Err(Error::invalid("amplitude", format!("must be finite and >= 0, got {a}")))
    }
}

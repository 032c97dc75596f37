use num_complex::Complex64;

use super::field::Field;
use super::grid::Grid;
use crate::error::{Error, Result};

/// Diagonal Fourier operator, one value per stored mode.
///
/// Values for negative modes are the conjugates of the stored ones, so every
/// multiplier maps real fields to real fields. The Nyquist value is real.
#[derive(Clone, Debug)]
pub struct SpectralMultiplier {
    grid: Grid,
    values: Vec<Complex64>,
    label: String,
}

impl SpectralMultiplier {
    pub fn new(grid: &Grid, values: Vec<Complex64>, label: impl Into<String>) -> Result<Self> {
        if values.len() != grid.modes() {
            return Err(Error::GridMismatch(format!(
                "{} multiplier values for {} stored modes",
                values.len(),
                grid.modes()
            )));
        }
        let label = label.into();
        for i in [0, grid.nyquist()] {
            if values[i].im != 0.0 {
                return Err(Error::invalid(
                    "values",
                    format!("{label}: mode index {i} must carry a real value"),
                ));
            }
        }
        Ok(SpectralMultiplier {
            grid: grid.clone(),
            values,
            label,
        })
    }

    fn from_fn(grid: &Grid, label: String, f: impl Fn(usize, f64) -> Complex64) -> Self {
        let values = grid.xi().iter().enumerate().map(|(i, &xi)| f(i, xi)).collect();
        SpectralMultiplier {
            grid: grid.clone(),
            values,
            label,
        }
    }

    pub fn identity(grid: &Grid) -> Self {
        Self::from_fn(grid, "id".into(), |_, _| Complex64::new(1.0, 0.0))
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// Value on mode `m` of the full table.
    pub fn value(&self, m: isize) -> Complex64 {
        let half = self.grid.nyquist() as isize;
        assert!((-half..half).contains(&m), "mode {m} outside [-{half}, {half})");
        if m >= 0 {
            self.values[m as usize]
        } else {
            self.values[(-m) as usize].conj()
        }
    }

    pub fn compose(&self, other: &SpectralMultiplier) -> Result<Self> {
        self.grid.check_same(&other.grid)?;
        Ok(SpectralMultiplier {
            grid: self.grid.clone(),
            values: self.values.iter().zip(&other.values).map(|(a, b)| a * b).collect(),
            label: format!("{}*{}", self.label, other.label),
        })
    }

    /// Mode-wise reciprocal; fails if any value vanishes.
    pub fn inverse(&self) -> Result<Self> {
        if self.values.iter().any(|v| v.norm() == 0.0) {
            return Err(Error::invalid("multiplier", format!("{} vanishes on some mode", self.label)));
        }
        Ok(SpectralMultiplier {
            grid: self.grid.clone(),
            values: self.values.iter().map(|v| v.inv()).collect(),
            label: format!("({})^-1", self.label),
        })
    }

    pub fn apply(&self, f: &Field) -> Result<Field> {
        self.grid.check_same(f.grid())?;
        let mut out = f.clone();
        self.apply_to(out.coeffs_mut());
        Ok(out)
    }

    pub(crate) fn apply_to(&self, coeffs: &mut [Complex64]) {
        for (c, v) in coeffs.iter_mut().zip(&self.values) {
            *c *= v;
        }
    }
}

pub fn apply_multiplier(f: &Field, m: &SpectralMultiplier) -> Result<Field> {
    m.apply(f)
}

/// Airy group `S(t)`: `exp(i t xi^3)`.
///
/// `xi^3` is odd, so the lone Nyquist mode gets the value 1.
pub fn airy_multiplier(grid: &Grid, t: f64) -> SpectralMultiplier {
    let ny = grid.nyquist();
    SpectralMultiplier::from_fn(grid, format!("S({t})"), |i, xi| {
        if i == ny {
            Complex64::new(1.0, 0.0)
        } else {
            Complex64::from_polar(1.0, t * xi * xi * xi)
        }
    })
}

/// Homogeneous `D^gamma = |xi|^gamma`, zero on the mean mode for every gamma.
pub fn fractional_derivative_multiplier(grid: &Grid, gamma: f64) -> Result<SpectralMultiplier> {
    if !(gamma >= 0.0) {
        return Err(Error::invalid("gamma", format!("order must be >= 0, got {gamma}")));
    }
    Ok(SpectralMultiplier::from_fn(grid, format!("D^{gamma}"), |i, xi| {
        if i == 0 {
            Complex64::new(0.0, 0.0)
        } else {
            Complex64::new(xi.powf(gamma), 0.0)
        }
    }))
}

/// `d/dx = i xi`. Odd, so the Nyquist mode is zeroed.
pub fn derivative_multiplier(grid: &Grid) -> SpectralMultiplier {
    let ny = grid.nyquist();
    SpectralMultiplier::from_fn(grid, "dx".into(), |i, xi| {
        if i == ny {
            Complex64::new(0.0, 0.0)
        } else {
            Complex64::new(0.0, xi)
        }
    })
}

/// `D^gamma d/dx = i xi |xi|^gamma` as a single multiplier.
pub fn fractional_derivative_dx_multiplier(grid: &Grid, gamma: f64) -> Result<SpectralMultiplier> {
    if !(gamma >= 0.0) {
        return Err(Error::invalid("gamma", format!("order must be >= 0, got {gamma}")));
    }
    let ny = grid.nyquist();
    Ok(SpectralMultiplier::from_fn(grid, format!("D^{gamma}dx"), |i, xi| {
        if i == 0 || i == ny {
            Complex64::new(0.0, 0.0)
        } else {
            Complex64::new(0.0, xi * xi.powf(gamma))
        }
    }))
}

/// Bessel potential `J_sigma = (1 + xi^2)^(sigma/2)`.
pub fn bessel_multiplier(grid: &Grid, sigma: f64) -> SpectralMultiplier {
    SpectralMultiplier::from_fn(grid, format!("J_{sigma}"), |_, xi| {
        Complex64::new((1.0 + xi * xi).powf(0.5 * sigma), 0.0)
    })
}

/// Hilbert transform `-i sign(xi)`; zero on the mean and Nyquist modes.
///
/// With this sign convention `d/dx = -H D^1`, and `H cos = sin`.
pub fn hilbert_multiplier(grid: &Grid) -> SpectralMultiplier {
    let ny = grid.nyquist();
    SpectralMultiplier::from_fn(grid, "H".into(), |i, _| {
        if i == 0 || i == ny {
            Complex64::new(0.0, 0.0)
        } else {
            Complex64::new(0.0, -1.0)
        }
    })
}

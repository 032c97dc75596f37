use serde::{Deserialize, Serialize};

use super::config::{check_power, default_pad_factor};
use super::nonlinear::NonlinearTerm;
use crate::error::{Error, Result};
use crate::spectral::{derivative_multiplier, sobolev_norm, Field, Grid};

/// Largest admissible `L^2` residual of the soliton equation.
pub const SOLITON_RESIDUAL_TOL: f64 = 1e-8;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum InitialData {
    Zero,
    /// `a exp(-(x - x0)^2 / (2 w^2))`.
    Gaussian {
        amplitude: f64,
        width: f64,
        #[serde(default)]
        center: f64,
    },
    /// Travelling wave of speed `c`; focusing only.
    Soliton {
        speed: f64,
        #[serde(default)]
        center: f64,
    },
    /// Grid samples.
    Table { values: Vec<f64> },
}

/// Amplitude and inverse width of the solitary wave
/// `A sech^(2/k)(theta x)` moving at speed `c`.
pub fn soliton_shape(k: u32, c: f64) -> (f64, f64) {
    let kf = k as f64;
    let amp = ((kf + 1.0) * (kf + 2.0) * c / 2.0).powf(1.0 / kf);
    let theta = kf * c.sqrt() / 2.0;
    (amp, theta)
}

pub fn soliton(grid: &Grid, k: u32, c: f64, center: f64) -> Field {
    let (amp, theta) = soliton_shape(k, c);
    let p = 2.0 / k as f64;
    Field::from_fn(grid, |x| amp * (1.0 / (theta * (x - center)).cosh()).powf(p))
}

/// `L^2` norm (rectangle rule on the grid) of the travelling-wave residual
/// `-c Q' + Q''' + Q^k Q'`, every derivative taken in closed form.
pub fn soliton_residual(grid: &Grid, k: u32, c: f64, center: f64) -> f64 {
    let (amp, theta) = soliton_shape(k, c);
    let p = 2.0 / k as f64;
    let sum: f64 = grid
        .points()
        .iter()
        .map(|x| {
            let y = theta * (x - center);
            let s = 1.0 / y.cosh();
            let t = y.tanh();
            let sp = s.powf(p);
            let q1 = -amp * p * theta * sp * t;
            let q3 = -amp * p * theta.powi(3) * sp * t * (p * p - (p + 1.0) * (p + 2.0) * s * s);
            let nl = (amp * sp).powi(k as i32) * q1;
            (-c * q1 + q3 + nl).powi(2)
        })
        .sum();
    (sum * grid.dx()).sqrt()
}

/// The same residual with spectral derivatives and the dealiased
/// nonlinearity applied to the sampled profile. Bounded below by how well
/// the grid resolves the profile's spectral tail.
pub fn discrete_soliton_residual(grid: &Grid, k: u32, c: f64, center: f64) -> Result<f64> {
    let q = soliton(grid, k, c, center);
    let d = derivative_multiplier(grid);
    let q1 = d.apply(&q)?;
    let q3 = d.apply(&d.apply(&q1)?)?;
    let n = NonlinearTerm::new(grid, k, 1.0, default_pad_factor(k))?.eval(&q)?;
    let r = q3.axpy(-c, &q1)?.sub(&n)?;
    Ok(sobolev_norm(&r, 0.0))
}

pub fn initial_data(kind: &InitialData, k: u32, mu: i32, grid: &Grid) -> Result<Field> {
    check_power(k)?;
    match kind {
        InitialData::Zero => Ok(Field::zeros(grid)),
        InitialData::Gaussian {
            amplitude,
            width,
            center,
        } => {
            if !(*width > 0.0) {
                return Err(Error::invalid("initial.width", format!("must be > 0, got {width}")));
            }
            let (a, w, x0) = (*amplitude, *width, *center);
            Ok(Field::from_fn(grid, |x| a * (-(x - x0).powi(2) / (2.0 * w * w)).exp()))
        }
        InitialData::Soliton { speed, center } => {
            if mu != 1 {
                return Err(Error::invalid("initial", "solitary waves need the focusing sign mu = +1"));
            }
            if !(*speed > 0.0) {
                return Err(Error::invalid("initial.speed", format!("must be > 0, got {speed}")));
            }
            let res = soliton_residual(grid, k, *speed, *center);
            if !(res <= SOLITON_RESIDUAL_TOL) {
                return Err(Error::invalid(
                    "initial",
                    format!("soliton residual {res:.3e} exceeds {SOLITON_RESIDUAL_TOL:e}"),
                ));
            }
            Ok(soliton(grid, k, *speed, *center))
        }
        InitialData::Table { values } => Field::from_samples(grid, values),
    }
}

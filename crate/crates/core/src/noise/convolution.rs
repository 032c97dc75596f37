use num_complex::Complex64;

use super::covariance::CovarianceOperator;
use super::rng::RngStream;
use crate::error::{Error, Result};
use crate::spectral::{airy_multiplier, Field, SpectralMultiplier};

/// Draws `Phi (W(t + dt) - W(t))` in the real Fourier basis.
///
/// Mode 0 gets `phi_0 g sqrt(dt / L)`, mode `m > 0` gets
/// `phi_m (a - i b) sqrt(dt / (2L))` with `g, a, b` independent standard
/// normals, so that `E ||increment||^2 = dt * hs_norm(Phi, 0)^2`.
#[derive(Clone, Debug)]
pub struct IncrementSampler {
    dt: f64,
    scale: Vec<f64>,
}

impl IncrementSampler {
    pub fn new(phi: &CovarianceOperator, dt: f64) -> Result<Self> {
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(Error::invalid("dt", format!("increment needs dt > 0, got {dt}")));
        }
        let l = phi.grid().length();
        let scale = phi
            .profile()
            .iter()
            .enumerate()
            .map(|(m, p)| {
                if m == 0 {
                    p * (dt / l).sqrt()
                } else {
                    p * (dt / (2.0 * l)).sqrt()
                }
            })
            .collect();
        Ok(IncrementSampler { dt, scale })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Overwrites `out` with a fresh increment. Modes with zero amplitude
    /// consume no random numbers.
    pub fn fill(&self, rng: &mut RngStream, out: &mut [Complex64]) {
        for (m, (c, s)) in out.iter_mut().zip(&self.scale).enumerate() {
            *c = if *s == 0.0 {
                Complex64::new(0.0, 0.0)
            } else if m == 0 {
                Complex64::new(s * rng.standard_normal(), 0.0)
            } else {
                let a = rng.standard_normal();
                let b = rng.standard_normal();
                Complex64::new(s * a, -s * b)
            };
        }
    }

    /// Adds a fresh increment to `coeffs`.
    pub fn add_to(&self, rng: &mut RngStream, coeffs: &mut [Complex64]) {
        for (m, (c, s)) in coeffs.iter_mut().zip(&self.scale).enumerate() {
            if *s == 0.0 {
                continue;
            }
            if m == 0 {
                c.re += s * rng.standard_normal();
            } else {
                let a = rng.standard_normal();
                let b = rng.standard_normal();
                c.re += s * a;
                c.im -= s * b;
            }
        }
    }
}

pub fn sample_increment(phi: &CovarianceOperator, dt: f64, rng: &mut RngStream) -> Result<Field> {
    let sampler = IncrementSampler::new(phi, dt)?;
    let mut coeffs = phi.grid().zero_coeffs();
    sampler.fill(rng, &mut coeffs);
    Field::from_coeffs(phi.grid(), coeffs)
}

/// Exact one-step update of the stochastic convolution
/// `v(t) = int_0^t S(t - s) Phi dW(s)`:
/// `v(t + dt) = S(dt) v(t) + eta` with `eta ~ Phi (W(t + dt) - W(t))`.
///
/// The Airy group is unitary mode by mode and the increment law is
/// rotation invariant, so this has no time-discretization error in law.
#[derive(Clone, Debug)]
pub struct ConvolutionSampler {
    airy: SpectralMultiplier,
    increments: IncrementSampler,
}

impl ConvolutionSampler {
    pub fn new(phi: &CovarianceOperator, dt: f64) -> Result<Self> {
        Ok(ConvolutionSampler {
            airy: airy_multiplier(phi.grid(), dt),
            increments: IncrementSampler::new(phi, dt)?,
        })
    }

    pub fn step_in_place(&self, coeffs: &mut [Complex64], rng: &mut RngStream) {
        self.airy.apply_to(coeffs);
        self.increments.add_to(rng, coeffs);
    }
}

pub fn convolution_step(
    v: &Field,
    phi: &CovarianceOperator,
    dt: f64,
    rng: &mut RngStream,
) -> Result<Field> {
    phi.grid().check_same(v.grid())?;
    let sampler = ConvolutionSampler::new(phi, dt)?;
    let mut out = v.clone();
    sampler.step_in_place(out.coeffs_mut(), rng);
    Ok(out)
}

/// Snapshots `v(t_i)`, `t_i = i T / n_steps`, `i = 0, ..., n_steps`, with
/// `v(0) = 0`. A zero horizon returns just `v(0)`.
pub fn convolution_path(
    phi: &CovarianceOperator,
    horizon: f64,
    n_steps: usize,
    rng: &mut RngStream,
) -> Result<Vec<Field>> {
    if n_steps == 0 {
        return Err(Error::invalid("n_steps", "need at least one step"));
    }
    if !(horizon >= 0.0) {
        return Err(Error::invalid("horizon", format!("must be >= 0, got {horizon}")));
    }
    let grid = phi.grid();
    let mut path = vec![Field::zeros(grid)];
    if horizon == 0.0 {
        return Ok(path);
    }
    let sampler = ConvolutionSampler::new(phi, horizon / n_steps as f64)?;
    let mut v = grid.zero_coeffs();
    for _ in 0..n_steps {
        sampler.step_in_place(&mut v, rng);
        path.push(Field::from_coeffs(grid, v.clone())?);
    }
    Ok(path)
}

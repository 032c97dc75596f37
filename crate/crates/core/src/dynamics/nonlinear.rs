use num_complex::Complex64;

use super::config::{check_pad_factor, check_power};
use crate::error::Result;
use crate::spectral::{Field, Grid, Transform};

/// Dealiased conservative nonlinearity `N(u) = -mu d/dx (u^(k+1) / (k+1))`.
///
/// The spectrum is zero-padded to `pad_factor * n` points, the power is taken
/// pointwise there, and the result truncated back. With
/// `pad_factor >= (k+2)/2` the retained coefficients of `u^(k+1)` are exact,
/// so `(u, N(u)) = 0` up to rounding. The Nyquist mode of `u` is ignored and
/// that of `N(u)` is zero.
#[derive(Clone, Debug)]
pub struct NonlinearTerm {
    grid: Grid,
    k: u32,
    padded: Transform,
    /// `-mu i xi / (k+1)` per retained mode.
    factor: Vec<Complex64>,
}

#[derive(Clone, Debug)]
pub struct NonlinearScratch {
    spec: Vec<Complex64>,
    real: Vec<f64>,
    fft: Vec<Complex64>,
}

impl NonlinearTerm {
    pub fn new(grid: &Grid, k: u32, mu: f64, pad_factor: usize) -> Result<Self> {
        check_power(k)?;
        check_pad_factor(k, pad_factor)?;
        let ny = grid.nyquist();
        let factor = grid
            .xi()
            .iter()
            .enumerate()
            .map(|(i, xi)| {
                if i == ny {
                    Complex64::new(0.0, 0.0)
                } else {
                    Complex64::new(0.0, -mu * xi / (k as f64 + 1.0))
                }
            })
            .collect();
        Ok(NonlinearTerm {
            grid: grid.clone(),
            k,
            padded: Transform::new(pad_factor * grid.n()),
            factor,
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn scratch(&self) -> NonlinearScratch {
        NonlinearScratch {
            spec: vec![Complex64::new(0.0, 0.0); self.padded.modes()],
            real: vec![0.0; self.padded.len()],
            fft: self.padded.make_scratch(),
        }
    }

    /// Samples of `u` (Nyquist dropped) on the padded grid, left in
    /// `s.real`. Returns `max |u|` there.
    fn to_padded(&self, u: &[Complex64], s: &mut NonlinearScratch) -> f64 {
        let ny = self.grid.nyquist();
        s.spec.fill(Complex64::new(0.0, 0.0));
        s.spec[..ny].copy_from_slice(&u[..ny]);
        self.padded.inverse(&mut s.spec, &mut s.real, &mut s.fft);
        s.real.iter().fold(0.0, |a, v| a.max(v.abs()))
    }

    /// Writes `N(u)` into `out` and returns `max |u|` on the padded grid.
    pub fn eval_into(&self, u: &[Complex64], out: &mut [Complex64], s: &mut NonlinearScratch) -> f64 {
        let sup = self.to_padded(u, s);
        let p = self.k as i32 + 1;
        for v in s.real.iter_mut() {
            *v = v.powi(p);
        }
        self.padded.forward(&mut s.real, &mut s.spec, &mut s.fft);
        for ((o, w), f) in out.iter_mut().zip(&s.spec).zip(&self.factor) {
            *o = w * f;
        }
        sup
    }

    pub fn eval(&self, u: &Field) -> Result<Field> {
        self.grid.check_same(u.grid())?;
        let mut out = self.grid.zero_coeffs();
        self.eval_into(u.coeffs(), &mut out, &mut self.scratch());
        Field::from_coeffs(&self.grid, out)
    }

    /// `int u^p dx`, exact for `p <= k + 2` on the padded grid.
    pub fn power_integral(&self, u: &[Complex64], p: u32, s: &mut NonlinearScratch) -> f64 {
        self.to_padded(u, s);
        let dx = self.grid.length() / s.real.len() as f64;
        s.real.iter().map(|v| v.powi(p as i32)).sum::<f64>() * dx
    }
}

pub fn nonlinear_rhs(u: &Field, k: u32, mu: f64, pad_factor: usize) -> Result<Field> {
    NonlinearTerm::new(u.grid(), k, mu, pad_factor)?.eval(u)
}

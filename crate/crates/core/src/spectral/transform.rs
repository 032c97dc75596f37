use std::sync::Arc;

use num_complex::Complex64;
use realfft::{ComplexToReal, RealFftPlanner, RealToComplex};

/// Real <-> half-spectrum transform of one size with the Fourier-series
/// normalization used throughout the crate.
///
/// Samples sit at `x_j = -L/2 + j L/n`, so the coefficient of mode `m` picks
/// up a phase `exp(i xi_m L/2) = (-1)^m` relative to a plain DFT. The forward
/// direction carries the `1/n`.
#[derive(Clone)]
pub struct Transform {
    n: usize,
    r2c: Arc<dyn RealToComplex<f64>>,
    c2r: Arc<dyn ComplexToReal<f64>>,
    scratch_len: usize,
}

impl Transform {
    pub fn new(n: usize) -> Self {
        let mut planner = RealFftPlanner::<f64>::new();
        let r2c = planner.plan_fft_forward(n);
        let c2r = planner.plan_fft_inverse(n);
        let scratch_len = r2c.get_scratch_len().max(c2r.get_scratch_len());
        Transform {
            n,
            r2c,
            c2r,
            scratch_len,
        }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn modes(&self) -> usize {
        self.n / 2 + 1
    }

    pub fn make_scratch(&self) -> Vec<Complex64> {
        vec![Complex64::new(0.0, 0.0); self.scratch_len]
    }

    /// Samples to coefficients. `samples` is clobbered.
    pub fn forward(&self, samples: &mut [f64], coeffs: &mut [Complex64], scratch: &mut [Complex64]) {
        self.r2c
            .process_with_scratch(samples, coeffs, scratch)
            .expect("forward transform buffer sizes");
        let scale = 1.0 / self.n as f64;
        for (i, c) in coeffs.iter_mut().enumerate() {
            let s = if i % 2 == 0 { scale } else { -scale };
            *c *= s;
        }
        coeffs[0].im = 0.0;
        coeffs[self.n / 2].im = 0.0;
    }

    /// Coefficients to samples. `coeffs` is clobbered.
    pub fn inverse(&self, coeffs: &mut [Complex64], samples: &mut [f64], scratch: &mut [Complex64]) {
        for (i, c) in coeffs.iter_mut().enumerate() {
            if i % 2 == 1 {
                *c = -*c;
            }
        }
        coeffs[0].im = 0.0;
        coeffs[self.n / 2].im = 0.0;
        self.c2r
            .process_with_scratch(coeffs, samples, scratch)
            .expect("inverse transform buffer sizes");
    }
}

impl std::fmt::Debug for Transform {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Transform").field("n", &self.n).finish()
    }
}

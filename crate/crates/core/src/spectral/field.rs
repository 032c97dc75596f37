use num_complex::Complex64;

use super::grid::Grid;
use crate::error::{Error, Result};

/// Real periodic function sampled on a [`Grid`], stored by its Fourier-series
/// coefficients
///
/// `c_m = (1/n) sum_j u_j exp(-i xi_m x_j)` and `u_j = sum_m c_m exp(i xi_m x_j)`.
/// Only `m = 0, ..., n/2` are stored; `c_{-m} = conj(c_m)`.
#[derive(Clone, Debug)]
pub struct Field {
    grid: Grid,
    coeffs: Vec<Complex64>,
}

impl Field {
    pub fn zeros(grid: &Grid) -> Field {
        Field {
            grid: grid.clone(),
            coeffs: grid.zero_coeffs(),
        }
    }

    pub fn from_samples(grid: &Grid, samples: &[f64]) -> Result<Field> {
        if samples.len() != grid.n() {
            return Err(Error::GridMismatch(format!(
                "{} samples for a grid of {} points",
                samples.len(),
                grid.n()
            )));
        }
        let t = grid.transform();
        let mut buf = samples.to_vec();
        let mut coeffs = grid.zero_coeffs();
        t.forward(&mut buf, &mut coeffs, &mut t.make_scratch());
        Ok(Field {
            grid: grid.clone(),
            coeffs,
        })
    }

    pub fn from_fn(grid: &Grid, f: impl Fn(f64) -> f64) -> Field {
        let samples: Vec<f64> = grid.points().into_iter().map(f).collect();
        Field::from_samples(grid, &samples).expect("sample count matches grid")
    }

    /// Builds a field from half-spectrum coefficients. The imaginary parts
    /// of the mean and Nyquist modes are dropped.
    pub fn from_coeffs(grid: &Grid, mut coeffs: Vec<Complex64>) -> Result<Field> {
        if coeffs.len() != grid.modes() {
            return Err(Error::GridMismatch(format!(
                "{} coefficients for a grid with {} stored modes",
                coeffs.len(),
                grid.modes()
            )));
        }
        coeffs[0].im = 0.0;
        let ny = grid.nyquist();
        coeffs[ny].im = 0.0;
        Ok(Field {
            grid: grid.clone(),
            coeffs,
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub(crate) fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<Complex64> {
        self.coeffs
    }

    /// Coefficient of mode `m` from the full table `m in [-n/2, n/2)`.
    pub fn coefficient(&self, m: isize) -> Complex64 {
        let half = self.grid.nyquist() as isize;
        assert!((-half..half).contains(&m), "mode {m} outside [-{half}, {half})");
        if m >= 0 {
            self.coeffs[m as usize]
        } else {
            self.coeffs[(-m) as usize].conj()
        }
    }

    /// All `n` coefficients ordered `m = -n/2, ..., n/2 - 1`.
    pub fn full_spectrum(&self) -> Vec<Complex64> {
        let half = self.grid.nyquist() as isize;
        (-half..half).map(|m| self.coefficient(m)).collect()
    }

    pub fn samples(&self) -> Vec<f64> {
        let t = self.grid.transform();
        let mut buf = self.coeffs.clone();
        let mut out = vec![0.0; self.grid.n()];
        t.inverse(&mut buf, &mut out, &mut t.make_scratch());
        out
    }

    pub fn scaled(&self, a: f64) -> Field {
        Field {
            grid: self.grid.clone(),
            coeffs: self.coeffs.iter().map(|c| c * a).collect(),
        }
    }

    /// `self + a * other`.
    pub fn axpy(&self, a: f64, other: &Field) -> Result<Field> {
        self.grid.check_same(&other.grid)?;
        Ok(Field {
            grid: self.grid.clone(),
            coeffs: self
                .coeffs
                .iter()
                .zip(&other.coeffs)
                .map(|(x, y)| x + y * a)
                .collect(),
        })
    }

    pub fn add(&self, other: &Field) -> Result<Field> {
        self.axpy(1.0, other)
    }

    pub fn sub(&self, other: &Field) -> Result<Field> {
        self.axpy(-1.0, other)
    }

    /// Zeroes the Nyquist coefficient.
    pub fn without_nyquist(mut self) -> Field {
        let ny = self.grid.nyquist();
        self.coeffs[ny] = Complex64::new(0.0, 0.0);
        self
    }

    /// `(self, other)_{L^2}` by Parseval.
    pub fn inner(&self, other: &Field) -> Result<f64> {
        self.grid.check_same(&other.grid)?;
        let g = &self.grid;
        let s: f64 = self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .enumerate()
            .map(|(i, (a, b))| g.multiplicity(i) * (a.conj() * b).re)
            .sum();
        Ok(g.length() * s)
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs.iter().all(|c| c.re.is_finite() && c.im.is_finite())
    }
}

/// Samples to half-spectrum coefficients.
pub fn forward_transform(grid: &Grid, samples: &[f64]) -> Result<Vec<Complex64>> {
    Field::from_samples(grid, samples).map(Field::into_coeffs)
}

/// Half-spectrum coefficients to samples.
pub fn inverse_transform(grid: &Grid, coeffs: &[Complex64]) -> Result<Vec<f64>> {
    Field::from_coeffs(grid, coeffs.to_vec()).map(|f| f.samples())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn rel_l2(a: &[f64], b: &[f64]) -> f64 {
        let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum();
        let den: f64 = b.iter().map(|y| y * y).sum();
        (num / den.max(f64::MIN_POSITIVE)).sqrt()
    }

    #[test]
    fn constant_field_has_only_the_mean_mode() {
        let g = Grid::new(32, 7.0).unwrap();
        let f = Field::from_fn(&g, |_| 1.0);
        assert!((f.coefficient(0).re - 1.0).abs() < 1e-15);
        for m in 1..16 {
            assert!(f.coefficient(m).norm() < 1e-15);
            assert!(f.coefficient(-m).norm() < 1e-15);
        }
    }

    #[test]
    fn single_cosine_splits_evenly() {
        let g = Grid::new(32, 2.0 * PI).unwrap();
        let xi1 = g.wavenumber(1);
        let f = Field::from_fn(&g, |x| (xi1 * x).cos());
        assert!((f.coefficient(1) - Complex64::new(0.5, 0.0)).norm() < 1e-15);
        assert!((f.coefficient(-1) - Complex64::new(0.5, 0.0)).norm() < 1e-15);
        let rest: f64 = (2..16).map(|m| f.coefficient(m).norm()).sum();
        assert!(rest < 1e-14);
    }

    #[test]
    fn sine_coefficient_matches_direct_sum() {
        // c_m = (1/n) sum_j u_j exp(-i xi_m x_j), evaluated literally.
        let g = Grid::new(16, 3.0).unwrap();
        let xs = g.points();
        let u: Vec<f64> = xs.iter().map(|x| (x * 1.3).sin() + 0.2 * x.cos()).collect();
        let f = Field::from_samples(&g, &u).unwrap();
        for m in -8isize..8 {
            let xi = g.wavenumber(m);
            let direct: Complex64 = xs
                .iter()
                .zip(&u)
                .map(|(x, v)| Complex64::from_polar(*v, -xi * x))
                .sum::<Complex64>()
                / 16.0;
            if m == -8 {
                // Nyquist is stored cosine-only.
                assert!((f.coefficient(m).re - direct.re).abs() < 1e-13);
            } else {
                assert!((f.coefficient(m) - direct).norm() < 1e-13, "m = {m}");
            }
        }
    }

    proptest! {
        #[test]
        fn round_trip_and_parseval(seed in any::<u64>(), half in 4usize..64) {
            use rand::{Rng, SeedableRng};
            let n = 2 * half;
            let g = Grid::new(n, 1.0 + (seed % 97) as f64).unwrap();
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let u: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
            let f = Field::from_samples(&g, &u).unwrap();
            prop_assert!(rel_l2(&f.samples(), &u) <= 1e-12);

            let lhs: f64 = u.iter().map(|v| v * v).sum::<f64>() * g.dx();
            let rhs = f.inner(&f).unwrap();
            prop_assert!((lhs - rhs).abs() <= 1e-12 * lhs);
        }
    }
}

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;

use super::transform::Transform;
use crate::error::{Error, Result};

/// Uniform periodic grid on `[-L/2, L/2)`.
///
/// Spectral data is stored as the half spectrum `m = 0, ..., n/2`; negative
/// modes follow from conjugate symmetry. Index `n/2` is the Nyquist mode
/// (`m = -n/2` in the full table), which is treated as cosine-only.
#[derive(Clone)]
pub struct Grid {
    inner: Arc<GridInner>,
}

struct GridInner {
    n: usize,
    length: f64,
    dx: f64,
    /// `|xi_m|` for `m = 0, ..., n/2`.
    xi: Vec<f64>,
    transform: Transform,
}

impl Grid {
    pub fn new(n: usize, length: f64) -> Result<Grid> {
        if n < 8 || n % 2 != 0 {
            return Err(Error::invalid("n", format!("need an even count >= 8, got {n}")));
        }
        if !(length > 0.0 && length.is_finite()) {
            return Err(Error::invalid("length", format!("need L > 0, got {length}")));
        }
        let xi = (0..=n / 2).map(|m| 2.0 * PI * m as f64 / length).collect();
        Ok(Grid {
            inner: Arc::new(GridInner {
                n,
                length,
                dx: length / n as f64,
                xi,
                transform: Transform::new(n),
            }),
        })
    }

    pub fn n(&self) -> usize {
        self.inner.n
    }

    pub fn length(&self) -> f64 {
        self.inner.length
    }

    pub fn dx(&self) -> f64 {
        self.inner.dx
    }

    /// Number of stored (half-spectrum) modes, `n/2 + 1`.
    pub fn modes(&self) -> usize {
        self.inner.n / 2 + 1
    }

    pub fn nyquist(&self) -> usize {
        self.inner.n / 2
    }

    /// `|xi_m|` for the stored modes.
    pub fn xi(&self) -> &[f64] {
        &self.inner.xi
    }

    /// Signed wavenumber of mode `m`, `m in [-n/2, n/2)`.
    pub fn wavenumber(&self, m: isize) -> f64 {
        let half = (self.n() / 2) as isize;
        assert!((-half..half).contains(&m), "mode {m} outside [-{half}, {half})");
        2.0 * PI * m as f64 / self.length()
    }

    /// How many modes of the full table a stored index stands for.
    pub fn multiplicity(&self, index: usize) -> f64 {
        if index == 0 || index == self.nyquist() {
            1.0
        } else {
            2.0
        }
    }

    pub fn points(&self) -> Vec<f64> {
        let (l, dx) = (self.length(), self.dx());
        (0..self.n()).map(|j| -0.5 * l + j as f64 * dx).collect()
    }

    pub fn transform(&self) -> &Transform {
        &self.inner.transform
    }

    /// Same period with `m` points (used for dealiased products).
    pub fn resampled(&self, m: usize) -> Result<Grid> {
        Grid::new(m, self.length())
    }

    pub fn same_as(&self, other: &Grid) -> bool {
        Arc::ptr_eq(&self.inner, &other.inner)
            || (self.n() == other.n() && self.length() == other.length())
    }

    pub(crate) fn check_same(&self, other: &Grid) -> Result<()> {
        if self.same_as(other) {
            Ok(())
        } else {
            Err(Error::GridMismatch(format!(
                "(n = {}, L = {}) vs (n = {}, L = {})",
                self.n(),
                self.length(),
                other.n(),
                other.length()
            )))
        }
    }

    pub(crate) fn zero_coeffs(&self) -> Vec<Complex64> {
        vec![Complex64::new(0.0, 0.0); self.modes()]
    }
}

impl PartialEq for Grid {
    fn eq(&self, other: &Self) -> bool {
        self.same_as(other)
    }
}

impl std::fmt::Debug for Grid {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Grid")
            .field("n", &self.n())
            .field("length", &self.length())
            .finish()
    }
}

use super::field::Field;
use crate::error::{Error, Result};

/// Inhomogeneous Sobolev norm `sqrt(L sum_m (1 + xi_m^2)^sigma |c_m|^2)`.
///
/// Negative `sigma` is accepted and gives the dual (negative-order) norm.
pub fn sobolev_norm(f: &Field, sigma: f64) -> f64 {
    let g = f.grid();
    let s: f64 = f
        .coeffs()
        .iter()
        .zip(g.xi())
        .enumerate()
        .map(|(i, (c, xi))| g.multiplicity(i) * (1.0 + xi * xi).powf(sigma) * c.norm_sqr())
        .sum();
    (g.length() * s).sqrt()
}

/// Homogeneous `||D^gamma f||_{L^2}`, the mean mode dropped.
pub fn homogeneous_sobolev_norm(f: &Field, gamma: f64) -> f64 {
    let g = f.grid();
    let s: f64 = f
        .coeffs()
        .iter()
        .zip(g.xi())
        .enumerate()
        .skip(1)
        .map(|(i, (c, xi))| g.multiplicity(i) * xi.powf(2.0 * gamma) * c.norm_sqr())
        .sum();
    (g.length() * s).sqrt()
}

/// Rectangle-rule `L^p` norm of the samples; `p = inf` is the max.
pub fn lp_norm(f: &Field, p: f64) -> Result<f64> {
    lp_norm_of_samples(&f.samples(), f.grid().dx(), p)
}

pub(crate) fn lp_norm_of_samples(samples: &[f64], dx: f64, p: f64) -> Result<f64> {
    if !(p >= 1.0) {
        return Err(Error::invalid("p", format!("exponent must be >= 1, got {p}")));
    }
    if p.is_infinite() {
        return Ok(samples.iter().fold(0.0, |a, v| a.max(v.abs())));
    }
    let s: f64 = samples.iter().map(|v| v.abs().powf(p)).sum::<f64>() * dx;
    Ok(s.powf(1.0 / p))
}

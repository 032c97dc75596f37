use serde::{Deserialize, Serialize};

use super::mixed::{xk_norm, TrajectoryView};
use crate::dynamics::{check_power, sigma_k};
use crate::error::{Error, Result};
use crate::spectral::{sobolev_norm, Field};

/// Label attached to every output that depends on the existence constants.
pub const CONSTANTS_LABEL: &str = "illustrative constants, not derived from the linear estimates";

/// Constants of the contraction estimates and the exponent `rho` of the
/// `nu2` weight. No sharp values are known; all default to 1.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExistenceConstants {
    pub c_k: f64,
    pub c_tilde: f64,
    pub c_bar: f64,
    pub rho: f64,
}

impl Default for ExistenceConstants {
    fn default() -> Self {
        ExistenceConstants {
            c_k: 1.0,
            c_tilde: 1.0,
            c_bar: 1.0,
            rho: 1.0,
        }
    }
}

impl ExistenceConstants {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("c_k", self.c_k),
            ("c_tilde", self.c_tilde),
            ("c_bar", self.c_bar),
            ("rho", self.rho),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::invalid(name, format!("must be a positive real, got {v}")));
            }
        }
        Ok(())
    }

    pub fn label(&self) -> &'static str {
        CONSTANTS_LABEL
    }
}

/// `R_k = 2 (c_k ||u0||_{H^sigma(k)} + ||v||_{X_k^T})`.
pub fn local_radius(u0: &Field, v: &TrajectoryView, k: u32, consts: &ExistenceConstants) -> Result<f64> {
    check_power(k)?;
    let data = consts.c_k * sobolev_norm(u0, sigma_k(k));
    let noise = if v.is_empty() { 0.0 } else { xk_norm(v, k, consts)?.value };
    Ok(2.0 * (data + noise))
}

/// Largest admissible existence time for radius `R`.
///
/// k = 2: `min((2 C~ R^2)^-2, (4 C- R^2)^-2)`.
/// k = 3: largest `T` with `2 C~ g(T) R^3 <= 1` and `4 C- g(T) R^2 <= 1`,
/// `g(T) = T^(1/18) (1 + T)^rho`, by bisection in `log T`.
pub fn local_time(r: f64, k: u32, consts: &ExistenceConstants) -> Result<f64> {
    check_power(k)?;
    consts.validate()?;
    if !(r > 0.0) || !r.is_finite() {
        return Err(Error::invalid("R", format!("radius must be positive and finite, got {r}")));
    }
    if k == 2 {
        let a = (2.0 * consts.c_tilde * r * r).powi(-2);
        let b = (4.0 * consts.c_bar * r * r).powi(-2);
        return Ok(a.min(b));
    }
    let bound = (1.0 / (2.0 * consts.c_tilde * r.powi(3))).min(1.0 / (4.0 * consts.c_bar * r * r));
    let lb = bound.ln();
    let rho = consts.rho;
    // h(s) = log g(e^s) - log bound, increasing in s
    let h = |s: f64| s / 18.0 + rho * s.exp().ln_1p() - lb;
    let mut lo = (18.0 * (lb - rho * std::f64::consts::LN_2)).min(0.0) - 1.0;
    let mut hi = (18.0 * lb).max(0.0) + 1.0;
    debug_assert!(h(lo) <= 0.0 && h(hi) > 0.0);
    while hi - lo > 1e-13 {
        let mid = 0.5 * (lo + hi);
        if h(mid) <= 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo.exp())
}

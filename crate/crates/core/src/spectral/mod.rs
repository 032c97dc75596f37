//! Periodic Fourier toolbox: transforms, multipliers (Airy group, fractional
//! derivatives, Bessel potentials, Hilbert transform) and Sobolev norms.
//!
//! All operators here act on the torus `[-L/2, L/2)` as a stand-in for the
//! real line; fields should be negligible near the boundary for the
//! whole-line interpretation to hold.

mod field;
mod grid;
mod multiplier;
mod norms;
mod transform;

pub use field::{forward_transform, inverse_transform, Field};
pub use grid::Grid;
pub use multiplier::{
    airy_multiplier, apply_multiplier, bessel_multiplier, derivative_multiplier,
    fractional_derivative_dx_multiplier, fractional_derivative_multiplier, hilbert_multiplier,
    SpectralMultiplier,
};
pub use norms::{homogeneous_sobolev_norm, lp_norm, sobolev_norm};
pub(crate) use norms::lp_norm_of_samples;
pub use transform::Transform;

/// Fraction of the L^2 mass carried by the outer 10% strips at each end.
/// A boundary diagnostic for the torus surrogate.
pub fn boundary_mass_fraction(f: &Field) -> f64 {
    let u = f.samples();
    let n = u.len();
    let strip = (n / 10).max(1);
    let total: f64 = u.iter().map(|v| v * v).sum();
    if total == 0.0 {
        return 0.0;
    }
    let edge: f64 = u[..strip].iter().chain(&u[n - strip..]).map(|v| v * v).sum();
    edge / total
}

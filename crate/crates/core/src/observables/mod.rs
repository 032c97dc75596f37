//! Functionals of solutions: conserved quantities, Ito drifts, the mixed
//! space-time norms of the local theory and the local existence radius and
//! time built from them.

mod existence;
mod invariants;
mod mixed;

pub use existence::{local_radius, local_time, ExistenceConstants, CONSTANTS_LABEL};
pub use invariants::{
    hamiltonian, hamiltonian_ito_drift, hamiltonian_ito_drift_signed, hamiltonian_signed, mass,
    mass_moment_drift, noise_projection_sum,
};
pub use mixed::{
    mixed_norm, sup_l2, xk_exponents, xk_norm, MixedNormSpec, NormComponent, NormOperator, TrajectoryView,
    XkNorm,
};

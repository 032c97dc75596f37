//! Time integration of `du = -u_xxx dt + N(u) dt + Phi dW` on a periodic grid.

mod config;
mod initial;
mod integrator;
mod nonlinear;
mod picard;

pub use config::{
    check_pad_factor, check_power, dealias_threshold, default_pad_factor, sigma_k, Scheme, SimConfig,
};
pub use initial::{
    discrete_soliton_residual, initial_data, soliton, soliton_residual, soliton_shape, InitialData, SOLITON_RESIDUAL_TOL};
pub use integrator::{
    exp_euler_step, integrate, integrate_with, strang_step, GivenIncrement, LiveNoise, NoNoise, NoisePath, NoiseSource,
    PathNoise, State, StepInfo, Stepper, Trajectory, BLOW_UP_THRESHOLD,
};
pub use nonlinear::{nonlinear_rhs, NonlinearScratch, NonlinearTerm};
pub use picard::{picard_solve, PicardReport, PicardSettings};

//! Pseudo-spectral simulation of the stochastic generalized KdV equation
//! `du + (u_xxx + mu u^k u_x) dt = Phi dW` on a periodic box, with the
//! Monte Carlo checks of its noise, moment and local well-posedness estimates.

pub mod cli;
pub mod dynamics;
pub mod error;
pub mod experiments;
pub mod noise;
pub mod observables;
pub mod spectral;

pub use error::{Error, Result};

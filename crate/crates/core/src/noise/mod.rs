//! Additive noise: the diagonal covariance operator, its Hilbert-Schmidt
//! norms, Wiener increments and exact sampling of the stochastic convolution.

mod convolution;
mod covariance;
mod rng;

pub use convolution::{
    convolution_path, convolution_step, sample_increment, ConvolutionSampler, IncrementSampler,
};
pub use covariance::{hs_norm, CovarianceOperator, NoiseProfile};
pub use rng::RngStream;

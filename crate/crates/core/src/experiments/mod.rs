//! Monte Carlo ensembles and the statistical checks built on them.

mod checks;
mod ensemble;
mod picard_study;
mod scaling;
pub mod stats;

pub use checks::{
    compare_means, convolution_variance_check, mass_ito_check, mass_ito_verdicts, moment_balance_check,
    ConvolutionReport, MassItoReport, MassItoSample, MassItoSpec, MomentReport, MomentSpec, Verdict,
};
pub use ensemble::{reduce, run_ensemble, saved_steps, EnsembleResult, EnsembleSpec, Observable, Reduction, TrajectoryRecord};
pub use picard_study::{picard_contraction_study, PicardStudy, PicardStudySpec, PicardTrajectory};
pub use scaling::{horizon_scaling_study, ScalingQuantity, ScalingSpec, ScalingStudy, LATTICE_SUP_NOTE};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::stats::{bootstrap_ci, mean_se, ols};
use crate::dynamics::check_power;
use crate::error::{Error, Result};
use crate::noise::{ConvolutionSampler, CovarianceOperator, RngStream};
use crate::observables::{mixed_norm, sup_l2, xk_norm, ExistenceConstants, MixedNormSpec, NormOperator, TrajectoryView};
use crate::spectral::{sobolev_norm, Field};

/// Note attached to every study built on a time supremum.
pub const LATTICE_SUP_NOTE: &str = "supremum taken over the time lattice; a lower estimator of the continuous-time supremum";

/// Functional of the stochastic convolution on `[0, T]` whose mean is
/// regressed against `T`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ScalingQuantity {
    /// `sup_t ||v(t)||^(2q)_{H^sigma}`.
    SupSobolevMoment { sigma: f64, q: u32 },
    /// `||v(T)||^(2q)_{H^sigma}`.
    MarginalSobolevMoment { sigma: f64, q: u32 },
    /// `||v||^2` in a mixed space-time norm.
    MixedNormSquared { spec: MixedNormSpec },
    /// `||v||^2_{X_k^T}`.
    XkNormSquared { k: u32 },
}

impl ScalingQuantity {
    pub fn name(&self) -> String {
        match self {
            ScalingQuantity::SupSobolevMoment { sigma, q } => format!("sup_h{sigma}_moment_q{q}"),
            ScalingQuantity::MarginalSobolevMoment { sigma, q } => format!("h{sigma}_moment_q{q}"),
            ScalingQuantity::MixedNormSquared { spec } => format!("mixed_norm_sq_q{}_p{}", spec.q_x, spec.p_t),
            ScalingQuantity::XkNormSquared { k } => format!("x{k}_norm_sq"),
        }
    }

    fn uses_sup(&self) -> bool {
        match self {
            ScalingQuantity::SupSobolevMoment { .. } | ScalingQuantity::XkNormSquared { .. } => true,
            ScalingQuantity::MixedNormSquared { spec } => spec.p_t.is_infinite(),
            ScalingQuantity::MarginalSobolevMoment { .. } => false,
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            ScalingQuantity::SupSobolevMoment { q, .. } | ScalingQuantity::MarginalSobolevMoment { q, .. } if *q < 1 => {
                Err(Error::invalid("q", "moment order must be >= 1"))
            }
            ScalingQuantity::XkNormSquared { k } => check_power(*k),
            _ => Ok(()),
        }
    }

    fn eval(&self, view: &TrajectoryView, consts: &ExistenceConstants) -> Result<f64> {
        Ok(match self {
            ScalingQuantity::SupSobolevMoment { sigma, q } => {
                sup_l2(view, NormOperator::Bessel { sigma: *sigma })?.powi(2 * *q as i32)
            }
            ScalingQuantity::MarginalSobolevMoment { sigma, q } => {
                let last = view.fields().last().expect("non-empty view");
                sobolev_norm(last, *sigma).powi(2 * *q as i32)
            }
            ScalingQuantity::MixedNormSquared { spec } => mixed_norm(view, spec)?.powi(2),
            ScalingQuantity::XkNormSquared { k } => xk_norm(view, *k, consts)?.value.powi(2),
        })
    }

    /// `sqrt(T) + T^2` for k = 2 and `T + T^2` for k = 3.
    pub fn envelope(&self, t: f64) -> Option<f64> {
        match self {
            ScalingQuantity::XkNormSquared { k: 2 } => Some(t.sqrt() + t * t),
            ScalingQuantity::XkNormSquared { k: 3 } => Some(t + t * t),
            _ => None,
        }
    }
}

#[derive(Clone, Debug)]
pub struct ScalingSpec {
    pub phi: CovarianceOperator,
    pub quantity: ScalingQuantity,
    pub horizons: Vec<f64>,
    /// Steps per horizon; the time lattice is `T / n_steps`.
    pub n_steps: usize,
    pub n_traj: usize,
    pub master_seed: u64,
    pub n_boot: usize,
    pub consts: ExistenceConstants,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScalingStudy {
    pub quantity: String,
    pub horizons: Vec<f64>,
    pub means: Vec<f64>,
    pub ses: Vec<f64>,
    /// Least-squares slope of `log E[quantity]` against `log T`.
    pub slope: f64,
    pub intercept: f64,
    /// Percentile bootstrap 95% interval of the slope, resampling whole
    /// trajectories across all horizons.
    pub slope_ci: (f64, f64),
    /// `E[quantity] / envelope(T)` for the X_k norms.
    pub envelope_ratio: Option<Vec<f64>>,
    /// `max / min` of `envelope_ratio`.
    pub envelope_spread: Option<f64>,
    pub note: Option<&'static str>,
    /// `samples[traj][horizon]`.
    #[serde(skip)]
    pub samples: Vec<Vec<f64>>,
}

fn log_slope(horizons: &[f64], means: &[f64]) -> (f64, f64) {
    let x: Vec<f64> = horizons.iter().map(|t| t.ln()).collect();
    let y: Vec<f64> = means.iter().map(|m| m.ln()).collect();
    let (b, a, _) = ols(&x, &y);
    (b, a)
}

/// Trajectory `i` uses stream `i` at every horizon, so the horizons share
/// their normal draws and differ only through `dt = T / n_steps`.
pub fn horizon_scaling_study(spec: &ScalingSpec) -> Result<ScalingStudy> {
    let hs = &spec.horizons;
    if hs.len() < 4 {
        return Err(Error::invalid("horizons", format!("need at least 4 horizons, got {}", hs.len())));
    }
    if hs.iter().any(|t| !(*t > 0.0) || !t.is_finite()) || hs.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::invalid("horizons", "must be positive and strictly increasing"));
    }
    if spec.n_steps == 0 || spec.n_traj < 2 {
        return Err(Error::invalid("n_steps/n_traj", "need n_steps >= 1 and n_traj >= 2"));
    }
    spec.quantity.validate()?;
    spec.consts.validate()?;
    let grid = spec.phi.grid().clone();
    let samplers = hs
        .iter()
        .map(|t| ConvolutionSampler::new(&spec.phi, t / spec.n_steps as f64))
        .collect::<Result<Vec<_>>>()?;

    let samples = (0..spec.n_traj as u64)
        .into_par_iter()
        .map(|id| -> Result<Vec<f64>> {
            hs.iter()
                .zip(&samplers)
                .map(|(t, sampler)| {
                    let mut rng = RngStream::new(spec.master_seed, id);
                    let dt = t / spec.n_steps as f64;
                    let mut v = grid.zero_coeffs();
                    let mut fields = Vec::with_capacity(spec.n_steps + 1);
                    fields.push(Field::zeros(&grid));
                    for _ in 0..spec.n_steps {
                        sampler.step_in_place(&mut v, &mut rng);
                        fields.push(Field::from_coeffs(&grid, v.clone())?);
                    }
                    let times: Vec<f64> = (0..=spec.n_steps).map(|i| i as f64 * dt).collect();
                    let view = TrajectoryView::new(&times, &fields)?;
                    spec.quantity.eval(&view, &spec.consts)
                })
                .collect()
        })
        .collect::<Result<Vec<_>>>()?;

    let mut means = Vec::with_capacity(hs.len());
    let mut ses = Vec::with_capacity(hs.len());
    for j in 0..hs.len() {
        let col: Vec<f64> = samples.iter().map(|r| r[j]).collect();
        let (m, se) = mean_se(&col);
        means.push(m);
        ses.push(se);
    }
    let (slope, intercept) = log_slope(hs, &means);
    let slope_ci = bootstrap_ci(
        &samples,
        |rows: &[&Vec<f64>]| {
            let m: Vec<f64> = (0..hs.len())
                .map(|j| rows.iter().map(|r| r[j]).sum::<f64>() / rows.len() as f64)
                .collect();
            log_slope(hs, &m).0
        },
        spec.n_boot,
        0.95,
        spec.master_seed ^ 0x5ca1_ab1e,
    );
    let envelope_ratio: Option<Vec<f64>> = spec.quantity.envelope(1.0).map(|_| {
        hs.iter()
            .zip(&means)
            .map(|(t, m)| m / spec.quantity.envelope(*t).unwrap())
            .collect()
    });
    let envelope_spread = envelope_ratio.as_ref().map(|r| {
        let hi = r.iter().cloned().fold(f64::MIN, f64::max);
        let lo = r.iter().cloned().fold(f64::MAX, f64::min);
        hi / lo
    });
    Ok(ScalingStudy {
        quantity: spec.quantity.name(),
        horizons: hs.clone(),
        means,
        ses,
        slope,
        intercept,
        slope_ci,
        envelope_ratio,
        envelope_spread,
        note: spec.quantity.uses_sup().then_some(LATTICE_SUP_NOTE),
        samples,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::Grid;

    fn spec(quantity: ScalingQuantity, n_traj: usize) -> ScalingSpec {
        let g = Grid::new(32, 10.0).unwrap();
        ScalingSpec {
            phi: CovarianceOperator::power_law(&g, 1.0, 2.0).unwrap().normalized(0.0, 1.0).unwrap(),
            quantity,
            horizons: vec![0.25, 0.5, 1.0, 2.0, 4.0],
            n_steps: 16,
            n_traj,
            master_seed: 4,
            n_boot: 200,
            consts: ExistenceConstants::default(),
        }
    }

    #[test]
    fn marginal_second_moment_is_linear() {
        let s = horizon_scaling_study(&spec(ScalingQuantity::MarginalSobolevMoment { sigma: 0.0, q: 1 }, 400)).unwrap();
        assert!((s.slope - 1.0).abs() < 0.05, "{}", s.slope);
        assert!(s.slope_ci.0 <= 1.0 && 1.0 <= s.slope_ci.1, "{:?}", s.slope_ci);
        assert!(s.note.is_none());
        assert!(s.envelope_ratio.is_none());
    }

    #[test]
    fn zero_noise_gives_zero_means() {
        let mut sp = spec(ScalingQuantity::SupSobolevMoment { sigma: 0.25, q: 1 }, 3);
        sp.phi = CovarianceOperator::zero(sp.phi.grid());
        let s = horizon_scaling_study(&sp).unwrap();
        assert!(s.means.iter().all(|m| *m == 0.0));
        assert_eq!(s.note, Some(LATTICE_SUP_NOTE));
    }

    #[test]
    fn rejects_short_or_unsorted_ladders() {
        let mut sp = spec(ScalingQuantity::XkNormSquared { k: 2 }, 3);
        sp.horizons = vec![1.0, 2.0, 4.0];
        assert!(horizon_scaling_study(&sp).is_err());
        sp.horizons = vec![1.0, 2.0, 2.0, 4.0];
        assert!(horizon_scaling_study(&sp).is_err());
        sp.horizons = vec![0.5, 1.0, 2.0, 4.0];
        sp.quantity = ScalingQuantity::XkNormSquared { k: 4 };
        assert!(horizon_scaling_study(&sp).is_err());
    }

    #[test]
    fn envelope_ratio_reported_for_xk() {
        let s = horizon_scaling_study(&spec(ScalingQuantity::XkNormSquared { k: 3 }, 4)).unwrap();
        let r = s.envelope_ratio.unwrap();
        assert_eq!(r.len(), 5);
        assert!(r.iter().all(|v| v.is_finite() && *v > 0.0));
        assert!(s.envelope_spread.unwrap() >= 1.0);
    }

    #[test]
    fn deterministic() {
        let sp = spec(ScalingQuantity::MixedNormSquared { spec: MixedNormSpec::new(4.0, 2.0, NormOperator::Identity) }, 6);
        assert_eq!(horizon_scaling_study(&sp).unwrap(), horizon_scaling_study(&sp).unwrap());
    }
}

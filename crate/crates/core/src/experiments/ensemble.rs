use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::stats::mean_se;
use crate::dynamics::{initial_data, InitialData, LiveNoise, SimConfig, State, Stepper};
use crate::error::{Error, Result};
use crate::noise::{CovarianceOperator, RngStream};
use crate::observables::{hamiltonian_ito_drift_signed, hamiltonian_signed, mass, mass_moment_drift};
use crate::spectral::{sobolev_norm, Field};

/// Scalar functional recorded at every saved time.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Observable {
    Mass,
    Hamiltonian,
    /// `||u||_{H^sigma}`.
    Sobolev { sigma: f64 },
    /// `max_j |u(x_j)|`.
    SupNorm,
    /// `||u||^(2q)`.
    MassMoment { q: u32 },
    /// Ito drift of `||u||^(2q)`.
    MassMomentDrift { q: u32 },
    /// Ito drift of the Hamiltonian.
    HamiltonianDrift,
}

impl Observable {
    /// CSV column name.
    pub fn column(&self) -> String {
        match self {
            Observable::Mass => "mass".into(),
            Observable::Hamiltonian => "hamiltonian".into(),
            Observable::Sobolev { sigma } => format!("h{sigma}_norm"),
            Observable::SupNorm => "sup_norm".into(),
            Observable::MassMoment { q } => format!("mass_pow{q}"),
            Observable::MassMomentDrift { q } => format!("mass_pow{q}_drift"),
            Observable::HamiltonianDrift => "hamiltonian_drift".into(),
        }
    }

    pub fn eval(&self, u: &Field, cfg: &SimConfig, phi: &CovarianceOperator) -> Result<f64> {
        Ok(match self {
            Observable::Mass => mass(u),
            Observable::Hamiltonian => hamiltonian_signed(u, cfg.k, cfg.sign())?,
            Observable::Sobolev { sigma } => sobolev_norm(u, *sigma),
            Observable::SupNorm => u.samples().iter().fold(0.0f64, |a, v| a.max(v.abs())),
            Observable::MassMoment { q } => mass(u).powi(*q as i32),
            Observable::MassMomentDrift { q } => mass_moment_drift(u, phi, *q)?,
            Observable::HamiltonianDrift => hamiltonian_ito_drift_signed(u, phi, cfg.k, cfg.sign())?,
        })
    }
}

#[derive(Clone, Debug)]
pub struct EnsembleSpec {
    /// Model, grid and time stepping. `base.seed` is ignored in favor of
    /// `master_seed`.
    pub base: SimConfig,
    pub phi: CovarianceOperator,
    pub initial: InitialData,
    pub n_traj: usize,
    pub observables: Vec<Observable>,
    pub master_seed: u64,
}

/// Observable table of one trajectory (`values[time][observable]`).
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TrajectoryRecord {
    pub stream_id: u64,
    pub values: Vec<Vec<f64>>,
    /// Time of blow-up, if any; `values` then stops before it.
    pub blow_up: Option<f64>,
}

/// Per-time statistics of each observable over the surviving trajectories.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Reduction {
    pub mean: Vec<Vec<f64>>,
    pub se: Vec<Vec<f64>>,
    pub ci_lo: Vec<Vec<f64>>,
    pub ci_hi: Vec<Vec<f64>>,
    pub n_used: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EnsembleResult {
    pub times: Vec<f64>,
    pub columns: Vec<String>,
    pub trajectories: Vec<TrajectoryRecord>,
    pub reduced: Reduction,
    pub blow_ups: usize,
}

/// Saved step indices: every `save_every`-th step and the last one.
pub fn saved_steps(cfg: &SimConfig) -> Vec<usize> {
    let n = cfg.n_steps();
    (0..=n).filter(|i| i % cfg.save_every == 0 || *i == n).collect()
}

/// Runs one trajectory and evaluates `observe` at every saved step.
pub(crate) fn observe_trajectory<F>(
    cfg: &SimConfig,
    phi: &CovarianceOperator,
    u0: &Field,
    rng: &mut RngStream,
    mut observe: F,
) -> Result<Option<f64>>
where
    F: FnMut(usize, &Field) -> Result<()>,
{
    let mut stepper = Stepper::new(cfg, u0.grid())?;
    let mut noise = LiveNoise::new(phi, cfg.dt, rng)?;
    let mut state = State::new(u0.clone().without_nyquist());
    let n = cfg.n_steps();
    observe(0, &state.u)?;
    for i in 1..=n {
        match stepper.step(&mut state, &mut noise) {
            Ok(_) => {}
            Err(Error::BlowUp { time, .. }) => return Ok(Some(time)),
            Err(e) => return Err(e),
        }
        if i % cfg.save_every == 0 || i == n {
            observe(i, &state.u)?;
        }
    }
    Ok(None)
}

/// Mean, standard error and normal 95% interval per time and observable,
/// over trajectories without blow-up, accumulated in stream order.
pub fn reduce(records: &[TrajectoryRecord], n_times: usize, n_obs: usize) -> Reduction {
    let used: Vec<&TrajectoryRecord> = records.iter().filter(|r| r.blow_up.is_none()).collect();
    let mut out = Reduction {
        mean: vec![vec![0.0; n_obs]; n_times],
        se: vec![vec![0.0; n_obs]; n_times],
        ci_lo: vec![vec![0.0; n_obs]; n_times],
        ci_hi: vec![vec![0.0; n_obs]; n_times],
        n_used: used.len(),
    };
    let mut column = Vec::with_capacity(used.len());
    for t in 0..n_times {
        for o in 0..n_obs {
            column.clear();
            column.extend(used.iter().map(|r| r.values[t][o]));
            let (m, se) = mean_se(&column);
            out.mean[t][o] = m;
            out.se[t][o] = se;
            out.ci_lo[t][o] = m - 1.96 * se;
            out.ci_hi[t][o] = m + 1.96 * se;
        }
    }
    out
}

/// Independent trajectories, trajectory `i` on stream `i` of `master_seed`.
/// The result does not depend on the number of worker threads.
pub fn run_ensemble(spec: &EnsembleSpec) -> Result<EnsembleResult> {
    if spec.n_traj < 2 {
        return Err(Error::invalid("n_traj", format!("need at least 2 trajectories, got {}", spec.n_traj)));
    }
    let cfg = &spec.base;
    cfg.validate()?;
    let grid = cfg.grid()?;
    grid.check_same(spec.phi.grid())?;
    let u0 = initial_data(&spec.initial, cfg.k, cfg.mu, &grid)?;
    let steps = saved_steps(cfg);
    let times: Vec<f64> = steps.iter().map(|i| *i as f64 * cfg.dt).collect();
    let records = (0..spec.n_traj as u64)
        .into_par_iter()
        .map(|id| -> Result<TrajectoryRecord> {
            let mut rng = RngStream::new(spec.master_seed, id);
            let mut values = Vec::with_capacity(steps.len());
            let blow_up = observe_trajectory(cfg, &spec.phi, &u0, &mut rng, |_, u| {
                let row = spec
                    .observables
                    .iter()
                    .map(|o| o.eval(u, cfg, &spec.phi))
                    .collect::<Result<Vec<f64>>>()?;
                values.push(row);
                Ok(())
            })?;
            Ok(TrajectoryRecord {
                stream_id: id,
                values,
                blow_up,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let blow_ups = records.iter().filter(|r| r.blow_up.is_some()).count();
    let reduced = reduce(&records, times.len(), spec.observables.len());
    Ok(EnsembleResult {
        times,
        columns: spec.observables.iter().map(|o| o.column()).collect(),
        trajectories: records,
        reduced,
        blow_ups,
    })
}

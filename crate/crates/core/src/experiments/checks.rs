use rayon::prelude::*;
use serde::Serialize;

use super::ensemble::observe_trajectory;
use super::stats::mean_se;
use crate::dynamics::{initial_data, GivenIncrement, InitialData, SimConfig, State, Stepper};
use crate::error::{Error, Result};
use crate::noise::{CovarianceOperator, ConvolutionSampler, IncrementSampler, RngStream};
use crate::observables::{mass, mass_moment_drift};
use crate::spectral::{airy_multiplier, sobolev_norm, Field};

/// Outcome of a statistical check.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Verdict {
    pub check: String,
    pub target: f64,
    pub estimate: f64,
    pub se: f64,
    pub bias_estimate: f64,
    pub pass: bool,
}

impl Verdict {
    /// `|estimate - target| <= 3 se + |bias|`, plus a roundoff floor of
    /// `1e-12` relative to the larger magnitude.
    pub fn within(check: impl Into<String>, target: f64, estimate: f64, se: f64, bias: f64) -> Self {
        Verdict {
            check: check.into(),
            target,
            estimate,
            se,
            bias_estimate: bias,
            pass: (estimate - target).abs()
                <= 3.0 * se + bias.abs() + 1e-12 * target.abs().max(estimate.abs()).max(1.0),
        }
    }
}

/// Two independent estimates of the same quantity agree within three
/// combined standard errors. `b` plays the role of the target.
pub fn compare_means(check: impl Into<String>, a: &Verdict, b: &Verdict) -> Verdict {
    let se = (a.se * a.se + b.se * b.se).sqrt();
    Verdict::within(check, b.estimate, a.estimate, se, 0.0)
}

#[derive(Clone, Debug, Serialize)]
pub struct ConvolutionReport {
    pub sigmas: Vec<f64>,
    /// `samples[traj][j] = ||v(T)||^2_{H^sigma_j}`.
    pub samples: Vec<Vec<f64>>,
    pub verdicts: Vec<Verdict>,
}

/// Monte Carlo mean of `||v(T)||^2_{H^sigma}` against `T ||Phi||^2_{HS(sigma)}`.
pub fn convolution_variance_check(
    phi: &CovarianceOperator,
    sigmas: &[f64],
    horizon: f64,
    n_steps: usize,
    n_traj: usize,
    master_seed: u64,
) -> Result<ConvolutionReport> {
    if n_steps == 0 || n_traj < 2 {
        return Err(Error::invalid("n_steps/n_traj", "need n_steps >= 1 and n_traj >= 2"));
    }
    if sigmas.iter().any(|s| !s.is_finite()) {
        return Err(Error::invalid("sigma", "orders must be finite"));
    }
    let grid = phi.grid().clone();
    let dt = horizon / n_steps as f64;
    let sampler = if phi.is_zero() {
        None
    } else {
        Some(ConvolutionSampler::new(phi, dt)?)
    };
    let samples = (0..n_traj as u64)
        .into_par_iter()
        .map(|id| {
            let mut rng = RngStream::new(master_seed, id);
            let mut v = grid.zero_coeffs();
            if let Some(s) = &sampler {
                for _ in 0..n_steps {
                    s.step_in_place(&mut v, &mut rng);
                }
            }
            let f = Field::from_coeffs(&grid, v).expect("grid sized");
            sigmas.iter().map(|s| sobolev_norm(&f, *s).powi(2)).collect::<Vec<f64>>()
        })
        .collect::<Vec<_>>();
    let verdicts = sigmas
        .iter()
        .enumerate()
        .map(|(j, s)| {
            let col: Vec<f64> = samples.iter().map(|r| r[j]).collect();
            let (m, se) = mean_se(&col);
            let target = horizon * phi.hs_norm(*s).powi(2);
            Verdict::within(format!("convolution-variance sigma={s} steps={n_steps}"), target, m, se, 0.0)
        })
        .collect();
    Ok(ConvolutionReport {
        sigmas: sigmas.to_vec(),
        samples,
        verdicts,
    })
}

#[derive(Clone, Debug)]
pub struct MassItoSpec {
    /// Coarse step in `base.dt`; the fine run uses `dt / 2` on the same
    /// Brownian path.
    pub base: SimConfig,
    pub phi: CovarianceOperator,
    pub initial: InitialData,
    pub n_traj: usize,
    pub master_seed: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MassItoSample {
    pub delta_coarse: f64,
    pub delta_fine: f64,
    /// Accumulated mass change of the deterministic substeps.
    pub defect_coarse: f64,
    pub defect_fine: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct MassItoReport {
    pub samples: Vec<MassItoSample>,
    pub blow_ups: usize,
    pub coarse: Verdict,
    pub fine: Verdict,
    /// `|bias(dt)| / |bias(dt/2)|`; `None` without a nonlinearity.
    pub bias_ratio: Option<f64>,
    pub pass: bool,
}

/// Mean of `||u(T)||^2 - ||u0||^2` against `T ||Phi||^2_HS` at `dt` and
/// `dt/2` on nested noise paths.
///
/// The scheme adds each increment after the deterministic substeps, so
/// `E[mass change] = n dt ||Phi||^2 + E[sum of deterministic defects]`
/// exactly; the mean defect is reported as the bias estimate. The fine run
/// passes if it is within `3 SE + |bias|` of the target; with the
/// nonlinearity on, the bias must also shrink at least twofold from `dt` to
/// `dt/2`.
pub fn mass_ito_check(spec: &MassItoSpec) -> Result<MassItoReport> {
    if spec.n_traj < 2 {
        return Err(Error::invalid("n_traj", "need at least 2 trajectories"));
    }
    let coarse_cfg = spec.base.clone();
    coarse_cfg.validate()?;
    let mut fine_cfg = coarse_cfg.clone();
    fine_cfg.dt = 0.5 * coarse_cfg.dt;
    let grid = coarse_cfg.grid()?;
    grid.check_same(spec.phi.grid())?;
    let u0 = initial_data(&spec.initial, coarse_cfg.k, coarse_cfg.mu, &grid)?.without_nyquist();
    let m0 = mass(&u0);
    let n_coarse = coarse_cfg.n_steps();
    let t_end = n_coarse as f64 * coarse_cfg.dt;
    let half = airy_multiplier(&grid, fine_cfg.dt);
    let sampler = if spec.phi.is_zero() {
        None
    } else {
        Some(IncrementSampler::new(&spec.phi, fine_cfg.dt)?)
    };

    let rows = (0..spec.n_traj as u64)
        .into_par_iter()
        .map(|id| -> Result<Option<MassItoSample>> {
            let mut rng = RngStream::new(spec.master_seed, id);
            let mut coarse = Stepper::new(&coarse_cfg, &grid)?;
            let mut fine = Stepper::new(&fine_cfg, &grid)?;
            let mut uc = State::new(u0.clone());
            let mut uf = State::new(u0.clone());
            let zero = grid.zero_coeffs();
            let mut eta1 = zero.clone();
            let mut eta2 = zero.clone();
            let mut eta_c = zero;
            let (mut dc, mut df) = (0.0, 0.0);
            for _ in 0..n_coarse {
                if let Some(s) = &sampler {
                    s.fill(&mut rng, &mut eta1);
                    s.fill(&mut rng, &mut eta2);
                }
                eta_c.copy_from_slice(&eta1);
                half.apply_to(&mut eta_c);
                for (c, e) in eta_c.iter_mut().zip(&eta2) {
                    *c += e;
                }
                let steps = [
                    fine.step(&mut uf, &mut GivenIncrement(&eta1)),
                    fine.step(&mut uf, &mut GivenIncrement(&eta2)),
                ];
                let step_c = coarse.step(&mut uc, &mut GivenIncrement(&eta_c));
                for r in steps {
                    match r {
                        Ok(info) => df += info.mass_defect,
                        Err(Error::BlowUp { .. }) => return Ok(None),
                        Err(e) => return Err(e),
                    }
                }
                match step_c {
                    Ok(info) => dc += info.mass_defect,
                    Err(Error::BlowUp { .. }) => return Ok(None),
                    Err(e) => return Err(e),
                }
            }
            Ok(Some(MassItoSample {
                delta_coarse: mass(&uc.u) - m0,
                delta_fine: mass(&uf.u) - m0,
                defect_coarse: dc,
                defect_fine: df,
            }))
        })
        .collect::<Result<Vec<_>>>()?;
    let blow_ups = rows.iter().filter(|r| r.is_none()).count();
    let samples: Vec<MassItoSample> = rows.into_iter().flatten().collect();
    Ok(mass_ito_verdicts(samples, blow_ups, t_end, &spec.phi, coarse_cfg.nonlinear))
}

/// Verdicts of [`mass_ito_check`] from stored samples.
pub fn mass_ito_verdicts(
    samples: Vec<MassItoSample>,
    blow_ups: usize,
    horizon: f64,
    phi: &CovarianceOperator,
    nonlinear: bool,
) -> MassItoReport {
    let target = horizon * phi.hs_norm(0.0).powi(2);
    let col = |f: fn(&MassItoSample) -> f64| samples.iter().map(f).collect::<Vec<f64>>();
    let (mc, sec) = mean_se(&col(|s| s.delta_coarse));
    let (mf, sef) = mean_se(&col(|s| s.delta_fine));
    let bc = mean_se(&col(|s| s.defect_coarse)).0;
    let bf = mean_se(&col(|s| s.defect_fine)).0;
    let coarse = Verdict::within("mass-ito dt", target, mc, sec, bc);
    let fine = Verdict::within("mass-ito dt/2", target, mf, sef, bf);
    let bias_ratio = if nonlinear { Some(bc.abs() / bf.abs()) } else { None };
    let shrinks = bias_ratio.map_or(true, |r| r >= 2.0);
    let pass = fine.pass && shrinks && blow_ups == 0;
    MassItoReport {
        samples,
        blow_ups,
        coarse,
        fine,
        bias_ratio,
        pass,
    }
}

#[derive(Clone, Debug)]
pub struct MomentSpec {
    pub base: SimConfig,
    pub phi: CovarianceOperator,
    pub initial: InitialData,
    pub n_traj: usize,
    pub master_seed: u64,
    pub q: u32,
    /// Number of disjoint windows `[a, b]` tiling the saved lattice.
    pub windows: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct MomentReport {
    pub times: Vec<f64>,
    /// `(a, b)` of every window.
    pub windows: Vec<(f64, f64)>,
    pub verdicts: Vec<Verdict>,
    pub blow_ups: usize,
    pub pass: bool,
}

/// Finite difference of `E ||u||^(2q)` over each window against the window
/// average of `E drift` (trapezoid on the saved lattice). The comparison is
/// made per trajectory, so the standard error accounts for the correlation
/// of both sides.
pub fn moment_balance_check(spec: &MomentSpec) -> Result<MomentReport> {
    if spec.q < 1 {
        return Err(Error::invalid("q", "moment order must be >= 1"));
    }
    if spec.n_traj < 2 {
        return Err(Error::invalid("n_traj", "need at least 2 trajectories"));
    }
    let cfg = &spec.base;
    cfg.validate()?;
    let grid = cfg.grid()?;
    grid.check_same(spec.phi.grid())?;
    let u0 = initial_data(&spec.initial, cfg.k, cfg.mu, &grid)?;
    let steps = super::ensemble::saved_steps(cfg);
    let times: Vec<f64> = steps.iter().map(|i| *i as f64 * cfg.dt).collect();
    let n_saved = times.len();
    if spec.windows == 0 || (n_saved - 1) % spec.windows != 0 {
        return Err(Error::invalid(
            "windows",
            format!("{} saved intervals cannot be split into {} windows", n_saved - 1, spec.windows),
        ));
    }
    let per = (n_saved - 1) / spec.windows;
    let windows: Vec<(usize, usize)> = (0..spec.windows).map(|j| (j * per, (j + 1) * per)).collect();
    let q = spec.q;

    let rows = (0..spec.n_traj as u64)
        .into_par_iter()
        .map(|id| -> Result<Option<Vec<(f64, f64)>>> {
            let mut rng = RngStream::new(spec.master_seed, id);
            let mut moment = Vec::with_capacity(n_saved);
            let mut drift = Vec::with_capacity(n_saved);
            let blow = observe_trajectory(cfg, &spec.phi, &u0, &mut rng, |_, u| {
                moment.push(mass(u).powi(q as i32));
                drift.push(mass_moment_drift(u, &spec.phi, q)?);
                Ok(())
            })?;
            if blow.is_some() {
                return Ok(None);
            }
            Ok(Some(
                windows
                    .iter()
                    .map(|&(a, b)| {
                        let len = times[b] - times[a];
                        let fd = (moment[b] - moment[a]) / len;
                        let avg: f64 = (a..b)
                            .map(|i| 0.5 * (drift[i] + drift[i + 1]) * (times[i + 1] - times[i]))
                            .sum::<f64>()
                            / len;
                        (fd, avg)
                    })
                    .collect(),
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    let blow_ups = rows.iter().filter(|r| r.is_none()).count();
    let rows: Vec<Vec<(f64, f64)>> = rows.into_iter().flatten().collect();
    let verdicts: Vec<Verdict> = windows
        .iter()
        .enumerate()
        .map(|(j, &(a, b))| {
            let fd: Vec<f64> = rows.iter().map(|r| r[j].0).collect();
            let dr: Vec<f64> = rows.iter().map(|r| r[j].1).collect();
            let diff: Vec<f64> = rows.iter().map(|r| r[j].0 - r[j].1).collect();
            let (m_fd, _) = mean_se(&fd);
            let (m_dr, _) = mean_se(&dr);
            let (_, se) = mean_se(&diff);
            Verdict::within(
                format!("moment-balance q={q} window=[{:.4}, {:.4}]", times[a], times[b]),
                m_dr,
                m_fd,
                se,
                0.0,
            )
        })
        .collect();
    let pass = blow_ups == 0 && verdicts.iter().all(|v| v.pass);
    Ok(MomentReport {
        windows: windows.iter().map(|&(a, b)| (times[a], times[b])).collect(),
        times,
        verdicts,
        blow_ups,
        pass,
    })
}

use rayon::prelude::*;
use serde::Serialize;

use super::checks::Verdict;
use crate::dynamics::{
    initial_data, integrate_with, picard_solve, sigma_k, InitialData, NoisePath, PicardSettings, Scheme, SimConfig,
    Trajectory,
};
use crate::error::{Error, Result};
use crate::noise::{CovarianceOperator, RngStream};
use crate::observables::{local_radius, local_time, ExistenceConstants, TrajectoryView, CONSTANTS_LABEL};
use crate::spectral::{sobolev_norm, Field};

#[derive(Clone, Debug)]
pub struct PicardStudySpec {
    /// Model and grid. `base.horizon` caps the existence time and
    /// `base.n_steps()` is the coarse step count on `[0, T]`; the fine run
    /// uses twice as many.
    pub base: SimConfig,
    pub phi: CovarianceOperator,
    pub initial: InitialData,
    pub consts: ExistenceConstants,
    pub n_traj: usize,
    pub master_seed: u64,
    pub tol: f64,
    pub max_iter: usize,
    /// A trajectory contracts if every difference ratio is at most this.
    pub ratio_bound: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PicardTrajectory {
    pub stream_id: u64,
    pub horizon: f64,
    pub radius: f64,
    pub admissible_time: f64,
    pub ratios_fine: Vec<f64>,
    pub ratios_coarse: Vec<f64>,
    pub iterations_fine: usize,
    pub contracted: bool,
    /// `max_t ||u_picard - u_euler||_{H^sigma(k)}` at the fine and coarse step.
    pub mismatch_fine: Option<f64>,
    pub mismatch_coarse: Option<f64>,
    /// `log2(mismatch_coarse / mismatch_fine)`.
    pub order: Option<f64>,
    pub failure: Option<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct PicardStudy {
    pub constants_label: &'static str,
    pub trajectories: Vec<PicardTrajectory>,
    pub contraction_fraction: f64,
    pub median_order: Option<f64>,
    pub contraction: Verdict,
    pub order: Verdict,
    pub pass: bool,
}

/// Stream `id` sampled on `[0, t]` with `steps` steps. Every call draws the
/// same normals, so paths for different `t` differ only by scaling.
fn fine_path(spec: &PicardStudySpec, id: u64, t: f64, steps: usize) -> Result<NoisePath> {
    let mut rng = RngStream::new(spec.master_seed, id);
    NoisePath::sample(&spec.phi, t / steps as f64, steps, &mut rng)
}

fn max_distance(a: &Trajectory, b: &Trajectory, sigma: f64) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::invalid("trajectory", format!("lattice sizes differ: {} vs {}", a.len(), b.len())));
    }
    let mut d = 0.0f64;
    for (x, y) in a.fields.iter().zip(&b.fields) {
        d = d.max(sobolev_norm(&x.sub(y)?, sigma));
    }
    Ok(d)
}

fn median(mut xs: Vec<f64>) -> Option<f64> {
    if xs.is_empty() {
        return None;
    }
    xs.sort_by(|a, b| a.total_cmp(b));
    let n = xs.len();
    Some(if n % 2 == 1 { xs[n / 2] } else { 0.5 * (xs[n / 2 - 1] + xs[n / 2]) })
}

/// Picks the largest `T <= cap` with `T <= local_time(local_radius(u0, v on
/// [0, T]))`, then solves the mild equation by Picard iteration on the fine
/// and the twice coarser lattice of one noise path and compares each with
/// exponential Euler on the same increments.
fn one_trajectory(spec: &PicardStudySpec, u0: &Field, id: u64) -> Result<PicardTrajectory> {
    let cfg = &spec.base;
    let k = cfg.k;
    let sigma = sigma_k(k);
    let n_coarse = cfg.n_steps();
    let n_fine = 2 * n_coarse;

    // (path, v, R(T), local_time(R(T))) for the path on [0, T]
    let eval = |t: f64| -> Result<(NoisePath, Vec<Field>, f64, f64)> {
        let path = fine_path(spec, id, t, n_fine)?;
        let v = path.convolution();
        let times: Vec<f64> = (0..=n_fine).map(|i| i as f64 * path.dt()).collect();
        let radius = local_radius(u0, &TrajectoryView::new(&times, &v)?, k, &spec.consts)?;
        // zero data and zero noise exist for all time
        let admissible = if radius == 0.0 {
            f64::INFINITY
        } else {
            local_time(radius, k, &spec.consts)?
        };
        Ok((path, v, radius, admissible))
    };

    let cap = cfg.horizon;
    let mut best = eval(cap)?;
    let mut t = cap;
    if cap > best.3 {
        // shrink to an admissible horizon, then bisect in log T for the
        // largest one below the cap
        let mut lo = best.3;
        let mut found = None;
        for _ in 0..60 {
            let e = eval(lo)?;
            if lo <= e.3 {
                found = Some(e);
                break;
            }
            lo = e.3;
        }
        let Some(e) = found else {
            return Err(Error::invalid("horizon", "no admissible existence time found"));
        };
        best = e;
        let mut hi = cap;
        while hi / lo > 1.0 + 1e-6 {
            let mid = (lo * hi).sqrt();
            let e = eval(mid)?;
            if mid <= e.3 {
                lo = mid;
                best = e;
            } else {
                hi = mid;
            }
        }
        t = lo;
    }
    let (path, v_fine, radius, admissible) = best;

    let mut out = PicardTrajectory {
        stream_id: id,
        horizon: t,
        radius,
        admissible_time: admissible,
        ratios_fine: Vec::new(),
        ratios_coarse: Vec::new(),
        iterations_fine: 0,
        contracted: false,
        mismatch_fine: None,
        mismatch_coarse: None,
        order: None,
        failure: None,
    };
    let settings = PicardSettings {
        k,
        mu: cfg.sign(),
        pad_factor: cfg.pad_factor,
        tol: spec.tol,
        max_iter: spec.max_iter,
        nonlinear: cfg.nonlinear,
    };
    let coarse = path.coarsen(2)?;
    let v_coarse = coarse.convolution();
    let solve = |v: &[Field]| match picard_solve(u0, v, t, &settings) {
        Ok(r) => Ok(Ok(r)),
        Err(Error::NonContraction { iterations, last, history }) => Ok(Err((iterations, last, history))),
        Err(e) => Err(e),
    };
    let (fine_rep, coarse_rep) = match (solve(&v_fine)?, solve(&v_coarse)?) {
        (Ok(f), Ok(c)) => (f, c),
        (f, c) => {
            let describe = |r: &std::result::Result<_, (usize, f64, Vec<f64>)>, which: &str| match r {
                Err((it, last, _)) => Some(format!("{which}: no convergence after {it} iterations (last {last:e})")),
                Ok(_) => None,
            };
            out.failure = describe(&f, "fine").or(describe(&c, "coarse"));
            return Ok(out);
        }
    };
    out.ratios_fine = fine_rep.ratios();
    out.ratios_coarse = coarse_rep.ratios();
    out.iterations_fine = fine_rep.iterations();
    out.contracted = out
        .ratios_fine
        .iter()
        .chain(&out.ratios_coarse)
        .all(|r| *r <= spec.ratio_bound);

    let euler = |p: &NoisePath, steps: usize| -> Result<Trajectory> {
        let mut c = cfg.clone();
        c.scheme = Scheme::ExpEuler;
        c.dt = t / steps as f64;
        c.horizon = t;
        c.save_every = 1;
        integrate_with(&c, u0, &mut p.replay())
    };
    let ef = euler(&path, n_fine);
    let ec = euler(&coarse, n_coarse);
    match (ef, ec) {
        (Ok(ef), Ok(ec)) => {
            let mf = max_distance(&fine_rep.solution, &ef, sigma)?;
            let mc = max_distance(&coarse_rep.solution, &ec, sigma)?;
            out.mismatch_fine = Some(mf);
            out.mismatch_coarse = Some(mc);
            if mf > 0.0 && mc > 0.0 {
                out.order = Some((mc / mf).log2());
            }
        }
        (Err(Error::BlowUp { time, .. }), _) | (_, Err(Error::BlowUp { time, .. })) => {
            out.failure = Some(format!("exponential Euler blew up at t = {time}"));
        }
        (Err(e), _) | (_, Err(e)) => return Err(e),
    }
    Ok(out)
}

/// Contraction census and cross-solver convergence order over `n_traj`
/// noise paths. Passes when at least 95% of trajectories contract and the
/// median order lies in `[0.75, 1.25]`.
pub fn picard_contraction_study(spec: &PicardStudySpec) -> Result<PicardStudy> {
    if spec.n_traj < 1 {
        return Err(Error::invalid("n_traj", "need at least 1 trajectory"));
    }
    if !(spec.ratio_bound > 0.0 && spec.ratio_bound < 1.0) {
        return Err(Error::invalid("ratio_bound", "must lie in (0, 1)"));
    }
    spec.base.validate()?;
    spec.consts.validate()?;
    let grid = spec.base.grid()?;
    grid.check_same(spec.phi.grid())?;
    let u0 = initial_data(&spec.initial, spec.base.k, spec.base.mu, &grid)?.without_nyquist();
    let trajectories = (0..spec.n_traj as u64)
        .into_par_iter()
        .map(|id| one_trajectory(spec, &u0, id))
        .collect::<Result<Vec<_>>>()?;
    let n = trajectories.len() as f64;
    let contracted = trajectories.iter().filter(|r| r.contracted).count() as f64;
    let fraction = contracted / n;
    let median_order = median(trajectories.iter().filter_map(|r| r.order).collect());
    let contraction = Verdict {
        check: "picard contraction fraction".into(),
        target: 0.95,
        estimate: fraction,
        se: (fraction * (1.0 - fraction) / n).sqrt(),
        bias_estimate: 0.0,
        pass: fraction >= 0.95,
    };
    let order = Verdict {
        check: "picard vs exponential Euler median order".into(),
        target: 1.0,
        estimate: median_order.unwrap_or(f64::NAN),
        se: 0.0,
        bias_estimate: 0.0,
        pass: median_order.is_some_and(|m| (0.75..=1.25).contains(&m)),
    };
    let pass = contraction.pass && order.pass;
    Ok(PicardStudy {
        constants_label: CONSTANTS_LABEL,
        trajectories,
        contraction_fraction: fraction,
        median_order,
        contraction,
        order,
        pass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(initial: InitialData, noise: f64, n_traj: usize) -> PicardStudySpec {
        let base = SimConfig::new(2, 64, 30.0, 1.0 / 32.0, 0.5);
        let grid = base.grid().unwrap();
        let phi = if noise == 0.0 {
            CovarianceOperator::zero(&grid)
        } else {
            CovarianceOperator::power_law(&grid, 1.0, 2.0).unwrap().normalized(1.1, noise).unwrap()
        };
        PicardStudySpec {
            base,
            phi,
            initial,
            consts: ExistenceConstants::default(),
            n_traj,
            master_seed: 8,
            tol: 1e-11,
            max_iter: 60,
            ratio_bound: 0.9,
        }
    }

    #[test]
    fn zero_problem_needs_one_iteration() {
        let s = picard_contraction_study(&spec(InitialData::Zero, 0.0, 1)).unwrap();
        let t = &s.trajectories[0];
        assert_eq!(t.iterations_fine, 1);
        assert!(t.ratios_fine.is_empty());
        assert!(t.contracted);
        assert_eq!(t.mismatch_fine, Some(0.0));
        assert!(t.order.is_none());
        assert_eq!(s.contraction_fraction, 1.0);
    }

    #[test]
    fn small_data_contracts_at_first_order() {
        let g = InitialData::Gaussian {
            amplitude: 0.3,
            width: 1.0,
            center: 0.0,
        };
        let s = picard_contraction_study(&spec(g, 0.05, 4)).unwrap();
        assert_eq!(s.contraction_fraction, 1.0, "{:?}", s.trajectories);
        for t in &s.trajectories {
            assert!(t.horizon <= t.admissible_time);
            assert!(t.mismatch_fine.unwrap() < t.mismatch_coarse.unwrap());
        }
        let m = s.median_order.unwrap();
        assert!((0.75..=1.25).contains(&m), "{m}");
    }

    #[test]
    fn large_radius_shrinks_horizon() {
        let g = InitialData::Gaussian {
            amplitude: 2.0,
            width: 1.0,
            center: 0.0,
        };
        let s = picard_contraction_study(&spec(g, 0.0, 1)).unwrap();
        let t = &s.trajectories[0];
        assert!(t.horizon < 0.5);
        assert!(t.horizon <= t.admissible_time);
    }
}

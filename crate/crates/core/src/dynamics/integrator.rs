use log::warn;
use num_complex::Complex64;

use super::config::{Scheme, SimConfig};
use super::nonlinear::{NonlinearScratch, NonlinearTerm};
use crate::error::{Error, Result};
use crate::noise::{CovarianceOperator, IncrementSampler, RngStream};
use crate::spectral::{airy_multiplier, Field, Grid, SpectralMultiplier};

/// Sup norm beyond which a run is declared blown up.
pub const BLOW_UP_THRESHOLD: f64 = 1e8;

/// Snapshots of a run. `times[i]` is the time of `fields[i]`.
#[derive(Clone, Debug)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub fields: Vec<Field>,
}

impl Trajectory {
    pub fn new() -> Self {
        Trajectory {
            times: Vec::new(),
            fields: Vec::new(),
        }
    }

    pub fn push(&mut self, t: f64, u: Field) {
        self.times.push(t);
        self.fields.push(u);
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn last(&self) -> Option<&Field> {
        self.fields.last()
    }

    pub fn final_time(&self) -> f64 {
        self.times.last().copied().unwrap_or(0.0)
    }
}

impl Default for Trajectory {
    fn default() -> Self {
        Self::new()
    }
}

/// Current solution, and optionally the stochastic convolution driven by the
/// same increments.
#[derive(Clone, Debug)]
pub struct State {
    pub t: f64,
    pub u: Field,
    pub v: Option<Field>,
}

impl State {
    pub fn new(u: Field) -> Self {
        State { t: 0.0, u, v: None }
    }

    pub fn with_convolution(u: Field) -> Self {
        let v = Field::zeros(u.grid());
        State { t: 0.0, u, v: Some(v) }
    }
}

/// Supplies one increment `Phi (W(t + dt) - W(t))` per step.
pub trait NoiseSource {
    /// Writes the next increment into `out`. Returns `false` when the
    /// increment is identically zero (and `out` may be left untouched).
    fn next_increment(&mut self, out: &mut [Complex64]) -> bool;
}

pub struct NoNoise;

impl NoiseSource for NoNoise {
    fn next_increment(&mut self, _out: &mut [Complex64]) -> bool {
        false
    }
}

/// Fresh increments drawn from a random stream.
pub struct LiveNoise<'a> {
    sampler: Option<IncrementSampler>,
    rng: &'a mut RngStream,
}

impl<'a> LiveNoise<'a> {
    pub fn new(phi: &CovarianceOperator, dt: f64, rng: &'a mut RngStream) -> Result<Self> {
        let sampler = if phi.is_zero() {
            None
        } else {
            Some(IncrementSampler::new(phi, dt)?)
        };
        Ok(LiveNoise { sampler, rng })
    }
}

impl NoiseSource for LiveNoise<'_> {
    fn next_increment(&mut self, out: &mut [Complex64]) -> bool {
        match &self.sampler {
            Some(s) => {
                s.fill(self.rng, out);
                true
            }
            None => false,
        }
    }
}

/// A stored sequence of increments on a fixed step.
#[derive(Clone, Debug)]
pub struct NoisePath {
    grid: Grid,
    dt: f64,
    increments: Vec<Vec<Complex64>>,
}

impl NoisePath {
    pub fn sample(phi: &CovarianceOperator, dt: f64, n_steps: usize, rng: &mut RngStream) -> Result<Self> {
        let sampler = IncrementSampler::new(phi, dt)?;
        let grid = phi.grid().clone();
        let increments = (0..n_steps)
            .map(|_| {
                let mut eta = grid.zero_coeffs();
                sampler.fill(rng, &mut eta);
                eta
            })
            .collect();
        Ok(NoisePath { grid, dt, increments })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn len(&self) -> usize {
        self.increments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.increments.is_empty()
    }

    pub fn increments(&self) -> &[Vec<Complex64>] {
        &self.increments
    }

    /// Path on the step `factor * dt` driven by the same Brownian motion.
    ///
    /// Consecutive blocks are merged as `sum_j S((factor - 1 - j) dt) eta_j`,
    /// which is exactly the convolution increment over the coarse step, so
    /// the coarse linear flow agrees with the fine one at shared times.
    pub fn coarsen(&self, factor: usize) -> Result<Self> {
        if factor == 0 || self.len() % factor != 0 {
            return Err(Error::invalid(
                "factor",
                format!("{} steps cannot be grouped in blocks of {factor}", self.len()),
            ));
        }
        let s = airy_multiplier(&self.grid, self.dt);
        let increments = self
            .increments
            .chunks(factor)
            .map(|block| {
                let mut acc = self.grid.zero_coeffs();
                for eta in block {
                    s.apply_to(&mut acc);
                    for (a, e) in acc.iter_mut().zip(eta) {
                        *a += e;
                    }
                }
                acc
            })
            .collect();
        Ok(NoisePath {
            grid: self.grid.clone(),
            dt: self.dt * factor as f64,
            increments,
        })
    }

    /// Stochastic convolution on the path's time lattice, starting from 0.
    pub fn convolution(&self) -> Vec<Field> {
        let s = airy_multiplier(&self.grid, self.dt);
        let mut v = self.grid.zero_coeffs();
        let mut out = Vec::with_capacity(self.len() + 1);
        out.push(Field::zeros(&self.grid));
        for eta in &self.increments {
            s.apply_to(&mut v);
            for (a, e) in v.iter_mut().zip(eta) {
                *a += e;
            }
            out.push(Field::from_coeffs(&self.grid, v.clone()).expect("grid sized"));
        }
        out
    }

    pub fn replay(&self) -> PathNoise<'_> {
        PathNoise { path: self, next: 0 }
    }
}

pub struct PathNoise<'a> {
    path: &'a NoisePath,
    next: usize,
}

impl NoiseSource for PathNoise<'_> {
    fn next_increment(&mut self, out: &mut [Complex64]) -> bool {
        let eta = &self.path.increments[self.next];
        self.next += 1;
        out.copy_from_slice(eta);
        true
    }
}

/// Feeds a single externally built increment.
pub struct GivenIncrement<'a>(pub &'a [Complex64]);

impl NoiseSource for GivenIncrement<'_> {
    fn next_increment(&mut self, out: &mut [Complex64]) -> bool {
        out.copy_from_slice(self.0);
        true
    }
}

/// Per-step diagnostics.
#[derive(Clone, Copy, Debug, Default)]
pub struct StepInfo {
    /// `max |u|` seen by the nonlinearity at the first stage.
    pub sup: f64,
    /// Change of `||u||^2` caused by the nonlinear substep, computed from the
    /// increment as `2 (u, delta) + ||delta||^2` (the Airy factors are
    /// unitary and contribute nothing).
    pub mass_defect: f64,
}

/// Time stepper with all multipliers and buffers preallocated.
#[derive(Clone, Debug)]
pub struct Stepper {
    grid: Grid,
    dt: f64,
    scheme: Scheme,
    k: u32,
    cfl: f64,
    nonlinear: Option<NonlinearTerm>,
    half: SpectralMultiplier,
    full: SpectralMultiplier,
    scratch: Option<NonlinearScratch>,
    k1: Vec<Complex64>,
    k2: Vec<Complex64>,
    y: Vec<Complex64>,
    acc: Vec<Complex64>,
    eta: Vec<Complex64>,
    cfl_warned: bool,
}

impl Stepper {
    pub fn new(cfg: &SimConfig, grid: &Grid) -> Result<Self> {
        cfg.validate()?;
        if grid.n() != cfg.n || grid.length() != cfg.length {
            return Err(Error::GridMismatch(format!(
                "config asks for n = {}, L = {}; grid has n = {}, L = {}",
                cfg.n,
                cfg.length,
                grid.n(),
                grid.length()
            )));
        }
        let nonlinear = if cfg.nonlinear {
            Some(NonlinearTerm::new(grid, cfg.k, cfg.sign(), cfg.pad_factor)?)
        } else {
            None
        };
        let scratch = nonlinear.as_ref().map(|n| n.scratch());
        let z = grid.zero_coeffs();
        Ok(Stepper {
            grid: grid.clone(),
            dt: cfg.dt,
            scheme: cfg.scheme,
            k: cfg.k,
            cfl: cfg.cfl,
            nonlinear,
            half: airy_multiplier(grid, 0.5 * cfg.dt),
            full: airy_multiplier(grid, cfg.dt),
            scratch,
            k1: z.clone(),
            k2: z.clone(),
            y: z.clone(),
            acc: z.clone(),
            eta: z,
            cfl_warned: false,
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    /// Deterministic part of one step, in place on the coefficients.
    pub fn deterministic(&mut self, u: &mut [Complex64]) -> StepInfo {
        let dt = self.dt;
        let Some(term) = &self.nonlinear else {
            self.full.apply_to(u);
            return StepInfo::default();
        };
        let s = self.scratch.as_mut().expect("scratch exists with the nonlinearity");
        let sup;
        let mass_defect;
        match self.scheme {
            Scheme::ExpEuler => {
                sup = term.eval_into(u, &mut self.k1, s);
                for d in self.k1.iter_mut() {
                    *d *= dt;
                }
                mass_defect = increment_defect(&self.grid, u, &self.k1);
                for (a, b) in u.iter_mut().zip(&self.k1) {
                    *a += b;
                }
                self.full.apply_to(u);
            }
            Scheme::Strang => {
                self.half.apply_to(u);
                // classical RK4 on u' = N(u); acc holds the weighted slope sum
                sup = term.eval_into(u, &mut self.k1, s);
                self.acc.copy_from_slice(&self.k1);
                for ((y, a), b) in self.y.iter_mut().zip(u.iter()).zip(&self.k1) {
                    *y = a + 0.5 * dt * b;
                }
                term.eval_into(&self.y, &mut self.k2, s);
                for (((y, a), b), c) in self.y.iter_mut().zip(u.iter()).zip(&self.k2).zip(self.acc.iter_mut()) {
                    *y = a + 0.5 * dt * b;
                    *c += 2.0 * b;
                }
                term.eval_into(&self.y, &mut self.k2, s);
                for (((y, a), b), c) in self.y.iter_mut().zip(u.iter()).zip(&self.k2).zip(self.acc.iter_mut()) {
                    *y = a + dt * b;
                    *c += 2.0 * b;
                }
                term.eval_into(&self.y, &mut self.k2, s);
                for (c, b) in self.acc.iter_mut().zip(&self.k2) {
                    *c = dt / 6.0 * (*c + b);
                }
                mass_defect = increment_defect(&self.grid, u, &self.acc);
                for (a, c) in u.iter_mut().zip(&self.acc) {
                    *a += c;
                }
                self.half.apply_to(u);
            }
        }
        if !self.cfl_warned && sup > 0.0 {
            let limit = self.cfl * self.grid.dx() / sup.powi(self.k as i32);
            if dt > limit {
                warn!(
                    "dt = {dt:e} exceeds the advective limit {limit:e} (max|u| = {sup:.3e}); results may be inaccurate"
                );
                self.cfl_warned = true;
            }
        }
        StepInfo { sup, mass_defect }
    }

    /// One full step: deterministic part, then the noise increment.
    pub fn step(&mut self, state: &mut State, noise: &mut dyn NoiseSource) -> Result<StepInfo> {
        let info = self.deterministic(state.u.coeffs_mut());
        let has_noise = noise.next_increment(&mut self.eta);
        if has_noise {
            for (a, e) in state.u.coeffs_mut().iter_mut().zip(&self.eta) {
                *a += e;
            }
        }
        if let Some(v) = state.v.as_mut() {
            let c = v.coeffs_mut();
            self.full.apply_to(c);
            if has_noise {
                for (a, e) in c.iter_mut().zip(&self.eta) {
                    *a += e;
                }
            }
        }
        state.t += self.dt;
        check_blow_up(&state.u, state.t)?;
        Ok(info)
    }
}

/// `||u + d||^2 - ||u||^2` without forming the difference of two large
/// numbers.
fn increment_defect(grid: &Grid, u: &[Complex64], d: &[Complex64]) -> f64 {
    let s: f64 = u
        .iter()
        .zip(d)
        .enumerate()
        .map(|(i, (a, b))| grid.multiplicity(i) * (2.0 * (a.conj() * b).re + b.norm_sqr()))
        .sum();
    grid.length() * s
}

/// Errors with `BlowUp` if `u` is non-finite or its sup norm exceeds the
/// threshold. The coefficient sum bounds the sup norm, so samples are only
/// formed when that bound is exceeded.
fn check_blow_up(u: &Field, t: f64) -> Result<()> {
    let g = u.grid();
    let bound: f64 = u
        .coeffs()
        .iter()
        .enumerate()
        .map(|(i, c)| g.multiplicity(i) * c.norm())
        .sum();
    if bound.is_finite() && bound <= BLOW_UP_THRESHOLD {
        return Ok(());
    }
    let sup = u.samples().iter().fold(0.0f64, |a, v| {
        if v.is_nan() || a.is_nan() {
            f64::NAN
        } else {
            a.max(v.abs())
        }
    });
    if sup.is_finite() && sup <= BLOW_UP_THRESHOLD {
        Ok(())
    } else {
        Err(Error::BlowUp {
            time: t,
            sup_norm: sup,
            partial: None,
        })
    }
}

pub fn strang_step(
    state: &State,
    cfg: &SimConfig,
    phi: &CovarianceOperator,
    rng: &mut RngStream,
) -> Result<State> {
    single_step(state, cfg, Scheme::Strang, phi, rng)
}

pub fn exp_euler_step(
    state: &State,
    cfg: &SimConfig,
    phi: &CovarianceOperator,
    rng: &mut RngStream,
) -> Result<State> {
    single_step(state, cfg, Scheme::ExpEuler, phi, rng)
}

fn single_step(
    state: &State,
    cfg: &SimConfig,
    scheme: Scheme,
    phi: &CovarianceOperator,
    rng: &mut RngStream,
) -> Result<State> {
    let mut cfg = cfg.clone();
    cfg.scheme = scheme;
    let mut stepper = Stepper::new(&cfg, state.u.grid())?;
    let mut noise = LiveNoise::new(phi, cfg.dt, rng)?;
    let mut next = state.clone();
    stepper.step(&mut next, &mut noise)?;
    Ok(next)
}

/// Integrates from `u0` to `cfg.horizon`, saving every `cfg.save_every`
/// steps and always the final state. The Nyquist mode of `u0` is dropped.
pub fn integrate(
    cfg: &SimConfig,
    phi: &CovarianceOperator,
    u0: &Field,
    rng: &mut RngStream,
) -> Result<Trajectory> {
    let mut noise = LiveNoise::new(phi, cfg.dt, rng)?;
    integrate_with(cfg, u0, &mut noise)
}

/// Same as [`integrate`] with an explicit increment source.
pub fn integrate_with(cfg: &SimConfig, u0: &Field, noise: &mut dyn NoiseSource) -> Result<Trajectory> {
    let grid = u0.grid().clone();
    let mut stepper = Stepper::new(cfg, &grid)?;
    let n_steps = cfg.n_steps();
    let mut state = State::new(u0.clone().without_nyquist());
    let mut traj = Trajectory::new();
    traj.push(0.0, state.u.clone());
    for i in 1..=n_steps {
        match stepper.step(&mut state, noise) {
            Ok(_) => {}
            Err(Error::BlowUp { time, sup_norm, .. }) => {
                return Err(Error::BlowUp {
                    time,
                    sup_norm,
                    partial: Some(Box::new(traj)),
                })
            }
            Err(e) => return Err(e),
        }
        if i % cfg.save_every == 0 || i == n_steps {
            traj.push(i as f64 * cfg.dt, state.u.clone());
        }
    }
    Ok(traj)
}

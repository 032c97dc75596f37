use num_complex::Complex64;

use super::config::{check_pad_factor, sigma_k};
use super::integrator::Trajectory;
use super::nonlinear::NonlinearTerm;
use crate::error::{Error, Result};
use crate::spectral::{airy_multiplier, Field};

#[derive(Clone, Debug)]
pub struct PicardSettings {
    pub k: u32,
    pub mu: f64,
    pub pad_factor: usize,
    /// Stop when successive iterates differ by less than this in
    /// `sup_t ||.||_{H^sigma(k)}`.
    pub tol: f64,
    pub max_iter: usize,
    pub nonlinear: bool,
}

impl PicardSettings {
    pub fn new(k: u32) -> Self {
        PicardSettings {
            k,
            mu: 1.0,
            pad_factor: super::config::default_pad_factor(k),
            tol: 1e-12,
            max_iter: 50,
            nonlinear: true,
        }
    }
}

#[derive(Clone, Debug)]
pub struct PicardReport {
    pub solution: Trajectory,
    /// `sup_t ||u^(j+1) - u^(j)||_{H^sigma(k)}` for each iteration.
    pub differences: Vec<f64>,
}

impl PicardReport {
    pub fn iterations(&self) -> usize {
        self.differences.len()
    }

    /// `d_(j+1) / d_j`.
    pub fn ratios(&self) -> Vec<f64> {
        self.differences.windows(2).map(|w| w[1] / w[0]).collect()
    }
}

/// Fixed-point iteration for the mild equation
/// `u(t) = S(t) u0 + v(t) + int_0^t S(t - s) N(u(s)) ds`
/// on the time lattice of `v_path` (uniform step `horizon / (len - 1)`).
///
/// The Duhamel integral uses the trapezoid rule, built by the recursion
/// `B_i = S(dt) B_(i-1) + N_i`. Starts from the linear part and errors with
/// `NonContraction` if `tol` is not reached within `max_iter` iterations.
pub fn picard_solve(u0: &Field, v_path: &[Field], horizon: f64, settings: &PicardSettings) -> Result<PicardReport> {
    if v_path.len() < 2 {
        return Err(Error::invalid("v_path", "need at least two time levels"));
    }
    if !(horizon > 0.0) {
        return Err(Error::invalid("horizon", format!("must be > 0, got {horizon}")));
    }
    check_pad_factor(settings.k, settings.pad_factor)?;
    let grid = u0.grid().clone();
    for v in v_path {
        grid.check_same(v.grid())?;
    }
    let n_steps = v_path.len() - 1;
    let dt = horizon / n_steps as f64;
    let sigma = sigma_k(settings.k);
    let weights: Vec<f64> = grid
        .xi()
        .iter()
        .enumerate()
        .map(|(i, xi)| grid.multiplicity(i) * (1.0 + xi * xi).powf(sigma))
        .collect();
    let dist = |a: &[Complex64], b: &[Complex64]| -> f64 {
        let s: f64 = a
            .iter()
            .zip(b)
            .zip(&weights)
            .map(|((x, y), w)| w * (x - y).norm_sqr())
            .sum();
        (grid.length() * s).sqrt()
    };

    let step = airy_multiplier(&grid, dt);
    let mut linear: Vec<Vec<Complex64>> = Vec::with_capacity(n_steps + 1);
    let mut free = u0.clone().without_nyquist().into_coeffs();
    for (i, v) in v_path.iter().enumerate() {
        if i > 0 {
            step.apply_to(&mut free);
        }
        linear.push(free.iter().zip(v.coeffs()).map(|(a, b)| a + b).collect());
    }

    let mut current = linear.clone();
    let mut differences = Vec::new();
    let term = if settings.nonlinear {
        Some(NonlinearTerm::new(&grid, settings.k, settings.mu, settings.pad_factor)?)
    } else {
        None
    };
    let mut scratch = term.as_ref().map(|t| t.scratch());
    let mut nvals: Vec<Vec<Complex64>> = vec![grid.zero_coeffs(); n_steps + 1];
    let mut b = grid.zero_coeffs();
    let mut p = grid.zero_coeffs();

    loop {
        if let (Some(t), Some(s)) = (&term, scratch.as_mut()) {
            for (u, nv) in current.iter().zip(nvals.iter_mut()) {
                t.eval_into(u, nv, s);
            }
        }
        let mut next = Vec::with_capacity(n_steps + 1);
        let mut diff = 0.0f64;
        b.copy_from_slice(&nvals[0]);
        p.copy_from_slice(&nvals[0]);
        next.push(linear[0].clone());
        for i in 1..=n_steps {
            step.apply_to(&mut b);
            step.apply_to(&mut p);
            for (x, y) in b.iter_mut().zip(&nvals[i]) {
                *x += y;
            }
            let ui: Vec<Complex64> = linear[i]
                .iter()
                .zip(&b)
                .zip(&p)
                .zip(&nvals[i])
                .map(|(((l, bb), pp), nn)| l + dt * (bb - 0.5 * pp - 0.5 * nn))
                .collect();
            diff = diff.max(dist(&ui, &current[i]));
            next.push(ui);
        }
        current = next;
        differences.push(diff);
        if !diff.is_finite() {
            return Err(Error::NonContraction {
                iterations: differences.len(),
                last: diff,
                history: differences,
            });
        }
        if diff < settings.tol {
            break;
        }
        if differences.len() >= settings.max_iter {
            return Err(Error::NonContraction {
                iterations: differences.len(),
                last: diff,
                history: differences,
            });
        }
    }

    let mut solution = Trajectory::new();
    for (i, c) in current.into_iter().enumerate() {
        solution.push(i as f64 * dt, Field::from_coeffs(&grid, c)?);
    }
    Ok(PicardReport { solution, differences })
}

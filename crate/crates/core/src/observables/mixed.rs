use serde::{Deserialize, Serialize};

use super::existence::ExistenceConstants;
use crate::dynamics::{check_power, Trajectory};
use crate::error::{Error, Result};
use crate::spectral::{
    bessel_multiplier, derivative_multiplier, fractional_derivative_dx_multiplier,
    fractional_derivative_multiplier, Field, Grid, SpectralMultiplier,
};

/// Borrowed time series of snapshots on a common grid.
#[derive(Clone, Copy, Debug)]
pub struct TrajectoryView<'a> {
    times: &'a [f64],
    fields: &'a [Field],
}

impl<'a> TrajectoryView<'a> {
    /// Times must be strictly increasing. A uniform stride is not required:
    /// the temporal quadrature is the trapezoid rule on whatever lattice is
    /// given.
    pub fn new(times: &'a [f64], fields: &'a [Field]) -> Result<Self> {
        if times.len() != fields.len() {
            return Err(Error::invalid(
                "trajectory",
                format!("{} times for {} snapshots", times.len(), fields.len()),
            ));
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::invalid("trajectory", "times must be strictly increasing"));
        }
        if let Some(first) = fields.first() {
            for f in &fields[1..] {
                first.grid().check_same(f.grid())?;
            }
        }
        Ok(TrajectoryView { times, fields })
    }

    pub fn of(traj: &'a Trajectory) -> Result<Self> {
        Self::new(&traj.times, &traj.fields)
    }

    pub fn times(&self) -> &'a [f64] {
        self.times
    }

    pub fn fields(&self) -> &'a [Field] {
        self.fields
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn grid(&self) -> Option<&'a Grid> {
        self.fields.first().map(|f| f.grid())
    }

    /// Length of the time window, `t_last - t_first`.
    pub fn horizon(&self) -> f64 {
        match (self.times.first(), self.times.last()) {
            (Some(a), Some(b)) => b - a,
            _ => 0.0,
        }
    }

    /// Prefix up to and including index `end`.
    pub fn prefix(&self, end: usize) -> Self {
        TrajectoryView {
            times: &self.times[..=end],
            fields: &self.fields[..=end],
        }
    }
}

/// Multiplier applied to each snapshot before the norm is taken.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "kebab-case")]
pub enum NormOperator {
    Identity,
    /// `D^gamma`, symbol `|xi|^gamma`.
    Fractional { gamma: f64 },
    /// `D^gamma d/dx`, symbol `i xi |xi|^gamma`.
    FractionalDx { gamma: f64 },
    /// `J^sigma`, symbol `(1 + xi^2)^(sigma/2)`.
    Bessel { sigma: f64 },
}

impl NormOperator {
    pub fn multiplier(&self, grid: &Grid) -> Result<Option<SpectralMultiplier>> {
        Ok(match *self {
            NormOperator::Identity => None,
            NormOperator::Fractional { gamma } => Some(fractional_derivative_multiplier(grid, gamma)?),
            NormOperator::FractionalDx { gamma } if gamma == 0.0 => Some(derivative_multiplier(grid)),
            NormOperator::FractionalDx { gamma } => Some(fractional_derivative_dx_multiplier(grid, gamma)?),
            NormOperator::Bessel { sigma } => Some(bessel_multiplier(grid, sigma)),
        })
    }
}

/// `|| op u ||_{L^q_x (L^p_t)}`: inner norm in time, outer in space.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MixedNormSpec {
    pub q_x: f64,
    pub p_t: f64,
    pub op: NormOperator,
}

impl MixedNormSpec {
    pub fn new(q_x: f64, p_t: f64, op: NormOperator) -> Self {
        MixedNormSpec { q_x, p_t, op }
    }
}

/// Trapezoid weights on a possibly nonuniform lattice.
fn trapezoid_weights(times: &[f64]) -> Vec<f64> {
    let n = times.len();
    let mut w = vec![0.0; n];
    for i in 1..n {
        let h = 0.5 * (times[i] - times[i - 1]);
        w[i - 1] += h;
        w[i] += h;
    }
    w
}

/// Inner temporal norm by trapezoid (max for `p = inf`) at every grid point,
/// then outer spatial norm by the rectangle rule (max for `q = inf`).
/// A single snapshot has zero temporal measure, so finite-`p` norms vanish.
pub fn mixed_norm(view: &TrajectoryView, spec: &MixedNormSpec) -> Result<f64> {
    if view.is_empty() {
        return Err(Error::invalid("trajectory", "mixed norm of an empty trajectory"));
    }
    for (name, e) in [("q_x", spec.q_x), ("p_t", spec.p_t)] {
        if !(e >= 1.0) {
            return Err(Error::invalid(name, format!("exponent must lie in [1, inf], got {e}")));
        }
    }
    let grid = view.grid().expect("nonempty");
    let mult = spec.op.multiplier(grid)?;
    let weights = trapezoid_weights(view.times());
    let p = spec.p_t;
    let mut acc = vec![0.0f64; grid.n()];
    for (f, w) in view.fields().iter().zip(&weights) {
        let samples = match &mult {
            Some(m) => m.apply(f)?.samples(),
            None => f.samples(),
        };
        if p.is_infinite() {
            for (a, s) in acc.iter_mut().zip(&samples) {
                *a = a.max(s.abs());
            }
        } else {
            for (a, s) in acc.iter_mut().zip(&samples) {
                *a += w * s.abs().powf(p);
            }
        }
    }
    if p.is_finite() {
        for a in acc.iter_mut() {
            *a = a.powf(1.0 / p);
        }
    }
    crate::spectral::lp_norm_of_samples(&acc, grid.dx(), spec.q_x)
}

/// `sup_i ||op u(t_i)||_{L^2}`.
pub fn sup_l2(view: &TrajectoryView, op: NormOperator) -> Result<f64> {
    if view.is_empty() {
        return Err(Error::invalid("trajectory", "sup norm of an empty trajectory"));
    }
    let grid = view.grid().expect("nonempty");
    let mult = op.multiplier(grid)?;
    let mut best = 0.0f64;
    for f in view.fields() {
        let v = match &mult {
            Some(m) => m.apply(f)?,
            None => f.clone(),
        };
        best = best.max(v.inner(&v)?.sqrt());
    }
    Ok(best)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NormComponent {
    pub name: &'static str,
    pub value: f64,
    /// Whether the component enters the maximum.
    pub in_max: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct XkNorm {
    pub value: f64,
    pub components: Vec<NormComponent>,
}

impl XkNorm {
    pub fn component(&self, name: &str) -> Option<f64> {
        self.components.iter().find(|c| c.name == name).map(|c| c.value)
    }
}

const Q: f64 = f64::INFINITY;

/// Component table `(name, spec, weight kind)` for the mixed-norm parts.
enum Weight {
    One,
    /// `(1 + T)^(-rho)`
    Growth,
    /// `T^(-1/6)`, zero at `T = 0`
    Short,
}

fn mixed_components(k: u32) -> Vec<(&'static str, MixedNormSpec, Weight)> {
    use NormOperator::*;
    if k == 2 {
        vec![
            ("mu2", MixedNormSpec::new(20.0, 2.5, Fractional { gamma: 1.0 }), Weight::One),
            ("mu3", MixedNormSpec::new(5.0, 10.0, Fractional { gamma: 0.25 }), Weight::One),
            ("mu4", MixedNormSpec::new(Q, 2.0, FractionalDx { gamma: 0.25 }), Weight::One),
            ("mu5", MixedNormSpec::new(4.0, Q, Identity), Weight::One),
        ]
    } else {
        let g = 1.0 / 12.0;
        vec![
            ("nu2", MixedNormSpec::new(42.0 / 13.0, 21.0 / 4.0, Identity), Weight::Growth),
            ("nu3", MixedNormSpec::new(60.0 / 13.0, 15.0, Identity), Weight::One),
            ("nu4", MixedNormSpec::new(10.0 / 3.0, 30.0 / 7.0, Identity), Weight::Short),
            ("nu5", MixedNormSpec::new(10.0 / 3.0, 30.0 / 7.0, Fractional { gamma: g }), Weight::Short),
            ("nu6", MixedNormSpec::new(Q, 2.0, FractionalDx { gamma: 0.0 }), Weight::One),
            ("nu7", MixedNormSpec::new(Q, 2.0, FractionalDx { gamma: g }), Weight::One),
        ]
    }
}

/// Exponent table `(name, q_x, p_t)` of the mixed components.
pub fn xk_exponents(k: u32) -> Vec<(&'static str, f64, f64)> {
    mixed_components(k)
        .into_iter()
        .map(|(n, s, _)| (n, s.q_x, s.p_t))
        .collect()
}

/// `||u||_{X_k^T}` with `T` the view's horizon, plus every component.
///
/// For k = 2 the first component is reported twice: `mu1` with the
/// homogeneous `D^(1/4)` (the one entering the maximum) and `mu1_h` with the
/// inhomogeneous `H^(1/4)` norm.
pub fn xk_norm(view: &TrajectoryView, k: u32, consts: &ExistenceConstants) -> Result<XkNorm> {
    check_power(k)?;
    let t = view.horizon();
    let mut components = Vec::new();
    if k == 2 {
        let mu1 = sup_l2(view, NormOperator::Fractional { gamma: 0.25 })?;
        let mu1h = sup_l2(view, NormOperator::Bessel { sigma: 0.25 })?;
        components.push(NormComponent { name: "mu1", value: mu1, in_max: true });
        components.push(NormComponent { name: "mu1_h", value: mu1h, in_max: false });
    } else {
        let nu1 = sup_l2(view, NormOperator::Bessel { sigma: 1.0 / 12.0 })?;
        components.push(NormComponent { name: "nu1", value: nu1, in_max: true });
    }
    for (name, spec, weight) in mixed_components(k) {
        let w = match weight {
            Weight::One => 1.0,
            Weight::Growth => (1.0 + t).powf(-consts.rho),
            Weight::Short => {
                if t > 0.0 {
                    t.powf(-1.0 / 6.0)
                } else {
                    0.0
                }
            }
        };
        let value = if w == 0.0 { 0.0 } else { w * mixed_norm(view, &spec)? };
        components.push(NormComponent { name, value, in_max: true });
    }
    let value = components
        .iter()
        .filter(|c| c.in_max)
        .fold(0.0f64, |a, c| a.max(c.value));
    Ok(XkNorm { value, components })
}

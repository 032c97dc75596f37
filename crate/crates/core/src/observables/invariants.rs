use crate::dynamics::{check_power, default_pad_factor, NonlinearTerm};
use crate::error::{Error, Result};
use crate::noise::CovarianceOperator;
use crate::spectral::Field;

/// `||u||^2_{L^2}`.
pub fn mass(u: &Field) -> f64 {
    u.inner(u).expect("same grid")
}

/// Focusing Hamiltonian `1/2 ||d_x u||^2 - 1/((k+1)(k+2)) int u^(k+2)`.
pub fn hamiltonian(u: &Field, k: u32) -> Result<f64> {
    hamiltonian_signed(u, k, 1.0)
}

/// Hamiltonian for either sign of the nonlinearity. The Nyquist mode of `u`
/// is dropped, matching the subspace the integrators evolve; the power
/// integral is evaluated on the dealiasing grid and is exact.
pub fn hamiltonian_signed(u: &Field, k: u32, mu: f64) -> Result<f64> {
    check_power(k)?;
    let g = u.grid();
    let ny = g.nyquist();
    let kinetic: f64 = u.coeffs()[..ny]
        .iter()
        .zip(g.xi())
        .enumerate()
        .map(|(i, (c, xi))| g.multiplicity(i) * xi * xi * c.norm_sqr())
        .sum::<f64>()
        * g.length();
    let term = NonlinearTerm::new(g, k, mu, default_pad_factor(k))?;
    let potential = term.power_integral(u.coeffs(), k + 2, &mut term.scratch());
    let kf = k as f64;
    Ok(0.5 * kinetic - mu * potential / ((kf + 1.0) * (kf + 2.0)))
}

/// Ito correction in `dH(u) = (...) dW + drift dt` for the focusing
/// Hamiltonian and a diagonal covariance:
/// `1/2 sum_m phi_m^2 xi_m^2 - (1/(2L)) (sum_m phi_m^2) int u^k`.
pub fn hamiltonian_ito_drift(u: &Field, phi: &CovarianceOperator, k: u32) -> Result<f64> {
    hamiltonian_ito_drift_signed(u, phi, k, 1.0)
}

pub fn hamiltonian_ito_drift_signed(u: &Field, phi: &CovarianceOperator, k: u32, mu: f64) -> Result<f64> {
    check_power(k)?;
    let g = u.grid();
    g.check_same(phi.grid())?;
    let grad = phi.weighted_trace(|xi| xi * xi);
    let trace = phi.weighted_trace(|_| 1.0);
    let term = NonlinearTerm::new(g, k, mu, default_pad_factor(k))?;
    let power = term.power_integral(u.coeffs(), k, &mut term.scratch());
    Ok(0.5 * grad - mu * trace * power / (2.0 * g.length()))
}

/// `sum_j (u, Phi e_j)^2` over an orthonormal basis, which for a diagonal
/// covariance is `L sum_m phi_m^2 |c_m|^2`.
pub fn noise_projection_sum(u: &Field, phi: &CovarianceOperator) -> Result<f64> {
    let g = u.grid();
    g.check_same(phi.grid())?;
    Ok(g.length()
        * u.coeffs()
            .iter()
            .zip(phi.profile())
            .enumerate()
            .map(|(i, (c, p))| g.multiplicity(i) * p * p * c.norm_sqr())
            .sum::<f64>())
}

/// Drift of `||u||^(2q)`:
/// `q M^(q-1) ||Phi||^2_HS + 2 q (q-1) M^(q-2) sum_j (u, Phi e_j)^2`, `M = ||u||^2`.
pub fn mass_moment_drift(u: &Field, phi: &CovarianceOperator, q: u32) -> Result<f64> {
    if q < 1 {
        return Err(Error::invalid("q", "moment order must be >= 1"));
    }
    let hs2 = phi.hs_norm(0.0).powi(2);
    if q == 1 {
        return Ok(hs2);
    }
    let m = mass(u);
    let qf = q as f64;
    let cross = noise_projection_sum(u, phi)?;
    Ok(qf * m.powi(q as i32 - 1) * hs2 + 2.0 * qf * (qf - 1.0) * m.powi(q as i32 - 2) * cross)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{airy_multiplier, Grid};
    use rand::{Rng, SeedableRng};
    use std::f64::consts::PI;

    #[test]
    fn mass_examples() {
        let g = Grid::new(32, 2.0 * PI).unwrap();
        assert_eq!(mass(&Field::zeros(&g)), 0.0);
        let u = Field::from_fn(&g, |x| x.sin());
        assert!((mass(&u) - PI).abs() < 1e-13);
        let s: f64 = u.samples().iter().map(|v| v * v).sum::<f64>() * g.dx();
        assert!((mass(&u) - s).abs() < 1e-13);
        let w = Field::from_fn(&g, |x| (-(x * x)).exp() + 0.3 * (3.0 * x).cos());
        let moved = airy_multiplier(&g, 0.7).apply(&w).unwrap();
        assert!((mass(&moved) - mass(&w)).abs() < 1e-12);
    }

    #[test]
    fn hamiltonian_of_sine() {
        let g = Grid::new(32, 2.0 * PI).unwrap();
        assert_eq!(hamiltonian(&Field::zeros(&g), 2).unwrap(), 0.0);
        let u = Field::from_fn(&g, |x| x.sin());
        let h = hamiltonian(&u, 2).unwrap();
        let expect = 0.5 * PI - (1.0 / 12.0) * 0.75 * PI;
        assert!((h - expect).abs() < 1e-13, "{h} {expect}");
    }

    #[test]
    fn drift_at_zero_field() {
        let g = Grid::new(32, 7.0).unwrap();
        let phi = CovarianceOperator::power_law(&g, 1.0, 1.5).unwrap();
        let d = hamiltonian_ito_drift(&Field::zeros(&g), &phi, 2).unwrap();
        let expect: f64 = 0.5 * phi.weighted_trace(|xi| xi * xi);
        assert!((d - expect).abs() < 1e-14);
        let u = Field::from_fn(&g, |x| x.cos());
        assert_eq!(hamiltonian_ito_drift(&u, &CovarianceOperator::zero(&g), 3).unwrap(), 0.0);
    }

    #[test]
    fn moment_drift_special_cases() {
        let g = Grid::new(32, 7.0).unwrap();
        let phi = CovarianceOperator::power_law(&g, 1.0, 1.0).unwrap();
        let u = Field::from_fn(&g, |x| (-x * x).exp());
        let hs2 = phi.hs_norm(0.0).powi(2);
        assert_eq!(mass_moment_drift(&u, &phi, 1).unwrap(), hs2);
        assert_eq!(mass_moment_drift(&Field::zeros(&g), &phi, 2).unwrap(), 0.0);
        assert!(mass_moment_drift(&u, &phi, 0).is_err());
    }

    /// Real orthonormal basis of the grid's trigonometric space, sampled on
    /// `fine` points, paired with the covariance eigenvalue of each element.
    fn real_basis(g: &Grid, phi: &CovarianceOperator, fine: &[f64]) -> Vec<(f64, Vec<f64>, Vec<f64>)> {
        let l = g.length();
        let mut out = Vec::new();
        out.push((phi.phi(0), vec![1.0 / l.sqrt(); fine.len()], vec![0.0; fine.len()]));
        // the Nyquist mode carries no noise
        for m in 1..g.nyquist() as isize {
            let xi = g.wavenumber(m);
            let a = (2.0 / l).sqrt();
            let p = phi.phi(m);
            out.push((
                p,
                fine.iter().map(|x| a * (xi * x).cos()).collect(),
                fine.iter().map(|x| -a * xi * (xi * x).sin()).collect(),
            ));
            out.push((
                p,
                fine.iter().map(|x| a * (xi * x).sin()).collect(),
                fine.iter().map(|x| a * xi * (xi * x).cos()).collect(),
            ));
        }
        out
    }

    /// Trigonometric interpolant of `u` evaluated at arbitrary points.
    fn evaluate(u: &Field, xs: &[f64]) -> Vec<f64> {
        let g = u.grid();
        let ny = g.nyquist() as isize;
        xs.iter()
            .map(|x| {
                (-ny + 1..ny)
                    .map(|m| {
                        let c = u.coefficient(m);
                        let th = g.wavenumber(m) * x;
                        c.re * th.cos() - c.im * th.sin()
                    })
                    .sum()
            })
            .collect()
    }

    fn random_case(n: usize, seed: u64) -> (Field, CovarianceOperator) {
        let g = Grid::new(n, 3.7).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let s: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let u = Field::from_samples(&g, &s).unwrap().without_nyquist();
        let table: Vec<f64> = (0..g.modes()).map(|_| rng.random_range(0.0..1.0)).collect();
        (u, CovarianceOperator::table(&g, table).unwrap())
    }

    #[test]
    fn ito_drift_matches_basis_sum() {
        for n in [8usize, 16] {
            for k in [2u32, 3] {
                let (u, phi) = random_case(n, 11 + k as u64 + n as u64);
                let g = u.grid();
                let nf = 4096;
                let h = g.length() / nf as f64;
                let fine: Vec<f64> = (0..nf).map(|j| -0.5 * g.length() + j as f64 * h).collect();
                let uf = evaluate(&u, &fine);
                let brute: f64 = real_basis(g, &phi, &fine)
                    .iter()
                    .map(|(p, e, de)| {
                        let grad: f64 = de.iter().map(|d| (p * d).powi(2)).sum::<f64>() * h;
                        let pot: f64 = uf
                            .iter()
                            .zip(e)
                            .map(|(uu, ee)| uu.powi(k as i32) * (p * ee).powi(2))
                            .sum::<f64>()
                            * h;
                        0.5 * (grad - pot)
                    })
                    .sum();
                let closed = hamiltonian_ito_drift(&u, &phi, k).unwrap();
                assert!((brute - closed).abs() < 1e-12 * brute.abs().max(1.0), "n={n} k={k}: {brute} {closed}");
            }
        }
    }

    #[test]
    fn projection_sum_matches_basis_sum() {
        for n in [8usize, 16] {
            let (u, phi) = random_case(n, 5 + n as u64);
            let g = u.grid();
            let nf = 2048;
            let h = g.length() / nf as f64;
            let fine: Vec<f64> = (0..nf).map(|j| -0.5 * g.length() + j as f64 * h).collect();
            let uf = evaluate(&u, &fine);
            let brute: f64 = real_basis(g, &phi, &fine)
                .iter()
                .map(|(p, e, _)| (uf.iter().zip(e).map(|(a, b)| a * p * b).sum::<f64>() * h).powi(2))
                .sum();
            let closed = noise_projection_sum(&u, &phi).unwrap();
            assert!((brute - closed).abs() < 1e-12 * brute.max(1.0), "{brute} {closed}");
        }
    }
}

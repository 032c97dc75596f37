//! Acceptance criteria. Each test prints one `criterion NN [PASS|FAIL]`
//! line to stderr (uncaptured) and then asserts. The tests take a shared
//! lock so that the runtime limits are measured without contention.

use std::f64::consts::PI;
use std::io::Write;
use std::path::Path;
use std::process::Command;
use std::sync::{Mutex, MutexGuard};
use std::time::{Duration, Instant};

use sgkdv::dynamics::{
    dealias_threshold, initial_data, integrate, nonlinear_rhs, soliton, soliton_residual, InitialData, Scheme, SimConfig,
};
use sgkdv::experiments::{
    compare_means, convolution_variance_check, horizon_scaling_study, mass_ito_check, picard_contraction_study,
    MassItoSpec, PicardStudySpec, ScalingQuantity, ScalingSpec,
};
use sgkdv::noise::{CovarianceOperator, RngStream};
use sgkdv::observables::{
    hamiltonian, hamiltonian_ito_drift, local_time, mass, mass_moment_drift, ExistenceConstants,
};
use sgkdv::spectral::{bessel_multiplier, lp_norm, sobolev_norm, Field, Grid};

static SERIAL: Mutex<()> = Mutex::new(());

fn serial() -> MutexGuard<'static, ()> {
    SERIAL.lock().unwrap_or_else(|e| e.into_inner())
}

fn report(id: u32, title: &str, pass: bool, detail: &str) {
    let tag = if pass { "PASS" } else { "FAIL" };
    let mut err = std::io::stderr().lock();
    let _ = writeln!(err, "criterion {id:02} [{tag}] {title}: {detail}");
}

fn single_worker() -> rayon::ThreadPool {
    rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap()
}

/// Power-law profile `(1 + xi^2)^(-1)` on n = 256, L = 50.
fn noise_grid() -> Grid {
    Grid::new(256, 50.0).unwrap()
}

fn power_law(g: &Grid) -> CovarianceOperator {
    CovarianceOperator::power_law(g, 1.0, 2.0).unwrap()
}

const SIGMAS: [f64; 3] = [0.0, 0.25, 1.0];

#[test]
fn criterion_01_convolution_variance() {
    let _g = serial();
    let grid = noise_grid();
    let pool = single_worker();
    let start = Instant::now();
    let mut pass = true;
    let mut detail = Vec::new();
    for (j, s) in SIGMAS.iter().enumerate() {
        let phi = power_law(&grid).normalized(*s, 1.0).unwrap();
        let r = pool
            .install(|| convolution_variance_check(&phi, &[*s], 1.0, 64, 10_000, 100 + j as u64))
            .unwrap();
        let v = &r.verdicts[0];
        pass &= v.pass && (v.target - 1.0).abs() < 1e-12;
        detail.push(format!("sigma={s}: {:.4} +- {:.4} (rel SE {:.2}%)", v.estimate, v.se, 100.0 * v.se));
    }
    let elapsed = start.elapsed();
    pass &= elapsed <= Duration::from_secs(120);
    detail.push(format!("{:.1}s single worker", elapsed.as_secs_f64()));
    report(1, "stochastic convolution variance", pass, &detail.join("; "));
    assert!(pass);
}

#[test]
fn criterion_02_step_count_independence() {
    let _g = serial();
    let grid = noise_grid();
    let mut pass = true;
    let mut detail = Vec::new();
    for (j, s) in SIGMAS.iter().enumerate() {
        let phi = power_law(&grid).normalized(*s, 1.0).unwrap();
        let one = convolution_variance_check(&phi, &[*s], 1.0, 1, 10_000, 200 + j as u64).unwrap();
        let many = convolution_variance_check(&phi, &[*s], 1.0, 64, 10_000, 300 + j as u64).unwrap();
        let v = compare_means(format!("sigma={s}"), &one.verdicts[0], &many.verdicts[0]);
        pass &= v.pass;
        detail.push(format!(
            "sigma={s}: 1 step {:.4}, 64 steps {:.4}, |diff| {:.4} <= 3 x {:.4}",
            v.estimate,
            v.target,
            (v.estimate - v.target).abs(),
            v.se
        ));
    }
    report(2, "convolution law independent of step count", pass, &detail.join("; "));
    assert!(pass);
}

#[test]
fn criterion_03_mass_ito_identity() {
    let _g = serial();
    let mut base = SimConfig::new(2, 256, 50.0, 1e-3, 1.0);
    base.scheme = Scheme::ExpEuler;
    let grid = base.grid().unwrap();
    let phi = power_law(&grid).normalized(0.0, 1.0).unwrap();
    // a exp(-x^2/2) has squared norm a^2 sqrt(pi)
    let initial = InitialData::Gaussian {
        amplitude: PI.powf(-0.25),
        width: 1.0,
        center: 0.0,
    };
    let m0 = mass(&initial_data(&initial, 2, 1, &grid).unwrap().without_nyquist());
    assert!((m0 - 1.0).abs() < 1e-12, "{m0}");
    let spec = MassItoSpec {
        base,
        phi,
        initial,
        n_traj: 10_000,
        master_seed: 400,
    };
    let start = Instant::now();
    let r = single_worker().install(|| mass_ito_check(&spec)).unwrap();
    let elapsed = start.elapsed();
    let pass = r.pass && (r.fine.target - 1.0).abs() < 1e-12 && elapsed <= Duration::from_secs(900);
    let detail = format!(
        "dt/2: {:.4} +- {:.4} (bias {:.3e}); dt: {:.4} (bias {:.3e}); bias ratio {:.5}; {} blow-ups; {:.0}s single worker",
        r.fine.estimate,
        r.fine.se,
        r.fine.bias_estimate,
        r.coarse.estimate,
        r.coarse.bias_estimate,
        r.bias_ratio.unwrap_or(f64::NAN),
        r.blow_ups,
        elapsed.as_secs_f64()
    );
    report(3, "mass Ito identity", pass, &detail);
    assert!(pass);
}

/// Relative mass and Hamiltonian drift of the noise-free soliton at T = 1.
fn soliton_drift(dt: f64) -> (f64, f64) {
    let mut cfg = SimConfig::new(2, 512, 100.0, dt, 1.0);
    cfg.save_every = 1;
    let grid = cfg.grid().unwrap();
    let u0 = soliton(&grid, 2, 1.0, 0.0).without_nyquist();
    let traj = integrate(&cfg, &CovarianceOperator::zero(&grid), &u0, &mut RngStream::new(0, 0)).unwrap();
    let (m0, h0) = (mass(&u0), hamiltonian(&u0, 2).unwrap());
    let mut dm = 0.0f64;
    let mut dh = 0.0f64;
    for u in &traj.fields {
        dm = dm.max((mass(u) - m0).abs() / m0);
        dh = dh.max((hamiltonian(u, 2).unwrap() - h0).abs() / h0.abs());
    }
    (dm, dh)
}

#[test]
fn criterion_04_deterministic_conservation() {
    let _g = serial();
    let (dm, dh) = soliton_drift(1e-4);
    let mut pass = dm <= 1e-8 && dh <= 1e-6;
    let mut detail = vec![format!("dt=1e-4: mass {dm:.2e}, hamiltonian {dh:.2e}")];
    // at dt = 1e-4 both drifts sit near roundoff, so the halving study runs
    // on a coarser ladder where they are resolved
    let ladder = [8e-3, 4e-3, 2e-3];
    let drifts: Vec<(f64, f64)> = ladder.iter().map(|dt| soliton_drift(*dt)).collect();
    for (w, dts) in drifts.windows(2).zip(ladder.windows(2)) {
        let om = (w[0].0 / w[1].0).log2();
        let oh = (w[0].1 / w[1].1).log2();
        // second-order scheme
        pass &= om >= 1.8 && oh >= 1.8;
        detail.push(format!("dt {} -> {}: mass order {om:.2}, hamiltonian order {oh:.2}", dts[0], dts[1]));
    }
    report(4, "deterministic conservation", pass, &detail.join("; "));
    assert!(pass);
}

#[test]
fn criterion_05_soliton_residual_and_transport() {
    let _g = serial();
    let cfg = SimConfig::new(2, 512, 100.0, 1e-4, 1.0);
    let grid = cfg.grid().unwrap();
    let residual = soliton_residual(&grid, 2, 1.0, 0.0);
    let u0 = initial_data(&InitialData::Soliton { speed: 1.0, center: 0.0 }, 2, 1, &grid).unwrap();
    let traj = integrate(&cfg, &CovarianceOperator::zero(&grid), &u0, &mut RngStream::new(0, 0)).unwrap();
    let shifted = soliton(&grid, 2, 1.0, traj.final_time());
    let err = sobolev_norm(&traj.last().unwrap().sub(&shifted).unwrap(), 0.0);
    let pass = residual <= 1e-8 && err <= 1e-4 && (traj.final_time() - 1.0).abs() < 1e-12;
    report(
        5,
        "soliton residual and transport",
        pass,
        &format!("residual {residual:.2e}, L2 error after T = 1 {err:.2e}"),
    );
    assert!(pass);
}

#[test]
fn criterion_06_sup_moment_scaling() {
    let _g = serial();
    let grid = noise_grid();
    let spec = ScalingSpec {
        phi: power_law(&grid).normalized(0.25, 1.0).unwrap(),
        quantity: ScalingQuantity::SupSobolevMoment { sigma: 0.25, q: 1 },
        horizons: vec![0.25, 0.5, 1.0, 2.0, 4.0],
        n_steps: 64,
        n_traj: 1000,
        master_seed: 600,
        n_boot: 1000,
        consts: ExistenceConstants::default(),
    };
    let s = horizon_scaling_study(&spec).unwrap();
    let pass = (0.9..=1.1).contains(&s.slope) && s.slope_ci.0 <= 1.0 && 1.0 <= s.slope_ci.1;
    report(
        6,
        "sup moment scaling in T",
        pass,
        &format!("slope {:.4}, 95% bootstrap CI [{:.4}, {:.4}]", s.slope, s.slope_ci.0, s.slope_ci.1),
    );
    assert!(pass);
}

#[test]
fn criterion_07_xk_envelope() {
    let _g = serial();
    let grid = noise_grid();
    let mut pass = true;
    let mut detail = Vec::new();
    for k in [2u32, 3] {
        let spec = ScalingSpec {
            phi: power_law(&grid).normalized(1.1, 1.0).unwrap(),
            quantity: ScalingQuantity::XkNormSquared { k },
            horizons: (0..7).map(|i| 2f64.powi(i - 4)).collect(),
            n_steps: 64,
            n_traj: 400,
            master_seed: 700 + k as u64,
            n_boot: 200,
            consts: ExistenceConstants::default(),
        };
        let s = horizon_scaling_study(&spec).unwrap();
        let spread = s.envelope_spread.unwrap();
        pass &= spread <= 5.0;
        let ratios: Vec<String> = s.envelope_ratio.unwrap().iter().map(|r| format!("{r:.3}")).collect();
        detail.push(format!("k={k}: spread {spread:.2} (ratios {})", ratios.join(" ")));
    }
    report(7, "X_k norm against its envelope", pass, &detail.join("; "));
    assert!(pass);
}

#[test]
fn criterion_08_picard_contraction() {
    let _g = serial();
    // the cap only bounds the search; T is where T = local_time(R(T))
    let base = SimConfig::new(2, 128, 40.0, 16.0 / 64.0, 16.0);
    let grid = base.grid().unwrap();
    let unit = initial_data(
        &InitialData::Gaussian {
            amplitude: 1.0,
            width: 1.0,
            center: 0.0,
        },
        2,
        1,
        &grid,
    )
    .unwrap()
    .without_nyquist();
    let amplitude = 0.1 / sobolev_norm(&unit, 0.25);
    let spec = PicardStudySpec {
        base,
        phi: power_law(&grid).normalized(1.1, 0.1).unwrap(),
        initial: InitialData::Gaussian {
            amplitude,
            width: 1.0,
            center: 0.0,
        },
        consts: ExistenceConstants::default(),
        n_traj: 100,
        master_seed: 800,
        tol: 1e-10,
        max_iter: 60,
        ratio_bound: 0.9,
    };
    let s = picard_contraction_study(&spec).unwrap();
    let worst = s
        .trajectories
        .iter()
        .flat_map(|t| t.ratios_fine.iter().chain(&t.ratios_coarse))
        .fold(0.0f64, |a, r| a.max(*r));
    let horizons: Vec<f64> = s.trajectories.iter().map(|t| t.horizon).collect();
    let tight = s
        .trajectories
        .iter()
        .all(|t| t.horizon <= t.admissible_time && t.horizon >= t.admissible_time * (1.0 - 1e-5));
    let pass = s.pass && tight;
    report(
        8,
        "Picard contraction",
        pass,
        &format!(
            "{:.0}% contract (worst ratio {worst:.2e}), median order vs exponential Euler {:.3}, T in [{:.3}, {:.3}]",
            100.0 * s.contraction_fraction,
            s.median_order.unwrap_or(f64::NAN),
            horizons.iter().cloned().fold(f64::MAX, f64::min),
            horizons.iter().cloned().fold(0.0, f64::max),
        ),
    );
    assert!(pass);
}

/// Real orthonormal basis `(phi_j, e_j, e_j')` of the trigonometric space
/// below the Nyquist mode, sampled on `xs`.
fn real_cons(g: &Grid, phi: &CovarianceOperator, xs: &[f64]) -> Vec<(f64, Vec<f64>, Vec<f64>)> {
    let l = g.length();
    let mut out = vec![(phi.phi(0), vec![l.powf(-0.5); xs.len()], vec![0.0; xs.len()])];
    for m in 1..(g.n() / 2) as isize {
        let xi = 2.0 * PI * m as f64 / l;
        let a = (2.0 / l).sqrt();
        out.push((
            phi.phi(m),
            xs.iter().map(|x| a * (xi * x).cos()).collect(),
            xs.iter().map(|x| -a * xi * (xi * x).sin()).collect(),
        ));
        out.push((
            phi.phi(m),
            xs.iter().map(|x| a * (xi * x).sin()).collect(),
            xs.iter().map(|x| a * xi * (xi * x).cos()).collect(),
        ));
    }
    out
}

/// Trigonometric interpolant through the samples of `u`, without the
/// Nyquist mode, by direct summation.
fn interpolant(u: &Field, xs: &[f64]) -> Vec<f64> {
    let g = u.grid();
    let n = g.n();
    let l = g.length();
    let s = u.samples();
    let pts = g.points();
    let coef = |m: isize| -> (f64, f64) {
        let xi = 2.0 * PI * m as f64 / l;
        let (mut re, mut im) = (0.0, 0.0);
        for (x, v) in pts.iter().zip(&s) {
            re += v * (xi * x).cos() / n as f64;
            im -= v * (xi * x).sin() / n as f64;
        }
        (re, im)
    };
    let cs: Vec<(f64, f64)> = (0..(n / 2) as isize).map(coef).collect();
    xs.iter()
        .map(|x| {
            let mut v = cs[0].0;
            for (m, (re, im)) in cs.iter().enumerate().skip(1) {
                let th = 2.0 * PI * m as f64 / l * x;
                v += 2.0 * (re * th.cos() - im * th.sin());
            }
            v
        })
        .collect()
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * b.abs().max(1.0)
}

#[test]
fn criterion_09_brute_force_oracles() {
    let _g = serial();
    let mut failures = Vec::new();
    let mut check = |name: &str, ok: bool| {
        if !ok {
            failures.push(name.to_string());
        }
    };

    // closed-form Ito corrections against sums over a full real basis
    let mut worst = 0.0f64;
    for (case, k) in [(0u64, 2u32), (1, 3), (2, 2), (3, 3)] {
        let g = Grid::new(8, 2.0 + case as f64).unwrap();
        let mut rng = RngStream::new(900, case);
        let samples: Vec<f64> = (0..8).map(|_| rng.standard_normal()).collect();
        let u = Field::from_samples(&g, &samples).unwrap().without_nyquist();
        let table: Vec<f64> = (0..g.modes()).map(|_| rng.standard_normal().abs()).collect();
        let phi = CovarianceOperator::table(&g, table).unwrap();
        let nf = 4096;
        let h = g.length() / nf as f64;
        let xs: Vec<f64> = (0..nf).map(|j| -0.5 * g.length() + j as f64 * h).collect();
        let uf = interpolant(&u, &xs);
        let basis = real_cons(&g, &phi, &xs);
        let drift: f64 = basis
            .iter()
            .map(|(p, e, de)| {
                let grad: f64 = de.iter().map(|d| (p * d).powi(2)).sum::<f64>() * h;
                let pot: f64 = uf.iter().zip(e).map(|(w, b)| w.powi(k as i32) * (p * b).powi(2)).sum::<f64>() * h;
                0.5 * (grad - pot)
            })
            .sum();
        let cross: f64 = basis
            .iter()
            .map(|(p, e, _)| (uf.iter().zip(e).map(|(w, b)| w * p * b).sum::<f64>() * h).powi(2))
            .sum();
        let m = mass(&u);
        let hs2: f64 = basis.iter().map(|(p, _, _)| p * p).sum();
        // q = 2: 2 M hs^2 + 4 cross
        let moment = mass_moment_drift(&u, &phi, 2).unwrap();
        let closed_cross = (moment - 2.0 * m * hs2) / 4.0;
        let closed_drift = hamiltonian_ito_drift(&u, &phi, k).unwrap();
        worst = worst
            .max((drift - closed_drift).abs() / drift.abs().max(1.0))
            .max((cross - closed_cross).abs() / cross.abs().max(1.0));
    }
    check("basis oracles", worst <= 1e-12);

    // hand-computed values
    let g = Grid::new(32, 2.0 * PI).unwrap();
    let sin = Field::from_fn(&g, |x| x.sin());
    check("mass of sin", close(mass(&sin), PI, 1e-13));
    check("H^1 norm of sin", close(sobolev_norm(&sin, 1.0), (2.0 * PI).sqrt(), 1e-13));
    check("L^4 norm of sin", close(lp_norm(&sin, 4.0).unwrap(), (0.75 * PI).powf(0.25), 1e-13));
    let cos = Field::from_fn(&g, |x| x.cos());
    let j2 = bessel_multiplier(&g, 2.0).apply(&cos).unwrap();
    check("J_2 at xi = 1", close(j2.sub(&cos.scaled(2.0)).unwrap().inner(&sin).unwrap(), 0.0, 1e-13)
        && sobolev_norm(&j2.sub(&cos.scaled(2.0)).unwrap(), 0.0) < 1e-12);
    let h = hamiltonian(&sin, 2).unwrap();
    check("hamiltonian of sin", close(h, 0.5 * PI - 0.75 * PI / 12.0, 1e-13));
    let n = nonlinear_rhs(&sin, 2, 1.0, 2).unwrap();
    let expect = Field::from_fn(&g, |x| -x.sin().powi(2) * x.cos());
    check("nonlinear term of sin", sobolev_norm(&n.sub(&expect).unwrap(), 0.0) < 1e-12);

    let mut single = vec![0.0; g.modes()];
    single[1] = 0.7;
    let phi1 = CovarianceOperator::table(&g, single).unwrap();
    check("single-mode HS norm", close(phi1.hs_norm(0.0), 0.7 * 2f64.sqrt(), 1e-14));
    check("single-mode HS^1 norm", close(phi1.hs_norm(1.0), 0.7 * 4f64.sqrt(), 1e-14));
    let unit = phi1.scaled(1.0 / 0.7);
    let r = convolution_variance_check(&unit, &[0.0], 2.0, 8, 4000, 901).unwrap();
    check("single-mode convolution target", close(r.verdicts[0].target, 4.0, 1e-14) && r.verdicts[0].pass);
    let zero_drift = hamiltonian_ito_drift(&Field::zeros(&g), &unit, 2).unwrap();
    check("drift at zero field", close(zero_drift, 0.5 * 2.0 * 1.0, 1e-14));

    check("dealias threshold k = 2", dealias_threshold(2) == 2.0);
    check("dealias threshold k = 3", dealias_threshold(3) == 2.5);
    check("local time k = 2, R = 1", local_time(1.0, 2, &ExistenceConstants::default()).unwrap() == 1.0 / 16.0);

    let gg = Grid::new(512, 60.0).unwrap();
    let (a, w) = (1.7, 2.0);
    let gauss = initial_data(&InitialData::Gaussian { amplitude: a, width: w, center: 0.0 }, 2, 1, &gg).unwrap();
    check("gaussian peak", close(gauss.samples()[256], a, 1e-15));
    check("gaussian L2 norm", close(sobolev_norm(&gauss, 0.0), a * w.sqrt() * PI.powf(0.25), 1e-6));
    check("soliton residual", soliton_residual(&Grid::new(512, 100.0).unwrap(), 2, 1.0, 0.0) <= 1e-8);

    let pass = failures.is_empty();
    let detail = if pass {
        format!("worst basis mismatch {worst:.1e}; hand values agree")
    } else {
        format!("worst basis mismatch {worst:.1e}; failed: {}", failures.join(", "))
    };
    report(9, "brute-force oracles", pass, &detail);
    assert!(pass);
}

const DETERMINISM_BASE: &str = r#"
[model]
k = 2
[grid]
n = 64
length = 30.0
[time]
dt = 0.01
horizon = 0.2
save_every = 5
[noise]
kind = "power-law"
amplitude = 0.3
normalize_sigma = 1.1
[initial]
kind = "gaussian"
amplitude = 0.4
width = 1.0
[run]
seed = 11
n_traj = 6
[experiment]
sigmas = [0.0, 1.0]
n_steps = 8
horizons = [0.25, 0.5, 1.0, 2.0]
n_boot = 50
windows = 2
"#;

fn run_cli(dir: &Path, config: &Path, command: &str, threads: usize) -> i32 {
    Command::new(env!("CARGO_BIN_EXE_sgkdv"))
        .arg(command)
        .arg("--config")
        .arg(config)
        .arg("--out")
        .arg(dir)
        .arg("--threads")
        .arg(threads.to_string())
        .status()
        .unwrap()
        .code()
        .unwrap()
}

/// Every file except the wall-clock record.
fn outputs(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<(String, Vec<u8>)> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.file_name().unwrap() != "timing.json")
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap()))
        .collect();
    files.sort();
    files
}

#[test]
fn criterion_10_determinism() {
    let _g = serial();
    let tmp = tempfile::tempdir().unwrap();
    let config = tmp.path().join("run.toml");
    std::fs::write(&config, DETERMINISM_BASE).unwrap();
    let commands = ["simulate", "ensemble", "conv-check", "mass-check", "moment-check", "scaling", "picard", "norms"];
    let mut mismatched = Vec::new();
    for cmd in commands {
        let a = tmp.path().join(format!("{cmd}-a"));
        let b = tmp.path().join(format!("{cmd}-b"));
        let c = tmp.path().join(format!("{cmd}-c"));
        let codes = [run_cli(&a, &config, cmd, 1), run_cli(&b, &config, cmd, 1), run_cli(&c, &config, cmd, 3)];
        let (oa, ob, oc) = (outputs(&a), outputs(&b), outputs(&c));
        if codes.iter().any(|c| *c == 2) || codes[0] != codes[1] || codes[0] != codes[2] || oa.len() < 2 || oa != ob || oa != oc {
            mismatched.push(format!("{cmd} (exit {codes:?})"));
        }
    }
    let pass = mismatched.is_empty();
    let detail = if pass {
        format!("{} commands byte-identical across reruns and thread counts", commands.len())
    } else {
        format!("differences in {}", mismatched.join(", "))
    };
    report(10, "determinism", pass, &detail);
    assert!(pass);
}

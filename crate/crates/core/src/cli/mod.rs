//! Command line front end: configuration, dispatch and output files.

mod config;
mod output;

use std::path::PathBuf;
use std::time::Instant;

use clap::{Parser, Subcommand};
use serde::Serialize;
use serde_json::json;

pub use config::{ExperimentSection, FileConfig, GridSection, ModelSection, NoiseKind, NoiseSection, RunSection, TimeSection};
pub use output::{format_f64, read_snapshots, sha256_hex, snapshot_bytes, Csv, FileEntry, OutputDir, SNAPSHOT_MAGIC};

use crate::dynamics::{initial_data, integrate, integrate_with, sigma_k, NoisePath, Trajectory};
use crate::error::{Error, Result};
use crate::experiments::{
    convolution_variance_check, horizon_scaling_study, mass_ito_check, moment_balance_check, picard_contraction_study,
    run_ensemble, EnsembleSpec, MassItoSpec, MomentSpec, PicardStudySpec, ScalingSpec, Verdict,
};
use crate::noise::RngStream;
use crate::observables::{hamiltonian_signed, local_radius, local_time, mass, xk_norm, TrajectoryView, CONSTANTS_LABEL};
use crate::spectral::sobolev_norm;

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "sgkdv", version, about = "Stochastic generalized KdV simulator")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
    /// Overrides `run.seed`.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Overrides `run.n_traj`.
    #[arg(long, global = true)]
    pub traj: Option<usize>,
    /// Worker threads; changes speed only.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// One trajectory: invariants CSV and field snapshots.
    Simulate,
    /// Ensemble statistics of the configured observables.
    Ensemble,
    /// Variance of the stochastic convolution.
    ConvCheck,
    /// Mean mass growth against the Ito correction at dt and dt/2.
    MassCheck,
    /// Moments of the mass against their Ito drift.
    MomentCheck,
    /// Log-log slope of a noise functional over a ladder of horizons.
    Scaling,
    /// Picard contraction census and comparison with exponential Euler.
    Picard,
    /// X_k norms of one trajectory and the resulting existence time.
    Norms,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Simulate => "simulate",
            Command::Ensemble => "ensemble",
            Command::ConvCheck => "conv-check",
            Command::MassCheck => "mass-check",
            Command::MomentCheck => "moment-check",
            Command::Scaling => "scaling",
            Command::Picard => "picard",
            Command::Norms => "norms",
        }
    }
}

#[derive(Serialize)]
struct BlowUpRecord {
    stream_id: u64,
    time: f64,
}

#[derive(Serialize)]
struct Manifest<'a> {
    artifact: &'static str,
    version: &'static str,
    command: &'static str,
    config_sha256: String,
    master_seed: u64,
    grid: serde_json::Value,
    noise: serde_json::Value,
    scheme: &'static str,
    config: &'a FileConfig,
    blow_ups: Vec<BlowUpRecord>,
    columns: serde_json::Value,
    files: &'a [FileEntry],
    pass: Option<bool>,
}

/// What a command produced besides its files.
struct Outcome {
    pass: Option<bool>,
    blow_ups: Vec<BlowUpRecord>,
    columns: serde_json::Value,
}

impl Outcome {
    fn verdict(pass: bool) -> Self {
        Outcome {
            pass: Some(pass),
            blow_ups: Vec::new(),
            columns: json!({}),
        }
    }
}

/// Parses `args` and runs the command; returns the process exit code.
pub fn run_from_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match run(&cli) {
        Ok(Some(false)) => EXIT_FAIL,
        Ok(_) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_USAGE
        }
    }
}

/// Loads the configuration, applies the flag overrides and dispatches.
/// Returns the verdict of checking commands.
pub fn run(cli: &Cli) -> Result<Option<bool>> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| Error::config("--config", "a configuration file is required"))?;
    let mut cfg = FileConfig::load(path)?;
    if let Some(s) = cli.seed {
        cfg.run.seed = s;
    }
    if let Some(t) = cli.traj {
        cfg.run.n_traj = t;
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.threads.unwrap_or(0))
        .build()
        .map_err(|e| Error::config("--threads", e.to_string()))?;
    pool.install(|| execute(cli.command, &cfg, &cli.out))
}

/// Runs `command` and writes its files plus `manifest.json` into `out`.
/// Wall-clock time goes to the separate `timing.json`, which is not part of
/// the reproducible output.
pub fn execute(command: Command, cfg: &FileConfig, out: &std::path::Path) -> Result<Option<bool>> {
    let started = Instant::now();
    let mut dir = OutputDir::create(out)?;
    let outcome = match command {
        Command::Simulate => simulate(cfg, &mut dir)?,
        Command::Ensemble => ensemble(cfg, &mut dir)?,
        Command::ConvCheck => conv_check(cfg, &mut dir)?,
        Command::MassCheck => mass_check(cfg, &mut dir)?,
        Command::MomentCheck => moment_check(cfg, &mut dir)?,
        Command::Scaling => scaling(cfg, &mut dir)?,
        Command::Picard => picard(cfg, &mut dir)?,
        Command::Norms => norms(cfg, &mut dir)?,
    };
    let sim = cfg.sim_config();
    let files = dir.inventory().to_vec();
    let manifest = Manifest {
        artifact: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        command: command.name(),
        config_sha256: sha256_hex(cfg.to_toml().as_bytes()),
        master_seed: cfg.run.seed,
        grid: json!({ "n": sim.n, "length": sim.length, "pad_factor": sim.pad_factor }),
        noise: serde_json::to_value(&cfg.noise).expect("serializable"),
        scheme: sim.scheme.name(),
        config: cfg,
        blow_ups: outcome.blow_ups,
        columns: outcome.columns,
        files: &files,
        pass: outcome.pass,
    };
    dir.write_json("manifest.json", &manifest)?;
    let timing = json!({ "command": command.name(), "wall_clock_seconds": started.elapsed().as_secs_f64() });
    dir.write_untracked("timing.json", format!("{timing:#}\n").as_bytes())?;
    Ok(outcome.pass)
}

fn simulate(cfg: &FileConfig, dir: &mut OutputDir) -> Result<Outcome> {
    let sim = cfg.sim_config();
    let grid = sim.grid()?;
    let phi = cfg.phi()?;
    let u0 = initial_data(&cfg.initial, sim.k, sim.mu, &grid)?;
    let mut rng = RngStream::new(cfg.run.seed, 0);
    let (traj, blow_ups) = match integrate(&sim, &phi, &u0, &mut rng) {
        Ok(t) => (t, Vec::new()),
        Err(Error::BlowUp { time, partial, .. }) => (
            partial.map(|p| *p).unwrap_or_default(),
            vec![BlowUpRecord { stream_id: 0, time }],
        ),
        Err(e) => return Err(e),
    };
    let sigma = sigma_k(sim.k);
    let hcol = format!("h{sigma:.6}_norm");
    let mut csv = Csv::new(&["t", "mass", "hamiltonian", hcol.as_str(), "sup_norm"]);
    for (t, u) in traj.times.iter().zip(&traj.fields) {
        let sup = u.samples().iter().fold(0.0f64, |a, v| a.max(v.abs()));
        csv.row(&[*t, mass(u), hamiltonian_signed(u, sim.k, sim.sign())?, sobolev_norm(u, sigma), sup]);
    }
    dir.write("trajectory.csv", &csv.into_bytes())?;
    dir.write("snapshots.bin", &snapshot_bytes(&traj.fields))?;
    Ok(Outcome {
        pass: None,
        blow_ups,
        columns: json!({
            "t": "time",
            "mass": "squared L2 norm",
            "hamiltonian": "1/2 ||u_x||^2 - mu/((k+1)(k+2)) int u^(k+2)",
            hcol: format!("H^s norm with s = {sigma}"),
            "sup_norm": "max over grid points of |u|",
        }),
    })
}

fn ensemble(cfg: &FileConfig, dir: &mut OutputDir) -> Result<Outcome> {
    let spec = EnsembleSpec {
        base: cfg.sim_config(),
        phi: cfg.phi()?,
        initial: cfg.initial.clone(),
        n_traj: cfg.run.n_traj,
        observables: cfg.experiment.observables.clone(),
        master_seed: cfg.run.seed,
    };
    let r = run_ensemble(&spec)?;
    let mut header = vec!["t".to_string()];
    for c in &r.columns {
        header.push(format!("{c}_mean"));
        header.push(format!("{c}_se"));
    }
    let mut csv = Csv::new(&header);
    for (i, t) in r.times.iter().enumerate() {
        let mut row = vec![*t];
        for o in 0..r.columns.len() {
            row.push(r.reduced.mean[i][o]);
            row.push(r.reduced.se[i][o]);
        }
        csv.row(&row);
    }
    dir.write("ensemble.csv", &csv.into_bytes())?;

    let mut header = vec!["stream_id".to_string(), "t".to_string()];
    header.extend(r.columns.iter().cloned());
    let mut all = Csv::new(&header);
    for rec in &r.trajectories {
        for (values, t) in rec.values.iter().zip(&r.times) {
            let mut row = vec![rec.stream_id as f64, *t];
            row.extend(values);
            all.row(&row);
        }
    }
    dir.write("trajectories.csv", &all.into_bytes())?;
    Ok(Outcome {
        pass: None,
        blow_ups: r
            .trajectories
            .iter()
            .filter_map(|t| t.blow_up.map(|time| BlowUpRecord { stream_id: t.stream_id, time }))
            .collect(),
        columns: json!({ "n_used": r.reduced.n_used, "observables": r.columns }),
    })
}

fn conv_check(cfg: &FileConfig, dir: &mut OutputDir) -> Result<Outcome> {
    let e = &cfg.experiment;
    let r = convolution_variance_check(&cfg.phi()?, &e.sigmas, cfg.time.horizon, e.n_steps, cfg.run.n_traj, cfg.run.seed)?;
    let pass = r.verdicts.iter().all(|v| v.pass);
    dir.write_json("verdicts.json", &json!({ "verdicts": r.verdicts, "pass": pass }))?;
    let mut header = vec!["stream_id".to_string()];
    header.extend(r.sigmas.iter().map(|s| format!("h{s}_norm_sq")));
    let mut csv = Csv::new(&header);
    for (i, row) in r.samples.iter().enumerate() {
        let mut v = vec![i as f64];
        v.extend(row);
        csv.row(&v);
    }
    dir.write("samples.csv", &csv.into_bytes())?;
    Ok(Outcome::verdict(pass))
}

fn mass_check(cfg: &FileConfig, dir: &mut OutputDir) -> Result<Outcome> {
    let spec = MassItoSpec {
        base: cfg.sim_config(),
        phi: cfg.phi()?,
        initial: cfg.initial.clone(),
        n_traj: cfg.run.n_traj,
        master_seed: cfg.run.seed,
    };
    let r = mass_ito_check(&spec)?;
    dir.write_json(
        "verdicts.json",
        &json!({
            "verdicts": [r.coarse, r.fine],
            "bias_ratio": r.bias_ratio,
            "blow_ups": r.blow_ups,
            "pass": r.pass,
        }),
    )?;
    let mut csv = Csv::new(&["delta_mass_dt", "delta_mass_half_dt", "defect_dt", "defect_half_dt"]);
    for s in &r.samples {
        csv.row(&[s.delta_coarse, s.delta_fine, s.defect_coarse, s.defect_fine]);
    }
    dir.write("samples.csv", &csv.into_bytes())?;
    Ok(Outcome::verdict(r.pass))
}

fn moment_check(cfg: &FileConfig, dir: &mut OutputDir) -> Result<Outcome> {
    let spec = MomentSpec {
        base: cfg.sim_config(),
        phi: cfg.phi()?,
        initial: cfg.initial.clone(),
        n_traj: cfg.run.n_traj,
        master_seed: cfg.run.seed,
        q: cfg.experiment.q,
        windows: cfg.experiment.windows,
    };
    let r = moment_balance_check(&spec)?;
    dir.write_json("verdicts.json", &r)?;
    Ok(Outcome::verdict(r.pass))
}

fn scaling(cfg: &FileConfig, dir: &mut OutputDir) -> Result<Outcome> {
    let e = &cfg.experiment;
    let spec = ScalingSpec {
        phi: cfg.phi()?,
        quantity: e.quantity,
        horizons: e.horizons.clone(),
        n_steps: e.n_steps,
        n_traj: cfg.run.n_traj,
        master_seed: cfg.run.seed,
        n_boot: e.n_boot,
        consts: cfg.constants,
    };
    let s = horizon_scaling_study(&spec)?;
    let mut verdicts = Vec::new();
    if let Some([lo, hi]) = e.slope_band {
        let mut v = Verdict {
            check: format!("{} slope in [{lo}, {hi}]", s.quantity),
            target: 0.5 * (lo + hi),
            estimate: s.slope,
            se: 0.0,
            bias_estimate: 0.0,
            pass: (lo..=hi).contains(&s.slope),
        };
        if let Some(x) = e.expected_slope {
            v.target = x;
            v.pass &= s.slope_ci.0 <= x && x <= s.slope_ci.1;
        }
        verdicts.push(v);
    }
    if let (Some(max), Some(spread)) = (e.max_spread, s.envelope_spread) {
        verdicts.push(Verdict {
            check: format!("{} envelope ratio spread", s.quantity),
            target: max,
            estimate: spread,
            se: 0.0,
            bias_estimate: 0.0,
            pass: spread <= max,
        });
    }
    let pass = verdicts.iter().all(|v| v.pass);
    let label = matches!(e.quantity, crate::experiments::ScalingQuantity::XkNormSquared { .. }).then_some(CONSTANTS_LABEL);
    dir.write_json(
        "scaling.json",
        &json!({ "study": s, "verdicts": verdicts, "constants_label": label, "pass": pass }),
    )?;
    let mut csv = Csv::new(&["horizon", "mean", "se", "envelope_ratio"]);
    for (j, t) in s.horizons.iter().enumerate() {
        let ratio = s.envelope_ratio.as_ref().map_or(f64::NAN, |r| r[j]);
        csv.row(&[*t, s.means[j], s.ses[j], ratio]);
    }
    dir.write("scaling.csv", &csv.into_bytes())?;
    Ok(Outcome::verdict(pass))
}

fn picard(cfg: &FileConfig, dir: &mut OutputDir) -> Result<Outcome> {
    let e = &cfg.experiment;
    let spec = PicardStudySpec {
        base: cfg.sim_config(),
        phi: cfg.phi()?,
        initial: cfg.initial.clone(),
        consts: cfg.constants,
        n_traj: cfg.run.n_traj,
        master_seed: cfg.run.seed,
        tol: e.tol,
        max_iter: e.max_iter,
        ratio_bound: e.ratio_bound,
    };
    let s = picard_contraction_study(&spec)?;
    dir.write_json("picard.json", &s)?;
    Ok(Outcome::verdict(s.pass))
}

fn norms(cfg: &FileConfig, dir: &mut OutputDir) -> Result<Outcome> {
    let sim = cfg.sim_config();
    let grid = sim.grid()?;
    let phi = cfg.phi()?;
    let u0 = initial_data(&cfg.initial, sim.k, sim.mu, &grid)?.without_nyquist();
    let n_steps = sim.n_steps();
    let mut rng = RngStream::new(cfg.run.seed, 0);
    let path = NoisePath::sample(&phi, sim.dt, n_steps, &mut rng)?;
    let v_all = path.convolution();
    let (traj, blow_ups) = match integrate_with(&sim, &u0, &mut path.replay()) {
        Ok(t) => (t, Vec::new()),
        Err(Error::BlowUp { time, partial, .. }) => (
            partial.map(|p| *p).unwrap_or_default(),
            vec![BlowUpRecord { stream_id: 0, time }],
        ),
        Err(e) => return Err(e),
    };
    let mut v = Trajectory::new();
    for (i, f) in v_all.into_iter().enumerate() {
        if i % sim.save_every == 0 || i == n_steps {
            v.push(i as f64 * sim.dt, f);
        }
    }
    let u_norm = xk_norm(&TrajectoryView::of(&traj)?, sim.k, &cfg.constants)?;
    let view_v = TrajectoryView::of(&v)?;
    let v_norm = xk_norm(&view_v, sim.k, &cfg.constants)?;
    let radius = local_radius(&u0, &view_v, sim.k, &cfg.constants)?;
    let time = if radius > 0.0 { Some(local_time(radius, sim.k, &cfg.constants)?) } else { None };
    dir.write_json(
        "norms.json",
        &json!({
            "constants_label": CONSTANTS_LABEL,
            "horizon": v.final_time(),
            "solution": u_norm,
            "convolution": v_norm,
            "local_radius": radius,
            "local_time": time,
        }),
    )?;
    Ok(Outcome {
        pass: None,
        blow_ups,
        columns: json!({}),
    })
}

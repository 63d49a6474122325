//! `optispin` batch runner. Exit codes: 0 success, 1 input/config/validation
//! error, 2 sampler non-convergence or optimizer failure.

mod commands;
mod config;
mod output;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};
use optispin::fitting::ModelKind;
use optispin::units::{AngularFrequency, Time};

use commands::fit::FitOutcome;
use commands::simulate::Drive;
use config::{InitialState, RunConfig};
use output::Output;

#[derive(Parser)]
#[command(name = "optispin", version, about = "Simulation, tomography and fitting for optically controlled spin qubits")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// TOML run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// RNG seed; overrides the config's `seed` (default 0).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a drive or synthesize a dataset.
    Simulate {
        #[command(subcommand)]
        kind: SimKind,
        #[command(flatten)]
        common: Common,
    },
    /// Posterior sampling of a tomography dataset.
    Tomo {
        /// Records as CSV, or JSON when the name ends in `.json`.
        #[arg(long)]
        data: Option<PathBuf>,
        #[arg(long)]
        iterations: Option<usize>,
        #[arg(long)]
        burn_in: Option<usize>,
        #[arg(long)]
        chains: Option<usize>,
        #[command(flatten)]
        common: Common,
    },
    /// Weighted least-squares fit of a delay scan.
    Fit {
        #[command(subcommand)]
        model: FitKind,
        #[command(flatten)]
        common: Common,
    },
    /// Number of readouts needed to distinguish bright from dark.
    Snr {
        i_bright: f64,
        i_dark: f64,
        n: f64,
    },
}

#[derive(Args)]
struct DriveArgs {
    #[arg(long)]
    preset: Option<String>,
    /// Duration with unit, e.g. `0.5us`.
    #[arg(long = "t")]
    duration: Option<Time>,
    /// a, b, zero, plus_one or green.
    #[arg(long)]
    initial: Option<InitialState>,
}

#[derive(Subcommand)]
enum SimKind {
    /// Dark-state pumping under a CPT drive.
    Cpt(DriveArgs),
    /// Stimulated Raman rotation.
    Rotation(DriveArgs),
    /// Photoluminescence versus two-photon detuning.
    Spectrum {
        #[arg(long)]
        preset: Option<String>,
        #[arg(long, allow_hyphen_values = true)]
        delta_l: Option<AngularFrequency>,
        #[arg(long)]
        span: Option<AngularFrequency>,
        #[arg(long)]
        points: Option<usize>,
    },
    /// Differenced Ramsey scan.
    Ramsey {
        #[arg(long = "T2-star")]
        t2_star: Option<Time>,
        #[arg(long, allow_hyphen_values = true)]
        delta_omega: Option<AngularFrequency>,
        #[arg(long, allow_hyphen_values = true)]
        omega_hf: Option<AngularFrequency>,
        #[arg(long, allow_hyphen_values = true)]
        tau0: Option<Time>,
        #[arg(long)]
        amplitude: Option<f64>,
        #[arg(long)]
        c1: Option<f64>,
        #[arg(long)]
        c2: Option<f64>,
        #[arg(long)]
        shots: Option<u64>,
    },
    /// Hahn-echo decay scan.
    Hahn {
        #[arg(long = "T2")]
        t2: Option<Time>,
        #[arg(long)]
        amplitude: Option<f64>,
        #[arg(long)]
        background: Option<f64>,
        #[arg(long)]
        shots: Option<u64>,
    },
}

#[derive(Args)]
struct FitArgs {
    /// `tau_us,counts[,weight]` CSV.
    #[arg(long)]
    data: Option<PathBuf>,
    /// Report raw covariance instead of scaling by reduced χ².
    #[arg(long)]
    no_scale: bool,
    #[arg(long, conflicts_with = "fixed_background")]
    free_background: bool,
    #[arg(long)]
    fixed_background: bool,
}

#[derive(Subcommand)]
enum FitKind {
    Ramsey(FitArgs),
    Hahn(FitArgs),
}

/// Failure classes mapped to exit codes.
enum Failure {
    Input(anyhow::Error),
    Runtime(String),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Input(e)
    }
}

fn setup(common: &Common, command: &str, cfg: &RunConfig, inputs: &[&Path]) -> Result<(Output, u64)> {
    let seed = common.seed.or(cfg.seed).unwrap_or(0);
    let out = Output::new(&common.out, command, cfg, seed, inputs)?;
    Ok((out, seed))
}

fn apply_drive(cfg: &mut RunConfig, a: DriveArgs) {
    if a.preset.is_some() {
        cfg.simulate.preset = a.preset;
    }
    if let Some(t) = a.duration {
        cfg.simulate.duration = t;
    }
    if let Some(i) = a.initial {
        cfg.simulate.initial = i;
    }
}

fn simulate(kind: SimKind, common: Common) -> Result<(), Failure> {
    let mut cfg = RunConfig::load(common.config.as_ref())?;
    let (name, drive) = match kind {
        SimKind::Cpt(a) => {
            apply_drive(&mut cfg, a);
            ("simulate cpt", Some(Drive::Cpt))
        }
        SimKind::Rotation(a) => {
            apply_drive(&mut cfg, a);
            ("simulate rotation", Some(Drive::Rotation))
        }
        SimKind::Spectrum { preset, delta_l, span, points } => {
            let s = &mut cfg.spectrum;
            if let Some(p) = preset {
                s.preset = p;
            }
            s.delta_l = delta_l.or(s.delta_l);
            s.span = span.unwrap_or(s.span);
            s.points = points.unwrap_or(s.points);
            ("simulate spectrum", None)
        }
        SimKind::Ramsey { t2_star, delta_omega, omega_hf, tau0, amplitude, c1, c2, shots } => {
            let r = &mut cfg.ramsey;
            let p = &mut r.params;
            p.t2_star = t2_star.unwrap_or(p.t2_star);
            p.delta_omega = delta_omega.unwrap_or(p.delta_omega);
            p.omega_hf = omega_hf.unwrap_or(p.omega_hf);
            p.tau0 = tau0.unwrap_or(p.tau0);
            p.amplitude = amplitude.unwrap_or(p.amplitude);
            p.c1 = c1.unwrap_or(p.c1);
            p.c2 = c2.unwrap_or(p.c2);
            r.shots = shots.unwrap_or(r.shots);
            ("simulate ramsey", None)
        }
        SimKind::Hahn { t2, amplitude, background, shots } => {
            let h = &mut cfg.hahn;
            h.params.t2 = t2.unwrap_or(h.params.t2);
            h.params.amplitude = amplitude.unwrap_or(h.params.amplitude);
            h.params.background = background.unwrap_or(h.params.background);
            h.shots = shots.unwrap_or(h.shots);
            ("simulate hahn", None)
        }
    };
    let (mut out, seed) = setup(&common, name, &cfg, &[])?;
    match (name, drive) {
        (_, Some(d)) => commands::simulate::drive(d, &cfg, seed, &mut out)?,
        ("simulate spectrum", _) => commands::simulate::spectrum(&cfg, &mut out)?,
        ("simulate ramsey", _) => commands::simulate::ramsey(&cfg, seed, &mut out)?,
        _ => commands::simulate::hahn(&cfg, seed, &mut out)?,
    }
    out.finish("ok")?;
    Ok(())
}

fn tomo(
    data: Option<PathBuf>,
    iterations: Option<usize>,
    burn_in: Option<usize>,
    chains: Option<usize>,
    common: Common,
) -> Result<(), Failure> {
    let mut cfg = RunConfig::load(common.config.as_ref())?;
    if data.is_some() {
        cfg.tomo.data = data;
    }
    let s = &mut cfg.tomo.sampler;
    s.iterations = iterations.unwrap_or(s.iterations);
    s.burn_in = burn_in.unwrap_or(s.burn_in);
    s.chains = chains.unwrap_or(s.chains);
    s.validate().map_err(anyhow::Error::from)?;
    let path = cfg.tomo.data.clone().ok_or_else(|| anyhow::anyhow!("no tomography data: pass --data or set tomo.data"))?;
    let records = commands::tomo::load_data(&path)?;
    let (mut out, seed) = setup(&common, "tomo", &cfg, &[&path])?;
    let converged = commands::tomo::run(&cfg, &records, seed, &mut out)?;
    if converged {
        out.finish("ok")?;
        Ok(())
    } else {
        out.finish("not_converged")?;
        Err(Failure::Runtime(format!(
            "chains did not converge (split R-hat above {}); see summary.json",
            cfg.tomo.sampler.rhat_threshold
        )))
    }
}

fn fit(model: FitKind, common: Common) -> Result<(), Failure> {
    let mut cfg = RunConfig::load(common.config.as_ref())?;
    let (kind, args) = match model {
        FitKind::Ramsey(a) => (ModelKind::Ramsey, a),
        FitKind::Hahn(a) => (ModelKind::Hahn, a),
    };
    if args.data.is_some() {
        cfg.fit.data = args.data;
    }
    if args.no_scale {
        cfg.fit.options.scale_by_reduced_chi2 = false;
    }
    if args.free_background {
        cfg.fit.free_background = Some(true);
    } else if args.fixed_background {
        cfg.fit.free_background = Some(false);
    }
    let path = cfg.fit.data.clone().ok_or_else(|| anyhow::anyhow!("no fit data: pass --data or set fit.data"))?;
    let data = commands::fit::load_data(&path)?;
    let name = match kind {
        ModelKind::Ramsey => "fit ramsey",
        ModelKind::Hahn => "fit hahn",
    };
    let (mut out, _) = setup(&common, name, &cfg, &[&path])?;
    match commands::fit::run(kind, &cfg, &data, &mut out)? {
        FitOutcome::Converged => {
            out.finish("ok")?;
            Ok(())
        }
        FitOutcome::OptimizerFailed(e) => {
            out.finish("optimizer_failed")?;
            Err(Failure::Runtime(format!("optimizer failed: {e}")))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate { kind, common } => simulate(kind, common),
        Command::Tomo { data, iterations, burn_in, chains, common } => tomo(data, iterations, burn_in, chains, common),
        Command::Fit { model, common } => fit(model, common),
        Command::Snr { i_bright, i_dark, n } => match commands::snr::run(i_bright, i_dark, n) {
            Ok(v) => {
                println!("{v}");
                Ok(())
            }
            Err(e) => Err(Failure::Input(e)),
        },
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Input(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

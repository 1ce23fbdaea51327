use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use fluxsize_core::distinguish::{
    asymptotic_size, exact_trace_distance_oracle, n_min_and_size, p_n_linearized, ModeEnsembleSpec,
    DEFAULT_PRECISION, MAX_ORACLE_MODES,
};
use fluxsize_core::io::{
    bundled_material, device_files_in, emit_spectrum, load_device, load_material, render, run_pipeline, run_table,
    verify, OutputFormat, RunConfig, SpectrumConfig, VerifyOptions,
};
use fluxsize_core::{Material, ShellGridConfig, Vec3};

/// Exit status when a verification check fails.
const VERIFY_FAILED: u8 = 2;
/// Exit status for bad input or any other error.
const INPUT_ERROR: u8 = 1;

#[derive(Parser)]
#[command(name = "fluxsize", version, about = "Superposition size of flux-qubit branch states")]
struct Cli {
    /// More log output (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
}

impl From<Format> for OutputFormat {
    fn from(f: Format) -> Self {
        match f {
            Format::Json => OutputFormat::Json,
            Format::Csv => OutputFormat::Csv,
        }
    }
}

#[derive(Args)]
struct Output {
    /// Output format.
    #[arg(long = "out", value_enum, default_value = "json")]
    format: Format,
    /// Write to this file instead of stdout.
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Size report for one device file.
    Compute {
        #[arg(long)]
        device: PathBuf,
        /// Tolerated measurement error δ.
        #[arg(long, default_value_t = DEFAULT_PRECISION)]
        delta: f64,
        #[command(flatten)]
        out: Output,
    },
    /// Size reports for every *.json device file in a directory.
    Table {
        #[arg(long)]
        devices: PathBuf,
        #[arg(long, default_value_t = DEFAULT_PRECISION)]
        delta: f64,
        #[command(flatten)]
        out: Output,
    },
    /// Per-mode occupation differences over the Fermi shell.
    Spectrum {
        /// Material file, or the name of a bundled material (Al, Nb).
        #[arg(long)]
        material: String,
        /// Superflow velocity difference |δv_s| in m/s.
        #[arg(long = "delta-vs")]
        delta_vs: f64,
        /// Direction of δv_s as x,y,z.
        #[arg(long, value_delimiter = ',', num_args = 3, default_values_t = [0.0, 0.0, 1.0])]
        direction: Vec<f64>,
        #[arg(long, default_value_t = SpectrumConfig::default().energy_points)]
        energy_points: usize,
        #[arg(long, default_value_t = SpectrumConfig::default().angle_points)]
        angle_points: usize,
        /// Energy half-width in units of the gap.
        #[arg(long, default_value_t = SpectrumConfig::default().window)]
        window: f64,
        #[command(flatten)]
        out: Output,
    },
    /// Success probability and n_min for an explicit or summarized ensemble.
    Distinguish {
        /// JSON file {"occupations_A": [...], "occupations_B": [...]}.
        #[arg(long, conflicts_with_all = ["n_modes", "delta_n_tot"])]
        ensemble: Option<PathBuf>,
        /// Total mode count N; omit for the large-N limit.
        #[arg(long)]
        n_modes: Option<f64>,
        #[arg(long)]
        delta_n_tot: Option<f64>,
        #[arg(long, default_value_t = DEFAULT_PRECISION)]
        delta: f64,
    },
    /// Run the self-check suite; exits with status 2 if any check fails.
    Verify {
        #[arg(long, default_value_t = RunConfig::default().seed)]
        seed: u64,
        /// Random bases per D matrix in the basis-optimality check.
        #[arg(long, default_value_t = VerifyOptions::default().basis_trials)]
        trials: usize,
        /// Energy panels of the shell grid used by the impurity check.
        #[arg(long, default_value_t = ShellGridConfig::default().energy_panels)]
        energy_panels: usize,
        /// Override |e| in the bundled materials (fault injection).
        #[arg(long)]
        electron_charge: Option<f64>,
        /// Fewer random samples, for a fast smoke run.
        #[arg(long)]
        quick: bool,
        /// Emit the report as JSON.
        #[arg(long)]
        json: bool,
    },
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct EnsembleFile {
    #[serde(rename = "occupations_A")]
    occupations_a: Vec<f64>,
    #[serde(rename = "occupations_B")]
    occupations_b: Vec<f64>,
}

#[derive(Serialize)]
struct DistinguishReport {
    total_modes: Option<f64>,
    delta_n_tot: f64,
    precision: f64,
    /// P_N with every mode measured, linearized (explicit ensembles only).
    p_linearized: Option<f64>,
    p_linearized_saturated: Option<bool>,
    /// Exact P_N by enumeration (explicit ensembles up to the oracle limit).
    p_exact: Option<f64>,
    n_min: Option<f64>,
    /// n_min/N, the large-N limit when N is not given.
    n_min_fraction: Option<f64>,
    size: Option<f64>,
    size_bound: f64,
    note: Option<String>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    match run(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(INPUT_ERROR)
        }
    }
}

fn run(command: Command) -> Result<ExitCode> {
    match command {
        Command::Compute { device, delta, out } => {
            let spec = load_device(&device).with_context(|| format!("loading {}", device.display()))?;
            let config = RunConfig {
                devices: vec![device],
                format: out.format.into(),
                precision: delta,
                ..RunConfig::default()
            };
            let report = run_pipeline(&spec, &config)?;
            for note in &report.notes {
                log::info!("{}: {note}", report.device);
            }
            emit(&render(&[report], config.format)?, out.output.as_deref())?;
        }
        Command::Table { devices, delta, out } => {
            let files = device_files_in(&devices)?;
            if files.is_empty() {
                bail!("no *.json device files in {}", devices.display());
            }
            let config = RunConfig {
                devices: files,
                format: out.format.into(),
                precision: delta,
                ..RunConfig::default()
            };
            emit(&render(&run_table(&config)?, config.format)?, out.output.as_deref())?;
        }
        Command::Spectrum {
            material,
            delta_vs,
            direction,
            energy_points,
            angle_points,
            window,
            out,
        } => {
            let material = resolve_material(&material)?;
            let dir = Vec3::new(direction[0], direction[1], direction[2]);
            if dir.norm() == 0.0 || !dir.norm().is_finite() {
                bail!("--direction must be a nonzero vector");
            }
            let config = SpectrumConfig {
                energy_points,
                angle_points,
                window,
            };
            let spectrum = emit_spectrum(&material, &(dir.normalize() * delta_vs), &config)?;
            let text = match out.format {
                Format::Json => spectrum.to_json()?,
                Format::Csv => spectrum.to_csv()?,
            };
            emit(&text, out.output.as_deref())?;
        }
        Command::Distinguish {
            ensemble,
            n_modes,
            delta_n_tot,
            delta,
        } => {
            let report = match ensemble {
                Some(path) => explicit_ensemble(&path, delta)?,
                None => {
                    let dn = delta_n_tot.context("give --ensemble or --delta-n-tot")?;
                    summary_ensemble(n_modes, dn, delta)?
                }
            };
            emit(&serde_json::to_string_pretty(&report)?, None)?;
        }
        Command::Verify {
            seed,
            trials,
            energy_panels,
            electron_charge,
            quick,
            json,
        } => {
            let mut options = VerifyOptions {
                seed,
                basis_trials: trials,
                electron_charge,
                grid: ShellGridConfig {
                    energy_panels,
                    ..ShellGridConfig::default()
                },
                ..VerifyOptions::default()
            };
            options.grid.validate()?;
            if quick {
                options.oracle_ensembles = 100;
                options.basis_matrices = 50;
                options.spectrum_configurations = 3;
            }
            let report = verify(&options);
            if json {
                println!("{}", serde_json::to_string_pretty(&report)?);
            } else {
                print!("{}", report.render_text());
            }
            if !report.passed() {
                return Ok(ExitCode::from(VERIFY_FAILED));
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn resolve_material(arg: &str) -> Result<Material> {
    let path = Path::new(arg);
    if path.exists() {
        Ok(load_material(path)?)
    } else {
        Ok(bundled_material(arg).with_context(|| format!("`{arg}` is neither a file nor a bundled material"))?)
    }
}

fn explicit_ensemble(path: &Path, delta: f64) -> Result<DistinguishReport> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let file: EnsembleFile = serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    let spec = ModeEnsembleSpec::explicit(file.occupations_a, file.occupations_b, delta)?;
    let n = spec.total_modes as usize;
    let linear = p_n_linearized(&spec.deltas().unwrap_or_default())?;
    let p_exact = if n <= MAX_ORACLE_MODES {
        Some(exact_trace_distance_oracle(&spec, &(0..n).collect::<Vec<_>>())?)
    } else {
        log::warn!("{n} modes exceed the exact-oracle limit of {MAX_ORACLE_MODES}");
        None
    };
    let estimate = (spec.delta_n_tot > 0.0).then(|| n_min_and_size(&spec)).transpose()?;
    let note = match estimate {
        None => Some("occupations are identical: the branches cannot be told apart".to_string()),
        Some(e) if e.n_min > spec.total_modes => Some(format!(
            "n_min = {} exceeds the {} modes given: measuring all of them falls short of 1 - delta",
            e.n_min, spec.total_modes
        )),
        Some(_) => None,
    };
    Ok(DistinguishReport {
        total_modes: Some(spec.total_modes),
        delta_n_tot: spec.delta_n_tot,
        precision: delta,
        p_linearized: Some(linear.value),
        p_linearized_saturated: Some(linear.saturated),
        p_exact,
        n_min: estimate.map(|e| e.n_min),
        n_min_fraction: estimate.map(|e| e.n_min / spec.total_modes),
        size: estimate.map(|e| e.size),
        size_bound: spec.delta_n_tot,
        note,
    })
}

fn summary_ensemble(n_modes: Option<f64>, delta_n_tot: f64, delta: f64) -> Result<DistinguishReport> {
    let (n_min, fraction, size) = match n_modes {
        Some(n) => {
            let e = n_min_and_size(&ModeEnsembleSpec::summary(n, delta_n_tot, delta)?)?;
            (Some(e.n_min), e.n_min / n, e.size)
        }
        None => {
            let e = asymptotic_size(delta_n_tot, delta)?;
            (None, e.n_min, e.size)
        }
    };
    Ok(DistinguishReport {
        total_modes: n_modes,
        delta_n_tot,
        precision: delta,
        p_linearized: None,
        p_linearized_saturated: None,
        p_exact: None,
        n_min,
        n_min_fraction: Some(fraction),
        size: Some(size),
        size_bound: delta_n_tot,
        note: None,
    })
}

fn emit(text: &str, path: Option<&Path>) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            print!("{text}");
            if !text.ends_with('\n') {
                println!();
            }
            Ok(())
        }
    }
}

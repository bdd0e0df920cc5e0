use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

mod commands;
mod config;
mod error;
mod plot;

use commands::{CalibrateArgs, DispersionArgs, ExtractArgs, Output, SynthArgs};
use config::RunConfig;
use error::CliError;

/// SAW dispersion modelling, signal extraction and thin-film parameter fitting.
#[derive(Debug, Parser)]
#[command(name = "sawfilm", version, about)]
struct Cli {
    /// Run configuration (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// PRNG seed; overrides the config value.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output file; stdout when omitted.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Compute the SAW dispersion curve of the configured stack.
    Dispersion {
        /// Lowest frequency, e.g. "50 MHz".
        #[arg(long)]
        f_min: Option<String>,
        /// Highest frequency, e.g. "500 MHz".
        #[arg(long)]
        f_max: Option<String>,
        #[arg(long)]
        n_points: Option<usize>,
    },
    /// Synthesize a mask-excited slope waveform.
    Synth {
        /// Glass-mask period, e.g. "24 um"; replaces the [mask] section.
        #[arg(long)]
        period: Option<String>,
        #[arg(long)]
        n_periods: Option<usize>,
        #[arg(long)]
        duty: Option<f64>,
    },
    /// Extract phase-velocity points from one or more waveforms.
    Extract {
        #[arg(required = true)]
        waveforms: Vec<PathBuf>,
        /// Mask period, e.g. "24 um"; overrides the waveform header.
        #[arg(long)]
        period: Option<String>,
        #[arg(long)]
        harmonics: Option<usize>,
        /// Fundamental frequency hint, e.g. "210 MHz".
        #[arg(long)]
        fundamental: Option<String>,
        /// none | hann
        #[arg(long)]
        window: Option<String>,
        #[arg(long)]
        zero_pad: Option<usize>,
        #[arg(long)]
        min_prominence: Option<f64>,
        /// Also write the amplitude spectrum here.
        #[arg(long)]
        spectrum: Option<PathBuf>,
    },
    /// Determine the SLM projection ratio from reference measurements.
    Calibrate {
        /// CSV with `period_pixels,frequency_hz` rows.
        measurements: PathBuf,
        #[arg(long)]
        pixel_pitch: Option<String>,
        /// Reference velocity, e.g. "5080 m/s".
        #[arg(long)]
        v_reference: Option<String>,
    },
    /// Fit stack parameters to a measured dispersion curve.
    Fit {
        measured: PathBuf,
        /// Estimates CSV; defaults to `<out>.estimates.csv` when --out is set.
        #[arg(long)]
        estimates: Option<PathBuf>,
    },
    /// Plot dispersion curves as SVG.
    Plot {
        curves: Vec<PathBuf>,
        /// Curves always drawn as lines.
        #[arg(long)]
        model: Vec<PathBuf>,
        #[arg(long)]
        title: Option<String>,
    },
}

fn load_config(path: &Option<PathBuf>, required: bool) -> Result<RunConfig, CliError> {
    match path {
        Some(p) => RunConfig::load(p),
        None if required => Err(CliError::config("--config is required for this command")),
        None => Ok(RunConfig::empty()),
    }
}

fn write(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text)
        .map_err(|e| CliError::config(format!("cannot write {}: {e}", path.display())))
}

fn run(cli: Cli) -> Result<Output, CliError> {
    match cli.command {
        Command::Dispersion {
            f_min,
            f_max,
            n_points,
        } => {
            let cfg = load_config(&cli.config, true)?;
            commands::dispersion(
                &cfg,
                &DispersionArgs {
                    f_min,
                    f_max,
                    n_points,
                },
            )
        }
        Command::Synth {
            period,
            n_periods,
            duty,
        } => commands::synth(
            &load_config(&cli.config, true)?,
            &SynthArgs {
                seed: cli.seed,
                period,
                n_periods,
                duty,
            },
        ),
        Command::Extract {
            waveforms,
            period,
            harmonics,
            fundamental,
            window,
            zero_pad,
            min_prominence,
            spectrum,
        } => {
            let cfg = load_config(&cli.config, false)?;
            commands::extract(
                &cfg,
                &ExtractArgs {
                    waveforms,
                    period,
                    n_harmonics: harmonics,
                    fundamental,
                    window,
                    zero_pad,
                    min_prominence,
                    spectrum,
                },
            )
        }
        Command::Calibrate {
            measurements,
            pixel_pitch,
            v_reference,
        } => {
            let cfg = load_config(&cli.config, false)?;
            commands::calibrate(
                &cfg,
                &CalibrateArgs {
                    measurements,
                    pixel_pitch,
                    v_reference,
                },
            )
        }
        Command::Fit {
            measured,
            estimates,
        } => {
            let cfg = load_config(&cli.config, true)?;
            let estimates =
                estimates.or_else(|| cli.out.as_ref().map(|o| o.with_extension("estimates.csv")));
            commands::fit(&cfg, &measured, estimates)
        }
        Command::Plot {
            curves,
            model,
            title,
        } => commands::plot(&curves, &model, title.as_deref()),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let out_path = cli.out.clone();
    let result = run(cli).and_then(|out| {
        match &out_path {
            Some(p) => write(p, &out.text)?,
            None => print!("{}", out.text),
        }
        for (p, text) in &out.extra_files {
            write(p, text)?;
        }
        Ok(out.notes)
    });
    match result {
        Ok(notes) => {
            for n in notes {
                eprintln!("{n}");
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

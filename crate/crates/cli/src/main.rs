use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use quench_cli::{run_experiment, Command, ConfigSource, ExperimentConfig, Figure, RunError};

#[derive(Parser)]
#[command(name = "quench", version, about = "Exact Bose-Hubbard quench numerics")]
struct Cli {
    /// TOML experiment description; built-in defaults when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Sampling seed, overriding `interference.seed`.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Output directory, overriding `output.dir`.
    #[arg(long, global = true, env = "QUENCH_OUT")]
    out: Option<PathBuf>,

    /// Worker threads.
    #[arg(long, global = true, env = "QUENCH_THREADS")]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Eigenvalues and the quench's eigenstate weights.
    Spectrum,
    /// Norm, energy, interaction energy and densities over time.
    Quench,
    /// Rényi-2 entropies and mutual information over time.
    Entropy,
    /// Thermal ensembles matched to the quench energy.
    Ensembles,
    /// Densities, number statistics and local thermal metrics.
    Observables,
    /// Two-copy beam-splitter shots and purity estimates.
    Interfere,
    /// Dataset for one figure panel group.
    Reproduce {
        #[arg(value_enum)]
        figure: FigureArg,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum FigureArg {
    Fig2b,
    Fig3,
    Fig4,
    Fig5,
    Fig6,
}

fn run(cli: Cli) -> Result<PathBuf, RunError> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(RunError::Config {
                location: "--threads".into(),
                message: "must be positive".into(),
            });
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| RunError::Config {
                location: "--threads".into(),
                message: e.to_string(),
            })?;
    }
    let (mut config, source) = match &cli.config {
        Some(path) => {
            let bytes = std::fs::read(path).map_err(|e| RunError::io(path, e))?;
            let text = String::from_utf8(bytes.clone()).map_err(|_| RunError::Config {
                location: path.display().to_string(),
                message: "not valid UTF-8".into(),
            })?;
            let source = ConfigSource {
                label: path.display().to_string(),
                bytes: Some(bytes),
            };
            (ExperimentConfig::from_toml(&text)?, source)
        }
        None => (ExperimentConfig::default(), ConfigSource::defaults()),
    };
    if let Some(seed) = cli.seed {
        config.interference.seed = Some(seed);
    }
    if let Some(out) = &cli.out {
        config.output.dir = out.display().to_string();
    }
    let command = match cli.command {
        Cmd::Spectrum => Command::Spectrum,
        Cmd::Quench => Command::Quench,
        Cmd::Entropy => Command::Entropy,
        Cmd::Ensembles => Command::Ensembles,
        Cmd::Observables => Command::Observables,
        Cmd::Interfere => Command::Interfere,
        Cmd::Reproduce { figure } => Command::Reproduce(match figure {
            FigureArg::Fig2b => Figure::Fig2b,
            FigureArg::Fig3 => Figure::Fig3,
            FigureArg::Fig4 => Figure::Fig4,
            FigureArg::Fig5 => Figure::Fig5,
            FigureArg::Fig6 => Figure::Fig6,
        }),
    };
    let manifest = run_experiment(config, command, &source)?;
    let dir = PathBuf::from(manifest.config["output"]["dir"].as_str().unwrap_or("."));
    for o in &manifest.outputs {
        println!("{} ({} rows)", dir.join(&o.file).display(), o.rows);
    }
    Ok(dir.join("manifest.json"))
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(path) => {
            println!("{}", path.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("{}", e.record());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

use std::path::PathBuf;
use std::process::ExitCode;

use chordwig_cli::commands::{run, Command};
use chordwig_cli::config::{ChannelConfig, ExperimentConfig};
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "chordwig", version, about = "Semiclassical chord Wigner experiments")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
    /// JSON experiment config; defaults apply to missing keys.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory, overrides the config.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Final time, overrides time.t_end.
    #[arg(long, global = true)]
    t: Option<f64>,
    /// Comma-separated channel symbols (q, p, a), overrides the config.
    #[arg(long, global = true, value_delimiter = ',')]
    channels: Option<Vec<String>>,
    /// Overrides hbar.
    #[arg(long, global = true)]
    hbar: Option<f64>,
}

#[derive(Subcommand, Clone, Copy)]
enum Cmd {
    /// Semiclassical Wigner function on a phase-space grid.
    BuildWigner,
    /// Chord evolution under the configured channels.
    Evolve,
    /// Position-representation density matrix elements.
    Project,
    /// Energy-window growth.
    Diffusion,
    /// Purity and trace integrals.
    Normalize,
    /// Acceptance comparisons against the grid oracle.
    OracleCompare,
    /// Moyal product checks.
    StarCheck,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut cfg = match &cli.config {
        Some(path) => match ExperimentConfig::load(path) {
            Ok(c) => c,
            Err(e) => {
                eprintln!("error: {e}");
                return ExitCode::from(2);
            }
        },
        None => ExperimentConfig::default(),
    };
    if let Some(dir) = cli.out {
        cfg.output_dir = dir;
    }
    if let Some(t) = cli.t {
        cfg.time.t_end = t;
    }
    if let Some(names) = cli.channels {
        cfg.channels = names.iter().map(|s| ChannelConfig::named(s.trim())).collect();
    }
    if let Some(h) = cli.hbar {
        cfg.hbar = h;
    }
    let command = match cli.command {
        Cmd::BuildWigner => Command::BuildWigner,
        Cmd::Evolve => Command::Evolve,
        Cmd::Project => Command::Project,
        Cmd::Diffusion => Command::Diffusion,
        Cmd::Normalize => Command::Normalize,
        Cmd::OracleCompare => Command::OracleCompare,
        Cmd::StarCheck => Command::StarCheck,
    };
    match run(command, &cfg) {
        Ok(outputs) => {
            for o in outputs {
                println!("wrote {} ({} rows)", cfg.output_dir.join(&o.file).display(), o.rows);
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

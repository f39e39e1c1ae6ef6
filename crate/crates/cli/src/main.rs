mod commands;
mod config;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use pairing_ep::acceptance::run_all;

use crate::commands::{cmd_atlas, cmd_cut, cmd_encircle, cmd_sweep, CliError};
use crate::config::{ConfigError, RunConfig};

#[derive(Parser, Debug)]
#[command(name = "pairing-ep", version, about = "Degeneracies, monodromy and observables of a complex-coupled pairing model")]
struct Cli {
    /// TOML run configuration; defaults apply when omitted
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Output directory
    #[arg(long, global = true, value_name = "DIR", default_value = ".")]
    out: PathBuf,

    /// Worker threads
    #[arg(long, global = true, value_name = "N", value_parser = clap::value_parser!(u16).range(1..))]
    threads: Option<u16>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Locate and classify all degeneracies; write degeneracies.json and heatmap.csv
    Atlas,
    /// Track degeneracies over a γ range; write trajectory.csv and events.json
    Sweep,
    /// Trace a loop in the coupling plane; write phases.csv and summary.json
    Encircle,
    /// Spectra and pairing energies along a segment; write spectrum.csv and pairing_energy.csv
    Cut,
    /// Run the acceptance suite and print one line per criterion
    Selftest,
}

fn selftest() -> ExitCode {
    let results = run_all();
    for r in &results {
        println!("{r}");
    }
    let failed = results.iter().filter(|r| !r.passed).count();
    println!("{} of {} criteria passed", results.len() - failed, results.len());
    match failed {
        0 => ExitCode::SUCCESS,
        _ => ExitCode::from(1),
    }
}

fn run(command: &Command, config: &RunConfig, out: &Path) -> Result<Vec<PathBuf>, CliError> {
    match command {
        Command::Atlas => cmd_atlas(config, out),
        Command::Sweep => cmd_sweep(config, out),
        Command::Encircle => cmd_encircle(config, out),
        Command::Cut => cmd_cut(config, out),
        Command::Selftest => unreachable!(),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n.into()).build_global() {
            eprintln!("{}", CliError::Config(ConfigError(format!("threads: {e}"))));
            return ExitCode::from(2);
        }
    }
    if let Command::Selftest = cli.command {
        return selftest();
    }
    let outcome = RunConfig::load(cli.config.as_deref())
        .map_err(CliError::from)
        .and_then(|config| run(&cli.command, &config, &cli.out));
    match outcome {
        Ok(files) => {
            for f in files {
                println!("wrote {}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

//! `freejac run <config.json>`: runs one experiment and writes its report.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use freejac::harness::{self, RunOptions};
use freejac::par::configure_threads;

#[derive(Parser)]
#[command(name = "freejac", version, about = "Spectra of deep-network Jacobians and Fisher information")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run the experiment described by a JSON config file.
    Run {
        config: PathBuf,
        /// Output directory (overrides `output_dir` in the config).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Seed (overrides `seed` in the config).
        #[arg(long)]
        seed: Option<u64>,
        /// Worker threads for Monte Carlo trials.
        #[arg(long, env = "FREEJAC_THREADS", value_parser = clap::value_parser!(u64).range(1..))]
        threads: Option<u64>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let Cmd::Run { config, out, seed, threads } = cli.command;
    if let Some(t) = threads {
        configure_threads(t as usize);
    }
    let outcome = harness::run(&config, &RunOptions { output_dir: out, seed });
    match &outcome {
        Ok((report, files)) => {
            let verdict = if report.pass { "PASS" } else { "FAIL" };
            println!("{} (seed {}): {verdict}", report.command.name(), report.seed);
            for f in &report.failures {
                eprintln!("  failed: {f}");
            }
            println!("report: {}", files.report.display());
            for t in &files.tables {
                println!("table:  {}", t.display());
            }
            if let Some(p) = &files.plot_script {
                println!("plot:   {}", p.display());
            }
        }
        Err(e) => eprintln!("error: {e}"),
    }
    ExitCode::from(harness::exit_code(&outcome, |(r, _)| r.pass) as u8)
}

//! Thin command-line front end. All substance lives in the library; this
//! binary only parses flags, loads the config and dispatches to the
//! pipelines in `ffoct::pipeline` and the self checks in `ffoct::validate`.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use ffoct::config::load_config;
use ffoct::error::Error;
use ffoct::pipeline::{run_phantom, run_reconstruct, run_simulate};
use ffoct::validate::{run_suites, Mutation};

#[derive(Parser)]
#[command(
    name = "ffoct",
    version,
    about = "Full-field optical coherence tomography: synthesize interferometric \
             measurements from susceptibility phantoms and reconstruct them back."
)]
struct Cli {
    /// Run configuration (JSON). Every flag can also be set through the
    /// environment with the FFOCT_ prefix.
    #[arg(long, global = true, env = "FFOCT_CONFIG")]
    config: Option<PathBuf>,

    /// Output dataset directory.
    #[arg(long, global = true, env = "FFOCT_OUT", default_value = "out")]
    out: PathBuf,

    /// Worker thread count (defaults to all cores).
    #[arg(long, global = true, env = "FFOCT_THREADS")]
    threads: Option<usize>,

    /// Seed recorded in provenance, overriding the config's seed.
    #[arg(long, global = true, env = "FFOCT_SEED")]
    seed: Option<u64>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write the configured phantom as a dataset.
    Phantom,
    /// Synthesize the measurable data of the configured phantom.
    Simulate,
    /// Reconstruct susceptibility from a dataset in the configured mode.
    Reconstruct {
        /// Input dataset directory.
        #[arg(long, env = "FFOCT_INPUT")]
        input: PathBuf,
    },
    /// Run the built-in self-check suites and report measured tolerances.
    Validate,
}

fn run(cli: &Cli) -> Result<i32, Error> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::Config(format!("threads: {e}")))?;
    }
    if let Command::Validate = cli.command {
        let report = run_suites(Mutation::None)?;
        for s in &report.suites {
            println!(
                "{} {}: measured {:.3e} (tolerance {:.3e}) - {}",
                if s.passed { "PASS" } else { "FAIL" },
                s.name,
                s.measured,
                s.tolerance,
                s.detail
            );
        }
        return Ok(if report.all_passed() { 0 } else { 1 });
    }
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| Error::Config("--config is required for this subcommand".into()))?;
    let (mut cfg, hash) = load_config(path)?;
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    let manifest = match &cli.command {
        Command::Phantom => run_phantom(&cfg, &hash, &cli.out)?,
        Command::Simulate => run_simulate(&cfg, &hash, &cli.out)?,
        Command::Reconstruct { input } => run_reconstruct(&cfg, &hash, input, &cli.out)?,
        Command::Validate => unreachable!(),
    };
    println!(
        "wrote {} dataset ({} arrays) to {}",
        manifest.kind,
        manifest.arrays.len(),
        cli.out.display()
    );
    Ok(0)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

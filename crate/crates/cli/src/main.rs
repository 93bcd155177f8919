//! `deathtoll`: reproducible fit, projection, bootstrap, dependence and
//! simulation runs driven by one config file and one master seed.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;
mod error;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::RunConfig;
use error::CliError;
use output::{Stamp, Writer};

#[derive(Debug, Parser)]
#[command(name = "deathtoll", version, about = "Climate-disaster death-toll model runs")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Flat TOML run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Master seed; overrides the config.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Worker threads for fits and bootstrap replicates.
    #[arg(long, global = true)]
    jobs: Option<usize>,

    /// Output directory; overrides the config.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, Subcommand)]
enum Command {
    /// Fit frequency and severity models for each configured type.
    Fit,
    /// Project counts, deaths per disaster and annual tolls.
    Project,
    /// Parametric bootstrap intervals for the projections.
    Bootstrap,
    /// Residual dependence diagnostics between type pairs.
    Depend,
    /// Write a synthetic events, covariates and scenario data set.
    Simulate,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Fit => "fit",
            Command::Project => "project",
            Command::Bootstrap => "bootstrap",
            Command::Depend => "depend",
            Command::Simulate => "simulate",
        }
    }
}

fn resolve(cli: &Cli) -> Result<RunConfig, CliError> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(j) = cli.jobs {
        if j == 0 {
            return Err(CliError::Usage("--jobs must be positive".into()));
        }
        cfg.jobs = Some(j);
    }
    if let Some(o) = &cli.out {
        cfg.out = o.clone();
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: &Cli) -> Result<(), CliError> {
    let cfg = resolve(cli)?;
    if let Some(j) = cfg.jobs {
        // fails only if a pool already exists, which cannot happen here
        let _ = rayon::ThreadPoolBuilder::new().num_threads(j).build_global();
    }
    let stamp = Stamp {
        command: cli.command.name().into(),
        config_hash: cfg.hash(),
        seed: cfg.seed,
    };
    let mut out = Writer::new(&cfg.out, stamp);
    match cli.command {
        Command::Fit => commands::fit(&cfg, &mut out)?,
        Command::Project => commands::project_cmd(&cfg, &mut out)?,
        Command::Bootstrap => commands::bootstrap(&cfg, &mut out)?,
        Command::Depend => commands::depend(&cfg, &mut out)?,
        Command::Simulate => commands::simulate(&cfg, &mut out)?,
    }
    for p in commands::relative(&out.written, &cfg.out) {
        println!("{}", cfg.out.join(p).display());
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let usage = e.use_stderr();
            let _ = e.print();
            return ExitCode::from(if usage { error::exit::USAGE as u8 } else { 0 });
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("deathtoll {}: {e}", cli.command.name());
            if let CliError::Core {
                source: deathtoll::Error::Optimizer { trace, .. },
                ..
            } = &e
            {
                for t in trace.iter().rev().take(5).rev() {
                    eprintln!(
                        "  iteration {:>4}: value {:.6} grad {:.3e} step {:.3e}",
                        t.iteration, t.value, t.grad_norm, t.step
                    );
                }
            }
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::error;
use regen_lasso::config::{has_errors, validate_config, RunConfig};
use regen_lasso::{pipeline, Error};

/// Regenerative output analysis for the Bayesian Lasso Gibbs sampler.
#[derive(Parser)]
#[command(version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Full pipeline: hyperparameters, tuning, main run and diagnostics.
    Run(Common),
    /// Stop after the α profile.
    Tune(Common),
    /// Empirical Bayes estimate of (λ, σ²) only.
    Eb(Common),
    /// Check a config and print findings.
    Validate(Common),
}

#[derive(Args)]
struct Common {
    /// Config file of `key = value` lines.
    #[arg(short, long)]
    config: Option<PathBuf>,
    /// Override a config key, e.g. `--set seed=7`. Repeatable.
    #[arg(short = 's', long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Output directory; wins over the config file.
    #[arg(short, long, env = "REGEN_LASSO_OUT")]
    out: Option<PathBuf>,
}

const EXIT_CONFIG: u8 = 2;
const EXIT_TOURS: u8 = 3;

impl Common {
    fn resolve(&self) -> regen_lasso::Result<RunConfig> {
        let mut cfg = RunConfig::default();
        if let Some(path) = &self.config {
            cfg.update_from_file(path)?;
        }
        if let Some(out) = &self.out {
            cfg.out_dir = out.clone();
        }
        for o in &self.overrides {
            cfg.apply_override(o)?;
        }
        Ok(cfg)
    }
}

fn exit_code(err: &Error) -> u8 {
    match err.root() {
        Error::Config(_) => EXIT_CONFIG,
        Error::Io { .. } => EXIT_CONFIG,
        Error::InsufficientTours { .. } => EXIT_TOURS,
        _ => 1,
    }
}

fn run(command: Command) -> regen_lasso::Result<u8> {
    match command {
        Command::Validate(c) => {
            let cfg = c.resolve()?;
            let findings = validate_config(&cfg);
            for f in &findings {
                println!("{f}");
            }
            if has_errors(&findings) {
                return Ok(EXIT_CONFIG);
            }
            println!("ok");
        }
        Command::Eb(c) => {
            let out = pipeline::eb(&c.resolve()?)?;
            let h = out.result.hyper;
            println!(
                "lambda = {:e}\nsigma2 = {:e}\nsigma = {:e}",
                h.lambda,
                h.sigma2,
                h.sigma()
            );
        }
        Command::Tune(c) => {
            let out = pipeline::tune(&c.resolve()?)?;
            println!(
                "alpha = {:e}\nmean_psi = {:e}",
                out.tuned.alpha,
                out.tuned.best_mean_psi()
            );
        }
        Command::Run(c) => {
            let cfg = c.resolve()?;
            let out = pipeline::run_pipeline(&cfg)?;
            let mut md = Vec::new();
            out.report.write_markdown(&mut md).expect("in-memory write");
            print!("{}", String::from_utf8_lossy(&md));
            println!("\nwrote {} files to {}", out.files.len(), cfg.out_dir.display());
        }
    }
    Ok(0)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            error!("{e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use wlp_core::cli::{parse_complex, parse_config, run};
use wlp_core::moebius::{reduce_to_fundamental_domain, UpperHalfPoint};
use wlp_core::Error;

#[derive(Parser)]
#[command(name = "wlp", version, about = "Weierstrass / Lax-Phillips toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Execute a JSON scenario config
    Run {
        /// Path to the scenario config
        config: PathBuf,
        /// Print per-step detail
        #[arg(long)]
        verbose: bool,
        /// Directory for generated artifacts (default: alongside the config)
        #[arg(long, value_name = "DIR")]
        out_dir: Option<PathBuf>,
    },
    /// Reduce a point of the upper half-plane to the fundamental domain
    Reduce {
        /// Point as "x+yi", e.g. "10.3+0.002i"
        #[arg(long)]
        z: String,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Cmd::Run {
            config,
            verbose,
            out_dir,
        } => {
            let text = match std::fs::read_to_string(&config) {
                Ok(t) => t,
                Err(e) => {
                    eprintln!("error: cannot read {}: {e}", config.display());
                    return ExitCode::from(1);
                }
            };
            let scenario = match parse_config(&text) {
                Ok(s) => s,
                Err(e) => {
                    eprintln!("error: invalid config:\n{e}");
                    return ExitCode::from(1);
                }
            };
            let out = out_dir.unwrap_or_else(|| {
                config
                    .parent()
                    .map(|p| p.to_path_buf())
                    .unwrap_or_else(|| PathBuf::from("."))
            });
            if verbose {
                eprintln!("scenario: {:#?}", scenario.command);
                eprintln!("out dir:  {}", out.display());
            }
            match run(&scenario, &out) {
                Ok(report) => {
                    print!("{}", report.render());
                    ExitCode::from(report.exit_code() as u8)
                }
                Err(Error::Contract(msg)) => {
                    eprintln!("CONTRACT VIOLATED: {msg}");
                    ExitCode::from(2)
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::from(1)
                }
            }
        }
        Cmd::Reduce { z } => {
            let z = match parse_complex(&z).and_then(UpperHalfPoint::from_complex) {
                Ok(z) => z,
                Err(e) => {
                    eprintln!("error: {e}");
                    return ExitCode::from(1);
                }
            };
            match reduce_to_fundamental_domain(&z) {
                Ok((reduced, gamma)) => {
                    println!("z       = {} + {}i", z.x(), z.y());
                    println!("reduced = {} + {}i", reduced.x(), reduced.y());
                    println!(
                        "gamma   = [[{}, {}], [{}, {}]]",
                        gamma.a, gamma.b, gamma.c, gamma.d
                    );
                    ExitCode::SUCCESS
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::from(1)
                }
            }
        }
    }
}

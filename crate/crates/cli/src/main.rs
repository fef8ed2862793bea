//! Command-line front end for the cubic Weyl sum toolkit.
//!
//! Exit codes: 0 success, 2 invalid input or usage, 3 resource limits,
//! 4 a suite or trace check failed, 1 internal error.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use cubic_weyl::Error;

use crate::config::{AlphaSpec, Config, Format};

#[derive(Parser, Debug)]
#[command(name = "cubic-weyl", version, about = "Cubic Weyl sums, complete sums and smooth rational approximations")]
struct Cli {
    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Largest modulus for tabulated spectra.
    #[arg(long = "max-q", global = true, default_value_t = 1 << 22)]
    max_q: u64,
    /// Largest N for incomplete sums.
    #[arg(long = "max-n", global = true, default_value_t = 1 << 24)]
    max_n: u64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Smooth-denominator rational approximation a/q ≈ α with q ≤ N.
    Approx {
        /// Shorthand for --alpha sqrt:<d>.
        #[arg(long)]
        d: Option<u64>,
        #[arg(long)]
        alpha: Option<AlphaSpec>,
        #[arg(long = "N")]
        n: u64,
        #[arg(long)]
        eps: f64,
    },
    /// S(α,N) = Σ_{n≤N} e(αn³).
    Sum {
        #[arg(long)]
        alpha: AlphaSpec,
        #[arg(long = "N")]
        n: u64,
    },
    /// S(a,h;q) for every h mod q.
    Spectrum {
        #[arg(long, allow_hyphen_values = true)]
        a: i64,
        #[arg(long)]
        q: u64,
    },
    /// Split q into coprime parts q₁, q₂, q₃ for a given N.
    Split {
        #[arg(long)]
        q: u64,
        #[arg(long = "N")]
        n: u64,
    },
    /// Run a named verification suite.
    Verify {
        #[arg(long)]
        suite: String,
        #[arg(long)]
        trials: Option<u64>,
        /// Size bound; its meaning depends on the suite.
        #[arg(long)]
        bound: Option<u64>,
    },
    /// Trace the Cauchy–Schwarz chain for a split modulus.
    Trace {
        #[arg(long, conflicts_with_all = ["q1", "q2", "q3"])]
        q: Option<u64>,
        #[arg(long, requires_all = ["q2", "q3"])]
        q1: Option<u64>,
        #[arg(long)]
        q2: Option<u64>,
        #[arg(long)]
        q3: Option<u64>,
        #[arg(long = "N")]
        n: u64,
        #[arg(long, default_value_t = 1, allow_hyphen_values = true)]
        a: i64,
    },
    /// |S(α,N)| and its running supremum at powers of two.
    Scan {
        #[arg(long)]
        alpha: AlphaSpec,
        #[arg(long = "n-min", default_value_t = 1 << 10)]
        n_min: u64,
        #[arg(long = "n-max", default_value_t = 1 << 17)]
        n_max: u64,
        #[arg(long, default_value_t = 0.25)]
        eps: f64,
    },
    /// Powerful part of the Pell denominators q_n.
    Abc {
        #[arg(long)]
        d: u64,
        #[arg(long = "n-max", default_value_t = 60)]
        n_max: u64,
    },
}

fn exit_code(e: &Error) -> u8 {
    match e {
        _ if e.is_input_error() => 2,
        Error::Resource(_) | Error::FactorizationFailed(_) => 3,
        _ => 1,
    }
}

fn run(cli: Cli) -> Result<bool, Error> {
    let cfg = Config::new(cli.max_q, cli.max_n, cli.seed, cli.format, cli.out)?;
    let outcome = match cli.command {
        Command::Approx { d, alpha, n, eps } => commands::approx(&cfg, d, alpha, n, eps),
        Command::Sum { alpha, n } => commands::sum(&cfg, &alpha, n),
        Command::Spectrum { a, q } => commands::spectrum(&cfg, a, q),
        Command::Split { q, n } => commands::split(&cfg, q, n),
        Command::Verify { suite, trials, bound } => commands::verify(&cfg, &suite, trials, bound),
        Command::Trace { q, q1, q2, q3, n, a } => {
            let parts = match (q1, q2, q3) {
                (Some(x), Some(y), Some(z)) => Some((x, y, z)),
                _ => None,
            };
            commands::trace(&cfg, q, parts, n, a)
        }
        Command::Scan { alpha, n_min, n_max, eps } => commands::scan(&cfg, &alpha, n_min, n_max, eps),
        Command::Abc { d, n_max } => commands::abc(&cfg, d, n_max),
    }?;
    commands::write(&cfg, &outcome.text)?;
    Ok(outcome.pass)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(4),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

use std::io::{self, Write};
use std::path::PathBuf;
use std::time::Duration;

use clap::{Parser, Subcommand, ValueEnum};
use nego_cli::commands::{self, formula_arg, Format, Options, TOKEN_KEY_VAR};
use nego_cli::{exit, CliError, Scenario};
use nego_core::{Qe, DEFAULT_DNF_CAP};
use tracing_subscriber::EnvFilter;

#[derive(Parser)]
#[command(name = "nego", version, about = "Negotiate service configurations described by linear constraints")]
struct Cli {
    /// Print every query and offer exchanged with sub-negotiators.
    #[arg(long, global = true)]
    trace: bool,
    /// Largest disjunctive normal form a decision may build.
    #[arg(long, global = true, value_name = "N", default_value_t = DEFAULT_DNF_CAP)]
    dnf_cap: usize,
    /// Seconds to wait for a remote negotiator.
    #[arg(long, global = true, value_name = "SECONDS", default_value_t = 10.0)]
    timeout: f64,
    #[arg(long, global = true, value_enum, default_value_t = FormatArg::Text)]
    format: FormatArg,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Text,
    Structured,
}

#[derive(Subcommand)]
enum Command {
    /// Eliminate quantifiers and simplify. `-` reads standard input.
    Qe { formula: String },
    Simplify { formula: String },
    /// Decide satisfiability and show a witness.
    Sat { formula: String },
    /// Decide whether the premise implies the conclusion.
    Entails { premise: String, conclusion: String },
    /// Validate a policy against a type registry.
    Check { policy: PathBuf, registry: PathBuf },
    /// Run the steps of a scenario file.
    Negotiate { scenario: PathBuf },
    /// Serve a policy on a TCP endpoint.
    Serve {
        policy: PathBuf,
        registry: PathBuf,
        /// SERVER=remote:ADDR, SERVER=leaf:FORMULA or SERVER=scripted:F1;F2
        #[arg(long = "bind", value_name = "BINDING")]
        bindings: Vec<String>,
        #[arg(long, default_value = "127.0.0.1:7400")]
        listen: String,
    },
    /// Run the bundled storage-broker scenario locally and over loopback.
    Demo,
}

fn run(cli: Cli) -> Result<i32, CliError> {
    let timeout = Duration::try_from_secs_f64(cli.timeout)
        .map_err(|_| CliError::Parse(format!("timeout `{}` is not a non-negative number of seconds", cli.timeout)))?;
    let opts = Options {
        qe: Qe::new(cli.dnf_cap),
        timeout,
        trace: cli.trace,
        format: match cli.format {
            FormatArg::Text => Format::Text,
            FormatArg::Structured => Format::Structured,
        },
    };
    let stdout = io::stdout();
    let mut out = stdout.lock();
    let code = match cli.command {
        Command::Qe { formula } => commands::qe(&mut out, &opts, &formula_arg(&formula)?),
        Command::Simplify { formula } => commands::simplify(&mut out, &opts, &formula_arg(&formula)?),
        Command::Sat { formula } => commands::sat(&mut out, &opts, &formula_arg(&formula)?),
        Command::Entails { premise, conclusion } => {
            commands::entails(&mut out, &opts, &formula_arg(&premise)?, &formula_arg(&conclusion)?)
        }
        Command::Check { policy, registry } => commands::check(&mut out, &opts, &policy, &registry),
        Command::Negotiate { scenario } => {
            let (scenario, base) = Scenario::load(&scenario)?;
            commands::negotiate(&mut out, &opts, &scenario, &base)
        }
        Command::Serve { policy, registry, bindings, listen } => {
            let handle = commands::start_server(&opts, &policy, &registry, &bindings, &listen)?;
            writeln!(out, "listening on {}", handle.local_addr())?;
            out.flush()?;
            if std::env::var_os(TOKEN_KEY_VAR).is_none() {
                tracing::warn!("{TOKEN_KEY_VAR} is not set; tokens will not survive a restart");
            }
            drop(out);
            handle.wait();
            Ok(exit::OK)
        }
        Command::Demo => commands::demo(&mut out, &opts),
    }?;
    Ok(code)
}

fn main() {
    let default_level = if std::env::args().any(|a| a == "serve") { "info" } else { "warn" };
    tracing_subscriber::fmt()
        .with_writer(io::stderr)
        .with_env_filter(EnvFilter::try_from_env("NEGO_LOG").unwrap_or_else(|_| EnvFilter::new(default_level)))
        .init();
    let cli = Cli::parse();
    let code = match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("nego: {e}");
            e.exit_code()
        }
    };
    std::process::exit(code);
}

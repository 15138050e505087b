use std::fs;
use std::io::{self, Read, Write};
use std::process::ExitCode;

use abnet_cli::commands::{self, CliError, Output};
use abnet_cli::document::{Model, NetworkDocument};
use abnet_cli::report::{render, Format};
use abnet_core::burning::Method;
use clap::{Parser, Subcommand, ValueEnum};

/// Analyze and simulate finite abelian networks.
#[derive(Parser)]
#[command(name = "abnet", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Network document; standard input when absent or "-".
    #[arg(long, global = true)]
    input: Option<String>,
    /// Round budget for stabilization.
    #[arg(long, global = true)]
    budget: Option<u64>,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Start the burning script from 1 on cycle letters only.
    #[arg(long, global = true)]
    refine_cycles: bool,
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    format: Format,
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Procedure,
    Sandpilization,
}

#[derive(Subcommand)]
enum Command {
    /// Kernel, production matrix, Laplacian, halting, critical group.
    Analyze,
    /// Stabilize pending letters from a state.
    Simulate {
        /// Letters to inject, e.g. "a=2,b=1".
        #[arg(long)]
        pending: Option<String>,
        /// Starting state, e.g. "i=1"; unlisted vertices start in their first state.
        #[arg(long)]
        state: Option<String>,
    },
    /// Burning test for one state.
    Recurrent {
        #[arg(long)]
        state: Option<String>,
    },
    /// Burning element and odometer.
    Burning {
        #[arg(long, value_enum, default_value_t = MethodArg::Procedure)]
        method: MethodArg,
    },
    /// Brute-force recurrent states and critical group, with cross-checks.
    Oracle,
    /// Random letter injections with distribution alpha.
    Markov {
        /// Letter weights, e.g. "a=0.5,b=0.5"; uniform when absent.
        #[arg(long)]
        alpha: Option<String>,
        #[arg(long, default_value_t = 1000)]
        steps: u64,
        #[arg(long)]
        state: Option<String>,
    },
    /// Print the sandpilization as a toppling-family document.
    Sandpilize,
}

fn read_input(path: Option<&str>) -> Result<String, CliError> {
    match path {
        None | Some("-") => {
            let mut s = String::new();
            io::stdin().read_to_string(&mut s)?;
            Ok(s)
        }
        Some(p) => Ok(fs::read_to_string(p)?),
    }
}

fn run(cli: &Cli) -> Result<(String, u8), CliError> {
    let doc = NetworkDocument::parse(&read_input(cli.input.as_deref())?)?;
    let model = Model::from_document(&doc)?;
    let output: Output = match &cli.command {
        Command::Analyze => commands::analyze(&model)?,
        Command::Simulate { pending, state } => commands::simulate(&model, pending.as_deref(), state.as_deref(), cli.budget)?,
        Command::Recurrent { state } => commands::recurrent(&model, state.as_deref(), cli.refine_cycles)?,
        Command::Burning { method } => {
            let method = match method {
                MethodArg::Procedure => Method::Procedure,
                MethodArg::Sandpilization => Method::Sandpilization,
            };
            commands::burning(&model, method, cli.refine_cycles)?
        }
        Command::Oracle => commands::oracle(&model)?,
        Command::Markov { alpha, steps, state } => commands::markov(&model, alpha.as_deref(), *steps, cli.seed, state.as_deref())?,
        Command::Sandpilize => {
            let mut text = commands::sandpilize(&model)?.to_json();
            text.push('\n');
            return Ok((text, 0));
        }
    };
    Ok((render(&output.report, cli.format), output.status.exit_code()))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok((text, code)) => {
            let _ = io::stdout().write_all(text.as_bytes());
            ExitCode::from(code)
        }
        Err(e) => {
            eprintln!("abnet: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

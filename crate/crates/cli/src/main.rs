//! `tbt`: simulate, attack, verify and inspect the teleoperation testbed.

mod analyze;
mod demo;
mod options;
mod run;
mod verify;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

/// Outcome of a subcommand that completed without a runtime error.
pub enum Status {
    Ok,
    /// A check was carried out and did not hold.
    Fail,
}

/// Failure classes, mapped to exit codes in `main`.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Runtime(String),
}

impl CliError {
    pub fn runtime(e: impl std::fmt::Display) -> Self {
        CliError::Runtime(e.to_string())
    }
}

pub type CliResult = Result<Status, CliError>;

const EXIT_FAIL: u8 = 2;
const EXIT_RUNTIME: u8 = 3;
const EXIT_USAGE: u8 = 64;

#[derive(Parser)]
#[command(name = "tbt", version, about = "Encrypted bilateral teleoperation testbed")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a scenario and write the trace, wire log and figure.
    Run(run::RunArgs),
    /// Compare an attacked trace against its baseline.
    Verify(verify::VerifyArgs),
    /// Test sign-pattern candidates for dynamics automorphisms.
    CheckAutomorphism(analyze::AutomorphismArgs),
    /// Generate an ElGamal key file.
    Keygen(analyze::KeygenArgs),
    /// Decode and validate logged or raw wire frames.
    InspectWire(analyze::InspectArgs),
    /// Run one robot as a standalone process over UDP.
    Node(demo::NodeArgs),
    /// Run the in-path attacker as a standalone UDP relay.
    Proxy(demo::ProxyArgs),
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(EXIT_USAGE),
            };
        }
    };
    let result = match cli.command {
        Command::Run(a) => run::run(a),
        Command::Verify(a) => verify::verify(a),
        Command::CheckAutomorphism(a) => analyze::check_automorphism(a),
        Command::Keygen(a) => analyze::keygen(a),
        Command::InspectWire(a) => analyze::inspect_wire(a),
        Command::Node(a) => demo::node(a),
        Command::Proxy(a) => demo::proxy(a),
    };
    match result {
        Ok(Status::Ok) => ExitCode::SUCCESS,
        Ok(Status::Fail) => ExitCode::from(EXIT_FAIL),
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_USAGE)
        }
        Err(CliError::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_RUNTIME)
        }
    }
}

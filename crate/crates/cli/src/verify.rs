use std::path::PathBuf;

use clap::Args;
use tbt_core::harness::{verify_undetectable, TraceLog, VerifyReport};

use crate::{CliError, CliResult, Status};

#[derive(Args)]
pub struct VerifyArgs {
    /// Trace of the run without an attack.
    #[arg(long)]
    pub baseline: PathBuf,
    /// Trace of the attacked run.
    #[arg(long)]
    pub attacked: PathBuf,
    #[arg(long, default_value_t = 1e-9)]
    pub tol: f64,
    #[arg(long)]
    pub json: bool,
}

pub fn print_report(rep: &VerifyReport) {
    println!("{:<18} {:>12} {:>11}", "quantity", "max |diff|", "first tick");
    for q in &rep.leader {
        let first = q.first_violation.map_or("-".to_string(), |t| t.to_string());
        println!("{:<18} {:>12.3e} {:>11}", q.name, q.max_abs_diff, first);
    }
    match rep.mirror.matched {
        Some(p) => println!("follower mirror: matched sign pattern {p:?}"),
        None => println!(
            "follower mirror: no match (best {:?}, residual {:.3e})",
            rep.mirror.best_pattern, rep.mirror.best_residual
        ),
    }
    if rep.truncated {
        println!("attacked run stopped early");
    }
    if rep.implausible_ticks > 0 {
        println!("implausible decodes on {} ticks", rep.implausible_ticks);
    }
    let verdict = if rep.pass { "PASS" } else { "FAIL" };
    match rep.first_detection_time {
        Some(t) => println!("{verdict}: leader max diff {:.3e} at tol {:e}, first seen at {t:.2} s", rep.leader_max_diff, rep.tol),
        None => println!("{verdict}: leader max diff {:.3e} at tol {:e} over {} ticks", rep.leader_max_diff, rep.tol, rep.ticks),
    }
}

pub fn verify(args: VerifyArgs) -> CliResult {
    if !(args.tol > 0.0) {
        return Err(CliError::Usage("--tol must be positive".into()));
    }
    let load = |p: &PathBuf| TraceLog::load_csv(p).map_err(|e| CliError::Runtime(format!("{}: {e}", p.display())));
    let base = load(&args.baseline)?;
    let att = load(&args.attacked)?;
    let rep = verify_undetectable(&base, &att, args.tol).map_err(CliError::runtime)?;
    if args.json {
        println!("{}", serde_json::to_string_pretty(&rep).map_err(CliError::runtime)?);
    } else {
        print_report(&rep);
    }
    Ok(if rep.pass { Status::Ok } else { Status::Fail })
}

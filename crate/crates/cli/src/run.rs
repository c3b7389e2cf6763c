use std::fs;
use std::path::{Path, PathBuf};

use clap::Args;
use serde_json::json;
use tbt_core::harness::{emit_plots, run_scenario, verify_undetectable, RunConfig, RunOutput};

use crate::options::{show_config, SimOptions};
use crate::verify::print_report;
use crate::{CliError, CliResult, Status};

#[derive(Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub sim: SimOptions,
    /// Output directory.
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    /// Also run the no-attack baseline and verify against it.
    #[arg(long)]
    pub baseline: bool,
    /// Tolerance for the baseline comparison.
    #[arg(long, default_value_t = 1e-9)]
    pub tol: f64,
    /// Skip the SVG figure.
    #[arg(long)]
    pub no_plot: bool,
    /// Print a JSON summary on stdout.
    #[arg(long)]
    pub json: bool,
}

fn write_outputs(out: &RunOutput, dir: &Path, stem: &str, title: &str, plot: bool) -> Result<(), CliError> {
    out.trace
        .save_csv(&dir.join(format!("{stem}.csv")))
        .map_err(CliError::runtime)?;
    let wire = if stem == "trace" { "wire.log".to_string() } else { format!("{stem}-wire.log") };
    fs::write(dir.join(wire), &out.wire_log).map_err(CliError::runtime)?;
    if plot {
        emit_plots(&out.trace, &dir.join(format!("{stem}.svg")), title).map_err(CliError::runtime)?;
    }
    Ok(())
}

fn summary(cfg: &RunConfig, out: &RunOutput) -> serde_json::Value {
    json!({
        "scenario": cfg.scenario.as_str(),
        "mode": cfg.mode.to_string(),
        "ticks": out.stats.ticks,
        "aborted": out.aborted,
        "frames_dropped": out.stats.frames_dropped,
        "stale_dropped": out.stats.stale_dropped,
        "corrupt_dropped": out.stats.corrupt_dropped,
        "frames_rewritten": out.stats.frames_rewritten,
        "implausible_ticks": out.stats.implausible_ticks,
    })
}

pub fn run(args: RunArgs) -> CliResult {
    let cfg = args.sim.resolve()?;
    if args.sim.show_config {
        show_config(&cfg);
        return Ok(Status::Ok);
    }
    fs::create_dir_all(&args.out).map_err(CliError::runtime)?;
    let plot = !args.no_plot;

    let attacked = run_scenario(&cfg).map_err(CliError::runtime)?;
    let title = format!("{} ({})", cfg.scenario, cfg.mode);
    write_outputs(&attacked, &args.out, "trace", &title, plot)?;
    let mut doc = json!({ "run": summary(&cfg, &attacked), "out": args.out.display().to_string() });

    let mut status = Status::Ok;
    if args.baseline {
        let base_cfg = cfg.baseline();
        let base = run_scenario(&base_cfg).map_err(CliError::runtime)?;
        write_outputs(&base, &args.out, "baseline", "baseline", plot)?;
        let rep = verify_undetectable(&base.trace, &attacked.trace, args.tol).map_err(CliError::runtime)?;
        if !rep.pass {
            status = Status::Fail;
        }
        if !args.json {
            print_report(&rep);
        }
        doc["verify"] = serde_json::to_value(&rep).map_err(CliError::runtime)?;
    }

    if args.json {
        println!("{}", serde_json::to_string_pretty(&doc).map_err(CliError::runtime)?);
    } else {
        let s = &attacked.stats;
        println!(
            "{}: {} ticks, {} frames rewritten, {} dropped, {} implausible ticks -> {}",
            title,
            s.ticks,
            s.frames_rewritten,
            s.frames_dropped,
            s.implausible_ticks,
            args.out.display()
        );
        if let Some(why) = &attacked.aborted {
            println!("aborted: {why}");
        }
    }
    Ok(status)
}

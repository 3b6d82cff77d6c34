use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use consumax::commands::{continuity, refine, run, sweep, verify};
use consumax::{load_config, Result};

/// Simulator and verification harness for a chemotaxis-consumption system
/// with measure-valued initial data.
#[derive(Parser)]
#[command(name = "consumax", version, about)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct CommonArgs {
    /// TOML experiment configuration.
    #[arg(long)]
    config: PathBuf,
    /// Accept configurations outside the standing hypotheses (smallness of
    /// ‖v₀‖∞, admissible (p, λ)); outputs are labeled exploratory.
    #[arg(long)]
    allow_outside_hypotheses: bool,
    /// Output directory (defaults to the config's [output] dir).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run one simulation and check its run-level invariants.
    Run(CommonArgs),
    /// Run the regularization sweep and check uniformity plus Cauchy decay.
    SweepEps(CommonArgs),
    /// Study continuity at t = 0 against the explicit moduli.
    Continuity(CommonArgs),
    /// Certify the closed-form pointwise estimate for the configured (n, χ, vmax).
    Verify(CommonArgs),
    /// Rerun at refined (h, dt) and check energy-inequality residual decay.
    Refine(CommonArgs),
}

fn dispatch(cmd: &Cmd) -> Result<bool> {
    let (name, args) = match cmd {
        Cmd::Run(a) => ("run", a),
        Cmd::SweepEps(a) => ("sweep-eps", a),
        Cmd::Continuity(a) => ("continuity", a),
        Cmd::Verify(a) => ("verify", a),
        Cmd::Refine(a) => ("refine", a),
    };
    let cfg = load_config(&args.config, args.allow_outside_hypotheses)?;
    if cfg.exploratory {
        println!("note: exploratory run (outside the standing hypotheses)");
    }
    let out = args.out.clone().unwrap_or_else(|| cfg.out_dir.clone());
    let pass = match cmd {
        Cmd::Run(_) => run::execute(&cfg, &out, true)?.report.pass,
        Cmd::SweepEps(_) => sweep::execute(&cfg, &out)?,
        Cmd::Continuity(_) => continuity::execute(&cfg, &out)?,
        Cmd::Verify(_) => verify::execute(&cfg.verify, &out)?,
        Cmd::Refine(_) => refine::execute(&cfg, &out)?,
    };
    if name != "verify" {
        println!("{name}: {}", if pass { "PASS" } else { "FAIL" });
    }
    Ok(pass)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(&cli.cmd) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};

use otto_sta::harness::{cmd_audit, cmd_evaluate, cmd_export, cmd_optimize, cmd_sweep, ExperimentConfig, Overrides};

#[derive(Parser)]
#[command(
    name = "otto-sta",
    version,
    about = "Optimal STA driving of a harmonic quantum Otto refrigerator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Energetics and traces of the configured ramp
    Evaluate(Common),
    /// Train an ensemble and keep its best ramp
    Optimize(Common),
    /// Figure of merit against the benchmark over a grid of stroke times
    Sweep(Common),
    /// Look for ramps on which the H_STA metric breaks the energy balance
    Audit(Common),
    /// Re-emit the stored best ramp with plot-ready traces
    Export(Common),
}

#[derive(Args)]
struct Common {
    /// JSON experiment config; defaults apply when omitted
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Stroke time
    #[arg(long)]
    tau: Option<f64>,
    /// Output directory
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    restarts: Option<usize>,
    /// Paper-scale schedule (4 x 1000 steps, full ensembles in sweeps)
    #[arg(long)]
    full_fidelity: bool,
}

impl Common {
    fn config(&self) -> anyhow::Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(p) => ExperimentConfig::load(p).with_context(|| format!("loading {}", p.display()))?,
            None => ExperimentConfig::default(),
        };
        cfg.apply(&Overrides {
            seed: self.seed,
            tau: self.tau,
            out: self.out.clone(),
            restarts: self.restarts,
            full_fidelity: self.full_fidelity,
        });
        Ok(cfg)
    }
}

fn run(cli: Cli) -> anyhow::Result<Vec<PathBuf>> {
    Ok(match cli.command {
        Command::Evaluate(c) => {
            let (r, files) = cmd_evaluate(&c.config()?)?;
            let e = &r.evaluation.cycle;
            println!(
                "C_AB = {:.10}  C_CD = {:.10}  eps = {:.6}  eps_ad = {:.6}  chi = {:.6e}",
                e.c_ab, e.c_cd, e.eps, e.eps_ad, e.chi
            );
            files
        }
        Command::Optimize(c) => {
            let (r, files) = cmd_optimize(&c.config()?)?;
            println!(
                "best restart {}: C_AB = {:.10} ({:.4} of benchmark), {} failed restarts",
                r.best_restart,
                r.best.costs.c_ab.value,
                r.c_ab_ratio,
                r.failures.len()
            );
            files
        }
        Command::Sweep(c) => {
            let (r, files) = cmd_sweep(&c.config()?)?;
            let failed = r.rows.iter().filter(|row| !row.errors.is_empty()).count();
            println!("{} sweep points, {failed} with empty cells", r.rows.len());
            files
        }
        Command::Audit(c) => {
            let (r, files) = cmd_audit(&c.config()?)?;
            match &r.selected {
                Some(s) => println!(
                    "violation found: {}  (W1+W3+H_STA = {:.6e}, Q4 = {:.6e}, eps under C = {:.6})",
                    r.violation_found, s.evaluation.hsta_input_energy, r.q4, s.evaluation.cycle.eps
                ),
                None => println!("no ramp could be evaluated"),
            }
            files
        }
        Command::Export(c) => cmd_export(&c.config()?)?,
    })
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(files) => {
            for f in files {
                println!("wrote {}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

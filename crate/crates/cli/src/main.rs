use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use fronttrack::scenario::{run_scenario, run_sweep, RunOptions};

#[derive(Parser)]
#[command(name = "fronttrack", version, about = "Front tracking with operator splitting for scalar balance laws")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario and write its artifact directory.
    Run(Common),
    /// Run the refinement sweep declared in a scenario.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Maximum number of levels running at once.
        #[arg(long)]
        jobs: Option<usize>,
    },
}

#[derive(Args)]
struct Common {
    /// Scenario JSON file.
    file: PathBuf,
    /// Output directory (default: out/<scenario file stem>).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Stop at the first failing bound check.
    #[arg(long)]
    strict: bool,
    /// Comma-separated snapshot times.
    #[arg(long, value_delimiter = ',')]
    snapshot_times: Option<Vec<f64>>,
}

impl Common {
    fn out_dir(&self) -> PathBuf {
        self.out.clone().unwrap_or_else(|| {
            let stem = self.file.file_stem().map(|s| s.to_owned()).unwrap_or_default();
            PathBuf::from("out").join(stem)
        })
    }

    fn options(&self, jobs: Option<usize>) -> RunOptions {
        RunOptions {
            seed: self.seed,
            snapshot_times: self.snapshot_times.clone(),
            strict: self.strict,
            jobs,
        }
    }
}

fn execute(cli: Cli) -> anyhow::Result<bool> {
    match cli.command {
        Command::Run(c) => {
            let out = c.out_dir();
            let res = run_scenario(&c.file, &out, &c.options(None))
                .with_context(|| format!("running {}", c.file.display()))?;
            for ch in &res.checks {
                println!("{} {:<32} {}", if ch.pass { "ok  " } else { "FAIL" }, ch.name, ch.detail);
            }
            if let Some(o) = &res.oracle {
                println!("oracle L1 error at t = {}: {:.6e}", o.t, o.l1_error);
            }
            println!("artifacts written to {}", out.display());
            Ok(res.pass())
        }
        Command::Sweep { common: c, jobs } => {
            let out = c.out_dir();
            let rep = run_sweep(&c.file, &out, &c.options(jobs))
                .with_context(|| format!("sweeping {}", c.file.display()))?;
            println!("{:>5} {:>10} {:>10} {:>10} {:>14} {:>8}", "level", "epsilon", "tau", "beta", "l1_error", "pass");
            for l in &rep.levels {
                let err = l.l1_error.map(|e| format!("{e:.6e}")).unwrap_or_else(|| "-".into());
                println!(
                    "{:>5} {:>10.5} {:>10.5} {:>10.5} {:>14} {:>8}",
                    l.level, l.epsilon, l.tau, l.beta, err, l.pass
                );
            }
            if !rep.observed_orders.is_empty() {
                println!("observed L1 orders: {:?}", rep.observed_orders);
            }
            if let Some(e) = &rep.exceptional {
                println!("flagged times: {:?}", e.flagged);
            }
            println!("report written to {}", out.join("reports").join("sweep.json").display());
            Ok(rep.pass)
        }
    }
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

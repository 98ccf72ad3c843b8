use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Parser, Subcommand};
use hybrid_ba_cli::{cmd_allocate, cmd_dump_channel, cmd_sweep, cmd_train, error_line};

#[derive(Parser)]
#[command(name = "hybrid-ba", version, about = "ADC bit allocation for hybrid mmWave receivers")]
struct Cli {
    /// Output directory; overrides the scenario and HYBRID_BA_OUT_DIR.
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train the average switching-power model and update the look-up table.
    Train { scenario: PathBuf },
    /// Compare the four receivers over the scenario's b_bar sweep.
    Sweep {
        scenario: PathBuf,
        /// Look-up table; defaults to the one in the output directory.
        #[arg(long)]
        table: Option<PathBuf>,
    },
    /// Allocate bits for one stored channel.
    Allocate {
        scenario: PathBuf,
        #[arg(long)]
        channel: PathBuf,
        /// Total receiver power budget in watts.
        #[arg(long)]
        budget: f64,
        /// Look-up table for the switching-power estimate; zero if omitted.
        #[arg(long)]
        table: Option<PathBuf>,
        #[arg(long)]
        json: bool,
    },
    /// Write one channel realization of the scenario in dump format.
    DumpChannel {
        scenario: PathBuf,
        #[arg(long, default_value_t = 0)]
        index: usize,
        #[arg(long)]
        output: PathBuf,
    },
}

fn run(cli: Cli) -> Result<()> {
    let out_dir = cli.out_dir.as_deref();
    match cli.command {
        Command::Train { scenario } => {
            let outcome = cmd_train(&scenario, out_dir)?;
            println!(
                "trained {} budgets for n_u = {}, l = {}; fit residual {} W; table {}",
                outcome.points.len(),
                outcome.fit.n_u,
                outcome.fit.l,
                outcome.fit.residual,
                outcome.table_path.display()
            );
        }
        Command::Sweep { scenario, table } => {
            let outcome = cmd_sweep(&scenario, table.as_deref(), out_dir)?;
            for r in outcome.results.iter().filter(|r| r.infeasible > 0) {
                eprintln!(
                    "note: {} at b_bar = {} was infeasible in {} of {} realizations",
                    r.method, r.b_bar, r.infeasible, r.n
                );
            }
            println!("wrote {} rows to {}", outcome.results.len(), outcome.csv_path.display());
        }
        Command::Allocate {
            scenario,
            channel,
            budget,
            table,
            json,
        } => {
            let report = cmd_allocate(&scenario, &channel, budget, table.as_deref())?;
            if json {
                println!("{}", serde_json::to_string_pretty(&report)?);
            } else {
                print!("{}", report.to_text());
            }
        }
        Command::DumpChannel {
            scenario,
            index,
            output,
        } => cmd_dump_channel(&scenario, index, &output)?,
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("{}", error_line(&err));
            ExitCode::FAILURE
        }
    }
}

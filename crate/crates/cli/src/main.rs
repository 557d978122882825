use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand as ClapSubcommand};
use gkdv_core::config::ExperimentConfig;
use gkdv_core::experiment::{
    error_record, exit_code_for, run_subcommand, run_sweep, sweep_exit_code, RunOutcome, Subcommand, SweepAxis,
};
use gkdv_core::Error;

/// Pseudospectral experiments for ∂ₜu + ∂ₓ^{2j+1}u ± |u|^α∂ₓ^{2j−1}u = 0.
///
/// Exit status: 0 ok, 1 I/O or format error, 2 config error,
/// 3 numerical failure or failed checks, 4 Picard non-convergence.
#[derive(Parser, Debug)]
#[command(name = "gkdv", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(ClapSubcommand, Debug)]
enum Command {
    /// Reference ETDRK4 solve and norm time series.
    Simulate(Common),
    /// Picard iteration with membership verdicts and ball conditions.
    Picard(Common),
    /// Lifespan lower bound at the data's (δ, λ) or at configured values.
    Lifespan(Common),
    /// The estimate battery.
    Verify(Common),
    /// Merge the reports already present under the output directory.
    Report(Common),
}

#[derive(Args, Debug)]
struct Common {
    /// TOML experiment configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output root; defaults to `outputs.directory` from the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Sweep axis `key=v1,v2,…`; repeat for a cartesian product.
    #[arg(long = "sweep", value_name = "KEY=V1,V2,...")]
    sweeps: Vec<String>,
}

impl Command {
    fn split(&self) -> (Subcommand, &Common) {
        match self {
            Command::Simulate(c) => (Subcommand::Simulate, c),
            Command::Picard(c) => (Subcommand::Picard, c),
            Command::Lifespan(c) => (Subcommand::Lifespan, c),
            Command::Verify(c) => (Subcommand::Verify, c),
            Command::Report(c) => (Subcommand::Report, c),
        }
    }
}

fn fail(command: Subcommand, err: &Error, out: Option<&Path>) -> i32 {
    let record = error_record(command.name(), err);
    if let Some(dir) = out.map(|o| o.join(command.name())) {
        let _ = std::fs::create_dir_all(&dir).and_then(|_| std::fs::write(dir.join("error.json"), record.to_string()));
    }
    eprintln!("gkdv {command}: {err}");
    eprintln!("{record}");
    exit_code_for(err)
}

fn summary(outcome: &RunOutcome) -> String {
    let r = &outcome.report;
    let extra = match outcome.subcommand {
        Subcommand::Picard => format!(
            ", converged {} after {} iterations",
            r["picard"]["converged"], r["picard"]["iterations"]
        ),
        Subcommand::Lifespan => format!(", T = {}", r["lifespan"]["result"]["t_statement"]),
        Subcommand::Verify => format!(", green {}", r["green"]),
        _ => String::new(),
    };
    format!(
        "{}: {}{extra} -> {} ({:.2}s)",
        outcome.subcommand,
        r["status"].as_str().unwrap_or("?"),
        outcome.directory.display(),
        outcome.wall_seconds
    )
}

fn run(cli: Cli) -> i32 {
    let (command, common) = cli.command.split();
    let text = match std::fs::read_to_string(&common.config) {
        Ok(t) => t,
        Err(e) => {
            let err = Error::config("--config", format!("cannot read {}: {e}", common.config.display()));
            return fail(command, &err, common.out.as_deref());
        }
    };
    let axes = match common
        .sweeps
        .iter()
        .map(|s| s.parse())
        .collect::<Result<Vec<SweepAxis>, _>>()
    {
        Ok(a) => a,
        Err(e) => return fail(command, &e, common.out.as_deref()),
    };

    if axes.is_empty() {
        let config = match ExperimentConfig::parse(&text) {
            Ok(c) => c,
            Err(e) => return fail(command, &e, common.out.as_deref()),
        };
        let out = common
            .out
            .clone()
            .unwrap_or_else(|| PathBuf::from(&config.output_directory));
        return match run_subcommand(command, &config, &out) {
            Ok(outcome) => {
                println!("{}", summary(&outcome));
                outcome.exit_code()
            }
            Err(e) => {
                eprintln!("gkdv {command}: {e}");
                eprintln!("{}", error_record(command.name(), &e));
                exit_code_for(&e)
            }
        };
    }

    let out = match &common.out {
        Some(o) => o.clone(),
        None => match ExperimentConfig::parse(&text) {
            Ok(c) => PathBuf::from(c.output_directory),
            Err(e) => return fail(command, &e, None),
        },
    };
    let runs = run_sweep(command, &text, &axes, &out);
    for run in &runs {
        match &run.result {
            Ok(outcome) => println!("[{}] {}", run.label, summary(outcome)),
            Err(e) => println!("[{}] {command}: error ({e}) -> exit {}", run.label, run.exit_code()),
        }
    }
    sweep_exit_code(&runs)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let code = run(Cli::parse());
    ExitCode::from(code as u8)
}

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use padesym_cli::builtins::builtins;
use padesym_cli::commands::{self, evaluate_checks, Outcome};
use padesym_cli::config;
use padesym_cli::{CliError, Experiment, RunOptions};

/// Padé integrators for linear stochastic Hamiltonian systems.
#[derive(Parser)]
#[command(name = "padesym", version, about)]
struct Cli {
    /// List builtin experiments and exit.
    #[arg(long)]
    list: bool,
    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Subcommand)]
enum Command {
    /// Monte-Carlo strong error per step size and fitted order.
    Convergence(Common),
    /// A single sample path.
    Trajectory {
        #[command(flatten)]
        common: Common,
        /// Add the quadratic invariant column `H`.
        #[arg(long)]
        hamiltonian: bool,
        /// Add the one-step symplectic defect column.
        #[arg(long)]
        defect: bool,
    },
    /// `H` and symplectic defect along a sample path.
    Invariants(Common),
    /// Sample second moment against time.
    MomentGrowth(Common),
}

#[derive(Args)]
struct Common {
    /// TOML experiment file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Builtin experiment name (see --list).
    #[arg(long, conflicts_with = "config")]
    builtin: Option<String>,
    #[arg(long, env = "PADESYM_SEED")]
    seed: Option<u64>,
    #[arg(long)]
    paths: Option<usize>,
    /// Cap on worker threads.
    #[arg(long)]
    workers: Option<usize>,
    /// Output file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Evaluate the experiment's thresholds and exit 4 on failure.
    #[arg(long)]
    check: bool,
    /// Sum Monte-Carlo results in path order for bit-exact output.
    #[arg(long)]
    deterministic_reduce: bool,
    /// Replace the step-size grid by this single value.
    #[arg(long)]
    h: Option<f64>,
    #[arg(long)]
    t_end: Option<f64>,
}

impl Common {
    fn experiment(&self) -> Result<Experiment, CliError> {
        let mut file = match (&self.config, &self.builtin) {
            (Some(path), _) => config::parse(&std::fs::read_to_string(path)?)?,
            (None, Some(name)) => config::ConfigFile {
                builtin: Some(name.clone()),
                ..Default::default()
            },
            (None, None) => return Err(CliError::Config("pass --config or --builtin".into())),
        };
        if let Some(h) = self.h {
            file.grid = Some(vec![h]);
        }
        if self.t_end.is_some() {
            file.t_end = self.t_end;
        }
        if self.paths.is_some() {
            file.paths = self.paths;
        }
        config::resolve(&file)
    }

    fn options(&self) -> RunOptions {
        RunOptions {
            seed: self.seed,
            workers: self.workers,
            deterministic: self.deterministic_reduce,
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    if cli.list {
        for e in builtins() {
            println!("{}\t{}", e.name, e.description);
        }
        return Ok(());
    }
    let Some(command) = cli.command else {
        return Err(CliError::Config("no command given (try --help)".into()));
    };
    let (common, outcome, exp) = match &command {
        Command::Convergence(c) => {
            let exp = c.experiment()?;
            (c, commands::convergence(&exp, &c.options())?, exp)
        }
        Command::Trajectory {
            common,
            hamiltonian,
            defect,
        } => {
            let exp = common.experiment()?;
            (common, commands::trajectory(&exp, &common.options(), *hamiltonian, *defect)?, exp)
        }
        Command::Invariants(c) => {
            let exp = c.experiment()?;
            (c, commands::invariants(&exp, &c.options())?, exp)
        }
        Command::MomentGrowth(c) => {
            let exp = c.experiment()?;
            (c, commands::moment_growth(&exp, &c.options())?, exp)
        }
    };
    write_output(common, &outcome)?;
    if common.check {
        check(&exp, &outcome)?;
    }
    Ok(())
}

fn write_output(common: &Common, outcome: &Outcome) -> Result<(), CliError> {
    let text = outcome.csv.render();
    match &common.out {
        Some(path) => std::fs::write(path, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn check(exp: &Experiment, outcome: &Outcome) -> Result<(), CliError> {
    let results = evaluate_checks(&exp.checks, &outcome.metrics);
    if results.is_empty() {
        eprintln!("check: no thresholds apply to this run");
    }
    let mut failed = 0;
    for r in &results {
        eprintln!(
            "check {} [{}]: {} (value {:.6e})",
            exp.name,
            r.check,
            if r.passed { "PASS" } else { "FAIL" },
            r.value
        );
        failed += usize::from(!r.passed);
    }
    if failed > 0 {
        return Err(CliError::CheckFailed(failed));
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

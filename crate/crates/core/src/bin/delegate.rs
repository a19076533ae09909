use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use delegation_core::model::ModelParams;
use delegation_core::oracle::{GridSpec, ProbStep};
use delegation_core::sweep::{
    cmd_eval, cmd_omega, cmd_oracle, cmd_sweep, cmd_verify, compared_sets, CommandOutput,
    ExitStatus, SweepConfig, SweepError,
};
use delegation_core::DelegationSet;

#[derive(Parser)]
#[command(name = "delegate", version, about = "Delegated reform decisions: equilibria, values and sweeps")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Thresholds, values and the optimal delegation set at one point.
    Eval(PointArgs),
    /// Grid sweep writing one CSV row per point.
    Sweep(SweepArgs),
    /// Check a strategy profile file for equilibrium at one point.
    Verify {
        #[arg(long)]
        profile: PathBuf,
        #[command(flatten)]
        point: PointArgs,
    },
    /// Brute-force equilibrium search at one point.
    Oracle {
        /// Delegation set, e.g. `full`, `nc`, `change` or `0,1`. Repeatable;
        /// defaults to the three compared sets.
        #[arg(long)]
        delegation: Vec<DelegationSet>,
        #[arg(long, value_name = "Q")]
        grid_step: Option<ProbStep>,
        #[arg(long, value_name = "N")]
        workers: Option<usize>,
        #[command(flatten)]
        point: PointArgs,
    },
    /// Construct a point satisfying all threshold orderings.
    Omega {
        #[arg(long)]
        p: f64,
        #[arg(long, default_value_t = 0.5)]
        pi: f64,
        #[arg(long, default_value_t = 1e-3)]
        epsilon: f64,
    },
}

#[derive(Args)]
struct ConfigArgs {
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Override a config entry, e.g. `--set pi=0:1:0.05`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Keep points outside the assumption region.
    #[arg(long)]
    no_strict: bool,
}

#[derive(Args)]
struct PointArgs {
    #[command(flatten)]
    config: ConfigArgs,
    #[arg(long)]
    p: Option<f64>,
    #[arg(long)]
    r: Option<f64>,
    #[arg(long = "R", alias = "rent")]
    rent: Option<f64>,
    #[arg(long)]
    k: Option<f64>,
    #[arg(long)]
    pi: Option<f64>,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    config: ConfigArgs,
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
    #[arg(long)]
    oracle_check: bool,
    #[arg(long)]
    boundary_scan: bool,
    #[arg(long, value_name = "Q")]
    grid_step: Option<ProbStep>,
    #[arg(long, value_name = "N")]
    workers: Option<usize>,
}

impl ConfigArgs {
    fn load(&self) -> Result<SweepConfig, SweepError> {
        let mut cfg = match &self.config {
            Some(path) => SweepConfig::load(path)?,
            None => SweepConfig::default(),
        };
        for assignment in &self.overrides {
            cfg.set(assignment)?;
        }
        if self.no_strict {
            cfg.strict = false;
        }
        Ok(cfg)
    }
}

impl PointArgs {
    fn resolve(&self) -> Result<(ModelParams, SweepConfig), SweepError> {
        let mut cfg = self.config.load()?;
        for (key, value) in [("p", self.p), ("r", self.r), ("R", self.rent), ("k", self.k), ("pi", self.pi)] {
            if let Some(v) = value {
                cfg.set(&format!("{key}={v}"))?;
            }
        }
        Ok((cfg.point()?, cfg))
    }
}

fn finish(out: CommandOutput) -> ExitCode {
    print!("{}", out.text);
    ExitCode::from(out.status.code() as u8)
}

fn fail(msg: impl std::fmt::Display, status: ExitStatus) -> ExitCode {
    eprintln!("error: {msg}");
    ExitCode::from(status.code() as u8)
}

fn run(cli: Cli) -> ExitCode {
    match cli.command {
        Command::Eval(point) => match point.resolve() {
            Ok((prm, cfg)) => finish(cmd_eval(&prm, cfg.strict)),
            Err(e) => fail(&e, e.exit_status()),
        },
        Command::Verify { profile, point } => {
            let (prm, cfg) = match point.resolve() {
                Ok(x) => x,
                Err(e) => return fail(&e, e.exit_status()),
            };
            let text = match std::fs::read_to_string(&profile) {
                Ok(t) => t,
                Err(e) => return fail(format!("cannot read {}: {e}", profile.display()), ExitStatus::Usage),
            };
            match cmd_verify(&text, &prm, cfg.strict) {
                Ok(out) => finish(out),
                Err(e) => fail(format!("{}: {e}", profile.display()), ExitStatus::Usage),
            }
        }
        Command::Oracle { delegation, grid_step, workers, point } => {
            let (prm, cfg) = match point.resolve() {
                Ok(x) => x,
                Err(e) => return fail(&e, e.exit_status()),
            };
            let mut grid = GridSpec { delegation_sets: delegation, ..cfg.grid.clone() };
            if grid.delegation_sets.is_empty() {
                grid.delegation_sets = compared_sets();
            }
            if let Some(ProbStep(m)) = grid_step {
                grid.divisions = m;
            }
            let sets = grid.delegation_sets.clone();
            match cmd_oracle(&prm, &sets, &grid, workers.or(cfg.workers), cfg.strict) {
                Ok(out) => finish(out),
                Err(e) => fail(&e, ExitStatus::Usage),
            }
        }
        Command::Omega { p, pi, epsilon } => finish(cmd_omega(p, pi, epsilon)),
        Command::Sweep(args) => {
            let mut cfg = match args.config.load() {
                Ok(c) => c,
                Err(e) => return fail(&e, e.exit_status()),
            };
            if args.out.is_some() {
                cfg.out = args.out;
            }
            cfg.oracle_check |= args.oracle_check;
            cfg.boundary_scan |= args.boundary_scan;
            if let Some(ProbStep(m)) = args.grid_step {
                cfg.grid.divisions = m;
            }
            if args.workers.is_some() {
                cfg.workers = args.workers;
            }
            let outcome = match cmd_sweep(&cfg) {
                Ok(o) => o,
                Err(e) => return fail(&e, e.exit_status()),
            };
            if cfg.out.is_none() {
                print!("{}", outcome.csv);
            }
            eprintln!("{} rows, {} invalid points skipped", outcome.records.len(), outcome.skipped_invalid);
            if let Some(summary) = &outcome.oracle {
                eprint!("oracle check: {summary}");
            }
            ExitCode::from(outcome.status().code() as u8)
        }
    }
}

fn main() -> ExitCode {
    match Cli::try_parse() {
        Ok(cli) => run(cli),
        Err(e) => {
            let status = if e.use_stderr() { ExitStatus::Usage } else { ExitStatus::Ok };
            let _ = e.print();
            ExitCode::from(status.code() as u8)
        }
    }
}

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use dissipa_core::model::{equilibrium_temperature_model, equilibrium_temperature_paper};
use dissipa_core::moments::closure_rate;
use dissipa_harness::compare::cmd_compare;
use dissipa_harness::config::{load_config, schema_text};
use dissipa_harness::error::{HarnessError, EXIT_VALIDATION};
use dissipa_harness::runner::{apply_overrides, ode_initial_state, run};
use dissipa_harness::sweep::{cmd_sweep, SweepAxis};
use dissipa_harness::{RunKind, Scenario};

#[derive(Parser)]
#[command(
    name = "dissipa",
    version,
    about = "Linear dissipative Boltzmann model: DSMC, moment ODEs and Euler solver"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Scenario file (`key = value` lines; see print-schema).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Override dsmc.seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Override run.threads.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Suppress the summary on standard output.
    #[arg(long, global = true)]
    quiet: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Run the particle simulation.
    RunDsmc,
    /// Run the finite-volume Euler solver.
    RunEuler,
    /// Integrate the homogeneous moment equations.
    RunOdes,
    /// Compare two run directories.
    Compare { run_a: PathBuf, run_b: PathBuf },
    /// Repeat a run along one axis and fit the convergence order.
    Sweep {
        #[arg(long, value_enum)]
        kind: Kind,
        #[arg(long, value_enum)]
        axis: Axis,
        /// Comma-separated axis values (at least three).
        #[arg(long, value_delimiter = ',', num_args = 1..)]
        values: Vec<f64>,
        /// Independent seeds per value (DSMC only).
        #[arg(long, default_value_t = 1)]
        replicas: usize,
    },
    /// Print derived model constants for a scenario.
    PrintParams,
    /// Print every configuration key with its default.
    PrintSchema,
    /// Print the fully resolved scenario.
    PrintConfig,
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Dsmc,
    Euler,
    Odes,
}

#[derive(Clone, Copy, ValueEnum)]
enum Axis {
    Dt,
    #[value(alias = "n_particles")]
    NParticles,
    #[value(alias = "n_cells")]
    NCells,
    Lambda,
}

fn scenario(cli: &Cli) -> Result<Scenario, HarnessError> {
    let path = cli
        .config
        .as_deref()
        .ok_or_else(|| HarnessError::Usage("--config is required for this command".into()))?;
    apply_overrides(&load_config(path)?, cli.seed, cli.threads)
}

fn params_text(s: &Scenario) -> Result<String, HarnessError> {
    let p = &s.params;
    let bg = &s.background;
    let init = ode_initial_state(s);
    let mut out = format!(
        "alpha = {}\nbeta = {}\na = {}\nrate_constant = {}\nT_fixed_model = {}\nT_fixed_paper = {}\n",
        p.alpha,
        p.beta,
        p.effective_coefficient(),
        p.rate_constant,
        equilibrium_temperature_model(p, bg.t1).map_or_else(|e| e.to_string(), |t| t.to_string()),
        equilibrium_temperature_paper(p, bg.t1),
    );
    if let Ok(rate) = closure_rate(&s.closure, init.u, init.temperature, bg) {
        out += &format!(
            "S_initial = {rate}\nnu_initial = {}\nkappa1_initial = {}\n",
            p.collision_rate(rate, bg.rho1),
            p.momentum_relaxation_rate(rate, bg.rho1)
        );
    }
    Ok(out)
}

fn execute(cli: &Cli) -> Result<(), HarnessError> {
    let say = |s: &str| {
        if !cli.quiet {
            println!("{s}");
        }
    };
    let out: &Path = &cli.out;
    match &cli.command {
        Command::RunDsmc | Command::RunEuler | Command::RunOdes => {
            let kind = match cli.command {
                Command::RunDsmc => RunKind::Dsmc,
                Command::RunEuler => RunKind::Euler,
                _ => RunKind::Odes,
            };
            let summary = run(kind, &scenario(cli)?, out)?;
            say(&summary.line);
        }
        Command::Compare { run_a, run_b } => {
            let report = cmd_compare(run_a, run_b, out)?;
            say(report.summary().trim_end());
        }
        Command::Sweep {
            kind,
            axis,
            values,
            replicas,
        } => {
            let kind = match kind {
                Kind::Dsmc => RunKind::Dsmc,
                Kind::Euler => RunKind::Euler,
                Kind::Odes => RunKind::Odes,
            };
            let axis = match axis {
                Axis::Dt => SweepAxis::Dt,
                Axis::NParticles => SweepAxis::NParticles,
                Axis::NCells => SweepAxis::NCells,
                Axis::Lambda => SweepAxis::Lambda,
            };
            let report = cmd_sweep(&scenario(cli)?, kind, axis, values, *replicas, out)?;
            say(report.summary().trim_end());
        }
        Command::PrintParams => print!("{}", params_text(&scenario(cli)?)?),
        Command::PrintSchema => print!("{}", schema_text()),
        Command::PrintConfig => print!("{}", scenario(cli)?.to_config_string()),
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_VALIDATION } else { 0 };
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

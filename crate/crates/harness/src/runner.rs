//! Solver orchestration for the `run-*` subcommands.

use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use dissipa_core::dsmc::{self, DsmcOutput};
use dissipa_core::euler::{self, EulerOutput};
use dissipa_core::moments::{self, temperature_rhs, OdeState, Trajectory};
use dissipa_core::{Error as CoreError, SClosure};

use crate::config::{RunKind, Scenario};
use crate::error::{HarnessError, Result};
use crate::io;

#[derive(Debug, Clone)]
pub struct RunSummary {
    pub kind: RunKind,
    /// One human-readable line; wall time is reported here and never in files.
    pub line: String,
    pub files: Vec<PathBuf>,
    pub wall_time: Duration,
}

/// Command-line overrides, recorded in the meta file.
pub fn apply_overrides(scenario: &Scenario, seed: Option<u64>, threads: Option<usize>) -> Result<Scenario> {
    let mut s = scenario.clone();
    if let Some(seed) = seed {
        s.dsmc.seed = seed;
    }
    if let Some(t) = threads {
        if t == 0 {
            return Err(HarnessError::Invalid {
                key: "run.threads".into(),
                message: "threads must be at least 1".into(),
            });
        }
        s.threads = t;
    }
    Ok(s)
}

fn kinetic_key(field: &str) -> String {
    match field {
        "t_end" | "output_interval" => format!("time.{field}"),
        "threads" => "run.threads".into(),
        f => format!("dsmc.{f}"),
    }
}

fn require_closed_moments(scenario: &Scenario, kind: RunKind) -> Result<()> {
    if matches!(scenario.closure, SClosure::HardSphere) {
        return Err(HarnessError::Invalid {
            key: "closure.kind".into(),
            message: format!(
                "hard_sphere has no closed moment system; {} runs need a pseudo-Maxwellian closure",
                kind.as_str()
            ),
        });
    }
    Ok(())
}

pub fn simulate_dsmc(scenario: &Scenario) -> Result<DsmcOutput> {
    let cfg = scenario.kinetic_config();
    cfg.validate(&scenario.closure).map_err(|err| match &err {
        CoreError::InvalidParameter { field, .. } => HarnessError::invalid(&kinetic_key(field), err),
        _ => HarnessError::invalid("closure", err),
    })?;
    Ok(dsmc::run_dsmc(
        &cfg,
        &scenario.params,
        &scenario.background,
        &scenario.closure,
        &scenario.initial,
    )?)
}

pub fn simulate_euler(scenario: &Scenario) -> Result<EulerOutput> {
    require_closed_moments(scenario, RunKind::Euler)?;
    Ok(euler::run_euler(
        &scenario.euler_config(),
        &scenario.params,
        &scenario.background,
        &scenario.closure,
        &scenario.initial,
    )?)
}

/// Initial `(u, T)` of the homogeneous problem.
pub fn ode_initial_state(scenario: &Scenario) -> OdeState {
    let s = scenario.initial.homogeneous_state(&scenario.grid);
    OdeState::new(s.u, s.temperature)
}

pub fn simulate_odes(scenario: &Scenario) -> Result<Trajectory> {
    require_closed_moments(scenario, RunKind::Odes)?;
    Ok(moments::integrate(
        ode_initial_state(scenario),
        &scenario.params,
        &scenario.background,
        &scenario.closure,
        scenario.ode_options(),
    )?)
}

fn fmt_u(u: dissipa_core::Vec3) -> String {
    format!("({:.6}, {:.6}, {:.6})", u.x(), u.y(), u.z())
}

pub fn run(kind: RunKind, scenario: &Scenario, out: &Path) -> Result<RunSummary> {
    let started = Instant::now();
    let meta = io::meta_text(scenario, kind).into_bytes();
    let (files, line) = match kind {
        RunKind::Dsmc => {
            let res = simulate_dsmc(scenario)?;
            let (grid, mode) = (&scenario.grid, scenario.dsmc.mode);
            let files = io::write_outputs(
                out,
                &[
                    (io::FIELDS_FILE, io::dsmc_fields_csv(&res, grid, mode)),
                    (io::SIGMA_FILE, io::dsmc_sigma_csv(&res, grid, mode)),
                    (io::DIAGNOSTICS_FILE, io::dsmc_diagnostics_csv(&res)),
                    (io::META_FILE, meta),
                ],
            )?;
            let last = res.snapshots.last().expect("at least the initial snapshot");
            let n = scenario.dsmc.n_particles as f64;
            let rate = if scenario.t_end > 0.0 {
                res.total_collisions as f64 / (n * scenario.t_end)
            } else {
                0.0
            };
            let cell = &last.cells[0];
            let mut line = format!(
                "dsmc: {} snapshots, N = {}, collisions per particle per unit time = {rate:.6}",
                res.snapshots.len(),
                scenario.dsmc.n_particles
            );
            if last.cells.len() == 1 {
                line += &format!(
                    ", final T = {}, u = {}",
                    cell.temperature.map_or("undefined".into(), |t| format!("{t:.6}")),
                    cell.u.map_or("undefined".into(), fmt_u)
                );
            }
            (files, line)
        }
        RunKind::Euler => {
            let res = simulate_euler(scenario)?;
            let files = io::write_outputs(
                out,
                &[
                    (io::FIELDS_FILE, io::euler_fields_csv(&res, &scenario.grid)),
                    (io::META_FILE, meta),
                ],
            )?;
            let line = format!(
                "euler: {} snapshots, {} steps, mass drift = {:.3e}",
                res.snapshots.len(),
                res.steps,
                res.max_mass_drift
            );
            (files, line)
        }
        RunKind::Odes => {
            let traj = simulate_odes(scenario)?;
            let files = io::write_outputs(
                out,
                &[(io::TRAJECTORY_FILE, io::trajectory_csv(&traj)), (io::META_FILE, meta)],
            )?;
            let max_rate = traj
                .points
                .iter()
                .map(|p| {
                    let st = OdeState {
                        u: p.u,
                        temperature: p.temperature,
                        t: p.t,
                    };
                    temperature_rhs(&st, &scenario.params, &scenario.background, p.s).abs()
                })
                .fold(0.0, f64::max);
            let last = traj.points.last().expect("at least the initial point");
            let line = format!(
                "odes: {} points, max |dT/dt| = {max_rate:.3e}, final T = {:.6}, u = {}",
                traj.points.len(),
                last.temperature,
                fmt_u(last.u)
            );
            (files, line)
        }
    };
    let wall_time = started.elapsed();
    Ok(RunSummary {
        kind,
        line: format!("{line}, wall time {:.3} s", wall_time.as_secs_f64()),
        files,
        wall_time,
    })
}

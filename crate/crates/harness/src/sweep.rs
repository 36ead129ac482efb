//! Convergence sweeps along one configuration axis.

use std::fmt::Write as _;
use std::path::Path;

use dissipa_core::dsmc::KineticMode;
use dissipa_core::euler::{st_limit_reference, EulerBoundary};
use dissipa_core::moments::Trajectory;
use dissipa_core::Grid1D;
use rayon::prelude::*;

use crate::config::{RunKind, Scenario};
use crate::error::{HarnessError, Result};
use crate::io;
use crate::runner::{simulate_dsmc, simulate_euler, simulate_odes};
use crate::stats::log_log_slope;

pub const SWEEP_FILE: &str = "sweep.csv";

/// Refinement factor of the reference run for `dt` and `n_cells` sweeps.
pub const REFERENCE_FACTOR: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepAxis {
    Dt,
    NParticles,
    NCells,
    Lambda,
}

impl SweepAxis {
    pub fn as_str(self) -> &'static str {
        match self {
            SweepAxis::Dt => "dt",
            SweepAxis::NParticles => "n_particles",
            SweepAxis::NCells => "n_cells",
            SweepAxis::Lambda => "lambda",
        }
    }

    /// Resolution parameter the order is measured against: the error is
    /// modelled as `C h^order`.
    fn resolution(self, value: f64) -> f64 {
        match self {
            SweepAxis::Dt | SweepAxis::Lambda => value,
            SweepAxis::NParticles | SweepAxis::NCells => 1.0 / value,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub value: f64,
    pub error: f64,
    /// Order between this row and the previous one.
    pub local_order: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepReport {
    pub axis: SweepAxis,
    pub kind: RunKind,
    pub rows: Vec<SweepRow>,
    /// Least-squares slope of `ln error` against `ln h`.
    pub fitted_order: Option<f64>,
    /// Whether the error decreases strictly along the given order of values.
    pub monotone_decreasing: bool,
    pub description: &'static str,
}

impl SweepReport {
    pub fn csv(&self) -> Vec<u8> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record([self.axis.as_str(), "error", "local_order"])
            .expect("in-memory write");
        for r in &self.rows {
            w.write_record([
                io::fmt_num(r.value),
                io::fmt_num(r.error),
                r.local_order.map(io::fmt_num).unwrap_or_default(),
            ])
            .expect("in-memory write");
        }
        w.into_inner().expect("in-memory flush")
    }

    pub fn summary(&self) -> String {
        let mut s = format!(
            "sweep {} over {} ({})\n",
            self.kind.as_str(),
            self.axis.as_str(),
            self.description
        );
        for r in &self.rows {
            writeln!(s, "  {:>12} error {:.6e}", r.value, r.error).unwrap();
        }
        match self.fitted_order {
            Some(p) => writeln!(s, "fitted order {p:.4}").unwrap(),
            None => writeln!(s, "fitted order n/a").unwrap(),
        }
        writeln!(
            s,
            "monotone decreasing: {}",
            if self.monotone_decreasing { "yes" } else { "no" }
        )
        .unwrap();
        s
    }
}

fn usage(msg: impl Into<String>) -> HarnessError {
    HarnessError::Usage(msg.into())
}

/// Largest deviation of `(u, T)` between two trajectories on common times.
fn trajectory_distance(a: &Trajectory, b: &Trajectory) -> f64 {
    a.points
        .iter()
        .zip(&b.points)
        .map(|(p, q)| {
            let du = p.u - q.u;
            du.x()
                .abs()
                .max(du.y().abs())
                .max(du.z().abs())
                .max((p.temperature - q.temperature).abs())
        })
        .fold(0.0, f64::max)
}

/// RMS over snapshots and replicas of the DSMC–ODE difference in `u` and `T`.
fn dsmc_vs_ode(scn: &Scenario, replicas: usize) -> Result<f64> {
    if scn.dsmc.mode != KineticMode::Homogeneous {
        return Err(usage(
            "DSMC sweeps compare against the moment ODE and need dsmc.mode = homogeneous",
        ));
    }
    let ode = simulate_odes(scn)?;
    let mut sum = 0.0;
    let mut count = 0usize;
    for r in 0..replicas {
        let mut s = scn.clone();
        s.dsmc.seed = scn.dsmc.seed.wrapping_add(r as u64);
        s.threads = 1;
        let out = simulate_dsmc(&s)?;
        for (snap, p) in out.snapshots.iter().zip(&ode.points) {
            let c = &snap.cells[0];
            let (Some(u), Some(t)) = (c.u, c.temperature) else {
                continue;
            };
            let du = u - p.u;
            for d in [du.x(), du.y(), du.z(), t - p.temperature] {
                sum += d * d;
                count += 1;
            }
        }
    }
    if count == 0 {
        return Err(usage("no defined moments to compare"));
    }
    Ok((sum / count as f64).sqrt())
}

fn density_l1(a: &[f64], b: &[f64], dx: f64) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>() * dx
}

fn final_density(scn: &Scenario) -> Result<Vec<f64>> {
    let out = simulate_euler(scn)?;
    Ok(out
        .snapshots
        .last()
        .expect("at least one snapshot")
        .cells
        .iter()
        .map(|c| c.rho)
        .collect())
}

fn with_cells(scn: &Scenario, n: usize) -> Result<Scenario> {
    let mut s = scn.clone();
    s.grid =
        Grid1D::new(n, scn.grid.x_min(), scn.grid.x_max()).map_err(|e| HarnessError::invalid("grid.n_cells", e))?;
    Ok(s)
}

fn to_count(axis: SweepAxis, v: f64) -> Result<usize> {
    if v >= 1.0 && v.fract() == 0.0 && v < 1e12 {
        Ok(v as usize)
    } else {
        Err(usage(format!(
            "{} values must be positive integers, got {v}",
            axis.as_str()
        )))
    }
}

pub fn sweep(scn: &Scenario, kind: RunKind, axis: SweepAxis, values: &[f64], replicas: usize) -> Result<SweepReport> {
    if values.len() < 3 {
        return Err(usage("a sweep needs at least three values"));
    }
    if values.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
        return Err(usage("sweep values must be positive and finite"));
    }
    if replicas == 0 {
        return Err(usage("replicas must be at least 1"));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(scn.threads)
        .build()
        .map_err(|e| usage(format!("cannot start worker pool: {e}")))?;

    let (description, errors): (&'static str, Vec<f64>) = match (axis, kind) {
        (SweepAxis::Dt, RunKind::Odes) => {
            let finest = values.iter().copied().fold(f64::INFINITY, f64::min);
            let mut r = scn.clone();
            r.ode_dt = finest / REFERENCE_FACTOR as f64;
            let reference = simulate_odes(&r)?;
            let errs = pool.install(|| {
                values
                    .par_iter()
                    .map(|&dt| {
                        let mut s = scn.clone();
                        s.ode_dt = dt;
                        Ok(trajectory_distance(&simulate_odes(&s)?, &reference))
                    })
                    .collect::<Result<Vec<f64>>>()
            })?;
            ("max |u - u_ref|, |T - T_ref| against a 16x finer step", errs)
        }
        (SweepAxis::Dt, RunKind::Dsmc) => {
            let errs = pool.install(|| {
                values
                    .par_iter()
                    .map(|&dt| {
                        let mut s = scn.clone();
                        s.dsmc.dt = dt;
                        dsmc_vs_ode(&s, replicas)
                    })
                    .collect::<Result<Vec<f64>>>()
            })?;
            ("RMS difference of u and T against the moment ODE", errs)
        }
        (SweepAxis::NParticles, RunKind::Dsmc) => {
            let errs = pool.install(|| {
                values
                    .par_iter()
                    .map(|&n| {
                        let mut s = scn.clone();
                        s.dsmc.n_particles = to_count(axis, n)?;
                        dsmc_vs_ode(&s, replicas)
                    })
                    .collect::<Result<Vec<f64>>>()
            })?;
            ("RMS difference of u and T against the moment ODE", errs)
        }
        (SweepAxis::NCells, RunKind::Euler) => {
            let counts = values
                .iter()
                .map(|&v| to_count(axis, v))
                .collect::<Result<Vec<usize>>>()?;
            let n_ref = counts.iter().copied().max().expect("non-empty") * REFERENCE_FACTOR;
            if let Some(n) = counts.iter().find(|&&n| n_ref % n != 0) {
                return Err(usage(format!(
                    "{n} cells does not divide the reference resolution {n_ref}"
                )));
            }
            let reference = final_density(&with_cells(scn, n_ref)?)?;
            let errs = pool.install(|| {
                counts
                    .par_iter()
                    .map(|&n| {
                        let s = with_cells(scn, n)?;
                        let rho = final_density(&s)?;
                        let ratio = n_ref / n;
                        let restricted: Vec<f64> = reference
                            .chunks(ratio)
                            .map(|c| c.iter().sum::<f64>() / ratio as f64)
                            .collect();
                        Ok(density_l1(&rho, &restricted, s.grid.dx()))
                    })
                    .collect::<Result<Vec<f64>>>()
            })?;
            ("density L1 against a run with 16x the largest cell count", errs)
        }
        (SweepAxis::Lambda, RunKind::Euler) => {
            if scn.euler.bc != EulerBoundary::Periodic {
                return Err(usage("the lambda sweep needs euler.bc = periodic"));
            }
            let reference = st_limit_reference(&scn.initial, &scn.grid, scn.background.u1.x(), scn.t_end);
            let errs = pool.install(|| {
                values
                    .par_iter()
                    .map(|&lambda| {
                        let mut s = scn.clone();
                        s.params = dissipa_core::ModelParams::derive(
                            scn.params.m1,
                            scn.params.m,
                            scn.params.e,
                            lambda,
                            scn.params.conventions(),
                        )
                        .map_err(|e| HarnessError::invalid("model.lambda", e))?;
                        Ok(density_l1(&final_density(&s)?, &reference, s.grid.dx()))
                    })
                    .collect::<Result<Vec<f64>>>()
            })?;
            ("density L1 against rho0(x - u1 t)", errs)
        }
        _ => {
            return Err(usage(format!(
                "axis {} is not available for {} runs (dt: odes or dsmc; n_particles: dsmc; n_cells, lambda: euler)",
                axis.as_str(),
                kind.as_str()
            )))
        }
    };

    let hs: Vec<f64> = values.iter().map(|&v| axis.resolution(v)).collect();
    let rows = values
        .iter()
        .enumerate()
        .map(|(i, &value)| SweepRow {
            value,
            error: errors[i],
            local_order: (i > 0)
                .then(|| log_log_slope(&hs[i - 1..=i], &errors[i - 1..=i]))
                .flatten(),
        })
        .collect();
    Ok(SweepReport {
        axis,
        kind,
        rows,
        fitted_order: log_log_slope(&hs, &errors),
        monotone_decreasing: errors.windows(2).all(|w| w[1] < w[0]),
        description,
    })
}

pub fn cmd_sweep(
    scn: &Scenario,
    kind: RunKind,
    axis: SweepAxis,
    values: &[f64],
    replicas: usize,
    out: &Path,
) -> Result<SweepReport> {
    let report = sweep(scn, kind, axis, values, replicas)?;
    io::write_outputs(
        out,
        &[
            (SWEEP_FILE, report.csv()),
            ("summary.txt", report.summary().into_bytes()),
            (io::META_FILE, io::meta_text(scn, kind).into_bytes()),
        ],
    )?;
    Ok(report)
}

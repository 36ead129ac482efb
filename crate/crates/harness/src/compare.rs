//! Field-by-field comparison of two run directories.

use std::fmt::Write as _;
use std::path::Path;

use dissipa_core::model::equilibrium_temperature_model;
use dissipa_core::SClosure;

use crate::config::{fmt_f64, RunKind};
use crate::error::{HarnessError, Result};
use crate::io::{self, FieldSeries, LoadedRun, FIELDS};
use crate::stats::linear_fit;

pub const COMPARE_FILE: &str = "compare.csv";
pub const SUMMARY_FILE: &str = "summary.txt";

#[derive(Debug, Clone, PartialEq)]
pub struct FieldError {
    pub t: f64,
    pub field: &'static str,
    pub l1: f64,
    pub l2: f64,
    pub linf: f64,
    /// Cells where both runs define the field.
    pub n_cells: usize,
    /// Cells where the difference exceeds 3σ (only with a stochastic run).
    pub n_flagged: usize,
    /// Largest `|a - b| / σ` over cells with a defined σ.
    pub max_sigma_ratio: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunFacts {
    pub label: String,
    pub kind: RunKind,
    /// Fitted decay rate of the cell-averaged `|u - u₁|`.
    pub fitted_kappa: Option<f64>,
    pub final_temperature: Option<f64>,
    /// `T(t_end) - T♯`.
    pub temperature_residual: Option<f64>,
    /// `|u(t_end) - u₁|`.
    pub velocity_residual: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonReport {
    pub errors: Vec<FieldError>,
    pub runs: [RunFacts; 2],
    /// `κ₁` predicted for a constant closure.
    pub predicted_kappa: Option<f64>,
    pub stochastic: bool,
}

impl ComparisonReport {
    pub fn total_flagged(&self) -> usize {
        self.errors.iter().map(|e| e.n_flagged).sum()
    }

    /// Largest `L∞` over snapshots for one field.
    pub fn max_linf(&self, field: &str) -> Option<f64> {
        self.errors
            .iter()
            .filter(|e| e.field == field)
            .map(|e| e.linf)
            .reduce(f64::max)
    }

    pub fn csv(&self) -> Vec<u8> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record([
            "t",
            "field",
            "l1",
            "l2",
            "linf",
            "n_cells",
            "n_flagged",
            "max_sigma_ratio",
        ])
        .expect("in-memory write");
        for e in &self.errors {
            w.write_record([
                io::fmt_num(e.t),
                e.field.to_string(),
                io::fmt_num(e.l1),
                io::fmt_num(e.l2),
                io::fmt_num(e.linf),
                e.n_cells.to_string(),
                e.n_flagged.to_string(),
                e.max_sigma_ratio.map(io::fmt_num).unwrap_or_default(),
            ])
            .expect("in-memory write");
        }
        w.into_inner().expect("in-memory flush")
    }

    pub fn summary(&self) -> String {
        let mut s = String::new();
        let opt = |x: Option<f64>| x.map_or("n/a".to_string(), |v| format!("{v:.6e}"));
        for field in FIELDS {
            if let Some(linf) = self.max_linf(field) {
                let l1 = self
                    .errors
                    .iter()
                    .filter(|e| e.field == field)
                    .map(|e| e.l1)
                    .fold(0.0, f64::max);
                writeln!(s, "{field:>3}: max L1 = {l1:.6e}, max Linf = {linf:.6e}").unwrap();
            }
        }
        if self.stochastic {
            writeln!(s, "cells beyond 3 sigma: {}", self.total_flagged()).unwrap();
        }
        writeln!(s, "predicted kappa1: {}", opt(self.predicted_kappa)).unwrap();
        for r in &self.runs {
            writeln!(
                s,
                "{} ({}): fitted kappa1 = {}, final T = {}, T - T_fixed = {}, |u - u1| = {}",
                r.label,
                r.kind.as_str(),
                opt(r.fitted_kappa),
                opt(r.final_temperature),
                opt(r.temperature_residual),
                opt(r.velocity_residual)
            )
            .unwrap();
        }
        s
    }
}

const CHECKED_KEYS: [&str; 2] = ["time.t_end", "time.output_interval"];
const GRID_KEYS: [&str; 3] = ["grid.n_cells", "grid.x_min", "grid.x_max"];

fn check_compatible(a: &LoadedRun, b: &LoadedRun) -> Result<()> {
    let ea = a.scenario.entries();
    let eb = b.scenario.entries();
    let value = |e: &Vec<(&'static str, String)>, k: &str| e.iter().find(|(key, _)| *key == k).map(|(_, v)| v.clone());
    let spatial = a.fields.n_cells() > 1 && b.fields.n_cells() > 1;
    let mut differing: Vec<String> = CHECKED_KEYS
        .iter()
        .chain(if spatial { GRID_KEYS.iter() } else { [].iter() })
        .filter(|k| value(&ea, k) != value(&eb, k))
        .map(|k| k.to_string())
        .collect();
    if differing.is_empty() {
        let ta: Vec<f64> = a.fields.snapshots.iter().map(|s| s.t).collect();
        let tb: Vec<f64> = b.fields.snapshots.iter().map(|s| s.t).collect();
        if ta != tb {
            differing.push("snapshot times".into());
        }
        let (na, nb) = (a.fields.n_cells(), b.fields.n_cells());
        if na != nb && na != 1 && nb != 1 {
            differing.push("cell count".into());
        }
    }
    if differing.is_empty() {
        Ok(())
    } else {
        Err(HarnessError::Incompatible(differing))
    }
}

fn run_facts(run: &LoadedRun, label: &str) -> RunFacts {
    let scn = &run.scenario;
    let u1 = scn.background.u1;
    let mean_u = |snap: &io::FieldSnapshot| -> Option<dissipa_core::Vec3> {
        let vs: Vec<dissipa_core::Vec3> = snap
            .values
            .iter()
            .filter_map(|v| Some(dissipa_core::Vec3::new(v[1]?, v[2]?, v[3]?)))
            .collect();
        (!vs.is_empty()).then(|| vs.iter().fold(dissipa_core::Vec3::ZERO, |a, b| a + *b) / vs.len() as f64)
    };
    let mean_t = |snap: &io::FieldSnapshot| -> Option<f64> {
        let ts: Vec<f64> = snap.values.iter().filter_map(|v| v[4]).collect();
        (!ts.is_empty()).then(|| ts.iter().sum::<f64>() / ts.len() as f64)
    };
    let gaps: Vec<(f64, f64)> = run
        .fields
        .snapshots
        .iter()
        .filter_map(|s| Some((s.t, (mean_u(s)? - u1).norm())))
        .collect();
    let fitted_kappa = gaps.first().and_then(|&(_, g0)| {
        let pts: Vec<&(f64, f64)> = gaps.iter().filter(|(_, g)| *g > 1e-3 * g0 && *g > 0.0).collect();
        if g0 == 0.0 || pts.len() < 3 {
            return None;
        }
        let ts: Vec<f64> = pts.iter().map(|p| p.0).collect();
        let ls: Vec<f64> = pts.iter().map(|p| p.1.ln()).collect();
        linear_fit(&ts, &ls).map(|(s, _)| -s)
    });
    let last = run.fields.snapshots.last();
    let final_temperature = last.and_then(mean_t);
    let t_fixed = equilibrium_temperature_model(&scn.params, scn.background.t1).ok();
    RunFacts {
        label: label.to_string(),
        kind: run.kind,
        fitted_kappa,
        final_temperature,
        temperature_residual: final_temperature.zip(t_fixed).map(|(t, f)| t - f),
        velocity_residual: last.and_then(mean_u).map(|u| (u - u1).norm()),
    }
}

fn sigma_at(series: Option<&FieldSeries>, snap: usize, cell: usize, field: usize) -> Option<f64> {
    let s = series?.snapshots.get(snap)?;
    let row = if s.values.len() == 1 { 0 } else { cell };
    s.values.get(row)?[field]
}

pub fn compare_runs(a: &LoadedRun, b: &LoadedRun) -> Result<ComparisonReport> {
    check_compatible(a, b)?;
    let n = a.fields.n_cells().max(b.fields.n_cells());
    let stochastic = a.sigma.is_some() || b.sigma.is_some();
    let mut errors = Vec::new();
    for (k, (sa, sb)) in a.fields.snapshots.iter().zip(&b.fields.snapshots).enumerate() {
        for (f, &name) in FIELDS.iter().enumerate() {
            let mut diffs = Vec::new();
            let mut flagged = 0;
            let mut max_ratio: Option<f64> = None;
            for cell in 0..n {
                let va = sa.values[if sa.values.len() == 1 { 0 } else { cell }][f];
                let vb = sb.values[if sb.values.len() == 1 { 0 } else { cell }][f];
                let (Some(va), Some(vb)) = (va, vb) else { continue };
                let d = (va - vb).abs();
                diffs.push(d);
                if stochastic {
                    let s2 = [
                        sigma_at(a.sigma.as_ref(), k, cell, f),
                        sigma_at(b.sigma.as_ref(), k, cell, f),
                    ]
                    .iter()
                    .flatten()
                    .map(|s| s * s)
                    .sum::<f64>();
                    if s2 > 0.0 {
                        let ratio = d / s2.sqrt();
                        max_ratio = Some(max_ratio.map_or(ratio, |m| m.max(ratio)));
                        if ratio > 3.0 {
                            flagged += 1;
                        }
                    }
                }
            }
            if diffs.is_empty() {
                continue;
            }
            let m = diffs.len() as f64;
            errors.push(FieldError {
                t: sa.t,
                field: name,
                l1: diffs.iter().sum::<f64>() / m,
                l2: (diffs.iter().map(|d| d * d).sum::<f64>() / m).sqrt(),
                linf: diffs.iter().copied().fold(0.0, f64::max),
                n_cells: diffs.len(),
                n_flagged: flagged,
                max_sigma_ratio: max_ratio,
            });
        }
    }
    let predicted_kappa = match a.scenario.closure {
        SClosure::Constant(s0) => Some(
            a.scenario
                .params
                .momentum_relaxation_rate(s0, a.scenario.background.rho1),
        ),
        _ => None,
    };
    Ok(ComparisonReport {
        errors,
        runs: [run_facts(a, "A"), run_facts(b, "B")],
        predicted_kappa,
        stochastic,
    })
}

/// Compare two run directories and write `compare.csv` and `summary.txt`.
pub fn cmd_compare(a_dir: &Path, b_dir: &Path, out: &Path) -> Result<ComparisonReport> {
    let a = io::load_run(a_dir)?;
    let b = io::load_run(b_dir)?;
    let report = compare_runs(&a, &b)?;
    let header = format!(
        "A = {}\nB = {}\nt_end = {}\n",
        a_dir.display(),
        b_dir.display(),
        fmt_f64(a.scenario.t_end)
    );
    io::write_outputs(
        out,
        &[
            (COMPARE_FILE, report.csv()),
            (SUMMARY_FILE, format!("{header}{}", report.summary()).into_bytes()),
        ],
    )?;
    Ok(report)
}

//! Run-directory files: snapshot, sigma, diagnostics and trajectory CSVs plus
//! the `meta.txt` that makes a run reproducible.
//!
//! Numbers are written as `{:.16e}` (17 significant digits, exact round
//! trip); undefined moments (empty cells) are empty fields.

use std::fs;
use std::path::{Path, PathBuf};

use dissipa_core::dsmc::{CellMoments, CellSigma, DsmcOutput, KineticMode};
use dissipa_core::euler::EulerOutput;
use dissipa_core::moments::Trajectory;
use dissipa_core::Grid1D;

use crate::config::{parse_config, RunKind, Scenario};
use crate::error::{HarnessError, Result};

pub const FIELDS_FILE: &str = "fields.csv";
pub const SIGMA_FILE: &str = "sigma.csv";
pub const DIAGNOSTICS_FILE: &str = "diagnostics.csv";
pub const TRAJECTORY_FILE: &str = "trajectory.csv";
pub const META_FILE: &str = "meta.txt";

pub const FIELD_HEADER: [&str; 9] = ["t", "cell", "x_center", "rho", "ux", "uy", "uz", "T", "S"];
pub const DSMC_FIELD_HEADER: [&str; 10] = [
    "t",
    "cell",
    "x_center",
    "rho",
    "ux",
    "uy",
    "uz",
    "T",
    "S",
    "n_particles",
];
pub const TRAJECTORY_HEADER: [&str; 6] = ["t", "ux", "uy", "uz", "T", "S"];
pub const DIAGNOSTICS_HEADER: [&str; 6] = ["t", "step", "collisions", "candidates", "mean_S", "n_particles"];

/// Field names in the order of [`Values`].
pub const FIELDS: [&str; 6] = ["rho", "ux", "uy", "uz", "T", "S"];
pub type Values = [Option<f64>; 6];

pub fn fmt_num(x: f64) -> String {
    format!("{x:.16e}")
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_num).unwrap_or_default()
}

#[derive(Debug, Clone, PartialEq)]
pub struct FieldSnapshot {
    pub t: f64,
    pub x: Vec<f64>,
    pub values: Vec<Values>,
    pub n_particles: Option<Vec<u64>>,
}

/// A time series of per-cell fields, as read back from a run directory.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct FieldSeries {
    pub snapshots: Vec<FieldSnapshot>,
}

impl FieldSeries {
    pub fn n_cells(&self) -> usize {
        self.snapshots.first().map_or(0, |s| s.values.len())
    }
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|source| HarnessError::Write {
        path: path.to_path_buf(),
        source,
    })
}

fn csv_bytes<const N: usize>(header: [&str; N], rows: impl Iterator<Item = Vec<String>>) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for row in rows {
        w.write_record(&row).expect("in-memory write");
    }
    w.into_inner().expect("in-memory flush")
}

fn cell_values(m: &CellMoments) -> Values {
    [
        Some(m.rho),
        m.u.map(|u| u.x()),
        m.u.map(|u| u.y()),
        m.u.map(|u| u.z()),
        m.temperature,
        m.s,
    ]
}

fn sigma_values(s: &CellSigma) -> Values {
    [
        s.rho,
        s.u.map(|u| u.x()),
        s.u.map(|u| u.y()),
        s.u.map(|u| u.z()),
        s.temperature,
        s.s,
    ]
}

fn centers(grid: &Grid1D, mode: KineticMode) -> Vec<f64> {
    match mode {
        KineticMode::Homogeneous => vec![0.5 * (grid.x_min() + grid.x_max())],
        KineticMode::Slab1D => grid.centers().collect(),
    }
}

fn field_row(t: f64, cell: usize, x: f64, v: &Values) -> Vec<String> {
    let mut row = vec![fmt_num(t), cell.to_string(), fmt_num(x)];
    row.extend(v.iter().map(|x| fmt_opt(*x)));
    row
}

pub fn dsmc_fields_csv(out: &DsmcOutput, grid: &Grid1D, mode: KineticMode) -> Vec<u8> {
    let xs = centers(grid, mode);
    let rows = out.snapshots.iter().flat_map(|snap| {
        snap.cells.iter().enumerate().map(|(i, m)| {
            let mut row = field_row(snap.t, i, xs[i], &cell_values(m));
            row.push(m.n_particles.to_string());
            row
        })
    });
    csv_bytes(DSMC_FIELD_HEADER, rows)
}

pub fn dsmc_sigma_csv(out: &DsmcOutput, grid: &Grid1D, mode: KineticMode) -> Vec<u8> {
    let xs = centers(grid, mode);
    let rows = out.snapshots.iter().flat_map(|snap| {
        snap.sigma
            .iter()
            .enumerate()
            .map(|(i, s)| field_row(snap.t, i, xs[i], &sigma_values(s)))
    });
    csv_bytes(FIELD_HEADER, rows)
}

pub fn dsmc_diagnostics_csv(out: &DsmcOutput) -> Vec<u8> {
    let rows = out.diagnostics.iter().map(|d| {
        vec![
            fmt_num(d.t),
            d.step.to_string(),
            d.collisions.to_string(),
            d.candidates.to_string(),
            fmt_num(d.mean_s),
            d.n_particles.to_string(),
        ]
    });
    csv_bytes(DIAGNOSTICS_HEADER, rows)
}

pub fn euler_fields_csv(out: &EulerOutput, grid: &Grid1D) -> Vec<u8> {
    let xs: Vec<f64> = grid.centers().collect();
    let rows = out.snapshots.iter().flat_map(|snap| {
        snap.cells.iter().zip(&snap.s).enumerate().map(|(i, (c, s))| {
            let v = [
                Some(c.rho),
                Some(c.u.x()),
                Some(c.u.y()),
                Some(c.u.z()),
                Some(c.temperature),
                Some(*s),
            ];
            field_row(snap.t, i, xs[i], &v)
        })
    });
    csv_bytes(FIELD_HEADER, rows)
}

pub fn trajectory_csv(traj: &Trajectory) -> Vec<u8> {
    let rows = traj.points.iter().map(|p| {
        vec![
            fmt_num(p.t),
            fmt_num(p.u.x()),
            fmt_num(p.u.y()),
            fmt_num(p.u.z()),
            fmt_num(p.temperature),
            fmt_num(p.s),
        ]
    });
    csv_bytes(TRAJECTORY_HEADER, rows)
}

pub fn meta_text(scenario: &Scenario, kind: RunKind) -> String {
    let mut s = scenario.clone();
    s.run_kind = Some(kind);
    format!(
        "# dissipa {} run metadata\n# re-run with: dissipa run-{} --config meta.txt\n{}",
        env!("CARGO_PKG_VERSION"),
        kind.as_str(),
        s.to_config_string()
    )
}

/// Meta files are config files that also record the run kind.
pub fn parse_meta(text: &str) -> Result<Scenario> {
    let s = parse_config(text)?;
    if s.run_kind.is_none() {
        return Err(HarnessError::Invalid {
            key: "run.kind".into(),
            message: "metadata does not record the run kind".into(),
        });
    }
    Ok(s)
}

pub fn write_outputs(dir: &Path, files: &[(&str, Vec<u8>)]) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|source| HarnessError::Write {
        path: dir.to_path_buf(),
        source,
    })?;
    files
        .iter()
        .map(|(name, bytes)| {
            let path = dir.join(name);
            write_file(&path, bytes)?;
            Ok(path)
        })
        .collect()
}

fn parse_num(field: &str, what: &str) -> std::result::Result<f64, String> {
    let v: f64 = field
        .parse()
        .map_err(|_| format!("{what}: `{field}` is not a number"))?;
    if v.is_nan() {
        return Err(format!("{what}: NaN"));
    }
    Ok(v)
}

fn parse_opt(field: &str, what: &str) -> std::result::Result<Option<f64>, String> {
    if field.is_empty() {
        Ok(None)
    } else {
        parse_num(field, what).map(Some)
    }
}

fn reader(bytes: &[u8]) -> csv::Reader<&[u8]> {
    csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(false)
        .from_reader(bytes)
}

fn check_header(rdr: &mut csv::Reader<&[u8]>, expected: &[&str]) -> std::result::Result<(), String> {
    let header = rdr.headers().map_err(|e| e.to_string())?;
    if header.iter().ne(expected.iter().copied()) {
        return Err(format!(
            "header `{}` does not match `{}`",
            header.iter().collect::<Vec<_>>().join(","),
            expected.join(",")
        ));
    }
    Ok(())
}

/// Parse a snapshot or sigma CSV (with or without `n_particles`).
pub fn read_field_csv(bytes: &[u8]) -> std::result::Result<FieldSeries, String> {
    let mut rdr = reader(bytes);
    let header: Vec<String> = rdr
        .headers()
        .map_err(|e| e.to_string())?
        .iter()
        .map(str::to_string)
        .collect();
    let with_particles = header.len() == DSMC_FIELD_HEADER.len();
    if with_particles {
        check_header(&mut rdr, &DSMC_FIELD_HEADER)?;
    } else {
        check_header(&mut rdr, &FIELD_HEADER)?;
    }
    let mut series = FieldSeries::default();
    for (k, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| e.to_string())?;
        let line = k + 2;
        let t = parse_num(&rec[0], &format!("line {line}, t"))?;
        let cell: usize = rec[1]
            .parse()
            .map_err(|_| format!("line {line}: cell `{}` is not an index", &rec[1]))?;
        let x = parse_num(&rec[2], &format!("line {line}, x_center"))?;
        let mut values: Values = [None; 6];
        for (j, v) in values.iter_mut().enumerate() {
            *v = parse_opt(&rec[3 + j], &format!("line {line}, {}", FIELDS[j]))?;
        }
        let n = if with_particles {
            Some(
                rec[9]
                    .parse::<u64>()
                    .map_err(|_| format!("line {line}: n_particles `{}` is not a count", &rec[9]))?,
            )
        } else {
            None
        };
        if cell == 0 {
            if let Some(prev) = series.snapshots.last() {
                if !(t > prev.t) {
                    return Err(format!("line {line}: snapshot times must increase"));
                }
            }
            series.snapshots.push(FieldSnapshot {
                t,
                x: Vec::new(),
                values: Vec::new(),
                n_particles: with_particles.then(Vec::new),
            });
        }
        let snap = match series.snapshots.last_mut() {
            Some(s) if s.values.len() == cell && s.t == t => s,
            _ => {
                return Err(format!("line {line}: expected cell {} of the current snapshot", {
                    series.snapshots.last().map_or(0, |s| s.values.len())
                }))
            }
        };
        snap.x.push(x);
        snap.values.push(values);
        if let (Some(ns), Some(n)) = (snap.n_particles.as_mut(), n) {
            ns.push(n);
        }
    }
    let n = series.n_cells();
    if series.snapshots.iter().any(|s| s.values.len() != n) {
        return Err("snapshots have different numbers of cells".into());
    }
    Ok(series)
}

/// Parse a trajectory CSV into a single-cell series with undefined density.
pub fn read_trajectory_csv(bytes: &[u8]) -> std::result::Result<FieldSeries, String> {
    let mut rdr = reader(bytes);
    check_header(&mut rdr, &TRAJECTORY_HEADER)?;
    let mut series = FieldSeries::default();
    for (k, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| e.to_string())?;
        let line = k + 2;
        let mut nums = [0.0; 6];
        for (j, v) in nums.iter_mut().enumerate() {
            *v = parse_num(&rec[j], &format!("line {line}, {}", TRAJECTORY_HEADER[j]))?;
        }
        if let Some(prev) = series.snapshots.last() {
            if !(nums[0] > prev.t) {
                return Err(format!("line {line}: times must increase"));
            }
        }
        series.snapshots.push(FieldSnapshot {
            t: nums[0],
            // no spatial extent; callers may substitute the domain centre
            x: vec![0.0],
            values: vec![[
                None,
                Some(nums[1]),
                Some(nums[2]),
                Some(nums[3]),
                Some(nums[4]),
                Some(nums[5]),
            ]],
            n_particles: None,
        });
    }
    Ok(series)
}

pub fn read_file(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|source| HarnessError::Read {
        path: path.to_path_buf(),
        source,
    })
}

/// A run directory loaded back from disk.
#[derive(Debug, Clone)]
pub struct LoadedRun {
    pub dir: PathBuf,
    pub scenario: Scenario,
    pub kind: RunKind,
    pub fields: FieldSeries,
    /// Batch-means standard errors (DSMC runs only).
    pub sigma: Option<FieldSeries>,
}

pub fn load_run(dir: &Path) -> Result<LoadedRun> {
    let meta_path = dir.join(META_FILE);
    let text = String::from_utf8(read_file(&meta_path)?).map_err(|_| HarnessError::Csv {
        path: meta_path.clone(),
        message: "not UTF-8".into(),
    })?;
    let scenario = parse_meta(&text)?;
    let kind = scenario.run_kind.expect("parse_meta checks run.kind");
    let csv_err = |path: &Path| {
        let path = path.to_path_buf();
        move |message| HarnessError::Csv { path, message }
    };
    let (fields, sigma) = match kind {
        RunKind::Odes => {
            let p = dir.join(TRAJECTORY_FILE);
            let mut series = read_trajectory_csv(&read_file(&p)?).map_err(csv_err(&p))?;
            let mid = 0.5 * (scenario.grid.x_min() + scenario.grid.x_max());
            for snap in &mut series.snapshots {
                snap.x = vec![mid];
            }
            (series, None)
        }
        RunKind::Euler => {
            let p = dir.join(FIELDS_FILE);
            (read_field_csv(&read_file(&p)?).map_err(csv_err(&p))?, None)
        }
        RunKind::Dsmc => {
            let p = dir.join(FIELDS_FILE);
            let s = dir.join(SIGMA_FILE);
            (
                read_field_csv(&read_file(&p)?).map_err(csv_err(&p))?,
                Some(read_field_csv(&read_file(&s)?).map_err(csv_err(&s))?),
            )
        }
    };
    Ok(LoadedRun {
        dir: dir.to_path_buf(),
        scenario,
        kind,
        fields,
        sigma,
    })
}

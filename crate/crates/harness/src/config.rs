//! Plain-text scenario files.
//!
//! One `key = value` per line, `#` starts a comment, keys are dotted
//! (`model.e = 0.5`). Vectors are comma separated (`background.u1 = 1, 0, 0`),
//! `inf` is accepted wherever a number is. Every key, its default and its
//! meaning is listed in [`SCHEMA`]; anything else is rejected.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use dissipa_core::dsmc::{KineticBoundary, KineticConfig, KineticMode};
use dissipa_core::euler::{EulerBoundary, EulerConfig, FluxKind, Splitting};
use dissipa_core::moments::IntegrateOptions;
use dissipa_core::{
    AlphaConvention, BackgroundState, Conventions, Grid1D, InitialCondition, ModelParams, MomentState, SClosure, Vec3,
};

use crate::error::{HarnessError, Result};

pub struct KeySpec {
    pub key: &'static str,
    /// `None` marks a required key.
    pub default: Option<&'static str>,
    pub doc: &'static str,
}

const fn k(key: &'static str, default: Option<&'static str>, doc: &'static str) -> KeySpec {
    KeySpec { key, default, doc }
}

pub const SCHEMA: &[KeySpec] = &[
    k("scenario.name", Some("unnamed"), "free-form label"),
    k("model.m1", None, "mass of a background particle (> 0)"),
    k("model.m", None, "mass of an inelastic particle (> 0)"),
    k("model.e", None, "restitution coefficient in (0, 1]"),
    k("model.lambda", None, "mean free path (> 0; inf disables collisions)"),
    k(
        "model.alpha_convention",
        Some("paper"),
        "paper: alpha = m1/(m1+m); complementary: 1 - that",
    ),
    k(
        "model.rate_constant",
        Some("4"),
        "nu = rate_constant * S * rho1 / lambda",
    ),
    k("background.rho1", Some("1"), "background density"),
    k("background.u1", Some("0, 0, 0"), "background mean velocity"),
    k("background.T1", None, "background temperature (> 0)"),
    k(
        "closure.kind",
        Some("constant"),
        "constant | sqrt_relative_temperature | expected_relative_speed | hard_sphere",
    ),
    k("closure.s0", Some("1"), "S for the constant closure"),
    k(
        "closure.mu",
        Some("1"),
        "prefactor of the sqrt_relative_temperature closure",
    ),
    k(
        "initial.kind",
        Some("uniform"),
        "uniform | gaussian_bump | sine | sod | tabulated",
    ),
    k("initial.rho", Some("1"), "density (base, mean or left state)"),
    k("initial.u", Some("0, 0, 0"), "velocity (base, mean or left state)"),
    k("initial.T", Some("1"), "temperature (base, mean or left state)"),
    k("initial.amplitude", Some("0.2"), "bump or sine amplitude"),
    k("initial.center", Some("0.5"), "bump centre"),
    k("initial.width", Some("0.1"), "bump standard deviation"),
    k(
        "initial.wavenumber",
        Some("1"),
        "number of sine periods across the domain",
    ),
    k("initial.right_rho", Some("0.125"), "sod: right density"),
    k("initial.right_u", Some("0, 0, 0"), "sod: right velocity"),
    k("initial.right_T", Some("0.8"), "sod: right temperature"),
    k("initial.interface", Some("0.5"), "sod: position of the discontinuity"),
    k(
        "initial.table",
        Some(""),
        "tabulated: densities on equal bins across the domain",
    ),
    k("grid.n_cells", Some("100"), "number of cells (>= 3)"),
    k("grid.x_min", Some("0"), "left end of the domain"),
    k("grid.x_max", Some("1"), "right end of the domain"),
    k("time.t_end", Some("1"), "final time"),
    k("time.output_interval", Some("0.1"), "spacing of snapshots"),
    k(
        "dsmc.dt",
        Some("0.01"),
        "particle time step; output times must be multiples of it",
    ),
    k("dsmc.n_particles", Some("100000"), "number of simulation particles"),
    k("dsmc.seed", Some("0"), "random seed"),
    k("dsmc.mode", Some("homogeneous"), "homogeneous | slab1d"),
    k("dsmc.bc", Some("periodic"), "periodic | outflow"),
    k(
        "dsmc.majorant",
        Some("auto"),
        "hard-sphere majorant speed, or auto to recompute each step",
    ),
    k("dsmc.max_rate_dt", Some("0.5"), "largest admissible nu * dt"),
    k("dsmc.batches", Some("16"), "sub-ensembles for batch-means error bars"),
    k("euler.cfl", Some("0.5"), "Courant number in (0, 0.9]"),
    k("euler.flux", Some("hll"), "hll | rusanov"),
    k("euler.bc", Some("periodic"), "periodic | transmissive"),
    k("euler.splitting", Some("strang"), "strang | godunov"),
    k("euler.max_dt", Some("none"), "cap on the time step, or none"),
    k("ode.dt", Some("0.001"), "largest RK4 step"),
    k("run.threads", Some("1"), "worker threads"),
    k(
        "run.kind",
        Some("none"),
        "dsmc | euler | odes; recorded in run metadata",
    ),
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunKind {
    Dsmc,
    Euler,
    Odes,
}

impl RunKind {
    pub fn as_str(self) -> &'static str {
        match self {
            RunKind::Dsmc => "dsmc",
            RunKind::Euler => "euler",
            RunKind::Odes => "odes",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DsmcSettings {
    pub dt: f64,
    pub n_particles: usize,
    pub seed: u64,
    pub mode: KineticMode,
    pub bc: KineticBoundary,
    pub majorant: Option<f64>,
    pub max_rate_dt: f64,
    pub batches: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EulerSettings {
    pub cfl: f64,
    pub flux: FluxKind,
    pub bc: EulerBoundary,
    pub splitting: Splitting,
    pub max_dt: Option<f64>,
}

/// A fully resolved and validated configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub params: ModelParams,
    pub background: BackgroundState,
    pub closure: SClosure,
    pub initial: InitialCondition,
    pub grid: Grid1D,
    pub t_end: f64,
    pub output_interval: f64,
    pub dsmc: DsmcSettings,
    pub euler: EulerSettings,
    pub ode_dt: f64,
    pub threads: usize,
    pub run_kind: Option<RunKind>,
}

impl Scenario {
    pub fn kinetic_config(&self) -> KineticConfig {
        KineticConfig {
            dt: self.dsmc.dt,
            t_end: self.t_end,
            output_interval: self.output_interval,
            n_particles: self.dsmc.n_particles,
            seed: self.dsmc.seed,
            mode: self.dsmc.mode,
            grid: self.grid,
            bc: self.dsmc.bc,
            majorant: self.dsmc.majorant,
            max_rate_dt: self.dsmc.max_rate_dt,
            batches: self.dsmc.batches,
            threads: self.threads,
        }
    }

    pub fn euler_config(&self) -> EulerConfig {
        EulerConfig {
            grid: self.grid,
            cfl: self.euler.cfl,
            flux: self.euler.flux,
            bc: self.euler.bc,
            splitting: self.euler.splitting,
            t_end: self.t_end,
            output_interval: self.output_interval,
            max_dt: self.euler.max_dt,
        }
    }

    pub fn ode_options(&self) -> IntegrateOptions {
        IntegrateOptions {
            dt: self.ode_dt,
            t_end: self.t_end,
            output_interval: self.output_interval,
        }
    }

    /// The scenario in config-file syntax, every key spelled out.
    pub fn to_config_string(&self) -> String {
        let mut out = String::new();
        for (key, value) in self.entries() {
            writeln!(out, "{key} = {value}").unwrap();
        }
        out
    }

    /// `(key, value)` pairs in schema order.
    pub fn entries(&self) -> Vec<(&'static str, String)> {
        let p = &self.params;
        let bg = &self.background;
        let mut v: BTreeMap<&'static str, String> = BTreeMap::new();
        v.insert("scenario.name", self.name.clone());
        v.insert("model.m1", fmt_f64(p.m1));
        v.insert("model.m", fmt_f64(p.m));
        v.insert("model.e", fmt_f64(p.e));
        v.insert("model.lambda", fmt_f64(p.lambda));
        v.insert(
            "model.alpha_convention",
            match p.alpha_convention {
                AlphaConvention::Paper => "paper",
                AlphaConvention::Complementary => "complementary",
            }
            .into(),
        );
        v.insert("model.rate_constant", fmt_f64(p.rate_constant));
        v.insert("background.rho1", fmt_f64(bg.rho1));
        v.insert("background.u1", fmt_vec3(bg.u1));
        v.insert("background.T1", fmt_f64(bg.t1));
        let (kind, s0, mu) = match self.closure {
            SClosure::Constant(s0) => ("constant", Some(s0), None),
            SClosure::SqrtRelativeTemperature { mu } => ("sqrt_relative_temperature", None, Some(mu)),
            SClosure::ExpectedRelativeSpeed => ("expected_relative_speed", None, None),
            SClosure::HardSphere => ("hard_sphere", None, None),
        };
        v.insert("closure.kind", kind.into());
        v.insert(
            "closure.s0",
            s0.map_or_else(|| default_of("closure.s0").into(), fmt_f64),
        );
        v.insert(
            "closure.mu",
            mu.map_or_else(|| default_of("closure.mu").into(), fmt_f64),
        );
        for key in SCHEMA.iter().filter(|s| s.key.starts_with("initial.")) {
            v.insert(key.key, key.default.unwrap_or_default().to_string());
        }
        let mut state = |s: &MomentState| {
            v.insert("initial.rho", fmt_f64(s.rho));
            v.insert("initial.u", fmt_vec3(s.u));
            v.insert("initial.T", fmt_f64(s.temperature));
        };
        let kind = match &self.initial {
            InitialCondition::Uniform(s) => {
                state(s);
                "uniform"
            }
            InitialCondition::GaussianBump {
                base,
                amplitude,
                center,
                width,
            } => {
                state(base);
                v.insert("initial.amplitude", fmt_f64(*amplitude));
                v.insert("initial.center", fmt_f64(*center));
                v.insert("initial.width", fmt_f64(*width));
                "gaussian_bump"
            }
            InitialCondition::Sine {
                mean,
                amplitude,
                wavenumber,
            } => {
                state(mean);
                v.insert("initial.amplitude", fmt_f64(*amplitude));
                v.insert("initial.wavenumber", wavenumber.to_string());
                "sine"
            }
            InitialCondition::Sod { left, right, interface } => {
                state(left);
                v.insert("initial.right_rho", fmt_f64(right.rho));
                v.insert("initial.right_u", fmt_vec3(right.u));
                v.insert("initial.right_T", fmt_f64(right.temperature));
                v.insert("initial.interface", fmt_f64(*interface));
                "sod"
            }
            InitialCondition::Tabulated { rho, u, temperature } => {
                v.insert("initial.u", fmt_vec3(*u));
                v.insert("initial.T", fmt_f64(*temperature));
                v.insert(
                    "initial.table",
                    rho.iter().map(|r| fmt_f64(*r)).collect::<Vec<_>>().join(", "),
                );
                "tabulated"
            }
        };
        v.insert("initial.kind", kind.into());
        v.insert("grid.n_cells", self.grid.n_cells().to_string());
        v.insert("grid.x_min", fmt_f64(self.grid.x_min()));
        v.insert("grid.x_max", fmt_f64(self.grid.x_max()));
        v.insert("time.t_end", fmt_f64(self.t_end));
        v.insert("time.output_interval", fmt_f64(self.output_interval));
        let d = &self.dsmc;
        v.insert("dsmc.dt", fmt_f64(d.dt));
        v.insert("dsmc.n_particles", d.n_particles.to_string());
        v.insert("dsmc.seed", d.seed.to_string());
        v.insert(
            "dsmc.mode",
            match d.mode {
                KineticMode::Homogeneous => "homogeneous",
                KineticMode::Slab1D => "slab1d",
            }
            .into(),
        );
        v.insert(
            "dsmc.bc",
            match d.bc {
                KineticBoundary::Periodic => "periodic",
                KineticBoundary::Outflow => "outflow",
            }
            .into(),
        );
        v.insert("dsmc.majorant", d.majorant.map_or_else(|| "auto".into(), fmt_f64));
        v.insert("dsmc.max_rate_dt", fmt_f64(d.max_rate_dt));
        v.insert("dsmc.batches", d.batches.to_string());
        let e = &self.euler;
        v.insert("euler.cfl", fmt_f64(e.cfl));
        v.insert(
            "euler.flux",
            match e.flux {
                FluxKind::Hll => "hll",
                FluxKind::Rusanov => "rusanov",
            }
            .into(),
        );
        v.insert(
            "euler.bc",
            match e.bc {
                EulerBoundary::Periodic => "periodic",
                EulerBoundary::Transmissive => "transmissive",
            }
            .into(),
        );
        v.insert(
            "euler.splitting",
            match e.splitting {
                Splitting::Strang => "strang",
                Splitting::GodunovFirstOrder => "godunov",
            }
            .into(),
        );
        v.insert("euler.max_dt", e.max_dt.map_or_else(|| "none".into(), fmt_f64));
        v.insert("ode.dt", fmt_f64(self.ode_dt));
        v.insert("run.threads", self.threads.to_string());
        v.insert("run.kind", self.run_kind.map_or("none", RunKind::as_str).into());
        SCHEMA
            .iter()
            .map(|s| (s.key, v.remove(s.key).expect("every schema key is printed")))
            .collect()
    }
}

fn default_of(key: &str) -> &'static str {
    SCHEMA
        .iter()
        .find(|s| s.key == key)
        .and_then(|s| s.default)
        .expect("key with a default")
}

/// Shortest representation that parses back to the same value.
pub fn fmt_f64(x: f64) -> String {
    if x == f64::INFINITY {
        "inf".into()
    } else if x == f64::NEG_INFINITY {
        "-inf".into()
    } else {
        format!("{x:?}")
    }
}

fn fmt_vec3(v: Vec3) -> String {
    format!("{}, {}, {}", fmt_f64(v.x()), fmt_f64(v.y()), fmt_f64(v.z()))
}

pub fn schema_text() -> String {
    let mut out = String::from("# key = default    # meaning\n");
    for s in SCHEMA {
        let default = match s.default {
            None => "<required>",
            Some("") => "<empty>",
            Some(d) => d,
        };
        writeln!(out, "{} = {}    # {}", s.key, default, s.doc).unwrap();
    }
    out
}

/// Raw `key → (value, line)` map after syntax checks.
pub fn parse_entries(text: &str) -> Result<BTreeMap<String, (String, usize)>> {
    let mut map = BTreeMap::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (key, value) = content.split_once('=').ok_or_else(|| HarnessError::Parse {
            line,
            message: format!("expected `key = value`, got `{content}`"),
        })?;
        let key = key.trim();
        if key.is_empty() {
            return Err(HarnessError::Parse {
                line,
                message: "empty key".into(),
            });
        }
        if !SCHEMA.iter().any(|s| s.key == key) {
            return Err(HarnessError::Parse {
                line,
                message: format!("unknown key `{key}`"),
            });
        }
        if let Some((_, first)) = map.insert(key.to_string(), (value.trim().to_string(), line)) {
            return Err(HarnessError::Parse {
                line,
                message: format!("duplicate key `{key}` (first set on line {first})"),
            });
        }
    }
    Ok(map)
}

struct Resolver {
    map: BTreeMap<String, (String, usize)>,
}

impl Resolver {
    fn raw(&self, key: &str) -> Result<(&str, usize)> {
        if let Some((v, line)) = self.map.get(key) {
            return Ok((v.as_str(), *line));
        }
        let spec = SCHEMA.iter().find(|s| s.key == key).expect("schema key");
        match spec.default {
            Some(d) => Ok((d, 0)),
            None => Err(HarnessError::Missing(key.to_string())),
        }
    }

    fn bad(&self, key: &str, line: usize, message: String) -> HarnessError {
        if line > 0 {
            HarnessError::Parse {
                line,
                message: format!("{key}: {message}"),
            }
        } else {
            HarnessError::Invalid {
                key: key.into(),
                message,
            }
        }
    }

    fn string(&self, key: &str) -> Result<String> {
        Ok(self.raw(key)?.0.to_string())
    }

    fn f64(&self, key: &str) -> Result<f64> {
        let (v, line) = self.raw(key)?;
        parse_f64(v).ok_or_else(|| self.bad(key, line, format!("expected a number, got `{v}`")))
    }

    fn opt_f64(&self, key: &str, none: &str) -> Result<Option<f64>> {
        let (v, _) = self.raw(key)?;
        if v == none {
            Ok(None)
        } else {
            self.f64(key).map(Some)
        }
    }

    fn int<T: std::str::FromStr>(&self, key: &str) -> Result<T> {
        let (v, line) = self.raw(key)?;
        v.parse()
            .map_err(|_| self.bad(key, line, format!("expected a non-negative integer, got `{v}`")))
    }

    fn list(&self, key: &str) -> Result<Vec<f64>> {
        let (v, line) = self.raw(key)?;
        if v.is_empty() {
            return Ok(Vec::new());
        }
        v.split(',')
            .map(|s| {
                parse_f64(s.trim()).ok_or_else(|| self.bad(key, line, format!("expected a number, got `{}`", s.trim())))
            })
            .collect()
    }

    fn vec3(&self, key: &str) -> Result<Vec3> {
        let (v, line) = self.raw(key)?;
        let xs = self.list(key)?;
        if xs.len() != 3 {
            return Err(self.bad(key, line, format!("expected three comma-separated numbers, got `{v}`")));
        }
        Ok(Vec3::new(xs[0], xs[1], xs[2]))
    }

    fn choice<T: Copy>(&self, key: &str, options: &[(&str, T)]) -> Result<T> {
        let (v, line) = self.raw(key)?;
        options
            .iter()
            .find(|(name, _)| *name == v)
            .map(|(_, t)| *t)
            .ok_or_else(|| {
                let names: Vec<&str> = options.iter().map(|(n, _)| *n).collect();
                self.bad(key, line, format!("expected one of {}, got `{v}`", names.join(" | ")))
            })
    }
}

/// Finite numbers plus `inf`; NaN is rejected.
fn parse_f64(s: &str) -> Option<f64> {
    let lower = s.to_ascii_lowercase();
    if lower.contains("nan") {
        return None;
    }
    lower.parse::<f64>().ok()
}

fn check(key: &str, ok: bool, message: &str) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(HarnessError::Invalid {
            key: key.into(),
            message: message.into(),
        })
    }
}

pub fn parse_config(text: &str) -> Result<Scenario> {
    let r = Resolver {
        map: parse_entries(text)?,
    };
    let conventions = Conventions {
        alpha: r.choice(
            "model.alpha_convention",
            &[
                ("paper", AlphaConvention::Paper),
                ("complementary", AlphaConvention::Complementary),
            ],
        )?,
        rate_constant: r.f64("model.rate_constant")?,
    };
    let (m1, m, e, lambda) = (
        r.f64("model.m1")?,
        r.f64("model.m")?,
        r.f64("model.e")?,
        r.f64("model.lambda")?,
    );
    let params = ModelParams::derive(m1, m, e, lambda, conventions).map_err(|err| {
        let key = match &err {
            dissipa_core::Error::InvalidParameter { field, .. } => match *field {
                "rate_constant" => "model.rate_constant".to_string(),
                f => format!("model.{f}"),
            },
            _ => "model".to_string(),
        };
        HarnessError::invalid(&key, err)
    })?;

    let background = BackgroundState::new(
        r.f64("background.rho1")?,
        r.vec3("background.u1")?,
        r.f64("background.T1")?,
    )
    .map_err(|err| {
        let key = match &err {
            dissipa_core::Error::InvalidParameter { field: "rho1", .. } => "background.rho1",
            _ => "background.T1",
        };
        HarnessError::invalid(key, err)
    })?;

    let closure = match r.choice(
        "closure.kind",
        &[
            ("constant", 0),
            ("sqrt_relative_temperature", 1),
            ("expected_relative_speed", 2),
            ("hard_sphere", 3),
        ],
    )? {
        0 => SClosure::Constant(r.f64("closure.s0")?),
        1 => SClosure::SqrtRelativeTemperature {
            mu: r.f64("closure.mu")?,
        },
        2 => SClosure::ExpectedRelativeSpeed,
        _ => SClosure::HardSphere,
    };
    closure.validate().map_err(|err| {
        let key = if matches!(closure, SClosure::Constant(_)) {
            "closure.s0"
        } else {
            "closure.mu"
        };
        HarnessError::invalid(key, err)
    })?;

    let grid = Grid1D::new(r.int("grid.n_cells")?, r.f64("grid.x_min")?, r.f64("grid.x_max")?).map_err(|err| {
        let key = match &err {
            dissipa_core::Error::InvalidParameter { field: "n_cells", .. } => "grid.n_cells",
            _ => "grid.x_max",
        };
        HarnessError::invalid(key, err)
    })?;

    let state = |rho: &str, u: &str, t: &str| -> Result<MomentState> {
        let (rho_v, u_v, t_v) = (r.f64(rho)?, r.vec3(u)?, r.f64(t)?);
        check(rho, rho_v.is_finite(), "density must be finite")?;
        check(t, t_v.is_finite(), "temperature must be finite")?;
        check(u, u_v.is_finite(), "velocity must be finite")?;
        MomentState::new(rho_v, u_v, t_v).map_err(|err| {
            let key = match &err {
                dissipa_core::Error::InvalidParameter { field: "rho", .. } => rho,
                _ => t,
            };
            HarnessError::invalid(key, err)
        })
    };
    let base = || state("initial.rho", "initial.u", "initial.T");
    let initial = match r.choice(
        "initial.kind",
        &[
            ("uniform", 0),
            ("gaussian_bump", 1),
            ("sine", 2),
            ("sod", 3),
            ("tabulated", 4),
        ],
    )? {
        0 => InitialCondition::Uniform(base()?),
        1 => InitialCondition::GaussianBump {
            base: base()?,
            amplitude: r.f64("initial.amplitude")?,
            center: r.f64("initial.center")?,
            width: r.f64("initial.width")?,
        },
        2 => InitialCondition::Sine {
            mean: base()?,
            amplitude: r.f64("initial.amplitude")?,
            wavenumber: r.int("initial.wavenumber")?,
        },
        3 => InitialCondition::Sod {
            left: base()?,
            right: state("initial.right_rho", "initial.right_u", "initial.right_T")?,
            interface: r.f64("initial.interface")?,
        },
        _ => {
            let t = r.f64("initial.T")?;
            let u = r.vec3("initial.u")?;
            check(
                "initial.T",
                t.is_finite() && t >= 0.0,
                "temperature must be finite and non-negative",
            )?;
            check("initial.u", u.is_finite(), "velocity must be finite")?;
            InitialCondition::Tabulated {
                rho: r.list("initial.table")?,
                u,
                temperature: t,
            }
        }
    };
    if let InitialCondition::Uniform(s) = &initial {
        check("initial.rho", s.rho > 0.0, "initial density must be positive")?;
    }
    initial.validate(&grid).map_err(|err| {
        let key = match &err {
            dissipa_core::Error::InvalidParameter { field, .. } => format!("initial.{field}"),
            _ => "initial".into(),
        };
        HarnessError::invalid(&key, err)
    })?;

    let t_end = r.f64("time.t_end")?;
    check(
        "time.t_end",
        t_end.is_finite() && t_end >= 0.0,
        "t_end must be finite and non-negative",
    )?;
    let output_interval = r.f64("time.output_interval")?;
    check(
        "time.output_interval",
        output_interval.is_finite() && output_interval > 0.0,
        "output interval must be positive",
    )?;
    // guards against absurd snapshot counts from a typo
    check(
        "time.output_interval",
        t_end / output_interval <= 1e7,
        "more than 10^7 snapshots requested",
    )?;

    let dsmc = DsmcSettings {
        dt: r.f64("dsmc.dt")?,
        n_particles: r.int("dsmc.n_particles")?,
        seed: r.int("dsmc.seed")?,
        mode: r.choice(
            "dsmc.mode",
            &[
                ("homogeneous", KineticMode::Homogeneous),
                ("slab1d", KineticMode::Slab1D),
            ],
        )?,
        bc: r.choice(
            "dsmc.bc",
            &[
                ("periodic", KineticBoundary::Periodic),
                ("outflow", KineticBoundary::Outflow),
            ],
        )?,
        majorant: r.opt_f64("dsmc.majorant", "auto")?,
        max_rate_dt: r.f64("dsmc.max_rate_dt")?,
        batches: r.int("dsmc.batches")?,
    };
    check("dsmc.dt", dsmc.dt.is_finite() && dsmc.dt > 0.0, "dt must be positive")?;
    check(
        "dsmc.n_particles",
        dsmc.n_particles > 0,
        "n_particles must be at least 1",
    )?;
    check(
        "dsmc.majorant",
        dsmc.majorant.is_none_or(|m| m.is_finite() && m > 0.0),
        "majorant must be positive",
    )?;
    check(
        "dsmc.max_rate_dt",
        dsmc.max_rate_dt > 0.0,
        "max_rate_dt must be positive",
    )?;
    check(
        "dsmc.batches",
        dsmc.batches >= 2,
        "at least 2 batches are needed for error bars",
    )?;

    let euler = EulerSettings {
        cfl: r.f64("euler.cfl")?,
        flux: r.choice("euler.flux", &[("hll", FluxKind::Hll), ("rusanov", FluxKind::Rusanov)])?,
        bc: r.choice(
            "euler.bc",
            &[
                ("periodic", EulerBoundary::Periodic),
                ("transmissive", EulerBoundary::Transmissive),
            ],
        )?,
        splitting: r.choice(
            "euler.splitting",
            &[("strang", Splitting::Strang), ("godunov", Splitting::GodunovFirstOrder)],
        )?,
        max_dt: r.opt_f64("euler.max_dt", "none")?,
    };
    check(
        "euler.cfl",
        euler.cfl > 0.0 && euler.cfl <= 0.9,
        "cfl must lie in (0, 0.9]",
    )?;
    check(
        "euler.max_dt",
        euler.max_dt.is_none_or(|m| m.is_finite() && m > 0.0),
        "max_dt must be positive",
    )?;

    let ode_dt = r.f64("ode.dt")?;
    check("ode.dt", ode_dt.is_finite() && ode_dt > 0.0, "dt must be positive")?;
    let threads: usize = r.int("run.threads")?;
    check("run.threads", threads >= 1, "threads must be at least 1")?;
    let run_kind = r.choice(
        "run.kind",
        &[
            ("none", None),
            ("dsmc", Some(RunKind::Dsmc)),
            ("euler", Some(RunKind::Euler)),
            ("odes", Some(RunKind::Odes)),
        ],
    )?;

    Ok(Scenario {
        name: r.string("scenario.name")?,
        params,
        background,
        closure,
        initial,
        grid,
        t_end,
        output_interval,
        dsmc,
        euler,
        ode_dt,
        threads,
        run_kind,
    })
}

pub fn load_config(path: &Path) -> Result<Scenario> {
    let text = std::fs::read_to_string(path).map_err(|source| HarnessError::Read {
        path: path.to_path_buf(),
        source,
    })?;
    parse_config(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "model.m1 = 3\nmodel.m = 1\nmodel.e = 0.5\nmodel.lambda = 1\nbackground.T1 = 1\n";

    #[test]
    fn minimal_file_gets_defaults() {
        let s = parse_config(MINIMAL).unwrap();
        assert_eq!(s.params.effective_coefficient(), 0.5625);
        assert_eq!(s.closure, SClosure::Constant(1.0));
        assert_eq!(s.grid.n_cells(), 100);
        assert_eq!(s.dsmc.batches, 16);
        assert_eq!(s.background.u1, Vec3::ZERO);
        assert_eq!(s.run_kind, None);
    }

    #[test]
    fn validation_messages_name_the_key() {
        let err = parse_config(&MINIMAL.replace("model.e = 0.5", "model.e = 1.5")).unwrap_err();
        assert_eq!(err.to_string(), "invalid model.e: e must lie in (0,1]");
        assert_eq!(err.exit_code(), 1);
        let err = parse_config("model.m1 = 3\n").unwrap_err();
        assert!(matches!(err, HarnessError::Missing(k) if k == "model.m"));
    }

    #[test]
    fn syntax_errors_carry_line_numbers() {
        let err = parse_config(&format!("{MINIMAL}\nmodel.bogus = 1\n")).unwrap_err();
        assert_eq!(err.to_string(), "line 7: unknown key `model.bogus`");
        let err = parse_config(&format!("{MINIMAL}model.e = 0.7\n")).unwrap_err();
        assert!(
            err.to_string()
                .contains("duplicate key `model.e` (first set on line 3)"),
            "{err}"
        );
        let err = parse_config(&format!("# header\n{}", MINIMAL.replace("= 3", "= three"))).unwrap_err();
        assert_eq!(err.to_string(), "line 2: model.m1: expected a number, got `three`");
        let err = parse_config("just words\n").unwrap_err();
        assert!(matches!(err, HarnessError::Parse { line: 1, .. }));
        let err = parse_config(&format!("{MINIMAL}dsmc.mode = sideways\n")).unwrap_err();
        assert!(err.to_string().contains("homogeneous | slab1d"));
    }

    #[test]
    fn infinite_lambda_and_nan_rejection() {
        let s = parse_config(&MINIMAL.replace("model.lambda = 1", "model.lambda = inf")).unwrap();
        assert!(s.params.lambda.is_infinite());
        assert!(parse_config(&MINIMAL.replace("model.lambda = 1", "model.lambda = NaN")).is_err());
    }

    #[test]
    fn every_variant_round_trips() {
        let extras = [
            "",
            "closure.kind = sqrt_relative_temperature\nclosure.mu = 0.3\ninitial.kind = sine\ninitial.amplitude = 0.25\ninitial.wavenumber = 3",
            "closure.kind = expected_relative_speed\ninitial.kind = gaussian_bump\ninitial.width = 0.05\ndsmc.mode = slab1d\ndsmc.bc = outflow",
            "closure.kind = hard_sphere\ndsmc.majorant = 12.5\ninitial.kind = sod\neuler.bc = transmissive\neuler.flux = rusanov",
            "initial.kind = tabulated\ninitial.table = 1, 2, 0.5\neuler.max_dt = 0.001\neuler.splitting = godunov\nrun.kind = dsmc\nmodel.alpha_convention = complementary",
            "background.u1 = 0.1, -0.2, 1e-30\ntime.output_interval = 0.3333333333333333",
        ];
        for (i, extra) in extras.iter().enumerate() {
            let base = if i == 0 {
                MINIMAL.replace("model.lambda = 1", "model.lambda = inf")
            } else {
                MINIMAL.to_string()
            };
            let s = parse_config(&format!("{base}{extra}\n")).unwrap();
            let printed = s.to_config_string();
            let again = parse_config(&printed).unwrap();
            assert_eq!(s, again, "{printed}");
            assert_eq!(printed, again.to_config_string());
        }
    }

    #[test]
    fn schema_lists_every_key_once() {
        let mut keys: Vec<&str> = SCHEMA.iter().map(|s| s.key).collect();
        keys.sort();
        keys.dedup();
        assert_eq!(keys.len(), SCHEMA.len());
        let text = schema_text();
        assert!(text.contains("model.e = <required>"));
        assert!(text.contains("dsmc.batches = 16"));
    }
}

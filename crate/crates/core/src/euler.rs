//! One-dimensional dissipative Euler system with relaxation sources.
//!
//! ```text
//! ∂ρ/∂t  + ∂(ρ u_x)/∂x                 = 0
//! ∂(ρu)/∂t + ∂(ρ u_x u + ρT e_x)/∂x    = -κ₁ ρ (u - u₁)
//! ∂E/∂t  + ∂(u_x (E + ρT))/∂x          = ρ (2/3) ν D̃
//! ```
//!
//! with `E = ρ(|u|²/2 + 3T/2)`, i.e. an ideal monatomic gas (`γ = 5/3`).
//! Transport is a first-order Godunov scheme; sources are applied per cell
//! by operator splitting.

use crate::error::{Error, Result};
use crate::grid::Grid1D;
use crate::initial::InitialCondition;
use crate::model::{BackgroundState, ModelParams, MomentState, SClosure};
use crate::moments::{closure_rate, output_times, temperature_rhs, OdeState};
use crate::vec3::Vec3;

pub const GAMMA: f64 = 5.0 / 3.0;

/// Sub-samples per cell used to form initial cell averages.
const INIT_SUBSAMPLES: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ConservedState {
    pub rho: f64,
    pub mom: Vec3,
    pub energy: f64,
}

impl std::ops::Add for ConservedState {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self {
            rho: self.rho + o.rho,
            mom: self.mom + o.mom,
            energy: self.energy + o.energy,
        }
    }
}

impl std::ops::Sub for ConservedState {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self {
            rho: self.rho - o.rho,
            mom: self.mom - o.mom,
            energy: self.energy - o.energy,
        }
    }
}

impl std::ops::Mul<f64> for ConservedState {
    type Output = Self;
    fn mul(self, k: f64) -> Self {
        Self {
            rho: self.rho * k,
            mom: self.mom * k,
            energy: self.energy * k,
        }
    }
}

impl ConservedState {
    pub fn from_primitive(s: &MomentState) -> Self {
        Self {
            rho: s.rho,
            mom: s.u * s.rho,
            energy: s.rho * (0.5 * s.u.norm2() + 1.5 * s.temperature),
        }
    }

    /// Primitive variables; `cell` only labels the error.
    pub fn to_primitive(&self, cell: usize) -> Result<MomentState> {
        if !(self.rho > 0.0) || !self.rho.is_finite() {
            return Err(Error::Positivity {
                cell,
                reason: format!("density {} is not positive", self.rho),
            });
        }
        let u = self.mom / self.rho;
        let internal = self.energy / self.rho - 0.5 * u.norm2();
        if !(internal >= 0.0) || !internal.is_finite() {
            return Err(Error::Positivity {
                cell,
                reason: format!("internal energy {internal} is negative"),
            });
        }
        Ok(MomentState {
            rho: self.rho,
            u,
            temperature: 2.0 / 3.0 * internal,
        })
    }

    fn pressure(&self) -> f64 {
        let u = self.mom / self.rho;
        (GAMMA - 1.0) * (self.energy - 0.5 * self.rho * u.norm2())
    }
}

pub fn sound_speed(temperature: f64) -> f64 {
    (GAMMA * temperature.max(0.0)).sqrt()
}

/// Flux in the x direction.
pub fn physical_flux(q: &ConservedState) -> ConservedState {
    let ux = q.mom.x() / q.rho;
    let p = q.pressure();
    ConservedState {
        rho: q.mom.x(),
        mom: q.mom * ux + Vec3::new(p, 0.0, 0.0),
        energy: ux * (q.energy + p),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FluxKind {
    Rusanov,
    #[default]
    Hll,
}

fn wave_speeds(q: &ConservedState) -> (f64, f64) {
    let ux = q.mom.x() / q.rho;
    let c = (GAMMA * q.pressure().max(0.0) / q.rho).sqrt();
    (ux, c)
}

pub fn numerical_flux(l: &ConservedState, r: &ConservedState, kind: FluxKind) -> ConservedState {
    let fl = physical_flux(l);
    let fr = physical_flux(r);
    let (ul, cl) = wave_speeds(l);
    let (ur, cr) = wave_speeds(r);
    match kind {
        FluxKind::Rusanov => {
            let s = (ul.abs() + cl).max(ur.abs() + cr);
            (fl + fr) * 0.5 - (*r - *l) * (0.5 * s)
        }
        FluxKind::Hll => {
            // Davis estimates
            let sl = (ul - cl).min(ur - cr);
            let sr = (ul + cl).max(ur + cr);
            if sl >= 0.0 {
                fl
            } else if sr <= 0.0 {
                fr
            } else {
                (fl * sr - fr * sl + (*r - *l) * (sl * sr)) * (1.0 / (sr - sl))
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EulerBoundary {
    #[default]
    Periodic,
    /// Zero-gradient ghost cells.
    Transmissive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Splitting {
    /// Half source, transport, half source.
    #[default]
    Strang,
    /// Transport, then full source.
    GodunovFirstOrder,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EulerConfig {
    pub grid: Grid1D,
    pub cfl: f64,
    pub flux: FluxKind,
    pub bc: EulerBoundary,
    pub splitting: Splitting,
    pub t_end: f64,
    pub output_interval: f64,
    /// Optional cap on the time step (on top of the CFL limit).
    pub max_dt: Option<f64>,
}

impl EulerConfig {
    pub fn new(grid: Grid1D, t_end: f64, output_interval: f64) -> Self {
        Self {
            grid,
            cfl: 0.5,
            flux: FluxKind::default(),
            bc: EulerBoundary::default(),
            splitting: Splitting::default(),
            t_end,
            output_interval,
            max_dt: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.cfl > 0.0 && self.cfl <= 0.9) {
            return Err(Error::invalid("cfl", "cfl must lie in (0, 0.9]"));
        }
        if !(self.t_end.is_finite() && self.t_end >= 0.0) {
            return Err(Error::invalid("t_end", "t_end must be non-negative"));
        }
        if !(self.output_interval.is_finite() && self.output_interval > 0.0) {
            return Err(Error::invalid("output_interval", "output interval must be positive"));
        }
        if let Some(m) = self.max_dt {
            if !(m.is_finite() && m > 0.0) {
                return Err(Error::invalid("max_dt", "max_dt must be positive"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EulerState {
    pub cells: Vec<ConservedState>,
    pub t: f64,
}

impl EulerState {
    /// Cell averages of the conserved variables.
    pub fn from_initial(ic: &InitialCondition, grid: &Grid1D) -> Result<Self> {
        ic.validate(grid)?;
        let h = grid.dx() / INIT_SUBSAMPLES as f64;
        let cells = (0..grid.n_cells())
            .map(|i| {
                let x0 = grid.x_min() + i as f64 * grid.dx();
                (0..INIT_SUBSAMPLES)
                    .map(|k| ConservedState::from_primitive(&ic.state_at(x0 + (k as f64 + 0.5) * h, grid)))
                    .fold(ConservedState::default(), |a, q| a + q)
                    * (1.0 / INIT_SUBSAMPLES as f64)
            })
            .collect();
        Ok(Self { cells, t: 0.0 })
    }

    pub fn uniform(state: &MomentState, n_cells: usize) -> Self {
        Self {
            cells: vec![ConservedState::from_primitive(state); n_cells],
            t: 0.0,
        }
    }

    pub fn primitives(&self) -> Result<Vec<MomentState>> {
        self.cells.iter().enumerate().map(|(i, q)| q.to_primitive(i)).collect()
    }

    /// `∑ q_i Δx`.
    pub fn totals(&self, grid: &Grid1D) -> ConservedState {
        self.cells.iter().fold(ConservedState::default(), |a, q| a + *q) * grid.dx()
    }
}

/// Largest stable step `cfl · Δx / max(|u_x| + c)`; infinite for a state at
/// rest with zero temperature.
pub fn stable_dt(state: &EulerState, config: &EulerConfig) -> Result<f64> {
    let mut smax: f64 = 0.0;
    for (i, q) in state.cells.iter().enumerate() {
        let p = q.to_primitive(i)?;
        smax = smax.max(p.u.x().abs() + sound_speed(p.temperature));
    }
    Ok(if smax > 0.0 {
        config.cfl * config.grid.dx() / smax
    } else {
        f64::INFINITY
    })
}

/// Godunov update `q_i -= dt/Δx (F_{i+1/2} - F_{i-1/2})`.
pub fn transport_update(state: &mut EulerState, config: &EulerConfig, dt: f64) -> Result<()> {
    let n = state.cells.len();
    for (i, q) in state.cells.iter().enumerate() {
        q.to_primitive(i)?;
    }
    let ghost = |i: isize| -> ConservedState {
        let j = match config.bc {
            EulerBoundary::Periodic => i.rem_euclid(n as isize) as usize,
            EulerBoundary::Transmissive => i.clamp(0, n as isize - 1) as usize,
        };
        state.cells[j]
    };
    // flux through the left face of cell i, i = 0..=n
    let fluxes: Vec<ConservedState> = (0..=n as isize)
        .map(|i| numerical_flux(&ghost(i - 1), &ghost(i), config.flux))
        .collect();
    let k = dt / config.grid.dx();
    for (i, q) in state.cells.iter_mut().enumerate() {
        *q = *q - (fluxes[i + 1] - fluxes[i]) * k;
    }
    for (i, q) in state.cells.iter().enumerate() {
        q.to_primitive(i)?;
    }
    Ok(())
}

/// Number of RK4 substeps for the temperature source.
fn temperature_substeps(kappa_dt: f64) -> usize {
    if kappa_dt <= 0.5 {
        1
    } else {
        ((kappa_dt / 0.125).ceil() as usize).max(4)
    }
}

/// Advance one cell's `(u, T)` by the moment equations over `dt` with `S`
/// frozen: `u` exactly, `T` by RK4 with the exact `u(t)` inserted.
pub fn source_update_cell(
    q: &ConservedState,
    cell: usize,
    params: &ModelParams,
    bg: &BackgroundState,
    closure: &SClosure,
    dt: f64,
) -> Result<ConservedState> {
    let prim = q.to_primitive(cell)?;
    let s = closure_rate(closure, prim.u, prim.temperature, bg)?;
    let kappa = params.momentum_relaxation_rate(s, bg.rho1);
    if kappa == 0.0 {
        return Ok(*q);
    }
    let gap0 = prim.u - bg.u1;
    let u_at = |tau: f64| bg.u1 + gap0 * (-kappa * tau).exp();
    let f = |tau: f64, temp: f64| {
        let st = OdeState {
            u: u_at(tau),
            temperature: temp,
            t: tau,
        };
        temperature_rhs(&st, params, bg, s)
    };
    let n = temperature_substeps(kappa * dt);
    let h = dt / n as f64;
    let mut temp = prim.temperature;
    for i in 0..n {
        let tau = i as f64 * h;
        let k1 = f(tau, temp);
        let k2 = f(tau + 0.5 * h, temp + 0.5 * h * k1);
        let k3 = f(tau + 0.5 * h, temp + 0.5 * h * k2);
        let k4 = f(tau + h, temp + h * k3);
        temp += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    if temp < 0.0 {
        return Err(Error::Positivity {
            cell,
            reason: format!("source update produced temperature {temp}"),
        });
    }
    Ok(ConservedState::from_primitive(&MomentState {
        rho: prim.rho,
        u: u_at(dt),
        temperature: temp,
    }))
}

pub fn source_update(
    state: &mut EulerState,
    params: &ModelParams,
    bg: &BackgroundState,
    closure: &SClosure,
    dt: f64,
) -> Result<()> {
    for (i, q) in state.cells.iter_mut().enumerate() {
        *q = source_update_cell(q, i, params, bg, closure, dt)?;
    }
    Ok(())
}

/// One split step of length `dt`.
pub fn step(
    state: &mut EulerState,
    config: &EulerConfig,
    params: &ModelParams,
    bg: &BackgroundState,
    closure: &SClosure,
    dt: f64,
) -> Result<()> {
    match config.splitting {
        Splitting::Strang => {
            source_update(state, params, bg, closure, 0.5 * dt)?;
            transport_update(state, config, dt)?;
            source_update(state, params, bg, closure, 0.5 * dt)?;
        }
        Splitting::GodunovFirstOrder => {
            transport_update(state, config, dt)?;
            source_update(state, params, bg, closure, dt)?;
        }
    }
    state.t += dt;
    Ok(())
}

/// Cell averages of `ρ₀(x - u₁ₓ t)` on a periodic domain: the solution of
/// `∂ρ/∂t + ∂(ρ u₁ₓ)/∂x = 0`, which the system approaches as `λ → 0`.
pub fn st_limit_reference(ic: &InitialCondition, grid: &Grid1D, u1x: f64, t: f64) -> Vec<f64> {
    let h = grid.dx() / INIT_SUBSAMPLES as f64;
    (0..grid.n_cells())
        .map(|i| {
            let x0 = grid.x_min() + i as f64 * grid.dx();
            (0..INIT_SUBSAMPLES)
                .map(|k| ic.density_at(grid.wrap(x0 + (k as f64 + 0.5) * h - u1x * t), grid))
                .sum::<f64>()
                / INIT_SUBSAMPLES as f64
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct EulerSnapshot {
    pub t: f64,
    pub cells: Vec<MomentState>,
    pub s: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EulerOutput {
    pub snapshots: Vec<EulerSnapshot>,
    pub steps: u64,
    pub initial_mass: f64,
    /// Largest `|M(t) - M(0)| / M(0)` seen at any step.
    pub max_mass_drift: f64,
}

fn snapshot(state: &EulerState, closure: &SClosure, bg: &BackgroundState) -> Result<EulerSnapshot> {
    let cells = state.primitives()?;
    let s = cells
        .iter()
        .map(|c| closure_rate(closure, c.u, c.temperature, bg))
        .collect::<Result<_>>()?;
    Ok(EulerSnapshot { t: state.t, cells, s })
}

pub fn run_euler(
    config: &EulerConfig,
    params: &ModelParams,
    bg: &BackgroundState,
    closure: &SClosure,
    initial: &InitialCondition,
) -> Result<EulerOutput> {
    let state = EulerState::from_initial(initial, &config.grid)?;
    run_euler_from(config, params, bg, closure, state)
}

pub fn run_euler_from(
    config: &EulerConfig,
    params: &ModelParams,
    bg: &BackgroundState,
    closure: &SClosure,
    mut state: EulerState,
) -> Result<EulerOutput> {
    config.validate()?;
    closure.validate()?;
    if matches!(closure, SClosure::HardSphere) {
        return Err(Error::ClosureMisuse(
            "the hard-sphere kernel has no closed moment system; use a pseudo-Maxwellian closure".into(),
        ));
    }
    if state.cells.len() != config.grid.n_cells() {
        return Err(Error::Precondition(format!(
            "{} cells for a grid of {}",
            state.cells.len(),
            config.grid.n_cells()
        )));
    }
    let mass0 = state.totals(&config.grid).rho;
    let mut drift: f64 = 0.0;
    let mut steps = 0u64;
    let mut snapshots = Vec::new();
    for t_out in output_times(config.t_end, config.output_interval) {
        while state.t < t_out {
            let remaining = t_out - state.t;
            let mut dt = stable_dt(&state, config)?;
            if let Some(m) = config.max_dt {
                dt = dt.min(m);
            }
            // land on the output time instead of leaving a sliver step
            let last = dt >= remaining * (1.0 - 1e-12);
            if last {
                dt = remaining;
            }
            step(&mut state, config, params, bg, closure, dt)?;
            if last {
                state.t = t_out;
            }
            steps += 1;
            let m = state.totals(&config.grid).rho;
            drift = drift.max((m - mass0).abs() / mass0);
        }
        snapshots.push(snapshot(&state, closure, bg)?);
    }
    Ok(EulerOutput {
        snapshots,
        steps,
        initial_mass: mass0,
        max_mass_drift: drift,
    })
}

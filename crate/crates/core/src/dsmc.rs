//! Direct simulation Monte Carlo of the linear dissipative Boltzmann model.
//!
//! Particles collide independently with a background reservoir that is never
//! depleted, so no pair bookkeeping is needed. Within a step each particle
//! runs its own exponential clock at rate `ν = rate_constant · S · ρ₁ / λ`
//! (with `S` frozen at the start of the step) and may collide any number of
//! times. The hard-sphere kernel is simulated by thinning a majorant rate.

use std::time::{Duration, Instant};

use rand::Rng;
use rand_distr::{Exp1, UnitSphere};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::Grid1D;
use crate::initial::InitialCondition;
use crate::model::{collide, mean_relative_speed_z, sample_maxwellian, BackgroundState, ModelParams, SClosure};
use crate::moments::output_times;
use crate::rng::{ParticleRng, StreamKey};
use crate::vec3::Vec3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KineticMode {
    Homogeneous,
    Slab1D,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KineticBoundary {
    Periodic,
    /// Vacuum boundary: particles leaving the domain are removed and nothing
    /// is injected.
    Outflow,
}

#[derive(Debug, Clone, PartialEq)]
pub struct KineticConfig {
    pub dt: f64,
    pub t_end: f64,
    pub output_interval: f64,
    pub n_particles: usize,
    pub seed: u64,
    pub mode: KineticMode,
    /// In homogeneous mode only the extent is used (the volume).
    pub grid: Grid1D,
    pub bc: KineticBoundary,
    /// Fixed hard-sphere majorant speed; `None` recomputes it every step.
    pub majorant: Option<f64>,
    /// Upper bound on `ν dt`.
    pub max_rate_dt: f64,
    /// Number of sub-ensembles for batch-means error bars.
    pub batches: usize,
    /// Worker threads; 1 runs strictly sequentially.
    pub threads: usize,
}

impl KineticConfig {
    pub fn validate(&self, closure: &SClosure) -> Result<()> {
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::invalid("dt", "dt must be positive"));
        }
        if !(self.t_end.is_finite() && self.t_end >= 0.0) {
            return Err(Error::invalid("t_end", "t_end must be non-negative"));
        }
        if !(self.output_interval.is_finite() && self.output_interval > 0.0) {
            return Err(Error::invalid("output_interval", "output interval must be positive"));
        }
        if self.n_particles == 0 {
            return Err(Error::invalid("n_particles", "n_particles must be at least 1"));
        }
        if let Some(m) = self.majorant {
            if !(m.is_finite() && m > 0.0) {
                return Err(Error::invalid("majorant", "majorant must be positive"));
            }
        }
        if !(self.max_rate_dt > 0.0) {
            return Err(Error::invalid("max_rate_dt", "max_rate_dt must be positive"));
        }
        if self.batches < 2 {
            return Err(Error::invalid(
                "batches",
                "at least 2 batches are needed for error bars",
            ));
        }
        if self.threads == 0 {
            return Err(Error::invalid("threads", "threads must be at least 1"));
        }
        closure.validate()?;
        for &t in &output_times(self.t_end, self.output_interval) {
            let steps = t / self.dt;
            if (steps - steps.round()).abs() > 1e-6 {
                return Err(Error::invalid(
                    "output_interval",
                    format!("output time {t} is not a multiple of dt = {}", self.dt),
                ));
            }
        }
        Ok(())
    }

    fn n_cells(&self) -> usize {
        match self.mode {
            KineticMode::Homogeneous => 1,
            KineticMode::Slab1D => self.grid.n_cells(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Particle {
    /// Position; the domain centre in homogeneous mode.
    pub x: f64,
    pub v: Vec3,
    pub id: u64,
    rng: ParticleRng,
}

/// Simulation particles, each representing `weight` units of mass.
#[derive(Debug, Clone)]
pub struct ParticleEnsemble {
    pub particles: Vec<Particle>,
    pub weight: f64,
}

impl ParticleEnsemble {
    /// Ensemble with given positions and velocities; particle `i` gets id `i`.
    pub fn from_parts(x: &[f64], v: &[Vec3], weight: f64, seed: u64) -> Result<Self> {
        if x.len() != v.len() {
            return Err(Error::Precondition(format!(
                "{} positions but {} velocities",
                x.len(),
                v.len()
            )));
        }
        if !(weight.is_finite() && weight > 0.0) {
            return Err(Error::invalid("weight", "particle weight must be positive"));
        }
        let key = StreamKey::new(seed);
        let particles = x
            .iter()
            .zip(v)
            .enumerate()
            .map(|(i, (&x, &v))| Particle {
                x,
                v,
                id: i as u64,
                rng: key.stream(i as u64),
            })
            .collect();
        Ok(Self { particles, weight })
    }

    /// Sample `n` particles from an initial profile: positions by inverse CDF
    /// of the density, velocities from the local Maxwellian.
    pub fn sample(ic: &InitialCondition, grid: &Grid1D, mode: KineticMode, n: usize, seed: u64) -> Result<Self> {
        ic.validate(grid)?;
        if n == 0 {
            return Err(Error::invalid("n_particles", "n_particles must be at least 1"));
        }
        let key = StreamKey::new(seed);
        let mass = ic.total_mass(grid);
        let weight = mass / n as f64;
        let particles = match mode {
            KineticMode::Homogeneous => {
                let s = ic.homogeneous_state(grid);
                let mid = 0.5 * (grid.x_min() + grid.x_max());
                (0..n as u64)
                    .map(|id| {
                        let mut rng = key.stream(id);
                        let v = sample_maxwellian(&mut rng, s.u, s.temperature);
                        Particle { x: mid, v, id, rng }
                    })
                    .collect()
            }
            KineticMode::Slab1D => {
                let bins = InitialCondition::fine_bins(grid);
                let h = grid.length() / bins as f64;
                let mut cdf = Vec::with_capacity(bins + 1);
                cdf.push(0.0);
                let mut acc = 0.0;
                for i in 0..bins {
                    acc += ic.density_at(grid.x_min() + (i as f64 + 0.5) * h, grid) * h;
                    cdf.push(acc);
                }
                (0..n as u64)
                    .map(|id| {
                        let mut rng = key.stream(id);
                        let target = rng.random::<f64>() * acc;
                        let j = cdf.partition_point(|&c| c <= target).clamp(1, bins) - 1;
                        let within = if cdf[j + 1] > cdf[j] {
                            (target - cdf[j]) / (cdf[j + 1] - cdf[j])
                        } else {
                            0.5
                        };
                        let x = grid.wrap(grid.x_min() + (j as f64 + within) * h);
                        let s = ic.state_at(x, grid);
                        let v = sample_maxwellian(&mut rng, s.u, s.temperature);
                        Particle { x, v, id, rng }
                    })
                    .collect()
            }
        };
        Ok(Self { particles, weight })
    }

    pub fn len(&self) -> usize {
        self.particles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.particles.is_empty()
    }

    pub fn velocities(&self) -> impl Iterator<Item = Vec3> + '_ {
        self.particles.iter().map(|p| p.v)
    }

    pub fn positions(&self) -> impl Iterator<Item = f64> + '_ {
        self.particles.iter().map(|p| p.x)
    }
}

/// Collision rate factor seen by each particle during one step.
#[derive(Debug, Clone, PartialEq)]
pub enum SField {
    Uniform(f64),
    PerCell { grid: Grid1D, values: Vec<f64> },
}

impl SField {
    fn at(&self, x: f64) -> f64 {
        match self {
            SField::Uniform(s) => *s,
            SField::PerCell { grid, values } => values[grid.cell_of(x)],
        }
    }

    fn max(&self) -> f64 {
        match self {
            SField::Uniform(s) => *s,
            SField::PerCell { values, .. } => values.iter().copied().fold(0.0, f64::max),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct CollisionStats {
    /// Collisions performed.
    pub collisions: u64,
    /// Candidate events drawn (equals `collisions` except under thinning).
    pub candidates: u64,
}

impl std::ops::Add for CollisionStats {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self {
            collisions: self.collisions + o.collisions,
            candidates: self.candidates + o.candidates,
        }
    }
}

/// Advance velocities through collisions over `dt`.
///
/// For the pseudo-Maxwellian closures `s_field` carries `S`; for
/// [`SClosure::HardSphere`] it carries the majorant speed `S_max`, candidates
/// are drawn at `rate_constant · S_max · ρ₁ / λ` and accepted with
/// probability `|v - w| / S_max`.
#[allow(clippy::too_many_arguments)]
pub fn collision_step(
    ens: &mut ParticleEnsemble,
    params: &ModelParams,
    bg: &BackgroundState,
    closure: &SClosure,
    s_field: &SField,
    dt: f64,
    max_rate_dt: f64,
    parallel: bool,
) -> Result<CollisionStats> {
    let nu_max = params.collision_rate(s_field.max(), bg.rho1);
    if nu_max * dt > max_rate_dt {
        return Err(Error::StepSize {
            rate_dt: nu_max * dt,
            limit: max_rate_dt,
        });
    }
    if nu_max == 0.0 {
        return Ok(CollisionStats::default());
    }
    let hard = matches!(closure, SClosure::HardSphere);
    let a = params.effective_coefficient();
    let kernel = |p: &mut Particle| -> Result<CollisionStats> {
        let s = s_field.at(p.x);
        let nu = params.collision_rate(s, bg.rho1);
        collide_particle(p, nu, dt, a, bg, if hard { Some(s) } else { None })
    };
    if parallel {
        ens.particles
            .par_iter_mut()
            .map(kernel)
            .try_reduce(CollisionStats::default, |x, y| Ok(x + y))
    } else {
        ens.particles
            .iter_mut()
            .try_fold(CollisionStats::default(), |acc, p| Ok(acc + kernel(p)?))
    }
}

fn collide_particle(
    p: &mut Particle,
    nu: f64,
    dt: f64,
    a: f64,
    bg: &BackgroundState,
    majorant: Option<f64>,
) -> Result<CollisionStats> {
    let mut stats = CollisionStats::default();
    if nu <= 0.0 {
        return Ok(stats);
    }
    let rng = &mut p.rng;
    let mut clock: f64 = rng.sample::<f64, _>(Exp1) / nu;
    while clock < dt {
        let w = sample_maxwellian(rng, bg.u1, bg.t1);
        let n = Vec3(rng.sample(UnitSphere));
        stats.candidates += 1;
        let accept = match majorant {
            None => true,
            Some(s_max) => {
                let speed = (p.v - w).norm();
                if speed > s_max {
                    return Err(Error::MajorantViolation { speed, majorant: s_max });
                }
                rng.random::<f64>() * s_max < speed
            }
        };
        if accept {
            p.v = collide(p.v, w, n, a);
            stats.collisions += 1;
        }
        clock += rng.sample::<f64, _>(Exp1) / nu;
    }
    Ok(stats)
}

/// Free streaming `x ← x + v_x dt`. Returns the number of particles removed
/// through an outflow boundary.
pub fn transport_step(ens: &mut ParticleEnsemble, dt: f64, grid: &Grid1D, bc: KineticBoundary) -> usize {
    for p in ens.particles.iter_mut() {
        p.x += p.v.x() * dt;
        if bc == KineticBoundary::Periodic {
            p.x = grid.wrap(p.x);
        }
    }
    if bc == KineticBoundary::Outflow {
        let before = ens.particles.len();
        ens.particles.retain(|p| grid.contains(p.x));
        before - ens.particles.len()
    } else {
        0
    }
}

/// Moments of the particles in one cell. `u` needs one particle, `T` two.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellMoments {
    pub rho: f64,
    pub n_particles: u64,
    pub u: Option<Vec3>,
    pub temperature: Option<f64>,
    pub s: Option<f64>,
}

/// Batch-means standard errors of the cell moments.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellSigma {
    pub rho: Option<f64>,
    pub u: Option<Vec3>,
    pub temperature: Option<f64>,
    pub s: Option<f64>,
}

#[derive(Debug, Clone, Copy, Default)]
struct Sums {
    n: u64,
    v: Vec3,
    central2: f64,
    z: f64,
}

/// Where particles live: one homogeneous cell of volume `grid.length()`, or
/// the cells of `grid`.
#[derive(Debug, Clone, Copy)]
pub struct Binning {
    pub grid: Grid1D,
    pub mode: KineticMode,
}

impl Binning {
    fn n_cells(&self) -> usize {
        match self.mode {
            KineticMode::Homogeneous => 1,
            KineticMode::Slab1D => self.grid.n_cells(),
        }
    }

    fn cell(&self, x: f64) -> usize {
        match self.mode {
            KineticMode::Homogeneous => 0,
            KineticMode::Slab1D => self.grid.cell_of(x),
        }
    }

    fn volume(&self) -> f64 {
        match self.mode {
            KineticMode::Homogeneous => self.grid.length(),
            KineticMode::Slab1D => self.grid.dx(),
        }
    }
}

fn needs_z(closure: &SClosure) -> bool {
    matches!(closure, SClosure::ExpectedRelativeSpeed | SClosure::HardSphere)
}

fn s_from_sums(closure: &SClosure, n: u64, central2: f64, mean: Vec3, z: f64, bg: &BackgroundState) -> Option<f64> {
    if n == 0 {
        return None;
    }
    let nf = n as f64;
    Some(match *closure {
        SClosure::Constant(s0) => s0,
        SClosure::SqrtRelativeTemperature { mu } => mu * ((central2 / nf + (mean - bg.u1).norm2()) / 3.0).sqrt(),
        SClosure::ExpectedRelativeSpeed | SClosure::HardSphere => z / nf,
    })
}

/// Per-cell moments and, with `batches > 1`, batch-means standard errors
/// over sub-ensembles `id mod batches`.
pub fn cell_statistics(
    ens: &ParticleEnsemble,
    binning: &Binning,
    closure: &SClosure,
    bg: &BackgroundState,
    batches: usize,
) -> (Vec<CellMoments>, Vec<CellSigma>) {
    let nc = binning.n_cells();
    let nb = batches.max(1);
    let mut sums = vec![Sums::default(); nc * nb];
    let cells: Vec<usize> = ens.particles.iter().map(|p| binning.cell(p.x)).collect();
    for (p, &c) in ens.particles.iter().zip(&cells) {
        let s = &mut sums[c * nb + (p.id % nb as u64) as usize];
        s.n += 1;
        s.v += p.v;
    }
    let means: Vec<Option<Vec3>> = (0..nc)
        .map(|c| {
            let (n, v) = sums[c * nb..(c + 1) * nb]
                .iter()
                .fold((0u64, Vec3::ZERO), |(n, v), s| (n + s.n, v + s.v));
            (n > 0).then(|| v / n as f64)
        })
        .collect();
    let with_z = needs_z(closure);
    for (p, &c) in ens.particles.iter().zip(&cells) {
        let mean = means[c].expect("occupied cell has a mean");
        let s = &mut sums[c * nb + (p.id % nb as u64) as usize];
        s.central2 += (p.v - mean).norm2();
        if with_z {
            s.z += mean_relative_speed_z(p.v, bg);
        }
    }

    let volume = binning.volume();
    let mut moments = Vec::with_capacity(nc);
    let mut sigmas = Vec::with_capacity(nc);
    for c in 0..nc {
        let group = &sums[c * nb..(c + 1) * nb];
        let total = group.iter().fold(Sums::default(), |acc, s| Sums {
            n: acc.n + s.n,
            v: acc.v + s.v,
            central2: acc.central2 + s.central2,
            z: acc.z + s.z,
        });
        let n = total.n;
        let mean = means[c];
        let moments_c = CellMoments {
            rho: ens.weight * n as f64 / volume,
            n_particles: n,
            u: mean,
            temperature: (n >= 2).then(|| total.central2 / (3.0 * n as f64)),
            s: mean.and_then(|m| s_from_sums(closure, n, total.central2, m, total.z, bg)),
        };
        moments.push(moments_c);

        // per-batch estimates, measured about the cell mean
        let mut rho_b = Vec::with_capacity(nb);
        let mut u_b = Vec::new();
        let mut t_b = Vec::new();
        let mut s_b = Vec::new();
        for s in group {
            rho_b.push(ens.weight * nb as f64 * s.n as f64 / volume);
            if s.n == 0 {
                continue;
            }
            let cell_mean = mean.expect("occupied cell has a mean");
            let bm = s.v / s.n as f64;
            u_b.push(bm);
            let dev = bm - cell_mean;
            if s.n >= 2 {
                t_b.push(((s.central2 / s.n as f64) - dev.norm2()) / 3.0);
            }
            // central2 about the batch mean for the S estimate
            let c2 = s.central2 - s.n as f64 * dev.norm2();
            if let Some(v) = s_from_sums(closure, s.n, c2, bm, s.z, bg) {
                s_b.push(v);
            }
        }
        let sigma_u = (u_b.len() >= 2).then(|| {
            Vec3::new(
                standard_error(u_b.iter().map(|u| u.x())),
                standard_error(u_b.iter().map(|u| u.y())),
                standard_error(u_b.iter().map(|u| u.z())),
            )
        });
        sigmas.push(CellSigma {
            rho: (nb >= 2).then(|| standard_error(rho_b.iter().copied())),
            u: sigma_u,
            temperature: (t_b.len() >= 2).then(|| standard_error(t_b.iter().copied())),
            s: (s_b.len() >= 2).then(|| standard_error(s_b.iter().copied())),
        });
    }
    (moments, sigmas)
}

/// Per-cell moments without error bars.
pub fn cell_moments(
    ens: &ParticleEnsemble,
    binning: &Binning,
    closure: &SClosure,
    bg: &BackgroundState,
) -> Vec<CellMoments> {
    cell_statistics(ens, binning, closure, bg, 1).0
}

/// Standard error of the mean of batch estimates.
fn standard_error(values: impl Iterator<Item = f64> + Clone) -> f64 {
    let n = values.clone().count() as f64;
    let mean = values.clone().sum::<f64>() / n;
    let var = values.map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (var / n).sqrt()
}

/// `S` per cell from the current particles. Cells without particles get 0.
pub fn s_field(ens: &ParticleEnsemble, binning: &Binning, closure: &SClosure, bg: &BackgroundState) -> SField {
    if let SClosure::Constant(s0) = closure {
        return SField::Uniform(*s0);
    }
    let values: Vec<f64> = cell_moments(ens, binning, closure, bg)
        .iter()
        .map(|m| m.s.unwrap_or(0.0))
        .collect();
    match binning.mode {
        KineticMode::Homogeneous => SField::Uniform(values[0]),
        KineticMode::Slab1D => SField::PerCell {
            grid: binning.grid,
            values,
        },
    }
}

/// Default majorant `max(|u - u₁| + 6(√T + √T₁), max_i |v_i - u₁| + 8√T₁)`.
/// The second term keeps individual fast particles below the bound.
pub fn default_majorant(ens: &ParticleEnsemble, bg: &BackgroundState) -> f64 {
    let n = ens.len().max(1) as f64;
    let mean = ens.velocities().fold(Vec3::ZERO, |a, v| a + v) / n;
    let t = ens.velocities().map(|v| (v - mean).norm2()).sum::<f64>() / (3.0 * n);
    let fastest = ens.velocities().map(|v| (v - bg.u1).norm()).fold(0.0, f64::max);
    let st1 = bg.t1.sqrt();
    ((mean - bg.u1).norm() + 6.0 * (t.sqrt() + st1)).max(fastest + 8.0 * st1)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DsmcSnapshot {
    pub t: f64,
    pub cells: Vec<CellMoments>,
    pub sigma: Vec<CellSigma>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DsmcDiagnostic {
    pub t: f64,
    pub step: u64,
    /// Collisions since the previous diagnostic record.
    pub collisions: u64,
    pub candidates: u64,
    /// Time-averaged (over steps) maximum `S` since the previous record.
    pub mean_s: f64,
    pub n_particles: u64,
}

#[derive(Debug, Clone)]
pub struct DsmcOutput {
    pub snapshots: Vec<DsmcSnapshot>,
    pub diagnostics: Vec<DsmcDiagnostic>,
    pub wall_time: Duration,
    pub total_collisions: u64,
}

/// Full splitting loop: per step, evaluate `S` from the ensemble, collide,
/// then stream (slab mode). Snapshots are taken at the output times.
pub fn run_dsmc(
    config: &KineticConfig,
    params: &ModelParams,
    bg: &BackgroundState,
    closure: &SClosure,
    initial: &InitialCondition,
) -> Result<DsmcOutput> {
    config.validate(closure)?;
    let ens = ParticleEnsemble::sample(initial, &config.grid, config.mode, config.n_particles, config.seed)?;
    run_dsmc_from(config, params, bg, closure, ens)
}

/// Like [`run_dsmc`] but starting from a prepared ensemble.
pub fn run_dsmc_from(
    config: &KineticConfig,
    params: &ModelParams,
    bg: &BackgroundState,
    closure: &SClosure,
    mut ens: ParticleEnsemble,
) -> Result<DsmcOutput> {
    config.validate(closure)?;
    let started = Instant::now();
    let pool = if config.threads > 1 {
        Some(
            rayon::ThreadPoolBuilder::new()
                .num_threads(config.threads)
                .build()
                .map_err(|e| Error::Precondition(format!("cannot start worker pool: {e}")))?,
        )
    } else {
        None
    };
    let parallel = pool.is_some();
    let binning = Binning {
        grid: config.grid,
        mode: config.mode,
    };
    debug_assert_eq!(binning.n_cells(), config.n_cells());

    let mut body = || -> Result<DsmcOutput> {
        let mut snapshots = Vec::new();
        let mut diagnostics = Vec::new();
        let mut step: u64 = 0;
        let mut interval_stats = CollisionStats::default();
        let mut interval_s = 0.0;
        let mut interval_steps = 0u64;
        let mut total = 0u64;
        for t_out in output_times(config.t_end, config.output_interval) {
            let target = (t_out / config.dt).round() as u64;
            while step < target {
                let field = match closure {
                    SClosure::HardSphere => {
                        SField::Uniform(config.majorant.unwrap_or_else(|| default_majorant(&ens, bg)))
                    }
                    _ => s_field(&ens, &binning, closure, bg),
                };
                interval_s += field.max();
                let stats = collision_step(
                    &mut ens,
                    params,
                    bg,
                    closure,
                    &field,
                    config.dt,
                    config.max_rate_dt,
                    parallel,
                )?;
                interval_stats = interval_stats + stats;
                total += stats.collisions;
                if config.mode == KineticMode::Slab1D {
                    transport_step(&mut ens, config.dt, &config.grid, config.bc);
                }
                step += 1;
                interval_steps += 1;
            }
            let (cells, sigma) = cell_statistics(&ens, &binning, closure, bg, config.batches);
            snapshots.push(DsmcSnapshot { t: t_out, cells, sigma });
            diagnostics.push(DsmcDiagnostic {
                t: t_out,
                step,
                collisions: interval_stats.collisions,
                candidates: interval_stats.candidates,
                mean_s: if interval_steps > 0 {
                    interval_s / interval_steps as f64
                } else {
                    0.0
                },
                n_particles: ens.len() as u64,
            });
            interval_stats = CollisionStats::default();
            interval_s = 0.0;
            interval_steps = 0;
        }
        Ok(DsmcOutput {
            snapshots,
            diagnostics,
            wall_time: Duration::ZERO,
            total_collisions: total,
        })
    };
    let mut out = match &pool {
        Some(pool) => pool.install(body)?,
        None => body()?,
    };
    out.wall_time = started.elapsed();
    Ok(out)
}

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::grid::Grid1D;
use crate::model::MomentState;
use crate::vec3::Vec3;

/// Initial hydrodynamic profile shared by the particle and finite-volume
/// solvers.
#[derive(Debug, Clone, PartialEq)]
pub enum InitialCondition {
    Uniform(MomentState),
    /// `ρ(x) = ρ_base + amplitude · exp(-(x - center)² / (2 width²))`.
    GaussianBump {
        base: MomentState,
        amplitude: f64,
        center: f64,
        width: f64,
    },
    /// `ρ(x) = ρ_mean + amplitude · sin(2π k (x - x_min) / L)`.
    Sine {
        mean: MomentState,
        amplitude: f64,
        wavenumber: u32,
    },
    /// Riemann data with the discontinuity at `interface`.
    Sod {
        left: MomentState,
        right: MomentState,
        interface: f64,
    },
    /// Piecewise-constant density on equal bins spanning the domain.
    Tabulated {
        rho: Vec<f64>,
        u: Vec3,
        temperature: f64,
    },
}

impl InitialCondition {
    pub fn validate(&self, grid: &Grid1D) -> Result<()> {
        match self {
            InitialCondition::Uniform(s) => {
                if s.rho <= 0.0 {
                    return Err(Error::invalid("rho", "initial density must be positive"));
                }
            }
            InitialCondition::GaussianBump {
                base,
                amplitude,
                width,
                center,
            } => {
                if !(width.is_finite() && *width > 0.0) {
                    return Err(Error::invalid("width", "bump width must be positive"));
                }
                if !(amplitude.is_finite() && center.is_finite()) {
                    return Err(Error::invalid("amplitude", "bump amplitude and center must be finite"));
                }
                if base.rho + amplitude.min(0.0) < 0.0 || base.rho + amplitude <= 0.0 {
                    return Err(Error::invalid("amplitude", "bump density must stay non-negative"));
                }
            }
            InitialCondition::Sine {
                mean,
                amplitude,
                wavenumber,
            } => {
                if !(amplitude.is_finite() && amplitude.abs() <= mean.rho) || mean.rho <= 0.0 {
                    return Err(Error::invalid(
                        "amplitude",
                        "sine amplitude must not exceed the mean density",
                    ));
                }
                if *wavenumber == 0 {
                    return Err(Error::invalid("wavenumber", "wavenumber must be at least 1"));
                }
            }
            InitialCondition::Sod { left, right, interface } => {
                if left.rho <= 0.0 || right.rho <= 0.0 {
                    return Err(Error::invalid("rho", "Riemann states need positive density"));
                }
                if !(interface.is_finite()) {
                    return Err(Error::invalid("interface", "interface must be finite"));
                }
            }
            InitialCondition::Tabulated { rho, u, temperature } => {
                if rho.is_empty() {
                    return Err(Error::invalid("table", "density table is empty"));
                }
                if rho.iter().any(|r| !(r.is_finite() && *r >= 0.0)) {
                    return Err(Error::invalid(
                        "table",
                        "tabulated densities must be finite and non-negative",
                    ));
                }
                if rho.iter().sum::<f64>() <= 0.0 {
                    return Err(Error::invalid("table", "tabulated profile carries no mass"));
                }
                MomentState::new(1.0, *u, *temperature)?;
            }
        }
        let mass = self.total_mass(grid);
        if !(mass.is_finite() && mass > 0.0) {
            return Err(Error::invalid(
                "rho",
                "initial condition must carry finite positive mass",
            ));
        }
        Ok(())
    }

    pub fn state_at(&self, x: f64, grid: &Grid1D) -> MomentState {
        match self {
            InitialCondition::Uniform(s) => *s,
            InitialCondition::GaussianBump {
                base,
                amplitude,
                center,
                width,
            } => {
                let r = (x - center) / width;
                MomentState {
                    rho: base.rho + amplitude * (-0.5 * r * r).exp(),
                    ..*base
                }
            }
            InitialCondition::Sine {
                mean,
                amplitude,
                wavenumber,
            } => {
                let phase = 2.0 * PI * *wavenumber as f64 * (x - grid.x_min()) / grid.length();
                MomentState {
                    rho: mean.rho + amplitude * phase.sin(),
                    ..*mean
                }
            }
            InitialCondition::Sod { left, right, interface } => {
                if x < *interface {
                    *left
                } else {
                    *right
                }
            }
            InitialCondition::Tabulated { rho, u, temperature } => {
                let n = rho.len();
                let s = ((x - grid.x_min()) / grid.length() * n as f64).floor();
                let i = if s <= 0.0 { 0 } else { (s as usize).min(n - 1) };
                MomentState {
                    rho: rho[i],
                    u: *u,
                    temperature: *temperature,
                }
            }
        }
    }

    pub fn density_at(&self, x: f64, grid: &Grid1D) -> f64 {
        self.state_at(x, grid).rho
    }

    /// State used when the problem is treated as spatially homogeneous.
    pub fn homogeneous_state(&self, grid: &Grid1D) -> MomentState {
        let mid = 0.5 * (grid.x_min() + grid.x_max());
        match self {
            InitialCondition::Uniform(s) => *s,
            _ => {
                let s = self.state_at(mid, grid);
                MomentState {
                    rho: self.total_mass(grid) / grid.length(),
                    ..s
                }
            }
        }
    }

    /// Midpoint-rule mass on a fine sub-grid of the domain.
    pub fn total_mass(&self, grid: &Grid1D) -> f64 {
        let bins = Self::fine_bins(grid);
        let h = grid.length() / bins as f64;
        (0..bins)
            .map(|i| self.density_at(grid.x_min() + (i as f64 + 0.5) * h, grid))
            .sum::<f64>()
            * h
    }

    pub(crate) fn fine_bins(grid: &Grid1D) -> usize {
        (grid.n_cells() * 64).max(4096)
    }
}

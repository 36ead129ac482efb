//! Model parameters, Maxwellian distributions, the inelastic collision rule
//! and the collision-rate closures shared by every solver.
//!
//! Temperatures are measured in velocity² units (particle mass set to one).
//! The collision rule is
//!
//! ```text
//! v* = v - 2a ((v - w)·n) n
//! ```
//!
//! with `w` drawn from the background Maxwellian, `n` uniform on the unit
//! sphere and `a` the [effective coefficient](ModelParams::effective_coefficient).
//! A particle undergoes collisions at rate `ν = rate_constant · S · ρ₁ / λ`.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::quadrature::{gauss_hermite_normal, gauss_laguerre};
use crate::vec3::Vec3;

/// Which mass ratio enters the collision rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum AlphaConvention {
    /// `a = α (1 - β)` with `α = m₁ / (m₁ + m)`, as the rule is printed.
    #[default]
    Paper,
    /// `a = (1 - α)(1 - β)`: the light-partner momentum transfer factor.
    Complementary,
}

/// Switches that select between the admissible normalisations of the model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Conventions {
    pub alpha: AlphaConvention,
    /// Per-particle collision-rate prefactor. The weak form of the operator
    /// integrates to 4; the strong form's prefactor gives 2.
    pub rate_constant: f64,
}

impl Default for Conventions {
    fn default() -> Self {
        Self {
            alpha: AlphaConvention::Paper,
            rate_constant: 4.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    pub m1: f64,
    pub m: f64,
    pub e: f64,
    pub alpha: f64,
    pub beta: f64,
    /// Mean free path. `f64::INFINITY` switches collisions off.
    pub lambda: f64,
    pub alpha_convention: AlphaConvention,
    pub rate_constant: f64,
}

impl ModelParams {
    /// Validate the physical inputs and derive `α = m₁/(m₁+m)`, `β = (1-e)/2`.
    pub fn derive(m1: f64, m: f64, e: f64, lambda: f64, conventions: Conventions) -> Result<Self> {
        if !(m1.is_finite() && m1 > 0.0) {
            return Err(Error::invalid("m1", "m1 must be a positive finite mass"));
        }
        if !(m.is_finite() && m > 0.0) {
            return Err(Error::invalid("m", "m must be a positive finite mass"));
        }
        if !(e > 0.0 && e <= 1.0) {
            return Err(Error::invalid("e", "e must lie in (0,1]"));
        }
        if lambda.is_nan() || lambda <= 0.0 {
            return Err(Error::invalid("lambda", "lambda must be positive"));
        }
        let rc = conventions.rate_constant;
        if !(rc.is_finite() && rc > 0.0) {
            return Err(Error::invalid(
                "rate_constant",
                "rate_constant must be positive and finite",
            ));
        }
        Ok(Self {
            m1,
            m,
            e,
            alpha: m1 / (m1 + m),
            beta: (1.0 - e) / 2.0,
            lambda,
            alpha_convention: conventions.alpha,
            rate_constant: rc,
        })
    }

    pub fn conventions(&self) -> Conventions {
        Conventions {
            alpha: self.alpha_convention,
            rate_constant: self.rate_constant,
        }
    }

    /// The scalar `a` multiplying the normal relative velocity in the
    /// collision rule.
    pub fn effective_coefficient(&self) -> f64 {
        match self.alpha_convention {
            AlphaConvention::Paper => self.alpha * (1.0 - self.beta),
            AlphaConvention::Complementary => (1.0 - self.alpha) * (1.0 - self.beta),
        }
    }

    /// Per-particle collision frequency `ν = rate_constant · S · ρ₁ / λ`.
    pub fn collision_rate(&self, s: f64, rho1: f64) -> f64 {
        if s == 0.0 {
            return 0.0;
        }
        self.rate_constant * s * rho1 / self.lambda
    }

    /// Relaxation rate of the mean velocity, `κ₁ = (2/3) a ν`.
    pub fn momentum_relaxation_rate(&self, s: f64, rho1: f64) -> f64 {
        2.0 / 3.0 * self.effective_coefficient() * self.collision_rate(s, rho1)
    }
}

/// Background gas: a fixed Maxwellian reservoir.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BackgroundState {
    pub rho1: f64,
    pub u1: Vec3,
    pub t1: f64,
}

impl BackgroundState {
    pub fn new(rho1: f64, u1: Vec3, t1: f64) -> Result<Self> {
        if !(rho1.is_finite() && rho1 > 0.0) {
            return Err(Error::invalid("rho1", "rho1 must be positive"));
        }
        if !u1.is_finite() {
            return Err(Error::invalid("u1", "u1 must be finite"));
        }
        if !(t1.is_finite() && t1 > 0.0) {
            return Err(Error::invalid("T1", "T1 must be positive"));
        }
        Ok(Self { rho1, u1, t1 })
    }
}

/// Hydrodynamic fields `(ρ, u, T)` of the inelastic species.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentState {
    pub rho: f64,
    pub u: Vec3,
    pub temperature: f64,
}

impl MomentState {
    pub fn new(rho: f64, u: Vec3, temperature: f64) -> Result<Self> {
        if !(rho.is_finite() && rho >= 0.0) {
            return Err(Error::invalid("rho", "rho must be finite and non-negative"));
        }
        if !u.is_finite() {
            return Err(Error::invalid("u", "u must be finite"));
        }
        if !(temperature.is_finite() && temperature >= 0.0) {
            return Err(Error::invalid("T", "T must be finite and non-negative"));
        }
        Ok(Self { rho, u, temperature })
    }
}

/// How the velocity-independent collision rate `S(t, x)` is obtained.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SClosure {
    /// `S = s0`.
    Constant(f64),
    /// `S = μ √T_r` with `T_r` the temperature measured about `u₁`.
    SqrtRelativeTemperature { mu: f64 },
    /// `S` is the expected relative speed `E|v - w|` over particles and
    /// background.
    ExpectedRelativeSpeed,
    /// Exact hard-sphere kernel `|v - w|`; only the particle solver can use it.
    HardSphere,
}

impl SClosure {
    pub fn validate(&self) -> Result<()> {
        match *self {
            SClosure::Constant(s0) if !(s0.is_finite() && s0 > 0.0) => {
                Err(Error::invalid("s0", "s0 must be positive and finite"))
            }
            SClosure::SqrtRelativeTemperature { mu } if !(mu.is_finite() && mu > 0.0) => {
                Err(Error::invalid("mu", "mu must be positive and finite"))
            }
            _ => Ok(()),
        }
    }

    /// Evaluate `S` for a Maxwellian-distributed state.
    pub fn evaluate(&self, ms: &MomentState, bg: &BackgroundState) -> Result<f64> {
        match *self {
            SClosure::Constant(s0) => Ok(s0),
            SClosure::SqrtRelativeTemperature { mu } => Ok(mu * relative_temperature(ms, bg.u1)?.sqrt()),
            SClosure::ExpectedRelativeSpeed => {
                if ms.rho <= 0.0 {
                    return Err(Error::UndefinedMoment(
                        "expected relative speed of an empty state".into(),
                    ));
                }
                Ok(expected_relative_speed(ms, bg))
            }
            SClosure::HardSphere => Err(Error::ClosureMisuse(
                "the hard-sphere kernel has no velocity-independent rate S".into(),
            )),
        }
    }

    /// Evaluate `S` from an equally weighted particle sample.
    pub fn evaluate_sample<I>(&self, velocities: I, bg: &BackgroundState) -> Result<f64>
    where
        I: IntoIterator<Item = Vec3>,
    {
        if let SClosure::HardSphere = self {
            return self.evaluate(&MomentState::default_unit(), bg);
        }
        if let SClosure::Constant(s0) = *self {
            return Ok(s0);
        }
        let mut n = 0usize;
        let mut acc = 0.0;
        for v in velocities {
            n += 1;
            acc += match self {
                SClosure::SqrtRelativeTemperature { .. } => (v - bg.u1).norm2(),
                _ => mean_relative_speed_z(v, bg),
            };
        }
        if n == 0 {
            return Err(Error::UndefinedMoment("S of an empty sample".into()));
        }
        let mean = acc / n as f64;
        Ok(match *self {
            SClosure::SqrtRelativeTemperature { mu } => mu * (mean / 3.0).sqrt(),
            _ => mean,
        })
    }
}

impl MomentState {
    fn default_unit() -> Self {
        Self {
            rho: 1.0,
            u: Vec3::ZERO,
            temperature: 1.0,
        }
    }
}

/// Checked collision rule: `n` must be a unit vector to within `1e-12`.
pub fn post_collision(v: Vec3, w: Vec3, n: Vec3, params: &ModelParams) -> Result<Vec3> {
    let norm = n.norm();
    if !((norm - 1.0).abs() <= 1e-12) {
        return Err(Error::Precondition(format!(
            "collision direction must be a unit vector, |n| = {norm}"
        )));
    }
    Ok(collide(v, w, n, params.effective_coefficient()))
}

#[inline]
pub(crate) fn collide(v: Vec3, w: Vec3, n: Vec3, a: f64) -> Vec3 {
    let qn = (v - w).dot(n);
    v - n * (2.0 * a * qn)
}

/// Local Maxwellian `ρ (2πT)^{-3/2} exp(-|v-u|²/(2T))`.
pub fn maxwellian_pdf(ms: &MomentState, v: Vec3) -> Result<f64> {
    if !(ms.temperature > 0.0) {
        return Err(Error::Domain(format!("Maxwellian needs T > 0, got {}", ms.temperature)));
    }
    let t = ms.temperature;
    Ok(ms.rho * (2.0 * PI * t).powf(-1.5) * (-(v - ms.u).norm2() / (2.0 * t)).exp())
}

/// Draw `u + √T g` with `g` a standard 3D Gaussian. `T = 0` returns `u`.
pub fn sample_maxwellian<R: Rng + ?Sized>(rng: &mut R, u: Vec3, t: f64) -> Vec3 {
    if t == 0.0 {
        return u;
    }
    let s = t.sqrt();
    let g = Vec3::new(
        rng.sample(StandardNormal),
        rng.sample(StandardNormal),
        rng.sample(StandardNormal),
    );
    u + g * s
}

/// Stationary temperature quoted for the hard-sphere operator,
/// `(1-α)(1-β)/(1-α(1-β)) · T₁`.
pub fn equilibrium_temperature_paper(params: &ModelParams, t1: f64) -> f64 {
    let (alpha, beta) = (params.alpha, params.beta);
    (1.0 - alpha) * (1.0 - beta) / (1.0 - alpha * (1.0 - beta)) * t1
}

/// Fixed point `a T₁ / (1 - a)` of the pseudo-Maxwellian jump process.
pub fn equilibrium_temperature_model(params: &ModelParams, t1: f64) -> Result<f64> {
    let a = params.effective_coefficient();
    if a >= 1.0 {
        return Err(Error::NoEquilibrium(a));
    }
    Ok(a * t1 / (1.0 - a))
}

/// `T_r = T + |u - u₁|²/3`: the second moment about the background velocity
/// divided by `3ρ`.
pub fn relative_temperature(ms: &MomentState, u1: Vec3) -> Result<f64> {
    if ms.rho <= 0.0 {
        return Err(Error::UndefinedMoment("relative temperature of an empty state".into()));
    }
    Ok(ms.temperature + (ms.u - u1).norm2() / 3.0)
}

pub fn erf(x: f64) -> f64 {
    libm::erf(x)
}

/// Mean distance `E|g e + √var X|` from a point at distance `g` to an
/// isotropic Gaussian with per-component variance `var`.
pub fn mean_distance_to_gaussian(g: f64, var: f64) -> f64 {
    let g = g.abs();
    if var == 0.0 {
        return g;
    }
    let sigma = var.sqrt();
    let c = (2.0 * var / PI).sqrt();
    if g < 1e-6 * sigma {
        // even series: 2c (1 + g²/(6 var))
        return 2.0 * c * (1.0 + g * g / (6.0 * var));
    }
    c * (-g * g / (2.0 * var)).exp() + (g + var / g) * erf(g / (std::f64::consts::SQRT_2 * sigma))
}

/// `Z(v) = ∫ |v - w| M₁(w) dw`.
pub fn mean_relative_speed_z(v: Vec3, bg: &BackgroundState) -> f64 {
    bg.rho1 * mean_distance_to_gaussian((v - bg.u1).norm(), bg.t1)
}

/// `(1/ρ) ∫ Z(v) M(v) dv` for the closure Maxwellian `M`. Since `v - w` is
/// Gaussian with mean `u - u₁` and variance `T + T₁`, this is exact.
pub fn expected_relative_speed(ms: &MomentState, bg: &BackgroundState) -> f64 {
    bg.rho1 * mean_distance_to_gaussian((ms.u - bg.u1).norm(), ms.temperature + bg.t1)
}

/// Quadrature route to [`expected_relative_speed`]: the axis along `u - u₁`
/// is integrated with Gauss–Hermite, the two transverse axes are collapsed to
/// the exponential variable `s = r²/2` and integrated with Gauss–Laguerre.
/// Converges spectrally while `T` is not much larger than `T₁`.
pub fn expected_relative_speed_quadrature(ms: &MomentState, bg: &BackgroundState, order: usize) -> f64 {
    let d = (ms.u - bg.u1).norm();
    let t = ms.temperature;
    if t == 0.0 {
        return bg.rho1 * mean_distance_to_gaussian(d, bg.t1);
    }
    let hermite = gauss_hermite_normal(order);
    let laguerre = gauss_laguerre(order);
    let st = t.sqrt();
    let mut total = 0.0;
    for (&x, &wx) in hermite.nodes.iter().zip(&hermite.weights) {
        let axial = d + st * x;
        let inner = laguerre.integrate(|s| {
            let g = (axial * axial + 2.0 * t * s).sqrt();
            mean_distance_to_gaussian(g, bg.t1)
        });
        total += wx * inner;
    }
    bg.rho1 * total
}

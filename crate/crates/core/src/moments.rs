//! Spatially homogeneous moment system for `(u, T)`.
//!
//! Under isotropic collision directions the mean jump of the collision rule
//! depends only on first and second velocity moments, so the system
//!
//! ```text
//! du/dt = -κ₁ (u - u₁),                        κ₁ = (2/3) a ν
//! dε/dt = (2/3) ν D̃,                           ε  = |u|²/2 + 3T/2
//! D̃     = a² (3T + 3T₁ + |u - u₁|²) - a (3T + |u|² - u·u₁)
//! ```
//!
//! with `ν = rate_constant · S · ρ₁ / λ` is closed whenever `S` is.

use crate::error::{Error, Result};
use crate::model::{equilibrium_temperature_model, BackgroundState, ModelParams, MomentState, SClosure};
use crate::vec3::Vec3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OdeState {
    pub u: Vec3,
    pub temperature: f64,
    pub t: f64,
}

impl OdeState {
    pub fn new(u: Vec3, temperature: f64) -> Self {
        Self { u, temperature, t: 0.0 }
    }

    /// Specific energy `|u|²/2 + 3T/2`.
    pub fn energy(&self) -> f64 {
        0.5 * self.u.norm2() + 1.5 * self.temperature
    }
}

pub fn momentum_rhs(state: &OdeState, params: &ModelParams, bg: &BackgroundState, s: f64) -> Vec3 {
    let kappa = params.momentum_relaxation_rate(s, bg.rho1);
    (state.u - bg.u1) * (-kappa)
}

/// The bracket `D̃` of the energy source.
pub fn dissipation_bracket(state: &OdeState, params: &ModelParams, bg: &BackgroundState) -> f64 {
    let a = params.effective_coefficient();
    let (u, u1, t) = (state.u, bg.u1, state.temperature);
    a * a * (3.0 * t + 3.0 * bg.t1 + (u - u1).norm2()) - a * (3.0 * t + u.norm2() - u.dot(u1))
}

pub fn energy_rhs(state: &OdeState, params: &ModelParams, bg: &BackgroundState, s: f64) -> f64 {
    let nu = params.collision_rate(s, bg.rho1);
    if nu == 0.0 {
        return 0.0;
    }
    2.0 / 3.0 * nu * dissipation_bracket(state, params, bg)
}

/// `dT/dt = (4ν/9) [a² (3T + 3T₁ + |u - u₁|²) - 3aT]`; the `|u|²` terms of
/// the energy equation cancel against the kinetic part.
pub fn temperature_rhs(state: &OdeState, params: &ModelParams, bg: &BackgroundState, s: f64) -> f64 {
    let nu = params.collision_rate(s, bg.rho1);
    if nu == 0.0 {
        return 0.0;
    }
    let a = params.effective_coefficient();
    let t = state.temperature;
    4.0 / 9.0 * nu * (a * a * (3.0 * t + 3.0 * bg.t1 + (state.u - bg.u1).norm2()) - 3.0 * a * t)
}

/// Rate `S` seen by the moment system. Rates are per unit mass, so the
/// density is immaterial.
pub fn closure_rate(closure: &SClosure, u: Vec3, temperature: f64, bg: &BackgroundState) -> Result<f64> {
    let ms = MomentState {
        rho: 1.0,
        u,
        temperature: temperature.max(0.0),
    };
    closure.evaluate(&ms, bg)
}

/// `(u₁, a T₁ / (1 - a))`, independent of the closure.
pub fn fixed_point(params: &ModelParams, bg: &BackgroundState, closure: &SClosure) -> Result<OdeState> {
    closure.validate()?;
    let a = params.effective_coefficient();
    if a >= 1.0 {
        return Err(Error::NoEquilibrium(a));
    }
    Ok(OdeState::new(bg.u1, equilibrium_temperature_model(params, bg.t1)?))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectoryPoint {
    pub t: f64,
    pub u: Vec3,
    pub temperature: f64,
    pub s: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Trajectory {
    pub points: Vec<TrajectoryPoint>,
}

/// Output instants `0, Δ, 2Δ, …` up to and including `t_end`.
pub fn output_times(t_end: f64, interval: f64) -> Vec<f64> {
    let mut times = vec![0.0];
    let mut k = 1u64;
    loop {
        let t = k as f64 * interval;
        if t >= t_end * (1.0 - 1e-12) {
            break;
        }
        times.push(t);
        k += 1;
    }
    if t_end > 0.0 {
        times.push(t_end);
    }
    times
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegrateOptions {
    pub dt: f64,
    pub t_end: f64,
    pub output_interval: f64,
}

impl IntegrateOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::invalid("dt", "dt must be positive"));
        }
        if !(self.t_end.is_finite() && self.t_end >= 0.0) {
            return Err(Error::invalid("t_end", "t_end must be non-negative"));
        }
        if !(self.output_interval.is_finite() && self.output_interval > 0.0) {
            return Err(Error::invalid("output_interval", "output interval must be positive"));
        }
        Ok(())
    }
}

const NEGATIVE_T_TOLERANCE: f64 = 1e-12;

/// Classical fixed-step RK4. Each output interval is split into equal steps
/// no longer than `dt`; `S` is re-evaluated at every stage.
pub fn integrate(
    state0: OdeState,
    params: &ModelParams,
    bg: &BackgroundState,
    closure: &SClosure,
    opts: IntegrateOptions,
) -> Result<Trajectory> {
    opts.validate()?;
    closure.validate()?;
    let rhs = |s: &OdeState| -> Result<(Vec3, f64, f64)> {
        let rate = closure_rate(closure, s.u, s.temperature, bg)?;
        Ok((
            momentum_rhs(s, params, bg, rate),
            temperature_rhs(s, params, bg, rate),
            rate,
        ))
    };
    let mut state = state0;
    let mut points = Vec::new();
    for (k, &t_out) in output_times(opts.t_end, opts.output_interval).iter().enumerate() {
        if k > 0 {
            let span = t_out - state.t;
            let n = ((span / opts.dt) * (1.0 - 1e-12)).ceil().max(1.0) as usize;
            let h = span / n as f64;
            let start = state.t;
            for i in 0..n {
                state = rk4_step(&state, h, &rhs)?;
                state.t = start + (i + 1) as f64 * h;
                if state.temperature < -NEGATIVE_T_TOLERANCE {
                    return Err(Error::NegativeTemperature {
                        t: state.t,
                        temperature: state.temperature,
                    });
                }
            }
            state.t = t_out;
        }
        let rate = closure_rate(closure, state.u, state.temperature, bg)?;
        points.push(TrajectoryPoint {
            t: t_out,
            u: state.u,
            temperature: state.temperature,
            s: rate,
        });
    }
    Ok(Trajectory { points })
}

fn rk4_step<F>(s: &OdeState, h: f64, rhs: &F) -> Result<OdeState>
where
    F: Fn(&OdeState) -> Result<(Vec3, f64, f64)>,
{
    let at = |du: Vec3, dt_: f64, c: f64| OdeState {
        u: s.u + du * c,
        temperature: s.temperature + dt_ * c,
        t: s.t + c,
    };
    let (k1u, k1t, _) = rhs(s)?;
    let (k2u, k2t, _) = rhs(&at(k1u, k1t, 0.5 * h))?;
    let (k3u, k3t, _) = rhs(&at(k2u, k2t, 0.5 * h))?;
    let (k4u, k4t, _) = rhs(&at(k3u, k3t, h))?;
    Ok(OdeState {
        u: s.u + (k1u + k2u * 2.0 + k3u * 2.0 + k4u) * (h / 6.0),
        temperature: s.temperature + (k1t + 2.0 * k2t + 2.0 * k3t + k4t) * (h / 6.0),
        t: s.t + h,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{AlphaConvention, Conventions};
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn params_a(a_case: f64) -> ModelParams {
        let c = Conventions::default();
        match a_case {
            x if x == 0.5 => ModelParams::derive(1.0, 1.0, 1.0, 1.0, c).unwrap(),
            x if x == 0.5625 => ModelParams::derive(3.0, 1.0, 0.5, 1.0, c).unwrap(),
            x if x == 0.1875 => ModelParams::derive(
                3.0,
                1.0,
                0.5,
                1.0,
                Conventions {
                    alpha: AlphaConvention::Complementary,
                    ..c
                },
            )
            .unwrap(),
            _ => unreachable!(),
        }
    }

    fn bg() -> BackgroundState {
        BackgroundState::new(1.0, Vec3::ZERO, 1.0).unwrap()
    }

    #[test]
    fn momentum_rhs_examples() {
        let p = params_a(0.5);
        let b = bg();
        assert_eq!(momentum_rhs(&OdeState::new(b.u1, 1.0), &p, &b, 1.0), Vec3::ZERO);
        let r = momentum_rhs(&OdeState::new(Vec3::new(1., 0., 0.), 1.0), &p, &b, 1.0);
        assert_relative_eq!(r.x(), -4.0 / 3.0, epsilon = 1e-15);
        assert_eq!(r.y(), 0.0);
        let mut p2 = p;
        p2.lambda = 2.0;
        let r2 = momentum_rhs(&OdeState::new(Vec3::new(1., 0., 0.), 1.0), &p2, &b, 1.0);
        assert_relative_eq!(r2.x(), r.x() / 2.0, epsilon = 1e-15);
    }

    #[test]
    fn energy_rhs_examples() {
        let b = bg();
        let p = params_a(0.5625);
        let tfix = equilibrium_temperature_model(&p, 1.0).unwrap();
        assert!(energy_rhs(&OdeState::new(b.u1, tfix), &p, &b, 1.0).abs() < 1e-14);
        let p5 = params_a(0.5);
        assert_relative_eq!(
            energy_rhs(&OdeState::new(b.u1, 0.0), &p5, &b, 1.0),
            2.0,
            epsilon = 1e-14
        );
        assert_relative_eq!(
            energy_rhs(&OdeState::new(Vec3::ZERO, 1.0), &p, &b, 1.0),
            0.5625,
            epsilon = 1e-14
        );
    }

    #[test]
    fn temperature_rhs_examples() {
        let b = bg();
        let p = params_a(0.5);
        assert_relative_eq!(
            temperature_rhs(&OdeState::new(b.u1, 0.0), &p, &b, 1.0),
            4.0 / 3.0,
            epsilon = 1e-14
        );
        let p = params_a(0.5625);
        let tfix = equilibrium_temperature_model(&p, 1.0).unwrap();
        assert!(temperature_rhs(&OdeState::new(b.u1, tfix), &p, &b, 1.0).abs() < 1e-14);
    }

    #[test]
    fn fixed_point_examples() {
        let b = BackgroundState::new(1.0, Vec3::new(0.5, 0.0, 0.0), 1.0).unwrap();
        let fp = fixed_point(&params_a(0.5), &b, &SClosure::Constant(1.0)).unwrap();
        assert_eq!(fp.u, b.u1);
        assert_relative_eq!(fp.temperature, 1.0, epsilon = 1e-15);
        let fp = fixed_point(&params_a(0.1875), &b, &SClosure::Constant(1.0)).unwrap();
        assert_relative_eq!(fp.temperature, 0.23076923076923078, epsilon = 1e-14);
        let p = params_a(0.5625);
        assert_eq!(
            fixed_point(&p, &b, &SClosure::Constant(1.0)).unwrap(),
            fixed_point(&p, &b, &SClosure::Constant(7.0)).unwrap()
        );
    }

    #[test]
    fn constant_s_velocity_matches_exponential() {
        let p = params_a(0.5625);
        let b = BackgroundState::new(1.0, Vec3::new(0.2, -0.1, 0.0), 1.0).unwrap();
        let u0 = Vec3::new(1.0, 0.5, -0.3);
        let traj = integrate(
            OdeState::new(u0, 2.0),
            &p,
            &b,
            &SClosure::Constant(1.0),
            IntegrateOptions {
                dt: 1e-3,
                t_end: 5.0,
                output_interval: 0.25,
            },
        )
        .unwrap();
        let kappa = p.momentum_relaxation_rate(1.0, 1.0);
        assert_relative_eq!(kappa, 1.5, epsilon = 1e-15);
        for pt in &traj.points {
            let exact = b.u1 + (u0 - b.u1) * (-kappa * pt.t).exp();
            assert!((pt.u - exact).norm() < 1e-10, "t = {}", pt.t);
        }
        assert_eq!(traj.points.len(), 21);
        assert_eq!(traj.points.last().unwrap().t, 5.0);
    }

    #[test]
    fn long_time_limit_is_model_fixed_point() {
        for a in [0.5, 0.5625, 0.1875] {
            let p = params_a(a);
            let b = bg();
            let traj = integrate(
                OdeState::new(b.u1, 3.0),
                &p,
                &b,
                &SClosure::Constant(1.0),
                IntegrateOptions {
                    dt: 0.01,
                    t_end: 60.0,
                    output_interval: 10.0,
                },
            )
            .unwrap();
            let t_end = traj.points.last().unwrap().temperature;
            assert!((t_end - a / (1.0 - a)).abs() < 1e-8, "a = {a}: {t_end}");
        }
    }

    #[test]
    fn rk4_is_fourth_order() {
        let p = params_a(0.5625);
        let b = bg();
        let s0 = OdeState::new(Vec3::new(1.0, 0.0, 0.0), 0.2);
        let closure = SClosure::SqrtRelativeTemperature { mu: 1.0 };
        let run = |dt: f64| {
            integrate(
                s0,
                &p,
                &b,
                &closure,
                IntegrateOptions {
                    dt,
                    t_end: 2.0,
                    output_interval: 0.5,
                },
            )
            .unwrap()
        };
        let reference = run(1e-4);
        let err = |dt: f64| {
            run(dt)
                .points
                .iter()
                .zip(&reference.points)
                .map(|(a, r)| (a.temperature - r.temperature).abs().max((a.u - r.u).norm()))
                .fold(0.0, f64::max)
        };
        let ratio = err(0.1) / err(0.05);
        assert!((ratio - 16.0).abs() < 3.0, "error ratio {ratio}");
    }

    #[test]
    fn nonlinear_closures_relax_to_the_same_fixed_point() {
        let p = params_a(0.5625);
        let b = bg();
        for closure in [
            SClosure::SqrtRelativeTemperature { mu: 1.0 },
            SClosure::ExpectedRelativeSpeed,
        ] {
            let traj = integrate(
                OdeState::new(Vec3::new(2.0, 0.0, 0.0), 0.0),
                &p,
                &b,
                &closure,
                IntegrateOptions {
                    dt: 0.01,
                    t_end: 40.0,
                    output_interval: 10.0,
                },
            )
            .unwrap();
            let last = traj.points.last().unwrap();
            assert!(last.u.norm() < 1e-8);
            assert!((last.temperature - 0.5625 / 0.4375).abs() < 1e-8);
        }
    }

    #[test]
    fn rejects_bad_options_and_negative_temperature() {
        let p = params_a(0.5);
        let b = bg();
        let bad = IntegrateOptions {
            dt: 0.0,
            t_end: 1.0,
            output_interval: 0.1,
        };
        assert!(integrate(OdeState::new(Vec3::ZERO, 1.0), &p, &b, &SClosure::Constant(1.0), bad).is_err());
        let neg = integrate(
            OdeState::new(Vec3::ZERO, -1.0),
            &p,
            &b,
            &SClosure::Constant(1.0),
            IntegrateOptions {
                dt: 0.1,
                t_end: 0.1,
                output_interval: 0.1,
            },
        );
        assert!(matches!(neg, Err(Error::NegativeTemperature { .. })));
    }

    #[test]
    fn rate_constant_covariance() {
        let mut p = params_a(0.5625);
        let b = bg();
        let s0 = OdeState::new(Vec3::new(0.7, 0.0, 0.1), 0.3);
        let closure = SClosure::SqrtRelativeTemperature { mu: 1.3 };
        let base = integrate(
            s0,
            &p,
            &b,
            &closure,
            IntegrateOptions {
                dt: 1e-3,
                t_end: 4.0,
                output_interval: 0.5,
            },
        )
        .unwrap();
        p.rate_constant *= 2.0;
        let fast = integrate(
            s0,
            &p,
            &b,
            &closure,
            IntegrateOptions {
                dt: 5e-4,
                t_end: 2.0,
                output_interval: 0.25,
            },
        )
        .unwrap();
        for (x, y) in base.points.iter().zip(&fast.points) {
            assert_relative_eq!(x.t, 2.0 * y.t, epsilon = 1e-12);
            assert!((x.u - y.u).norm() < 1e-10);
            assert!((x.temperature - y.temperature).abs() < 1e-10);
        }
    }

    #[test]
    fn output_time_grid() {
        assert_eq!(output_times(1.0, 0.25), vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        assert_eq!(output_times(1.0, 0.3), vec![0.0, 0.3, 0.6, 0.8999999999999999, 1.0]);
        assert_eq!(output_times(0.0, 0.3), vec![0.0]);
    }

    fn state() -> impl Strategy<Value = (OdeState, f64, f64)> {
        (
            prop::array::uniform3(-3.0..3.0f64),
            0.0..5.0f64,
            0.05..0.95f64,
            0.1..3.0f64,
        )
            .prop_map(|(u, t, a, s)| (OdeState::new(Vec3(u), t), a, s))
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(2000))]
        #[test]
        fn temperature_rhs_is_energy_minus_kinetic((s, a, rate) in state(), u1 in prop::array::uniform3(-2.0..2.0f64), t1 in 0.1..4.0f64) {
            let mut p = params_a(0.5);
            p.alpha = a;
            let b = BackgroundState::new(1.3, Vec3(u1), t1).unwrap();
            let lhs = temperature_rhs(&s, &p, &b, rate);
            let rhs = 2.0 / 3.0 * (energy_rhs(&s, &p, &b, rate) - s.u.dot(momentum_rhs(&s, &p, &b, rate)));
            prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + lhs.abs() + energy_rhs(&s, &p, &b, rate).abs()) * 10.0);
        }

        #[test]
        fn relaxation_is_monotone_towards_fixed_point(t in 0.0..5.0f64, a in 0.05..0.95f64) {
            let mut p = params_a(0.5);
            p.alpha = a;
            let b = bg();
            let tfix = equilibrium_temperature_model(&p, 1.0).unwrap();
            let r = temperature_rhs(&OdeState::new(b.u1, t), &p, &b, 1.0);
            let expected_sign = ((tfix - t) * (1.0 - a) * 3.0 * a).signum();
            prop_assume!((t - tfix).abs() > 1e-9);
            prop_assert_eq!(r.signum(), expected_sign);
        }
    }
}

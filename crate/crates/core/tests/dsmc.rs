use dissipa_core::dsmc::{run_dsmc, transport_step, KineticBoundary, KineticConfig, KineticMode, ParticleEnsemble};
use dissipa_core::moments::fixed_point;
use dissipa_core::{BackgroundState, Conventions, Grid1D, InitialCondition, ModelParams, MomentState, SClosure, Vec3};
use proptest::prelude::*;

fn params() -> ModelParams {
    // a = 9/16
    ModelParams::derive(3.0, 1.0, 0.5, 1.0, Conventions::default()).unwrap()
}

fn homogeneous_config(n: usize, dt: f64, t_end: f64, interval: f64, seed: u64) -> KineticConfig {
    KineticConfig {
        dt,
        t_end,
        output_interval: interval,
        n_particles: n,
        seed,
        mode: KineticMode::Homogeneous,
        grid: Grid1D::new(3, 0.0, 1.0).unwrap(),
        bc: KineticBoundary::Periodic,
        majorant: None,
        max_rate_dt: 0.5,
        batches: 16,
        threads: 1,
    }
}

#[test]
fn fixed_point_is_statistically_stationary() {
    let bg = BackgroundState::new(1.0, Vec3::new(0.5, -0.5, 0.0), 1.0).unwrap();
    let closure = SClosure::ExpectedRelativeSpeed;
    let fp = fixed_point(&params(), &bg, &closure).unwrap();
    let ic = InitialCondition::Uniform(MomentState::new(1.0, fp.u, fp.temperature).unwrap());
    let cfg = homogeneous_config(50_000, 0.02, 4.0, 1.0, 11);
    let out = run_dsmc(&cfg, &params(), &bg, &closure, &ic).unwrap();
    for snap in &out.snapshots {
        let (m, s) = (&snap.cells[0], &snap.sigma[0]);
        let t = m.temperature.unwrap();
        // analytic standard error of a sample temperature: T sqrt(2 / 3N)
        let se = fp.temperature * (2.0 / 3.0 / 50_000.0f64).sqrt();
        assert!((t - fp.temperature).abs() < 4.0 * se, "t = {}: T = {t}", snap.t);
        assert!(s.temperature.unwrap() < 3.0 * se);
        let du = m.u.unwrap() - fp.u;
        assert!(du.norm() < 4.0 * (fp.temperature / 50_000.0f64).sqrt() * 3f64.sqrt());
    }
}

#[test]
fn mean_velocity_relaxes_at_kappa1() {
    let bg = BackgroundState::new(1.0, Vec3::ZERO, 1.0).unwrap();
    let closure = SClosure::Constant(1.0);
    let kappa = params().momentum_relaxation_rate(1.0, 1.0);
    let ic = InitialCondition::Uniform(MomentState::new(1.0, Vec3::new(2.0, 0.0, 0.0), 1.0).unwrap());
    let cfg = homogeneous_config(100_000, 0.01, 1.5, 0.1, 21);
    let out = run_dsmc(&cfg, &params(), &bg, &closure, &ic).unwrap();
    // least-squares slope of ln u_x against t
    let pts: Vec<(f64, f64)> = out
        .snapshots
        .iter()
        .map(|s| (s.t, s.cells[0].u.unwrap().x().ln()))
        .collect();
    let n = pts.len() as f64;
    let (mt, my) = pts.iter().fold((0.0, 0.0), |(a, b), (t, y)| (a + t / n, b + y / n));
    let slope = pts.iter().map(|(t, y)| (t - mt) * (y - my)).sum::<f64>()
        / pts.iter().map(|(t, _)| (t - mt).powi(2)).sum::<f64>();
    assert!((-slope / kappa - 1.0).abs() < 0.02, "fitted {} vs {kappa}", -slope);
}

#[test]
fn hard_sphere_run_heats_a_cold_gas() {
    let bg = BackgroundState::new(1.0, Vec3::ZERO, 1.0).unwrap();
    let ic = InitialCondition::Uniform(MomentState::new(1.0, Vec3::ZERO, 0.1).unwrap());
    let cfg = homogeneous_config(5_000, 0.005, 0.5, 0.25, 3);
    let out = run_dsmc(&cfg, &params(), &bg, &SClosure::HardSphere, &ic).unwrap();
    let t_end = out.snapshots.last().unwrap().cells[0].temperature.unwrap();
    assert!(t_end > 0.3, "{t_end}");
    let d = out.diagnostics.last().unwrap();
    assert!(d.candidates > d.collisions && d.collisions > 0);
}

proptest! {
    #[test]
    fn periodic_transport_keeps_particles_in_the_domain(
        xs in prop::collection::vec(0.0f64..1.0, 1..50),
        vx in -100.0f64..100.0,
        dt in 0.0f64..10.0,
    ) {
        let grid = Grid1D::new(5, -1.0, 2.0).unwrap();
        let x: Vec<f64> = xs.iter().map(|x| -1.0 + 3.0 * x).collect();
        let v: Vec<Vec3> = x.iter().enumerate().map(|(i, _)| Vec3::new(vx * (i as f64 + 1.0) / 7.0, 1.0, -1.0)).collect();
        let mut ens = ParticleEnsemble::from_parts(&x, &v, 1.0, 0).unwrap();
        transport_step(&mut ens, dt, &grid, KineticBoundary::Periodic);
        prop_assert_eq!(ens.len(), x.len());
        for p in ens.positions() {
            prop_assert!(grid.contains(p), "{} escaped", p);
        }
        let mut out = ParticleEnsemble::from_parts(&x, &v, 1.0, 0).unwrap();
        let removed = transport_step(&mut out, dt, &grid, KineticBoundary::Outflow);
        prop_assert_eq!(removed + out.len(), x.len());
    }
}

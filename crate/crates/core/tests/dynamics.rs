mod common;

use birkhoff_kg::dynamics::{
    drift_experiment, generator_flow_with_tol, integrate, linear_flow, random_unit_state, DriftSettings,
    IntegratorConfig, NormalTransform, Scheme,
};
use birkhoff_kg::kgmodel::{actions, g2_value, taylor_hamiltonian, Nonlinearity, PolyHamiltonian};
use birkhoff_kg::normalform::{birkhoff, lie_transform};
use birkhoff_kg::polyalg::State;
use birkhoff_kg::spectrum::{build_sphere_spectrum, Spectrum, SphereParams};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use common::*;

fn circle(n_max: u32) -> Spectrum {
    build_sphere_spectrum(SphereParams::new(1, 1.0).unwrap(), n_max).unwrap()
}

fn cubic(spec: &Spectrum, max_degree: usize) -> PolyHamiltonian {
    taylor_hamiltonian(&Nonlinearity::cubic(), spec, max_degree, None).unwrap()
}

fn unit(spec: &Spectrum, seed: u64) -> State {
    let u = random_unit_state(spec, 0.0, seed);
    u.scaled(1.0 / u.norm())
}

fn symplectic(a: &State, b: &State) -> f64 {
    a.amplitudes().iter().zip(b.amplitudes()).map(|(x, y)| (x.conj() * y).im).sum()
}

#[test]
fn linear_flow_rotates_each_mode() {
    let spec = circle(6);
    let u = random_state(&mut ChaCha8Rng::seed_from_u64(1), spec.num_modes(), 1.0);
    let t = 2.3;
    let got = linear_flow(&u, t, &spec);
    for m in spec.modes() {
        let w = omega(1, 1.0, m.cluster);
        let expect = u.get(m.mode_id) * Complex64::from_polar(1.0, w * t);
        assert!((got.get(m.mode_id) - expect).norm() <= 1e-15);
    }
}

#[test]
fn strang_split_is_second_order() {
    let spec = circle(6);
    let h = cubic(&spec, 3);
    let u0 = unit(&spec, 3).scaled(0.3);
    let reference = integrate(
        &u0,
        &h,
        &IntegratorConfig {
            dt: 1.0,
            scheme: Scheme::RkAdaptive,
            local_tol: 1e-13,
            t_end: 1.0,
        },
        1,
        0.0,
    )
    .unwrap()
    .final_state;
    let err = |dt: f64| {
        let tr = integrate(&u0, &h, &IntegratorConfig::strang(dt, 1.0), 1, 0.0).unwrap();
        tr.final_state.distance(&reference)
    };
    let (e1, e2) = (err(0.02), err(0.01));
    let ratio = e1 / e2;
    assert!((3.5..=4.5).contains(&ratio), "ratio {ratio} ({e1:e}, {e2:e})");
}

#[test]
fn strang_split_conserves_energy_to_second_order() {
    let spec = circle(6);
    let h = cubic(&spec, 3);
    let u0 = unit(&spec, 8).scaled(0.2);
    let drift = |dt: f64| integrate(&u0, &h, &IntegratorConfig::strang(dt, 5.0), 10, 0.0).unwrap().energy_drift;
    let (d1, d2) = (drift(0.01), drift(0.005));
    // energy_drift is relative to |G(u0)|
    assert!(d1 < 1e-5, "{d1:e}");
    assert!(d2 < d1 / 3.0, "{d1:e} {d2:e}");
}

#[test]
fn lie_transform_matches_numerical_flow() {
    let spec = circle(5);
    let h = cubic(&spec, 3);
    let nf = birkhoff(&h.parts, &spec, 1).unwrap();
    let f = &nf.generators[0];
    assert!(!f.is_zero());
    let parts = lie_transform(&h.parts, f, 5, &spec).unwrap();
    let dir = unit(&spec, 12);
    let err = |a: f64| {
        let u = dir.scaled(a);
        let moved = generator_flow_with_tol(f, &u, 1.0, 1e-14).unwrap();
        let exact = h.energy(&moved) - g2_value(&spec, &u);
        let series: f64 = parts.iter().map(|p| p.evaluate(&u).re).sum();
        (exact - series).abs()
    };
    // remainder starts at degree 6
    let ratio = err(0.1) / err(0.05);
    assert!((2f64.powf(5.4)..=2f64.powf(6.6)).contains(&ratio), "ratio {ratio}");
}

#[test]
fn generator_flow_is_reversible_and_symplectic() {
    let spec = circle(5);
    let h = cubic(&spec, 4);
    let nf = birkhoff(&h.parts, &spec, 2).unwrap();
    let f = &nf.generators[0];
    let u = unit(&spec, 2).scaled(0.2);
    let there = generator_flow_with_tol(f, &u, 1.0, 1e-14).unwrap();
    let back = generator_flow_with_tol(f, &there, -1.0, 1e-14).unwrap();
    assert!(back.distance(&u) <= 1e-12);
    assert!(there.distance(&u) > 1e-4);

    let step = 1e-5;
    let push = |xi: &State| {
        let plus = generator_flow_with_tol(f, &u.axpy(Complex64::new(step, 0.0), xi), 1.0, 1e-14).unwrap();
        let minus = generator_flow_with_tol(f, &u.axpy(Complex64::new(-step, 0.0), xi), 1.0, 1e-14).unwrap();
        plus.axpy(Complex64::new(-1.0, 0.0), &minus).scaled(0.5 / step)
    };
    for seed in 0..4 {
        let xi = unit(&spec, 100 + seed);
        let eta = unit(&spec, 200 + seed);
        let before = symplectic(&xi, &eta);
        let after = symplectic(&push(&xi), &push(&eta));
        assert!((after - before).abs() <= 1e-7, "{before} -> {after}");
    }
}

#[test]
fn normal_transform_round_trip() {
    let spec = circle(6);
    let h = cubic(&spec, 4);
    let nf = birkhoff(&h.parts, &spec, 2).unwrap();
    let t = NormalTransform::with_tol(&nf.generators, spec.num_modes(), 1e-13);
    let u = unit(&spec, 5).scaled(0.1);
    let back = t.inverse(&t.forward(&u).unwrap()).unwrap();
    assert!(back.distance(&u) <= 1e-11);
}

#[test]
fn linear_dynamics_has_no_drift() {
    let spec = circle(6);
    let h = taylor_hamiltonian(&Nonlinearity::new(&[(3, 0.0)]).unwrap(), &spec, 4, None).unwrap();
    assert!(h.parts.iter().all(|p| p.is_zero()));
    let nf = birkhoff(&h.parts, &spec, 2).unwrap();
    let settings = DriftSettings::new(vec![0.2, 0.1, 0.05], 1, 1.0, 3);
    let table = drift_experiment(&h, &nf, &settings, &IntegratorConfig::strang(1e-2, 1.0)).unwrap();
    for r in &table.rows {
        assert!(r.raw_drift <= 1e-13 && r.transformed_drift <= 1e-13, "{r:?}");
    }
    let u0 = unit(&spec, 4).scaled(0.5);
    let tr = integrate(&u0, &h, &IntegratorConfig::strang(1e-2, 3.0), 10, 0.0).unwrap();
    let j0 = actions(&u0, &spec);
    for j in &tr.actions {
        for (a, b) in j.iter().zip(&j0) {
            assert!((a - b).abs() <= 1e-14);
        }
    }
}

mod common;

use birkhoff_kg::kgmodel::{
    actions, from_complex, g2_value, sobolev_norm, taylor_hamiltonian, to_complex, weighted_energy, CouplingEntry,
    CouplingTable, Nonlinearity,
};
use birkhoff_kg::polyalg::State;
use birkhoff_kg::spectrum::{build_sphere_spectrum, Spectrum, SphereParams};
use birkhoff_kg::Error;
use num_complex::Complex64;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use common::*;

fn circle(m: f64, n_max: u32) -> Spectrum {
    build_sphere_spectrum(SphereParams::new(1, m).unwrap(), n_max).unwrap()
}

fn state(spec: &Spectrum, seed: u64, amplitude: f64) -> State {
    random_state(&mut ChaCha8Rng::seed_from_u64(seed), spec.num_modes(), amplitude)
}

#[test]
fn taylor_parts_match_quadrature() {
    let spec = circle(1.3, 6);
    let nl = Nonlinearity::new(&[(3, 0.7), (4, -0.4), (5, 0.2)]).unwrap();
    let h = taylor_hamiltonian(&nl, &spec, 5, None).unwrap();
    for seed in 0..5 {
        let u = state(&spec, seed, 0.4);
        for (p, a) in [(3, 0.7), (4, -0.4), (5, 0.2)] {
            let got = h.part(p).unwrap().evaluate(&u);
            let expect = circle_quadrature(128, |x| a * circle_field(&spec, &u, x).powi(p as i32));
            assert!((got.re - expect).abs() <= 1e-12 * expect.abs().max(1e-3), "p={p}: {got} vs {expect}");
            assert!(got.im.abs() <= 1e-14);
        }
    }
}

#[test]
fn modulated_coefficients_match_quadrature() {
    let spec = circle(1.0, 5);
    let w = Complex64::new(0.3, -0.2);
    let nl = Nonlinearity::new(&[(3, 1.0)])
        .unwrap()
        .with_modulation(3, &[(2, w), (-2, w.conj())])
        .unwrap();
    let h = taylor_hamiltonian(&nl, &spec, 3, None).unwrap();
    let u = state(&spec, 9, 0.5);
    let got = h.part(3).unwrap().evaluate(&u).re;
    let expect = circle_quadrature(128, |x| nl.value(x, circle_field(&spec, &u, x)));
    assert!((got - expect).abs() <= 1e-12 * expect.abs().max(1e-3));
}

#[test]
fn zero_sum_selection_rule() {
    let spec = circle(1.0, 7);
    let h = taylor_hamiltonian(&Nonlinearity::new(&[(3, 1.0), (4, 1.0)]).unwrap(), &spec, 4, None).unwrap();
    for part in &h.parts {
        assert!(!part.is_zero());
        for (k, _) in part.terms() {
            let idx = |m: &u32| spec.fourier_index(*m).unwrap();
            let sum: i64 = k.u().iter().map(idx).sum::<i64>() - k.ubar().iter().map(idx).sum::<i64>();
            assert_eq!(sum, 0, "{k:?}");
        }
    }
}

#[test]
fn real_fields_evaluate_to_the_independent_field() {
    let spec = circle(0.8, 6);
    let u = state(&spec, 4, 1.0);
    let rs = from_complex(&u, &spec).unwrap();
    assert!(rs.symmetry_defect(&spec) <= 1e-15);
    for j in 0..7 {
        let x = j as f64 * 0.9;
        assert!((rs.eval_v(&spec, x).unwrap() - circle_field(&spec, &u, x)).abs() <= 1e-13);
    }
}

#[test]
fn quadratic_energy_matches_parseval() {
    let spec = circle(1.7, 6);
    let u = state(&spec, 2, 1.0);
    let rs = from_complex(&u, &spec).unwrap();
    let mut expect = 0.0;
    for m in spec.modes() {
        let a = m.mode_id as usize;
        let w = omega(1, 1.7, m.cluster);
        expect += 0.5 * (rs.v_t[a].norm_sqr() + w * w * rs.v[a].norm_sqr());
    }
    assert!((g2_value(&spec, &u) - expect).abs() <= 1e-13 * expect);
}

#[test]
fn sobolev_norm_is_the_weighted_action_sum() {
    let spec = circle(1.0, 5);
    let u = state(&spec, 3, 0.3);
    let j = actions(&u, &spec);
    for (n, jn) in j.iter().enumerate() {
        let a = spec.cluster_modes(n as u32 + 1);
        let direct: f64 = a.map(|m| u.get(m).norm_sqr()).sum();
        assert!((jn - direct).abs() <= 1e-16);
    }
    let e = weighted_energy(&u, 1.5, &spec);
    let manual: f64 = j.iter().enumerate().map(|(n, jn)| ((n + 1) as f64).powf(3.0) * jn).sum();
    assert!((e - manual).abs() <= 1e-14 * manual);
    assert!((sobolev_norm(&u, 1.5, &spec).powi(2) - e).abs() <= 1e-14 * e);
}

#[test]
fn higher_spheres_need_a_table() {
    let spec = build_sphere_spectrum(SphereParams::new(2, 1.0).unwrap(), 1).unwrap();
    let err = taylor_hamiltonian(&Nonlinearity::cubic(), &spec, 3, None).unwrap_err();
    assert!(matches!(err, Error::UnsupportedManifold(_)));
}

#[test]
fn coupling_table_defines_the_cubic_part() {
    let spec = build_sphere_spectrum(SphereParams::new(2, 1.0).unwrap(), 1).unwrap();
    assert_eq!(spec.num_modes(), 3);
    let table = CouplingTable {
        d: 2,
        n_max: 1,
        entries: vec![
            CouplingEntry { modes: vec![0, 0, 0], value: 0.5 },
            CouplingEntry { modes: vec![2, 0, 1], value: 0.3 },
        ],
    };
    let h = taylor_hamiltonian(&Nonlinearity::cubic(), &spec, 3, Some(&table)).unwrap();
    let u = state(&spec, 1, 0.6);
    let w = omega(2, 1.0, 1);
    let v: Vec<f64> = (0..3)
        .map(|a| ((u.get(a) - u.get(a).conj()) / (Complex64::i() * 2f64.sqrt())).re / w.sqrt())
        .collect();
    let expect = 0.5 * v[0].powi(3) + 6.0 * 0.3 * v[0] * v[1] * v[2];
    let got = h.part(3).unwrap().evaluate(&u);
    assert!((got.re - expect).abs() <= 1e-14 && got.im.abs() <= 1e-15);
}

proptest! {
    #[test]
    fn coordinate_round_trip(seed in any::<u64>(), m in 0.1f64..4.0) {
        let spec = circle(m, 6);
        let u = state(&spec, seed, 1.0);
        let back = to_complex(&from_complex(&u, &spec).unwrap(), &spec).unwrap();
        prop_assert!(back.distance(&u) <= 1e-14);
    }
}

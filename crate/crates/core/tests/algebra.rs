mod common;

use birkhoff_kg::normalform::{is_resonant_key, key_divisor, resonant_split, solve_homological};
use birkhoff_kg::polyalg::{poisson_bracket, HomPoly, MonomialKey};
use birkhoff_kg::spectrum::{build_sphere_spectrum, small_divisor, DivisorQuery, Spectrum, SphereParams};
use num_complex::Complex64;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use common::*;

fn circle(n_max: u32) -> Spectrum {
    build_sphere_spectrum(SphereParams::new(1, 1.0).unwrap(), n_max).unwrap()
}

fn poly(seed: u64, modes: u32, degree: usize, terms: usize) -> HomPoly {
    random_real_poly(&mut ChaCha8Rng::seed_from_u64(seed), modes, degree, terms)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn bracket_matches_dense_oracle(seed in any::<u64>(), df in 1usize..=4, dg in 1usize..=4) {
        let f = poly(seed, 3, df, 4);
        let g = poly(seed ^ 0x9e37, 3, dg, 4);
        let got = to_dense(&poisson_bracket(&f, &g), 3);
        let expect = dense_bracket(&to_dense(&f, 3), &to_dense(&g, 3), 3);
        let scale = f.max_abs() * g.max_abs() * 16.0;
        prop_assert!(dense_diff(&got, &expect) <= 1e-13 * scale);
    }

    #[test]
    fn bracket_is_antisymmetric_and_real(seed in any::<u64>(), df in 2usize..=4, dg in 2usize..=4) {
        let f = poly(seed, 5, df, 3);
        let g = poly(seed.wrapping_add(1), 5, dg, 3);
        let fg = poisson_bracket(&f, &g);
        prop_assert_eq!(&fg, &-&poisson_bracket(&g, &f));
        prop_assert_eq!(fg.degree(), df + dg - 2);
        prop_assert!(fg.reality_check());
    }

    #[test]
    fn bracket_satisfies_jacobi_and_leibniz(seed in any::<u64>()) {
        let f = poly(seed, 4, 3, 3);
        let g = poly(seed.wrapping_add(7), 4, 3, 3);
        let h = poly(seed.wrapping_add(13), 4, 2, 3);
        let scale = f.max_abs() * g.max_abs() * h.max_abs() * 256.0;
        let jac = &(&poisson_bracket(&poisson_bracket(&f, &g), &h)
            + &poisson_bracket(&poisson_bracket(&g, &h), &f))
            + &poisson_bracket(&poisson_bracket(&h, &f), &g);
        prop_assert!(jac.max_abs() <= 1e-13 * scale);
        let lhs = poisson_bracket(&f, &g.product(&h));
        let rhs = &poisson_bracket(&f, &g).product(&h) + &g.product(&poisson_bracket(&f, &h));
        prop_assert!(lhs.max_diff(&rhs) <= 1e-13 * scale);
    }

    #[test]
    fn evaluation_is_real_on_real_polynomials(seed in any::<u64>(), degree in 2usize..=5) {
        let p = poly(seed, 6, degree, 5);
        let u = random_state(&mut ChaCha8Rng::seed_from_u64(seed), 6, 0.7);
        let v = p.evaluate(&u);
        prop_assert!(v.im.abs() <= 1e-13 * v.norm().max(1.0));
    }

    #[test]
    fn resonance_and_divisor_match_oracle(seed in any::<u64>(), degree in 2usize..=6) {
        let spec = circle(6);
        let p = poly(seed, spec.num_modes() as u32, degree, 8);
        for (k, _) in p.terms() {
            prop_assert_eq!(is_resonant_key(k, &spec), oracle_resonant(&spec, k));
            let d = key_divisor(k, &spec);
            if oracle_resonant(&spec, k) {
                prop_assert_eq!(d, 0.0);
            } else {
                prop_assert!((d - oracle_divisor(&spec, k)).abs() <= 1e-12);
                prop_assert_eq!(key_divisor(&k.conjugate(), &spec), -d);
            }
        }
    }

    #[test]
    fn homological_solution_matches_oracle(seed in any::<u64>(), degree in 3usize..=5) {
        let spec = circle(6);
        let raw = poly(seed, spec.num_modes() as u32, degree, 6);
        let split = resonant_split(&raw, &spec);
        prop_assert_eq!(&(&split.resonant + &split.nonresonant), &raw);
        let q = split.nonresonant;
        prop_assume!(!q.is_zero());
        let sol = solve_homological(&q, &spec).unwrap();
        let (f, z) = oracle_homological(&spec, &q);
        prop_assert!(sol.generator.max_diff(&f) <= 1e-14 * f.max_abs().max(1.0));
        prop_assert!(z.is_zero() && sol.normal.is_zero());
        prop_assert!(sol.generator.reality_check());
    }
}

#[test]
fn json_round_trip_is_exact() {
    let p = poly(5, 8, 4, 10);
    let back = HomPoly::from_json(&p.to_json().unwrap()).unwrap();
    assert_eq!(back, p);
}

#[test]
fn bracket_of_simple_monomials() {
    let a = HomPoly::monomial(MonomialKey::new(vec![0, 0], vec![]), Complex64::new(1.0, 0.0));
    let b = HomPoly::monomial(MonomialKey::new(vec![], vec![0, 0]), Complex64::new(1.0, 0.0));
    let c = poisson_bracket(&a, &b);
    assert_eq!(c.coeff(&MonomialKey::new(vec![0], vec![0])), Complex64::new(0.0, -4.0));
    assert_eq!(c.len(), 1);
}

#[test]
fn frequencies_follow_closed_form() {
    for d in 1..=4u32 {
        let spec = build_sphere_spectrum(SphereParams::new(d, 0.7).unwrap(), 10).unwrap();
        for n in 1..=10 {
            assert_eq!(spec.omega(n), omega(d, 0.7, n));
        }
    }
}

#[test]
fn divisors_on_the_circle_match_closed_forms() {
    let spec = build_sphere_spectrum(SphereParams::new(1, 1.0).unwrap(), 4).unwrap();
    let a = small_divisor(&spec, &DivisorQuery::new(vec![1, 1, 2], 2).unwrap()).unwrap();
    assert!((a.abs() - (2.0 * 2f64.sqrt() - 5f64.sqrt())).abs() <= 1e-15);
    let b = small_divisor(&spec, &DivisorQuery::new(vec![3, 1, 2, 2], 2).unwrap()).unwrap();
    assert!((b.abs() - (10f64.sqrt() + 2f64.sqrt() - 2.0 * 5f64.sqrt())).abs() <= 1e-15);
}

//! Quick invariant suite behind the `verify` subcommand.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dynamics::{generator_flow, linear_flow, random_unit_state};
use crate::error::Result;
use crate::kgmodel::{actions, from_complex, to_complex, PolyHamiltonian};
use crate::normalform::{birkhoff, check_action_commutation, homological_residual, resonant_split, solve_homological};
use crate::polyalg::{poisson_bracket, HomPoly, MonomialKey};
use crate::spectrum::Spectrum;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub pass: bool,
    pub value: f64,
    pub tolerance: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub checks: Vec<CheckResult>,
    pub all_passed: bool,
}

fn random_real<R: Rng>(rng: &mut R, modes: u32, degree: usize, terms: usize) -> HomPoly {
    let mut list = Vec::new();
    for _ in 0..terms {
        let ell = rng.gen_range(0..=degree);
        let u: Vec<u32> = (0..ell).map(|_| rng.gen_range(0..modes)).collect();
        let ub: Vec<u32> = (0..degree - ell).map(|_| rng.gen_range(0..modes)).collect();
        let k = MonomialKey::new(u, ub);
        let c = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        list.push((k.conjugate(), c.conj()));
        list.push((k, c));
    }
    HomPoly::from_terms(degree, list)
        .expect("uniform degree")
        .symmetrize_real()
}

fn check(name: &str, value: f64, tolerance: f64) -> CheckResult {
    CheckResult {
        name: name.into(),
        pass: value <= tolerance,
        value,
        tolerance,
    }
}

/// Runs the invariant checks on `h` (and its spectrum) with a fixed seed.
pub fn run_verify(h: &PolyHamiltonian, r0: usize, seed: u64) -> Result<VerifyReport> {
    let spec: &Spectrum = &h.spec;
    let modes = spec.num_modes() as u32;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut checks = Vec::new();

    let (mut anti, mut jacobi, mut reality) = (0.0f64, 0.0f64, 0.0f64);
    for _ in 0..10 {
        let f = random_real(&mut rng, modes.min(6), 3, 3);
        let g = random_real(&mut rng, modes.min(6), 3, 3);
        let k = random_real(&mut rng, modes.min(6), 2, 3);
        let fg = poisson_bracket(&f, &g);
        anti = anti.max(fg.max_diff(&-&poisson_bracket(&g, &f)));
        let jac = &(&poisson_bracket(&fg, &k) + &poisson_bracket(&poisson_bracket(&g, &k), &f))
            + &poisson_bracket(&poisson_bracket(&k, &f), &g);
        let scale = (f.max_abs() * g.max_abs() * k.max_abs()).max(f64::MIN_POSITIVE);
        jacobi = jacobi.max(jac.max_abs() / scale);
        reality = reality.max(fg.reality_defect() / fg.max_abs().max(f64::MIN_POSITIVE));
    }
    checks.push(check("bracket antisymmetry", anti, 0.0));
    checks.push(check("Jacobi identity", jacobi, 1e-12));
    checks.push(check("reality closure", reality, 1e-12));

    let mut hom = 0.0f64;
    for degree in 3..=5 {
        let q = resonant_split(&random_real(&mut rng, modes, degree, 6), spec).nonresonant;
        if q.is_zero() {
            continue;
        }
        let sol = solve_homological(&q, spec)?;
        hom = hom.max(homological_residual(&sol.generator, &q, &sol.normal, spec) / q.max_abs());
    }
    checks.push(check("homological residual", hom, 1e-12));

    let nf = birkhoff(&h.parts, spec, r0)?;
    let comm = nf
        .z_parts
        .iter()
        .map(|z| check_action_commutation(z, spec))
        .fold(0.0, f64::max);
    checks.push(check("normal form commutes with actions", comm, 0.0));
    let steps = nf.diagnostics.iter().map(|d| d.residual).fold(0.0, f64::max);
    checks.push(check("normal form step residuals", steps, 1e-12));

    let u = random_unit_state(spec, 0.0, seed);
    let j0 = actions(&u, spec);
    let j1 = actions(&linear_flow(&u, 3.7, spec), spec);
    let lin = j0.iter().zip(&j1).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    checks.push(check("linear flow preserves actions", lin, 1e-14));

    let back = to_complex(&from_complex(&u, spec)?, spec)?;
    checks.push(check("coordinate round trip", back.distance(&u), 1e-14));

    if let Some(f) = nf.generators.iter().find(|g| !g.is_zero()) {
        let small = u.scaled(0.05);
        let there = generator_flow(f, &small, 1.0)?;
        let again = generator_flow(f, &there, -1.0)?;
        checks.push(check("generator flow reversibility", again.distance(&small) / small.norm(), 1e-8));
    }

    let all_passed = checks.iter().all(|c| c.pass);
    Ok(VerifyReport { checks, all_passed })
}

//! Resonant splitting, the homological equation `{F, G₂} + Q = Z`, Lie
//! transforms, and the Birkhoff iteration `G ∘ T = G₂ + Z + R` at finite
//! truncation.
//!
//! Resonance is decided combinatorially: a monomial is resonant when its `u`
//! slots and `ū` slots carry the same multiset of clusters. The size of the
//! divisor only enters as a quality check on the mass.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::polyalg::{class_norm, poisson_bracket, HomPoly, MonomialKey, PolyJson};
use crate::spectrum::Spectrum;

/// Hard floor (relative to `max ω`) on divisors used by the homological solver.
pub const DIVISOR_FLOOR_REL: f64 = 1e-10;

/// `(ν, N)` at which step diagnostics record the class norms of `Q` and `F`.
pub const DIAGNOSTIC_NU: f64 = 1.0;
pub const DIAGNOSTIC_N: u32 = 4;

pub fn is_resonant_key(key: &MonomialKey, spec: &Spectrum) -> bool {
    if key.u().len() != key.ubar().len() {
        return false;
    }
    let (a, b) = key.cluster_multisets(spec);
    a == b
}

/// `Ω = Σ_{u slots} ω − Σ_{ū slots} ω`, summed over sorted clusters so that
/// equal cluster multisets give exactly zero and conjugate keys give exactly
/// opposite values.
pub fn key_divisor(key: &MonomialKey, spec: &Spectrum) -> f64 {
    let (a, b) = key.cluster_multisets(spec);
    let plus: f64 = a.iter().map(|&n| spec.omega(n)).sum();
    let minus: f64 = b.iter().map(|&n| spec.omega(n)).sum();
    plus - minus
}

#[derive(Clone, Debug, PartialEq)]
pub struct SplitResult {
    pub resonant: HomPoly,
    pub nonresonant: HomPoly,
}

pub fn resonant_split(p: &HomPoly, spec: &Spectrum) -> SplitResult {
    let (resonant, nonresonant) = p.partition(|k| is_resonant_key(k, spec));
    SplitResult {
        resonant,
        nonresonant,
    }
}

/// `{P, G₂}` with `G₂ = Σ_a ω_a u_a ū_a`: each coefficient times `−iΩ`.
pub fn bracket_with_g2(p: &HomPoly, spec: &Spectrum) -> HomPoly {
    p.map_coeffs(|k, c| {
        let omega = key_divisor(k, spec);
        // −iΩ(x + iy) = Ωy − iΩx
        Complex64::new(omega * c.im, -omega * c.re)
    })
}

/// `G₂` as an explicit quadratic polynomial.
pub fn g2_polynomial(spec: &Spectrum) -> HomPoly {
    HomPoly::from_terms(
        2,
        spec.modes().iter().map(|m| {
            (
                MonomialKey::new(vec![m.mode_id], vec![m.mode_id]),
                Complex64::new(spec.omega(m.cluster), 0.0),
            )
        }),
    )
    .expect("quadratic keys")
}

/// `J_n = Σ_{a ∈ cluster n} u_a ū_a`.
pub fn action_polynomial(spec: &Spectrum, n: u32) -> HomPoly {
    HomPoly::from_terms(
        2,
        spec.cluster_modes(n)
            .map(|a| (MonomialKey::new(vec![a], vec![a]), Complex64::new(1.0, 0.0))),
    )
    .expect("quadratic keys")
}

#[derive(Clone, Debug, PartialEq)]
pub struct HomologicalSolution {
    /// Generator `F`, supported on the non-resonant keys only.
    pub generator: HomPoly,
    /// Resonant part `Z` of the input.
    pub normal: HomPoly,
    pub min_divisor: f64,
    pub max_divisor: f64,
}

/// Solves `{F, G₂} + Q = Z` with `Z` the resonant part of `Q` and
/// `F_key = Q_key / (iΩ_key)` on every non-resonant key.
pub fn solve_homological(q: &HomPoly, spec: &Spectrum) -> Result<HomologicalSolution> {
    if !q.reality_check() {
        return Err(Error::InvalidParameter(format!(
            "homological equation needs a real-valued right-hand side (defect {:e})",
            q.reality_defect()
        )));
    }
    let split = resonant_split(q, spec);
    let floor = DIVISOR_FLOOR_REL * spec.max_omega();
    let mut min_divisor = f64::INFINITY;
    let mut max_divisor: f64 = 0.0;
    for (k, _) in split.nonresonant.terms() {
        let omega = key_divisor(k, spec);
        if omega.abs() < floor {
            return Err(Error::NearResonant {
                clusters: k.clusters(spec),
                ell: k.bidegree(),
                divisor: omega,
                step: None,
            });
        }
        min_divisor = min_divisor.min(omega.abs());
        max_divisor = max_divisor.max(omega.abs());
    }
    let generator = split.nonresonant.map_coeffs(|k, c| {
        let omega = key_divisor(k, spec);
        // c / (iΩ) = (y − ix) / Ω
        Complex64::new(c.im / omega, -c.re / omega)
    });
    Ok(HomologicalSolution {
        generator,
        normal: split.resonant,
        min_divisor: if min_divisor.is_finite() { min_divisor } else { 0.0 },
        max_divisor,
    })
}

/// `‖{F, G₂} + Q − Z‖∞`.
pub fn homological_residual(f: &HomPoly, q: &HomPoly, z: &HomPoly, spec: &Spectrum) -> f64 {
    let lhs = &bracket_with_g2(f, spec) + q;
    lhs.max_diff(z)
}

fn add_into(slot: &mut HomPoly, p: &HomPoly) {
    if p.is_zero() {
        return;
    }
    *slot = &*slot + p;
}

/// Degree components `3..=max_degree` of `Σ_n (Ad F)ⁿ (G₂ + H) / n!` minus
/// `G₂` itself, with `(Ad F) h = {F, h}`; this is `(G₂ + H) ∘ Φ¹_F` truncated.
pub fn lie_transform(
    h: &[HomPoly],
    f: &HomPoly,
    max_degree: usize,
    spec: &Spectrum,
) -> Result<Vec<HomPoly>> {
    if f.degree() <= 2 {
        return Err(Error::InvalidParameter(format!(
            "Lie transform generator must have degree >= 3, got {}",
            f.degree()
        )));
    }
    if max_degree < 3 {
        return Err(Error::InvalidParameter("max_degree must be >= 3".into()));
    }
    let slots = max_degree - 2;
    let mut out: Vec<HomPoly> = (3..=max_degree).map(HomPoly::zero).collect();
    for p in h {
        if p.degree() < 3 {
            return Err(Error::InvalidParameter(format!(
                "Hamiltonian parts must have degree >= 3 (G₂ is implicit), got {}",
                p.degree()
            )));
        }
        if p.degree() <= max_degree {
            add_into(&mut out[p.degree() - 3], p);
        }
    }
    if f.is_zero() {
        return Ok(out);
    }

    // first application: {F, G₂} plus {F, H_d}
    let mut current: Vec<HomPoly> = (3..=max_degree).map(HomPoly::zero).collect();
    if f.degree() <= max_degree {
        current[f.degree() - 3] = bracket_with_g2(f, spec);
    }
    for p in out.clone() {
        let deg = p.degree() + f.degree() - 2;
        if !p.is_zero() && deg <= max_degree {
            add_into(&mut current[deg - 3], &poisson_bracket(f, &p));
        }
    }
    let mut order = 1usize;
    while current.iter().any(|p| !p.is_zero()) {
        for (slot, p) in out.iter_mut().zip(&current) {
            add_into(slot, p);
        }
        order += 1;
        let mut next: Vec<HomPoly> = (3..=max_degree).map(HomPoly::zero).collect();
        for p in &current {
            let deg = p.degree() + f.degree() - 2;
            if !p.is_zero() && deg <= max_degree {
                let b = poisson_bracket(f, p).scale(Complex64::new(1.0 / order as f64, 0.0));
                add_into(&mut next[deg - 3], &b);
            }
        }
        current = next;
        debug_assert!(order <= slots + 1);
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepDiagnostics {
    pub step: usize,
    pub degree: usize,
    pub max_divisor_used: f64,
    pub min_divisor_used: f64,
    /// `‖{F, G₂} + Q − Z‖∞ / ‖Q‖∞` (0 when `Q` vanishes).
    pub residual: f64,
    pub resonant_terms: usize,
    pub nonresonant_terms: usize,
    /// Class-norm constants of the non-resonant input and of the generator.
    pub class_norm_q: f64,
    pub class_norm_f: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct NormalFormResult {
    /// Cluster frequencies `ω_1..ω_{n_max}` defining `G₂`.
    pub g2: Vec<f64>,
    /// Resonant normalized parts, degrees `3..=r0 + 2`.
    pub z_parts: Vec<HomPoly>,
    /// Generators `F^{(1)}, …, F^{(r0)}`; `F^{(j)}` has degree `j + 2`.
    pub generators: Vec<HomPoly>,
    /// Lowest degree of the discarded remainder.
    pub dropped_degree: usize,
    pub diagnostics: Vec<StepDiagnostics>,
}

impl NormalFormResult {
    pub fn z_part(&self, degree: usize) -> Option<&HomPoly> {
        self.z_parts.iter().find(|p| p.degree() == degree)
    }

    pub fn r0(&self) -> usize {
        self.generators.len()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormalFormJson {
    pub g2: Vec<f64>,
    pub z_parts: Vec<PolyJson>,
    pub generators: Vec<PolyJson>,
    pub dropped_degree: usize,
    pub diagnostics: Vec<StepDiagnostics>,
}

impl From<&NormalFormResult> for NormalFormJson {
    fn from(r: &NormalFormResult) -> Self {
        NormalFormJson {
            g2: r.g2.clone(),
            z_parts: r.z_parts.iter().map(PolyJson::from).collect(),
            generators: r.generators.iter().map(PolyJson::from).collect(),
            dropped_degree: r.dropped_degree,
            diagnostics: r.diagnostics.clone(),
        }
    }
}

/// Runs `r0` Birkhoff steps on `G₂ + Σ h`, normalizing one degree per step.
pub fn birkhoff(h: &[HomPoly], spec: &Spectrum, r0: usize) -> Result<NormalFormResult> {
    if r0 < 1 {
        return Err(Error::InvalidParameter("r0 must be >= 1".into()));
    }
    let top = r0 + 2;
    let mut series: Vec<HomPoly> = (3..=top).map(HomPoly::zero).collect();
    for p in h {
        if p.degree() < 3 {
            return Err(Error::InvalidParameter(format!(
                "Hamiltonian parts must have degree >= 3, got {}",
                p.degree()
            )));
        }
        if !p.reality_check() {
            return Err(Error::InvalidParameter(format!(
                "degree-{} part is not real valued (defect {:e})",
                p.degree(),
                p.reality_defect()
            )));
        }
        if p.degree() <= top {
            add_into(&mut series[p.degree() - 3], p);
        }
    }

    let mut generators = Vec::with_capacity(r0);
    let mut diagnostics = Vec::with_capacity(r0);
    for r in 0..r0 {
        let degree = r + 3;
        let q = series[degree - 3].symmetrize_real();
        let sol = solve_homological(&q, spec).map_err(|e| match e {
            Error::NearResonant {
                clusters,
                ell,
                divisor,
                ..
            } => Error::NearResonant {
                clusters,
                ell,
                divisor,
                step: Some(r + 1),
            },
            other => other,
        })?;
        let qmax = q.max_abs();
        let residual = if qmax > 0.0 {
            homological_residual(&sol.generator, &q, &sol.normal, spec) / qmax
        } else {
            0.0
        };
        let nonres = q.len() - sol.normal.len();
        diagnostics.push(StepDiagnostics {
            step: r + 1,
            degree,
            max_divisor_used: sol.max_divisor,
            min_divisor_used: sol.min_divisor,
            residual,
            resonant_terms: sol.normal.len(),
            nonresonant_terms: nonres,
            class_norm_q: class_norm(&resonant_split(&q, spec).nonresonant, spec, DIAGNOSTIC_NU, DIAGNOSTIC_N)
                .best_constant,
            class_norm_f: class_norm(&sol.generator, spec, DIAGNOSTIC_NU, DIAGNOSTIC_N).best_constant,
        });
        if !sol.generator.is_zero() {
            series = lie_transform(&series, &sol.generator, top, spec)?
                .into_iter()
                .map(|p| p.symmetrize_real())
                .collect();
        }
        // the transformed degree-`degree` part is Q + {F, G₂} = Z
        series[degree - 3] = sol.normal.clone();
        for p in &series {
            assert!(p.degree() <= top, "degree bound violated");
        }
        generators.push(sol.generator);
    }
    Ok(NormalFormResult {
        g2: spec.omegas().to_vec(),
        z_parts: series,
        generators,
        dropped_degree: top + 1,
        diagnostics,
    })
}

/// `max_a max |coeff({J_a, Z})|` over all clusters `a`.
pub fn check_action_commutation(z: &HomPoly, spec: &Spectrum) -> f64 {
    (1..=spec.n_max())
        .map(|a| poisson_bracket(&action_polynomial(spec, a), z).max_abs())
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectrum::{build_sphere_spectrum, SphereParams};

    fn s1(n_max: u32) -> Spectrum {
        build_sphere_spectrum(SphereParams::new(1, 1.0).unwrap(), n_max).unwrap()
    }

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn split_examples_on_the_circle() {
        let spec = s1(6);
        let m = |k: i64| spec.mode_for_fourier(k).unwrap();
        let res = MonomialKey::new(vec![m(3), m(5)], vec![m(5), m(3)]);
        let non = MonomialKey::new(vec![m(3), m(5)], vec![m(5), m(4)]);
        let mixed = MonomialKey::new(vec![m(3), m(5)], vec![m(-3), m(5)]);
        assert!(is_resonant_key(&res, &spec));
        assert!(!is_resonant_key(&non, &spec));
        assert!(is_resonant_key(&mixed, &spec));
        let odd = MonomialKey::new(vec![m(1), m(1)], vec![m(2)]);
        assert!(!is_resonant_key(&odd, &spec));

        let p = HomPoly::from_terms(
            4,
            [(res.clone(), c(1.0, 0.0)), (non.clone(), c(2.0, 0.5)), (mixed, c(-1.0, 0.0))],
        )
        .unwrap();
        let split = resonant_split(&p, &spec);
        assert_eq!(split.resonant.len(), 2);
        assert_eq!(split.nonresonant.len(), 1);
        assert_eq!(&split.resonant + &split.nonresonant, p);
        assert_eq!(bracket_with_g2(&split.resonant, &spec).len(), 0);
    }

    #[test]
    fn g2_multiplier() {
        let spec = s1(4);
        let m = |k: i64| spec.mode_for_fourier(k).unwrap();
        let key = MonomialKey::new(vec![m(1), m(2)], vec![m(3), m(4)]);
        let p = HomPoly::monomial(key.clone(), c(1.0, 0.0));
        let b = bracket_with_g2(&p, &spec);
        let expect = 2f64.sqrt() + 5f64.sqrt() - 10f64.sqrt() - 17f64.sqrt();
        assert!((b.coeff(&key) - c(0.0, -expect)).norm() < 1e-15);
    }

    #[test]
    fn trivial_homological_cases() {
        let spec = s1(4);
        let sol = solve_homological(&HomPoly::zero(4), &spec).unwrap();
        assert!(sol.generator.is_zero() && sol.normal.is_zero());
        let j = action_polynomial(&spec, 2);
        let q = j.product(&action_polynomial(&spec, 3));
        let sol = solve_homological(&q, &spec).unwrap();
        assert!(sol.generator.is_zero());
        assert_eq!(sol.normal, q);
    }

    #[test]
    fn non_real_rhs_rejected() {
        let spec = s1(3);
        let q = HomPoly::monomial(MonomialKey::new(vec![0, 2], vec![4]), c(1.0, 0.0));
        assert!(matches!(solve_homological(&q, &spec), Err(Error::InvalidParameter(_))));
    }

    #[test]
    fn exact_resonance_raises_near_resonant_error() {
        // S^3 with m = 1: ω_n = n + 1, so ω_1 + ω_1 − ω_3 = 0 on a non-resonant key
        let spec = build_sphere_spectrum(SphereParams::new(3, 1.0).unwrap(), 3).unwrap();
        let a = spec.cluster_modes(1).start;
        let b = spec.cluster_modes(3).start;
        let key = MonomialKey::new(vec![a, a], vec![b]);
        let q = HomPoly::from_terms(3, [(key.clone(), c(1.0, 0.0)), (key.conjugate(), c(1.0, 0.0))]).unwrap();
        match solve_homological(&q, &spec) {
            Err(Error::NearResonant { clusters, ell, .. }) => {
                assert_eq!(ell, if clusters == vec![1, 1, 3] { 2 } else { 1 });
            }
            other => panic!("expected near-resonant error, got {other:?}"),
        }
        match birkhoff(&[q], &spec, 1) {
            Err(Error::NearResonant { step, .. }) => assert_eq!(step, Some(1)),
            other => panic!("expected near-resonant error, got {other:?}"),
        }
    }

    #[test]
    fn lie_transform_edge_cases() {
        let spec = s1(3);
        let h = vec![HomPoly::monomial(MonomialKey::new(vec![0], vec![0, 2]), c(1.0, 0.0))];
        let out = lie_transform(&h, &HomPoly::zero(3), 5, &spec).unwrap();
        assert_eq!(out.len(), 3);
        assert_eq!(out[0], h[0]);
        assert!(out[1].is_zero() && out[2].is_zero());
        let quad = action_polynomial(&spec, 1);
        assert!(lie_transform(&h, &quad, 5, &spec).is_err());
    }

    #[test]
    fn commutation_examples() {
        let spec = s1(4);
        let m = |k: i64| spec.mode_for_fourier(k).unwrap();
        let j1 = action_polynomial(&spec, 1);
        assert_eq!(check_action_commutation(&j1.product(&j1), &spec), 0.0);
        let key = MonomialKey::new(vec![m(1), m(2)], vec![m(3), m(4)]);
        let z = HomPoly::monomial(key, c(1.0, 0.0));
        for a in 1..=4 {
            let r = poisson_bracket(&action_polynomial(&spec, a), &z).max_abs();
            assert!(r > 0.0);
        }
        assert!(check_action_commutation(&z, &spec) > 0.0);
    }

    #[test]
    fn cubic_only_first_step() {
        let spec = s1(3);
        let m = |k: i64| spec.mode_for_fourier(k).unwrap();
        let key = MonomialKey::new(vec![m(1), m(1)], vec![m(2)]);
        let q = HomPoly::from_terms(3, [(key.clone(), c(0.3, 0.1)), (key.conjugate(), c(0.3, -0.1))]).unwrap();
        let nf = birkhoff(&[q], &spec, 1).unwrap();
        assert_eq!(nf.generators.len(), 1);
        assert_eq!(nf.generators[0].len(), 2);
        assert!(nf.z_parts[0].is_zero());
        assert_eq!(nf.dropped_degree, 4);
        assert!(nf.diagnostics[0].residual <= 1e-15);

        let nf = birkhoff(&[], &spec, 3).unwrap();
        assert!(nf.z_parts.iter().all(HomPoly::is_zero));
        assert!(nf.generators.iter().all(HomPoly::is_zero));
    }
}

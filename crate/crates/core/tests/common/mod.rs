//! Independent reference implementations used as test oracles.
#![allow(dead_code)]

use std::collections::BTreeMap;
use std::f64::consts::PI;

use birkhoff_kg::polyalg::{HomPoly, MonomialKey, State};
use birkhoff_kg::spectrum::Spectrum;
use num_complex::Complex64;
use rand::Rng;

/// Exponent-vector representation: `[α_0..α_{M-1}, β_0..β_{M-1}]` for
/// `Π u^α ū^β` on `M` modes.
pub type Dense = BTreeMap<Vec<u32>, Complex64>;

pub fn to_dense(p: &HomPoly, modes: usize) -> Dense {
    let mut out = Dense::new();
    for (k, c) in p.terms() {
        let mut e = vec![0u32; 2 * modes];
        for &m in k.u() {
            e[m as usize] += 1;
        }
        for &m in k.ubar() {
            e[modes + m as usize] += 1;
        }
        *out.entry(e).or_default() += *c;
    }
    out
}

fn dense_derivative(p: &Dense, slot: usize) -> Dense {
    let mut out = Dense::new();
    for (e, c) in p {
        if e[slot] > 0 {
            let mut f = e.clone();
            f[slot] -= 1;
            *out.entry(f).or_default() += c * e[slot] as f64;
        }
    }
    out
}

fn dense_mul(a: &Dense, b: &Dense) -> Dense {
    let mut out = Dense::new();
    for (ea, ca) in a {
        for (eb, cb) in b {
            let e: Vec<u32> = ea.iter().zip(eb).map(|(x, y)| x + y).collect();
            *out.entry(e).or_default() += ca * cb;
        }
    }
    out
}

fn dense_axpy(acc: &mut Dense, factor: Complex64, p: &Dense) {
    for (e, c) in p {
        *acc.entry(e.clone()).or_default() += factor * c;
    }
}

/// `{F1, F2} = i Σ_j (∂_{u_j}F2 ∂_{ū_j}F1 − ∂_{ū_j}F2 ∂_{u_j}F1)`.
pub fn dense_bracket(f1: &Dense, f2: &Dense, modes: usize) -> Dense {
    let mut out = Dense::new();
    let i = Complex64::i();
    for j in 0..modes {
        let a = dense_mul(&dense_derivative(f2, j), &dense_derivative(f1, modes + j));
        let b = dense_mul(&dense_derivative(f2, modes + j), &dense_derivative(f1, j));
        dense_axpy(&mut out, i, &a);
        dense_axpy(&mut out, -i, &b);
    }
    out
}

/// Largest coefficient difference between two dense polynomials.
pub fn dense_diff(a: &Dense, b: &Dense) -> f64 {
    let mut worst: f64 = 0.0;
    for (e, c) in a {
        worst = worst.max((c - b.get(e).copied().unwrap_or_default()).norm());
    }
    for (e, c) in b {
        if !a.contains_key(e) {
            worst = worst.max(c.norm());
        }
    }
    worst
}

pub fn dense_max(a: &Dense) -> f64 {
    a.values().map(|c| c.norm()).fold(0.0, f64::max)
}

/// `ω_n = sqrt(n(n + d − 1) + m²)` computed from scratch.
pub fn omega(d: u32, m: f64, n: u32) -> f64 {
    ((n * (n + d - 1)) as f64 + m * m).sqrt()
}

pub fn clusters_of(spec: &Spectrum, modes: &[u32]) -> Vec<u32> {
    let mut c: Vec<u32> = modes.iter().map(|&a| spec.cluster_of(a)).collect();
    c.sort_unstable();
    c
}

pub fn oracle_resonant(spec: &Spectrum, k: &MonomialKey) -> bool {
    clusters_of(spec, k.u()) == clusters_of(spec, k.ubar())
}

pub fn oracle_divisor(spec: &Spectrum, k: &MonomialKey) -> f64 {
    let p = spec.params();
    let w = |ms: &[u32]| ms.iter().map(|&a| omega(p.d, p.m, spec.cluster_of(a))).sum::<f64>();
    w(k.u()) - w(k.ubar())
}

/// Naive homological solve: `F = Q/(iΩ)` off resonance, `Z = Q` on it.
pub fn oracle_homological(spec: &Spectrum, q: &HomPoly) -> (HomPoly, HomPoly) {
    let mut f = Vec::new();
    let mut z = Vec::new();
    for (k, c) in q.terms() {
        if oracle_resonant(spec, k) {
            z.push((k.clone(), *c));
        } else {
            f.push((k.clone(), c / (Complex64::i() * oracle_divisor(spec, k))));
        }
    }
    (
        HomPoly::from_terms(q.degree(), f).unwrap(),
        HomPoly::from_terms(q.degree(), z).unwrap(),
    )
}

pub fn from_dense(d: &Dense, modes: usize, degree: usize) -> HomPoly {
    let terms = d.iter().filter(|(_, c)| c.norm() > 0.0).map(|(e, c)| {
        let mut u = Vec::new();
        let mut ub = Vec::new();
        for m in 0..modes {
            for _ in 0..e[m] {
                u.push(m as u32);
            }
            for _ in 0..e[modes + m] {
                ub.push(m as u32);
            }
        }
        (MonomialKey::new(u, ub), *c)
    });
    HomPoly::from_terms(degree, terms).unwrap()
}

/// Random real polynomial: random keys plus their conjugates.
pub fn random_real_poly<R: Rng>(rng: &mut R, modes: u32, degree: usize, terms: usize) -> HomPoly {
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
    HomPoly::from_terms(degree, list).unwrap().symmetrize_real()
}

pub fn random_state<R: Rng>(rng: &mut R, modes: usize, amplitude: f64) -> State {
    State::from_amplitudes(
        (0..modes)
            .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)) * amplitude)
            .collect(),
    )
}

/// `v(x)` on the circle from complex amplitudes, independently of the
/// library's coordinate map.
pub fn circle_field(spec: &Spectrum, u: &State, x: f64) -> f64 {
    let m = spec.params().m;
    let mut v = 0.0;
    for n in 1..=spec.n_max() {
        let w = omega(1, m, n);
        for k in [n as i64, -(n as i64)] {
            let a = spec.mode_for_fourier(k).unwrap();
            let b = spec.mode_for_fourier(-k).unwrap();
            // q̂_k = (u_k − conj u_{−k})/(i√2), v̂_k = ω^{-1/2} q̂_k
            let qk = (u.get(a) - u.get(b).conj()) / (Complex64::i() * 2f64.sqrt());
            let vk = qk / w.sqrt();
            v += (vk * Complex64::from_polar(1.0, k as f64 * x)).re / (2.0 * PI).sqrt();
        }
    }
    v
}

/// Trapezoidal quadrature of `∫_0^{2π} g` with `n` points (exact for
/// trigonometric polynomials of degree below `n`).
pub fn circle_quadrature(n: usize, g: impl Fn(f64) -> f64) -> f64 {
    let h = 2.0 * PI / n as f64;
    (0..n).map(|j| g(j as f64 * h)).sum::<f64>() * h
}

//! The truncated Klein–Gordon Hamiltonian `G = G₂ + ∫ f(x, v) dx` in complex
//! mode coordinates, the map between `(v, ∂ₜv)` and amplitudes `u`, and the
//! cluster actions.
//!
//! Coordinates: `p = Λ^{-1/2} ∂ₜv`, `q = Λ^{1/2} v`, `u = (p + iq)/√2`, with
//! functions expanded in the orthonormal basis of the spectrum's modes
//! (`e^{ikx}/√(2π)` on the circle).

use std::collections::{BTreeMap, HashMap};
use std::f64::consts::{PI, SQRT_2};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::polyalg::{HomPoly, MonomialKey, State};
use crate::spectrum::{ModeId, Spectrum};

/// `f(x, v) = Σ_p a_p(x) vᵖ` with `a_p(x) = a_p + Σ_{q≠0} w_{p,q} e^{iqx}`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Nonlinearity {
    coefficients: BTreeMap<u32, f64>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    modulation: BTreeMap<u32, BTreeMap<i64, Complex64>>,
}

impl Nonlinearity {
    pub fn new(coefficients: &[(u32, f64)]) -> Result<Self> {
        let mut map = BTreeMap::new();
        for &(p, a) in coefficients {
            if p < 3 {
                return Err(Error::InvalidParameter(format!(
                    "nonlinearity powers must be >= 3, got {p}"
                )));
            }
            if !a.is_finite() {
                return Err(Error::InvalidParameter(format!("coefficient of v^{p} is not finite")));
            }
            *map.entry(p).or_insert(0.0) += a;
        }
        Ok(Self {
            coefficients: map,
            modulation: BTreeMap::new(),
        })
    }

    /// `v³`.
    pub fn cubic() -> Self {
        Self::new(&[(3, 1.0)]).expect("valid")
    }

    /// Adds the Fourier multipliers `w_q e^{iqx}` (`q ≠ 0`) to `a_p(x)`.
    /// Real-valuedness requires `w_{-q} = conj(w_q)`.
    pub fn with_modulation(mut self, p: u32, terms: &[(i64, Complex64)]) -> Result<Self> {
        if p < 3 {
            return Err(Error::InvalidParameter(format!(
                "nonlinearity powers must be >= 3, got {p}"
            )));
        }
        let entry = self.modulation.entry(p).or_default();
        for &(q, w) in terms {
            if q == 0 {
                return Err(Error::InvalidParameter(
                    "modulation index 0 belongs in the constant coefficient".into(),
                ));
            }
            if !(w.re.is_finite() && w.im.is_finite()) {
                return Err(Error::InvalidParameter(format!("modulation w_{q} is not finite")));
            }
            *entry.entry(q).or_insert(Complex64::new(0.0, 0.0)) += w;
        }
        for (&q, &w) in entry.iter() {
            let partner = entry.get(&-q).copied().unwrap_or_default();
            if (partner - w.conj()).norm() > 0.0 {
                return Err(Error::InvalidParameter(format!(
                    "modulation of v^{p} is not real: w_{} != conj(w_{q})",
                    -q
                )));
            }
        }
        Ok(self)
    }

    pub fn coefficients(&self) -> &BTreeMap<u32, f64> {
        &self.coefficients
    }

    pub fn is_modulated(&self) -> bool {
        self.modulation.values().any(|m| !m.is_empty())
    }

    pub fn lowest_power(&self) -> Option<u32> {
        self.powers().into_iter().next()
    }

    pub fn powers(&self) -> Vec<u32> {
        let mut p: Vec<u32> = self
            .coefficients
            .keys()
            .chain(self.modulation.keys())
            .copied()
            .collect();
        p.sort_unstable();
        p.dedup();
        p
    }

    /// Fourier coefficients of `a_p(x)`, constant term at index 0.
    pub fn fourier_multipliers(&self, p: u32) -> BTreeMap<i64, Complex64> {
        let mut out = self.modulation.get(&p).cloned().unwrap_or_default();
        if let Some(&a) = self.coefficients.get(&p) {
            if a != 0.0 {
                out.insert(0, Complex64::new(a, 0.0));
            }
        }
        out
    }

    /// `f(x, v)`.
    pub fn value(&self, x: f64, v: f64) -> f64 {
        self.powers()
            .into_iter()
            .map(|p| {
                let a: f64 = self
                    .fourier_multipliers(p)
                    .iter()
                    .map(|(&q, w)| (w * Complex64::from_polar(1.0, q as f64 * x)).re)
                    .sum();
                a * v.powi(p as i32)
            })
            .sum()
    }
}

/// Integrals `∫ Y_{a_1} ⋯ Y_{a_p}` of real basis functions on `S^d`, `d ≥ 2`.
///
/// JSON schema: `{"d": 2, "n_max": 3, "entries": [{"modes": [0, 0, 5], "value": 0.28}]}`
/// where `modes` are mode ids of the spectrum. Missing products are zero.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CouplingTable {
    pub d: u32,
    pub n_max: u32,
    pub entries: Vec<CouplingEntry>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CouplingEntry {
    pub modes: Vec<ModeId>,
    pub value: f64,
}

impl CouplingTable {
    fn index(&self, spec: &Spectrum) -> Result<HashMap<Vec<ModeId>, f64>> {
        if self.d != spec.dimension() || self.n_max != spec.n_max() {
            return Err(Error::InvalidParameter(format!(
                "coupling table is for d={}, n_max={} but the spectrum has d={}, n_max={}",
                self.d,
                self.n_max,
                spec.dimension(),
                spec.n_max()
            )));
        }
        let mut map = HashMap::new();
        for e in &self.entries {
            if let Some(&bad) = e.modes.iter().find(|&&m| !spec.contains_mode(m)) {
                return Err(Error::Range(format!("coupling table mode {bad} outside the truncation")));
            }
            if !e.value.is_finite() {
                return Err(Error::InvalidParameter("coupling value is not finite".into()));
            }
            let mut k = e.modes.clone();
            k.sort_unstable();
            *map.entry(k).or_insert(0.0) += e.value;
        }
        Ok(map)
    }
}

/// `G = G₂ + Σ parts`; `G₂` is implicit in the spectrum.
#[derive(Clone, Debug, PartialEq)]
pub struct PolyHamiltonian {
    pub spec: Spectrum,
    /// Homogeneous parts of degree `3..=max_degree`, in increasing degree.
    pub parts: Vec<HomPoly>,
}

impl PolyHamiltonian {
    pub fn new(spec: Spectrum, parts: Vec<HomPoly>) -> Result<Self> {
        for p in &parts {
            if p.degree() < 3 {
                return Err(Error::InvalidParameter(format!(
                    "Hamiltonian parts must have degree >= 3, got {}",
                    p.degree()
                )));
            }
            if !p.reality_check() {
                return Err(Error::InvalidParameter(format!(
                    "degree-{} part is not real valued",
                    p.degree()
                )));
            }
            if let Some(m) = p.modes().find(|&m| !spec.contains_mode(m)) {
                return Err(Error::Range(format!("mode {m} outside the truncation")));
            }
        }
        Ok(Self { spec, parts })
    }

    pub fn part(&self, degree: usize) -> Option<&HomPoly> {
        self.parts.iter().find(|p| p.degree() == degree)
    }

    pub fn g2_value(&self, state: &State) -> f64 {
        g2_value(&self.spec, state)
    }

    /// `G₂(u) + Σ_j P_j(u)` (real part).
    pub fn energy(&self, state: &State) -> f64 {
        self.g2_value(state) + self.parts.iter().map(|p| p.evaluate(state).re).sum::<f64>()
    }
}

pub fn g2_value(spec: &Spectrum, state: &State) -> f64 {
    spec.modes()
        .iter()
        .map(|m| spec.omega(m.cluster) * state.get(m.mode_id).norm_sqr())
        .sum()
}

/// Real Cauchy data `(v, ∂ₜv)` as basis coefficients indexed by mode id.
/// On the circle coefficient `k` and `-k` are conjugate; on higher spheres
/// the basis is real and every coefficient is real.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RealState {
    pub v: Vec<Complex64>,
    pub v_t: Vec<Complex64>,
}

impl RealState {
    pub fn zeros(spec: &Spectrum) -> Self {
        let z = vec![Complex64::new(0.0, 0.0); spec.num_modes()];
        Self { v: z.clone(), v_t: z }
    }

    /// Largest violation of the conjugate symmetry of either field.
    pub fn symmetry_defect(&self, spec: &Spectrum) -> f64 {
        let mut worst: f64 = 0.0;
        for field in [&self.v, &self.v_t] {
            for m in spec.modes() {
                let a = m.mode_id as usize;
                let b = spec.conjugate_mode(m.mode_id) as usize;
                worst = worst.max((field[a] - field[b].conj()).norm());
            }
        }
        worst
    }

    /// `v(x)` on the circle.
    pub fn eval_v(&self, spec: &Spectrum, x: f64) -> Result<f64> {
        circle_only(spec)?;
        let norm = (2.0 * PI).sqrt();
        Ok(spec
            .modes()
            .iter()
            .map(|m| (self.v[m.mode_id as usize] * Complex64::from_polar(1.0, m.intra_label as f64 * x)).re)
            .sum::<f64>()
            / norm)
    }
}

fn circle_only(spec: &Spectrum) -> Result<()> {
    if spec.dimension() != 1 {
        return Err(Error::UnsupportedManifold(format!(
            "operation needs S^1, spectrum is S^{}",
            spec.dimension()
        )));
    }
    Ok(())
}

fn check_len(len: usize, spec: &Spectrum) -> Result<()> {
    if len != spec.num_modes() {
        return Err(Error::Range(format!(
            "expected {} coefficients, got {len}",
            spec.num_modes()
        )));
    }
    Ok(())
}

/// `u_a = (p_a + i q_a)/√2` with `p = Λ^{-1/2} ∂ₜv`, `q = Λ^{1/2} v`.
pub fn to_complex(rs: &RealState, spec: &Spectrum) -> Result<State> {
    check_len(rs.v.len(), spec)?;
    check_len(rs.v_t.len(), spec)?;
    let amps = spec
        .modes()
        .iter()
        .map(|m| {
            let a = m.mode_id as usize;
            let w = spec.omega(m.cluster).sqrt();
            let p = rs.v_t[a] / w;
            let q = rs.v[a] * w;
            (p + Complex64::i() * q) / SQRT_2
        })
        .collect();
    Ok(State::from_amplitudes(amps))
}

/// Inverse of [`to_complex`]: `p_a = (u_a + ū_{a*})/√2`, `q_a = (u_a − ū_{a*})/(i√2)`
/// with `a*` the conjugate mode.
pub fn from_complex(state: &State, spec: &Spectrum) -> Result<RealState> {
    check_len(state.len(), spec)?;
    let mut rs = RealState::zeros(spec);
    for m in spec.modes() {
        let a = m.mode_id;
        let ua = state.get(a);
        let ub = state.get(spec.conjugate_mode(a)).conj();
        let p = (ua + ub) / SQRT_2;
        let q = (ua - ub) / (Complex64::i() * SQRT_2);
        let w = spec.omega(m.cluster).sqrt();
        rs.v[a as usize] = q / w;
        rs.v_t[a as usize] = p * w;
    }
    Ok(rs)
}

/// `(−i)^e` applied to `z` without rounding.
fn times_minus_i_pow(z: Complex64, e: usize) -> Complex64 {
    match e % 4 {
        0 => z,
        1 => Complex64::new(z.im, -z.re),
        2 => Complex64::new(-z.re, -z.im),
        _ => Complex64::new(-z.im, z.re),
    }
}

/// Coefficient of the `(A|B)` monomial in `∫ a(x) vᵖ`, given the integral
/// `mult` of the basis product against `a(x)`:
/// `mult · Π ω^{-1/2} · 2^{-p/2} · p!/Π(mult!) · (−i)^p (−1)^{#ū}`.
fn monomial_coefficient(key: &MonomialKey, spec: &Spectrum, mult: Complex64) -> Complex64 {
    let p = key.degree();
    // sorted over all slots so that a key and its conjugate round identically
    let mut modes: Vec<ModeId> = key.modes().collect();
    modes.sort_unstable();
    let mut mag = 1.0;
    for &m in &modes {
        mag /= spec.mode_omega(m).sqrt();
    }
    mag *= 0.5f64.powi(p as i32).sqrt();
    let mut count = factorial(p);
    for var in [crate::polyalg::Var::U, crate::polyalg::Var::UBar] {
        for (_, k) in key.distinct(var) {
            count /= factorial(k);
        }
    }
    mag *= count;
    let sign = if key.ubar().len() % 2 == 1 { -1.0 } else { 1.0 };
    times_minus_i_pow(Complex64::new(mult.re * mag * sign, mult.im * mag * sign), p)
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// Multisets of size `p` drawn from `items` (indices into a slot list), in
/// lexicographic order.
fn for_each_multiset(n_items: usize, p: usize, mut visit: impl FnMut(&[usize])) {
    if n_items == 0 {
        return;
    }
    let mut idx = vec![0usize; p];
    loop {
        visit(&idx);
        let mut i = p;
        loop {
            if i == 0 {
                return;
            }
            i -= 1;
            if idx[i] + 1 < n_items {
                let v = idx[i] + 1;
                for j in idx.iter_mut().skip(i) {
                    *j = v;
                }
                break;
            }
        }
    }
}

/// Taylor expansion of `∫ f(x, Λ^{-1/2} q) dx` up to `max_degree`.
///
/// On the circle the coefficients follow from the zero-sum rule
/// `q + Σ_u k − Σ_ū k = 0`; on higher spheres a [`CouplingTable`] must be
/// supplied.
pub fn taylor_hamiltonian(
    nl: &Nonlinearity,
    spec: &Spectrum,
    max_degree: usize,
    table: Option<&CouplingTable>,
) -> Result<PolyHamiltonian> {
    let lowest = nl
        .lowest_power()
        .ok_or_else(|| Error::InvalidParameter("nonlinearity has no terms".into()))?;
    if max_degree < lowest as usize {
        return Err(Error::InvalidParameter(format!(
            "max_degree {max_degree} is below the lowest power {lowest}"
        )));
    }
    let coupling = if spec.dimension() == 1 {
        None
    } else {
        let t = table.ok_or_else(|| {
            Error::UnsupportedManifold(format!(
                "S^{} needs a coupling-coefficient table",
                spec.dimension()
            ))
        })?;
        if nl.is_modulated() {
            return Err(Error::UnsupportedManifold(
                "x-modulated nonlinearities are only supported on S^1".into(),
            ));
        }
        Some(t.index(spec)?)
    };

    let n = spec.num_modes();
    let mut parts = Vec::new();
    for p in 3..=max_degree {
        let multipliers = nl.fourier_multipliers(p as u32);
        let mut acc = crate::polyalg::Accumulator::new(p);
        if !multipliers.is_empty() {
            // slot s < n is u_s, slot s >= n is ū_{s-n}
            for_each_multiset(2 * n, p, |slots| {
                let u: Vec<ModeId> = slots.iter().filter(|&&s| s < n).map(|&s| s as ModeId).collect();
                let ub: Vec<ModeId> = slots.iter().filter(|&&s| s >= n).map(|&s| (s - n) as ModeId).collect();
                let key = MonomialKey::new(u, ub);
                let mult = match &coupling {
                    None => {
                        let total: i64 = key.u().iter().map(|&m| spec.fourier_index(m).unwrap()).sum::<i64>()
                            - key.ubar().iter().map(|&m| spec.fourier_index(m).unwrap()).sum::<i64>();
                        match multipliers.get(&-total) {
                            Some(&w) => w,
                            None => return,
                        }
                    }
                    Some(index) => {
                        let mut modes: Vec<ModeId> = key.modes().collect();
                        modes.sort_unstable();
                        match index.get(&modes) {
                            Some(&c) => Complex64::new(c * multipliers[&0].re, 0.0),
                            None => return,
                        }
                    }
                };
                // the 2π from ∫ e^{i·0·x} against the (2π)^{-p/2} of the basis
                let mult = match coupling {
                    None => mult * (2.0 * PI).powf(1.0 - p as f64 / 2.0),
                    Some(_) => mult,
                };
                acc.add(key.clone(), monomial_coefficient(&key, spec, mult));
            });
        }
        parts.push(acc.finish());
    }
    PolyHamiltonian::new(spec.clone(), parts)
}

/// Cluster actions `J_n = Σ_{a ∈ n} |u_a|²`; entry `n − 1` holds `J_n`.
pub fn actions(state: &State, spec: &Spectrum) -> Vec<f64> {
    (1..=spec.n_max())
        .map(|n| spec.cluster_modes(n).map(|a| state.get(a).norm_sqr()).sum())
        .collect()
}

/// `E = Σ_n n^{2s} J_n`.
pub fn weighted_energy(state: &State, s: f64, spec: &Spectrum) -> f64 {
    actions(state, spec)
        .iter()
        .enumerate()
        .map(|(i, j)| ((i + 1) as f64).powf(2.0 * s) * j)
        .sum()
}

/// `‖u‖_{H^s} = (Σ_n n^{2s} J_n)^{1/2}`.
pub fn sobolev_norm(state: &State, s: f64, spec: &Spectrum) -> f64 {
    weighted_energy(state, s, spec).sqrt()
}

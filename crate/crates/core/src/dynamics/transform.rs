use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::field::CompiledField;
use super::integrator::dopri;
use crate::error::{Error, Result};
use crate::kgmodel::sobolev_norm;
use crate::polyalg::{HomPoly, State};
use crate::spectrum::Spectrum;

/// Local tolerance of generator flows.
pub const FLOW_TOL: f64 = 1e-10;

/// Time-`t` flow of `u̇ = i∇_ū F`, `|t| ≤ 1`.
pub fn generator_flow(f: &HomPoly, state: &State, t: f64) -> Result<State> {
    generator_flow_with_tol(f, state, t, FLOW_TOL)
}

pub fn generator_flow_with_tol(f: &HomPoly, state: &State, t: f64, tol: f64) -> Result<State> {
    if t.abs() > 1.0 {
        return Err(Error::InvalidParameter(format!("generator flow time must satisfy |t| <= 1, got {t}")));
    }
    let field = CompiledField::new(&[f], state.len());
    flow_compiled(&field, state, t, tol)
}

fn flow_compiled(field: &CompiledField, state: &State, t: f64, tol: f64) -> Result<State> {
    if field.is_zero() || t == 0.0 {
        return Ok(state.clone());
    }
    if field.required_len() > state.len() {
        return Err(Error::Range(format!(
            "generator touches mode {} outside a state of {} modes",
            field.required_len() - 1,
            state.len()
        )));
    }
    let y = dopri(|y, out| field.apply(y, out), state.amplitudes(), t, tol)?;
    Ok(State::from_amplitudes(y))
}

/// `T = Φ¹_{F_1} ∘ ⋯ ∘ Φ¹_{F_r}` realized by numeric flows.
#[derive(Clone, Debug)]
pub struct NormalTransform {
    fields: Vec<CompiledField>,
    tol: f64,
}

impl NormalTransform {
    pub fn new(generators: &[HomPoly], dim: usize) -> Self {
        Self::with_tol(generators, dim, FLOW_TOL)
    }

    pub fn with_tol(generators: &[HomPoly], dim: usize, tol: f64) -> Self {
        Self {
            fields: generators
                .iter()
                .map(|f| CompiledField::new(&[f], dim))
                .collect(),
            tol,
        }
    }

    /// `T(u)`: the last generator's flow acts first.
    pub fn forward(&self, state: &State) -> Result<State> {
        let mut u = state.clone();
        for f in self.fields.iter().rev() {
            u = flow_compiled(f, &u, 1.0, self.tol)?;
        }
        Ok(u)
    }

    /// `T⁻¹(u)`: backward flows, first generator first.
    pub fn inverse(&self, state: &State) -> Result<State> {
        let mut u = state.clone();
        for f in &self.fields {
            u = flow_compiled(f, &u, -1.0, self.tol)?;
        }
        Ok(u)
    }
}

pub fn transform_forward(generators: &[HomPoly], state: &State) -> Result<State> {
    NormalTransform::new(generators, state.len()).forward(state)
}

pub fn transform_inverse(generators: &[HomPoly], state: &State) -> Result<State> {
    NormalTransform::new(generators, state.len()).inverse(state)
}

/// Least-squares fit of `y = C x^a` in log-log coordinates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PowerFit {
    /// `None` when some `y` is not strictly positive.
    pub exponent: Option<f64>,
    pub constant: Option<f64>,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

impl PowerFit {
    pub fn fit(x: &[f64], y: &[f64]) -> Self {
        let ok = x.len() >= 2 && x.len() == y.len() && x.iter().chain(y).all(|&v| v > 0.0 && v.is_finite());
        let (exponent, constant) = if ok {
            let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
            let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
            let n = lx.len() as f64;
            let mx = lx.iter().sum::<f64>() / n;
            let my = ly.iter().sum::<f64>() / n;
            let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
            let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
            let a = sxy / sxx;
            (Some(a), Some((my - a * mx).exp()))
        } else {
            (None, None)
        };
        Self {
            exponent,
            constant,
            x: x.to_vec(),
            y: y.to_vec(),
        }
    }
}

/// Complex Gaussian amplitudes on every mode, rescaled to `‖u‖_{H^s} = 1`.
pub fn random_unit_state(spec: &Spectrum, s: f64, seed: u64) -> State {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let amps: Vec<Complex64> = (0..spec.num_modes())
        .map(|_| {
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            Complex64::new(re, im)
        })
        .collect();
    let u = State::from_amplitudes(amps);
    let n = sobolev_norm(&u, s, spec);
    u.scaled(1.0 / n)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NearIdentityReport {
    /// Mean `‖T(u) − u‖` against the amplitude `‖u‖`.
    pub forward: PowerFit,
    pub inverse: PowerFit,
    pub samples: usize,
    pub seed: u64,
}

/// Measures `‖T^{±1}(u) − u‖` for `u = a·d` over random unit directions `d`
/// (in `ℓ²`) and fits the power law in `a`.
pub fn near_identity_check(
    generators: &[HomPoly],
    spec: &Spectrum,
    amplitudes: &[f64],
    samples: usize,
    seed: u64,
) -> Result<NearIdentityReport> {
    near_identity_check_with_tol(generators, spec, amplitudes, samples, seed, FLOW_TOL)
}

pub fn near_identity_check_with_tol(
    generators: &[HomPoly],
    spec: &Spectrum,
    amplitudes: &[f64],
    samples: usize,
    seed: u64,
    tol: f64,
) -> Result<NearIdentityReport> {
    if amplitudes.len() < 3 || amplitudes.iter().any(|&a| !(a > 0.0)) {
        return Err(Error::InvalidParameter(
            "near-identity check needs at least three positive amplitudes".into(),
        ));
    }
    if samples == 0 {
        return Err(Error::InvalidParameter("samples must be >= 1".into()));
    }
    let t = NormalTransform::with_tol(generators, spec.num_modes(), tol);
    let dirs: Vec<State> = (0..samples)
        .map(|i| {
            let d = random_unit_state(spec, 0.0, seed.wrapping_add(i as u64));
            let n = d.norm();
            d.scaled(1.0 / n)
        })
        .collect();
    let mut fwd = Vec::with_capacity(amplitudes.len());
    let mut inv = Vec::with_capacity(amplitudes.len());
    for &a in amplitudes {
        let (mut sf, mut si) = (0.0, 0.0);
        for d in &dirs {
            let u = d.scaled(a);
            sf += t.forward(&u)?.distance(&u);
            si += t.inverse(&u)?.distance(&u);
        }
        fwd.push(sf / samples as f64);
        inv.push(si / samples as f64);
    }
    Ok(NearIdentityReport {
        forward: PowerFit::fit(amplitudes, &fwd),
        inverse: PowerFit::fit(amplitudes, &inv),
        samples,
        seed,
    })
}

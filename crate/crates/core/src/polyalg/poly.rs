use std::collections::{BTreeMap, HashMap};
use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;

use super::key::{MonomialKey, Var};
use super::state::State;
use crate::error::{Error, Result};
use crate::spectrum::ModeId;

/// Per-key cancellation threshold: a summed coefficient is dropped when it is
/// below this fraction of the summed magnitudes of its contributions.
pub const PRUNE_REL: f64 = 1e-15;

/// Default relative tolerance of [`HomPoly::reality_check`].
pub const REALITY_REL_TOL: f64 = 1e-12;

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Degree-homogeneous sparse polynomial in `(u, ū)`.
#[derive(Clone, Debug, PartialEq)]
pub struct HomPoly {
    degree: usize,
    terms: BTreeMap<MonomialKey, Complex64>,
}

/// Sums contributions per key and prunes what cancels to rounding level.
pub(crate) struct Accumulator {
    degree: usize,
    sums: BTreeMap<MonomialKey, (Complex64, f64)>,
}

impl Accumulator {
    pub(crate) fn new(degree: usize) -> Self {
        Self {
            degree,
            sums: BTreeMap::new(),
        }
    }

    pub(crate) fn add(&mut self, key: MonomialKey, c: Complex64) {
        debug_assert_eq!(key.degree(), self.degree);
        let e = self
            .sums
            .entry(key)
            .or_insert((Complex64::new(0.0, 0.0), 0.0));
        e.0 += c;
        e.1 += c.norm();
    }

    pub(crate) fn finish(self) -> HomPoly {
        let terms = self
            .sums
            .into_iter()
            .filter(|(_, (c, mag))| {
                let a = c.norm();
                a != 0.0 && a > PRUNE_REL * mag
            })
            .map(|(k, (c, _))| (k, c))
            .collect();
        HomPoly {
            degree: self.degree,
            terms,
        }
    }
}

impl HomPoly {
    pub fn zero(degree: usize) -> Self {
        Self {
            degree,
            terms: BTreeMap::new(),
        }
    }

    pub fn monomial(key: MonomialKey, coeff: Complex64) -> Self {
        let mut p = Self::zero(key.degree());
        if coeff != Complex64::new(0.0, 0.0) {
            p.terms.insert(key, coeff);
        }
        p
    }

    /// Builds a polynomial, summing repeated keys.
    pub fn from_terms<I>(degree: usize, terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (MonomialKey, Complex64)>,
    {
        let mut acc = Accumulator::new(degree);
        for (k, c) in terms {
            if k.degree() != degree {
                return Err(Error::InvalidParameter(format!(
                    "monomial {k} has degree {} in a degree-{degree} polynomial",
                    k.degree()
                )));
            }
            acc.add(k, c);
        }
        Ok(acc.finish())
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl ExactSizeIterator<Item = (&MonomialKey, &Complex64)> {
        self.terms.iter()
    }

    pub fn coeff(&self, key: &MonomialKey) -> Complex64 {
        self.terms
            .get(key)
            .copied()
            .unwrap_or(Complex64::new(0.0, 0.0))
    }

    /// `max |coeff|`.
    pub fn max_abs(&self) -> f64 {
        self.terms.values().map(|c| c.norm()).fold(0.0, f64::max)
    }

    pub fn modes(&self) -> impl Iterator<Item = ModeId> + '_ {
        self.terms.keys().flat_map(|k| k.modes())
    }

    pub fn scale(&self, factor: Complex64) -> Self {
        if factor == Complex64::new(0.0, 0.0) {
            return Self::zero(self.degree);
        }
        Self {
            degree: self.degree,
            terms: self
                .terms
                .iter()
                .map(|(k, c)| (k.clone(), c * factor))
                .collect(),
        }
    }

    /// Splits the terms by a key predicate, without touching coefficients.
    pub fn partition<F: FnMut(&MonomialKey) -> bool>(&self, mut pred: F) -> (Self, Self) {
        let mut yes = Self::zero(self.degree);
        let mut no = Self::zero(self.degree);
        for (k, c) in &self.terms {
            if pred(k) {
                yes.terms.insert(k.clone(), *c);
            } else {
                no.terms.insert(k.clone(), *c);
            }
        }
        (yes, no)
    }

    /// Applies `f` to every coefficient; zero results are dropped.
    pub fn map_coeffs<F: FnMut(&MonomialKey, Complex64) -> Complex64>(&self, mut f: F) -> Self {
        let terms = self
            .terms
            .iter()
            .filter_map(|(k, c)| {
                let v = f(k, *c);
                (v != Complex64::new(0.0, 0.0)).then(|| (k.clone(), v))
            })
            .collect();
        Self {
            degree: self.degree,
            terms,
        }
    }

    pub fn try_add(&self, other: &Self) -> Result<Self> {
        if self.is_zero() {
            return Ok(other.clone());
        }
        if other.is_zero() {
            return Ok(self.clone());
        }
        if self.degree != other.degree {
            return Err(Error::InvalidParameter(format!(
                "cannot add polynomials of degree {} and {}",
                self.degree, other.degree
            )));
        }
        let mut acc = Accumulator::new(self.degree);
        for (k, c) in self.terms.iter().chain(&other.terms) {
            acc.add(k.clone(), *c);
        }
        Ok(acc.finish())
    }

    /// Product, formed by concatenating keys.
    pub fn product(&self, other: &Self) -> Self {
        let mut acc = Accumulator::new(self.degree + other.degree);
        for (k1, c1) in &self.terms {
            for (k2, c2) in &other.terms {
                acc.add(k1.mul(k2), c1 * c2);
            }
        }
        acc.finish()
    }

    /// Formal partial derivative `∂P/∂u_mode` or `∂P/∂ū_mode`.
    pub fn gradient(&self, var: Var, mode: ModeId) -> Self {
        let mut acc = Accumulator::new(self.degree.saturating_sub(1));
        for (k, c) in &self.terms {
            if let Some((mult, rest)) = k.remove_one(var, mode) {
                acc.add(rest, c * mult as f64);
            }
        }
        acc.finish()
    }

    /// Value at a state; `ū` slots receive conjugated amplitudes.
    pub fn evaluate(&self, state: &State) -> Complex64 {
        let amps = state.amplitudes();
        let mut total = Complex64::new(0.0, 0.0);
        for (k, c) in &self.terms {
            let mut v = *c;
            for &m in k.u() {
                v *= amps[m as usize];
            }
            for &m in k.ubar() {
                v *= amps[m as usize].conj();
            }
            total += v;
        }
        total
    }

    /// Hamiltonian vector field `i ∇_ū P` at a state.
    pub fn vector_field(&self, state: &State) -> State {
        let amps = state.amplitudes();
        let mut out = State::zeros(state.len());
        let field = out.amplitudes_mut();
        for (k, c) in &self.terms {
            let mut upart = *c;
            for &m in k.u() {
                upart *= amps[m as usize];
            }
            for (j, mult) in k.distinct(Var::UBar) {
                let mut v = upart * (mult as f64);
                let mut skipped = false;
                for &m in k.ubar() {
                    if m == j && !skipped {
                        skipped = true;
                        continue;
                    }
                    v *= amps[m as usize].conj();
                }
                field[j as usize] += I * v;
            }
        }
        out
    }

    /// `max_K |c(K) - conj(c(K*))|`, zero iff the polynomial is real valued.
    pub fn reality_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for (k, c) in &self.terms {
            let partner = self.coeff(&k.conjugate());
            worst = worst.max((c - partner.conj()).norm());
        }
        worst
    }

    /// Whether `coeff(A|B) = conj(coeff(B|A))` for every key, up to
    /// [`REALITY_REL_TOL`] relative to the largest coefficient.
    pub fn reality_check(&self) -> bool {
        self.reality_defect() <= REALITY_REL_TOL * self.max_abs()
    }

    /// Projection onto real-valued polynomials:
    /// `c(A|B) ← (c(A|B) + conj c(B|A)) / 2`.
    pub fn symmetrize_real(&self) -> Self {
        let mut terms = BTreeMap::new();
        for k in self.terms.keys() {
            for key in [k.clone(), k.conjugate()] {
                if terms.contains_key(&key) {
                    continue;
                }
                let v = (self.coeff(&key) + self.coeff(&key.conjugate()).conj()) * 0.5;
                if v != Complex64::new(0.0, 0.0) {
                    terms.insert(key, v);
                }
            }
        }
        Self {
            degree: self.degree,
            terms,
        }
    }

    /// The polynomial `conj(P(u, ū))`.
    pub fn conjugate(&self) -> Self {
        Self {
            degree: self.degree,
            terms: self
                .terms
                .iter()
                .map(|(k, c)| (k.conjugate(), c.conj()))
                .collect(),
        }
    }

    /// Largest coefficient difference with another polynomial.
    pub fn max_diff(&self, other: &Self) -> f64 {
        let mut worst: f64 = 0.0;
        for (k, c) in &self.terms {
            worst = worst.max((c - other.coeff(k)).norm());
        }
        for (k, c) in &other.terms {
            if !self.terms.contains_key(k) {
                worst = worst.max(c.norm());
            }
        }
        worst
    }
}

/// Poisson bracket
/// `{F1, F2} = i Σ_j (∂_{u_j}F2 · ∂_{ū_j}F1 − ∂_{ū_j}F2 · ∂_{u_j}F1)`,
/// i.e. the derivative of `F2` along the flow of `F1`.
pub fn poisson_bracket(f1: &HomPoly, f2: &HomPoly) -> HomPoly {
    let degree = (f1.degree + f2.degree).saturating_sub(2);
    if f1.degree + f2.degree < 2 || f1.is_zero() || f2.is_zero() {
        return HomPoly::zero(degree);
    }
    // partial derivatives of F2 indexed by the differentiated mode
    let mut d_u: HashMap<ModeId, Vec<(MonomialKey, Complex64)>> = HashMap::new();
    let mut d_ubar: HashMap<ModeId, Vec<(MonomialKey, Complex64)>> = HashMap::new();
    for (k2, c2) in &f2.terms {
        for (j, mult) in k2.distinct(Var::U) {
            let (_, rest) = k2.remove_one(Var::U, j).expect("mode present");
            d_u.entry(j).or_default().push((rest, c2 * mult as f64));
        }
        for (j, mult) in k2.distinct(Var::UBar) {
            let (_, rest) = k2.remove_one(Var::UBar, j).expect("mode present");
            d_ubar.entry(j).or_default().push((rest, c2 * mult as f64));
        }
    }
    let mut acc = Accumulator::new(degree);
    for (k1, c1) in &f1.terms {
        for (j, m1) in k1.distinct(Var::UBar) {
            if let Some(list) = d_u.get(&j) {
                let (_, rest1) = k1.remove_one(Var::UBar, j).expect("mode present");
                let a = I * c1 * m1 as f64;
                for (rest2, c2) in list {
                    acc.add(rest1.mul(rest2), a * c2);
                }
            }
        }
        for (j, m1) in k1.distinct(Var::U) {
            if let Some(list) = d_ubar.get(&j) {
                let (_, rest1) = k1.remove_one(Var::U, j).expect("mode present");
                let a = -I * c1 * m1 as f64;
                for (rest2, c2) in list {
                    acc.add(rest1.mul(rest2), a * c2);
                }
            }
        }
    }
    acc.finish()
}

impl Add for &HomPoly {
    type Output = HomPoly;
    fn add(self, rhs: &HomPoly) -> HomPoly {
        self.try_add(rhs).expect("degree mismatch in polynomial addition")
    }
}

impl Sub for &HomPoly {
    type Output = HomPoly;
    fn sub(self, rhs: &HomPoly) -> HomPoly {
        self + &(-rhs)
    }
}

impl Neg for &HomPoly {
    type Output = HomPoly;
    fn neg(self) -> HomPoly {
        HomPoly {
            degree: self.degree,
            terms: self.terms.iter().map(|(k, c)| (k.clone(), -c)).collect(),
        }
    }
}

impl Mul for &HomPoly {
    type Output = HomPoly;
    fn mul(self, rhs: &HomPoly) -> HomPoly {
        self.product(rhs)
    }
}

use num_complex::Complex64;

use crate::polyalg::{HomPoly, State, Var};

/// Flat term list for fast repeated evaluation of `Σ c Π u Π ū`.
#[derive(Clone, Debug, Default)]
struct TermTable {
    coeff: Vec<Complex64>,
    /// Output slot per term (vector fields only).
    target: Vec<u32>,
    /// `slots[start[i]..start[i] + n_u[i]]` are `u` modes, then `n_ubar[i]` ū modes.
    start: Vec<u32>,
    n_u: Vec<u16>,
    n_ubar: Vec<u16>,
    slots: Vec<u32>,
}

impl TermTable {
    fn push(&mut self, target: u32, coeff: Complex64, u: &[u32], ubar: &[u32]) {
        self.coeff.push(coeff);
        self.target.push(target);
        self.start.push(self.slots.len() as u32);
        self.n_u.push(u.len() as u16);
        self.n_ubar.push(ubar.len() as u16);
        self.slots.extend_from_slice(u);
        self.slots.extend_from_slice(ubar);
    }

    #[inline]
    fn monomial(&self, i: usize, u: &[Complex64]) -> Complex64 {
        let s = self.start[i] as usize;
        let nu = self.n_u[i] as usize;
        let nb = self.n_ubar[i] as usize;
        let mut acc = self.coeff[i];
        for &m in &self.slots[s..s + nu] {
            acc *= u[m as usize];
        }
        for &m in &self.slots[s + nu..s + nu + nb] {
            acc *= u[m as usize].conj();
        }
        acc
    }

    fn len(&self) -> usize {
        self.coeff.len()
    }
}

/// Compiled `X_P = i ∇_ū P` for a sum of homogeneous polynomials.
#[derive(Clone, Debug, Default)]
pub struct CompiledField {
    table: TermTable,
    dim: usize,
    required: usize,
}

impl CompiledField {
    pub fn new(parts: &[&HomPoly], dim: usize) -> Self {
        let mut table = TermTable::default();
        for p in parts {
            for (key, c) in p.terms() {
                for (mode, mult) in key.distinct(Var::UBar) {
                    let (_, rest) = key.remove_one(Var::UBar, mode).expect("mode present");
                    let coeff = Complex64::i() * c * mult as f64;
                    table.push(mode, coeff, rest.u(), rest.ubar());
                }
            }
        }
        let required = table
            .slots
            .iter()
            .chain(&table.target)
            .map(|&m| m as usize + 1)
            .max()
            .unwrap_or(0);
        Self { table, dim, required }
    }

    /// Smallest state length the field can act on.
    pub fn required_len(&self) -> usize {
        self.required
    }

    pub fn is_zero(&self) -> bool {
        self.table.len() == 0
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `out = X_P(u)`.
    pub fn apply(&self, u: &[Complex64], out: &mut [Complex64]) {
        out.iter_mut().for_each(|z| *z = Complex64::new(0.0, 0.0));
        for i in 0..self.table.len() {
            out[self.table.target[i] as usize] += self.table.monomial(i, u);
        }
    }

    pub fn eval_state(&self, state: &State) -> State {
        let mut out = vec![Complex64::new(0.0, 0.0); state.len()];
        self.apply(state.amplitudes(), &mut out);
        State::from_amplitudes(out)
    }
}

/// Compiled scalar `Σ_parts P(u)`.
#[derive(Clone, Debug, Default)]
pub struct CompiledPoly {
    table: TermTable,
}

impl CompiledPoly {
    pub fn new(parts: &[&HomPoly]) -> Self {
        let mut table = TermTable::default();
        for p in parts {
            for (key, c) in p.terms() {
                table.push(0, *c, key.u(), key.ubar());
            }
        }
        Self { table }
    }

    pub fn eval(&self, u: &[Complex64]) -> Complex64 {
        (0..self.table.len()).map(|i| self.table.monomial(i, u)).sum()
    }
}

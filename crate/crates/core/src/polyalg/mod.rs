//! Sparse algebra of homogeneous polynomials in the conjugate mode variables
//! `(u, ū)`: Poisson brackets, derivatives, evaluation, reality, and the
//! `μ`/`S` weighted class norms.

mod json;
mod key;
mod poly;
mod state;
pub mod weights;

pub use json::{to_sorted_json, PolyJson, TermJson};
pub use key::{MonomialKey, Var};
pub use poly::{poisson_bracket, HomPoly, PRUNE_REL, REALITY_REL_TOL};
pub use state::State;
pub use weights::{class_norm, mu_s, MuS, WeightReport};

pub(crate) use poly::Accumulator;

//! The `μ` and `S` weights on cluster tuples and the finite-truncation
//! estimate of the multilinear class norm.

use serde::{Deserialize, Serialize};

use super::{HomPoly, MonomialKey};
use crate::error::{Error, Result};
use crate::spectrum::Spectrum;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MuS {
    pub max: u32,
    pub max2: u32,
    /// Third largest entry; 1 for pairs.
    pub mu: u32,
    /// `Σ_ℓ [n_ℓ - Σ_{j≠ℓ} n_j]₊ + μ`.
    pub s: u64,
}

pub fn mu_s(clusters: &[u32]) -> Result<MuS> {
    if clusters.len() < 2 {
        return Err(Error::InvalidParameter(format!(
            "mu/S need a tuple of length >= 2, got {}",
            clusters.len()
        )));
    }
    // top three, largest first
    let mut top = [0u32; 3];
    for &n in clusters {
        if n > top[0] {
            top = [n, top[0], top[1]];
        } else if n > top[1] {
            top = [top[0], n, top[1]];
        } else if n > top[2] {
            top[2] = n;
        }
    }
    let mu = if clusters.len() == 2 { 1 } else { top[2] };
    let total: u64 = clusters.iter().map(|&n| n as u64).sum();
    let excess: u64 = clusters
        .iter()
        .map(|&n| (2 * n as u64).saturating_sub(total))
        .sum();
    Ok(MuS {
        max: top[0],
        max2: top[1],
        mu,
        s: excess + mu as u64,
    })
}

/// Best constant `C` of `|coeff| ≤ C μ^{ν+N} / S^N` over the polynomial's keys.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightReport {
    pub nu: f64,
    #[serde(rename = "N")]
    pub n: u32,
    pub best_constant: f64,
    pub argmax_key: Option<MonomialKey>,
}

pub fn class_norm(p: &HomPoly, spec: &Spectrum, nu: f64, n: u32) -> WeightReport {
    let mut best = 0.0;
    let mut arg = None;
    for (key, c) in p.terms() {
        if key.degree() < 2 {
            continue;
        }
        let w = mu_s(&key.clusters(spec)).expect("degree >= 2");
        let value = c.norm() * (w.s as f64).powi(n as i32) / (w.mu as f64).powf(nu + n as f64);
        if value > best {
            best = value;
            arg = Some(key.clone());
        }
    }
    WeightReport {
        nu,
        n,
        best_constant: best,
        argmax_key: arg,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn examples() {
        let w = mu_s(&[2, 5, 7]).unwrap();
        assert_eq!((w.max, w.max2, w.mu, w.s), (7, 5, 2, 2));
        let w = mu_s(&[1, 1, 10]).unwrap();
        assert_eq!((w.mu, w.s), (1, 9));
        let w = mu_s(&[4, 9]).unwrap();
        assert_eq!((w.max, w.max2, w.mu, w.s), (9, 4, 1, 6));
        assert!(mu_s(&[3]).is_err());
    }

    proptest! {
        #[test]
        fn ordering_and_symmetry(mut v in prop::collection::vec(1u32..40, 2..7), seed in any::<u64>()) {
            let w = mu_s(&v).unwrap();
            prop_assert!(w.s >= w.mu as u64);
            prop_assert!(w.mu >= 1);
            prop_assert!(w.mu <= w.max2 && w.max2 <= w.max);
            // permutation invariance
            let n = v.len();
            v.rotate_left((seed as usize) % n);
            v.swap(0, (seed as usize / 7) % n);
            prop_assert_eq!(mu_s(&v).unwrap(), w);
        }
    }
}

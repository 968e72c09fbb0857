use std::fmt;

use serde::{Deserialize, Serialize};

use crate::spectrum::{ModeId, Spectrum};

/// Canonical monomial `Π u_a · Π ū_b`, stored as two sorted multisets of mode ids.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct MonomialKey {
    u: Vec<ModeId>,
    ubar: Vec<ModeId>,
}

/// Which family of variables a derivative acts on.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Var {
    U,
    UBar,
}

impl MonomialKey {
    pub fn new(mut u: Vec<ModeId>, mut ubar: Vec<ModeId>) -> Self {
        u.sort_unstable();
        ubar.sort_unstable();
        Self { u, ubar }
    }

    pub fn u(&self) -> &[ModeId] {
        &self.u
    }

    pub fn ubar(&self) -> &[ModeId] {
        &self.ubar
    }

    pub fn slots(&self, var: Var) -> &[ModeId] {
        match var {
            Var::U => &self.u,
            Var::UBar => &self.ubar,
        }
    }

    pub fn degree(&self) -> usize {
        self.u.len() + self.ubar.len()
    }

    /// Number of `u` slots.
    pub fn bidegree(&self) -> usize {
        self.u.len()
    }

    /// The key of the complex-conjugate monomial.
    pub fn conjugate(&self) -> Self {
        Self {
            u: self.ubar.clone(),
            ubar: self.u.clone(),
        }
    }

    pub fn is_self_conjugate(&self) -> bool {
        self.u == self.ubar
    }

    pub fn multiplicity(&self, var: Var, mode: ModeId) -> usize {
        let s = self.slots(var);
        let lo = s.partition_point(|&m| m < mode);
        let hi = s.partition_point(|&m| m <= mode);
        hi - lo
    }

    /// Removes one occurrence of `mode` from the given slots, returning the
    /// multiplicity it had.
    pub fn remove_one(&self, var: Var, mode: ModeId) -> Option<(usize, Self)> {
        let mult = self.multiplicity(var, mode);
        if mult == 0 {
            return None;
        }
        let mut out = self.clone();
        let s = match var {
            Var::U => &mut out.u,
            Var::UBar => &mut out.ubar,
        };
        let pos = s.partition_point(|&m| m < mode);
        s.remove(pos);
        Some((mult, out))
    }

    /// Product monomial (multiset union).
    pub fn mul(&self, other: &Self) -> Self {
        Self {
            u: merge_sorted(&self.u, &other.u),
            ubar: merge_sorted(&self.ubar, &other.ubar),
        }
    }

    /// Distinct modes in the given slots with their multiplicities.
    pub fn distinct(&self, var: Var) -> impl Iterator<Item = (ModeId, usize)> + '_ {
        let s = self.slots(var);
        let mut i = 0;
        std::iter::from_fn(move || {
            if i >= s.len() {
                return None;
            }
            let m = s[i];
            let start = i;
            while i < s.len() && s[i] == m {
                i += 1;
            }
            Some((m, i - start))
        })
    }

    /// Cluster indices of the slots, `u` slots first then `ū` slots.
    pub fn clusters(&self, spec: &Spectrum) -> Vec<u32> {
        self.u
            .iter()
            .chain(&self.ubar)
            .map(|&m| spec.cluster_of(m))
            .collect()
    }

    /// Sorted cluster multisets of the `u` and `ū` slots.
    pub fn cluster_multisets(&self, spec: &Spectrum) -> (Vec<u32>, Vec<u32>) {
        let mut a: Vec<u32> = self.u.iter().map(|&m| spec.cluster_of(m)).collect();
        let mut b: Vec<u32> = self.ubar.iter().map(|&m| spec.cluster_of(m)).collect();
        a.sort_unstable();
        b.sort_unstable();
        (a, b)
    }

    pub fn modes(&self) -> impl Iterator<Item = ModeId> + '_ {
        self.u.iter().chain(&self.ubar).copied()
    }
}

fn merge_sorted(a: &[ModeId], b: &[ModeId]) -> Vec<ModeId> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        if a[i] <= b[j] {
            out.push(a[i]);
            i += 1;
        } else {
            out.push(b[j]);
            j += 1;
        }
    }
    out.extend_from_slice(&a[i..]);
    out.extend_from_slice(&b[j..]);
    out
}

impl fmt::Display for MonomialKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.degree() == 0 {
            return write!(f, "1");
        }
        let mut first = true;
        for m in &self.u {
            if !first {
                write!(f, "·")?;
            }
            write!(f, "u{m}")?;
            first = false;
        }
        for m in &self.ubar {
            if !first {
                write!(f, "·")?;
            }
            write!(f, "ū{m}")?;
            first = false;
        }
        Ok(())
    }
}

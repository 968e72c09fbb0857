//! Spectral clusters of `sqrt(-Δ + m²)` on the sphere `S^d`, small divisors,
//! and empirical scans of the divisor lower bound `|Ω| ≥ c μ^{-ν̄}`.
//!
//! Cluster `n` (starting at 1) collects the spherical harmonics of degree `n`,
//! all sharing the Laplace eigenvalue `λ_n² = n(n+d-1)` and the frequency
//! `ω_n = sqrt(λ_n² + m²)`. The constant mode is not part of the truncation.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::polyalg::weights::mu_s;

/// Relative threshold (against `max ω`) below which a divisor is reported as
/// numerically resonant by the scans.
pub const NUMERIC_RESONANCE_REL: f64 = 1e-12;

/// Mode identifier: dense index into [`Spectrum::modes`].
pub type ModeId = u32;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SphereParams {
    pub d: u32,
    pub m: f64,
}

impl SphereParams {
    pub fn new(d: u32, m: f64) -> Result<Self> {
        let params = Self { d, m };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        if self.d < 1 {
            return Err(Error::InvalidParameter(format!(
                "sphere dimension d must be >= 1, got {}",
                self.d
            )));
        }
        if !(self.m > 0.0) || !self.m.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "mass m must be finite and > 0, got {}",
                self.m
            )));
        }
        Ok(())
    }
}

/// One basis function of the truncation.
///
/// On `S^1` the intra-cluster label is the signed Fourier index (`±n`); on
/// higher spheres it enumerates a real orthonormal basis of the degree-`n`
/// harmonics, `0..multiplicity`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Mode {
    pub mode_id: ModeId,
    pub cluster: u32,
    pub intra_label: i64,
}

/// Constants of the cluster hypothesis
/// `λ_n ∈ [2πn/τ + α - c₀/n^δ, 2πn/τ + α + c₀/n^δ]`, `#cluster ≤ C₀ n^D`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClusterParams {
    pub tau: f64,
    pub alpha: f64,
    pub c0: f64,
    pub delta: f64,
    pub big_c0: f64,
    pub big_d: f64,
    /// First cluster from which every `λ_n` (up to `n_max`) lies in its interval.
    pub n0: u32,
    /// `max_n n^δ |λ_n - n - α|` over the truncation.
    pub measured_c0: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    params: SphereParams,
    n_max: u32,
    modes: Vec<Mode>,
    /// `omega[n - 1] = ω_n`.
    omega: Vec<f64>,
    /// `cluster_start[n - 1]..cluster_start[n]` are the mode ids of cluster `n`.
    cluster_start: Vec<ModeId>,
    cluster_params: ClusterParams,
}

/// Dimension of the space of degree-`n` spherical harmonics on `S^d`.
pub fn harmonic_multiplicity(d: u32, n: u32) -> u64 {
    if d == 1 {
        return if n == 0 { 1 } else { 2 };
    }
    let binom = |a: u64, b: u64| -> u64 {
        if b > a {
            return 0;
        }
        let b = b.min(a - b);
        let mut acc: u128 = 1;
        for i in 0..b {
            acc = acc * (a - i) as u128 / (i + 1) as u128;
        }
        acc as u64
    };
    let (n, d) = (n as u64, d as u64);
    binom(n + d, d) - if n >= 2 { binom(n + d - 2, d) } else { 0 }
}

/// Builds the truncated spectrum of `S^d` with clusters `1..=n_max`.
pub fn build_sphere_spectrum(params: SphereParams, n_max: u32) -> Result<Spectrum> {
    params.validate()?;
    if n_max < 1 {
        return Err(Error::InvalidParameter("n_max must be >= 1".into()));
    }
    let d = params.d;
    let m2 = params.m * params.m;
    let mut modes = Vec::new();
    let mut omega = Vec::with_capacity(n_max as usize);
    let mut cluster_start = Vec::with_capacity(n_max as usize + 1);
    for n in 1..=n_max {
        cluster_start.push(modes.len() as ModeId);
        let lambda2 = (n as u64 * (n as u64 + d as u64 - 1)) as f64;
        omega.push((lambda2 + m2).sqrt());
        if d == 1 {
            for label in [n as i64, -(n as i64)] {
                modes.push(Mode {
                    mode_id: modes.len() as ModeId,
                    cluster: n,
                    intra_label: label,
                });
            }
        } else {
            for label in 0..harmonic_multiplicity(d, n) {
                modes.push(Mode {
                    mode_id: modes.len() as ModeId,
                    cluster: n,
                    intra_label: label as i64,
                });
            }
        }
    }
    cluster_start.push(modes.len() as ModeId);
    let cluster_params = cluster_constants(d, n_max);
    Ok(Spectrum {
        params,
        n_max,
        modes,
        omega,
        cluster_start,
        cluster_params,
    })
}

fn lambda(d: u32, n: u32) -> f64 {
    ((n as u64 * (n as u64 + d as u64 - 1)) as f64).sqrt()
}

fn cluster_constants(d: u32, n_max: u32) -> ClusterParams {
    let tau = 2.0 * PI;
    let alpha = (d as f64 - 1.0) / 2.0;
    let delta = 1.0;
    // |λ_n - n - α| = α² / (λ_n + n + α) ≤ α² / (2n)
    let c0 = alpha * alpha / 2.0;
    let big_d = d as f64 - 1.0;
    let mut measured_c0: f64 = 0.0;
    let mut big_c0: f64 = 0.0;
    let mut n0 = 1;
    for n in 1..=n_max {
        let dev = (lambda(d, n) - (2.0 * PI / tau) * n as f64 - alpha).abs();
        let nf = n as f64;
        measured_c0 = measured_c0.max(nf.powf(delta) * dev);
        if dev > c0 / nf.powf(delta) + 1e-12 {
            n0 = n + 1;
        }
        big_c0 = big_c0.max(harmonic_multiplicity(d, n) as f64 / nf.powf(big_d));
    }
    ClusterParams {
        tau,
        alpha,
        c0,
        delta,
        big_c0,
        big_d,
        n0,
        measured_c0,
    }
}

impl Spectrum {
    pub fn params(&self) -> SphereParams {
        self.params
    }

    pub fn dimension(&self) -> u32 {
        self.params.d
    }

    pub fn n_max(&self) -> u32 {
        self.n_max
    }

    pub fn modes(&self) -> &[Mode] {
        &self.modes
    }

    pub fn num_modes(&self) -> usize {
        self.modes.len()
    }

    pub fn cluster_params(&self) -> &ClusterParams {
        &self.cluster_params
    }

    /// `ω_n` for cluster `n` (1-based). Panics when `n` is out of range.
    pub fn omega(&self, n: u32) -> f64 {
        self.omega[(n - 1) as usize]
    }

    pub fn try_omega(&self, n: u32) -> Result<f64> {
        if n == 0 || n > self.n_max {
            return Err(Error::Range(format!(
                "cluster {n} outside 1..={}",
                self.n_max
            )));
        }
        Ok(self.omega(n))
    }

    /// Frequencies of clusters `1..=n_max` in order.
    pub fn omegas(&self) -> &[f64] {
        &self.omega
    }

    pub fn max_omega(&self) -> f64 {
        *self.omega.last().expect("spectrum has at least one cluster")
    }

    pub fn lambda(&self, n: u32) -> f64 {
        lambda(self.params.d, n)
    }

    pub fn cluster_of(&self, mode: ModeId) -> u32 {
        self.modes[mode as usize].cluster
    }

    pub fn mode_omega(&self, mode: ModeId) -> f64 {
        self.omega(self.cluster_of(mode))
    }

    pub fn cluster_modes(&self, n: u32) -> std::ops::Range<ModeId> {
        let i = (n - 1) as usize;
        self.cluster_start[i]..self.cluster_start[i + 1]
    }

    pub fn contains_mode(&self, mode: ModeId) -> bool {
        (mode as usize) < self.modes.len()
    }

    /// Signed Fourier index of a mode on `S^1`.
    pub fn fourier_index(&self, mode: ModeId) -> Option<i64> {
        (self.params.d == 1).then(|| self.modes[mode as usize].intra_label)
    }

    /// Mode id carrying Fourier index `k` on `S^1`.
    pub fn mode_for_fourier(&self, k: i64) -> Option<ModeId> {
        if self.params.d != 1 || k == 0 || k.unsigned_abs() > self.n_max as u64 {
            return None;
        }
        let n = k.unsigned_abs() as u32;
        let base = 2 * (n - 1);
        Some(if k > 0 { base } else { base + 1 })
    }

    /// Mode whose basis function is the complex conjugate of `mode`'s:
    /// `-k` on the circle, the mode itself for a real basis.
    pub fn conjugate_mode(&self, mode: ModeId) -> ModeId {
        if self.params.d == 1 {
            mode ^ 1
        } else {
            mode
        }
    }

    /// Whether `λ_n` lies in its cluster interval `K_n`.
    pub fn lambda_in_cluster_interval(&self, n: u32) -> bool {
        let cp = &self.cluster_params;
        let centre = 2.0 * PI / cp.tau * n as f64 + cp.alpha;
        let half = cp.c0 / (n as f64).powf(cp.delta);
        (self.lambda(n) - centre).abs() <= half + 1e-12
    }
}

/// Signed cluster tuple `(n_1, …, n_{k+1})` with `+` on the first `ell` slots.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DivisorQuery {
    pub clusters: Vec<u32>,
    pub ell: usize,
}

impl DivisorQuery {
    pub fn new(clusters: Vec<u32>, ell: usize) -> Result<Self> {
        if clusters.len() < 2 {
            return Err(Error::InvalidParameter(
                "a divisor needs at least two clusters".into(),
            ));
        }
        if ell > clusters.len() {
            return Err(Error::InvalidParameter(format!(
                "ell = {ell} exceeds tuple length {}",
                clusters.len()
            )));
        }
        if clusters.contains(&0) {
            return Err(Error::InvalidParameter("cluster indices start at 1".into()));
        }
        Ok(Self { clusters, ell })
    }
}

/// `ω_{n_1} + … + ω_{n_ℓ} - ω_{n_{ℓ+1}} - … - ω_{n_{k+1}}`.
pub fn small_divisor(spec: &Spectrum, q: &DivisorQuery) -> Result<f64> {
    let mut plus = 0.0;
    let mut minus = 0.0;
    for (i, &n) in q.clusters.iter().enumerate() {
        let w = spec.try_omega(n)?;
        if i < q.ell {
            plus += w;
        } else {
            minus += w;
        }
    }
    Ok(plus - minus)
}

/// A tuple whose divisor fell below the numerical-resonance threshold.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlaggedTuple {
    pub clusters: Vec<u32>,
    pub divisor: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanRow {
    pub clusters: Vec<u32>,
    pub divisor: f64,
    pub mu: f64,
    pub weighted: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanReport {
    pub k: usize,
    pub ell: usize,
    pub nu_bar: f64,
    pub n_max: u32,
    pub tuples_scanned: u64,
    /// Empirical constant `c = min |Ω| μ^ν̄`; `+∞` when nothing was scanned.
    pub min: f64,
    pub argmin: Vec<u32>,
    pub min_abs_divisor: f64,
    /// `floor(log10(|Ω| μ^ν̄))` → count.
    pub histogram: BTreeMap<i32, u64>,
    pub flagged_count: u64,
    pub flagged: Vec<FlaggedTuple>,
    /// Tuples with the smallest weighted divisor, ascending.
    pub smallest: Vec<ScanRow>,
}

const MAX_FLAGGED_RECORDED: usize = 1000;
const DEFAULT_KEEP: usize = 32;

/// Default exponent for the scans when none is supplied.
pub fn default_nu_bar(k: usize) -> f64 {
    k as f64 + 2.0
}

/// All non-decreasing sequences of length `len` over `1..=n_max`.
fn multisets(len: usize, n_max: u32) -> Vec<Vec<u32>> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(len);
    fn rec(len: usize, lo: u32, n_max: u32, cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if cur.len() == len {
            out.push(cur.clone());
            return;
        }
        for n in lo..=n_max {
            cur.push(n);
            rec(len, n, n_max, cur, out);
            cur.pop();
        }
    }
    rec(len, 1, n_max, &mut cur, &mut out);
    out
}

#[derive(Default)]
struct Partial {
    scanned: u64,
    best: Option<ScanRow>,
    min_abs: f64,
    histogram: BTreeMap<i32, u64>,
    flagged_count: u64,
    flagged: Vec<FlaggedTuple>,
    smallest: Vec<ScanRow>,
}

impl Partial {
    fn push_smallest(&mut self, row: ScanRow, keep: usize) {
        if keep == 0 {
            return;
        }
        if self.smallest.len() == keep
            && row.weighted >= self.smallest.last().map_or(f64::INFINITY, |r| r.weighted)
        {
            return;
        }
        let pos = self
            .smallest
            .partition_point(|r| r.weighted <= row.weighted);
        self.smallest.insert(pos, row);
        self.smallest.truncate(keep);
    }

    fn merge(mut self, other: Partial, keep: usize) -> Partial {
        self.scanned += other.scanned;
        self.best = match (self.best.take(), other.best) {
            (Some(a), Some(b)) => Some(if b.weighted < a.weighted { b } else { a }),
            (a, b) => a.or(b),
        };
        self.min_abs = self.min_abs.min(other.min_abs);
        for (bin, c) in other.histogram {
            *self.histogram.entry(bin).or_default() += c;
        }
        self.flagged_count += other.flagged_count;
        for f in other.flagged {
            if self.flagged.len() < MAX_FLAGGED_RECORDED {
                self.flagged.push(f);
            }
        }
        for row in other.smallest {
            self.push_smallest(row, keep);
        }
        self
    }
}

/// Exhaustive scan of `|Ω| μ^ν̄` over all tuples with `k+1` clusters in the
/// truncation, sign pattern `ell`, excluding the resonant tuples whose two
/// groups are equal as multisets.
pub fn divisor_bound_scan(spec: &Spectrum, k: usize, ell: usize, nu_bar: f64) -> Result<ScanReport> {
    divisor_bound_scan_with(spec, k, ell, nu_bar, DEFAULT_KEEP)
}

/// [`divisor_bound_scan`] keeping the `keep` smallest rows.
pub fn divisor_bound_scan_with(
    spec: &Spectrum,
    k: usize,
    ell: usize,
    nu_bar: f64,
    keep: usize,
) -> Result<ScanReport> {
    if k < 1 {
        return Err(Error::InvalidParameter("k must be >= 1".into()));
    }
    if ell > k + 1 {
        return Err(Error::InvalidParameter(format!(
            "ell = {ell} exceeds k + 1 = {}",
            k + 1
        )));
    }
    if !nu_bar.is_finite() || nu_bar < 0.0 {
        return Err(Error::InvalidParameter(format!(
            "nu_bar must be finite and >= 0, got {nu_bar}"
        )));
    }
    let n_max = spec.n_max();
    let threshold = NUMERIC_RESONANCE_REL * spec.max_omega();
    let left = multisets(ell, n_max);
    let right = multisets(k + 1 - ell, n_max);
    let sum_omega = |ms: &[u32]| ms.iter().map(|&n| spec.omega(n)).sum::<f64>();
    let right_sums: Vec<f64> = right.iter().map(|r| sum_omega(r)).collect();

    let partials: Vec<Partial> = left
        .par_iter()
        .map(|a| {
            let plus = sum_omega(a);
            let mut part = Partial {
                min_abs: f64::INFINITY,
                ..Default::default()
            };
            let mut tuple = Vec::with_capacity(k + 1);
            for (b, &minus) in right.iter().zip(&right_sums) {
                if a == b {
                    continue;
                }
                tuple.clear();
                tuple.extend_from_slice(a);
                tuple.extend_from_slice(b);
                let divisor = plus - minus;
                let mu = mu_s(&tuple).expect("tuple length >= 2").mu as f64;
                let weighted = divisor.abs() * mu.powf(nu_bar);
                part.scanned += 1;
                part.min_abs = part.min_abs.min(divisor.abs());
                let bin = if weighted > 0.0 {
                    weighted.log10().floor() as i32
                } else {
                    i32::MIN
                };
                *part.histogram.entry(bin).or_default() += 1;
                if divisor.abs() < threshold {
                    part.flagged_count += 1;
                    if part.flagged.len() < MAX_FLAGGED_RECORDED {
                        part.flagged.push(FlaggedTuple {
                            clusters: tuple.clone(),
                            divisor,
                        });
                    }
                }
                let better = part
                    .best
                    .as_ref()
                    .map_or(true, |b: &ScanRow| weighted < b.weighted);
                let in_smallest = keep > 0
                    && (part.smallest.len() < keep
                        || weighted < part.smallest.last().unwrap().weighted);
                if better || in_smallest {
                    let row = ScanRow {
                        clusters: tuple.clone(),
                        divisor,
                        mu,
                        weighted,
                    };
                    if in_smallest {
                        part.push_smallest(row.clone(), keep);
                    }
                    if better {
                        part.best = Some(row);
                    }
                }
            }
            part
        })
        .collect();

    let merged = partials.into_iter().fold(
        Partial {
            min_abs: f64::INFINITY,
            ..Default::default()
        },
        |acc, p| acc.merge(p, keep),
    );
    let (min, argmin) = match merged.best {
        Some(row) => (row.weighted, row.clusters),
        None => (f64::INFINITY, Vec::new()),
    };
    Ok(ScanReport {
        k,
        ell,
        nu_bar,
        n_max,
        tuples_scanned: merged.scanned,
        min,
        argmin,
        min_abs_divisor: merged.min_abs,
        histogram: merged.histogram,
        flagged_count: merged.flagged_count,
        flagged: merged.flagged,
        smallest: merged.smallest,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MassScanRow {
    pub m: f64,
    /// `min |Ω| μ^ν̄` over every sign pattern and every non-resonant tuple.
    pub c: f64,
    pub ell: usize,
    pub argmin: Vec<u32>,
    pub divisor: f64,
    pub flagged_count: u64,
}

/// Empirical divisor constant as a function of the mass.
pub fn mass_scan(
    d: u32,
    k: usize,
    m_grid: &[f64],
    n_max: u32,
    nu_bar: f64,
) -> Result<Vec<MassScanRow>> {
    if m_grid.is_empty() {
        return Err(Error::InvalidParameter("mass grid is empty".into()));
    }
    if let Some(bad) = m_grid.iter().find(|m| !(**m > 0.0)) {
        return Err(Error::InvalidParameter(format!(
            "mass grid entries must be > 0, got {bad}"
        )));
    }
    m_grid
        .par_iter()
        .map(|&m| {
            let spec = build_sphere_spectrum(SphereParams::new(d, m)?, n_max)?;
            let mut row = MassScanRow {
                m,
                c: f64::INFINITY,
                ell: 0,
                argmin: Vec::new(),
                divisor: f64::NAN,
                flagged_count: 0,
            };
            for ell in 0..=k + 1 {
                let rep = divisor_bound_scan_with(&spec, k, ell, nu_bar, 1)?;
                row.flagged_count += rep.flagged_count;
                if rep.min < row.c {
                    row.c = rep.min;
                    row.ell = ell;
                    row.divisor = rep.smallest.first().map_or(f64::NAN, |r| r.divisor);
                    row.argmin = rep.argmin;
                }
            }
            Ok(row)
        })
        .collect()
}

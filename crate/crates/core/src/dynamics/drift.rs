use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::integrator::{integrate_observed, IntegratorConfig};
use super::transform::{random_unit_state, NormalTransform, PowerFit, FLOW_TOL};
use crate::error::{Error, Result};
use crate::kgmodel::{actions, weighted_energy, PolyHamiltonian};
use crate::normalform::NormalFormResult;
use crate::polyalg::State;

/// Default constant `C` in the bound `max_n n^{2s}|ΔJ_n| ≤ C ε³`.
pub const DEFAULT_BOUND_CONSTANT: f64 = 10.0;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DriftRow {
    pub eps: f64,
    pub t_end: f64,
    pub samples: usize,
    /// `max_{t,n} n^{2s}|J_n(u(t)) − J_n(u(0))|`.
    pub raw_drift: f64,
    /// Same with `J_n ∘ T⁻¹`.
    pub transformed_drift: f64,
    /// `max_t |E(t) − E(0)|` with `E = Σ n^{2s} J_n ∘ T⁻¹`.
    pub energy_increment: f64,
    /// Relative Hamiltonian drift of the integration.
    pub hamiltonian_drift: f64,
    pub raw_bound_held: bool,
    pub transformed_bound_held: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DriftTable {
    pub rows: Vec<DriftRow>,
    pub raw_fit: PowerFit,
    pub transformed_fit: PowerFit,
    pub energy_fit: PowerFit,
    pub r: u32,
    pub s: f64,
    pub seed: u64,
    pub bound_constant: f64,
    pub bound_held: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DriftSettings {
    pub eps: Vec<f64>,
    pub r: u32,
    pub s: f64,
    pub seed: u64,
    /// Observation rate; one sample every `1/samples_per_unit_time` time units.
    pub samples_per_unit_time: f64,
    pub bound_constant: f64,
    pub flow_tol: f64,
}

impl DriftSettings {
    pub fn new(eps: Vec<f64>, r: u32, s: f64, seed: u64) -> Self {
        Self {
            eps,
            r,
            s,
            seed,
            samples_per_unit_time: 100.0,
            bound_constant: DEFAULT_BOUND_CONSTANT,
            flow_tol: FLOW_TOL,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.eps.len() < 3 {
            return Err(Error::InvalidParameter("eps grid needs at least three entries".into()));
        }
        if self.eps.iter().any(|&e| !(e > 0.0 && e < 1.0)) {
            return Err(Error::InvalidParameter("eps values must lie in (0, 1)".into()));
        }
        let q = self.eps[1] / self.eps[0];
        for w in self.eps.windows(2) {
            if ((w[1] / w[0]) / q - 1.0).abs() > 1e-9 || q == 1.0 {
                return Err(Error::InvalidParameter("eps grid must be geometric".into()));
            }
        }
        if self.r < 1 {
            return Err(Error::InvalidParameter("r must be >= 1".into()));
        }
        if !(self.s >= 0.0) {
            return Err(Error::InvalidParameter("s must be >= 0".into()));
        }
        if !(self.samples_per_unit_time > 0.0) || !(self.flow_tol > 0.0) {
            return Err(Error::InvalidParameter(
                "samples_per_unit_time and flow_tol must be > 0".into(),
            ));
        }
        Ok(())
    }
}

fn weighted_max_diff(a: &[f64], b: &[f64], s: f64) -> f64 {
    a.iter()
        .zip(b)
        .enumerate()
        .map(|(i, (x, y))| ((i + 1) as f64).powf(2.0 * s) * (x - y).abs())
        .fold(0.0, f64::max)
}

/// Integrates the full truncated flow from `ε·u₀` (`‖u₀‖_{H^s} = 1`) up to
/// `T = ε^{-r}` for every `ε` and records raw and transformed action drift.
pub fn drift_experiment(
    h: &PolyHamiltonian,
    nf: &NormalFormResult,
    settings: &DriftSettings,
    cfg: &IntegratorConfig,
) -> Result<DriftTable> {
    settings.validate()?;
    if nf.r0() < settings.r as usize {
        return Err(Error::InvalidParameter(format!(
            "normal form of order {} is too low for r = {}",
            nf.r0(),
            settings.r
        )));
    }
    let spec = &h.spec;
    let dir = random_unit_state(spec, settings.s, settings.seed);
    let transform = NormalTransform::with_tol(&nf.generators, spec.num_modes(), settings.flow_tol);
    let s = settings.s;

    let rows: Vec<Result<DriftRow>> = settings
        .eps
        .par_iter()
        .map(|&eps| {
            let t_end = eps.powi(-(settings.r as i32));
            let run_cfg = IntegratorConfig { t_end, ..*cfg };
            run_cfg.validate()?;
            let (_, dt) = run_cfg.steps();
            let every = ((1.0 / (settings.samples_per_unit_time * dt)).round() as usize).max(1);
            let u0 = dir.scaled(eps);
            let j0 = actions(&u0, spec);
            let w0 = transform.inverse(&u0)?;
            let jt0 = actions(&w0, spec);
            let e0 = weighted_energy(&w0, s, spec);
            let (mut raw, mut tr, mut de, mut samples) = (0.0f64, 0.0f64, 0.0f64, 0usize);
            let mut hook = |_t: f64, u: &State| -> Result<()> {
                raw = raw.max(weighted_max_diff(&actions(u, spec), &j0, s));
                let w = transform.inverse(u)?;
                tr = tr.max(weighted_max_diff(&actions(&w, spec), &jt0, s));
                de = de.max((weighted_energy(&w, s, spec) - e0).abs());
                samples += 1;
                Ok(())
            };
            let traj = integrate_observed(&u0, h, &run_cfg, every, s, &mut hook).map_err(|e| match e {
                Error::Divergence {
                    time,
                    last_valid_time,
                    ..
                } => Error::Divergence {
                    time,
                    last_valid_time,
                    eps: Some(eps),
                },
                other => other,
            })?;
            let bound = settings.bound_constant * eps.powi(3);
            Ok(DriftRow {
                eps,
                t_end,
                samples,
                raw_drift: raw,
                transformed_drift: tr,
                energy_increment: de,
                hamiltonian_drift: traj.energy_drift,
                raw_bound_held: raw <= bound,
                transformed_bound_held: tr <= bound,
            })
        })
        .collect();
    let rows: Vec<DriftRow> = rows.into_iter().collect::<Result<_>>()?;
    let eps: Vec<f64> = rows.iter().map(|r| r.eps).collect();
    let col = |f: fn(&DriftRow) -> f64| -> Vec<f64> { rows.iter().map(f).collect() };
    Ok(DriftTable {
        raw_fit: PowerFit::fit(&eps, &col(|r| r.raw_drift)),
        transformed_fit: PowerFit::fit(&eps, &col(|r| r.transformed_drift)),
        energy_fit: PowerFit::fit(&eps, &col(|r| r.energy_increment)),
        bound_held: rows.iter().all(|r| r.raw_bound_held),
        rows,
        r: settings.r,
        s,
        seed: settings.seed,
        bound_constant: settings.bound_constant,
    })
}

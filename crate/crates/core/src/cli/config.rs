use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dynamics::{DriftSettings, IntegratorConfig, Scheme, DEFAULT_BOUND_CONSTANT, FLOW_TOL};
use crate::error::Result;
use crate::kgmodel::{CouplingTable, Nonlinearity};
use crate::spectrum::SphereParams;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifoldConfig {
    #[serde(default = "default_d")]
    pub d: u32,
    pub m: f64,
    #[serde(default = "default_n_max")]
    pub n_max: u32,
}

fn default_d() -> u32 {
    1
}
fn default_n_max() -> u32 {
    8
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModulationTerm {
    pub p: u32,
    pub q: i64,
    pub re: f64,
    #[serde(default)]
    pub im: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NormalFormConfig {
    pub r0: usize,
}

impl Default for NormalFormConfig {
    fn default() -> Self {
        Self { r0: 2 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub eps: Vec<f64>,
    pub s: f64,
    pub r: u32,
    pub seed: u64,
    /// Initial `H^s` norm for `simulate`.
    pub amplitude: f64,
    pub samples_per_unit_time: f64,
    pub bound_constant: f64,
    pub flow_tol: f64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            eps: vec![0.1, 0.05, 0.025],
            s: 2.0,
            r: 1,
            seed: 2024,
            amplitude: 0.1,
            samples_per_unit_time: 100.0,
            bound_constant: DEFAULT_BOUND_CONSTANT,
            flow_tol: FLOW_TOL,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScanConfig {
    /// Tuples have `k + 1` clusters.
    pub k: usize,
    /// Sign pattern; every `ell` in `0..=k+1` when absent.
    pub ell: Option<usize>,
    /// Defaults to `k + 2`.
    pub nu_bar: Option<f64>,
    /// Rows kept in the divisor-scan CSV.
    pub keep: usize,
    pub n_max: Option<u32>,
    pub m_grid: Vec<f64>,
}

impl Default for ScanConfig {
    fn default() -> Self {
        Self {
            k: 2,
            ell: None,
            nu_bar: None,
            keep: 32,
            n_max: None,
            m_grid: (1..=20).map(|i| i as f64 * 0.25).collect(),
        }
    }
}

fn default_integrator() -> IntegratorConfig {
    IntegratorConfig {
        dt: 5e-4,
        scheme: Scheme::StrangSplit,
        local_tol: 1e-10,
        t_end: 10.0,
    }
}

fn default_max_degree() -> usize {
    0
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

/// Single JSON document driving every subcommand.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub manifold: ManifoldConfig,
    /// `[[p, a_p], …]` for `f(v) = Σ a_p vᵖ`.
    pub nonlinearity: Vec<(u32, f64)>,
    #[serde(default)]
    pub modulation: Vec<ModulationTerm>,
    /// Coupling table for `d ≥ 2` (path relative to the config file).
    #[serde(default)]
    pub coupling_table: Option<PathBuf>,
    /// Highest Taylor degree; `0` means `r0 + 2`.
    #[serde(default = "default_max_degree")]
    pub max_degree: usize,
    #[serde(default)]
    pub normal_form: NormalFormConfig,
    #[serde(default = "default_integrator")]
    pub integrator: IntegratorConfig,
    #[serde(default)]
    pub experiment: ExperimentConfig,
    #[serde(default)]
    pub scan: ScanConfig,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
}

/// One field-level validation failure.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FieldError {
    pub field: String,
    pub message: String,
}

impl RunConfig {
    pub fn from_json(text: &str) -> std::result::Result<Self, Vec<FieldError>> {
        serde_json::from_str(text).map_err(|e| {
            vec![FieldError {
                field: "<document>".into(),
                message: e.to_string(),
            }]
        })
    }

    pub fn load(path: &Path) -> std::result::Result<Self, Vec<FieldError>> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            vec![FieldError {
                field: "<file>".into(),
                message: format!("{}: {e}", path.display()),
            }]
        })?;
        let mut cfg = Self::from_json(&text)?;
        if let (Some(table), Some(dir)) = (&cfg.coupling_table, path.parent()) {
            if table.is_relative() {
                cfg.coupling_table = Some(dir.join(table));
            }
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> std::result::Result<(), Vec<FieldError>> {
        let mut errs = Vec::new();
        let mut push = |field: &str, message: String| {
            errs.push(FieldError {
                field: field.into(),
                message,
            })
        };
        if let Err(e) = SphereParams::new(self.manifold.d, self.manifold.m) {
            let field = if self.manifold.d < 1 { "manifold.d" } else { "manifold.m" };
            push(field, e.to_string());
        }
        if self.manifold.n_max < 1 {
            push("manifold.n_max", "must be >= 1".into());
        }
        if self.nonlinearity.is_empty() {
            push("nonlinearity", "needs at least one [p, a_p] entry".into());
        }
        if let Err(e) = self.nonlinearity_model() {
            push("nonlinearity", e.to_string());
        }
        if self.manifold.d >= 2 && self.coupling_table.is_none() {
            push("coupling_table", format!("required on S^{}", self.manifold.d));
        }
        if self.normal_form.r0 < 1 {
            push("normal_form.r0", "must be >= 1".into());
        }
        if self.max_degree != 0 && self.max_degree < 3 {
            push("max_degree", "must be 0 (automatic) or >= 3".into());
        }
        if let Err(e) = self.integrator.validate() {
            push("integrator", e.to_string());
        }
        let ex = &self.experiment;
        if let Err(e) = self.drift_settings().validate() {
            push("experiment", e.to_string());
        }
        if !(ex.amplitude > 0.0) || !ex.amplitude.is_finite() {
            push("experiment.amplitude", "must be finite and > 0".into());
        }
        if ex.r as usize > self.normal_form.r0 {
            push("experiment.r", format!("must not exceed normal_form.r0 = {}", self.normal_form.r0));
        }
        let sc = &self.scan;
        if sc.k < 1 {
            push("scan.k", "must be >= 1".into());
        }
        if let Some(ell) = sc.ell {
            if ell > sc.k + 1 {
                push("scan.ell", format!("must be <= k + 1 = {}", sc.k + 1));
            }
        }
        if let Some(nu) = sc.nu_bar {
            if !(nu >= 0.0) || !nu.is_finite() {
                push("scan.nu_bar", "must be finite and >= 0".into());
            }
        }
        if sc.n_max == Some(0) {
            push("scan.n_max", "must be >= 1".into());
        }
        if sc.m_grid.is_empty() || sc.m_grid.iter().any(|m| !(*m > 0.0) || !m.is_finite()) {
            push("scan.m_grid", "must be a non-empty list of finite masses > 0".into());
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(errs)
        }
    }

    pub fn sphere(&self) -> Result<SphereParams> {
        SphereParams::new(self.manifold.d, self.manifold.m)
    }

    pub fn nonlinearity_model(&self) -> Result<Nonlinearity> {
        let mut nl = Nonlinearity::new(&self.nonlinearity)?;
        let mut powers: Vec<u32> = self.modulation.iter().map(|t| t.p).collect();
        powers.sort_unstable();
        powers.dedup();
        for p in powers {
            let terms: Vec<(i64, Complex64)> = self
                .modulation
                .iter()
                .filter(|t| t.p == p)
                .map(|t| (t.q, Complex64::new(t.re, t.im)))
                .collect();
            nl = nl.with_modulation(p, &terms)?;
        }
        Ok(nl)
    }

    pub fn coupling(&self) -> Result<Option<CouplingTable>> {
        match &self.coupling_table {
            None => Ok(None),
            Some(path) => {
                let text = std::fs::read_to_string(path)?;
                Ok(Some(serde_json::from_str(&text)?))
            }
        }
    }

    pub fn effective_max_degree(&self) -> usize {
        if self.max_degree == 0 {
            let lowest = self.nonlinearity.iter().map(|(p, _)| *p as usize).min().unwrap_or(3);
            (self.normal_form.r0 + 2).max(lowest)
        } else {
            self.max_degree
        }
    }

    pub fn drift_settings(&self) -> DriftSettings {
        let ex = &self.experiment;
        DriftSettings {
            eps: ex.eps.clone(),
            r: ex.r,
            s: ex.s,
            seed: ex.seed,
            samples_per_unit_time: ex.samples_per_unit_time,
            bound_constant: ex.bound_constant,
            flow_tol: ex.flow_tol,
        }
    }
}

//! Command-line front end: config loading, subcommand dispatch, and artifact
//! writing. Exit codes: 0 success, 1 invalid input, 2 numeric failure.

mod config;

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

pub use config::{ExperimentConfig, FieldError, ManifoldConfig, ModulationTerm, NormalFormConfig, RunConfig, ScanConfig};

use crate::dynamics::{drift_experiment, integrate, random_unit_state};
use crate::error::{Error, Result};
use crate::kgmodel::{taylor_hamiltonian, PolyHamiltonian};
use crate::normalform::{birkhoff, check_action_commutation, NormalFormJson};
use crate::polyalg::{to_sorted_json, HomPoly, PolyJson};
use crate::spectrum::{
    build_sphere_spectrum, default_nu_bar, divisor_bound_scan_with, harmonic_multiplicity, mass_scan, Spectrum,
};
use crate::verify::run_verify;

#[derive(Debug, Parser)]
#[command(name = "birkhoff-kg", version, about = "Birkhoff normal forms and action drift for Klein-Gordon on spheres")]
pub struct Cli {
    /// Run configuration (JSON).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory (overrides `output_dir`).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Random seed (overrides `experiment.seed`).
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads for parallel sections.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Frequency table and cluster diagnostics.
    Spectrum,
    /// Empirical small-divisor constant over all cluster tuples.
    DivisorScan {
        #[arg(long)]
        k: Option<usize>,
        #[arg(long)]
        ell: Option<usize>,
    },
    /// Divisor constant as a function of the mass.
    MassScan,
    /// Taylor polynomial of the nonlinearity.
    Hamiltonian,
    /// Birkhoff normal form of the configured (or a given) Hamiltonian.
    Normalform {
        /// Hamiltonian JSON written by `hamiltonian` or a polynomial list.
        #[arg(long)]
        hamiltonian: Option<PathBuf>,
    },
    /// Integrates the truncated flow from random data.
    Simulate,
    /// Raw and transformed action drift over an eps grid.
    DriftScan,
    /// Runs the invariant suite.
    Verify,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Spectrum => "spectrum",
            Command::DivisorScan { .. } => "divisor-scan",
            Command::MassScan => "mass-scan",
            Command::Hamiltonian => "hamiltonian",
            Command::Normalform { .. } => "normalform",
            Command::Simulate => "simulate",
            Command::DriftScan => "drift-scan",
            Command::Verify => "verify",
        }
    }
}

/// Metadata stamped into every JSON artifact.
#[derive(Clone, Debug, Serialize)]
struct Stamp {
    tool: &'static str,
    version: &'static str,
    command: &'static str,
    config_hash: String,
    seed: u64,
}

struct Ctx {
    cfg: RunConfig,
    out: PathBuf,
    stamp: Stamp,
}

impl Ctx {
    fn write_json(&self, name: &str, key: &str, payload: impl Serialize) -> Result<PathBuf> {
        let mut doc = serde_json::to_value(&self.stamp)?;
        doc[key] = serde_json::to_value(payload)?;
        let path = self.out.join(name);
        std::fs::write(&path, to_sorted_json(&doc)? + "\n")?;
        Ok(path)
    }

    fn write_csv(&self, name: &str, header: &[String], rows: Vec<Vec<String>>) -> Result<PathBuf> {
        let path = self.out.join(name);
        let mut w = csv::Writer::from_path(&path).map_err(csv_err)?;
        w.write_record(header).map_err(csv_err)?;
        for r in rows {
            w.write_record(&r).map_err(csv_err)?;
        }
        w.flush()?;
        Ok(path)
    }

    fn spectrum(&self) -> Result<Spectrum> {
        build_sphere_spectrum(self.cfg.sphere()?, self.cfg.manifold.n_max)
    }

    fn hamiltonian(&self, spec: &Spectrum) -> Result<PolyHamiltonian> {
        let table = self.cfg.coupling()?;
        taylor_hamiltonian(
            &self.cfg.nonlinearity_model()?,
            spec,
            self.cfg.effective_max_degree(),
            table.as_ref(),
        )
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::Io(std::io::Error::new(std::io::ErrorKind::Other, e.to_string()))
}

fn hex_sha256(text: &str) -> String {
    hex::encode(Sha256::digest(text.as_bytes()))
}

fn join_u32(v: &[u32]) -> String {
    v.iter().map(|n| n.to_string()).collect::<Vec<_>>().join(" ")
}

fn error_json(kind: &str, message: &str, fields: &[FieldError]) -> String {
    let doc = json!({ "error": kind, "message": message, "fields": fields });
    serde_json::to_string(&doc).unwrap_or_else(|_| format!("{{\"error\":\"{kind}\"}}"))
}

/// Parses `args` and runs the requested subcommand, returning the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let Some(path) = cli.config.clone() else {
        eprintln!("{}", error_json("invalid-config", "--config is required", &[]));
        return 1;
    };
    let mut cfg = match RunConfig::load(&path) {
        Ok(c) => c,
        Err(fields) => {
            eprintln!("{}", error_json("invalid-config", "config could not be parsed", &fields));
            return 1;
        }
    };
    if let Some(out) = &cli.out {
        cfg.output_dir = out.clone();
    }
    if let Some(seed) = cli.seed {
        cfg.experiment.seed = seed;
    }
    if let Err(fields) = cfg.validate() {
        eprintln!("{}", error_json("invalid-config", "config failed validation", &fields));
        return 1;
    }
    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("{}", error_json("invalid-config", "--threads must be >= 1", &[]));
            return 1;
        }
        // a second initialization in the same process is harmless
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    match execute(&cli.command, cfg) {
        Ok(paths) => {
            for p in paths {
                println!("{}", p.display());
            }
            0
        }
        Err(e) => {
            eprintln!("{}", error_json(e.kind(), &e.to_string(), &[]));
            if e.is_numeric() {
                2
            } else {
                1
            }
        }
    }
}

fn execute(cmd: &Command, cfg: RunConfig) -> Result<Vec<PathBuf>> {
    // the output location does not affect results
    let mut hashed = serde_json::to_value(&cfg)?;
    if let Some(obj) = hashed.as_object_mut() {
        obj.remove("output_dir");
    }
    let hash = hex_sha256(&to_sorted_json(&hashed)?);
    let out = cfg.output_dir.clone();
    std::fs::create_dir_all(&out)?;
    let ctx = Ctx {
        stamp: Stamp {
            tool: "birkhoff-kg",
            version: env!("CARGO_PKG_VERSION"),
            command: cmd.name(),
            config_hash: hash,
            seed: cfg.experiment.seed,
        },
        cfg,
        out,
    };
    match cmd {
        Command::Spectrum => cmd_spectrum(&ctx),
        Command::DivisorScan { k, ell } => cmd_divisor_scan(&ctx, *k, *ell),
        Command::MassScan => cmd_mass_scan(&ctx),
        Command::Hamiltonian => cmd_hamiltonian(&ctx),
        Command::Normalform { hamiltonian } => cmd_normalform(&ctx, hamiltonian.as_deref()),
        Command::Simulate => cmd_simulate(&ctx),
        Command::DriftScan => cmd_drift(&ctx),
        Command::Verify => cmd_verify(&ctx),
    }
}

fn cmd_spectrum(ctx: &Ctx) -> Result<Vec<PathBuf>> {
    let spec = ctx.spectrum()?;
    let d = spec.dimension();
    let clusters: Vec<Value> = (1..=spec.n_max())
        .map(|n| {
            json!({
                "n": n,
                "omega": spec.omega(n),
                "lambda": spec.lambda(n),
                "multiplicity": harmonic_multiplicity(d, n),
                "in_interval": spec.lambda_in_cluster_interval(n),
            })
        })
        .collect();
    let rows = (1..=spec.n_max())
        .map(|n| {
            vec![
                n.to_string(),
                spec.omega(n).to_string(),
                spec.lambda(n).to_string(),
                harmonic_multiplicity(d, n).to_string(),
                spec.lambda_in_cluster_interval(n).to_string(),
            ]
        })
        .collect();
    let header: Vec<String> = ["n", "omega", "lambda", "multiplicity", "in_interval"].map(String::from).into();
    Ok(vec![
        ctx.write_json(
            "spectrum.json",
            "spectrum",
            json!({
                "d": d,
                "m": spec.params().m,
                "n_max": spec.n_max(),
                "clusters": clusters,
                "cluster_params": spec.cluster_params(),
            }),
        )?,
        ctx.write_csv("spectrum.csv", &header, rows)?,
    ])
}

fn cmd_divisor_scan(ctx: &Ctx, k: Option<usize>, ell: Option<usize>) -> Result<Vec<PathBuf>> {
    let sc = &ctx.cfg.scan;
    let k = k.unwrap_or(sc.k);
    if k < 1 {
        return Err(Error::InvalidParameter("k must be >= 1".into()));
    }
    let n_max = sc.n_max.unwrap_or(ctx.cfg.manifold.n_max);
    let spec = build_sphere_spectrum(ctx.cfg.sphere()?, n_max)?;
    let nu_bar = sc.nu_bar.unwrap_or_else(|| default_nu_bar(k));
    let ells: Vec<usize> = match ell.or(sc.ell) {
        Some(l) => vec![l],
        None => (0..=k + 1).collect(),
    };
    let mut reports = Vec::new();
    let mut rows = Vec::new();
    for l in ells {
        let rep = divisor_bound_scan_with(&spec, k, l, nu_bar, sc.keep)?;
        for r in &rep.smallest {
            rows.push(vec![
                l.to_string(),
                join_u32(&r.clusters),
                r.divisor.to_string(),
                r.mu.to_string(),
                r.weighted.to_string(),
            ]);
        }
        reports.push(rep);
    }
    let header: Vec<String> = ["ell", "clusters", "divisor", "mu", "weighted"].map(String::from).into();
    Ok(vec![
        ctx.write_json("divisor_scan.json", "divisor_scan", &reports)?,
        ctx.write_csv("divisor_scan.csv", &header, rows)?,
    ])
}

fn cmd_mass_scan(ctx: &Ctx) -> Result<Vec<PathBuf>> {
    let sc = &ctx.cfg.scan;
    let n_max = sc.n_max.unwrap_or(ctx.cfg.manifold.n_max);
    let nu_bar = sc.nu_bar.unwrap_or_else(|| default_nu_bar(sc.k));
    let table = mass_scan(ctx.cfg.manifold.d, sc.k, &sc.m_grid, n_max, nu_bar)?;
    let rows = table
        .iter()
        .map(|r| {
            vec![
                r.m.to_string(),
                r.c.to_string(),
                r.ell.to_string(),
                join_u32(&r.argmin),
                r.divisor.to_string(),
                r.flagged_count.to_string(),
            ]
        })
        .collect();
    let header: Vec<String> = ["m", "c", "ell", "argmin", "divisor", "flagged_count"].map(String::from).into();
    Ok(vec![
        ctx.write_json("mass_scan.json", "mass_scan", &table)?,
        ctx.write_csv("mass_scan.csv", &header, rows)?,
    ])
}

fn hamiltonian_doc(h: &PolyHamiltonian) -> Value {
    let p = h.spec.params();
    json!({
        "d": p.d,
        "m": p.m,
        "n_max": h.spec.n_max(),
        "parts": h.parts.iter().map(PolyJson::from).collect::<Vec<_>>(),
    })
}

fn cmd_hamiltonian(ctx: &Ctx) -> Result<Vec<PathBuf>> {
    let spec = ctx.spectrum()?;
    let h = ctx.hamiltonian(&spec)?;
    Ok(vec![ctx.write_json("hamiltonian.json", "hamiltonian", hamiltonian_doc(&h))?])
}

/// Accepts a `hamiltonian` artifact, `{"parts": [...]}`, a list of
/// polynomials, or a single polynomial.
fn read_parts(path: &Path) -> Result<Vec<HomPoly>> {
    let text = std::fs::read_to_string(path)?;
    let v: Value = serde_json::from_str(&text)?;
    let list = if let Some(parts) = v.get("hamiltonian").and_then(|h| h.get("parts")) {
        parts.clone()
    } else if let Some(parts) = v.get("parts") {
        parts.clone()
    } else if v.is_array() {
        v
    } else {
        Value::Array(vec![v])
    };
    let docs: Vec<PolyJson> = serde_json::from_value(list)?;
    docs.into_iter().map(HomPoly::try_from).collect()
}

fn cmd_normalform(ctx: &Ctx, input: Option<&Path>) -> Result<Vec<PathBuf>> {
    let spec = ctx.spectrum()?;
    let h = match input {
        Some(p) => PolyHamiltonian::new(spec.clone(), read_parts(p)?)?,
        None => ctx.hamiltonian(&spec)?,
    };
    let nf = birkhoff(&h.parts, &spec, ctx.cfg.normal_form.r0)?;
    let commutation: Vec<Value> = nf
        .z_parts
        .iter()
        .map(|z| json!({ "degree": z.degree(), "residual": check_action_commutation(z, &spec) }))
        .collect();
    Ok(vec![ctx.write_json(
        "normalform.json",
        "normal_form",
        json!({ "result": NormalFormJson::from(&nf), "commutation": commutation }),
    )?])
}

fn observe_every(dt: f64, per_unit: f64) -> usize {
    ((1.0 / (per_unit * dt)).round() as usize).max(1)
}

fn cmd_simulate(ctx: &Ctx) -> Result<Vec<PathBuf>> {
    let spec = ctx.spectrum()?;
    let h = ctx.hamiltonian(&spec)?;
    let ex = &ctx.cfg.experiment;
    let u0 = random_unit_state(&spec, ex.s, ex.seed).scaled(ex.amplitude);
    let cfg = ctx.cfg.integrator;
    let (_, dt) = cfg.steps();
    let traj = integrate(&u0, &h, &cfg, observe_every(dt, ex.samples_per_unit_time), ex.s)?;
    let mut header: Vec<String> = vec!["t".into(), "G".into(), "E".into()];
    header.extend((1..=spec.n_max()).map(|n| format!("J_{n}")));
    let rows = (0..traj.times.len())
        .map(|i| {
            let mut r = vec![
                traj.times[i].to_string(),
                traj.hamiltonian[i].to_string(),
                traj.weighted_energy[i].to_string(),
            ];
            r.extend(traj.actions[i].iter().map(|j| j.to_string()));
            r
        })
        .collect();
    Ok(vec![
        ctx.write_csv("trajectory.csv", &header, rows)?,
        ctx.write_json(
            "simulate.json",
            "simulate",
            json!({
                "samples": traj.times.len(),
                "t_end": traj.times.last(),
                "energy_drift": traj.energy_drift,
                "initial_sobolev_norm": traj.sobolev_norm.first(),
                "final_sobolev_norm": traj.sobolev_norm.last(),
                "s": ex.s,
                "amplitude": ex.amplitude,
                "integrator": cfg,
            }),
        )?,
    ])
}

fn cmd_drift(ctx: &Ctx) -> Result<Vec<PathBuf>> {
    let spec = ctx.spectrum()?;
    let h = ctx.hamiltonian(&spec)?;
    let nf = birkhoff(&h.parts, &spec, ctx.cfg.normal_form.r0)?;
    let table = drift_experiment(&h, &nf, &ctx.cfg.drift_settings(), &ctx.cfg.integrator)?;
    let header: Vec<String> = [
        "eps",
        "t_end",
        "samples",
        "raw_drift",
        "transformed_drift",
        "energy_increment",
        "hamiltonian_drift",
        "raw_bound_held",
        "transformed_bound_held",
    ]
    .map(String::from)
    .into();
    let rows = table
        .rows
        .iter()
        .map(|r| {
            vec![
                r.eps.to_string(),
                r.t_end.to_string(),
                r.samples.to_string(),
                r.raw_drift.to_string(),
                r.transformed_drift.to_string(),
                r.energy_increment.to_string(),
                r.hamiltonian_drift.to_string(),
                r.raw_bound_held.to_string(),
                r.transformed_bound_held.to_string(),
            ]
        })
        .collect();
    Ok(vec![
        ctx.write_csv("drift.csv", &header, rows)?,
        ctx.write_json(
            "drift_fit.json",
            "drift",
            json!({
                "exponent": table.transformed_fit.exponent,
                "constant": table.transformed_fit.constant,
                "r": table.r,
                "s": table.s,
                "seed": table.seed,
                "r0": ctx.cfg.normal_form.r0,
                "bound_constant": table.bound_constant,
                "bound_held": table.bound_held,
                "raw_fit": table.raw_fit,
                "transformed_fit": table.transformed_fit,
                "energy_fit": table.energy_fit,
                "rows": table.rows,
            }),
        )?,
    ])
}

fn cmd_verify(ctx: &Ctx) -> Result<Vec<PathBuf>> {
    let spec = ctx.spectrum()?;
    let h = ctx.hamiltonian(&spec)?;
    let report = run_verify(&h, ctx.cfg.normal_form.r0, ctx.cfg.experiment.seed)?;
    for c in &report.checks {
        eprintln!(
            "[{}] {}: {:.3e} (tolerance {:.1e})",
            if c.pass { "PASS" } else { "FAIL" },
            c.name,
            c.value,
            c.tolerance
        );
    }
    let path = ctx.write_json("verify.json", "verify", &report)?;
    if !report.all_passed {
        let failed: Vec<&str> = report.checks.iter().filter(|c| !c.pass).map(|c| c.name.as_str()).collect();
        return Err(Error::FlowFailure(format!("invariant checks failed: {}", failed.join(", "))));
    }
    Ok(vec![path])
}

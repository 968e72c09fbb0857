use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::field::{CompiledField, CompiledPoly};
use crate::error::{Error, Result};
use crate::kgmodel::{actions, g2_value, PolyHamiltonian};
use crate::polyalg::State;
use crate::spectrum::Spectrum;

/// Blow-up threshold relative to the initial `ℓ²` norm.
pub const DIVERGENCE_FACTOR: f64 = 1e3;

/// `u_a ↦ e^{iω_a t} u_a`, the exact flow of `G₂`.
pub fn linear_flow(state: &State, t: f64, spec: &Spectrum) -> State {
    let mut out = state.clone();
    linear_flow_in_place(out.amplitudes_mut(), t, spec);
    out
}

pub(crate) fn linear_flow_in_place(u: &mut [Complex64], t: f64, spec: &Spectrum) {
    let rot: Vec<Complex64> = spec
        .omegas()
        .iter()
        .map(|&w| Complex64::from_polar(1.0, w * t))
        .collect();
    for m in spec.modes() {
        u[m.mode_id as usize] *= rot[(m.cluster - 1) as usize];
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    StrangSplit,
    RkAdaptive,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegratorConfig {
    /// Step (split scheme) or output interval (adaptive scheme).
    pub dt: f64,
    pub scheme: Scheme,
    #[serde(default = "default_local_tol")]
    pub local_tol: f64,
    pub t_end: f64,
}

fn default_local_tol() -> f64 {
    1e-10
}

impl IntegratorConfig {
    pub fn strang(dt: f64, t_end: f64) -> Self {
        Self {
            dt,
            scheme: Scheme::StrangSplit,
            local_tol: default_local_tol(),
            t_end,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(Error::InvalidParameter(format!("dt must be > 0, got {}", self.dt)));
        }
        if !(self.t_end >= self.dt) || !self.t_end.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "t_end must be finite and >= dt, got {}",
                self.t_end
            )));
        }
        if !(self.local_tol > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "local_tol must be > 0, got {}",
                self.local_tol
            )));
        }
        Ok(())
    }

    /// Number of steps and the step that hits `t_end` exactly.
    pub fn steps(&self) -> (usize, f64) {
        let n = (self.t_end / self.dt).round().max(1.0) as usize;
        (n, self.t_end / n as f64)
    }
}

/// Samples of a trajectory. `actions[i][n - 1]` is `J_n` at `times[i]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub actions: Vec<Vec<f64>>,
    pub hamiltonian: Vec<f64>,
    pub weighted_energy: Vec<f64>,
    pub sobolev_norm: Vec<f64>,
    pub final_state: State,
    /// `max_t |G(t) − G(0)| / |G(0)|` over the samples.
    pub energy_drift: f64,
}

/// Dormand–Prince 5(4) with normwise relative error control.
pub(crate) fn dopri<F>(mut f: F, y0: &[Complex64], t: f64, tol: f64) -> Result<Vec<Complex64>>
where
    F: FnMut(&[Complex64], &mut [Complex64]),
{
    const A: [[f64; 6]; 6] = [
        [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
        [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
        [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
        [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
        [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
        [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
    ];
    // fifth-order weights minus embedded fourth-order weights
    const E: [f64; 7] = [
        35.0 / 384.0 - 5179.0 / 57600.0,
        0.0,
        500.0 / 1113.0 - 7571.0 / 16695.0,
        125.0 / 192.0 - 393.0 / 640.0,
        -2187.0 / 6784.0 + 92097.0 / 339200.0,
        11.0 / 84.0 - 187.0 / 2100.0,
        -1.0 / 40.0,
    ];
    let n = y0.len();
    let mut y = y0.to_vec();
    if t == 0.0 {
        return Ok(y);
    }
    let dir = t.signum();
    let span = t.abs();
    let mut k: Vec<Vec<Complex64>> = vec![vec![Complex64::new(0.0, 0.0); n]; 7];
    let mut tmp = vec![Complex64::new(0.0, 0.0); n];
    let norm = |v: &[Complex64]| v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();

    f(&y, &mut k[0]);
    let fy = norm(&k[0]);
    let ny = norm(&y);
    let mut h = if fy > 0.0 && ny > 0.0 {
        (0.1 * ny / fy * tol.powf(0.2)).min(span)
    } else {
        span
    };
    let h_min = 1e-14 * span.max(1.0);
    let mut done = 0.0;
    let mut steps = 0usize;
    while done < span {
        let last = done + h >= span;
        if last {
            h = span - done;
        }
        let hs = dir * h;
        for stage in 1..7 {
            for i in 0..n {
                let mut acc = Complex64::new(0.0, 0.0);
                for (j, kj) in k.iter().enumerate().take(stage) {
                    let a = A[stage - 1][j];
                    if a != 0.0 {
                        acc += kj[i] * a;
                    }
                }
                tmp[i] = y[i] + acc * hs;
            }
            f(&tmp, &mut k[stage]);
        }
        // after the last stage tmp holds the fifth-order solution and k[6] = f(tmp)
        let mut err2 = 0.0;
        for i in 0..n {
            let mut e = Complex64::new(0.0, 0.0);
            for (j, kj) in k.iter().enumerate() {
                if E[j] != 0.0 {
                    e += kj[i] * E[j];
                }
            }
            err2 += (e * hs).norm_sqr();
        }
        let err = err2.sqrt();
        let scale = norm(&y).max(norm(&tmp)).max(f64::MIN_POSITIVE);
        let ratio = err / (tol * scale);
        if err == 0.0 || ratio <= 1.0 {
            done = if last { span } else { done + h };
            y.copy_from_slice(&tmp);
            k.swap(0, 6);
            if !y.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
                return Err(Error::FlowFailure("non-finite state in adaptive flow".into()));
            }
        }
        let factor = if ratio == 0.0 {
            5.0
        } else if ratio.is_finite() {
            (0.9 * ratio.powf(-0.2)).clamp(0.2, 5.0)
        } else {
            0.2
        };
        h *= factor;
        if done < span && h < h_min {
            return Err(Error::FlowFailure(format!(
                "step size underflow at {:.3e} of {:.3e} (amplitude too large?)",
                done, span
            )));
        }
        steps += 1;
        if steps > 50_000_000 {
            return Err(Error::FlowFailure("too many adaptive steps".into()));
        }
    }
    Ok(y)
}

struct Observer<'a> {
    spec: &'a Spectrum,
    energy: CompiledPoly,
    s: f64,
    traj: Trajectory,
    g0: f64,
    n0: f64,
    hook: &'a mut dyn FnMut(f64, &State) -> Result<()>,
}

impl<'a> Observer<'a> {
    fn record(&mut self, t: f64, u: &[Complex64]) -> Result<()> {
        let state = State::from_amplitudes(u.to_vec());
        let norm = state.norm();
        if !state.is_finite() || (self.n0 > 0.0 && norm > DIVERGENCE_FACTOR * self.n0) {
            return Err(Error::Divergence {
                time: t,
                last_valid_time: self.traj.times.last().copied().unwrap_or(0.0),
                eps: None,
            });
        }
        let j = actions(&state, self.spec);
        let e: f64 = j
            .iter()
            .enumerate()
            .map(|(i, v)| ((i + 1) as f64).powf(2.0 * self.s) * v)
            .sum();
        let g = g2_value(self.spec, &state) + self.energy.eval(u).re;
        if self.traj.times.is_empty() {
            self.g0 = g;
        }
        let denom = if self.g0 != 0.0 { self.g0.abs() } else { 1.0 };
        self.traj.energy_drift = self.traj.energy_drift.max((g - self.g0).abs() / denom);
        self.traj.times.push(t);
        self.traj.actions.push(j);
        self.traj.hamiltonian.push(g);
        self.traj.weighted_energy.push(e);
        self.traj.sobolev_norm.push(e.sqrt());
        (self.hook)(t, &state)
    }
}

/// Integrates `u̇ = i∇_ū G` for `G = G₂ + Σ parts`, sampling every
/// `observe_every` steps (and at `t_end`).
pub fn integrate(
    state0: &State,
    h: &PolyHamiltonian,
    cfg: &IntegratorConfig,
    observe_every: usize,
    s: f64,
) -> Result<Trajectory> {
    integrate_observed(state0, h, cfg, observe_every, s, &mut |_, _| Ok(()))
}

/// [`integrate`] with a callback receiving every sampled state.
pub fn integrate_observed(
    state0: &State,
    h: &PolyHamiltonian,
    cfg: &IntegratorConfig,
    observe_every: usize,
    s: f64,
    on_sample: &mut dyn FnMut(f64, &State) -> Result<()>,
) -> Result<Trajectory> {
    cfg.validate()?;
    if observe_every == 0 {
        return Err(Error::InvalidParameter("observe_every must be >= 1".into()));
    }
    let spec = &h.spec;
    if state0.len() != spec.num_modes() {
        return Err(Error::Range(format!(
            "state has {} modes, spectrum has {}",
            state0.len(),
            spec.num_modes()
        )));
    }
    let parts: Vec<&crate::polyalg::HomPoly> = h.parts.iter().collect();
    let field = CompiledField::new(&parts, spec.num_modes());
    let mut obs = Observer {
        spec,
        energy: CompiledPoly::new(&parts),
        s,
        traj: Trajectory {
            times: Vec::new(),
            actions: Vec::new(),
            hamiltonian: Vec::new(),
            weighted_energy: Vec::new(),
            sobolev_norm: Vec::new(),
            final_state: state0.clone(),
            energy_drift: 0.0,
        },
        g0: 0.0,
        n0: state0.norm(),
        hook: on_sample,
    };
    let (n_steps, dt) = cfg.steps();
    let mut u = state0.amplitudes().to_vec();
    obs.record(0.0, &u)?;
    match cfg.scheme {
        Scheme::StrangSplit => {
            let mut k1 = vec![Complex64::new(0.0, 0.0); u.len()];
            let mut mid = u.clone();
            for step in 1..=n_steps {
                linear_flow_in_place(&mut u, 0.5 * dt, spec);
                if !field.is_zero() {
                    field.apply(&u, &mut k1);
                    for (m, (a, b)) in mid.iter_mut().zip(u.iter().zip(&k1)) {
                        *m = a + b * (0.5 * dt);
                    }
                    field.apply(&mid, &mut k1);
                    for (a, b) in u.iter_mut().zip(&k1) {
                        *a += b * dt;
                    }
                }
                linear_flow_in_place(&mut u, 0.5 * dt, spec);
                if step % observe_every == 0 || step == n_steps {
                    obs.record(step as f64 * dt, &u)?;
                }
            }
        }
        Scheme::RkAdaptive => {
            let omega: Vec<f64> = spec.modes().iter().map(|m| spec.omega(m.cluster)).collect();
            let full = |y: &[Complex64], out: &mut [Complex64]| {
                field.apply(y, out);
                for ((o, z), w) in out.iter_mut().zip(y).zip(&omega) {
                    *o += Complex64::new(0.0, *w) * z;
                }
            };
            for step in 1..=n_steps {
                u = dopri(full, &u, dt, cfg.local_tol).map_err(|e| match e {
                    Error::FlowFailure(_) => Error::Divergence {
                        time: step as f64 * dt,
                        last_valid_time: obs.traj.times.last().copied().unwrap_or(0.0),
                        eps: None,
                    },
                    other => other,
                })?;
                if step % observe_every == 0 || step == n_steps {
                    obs.record(step as f64 * dt, &u)?;
                }
            }
        }
    }
    obs.traj.final_state = State::from_amplitudes(u);
    Ok(obs.traj)
}

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::spectrum::{ModeId, Spectrum};

/// Complex amplitudes `u_a`, one per mode of the truncation. `ū` is never
/// stored; it is the pointwise conjugate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct State {
    amps: Vec<Complex64>,
}

impl State {
    pub fn zeros(num_modes: usize) -> Self {
        Self {
            amps: vec![Complex64::new(0.0, 0.0); num_modes],
        }
    }

    pub fn zeros_for(spec: &Spectrum) -> Self {
        Self::zeros(spec.num_modes())
    }

    pub fn from_amplitudes(amps: Vec<Complex64>) -> Self {
        Self { amps }
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn amplitudes_mut(&mut self) -> &mut [Complex64] {
        &mut self.amps
    }

    pub fn into_amplitudes(self) -> Vec<Complex64> {
        self.amps
    }

    pub fn len(&self) -> usize {
        self.amps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.amps.is_empty()
    }

    pub fn get(&self, mode: ModeId) -> Complex64 {
        self.amps[mode as usize]
    }

    pub fn set(&mut self, mode: ModeId, value: Complex64) {
        self.amps[mode as usize] = value;
    }

    /// `ℓ²` norm.
    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            amps: self.amps.iter().map(|z| z * factor).collect(),
        }
    }

    /// `self + factor * other`.
    pub fn axpy(&self, factor: Complex64, other: &State) -> Self {
        Self {
            amps: self
                .amps
                .iter()
                .zip(&other.amps)
                .map(|(a, b)| a + factor * b)
                .collect(),
        }
    }

    pub fn distance(&self, other: &State) -> f64 {
        self.amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.amps.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }
}

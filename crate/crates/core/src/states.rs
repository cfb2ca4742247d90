//! Coherent and random initial states.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, EchoError, Result};
use crate::spin::SpinParameters;

const NORM_TOL: f64 = 1e-8;

/// Normalized amplitude vector over the Sz basis, index 0 ↦ m = −S.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantumState {
    spin: SpinParameters,
    amps: Vec<Complex64>,
}

impl QuantumState {
    /// Wraps amplitudes, normalizing them. Fails on a zero vector or wrong length.
    pub fn from_amplitudes(spin: SpinParameters, mut amps: Vec<Complex64>) -> Result<Self> {
        if amps.len() != spin.dim() {
            return Err(EchoError::DimensionMismatch {
                expected: spin.dim(),
                found: amps.len(),
            });
        }
        let norm = l2(&amps);
        if !(norm.is_finite() && norm > 0.0) {
            return Err(EchoError::NotNormalized { norm });
        }
        amps.iter_mut().for_each(|a| *a /= norm);
        Ok(Self { spin, amps })
    }

    pub fn basis(spin: SpinParameters, m: i64) -> Result<Self> {
        let s = spin.spin() as i64;
        if m.abs() > s {
            return Err(invalid("m", format!("|m| must not exceed S={s}")));
        }
        let mut amps = vec![Complex64::new(0.0, 0.0); spin.dim()];
        amps[(m + s) as usize] = Complex64::new(1.0, 0.0);
        Ok(Self { spin, amps })
    }

    pub fn spin(&self) -> SpinParameters {
        self.spin
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amps(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn into_amps(self) -> Vec<Complex64> {
        self.amps
    }

    pub fn norm(&self) -> f64 {
        l2(&self.amps)
    }

    /// `<self|other>`.
    pub fn overlap(&self, other: &QuantumState) -> Result<Complex64> {
        if self.dim() != other.dim() {
            return Err(EchoError::DimensionMismatch {
                expected: self.dim(),
                found: other.dim(),
            });
        }
        Ok(self
            .amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    pub(crate) fn check_normalized(&self) -> Result<()> {
        let norm = self.norm();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(EchoError::NotNormalized { norm });
        }
        Ok(())
    }

    /// Mean and variance of the action `j = m/S`.
    pub fn action_moments(&self) -> (f64, f64) {
        let mut mean = 0.0;
        let mut second = 0.0;
        for (i, a) in self.amps.iter().enumerate() {
            let j = self.spin.action_of(i);
            let w = a.norm_sqr();
            mean += w * j;
            second += w * j * j;
        }
        (mean, second - mean * mean)
    }
}

fn l2(v: &[Complex64]) -> f64 {
    v.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
}

/// Geometry of an SU(2) coherent state in action-angle variables.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoherentParams {
    pub theta_star: f64,
    pub phi_star: f64,
    pub j_star: f64,
    pub lambda_squeeze: f64,
    pub delta_j: f64,
}

impl CoherentParams {
    pub fn new(theta_star: f64, phi_star: f64, hbar: f64) -> Result<Self> {
        if !(theta_star.is_finite() && phi_star.is_finite()) {
            return Err(invalid("theta/phi", "must be finite"));
        }
        if theta_star <= 0.0 || theta_star >= std::f64::consts::PI {
            return Err(EchoError::PoleDegenerate);
        }
        let lambda_squeeze = 1.0 / theta_star.sin().powi(2);
        Ok(Self {
            theta_star,
            phi_star: phi_star.rem_euclid(std::f64::consts::TAU),
            j_star: theta_star.cos(),
            lambda_squeeze,
            delta_j: (hbar / (2.0 * lambda_squeeze)).sqrt(),
        })
    }
}

#[derive(Debug, Clone)]
pub struct CoherentState {
    pub state: QuantumState,
    /// `None` when the requested point is a pole of the sphere.
    pub params: Option<CoherentParams>,
    pub at_pole: bool,
}

pub fn coherent_state(spin: SpinParameters, theta_star: f64, phi_star: f64) -> Result<CoherentState> {
    if !(0.0..=std::f64::consts::PI).contains(&theta_star) || !phi_star.is_finite() {
        return Err(invalid("theta_star", "must lie in [0, pi]"));
    }
    let s = spin.spin() as i64;
    let params = match CoherentParams::new(theta_star, phi_star, spin.hbar()) {
        Ok(p) => p,
        Err(EchoError::PoleDegenerate) => {
            let m = if theta_star < 1.0 { s } else { -s };
            return Ok(CoherentState {
                state: QuantumState::basis(spin, m)?,
                params: None,
                at_pole: true,
            });
        }
        Err(e) => return Err(e),
    };
    let two_s = 2 * s;
    let ln_c = (0.5 * theta_star).cos().ln();
    let ln_s = (0.5 * theta_star).sin().ln();
    let ln_fact = ln_factorials(two_s as usize);
    let amps = (0..spin.dim())
        .map(|i| {
            let m = spin.m_of(i);
            let up = (s + m) as usize;
            let down = (s - m) as usize;
            let ln_binom = ln_fact[two_s as usize] - ln_fact[up] - ln_fact[down];
            let ln_mag = 0.5 * ln_binom + up as f64 * ln_c + down as f64 * ln_s;
            Complex64::from_polar(ln_mag.exp(), -(m as f64) * phi_star)
        })
        .collect();
    Ok(CoherentState {
        state: QuantumState::from_amplitudes(spin, amps)?,
        params: Some(params),
        at_pole: false,
    })
}

/// Table of `ln k!` for `k = 0..=n`.
fn ln_factorials(n: usize) -> Vec<f64> {
    let mut table = vec![0.0; n + 1];
    for k in 2..=n {
        table[k] = table[k - 1] + (k as f64).ln();
    }
    table
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RandomEnsembleParams {
    pub seed: u64,
    pub count: usize,
    pub hilbert_dim: usize,
    pub action_volume: f64,
}

impl RandomEnsembleParams {
    pub fn new(spin: SpinParameters, seed: u64, count: usize) -> Result<Self> {
        if count == 0 {
            return Err(invalid("count", "ensemble must have at least one member"));
        }
        Ok(Self {
            seed,
            count,
            hilbert_dim: spin.dim(),
            action_volume: 2.0,
        })
    }

    pub fn member(&self, spin: SpinParameters, index: usize) -> QuantumState {
        random_member(spin, self.seed, index as u64)
    }

    pub fn members(&self, spin: SpinParameters) -> Vec<QuantumState> {
        (0..self.count).map(|i| self.member(spin, i)).collect()
    }
}

/// Complex Gaussian random state drawn from ChaCha20 stream 0 of `seed`.
pub fn random_state(spin: SpinParameters, seed: u64) -> QuantumState {
    random_member(spin, seed, 0)
}

/// Ensemble member `index`, drawn from its own ChaCha20 stream.
pub fn random_member(spin: SpinParameters, seed: u64, index: u64) -> QuantumState {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(index);
    let amps: Vec<Complex64> = (0..spin.dim())
        .map(|_| {
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            Complex64::new(re, im)
        })
        .collect();
    QuantumState::from_amplitudes(spin, amps).expect("gaussian vector is almost surely nonzero")
}

/// Action-space weights `|psi_n|^2` at `j_n = n/S`.
#[derive(Debug, Clone, PartialEq)]
pub struct StructureFunction {
    pub j: Vec<f64>,
    pub weight: Vec<f64>,
}

pub fn structure_function(state: &QuantumState) -> StructureFunction {
    StructureFunction {
        j: state.spin().actions(),
        weight: state.amps().iter().map(|a| a.norm_sqr()).collect(),
    }
}

impl StructureFunction {
    /// KL divergence of these weights from a discretized Gaussian with the
    /// given center and variance, normalized on the same lattice.
    pub fn kl_to_gaussian(&self, center: f64, variance: f64) -> f64 {
        let g: Vec<f64> = self
            .j
            .iter()
            .map(|j| (-(j - center).powi(2) / (2.0 * variance)).exp())
            .collect();
        let z: f64 = g.iter().sum();
        self.weight
            .iter()
            .zip(&g)
            .filter(|(p, _)| **p > 0.0)
            .map(|(p, q)| p * (p / (q / z)).ln())
            .sum()
    }
}

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{EchoError, Result};
use crate::spin::TopParameters;

/// Near-resonance tolerance on `|sin(m omega / 2)|`.
pub const TOL_RES: f64 = 1e-8;

const FD_STEP: f64 = 1e-5;

/// Classical limit of the unperturbed map and the perturbation in action-angle variables.
///
/// The action space is one dimensional. Modes come in conjugate pairs
/// `v_{-m} = conj(v_m)` and `v_0 = 0`; only `m > 0` is listed.
pub trait IntegrableModel {
    fn omega(&self, j: f64) -> f64;
    fn omega_prime(&self, j: f64) -> f64;
    fn omega_second(&self, j: f64) -> f64;
    fn h0(&self, j: f64) -> f64;
    fn positive_modes(&self) -> Vec<i32>;
    /// Fourier coefficient `v_m(j)` for `m > 0`.
    fn mode(&self, m: i32, j: f64) -> Complex64;

    fn tau(&self) -> f64 {
        1.0
    }

    fn action_range(&self) -> (f64, f64) {
        (-1.0, 1.0)
    }

    fn action_volume(&self) -> f64 {
        let (a, b) = self.action_range();
        b - a
    }

    /// Doubly averaged perturbation `-tau sum_{m>0} m d/dj [|v_m|^2 cot(m omega/2)]`.
    fn bbar_v(&self, j: f64) -> Result<f64> {
        let mut acc = 0.0;
        for m in self.positive_modes() {
            let g = |x: f64| -> Result<f64> {
                let s = checked_sin_half(self, m, x)?;
                let half = 0.5 * m as f64 * self.omega(x);
                Ok(self.mode(m, x).norm_sqr() * half.cos() / s)
            };
            acc -= m as f64 * richardson(|x| g(x), j)?;
        }
        Ok(self.tau() * acc)
    }

    fn bbar_v_prime(&self, j: f64) -> Result<f64> {
        richardson(|x| self.bbar_v(x), j)
    }

    fn bbar_v_second(&self, j: f64) -> Result<f64> {
        richardson(|x| self.bbar_v_prime(x), j)
    }
}

/// `sin(m omega(j) / 2)`, failing inside the resonance tolerance.
pub fn checked_sin_half<M: IntegrableModel + ?Sized>(model: &M, m: i32, j: f64) -> Result<f64> {
    let s = (0.5 * m as f64 * model.omega(j)).sin();
    if s.abs() <= TOL_RES {
        return Err(EchoError::SingularFrequency { m, j });
    }
    Ok(s)
}

/// Central difference with one Richardson step.
pub fn richardson<F: Fn(f64) -> Result<f64>>(f: F, x: f64) -> Result<f64> {
    let h = FD_STEP;
    let d1 = (f(x + h)? - f(x - h)?) / (2.0 * h);
    let d2 = (f(x + 0.5 * h)? - f(x - 0.5 * h)?) / h;
    Ok((4.0 * d2 - d1) / 3.0)
}

/// Classical kicked top: `omega = alpha (j - beta) + gamma/2 (j - j_ref)^2`,
/// single mode `v_{±1} = sqrt(1 - j^2) / 2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TopModel {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub j_ref: f64,
}

impl TopModel {
    pub fn new(alpha: f64, beta: f64, gamma: f64, j_ref: f64) -> Self {
        Self {
            alpha,
            beta,
            gamma,
            j_ref,
        }
    }

    pub fn from_top(top: &TopParameters, j_ref: f64) -> Self {
        Self::new(top.alpha, top.beta, top.gamma, j_ref)
    }
}

impl IntegrableModel for TopModel {
    fn omega(&self, j: f64) -> f64 {
        self.alpha * (j - self.beta) + 0.5 * self.gamma * (j - self.j_ref).powi(2)
    }

    fn omega_prime(&self, j: f64) -> f64 {
        self.alpha + self.gamma * (j - self.j_ref)
    }

    fn omega_second(&self, _j: f64) -> f64 {
        self.gamma
    }

    fn h0(&self, j: f64) -> f64 {
        0.5 * self.alpha * (j - self.beta).powi(2) + self.gamma / 6.0 * (j - self.j_ref).powi(3)
    }

    fn positive_modes(&self) -> Vec<i32> {
        vec![1]
    }

    fn mode(&self, m: i32, j: f64) -> Complex64 {
        if m.abs() == 1 {
            Complex64::new(0.5 * (1.0 - j * j).max(0.0).sqrt(), 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        }
    }

    fn bbar_v(&self, j: f64) -> Result<f64> {
        let s = checked_sin_half(self, 1, j)?;
        let c = (0.5 * self.omega(j)).cos();
        let w1 = self.omega_prime(j);
        Ok(0.5 * j * c / s + (1.0 - j * j) * w1 / (8.0 * s * s))
    }

    fn bbar_v_prime(&self, j: f64) -> Result<f64> {
        let s = checked_sin_half(self, 1, j)?;
        let c = (0.5 * self.omega(j)).cos();
        let w1 = self.omega_prime(j);
        let w2 = self.omega_second(j);
        let q = 1.0 - j * j;
        Ok(0.5 * c / s - 0.5 * j * w1 / (s * s) + q * w2 / (8.0 * s * s)
            - q * w1 * w1 * c / (8.0 * s * s * s))
    }
}

/// Model with an arbitrary finite set of real modes `v_m(j) = a_m sqrt(1 - j^2)`
/// on top of the kicked-top frequency field. Used for multi-mode checks.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiModeModel {
    pub base: TopModel,
    /// `(m, a_m)` with `m > 0`.
    pub amplitudes: Vec<(i32, f64)>,
}

impl IntegrableModel for MultiModeModel {
    fn omega(&self, j: f64) -> f64 {
        self.base.omega(j)
    }

    fn omega_prime(&self, j: f64) -> f64 {
        self.base.omega_prime(j)
    }

    fn omega_second(&self, j: f64) -> f64 {
        self.base.omega_second(j)
    }

    fn h0(&self, j: f64) -> f64 {
        self.base.h0(j)
    }

    fn positive_modes(&self) -> Vec<i32> {
        self.amplitudes.iter().map(|(m, _)| *m).collect()
    }

    fn mode(&self, m: i32, j: f64) -> Complex64 {
        let a = self
            .amplitudes
            .iter()
            .find(|(k, _)| *k == m.abs())
            .map_or(0.0, |(_, a)| *a);
        Complex64::new(a * (1.0 - j * j).max(0.0).sqrt(), 0.0)
    }
}

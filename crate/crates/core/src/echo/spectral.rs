//! Fidelity from a one-time eigendecomposition of the perturbed Floquet operator.
//!
//! With `U_delta = W diag(lambda) W^dagger`,
//! `f(t) = sum_k conj(lambda_k^t c_k) [W^dagger U0^t psi]_k` where `c = W^dagger psi`.
//! The cost per sampled time is `O(dim^2)` regardless of `t`, and many states
//! are handled together as real matrix products.

use nalgebra::{DMatrix, Schur};
use num_complex::Complex64;
use std::f64::consts::TAU;

use crate::echo::trace::{EnsembleTrace, FidelityTrace};
use crate::error::{invalid, EchoError, Result};
use crate::spin::{check_dim, KickPropagator, UnperturbedPropagator};
use crate::states::QuantumState;

const SCHUR_EPS: f64 = 1e-15;
const SCHUR_MAX_ITER: usize = 0;
const OFF_DIAGONAL_TOL: f64 = 1e-9;

#[derive(Debug, Clone)]
pub struct SpectralEcho {
    dim: usize,
    /// Unperturbed phases reduced mod 2 pi.
    phases0: Vec<f64>,
    /// Perturbed eigenphases `theta_k` with `lambda_k = exp(i theta_k)`.
    eigenphases: Vec<f64>,
    /// `W^dagger`, split into real and imaginary parts.
    wh_re: DMatrix<f64>,
    wh_im: DMatrix<f64>,
}

impl SpectralEcho {
    pub fn new(unperturbed: &UnperturbedPropagator, kick: &KickPropagator) -> Result<Self> {
        let n = unperturbed.dim();
        check_dim(n, kick.dim())?;
        let k = kick.dense();
        let u = DMatrix::from_fn(n, n, |r, c| unperturbed.factor(r) * k[(r, c)]);
        let schur = Schur::try_new(u, SCHUR_EPS, SCHUR_MAX_ITER)
            .ok_or_else(|| EchoError::SpectralFailure("QR iteration did not converge".into()))?;
        let (w, t) = schur.unpack();
        let mut off = 0.0f64;
        for c in 0..n {
            for r in 0..c {
                off = off.max(t[(r, c)].norm());
            }
        }
        if off > OFF_DIAGONAL_TOL {
            return Err(EchoError::SpectralFailure(format!(
                "Schur form is not diagonal (largest off-diagonal {off:e})"
            )));
        }
        let eigenphases = (0..n).map(|i| t[(i, i)].arg()).collect();
        let wh = w.adjoint();
        Ok(Self {
            dim: n,
            phases0: unperturbed.phases.iter().map(|p| p.rem_euclid(TAU)).collect(),
            eigenphases,
            wh_re: wh.map(|z| z.re),
            wh_im: wh.map(|z| z.im),
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn eigenphases(&self) -> &[f64] {
        &self.eigenphases
    }

    fn project(&self, re: &DMatrix<f64>, im: &DMatrix<f64>) -> (DMatrix<f64>, DMatrix<f64>) {
        let pr = &self.wh_re * re - &self.wh_im * im;
        let pi = &self.wh_re * im + &self.wh_im * re;
        (pr, pi)
    }

    fn check_states(&self, states: &[QuantumState]) -> Result<()> {
        if states.is_empty() {
            return Err(invalid("states", "no states given"));
        }
        for s in states {
            check_dim(self.dim, s.dim())?;
            s.check_normalized()?;
        }
        Ok(())
    }

    /// Fidelity amplitudes of every state at every requested time.
    pub fn traces(&self, states: &[QuantumState], times: &[u64]) -> Result<Vec<FidelityTrace>> {
        self.check_states(states)?;
        let n = self.dim;
        let m = states.len();
        let psi_re = DMatrix::from_fn(n, m, |r, c| states[c].amps()[r].re);
        let psi_im = DMatrix::from_fn(n, m, |r, c| states[c].amps()[r].im);
        let (c_re, c_im) = self.project(&psi_re, &psi_im);

        let mut out: Vec<FidelityTrace> = (0..m)
            .map(|_| FidelityTrace::with_capacity(times.len()))
            .collect();
        let mut b_re = DMatrix::zeros(n, m);
        let mut b_im = DMatrix::zeros(n, m);
        for &t in times {
            if t == 0 {
                out.iter_mut().for_each(|tr| tr.push(0, Complex64::new(1.0, 0.0)));
                continue;
            }
            let tf = t as f64;
            for r in 0..n {
                let (s, c) = (-(self.phases0[r] * tf).rem_euclid(TAU)).sin_cos();
                for col in 0..m {
                    let (x, y) = (psi_re[(r, col)], psi_im[(r, col)]);
                    b_re[(r, col)] = c * x - s * y;
                    b_im[(r, col)] = c * y + s * x;
                }
            }
            let (g_re, g_im) = self.project(&b_re, &b_im);
            let lam: Vec<Complex64> = self
                .eigenphases
                .iter()
                .map(|th| Complex64::from_polar(1.0, (th * tf).rem_euclid(TAU)))
                .collect();
            for (col, tr) in out.iter_mut().enumerate() {
                let mut f = Complex64::new(0.0, 0.0);
                for k in 0..n {
                    let ck = lam[k] * Complex64::new(c_re[(k, col)], c_im[(k, col)]);
                    f += ck.conj() * Complex64::new(g_re[(k, col)], g_im[(k, col)]);
                }
                tr.push(t, f);
            }
        }
        Ok(out)
    }

    pub fn trace(&self, state: &QuantumState, times: &[u64]) -> Result<FidelityTrace> {
        Ok(self
            .traces(std::slice::from_ref(state), times)?
            .pop()
            .expect("one state in, one trace out"))
    }

    /// Ensemble statistics, processing members in batches of `batch`.
    pub fn ensemble(
        &self,
        states: &[QuantumState],
        times: &[u64],
        batch: usize,
    ) -> Result<EnsembleTrace> {
        let batch = batch.max(1);
        let mut all = Vec::with_capacity(states.len());
        for chunk in states.chunks(batch) {
            all.extend(self.traces(chunk, times)?);
        }
        EnsembleTrace::from_members(&all)
    }
}

/// Sample times `0, stride, 2 stride, ...` up to and including `t_max`.
pub fn uniform_times(t_max: u64, stride: u64) -> Vec<u64> {
    let stride = stride.max(1);
    let mut v: Vec<u64> = (0..=t_max).step_by(stride as usize).collect();
    if *v.last().unwrap() != t_max {
        v.push(t_max);
    }
    v
}

/// Roughly `count` log-spaced integer times in `[t_min, t_max]`, deduplicated.
pub fn log_times(t_min: u64, t_max: u64, count: usize) -> Vec<u64> {
    let t_min = t_min.max(1);
    let (a, b) = ((t_min as f64).ln(), (t_max.max(t_min) as f64).ln());
    let count = count.max(2);
    let mut v: Vec<u64> = (0..count)
        .map(|i| (a + (b - a) * i as f64 / (count - 1) as f64).exp().round() as u64)
        .collect();
    v.dedup();
    v
}

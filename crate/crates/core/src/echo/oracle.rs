//! Exact small-S operators of the echo expansion, used as brute-force references.

use nalgebra::DMatrix;
use num_complex::Complex64;
use std::f64::consts::TAU;

use crate::echo::trace::run_fidelity;
use crate::error::{EchoError, Result};
use crate::spin::{build_angular_momentum, check_dim, KickPropagator, SpinParameters, UnperturbedPropagator};
use crate::states::QuantumState;

/// Default largest spin for the dense builders.
pub const ORACLE_SPIN_LIMIT: u32 = 128;
/// Smallest eigenphase gap (mod 2 pi) accepted in the cot-sum.
pub const DEGENERACY_TOL: f64 = 1e-9;

/// Dense operators at one time `t`.
#[derive(Debug, Clone)]
pub struct EchoOperators {
    pub t: u64,
    pub sigma_t: DMatrix<Complex64>,
    pub v_bar: Vec<f64>,
    pub v_bbar: Vec<f64>,
    pub gamma_t: DMatrix<Complex64>,
}

#[derive(Debug, Clone)]
pub struct EchoOracle {
    spin: SpinParameters,
    unperturbed: UnperturbedPropagator,
    /// `V_{n,n+1}` of `V = Sx/S`.
    v_off: Vec<f64>,
}

impl EchoOracle {
    pub fn new(
        spin: SpinParameters,
        unperturbed: &UnperturbedPropagator,
        allow_large: bool,
    ) -> Result<Self> {
        if spin.spin() > ORACLE_SPIN_LIMIT && !allow_large {
            return Err(EchoError::OracleSizeExceeded {
                spin: spin.spin(),
                limit: ORACLE_SPIN_LIMIT,
            });
        }
        check_dim(spin.dim(), unperturbed.dim())?;
        Ok(Self {
            spin,
            unperturbed: unperturbed.clone(),
            v_off: build_angular_momentum(&spin).perturbation_offdiag(),
        })
    }

    fn phases(&self) -> &[f64] {
        &self.unperturbed.phases
    }

    fn dim(&self) -> usize {
        self.spin.dim()
    }

    /// Upper off-diagonal `(V_t)_{n,n+1} = V_{n,n+1} e^{i(phi_n - phi_{n+1}) t}`.
    fn heisenberg_upper(&self, t: u64) -> Vec<Complex64> {
        let ph = self.phases();
        let tf = t as f64;
        self.v_off
            .iter()
            .enumerate()
            .map(|(n, &v)| {
                let dphi = (ph[n] - ph[n + 1]).rem_euclid(TAU);
                Complex64::from_polar(v, (dphi * tf).rem_euclid(TAU))
            })
            .collect()
    }

    fn tridiagonal_dense(&self, upper: &[Complex64]) -> DMatrix<Complex64> {
        let n = self.dim();
        let mut m = DMatrix::zeros(n, n);
        for (i, &a) in upper.iter().enumerate() {
            m[(i, i + 1)] = a;
            m[(i + 1, i)] = a.conj();
        }
        m
    }

    pub fn v_dense(&self) -> DMatrix<Complex64> {
        self.heisenberg_v(0)
    }

    pub fn heisenberg_v(&self, t: u64) -> DMatrix<Complex64> {
        self.tridiagonal_dense(&self.heisenberg_upper(t))
    }

    /// `Sigma_t = tau * sum_{t' < t} V_{t'}`.
    pub fn sigma_exact(&self, t: u64) -> DMatrix<Complex64> {
        let mut acc = vec![Complex64::new(0.0, 0.0); self.v_off.len()];
        for tp in 0..t {
            for (a, v) in acc.iter_mut().zip(self.heisenberg_upper(tp)) {
                *a += v;
            }
        }
        self.tridiagonal_dense(&acc) * Complex64::new(self.spin.tau(), 0.0)
    }

    /// `Gamma_t = (i tau^2 / hbar) sum_{t'} sum_{t'' >= t'} [V_{t'}, V_{t''}]`.
    pub fn gamma_exact(&self, t: u64) -> DMatrix<Complex64> {
        let n = self.dim();
        let mut suffix = vec![Complex64::new(0.0, 0.0); self.v_off.len()];
        let mut acc: DMatrix<Complex64> = DMatrix::zeros(n, n);
        for tp in (0..t).rev() {
            let v = self.heisenberg_upper(tp);
            for (s, x) in suffix.iter_mut().zip(&v) {
                *s += x;
            }
            banded_commutator_add(&v, &suffix, &mut acc);
        }
        let tau = self.spin.tau();
        acc * Complex64::new(0.0, tau * tau / self.spin.hbar())
    }

    /// Diagonal of the time average; identically zero for the residual `V`.
    pub fn v_bar(&self) -> Vec<f64> {
        vec![0.0; self.dim()]
    }

    /// Diagonal of the doubly averaged perturbation,
    /// `(tau/hbar) sum_k |V_nk|^2 cot[(phi_n - phi_k)/2]`.
    ///
    /// This sign is the one produced by the defining limit `Gamma_t / t`.
    pub fn v_doubly_averaged_exact(&self) -> Result<Vec<f64>> {
        let ph = self.phases();
        let n = self.dim();
        let pref = self.spin.tau() / self.spin.hbar();
        let mut out = vec![0.0; n];
        for (i, &v) in self.v_off.iter().enumerate() {
            let d = (ph[i] - ph[i + 1]).rem_euclid(TAU);
            let gap = d.min(TAU - d);
            if gap < DEGENERACY_TOL && v != 0.0 {
                return Err(EchoError::DegenerateSpectrum {
                    n: self.spin.m_of(i),
                    k: self.spin.m_of(i + 1),
                    gap,
                });
            }
            let c = 1.0 / (0.5 * d).tan();
            out[i] += pref * v * v * c;
            out[i + 1] -= pref * v * v * c;
        }
        Ok(out)
    }

    pub fn operators(&self, t: u64) -> Result<EchoOperators> {
        Ok(EchoOperators {
            t,
            sigma_t: self.sigma_exact(t),
            v_bar: self.v_bar(),
            v_bbar: self.v_doubly_averaged_exact()?,
            gamma_t: self.gamma_exact(t),
        })
    }

    /// `V_t psi`, computed as `U0^{-t} V U0^t psi` in O(dim).
    fn v_t_apply(&self, psi: &[Complex64], t: u64) -> Vec<Complex64> {
        let upper = self.heisenberg_upper(t);
        let n = psi.len();
        let mut out = vec![Complex64::new(0.0, 0.0); n];
        for i in 0..n - 1 {
            out[i] += upper[i] * psi[i + 1];
            out[i + 1] += upper[i].conj() * psi[i];
        }
        out
    }

    fn check_state(&self, state: &QuantumState) -> Result<()> {
        check_dim(self.dim(), state.dim())
    }

    /// `C(t', t'') = <V_{t'} V_{t''}> - <V_{t'}><V_{t''}>`.
    pub fn correlation_function(&self, state: &QuantumState, t1: u64, t2: u64) -> Result<Complex64> {
        self.check_state(state)?;
        let psi = state.amps();
        let a = self.v_t_apply(psi, t1);
        let b = self.v_t_apply(psi, t2);
        Ok(dot(&a, &b) - dot(psi, &a) * dot(psi, &b))
    }

    /// `C(t', t'')` for all `t', t'' in 0..=t_max`.
    pub fn correlation_surface(&self, state: &QuantumState, t_max: u64) -> Result<DMatrix<Complex64>> {
        self.check_state(state)?;
        let psi = state.amps();
        let w: Vec<Vec<Complex64>> = (0..=t_max).map(|t| self.v_t_apply(psi, t)).collect();
        let means: Vec<Complex64> = w.iter().map(|x| dot(psi, x)).collect();
        let n = (t_max + 1) as usize;
        let mut c = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                let v = dot(&w[i], &w[j]) - means[i] * means[j];
                c[(i, j)] = v;
                c[(j, i)] = v.conj();
            }
        }
        Ok(c)
    }

    /// Mean and variance of `Sigma_t` in `state`.
    pub fn sigma_moments(&self, state: &QuantumState, t: u64) -> Result<(f64, f64)> {
        self.check_state(state)?;
        let psi = state.amps();
        let mut s = vec![Complex64::new(0.0, 0.0); psi.len()];
        for tp in 0..t {
            for (a, b) in s.iter_mut().zip(self.v_t_apply(psi, tp)) {
                *a += b;
            }
        }
        let tau = self.spin.tau();
        s.iter_mut().for_each(|x| *x *= tau);
        let mean = dot(psi, &s).re;
        let second = dot(&s, &s).re;
        Ok((mean, second - mean * mean))
    }

    /// `F_exact(t; delta) - [1 - (delta/hbar)^2 Var(Sigma_t)]` for each delta.
    pub fn linear_response_residual(
        &self,
        state: &QuantumState,
        kick: &KickPropagator,
        t: u64,
        deltas: &[f64],
    ) -> Result<Vec<f64>> {
        let (_, var) = self.sigma_moments(state, t)?;
        let hbar = self.spin.hbar();
        deltas
            .iter()
            .map(|&d| {
                let k = kick.with_delta(d);
                let tr = run_fidelity(state, &self.unperturbed, &k, t, t.max(1))?;
                let exact = *tr.fidelity.last().expect("trace has at least t = 0");
                Ok(exact - (1.0 - (d / hbar).powi(2) * var))
            })
            .collect()
    }
}

fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// Adds `[A, B]` to `acc` for zero-diagonal hermitian tridiagonal `A`, `B`
/// given by their upper off-diagonals.
fn banded_commutator_add(a: &[Complex64], b: &[Complex64], acc: &mut DMatrix<Complex64>) {
    let n = a.len() + 1;
    let elem = |u: &[Complex64], i: usize, j: usize| -> Complex64 {
        if j == i + 1 {
            u[i]
        } else if i == j + 1 {
            u[j].conj()
        } else {
            Complex64::new(0.0, 0.0)
        }
    };
    for i in 0..n {
        let lo = i.saturating_sub(2);
        let hi = (i + 2).min(n - 1);
        for k in lo..=hi {
            let mut v = Complex64::new(0.0, 0.0);
            for j in [i.wrapping_sub(1), i + 1] {
                if j < n {
                    v += elem(a, i, j) * elem(b, j, k) - elem(b, i, j) * elem(a, j, k);
                }
            }
            acc[(i, k)] += v;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spin::{build_unperturbed, TopParameters};

    fn oracle(s: u32, beta: f64) -> EchoOracle {
        let spin = SpinParameters::new(s).unwrap();
        let top = TopParameters::new(1.1, beta, 0.0, 0.0).unwrap();
        EchoOracle::new(spin, &build_unperturbed(&spin, &top, 0.0), false).unwrap()
    }

    #[test]
    fn size_gate() {
        let spin = SpinParameters::new(200).unwrap();
        let top = TopParameters::new(1.1, 0.0, 0.0, 0.0).unwrap();
        let u = build_unperturbed(&spin, &top, 0.0);
        assert!(matches!(
            EchoOracle::new(spin, &u, false),
            Err(EchoError::OracleSizeExceeded { .. })
        ));
        assert!(EchoOracle::new(spin, &u, true).is_ok());
    }

    #[test]
    fn banded_commutator_matches_dense() {
        let o = oracle(6, 0.2);
        let a = o.heisenberg_upper(3);
        let b = o.heisenberg_upper(8);
        let mut acc = DMatrix::zeros(o.dim(), o.dim());
        banded_commutator_add(&a, &b, &mut acc);
        let (da, db) = (o.tridiagonal_dense(&a), o.tridiagonal_dense(&b));
        let dense = &da * &db - &db * &da;
        assert!((acc - dense).iter().all(|z| z.norm() < 1e-14));
    }

    #[test]
    fn trace_of_doubly_averaged_vanishes() {
        let v = oracle(40, 0.0).v_doubly_averaged_exact().unwrap();
        assert!(v.iter().sum::<f64>().abs() < 1e-9);
    }

    #[test]
    fn sigma_zero_time_is_zero() {
        let o = oracle(5, 0.0);
        assert!(o.sigma_exact(0).iter().all(|z| z.norm() == 0.0));
    }
}

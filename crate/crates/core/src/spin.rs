//! Spin-S operators and the two one-step Floquet propagators of the top.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, EchoError, Result};
use crate::numerics::symmetric_tridiagonal_eigen;

/// Spin magnitude together with the derived Hilbert-space quantities.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpinParameters {
    spin: u32,
}

impl SpinParameters {
    pub fn new(spin: u32) -> Result<Self> {
        if spin == 0 {
            return Err(invalid("S", "spin must be a positive integer"));
        }
        Ok(Self { spin })
    }

    /// Accepts a real spin value, rejecting half-integers and non-positive values.
    pub fn from_real(spin: f64) -> Result<Self> {
        if !spin.is_finite() || spin.fract() != 0.0 || spin < 1.0 || spin > u32::MAX as f64 {
            return Err(invalid("S", format!("{spin} is not a positive integer")));
        }
        Self::new(spin as u32)
    }

    #[inline]
    pub fn spin(&self) -> u32 {
        self.spin
    }

    #[inline]
    pub fn dim(&self) -> usize {
        2 * self.spin as usize + 1
    }

    #[inline]
    pub fn hbar(&self) -> f64 {
        1.0 / self.spin as f64
    }

    #[inline]
    pub fn tau(&self) -> f64 {
        1.0
    }

    /// Magnetic quantum number of basis index `idx` (0 ↦ −S).
    #[inline]
    pub fn m_of(&self, idx: usize) -> i64 {
        idx as i64 - self.spin as i64
    }

    /// Action `j = m/S` of basis index `idx`.
    #[inline]
    pub fn action_of(&self, idx: usize) -> f64 {
        self.m_of(idx) as f64 / self.spin as f64
    }

    pub fn actions(&self) -> Vec<f64> {
        (0..self.dim()).map(|i| self.action_of(i)).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TopParameters {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub delta: f64,
}

impl TopParameters {
    pub fn new(alpha: f64, beta: f64, gamma: f64, delta: f64) -> Result<Self> {
        let p = Self {
            alpha,
            beta,
            gamma,
            delta,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("alpha", self.alpha),
            ("beta", self.beta),
            ("gamma", self.gamma),
            ("delta", self.delta),
        ] {
            if !v.is_finite() {
                return Err(invalid(name, "must be finite"));
            }
        }
        if self.delta < 0.0 {
            return Err(invalid("delta", "must be non-negative"));
        }
        Ok(())
    }
}

/// Sz (diagonal) and Sx (symmetric tridiagonal) in the Sz eigenbasis.
#[derive(Debug, Clone, PartialEq)]
pub struct AngularMomentumOps {
    pub sz_diag: Vec<f64>,
    pub sx_offdiag: Vec<f64>,
}

pub fn build_angular_momentum(params: &SpinParameters) -> AngularMomentumOps {
    let s = params.spin() as f64;
    let sz_diag: Vec<f64> = (0..params.dim()).map(|i| params.m_of(i) as f64).collect();
    let sx_offdiag = sz_diag[..params.dim() - 1]
        .iter()
        .map(|&m| 0.5 * (s * (s + 1.0) - m * (m + 1.0)).sqrt())
        .collect();
    AngularMomentumOps {
        sz_diag,
        sx_offdiag,
    }
}

impl AngularMomentumOps {
    pub fn dim(&self) -> usize {
        self.sz_diag.len()
    }

    pub fn dense_sz(&self) -> DMatrix<Complex64> {
        let n = self.dim();
        DMatrix::from_fn(n, n, |i, j| {
            if i == j {
                Complex64::new(self.sz_diag[i], 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
    }

    pub fn dense_sx(&self) -> DMatrix<Complex64> {
        let n = self.dim();
        DMatrix::from_fn(n, n, |i, j| {
            let v = if j == i + 1 {
                self.sx_offdiag[i]
            } else if i == j + 1 {
                self.sx_offdiag[j]
            } else {
                0.0
            };
            Complex64::new(v, 0.0)
        })
    }

    /// Sy := i[Sx, Sz].
    pub fn dense_sy(&self) -> DMatrix<Complex64> {
        let sx = self.dense_sx();
        let sz = self.dense_sz();
        (&sx * &sz - &sz * &sx) * Complex64::new(0.0, 1.0)
    }

    /// Matrix elements of the perturbation `V = Sx/S` on the first off-diagonal.
    pub fn perturbation_offdiag(&self) -> Vec<f64> {
        let s = (self.dim() - 1) as f64 / 2.0;
        self.sx_offdiag.iter().map(|x| x / s).collect()
    }
}

/// Diagonal twist `exp(-i phi_m)`.
#[derive(Debug, Clone)]
pub struct UnperturbedPropagator {
    pub phases: Vec<f64>,
    pub j_ref: f64,
    factors_re: Vec<f64>,
    factors_im: Vec<f64>,
}

pub fn build_unperturbed(
    params: &SpinParameters,
    top: &TopParameters,
    j_ref: f64,
) -> UnperturbedPropagator {
    let s = params.spin() as f64;
    let phases: Vec<f64> = (0..params.dim())
        .map(|i| {
            let j = params.action_of(i);
            let mut phi = 0.5 * s * top.alpha * (j - top.beta).powi(2);
            if top.gamma != 0.0 {
                phi += s * top.gamma / 6.0 * (j - j_ref).powi(3);
            }
            phi
        })
        .collect();
    UnperturbedPropagator::from_phases(phases, j_ref)
}

impl UnperturbedPropagator {
    pub fn from_phases(phases: Vec<f64>, j_ref: f64) -> Self {
        let factors_re = phases.iter().map(|p| p.cos()).collect();
        let factors_im = phases.iter().map(|p| -p.sin()).collect();
        Self {
            phases,
            j_ref,
            factors_re,
            factors_im,
        }
    }

    pub fn dim(&self) -> usize {
        self.phases.len()
    }

    /// `exp(-i phi_m)`.
    pub fn factor(&self, idx: usize) -> Complex64 {
        Complex64::new(self.factors_re[idx], self.factors_im[idx])
    }

    pub fn apply(&self, amps: &mut [Complex64]) -> Result<()> {
        check_dim(self.dim(), amps.len())?;
        for (a, (&c, &s)) in amps
            .iter_mut()
            .zip(self.factors_re.iter().zip(&self.factors_im))
        {
            *a *= Complex64::new(c, s);
        }
        Ok(())
    }

    pub(crate) fn apply_split(&self, re: &mut [f64], im: &mut [f64]) {
        for i in 0..re.len() {
            let (c, s) = (self.factors_re[i], self.factors_im[i]);
            let (x, y) = (re[i], im[i]);
            re[i] = c * x - s * y;
            im[i] = c * y + s * x;
        }
    }
}

/// `exp(-i delta Sx)` through the eigendecomposition of Sx.
#[derive(Debug, Clone)]
pub struct KickPropagator {
    pub eigvals: Vec<f64>,
    /// Row-major; column `k` is the eigenvector of `eigvals[k]`.
    pub eigvecs: Vec<f64>,
    pub delta: f64,
    // Row-major transpose, so both rotations run as contiguous axpy sweeps.
    eigvecs_t: Vec<f64>,
    phase_re: Vec<f64>,
    phase_im: Vec<f64>,
}

pub fn build_kick(params: &SpinParameters, delta: f64) -> Result<KickPropagator> {
    if !delta.is_finite() {
        return Err(invalid("delta", "must be finite"));
    }
    let ops = build_angular_momentum(params);
    let n = ops.dim();
    let eig = symmetric_tridiagonal_eigen(&vec![0.0; n], &ops.sx_offdiag)?;
    let mut eigvecs_t = vec![0.0; n * n];
    for r in 0..n {
        for c in 0..n {
            eigvecs_t[c * n + r] = eig.vectors[r * n + c];
        }
    }
    let mut kick = KickPropagator {
        eigvals: eig.values,
        eigvecs: eig.vectors,
        delta,
        eigvecs_t,
        phase_re: vec![],
        phase_im: vec![],
    };
    kick.set_delta(delta);
    Ok(kick)
}

impl KickPropagator {
    pub fn dim(&self) -> usize {
        self.eigvals.len()
    }

    /// Reuses the eigendecomposition for another rotation angle.
    pub fn with_delta(&self, delta: f64) -> Self {
        let mut k = self.clone();
        k.set_delta(delta);
        k
    }

    fn set_delta(&mut self, delta: f64) {
        self.delta = delta;
        self.phase_re = self.eigvals.iter().map(|mu| (delta * mu).cos()).collect();
        self.phase_im = self.eigvals.iter().map(|mu| -(delta * mu).sin()).collect();
    }

    pub fn apply(&self, amps: &mut [Complex64]) -> Result<()> {
        check_dim(self.dim(), amps.len())?;
        let n = self.dim();
        let mut re: Vec<f64> = amps.iter().map(|a| a.re).collect();
        let mut im: Vec<f64> = amps.iter().map(|a| a.im).collect();
        let mut scratch = KickScratch::new(n);
        self.apply_split(&mut re, &mut im, &mut scratch);
        for (a, (&x, &y)) in amps.iter_mut().zip(re.iter().zip(&im)) {
            *a = Complex64::new(x, y);
        }
        Ok(())
    }

    pub(crate) fn apply_split(&self, re: &mut [f64], im: &mut [f64], scratch: &mut KickScratch) {
        let n = self.dim();
        let (yr, yi) = (&mut scratch.re, &mut scratch.im);
        yr.fill(0.0);
        yi.fill(0.0);
        // y = Q^T x
        for r in 0..n {
            let row = &self.eigvecs[r * n..(r + 1) * n];
            axpy2(re[r], im[r], row, yr, yi);
        }
        for k in 0..n {
            let (c, s) = (self.phase_re[k], self.phase_im[k]);
            let (x, y) = (yr[k], yi[k]);
            yr[k] = c * x - s * y;
            yi[k] = c * y + s * x;
        }
        // x = Q y
        re.fill(0.0);
        im.fill(0.0);
        for k in 0..n {
            let row = &self.eigvecs_t[k * n..(k + 1) * n];
            axpy2(yr[k], yi[k], row, re, im);
        }
    }

    /// Dense `exp(-i delta Sx)` assembled from the eigendecomposition.
    pub fn dense(&self) -> DMatrix<Complex64> {
        let n = self.dim();
        DMatrix::from_fn(n, n, |r, c| {
            let mut acc = Complex64::new(0.0, 0.0);
            for k in 0..n {
                acc += Complex64::new(self.phase_re[k], self.phase_im[k])
                    * (self.eigvecs[r * n + k] * self.eigvecs[c * n + k]);
            }
            acc
        })
    }
}

#[inline]
fn axpy2(ar: f64, ai: f64, row: &[f64], yr: &mut [f64], yi: &mut [f64]) {
    if ar == 0.0 && ai == 0.0 {
        return;
    }
    for ((q, r), i) in row.iter().zip(yr.iter_mut()).zip(yi.iter_mut()) {
        *r += ar * q;
        *i += ai * q;
    }
}

pub(crate) struct KickScratch {
    re: Vec<f64>,
    im: Vec<f64>,
}

impl KickScratch {
    pub(crate) fn new(n: usize) -> Self {
        Self {
            re: vec![0.0; n],
            im: vec![0.0; n],
        }
    }
}

pub(crate) fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(EchoError::DimensionMismatch { expected, found });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn max_dev(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> f64 {
        (a - b).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    #[test]
    fn spin_one_matrices() {
        let ops = build_angular_momentum(&SpinParameters::new(1).unwrap());
        assert_eq!(ops.sz_diag, vec![-1.0, 0.0, 1.0]);
        let r = std::f64::consts::FRAC_1_SQRT_2;
        assert!(ops.sx_offdiag.iter().all(|x| (x - r).abs() < 1e-15));
    }

    #[test]
    fn half_integer_and_zero_spin_rejected() {
        assert!(SpinParameters::from_real(0.5).is_err());
        assert!(SpinParameters::new(0).is_err());
        assert_eq!(SpinParameters::from_real(3.0).unwrap().dim(), 7);
    }

    #[test]
    fn commutation_relations() {
        for s in [1, 4, 10, 20] {
            let ops = build_angular_momentum(&SpinParameters::new(s).unwrap());
            let (sx, sy, sz) = (ops.dense_sx(), ops.dense_sy(), ops.dense_sz());
            let i = Complex64::new(0.0, 1.0);
            assert!(max_dev(&(&sx * &sy - &sy * &sx), &(&sz * i)) < 1e-12);
            assert!(max_dev(&(&sy * &sz - &sz * &sy), &(&sx * i)) < 1e-12);
            assert!(max_dev(&sy.adjoint(), &sy) < 1e-12);
        }
    }

    #[test]
    fn perturbation_has_zero_diagonal() {
        let ops = build_angular_momentum(&SpinParameters::new(7).unwrap());
        let sx = ops.dense_sx();
        assert!((0..ops.dim()).all(|i| sx[(i, i)] == Complex64::new(0.0, 0.0)));
    }

    #[test]
    fn unperturbed_phase_values() {
        let p = SpinParameters::new(200).unwrap();
        let top = TopParameters::new(1.1, 0.0, 0.0, 0.0).unwrap();
        let u = build_unperturbed(&p, &top, 0.0);
        assert_eq!(u.phases[200], 0.0);
        assert!((u.phases[400] - 110.0).abs() < 1e-12);
        let top = TopParameters::new(1.1, 1.4, 0.0, 0.0).unwrap();
        let u = build_unperturbed(&p, &top, 0.0);
        assert!((u.phases[400] - 200.0 * 0.55 * 0.16).abs() < 1e-11);
    }

    #[test]
    fn cubic_term_uses_reference_point() {
        let p = SpinParameters::new(10).unwrap();
        let top = TopParameters::new(0.0, 0.0, 6.0, 0.0).unwrap();
        let u = build_unperturbed(&p, &top, 0.5);
        assert!(u.phases[15].abs() < 1e-14);
        assert!((u.phases[20] - 10.0 * 0.125).abs() < 1e-13);
    }

    #[test]
    fn zero_and_full_turn_kicks_are_identity() {
        let p = SpinParameters::new(12).unwrap();
        let v: Vec<Complex64> = (0..p.dim())
            .map(|i| Complex64::new((i as f64).sin(), (i as f64 * 0.3).cos()))
            .collect();
        for delta in [0.0, 2.0 * std::f64::consts::PI] {
            let k = build_kick(&p, delta).unwrap();
            let mut w = v.clone();
            k.apply(&mut w).unwrap();
            let tol = if delta == 0.0 { 1e-14 } else { 1e-12 };
            for (a, b) in v.iter().zip(&w) {
                assert!((a - b).norm() < tol * 10.0);
            }
        }
    }

    #[test]
    fn eigenvectors_orthogonal_and_eigenvalues_integer() {
        let p = SpinParameters::new(30).unwrap();
        let k = build_kick(&p, 0.1).unwrap();
        let n = p.dim();
        for (idx, mu) in k.eigvals.iter().enumerate() {
            assert!((mu - (idx as f64 - 30.0)).abs() < 1e-11);
        }
        for a in 0..n {
            for b in 0..n {
                let dot: f64 = (0..n).map(|r| k.eigvecs[r * n + a] * k.eigvecs[r * n + b]).sum();
                let want = if a == b { 1.0 } else { 0.0 };
                assert!((dot - want).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn dimension_mismatch() {
        let p = SpinParameters::new(3).unwrap();
        let k = build_kick(&p, 0.1).unwrap();
        let mut v = vec![Complex64::new(1.0, 0.0); 5];
        assert!(matches!(
            k.apply(&mut v),
            Err(EchoError::DimensionMismatch { expected: 7, found: 5 })
        ));
        let u = build_unperturbed(&p, &TopParameters::new(1.0, 0.0, 0.0, 0.0).unwrap(), 0.0);
        assert!(u.apply(&mut v).is_err());
    }
}

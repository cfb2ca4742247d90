//! Dense reference implementations shared by the integration tests. Everything here is
//! rebuilt from the defining formulas and never calls the production propagators.

#![allow(dead_code)]

use nalgebra::DMatrix;
use num_complex::Complex64;

pub type CMat = DMatrix<Complex64>;

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// `S_x` in the `S_z` basis ordered `m = -S..=S`.
pub fn sx_dense(s: u32) -> CMat {
    let s = s as f64;
    let n = (2.0 * s) as usize + 1;
    let mut m = CMat::zeros(n, n);
    for i in 0..n - 1 {
        let mm = i as f64 - s;
        let v = 0.5 * (s * (s + 1.0) - mm * (mm + 1.0)).sqrt();
        m[(i, i + 1)] = c(v, 0.0);
        m[(i + 1, i)] = c(v, 0.0);
    }
    m
}

/// Matrix exponential by scaling and squaring of a truncated Taylor series.
pub fn expm(a: &CMat) -> CMat {
    let norm = a.iter().map(|z| z.norm()).sum::<f64>();
    let mut squarings = 0;
    let mut scale = 1.0;
    while norm * scale > 0.25 {
        scale *= 0.5;
        squarings += 1;
    }
    let x = a * c(scale, 0.0);
    let n = a.nrows();
    let mut term = CMat::identity(n, n);
    let mut sum = CMat::identity(n, n);
    for k in 1..=24 {
        term = &term * &x * c(1.0 / k as f64, 0.0);
        sum += &term;
    }
    for _ in 0..squarings {
        sum = &sum * &sum;
    }
    sum
}

/// Unperturbed phases `phi_m = (S alpha/2)(m/S - beta)^2 + (S gamma/6)(m/S - j_ref)^3`.
pub fn phases(s: u32, alpha: f64, beta: f64, gamma: f64, j_ref: f64) -> Vec<f64> {
    let sf = s as f64;
    (0..2 * s as usize + 1)
        .map(|i| {
            let j = (i as f64 - sf) / sf;
            0.5 * sf * alpha * (j - beta).powi(2) + sf * gamma / 6.0 * (j - j_ref).powi(3)
        })
        .collect()
}

pub fn diag_unitary(phases: &[f64], power: f64) -> CMat {
    let n = phases.len();
    let mut m = CMat::zeros(n, n);
    for (i, p) in phases.iter().enumerate() {
        m[(i, i)] = Complex64::from_polar(1.0, -p * power);
    }
    m
}

pub fn matrix_power(m: &CMat, t: u64) -> CMat {
    let n = m.nrows();
    let mut out = CMat::identity(n, n);
    let mut base = m.clone();
    let mut e = t;
    while e > 0 {
        if e & 1 == 1 {
            out = &out * &base;
        }
        base = &base * &base;
        e >>= 1;
    }
    out
}

/// Echo operator `M(t) = U_delta^{-t} U_0^t` with `U_delta = U_0 exp(-i delta S_x)`.
pub fn echo_operator(s: u32, alpha: f64, beta: f64, delta: f64, t: u64) -> CMat {
    let ph = phases(s, alpha, beta, 0.0, 0.0);
    let u0 = diag_unitary(&ph, 1.0);
    let kick = expm(&(sx_dense(s) * c(0.0, -delta)));
    let ud = &u0 * &kick;
    let back = matrix_power(&ud.adjoint(), t);
    back * diag_unitary(&ph, t as f64)
}

pub fn expect(psi: &[Complex64], m: &CMat) -> Complex64 {
    let n = psi.len();
    let mut acc = c(0.0, 0.0);
    for i in 0..n {
        for j in 0..n {
            acc += psi[i].conj() * m[(i, j)] * psi[j];
        }
    }
    acc
}

pub fn max_abs_diff(a: &CMat, b: &CMat) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

/// Log-log slope by ordinary least squares.
pub fn slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}

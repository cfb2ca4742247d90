//! Long-time decay beyond the plateau, driven by the doubly averaged perturbation.
//!
//! Evaluator A integrates `(1/V) int dj exp(i lambda vbb(j))`, `lambda = tau delta^2 t / (2 hbar)`,
//! directly. `vbb` has double poles where `sin(m omega / 2)` vanishes; near each pole the
//! integrand oscillates without bound, so the last stretch is replaced by the two-term
//! integration-by-parts tail, which is exact up to `O(phi''^2 / phi'^4)`.
//! Evaluator B is the stationary-phase sum over interior critical points of `vbb`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_PI_4, PI};

use super::model::IntegrableModel;
use super::plateau::plateau_coherent;
use crate::error::{EchoError, Result};
use crate::numerics::{integrate_complex, QuadratureOptions};
use crate::states::CoherentParams;

const STATIONARY_GRID: usize = 2048;
const BISECT_TOL: f64 = 1e-12;
const STATIONARY_RESIDUAL: f64 = 1e-9;
const POLE_GRID: usize = 8192;
/// Tail is attached once `|phi''| / phi'^2` drops below this.
const TAIL_RATIO: f64 = 1e-2;
const MIN_EPS: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StationaryPoint {
    pub j_eta: f64,
    /// Second derivative of `vbb` at `j_eta`.
    pub w_eta: f64,
    /// `sign(w_eta) pi / 4`.
    pub nu_eta: f64,
}

/// Coherent-state Gaussian decay amplitude
/// `exp(-(u^2/Lambda) delta^4 t^2 / (16 hbar) + i vbb(j*) delta^2 tau t / (2 hbar))`.
pub fn gaussian_decay_coherent<M: IntegrableModel + ?Sized>(
    model: &M,
    params: &CoherentParams,
    delta: f64,
    hbar: f64,
    t: f64,
) -> Result<Complex64> {
    let tau = model.tau();
    let u = tau * model.bbar_v_prime(params.j_star)?;
    let vbb = model.bbar_v(params.j_star)?;
    let d2 = delta * delta;
    let re = -(u * u / params.lambda_squeeze) * d2 * d2 * t * t / (16.0 * hbar);
    let im = vbb * d2 * tau * t / (2.0 * hbar);
    Ok(Complex64::new(re, im).exp())
}

/// Strong-perturbation variant of the Gaussian fidelity: the plateau value times
/// `exp(-factor (t / t_coh)^2)`.
pub fn gaussian_decay_corrected<M: IntegrableModel + ?Sized>(
    model: &M,
    params: &CoherentParams,
    delta: f64,
    hbar: f64,
    t: f64,
    exponent_factor: f64,
) -> Result<f64> {
    let f = gaussian_decay_coherent(model, params, delta, hbar, t)?.norm_sqr();
    Ok(plateau_coherent(model, params.j_star, delta, hbar)? * f.powf(exponent_factor))
}

fn bisect<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    let mut flo = f(lo);
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        let fm = f(mid);
        if fm == 0.0 {
            return mid;
        }
        if fm.signum() == flo.signum() {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Actions in the open range where some `sin(m omega(j) / 2)` vanishes.
pub fn resonant_actions<M: IntegrableModel + ?Sized>(model: &M) -> Vec<f64> {
    let (a, b) = model.action_range();
    let mut poles = Vec::new();
    for m in model.positive_modes() {
        let s = |j: f64| (0.5 * m as f64 * model.omega(j)).sin();
        let mut prev = (a, s(a));
        for i in 1..=POLE_GRID {
            let j = a + (b - a) * i as f64 / POLE_GRID as f64;
            let v = s(j);
            if v == 0.0 && i < POLE_GRID {
                poles.push(j);
            } else if prev.1 != 0.0 && v != 0.0 && prev.1.signum() != v.signum() {
                poles.push(bisect(s, prev.0, j, 1e-15));
            }
            prev = (j, v);
        }
    }
    poles.retain(|&p| p > a && p < b);
    poles.sort_by(f64::total_cmp);
    poles.dedup_by(|x, y| (*x - *y).abs() < 1e-12);
    poles
}

/// Locates interior critical points of `vbb` by sign-change bracketing and bisection.
pub fn stationary_points<M: IntegrableModel + ?Sized>(model: &M) -> Vec<StationaryPoint> {
    let (a, b) = model.action_range();
    let h = (b - a) / STATIONARY_GRID as f64;
    let deriv = |j: f64| model.bbar_v_prime(j).unwrap_or(f64::NAN);
    let mut out = Vec::new();
    let mut prev: Option<(f64, f64)> = None;
    for i in 0..STATIONARY_GRID {
        let j = a + (i as f64 + 0.5) * h;
        let d = deriv(j);
        if !d.is_finite() {
            prev = None;
            continue;
        }
        if let Some((jp, dp)) = prev {
            if dp.signum() != d.signum() {
                let root = bisect(deriv, jp, j, BISECT_TOL);
                if deriv(root).abs() <= STATIONARY_RESIDUAL {
                    if let Ok(w) = model.bbar_v_second(root) {
                        if w != 0.0 {
                            out.push(StationaryPoint {
                                j_eta: root,
                                w_eta: w,
                                nu_eta: w.signum() * FRAC_PI_4,
                            });
                        }
                    }
                }
            }
        }
        prev = Some((j, d));
    }
    out
}

/// Evaluator B: `sum_eta sqrt(4 pi hbar / (t tau delta^2 |W|)) / V * exp(i lambda vbb(j_eta) + i nu_eta)`.
pub fn stationary_phase_amplitude<M: IntegrableModel + ?Sized>(
    model: &M,
    points: &[StationaryPoint],
    delta: f64,
    hbar: f64,
    t: f64,
) -> Result<Complex64> {
    if points.is_empty() {
        return Err(EchoError::NoStationaryPoint);
    }
    let tau = model.tau();
    let lambda = tau * delta * delta * t / (2.0 * hbar);
    let mut acc = Complex64::new(0.0, 0.0);
    for p in points {
        let amp = (4.0 * PI * hbar / (t * tau * delta * delta * p.w_eta.abs())).sqrt();
        acc += amp * Complex64::from_polar(1.0, lambda * model.bbar_v(p.j_eta)? + p.nu_eta);
    }
    Ok(acc / model.action_volume())
}

/// Two-term antiderivative of `exp(i phi)` for a locally monotone phase.
fn ibp_antiderivative(phi: f64, d1: f64, d2: f64) -> Complex64 {
    Complex64::from_polar(1.0, phi) * Complex64::new(-d2 / d1.powi(3), -1.0 / d1)
}

/// Distance from `pole` (towards `dir`) at which the tail expansion becomes valid.
fn tail_offset<M: IntegrableModel + ?Sized>(model: &M, lambda: f64, pole: f64, dir: f64, start: f64) -> Result<f64> {
    let mut eps = start;
    while eps >= MIN_EPS {
        let x = pole + dir * eps;
        if let (Ok(d1), Ok(d2)) = (model.bbar_v_prime(x), model.bbar_v_second(x)) {
            let (p1, p2) = (lambda * d1, lambda * d2);
            if p1 != 0.0 && p2.abs() / (p1 * p1) < TAIL_RATIO {
                return Ok(eps);
            }
        }
        eps *= 0.5;
    }
    Err(EchoError::QuadratureNoConvergence {
        a: pole - start,
        b: pole + start,
        error: f64::INFINITY,
    })
}

/// Evaluator A: direct action-space quadrature of the long-time amplitude.
pub fn asi_amplitude<M: IntegrableModel + ?Sized>(model: &M, delta: f64, hbar: f64, t: f64) -> Result<Complex64> {
    let (a, b) = model.action_range();
    let lambda = model.tau() * delta * delta * t / (2.0 * hbar);
    if lambda == 0.0 {
        return Ok(Complex64::new(1.0, 0.0));
    }
    let poles = resonant_actions(model);
    let opts = QuadratureOptions {
        max_intervals: 200_000,
        ..QuadratureOptions::default()
    };

    // Segment ends: (position, tail sign) where a tail is attached at pole-adjacent ends.
    let mut nodes: Vec<(f64, Option<f64>)> = vec![(a, None)];
    for (i, &p) in poles.iter().enumerate() {
        let left_room = p - if i == 0 { a } else { poles[i - 1] };
        let right_room = if i + 1 == poles.len() { b } else { poles[i + 1] } - p;
        let el = tail_offset(model, lambda, p, -1.0, (0.25 * left_room).min(0.1))?;
        let er = tail_offset(model, lambda, p, 1.0, (0.25 * right_room).min(0.1))?;
        nodes.push((p - el, Some(-1.0)));
        nodes.push((p + er, Some(1.0)));
    }
    nodes.push((b, None));

    let mut err = None;
    let mut total = Complex64::new(0.0, 0.0);
    for pair in nodes.chunks(2) {
        let (lo, hi) = (pair[0], pair[1]);
        let r = integrate_complex(
            |j| match model.bbar_v(j) {
                Ok(v) => Complex64::from_polar(1.0, lambda * v),
                Err(e) => {
                    err = Some(e);
                    Complex64::new(0.0, 0.0)
                }
            },
            lo.0,
            hi.0,
            opts,
        )?;
        total += r.value;
        for (x, sign) in [lo, hi] {
            if let Some(s) = sign {
                let tail = ibp_antiderivative(
                    lambda * model.bbar_v(x)?,
                    lambda * model.bbar_v_prime(x)?,
                    lambda * model.bbar_v_second(x)?,
                );
                total += s * tail;
            }
        }
    }
    if let Some(e) = err {
        return Err(e);
    }
    Ok(total / model.action_volume())
}

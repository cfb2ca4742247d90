//! Modified Fourier coefficients, linear-response variances and plateau values.

use num_complex::Complex64;
use std::f64::consts::TAU;

use super::model::{checked_sin_half, IntegrableModel, TOL_RES};
use crate::error::{EchoError, Result};
use crate::numerics::{bessel_j0, integrate, integrate_complex, QuadratureOptions};
use crate::spin::SpinParameters;

/// Lattice points with `|sin(m omega / 2)|` below `SKIP_FACTOR * hbar` are dropped
/// from the singular random-state plateau sum.
pub const SKIP_FACTOR: f64 = 10.0;

const NONRES_GRID: usize = 4096;

/// `tilde v_m = tau v_m / (1 - e^{i m omega})` for any nonzero `m`.
pub fn tilde_v_mode<M: IntegrableModel + ?Sized>(model: &M, m: i32, j: f64) -> Result<Complex64> {
    if m == 0 {
        return Ok(Complex64::new(0.0, 0.0));
    }
    checked_sin_half(model, m, j)?;
    let v = if m > 0 {
        model.mode(m, j)
    } else {
        model.mode(-m, j).conj()
    };
    let denom = Complex64::new(1.0, 0.0) - Complex64::from_polar(1.0, m as f64 * model.omega(j));
    Ok(v * model.tau() / denom)
}

/// `tilde v(j, theta) = sum_{m != 0} tilde v_m e^{i m theta}` (real).
pub fn tilde_v<M: IntegrableModel + ?Sized>(model: &M, j: f64, theta: f64) -> Result<f64> {
    let mut acc = 0.0;
    for m in model.positive_modes() {
        let t = tilde_v_mode(model, m, j)? * Complex64::from_polar(1.0, m as f64 * theta);
        acc += 2.0 * t.re;
    }
    Ok(acc)
}

/// `sum_{m != 0} |tilde v_m(j)|^2`, the coherent-state variance of `Sigma_t`.
pub fn nu_coherent<M: IntegrableModel + ?Sized>(model: &M, j_star: f64) -> Result<f64> {
    let tau = model.tau();
    let mut acc = 0.0;
    for m in model.positive_modes() {
        let s = checked_sin_half(model, m, j_star)?;
        acc += 2.0 * tau * tau * model.mode(m, j_star).norm_sqr() / (4.0 * s * s);
    }
    Ok(acc)
}

/// Single-mode Bessel form `J0^2((tau delta / hbar) |v_m| / sin(m omega / 2))`;
/// falls back to the angle quadrature for multi-mode models.
pub fn plateau_coherent<M: IntegrableModel + ?Sized>(
    model: &M,
    j_star: f64,
    delta: f64,
    hbar: f64,
) -> Result<f64> {
    let modes = model.positive_modes();
    if modes.len() == 1 {
        let m = modes[0];
        let s = checked_sin_half(model, m, j_star)?;
        let arg = model.tau() * delta / hbar * model.mode(m, j_star).norm() / s;
        Ok(bessel_j0(arg).powi(2))
    } else {
        Ok(plateau_coherent_general(model, j_star, delta, hbar)?.norm_sqr())
    }
}

/// `(1/2pi) int dx exp(-i delta/hbar tilde v(j*, x))` by adaptive quadrature.
pub fn plateau_coherent_general<M: IntegrableModel + ?Sized>(
    model: &M,
    j_star: f64,
    delta: f64,
    hbar: f64,
) -> Result<Complex64> {
    let modes: Vec<(i32, Complex64)> = model
        .positive_modes()
        .into_iter()
        .map(|m| tilde_v_mode(model, m, j_star).map(|c| (m, c)))
        .collect::<Result<_>>()?;
    let k = delta / hbar;
    let r = integrate_complex(
        |x| {
            let v: f64 = modes
                .iter()
                .map(|(m, c)| 2.0 * (c * Complex64::from_polar(1.0, *m as f64 * x)).re)
                .sum();
            Complex64::from_polar(1.0, -k * v)
        },
        0.0,
        TAU,
        QuadratureOptions::default(),
    )?;
    Ok(r.value / TAU)
}

/// `|(1/2pi) int dtheta exp(i delta/hbar tilde v(j, theta))|^2`.
fn angle_average_sq<M: IntegrableModel + ?Sized>(model: &M, j: f64, delta: f64, hbar: f64) -> Result<f64> {
    plateau_coherent(model, j, delta, hbar)
}

/// Fails with `NonresonanceViolated` if some `sin(m omega(j)/2)` vanishes on the action range.
pub fn check_nonresonant<M: IntegrableModel + ?Sized>(model: &M) -> Result<()> {
    let (a, b) = model.action_range();
    for m in model.positive_modes() {
        let mut prev: Option<f64> = None;
        for i in 0..=NONRES_GRID {
            let j = a + (b - a) * i as f64 / NONRES_GRID as f64;
            let s = (0.5 * m as f64 * model.omega(j)).sin();
            if s.abs() <= TOL_RES || prev.is_some_and(|p| p.signum() != s.signum()) {
                return Err(EchoError::NonresonanceViolated { j });
            }
            prev = Some(s);
        }
    }
    Ok(())
}

/// `(tau^2 / V) int dj sum_{m != 0} |v_m|^2 / (2 sin^2(m omega / 2))`.
pub fn nu_random<M: IntegrableModel + ?Sized>(model: &M) -> Result<f64> {
    check_nonresonant(model)?;
    let (a, b) = model.action_range();
    let mut err = None;
    let r = integrate(
        |j| match nu_coherent(model, j) {
            Ok(v) => v,
            Err(e) => {
                err = Some(e);
                0.0
            }
        },
        a,
        b,
        QuadratureOptions::default(),
    )?;
    if let Some(e) = err {
        return Err(e);
    }
    // Time average of sin^2(m omega t / 2) doubles the single-mode weight.
    Ok(2.0 * r.value / model.action_volume())
}

/// Non-singular random-state plateau: square of the action-space mean of the
/// coherent plateau function.
pub fn plateau_random<M: IntegrableModel + ?Sized>(model: &M, delta: f64, hbar: f64) -> Result<f64> {
    check_nonresonant(model)?;
    let (a, b) = model.action_range();
    let mut err = None;
    let r = integrate(
        |j| match angle_average_sq(model, j, delta, hbar) {
            Ok(v) => v,
            Err(e) => {
                err = Some(e);
                0.0
            }
        },
        a,
        b,
        QuadratureOptions::default(),
    )?;
    if let Some(e) = err {
        return Err(e);
    }
    Ok((r.value / model.action_volume()).powi(2))
}

/// Lattice version of [`plateau_random`] that drops near-resonant actions.
/// Skipped points still count in the normalization `1/N`.
pub fn plateau_random_singular<M: IntegrableModel + ?Sized>(
    model: &M,
    delta: f64,
    spin: SpinParameters,
) -> f64 {
    plateau_random_singular_with_tol(model, delta, spin, SKIP_FACTOR * spin.hbar())
}

pub fn plateau_random_singular_with_tol<M: IntegrableModel + ?Sized>(
    model: &M,
    delta: f64,
    spin: SpinParameters,
    tol_skip: f64,
) -> f64 {
    let hbar = spin.hbar();
    let modes = model.positive_modes();
    let mut sum = 0.0;
    for i in 0..spin.dim() {
        let j = spin.action_of(i);
        let near = modes
            .iter()
            .any(|&m| (0.5 * m as f64 * model.omega(j)).sin().abs() < tol_skip.max(TOL_RES));
        if near {
            continue;
        }
        if let Ok(v) = angle_average_sq(model, j, delta, hbar) {
            sum += v;
        }
    }
    (sum / spin.dim() as f64).powi(2)
}

/// Whether every lattice action is at least `tol_skip` away from resonance.
pub fn lattice_is_nonresonant<M: IntegrableModel + ?Sized>(model: &M, spin: SpinParameters) -> bool {
    let tol = SKIP_FACTOR * spin.hbar();
    model.positive_modes().iter().all(|&m| {
        (0..spin.dim()).all(|i| (0.5 * m as f64 * model.omega(spin.action_of(i))).sin().abs() >= tol)
    })
}

/// Peak-fidelity oscillation near a pi-resonance in linear response:
/// `1 - (4 delta^2/hbar^2) (sum_{odd m>0} |tilde v_m| cos(m omega* t + beta_m))^2`.
pub fn pi_resonance_fidelity<M: IntegrableModel + ?Sized>(
    model: &M,
    j_star: f64,
    theta_star: f64,
    delta: f64,
    hbar: f64,
    t: f64,
) -> Result<f64> {
    let w = model.omega(j_star);
    let mut acc = 0.0;
    for m in model.positive_modes().into_iter().filter(|m| m % 2 == 1) {
        let c = tilde_v_mode(model, m, j_star)? * Complex64::from_polar(1.0, m as f64 * theta_star);
        acc += c.norm() * (m as f64 * w * t + c.arg()).cos();
    }
    Ok(1.0 - 4.0 * (delta / hbar).powi(2) * acc * acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::semiclassics::model::{MultiModeModel, TopModel};

    fn top(beta: f64) -> TopModel {
        TopModel::new(1.1, beta, 0.0, 0.0)
    }

    #[test]
    fn tilde_v_closed_form() {
        let m = top(0.3);
        for (j, th) in [(0.5, 1.0), (-0.7, 4.0), (0.9, 0.2)] {
            let jt = j - 0.3;
            let want = -0.5 * (1.0f64 - j * j).sqrt() * (th - 1.1 * jt / 2.0).sin() / (1.1 * jt / 2.0).sin();
            assert!((tilde_v(&m, j, th).unwrap() - want).abs() < 1e-13);
        }
    }

    #[test]
    fn zero_modes_give_zero() {
        let m = MultiModeModel {
            base: top(0.0),
            amplitudes: vec![(1, 0.0)],
        };
        assert_eq!(tilde_v(&m, 0.4, 1.0).unwrap(), 0.0);
        assert_eq!(nu_coherent(&m, 0.4).unwrap(), 0.0);
        assert_eq!(m.bbar_v(0.4).unwrap(), 0.0);
    }

    #[test]
    fn nu_coherent_closed_form() {
        let j = 1f64.cos();
        let want = (1.0 - j * j) / (8.0 * (0.55 * j).sin().powi(2));
        assert!((nu_coherent(&top(0.0), j).unwrap() - want).abs() < 1e-14);
    }

    #[test]
    fn bessel_equals_quadrature() {
        let j = 1f64.cos();
        for ds in [0.0, 0.32, 3.2] {
            let a = plateau_coherent(&top(0.0), j, ds / 200.0, 1.0 / 200.0).unwrap();
            let b = plateau_coherent_general(&top(0.0), j, ds / 200.0, 1.0 / 200.0)
                .unwrap()
                .norm_sqr();
            assert!((a - b).abs() < 1e-9, "{ds}: {a} vs {b}");
        }
    }

    #[test]
    fn nonresonance_check() {
        assert!(check_nonresonant(&top(1.4)).is_ok());
        assert!(matches!(
            check_nonresonant(&top(0.0)),
            Err(EchoError::NonresonanceViolated { .. })
        ));
        assert!(plateau_random(&top(0.0), 0.001, 0.005).is_err());
    }

    #[test]
    fn zero_delta_plateaus_are_one() {
        let spin = SpinParameters::new(50).unwrap();
        assert_eq!(plateau_coherent(&top(0.0), 0.5, 0.0, 0.02).unwrap(), 1.0);
        assert!((plateau_random(&top(1.4), 0.0, 0.02).unwrap() - 1.0).abs() < 1e-12);
        let lattice = plateau_random_singular_with_tol(&top(1.4), 0.0, spin, 0.0);
        assert!((lattice - 1.0).abs() < 1e-12);
    }
}

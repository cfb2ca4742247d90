use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;

use super::model::IntegrableModel;
use super::plateau::{
    lattice_is_nonresonant, nu_coherent, nu_random, plateau_coherent, plateau_random,
    plateau_random_singular, SKIP_FACTOR,
};
use super::resonance::{resonance_predictor, Resonance};
use crate::error::{invalid, EchoError, Result};
use crate::numerics::{integrate, QuadratureOptions};
use crate::spin::SpinParameters;
use crate::states::CoherentParams;

/// Timescales and plateau for a coherent initial state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoherentTheory {
    pub j_star: f64,
    pub nu_coh: f64,
    pub plateau_coh: f64,
    pub u: f64,
    pub t1: f64,
    pub t2: f64,
    pub t_coh: f64,
    pub t_star: f64,
    /// 2 pi resonance period `2 pi / (hbar |omega'|)`.
    pub t_r: f64,
}

/// Timescales and plateau for the random-state ensemble.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RandomTheory {
    /// `None` when the frequency field crosses a resonance.
    pub nu_ran: Option<f64>,
    pub plateau_ran: Option<f64>,
    /// Lattice sum with near-resonant actions dropped.
    pub plateau_ran_lattice: f64,
    pub t1: f64,
    pub t2: f64,
    pub t_star: f64,
    pub t_ran_scale: f64,
}

/// Everything the theory side predicts for one parameter point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TheoryBundle {
    pub spin: u32,
    pub hbar: f64,
    pub delta: f64,
    pub coherent: Option<CoherentTheory>,
    pub random: RandomTheory,
    pub resonances: Vec<Resonance>,
}

/// Plateau onset for a coherent packet: `2 / (|omega'| sqrt(hbar/Lambda) min|m|)`.
pub fn t1_coherent<M: IntegrableModel + ?Sized>(model: &M, params: &CoherentParams, hbar: f64) -> Result<f64> {
    let w1 = model.omega_prime(params.j_star).abs();
    let m_min = model
        .positive_modes()
        .into_iter()
        .filter(|&m| model.mode(m, params.j_star).norm() > 0.0)
        .min();
    match m_min {
        Some(m) if w1 > 0.0 => Ok(2.0 / (w1 * (hbar / params.lambda_squeeze).sqrt() * m as f64)),
        _ => Err(EchoError::NoT1Scale),
    }
}

pub fn coherent_theory<M: IntegrableModel + ?Sized>(
    model: &M,
    params: &CoherentParams,
    delta: f64,
    hbar: f64,
) -> Result<CoherentTheory> {
    check_delta(delta, hbar)?;
    let j = params.j_star;
    let tau = model.tau();
    let nu_coh = nu_coherent(model, j)?;
    let u = tau * model.bbar_v_prime(j)?;
    let t1 = t1_coherent(model, params, hbar)?;
    let t_coh = (8.0 * hbar * params.lambda_squeeze).sqrt() / (u.abs() * delta * delta);
    let t2 = (delta / hbar * nu_coh.sqrt()).min(1.0) * t_coh;
    Ok(CoherentTheory {
        j_star: j,
        nu_coh,
        plateau_coh: plateau_coherent(model, j, delta, hbar)?,
        u,
        t1,
        t2,
        t_coh,
        t_star: 1.0 / (u.abs() * delta * delta),
        t_r: TAU / (hbar * model.omega_prime(j).abs()),
    })
}

/// Lattice root-mean-square of `f` over actions at least `10 hbar` from resonance.
fn lattice_rms<M, F>(model: &M, spin: SpinParameters, f: F) -> Result<f64>
where
    M: IntegrableModel + ?Sized,
    F: Fn(f64) -> Result<f64>,
{
    let tol = SKIP_FACTOR * spin.hbar();
    let modes = model.positive_modes();
    let (mut sum, mut count) = (0.0, 0usize);
    for i in 0..spin.dim() {
        let j = spin.action_of(i);
        if modes.iter().any(|&m| (0.5 * m as f64 * model.omega(j)).sin().abs() < tol) {
            continue;
        }
        sum += f(j)?.powi(2);
        count += 1;
    }
    if count == 0 {
        return Err(invalid("spin", "every lattice action is near resonance"));
    }
    Ok((sum / count as f64).sqrt())
}

pub fn random_theory<M: IntegrableModel + ?Sized>(
    model: &M,
    delta: f64,
    spin: SpinParameters,
) -> Result<RandomTheory> {
    let hbar = spin.hbar();
    check_delta(delta, hbar)?;
    let tau = model.tau();
    let (a, b) = model.action_range();
    let w1_mean = integrate(|j| model.omega_prime(j).abs(), a, b, QuadratureOptions::default())?.value
        / model.action_volume();
    let nonsingular = lattice_is_nonresonant(model, spin) && super::plateau::check_nonresonant(model).is_ok();
    let (nu_ran, plateau_ran) = if nonsingular {
        (Some(nu_random(model)?), Some(plateau_random(model, delta, hbar)?))
    } else {
        (None, None)
    };
    let nu_rms = lattice_rms(model, spin, |j| nu_coherent(model, j).map(f64::sqrt))?;
    let v_rms = lattice_rms(model, spin, |j| model.bbar_v(j))?;
    let vp_rms = lattice_rms(model, spin, |j| model.bbar_v_prime(j))?;
    Ok(RandomTheory {
        nu_ran,
        plateau_ran,
        plateau_ran_lattice: plateau_random_singular(model, delta, spin),
        t1: TAU / (model.action_volume() * w1_mean),
        t2: 2.0 * nu_rms / (v_rms * tau * delta),
        t_star: 1.0 / (vp_rms * tau * delta * delta),
        t_ran_scale: hbar / (delta * delta),
    })
}

/// Full bundle; resonances are listed up to `t_max` for the coherent branch.
pub fn theory_bundle<M: IntegrableModel + ?Sized>(
    model: &M,
    coherent: Option<&CoherentParams>,
    delta: f64,
    spin: SpinParameters,
    t_max: f64,
) -> Result<TheoryBundle> {
    let hbar = spin.hbar();
    let coh = coherent.map(|p| coherent_theory(model, p, delta, hbar)).transpose()?;
    let resonances = match coherent {
        Some(p) => resonance_predictor(model, p, hbar, t_max, 4)?,
        None => Vec::new(),
    };
    Ok(TheoryBundle {
        spin: spin.spin(),
        hbar,
        delta,
        coherent: coh,
        random: random_theory(model, delta, spin)?,
        resonances,
    })
}

fn check_delta(delta: f64, hbar: f64) -> Result<()> {
    if !(delta.is_finite() && delta > 0.0) {
        return Err(invalid("delta", "must be positive for timescale predictions"));
    }
    if !(hbar.is_finite() && hbar > 0.0) {
        return Err(invalid("hbar", "must be positive"));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::semiclassics::model::TopModel;

    fn point(s: u32) -> (TopModel, CoherentParams, SpinParameters) {
        let spin = SpinParameters::new(s).unwrap();
        let p = CoherentParams::new(1.0, 1.0, spin.hbar()).unwrap();
        (TopModel::new(1.1, 0.0, 0.0, 0.0), p, spin)
    }

    #[test]
    fn t1_matches_closed_form() {
        let (m, p, spin) = point(200);
        let t1 = t1_coherent(&m, &p, spin.hbar()).unwrap();
        let want = 2.0 * 200f64.sqrt() / (1.1 * 1f64.sin());
        assert!((t1 - want).abs() < 1e-9);
        assert!((t1 - 30.6).abs() < 0.05);
    }

    #[test]
    fn no_t1_scale_without_shear() {
        let spin = SpinParameters::new(50).unwrap();
        let p = CoherentParams::new(1.0, 1.0, spin.hbar()).unwrap();
        let m = TopModel::new(0.0, 0.0, 0.0, 0.0);
        assert!(matches!(t1_coherent(&m, &p, spin.hbar()), Err(EchoError::NoT1Scale)));
    }

    #[test]
    fn coherent_t2_two_regimes() {
        let (m, p, spin) = point(200);
        let s = 200f64;
        for ds in [0.032, 0.32, 3.2] {
            let delta = ds / s;
            let c = coherent_theory(&m, &p, delta, spin.hbar()).unwrap();
            let k = c.t_coh * delta * delta / spin.hbar().sqrt();
            let k1 = k * c.nu_coh.sqrt();
            let want = (k1 * s.sqrt() / delta).min(k / (delta * delta * s.sqrt()));
            assert!((k - 0.5685).abs() < 5e-4 && (k1 - 0.5775).abs() < 5e-4, "{k} {k1}");
            assert!((c.t2 - want).abs() < 1e-9 * want);
        }
    }

    #[test]
    fn ordering_small_delta() {
        let (m, p, spin) = point(200);
        let c = coherent_theory(&m, &p, 0.032 / 200.0, spin.hbar()).unwrap();
        assert!(c.t1 < c.t2 && c.t2 <= c.t_coh && c.t_coh < c.t_star);
    }

    #[test]
    fn random_nonsingular_has_quadratures() {
        let spin = SpinParameters::new(200).unwrap();
        let m = TopModel::new(1.1, 1.4, 0.0, 0.0);
        let r = random_theory(&m, 0.32 / 200.0, spin).unwrap();
        assert!(r.plateau_ran.is_some() && r.nu_ran.is_some());
        assert!((r.t1 - TAU / 2.2).abs() < 1e-9);
        let singular = random_theory(&TopModel::new(1.1, 0.0, 0.0, 0.0), 0.32 / 200.0, spin).unwrap();
        assert!(singular.plateau_ran.is_none());
    }
}

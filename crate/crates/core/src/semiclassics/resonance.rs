//! Echo resonances of a localized packet at rational multiples of `t_r = 2 pi / (hbar omega')`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;

use super::model::IntegrableModel;
use crate::error::{EchoError, Result};
use crate::states::CoherentParams;

/// Resonance counts as strong below this `zeta`.
pub const STRONG_ZETA: f64 = 1.0;
/// Resonance is washed out above this `zeta`.
pub const SUPPRESSED_ZETA: f64 = TAU;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResonanceKind {
    /// `t = k t_r`.
    TwoPi,
    /// `t = (k + 1/2) t_r`.
    Pi,
    /// `t = (k / p) t_r`, `p >= 3`, `gcd(k, p) = 1`.
    Fractional { p: u32 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Resonance {
    pub time: f64,
    pub kind: ResonanceKind,
    /// Phase order: `m = 1` for 2 pi, 2 for pi, `p` for fractional.
    pub m: u32,
    pub zeta: f64,
    /// 1/e half-width in time of the squared envelope.
    pub width: f64,
    pub strong: bool,
    pub suppressed: bool,
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

fn make(time: f64, kind: ResonanceKind, m: u32, omega_p: f64, omega_pp: f64, params: &CoherentParams, hbar: f64) -> Resonance {
    let zeta = (hbar * m as f64 * omega_pp * time / (2.0 * params.lambda_squeeze)).abs();
    let width = (1.0 + zeta * zeta).sqrt() / (m as f64 * omega_p.abs() * params.delta_j);
    Resonance {
        time,
        kind,
        m,
        zeta,
        width,
        strong: zeta < STRONG_ZETA,
        suppressed: zeta > SUPPRESSED_ZETA,
    }
}

/// Resonance times in `(0, t_max]`, sorted. Fractional orders use denominators `3..=max_p`.
pub fn resonance_predictor<M: IntegrableModel + ?Sized>(
    model: &M,
    params: &CoherentParams,
    hbar: f64,
    t_max: f64,
    max_p: u32,
) -> Result<Vec<Resonance>> {
    let w1 = model.omega_prime(params.j_star);
    if w1 == 0.0 {
        return Err(EchoError::NoT1Scale);
    }
    let w2 = model.omega_second(params.j_star);
    let t_r = TAU / (hbar * w1.abs());
    let mut out = Vec::new();
    let k_max = (t_max / t_r).floor() as u64 + 1;
    for k in 0..=k_max {
        let t = k as f64 * t_r;
        if k > 0 && t <= t_max {
            out.push(make(t, ResonanceKind::TwoPi, 1, w1, w2, params, hbar));
        }
        let t = (k as f64 + 0.5) * t_r;
        if t <= t_max {
            out.push(make(t, ResonanceKind::Pi, 2, w1, w2, params, hbar));
        }
    }
    for p in 3..=max_p {
        let k_max = (t_max / t_r * p as f64).floor() as u64;
        for k in 1..=k_max {
            if gcd(k, p as u64) != 1 {
                continue;
            }
            let t = k as f64 * t_r / p as f64;
            out.push(make(t, ResonanceKind::Fractional { p }, p, w1, w2, params, hbar));
        }
    }
    out.sort_by(|a, b| a.time.total_cmp(&b.time));
    Ok(out)
}

/// Complex envelope `(1 - i zeta)^{-1/2} exp(-hbar m^2 omega'^2 t'^2 (1 + i zeta) / (4 Lambda (1 + zeta^2)))`
/// at offset `t_prime` from the resonance time.
pub fn resonance_profile<M: IntegrableModel + ?Sized>(
    model: &M,
    params: &CoherentParams,
    hbar: f64,
    res: &Resonance,
    t_prime: f64,
) -> Complex64 {
    let zeta = res.zeta;
    let w1 = model.omega_prime(params.j_star);
    let m = res.m as f64;
    let one = Complex64::new(1.0, 0.0);
    let pre = (one - Complex64::new(0.0, zeta)).powf(-0.5);
    let a = hbar * m * m * w1 * w1 * t_prime * t_prime / (4.0 * params.lambda_squeeze);
    pre * (-(a / (1.0 + zeta * zeta)) * Complex64::new(1.0, zeta)).exp()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::semiclassics::model::TopModel;

    fn params(s: f64) -> CoherentParams {
        CoherentParams::new(1.0, 1.0, 1.0 / s).unwrap()
    }

    #[test]
    fn period_and_widths() {
        let p = params(200.0);
        let m = TopModel::new(1.1, 0.0, 0.0, 0.0);
        let list = resonance_predictor(&m, &p, 0.005, 1200.0, 2).unwrap();
        assert_eq!(list.len(), 2);
        assert_eq!(list[0].kind, ResonanceKind::Pi);
        assert!((list[1].time - TAU * 200.0 / 1.1).abs() < 1e-9);
        assert!((list[0].time - 571.2).abs() < 0.1);
        assert!(list.iter().all(|r| r.zeta == 0.0 && r.strong));
        assert!((list[1].width - 21.6).abs() < 0.1);
        assert!((list[0].width - 10.8).abs() < 0.1);
    }

    #[test]
    fn modified_top_suppressed() {
        let p = params(200.0);
        let m = TopModel::new(1.1, 0.0, 4.0, p.j_star);
        let list = resonance_predictor(&m, &p, 0.005, 1200.0, 2).unwrap();
        let want = std::f64::consts::PI * 4.0 * 1f64.sin().powi(2) / 1.1;
        for r in &list {
            assert!((r.zeta - want).abs() < 1e-9, "{r:?}");
            assert!(r.suppressed);
        }
    }

    #[test]
    fn fractional_orders_are_reduced() {
        let p = params(200.0);
        let m = TopModel::new(1.1, 0.0, 0.0, 0.0);
        let t_r = TAU * 200.0 / 1.1;
        let list = resonance_predictor(&m, &p, 0.005, t_r * 1.01, 4).unwrap();
        let thirds = list
            .iter()
            .filter(|r| r.kind == ResonanceKind::Fractional { p: 3 })
            .count();
        let quarters = list
            .iter()
            .filter(|r| r.kind == ResonanceKind::Fractional { p: 4 })
            .count();
        assert_eq!((thirds, quarters), (2, 2));
    }

    #[test]
    fn profile_half_width() {
        let p = params(200.0);
        let m = TopModel::new(1.1, 0.0, 4.0, p.j_star);
        let list = resonance_predictor(&m, &p, 0.005, 1200.0, 2).unwrap();
        let r = list[1];
        let peak = resonance_profile(&m, &p, 0.005, &r, 0.0).norm_sqr();
        assert!((peak - (1.0 + r.zeta * r.zeta).powf(-0.5)).abs() < 1e-12);
        let edge = resonance_profile(&m, &p, 0.005, &r, r.width).norm_sqr();
        assert!((edge / peak - (-1f64).exp()).abs() < 1e-12);
        let flat = TopModel::new(1.1, 0.0, 0.0, 0.0);
        let r0 = resonance_predictor(&flat, &p, 0.005, 1200.0, 2).unwrap()[1];
        assert!((resonance_profile(&flat, &p, 0.005, &r0, 0.0).norm() - 1.0).abs() < 1e-15);
    }
}

//! Readouts from numerical traces: plateau medians, decay fits, peaks and correlation profiles.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::numerics::{linear_fit, median, LinearFit};
use crate::semiclassics::{asi_amplitude, IntegrableModel, Resonance};

/// Half-width multiplier applied to resonance widths when masking traces.
pub const EXCLUSION_WIDTHS: f64 = 3.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn contains(&self, t: f64) -> bool {
        t >= self.lo && t <= self.hi
    }
}

/// `[t_res - 3 width, t_res + 3 width]` around each predicted resonance.
pub fn resonance_exclusions(resonances: &[Resonance]) -> Vec<Interval> {
    resonances
        .iter()
        .map(|r| Interval {
            lo: r.time - EXCLUSION_WIDTHS * r.width,
            hi: r.time + EXCLUSION_WIDTHS * r.width,
        })
        .collect()
}

fn excluded(t: f64, exclusions: &[Interval]) -> bool {
    exclusions.iter().any(|e| e.contains(t))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlateauEstimate {
    /// `NaN` when flagged.
    pub value: f64,
    pub window: Interval,
    pub samples: usize,
    /// Set when `t2 <= 2 t1` or no sample survives the mask.
    pub flagged: bool,
}

/// Median of `values` over `[2 t1, 0.8 t2]`, skipping masked times.
pub fn plateau_estimate(
    times: &[f64],
    values: &[f64],
    t1: f64,
    t2: f64,
    exclusions: &[Interval],
) -> PlateauEstimate {
    let window = Interval {
        lo: 2.0 * t1,
        hi: 0.8 * t2,
    };
    let flagged = PlateauEstimate {
        value: f64::NAN,
        window,
        samples: 0,
        flagged: true,
    };
    if t2 <= 2.0 * t1 {
        return flagged;
    }
    let picked: Vec<f64> = times
        .iter()
        .zip(values)
        .filter(|(t, _)| window.contains(**t) && !excluded(**t, exclusions))
        .map(|(_, v)| *v)
        .collect();
    match median(&picked) {
        Some(value) => PlateauEstimate {
            value,
            window,
            samples: picked.len(),
            flagged: false,
        },
        None => flagged,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianFit {
    pub t_coh: f64,
    /// Intercept `a` of `-ln F = a + t^2 / t_coh^2`.
    pub offset: f64,
    pub fit: LinearFit,
}

/// Least-squares fit of `-ln F` against `t^2` over samples with `f_lo <= F <= f_hi`.
pub fn gaussian_fit(
    times: &[f64],
    values: &[f64],
    f_hi: f64,
    f_lo: f64,
    exclusions: &[Interval],
) -> Result<GaussianFit> {
    let (x, y): (Vec<f64>, Vec<f64>) = times
        .iter()
        .zip(values)
        .filter(|(t, f)| **f >= f_lo && **f <= f_hi && !excluded(**t, exclusions))
        .map(|(t, f)| (t * t, -f.ln()))
        .unzip();
    let fit = linear_fit(&x, &y).ok_or_else(|| invalid("trace", "too few points in the fit band"))?;
    if fit.slope <= 0.0 {
        return Err(invalid("trace", "no Gaussian decay in the fit band"));
    }
    Ok(GaussianFit {
        t_coh: fit.slope.sqrt().recip(),
        offset: fit.intercept,
        fit,
    })
}

/// Slope of `ln values` against `ln times` over `[lo, hi]`.
pub fn loglog_slope(times: &[f64], values: &[f64], lo: f64, hi: f64) -> Result<LinearFit> {
    let (x, y): (Vec<f64>, Vec<f64>) = times
        .iter()
        .zip(values)
        .filter(|(t, v)| **t >= lo && **t <= hi && **t > 0.0 && **v > 0.0)
        .map(|(t, v)| (t.ln(), v.ln()))
        .unzip();
    linear_fit(&x, &y).ok_or_else(|| invalid("trace", "too few points in the log-log window"))
}

/// Largest sample in `[lo, hi]` as `(time, value)`.
pub fn find_peak(times: &[f64], values: &[f64], lo: f64, hi: f64) -> Option<(f64, f64)> {
    times
        .iter()
        .zip(values)
        .filter(|(t, v)| **t >= lo && **t <= hi && v.is_finite())
        .map(|(t, v)| (*t, *v))
        .max_by(|a, b| a.1.total_cmp(&b.1))
}

/// Mean of `|C(t + d, t)|` over `t`, for each lag `d`.
pub fn ridge_profile(c: &DMatrix<Complex64>) -> Vec<f64> {
    let n = c.nrows().min(c.ncols());
    (0..n)
        .map(|d| (0..n - d).map(|t| c[(t + d, t)].norm()).sum::<f64>() / (n - d) as f64)
        .collect()
}

/// Mean of `|C(a, s - a)|` along each anti-diagonal `s`.
pub fn antidiagonal_profile(c: &DMatrix<Complex64>) -> Vec<f64> {
    let n = c.nrows().min(c.ncols());
    (0..2 * n - 1)
        .map(|s| {
            let lo = s.saturating_sub(n - 1);
            let hi = s.min(n - 1);
            (lo..=hi).map(|a| c[(a, s - a)].norm()).sum::<f64>() / (hi - lo + 1) as f64
        })
        .collect()
}

/// `|C(t, t)|` for each `t`.
pub fn diagonal_profile(c: &DMatrix<Complex64>) -> Vec<f64> {
    let n = c.nrows().min(c.ncols());
    (0..n).map(|t| c[(t, t)].norm()).collect()
}

/// Long-time window for the random-state power law: from `max(t2, hbar/delta^2)` to
/// the time where the action-space amplitude squared falls to `floor`.
/// The upper end is located by geometric bracketing and bisection in `ln t`.
pub fn random_asymptotic_window<M: IntegrableModel + ?Sized>(
    model: &M,
    delta: f64,
    hbar: f64,
    t2: f64,
    floor: f64,
) -> Result<Interval> {
    let lo = t2.max(hbar / (delta * delta));
    let f = |t: f64| -> Result<f64> { Ok(asi_amplitude(model, delta, hbar, t)?.norm_sqr()) };
    if f(lo)? <= floor {
        return Err(invalid("floor", "already reached at the start of the window"));
    }
    let mut a = lo;
    let mut b = lo * 2.0;
    let mut guard = 0;
    while f(b)? > floor {
        a = b;
        b *= 2.0;
        guard += 1;
        if guard > 60 {
            return Err(invalid("floor", "not reached"));
        }
    }
    for _ in 0..40 {
        let m = (a * b).sqrt();
        if f(m)? > floor {
            a = m;
        } else {
            b = m;
        }
        if b / a < 1.0 + 1e-6 {
            break;
        }
    }
    Ok(Interval { lo, hi: b })
}

//! Globally adaptive Gauss-Kronrod (7/15) quadrature.

use num_complex::Complex64;
use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{EchoError, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Tolerances for [`integrate`] and [`integrate_complex`].
#[derive(Debug, Clone, Copy)]
pub struct QuadratureOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_intervals: usize,
}

impl Default for QuadratureOptions {
    fn default() -> Self {
        Self {
            abs_tol: 1e-10,
            rel_tol: 0.0,
            max_intervals: 20_000,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct QuadratureResult<T> {
    pub value: T,
    pub error: f64,
    pub intervals: usize,
}

fn gk15<F: FnMut(f64) -> Complex64>(f: &mut F, a: f64, b: f64) -> (Complex64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kron = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for i in 0..7 {
        let dx = h * XGK[i];
        let s = f(c - dx) + f(c + dx);
        kron += s * WGK[i];
        if i % 2 == 1 {
            gauss += s * WG[i / 2];
        }
    }
    let kron = kron * h;
    let gauss = gauss * h;
    (kron, (kron - gauss).norm())
}

struct Segment {
    a: f64,
    b: f64,
    value: Complex64,
    error: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

/// Integrates a complex-valued function over `[a, b]`, starting from the
/// given interior break points (e.g. near-singular locations).
pub fn integrate_complex_with_breaks<F>(
    mut f: F,
    a: f64,
    b: f64,
    breaks: &[f64],
    opts: QuadratureOptions,
) -> Result<QuadratureResult<Complex64>>
where
    F: FnMut(f64) -> Complex64,
{
    if !(a.is_finite() && b.is_finite()) {
        return Err(EchoError::QuadratureNoConvergence {
            a,
            b,
            error: f64::INFINITY,
        });
    }
    if a == b {
        return Ok(QuadratureResult {
            value: Complex64::new(0.0, 0.0),
            error: 0.0,
            intervals: 0,
        });
    }
    let (lo, hi, sign) = if a < b { (a, b, 1.0) } else { (b, a, -1.0) };
    let mut points = vec![lo];
    let mut inner: Vec<f64> = breaks
        .iter()
        .copied()
        .filter(|&x| x > lo && x < hi)
        .collect();
    inner.sort_by(f64::total_cmp);
    points.extend(inner);
    points.push(hi);

    let mut heap = BinaryHeap::new();
    let mut total = Complex64::new(0.0, 0.0);
    let mut total_err = 0.0;
    for w in points.windows(2) {
        let (value, error) = gk15(&mut f, w[0], w[1]);
        total += value;
        total_err += error;
        heap.push(Segment {
            a: w[0],
            b: w[1],
            value,
            error,
        });
    }
    loop {
        let tol = opts.abs_tol.max(opts.rel_tol * total.norm());
        if total_err <= tol {
            break;
        }
        if heap.len() >= opts.max_intervals {
            return Err(EchoError::QuadratureNoConvergence {
                a,
                b,
                error: total_err,
            });
        }
        let worst = heap.pop().expect("heap is never empty here");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            return Err(EchoError::QuadratureNoConvergence {
                a: worst.a,
                b: worst.b,
                error: total_err,
            });
        }
        let (v1, e1) = gk15(&mut f, worst.a, mid);
        let (v2, e2) = gk15(&mut f, mid, worst.b);
        total += v1 + v2 - worst.value;
        total_err += e1 + e2 - worst.error;
        heap.push(Segment {
            a: worst.a,
            b: mid,
            value: v1,
            error: e1,
        });
        heap.push(Segment {
            a: mid,
            b: worst.b,
            value: v2,
            error: e2,
        });
    }
    // Re-sum to shed the drift of incremental updates.
    let intervals = heap.len();
    let value: Complex64 = heap.iter().map(|s| s.value).sum();
    let error: f64 = heap.iter().map(|s| s.error).sum();
    Ok(QuadratureResult {
        value: value * sign,
        error,
        intervals,
    })
}

pub fn integrate_complex<F>(
    f: F,
    a: f64,
    b: f64,
    opts: QuadratureOptions,
) -> Result<QuadratureResult<Complex64>>
where
    F: FnMut(f64) -> Complex64,
{
    integrate_complex_with_breaks(f, a, b, &[], opts)
}

pub fn integrate<F>(mut f: F, a: f64, b: f64, opts: QuadratureOptions) -> Result<QuadratureResult<f64>>
where
    F: FnMut(f64) -> f64,
{
    let r = integrate_complex(|x| Complex64::new(f(x), 0.0), a, b, opts)?;
    Ok(QuadratureResult {
        value: r.value.re,
        error: r.error,
        intervals: r.intervals,
    })
}

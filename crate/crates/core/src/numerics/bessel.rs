//! Bessel function of the first kind, order zero.

use std::f64::consts::{FRAC_PI_4, PI};

const SERIES_LIMIT: f64 = 5.0;
const ASYMPTOTIC_LIMIT: f64 = 40.0;

/// `J_0(x)` to roughly 1e-14 absolute accuracy for all real `x`.
pub fn bessel_j0(x: f64) -> f64 {
    let x = x.abs();
    if x < SERIES_LIMIT {
        series(x)
    } else if x < ASYMPTOTIC_LIMIT {
        miller(x)
    } else {
        hankel(x)
    }
}

fn series(x: f64) -> f64 {
    let q = -0.25 * x * x;
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..60 {
        term *= q / ((k * k) as f64);
        sum += term;
        if term.abs() < 1e-18 * sum.abs().max(1e-300) {
            break;
        }
    }
    sum
}

// Backward recurrence normalized by J0 + 2 * sum J_2k = 1.
fn miller(x: f64) -> f64 {
    let start = (x + 30.0 + 12.0 * x.cbrt()) as usize;
    let start = start + (start & 1);
    let mut j_next = 0.0;
    let mut j_cur = 1e-30;
    let mut norm = 0.0;
    let mut j0 = 0.0;
    for k in (1..=start).rev() {
        let j_prev = 2.0 * k as f64 / x * j_cur - j_next;
        j_next = j_cur;
        j_cur = j_prev;
        let order = k - 1;
        if order == 0 {
            j0 = j_cur;
        } else if order % 2 == 0 {
            norm += 2.0 * j_cur;
        }
        if j_cur.abs() > 1e250 {
            j_cur *= 1e-250;
            j_next *= 1e-250;
            norm *= 1e-250;
        }
    }
    norm += j0;
    j0 / norm
}

fn hankel(x: f64) -> f64 {
    // P and Q asymptotic series, truncated at the smallest term.
    let mu = 0.0_f64;
    let eight_x = 8.0 * x;
    let mut p = 1.0;
    let mut q = 0.0;
    let mut term = 1.0;
    let mut last = f64::INFINITY;
    for k in 1..40 {
        let a = (2 * k - 1) as f64;
        term *= (mu - a * a) / (k as f64 * eight_x);
        if term.abs() > last {
            break;
        }
        last = term.abs();
        if k % 2 == 1 {
            q += if (k / 2) % 2 == 0 { term } else { -term };
        } else {
            p += if (k / 2) % 2 == 1 { -term } else { term };
        }
        if last < 1e-17 {
            break;
        }
    }
    let chi = x - FRAC_PI_4;
    (2.0 / (PI * x)).sqrt() * (p * chi.cos() - q * chi.sin())
}

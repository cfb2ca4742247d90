//! Support code for the acceptance suite: dense reference matrices built from the
//! defining formulas, and PASS/FAIL bookkeeping.

pub mod dense;

use std::fmt;

#[derive(Debug, Clone)]
pub struct Outcome {
    pub id: &'static str,
    pub title: &'static str,
    pub pass: bool,
    pub detail: String,
}

impl Outcome {
    pub fn new(id: &'static str, title: &'static str, pass: bool, detail: impl Into<String>) -> Self {
        Self {
            id,
            title,
            pass,
            detail: detail.into(),
        }
    }

    /// A criterion that could not be evaluated at all counts as failed.
    pub fn error(id: &'static str, title: &'static str, err: impl fmt::Display) -> Self {
        Self::new(id, title, false, format!("evaluation error: {err}"))
    }
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = if self.pass { "PASS" } else { "FAIL" };
        write!(f, "{tag} [{:<2}] {}: {}", self.id, self.title, self.detail)
    }
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn loglog(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.abs().ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}

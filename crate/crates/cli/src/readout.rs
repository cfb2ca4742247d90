//! Measured quantities read off a trace against the theory timescales.

use echo_core::analysis::{
    find_peak, gaussian_fit, loglog_slope, plateau_estimate, resonance_exclusions, PlateauEstimate,
    EXCLUSION_WIDTHS,
};
use echo_core::semiclassics::{ResonanceKind, TheoryBundle};
use serde::Serialize;

/// Fit band of the Gaussian decay, in `F`.
pub const GAUSS_BAND: (f64, f64) = (0.1, 0.8);
/// At most this many predicted resonances are searched for peaks.
pub const MAX_PEAKS: usize = 8;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Peak {
    pub kind: String,
    pub predicted: f64,
    pub time: f64,
    pub fidelity: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Readout {
    pub plateau: PlateauEstimate,
    pub plateau_theory: Option<f64>,
    pub t_coh_fit: Option<f64>,
    pub t_coh_theory: Option<f64>,
    pub loglog_slope: Option<f64>,
    pub peaks: Vec<Peak>,
}

fn kind_name(kind: ResonanceKind) -> String {
    match kind {
        ResonanceKind::TwoPi => "2pi".to_string(),
        ResonanceKind::Pi => "pi".to_string(),
        ResonanceKind::Fractional { p } => format!("2pi/{p}"),
    }
}

/// Plateau median, decay fit and resonance peaks of `fidelity` sampled at `times`.
///
/// Coherent bundles use the coherent timescales and mask predicted resonances;
/// otherwise the random-state timescales apply and the decay is read as a log-log slope.
pub fn readout(bundle: &TheoryBundle, times: &[u64], fidelity: &[f64]) -> Readout {
    let t: Vec<f64> = times.iter().map(|&x| x as f64).collect();
    let t_end = t.last().copied().unwrap_or(0.0);
    match &bundle.coherent {
        Some(coh) => {
            let masks = resonance_exclusions(&bundle.resonances);
            let plateau = plateau_estimate(&t, fidelity, coh.t1, coh.t2, &masks);
            let t_coh_fit = if plateau.flagged {
                None
            } else {
                gaussian_fit(&t, fidelity, GAUSS_BAND.1, GAUSS_BAND.0, &masks)
                    .ok()
                    .map(|g| g.t_coh)
            };
            let peaks = bundle
                .resonances
                .iter()
                .filter(|r| matches!(r.kind, ResonanceKind::TwoPi | ResonanceKind::Pi))
                .take(MAX_PEAKS)
                .filter_map(|r| {
                    let half = (EXCLUSION_WIDTHS * r.width).max(1.0);
                    find_peak(&t, fidelity, r.time - half, r.time + half).map(|(time, fidelity)| Peak {
                        kind: kind_name(r.kind),
                        predicted: r.time,
                        time,
                        fidelity,
                    })
                })
                .collect();
            Readout {
                plateau,
                plateau_theory: Some(coh.plateau_coh),
                t_coh_fit,
                t_coh_theory: Some(coh.t_coh),
                loglog_slope: None,
                peaks,
            }
        }
        None => {
            let ran = &bundle.random;
            let plateau = plateau_estimate(&t, fidelity, ran.t1, ran.t2, &[]);
            let lo = ran.t2.max(ran.t_ran_scale);
            let slope = if plateau.flagged || lo >= t_end {
                None
            } else {
                loglog_slope(&t, fidelity, lo, t_end)
                    .ok()
                    .filter(|f| f.points >= 3)
                    .map(|f| f.slope)
            };
            Readout {
                plateau,
                plateau_theory: Some(ran.plateau_ran.unwrap_or(ran.plateau_ran_lattice)),
                t_coh_fit: None,
                t_coh_theory: None,
                loglog_slope: slope,
                peaks: Vec::new(),
            }
        }
    }
}

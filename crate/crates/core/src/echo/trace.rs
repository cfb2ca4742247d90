use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::spin::{
    build_kick, build_unperturbed, check_dim, KickPropagator, KickScratch, SpinParameters,
    TopParameters, UnperturbedPropagator,
};
use crate::states::QuantumState;

/// Fidelity amplitude `f(t)` and fidelity `F(t) = |f(t)|^2` at recorded kick counts.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FidelityTrace {
    pub times: Vec<u64>,
    pub amplitude: Vec<Complex64>,
    pub fidelity: Vec<f64>,
}

impl FidelityTrace {
    pub fn with_capacity(n: usize) -> Self {
        Self {
            times: Vec::with_capacity(n),
            amplitude: Vec::with_capacity(n),
            fidelity: Vec::with_capacity(n),
        }
    }

    pub fn push(&mut self, t: u64, f: Complex64) {
        self.times.push(t);
        self.amplitude.push(f);
        self.fidelity.push(f.norm_sqr());
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn times_f64(&self) -> Vec<f64> {
        self.times.iter().map(|&t| t as f64).collect()
    }

    /// Fidelity at exactly `t`, if recorded.
    pub fn at(&self, t: u64) -> Option<f64> {
        self.times
            .binary_search(&t)
            .ok()
            .map(|i| self.fidelity[i])
    }
}

/// Ensemble statistics of member traces sampled at common times.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleTrace {
    pub times: Vec<u64>,
    pub members: usize,
    /// Ensemble mean of the amplitude.
    pub mean_amplitude: Vec<Complex64>,
    /// `|<f>|^2`, the fidelity of the averaged amplitude.
    pub fidelity: Vec<f64>,
    /// `<|f|^2>`.
    pub mean_fidelity: Vec<f64>,
    /// Standard error of `<|f|^2>`.
    pub fidelity_stderr: Vec<f64>,
}

impl EnsembleTrace {
    pub fn from_members(traces: &[FidelityTrace]) -> Result<Self> {
        let first = traces
            .first()
            .ok_or_else(|| invalid("ensemble", "no member traces"))?;
        let n = first.len();
        let m = traces.len() as f64;
        let mut mean_amplitude = vec![Complex64::new(0.0, 0.0); n];
        let mut mean_fidelity = vec![0.0; n];
        let mut second = vec![0.0; n];
        for tr in traces {
            if tr.times != first.times {
                return Err(invalid("ensemble", "member traces sampled at different times"));
            }
            for i in 0..n {
                mean_amplitude[i] += tr.amplitude[i] / m;
                mean_fidelity[i] += tr.fidelity[i] / m;
                second[i] += tr.fidelity[i] * tr.fidelity[i] / m;
            }
        }
        let fidelity_stderr = if traces.len() > 1 {
            second
                .iter()
                .zip(&mean_fidelity)
                .map(|(s, mu)| ((s - mu * mu).max(0.0) * m / (m - 1.0) / m).sqrt())
                .collect()
        } else {
            vec![0.0; n]
        };
        Ok(Self {
            times: first.times.clone(),
            members: traces.len(),
            fidelity: mean_amplitude.iter().map(|f| f.norm_sqr()).collect(),
            mean_amplitude,
            mean_fidelity,
            fidelity_stderr,
        })
    }

    /// View of `|<f>|^2` as a plain trace.
    pub fn as_trace(&self) -> FidelityTrace {
        FidelityTrace {
            times: self.times.clone(),
            amplitude: self.mean_amplitude.clone(),
            fidelity: self.fidelity.clone(),
        }
    }
}

/// Propagators of one echo experiment. One perturbed step is `U0 * exp(-i delta Sx)`:
/// the kick acts first, then the twist.
#[derive(Debug, Clone)]
pub struct EchoSystem {
    pub spin: SpinParameters,
    pub top: TopParameters,
    pub unperturbed: UnperturbedPropagator,
    pub kick: KickPropagator,
}

impl EchoSystem {
    pub fn new(spin: SpinParameters, top: TopParameters, j_ref: f64) -> Result<Self> {
        top.validate()?;
        Ok(Self {
            spin,
            top,
            unperturbed: build_unperturbed(&spin, &top, j_ref),
            kick: build_kick(&spin, top.delta)?,
        })
    }

    pub fn run(&self, state: &QuantumState, t_max: u64, stride: u64) -> Result<FidelityTrace> {
        run_fidelity(state, &self.unperturbed, &self.kick, t_max, stride)
    }
}

/// Co-evolves `psi` under `U0` and under `U0 * kick`, recording
/// `f(t) = <psi_delta(t)|psi_0(t)>` at `t = 0, stride, 2*stride, ...` and at `t_max`.
pub fn run_fidelity(
    state: &QuantumState,
    unperturbed: &UnperturbedPropagator,
    kick: &KickPropagator,
    t_max: u64,
    stride: u64,
) -> Result<FidelityTrace> {
    if stride == 0 {
        return Err(invalid("stride", "must be at least 1"));
    }
    check_dim(unperturbed.dim(), state.dim())?;
    check_dim(kick.dim(), state.dim())?;
    state.check_normalized()?;

    let n = state.dim();
    let mut r0: Vec<f64> = state.amps().iter().map(|a| a.re).collect();
    let mut i0: Vec<f64> = state.amps().iter().map(|a| a.im).collect();
    let mut rd = r0.clone();
    let mut id = i0.clone();
    let mut scratch = KickScratch::new(n);

    let mut trace = FidelityTrace::with_capacity((t_max / stride + 2) as usize);
    trace.push(0, Complex64::new(1.0, 0.0));
    for t in 1..=t_max {
        unperturbed.apply_split(&mut r0, &mut i0);
        kick.apply_split(&mut rd, &mut id, &mut scratch);
        unperturbed.apply_split(&mut rd, &mut id);
        if t % stride == 0 || t == t_max {
            trace.push(t, overlap_split(&rd, &id, &r0, &i0));
        }
    }
    Ok(trace)
}

/// `<a|b>` for split real/imaginary vectors.
fn overlap_split(ar: &[f64], ai: &[f64], br: &[f64], bi: &[f64]) -> Complex64 {
    let mut re = 0.0;
    let mut im = 0.0;
    for i in 0..ar.len() {
        re += ar[i] * br[i] + ai[i] * bi[i];
        im += ar[i] * bi[i] - ai[i] * br[i];
    }
    Complex64::new(re, im)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::states::coherent_state;

    #[test]
    fn zero_perturbation_keeps_fidelity_one() {
        let spin = SpinParameters::new(20).unwrap();
        let top = TopParameters::new(1.1, 0.0, 0.0, 0.0).unwrap();
        let sys = EchoSystem::new(spin, top, 0.0).unwrap();
        let psi = coherent_state(spin, 1.0, 1.0).unwrap().state;
        let tr = sys.run(&psi, 300, 7).unwrap();
        assert!(tr.fidelity.iter().all(|f| (f - 1.0).abs() < 1e-12));
        assert_eq!(*tr.times.last().unwrap(), 300);
    }

    #[test]
    fn first_step_matches_single_kick_overlap() {
        // f(1) = <psi| exp(+i delta Sx) |psi> since the twists cancel.
        let spin = SpinParameters::new(8).unwrap();
        let top = TopParameters::new(1.1, 0.3, 0.0, 0.2).unwrap();
        let sys = EchoSystem::new(spin, top, 0.0).unwrap();
        let psi = coherent_state(spin, 1.0, 1.0).unwrap().state;
        let tr = sys.run(&psi, 1, 1).unwrap();
        let mut kicked = psi.amps().to_vec();
        sys.kick.apply(&mut kicked).unwrap();
        let expect: Complex64 = kicked
            .iter()
            .zip(psi.amps())
            .map(|(k, p)| k.conj() * p)
            .sum();
        assert!((tr.amplitude[1] - expect).norm() < 1e-13);
    }

    #[test]
    fn rejects_bad_input() {
        let spin = SpinParameters::new(3).unwrap();
        let top = TopParameters::new(1.1, 0.0, 0.0, 0.1).unwrap();
        let sys = EchoSystem::new(spin, top, 0.0).unwrap();
        let psi = coherent_state(spin, 1.0, 1.0).unwrap().state;
        assert!(sys.run(&psi, 10, 0).is_err());
        let other = coherent_state(SpinParameters::new(4).unwrap(), 1.0, 1.0)
            .unwrap()
            .state;
        assert!(sys.run(&other, 10, 1).is_err());
    }
}

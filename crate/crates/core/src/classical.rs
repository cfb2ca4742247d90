//! Classical limit of the kicked top on the unit sphere and the Monte-Carlo classical fidelity.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use std::f64::consts::{PI, TAU};
use std::ops::Range;

use crate::error::{invalid, EchoError, Result};
use crate::spin::SpinParameters;

/// Points are re-projected onto the sphere this often during long runs.
pub const RENORMALIZE_EVERY: u64 = 1024;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpherePoint {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl SpherePoint {
    /// Fails unless `x^2 + y^2 + z^2 = 1` within `1e-12`.
    pub fn new(x: f64, y: f64, z: f64) -> Result<Self> {
        let p = Self { x, y, z };
        if (p.norm_sqr() - 1.0).abs() > 1e-12 || !p.norm_sqr().is_finite() {
            return Err(invalid("point", "not on the unit sphere"));
        }
        Ok(p)
    }

    /// Polar angle from the z axis and azimuth.
    pub fn from_angles(theta: f64, phi: f64) -> Self {
        let (st, ct) = theta.sin_cos();
        let (sp, cp) = phi.sin_cos();
        Self {
            x: st * cp,
            y: st * sp,
            z: ct,
        }
    }

    pub fn from_action_angle(j: f64, theta: f64) -> Result<Self> {
        if !(-1.0..=1.0).contains(&j) {
            return Err(invalid("j", "action outside [-1, 1]"));
        }
        let r = (1.0 - j * j).sqrt();
        let (s, c) = theta.sin_cos();
        Ok(Self {
            x: r * c,
            y: r * s,
            z: j,
        })
    }

    pub fn norm_sqr(&self) -> f64 {
        self.x * self.x + self.y * self.y + self.z * self.z
    }

    pub fn normalized(self) -> Self {
        let n = self.norm_sqr().sqrt();
        Self {
            x: self.x / n,
            y: self.y / n,
            z: self.z / n,
        }
    }

    /// `(j, theta)` with `j = z` and `theta = atan2(y, x)` in `[0, 2 pi)`.
    pub fn action_angle(&self) -> Result<(f64, f64)> {
        if self.x == 0.0 && self.y == 0.0 {
            return Err(EchoError::PoleDegenerate);
        }
        Ok((self.z, self.y.atan2(self.x).rem_euclid(TAU)))
    }

    /// Polar angle and azimuth in `[0, 2 pi)`.
    pub fn angles(&self) -> (f64, f64) {
        (self.z.clamp(-1.0, 1.0).acos(), self.y.atan2(self.x).rem_euclid(TAU))
    }
}

fn rotate_z(p: SpherePoint, angle: f64) -> SpherePoint {
    let (s, c) = angle.rem_euclid(TAU).sin_cos();
    SpherePoint {
        x: c * p.x - s * p.y,
        y: s * p.x + c * p.y,
        z: p.z,
    }
}

fn rotate_x(p: SpherePoint, angle: f64) -> SpherePoint {
    let (s, c) = angle.sin_cos();
    SpherePoint {
        x: p.x,
        y: c * p.y - s * p.z,
        z: s * p.y + c * p.z,
    }
}

/// Rotation about z by `alpha (z - beta)`.
pub fn twist_step(p: SpherePoint, alpha: f64, beta: f64) -> SpherePoint {
    rotate_z(p, alpha * (p.z - beta))
}

/// `t` twist steps at once.
pub fn twist_power(p: SpherePoint, alpha: f64, beta: f64, t: f64) -> SpherePoint {
    rotate_z(p, t * alpha * (p.z - beta))
}

/// Rotation about x by `delta`.
pub fn kick_step(p: SpherePoint, delta: f64) -> SpherePoint {
    rotate_x(p, delta)
}

/// Perturbed map: kick, then twist.
pub fn perturbed_step(p: SpherePoint, alpha: f64, beta: f64, delta: f64) -> SpherePoint {
    twist_step(kick_step(p, delta), alpha, beta)
}

/// Exact inverse of [`perturbed_step`].
pub fn perturbed_step_inverse(p: SpherePoint, alpha: f64, beta: f64, delta: f64) -> SpherePoint {
    kick_step(twist_power(p, alpha, beta, -1.0), -delta)
}

/// Samples from the Gaussian classical density of a spin coherent state, with its density values.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClassicalEnsemble {
    pub points: Vec<SpherePoint>,
    /// `rho_cl` at each point.
    pub weights: Vec<f64>,
    pub theta_star: f64,
    pub phi_star: f64,
    pub spin: SpinParameters,
    /// `(4S + 1) / (4 pi)`.
    pub normalization: f64,
}

impl ClassicalEnsemble {
    /// `rho_cl(theta, phi) = (4S+1)/(4 pi) exp(-S((theta - theta*)^2 + (phi - phi*)^2 sin^2 theta))`,
    /// with the azimuth difference wrapped to `(-pi, pi]`.
    pub fn density(&self, p: &SpherePoint) -> f64 {
        let s = self.spin.spin() as f64;
        let (th, ph) = p.angles();
        let dth = th - self.theta_star;
        let dph = wrap_pi(ph - self.phi_star);
        self.normalization * (-s * (dth * dth + dph * dph * th.sin().powi(2))).exp()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

fn wrap_pi(x: f64) -> f64 {
    let r = x.rem_euclid(TAU);
    if r > PI {
        r - TAU
    } else {
        r
    }
}

/// Draws `count` points with `theta ~ N(theta*, 1/(2S))`, `phi ~ N(phi*, 1/(2S sin^2 theta*))`.
pub fn sample_coherent(
    spin: SpinParameters,
    theta_star: f64,
    phi_star: f64,
    count: usize,
    seed: u64,
) -> Result<ClassicalEnsemble> {
    if count == 0 {
        return Err(invalid("count", "must be at least 1"));
    }
    if !(theta_star > 0.0 && theta_star < PI) {
        return Err(EchoError::PoleDegenerate);
    }
    let s = spin.spin() as f64;
    let sigma = 1.0 / (2.0 * s).sqrt();
    let th_dist = Normal::new(theta_star, sigma).map_err(|e| invalid("theta_star", e.to_string()))?;
    let ph_dist =
        Normal::new(phi_star, sigma / theta_star.sin()).map_err(|e| invalid("phi_star", e.to_string()))?;
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let points: Vec<SpherePoint> = (0..count)
        .map(|_| SpherePoint::from_angles(th_dist.sample(&mut rng), ph_dist.sample(&mut rng)))
        .collect();
    let mut ens = ClassicalEnsemble {
        points,
        weights: Vec::new(),
        theta_star,
        phi_star,
        spin,
        normalization: (4.0 * s + 1.0) / (4.0 * PI),
    };
    ens.weights = ens.points.iter().map(|p| ens.density(p)).collect();
    Ok(ens)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassicalTrace {
    pub times: Vec<u64>,
    pub fidelity: Vec<f64>,
    /// Delta-method standard error of the ratio estimator.
    pub stderr: Vec<f64>,
}

fn ratio_stats(num: &[f64], den: &[f64]) -> (f64, f64) {
    let n = num.len() as f64;
    let mn = num.iter().sum::<f64>() / n;
    let md = den.iter().sum::<f64>() / n;
    let f = mn / md;
    let var = num
        .iter()
        .zip(den)
        .map(|(a, b)| (a - f * b).powi(2))
        .sum::<f64>()
        / (n - 1.0).max(1.0);
    (f, var.sqrt() / (n.sqrt() * md))
}

/// Classical fidelity `E[rho0(Phi0^{-t} Phi_delta^t y)] / E[rho0(y)]` at the requested times.
///
/// Equal to the echo-trajectory form `E[rho0(Phi_delta^{-t} Phi0^t y)] / E[rho0(y)]`
/// because both maps preserve the measure; this ordering lets the perturbed orbit be
/// advanced incrementally while the unperturbed return is a single closed-form rotation.
pub fn classical_fidelity(
    ensemble: &ClassicalEnsemble,
    alpha: f64,
    beta: f64,
    delta: f64,
    times: &[u64],
) -> Result<ClassicalTrace> {
    if times.windows(2).any(|w| w[1] < w[0]) {
        return Err(invalid("times", "must be non-decreasing"));
    }
    let values = echo_densities(ensemble, 0..ensemble.len(), alpha, beta, delta, times);
    let mut trace = ClassicalTrace {
        times: times.to_vec(),
        fidelity: Vec::with_capacity(times.len()),
        stderr: Vec::with_capacity(times.len()),
    };
    for v in &values {
        let (f, e) = ratio_stats(v, &ensemble.weights);
        trace.fidelity.push(f);
        trace.stderr.push(e);
    }
    Ok(trace)
}

fn echo_densities(
    ensemble: &ClassicalEnsemble,
    range: Range<usize>,
    alpha: f64,
    beta: f64,
    delta: f64,
    times: &[u64],
) -> Vec<Vec<f64>> {
    let mut values = vec![vec![0.0; range.len()]; times.len()];
    for (i, &y) in ensemble.points[range].iter().enumerate() {
        let mut p = y;
        let mut step = 0u64;
        for (k, &t) in times.iter().enumerate() {
            while step < t {
                p = perturbed_step(p, alpha, beta, delta);
                step += 1;
                if step % RENORMALIZE_EVERY == 0 {
                    p = p.normalized();
                }
            }
            values[k][i] = ensemble.density(&twist_power(p, alpha, beta, -(t as f64)));
        }
    }
    values
}

/// Additive sufficient statistics of the ratio estimator over a slice of the ensemble.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassicalSums {
    pub times: Vec<u64>,
    pub count: usize,
    pub num: Vec<f64>,
    pub num_sq: Vec<f64>,
    pub cross: Vec<f64>,
    pub den: f64,
    pub den_sq: f64,
}

impl ClassicalSums {
    /// Adds `other` in place; both must share the time grid.
    pub fn merge(&mut self, other: &ClassicalSums) -> Result<()> {
        if self.times != other.times {
            return Err(invalid("times", "partitions use different time grids"));
        }
        self.count += other.count;
        for k in 0..self.times.len() {
            self.num[k] += other.num[k];
            self.num_sq[k] += other.num_sq[k];
            self.cross[k] += other.cross[k];
        }
        self.den += other.den;
        self.den_sq += other.den_sq;
        Ok(())
    }

    pub fn finish(&self) -> ClassicalTrace {
        let n = self.count as f64;
        let md = self.den / n;
        let mut trace = ClassicalTrace {
            times: self.times.clone(),
            fidelity: Vec::with_capacity(self.times.len()),
            stderr: Vec::with_capacity(self.times.len()),
        };
        for k in 0..self.times.len() {
            let f = self.num[k] / self.den;
            let ss = (self.num_sq[k] - 2.0 * f * self.cross[k] + f * f * self.den_sq).max(0.0);
            let var = ss / (n - 1.0).max(1.0);
            trace.fidelity.push(f);
            trace.stderr.push(var.sqrt() / (n.sqrt() * md));
        }
        trace
    }
}

/// Sums for ensemble members `range`; merge the partitions in a fixed order for reproducible output.
pub fn classical_sums(
    ensemble: &ClassicalEnsemble,
    range: Range<usize>,
    alpha: f64,
    beta: f64,
    delta: f64,
    times: &[u64],
) -> Result<ClassicalSums> {
    if times.windows(2).any(|w| w[1] < w[0]) {
        return Err(invalid("times", "must be non-decreasing"));
    }
    if range.is_empty() || range.end > ensemble.len() {
        return Err(invalid("range", "must be a non-empty slice of the ensemble"));
    }
    let weights = &ensemble.weights[range.clone()];
    let values = echo_densities(ensemble, range, alpha, beta, delta, times);
    Ok(ClassicalSums {
        times: times.to_vec(),
        count: weights.len(),
        num: values.iter().map(|v| v.iter().sum()).collect(),
        num_sq: values.iter().map(|v| v.iter().map(|a| a * a).sum()).collect(),
        cross: values.iter().map(|v| v.iter().zip(weights).map(|(a, b)| a * b).sum()).collect(),
        den: weights.iter().sum(),
        den_sq: weights.iter().map(|b| b * b).sum(),
    })
}

/// Literal echo-trajectory estimator at one time: forward unperturbed, then `t`
/// exact inverse perturbed steps. Cost grows as `t` per call.
pub fn classical_fidelity_direct(
    ensemble: &ClassicalEnsemble,
    alpha: f64,
    beta: f64,
    delta: f64,
    t: u64,
) -> (f64, f64) {
    let num: Vec<f64> = ensemble
        .points
        .iter()
        .map(|&y| {
            let mut p = twist_power(y, alpha, beta, t as f64);
            for s in 1..=t {
                p = perturbed_step_inverse(p, alpha, beta, delta);
                if s % RENORMALIZE_EVERY == 0 {
                    p = p.normalized();
                }
            }
            ensemble.density(&p)
        })
        .collect();
    ratio_stats(&num, &ensemble.weights)
}

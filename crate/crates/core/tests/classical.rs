use echo_core::classical::{
    classical_fidelity, classical_fidelity_direct, classical_sums, kick_step, perturbed_step,
    perturbed_step_inverse, sample_coherent, twist_power, twist_step, SpherePoint,
};
use echo_core::echo::EchoSystem;
use echo_core::numerics::linear_fit;
use echo_core::semiclassics::{t1_coherent, TopModel};
use echo_core::spin::{SpinParameters, TopParameters};
use echo_core::states::{coherent_state, structure_function, CoherentParams};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::{PI, TAU};

const ALPHA: f64 = 1.1;

fn dist(a: SpherePoint, b: SpherePoint) -> f64 {
    ((a.x - b.x).powi(2) + (a.y - b.y).powi(2) + (a.z - b.z).powi(2)).sqrt()
}

fn random_point(rng: &mut impl Rng) -> SpherePoint {
    SpherePoint::from_angles(rng.random_range(0.1..PI - 0.1), rng.random_range(0.0..TAU))
}

#[test]
fn twist_fixes_z_and_the_beta_circle() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..100 {
        let p = random_point(&mut rng);
        let q = twist_step(p, ALPHA, 0.3);
        assert_eq!(q.z, p.z);
        assert!((q.norm_sqr() - 1.0).abs() <= 1e-14);
    }
    let p = SpherePoint::from_angles(0.3f64.acos(), 2.0);
    assert!(dist(twist_step(p, ALPHA, 0.3), p) <= 1e-15);
}

#[test]
fn twist_million_steps_norm_drift() {
    let mut p = SpherePoint::from_angles(1.0, 1.0);
    for _ in 0..1_000_000 {
        p = twist_step(p, ALPHA, 0.0);
    }
    assert!((p.norm_sqr() - 1.0).abs() < 1e-9);
}

#[test]
fn kick_full_turn_is_identity() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..100 {
        let p = random_point(&mut rng);
        assert!(dist(kick_step(p, TAU), p) <= 1e-12);
        assert_eq!(kick_step(p, 0.0), p);
    }
}

#[test]
fn kick_generator_is_poisson_flow_of_x() {
    // {y, x} = -z and {z, x} = y for the spin bracket.
    let p = SpherePoint::from_angles(1.2, 0.7);
    let mut errs = Vec::new();
    for d in [1e-2, 1e-3, 1e-4] {
        let q = kick_step(p, d);
        let e = ((q.x - p.x) / d).abs() + ((q.y - p.y) / d + p.z).abs() + ((q.z - p.z) / d - p.y).abs();
        errs.push(e);
    }
    assert!(errs[1] < 0.2 * errs[0] && errs[2] < 0.2 * errs[1], "{errs:?}");
    assert!(errs[2] < 1e-4);
}

#[test]
fn action_angle_coordinates() {
    let (j, th) = SpherePoint::new(1.0, 0.0, 0.0).unwrap().action_angle().unwrap();
    assert_eq!((j, th), (0.0, 0.0));
    assert!(SpherePoint::new(0.0, 0.0, 1.0).unwrap().action_angle().is_err());
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..100 {
        let p = random_point(&mut rng);
        let (j, th) = p.action_angle().unwrap();
        assert!((0.0..TAU).contains(&th));
        assert!(dist(SpherePoint::from_action_angle(j, th).unwrap(), p) <= 1e-14);
        let (j2, th2) = twist_step(p, ALPHA, 0.4).action_angle().unwrap();
        assert_eq!(j2, j);
        let dth = (th2 - th - ALPHA * (j - 0.4)).rem_euclid(TAU);
        assert!(dth.min(TAU - dth) <= 1e-12);
    }
}

/// Spherical excess of the geodesic triangle `abc`.
fn spherical_area(a: SpherePoint, b: SpherePoint, c: SpherePoint) -> f64 {
    let v = |p: SpherePoint| [p.x, p.y, p.z];
    let (a, b, c) = (v(a), v(b), v(c));
    let u = [b[0] - a[0], b[1] - a[1], b[2] - a[2]];
    let w = [c[0] - a[0], c[1] - a[1], c[2] - a[2]];
    let cross = [u[1] * w[2] - u[2] * w[1], u[2] * w[0] - u[0] * w[2], u[0] * w[1] - u[1] * w[0]];
    let triple = a[0] * cross[0] + a[1] * cross[1] + a[2] * cross[2];
    let dot = |p: [f64; 3], q: [f64; 3]| p[0] * q[0] + p[1] * q[1] + p[2] * q[2];
    2.0 * triple.abs().atan2(1.0 + dot(a, b) + dot(b, c) + dot(c, a))
}

#[test]
fn perturbed_map_preserves_area() {
    // The vertex-triangle area differs from the transported region by a series in the
    // triangle size; two Richardson levels remove the first two orders.
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..50 {
        let (th, ph) = (rng.random_range(0.3..PI - 0.3), rng.random_range(0.0..TAU));
        let (u1, u2) = (rng.random_range(0.0..TAU), rng.random_range(0.0..TAU));
        let drift = |eps: f64| {
            let pts = [0.0, u1, u2].map(|u| SpherePoint::from_angles(th + eps * u.cos(), ph + eps * u.sin()));
            let img = pts.map(|p| perturbed_step(p, ALPHA, 0.2, 0.3));
            spherical_area(img[0], img[1], img[2]) / spherical_area(pts[0], pts[1], pts[2]) - 1.0
        };
        let e = 1e-3;
        let (r1, r2, r4) = (drift(e), drift(e / 2.0), drift(e / 4.0));
        let first = [2.0 * r2 - r1, 2.0 * r4 - r2];
        let extrap = (4.0 * first[1] - first[0]) / 3.0;
        assert!(extrap.abs() <= 1e-8, "{r1:e} {r2:e} {r4:e} -> {extrap:e}");
    }
}

#[test]
fn echo_trajectory_identity_at_zero_perturbation() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..20 {
        let y = random_point(&mut rng);
        let mut p = twist_power(y, ALPHA, 0.0, 1000.0);
        for _ in 0..1000 {
            p = perturbed_step_inverse(p, ALPHA, 0.0, 0.0);
        }
        assert!(dist(p, y) <= 1e-10);
    }
}

#[test]
fn sampling_statistics() {
    let spin = SpinParameters::new(200).unwrap();
    let n = 40_000;
    let ens = sample_coherent(spin, 1.0, 1.0, n, 6).unwrap();
    let (th, ph): (Vec<f64>, Vec<f64>) = ens.points.iter().map(|p| p.angles()).unzip();
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let var = |v: &[f64], m: f64| v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (v.len() - 1) as f64;
    let sigma = (1.0 / 400f64).sqrt();
    let (mt, mp) = (mean(&th), mean(&ph));
    assert!((mt - 1.0).abs() <= 3.0 * sigma / (n as f64).sqrt());
    assert!((mp - 1.0).abs() <= 3.0 * sigma / 1f64.sin() / (n as f64).sqrt());
    assert!((var(&th, mt) * 400.0 - 1.0).abs() <= 0.05);
    assert!(ens.weights.iter().all(|w| *w >= 0.0));
    assert!((ens.normalization - 801.0 / (4.0 * PI)).abs() < 1e-12);
}

/// KS distance between sampled `j = cos theta` and the quantum lattice weights,
/// each lattice weight spread uniformly over its cell.
fn ks_distance(s: u32) -> f64 {
    let spin = SpinParameters::new(s).unwrap();
    let ens = sample_coherent(spin, 1.0, 1.0, 20_000, 7).unwrap();
    let mut js: Vec<f64> = ens.points.iter().map(|p| p.z).collect();
    js.sort_by(f64::total_cmp);
    let sf = structure_function(&coherent_state(spin, 1.0, 1.0).unwrap().state);
    let h = spin.hbar();
    let cdf = |x: f64| -> f64 {
        sf.j.iter()
            .zip(&sf.weight)
            .map(|(j, w)| w * ((x - (j - 0.5 * h)) / h).clamp(0.0, 1.0))
            .sum()
    };
    let n = js.len() as f64;
    js.iter()
        .enumerate()
        .map(|(i, &x)| {
            let c = cdf(x);
            (c - i as f64 / n).abs().max((c - (i + 1) as f64 / n).abs())
        })
        .fold(0.0, f64::max)
}

#[test]
fn action_marginal_approaches_quantum_structure_function() {
    let d: Vec<f64> = [25, 100, 400].map(ks_distance).to_vec();
    assert!(d[0] > d[1] && d[1] > d[2], "{d:?}");
    assert!(d[2] < 0.03, "{d:?}");
}

#[test]
fn fidelity_is_one_without_perturbation() {
    let spin = SpinParameters::new(100).unwrap();
    let ens = sample_coherent(spin, 1.0, 1.0, 2000, 8).unwrap();
    let tr = classical_fidelity(&ens, ALPHA, 0.0, 0.0, &[0, 10, 1000]).unwrap();
    for f in tr.fidelity {
        assert!((f - 1.0).abs() < 1e-9);
    }
}

#[test]
fn incremental_and_direct_estimators_agree() {
    let spin = SpinParameters::new(200).unwrap();
    let ens = sample_coherent(spin, 1.0, 1.0, 20_000, 9).unwrap();
    let delta = 0.32 / 200.0;
    let times = [5u64, 20, 60];
    let inc = classical_fidelity(&ens, ALPHA, 0.0, delta, &times).unwrap();
    for (k, &t) in times.iter().enumerate() {
        let (f, e) = classical_fidelity_direct(&ens, ALPHA, 0.0, delta, t);
        let tol = 4.0 * (e * e + inc.stderr[k].powi(2)).sqrt();
        assert!((f - inc.fidelity[k]).abs() <= tol, "t={t}: {f} vs {}", inc.fidelity[k]);
    }
}

#[test]
fn tracks_quantum_fidelity_before_t1() {
    let spin = SpinParameters::new(200).unwrap();
    let delta = 0.32 / 200.0;
    let params = CoherentParams::new(1.0, 1.0, spin.hbar()).unwrap();
    let t1 = t1_coherent(&TopModel::new(ALPHA, 0.0, 0.0, 0.0), &params, spin.hbar()).unwrap();
    let t_end = (0.5 * t1).floor() as u64;
    let sys = EchoSystem::new(spin, TopParameters::new(ALPHA, 0.0, 0.0, delta).unwrap(), 0.0).unwrap();
    let q = sys.run(&coherent_state(spin, 1.0, 1.0).unwrap().state, t_end, 1).unwrap();
    let ens = sample_coherent(spin, 1.0, 1.0, 20_000, 10).unwrap();
    let cl = classical_fidelity(&ens, ALPHA, 0.0, delta, &q.times).unwrap();
    for k in 0..q.len() {
        let tol = (3.0 * cl.stderr[k]).max(0.02);
        assert!((cl.fidelity[k] - q.fidelity[k]).abs() <= tol, "t={}", q.times[k]);
    }
}

#[test]
fn strong_perturbation_power_law() {
    // Window [t1, 5 t1]; afterwards the angular spread fills the torus and F_cl levels off.
    let spin = SpinParameters::new(200).unwrap();
    let delta = 3.2 / 200.0;
    let params = CoherentParams::new(1.0, 1.0, spin.hbar()).unwrap();
    let t1 = t1_coherent(&TopModel::new(ALPHA, 0.0, 0.0, 0.0), &params, spin.hbar()).unwrap();
    let times: Vec<u64> = (t1.ceil() as u64..=(5.0 * t1) as u64).step_by(3).collect();
    let ens = sample_coherent(spin, 1.0, 1.0, 20_000, 11).unwrap();
    let tr = classical_fidelity(&ens, ALPHA, 0.0, delta, &times).unwrap();
    let x: Vec<f64> = times.iter().map(|t| (*t as f64).ln()).collect();
    let y: Vec<f64> = tr.fidelity.iter().map(|f| f.ln()).collect();
    let slope = linear_fit(&x, &y).unwrap().slope;
    assert!((slope + 1.0).abs() <= 0.15, "{slope}");
}

#[test]
fn partition_sums_reproduce_single_pass_estimator() {
    let spin = SpinParameters::new(100).unwrap();
    let ens = sample_coherent(spin, 1.0, 1.0, 3000, 4).unwrap();
    let times = [0u64, 5, 40, 300];
    let whole = classical_fidelity(&ens, ALPHA, 0.0, 0.01, &times).unwrap();
    let mut sums = classical_sums(&ens, 0..1000, ALPHA, 0.0, 0.01, &times).unwrap();
    for r in [1000..1700, 1700..3000] {
        sums.merge(&classical_sums(&ens, r, ALPHA, 0.0, 0.01, &times).unwrap()).unwrap();
    }
    let merged = sums.finish();
    for k in 0..times.len() {
        assert!((merged.fidelity[k] - whole.fidelity[k]).abs() <= 1e-12);
        assert!((merged.stderr[k] - whole.stderr[k]).abs() <= 1e-9 * whole.stderr[k].max(1e-6));
    }
    assert!(classical_sums(&ens, 0..0, ALPHA, 0.0, 0.01, &times).is_err());
}

mod common;

use common::*;
use echo_core::echo::{EchoOracle, EchoSystem, SpectralEcho};
use echo_core::semiclassics::{tilde_v, IntegrableModel, TopModel};
use echo_core::spin::{build_kick, build_unperturbed, SpinParameters, TopParameters};
use echo_core::states::{coherent_state, random_member};

#[test]
fn kick_matches_matrix_exponential() {
    for s in [1, 2, 5, 10, 16, 20] {
        let spin = SpinParameters::new(s).unwrap();
        for delta in [1e-3, 0.3, 2.0] {
            let kick = build_kick(&spin, delta).unwrap().dense();
            let reference = expm(&(sx_dense(s) * c(0.0, -delta)));
            let err = max_abs_diff(&kick, &reference);
            assert!(err <= 1e-9, "S={s} delta={delta}: {err:e}");
        }
    }
}

#[test]
fn fidelity_equals_echo_operator_expectation() {
    for (s, beta) in [(5, 0.0), (12, 1.4), (20, 0.0)] {
        let spin = SpinParameters::new(s).unwrap();
        let delta = 0.7 / s as f64;
        let top = TopParameters::new(1.1, beta, 0.0, delta).unwrap();
        let sys = EchoSystem::new(spin, top, 0.0).unwrap();
        let states = [coherent_state(spin, 1.0, 1.0).unwrap().state, random_member(spin, 11, 3)];
        for psi in &states {
            let trace = sys.run(psi, 60, 1).unwrap();
            for t in [1u64, 7, 60] {
                let m = echo_operator(s, 1.1, beta, delta, t);
                let f = expect(psi.amps(), &m);
                let got = trace.amplitude[t as usize];
                assert!((got - f).norm() <= 1e-10, "S={s} t={t}: {got} vs {f}");
                assert!((trace.fidelity[t as usize] - f.norm_sqr()).abs() <= 1e-10);
            }
        }
    }
}

#[test]
fn first_step_is_a_rotation_overlap() {
    // f(1) = <psi| exp(+i delta Sx) |psi>; for a coherent state along n this is
    // (cos(delta/2) + i n_x sin(delta/2))^{2S}.
    let spin = SpinParameters::new(30).unwrap();
    let (theta, phi) = (1.0f64, 1.0f64);
    for delta in [0.01, 0.2, 1.0] {
        let top = TopParameters::new(1.1, 0.0, 0.0, delta).unwrap();
        let sys = EchoSystem::new(spin, top, 0.0).unwrap();
        let psi = coherent_state(spin, theta, phi).unwrap().state;
        let f1 = sys.run(&psi, 1, 1).unwrap().amplitude[1];
        let nx = theta.sin() * phi.cos();
        let want = c((0.5 * delta).cos(), nx * (0.5 * delta).sin()).powu(60);
        assert!((f1 - want).norm() < 1e-10, "{f1} vs {want}");
    }
}

#[test]
fn spectral_route_matches_dense_product() {
    let spin = SpinParameters::new(8).unwrap();
    let delta = 0.05;
    let top = TopParameters::new(1.1, 0.3, 0.0, delta).unwrap();
    let sys = EchoSystem::new(spin, top, 0.0).unwrap();
    let spectral = SpectralEcho::new(&sys.unperturbed, &sys.kick).unwrap();
    let psi = random_member(spin, 5, 0);
    let times = [0u64, 3, 40, 333];
    let tr = spectral.trace(&psi, &times).unwrap();
    for (i, &t) in times.iter().enumerate() {
        let f = expect(psi.amps(), &echo_operator(8, 1.1, 0.3, delta, t));
        assert!((tr.amplitude[i] - f).norm() < 1e-10);
    }
}

#[test]
fn doubly_averaged_perturbation_is_traceless() {
    for (s, beta) in [(10, 0.0), (25, 1.4), (64, 0.37), (128, 0.0)] {
        let spin = SpinParameters::new(s).unwrap();
        let top = TopParameters::new(1.1, beta, 0.0, 0.0).unwrap();
        let u0 = build_unperturbed(&spin, &top, 0.0);
        let oracle = EchoOracle::new(spin, &u0, false).unwrap();
        let v = oracle.v_doubly_averaged_exact().unwrap();
        let tr: f64 = v.iter().sum();
        assert!(tr.abs() <= 1e-9, "S={s}: trace {tr:e}");
    }
}

#[test]
fn exact_diagonal_converges_to_semiclassical() {
    let model = TopModel::new(1.1, 0.0, 0.0, 0.0);
    for j in [0.3, 0.5, 0.7] {
        let mut sizes = Vec::new();
        let mut errs = Vec::new();
        for s in [50u32, 100, 200, 400] {
            let spin = SpinParameters::new(s).unwrap();
            let top = TopParameters::new(1.1, 0.0, 0.0, 0.0).unwrap();
            let u0 = build_unperturbed(&spin, &top, 0.0);
            let oracle = EchoOracle::new(spin, &u0, true).unwrap();
            let exact = oracle.v_doubly_averaged_exact().unwrap();
            let idx = (s as f64 * (1.0 + j)).round() as usize;
            errs.push((exact[idx] - model.bbar_v(j).unwrap()).abs());
            sizes.push(s as f64);
        }
        let p = slope(&sizes, &errs);
        assert!((p + 1.0).abs() <= 0.2, "j={j}: exponent {p}, errors {errs:?}");
    }
}

#[test]
fn heisenberg_average_matches_gamma_over_t() {
    // V̿ is the t -> infinity limit of Gamma_t / t.
    let spin = SpinParameters::new(10).unwrap();
    let top = TopParameters::new(1.1, 1.4, 0.0, 0.0).unwrap();
    let u0 = build_unperturbed(&spin, &top, 0.0);
    let oracle = EchoOracle::new(spin, &u0, false).unwrap();
    let v = oracle.v_doubly_averaged_exact().unwrap();
    let scale = v.iter().fold(0.0f64, |a, b| a.max(b.abs()));
    let mut devs = Vec::new();
    for t in [250u64, 1000, 4000] {
        let g = oracle.gamma_exact(t);
        devs.push(
            (0..spin.dim())
                .map(|i| (g[(i, i)].re / t as f64 - v[i]).abs())
                .fold(0.0, f64::max),
        );
    }
    assert!(devs[1] < 0.5 * devs[0] && devs[2] < 0.5 * devs[1], "{devs:?}");
    assert!(devs[2] < 0.01 * scale, "{devs:?}");
}

fn residual_setup() -> (EchoOracle, echo_core::spin::KickPropagator, echo_core::states::QuantumState) {
    let spin = SpinParameters::new(50).unwrap();
    let top = TopParameters::new(1.1, 0.0, 0.0, 0.0).unwrap();
    let u0 = build_unperturbed(&spin, &top, 0.0);
    let kick = build_kick(&spin, 0.0).unwrap();
    let oracle = EchoOracle::new(spin, &u0, false).unwrap();
    let psi = coherent_state(spin, 1.0, 1.0).unwrap().state;
    (oracle, kick, psi)
}

#[test]
fn linear_response_even_part_is_quartic() {
    // The odd part carries a delta^3 covariance of Sigma_t and Gamma_t; the even part
    // starts at delta^4.
    let (oracle, kick, psi) = residual_setup();
    let deltas = [1e-4, 2e-4, 4e-4];
    let signed: Vec<f64> = deltas.iter().flat_map(|d| [*d, -*d]).collect();
    let r = oracle.linear_response_residual(&psi, &kick, 200, &signed).unwrap();
    let even: Vec<f64> = r.chunks(2).map(|p| (0.5 * (p[0] + p[1])).abs()).collect();
    let odd: Vec<f64> = r.chunks(2).map(|p| (0.5 * (p[0] - p[1])).abs()).collect();
    let pe = slope(&deltas, &even);
    let po = slope(&deltas, &odd);
    assert!((pe - 4.0).abs() <= 0.3, "even slope {pe}: {r:?}");
    assert!((po - 3.0).abs() <= 0.3, "odd slope {po}: {r:?}");
    assert!(oracle.linear_response_residual(&psi, &kick, 200, &[0.0]).unwrap()[0].abs() < 1e-12);
}

#[test]
fn linear_response_residual_sign_is_stable_over_random_states() {
    let spin = SpinParameters::new(50).unwrap();
    let top = TopParameters::new(1.1, 0.0, 0.0, 0.0).unwrap();
    let u0 = build_unperturbed(&spin, &top, 0.0);
    let kick = build_kick(&spin, 0.0).unwrap();
    let oracle = EchoOracle::new(spin, &u0, false).unwrap();
    for k in 0..5 {
        let psi = random_member(spin, 21, k);
        let r = oracle.linear_response_residual(&psi, &kick, 200, &[2e-4, 4e-4]).unwrap();
        assert!(r.iter().all(|x| x.is_finite()));
        assert_eq!(r[0].signum(), r[1].signum(), "state {k}: {r:?}");
        assert!(r[1].abs() > r[0].abs());
    }
}

#[test]
fn sigma_mean_approaches_tilde_v() {
    let s = 50u32;
    let spin = SpinParameters::new(s).unwrap();
    let top = TopParameters::new(1.1, 0.0, 0.0, 0.0).unwrap();
    let u0 = build_unperturbed(&spin, &top, 0.0);
    let oracle = EchoOracle::new(spin, &u0, false).unwrap();
    let psi = coherent_state(spin, 1.0, 1.0).unwrap().state;
    let model = TopModel::new(1.1, 0.0, 0.0, 0.0);
    let want = tilde_v(&model, 1f64.cos(), 1.0).unwrap();
    for t in [50u64, 80, 100] {
        let (mean, _) = oracle.sigma_moments(&psi, t).unwrap();
        assert!((mean - want).abs() < 5.0 * spin.hbar(), "t={t}: {mean} vs {want}");
    }
}

#[test]
fn pi_resonance_sigma_mean_is_time_averaged() {
    let s = 200u32;
    let spin = SpinParameters::new(s).unwrap();
    let top = TopParameters::new(1.1, 0.0, 0.0, 0.0).unwrap();
    let u0 = build_unperturbed(&spin, &top, 0.0);
    let oracle = EchoOracle::new(spin, &u0, true).unwrap();
    let psi = coherent_state(spin, 1.0, 1.0).unwrap().state;
    let t_half = (std::f64::consts::PI * s as f64 / 1.1).round() as u64;
    let (at_res, _) = oracle.sigma_moments(&psi, t_half).unwrap();
    let (plateau, _) = oracle.sigma_moments(&psi, 300).unwrap();
    assert!((at_res - plateau).abs() < 0.02, "{at_res} vs {plateau}");
}

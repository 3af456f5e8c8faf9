use std::f64::consts::PI;

use photonbeat::bkprotocol::*;
use photonbeat::detector::{no_click_evolve, observed_click_update_unnormalized, DetectorBankState, Port};
use photonbeat::dynamics::{apply_jump, click_density, evolve_conditional, MINUS, PLUS};
use photonbeat::qcore::{DensityMatrix, Operator, StateVector, C64};
use photonbeat::stats;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol
}

#[test]
fn effective_system_structure() {
    let p = BKParams::new(1.0, 0.0, 1.0);
    let sys = build_effective_system(&p).unwrap();
    // Purely anti-Hermitian at zero detuning.
    let h = sys.h_cond();
    assert!(h.sub(&h.anti_hermitian_part()).unwrap().max_abs() < 1e-15);

    let p = BKParams::new(2.0, 0.3, 1.0);
    let sys = build_effective_system(&p).unwrap();
    let s = sys.space().clone();
    let psi02 = StateVector::from_levels(s.clone(), &[0, 2]).unwrap();
    let out = sys.jump(PLUS).unwrap().apply(&psi02).unwrap();
    assert!(close(out.amplitude(&[0, 1]).unwrap().re, 1.0, 1e-15));
    let psi22 = StateVector::from_levels(s, &[2, 2]).unwrap();
    let total = click_density(&sys, &psi22, PLUS).unwrap() + click_density(&sys, &psi22, MINUS).unwrap();
    assert!(close(total, 4.0, 1e-14));
    assert!(build_effective_system(&BKParams::new(0.0, 0.0, 1.0)).is_err());
}

#[test]
fn first_round_jump_state() {
    let (k, d, t1) = (1.0, 0.8, 0.6);
    let sys = build_effective_system(&BKParams::new(k, d, 1.0)).unwrap();
    let psi = evolve_conditional(&sys, &round_start_state(sys.space()), t1).unwrap();
    let after = apply_jump(&sys, &psi, MINUS).unwrap();
    // Remove the global phase using the |01> amplitude.
    let a01 = after.amplitude(&[0, 1]).unwrap();
    let a10 = after.amplitude(&[1, 0]).unwrap() / a01;
    assert!((a10 - (-C64::from_polar(1.0, d * t1))).norm() < 1e-9);
}

#[test]
fn ideal_final_state_examples() {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let psi = ideal_final_state(&ClickOutcome::new(0.4, 0.4, 0), 2.0);
    assert!(close(psi.amplitudes()[1].re, s, 1e-15) && close(psi.amplitudes()[2].re, s, 1e-15));
    for &(t1, t2) in &[(0.0, 1.0), (3.0, 0.2)] {
        let psi = ideal_final_state(&ClickOutcome::new(t1, t2, 1), 0.0);
        assert!(close(psi.amplitudes()[2].re, -s, 1e-15));
    }
    let psi = ideal_final_state(&ClickOutcome::new(PI, 0.0, 0), 1.0);
    assert!(close(psi.amplitudes()[2].re, -s, 1e-15));
}

#[test]
fn phase_correction_restores_target() {
    let mut rng = ChaCha20Rng::seed_from_u64(11);
    for _ in 0..100 {
        let o = ClickOutcome::new(rng.random::<f64>() * 5.0, rng.random::<f64>() * 5.0, rng.random_range(0..2));
        let d = rng.random::<f64>() * 10.0 - 5.0;
        let fixed = phase_correction(&ideal_final_state(&o, d), &o, d).unwrap();
        assert!((fixed.fidelity(&target_state(o.m)).unwrap() - 1.0).abs() < 1e-12);
        // Using a wrong detuning leaves cos^2 of half the phase error.
        let dd = 0.3;
        let off = phase_correction(&ideal_final_state(&o, d), &o, d + dd).unwrap();
        let expected = (0.5 * dd * (o.t1 - o.t2)).cos().powi(2);
        assert!((off.fidelity(&target_state(o.m)).unwrap() - expected).abs() < 1e-12);
    }
    let o = ClickOutcome::new(1.0, 2.0, 0);
    let psi = ideal_final_state(&o, 0.7);
    assert_eq!(phase_correction(&psi, &o, 0.0).unwrap(), psi);
    let bad = StateVector::from_levels(qubit_space(), &[0, 0]).unwrap();
    assert!(phase_correction(&bad, &o, 1.0).is_err());
}

#[test]
fn bad_limit_values() {
    let rho = bad_limit_first_round_state(&BKParams::new(1.0, 0.0, 0.0)).unwrap();
    let plus = target_state(0).projector();
    assert!(rho.trace_distance(&plus).unwrap() < 1e-14);
    let rho = bad_limit_first_round_state(&BKParams::new(1.0, 1.0, 0.0)).unwrap();
    assert!(close(rho.get(1, 2).norm(), 0.5 / 2f64.sqrt(), 1e-15));
    let rho = bad_limit_first_round_state(&BKParams::new(1.0, 1e9, 0.0)).unwrap();
    assert!(rho.get(1, 2).norm() < 1e-9);

    assert_eq!(bad_limit_fidelity(&BKParams::new(1.0, 0.0, 0.0)).unwrap(), 1.0);
    assert!(close(bad_limit_fidelity(&BKParams::new(1.0, 1.0, 0.0)).unwrap(), 0.75, 1e-15));
    assert!(close(bad_limit_fidelity(&BKParams::new(1.0, 3.0, 0.0)).unwrap(), 0.55, 1e-15));
}

/// Ideal-detector Monte Carlo over click times: in the bad limit the state
/// is the average of the ideal conditional states over all outcomes.
#[test]
fn bad_limit_fidelity_from_phase_averaging() {
    let p = BKParams::new(1.0, 3.0, 0.0);
    let mut rng = ChaCha20Rng::seed_from_u64(5);
    let n = 200_000;
    let mut coh = C64::new(0.0, 0.0);
    for _ in 0..n {
        // Single-click times in each round follow kappa_eff e^{-kappa_eff t}.
        let t1 = -(1.0 - rng.random::<f64>()).ln();
        let t2 = -(1.0 - rng.random::<f64>()).ln();
        let psi = ideal_final_state(&ClickOutcome::new(t1, t2, 0), p.delta);
        coh += psi.amplitudes()[1] * psi.amplitudes()[2].conj();
    }
    let f = 0.5 + (coh / n as f64).norm();
    assert!((f - 0.55).abs() < 5e-3, "{f}");
}

/// Propagates both rounds through the sector equations and returns
/// `gamma_r^2 rho(t1, t2)` restricted to the qubit subspace.
fn detector_ode_rho(o: &ClickOutcome, first: Port, second: Port, p: &BKParams) -> DensityMatrix {
    let sys = build_effective_system(p).unwrap();
    let drain = 60.0 / p.kappa_eff.min(p.gamma_r);
    let bank = DetectorBankState::from_state(&round_start_state(sys.space()), p.gamma_r).unwrap();
    let b = no_click_evolve(&bank, &sys, o.t1).unwrap();
    let b = observed_click_update_unnormalized(&b, first);
    let end1 = no_click_evolve(&b, &sys, drain).unwrap();
    assert!(end1.rho_plus().trace() + end1.rho_minus().trace() + end1.rho_tt().trace() < 1e-12);

    // Level permutation between rounds as a unitary on the atom space.
    let s = sys.space().clone();
    let perm = Operator::from_fn(s.clone(), |i, j| {
        let map = [2usize, 0, 1];
        let l = s.levels_of(j);
        let target = s.index_of(&[map[l[0]], map[l[1]]]).unwrap();
        if i == target {
            C64::new(1.0, 0.0)
        } else {
            C64::new(0.0, 0.0)
        }
    })
    .unwrap();
    let rho2 = end1.rho_rr().sandwich(&perm).unwrap();
    let bank = DetectorBankState::ready(rho2, p.gamma_r).unwrap();
    let b = no_click_evolve(&bank, &sys, o.t2).unwrap();
    let b = observed_click_update_unnormalized(&b, second);
    let end2 = no_click_evolve(&b, &sys, drain).unwrap();
    let rho = end2.rho_rr();
    let idx = [1usize, 3]; // |01>, |10> in the atom basis
    let mut q = vec![C64::new(0.0, 0.0); 16];
    for (a, &i) in [1usize, 2].iter().zip(&idx) {
        for (b, &j) in [1usize, 2].iter().zip(&idx) {
            q[a * 4 + b] = rho.get(i, j);
        }
    }
    DensityMatrix::new_with_tolerance(qubit_space(), q, f64::INFINITY).unwrap()
}

#[test]
fn intermediate_rho_matches_detector_odes() {
    for &(k, d, g, t1, t2) in &[
        (1.0, 1.0, 1.0, 1.0, 1.0),
        (1.0, 2.0, 0.5, 0.3, 1.7),
        (2.0, 0.7, 5.0, 1.2, 0.4),
    ] {
        let p = BKParams::new(k, d, g);
        for (a, b, m) in [(Port::Plus, Port::Plus, 0), (Port::Plus, Port::Minus, 1), (Port::Minus, Port::Minus, 0)] {
            let o = ClickOutcome::new(t1, t2, m);
            let ode = detector_ode_rho(&o, a, b, &p);
            let closed = intermediate_rho(&o, &p).unwrap().scaled(g * g);
            for i in 0..4 {
                for j in 0..4 {
                    let diff = (ode.get(i, j) - closed.get(i, j)).norm();
                    assert!(diff < 1e-6, "({k},{d},{g}) {a:?}{b:?} [{i},{j}]: {} vs {}", ode.get(i, j), closed.get(i, j));
                }
            }
        }
    }
}

#[test]
fn two_click_normalization() {
    for &(k, d, g) in &[(1.0, 1.0, 1.0), (1.0, 3.0, 0.2), (1.0, 0.5, 1.0 + 1e-8)] {
        let (v, _) = two_click_probability(&BKParams::new(k, d, g)).unwrap();
        assert!((v - 0.125).abs() < 1e-6, "{v}");
    }
}

#[test]
fn conditional_fidelity_limits() {
    for &(t1, t2) in &[(0.0, 0.0), (0.5, 2.0), (4.0, 1.0)] {
        let o = ClickOutcome::new(t1, t2, 0);
        assert!(close(conditional_fidelity(&o, &BKParams::new(1.0, 0.0, 0.7)).unwrap(), 1.0, 1e-12));
        let f = conditional_fidelity(&o, &BKParams::new(1.0, 2.0, 1e6)).unwrap();
        assert!(f > 1.0 - 1e-5, "{f}");
    }
    // Normalized-state form agrees with the ratio form.
    let p = BKParams::new(1.0, 1.3, 0.6);
    let o = ClickOutcome::new(0.8, 2.1, 1);
    let rho = intermediate_rho(&o, &p).unwrap();
    let f = 0.5 + rho.get(1, 2).norm() / rho.trace();
    assert!(close(conditional_fidelity(&o, &p).unwrap(), f, 1e-14));
    // Slower detectors lower the averaged fidelity.
    let fs: Vec<f64> = [10.0, 1.0, 0.1]
        .iter()
        .map(|&g| average_fidelity(&BKParams::new(1.0, 1.0, g)).unwrap().value)
        .collect();
    assert!(fs[0] > fs[1] && fs[1] > fs[2], "{fs:?}");
}

#[test]
fn optimal_phase_maximizes_fidelity() {
    let mut rng = ChaCha20Rng::seed_from_u64(3);
    for _ in 0..50 {
        let p = BKParams::new(1.0, rng.random::<f64>() * 4.0, 0.1 + rng.random::<f64>() * 3.0);
        let o = ClickOutcome::new(rng.random::<f64>() * 3.0, rng.random::<f64>() * 3.0, rng.random_range(0..2));
        let rho = intermediate_rho(&o, &p).unwrap();
        let phi = optimal_phase(&rho);
        let best = fidelity_at_phase(&rho, phi);
        assert!(close(best, 0.5 + rho.get(1, 2).norm() / rho.trace(), 1e-12));
        for k in 1..8 {
            assert!(fidelity_at_phase(&rho, phi + 0.7 * k as f64) <= best + 1e-14);
        }
    }
}

#[test]
fn average_fidelity_checks() {
    let f = average_fidelity(&BKParams::new(1.0, 0.0, 1.0)).unwrap();
    assert!((f.value - 1.0).abs() < 1e-6, "{f:?}");
    for &(d, g) in &[(1.0, 1.0), (0.5, 3.0), (2.0, 0.3)] {
        let p = BKParams::new(1.0, d, g);
        let two_d = average_fidelity(&p).unwrap();
        let one_d = average_fidelity_factorized(&p).unwrap();
        assert!((two_d.value - one_d).abs() < 1e-8, "{two_d:?} vs {one_d}");
        assert!(two_d.value >= 0.5 && two_d.value <= 1.0);
        assert!(two_d.tail_bound < 1e-8);
    }
}

#[test]
fn average_fidelity_limits() {
    let hi = average_fidelity(&BKParams::new(1.0, 1.0, 1e3)).unwrap().value;
    assert!(hi >= 1.0 - 1e-3, "{hi}");
    let p = BKParams::new(1.0, 1.0, 1e-3);
    let lo = average_fidelity(&p).unwrap().value;
    let bad = bad_limit_fidelity(&p).unwrap();
    assert!((lo - bad).abs() / bad < 0.01, "{lo} vs {bad}");
}

#[test]
fn average_fidelity_quadratic_scaling() {
    let g = 10.0;
    let ratios = stats::grid(0.01, 0.1, 5, true);
    let x: Vec<f64> = ratios.iter().map(|r| r.ln()).collect();
    let y: Vec<f64> = ratios
        .iter()
        .map(|r| (1.0 - average_fidelity(&BKParams::new(1.0, r * g, g)).unwrap().value).ln())
        .collect();
    let slope = stats::slope(&x, &y);
    assert!((slope - 2.0).abs() <= 0.15, "{slope}");
}

#[test]
fn ideal_protocol_monte_carlo() {
    let p = BKParams::new(1.0, 1.5, 0.0);
    let sys = build_effective_system(&p).unwrap();
    let n = 4000;
    let mut heralded = 0;
    for k in 0..n {
        let run = simulate_protocol(&sys, Detectors::Ideal, 40.0, 17, k).unwrap();
        if let (Some(o), Some(psi)) = (run.outcome, run.final_state) {
            heralded += 1;
            assert!(run.leakage < 1e-12);
            let f = psi.fidelity(&ideal_final_state(&o, p.delta)).unwrap();
            assert!(f > 1.0 - 1e-8, "{o:?}: {f}");
        }
    }
    let (frac, se) = stats::proportion(heralded, n as usize);
    assert!((frac - 0.5).abs() < 3.0 * se, "{frac} +- {se}");
}

#[test]
fn full_model_decay_and_structure() {
    // Without coupling the excitation never leaves the atom.
    let p0 = BKParams::full(0.0, 1.0, 0.0, 1.0);
    let sys = build_full_system(&p0).unwrap();
    let psi = StateVector::from_levels(sys.space().clone(), &[2, 0, 0, 0]).unwrap();
    let out = evolve_conditional(&sys, &psi, 5.0).unwrap();
    assert!((out.norm_squared() - 1.0).abs() < 1e-12);
    assert!(matches!(build_full_system(&BKParams::new(1.0, 0.0, 1.0)), Err(ModelError::MissingFullModel)));

    // kappa/g = 20: excited population decays at about 4 g^2 / kappa.
    let (g, kappa) = (1.0, 20.0);
    let p = BKParams::full(g, kappa, 0.0, 1.0);
    let sys = build_full_system(&p).unwrap();
    let psi = StateVector::from_levels(sys.space().clone(), &[2, 0, 0, 0]).unwrap();
    let times = stats::grid(1.0, 6.0, 6, false);
    let states = photonbeat::dynamics::evolve_conditional_sampled(&sys, &psi, &times).unwrap();
    let y: Vec<f64> = states.iter().map(|s| s.amplitude(&[2, 0, 0, 0]).unwrap().norm_sqr().ln()).collect();
    let rate = -stats::slope(&times, &y);
    assert!((rate - p.kappa_eff).abs() / p.kappa_eff < 0.05, "{rate} vs {}", p.kappa_eff);
}

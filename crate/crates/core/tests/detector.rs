use photonbeat::bkprotocol::{build_effective_system, round_start_state, BKParams};
use photonbeat::detector::*;
use photonbeat::hom::{build_hom_system, ideal_first_click_density, initial_state, HOMParams};
use photonbeat::stats;

#[test]
fn small_time_populations() {
    let k = 1.0;
    let sys = build_effective_system(&BKParams::new(k, 0.3, 1.0)).unwrap();
    let bank = DetectorBankState::from_state(&round_start_state(sys.space()), 1.0).unwrap();
    let dt = 1e-3 / k;
    let b = no_click_evolve(&bank, &sys, dt).unwrap();
    let expected = 0.5 * k * dt;
    assert!((b.rho_plus().trace() - expected).abs() / expected < 1e-2);
    assert!((b.rho_minus().trace() - expected).abs() / expected < 1e-2);
    assert!(b.rho_tt().trace() < 1e-5);
}

#[test]
fn trace_loss_equals_observed_click_rate() {
    let p = HOMParams::new(1.0, 1.7, 0.8);
    let sys = build_hom_system(&p).unwrap();
    let bank = DetectorBankState::from_state(&initial_state(), p.gamma_r).unwrap();
    let h = 1e-5;
    for &t in &[0.2, 1.0, 3.0] {
        let s = no_click_evolve_sampled(&bank, &sys, &[t - h, t, t + h]).unwrap();
        let deriv = (s[2].total_trace() - s[0].total_trace()) / (2.0 * h);
        let rate = observed_click_pdf(&s[1], Port::Plus) + observed_click_pdf(&s[1], Port::Minus);
        assert!((deriv + rate).abs() < 1e-6 * rate.max(1e-3), "t={t}: {deriv} vs {rate}");
    }
}

#[test]
fn sectors_stay_positive() {
    let p = BKParams::new(1.0, 2.0, 0.5);
    let sys = build_effective_system(&p).unwrap();
    let bank = DetectorBankState::from_state(&round_start_state(sys.space()), p.gamma_r).unwrap();
    let times = stats::grid(0.05, 20.0, 30, true);
    let mut last = 1.0;
    for b in no_click_evolve_sampled(&bank, &sys, &times).unwrap() {
        assert!(b.min_eigenvalue() > -1e-9);
        assert!(b.total_trace() <= last + 1e-12);
        last = b.total_trace();
    }
}

#[test]
fn fast_detectors_follow_photon_arrivals() {
    let k = 1.0;
    let p = HOMParams::new(k, 2.0, 1e3 * k);
    let sys = build_hom_system(&p).unwrap();
    let bank = DetectorBankState::from_state(&initial_state(), p.gamma_r).unwrap();
    let times = stats::grid(10.0 / p.gamma_r, 4.0 / k, 25, true);
    for (b, &t) in no_click_evolve_sampled(&bank, &sys, &times).unwrap().iter().zip(&times) {
        let total = observed_click_pdf(b, Port::Plus) + observed_click_pdf(b, Port::Minus);
        let ideal = 2.0 * ideal_first_click_density(&p, t);
        assert!((total - ideal).abs() <= 0.01 * ideal, "t={t}: {total} vs {ideal}");
    }
}

#[test]
fn update_examples() {
    let sys = build_effective_system(&BKParams::new(1.0, 1.0, 1.0)).unwrap();
    let bank = DetectorBankState::from_state(&round_start_state(sys.space()), 1.0).unwrap();
    let b = no_click_evolve(&bank, &sys, 0.7).unwrap();
    let (after, w) = observed_click_update(&b, Port::Minus).unwrap();
    assert!((w - observed_click_pdf(&b, Port::Minus)).abs() < 1e-14);
    assert!((after.total_trace() - 1.0).abs() < 1e-12);
    // The minus detector is ready again; only the plus detector can be triggered.
    assert!(after.rho_minus().trace() == 0.0 && after.rho_tt().trace() == 0.0);
    assert!(after.rho_plus().trace() > 0.0);

    let idle = DetectorBankState::from_state(&round_start_state(sys.space()), 1.0).unwrap();
    assert!(observed_click_update(&idle, Port::Plus).is_err());
}

#[test]
fn sampled_clicks_match_sector_equations() {
    let p = HOMParams::new(1.0, 1.5, 1.0);
    let sys = build_hom_system(&p).unwrap();
    let bank = DetectorBankState::from_state(&initial_state(), p.gamma_r).unwrap();
    let n = 10_000;
    let (t_end, t_check) = (12.0, 5.0);
    let mut first = [Vec::new(), Vec::new()];
    let mut quiet = 0;
    for s in 0..n {
        let rec = sample_observed_clicks(&bank, &sys, t_end, 8, s).unwrap();
        if let Some(c) = rec.clicks.first() {
            let port = Port::from_label(&c.label).unwrap();
            first[usize::from(port == Port::Minus)].push(c.time);
            if c.time > t_check {
                quiet += 1;
            }
        } else {
            quiet += 1;
        }
        assert!(rec.clicks.len() <= rec.arrivals.len());
        assert!(rec.clicks.windows(2).all(|w| w[0].time <= w[1].time));
    }
    let grid = stats::grid(0.0, t_end, 600, false);
    let samples = evolve_with_accumulators(&bank, &sys, &grid).unwrap();
    for (k, port) in Port::ALL.into_iter().enumerate() {
        let cdf = |t: f64| {
            let i = grid.partition_point(|&g| g < t).min(grid.len() - 1);
            samples[i].cumulative(port)
        };
        let ks = stats::ks_distance(&first[k], n as usize, cdf);
        assert!(ks < 1.63 / (n as f64).sqrt() + 2e-3, "{port:?}: {ks}");
    }
    let at = no_click_evolve(&bank, &sys, t_check).unwrap().total_trace();
    let (frac, se) = stats::proportion(quiet, n as usize);
    assert!((frac - at).abs() < 3.0 * se + 1e-3, "{frac} vs {at}");
}

#[test]
fn coalesced_photons_never_split() {
    let p = HOMParams::new(1.0, 0.0, 50.0);
    let sys = build_hom_system(&p).unwrap();
    let bank = DetectorBankState::from_state(&initial_state(), p.gamma_r).unwrap();
    let mut pairs = 0;
    for s in 0..5000 {
        let rec = sample_observed_clicks(&bank, &sys, 40.0, 2, s).unwrap();
        if rec.clicks.len() == 2 {
            pairs += 1;
            assert_eq!(rec.clicks[0].label, rec.clicks[1].label);
        }
    }
    assert!(pairs > 4000, "{pairs}");
}

#[test]
fn sampling_is_reproducible() {
    let p = HOMParams::new(1.0, 1.0, 2.0);
    let sys = build_hom_system(&p).unwrap();
    let bank = DetectorBankState::from_state(&initial_state(), p.gamma_r).unwrap();
    let a = sample_observed_clicks(&bank, &sys, 10.0, 3, 7).unwrap();
    let b = sample_observed_clicks(&bank, &sys, 10.0, 3, 7).unwrap();
    assert_eq!(a, b);
}

#[test]
fn exponential_and_adaptive_solvers_agree() {
    let p = HOMParams::new(1.0, 2.5, 3.0);
    let sys = build_hom_system(&p).unwrap();
    let bank = DetectorBankState::from_state(&initial_state(), p.gamma_r).unwrap();
    let times = [0.0, 0.4, 1.3, 1.3, 6.0];
    let a = evolve_with_accumulators_using(&bank, &sys, &times, BankSolver::Ode).unwrap();
    let b = evolve_with_accumulators_using(&bank, &sys, &times, BankSolver::Exponential).unwrap();
    for (x, y) in a.iter().zip(&b) {
        for port in Port::ALL {
            assert!((x.cumulative(port) - y.cumulative(port)).abs() < 1e-9);
            assert!((observed_click_pdf(&x.bank, port) - observed_click_pdf(&y.bank, port)).abs() < 1e-9);
        }
        assert!((x.integral.total_trace() - y.integral.total_trace()).abs() < 1e-9);
    }
}

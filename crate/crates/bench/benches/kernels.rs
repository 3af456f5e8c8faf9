use std::f64::consts::PI;
use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use photonbeat::bkprotocol as bk;
use photonbeat::detector::{evolve_with_accumulators, no_click_evolve};
use photonbeat::dynamics::{evolve_conditional, sample_trajectory};
use photonbeat::hom::{self, build_hom_system, initial_state};
use photonbeat::{stats, BKParams, DetectorBankState, HOMParams, Port};

fn conditional_evolution(c: &mut Criterion) {
    let sys = bk::build_effective_system(&BKParams::new(1.0, 1.0, 1.0)).unwrap();
    let psi = bk::round_start_state(sys.space());
    c.bench_function("evolve_conditional bk t=5", |b| b.iter(|| evolve_conditional(&sys, black_box(&psi), 5.0).unwrap()));

    let full = bk::build_full_system(&BKParams::full(12.5, 625.0, 0.0, 1.0)).unwrap();
    let psi = bk::round_start_state(full.space());
    c.bench_function("evolve_conditional full model t=1", |b| b.iter(|| evolve_conditional(&full, black_box(&psi), 1.0).unwrap()));
}

fn detector_bank(c: &mut Criterion) {
    let p = HOMParams::new(1.0, PI, 5.0);
    let sys = build_hom_system(&p).unwrap();
    let bank = DetectorBankState::from_state(&initial_state(), p.gamma_r).unwrap();
    c.bench_function("no_click_evolve hom t=1", |b| b.iter(|| no_click_evolve(black_box(&bank), &sys, 1.0).unwrap()));
    let grid = stats::grid(0.0, 10.0, 201, false);
    c.bench_function("evolve_with_accumulators hom 201 points", |b| b.iter(|| evolve_with_accumulators(&bank, &sys, black_box(&grid)).unwrap()));
    let taus = stats::grid(0.0, 2.0, 41, false);
    c.bench_function("interval_distribution hom 41 points", |b| {
        b.iter(|| hom::interval_distribution(black_box(&p), &taus, Port::Plus, None).unwrap())
    });
}

fn average_fidelity(c: &mut Criterion) {
    let p = BKParams::new(1.0, 1.0, 3.0);
    c.bench_function("average_fidelity 2d", |b| b.iter(|| bk::average_fidelity(black_box(&p)).unwrap()));
    c.bench_function("average_fidelity factorized", |b| b.iter(|| bk::average_fidelity_factorized(black_box(&p)).unwrap()));
}

fn trajectories(c: &mut Criterion) {
    let sys = build_hom_system(&HOMParams::new(1.0, PI, 5.0)).unwrap();
    let psi = initial_state();
    let mut seed = 0u64;
    c.bench_function("sample_trajectory hom", |b| {
        b.iter(|| {
            seed += 1;
            sample_trajectory(&sys, &psi, 40.0, seed).unwrap()
        })
    });
}

criterion_group!(benches, conditional_evolution, detector_bank, average_fidelity, trajectories);
criterion_main!(benches);

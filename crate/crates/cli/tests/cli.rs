use std::fs;
use std::process::Command;

use photonbeat_cli::config::{ExperimentConfig, ExperimentKind, OracleSystem, Sweep};
use photonbeat_cli::validate::{validate, validate_text, Level};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_photonbeat"))
}

fn small(kind: ExperimentKind) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::new(kind);
    cfg.seed = Some(99);
    let p = &mut cfg.params;
    match kind {
        ExperimentKind::BkIdeal => p.trajectories = Some(50),
        ExperimentKind::BkAverage => {
            p.kappa_eff_over_delta = Some(Sweep::Values(vec![1.0]));
            p.gamma_r_over_delta = Some(Sweep::Values(vec![1.0, 10.0]));
        }
        ExperimentKind::BkConditional => {
            p.t1 = Some(Sweep::range(0.0, 2.0, 3, false));
            p.t2 = Some(Sweep::range(0.0, 2.0, 3, false));
        }
        ExperimentKind::BkFullValidate => {
            p.kappa_over_g = Some(Sweep::Values(vec![20.0]));
            p.trajectories = Some(20);
        }
        ExperimentKind::HomCoalescence => p.trajectories = Some(50),
        ExperimentKind::HomInterval => p.tau = Some(Sweep::range(0.0, 1.0, 5, false)),
        ExperimentKind::HomVisibility => p.gamma_r_over_delta = Some(Sweep::Values(vec![1.0, 10.0])),
        ExperimentKind::McOracle => {
            p.trajectories = Some(200);
            p.times = Some(Sweep::range(0.0, 5.0, 11, false));
        }
        ExperimentKind::BkBad | ExperimentKind::HomBeat => {}
    }
    cfg
}

#[test]
fn config_round_trips_through_json() {
    let mut cfg = small(ExperimentKind::McOracle);
    cfg.params.system = Some(OracleSystem::Hom);
    cfg.params.delta_over_kappa = Some(Sweep::range(0.1, 10.0, 4, true));
    let text = serde_json::to_string(&cfg).unwrap();
    let back = ExperimentConfig::from_json(&text).unwrap();
    assert_eq!(serde_json::to_value(&back).unwrap(), serde_json::to_value(&cfg).unwrap());
}

#[test]
fn validation_examples() {
    let (_, r) = validate_text(r#"{"experiment": "bk-bad"}"#);
    assert!(r.is_empty());

    let (_, r) = validate_text(r#"{"experiment": "hom-beat", "params": {"tau": {"start": 0, "stop": 5, "n": 0}}}"#);
    assert!(r.has_errors());

    let (_, r) = validate_text(r#"{"experiment": "bk-average", "params": {"gamma_r_over_delta": [1, -2]}}"#);
    assert!(r.errors().any(|i| i.field == "gamma_r_over_delta"));

    let (_, r) = validate_text(r#"{"experiment": "bk-bad", "params": {"tau": [1]}}"#);
    assert!(!r.has_errors());
    assert!(r.issues.iter().any(|i| i.level == Level::Warning && i.field == "tau"));

    let (_, r) = validate_text(r#"{"experiment": "bk-full-validate", "params": {"kappa_over_g": [2]}}"#);
    assert!(!r.has_errors());
    assert!(r.issues.iter().any(|i| i.field == "kappa_over_g"));

    let (_, r) = validate_text(r#"{"experiment": "bk-ideal", "params": {"eta": 1.5}}"#);
    assert!(r.errors().any(|i| i.field == "eta"));
    assert!(r.errors().any(|i| i.field == "seed"));

    let (cfg, r) = validate_text("{not json");
    assert!(cfg.is_none() && r.has_errors());
}

#[test]
fn every_experiment_runs() {
    let dir = tempfile::tempdir().unwrap();
    for kind in ExperimentKind::ALL {
        let mut cfg = small(kind);
        cfg.out_dir = Some(dir.path().to_path_buf());
        assert!(validate(&cfg).is_empty(), "{kind}: {}", validate(&cfg));
        let res = photonbeat_cli::run(&cfg).unwrap_or_else(|e| panic!("{kind}: {e:#}"));
        assert!(!res.outcome.table.rows.is_empty(), "{kind}");
        let side: serde_json::Value = serde_json::from_str(&fs::read_to_string(&res.written.sidecar).unwrap()).unwrap();
        assert_eq!(side["experiment"], kind.to_string());
        assert!(side["summary"]["tail_error"].is_number(), "{kind}");
        let header = fs::read_to_string(&res.written.csv).unwrap().lines().next().unwrap().to_string();
        assert_eq!(header, res.outcome.table.columns.join(","));
    }
}

#[test]
fn same_seed_gives_identical_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let mut outputs = Vec::new();
    for (name, threads) in [("a", 1), ("b", 2)] {
        let mut cfg = small(ExperimentKind::McOracle);
        cfg.out_dir = Some(dir.path().to_path_buf());
        cfg.name = Some(name.into());
        cfg.threads = Some(threads);
        let res = photonbeat_cli::run(&cfg).unwrap();
        outputs.push(fs::read(&res.written.csv).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);

    let mut cfg = small(ExperimentKind::McOracle);
    cfg.out_dir = Some(dir.path().to_path_buf());
    cfg.name = Some("c".into());
    cfg.seed = Some(100);
    let other = fs::read(photonbeat_cli::run(&cfg).unwrap().written.csv).unwrap();
    assert_ne!(other, outputs[0]);
}

#[test]
fn csv_inputs_match_sidecar_grids() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = ExperimentConfig::new(ExperimentKind::BkBad);
    cfg.out_dir = Some(dir.path().to_path_buf());
    cfg.params.kappa_eff_over_delta = Some(Sweep::range(0.1, 10.0, 13, true));
    let res = photonbeat_cli::run(&cfg).unwrap();
    let side: serde_json::Value = serde_json::from_str(&fs::read_to_string(&res.written.sidecar).unwrap()).unwrap();
    let grid: Vec<f64> = side["grids"]["kappa_eff_over_delta"].as_array().unwrap().iter().map(|v| v.as_f64().unwrap()).collect();
    let mut reader = csv::Reader::from_path(&res.written.csv).unwrap();
    let col: Vec<f64> = reader.records().map(|r| r.unwrap()[0].parse().unwrap()).collect();
    assert_eq!(col, grid);
    assert_eq!(grid, Sweep::range(0.1, 10.0, 13, true).values());
}

#[test]
fn unwritable_output_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("file");
    fs::write(&blocker, "x").unwrap();
    let mut cfg = ExperimentConfig::new(ExperimentKind::BkBad);
    cfg.out_dir = Some(blocker.join("sub"));
    assert!(photonbeat_cli::run(&cfg).is_err());
}

#[test]
fn binary_run_and_validate() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("cfg.json");
    fs::write(&config, r#"{"experiment": "hom-coalescence", "params": {"delta_over_kappa": [0, 1, 5]}}"#).unwrap();
    let out = dir.path().join("out");
    let status = bin().args(["run", "--config"]).arg(&config).arg("--out").arg(&out).status().unwrap();
    assert!(status.success());
    let text = fs::read_to_string(out.join("hom-coalescence.csv")).unwrap();
    assert_eq!(text.lines().count(), 4);

    let o = bin().args(["validate", "--config"]).arg(&config).output().unwrap();
    assert!(o.status.success());
    assert_eq!(String::from_utf8_lossy(&o.stdout).trim(), "ok");

    fs::write(&config, r#"{"experiment": "mc-oracle"}"#).unwrap();
    let o = bin().args(["validate", "--config"]).arg(&config).output().unwrap();
    assert!(o.status.success());
    assert!(String::from_utf8_lossy(&o.stdout).contains("seed"));
    let o = bin().args(["run", "--config"]).arg(&config).arg("--out").arg(&out).output().unwrap();
    assert!(!o.status.success());
}

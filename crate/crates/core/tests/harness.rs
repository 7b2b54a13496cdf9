use gevrey_core::harness::snapshot::read_snapshot;
use gevrey_core::harness::{run_scenario, ExperimentConfig, InitialSpec, Scenario};

fn short_run(extra: &[&str]) -> ExperimentConfig {
    let mut o: Vec<String> = ["grid.n=16", "time.t_end=0.05", "time.dt=0.005", "time.sample_every=0.01"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    o.extend(extra.iter().map(|s| s.to_string()));
    ExperimentConfig::parse("scenario = \"run\"\n", &o).unwrap()
}

#[test]
fn run_writes_artifacts_and_config_roundtrips() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = short_run(&["model.tau_law=A_2d_big"]);
    let s = run_scenario(&cfg, Some(dir.path())).unwrap();
    assert!(s.passed(), "{s:?}");
    for f in ["config.toml", "summary.json", "diagnostics.csv", "final.gvrf"] {
        assert!(dir.path().join(f).exists(), "{f}");
    }
    let back = ExperimentConfig::load(&dir.path().join("config.toml"), &[]).unwrap();
    assert_eq!(back, cfg);
    let csv = std::fs::read_to_string(dir.path().join("diagnostics.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 6);
    let json: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("summary.json")).unwrap()).unwrap();
    assert_eq!(json["passed"], serde_json::Value::Bool(true));
}

#[test]
fn identical_configs_give_identical_bytes() {
    let cfg = short_run(&["seed=11"]);
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    run_scenario(&cfg, Some(a.path())).unwrap();
    run_scenario(&cfg, Some(b.path())).unwrap();
    for f in ["diagnostics.csv", "final.gvrf", "config.toml"] {
        assert_eq!(std::fs::read(a.path().join(f)).unwrap(), std::fs::read(b.path().join(f)).unwrap(), "{f}");
    }
    let other = tempfile::tempdir().unwrap();
    run_scenario(&short_run(&["seed=12"]), Some(other.path())).unwrap();
    assert_ne!(std::fs::read(a.path().join("final.gvrf")).unwrap(), std::fs::read(other.path().join("final.gvrf")).unwrap());
}

#[test]
fn restart_from_snapshot_continues_the_run() {
    let full_dir = tempfile::tempdir().unwrap();
    let half_dir = tempfile::tempdir().unwrap();
    let rest_dir = tempfile::tempdir().unwrap();
    let full = short_run(&["time.t_end=0.1", "tau0=0.2"]);
    run_scenario(&full, Some(full_dir.path())).unwrap();
    run_scenario(&short_run(&["tau0=0.2"]), Some(half_dir.path())).unwrap();
    let mut rest = short_run(&["tau0=0.2"]);
    rest.initial = InitialSpec::Snapshot {
        path: half_dir.path().join("final.gvrf"),
    };
    run_scenario(&rest, Some(rest_dir.path())).unwrap();
    let a = read_snapshot(&full_dir.path().join("final.gvrf")).unwrap();
    let b = read_snapshot(&rest_dir.path().join("final.gvrf")).unwrap();
    let d = a.state.omega.max_abs_diff(&b.state.omega) / a.state.omega.max_abs();
    assert!(d < 1e-12, "{d}");
}

#[test]
fn failed_run_keeps_partial_output() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = short_run(&["time.dt=0.5", "time.t_end=1.0", "initial.kind=\"analytic_2d\"", "initial.rate=0.3", "initial.l2=100.0"]);
    let s = run_scenario(&cfg, Some(dir.path())).unwrap();
    assert!(!s.passed());
    assert!(s.error.as_deref().unwrap_or("").contains("CFL"), "{:?}", s.error);
    let csv = std::fs::read_to_string(dir.path().join("diagnostics.csv")).unwrap();
    assert_eq!(csv.lines().count(), 2);
}

#[test]
fn zero_data_sweep_has_zero_errors() {
    let cfg = ExperimentConfig::parse(
        "scenario = \"sweep_alpha\"\n[initial]\nkind = \"zero\"\n",
        &["grid.n=16".into(), "time.t_end=0.02".into(), "time.dt=0.01".into(), "sweep.delta=0.1".into()],
    )
    .unwrap();
    let dir = tempfile::tempdir().unwrap();
    let s = run_scenario(&cfg, Some(dir.path())).unwrap();
    assert!(s.error.is_none(), "{:?}", s.error);
    let csv = std::fs::read_to_string(dir.path().join("convergence.csv")).unwrap();
    for line in csv.lines().skip(1) {
        assert!(line.contains(",0.0,0.0,0.0,"), "{line}");
    }
}

#[test]
fn wrong_dimension_is_an_error_summary() {
    let mut cfg = ExperimentConfig::new(Scenario::SmallData3d);
    cfg.grid.dim = 2;
    let s = run_scenario(&cfg, None).unwrap();
    assert!(!s.passed());
    assert!(s.error.unwrap().contains("3D"));
}

#[test]
fn fit_radius_scenario_passes() {
    let s = run_scenario(&ExperimentConfig::new(Scenario::FitRadius), None).unwrap();
    assert!(s.passed());
    assert_eq!(s.checks.len(), 6);
}

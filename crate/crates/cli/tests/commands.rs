use davies_cli::commands::{evolve, export, selftest, sweep_sigma, verify_stationarity, RunOptions};
use davies_cli::config::{ExperimentConfig, InitialState};
use davies_cli::export::decode_matrix;
use davies_cli::CliError;
use davies_lab::generators::{assemble_localised, AssemblyOptions, Fault};
use davies_lab::models::benchmark;
use davies_lab::weights::{balanced_gamma, Phi};

fn parse(text: &str) -> ExperimentConfig {
    ExperimentConfig::parse(text).unwrap()
}

fn opts() -> RunOptions {
    RunOptions::default()
}

#[test]
fn qubit_default_is_stationary() {
    let r = verify_stationarity(&ExperimentConfig::default(), &opts()).unwrap();
    assert!(r.pass);
    let s = r.check("stationarity").unwrap();
    assert!(s.value <= 1e-9 && s.tolerance == 1e-9);
}

#[test]
fn broken_balance_fails_and_negative_control_passes() {
    let cfg = parse("schema_version = 1\n[weight]\nbalance_broken = true\n");
    let r = verify_stationarity(&cfg, &opts()).unwrap();
    assert!(!r.pass);
    assert_eq!(r.failures, vec!["stationarity".to_string()]);

    let neg = RunOptions {
        negative_control: true,
        ..opts()
    };
    let r = verify_stationarity(&ExperimentConfig::default(), &neg).unwrap();
    assert!(r.pass);
    assert!(r.check("negative_control").unwrap().value >= 1e-4);
    assert!(r.check("stationarity").is_none());
}

#[test]
fn davies_config_is_stationary() {
    for kind in ["glauber", "metropolis"] {
        let cfg = parse(&format!(
            "schema_version = 1\n[weight]\nkind = \"{kind}\"\n[generator]\nkind = \"davies\"\n"
        ));
        let r = verify_stationarity(&cfg, &opts()).unwrap();
        assert!(r.pass, "{kind}");
        let s = r.check("stationarity").unwrap();
        assert!(s.value <= 1e-12 && s.tolerance == 1e-12);
    }
}

#[test]
fn davies_needs_a_kms_weight() {
    let err = ExperimentConfig::parse("schema_version = 1\n[generator]\nkind = \"davies\"\n");
    assert!(matches!(err, Err(CliError::Config(_))));
}

#[test]
fn default_sweep_is_monotone() {
    let r = sweep_sigma(&ExperimentConfig::default(), &opts()).unwrap();
    assert!(r.pass, "{}", r.summary());
    let t = r.data.as_ref().unwrap();
    assert_eq!(t.column("sigma").unwrap(), vec![1.0, 0.5, 0.25, 0.125]);
    let d = t.column("davies_distance_p1").unwrap();
    assert!(d.windows(2).all(|w| w[1] < w[0]));
    let b = t.column("coherent_norm_B").unwrap();
    assert!(b.windows(2).all(|w| w[1] <= w[0]));
    let b1 = t.column("b1_l1").unwrap();
    let limit = std::f64::consts::PI.sqrt() / 32.0;
    assert!(b1.windows(2).all(|w| w[1] > w[0]));
    assert!(b1.iter().all(|&x| x < limit));
}

#[test]
fn single_sigma_has_no_monotonicity_flags() {
    let cfg = parse("schema_version = 1\n[run]\nsigmas = [0.5]\n");
    let r = sweep_sigma(&cfg, &opts()).unwrap();
    assert_eq!(r.data.as_ref().unwrap().rows.len(), 1);
    let names: Vec<&str> = r.checks.iter().map(|c| c.name.as_str()).collect();
    assert_eq!(names, vec!["stationarity", "b1_l1_bounded"]);
}

#[test]
fn sweep_rejects_increasing_sigmas() {
    let err = ExperimentConfig::parse("schema_version = 1\n[run]\nsigmas = [0.5, 1.0]\n");
    assert!(matches!(err, Err(CliError::Config(_))));
}

#[test]
fn qubit_relaxes_from_excited_state() {
    let r = evolve(&ExperimentConfig::default(), &opts()).unwrap();
    assert!(r.pass, "{}", r.summary());
    let t = r.data.as_ref().unwrap();
    let g = t.column("gibbs_distance").unwrap();
    assert!(g.windows(2).all(|w| w[1] <= w[0] + 1e-12));
    assert!(*g.last().unwrap() <= 1e-6);
    let c = r.check("choi").unwrap();
    assert!(c.value >= -1e-8);
}

#[test]
fn zero_time_reproduces_initial_state() {
    let cfg = parse("schema_version = 1\n[run]\ntimes = [0.0]\n");
    let r = evolve(&cfg, &opts()).unwrap();
    let t = r.data.as_ref().unwrap();
    assert_eq!(t.rows.len(), 1);
    assert!((t.column("trace").unwrap()[0] - 1.0).abs() <= 1e-15);
    assert!(t.column("min_eig").unwrap()[0].abs() <= 1e-12);
    // Excited qubit: ½‖|1⟩⟨1| - ρ_G‖₁ equals the ground population.
    let pg = 1.0 / (1.0 + (-1.0f64).exp());
    assert!((t.column("gibbs_distance").unwrap()[0] - pg).abs() <= 1e-12);
}

#[test]
fn evolve_choi_on_request() {
    let o = RunOptions {
        checks: vec!["choi".into()],
        ..opts()
    };
    let r = evolve(&ExperimentConfig::default(), &o).unwrap();
    assert_eq!(r.checks.len(), 1);
    assert!(r.checks[0].value >= -1e-8);

    let cfg = parse("schema_version = 1\n[model]\nbenchmark = \"schr16\"\n");
    assert!(matches!(evolve(&cfg, &o), Err(CliError::Config(_))));
}

#[test]
fn gibbs_start_stays_put() {
    let mut cfg = ExperimentConfig::default();
    cfg.model.benchmark = Some("osc4".into());
    cfg.run.initial_state = InitialState::Gibbs;
    cfg.run.pairs = 3;
    let r = evolve(&cfg, &opts()).unwrap();
    assert!(r.pass);
    let g = r.data.unwrap().column("gibbs_distance").unwrap();
    assert!(g.iter().all(|&x| x <= 1e-8));
}

#[test]
fn selftest_passes_and_fault_is_caught() {
    let r = selftest(&ExperimentConfig::default(), &opts()).unwrap();
    assert!(r.pass, "{}", r.summary());

    let faulty = RunOptions {
        fault: Some(Fault::FlipOverlapSign),
        ..opts()
    };
    let r = selftest(&ExperimentConfig::default(), &faulty).unwrap();
    assert!(!r.pass);
    assert!(r.failures.contains(&"dual_path".to_string()));
}

#[test]
fn tightened_tolerances_list_expected_failures() {
    let tight = RunOptions {
        tolerance_scale: Some(1e-3),
        ..opts()
    };
    let r = selftest(&ExperimentConfig::default(), &tight).unwrap();
    assert!(!r.pass);
    assert!(r.failures.contains(&"davies_stationarity".to_string()));
    assert!(r.failures.iter().all(|f| r.check(f).is_some()));
}

#[test]
fn check_selection_filters() {
    let o = RunOptions {
        checks: vec!["functional_equation".into()],
        ..opts()
    };
    let r = selftest(&ExperimentConfig::default(), &o).unwrap();
    assert_eq!(r.checks.len(), 1);
    let bad = RunOptions {
        checks: vec!["speed".into()],
        ..opts()
    };
    assert!(matches!(selftest(&ExperimentConfig::default(), &bad), Err(CliError::Config(_))));
}

#[test]
fn csv_is_deterministic() {
    let o = RunOptions {
        seed: Some(17),
        ..opts()
    };
    let a = sweep_sigma(&ExperimentConfig::default(), &o).unwrap().to_csv();
    let b = sweep_sigma(&ExperimentConfig::default(), &o).unwrap().to_csv();
    assert_eq!(a, b);
    assert!(a.lines().next().unwrap().starts_with("# davies "));
    assert!(a.contains("# seed: 17\n"));
    let c = sweep_sigma(&ExperimentConfig::default(), &opts()).unwrap().to_csv();
    assert_ne!(a, c);
}

#[test]
fn csv_numbers_round_trip() {
    let r = evolve(&ExperimentConfig::default(), &opts()).unwrap();
    let csv = r.to_csv();
    let t = r.data.as_ref().unwrap();
    let body: Vec<&str> = csv.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(body[0], "t,trace,min_eig,gibbs_distance,hermiticity_defect");
    let parsed: Vec<f64> = body[1].split(',').map(|x| x.parse().unwrap()).collect();
    for (k, col) in t.columns.iter().enumerate() {
        assert_eq!(parsed[k], t.column(col).unwrap()[0]);
    }
}

#[test]
fn json_report_has_stable_fields() {
    let r = verify_stationarity(&ExperimentConfig::default(), &opts()).unwrap();
    let v: serde_json::Value = serde_json::from_str(&r.to_json()).unwrap();
    for key in ["command", "config", "checks", "pass", "environment", "timing"] {
        assert!(v.get(key).is_some(), "{key}");
    }
    let c = &v["checks"][0];
    for key in ["name", "value", "tolerance", "pass"] {
        assert!(c.get(key).is_some(), "{key}");
    }
    assert_eq!(v["environment"]["seed"], 0);
}

#[test]
fn export_payload_decodes() {
    let e = export(&ExperimentConfig::default(), &opts()).unwrap();
    let m = benchmark("qubit").unwrap();
    let g = balanced_gamma(Phi::Gaussian, 1.0).unwrap();
    let b = assemble_localised(&m, &g, 1.0, &AssemblyOptions::default()).unwrap();
    assert_eq!(decode_matrix(&e.matrices.superoperator).unwrap(), b.superoperator);
    assert_eq!(decode_matrix(&e.matrices.p).unwrap(), m.p);
    assert_eq!(e.matrices.jumps.len(), m.jumps.len());
    let json = serde_json::to_value(&e).unwrap();
    assert_eq!(json["kind"], "localised");
    assert_eq!(json["dim"], 2);
}

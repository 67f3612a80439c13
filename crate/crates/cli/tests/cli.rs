use std::path::Path;
use std::process::Command;

use mpscoll::models::aklt_exact_q;
use mpscoll::{ModelName, ModelSpec};
use mpscoll_cli::experiment::max_cell_difference;
use mpscoll_cli::presets::{evaluate, presets};
use mpscoll_cli::{run, CliError, ExperimentConfig, Figure, Method, NamedObservable, ObservableSpec};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_mpscoll"))
}

fn write(dir: &Path, name: &str, text: &str) -> std::path::PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

const AKLT: &str = r#"{
  "model": {"name": "aklt"},
  "g_tau": 0.5,
  "k_max": 8,
  "observables": ["depolarization", "excited_population"]
}"#;

#[test]
fn presets_round_trip_through_json() {
    for fig in [Figure::Fig5a, Figure::Fig5b, Figure::Fig6a, Figure::Fig6b] {
        for preset in presets(fig) {
            for (_, config) in &preset.curves {
                let text = config.to_json();
                let parsed = ExperimentConfig::from_json(&text).unwrap();
                assert_eq!(&parsed, config);
                assert_eq!(parsed.to_json(), text);
            }
        }
    }
}

#[test]
fn csv_layout_and_determinism() {
    let config = ExperimentConfig::from_json(AKLT).unwrap();
    let a = run(&config).unwrap().to_csv();
    let b = run(&config).unwrap().to_csv();
    assert_eq!(a, b);
    let mut lines = a.lines();
    assert_eq!(lines.next(), Some("k,g_t,depolarization,excited_population"));
    assert_eq!(lines.next(), Some("0,0.0000000000000000e0,1.0000000000000000e0,0.0000000000000000e0"));
    assert_eq!(a.lines().count(), 10);
}

#[test]
fn depolarization_column_is_the_closed_form() {
    let config = ExperimentConfig::from_json(AKLT).unwrap();
    let q = run(&config).unwrap().column("depolarization").unwrap();
    for (k, v) in q.iter().enumerate() {
        assert!((v - aklt_exact_q(k, 0.5)).abs() < 1e-10);
    }
}

#[test]
fn oracle_method_matches_embedding() {
    let mut spec = ModelSpec::new(ModelName::TwoPhoton);
    spec.parameters.tau_over_t1 = Some(0.3 / 2.3);
    spec.parameters.tau_over_t2 = Some(0.3 / 59.9);
    let mut config = ExperimentConfig::new(spec, 0.3, 8);
    config.observables = vec![
        ObservableSpec::Named(NamedObservable::ExcitedPopulation),
        ObservableSpec::Named(NamedObservable::Coherence),
    ];
    config.initial_state = mpscoll_cli::InitialState::Named(mpscoll_cli::config::NamedState::Plus);
    let embedding = run(&config).unwrap();
    config.method = Method::Oracle;
    config.n_sites = Some(8);
    let oracle = run(&config).unwrap();
    assert!(max_cell_difference(&embedding, &oracle).unwrap() < 1e-10);
    config.method = Method::Nz;
    config.n_sites = None;
    assert!(max_cell_difference(&embedding, &run(&config).unwrap()).unwrap() < 1e-8);
}

#[test]
fn fig6a_matches_closed_forms() {
    let table = evaluate(&presets(Figure::Fig6a)[0]).unwrap();
    let pairs = [("exact", "exact_closed_form"), ("markov", "markov_closed_form")];
    for (a, b) in pairs {
        let (x, y) = (table.column(a).unwrap(), table.column(b).unwrap());
        assert!(x.iter().zip(&y).all(|(u, v)| (u - v).abs() < 1e-10), "{a} vs {b}");
    }
}

#[test]
fn fig5b_curves_coincide_for_two_collisions() {
    for preset in presets(Figure::Fig5b) {
        let t = evaluate(&preset).unwrap();
        let (c, d) = (t.column("correlated").unwrap(), t.column("decorrelated").unwrap());
        assert!((c[1] - d[1]).abs() < 1e-12 && (c[2] - d[2]).abs() < 1e-12);
    }
}

#[test]
fn field_level_validation_messages() {
    let cases = [
        (r#"{"model": {"name": "aklt"}, "g_tau": 0.5, "k_max": 0}"#, "k_max"),
        (r#"{"model": {"name": "aklt"}, "g_tau": -1, "k_max": 3}"#, "g_tau"),
        (r#"{"model": {"name": "two_photon"}, "g_tau": 0.3, "k_max": 3}"#, "tau_over_T1"),
        (r#"{"model": {"name": "ghz", "parameters": {"n_sites": 4}}, "g_tau": 0.3, "k_max": 6}"#, "k_max"),
        (r#"{"model": {"name": "aklt"}, "g_tau": 0.5, "k_max": 3, "colour": 1}"#, "colour"),
        (
            r#"{"model": {"name": "aklt"}, "g_tau": 0.5, "k_max": 3, "initial_state": {"matrix": [[[1,0],[0,0]],[[0,0],[1,0]]]}}"#,
            "initial_state",
        ),
        (
            r#"{"model": {"name": "cluster"}, "g_tau": 0.5, "k_max": 3, "interaction": {"unitary": [[[1,0],[0,0],[0,0],[0,0]],[[0,0],[1,0],[0,0],[0,0]],[[0,0],[0,0],[1,0],[0,0]],[[0,0],[0,0],[0,0],[2,0]]]}}"#,
            "interaction.unitary",
        ),
        (r#"{"model": {"name": "aklt"}, "g_tau": 0.5, "k_max": 3, "converge_cutoff": true}"#, "converge_cutoff"),
        (
            r#"{"model": {"name": "aklt"}, "g_tau": 0.5, "k_max": 3, "initial_state": "mixed", "observables": ["depolarization"]}"#,
            "depolarization",
        ),
    ];
    for (text, field) in cases {
        match ExperimentConfig::from_json(text) {
            Err(CliError::Config(msg)) => assert!(msg.contains(field), "{msg:?} lacks {field:?}"),
            other => panic!("expected a config error naming {field}, got {other:?}"),
        }
    }
}

#[test]
fn explicit_matrices_reproduce_named_interactions() {
    let h = mpscoll::CaseInteraction::Exchange.hamiltonian(3).unwrap();
    let rows = mpscoll::json::to_rows(&h);
    let text = format!(
        r#"{{"model": {{"name": "two_photon", "parameters": {{"tau_over_T1": 0.1, "tau_over_T2": 0.01}}}}, "g_tau": 0.3, "k_max": 6, "interaction": {{"hamiltonian": {}}}}}"#,
        serde_json::to_string(&rows).unwrap()
    );
    let explicit = run(&ExperimentConfig::from_json(&text).unwrap()).unwrap();
    let mut config = ExperimentConfig::from_json(&text).unwrap();
    config.interaction = None;
    assert!(max_cell_difference(&explicit, &run(&config).unwrap()).unwrap() < 1e-14);
}

#[test]
fn binary_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let good = write(dir.path(), "good.json", AKLT);
    let out = dir.path().join("nested/out.csv");
    let status = bin().args(["run", "--config"]).arg(&good).arg("--out").arg(&out).status().unwrap();
    assert_eq!(status.code(), Some(0));
    assert!(std::fs::read_to_string(&out).unwrap().starts_with("k,g_t,depolarization"));

    let status = bin().args(["validate", "--config"]).arg(&good).output().unwrap();
    assert_eq!(status.status.code(), Some(0));
    assert_eq!(String::from_utf8_lossy(&status.stdout).trim(), "ok");

    let bad = write(dir.path(), "bad.json", r#"{"model": {"name": "aklt"}, "g_tau": 0.5}"#);
    assert_eq!(bin().args(["validate", "--config"]).arg(&bad).status().unwrap().code(), Some(2));
    assert_eq!(bin().args(["run", "--config"]).arg(dir.path().join("missing.json")).status().unwrap().code(), Some(2));

    // 2·2·(5·1)^12·2 amplitudes is far beyond the oracle guard
    let guard = write(
        dir.path(),
        "guard.json",
        r#"{"model": {"name": "cluster"}, "g_tau": 0.5, "k_max": 12, "method": "oracle"}"#,
    );
    assert_eq!(bin().args(["run", "--config"]).arg(&guard).status().unwrap().code(), Some(3));

    let ghz = write(
        dir.path(),
        "ghz.json",
        r#"{"model": {"name": "ghz", "parameters": {"n_sites": 8}}, "g_tau": 0.1, "k_max": 4, "method": "gksl"}"#,
    );
    assert_eq!(bin().args(["run", "--config"]).arg(&ghz).status().unwrap().code(), Some(3));

    assert_eq!(bin().args(["reproduce", "fig9"]).status().unwrap().code(), Some(2));
}

#[test]
fn kernel_subcommand() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "k.json", AKLT);
    let out = bin().args(["kernel", "--config"]).arg(&cfg).args(["--k", "3", "--m-max", "3"]).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "m,exact_norm,second_order_norm");
    assert_eq!(lines.len(), 4);
    let too_far = bin().args(["kernel", "--config"]).arg(&cfg).args(["--k", "2", "--m-max", "3"]).status().unwrap();
    assert_eq!(too_far.code(), Some(2));
}

#[test]
fn reproduce_writes_csv_and_configs() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin().args(["reproduce", "fig6b", "--out"]).arg(dir.path()).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    let exact = std::fs::read_to_string(dir.path().join("fig6b_exact.csv")).unwrap();
    let line = std::fs::read_to_string(dir.path().join("fig6b_gksl.csv")).unwrap();
    assert_eq!(exact.lines().count(), 202);
    assert_eq!(line.lines().count(), 2002);
    assert!(line.lines().nth(2).unwrap().starts_with("0.1,"));
    assert!(dir.path().join("fig6b_gksl.json").exists());
}

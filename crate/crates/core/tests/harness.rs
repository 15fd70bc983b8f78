use std::fs;
use std::path::Path;

use lensirs::baselines::Scheme;
use lensirs::harness::experiment::{RUN_COLUMNS, SUMMARY_COLUMNS};
use lensirs::harness::{
    load_scenario, load_scenario_over, run_experiment, scenario_from_str, ExperimentConfig, ExperimentKind,
};
use lensirs::system::{db_to_linear, dbm_to_watts, Scenario};

fn quick_scenario() -> Scenario {
    let mut s = Scenario::desk().with_users(2);
    s.n_elements = 8;
    s
}

fn read_rows(path: &Path) -> (Vec<String>, Vec<csv::StringRecord>) {
    let mut rdr = csv::Reader::from_path(path).unwrap();
    let header = rdr.headers().unwrap().iter().map(String::from).collect();
    (header, rdr.records().map(Result::unwrap).collect())
}

#[test]
fn scenario_file_overrides_profile() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("s.json");
    fs::write(
        &path,
        r#"{"k_users": 3, "n_rf": 6, "p_t_dbm": 20, "rho_db": [0, 3, -3], "irs_response": "unit"}"#,
    )
    .unwrap();
    let s = load_scenario_over(&path, Scenario::desk()).unwrap();
    assert_eq!((s.k_users, s.n_rf, s.m_antennas), (3, 6, 31));
    assert!((s.p_t - dbm_to_watts(20.0)).abs() < 1e-15);
    assert_eq!(s.rho, vec![1.0, db_to_linear(3.0), db_to_linear(-3.0)]);
    assert_eq!(s.irs_response, lensirs::channel::IrsResponse::Unit);
    assert_eq!(load_scenario(&path).unwrap().m_antennas, 151);
}

#[test]
fn scenario_errors_name_the_field() {
    let err = scenario_from_str(r#"{"n_rf": 40}"#, Scenario::desk()).unwrap_err();
    assert_eq!(err.class(), "config");
    assert!(err.to_string().contains("n_rf"), "{err}");
    let err = scenario_from_str(r#"{"bogus": 1}"#, Scenario::desk()).unwrap_err();
    assert!(err.to_string().contains("bogus"), "{err}");
    assert!(scenario_from_str(r#"{"rho": 1, "rho_db": 0}"#, Scenario::desk()).is_err());
    assert!(scenario_from_str(r#"{"rho_db": [0, 0]}"#, Scenario::desk()).is_err());
    assert!(scenario_from_str("[1, 2]", Scenario::desk()).is_err());
    let missing = load_scenario(Path::new("/nonexistent/scenario.json")).unwrap_err();
    assert_eq!(missing.class(), "io");
}

#[test]
fn experiment_config_validation() {
    let mut cfg = ExperimentConfig::new(quick_scenario(), ExperimentKind::SweepN, "unused");
    cfg.seeds.clear();
    assert!(cfg.validate().is_err());
    cfg.seeds = vec![0];
    cfg.sweep = vec![16, 8];
    assert!(cfg.validate().is_err());
    cfg.sweep = vec![8, 16];
    assert!(cfg.validate().is_ok());
    assert!("sweep-x".parse::<ExperimentKind>().is_err());
    assert_eq!("sweep-rf".parse::<ExperimentKind>().unwrap(), ExperimentKind::SweepRf);
}

#[test]
fn sweep_csv_cardinality_and_reproducibility() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = ExperimentConfig::new(quick_scenario(), ExperimentKind::SweepN, dir.path().join("a"));
    cfg.sweep = vec![4, 8];
    cfg.schemes = vec![Scheme::Proposed, Scheme::TbfMaxIrs];
    cfg.seeds = vec![0, 1, 2];
    let out = run_experiment(&cfg).unwrap();
    assert_eq!(out.failures().count(), 0);
    assert_eq!(out.files.len(), 3);
    for scheme in ["proposed", "tbf-maxirs"] {
        let (header, rows) = read_rows(&dir.path().join("a").join(format!("sweep-n_{scheme}.csv")));
        assert_eq!(header, RUN_COLUMNS);
        assert_eq!(rows.len(), 6);
        let keys: Vec<(String, String)> = rows.iter().map(|r| (r[1].to_string(), r[0].to_string())).collect();
        let mut sorted = keys.clone();
        sorted.sort_by_key(|(n, s)| (n.parse::<usize>().unwrap(), s.parse::<u64>().unwrap()));
        assert_eq!(keys, sorted);
        assert!(rows.iter().all(|r| r[7].parse::<f64>().unwrap() == 0.0));
    }
    let (header, rows) = read_rows(&dir.path().join("a").join("sweep-n_summary.csv"));
    assert_eq!(header[0], "scheme");
    assert_eq!(header[1..], SUMMARY_COLUMNS);
    assert_eq!(rows.len(), 4);

    cfg.out_dir = dir.path().join("b");
    cfg.parallel = false;
    run_experiment(&cfg).unwrap();
    for name in ["sweep-n_proposed.csv", "sweep-n_tbf-maxirs.csv", "sweep-n_summary.csv"] {
        let a = fs::read(dir.path().join("a").join(name)).unwrap();
        let b = fs::read(dir.path().join("b").join(name)).unwrap();
        assert!(a == b, "{name} differs between runs");
    }
}

#[test]
fn convergence_writes_one_row_per_iteration() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = ExperimentConfig::new(quick_scenario(), ExperimentKind::Convergence, dir.path());
    cfg.seeds = vec![3];
    let out = run_experiment(&cfg).unwrap();
    let trace = out.outcomes[0].result.as_ref().unwrap().trace.clone();
    let (_, rows) = read_rows(&dir.path().join("convergence_proposed.csv"));
    assert_eq!(rows.len(), trace.len());
    let ee: Vec<f64> = rows.iter().map(|r| r[3].parse().unwrap()).collect();
    assert!(ee.windows(2).all(|w| w[1] >= w[0] - 1e-12));
    let iters: Vec<usize> = rows.iter().map(|r| r[2].parse().unwrap()).collect();
    assert_eq!(iters, trace.records().iter().map(|r| r.iteration).collect::<Vec<_>>());
}

#[test]
fn user_sweep_changes_user_count() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = ExperimentConfig::new(quick_scenario(), ExperimentKind::SweepK, dir.path());
    cfg.sweep = vec![1, 3];
    let out = run_experiment(&cfg).unwrap();
    let users: Vec<usize> = out
        .outcomes
        .iter()
        .map(|o| o.result.as_ref().unwrap().w.k_users())
        .collect();
    assert_eq!(users, vec![1, 3]);
}

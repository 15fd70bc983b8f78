use std::fs;
use std::process::Command;

fn lensirs() -> Command {
    Command::new(env!("CARGO_BIN_EXE_lensirs"))
}

#[test]
fn sweep_writes_reproducible_csv() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = dir.path().join("s.json");
    fs::write(&scenario, r#"{"k_users": 2, "n_elements": 8}"#).unwrap();
    let run = |out: &str, extra: &[&str]| {
        let o = lensirs()
            .args([
                "--experiment",
                "sweep-rf",
                "--sweep",
                "4,8",
                "--seeds",
                "0..2",
                "--schemes",
                "proposed,zf-rbf",
            ])
            .arg("--scenario")
            .arg(&scenario)
            .arg("--out")
            .arg(dir.path().join(out))
            .args(extra)
            .output()
            .unwrap();
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        String::from_utf8(o.stdout).unwrap()
    };
    let listed = run("a", &[]);
    assert_eq!(listed.lines().count(), 3);
    assert!(listed.lines().all(|l| l.ends_with(".csv")));
    run("b", &["--sequential"]);
    for name in ["sweep-rf_proposed.csv", "sweep-rf_zf-rbf.csv", "sweep-rf_summary.csv"] {
        let a = fs::read_to_string(dir.path().join("a").join(name)).unwrap();
        let b = fs::read_to_string(dir.path().join("b").join(name)).unwrap();
        assert_eq!(a, b, "{name}");
    }
    let rows = fs::read_to_string(dir.path().join("a/sweep-rf_proposed.csv")).unwrap();
    assert_eq!(rows.lines().count(), 5);
}

#[test]
fn errors_map_to_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    fs::write(&bad, r#"{"n_rf": 99}"#).unwrap();
    let o = lensirs()
        .args(["--experiment", "sweep-n"])
        .arg("--scenario")
        .arg(&bad)
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("n_rf"));

    let o = lensirs()
        .args(["--experiment", "sweep-n", "--scenario"])
        .arg(dir.path().join("missing.json"))
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(6));

    let o = lensirs().args(["--experiment", "sweep-q"]).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
    let o = lensirs()
        .args(["--experiment", "sweep-n", "--seeds", "3..3"])
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
}

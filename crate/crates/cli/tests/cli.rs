use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn dyncorr(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dyncorr"))
        .args(args)
        .env_remove("DYNCORR_SEED")
        .env("SOURCE_DATE_EPOCH", "0")
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn simulate_then_estimate_bm() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sim");
    let o = dyncorr(&[
        "--seed",
        "7",
        "simulate",
        "bm",
        "--profile",
        "constant:0.5",
        "--T",
        "50",
        "--out",
        p(&out),
    ]);
    assert_eq!(o.status.code(), Some(0), "{o:?}");
    let csv = fs::read_to_string(out.join("paths.csv")).unwrap();
    assert!(csv.starts_with("t,x,y\n"));
    assert_eq!(csv.lines().count(), 51);
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["master_seed"], 7);
    assert_eq!(manifest["files"][0]["name"], "paths.csv");

    let est = dir.path().join("est.csv");
    let o = dyncorr(&[
        "estimate",
        "bm",
        "--q",
        "0.5",
        "--p",
        "1",
        "--u",
        "1,10,50",
        "--in",
        p(&out.join("paths.csv")),
        "--out",
        p(&est),
    ]);
    assert_eq!(o.status.code(), Some(0), "{o:?}");
    let text = fs::read_to_string(&est).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("u,gamma_hat,sigma_x_sq,sigma_y_sq,rho_hat"));
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 3);
    assert!(rows.iter().all(|r| r.split(',').count() == 5));
}

#[test]
fn seed_from_environment_matches_flag() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    let o = dyncorr(&[
        "--seed",
        "99",
        "simulate",
        "bm",
        "--profile",
        "linear:0,0.01",
        "--T",
        "20",
        "--out",
        p(&a),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let o = Command::new(env!("CARGO_BIN_EXE_dyncorr"))
        .args([
            "simulate",
            "bm",
            "--profile",
            "linear:0,0.01",
            "--T",
            "20",
            "--out",
            p(&b),
        ])
        .env("DYNCORR_SEED", "99")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(
        fs::read(a.join("paths.csv")).unwrap(),
        fs::read(b.join("paths.csv")).unwrap()
    );
}

#[test]
fn gbm_round_trip_and_sigma_mismatch() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sim");
    let o = dyncorr(&[
        "simulate",
        "gbm",
        "--profile",
        "constant:0.5",
        "--T",
        "40",
        "--sigma",
        "0.1",
        "--out",
        p(&out),
    ]);
    assert_eq!(o.status.code(), Some(0), "{o:?}");
    let input = out.join("paths.csv");
    let est = dir.path().join("est.csv");
    let args = |sigma: &'static str| {
        vec![
            "estimate".to_string(),
            "gbm".into(),
            "--variant".into(),
            "v1".into(),
            "--a".into(),
            "1".into(),
            "--b".into(),
            "12".into(),
            "--c".into(),
            "2".into(),
            "--sigma".into(),
            sigma.into(),
            "--t".into(),
            "5".into(),
            "--in".into(),
            p(&input).into(),
            "--out".into(),
            p(&est).into(),
        ]
    };
    let o = dyncorr(&args("0.1").iter().map(String::as_str).collect::<Vec<_>>());
    assert_eq!(o.status.code(), Some(0), "{o:?}");
    let text = fs::read_to_string(&est).unwrap();
    assert!(text.starts_with("t,gamma_hat,sigma_w_sq,sigma_u_sq,rho_hat,flags\n5,"));
    let o = dyncorr(&args("0.3").iter().map(String::as_str).collect::<Vec<_>>());
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn usage_errors_exit_two() {
    for args in [
        vec![
            "estimate", "bm", "--q", "-1", "--p", "1", "--u", "1", "--in", "x.csv", "--out", "y.csv",
        ],
        vec!["simulate", "bm", "--profile", "constant:0.5", "--T", "1", "--out", "x"],
        vec![
            "vg", "pdf", "--r", "0", "--theta", "0", "--sigma", "1", "--mu", "0", "--x", "1",
        ],
        vec!["frobnicate"],
        vec![
            "--seed",
            "-3",
            "simulate",
            "bm",
            "--profile",
            "constant:0",
            "--T",
            "5",
            "--out",
            "x",
        ],
    ] {
        let o = dyncorr(&args);
        assert_eq!(o.status.code(), Some(2), "{args:?}");
    }
}

#[test]
fn runtime_errors_exit_one() {
    let o = dyncorr(&[
        "vg", "pdf", "--r", "1", "--theta", "0", "--sigma", "1", "--mu", "0", "--x", "0",
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(!o.stderr.is_empty());
    let o = dyncorr(&[
        "estimate",
        "bm",
        "--q",
        "0.5",
        "--p",
        "1",
        "--u",
        "1",
        "--in",
        "/nonexistent/in.csv",
        "--out",
        "/tmp/unused.csv",
    ]);
    assert_eq!(o.status.code(), Some(1));
    let dir = tempfile::tempdir().unwrap();
    let o = dyncorr(&[
        "simulate",
        "bm",
        "--profile",
        "table:0.1,0.2",
        "--T",
        "5",
        "--out",
        p(dir.path()),
    ]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn vg_plain_text_output() {
    let o = dyncorr(&[
        "vg", "moments", "--r", "2", "--theta", "-1", "--sigma", "3", "--mu", "4",
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).trim(), "2 22");
    let o = dyncorr(&[
        "vg", "pdf", "--r", "1", "--theta", "0", "--sigma", "1", "--mu", "0", "--x", "1",
    ]);
    let v: f64 = stdout(&o).trim().parse().unwrap();
    assert!((v - 0.421_024_438_240_708_3 / std::f64::consts::PI).abs() < 1e-15);
    let o = dyncorr(&[
        "--format", "json", "vg", "moments", "--r", "1", "--theta", "0.5", "--sigma", "1", "--mu", "0",
    ]);
    let json: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(json["mean"], 0.5);
    assert_eq!(json["variance"], 1.5);
}

#[test]
fn oracle_prints_key_values() {
    let o = dyncorr(&[
        "oracle",
        "bm",
        "--profile",
        "constant:0.5",
        "--T",
        "100",
        "--q",
        "0.5",
        "--p",
        "1",
        "--t",
        "10",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    for key in [
        "rho_t=0.5",
        "expected_gamma=",
        "expected_sigma_sq=",
        "expected_ratio=0.5",
    ] {
        assert!(text.contains(key), "{text}");
    }
    let o = dyncorr(&[
        "--format",
        "json",
        "oracle",
        "gbm",
        "--profile",
        "gbm-constant:0.5,0.1",
        "--T",
        "200",
        "--variant",
        "v2",
        "--a",
        "1",
        "--b",
        "16",
        "--c",
        "2",
        "--sigma",
        "0.1",
        "--t",
        "5",
    ]);
    assert_eq!(o.status.code(), Some(0), "{o:?}");
    let json: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!((json["rho_t"].as_f64().unwrap() - 0.5).abs() < 1e-14);
}

fn write_config(dir: &Path, body: &str) -> String {
    let path = dir.join("cfg.toml");
    fs::write(&path, body).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn experiment_run_writes_report() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "experiment = \"bm_variance_decay\"\nprofile = \"constant:0.5\"\nt_list = [100, 400]\nt_eval = 10\nreps = 200\nmaster_seed = 11\n[bm]\nq = 0.5\np = 1.0\n",
    );
    let out = dir.path().join("run");
    let o = dyncorr(&[
        "experiment",
        "run",
        "--name",
        "bm_variance_decay",
        "--config",
        &cfg,
        "--out",
        p(&out),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(stdout(&o).lines().all(|l| l.starts_with("PASS ")));
    for name in ["report.json", "curves.csv", "manifest.json"] {
        assert!(out.join(name).exists(), "{name}");
    }
    let first = fs::read(out.join("curves.csv")).unwrap();
    let o = dyncorr(&[
        "experiment",
        "run",
        "--name",
        "bm_variance_decay",
        "--config",
        &cfg,
        "--out",
        p(&out),
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(fs::read(out.join("curves.csv")).unwrap(), first);

    let o = dyncorr(&[
        "--seed",
        "12",
        "experiment",
        "run",
        "--name",
        "bm_variance_decay",
        "--config",
        &cfg,
        "--out",
        p(&out),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["master_seed"], 12);
    assert_ne!(fs::read(out.join("curves.csv")).unwrap(), first);
}

#[test]
fn failing_assertions_exit_three() {
    let dir = tempfile::tempdir().unwrap();
    // A unit profile has zero spread at every length, so the spread cannot shrink.
    let cfg = write_config(
        dir.path(),
        "experiment = \"bm_consistency\"\nprofile = \"constant:1\"\nt_list = [20, 40]\nt_eval = 5\nreps = 10\nmaster_seed = 1\n[bm]\nq = 0.5\np = 1.0\n",
    );
    let o = dyncorr(&[
        "experiment",
        "run",
        "--name",
        "bm_consistency",
        "--config",
        &cfg,
        "--out",
        p(&dir.path().join("run")),
    ]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stdout(&o).contains("FAIL rho_iqr_strictly_decreasing"));

    let o = dyncorr(&[
        "experiment",
        "run",
        "--name",
        "bm_bias_pq0",
        "--config",
        &cfg,
        "--out",
        p(&dir.path().join("run")),
    ]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn shipped_configs_are_valid() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut seen = 0;
    for entry in fs::read_dir(&dir).unwrap() {
        let path = entry.unwrap().path();
        let cfg = dyncorr::config::ExperimentConfig::load(&path).unwrap();
        assert_eq!(path.file_stem().unwrap().to_str().unwrap(), cfg.experiment.name());
        seen += 1;
    }
    assert_eq!(seen, dyncorr::config::ExperimentKind::ALL.len());
}

use std::fs;

use dyncorr::bm::{estimate_series, BmEstimatorParams};
use dyncorr::config::{EstimatorParams, ExperimentConfig, ExperimentKind};
use dyncorr::csv_io::{
    load_profile_spec, read_bm_csv, read_gbm_csv, read_profile_table, write_bm_csv, write_bm_estimates, write_gbm_csv,
    write_profile_csv,
};
use dyncorr::gbm::{estimate_gbm, GbmEstimatorParams, GbmVariant};
use dyncorr::harness::run_experiment;
use dyncorr::paths::{simulate_bm_pair, simulate_gbm_pair};
use dyncorr::profile::{CorrelationProfile, ProfileSpec, TimeGrid};
use dyncorr::report::{
    curve_rows, curves_csv, sha256_hex, write_report, RunInfo, CELL_STATISTICS, CURVES_FILE, MANIFEST_FILE, REPORT_FILE,
};
use dyncorr::McReport;

fn small_report(t_list: Vec<usize>) -> McReport {
    let cfg = ExperimentConfig {
        experiment: ExperimentKind::BmConsistency,
        profile: "constant:0.5".parse().unwrap(),
        t_list,
        t_eval: 5,
        reps: 50,
        master_seed: 77,
        params: EstimatorParams::Bm(BmEstimatorParams::new(0.5, 1.0).unwrap()),
        sigma_list: Vec::new(),
    };
    run_experiment(&cfg).unwrap().without_timing()
}

fn run_info() -> RunInfo {
    RunInfo {
        tool: "dyncorr".into(),
        version: "test".into(),
        timestamp: 0,
        command: vec!["experiment".into(), "run".into()],
    }
}

#[test]
fn report_files_are_byte_identical_across_runs() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    write_report(&small_report(vec![20, 40]), a.path(), &run_info()).unwrap();
    write_report(&small_report(vec![20, 40]), b.path(), &run_info()).unwrap();
    for name in [REPORT_FILE, CURVES_FILE, MANIFEST_FILE] {
        assert_eq!(
            fs::read(a.path().join(name)).unwrap(),
            fs::read(b.path().join(name)).unwrap(),
            "{name}"
        );
    }
}

#[test]
fn curves_have_one_row_per_statistic() {
    let report = small_report(vec![20]);
    let csv = curves_csv(&report);
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "T,statistic,value");
    assert_eq!(lines.len(), 1 + CELL_STATISTICS.len());
    let rows = curve_rows(&report);
    assert!(rows.iter().all(|(len, _, _)| *len == 20));
    let expected_ratio = rows.iter().find(|r| r.1 == "expected_ratio").unwrap().2;
    assert_eq!(expected_ratio, report.cells[0].oracle.unwrap().expected_ratio);
}

#[test]
fn manifest_checksums_match_files() {
    let dir = tempfile::tempdir().unwrap();
    let report = small_report(vec![20, 40]);
    let manifest = write_report(&report, dir.path(), &run_info()).unwrap();
    assert_eq!(manifest.files.len(), 2);
    for f in &manifest.files {
        let bytes = fs::read(dir.path().join(&f.name)).unwrap();
        assert_eq!(f.bytes, bytes.len() as u64);
        assert_eq!(f.sha256, sha256_hex(&bytes));
    }
    assert_eq!(manifest.master_seed, 77);
    assert_eq!(ExperimentConfig::from_toml(&manifest.config).unwrap(), report.config);
    let json: serde_json::Value = serde_json::from_slice(&fs::read(dir.path().join(REPORT_FILE)).unwrap()).unwrap();
    assert_eq!(json["experiment"], "bm_consistency");
    assert_eq!(json["cells"].as_array().unwrap().len(), 2);
}

#[test]
fn bm_paths_round_trip_exactly() {
    let p = CorrelationProfile::build("regime:0.7,-0.2,30".parse().unwrap(), TimeGrid::new(60).unwrap()).unwrap();
    let pair = simulate_bm_pair(&p, 5);
    let mut buf = Vec::new();
    write_bm_csv(&mut buf, &pair).unwrap();
    let text = String::from_utf8(buf.clone()).unwrap();
    assert!(text.starts_with("t,x,y\n1,"));
    assert!(!text.contains('\r'));
    let back = read_bm_csv(buf.as_slice()).unwrap();
    assert_eq!(back.x, pair.x);
    assert_eq!(back.y, pair.y);
}

#[test]
fn gbm_paths_round_trip_and_sigma_check() {
    let p = CorrelationProfile::build("constant:0.4".parse().unwrap(), TimeGrid::new(40).unwrap()).unwrap();
    let pair = simulate_gbm_pair(&simulate_bm_pair(&p, 6), 0.1).unwrap();
    let mut buf = Vec::new();
    write_gbm_csv(&mut buf, &pair).unwrap();
    let back = read_gbm_csv(buf.as_slice()).unwrap();
    assert_eq!(back.r, pair.r_path);
    assert_eq!(back.u, pair.u);
    back.check_sigma(0.1).unwrap();
    assert!(back.check_sigma(0.2).is_err());
}

#[test]
fn malformed_csv_is_rejected() {
    assert!(read_bm_csv("t,x\n1,0\n2,0\n".as_bytes()).is_err());
    assert!(read_bm_csv("t,x,y\n1,0,0\n3,0,0\n".as_bytes()).is_err());
    assert!(read_bm_csv("t,x,y\n1,0,0\n2,nan,0\n".as_bytes()).is_err());
    assert!(read_bm_csv("t,x,y\n1,0,0\n".as_bytes()).is_err());
    assert!(read_gbm_csv("t,r,s,w,u\n1,1,-1,0,0\n2,1,1,0,0\n".as_bytes()).is_err());
    let with_comment = "# generated\nt,x,y\n1,0.5,0.25\n2,1,2\n";
    assert_eq!(read_bm_csv(with_comment.as_bytes()).unwrap().y, vec![0.25, 2.0]);
}

#[test]
fn profile_table_file_resolves() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("rho.csv");
    let values = vec![0.3, 0.3, 0.25, 0.2];
    write_profile_csv(fs::File::create(&path).unwrap(), &values).unwrap();
    assert_eq!(read_profile_table(fs::File::open(&path).unwrap()).unwrap(), values);
    let spec = load_profile_spec(&format!("table:@{}", path.display())).unwrap();
    assert_eq!(spec, ProfileSpec::Table(values));
    assert!(load_profile_spec("table:@/nonexistent/rho.csv").is_err());
}

#[test]
fn estimate_csv_columns() {
    let x = [0.5, -1.0, 2.5, 0.1, -0.7];
    let y = [0.2, 0.1, 1.5, -0.3, -0.2];
    let series = estimate_series(&x, &y, [1, 2], BmEstimatorParams::new(0.5, 1.0).unwrap()).unwrap();
    let mut buf = Vec::new();
    write_bm_estimates(&mut buf, &series.estimates).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("u,gamma_hat,sigma_x_sq,sigma_y_sq,rho_hat"));
    assert_eq!(lines.count(), 2);

    let g = GbmEstimatorParams::new(1.0, 16.0, 2.0, 1.0, GbmVariant::V2).unwrap();
    let e = estimate_gbm(&[0.0, 0.0], &[0.0, 0.0], 1, &g).unwrap();
    let mut buf = Vec::new();
    dyncorr::csv_io::write_gbm_estimates(&mut buf, &[e]).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert!(text.starts_with("t,gamma_hat,sigma_w_sq,sigma_u_sq,rho_hat,flags\n1,"));
}

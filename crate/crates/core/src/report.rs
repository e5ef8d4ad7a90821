//! Persisting a Monte Carlo report: `report.json`, `curves.csv` and a
//! `manifest.json` with SHA-256 checksums, written last.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::csv_io::fmt_f64;
use crate::error::{Error, Result};
use crate::harness::McReport;

pub const REPORT_FILE: &str = "report.json";
pub const CURVES_FILE: &str = "curves.csv";
pub const MANIFEST_FILE: &str = "manifest.json";

/// Statistics emitted per `(T, t)` cell, in file order.
pub const CELL_STATISTICS: [&str; 15] = [
    "gamma_hat_mean",
    "gamma_hat_variance",
    "gamma_hat_se",
    "sigma_x_sq_hat_mean",
    "sigma_x_sq_hat_variance",
    "sigma_x_sq_hat_se",
    "rho_hat_mean",
    "rho_hat_variance",
    "rho_hat_se",
    "rho_hat_iqr",
    "rho_undefined",
    "target_rho",
    "expected_gamma",
    "expected_sigma_sq",
    "expected_ratio",
];

/// What produced the run; echoed into the manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunInfo {
    pub tool: String,
    pub version: String,
    /// Seconds since the Unix epoch.
    pub timestamp: u64,
    pub command: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileEntry {
    pub name: String,
    pub bytes: u64,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub run: RunInfo,
    pub config: String,
    pub master_seed: u64,
    pub seed_scheme: String,
    pub files: Vec<FileEntry>,
}

/// `(T, statistic, value)` rows of `curves.csv`.
pub fn curve_rows(report: &McReport) -> Vec<(usize, String, f64)> {
    let mut rows = Vec::new();
    for c in &report.cells {
        let o = c.oracle;
        let values = [
            c.gamma_hat.mean,
            c.gamma_hat.variance,
            c.gamma_hat.std_error,
            c.sigma_x_sq_hat.mean,
            c.sigma_x_sq_hat.variance,
            c.sigma_x_sq_hat.std_error,
            c.rho_hat.mean,
            c.rho_hat.variance,
            c.rho_hat.std_error,
            c.rho_hat_iqr,
            c.rho_undefined as f64,
            c.target_rho,
            o.map_or(f64::NAN, |o| o.expected_gamma),
            o.map_or(f64::NAN, |o| o.expected_sigma_sq),
            o.map_or(f64::NAN, |o| o.expected_ratio),
        ];
        for (name, v) in CELL_STATISTICS.iter().zip(values) {
            rows.push((c.len, name.to_string(), v));
        }
    }
    for m in &report.moment_rows {
        for (name, v) in [
            ("product_mean", m.product.mean),
            ("product_target", m.product_target),
            ("second_moment_mean", m.second_moment.mean),
            ("second_moment_target", m.second_moment_target),
            ("scaled_variance", m.scaled_variance),
            ("scaled_variance_target", m.scaled_variance_target),
        ] {
            rows.push((m.t, name.to_string(), v));
        }
    }
    for b in &report.bound_rows {
        for (name, v) in [("mean", b.sample.mean), ("bound", b.bound), ("exact", b.exact)] {
            rows.push((b.t, format!("sigma={}:{name}", b.sigma), v));
        }
    }
    rows
}

pub fn curves_csv(report: &McReport) -> String {
    let mut out = String::from("T,statistic,value\n");
    for (len, name, v) in curve_rows(report) {
        out.push_str(&format!("{len},{name},{}\n", fmt_f64(v)));
    }
    out
}

pub fn report_json(report: &McReport) -> String {
    let mut s = serde_json::to_string_pretty(report).expect("report serialises");
    s.push('\n');
    s
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn write_file(dir: &Path, name: &str, contents: &[u8]) -> Result<FileEntry> {
    let path: PathBuf = dir.join(name);
    fs::write(&path, contents).map_err(|e| Error::Io { path, source: e })?;
    Ok(FileEntry {
        name: name.to_string(),
        bytes: contents.len() as u64,
        sha256: sha256_hex(contents),
    })
}

/// Writes the report files into `dir` (created if missing) and returns the
/// manifest, which is itself written last.
pub fn write_report(report: &McReport, dir: &Path, run: &RunInfo) -> Result<RunManifest> {
    fs::create_dir_all(dir).map_err(|e| Error::Io {
        path: dir.to_path_buf(),
        source: e,
    })?;
    let files = vec![
        write_file(dir, REPORT_FILE, report_json(report).as_bytes())?,
        write_file(dir, CURVES_FILE, curves_csv(report).as_bytes())?,
    ];
    let manifest = RunManifest {
        run: run.clone(),
        config: report.config.to_toml(),
        master_seed: report.seeds.master_seed,
        seed_scheme: report.seeds.scheme.clone(),
        files,
    };
    write_manifest(dir, &manifest)?;
    Ok(manifest)
}

/// Writes `manifest.json` for files already present in `dir`.
pub fn write_manifest(dir: &Path, manifest: &RunManifest) -> Result<()> {
    let mut text = serde_json::to_string_pretty(manifest).expect("manifest serialises");
    text.push('\n');
    write_file(dir, MANIFEST_FILE, text.as_bytes())?;
    Ok(())
}

/// Checksums of `names` inside `dir`, for manifests of non-report runs.
pub fn inventory(dir: &Path, names: &[&str]) -> Result<Vec<FileEntry>> {
    names
        .iter()
        .map(|name| {
            let path = dir.join(name);
            let bytes = fs::read(&path).map_err(|e| Error::Io { path, source: e })?;
            Ok(FileEntry {
                name: name.to_string(),
                bytes: bytes.len() as u64,
                sha256: sha256_hex(&bytes),
            })
        })
        .collect()
}

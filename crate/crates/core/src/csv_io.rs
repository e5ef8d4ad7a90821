//! CSV import and export for paths, profile tables and estimate series.
//!
//! Floats are written in scientific notation with 17 significant digits,
//! which round-trips every `f64` exactly.

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use crate::bm::BmEstimate;
use crate::error::{Error, Result};
use crate::gbm::GbmEstimate;
use crate::paths::{BmPathPair, GbmPathPair};
use crate::profile::ProfileSpec;

/// `f64` with 17 significant digits.
pub fn fmt_f64(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        format!("{v}")
    }
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_default()
}

fn io_err(path: &Path, source: std::io::Error) -> Error {
    Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn csv_err(e: csv::Error) -> Error {
    let line = e.position().map(|p| p.line() as usize).unwrap_or(0);
    match e.into_kind() {
        csv::ErrorKind::Io(source) => Error::Io {
            path: "<stream>".into(),
            source,
        },
        other => Error::Parse {
            line,
            reason: format!("{other:?}"),
        },
    }
}

/// Reads a header-checked table of floats whose first column is `t = 1..T`.
fn read_table<R: Read>(input: R, header: &[&str]) -> Result<Vec<Vec<f64>>> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(input);
    let found: Vec<String> = rdr.headers().map_err(csv_err)?.iter().map(str::to_string).collect();
    if found != header {
        return Err(Error::Parse {
            line: 1,
            reason: format!("expected header `{}`, got `{}`", header.join(","), found.join(",")),
        });
    }
    let mut rows = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(csv_err)?;
        let line = rec.position().map(|p| p.line() as usize).unwrap_or(i + 2);
        if rec.len() != header.len() {
            return Err(Error::Parse {
                line,
                reason: format!("expected {} fields, got {}", header.len(), rec.len()),
            });
        }
        let t: usize = rec[0].parse().map_err(|_| Error::Parse {
            line,
            reason: format!("`{}` is not a time index", &rec[0]),
        })?;
        if t != i + 1 {
            return Err(Error::Parse {
                line,
                reason: format!("expected t={}, got t={t}", i + 1),
            });
        }
        let mut row = Vec::with_capacity(header.len() - 1);
        for field in rec.iter().skip(1) {
            let v: f64 = field.parse().map_err(|_| Error::Parse {
                line,
                reason: format!("`{field}` is not a number"),
            })?;
            if !v.is_finite() {
                return Err(Error::Parse {
                    line,
                    reason: format!("`{field}` is not finite"),
                });
            }
            row.push(v);
        }
        rows.push(row);
    }
    Ok(rows)
}

fn column(rows: &[Vec<f64>], j: usize) -> Vec<f64> {
    rows.iter().map(|r| r[j]).collect()
}

pub const BM_HEADER: [&str; 3] = ["t", "x", "y"];
pub const GBM_HEADER: [&str; 5] = ["t", "r", "s", "w", "u"];
pub const PROFILE_HEADER: [&str; 2] = ["t", "rho"];
pub const BM_ESTIMATE_HEADER: [&str; 5] = ["u", "gamma_hat", "sigma_x_sq", "sigma_y_sq", "rho_hat"];
pub const GBM_ESTIMATE_HEADER: [&str; 6] = ["t", "gamma_hat", "sigma_w_sq", "sigma_u_sq", "rho_hat", "flags"];

/// A Brownian pair read back from `t,x,y`.
#[derive(Debug, Clone, PartialEq)]
pub struct BmSeries {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

/// A geometric pair read back from `t,r,s,w,u`.
#[derive(Debug, Clone, PartialEq)]
pub struct GbmSeries {
    pub r: Vec<f64>,
    pub s: Vec<f64>,
    pub w: Vec<f64>,
    pub u: Vec<f64>,
}

impl GbmSeries {
    /// Checks `r = e^{σw}` and `s = e^{σu}` to within `1e−12` relative.
    pub fn check_sigma(&self, sigma: f64) -> Result<()> {
        let ok = |level: f64, bm: f64| {
            let expect = (sigma * bm).exp();
            (level - expect).abs() <= 1e-12 * expect.abs().max(f64::MIN_POSITIVE)
        };
        for (i, ((&r, &s), (&w, &u))) in self.r.iter().zip(&self.s).zip(self.w.iter().zip(&self.u)).enumerate() {
            if !ok(r, w) || !ok(s, u) {
                return Err(Error::Parse {
                    line: i + 2,
                    reason: format!("levels are not exp(sigma * bm) for sigma = {sigma}"),
                });
            }
        }
        Ok(())
    }
}

pub fn read_bm_csv<R: Read>(input: R) -> Result<BmSeries> {
    let rows = read_table(input, &BM_HEADER)?;
    if rows.len() < 2 {
        return Err(Error::GridTooShort(rows.len()));
    }
    Ok(BmSeries {
        x: column(&rows, 0),
        y: column(&rows, 1),
    })
}

pub fn read_gbm_csv<R: Read>(input: R) -> Result<GbmSeries> {
    let rows = read_table(input, &GBM_HEADER)?;
    if rows.len() < 2 {
        return Err(Error::GridTooShort(rows.len()));
    }
    for (i, row) in rows.iter().enumerate() {
        if !(row[0] > 0.0 && row[1] > 0.0) {
            return Err(Error::Parse {
                line: i + 2,
                reason: "geometric levels must be positive".into(),
            });
        }
    }
    Ok(GbmSeries {
        r: column(&rows, 0),
        s: column(&rows, 1),
        w: column(&rows, 2),
        u: column(&rows, 3),
    })
}

/// `t,rho` table, validated only for shape; range checks happen when the
/// profile is built.
pub fn read_profile_table<R: Read>(input: R) -> Result<Vec<f64>> {
    Ok(column(&read_table(input, &PROFILE_HEADER)?, 0))
}

/// Parses a profile spec, resolving `table:@path` against the filesystem.
pub fn load_profile_spec(spec: &str) -> Result<ProfileSpec> {
    if let Some(path) = spec.trim().strip_prefix("table:@") {
        let path = Path::new(path.trim());
        let file = fs::File::open(path).map_err(|e| io_err(path, e))?;
        return Ok(ProfileSpec::Table(read_profile_table(file)?));
    }
    spec.parse()
}

fn writer<W: Write>(out: W) -> csv::Writer<W> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out)
}

fn finish<W: Write>(mut w: csv::Writer<W>) -> Result<()> {
    w.flush().map_err(|e| Error::Io {
        path: "<stream>".into(),
        source: e,
    })
}

pub fn write_bm_csv<W: Write>(out: W, pair: &BmPathPair) -> Result<()> {
    let mut w = writer(out);
    w.write_record(BM_HEADER).map_err(csv_err)?;
    for (i, (x, y)) in pair.x.iter().zip(&pair.y).enumerate() {
        w.write_record([(i + 1).to_string(), fmt_f64(*x), fmt_f64(*y)])
            .map_err(csv_err)?;
    }
    finish(w)
}

pub fn write_gbm_csv<W: Write>(out: W, pair: &GbmPathPair) -> Result<()> {
    let mut w = writer(out);
    w.write_record(GBM_HEADER).map_err(csv_err)?;
    for i in 0..pair.w.len() {
        w.write_record([
            (i + 1).to_string(),
            fmt_f64(pair.r_path[i]),
            fmt_f64(pair.s_path[i]),
            fmt_f64(pair.w[i]),
            fmt_f64(pair.u[i]),
        ])
        .map_err(csv_err)?;
    }
    finish(w)
}

pub fn write_profile_csv<W: Write>(out: W, values: &[f64]) -> Result<()> {
    let mut w = writer(out);
    w.write_record(PROFILE_HEADER).map_err(csv_err)?;
    for (i, v) in values.iter().enumerate() {
        w.write_record([(i + 1).to_string(), fmt_f64(*v)]).map_err(csv_err)?;
    }
    finish(w)
}

pub fn write_bm_estimates<W: Write>(out: W, estimates: &[BmEstimate]) -> Result<()> {
    let mut w = writer(out);
    w.write_record(BM_ESTIMATE_HEADER).map_err(csv_err)?;
    for e in estimates {
        w.write_record([
            e.u.to_string(),
            fmt_f64(e.gamma_hat),
            fmt_f64(e.sigma_x_sq_hat),
            fmt_f64(e.sigma_y_sq_hat),
            fmt_opt(e.rho_hat),
        ])
        .map_err(csv_err)?;
    }
    finish(w)
}

pub fn write_gbm_estimates<W: Write>(out: W, estimates: &[GbmEstimate]) -> Result<()> {
    let mut w = writer(out);
    w.write_record(GBM_ESTIMATE_HEADER).map_err(csv_err)?;
    for e in estimates {
        w.write_record([
            e.t.to_string(),
            fmt_f64(e.gamma_hat),
            fmt_f64(e.sigma_w_sq_hat),
            fmt_f64(e.sigma_u_sq_hat),
            fmt_opt(e.rho_hat),
            e.flags.to_string(),
        ])
        .map_err(csv_err)?;
    }
    finish(w)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::paths::{simulate_bm_pair, simulate_gbm_pair};
    use crate::profile::{CorrelationProfile, TimeGrid};

    #[test]
    fn seventeen_digits() {
        assert_eq!(fmt_f64(0.1), "1.0000000000000001e-1");
        assert_eq!(fmt_f64(1.0), "1.0000000000000000e0");
        assert_eq!(fmt_f64(f64::NAN), "NaN");
    }

    #[test]
    fn bm_round_trip_is_exact() {
        let p = CorrelationProfile::constant(0.3, TimeGrid::new(50).unwrap()).unwrap();
        let pair = simulate_bm_pair(&p, 9);
        let mut buf = Vec::new();
        write_bm_csv(&mut buf, &pair).unwrap();
        let back = read_bm_csv(buf.as_slice()).unwrap();
        assert_eq!(back.x, pair.x);
        assert_eq!(back.y, pair.y);
    }

    #[test]
    fn gbm_round_trip_and_sigma_check() {
        let p = CorrelationProfile::constant(0.3, TimeGrid::new(20).unwrap()).unwrap();
        let g = simulate_gbm_pair(&simulate_bm_pair(&p, 2), 0.2).unwrap();
        let mut buf = Vec::new();
        write_gbm_csv(&mut buf, &g).unwrap();
        let back = read_gbm_csv(buf.as_slice()).unwrap();
        assert_eq!(back.w, g.w);
        assert_eq!(back.r, g.r_path);
        back.check_sigma(0.2).unwrap();
        assert!(back.check_sigma(0.3).is_err());
    }

    #[test]
    fn malformed_inputs() {
        assert!(read_bm_csv("t,x\n1,2\n".as_bytes()).is_err());
        assert!(read_bm_csv("t,x,y\n1,0,0\n3,0,0\n".as_bytes()).is_err());
        assert!(read_bm_csv("t,x,y\n1,0,0\n2,abc,0\n".as_bytes()).is_err());
        assert!(read_bm_csv("t,x,y\n1,0,0\n2,inf,0\n".as_bytes()).is_err());
        assert!(read_bm_csv("t,x,y\n1,0,0\n".as_bytes()).is_err());
        assert!(read_gbm_csv("t,r,s,w,u\n1,0,1,0,0\n2,1,1,0,0\n".as_bytes()).is_err());
    }

    #[test]
    fn profile_table_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("rho.csv");
        let mut buf = Vec::new();
        write_profile_csv(&mut buf, &[0.3, 0.15, 0.1]).unwrap();
        fs::write(&path, buf).unwrap();
        let spec = load_profile_spec(&format!("table:@{}", path.display())).unwrap();
        assert_eq!(spec, ProfileSpec::Table(vec![0.3, 0.15, 0.1]));
        assert!(load_profile_spec("table:@/nonexistent/rho.csv").is_err());
        assert_eq!(load_profile_spec("constant:0.5").unwrap(), ProfileSpec::Constant(0.5));
    }
}

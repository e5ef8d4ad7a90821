use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand, ValueEnum};

use dyncorr::bm::{estimate_bm, expected_gamma_bm, expected_ratio_q, expected_sigma_sq_bm, BmEstimatorParams};
use dyncorr::config::{ExperimentConfig, ExperimentKind};
use dyncorr::csv_io::{self, load_profile_spec};
use dyncorr::gbm::{estimate_gbm, gbm_expectation, level_correlation, GbmEstimatorParams, GbmVariant};
use dyncorr::harness::run_experiment;
use dyncorr::paths::{simulate_bm_pair, simulate_gbm_pair};
use dyncorr::profile::{CorrelationProfile, TimeGrid};
use dyncorr::report::{inventory, write_manifest, write_report, RunInfo, RunManifest};
use dyncorr::rng::SEED_SCHEME;
use dyncorr::vg::{vg_moments, vg_pdf, VgParams};
use dyncorr::Error;

const EXIT_RUNTIME: u8 = 1;
const EXIT_ASSERTION: u8 = 3;

#[derive(Parser, Debug)]
#[command(
    name = "dyncorr",
    version,
    about = "Dynamic correlation estimators for Brownian and geometric Brownian pairs"
)]
struct Cli {
    /// Master seed (decimal u64).
    #[arg(long, global = true, env = "DYNCORR_SEED")]
    seed: Option<u64>,

    /// Output format for tabular results.
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,

    #[command(subcommand)]
    command: Command,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum Format {
    Csv,
    Json,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Simulate a correlated path pair.
    #[command(subcommand)]
    Simulate(Simulate),
    /// Estimate covariance and correlation from a path CSV.
    #[command(subcommand)]
    Estimate(Estimate),
    /// Exact expectations of the estimators.
    #[command(subcommand)]
    Oracle(Oracle),
    /// Variance-gamma density and moments.
    #[command(subcommand)]
    Vg(Vg),
    /// Monte Carlo experiments.
    #[command(subcommand)]
    Experiment(Experiment),
}

fn finite(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|_| format!("`{s}` is not a number"))?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(format!("`{s}` is not finite"))
    }
}

fn non_negative(s: &str) -> Result<f64, String> {
    let v = finite(s)?;
    if v >= 0.0 {
        Ok(v)
    } else {
        Err(format!("`{s}` must be >= 0"))
    }
}

fn positive(s: &str) -> Result<f64, String> {
    let v = finite(s)?;
    if v > 0.0 {
        Ok(v)
    } else {
        Err(format!("`{s}` must be > 0"))
    }
}

#[derive(Args, Debug)]
struct ProfileArgs {
    /// Profile spec: constant:<c>, linear:<c0>,<c1>, table:<v,...>, table:@<csv>,
    /// regime:<c0>,<c1>,<k>, gbm-constant:<rho>,<sigma>.
    #[arg(long)]
    profile: String,
    /// Number of grid points.
    #[arg(long = "T", value_parser = clap::value_parser!(u64).range(2..))]
    len: u64,
}

#[derive(Args, Debug)]
struct BmParamArgs {
    #[arg(long, value_parser = non_negative, allow_negative_numbers = true)]
    q: f64,
    #[arg(long, value_parser = non_negative, allow_negative_numbers = true)]
    p: f64,
}

#[derive(Args, Debug)]
struct GbmParamArgs {
    #[arg(long, value_enum)]
    variant: VariantArg,
    #[arg(long, value_parser = finite, allow_negative_numbers = true)]
    a: f64,
    #[arg(long, value_parser = finite, allow_negative_numbers = true)]
    b: f64,
    #[arg(long, value_parser = finite, allow_negative_numbers = true)]
    c: f64,
    #[arg(long, value_parser = positive)]
    sigma: f64,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum VariantArg {
    V1,
    V2,
}

impl From<VariantArg> for GbmVariant {
    fn from(v: VariantArg) -> Self {
        match v {
            VariantArg::V1 => GbmVariant::V1,
            VariantArg::V2 => GbmVariant::V2,
        }
    }
}

#[derive(Subcommand, Debug)]
enum Simulate {
    /// Brownian pair; writes `paths.csv` (t,x,y) and `manifest.json`.
    Bm {
        #[command(flatten)]
        profile: ProfileArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Geometric pair; writes `paths.csv` (t,r,s,w,u) and `manifest.json`.
    Gbm {
        #[command(flatten)]
        profile: ProfileArgs,
        #[arg(long, value_parser = positive)]
        sigma: f64,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Subcommand, Debug)]
enum Estimate {
    /// Columns u,gamma_hat,sigma_x_sq,sigma_y_sq,rho_hat.
    Bm {
        #[command(flatten)]
        params: BmParamArgs,
        /// Evaluation times (comma separated).
        #[arg(long, value_delimiter = ',', required = true)]
        u: Vec<usize>,
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Columns t,gamma_hat,sigma_w_sq,sigma_u_sq,rho_hat,flags.
    Gbm {
        #[command(flatten)]
        params: GbmParamArgs,
        /// Evaluation times (comma separated).
        #[arg(long, value_delimiter = ',', required = true)]
        t: Vec<usize>,
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Subcommand, Debug)]
enum Oracle {
    Bm {
        #[command(flatten)]
        profile: ProfileArgs,
        #[command(flatten)]
        params: BmParamArgs,
        #[arg(long)]
        t: usize,
    },
    Gbm {
        #[command(flatten)]
        profile: ProfileArgs,
        #[command(flatten)]
        params: GbmParamArgs,
        #[arg(long)]
        t: usize,
    },
}

#[derive(Args, Debug)]
struct VgArgs {
    #[arg(long, value_parser = positive)]
    r: f64,
    #[arg(long, value_parser = finite, allow_negative_numbers = true)]
    theta: f64,
    #[arg(long, value_parser = positive)]
    sigma: f64,
    #[arg(long, value_parser = finite, allow_negative_numbers = true)]
    mu: f64,
}

#[derive(Subcommand, Debug)]
enum Vg {
    Pdf {
        #[command(flatten)]
        params: VgArgs,
        #[arg(long, value_parser = finite, allow_negative_numbers = true)]
        x: f64,
    },
    Moments {
        #[command(flatten)]
        params: VgArgs,
    },
}

#[derive(Subcommand, Debug)]
enum Experiment {
    /// Run an experiment; exits 3 when any assertion fails.
    Run {
        #[arg(long)]
        name: String,
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

enum Outcome {
    Ok,
    AssertionsFailed,
}

fn io_err(path: &Path, e: io::Error) -> Error {
    Error::Io {
        path: path.to_path_buf(),
        source: e,
    }
}

fn run_info() -> RunInfo {
    let timestamp = std::env::var("SOURCE_DATE_EPOCH")
        .ok()
        .and_then(|s| s.parse().ok())
        .unwrap_or_else(|| {
            SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0)
        });
    RunInfo {
        tool: env!("CARGO_PKG_NAME").to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        timestamp,
        command: std::env::args().collect(),
    }
}

fn build_profile(args: &ProfileArgs) -> dyncorr::Result<CorrelationProfile> {
    let spec = load_profile_spec(&args.profile)?;
    CorrelationProfile::build(spec, TimeGrid::new(args.len as usize)?)
}

fn create(path: &Path) -> dyncorr::Result<BufWriter<File>> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| io_err(parent, e))?;
    }
    Ok(BufWriter::new(File::create(path).map_err(|e| io_err(path, e))?))
}

fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> dyncorr::Result<()> {
    let mut w = create(path)?;
    let mut text = serde_json::to_string_pretty(value).expect("serialisable");
    text.push('\n');
    w.write_all(text.as_bytes()).map_err(|e| io_err(path, e))?;
    w.flush().map_err(|e| io_err(path, e))
}

fn simulate(cmd: Simulate, seed: u64, format: Format) -> dyncorr::Result<()> {
    let (out, description) = match &cmd {
        Simulate::Bm { out, profile } => (
            out.clone(),
            format!("simulate bm --profile {} --T {}", profile.profile, profile.len),
        ),
        Simulate::Gbm { out, profile, sigma } => (
            out.clone(),
            format!(
                "simulate gbm --profile {} --T {} --sigma {sigma}",
                profile.profile, profile.len
            ),
        ),
    };
    fs::create_dir_all(&out).map_err(|e| io_err(&out, e))?;
    let name = match format {
        Format::Csv => "paths.csv",
        Format::Json => "paths.json",
    };
    let path = out.join(name);
    match cmd {
        Simulate::Bm { profile, .. } => {
            let pair = simulate_bm_pair(&build_profile(&profile)?, seed);
            match format {
                Format::Csv => {
                    let mut w = create(&path)?;
                    csv_io::write_bm_csv(&mut w, &pair)?;
                    w.flush().map_err(|e| io_err(&path, e))?;
                }
                Format::Json => write_json(&path, &serde_json::json!({ "x": pair.x, "y": pair.y }))?,
            }
        }
        Simulate::Gbm { profile, sigma, .. } => {
            let bm = simulate_bm_pair(&build_profile(&profile)?, seed);
            let pair = simulate_gbm_pair(&bm, sigma)?;
            match format {
                Format::Csv => {
                    let mut w = create(&path)?;
                    csv_io::write_gbm_csv(&mut w, &pair)?;
                    w.flush().map_err(|e| io_err(&path, e))?;
                }
                Format::Json => write_json(
                    &path,
                    &serde_json::json!({ "r": pair.r_path, "s": pair.s_path, "w": pair.w, "u": pair.u }),
                )?,
            }
        }
    }
    let manifest = RunManifest {
        run: run_info(),
        config: description,
        master_seed: seed,
        seed_scheme: SEED_SCHEME.to_string(),
        files: inventory(&out, &[name])?,
    };
    write_manifest(&out, &manifest)
}

fn open(path: &Path) -> dyncorr::Result<File> {
    File::open(path).map_err(|e| io_err(path, e))
}

fn estimate(cmd: Estimate, format: Format) -> dyncorr::Result<()> {
    match cmd {
        Estimate::Bm { params, u, input, out } => {
            let params = BmEstimatorParams::new(params.q, params.p)?;
            let range = params.theorem_range();
            if !(range.consistency && range.variance_decay) {
                eprintln!(
                    "warning: (q, p) = ({}, {}) is outside the proven consistency range",
                    params.q, params.p
                );
            }
            let series = csv_io::read_bm_csv(open(&input)?)?;
            let estimates = u
                .iter()
                .map(|&u| estimate_bm(&series.x, &series.y, u, params))
                .collect::<dyncorr::Result<Vec<_>>>()?;
            match format {
                Format::Csv => {
                    let mut w = create(&out)?;
                    csv_io::write_bm_estimates(&mut w, &estimates)?;
                    w.flush().map_err(|e| io_err(&out, e))
                }
                Format::Json => write_json(&out, &estimates),
            }
        }
        Estimate::Gbm { params, t, input, out } => {
            let params = GbmEstimatorParams::new(params.a, params.b, params.c, params.sigma, params.variant.into())?;
            if !params.theorem_range() {
                eprintln!(
                    "warning: (a, b, c) = ({}, {}, {}) is outside the proven consistency range",
                    params.a, params.b, params.c
                );
            }
            let series = csv_io::read_gbm_csv(open(&input)?)?;
            series.check_sigma(params.sigma)?;
            let estimates = t
                .iter()
                .map(|&t| estimate_gbm(&series.w, &series.u, t, &params))
                .collect::<dyncorr::Result<Vec<_>>>()?;
            match format {
                Format::Csv => {
                    let mut w = create(&out)?;
                    csv_io::write_gbm_estimates(&mut w, &estimates)?;
                    w.flush().map_err(|e| io_err(&out, e))
                }
                Format::Json => write_json(&out, &estimates),
            }
        }
    }
}

fn print_fields(fields: &[(&str, f64)], format: Format) {
    match format {
        Format::Csv => {
            for (k, v) in fields {
                println!("{k}={v}");
            }
        }
        Format::Json => {
            let map: serde_json::Map<String, serde_json::Value> = fields
                .iter()
                .map(|(k, v)| (k.to_string(), serde_json::json!(v)))
                .collect();
            println!("{}", serde_json::Value::Object(map));
        }
    }
}

fn oracle(cmd: Oracle, format: Format) -> dyncorr::Result<()> {
    match cmd {
        Oracle::Bm { profile, params, t } => {
            let prof = build_profile(&profile)?;
            let params = BmEstimatorParams::new(params.q, params.p)?;
            let len = profile.len as usize;
            print_fields(
                &[
                    ("rho_t", prof.rho(t.clamp(1, len))),
                    ("expected_gamma", expected_gamma_bm(&prof, t, params, len)?),
                    ("expected_sigma_sq", expected_sigma_sq_bm(t, params, len)?),
                    ("expected_ratio", expected_ratio_q(&prof, t, params, len)?),
                ],
                format,
            );
        }
        Oracle::Gbm { profile, params, t } => {
            let prof = build_profile(&profile)?;
            let params = GbmEstimatorParams::new(params.a, params.b, params.c, params.sigma, params.variant.into())?;
            if params.variant == GbmVariant::V2 && params.b <= 2.0 {
                eprintln!("warning: b <= 2, the weighted variance series diverges as T grows");
            }
            let len = profile.len as usize;
            let ex = gbm_expectation(&prof, t, &params, len)?;
            print_fields(
                &[
                    ("rho_t", level_correlation(&prof, params.sigma, t)?),
                    ("expected_gamma", ex.gamma),
                    ("expected_sigma_sq", ex.sigma_sq),
                    ("expected_ratio", ex.ratio()),
                ],
                format,
            );
        }
    }
    Ok(())
}

fn vg(cmd: Vg, format: Format) -> dyncorr::Result<()> {
    let params = |a: &VgArgs| VgParams::new(a.r, a.theta, a.sigma, a.mu);
    match cmd {
        Vg::Pdf { params: a, x } => {
            let v = vg_pdf(x, &params(&a)?)?;
            match format {
                Format::Csv => println!("{v}"),
                Format::Json => print_fields(&[("pdf", v)], format),
            }
        }
        Vg::Moments { params: a } => {
            let (mean, variance) = vg_moments(&params(&a)?);
            match format {
                Format::Csv => println!("{mean} {variance}"),
                Format::Json => print_fields(&[("mean", mean), ("variance", variance)], format),
            }
        }
    }
    Ok(())
}

fn experiment(cmd: Experiment, seed: Option<u64>) -> dyncorr::Result<Outcome> {
    let Experiment::Run { name, config, out } = cmd;
    let kind: ExperimentKind = name.parse()?;
    let mut cfg = ExperimentConfig::load(&config)?;
    if cfg.experiment != kind {
        return Err(Error::Config(format!(
            "--name {kind} does not match config experiment {}",
            cfg.experiment
        )));
    }
    if let Some(seed) = seed {
        cfg.master_seed = seed;
    }
    let report = run_experiment(&cfg)?;
    write_report(&report, &out, &run_info())?;
    for a in &report.assertions {
        println!("{} {}: {}", if a.passed { "PASS" } else { "FAIL" }, a.name, a.detail);
    }
    Ok(if report.all_passed() {
        Outcome::Ok
    } else {
        Outcome::AssertionsFailed
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate(cmd) => simulate(cmd, cli.seed.unwrap_or(0), cli.format).map(|_| Outcome::Ok),
        Command::Estimate(cmd) => estimate(cmd, cli.format).map(|_| Outcome::Ok),
        Command::Oracle(cmd) => oracle(cmd, cli.format).map(|_| Outcome::Ok),
        Command::Vg(cmd) => vg(cmd, cli.format).map(|_| Outcome::Ok),
        Command::Experiment(cmd) => experiment(cmd, cli.seed),
    };
    match result {
        Ok(Outcome::Ok) => ExitCode::SUCCESS,
        Ok(Outcome::AssertionsFailed) => ExitCode::from(EXIT_ASSERTION),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_RUNTIME)
        }
    }
}

//! Batch front end: computation, verification suites, fitting and the
//! end-to-end report, with CSV or JSON output.

use std::ffi::OsString;
use std::fs::File;
use std::io::{self, Read, Write};
use std::ops::RangeInclusive;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use brocot::asymptotic_fit::{error_slope, extrapolate_limit, fit_scaled, LIMIT_EXPONENTS};
use brocot::brocot_sums::{
    bounds_report, decomposition_check, enumerate_a, moment_series, partition_sums, r0_sum, sigma_f, sigma_q,
    truncated_coefficient, unit_fraction_sum, unit_fraction_sum_traversal, CoefficientKind, ExactSum, Mode,
    MomentQuery, ParamRegime, PartitionParams, PartitionScheme, SampleValue, SeriesKind, SeriesSample,
};
use brocot::continuants::{continuant, neighbor_denominators, split_identity_check};
use brocot::stern_brocot::{brocot_fractions, gaps, level, level_stats, TraversalConfig, LEVEL_GUARD};
use brocot::zeta_constants::{c0_bruteforce, constants_for, constants_with_truncation, totient_sum_oracle, zeta};
use clap::{Args, Parser, Subcommand, ValueEnum};
use num_bigint::BigUint;
use num_traits::{One, Pow};
use serde::Serialize;
use serde_json::{json, Value};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VERIFY_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

/// Default worker count when `--workers` is absent.
pub const WORKERS_ENV: &str = "BROCOT_WORKERS";

pub const SERIES_HEADER: [&str; 5] = ["n", "beta", "kind", "mode", "value"];

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] brocot::Error),
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Suite {
    Identities,
    Bounds,
    Decomposition,
    Oracle,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Regime {
    IntervalExpansion,
    ContinuantExpansion,
    BalancedWidth,
}

impl From<Regime> for ParamRegime {
    fn from(r: Regime) -> Self {
        match r {
            Regime::IntervalExpansion => ParamRegime::IntervalExpansion,
            Regime::ContinuantExpansion => ParamRegime::ContinuantExpansion,
            Regime::BalancedWidth => ParamRegime::BalancedWidth,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "brocot", version, about = "Moment sums over Stern-Brocot partitions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Output format; tables and series default to csv, documents to json.
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// Write output here instead of stdout.
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    /// Traversal worker threads (default from BROCOT_WORKERS, else 1).
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Lift the size guards on levels, enumerations and exact sums.
    #[arg(long, global = true)]
    override_guards: bool,
}

#[derive(Debug, Args)]
struct NArgs {
    /// A single order.
    #[arg(long, conflicts_with = "n_range")]
    n: Option<u32>,
    /// An inclusive range `lo..hi`.
    #[arg(long, value_parser = parse_range)]
    n_range: Option<RangeInclusive<u32>>,
}

impl NArgs {
    fn range(&self) -> CliResult<RangeInclusive<u32>> {
        match (self.n, &self.n_range) {
            (Some(n), None) => Ok(n..=n),
            (None, Some(r)) => Ok(r.clone()),
            _ => Err(CliError::Usage("exactly one of --n or --n-range is required".into())),
        }
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Sizes and extreme gaps of F_n, or the fractions themselves with --list.
    Levels {
        #[command(flatten)]
        n: NArgs,
        #[arg(long)]
        list: bool,
    },
    /// The gaps of F_n as denominator frames.
    Gaps {
        #[arg(long)]
        n: u32,
    },
    /// sigma_beta(F_n), the moment sum of the gap lengths.
    SigmaF(SeriesArgs),
    /// sigma_beta(n), the sum of q^{-2 beta} over the new fractions of order n.
    SigmaQ(SeriesArgs),
    /// Splits a moment sum over the cells of A_n.
    Partition {
        #[arg(long)]
        n: u32,
        #[arg(long)]
        beta: f64,
        #[arg(long, value_enum, default_value = "interval")]
        scheme: SchemeArg,
        #[arg(long, value_enum)]
        regime: Option<Regime>,
        #[arg(long)]
        r: Option<f64>,
        #[arg(long)]
        w: Option<u64>,
        #[arg(long, value_enum, default_value = "fast-float")]
        mode: ModeArg,
    },
    /// Runs a verification suite; exits 1 if any check fails.
    Verify {
        #[arg(long, value_enum)]
        suite: Suite,
        #[arg(long, default_value_t = 12)]
        n_max: u32,
    },
    /// The Riemann zeta function at a real argument.
    Zeta {
        #[arg(long, allow_negative_numbers = true)]
        s: f64,
        #[arg(long, default_value_t = 1e-13)]
        target_error: f64,
    },
    /// Zeta ratios and limit constants for one beta.
    Constants {
        #[arg(long)]
        beta: f64,
        #[arg(long, default_value_t = brocot::zeta_constants::C0_DEFAULT_VMAX)]
        v_max: u32,
    },
    /// A truncated correction-coefficient series.
    Coeff {
        #[arg(long)]
        kind: String,
        #[arg(long)]
        k: u32,
        #[arg(long)]
        beta: f64,
        #[arg(long, default_value_t = 24)]
        v_max: u32,
    },
    /// Fits n^e value ~ sum_j c_j n^{-e_j} to a stored series.
    Fit {
        #[arg(long)]
        input: PathBuf,
        /// Input format; guessed from the extension when absent.
        #[arg(long, value_enum)]
        input_format: Option<Format>,
        #[arg(long, default_value = "0,1,2", value_delimiter = ',', value_parser = parse_exponents)]
        exponents: Vec<f64>,
        #[arg(long, default_value_t = 0.0)]
        leading_exponent: f64,
        /// Also estimate the decay rate of the error against this limit.
        #[arg(long)]
        limit: Option<f64>,
    },
    /// End-to-end comparison of measured series against predicted constants.
    Report {
        #[arg(long)]
        beta: f64,
        #[arg(long, default_value_t = 30)]
        n_max: u32,
        #[arg(long, default_value_t = 30)]
        c0_v_max: u32,
        #[arg(long, default_value_t = 24)]
        coeff_v_max: u32,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum SchemeArg {
    Continuant,
    Interval,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum ModeArg {
    Exact,
    FastFloat,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Exact => Mode::Exact,
            ModeArg::FastFloat => Mode::FastFloat,
        }
    }
}

#[derive(Debug, Args)]
struct SeriesArgs {
    #[arg(long)]
    beta: f64,
    #[command(flatten)]
    n: NArgs,
    #[arg(long, value_enum, default_value = "fast-float")]
    mode: ModeArg,
}

/// Parses `lo..hi` or `lo..=hi`, both inclusive.
pub fn parse_range(s: &str) -> std::result::Result<RangeInclusive<u32>, String> {
    let (lo, hi) = s
        .split_once("..=")
        .or_else(|| s.split_once(".."))
        .ok_or_else(|| format!("malformed range `{s}`, expected lo..hi"))?;
    let lo: u32 = lo.trim().parse().map_err(|_| format!("malformed range start in `{s}`"))?;
    let hi: u32 = hi.trim().parse().map_err(|_| format!("malformed range end in `{s}`"))?;
    if lo > hi {
        return Err(format!("empty range `{s}`"));
    }
    Ok(lo..=hi)
}

fn parse_exponents(s: &str) -> std::result::Result<f64, String> {
    s.trim().parse().map_err(|_| format!("bad exponent `{s}`"))
}

/// Worker count from the flag, else the environment, else 1.
pub fn resolve_workers(flag: Option<usize>, env: Option<&str>) -> CliResult<usize> {
    let w = match (flag, env) {
        (Some(w), _) => w,
        (None, Some(v)) => v
            .trim()
            .parse()
            .map_err(|_| CliError::Usage(format!("{WORKERS_ENV}={v} is not a worker count")))?,
        (None, None) => 1,
    };
    if w == 0 {
        return Err(CliError::Usage("worker count must be at least 1".into()));
    }
    Ok(w)
}

fn format_f64(x: f64) -> String {
    format!("{x:?}")
}

fn format_beta(beta: f64) -> String {
    format!("{beta}")
}

/// Serializes samples as CSV (`n,beta,kind,mode,value`) or a JSON array of
/// the same records. Exact values are `p/q` strings; floats round-trip.
pub fn series_to_bytes(samples: &[SeriesSample], format: Format) -> CliResult<Vec<u8>> {
    if let Some(first) = samples.first() {
        if samples.iter().any(|s| s.kind != first.kind) {
            return Err(brocot::Error::MixedSamples.into());
        }
    }
    match format {
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(SERIES_HEADER)?;
            for s in samples {
                w.write_record([
                    s.n.to_string(),
                    format_beta(s.beta),
                    s.kind.to_string(),
                    s.mode().to_string(),
                    s.value.to_string(),
                ])?;
            }
            w.into_inner().map_err(|e| CliError::Io(e.into_error()))
        }
        Format::Json => {
            let records: Vec<Value> = samples
                .iter()
                .map(|s| {
                    let value = match &s.value {
                        SampleValue::Exact(_) => Value::String(s.value.to_string()),
                        SampleValue::Float(x) => json!(x),
                    };
                    json!({
                        "n": s.n,
                        "beta": s.beta,
                        "kind": s.kind.to_string(),
                        "mode": s.mode().to_string(),
                        "value": value,
                    })
                })
                .collect();
            let mut out = serde_json::to_vec_pretty(&records)?;
            out.push(b'\n');
            Ok(out)
        }
    }
}

/// Writes a series to `path`, or stdout when `path` is `None`.
pub fn write_series(samples: &[SeriesSample], format: Format, path: Option<&Path>) -> CliResult<()> {
    emit(&series_to_bytes(samples, format)?, path)
}

pub fn parse_series(bytes: &[u8], format: Format) -> CliResult<Vec<SeriesSample>> {
    let record = |n: &str, beta: &str, kind: &str, mode: &str, value: &str| -> CliResult<SeriesSample> {
        let mode = Mode::from_str(mode)?;
        Ok(SeriesSample {
            n: n.trim().parse().map_err(|_| CliError::Usage(format!("bad n `{n}`")))?,
            beta: beta.trim().parse().map_err(|_| CliError::Usage(format!("bad beta `{beta}`")))?,
            kind: SeriesKind::from_str(kind)?,
            value: SampleValue::parse(value, mode)?,
        })
    };
    match format {
        Format::Csv => {
            let mut r = csv::Reader::from_reader(bytes);
            if r.headers()?.iter().ne(SERIES_HEADER) {
                return Err(CliError::Usage(format!("series header must be {}", SERIES_HEADER.join(","))));
            }
            r.records()
                .map(|rec| {
                    let rec = rec?;
                    if rec.len() != 5 {
                        return Err(CliError::Usage("series rows need five fields".into()));
                    }
                    record(&rec[0], &rec[1], &rec[2], &rec[3], &rec[4])
                })
                .collect()
        }
        Format::Json => {
            let rows: Vec<Value> = serde_json::from_slice(bytes)?;
            rows.iter()
                .map(|row| {
                    let field = |k: &str| -> CliResult<String> {
                        match row.get(k) {
                            Some(Value::String(s)) => Ok(s.clone()),
                            Some(Value::Number(x)) => Ok(x.to_string()),
                            _ => Err(CliError::Usage(format!("series record lacks `{k}`"))),
                        }
                    };
                    let value = match row.get("value") {
                        Some(Value::Number(x)) => {
                            format_f64(x.as_f64().ok_or_else(|| CliError::Usage("bad value".into()))?)
                        }
                        _ => field("value")?,
                    };
                    record(&field("n")?, &field("beta")?, &field("kind")?, &field("mode")?, &value)
                })
                .collect()
        }
    }
}

pub fn read_series(path: &Path, format: Format) -> CliResult<Vec<SeriesSample>> {
    let mut bytes = Vec::new();
    File::open(path)?.read_to_end(&mut bytes)?;
    parse_series(&bytes, format)
}

fn emit(bytes: &[u8], path: Option<&Path>) -> CliResult<()> {
    match path {
        Some(p) => File::create(p)?.write_all(bytes)?,
        None => {
            let mut out = io::stdout().lock();
            out.write_all(bytes)?;
            out.flush()?;
        }
    }
    Ok(())
}

fn rows_to_bytes<T: Serialize>(rows: &[T], format: Format) -> CliResult<Vec<u8>> {
    match format {
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            for r in rows {
                w.serialize(r)?;
            }
            w.into_inner().map_err(|e| CliError::Io(e.into_error()))
        }
        Format::Json => {
            let mut out = serde_json::to_vec_pretty(rows)?;
            out.push(b'\n');
            Ok(out)
        }
    }
}

/// JSON as is; CSV as `key,value` rows with nested values JSON-encoded.
fn document_to_bytes(doc: &Value, format: Format) -> CliResult<Vec<u8>> {
    match format {
        Format::Json => {
            let mut out = serde_json::to_vec_pretty(doc)?;
            out.push(b'\n');
            Ok(out)
        }
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(["key", "value"])?;
            if let Value::Object(map) = doc {
                for (k, v) in map {
                    let v = match v {
                        Value::String(s) => s.clone(),
                        other => other.to_string(),
                    };
                    w.write_record([k.as_str(), v.as_str()])?;
                }
            }
            w.into_inner().map_err(|e| CliError::Io(e.into_error()))
        }
    }
}

/// One verification predicate and its outcome.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub suite: String,
    pub check: String,
    pub n: Option<u32>,
    pub pass: bool,
    pub detail: String,
}

impl Check {
    fn new(suite: Suite, check: &str, n: Option<u32>, pass: bool, detail: String) -> Self {
        Self {
            suite: format!("{suite:?}").to_lowercase(),
            check: check.to_string(),
            n,
            pass,
            detail,
        }
    }
}

fn check_guard(what: &'static str, n: u32, limit: u32, override_guards: bool) -> CliResult<()> {
    if n > limit && !override_guards {
        return Err(brocot::Error::GuardExceeded {
            what,
            n: n as u64,
            limit: limit as u64,
        }
        .into());
    }
    Ok(())
}

/// Runs one verification suite over orders up to `n_max`.
pub fn verify(suite: Suite, n_max: u32, config: &TraversalConfig, override_guards: bool) -> CliResult<Vec<Check>> {
    let mut checks = Vec::new();
    match suite {
        Suite::Identities => {
            for n in 1..=n_max {
                let s = sigma_f(
                    &MomentQuery::new(1.0, n, Mode::Exact)
                        .with_config(*config)
                        .with_override(override_guards),
                )?;
                let pass = matches!(&s.value, SampleValue::Exact(r) if r.is_one());
                checks.push(Check::new(suite, "unit_moment", Some(n), pass, s.value.to_string()));
            }
            for n in 2..=n_max {
                let a = unit_fraction_sum(n, override_guards)?;
                let b = unit_fraction_sum_traversal(n, config)?;
                checks.push(Check::new(
                    suite,
                    "unit_fraction_sum",
                    Some(n),
                    a.is_one() && b.is_one(),
                    format!("enumeration {a}, traversal {b}"),
                ));
                let mut split_ok = true;
                let mut mirror_ok = true;
                let mut neighbours_ok = true;
                let mut first_failure: Option<String> = None;
                for a in enumerate_a(n, override_guards)? {
                    for i in 1..=a.len() {
                        if !split_identity_check(&a, i)?.holds {
                            split_ok = false;
                            first_failure.get_or_insert_with(|| format!("split at {i} of {a}"));
                        }
                    }
                    if continuant(&a) != continuant(&a.reversed()) {
                        mirror_ok = false;
                        first_failure.get_or_insert_with(|| format!("mirror of {a}"));
                    }
                    let t = neighbor_denominators(&a)?;
                    if t.q != &t.q_minus + &t.q_plus {
                        neighbours_ok = false;
                        first_failure.get_or_insert_with(|| format!("neighbours of {a}"));
                    }
                }
                let detail = first_failure.unwrap_or_default();
                checks.push(Check::new(suite, "split_identity", Some(n), split_ok, detail.clone()));
                checks.push(Check::new(suite, "mirror_symmetry", Some(n), mirror_ok, detail.clone()));
                checks.push(Check::new(suite, "neighbour_sum", Some(n), neighbours_ok, detail));
            }
        }
        Suite::Bounds => {
            for n in 4..=n_max {
                for beta in [1.25, 2.0, 3.0] {
                    for r in [1.0, 2.0] {
                        let params = PartitionParams::new(n, r, PartitionParams::default_w(n))?;
                        let report = bounds_report(n, beta, &params)?;
                        for b in &report.hard {
                            checks.push(Check::new(
                                suite,
                                b.name,
                                Some(n),
                                b.holds,
                                format!("beta {beta}, r {r}: {} <= {}", format_f64(b.value), format_f64(b.bound)),
                            ));
                        }
                    }
                }
            }
        }
        Suite::Decomposition => {
            for n in 3..=n_max {
                for w in (1..).take_while(|w| 2 * w < n as u64) {
                    let r = decomposition_check(n, w)?;
                    checks.push(Check::new(
                        suite,
                        "dominant_part_decomposition",
                        Some(n),
                        r.holds(),
                        format!(
                            "w {w}: direct {}, parametrized {}, disjoint {}",
                            r.direct_count, r.parametrized_count, r.pairwise_disjoint
                        ),
                    ));
                }
            }
            for w in [2u64, 3] {
                for beta in [1.25, 2.0, 3.0] {
                    let oracle = c0_bruteforce(beta, (w - 1) as u32)?.value;
                    for n in (2 * w + 1)..=(2 * w + 4) {
                        let v = r0_sum(n as u32, w, beta)?;
                        checks.push(Check::new(
                            suite,
                            "prefix_suffix_sum_n_independent",
                            Some(n as u32),
                            (v - oracle).abs() <= 1e-12 * oracle,
                            format!("w {w}, beta {beta}: {} vs {}", format_f64(v), format_f64(oracle)),
                        ));
                    }
                }
            }
        }
        Suite::Oracle => {
            for n in 2..=n_max {
                check_guard("level", n, LEVEL_GUARD, override_guards)?;
                let mut tree: Vec<u64> = brocot_fractions(n, override_guards)?.iter().map(|f| f.den()).collect();
                let comps = enumerate_a(n, override_guards)?;
                let mut direct = ExactSum::new();
                let mut cf: Vec<u64> = Vec::with_capacity(comps.len());
                for a in &comps {
                    let q: BigUint = continuant(a);
                    direct.add_recip(&Pow::pow(&q, 4u32));
                    cf.push(u64::try_from(&q).unwrap_or(u64::MAX));
                }
                tree.sort_unstable();
                cf.sort_unstable();
                checks.push(Check::new(
                    suite,
                    "denominator_multiset",
                    Some(n),
                    tree == cf,
                    format!("{} fractions", tree.len()),
                ));
                let traversal = sigma_q(
                    &MomentQuery::new(2.0, n, Mode::Exact)
                        .with_config(*config)
                        .with_override(override_guards),
                )?;
                let pass = matches!(&traversal.value, SampleValue::Exact(r) if *r == direct.to_rational());
                checks.push(Check::new(suite, "sigma_q_two_paths", Some(n), pass, traversal.value.to_string()));
            }
            let pi = std::f64::consts::PI;
            for (s, exact) in [(2.0, pi * pi / 6.0), (4.0, pi.powi(4) / 90.0)] {
                let z = zeta(s, 1e-13)?;
                checks.push(Check::new(
                    suite,
                    &format!("zeta_{s}_closed_form"),
                    None,
                    (z - exact).abs() < 1e-12,
                    format!("{} vs {}", format_f64(z), format_f64(exact)),
                ));
            }
            let t = totient_sum_oracle(2.0, 1_000_000)?;
            let target = constants_for(2.0)?.ratio - 1.0;
            checks.push(Check::new(
                suite,
                "totient_series",
                None,
                (t.value - target).abs() < 1e-6,
                format!("{} vs {}", format_f64(t.value), format_f64(target)),
            ));
        }
    }
    Ok(checks)
}

/// Tunables for [`report`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ReportOptions {
    pub config: TraversalConfig,
    pub c0_v_max: u32,
    pub coeff_v_max: u32,
}

impl Default for ReportOptions {
    fn default() -> Self {
        Self {
            config: TraversalConfig::default(),
            c0_v_max: 30,
            coeff_v_max: 24,
        }
    }
}

/// Relative tolerance on the extrapolated main term: 1% for `beta >= 2`,
/// 2% below, where convergence is slower.
pub fn main_term_tolerance(beta: f64) -> f64 {
    if beta >= 2.0 {
        0.01
    } else {
        0.02
    }
}

pub const SLOPE_BAND: (f64, f64) = (-1.4, -0.6);
pub const MIN_R_SQUARED: f64 = 0.9;
pub const C0_TOLERANCE: f64 = 0.05;
pub const COEFFICIENT_TOLERANCE: f64 = 0.10;

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

/// First fitting window: `[8, n_max]`, widened down for short runs.
pub fn report_window(n_max: u32) -> (u32, u32) {
    (8.min(n_max.saturating_sub(6)).max(2), n_max)
}

/// Computes both series for `n` in the report window, extrapolates and
/// fits them, and compares the results with the predicted constants.
pub fn report(beta: f64, n_max: u32, options: &ReportOptions) -> CliResult<Value> {
    brocot::brocot_sums::check_beta(beta)?;
    if n_max < 10 {
        return Err(CliError::Usage(format!("report needs n_max >= 10, got {n_max}")));
    }
    let (lo, hi) = report_window(n_max);
    let clock = Instant::now();
    let series = moment_series(beta, lo, hi, &options.config, false)?;
    let main_fit = fit_scaled(&series.sigma_f, beta, &LIMIT_EXPONENTS)?;
    let series_seconds = clock.elapsed().as_secs_f64();

    let clock = Instant::now();
    let consts = constants_with_truncation(beta, brocot::zeta_constants::C0_DEFAULT_VMAX.min(options.c0_v_max))?;
    let c0 = c0_bruteforce(beta, options.c0_v_max)?;
    let c0_oracle = c0.value + c0.tail;
    let e1 = truncated_coefficient(CoefficientKind::E, 1, beta, options.coeff_v_max)?;
    let constants_seconds = clock.elapsed().as_secs_f64();

    let main = main_fit.coefficients[0];
    let main_tol = main_term_tolerance(beta);
    let main_pass = rel(main, consts.main_term) <= main_tol;

    let slope = error_slope(&series.sigma_f, consts.main_term, beta)?;
    let slope_pass =
        slope.slope >= SLOPE_BAND.0 && slope.slope <= SLOPE_BAND.1 && slope.r_squared >= MIN_R_SQUARED;

    let c0_fit = extrapolate_limit(&series.sigma_q, 2.0 * beta)?;
    let gap_oracle = rel(c0_fit, c0_oracle);
    let gap_closed = rel(c0_fit, consts.c0_closed_form);
    let matched = match (gap_oracle <= C0_TOLERANCE, gap_closed <= C0_TOLERANCE) {
        (true, true) => "both",
        (true, false) => "bruteforce",
        (false, true) => "closed_form",
        (false, false) => "neither",
    };
    let closest = if gap_oracle <= gap_closed { "bruteforce" } else { "closed_form" };
    let c0_pass = gap_oracle <= C0_TOLERANCE;

    let c1 = main_fit.coefficient(1.0).unwrap_or(f64::NAN);
    let e1_total = e1.value + e1.tail;
    let coeff_pass = rel(c1, e1.value) <= COEFFICIENT_TOLERANCE;

    // Informational only: the same fits over the second half of the window.
    let late_lo = ((lo + hi) / 2).min(hi.saturating_sub(6));
    let late = |samples: &[SeriesSample], e: f64| -> Option<f64> {
        let tail: Vec<SeriesSample> = samples.iter().filter(|s| s.n >= late_lo).cloned().collect();
        extrapolate_limit(&tail, e).ok()
    };

    let series_json = |samples: &[SeriesSample]| -> Vec<Value> {
        samples.iter().map(|s| json!({"n": s.n, "value": s.value.to_f64()})).collect()
    };
    let checks = [
        ("main_term", main_pass),
        ("error_slope", slope_pass),
        ("c0_limit", c0_pass),
        ("first_correction", coeff_pass),
    ];
    Ok(json!({
        "beta": beta,
        "n_max": n_max,
        "window": [lo, hi],
        "workers": options.config.workers,
        "constants": {
            "zeta_2beta_minus_1": consts.zeta_hi,
            "zeta_2beta": consts.zeta_lo,
            "ratio": consts.ratio,
            "main_term": consts.main_term,
            "c0_closed_form": consts.c0_closed_form,
        },
        "main_term": {
            "extrapolated": main,
            "predicted": consts.main_term,
            "relative_error": rel(main, consts.main_term),
            "tolerance": main_tol,
            "fit_exponents": main_fit.exponents,
            "fit_coefficients": main_fit.coefficients,
            "residual_rms": main_fit.residual_rms,
            "pass": main_pass,
        },
        "error_slope": {
            "slope": slope.slope,
            "intercept": slope.intercept,
            "r_squared": slope.r_squared,
            "band": [SLOPE_BAND.0, SLOPE_BAND.1],
            "min_r_squared": MIN_R_SQUARED,
            "pass": slope_pass,
        },
        "c0": {
            "extrapolated": c0_fit,
            "bruteforce": c0_oracle,
            "bruteforce_truncated": c0.value,
            "bruteforce_tail": c0.tail,
            "bruteforce_v_max": options.c0_v_max,
            "closed_form": consts.c0_closed_form,
            "gap_to_bruteforce": gap_oracle,
            "gap_to_closed_form": gap_closed,
            "tolerance": C0_TOLERANCE,
            "matched": matched,
            "closest": closest,
            "closed_form_discrepancy": gap_closed > C0_TOLERANCE,
            "pass": c0_pass,
        },
        "first_correction": {
            "fitted": c1,
            "series": e1.value,
            "series_tail": e1.tail,
            "series_with_tail": e1_total,
            "series_v_max": options.coeff_v_max,
            "relative_error": rel(c1, e1.value),
            "relative_error_with_tail": rel(c1, e1_total),
            "tolerance": COEFFICIENT_TOLERANCE,
            "pass": coeff_pass,
        },
        "diagnostics": {
            "late_window": [late_lo, hi],
            "late_main_term": late(&series.sigma_f, beta),
            "late_c0": late(&series.sigma_q, 2.0 * beta),
        },
        "timings": {
            "series_and_fit_seconds": series_seconds,
            "constants_seconds": constants_seconds,
        },
        "sigma_f": series_json(&series.sigma_f),
        "sigma_q": series_json(&series.sigma_q),
        "checks": checks.iter().map(|(k, p)| json!({"name": k, "pass": p})).collect::<Vec<_>>(),
        "all_pass": checks.iter().all(|c| c.1),
    }))
}

fn series_samples(
    kind: SeriesKind,
    args: &SeriesArgs,
    config: &TraversalConfig,
    override_guards: bool,
) -> CliResult<Vec<SeriesSample>> {
    let range = args.n.range()?;
    let mode = Mode::from(args.mode);
    if mode == Mode::FastFloat {
        let s = moment_series(args.beta, *range.start(), *range.end(), config, override_guards)?;
        return Ok(match kind {
            SeriesKind::SigmaF => s.sigma_f,
            SeriesKind::SigmaQ => s.sigma_q,
        });
    }
    range
        .map(|n| {
            let q = MomentQuery::new(args.beta, n, mode)
                .with_config(*config)
                .with_override(override_guards);
            Ok(match kind {
                SeriesKind::SigmaF => sigma_f(&q)?,
                SeriesKind::SigmaQ => sigma_q(&q)?,
            })
        })
        .collect()
}

#[derive(Serialize)]
struct LevelRow {
    n: u32,
    count_fractions: u64,
    count_gaps: u64,
    min_gap: String,
    max_gap: String,
}

#[derive(Serialize)]
struct FractionRow {
    n: u32,
    index: usize,
    fraction: String,
}

#[derive(Serialize)]
struct GapRow {
    index: u64,
    q_left: u64,
    q_right: u64,
    length: String,
}

#[derive(Serialize)]
struct CellRow {
    cell: String,
    members: u64,
    value: String,
}

/// What a subcommand produced: bytes to emit and the exit status.
struct Outcome {
    bytes: Vec<u8>,
    code: i32,
}

impl Outcome {
    fn ok(bytes: Vec<u8>) -> Self {
        Self { bytes, code: EXIT_OK }
    }
}

fn execute(cli: &Cli, workers: usize) -> CliResult<Outcome> {
    let config = TraversalConfig::with_workers(workers);
    let og = cli.override_guards;
    let table = cli.format.unwrap_or(Format::Csv);
    let document = cli.format.unwrap_or(Format::Json);
    match &cli.command {
        Command::Levels { n, list } => {
            let range = n.range()?;
            if *list {
                let mut rows = Vec::new();
                for n in range {
                    for (index, f) in level(n, og)?.iter().enumerate() {
                        rows.push(FractionRow {
                            n,
                            index,
                            fraction: f.to_string(),
                        });
                    }
                }
                return Ok(Outcome::ok(rows_to_bytes(&rows, table)?));
            }
            let mut rows = Vec::new();
            for n in range {
                check_guard("level", n, LEVEL_GUARD, og)?;
                let s = level_stats(n, &config)?;
                rows.push(LevelRow {
                    n,
                    count_fractions: s.count_fractions,
                    count_gaps: s.count_gaps,
                    min_gap: s.min_gap.to_string(),
                    max_gap: s.max_gap.to_string(),
                });
            }
            Ok(Outcome::ok(rows_to_bytes(&rows, table)?))
        }
        Command::Gaps { n } => {
            check_guard("gap listing", *n, LEVEL_GUARD, og)?;
            let rows: Vec<GapRow> = gaps(*n)?
                .enumerate()
                .map(|(i, g)| GapRow {
                    index: i as u64,
                    q_left: g.q_left,
                    q_right: g.q_right,
                    length: format!("1/{}", g.q_left as u128 * g.q_right as u128),
                })
                .collect();
            Ok(Outcome::ok(rows_to_bytes(&rows, table)?))
        }
        Command::SigmaF(args) => Ok(Outcome::ok(series_to_bytes(
            &series_samples(SeriesKind::SigmaF, args, &config, og)?,
            table,
        )?)),
        Command::SigmaQ(args) => Ok(Outcome::ok(series_to_bytes(
            &series_samples(SeriesKind::SigmaQ, args, &config, og)?,
            table,
        )?)),
        Command::Partition {
            n,
            beta,
            scheme,
            regime,
            r,
            w,
            mode,
        } => {
            let scheme = match scheme {
                SchemeArg::Continuant => PartitionScheme::Continuant,
                SchemeArg::Interval => PartitionScheme::Interval,
            };
            let regime = regime.map(ParamRegime::from).unwrap_or(match scheme {
                PartitionScheme::Continuant => ParamRegime::ContinuantExpansion,
                PartitionScheme::Interval => ParamRegime::IntervalExpansion,
            });
            let base = PartitionParams::for_regime(regime, *n, *beta)?;
            let params = PartitionParams::new(*n, r.unwrap_or(base.r), w.unwrap_or(base.w))?;
            let rep = partition_sums(*n, *beta, &params, scheme, Mode::from(*mode), og)?;
            let mut rows: Vec<CellRow> = rep
                .entries
                .iter()
                .map(|e| CellRow {
                    cell: e.cell.label().to_string(),
                    members: e.members,
                    value: e.value.to_string(),
                })
                .collect();
            rows.push(CellRow {
                cell: "whole".into(),
                // The two halves of an interval weight share members.
                members: 1u64 << (n - 2),
                value: rep.whole.to_string(),
            });
            let ok = rep.parts_sum_to_whole();
            if !ok {
                eprintln!("FAIL partition cells do not sum to the whole");
            }
            Ok(Outcome {
                bytes: rows_to_bytes(&rows, table)?,
                code: if ok { EXIT_OK } else { EXIT_VERIFY_FAILED },
            })
        }
        Command::Verify { suite, n_max } => {
            let checks = verify(*suite, *n_max, &config, og)?;
            let failed: Vec<&Check> = checks.iter().filter(|c| !c.pass).collect();
            for c in &failed {
                let n = c.n.map_or(String::new(), |n| format!(" n={n}"));
                eprintln!("FAIL {}/{}{}: {}", c.suite, c.check, n, c.detail);
            }
            eprintln!("{} checks, {} failed", checks.len(), failed.len());
            Ok(Outcome {
                bytes: rows_to_bytes(&checks, table)?,
                code: if failed.is_empty() { EXIT_OK } else { EXIT_VERIFY_FAILED },
            })
        }
        Command::Zeta { s, target_error } => {
            let z = zeta(*s, *target_error)?;
            let bytes = match cli.format {
                None => format!("{z}\n").into_bytes(),
                Some(f) => document_to_bytes(&json!({"s": s, "value": z}), f)?,
            };
            Ok(Outcome::ok(bytes))
        }
        Command::Constants { beta, v_max } => {
            let c = constants_with_truncation(*beta, *v_max)?;
            let doc = json!({
                "beta": c.beta,
                "zeta_2beta_minus_1": c.zeta_hi,
                "zeta_2beta": c.zeta_lo,
                "ratio": c.ratio,
                "main_term": c.main_term,
                "c0_closed_form": c.c0_closed_form,
                "c0_bruteforce": c.c0_oracle,
                "c0_bruteforce_tail": c.c0_oracle_tail,
                "c0_v_max": v_max,
            });
            Ok(Outcome::ok(document_to_bytes(&doc, document)?))
        }
        Command::Coeff { kind, k, beta, v_max } => {
            let e = truncated_coefficient(CoefficientKind::from_str(kind)?, *k, *beta, *v_max)?;
            let doc = json!({
                "kind": e.kind.to_string(),
                "k": e.k,
                "beta": e.beta,
                "v_max": e.v_max,
                "value": e.value,
                "tail": e.tail,
                "disputed": e.disputed,
            });
            Ok(Outcome::ok(document_to_bytes(&doc, document)?))
        }
        Command::Fit {
            input,
            input_format,
            exponents,
            leading_exponent,
            limit,
        } => {
            let fmt = input_format.unwrap_or(match input.extension().and_then(|e| e.to_str()) {
                Some("json") => Format::Json,
                _ => Format::Csv,
            });
            let samples = read_series(input, fmt)?;
            let model = fit_scaled(&samples, *leading_exponent, exponents)?;
            let mut doc = json!({
                "leading_exponent": leading_exponent,
                "exponents": model.exponents,
                "coefficients": model.coefficients,
                "residual_rms": model.residual_rms,
                "fit_window": [model.fit_window.0, model.fit_window.1],
            });
            if let Some(l) = limit {
                let s = error_slope(&samples, *l, *leading_exponent)?;
                doc["slope"] = json!({"slope": s.slope, "intercept": s.intercept, "r_squared": s.r_squared});
            }
            Ok(Outcome::ok(document_to_bytes(&doc, document)?))
        }
        Command::Report {
            beta,
            n_max,
            c0_v_max,
            coeff_v_max,
        } => {
            let opts = ReportOptions {
                config,
                c0_v_max: *c0_v_max,
                coeff_v_max: *coeff_v_max,
            };
            let doc = report(*beta, *n_max, &opts)?;
            let all = doc["all_pass"].as_bool().unwrap_or(false);
            if let Some(checks) = doc["checks"].as_array() {
                for c in checks.iter().filter(|c| c["pass"] == json!(false)) {
                    eprintln!("FAIL report/{}", c["name"].as_str().unwrap_or("?"));
                }
            }
            Ok(Outcome {
                bytes: document_to_bytes(&doc, document)?,
                code: if all { EXIT_OK } else { EXIT_VERIFY_FAILED },
            })
        }
    }
}

/// Parses `argv` (program name first), runs the subcommand and returns the
/// exit code: 0 success, 1 a verification predicate failed, 2 bad usage or
/// any other error.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let env = std::env::var(WORKERS_ENV).ok();
    let result = resolve_workers(cli.workers, env.as_deref()).and_then(|w| execute(&cli, w));
    match result.and_then(|o| emit(&o.bytes, cli.output.as_deref()).map(|_| o.code)) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_USAGE
        }
    }
}

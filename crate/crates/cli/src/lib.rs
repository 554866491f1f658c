//! Command-line front end for the pigeonhole experiments.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::ffi::OsString;
use std::path::PathBuf;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};
use thiserror::Error;

use pigeonhole::horocycle::{convergence_table, HorocycleSection, MRule, Regime, TestFunction};
use pigeonhole::mc::{estimate_ej, estimate_void, haar_expectation, minkowski_demo};
use pigeonhole::process::{void_fraction, IntervalUnion};
use pigeonhole::sequence::{
    histogram, perfect_powers_up_to, proportions, second_moment, term_count, Alpha,
};
use pigeonhole::{Error, Region};

pub mod output;

use output::{render_csv, render_json, summarize, Output, Table};

/// Seed used when `--seed` is not given.
pub const DEFAULT_SEED: u64 = 20_240_917;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_CAPACITY: i32 = 3;
pub const EXIT_IO: i32 = 4;
pub const EXIT_STARVED: i32 = 5;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] Error),
    #[error("cannot write {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Io { .. } => EXIT_IO,
            CliError::Core(e) => match e {
                Error::Capacity { .. } => EXIT_CAPACITY,
                Error::ConditioningStarved { .. } => EXIT_STARVED,
                _ => EXIT_CONFIG,
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Parser)]
#[command(
    name = "pigeonhole",
    version,
    about = "Pigeonhole statistics of n^α mod 1 and their random-lattice limits"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Proportions E_{j,N}(s) of buckets holding j terms.
    EmpiricalHist(RunArgs),
    /// Monte Carlo E_j(s) for Haar-random affine lattices, with a Poisson column.
    LimitHist(RunArgs),
    /// Empirical proportions at each N against the limit and Poisson.
    Compare(RunArgs),
    /// Mean, second moment and variance of the bucket counts.
    SecondMoment(RunArgs),
    /// Void probabilities for a union of intervals, empirical and limit.
    Void(RunArgs),
    /// Lattice-side non-independence demonstration.
    Minkowski(RunArgs),
    /// ν_N of 1[no lattice point in T(s)] along a horocycle section.
    Horocycle(RunArgs),
}

#[derive(Debug, Clone, clap::Args)]
pub struct RunArgs {
    /// Number of buckets; a comma-separated list where a command takes several.
    #[arg(long = "N", value_delimiter = ',')]
    pub n: Vec<u64>,
    #[arg(long, default_value_t = 1.0)]
    pub s: f64,
    /// Exponent as p/q (exact) or a decimal in (0, 1).
    #[arg(long, default_value = "1/2")]
    pub alpha: String,
    #[arg(long, default_value_t = 6)]
    pub jmax: usize,
    /// Union of intervals (a1,b1];(a2,b2] written "a1,b1;a2,b2".
    #[arg(long, default_value = "0,1")]
    pub intervals: String,
    /// Monte Carlo sample size.
    #[arg(long, default_value_t = 1_000_000)]
    pub samples: u64,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    /// Worker threads; 0 uses all cores.
    #[arg(long, default_value_t = 0)]
    pub threads: usize,
    /// Output file; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    /// Drop terms where n^α is an integer.
    #[arg(long)]
    pub remove_squares: bool,
    /// sqrt, linear, or poly:x=c0,c1,..;y=c0,c1,..[;p=period]
    #[arg(long, default_value = "sqrt")]
    pub section: String,
    /// M/N for the horocycle push a(M).
    #[arg(long = "M-ratio", default_value_t = 1.0)]
    pub m_ratio: f64,
}

impl RunArgs {
    fn n_list(&self, default: &[u64]) -> Result<Vec<u64>, CliError> {
        let list = if self.n.is_empty() {
            default.to_vec()
        } else {
            self.n.clone()
        };
        if list.contains(&0) {
            return Err(CliError::Config("--N must be positive".into()));
        }
        if list.windows(2).any(|w| w[0] >= w[1]) {
            return Err(CliError::Config(
                "--N list must be strictly ascending".into(),
            ));
        }
        Ok(list)
    }

    fn single_n(&self, default: u64) -> Result<u64, CliError> {
        let list = self.n_list(&[default])?;
        if list.len() != 1 {
            return Err(CliError::Config("this command takes a single --N".into()));
        }
        Ok(list[0])
    }

    fn alpha(&self) -> Result<Alpha, CliError> {
        self.alpha
            .parse()
            .map_err(|e: Error| CliError::Config(e.to_string()))
    }

    fn intervals(&self) -> Result<IntervalUnion, CliError> {
        self.intervals
            .parse()
            .map_err(|e: Error| CliError::Config(e.to_string()))
    }

    fn check(&self) -> Result<(), CliError> {
        if !(self.s >= 0.0 && self.s.is_finite()) {
            return Err(CliError::Config(format!(
                "--s must be finite and ≥ 0, got {}",
                self.s
            )));
        }
        if self.samples == 0 {
            return Err(CliError::Config("--samples must be positive".into()));
        }
        if !(self.m_ratio > 0.0 && self.m_ratio.is_finite()) {
            return Err(CliError::Config(format!(
                "--M-ratio must be positive, got {}",
                self.m_ratio
            )));
        }
        Ok(())
    }

    fn base_metadata(&self, command: &str) -> serde_json::Map<String, Value> {
        let mut m = serde_json::Map::new();
        m.insert("command".into(), json!(command));
        m.insert("seed".into(), json!(self.seed));
        m
    }
}

pub fn parse_section(spec: &str) -> Result<HorocycleSection, CliError> {
    let bad = |msg: String| CliError::Config(format!("--section '{spec}': {msg}"));
    match spec {
        "sqrt" => Ok(HorocycleSection::sqrt()),
        "linear" | "linear-control" => Ok(HorocycleSection::linear_control()),
        _ => {
            let body = spec
                .strip_prefix("poly:")
                .ok_or_else(|| bad("expected sqrt, linear or poly:...".into()))?;
            let (mut x, mut y, mut p) = (None, None, 1u32);
            for part in body.split(';') {
                let (key, val) = part
                    .split_once('=')
                    .ok_or_else(|| bad(format!("'{part}' lacks '='")))?;
                let coeffs = || {
                    val.split(',')
                        .map(|c| {
                            c.trim()
                                .parse::<f64>()
                                .map_err(|e| bad(format!("'{c}': {e}")))
                        })
                        .collect::<Result<Vec<_>, _>>()
                };
                match key.trim() {
                    "x" => x = Some(coeffs()?),
                    "y" => y = Some(coeffs()?),
                    "p" => {
                        p = val
                            .trim()
                            .parse()
                            .map_err(|e| bad(format!("period: {e}")))?
                    }
                    k => return Err(bad(format!("unknown key '{k}'"))),
                }
            }
            let (x, y) = (
                x.unwrap_or_default(),
                y.ok_or_else(|| bad("missing y=".into()))?,
            );
            HorocycleSection::polynomial(x, y, p).map_err(|e| bad(e.to_string()))
        }
    }
}

fn poisson(s: f64, j: usize) -> f64 {
    let mut p = (-s).exp();
    for i in 1..=j {
        p *= s / i as f64;
    }
    p
}

fn binomial_se(p: f64, n: u64) -> f64 {
    (p * (1.0 - p) / n as f64).sqrt()
}

fn finish(table: Table, mut meta: serde_json::Map<String, Value>) -> Output {
    let summary = summarize(&table);
    meta.insert("columns".into(), json!(table.columns));
    Output {
        metadata: Value::Object(meta),
        table,
        summary,
    }
}

pub fn cmd_empirical_hist(args: &RunArgs) -> Result<Output, CliError> {
    let n = args.single_n(1_000_000)?;
    let alpha = args.alpha()?;
    let h = histogram(n, args.s, alpha, args.remove_squares)?;
    let p = proportions(&h, args.jmax);
    let mut table = Table::new("empirical-hist", &["j", "E_jN"]);
    let last = p.e.iter().rposition(|&e| e > 0.0).unwrap_or(0);
    for (j, e) in p.e.iter().enumerate().take(last + 1) {
        table.push(j, vec![*e]);
    }
    if p.tail > 0.0 {
        table.push("tail", vec![p.tail]);
    }
    let mut meta = args.base_metadata("empirical-hist");
    meta.insert("N".into(), json!(n));
    meta.insert("s".into(), json!(args.s));
    meta.insert("alpha".into(), json!(alpha.to_string()));
    meta.insert("squares_removed".into(), json!(args.remove_squares));
    meta.insert("terms".into(), json!(h.total()));
    meta.insert("second_moment".into(), json!(second_moment(&h)));
    Ok(finish(table, meta))
}

pub fn cmd_limit_hist(args: &RunArgs) -> Result<Output, CliError> {
    let est = estimate_ej(args.s, args.jmax, args.samples, args.seed)?;
    let mut table = Table::new("limit-hist", &["j", "estimate", "std_error", "poisson"]);
    let mut poisson_mass = 0.0;
    for (j, e) in est.e.iter().enumerate() {
        let q = poisson(args.s, j);
        poisson_mass += q;
        table.push(j, vec![e.value, e.std_error, q]);
    }
    table.push(
        "tail",
        vec![
            est.tail.value,
            est.tail.std_error,
            (1.0 - poisson_mass).max(0.0),
        ],
    );
    let mut meta = args.base_metadata("limit-hist");
    meta.insert("s".into(), json!(args.s));
    meta.insert("samples".into(), json!(args.samples));
    meta.insert("mean_count".into(), json!(est.mean));
    meta.insert("second_moment".into(), json!(est.second_moment));
    Ok(finish(table, meta))
}

pub fn cmd_compare(args: &RunArgs) -> Result<Output, CliError> {
    let ns = args.n_list(&[10_000, 100_000, 1_000_000])?;
    let alpha = args.alpha()?;
    let limit = estimate_ej(args.s, args.jmax, args.samples, args.seed)?;
    let mut columns = vec![
        "j".to_string(),
        "limit".into(),
        "limit_se".into(),
        "poisson".into(),
    ];
    let mut empirical = Vec::new();
    for &n in &ns {
        let h = histogram(n, args.s, alpha, args.remove_squares)?;
        empirical.push(proportions(&h, args.jmax).e);
        columns.push(format!("empirical_N={n}"));
        columns.push(format!("combined_se_N={n}"));
    }
    let refs: Vec<&str> = columns.iter().map(String::as_str).collect();
    let mut table = Table::new("compare", &refs);
    for j in 0..=args.jmax {
        let l = limit.e[j];
        let mut values = vec![l.value, l.std_error, poisson(args.s, j)];
        for (e, &n) in empirical.iter().zip(&ns) {
            values.push(e[j]);
            values.push(l.std_error + binomial_se(e[j], n));
        }
        table.push(j, values);
    }
    let mut meta = args.base_metadata("compare");
    meta.insert("N".into(), json!(ns));
    meta.insert("s".into(), json!(args.s));
    meta.insert("alpha".into(), json!(alpha.to_string()));
    meta.insert("squares_removed".into(), json!(args.remove_squares));
    meta.insert("samples".into(), json!(args.samples));
    meta.insert(
        "poisson_note".into(),
        json!("Poisson column e^-s s^j/j! is a conjectural benchmark, not a proven limit"),
    );
    Ok(finish(table, meta))
}

pub fn cmd_second_moment(args: &RunArgs) -> Result<Output, CliError> {
    let ns = args.n_list(&[10_000, 100_000, 1_000_000, 10_000_000])?;
    let alpha = args.alpha()?;
    let s = args.s;
    // Squares kept: s² + 2s. Removed: s² + s (variance s).
    let target = if args.remove_squares {
        s * s + s
    } else {
        s * s + 2.0 * s
    };
    let mut table = Table::new(
        "second-moment",
        &["N", "mean", "second_moment", "variance", "deviation"],
    );
    for &n in &ns {
        let h = histogram(n, s, alpha, args.remove_squares)?;
        let mean = h.mean();
        let m2 = second_moment(&h);
        table.push(n, vec![mean, m2, m2 - mean * mean, m2 - target]);
    }
    let mut meta = args.base_metadata("second-moment");
    meta.insert("s".into(), json!(s));
    meta.insert("alpha".into(), json!(alpha.to_string()));
    meta.insert("squares_removed".into(), json!(args.remove_squares));
    meta.insert("target_second_moment".into(), json!(target));
    if args.remove_squares {
        let removed: Vec<u64> = ns
            .iter()
            .map(|&n| term_count(s, n).map(|t| perfect_powers_up_to(t, &alpha)))
            .collect::<Result<_, _>>()?;
        meta.insert("removed_terms".into(), json!(removed));
    }
    Ok(finish(table, meta))
}

pub fn cmd_void(args: &RunArgs) -> Result<Output, CliError> {
    let ns = args.n_list(&[1_000_000])?;
    let alpha = args.alpha()?;
    let b = args.intervals()?;
    let mc = estimate_void(&b, args.samples, args.seed)?;
    let mut table = Table::new("void", &["N", "empirical", "limit", "limit_se", "abs_diff"]);
    for &n in &ns {
        let v = void_fraction(&b, n, alpha)?;
        table.push(n, vec![v, mc.value, mc.std_error, (v - mc.value).abs()]);
    }
    let mut meta = args.base_metadata("void");
    meta.insert("intervals".into(), json!(b.to_string()));
    meta.insert("alpha".into(), json!(alpha.to_string()));
    meta.insert("samples".into(), json!(args.samples));
    Ok(finish(table, meta))
}

pub fn cmd_minkowski(args: &RunArgs) -> Result<Output, CliError> {
    let r = minkowski_demo(args.samples, args.seed)?;
    let mut table = Table::new("minkowski", &["event", "value", "std_error", "n_samples"]);
    for (label, e) in [
        ("conditional", r.conditional),
        ("unconditional", r.unconditional),
    ] {
        table.push(label, vec![e.value, e.std_error, e.n_samples as f64]);
    }
    let mut meta = args.base_metadata("minkowski");
    meta.insert("samples".into(), json!(args.samples));
    meta.insert("counterexamples".into(), json!(r.counterexamples));
    meta.insert(
        "sets".into(),
        json!({"A": "0 <= u < 4", "B": "4 <= u < 5", "C": "5 <= u < 9", "cone": "|v| <= u"}),
    );
    Ok(finish(table, meta))
}

pub fn cmd_horocycle(args: &RunArgs) -> Result<Output, CliError> {
    let ns = args.n_list(&[1_000, 10_000, 100_000])?;
    let section = parse_section(&args.section)?;
    let f = TestFunction::indicator_count_equals(Region::triangle(args.s), 0);
    let reference = haar_expectation(&f, args.samples, args.seed)?;
    let regime = Regime::default();
    let rows = convergence_table(
        &f,
        &section,
        &ns,
        MRule::Ratio(args.m_ratio),
        reference,
        &regime,
    )?;
    let mut table = Table::new(
        "horocycle",
        &[
            "N",
            "M",
            "nu",
            "nu_se",
            "reference",
            "reference_se",
            "abs_diff",
        ],
    );
    for r in &rows {
        table.push(
            r.n,
            vec![
                r.m,
                r.nu.value,
                r.nu.std_error,
                r.reference.value,
                r.reference.std_error,
                r.difference,
            ],
        );
    }
    let mut meta = args.base_metadata("horocycle");
    meta.insert("section".into(), json!(section.label()));
    meta.insert("period".into(), json!(section.period()));
    meta.insert(
        "declared_nonlinear".into(),
        json!(section.declared_nonlinear()),
    );
    meta.insert("test_function".into(), json!(f.description));
    meta.insert("M_ratio".into(), json!(args.m_ratio));
    meta.insert("samples".into(), json!(args.samples));
    if !section.declared_nonlinear() {
        meta.insert(
            "note".into(),
            json!("linear section: equidistribution is not expected; table is a negative control"),
        );
    }
    Ok(finish(table, meta))
}

type CommandFn = fn(&RunArgs) -> Result<Output, CliError>;

/// Runs one parsed invocation and writes its output.
pub fn execute(cli: &Cli) -> Result<(), CliError> {
    let (args, run): (&RunArgs, CommandFn) = match &cli.command {
        Command::EmpiricalHist(a) => (a, cmd_empirical_hist),
        Command::LimitHist(a) => (a, cmd_limit_hist),
        Command::Compare(a) => (a, cmd_compare),
        Command::SecondMoment(a) => (a, cmd_second_moment),
        Command::Void(a) => (a, cmd_void),
        Command::Minkowski(a) => (a, cmd_minkowski),
        Command::Horocycle(a) => (a, cmd_horocycle),
    };
    args.check()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(args.threads)
        .build()
        .map_err(|e| CliError::Config(format!("thread pool: {e}")))?;
    let start = Instant::now();
    let mut out = pool.install(|| run(args))?;
    if let Value::Object(m) = &mut out.metadata {
        m.insert("wall_time_s".into(), json!(start.elapsed().as_secs_f64()));
    }
    let text = match args.format {
        Format::Csv => render_csv(&out),
        Format::Json => render_json(&out),
    };
    match &args.out {
        Some(path) => std::fs::write(path, text).map_err(|source| CliError::Io {
            path: path.clone(),
            source,
        }),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

/// Parses arguments, runs, and returns the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

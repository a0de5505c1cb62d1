//! Command-line front end.
//!
//! Exit codes: 0 success, 2 usage, 3 invalid configuration, 4 I/O,
//! 5 numerical failure (including failed verification suites).

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use num_bigint::BigInt;
use num_traits::ToPrimitive;
use serde::Serialize;
use serde_json::{json, Value};

use crate::asymptotics::{
    decay_slope, euclidean_convergence_report, euclidean_limit, zero_mean_check, EuclideanProfile,
};
use crate::coefficients::{build_alpha_table, build_r_tables, Dimension};
use crate::error::Error;
use crate::quadrature::{gauss_gegenbauer, log_scale_grid};
use crate::sphere::SphereContext;
use crate::transform::{
    forward_spectral, invert_bilinear, invert_linear, reconstruction_report, TransformKind,
    ZonalFunction, ZonalFunctionFile, REPORT_SCHEMA_VERSION,
};
use crate::verify::{run_suites, VerifyConfig};
use crate::wavelets::{compare_representations, Flavor, Representation, WaveletFamily};

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "POISSON_WAVELETS_OUT_DIR";

pub const EXIT_USAGE: i32 = 2;
pub const EXIT_CONFIG: i32 = 3;
pub const EXIT_IO: i32 = 4;
pub const EXIT_NUMERIC: i32 = 5;

#[derive(Debug, Parser)]
#[command(name = "poisson-wavelets", version, about = "Poisson wavelets on n-spheres")]
pub struct Cli {
    /// Cap on worker threads (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Directory for output files.
    #[arg(long, global = true, env = OUT_DIR_ENV, default_value = ".")]
    pub out_dir: PathBuf,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evaluate a wavelet on a colatitude grid (CSV).
    Eval(EvalArgs),
    /// Emit the α and R coefficient tables (JSON).
    Coeffs(CoeffsArgs),
    /// Wavelet transform of a zonal function on a scale grid (CSV).
    Transform(TransformArgs),
    /// Transform and invert, reporting the reconstruction (JSON).
    Invert(InvertArgs),
    /// Euclidean limit convergence, decay and zero-mean report (JSON + CSV).
    Euclid(EuclidArgs),
    /// Run every property suite (JSON); exits 5 if any fails.
    Verify(VerifyArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ReprChoice {
    Series,
    Closed,
    Continuation,
    Multipole,
    All,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FlavorChoice {
    Raw,
    Bilinear,
    Linear,
}

impl From<FlavorChoice> for Flavor {
    fn from(f: FlavorChoice) -> Self {
        match f {
            FlavorChoice::Raw => Flavor::Raw,
            FlavorChoice::Bilinear => Flavor::Bilinear,
            FlavorChoice::Linear => Flavor::Linear,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum KindChoice {
    Bilinear,
    Linear,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PathChoice {
    Spectral,
    Samples,
}

#[derive(Debug, clap::Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub n: u32,
    #[arg(long)]
    pub m: usize,
    #[arg(long, allow_hyphen_values = true)]
    pub a: f64,
    /// Number of colatitudes, evenly spaced on [0, π].
    #[arg(long, default_value_t = 100)]
    pub theta_grid: usize,
    #[arg(long, value_enum, default_value_t = ReprChoice::Closed)]
    pub repr: ReprChoice,
    #[arg(long, value_enum, default_value_t = FlavorChoice::Raw)]
    pub flavor: FlavorChoice,
    #[arg(long, default_value = "eval.csv")]
    pub output: PathBuf,
}

#[derive(Debug, clap::Args)]
pub struct CoeffsArgs {
    /// Highest order.
    #[arg(long)]
    pub m: usize,
    /// Fixed dimension; omit together with --symbolic-n for polynomials in n.
    #[arg(long, conflicts_with = "symbolic_n", required_unless_present = "symbolic_n")]
    pub n: Option<u32>,
    #[arg(long)]
    pub symbolic_n: bool,
    #[arg(long, default_value = "coeffs.json")]
    pub output: PathBuf,
}

#[derive(Debug, clap::Args)]
pub struct FunctionArgs {
    /// Zonal function as JSON {"n": .., "coeffs": [..]}.
    #[arg(long, conflicts_with = "random")]
    pub input: Option<PathBuf>,
    /// Random band-limited function with this band limit.
    #[arg(long, requires = "n")]
    pub random: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Dimension for --random.
    #[arg(long)]
    pub n: Option<u32>,
}

#[derive(Debug, clap::Args)]
pub struct TransformArgs {
    #[command(flatten)]
    pub function: FunctionArgs,
    #[arg(long)]
    pub m: usize,
    #[arg(long, value_enum, default_value_t = FlavorChoice::Bilinear)]
    pub flavor: FlavorChoice,
    #[arg(long, default_value_t = 1e-2, allow_hyphen_values = true)]
    pub a_min: f64,
    #[arg(long, default_value_t = 10.0, allow_hyphen_values = true)]
    pub a_max: f64,
    #[arg(long, default_value_t = 50)]
    pub scales: usize,
    #[arg(long, default_value_t = 100)]
    pub theta_grid: usize,
    #[arg(long, default_value = "transform.csv")]
    pub output: PathBuf,
}

#[derive(Debug, clap::Args)]
pub struct InvertArgs {
    #[command(flatten)]
    pub function: FunctionArgs,
    #[arg(long)]
    pub m: usize,
    #[arg(long, value_enum, default_value_t = KindChoice::Bilinear)]
    pub kind: KindChoice,
    /// Wavelet flavor; defaults to the one matching --kind.
    #[arg(long, value_enum)]
    pub flavor: Option<FlavorChoice>,
    #[arg(long, default_value_t = 1e-4, allow_hyphen_values = true)]
    pub a_min: f64,
    #[arg(long, default_value_t = 50.0, allow_hyphen_values = true)]
    pub a_max: f64,
    #[arg(long, default_value_t = 400)]
    pub scales: usize,
    /// Invert from Gegenbauer coefficients or from samples at Gauss nodes.
    #[arg(long, value_enum, default_value_t = PathChoice::Spectral)]
    pub path: PathChoice,
    #[arg(long, default_value = "invert.json")]
    pub output: PathBuf,
}

#[derive(Debug, clap::Args)]
pub struct EuclidArgs {
    #[arg(long)]
    pub n: u32,
    #[arg(long)]
    pub m: usize,
    /// Decreasing scales, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "0.04,0.02,0.01,0.005")]
    pub scales: Vec<f64>,
    #[arg(long, default_value_t = 20.0)]
    pub s_max: f64,
    #[arg(long, default_value_t = 201)]
    pub s_count: usize,
    #[arg(long, default_value = "euclid.json")]
    pub output: PathBuf,
    #[arg(long, default_value = "euclid_profile.csv")]
    pub profile: PathBuf,
}

#[derive(Debug, clap::Args)]
pub struct VerifyArgs {
    #[arg(long, default_value_t = 2)]
    pub n: u32,
    #[arg(long, default_value_t = 1)]
    pub m: usize,
    /// Smaller grids and lattices; every suite still runs.
    #[arg(long)]
    pub fast: bool,
    #[arg(long, default_value = "verify.json")]
    pub output: PathBuf,
}

#[derive(Debug)]
enum Failure {
    Config(String),
    Io(String),
    Numeric(String),
}

impl Failure {
    fn code(&self) -> i32 {
        match self {
            Failure::Config(_) => EXIT_CONFIG,
            Failure::Io(_) => EXIT_IO,
            Failure::Numeric(_) => EXIT_NUMERIC,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Config(s) | Failure::Io(s) | Failure::Numeric(s) => s,
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidContext(_) | Error::Domain(_) | Error::FlavorMismatch { .. } => {
                Failure::Config(e.to_string())
            }
            _ => Failure::Numeric(e.to_string()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Io(e.to_string())
    }
}

impl From<csv::Error> for Failure {
    fn from(e: csv::Error) -> Self {
        Failure::Io(e.to_string())
    }
}

fn at(path: &Path) -> impl Fn(std::io::Error) -> Failure + '_ {
    move |e| Failure::Io(format!("{}: {e}", path.display()))
}

fn csv_at(path: &Path) -> impl Fn(csv::Error) -> Failure + '_ {
    move |e| Failure::Io(format!("{}: {e}", path.display()))
}

/// Shortest round-trip decimal, switching to exponent form far from unity.
fn num(x: f64) -> String {
    let m = x.abs();
    if m != 0.0 && m.is_finite() && !(1e-4..1e15).contains(&m) {
        format!("{x:e}")
    } else {
        x.to_string()
    }
}

type Outcome = std::result::Result<(), Failure>;

/// Parses `args` (program name first) and runs the command; returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { 0 };
        }
    };
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(threads) = cli.threads {
        if threads == 0 {
            eprintln!("error: --threads must be at least 1");
            return EXIT_CONFIG;
        }
        pool = pool.num_threads(threads);
    }
    let pool = match pool.build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_CONFIG;
        }
    };
    match pool.install(|| dispatch(&cli)) {
        Ok(()) => 0,
        Err(f) => {
            eprintln!("error: {}", f.message());
            f.code()
        }
    }
}

fn dispatch(cli: &Cli) -> Outcome {
    fs::create_dir_all(&cli.out_dir).map_err(at(&cli.out_dir))?;
    let out = |p: &Path| cli.out_dir.join(p);
    match &cli.command {
        Command::Eval(args) => eval(args, &out(&args.output)),
        Command::Coeffs(args) => coeffs(args, &out(&args.output)),
        Command::Transform(args) => transform(args, &out(&args.output)),
        Command::Invert(args) => invert(args, &out(&args.output)),
        Command::Euclid(args) => euclid(args, &out(&args.output), &out(&args.profile)),
        Command::Verify(args) => verify(args, &out(&args.output)),
    }
}

fn theta_grid(count: usize) -> std::result::Result<Vec<f64>, Failure> {
    if count < 2 {
        return Err(Failure::Config("--theta-grid needs at least 2 points".into()));
    }
    Ok((0..count)
        .map(|j| std::f64::consts::PI * j as f64 / (count - 1) as f64)
        .collect())
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Outcome {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Failure::Io(e.to_string()))?;
    text.push('\n');
    fs::write(path, text).map_err(at(path))?;
    Ok(())
}

fn eval(args: &EvalArgs, path: &Path) -> Outcome {
    let ctx = SphereContext::new(args.n)?;
    let family = WaveletFamily::new(ctx, args.m, args.flavor.into())?;
    let wavelet = family.at_scale(args.a)?;
    let thetas = theta_grid(args.theta_grid)?;
    let mut out = csv::Writer::from_path(path).map_err(csv_at(path))?;
    if args.repr == ReprChoice::All {
        let table = compare_representations(&wavelet, &thetas)?;
        let mut header = vec!["theta".to_string(), "value".to_string()];
        header.extend(Representation::ALL.iter().map(|r| r.name().to_string()));
        header.push("max_pairwise_rel_err".into());
        out.write_record(&header)?;
        for (j, theta) in thetas.iter().enumerate() {
            let mut record = vec![num(*theta), num(table.values[1][j])];
            record.extend(table.values.iter().map(|v| num(v[j])));
            record.push(num(table.gaps[j]));
            out.write_record(&record)?;
        }
        println!("max_pairwise_rel_err {:e}", table.max_gap());
    } else {
        let repr = match args.repr {
            ReprChoice::Series => Representation::Series,
            ReprChoice::Closed => Representation::Closed,
            ReprChoice::Continuation => Representation::Continuation,
            _ => Representation::Multipole,
        };
        out.write_record(["theta", "value"])?;
        for theta in &thetas {
            let v = wavelet.eval_repr(repr, crate::sphere::ZonalPoint::from_theta(*theta))?;
            out.write_record([num(*theta), num(v)])?;
        }
    }
    out.flush()?;
    println!("wrote {}", path.display());
    Ok(())
}

fn big_to_json(x: &BigInt) -> Value {
    match x.to_i64() {
        Some(v) => json!(v),
        None => json!(x.to_string()),
    }
}

fn coeffs(args: &CoeffsArgs, path: &Path) -> Outcome {
    if args.m == 0 {
        return Err(Failure::Config("--m must be at least 1".into()));
    }
    let dimension = match args.n {
        Some(n) => {
            SphereContext::new(n)?;
            Dimension::Fixed(n)
        }
        None => Dimension::Symbolic,
    };
    let alpha = build_alpha_table(args.m);
    let alpha_json: Vec<Value> = (0..=args.m)
        .map(|m| json!({ "m": m, "values": alpha.row(m).iter().map(big_to_json).collect::<Vec<_>>() }))
        .collect();
    let tables = build_r_tables(args.m, dimension)?;
    let r_json: Vec<Value> = tables
        .iter()
        .map(|table| {
            let rows: Vec<Value> = table
                .rows
                .iter()
                .map(|row| {
                    json!({
                        "k": row.k,
                        "parity": row.parity,
                        "a": row.coeffs.iter().map(|p| p.to_string()).collect::<Vec<_>>(),
                        "polynomials": row.coeffs.iter()
                            .map(|p| p.coefficients().iter().map(big_to_json).collect::<Vec<_>>())
                            .collect::<Vec<_>>(),
                    })
                })
                .collect();
            json!({ "order": table.order, "rows": rows })
        })
        .collect();
    let doc = json!({
        "schema_version": REPORT_SCHEMA_VERSION,
        "max_order": args.m,
        "dimension": match args.n { Some(n) => json!(n), None => json!("symbolic") },
        "alpha": alpha_json,
        "r_tables": r_json,
    });
    write_json(path, &doc)?;
    println!("wrote {}", path.display());
    Ok(())
}

fn load_function(args: &FunctionArgs) -> std::result::Result<ZonalFunction, Failure> {
    match (&args.input, args.random) {
        (Some(input), _) => {
            let text = fs::read_to_string(input).map_err(at(input))?;
            let file: ZonalFunctionFile = serde_json::from_str(&text)
                .map_err(|e| Failure::Config(format!("{}: {e}", input.display())))?;
            Ok(ZonalFunction::from_file(&file)?)
        }
        (None, Some(l)) => {
            let n = args.n.ok_or_else(|| Failure::Config("--random needs --n".into()))?;
            Ok(ZonalFunction::random(SphereContext::new(n)?, l, args.seed))
        }
        (None, None) => Err(Failure::Config("give --input FILE or --random L --n N".into())),
    }
}

fn transform(args: &TransformArgs, path: &Path) -> Outcome {
    let f = load_function(&args.function)?;
    let family = WaveletFamily::new(*f.ctx(), args.m, args.flavor.into())?;
    let grid = log_scale_grid(args.a_min, args.a_max, args.scales)?;
    let field = forward_spectral(&f, &family, &grid)?;
    let thetas = theta_grid(args.theta_grid)?;
    let columns: Vec<Vec<f64>> = thetas
        .iter()
        .map(|t| field.render(t.cos()))
        .collect::<crate::Result<_>>()?;
    let mut out = csv::Writer::from_path(path).map_err(csv_at(path))?;
    out.write_record(["a", "theta", "value"])?;
    for (i, a) in grid.points.iter().enumerate() {
        for (theta, col) in thetas.iter().zip(&columns) {
            out.write_record([num(*a), num(*theta), num(col[i])])?;
        }
    }
    out.flush()?;
    println!("wrote {}", path.display());
    Ok(())
}

fn invert(args: &InvertArgs, path: &Path) -> Outcome {
    let f = load_function(&args.function)?;
    let kind = match args.kind {
        KindChoice::Bilinear => TransformKind::Bilinear,
        KindChoice::Linear => TransformKind::Linear,
    };
    let flavor = args.flavor.map(Flavor::from).unwrap_or(match kind {
        TransformKind::Bilinear => Flavor::Bilinear,
        TransformKind::Linear => Flavor::Linear,
    });
    let family = WaveletFamily::new(*f.ctx(), args.m, flavor)?;
    let grid = log_scale_grid(args.a_min, args.a_max, args.scales)?;
    let mut field = forward_spectral(&f, &family, &grid)?;
    if args.path == PathChoice::Samples {
        let rule = gauss_gegenbauer(f.ctx().lambda(), 2 * f.band_limit() + 2)?;
        field = field.to_samples(&rule)?;
    }
    let rec = match kind {
        TransformKind::Bilinear => invert_bilinear(&field)?,
        TransformKind::Linear => invert_linear(&field)?,
    };
    let seed = args.function.random.map(|_| args.function.seed);
    let report = reconstruction_report(kind, &field, &f, &rec, seed)?;
    write_json(path, &report)?;
    println!("l2_error {:e} predicted_residual {:e}", report.l2_error, report.predicted_residual);
    println!("wrote {}", path.display());
    Ok(())
}

fn euclid(args: &EuclidArgs, path: &Path, profile_path: &Path) -> Outcome {
    let ctx = SphereContext::new(args.n)?;
    if args.s_count < 2 || !(args.s_max > 0.0) {
        return Err(Failure::Config("need --s-count >= 2 and --s-max > 0".into()));
    }
    if args.m == 0 || args.m > 4 {
        return Err(Failure::Config("euclid supports 1 <= m <= 4".into()));
    }
    let s: Vec<f64> = (0..args.s_count)
        .map(|i| args.s_max * i as f64 / (args.s_count - 1) as f64)
        .collect();
    let report = euclidean_convergence_report(ctx, args.m, &args.scales, &s)?;
    let degree = EuclideanProfile { ctx, m: args.m }.decay_degree();
    let slope = decay_slope(&ctx, args.m, 1e2, 1e4, 50);
    let zero_mean = zero_mean_check(ctx, args.m)?;
    let doc = json!({
        "schema_version": REPORT_SCHEMA_VERSION,
        "convergence": report,
        "decay": { "slope": slope, "expected_degree": degree },
        "zero_mean": zero_mean,
    });
    write_json(path, &doc)?;

    let mut out = csv::Writer::from_path(profile_path).map_err(csv_at(profile_path))?;
    out.write_record(["s", "g"])?;
    for &x in &s {
        out.write_record([num(x), num(euclidean_limit(&ctx, args.m, x))])?;
    }
    out.flush()?;

    let stdout = std::io::stdout();
    let mut w = stdout.lock();
    writeln!(w, "{:>10}  {:>14}  {:>14}", "a", "sup error", "relative")?;
    for (i, a) in report.scales.iter().enumerate() {
        writeln!(
            w,
            "{a:>10}  {:>14.6e}  {:>14.6e}",
            report.primary.sup_errors[i], report.primary.relative_errors[i]
        )?;
    }
    writeln!(w, "monotone: {}  decay slope {slope:.4} (expected -{degree})", report.primary.monotone)?;
    writeln!(w, "zero mean ratio: dν {:.3e}, Lebesgue {:.3e}", zero_mean.dnu.ratio, zero_mean.flat.ratio)?;
    writeln!(w, "wrote {} and {}", path.display(), profile_path.display())?;
    if !report.converged() {
        return Err(Failure::Numeric("errors do not decrease monotonically".into()));
    }
    Ok(())
}

fn verify(args: &VerifyArgs, path: &Path) -> Outcome {
    let summary = run_suites(VerifyConfig {
        n: args.n,
        m: args.m,
        fast: args.fast,
    })?;
    write_json(path, &summary)?;
    let text = serde_json::to_string_pretty(&summary).map_err(|e| Failure::Io(e.to_string()))?;
    println!("{text}");
    if !summary.passed {
        let failed: Vec<String> = summary
            .suites
            .iter()
            .filter(|s| !s.passed)
            .map(|s| format!("{}::{}", s.module, s.property))
            .collect();
        return Err(Failure::Numeric(format!("failed suites: {}", failed.join(", "))));
    }
    Ok(())
}

//! Command-line front end: argument parsing, configuration merging and the subcommands.
//!
//! Exit codes: 0 success, 1 verification failure, 2 invalid configuration or
//! input outside the domain, 3 numerical failure, 4 time never reached,
//! 5 at least one grid row failed.

pub mod config;
pub mod eval;
pub mod grid;
pub mod output;
pub mod verify;

use std::ffi::OsString;
use std::io::{self, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::analytic::{bounds_u, bounds_v};
use crate::model::{CriticalTime, ModelParams};
use crate::ode::IntegratorConfig;

use config::{
    parse_time, ConfigError, FileConfig, Format, GridSpec, MethodChoice, Mode, OutputSpec, Range, Ray, RunConfig,
    Spacing,
};
use eval::{asymptotic, evaluate, exit_code};
use output::{fmt_f64, with_sink, write_json, write_rows};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VERIFY_FAILED: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_ROW_FAILED: i32 = 5;

#[derive(Debug, Parser)]
#[command(name = "sir-times", version, about = "Critical times u and v of the SIR epidemic model")]
pub struct Cli {
    /// Infection rate
    #[arg(long, global = true)]
    beta: Option<f64>,
    /// Recovery rate
    #[arg(long, global = true)]
    gamma: Option<f64>,
    /// Infected threshold for u [default: 1]
    #[arg(long, global = true)]
    mu: Option<f64>,
    #[arg(long, global = true)]
    rel_tol: Option<f64>,
    #[arg(long, global = true)]
    abs_tol: Option<f64>,
    /// Worker threads for sweeps [default: all logical cores]
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// key=value or JSON file; command-line flags take precedence
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Write results here instead of stdout
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Evaluate u or v at one point
    Compute(PointArgs),
    /// Sweep a rectangular grid of initial data
    Grid(GridArgs),
    /// Closed-form bounds at one point
    Bounds(PointArgs),
    /// Exact vs asymptotic values along a ray of growing population
    Asymptotics(RayArgs),
    /// Run the invariant and convergence checks
    Verify(VerifyArgs),
}

#[derive(Debug, Args)]
struct PointArgs {
    /// Initial susceptibles S(0)
    #[arg(long)]
    x: Option<f64>,
    /// Initial infected I(0)
    #[arg(long)]
    y: Option<f64>,
    /// u or v [default: u]
    #[arg(long)]
    time: Option<String>,
    /// [default: both]
    #[arg(long, value_enum)]
    method: Option<MethodChoice>,
}

#[derive(Debug, Args)]
struct GridArgs {
    /// min:max:count
    #[arg(long)]
    x: Option<Range>,
    /// min:max:count
    #[arg(long)]
    y: Option<Range>,
    #[arg(long, value_enum)]
    spacing: Option<Spacing>,
    #[arg(long)]
    time: Option<String>,
    /// [default: both]
    #[arg(long, value_enum)]
    method: Option<MethodChoice>,
}

#[derive(Debug, Args)]
struct RayArgs {
    #[arg(long)]
    time: Option<String>,
    /// share:F (x = F r), fixed-y:Y (x = r) or fixed-x:X (y = r)
    #[arg(long)]
    ray: Option<Ray>,
    /// Log-spaced values of r, as min:max:count
    #[arg(long)]
    r: Option<Range>,
}

#[derive(Debug, Args)]
struct VerifyArgs {
    /// Coarser grids and fewer random points
    #[arg(long)]
    quick: bool,
    /// Add EPS * x to the u field in the residual check (sanity check of the check)
    #[arg(long, value_name = "EPS")]
    perturb: Option<f64>,
}

fn pick<T>(flag: Option<T>, file: &FileConfig, key: &str) -> Result<Option<T>, ConfigError>
where
    T: std::str::FromStr,
{
    match flag {
        Some(v) => Ok(Some(v)),
        None => file.get(key),
    }
}

fn pick_enum<T: clap::ValueEnum>(flag: Option<T>, file: &FileConfig, key: &str) -> Result<Option<T>, ConfigError> {
    match flag {
        Some(v) => Ok(Some(v)),
        None => file.get_enum(key),
    }
}

fn pick_time(flag: Option<&str>, file: &FileConfig) -> Result<CriticalTime, ConfigError> {
    match flag.map(str::to_owned).or_else(|| file.0.get("time").cloned()) {
        Some(s) => parse_time(&s),
        None => Ok(CriticalTime::U),
    }
}

/// Merge the config file (if any) under the command-line flags.
pub fn build_config(cli: &Cli) -> Result<RunConfig, ConfigError> {
    let file = match &cli.config {
        Some(path) => FileConfig::load(path)?,
        None => FileConfig::default(),
    };
    let beta = pick(cli.beta, &file, "beta")?;
    let gamma = pick(cli.gamma, &file, "gamma")?;
    let mu = pick(cli.mu, &file, "mu")?.unwrap_or(1.0);
    let params = match (beta, gamma) {
        (Some(b), Some(g)) => Some(ModelParams::new(b, g, mu).map_err(|e| ConfigError(e.to_string()))?),
        (None, None) => None,
        _ => return Err(ConfigError("--beta and --gamma must be given together".into())),
    };

    let defaults = IntegratorConfig::default();
    let tolerances = IntegratorConfig {
        rel_tol: pick(cli.rel_tol, &file, "rel_tol")?.unwrap_or(defaults.rel_tol),
        abs_tol: pick(cli.abs_tol, &file, "abs_tol")?.unwrap_or(defaults.abs_tol),
        ..defaults
    };
    let output = OutputSpec {
        path: cli.out.clone().or(file.get::<PathBuf>("out")?),
        format: pick_enum(cli.format, &file, "format")?.unwrap_or(Format::Csv),
    };

    let mut cfg = RunConfig {
        params,
        mode: Mode::Verify,
        method: MethodChoice::Both,
        time: CriticalTime::U,
        point: None,
        grid: None,
        ray: None,
        output,
        tolerances,
        threads: pick(cli.threads, &file, "threads")?,
        quick: false,
        perturb: None,
    };

    match &cli.command {
        Command::Compute(a) | Command::Bounds(a) => {
            cfg.mode = if matches!(cli.command, Command::Compute(_)) { Mode::Compute } else { Mode::Bounds };
            cfg.time = pick_time(a.time.as_deref(), &file)?;
            cfg.method = pick_enum(a.method, &file, "method")?.unwrap_or(MethodChoice::Both);
            let x = pick(a.x, &file, "x")?;
            let y = pick(a.y, &file, "y")?;
            cfg.point = x.zip(y);
        }
        Command::Grid(a) => {
            cfg.mode = Mode::Grid;
            cfg.time = pick_time(a.time.as_deref(), &file)?;
            cfg.method = pick_enum(a.method, &file, "method")?.unwrap_or(MethodChoice::Both);
            let spacing = pick_enum(a.spacing, &file, "spacing")?.unwrap_or(Spacing::Linear);
            let x = pick(a.x, &file, "x")?;
            let y = pick(a.y, &file, "y")?;
            cfg.grid = x.zip(y).map(|(x, y)| GridSpec { x, y, spacing });
        }
        Command::Asymptotics(a) => {
            cfg.mode = Mode::Asymptotics;
            cfg.time = pick_time(a.time.as_deref(), &file)?;
            cfg.method = MethodChoice::Integral;
            let ray = pick(a.ray, &file, "ray")?;
            let r = pick(a.r, &file, "r")?;
            cfg.ray = ray.zip(r);
        }
        Command::Verify(a) => {
            cfg.mode = Mode::Verify;
            cfg.quick = a.quick || file.get::<bool>("quick")?.unwrap_or(false);
            cfg.perturb = pick(a.perturb, &file, "perturb")?;
        }
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Parse `args` (including the program name), run, and return the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    let cfg = match build_config(&cli) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_CONFIG;
        }
    };
    match cfg.mode {
        Mode::Compute => cmd_compute(&cfg),
        Mode::Grid => cmd_grid(&cfg),
        Mode::Bounds => cmd_bounds(&cfg),
        Mode::Asymptotics => cmd_asymptotics(&cfg),
        Mode::Verify => cmd_verify(&cfg),
    }
}

fn io_failure(e: io::Error) -> i32 {
    eprintln!("error: {e}");
    EXIT_CONFIG
}

fn params(cfg: &RunConfig) -> ModelParams {
    cfg.params.expect("validated: parameters present outside verify")
}

/// Single-point reports are text unless `--out` or `--format json` is given.
fn wants_structured(cfg: &RunConfig) -> bool {
    cfg.output.path.is_some() || cfg.output.format == Format::Json
}

pub fn cmd_compute(cfg: &RunConfig) -> i32 {
    let p = params(cfg);
    let (x, y) = cfg.point.expect("validated");
    let e = match evaluate(&p, cfg.time, cfg.method, x, y, &cfg.tolerances) {
        Ok(e) => e,
        Err(err) => {
            eprintln!("error: {err}");
            return exit_code(&err);
        }
    };
    let row = grid::evaluate_row(&p, cfg.time, cfg.method, x, y, &cfg.tolerances);
    if wants_structured(cfg) {
        #[derive(Serialize)]
        struct Report<'a> {
            time: CriticalTime,
            row: &'a output::GridRow,
            evaluation: &'a eval::Evaluation,
        }
        let res = with_sink(cfg.output.path.as_deref(), |w| match cfg.output.format {
            Format::Csv => write_rows(std::slice::from_ref(&row), Format::Csv, w),
            Format::Json => write_json(&Report { time: cfg.time, row: &row, evaluation: &e }, w),
        });
        if let Err(err) = res {
            return io_failure(err);
        }
    } else {
        let mut out = io::stdout().lock();
        let _ = writeln!(out, "{} = {}  [{}]", cfg.time, fmt_f64(e.primary.value), e.primary.method);
        if let Some(o) = e.ode {
            let _ = writeln!(out, "  ode:        {}  (err ~ {:.1e}, {})", fmt_f64(o.value), o.err_estimate, o.method);
        }
        if let Some(i) = e.integral {
            let _ = writeln!(out, "  integral:   {}  (err ~ {:.1e}, {})", fmt_f64(i.value), i.err_estimate, i.method);
        }
        if let Some(d) = e.rel_discrepancy {
            let _ = writeln!(out, "  relative discrepancy: {d:.3e}");
        }
        if let (Some(lo), Some(hi)) = (row.lower, row.upper) {
            let _ = writeln!(out, "  bounds:     [{}, {}]", fmt_f64(lo), fmt_f64(hi));
        }
        if let Some(a) = row.asymptotic {
            let _ = writeln!(out, "  asymptotic: {}", fmt_f64(a));
        }
    }
    EXIT_OK
}

pub fn cmd_grid(cfg: &RunConfig) -> i32 {
    let p = params(cfg);
    let nodes = cfg.grid.as_ref().expect("validated").nodes();
    let rows = match grid::sweep(&p, cfg.time, cfg.method, &nodes, &cfg.tolerances, cfg.threads) {
        Ok(rows) => rows,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_CONFIG;
        }
    };
    if let Err(e) = with_sink(cfg.output.path.as_deref(), |w| write_rows(&rows, cfg.output.format, w)) {
        return io_failure(e);
    }
    let failed = rows.iter().filter(|r| !r.is_ok()).count();
    if failed > 0 {
        eprintln!("{failed} of {} grid rows failed; see the status column", rows.len());
        EXIT_ROW_FAILED
    } else {
        EXIT_OK
    }
}

pub fn cmd_bounds(cfg: &RunConfig) -> i32 {
    let p = params(cfg);
    let (x, y) = cfg.point.expect("validated");
    let report = match cfg.time {
        CriticalTime::U if y < p.mu() => {
            println!("u = 0 for y < mu; no bounds apply");
            return EXIT_OK;
        }
        CriticalTime::V if x <= p.rho() => {
            println!("v = 0 for x <= gamma/beta; no bounds apply");
            return EXIT_OK;
        }
        CriticalTime::U => bounds_u(&p, x, y).map(|b| {
            let mut v = vec![("lower", Some(b.lower)), ("crude_upper", Some(b.crude_upper))];
            v.push(("subcritical_upper", b.subcritical_upper));
            v
        }),
        CriticalTime::V => bounds_v(&p, x, y).map(|b| {
            vec![("lower", Some(b.lower)), ("upper", Some(b.upper)), ("crude_upper", Some(b.crude_upper))]
        }),
    };
    let entries = match report {
        Ok(v) => v,
        Err(e) => {
            eprintln!("error: {e}");
            return exit_code(&e);
        }
    };
    let asym = asymptotic(&p, cfg.time, x, y);
    if wants_structured(cfg) {
        let mut map = serde_json::Map::new();
        map.insert("time".into(), cfg.time.to_string().into());
        map.insert("x".into(), x.into());
        map.insert("y".into(), y.into());
        for (k, v) in &entries {
            map.insert((*k).into(), v.map_or(serde_json::Value::Null, Into::into));
        }
        map.insert("asymptotic".into(), asym.map_or(serde_json::Value::Null, Into::into));
        let value = serde_json::Value::Object(map);
        if let Err(e) = with_sink(cfg.output.path.as_deref(), |w| write_json(&value, w)) {
            return io_failure(e);
        }
    } else {
        for (k, v) in entries {
            match v {
                Some(v) => println!("{k:>18}: {}", fmt_f64(v)),
                None => println!("{k:>18}: not applicable"),
            }
        }
        if let Some(a) = asym {
            println!("{:>18}: {}", "asymptotic", fmt_f64(a));
        }
    }
    EXIT_OK
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct AsymptoticRow {
    pub r: f64,
    pub x: f64,
    pub y: f64,
    pub exact: f64,
    pub asymptotic: f64,
    pub ratio: f64,
}

pub fn cmd_asymptotics(cfg: &RunConfig) -> i32 {
    let p = params(cfg);
    let (ray, range) = cfg.ray.expect("validated");
    let mut rows = Vec::new();
    for r in range.nodes(Spacing::Log) {
        let (x, y) = ray.point(r);
        let exact = match eval::by_integral(&p, cfg.time, x, y) {
            Ok(res) => res.value,
            Err(e) => {
                eprintln!("error at r = {r}: {e}");
                return exit_code(&e);
            }
        };
        let asym = match cfg.time {
            CriticalTime::U => crate::analytic::asymptotic_u(&p, x, y),
            CriticalTime::V => crate::analytic::asymptotic_v(&p, x, y),
        };
        let asym = match asym {
            Ok(a) => a,
            Err(e) => {
                eprintln!("error at r = {r}: {e}");
                return exit_code(&e);
            }
        };
        rows.push(AsymptoticRow { r, x, y, exact, asymptotic: asym, ratio: exact / asym });
    }
    let res = with_sink(cfg.output.path.as_deref(), |w| match cfg.output.format {
        Format::Json => write_json(&rows, w),
        Format::Csv => {
            writeln!(w, "r,x,y,exact,asymptotic,ratio")?;
            for row in &rows {
                writeln!(
                    w,
                    "{},{},{},{},{},{}",
                    fmt_f64(row.r),
                    fmt_f64(row.x),
                    fmt_f64(row.y),
                    fmt_f64(row.exact),
                    fmt_f64(row.asymptotic),
                    fmt_f64(row.ratio)
                )?;
            }
            Ok(())
        }
    });
    match res {
        Ok(()) => EXIT_OK,
        Err(e) => io_failure(e),
    }
}

pub fn cmd_verify(cfg: &RunConfig) -> i32 {
    let opts = verify::VerifyOptions {
        params: cfg.params,
        tolerances: cfg.tolerances,
        quick: cfg.quick,
        perturb: cfg.perturb,
        threads: cfg.threads,
    };
    let outcomes = verify::run_suite(&opts);
    let res = with_sink(cfg.output.path.as_deref(), |w| match cfg.output.format {
        Format::Json => write_json(&outcomes, w),
        Format::Csv => {
            for c in &outcomes {
                let tag = if c.passed { "PASS" } else { "FAIL" };
                writeln!(w, "{tag}  {:<18} {:>7.2}s  {}", c.name, c.seconds, c.detail)?;
            }
            Ok(())
        }
    });
    if let Err(e) = res {
        return io_failure(e);
    }
    let failed: Vec<_> = outcomes.iter().filter(|c| !c.passed).map(|c| c.name).collect();
    if failed.is_empty() {
        EXIT_OK
    } else {
        eprintln!("failed checks: {}", failed.join(", "));
        EXIT_VERIFY_FAILED
    }
}

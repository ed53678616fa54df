//! The `gcrkit` command line: `check`, `eval` and `families`.
//!
//! Exit codes: 0 on success, 2 for usage, spec or parse errors (and points
//! outside the domain), 3 when the surface is singular everywhere it was
//! sampled (or at the requested point).

pub mod report;
pub mod spec;

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::catalog::{FamilyInput, FamilyTag};
use crate::gcr::{classify_surface, gcr_residual, position_angles, GcrError, GcrResidual, GridSpec, Tolerances};
use crate::geometry::{curvature_invariants, point_geometry, principal_data, GeometryError};
use report::{to_csv, to_json, write_atomic, GridEcho, ReportFile, SurfaceEcho};
use spec::{Loaded, SurfaceSpec};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_SINGULAR: i32 = 3;

/// Structural tolerance used when a profile is an interpolated ODE solution.
const INTERPOLATED_STRUCTURAL_TOL: f64 = 1e-3;

#[derive(Debug, Parser)]
#[command(name = "gcrkit", version, about = "Curvature and GCR checks for parametrized hypersurfaces")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Classify a surface over a grid and write a report
    Check {
        spec: PathBuf,
        /// Grid counts: one number for every axis, or one per axis (`8,6,4`)
        #[arg(long)]
        grid: Option<String>,
        #[arg(long)]
        tol_gcr: Option<f64>,
        /// Include per-point records
        #[arg(long)]
        full: bool,
        /// Report path (standard output when absent)
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
        /// Sample this many uniform random points instead of the grid
        #[arg(long)]
        random: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Dump the curvature data at one chart point
    Eval {
        spec: PathBuf,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
        point: Vec<f64>,
    },
    /// List the built-in families
    Families {
        #[arg(long)]
        json: bool,
    },
}

struct Failure {
    code: i32,
    message: String,
}

impl Failure {
    fn usage(message: impl ToString) -> Self {
        Failure {
            code: EXIT_USAGE,
            message: message.to_string(),
        }
    }
}

/// Runs the command line and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let result = match cli.command {
        Command::Families { json } => families(json),
        Command::Eval { spec, point } => eval(&spec, &point),
        Command::Check {
            spec,
            grid,
            tol_gcr,
            full,
            out,
            format,
            random,
            seed,
        } => check(CheckArgs {
            spec,
            grid,
            tol_gcr,
            full,
            out,
            format,
            random,
            seed,
        }),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(f) => {
            eprintln!("gcrkit: {}", f.message);
            f.code
        }
    }
}

fn emit(bytes: &[u8]) -> Result<(), Failure> {
    std::io::stdout()
        .write_all(bytes)
        .map_err(|e| Failure::usage(format!("cannot write output: {e}")))
}

#[derive(Serialize)]
struct FamilyEntry {
    tag: FamilyTag,
    formula: &'static str,
    variables: [&'static str; 3],
    parameters: BTreeMap<&'static str, f64>,
    input: FamilyInput,
}

fn families(json: bool) -> Result<(), Failure> {
    let entries: Vec<FamilyEntry> = FamilyTag::ALL
        .iter()
        .map(|&tag| FamilyEntry {
            tag,
            formula: tag.formula(),
            variables: tag.vars(),
            parameters: tag.parameters().iter().copied().collect(),
            input: tag.input(),
        })
        .collect();
    if json {
        return emit(&to_json(&entries));
    }
    let mut out = String::new();
    for e in &entries {
        let params: Vec<String> = e.parameters.iter().map(|(k, v)| format!("{k}={v}")).collect();
        out.push_str(&format!("{:<26} {}\n", e.tag.name(), e.formula));
        if !params.is_empty() {
            out.push_str(&format!("{:<26} parameters: {}\n", "", params.join(", ")));
        }
    }
    emit(out.as_bytes())
}

fn load(path: &std::path::Path) -> Result<Loaded, Failure> {
    SurfaceSpec::from_path(path)
        .and_then(SurfaceSpec::load)
        .map_err(|e| Failure::usage(format!("{}: {e}", path.display())))
}

#[derive(Serialize)]
struct PointDump {
    surface: String,
    point: Vec<f64>,
    position: Vec<f64>,
    metric: Vec<Vec<f64>>,
    det_metric: f64,
    normal: Vec<f64>,
    second_form: Vec<Vec<f64>>,
    k: Vec<f64>,
    principal_directions: Vec<Vec<f64>>,
    #[serde(rename = "H")]
    h: Vec<f64>,
    mu: f64,
    theta: f64,
    cos_theta: f64,
    degenerate: bool,
    gcr_residual: Option<GcrResidual>,
}

fn geometry_failure(e: GeometryError) -> Failure {
    match e {
        GeometryError::Singular { .. } => Failure {
            code: EXIT_SINGULAR,
            message: e.to_string(),
        },
        other => Failure::usage(other),
    }
}

fn eval(path: &std::path::Path, point: &[f64]) -> Result<(), Failure> {
    let loaded = load(path)?;
    let m = &loaded.immersion;
    let pg = point_geometry(m, point).map_err(geometry_failure)?;
    let pd = principal_data(&pg, loaded.tolerances.gap).map_err(geometry_failure)?;
    let pa = position_angles(m, point, &pg).map_err(|e| match e {
        GcrError::Geometry(g) => geometry_failure(g),
        other => Failure::usage(other),
    })?;
    let dump = PointDump {
        surface: m.name().to_string(),
        point: point.to_vec(),
        position: pg.position.clone(),
        metric: pg.metric.clone(),
        det_metric: pg.det_metric,
        normal: pg.normal.clone(),
        second_form: pg.h.clone(),
        h: curvature_invariants(&pd.k).h,
        k: pd.k,
        principal_directions: pd.e,
        mu: pa.mu,
        theta: pa.theta,
        cos_theta: pa.cos_theta,
        degenerate: pa.degenerate,
        gcr_residual: gcr_residual(&pa, &pg).ok(),
    };
    emit(&to_json(&dump))
}

struct CheckArgs {
    spec: PathBuf,
    grid: Option<String>,
    tol_gcr: Option<f64>,
    full: bool,
    out: Option<PathBuf>,
    format: Format,
    random: Option<usize>,
    seed: u64,
}

fn parse_grid(text: &str, n: usize) -> Result<Vec<usize>, Failure> {
    let counts: Vec<usize> = text
        .split(',')
        .map(|c| c.trim().parse::<usize>())
        .collect::<Result<_, _>>()
        .map_err(|e| Failure::usage(format!("bad --grid '{text}': {e}")))?;
    let counts = match counts.len() {
        1 => vec![counts[0]; n],
        k if k == n => counts,
        k => return Err(Failure::usage(format!("--grid has {k} counts, the chart has {n} axes"))),
    };
    if counts.iter().any(|&c| c < 2) {
        return Err(Failure::usage("--grid counts must be at least 2"));
    }
    Ok(counts)
}

/// Worker count from `GCRKIT_THREADS`, if set.
fn thread_override() -> Result<Option<usize>, Failure> {
    match std::env::var("GCRKIT_THREADS") {
        Err(_) => Ok(None),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(Failure::usage(format!("GCRKIT_THREADS must be a positive integer, got '{v}'"))),
        },
    }
}

fn check(args: CheckArgs) -> Result<(), Failure> {
    let loaded = load(&args.spec)?;
    let m = &loaded.immersion;
    let vars = m.vars().to_vec();
    let n = vars.len();
    let counts = match &args.grid {
        Some(g) => parse_grid(g, n)?,
        None => loaded.grid.clone(),
    };
    let mut tol: Tolerances = loaded.tolerances.clone();
    if loaded.interpolated && loaded.spec.tolerances.is_none() {
        tol.structural = INTERPOLATED_STRUCTURAL_TOL;
    }
    if let Some(t) = args.tol_gcr {
        if !(t > 0.0) {
            return Err(Failure::usage("--tol-gcr must be positive"));
        }
        tol.gcr = t;
    }

    let d = m.domain();
    let (grid, echo, seed) = match args.random {
        Some(count) => {
            if count == 0 {
                return Err(Failure::usage("--random needs at least one point"));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
            let pts = (0..count)
                .map(|_| (0..n).map(|i| rng.random_range(d.lo[i]..=d.hi[i])).collect())
                .collect();
            (
                GridSpec::Points(pts),
                GridEcho::Random {
                    points: count,
                    seed: args.seed,
                },
                Some(args.seed),
            )
        }
        None => (
            GridSpec::Regular(counts.clone()),
            GridEcho::Regular(vars.iter().cloned().zip(counts.iter().copied()).collect()),
            None,
        ),
    };

    let run = || classify_surface(m, &grid, &tol);
    let result = match thread_override()? {
        Some(threads) => rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| Failure::usage(format!("cannot start {threads} workers: {e}")))?
            .install(run),
        None => run(),
    };
    let report = result.map_err(|e| match e {
        GcrError::Empty(msg) => Failure {
            code: EXIT_SINGULAR,
            message: format!("{}: no regular nondegenerate point ({msg})", m.name()),
        },
        other => Failure::usage(other),
    })?;
    if let Some(first) = report.skipped.first() {
        eprintln!(
            "gcrkit: warning: {} point(s) skipped; first at {:?}: {}",
            report.skipped.len(),
            first.point,
            first.reason
        );
    }

    let surface = SurfaceEcho {
        spec: loaded.spec.clone(),
        variables: vars.clone(),
        domain: vars.iter().enumerate().map(|(i, v)| (v.clone(), [d.lo[i], d.hi[i]])).collect(),
        grid: echo,
        interpolated_profile: loaded.interpolated,
    };
    let bytes = match args.format {
        Format::Json => to_json(&ReportFile::new(&report, surface, args.full, seed)),
        Format::Csv => to_csv(&report, &vars).map_err(|e| Failure::usage(format!("csv export failed: {e}")))?,
    };
    match &args.out {
        Some(path) => write_atomic(path, &bytes)
            .map_err(|e| Failure::usage(format!("cannot write {}: {e}", path.display()))),
        None => emit(&bytes),
    }
}

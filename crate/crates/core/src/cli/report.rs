//! Report files: JSON with fixed float formatting, CSV, atomic writes.

use std::collections::BTreeMap;
use std::io::{self, Write};
use std::path::Path;

use serde::Serialize;
use serde_json::ser::{Formatter, PrettyFormatter};

use super::spec::SurfaceSpec;
use crate::gcr::{Aggregate, Flags, PointRecord, SkippedPoint, SurfaceReport, Tolerances};

pub const SCHEMA_VERSION: u32 = 1;

/// Order of the position jets used for the integrability residuals.
pub const JET_ORDER: u8 = 3;

/// Pretty JSON with every float written as `d.dddddddddddddddde±x`
/// (17 significant digits), so reports are byte-stable.
pub struct FixedFloat<'a>(PrettyFormatter<'a>);

impl FixedFloat<'_> {
    pub fn new() -> Self {
        FixedFloat(PrettyFormatter::with_indent(b"  "))
    }
}

impl Default for FixedFloat<'_> {
    fn default() -> Self {
        Self::new()
    }
}

impl Formatter for FixedFloat<'_> {
    fn write_f64<W: ?Sized + Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        write!(w, "{value:.16e}")
    }
    fn write_f32<W: ?Sized + Write>(&mut self, w: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(w, value as f64)
    }
    fn begin_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_array(w)
    }
    fn end_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array(w)
    }
    fn begin_array_value<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_array_value(w, first)
    }
    fn end_array_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array_value(w)
    }
    fn begin_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object(w)
    }
    fn end_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object(w)
    }
    fn begin_object_key<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_object_key(w, first)
    }
    fn begin_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object_value(w)
    }
    fn end_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object_value(w)
    }
}

pub fn to_json<T: Serialize>(value: &T) -> Vec<u8> {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, FixedFloat::new());
    value.serialize(&mut ser).expect("report values serialize");
    out.push(b'\n');
    out
}

#[derive(Debug, Serialize)]
pub struct SurfaceEcho {
    pub spec: SurfaceSpec,
    pub variables: Vec<String>,
    pub domain: BTreeMap<String, [f64; 2]>,
    pub grid: GridEcho,
    pub interpolated_profile: bool,
}

#[derive(Debug, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum GridEcho {
    Regular(BTreeMap<String, usize>),
    Random { points: usize, seed: u64 },
}

#[derive(Debug, Serialize)]
pub struct Engine {
    pub jet_order: u8,
    pub tolerances: Tolerances,
    pub seed: Option<u64>,
}

#[derive(Debug, Serialize)]
pub struct ReportFile<'a> {
    pub schema_version: u32,
    pub surface: SurfaceEcho,
    pub flags: &'a Flags,
    pub aggregate: &'a Aggregate,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub per_point: Option<&'a [PointRecord]>,
    pub skipped: &'a [SkippedPoint],
    pub engine: Engine,
}

impl<'a> ReportFile<'a> {
    pub fn new(report: &'a SurfaceReport, surface: SurfaceEcho, full: bool, seed: Option<u64>) -> Self {
        ReportFile {
            schema_version: SCHEMA_VERSION,
            surface,
            flags: &report.flags,
            aggregate: &report.aggregate,
            per_point: full.then_some(report.points.as_slice()),
            skipped: &report.skipped,
            engine: Engine {
                jet_order: JET_ORDER,
                tolerances: report.tolerances.clone(),
                seed,
            },
        }
    }
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.16e}")).unwrap_or_default()
}

/// One row per evaluated grid point.
pub fn to_csv(report: &SurfaceReport, vars: &[String]) -> Result<Vec<u8>, csv::Error> {
    let n = report.dim;
    let mut w = csv::Writer::from_writer(vec![]);
    let mut header: Vec<String> = vars.to_vec();
    header.extend((1..=n).map(|i| format!("k{i}")));
    header.extend((1..=n).map(|i| format!("H{i}")));
    header.extend(
        ["mu", "theta", "degenerate", "gcr_residual", "gcr_secondary", "integrability", "delta2"]
            .map(String::from),
    );
    w.write_record(&header)?;
    for r in &report.points {
        let f = |x: &f64| format!("{x:.16e}");
        let mut row: Vec<String> = r.point.iter().map(f).collect();
        row.extend(r.k.iter().map(f));
        row.extend(r.h.iter().map(f));
        row.push(f(&r.mu));
        row.push(f(&r.theta));
        row.push(r.degenerate.to_string());
        row.push(opt(r.gcr.map(|g| g.primary)));
        row.push(opt(r.gcr.map(|g| g.secondary)));
        row.push(f(&r.integrability));
        row.push(r.delta2.to_string());
        w.write_record(&row)?;
    }
    w.into_inner().map_err(|e| e.into_error().into())
}

/// Writes `bytes` to a temporary file next to `path`, then renames it over
/// `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> io::Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

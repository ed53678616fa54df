use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::Serialize;

use super::{
    delta2_ideal_test, gcr_residual, position_angles, structural_residuals, GcrError, GcrResidual,
    StructuralResiduals, Tolerances,
};
use crate::geometry::{
    codazzi_residual_from, curvature_invariants, form_jets, gauss_residual_from, principal_data, DomainBox,
    GeometryError, Immersion,
};

/// Sample points of a chart domain.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum GridSpec {
    /// Tensor grid with the given number of points per axis, endpoints
    /// included (a single point sits at the midpoint).
    Regular(Vec<usize>),
    Points(Vec<Vec<f64>>),
}

impl GridSpec {
    pub fn points(&self, domain: &DomainBox) -> Result<Vec<Vec<f64>>, GcrError> {
        let n = domain.dim();
        match self {
            GridSpec::Points(pts) => {
                if let Some(p) = pts.iter().find(|p| p.len() != n) {
                    return Err(GcrError::Grid(format!("point {p:?} does not have {n} coordinates")));
                }
                Ok(pts.clone())
            }
            GridSpec::Regular(counts) => {
                if counts.len() != n {
                    return Err(GcrError::Grid(format!("expected {n} counts, got {}", counts.len())));
                }
                if counts.contains(&0) {
                    return Err(GcrError::Grid("grid counts must be positive".into()));
                }
                let axis = |i: usize| -> Vec<f64> {
                    let (lo, hi, c) = (domain.lo[i], domain.hi[i], counts[i]);
                    if c == 1 {
                        return vec![0.5 * (lo + hi)];
                    }
                    (0..c).map(|j| lo + (hi - lo) * j as f64 / (c - 1) as f64).collect()
                };
                let mut pts = vec![vec![]];
                for i in 0..n {
                    let ax = axis(i);
                    pts = pts
                        .into_iter()
                        .flat_map(|p: Vec<f64>| {
                            ax.iter().map(move |&x| {
                                let mut q = p.clone();
                                q.push(x);
                                q
                            })
                        })
                        .collect();
                }
                Ok(pts)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PointRecord {
    pub point: Vec<f64>,
    pub k: Vec<f64>,
    #[serde(rename = "H")]
    pub h: Vec<f64>,
    pub gap: f64,
    pub distinct_count: usize,
    pub mu: f64,
    pub theta: f64,
    pub degenerate: bool,
    /// Largest Gauss or Codazzi residual.
    pub integrability: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gcr: Option<GcrResidual>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub structural: Option<StructuralResiduals>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub structural_error: Option<String>,
    pub delta2: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SkippedPoint {
    pub point: Vec<f64>,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Flags {
    pub is_gcr: bool,
    pub is_isoparametric: bool,
    pub is_cmc: bool,
    pub is_3_minimal: bool,
    pub is_delta2_ideal: bool,
    /// Whether every structural residual stayed below tolerance; `None` when
    /// no point was checked.
    pub structure_equations_hold: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Aggregate {
    pub points_total: usize,
    pub points_evaluated: usize,
    pub points_degenerate: usize,
    pub points_skipped: usize,
    pub max_gcr_residual: Option<f64>,
    pub mean_gcr_residual: Option<f64>,
    pub max_gcr_secondary: Option<f64>,
    pub max_integrability: f64,
    pub structural_points: usize,
    pub max_structural: Option<f64>,
    pub max_codazzi_system: Option<f64>,
    pub max_nested: Option<f64>,
    /// `[min, max]` of each sorted principal curvature.
    pub k_ranges: Vec<[f64; 2]>,
    #[serde(rename = "H_ranges")]
    pub h_ranges: Vec<[f64; 2]>,
    pub distinct_histogram: BTreeMap<usize, usize>,
    pub distinct_count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SurfaceReport {
    pub surface: String,
    pub dim: usize,
    pub tolerances: Tolerances,
    pub flags: Flags,
    pub aggregate: Aggregate,
    pub points: Vec<PointRecord>,
    pub skipped: Vec<SkippedPoint>,
}

fn evaluate_point(m: &Immersion, p: &[f64], tol: &Tolerances) -> Result<PointRecord, GeometryError> {
    m.check_point(p)?;
    let fj = form_jets(m, p, 3)?;
    let integrability = codazzi_residual_from(&fj).max(gauss_residual_from(&fj));
    let pg = fj.point_geometry();
    let pd = principal_data(&pg, tol.gap)?;
    let inv = curvature_invariants(&pd.k);
    let pa = match position_angles(m, p, &pg) {
        Ok(pa) => pa,
        Err(GcrError::Geometry(e)) => return Err(e),
        Err(e) => unreachable!("position_angles only fails geometrically: {e}"),
    };
    let gcr = gcr_residual(&pa, &pg).ok();
    let (structural, structural_error) = match gcr {
        Some(r) if r.primary < tol.gcr => match structural_residuals(m, p, &pg, &pd, &pa, tol) {
            Ok(s) => (Some(s), None),
            Err(e) => (None, Some(e.to_string())),
        },
        _ => (None, None),
    };
    let kmax = pd.k.iter().fold(0.0_f64, |a, k| a.max(k.abs()));
    Ok(PointRecord {
        point: p.to_vec(),
        delta2: delta2_ideal_test(&pd.k, tol.delta2 * kmax.max(1.0)),
        k: pd.k,
        h: inv.h,
        gap: pd.gap,
        distinct_count: pd.distinct_count,
        mu: pa.mu,
        theta: pa.theta,
        degenerate: pa.degenerate,
        integrability,
        gcr,
        structural,
        structural_error,
    })
}

fn range(values: impl Iterator<Item = f64>) -> [f64; 2] {
    values.fold([f64::INFINITY, f64::NEG_INFINITY], |[lo, hi], v| [lo.min(v), hi.max(v)])
}

fn is_constant(values: &[f64], rel: f64) -> bool {
    let [lo, hi] = range(values.iter().copied());
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    hi - lo < rel * (1.0 + mean.abs())
}

fn max_opt(values: impl Iterator<Item = f64>) -> Option<f64> {
    values.reduce(f64::max)
}

/// Evaluates every grid point (in parallel on the current rayon pool) and
/// aggregates the GCR, curvature and structure checks.
pub fn classify_surface(m: &Immersion, grid: &GridSpec, tol: &Tolerances) -> Result<SurfaceReport, GcrError> {
    let pts = grid.points(m.domain())?;
    let results: Vec<Result<PointRecord, SkippedPoint>> = pts
        .par_iter()
        .map(|p| {
            evaluate_point(m, p, tol).map_err(|e| SkippedPoint {
                point: p.clone(),
                reason: e.to_string(),
            })
        })
        .collect();
    let mut points = vec![];
    let mut skipped = vec![];
    for r in results {
        match r {
            Ok(rec) => points.push(rec),
            Err(s) => skipped.push(s),
        }
    }
    let nondegenerate: Vec<&PointRecord> = points.iter().filter(|r| !r.degenerate).collect();
    if nondegenerate.is_empty() {
        return Err(GcrError::Empty(format!(
            "{} of {} points skipped, {} degenerate",
            skipped.len(),
            pts.len(),
            points.len()
        )));
    }

    let n = m.dim();
    let primaries: Vec<f64> = nondegenerate.iter().filter_map(|r| r.gcr.map(|g| g.primary)).collect();
    let structural: Vec<&StructuralResiduals> = points.iter().filter_map(|r| r.structural.as_ref()).collect();
    let max_structural = max_opt(structural.iter().map(|s| s.max_first_order()));
    let max_codazzi_system = max_opt(structural.iter().filter_map(|s| s.codazzi.max()));
    let max_nested = max_opt(structural.iter().filter_map(|s| s.codazzi.nested));
    let structural_error = points.iter().any(|r| r.structural_error.is_some());

    let mut distinct_histogram = BTreeMap::new();
    for r in &points {
        *distinct_histogram.entry(r.distinct_count).or_insert(0) += 1;
    }
    // modal count; ties go to the smaller count
    let distinct_count = distinct_histogram
        .iter()
        .fold((0, 0), |best, (&c, &f)| if f > best.1 { (c, f) } else { best })
        .0;

    let column = |f: &dyn Fn(&PointRecord) -> f64| -> Vec<f64> { points.iter().map(f).collect() };
    let k_cols: Vec<Vec<f64>> = (0..n).map(|i| column(&|r| r.k[i])).collect();
    let h_cols: Vec<Vec<f64>> = (0..n).map(|i| column(&|r| r.h[i])).collect();

    let flags = Flags {
        is_gcr: primaries.iter().all(|&r| r < tol.gcr),
        is_isoparametric: k_cols.iter().all(|c| is_constant(c, tol.constant)),
        is_cmc: is_constant(&h_cols[0], tol.constant),
        is_3_minimal: n >= 3 && h_cols[2].iter().all(|h| h.abs() < tol.gcr),
        is_delta2_ideal: points.iter().all(|r| r.delta2),
        structure_equations_hold: (!structural.is_empty() || structural_error).then(|| {
            !structural_error
                && max_structural.is_none_or(|v| v < tol.structural)
                && max_codazzi_system.is_none_or(|v| v < tol.structural)
                && max_nested.is_none_or(|v| v < tol.nested)
        }),
    };
    let aggregate = Aggregate {
        points_total: pts.len(),
        points_evaluated: points.len(),
        points_degenerate: points.len() - nondegenerate.len(),
        points_skipped: skipped.len(),
        max_gcr_residual: max_opt(primaries.iter().copied()),
        mean_gcr_residual: (!primaries.is_empty()).then(|| primaries.iter().sum::<f64>() / primaries.len() as f64),
        max_gcr_secondary: max_opt(nondegenerate.iter().filter_map(|r| r.gcr.map(|g| g.secondary))),
        max_integrability: points.iter().map(|r| r.integrability).fold(0.0, f64::max),
        structural_points: structural.len(),
        max_structural,
        max_codazzi_system,
        max_nested,
        k_ranges: k_cols.iter().map(|c| range(c.iter().copied())).collect(),
        h_ranges: h_cols.iter().map(|c| range(c.iter().copied())).collect(),
        distinct_histogram,
        distinct_count,
    };
    Ok(SurfaceReport {
        surface: m.name().to_string(),
        dim: n,
        tolerances: tol.clone(),
        flags,
        aggregate,
        points,
        skipped,
    })
}

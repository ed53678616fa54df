//! Position-vector decomposition `x = μ sinθ e₁ + μ cosθ N`, the GCR test
//! and surface classification.

mod classify;
mod structural;

pub use classify::{
    classify_surface, Aggregate, Flags, GridSpec, PointRecord, SkippedPoint, SurfaceReport,
};
pub use structural::{structural_residuals, CodazziSystem, StructuralResiduals};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{dot_jets, form_jets, FormJets, GeometryError, Immersion, PointGeometry, PrincipalData};
use crate::jet::Jet;
use crate::linalg;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GcrError {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("position vector is (nearly) normal at {point:?}; the GCR condition is vacuous there")]
    Degenerate { point: Vec<f64> },
    #[error("no usable grid point: {0}")]
    Empty(String),
    #[error("invalid grid: {0}")]
    Grid(String),
}

/// Numerical tolerances of the checks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// Primary GCR residual threshold; also the 3-minimality threshold.
    pub gcr: f64,
    /// Threshold on `max |Y(θ)|` for the secondary GCR verdict.
    pub secondary: f64,
    /// Relative spread allowed for "constant" fields, scaled by `1 + |mean|`.
    pub constant: f64,
    /// Minimum eigen-gap for tracking individual principal curvatures.
    pub gap: f64,
    /// Threshold for the structural-equation residuals.
    pub structural: f64,
    /// Threshold for the nested second-derivative residual.
    pub nested: f64,
    /// Relative tolerance of the δ(2) spectral test, scaled by `max(1, max |k|)`.
    pub delta2: f64,
    /// Chart step for differencing principal data; defaults to
    /// `1e-4 · (largest domain side)`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub step: Option<f64>,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            gcr: 1e-7,
            secondary: 1e-6,
            constant: 1e-6,
            gap: 1e-4,
            structural: 1e-4,
            nested: 1e-3,
            delta2: 1e-7,
            step: None,
        }
    }
}

/// `μ`, `θ` and the tangential part of the position vector at a point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PositionAngles {
    pub mu: f64,
    pub cos_theta: f64,
    pub theta: f64,
    /// Tangential part in chart coordinates.
    pub x_t: Vec<f64>,
    pub x_t_norm: f64,
    pub degenerate: bool,
    /// Chart gradient of `θ = arccos(⟨x, N⟩/μ)` from jets; zero when degenerate.
    pub theta_grad: Vec<f64>,
    pub mu_grad: Vec<f64>,
}

impl PositionAngles {
    /// `ê₁ = x^T / |x^T|` in chart coordinates.
    pub fn e1(&self) -> Option<Vec<f64>> {
        (!self.degenerate).then(|| self.x_t.iter().map(|c| c / self.x_t_norm).collect())
    }
}

/// Threshold below which the tangential part counts as zero.
pub fn eps_tan(mu: f64) -> f64 {
    1e-8 * mu.max(1.0)
}

/// Order-1 jets of `μ`, `cosθ` and `x^T` built from order-2 form jets.
pub(crate) struct AngleJets {
    pub mu: Jet,
    pub cos_theta: Jet,
    pub x_t: Vec<Jet>,
    pub x_t_norm: Jet,
}

impl AngleJets {
    pub(crate) fn new(fj: &FormJets) -> Result<Self, GeometryError> {
        let n = fj.dim();
        let x: Vec<Jet> = fj.position.iter().map(|c| c.truncate(1)).collect();
        let wrap = |e: crate::jet::JetError| GeometryError::Evaluation {
            point: fj.point.clone(),
            source: e.into(),
        };
        let mu2 = dot_jets(&x, &x);
        let mu = if mu2.value() > 0.0 {
            mu2.sqrt().map_err(wrap)?
        } else {
            Jet::constant(0.0, n, 1)
        };
        let xn = dot_jets(&x, &fj.normal);
        let cos_theta = if mu.value() > 0.0 {
            xn / mu
        } else {
            Jet::constant(1.0, n, 1)
        };
        let b: Vec<Jet> = (0..n).map(|i| dot_jets(&x, &fj.tangents[i])).collect();
        let g: Vec<Vec<Jet>> = fj.metric.clone();
        let g_inv = linalg::inverse_cofactor(&g, |a, b| a / b);
        let x_t: Vec<Jet> = (0..n)
            .map(|k| {
                let mut acc = g_inv[k][0] * b[0];
                for l in 1..n {
                    acc += g_inv[k][l] * b[l];
                }
                acc
            })
            .collect();
        // |x^T|² = bᵀ g⁻¹ b = ⟨x^T, b⟩
        let norm2 = dot_jets(&x_t, &b);
        let x_t_norm = if norm2.value() > 0.0 {
            norm2.sqrt().map_err(wrap)?
        } else {
            Jet::constant(0.0, n, 1)
        };
        Ok(Self {
            mu,
            cos_theta,
            x_t,
            x_t_norm,
        })
    }

    pub(crate) fn degenerate(&self) -> bool {
        let eps = eps_tan(self.mu.value());
        self.mu.value() < eps || self.x_t_norm.value() < eps
    }

    pub(crate) fn theta(&self) -> Option<Jet> {
        if self.degenerate() {
            return None;
        }
        self.cos_theta.acos().ok()
    }

    /// Jets of the unit field `ê₁`.
    pub(crate) fn e1(&self) -> Option<Vec<Jet>> {
        (!self.degenerate()).then(|| self.x_t.iter().map(|c| *c / self.x_t_norm).collect())
    }
}

/// Decomposes the position vector at `p`.
pub fn position_angles(m: &Immersion, p: &[f64], pg: &PointGeometry) -> Result<PositionAngles, GcrError> {
    let fj = form_jets(m, p, 2)?;
    let aj = AngleJets::new(&fj)?;
    let n = pg.dim();
    let x = &pg.position;
    let mu = linalg::dot(x, x).sqrt();
    let cos_theta = if mu > 0.0 {
        (linalg::dot(x, &pg.normal) / mu).clamp(-1.0, 1.0)
    } else {
        1.0
    };
    let b: Vec<f64> = (0..n)
        .map(|i| (0..x.len()).map(|a| x[a] * pg.jac[a][i]).sum())
        .collect();
    let x_t = linalg::matvec(&pg.metric_inv, &b);
    let x_t_norm = pg.norm(&x_t);
    let eps = eps_tan(mu);
    let degenerate = mu < eps || x_t_norm < eps;
    let theta_grad = match aj.theta() {
        Some(t) if !degenerate => t.grad().to_vec(),
        _ => vec![0.0; n],
    };
    Ok(PositionAngles {
        mu,
        cos_theta,
        theta: cos_theta.acos(),
        x_t,
        x_t_norm,
        degenerate,
        theta_grad,
        mu_grad: aj.mu.grad().to_vec(),
    })
}

/// Both GCR residuals at a nondegenerate point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GcrResidual {
    /// `g`-norm of the part of `S ê₁` orthogonal to `ê₁`.
    pub primary: f64,
    /// `max |Y(θ)|` over unit `Y ⊥ x^T`.
    pub secondary: f64,
}

pub fn gcr_residual(pa: &PositionAngles, pg: &PointGeometry) -> Result<GcrResidual, GcrError> {
    let e1 = pa.e1().ok_or_else(|| GcrError::Degenerate {
        point: pg.point.clone(),
    })?;
    let se = linalg::matvec(&pg.shape, &e1);
    let along = pg.inner(&se, &e1);
    let perp: Vec<f64> = se.iter().zip(&e1).map(|(a, b)| a - along * b).collect();
    let primary = pg.norm(&perp);

    // grad θ = g⁻¹ dθ; remove its ê₁ component
    let grad = linalg::matvec(&pg.metric_inv, &pa.theta_grad);
    let d_e1 = linalg::dot(&pa.theta_grad, &e1);
    let total = linalg::dot(&pa.theta_grad, &grad);
    let secondary = (total - d_e1 * d_e1).max(0.0).sqrt();
    Ok(GcrResidual { primary, secondary })
}

/// Index of the principal direction best aligned with `ê₁` (ties go to the
/// smaller index).
pub fn k1_index(pd: &PrincipalData, e1: &[f64], pg: &PointGeometry) -> usize {
    let mut best = 0;
    let mut best_dot = -1.0;
    for (i, e) in pd.e.iter().enumerate() {
        let d = pg.inner(e, e1).abs();
        if d > best_dot {
            best = i;
            best_dot = d;
        }
    }
    best
}

/// Spectral δ(2)-ideal test: some ordering of `k` reads
/// `(a, b, a+b, …, a+b)` within `tol`.
pub fn delta2_ideal_test(k: &[f64], tol: f64) -> bool {
    let n = k.len();
    if n < 3 {
        return false;
    }
    (0..n).any(|i| {
        (0..n).filter(|&j| j != i).any(|j| {
            let s = k[i] + k[j];
            (0..n).filter(|&l| l != i && l != j).all(|l| (k[l] - s).abs() <= tol)
        })
    })
}

#[cfg(test)]
mod tests;

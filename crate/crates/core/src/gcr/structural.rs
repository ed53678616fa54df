//! Residuals of the structure equations satisfied along a GCR hypersurface.
//!
//! First-order quantities (`∇ê₁`, derivatives of `θ` and `μ`) come from
//! jets. Derivatives of principal curvatures and the connection forms of the
//! principal frame are central differences with sorted-index tracking, so
//! each check that needs a curvature to be simple is skipped (and named in
//! `skipped`) when its eigen-gap is below `tol.gap`.

use serde::Serialize;

use super::{k1_index, AngleJets, GcrError, PositionAngles, Tolerances};
use crate::geometry::{
    default_frame_step, form_jets, frame_connection_forms, principal_near, GeometryError, Immersion,
    PointGeometry, PrincipalData,
};
use crate::linalg;

/// Residuals of the three-dimensional Codazzi system in the frame
/// `(ê₁, e₂, e₃)`; `None` when skipped.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct CodazziSystem {
    /// `e₂(k₁)`, `e₃(k₁)`.
    pub k1_transverse: Option<f64>,
    /// `e₁(kᵢ) − (k₁ − kᵢ)(1 + μ cosθ kᵢ)/(μ sinθ)` for `i = 2, 3`.
    pub e1_derivatives: Option<f64>,
    /// `ω₂₃(e₁)(k₂ − k₃)`.
    pub omega23_e1: Option<f64>,
    /// `e₂(k₃) − (k₂ − k₃)ω₂₃(e₃)` and `e₃(k₂) − (k₂ − k₃)ω₂₃(e₂)`.
    pub frame_derivatives: Option<f64>,
    /// `e₂e₁(k₁)`, `e₃e₁(k₁)` by nested differencing.
    pub nested: Option<f64>,
}

impl CodazziSystem {
    /// Largest first-difference residual (everything but `nested`).
    pub fn max(&self) -> Option<f64> {
        [self.k1_transverse, self.e1_derivatives, self.omega23_e1, self.frame_derivatives]
            .into_iter()
            .flatten()
            .reduce(f64::max)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StructuralResiduals {
    /// Index of `k₁` among the sorted principal curvatures.
    pub k1_index: usize,
    /// `|∇_{ê₁} ê₁|`, from the tangential part of the ambient acceleration.
    pub geodesic: f64,
    /// `|k₁ − ê₁(θ) + cosθ/μ|`.
    pub k1_identity: f64,
    /// `max |eᵢ(θ)|, |eᵢ(μ)|` over the directions orthogonal to `ê₁`.
    pub level_sets: f64,
    /// `max |∇_{eᵢ} ê₁ − (1 + μ cosθ kᵢ)/(μ sinθ) eᵢ|`.
    pub shape_coefficients: f64,
    /// `max |ω₁₂(e₃)|, |ω₁₃(e₂)|` (three dimensions only).
    pub omega: Option<f64>,
    pub codazzi: CodazziSystem,
    pub skipped: Vec<String>,
}

impl StructuralResiduals {
    /// Largest residual of the jet-based first-order identities.
    pub fn max_first_order(&self) -> f64 {
        [self.geodesic, self.k1_identity, self.level_sets, self.shape_coefficients, self.omega.unwrap_or(0.0)]
            .into_iter()
            .fold(0.0, f64::max)
    }
}

/// Unit tangential part of the position vector, or `None` if it vanishes.
pub(crate) fn e1_of(pg: &PointGeometry) -> Option<Vec<f64>> {
    let n = pg.dim();
    let x = &pg.position;
    let b: Vec<f64> = (0..n).map(|i| (0..x.len()).map(|a| x[a] * pg.jac[a][i]).sum()).collect();
    let xt = linalg::matvec(&pg.metric_inv, &b);
    let norm = pg.norm(&xt);
    let mu = linalg::dot(x, x).sqrt();
    (norm >= super::eps_tan(mu) && mu > 0.0).then(|| xt.iter().map(|c| c / norm).collect())
}

fn shift(p: &[f64], dir: &[f64], h: f64) -> Vec<f64> {
    p.iter().zip(dir).map(|(x, d)| x + h * d).collect()
}

fn central(m: &Immersion, p: &[f64], dir: &[f64], h: f64) -> Result<Vec<f64>, GeometryError> {
    let (_, plus) = principal_near(m, &shift(p, dir, h), 0.0)?;
    let (_, minus) = principal_near(m, &shift(p, dir, -h), 0.0)?;
    Ok(plus.k.iter().zip(&minus.k).map(|(a, b)| (a - b) / (2.0 * h)).collect())
}

/// Directional derivatives of all sorted principal curvatures along `dir`
/// (central differences at `h` and `h/2`, Richardson-extrapolated).
fn k_derivative(m: &Immersion, p: &[f64], dir: &[f64], h: f64) -> Result<Vec<f64>, GeometryError> {
    let coarse = central(m, p, dir, h)?;
    let fine = central(m, p, dir, 0.5 * h)?;
    Ok(fine.iter().zip(&coarse).map(|(f, c)| (4.0 * f - c) / 3.0).collect())
}

/// `ê₁(k₁)` at `q`, with `ê₁` recomputed there.
fn e1_k1_at(m: &Immersion, q: &[f64], i1: usize, h: f64) -> Result<Option<f64>, GeometryError> {
    let (pg, _) = principal_near(m, q, 0.0)?;
    match e1_of(&pg) {
        Some(e1) => Ok(Some(k_derivative(m, q, &e1, h)?[i1])),
        None => Ok(None),
    }
}

/// Evaluates the structure-equation residuals at a GCR point `p`.
pub fn structural_residuals(
    m: &Immersion,
    p: &[f64],
    pg: &PointGeometry,
    pd: &PrincipalData,
    pa: &PositionAngles,
    tol: &Tolerances,
) -> Result<StructuralResiduals, GcrError> {
    let n = pg.dim();
    let degenerate = || GcrError::Degenerate { point: p.to_vec() };
    let fj = form_jets(m, p, 2)?;
    let aj = AngleJets::new(&fj)?;
    let e1_jets = aj.e1().ok_or_else(degenerate)?;
    let theta = aj.theta().ok_or_else(degenerate)?;
    let e1: Vec<f64> = e1_jets.iter().map(|j| j.value()).collect();
    let i1 = k1_index(pd, &e1, pg);
    let k = &pd.k;
    let others: Vec<usize> = (0..n).filter(|&i| i != i1).collect();
    // principal frame of ê₁^⊥; differs from `pd.e` only inside an eigenspace
    // shared with k₁
    let mut frame: Vec<Vec<f64>> = vec![];
    for &i in &others {
        let mut v = pd.e[i].clone();
        for b in std::iter::once(&e1).chain(frame.iter()) {
            let c = pg.inner(&v, b);
            v.iter_mut().zip(b).for_each(|(x, y)| *x -= c * y);
        }
        let norm = pg.norm(&v);
        frame.push(v.iter().map(|x| x / norm).collect());
    }
    let kf: Vec<f64> = frame.iter().map(|v| linalg::form(&pg.h, v, v)).collect();
    let (mu, cos_t) = (pa.mu, pa.cos_theta);
    let sin_t = pa.x_t_norm / mu;

    // ∇_X ê₁ = dê₁(X) + Γ(X, ê₁)
    let nabla_e1 = |x: &[f64]| -> Vec<f64> {
        let corr = pg.christoffel_apply(x, &e1);
        (0..n)
            .map(|c| linalg::dot(e1_jets[c].grad(), x) + corr[c])
            .collect()
    };

    // ambient acceleration of the ê₁ flow, minus its normal part
    let de1: Vec<f64> = (0..n).map(|c| linalg::dot(e1_jets[c].grad(), &e1)).collect();
    let acc: Vec<f64> = (0..pg.position.len())
        .map(|a| linalg::form(&pg.second[a], &e1, &e1) + linalg::dot(&pg.jac[a], &de1))
        .collect();
    let an = linalg::dot(&acc, &pg.normal);
    let geodesic = acc
        .iter()
        .zip(&pg.normal)
        .map(|(x, nn)| (x - an * nn).powi(2))
        .sum::<f64>()
        .sqrt();

    let k1_identity = (k[i1] - linalg::dot(theta.grad(), &e1) + cos_t / mu).abs();

    let mut level_sets: f64 = 0.0;
    let mut shape_coefficients: f64 = 0.0;
    for (ei, &ki) in frame.iter().zip(&kf) {
        level_sets = level_sets
            .max(linalg::dot(theta.grad(), ei).abs())
            .max(linalg::dot(aj.mu.grad(), ei).abs());
        let c = (1.0 + mu * cos_t * ki) / (mu * sin_t);
        let v = nabla_e1(ei);
        let d: Vec<f64> = v.iter().zip(ei).map(|(a, b)| a - c * b).collect();
        shape_coefficients = shape_coefficients.max(pg.norm(&d));
    }

    let mut out = StructuralResiduals {
        k1_index: i1,
        geodesic,
        k1_identity,
        level_sets,
        shape_coefficients,
        omega: None,
        codazzi: CodazziSystem::default(),
        skipped: vec![],
    };
    if n != 3 {
        out.skipped.push("codazzi system: chart dimension is not 3".into());
        return Ok(out);
    }
    let (j2, j3) = (others[0], others[1]);
    let (e2, e3) = (&frame[0], &frame[1]);
    out.omega = Some(pg.inner(&nabla_e1(e3), e2).abs().max(pg.inner(&nabla_e1(e2), e3).abs()));

    let h = tol.step.unwrap_or_else(|| default_frame_step(m));
    let mut cs = CodazziSystem::default();
    let k1_simple = pd.gap_of(i1) >= tol.gap;
    if k1_simple {
        let d2 = k_derivative(m, p, e2, h)?;
        let d3 = k_derivative(m, p, e3, h)?;
        cs.k1_transverse = Some(d2[i1].abs().max(d3[i1].abs()));

        let d1 = k_derivative(m, p, &e1, h)?;
        let rhs = |ki: f64| (k[i1] - ki) * (1.0 + mu * cos_t * ki) / (mu * sin_t);
        cs.e1_derivatives = Some(if (k[j2] - k[j3]).abs() >= tol.gap {
            (d1[j2] - rhs(k[j2])).abs().max((d1[j3] - rhs(k[j3])).abs())
        } else {
            // k₂ = k₃ here: only their mean is differentiable
            let mean = 0.5 * (k[j2] + k[j3]);
            (0.5 * (d1[j2] + d1[j3]) - rhs(mean)).abs()
        });

        let mut nested: f64 = 0.0;
        let mut complete = true;
        for ej in [e2, e3] {
            match (e1_k1_at(m, &shift(p, ej, h), i1, h)?, e1_k1_at(m, &shift(p, ej, -h), i1, h)?) {
                (Some(a), Some(b)) => nested = nested.max(((a - b) / (2.0 * h)).abs()),
                _ => complete = false,
            }
        }
        if complete {
            cs.nested = Some(nested);
        } else {
            out.skipped.push("nested: tangential part vanishes near the point".into());
        }
    } else {
        out.skipped.push("k1_transverse, e1_derivatives, nested: k1 is not simple".into());
    }

    if pd.gap >= tol.gap {
        let omega = frame_connection_forms(m, p, pd, h, tol.gap)?;
        let w23 = |l: usize| omega[j2][j3][l];
        cs.omega23_e1 = Some((omega_along(&omega, j2, j3, pd, pg, &e1) * (k[j2] - k[j3])).abs());
        let d2 = k_derivative(m, p, e2, h)?;
        let d3 = k_derivative(m, p, e3, h)?;
        cs.frame_derivatives = Some(
            (d2[j3] - (k[j2] - k[j3]) * w23(j3))
                .abs()
                .max((d3[j2] - (k[j2] - k[j3]) * w23(j2)).abs()),
        );
    } else {
        out.skipped.push("omega23_e1, frame_derivatives: principal curvatures not distinct".into());
    }
    out.codazzi = cs;
    Ok(out)
}

/// `ω_ij(X)` for a unit vector `X`, expanded in the principal frame.
fn omega_along(
    omega: &[Vec<Vec<f64>>],
    i: usize,
    j: usize,
    pd: &PrincipalData,
    pg: &PointGeometry,
    x: &[f64],
) -> f64 {
    (0..pd.e.len()).map(|l| omega[i][j][l] * pg.inner(x, &pd.e[l])).sum()
}

//! Extrinsic and intrinsic geometry of an immersion `x: U ⊂ Rⁿ → Rⁿ⁺¹`.
//!
//! Everything is assembled from exact jets of the position vector: the
//! metric, unit normal, second fundamental form and Christoffel symbols are
//! themselves jets, so their chart derivatives (needed by the Gauss and
//! Codazzi residuals) come without differencing.

mod immersion;
mod principal;
mod residuals;

pub use immersion::{evaluate_jets, ChartMap, DomainBox, EvalError, ExprMap, Immersion};
pub use principal::{
    curvature_invariants, principal_data, CurvatureInvariants, PrincipalData, DEFAULT_TOL_GAP,
};
pub use residuals::{
    codazzi_residual, codazzi_residual_from, default_frame_step, frame_connection_forms, gauss_residual,
    gauss_residual_from, riemann_from, riemann_tensor, sectional_curvature, ConnectionForms,
};
pub(crate) use residuals::principal_near;

use serde::Serialize;
use thiserror::Error;

use crate::jet::Jet;
use crate::linalg::{self, Matrix};

/// Regularity threshold on `det g`.
pub const EPS_REG: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("point {point:?} lies outside the chart domain")]
    OutOfDomain { point: Vec<f64> },
    #[error("expected a {expected}-dimensional chart point, got {found} coordinates")]
    Dimension { expected: usize, found: usize },
    #[error("evaluation failed at {point:?}: {source}")]
    Evaluation { point: Vec<f64>, source: EvalError },
    #[error("singular point {point:?}: det g = {det:e}")]
    Singular { point: Vec<f64>, det: f64 },
    #[error("near-umbilic point {point:?}: eigen-gap {gap:e} below tolerance")]
    NearUmbilic { point: Vec<f64>, gap: f64 },
}

impl GeometryError {
    pub fn point(&self) -> Option<&[f64]> {
        match self {
            GeometryError::OutOfDomain { point }
            | GeometryError::Evaluation { point, .. }
            | GeometryError::Singular { point, .. }
            | GeometryError::NearUmbilic { point, .. } => Some(point),
            GeometryError::Dimension { .. } => None,
        }
    }
}

/// Per-point geometry of the immersion.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PointGeometry {
    pub point: Vec<f64>,
    pub position: Vec<f64>,
    /// `jac[a][i] = ∂x^a/∂u_i`
    pub jac: Matrix,
    /// `second[a][i][j] = ∂²x^a/∂u_i∂u_j`
    pub second: Vec<Matrix>,
    pub metric: Matrix,
    pub metric_inv: Matrix,
    pub det_metric: f64,
    pub normal: Vec<f64>,
    /// Second fundamental form `h_ij = ⟨x_ij, N⟩`.
    pub h: Matrix,
    /// `christoffel[k][i][j] = Γ^k_ij`
    pub christoffel: Vec<Matrix>,
    /// Shape operator in chart coordinates, `S = g⁻¹h` (acts on column vectors).
    pub shape: Matrix,
}

impl PointGeometry {
    pub fn dim(&self) -> usize {
        self.metric.len()
    }

    /// Lifts a chart vector to the ambient space.
    pub fn push_forward(&self, v: &[f64]) -> Vec<f64> {
        linalg::matvec(&self.jac, v)
    }

    pub fn inner(&self, a: &[f64], b: &[f64]) -> f64 {
        linalg::form(&self.metric, a, b)
    }

    pub fn norm(&self, a: &[f64]) -> f64 {
        self.inner(a, a).max(0.0).sqrt()
    }

    /// `Γ(u, v)^k = Γ^k_ij u^i v^j`
    pub fn christoffel_apply(&self, u: &[f64], v: &[f64]) -> Vec<f64> {
        self.christoffel.iter().map(|gk| linalg::form(gk, u, v)).collect()
    }
}

/// Jets of the first- and second-order geometric fields at a point.
///
/// Built from order-`r` position jets: the metric and normal carry order
/// `r − 1`, the second fundamental form and Christoffel symbols order `r − 2`.
#[derive(Debug, Clone)]
pub struct FormJets {
    pub point: Vec<f64>,
    pub position: Vec<Jet>,
    /// `tangents[i][a] = ∂_i x^a`
    pub tangents: Vec<Vec<Jet>>,
    pub metric: Vec<Vec<Jet>>,
    pub normal: Vec<Jet>,
    pub h: Vec<Vec<Jet>>,
    pub metric_inv: Vec<Vec<Jet>>,
    /// `christoffel[k][i][j] = Γ^k_ij`
    pub christoffel: Vec<Vec<Vec<Jet>>>,
}

impl FormJets {
    pub fn from_position(position: Vec<Jet>, point: &[f64]) -> Result<Self, GeometryError> {
        let m = position.len();
        let n = m - 1;
        let order = position[0].order();
        assert!(order >= 2, "form jets need position jets of order ≥ 2");

        let tangents: Vec<Vec<Jet>> =
            (0..n).map(|i| position.iter().map(|x| x.derivative(i)).collect()).collect();
        let metric: Vec<Vec<Jet>> = (0..n)
            .map(|i| (0..n).map(|j| dot_jets(&tangents[i], &tangents[j])).collect())
            .collect();

        let g_vals: Matrix = metric.iter().map(|r| r.iter().map(Jet::value).collect()).collect();
        let det = linalg::det(&g_vals);
        if !(det > EPS_REG) {
            return Err(GeometryError::Singular {
                point: point.to_vec(),
                det,
            });
        }

        // rows = ambient components, columns = chart directions
        let rows: Vec<Vec<Jet>> = (0..m).map(|a| (0..n).map(|i| tangents[i][a]).collect()).collect();
        let cross = linalg::generalized_cross(&rows);
        let len = dot_jets(&cross, &cross).sqrt().map_err(|e| GeometryError::Evaluation {
            point: point.to_vec(),
            source: e.into(),
        })?;
        let normal: Vec<Jet> = cross.iter().map(|c| *c / len).collect();

        let low = order - 2;
        let normal_low: Vec<Jet> = normal.iter().map(|c| c.truncate(low)).collect();
        let h: Vec<Vec<Jet>> = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| {
                        let xij: Vec<Jet> = tangents[i].iter().map(|t| t.derivative(j)).collect();
                        dot_jets(&xij, &normal_low)
                    })
                    .collect()
            })
            .collect();

        // Γ_{l,ij} = ½(∂_i g_jl + ∂_j g_il − ∂_l g_ij)
        let lower: Vec<Vec<Vec<Jet>>> = (0..n)
            .map(|l| {
                (0..n)
                    .map(|i| {
                        (0..n)
                            .map(|j| {
                                (metric[j][l].derivative(i) + metric[i][l].derivative(j)
                                    - metric[i][j].derivative(l))
                                    * 0.5
                            })
                            .collect()
                    })
                    .collect()
            })
            .collect();
        let g_low: Vec<Vec<Jet>> = metric.iter().map(|r| r.iter().map(|x| x.truncate(low)).collect()).collect();
        let metric_inv = linalg::inverse_cofactor(&g_low, |a, b| a / b);
        let christoffel: Vec<Vec<Vec<Jet>>> = (0..n)
            .map(|k| {
                (0..n)
                    .map(|i| {
                        (0..n)
                            .map(|j| {
                                let mut acc = Jet::constant(0.0, n, low);
                                for l in 0..n {
                                    acc += metric_inv[k][l] * lower[l][i][j];
                                }
                                acc
                            })
                            .collect()
                    })
                    .collect()
            })
            .collect();

        Ok(Self {
            point: point.to_vec(),
            position,
            tangents,
            metric,
            normal,
            h,
            metric_inv,
            christoffel,
        })
    }

    pub fn dim(&self) -> usize {
        self.metric.len()
    }

    /// Plain values of all fields.
    pub fn point_geometry(&self) -> PointGeometry {
        let n = self.dim();
        let vals = |m: &Vec<Vec<Jet>>| -> Matrix { m.iter().map(|r| r.iter().map(Jet::value).collect()).collect() };
        let metric = vals(&self.metric);
        let metric_inv = vals(&self.metric_inv);
        let h = vals(&self.h);
        let shape = linalg::matmul(&metric_inv, &h);
        PointGeometry {
            point: self.point.clone(),
            position: self.position.iter().map(Jet::value).collect(),
            jac: self.position.iter().map(|x| x.grad().to_vec()).collect(),
            second: self.position.iter().map(Jet::hess_matrix).collect(),
            det_metric: linalg::det(&metric),
            metric,
            metric_inv,
            normal: self.normal.iter().map(Jet::value).collect(),
            h,
            christoffel: (0..n).map(|k| vals(&self.christoffel[k])).collect(),
            shape,
        }
    }
}

pub(crate) fn dot_jets(a: &[Jet], b: &[Jet]) -> Jet {
    let mut acc = a[0] * b[0];
    for (x, y) in a.iter().zip(b).skip(1) {
        acc += *x * *y;
    }
    acc
}

/// Fundamental forms, normal, Christoffel symbols and shape operator at `p`.
pub fn point_geometry(m: &Immersion, p: &[f64]) -> Result<PointGeometry, GeometryError> {
    m.check_point(p)?;
    Ok(form_jets(m, p, 2)?.point_geometry())
}

/// Form jets at `p` built from position jets of the given order (2 or 3).
/// Does not require `p` to lie in the domain box, only that the map is
/// evaluable there.
pub fn form_jets(m: &Immersion, p: &[f64], order: u8) -> Result<FormJets, GeometryError> {
    FormJets::from_position(m.jets_at(p, order)?, p)
}

#[cfg(test)]
mod tests;

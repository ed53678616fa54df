use serde::Serialize;

use super::{GeometryError, PointGeometry};
use crate::linalg::{self, Matrix};

/// Default minimum eigen-gap for tracking principal directions.
pub const DEFAULT_TOL_GAP: f64 = 1e-4;

/// Principal curvatures (ascending) and g-orthonormal principal directions.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PrincipalData {
    pub k: Vec<f64>,
    /// `e[i]` is the chart-coordinate direction for `k[i]`.
    pub e: Matrix,
    /// Smallest pairwise `|k_i − k_j|` (infinite when `n = 1`).
    pub gap: f64,
    pub distinct_count: usize,
}

impl PrincipalData {
    /// Smallest distance from `k[i]` to any other principal curvature.
    pub fn gap_of(&self, i: usize) -> f64 {
        self.k
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != i)
            .map(|(_, kj)| (kj - self.k[i]).abs())
            .fold(f64::INFINITY, f64::min)
    }
}

/// Solves `h v = k g v` by Cholesky reduction and cyclic Jacobi.
pub fn principal_data(pg: &PointGeometry, tol_gap: f64) -> Result<PrincipalData, GeometryError> {
    let n = pg.dim();
    let l = linalg::cholesky(&pg.metric).ok_or_else(|| GeometryError::Singular {
        point: pg.point.clone(),
        det: pg.det_metric,
    })?;
    // A = L⁻¹ h L⁻ᵀ
    let cols: Vec<Vec<f64>> = (0..n)
        .map(|j| linalg::solve_lower(&l, &pg.h.iter().map(|r| r[j]).collect::<Vec<_>>()))
        .collect();
    // cols[j] is column j of M = L⁻¹h; the rows of M are then mapped by L⁻¹
    let rows_of_m: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| cols[j][i]).collect()).collect();
    let a_cols: Vec<Vec<f64>> = rows_of_m.iter().map(|r| linalg::solve_lower(&l, r)).collect();
    let mut a = linalg::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            a[i][j] = 0.5 * (a_cols[j][i] + a_cols[i][j]);
        }
    }

    let (vals, q) = linalg::jacobi_eigen(&a);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| vals[x].total_cmp(&vals[y]));

    let k: Vec<f64> = order.iter().map(|&i| vals[i]).collect();
    let e: Matrix = order
        .iter()
        .map(|&i| {
            let qi: Vec<f64> = (0..n).map(|r| q[r][i]).collect();
            let mut v = linalg::solve_lower_transpose(&l, &qi);
            let lead = v.iter().copied().fold(0.0_f64, |m, x| if x.abs() > m.abs() { x } else { m });
            if lead < 0.0 {
                v.iter_mut().for_each(|x| *x = -*x);
            }
            v
        })
        .collect();

    let gap = k.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min);
    let distinct_count = 1 + k.windows(2).filter(|w| w[1] - w[0] > tol_gap).count();
    Ok(PrincipalData {
        k,
        e,
        gap,
        distinct_count,
    })
}

/// Elementary symmetric functions of the principal curvatures and the
/// normalized mean curvatures `H_k = s_k / C(n, k)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurvatureInvariants {
    pub s: Vec<f64>,
    #[serde(rename = "H")]
    pub h: Vec<f64>,
}

impl CurvatureInvariants {
    /// Gauss–Kronecker curvature.
    pub fn gauss_kronecker(&self) -> f64 {
        *self.h.last().unwrap_or(&1.0)
    }
}

pub fn curvature_invariants(k: &[f64]) -> CurvatureInvariants {
    let n = k.len();
    let mut e = vec![0.0; n + 1];
    e[0] = 1.0;
    for &ki in k {
        for j in (1..=n).rev() {
            e[j] += ki * e[j - 1];
        }
    }
    let s: Vec<f64> = e[1..].to_vec();
    let h = s
        .iter()
        .enumerate()
        .map(|(i, si)| si / binomial(n, i + 1))
        .collect();
    CurvatureInvariants { s, h }
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

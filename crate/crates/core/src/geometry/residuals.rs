use super::{form_jets, principal_data, FormJets, GeometryError, Immersion, PointGeometry, PrincipalData};
use crate::linalg::{self, Matrix};

/// `omega[i][j][l] = ω_ij(e_l) = ⟨∇_{e_l} e_i, e_j⟩`
pub type ConnectionForms = Vec<Vec<Vec<f64>>>;

/// Max over index triples of `|(∇_i h)_jk − (∇_j h)_ik|`.
pub fn codazzi_residual(m: &Immersion, p: &[f64]) -> Result<f64, GeometryError> {
    m.check_point(p)?;
    Ok(codazzi_residual_from(&form_jets(m, p, 3)?))
}

/// Codazzi residual of explicit order-3 form jets. The fields may be
/// altered beforehand, e.g. to check that a corrupted second form is caught.
pub fn codazzi_residual_from(fj: &FormJets) -> f64 {
    let n = fj.dim();
    let h = |a: usize, b: usize| fj.h[a][b].value();
    let gamma = |k: usize, a: usize, b: usize| fj.christoffel[k][a][b].value();
    let nabla = |i: usize, j: usize, k: usize| {
        let mut v = fj.h[j][k].grad()[i];
        for l in 0..n {
            v -= gamma(l, i, j) * h(l, k) + gamma(l, i, k) * h(j, l);
        }
        v
    };
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                worst = worst.max((nabla(i, j, k) - nabla(j, i, k)).abs());
            }
        }
    }
    worst
}

/// Intrinsic curvature `R[i][j][k][l] = ⟨R(∂_i, ∂_j)∂_k, ∂_l⟩` built from
/// Christoffel symbols and their exact chart derivatives.
pub fn riemann_from(fj: &FormJets) -> Vec<Vec<Vec<Vec<f64>>>> {
    let n = fj.dim();
    let gamma = |k: usize, a: usize, b: usize| fj.christoffel[k][a][b].value();
    let d_gamma = |i: usize, k: usize, a: usize, b: usize| fj.christoffel[k][a][b].grad()[i];
    let mut r = vec![vec![vec![vec![0.0; n]; n]; n]; n];
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                // R^m_ijk
                let upper: Vec<f64> = (0..n)
                    .map(|mm| {
                        let mut v = d_gamma(i, mm, j, k) - d_gamma(j, mm, i, k);
                        for q in 0..n {
                            v += gamma(q, j, k) * gamma(mm, i, q) - gamma(q, i, k) * gamma(mm, j, q);
                        }
                        v
                    })
                    .collect();
                for l in 0..n {
                    r[i][j][k][l] = (0..n).map(|mm| fj.metric[l][mm].value() * upper[mm]).sum();
                }
            }
        }
    }
    r
}

pub fn riemann_tensor(m: &Immersion, p: &[f64]) -> Result<Vec<Vec<Vec<Vec<f64>>>>, GeometryError> {
    m.check_point(p)?;
    Ok(riemann_from(&form_jets(m, p, 3)?))
}

/// Max over index quadruples of `|R_ijkl − (h_jk h_il − h_ik h_jl)|`.
pub fn gauss_residual(m: &Immersion, p: &[f64]) -> Result<f64, GeometryError> {
    m.check_point(p)?;
    Ok(gauss_residual_from(&form_jets(m, p, 3)?))
}

pub fn gauss_residual_from(fj: &FormJets) -> f64 {
    let n = fj.dim();
    let r = riemann_from(fj);
    let h = |a: usize, b: usize| fj.h[a][b].value();
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                for l in 0..n {
                    let rhs = h(j, k) * h(i, l) - h(i, k) * h(j, l);
                    worst = worst.max((r[i][j][k][l] - rhs).abs());
                }
            }
        }
    }
    worst
}

/// Sectional curvature of the coordinate plane `span{∂_i, ∂_j}`.
pub fn sectional_curvature(m: &Immersion, p: &[f64], i: usize, j: usize) -> Result<f64, GeometryError> {
    m.check_point(p)?;
    let fj = form_jets(m, p, 3)?;
    let r = riemann_from(&fj);
    let g = |a: usize, b: usize| fj.metric[a][b].value();
    Ok(r[i][j][j][i] / (g(i, i) * g(j, j) - g(i, j) * g(i, j)))
}

/// Principal data at a chart point that may lie slightly outside the domain
/// box (difference stencils).
pub(crate) fn principal_near(
    m: &Immersion,
    p: &[f64],
    tol_gap: f64,
) -> Result<(PointGeometry, PrincipalData), GeometryError> {
    let pg = form_jets(m, p, 2)?.point_geometry();
    let pd = principal_data(&pg, tol_gap)?;
    Ok((pg, pd))
}

/// Flips the directions of `other` so each has a nonnegative `g`-inner
/// product with the matching direction of `reference`.
pub(crate) fn align_frame(reference: &PrincipalData, other: &mut PrincipalData, g: &[Vec<f64>]) {
    for (r, e) in reference.e.iter().zip(other.e.iter_mut()) {
        if linalg::form(g, r, e) < 0.0 {
            e.iter_mut().for_each(|x| *x = -*x);
        }
    }
}

/// Connection forms of the principal frame by central differencing of the
/// sign-aligned frame along each principal direction (steps `h` and `h/2`,
/// Richardson-extrapolated).
pub fn frame_connection_forms(
    m: &Immersion,
    p: &[f64],
    pd: &PrincipalData,
    step: f64,
    tol_gap: f64,
) -> Result<ConnectionForms, GeometryError> {
    m.check_point(p)?;
    if pd.gap < tol_gap {
        return Err(GeometryError::NearUmbilic {
            point: p.to_vec(),
            gap: pd.gap,
        });
    }
    let n = m.dim();
    let pg = form_jets(m, p, 2)?.point_geometry();
    let mut omega = vec![vec![vec![0.0; n]; n]; n];
    for l in 0..n {
        let el = &pd.e[l];
        let shifted = |offset: f64| -> Result<PrincipalData, GeometryError> {
            let q: Vec<f64> = p.iter().zip(el).map(|(x, d)| x + offset * d).collect();
            let (_, mut other) = principal_near(m, &q, tol_gap)?;
            align_frame(pd, &mut other, &pg.metric);
            Ok(other)
        };
        let central = |h: f64| -> Result<Matrix, GeometryError> {
            let (plus, minus) = (shifted(h)?, shifted(-h)?);
            Ok((0..n)
                .map(|i| (0..n).map(|c| (plus.e[i][c] - minus.e[i][c]) / (2.0 * h)).collect())
                .collect())
        };
        let (coarse, fine) = (central(step)?, central(0.5 * step)?);
        for i in 0..n {
            let de: Vec<f64> = (0..n).map(|c| (4.0 * fine[i][c] - coarse[i][c]) / 3.0).collect();
            let corr = pg.christoffel_apply(el, &pd.e[i]);
            let cov: Vec<f64> = de.iter().zip(&corr).map(|(a, b)| a + b).collect();
            for j in 0..n {
                omega[i][j][l] = pg.inner(&cov, &pd.e[j]);
            }
        }
    }
    for l in 0..n {
        for i in 0..n {
            for j in i..n {
                let a = 0.5 * (omega[i][j][l] - omega[j][i][l]);
                omega[i][j][l] = a;
                omega[j][i][l] = -a;
            }
        }
    }
    Ok(omega)
}

/// Default differencing step for a domain.
pub fn default_frame_step(m: &Immersion) -> f64 {
    1e-4 * m.domain().extent().max(f64::MIN_POSITIVE)
}

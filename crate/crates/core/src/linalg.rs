//! Small dense linear algebra for n ≤ 4: Cholesky factorization, cyclic
//! Jacobi for symmetric eigenproblems, and determinant/cofactor helpers that
//! work on any ring-like scalar (plain floats and jets alike).

use std::ops::{Add, Mul, Neg, Sub};

pub type Matrix = Vec<Vec<f64>>;

pub fn zeros(n: usize, m: usize) -> Matrix {
    vec![vec![0.0; m]; n]
}

pub fn identity(n: usize) -> Matrix {
    let mut a = zeros(n, n);
    for (i, row) in a.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    a
}

pub fn transpose(a: &[Vec<f64>]) -> Matrix {
    if a.is_empty() {
        return Vec::new();
    }
    (0..a[0].len()).map(|j| a.iter().map(|r| r[j]).collect()).collect()
}

pub fn matmul(a: &[Vec<f64>], b: &[Vec<f64>]) -> Matrix {
    let m = b[0].len();
    a.iter()
        .map(|row| (0..m).map(|j| row.iter().zip(b).map(|(x, brow)| x * brow[j]).sum()).collect())
        .collect()
}

pub fn matvec(a: &[Vec<f64>], v: &[f64]) -> Vec<f64> {
    a.iter().map(|row| dot(row, v)).collect()
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `aᵀ G b` for a bilinear form `G`.
pub fn form(g: &[Vec<f64>], a: &[f64], b: &[f64]) -> f64 {
    dot(a, &matvec(g, b))
}

pub fn max_abs(a: &[Vec<f64>]) -> f64 {
    a.iter().flatten().fold(0.0, |m: f64, x| m.max(x.abs()))
}

/// Lower-triangular `L` with `a = L Lᵀ`, or `None` if `a` is not
/// (numerically) positive definite.
pub fn cholesky(a: &[Vec<f64>]) -> Option<Matrix> {
    let n = a.len();
    let mut l = zeros(n, n);
    for j in 0..n {
        let mut d = a[j][j];
        for k in 0..j {
            d -= l[j][k] * l[j][k];
        }
        if !(d > 0.0) {
            return None;
        }
        let djj = d.sqrt();
        l[j][j] = djj;
        for i in (j + 1)..n {
            let mut s = a[i][j];
            for k in 0..j {
                s -= l[i][k] * l[j][k];
            }
            l[i][j] = s / djj;
        }
    }
    Some(l)
}

/// Solves `L x = b` for lower-triangular `L`.
pub fn solve_lower(l: &[Vec<f64>], b: &[f64]) -> Vec<f64> {
    let n = b.len();
    let mut x = vec![0.0; n];
    for i in 0..n {
        let s: f64 = (0..i).map(|k| l[i][k] * x[k]).sum();
        x[i] = (b[i] - s) / l[i][i];
    }
    x
}

/// Solves `Lᵀ x = b` for lower-triangular `L`.
pub fn solve_lower_transpose(l: &[Vec<f64>], b: &[f64]) -> Vec<f64> {
    let n = b.len();
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let s: f64 = ((i + 1)..n).map(|k| l[k][i] * x[k]).sum();
        x[i] = (b[i] - s) / l[i][i];
    }
    x
}

/// Solves `a x = b` for symmetric positive definite `a`.
pub fn solve_spd(a: &[Vec<f64>], b: &[f64]) -> Option<Vec<f64>> {
    let l = cholesky(a)?;
    Some(solve_lower_transpose(&l, &solve_lower(&l, b)))
}

pub fn inverse_spd(a: &[Vec<f64>]) -> Option<Matrix> {
    let n = a.len();
    let l = cholesky(a)?;
    let mut inv = zeros(n, n);
    for j in 0..n {
        let mut e = vec![0.0; n];
        e[j] = 1.0;
        let col = solve_lower_transpose(&l, &solve_lower(&l, &e));
        for i in 0..n {
            inv[i][j] = col[i];
        }
    }
    // symmetrize away round-off
    for i in 0..n {
        for j in (i + 1)..n {
            let v = 0.5 * (inv[i][j] + inv[j][i]);
            inv[i][j] = v;
            inv[j][i] = v;
        }
    }
    Some(inv)
}

/// Eigen-decomposition of a real symmetric matrix by cyclic Jacobi
/// rotations. Returns unsorted eigenvalues and the eigenvectors as the
/// columns of the second matrix.
pub fn jacobi_eigen(a: &[Vec<f64>]) -> (Vec<f64>, Matrix) {
    const MAX_SWEEPS: usize = 64;
    let n = a.len();
    let mut a: Matrix = a.to_vec();
    let mut v = identity(n);
    let scale = max_abs(&a).max(f64::MIN_POSITIVE);

    for _ in 0..MAX_SWEEPS {
        let off: f64 = (0..n)
            .flat_map(|p| ((p + 1)..n).map(move |q| (p, q)))
            .map(|(p, q)| a[p][q] * a[p][q])
            .sum();
        if off.sqrt() <= 1e-17 * scale {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[p][q];
                if apq.abs() <= 1e-300 {
                    continue;
                }
                let tau = (a[q][q] - a[p][p]) / (2.0 * apq);
                let t = if tau >= 0.0 {
                    1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    -1.0 / (-tau + (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                // A ← A J
                for row in a.iter_mut() {
                    let (akp, akq) = (row[p], row[q]);
                    row[p] = c * akp - s * akq;
                    row[q] = s * akp + c * akq;
                }
                // A ← Jᵀ A
                for k in 0..n {
                    let (apk, aqk) = (a[p][k], a[q][k]);
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
                a[p][q] = 0.0;
                a[q][p] = 0.0;
                for row in v.iter_mut() {
                    let (vkp, vkq) = (row[p], row[q]);
                    row[p] = c * vkp - s * vkq;
                    row[q] = s * vkp + c * vkq;
                }
            }
        }
    }
    ((0..n).map(|i| a[i][i]).collect(), v)
}

/// Determinant of a square matrix of size ≤ 4 over any ring-like scalar.
pub fn det<T>(m: &[Vec<T>]) -> T
where
    T: Copy + Add<Output = T> + Sub<Output = T> + Mul<Output = T> + Neg<Output = T>,
{
    match m.len() {
        1 => m[0][0],
        2 => m[0][0] * m[1][1] - m[0][1] * m[1][0],
        3 => {
            m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
                + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
        }
        n => {
            assert!(n == 4, "det supports sizes 1..=4");
            let mut acc: Option<T> = None;
            for j in 0..4 {
                let minor: Vec<Vec<T>> = m[1..]
                    .iter()
                    .map(|r| r.iter().enumerate().filter(|(c, _)| *c != j).map(|(_, x)| *x).collect())
                    .collect();
                let term = m[0][j] * det(&minor);
                let term = if j % 2 == 0 { term } else { -term };
                acc = Some(match acc {
                    None => term,
                    Some(a) => a + term,
                });
            }
            acc.unwrap()
        }
    }
}

/// Generalized cross product of the `n` columns of an `(n+1)×n` matrix:
/// the vector `c` with `det[cols | v] = ⟨c, v⟩` for every `v`, so that
/// `{cols…, c}` is positively oriented.
pub fn generalized_cross<T>(rows: &[Vec<T>]) -> Vec<T>
where
    T: Copy + Add<Output = T> + Sub<Output = T> + Mul<Output = T> + Neg<Output = T>,
{
    let m = rows.len();
    let n = m - 1;
    (0..m)
        .map(|a| {
            let minor: Vec<Vec<T>> = rows
                .iter()
                .enumerate()
                .filter(|(r, _)| *r != a)
                .map(|(_, row)| row.clone())
                .collect();
            let d = det(&minor);
            if (a + n).is_multiple_of(2) {
                d
            } else {
                -d
            }
        })
        .collect()
}

/// Inverse of a 1×1, 2×2 or 3×3 matrix by cofactors, over any field-like
/// scalar (division supplied by the caller).
pub fn inverse_cofactor<T>(m: &[Vec<T>], div: impl Fn(T, T) -> T) -> Vec<Vec<T>>
where
    T: Copy + Add<Output = T> + Sub<Output = T> + Mul<Output = T> + Neg<Output = T>,
{
    let n = m.len();
    let d = det(m);
    if n == 1 {
        let one = div(d, d);
        return vec![vec![div(one, d)]];
    }
    let mut inv = Vec::with_capacity(n);
    for i in 0..n {
        let mut row = Vec::with_capacity(n);
        for j in 0..n {
            // adjugate: cofactor of (j, i)
            let minor: Vec<Vec<T>> = m
                .iter()
                .enumerate()
                .filter(|(r, _)| *r != j)
                .map(|(_, r)| r.iter().enumerate().filter(|(c, _)| *c != i).map(|(_, x)| *x).collect())
                .collect();
            let c = det(&minor);
            let c = if (i + j) % 2 == 0 { c } else { -c };
            row.push(div(c, d));
        }
        inv.push(row);
    }
    inv
}

//! Central finite differences, used only as an independent oracle in tests
//! and cross-checks. Production paths never call into this module.

use thiserror::Error;

use super::{Jet, MAX_DIM};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FdError {
    #[error("finite-difference stencil failed at {point:?}: {message}")]
    Stencil { point: Vec<f64>, message: String },
    #[error("finite differences need 1..=3 chart variables, got {0}")]
    Dimension(usize),
    #[error("step must be positive, got {0}")]
    Step(f64),
}

/// Default step for estimating derivatives of the given order at a
/// coordinate of magnitude `coord`. First and second derivatives use the
/// step balancing O(h²) truncation against round-off (`eps^(1/(order+2))`);
/// third derivatives use a wider step because they are Richardson
/// extrapolated.
pub fn default_fd_step(order: u8, coord: f64) -> f64 {
    let base = match order {
        0 | 1 => f64::EPSILON.cbrt(),
        2 => f64::EPSILON.powf(0.25),
        _ => 4e-3,
    };
    base * coord.abs().max(1.0)
}

/// Order-3 jet estimated from central differences of `f` around `point`.
///
/// With `step = Some(h)` every derivative order uses `h` on every axis and
/// plain O(h²) stencils; with `None` each order and axis uses
/// [`default_fd_step`] and the third derivatives are Richardson
/// extrapolated from steps `h` and `h/2`. The stencil reaches `2h` from the
/// point along single axes.
pub fn finite_difference_jet<F, E>(f: F, point: &[f64], step: Option<f64>) -> Result<Jet, FdError>
where
    F: Fn(&[f64]) -> Result<f64, E>,
    E: std::fmt::Debug,
{
    let n = point.len();
    if n == 0 || n > MAX_DIM {
        return Err(FdError::Dimension(n));
    }
    if let Some(h) = step {
        if !(h > 0.0) {
            return Err(FdError::Step(h));
        }
    }
    let h_for = |order: u8, axis: usize| step.unwrap_or_else(|| default_fd_step(order, point[axis]));

    let eval = |offsets: &[(usize, f64)]| -> Result<f64, FdError> {
        let mut q = point.to_vec();
        for &(axis, d) in offsets {
            q[axis] += d;
        }
        f(&q).map_err(|e| FdError::Stencil {
            point: q.clone(),
            message: format!("{e:?}"),
        })
    };

    let f0 = eval(&[])?;
    let mut grad = vec![0.0; n];
    let mut hess = vec![vec![0.0; n]; n];

    for i in 0..n {
        let h = h_for(1, i);
        grad[i] = (eval(&[(i, h)])? - eval(&[(i, -h)])?) / (2.0 * h);
    }

    for i in 0..n {
        let hi = h_for(2, i);
        hess[i][i] = (eval(&[(i, hi)])? - 2.0 * f0 + eval(&[(i, -hi)])?) / (hi * hi);
        for j in (i + 1)..n {
            let hj = h_for(2, j);
            let v = (eval(&[(i, hi), (j, hj)])? - eval(&[(i, hi), (j, -hj)])?
                - eval(&[(i, -hi), (j, hj)])?
                + eval(&[(i, -hi), (j, -hj)])?)
                / (4.0 * hi * hj);
            hess[i][j] = v;
            hess[j][i] = v;
        }
    }

    // second difference along `i`, centred at `point + offset`
    let second = |i: usize, h: f64, offset: &[(usize, f64)]| -> Result<f64, FdError> {
        let mut plus = offset.to_vec();
        plus.push((i, h));
        let mut minus = offset.to_vec();
        minus.push((i, -h));
        Ok((eval(&plus)? - 2.0 * eval(offset)? + eval(&minus)?) / (h * h))
    };

    // plain O(h²) third-derivative stencils with per-axis steps `h`
    let third_with = |h: &[f64]| -> Result<Vec<Vec<Vec<f64>>>, FdError> {
        let mut t = vec![vec![vec![0.0; n]; n]; n];
        for i in 0..n {
            let hi = h[i];
            t[i][i][i] = (eval(&[(i, 2.0 * hi)])? - 2.0 * eval(&[(i, hi)])?
                + 2.0 * eval(&[(i, -hi)])?
                - eval(&[(i, -2.0 * hi)])?)
                / (2.0 * hi * hi * hi);
            for j in 0..n {
                if j == i {
                    continue;
                }
                let hj = h[j];
                // ∂_i∂_i∂_j
                let v = (second(i, hi, &[(j, hj)])? - second(i, hi, &[(j, -hj)])?) / (2.0 * hj);
                t[i][i][j] = v;
                t[i][j][i] = v;
                t[j][i][i] = v;
            }
        }
        if n == 3 {
            let mut acc = 0.0;
            for s0 in [1.0, -1.0] {
                for s1 in [1.0, -1.0] {
                    for s2 in [1.0, -1.0] {
                        acc += s0 * s1 * s2 * eval(&[(0, s0 * h[0]), (1, s1 * h[1]), (2, s2 * h[2])])?;
                    }
                }
            }
            let v = acc / (8.0 * h[0] * h[1] * h[2]);
            for [a, b, c] in [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]] {
                t[a][b][c] = v;
            }
        }
        Ok(t)
    };

    let h3: Vec<f64> = (0..n).map(|i| h_for(3, i)).collect();
    let third = if step.is_some() {
        third_with(&h3)?
    } else {
        // Richardson: combine steps h and h/2 to cancel the h² term
        let coarse = third_with(&h3)?;
        let half: Vec<f64> = h3.iter().map(|h| 0.5 * h).collect();
        let fine = third_with(&half)?;
        let mut t = fine.clone();
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    t[i][j][k] = (4.0 * fine[i][j][k] - coarse[i][j][k]) / 3.0;
                }
            }
        }
        t
    };

    Jet::from_parts(f0, &grad, &hess, &third, n, 3).map_err(|e| FdError::Stencil {
        point: point.to_vec(),
        message: e.to_string(),
    })
}

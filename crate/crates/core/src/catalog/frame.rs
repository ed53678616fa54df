use serde::Serialize;

use super::FamilyError;
use crate::expr::Expr;
use crate::jet::Jet;
use crate::linalg;

/// Orthonormal frame `(A, B)` of the normal space of a curve `α` in `S³`,
/// sampled along the curve parameter.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NormalFrame {
    pub w: Vec<f64>,
    pub alpha: Vec<[f64; 4]>,
    pub alpha_prime: Vec<[f64; 4]>,
    pub a: Vec<[f64; 4]>,
    pub b: Vec<[f64; 4]>,
}

/// Jets of `α/|α|` and its derivative, from the raw components and their
/// symbolic derivatives.
pub(crate) fn unit_curve_jets(
    alpha: &[Expr],
    alpha_d: &[Expr],
    w: &Jet,
) -> Result<([Jet; 4], [Jet; 4]), FamilyError> {
    let raw: Vec<Jet> = alpha.iter().map(|e| e.eval(&[*w])).collect::<Result<_, _>>()?;
    let raw_d: Vec<Jet> = alpha_d.iter().map(|e| e.eval(&[*w])).collect::<Result<_, _>>()?;
    let r2 = crate::geometry::dot_jets(&raw, &raw);
    let r = r2.sqrt()?;
    let rd = crate::geometry::dot_jets(&raw, &raw_d);
    let r3 = r2 * r;
    let unit: [Jet; 4] = std::array::from_fn(|a| raw[a] / r);
    let unit_d: [Jet; 4] = std::array::from_fn(|a| raw_d[a] / r - raw[a] * rd / r3);
    Ok((unit, unit_d))
}

fn unit(v: [f64; 4]) -> Option<[f64; 4]> {
    let n = linalg::dot(&v, &v).sqrt();
    (n > 1e-12).then(|| v.map(|x| x / n))
}

fn project_out(v: [f64; 4], basis: &[[f64; 4]]) -> [f64; 4] {
    let mut out = v;
    for b in basis {
        let c = linalg::dot(&out, b);
        for i in 0..4 {
            out[i] -= c * b[i];
        }
    }
    out
}

/// `B` completing `{α, α′/|α′|, A}` to a positively oriented orthonormal
/// frame of E⁴.
fn complete(alpha: [f64; 4], tangent: [f64; 4], a: [f64; 4]) -> [f64; 4] {
    let rows: Vec<Vec<f64>> = (0..4).map(|r| vec![alpha[r], tangent[r], a[r]]).collect();
    let c = linalg::generalized_cross(&rows);
    [c[0], c[1], c[2], c[3]]
}

const SEEDS: [usize; 4] = [2, 3, 0, 1];

/// Builds `(A, B)` at `samples` equally spaced parameters in `w_range`.
///
/// At the first sample `A` comes from Gram–Schmidt of a canonical basis
/// vector against `span{α, α′}`; later samples project the previous `A`
/// onto the new normal space and renormalize, which keeps the frame from
/// spinning about the curve. `B` completes the oriented frame.
pub fn build_normal_frame(
    alpha: &[Expr],
    w_range: (f64, f64),
    samples: usize,
) -> Result<NormalFrame, FamilyError> {
    if alpha.len() != 4 {
        return Err(FamilyError::Invalid(format!("curve needs 4 components, got {}", alpha.len())));
    }
    if samples < 2 || !(w_range.1 > w_range.0) {
        return Err(FamilyError::Invalid("normal frame needs a nonempty range and ≥ 2 samples".into()));
    }
    let alpha_d: Vec<Expr> = alpha.iter().map(|e| e.derivative(0)).collect();
    let mut frame = NormalFrame {
        w: vec![],
        alpha: vec![],
        alpha_prime: vec![],
        a: vec![],
        b: vec![],
    };
    for i in 0..samples {
        let w = w_range.0 + (w_range.1 - w_range.0) * i as f64 / (samples - 1) as f64;
        let wj = Jet::variable(0, w, 1, 0)?;
        let (al, ad) = unit_curve_jets(alpha, &alpha_d, &wj)?;
        let al = al.map(|j| j.value());
        let ad = ad.map(|j| j.value());
        let tangent = unit(ad).ok_or_else(|| FamilyError::Invalid(format!("curve is singular at w = {w}")))?;
        let basis = [al, tangent];
        let a = match frame.a.last() {
            None => SEEDS
                .iter()
                .find_map(|&p| {
                    let mut e = [0.0; 4];
                    e[p] = 1.0;
                    let v = project_out(e, &basis);
                    (linalg::dot(&v, &v).sqrt() > 0.1).then(|| unit(v)).flatten()
                })
                .ok_or_else(|| FamilyError::Invalid(format!("no usable seed vector at w = {w}")))?,
            Some(prev) => unit(project_out(*prev, &basis))
                .ok_or_else(|| FamilyError::Invalid(format!("frame continuation failed at w = {w}")))?,
        };
        let a = unit(project_out(a, &basis)).unwrap_or(a);
        frame.b.push(complete(al, tangent, a));
        frame.w.push(w);
        frame.alpha.push(al);
        frame.alpha_prime.push(ad);
        frame.a.push(a);
    }
    Ok(frame)
}

use serde::Serialize;
use thiserror::Error;

use crate::expr::{Expr, ExprError};
use crate::jet::Jet;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProfileError {
    #[error("curvature evaluation failed at s = {s} (last good s = {last_good}): {source}")]
    Kappa { s: f64, last_good: f64, source: ExprError },
    #[error("step must be positive and finite, got {0}")]
    Step(f64),
    #[error("empty integration range [{0}, {1}]")]
    Range(f64, f64),
    #[error("s = {s} is outside the integrated range [{lo}, {hi}]")]
    OutOfRange { s: f64, lo: f64, hi: f64 },
}

/// A unit-speed planar curve `(f(s), g(s))` sampled from its curvature.
///
/// Between samples the curve is the quintic Hermite interpolant of the
/// knot values and their exact first and second derivatives, so it is C²
/// across knots.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProfileCurve {
    pub s: Vec<f64>,
    pub f: Vec<f64>,
    pub g: Vec<f64>,
    /// Tangent angle: `(f′, g′) = (cos φ, sin φ)`.
    pub phi: Vec<f64>,
    pub kappa: Vec<f64>,
}

// rows: basis functions for p(0), h·p′(0), h²·p″(0), p(1), h·p′(1), h²·p″(1);
// columns: coefficients of t⁰ … t⁵
const QUINTIC: [[f64; 6]; 6] = [
    [1.0, 0.0, 0.0, -10.0, 15.0, -6.0],
    [0.0, 1.0, 0.0, -6.0, 8.0, -3.0],
    [0.0, 0.0, 0.5, -1.5, 1.5, -0.5],
    [0.0, 0.0, 0.0, 10.0, -15.0, 6.0],
    [0.0, 0.0, 0.0, -4.0, 7.0, -3.0],
    [0.0, 0.0, 0.0, 0.5, -1.0, 0.5],
];

/// Value and first three `t`-derivatives of `Σ c_k t^k`.
fn poly_derivs(c: &[f64; 6], t: f64) -> [f64; 4] {
    let mut out = [0.0; 4];
    for (d, slot) in out.iter_mut().enumerate() {
        *slot = (d..6)
            .map(|k| c[k] * (0..d).map(|j| (k - j) as f64).product::<f64>() * t.powi((k - d) as i32))
            .sum();
    }
    out
}

impl ProfileCurve {
    pub fn range(&self) -> (f64, f64) {
        (self.s[0], self.s[self.s.len() - 1])
    }

    /// `[p, p′, p″, p‴]` at `s` for `f` and `g`.
    pub fn derivatives(&self, s: f64) -> Result<([f64; 4], [f64; 4]), ProfileError> {
        let (lo, hi) = self.range();
        if !(s >= lo && s <= hi) {
            return Err(ProfileError::OutOfRange { s, lo, hi });
        }
        let i = self.s.partition_point(|x| *x <= s).clamp(1, self.s.len() - 1) - 1;
        let h = self.s[i + 1] - self.s[i];
        let t = (s - self.s[i]) / h;
        let knots = |j: usize| {
            let (c, sn, k) = (self.phi[j].cos(), self.phi[j].sin(), self.kappa[j]);
            ([self.f[j], c, -sn * k], [self.g[j], sn, c * k])
        };
        let (f0, g0) = knots(i);
        let (f1, g1) = knots(i + 1);
        let interp = |a: [f64; 3], b: [f64; 3]| -> [f64; 4] {
            let w = [a[0], h * a[1], h * h * a[2], b[0], h * b[1], h * h * b[2]];
            let mut c = [0.0; 6];
            for (row, wi) in QUINTIC.iter().zip(w) {
                for k in 0..6 {
                    c[k] += wi * row[k];
                }
            }
            let d = poly_derivs(&c, t);
            [d[0], d[1] / h, d[2] / (h * h), d[3] / (h * h * h)]
        };
        Ok((interp(f0, f1), interp(g0, g1)))
    }

    /// Jets of `f` and `g` composed with the chart jet `s`.
    pub fn eval_jets(&self, s: &Jet) -> Result<(Jet, Jet), ProfileError> {
        let (f, g) = self.derivatives(s.value())?;
        Ok((s.compose(f), s.compose(g)))
    }
}

struct Sample {
    s: f64,
    phi: f64,
    f: f64,
    g: f64,
    kappa: f64,
}

fn run(kappa: &Expr, from: f64, to: f64, init: (f64, f64, f64), step: f64) -> Result<Vec<Sample>, ProfileError> {
    let k = |s: f64, last_good: f64| {
        kappa
            .eval_real(&[s])
            .map_err(|source| ProfileError::Kappa { s, last_good, source })
    };
    let n = ((to - from).abs() / step).ceil().max(1.0) as usize;
    let h = (to - from) / n as f64;
    let (mut phi, mut f, mut g) = init;
    let mut s = from;
    let mut k0 = k(s, s)?;
    let mut out = vec![Sample {
        s,
        phi,
        f,
        g,
        kappa: k0,
    }];
    for i in 1..=n {
        let s_mid = s + 0.5 * h;
        let s_next = if i == n { to } else { from + i as f64 * h };
        let k_mid = k(s_mid, s)?;
        let k1 = k(s_next, s)?;
        // stage slopes of (φ, f, g); φ′ depends on s only
        let p1 = phi;
        let p2 = phi + 0.5 * h * k0;
        let p3 = phi + 0.5 * h * k_mid;
        let p4 = phi + h * k_mid;
        let (c1, c2, c3, c4) = (p1.cos(), p2.cos(), p3.cos(), p4.cos());
        let (s1, s2, s3, s4) = (p1.sin(), p2.sin(), p3.sin(), p4.sin());
        phi += h / 6.0 * (k0 + 4.0 * k_mid + k1);
        f += h / 6.0 * (c1 + 2.0 * c2 + 2.0 * c3 + c4);
        g += h / 6.0 * (s1 + 2.0 * s2 + 2.0 * s3 + s4);
        s = s_next;
        k0 = k1;
        out.push(Sample {
            s,
            phi,
            f,
            g,
            kappa: k0,
        });
    }
    Ok(out)
}

fn validate(s_range: (f64, f64), step: f64) -> Result<(), ProfileError> {
    if !(step > 0.0 && step.is_finite()) {
        return Err(ProfileError::Step(step));
    }
    if !(s_range.1 > s_range.0) {
        return Err(ProfileError::Range(s_range.0, s_range.1));
    }
    Ok(())
}

fn assemble(samples: impl Iterator<Item = Sample>) -> ProfileCurve {
    let mut c = ProfileCurve {
        s: vec![],
        f: vec![],
        g: vec![],
        phi: vec![],
        kappa: vec![],
    };
    for p in samples {
        c.s.push(p.s);
        c.f.push(p.f);
        c.g.push(p.g);
        c.phi.push(p.phi);
        c.kappa.push(p.kappa);
    }
    c
}

/// Integrates `φ′ = κ(s), f′ = cos φ, g′ = sin φ` by classical RK4 from
/// `init = (f₀, g₀, φ₀)` at `s_range.0`.
pub fn integrate_profile(
    kappa: &Expr,
    s_range: (f64, f64),
    init: (f64, f64, f64),
    step: f64,
) -> Result<ProfileCurve, ProfileError> {
    validate(s_range, step)?;
    let (f0, g0, phi0) = init;
    Ok(assemble(run(kappa, s_range.0, s_range.1, (phi0, f0, g0), step)?.into_iter()))
}

/// Like [`integrate_profile`] but with the initial data prescribed at an
/// interior `s0`, integrating both ways.
pub fn integrate_profile_from(
    kappa: &Expr,
    s_range: (f64, f64),
    s0: f64,
    init: (f64, f64, f64),
    step: f64,
) -> Result<ProfileCurve, ProfileError> {
    validate(s_range, step)?;
    if !(s0 >= s_range.0 && s0 <= s_range.1) {
        return Err(ProfileError::OutOfRange {
            s: s0,
            lo: s_range.0,
            hi: s_range.1,
        });
    }
    let (f0, g0, phi0) = init;
    let state = (phi0, f0, g0);
    let back = if s0 > s_range.0 {
        run(kappa, s0, s_range.0, state, step)?
    } else {
        vec![]
    };
    let fwd = if s0 < s_range.1 {
        run(kappa, s0, s_range.1, state, step)?
    } else {
        run(kappa, s0, s0, state, step)?.into_iter().take(1).collect()
    };
    // `back` starts at s0, which `fwd` already holds
    Ok(assemble(back.into_iter().skip(1).rev().chain(fwd)))
}

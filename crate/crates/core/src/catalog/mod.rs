//! Constructors for the built-in hypersurface families.

mod frame;
mod profile;

pub use frame::{build_normal_frame, NormalFrame};
pub use profile::{integrate_profile, integrate_profile_from, ProfileCurve, ProfileError};

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::expr::{parse_expr, Expr, ExprError};
use crate::geometry::{dot_jets, ChartMap, DomainBox, EvalError, Immersion};
use crate::jet::{Jet, JetError};
use crate::linalg;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FamilyError {
    #[error("unknown family '{0}'")]
    UnknownFamily(String),
    #[error("family {tag} has no parameter '{name}'")]
    UnknownParameter { tag: FamilyTag, name: String },
    #[error("{0}")]
    Invalid(String),
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error(transparent)]
    Profile(#[from] ProfileError),
}

impl From<JetError> for FamilyError {
    fn from(e: JetError) -> Self {
        FamilyError::Expr(e.into())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FamilyTag {
    HypercylinderRotational,
    ConicalHypercylinder,
    So2XSo2,
    Rotational,
    TangentCone,
    CurveTube,
    SpecialSqrt2,
    ProductCylinder,
}

impl FamilyTag {
    pub const ALL: [FamilyTag; 8] = [
        FamilyTag::HypercylinderRotational,
        FamilyTag::ConicalHypercylinder,
        FamilyTag::So2XSo2,
        FamilyTag::Rotational,
        FamilyTag::TangentCone,
        FamilyTag::CurveTube,
        FamilyTag::SpecialSqrt2,
        FamilyTag::ProductCylinder,
    ];

    pub fn name(self) -> &'static str {
        match self {
            FamilyTag::HypercylinderRotational => "hypercylinder_rotational",
            FamilyTag::ConicalHypercylinder => "conical_hypercylinder",
            FamilyTag::So2XSo2 => "so2_x_so2",
            FamilyTag::Rotational => "rotational",
            FamilyTag::TangentCone => "tangent_cone",
            FamilyTag::CurveTube => "curve_tube",
            FamilyTag::SpecialSqrt2 => "special_sqrt2",
            FamilyTag::ProductCylinder => "product_cylinder",
        }
    }

    /// The parametrization, written out.
    pub fn formula(self) -> &'static str {
        match self {
            FamilyTag::HypercylinderRotational => "x(s,t,u) = (f(s) cos t, f(s) sin t, g(s), u)",
            FamilyTag::ConicalHypercylinder => "x(s,t,u) = ((c1 s + c2) cos t, (c1 s + c2) sin t, c2 s, u)",
            FamilyTag::So2XSo2 => "x(s,t,u) = (f(s) cos t, f(s) sin t, g(s) cos u, g(s) sin u)",
            FamilyTag::Rotational => "x(s,t,u) = (f(s), g(s) cos t, g(s) sin t sin u, g(s) sin t cos u)",
            FamilyTag::TangentCone => "x(s,v,w) = s y(v,w) + c n(v,w), y a surface in S^3 with spherical normal n",
            FamilyTag::CurveTube => "x(s,v,w) = s a(w) + c (cos(v/c) A(w) + sin(v/c) B(w)), a a curve in S^3",
            FamilyTag::SpecialSqrt2 => "x(s,t,u) = (sqrt2 s cos t, sqrt2 s sin t, sqrt2 s cos u, sqrt2 s sin u)",
            FamilyTag::ProductCylinder => "x(s,t,u) = (b(s,t), u), b a surface in E^3",
        }
    }

    pub fn vars(self) -> [&'static str; 3] {
        match self {
            FamilyTag::TangentCone | FamilyTag::CurveTube => ["s", "v", "w"],
            _ => ["s", "t", "u"],
        }
    }

    /// Scalar parameters with their defaults.
    pub fn parameters(self) -> &'static [(&'static str, f64)] {
        match self {
            FamilyTag::ConicalHypercylinder => &[("c1", 0.6), ("c2", 0.8)],
            FamilyTag::TangentCone => &[("c", 0.3)],
            FamilyTag::CurveTube => &[("c", 0.5), ("samples", 401.0)],
            FamilyTag::ProductCylinder => &[("a", 1.0), ("r", 0.6)],
            _ => &[],
        }
    }

    /// Which sub-object the family reads, if any.
    pub fn input(self) -> FamilyInput {
        match self {
            FamilyTag::HypercylinderRotational | FamilyTag::So2XSo2 | FamilyTag::Rotational => FamilyInput::Profile,
            FamilyTag::TangentCone => FamilyInput::Surface,
            FamilyTag::CurveTube => FamilyInput::Curve,
            FamilyTag::ProductCylinder => FamilyInput::Base,
            _ => FamilyInput::None,
        }
    }

    pub fn default_domain(self) -> DomainBox {
        let b = match self {
            FamilyTag::HypercylinderRotational => [(0.3, 2.8), (0.0, 6.0), (-1.0, 1.0)],
            FamilyTag::ConicalHypercylinder => [(0.5, 2.0), (0.0, 6.0), (-1.0, 1.0)],
            FamilyTag::So2XSo2 => [(0.3, 2.8), (0.0, 6.0), (0.0, 6.0)],
            FamilyTag::Rotational => [(0.3, 2.8), (0.4, 2.7), (0.0, 6.0)],
            FamilyTag::TangentCone => [(1.0, 2.5), (0.3, 1.2), (0.0, 1.5)],
            FamilyTag::CurveTube => [(1.0, 2.5), (0.0, 2.5), (0.0, 1.5)],
            FamilyTag::SpecialSqrt2 => [(0.5, 2.0), (0.0, 6.0), (0.0, 6.0)],
            FamilyTag::ProductCylinder => [(0.3, 1.0), (0.1, 0.8), (-1.0, 1.0)],
        };
        DomainBox::new(&b)
    }
}

impl fmt::Display for FamilyTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for FamilyTag {
    type Err = FamilyError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        FamilyTag::ALL
            .into_iter()
            .find(|t| t.name() == s)
            .ok_or_else(|| FamilyError::UnknownFamily(s.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FamilyInput {
    None,
    /// planar profile `(f(s), g(s))`
    Profile,
    /// four components over `(v, w)` on the unit 3-sphere
    Surface,
    /// four components over `w`, normalized onto the unit 3-sphere
    Curve,
    /// three components over `(s, t)`
    Base,
}

/// A planar profile curve, either closed-form or integrated from its
/// curvature.
#[derive(Debug, Clone)]
pub enum Profile {
    Exprs { f: Expr, g: Expr },
    Curve(Arc<ProfileCurve>),
}

impl Profile {
    pub fn parse(f: &str, g: &str) -> Result<Self, ExprError> {
        Ok(Profile::Exprs {
            f: parse_expr(f, &["s"])?,
            g: parse_expr(g, &["s"])?,
        })
    }

    pub fn eval(&self, s: &Jet) -> Result<(Jet, Jet), EvalError> {
        match self {
            Profile::Exprs { f, g } => Ok((f.eval(&[*s])?, g.eval(&[*s])?)),
            Profile::Curve(c) => c.eval_jets(s).map_err(|e| EvalError::Range(e.to_string())),
        }
    }

    pub fn is_interpolated(&self) -> bool {
        matches!(self, Profile::Curve(_))
    }
}

/// Everything needed to build one family member.
#[derive(Debug, Clone)]
pub struct FamilySpec {
    pub tag: FamilyTag,
    pub profile: Option<Profile>,
    pub params: BTreeMap<String, f64>,
    /// `y(v, w)` for tangent cones, `b(s, t)` for product cylinders.
    pub surface: Option<Vec<Expr>>,
    /// `α(w)` for curve tubes.
    pub curve: Option<Vec<Expr>>,
    pub domain: Option<DomainBox>,
}

impl FamilySpec {
    pub fn new(tag: FamilyTag) -> Self {
        Self {
            tag,
            profile: None,
            params: BTreeMap::new(),
            surface: None,
            curve: None,
            domain: None,
        }
    }

    pub fn with_profile(mut self, profile: Profile) -> Self {
        self.profile = Some(profile);
        self
    }

    pub fn with_param(mut self, name: &str, value: f64) -> Self {
        self.params.insert(name.to_string(), value);
        self
    }

    pub fn with_domain(mut self, domain: DomainBox) -> Self {
        self.domain = Some(domain);
        self
    }

    pub fn with_surface(mut self, components: Vec<Expr>) -> Self {
        self.surface = Some(components);
        self
    }

    pub fn with_curve(mut self, components: Vec<Expr>) -> Self {
        self.curve = Some(components);
        self
    }

    fn param(&self, name: &str) -> f64 {
        self.params.get(name).copied().unwrap_or_else(|| {
            self.tag
                .parameters()
                .iter()
                .find(|(n, _)| *n == name)
                .map(|(_, v)| *v)
                .expect("parameter declared by the family")
        })
    }
}

fn parse_all(texts: &[&str], vars: &[&str]) -> Result<Vec<Expr>, ExprError> {
    texts.iter().map(|t| parse_expr(t, vars)).collect()
}

pub fn default_profile(tag: FamilyTag) -> Profile {
    let (f, g) = match tag {
        FamilyTag::Rotational => ("s", "1.5+0.5*cos(s)"),
        FamilyTag::So2XSo2 => ("2+cos(s)", "1.5*sin(s)"),
        _ => ("2+cos(s)", "sin(s)"),
    };
    Profile::parse(f, g).expect("built-in profile parses")
}

/// Default spherical surface for tangent cones, over `(v, w)`.
pub fn default_sphere_surface() -> Vec<Expr> {
    parse_all(
        &["cos(v)*cos(w)", "cos(v)*sin(w)", "sin(v)*cos(2*w)", "sin(v)*sin(2*w)"],
        &["v", "w"],
    )
    .expect("built-in surface parses")
}

/// Default spherical curve for curve tubes, over `w`.
pub fn default_sphere_curve() -> Vec<Expr> {
    parse_all(
        &["cos(w)*cos(0.4)", "sin(w)*cos(0.4)", "sin(0.4)*cos(2*w)", "sin(0.4)*sin(2*w)"],
        &["w"],
    )
    .expect("built-in curve parses")
}

/// Tangent developable `γ(t) + s γ′(t)` of the rectifying curve
/// `γ(t) = a sec(t) y(t)`, where `y` is the unit-speed circle of radius `r`
/// on the unit 2-sphere. Its position vector stays in the rectifying plane,
/// so the product with a line is a GCR hypersurface.
pub fn rectifying_developable(a: f64, r: f64) -> Result<Vec<Expr>, FamilyError> {
    if !(r > 0.0 && r < 1.0) || a == 0.0 {
        return Err(FamilyError::Invalid(format!(
            "rectifying developable needs 0 < r < 1 and a ≠ 0 (got a = {a}, r = {r})"
        )));
    }
    let h = (1.0 - r * r).sqrt();
    let comps = [
        format!("{a:?}/cos(t)*({r:?}*cos(t/{r:?}) + s*(tan(t)*{r:?}*cos(t/{r:?}) - sin(t/{r:?})))"),
        format!("{a:?}/cos(t)*({r:?}*sin(t/{r:?}) + s*(tan(t)*{r:?}*sin(t/{r:?}) + cos(t/{r:?})))"),
        format!("{a:?}/cos(t)*({h:?} + s*tan(t)*{h:?})"),
    ];
    let refs: Vec<&str> = comps.iter().map(String::as_str).collect();
    Ok(parse_all(&refs, &["s", "t"])?)
}

type EvalFn = dyn Fn(&[Jet]) -> Result<Vec<Jet>, EvalError> + Send + Sync;

struct FnMap {
    label: String,
    f: Box<EvalFn>,
}

impl fmt::Debug for FnMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "FnMap({})", self.label)
    }
}

impl ChartMap for FnMap {
    fn chart_dim(&self) -> usize {
        3
    }

    fn ambient_dim(&self) -> usize {
        4
    }

    fn eval(&self, chart: &[Jet]) -> Result<Vec<Jet>, EvalError> {
        (self.f)(chart)
    }
}

fn cross3(rows: [[Jet; 3]; 4]) -> Vec<Jet> {
    let rows: Vec<Vec<Jet>> = rows.iter().map(|r| r.to_vec()).collect();
    linalg::generalized_cross(&rows)
}

fn normalize(v: Vec<Jet>) -> Result<Vec<Jet>, JetError> {
    let len = dot_jets(&v, &v).sqrt()?;
    Ok(v.into_iter().map(|x| x / len).collect())
}

/// Builds the immersion described by `spec`.
pub fn make_family(spec: &FamilySpec) -> Result<Immersion, FamilyError> {
    let tag = spec.tag;
    for name in spec.params.keys() {
        if !tag.parameters().iter().any(|(n, _)| n == name) {
            return Err(FamilyError::UnknownParameter {
                tag,
                name: name.clone(),
            });
        }
    }
    let input = tag.input();
    if spec.profile.is_some() && input != FamilyInput::Profile {
        return Err(FamilyError::Invalid(format!("family {tag} takes no profile")));
    }
    if spec.surface.is_some() && !matches!(input, FamilyInput::Surface | FamilyInput::Base) {
        return Err(FamilyError::Invalid(format!("family {tag} takes no surface")));
    }
    if spec.curve.is_some() && input != FamilyInput::Curve {
        return Err(FamilyError::Invalid(format!("family {tag} takes no curve")));
    }
    let domain = spec.domain.clone().unwrap_or_else(|| tag.default_domain());
    if domain.dim() != 3 || domain.lo.iter().zip(&domain.hi).any(|(a, b)| !(b >= a)) {
        return Err(FamilyError::Invalid(format!("family {tag} needs a 3-dimensional, nonempty domain")));
    }
    let vars: Vec<String> = tag.vars().iter().map(|v| v.to_string()).collect();

    let f: Box<EvalFn> = match tag {
        FamilyTag::HypercylinderRotational | FamilyTag::So2XSo2 | FamilyTag::Rotational => {
            let profile = spec.profile.clone().unwrap_or_else(|| default_profile(tag));
            Box::new(move |c: &[Jet]| {
                let (s, t, u) = (c[0], c[1], c[2]);
                let (f, g) = profile.eval(&s)?;
                Ok(match tag {
                    FamilyTag::HypercylinderRotational => vec![f * t.cos(), f * t.sin(), g, u],
                    FamilyTag::So2XSo2 => vec![f * t.cos(), f * t.sin(), g * u.cos(), g * u.sin()],
                    _ => vec![f, g * t.cos(), g * t.sin() * u.sin(), g * t.sin() * u.cos()],
                })
            })
        }
        FamilyTag::ConicalHypercylinder => {
            let (c1, c2) = (spec.param("c1"), spec.param("c2"));
            if c1 == 0.0 && c2 == 0.0 {
                return Err(FamilyError::Invalid("conical hypercylinder needs (c1, c2) ≠ (0, 0)".into()));
            }
            Box::new(move |c: &[Jet]| {
                let (s, t, u) = (c[0], c[1], c[2]);
                let r = s * c1 + c2;
                Ok(vec![r * t.cos(), r * t.sin(), s * c2, u])
            })
        }
        FamilyTag::SpecialSqrt2 => Box::new(|c: &[Jet]| {
            let (s, t, u) = (c[0], c[1], c[2]);
            let r = s * std::f64::consts::SQRT_2;
            Ok(vec![r * t.cos(), r * t.sin(), r * u.cos(), r * u.sin()])
        }),
        FamilyTag::TangentCone => {
            let cc = spec.param("c");
            let y = spec.surface.clone().unwrap_or_else(default_sphere_surface);
            check_components(&y, 4, &["v", "w"], "tangent-cone surface")?;
            check_on_sphere(&y, &domain)?;
            let y_v: Vec<Expr> = y.iter().map(|e| e.derivative(0)).collect();
            let y_w: Vec<Expr> = y.iter().map(|e| e.derivative(1)).collect();
            Box::new(move |c: &[Jet]| {
                let (s, vw) = (c[0], [c[1], c[2]]);
                let ev = |es: &[Expr]| -> Result<Vec<Jet>, EvalError> {
                    es.iter().map(|e| e.eval(&vw).map_err(EvalError::from)).collect()
                };
                let (yy, yv, yw) = (ev(&y)?, ev(&y_v)?, ev(&y_w)?);
                let n = normalize(cross3(std::array::from_fn(|a| [yy[a], yv[a], yw[a]])))?;
                Ok((0..4).map(|a| s * yy[a] + n[a] * cc).collect())
            })
        }
        FamilyTag::CurveTube => {
            let cc = spec.param("c");
            if !(cc > 0.0) {
                return Err(FamilyError::Invalid(format!("curve tube needs c > 0, got {cc}")));
            }
            let alpha = spec.curve.clone().unwrap_or_else(default_sphere_curve);
            check_components(&alpha, 4, &["w"], "tube curve")?;
            let samples = spec.param("samples");
            if !(2.0..=1e6).contains(&samples) {
                return Err(FamilyError::Invalid(format!("samples must lie in [2, 1e6], got {samples}")));
            }
            let (w_lo, w_hi) = (domain.lo[2], domain.hi[2]);
            let frame = build_normal_frame(&alpha, (w_lo, w_hi.max(w_lo + 1e-9)), samples as usize)?;
            let seed = frame.a[frame.a.len() / 2];
            // the projected seed must stay well away from zero over the range
            for i in 0..frame.w.len() {
                let t = frame.alpha_prime[i];
                let tn = linalg::dot(&t, &t).sqrt();
                let al = frame.alpha[i];
                let mut p = seed;
                let (ca, ct) = (linalg::dot(&p, &al), linalg::dot(&p, &t) / tn);
                for k in 0..4 {
                    p[k] -= ca * al[k] + ct * t[k] / tn;
                }
                if linalg::dot(&p, &p).sqrt() < 0.2 {
                    return Err(FamilyError::Invalid(format!(
                        "normal frame degenerates near w = {}; use a shorter w range",
                        frame.w[i]
                    )));
                }
            }
            let alpha_d: Vec<Expr> = alpha.iter().map(|e| e.derivative(0)).collect();
            Box::new(move |c: &[Jet]| {
                let (s, v, w) = (c[0], c[1], c[2]);
                let (al, ad) = frame::unit_curve_jets(&alpha, &alpha_d, &w).map_err(|e| match e {
                    FamilyError::Expr(e) => EvalError::Expr(e),
                    other => EvalError::Range(other.to_string()),
                })?;
                let tangent = normalize(ad.to_vec())?;
                // A = seed projected onto span{α, α′}⊥, B completes the frame
                let ca = dot_seed(&seed, &al);
                let ct = dot_seed(&seed, &tangent);
                let a_raw: Vec<Jet> = (0..4).map(|k| -(al[k] * ca) - tangent[k] * ct + seed[k]).collect();
                let a = normalize(a_raw)?;
                let b = cross3(std::array::from_fn(|k| [al[k], tangent[k], a[k]]));
                let phase = v * (1.0 / cc);
                let (cv, sv) = (phase.cos(), phase.sin());
                Ok((0..4).map(|k| s * al[k] + (cv * a[k] + sv * b[k]) * cc).collect())
            })
        }
        FamilyTag::ProductCylinder => {
            let base = match &spec.surface {
                Some(b) => b.clone(),
                None => rectifying_developable(spec.param("a"), spec.param("r"))?,
            };
            check_components(&base, 3, &["s", "t"], "product base")?;
            Box::new(move |c: &[Jet]| {
                let st = [c[0], c[1]];
                let mut out: Vec<Jet> = base
                    .iter()
                    .map(|e| e.eval(&st).map_err(EvalError::from))
                    .collect::<Result<_, _>>()?;
                out.push(c[2]);
                Ok(out)
            })
        }
    };
    let map = FnMap {
        label: tag.name().to_string(),
        f,
    };
    Immersion::new(tag.name(), vars, domain, Arc::new(map)).map_err(|e| FamilyError::Invalid(e.to_string()))
}

fn dot_seed(seed: &[f64; 4], v: &[Jet]) -> Jet {
    let mut acc = v[0] * seed[0];
    for k in 1..4 {
        acc += v[k] * seed[k];
    }
    acc
}

fn check_components(es: &[Expr], count: usize, vars: &[&str], what: &str) -> Result<(), FamilyError> {
    if es.len() != count {
        return Err(FamilyError::Invalid(format!("{what} needs {count} components, got {}", es.len())));
    }
    if let Some(e) = es.iter().find(|e| e.vars() != vars) {
        return Err(FamilyError::Invalid(format!(
            "{what} must be written over ({}), got ({})",
            vars.join(", "),
            e.vars().join(", ")
        )));
    }
    Ok(())
}

fn check_on_sphere(y: &[Expr], domain: &DomainBox) -> Result<(), FamilyError> {
    for i in 0..5 {
        for j in 0..5 {
            let v = domain.lo[1] + domain.width(1) * i as f64 / 4.0;
            let w = domain.lo[2] + domain.width(2) * j as f64 / 4.0;
            let p: Vec<f64> = y.iter().map(|e| e.eval_real(&[v, w])).collect::<Result<_, _>>()?;
            let r = linalg::dot(&p, &p).sqrt();
            if (r - 1.0).abs() > 1e-9 {
                return Err(FamilyError::Invalid(format!(
                    "tangent-cone surface must lie on the unit 3-sphere; |y({v}, {w})| = {r}"
                )));
            }
        }
    }
    Ok(())
}

/// A profile integrated from its curvature over the `s` range of `domain`,
/// padded on both sides so difference stencils stay inside the curve.
pub fn ode_profile(
    kappa: &Expr,
    s_range: (f64, f64),
    init: (f64, f64, f64),
    step: f64,
) -> Result<Profile, FamilyError> {
    let pad = 0.05 * (s_range.1 - s_range.0) + 10.0 * step;
    let curve = integrate_profile_from(kappa, (s_range.0 - pad, s_range.1 + pad), s_range.0, init, step)?;
    Ok(Profile::Curve(Arc::new(curve)))
}

/// Circle of radius `r` as a profile, `(r cos s, r sin s)`.
pub fn circle_profile(r: f64) -> Profile {
    Profile::parse(&format!("{r:?}*cos(s)"), &format!("{r:?}*sin(s)")).expect("circle profile parses")
}

/// Half-turn `s` range used with circular profiles.
pub const CIRCLE_RANGE: (f64, f64) = (0.3, PI - 0.3);

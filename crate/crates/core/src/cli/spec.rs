//! Surface spec files.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::catalog::{make_family, ode_profile, FamilyError, FamilyInput, FamilySpec, FamilyTag, Profile};
use crate::expr::{parse_expr, Expr, ExprError};
use crate::gcr::Tolerances;
use crate::geometry::{DomainBox, Immersion};

/// Grid count per axis when the spec gives none.
pub const DEFAULT_GRID: usize = 6;
const DEFAULT_ODE_STEP: f64 = 1e-3;

#[derive(Debug, Error)]
pub enum SpecError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("malformed spec: {0}")]
    Json(#[from] serde_json::Error),
    #[error("in {field}: {source}")]
    Expr { field: String, source: ExprError },
    #[error(transparent)]
    Family(#[from] FamilyError),
    #[error("{0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged, deny_unknown_fields)]
pub enum ProfileSpec {
    Exprs {
        f: String,
        g: String,
    },
    /// Integrated from its curvature; `init = [f₀, g₀, φ₀]` at the low end
    /// of the `s` range.
    Ode {
        kappa: String,
        init: [f64; 3],
        #[serde(default, skip_serializing_if = "Option::is_none")]
        step: Option<f64>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SurfaceSpec {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub family: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub components: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub variables: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub parameters: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub profile: Option<ProfileSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub surface: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub curve: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub base: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub domain: Option<BTreeMap<String, [f64; 2]>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<BTreeMap<String, usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerances: Option<Tolerances>,
}

/// A spec resolved into an immersion and its sampling grid.
#[derive(Debug, Clone)]
pub struct Loaded {
    pub spec: SurfaceSpec,
    pub family: Option<FamilyTag>,
    pub immersion: Immersion,
    pub grid: Vec<usize>,
    pub tolerances: Tolerances,
    /// Whether the surface depends on an integrated (interpolated) profile.
    pub interpolated: bool,
}

fn exprs(field: &str, texts: &[String], vars: &[&str]) -> Result<Vec<Expr>, SpecError> {
    texts
        .iter()
        .enumerate()
        .map(|(i, t)| {
            parse_expr(t, vars).map_err(|source| SpecError::Expr {
                field: format!("{field}[{i}]"),
                source,
            })
        })
        .collect()
}

impl SurfaceSpec {
    pub fn from_path(path: &Path) -> Result<Self, SpecError> {
        let text = std::fs::read_to_string(path).map_err(|source| SpecError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_json(&text)
    }

    pub fn from_json(text: &str) -> Result<Self, SpecError> {
        Ok(serde_json::from_str(text)?)
    }

    fn domain_box(&self, vars: &[String]) -> Result<Option<DomainBox>, SpecError> {
        let Some(d) = &self.domain else { return Ok(None) };
        check_keys("domain", d.keys(), vars)?;
        let bounds: Vec<(f64, f64)> = vars.iter().map(|v| (d[v][0], d[v][1])).collect();
        if let Some((v, b)) = vars.iter().zip(&bounds).find(|(_, b)| !(b.1 > b.0 && b.0.is_finite() && b.1.is_finite())) {
            return Err(SpecError::Invalid(format!("domain of '{v}' is empty or not finite: {b:?}")));
        }
        Ok(Some(DomainBox::new(&bounds)))
    }

    fn grid_counts(&self, vars: &[String]) -> Result<Vec<usize>, SpecError> {
        let Some(g) = &self.grid else {
            return Ok(vec![DEFAULT_GRID; vars.len()]);
        };
        check_keys("grid", g.keys(), vars)?;
        let counts: Vec<usize> = vars.iter().map(|v| g[v]).collect();
        if counts.iter().any(|&c| c < 2) {
            return Err(SpecError::Invalid("grid counts must be at least 2 per axis".into()));
        }
        Ok(counts)
    }

    /// Builds the immersion, grid and tolerances.
    pub fn load(self) -> Result<Loaded, SpecError> {
        let tolerances = self.tolerances.clone().unwrap_or_default();
        match (&self.family, &self.components) {
            (Some(_), Some(_)) => Err(SpecError::Invalid("give either 'family' or 'components', not both".into())),
            (None, None) => Err(SpecError::Invalid("spec needs 'family' or 'components'".into())),
            (None, Some(comps)) => {
                if self.profile.is_some() || self.surface.is_some() || self.curve.is_some() || self.base.is_some() {
                    return Err(SpecError::Invalid("profile/surface/curve/base only apply to families".into()));
                }
                if !self.parameters.is_empty() {
                    return Err(SpecError::Invalid("parameters only apply to families".into()));
                }
                let vars = self
                    .variables
                    .clone()
                    .ok_or_else(|| SpecError::Invalid("raw components need 'variables'".into()))?;
                if vars.is_empty() || vars.len() > 3 || comps.len() != vars.len() + 1 {
                    return Err(SpecError::Invalid(format!(
                        "need 1 to 3 variables and one more component; got {} variables, {} components",
                        vars.len(),
                        comps.len()
                    )));
                }
                let domain = self
                    .domain_box(&vars)?
                    .ok_or_else(|| SpecError::Invalid("raw components need a 'domain'".into()))?;
                let var_refs: Vec<&str> = vars.iter().map(String::as_str).collect();
                let parsed = exprs("components", comps, &var_refs)?;
                let map = crate::geometry::ExprMap::new(parsed, vars.len());
                let immersion = Immersion::new(self.name.clone(), vars.clone(), domain, std::sync::Arc::new(map))
                    .map_err(|e| SpecError::Invalid(e.to_string()))?;
                let grid = self.grid_counts(&vars)?;
                Ok(Loaded {
                    spec: self,
                    family: None,
                    immersion,
                    grid,
                    tolerances,
                    interpolated: false,
                })
            }
            (Some(tag), None) => {
                let tag: FamilyTag = tag.parse()?;
                let vars: Vec<String> = tag.vars().iter().map(|v| v.to_string()).collect();
                if let Some(v) = &self.variables {
                    if *v != vars {
                        return Err(SpecError::Invalid(format!("{tag} uses variables {vars:?}, spec says {v:?}")));
                    }
                }
                let domain = self.domain_box(&vars)?.unwrap_or_else(|| tag.default_domain());
                let mut fs = FamilySpec::new(tag).with_domain(domain.clone());
                fs.params = self.parameters.clone();
                let input = tag.input();
                let wrong = |field: &str| SpecError::Invalid(format!("'{field}' does not apply to {tag}"));
                let mut interpolated = false;
                if let Some(p) = &self.profile {
                    if input != FamilyInput::Profile {
                        return Err(wrong("profile"));
                    }
                    let profile = match p {
                        ProfileSpec::Exprs { f, g } => Profile::Exprs {
                            f: exprs("profile.f", std::slice::from_ref(f), &["s"])?.remove(0),
                            g: exprs("profile.g", std::slice::from_ref(g), &["s"])?.remove(0),
                        },
                        ProfileSpec::Ode { kappa, init, step } => {
                            let k = exprs("profile.kappa", std::slice::from_ref(kappa), &["s"])?.remove(0);
                            interpolated = true;
                            ode_profile(
                                &k,
                                (domain.lo[0], domain.hi[0]),
                                (init[0], init[1], init[2]),
                                step.unwrap_or(DEFAULT_ODE_STEP),
                            )?
                        }
                    };
                    fs = fs.with_profile(profile);
                }
                if let Some(y) = &self.surface {
                    if input != FamilyInput::Surface {
                        return Err(wrong("surface"));
                    }
                    fs = fs.with_surface(exprs("surface", y, &["v", "w"])?);
                }
                if let Some(b) = &self.base {
                    if input != FamilyInput::Base {
                        return Err(wrong("base"));
                    }
                    fs = fs.with_surface(exprs("base", b, &["s", "t"])?);
                }
                if let Some(c) = &self.curve {
                    if input != FamilyInput::Curve {
                        return Err(wrong("curve"));
                    }
                    fs = fs.with_curve(exprs("curve", c, &["w"])?);
                }
                let immersion = make_family(&fs)?;
                let grid = self.grid_counts(&vars)?;
                Ok(Loaded {
                    spec: self,
                    family: Some(tag),
                    immersion,
                    grid,
                    tolerances,
                    interpolated,
                })
            }
        }
    }
}

fn check_keys<'a>(what: &str, keys: impl Iterator<Item = &'a String>, vars: &[String]) -> Result<(), SpecError> {
    let keys: Vec<&String> = keys.collect();
    if keys.len() != vars.len() || !vars.iter().all(|v| keys.contains(&v)) {
        return Err(SpecError::Invalid(format!("{what} must have exactly the axes {vars:?}, got {keys:?}")));
    }
    Ok(())
}

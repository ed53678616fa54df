use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::GeometryError;
use crate::expr::{parse_expr, Expr, ExprError};
use crate::jet::{Jet, JetError, MAX_DIM};

/// Failure while evaluating an immersion's components.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error(transparent)]
    Jet(#[from] JetError),
    #[error("{0}")]
    Range(String),
}

/// Axis-aligned chart domain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DomainBox {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl DomainBox {
    pub fn new(bounds: &[(f64, f64)]) -> Self {
        Self {
            lo: bounds.iter().map(|b| b.0).collect(),
            hi: bounds.iter().map(|b| b.1).collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn contains(&self, p: &[f64]) -> bool {
        p.len() == self.dim()
            && p.iter().zip(self.lo.iter().zip(&self.hi)).all(|(x, (lo, hi))| {
                let slack = 1e-12 * (hi - lo).abs().max(1.0);
                *x >= lo - slack && *x <= hi + slack
            })
    }

    /// Largest side length.
    pub fn extent(&self) -> f64 {
        self.lo.iter().zip(&self.hi).map(|(a, b)| b - a).fold(0.0, f64::max)
    }

    pub fn width(&self, axis: usize) -> f64 {
        self.hi[axis] - self.lo[axis]
    }
}

/// A map from chart jets to the ambient components of an immersion.
pub trait ChartMap: Send + Sync + fmt::Debug {
    fn chart_dim(&self) -> usize;
    fn ambient_dim(&self) -> usize;
    fn eval(&self, chart: &[Jet]) -> Result<Vec<Jet>, EvalError>;
}

/// Components given as parsed expressions over the chart variables.
#[derive(Debug, Clone)]
pub struct ExprMap {
    components: Vec<Expr>,
    dim: usize,
}

impl ExprMap {
    pub fn new(components: Vec<Expr>, dim: usize) -> Self {
        Self { components, dim }
    }

    pub fn parse(texts: &[&str], vars: &[String]) -> Result<Self, ExprError> {
        let components = texts.iter().map(|t| parse_expr(t, vars)).collect::<Result<_, _>>()?;
        Ok(Self::new(components, vars.len()))
    }

    pub fn components(&self) -> &[Expr] {
        &self.components
    }
}

impl ChartMap for ExprMap {
    fn chart_dim(&self) -> usize {
        self.dim
    }

    fn ambient_dim(&self) -> usize {
        self.components.len()
    }

    fn eval(&self, chart: &[Jet]) -> Result<Vec<Jet>, EvalError> {
        self.components
            .iter()
            .map(|e| e.eval(chart).map_err(EvalError::from))
            .collect()
    }
}

#[derive(Debug)]
struct Scaled {
    inner: Arc<dyn ChartMap>,
    factor: f64,
}

impl ChartMap for Scaled {
    fn chart_dim(&self) -> usize {
        self.inner.chart_dim()
    }

    fn ambient_dim(&self) -> usize {
        self.inner.ambient_dim()
    }

    fn eval(&self, chart: &[Jet]) -> Result<Vec<Jet>, EvalError> {
        Ok(self.inner.eval(chart)?.into_iter().map(|x| x * self.factor).collect())
    }
}

/// A hypersurface patch: chart domain plus component map.
#[derive(Debug, Clone)]
pub struct Immersion {
    name: String,
    vars: Vec<String>,
    domain: DomainBox,
    map: Arc<dyn ChartMap>,
}

impl Immersion {
    pub fn new(
        name: impl Into<String>,
        vars: Vec<String>,
        domain: DomainBox,
        map: Arc<dyn ChartMap>,
    ) -> Result<Self, GeometryError> {
        let n = vars.len();
        if n == 0 || n > MAX_DIM || map.chart_dim() != n || domain.dim() != n {
            return Err(GeometryError::Dimension {
                expected: map.chart_dim(),
                found: n,
            });
        }
        if map.ambient_dim() != n + 1 {
            return Err(GeometryError::Dimension {
                expected: n + 1,
                found: map.ambient_dim(),
            });
        }
        Ok(Self {
            name: name.into(),
            vars,
            domain,
            map,
        })
    }

    /// Immersion whose components are expression texts over `vars`.
    pub fn from_exprs(
        name: impl Into<String>,
        vars: &[&str],
        components: &[&str],
        domain: DomainBox,
    ) -> Result<Self, EvalError> {
        let vars: Vec<String> = vars.iter().map(|v| v.to_string()).collect();
        let map = ExprMap::parse(components, &vars)?;
        Self::new(name, vars, domain, Arc::new(map)).map_err(|e| EvalError::Range(e.to_string()))
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn vars(&self) -> &[String] {
        &self.vars
    }

    pub fn domain(&self) -> &DomainBox {
        &self.domain
    }

    pub fn dim(&self) -> usize {
        self.vars.len()
    }

    pub fn ambient_dim(&self) -> usize {
        self.dim() + 1
    }

    pub fn with_domain(&self, domain: DomainBox) -> Self {
        Self {
            domain,
            ..self.clone()
        }
    }

    /// The homothetic image `λx`.
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            name: format!("{}*{factor}", self.name),
            map: Arc::new(Scaled {
                inner: self.map.clone(),
                factor,
            }),
            ..self.clone()
        }
    }

    pub fn check_point(&self, p: &[f64]) -> Result<(), GeometryError> {
        if p.len() != self.dim() {
            return Err(GeometryError::Dimension {
                expected: self.dim(),
                found: p.len(),
            });
        }
        if !self.domain.contains(p) {
            return Err(GeometryError::OutOfDomain { point: p.to_vec() });
        }
        Ok(())
    }

    /// Component jets at `p` without the domain check; used by stencils that
    /// may step slightly outside the box.
    pub fn jets_at(&self, p: &[f64], order: u8) -> Result<Vec<Jet>, GeometryError> {
        let n = self.dim();
        if p.len() != n {
            return Err(GeometryError::Dimension {
                expected: n,
                found: p.len(),
            });
        }
        let wrap = |source: EvalError| GeometryError::Evaluation {
            point: p.to_vec(),
            source,
        };
        let chart = p
            .iter()
            .enumerate()
            .map(|(i, &v)| Jet::variable(i, v, n, order))
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| wrap(e.into()))?;
        let out = self.map.eval(&chart).map_err(wrap)?;
        if let Some(bad) = out.iter().find(|x| !x.value().is_finite()) {
            return Err(wrap(EvalError::Range(format!("non-finite component value {}", bad.value()))));
        }
        Ok(out)
    }

    /// Plain ambient position.
    pub fn position(&self, p: &[f64]) -> Result<Vec<f64>, GeometryError> {
        Ok(self.jets_at(p, 0)?.iter().map(Jet::value).collect())
    }
}

/// Component jets at a point inside the domain box.
pub fn evaluate_jets(m: &Immersion, p: &[f64], order: u8) -> Result<Vec<Jet>, GeometryError> {
    m.check_point(p)?;
    m.jets_at(p, order)
}

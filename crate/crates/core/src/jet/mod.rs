//! Forward-mode truncated Taylor jets.
//!
//! A [`Jet`] carries the value of a scalar field at a chart point together
//! with all of its partial derivatives up to a runtime-selected order (at
//! most three) in at most three chart variables. Arithmetic and elementary
//! functions propagate the derivatives exactly via the Leibniz and
//! Faà di Bruno rules, so geometric quantities assembled from jets carry
//! exact derivative information without any differencing.
//!
//! Storage is dense: the Hessian and third-derivative tensors are kept as
//! full symmetric arrays since the chart dimension is tiny.

mod fd;

pub use fd::{default_fd_step, finite_difference_jet, FdError};

use std::fmt;
use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub};

use thiserror::Error;

/// Largest supported chart dimension.
pub const MAX_DIM: usize = 3;
/// Largest supported derivative order.
pub const MAX_ORDER: u8 = 3;

type Grad = [f64; MAX_DIM];
type Hess = [[f64; MAX_DIM]; MAX_DIM];
type Third = [[[f64; MAX_DIM]; MAX_DIM]; MAX_DIM];

#[derive(Debug, Clone, PartialEq, Error)]
pub enum JetError {
    #[error("chart axis {index} is out of range for a {dim}-dimensional chart")]
    AxisOutOfRange { index: usize, dim: usize },
    #[error("unsupported jet shape (dimension {dim}, order {order})")]
    Shape { dim: usize, order: u8 },
    #[error("{function} is not defined at {value}")]
    Domain { function: &'static str, value: f64 },
}

/// Elementary functions understood by [`jet_elementary`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Elementary {
    Sin,
    Cos,
    Tan,
    Exp,
    Log,
    Sqrt,
    Abs,
    Atan,
    Acos,
    /// `x^p` for a fixed real exponent; requires a positive base unless `p`
    /// is an integer.
    Power(f64),
}

impl Elementary {
    pub fn name(self) -> &'static str {
        match self {
            Elementary::Sin => "sin",
            Elementary::Cos => "cos",
            Elementary::Tan => "tan",
            Elementary::Exp => "exp",
            Elementary::Log => "log",
            Elementary::Sqrt => "sqrt",
            Elementary::Abs => "abs",
            Elementary::Atan => "atan",
            Elementary::Acos => "acos",
            Elementary::Power(_) => "power",
        }
    }

    /// Value and first three derivatives of the function at `v`.
    ///
    /// `order` is the derivative order the caller needs; domain checks are
    /// strict only where a derivative is actually requested (e.g. `sqrt(0)`
    /// is fine for a plain value).
    pub fn taylor(self, v: f64, order: u8) -> Result<[f64; 4], JetError> {
        let domain = |ok: bool| {
            if ok {
                Ok(())
            } else {
                Err(JetError::Domain {
                    function: self.name(),
                    value: v,
                })
            }
        };
        let d = match self {
            Elementary::Sin => {
                let (s, c) = v.sin_cos();
                [s, c, -s, -c]
            }
            Elementary::Cos => {
                let (s, c) = v.sin_cos();
                [c, -s, -c, s]
            }
            Elementary::Tan => {
                domain(v.cos() != 0.0)?;
                let t = v.tan();
                let sec2 = 1.0 + t * t;
                [t, sec2, 2.0 * t * sec2, sec2 * (2.0 + 6.0 * t * t)]
            }
            Elementary::Exp => {
                let e = v.exp();
                [e, e, e, e]
            }
            Elementary::Log => {
                domain(v > 0.0)?;
                let r = 1.0 / v;
                [v.ln(), r, -r * r, 2.0 * r * r * r]
            }
            Elementary::Sqrt => {
                if order == 0 {
                    domain(v >= 0.0)?;
                    [v.sqrt(), 0.0, 0.0, 0.0]
                } else {
                    domain(v > 0.0)?;
                    let r = v.sqrt();
                    let r3 = r * v;
                    let r5 = r3 * v;
                    [r, 0.5 / r, -0.25 / r3, 0.375 / r5]
                }
            }
            Elementary::Abs => {
                if order > 0 {
                    domain(v != 0.0)?;
                }
                [v.abs(), v.signum(), 0.0, 0.0]
            }
            Elementary::Atan => {
                let q = 1.0 / (1.0 + v * v);
                [v.atan(), q, -2.0 * v * q * q, (6.0 * v * v - 2.0) * q * q * q]
            }
            Elementary::Acos => {
                if order == 0 {
                    domain((-1.0..=1.0).contains(&v))?;
                    [v.acos(), 0.0, 0.0, 0.0]
                } else {
                    domain(v > -1.0 && v < 1.0)?;
                    let w = 1.0 - v * v;
                    let r = w.sqrt();
                    [
                        v.acos(),
                        -1.0 / r,
                        -v / (w * r),
                        -(1.0 + 2.0 * v * v) / (w * w * r),
                    ]
                }
            }
            Elementary::Power(p) => {
                if p.fract() == 0.0 {
                    domain(v != 0.0 || p >= 0.0)?;
                } else {
                    domain(v > 0.0)?;
                }
                [
                    v.powf(p),
                    p * v.powf(p - 1.0),
                    p * (p - 1.0) * v.powf(p - 2.0),
                    p * (p - 1.0) * (p - 2.0) * v.powf(p - 3.0),
                ]
            }
        };
        Ok(d)
    }
}

/// Truncated multivariate Taylor expansion of a scalar at a chart point.
#[derive(Clone, Copy, PartialEq)]
pub struct Jet {
    value: f64,
    grad: Grad,
    hess: Hess,
    third: Third,
    dim: u8,
    order: u8,
}

impl fmt::Debug for Jet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let n = self.dim();
        let mut s = f.debug_struct("Jet");
        s.field("value", &self.value);
        if self.order >= 1 {
            s.field("grad", &&self.grad[..n]);
        }
        if self.order >= 2 {
            let h: Vec<&[f64]> = self.hess[..n].iter().map(|r| &r[..n]).collect();
            s.field("hess", &h);
        }
        if self.order >= 3 {
            let t: Vec<Vec<&[f64]>> = self.third[..n]
                .iter()
                .map(|m| m[..n].iter().map(|r| &r[..n]).collect())
                .collect();
            s.field("third", &t);
        }
        s.field("dim", &self.dim).field("order", &self.order).finish()
    }
}

impl Jet {
    fn zeroed(dim: usize, order: u8) -> Self {
        Self {
            value: 0.0,
            grad: [0.0; MAX_DIM],
            hess: [[0.0; MAX_DIM]; MAX_DIM],
            third: [[[0.0; MAX_DIM]; MAX_DIM]; MAX_DIM],
            dim: dim as u8,
            order,
        }
    }

    fn check_shape(dim: usize, order: u8) -> Result<(), JetError> {
        if dim > MAX_DIM || order > MAX_ORDER {
            Err(JetError::Shape { dim, order })
        } else {
            Ok(())
        }
    }

    /// A jet with no dependence on the chart variables.
    pub fn constant(value: f64, dim: usize, order: u8) -> Self {
        assert!(dim <= MAX_DIM && order <= MAX_ORDER, "unsupported jet shape");
        Self {
            value,
            ..Self::zeroed(dim, order)
        }
    }

    /// The coordinate function `u_index` seeded at `value`.
    pub fn variable(index: usize, value: f64, dim: usize, order: u8) -> Result<Self, JetError> {
        Self::check_shape(dim, order)?;
        if index >= dim {
            return Err(JetError::AxisOutOfRange { index, dim });
        }
        let mut j = Self::constant(value, dim, order);
        if order >= 1 {
            j.grad[index] = 1.0;
        }
        Ok(j)
    }

    /// Builds a jet from explicit derivative arrays. Only the leading
    /// `dim`-sized blocks are read; the tensors are symmetrized by averaging
    /// over index permutations.
    pub fn from_parts(
        value: f64,
        grad: &[f64],
        hess: &[Vec<f64>],
        third: &[Vec<Vec<f64>>],
        dim: usize,
        order: u8,
    ) -> Result<Self, JetError> {
        Self::check_shape(dim, order)?;
        let mut j = Self::constant(value, dim, order);
        if order >= 1 {
            j.grad[..dim].copy_from_slice(&grad[..dim]);
        }
        if order >= 2 {
            for a in 0..dim {
                for b in 0..dim {
                    j.hess[a][b] = 0.5 * (hess[a][b] + hess[b][a]);
                }
            }
        }
        if order >= 3 {
            for a in 0..dim {
                for b in 0..dim {
                    for c in 0..dim {
                        let s = third[a][b][c]
                            + third[a][c][b]
                            + third[b][a][c]
                            + third[b][c][a]
                            + third[c][a][b]
                            + third[c][b][a];
                        j.third[a][b][c] = s / 6.0;
                    }
                }
            }
        }
        Ok(j)
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.value
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim as usize
    }

    #[inline]
    pub fn order(&self) -> u8 {
        self.order
    }

    /// First partial derivatives (zero beyond the tracked order).
    pub fn grad(&self) -> &[f64] {
        &self.grad[..self.dim()]
    }

    pub fn hess(&self, i: usize, j: usize) -> f64 {
        self.hess[i][j]
    }

    pub fn third(&self, i: usize, j: usize, k: usize) -> f64 {
        self.third[i][j][k]
    }

    pub fn hess_matrix(&self) -> Vec<Vec<f64>> {
        let n = self.dim();
        (0..n).map(|i| self.hess[i][..n].to_vec()).collect()
    }

    pub fn third_tensor(&self) -> Vec<Vec<Vec<f64>>> {
        let n = self.dim();
        (0..n)
            .map(|i| (0..n).map(|j| self.third[i][j][..n].to_vec()).collect())
            .collect()
    }

    /// Replaces the value slot, keeping the derivatives.
    pub fn with_value(mut self, value: f64) -> Self {
        self.value = value;
        self
    }

    /// True when every tracked derivative is zero.
    pub fn is_constant(&self) -> bool {
        let n = self.dim();
        (0..n).all(|i| {
            self.grad[i] == 0.0
                && (0..n).all(|j| {
                    self.hess[i][j] == 0.0 && (0..n).all(|k| self.third[i][j][k] == 0.0)
                })
        })
    }

    /// Returns the same jet with derivatives above `order` dropped.
    pub fn truncate(mut self, order: u8) -> Self {
        if order >= self.order {
            return self;
        }
        if order < 3 {
            self.third = [[[0.0; MAX_DIM]; MAX_DIM]; MAX_DIM];
        }
        if order < 2 {
            self.hess = [[0.0; MAX_DIM]; MAX_DIM];
        }
        if order < 1 {
            self.grad = [0.0; MAX_DIM];
        }
        self.order = order;
        self
    }

    /// The jet of `∂f/∂u_axis`, one order lower.
    pub fn derivative(&self, axis: usize) -> Self {
        assert!(self.order >= 1, "cannot differentiate an order-0 jet");
        assert!(axis < self.dim(), "axis out of range");
        let n = self.dim();
        let mut d = Self::zeroed(n, self.order - 1);
        d.value = self.grad[axis];
        if d.order >= 1 {
            for i in 0..n {
                d.grad[i] = self.hess[axis][i];
            }
        }
        if d.order >= 2 {
            for i in 0..n {
                for j in 0..n {
                    d.hess[i][j] = self.third[axis][i][j];
                }
            }
        }
        d
    }

    /// Directional derivative `Σ v_i ∂_i f`, one order lower.
    pub fn directional(&self, v: &[f64]) -> Self {
        let mut acc = Self::constant(0.0, self.dim(), self.order - 1);
        for (i, &vi) in v.iter().enumerate() {
            if vi != 0.0 {
                acc += self.derivative(i) * vi;
            }
        }
        acc
    }

    /// Checks that the Hessian and third tensor are symmetric.
    pub fn is_symmetric(&self) -> bool {
        let n = self.dim();
        for i in 0..n {
            for j in 0..n {
                if self.hess[i][j] != self.hess[j][i] {
                    return false;
                }
                for k in 0..n {
                    let t = self.third[i][j][k];
                    if t != self.third[i][k][j]
                        || t != self.third[j][i][k]
                        || t != self.third[j][k][i]
                        || t != self.third[k][i][j]
                        || t != self.third[k][j][i]
                    {
                        return false;
                    }
                }
            }
        }
        true
    }

    // Evaluates `f` on sorted index tuples only and mirrors the result, so
    // the stored tensors are bitwise symmetric.
    fn fill_hess(&mut self, f: impl Fn(usize, usize) -> f64) {
        let n = self.dim();
        for i in 0..n {
            for j in i..n {
                let v = f(i, j);
                self.hess[i][j] = v;
                self.hess[j][i] = v;
            }
        }
    }

    fn fill_third(&mut self, f: impl Fn(usize, usize, usize) -> f64) {
        let n = self.dim();
        for i in 0..n {
            for j in i..n {
                for k in j..n {
                    let v = f(i, j, k);
                    for [a, b, c] in [[i, j, k], [i, k, j], [j, i, k], [j, k, i], [k, i, j], [k, j, i]] {
                        self.third[a][b][c] = v;
                    }
                }
            }
        }
    }

    #[inline]
    fn finish(self) -> Self {
        debug_assert!(self.is_symmetric(), "jet lost derivative symmetry: {self:?}");
        self
    }

    fn assert_compatible(&self, other: &Self) {
        assert!(
            self.dim == other.dim && self.order == other.order,
            "jet shape mismatch: ({}, {}) vs ({}, {})",
            self.dim,
            self.order,
            other.dim,
            other.order
        );
    }

    /// Applies a univariate function given its value and first three
    /// derivatives at `self.value` (Faà di Bruno up to third order).
    pub fn compose(&self, d: [f64; 4]) -> Self {
        let n = self.dim();
        let g = &self.grad;
        let h = &self.hess;
        let mut r = Self::zeroed(n, self.order);
        r.value = d[0];
        if self.order >= 1 {
            for i in 0..n {
                r.grad[i] = d[1] * g[i];
            }
        }
        if self.order >= 2 {
            r.fill_hess(|i, j| d[2] * g[i] * g[j] + d[1] * h[i][j]);
        }
        if self.order >= 3 {
            r.fill_third(|i, j, k| {
                d[3] * g[i] * g[j] * g[k]
                    + d[2] * (h[i][j] * g[k] + h[i][k] * g[j] + h[j][k] * g[i])
                    + d[1] * self.third[i][j][k]
            });
        }
        r.finish()
    }

    pub fn apply(&self, f: Elementary) -> Result<Self, JetError> {
        Ok(self.compose(f.taylor(self.value, self.order)?))
    }

    pub fn sin(&self) -> Self {
        self.compose(Elementary::Sin.taylor(self.value, self.order).unwrap())
    }

    pub fn cos(&self) -> Self {
        self.compose(Elementary::Cos.taylor(self.value, self.order).unwrap())
    }

    pub fn exp(&self) -> Self {
        self.compose(Elementary::Exp.taylor(self.value, self.order).unwrap())
    }

    pub fn sqrt(&self) -> Result<Self, JetError> {
        self.apply(Elementary::Sqrt)
    }

    pub fn ln(&self) -> Result<Self, JetError> {
        self.apply(Elementary::Log)
    }

    pub fn acos(&self) -> Result<Self, JetError> {
        self.apply(Elementary::Acos)
    }

    pub fn recip(&self) -> Result<Self, JetError> {
        if self.value == 0.0 {
            return Err(JetError::Domain {
                function: "reciprocal",
                value: 0.0,
            });
        }
        let r = 1.0 / self.value;
        let r2 = r * r;
        Ok(self.compose([r, -r2, 2.0 * r2 * r, -6.0 * r2 * r2]))
    }

    /// Division that reports a zero divisor instead of producing infinities.
    pub fn checked_div(&self, rhs: &Self) -> Result<Self, JetError> {
        self.assert_compatible(rhs);
        if rhs.value == 0.0 {
            return Err(JetError::Domain {
                function: "division",
                value: 0.0,
            });
        }
        let mut q = *self * rhs.recip()?;
        q.value = self.value / rhs.value;
        Ok(q)
    }

    /// Integer power by repeated squaring; exact for polynomials.
    pub fn powi(&self, exponent: i32) -> Result<Self, JetError> {
        let mut base = *self;
        let mut e = exponent.unsigned_abs();
        let mut acc = Self::constant(1.0, self.dim(), self.order);
        let mut first = true;
        while e > 0 {
            if e & 1 == 1 {
                acc = if first { base } else { acc * base };
                first = false;
            }
            e >>= 1;
            if e > 0 {
                base = base * base;
            }
        }
        if exponent < 0 {
            acc.recip()
        } else {
            Ok(acc)
        }
    }

    /// `atan2(self, x)` with derivatives of the locally smooth branch.
    pub fn atan2(&self, x: &Self) -> Result<Self, JetError> {
        self.assert_compatible(x);
        let (y0, x0) = (self.value, x.value);
        if y0 == 0.0 && x0 == 0.0 {
            return Err(JetError::Domain {
                function: "atan2",
                value: 0.0,
            });
        }
        let mut r = if x0.abs() >= y0.abs() {
            self.checked_div(x)?.apply(Elementary::Atan)?
        } else {
            -x.checked_div(self)?.apply(Elementary::Atan)?
        };
        r.value = y0.atan2(x0);
        Ok(r)
    }
}

/// Seeds the coordinate jet `u_index` (free-function form).
pub fn jet_variable(index: usize, value: f64, dim: usize, order: u8) -> Result<Jet, JetError> {
    Jet::variable(index, value, dim, order)
}

/// Chain-rule propagation of an elementary function through a jet.
pub fn jet_elementary(f: Elementary, x: &Jet) -> Result<Jet, JetError> {
    x.apply(f)
}

impl Add for Jet {
    type Output = Jet;
    fn add(mut self, rhs: Jet) -> Jet {
        self += rhs;
        self
    }
}

impl AddAssign for Jet {
    fn add_assign(&mut self, rhs: Jet) {
        self.assert_compatible(&rhs);
        let n = self.dim();
        self.value += rhs.value;
        for i in 0..n {
            self.grad[i] += rhs.grad[i];
            for j in 0..n {
                self.hess[i][j] += rhs.hess[i][j];
                for k in 0..n {
                    self.third[i][j][k] += rhs.third[i][j][k];
                }
            }
        }
    }
}

impl Sub for Jet {
    type Output = Jet;
    fn sub(self, rhs: Jet) -> Jet {
        self + (-rhs)
    }
}

impl Neg for Jet {
    type Output = Jet;
    fn neg(mut self) -> Jet {
        let n = self.dim();
        self.value = -self.value;
        for i in 0..n {
            self.grad[i] = -self.grad[i];
            for j in 0..n {
                self.hess[i][j] = -self.hess[i][j];
                for k in 0..n {
                    self.third[i][j][k] = -self.third[i][j][k];
                }
            }
        }
        self
    }
}

impl Mul for Jet {
    type Output = Jet;
    fn mul(self, b: Jet) -> Jet {
        self.assert_compatible(&b);
        let a = self;
        let n = a.dim();
        let mut r = Jet::zeroed(n, a.order);
        r.value = a.value * b.value;
        if a.order >= 1 {
            for i in 0..n {
                r.grad[i] = a.grad[i] * b.value + a.value * b.grad[i];
            }
        }
        if a.order >= 2 {
            r.fill_hess(|i, j| {
                a.hess[i][j] * b.value
                    + a.grad[i] * b.grad[j]
                    + a.grad[j] * b.grad[i]
                    + a.value * b.hess[i][j]
            });
        }
        if a.order >= 3 {
            r.fill_third(|i, j, k| {
                a.third[i][j][k] * b.value
                    + a.hess[i][j] * b.grad[k]
                    + a.hess[i][k] * b.grad[j]
                    + a.hess[j][k] * b.grad[i]
                    + a.grad[i] * b.hess[j][k]
                    + a.grad[j] * b.hess[i][k]
                    + a.grad[k] * b.hess[i][j]
                    + a.value * b.third[i][j][k]
            });
        }
        r.finish()
    }
}

/// Unchecked division; a zero divisor yields non-finite values as with `f64`.
impl Div for Jet {
    type Output = Jet;
    fn div(self, rhs: Jet) -> Jet {
        self.assert_compatible(&rhs);
        let r = 1.0 / rhs.value;
        let r2 = r * r;
        let mut q = self * rhs.compose([r, -r2, 2.0 * r2 * r, -6.0 * r2 * r2]);
        q.value = self.value / rhs.value;
        q
    }
}

impl Add<f64> for Jet {
    type Output = Jet;
    fn add(mut self, rhs: f64) -> Jet {
        self.value += rhs;
        self
    }
}

impl Sub<f64> for Jet {
    type Output = Jet;
    fn sub(mut self, rhs: f64) -> Jet {
        self.value -= rhs;
        self
    }
}

impl Mul<f64> for Jet {
    type Output = Jet;
    fn mul(mut self, rhs: f64) -> Jet {
        let n = self.dim();
        self.value *= rhs;
        for i in 0..n {
            self.grad[i] *= rhs;
            for j in 0..n {
                self.hess[i][j] *= rhs;
                for k in 0..n {
                    self.third[i][j][k] *= rhs;
                }
            }
        }
        self
    }
}

impl Mul<Jet> for f64 {
    type Output = Jet;
    fn mul(self, rhs: Jet) -> Jet {
        rhs * self
    }
}

impl Add<Jet> for f64 {
    type Output = Jet;
    fn add(self, rhs: Jet) -> Jet {
        rhs + self
    }
}

impl Sub<Jet> for f64 {
    type Output = Jet;
    fn sub(self, rhs: Jet) -> Jet {
        -rhs + self
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn var(i: usize, v: f64, n: usize, order: u8) -> Jet {
        Jet::variable(i, v, n, order).unwrap()
    }

    #[test]
    fn coordinate_jets() {
        let x = var(0, 2.5, 3, 2);
        assert_eq!(x.value(), 2.5);
        assert_eq!(x.grad(), &[1.0, 0.0, 0.0]);
        assert_eq!(x.hess_matrix(), vec![vec![0.0; 3]; 3]);

        let z = var(2, 0.0, 3, 3);
        assert_eq!(z.value(), 0.0);
        assert_eq!(z.grad(), &[0.0, 0.0, 1.0]);
        assert!(z.third_tensor().iter().flatten().flatten().all(|&t| t == 0.0));
    }

    #[test]
    fn variable_rejects_bad_axis() {
        assert_eq!(
            Jet::variable(3, 1.0, 3, 2),
            Err(JetError::AxisOutOfRange { index: 3, dim: 3 })
        );
        assert!(Jet::variable(0, 1.0, 4, 2).is_err());
    }

    #[test]
    fn product_of_coordinates() {
        let (a, b) = (1.5, -2.0);
        let p = var(0, a, 3, 2) * var(1, b, 3, 2);
        assert_eq!(p.value(), a * b);
        assert_eq!(p.grad(), &[b, a, 0.0]);
        assert_eq!(p.hess(0, 1), 1.0);
        assert_eq!(p.hess(1, 0), 1.0);
        assert_eq!(p.hess(0, 0), 0.0);
    }

    #[test]
    fn sin_and_cos_at_zero() {
        let x = var(0, 0.0, 1, 2);
        let s = x.sin();
        assert_eq!((s.value(), s.grad()[0], s.hess(0, 0)), (0.0, 1.0, -0.0));
        let c = x.cos();
        assert_eq!((c.value(), c.grad()[0], c.hess(0, 0)), (1.0, -0.0, -1.0));
    }

    #[test]
    fn exp_matches_finite_differences() {
        let x = var(0, 1.0, 1, 3);
        let e = x.exp();
        let fd = finite_difference_jet(|p: &[f64]| Ok::<_, ()>(p[0].exp()), &[1.0], None).unwrap();
        let tol = 1e-7;
        assert!((e.value() - std::f64::consts::E).abs() < 1e-15);
        assert!((e.grad()[0] - fd.grad()[0]).abs() < tol);
        assert!((e.hess(0, 0) - fd.hess(0, 0)).abs() < tol);
        // third derivatives from a five-point stencil are noisier
        assert!((e.third(0, 0, 0) - fd.third(0, 0, 0)).abs() < 1e-5);
        for d in [e.grad()[0], e.hess(0, 0), e.third(0, 0, 0)] {
            assert_eq!(d, std::f64::consts::E);
        }
    }

    #[test]
    fn domain_errors() {
        let x = var(0, -1.0, 1, 1);
        assert!(matches!(
            x.ln(),
            Err(JetError::Domain { function: "log", .. })
        ));
        assert!(x.sqrt().is_err());
        assert!(Jet::constant(0.0, 1, 0).sqrt().is_ok());
        assert!(Jet::constant(0.0, 1, 1).sqrt().is_err());
        assert!(var(0, 1.0, 1, 1).acos().is_err());
        assert!(Jet::constant(0.0, 1, 2).recip().is_err());
    }

    #[test]
    fn derivative_shifts_order() {
        // f = u^2 v on a 2-d chart
        let u = var(0, 2.0, 2, 3);
        let v = var(1, 3.0, 2, 3);
        let f = u * u * v;
        let fu = f.derivative(0); // 2uv
        assert_eq!(fu.order(), 2);
        assert_eq!(fu.value(), 12.0);
        assert_eq!(fu.grad(), &[6.0, 4.0]);
        assert_eq!(fu.hess(0, 1), 2.0);
        assert_eq!(fu.hess(0, 0), 0.0);
    }

    #[test]
    fn powi_is_exact_for_polynomials() {
        let x = var(0, 1.5, 1, 3);
        let p = x.powi(5).unwrap();
        assert_eq!(p.value(), 1.5f64.powi(5));
        assert!((p.grad()[0] - 5.0 * 1.5f64.powi(4)).abs() < 1e-12);
        assert!((p.hess(0, 0) - 20.0 * 1.5f64.powi(3)).abs() < 1e-12);
        assert!((p.third(0, 0, 0) - 60.0 * 1.5f64.powi(2)).abs() < 1e-12);
        let q = x.powi(-2).unwrap();
        assert!((q.grad()[0] + 2.0 / 1.5f64.powi(3)).abs() < 1e-12);
        assert!(Jet::constant(0.0, 1, 1).powi(-1).is_err());
    }

    #[test]
    fn atan2_matches_angle_on_both_branches() {
        for &(x0, y0) in &[(1.0, 0.3), (0.2, 1.5), (-1.0, 0.4), (-0.1, -2.0)] {
            let x = var(0, x0, 2, 3);
            let y = var(1, y0, 2, 3);
            let a = y.atan2(&x).unwrap();
            assert_eq!(a.value(), f64::atan2(y0, x0));
            let r2 = x0 * x0 + y0 * y0;
            assert!((a.grad()[0] + y0 / r2).abs() < 1e-14);
            assert!((a.grad()[1] - x0 / r2).abs() < 1e-14);
            // atan2 is harmonic
            assert!((a.hess(0, 0) + a.hess(1, 1)).abs() < 1e-13);
        }
    }

    fn random_jet(vals: &[f64], n: usize) -> Jet {
        // a jet from arbitrary symmetric coefficients
        let grad = vals[1..4].to_vec();
        let hess: Vec<Vec<f64>> = (0..3)
            .map(|i| (0..3).map(|j| vals[4 + i.min(j) * 3 + i.max(j)]).collect())
            .collect();
        let third: Vec<Vec<Vec<f64>>> = (0..3)
            .map(|i| {
                (0..3)
                    .map(|j| (0..3).map(|k| vals[13 + (i + j + k) * 2 + (i * j * k) % 2]).collect())
                    .collect()
            })
            .collect();
        Jet::from_parts(vals[0], &grad, &hess, &third, n, 3).unwrap()
    }

    proptest! {
        #[test]
        fn leibniz_rule(
            a in proptest::collection::vec(-2.0f64..2.0, 30),
            b in proptest::collection::vec(-2.0f64..2.0, 30),
            n in 1usize..=3,
        ) {
            let x = random_jet(&a, n);
            let y = random_jet(&b, n);
            let p = x * y;
            prop_assert!(p.is_symmetric());
            for i in 0..n {
                let g = x.grad()[i] * y.value() + x.value() * y.grad()[i];
                prop_assert!((p.grad()[i] - g).abs() < 1e-12);
                for j in 0..n {
                    let h = x.hess(i, j) * y.value() + x.grad()[i] * y.grad()[j]
                        + x.grad()[j] * y.grad()[i] + x.value() * y.hess(i, j);
                    prop_assert!((p.hess(i, j) - h).abs() < 1e-12);
                    for k in 0..n {
                        let idx = [i, j, k];
                        // sum over all ways to split {i,j,k} between the factors
                        let mut t = 0.0;
                        for mask in 0u8..8 {
                            let left: Vec<usize> = (0..3).filter(|b| mask >> b & 1 == 1).map(|b| idx[b]).collect();
                            let right: Vec<usize> = (0..3).filter(|b| mask >> b & 1 == 0).map(|b| idx[b]).collect();
                            t += slot(&x, &left) * slot(&y, &right);
                        }
                        prop_assert!((p.third(i, j, k) - t).abs() < 1e-12);
                    }
                }
            }
        }

        #[test]
        fn sin_of_polynomial_matches_fd(u0 in -1.0f64..1.0, v0 in -1.0f64..1.0) {
            let u = var(0, u0, 2, 3);
            let v = var(1, v0, 2, 3);
            let poly = u * u * v + 3.0 * v - u * 0.5;
            let s = jet_elementary(Elementary::Sin, &poly).unwrap();
            let f = |p: &[f64]| Ok::<_, ()>((p[0] * p[0] * p[1] + 3.0 * p[1] - p[0] * 0.5).sin());
            let fd = finite_difference_jet(f, &[u0, v0], None).unwrap();
            let close = |a: f64, b: f64| (a - b).abs() <= 1e-5 * b.abs().max(1.0);
            for i in 0..2 {
                prop_assert!(close(s.grad()[i], fd.grad()[i]));
                for j in 0..2 {
                    prop_assert!(close(s.hess(i, j), fd.hess(i, j)));
                    for k in 0..2 {
                        prop_assert!(close(s.third(i, j, k), fd.third(i, j, k)));
                    }
                }
            }
        }
    }

    fn slot(j: &Jet, idx: &[usize]) -> f64 {
        match idx {
            [] => j.value(),
            [a] => j.grad()[*a],
            [a, b] => j.hess(*a, *b),
            [a, b, c] => j.third(*a, *b, *c),
            _ => unreachable!(),
        }
    }
}

//! Scalar expression language for profile functions and parametrization
//! components.
//!
//! Grammar (whitespace-insensitive):
//!
//! ```text
//! expr   = term   { ("+" | "-") term } ;
//! term   = unary  { ("*" | "/") unary } ;
//! unary  = ("-" | "+") unary | power ;
//! power  = atom [ "^" unary ] ;              (* right-associative *)
//! atom   = number | variable | "pi"
//!        | function "(" expr { "," expr } ")"
//!        | "(" expr ")" ;
//! number = digits [ "." digits ] [ ("e" | "E") [ "+" | "-" ] digits ] ;
//! function = "sin" | "cos" | "tan" | "exp" | "log" | "sqrt" | "abs"
//!          | "atan" | "atan2" ;
//! ```
//!
//! There is no implicit multiplication: `2s` is rejected. Variables must be
//! declared when parsing. `x^n` with an integer constant exponent is
//! evaluated by repeated multiplication; any other exponent needs a positive
//! base.

mod diff;
mod parse;

use std::collections::HashMap;
use std::fmt;

use thiserror::Error;

use crate::jet::{Elementary, Jet, JetError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExprError {
    #[error("syntax error at offset {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("unknown identifier '{name}' at offset {offset}")]
    UnknownIdentifier { name: String, offset: usize },
    #[error("{function} takes {expected} argument(s), got {found}")]
    Arity {
        function: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("no binding for variable '{0}'")]
    MissingBinding(String),
    #[error("expected {expected} argument value(s), got {found}")]
    ArgumentCount { expected: usize, found: usize },
    #[error(transparent)]
    Domain(#[from] JetError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

impl BinOp {
    fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Pow => "^",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Tan,
    Exp,
    Log,
    Sqrt,
    Abs,
    Atan,
    Atan2,
}

impl Func {
    const ALL: [Func; 9] = [
        Func::Sin,
        Func::Cos,
        Func::Tan,
        Func::Exp,
        Func::Log,
        Func::Sqrt,
        Func::Abs,
        Func::Atan,
        Func::Atan2,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Tan => "tan",
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sqrt => "sqrt",
            Func::Abs => "abs",
            Func::Atan => "atan",
            Func::Atan2 => "atan2",
        }
    }

    fn from_name(name: &str) -> Option<Func> {
        Func::ALL.into_iter().find(|f| f.name() == name)
    }

    pub fn arity(self) -> usize {
        match self {
            Func::Atan2 => 2,
            _ => 1,
        }
    }

    fn elementary(self) -> Option<Elementary> {
        Some(match self {
            Func::Sin => Elementary::Sin,
            Func::Cos => Elementary::Cos,
            Func::Tan => Elementary::Tan,
            Func::Exp => Elementary::Exp,
            Func::Log => Elementary::Log,
            Func::Sqrt => Elementary::Sqrt,
            Func::Abs => Elementary::Abs,
            Func::Atan => Elementary::Atan,
            Func::Atan2 => return None,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Const(f64),
    /// Index into the expression's declared variable list.
    Var(usize),
    Neg(Box<Node>),
    Binary(BinOp, Box<Node>, Box<Node>),
    Call(Func, Vec<Node>),
}

/// A parsed expression over a fixed, ordered list of variables.
#[derive(Debug, Clone, PartialEq)]
pub struct Expr {
    vars: Vec<String>,
    root: Node,
}

/// Parses `text` with the given declared variables.
pub fn parse_expr<S: AsRef<str>>(text: &str, vars: &[S]) -> Result<Expr, ExprError> {
    let vars: Vec<String> = vars.iter().map(|v| v.as_ref().to_string()).collect();
    let root = parse::Parser::new(text, &vars)?.parse_all()?;
    Ok(Expr { vars, root })
}

/// Evaluates `e` with jets bound by name.
pub fn eval_expr(e: &Expr, env: &HashMap<String, Jet>) -> Result<Jet, ExprError> {
    e.eval_named(|name| env.get(name).copied())
}

impl Expr {
    pub fn vars(&self) -> &[String] {
        &self.vars
    }

    pub fn root(&self) -> &Node {
        &self.root
    }

    /// Evaluates with jets given positionally, in declared-variable order.
    pub fn eval(&self, args: &[Jet]) -> Result<Jet, ExprError> {
        if args.len() != self.vars.len() {
            return Err(ExprError::ArgumentCount {
                expected: self.vars.len(),
                found: args.len(),
            });
        }
        let proto = args
            .first()
            .map(|a| Jet::constant(0.0, a.dim(), a.order()))
            .unwrap_or_else(|| Jet::constant(0.0, 0, 0));
        eval_node(&self.root, args, &proto)
    }

    pub fn eval_named(&self, lookup: impl Fn(&str) -> Option<Jet>) -> Result<Jet, ExprError> {
        let args = self
            .vars
            .iter()
            .map(|v| lookup(v).ok_or_else(|| ExprError::MissingBinding(v.clone())))
            .collect::<Result<Vec<_>, _>>()?;
        self.eval(&args)
    }

    /// Plain floating-point evaluation. Follows the same operation sequence
    /// as [`Expr::eval`], so it agrees bit-for-bit with order-0 jets.
    pub fn eval_real(&self, args: &[f64]) -> Result<f64, ExprError> {
        if args.len() != self.vars.len() {
            return Err(ExprError::ArgumentCount {
                expected: self.vars.len(),
                found: args.len(),
            });
        }
        eval_node(&self.root, args, &0.0)
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_node(f, &self.root, &self.vars)
    }
}

fn write_node(f: &mut fmt::Formatter<'_>, node: &Node, vars: &[String]) -> fmt::Result {
    match node {
        Node::Const(v) => write!(f, "{v:?}"),
        Node::Var(i) => f.write_str(&vars[*i]),
        Node::Neg(inner) => {
            f.write_str("(-")?;
            write_node(f, inner, vars)?;
            f.write_str(")")
        }
        Node::Binary(op, l, r) => {
            f.write_str("(")?;
            write_node(f, l, vars)?;
            write!(f, " {} ", op.symbol())?;
            write_node(f, r, vars)?;
            f.write_str(")")
        }
        Node::Call(func, args) => {
            write!(f, "{}(", func.name())?;
            for (i, a) in args.iter().enumerate() {
                if i > 0 {
                    f.write_str(", ")?;
                }
                write_node(f, a, vars)?;
            }
            f.write_str(")")
        }
    }
}

/// Number-like values the evaluator can run on.
trait Scalar: Copy {
    fn lift(&self, c: f64) -> Self;
    fn value(&self) -> f64;
    fn has_derivatives(&self) -> bool;
    fn add(self, o: Self) -> Self;
    fn sub(self, o: Self) -> Self;
    fn mul(self, o: Self) -> Self;
    fn neg(self) -> Self;
    fn recip(self) -> Result<Self, JetError>;
    fn div(self, o: Self) -> Result<Self, JetError>;
    fn elementary(self, f: Elementary) -> Result<Self, JetError>;
    fn atan2(self, x: Self) -> Result<Self, JetError>;
    /// `self^exponent` for a non-constant exponent.
    fn pow_general(self, exponent: Self) -> Result<Self, JetError>;
}

impl Scalar for f64 {
    fn lift(&self, c: f64) -> Self {
        c
    }
    fn value(&self) -> f64 {
        *self
    }
    fn has_derivatives(&self) -> bool {
        false
    }
    fn add(self, o: Self) -> Self {
        self + o
    }
    fn sub(self, o: Self) -> Self {
        self - o
    }
    fn mul(self, o: Self) -> Self {
        self * o
    }
    fn neg(self) -> Self {
        -self
    }
    fn recip(self) -> Result<Self, JetError> {
        if self == 0.0 {
            return Err(JetError::Domain {
                function: "reciprocal",
                value: 0.0,
            });
        }
        Ok(1.0 / self)
    }
    fn div(self, o: Self) -> Result<Self, JetError> {
        if o == 0.0 {
            return Err(JetError::Domain {
                function: "division",
                value: 0.0,
            });
        }
        Ok(self / o)
    }
    fn elementary(self, f: Elementary) -> Result<Self, JetError> {
        Ok(f.taylor(self, 0)?[0])
    }
    fn atan2(self, x: Self) -> Result<Self, JetError> {
        if self == 0.0 && x == 0.0 {
            return Err(JetError::Domain {
                function: "atan2",
                value: 0.0,
            });
        }
        Ok(self.atan2(x))
    }
    fn pow_general(self, exponent: Self) -> Result<Self, JetError> {
        self.elementary(Elementary::Power(exponent))
    }
}

impl Scalar for Jet {
    fn lift(&self, c: f64) -> Self {
        Jet::constant(c, self.dim(), self.order())
    }
    fn value(&self) -> f64 {
        Jet::value(self)
    }
    fn has_derivatives(&self) -> bool {
        !self.is_constant()
    }
    fn add(self, o: Self) -> Self {
        self + o
    }
    fn sub(self, o: Self) -> Self {
        self - o
    }
    fn mul(self, o: Self) -> Self {
        self * o
    }
    fn neg(self) -> Self {
        -self
    }
    fn recip(self) -> Result<Self, JetError> {
        Jet::recip(&self)
    }
    fn div(self, o: Self) -> Result<Self, JetError> {
        self.checked_div(&o)
    }
    fn elementary(self, f: Elementary) -> Result<Self, JetError> {
        self.apply(f)
    }
    fn atan2(self, x: Self) -> Result<Self, JetError> {
        Jet::atan2(&self, &x)
    }
    fn pow_general(self, exponent: Self) -> Result<Self, JetError> {
        if self.value() <= 0.0 {
            return Err(JetError::Domain {
                function: "power",
                value: self.value(),
            });
        }
        let r = (exponent * self.ln()?).exp();
        Ok(r.with_value(Jet::value(&self).powf(Jet::value(&exponent))))
    }
}

/// Integer power by repeated squaring, the same sequence for every scalar.
fn powi<S: Scalar>(base: S, exponent: i64) -> Result<S, JetError> {
    let mut b = base;
    let mut e = exponent.unsigned_abs();
    let mut acc: Option<S> = None;
    while e > 0 {
        if e & 1 == 1 {
            acc = Some(match acc {
                None => b,
                Some(a) => a.mul(b),
            });
        }
        e >>= 1;
        if e > 0 {
            b = b.mul(b);
        }
    }
    let acc = acc.unwrap_or_else(|| base.lift(1.0));
    if exponent < 0 {
        acc.recip()
    } else {
        Ok(acc)
    }
}

const MAX_INTEGER_EXPONENT: f64 = 1024.0;

fn eval_node<S: Scalar>(node: &Node, args: &[S], proto: &S) -> Result<S, ExprError> {
    Ok(match node {
        Node::Const(c) => proto.lift(*c),
        Node::Var(i) => args[*i],
        Node::Neg(inner) => eval_node(inner, args, proto)?.neg(),
        Node::Binary(op, l, r) => {
            let a = eval_node(l, args, proto)?;
            let b = eval_node(r, args, proto)?;
            match op {
                BinOp::Add => a.add(b),
                BinOp::Sub => a.sub(b),
                BinOp::Mul => a.mul(b),
                BinOp::Div => a.div(b)?,
                BinOp::Pow => {
                    let p = b.value();
                    if b.has_derivatives() {
                        a.pow_general(b)?
                    } else if p.fract() == 0.0 && p.abs() <= MAX_INTEGER_EXPONENT {
                        powi(a, p as i64)?
                    } else {
                        a.elementary(Elementary::Power(p))?
                    }
                }
            }
        }
        Node::Call(func, call_args) => {
            let first = eval_node(&call_args[0], args, proto)?;
            match func.elementary() {
                Some(e) => first.elementary(e)?,
                None => {
                    let second = eval_node(&call_args[1], args, proto)?;
                    first.atan2(second)?
                }
            }
        }
    })
}

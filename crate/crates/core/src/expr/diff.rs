//! Symbolic partial derivatives, used internally where a family needs one
//! more derivative of a user expression than jets of order three carry.

use super::{BinOp, Expr, Func, Node};

fn c(v: f64) -> Node {
    Node::Const(v)
}

fn is_const(n: &Node, v: f64) -> bool {
    matches!(n, Node::Const(x) if *x == v)
}

fn add(a: Node, b: Node) -> Node {
    if is_const(&a, 0.0) {
        b
    } else if is_const(&b, 0.0) {
        a
    } else {
        Node::Binary(BinOp::Add, Box::new(a), Box::new(b))
    }
}

fn sub(a: Node, b: Node) -> Node {
    if is_const(&b, 0.0) {
        a
    } else if is_const(&a, 0.0) {
        neg(b)
    } else {
        Node::Binary(BinOp::Sub, Box::new(a), Box::new(b))
    }
}

fn mul(a: Node, b: Node) -> Node {
    if is_const(&a, 0.0) || is_const(&b, 0.0) {
        c(0.0)
    } else if is_const(&a, 1.0) {
        b
    } else if is_const(&b, 1.0) {
        a
    } else {
        Node::Binary(BinOp::Mul, Box::new(a), Box::new(b))
    }
}

fn div(a: Node, b: Node) -> Node {
    if is_const(&a, 0.0) {
        c(0.0)
    } else if is_const(&b, 1.0) {
        a
    } else {
        Node::Binary(BinOp::Div, Box::new(a), Box::new(b))
    }
}

fn neg(a: Node) -> Node {
    match a {
        Node::Const(v) => c(-v),
        Node::Neg(inner) => *inner,
        other => Node::Neg(Box::new(other)),
    }
}

fn pow(a: Node, b: Node) -> Node {
    Node::Binary(BinOp::Pow, Box::new(a), Box::new(b))
}

fn call(f: Func, a: Node) -> Node {
    Node::Call(f, vec![a])
}

fn depends_on(n: &Node, var: usize) -> bool {
    match n {
        Node::Const(_) => false,
        Node::Var(i) => *i == var,
        Node::Neg(a) => depends_on(a, var),
        Node::Binary(_, a, b) => depends_on(a, var) || depends_on(b, var),
        Node::Call(_, args) => args.iter().any(|a| depends_on(a, var)),
    }
}

fn d(n: &Node, var: usize) -> Node {
    if !depends_on(n, var) {
        return c(0.0);
    }
    match n {
        Node::Const(_) => c(0.0),
        Node::Var(_) => c(1.0),
        Node::Neg(a) => neg(d(a, var)),
        Node::Binary(op, a, b) => {
            let (a, b) = (a.as_ref(), b.as_ref());
            match op {
                BinOp::Add => add(d(a, var), d(b, var)),
                BinOp::Sub => sub(d(a, var), d(b, var)),
                BinOp::Mul => add(mul(d(a, var), b.clone()), mul(a.clone(), d(b, var))),
                BinOp::Div => sub(
                    div(d(a, var), b.clone()),
                    div(mul(a.clone(), d(b, var)), pow(b.clone(), c(2.0))),
                ),
                BinOp::Pow if !depends_on(b, var) => {
                    let lowered = match b {
                        Node::Const(p) => c(p - 1.0),
                        other => sub(other.clone(), c(1.0)),
                    };
                    mul(mul(b.clone(), pow(a.clone(), lowered)), d(a, var))
                }
                BinOp::Pow => {
                    // a^b (b' log a + b a'/a)
                    let inner = add(
                        mul(d(b, var), call(Func::Log, a.clone())),
                        div(mul(b.clone(), d(a, var)), a.clone()),
                    );
                    mul(n.clone(), inner)
                }
            }
        }
        Node::Call(f, args) => {
            let a = &args[0];
            let da = d(a, var);
            let outer = match f {
                Func::Sin => call(Func::Cos, a.clone()),
                Func::Cos => neg(call(Func::Sin, a.clone())),
                Func::Tan => div(c(1.0), pow(call(Func::Cos, a.clone()), c(2.0))),
                Func::Exp => n.clone(),
                Func::Log => div(c(1.0), a.clone()),
                Func::Sqrt => div(c(0.5), n.clone()),
                Func::Abs => div(a.clone(), n.clone()),
                Func::Atan => div(c(1.0), add(c(1.0), pow(a.clone(), c(2.0)))),
                Func::Atan2 => {
                    let (y, x) = (&args[0], &args[1]);
                    let num = sub(mul(x.clone(), d(y, var)), mul(y.clone(), d(x, var)));
                    let den = add(pow(x.clone(), c(2.0)), pow(y.clone(), c(2.0)));
                    return div(num, den);
                }
            };
            mul(outer, da)
        }
    }
}

impl Expr {
    /// Partial derivative with respect to the declared variable at `var`.
    pub(crate) fn derivative(&self, var: usize) -> Expr {
        Expr {
            vars: self.vars.clone(),
            root: d(&self.root, var),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::super::parse_expr;
    use crate::jet::Jet;

    fn check(text: &str, vars: &[&str], at: &[f64]) {
        let e = parse_expr(text, vars).unwrap();
        let n = vars.len();
        let args: Vec<Jet> = at
            .iter()
            .enumerate()
            .map(|(i, v)| Jet::variable(i, *v, n, 3).unwrap())
            .collect();
        let full = e.eval(&args).unwrap();
        for var in 0..n {
            let de = e.derivative(var).eval(&args).unwrap();
            let scale = full.grad()[var].abs().max(1.0);
            assert!((de.value() - full.grad()[var]).abs() < 1e-12 * scale, "{text} d/d{}", vars[var]);
            for j in 0..n {
                let want = full.hess(var, j);
                assert!((de.grad()[j] - want).abs() < 1e-11 * want.abs().max(1.0), "{text}");
                for k in 0..n {
                    let want = full.third(var, j, k);
                    assert!((de.hess(j, k) - want).abs() < 1e-10 * want.abs().max(1.0), "{text}");
                }
            }
        }
    }

    #[test]
    fn derivatives_agree_with_jets() {
        check("sin(v)*cos(2*w) + exp(v*w)", &["v", "w"], &[0.4, 1.3]);
        check("v^3 - 2*v/w + sqrt(v^2 + w^2)", &["v", "w"], &[0.7, 1.9]);
        check("atan2(w, v) + atan(v*w) + log(2+cos(v))", &["v", "w"], &[0.5, -0.8]);
        check("tan(w)^2 + abs(v - 3) + v^w", &["v", "w"], &[1.5, 0.6]);
        check("(1 + w^2)^(1/2) - (-w)", &["w"], &[0.9]);
    }
}

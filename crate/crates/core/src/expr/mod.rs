//! Expression mini-language for profile functions.
//!
//! Profiles (`sigma`, `tau`, `rho`, ...) and closed-form similarity profiles
//! are written as infix expressions over a declared variable set and named
//! parameters, e.g. `"z*exp(-a*z)"`. Parsed expressions are immutable trees
//! supporting numeric evaluation and symbolic differentiation.
//!
//! Grammar: `^` is power (right-associative) and binds tightest, then
//! `*` `/`, then unary `-` (which therefore negates a whole product:
//! `-a*z` parses as `-(a*z)`), then binary `+` `-`. Whitespace-insensitive;
//! no implicit multiplication. Rendering via [`Display`](std::fmt::Display)
//! round-trips: the printed form re-parses to an identical tree.

mod parse;

pub use parse::{parse, ParseError, ParseErrorKind};

use crate::real::Real;
use std::collections::BTreeMap;
use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

/// Built-in single-argument functions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Exp,
    Log,
    Sqrt,
    Sin,
    Cos,
    Tanh,
    Erf,
    Abs,
}

impl Func {
    pub fn name(self) -> &'static str {
        match self {
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sqrt => "sqrt",
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Tanh => "tanh",
            Func::Erf => "erf",
            Func::Abs => "abs",
        }
    }

    pub fn from_name(name: &str) -> Option<Func> {
        Some(match name {
            "exp" => Func::Exp,
            "log" => Func::Log,
            "sqrt" => Func::Sqrt,
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "tanh" => Func::Tanh,
            "erf" => Func::Erf,
            "abs" => Func::Abs,
            _ => return None,
        })
    }
}

/// Immutable expression tree over a scalar type `R`.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr<R> {
    Num(R),
    Var(String),
    Param(String),
    Neg(Box<Expr<R>>),
    Bin(BinOp, Box<Expr<R>>, Box<Expr<R>>),
    Call(Func, Box<Expr<R>>),
}

/// Name -> value map used for evaluation. Both variables and parameters
/// resolve here.
#[derive(Debug, Clone, PartialEq)]
pub struct Bindings<R>(BTreeMap<String, R>);

impl<R> Default for Bindings<R> {
    fn default() -> Self {
        Bindings(BTreeMap::new())
    }
}

impl<R: Real> Bindings<R> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, name: &str, value: R) -> Self {
        self.set(name, value);
        self
    }

    pub fn set(&mut self, name: &str, value: R) {
        self.0.insert(name.to_owned(), value);
    }

    pub fn get(&self, name: &str) -> Option<R> {
        self.0.get(name).copied()
    }

    pub fn contains(&self, name: &str) -> bool {
        self.0.contains_key(name)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, R)> {
        self.0.iter().map(|(k, v)| (k.as_str(), *v))
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.0.keys().map(String::as_str)
    }
}

impl<R: Real> FromIterator<(String, R)> for Bindings<R> {
    fn from_iter<T: IntoIterator<Item = (String, R)>>(iter: T) -> Self {
        Bindings(iter.into_iter().collect())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EvalError {
    MissingBinding(String),
}

impl fmt::Display for EvalError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EvalError::MissingBinding(name) => write!(f, "missing binding for `{name}`"),
        }
    }
}

impl std::error::Error for EvalError {}

impl<R: Real> Expr<R> {
    pub fn num(v: f64) -> Self {
        Expr::Num(R::of(v))
    }

    pub fn var(name: &str) -> Self {
        Expr::Var(name.to_owned())
    }

    pub fn param(name: &str) -> Self {
        Expr::Param(name.to_owned())
    }

    /// Evaluate with IEEE float semantics. Non-finite results propagate
    /// as-is; the only failure mode is a missing binding.
    pub fn eval(&self, bindings: &Bindings<R>) -> std::result::Result<R, EvalError> {
        Ok(match self {
            Expr::Num(v) => *v,
            Expr::Var(n) | Expr::Param(n) => bindings
                .get(n)
                .ok_or_else(|| EvalError::MissingBinding(n.clone()))?,
            Expr::Neg(e) => -e.eval(bindings)?,
            Expr::Bin(op, a, b) => {
                let a = a.eval(bindings)?;
                let b = b.eval(bindings)?;
                match op {
                    BinOp::Add => a + b,
                    BinOp::Sub => a - b,
                    BinOp::Mul => a * b,
                    BinOp::Div => a / b,
                    BinOp::Pow => a.powf(b),
                }
            }
            Expr::Call(func, e) => {
                let v = e.eval(bindings)?;
                match func {
                    Func::Exp => v.exp(),
                    Func::Log => v.ln(),
                    Func::Sqrt => v.sqrt(),
                    Func::Sin => v.sin(),
                    Func::Cos => v.cos(),
                    Func::Tanh => v.tanh(),
                    Func::Erf => v.erf(),
                    Func::Abs => v.abs(),
                }
            }
        })
    }

    /// Symbolic derivative with respect to `var`, with basic simplification
    /// (`0*x -> 0`, `1*x -> x`, `x+0 -> x`, literal folding). The contract is
    /// numeric agreement, not canonical form.
    pub fn differentiate(&self, var: &str) -> Expr<R> {
        self.d(var).simplified()
    }

    fn d(&self, var: &str) -> Expr<R> {
        use BinOp::*;
        match self {
            Expr::Num(_) | Expr::Param(_) => Expr::Num(R::zero()),
            Expr::Var(n) => {
                if n == var {
                    Expr::Num(R::one())
                } else {
                    Expr::Num(R::zero())
                }
            }
            Expr::Neg(e) => Expr::Neg(Box::new(e.d(var))),
            Expr::Bin(Add, a, b) => bin(Add, a.d(var), b.d(var)),
            Expr::Bin(Sub, a, b) => bin(Sub, a.d(var), b.d(var)),
            Expr::Bin(Mul, a, b) => bin(
                Add,
                bin(Mul, a.d(var), (**b).clone()),
                bin(Mul, (**a).clone(), b.d(var)),
            ),
            Expr::Bin(Div, a, b) => bin(
                Div,
                bin(
                    Sub,
                    bin(Mul, a.d(var), (**b).clone()),
                    bin(Mul, (**a).clone(), b.d(var)),
                ),
                bin(Mul, (**b).clone(), (**b).clone()),
            ),
            Expr::Bin(Pow, a, b) => {
                if let Expr::Num(c) = **b {
                    // constant exponent: c * a^(c-1) * a'
                    bin(
                        Mul,
                        bin(
                            Mul,
                            Expr::Num(c),
                            bin(Pow, (**a).clone(), Expr::Num(c - R::one())),
                        ),
                        a.d(var),
                    )
                } else {
                    // a^b * (b' * log(a) + b * a'/a)
                    bin(
                        Mul,
                        self.clone(),
                        bin(
                            Add,
                            bin(Mul, b.d(var), Expr::Call(Func::Log, a.clone())),
                            bin(Mul, (**b).clone(), bin(Div, a.d(var), (**a).clone())),
                        ),
                    )
                }
            }
            Expr::Call(func, e) => {
                let inner = e.d(var);
                let outer = match func {
                    Func::Exp => Expr::Call(Func::Exp, e.clone()),
                    Func::Log => return bin(Div, inner, (**e).clone()),
                    Func::Sqrt => {
                        return bin(
                            Div,
                            inner,
                            bin(
                                Mul,
                                Expr::Num(R::of(2.0)),
                                Expr::Call(Func::Sqrt, e.clone()),
                            ),
                        )
                    }
                    Func::Sin => Expr::Call(Func::Cos, e.clone()),
                    Func::Cos => Expr::Neg(Box::new(Expr::Call(Func::Sin, e.clone()))),
                    Func::Tanh => bin(
                        Sub,
                        Expr::Num(R::one()),
                        bin(
                            Pow,
                            Expr::Call(Func::Tanh, e.clone()),
                            Expr::Num(R::of(2.0)),
                        ),
                    ),
                    // 2/sqrt(pi) * exp(-u^2)
                    Func::Erf => bin(
                        Mul,
                        Expr::Num(R::of(2.0) / R::PI().sqrt()),
                        Expr::Call(
                            Func::Exp,
                            Box::new(Expr::Neg(Box::new(bin(
                                Pow,
                                (**e).clone(),
                                Expr::Num(R::of(2.0)),
                            )))),
                        ),
                    ),
                    // sign(u) as u/|u|; NaN at 0 is left to evaluation
                    Func::Abs => bin(Div, (**e).clone(), Expr::Call(Func::Abs, e.clone())),
                };
                bin(Mul, outer, inner)
            }
        }
    }

    /// Bottom-up structural simplification. Literal subtrees fold only when
    /// the folded value is finite.
    pub fn simplified(&self) -> Expr<R> {
        use BinOp::*;
        let e = match self {
            Expr::Num(_) | Expr::Var(_) | Expr::Param(_) => return self.clone(),
            Expr::Neg(e) => Expr::Neg(Box::new(e.simplified())),
            Expr::Bin(op, a, b) => bin(*op, a.simplified(), b.simplified()),
            Expr::Call(f, e) => Expr::Call(*f, Box::new(e.simplified())),
        };
        match e {
            Expr::Neg(ref inner) => match &**inner {
                Expr::Num(v) => Expr::Num(-*v),
                Expr::Neg(x) => (**x).clone(),
                _ => e,
            },
            Expr::Bin(op, ref a, ref b) => {
                let (a, b) = (&**a, &**b);
                if let (Expr::Num(x), Expr::Num(y)) = (a, b) {
                    let folded = match op {
                        Add => *x + *y,
                        Sub => *x - *y,
                        Mul => *x * *y,
                        Div => *x / *y,
                        Pow => x.powf(*y),
                    };
                    if folded.is_finite() {
                        return Expr::Num(folded);
                    }
                }
                match op {
                    Add => {
                        if is_zero(a) {
                            b.clone()
                        } else if is_zero(b) {
                            a.clone()
                        } else {
                            e
                        }
                    }
                    Sub => {
                        if is_zero(b) {
                            a.clone()
                        } else if is_zero(a) {
                            Expr::Neg(Box::new(b.clone())).simplified()
                        } else {
                            e
                        }
                    }
                    Mul => {
                        if is_zero(a) || is_zero(b) {
                            Expr::Num(R::zero())
                        } else if is_one(a) {
                            b.clone()
                        } else if is_one(b) {
                            a.clone()
                        } else {
                            e
                        }
                    }
                    Div => {
                        if is_one(b) {
                            a.clone()
                        } else if is_zero(a) {
                            Expr::Num(R::zero())
                        } else {
                            e
                        }
                    }
                    Pow => {
                        if is_one(b) {
                            a.clone()
                        } else if is_zero(b) {
                            Expr::Num(R::one())
                        } else {
                            e
                        }
                    }
                }
            }
            _ => e,
        }
    }

    /// Replace every occurrence of variable `name` with `replacement`.
    pub fn substitute_var(&self, name: &str, replacement: &Expr<R>) -> Expr<R> {
        match self {
            Expr::Var(n) if n == name => replacement.clone(),
            Expr::Num(_) | Expr::Var(_) | Expr::Param(_) => self.clone(),
            Expr::Neg(e) => Expr::Neg(Box::new(e.substitute_var(name, replacement))),
            Expr::Bin(op, a, b) => bin(
                *op,
                a.substitute_var(name, replacement),
                b.substitute_var(name, replacement),
            ),
            Expr::Call(f, e) => Expr::Call(*f, Box::new(e.substitute_var(name, replacement))),
        }
    }

    /// True if the tree references variable `name`.
    pub fn references_var(&self, name: &str) -> bool {
        match self {
            Expr::Var(n) => n == name,
            Expr::Num(_) | Expr::Param(_) => false,
            Expr::Neg(e) | Expr::Call(_, e) => e.references_var(name),
            Expr::Bin(_, a, b) => a.references_var(name) || b.references_var(name),
        }
    }

    // Rendering precedence. Negative literals act like a unary minus.
    fn prec(&self) -> u8 {
        match self {
            Expr::Num(v) if v.is_sign_negative() => 2,
            Expr::Num(_) | Expr::Var(_) | Expr::Param(_) | Expr::Call(..) => 6,
            Expr::Bin(BinOp::Pow, ..) => 5,
            Expr::Bin(BinOp::Mul, ..) | Expr::Bin(BinOp::Div, ..) => 3,
            Expr::Neg(_) => 2,
            Expr::Bin(BinOp::Add, ..) | Expr::Bin(BinOp::Sub, ..) => 1,
        }
    }

    fn write_wrapped(&self, f: &mut fmt::Formatter<'_>, parens: bool) -> fmt::Result {
        if parens {
            write!(f, "(")?;
            fmt::Display::fmt(self, f)?;
            write!(f, ")")
        } else {
            fmt::Display::fmt(self, f)
        }
    }
}

fn bin<R>(op: BinOp, a: Expr<R>, b: Expr<R>) -> Expr<R> {
    Expr::Bin(op, Box::new(a), Box::new(b))
}

fn is_zero<R: Real>(e: &Expr<R>) -> bool {
    matches!(e, Expr::Num(v) if *v == R::zero())
}

fn is_one<R: Real>(e: &Expr<R>) -> bool {
    matches!(e, Expr::Num(v) if *v == R::one())
}

impl<R: Real> fmt::Display for Expr<R> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Num(v) => write!(f, "{v}"),
            Expr::Var(n) | Expr::Param(n) => write!(f, "{n}"),
            Expr::Neg(e) => {
                write!(f, "-")?;
                e.write_wrapped(f, e.prec() < 2)
            }
            Expr::Bin(op, l, r) => {
                let p = match op {
                    BinOp::Add | BinOp::Sub => 1,
                    BinOp::Mul | BinOp::Div => 3,
                    BinOp::Pow => 5,
                };
                let (wrap_l, wrap_r) = if *op == BinOp::Pow {
                    (l.prec() <= p, r.prec() < p)
                } else {
                    (l.prec() < p, r.prec() <= p)
                };
                l.write_wrapped(f, wrap_l)?;
                let sym = match op {
                    BinOp::Add => "+",
                    BinOp::Sub => "-",
                    BinOp::Mul => "*",
                    BinOp::Div => "/",
                    BinOp::Pow => "^",
                };
                write!(f, "{sym}")?;
                r.write_wrapped(f, wrap_r)
            }
            Expr::Call(func, e) => {
                write!(f, "{}(", func.name())?;
                fmt::Display::fmt(e, f)?;
                write!(f, ")")
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn b1(names: &[(&str, f64)]) -> Bindings<f64> {
        names
            .iter()
            .map(|(n, v)| (n.to_string(), *v))
            .collect()
    }

    fn p(src: &str) -> Expr<f64> {
        parse(src, &["z", "y"], &["a", "b", "c", "lambda", "C"]).unwrap()
    }

    #[test]
    fn eval_exp_at_zero() {
        let e = parse::<f64>("exp(-0.5*c*z^2)", &["z"], &["c"]).unwrap();
        assert_eq!(e.eval(&b1(&[("c", 1.0), ("z", 0.0)])).unwrap(), 1.0);
    }

    #[test]
    fn eval_exponential_decay() {
        let e = p("z*exp(-a*z)");
        let v = e.eval(&b1(&[("a", 2.0), ("z", 1.0)])).unwrap();
        assert!((v - (-2.0f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn eval_rational_profile() {
        // value 1/3 at the left edge of the half line
        let e = p("1/(sqrt(lambda/2)*z + C)");
        let v = e
            .eval(&b1(&[("lambda", 2.0), ("C", 3.0), ("z", 0.0)]))
            .unwrap();
        assert_eq!(v, 1.0 / 3.0);
    }

    #[test]
    fn eval_missing_binding() {
        let e = p("z*a");
        let err = e.eval(&b1(&[("z", 1.0)])).unwrap_err();
        assert_eq!(err, EvalError::MissingBinding("a".into()));
    }

    #[test]
    fn eval_is_pure() {
        let e = p("sin(z)^2 + cos(z)*exp(a*z) - tanh(z/a)");
        let b = b1(&[("a", 0.7), ("z", 1.3)]);
        let v1 = e.eval(&b).unwrap();
        let v2 = e.eval(&b).unwrap();
        assert_eq!(v1.to_bits(), v2.to_bits());
    }

    #[test]
    fn derivative_of_constant_is_zero() {
        let e = p("c");
        assert_eq!(e.differentiate("z"), Expr::Num(0.0));
    }

    #[test]
    fn derivative_power_rule() {
        let e = p("z^2");
        let d = e.differentiate("z");
        let v = d.eval(&b1(&[("z", 3.0)])).unwrap();
        assert_eq!(v, 6.0);
    }

    #[test]
    fn derivative_product_exponential() {
        // d/dz (z e^{-az}) = (1-az) e^{-az}; at z=1, a=2 this is -e^{-2}
        let e = p("z*exp(-a*z)");
        let d = e.differentiate("z");
        let v = d.eval(&b1(&[("a", 2.0), ("z", 1.0)])).unwrap();
        let expected = -(-2.0f64).exp();
        assert!((v - expected).abs() < 1e-14, "{v} vs {expected}");
    }

    #[test]
    fn derivative_vs_central_difference_spot() {
        let cases = [
            ("exp(-0.5*c*z^2)", 1.3),
            ("sin(a*z)/ (1 + z^2)", 0.7),
            ("erf(z)*tanh(z)", 0.9),
            ("sqrt(z^2 + a)", 1.1),
            ("log(1 + z^2)", -0.4),
            ("abs(z)^3", -1.2),
        ];
        for (src, z) in cases {
            let e = p(src);
            let d = e.differentiate("z");
            let mut b = b1(&[("a", 2.0), ("c", 1.0)]);
            let h = 1e-6;
            b.set("z", z + h);
            let fp = e.eval(&b).unwrap();
            b.set("z", z - h);
            let fm = e.eval(&b).unwrap();
            let fd = (fp - fm) / (2.0 * h);
            b.set("z", z);
            let sym = d.eval(&b).unwrap();
            assert!(
                (sym - fd).abs() <= 1e-5 * (1.0 + sym.abs()),
                "{src}: sym {sym} vs fd {fd}"
            );
        }
    }

    #[test]
    fn derivative_treats_y_as_independent() {
        let e = p("(c + z)*y^2");
        let d = e.differentiate("z");
        let v = d.eval(&b1(&[("c", 1.0), ("z", 0.5), ("y", 3.0)])).unwrap();
        assert_eq!(v, 9.0);
    }

    #[test]
    fn substitute_and_reference() {
        let e = p("c*y + z");
        assert!(e.references_var("y"));
        let s = e.substitute_var("y", &Expr::num(0.0)).simplified();
        assert!(!s.references_var("y"));
        let v = s.eval(&b1(&[("c", 5.0), ("z", 2.0)])).unwrap();
        assert_eq!(v, 2.0);
    }

    #[test]
    fn render_round_trip_spot() {
        for src in [
            "z*exp(-a*z)",
            "2^3^2",
            "-z^2",
            "(z+a)*(z-a)",
            "1/(sqrt(lambda/2)*z + C)",
            "a-(b-c)",
            "a-b-c",
            "-(z+a)",
            "z^(a+b)",
        ] {
            let e = p(src);
            let rendered = e.to_string();
            let again = p(&rendered);
            assert_eq!(e, again, "round-trip failed for {src} -> {rendered}");
        }
    }

    #[test]
    fn simplify_basics() {
        let e = p("0*z + 1*y + (z + 0)");
        let s = e.simplified();
        assert_eq!(s, p("y + z"));
    }
}

//! Exact symbolic expressions in `x`, jet variables `p0, p1, ...` and opaque
//! function symbols such as `G`, `H'`, `w'''`.
//!
//! [`Expr`] is a plain expression tree. Arithmetic and calculus always return
//! the canonical form produced by [`Expr::normalize`]: a sum of monomials,
//! each a rational coefficient times a product of atoms raised to positive
//! integer powers, with exponentials merged (`exp(u) exp(v) = exp(u + v)`)
//! and `sin(u)^2` rewritten as `1 - cos(u)^2`. Two expressions are equal as
//! polynomials over the atom set modulo these identities iff their canonical
//! forms are structurally identical, so `==` on normalized values is
//! semantic equality.

mod calculus;
pub(crate) mod eval;
pub(crate) mod parse;
pub(crate) mod poly;

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use thiserror::Error;

pub use eval::{closures, DerivativeFn, FuncTable, Point};
pub use parse::ParseError;

use poly::{Atom, Monomial, Poly};

/// Exact arbitrary-precision rational.
pub type Rational = num_rational::BigRational;

pub(crate) fn rat(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExprError {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("expression mentions jet variable p{0}; use the jet module for jet differentiation")]
    JetVariable(usize),
    #[error("recursive binding: the binding for `{0}` mentions a bound function symbol")]
    RecursiveBinding(String),
    #[error("unbound variable `{0}`")]
    UnboundVariable(Var),
    #[error("no numeric value for `{0}`")]
    UnboundFunction(FuncSym),
    #[error("evaluation produced a non-finite value in `{0}`")]
    Domain(String),
}

/// Independent variable `x` or a jet coordinate `p_i`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Var {
    X,
    P(usize),
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Var::X => write!(f, "x"),
            Var::P(i) => write!(f, "p{i}"),
        }
    }
}

/// Opaque function of `x` together with a formal derivative order:
/// `FuncSym::new("G", 2)` is `G''`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FuncSym {
    pub name: String,
    pub order: usize,
}

impl FuncSym {
    pub fn new(name: impl Into<String>, order: usize) -> FuncSym {
        FuncSym {
            name: name.into(),
            order,
        }
    }

    pub fn derivative(&self) -> FuncSym {
        FuncSym::new(self.name.clone(), self.order + 1)
    }
}

impl fmt::Display for FuncSym {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.name)?;
        for _ in 0..self.order {
            write!(f, "'")?;
        }
        Ok(())
    }
}

/// The fixed set of elementary functions.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Elementary {
    Sin,
    Cos,
    Exp,
}

impl Elementary {
    pub fn name(self) -> &'static str {
        match self {
            Elementary::Sin => "sin",
            Elementary::Cos => "cos",
            Elementary::Exp => "exp",
        }
    }

    pub fn from_name(name: &str) -> Option<Elementary> {
        match name {
            "sin" => Some(Elementary::Sin),
            "cos" => Some(Elementary::Cos),
            "exp" => Some(Elementary::Exp),
            _ => None,
        }
    }

    pub fn eval(self, v: f64) -> f64 {
        match self {
            Elementary::Sin => v.sin(),
            Elementary::Cos => v.cos(),
            Elementary::Exp => v.exp(),
        }
    }

    /// d/dx f(u) given u and du/dx.
    pub(crate) fn chain_rule(self, arg: &Poly, darg: &Poly) -> Poly {
        if darg.is_zero() {
            return Poly::zero();
        }
        let outer = match self {
            Elementary::Sin => Poly::atom(Atom::Apply(Elementary::Cos, Box::new(arg.clone()))),
            Elementary::Cos => {
                Poly::atom(Atom::Apply(Elementary::Sin, Box::new(arg.clone()))).neg()
            }
            Elementary::Exp => Poly::atom(Atom::Apply(Elementary::Exp, Box::new(arg.clone()))),
        };
        outer.mul(darg)
    }
}

/// Symbolic expression tree.
///
/// Trees built by the parser keep the input shape; everything else in the
/// crate hands out canonical trees (see [`Expr::normalize`]).
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Expr {
    Const(Rational),
    Var(Var),
    Func(FuncSym),
    Apply(Elementary, Box<Expr>),
    Sum(Vec<Expr>),
    Product(Vec<Expr>),
    /// Non-negative integer power.
    Pow(Box<Expr>, u32),
}

impl Expr {
    pub fn zero() -> Expr {
        Expr::Const(Rational::zero())
    }

    pub fn one() -> Expr {
        Expr::Const(Rational::one())
    }

    pub fn int(n: i64) -> Expr {
        Expr::Const(Rational::from_integer(n.into()))
    }

    pub fn rational(num: i64, den: i64) -> Expr {
        Expr::Const(rat(num, den))
    }

    pub fn constant(c: Rational) -> Expr {
        Expr::Const(c)
    }

    pub fn x() -> Expr {
        Expr::Var(Var::X)
    }

    pub fn p(i: usize) -> Expr {
        Expr::Var(Var::P(i))
    }

    /// The `order`-th formal derivative of the function symbol `name`.
    pub fn func(name: &str, order: usize) -> Expr {
        Expr::Func(FuncSym::new(name, order))
    }

    pub fn apply(f: Elementary, arg: Expr) -> Expr {
        Poly::atom(Atom::Apply(f, Box::new(arg.to_poly()))).to_expr()
    }

    pub fn sin(arg: Expr) -> Expr {
        Expr::apply(Elementary::Sin, arg)
    }

    pub fn cos(arg: Expr) -> Expr {
        Expr::apply(Elementary::Cos, arg)
    }

    pub fn exp(arg: Expr) -> Expr {
        Expr::apply(Elementary::Exp, arg)
    }

    pub fn pow(&self, exp: u32) -> Expr {
        self.to_poly().pow(exp).to_expr()
    }

    /// Parses the expression grammar. The result keeps the input shape.
    pub fn parse(text: &str) -> Result<Expr, ExprError> {
        Ok(parse::parse_expr(text)?)
    }

    /// Canonical form; idempotent.
    pub fn normalize(&self) -> Expr {
        self.to_poly().to_expr()
    }

    /// Semantic equality as polynomials over the atom set.
    pub fn equals(&self, other: &Expr) -> bool {
        self.to_poly() == other.to_poly()
    }

    pub fn is_zero(&self) -> bool {
        self.to_poly().is_zero()
    }

    pub fn is_one(&self) -> bool {
        self.as_constant().is_some_and(|c| c.is_one())
    }

    /// The rational value if the expression has no atoms.
    pub fn as_constant(&self) -> Option<Rational> {
        self.to_poly().as_constant()
    }

    pub fn mentions_jet_variables(&self) -> bool {
        self.max_jet_index().is_some()
    }

    /// Largest `i` such that `p_i` occurs, including inside elementary functions.
    pub fn max_jet_index(&self) -> Option<usize> {
        let mut max = None;
        self.to_poly().for_each_atom(&mut |a| {
            if let Atom::P(i) = a {
                max = Some(max.map_or(*i, |m: usize| m.max(*i)));
            }
        });
        max
    }

    pub fn mentions_x(&self) -> bool {
        self.to_poly().any_atom(&|a| matches!(a, Atom::X))
    }

    /// All function symbols occurring in the expression, with their orders.
    pub fn func_syms(&self) -> Vec<FuncSym> {
        let mut out = std::collections::BTreeSet::new();
        self.to_poly().for_each_atom(&mut |a| {
            if let Atom::Func(f) = a {
                out.insert(f.clone());
            }
        });
        out.into_iter().collect()
    }

    pub fn mentions_func(&self, name: &str) -> bool {
        self.to_poly()
            .any_atom(&|a| matches!(a, Atom::Func(f) if f.name == name))
    }

    /// Replaces every `name^(m)` with `m >= order` by zero, i.e. imposes that the
    /// `order`-th derivative of `name` vanishes identically.
    pub fn kill_derivatives(&self, name: &str, order: usize) -> Expr {
        self.to_poly()
            .map_atoms(&|a| match a {
                Atom::Func(f) if f.name == name && f.order >= order => Some(Poly::zero()),
                _ => None,
            })
            .to_expr()
    }

    /// Number of monomials in canonical form.
    pub fn term_count(&self) -> usize {
        self.to_poly().len()
    }

    pub(crate) fn to_poly(&self) -> Poly {
        match self {
            Expr::Const(c) => Poly::constant(c.clone()),
            Expr::Var(v) => Poly::atom(Atom::from_var(*v)),
            Expr::Func(f) => Poly::atom(Atom::Func(f.clone())),
            Expr::Apply(f, arg) => Poly::atom(Atom::Apply(*f, Box::new(arg.to_poly()))),
            Expr::Sum(terms) => {
                let mut acc = Poly::zero();
                for t in terms {
                    acc.add_assign(&t.to_poly());
                }
                acc
            }
            Expr::Product(factors) => factors
                .iter()
                .fold(Poly::one(), |acc, f| acc.mul(&f.to_poly())),
            Expr::Pow(base, e) => base.to_poly().pow(*e),
        }
    }
}

fn atom_expr(a: &Atom) -> Expr {
    match a {
        Atom::X => Expr::Var(Var::X),
        Atom::P(i) => Expr::Var(Var::P(*i)),
        Atom::Func(f) => Expr::Func(f.clone()),
        Atom::Apply(f, arg) => Expr::Apply(*f, Box::new(arg.to_expr())),
    }
}

fn monomial_expr(c: &Rational, m: &Monomial) -> Expr {
    let mut factors: Vec<Expr> = m
        .factors()
        .iter()
        .rev()
        .map(|(a, e)| match e {
            1 => atom_expr(a),
            _ => Expr::Pow(Box::new(atom_expr(a)), *e),
        })
        .collect();
    if factors.is_empty() {
        return Expr::Const(c.clone());
    }
    if c.is_one() && factors.len() == 1 {
        return factors.pop().unwrap();
    }
    if !c.is_one() {
        factors.insert(0, Expr::Const(c.clone()));
    }
    Expr::Product(factors)
}

impl Poly {
    /// Canonical tree: monomials in descending order, factors ascending, coefficient first.
    pub(crate) fn to_expr(&self) -> Expr {
        let mut terms: Vec<Expr> = self.terms().rev().map(|(m, c)| monomial_expr(c, m)).collect();
        match terms.len() {
            0 => Expr::zero(),
            1 => terms.pop().unwrap(),
            _ => Expr::Sum(terms),
        }
    }
}

impl Add for &Expr {
    type Output = Expr;
    fn add(self, rhs: &Expr) -> Expr {
        self.to_poly().add(&rhs.to_poly()).to_expr()
    }
}

impl Sub for &Expr {
    type Output = Expr;
    fn sub(self, rhs: &Expr) -> Expr {
        self.to_poly().sub(&rhs.to_poly()).to_expr()
    }
}

impl Mul for &Expr {
    type Output = Expr;
    fn mul(self, rhs: &Expr) -> Expr {
        self.to_poly().mul(&rhs.to_poly()).to_expr()
    }
}

impl Neg for &Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        self.to_poly().neg().to_expr()
    }
}

/// Serialized as its printed form.
impl serde::Serialize for Expr {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> serde::Deserialize<'de> for Expr {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Expr, D::Error> {
        let text = String::deserialize(d)?;
        Expr::parse(&text).map(|e| e.normalize()).map_err(serde::de::Error::custom)
    }
}

macro_rules! forward_owned {
    ($tr:ident, $m:ident) => {
        impl $tr for Expr {
            type Output = Expr;
            fn $m(self, rhs: Expr) -> Expr {
                (&self).$m(&rhs)
            }
        }
        impl $tr<&Expr> for Expr {
            type Output = Expr;
            fn $m(self, rhs: &Expr) -> Expr {
                (&self).$m(rhs)
            }
        }
    };
}
forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);

impl Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        -&self
    }
}

impl Expr {
    pub fn scale(&self, k: &Rational) -> Expr {
        self.to_poly().scale(k).to_expr()
    }
}

impl std::str::FromStr for Expr {
    type Err = ExprError;
    fn from_str(s: &str) -> Result<Expr, ExprError> {
        Expr::parse(s)
    }
}

// ---- printing ----

fn write_rational(f: &mut fmt::Formatter<'_>, c: &Rational) -> fmt::Result {
    if c.is_integer() {
        write!(f, "{}", c.numer())
    } else {
        write!(f, "{}/{}", c.numer(), c.denom())
    }
}

fn write_atom(f: &mut fmt::Formatter<'_>, a: &Atom) -> fmt::Result {
    match a {
        Atom::X => write!(f, "x"),
        Atom::P(i) => write!(f, "p{i}"),
        Atom::Func(s) => write!(f, "{s}"),
        Atom::Apply(e, arg) => {
            write!(f, "{}(", e.name())?;
            write_poly(f, arg)?;
            write!(f, ")")
        }
    }
}

/// Writes `|c| * m` (sign handled by the caller).
fn write_monomial_abs(f: &mut fmt::Formatter<'_>, c: &Rational, m: &Monomial) -> fmt::Result {
    let c = c.abs();
    if m.is_one() {
        return write_rational(f, &c);
    }
    let mut first = true;
    if !c.is_one() {
        write_rational(f, &c)?;
        first = false;
    }
    for (a, e) in m.factors().iter().rev() {
        if !first {
            write!(f, "*")?;
        }
        first = false;
        write_atom(f, a)?;
        if *e > 1 {
            write!(f, "^{e}")?;
        }
    }
    Ok(())
}

pub(crate) fn write_poly(f: &mut fmt::Formatter<'_>, p: &Poly) -> fmt::Result {
    if p.is_zero() {
        return write!(f, "0");
    }
    for (i, (m, c)) in p.terms().rev().enumerate() {
        match (i, c.is_negative()) {
            (0, true) => write!(f, "-")?,
            (0, false) => {}
            (_, true) => write!(f, " - ")?,
            (_, false) => write!(f, " + ")?,
        }
        write_monomial_abs(f, c, m)?;
    }
    Ok(())
}

/// Prints the canonical form in the input grammar, so the output re-parses to
/// an equal expression.
impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_poly(f, &self.to_poly())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn e(s: &str) -> Expr {
        Expr::parse(s).unwrap()
    }

    #[test]
    fn normalize_collects_and_expands() {
        assert_eq!(e("x + x").normalize(), e("2*x").normalize());
        assert_eq!(e("(x+1)*(x-1)").normalize(), e("x^2 - 1").normalize());
        assert!(e("G*H - H*G").is_zero());
    }

    #[test]
    fn normalize_is_idempotent_on_samples() {
        for s in ["(x+G)^3 - sin(x)*G'", "p0*p1 + 1/2*x", "exp(2*x)^2*cos(x+1)"] {
            let n = e(s).normalize();
            assert_eq!(n.normalize(), n);
        }
    }

    #[test]
    fn equals_examples() {
        assert!(e("(x+1)^2").equals(&e("x^2+2*x+1")));
        assert!(e("G'*H").equals(&e("H*G'")));
        assert!(!e("2*H").equals(&e("4*H")));
    }

    #[test]
    fn canonical_tree_shape() {
        let n = e("3*x^2*G + 1").normalize();
        assert_eq!(
            n,
            Expr::Sum(vec![
                Expr::Product(vec![
                    Expr::int(3),
                    Expr::Pow(Box::new(Expr::x()), 2),
                    Expr::func("G", 0)
                ]),
                Expr::int(1),
            ])
        );
    }

    #[test]
    fn printing_is_deterministic_and_reparses() {
        let cases = [
            ("H - G'", "H - G'"),
            ("-1/2*A1'", "-1/2*A1'"),
            ("x^2 - x", "x^2 - x"),
            ("w''' + G*w'' + 4*H*w' + 2*H'*w", "w''' + G*w'' + 4*H*w' + 2*H'*w"),
            ("-(x)", "-x"),
            ("exp(2*x)^2", "exp(4*x)"),
            ("cos(x)^2", "cos(x)^2"),
            ("sin(2*x)^2", "-cos(2*x)^2 + 1"),
            ("0*x", "0"),
        ];
        for (input, printed) in cases {
            let shown = e(input).to_string();
            assert_eq!(shown, printed);
            assert!(e(&shown).equals(&e(input)));
        }
    }

    #[test]
    fn pythagorean_identity_is_structural() {
        assert!(e("sin(x+G)^2 + cos(x+G)^2 - 1").is_zero());
        assert_eq!(e("sin(x)^3").normalize(), e("sin(x) - sin(x)*cos(x)^2").normalize());
        assert!(!e("sin(x)^2 + cos(2*x)^2 - 1").is_zero());
        assert!(e("exp(x)*exp(-x) - 1").is_zero());
        assert!(e("exp(x)^2*exp(G) - exp(2*x + G)").is_zero());
        assert_eq!(e("exp(0)").normalize(), Expr::one());
    }

    #[test]
    fn kill_derivatives_zeroes_higher_orders() {
        let k = e("A0'' + G*A0' + A0").kill_derivatives("A0", 1);
        assert_eq!(k, e("A0").normalize());
    }

    #[test]
    fn jet_index_sees_inside_functions() {
        assert_eq!(e("x*sin(p2) + p0").max_jet_index(), Some(2));
        assert_eq!(e("G'").max_jet_index(), None);
    }
}

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use num_traits::ToPrimitive;

use super::poly::{Atom, Poly};
use super::{Expr, ExprError, FuncSym, Var};

/// Numeric realization of a function symbol: `(m, x) -> G^(m)(x)`, or `None`
/// when the `m`-th derivative is not available.
pub type DerivativeFn = dyn Fn(usize, f64) -> Option<f64> + Send + Sync;

/// Values for the variables `x`, `p_i`.
pub type Point = BTreeMap<Var, f64>;

/// Numeric closures for function symbols, looked up by name.
#[derive(Clone, Default)]
pub struct FuncTable {
    funcs: BTreeMap<String, Arc<DerivativeFn>>,
}

impl fmt::Debug for FuncTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.funcs.keys()).finish()
    }
}

impl FuncTable {
    pub fn new() -> FuncTable {
        FuncTable::default()
    }

    pub fn insert(
        &mut self,
        name: impl Into<String>,
        f: impl Fn(usize, f64) -> Option<f64> + Send + Sync + 'static,
    ) -> &mut FuncTable {
        self.funcs.insert(name.into(), Arc::new(f));
        self
    }

    pub fn with(
        mut self,
        name: impl Into<String>,
        f: impl Fn(usize, f64) -> Option<f64> + Send + Sync + 'static,
    ) -> FuncTable {
        self.insert(name, f);
        self
    }

    pub fn get(&self, name: &str) -> Option<&Arc<DerivativeFn>> {
        self.funcs.get(name)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.funcs.keys().map(String::as_str)
    }

    pub fn contains(&self, name: &str) -> bool {
        self.funcs.contains_key(name)
    }
}

/// Ready-made derivative towers for common closed forms.
pub mod closures {
    use std::f64::consts::FRAC_PI_2;

    use super::super::Expr;
    use super::{FuncTable, Point};
    use crate::symexpr::Var;

    /// `sin(a x)` and all its derivatives.
    pub fn sin_scaled(a: f64) -> impl Fn(usize, f64) -> Option<f64> + Send + Sync + 'static {
        move |m, x| Some(a.powi(m as i32) * (a * x + m as f64 * FRAC_PI_2).sin())
    }

    /// `cos(a x)` and all its derivatives.
    pub fn cos_scaled(a: f64) -> impl Fn(usize, f64) -> Option<f64> + Send + Sync + 'static {
        move |m, x| Some(a.powi(m as i32) * (a * x + m as f64 * FRAC_PI_2).cos())
    }

    /// `exp(a x)` and all its derivatives.
    pub fn exp_scaled(a: f64) -> impl Fn(usize, f64) -> Option<f64> + Send + Sync + 'static {
        move |m, x| Some(a.powi(m as i32) * (a * x).exp())
    }

    pub fn constant(c: f64) -> impl Fn(usize, f64) -> Option<f64> + Send + Sync + 'static {
        move |m, _| Some(if m == 0 { c } else { 0.0 })
    }

    /// Numeric tower of a closed-form expression in `x`, differentiated
    /// symbolically. Orders above `max_order` are reported as unavailable.
    pub fn from_expr(
        e: &Expr,
        max_order: usize,
        funcs: &FuncTable,
    ) -> Option<impl Fn(usize, f64) -> Option<f64> + Send + Sync + 'static> {
        let mut tower = Vec::with_capacity(max_order + 1);
        let mut cur = e.clone();
        for _ in 0..=max_order {
            let next = cur.diff().ok()?;
            tower.push(cur);
            cur = next;
        }
        let funcs = funcs.clone();
        Some(move |m: usize, x: f64| {
            let expr = tower.get(m)?;
            let mut point = Point::new();
            point.insert(Var::X, x);
            expr.eval_numeric(&point, &funcs).ok()
        })
    }
}

/// Evaluates a polynomial in `x` alone, skipping the `Expr` round trip.
pub(crate) fn eval_poly_at(p: &Poly, x: f64, funcs: &FuncTable) -> Result<f64, ExprError> {
    let mut point = Point::new();
    point.insert(Var::X, x);
    eval_poly(p, &point, funcs)
}

fn eval_poly(p: &Poly, point: &Point, funcs: &FuncTable) -> Result<f64, ExprError> {
    let mut total = 0.0;
    for (m, c) in p.terms() {
        let mut term = c.to_f64().unwrap_or(f64::NAN);
        for (a, e) in m.factors() {
            term *= eval_atom(a, point, funcs)?.powi(*e as i32);
        }
        total += term;
    }
    Ok(total)
}

fn eval_atom(a: &Atom, point: &Point, funcs: &FuncTable) -> Result<f64, ExprError> {
    let lookup = |v: Var| point.get(&v).copied().ok_or(ExprError::UnboundVariable(v));
    match a {
        Atom::X => lookup(Var::X),
        Atom::P(i) => lookup(Var::P(*i)),
        Atom::Func(f) => {
            let x = lookup(Var::X)?;
            let unbound = || ExprError::UnboundFunction(FuncSym::new(f.name.clone(), f.order));
            let closure = funcs.get(&f.name).ok_or_else(unbound)?;
            closure(f.order, x).ok_or_else(unbound)
        }
        Atom::Apply(e, arg) => {
            let v = e.eval(eval_poly(arg, point, funcs)?);
            if v.is_finite() {
                Ok(v)
            } else {
                Err(ExprError::Domain(format!("{}(...)", e.name())))
            }
        }
    }
}

impl Expr {
    /// Evaluates the canonical form in binary64.
    pub fn eval_numeric(&self, point: &Point, funcs: &FuncTable) -> Result<f64, ExprError> {
        let v = eval_poly(&self.to_poly(), point, funcs)?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(ExprError::Domain(self.to_string()))
        }
    }

    /// Shorthand for evaluating an expression in `x` alone.
    pub fn eval_at(&self, x: f64, funcs: &FuncTable) -> Result<f64, ExprError> {
        let mut point = Point::new();
        point.insert(Var::X, x);
        self.eval_numeric(&point, funcs)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn e(s: &str) -> Expr {
        Expr::parse(s).unwrap()
    }

    #[test]
    fn eval_examples() {
        let none = FuncTable::new();
        assert_eq!(e("x^2+1").eval_at(2.0, &none).unwrap(), 5.0);
        let funcs = FuncTable::new().with("G", closures::cos_scaled(1.0));
        assert_eq!(e("G").eval_at(0.0, &funcs).unwrap(), 1.0);
        let v = e("sin(x)").eval_at(std::f64::consts::FRAC_PI_2, &none).unwrap();
        assert!((v - 1.0).abs() <= 1e-15);
    }

    #[test]
    fn derivative_closures_are_consulted() {
        let funcs = FuncTable::new().with("G", closures::sin_scaled(2.0));
        let v = e("G''").eval_at(0.3, &funcs).unwrap();
        assert!((v + 4.0 * (0.6f64).sin()).abs() < 1e-14);
    }

    #[test]
    fn unbound_atoms_are_errors() {
        let none = FuncTable::new();
        assert_eq!(
            e("H").eval_at(0.0, &none),
            Err(ExprError::UnboundFunction(FuncSym::new("H", 0)))
        );
        assert_eq!(
            e("p0").eval_at(0.0, &none),
            Err(ExprError::UnboundVariable(Var::P(0)))
        );
        let partial = FuncTable::new().with("G", |m, _| (m == 0).then_some(1.0));
        assert!(e("G'").eval_at(0.0, &partial).is_err());
    }

    #[test]
    fn overflow_is_a_domain_error() {
        assert!(matches!(
            e("exp(x)").eval_at(1e6, &FuncTable::new()),
            Err(ExprError::Domain(_))
        ));
    }
}

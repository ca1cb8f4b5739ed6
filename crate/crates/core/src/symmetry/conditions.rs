//! Conditions on first-order `Δ = A0 + A1 D` to be an even or odd symmetry
//! of `L = D^2 + G D + H`, derived by coefficient matching, and the operators
//! built from them.

use std::fmt;

use num_traits::{One, Signed, Zero};

use crate::diffop::LinDiffOp;
use crate::symexpr::poly::{Atom, Monomial, Poly};
use crate::symexpr::{rat, Expr, FuncSym, Rational};

use super::SymmetryError;

/// Result of matching `L∘Δ + Δ^T∘L = 0` coefficient by coefficient.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EvenConditionReport {
    /// Names used for `A0`, `A1` and `w`; primed when `G` or `H` already use them.
    pub a0: String,
    pub a1: String,
    pub w: String,
    /// `A0` in terms of `A1`, from the `D^2` coefficient.
    pub relation: Expr,
    /// Conditions in `w = A1`, each required to vanish, highest `D` power first.
    pub constraints: Vec<Expr>,
    /// `L∘Δ + Δ^T∘L` before solving.
    pub expansion: LinDiffOp,
}

impl EvenConditionReport {
    /// `"A0 = -1/2*A1'"`.
    pub fn relation_string(&self) -> String {
        format!("{} = {}", self.a0, self.relation)
    }

    /// Operator `T` with `T(w)` equal to the `D^0` constraint.
    pub fn constraint_operator(&self) -> Result<LinDiffOp, SymmetryError> {
        match self.constraints.last() {
            Some(c) => constraint_operator(c, &self.w),
            None => Ok(LinDiffOp::zero()),
        }
    }
}

impl fmt::Display for EvenConditionReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{}", self.relation_string())?;
        for c in &self.constraints {
            writeln!(f, "{c} = 0")?;
        }
        Ok(())
    }
}

/// Result of matching `L∘Δ − Δ^T∘L = 0`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OddConditionReport {
    pub a0: String,
    pub a1: String,
    /// Reduced conditions, each required to vanish.
    pub constraints: Vec<Expr>,
    pub expansion: LinDiffOp,
}

impl fmt::Display for OddConditionReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.constraints {
            writeln!(f, "{c} = 0")?;
        }
        Ok(())
    }
}

fn fresh(base: &str, taken: &[&Expr]) -> String {
    let mut name = base.to_string();
    while taken.iter().any(|e| e.mentions_func(&name)) {
        name.push('_');
    }
    name
}

fn highest_order(p: &Poly, unknowns: &[&str]) -> Option<usize> {
    let mut best = None;
    p.for_each_atom(&mut |a| {
        if let Atom::Func(f) = a {
            if unknowns.contains(&f.name.as_str()) {
                best = best.max(Some(f.order));
            }
        }
    });
    best
}

/// Scales `e` so that the smallest monomial containing the highest derivative
/// of any unknown has coefficient 1 (or the leading monomial, if no unknown occurs).
fn orient(e: &Expr, unknowns: &[&str]) -> Expr {
    let p = e.to_poly();
    let pick = match highest_order(&p, unknowns) {
        Some(order) => {
            let holds = |m: &Monomial| {
                m.factors().iter().any(|(a, _)| {
                    matches!(a, Atom::Func(f) if f.order == order && unknowns.contains(&f.name.as_str()))
                })
            };
            p.terms().find(|(m, _)| holds(m)).map(|(_, c)| c.clone())
        }
        None => p.terms().next_back().map(|(_, c)| c.clone()),
    };
    match pick {
        Some(c) => p.scale(&(Rational::one() / c)).to_expr(),
        None => Expr::zero(),
    }
}

/// `Some((name, m))` when `e` is a rational multiple of a power of `name^(m)`.
fn single_unknown(e: &Expr, unknowns: &[&str]) -> Option<(String, usize)> {
    let p = e.to_poly();
    if p.len() != 1 {
        return None;
    }
    let (m, _) = p.terms().next()?;
    match m.factors() {
        [(Atom::Func(f), _)] if unknowns.contains(&f.name.as_str()) => {
            Some((f.name.clone(), f.order))
        }
        _ => None,
    }
}

/// Repeatedly uses constraints of the form `name^(m) = 0` to kill all higher
/// derivatives of `name` in the others. Returns pivots first, in discovery order.
fn reduce(constraints: Vec<Expr>, unknowns: &[&str]) -> Vec<Expr> {
    let mut pending: Vec<Expr> = constraints;
    let mut pivots = Vec::new();
    while let Some(idx) = pending
        .iter()
        .position(|c| single_unknown(c, unknowns).is_some())
    {
        let c = pending.remove(idx);
        let (name, order) = single_unknown(&c, unknowns).expect("checked above");
        pivots.push(orient(&c, unknowns));
        pending = pending
            .iter()
            .map(|e| e.kill_derivatives(&name, order))
            .filter(|e| !e.is_zero())
            .map(|e| orient(&e, unknowns))
            .collect();
    }
    pivots.extend(pending);
    let mut out: Vec<Expr> = Vec::new();
    for c in pivots {
        if !out.contains(&c) {
            out.push(c);
        }
    }
    out
}

fn trial(a0: &str, a1: &str) -> LinDiffOp {
    LinDiffOp::new(vec![Expr::func(a0, 0), Expr::func(a1, 0)]).expect("no jet variables")
}

/// Coefficient matching for `L∘Δ + Δ^T∘L = 0`. The `D^2` coefficient is
/// solved for `A0`; the remaining nonzero coefficients become the constraints.
pub fn derive_even_conditions(g: &Expr, h: &Expr) -> Result<EvenConditionReport, SymmetryError> {
    let a0 = fresh("A0", &[g, h]);
    let a1 = fresh("A1", &[g, h]);
    let w = fresh("w", &[g, h]);
    let l = LinDiffOp::second_order(g, h)?;
    let delta = trial(&a0, &a1);
    let e = l.compose(&delta).add(&delta.adjoint().compose(&l));

    let failure = |why: &str| SymmetryError::Derivation(why.to_string());
    let c2 = e.coeff(2).to_poly();
    let a0_atom = Atom::Func(FuncSym::new(a0.clone(), 0));
    let parts = c2.collect_by(&a0_atom);
    if parts.keys().any(|d| *d > 1) {
        return Err(failure("D^2 coefficient is not linear in A0"));
    }
    let lin = parts
        .get(&1)
        .and_then(|p| p.as_constant())
        .filter(|c| !c.is_zero())
        .ok_or_else(|| failure("D^2 coefficient does not determine A0"))?;
    let rest = parts.get(&0).cloned().unwrap_or_default();
    if rest.any_atom(&|a| matches!(a, Atom::Func(f) if f.name == a0)) {
        return Err(failure("D^2 coefficient involves derivatives of A0"));
    }
    let relation = rest.scale(&(-Rational::one() / lin)).to_expr();

    let mut constraints = Vec::new();
    // D^2 is solved above; D^3 cancels identically but is kept if it does not.
    for i in [3, 1, 0] {
        let c = e
            .coeff(i)
            .substitute_one(&a0, &relation)?
            .rename_func(&a1, &w);
        if !c.is_zero() {
            constraints.push(orient(&c, &[&w]));
        }
    }
    Ok(EvenConditionReport {
        a0,
        a1,
        w,
        relation,
        constraints,
        expansion: e,
    })
}

/// Coefficient matching for `L∘Δ − Δ^T∘L = 0`, reduced to pivot form.
pub fn derive_odd_conditions(g: &Expr, h: &Expr) -> Result<OddConditionReport, SymmetryError> {
    let a0 = fresh("A0", &[g, h]);
    let a1 = fresh("A1", &[g, h]);
    let l = LinDiffOp::second_order(g, h)?;
    let delta = trial(&a0, &a1);
    let e = l.compose(&delta).sub(&delta.adjoint().compose(&l));
    let unknowns = [a0.as_str(), a1.as_str()];
    let raw: Vec<Expr> = (0..e.coeffs().len())
        .rev()
        .map(|i| e.coeff(i))
        .filter(|c| !c.is_zero())
        .map(|c| orient(&c, &unknowns))
        .collect();
    let constraints = reduce(raw, &unknowns);
    Ok(OddConditionReport {
        a0,
        a1,
        constraints,
        expansion: e,
    })
}

/// Reads a constraint linear and homogeneous in `unknown` and its derivatives
/// as an operator applied to `unknown`.
pub fn constraint_operator(c: &Expr, unknown: &str) -> Result<LinDiffOp, SymmetryError> {
    let bad = || SymmetryError::Derivation(format!("`{c}` is not linear in {unknown}"));
    let mut coeffs: Vec<Poly> = Vec::new();
    for (m, k) in c.to_poly().terms() {
        let mut order = None;
        for (a, e) in m.factors() {
            match a {
                Atom::Func(f) if f.name == unknown => {
                    if *e != 1 || order.is_some() {
                        return Err(bad());
                    }
                    order = Some(f.order);
                }
                Atom::Apply(_, arg)
                    if arg.any_atom(&|a| matches!(a, Atom::Func(f) if f.name == unknown)) =>
                {
                    return Err(bad())
                }
                _ => {}
            }
        }
        let i = order.ok_or_else(bad)?;
        if coeffs.len() <= i {
            coeffs.resize(i + 1, Poly::zero());
        }
        let rest = m.without(|a| matches!(a, Atom::Func(f) if f.name == unknown));
        coeffs[i].add_term(rest, k.clone());
    }
    Ok(LinDiffOp::from_polys(coeffs))
}

fn third_order(c1: Expr, c0: Expr) -> Result<LinDiffOp, SymmetryError> {
    Ok(LinDiffOp::new(vec![c0, c1, Expr::zero(), Expr::one()])?)
}

/// `D^3 + (2H − G^2 − 2G') D + (H' − G G' − G'')`, as printed in the source.
pub fn ltilde_paper(g: &Expr, h: &Expr) -> Result<LinDiffOp, SymmetryError> {
    let g1 = g.diff()?;
    let c1 = &(&Expr::int(2) * h - &g.pow(2)) - &(&Expr::int(2) * &g1);
    let c0 = &(&h.diff()? - &(g * &g1)) - &g1.diff()?;
    third_order(c1, c0)
}

/// `D^3 + 4H D + 2H'`, the `D^0` constraint of [`derive_even_conditions`] at `G = 0`.
pub fn ltilde_schrodinger(h: &Expr) -> Result<LinDiffOp, SymmetryError> {
    third_order(&Expr::int(4) * h, &Expr::int(2) * &h.diff()?)
}

/// `I = H − G^2/4 − G'/2`: `y = μ z` with `μ = exp(−½∫G)` turns
/// `y'' + G y' + H y = 0` into `z'' + I z = 0`.
pub fn normal_form_potential(g: &Expr, h: &Expr) -> Result<Expr, SymmetryError> {
    Ok(&(h - &g.pow(2).scale(&rat(1, 4))) - &g.diff()?.scale(&rat(1, 2)))
}

/// [`ltilde_schrodinger`] of the normal-form potential; its kernel parametrises
/// the even symmetries built by [`even_symmetry_from_w`].
pub fn ltilde_gauge(g: &Expr, h: &Expr) -> Result<LinDiffOp, SymmetryError> {
    ltilde_schrodinger(&normal_form_potential(g, h)?)
}

/// `w D + (½ G w − ½ w')`, the conjugate of `w D − ½ w'` by the gauge factor.
pub fn even_symmetry_from_w(w: &Expr, g: &Expr) -> Result<LinDiffOp, SymmetryError> {
    let half = rat(1, 2);
    let c0 = &(g * w).scale(&half) - &w.diff()?.scale(&half);
    Ok(LinDiffOp::new(vec![c0, w.clone()])?)
}

/// Kernel of `D^3 + 4H D` for a rational constant `H`: `{1, x, x^2}` at zero,
/// `{1, sin(r x), cos(r x)}` for `H > 0` and `{1, exp(r x), exp(−r x)}` for
/// `H < 0`, where `r = 2 sqrt(|H|)` must be rational.
pub fn constant_potential_kernel(h: &Rational) -> Result<Vec<Expr>, SymmetryError> {
    let x = Expr::x();
    if h.is_zero() {
        return Ok(vec![Expr::one(), x.clone(), x.pow(2)]);
    }
    let four = Rational::from_integer(4.into());
    let r = super::algebra::rational_sqrt(&(h.abs() * four)).ok_or_else(|| {
        SymmetryError::NoClosedForm(format!("2*sqrt(|{h}|) is not rational"))
    })?;
    let arg = &Expr::constant(r) * &x;
    Ok(if h.is_positive() {
        vec![Expr::one(), Expr::sin(arg.clone()), Expr::cos(arg)]
    } else {
        vec![Expr::one(), Expr::exp(arg.clone()), Expr::exp(-arg)]
    })
}

/// `ltilde_gauge(G, H)(w)`; zero iff `w` yields a symmetry.
pub fn even_symmetry_residual(w: &Expr, g: &Expr, h: &Expr) -> Result<Expr, SymmetryError> {
    Ok(ltilde_gauge(g, h)?.apply(w)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symmetry::symmetry_quotient;

    fn ex(s: &str) -> Expr {
        Expr::parse(s).unwrap()
    }

    fn op(s: &str) -> LinDiffOp {
        LinDiffOp::parse(s).unwrap()
    }

    #[test]
    fn even_relation_and_constraints() {
        let r = derive_even_conditions(&ex("G"), &ex("H")).unwrap();
        assert_eq!(r.relation_string(), "A0 = -1/2*A1'");
        let shown: Vec<String> = r.constraints.iter().map(|c| c.to_string()).collect();
        assert_eq!(shown, ["G*w' + G'*w", "w''' + G*w'' + 4*H*w' + 2*H'*w"]);
    }

    #[test]
    fn even_schrodinger_has_single_constraint() {
        let r = derive_even_conditions(&Expr::zero(), &ex("H")).unwrap();
        assert_eq!(r.constraints, vec![ex("w''' + 4*H*w' + 2*H'*w")]);
        assert_eq!(r.constraint_operator().unwrap(), op("D^3 + 4*H*D + 2*H'"));
        assert_eq!(r.constraint_operator().unwrap(), ltilde_schrodinger(&ex("H")).unwrap());
    }

    #[test]
    fn even_fresh_names_avoid_clashes() {
        let r = derive_even_conditions(&Expr::zero(), &ex("w + A0")).unwrap();
        assert_eq!(r.a0, "A0_");
        assert_eq!(r.w, "w_");
        assert!(r.constraints[0].mentions_func("w_"));
    }

    #[test]
    fn odd_conditions_reduce_to_constants() {
        let r = derive_odd_conditions(&ex("G"), &ex("H")).unwrap();
        assert_eq!(r.constraints, vec![ex("A1"), ex("A0'")]);
        let r0 = derive_odd_conditions(&Expr::zero(), &Expr::zero()).unwrap();
        assert_eq!(r0.constraints, vec![ex("A1"), ex("A0'")]);
    }

    #[test]
    fn ltilde_variants() {
        assert_eq!(
            ltilde_paper(&ex("G"), &ex("H")).unwrap(),
            op("D^3 + (2*H - G^2 - 2*G')*D + (H' - G*G' - G'')")
        );
        assert_eq!(ltilde_paper(&Expr::zero(), &ex("H")).unwrap(), op("D^3 + 2*H*D + H'"));
        let diff = ltilde_schrodinger(&ex("H"))
            .unwrap()
            .sub(&ltilde_paper(&Expr::zero(), &ex("H")).unwrap());
        assert_eq!(diff, op("2*H*D + H'"));
        assert_eq!(ltilde_schrodinger(&Expr::one()).unwrap(), op("D^3 + 4*D"));
    }

    #[test]
    fn potential_and_symmetry_from_w() {
        assert_eq!(normal_form_potential(&Expr::one(), &Expr::one()).unwrap(), ex("3/4"));
        assert_eq!(normal_form_potential(&Expr::zero(), &ex("H")).unwrap(), ex("H"));
        assert_eq!(even_symmetry_from_w(&ex("x^2"), &Expr::zero()).unwrap(), op("x^2*D - x"));
        assert_eq!(even_symmetry_from_w(&Expr::one(), &Expr::zero()).unwrap(), op("D"));
        let d = even_symmetry_from_w(&ex("cos(2*x)"), &Expr::zero()).unwrap();
        assert_eq!(d, op("cos(2*x)*D + sin(2*x)"));
    }

    #[test]
    fn kernel_elements_give_symmetries_at_zero_potential() {
        let l = op("D^2");
        for w in ["1", "x", "x^2"] {
            let w = ex(w);
            assert!(even_symmetry_residual(&w, &Expr::zero(), &Expr::zero()).unwrap().is_zero());
            let d = even_symmetry_from_w(&w, &Expr::zero()).unwrap();
            assert!(symmetry_quotient(&l, &d).unwrap().is_some());
        }
    }

    #[test]
    fn constant_potential_kernels() {
        for (h, expect) in [
            (rat(0, 1), vec!["1", "x", "x^2"]),
            (rat(1, 1), vec!["1", "sin(2*x)", "cos(2*x)"]),
            (rat(-1, 4), vec!["1", "exp(x)", "exp(-x)"]),
        ] {
            let k = constant_potential_kernel(&h).unwrap();
            let shown: Vec<String> = k.iter().map(|e| e.to_string()).collect();
            assert_eq!(shown, expect);
            let op = ltilde_schrodinger(&Expr::constant(h)).unwrap();
            assert!(k.iter().all(|w| op.apply(w).unwrap().is_zero()));
        }
        assert!(matches!(
            constant_potential_kernel(&rat(1, 2)),
            Err(SymmetryError::NoClosedForm(_))
        ));
    }

    #[test]
    fn constraint_operator_rejects_nonlinear() {
        assert!(constraint_operator(&ex("w*w'"), "w").is_err());
        assert!(constraint_operator(&ex("w + 1"), "w").is_err());
        assert_eq!(constraint_operator(&ex("x*w' - w"), "w").unwrap(), op("x*D - 1"));
    }
}

//! Canonical sparse polynomial over the atom set.
//!
//! This is the arithmetic workhorse behind [`Expr`](super::Expr): every public
//! operation converts to a [`Poly`], computes, and converts back. A `Poly` is
//! canonical by construction (no zero coefficients, monomials merged), so two
//! polynomials are equal as ring elements iff they are structurally equal.

use std::cmp::Ordering;
use std::collections::BTreeMap;

use num_traits::{One, Zero};

use super::{Elementary, FuncSym, Rational, Var};

/// An indivisible factor of a monomial.
///
/// Variant order is the atom order: `x < p0 < p1 < ... < FuncSym < Apply`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub(crate) enum Atom {
    X,
    P(usize),
    Func(FuncSym),
    Apply(Elementary, Box<Poly>),
}

impl Atom {
    pub(crate) fn from_var(v: Var) -> Atom {
        match v {
            Var::X => Atom::X,
            Var::P(i) => Atom::P(i),
        }
    }
}

/// Product of atoms with positive exponents, sorted by atom in descending order.
///
/// Sorting descending makes the derived `Ord` compare the greatest atom first,
/// which is the order the printer lists monomials in.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub(crate) struct Monomial(Vec<(Atom, u32)>);

impl Monomial {
    pub(crate) fn one() -> Monomial {
        Monomial(Vec::new())
    }

    pub(crate) fn atom(a: Atom, exp: u32) -> Monomial {
        if exp == 0 {
            Monomial::one()
        } else {
            Monomial(vec![(a, exp)])
        }
    }

    pub(crate) fn is_one(&self) -> bool {
        self.0.is_empty()
    }

    /// Factors in descending atom order.
    pub(crate) fn factors(&self) -> &[(Atom, u32)] {
        &self.0
    }

    pub(crate) fn degree_in(&self, atom: &Atom) -> u32 {
        self.0
            .iter()
            .find(|(a, _)| a == atom)
            .map_or(0, |(_, e)| *e)
    }

    pub(crate) fn mul(&self, other: &Monomial) -> Monomial {
        let (a, b) = (&self.0, &other.0);
        let mut out = Vec::with_capacity(a.len() + b.len());
        let (mut i, mut j) = (0, 0);
        while i < a.len() && j < b.len() {
            match a[i].0.cmp(&b[j].0) {
                Ordering::Greater => {
                    out.push(a[i].clone());
                    i += 1;
                }
                Ordering::Less => {
                    out.push(b[j].clone());
                    j += 1;
                }
                Ordering::Equal => {
                    out.push((a[i].0.clone(), a[i].1 + b[j].1));
                    i += 1;
                    j += 1;
                }
            }
        }
        out.extend_from_slice(&a[i..]);
        out.extend_from_slice(&b[j..]);
        Monomial(out)
    }

    /// The monomial with the factor at `idx` lowered by one power.
    fn lowered(&self, idx: usize) -> Monomial {
        let mut v = self.0.clone();
        if v[idx].1 == 1 {
            v.remove(idx);
        } else {
            v[idx].1 -= 1;
        }
        Monomial(v)
    }

    /// The monomial with all `exp` factors combined, when that changes anything.
    fn merge_exp(&self) -> Option<Monomial> {
        let is_exp = |a: &Atom| matches!(a, Atom::Apply(Elementary::Exp, _));
        let mut exps = self.0.iter().filter(|(a, _)| is_exp(a));
        match (exps.next(), exps.next()) {
            (None, _) => return None,
            (Some((Atom::Apply(_, arg), 1)), None) if !arg.is_zero() => return None,
            _ => {}
        }
        let mut sum = Poly::zero();
        for (a, e) in self.0.iter().filter(|(a, _)| is_exp(a)) {
            if let Atom::Apply(_, arg) = a {
                sum.add_assign(&arg.scale(&Rational::from_integer((*e).into())));
            }
        }
        let rest = self.without(is_exp);
        if sum.is_zero() {
            Some(rest)
        } else {
            Some(rest.mul(&Monomial::atom(Atom::Apply(Elementary::Exp, Box::new(sum)), 1)))
        }
    }

    /// For `m = sin(u)^e * rest'` with `e >= 2`: `(sin(u)^(e-2) * rest', cos(u))`.
    fn split_sin_square(&self) -> Option<(Monomial, Atom)> {
        let idx = self
            .0
            .iter()
            .position(|(a, e)| *e >= 2 && matches!(a, Atom::Apply(Elementary::Sin, _)))?;
        let Atom::Apply(_, arg) = &self.0[idx].0 else {
            unreachable!()
        };
        let cos = Atom::Apply(Elementary::Cos, arg.clone());
        let mut v = self.0.clone();
        if v[idx].1 == 2 {
            v.remove(idx);
        } else {
            v[idx].1 -= 2;
        }
        Some((Monomial(v), cos))
    }

    /// The monomial with every factor matching `pred` removed.
    pub(crate) fn without(&self, pred: impl Fn(&Atom) -> bool) -> Monomial {
        Monomial(self.0.iter().filter(|(a, _)| !pred(a)).cloned().collect())
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub(crate) struct Poly {
    terms: BTreeMap<Monomial, Rational>,
}

impl Poly {
    pub(crate) fn zero() -> Poly {
        Poly::default()
    }

    pub(crate) fn one() -> Poly {
        Poly::constant(Rational::one())
    }

    pub(crate) fn constant(c: Rational) -> Poly {
        Poly::term(c, Monomial::one())
    }

    pub(crate) fn term(c: Rational, m: Monomial) -> Poly {
        let mut p = Poly::zero();
        p.add_term(m, c);
        p
    }

    pub(crate) fn atom(a: Atom) -> Poly {
        Poly::term(Rational::one(), Monomial::atom(a, 1))
    }

    pub(crate) fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub(crate) fn as_constant(&self) -> Option<Rational> {
        match self.terms.len() {
            0 => Some(Rational::zero()),
            1 => {
                let (m, c) = self.terms.iter().next()?;
                m.is_one().then(|| c.clone())
            }
            _ => None,
        }
    }

    pub(crate) fn terms(&self) -> impl DoubleEndedIterator<Item = (&Monomial, &Rational)> {
        self.terms.iter()
    }

    pub(crate) fn len(&self) -> usize {
        self.terms.len()
    }

    /// Inserts `c m`, merging exponentials into a single `exp(Σ e_i u_i)` and
    /// rewriting `sin(u)^2` as `1 - cos(u)^2`, so that `exp(u) exp(v) = exp(u+v)`
    /// and the Pythagorean identity hold structurally.
    pub(crate) fn add_term(&mut self, m: Monomial, c: Rational) {
        if c.is_zero() {
            return;
        }
        if let Some(merged) = m.merge_exp() {
            self.add_term(merged, c);
            return;
        }
        if let Some((rest, cos)) = m.split_sin_square() {
            self.add_term(rest.mul(&Monomial::atom(cos, 2)), -c.clone());
            self.add_term(rest, c);
            return;
        }
        match self.terms.entry(m) {
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut o) => {
                *o.get_mut() += c;
                if o.get().is_zero() {
                    o.remove();
                }
            }
        }
    }

    pub(crate) fn add_assign(&mut self, other: &Poly) {
        for (m, c) in &other.terms {
            self.add_term(m.clone(), c.clone());
        }
    }

    pub(crate) fn add(&self, other: &Poly) -> Poly {
        let mut out = self.clone();
        out.add_assign(other);
        out
    }

    pub(crate) fn sub(&self, other: &Poly) -> Poly {
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(m.clone(), -c.clone());
        }
        out
    }

    pub(crate) fn neg(&self) -> Poly {
        Poly {
            terms: self.terms.iter().map(|(m, c)| (m.clone(), -c.clone())).collect(),
        }
    }

    pub(crate) fn scale(&self, k: &Rational) -> Poly {
        if k.is_zero() {
            return Poly::zero();
        }
        Poly {
            terms: self.terms.iter().map(|(m, c)| (m.clone(), c * k)).collect(),
        }
    }

    pub(crate) fn mul(&self, other: &Poly) -> Poly {
        let mut out = Poly::zero();
        for (ma, ca) in &self.terms {
            for (mb, cb) in &other.terms {
                out.add_term(ma.mul(mb), ca * cb);
            }
        }
        out
    }

    pub(crate) fn mul_term(&self, k: &Rational, m: &Monomial) -> Poly {
        let mut out = Poly::zero();
        for (ma, ca) in &self.terms {
            out.add_term(ma.mul(m), ca * k);
        }
        out
    }

    pub(crate) fn pow(&self, mut exp: u32) -> Poly {
        let mut base = self.clone();
        let mut acc = Poly::one();
        while exp > 0 {
            if exp & 1 == 1 {
                acc = acc.mul(&base);
            }
            exp >>= 1;
            if exp > 0 {
                base = base.mul(&base);
            }
        }
        acc
    }

    /// True if any atom, including atoms nested inside `Apply` arguments, matches.
    pub(crate) fn any_atom(&self, pred: &dyn Fn(&Atom) -> bool) -> bool {
        self.terms.keys().any(|m| {
            m.0.iter().any(|(a, _)| {
                pred(a)
                    || match a {
                        Atom::Apply(_, arg) => arg.any_atom(pred),
                        _ => false,
                    }
            })
        })
    }

    /// Visits every atom, recursing into `Apply` arguments.
    pub(crate) fn for_each_atom(&self, f: &mut dyn FnMut(&Atom)) {
        for m in self.terms.keys() {
            for (a, _) in &m.0 {
                f(a);
                if let Atom::Apply(_, arg) = a {
                    arg.for_each_atom(f);
                }
            }
        }
    }

    /// Applies the derivation determined by its values on the primitive atoms
    /// (`x`, `p_i`, function symbols). `Apply` atoms are handled by the chain rule.
    pub(crate) fn derive(&self, leaf: &dyn Fn(&Atom) -> Poly) -> Poly {
        let mut out = Poly::zero();
        for (m, c) in &self.terms {
            for (idx, (a, e)) in m.0.iter().enumerate() {
                let da = match a {
                    Atom::Apply(f, arg) => f.chain_rule(arg, &arg.derive(leaf)),
                    _ => leaf(a),
                };
                if da.is_zero() {
                    continue;
                }
                let k = c * Rational::from_integer((*e).into());
                out.add_assign(&da.mul_term(&k, &m.lowered(idx)));
            }
        }
        out
    }

    /// d/dx with function symbols bumped one derivative order; jet variables are
    /// treated as independent of x.
    pub(crate) fn diff_x(&self) -> Poly {
        self.derive(&|a| match a {
            Atom::X => Poly::one(),
            Atom::Func(f) => Poly::atom(Atom::Func(f.derivative())),
            _ => Poly::zero(),
        })
    }

    /// Replaces atoms through `repl`; atoms for which it returns `None` are kept.
    /// `Apply` arguments are rewritten first, then the rebuilt atom is offered to `repl`.
    pub(crate) fn map_atoms(&self, repl: &dyn Fn(&Atom) -> Option<Poly>) -> Poly {
        let mut out = Poly::zero();
        for (m, c) in &self.terms {
            let mut acc = Poly::constant(c.clone());
            for (a, e) in &m.0 {
                let a = match a {
                    Atom::Apply(f, arg) => Atom::Apply(*f, Box::new(arg.map_atoms(repl))),
                    other => other.clone(),
                };
                let factor = match repl(&a) {
                    Some(p) => p.pow(*e),
                    None => Poly::term(Rational::one(), Monomial::atom(a, *e)),
                };
                acc = acc.mul(&factor);
                if acc.is_zero() {
                    break;
                }
            }
            out.add_assign(&acc);
        }
        out
    }

    /// Splits the polynomial by powers of `atom`: entry `d` holds the cofactor of `atom^d`.
    pub(crate) fn collect_by(&self, atom: &Atom) -> BTreeMap<u32, Poly> {
        let mut out: BTreeMap<u32, Poly> = BTreeMap::new();
        for (m, c) in &self.terms {
            let d = m.degree_in(atom);
            let rest = m.without(|a| a == atom);
            out.entry(d).or_default().add_term(rest, c.clone());
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn x() -> Poly {
        Poly::atom(Atom::X)
    }

    fn g(order: usize) -> Poly {
        Poly::atom(Atom::Func(FuncSym::new("G", order)))
    }

    #[test]
    fn like_terms_cancel() {
        let p = x().add(&x()).sub(&x().scale(&Rational::from_integer(2.into())));
        assert!(p.is_zero());
    }

    #[test]
    fn monomial_order_puts_greatest_atom_first() {
        let hi = Monomial::atom(Atom::Func(FuncSym::new("H", 0)), 1);
        let gp = Monomial::atom(Atom::Func(FuncSym::new("G", 1)), 1);
        let g2 = Monomial::atom(Atom::Func(FuncSym::new("G", 0)), 2);
        assert!(hi > gp && gp > g2 && g2 > Monomial::one());
        assert!(Monomial::atom(Atom::X, 2) > Monomial::atom(Atom::X, 1));
    }

    #[test]
    fn product_rule_on_symbols() {
        // d/dx (G x) = G' x + G
        let p = g(0).mul(&x()).diff_x();
        assert_eq!(p, g(1).mul(&x()).add(&g(0)));
    }

    #[test]
    fn pow_matches_repeated_mul() {
        let base = x().add(&g(0));
        assert_eq!(base.pow(3), base.mul(&base).mul(&base));
        assert_eq!(base.pow(0), Poly::one());
    }
}

//! Univariate linear differential operators `a_0 + a_1 D + ... + a_n D^n` with
//! [`Expr`] coefficients, where `D = d/dx`.
//!
//! Composition follows the Leibniz rule `D∘a = a D + a'`, so the ring is
//! noncommutative. Coefficients are kept in canonical form with trailing
//! zeros trimmed, which makes `==` exact operator equality.

mod parse;

use std::fmt;

use num_bigint::BigInt;
use num_traits::{One, Signed};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::symexpr::poly::Poly;
use crate::symexpr::{Expr, ExprError, ParseError, Rational};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DiffOpError {
    #[error("operator coefficient mentions jet variable p{0}")]
    JetVariable(usize),
    #[error("divisor must be monic (leading coefficient exactly 1), found leading coefficient `{0}`")]
    NonMonicDivisor(String),
    #[error("divisor must have order at least 1")]
    DivisorOrderZero,
    #[error("`D` may not appear inside an elementary function argument")]
    OperatorInFunction,
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Expr(#[from] ExprError),
}

/// A linear differential operator. Index `i` of the coefficient vector holds
/// the coefficient of `D^i`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Default)]
pub struct LinDiffOp {
    /// Canonical coefficients; the `Expr` forms are derived from them.
    polys: Vec<Poly>,
    coeffs: Vec<Expr>,
}

/// `A = quotient ∘ L + remainder` with `order(remainder) < order(L)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DivisionResult {
    pub quotient: LinDiffOp,
    pub remainder: LinDiffOp,
}

fn binomial(n: usize, k: usize) -> Rational {
    let mut acc = BigInt::one();
    for j in 0..k {
        acc = acc * BigInt::from(n - j) / BigInt::from(j + 1);
    }
    Rational::from_integer(acc)
}

impl LinDiffOp {
    /// Builds an operator from coefficients `[a_0, a_1, ...]`; coefficients must be
    /// free of jet variables.
    pub fn new(coeffs: Vec<Expr>) -> Result<LinDiffOp, DiffOpError> {
        for c in &coeffs {
            if let Some(i) = c.max_jet_index() {
                return Err(DiffOpError::JetVariable(i));
            }
        }
        Ok(LinDiffOp::from_polys(coeffs.iter().map(Expr::to_poly).collect()))
    }

    pub(crate) fn from_polys(mut polys: Vec<Poly>) -> LinDiffOp {
        while polys.last().is_some_and(Poly::is_zero) {
            polys.pop();
        }
        LinDiffOp {
            coeffs: polys.iter().map(Poly::to_expr).collect(),
            polys,
        }
    }

    pub(crate) fn polys(&self) -> &[Poly] {
        &self.polys
    }

    pub fn zero() -> LinDiffOp {
        LinDiffOp::default()
    }

    pub fn identity() -> LinDiffOp {
        LinDiffOp::scalar_unchecked(Expr::one())
    }

    /// `D^n`.
    pub fn d_pow(n: usize) -> LinDiffOp {
        LinDiffOp::monomial_unchecked(Expr::one(), n)
    }

    /// Multiplication by `e`.
    pub fn scalar(e: Expr) -> Result<LinDiffOp, DiffOpError> {
        LinDiffOp::new(vec![e])
    }

    /// `e D^n`.
    pub fn monomial(e: Expr, n: usize) -> Result<LinDiffOp, DiffOpError> {
        let mut coeffs = vec![Expr::zero(); n + 1];
        coeffs[n] = e;
        LinDiffOp::new(coeffs)
    }

    fn scalar_unchecked(e: Expr) -> LinDiffOp {
        LinDiffOp::monomial_unchecked(e, 0)
    }

    fn monomial_unchecked(e: Expr, n: usize) -> LinDiffOp {
        let mut polys = vec![Poly::zero(); n + 1];
        polys[n] = e.to_poly();
        LinDiffOp::from_polys(polys)
    }

    /// `D^2 + G D + H` for arbitrary coefficient expressions.
    pub fn second_order(g: &Expr, h: &Expr) -> Result<LinDiffOp, DiffOpError> {
        LinDiffOp::new(vec![h.clone(), g.clone(), Expr::one()])
    }

    /// Parses the operator grammar, e.g. `D^2 + G*D + H`.
    pub fn parse(text: &str) -> Result<LinDiffOp, DiffOpError> {
        parse::parse_operator(text)
    }

    pub fn coeffs(&self) -> &[Expr] {
        &self.coeffs
    }

    /// Coefficient of `D^i`; zero past the order.
    pub fn coeff(&self, i: usize) -> Expr {
        self.coeffs.get(i).cloned().unwrap_or_else(Expr::zero)
    }

    /// Highest power of `D` with a nonzero coefficient; `None` for the zero operator.
    pub fn order(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn leading(&self) -> Option<&Expr> {
        self.coeffs.last()
    }

    pub fn is_monic(&self) -> bool {
        self.leading().is_some_and(Expr::is_one)
    }

    pub fn add(&self, other: &LinDiffOp) -> LinDiffOp {
        let (a, b) = (self.polys(), other.polys());
        let n = a.len().max(b.len());
        let zero = Poly::zero();
        LinDiffOp::from_polys(
            (0..n)
                .map(|i| a.get(i).unwrap_or(&zero).add(b.get(i).unwrap_or(&zero)))
                .collect(),
        )
    }

    pub fn sub(&self, other: &LinDiffOp) -> LinDiffOp {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> LinDiffOp {
        LinDiffOp::from_polys(self.polys.iter().map(Poly::neg).collect())
    }

    /// Left multiplication by the function `e`.
    pub fn scale(&self, e: &Expr) -> Result<LinDiffOp, DiffOpError> {
        if let Some(i) = e.max_jet_index() {
            return Err(DiffOpError::JetVariable(i));
        }
        let p = e.to_poly();
        Ok(LinDiffOp::from_polys(
            self.polys().iter().map(|c| p.mul(c)).collect(),
        ))
    }

    pub fn scale_rational(&self, k: &Rational) -> LinDiffOp {
        LinDiffOp::from_polys(self.polys().iter().map(|c| c.scale(k)).collect())
    }

    /// `self ∘ other`.
    pub fn compose(&self, other: &LinDiffOp) -> LinDiffOp {
        if self.is_zero() || other.is_zero() {
            return LinDiffOp::zero();
        }
        let a = self.polys();
        let b = other.polys();
        let max_shift = a.len() - 1;
        // derivs[j][l] = b_j^(l)
        let derivs: Vec<Vec<Poly>> = b
            .iter()
            .map(|bj| {
                let mut tower = Vec::with_capacity(max_shift + 1);
                tower.push(bj.clone());
                for l in 1..=max_shift {
                    let next = tower[l - 1].diff_x();
                    tower.push(next);
                }
                tower
            })
            .collect();
        let mut out = vec![Poly::zero(); a.len() + b.len() - 1];
        for (i, ai) in a.iter().enumerate() {
            if ai.is_zero() {
                continue;
            }
            for l in 0..=i {
                let c = binomial(i, l);
                let ai_c = ai.scale(&c);
                for (j, tower) in derivs.iter().enumerate() {
                    let d = &tower[l];
                    if d.is_zero() {
                        continue;
                    }
                    out[i - l + j].add_assign(&ai_c.mul(d));
                }
            }
        }
        LinDiffOp::from_polys(out)
    }

    /// `self ∘ other − other ∘ self`.
    pub fn commutator(&self, other: &LinDiffOp) -> LinDiffOp {
        self.compose(other).sub(&other.compose(self))
    }

    /// Formal adjoint `Σ (−1)^i D^i ∘ a_i`.
    pub fn adjoint(&self) -> LinDiffOp {
        let mut out = LinDiffOp::zero();
        for (i, a) in self.polys.iter().enumerate() {
            let term = LinDiffOp::d_pow(i).compose(&LinDiffOp::from_polys(vec![a.clone()]));
            out = if i % 2 == 0 {
                out.add(&term)
            } else {
                out.sub(&term)
            };
        }
        out
    }

    pub fn is_self_adjoint(&self) -> bool {
        self.adjoint() == *self
    }

    pub fn is_skew_adjoint(&self) -> bool {
        self.adjoint() == self.neg()
    }

    /// `Σ a_i h^(i)`.
    pub fn apply(&self, h: &Expr) -> Result<Expr, DiffOpError> {
        if let Some(i) = h.max_jet_index() {
            return Err(ExprError::JetVariable(i).into());
        }
        let mut acc = Poly::zero();
        let mut d = h.to_poly();
        for a in self.polys.iter() {
            acc.add_assign(&a.mul(&d));
            d = d.diff_x();
        }
        Ok(acc.to_expr())
    }

    /// Division with remainder by a monic operator of order ≥ 1:
    /// `self = quotient ∘ divisor + remainder`, `order(remainder) < order(divisor)`.
    pub fn divide(&self, divisor: &LinDiffOp) -> Result<DivisionResult, DiffOpError> {
        let r = match divisor.order() {
            None | Some(0) => return Err(DiffOpError::DivisorOrderZero),
            Some(r) => r,
        };
        if !divisor.is_monic() {
            return Err(DiffOpError::NonMonicDivisor(
                divisor.leading().map(|l| l.to_string()).unwrap_or_default(),
            ));
        }
        let mut quotient = vec![Poly::zero(); self.coeffs.len().saturating_sub(r)];
        let mut rem = self.clone();
        while let Some(n) = rem.order().filter(|n| *n >= r) {
            let lead = rem.polys[n].clone();
            quotient[n - r].add_assign(&lead);
            let mut step = vec![Poly::zero(); n - r + 1];
            step[n - r] = lead;
            let step = LinDiffOp::from_polys(step);
            rem = rem.sub(&step.compose(divisor));
            debug_assert!(rem.order().is_none_or(|m| m < n));
        }
        Ok(DivisionResult {
            quotient: LinDiffOp::from_polys(quotient),
            remainder: rem,
        })
    }

    /// Applies a substitution to every coefficient.
    pub fn substitute(
        &self,
        bindings: &std::collections::BTreeMap<String, Expr>,
    ) -> Result<LinDiffOp, DiffOpError> {
        let coeffs = self
            .coeffs
            .iter()
            .map(|c| c.substitute(bindings))
            .collect::<Result<Vec<_>, _>>()?;
        LinDiffOp::new(coeffs)
    }

    /// True if no coefficient mentions `x` or a function symbol.
    pub fn has_constant_coefficients(&self) -> bool {
        self.coeffs.iter().all(|c| c.as_constant().is_some())
    }
}

impl std::str::FromStr for LinDiffOp {
    type Err = DiffOpError;
    fn from_str(s: &str) -> Result<LinDiffOp, DiffOpError> {
        LinDiffOp::parse(s)
    }
}

fn write_d(f: &mut fmt::Formatter<'_>, i: usize) -> fmt::Result {
    match i {
        1 => write!(f, "D"),
        _ => write!(f, "D^{i}"),
    }
}

/// Highest order first, coefficients multiplying `D` from the left:
/// `D^2 - G*D + (H - G')`. The output re-parses to an equal operator.
impl fmt::Display for LinDiffOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (i, c) in self.coeffs.iter().enumerate().rev() {
            let p = c.to_poly();
            if p.is_zero() {
                continue;
            }
            let single = p.len() == 1;
            // Pull the sign out of single-term coefficients.
            let (negative, shown) = match p.terms().next() {
                Some((_, k)) if single && k.is_negative() => (true, p.neg()),
                _ => (false, p.clone()),
            };
            match (first, negative) {
                (true, true) => write!(f, "-")?,
                (true, false) => {}
                (false, true) => write!(f, " - ")?,
                (false, false) => write!(f, " + ")?,
            }
            let is_one = shown.as_constant().is_some_and(|k| k.is_one());
            if i == 0 {
                if single || first {
                    crate::symexpr::write_poly(f, &shown)?;
                } else {
                    write!(f, "(")?;
                    crate::symexpr::write_poly(f, &shown)?;
                    write!(f, ")")?;
                }
            } else if is_one {
                write_d(f, i)?;
            } else {
                if single {
                    crate::symexpr::write_poly(f, &shown)?;
                } else {
                    write!(f, "(")?;
                    crate::symexpr::write_poly(f, &shown)?;
                    write!(f, ")")?;
                }
                write!(f, "*")?;
                write_d(f, i)?;
            }
            first = false;
        }
        Ok(())
    }
}

/// JSON form `{"coeffs": ["a0", "a1", ...]}` with canonical coefficient strings.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OperatorJson {
    pub coeffs: Vec<String>,
}

impl From<&LinDiffOp> for OperatorJson {
    fn from(op: &LinDiffOp) -> OperatorJson {
        OperatorJson {
            coeffs: op.coeffs.iter().map(|c| c.to_string()).collect(),
        }
    }
}

impl TryFrom<&OperatorJson> for LinDiffOp {
    type Error = DiffOpError;
    fn try_from(j: &OperatorJson) -> Result<LinDiffOp, DiffOpError> {
        let coeffs = j
            .coeffs
            .iter()
            .map(|s| Expr::parse(s))
            .collect::<Result<Vec<_>, _>>()?;
        LinDiffOp::new(coeffs)
    }
}

impl Serialize for LinDiffOp {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        OperatorJson::from(self).serialize(s)
    }
}

impl<'de> Deserialize<'de> for LinDiffOp {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<LinDiffOp, D::Error> {
        let j = OperatorJson::deserialize(d)?;
        LinDiffOp::try_from(&j).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn op(s: &str) -> LinDiffOp {
        LinDiffOp::parse(s).unwrap()
    }

    fn e(s: &str) -> Expr {
        Expr::parse(s).unwrap()
    }

    #[test]
    fn add_and_scale() {
        assert!(op("D").add(&op("-D")).is_zero());
        assert_eq!(op("D").scale(&Expr::x()).unwrap(), op("x*D"));
        assert_eq!(op("D^2 + H").add(&op("G*D")), op("D^2 + G*D + H"));
    }

    #[test]
    fn leibniz() {
        assert_eq!(op("D").compose(&op("x")), op("x*D + 1"));
        assert_eq!(op("D").commutator(&op("x")), op("1"));
        let a = op("D^2 + G*D + H");
        assert!(a.commutator(&a).is_zero());
    }

    #[test]
    fn adjoint_small_cases() {
        assert_eq!(op("H").adjoint(), op("H"));
        assert_eq!(op("D").adjoint(), op("-D"));
        assert!(op("D").is_skew_adjoint());
        assert!(op("D^2 + H").is_self_adjoint());
        assert!(!op("D^2 + G*D + H").is_self_adjoint());
    }

    #[test]
    fn apply_examples() {
        assert_eq!(op("D").apply(&e("x^2")).unwrap(), e("2*x").normalize());
        assert!(op("D^2 + 1").apply(&e("sin(x)")).unwrap().is_zero());
        assert_eq!(op("x*D - 1/2").apply(&e("x")).unwrap(), e("x/2").normalize());
        assert!(op("D").apply(&e("p0")).is_err());
    }

    #[test]
    fn division_edge_cases() {
        let l = op("D^2 + G*D + H");
        let r = l.divide(&l).unwrap();
        assert_eq!(r.quotient, LinDiffOp::identity());
        assert!(r.remainder.is_zero());
        let r = op("D").divide(&l).unwrap();
        assert!(r.quotient.is_zero());
        assert_eq!(r.remainder, op("D"));
        assert!(matches!(
            op("D").divide(&op("2*D^2")),
            Err(DiffOpError::NonMonicDivisor(_))
        ));
        assert_eq!(op("D").divide(&op("1")), Err(DiffOpError::DivisorOrderZero));
        assert_eq!(
            op("D").divide(&LinDiffOp::zero()),
            Err(DiffOpError::DivisorOrderZero)
        );
        let z = LinDiffOp::zero().divide(&l).unwrap();
        assert!(z.quotient.is_zero() && z.remainder.is_zero());
    }

    #[test]
    fn zero_operator_has_no_order() {
        assert_eq!(LinDiffOp::zero().order(), None);
        assert_eq!(op("0*D^3").order(), None);
        assert_eq!(op("x").order(), Some(0));
    }

    #[test]
    fn printing() {
        assert_eq!(op("D^2 + G*D + H").adjoint().to_string(), "D^2 - G*D + (H - G')");
        assert_eq!(op("x*D - 1/2").to_string(), "x*D - 1/2");
        assert_eq!(op("x^2*D - x").to_string(), "x^2*D - x");
        assert_eq!(op("-D^3 + (x + 1)*D").to_string(), "-D^3 + (x + 1)*D");
        assert_eq!(op("-1/2*D - 3").to_string(), "-1/2*D - 3");
        assert_eq!(op("x^2 - 1").to_string(), "x^2 - 1");
        assert_eq!(LinDiffOp::zero().to_string(), "0");
    }

    #[test]
    fn json_form() {
        let l = op("D^2 + G*D + H");
        let j = serde_json::to_string(&l).unwrap();
        assert_eq!(j, r#"{"coeffs":["H","G","1"]}"#);
        let back: LinDiffOp = serde_json::from_str(&j).unwrap();
        assert_eq!(back, l);
    }

    #[test]
    fn jet_variables_rejected_in_coefficients() {
        assert_eq!(
            LinDiffOp::new(vec![Expr::p(0)]),
            Err(DiffOpError::JetVariable(0))
        );
    }
}

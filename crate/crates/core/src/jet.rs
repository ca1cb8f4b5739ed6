//! Generating functions on the k-jet `(x, p0, ..., pk)` of the equation
//! `y^(k+1) = F(x, p0, ..., pk)`.
//!
//! The total derivative is the derivation
//! `D = ∂/∂x + p1 ∂/∂p0 + ... + pk ∂/∂p(k-1) + F ∂/∂pk`,
//! with function symbols of `x` differentiated formally (`G ↦ G'`).

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::diffop::{DiffOpError, LinDiffOp};
use crate::symexpr::poly::{Atom, Poly};
use crate::symexpr::{Expr, ExprError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum JetError {
    #[error("jet variable p{index} is outside the {k}-jet")]
    VariableOutOfRange { index: usize, k: usize },
    #[error("generating function is not linear homogeneous in the jet variables: {0}")]
    NotLinear(String),
    #[error("generating function is not of the form a(x,p0)*p1 + b(x,p0): {0}")]
    NotAffine(String),
    #[error("operator of order {order} does not fit the {k}-jet")]
    OrderTooHigh { order: usize, k: usize },
    #[error("operator must be monic of order at least 1")]
    NotMonic,
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error(transparent)]
    DiffOp(#[from] DiffOpError),
}

/// Jet order `k` and right-hand side `F` of `y^(k+1) = F`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct JetContext {
    k: usize,
    rhs: Expr,
}

/// A generating function `f(x, p0, ..., pk)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GenFunc(pub Expr);

/// Components `(f, D f, ..., D^k f)` of `S_f` on `∂/∂p0, ..., ∂/∂pk`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ShuffleField {
    pub components: Vec<Expr>,
}

impl GenFunc {
    pub fn parse(text: &str) -> Result<GenFunc, JetError> {
        Ok(GenFunc(Expr::parse(text)?.normalize()))
    }

    pub fn expr(&self) -> &Expr {
        &self.0
    }
}

impl From<Expr> for GenFunc {
    fn from(e: Expr) -> GenFunc {
        GenFunc(e.normalize())
    }
}

impl JetContext {
    pub fn new(k: usize, rhs: Expr) -> Result<JetContext, JetError> {
        let ctx = JetContext {
            k,
            rhs: rhs.normalize(),
        };
        ctx.check(&ctx.rhs)?;
        Ok(ctx)
    }

    /// The context of `L(y) = 0` for monic `L = D^(k+1) + Σ A_i D^i`:
    /// `F = −Σ A_i p_i`.
    pub fn from_monic_operator(l: &LinDiffOp) -> Result<JetContext, JetError> {
        let n = match l.order() {
            Some(n) if n >= 1 && l.is_monic() => n,
            _ => return Err(JetError::NotMonic),
        };
        let mut rhs = Poly::zero();
        for i in 0..n {
            rhs = rhs.sub(&l.coeff(i).to_poly().mul(&Poly::atom(Atom::P(i))));
        }
        JetContext::new(n - 1, rhs.to_expr())
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn rhs(&self) -> &Expr {
        &self.rhs
    }

    fn check(&self, e: &Expr) -> Result<(), JetError> {
        match e.max_jet_index() {
            Some(index) if index > self.k => Err(JetError::VariableOutOfRange { index, k: self.k }),
            _ => Ok(()),
        }
    }

    fn total_derivative_poly(&self, p: &Poly, f: &Poly) -> Poly {
        let k = self.k;
        p.derive(&|a| match a {
            Atom::X => Poly::one(),
            Atom::Func(s) => Poly::atom(Atom::Func(s.derivative())),
            Atom::P(i) if *i < k => Poly::atom(Atom::P(i + 1)),
            Atom::P(_) => f.clone(),
            Atom::Apply(..) => unreachable!("chain rule handled by derive"),
        })
    }

    /// One application of the total derivative.
    pub fn total_derivative(&self, e: &Expr) -> Result<Expr, JetError> {
        self.check(e)?;
        Ok(self
            .total_derivative_poly(&e.to_poly(), &self.rhs.to_poly())
            .to_expr())
    }

    /// `[e, D e, ..., D^n e]`.
    fn tower(&self, e: &Expr, n: usize) -> Result<Vec<Poly>, JetError> {
        self.check(e)?;
        let f = self.rhs.to_poly();
        let mut out = vec![e.to_poly()];
        for i in 0..n {
            let next = self.total_derivative_poly(&out[i], &f);
            out.push(next);
        }
        Ok(out)
    }

    pub fn shuffle_field(&self, f: &GenFunc) -> Result<ShuffleField, JetError> {
        Ok(ShuffleField {
            components: self
                .tower(&f.0, self.k)?
                .iter()
                .map(Poly::to_expr)
                .collect(),
        })
    }

    /// `D^(k+1) f − Σ ∂F/∂p_i D^i f`; vanishes iff `S_f` is a shuffling symmetry.
    pub fn lie_equation_residual(&self, f: &GenFunc) -> Result<Expr, JetError> {
        let tower = self.tower(&f.0, self.k + 1)?;
        let mut acc = tower[self.k + 1].clone();
        for (i, d) in tower.iter().take(self.k + 1).enumerate() {
            let dfi = self.rhs.partial_p(i).to_poly();
            acc = acc.sub(&dfi.mul(d));
        }
        Ok(acc.to_expr())
    }

    /// `[f, g] = Σ_i (D^i f ∂g/∂p_i − D^i g ∂f/∂p_i)`.
    pub fn poisson_lie_bracket(&self, f: &GenFunc, g: &GenFunc) -> Result<GenFunc, JetError> {
        let tf = self.tower(&f.0, self.k)?;
        let tg = self.tower(&g.0, self.k)?;
        let mut acc = Poly::zero();
        for i in 0..=self.k {
            let dg = g.0.partial_p(i).to_poly();
            let df = f.0.partial_p(i).to_poly();
            acc.add_assign(&tf[i].mul(&dg));
            acc = acc.sub(&tg[i].mul(&df));
        }
        Ok(GenFunc(acc.to_expr()))
    }
}

/// `f = b0 p0 + ... + bk pk` ↦ `Δ_f = b0 + ... + bk D^k`.
pub fn linear_genfunc_to_op(f: &GenFunc) -> Result<LinDiffOp, JetError> {
    let p = f.0.to_poly();
    let not_linear = || JetError::NotLinear(f.0.to_string());
    let mut coeffs: Vec<Poly> = Vec::new();
    for (m, c) in p.terms() {
        let mut index = None;
        for (a, e) in m.factors() {
            match a {
                Atom::P(i) if *e == 1 && index.is_none() => index = Some(*i),
                Atom::P(_) => return Err(not_linear()),
                Atom::Apply(_, arg) if arg.any_atom(&|a| matches!(a, Atom::P(_))) => {
                    return Err(not_linear())
                }
                _ => {}
            }
        }
        let i = index.ok_or_else(not_linear)?;
        if coeffs.len() <= i {
            coeffs.resize(i + 1, Poly::zero());
        }
        let rest = m.without(|a| matches!(a, Atom::P(_)));
        coeffs[i].add_term(rest, c.clone());
    }
    Ok(LinDiffOp::from_polys(coeffs))
}

/// Inverse of [`linear_genfunc_to_op`] on the `k`-jet.
pub fn op_to_linear_genfunc(op: &LinDiffOp, k: usize) -> Result<GenFunc, JetError> {
    if let Some(order) = op.order().filter(|o| *o > k) {
        return Err(JetError::OrderTooHigh { order, k });
    }
    let mut acc = Poly::zero();
    for (i, c) in op.coeffs().iter().enumerate() {
        acc.add_assign(&c.to_poly().mul(&Poly::atom(Atom::P(i))));
    }
    Ok(GenFunc(acc.to_expr()))
}

/// For `f = a(x,p0) p1 + b(x,p0)`, the point field `b ∂/∂p0 − a ∂/∂x`,
/// returned as `(b, −a)`: the coefficients of `∂/∂p0` and `∂/∂x`.
pub fn affine_genfunc_to_point_field(f: &GenFunc) -> Result<(Expr, Expr), JetError> {
    let p = f.0.to_poly();
    let bad = || JetError::NotAffine(f.0.to_string());
    let p1 = Atom::P(1);
    let mentions_high = |a: &Atom| matches!(a, Atom::P(i) if *i >= 2);
    if p.any_atom(&mentions_high) {
        return Err(bad());
    }
    // p1 may only appear as a bare linear factor.
    for (m, _) in p.terms() {
        for (a, _) in m.factors() {
            if let Atom::Apply(_, arg) = a {
                if arg.any_atom(&|a| *a == Atom::P(1)) {
                    return Err(bad());
                }
            }
        }
    }
    let parts = p.collect_by(&p1);
    if parts.keys().any(|d| *d > 1) {
        return Err(bad());
    }
    let a = parts.get(&1).cloned().unwrap_or_default();
    let b = parts.get(&0).cloned().unwrap_or_default();
    Ok((b.to_expr(), a.neg().to_expr()))
}

/// `{"k": int, "F": "expr"}`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct JetContextJson {
    pub k: usize,
    #[serde(rename = "F")]
    pub rhs: String,
}

impl From<&JetContext> for JetContextJson {
    fn from(c: &JetContext) -> JetContextJson {
        JetContextJson {
            k: c.k,
            rhs: c.rhs.to_string(),
        }
    }
}

impl TryFrom<&JetContextJson> for JetContext {
    type Error = JetError;
    fn try_from(j: &JetContextJson) -> Result<JetContext, JetError> {
        JetContext::new(j.k, Expr::parse(&j.rhs)?)
    }
}

#![allow(dead_code)]

use linsym::{Expr, LinDiffOp};
use proptest::prelude::*;

/// Formal factors mixed into random coefficients.
pub fn symbol(i: u8) -> Expr {
    match i {
        0 => Expr::one(),
        1 => Expr::func("G", 0),
        2 => Expr::func("H", 0),
        3 => Expr::func("G", 1),
        4 => Expr::sin(Expr::x()),
        _ => Expr::exp(Expr::x()),
    }
}

/// `k/d * x^deg * s` summed over up to three terms.
pub fn coeff_with(max_deg: u32, symbols: u8) -> impl Strategy<Value = Expr> {
    prop::collection::vec((-3i64..=3, 1i64..=3, 0..=max_deg, 0..=symbols), 0..=3).prop_map(
        |terms| {
            terms.into_iter().fold(Expr::zero(), |acc, (k, d, deg, s)| {
                let t = &(&Expr::rational(k, d) * &Expr::x().pow(deg)) * &symbol(s);
                &acc + &t
            })
        },
    )
}

pub fn coeff() -> impl Strategy<Value = Expr> {
    coeff_with(3, 5)
}

/// Polynomial-in-x coefficients only.
pub fn poly_coeff() -> impl Strategy<Value = Expr> {
    coeff_with(3, 0)
}

pub fn op_with(max_order: usize, c: impl Strategy<Value = Expr>) -> impl Strategy<Value = LinDiffOp> {
    prop::collection::vec(c, 0..=max_order + 1).prop_map(|cs| LinDiffOp::new(cs).unwrap())
}

pub fn op(max_order: usize) -> impl Strategy<Value = LinDiffOp> {
    op_with(max_order, coeff())
}

/// Monic operator of order `1..=max_order`.
pub fn monic(max_order: usize) -> impl Strategy<Value = LinDiffOp> {
    (1..=max_order)
        .prop_flat_map(|n| prop::collection::vec(coeff(), n))
        .prop_map(|mut cs| {
            cs.push(Expr::one());
            LinDiffOp::new(cs).unwrap()
        })
}

/// Evaluates `Σ a_i h^(i)` with plain expression calculus, as an oracle
/// independent of operator composition.
pub fn act(op: &LinDiffOp, h: &Expr) -> Expr {
    op.coeffs()
        .iter()
        .enumerate()
        .fold(Expr::zero(), |acc, (i, a)| &acc + &(a * &h.diff_n(i).unwrap()))
}

/// `A^T(u) = Σ (−1)^i (a_i u)^(i)`.
pub fn act_adjoint(op: &LinDiffOp, u: &Expr) -> Expr {
    op.coeffs().iter().enumerate().fold(Expr::zero(), |acc, (i, a)| {
        let t = (a * u).diff_n(i).unwrap();
        if i % 2 == 0 {
            &acc + &t
        } else {
            &acc - &t
        }
    })
}

/// A formal test function; operators are determined by their action on it.
pub fn probe() -> Expr {
    Expr::func("u", 0)
}

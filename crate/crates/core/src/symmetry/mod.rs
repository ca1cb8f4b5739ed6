//! Linear symmetries of a monic operator `L`.
//!
//! `Δ` is a symmetry when `L∘Δ = ∇∘L` for some operator `∇`, which is decided
//! by dividing `L∘Δ` by `L` and checking the remainder. For self- or
//! skew-adjoint `L` the symmetries split into even (`L∘Δ = −Δ^T∘L`) and odd
//! (`L∘Δ = Δ^T∘L`) parts.

pub mod algebra;
pub mod conditions;

use std::fmt;
use std::ops::Add;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::diffop::{DiffOpError, LinDiffOp};
use crate::jet::{self, JetContext, JetError};
use crate::symexpr::{rat, ExprError};

pub use algebra::{structure_constants, verify_sl2_triple, LieType, Sl2Triple, StructureConstants};
pub use conditions::{
    constant_potential_kernel, constraint_operator, derive_even_conditions, derive_odd_conditions, even_symmetry_from_w,
    even_symmetry_residual, ltilde_gauge, ltilde_paper, ltilde_schrodinger,
    normal_form_potential, EvenConditionReport, OddConditionReport,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SymmetryError {
    #[error("`{op}` is not a symmetry: remainder `{remainder}`")]
    NotSymmetry { op: String, remainder: String },
    #[error("`{0}` is neither self-adjoint nor skew-adjoint")]
    NotGradable(String),
    #[error("bracket `{0}` is not in the span of the basis with constant coefficients")]
    NotInSpan(String),
    #[error("basis elements are linearly dependent over the rationals")]
    DependentBasis,
    #[error("operator and generating-function brackets disagree beyond sign for pair ({0}, {1})")]
    BracketMismatch(String, String),
    #[error("no single sign relates operator and generating-function brackets across all pairs")]
    InconsistentSign,
    #[error("no closed-form kernel: {0}")]
    NoClosedForm(String),
    #[error("derivation failed: {0}")]
    Derivation(String),
    #[error(transparent)]
    DiffOp(#[from] DiffOpError),
    #[error(transparent)]
    Jet(#[from] JetError),
    #[error(transparent)]
    Expr(#[from] ExprError),
}

/// Outcome of dividing `L∘Δ` by `L`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SymmetryCheck {
    pub quotient: LinDiffOp,
    pub remainder: LinDiffOp,
}

impl SymmetryCheck {
    pub fn is_symmetry(&self) -> bool {
        self.remainder.is_zero()
    }

    /// `∇` with `L∘Δ = ∇∘L`, when the remainder vanishes.
    pub fn certificate(&self) -> Option<&LinDiffOp> {
        self.is_symmetry().then_some(&self.quotient)
    }
}

/// Divides `L∘Δ` by `L`; the remainder is kept for diagnostics.
pub fn symmetry_test(l: &LinDiffOp, delta: &LinDiffOp) -> Result<SymmetryCheck, SymmetryError> {
    let d = l.compose(delta).divide(l)?;
    Ok(SymmetryCheck {
        quotient: d.quotient,
        remainder: d.remainder,
    })
}

/// `Some(∇)` with `L∘Δ = ∇∘L` if `Δ` is a symmetry of `L`.
pub fn symmetry_quotient(
    l: &LinDiffOp,
    delta: &LinDiffOp,
) -> Result<Option<LinDiffOp>, SymmetryError> {
    Ok(symmetry_test(l, delta)?.certificate().cloned())
}

fn require_symmetry(l: &LinDiffOp, delta: &LinDiffOp) -> Result<LinDiffOp, SymmetryError> {
    let check = symmetry_test(l, delta)?;
    match check.certificate() {
        Some(nabla) => Ok(nabla.clone()),
        None => Err(SymmetryError::NotSymmetry {
            op: delta.to_string(),
            remainder: check.remainder.to_string(),
        }),
    }
}

/// Remainder of `[Δf, Δg]` on division by `L`; again a symmetry, which is re-checked.
pub fn symmetry_bracket(
    l: &LinDiffOp,
    f: &LinDiffOp,
    g: &LinDiffOp,
) -> Result<LinDiffOp, SymmetryError> {
    require_symmetry(l, f)?;
    require_symmetry(l, g)?;
    let r = f.commutator(g).divide(l)?.remainder;
    require_symmetry(l, &r)?;
    Ok(r)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(into = "u8", try_from = "u8")]
pub enum Parity {
    Even,
    Odd,
}

impl Parity {
    pub fn as_u8(self) -> u8 {
        match self {
            Parity::Even => 0,
            Parity::Odd => 1,
        }
    }
}

impl From<Parity> for u8 {
    fn from(p: Parity) -> u8 {
        p.as_u8()
    }
}

impl TryFrom<u8> for Parity {
    type Error = String;
    fn try_from(v: u8) -> Result<Parity, String> {
        match v {
            0 => Ok(Parity::Even),
            1 => Ok(Parity::Odd),
            _ => Err(format!("parity must be 0 or 1, got {v}")),
        }
    }
}

impl Add for Parity {
    type Output = Parity;
    fn add(self, rhs: Parity) -> Parity {
        if self == rhs {
            Parity::Even
        } else {
            Parity::Odd
        }
    }
}

impl fmt::Display for Parity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.as_u8())
    }
}

/// A symmetry with a certified parity. `quotient` is `∇` with `L∘op = ∇∘L`,
/// equal to `−op^T` for even and `op^T` for odd elements.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GradedSymmetry {
    pub op: LinDiffOp,
    pub parity: Parity,
    pub quotient: LinDiffOp,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Grading {
    /// The zero operator lies in both classes.
    Zero,
    Pure(GradedSymmetry),
    Mixed {
        even: GradedSymmetry,
        odd: GradedSymmetry,
    },
}

fn require_gradable(l: &LinDiffOp) -> Result<(), SymmetryError> {
    if l.is_self_adjoint() || l.is_skew_adjoint() {
        Ok(())
    } else {
        Err(SymmetryError::NotGradable(l.to_string()))
    }
}

/// Exact membership test in the class of the given parity; the zero operator
/// belongs to both.
pub fn in_class(l: &LinDiffOp, delta: &LinDiffOp, parity: Parity) -> bool {
    let lhs = l.compose(delta);
    let rhs = delta.adjoint().compose(l);
    match parity {
        Parity::Even => lhs == rhs.neg(),
        Parity::Odd => lhs == rhs,
    }
}

fn pure(l: &LinDiffOp, delta: &LinDiffOp) -> Option<GradedSymmetry> {
    let adj = delta.adjoint();
    let lhs = l.compose(delta);
    let rhs = adj.compose(l);
    let (parity, quotient) = if lhs == rhs.neg() {
        (Parity::Even, adj.neg())
    } else if lhs == rhs {
        (Parity::Odd, adj)
    } else {
        return None;
    };
    Some(GradedSymmetry {
        op: delta.clone(),
        parity,
        quotient,
    })
}

/// The involution `Δ ↦ ∇^T` on symmetries of a self- or skew-adjoint `L`;
/// it is `−1` on even and `+1` on odd symmetries.
pub fn grading_involution(l: &LinDiffOp, delta: &LinDiffOp) -> Result<LinDiffOp, SymmetryError> {
    require_gradable(l)?;
    Ok(require_symmetry(l, delta)?.adjoint())
}

/// Assigns a parity to a symmetry of a self- or skew-adjoint `L`, splitting
/// mixed inputs as `½(Δ − ∇^T) + ½(Δ + ∇^T)`.
pub fn grade(l: &LinDiffOp, delta: &LinDiffOp) -> Result<Grading, SymmetryError> {
    let inv = grading_involution(l, delta)?;
    if delta.is_zero() {
        return Ok(Grading::Zero);
    }
    if let Some(g) = pure(l, delta) {
        return Ok(Grading::Pure(g));
    }
    let half = rat(1, 2);
    let even = delta.sub(&inv).scale_rational(&half);
    let odd = delta.add(&inv).scale_rational(&half);
    match (pure(l, &even), pure(l, &odd)) {
        (Some(e), Some(o)) if e.parity == Parity::Even && o.parity == Parity::Odd => {
            Ok(Grading::Mixed { even: e, odd: o })
        }
        _ => Err(SymmetryError::Derivation(format!(
            "grading split of `{delta}` did not produce pure components"
        ))),
    }
}

/// One row of the operator-versus-generating-function bracket comparison.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BridgeRow {
    pub f: LinDiffOp,
    pub g: LinDiffOp,
    /// Remainder of `[Δf, Δg]` on division by `L`.
    pub operator_bracket: LinDiffOp,
    /// `Δ_[f,g]` from the Poisson-Lie bracket of the generating functions.
    pub genfunc_bracket: LinDiffOp,
    /// `None` when both sides vanish.
    pub sign: Option<i8>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BracketBridge {
    /// The single sign `σ` with `R_[Δf,Δg] = σ Δ_[f,g]` on every pair, if any
    /// pair has a nonzero bracket.
    pub sign: Option<i8>,
    pub rows: Vec<BridgeRow>,
}

/// Compares the operator bracket of symmetries with the Poisson-Lie bracket
/// of their linear generating functions over all pairs `i < j` of `basis`.
pub fn bracket_bridge(l: &LinDiffOp, basis: &[LinDiffOp]) -> Result<BracketBridge, SymmetryError> {
    let ctx = JetContext::from_monic_operator(l)?;
    let k = ctx.k();
    let mut rows = Vec::new();
    let mut sign: Option<i8> = None;
    for i in 0..basis.len() {
        for j in i + 1..basis.len() {
            let (f, g) = (&basis[i], &basis[j]);
            let op_br = symmetry_bracket(l, f, g)?;
            let gf = ctx.poisson_lie_bracket(
                &jet::op_to_linear_genfunc(f, k)?,
                &jet::op_to_linear_genfunc(g, k)?,
            )?;
            let gen_br = jet::linear_genfunc_to_op(&gf)?;
            let row_sign = if op_br.is_zero() && gen_br.is_zero() {
                None
            } else if op_br == gen_br {
                Some(1)
            } else if op_br == gen_br.neg() {
                Some(-1)
            } else {
                return Err(SymmetryError::BracketMismatch(f.to_string(), g.to_string()));
            };
            if let Some(s) = row_sign {
                match sign {
                    Some(t) if t != s => return Err(SymmetryError::InconsistentSign),
                    _ => sign = Some(s),
                }
            }
            rows.push(BridgeRow {
                f: f.clone(),
                g: g.clone(),
                operator_bracket: op_br,
                genfunc_bracket: gen_br,
                sign: row_sign,
            });
        }
    }
    Ok(BracketBridge { sign, rows })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn op(s: &str) -> LinDiffOp {
        LinDiffOp::parse(s).unwrap()
    }

    #[test]
    fn identity_is_always_a_symmetry() {
        let l = op("D^2 + G*D + H");
        assert_eq!(symmetry_quotient(&l, &op("1")).unwrap(), Some(op("1")));
    }

    #[test]
    fn certificate_of_scaling_field() {
        let nabla = symmetry_quotient(&op("D^2"), &op("x*D - 1/2")).unwrap();
        assert_eq!(nabla, Some(op("x*D + 3/2")));
    }

    #[test]
    fn translation_needs_constant_potential() {
        let l = op("D^2 + H");
        let check = symmetry_test(&l, &op("D")).unwrap();
        assert!(!check.is_symmetry());
        assert_eq!(check.remainder, op("-H'"));
        assert!(symmetry_test(&op("D^2 + 1"), &op("D")).unwrap().is_symmetry());
    }

    #[test]
    fn bracket_rejects_non_symmetries() {
        let l = op("D^2 + H");
        assert!(matches!(
            symmetry_bracket(&l, &op("D"), &op("1")),
            Err(SymmetryError::NotSymmetry { .. })
        ));
    }

    #[test]
    fn parity_addition() {
        assert_eq!(Parity::Odd + Parity::Odd, Parity::Even);
        assert_eq!(Parity::Even + Parity::Odd, Parity::Odd);
        assert_eq!(serde_json::to_string(&Parity::Odd).unwrap(), "1");
    }

    #[test]
    fn grading_examples() {
        let l = op("D^2");
        match grade(&l, &op("5")).unwrap() {
            Grading::Pure(g) => assert_eq!(g.parity, Parity::Odd),
            other => panic!("{other:?}"),
        }
        match grade(&l, &op("x^2*D - x")).unwrap() {
            Grading::Pure(g) => {
                assert_eq!(g.parity, Parity::Even);
                assert_eq!(l.compose(&g.op), g.quotient.compose(&l));
            }
            other => panic!("{other:?}"),
        }
        assert_eq!(grade(&l, &LinDiffOp::zero()).unwrap(), Grading::Zero);
    }

    #[test]
    fn mixed_input_is_split() {
        let l = op("D^2");
        match grade(&l, &op("x*D + 1/2")).unwrap() {
            Grading::Mixed { even, odd } => {
                assert_eq!(even.op, op("x*D - 1/2"));
                assert_eq!(odd.op, op("1"));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn ungradable_operator() {
        assert!(matches!(
            grade(&op("D^2 + G*D + H"), &op("1")),
            Err(SymmetryError::NotGradable(_))
        ));
        assert!(matches!(
            grade(&op("D^2 + H"), &op("D")),
            Err(SymmetryError::NotSymmetry { .. })
        ));
    }

    #[test]
    fn skew_adjoint_operator_is_gradable() {
        // D^3 is skew-adjoint, so D (with D^T = -D) is even and constants odd.
        let l = op("D^3");
        for (d, parity) in [("D", Parity::Even), ("3", Parity::Odd)] {
            match grade(&l, &op(d)).unwrap() {
                Grading::Pure(g) => assert_eq!(g.parity, parity),
                other => panic!("{other:?}"),
            }
        }
    }
}

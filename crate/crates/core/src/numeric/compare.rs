//! Side-by-side transport test of the two candidate `w`-equations for
//! constant potential: `D^3 + 4H D` (derived) and `D^3 + 2H D` (as printed).

use std::fmt;

use num_traits::{Signed, ToPrimitive, Zero};
use serde::Serialize;

use crate::diffop::LinDiffOp;
use crate::symexpr::{closures, Expr, FuncTable, Rational};
use crate::symmetry::algebra::rational_sqrt;
use crate::symmetry::{
    even_symmetry_from_w, ltilde_paper, ltilde_schrodinger, symmetry_quotient, SymmetryError,
};

use super::{kernel_map_residual_basis, Grid, NumericError, NumericOperator};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    Derived,
    Paper,
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(match self {
            Variant::Derived => "derived",
            Variant::Paper => "paper",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VariantRow {
    pub variant: Variant,
    pub w: String,
    /// Exact verdict of the division test, when `w` is a closed form.
    pub symbolic: Option<bool>,
    pub per_init: Vec<f64>,
    pub max_residual: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LtildeComparison {
    #[serde(rename = "H")]
    pub h: String,
    pub grid: Grid,
    pub derived_operator: LinDiffOp,
    pub paper_operator: LinDiffOp,
    pub rows: Vec<VariantRow>,
}

impl LtildeComparison {
    pub fn rows_for(&self, v: Variant) -> impl Iterator<Item = &VariantRow> {
        self.rows.iter().filter(move |r| r.variant == v)
    }

    pub fn max_residual(&self, v: Variant) -> f64 {
        self.rows_for(v).map(|r| r.max_residual).fold(0.0, f64::max)
    }
}

impl fmt::Display for LtildeComparison {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "H = {}", self.h)?;
        writeln!(f, "derived: {}", self.derived_operator)?;
        writeln!(f, "paper:   {}", self.paper_operator)?;
        writeln!(f, "{:<8} {:<22} {:<9} max_residual", "variant", "w", "symbolic")?;
        for r in &self.rows {
            let sym = match r.symbolic {
                Some(true) => "yes",
                Some(false) => "no",
                None => "-",
            };
            writeln!(f, "{:<8} {:<22} {:<9} {:.3e}", r.variant, r.w, sym, r.max_residual)?;
        }
        Ok(())
    }
}

/// One kernel element: its label, the `w` used to build `Δ`, and closures for
/// any opaque symbol in it.
struct KernelElement {
    label: String,
    w: Expr,
    funcs: FuncTable,
    closed_form: bool,
}

/// Kernel of `D^3 + r^2 D` for rational `r^2 >= 0`.
fn kernel_basis(rate_sq: &Rational) -> Vec<KernelElement> {
    let closed = |label: &str, w: Expr| KernelElement {
        label: label.to_string(),
        w,
        funcs: FuncTable::new(),
        closed_form: true,
    };
    if rate_sq.is_zero() {
        let x = Expr::x();
        return vec![closed("1", Expr::one()), closed("x", x.clone()), closed("x^2", x.pow(2))];
    }
    let mut out = vec![closed("1", Expr::one())];
    match rational_sqrt(rate_sq) {
        Some(r) => {
            let arg = &Expr::constant(r) * &Expr::x();
            let sin = Expr::sin(arg.clone());
            let cos = Expr::cos(arg);
            out.push(closed(&sin.to_string(), sin));
            out.push(closed(&cos.to_string(), cos));
        }
        None => {
            let r = rate_sq.to_f64().unwrap_or(f64::NAN).sqrt();
            let shown = format!("sqrt({rate_sq})");
            out.push(KernelElement {
                label: format!("sin({shown}*x)"),
                w: Expr::func("w", 0),
                funcs: FuncTable::new().with("w", closures::sin_scaled(r)),
                closed_form: false,
            });
            out.push(KernelElement {
                label: format!("cos({shown}*x)"),
                w: Expr::func("w", 0),
                funcs: FuncTable::new().with("w", closures::cos_scaled(r)),
                closed_form: false,
            });
        }
    }
    out
}

/// For constant `H >= 0`, builds `w D − ½w'` from each kernel element of both
/// candidate `w`-equations and measures transport of solutions of `D^2 + H`.
pub fn compare_ltilde_variants(h: &Rational, grid: &Grid) -> Result<LtildeComparison, NumericError> {
    if h.is_negative() {
        return Err(NumericError::UnsupportedPotential(h.to_string()));
    }
    let he = Expr::constant(h.clone());
    let l = LinDiffOp::second_order(&Expr::zero(), &he).map_err(SymmetryError::from)?;
    let l_num = NumericOperator::closed_form(l.clone());
    let four = Rational::from_integer(4.into());
    let two = Rational::from_integer(2.into());
    let mut rows = Vec::new();
    for (variant, rate_sq) in [(Variant::Derived, h * four), (Variant::Paper, h * two)] {
        for k in kernel_basis(&rate_sq) {
            let delta = even_symmetry_from_w(&k.w, &Expr::zero())?;
            let symbolic = if k.closed_form {
                Some(symmetry_quotient(&l, &delta)?.is_some())
            } else {
                None
            };
            let rep = kernel_map_residual_basis(&l_num, &NumericOperator::new(delta, k.funcs), grid)?;
            rows.push(VariantRow {
                variant,
                w: k.label,
                symbolic,
                per_init: rep.per_init.iter().map(|r| r.max_residual).collect(),
                max_residual: rep.max_residual,
            });
        }
    }
    Ok(LtildeComparison {
        h: h.to_string(),
        grid: *grid,
        derived_operator: ltilde_schrodinger(&he)?,
        paper_operator: ltilde_paper(&Expr::zero(), &he)?,
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symexpr::rat;

    fn grid() -> Grid {
        Grid::new(0.0, 1.0, 1e-3).unwrap()
    }

    #[test]
    fn zero_potential_variants_coincide() {
        let c = compare_ltilde_variants(&rat(0, 1), &grid()).unwrap();
        assert_eq!(c.rows.len(), 6);
        assert!(c.rows.iter().all(|r| r.max_residual < 1e-12));
        assert!(c.rows.iter().all(|r| r.symbolic == Some(true)));
        assert_eq!(c.derived_operator, c.paper_operator);
    }

    #[test]
    fn unit_potential_separates_variants() {
        let c = compare_ltilde_variants(&rat(1, 1), &grid()).unwrap();
        assert!(c.max_residual(Variant::Derived) < 1e-6);
        let labels: Vec<&str> = c.rows_for(Variant::Derived).map(|r| r.w.as_str()).collect();
        assert_eq!(labels, ["1", "sin(2*x)", "cos(2*x)"]);
        assert!(c.rows_for(Variant::Derived).all(|r| r.symbolic == Some(true)));
        for r in c.rows_for(Variant::Paper).filter(|r| r.w != "1") {
            assert!(r.max_residual > 1e-2, "{r:?}");
            assert_eq!(r.symbolic, None);
        }
        let shown = c.to_string();
        assert!(shown.contains("sin(sqrt(2)*x)"));
    }

    #[test]
    fn negative_potential_rejected() {
        assert!(matches!(
            compare_ltilde_variants(&rat(-1, 1), &grid()),
            Err(NumericError::UnsupportedPotential(_))
        ));
    }
}

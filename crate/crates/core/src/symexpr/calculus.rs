use std::collections::BTreeMap;

use super::poly::{Atom, Poly};
use super::{Expr, ExprError, FuncSym};

impl Expr {
    /// Formal d/dx: `d/dx G^(m) = G^(m+1)`, with linearity, the product rule and
    /// the chain rule on `sin`, `cos`, `exp`. Jet variables are rejected.
    pub fn diff(&self) -> Result<Expr, ExprError> {
        if let Some(i) = self.max_jet_index() {
            return Err(ExprError::JetVariable(i));
        }
        Ok(self.to_poly().diff_x().to_expr())
    }

    /// `n`-fold [`Expr::diff`].
    pub fn diff_n(&self, n: usize) -> Result<Expr, ExprError> {
        if let Some(i) = self.max_jet_index() {
            return Err(ExprError::JetVariable(i));
        }
        let mut p = self.to_poly();
        for _ in 0..n {
            p = p.diff_x();
        }
        Ok(p.to_expr())
    }

    /// Replaces each `G^(m)` with the `m`-th derivative of the binding for `G`.
    ///
    /// Binding targets must not mention any bound name.
    pub fn substitute(&self, bindings: &BTreeMap<String, Expr>) -> Result<Expr, ExprError> {
        for (name, target) in bindings {
            if bindings.keys().any(|k| target.mentions_func(k)) {
                return Err(ExprError::RecursiveBinding(name.clone()));
            }
        }
        // Precompute every needed derivative so the rewrite itself is infallible.
        let mut needed: BTreeMap<FuncSym, Poly> = BTreeMap::new();
        let mut wanted = Vec::new();
        self.to_poly().for_each_atom(&mut |a| {
            if let Atom::Func(f) = a {
                if bindings.contains_key(&f.name) {
                    wanted.push(f.clone());
                }
            }
        });
        for f in wanted {
            if needed.contains_key(&f) {
                continue;
            }
            let d = bindings[&f.name].diff_n(f.order)?;
            needed.insert(f, d.to_poly());
        }
        Ok(self
            .to_poly()
            .map_atoms(&|a| match a {
                Atom::Func(f) => needed.get(f).cloned(),
                _ => None,
            })
            .to_expr())
    }

    /// Convenience wrapper for a single binding.
    pub fn substitute_one(&self, name: &str, value: &Expr) -> Result<Expr, ExprError> {
        let mut b = BTreeMap::new();
        b.insert(name.to_string(), value.clone());
        self.substitute(&b)
    }

    /// Renames the function symbol `from` to `to`, keeping derivative orders.
    pub fn rename_func(&self, from: &str, to: &str) -> Expr {
        self.to_poly()
            .map_atoms(&|a| match a {
                Atom::Func(f) if f.name == from => {
                    Some(Poly::atom(Atom::Func(FuncSym::new(to, f.order))))
                }
                _ => None,
            })
            .to_expr()
    }

    /// Partial derivative with respect to the jet coordinate `p_i`, everything
    /// else held fixed.
    pub fn partial_p(&self, i: usize) -> Expr {
        self.to_poly()
            .derive(&|a| match a {
                Atom::P(j) if *j == i => Poly::one(),
                _ => Poly::zero(),
            })
            .to_expr()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn e(s: &str) -> Expr {
        Expr::parse(s).unwrap()
    }

    #[test]
    fn diff_examples() {
        assert_eq!(e("x^3").diff().unwrap(), e("3*x^2").normalize());
        assert_eq!(e("G*x").diff().unwrap(), e("G'*x + G").normalize());
        assert_eq!(e("sin(x)").diff().unwrap(), e("cos(x)").normalize());
        assert_eq!(e("exp(2*x)").diff().unwrap(), e("2*exp(2*x)").normalize());
        assert_eq!(
            e("cos(x^2)").diff().unwrap(),
            e("-2*x*sin(x^2)").normalize()
        );
    }

    #[test]
    fn diff_rejects_jet_variables() {
        assert_eq!(e("x*p1").diff(), Err(ExprError::JetVariable(1)));
    }

    #[test]
    fn substitute_examples() {
        assert_eq!(
            e("G'").substitute_one("G", &e("x^2")).unwrap(),
            e("2*x").normalize()
        );
        assert_eq!(
            e("G*H").substitute_one("G", &e("1")).unwrap(),
            e("H").normalize()
        );
        assert_eq!(
            e("G''").substitute_one("G", &e("sin(x)")).unwrap(),
            e("-sin(x)").normalize()
        );
    }

    #[test]
    fn substitute_reaches_inside_elementary_functions() {
        assert_eq!(
            e("sin(G')").substitute_one("G", &e("x^2")).unwrap(),
            e("sin(2*x)").normalize()
        );
    }

    #[test]
    fn recursive_binding_is_rejected() {
        let mut b = BTreeMap::new();
        b.insert("G".to_string(), e("H + x"));
        b.insert("H".to_string(), e("x"));
        assert!(matches!(
            e("G").substitute(&b),
            Err(ExprError::RecursiveBinding(_))
        ));
        let mut selfref = BTreeMap::new();
        selfref.insert("G".to_string(), e("G'"));
        assert!(e("G").substitute(&selfref).is_err());
    }

    #[test]
    fn partial_in_jet_coordinates() {
        assert_eq!(e("x*p1^2 + p0*p1").partial_p(1), e("2*x*p1 + p0").normalize());
        assert_eq!(e("sin(p0)").partial_p(0), e("cos(p0)").normalize());
    }
}

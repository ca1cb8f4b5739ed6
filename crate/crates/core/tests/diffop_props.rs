mod common;

use common::{act, act_adjoint, monic, op, probe};
use linsym::{Expr, LinDiffOp};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn compose_agrees_with_action(a in op(3), b in op(3)) {
        let u = probe();
        prop_assert_eq!(act(&a.compose(&b), &u), act(&a, &act(&b, &u)));
    }

    #[test]
    fn apply_matches_action(a in op(3), h in common::coeff()) {
        prop_assert_eq!(a.apply(&h).unwrap(), act(&a, &h));
    }

    #[test]
    fn adjoint_agrees_with_action(a in op(3)) {
        let u = probe();
        prop_assert_eq!(act(&a.adjoint(), &u), act_adjoint(&a, &u));
    }

    #[test]
    fn composition_is_associative(a in op(2), b in op(2), c in op(2)) {
        prop_assert_eq!(a.compose(&b).compose(&c), a.compose(&b.compose(&c)));
    }

    #[test]
    fn composition_distributes(a in op(2), b in op(2), c in op(2)) {
        prop_assert_eq!(a.compose(&b.add(&c)), a.compose(&b).add(&a.compose(&c)));
    }

    #[test]
    fn adjoint_is_an_involutive_anti_homomorphism(a in op(3), b in op(3)) {
        prop_assert_eq!(a.adjoint().adjoint(), a.clone());
        prop_assert_eq!(a.compose(&b).adjoint(), b.adjoint().compose(&a.adjoint()));
    }

    #[test]
    fn jacobi_identity(a in op(2), b in op(2), c in op(2)) {
        let j = a.commutator(&b.commutator(&c))
            .add(&b.commutator(&c.commutator(&a)))
            .add(&c.commutator(&a.commutator(&b)));
        prop_assert!(j.is_zero(), "{}", j);
    }

    #[test]
    fn division_reconstructs(a in op(5), l in monic(3)) {
        let d = a.divide(&l).unwrap();
        prop_assert_eq!(d.quotient.compose(&l).add(&d.remainder), a.clone());
        let bound = l.order().unwrap();
        prop_assert!(d.remainder.order().is_none_or(|r| r < bound));
        prop_assert_eq!(a.divide(&l).unwrap(), d);
    }

    #[test]
    fn division_is_unique(c in op(2), r in op(1), l in monic(2)) {
        // Any C∘L + R with order(R) < order(L) is recovered.
        let n = l.order().unwrap();
        let r = LinDiffOp::new(r.coeffs().iter().take(n).cloned().collect()).unwrap();
        let d = c.compose(&l).add(&r).divide(&l).unwrap();
        prop_assert_eq!(d.quotient, c);
        prop_assert_eq!(d.remainder, r);
    }

    #[test]
    fn printed_operator_reparses(a in op(4)) {
        prop_assert_eq!(LinDiffOp::parse(&a.to_string()).unwrap(), a.clone());
        let json = serde_json::to_string(&a).unwrap();
        prop_assert_eq!(serde_json::from_str::<LinDiffOp>(&json).unwrap(), a);
    }
}

#[test]
fn leibniz_rule() {
    let g = Expr::func("G", 0);
    let lhs = LinDiffOp::d_pow(1).compose(&LinDiffOp::scalar(g.clone()).unwrap());
    let rhs = LinDiffOp::new(vec![Expr::func("G", 1), g]).unwrap();
    assert_eq!(lhs, rhs);
}

#[test]
fn second_order_adjoint() {
    let l = LinDiffOp::parse("D^2 + G*D + H").unwrap();
    assert_eq!(l.adjoint().to_string(), "D^2 - G*D + (H - G')");
    assert!(!l.is_self_adjoint());
    assert!(LinDiffOp::parse("D^2 + H").unwrap().is_self_adjoint());
}

#[test]
fn non_monic_divisor_rejected() {
    let a = LinDiffOp::d_pow(3);
    assert!(a.divide(&LinDiffOp::parse("2*D").unwrap()).is_err());
    assert!(a.divide(&LinDiffOp::identity()).is_err());
}

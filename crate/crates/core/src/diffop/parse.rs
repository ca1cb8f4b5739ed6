use crate::symexpr::parse::{parse_nodes, Node};
use crate::symexpr::Expr;

use super::{DiffOpError, LinDiffOp};

/// Products are evaluated as compositions, left to right, so `G*D` is `G D`
/// while `D*G` is `G D + G'`.
pub(super) fn parse_operator(text: &str) -> Result<LinDiffOp, DiffOpError> {
    eval(&parse_nodes(text, true)?)
}

fn eval(node: &Node) -> Result<LinDiffOp, DiffOpError> {
    Ok(match node {
        Node::D => LinDiffOp::d_pow(1),
        Node::Sum(ts) => {
            let mut acc = LinDiffOp::zero();
            for t in ts {
                acc = acc.add(&eval(t)?);
            }
            acc
        }
        Node::Product(fs) => {
            let mut acc = LinDiffOp::identity();
            for f in fs {
                acc = acc.compose(&eval(f)?);
            }
            acc
        }
        Node::Pow(b, e) => {
            let base = eval(b)?;
            let mut acc = LinDiffOp::identity();
            for _ in 0..*e {
                acc = acc.compose(&base);
            }
            acc
        }
        Node::Apply(..) | Node::Const(_) | Node::Var(_) | Node::Func(_) => {
            let e: Expr = node.to_expr().ok_or(DiffOpError::OperatorInFunction)?;
            LinDiffOp::scalar(e)?
        }
    })
}

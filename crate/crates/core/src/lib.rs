//! Linear ordinary differential operators and their linear symmetries.
//!
//! * [`symexpr`]: exact symbolic expressions over `x`, jet variables and
//!   opaque function symbols.
//! * [`diffop`]: the noncommutative ring of operators `Σ a_i D^i`, with
//!   composition, adjoints and division by monic operators.
//! * [`jet`]: total derivative, Lie equation and Poisson-Lie bracket of
//!   generating functions on the k-jet.
//! * [`symmetry`]: symmetry test by division, the even/odd grading, symbolic
//!   derivation of the even and odd conditions for `D^2 + G D + H`, and the
//!   structure constants of the resulting Lie algebra.
//! * [`numeric`]: RK4 integration and kernel-transport residuals used to check
//!   symbolic claims on concrete equations.

pub mod diffop;
pub mod jet;
pub mod numeric;
pub mod symexpr;
pub mod symmetry;

pub use diffop::{DiffOpError, DivisionResult, LinDiffOp};
pub use jet::{GenFunc, JetContext, JetError, ShuffleField};
pub use symexpr::{Elementary, Expr, ExprError, FuncSym, FuncTable, Rational, Var};

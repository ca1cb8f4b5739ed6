//! Numeric oracles: fixed-step RK4 for linear ODEs, operators applied along
//! numeric solutions, and the residual `max |L(Δh)|` that checks whether `Δ`
//! maps solutions of `L` to solutions.
//!
//! Derivatives beyond the state vector are never finite-differenced: for
//! `h^(m) = −Σ a_i h^(i)` every higher derivative follows by differentiating
//! the relation, with coefficient derivatives taken symbolically.

mod compare;
mod gauge;

use std::io::Write;

use serde::Serialize;
use thiserror::Error;

use crate::diffop::LinDiffOp;
use crate::symexpr::eval::eval_poly_at;
use crate::symexpr::poly::Poly;
use crate::symexpr::{ExprError, FuncTable};
use crate::symmetry::SymmetryError;

pub use compare::{compare_ltilde_variants, LtildeComparison, Variant, VariantRow};
pub use gauge::{cumulative_simpson, gauge_transport, GaugeReport};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NumericError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("non-finite value at x = {x}")]
    NonFinite { x: f64 },
    #[error("`{0}` must be monic of order at least 1")]
    NotMonic(String),
    #[error("expected {expected} initial values, got {got}")]
    InitLength { expected: usize, got: usize },
    #[error("potential must be a non-negative rational constant, got `{0}`")]
    UnsupportedPotential(String),
    #[error("csv export failed: {0}")]
    Csv(String),
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error(transparent)]
    Symmetry(#[from] SymmetryError),
}

/// Uniform samples `x0, x0 + step, ..., x1`. The requested step is shrunk so
/// that it divides the interval exactly.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Grid {
    pub x0: f64,
    pub x1: f64,
    pub step: f64,
    #[serde(skip)]
    intervals: usize,
}

impl Grid {
    pub fn new(x0: f64, x1: f64, step: f64) -> Result<Grid, NumericError> {
        let bad = |why: &str| Err(NumericError::InvalidGrid(why.to_string()));
        if !(x0.is_finite() && x1.is_finite() && step.is_finite()) {
            return bad("bounds and step must be finite");
        }
        if x1 <= x0 {
            return bad("x1 must exceed x0");
        }
        if step <= 0.0 {
            return bad("step must be positive");
        }
        let n = ((x1 - x0) / step - 1e-9).ceil().max(1.0);
        if n > 1e8 {
            return bad("too many grid points");
        }
        let intervals = n as usize;
        Ok(Grid {
            x0,
            x1,
            step: (x1 - x0) / intervals as f64,
            intervals,
        })
    }

    pub fn intervals(&self) -> usize {
        self.intervals
    }

    /// Number of sample points.
    pub fn len(&self) -> usize {
        self.intervals + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn x(&self, i: usize) -> f64 {
        if i == self.intervals {
            self.x1
        } else {
            self.x0 + i as f64 * self.step
        }
    }

    pub fn xs(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.len()).map(|i| self.x(i))
    }
}

/// An operator with numeric closures for its function symbols.
#[derive(Clone, Debug)]
pub struct NumericOperator {
    op: LinDiffOp,
    funcs: FuncTable,
    polys: Vec<Poly>,
}

impl NumericOperator {
    pub fn new(op: LinDiffOp, funcs: FuncTable) -> NumericOperator {
        let polys = op.polys().to_vec();
        NumericOperator { op, funcs, polys }
    }

    /// For operators whose coefficients are closed forms in `x`.
    pub fn closed_form(op: LinDiffOp) -> NumericOperator {
        NumericOperator::new(op, FuncTable::new())
    }

    pub fn op(&self) -> &LinDiffOp {
        &self.op
    }

    pub fn funcs(&self) -> &FuncTable {
        &self.funcs
    }

    fn order(&self) -> usize {
        self.op.order().unwrap_or(0)
    }

    fn eval(&self, p: &Poly, x: f64) -> Result<f64, NumericError> {
        Ok(eval_poly_at(p, x, &self.funcs)?)
    }

    /// `tower[i][s]` = `a_i^(s)` for `s <= depth`.
    fn tower(&self, depth: usize) -> Vec<Vec<Poly>> {
        self.polys
            .iter()
            .map(|p| {
                let mut v = vec![p.clone()];
                for _ in 0..depth {
                    let next = v.last().unwrap().diff_x();
                    v.push(next);
                }
                v
            })
            .collect()
    }

    fn eval_tower(&self, tower: &[Vec<Poly>], x: f64) -> Result<Vec<Vec<f64>>, NumericError> {
        tower
            .iter()
            .map(|t| t.iter().map(|p| self.eval(p, x)).collect())
            .collect()
    }
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Solution samples of a monic order-`m` equation, with states `(h, ..., h^(m-1))`.
#[derive(Clone, Debug)]
pub struct NumericSolution {
    grid: Grid,
    states: Vec<Vec<f64>>,
    op: NumericOperator,
}

impl NumericSolution {
    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn states(&self) -> &[Vec<f64>] {
        &self.states
    }

    pub fn values(&self) -> Vec<f64> {
        self.states.iter().map(|s| s[0]).collect()
    }

    pub fn last(&self) -> &[f64] {
        self.states.last().expect("grid has at least two points")
    }

    /// `(h, h', ..., h^(depth))` at every sample, higher derivatives taken
    /// from the ODE relation.
    pub fn derivatives(&self, depth: usize) -> Result<Vec<Vec<f64>>, NumericError> {
        let m = self.op.order();
        let tower = self.op.tower(depth.saturating_sub(m));
        self.states
            .iter()
            .enumerate()
            .map(|(idx, s)| {
                let x = self.grid.x(idx);
                let a = self.op.eval_tower(&tower, x)?;
                let mut h: Vec<f64> = s.clone();
                for j in 0..=depth.saturating_sub(m) {
                    if h.len() > depth {
                        break;
                    }
                    // h^(m+j) = −Σ_i Σ_l C(j,l) a_i^(j−l) h^(i+l), over i < m.
                    let mut v = 0.0;
                    for (i, ai) in a.iter().enumerate().take(m) {
                        for l in 0..=j {
                            v -= binomial(j, l) * ai[j - l] * h[i + l];
                        }
                    }
                    h.push(v);
                }
                h.truncate(depth + 1);
                Ok(h)
            })
            .collect()
    }
}

/// Classical RK4 on the companion system of a monic `L`.
pub fn integrate_linear_ode(
    l: &NumericOperator,
    init: &[f64],
    grid: &Grid,
) -> Result<NumericSolution, NumericError> {
    if !l.op.is_monic() || l.order() == 0 {
        return Err(NumericError::NotMonic(l.op.to_string()));
    }
    let m = l.order();
    if init.len() != m {
        return Err(NumericError::InitLength {
            expected: m,
            got: init.len(),
        });
    }
    let rhs = |x: f64, y: &[f64]| -> Result<Vec<f64>, NumericError> {
        let mut dy = Vec::with_capacity(m);
        dy.extend_from_slice(&y[1..]);
        let mut top = 0.0;
        for (i, p) in l.polys.iter().enumerate().take(m) {
            if !p.is_zero() {
                top -= l.eval(p, x)? * y[i];
            }
        }
        dy.push(top);
        Ok(dy)
    };
    let axpy = |y: &[f64], k: &[f64], s: f64| -> Vec<f64> {
        y.iter().zip(k).map(|(a, b)| a + s * b).collect()
    };
    let h = grid.step;
    let mut states = Vec::with_capacity(grid.len());
    states.push(init.to_vec());
    for i in 0..grid.intervals() {
        let x = grid.x(i);
        let y = states.last().unwrap();
        let k1 = rhs(x, y)?;
        let k2 = rhs(x + h / 2.0, &axpy(y, &k1, h / 2.0))?;
        let k3 = rhs(x + h / 2.0, &axpy(y, &k2, h / 2.0))?;
        let k4 = rhs(x + h, &axpy(y, &k3, h))?;
        let next: Vec<f64> = (0..m)
            .map(|j| y[j] + h / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]))
            .collect();
        if next.iter().any(|v| !v.is_finite()) {
            return Err(NumericError::NonFinite { x: grid.x(i + 1) });
        }
        states.push(next);
    }
    Ok(NumericSolution {
        grid: *grid,
        states,
        op: l.clone(),
    })
}

/// Samples of `g = Δ(h)` with `g, g', ..., g^(extra)` at each point.
#[derive(Clone, Debug, PartialEq)]
pub struct SampledFunction {
    pub grid: Grid,
    pub values: Vec<Vec<f64>>,
}

impl SampledFunction {
    pub fn value(&self, i: usize) -> f64 {
        self.values[i][0]
    }

    pub fn derivative(&self, i: usize, r: usize) -> f64 {
        self.values[i][r]
    }
}

/// `g^(r) = Σ_i Σ_l C(r,l) b_i^(r−l) h^(i+l)` for `r <= extra`.
pub fn apply_op_numeric(
    delta: &NumericOperator,
    sol: &NumericSolution,
    extra: usize,
) -> Result<SampledFunction, NumericError> {
    let k = delta.order();
    let h = sol.derivatives(k + extra)?;
    let tower = delta.tower(extra);
    let mut values = Vec::with_capacity(h.len());
    for (idx, hs) in h.iter().enumerate() {
        let b = delta.eval_tower(&tower, sol.grid.x(idx))?;
        let g: Vec<f64> = (0..=extra)
            .map(|r| {
                let mut v = 0.0;
                for (i, bi) in b.iter().enumerate() {
                    for l in 0..=r {
                        v += binomial(r, l) * bi[r - l] * hs[i + l];
                    }
                }
                v
            })
            .collect();
        values.push(g);
    }
    Ok(SampledFunction {
        grid: sol.grid,
        values,
    })
}

/// Residual run for one initial condition.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct InitResidual {
    pub init: Vec<f64>,
    pub max_residual: f64,
    #[serde(skip)]
    pub residuals: Vec<f64>,
}

/// `|L(Δh)|` at every sample, for the solution `h` with the given initial values.
pub fn kernel_map_run(
    l: &NumericOperator,
    delta: &NumericOperator,
    init: &[f64],
    grid: &Grid,
) -> Result<InitResidual, NumericError> {
    let sol = integrate_linear_ode(l, init, grid)?;
    let m = l.order();
    let g = apply_op_numeric(delta, &sol, m)?;
    let mut residuals = Vec::with_capacity(grid.len());
    for idx in 0..grid.len() {
        let x = grid.x(idx);
        let mut v = g.derivative(idx, m);
        for (i, p) in l.polys.iter().enumerate().take(m) {
            if !p.is_zero() {
                v += l.eval(p, x)? * g.derivative(idx, i);
            }
        }
        residuals.push(v.abs());
    }
    Ok(InitResidual {
        init: init.to_vec(),
        max_residual: residuals.iter().copied().fold(0.0, f64::max),
        residuals,
    })
}

/// `max |L(Δh)|` over the grid for one initial condition.
pub fn kernel_map_residual(
    l: &NumericOperator,
    delta: &NumericOperator,
    init: &[f64],
    grid: &Grid,
) -> Result<f64, NumericError> {
    Ok(kernel_map_run(l, delta, init, grid)?.max_residual)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ResidualReport {
    #[serde(rename = "L")]
    pub l: LinDiffOp,
    pub delta: LinDiffOp,
    pub grid: Grid,
    pub max_residual: f64,
    pub per_init: Vec<InitResidual>,
}

impl ResidualReport {
    /// One row per sample: `init`, `x`, `residual`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), NumericError> {
        let csv_err = |e: csv::Error| NumericError::Csv(e.to_string());
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["init", "x", "residual"]).map_err(csv_err)?;
        for (k, run) in self.per_init.iter().enumerate() {
            for (idx, r) in run.residuals.iter().enumerate() {
                w.write_record([
                    k.to_string(),
                    self.grid.x(idx).to_string(),
                    format!("{r:e}"),
                ])
                .map_err(csv_err)?;
            }
        }
        w.flush().map_err(|e| NumericError::Csv(e.to_string()))
    }
}

/// [`kernel_map_run`] over the unit initial conditions `e_0, ..., e_{m-1}`.
pub fn kernel_map_residual_basis(
    l: &NumericOperator,
    delta: &NumericOperator,
    grid: &Grid,
) -> Result<ResidualReport, NumericError> {
    let m = l.order();
    let mut per_init = Vec::with_capacity(m);
    for k in 0..m {
        let mut init = vec![0.0; m];
        init[k] = 1.0;
        per_init.push(kernel_map_run(l, delta, &init, grid)?);
    }
    Ok(ResidualReport {
        l: l.op.clone(),
        delta: delta.op.clone(),
        grid: *grid,
        max_residual: per_init.iter().map(|r| r.max_residual).fold(0.0, f64::max),
        per_init,
    })
}

/// `max |h(x) − exact(x)|` over the grid.
pub fn max_abs_error(sol: &NumericSolution, exact: impl Fn(f64) -> f64) -> f64 {
    sol.states
        .iter()
        .enumerate()
        .map(|(i, s)| (s[0] - exact(sol.grid.x(i))).abs())
        .fold(0.0, f64::max)
}

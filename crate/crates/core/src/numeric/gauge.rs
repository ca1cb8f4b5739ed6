//! Gauge transport: solutions of `z'' + I z = 0` lifted to solutions of
//! `y'' + G y' + H y = 0` through `y = μ z`, `μ = exp(−½∫G)`.

use serde::Serialize;

use crate::diffop::LinDiffOp;
use crate::symexpr::{Expr, FuncTable};
use crate::symmetry::{normal_form_potential, SymmetryError};

use super::{integrate_linear_ode, Grid, NumericError, NumericOperator};

/// Running integral `F[i] = ∫_{x0}^{x_i} f` of uniformly spaced samples by
/// Simpson's rule; odd-indexed points use the quadratic through the
/// neighbouring three samples.
pub fn cumulative_simpson(f: &[f64], h: f64) -> Vec<f64> {
    let n = f.len();
    let mut out = vec![0.0; n];
    if n < 2 {
        return out;
    }
    if n == 2 {
        out[1] = h * (f[0] + f[1]) / 2.0;
        return out;
    }
    for i in 1..n {
        out[i] = if i % 2 == 0 {
            out[i - 2] + h / 3.0 * (f[i - 2] + 4.0 * f[i - 1] + f[i])
        } else if i + 1 < n {
            out[i - 1] + h / 12.0 * (5.0 * f[i - 1] + 8.0 * f[i] - f[i + 1])
        } else {
            out[i - 1] + h / 12.0 * (-f[i - 2] + 8.0 * f[i - 1] + 5.0 * f[i])
        };
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GaugeReport {
    /// The normal-form potential `I`.
    pub potential: Expr,
    pub grid: Grid,
    pub z_init: [f64; 2],
    /// `max |L(y)|` for `y = μ z`.
    pub max_residual: f64,
    /// `max |y − y_direct|` against RK4 on `L` with matching initial values.
    pub max_deviation: f64,
}

/// Solves `z'' + I z = 0`, forms `y = μ z` with `∫G` from the running Simpson
/// integral, and measures `L(y)` together with the deviation from a direct
/// integration of `L`.
pub fn gauge_transport(
    g: &Expr,
    h: &Expr,
    funcs: &FuncTable,
    z_init: [f64; 2],
    grid: &Grid,
) -> Result<GaugeReport, NumericError> {
    let potential = normal_form_potential(g, h)?;
    let normal = NumericOperator::new(
        LinDiffOp::second_order(&Expr::zero(), &potential).map_err(SymmetryError::from)?,
        funcs.clone(),
    );
    let z = integrate_linear_ode(&normal, &z_init, grid)?.derivatives(2)?;

    let g1 = g.diff()?;
    let mut gv = Vec::with_capacity(grid.len());
    let mut g1v = Vec::with_capacity(grid.len());
    let mut hv = Vec::with_capacity(grid.len());
    for x in grid.xs() {
        gv.push(g.eval_at(x, funcs)?);
        g1v.push(g1.eval_at(x, funcs)?);
        hv.push(h.eval_at(x, funcs)?);
    }
    let int_g = cumulative_simpson(&gv, grid.step);

    let mut y = Vec::with_capacity(grid.len());
    let mut max_residual: f64 = 0.0;
    for i in 0..grid.len() {
        let mu = (-0.5 * int_g[i]).exp();
        let mu1 = -0.5 * gv[i] * mu;
        let mu2 = (-0.5 * g1v[i] + 0.25 * gv[i] * gv[i]) * mu;
        let (z0, z1, z2) = (z[i][0], z[i][1], z[i][2]);
        let y0 = mu * z0;
        let y1 = mu1 * z0 + mu * z1;
        let y2 = mu2 * z0 + 2.0 * mu1 * z1 + mu * z2;
        max_residual = max_residual.max((y2 + gv[i] * y1 + hv[i] * y0).abs());
        y.push((y0, y1));
    }

    let l = NumericOperator::new(
        LinDiffOp::second_order(g, h).map_err(SymmetryError::from)?,
        funcs.clone(),
    );
    let direct = integrate_linear_ode(&l, &[y[0].0, y[0].1], grid)?;
    let max_deviation = direct
        .states()
        .iter()
        .zip(&y)
        .map(|(s, (y0, _))| (s[0] - y0).abs())
        .fold(0.0, f64::max);

    Ok(GaugeReport {
        potential,
        grid: *grid,
        z_init,
        max_residual,
        max_deviation,
    })
}

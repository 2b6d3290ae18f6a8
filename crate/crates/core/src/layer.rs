//! Boundary-layer functions `φ(k, σ)` built from the distance to the
//! boundary, and the analytic p(x)-Laplacian of `μφ`.
//!
//! With `d` the boundary distance, `m = 2/(p⁻ − 1)` and `L = 2δ − σ`:
//!
//! ```text
//! φ = e^{kd} − 1                                     d < σ
//! φ = e^{kσ} − 1 + k e^{kσ} L/(m+1) [1 − s^{m+1}]    σ ≤ d < 2δ,  s = (2δ − d)/L
//! φ = e^{kσ} − 1 + k e^{kσ} L/(m+1)                  2δ ≤ d
//! ```
//!
//! The middle branch is the closed form of `∫_σ^d k e^{kσ} ((2δ−t)/L)^m dt`.

use alloc::vec::Vec;

use alloc::format;
use alloc::sync::Arc;

use crate::error::{Error, Result};
use crate::grid::{boundary_distance, ExponentField, Grid, GridFunction};
use crate::math::{exp, hypot, ln, powf};

/// Parameters of `μφ(k, σ)`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct BoundaryLayerParams {
    pub k: f64,
    /// `ln 2 / k`, so that `e^{kσ} = 2`.
    pub sigma: f64,
    /// Half-width of the transition band.
    pub delta: f64,
    /// `e^{−ak}`.
    pub mu: f64,
    pub a: f64,
}

impl BoundaryLayerParams {
    /// `σ = ln2/k`, `μ = e^{−ak}`.
    pub fn new(k: f64, delta: f64, a: f64) -> Result<Self> {
        if !(k > 0.0 && k.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "k must be positive, got {k}"
            )));
        }
        if !(delta > 0.0 && a > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "need δ > 0 and a > 0, got δ = {delta}, a = {a}"
            )));
        }
        let params = Self {
            k,
            sigma: core::f64::consts::LN_2 / k,
            delta,
            mu: exp(-a * k),
            a,
        };
        params.validate()?;
        Ok(params)
    }

    /// Same `k, σ, δ, a` with another scale `μ`.
    pub fn with_mu(self, mu: f64) -> Self {
        Self { mu, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma > 0.0 && self.sigma < self.delta) {
            return Err(Error::InvalidArgument(format!(
                "boundary layer needs 0 < σ < δ, got σ = {}, δ = {}",
                self.sigma, self.delta
            )));
        }
        if !(self.mu > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "μ must be positive, got {}",
                self.mu
            )));
        }
        Ok(())
    }
}

/// `a = min{p₁⁻ − 1, p₂⁻ − 1} / max{max|∇p₁| + 1, max|∇p₂| + 1}`.
pub fn exponent_ratio_constant(p1: &ExponentField, p2: &ExponentField) -> f64 {
    let num = (p1.inf() - 1.0).min(p2.inf() - 1.0);
    let den = (p1.max_gradient() + 1.0).max(p2.max_gradient() + 1.0);
    num / den
}

/// Default band width: a sixth of the shorter side.
pub fn default_delta(grid: &Grid) -> f64 {
    grid.min_side() / 6.0
}

/// `φ` as a function of the distance `d`, for a given `p⁻`.
pub fn layer_profile(d: f64, params: &BoundaryLayerParams, p_minus: f64) -> f64 {
    let BoundaryLayerParams {
        k, sigma, delta, ..
    } = *params;
    let eks = exp(k * sigma);
    if d < sigma {
        return exp(k * d) - 1.0;
    }
    let m = 2.0 / (p_minus - 1.0);
    let len = 2.0 * delta - sigma;
    let s = if d < 2.0 * delta {
        (2.0 * delta - d) / len
    } else {
        0.0
    };
    eks - 1.0 + k * eks * len / (m + 1.0) * (1.0 - powf(s, m + 1.0))
}

/// `φ_i` on the grid (without the factor `μ`).
pub fn boundary_layer(
    params: &BoundaryLayerParams,
    p: &ExponentField,
    grid: &Arc<Grid>,
) -> Result<GridFunction> {
    params.validate()?;
    if p.grid() != grid {
        return Err(Error::GridMismatch);
    }
    let d = boundary_distance(grid);
    d.map(|dk| layer_profile(dk, params, p.inf()))
}

/// Unit gradient of `d` at node `k` and whether the node lies within one
/// mesh width of a ridge of `d` (where two sides are equally near and `d`
/// is not differentiable).
fn distance_gradient(grid: &Grid, k: usize) -> ([f64; 2], bool) {
    let pt = grid.point(k);
    let mut sides: Vec<(f64, [f64; 2])> = Vec::with_capacity(4);
    for axis in 0..grid.dim() {
        let (lo, hi) = grid.bounds(axis);
        let mut e = [0.0; 2];
        e[axis] = 1.0;
        sides.push((pt[axis] - lo, e));
        e[axis] = -1.0;
        sides.push((hi - pt[axis], e));
    }
    sides.sort_by(|a, b| a.0.total_cmp(&b.0));
    let h = (0..grid.dim()).map(|a| grid.h(a)).fold(0.0, f64::max);
    (sides[0].1, sides[1].0 - sides[0].0 <= h)
}

/// Analytic `−Δ_{p(x)}(μφ)` on the grid.
#[derive(Debug, Clone)]
pub struct LayerLaplacian {
    pub values: GridFunction,
    /// Interior nodes within one mesh width of a ridge of `d`, where the
    /// formula (which assumes `Δd = 0`) does not apply.
    pub flagged: Vec<usize>,
}

impl LayerLaplacian {
    pub fn is_flagged(&self, k: usize) -> bool {
        self.flagged.binary_search(&k).is_ok()
    }
}

/// Evaluates the three-branch analytic formula for `−Δ_{p(x)}(μφ)` with
/// exact `∇d`, `Δd = 0` and finite-difference `∇p`. Returns 0 for
/// `d ≥ 2δ` and on boundary nodes.
pub fn px_laplacian_boundary_layer(
    params: &BoundaryLayerParams,
    p: &ExponentField,
    grid: &Arc<Grid>,
) -> Result<LayerLaplacian> {
    params.validate()?;
    if p.grid() != grid {
        return Err(Error::GridMismatch);
    }
    let BoundaryLayerParams {
        k,
        sigma,
        delta,
        mu,
        ..
    } = *params;
    let d = boundary_distance(grid);
    let pm = p.inf();
    let m = 2.0 / (pm - 1.0);
    let len = 2.0 * delta - sigma;
    let mut values = Vec::with_capacity(grid.len());
    let mut flagged = Vec::new();
    for node in 0..grid.len() {
        if grid.is_boundary(node) {
            values.push(0.0);
            continue;
        }
        let (grad_d, ridge) = distance_gradient(grid, node);
        let dk = d.get(node);
        if ridge && dk < 2.0 * delta {
            flagged.push(node);
        }
        let pk = p.get(node);
        let gp = p.gradient(node);
        let dot = gp[0] * grad_d[0] + gp[1] * grad_d[1];
        let v = if dk < sigma {
            let slope = k * mu * exp(k * dk);
            -k * powf(slope, pk - 1.0) * ((pk - 1.0) + (dk + ln(k * mu) / k) * dot)
        } else if dk < 2.0 * delta {
            let s = (2.0 * delta - dk) / len;
            let base = k * mu * exp(k * sigma);
            let log_slope = ln(base) + m * ln(s);
            let bracket = m * (pk - 1.0) / len - s * log_slope * dot;
            bracket * powf(base, pk - 1.0) * powf(s, m * (pk - 1.0) - 1.0)
        } else {
            0.0
        };
        values.push(v);
    }
    Ok(LayerLaplacian {
        values: GridFunction::new(grid.clone(), values)?,
        flagged,
    })
}

/// Smallest slack of the inner-layer sign condition
/// `|d + ln(kμ)/k|·|∇p|·|∇d| < p⁻ − 1` over nodes with `d < σ`;
/// positive when the condition holds everywhere there.
pub fn negative_condition_margin(params: &BoundaryLayerParams, p: &ExponentField) -> f64 {
    let grid = p.grid();
    let d = boundary_distance(grid);
    let shift = ln(params.k * params.mu) / params.k;
    let mut margin = f64::INFINITY;
    for &node in grid.interior() {
        let dk = d.get(node);
        if dk >= params.sigma {
            continue;
        }
        let g = p.gradient(node);
        let lhs = (dk + shift).abs() * hypot(g[0], g[1]);
        margin = margin.min(p.inf() - 1.0 - lhs);
    }
    margin
}

/// `k^{p⁻−1} e^{−ak(p⁻−1−e)} |ln(k e^{−ak})|`, the `k`-dependence of the
/// band estimate for `−Δ(μφ)` divided by the size of the right-hand side.
/// It tends to 0 as `k → ∞` whenever `e < p⁻ − 1`.
pub fn layer_decay(k: f64, p_minus: f64, a: f64, exponent_sum: f64) -> f64 {
    powf(k, p_minus - 1.0) * exp(-a * k * (p_minus - 1.0 - exponent_sum)) * (ln(k) - a * k).abs()
}

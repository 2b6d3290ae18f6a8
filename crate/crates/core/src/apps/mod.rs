//! The three problem families: a sublinear system, a concave-convex system
//! and a logistic-type system.
//!
//! Each `*_setup` validates the exponent conditions of its existence result
//! (as hard gates naming the violated inequality), builds the
//! [`SystemSpec`], constructs a candidate ordered pair and certifies it with
//! [`verify_with`](crate::subsuper::verify_with).

pub mod concave_convex;
pub mod logistic;
pub mod sublinear;

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::grid::{ExponentField, GridFunction};
use crate::layer::{boundary_layer, BoundaryLayerParams};
use crate::math::powf;
use crate::solver::{ConstantRhsCache, SolverOptions};
use crate::subsuper::VerifyOptions;
use crate::system::{sample_interval, SystemSpec};

/// Ladders and tolerances of the parameter searches.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct SearchOptions {
    /// Candidate `k` values, increasing.
    pub k_ladder: Vec<f64>,
    /// Largest binary exponent `e` tried for `λ = 2^e`.
    pub lambda_max_exp: i32,
    /// Band half-width; `None` uses a sixth of the shorter side.
    pub delta: Option<f64>,
    pub verify: VerifyOptions,
    pub solver: SolverOptions,
}

impl Default for SearchOptions {
    fn default() -> Self {
        Self {
            k_ladder: (1..=12).map(|e| powf(2.0, e as f64)).collect(),
            lambda_max_exp: 120,
            delta: None,
            verify: VerifyOptions::default(),
            solver: SolverOptions::default(),
        }
    }
}

/// Hard gate for a named inequality.
pub(crate) fn gate(ok: bool, name: &str, detail: String) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::hypothesis(name, detail))
    }
}

/// The subsolution candidates `(μφ₁, μφ₂)`.
pub fn layer_lower_pair(
    layer: &BoundaryLayerParams,
    spec: &SystemSpec,
) -> Result<[GridFunction; 2]> {
    let grid = spec.grid();
    let f = |i: usize| -> Result<GridFunction> {
        Ok(boundary_layer(layer, &spec.equations[i].p, grid)?.scale(layer.mu))
    };
    Ok([f(0)?, f(1)?])
}

/// Lower bound of `A` on `[t_lo, ∞)` for a coefficient tending to `limit`:
/// scans `a₁ = 2^m` until `A(x, t) ≥ limit/2` for sampled `t ≥ a₁`, then
/// returns `(a₁, min{min A on [t_lo, a₁], limit/2})`.
pub fn coefficient_floor(spec: &SystemSpec, t_lo: f64, limit: f64) -> Result<(f64, f64)> {
    if !(t_lo > 0.0 && limit > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "coefficient floor needs t_lo > 0 and a positive limit, got {t_lo}, {limit}"
        )));
    }
    let len = spec.grid().len();
    let min_on = |ts: &[f64]| -> Result<f64> {
        let mut m = f64::INFINITY;
        for &t in ts {
            for k in 0..len {
                m = m.min(spec.coefficient(k, t)?);
            }
        }
        Ok(m)
    };
    let mut a1 = t_lo.max(1.0);
    let mut found = false;
    for _ in 0..200 {
        let tail = sample_interval(a1, a1 * 1e6, 25);
        if min_on(&tail)? >= 0.5 * limit {
            found = true;
            break;
        }
        a1 *= 2.0;
    }
    if !found {
        return Err(Error::SearchExhausted(format!(
            "A(x, t) does not reach half its limit {limit} for t up to {a1:e}"
        )));
    }
    let m = min_on(&sample_interval(t_lo, a1, 65))?;
    Ok((a1, m.min(0.5 * limit)))
}

/// Numerical stand-in for the growth constant `K` of `‖z_M‖_∞ ≤ K M^{1/(p⁻−1)}`
/// (`M ≥ 1`): the largest ratio over `M = 2^0, …, 2^{max_exp}` and both
/// exponents, at least 1.
pub fn growth_constant(
    p: [&ExponentField; 2],
    max_exp: i32,
    cache: &mut ConstantRhsCache,
    opts: &SolverOptions,
) -> Result<f64> {
    let mut k: f64 = 1.0;
    for pi in p {
        let e = 1.0 / (pi.inf() - 1.0);
        for m in 0..=max_exp {
            let big_m = powf(2.0, m as f64);
            let z = cache.solve(big_m, pi, opts)?;
            k = k.max(z.u.max_abs() / powf(big_m, e));
        }
    }
    Ok(k)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{build_grid, ExponentKind};
    use crate::system::{Equation, Regime};
    use alloc::sync::Arc;

    fn spec_with_a(a: crate::system::Coefficient) -> SystemSpec {
        let grid = build_grid(1, 17, &[(0.0, 1.0)]).unwrap();
        let ef = |v: f64, kind| ExponentField::constant(grid.clone(), v, kind).unwrap();
        let eq = Equation {
            p: ef(2.0, ExponentKind::Laplacian),
            q: ef(2.0, ExponentKind::Lebesgue),
            r: ef(2.0, ExponentKind::Lebesgue),
            s: ef(2.0, ExponentKind::Lebesgue),
            alpha: ef(0.0, ExponentKind::Nonnegative),
            gamma: ef(0.0, ExponentKind::Nonnegative),
            f: Arc::new(|_, _, _| 1.0),
            g: Arc::new(|_, _, _| 0.0),
        };
        SystemSpec {
            equations: [eq.clone(), eq],
            a,
            regime: Regime::Positive,
            monotone: true,
            name: String::from("t"),
        }
    }

    #[test]
    fn coefficient_floor_of_saturating_coefficient() {
        // A = t/(1+t) → 1: A ≥ 1/2 exactly from t = 1 on.
        let spec = spec_with_a(Arc::new(|_, t| t / (1.0 + t)));
        let (a1, floor) = coefficient_floor(&spec, 1e-3, 1.0).unwrap();
        assert_eq!(a1, 1.0);
        assert!((floor - 1e-3 / (1.0 + 1e-3)).abs() < 1e-15);
        // Never reaching half the claimed limit exhausts the scan.
        let spec = spec_with_a(Arc::new(|_, _| 0.1));
        assert!(matches!(
            coefficient_floor(&spec, 1e-3, 1.0),
            Err(Error::SearchExhausted(_))
        ));
    }

    #[test]
    fn growth_constant_of_the_laplacian_is_the_torsion_maximum() {
        let spec = spec_with_a(Arc::new(|_, _| 1.0));
        let p = &spec.equations[0].p;
        let mut cache = ConstantRhsCache::new();
        let k = growth_constant([p, p], 3, &mut cache, &SolverOptions::default()).unwrap();
        // z_M = M x(1−x)/2 exactly on the grid, max 1/8 < 1.
        assert_eq!(k, 1.0);
        assert_eq!(cache.len(), 4);
    }
}

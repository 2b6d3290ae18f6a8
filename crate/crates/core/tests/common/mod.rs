#![allow(dead_code)]

use std::sync::Arc;

use pxlap_core::apps::sublinear::{sublinear_setup, SublinearParams, SublinearSetup};
use pxlap_core::apps::SearchOptions;
use pxlap_core::grid::{build_grid, ExponentField, ExponentKind, Grid, GridFunction};
use pxlap_core::system::{Coefficient, Regime};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn line(n: usize) -> Arc<Grid> {
    build_grid(1, n, &[(0.0, 1.0)]).unwrap()
}

pub fn field(grid: &Arc<Grid>, expr: &str, kind: ExponentKind) -> ExponentField {
    ExponentField::from_expr(expr, grid.clone(), kind).unwrap()
}

/// Sublinear preset: `p = 2.5 + 0.5x`, all auxiliary exponents 2 and the
/// powers `α = β = γ = e`.
pub fn sublinear_params(
    grid: &Arc<Grid>,
    e: f64,
    a: Coefficient,
    regime: Regime,
) -> SublinearParams {
    let p = || field(grid, "2.5 + 0.5*x", ExponentKind::Laplacian);
    let two = || field(grid, "2", ExponentKind::Lebesgue);
    let pow = || ExponentField::constant(grid.clone(), e, ExponentKind::Nonnegative).unwrap();
    SublinearParams {
        p: [p(), p()],
        q: [two(), two()],
        r: [two(), two()],
        alpha: [pow(), pow()],
        beta: [pow(), pow()],
        gamma: [pow(), pow()],
        a,
        regime,
    }
}

pub fn sublinear_a1(n: usize, a0: f64) -> SublinearSetup {
    let grid = line(n);
    let params = sublinear_params(
        &grid,
        0.3,
        Arc::new(move |_, _| a0),
        Regime::BoundedBelow { a0 },
    );
    sublinear_setup(&params, &SearchOptions::default()).unwrap()
}

/// `lower + s (upper − lower)` with `s ∈ [lo, hi]` drawn per node.
pub fn in_box(
    rng: &mut ChaCha8Rng,
    lower: &GridFunction,
    upper: &GridFunction,
    lo: f64,
    hi: f64,
) -> GridFunction {
    lower
        .zip_map(upper, |l, u| l + rng.gen_range(lo..=hi) * (u - l))
        .unwrap()
}

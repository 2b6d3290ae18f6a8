//! Numerical machinery for nonlocal elliptic systems driven by the
//! p(x)-Laplacian.
//!
//! The crate is `no_std` (it needs `alloc`) and covers:
//!
//! - [`grid`]: uniform grids on intervals and rectangles, nodal fields,
//!   exponent fields and the boundary-distance function;
//! - [`expr`]: the small coefficient expression language;
//! - [`lebesgue`]: modulars, Luxemburg norms and the variable-exponent
//!   norm/modular diagnostics;
//! - [`operator`] and [`solver`]: the discrete p(x)-Laplacian, its energy and
//!   the Dirichlet solver;
//! - [`layer`] and [`subsuper`]: explicit boundary-layer subsolutions and
//!   verification of ordered sub-supersolution pairs;
//! - [`system`] and [`picard`]: truncations, nonlocal right-hand sides, the
//!   fixed-point map and its Picard iteration;
//! - [`apps`]: the sublinear, concave-convex and logistic problem families.

#![no_std]
#![warn(missing_debug_implementations)]
// `!(x > 0.0)` is how NaN is rejected along with nonpositive values, and
// stencil code reads best with index loops.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

extern crate alloc;

mod banded;
pub mod error;
pub mod expr;
pub mod grid;
pub mod layer;
pub mod lebesgue;
pub mod math;
pub mod operator;
pub mod picard;
pub mod solver;
pub mod subsuper;
pub mod system;

pub mod apps;

pub use error::{Error, Result};
pub use grid::{
    boundary_distance, build_grid, eval_field, ExponentField, ExponentKind, Grid, GridFunction,
    Point,
};
pub use lebesgue::{luxemburg_norm, modular};
pub use operator::{apply_px_laplacian, energy};
pub use solver::{solve_constant_rhs, solve_dirichlet, DirichletSolution, SolverOptions};

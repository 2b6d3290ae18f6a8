//! Uniform grids on an interval or a rectangle, nodal fields on them, and
//! exponent fields with cached extrema.

use alloc::format;
use alloc::sync::Arc;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::expr::Expr;

/// A point of the domain. The second coordinate is zero on 1-D grids.
pub type Point = [f64; 2];

/// Uniform tensor grid over `(a, b)` or `(a, b) x (c, d)`.
///
/// Nodes are numbered row-major with the x index running fastest.
#[derive(Clone)]
pub struct Grid {
    dim: usize,
    n: usize,
    bounds: [(f64, f64); 2],
    h: [f64; 2],
    interior: Vec<usize>,
    boundary: Vec<usize>,
    /// Position of each node inside `interior`, `usize::MAX` for boundary nodes.
    interior_pos: Vec<usize>,
    weights: Vec<f64>,
}

impl core::fmt::Debug for Grid {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_struct("Grid")
            .field("dim", &self.dim)
            .field("n", &self.n)
            .field("bounds", &&self.bounds[..self.dim])
            .finish()
    }
}

impl PartialEq for Grid {
    fn eq(&self, other: &Self) -> bool {
        self.dim == other.dim && self.n == other.n && self.bounds == other.bounds
    }
}

/// Builds a uniform grid with `n` nodes per axis.
pub fn build_grid(dim: usize, n: usize, bounds: &[(f64, f64)]) -> Result<Arc<Grid>> {
    if dim != 1 && dim != 2 {
        return Err(Error::InvalidGrid(format!(
            "dimension must be 1 or 2, got {dim}"
        )));
    }
    if n < 3 {
        return Err(Error::InvalidGrid(format!(
            "need at least 3 nodes per axis, got {n}"
        )));
    }
    if bounds.len() != dim {
        return Err(Error::InvalidGrid(format!(
            "expected {dim} axis intervals, got {}",
            bounds.len()
        )));
    }
    let mut b = [(0.0, 0.0); 2];
    let mut h = [0.0; 2];
    for (axis, &(lo, hi)) in bounds.iter().enumerate() {
        if !(lo.is_finite() && hi.is_finite() && hi > lo) {
            return Err(Error::InvalidGrid(format!(
                "degenerate interval ({lo}, {hi}) on axis {axis}"
            )));
        }
        b[axis] = (lo, hi);
        h[axis] = (hi - lo) / (n - 1) as f64;
    }

    let len = if dim == 1 { n } else { n * n };
    let mut interior = Vec::new();
    let mut boundary = Vec::new();
    let mut interior_pos = alloc::vec![usize::MAX; len];
    let mut weights = Vec::with_capacity(len);
    let edge_weight = |i: usize, hh: f64| if i == 0 || i == n - 1 { 0.5 * hh } else { hh };
    for k in 0..len {
        let (i, j) = (k % n, k / n);
        let on_boundary = if dim == 1 {
            i == 0 || i == n - 1
        } else {
            i == 0 || i == n - 1 || j == 0 || j == n - 1
        };
        if on_boundary {
            boundary.push(k);
        } else {
            interior_pos[k] = interior.len();
            interior.push(k);
        }
        let w = if dim == 1 {
            edge_weight(i, h[0])
        } else {
            edge_weight(i, h[0]) * edge_weight(j, h[1])
        };
        weights.push(w);
    }
    Ok(Arc::new(Grid {
        dim,
        n,
        bounds: b,
        h,
        interior,
        boundary,
        interior_pos,
        weights,
    }))
}

impl Grid {
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Nodes per axis.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Total number of nodes.
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn h(&self, axis: usize) -> f64 {
        self.h[axis]
    }

    pub fn bounds(&self, axis: usize) -> (f64, f64) {
        self.bounds[axis]
    }

    pub fn interior(&self) -> &[usize] {
        &self.interior
    }

    pub fn boundary(&self) -> &[usize] {
        &self.boundary
    }

    pub fn is_boundary(&self, k: usize) -> bool {
        self.interior_pos[k] == usize::MAX
    }

    /// Position of node `k` in the interior list.
    pub fn interior_position(&self, k: usize) -> Option<usize> {
        let pos = self.interior_pos[k];
        (pos != usize::MAX).then_some(pos)
    }

    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.n + i
    }

    pub fn ij(&self, k: usize) -> (usize, usize) {
        (k % self.n, k / self.n)
    }

    fn coord(&self, axis: usize, i: usize) -> f64 {
        let (lo, hi) = self.bounds[axis];
        if i == self.n - 1 {
            hi
        } else {
            lo + (hi - lo) * i as f64 / (self.n - 1) as f64
        }
    }

    pub fn point(&self, k: usize) -> Point {
        let (i, j) = self.ij(k);
        if self.dim == 1 {
            [self.coord(0, i), 0.0]
        } else {
            [self.coord(0, i), self.coord(1, j)]
        }
    }

    /// Trapezoid weights on nodal values.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// |Ω|.
    pub fn measure(&self) -> f64 {
        (0..self.dim)
            .map(|a| self.bounds[a].1 - self.bounds[a].0)
            .product()
    }

    /// Shorter side of the domain.
    pub fn min_side(&self) -> f64 {
        (0..self.dim)
            .map(|a| self.bounds[a].1 - self.bounds[a].0)
            .fold(f64::INFINITY, f64::min)
    }

    /// Trapezoid rule on nodal values. Every integral in the crate goes
    /// through here.
    pub fn integrate(&self, values: &[f64]) -> f64 {
        debug_assert_eq!(values.len(), self.len());
        self.weights.iter().zip(values).map(|(w, v)| w * v).sum()
    }

    /// Evaluates `f` nodewise.
    pub fn map_points(&self, mut f: impl FnMut(Point) -> f64) -> Vec<f64> {
        (0..self.len()).map(|k| f(self.point(k))).collect()
    }
}

/// Nodal scalar field with finite values.
#[derive(Clone, PartialEq)]
pub struct GridFunction {
    grid: Arc<Grid>,
    values: Vec<f64>,
}

impl core::fmt::Debug for GridFunction {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_struct("GridFunction")
            .field("grid", &self.grid)
            .field("min", &self.min())
            .field("max", &self.max())
            .finish()
    }
}

impl GridFunction {
    pub fn new(grid: Arc<Grid>, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::LengthMismatch {
                expected: grid.len(),
                got: values.len(),
            });
        }
        if let Some(node) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { node });
        }
        Ok(Self { grid, values })
    }

    pub fn constant(grid: Arc<Grid>, c: f64) -> Self {
        assert!(c.is_finite(), "constant field must be finite");
        let values = alloc::vec![c; grid.len()];
        Self { grid, values }
    }

    pub fn zeros(grid: Arc<Grid>) -> Self {
        Self::constant(grid, 0.0)
    }

    pub fn from_fn(grid: Arc<Grid>, f: impl FnMut(Point) -> f64) -> Result<Self> {
        let values = grid.map_points(f);
        Self::new(grid, values)
    }

    /// `c` on interior nodes, zero on the boundary.
    pub fn interior_constant(grid: Arc<Grid>, c: f64) -> Self {
        let mut out = Self::constant(grid, c);
        for &k in out.grid.boundary.clone().iter() {
            out.values[k] = 0.0;
        }
        out
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn get(&self, k: usize) -> f64 {
        self.values[k]
    }

    pub fn same_grid(&self, other: &GridFunction) -> bool {
        Arc::ptr_eq(&self.grid, &other.grid) || *self.grid == *other.grid
    }

    pub(crate) fn check_grid(&self, other: &GridFunction) -> Result<()> {
        if self.same_grid(other) {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }

    pub fn map(&self, mut f: impl FnMut(f64) -> f64) -> Result<Self> {
        Self::new(
            self.grid.clone(),
            self.values.iter().map(|&v| f(v)).collect(),
        )
    }

    pub fn zip_map(
        &self,
        other: &GridFunction,
        mut f: impl FnMut(f64, f64) -> f64,
    ) -> Result<Self> {
        self.check_grid(other)?;
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(&a, &b)| f(a, b))
            .collect();
        Self::new(self.grid.clone(), values)
    }

    pub fn scale(&self, c: f64) -> Self {
        Self {
            grid: self.grid.clone(),
            values: self.values.iter().map(|v| c * v).collect(),
        }
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn integral(&self) -> f64 {
        self.grid.integrate(&self.values)
    }

    /// Max of `|self - other|` over all nodes.
    pub fn max_diff(&self, other: &GridFunction) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }

    /// `self <= other + tol` at every node.
    pub fn le(&self, other: &GridFunction, tol: f64) -> bool {
        self.values
            .iter()
            .zip(&other.values)
            .all(|(a, b)| *a <= b + tol)
    }

    /// Minimum of `other - self`; nonnegative iff `self <= other`.
    pub fn min_gap(&self, other: &GridFunction) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .fold(f64::INFINITY, |m, (a, b)| m.min(b - a))
    }

    /// Node of `values` where `pred` fails first.
    pub fn first_node(&self, mut pred: impl FnMut(usize, f64) -> bool) -> Option<usize> {
        self.values
            .iter()
            .enumerate()
            .find(|(k, v)| pred(*k, **v))
            .map(|(k, _)| k)
    }
}

/// Which admissibility condition an exponent field must meet.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub enum ExponentKind {
    /// Laplacian exponent: `inf p > 1`.
    Laplacian,
    /// Lebesgue exponent for norms (q, r, s): `ess inf >= 1`.
    Lebesgue,
    /// Power exponent (alpha, gamma, beta, eta): nonnegative.
    Nonnegative,
}

/// A nodal exponent with cached `inf` and `sup`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExponentField {
    field: GridFunction,
    inf: f64,
    sup: f64,
    kind: ExponentKind,
}

impl ExponentField {
    pub fn new(field: GridFunction, kind: ExponentKind) -> Result<Self> {
        let inf = field.min();
        let sup = field.max();
        match kind {
            ExponentKind::Laplacian if inf <= 1.0 => {
                return Err(Error::hypothesis(
                    "hypothesis (H)",
                    format!("Laplacian exponent needs inf p > 1, got inf p = {inf}"),
                ))
            }
            ExponentKind::Lebesgue if inf < 1.0 => {
                return Err(Error::hypothesis(
                    "hypothesis (H)",
                    format!("norm exponent needs ess inf >= 1, got {inf}"),
                ))
            }
            ExponentKind::Nonnegative if inf < 0.0 => {
                return Err(Error::hypothesis(
                    "hypothesis (H)",
                    format!("power exponent must be nonnegative, got min {inf}"),
                ))
            }
            _ => {}
        }
        Ok(Self {
            field,
            inf,
            sup,
            kind,
        })
    }

    pub fn constant(grid: Arc<Grid>, value: f64, kind: ExponentKind) -> Result<Self> {
        Self::new(GridFunction::constant(grid, value), kind)
    }

    pub fn from_expr(text: &str, grid: Arc<Grid>, kind: ExponentKind) -> Result<Self> {
        Self::new(eval_field(text, grid)?, kind)
    }

    pub fn field(&self) -> &GridFunction {
        &self.field
    }

    pub fn values(&self) -> &[f64] {
        self.field.values()
    }

    pub fn grid(&self) -> &Arc<Grid> {
        self.field.grid()
    }

    pub fn get(&self, k: usize) -> f64 {
        self.field.get(k)
    }

    /// `p⁻`.
    pub fn inf(&self) -> f64 {
        self.inf
    }

    /// `p⁺`.
    pub fn sup(&self) -> f64 {
        self.sup
    }

    pub fn kind(&self) -> ExponentKind {
        self.kind
    }

    pub fn is_constant(&self) -> bool {
        self.inf == self.sup
    }

    /// Finite-difference gradient at node `k` (central inside, one-sided at
    /// the boundary).
    pub fn gradient(&self, k: usize) -> [f64; 2] {
        nodal_gradient(&self.field, k)
    }

    /// `max |∇p|` over the grid.
    pub fn max_gradient(&self) -> f64 {
        (0..self.field.grid().len())
            .map(|k| {
                let g = self.gradient(k);
                crate::math::hypot(g[0], g[1])
            })
            .fold(0.0, f64::max)
    }
}

pub(crate) fn nodal_gradient(u: &GridFunction, k: usize) -> [f64; 2] {
    let grid = u.grid();
    let n = grid.n();
    let (i, j) = grid.ij(k);
    let v = u.values();
    let diff = |lo: usize, hi: usize, span: f64| (v[hi] - v[lo]) / span;
    let along = |pos: usize, stride: usize, h: f64| {
        if pos == 0 {
            diff(k, k + stride, h)
        } else if pos == n - 1 {
            diff(k - stride, k, h)
        } else {
            diff(k - stride, k + stride, 2.0 * h)
        }
    };
    let gx = along(i, 1, grid.h(0));
    let gy = if grid.dim() == 2 {
        along(j, n, grid.h(1))
    } else {
        0.0
    };
    [gx, gy]
}

/// Distance to the boundary of the interval or rectangle. Exactly zero on
/// boundary nodes.
pub fn boundary_distance(grid: &Arc<Grid>) -> GridFunction {
    let values = (0..grid.len())
        .map(|k| {
            if grid.is_boundary(k) {
                return 0.0;
            }
            let p = grid.point(k);
            (0..grid.dim())
                .map(|a| {
                    let (lo, hi) = grid.bounds(a);
                    (p[a] - lo).min(hi - p[a])
                })
                .fold(f64::INFINITY, f64::min)
        })
        .collect();
    GridFunction {
        grid: grid.clone(),
        values,
    }
}

/// Evaluates a coefficient expression in `x` (and `y`) at every node.
pub fn eval_field(expr_text: &str, grid: Arc<Grid>) -> Result<GridFunction> {
    let expr = Expr::parse(expr_text, &["x", "y"])?;
    let mut values = Vec::with_capacity(grid.len());
    for k in 0..grid.len() {
        let p = grid.point(k);
        let v = expr.eval(&[p[0], p[1]]);
        if !v.is_finite() {
            return Err(Error::NonFiniteEvaluation { node: k });
        }
        values.push(v);
    }
    Ok(GridFunction { grid, values })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn smallest_grid_has_one_interior_node() {
        let g = build_grid(1, 3, &[(0.0, 1.0)]).unwrap();
        assert_eq!(g.interior(), &[1]);
        assert_eq!(g.point(1)[0], 0.5);
        assert_eq!(g.h(0), 0.5);
    }

    #[test]
    fn square_grid_counts() {
        let g = build_grid(2, 5, &[(0.0, 1.0), (0.0, 1.0)]).unwrap();
        assert_eq!(g.len(), 25);
        assert_eq!(g.interior().len(), 9);
        assert_eq!(g.boundary().len(), 16);
        assert_eq!(g.h(0), 0.25);
    }

    #[test]
    fn fine_interval() {
        let g = build_grid(1, 101, &[(0.0, 1.0)]).unwrap();
        assert!((g.h(0) - 0.01).abs() < 1e-15);
        assert_eq!(g.interior().len(), 99);
        assert!((g.measure() - 1.0).abs() < 1e-15);
        let total: f64 = g.weights().iter().sum();
        assert!((total - 1.0).abs() < 1e-13);
    }

    #[test]
    fn rejects_bad_grids() {
        assert!(build_grid(1, 2, &[(0.0, 1.0)]).is_err());
        assert!(build_grid(1, 5, &[(1.0, 1.0)]).is_err());
        assert!(build_grid(3, 5, &[(0.0, 1.0)]).is_err());
        assert!(build_grid(2, 5, &[(0.0, 1.0)]).is_err());
    }

    #[test]
    fn distance_examples() {
        let g = build_grid(1, 3, &[(0.0, 1.0)]).unwrap();
        let d = boundary_distance(&g);
        assert_eq!(d.values(), &[0.0, 0.5, 0.0]);

        let g2 = build_grid(2, 5, &[(0.0, 1.0), (0.0, 1.0)]).unwrap();
        let d2 = boundary_distance(&g2);
        assert_eq!(d2.get(g2.index(1, 2)), 0.25);
        for &k in g2.boundary() {
            assert_eq!(d2.get(k), 0.0);
        }
        for &k in g2.interior() {
            assert!(d2.get(k) > 0.0);
        }
    }

    #[test]
    fn field_expressions() {
        let g = build_grid(1, 3, &[(0.0, 1.0)]).unwrap();
        let c = eval_field("2", g.clone()).unwrap();
        assert!(c.values().iter().all(|&v| v == 2.0));
        let s = eval_field("2 + 0.5*sin(pi*x)", g.clone()).unwrap();
        assert!((s.get(1) - 2.5).abs() < 1e-15);
        let q = eval_field("x*(1-x)", g.clone()).unwrap();
        assert_eq!(q.get(0), 0.0);
        assert_eq!(q.get(2), 0.0);
        assert!(matches!(
            eval_field("log(x)", g),
            Err(Error::NonFiniteEvaluation { node: 0 })
        ));
    }

    #[test]
    fn exponent_gates() {
        let g = build_grid(1, 11, &[(0.0, 1.0)]).unwrap();
        let err =
            ExponentField::from_expr("1 + x", g.clone(), ExponentKind::Laplacian).unwrap_err();
        assert!(alloc::string::ToString::to_string(&err).contains("hypothesis (H)"));
        let p = ExponentField::from_expr("2 + x", g.clone(), ExponentKind::Laplacian).unwrap();
        assert_eq!(p.inf(), 2.0);
        assert_eq!(p.sup(), 3.0);
        assert!((p.max_gradient() - 1.0).abs() < 1e-12);
        assert!(ExponentField::from_expr("x - 0.1", g.clone(), ExponentKind::Nonnegative).is_err());
        assert!(ExponentField::from_expr("0.5", g, ExponentKind::Lebesgue).is_err());
    }

    #[test]
    fn nonfinite_values_rejected() {
        let g = build_grid(1, 3, &[(0.0, 1.0)]).unwrap();
        assert!(matches!(
            GridFunction::new(g, alloc::vec![0.0, f64::NAN, 0.0]),
            Err(Error::NonFinite { node: 1 })
        ));
    }
}

//! Dirichlet solver for `−Δ_{p(x)} u + c u = f`, `u = 0` on the boundary,
//! by minimizing the strictly convex discrete energy.
//!
//! Each step solves with the Hessian of the ε-regularized energy and
//! backtracks on the exact (unregularized) energy, so every accepted step
//! decreases the true energy and convergence is judged on the exact
//! operator. For `p⁻ ≥ 2` this is a damped Newton method. For `p⁻ < 2`
//! the exact Hessian is unbounded where the gradient vanishes, and the
//! regularized Hessian serves only as a preconditioner for gradient
//! descent. The line search sums the energy change element by element, so
//! it keeps resolving descent where `p < 2` makes the flux stiff near a
//! vanishing gradient and the total energy has long stopped changing in
//! its last digits.

use alloc::boxed::Box;
use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::grid::{ExponentField, GridFunction};
use crate::math::{fit_slope, ln};
use crate::operator::PxLaplacian;

/// Tunables of [`solve_dirichlet`].
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct SolverOptions {
    /// Gradient regularization inside the linearization, relative to the
    /// largest discrete gradient of the current iterate.
    pub reg_eps: f64,
    pub max_iter: usize,
    /// Residual tolerance, `‖Lu + cu − f‖_∞ ≤ tol · max(1, ‖f‖_∞)`.
    pub tol: f64,
    /// Backtracking shrink factor.
    pub shrink: f64,
    /// Sufficient-decrease constant.
    pub armijo: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            reg_eps: 1e-8,
            max_iter: 200,
            tol: 1e-10,
            shrink: 0.5,
            armijo: 1e-4,
        }
    }
}

impl SolverOptions {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::InvalidArgument(format!("solver option {what}")));
        if !(self.tol > 0.0) {
            return bad("tol must be positive");
        }
        if !(self.shrink > 0.0 && self.shrink < 1.0) {
            return bad("shrink must lie in (0, 1)");
        }
        if !(self.armijo > 0.0 && self.armijo < 0.5) {
            return bad("armijo must lie in (0, 1/2)");
        }
        if !(self.reg_eps >= 0.0) {
            return bad("reg_eps must be nonnegative");
        }
        if self.max_iter == 0 {
            return bad("max_iter must be positive");
        }
        Ok(())
    }
}

/// Which branch of the solver ran.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub enum SolverMethod {
    Newton,
    PreconditionedDescent,
}

/// Result of a Dirichlet solve, returned also on failure for diagnosis.
#[derive(Debug, Clone)]
pub struct DirichletSolution {
    /// Zero on boundary nodes.
    pub u: GridFunction,
    pub iterations: usize,
    /// `‖Lu + cu − f‖_∞` over interior nodes, unregularized. On success it
    /// is within the tolerance except where `p < 2` and a discrete gradient
    /// nearly vanishes, where the operator's round-off floor is allowed on
    /// top.
    pub final_residual: f64,
    pub energy: f64,
    pub converged: bool,
    pub method: SolverMethod,
    /// Energy at every iterate, starting from the initial guess.
    pub energy_history: Vec<f64>,
    pub residual_history: Vec<f64>,
}

/// Extra knobs used by the fixed-point and logistic loops.
#[derive(Debug, Clone, Default)]
pub struct DirichletProblem<'a> {
    /// Zero-order coefficient `c ≥ 0`.
    pub shift: f64,
    /// Warm start; boundary values are ignored.
    pub initial: Option<&'a GridFunction>,
}

struct State<'a> {
    op: &'a PxLaplacian,
    f: &'a [f64],
    weights: &'a [f64],
    shift: f64,
}

impl State<'_> {
    fn energy(&self, u: &[f64]) -> f64 {
        let mut e = self.op.gradient_energy(u, 0.0);
        for ((w, f), v) in self.weights.iter().zip(self.f).zip(u) {
            e += w * (0.5 * self.shift * v * v - f * v);
        }
        e
    }

    /// `E(u + t·d) − E(u)` and the magnitude of its summed terms.
    fn energy_change(&self, u: &[f64], d: &[f64], t: f64) -> (f64, f64) {
        let (mut sum, mut mag) = self.op.gradient_energy_change(u, d, t);
        for (((w, f), v), dk) in self.weights.iter().zip(self.f).zip(u).zip(d) {
            let c = w * t * dk * (self.shift * (v + 0.5 * t * dk) - f);
            sum += c;
            mag += c.abs();
        }
        (sum, mag)
    }

    fn gradient(&self, u: &[f64]) -> Vec<f64> {
        let mut g = self.op.energy_gradient(u, 0.0);
        for (k, gk) in g.iter_mut().enumerate() {
            *gk += self.weights[k] * (self.shift * u[k] - self.f[k]);
        }
        g
    }

    /// Residual within `tol` at every node, up to the operator's round-off
    /// floor there.
    fn within_tolerance(&self, u: &[f64], grad: &[f64], tol: f64) -> bool {
        let floor = self.op.roundoff_floor(u);
        let grid = self.op.grid();
        grid.interior()
            .iter()
            .all(|&k| (grad[k] / self.weights[k]).abs() <= tol + floor[k])
    }

    /// Interior residual `max |∂E/∂u_k| / w_k`.
    fn residual(&self, grad: &[f64]) -> f64 {
        let grid = self.op.grid();
        grid.interior()
            .iter()
            .map(|&k| (grad[k] / self.weights[k]).abs())
            .fold(0.0, f64::max)
    }
}

fn check_exponent(p: &ExponentField) -> Result<()> {
    if p.inf() <= 1.0 {
        return Err(Error::hypothesis(
            "hypothesis (H)",
            format!("Dirichlet solve needs p⁻ > 1, got {}", p.inf()),
        ));
    }
    Ok(())
}

/// Solves `−Δ_{p(x)} u = f`, `u = 0` on the boundary.
pub fn solve_dirichlet(
    f: &GridFunction,
    p: &ExponentField,
    opts: &SolverOptions,
) -> Result<DirichletSolution> {
    solve_dirichlet_with(f, p, &DirichletProblem::default(), opts)
}

/// [`solve_dirichlet`] with a zero-order shift and an optional warm start.
pub fn solve_dirichlet_with(
    f: &GridFunction,
    p: &ExponentField,
    problem: &DirichletProblem<'_>,
    opts: &SolverOptions,
) -> Result<DirichletSolution> {
    f.check_grid(p.field())?;
    check_exponent(p)?;
    opts.validate()?;
    if !(problem.shift >= 0.0 && problem.shift.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "shift must be nonnegative, got {}",
            problem.shift
        )));
    }
    let op = PxLaplacian::new(p);
    let grid = f.grid().clone();
    let state = State {
        op: &op,
        f: f.values(),
        weights: grid.weights(),
        shift: problem.shift,
    };
    let method = if p.inf() >= 2.0 {
        SolverMethod::Newton
    } else {
        SolverMethod::PreconditionedDescent
    };
    let tol = opts.tol * f.max_abs().max(1.0);

    let mut u = match problem.initial {
        Some(init) => {
            init.check_grid(f)?;
            let mut v = init.values().to_vec();
            for &k in grid.boundary() {
                v[k] = 0.0;
            }
            v
        }
        None => initial_guess(&state)?,
    };

    let mut energy = state.energy(&u);
    let mut grad = state.gradient(&u);
    let mut residual = state.residual(&grad);
    let mut energy_history = alloc::vec![energy];
    let mut residual_history = alloc::vec![residual];
    let mut iterations = 0;

    let mut done = residual <= tol || state.within_tolerance(&u, &grad, tol);
    while !done && iterations < opts.max_iter {
        iterations += 1;
        let Some((trial, change)) = newton_step(&state, &op, &u, &grad, problem.shift, opts) else {
            break;
        };
        u = trial;
        energy += change;
        grad = state.gradient(&u);
        residual = state.residual(&grad);
        energy_history.push(energy);
        residual_history.push(residual);
        done = residual <= tol || state.within_tolerance(&u, &grad, tol);
    }

    let solution = DirichletSolution {
        u: GridFunction::new(grid, u)?,
        iterations,
        final_residual: residual,
        energy,
        converged: done,
        method,
        energy_history,
        residual_history,
    };
    if solution.converged {
        Ok(solution)
    } else {
        Err(Error::NotConverged(Box::new(solution)))
    }
}

/// One damped Newton step on the energy: the regularized Hessian solve and
/// an Armijo backtracking search on the exactly summed energy change.
/// Returns the new iterate and the change, or `None` without descent.
fn newton_step(
    state: &State<'_>,
    op: &PxLaplacian,
    u: &[f64],
    grad: &[f64],
    shift: f64,
    opts: &SolverOptions,
) -> Option<(Vec<f64>, f64)> {
    let interior = op.grid().interior();
    let eps = opts.reg_eps * op.max_gradient(u).max(f64::MIN_POSITIVE);
    let hessian = op.hessian(u, eps, shift, None);
    let rhs: Vec<f64> = interior.iter().map(|&k| -grad[k]).collect();
    let step = hessian.solve(&rhs).ok()?;
    let mut d = alloc::vec![0.0; u.len()];
    for (&k, s) in interior.iter().zip(&step) {
        d[k] = *s;
    }
    let slope: f64 = interior.iter().zip(&step).map(|(&k, s)| grad[k] * s).sum();
    if !(slope < 0.0) {
        return None;
    }
    let mut t = 1.0;
    while t > 1e-14 {
        let (change, mag) = state.energy_change(u, &d, t);
        if change <= opts.armijo * t * slope + 8.0 * f64::EPSILON * mag {
            let trial = u.iter().zip(&d).map(|(a, b)| a + t * b).collect();
            return Some((trial, change));
        }
        t *= opts.shrink;
    }
    None
}

/// Poisson direction scaled by an exact line minimization of the energy.
fn initial_guess(state: &State<'_>) -> Result<Vec<f64>> {
    let grid = state.op.grid();
    let len = grid.len();
    let mut u = alloc::vec![0.0; len];
    if state.f.iter().all(|&v| v == 0.0) {
        return Ok(u);
    }
    let zeros = alloc::vec![0.0; len];
    let poisson = state.op.hessian(&zeros, 0.0, 0.0, Some(2.0));
    let rhs: Vec<f64> = grid
        .interior()
        .iter()
        .map(|&k| state.weights[k] * state.f[k])
        .collect();
    let dir = poisson.solve(&rhs)?;
    let mut v = alloc::vec![0.0; len];
    for (&k, d) in grid.interior().iter().zip(&dir) {
        v[k] = *d;
    }
    // s ↦ E(s v) is convex; its derivative is negative at 0.
    let slope = |s: f64| -> f64 {
        let w: Vec<f64> = v.iter().map(|x| s * x).collect();
        state.gradient(&w).iter().zip(&v).map(|(a, b)| a * b).sum()
    };
    if !(slope(0.0) < 0.0) {
        return Ok(u);
    }
    let mut hi = 1.0;
    while slope(hi) < 0.0 && hi < 1e300 {
        hi *= 4.0;
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if slope(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-12 * hi {
            break;
        }
    }
    let s = 0.5 * (lo + hi);
    for (x, y) in u.iter_mut().zip(&v) {
        *x = s * y;
    }
    Ok(u)
}

/// Solves `−Δ_{p(x)} z = λ`, `z = 0` on the boundary.
pub fn solve_constant_rhs(
    lambda: f64,
    p: &ExponentField,
    opts: &SolverOptions,
) -> Result<DirichletSolution> {
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "λ must be finite and nonnegative, got {lambda}"
        )));
    }
    let f = GridFunction::constant(p.grid().clone(), lambda);
    solve_dirichlet(&f, p, opts)
}

/// Session cache of constant right-hand-side solutions keyed by `(λ, p)`.
#[derive(Debug, Default)]
pub struct ConstantRhsCache {
    entries: BTreeMap<u64, Vec<(ExponentField, DirichletSolution)>>,
}

impl ConstantRhsCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.entries.values().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Cached [`solve_constant_rhs`].
    pub fn solve(
        &mut self,
        lambda: f64,
        p: &ExponentField,
        opts: &SolverOptions,
    ) -> Result<DirichletSolution> {
        let key = lambda.to_bits();
        if let Some(hit) = self
            .entries
            .get(&key)
            .and_then(|v| v.iter().find(|(q, _)| q == p))
        {
            return Ok(hit.1.clone());
        }
        let sol = solve_constant_rhs(lambda, p, opts)?;
        self.entries
            .entry(key)
            .or_default()
            .push((p.clone(), sol.clone()));
        Ok(sol)
    }
}

/// Outcome of the growth-rate check `‖z_λ‖_∞ ≲ λ^{1/(p⁻−1)}`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct FanReport {
    pub lambdas: Vec<f64>,
    pub sup_norms: Vec<f64>,
    /// Least-squares slope of `log ‖z_λ‖_∞` against `log λ`.
    pub slope: f64,
    /// `1/(p⁻ − 1) + 0.05`.
    pub bound: f64,
    pub holds: bool,
}

/// Fits the log-log growth of `‖z_λ‖_∞` and compares it with `1/(p⁻−1)`.
pub fn fan_scaling_check(
    p: &ExponentField,
    lambdas: &[f64],
    opts: &SolverOptions,
) -> Result<FanReport> {
    if lambdas.len() < 3 {
        return Err(Error::InvalidArgument(format!(
            "scaling fit needs at least 3 λ values, got {}",
            lambdas.len()
        )));
    }
    if lambdas.iter().any(|&l| !(l > 0.0)) {
        return Err(Error::InvalidArgument(String::from(
            "λ values must be positive",
        )));
    }
    let mut sup_norms = Vec::with_capacity(lambdas.len());
    for &l in lambdas {
        sup_norms.push(solve_constant_rhs(l, p, opts)?.u.max_abs());
    }
    let xs: Vec<f64> = lambdas.iter().map(|&l| ln(l)).collect();
    let ys: Vec<f64> = sup_norms.iter().map(|&z| ln(z)).collect();
    let slope = fit_slope(&xs, &ys);
    let bound = 1.0 / (p.inf() - 1.0) + 0.05;
    Ok(FanReport {
        lambdas: lambdas.to_vec(),
        sup_norms,
        slope,
        bound,
        holds: slope <= bound,
    })
}

/// Outcome of the discrete comparison principle check.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct ComparisonReport {
    /// `Lu ≤ Lv` on interior nodes and `u ≤ v` on the boundary.
    pub premise_ok: bool,
    /// `min (v − u)` over all nodes.
    pub min_margin: f64,
    /// Premise fails, or `u ≤ v + tol` everywhere.
    pub holds: bool,
}

/// Checks that `−Δ_p u ≤ −Δ_p v` and `u ≤ v` on the boundary force
/// `u ≤ v + tol`.
pub fn comparison_check(
    u: &GridFunction,
    v: &GridFunction,
    p: &ExponentField,
    tol: f64,
) -> Result<ComparisonReport> {
    u.check_grid(v)?;
    u.check_grid(p.field())?;
    let op = PxLaplacian::new(p);
    let lu = op.apply_values(u.values(), 0.0);
    let lv = op.apply_values(v.values(), 0.0);
    let grid = u.grid();
    let scale = lu.iter().chain(&lv).fold(1.0_f64, |m, x| m.max(x.abs()));
    let interior_ok = grid
        .interior()
        .iter()
        .all(|&k| lu[k] <= lv[k] + tol * scale);
    let boundary_ok = grid.boundary().iter().all(|&k| u.get(k) <= v.get(k));
    let premise_ok = interior_ok && boundary_ok;
    let min_margin = u.min_gap(v);
    Ok(ComparisonReport {
        premise_ok,
        min_margin,
        holds: !premise_ok || min_margin >= -tol,
    })
}

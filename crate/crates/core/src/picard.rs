//! The fixed-point map `Φ(λ, z₁, z₂) = (u₁, u₂)`, with `u_i` the solution of
//! `−Δ_{p_i} u_i = λ H_i(T₁z₁, T₂z₂)`, and its Picard iteration.
//!
//! Nonlocal norms are recomputed at every evaluation of `H_i`.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::grid::GridFunction;
use crate::lebesgue::luxemburg_norm;
use crate::operator::PxLaplacian;
use crate::solver::{solve_dirichlet_with, DirichletProblem, SolverOptions};
use crate::subsuper::SubSuperPair;
use crate::system::{nonlocal_rhs, truncate, SystemSpec};

/// Settings of the Picard iteration.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct PicardOptions {
    /// Relaxation `u^{n+1} = (1 − ω) u^n + ω Φ(u^n)`, `ω ∈ (0, 1]`.
    pub omega: f64,
    pub max_iter: usize,
    /// Stop when `‖u_i^{n+1} − u_i^n‖_{p_i} ≤ step_tol · max(1, ‖u_i^{n+1}‖_{p_i})`...
    pub step_tol: f64,
    /// ... and the weak residual is at most `residual_tol`.
    pub residual_tol: f64,
    /// Sandwich tolerance, relative to `max(1, ‖ū_i‖_∞)`.
    pub sandwich_tol: f64,
    pub solver: SolverOptions,
}

impl Default for PicardOptions {
    fn default() -> Self {
        Self {
            omega: 1.0,
            max_iter: 500,
            step_tol: 1e-10,
            residual_tol: 1e-8,
            sandwich_tol: 1e-8,
            solver: SolverOptions {
                max_iter: 400,
                ..SolverOptions::default()
            },
        }
    }
}

impl PicardOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.omega > 0.0 && self.omega <= 1.0) {
            return Err(Error::InvalidArgument(alloc::format!(
                "ω must lie in (0, 1], got {}",
                self.omega
            )));
        }
        if self.max_iter == 0
            || !(self.step_tol > 0.0)
            || !(self.residual_tol > 0.0)
            || !(self.sandwich_tol >= 0.0)
        {
            return Err(Error::InvalidArgument(alloc::string::String::from(
                "Picard iteration needs max_iter > 0 and positive tolerances",
            )));
        }
        self.solver.validate()
    }
}

/// One Picard step.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct IterationRecord {
    pub n: usize,
    pub step_norm_1: f64,
    pub step_norm_2: f64,
    pub residual: f64,
    /// `min_{i,k} min(u_i − u̲_i, ū_i − u_i)` over interior nodes.
    pub margin_min: f64,
}

/// History and verdict of [`solve_system`].
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct IterationTrace {
    pub records: Vec<IterationRecord>,
    pub converged: bool,
    /// `u̲_i − tol ≤ u_i ≤ ū_i + tol` at every node.
    pub sandwich_ok: bool,
    /// `u_i > 0` at every interior node.
    pub positive_ok: bool,
}

impl IterationTrace {
    pub fn iterations(&self) -> usize {
        self.records.len()
    }

    pub fn final_residual(&self) -> f64 {
        self.records.last().map_or(f64::INFINITY, |r| r.residual)
    }
}

fn solve_component(
    i: usize,
    rhs: &GridFunction,
    spec: &SystemSpec,
    warm: Option<&GridFunction>,
    opts: &SolverOptions,
) -> Result<GridFunction> {
    let problem = DirichletProblem {
        shift: 0.0,
        initial: warm,
    };
    let sol = solve_dirichlet_with(rhs, &spec.equations[i].p, &problem, opts)?;
    if !sol.converged {
        return Err(Error::NotConverged(alloc::boxed::Box::new(sol)));
    }
    Ok(sol.u)
}

/// `λ H_i(T₁z₁, T₂z₂)` for both components.
fn truncated_rhs(
    lambda: f64,
    z: [&GridFunction; 2],
    spec: &SystemSpec,
    pair: &SubSuperPair,
) -> Result<[GridFunction; 2]> {
    let t1 = truncate(z[0], &pair.lower[0], &pair.upper[0])?;
    let t2 = truncate(z[1], &pair.lower[1], &pair.upper[1])?;
    let h1 = nonlocal_rhs(0, &t1, &t2, spec)?.scale(lambda);
    let h2 = nonlocal_rhs(1, &t1, &t2, spec)?.scale(lambda);
    Ok([h1, h2])
}

fn map_warm(
    lambda: f64,
    z: [&GridFunction; 2],
    spec: &SystemSpec,
    pair: &SubSuperPair,
    warm: [Option<&GridFunction>; 2],
    opts: &SolverOptions,
) -> Result<[GridFunction; 2]> {
    if lambda == 0.0 {
        let zero = GridFunction::zeros(spec.grid().clone());
        return Ok([zero.clone(), zero]);
    }
    let [h1, h2] = truncated_rhs(lambda, z, spec, pair)?;
    Ok([
        solve_component(0, &h1, spec, warm[0], opts)?,
        solve_component(1, &h2, spec, warm[1], opts)?,
    ])
}

/// `Φ(λ, z₁, z₂)`.
pub fn fixed_point_map(
    lambda: f64,
    z1: &GridFunction,
    z2: &GridFunction,
    spec: &SystemSpec,
    pair: &SubSuperPair,
    opts: &PicardOptions,
) -> Result<(GridFunction, GridFunction)> {
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(Error::InvalidArgument(alloc::format!(
            "λ must be finite and nonnegative, got {lambda}"
        )));
    }
    spec.validate()?;
    let [u1, u2] = map_warm(lambda, [z1, z2], spec, pair, [None, None], &opts.solver)?;
    Ok((u1, u2))
}

/// Largest equation residual `|(L u_i)_k − h_i(x_k)|` over interior nodes,
/// relative to `max(1, ‖h_i‖_∞)`.
///
/// With hat test functions and lumped quadrature the weak residual against
/// `φ_k` is `w_k` times this nodal quantity, so dividing by the test
/// function's mass `w_k` gives a grid-independent scale.
fn residual_against(u: [&GridFunction; 2], h: [&GridFunction; 2], spec: &SystemSpec) -> f64 {
    let grid = spec.grid();
    let mut worst: f64 = 0.0;
    for i in 0..2 {
        let lu = PxLaplacian::new(&spec.equations[i].p).apply_values(u[i].values(), 0.0);
        let scale = h[i].max_abs().max(1.0);
        for &k in grid.interior() {
            let r = (lu[k] - h[i].get(k)).abs() / scale;
            if !(r <= worst) {
                worst = r;
            }
        }
    }
    worst
}

/// Weak-formulation residual of `(u₁, u₂)` for the untruncated system.
pub fn weak_residual(u1: &GridFunction, u2: &GridFunction, spec: &SystemSpec) -> Result<f64> {
    let h1 = nonlocal_rhs(0, u1, u2, spec)?;
    let h2 = nonlocal_rhs(1, u1, u2, spec)?;
    Ok(residual_against([u1, u2], [&h1, &h2], spec))
}

/// `min_{i,k} min(u_i − u̲_i, ū_i − u_i)` over interior nodes (boundary
/// values are pinned, so the gap there is typically exactly zero).
fn sandwich_margin(u: [&GridFunction; 2], pair: &SubSuperPair) -> f64 {
    let mut m = f64::INFINITY;
    for i in 0..2 {
        for &k in u[i].grid().interior() {
            m = m
                .min(u[i].get(k) - pair.lower[i].get(k))
                .min(pair.upper[i].get(k) - u[i].get(k));
        }
    }
    m
}

fn picard(
    lambda: f64,
    start: [GridFunction; 2],
    spec: &SystemSpec,
    pair: &SubSuperPair,
    opts: &PicardOptions,
) -> Result<([GridFunction; 2], IterationTrace)> {
    opts.validate()?;
    spec.validate()?;
    let grid = spec.grid().clone();
    let mut u = start;
    let mut solved: Option<[GridFunction; 2]> = None;
    let mut records = Vec::new();
    let mut converged = false;
    for n in 1..=opts.max_iter {
        let warm = match &solved {
            Some([a, b]) => [Some(a), Some(b)],
            None => [None, None],
        };
        let phi = map_warm(lambda, [&u[0], &u[1]], spec, pair, warm, &opts.solver)?;
        let next: [GridFunction; 2] = if opts.omega == 1.0 {
            phi.clone()
        } else {
            core::array::from_fn(|i| {
                let vals = u[i]
                    .values()
                    .iter()
                    .zip(phi[i].values())
                    .map(|(a, b)| (1.0 - opts.omega) * a + opts.omega * b)
                    .collect();
                GridFunction::new(grid.clone(), vals).expect("same grid")
            })
        };
        let mut steps = [0.0; 2];
        let mut small = true;
        for i in 0..2 {
            let diff = next[i].zip_map(&u[i], |a, b| a - b)?;
            let p = &spec.equations[i].p;
            steps[i] = luxemburg_norm(&diff, p)?;
            small &= steps[i] <= opts.step_tol * luxemburg_norm(&next[i], p)?.max(1.0);
        }
        // Residual of the truncated problem; inside the box this is the
        // residual of the system itself.
        let residual = match truncated_rhs(lambda, [&next[0], &next[1]], spec, pair) {
            Ok([h1, h2]) => residual_against([&next[0], &next[1]], [&h1, &h2], spec),
            Err(_) => f64::INFINITY,
        };
        records.push(IterationRecord {
            n,
            step_norm_1: steps[0],
            step_norm_2: steps[1],
            residual,
            margin_min: sandwich_margin([&next[0], &next[1]], pair),
        });
        solved = Some(phi);
        u = next;
        if small && residual <= opts.residual_tol {
            converged = true;
            break;
        }
    }
    let sandwich_ok = (0..2).all(|i| {
        let tol = opts.sandwich_tol * pair.upper[i].max_abs().max(1.0);
        pair.lower[i].le(&u[i], tol) && u[i].le(&pair.upper[i], tol)
    });
    let positive_ok = (0..2).all(|i| grid.interior().iter().all(|&k| u[i].get(k) > 0.0));
    Ok((
        u,
        IterationTrace {
            records,
            converged,
            sandwich_ok,
            positive_ok,
        },
    ))
}

/// Picard iteration `u^{n+1} = Φ(1, u^n)` from `u⁰ = (u̲₁, u̲₂)`.
///
/// Non-convergence is not an error: the trace reports it.
pub fn solve_system(
    spec: &SystemSpec,
    pair: &SubSuperPair,
    opts: &PicardOptions,
) -> Result<(GridFunction, GridFunction, IterationTrace)> {
    let ([u1, u2], trace) = picard(1.0, pair.lower.clone(), spec, pair, opts)?;
    Ok((u1, u2, trace))
}

/// One row of [`continuum_sweep`].
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct BranchPoint {
    pub lambda: f64,
    /// `‖u_i‖_{p_i}` (Luxemburg).
    pub norm_1: f64,
    pub norm_2: f64,
    pub sup_1: f64,
    pub sup_2: f64,
    pub iterations: usize,
    pub residual: f64,
    pub converged: bool,
}

/// Branch table of [`continuum_sweep`].
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct BranchTable {
    pub points: Vec<BranchPoint>,
    /// Norms nondecreasing along the converged points.
    pub monotone_growth: bool,
    /// The branch starts at `(0, 0)`: zero norms at `λ = 0`, or, without a
    /// `λ = 0` entry, the smallest `λ` carries the smallest norms.
    pub through_origin: bool,
}

/// Follows the fixed points of `Φ(λ, ·)` over increasing `λ`, warm-starting
/// each from the previous one. Per-`λ` failures are recorded and the sweep
/// continues.
pub fn continuum_sweep(
    spec: &SystemSpec,
    pair: &SubSuperPair,
    lambdas: &[f64],
    opts: &PicardOptions,
) -> Result<BranchTable> {
    if lambdas.is_empty() || lambdas.iter().any(|&l| !(l >= 0.0 && l.is_finite())) {
        return Err(Error::InvalidArgument(alloc::string::String::from(
            "sweep needs a nonempty list of finite, nonnegative λ",
        )));
    }
    if lambdas.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidArgument(alloc::string::String::from(
            "sweep λ values must be increasing",
        )));
    }
    opts.validate()?;
    let mut start = pair.lower.clone();
    let mut points = Vec::with_capacity(lambdas.len());
    for &lambda in lambdas {
        let point = match picard(lambda, start.clone(), spec, pair, opts) {
            Ok((u, trace)) => {
                let point = BranchPoint {
                    lambda,
                    norm_1: luxemburg_norm(&u[0], &spec.equations[0].p)?,
                    norm_2: luxemburg_norm(&u[1], &spec.equations[1].p)?,
                    sup_1: u[0].max_abs(),
                    sup_2: u[1].max_abs(),
                    iterations: trace.iterations(),
                    residual: trace.final_residual(),
                    converged: trace.converged,
                };
                if trace.converged && lambda > 0.0 {
                    start = u;
                }
                point
            }
            Err(_) => BranchPoint {
                lambda,
                norm_1: f64::NAN,
                norm_2: f64::NAN,
                sup_1: f64::NAN,
                sup_2: f64::NAN,
                iterations: 0,
                residual: f64::INFINITY,
                converged: false,
            },
        };
        points.push(point);
    }
    let good: Vec<&BranchPoint> = points.iter().filter(|p| p.converged).collect();
    let monotone_growth = good
        .windows(2)
        .all(|w| w[1].norm_1 >= w[0].norm_1 && w[1].norm_2 >= w[0].norm_2);
    let through_origin = match points.first() {
        Some(p) if p.lambda == 0.0 => p.converged && p.norm_1 == 0.0 && p.norm_2 == 0.0,
        Some(first) => good
            .iter()
            .all(|p| p.norm_1 >= first.norm_1 && p.norm_2 >= first.norm_2),
        None => false,
    };
    Ok(BranchTable {
        points,
        monotone_growth,
        through_origin,
    })
}

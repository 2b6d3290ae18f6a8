//! The logistic-type system
//!
//! ```text
//! −A(x, |v|_{r₁}) Δ_{p₁} u = λ f₁(u) |v|_{q₁}^{α₁}
//! −A(x, |u|_{r₂}) Δ_{p₂} v = λ f₂(v) |u|_{q₂}^{α₂}
//! ```
//!
//! with `f_i(0) = f_i(θ_i) = 0 < f_i` on `(0, θ_i)`. The subsolutions are
//! minimizers `z₀, w₀` of the truncated energies
//! `J_i(u) = ∫ |∇u|^{p_i}/p_i − λ̃₀ ∫ F̃_i(u)`, `f̃_i = f_i` on `[0, θ_i]` and
//! 0 elsewhere; the supersolutions are the constants `θ_i`.
//!
//! `J_i` is not convex, so it is minimized by majorization: with `c` above
//! the largest slope of `−λ̃₀ f̃_i`, each step solves the strictly convex
//! problem `−Δ_{p_i} z + c z = λ̃₀ f̃_i(z_old) + c z_old`, which can only
//! lower `J_i`.

use alloc::format;
use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::fmt;

use super::gate;
use crate::error::{Error, Result};
use crate::grid::{boundary_distance, ExponentField, GridFunction};
use crate::layer::default_delta;
use crate::lebesgue::luxemburg_norm;
use crate::math::powf;
use crate::operator::PxLaplacian;
use crate::solver::{solve_dirichlet_with, DirichletProblem, SolverOptions};
use crate::subsuper::{SubSuperPair, SubSuperReport, VerifyOptions};
use crate::system::{pow_nonneg, sample_interval, Coefficient, Equation, Regime, SystemSpec};

/// A scalar reaction `t ↦ f(t)`.
pub type ScalarReaction = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Data of the logistic system.
#[derive(Clone)]
pub struct LogisticParams {
    pub p: [ExponentField; 2],
    pub q: [ExponentField; 2],
    pub r: [ExponentField; 2],
    pub alpha: [ExponentField; 2],
    pub theta: [f64; 2],
    pub f: [ScalarReaction; 2],
    pub a: Coefficient,
}

impl fmt::Debug for LogisticParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("LogisticParams")
            .field(
                "p",
                &[
                    (self.p[0].inf(), self.p[0].sup()),
                    (self.p[1].inf(), self.p[1].sup()),
                ],
            )
            .field("theta", &self.theta)
            .finish_non_exhaustive()
    }
}

/// Tunables of [`logistic_setup`].
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct LogisticOptions {
    /// Band half-width of the seed `φ₀`; `None` uses a sixth of the
    /// shorter side.
    pub delta: Option<f64>,
    /// Stop the majorization loop when the equation residual, relative to
    /// `max(1, ‖λ̃₀ f̃(z)‖_∞)`, is below this.
    pub residual_tol: f64,
    pub max_iter: usize,
    /// Largest binary exponent of the `λ̃₀` scan.
    pub lambda_max_exp: i32,
    pub solver: SolverOptions,
    pub verify: VerifyOptions,
}

impl Default for LogisticOptions {
    fn default() -> Self {
        Self {
            delta: None,
            residual_tol: 1e-9,
            max_iter: 5_000,
            lambda_max_exp: 60,
            solver: SolverOptions::default(),
            verify: VerifyOptions::default(),
        }
    }
}

/// `f̃`: `f` on `(0, θ)`, zero elsewhere (`f(0) = f(θ) = 0` is validated).
fn truncated(
    f: &ScalarReaction,
    theta: f64,
) -> impl Fn(f64) -> f64 + Send + Sync + Clone + 'static {
    let f = f.clone();
    move |t| if t > 0.0 && t < theta { f(t) } else { 0.0 }
}

/// `F̃(t) = ∫₀ᵗ f̃` by composite Simpson with 64 panels.
fn primitive(f: &impl Fn(f64) -> f64, theta: f64, t: f64) -> f64 {
    let b = t.clamp(0.0, theta);
    if b == 0.0 {
        return 0.0;
    }
    const N: usize = 64;
    let h = b / N as f64;
    let mut s = f(0.0) + f(b);
    for i in 1..N {
        s += if i % 2 == 1 { 4.0 } else { 2.0 } * f(i as f64 * h);
    }
    s * h / 3.0
}

/// One minimized truncated energy.
#[derive(Debug, Clone)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct TruncatedMinimizer {
    #[cfg_attr(feature = "serde", serde(skip))]
    pub z: GridFunction,
    /// `J` at the seed and at the minimizer.
    pub seed_energy: f64,
    pub energy: f64,
    pub iterations: usize,
    /// `max |L z − λ̃₀ f̃(z)| / max(1, ‖λ̃₀ f̃(z)‖_∞)` over interior nodes.
    pub residual: f64,
    pub converged: bool,
}

/// Everything produced by [`logistic_setup`].
#[derive(Debug, Clone)]
pub struct LogisticSetup {
    pub spec: SystemSpec,
    pub pair: SubSuperPair,
    pub report: SubSuperReport,
    pub lambda: f64,
    pub lambda_tilde0: f64,
    /// `min{|w₀|_{q₁}^{α₁(x)}, |z₀|_{q₂}^{α₂(x)}}` over the grid.
    pub c: f64,
    /// Largest `A` on the norm range of the pair.
    pub a0: f64,
    pub mu0: f64,
    pub lambda0: f64,
    pub minimizers: [TruncatedMinimizer; 2],
}

impl LogisticParams {
    /// Hypotheses `(f₁)`, `(f₂)` and positivity of `A`.
    pub fn validate(&self) -> Result<()> {
        let grid = self.p[0].grid();
        for fields in [&self.p, &self.q, &self.r, &self.alpha] {
            if fields.iter().any(|f| f.grid() != grid) {
                return Err(Error::GridMismatch);
            }
        }
        for i in 0..2 {
            let n = i + 1;
            let theta = self.theta[i];
            gate(
                theta > 0.0 && theta.is_finite(),
                "(f₂)",
                format!("θ{n} must be positive, got {theta}"),
            )?;
            let f = &self.f[i];
            let (f0, ft) = (f(0.0), f(theta));
            gate(
                f0.abs() <= 1e-12 && ft.abs() <= 1e-12,
                "(f₂)",
                format!("f{n}(0) = {f0} and f{n}(θ{n}) = {ft} must vanish"),
            )?;
            for m in 1..400 {
                let t = theta * m as f64 / 400.0;
                let v = f(t);
                gate(
                    v > 0.0 && v.is_finite(),
                    "(f₂)",
                    format!("f{n}({t}) = {v} must be positive on (0, θ{n})"),
                )?;
            }
        }
        let grid = self.p[0].grid().clone();
        let t_max = luxemburg_norm(
            &GridFunction::constant(grid.clone(), self.theta[0]),
            &self.r[1],
        )?
        .max(luxemburg_norm(
            &GridFunction::constant(grid.clone(), self.theta[1]),
            &self.r[0],
        )?);
        for t in sample_interval(t_max * 1e-6, t_max, 65) {
            for k in 0..grid.len() {
                let v = (self.a)(k, t);
                gate(
                    v > 0.0 && v.is_finite(),
                    "A(x, t) > 0 on (0, max{|θ₁|_{r₂}, |θ₂|_{r₁}}]",
                    format!("A = {v} at node {k}, t = {t}"),
                )?;
            }
        }
        Ok(())
    }

    /// The system at `λ`.
    pub fn spec(&self, lambda: f64) -> Result<SystemSpec> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "λ must be positive, got {lambda}"
            )));
        }
        let equation = |i: usize| {
            let ft = truncated(&self.f[i], self.theta[i]);
            let f: crate::system::Reaction = if i == 0 {
                Arc::new(move |_, u, _| lambda * ft(u))
            } else {
                Arc::new(move |_, _, v| lambda * ft(v))
            };
            Equation {
                p: self.p[i].clone(),
                q: self.q[i].clone(),
                r: self.r[i].clone(),
                s: self.q[i].clone(),
                alpha: self.alpha[i].clone(),
                gamma: self.alpha[i].clone(),
                f,
                g: Arc::new(|_, _, _| 0.0),
            }
        };
        let spec = SystemSpec {
            equations: [equation(0), equation(1)],
            a: self.a.clone(),
            regime: Regime::Positive,
            monotone: false,
            name: String::from("logistic"),
        };
        spec.validate()?;
        Ok(spec)
    }

    fn seed(&self, i: usize, delta: f64) -> Result<GridFunction> {
        let grid = self.p[i].grid();
        let half = 0.5 * self.theta[i];
        boundary_distance(grid).map(|d| half * (d / delta).min(1.0))
    }

    /// Discrete `J_i(u)` at `λ̃`, lumped quadrature for `∫ F̃`.
    pub fn truncated_energy(&self, i: usize, u: &GridFunction, lambda: f64) -> f64 {
        let op = PxLaplacian::new(&self.p[i]);
        let ft = truncated(&self.f[i], self.theta[i]);
        let w = u.grid().weights();
        let reaction: f64 = u
            .values()
            .iter()
            .zip(w)
            .map(|(&v, &wk)| wk * primitive(&ft, self.theta[i], v))
            .sum();
        op.gradient_energy(u.values(), 0.0) - lambda * reaction
    }

    /// Minimizes `J_i` at `λ̃` from `seed` by majorization.
    pub fn minimize(
        &self,
        i: usize,
        lambda: f64,
        seed: &GridFunction,
        opts: &LogisticOptions,
    ) -> Result<TruncatedMinimizer> {
        let theta = self.theta[i];
        let ft = truncated(&self.f[i], theta);
        // Largest downward slope of f̃ on [0, θ] (one-sided differences).
        let ts = sample_interval(0.0, theta, 801);
        let mut slope: f64 = 0.0;
        for w in ts.windows(2) {
            slope = slope.max(-(ft(w[1]) - ft(w[0])) / (w[1] - w[0]));
        }
        let shift = 1.1 * lambda * slope;
        let grid = seed.grid().clone();
        let op = PxLaplacian::new(&self.p[i]);
        let seed_energy = self.truncated_energy(i, seed, lambda);
        let mut z = seed.clone();
        let mut residual = f64::INFINITY;
        let mut iterations = 0;
        let eq_residual = |z: &GridFunction| -> f64 {
            let lz = op.apply_values(z.values(), 0.0);
            let rhs: Vec<f64> = z.values().iter().map(|&v| lambda * ft(v)).collect();
            let scale = rhs.iter().fold(1.0_f64, |m, v| m.max(v.abs()));
            grid.interior()
                .iter()
                .map(|&k| (lz[k] - rhs[k]).abs() / scale)
                .fold(0.0, f64::max)
        };
        while iterations < opts.max_iter {
            iterations += 1;
            let rhs = z.map(|v| lambda * ft(v) + shift * v)?;
            let problem = DirichletProblem {
                shift,
                initial: Some(&z),
            };
            let sol = solve_dirichlet_with(&rhs, &self.p[i], &problem, &opts.solver)?;
            if !sol.converged {
                return Err(Error::NotConverged(alloc::boxed::Box::new(sol)));
            }
            let step = sol.u.max_diff(&z);
            z = sol.u;
            residual = eq_residual(&z);
            if residual <= opts.residual_tol || step <= 1e-15 * z.max_abs().max(1.0) {
                break;
            }
        }
        let energy = self.truncated_energy(i, &z, lambda);
        Ok(TruncatedMinimizer {
            z,
            seed_energy,
            energy,
            iterations,
            residual,
            converged: residual <= opts.residual_tol,
        })
    }
}

/// Builds the pair `((z₀, θ₁), (w₀, θ₂))` and certifies it at `λ`
/// (default `2λ₀`).
pub fn logistic_setup(
    lambda: Option<f64>,
    params: &LogisticParams,
    opts: &LogisticOptions,
) -> Result<LogisticSetup> {
    params.validate()?;
    let grid = params.p[0].grid().clone();
    let delta = opts.delta.unwrap_or_else(|| default_delta(&grid));
    let seeds = [params.seed(0, delta)?, params.seed(1, delta)?];

    // λ̃₀: the first power of two making both seed energies negative.
    let mut lambda_tilde0 = None;
    for e in 0..=opts.lambda_max_exp {
        let l = powf(2.0, e as f64);
        if (0..2).all(|i| params.truncated_energy(i, &seeds[i], l) < 0.0) {
            lambda_tilde0 = Some(l);
            break;
        }
    }
    let lt = lambda_tilde0.ok_or_else(|| {
        Error::SearchExhausted(format!(
            "seed energies stay nonnegative for λ̃ ≤ 2^{}",
            opts.lambda_max_exp
        ))
    })?;

    let minimizers = [
        params.minimize(0, lt, &seeds[0], opts)?,
        params.minimize(1, lt, &seeds[1], opts)?,
    ];
    for (i, m) in minimizers.iter().enumerate() {
        let n = i + 1;
        let zmax = m.z.max();
        let zmin = grid
            .interior()
            .iter()
            .map(|&k| m.z.get(k))
            .fold(f64::INFINITY, f64::min);
        gate(
            zmin > 0.0 && zmax <= params.theta[i] + 1e-8,
            &format!("0 < minimizer {n} ≤ θ{n}"),
            format!(
                "minimizer range [{zmin}, {zmax}], θ{n} = {}",
                params.theta[i]
            ),
        )?;
    }
    let (z0, w0) = (&minimizers[0].z, &minimizers[1].z);

    let nq1 = luxemburg_norm(w0, &params.q[0])?;
    let nq2 = luxemburg_norm(z0, &params.q[1])?;
    let c = (0..grid.len())
        .map(|k| {
            pow_nonneg(nq1, params.alpha[0].get(k)).min(pow_nonneg(nq2, params.alpha[1].get(k)))
        })
        .fold(f64::INFINITY, f64::min);
    let theta_fn = |i: usize| GridFunction::constant(grid.clone(), params.theta[i]);
    let t_lo = luxemburg_norm(z0, &params.r[1])?.min(luxemburg_norm(w0, &params.r[0])?);
    let t_hi = luxemburg_norm(&theta_fn(0), &params.r[1])?
        .max(luxemburg_norm(&theta_fn(1), &params.r[0])?);
    let mut a0: f64 = 0.0;
    for t in sample_interval(t_lo, t_hi, 65) {
        for k in 0..grid.len() {
            a0 = a0.max((params.a)(k, t));
        }
    }
    let mu0 = a0 / c;
    let lambda0 = lt * mu0;
    let lambda = lambda.unwrap_or(2.0 * lambda0);

    let spec = params.spec(lambda)?;
    let pair = SubSuperPair::new([z0.clone(), w0.clone()], [theta_fn(0), theta_fn(1)]);
    let (pair, report) = pair.certify(&spec, &opts.verify)?;
    Ok(LogisticSetup {
        spec,
        pair,
        report,
        lambda,
        lambda_tilde0: lt,
        c,
        a0,
        mu0,
        lambda0,
        minimizers,
    })
}

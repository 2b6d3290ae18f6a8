//! The concave-convex system
//!
//! ```text
//! −A(x, |v|_{r₁}) Δ_{p₁} u = λ u^{β₁} |v|_{q₁}^{α₁} + θ v^{η₁} |v|_{s₁}^{γ₁}
//! −A(x, |u|_{r₂}) Δ_{p₂} v = λ v^{β₂} |u|_{q₂}^{α₂} + θ u^{η₂} |u|_{s₂}^{γ₂}
//! ```
//!
//! The supersolutions `z_M, y_M` solve `−Δ_{p_i} z = M`. They work as soon
//! as `Ψ(M) = (λK̄/A_λ) M^{ρ−1} + (θK̄/A_λ) M^{τ−1} ≤ 1`; with `0 < ρ < 1 < τ`
//! the minimum of `Ψ` sits at `M_{λ,θ} = (λ/θ)^{1/(τ−ρ)} c`,
//! `c = ((1−ρ)/(τ−1))^{1/(τ−ρ)}`, and `Ψ(M_{λ,θ})` grows with `θ`, which
//! defines the threshold `θ₀`.

use alloc::boxed::Box;
use alloc::format;
use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::fmt;

use super::{coefficient_floor, gate, growth_constant, layer_lower_pair, SearchOptions};
use crate::error::{Error, Result};
use crate::grid::{ExponentField, GridFunction};
use crate::layer::{default_delta, exponent_ratio_constant, BoundaryLayerParams};
use crate::lebesgue::luxemburg_norm;
use crate::math::{exp, ln, powf};
use crate::operator::PxLaplacian;
use crate::solver::ConstantRhsCache;
use crate::subsuper::{verify_with, SubSuperPair, SubSuperReport, VerifyOptions};
use crate::system::{pow_nonneg, Coefficient, Equation, Regime, SystemSpec};

/// The scalars of the `Ψ` analysis.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct ConcaveConvexParams {
    pub lambda: f64,
    pub theta: f64,
    pub rho_exp: f64,
    pub tau_exp: f64,
    pub k_bar: f64,
    pub a_lambda: f64,
    pub c: f64,
}

impl ConcaveConvexParams {
    pub fn new(
        lambda: f64,
        theta: f64,
        rho: f64,
        tau: f64,
        k_bar: f64,
        a_lambda: f64,
    ) -> Result<Self> {
        gate(
            rho > 0.0 && rho < 1.0 && tau > 1.0,
            "0 < ρ < 1 < τ",
            format!("ρ = {rho}, τ = {tau}"),
        )?;
        if !(lambda > 0.0 && theta > 0.0 && k_bar > 0.0 && a_lambda > 0.0)
            || ![lambda, theta, k_bar, a_lambda]
                .iter()
                .all(|v| v.is_finite())
        {
            return Err(Error::InvalidArgument(format!(
                "λ, θ, K̄ and A_λ must be positive and finite, got {lambda}, {theta}, {k_bar}, {a_lambda}"
            )));
        }
        let c = powf((1.0 - rho) / (tau - 1.0), 1.0 / (tau - rho));
        Ok(Self {
            lambda,
            theta,
            rho_exp: rho,
            tau_exp: tau,
            k_bar,
            a_lambda,
            c,
        })
    }

    /// Same constants with another `θ`.
    pub fn with_theta(&self, theta: f64) -> Self {
        Self { theta, ..*self }
    }

    /// `M_{λ,θ} = (λ/θ)^{1/(τ−ρ)} c`.
    pub fn m_star(&self) -> f64 {
        powf(
            self.lambda / self.theta,
            1.0 / (self.tau_exp - self.rho_exp),
        ) * self.c
    }

    /// `Ψ(M_{λ,θ})`, the minimum of `Ψ`.
    pub fn psi_min(&self) -> f64 {
        psi(self.m_star(), self).unwrap_or(f64::INFINITY)
    }

    /// `θ₀` with `Ψ(M_{λ,θ₀}) = 1`, by bisection in `ln θ`.
    pub fn theta_threshold(&self) -> f64 {
        let f = |lt: f64| self.with_theta(exp(lt)).psi_min() - 1.0;
        let (mut lo, mut hi) = (ln(self.theta), ln(self.theta));
        while f(lo) > 0.0 && lo > -700.0 {
            lo -= 8.0;
        }
        while f(hi) < 0.0 && hi < 700.0 {
            hi += 8.0;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if f(mid) > 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
            if hi - lo < 1e-14 {
                break;
            }
        }
        exp(0.5 * (lo + hi))
    }
}

/// `Ψ_{λ,θ}(M) = (λK̄/A_λ) M^{ρ−1} + (θK̄/A_λ) M^{τ−1}`.
pub fn psi(m: f64, params: &ConcaveConvexParams) -> Result<f64> {
    if !(m > 0.0) {
        return Err(Error::InvalidArgument(format!("Ψ needs M > 0, got {m}")));
    }
    let s = params.k_bar / params.a_lambda;
    Ok(params.lambda * s * powf(m, params.rho_exp - 1.0)
        + params.theta * s * powf(m, params.tau_exp - 1.0))
}

/// Exponents and coefficient of the concave-convex system.
#[derive(Clone)]
pub struct ConcaveConvexProblem {
    pub p: [ExponentField; 2],
    pub q: [ExponentField; 2],
    pub r: [ExponentField; 2],
    pub s: [ExponentField; 2],
    pub alpha: [ExponentField; 2],
    pub beta: [ExponentField; 2],
    pub eta: [ExponentField; 2],
    pub gamma: [ExponentField; 2],
    pub a: Coefficient,
    /// `BoundedBelow` is regime A1 (small `λ`), `BoundedAbove { a0, a_inf }`
    /// regime A2 (given `λ`, small `θ`) with `a_inf` the limit `b₀`.
    pub regime: Regime,
}

impl fmt::Debug for ConcaveConvexProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let range = |e: &[ExponentField; 2]| [(e[0].inf(), e[0].sup()), (e[1].inf(), e[1].sup())];
        f.debug_struct("ConcaveConvexProblem")
            .field("p", &range(&self.p))
            .field("alpha", &range(&self.alpha))
            .field("beta", &range(&self.beta))
            .field("eta", &range(&self.eta))
            .field("gamma", &range(&self.gamma))
            .field("regime", &self.regime)
            .finish_non_exhaustive()
    }
}

impl ConcaveConvexProblem {
    /// `ρ = max{β₁⁺/(p₁⁻−1) + α₁⁺/(p₂⁻−1), β₂⁺/(p₂⁻−1) + α₂⁺/(p₁⁻−1)}`.
    pub fn rho(&self) -> f64 {
        let pm = [self.p[0].inf() - 1.0, self.p[1].inf() - 1.0];
        (0..2)
            .map(|i| self.beta[i].sup() / pm[i] + self.alpha[i].sup() / pm[1 - i])
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// `τ = max{(η₁⁺+γ₁⁺)/(p₂⁻−1), (η₂⁺+γ₂⁺)/(p₁⁻−1)}`.
    pub fn tau(&self) -> f64 {
        let pm = [self.p[0].inf() - 1.0, self.p[1].inf() - 1.0];
        (0..2)
            .map(|i| (self.eta[i].sup() + self.gamma[i].sup()) / pm[1 - i])
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Exponent conditions of the existence result.
    pub fn validate(&self) -> Result<()> {
        for e in self.beta.iter().chain(&self.eta) {
            gate(
                e.inf() >= 0.0,
                "hypothesis (H)",
                format!("β and η must be nonnegative, got inf {}", e.inf()),
            )?;
        }
        for i in 0..2 {
            let n = i + 1;
            let lo = self.alpha[i].inf() + self.beta[i].inf();
            let hi = self.alpha[i].sup() + self.beta[i].sup();
            let pm = self.p[i].inf() - 1.0;
            gate(
                lo > 0.0 && hi < pm,
                &format!("0 < α{n}⁻ + β{n}⁻ ≤ α{n}⁺ + β{n}⁺ < p{n}⁻ − 1"),
                format!("α{n}⁻ + β{n}⁻ = {lo}, α{n}⁺ + β{n}⁺ = {hi}, p{n}⁻ − 1 = {pm}"),
            )?;
            let j = 1 - i;
            let convex = self.eta[i].inf() + self.gamma[i].inf();
            let pj = self.p[j].sup() - 1.0;
            gate(
                pj < convex,
                &format!("p{}⁺ − 1 < η{n}⁻ + γ{n}⁻", j + 1),
                format!("p{}⁺ − 1 = {pj}, η{n}⁻ + γ{n}⁻ = {convex}", j + 1),
            )?;
        }
        match self.regime {
            Regime::BoundedBelow { .. } => Ok(()),
            Regime::BoundedAbove { .. } => {
                let pm = [self.p[0].inf() - 1.0, self.p[1].inf() - 1.0];
                for i in 0..2 {
                    let n = i + 1;
                    let j = 1 - i;
                    let mixed = self.beta[i].sup() / pm[i] + self.alpha[i].sup() / pm[j];
                    gate(
                        mixed < 1.0,
                        &format!("β{n}⁺/(p{n}⁻ − 1) + α{n}⁺/(p{}⁻ − 1) < 1", j + 1),
                        format!("the ratio sum is {mixed}"),
                    )?;
                }
                Ok(())
            }
            Regime::Positive => Err(Error::InvalidArgument(String::from(
                "the concave-convex system needs regime A1 (A ≥ a₀) or A2 (0 < A ≤ a₀, A → b₀)",
            ))),
        }
    }

    /// The system for given `λ, θ`.
    pub fn spec(&self, lambda: f64, theta: f64) -> Result<SystemSpec> {
        let grid = self.p[0].grid();
        for fields in [
            &self.p,
            &self.q,
            &self.r,
            &self.s,
            &self.alpha,
            &self.beta,
            &self.eta,
            &self.gamma,
        ] {
            if fields.iter().any(|f| f.grid() != grid) {
                return Err(Error::GridMismatch);
            }
        }
        if !(lambda > 0.0 && theta > 0.0 && lambda.is_finite() && theta.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "λ and θ must be positive, got {lambda}, {theta}"
            )));
        }
        self.validate()?;
        let equation = |i: usize| {
            let beta = self.beta[i].clone();
            let eta = self.eta[i].clone();
            // Concave term in the own unknown, convex term in the other one.
            let (f, g): (crate::system::Reaction, crate::system::Reaction) = if i == 0 {
                (
                    Arc::new(move |k, u, _| lambda * pow_nonneg(u, beta.get(k))),
                    Arc::new(move |k, _, v| theta * pow_nonneg(v, eta.get(k))),
                )
            } else {
                (
                    Arc::new(move |k, _, v| lambda * pow_nonneg(v, beta.get(k))),
                    Arc::new(move |k, u, _| theta * pow_nonneg(u, eta.get(k))),
                )
            };
            Equation {
                p: self.p[i].clone(),
                q: self.q[i].clone(),
                r: self.r[i].clone(),
                s: self.s[i].clone(),
                alpha: self.alpha[i].clone(),
                gamma: self.gamma[i].clone(),
                f,
                g,
            }
        };
        let spec = SystemSpec {
            equations: [equation(0), equation(1)],
            a: self.a.clone(),
            regime: self.regime,
            monotone: true,
            name: String::from("concave-convex"),
        };
        spec.validate()?;
        Ok(spec)
    }

    /// `K̄ = max_i {K^{β_i⁺}|K|_{q_i}^{α_i^±}, K^{η_i⁺}|K|_{s_i}^{γ_i^±}}`.
    pub fn k_bar(&self, k: f64) -> Result<f64> {
        let grid = self.p[0].grid();
        let kf = GridFunction::constant(grid.clone(), k);
        let mut out: f64 = 0.0;
        for i in 0..2 {
            let nq = luxemburg_norm(&kf, &self.q[i])?;
            let ns = luxemburg_norm(&kf, &self.s[i])?;
            for (base, norm, field) in [
                (self.beta[i].sup(), nq, &self.alpha[i]),
                (self.eta[i].sup(), ns, &self.gamma[i]),
            ] {
                for e in [field.inf(), field.sup()] {
                    out = out.max(powf(k, base) * powf(norm, e));
                }
            }
        }
        Ok(out)
    }
}

/// `θ` too large: `Ψ(M_{λ,θ}) > 1` or `M_{λ,θ}` below what the
/// subsolution needs.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct ThresholdReport {
    pub params: ConcaveConvexParams,
    pub m_star: f64,
    pub psi_min: f64,
    /// `Ψ(M_{λ,θ₀}) = 1`.
    pub theta0: f64,
    /// Largest `θ` with `M_{λ,θ} ≥ max{1, max L(μφ_i)}`.
    pub theta_m: f64,
}

/// A certified (or honestly failed) construction.
#[derive(Debug, Clone)]
pub struct ConcaveConvexSetup {
    pub spec: SystemSpec,
    pub pair: SubSuperPair,
    pub report: SubSuperReport,
    pub layer: BoundaryLayerParams,
    /// Regime A2: the `Ψ` constants and `M = M_{λ,θ}`.
    pub params: Option<ConcaveConvexParams>,
    pub m: Option<f64>,
    /// Regime A1: the largest verified `λ` on the downward ladder.
    pub lambda0: Option<f64>,
    pub lambda: f64,
    pub theta: f64,
}

#[derive(Debug, Clone)]
pub enum ConcaveConvexOutcome {
    Certified(Box<ConcaveConvexSetup>),
    Threshold(ThresholdReport),
}

fn max_layer_laplacian(lower: &[GridFunction; 2], spec: &SystemSpec) -> f64 {
    (0..2)
        .map(|i| {
            PxLaplacian::new(&spec.equations[i].p)
                .apply_values(lower[i].values(), 0.0)
                .into_iter()
                .fold(f64::NEG_INFINITY, f64::max)
        })
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Regime A2: smallest `k` with `L(μφ_i) ≤ min{1, λ(μφ_i)^{β_i}|μφ_j|_{q_i}^{α_i}/a₀}`
/// at every interior node.
fn select_layer_a2(
    problem: &ConcaveConvexProblem,
    spec: &SystemSpec,
    lambda: f64,
    a0: f64,
    delta: f64,
    opts: &SearchOptions,
) -> Result<(BoundaryLayerParams, [GridFunction; 2])> {
    let a = exponent_ratio_constant(&problem.p[0], &problem.p[1]);
    let grid = spec.grid();
    for &k in &opts.k_ladder {
        let Ok(layer) = BoundaryLayerParams::new(k, delta, a) else {
            continue;
        };
        if !(layer.mu > 1e-250) {
            break;
        }
        let lower = layer_lower_pair(&layer, spec)?;
        let mut ok = true;
        for i in 0..2 {
            let j = 1 - i;
            let l = PxLaplacian::new(&spec.equations[i].p).apply_values(lower[i].values(), 0.0);
            let nq = luxemburg_norm(&lower[j], &problem.q[i])?;
            ok &= grid.interior().iter().all(|&n| {
                let rhs = lambda
                    * pow_nonneg(lower[i].get(n), problem.beta[i].get(n))
                    * pow_nonneg(nq, problem.alpha[i].get(n))
                    / a0;
                l[n] <= 1.0_f64.min(rhs)
            });
        }
        if ok {
            return Ok((layer, lower));
        }
    }
    Err(Error::SearchExhausted(String::from(
        "no k on the ladder makes μφ_i a subsolution of the concave part",
    )))
}

/// Builds and certifies a pair for `(S)_{λ,θ}`.
///
/// Regime A2 computes `M_{λ,θ}` and returns a [`ThresholdReport`] when
/// `Ψ(M_{λ,θ}) > 1` (or `M_{λ,θ}` is too small for the comparison with the
/// subsolution). Regime A1 scans `λ, λ/2, λ/4, …` downward, `θ` fixed, and
/// returns the first (largest) verified ladder value as `λ₀`.
pub fn concave_convex_setup(
    lambda: f64,
    theta: f64,
    problem: &ConcaveConvexProblem,
    opts: &SearchOptions,
) -> Result<ConcaveConvexOutcome> {
    problem.validate()?;
    let grid = problem.p[0].grid().clone();
    let delta = opts.delta.unwrap_or_else(|| default_delta(&grid));
    let mut cache = ConstantRhsCache::new();
    match problem.regime {
        Regime::BoundedAbove { a0, a_inf } => {
            let spec = problem.spec(lambda, theta)?;
            let (layer, lower) = select_layer_a2(problem, &spec, lambda, a0, delta, opts)?;
            let t_lo = luxemburg_norm(&lower[0], &problem.r[0])?
                .min(luxemburg_norm(&lower[1], &problem.r[1])?);
            let (_, a_lambda) = coefficient_floor(&spec, t_lo, a_inf)?;
            let k = growth_constant([&problem.p[0], &problem.p[1]], 20, &mut cache, &opts.solver)?;
            let params = ConcaveConvexParams::new(
                lambda,
                theta,
                problem.rho(),
                problem.tau(),
                problem.k_bar(k)?,
                a_lambda,
            )?;
            let m = params.m_star();
            let psi_min = params.psi_min();
            let need = max_layer_laplacian(&lower, &spec).max(1.0);
            if psi_min > 1.0 || m < need {
                let theta_m = lambda * powf(params.c / need, params.tau_exp - params.rho_exp);
                return Ok(ConcaveConvexOutcome::Threshold(ThresholdReport {
                    params,
                    m_star: m,
                    psi_min,
                    theta0: params.theta_threshold(),
                    theta_m,
                }));
            }
            let z = cache.solve(m, &problem.p[0], &opts.solver)?;
            let y = cache.solve(m, &problem.p[1], &opts.solver)?;
            let (pair, report) =
                SubSuperPair::new(lower, [z.u, y.u]).certify(&spec, &opts.verify)?;
            Ok(ConcaveConvexOutcome::Certified(Box::new(
                ConcaveConvexSetup {
                    spec,
                    pair,
                    report,
                    layer,
                    params: Some(params),
                    m: Some(m),
                    lambda0: None,
                    lambda,
                    theta,
                },
            )))
        }
        _ => {
            let a = exponent_ratio_constant(&problem.p[0], &problem.p[1]);
            let layers: Vec<BoundaryLayerParams> = opts
                .k_ladder
                .iter()
                .filter_map(|&k| BoundaryLayerParams::new(k, delta, a).ok())
                .filter(|l| l.mu > 1e-250)
                .collect();
            let screen = VerifyOptions {
                w_samples: 0,
                ..opts.verify
            };
            for e in 0..=opts.lambda_max_exp {
                let lam = lambda * powf(0.5, e as f64);
                let spec = problem.spec(lam, theta)?;
                let z = cache.solve(lam, &problem.p[0], &opts.solver)?;
                let y = cache.solve(lam, &problem.p[1], &opts.solver)?;
                for &layer in &layers {
                    let lower = layer_lower_pair(&layer, &spec)?;
                    if max_layer_laplacian(&lower, &spec) > lam {
                        continue;
                    }
                    let pair = SubSuperPair::new(lower, [z.u.clone(), y.u.clone()]);
                    if !verify_with(&pair, &spec, &screen).is_ok_and(|r| r.certified) {
                        continue;
                    }
                    let (pair, report) = pair.certify(&spec, &opts.verify)?;
                    if report.certified {
                        return Ok(ConcaveConvexOutcome::Certified(Box::new(
                            ConcaveConvexSetup {
                                spec,
                                pair,
                                report,
                                layer,
                                params: None,
                                m: None,
                                lambda0: Some(lam),
                                lambda: lam,
                                theta,
                            },
                        )));
                    }
                }
            }
            Err(Error::SearchExhausted(format!(
                "no verified pair for λ ∈ [{lambda}·2^-{}, {lambda}] at θ = {theta}",
                opts.lambda_max_exp
            )))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{build_grid, ExponentKind, Grid};
    use crate::picard::{solve_system, PicardOptions};
    use proptest::prelude::*;

    fn problem(grid: &Arc<Grid>, a: Coefficient, regime: Regime) -> ConcaveConvexProblem {
        let c = |v: f64, kind| ExponentField::constant(grid.clone(), v, kind).unwrap();
        let pair = |v: f64, kind| [c(v, kind), c(v, kind)];
        ConcaveConvexProblem {
            p: pair(2.0, ExponentKind::Laplacian),
            q: pair(2.0, ExponentKind::Lebesgue),
            r: pair(2.0, ExponentKind::Lebesgue),
            s: pair(2.0, ExponentKind::Lebesgue),
            alpha: pair(0.2, ExponentKind::Nonnegative),
            beta: pair(0.3, ExponentKind::Nonnegative),
            eta: pair(1.5, ExponentKind::Nonnegative),
            gamma: pair(0.2, ExponentKind::Nonnegative),
            a,
            regime,
        }
    }

    fn params() -> ConcaveConvexParams {
        ConcaveConvexParams::new(2.0, 0.01, 0.5, 1.7, 1.3, 0.5).unwrap()
    }

    #[test]
    fn psi_blows_up_at_both_ends() {
        let p = params();
        let min = p.psi_min();
        assert!(psi(1e-6, &p).unwrap() > 100.0 * min);
        assert!(psi(1e6, &p).unwrap() > 100.0 * min);
        assert!(psi(0.0, &p).is_err());
    }

    #[test]
    fn grid_search_finds_the_closed_form_minimum() {
        let p = params();
        let m = p.m_star();
        // 4001 points per decade-span of 12 decades.
        let cells = 4000;
        let (lo, hi) = (-6.0_f64, 6.0_f64);
        let step = (hi - lo) / cells as f64;
        let best = (0..=cells)
            .map(|i| powf(10.0, lo + step * i as f64))
            .min_by(|a, b| psi(*a, &p).unwrap().total_cmp(&psi(*b, &p).unwrap()))
            .unwrap();
        assert!((libm::log10(best) - libm::log10(m)).abs() <= step);
    }

    #[test]
    fn threshold_solves_psi_equal_one() {
        let p = params();
        let t0 = p.theta_threshold();
        assert!((p.with_theta(t0).psi_min() - 1.0).abs() < 1e-6);
        // θ ↦ M_{λ,θ} is decreasing.
        let ms: Vec<f64> = [0.1, 1.0, 10.0]
            .iter()
            .map(|&t| p.with_theta(t).m_star())
            .collect();
        assert!(ms[0] > ms[1] && ms[1] > ms[2]);
    }

    #[test]
    fn gates_reject_non_convex_coupling() {
        let grid = build_grid(1, 17, &[(0.0, 1.0)]).unwrap();
        let mut bad = problem(
            &grid,
            Arc::new(|_, _| 1.0),
            Regime::BoundedBelow { a0: 1.0 },
        );
        bad.eta = [
            ExponentField::constant(grid.clone(), 0.5, ExponentKind::Nonnegative).unwrap(),
            ExponentField::constant(grid.clone(), 0.5, ExponentKind::Nonnegative).unwrap(),
        ];
        let err = bad.validate().unwrap_err();
        assert!(format!("{err}").contains("p2⁺ − 1 < η1⁻ + γ1⁻"), "{err}");
    }

    #[test]
    fn regime_a2_small_theta_is_certified() {
        let grid = build_grid(1, 65, &[(0.0, 1.0)]).unwrap();
        let a: Coefficient = Arc::new(|_, t| (2.0 + t) / (1.0 + t));
        let prob = problem(
            &grid,
            a,
            Regime::BoundedAbove {
                a0: 2.0,
                a_inf: 1.0,
            },
        );
        let opts = SearchOptions::default();
        let outcome = concave_convex_setup(1.0, 1e-4, &prob, &opts).unwrap();
        let ConcaveConvexOutcome::Certified(setup) = outcome else {
            panic!("expected a pair: {outcome:?}")
        };
        assert!(setup.report.certified, "{:?}", setup.report);
        assert!(setup.m.unwrap() >= 1.0);
        let (_, _, trace) =
            solve_system(&setup.spec, &setup.pair, &PicardOptions::default()).unwrap();
        assert!(
            trace.converged && trace.sandwich_ok && trace.positive_ok,
            "{:?}",
            trace.records.last()
        );

        // A large θ lands above the threshold.
        let outcome = concave_convex_setup(1.0, 1e6, &prob, &opts).unwrap();
        let ConcaveConvexOutcome::Threshold(t) = outcome else {
            panic!("expected a threshold")
        };
        assert!(t.psi_min > 1.0 && t.theta0 < 1e6);
        assert!((t.params.with_theta(t.theta0).psi_min() - 1.0).abs() < 1e-6);
    }

    #[test]
    fn regime_a1_scans_lambda_down() {
        let grid = build_grid(1, 65, &[(0.0, 1.0)]).unwrap();
        let prob = problem(
            &grid,
            Arc::new(|_, _| 1.0),
            Regime::BoundedBelow { a0: 1.0 },
        );
        let outcome = concave_convex_setup(64.0, 1.0, &prob, &SearchOptions::default()).unwrap();
        let ConcaveConvexOutcome::Certified(setup) = outcome else {
            panic!("expected a pair")
        };
        assert!(setup.report.certified);
        assert!(setup.lambda0.unwrap() <= 64.0);
    }

    proptest! {
        #[test]
        fn psi_is_stationary_at_m_star(
            rho in 0.05f64..0.95, tau in 1.05f64..4.0,
            lambda in 0.01f64..100.0, theta in 0.01f64..100.0,
        ) {
            let p = ConcaveConvexParams::new(lambda, theta, rho, tau, 1.0, 1.0).unwrap();
            let m = p.m_star();
            let h = 1e-5 * m;
            let d = (psi(m + h, &p).unwrap() - psi(m - h, &p).unwrap()) / (2.0 * h);
            let scale = psi(m, &p).unwrap() / m;
            prop_assert!((d / scale).abs() <= 1e-6);
        }
    }
}

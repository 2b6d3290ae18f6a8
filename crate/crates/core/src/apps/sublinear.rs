//! The sublinear system
//!
//! ```text
//! −A(x, |v|_{r₁}) Δ_{p₁} u = (u^{β₁} + v^{γ₁}) |v|_{q₁}^{α₁}
//! −A(x, |u|_{r₂}) Δ_{p₂} v = (u^{β₂} + v^{γ₂}) |u|_{q₂}^{α₂}
//! ```
//!
//! In terms of [`SystemSpec`]: `f₁ = u^{β₁}`, `g₁ = v^{γ₁}`, both carrying
//! the norm power `|v|_{q₁}^{α₁}` (so the `s`-norm is the `q`-norm and the
//! second norm power is again `α₁`); symmetrically for the second equation.
//!
//! The pair is `(μφ_i, z_λ / y_λ)` with `φ_i` the boundary layer and
//! `z_λ, y_λ` the solutions of `−Δ_{p_i} z = λ`. The constants of the
//! existence argument are not computable, so `k` and `λ` are searched on
//! geometric ladders and each candidate is verified directly.

use alloc::format;
use alloc::string::String;
use alloc::sync::Arc;
use core::fmt;

use super::{coefficient_floor, gate, layer_lower_pair, SearchOptions};
use crate::error::{Error, Result};
use crate::grid::ExponentField;
use crate::layer::{
    default_delta, exponent_ratio_constant, layer_decay, negative_condition_margin,
    BoundaryLayerParams,
};
use crate::lebesgue::luxemburg_norm;
use crate::math::powf;
use crate::operator::PxLaplacian;
use crate::solver::ConstantRhsCache;
use crate::subsuper::{verify_with, SubSuperPair, SubSuperReport, VerifyOptions};
use crate::system::{pow_nonneg, Coefficient, Equation, Regime, SystemSpec};

/// Exponents and coefficient of the sublinear system; index 0 is the `u`
/// equation.
#[derive(Clone)]
pub struct SublinearParams {
    pub p: [ExponentField; 2],
    pub q: [ExponentField; 2],
    pub r: [ExponentField; 2],
    pub alpha: [ExponentField; 2],
    pub beta: [ExponentField; 2],
    pub gamma: [ExponentField; 2],
    pub a: Coefficient,
    pub regime: Regime,
}

impl fmt::Debug for SublinearParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let range = |e: &[ExponentField; 2]| [(e[0].inf(), e[0].sup()), (e[1].inf(), e[1].sup())];
        f.debug_struct("SublinearParams")
            .field("p", &range(&self.p))
            .field("alpha", &range(&self.alpha))
            .field("beta", &range(&self.beta))
            .field("gamma", &range(&self.gamma))
            .field("regime", &self.regime)
            .finish_non_exhaustive()
    }
}

impl SublinearParams {
    /// Exponent conditions of the existence result for this system.
    pub fn validate(&self) -> Result<()> {
        let pm = [self.p[0].inf() - 1.0, self.p[1].inf() - 1.0];
        for i in 0..2 {
            let n = i + 1;
            let sum = self.alpha[i].sup() + self.gamma[i].sup();
            for (j, &pmj) in pm.iter().enumerate() {
                gate(
                    sum > 0.0 && sum < pmj,
                    &format!("0 < α{n}⁺ + γ{n}⁺ < p{}⁻ − 1", j + 1),
                    format!("α{n}⁺ + γ{n}⁺ = {sum}, p{}⁻ − 1 = {pmj}", j + 1),
                )?;
            }
            let j = 1 - i;
            let mixed = self.alpha[i].sup() / pm[j] + self.beta[i].sup() / pm[i];
            gate(
                mixed > 0.0 && mixed < 1.0,
                &format!("0 < α{n}⁺/(p{}⁻ − 1) + β{n}⁺/(p{n}⁻ − 1) < 1", j + 1),
                format!("the ratio sum is {mixed}"),
            )?;
        }
        match self.regime {
            Regime::BoundedBelow { .. } | Regime::BoundedAbove { .. } => Ok(()),
            Regime::Positive => Err(Error::InvalidArgument(String::from(
                "the sublinear system needs regime A1 (A ≥ a₀) or A2 (0 < A ≤ a₀, A → a_∞)",
            ))),
        }
    }

    /// Builds the system after [`Self::validate`].
    pub fn spec(&self) -> Result<SystemSpec> {
        let grid = self.p[0].grid();
        for fields in [
            &self.p,
            &self.q,
            &self.r,
            &self.alpha,
            &self.beta,
            &self.gamma,
        ] {
            if fields.iter().any(|f| f.grid() != grid) {
                return Err(Error::GridMismatch);
            }
        }
        for e in self.beta.iter().chain(&self.gamma) {
            gate(
                e.inf() >= 0.0,
                "hypothesis (H)",
                format!("β and γ must be nonnegative, got inf {}", e.inf()),
            )?;
        }
        self.validate()?;
        let equation = |i: usize| {
            let beta = self.beta[i].clone();
            let gamma = self.gamma[i].clone();
            // Equation 0: u^{β₁} + v^{γ₁}. Equation 1: u^{β₂} + v^{γ₂}.
            Equation {
                p: self.p[i].clone(),
                q: self.q[i].clone(),
                r: self.r[i].clone(),
                s: self.q[i].clone(),
                alpha: self.alpha[i].clone(),
                gamma: self.alpha[i].clone(),
                f: Arc::new(move |k, u, _| pow_nonneg(u, beta.get(k))),
                g: Arc::new(move |k, _, v| pow_nonneg(v, gamma.get(k))),
            }
        };
        let spec = SystemSpec {
            equations: [equation(0), equation(1)],
            a: self.a.clone(),
            regime: self.regime,
            monotone: true,
            name: String::from("sublinear"),
        };
        spec.validate()?;
        Ok(spec)
    }
}

/// Outcome of [`select_sublinear_parameters`].
#[derive(Debug, Clone)]
pub struct SublinearSelection {
    pub layer: BoundaryLayerParams,
    pub lambda: f64,
    pub pair: SubSuperPair,
    pub report: SubSuperReport,
    /// Candidates `(k, λ)` verified before the first success.
    pub candidates: usize,
    /// `λ − max_k (L μφ_i)_k`: the subsolution sits below `z_λ, y_λ` by
    /// comparison when positive.
    pub comparison_margin: [f64; 2],
    /// Regime A2 only: the scan point `a₁` and the floor `A_k`.
    pub a1: Option<f64>,
    pub a_k: Option<f64>,
    /// Nodes excluded from the margins (none: the discrete operator is
    /// evaluated everywhere).
    pub corner_excluded: usize,
}

struct Search<'a> {
    spec: &'a SystemSpec,
    opts: &'a SearchOptions,
    delta: f64,
    a: f64,
    cache: ConstantRhsCache,
    candidates: usize,
}

impl Search<'_> {
    fn layer(&self, k: f64) -> Option<BoundaryLayerParams> {
        BoundaryLayerParams::new(k, self.delta, self.a)
            .ok()
            .filter(|l| l.mu > 1e-250)
    }

    fn try_candidate(
        &mut self,
        layer: BoundaryLayerParams,
        exp2: i32,
    ) -> Result<Option<SublinearSelection>> {
        self.candidates += 1;
        let lambda = powf(2.0, exp2 as f64);
        let lower = layer_lower_pair(&layer, self.spec)?;
        let z = self
            .cache
            .solve(lambda, &self.spec.equations[0].p, &self.opts.solver)?;
        let y = self
            .cache
            .solve(lambda, &self.spec.equations[1].p, &self.opts.solver)?;
        if !(z.converged && y.converged) {
            return Ok(None);
        }
        let comparison_margin: [f64; 2] = core::array::from_fn(|i| {
            let l =
                PxLaplacian::new(&self.spec.equations[i].p).apply_values(lower[i].values(), 0.0);
            lambda - l.iter().fold(f64::NEG_INFINITY, |m, &v| m.max(v))
        });
        if comparison_margin.iter().any(|&m| m < 0.0) {
            return Ok(None);
        }
        let pair = SubSuperPair::new(lower, [z.u, y.u]);
        // Cheap screen without random samples, then the requested check.
        let screen = VerifyOptions {
            w_samples: 0,
            ..self.opts.verify
        };
        let Ok(first) = verify_with(&pair, self.spec, &screen) else {
            return Ok(None);
        };
        if !first.certified {
            return Ok(None);
        }
        let (pair, report) = pair.certify(self.spec, &self.opts.verify)?;
        if !report.certified {
            return Ok(None);
        }
        Ok(Some(SublinearSelection {
            layer,
            lambda,
            pair,
            report,
            candidates: self.candidates,
            comparison_margin,
            a1: None,
            a_k: None,
            corner_excluded: 0,
        }))
    }

    /// Smallest certified `λ = 2^e` for a fixed `k`: doubling `e`, then
    /// bisection between the last failure and the first success.
    fn gallop(&mut self, layer: BoundaryLayerParams) -> Result<Option<SublinearSelection>> {
        let max = self.opts.lambda_max_exp;
        let mut lo = 0;
        let mut e = 1;
        let mut best = loop {
            if let Some(sel) = self.try_candidate(layer, e)? {
                break sel;
            }
            if e >= max {
                return Ok(None);
            }
            lo = e;
            e = (2 * e).min(max);
        };
        let mut hi = e;
        while hi - lo > 1 {
            let mid = lo + (hi - lo) / 2;
            match self.try_candidate(layer, mid)? {
                Some(sel) => {
                    best = sel;
                    hi = mid;
                }
                None => lo = mid,
            }
        }
        Ok(Some(best))
    }
}

/// Searches `k` and `λ` until `(μφ₁, μφ₂) ≤ (z_λ, y_λ)` is a verified
/// sub-supersolution pair, `μ = e^{−ak}`, `σ = ln2/k`.
///
/// Regime A1 fixes `λ` first (outer loop) and then looks for `k`; regime A2
/// fixes `k` first, since the lower bound of `A` depends on the subsolution,
/// and then looks for the smallest `λ` on the ladder.
pub fn select_sublinear_parameters(
    spec: &SystemSpec,
    opts: &SearchOptions,
) -> Result<SublinearSelection> {
    spec.validate()?;
    let grid = spec.grid();
    let delta = opts.delta.unwrap_or_else(|| default_delta(grid));
    let a = exponent_ratio_constant(&spec.equations[0].p, &spec.equations[1].p);
    let mut search = Search {
        spec,
        opts,
        delta,
        a,
        cache: ConstantRhsCache::new(),
        candidates: 0,
    };
    let layers: alloc::vec::Vec<BoundaryLayerParams> = opts
        .k_ladder
        .iter()
        .filter_map(|&k| search.layer(k))
        .collect();
    if layers.is_empty() {
        return Err(Error::SearchExhausted(format!(
            "no k on the ladder gives 0 < σ = ln2/k < δ = {delta} with μ > 0"
        )));
    }
    let found = match spec.regime {
        Regime::BoundedAbove { a_inf, .. } => {
            let mut found = None;
            for &layer in &layers {
                if let Some(mut sel) = search.gallop(layer)? {
                    let lower = &sel.pair.lower;
                    let t_lo = luxemburg_norm(&lower[0], &spec.equations[0].r)?
                        .min(luxemburg_norm(&lower[1], &spec.equations[1].r)?);
                    let (a1, a_k) = coefficient_floor(spec, t_lo, a_inf)?;
                    sel.a1 = Some(a1);
                    sel.a_k = Some(a_k);
                    found = Some(sel);
                    break;
                }
            }
            found
        }
        _ => {
            let mut found = None;
            'outer: for e in 1..=opts.lambda_max_exp {
                for &layer in &layers {
                    if let Some(sel) = search.try_candidate(layer, e)? {
                        found = Some(sel);
                        break 'outer;
                    }
                }
            }
            found
        }
    };
    found.ok_or_else(|| {
        Error::SearchExhausted(format!(
            "no verified (k, λ) among k ∈ [{}, {}], λ ≤ 2^{} after {} candidates",
            layers[0].k,
            layers[layers.len() - 1].k,
            opts.lambda_max_exp,
            search.candidates
        ))
    })
}

/// Everything produced by [`sublinear_setup`].
#[derive(Debug, Clone)]
pub struct SublinearSetup {
    pub spec: SystemSpec,
    pub selection: SublinearSelection,
    /// Inner-layer sign condition `|d + ln(kμ)/k|·|∇p_i| < p_i⁻ − 1`,
    /// smallest slack over nodes with `d < σ`.
    pub negative_margin: [f64; 2],
    /// Ratio of the band estimate `k^{p⁻−1} e^{−ak(p⁻−1−(α⁺+γ⁺))} |ln(k e^{−ak})|`
    /// at `2k` and at `k`; below 1 once `k` is large.
    pub decay_ratio: [f64; 2],
}

/// Validates, builds the system and selects a certified pair.
pub fn sublinear_setup(params: &SublinearParams, opts: &SearchOptions) -> Result<SublinearSetup> {
    let spec = params.spec()?;
    let selection = select_sublinear_parameters(&spec, opts)?;
    let layer = selection.layer;
    let negative_margin = core::array::from_fn(|i| negative_condition_margin(&layer, &params.p[i]));
    let decay_ratio = core::array::from_fn(|i| {
        let pm = params.p[i].inf();
        let e = params.alpha[i].sup() + params.gamma[i].sup();
        layer_decay(2.0 * layer.k, pm, layer.a, e) / layer_decay(layer.k, pm, layer.a, e)
    });
    Ok(SublinearSetup {
        spec,
        selection,
        negative_margin,
        decay_ratio,
    })
}

//! Ordered sub-supersolution pairs and their numerical verification.
//!
//! The defining inequalities are weak: for every `φ ≥ 0` vanishing on the
//! boundary,
//!
//! ```text
//! ∫ |∇u̲_i|^{p_i−2} ∇u̲_i·∇φ ≤ ∫ [f̃_i(u̲_i, w)|u̲_j|_{q_i}^{α_i} + g̃_i(u̲_i, w)|u̲_j|_{s_i}^{γ_i}] / A(x, |w|_{r_i}) φ
//! ```
//!
//! and the reverse for `ū_i`, for all `w ∈ [u̲_j, ū_j]`. Tested against the
//! nodal hat functions with the lumped quadrature of the grid, the left side
//! is `w_k·(L u)_k` and the right side `w_k·F_k`, so the weak inequality
//! against the whole nonnegative cone of the discrete space is exactly the
//! nodal inequality `(L u)_k ≤ F_k` on interior nodes.
//!
//! The quantifier over `w` is handled two ways: `w` is sampled (the interval
//! endpoints plus random nodewise convex combinations), and a pointwise
//! envelope bounds the right side over the whole interval by sampling each
//! scalar dependence separately (`f̃, g̃` in the nodal value of `w`, `A` in
//! the norm `|w|_{r_i}`, which is monotone in `w ≥ 0`).

use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::grid::GridFunction;
use crate::lebesgue::luxemburg_norm;
use crate::operator::PxLaplacian;
use crate::system::{pow_nonneg, sample_interval, SystemSpec};

pub use crate::apps::sublinear::select_sublinear_parameters;

/// Candidate ordered pairs `(u̲_i, ū_i)`, `i = 0, 1`.
#[derive(Debug, Clone)]
pub struct SubSuperPair {
    pub lower: [GridFunction; 2],
    pub upper: [GridFunction; 2],
    /// Set by [`SubSuperPair::certify`].
    pub certified: bool,
    /// Worst slack per component over all checks.
    pub margins: [f64; 2],
}

impl SubSuperPair {
    pub fn new(lower: [GridFunction; 2], upper: [GridFunction; 2]) -> Self {
        Self {
            lower,
            upper,
            certified: false,
            margins: [f64::NAN; 2],
        }
    }

    /// Runs [`verify_with`] and records the verdict in the pair.
    pub fn certify(
        mut self,
        spec: &SystemSpec,
        opts: &VerifyOptions,
    ) -> Result<(Self, SubSuperReport)> {
        let report = verify_with(&self, spec, opts)?;
        self.certified = report.certified;
        self.margins = report.component_margins();
        Ok((self, report))
    }

    /// `(min_k w̲(x_k), max_k w̄(x_k))` style scalars used by the main
    /// theorem: the smallest `r`-norm of the lower functions and the largest
    /// of the upper ones.
    pub fn norm_range(&self, spec: &SystemSpec) -> Result<(f64, f64)> {
        let grid = spec.grid();
        let wl: Vec<f64> = (0..grid.len())
            .map(|k| self.lower[0].get(k).min(self.lower[1].get(k)))
            .collect();
        let wu: Vec<f64> = (0..grid.len())
            .map(|k| self.upper[0].get(k).max(self.upper[1].get(k)))
            .collect();
        let wl = GridFunction::new(grid.clone(), wl)?;
        let wu = GridFunction::new(grid.clone(), wu)?;
        let mut lo = f64::INFINITY;
        let mut hi: f64 = 0.0;
        for eq in &spec.equations {
            lo = lo.min(luxemburg_norm(&wl, &eq.r)?);
            hi = hi.max(luxemburg_norm(&wu, &eq.r)?);
        }
        Ok((lo, hi))
    }
}

/// Settings of [`verify_with`].
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct VerifyOptions {
    /// Random convex combinations of the interval endpoints, per component.
    pub w_samples: usize,
    pub seed: u64,
    /// A slack `≥ −tol` counts as satisfied.
    pub tol: f64,
    /// Points per scalar in the envelope bound.
    pub envelope_points: usize,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self {
            w_samples: 8,
            seed: 0x5eed,
            tol: 1e-10,
            envelope_points: 17,
        }
    }
}

/// Slacks of one inequality family.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct InequalityReport {
    /// Smallest relative slack over interior nodes and sampled `w`.
    pub min_slack: f64,
    pub worst_node: Option<usize>,
    /// Smallest relative slack of the envelope bound.
    pub envelope_slack: f64,
}

impl InequalityReport {
    fn worst(&self) -> f64 {
        self.min_slack.min(self.envelope_slack)
    }
}

/// Verdict of [`verify_subsupersolution`].
///
/// Slacks are relative, `(big − small) / max(|big|, |small|)` per node, so
/// they lie in `[−2, 2]` regardless of the scale of the functions; a
/// violation of any size shows up as a negative slack.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct SubSuperReport {
    pub certified: bool,
    pub tol: f64,
    /// Minimum over every slack below.
    pub min_slack: f64,
    /// Relative slack of `u̲_i ≤ ū_i`.
    pub ordering: [f64; 2],
    /// `u̲_i = 0 ≤ ū_i` on boundary nodes.
    pub boundary_ok: bool,
    /// `min u̲_i` over interior nodes; must be positive.
    pub positivity: [f64; 2],
    pub sub: [InequalityReport; 2],
    pub sup: [InequalityReport; 2],
    pub w_samples: usize,
    /// Reactions are monotone, so the endpoint samples decide the
    /// quantifier over `w` exactly.
    pub endpoint_exact: bool,
    /// `f_i, g_i ≥ 0` on the box `[0, ‖ū₁‖_∞] × [0, ‖ū₂‖_∞]`.
    pub reactions_ok: bool,
    /// `A > 0` on the norm interval of the pair.
    pub coefficient_ok: bool,
}

impl SubSuperReport {
    /// Worst slack per component.
    pub fn component_margins(&self) -> [f64; 2] {
        core::array::from_fn(|i| {
            self.ordering[i]
                .min(self.sub[i].worst())
                .min(self.sup[i].worst())
                .min(if self.positivity[i] > 0.0 {
                    f64::INFINITY
                } else {
                    -1.0
                })
        })
    }
}

/// `(b − a) / max(|a|, |b|)`: positive when `a < b`.
#[inline]
fn rel_slack(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale == 0.0 {
        0.0
    } else {
        (b - a) / scale
    }
}

/// Verifies the pair with default options and `w_samples` random samples.
pub fn verify_subsupersolution(
    pair: &SubSuperPair,
    spec: &SystemSpec,
    w_samples: usize,
) -> Result<SubSuperReport> {
    verify_with(
        pair,
        spec,
        &VerifyOptions {
            w_samples,
            ..VerifyOptions::default()
        },
    )
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Side {
    Sub,
    Super,
}

/// Full verification of the sub-supersolution inequalities.
pub fn verify_with(
    pair: &SubSuperPair,
    spec: &SystemSpec,
    opts: &VerifyOptions,
) -> Result<SubSuperReport> {
    spec.validate()?;
    let grid = spec.grid().clone();
    for f in pair.lower.iter().chain(&pair.upper) {
        if f.grid() != &grid {
            return Err(crate::Error::GridMismatch);
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);

    let ordering: [f64; 2] = core::array::from_fn(|i| {
        grid.interior()
            .iter()
            .map(|&k| rel_slack(pair.lower[i].get(k), pair.upper[i].get(k)))
            .fold(f64::INFINITY, f64::min)
    });
    let boundary_ok = grid
        .boundary()
        .iter()
        .all(|&k| (0..2).all(|i| pair.lower[i].get(k) == 0.0 && pair.upper[i].get(k) >= 0.0));
    let positivity: [f64; 2] = core::array::from_fn(|i| {
        grid.interior()
            .iter()
            .map(|&k| pair.lower[i].get(k))
            .fold(f64::INFINITY, f64::min)
    });

    let reactions_ok = spec
        .check_reactions_nonnegative(pair.upper[0].max_abs(), pair.upper[1].max_abs())
        .is_ok();
    let coefficient_ok = match pair.norm_range(spec) {
        Ok((lo, hi)) => spec.check_coefficient_positive(lo, hi).is_ok(),
        Err(_) => false,
    };

    let mut sub = [InequalityReport {
        min_slack: f64::INFINITY,
        worst_node: None,
        envelope_slack: f64::INFINITY,
    }; 2];
    let mut sup = sub;
    for i in 0..2 {
        let j = 1 - i;
        // Samples of w ∈ [u̲_j, ū_j].
        let mut ws: Vec<GridFunction> = Vec::with_capacity(opts.w_samples + 2);
        ws.push(pair.lower[j].clone());
        ws.push(pair.upper[j].clone());
        for _ in 0..opts.w_samples {
            let values = (0..grid.len())
                .map(|k| {
                    let t: f64 = rng.gen();
                    let (lo, hi) = (pair.lower[j].get(k), pair.upper[j].get(k));
                    lo + t * (hi - lo)
                })
                .collect();
            ws.push(GridFunction::new(grid.clone(), values)?);
        }
        let op = PxLaplacian::new(&spec.equations[i].p);
        for side in [Side::Sub, Side::Super] {
            let own = if side == Side::Sub {
                &pair.lower[i]
            } else {
                &pair.upper[i]
            };
            let norm_src = if side == Side::Sub {
                &pair.lower[j]
            } else {
                &pair.upper[j]
            };
            let lhs = op.apply_values(own.values(), 0.0);
            let fixed = spec.norms(i, norm_src)?;
            let report = if side == Side::Sub {
                &mut sub[i]
            } else {
                &mut sup[i]
            };
            for w in &ws {
                let mut norms = fixed;
                norms.r = luxemburg_norm(w, &spec.equations[i].r)?;
                let (a1, a2) = if i == 0 { (own, w) } else { (w, own) };
                let Ok(rhs) = spec.assemble(i, a1.values(), a2.values(), norms) else {
                    report.min_slack = f64::NEG_INFINITY;
                    continue;
                };
                for &k in grid.interior() {
                    let s = match side {
                        Side::Sub => rel_slack(lhs[k], rhs[k]),
                        Side::Super => rel_slack(rhs[k], lhs[k]),
                    };
                    if s < report.min_slack {
                        report.min_slack = s;
                        report.worst_node = Some(k);
                    }
                }
            }
            report.envelope_slack =
                envelope_slack(spec, pair, i, side, &lhs, fixed, opts.envelope_points)?;
        }
    }

    let mut min_slack = ordering[0].min(ordering[1]);
    for r in sub.iter().chain(&sup) {
        min_slack = min_slack.min(r.worst());
    }
    let certified = min_slack >= -opts.tol
        && boundary_ok
        && positivity.iter().all(|&m| m > 0.0)
        && reactions_ok
        && coefficient_ok;
    Ok(SubSuperReport {
        certified,
        tol: opts.tol,
        min_slack,
        ordering,
        boundary_ok,
        positivity,
        sub,
        sup,
        w_samples: opts.w_samples,
        endpoint_exact: spec.monotone,
        reactions_ok,
        coefficient_ok,
    })
}

/// Worst-case right side over the whole interval `w ∈ [u̲_j, ū_j]`:
/// smallest (sub) or largest (super) values of `f̃_i, g̃_i` over sampled
/// nodal values of `w`, divided by the largest (sub) or smallest (super)
/// `A(x, t)` over sampled `t ∈ [|u̲_j|_{r_i}, |ū_j|_{r_i}]`.
fn envelope_slack(
    spec: &SystemSpec,
    pair: &SubSuperPair,
    i: usize,
    side: Side,
    lhs: &[f64],
    norms: crate::system::NormScalars,
    points: usize,
) -> Result<f64> {
    let grid = spec.grid();
    let j = 1 - i;
    let eq = &spec.equations[i];
    let r_lo = luxemburg_norm(&pair.lower[j], &eq.r)?;
    let r_hi = luxemburg_norm(&pair.upper[j], &eq.r)?;
    let ts = sample_interval(r_lo.min(r_hi), r_lo.max(r_hi), points);
    let own = if side == Side::Sub {
        &pair.lower[i]
    } else {
        &pair.upper[i]
    };
    let mut worst = f64::INFINITY;
    for &k in grid.interior() {
        let mut a_ext = match side {
            Side::Sub => 0.0_f64,
            Side::Super => f64::INFINITY,
        };
        for &t in &ts {
            let Ok(a) = spec.coefficient(k, t) else {
                return Ok(f64::NEG_INFINITY);
            };
            a_ext = if side == Side::Sub {
                a_ext.max(a)
            } else {
                a_ext.min(a)
            };
        }
        let (lo, hi) = (pair.lower[j].get(k), pair.upper[j].get(k));
        let (mut f_ext, mut g_ext) = match side {
            Side::Sub => (f64::INFINITY, f64::INFINITY),
            Side::Super => (f64::NEG_INFINITY, f64::NEG_INFINITY),
        };
        for w in sample_interval(lo.min(hi), lo.max(hi), points) {
            let (u1, u2) = if i == 0 {
                (own.get(k), w)
            } else {
                (w, own.get(k))
            };
            let (fv, gv) = ((eq.f)(k, u1, u2), (eq.g)(k, u1, u2));
            match side {
                Side::Sub => {
                    f_ext = f_ext.min(fv);
                    g_ext = g_ext.min(gv);
                }
                Side::Super => {
                    f_ext = f_ext.max(fv);
                    g_ext = g_ext.max(gv);
                }
            }
        }
        let rhs = (f_ext * pow_nonneg(norms.q, eq.alpha.get(k))
            + g_ext * pow_nonneg(norms.s, eq.gamma.get(k)))
            / a_ext;
        let s = match side {
            Side::Sub => rel_slack(lhs[k], rhs),
            Side::Super => rel_slack(rhs, lhs[k]),
        };
        worst = worst.min(s);
    }
    Ok(worst)
}

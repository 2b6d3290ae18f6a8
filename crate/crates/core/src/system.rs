//! Data of the nonlocal system
//!
//! ```text
//! −A(x, |u_j|_{r_i}) Δ_{p_i} u_i = f_i(x, u₁, u₂) |u_j|_{q_i}^{α_i} + g_i(x, u₁, u₂) |u_j|_{s_i}^{γ_i}
//! ```
//!
//! (`j ≠ i`, zero boundary values), the truncations `T_i` and the
//! right-hand sides `H_i`. Components are indexed `0` and `1`.

use alloc::format;
use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::fmt;

use crate::error::{Error, Result};
use crate::grid::{ExponentField, ExponentKind, Grid, GridFunction};
use crate::lebesgue::luxemburg_norm;
use crate::math::powf;

/// Reaction term `(node, u₁, u₂) ↦ f`.
pub type Reaction = Arc<dyn Fn(usize, f64, f64) -> f64 + Send + Sync>;

/// Nonlocal coefficient `(node, t) ↦ A(x, t)`.
pub type Coefficient = Arc<dyn Fn(usize, f64) -> f64 + Send + Sync>;

/// `t^e` for `t ≥ 0`, with negative `t` clamped to 0 and `0⁰ = 1`.
#[inline]
pub fn pow_nonneg(t: f64, e: f64) -> f64 {
    powf(t.max(0.0), e)
}

/// Structural assumption on the nonlocal coefficient.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub enum Regime {
    /// `A(x, t) ≥ a₀` for all `t ≥ 0`.
    BoundedBelow { a0: f64 },
    /// `0 < A(x, t) ≤ a₀` for `t > 0` and `A(x, t) → a_∞ > 0` as `t → ∞`.
    BoundedAbove { a0: f64, a_inf: f64 },
    /// Only positivity on the relevant interval is assumed.
    Positive,
}

/// One equation of the system.
#[derive(Clone)]
pub struct Equation {
    pub p: ExponentField,
    /// Norm exponent for the `f` term.
    pub q: ExponentField,
    /// Norm exponent inside `A`.
    pub r: ExponentField,
    /// Norm exponent for the `g` term.
    pub s: ExponentField,
    pub alpha: ExponentField,
    pub gamma: ExponentField,
    pub f: Reaction,
    pub g: Reaction,
}

impl fmt::Debug for Equation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Equation")
            .field("p", &(self.p.inf(), self.p.sup()))
            .field("alpha", &(self.alpha.inf(), self.alpha.sup()))
            .field("gamma", &(self.gamma.inf(), self.gamma.sup()))
            .finish_non_exhaustive()
    }
}

/// Full data of the system.
#[derive(Clone)]
pub struct SystemSpec {
    pub equations: [Equation; 2],
    pub a: Coefficient,
    pub regime: Regime,
    /// `f_i`, `g_i` nondecreasing in both unknowns, so that order-interval
    /// quantifiers reduce to endpoint checks.
    pub monotone: bool,
    pub name: String,
}

impl fmt::Debug for SystemSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SystemSpec")
            .field("name", &self.name)
            .field("regime", &self.regime)
            .field("monotone", &self.monotone)
            .field("equations", &self.equations)
            .finish_non_exhaustive()
    }
}

/// Luxemburg norms of the other component entering equation `i`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct NormScalars {
    pub q: f64,
    pub s: f64,
    pub r: f64,
}

fn check_index(i: usize) -> Result<()> {
    if i > 1 {
        return Err(Error::InvalidArgument(format!(
            "component index must be 0 or 1, got {i}"
        )));
    }
    Ok(())
}

impl SystemSpec {
    pub fn grid(&self) -> &Arc<Grid> {
        self.equations[0].p.grid()
    }

    /// Checks grids and exponent kinds (hypothesis (H)).
    pub fn validate(&self) -> Result<()> {
        let grid = self.grid();
        for (i, eq) in self.equations.iter().enumerate() {
            let fields = [
                (&eq.p, ExponentKind::Laplacian, "p"),
                (&eq.q, ExponentKind::Lebesgue, "q"),
                (&eq.r, ExponentKind::Lebesgue, "r"),
                (&eq.s, ExponentKind::Lebesgue, "s"),
                (&eq.alpha, ExponentKind::Nonnegative, "α"),
                (&eq.gamma, ExponentKind::Nonnegative, "γ"),
            ];
            for (field, kind, name) in fields {
                if field.grid() != grid {
                    return Err(Error::GridMismatch);
                }
                let ok = match kind {
                    ExponentKind::Laplacian => field.inf() > 1.0,
                    ExponentKind::Lebesgue => field.inf() >= 1.0,
                    ExponentKind::Nonnegative => field.inf() >= 0.0,
                };
                if !ok {
                    return Err(Error::hypothesis(
                        "hypothesis (H)",
                        format!("{name}{} has inf {}", i + 1, field.inf()),
                    ));
                }
            }
        }
        match self.regime {
            Regime::BoundedBelow { a0 } if !(a0 > 0.0) => Err(Error::InvalidArgument(format!(
                "regime needs a₀ > 0, got {a0}"
            ))),
            Regime::BoundedAbove { a0, a_inf } if !(a0 > 0.0 && a_inf > 0.0) => {
                Err(Error::InvalidArgument(format!(
                    "regime needs a₀ > 0 and a_∞ > 0, got {a0}, {a_inf}"
                )))
            }
            _ => Ok(()),
        }
    }

    /// Norms of `other` (the component `j ≠ i`) used by equation `i`.
    pub fn norms(&self, i: usize, other: &GridFunction) -> Result<NormScalars> {
        check_index(i)?;
        let eq = &self.equations[i];
        Ok(NormScalars {
            q: luxemburg_norm(other, &eq.q)?,
            s: luxemburg_norm(other, &eq.s)?,
            r: luxemburg_norm(other, &eq.r)?,
        })
    }

    /// `A(x_k, t)`, rejecting non-positive values.
    pub fn coefficient(&self, k: usize, t: f64) -> Result<f64> {
        let value = (self.a)(k, t);
        if !(value > 0.0 && value.is_finite()) {
            return Err(Error::NonPositiveCoefficient { node: k, t, value });
        }
        Ok(value)
    }

    /// Nodewise `[f_i(u₁,u₂)·N_q^{α_i} + g_i(u₁,u₂)·N_s^{γ_i}] / A(x, a_arg)`.
    ///
    /// The reaction arguments, the norm scalars and the argument of `A` are
    /// passed separately so that the same routine serves `H_i` and the
    /// sub-supersolution inequalities.
    pub fn assemble(
        &self,
        i: usize,
        u1: &[f64],
        u2: &[f64],
        norms: NormScalars,
    ) -> Result<Vec<f64>> {
        check_index(i)?;
        let eq = &self.equations[i];
        let len = self.grid().len();
        if u1.len() != len || u2.len() != len {
            return Err(Error::LengthMismatch {
                expected: len,
                got: u1.len().min(u2.len()),
            });
        }
        let mut out = Vec::with_capacity(len);
        for k in 0..len {
            let a = self.coefficient(k, norms.r)?;
            let fv = (eq.f)(k, u1[k], u2[k]);
            let gv = (eq.g)(k, u1[k], u2[k]);
            let v = (fv * pow_nonneg(norms.q, eq.alpha.get(k))
                + gv * pow_nonneg(norms.s, eq.gamma.get(k)))
                / a;
            if !v.is_finite() {
                return Err(Error::NonFiniteEvaluation { node: k });
            }
            out.push(v);
        }
        Ok(out)
    }

    /// Samples `f_i, g_i ≥ 0` on `[0, ‖ū₁‖_∞] × [0, ‖ū₂‖_∞]` at every node.
    pub fn check_reactions_nonnegative(&self, sup1: f64, sup2: f64) -> Result<()> {
        const SAMPLES: usize = 5;
        let len = self.grid().len();
        for (i, eq) in self.equations.iter().enumerate() {
            for k in 0..len {
                for a in 0..SAMPLES {
                    for b in 0..SAMPLES {
                        let u = sup1 * a as f64 / (SAMPLES - 1) as f64;
                        let v = sup2 * b as f64 / (SAMPLES - 1) as f64;
                        let (fv, gv) = ((eq.f)(k, u, v), (eq.g)(k, u, v));
                        if !(fv >= 0.0 && gv >= 0.0) {
                            return Err(Error::hypothesis(
                                "nonnegative reactions",
                                format!(
                                    "f{0} or g{0} is negative at node {k}, (u, v) = ({u}, {v})",
                                    i + 1
                                ),
                            ));
                        }
                    }
                }
            }
        }
        Ok(())
    }

    /// Samples `A(x, t) > 0` on `[t_lo, t_hi]` at every node.
    pub fn check_coefficient_positive(&self, t_lo: f64, t_hi: f64) -> Result<()> {
        for t in sample_interval(t_lo, t_hi, 33) {
            for k in 0..self.grid().len() {
                self.coefficient(k, t)?;
            }
        }
        Ok(())
    }
}

/// Sample points of `[lo, hi]`: geometric when `lo > 0` and the interval
/// spans decades, uniform otherwise. Always includes both ends.
pub fn sample_interval(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    let count = count.max(2);
    if hi <= lo {
        return alloc::vec![lo];
    }
    let geometric = lo > 0.0 && hi / lo > 10.0;
    (0..count)
        .map(|m| {
            let t = m as f64 / (count - 1) as f64;
            if m == count - 1 {
                hi
            } else if geometric {
                lo * powf(hi / lo, t)
            } else {
                lo + (hi - lo) * t
            }
        })
        .collect()
}

/// Clamps `z` into `[lower, upper]` nodewise.
pub fn truncate(
    z: &GridFunction,
    lower: &GridFunction,
    upper: &GridFunction,
) -> Result<GridFunction> {
    z.check_grid(lower)?;
    z.check_grid(upper)?;
    if let Some(node) = lower.first_node(|k, l| l > upper.get(k)) {
        return Err(Error::Ordering { node });
    }
    let values = (0..z.values().len())
        .map(|k| z.get(k).max(lower.get(k)).min(upper.get(k)))
        .collect();
    GridFunction::new(z.grid().clone(), values)
}

/// `H_i(u₁, u₂)`: the right-hand side of equation `i` with the nonlocal
/// norms of the other component evaluated once.
pub fn nonlocal_rhs(
    i: usize,
    u1: &GridFunction,
    u2: &GridFunction,
    spec: &SystemSpec,
) -> Result<GridFunction> {
    check_index(i)?;
    u1.check_grid(u2)?;
    let other = if i == 0 { u2 } else { u1 };
    let norms = spec.norms(i, other)?;
    let values = spec.assemble(i, u1.values(), u2.values(), norms)?;
    GridFunction::new(u1.grid().clone(), values)
}

/// A bound `K_i ≥ |H_i(T₁z₁, T₂z₂)|` valid for every `(z₁, z₂)`.
///
/// Uses that the truncated arguments stay in the order box: reactions are
/// sampled over the box at every node, the norm powers are bounded by their
/// values at the box endpoints, and `A` is bounded below by sampling on the
/// range of the `r`-norm.
pub fn rhs_bound(
    i: usize,
    spec: &SystemSpec,
    lower: [&GridFunction; 2],
    upper: [&GridFunction; 2],
) -> Result<f64> {
    check_index(i)?;
    const SAMPLES: usize = 9;
    let j = 1 - i;
    let eq = &spec.equations[i];
    let lo_norms = spec.norms(i, lower[j])?;
    let hi_norms = spec.norms(i, upper[j])?;
    let a_min = {
        let mut m = f64::INFINITY;
        for t in sample_interval(lo_norms.r, hi_norms.r, 33) {
            for k in 0..spec.grid().len() {
                m = m.min(spec.coefficient(k, t)?);
            }
        }
        m
    };
    let mut bound: f64 = 0.0;
    for k in 0..spec.grid().len() {
        let (mut fmax, mut gmax): (f64, f64) = (0.0, 0.0);
        for a in 0..SAMPLES {
            for b in 0..SAMPLES {
                let s =
                    |c: usize, lo: f64, hi: f64| lo + (hi - lo) * c as f64 / (SAMPLES - 1) as f64;
                let u = s(a, lower[0].get(k), upper[0].get(k));
                let v = s(b, lower[1].get(k), upper[1].get(k));
                fmax = fmax.max((eq.f)(k, u, v).abs());
                gmax = gmax.max((eq.g)(k, u, v).abs());
            }
        }
        let (al, ga) = (eq.alpha.get(k), eq.gamma.get(k));
        let nq = pow_nonneg(lo_norms.q, al).max(pow_nonneg(hi_norms.q, al));
        let ns = pow_nonneg(lo_norms.s, ga).max(pow_nonneg(hi_norms.s, ga));
        bound = bound.max((fmax * nq + gmax * ns) / a_min);
    }
    Ok(bound)
}

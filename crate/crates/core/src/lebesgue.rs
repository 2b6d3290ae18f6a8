//! Variable-exponent Lebesgue numerics: modulars, Luxemburg norms, the
//! Hölder pairing and the modular/norm relations.

use crate::error::{Error, Result};
use crate::grid::{ExponentField, ExponentKind, GridFunction};
use crate::math::powf;

/// Relative tolerance on the Luxemburg root.
pub const NORM_RTOL: f64 = 1e-12;
/// Tolerance on each modular/norm inequality.
pub const DIAGNOSTIC_TOL: f64 = 1e-9;

fn check(u: &GridFunction, p: &ExponentField) -> Result<()> {
    u.check_grid(p.field())
}

fn scaled_modular(u: &[f64], p: &[f64], weights: &[f64], scale: f64) -> f64 {
    u.iter()
        .zip(p)
        .zip(weights)
        .map(|((&v, &e), &w)| {
            if v == 0.0 {
                0.0
            } else {
                w * powf(v.abs() / scale, e)
            }
        })
        .sum()
}

/// `ρ(u) = ∫ |u|^{p(x)}` by the shared trapezoid rule.
pub fn modular(u: &GridFunction, p: &ExponentField) -> Result<f64> {
    check(u, p)?;
    Ok(scaled_modular(
        u.values(),
        p.values(),
        u.grid().weights(),
        1.0,
    ))
}

/// Luxemburg norm: the `λ > 0` with `ρ(u/λ) = 1`, by bracketed bisection.
pub fn luxemburg_norm(u: &GridFunction, p: &ExponentField) -> Result<f64> {
    check(u, p)?;
    let m = u.max_abs();
    if m == 0.0 {
        return Ok(0.0);
    }
    let weights = u.grid().weights();
    let rho = |lam: f64| scaled_modular(u.values(), p.values(), weights, lam);
    let measure = u.grid().measure();
    let mut lo = m * powf(measure.min(1.0), 1.0 / p.sup()) / 2.0;
    let mut hi = m * powf(measure.max(1.0), 1.0 / p.inf()) * 2.0;
    // ρ(u/λ) is decreasing in λ; widen until it straddles 1.
    while rho(lo) < 1.0 {
        lo /= 2.0;
    }
    while rho(hi) > 1.0 {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if rho(mid) > 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 0.01 * NORM_RTOL * hi {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Outcome of the Hölder inequality check.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct HolderReport {
    /// `|∫ u v|`.
    pub lhs: f64,
    /// `(1/p⁻ + 1/q⁻)·|u|_p·|v|_q`.
    pub bound: f64,
    pub norm_u: f64,
    pub norm_v: f64,
    pub holds: bool,
}

/// Checks `|∫uv| ≤ (1/p⁻ + 1/q⁻)|u|_{p(x)}|v|_{q(x)}` with `q` the
/// conjugate exponent of `p`.
pub fn holder_pairing_check(
    u: &GridFunction,
    v: &GridFunction,
    p: &ExponentField,
) -> Result<HolderReport> {
    check(u, p)?;
    check(v, p)?;
    if p.inf() <= 1.0 {
        return Err(Error::hypothesis(
            "hypothesis (H)",
            alloc::format!("Hölder pairing needs p⁻ > 1, got {}", p.inf()),
        ));
    }
    let q = ExponentField::new(p.field().map(|e| e / (e - 1.0))?, ExponentKind::Lebesgue)?;
    let product = u.zip_map(v, |a, b| a * b)?;
    let lhs = product.integral().abs();
    let norm_u = luxemburg_norm(u, p)?;
    let norm_v = luxemburg_norm(v, &q)?;
    let bound = (1.0 / p.inf() + 1.0 / q.inf()) * norm_u * norm_v;
    let holds = lhs <= bound * (1.0 + DIAGNOSTIC_TOL);
    Ok(HolderReport {
        lhs,
        bound,
        norm_u,
        norm_v,
        holds,
    })
}

/// Where the norm sits relative to 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub enum NormRegime {
    Below,
    Unit,
    Above,
}

/// Modular, norm and which of the modular/norm relations applied and held.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct ModularReport {
    pub modular: f64,
    pub norm: f64,
    pub p_minus: f64,
    pub p_plus: f64,
    pub regime: NormRegime,
    /// `ρ(u/|u|) = 1`.
    pub unit_ball_ok: bool,
    /// Norm below / at / above one forces the modular likewise.
    pub trichotomy_ok: bool,
    /// Power sandwich: `|u|^{p⁻} ≤ ρ ≤ |u|^{p⁺}` above one, reversed below.
    /// Not applicable (and reported true) in the unit regime.
    pub power_bounds_ok: bool,
    pub holds: bool,
}

/// Evaluates the modular/norm relations with tolerance [`DIAGNOSTIC_TOL`].
pub fn modular_norm_diagnostics(u: &GridFunction, p: &ExponentField) -> Result<ModularReport> {
    let rho = modular(u, p)?;
    let norm = luxemburg_norm(u, p)?;
    let (pm, pp) = (p.inf(), p.sup());
    let tol = DIAGNOSTIC_TOL;
    let slack = |x: f64| tol * x.abs().max(1.0);

    let unit_ball_ok = norm == 0.0 || (modular(&u.scale(1.0 / norm), p)? - 1.0).abs() <= tol;
    let regime = if (norm - 1.0).abs() <= tol {
        NormRegime::Unit
    } else if norm < 1.0 {
        NormRegime::Below
    } else {
        NormRegime::Above
    };
    let trichotomy_ok = match regime {
        NormRegime::Unit => (rho - 1.0).abs() <= slack(1.0),
        NormRegime::Below => rho < 1.0 + tol,
        NormRegime::Above => rho > 1.0 - tol,
    };
    let power_bounds_ok = match regime {
        NormRegime::Unit => true,
        NormRegime::Above => {
            let (lo, hi) = (powf(norm, pm), powf(norm, pp));
            lo - slack(lo) <= rho && rho <= hi + slack(hi)
        }
        NormRegime::Below => {
            let (lo, hi) = (powf(norm, pp), powf(norm, pm));
            lo - slack(lo) <= rho && rho <= hi + slack(hi)
        }
    };
    Ok(ModularReport {
        modular: rho,
        norm,
        p_minus: pm,
        p_plus: pp,
        regime,
        unit_ball_ok,
        trichotomy_ok,
        power_bounds_ok,
        holds: unit_ball_ok && trichotomy_ok && power_bounds_ok,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::build_grid;
    use alloc::sync::Arc;
    use alloc::vec::Vec;
    use proptest::prelude::*;

    fn line(n: usize) -> Arc<crate::grid::Grid> {
        build_grid(1, n, &[(0.0, 1.0)]).unwrap()
    }

    fn expo(g: &Arc<crate::grid::Grid>, text: &str) -> ExponentField {
        ExponentField::from_expr(text, g.clone(), ExponentKind::Lebesgue).unwrap()
    }

    /// Scalar bisection on `½λ^{-2} + ½λ^{-3} = 1`, independent of the grid.
    fn two_piece_root() -> f64 {
        let (mut lo, mut hi) = (0.5_f64, 2.0_f64);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            let g = 0.5 / (mid * mid) + 0.5 / (mid * mid * mid) - 1.0;
            if g > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn modular_of_constants() {
        let g = line(11);
        let p = expo(&g, "2 + x");
        assert_eq!(modular(&GridFunction::zeros(g.clone()), &p).unwrap(), 0.0);
        assert!(
            (modular(&GridFunction::constant(g.clone(), 1.0), &p).unwrap() - 1.0).abs() < 1e-14
        );
        let p2 = expo(&g, "2");
        assert!(
            (modular(&GridFunction::constant(g.clone(), 2.0), &p2).unwrap() - 4.0).abs() < 1e-14
        );
    }

    #[test]
    fn norm_of_constants() {
        let g = line(11);
        let p2 = expo(&g, "2");
        assert!(
            (luxemburg_norm(&GridFunction::constant(g.clone(), 2.0), &p2).unwrap() - 2.0).abs()
                < 1e-11
        );
        assert_eq!(luxemburg_norm(&GridFunction::zeros(g), &p2).unwrap(), 0.0);
    }

    #[test]
    fn norm_of_two_piece_exponent() {
        // Even node count: no node sits at ½, the halves carry equal weight.
        let g = line(100);
        let p = ExponentField::new(
            GridFunction::from_fn(g.clone(), |x| if x[0] < 0.5 { 2.0 } else { 3.0 }).unwrap(),
            ExponentKind::Lebesgue,
        )
        .unwrap();
        let u = GridFunction::constant(g, 1.0);
        let got = luxemburg_norm(&u, &p).unwrap();
        let want = two_piece_root();
        assert!((got - want).abs() <= 1e-10 * want, "{got} vs {want}");
    }

    #[test]
    fn holder_equality_case() {
        let g = line(21);
        let p = expo(&g, "2");
        let one = GridFunction::constant(g.clone(), 1.0);
        let r = holder_pairing_check(&one, &one, &p).unwrap();
        assert!((r.lhs - 1.0).abs() < 1e-12 && (r.bound - 1.0).abs() < 1e-10 && r.holds);
        let r0 = holder_pairing_check(&GridFunction::zeros(g), &one, &p).unwrap();
        assert_eq!(r0.lhs, 0.0);
        assert!(r0.holds);
    }

    #[test]
    fn holder_rejects_p_one() {
        let g = line(5);
        let p = expo(&g, "1");
        let one = GridFunction::constant(g, 1.0);
        assert!(holder_pairing_check(&one, &one, &p).is_err());
    }

    #[test]
    fn diagnostics_regimes() {
        let g = line(41);
        let p = expo(&g, "2 + x");
        let big = modular_norm_diagnostics(&GridFunction::constant(g.clone(), 2.0), &p).unwrap();
        assert_eq!(big.regime, NormRegime::Above);
        assert!(big.holds);
        assert!(4.0 <= big.modular && big.modular <= 8.0);
        let small = modular_norm_diagnostics(&GridFunction::constant(g.clone(), 0.5), &p).unwrap();
        assert_eq!(small.regime, NormRegime::Below);
        assert!(small.holds);
        let u = GridFunction::from_fn(g.clone(), |x| 1.0 + x[0]).unwrap();
        let n = luxemburg_norm(&u, &p).unwrap();
        let unit = modular_norm_diagnostics(&u.scale(1.0 / n), &p).unwrap();
        assert_eq!(unit.regime, NormRegime::Unit);
        assert!((unit.modular - 1.0).abs() <= 1e-9 && unit.holds);
    }

    #[test]
    fn vanishing_sequence() {
        let g = line(41);
        let p = expo(&g, "1.5 + x");
        let u = GridFunction::from_fn(g, |x| 3.0 * crate::math::sin(3.0 * x[0]) + 1.0).unwrap();
        let n = 1.0e7;
        let un = u.scale(1.0 / n);
        assert!(modular(&un, &p).unwrap() < 1e-6);
        assert!(luxemburg_norm(&un, &p).unwrap() < 1e-6);
    }

    fn field_strategy(len: usize) -> impl Strategy<Value = Vec<f64>> {
        proptest::collection::vec(-5.0f64..5.0, len)
    }

    proptest! {
        #[test]
        fn homogeneity(vals in field_strategy(17), c in 0.01f64..100.0, shift in 0.0f64..2.0) {
            let g = line(17);
            let p = ExponentField::new(
                GridFunction::from_fn(g.clone(), |x| 1.2 + shift * x[0]).unwrap(),
                ExponentKind::Lebesgue,
            ).unwrap();
            let u = GridFunction::new(g, vals).unwrap();
            let a = luxemburg_norm(&u.scale(c), &p).unwrap();
            let b = c * luxemburg_norm(&u, &p).unwrap();
            prop_assert!((a - b).abs() <= 1e-9 * c * u.max_abs().max(1e-300));
        }

        #[test]
        fn modular_monotone(vals in field_strategy(17), factors in proptest::collection::vec(0.0f64..1.0, 17)) {
            let g = line(17);
            let p = expo(&g, "1 + 2*x");
            let v = GridFunction::new(g.clone(), vals.clone()).unwrap();
            let u = GridFunction::new(g, vals.iter().zip(&factors).map(|(a, f)| a * f).collect()).unwrap();
            prop_assert!(modular(&u, &p).unwrap() <= modular(&v, &p).unwrap() + 1e-12);
        }

        #[test]
        fn holder_holds(a in -3.0f64..3.0, b in -3.0f64..3.0, c in 0.5f64..4.0, d in 0.5f64..4.0, s in 0.0f64..1.5) {
            let g = line(33);
            let p = ExponentField::new(
                GridFunction::from_fn(g.clone(), |x| 1.3 + s * x[0] * x[0]).unwrap(),
                ExponentKind::Lebesgue,
            ).unwrap();
            let u = GridFunction::from_fn(g.clone(), |x| a + crate::math::sin(c * x[0])).unwrap();
            let v = GridFunction::from_fn(g, |x| b * crate::math::cos(d * x[0]) + x[0]).unwrap();
            prop_assert!(holder_pairing_check(&u, &v, &p).unwrap().holds);
        }

        #[test]
        fn diagnostics_hold(vals in field_strategy(17), s in 0.0f64..2.0) {
            let g = line(17);
            let p = ExponentField::new(
                GridFunction::from_fn(g.clone(), |x| 1.1 + s * x[0]).unwrap(),
                ExponentKind::Lebesgue,
            ).unwrap();
            let u = GridFunction::new(g, vals).unwrap();
            prop_assume!(u.max_abs() > 1e-6);
            prop_assert!(modular_norm_diagnostics(&u, &p).unwrap().holds);
        }
    }
}

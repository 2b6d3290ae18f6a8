//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any
//! criterion fails. Tolerances and runtime budgets are pinned below.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, ExitCode, Output};
use std::sync::Arc;
use std::time::{Duration, Instant};

use pxlap_core::apps::concave_convex::{psi, ConcaveConvexParams};
use pxlap_core::apps::logistic::{logistic_setup, LogisticOptions, LogisticParams};
use pxlap_core::apps::sublinear::{sublinear_setup, SublinearParams};
use pxlap_core::apps::SearchOptions;
use pxlap_core::grid::{build_grid, ExponentField, ExponentKind, Grid, GridFunction};
use pxlap_core::lebesgue::{luxemburg_norm, modular};
use pxlap_core::operator::{energy, PxLaplacian};
use pxlap_core::picard::{solve_system, weak_residual, PicardOptions};
use pxlap_core::solver::{fan_scaling_check, solve_constant_rhs, solve_dirichlet, SolverOptions};
use pxlap_core::system::{Coefficient, Regime};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

const NORM_RTOL: f64 = 1e-10;
const MODULAR_TOL: f64 = 1e-9;
const MODULAR_SAMPLES: usize = 240;
const ORDER_RATIO: (f64, f64) = (3.2, 4.8);
const SLOPE_SLACK: f64 = 0.05;
const SLOPE_EQUALITY: f64 = 0.02;
const COMPARISON_PAIRS: usize = 50;
const COMPARISON_MARGIN: f64 = -1e-8;
const COMPARISON_P_MINUS: f64 = 1.2;
const GRADIENT_RTOL: f64 = 1e-6;
const GRADIENT_DIRECTIONS: usize = 20;
const MIN_SLACK: f64 = -1e-10;
const WEAK_RESIDUAL: f64 = 1e-8;
const PSI_STATIONARITY: f64 = 1e-6;
const PSI_TUPLES: usize = 20;
const THRESHOLD_TOL: f64 = 1e-6;
const LOGISTIC_CAP: f64 = 1e-8;
const LOGISTIC_RESIDUAL: f64 = 1e-8;
const SEED: u64 = 0x5eed;

type Check = fn() -> Result<String, String>;
type Profile = Box<dyn Fn(f64) -> f64>;
/// Name, preset, key replacements and the hypothesis the error must name.
type InvalidCase<'a> = (&'a str, &'a str, &'a [(&'a str, &'a str)], &'a str);

fn main() -> ExitCode {
    let criteria: [(u32, &str, Duration, Check); 10] = [
        (
            1,
            "Luxemburg norm oracles",
            Duration::from_secs(1),
            luxemburg_oracles,
        ),
        (
            2,
            "modular/norm relations",
            Duration::from_secs(10),
            modular_relations,
        ),
        (
            3,
            "solver convergence order",
            Duration::from_secs(30),
            convergence_order,
        ),
        (
            4,
            "constant-RHS scaling",
            Duration::from_secs(30),
            scaling_slopes,
        ),
        (
            5,
            "comparison principle",
            Duration::from_secs(60),
            comparison_pairs,
        ),
        (
            6,
            "energy gradient check",
            Duration::from_secs(5),
            gradient_check,
        ),
        (
            7,
            "sublinear end-to-end",
            Duration::from_secs(180),
            sublinear_end_to_end,
        ),
        (
            8,
            "concave-convex Ψ machinery",
            Duration::from_secs(10),
            psi_machinery,
        ),
        (
            9,
            "logistic end-to-end",
            Duration::from_secs(120),
            logistic_end_to_end,
        ),
        (
            10,
            "falsification cases",
            Duration::from_secs(10),
            falsification,
        ),
    ];
    let mut failed = 0;
    for (n, name, budget, check) in criteria {
        let start = Instant::now();
        let result = check();
        let elapsed = start.elapsed();
        let (ok, detail) = match result {
            Ok(d) if elapsed <= budget => (true, d),
            Ok(d) => (
                false,
                format!("{d}; over the {:.0} s budget", budget.as_secs_f64()),
            ),
            Err(d) => (false, d),
        };
        let tag = if ok { "PASS" } else { "FAIL" };
        println!(
            "{tag} criterion {n} ({name}): {detail} [{:.2} s]",
            elapsed.as_secs_f64()
        );
        if !ok {
            failed += 1;
        }
    }
    println!("{} of 10 criteria passed", 10 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

fn line(n: usize) -> Arc<Grid> {
    build_grid(1, n, &[(0.0, 1.0)]).unwrap()
}

fn square(n: usize) -> Arc<Grid> {
    build_grid(2, n, &[(0.0, 1.0), (0.0, 1.0)]).unwrap()
}

fn exponent(grid: &Arc<Grid>, text: &str, kind: ExponentKind) -> Result<ExponentField, String> {
    ExponentField::from_expr(text, grid.clone(), kind).map_err(err)
}

fn random_field(rng: &mut ChaCha8Rng, grid: &Arc<Grid>, lo: f64, hi: f64) -> GridFunction {
    let values = (0..grid.len()).map(|_| rng.gen_range(lo..hi)).collect();
    GridFunction::new(grid.clone(), values).unwrap()
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

// 1 ---------------------------------------------------------------------------

/// `λ` with `Σ w_k (c/λ)^{p_k} = 1`, by plain bisection on `λ`.
fn constant_function_norm(c: f64, p: &[f64], w: &[f64]) -> f64 {
    let rho = |lam: f64| -> f64 { p.iter().zip(w).map(|(e, wk)| wk * (c / lam).powf(*e)).sum() };
    let (mut lo, mut hi) = (1e-3 * c, 1e3 * c);
    for _ in 0..300 {
        let mid = 0.5 * (lo + hi);
        if rho(mid) > 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn luxemburg_oracles() -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut worst: f64 = 0.0;
    let mut cases = 0;
    for grid in [line(65), line(257), square(17)] {
        for &e in &[1.0, 1.5, 2.0, 3.7, 6.0] {
            let p =
                ExponentField::constant(grid.clone(), e, ExponentKind::Lebesgue).map_err(err)?;
            let u = random_field(&mut rng, &grid, -3.0, 3.0);
            let classical: f64 = grid
                .weights()
                .iter()
                .zip(u.values())
                .map(|(w, v)| w * v.abs().powf(e))
                .sum::<f64>()
                .powf(1.0 / e);
            worst = worst.max(rel(luxemburg_norm(&u, &p).map_err(err)?, classical));
            cases += 1;
        }
        for text in ["1.5 + x", "2 + sin(pi*x)", "1.2 + 3*x*x"] {
            let p = exponent(&grid, text, ExponentKind::Lebesgue)?;
            for &c in &[0.01, 0.7, 1.0, 5.0, 1e3] {
                let u = GridFunction::constant(grid.clone(), c);
                let oracle = constant_function_norm(c, p.values(), grid.weights());
                worst = worst.max(rel(luxemburg_norm(&u, &p).map_err(err)?, oracle));
                cases += 1;
            }
        }
    }
    ensure(worst <= NORM_RTOL, || {
        format!("worst relative error {worst:.2e} > {NORM_RTOL:e}")
    })?;
    Ok(format!(
        "{cases} cases, worst relative error {worst:.2e} (tol {NORM_RTOL:e})"
    ))
}

// 2 ---------------------------------------------------------------------------

fn modular_relations() -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 2);
    let tol = MODULAR_TOL;
    let grids = [line(33), line(65), square(9)];
    let (mut below, mut above, mut unit) = (0, 0, 0);
    for s in 0..MODULAR_SAMPLES {
        let grid = &grids[s % grids.len()];
        let lo = rng.gen_range(1.0..3.0);
        let hi = lo + rng.gen_range(0.01..3.0);
        let p = ExponentField::new(random_field(&mut rng, grid, lo, hi), ExponentKind::Lebesgue)
            .map_err(err)?;
        let scale = 10f64.powf(rng.gen_range(-3.0..3.0));
        let u = random_field(&mut rng, grid, -1.0, 1.0).scale(scale);
        let (pm, pp) = (p.inf(), p.sup());
        let norm = luxemburg_norm(&u, &p).map_err(err)?;
        let rho = modular(&u, &p).map_err(err)?;
        let ctx = || format!("sample {s}: |u| = {norm:e}, ρ(u) = {rho:e}, p ∈ [{pm}, {pp}]");

        // (i) the norm is the λ with ρ(u/λ) = 1.
        let at_norm = modular(&u.scale(1.0 / norm), &p).map_err(err)?;
        ensure((at_norm - 1.0).abs() <= tol, || {
            format!("(i) ρ(u/|u|) = {at_norm}; {}", ctx())
        })?;
        // (ii) trichotomy, with the equality case on the normalized function.
        match norm.partial_cmp(&1.0) {
            Some(std::cmp::Ordering::Less) => {
                ensure(rho < 1.0 + tol, || format!("(ii) {}", ctx()))?
            }
            Some(std::cmp::Ordering::Greater) => {
                ensure(rho > 1.0 - tol, || format!("(ii) {}", ctx()))?
            }
            _ => ensure((rho - 1.0).abs() <= tol, || format!("(ii) {}", ctx()))?,
        }
        let unit_u = u.scale(1.0 / norm);
        let unit_norm = luxemburg_norm(&unit_u, &p).map_err(err)?;
        ensure(
            (unit_norm - 1.0).abs() <= tol && (at_norm - 1.0).abs() <= tol,
            || {
                format!(
                    "(ii) equality case: |u/|u|| = {unit_norm}, ρ = {at_norm}; {}",
                    ctx()
                )
            },
        )?;
        unit += 1;
        // (iii) and (iv) power bounds.
        let within = |lo: f64, hi: f64| lo * (1.0 - tol) <= rho && rho <= hi * (1.0 + tol);
        if norm > 1.0 {
            ensure(within(norm.powf(pm), norm.powf(pp)), || {
                format!("(iii) {}", ctx())
            })?;
            above += 1;
        } else if norm < 1.0 {
            ensure(within(norm.powf(pp), norm.powf(pm)), || {
                format!("(iv) {}", ctx())
            })?;
            below += 1;
        }
        // (v) along t·u: the norm is homogeneous and ρ(tu) is squeezed by
        // t^{p∓}ρ(u), so both vanish together as t → 0 and blow up together
        // as t → ∞.
        for k in [-40, -20, -5, 5, 20, 40] {
            let t = 2f64.powi(k);
            let nt = luxemburg_norm(&u.scale(t), &p).map_err(err)?;
            let rt = modular(&u.scale(t), &p).map_err(err)?;
            ensure(rel(nt, t * norm) <= tol, || {
                format!("(v) |tu| = {nt:e} vs t|u| at t = 2^{k}; {}", ctx())
            })?;
            let (a, b) = if t < 1.0 {
                (t.powf(pp), t.powf(pm))
            } else {
                (t.powf(pm), t.powf(pp))
            };
            ensure(
                a * rho * (1.0 - tol) <= rt && rt <= b * rho * (1.0 + tol),
                || {
                    format!(
                        "(v) ρ(tu) = {rt:e} outside [{:e}, {:e}] at t = 2^{k}; {}",
                        a * rho,
                        b * rho,
                        ctx()
                    )
                },
            )?;
        }
    }
    ensure(below > 0 && above > 0, || {
        format!("sampling missed a regime: {below} below, {above} above")
    })?;
    Ok(format!(
        "{MODULAR_SAMPLES} samples ({below} with |u| < 1, {above} with |u| > 1, {unit} unit cases), tol {tol:e}"
    ))
}

// 3 ---------------------------------------------------------------------------

/// Max error of the piecewise-linear interpolant of nodal values against
/// `exact`, sampled at 16 points per cell.
fn interpolant_error(grid: &Grid, u: &GridFunction, exact: impl Fn(f64) -> f64) -> f64 {
    let mut worst: f64 = 0.0;
    for i in 0..grid.n() - 1 {
        let (x0, x1) = (grid.point(i)[0], grid.point(i + 1)[0]);
        for s in 0..=16 {
            let t = s as f64 / 16.0;
            let x = x0 + t * (x1 - x0);
            let v = (1.0 - t) * u.get(i) + t * u.get(i + 1);
            worst = worst.max((v - exact(x)).abs());
        }
    }
    worst
}

fn convergence_order() -> Result<String, String> {
    let lambda = 3.0;
    let cases: [(&str, f64, Profile); 2] = [
        (
            "p ≡ 2",
            2.0,
            Box::new(move |x: f64| lambda * x * (1.0 - x) / 2.0),
        ),
        (
            "p ≡ 3",
            3.0,
            Box::new(move |x: f64| {
                // −(|u′|u′)′ = λ: u′ = sgn(½ − x)·(λ|x − ½|)^{1/2}.
                let e = 1.5;
                lambda.sqrt() / e * (0.5f64.powf(e) - (x - 0.5).abs().powf(e))
            }),
        ),
    ];
    let mut lines = Vec::new();
    let mut ok = true;
    for (name, pval, exact) in &cases {
        let mut errors = Vec::new();
        for n in [65, 129, 257] {
            let grid = line(n);
            let p = ExponentField::constant(grid.clone(), *pval, ExponentKind::Laplacian)
                .map_err(err)?;
            let sol = solve_constant_rhs(lambda, &p, &SolverOptions::default()).map_err(err)?;
            errors.push(interpolant_error(&grid, &sol.u, exact));
        }
        let ratios = [errors[0] / errors[1], errors[1] / errors[2]];
        let good = ratios
            .iter()
            .all(|r| (ORDER_RATIO.0..=ORDER_RATIO.1).contains(r));
        ok &= good;
        lines.push(format!(
            "{name}: errors {:.3e}, {:.3e}, {:.3e}, ratios {:.3}, {:.3}{}",
            errors[0],
            errors[1],
            errors[2],
            ratios[0],
            ratios[1],
            if good { "" } else { " (outside [3.2, 4.8])" }
        ));
    }
    let detail = lines.join("; ");
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

// 4 ---------------------------------------------------------------------------

fn scaling_slopes() -> Result<String, String> {
    let lambdas = [8.0, 16.0, 32.0, 64.0];
    let mut lines = Vec::new();
    let cases: [(Arc<Grid>, &str, bool); 4] = [
        (line(65), "2", true),
        (line(65), "3", true),
        (line(65), "2.5 + 0.5*sin(pi*x)", false),
        (square(33), "2.2 + 0.6*x*y", false),
    ];
    for (grid, text, constant) in cases {
        let p = exponent(&grid, text, ExponentKind::Laplacian)?;
        let report = fan_scaling_check(&p, &lambdas, &SolverOptions::default()).map_err(err)?;
        let target = 1.0 / (p.inf() - 1.0);
        let label = format!(
            "p = {text} ({}-D): slope {:.4}, 1/(p⁻−1) = {target:.4}",
            grid.dim(),
            report.slope
        );
        ensure(report.slope <= target + SLOPE_SLACK, || {
            format!("{label} exceeds bound + {SLOPE_SLACK}")
        })?;
        if constant {
            ensure((report.slope - target).abs() <= SLOPE_EQUALITY, || {
                format!("{label} not within {SLOPE_EQUALITY}")
            })?;
        }
        lines.push(label);
    }
    Ok(lines.join("; "))
}

// 5 ---------------------------------------------------------------------------

fn comparison_pairs() -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 5);
    let mut worst = f64::INFINITY;
    let (mut p_min, mut p_max) = (f64::INFINITY, 0.0f64);
    for s in 0..COMPARISON_PAIRS {
        let grid = if s % 5 == 4 { square(17) } else { line(65) };
        let base = rng.gen_range(1.7..3.0);
        let amp = rng.gen_range(0.0..(base - COMPARISON_P_MINUS - 0.05).min(1.0));
        let (fx, fy, ph) = (
            rng.gen_range(0.5..3.0),
            rng.gen_range(0.5..3.0),
            rng.gen_range(0.0..6.3),
        );
        let p = ExponentField::new(
            GridFunction::from_fn(grid.clone(), |x| {
                base + amp * (std::f64::consts::PI * (fx * x[0] + fy * x[1]) + ph).sin()
            })
            .map_err(err)?,
            ExponentKind::Laplacian,
        )
        .map_err(err)?;
        ensure(p.inf() > COMPARISON_P_MINUS, || {
            format!("pair {s}: p⁻ = {}", p.inf())
        })?;
        p_min = p_min.min(p.inf());
        p_max = p_max.max(p.sup());
        let scale = 10f64.powf(rng.gen_range(-1.0..1.5));
        let f = random_field(&mut rng, &grid, -1.0, 1.0).scale(scale);
        let gap = random_field(&mut rng, &grid, 0.0, 1.0)
            .map(|t| if t < 0.3 { 0.0 } else { t })
            .map_err(err)?;
        let g = f.zip_map(&gap, |a, b| a + scale * b).map_err(err)?;
        let opts = SolverOptions::default();
        let u = solve_dirichlet(&f, &p, &opts)
            .map_err(|e| format!("pair {s}, lower solve: {e}"))?
            .u;
        let v = solve_dirichlet(&g, &p, &opts)
            .map_err(|e| format!("pair {s}, upper solve: {e}"))?
            .u;
        let margin = u.min_gap(&v);
        worst = worst.min(margin);
        ensure(margin >= COMPARISON_MARGIN, || {
            format!("pair {s}: margin {margin:e}")
        })?;
    }
    Ok(format!(
        "{COMPARISON_PAIRS} pairs, p ∈ [{p_min:.3}, {p_max:.3}], worst margin {worst:.2e} (≥ {COMPARISON_MARGIN:e})"
    ))
}

// 6 ---------------------------------------------------------------------------

fn gradient_check() -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 6);
    let cases = [
        (line(41), "2"),
        (line(41), "2.5 + 0.4*sin(pi*x)"),
        (square(9), "1.6 + 0.5*x*y"),
    ];
    let mut worst: f64 = 0.0;
    for (grid, text) in &cases {
        let p = exponent(grid, text, ExponentKind::Laplacian)?;
        let op = PxLaplacian::new(&p);
        let f = random_field(&mut rng, grid, -1.0, 1.0);
        let interior = |rng: &mut ChaCha8Rng| {
            let values = (0..grid.len())
                .map(|k| {
                    if grid.is_boundary(k) {
                        0.0
                    } else {
                        rng.gen_range(-1.0..1.0)
                    }
                })
                .collect();
            GridFunction::new(grid.clone(), values).unwrap()
        };
        for _ in 0..GRADIENT_DIRECTIONS {
            let u = interior(&mut rng);
            let d = interior(&mut rng);
            let grad = op.energy_gradient(u.values(), 0.0);
            let exact: f64 = (0..grid.len())
                .map(|k| (grad[k] - grid.weights()[k] * f.get(k)) * d.get(k))
                .sum();
            let t = 1e-5;
            let shifted = |s: f64| u.zip_map(&d, |a, b| a + s * b).unwrap();
            let fd = (energy(&shifted(t), &p, &f).map_err(err)?
                - energy(&shifted(-t), &p, &f).map_err(err)?)
                / (2.0 * t);
            let e = (fd - exact).abs() / exact.abs().max(1e-12);
            worst = worst.max(e);
            ensure(e <= GRADIENT_RTOL, || {
                format!("p = {text}: relative error {e:e}")
            })?;
        }
    }
    Ok(format!("3 fields × {GRADIENT_DIRECTIONS} directions, worst relative error {worst:.2e} (tol {GRADIENT_RTOL:e})"))
}

// 7 ---------------------------------------------------------------------------

fn sublinear_params(
    grid: &Arc<Grid>,
    p: &str,
    a: Coefficient,
    regime: Regime,
) -> Result<SublinearParams, String> {
    let pf = || exponent(grid, p, ExponentKind::Laplacian);
    let two = || ExponentField::constant(grid.clone(), 2.0, ExponentKind::Lebesgue).unwrap();
    let pow = || ExponentField::constant(grid.clone(), 0.3, ExponentKind::Nonnegative).unwrap();
    Ok(SublinearParams {
        p: [pf()?, pf()?],
        q: [two(), two()],
        r: [two(), two()],
        alpha: [pow(), pow()],
        beta: [pow(), pow()],
        gamma: [pow(), pow()],
        a,
        regime,
    })
}

fn sublinear_end_to_end() -> Result<String, String> {
    let mut lines = Vec::new();
    // A₁ needs A ≥ a₀ > 0 for all t ≥ 0, which t/(1+t) violates at t = 0;
    // its shift by one is used there.
    let a1: Coefficient = Arc::new(|_, t| 1.0 + t / (1.0 + t));
    let a2: Coefficient = Arc::new(|_, t| t / (1.0 + t));
    let cases = [
        (
            "A1 1-D",
            line(129),
            "2.5 + 0.5*x",
            a1.clone(),
            Regime::BoundedBelow { a0: 1.0 },
        ),
        (
            "A2 1-D",
            line(129),
            "2.5 + 0.5*x",
            a2.clone(),
            Regime::BoundedAbove {
                a0: 1.0,
                a_inf: 1.0,
            },
        ),
        (
            "A1 2-D",
            square(65),
            "2.5 + 0.25*x*y",
            a1,
            Regime::BoundedBelow { a0: 1.0 },
        ),
        (
            "A2 2-D",
            square(65),
            "2.5 + 0.25*x*y",
            a2,
            Regime::BoundedAbove {
                a0: 1.0,
                a_inf: 1.0,
            },
        ),
    ];
    for (name, grid, p, a, regime) in cases {
        let params = sublinear_params(&grid, p, a, regime)?;
        let setup = sublinear_setup(&params, &SearchOptions::default())
            .map_err(|e| format!("{name}: {e}"))?;
        let report = &setup.selection.report;
        ensure(report.certified && report.min_slack >= MIN_SLACK, || {
            format!(
                "{name}: pair not certified, min slack {:e}",
                report.min_slack
            )
        })?;
        let (u, v, trace) = solve_system(
            &setup.spec,
            &setup.selection.pair,
            &PicardOptions::default(),
        )
        .map_err(|e| format!("{name}: {e}"))?;
        let residual = weak_residual(&u, &v, &setup.spec).map_err(err)?;
        ensure(trace.converged && residual <= WEAK_RESIDUAL, || {
            format!(
                "{name}: converged {}, weak residual {residual:e}",
                trace.converged
            )
        })?;
        let pair = &setup.selection.pair;
        let sandwiched = trace.sandwich_ok
            && pair.lower[0].le(&u, 0.0)
            && u.le(&pair.upper[0], 0.0)
            && pair.lower[1].le(&v, 0.0)
            && v.le(&pair.upper[1], 0.0);
        let positive = grid
            .interior()
            .iter()
            .all(|&k| u.get(k) > 0.0 && v.get(k) > 0.0);
        ensure(sandwiched && positive, || {
            format!("{name}: sandwiched {sandwiched}, positive {positive}")
        })?;
        lines.push(format!(
            "{name}: λ = 2^{}, min slack {:.2e}, {} iterations, weak residual {residual:.1e}",
            setup.selection.lambda.log2().round(),
            report.min_slack,
            trace.iterations()
        ));
    }
    Ok(lines.join("; "))
}

// 8 ---------------------------------------------------------------------------

fn psi_machinery() -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 8);
    let (mut worst_d, mut worst_t, mut worst_cells): (f64, f64, f64) = (0.0, 0.0, 0.0);
    for s in 0..PSI_TUPLES {
        let rho = rng.gen_range(0.05..0.95);
        let tau = rng.gen_range(1.05..4.0);
        let lambda = 10f64.powf(rng.gen_range(-2.0..2.0));
        let theta = 10f64.powf(rng.gen_range(-2.0..2.0));
        let k_bar = rng.gen_range(0.5..3.0);
        let a_lambda = rng.gen_range(0.5..3.0);
        let params =
            ConcaveConvexParams::new(lambda, theta, rho, tau, k_bar, a_lambda).map_err(err)?;
        let ctx = || format!("tuple {s}: ρ = {rho}, τ = {tau}, λ = {lambda}, θ = {theta}");
        let ps = |m: f64| psi(m, &params).unwrap();

        // Centered difference of Ψ at M, relative to Ψ(M)/M.
        let m = params.m_star();
        let h = 1e-5 * m;
        let d = ((ps(m + h) - ps(m - h)) / (2.0 * h) / (ps(m) / m)).abs();
        worst_d = worst_d.max(d);
        ensure(d <= PSI_STATIONARITY, || {
            format!("stationarity {d:e}; {}", ctx())
        })?;

        // Log grid over six decades each side, offset so M is off-grid.
        let cells = 2400;
        let lo = m.log10() - 6.0 + rng.gen_range(0.0..1.0) * 12.0 / cells as f64;
        let step = 12.0 / cells as f64;
        let best = (0..=cells)
            .map(|i| lo + step * i as f64)
            .min_by(|a, b| ps(10f64.powf(*a)).total_cmp(&ps(10f64.powf(*b))))
            .unwrap();
        let off = (best - m.log10()).abs() / step;
        worst_cells = worst_cells.max(off);
        ensure(off <= 1.0, || {
            format!("grid minimum {off:.2} cells from M; {}", ctx())
        })?;

        let theta0 = params.theta_threshold();
        let t = (params.with_theta(theta0).psi_min() - 1.0).abs();
        worst_t = worst_t.max(t);
        ensure(t <= THRESHOLD_TOL, || {
            format!("|Ψ(M_θ₀) − 1| = {t:e}; {}", ctx())
        })?;
    }
    Ok(format!(
        "{PSI_TUPLES} tuples: stationarity ≤ {worst_d:.1e}, grid minimum within {worst_cells:.2} cells, |Ψ(M_θ₀) − 1| ≤ {worst_t:.1e}"
    ))
}

// 9 ---------------------------------------------------------------------------

fn logistic_end_to_end() -> Result<String, String> {
    let grid = line(129);
    let c = |v: f64, kind| ExponentField::constant(grid.clone(), v, kind).unwrap();
    let theta = [1.0, 2.0];
    let [t1, t2] = theta;
    let params = LogisticParams {
        p: [
            exponent(&grid, "2 + 0.5*x", ExponentKind::Laplacian)?,
            exponent(&grid, "2.5 - 0.5*x", ExponentKind::Laplacian)?,
        ],
        q: [
            c(2.0, ExponentKind::Lebesgue),
            c(3.0, ExponentKind::Lebesgue),
        ],
        r: [
            c(2.0, ExponentKind::Lebesgue),
            c(2.0, ExponentKind::Lebesgue),
        ],
        alpha: [
            c(0.5, ExponentKind::Nonnegative),
            c(0.7, ExponentKind::Nonnegative),
        ],
        theta,
        f: [
            Arc::new(move |t| t * (t1 - t)),
            Arc::new(move |t| t * (t2 - t)),
        ],
        a: Arc::new(|_, t| 1.0 + t),
    };
    let opts = LogisticOptions::default();
    let setup = logistic_setup(None, &params, &opts).map_err(err)?;
    for (i, m) in setup.minimizers.iter().enumerate() {
        let positive = grid.interior().iter().all(|&k| m.z.get(k) > 0.0);
        ensure(positive && m.z.max() <= theta[i] + LOGISTIC_CAP, || {
            format!(
                "minimizer {}: positive {positive}, max {} vs θ = {}",
                i + 1,
                m.z.max(),
                theta[i]
            )
        })?;
        ensure(m.residual <= LOGISTIC_RESIDUAL, || {
            format!("minimizer {}: residual {:e}", i + 1, m.residual)
        })?;
    }
    ensure(
        (setup.lambda - 2.0 * setup.lambda0).abs() <= 1e-12 * setup.lambda,
        || format!("λ = {} is not 2λ₀ = {}", setup.lambda, 2.0 * setup.lambda0),
    )?;
    let report = &setup.report;
    ensure(report.certified && report.min_slack >= MIN_SLACK, || {
        format!(
            "pair not certified at λ = 2λ₀, min slack {:e}",
            report.min_slack
        )
    })?;
    // The undamped map oscillates here; the relaxed iteration is used.
    let picard = PicardOptions {
        omega: 0.1,
        max_iter: 2000,
        ..PicardOptions::default()
    };
    let (u, v, trace) = solve_system(&setup.spec, &setup.pair, &picard).map_err(err)?;
    let residual = weak_residual(&u, &v, &setup.spec).map_err(err)?;
    ensure(
        trace.converged && trace.sandwich_ok && trace.positive_ok,
        || {
            format!(
                "Picard: converged {}, sandwiched {}, positive {}",
                trace.converged, trace.sandwich_ok, trace.positive_ok
            )
        },
    )?;
    Ok(format!(
        "λ₀ = {:.4e}, residuals {:.1e}/{:.1e}, min slack {:.2e}, Picard {} iterations (ω = 0.1), weak residual {residual:.1e}",
        setup.lambda0,
        setup.minimizers[0].residual,
        setup.minimizers[1].residual,
        report.min_slack,
        trace.iterations()
    ))
}

// 10 --------------------------------------------------------------------------

fn preset(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../presets")
        .join(name)
}

/// Writes `name` with the given keys replaced into `dir`.
fn edited(dir: &Path, name: &str, changes: &[(&str, &str)]) -> PathBuf {
    let mut text = String::new();
    for l in fs::read_to_string(preset(name)).unwrap().lines() {
        let key = l.split('=').next().map(str::trim).unwrap_or("");
        if !changes.iter().any(|(k, _)| *k == key) {
            text.push_str(l);
            text.push('\n');
        }
    }
    for (k, v) in changes {
        text.push_str(&format!("{k} = {v}\n"));
    }
    let path = dir.join(format!("{}-{name}", dir.read_dir().unwrap().count()));
    fs::write(&path, text).unwrap();
    path
}

fn run(args: &[&str], config: &Path, out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pxlap"))
        .args(args)
        .args([
            "--config",
            config.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
        ])
        .output()
        .expect("binary runs")
}

fn falsification() -> Result<String, String> {
    let tmp = tempfile::tempdir().map_err(err)?;
    let dir = tmp.path();
    let mut names = Vec::new();

    // Corrupted pairs: negative slack reported, exit 2.
    let corrupted: [(&str, &[(&str, &str)]); 2] = [
        (
            "upper below the solution",
            &[
                ("pair.upper1", "0.45*x*(1 - x)"),
                ("pair.lower1", "0.4*x*(1 - x)"),
            ],
        ),
        ("lower above upper", &[("pair.lower2", "0.7*x*(1 - x)")]),
    ];
    for (i, (name, changes)) in corrupted.iter().enumerate() {
        let out = dir.join(format!("pair{i}"));
        let o = run(
            &["verify-subsuper"],
            &edited(dir, "system.cfg", changes),
            &out,
        );
        let report: Value = fs::read_to_string(out.join("report.json"))
            .ok()
            .and_then(|t| serde_json::from_str(&t).ok())
            .ok_or_else(|| format!("{name}: no report.json (exit {:?})", o.status.code()))?;
        let slack = report["min_slack"].as_f64().unwrap_or(f64::NAN);
        ensure(
            o.status.code() == Some(2) && report["certified"] == false && slack < 0.0,
            || {
                format!(
                    "{name}: exit {:?}, certified {}, min slack {slack}",
                    o.status.code(),
                    report["certified"]
                )
            },
        )?;
        names.push(format!("{name} (slack {slack:.2e})"));
    }

    // Invalid exponents: exit 1 naming the violated hypothesis, no output.
    let invalid: [InvalidCase; 4] = [
        (
            "p₂ ≤ 1",
            "sublinear-1d.cfg",
            &[("exponent.p2", "1 + 0.5*x")],
            "hypothesis (H)",
        ),
        (
            "α₁ + γ₁ too large",
            "sublinear-1d.cfg",
            &[("exponent.alpha1", "1.5")],
            "0 < α1⁺ + γ1⁺ < p",
        ),
        (
            "mixed ratio ≥ 1",
            "sublinear-1d.cfg",
            &[("exponent.beta1", "1.4")],
            "0 < α1⁺/(p2⁻ − 1) + β1⁺/(p1⁻ − 1) < 1",
        ),
        (
            "η too small for convexity",
            "concave-convex-1d.cfg",
            &[("exponent.eta1", "0.5"), ("exponent.eta2", "0.5")],
            "p2⁺ − 1 < η1⁻ + γ1⁻",
        ),
    ];
    for (i, (name, base, changes, hypothesis)) in invalid.iter().enumerate() {
        let out = dir.join(format!("bad{i}"));
        let o = run(&["app"], &edited(dir, base, changes), &out);
        let stderr = String::from_utf8_lossy(&o.stderr);
        ensure(
            o.status.code() == Some(1) && stderr.contains(hypothesis) && !out.exists(),
            || {
                format!(
                    "{name}: exit {:?}, stderr {stderr:?}, expected {hypothesis:?}",
                    o.status.code()
                )
            },
        )?;
        names.push(format!("{name} → {hypothesis}"));
    }
    Ok(format!("6 cases rejected: {}", names.join("; ")))
}

//! Turning a [`Config`] into grids, fields, systems and application plans.
//!
//! Everything here runs before any numeric work: expressions are parsed and
//! evaluated on the grid, exponent fields are checked against their
//! hypotheses and the application gates are evaluated.

use std::sync::Arc;

use pxlap_core::apps::concave_convex::ConcaveConvexProblem;
use pxlap_core::apps::logistic::{LogisticOptions, LogisticParams, ScalarReaction};
use pxlap_core::apps::sublinear::SublinearParams;
use pxlap_core::apps::SearchOptions;
use pxlap_core::expr::Expr;
use pxlap_core::picard::PicardOptions;
use pxlap_core::subsuper::{SubSuperPair, VerifyOptions};
use pxlap_core::system::{Coefficient, Equation, Reaction, Regime, SystemSpec};
use pxlap_core::{build_grid, ExponentField, ExponentKind, Grid, GridFunction, SolverOptions};

use crate::config::{Config, ConfigError};

pub const DEFAULT_SEED: u64 = 0x5eed;

const XY: &[&str] = &["x", "y"];
const XYT: &[&str] = &["x", "y", "t"];
const XYUV: &[&str] = &["x", "y", "u", "v"];

/// Why a run stopped before producing results.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Config(#[from] ConfigError),
    /// Invalid input detected by the numeric layer (theorem gates, grids).
    #[error("{0}")]
    Invalid(pxlap_core::Error),
    #[error("{0}")]
    Io(#[from] std::io::Error),
}

impl From<pxlap_core::Error> for CliError {
    fn from(e: pxlap_core::Error) -> Self {
        CliError::Invalid(e)
    }
}

/// Which problem family a run targets.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AppName {
    Sublinear,
    ConcaveConvex,
    Logistic,
}

impl AppName {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "sublinear" => Some(Self::Sublinear),
            "concave-convex" => Some(Self::ConcaveConvex),
            "logistic" => Some(Self::Logistic),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Sublinear => "sublinear",
            Self::ConcaveConvex => "concave-convex",
            Self::Logistic => "logistic",
        }
    }
}

/// A validated application run, ready for the numeric work.
#[derive(Debug)]
pub enum AppPlan {
    Sublinear {
        params: SublinearParams,
        search: SearchOptions,
    },
    ConcaveConvex {
        problem: Box<ConcaveConvexProblem>,
        lambda: f64,
        theta: f64,
        search: SearchOptions,
    },
    Logistic {
        params: LogisticParams,
        lambda: Option<f64>,
        options: LogisticOptions,
    },
}

/// Config plus the grid it describes.
#[derive(Debug)]
pub struct Setup<'a> {
    pub cfg: &'a Config,
    pub grid: Arc<Grid>,
}

fn positioned(cfg: &Config, key: &str, e: pxlap_core::Error) -> ConfigError {
    cfg.error(key, e.to_string())
}

impl<'a> Setup<'a> {
    pub fn new(cfg: &'a Config) -> Result<Self, CliError> {
        let dim = cfg.req_usize("domain.dim")?;
        let n = cfg.req_usize("domain.n")?;
        let raw = match cfg.list("domain.bounds")? {
            Some(b) => b,
            None => [0.0, 1.0].repeat(dim.max(1)),
        };
        if raw.len() != 2 * dim {
            return Err(cfg
                .error(
                    "domain.bounds",
                    format!("expected {} numbers for dim = {dim}", 2 * dim),
                )
                .into());
        }
        let bounds: Vec<(f64, f64)> = raw.chunks(2).map(|c| (c[0], c[1])).collect();
        let grid = build_grid(dim, n, &bounds).map_err(|e| {
            let key = if dim != 1 && dim != 2 {
                "domain.dim"
            } else if n < 3 {
                "domain.n"
            } else {
                "domain.bounds"
            };
            positioned(cfg, key, e)
        })?;
        if let Some(delta) = cfg.f64("domain.delta")? {
            if !(delta > 0.0 && 6.0 * delta <= grid.min_side()) {
                return Err(cfg
                    .error("domain.delta", "must satisfy 0 < δ ≤ (shorter side)/6")
                    .into());
            }
        }
        Ok(Self { cfg, grid })
    }

    pub fn seed(&self) -> Result<u64, CliError> {
        match self.cfg.get("seed") {
            None => Ok(DEFAULT_SEED),
            Some(e) => e.value.parse::<u64>().map_err(|_| {
                CliError::Config(self.cfg.error(
                    "seed",
                    format!("expected an unsigned integer, got `{}`", e.value),
                ))
            }),
        }
    }

    /// A nodal function of `(x, y)`.
    pub fn function(&self, key: &str, default: Option<&str>) -> Result<GridFunction, CliError> {
        let expr = match default {
            Some(d) => self.cfg.expr_or(key, d, XY)?,
            None => self.cfg.req_expr(key, XY)?,
        };
        let grid = self.grid.clone();
        let values: Vec<f64> = (0..grid.len())
            .map(|k| {
                let [x, y] = grid.point(k);
                expr.eval(&[x, y])
            })
            .collect();
        if let Some(node) = values.iter().position(|v| !v.is_finite()) {
            return Err(self
                .cfg
                .error(key, format!("non-finite value at node {node}"))
                .into());
        }
        GridFunction::new(grid, values).map_err(|e| positioned(self.cfg, key, e).into())
    }

    pub fn field(
        &self,
        key: &str,
        default: Option<&str>,
        kind: ExponentKind,
    ) -> Result<ExponentField, CliError> {
        let f = self.function(key, default)?;
        ExponentField::new(f, kind).map_err(|e| positioned(self.cfg, key, e).into())
    }

    /// `<base>1`, `<base>2` under `exponent.`.
    pub fn fields(
        &self,
        base: &str,
        default: Option<&str>,
        kind: ExponentKind,
    ) -> Result<[ExponentField; 2], CliError> {
        Ok([
            self.field(&format!("exponent.{base}1"), default, kind)?,
            self.field(&format!("exponent.{base}2"), default, kind)?,
        ])
    }

    pub fn coefficient(&self) -> Result<(Coefficient, Regime), CliError> {
        let expr = self.cfg.expr_or("coefficient.a", "1", XYT)?;
        let grid = self.grid.clone();
        let a: Coefficient = Arc::new(move |k, t| {
            let [x, y] = grid.point(k);
            expr.eval(&[x, y, t])
        });
        let regime = match self.cfg.str("coefficient.regime")?.unwrap_or("positive") {
            "positive" => Regime::Positive,
            "a1" => Regime::BoundedBelow {
                a0: self.cfg.req_f64("coefficient.a0")?,
            },
            "a2" => Regime::BoundedAbove {
                a0: self.cfg.req_f64("coefficient.a0")?,
                a_inf: self.cfg.req_f64("coefficient.a_inf")?,
            },
            other => {
                return Err(self
                    .cfg
                    .error(
                        "coefficient.regime",
                        format!("expected `a1`, `a2` or `positive`, got `{other}`"),
                    )
                    .into())
            }
        };
        match regime {
            Regime::BoundedBelow { a0 } | Regime::BoundedAbove { a0, .. } if !(a0 > 0.0) => {
                return Err(self.cfg.error("coefficient.a0", "must be positive").into());
            }
            Regime::BoundedAbove { a_inf, .. } if !(a_inf > 0.0) => {
                return Err(self
                    .cfg
                    .error("coefficient.a_inf", "must be positive")
                    .into());
            }
            _ => {}
        }
        Ok((a, regime))
    }

    fn reaction(&self, key: &str, default: Option<&str>) -> Result<Reaction, CliError> {
        let expr = match default {
            Some(d) => self.cfg.expr_or(key, d, XYUV)?,
            None => self.cfg.req_expr(key, XYUV)?,
        };
        let grid = self.grid.clone();
        Ok(Arc::new(move |k, u, v| {
            let [x, y] = grid.point(k);
            expr.eval(&[x, y, u, v])
        }))
    }

    /// The system given directly by `exponent.*`, `reaction.*` and
    /// `coefficient.*`.
    pub fn general_spec(&self) -> Result<SystemSpec, CliError> {
        let p = self.fields("p", None, ExponentKind::Laplacian)?;
        let q = self.fields("q", Some("2"), ExponentKind::Lebesgue)?;
        let r = self.fields("r", Some("2"), ExponentKind::Lebesgue)?;
        let s = self.fields("s", Some("2"), ExponentKind::Lebesgue)?;
        let alpha = self.fields("alpha", Some("0"), ExponentKind::Nonnegative)?;
        let gamma = self.fields("gamma", Some("0"), ExponentKind::Nonnegative)?;
        let (a, regime) = self.coefficient()?;
        let eq = |i: usize| -> Result<Equation, CliError> {
            Ok(Equation {
                p: p[i].clone(),
                q: q[i].clone(),
                r: r[i].clone(),
                s: s[i].clone(),
                alpha: alpha[i].clone(),
                gamma: gamma[i].clone(),
                f: self.reaction(&format!("reaction.f{}", i + 1), None)?,
                g: self.reaction(&format!("reaction.g{}", i + 1), Some("0"))?,
            })
        };
        let spec = SystemSpec {
            equations: [eq(0)?, eq(1)?],
            a,
            regime,
            monotone: self.cfg.bool("system.monotone")?.unwrap_or(false),
            name: String::from("system"),
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn pair(&self) -> Result<SubSuperPair, CliError> {
        let f = |key: &str| self.function(key, None);
        Ok(SubSuperPair::new(
            [f("pair.lower1")?, f("pair.lower2")?],
            [f("pair.upper1")?, f("pair.upper2")?],
        ))
    }

    pub fn solver_options(&self) -> Result<SolverOptions, CliError> {
        let d = SolverOptions::default();
        let o = SolverOptions {
            tol: self.cfg.f64_or("solver.tol", d.tol)?,
            max_iter: self.cfg.usize("solver.max_iter")?.unwrap_or(d.max_iter),
            reg_eps: self.cfg.f64_or("solver.reg_eps", d.reg_eps)?,
            ..d
        };
        o.validate()?;
        Ok(o)
    }

    pub fn verify_options(&self) -> Result<VerifyOptions, CliError> {
        let d = VerifyOptions::default();
        let o = VerifyOptions {
            tol: self.cfg.f64_or("verify.tol", d.tol)?,
            w_samples: self.cfg.usize("verify.w_samples")?.unwrap_or(d.w_samples),
            envelope_points: self
                .cfg
                .usize("verify.envelope_points")?
                .unwrap_or(d.envelope_points),
            seed: self.seed()?,
        };
        if !(o.tol >= 0.0) {
            return Err(self.cfg.error("verify.tol", "must be nonnegative").into());
        }
        if o.envelope_points < 2 {
            return Err(self
                .cfg
                .error("verify.envelope_points", "must be at least 2")
                .into());
        }
        Ok(o)
    }

    pub fn picard_options(&self) -> Result<PicardOptions, CliError> {
        let d = PicardOptions::default();
        let mut solver = self.solver_options()?;
        if !self.cfg.contains("solver.max_iter") {
            solver.max_iter = d.solver.max_iter;
        }
        let o = PicardOptions {
            omega: self.cfg.f64_or("picard.omega", d.omega)?,
            max_iter: self.cfg.usize("picard.max_iter")?.unwrap_or(d.max_iter),
            step_tol: self.cfg.f64_or("picard.step_tol", d.step_tol)?,
            residual_tol: self.cfg.f64_or("picard.residual_tol", d.residual_tol)?,
            sandwich_tol: self.cfg.f64_or("picard.sandwich_tol", d.sandwich_tol)?,
            solver,
        };
        o.validate()?;
        Ok(o)
    }

    pub fn search_options(&self) -> Result<SearchOptions, CliError> {
        let d = SearchOptions::default();
        let mut o = SearchOptions {
            delta: self.cfg.f64("domain.delta")?,
            verify: self.verify_options()?,
            solver: self.solver_options()?,
            ..d
        };
        if let Some(k) = self.cfg.usize("search.k_max_exp")? {
            if !(1..=60).contains(&k) {
                return Err(self
                    .cfg
                    .error("search.k_max_exp", "must lie in 1..=60")
                    .into());
            }
            o.k_ladder = (1..=k).map(|e| 2f64.powi(e as i32)).collect();
        }
        if let Some(e) = self.cfg.i32("search.lambda_max_exp")? {
            if !(1..=1000).contains(&e) {
                return Err(self
                    .cfg
                    .error("search.lambda_max_exp", "must lie in 1..=1000")
                    .into());
            }
            o.lambda_max_exp = e;
        }
        Ok(o)
    }

    /// The application named by `app.name` (or `name` when given).
    pub fn app_name(&self, name: Option<AppName>) -> Result<Option<AppName>, CliError> {
        let from_cfg = match self.cfg.str("app.name")? {
            None => None,
            Some(s) => Some(AppName::parse(s).ok_or_else(|| {
                self.cfg.error(
                    "app.name",
                    format!("expected `sublinear`, `concave-convex` or `logistic`, got `{s}`"),
                )
            })?),
        };
        match (name, from_cfg) {
            (Some(a), Some(b)) if a != b => Err(self
                .cfg
                .error(
                    "app.name",
                    format!(
                        "config names `{}` but the command line asks for `{}`",
                        b.as_str(),
                        a.as_str()
                    ),
                )
                .into()),
            (a, b) => Ok(a.or(b)),
        }
    }

    pub fn app_plan(&self, name: AppName) -> Result<AppPlan, CliError> {
        let lap = ExponentKind::Laplacian;
        let leb = ExponentKind::Lebesgue;
        let nn = ExponentKind::Nonnegative;
        match name {
            AppName::Sublinear => {
                let (a, regime) = self.coefficient()?;
                if regime == Regime::Positive {
                    return Err(self
                        .cfg
                        .error(
                            "coefficient.regime",
                            "the sublinear system needs `a1` or `a2`",
                        )
                        .into());
                }
                let params = SublinearParams {
                    p: self.fields("p", None, lap)?,
                    q: self.fields("q", Some("2"), leb)?,
                    r: self.fields("r", Some("2"), leb)?,
                    alpha: self.fields("alpha", None, nn)?,
                    beta: self.fields("beta", None, nn)?,
                    gamma: self.fields("gamma", None, nn)?,
                    a,
                    regime,
                };
                params.validate()?;
                Ok(AppPlan::Sublinear {
                    params,
                    search: self.search_options()?,
                })
            }
            AppName::ConcaveConvex => {
                let (a, regime) = self.coefficient()?;
                if regime == Regime::Positive {
                    return Err(self
                        .cfg
                        .error(
                            "coefficient.regime",
                            "the concave-convex system needs `a1` or `a2`",
                        )
                        .into());
                }
                let problem = ConcaveConvexProblem {
                    p: self.fields("p", None, lap)?,
                    q: self.fields("q", Some("2"), leb)?,
                    r: self.fields("r", Some("2"), leb)?,
                    s: self.fields("s", Some("2"), leb)?,
                    alpha: self.fields("alpha", None, nn)?,
                    beta: self.fields("beta", None, nn)?,
                    eta: self.fields("eta", None, nn)?,
                    gamma: self.fields("gamma", None, nn)?,
                    a,
                    regime,
                };
                problem.validate()?;
                let lambda = self.positive("app.lambda")?;
                let theta = self.positive("app.theta")?;
                Ok(AppPlan::ConcaveConvex {
                    problem: Box::new(problem),
                    lambda,
                    theta,
                    search: self.search_options()?,
                })
            }
            AppName::Logistic => {
                let (a, _) = self.coefficient()?;
                let theta = [self.positive("app.theta1")?, self.positive("app.theta2")?];
                let f = |key: &str| -> Result<ScalarReaction, CliError> {
                    let e: Expr = self.cfg.req_expr(key, &["t"])?;
                    Ok(Arc::new(move |t| e.eval(&[t])))
                };
                let params = LogisticParams {
                    p: self.fields("p", None, lap)?,
                    q: self.fields("q", Some("2"), leb)?,
                    r: self.fields("r", Some("2"), leb)?,
                    alpha: self.fields("alpha", None, nn)?,
                    theta,
                    f: [f("app.f1")?, f("app.f2")?],
                    a,
                };
                params.validate()?;
                let lambda = match self.cfg.contains("app.lambda") {
                    true => Some(self.positive("app.lambda")?),
                    false => None,
                };
                let d = LogisticOptions::default();
                let options = LogisticOptions {
                    delta: self.cfg.f64("domain.delta")?,
                    residual_tol: self.cfg.f64_or("logistic.residual_tol", d.residual_tol)?,
                    max_iter: self.cfg.usize("logistic.max_iter")?.unwrap_or(d.max_iter),
                    lambda_max_exp: self
                        .cfg
                        .i32("search.lambda_max_exp")?
                        .unwrap_or(d.lambda_max_exp),
                    solver: self.solver_options()?,
                    verify: self.verify_options()?,
                };
                Ok(AppPlan::Logistic {
                    params,
                    lambda,
                    options,
                })
            }
        }
    }

    fn positive(&self, key: &str) -> Result<f64, CliError> {
        let v = self.cfg.req_f64(key)?;
        if !(v > 0.0) {
            return Err(self
                .cfg
                .error(key, format!("must be positive, got {v}"))
                .into());
        }
        Ok(v)
    }
}

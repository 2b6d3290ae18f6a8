//! The subcommands. Each one validates everything first ([`Setup`]), then
//! does the numeric work and returns its artifacts without touching disk.

use pxlap_core::apps::concave_convex::{
    concave_convex_setup, ConcaveConvexOutcome, ThresholdReport,
};
use pxlap_core::apps::logistic::logistic_setup;
use pxlap_core::apps::sublinear::sublinear_setup;
use pxlap_core::lebesgue::modular_norm_diagnostics;
use pxlap_core::picard::{
    continuum_sweep, solve_system, weak_residual, IterationTrace, PicardOptions,
};
use pxlap_core::subsuper::{verify_with, SubSuperPair, SubSuperReport};
use pxlap_core::system::SystemSpec;
use pxlap_core::{solve_dirichlet, Error, ExponentKind, GridFunction};
use serde::Serialize;
use serde_json::{json, Value};

use crate::output::{table_csv, to_json, Artifacts};
use crate::setup::{AppName, AppPlan, CliError, Setup};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Norm,
    SolveDirichlet,
    SolveSystem,
    VerifySubsuper,
    Sweep,
    App(Option<AppName>),
}

impl Command {
    pub fn as_str(self) -> &'static str {
        match self {
            Command::Norm => "norm",
            Command::SolveDirichlet => "solve-dirichlet",
            Command::SolveSystem => "solve-system",
            Command::VerifySubsuper => "verify-subsuper",
            Command::Sweep => "sweep",
            Command::App(_) => "app",
        }
    }
}

/// Exit status of a completed run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    /// Certified and/or converged.
    Success,
    /// The numerics ran but did not certify or converge.
    NotConverged,
}

impl Status {
    pub fn code(self) -> i32 {
        match self {
            Status::Success => 0,
            Status::NotConverged => 2,
        }
    }

    fn from_ok(ok: bool) -> Self {
        if ok {
            Status::Success
        } else {
            Status::NotConverged
        }
    }
}

#[derive(Debug)]
pub struct Outcome {
    pub status: Status,
    pub artifacts: Artifacts,
    pub summary: String,
}

/// Errors after validation that are honest numerical outcomes rather than
/// bad input.
fn is_numeric_failure(e: &Error) -> bool {
    matches!(
        e,
        Error::NotConverged(_) | Error::SearchExhausted(_) | Error::Hypothesis { .. }
    )
}

fn failed(command: Command, e: Error) -> Result<Outcome, CliError> {
    if !is_numeric_failure(&e) {
        return Err(CliError::Invalid(e));
    }
    let mut artifacts = Artifacts::default();
    artifacts.json(
        "verdict.json",
        &json!({ "command": command.as_str(), "status": "failed", "error": e.to_string() }),
    );
    Ok(Outcome {
        status: Status::NotConverged,
        artifacts,
        summary: format!("{}: {e}", command.as_str()),
    })
}

/// Validates everything, then runs.
pub fn run(command: Command, setup: &Setup) -> Result<Outcome, CliError> {
    let plan = plan(command, setup)?;
    for (key, entry) in setup.cfg.untouched() {
        eprintln!(
            "warning: line {}: key `{key}` is not used by `{}`",
            entry.line,
            command.as_str()
        );
    }
    match execute(command, plan) {
        Ok(outcome) => Ok(outcome),
        Err(e) => failed(command, e),
    }
}

/// A system with its ordered pair, either given directly or built by an
/// application.
enum Source {
    Direct {
        spec: SystemSpec,
        pair: SubSuperPair,
    },
    App(AppName, AppPlan),
}

enum Plan {
    Norm {
        u: GridFunction,
        p: pxlap_core::ExponentField,
    },
    Dirichlet {
        f: GridFunction,
        p: pxlap_core::ExponentField,
        opts: pxlap_core::SolverOptions,
    },
    Verify {
        source: Source,
        verify: pxlap_core::subsuper::VerifyOptions,
    },
    Solve {
        source: Source,
        verify: pxlap_core::subsuper::VerifyOptions,
        picard: PicardOptions,
    },
    Sweep {
        source: Source,
        verify: pxlap_core::subsuper::VerifyOptions,
        picard: PicardOptions,
        lambdas: Vec<f64>,
    },
}

fn source(setup: &Setup, name: Option<AppName>) -> Result<Source, CliError> {
    match setup.app_name(name)? {
        Some(app) => Ok(Source::App(app, setup.app_plan(app)?)),
        None => Ok(Source::Direct {
            spec: setup.general_spec()?,
            pair: setup.pair()?,
        }),
    }
}

fn plan(command: Command, setup: &Setup) -> Result<Plan, CliError> {
    Ok(match command {
        Command::Norm => Plan::Norm {
            u: setup.function("norm.u", None)?,
            p: setup.field("norm.p", None, ExponentKind::Lebesgue)?,
        },
        Command::SolveDirichlet => Plan::Dirichlet {
            f: setup.function("dirichlet.f", None)?,
            p: setup.field("dirichlet.p", None, ExponentKind::Laplacian)?,
            opts: setup.solver_options()?,
        },
        Command::VerifySubsuper => Plan::Verify {
            source: source(setup, None)?,
            verify: setup.verify_options()?,
        },
        Command::SolveSystem => Plan::Solve {
            source: source(setup, None)?,
            verify: setup.verify_options()?,
            picard: setup.picard_options()?,
        },
        Command::App(name) => {
            let Some(app) = setup.app_name(name)? else {
                return Err(setup
                    .cfg
                    .error(
                        "app.name",
                        "no application given (use `app <name>` or `app.name`)",
                    )
                    .into());
            };
            Plan::Solve {
                source: Source::App(app, setup.app_plan(app)?),
                verify: setup.verify_options()?,
                picard: setup.picard_options()?,
            }
        }
        Command::Sweep => {
            let lambdas = setup.cfg.req_list("sweep.lambdas")?;
            if lambdas.is_empty() || lambdas.iter().any(|&l| l < 0.0) {
                return Err(setup
                    .cfg
                    .error("sweep.lambdas", "need at least one nonnegative λ")
                    .into());
            }
            Plan::Sweep {
                source: source(setup, None)?,
                verify: setup.verify_options()?,
                picard: setup.picard_options()?,
                lambdas,
            }
        }
    })
}

/// A certified (or rejected) pair with the data describing how it was built.
struct Built {
    spec: SystemSpec,
    pair: SubSuperPair,
    report: SubSuperReport,
    app: Option<AppName>,
    setup: Value,
}

enum BuildResult {
    Pair(Box<Built>),
    Threshold(ThresholdReport),
}

fn slacks(report: &SubSuperReport) -> Value {
    json!({
        "sub_1": report.sub[0].min_slack,
        "sub_2": report.sub[1].min_slack,
        "super_1": report.sup[0].min_slack,
        "super_2": report.sup[1].min_slack,
    })
}

fn build(
    source: Source,
    verify: &pxlap_core::subsuper::VerifyOptions,
) -> pxlap_core::Result<BuildResult> {
    let (name, plan) = match source {
        Source::Direct { spec, pair } => {
            let report = verify_with(&pair, &spec, verify)?;
            let pair = SubSuperPair {
                certified: report.certified,
                margins: report.component_margins(),
                ..pair
            };
            let setup = json!({ "source": "config" });
            return Ok(BuildResult::Pair(Box::new(Built {
                spec,
                pair,
                report,
                app: None,
                setup,
            })));
        }
        Source::App(name, plan) => (name, plan),
    };
    let built = match plan {
        AppPlan::Sublinear { params, search } => {
            let s = sublinear_setup(&params, &search)?;
            let sel = s.selection;
            let setup = json!({
                "app": name.as_str(),
                "k": sel.layer.k,
                "sigma": sel.layer.sigma,
                "delta": sel.layer.delta,
                "mu": sel.layer.mu,
                "a": sel.layer.a,
                "lambda": sel.lambda,
                "min_slack": slacks(&sel.report),
                "corner_excluded": sel.corner_excluded,
                "candidates": sel.candidates,
                "comparison_margin": sel.comparison_margin,
                "negative_margin": s.negative_margin,
                "decay_ratio": s.decay_ratio,
                "a1": sel.a1,
                "a_k": sel.a_k,
            });
            Built {
                spec: s.spec,
                pair: sel.pair,
                report: sel.report,
                app: Some(name),
                setup,
            }
        }
        AppPlan::ConcaveConvex {
            problem,
            lambda,
            theta,
            search,
        } => match concave_convex_setup(lambda, theta, &problem, &search)? {
            ConcaveConvexOutcome::Threshold(t) => return Ok(BuildResult::Threshold(t)),
            ConcaveConvexOutcome::Certified(s) => {
                let setup = json!({
                    "app": name.as_str(),
                    "k": s.layer.k,
                    "sigma": s.layer.sigma,
                    "delta": s.layer.delta,
                    "mu": s.layer.mu,
                    "lambda": s.lambda,
                    "theta": s.theta,
                    "min_slack": slacks(&s.report),
                    "corner_excluded": 0,
                    "psi": s.params,
                    "m": s.m,
                    "lambda0": s.lambda0,
                });
                Built {
                    spec: s.spec,
                    pair: s.pair,
                    report: s.report,
                    app: Some(name),
                    setup,
                }
            }
        },
        AppPlan::Logistic {
            params,
            lambda,
            options,
        } => {
            let s = logistic_setup(lambda, &params, &options)?;
            let setup = json!({
                "app": name.as_str(),
                "delta": options.delta.unwrap_or_else(|| pxlap_core::layer::default_delta(params.p[0].grid())),
                "lambda": s.lambda,
                "lambda_tilde0": s.lambda_tilde0,
                "c": s.c,
                "a0": s.a0,
                "mu0": s.mu0,
                "lambda0": s.lambda0,
                "min_slack": slacks(&s.report),
                "corner_excluded": 0,
                "minimizers": s.minimizers,
            });
            Built {
                spec: s.spec,
                pair: s.pair,
                report: s.report,
                app: Some(name),
                setup,
            }
        }
    };
    Ok(BuildResult::Pair(Box::new(built)))
}

fn threshold_outcome(command: Command, t: ThresholdReport) -> Outcome {
    let mut artifacts = Artifacts::default();
    artifacts.json("threshold.json", &t);
    artifacts.json(
        "verdict.json",
        &json!({ "command": command.as_str(), "app": "concave-convex", "status": "threshold", "certified": false }),
    );
    let summary = format!(
        "θ is above the threshold: Ψ(M_λ,θ) = {:.6e} > 1 or M_λ,θ too small; θ₀ = {:.6e}",
        t.psi_min, t.theta0
    );
    Outcome {
        status: Status::NotConverged,
        artifacts,
        summary,
    }
}

fn pair_artifacts(artifacts: &mut Artifacts, b: &Built) {
    artifacts.json("setup.json", &b.setup);
    artifacts.json("report.json", &b.report);
    artifacts.csv(
        "pair.csv",
        &[
            ("lower1", &b.pair.lower[0]),
            ("upper1", &b.pair.upper[0]),
            ("lower2", &b.pair.lower[1]),
            ("upper2", &b.pair.upper[1]),
        ],
    );
}

/// One compact JSON object per iteration, then the verdict object.
fn trace_jsonl(trace: &IterationTrace) -> String {
    let mut out = String::new();
    for r in &trace.records {
        out.push_str(&serde_json::to_string(r).expect("records serialize"));
        out.push('\n');
    }
    let verdict = json!({
        "converged": trace.converged,
        "sandwich_ok": trace.sandwich_ok,
        "positive_ok": trace.positive_ok,
    });
    out.push_str(&verdict.to_string());
    out.push('\n');
    out
}

#[derive(Serialize)]
struct Verdict<'a> {
    command: &'a str,
    app: Option<&'a str>,
    status: &'a str,
    certified: bool,
    min_slack: f64,
    converged: bool,
    sandwich_ok: bool,
    positive_ok: bool,
    iterations: usize,
    weak_residual: f64,
    omega: f64,
}

fn execute(command: Command, plan: Plan) -> pxlap_core::Result<Outcome> {
    let mut artifacts = Artifacts::default();
    match plan {
        Plan::Norm { u, p } => {
            let report = modular_norm_diagnostics(&u, &p)?;
            artifacts.json("norm.json", &report);
            let summary = format!(
                "|u|_p = {:.16e}, ρ_p(u) = {:.16e}",
                report.norm, report.modular
            );
            Ok(Outcome {
                status: Status::from_ok(report.holds),
                artifacts,
                summary,
            })
        }
        Plan::Dirichlet { f, p, opts } => {
            let sol = match solve_dirichlet(&f, &p, &opts) {
                Err(Error::NotConverged(sol)) => *sol,
                other => other?,
            };
            artifacts.csv("u.csv", &[("u", &sol.u)]);
            artifacts.json(
                "solve.json",
                &json!({
                    "converged": sol.converged,
                    "iterations": sol.iterations,
                    "final_residual": sol.final_residual,
                    "energy": sol.energy,
                    "method": sol.method,
                    "residual_history": sol.residual_history,
                }),
            );
            let summary = format!(
                "{} after {} iterations, residual {:.3e}",
                if sol.converged {
                    "converged"
                } else {
                    "not converged"
                },
                sol.iterations,
                sol.final_residual
            );
            Ok(Outcome {
                status: Status::from_ok(sol.converged),
                artifacts,
                summary,
            })
        }
        Plan::Verify { source, verify } => {
            let b = match build(source, &verify)? {
                BuildResult::Threshold(t) => return Ok(threshold_outcome(command, t)),
                BuildResult::Pair(b) => b,
            };
            pair_artifacts(&mut artifacts, &b);
            let summary = format!(
                "pair {}: min slack {:.3e}, ordering margins {:.3e} / {:.3e}",
                if b.report.certified {
                    "certified"
                } else {
                    "rejected"
                },
                b.report.min_slack,
                b.report.ordering[0],
                b.report.ordering[1]
            );
            Ok(Outcome {
                status: Status::from_ok(b.report.certified),
                artifacts,
                summary,
            })
        }
        Plan::Solve {
            source,
            verify,
            picard,
        } => {
            let b = match build(source, &verify)? {
                BuildResult::Threshold(t) => return Ok(threshold_outcome(command, t)),
                BuildResult::Pair(b) => b,
            };
            pair_artifacts(&mut artifacts, &b);
            let (u1, u2, trace) = solve_system(&b.spec, &b.pair, &picard)?;
            let residual = weak_residual(&u1, &u2, &b.spec)?;
            artifacts.csv("solution.csv", &[("u1", &u1), ("u2", &u2)]);
            artifacts.push("trace.jsonl", trace_jsonl(&trace));
            let ok =
                b.report.certified && trace.converged && trace.sandwich_ok && trace.positive_ok;
            let verdict = Verdict {
                command: command.as_str(),
                app: b.app.map(AppName::as_str),
                status: if ok { "ok" } else { "not_converged" },
                certified: b.report.certified,
                min_slack: b.report.min_slack,
                converged: trace.converged,
                sandwich_ok: trace.sandwich_ok,
                positive_ok: trace.positive_ok,
                iterations: trace.iterations(),
                weak_residual: residual,
                omega: picard.omega,
            };
            artifacts.json("verdict.json", &verdict);
            let summary = format!(
                "pair {}; Picard {} after {} iterations (weak residual {:.3e}); sandwich {}, positive {}",
                if b.report.certified { "certified" } else { "NOT certified" },
                if trace.converged { "converged" } else { "did not converge" },
                trace.iterations(),
                residual,
                trace.sandwich_ok,
                trace.positive_ok
            );
            Ok(Outcome {
                status: Status::from_ok(ok),
                artifacts,
                summary,
            })
        }
        Plan::Sweep {
            source,
            verify,
            picard,
            lambdas,
        } => {
            let b = match build(source, &verify)? {
                BuildResult::Threshold(t) => return Ok(threshold_outcome(command, t)),
                BuildResult::Pair(b) => b,
            };
            pair_artifacts(&mut artifacts, &b);
            let table = continuum_sweep(&b.spec, &b.pair, &lambdas, &picard)?;
            let rows = table.points.iter().map(|p| {
                vec![
                    p.lambda,
                    p.norm_1,
                    p.norm_2,
                    p.sup_1,
                    p.sup_2,
                    p.iterations as f64,
                    p.residual,
                    if p.converged { 1.0 } else { 0.0 },
                ]
            });
            artifacts.push(
                "branch.csv",
                table_csv(
                    &[
                        "lambda",
                        "norm_1",
                        "norm_2",
                        "sup_1",
                        "sup_2",
                        "iterations",
                        "residual",
                        "converged",
                    ],
                    rows,
                ),
            );
            artifacts.push("branch.json", to_json(&table));
            let all = table.points.iter().all(|p| p.converged);
            let summary = format!(
                "{} of {} λ points converged; monotone growth {}, through origin {}",
                table.points.iter().filter(|p| p.converged).count(),
                table.points.len(),
                table.monotone_growth,
                table.through_origin
            );
            Ok(Outcome {
                status: Status::from_ok(all),
                artifacts,
                summary,
            })
        }
    }
}

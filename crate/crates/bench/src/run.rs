//! Executes a [`BenchConfig`] as a batch of `(seed, solver)` runs.

use std::time::Instant;

use nalgebra::DMatrix;
use rdrsom::problems::maxcut::{maxcut_kkt, random_connected_graph};
use rdrsom::problems::snl::{snl_random_start, SnlObjective};
use rdrsom::problems::{snl_generate, snl_manifold, snl_rmse, snl_warmstart, KsInstance, MaxcutInstance};
use rdrsom::rng::{stream, uniform_centered, STREAM_START};
use rdrsom::{solve, solve_baseline_bb, Manifold, Objective, SolveReport, SolverConfig, Termination, Variant};
use rdrsom::solver::TraceEntry;

use crate::config::{BenchConfig, ConfigError, ProblemKind, SolverKind};
use crate::gset::parse_gset;
use crate::report::{BenchReport, ReportRow};

/// Average degree of generated max-cut graphs.
pub const MAXCUT_AVG_DEGREE: f64 = 6.0;

/// Result of one run together with the final point and iteration trace of
/// the last solve, if it got that far.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub row: ReportRow,
    pub point: Option<DMatrix<f64>>,
    pub f_initial: Option<f64>,
    pub trace: Vec<TraceEntry>,
}

/// Data shared by every seed of a batch.
enum Shared {
    None,
    Maxcut(MaxcutInstance),
    KohnSham(KsInstance),
}

fn problem_id(config: &BenchConfig) -> String {
    let n = config.n.unwrap_or(0);
    match config.problem {
        ProblemKind::MaxcutRandom => format!("maxcut-random-n{n}"),
        ProblemKind::MaxcutGset => config
            .gset_path
            .as_ref()
            .and_then(|p| p.file_stem())
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "gset".into()),
        ProblemKind::KohnSham => format!("kohn-sham-n{n}-p{}", config.p.unwrap_or(0)),
        ProblemKind::Snl => format!("snl-n{n}"),
        ProblemKind::SnlWarmstart => format!("snl-warmstart-n{n}"),
    }
}

fn prepare(config: &BenchConfig) -> Result<Shared, ConfigError> {
    match config.problem {
        ProblemKind::MaxcutGset => {
            let path = config.gset_path.as_ref().expect("validated");
            let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
                path: path.clone(),
                source,
            })?;
            let graph = parse_gset(&text).map_err(|source| ConfigError::Gset {
                path: path.clone(),
                source,
            })?;
            let inst = graph.to_instance(config.r).map_err(|e| ConfigError::Invalid(e.to_string()))?;
            Ok(Shared::Maxcut(inst))
        }
        ProblemKind::KohnSham => {
            let inst = KsInstance::new(config.n.expect("validated"), config.p.expect("validated"), config.alpha.unwrap_or(1.0))
                .map_err(|e| ConfigError::Invalid(e.to_string()))?;
            Ok(Shared::KohnSham(inst))
        }
        _ => Ok(Shared::None),
    }
}

/// Uniform random matrix from the start stream, projected onto `m`.
fn seeded_start(m: &Manifold, seed: u64) -> Result<DMatrix<f64>, String> {
    let (n, r) = m.shape();
    let raw = uniform_centered(&mut stream(seed, STREAM_START), n, r);
    m.project_point(&raw).map_err(|e| e.to_string())
}

fn run_solver<P: Objective>(
    problem: &P,
    m: &Manifold,
    x0: &DMatrix<f64>,
    solver: SolverKind,
    cfg: &SolverConfig,
) -> Result<SolveReport, String> {
    let result = match solver {
        SolverKind::Rdrsom => solve(problem, m, x0, &SolverConfig { variant: Variant::FiniteDifference, ..cfg.clone() }),
        SolverKind::RdrsomExact => solve(problem, m, x0, &SolverConfig { variant: Variant::ExactHessian, ..cfg.clone() }),
        SolverKind::BaselineBb => solve_baseline_bb(problem, m, x0, cfg),
    };
    result.map_err(|e| e.to_string())
}

struct Finished {
    report: SolveReport,
    metric: Option<(f64, &'static str)>,
}

fn execute(config: &BenchConfig, shared: &Shared, seed: u64, solver: SolverKind, cfg: &SolverConfig) -> Result<Finished, String> {
    match config.problem {
        ProblemKind::MaxcutRandom | ProblemKind::MaxcutGset => {
            let owned;
            let inst = match shared {
                Shared::Maxcut(inst) => inst,
                _ => {
                    let n = config.n.expect("validated");
                    let edges = random_connected_graph(n, MAXCUT_AVG_DEGREE, seed);
                    owned = MaxcutInstance::from_edges(n, &edges, config.r).map_err(|e| e.to_string())?;
                    &owned
                }
            };
            let m = inst.manifold();
            let x0 = seeded_start(&m, seed)?;
            let report = run_solver(inst, &m, &x0, solver, cfg)?;
            let metric = if inst.n <= config.kkt_cap {
                let kkt = maxcut_kkt(inst, &report.x, config.kkt_cap).map_err(|e| e.to_string())?;
                Some((kkt.residue, "kkt-residue"))
            } else {
                None
            };
            Ok(Finished { report, metric })
        }
        ProblemKind::KohnSham => {
            let Shared::KohnSham(inst) = shared else {
                unreachable!("prepared above")
            };
            let m = inst.manifold();
            let x0 = seeded_start(&m, seed)?;
            let report = run_solver(inst, &m, &x0, solver, cfg)?;
            Ok(Finished { report, metric: None })
        }
        ProblemKind::Snl | ProblemKind::SnlWarmstart => {
            let inst = snl_generate(config.n.expect("validated"), seed).map_err(|e| e.to_string())?;
            let m = snl_manifold(&inst, inst.d).map_err(|e| e.to_string())?;
            let x0 = if config.problem == ProblemKind::SnlWarmstart {
                snl_warmstart(&inst, cfg, seed).map_err(|e| format!("warm start: {e}"))?.start
            } else {
                snl_random_start(&m, seed).map_err(|e| e.to_string())?
            };
            let report = run_solver(&SnlObjective::new(&inst), &m, &x0, solver, cfg)?;
            let metric = match inst.truth_matrix() {
                Some(t) => Some((snl_rmse(&report.x, &t).map_err(|e| e.to_string())?, "rmse")),
                None => None,
            };
            Ok(Finished { report, metric })
        }
    }
}

fn finite(x: f64) -> Option<f64> {
    x.is_finite().then_some(x)
}

fn run_one(config: &BenchConfig, shared: &Shared, problem: &str, seed: u64, solver: SolverKind, cfg: &SolverConfig) -> RunOutput {
    let clock = Instant::now();
    let outcome = execute(config, shared, seed, solver, cfg);
    let seconds = clock.elapsed().as_secs_f64();
    let mut row = ReportRow {
        problem: problem.to_string(),
        solver: solver.name().to_string(),
        seed,
        fval: None,
        gradnorm: None,
        pfeas: None,
        metric: None,
        metric_name: None,
        iters: 0,
        seconds,
        termination: "failure".into(),
        error: None,
    };
    match outcome {
        Ok(Finished { report, metric }) => {
            row.fval = finite(report.f);
            row.gradnorm = finite(report.grad_norm);
            row.pfeas = finite(report.feasibility);
            row.metric = metric.and_then(|m| finite(m.0));
            row.metric_name = metric.map(|m| m.1.to_string());
            row.iters = report.iterations;
            row.termination = report.termination.to_string();
            if let Termination::Failure(msg) = &report.termination {
                row.error = Some(msg.clone());
            }
            RunOutput {
                row,
                point: Some(report.x),
                f_initial: Some(report.f_initial),
                trace: report.trace,
            }
        }
        Err(msg) => {
            row.error = Some(msg);
            RunOutput {
                row,
                point: None,
                f_initial: None,
                trace: Vec::new(),
            }
        }
    }
}

/// Runs every `(seed, solver)` pair, in parallel when built with rayon.
/// Outputs are sorted by `(problem, solver, seed)`.
pub fn run_batch(config: &BenchConfig) -> Result<Vec<RunOutput>, ConfigError> {
    config.validate()?;
    let cfg = config.solver_config()?;
    let shared = prepare(config)?;
    let problem = problem_id(config);
    let jobs: Vec<(u64, SolverKind)> = config
        .seeds
        .iter()
        .flat_map(|&s| config.solvers.iter().map(move |&k| (s, k)))
        .collect();
    let mut out = rdrsom::par::map_tasks(&jobs, |&(seed, solver)| run_one(config, &shared, &problem, seed, solver, &cfg));
    out.sort_by(|a, b| {
        (&a.row.problem, &a.row.solver, a.row.seed).cmp(&(&b.row.problem, &b.row.solver, b.row.seed))
    });
    Ok(out)
}

pub fn run_bench(config: &BenchConfig) -> Result<BenchReport, ConfigError> {
    let rows = run_batch(config)?.into_iter().map(|o| o.row).collect();
    Ok(BenchReport::new(config, rows))
}

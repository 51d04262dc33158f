//! Batch driver for the conformal curvature toolkit.
//!
//! One job per process. Every run writes a self-contained JSON report
//! (effective config echoed, versions, timings, results); bulk fields go to
//! NFLD1 files and solver traces to CSV. Exit codes: 0 all asserted checks
//! pass; 2 schema or parameter error (nothing written); 3 numeric failure
//! (nothing written, diagnostics on stderr); 4 check violation (report with
//! witnesses is written).

mod job;
mod report;

use clap::{Args, Parser, Subcommand};
use confcurv::field::ScalarField;
use confcurv::solver::SolverConfig;
use confcurv::{background, cone, curvature, nfld, seed, solver, verify};
use confcurv::{Error, Grid, MetricField, Result, StencilOrder};
use job::JobConfig;
use report::{Artifact, Report};
use serde_json::json;
use std::path::PathBuf;
use std::time::Instant;

/// Seed used when neither the flag nor the config supplies one.
const DEFAULT_RNG_SEED: u64 = 40;

#[derive(Parser)]
#[command(
    name = "confcurv",
    version,
    about = "Fully nonlinear conformal curvature equations on periodic grids",
    propagate_version = true
)]
struct Cli {
    /// JSON job config; explicit flags override its values.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Output directory for the report and artifacts.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Grid sizes "s1,s2,s3" (one value is replicated to all axes).
    /// Refinement suites read this as the "coarse,fine" size pair.
    #[arg(long, global = true, value_name = "SIZES")]
    grid: Option<String>,
    /// Seed for randomized sampling. Every code path is seeded, so reruns
    /// reproduce results bit for bit.
    #[arg(long, global = true, value_name = "INT")]
    rng_seed: Option<u64>,
    /// Pin determinism explicitly (runs are deterministic regardless; the
    /// flag is echoed into the report).
    #[arg(long, global = true)]
    deterministic: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Cone structure constants and the gradient-dominance sampler.
    Cones(ConesArgs),
    /// Scan the warped-product family for a strictly admissible background.
    Background(BackgroundArgs),
    /// Ricci and scalar curvature of a background metric.
    Curvature(CurvatureArgs),
    /// Build an admissible starting field by amplitude escalation over a
    /// critical-point landscape.
    Seed(SeedArgs),
    /// Continuity-method Newton solve of f(λ(g⁻¹V[u])) = c·ψ·e^{2ςu}.
    Solve(SolveArgs),
    /// Run a named property suite; any violation exits 4 with witnesses.
    Verify(VerifyArgs),
}

#[derive(Args)]
struct ConesArgs {
    /// Ambient dimension.
    #[arg(long)]
    n: Option<usize>,
    /// Cone index (1 ≤ k ≤ n).
    #[arg(long)]
    k: Option<usize>,
    /// Interior sample count for the dominance check.
    #[arg(long)]
    samples: Option<usize>,
}

#[derive(Args)]
struct BackgroundArgs {
    /// Cone index the background must be strictly admissible for.
    #[arg(long)]
    cone_k: Option<usize>,
    /// Comma-separated warp strengths to scan.
    #[arg(long, value_name = "K1,K2,...")]
    scan: Option<String>,
    /// Strictness margin δ.
    #[arg(long)]
    delta: Option<f64>,
}

#[derive(Args)]
struct CurvatureArgs {
    /// Warp strength for the built-in warped-product family.
    #[arg(long, conflicts_with = "metric_in")]
    warped_param: Option<f64>,
    /// Read the metric tensor from an NFLD1 file instead.
    #[arg(long, value_name = "PATH")]
    metric_in: Option<PathBuf>,
}

#[derive(Args)]
struct SeedArgs {
    /// Cone index of the target equation.
    #[arg(long)]
    cone_k: Option<usize>,
    /// Strength of the synthetic weakly admissible background bump.
    #[arg(long)]
    c0: Option<f64>,
    /// Landscape amplitude.
    #[arg(long)]
    amplitude: Option<f64>,
    /// Required admissibility margin δ.
    #[arg(long)]
    margin: Option<f64>,
}

#[derive(Args)]
struct SolveArgs {
    /// "manufactured" (flat background, analytically synthesized data with a
    /// known solution) or "warped" (geometric warped-product background).
    #[arg(long)]
    mode: Option<String>,
    /// Cone index.
    #[arg(long)]
    k: Option<usize>,
    /// Cubic grid size (manufactured mode).
    #[arg(long)]
    size: Option<usize>,
    /// Warp strength (warped mode).
    #[arg(long)]
    param: Option<f64>,
    /// Constant data ψ (warped mode).
    #[arg(long)]
    psi: Option<f64>,
}

#[derive(Args)]
struct VerifyArgs {
    /// conformal-identity | cone-sampler | gate-sweep | linearization |
    /// covariance | all
    suite: String,
    /// Randomized case count (conformal-identity, linearization).
    #[arg(long)]
    cases: Option<usize>,
    /// Sample count (cone-sampler).
    #[arg(long)]
    samples: Option<usize>,
}

fn main() {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => std::process::exit(code),
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(exit_code(&e));
        }
    }
}

fn exit_code(e: &Error) -> i32 {
    match e {
        // Malformed config, parameters, or input data: nothing was written.
        Error::Config(_)
        | Error::Params(_)
        | Error::Grid(_)
        | Error::Field(_)
        | Error::ConeConstant(_)
        | Error::Format(_) => 2,
        // Numeric or runtime failure mid-computation.
        Error::NotSpd { .. } | Error::Solver(_) | Error::Io(_) => 3,
        // A check or construction failed with a diagnosable witness.
        Error::ConeViolation(_) | Error::NoMatch(_) | Error::Seed(_) => 4,
    }
}

/// What a subcommand hands back: the command-specific slice of the effective
/// config (for the report echo), the result payload, extra artifacts, and
/// whether every asserted check passed.
struct Outcome {
    echo: JobConfig,
    payload: serde_json::Value,
    artifacts: Vec<Artifact>,
    passed: bool,
    summary: Vec<String>,
}

fn run(cli: &Cli) -> Result<i32> {
    let cfg = match &cli.config {
        Some(path) => JobConfig::load(path)?,
        None => JobConfig::default(),
    };
    cfg.check_command(command_name(&cli.command))?;
    let rng_seed = cli.rng_seed.or(cfg.rng_seed).unwrap_or(DEFAULT_RNG_SEED);
    let out_dir = cli
        .out
        .clone()
        .or_else(|| cfg.out.clone())
        .unwrap_or_else(|| PathBuf::from("confcurv-out"));
    let deterministic = cli.deterministic || cfg.deterministic.unwrap_or(true);

    let started = Instant::now();
    let mut outcome = dispatch(cli, &cfg, rng_seed)?;
    let wall_ms = started.elapsed().as_millis();

    outcome.echo.command = Some(command_name(&cli.command).to_string());
    outcome.echo.out = Some(out_dir.clone());
    outcome.echo.rng_seed = Some(rng_seed);
    outcome.echo.deterministic = Some(deterministic);

    let status = if outcome.passed { "pass" } else { "fail" };
    let report = Report {
        tool: "confcurv",
        version: env!("CARGO_PKG_VERSION"),
        command: command_name(&cli.command).to_string(),
        config: outcome.echo,
        deterministic,
        rng_seed,
        wall_ms,
        status,
        result: outcome.payload,
    };
    let report_value = serde_json::to_value(&report)
        .map_err(|e| Error::Format(format!("report serialization: {e}")))?;
    let mut artifacts = vec![Artifact::Json("report.json".into(), report_value)];
    artifacts.extend(outcome.artifacts);
    let written = report::flush(&out_dir, &artifacts)?;

    for line in &outcome.summary {
        println!("{line}");
    }
    for path in &written {
        println!("wrote {}", path.display());
    }
    println!("{}: {status} ({wall_ms} ms)", command_name(&cli.command));
    Ok(if outcome.passed { 0 } else { 4 })
}

fn command_name(c: &Command) -> &'static str {
    match c {
        Command::Cones(_) => "cones",
        Command::Background(_) => "background",
        Command::Curvature(_) => "curvature",
        Command::Seed(_) => "seed",
        Command::Solve(_) => "solve",
        Command::Verify(_) => "verify",
    }
}

fn dispatch(cli: &Cli, cfg: &JobConfig, rng_seed: u64) -> Result<Outcome> {
    match &cli.command {
        Command::Cones(a) => run_cones(a, cfg, rng_seed),
        Command::Background(a) => run_background(a, cli, cfg),
        Command::Curvature(a) => run_curvature(a, cli, cfg),
        Command::Seed(a) => run_seed(a, cli, cfg),
        Command::Solve(a) => run_solve(a, cli, cfg),
        Command::Verify(a) => run_verify(a, cli, cfg, rng_seed),
    }
}

fn pick<T: Copy>(flag: Option<T>, config: Option<T>, default: T) -> T {
    flag.or(config).unwrap_or(default)
}

/// Effective grid dimensions for field commands: CLI "s1,s2,s3" (a single
/// value is replicated to three axes) wins over the config list.
fn field_dims(cli: &Cli, cfg: &JobConfig, default: [usize; 3]) -> Result<Vec<usize>> {
    if let Some(raw) = &cli.grid {
        return job::parse_grid_list(raw).map_err(Error::Config);
    }
    Ok(cfg.grid.clone().unwrap_or_else(|| default.to_vec()))
}

/// Effective coarse/fine pair for refinement suites.
fn size_pair(cli: &Cli, cfg: &JobConfig, default: (usize, usize)) -> Result<(usize, usize)> {
    let list = if let Some(raw) = &cli.grid {
        raw.split(',')
            .map(|p| p.trim().parse::<usize>().map_err(|e| format!("bad size '{p}': {e}")))
            .collect::<std::result::Result<Vec<usize>, String>>()
            .map_err(Error::Config)?
    } else {
        match cfg.study_sizes.clone().or_else(|| cfg.grid.clone()) {
            Some(v) => v,
            None => return Ok(default),
        }
    };
    if list.len() != 2 || list[0] >= list[1] {
        return Err(Error::Config(format!(
            "refinement suites need an increasing coarse,fine size pair, got {list:?}"
        )));
    }
    Ok((list[0], list[1]))
}

fn run_cones(args: &ConesArgs, cfg: &JobConfig, rng_seed: u64) -> Result<Outcome> {
    let n = pick(args.n, cfg.n, 3);
    let k = pick(args.k, cfg.k, 2);
    let samples = pick(args.samples, cfg.samples, 10_000);
    let spec = cone::ConeSpec::gamma_k(n, k)?;
    let sampler = cone::check_lead_dominance(&spec, samples, rng_seed)?;
    let passed = sampler.violations == 0;
    let summary = vec![
        format!(
            "cone (n={n}, k={k}): kappa = {}, theta_hat = {:.9}",
            spec.kappa, spec.theta_hat
        ),
        format!(
            "dominance sampler: {} samples, {} violations, min lead ratio {:.6}",
            sampler.samples, sampler.violations, sampler.min_lead_ratio
        ),
    ];
    Ok(Outcome {
        echo: JobConfig {
            n: Some(n),
            k: Some(k),
            samples: Some(samples),
            ..JobConfig::default()
        },
        payload: json!({ "cone": spec, "sampler": sampler }),
        artifacts: Vec::new(),
        passed,
        summary,
    })
}

fn run_background(args: &BackgroundArgs, cli: &Cli, cfg: &JobConfig) -> Result<Outcome> {
    let dims = field_dims(cli, cfg, [16, 16, 16])?;
    let grid = Grid::new(&dims)?;
    let cone_k = pick(args.cone_k, cfg.k, 1);
    let delta = pick(args.delta, cfg.delta, 1e-3);
    let scan: Vec<f64> = match &args.scan {
        Some(raw) => job::parse_f64_list(raw).map_err(Error::Config)?,
        None => cfg.scan.clone().unwrap_or_else(|| vec![1.0, 2.0, 3.0, 4.0]),
    };
    let outcome = verify::warped_background_scan(&grid, cone_k, &scan, delta)?;
    let passed = outcome.accepted.is_some();
    let mut artifacts = Vec::new();
    let mut summary = Vec::new();
    for entry in &outcome.scan.entries {
        summary.push(format!(
            "warp {} -> {:?} (min margin {:.6})",
            entry.parameter, entry.verdict, entry.min_margin
        ));
    }
    if let Some(kp) = outcome.accepted {
        summary.push(format!("accepted warp strength {kp} (delta = {delta})"));
        let metric = background::warped_diagonal(
            &grid,
            &background::standard_warped_profiles(&grid, kp),
            StencilOrder::Four,
        )?;
        artifacts.push(Artifact::Sym("accepted_metric.nfld".into(), metric.tensor().clone()));
    } else {
        summary.push(format!(
            "no scanned warp strength is strictly admissible for k = {cone_k}"
        ));
    }
    Ok(Outcome {
        echo: JobConfig {
            grid: Some(dims),
            k: Some(cone_k),
            delta: Some(delta),
            scan: Some(scan),
            ..JobConfig::default()
        },
        payload: serde_json::to_value(&outcome)
            .map_err(|e| Error::Format(format!("scan serialization: {e}")))?,
        artifacts,
        passed,
        summary,
    })
}

fn run_curvature(args: &CurvatureArgs, cli: &Cli, cfg: &JobConfig) -> Result<Outcome> {
    let metric_in = args.metric_in.clone().or_else(|| cfg.metric_in.clone());
    let mut echo = JobConfig::default();
    let metric = match &metric_in {
        Some(path) => {
            echo.metric_in = Some(path.clone());
            let tensor = nfld::read_sym(path, None)?;
            MetricField::from_tensor(tensor, StencilOrder::Four)?
        }
        None => {
            let dims = field_dims(cli, cfg, [32, 16, 16])?;
            let grid = Grid::new(&dims)?;
            let kp = pick(args.warped_param, cfg.warped_param, 3.0);
            echo.grid = Some(dims);
            echo.warped_param = Some(kp);
            background::warped_diagonal(
                &grid,
                &background::standard_warped_profiles(&grid, kp),
                StencilOrder::Four,
            )?
        }
    };
    let curv = curvature::curvature(&metric)?;
    let scalar_min = curv.scalar.min();
    let scalar_max = curv
        .scalar
        .values()
        .iter()
        .cloned()
        .fold(f64::NEG_INFINITY, f64::max);
    let summary = vec![format!(
        "scalar curvature in [{scalar_min:.6}, {scalar_max:.6}], symmetry defect {:.3e}",
        curv.asym_defect
    )];
    Ok(Outcome {
        echo,
        payload: json!({
            "asym_defect": curv.asym_defect,
            "scalar_min": scalar_min,
            "scalar_max": scalar_max,
        }),
        artifacts: vec![
            Artifact::Sym("ricci.nfld".into(), curv.ricci),
            Artifact::Scalar("scalar_curvature.nfld".into(), curv.scalar),
        ],
        passed: true,
        summary,
    })
}

fn run_seed(args: &SeedArgs, cli: &Cli, cfg: &JobConfig) -> Result<Outcome> {
    let dims = field_dims(cli, cfg, [16, 16, 16])?;
    let grid = Grid::new(&dims)?;
    let cone_k = pick(args.cone_k, cfg.k, 2);
    let c0 = pick(args.c0, cfg.c0, 0.2);
    let amplitude = pick(args.amplitude, cfg.amplitude, 0.05);
    let alpha = cfg.alpha.unwrap_or(-1.0);
    let tau = cfg.tau.unwrap_or(0.0);
    let mut seed_cfg = cfg.seed_cfg.clone().unwrap_or_default();
    if let Some(m) = args.margin.or(cfg.delta) {
        seed_cfg.margin = m;
    }
    let ctx = seed::wide_bump_context(&grid, c0, cone_k, alpha, tau)?;
    let landscape = seed::morse_generator(&grid, amplitude);
    let moves = cfg.moves.clone().unwrap_or_default();
    let v = if moves.is_empty() {
        ScalarField::sample(&grid, &landscape)
    } else {
        seed::pull_back(&grid, &landscape, &moves, seed_cfg.flow_steps)?
    };
    let (u, rep) = seed::escalate(&ctx, &v, &seed_cfg)?;
    let summary = vec![
        format!(
            "escalation accepted N = {} after {} attempts; margin {:.6} >= {:.6}",
            rep.amplitude_used,
            rep.attempts.len(),
            rep.min_margin,
            seed_cfg.margin
        ),
        format!(
            "degenerate pocket: {} points, achieved margin {:.3e}, min |grad v|^2 {:.3e}",
            rep.pocket_points, rep.pocket_min_margin, rep.pocket_min_grad_sq
        ),
    ];
    Ok(Outcome {
        echo: JobConfig {
            grid: Some(dims),
            k: Some(cone_k),
            c0: Some(c0),
            amplitude: Some(amplitude),
            alpha: Some(alpha),
            tau: Some(tau),
            moves: if moves.is_empty() { None } else { Some(moves) },
            seed_cfg: Some(seed_cfg),
            ..JobConfig::default()
        },
        payload: serde_json::to_value(&rep)
            .map_err(|e| Error::Format(format!("seed report serialization: {e}")))?,
        artifacts: vec![
            Artifact::Scalar("landscape.nfld".into(), v),
            Artifact::Scalar("seed_field.nfld".into(), u),
        ],
        passed: true,
        summary,
    })
}

fn run_solve(args: &SolveArgs, cli: &Cli, cfg: &JobConfig) -> Result<Outcome> {
    let mode = args
        .mode
        .clone()
        .or_else(|| cfg.mode.clone())
        .unwrap_or_else(|| "manufactured".into());
    let solver_cfg = cfg.solver.clone().unwrap_or_default();
    match mode.as_str() {
        "manufactured" => solve_manufactured(args, cfg, &solver_cfg),
        "warped" => solve_warped(args, cli, cfg, &solver_cfg),
        other => Err(Error::Config(format!(
            "unknown solve mode '{other}'; expected 'manufactured' or 'warped'"
        ))),
    }
}

fn solve_manufactured(
    args: &SolveArgs,
    cfg: &JobConfig,
    solver_cfg: &SolverConfig,
) -> Result<Outcome> {
    let size = pick(args.size, cfg.size, 16);
    let k = pick(args.k, cfg.k, 2);
    let (ctx, exact) = verify::manufactured_instance(size, k)?;
    let start = ScalarField::zeros(exact.grid());
    let (u, rep) = solver::continuity_solve(&ctx, &start, solver_cfg)?;
    let err = u.linf_diff(&exact);
    let covariance = verify::covariance_residual(&ctx, &u, 4.0)?;
    let passed = covariance <= verify::COVARIANCE_TOL;
    let summary = vec![
        format!(
            "converged in {} Newton iterations; residual {:.3e}, margin {:.3e}",
            rep.total_newton_iterations, rep.final_residual, rep.final_min_margin
        ),
        format!("solution error vs exact field: {err:.3e}"),
        format!("covariance residual at s = 4: {covariance:.3e}"),
    ];
    Ok(Outcome {
        echo: JobConfig {
            mode: Some("manufactured".into()),
            size: Some(size),
            k: Some(k),
            solver: Some(solver_cfg.clone()),
            ..JobConfig::default()
        },
        payload: json!({
            "report": rep,
            "err_vs_exact": err,
            "covariance_residual": covariance,
        }),
        artifacts: vec![
            Artifact::Scalar("solution.nfld".into(), u),
            Artifact::Csv("newton_trace.csv".into(), report::newton_trace_csv(&rep.newton_trace)),
            Artifact::Csv("homotopy_trace.csv".into(), report::homotopy_trace_csv(&rep.segments)),
        ],
        passed,
        summary,
    })
}

fn solve_warped(
    args: &SolveArgs,
    cli: &Cli,
    cfg: &JobConfig,
    solver_cfg: &SolverConfig,
) -> Result<Outcome> {
    // The warp profiles vary along the first axis only, so that axis needs
    // the resolution (e^{2K sin x} spans decades at K ~ 3); the others are
    // homogeneous directions.
    let dims = field_dims(cli, cfg, [32, 8, 8])?;
    let grid = Grid::new(&dims)?;
    let k = pick(args.k, cfg.k, 1);
    let param = pick(args.param, cfg.warped_param, 3.2);
    let psi_const = pick(args.psi, cfg.psi, 1.0);
    let alpha = cfg.alpha.unwrap_or(-1.0);
    let tau = cfg.tau.unwrap_or(0.0);

    let ctx = background::warped_context(&grid, param, k, alpha, tau, psi_const)?;
    // The start must sit strictly inside the cone or the Newton path has
    // nowhere to begin; report the violation as a witnessed check failure.
    let admissibility = background::classify_admissibility(
        ctx.metric().clone(),
        ctx.params(),
        solver_cfg.guard_margin,
    )?;
    if admissibility.verdict != background::Verdict::Strict {
        return Err(Error::NoMatch(format!(
            "warped background at strength {param} is not strictly admissible for k = {k}: \
             margin {:.6} at point {:?} with eigenvalues {:?}",
            admissibility.min_margin, admissibility.witness_coords, admissibility.witness_lambda
        )));
    }
    let start = ScalarField::zeros(&grid);
    let (u, rep) = solver::continuity_solve(&ctx, &start, solver_cfg)?;
    let covariance = verify::covariance_residual(&ctx, &u, 4.0)?;
    let passed = covariance <= verify::COVARIANCE_TOL;
    let summary = vec![
        format!(
            "background margin {:.6} at warp strength {param}",
            admissibility.min_margin
        ),
        format!(
            "converged in {} Newton iterations; residual {:.3e}, margin {:.3e}",
            rep.total_newton_iterations, rep.final_residual, rep.final_min_margin
        ),
        format!("covariance residual at s = 4: {covariance:.3e}"),
    ];
    Ok(Outcome {
        echo: JobConfig {
            mode: Some("warped".into()),
            grid: Some(dims),
            k: Some(k),
            warped_param: Some(param),
            psi: Some(psi_const),
            alpha: Some(alpha),
            tau: Some(tau),
            solver: Some(solver_cfg.clone()),
            ..JobConfig::default()
        },
        payload: json!({
            "admissibility": admissibility,
            "report": rep,
            "covariance_residual": covariance,
        }),
        artifacts: vec![
            Artifact::Scalar("solution.nfld".into(), u),
            Artifact::Csv("newton_trace.csv".into(), report::newton_trace_csv(&rep.newton_trace)),
            Artifact::Csv("homotopy_trace.csv".into(), report::homotopy_trace_csv(&rep.segments)),
        ],
        passed,
        summary,
    })
}

fn run_verify(args: &VerifyArgs, cli: &Cli, cfg: &JobConfig, rng_seed: u64) -> Result<Outcome> {
    let suite = if args.suite.is_empty() {
        cfg.suite.clone().unwrap_or_default()
    } else {
        args.suite.clone()
    };
    let mut echo = JobConfig {
        suite: Some(suite.clone()),
        ..JobConfig::default()
    };
    let (payload, passed, summary) = match suite.as_str() {
        "conformal-identity" => {
            let cases = pick(args.cases, cfg.cases, 5);
            let (coarse, fine) = size_pair(cli, cfg, (16, 32))?;
            echo.cases = Some(cases);
            echo.study_sizes = Some(vec![coarse, fine]);
            let rep = verify::conformal_identity_study(cases, rng_seed, coarse, fine)?;
            let mut lines: Vec<String> = rep
                .cases
                .iter()
                .map(|c| {
                    format!(
                        "seed {} (alpha {:+}, tau {:.3}): order {:.3} [{}]",
                        c.seed,
                        c.alpha,
                        c.tau,
                        c.observed_order,
                        verdict(c.passed)
                    )
                })
                .collect();
            lines.push(format!("conformal identity: {}", verdict(rep.passed)));
            (value(&rep)?, rep.passed, lines)
        }
        "cone-sampler" => {
            let samples = pick(args.samples, cfg.samples, 10_000);
            echo.samples = Some(samples);
            let rep = verify::cone_structure_study(samples, rng_seed)?;
            let mut lines: Vec<String> = rep
                .samplers
                .iter()
                .map(|s| {
                    format!(
                        "(n={}, k={}): {} samples, {} violations [{}]",
                        s.n,
                        s.k,
                        s.report.samples,
                        s.report.violations,
                        verdict(s.passed)
                    )
                })
                .collect();
            lines.push(format!("cone structure: {}", verdict(rep.passed)));
            (value(&rep)?, rep.passed, lines)
        }
        "gate-sweep" => {
            let rep = verify::structure_vector_sweep()?;
            let lines = vec![format!(
                "{} gate-passing combinations, {} structure-vector failures [{}]",
                rep.combos,
                rep.failures,
                verdict(rep.passed)
            )];
            (value(&rep)?, rep.passed, lines)
        }
        "linearization" => {
            let cases = pick(args.cases, cfg.cases, 20);
            echo.cases = Some(cases);
            let rep = verify::linearization_fd_study(cases, rng_seed)?;
            let lines = vec![format!(
                "{} randomized configs, max relative defect {:.3e} [{}]",
                rep.cases.len(),
                rep.max_rel_err,
                verdict(rep.passed)
            )];
            (value(&rep)?, rep.passed, lines)
        }
        "covariance" => {
            let (ctx, exact) = verify::manufactured_instance(12, 2)?;
            let start = ScalarField::zeros(exact.grid());
            let (u, _) = solver::continuity_solve(&ctx, &start, &SolverConfig::default())?;
            let residual = verify::covariance_residual(&ctx, &u, 4.0)?;
            let passed = residual <= verify::COVARIANCE_TOL;
            let lines = vec![format!(
                "shifted solution vs 4x data: residual {residual:.3e} [{}]",
                verdict(passed)
            )];
            (
                json!({ "scale": 4.0, "residual": residual, "tolerance": verify::COVARIANCE_TOL }),
                passed,
                lines,
            )
        }
        "all" => {
            let conformal = verify::conformal_identity_study(5, rng_seed, 16, 32)?;
            let cones = verify::cone_structure_study(10_000, rng_seed)?;
            let gates = verify::structure_vector_sweep()?;
            let fd = verify::linearization_fd_study(20, rng_seed)?;
            let (ctx, exact) = verify::manufactured_instance(12, 2)?;
            let start = ScalarField::zeros(exact.grid());
            let (u, _) = solver::continuity_solve(&ctx, &start, &SolverConfig::default())?;
            let cov = verify::covariance_residual(&ctx, &u, 4.0)?;
            let cov_ok = cov <= verify::COVARIANCE_TOL;
            let passed =
                conformal.passed && cones.passed && gates.passed && fd.passed && cov_ok;
            let lines = vec![
                format!("conformal-identity: {}", verdict(conformal.passed)),
                format!("cone-sampler: {}", verdict(cones.passed)),
                format!("gate-sweep: {}", verdict(gates.passed)),
                format!("linearization: {}", verdict(fd.passed)),
                format!("covariance: {}", verdict(cov_ok)),
            ];
            (
                json!({
                    "conformal_identity": conformal,
                    "cone_sampler": cones,
                    "gate_sweep": gates,
                    "linearization": fd,
                    "covariance": { "residual": cov, "passed": cov_ok },
                }),
                passed,
                lines,
            )
        }
        other => {
            return Err(Error::Config(format!(
                "unknown suite '{other}'; known suites: conformal-identity, cone-sampler, \
                 gate-sweep, linearization, covariance, all"
            )))
        }
    };
    Ok(Outcome {
        echo,
        payload,
        artifacts: Vec::new(),
        passed,
        summary,
    })
}

fn verdict(ok: bool) -> &'static str {
    if ok {
        "pass"
    } else {
        "FAIL"
    }
}

fn value<T: serde::Serialize>(v: &T) -> Result<serde_json::Value> {
    serde_json::to_value(v).map_err(|e| Error::Format(format!("report serialization: {e}")))
}

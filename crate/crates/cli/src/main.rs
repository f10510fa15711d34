use std::fmt::Display;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use cdare::fpi::{self, SolutionReport, SolverOptions, Status};
use cdare::io::{self, ParsedInstance};
use cdare::linalg::{c, CVec};
use cdare::lqr;
use cdare::membership::{self, AssumptionReport, MembershipReport, SGeqCertificate};
use cdare::scalar::{self, ScalarAnalysis, ScalarProblem};
use cdare::HermitianMatrix;
use clap::{Args, Parser, Subcommand};
use serde::Serialize;

/// Maximal Hermitian solutions of the conjugate discrete-time algebraic Riccati equation.
#[derive(Parser)]
#[command(name = "cdare", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the fixed-point iteration on an instance file.
    Solve(SolveArgs),
    /// Classify a matrix against the sets P, T, R<=, R>= and S>=.
    Check(CheckArgs),
    /// Closed-form analysis of a scalar problem.
    Scalar(ScalarArgs),
    /// Solve, then roll out the optimal antilinear feedback.
    Simulate(SimulateArgs),
}

#[derive(Args)]
struct StartArgs {
    /// Instance file (JSON).
    #[arg(long)]
    instance: PathBuf,
    /// Matrix file overriding the instance's X0.
    #[arg(long, value_name = "PATH")]
    x0: Option<PathBuf>,
    /// Matrix file overriding the instance's x_T_witness.
    #[arg(long, value_name = "PATH")]
    witness: Option<PathBuf>,
    /// Search 0 and ±10^j I (j = -3..6) for a witness when none is given.
    #[arg(long)]
    witness_search: bool,
    /// Residual tolerance [env: CDARE_TOL].
    #[arg(long)]
    tol: Option<f64>,
    /// Iteration cap [env: CDARE_MAX_ITER].
    #[arg(long)]
    max_iter: Option<usize>,
    /// Relative tolerance of the monotonicity check [env: CDARE_PSD_TOL].
    #[arg(long)]
    psd_tol: Option<f64>,
}

#[derive(Args)]
struct SolveArgs {
    #[command(flatten)]
    start: StartArgs,
    /// Write the per-step trace as CSV.
    #[arg(long, value_name = "PATH")]
    trace: Option<PathBuf>,
    /// Print the report as JSON.
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct CheckArgs {
    /// Instance file (JSON).
    #[arg(long)]
    instance: PathBuf,
    /// `zero`, `identity`, `witness` (the instance's x_T_witness) or a matrix file.
    #[arg(long = "X", value_name = "MATRIX")]
    x: String,
    /// Print the report as JSON.
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct ScalarArgs {
    #[arg(long, allow_negative_numbers = true)]
    a: f64,
    #[arg(long, allow_negative_numbers = true, default_value_t = 0.0)]
    a_im: f64,
    #[arg(long, allow_negative_numbers = true)]
    b: f64,
    #[arg(long, allow_negative_numbers = true, default_value_t = 0.0)]
    b_im: f64,
    #[arg(long, allow_negative_numbers = true)]
    r: f64,
    #[arg(long, allow_negative_numbers = true)]
    h: f64,
    /// Starting point for the iterate table.
    #[arg(long, allow_negative_numbers = true, requires = "iterates")]
    x0: Option<f64>,
    /// Number of iterates to tabulate from --x0.
    #[arg(long, requires = "x0")]
    iterates: Option<u64>,
    /// Print the report as JSON.
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    start: StartArgs,
    /// Horizon N.
    #[arg(long, default_value_t = 300)]
    steps: usize,
    /// Write the trajectory CSV here instead of stdout.
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
}

/// Exit 2: the input could not be used.
struct InputError(String);

impl<E: Display> From<E> for InputError {
    fn from(e: E) -> Self {
        Self(e.to_string())
    }
}

type CliResult = Result<ExitCode, InputError>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(2)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let outcome = match cli.command {
        Command::Solve(args) => solve(args),
        Command::Check(args) => check(args),
        Command::Scalar(args) => scalar_cmd(args),
        Command::Simulate(args) => simulate(args),
    };
    outcome.unwrap_or_else(|InputError(msg)| {
        eprintln!("error: {msg}");
        ExitCode::from(2)
    })
}

fn env_override<T: std::str::FromStr>(name: &str) -> Result<Option<T>, InputError> {
    match std::env::var(name) {
        Ok(v) => v
            .parse()
            .map(Some)
            .map_err(|_| InputError(format!("{name}={v} is not a valid value"))),
        Err(_) => Ok(None),
    }
}

/// Defaults, then environment, then the instance's options block, then flags.
fn solver_options(start: &StartArgs, parsed: &ParsedInstance) -> Result<SolverOptions, InputError> {
    let mut opts = SolverOptions::default();
    if let Some(t) = env_override("CDARE_TOL")? {
        opts.tol_residual = t;
    }
    if let Some(k) = env_override("CDARE_MAX_ITER")? {
        opts.max_iter = k;
    }
    if let Some(t) = env_override("CDARE_PSD_TOL")? {
        opts.psd_tol = t;
    }
    let mut opts = parsed.solver_options(opts);
    if let Some(t) = start.tol {
        opts.tol_residual = t;
    }
    if let Some(k) = start.max_iter {
        opts.max_iter = k;
    }
    if let Some(t) = start.psd_tol {
        opts.psd_tol = t;
    }
    opts.validate()?;
    Ok(opts)
}

fn read_matrix(path: &Path, n: usize) -> Result<HermitianMatrix, InputError> {
    let text = std::fs::read_to_string(path).map_err(|e| InputError(format!("cannot read {}: {e}", path.display())))?;
    Ok(io::parse_matrix_str(&text, n)?)
}

struct Prepared {
    parsed: ParsedInstance,
    opts: SolverOptions,
    x0: HermitianMatrix,
    witness: Option<HermitianMatrix>,
    notes: Vec<String>,
}

/// Pick `X0`: explicit matrix first, then a witness (given or searched).
fn prepare(start: &StartArgs) -> Result<Prepared, InputError> {
    let mut parsed = io::parse_instance(&start.instance)?;
    let n = parsed.problem.n();
    if let Some(path) = &start.x0 {
        parsed.x0 = Some(read_matrix(path, n)?);
    }
    if let Some(path) = &start.witness {
        parsed.x_t_witness = Some(read_matrix(path, n)?);
    }
    let opts = solver_options(start, &parsed)?;
    let mut notes = Vec::new();
    let mut witness = parsed.x_t_witness.clone();
    if witness.is_none() && start.witness_search {
        witness = membership::heuristic_witness_search(&parsed.problem, &[]);
        match &witness {
            Some(w) => notes.push(format!("heuristic witness search picked W = {:e} I", w.first())),
            None => return Err(InputError("heuristic witness search found no member of T".into())),
        }
    }
    let x0 = match (&parsed.x0, &witness) {
        (Some(x0), _) => x0.clone(),
        (None, Some(w)) => {
            let init = fpi::initial_matrix(&parsed.problem, w)?;
            notes.extend(init.warning);
            init.x0
        }
        (None, None) => {
            return Err(InputError(
                "no starting point: give X0 or x_T_witness in the instance, --x0, --witness, or --witness-search"
                    .into(),
            ))
        }
    };
    Ok(Prepared {
        parsed,
        opts,
        x0,
        witness,
        notes,
    })
}

fn status_code(status: Status) -> ExitCode {
    if status == Status::Converged {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}

fn print_matrix(name: &str, x: &HermitianMatrix) {
    let m = x.as_matrix();
    for i in 0..m.nrows() {
        let row: Vec<String> = (0..m.ncols())
            .map(|j| {
                let z = m[(i, j)];
                format!("{:e}{:+e}i", z.re, z.im)
            })
            .collect();
        println!("{name}[{i}] = {}", row.join("  "));
    }
}

fn print_opt(name: &str, v: Option<f64>) {
    match v {
        Some(v) => println!("{name} = {v:e}"),
        None => println!("{name} = none"),
    }
}

fn print_solution(rep: &SolutionReport) {
    println!("status = {:?}", rep.status);
    println!("regime = {:?}", rep.regime);
    println!("iterations = {}", rep.iterations);
    println!("residual = {:e}", rep.residual);
    println!("rho_final = {:e}", rep.rho_final);
    print_opt("rate_estimate", rep.rate_estimate);
    print_opt("contraction_ratio", rep.contraction_ratio);
    if let Some(k) = rep.failed_step {
        println!("failed_step = {k}");
    }
    if rep.x.dim() == 1 {
        println!("x = {:e}", rep.x.first());
    }
    print_matrix("X", &rep.x);
    for w in &rep.warnings {
        println!("warning: {w}");
    }
}

fn solve(args: SolveArgs) -> CliResult {
    let mut prep = prepare(&args.start)?;
    prep.opts.record_trace = args.trace.is_some();
    let mut rep = fpi::fpi_solve(&prep.parsed.problem, &prep.x0, prep.witness.as_ref(), &prep.opts)?;
    rep.warnings.splice(0..0, prep.notes);
    if let (Some(path), Some(trace)) = (&args.trace, &rep.trace) {
        std::fs::write(path, trace.to_csv())
            .map_err(|e| InputError(format!("cannot write {}: {e}", path.display())))?;
    }
    if args.json {
        println!("{}", serde_json::to_string_pretty(&rep)?);
    } else {
        print_solution(&rep);
    }
    Ok(status_code(rep.status))
}

#[derive(Serialize)]
struct CheckReport {
    membership: MembershipReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    assumptions: Option<AssumptionReport>,
}

fn check(args: CheckArgs) -> CliResult {
    let parsed = io::parse_instance(&args.instance)?;
    let p = &parsed.problem;
    let n = p.n();
    let x = match args.x.as_str() {
        "zero" => HermitianMatrix::zeros(n),
        "identity" => HermitianMatrix::identity(n),
        "witness" => parsed
            .x_t_witness
            .clone()
            .ok_or_else(|| InputError("--X witness needs x_T_witness in the instance".into()))?,
        path => read_matrix(Path::new(path), n)?,
    };
    let membership = membership::classify(p, &x, parsed.x_t_witness.as_ref())?;
    let assumptions = match (&parsed.x_t_witness, &parsed.x_p_witness) {
        (Some(t), Some(pw)) => Some(membership::check_assumptions(p, t, pw)),
        _ => None,
    };
    let report = CheckReport {
        membership,
        assumptions,
    };
    if args.json {
        println!("{}", serde_json::to_string_pretty(&report)?);
        return Ok(ExitCode::SUCCESS);
    }
    let m = &report.membership;
    println!("in_P = {} (lambda_min(R_X) = {:e})", m.in_p.holds, m.in_p.margin);
    println!("in_T = {} (rho(T_hat_X) = {:e})", m.in_t.holds, m.in_t.rho);
    println!(
        "in_R_leq = {} (lambda_min(R(X) - X) = {:e})",
        m.in_r_leq.holds, m.in_r_leq.margin
    );
    println!(
        "in_R_geq = {} (lambda_min(X - R(X)) = {:e})",
        m.in_r_geq.holds, m.in_r_geq.margin
    );
    match &m.in_s_geq {
        Some(SGeqCertificate::Checked {
            holds,
            margin,
            tolerance,
            ..
        }) => {
            println!("in_S_geq = {holds} (margin = {margin:e}, tolerance = {tolerance:e})")
        }
        Some(SGeqCertificate::WitnessInvalid { rho, .. }) => {
            println!("in_S_geq = unknown (x_T_witness not in T: rho = {rho:e})")
        }
        None => println!("in_S_geq = unknown (no x_T_witness)"),
    }
    println!("residual = {:e}", m.residual);
    println!("fixed_point = {}", m.is_fixed_point());
    if let Some(a) = &report.assumptions {
        println!("assumptions_satisfied = {}", a.satisfied);
        for note in &a.notes {
            println!("note: {note}");
        }
    }
    Ok(ExitCode::SUCCESS)
}

#[derive(Serialize)]
struct ScalarReport {
    analysis: ScalarAnalysis,
    stable_set_excludes: (f64, f64),
    #[serde(skip_serializing_if = "Vec::is_empty")]
    iterates: Vec<(u64, f64)>,
}

fn scalar_cmd(args: ScalarArgs) -> CliResult {
    let sp = ScalarProblem::new(c(args.a, args.a_im), c(args.b, args.b_im), args.r, args.h)?;
    let analysis = scalar::analyze(&sp);
    let mut iterates = Vec::new();
    if let (Some(x0), Some(k)) = (args.x0, args.iterates) {
        let mut x = x0;
        iterates.push((0, x));
        for j in 1..=k {
            x = sp.riccati(x);
            iterates.push((j, x));
        }
    }
    let report = ScalarReport {
        analysis,
        stable_set_excludes: sp.stable_set_bounds(),
        iterates,
    };
    if args.json {
        println!("{}", serde_json::to_string_pretty(&report)?);
        return Ok(ExitCode::SUCCESS);
    }
    let an = &report.analysis;
    println!("g = {:e}", sp.g);
    println!("D = {:e}", an.d);
    print_opt("x_M", an.x_max);
    print_opt("x_m", an.x_min);
    println!("h_M = {:e}", an.h_max);
    println!("h_m = {:e}", an.h_min);
    print_opt("t_hat_M", an.t_hat_max);
    print_opt("t_hat_m", an.t_hat_min);
    println!("case = {}", an.case.label());
    let (lo, hi) = report.stable_set_excludes;
    println!("T = complement of [{lo:e}, {hi:e}]");
    if let Some(x0) = args.x0 {
        if !report.iterates.is_empty() {
            println!("k,x_k,closed_form");
            for &(k, x) in &report.iterates {
                let cf = scalar::closed_form_iterate(&sp, x0, k).map_or_else(|_| String::new(), |v| format!("{v:e}"));
                println!("{k},{x:e},{cf}");
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn simulate(args: SimulateArgs) -> CliResult {
    let prep = prepare(&args.start)?;
    let p = &prep.parsed.problem;
    let rep = fpi::fpi_solve(p, &prep.x0, prep.witness.as_ref(), &prep.opts)?;
    if rep.status != Status::Converged {
        eprintln!(
            "solve did not converge: {:?} after {} steps",
            rep.status, rep.iterations
        );
        return Ok(ExitCode::from(1));
    }
    let x0 = prep.parsed.x0_state.clone().unwrap_or_else(|| {
        let mut e = CVec::zeros(p.n());
        e[0] = c(1.0, 0.0);
        e
    });
    let opt = match lqr::verify_optimality(p, &rep.x, &x0, args.steps) {
        Ok(opt) => opt,
        Err(cdare::CdareError::Precondition(msg)) | Err(cdare::CdareError::Numerical(msg)) => {
            eprintln!("error: {msg}");
            return Ok(ExitCode::from(1));
        }
        Err(e) => return Err(e.into()),
    };
    let f = lqr::synthesize(p, &rep.x)?;
    let traj = lqr::simulate(p, &f, &x0, args.steps)?;
    let csv = traj.to_csv(p.h(), p.r());
    let summary = [
        format!("cost = {:e}", opt.cost),
        format!("predicted = {:e}", opt.predicted),
        format!("gap = {:e}", opt.gap),
        format!("tail_estimate = {:e}", opt.tail_estimate),
        format!("worst_perturbation_margin = {:e}", opt.worst_perturbation_margin),
        format!("suboptimality_ok = {}", opt.suboptimality_ok),
        format!("dynamics_residual = {:e}", traj.dynamics_residual(p)),
    ];
    match &args.out {
        Some(path) => {
            std::fs::write(path, csv).map_err(|e| InputError(format!("cannot write {}: {e}", path.display())))?;
            for line in summary {
                println!("{line}");
            }
        }
        None => {
            print!("{csv}");
            for line in summary {
                eprintln!("{line}");
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

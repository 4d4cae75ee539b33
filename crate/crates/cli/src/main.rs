use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use graph_hj::discretization::{assemble_linear, GridFunction, LinearCoefficients};
use graph_hj::io::{
    parse_points, parse_problem_file, write_mc_table, write_solution_csv, write_sweep_table, ProblemData, ProblemFile,
};
use graph_hj::linear_solver::{check_discrete_max_principle, solve_linear_with};
use graph_hj::oracle::{eikonal_residual, weighted_boundary_distance_with, DENSITY_FLOOR};
use graph_hj::stochastic::{compare, estimate, McConfig};
use graph_hj::vanishing::{run_sweep, SweepOptions, SweepProblem};
use graph_hj::viscous::{
    eikonal2, solve_eikonal_log_with, solve_semilinear_newton, validate_hamiltonian, EikonalData, HamiltonianSpec,
    ProbeConfig,
};
use graph_hj::{Error, Execution, Result};
use serde_json::{json, Value};

#[derive(Parser)]
#[command(
    name = "graph-hj",
    version,
    about = "Viscous Hamilton-Jacobi solvers on metric graphs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse and validate a problem file, printing normalization actions.
    Validate { file: PathBuf },
    /// Weighted distance to the boundary (eikonal problems).
    Oracle {
        file: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Solve the linear Kirchhoff problem.
    SolveLinear {
        file: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Solve the viscous eikonal equation through the log transform.
    SolveEikonal {
        file: PathBuf,
        #[arg(long)]
        eps: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Solve the viscous problem for a general Hamiltonian by Newton's method.
    SolveHj {
        file: PathBuf,
        #[arg(long)]
        eps: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Vanishing-viscosity sweep over the file's eps schedule.
    Sweep {
        file: PathBuf,
        #[arg(long)]
        out_table: Option<PathBuf>,
        #[arg(long)]
        out_solutions: Option<PathBuf>,
    },
    /// Compare Monte Carlo estimates with the linear solve at probe points.
    McCheck {
        file: PathBuf,
        /// Comma-separated `edge:y` list.
        #[arg(long)]
        points: String,
        #[arg(long, default_value_t = 10_000)]
        paths: usize,
        #[arg(long, default_value_t = 1e-4)]
        dt: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Probe a Hamiltonian for the structural assumptions.
    ValidateHamiltonian { file: PathBuf },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(e) = configure_threads() {
        eprintln!("error: {e}");
        return ExitCode::from(2);
    }
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

/// Honor `GRAPH_HJ_THREADS` (0 or unset = one worker per core).
fn configure_threads() -> Result<()> {
    let Ok(raw) = std::env::var("GRAPH_HJ_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .map_err(|_| Error::Usage(format!("GRAPH_HJ_THREADS must be a nonnegative integer, got `{raw}`")))?;
    #[cfg(feature = "parallel")]
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Error::Usage(format!("cannot configure thread pool: {e}")))?;
    #[cfg(not(feature = "parallel"))]
    let _ = n;
    Ok(())
}

fn exec() -> Execution {
    Execution::Parallel
}

/// Writes CSV to `out` (report to stdout) or, without `--out`, CSV to
/// stdout and the report to stderr.
fn emit(out: Option<&Path>, report: &Value, csv: impl FnOnce(&mut dyn Write) -> Result<()>) -> Result<()> {
    let pretty = serde_json::to_string_pretty(report).expect("reports serialize");
    match out {
        Some(path) => {
            let file = File::create(path).map_err(io_error(path))?;
            let mut w = BufWriter::new(file);
            csv(&mut w)?;
            w.flush().map_err(io_error(path))?;
            print_stdout(&pretty);
        }
        None => {
            let stdout = io::stdout();
            let mut lock = stdout.lock();
            csv(&mut lock)?;
            eprintln!("{pretty}");
        }
    }
    Ok(())
}

/// `println!` that tolerates a closed pipe (e.g. `| head`).
fn print_stdout(text: &str) {
    let _ = writeln!(io::stdout().lock(), "{text}");
}

fn io_error(path: &Path) -> impl Fn(io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.display().to_string(),
        source,
    }
}

fn run(cmd: Command) -> Result<()> {
    match cmd {
        Command::Validate { file } => validate(&file),
        Command::Oracle { file, out } => oracle(&file, out.as_deref()),
        Command::SolveLinear { file, out } => solve_linear_cmd(&file, out.as_deref()),
        Command::SolveEikonal { file, eps, out } => solve_eikonal(&file, eps, out.as_deref()),
        Command::SolveHj { file, eps, out } => solve_hj(&file, eps, out.as_deref()),
        Command::Sweep {
            file,
            out_table,
            out_solutions,
        } => sweep(&file, out_table.as_deref(), out_solutions.as_deref()),
        Command::McCheck {
            file,
            points,
            paths,
            dt,
            seed,
            out,
        } => mc_check(&file, &points, McConfig { paths, dt, seed }, out.as_deref()),
        Command::ValidateHamiltonian { file } => validate_h(&file),
    }
}

fn kind_name(p: &ProblemData) -> &'static str {
    match p {
        ProblemData::Eikonal(_) => "eikonal",
        ProblemData::Linear(_) => "linear",
        ProblemData::Hj { .. } => "hj",
    }
}

fn wrong_kind(cmd: &str, want: &str, pf: &ProblemFile) -> Error {
    Error::Usage(format!(
        "`{cmd}` needs problem type {want}, but the file declares type = \"{}\"",
        kind_name(&pf.problem)
    ))
}

fn eikonal_data<'a>(cmd: &str, pf: &'a ProblemFile) -> Result<&'a EikonalData> {
    match &pf.problem {
        ProblemData::Eikonal(d) => Ok(d),
        _ => Err(wrong_kind(cmd, "eikonal", pf)),
    }
}

/// Hamiltonian and boundary data; eikonal files map to `|p|^2 - f^2`.
fn hamiltonian(cmd: &str, pf: &ProblemFile) -> Result<(HamiltonianSpec, Vec<f64>)> {
    match &pf.problem {
        ProblemData::Eikonal(d) => Ok((eikonal2(&pf.network, d.density.squared()), d.boundary.clone())),
        ProblemData::Hj { spec, boundary } => Ok((spec.clone(), boundary.clone())),
        ProblemData::Linear(_) => Err(wrong_kind(cmd, "eikonal or hj", pf)),
    }
}

fn validate(file: &Path) -> Result<()> {
    let pf = parse_problem_file(file)?;
    let net = &pf.network;
    let actions: Vec<String> = net
        .splits()
        .iter()
        .map(|s| format!("split boundary vertex `{}` into {}", s.original, s.copies.join(", ")))
        .collect();
    for a in &actions {
        eprintln!("{a}");
    }
    let report = json!({
        "file": file.display().to_string(),
        "problem": kind_name(&pf.problem),
        "vertices": net.vertex_count(),
        "edges": net.edge_count(),
        "boundary_vertices": net.boundary_vertices().count(),
        "transition_vertices": net.transition_vertices().count(),
        "unknowns": pf.grid.unknowns(),
        "max_spacing": pf.grid.max_spacing(),
        "normalization": actions,
        "defaults": pf.defaults,
    });
    print_stdout(&serde_json::to_string_pretty(&report).expect("reports serialize"));
    Ok(())
}

fn oracle(file: &Path, out: Option<&Path>) -> Result<()> {
    let pf = parse_problem_file(file)?;
    let data = eikonal_data("oracle", &pf)?;
    let d = weighted_boundary_distance_with(&pf.grid, &data.density, &data.boundary, exec())?;
    let res = eikonal_residual(&d, &data.density);
    let report = json!({
        "command": "oracle",
        "sup_u": d.u.sup_norm(),
        "eikonal_residual": res,
        "density_floor": DENSITY_FLOOR,
        "defaults": pf.defaults,
    });
    emit(out, &report, |w| write_solution_csv(w, &d.u, "u", None))
}

fn solve_linear_cmd(file: &Path, out: Option<&Path>) -> Result<()> {
    let pf = parse_problem_file(file)?;
    let ProblemData::Linear(coeffs) = &pf.problem else {
        return Err(wrong_kind("solve-linear", "linear", &pf));
    };
    let sys = assemble_linear(&pf.grid, coeffs)?;
    let (u, solve) = solve_linear_with(&sys, exec())?;
    let certificate = if max_principle_applies(&pf, coeffs) {
        Some(check_discrete_max_principle(&u, &sys)?)
    } else {
        None
    };
    let report = json!({
        "command": "solve-linear",
        "solve": solve,
        "max_principle": certificate,
        "defaults": pf.defaults,
    });
    emit(out, &report, |w| write_solution_csv(w, &u, "u", None))
}

/// The certificate is only meaningful for `c >= 0` and `g <= 0` at every node.
fn max_principle_applies(pf: &ProblemFile, coeffs: &LinearCoefficients) -> bool {
    let grid = &pf.grid;
    let net = &pf.network;
    net.edge_ids().all(|e| {
        (0..=grid.intervals(e)).all(|k| {
            let y = grid.position(e, k);
            coeffs.c.eval(net, e, y) >= 0.0 && coeffs.g.eval(net, e, y) <= 0.0
        })
    })
}

fn untrusted_warning(eps: f64, h: f64) {
    eprintln!(
        "warning: eps = {eps} is below 5 h = {}; the discrete solution may not resolve the viscous layer",
        5.0 * h
    );
}

fn solve_eikonal(file: &Path, eps: f64, out: Option<&Path>) -> Result<()> {
    let pf = parse_problem_file(file)?;
    let data = eikonal_data("solve-eikonal", &pf)?;
    let (u, rep) = solve_eikonal_log_with(&pf.grid, data, eps, exec())?;
    // the report already carries the trust warning
    for w in &rep.warnings {
        eprintln!("warning: {w}");
    }
    let oracle = weighted_boundary_distance_with(&pf.grid, &data.density, &data.boundary, exec())?;
    let report = json!({
        "command": "solve-eikonal",
        "report": rep,
        "err_vs_oracle": u.sup_distance(&oracle.u),
        "defaults": pf.defaults,
    });
    emit(out, &report, |w| write_solution_csv(w, &u, "u_eps", Some(&oracle.u)))
}

fn solve_hj(file: &Path, eps: f64, out: Option<&Path>) -> Result<()> {
    let pf = parse_problem_file(file)?;
    let (spec, boundary) = hamiltonian("solve-hj", &pf)?;
    let oracle = match &pf.problem {
        ProblemData::Eikonal(d) => Some(weighted_boundary_distance_with(&pf.grid, &d.density, &d.boundary, exec())?.u),
        _ => None,
    };
    let init = oracle.clone().unwrap_or_else(|| GridFunction::zeros(pf.grid.clone()));
    let mut newton = pf.newton;
    newton.exec = exec();
    let (u, rep) = solve_semilinear_newton(&pf.grid, &spec, &boundary, eps, &init, &newton)?;
    let h = pf.grid.max_spacing();
    let trusted = eps >= 5.0 * h;
    if !trusted {
        untrusted_warning(eps, h);
    }
    let report = json!({
        "command": "solve-hj",
        "hamiltonian": spec.name,
        "eps": eps,
        "trusted": trusted,
        "newton": rep,
        "kirchhoff_residual": u.kirchhoff_residual(),
        "err_vs_oracle": oracle.as_ref().map(|o| u.sup_distance(o)),
        "defaults": pf.defaults,
    });
    emit(out, &report, |w| write_solution_csv(w, &u, "u_eps", oracle.as_ref()))
}

fn sweep(file: &Path, out_table: Option<&Path>, out_solutions: Option<&Path>) -> Result<()> {
    let pf = parse_problem_file(file)?;
    let problem = match &pf.problem {
        ProblemData::Eikonal(d) => SweepProblem::Eikonal(d.clone()),
        ProblemData::Hj { spec, boundary } => SweepProblem::Hamiltonian {
            spec: spec.clone(),
            boundary: boundary.clone(),
        },
        ProblemData::Linear(_) => return Err(wrong_kind("sweep", "eikonal or hj", &pf)),
    };
    let mut newton = pf.newton;
    newton.exec = exec();
    let opts = SweepOptions {
        newton,
        keep_solutions: out_solutions.is_some(),
        ..Default::default()
    };
    let rep = run_sweep(&pf.grid, &problem, &pf.sweep, &opts)?;
    for w in &rep.warnings {
        eprintln!("warning: {w}");
    }

    let mut files = Vec::new();
    if let Some(dir) = out_solutions {
        std::fs::create_dir_all(dir).map_err(io_error(dir))?;
        for (k, (entry, u)) in rep.entries.iter().zip(&rep.solutions).enumerate() {
            let path = dir.join(format!("u_eps_{k:02}.csv"));
            let file = File::create(&path).map_err(io_error(&path))?;
            let mut w = BufWriter::new(file);
            write_solution_csv(&mut w, u, "u_eps", rep.oracle.as_ref())?;
            w.flush().map_err(io_error(&path))?;
            files.push(json!({ "eps": entry.eps, "path": path.display().to_string() }));
        }
    }
    let report = json!({
        "command": "sweep",
        "schedule": pf.sweep,
        "report": rep,
        "solution_files": files,
        "defaults": pf.defaults,
    });
    emit(out_table, &report, |w| write_sweep_table(w, &rep))?;
    match &rep.failed_at {
        Some(f) => {
            eprintln!("error: sweep stopped at eps = {}: {}", f.eps, f.message);
            std::process::exit(f.exit_code);
        }
        None => Ok(()),
    }
}

fn mc_check(file: &Path, points: &str, cfg: McConfig, out: Option<&Path>) -> Result<()> {
    let pf = parse_problem_file(file)?;
    let ProblemData::Linear(coeffs) = &pf.problem else {
        return Err(wrong_kind("mc-check", "linear", &pf));
    };
    let points = parse_points(points, &pf.network)?;
    if points.is_empty() {
        return Err(Error::Usage("--points lists no probe points".into()));
    }
    let (pde, _) = solve_linear_with(&assemble_linear(&pf.grid, coeffs)?, exec())?;
    let est = estimate(&pf.network, coeffs, &points, &cfg, exec())?;
    let rows = compare(&est, |e, y| pde.sample(e, y))?;
    let report = json!({
        "command": "mc-check",
        "config": cfg,
        "comparisons": rows,
        "all_pass": rows.iter().all(|r| r.pass),
        "defaults": pf.defaults,
    });
    emit(out, &report, |w| write_mc_table(w, &rows, &pf.network))
}

fn validate_h(file: &Path) -> Result<()> {
    let pf = parse_problem_file(file)?;
    let (spec, _) = hamiltonian("validate-hamiltonian", &pf)?;
    let rep = validate_hamiltonian(&spec, &pf.network, &ProbeConfig::default());
    for c in rep.violations() {
        eprintln!("violation: {c:?}");
    }
    let report = json!({
        "command": "validate-hamiltonian",
        "clean": rep.is_clean(),
        "report": rep,
        "defaults": pf.defaults,
    });
    print_stdout(&serde_json::to_string_pretty(&report).expect("reports serialize"));
    Ok(())
}

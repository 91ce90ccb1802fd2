//! Subcommand implementations: flag validation, integration loops, and
//! table emission. Every function returns the process exit code.

use crate::format::{
    fmt_sci, study_cells, write_csv, write_markdown, STUDY_COLUMNS, TRAJECTORY_DIGITS,
};
use crate::{ConvergeArgs, ScanArgs, SchemeArgs, SolveArgs, TableFormat};
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use stiffstep::harness::{
    convergence_study, effective_dt, reference_solution, HarnessError, RefMode, SolverKind,
    StudyConfig,
};
use stiffstep::model::OdeSystem;
use stiffstep::order_conditions::{A_STABLE_C_MAX, A_STABLE_C_MIN, DEFAULT_C};
use stiffstep::problems::{by_name, BenchmarkProblem, PROBLEM_NAMES};
use stiffstep::stability::{scan_a_stability, ScanGrid};
use stiffstep::tsfo::{step_explicit_tsfo, step_implicit_tsfo, NewtonConfig, SolverError};
use stiffstep::baselines::{step_irk4_gauss, step_rk4_explicit};
use stiffstep::SchemeParams;

const EXIT_OK: i32 = 0;
const EXIT_CONFIG: i32 = 1;
const EXIT_RUNTIME: i32 = 2;

fn config_error(message: impl std::fmt::Display) -> i32 {
    eprintln!("error: {message}");
    EXIT_CONFIG
}

fn runtime_error(message: impl std::fmt::Display) -> i32 {
    eprintln!("error: {message}");
    EXIT_RUNTIME
}

fn resolve_problem(name: &str) -> Result<BenchmarkProblem<f64>, i32> {
    by_name::<f64>(name).ok_or_else(|| {
        config_error(format!(
            "--problem: unknown problem '{name}' (expected one of {})",
            PROBLEM_NAMES.join(", ")
        ))
    })
}

fn resolve_solver(name: &str) -> Result<SolverKind, i32> {
    SolverKind::from_name(name).ok_or_else(|| {
        config_error(format!(
            "--solver: unknown solver '{name}' (expected one of tsfo-implicit, \
             tsfo-explicit, rk4-explicit, irk4-gauss)"
        ))
    })
}

fn positive_flag(value: f64, flag: &str) -> Result<f64, i32> {
    if value.is_finite() && value > 0.0 {
        Ok(value)
    } else {
        Err(config_error(format!("{flag} must be a positive number, got {value}")))
    }
}

/// Builds scheme parameters, enforcing the A-stable guard on `--c-param`
/// unless `--allow-unstable-c` is set.
fn resolve_scheme(args: &SchemeArgs) -> Result<SchemeParams, i32> {
    match SchemeParams::a_stable(args.c_param) {
        Ok(p) => Ok(p),
        Err(_) if args.allow_unstable_c => Ok(SchemeParams::general(args.c_param, -args.c_param)),
        Err(_) => Err(config_error(format!(
            "--c-param {} is outside the A-stable interval [{A_STABLE_C_MIN}, \
             {A_STABLE_C_MAX}]; pass --allow-unstable-c to run anyway",
            args.c_param
        ))),
    }
}

fn newton_config(args: &SchemeArgs) -> NewtonConfig {
    NewtonConfig {
        atol: args.newton_atol,
        rtol: args.newton_rtol,
        max_iter: args.newton_maxit,
    }
}

/// Cache directory precedence: the STIFFSTEP_CACHE_DIR environment
/// variable, then `--cache-dir`, then a per-user default.
fn resolve_cache_dir(flag: &Option<PathBuf>) -> PathBuf {
    if let Ok(env_dir) = std::env::var("STIFFSTEP_CACHE_DIR") {
        if !env_dir.is_empty() {
            return PathBuf::from(env_dir);
        }
    }
    if let Some(dir) = flag {
        return dir.clone();
    }
    match std::env::var("HOME") {
        Ok(home) if !home.is_empty() => PathBuf::from(home).join(".cache").join("stiffstep"),
        _ => std::env::temp_dir().join("stiffstep-cache"),
    }
}

fn open_out(path: &Option<PathBuf>) -> Result<Box<dyn Write>, i32> {
    match path {
        Some(p) => {
            let file = std::fs::File::create(p).map_err(|e| {
                config_error(format!("--out: cannot create {}: {e}", p.display()))
            })?;
            Ok(Box::new(BufWriter::new(file)))
        }
        None => Ok(Box::new(BufWriter::new(io::stdout()))),
    }
}

fn advance(
    solver: SolverKind,
    sys: &dyn OdeSystem<f64>,
    u: &[f64],
    dt: f64,
    params: &SchemeParams,
    newton: &NewtonConfig,
) -> Result<Vec<f64>, SolverError> {
    match solver {
        SolverKind::TsfoImplicit => {
            step_implicit_tsfo(sys, u, dt, params, newton).map(|(next, _)| next)
        }
        SolverKind::TsfoExplicit => step_explicit_tsfo(sys, u, dt),
        SolverKind::Rk4Explicit => step_rk4_explicit(sys, u, dt),
        SolverKind::Irk4Gauss => step_irk4_gauss(sys, u, dt, newton).map(|(next, _)| next),
    }
}

/// `solve`: one fixed-step run, trajectory CSV with a `t = 0` row.
pub fn cmd_solve(args: &SolveArgs) -> i32 {
    let problem = match resolve_problem(&args.problem) {
        Ok(p) => p,
        Err(code) => return code,
    };
    let solver = match resolve_solver(&args.solver) {
        Ok(s) => s,
        Err(code) => return code,
    };
    let params = match resolve_scheme(&args.scheme) {
        Ok(p) => p,
        Err(code) => return code,
    };
    let newton = newton_config(&args.scheme);
    let t_end = args.tend.unwrap_or_else(|| problem.default_t_end());
    if let Err(code) = positive_flag(t_end, "--tend") {
        return code;
    }
    if let Err(code) = positive_flag(args.dt0, "--dt0") {
        return code;
    }
    let (dt, n_steps) = effective_dt(t_end, args.dt0);

    let mut out = match open_out(&args.out) {
        Ok(w) => w,
        Err(code) => return code,
    };
    let header: Vec<String> = std::iter::once("t".to_string())
        .chain((1..=problem.dim()).map(|i| format!("u{i}")))
        .collect();
    let write_row = |out: &mut dyn Write, t: f64, u: &[f64]| -> io::Result<()> {
        let mut cells = Vec::with_capacity(u.len() + 1);
        cells.push(fmt_sci(t, TRAJECTORY_DIGITS));
        cells.extend(u.iter().map(|&x| fmt_sci(x, TRAJECTORY_DIGITS)));
        writeln!(out, "{}", cells.join(","))
    };

    let mut u = problem.u0.clone();
    let io_failed = |e: io::Error| runtime_error(format!("writing trajectory: {e}"));
    if let Err(e) = writeln!(out, "{}", header.join(",")) {
        return io_failed(e);
    }
    if let Err(e) = write_row(out.as_mut(), 0.0, &u) {
        return io_failed(e);
    }
    for step in 0..n_steps {
        match advance(solver, problem.system.as_ref(), &u, dt, &params, &newton) {
            Ok(next) => u = next,
            Err(solver_err) => {
                // Keep everything integrated so far, then fail loudly.
                let _ = out.flush();
                return runtime_error(format!(
                    "{} on {} at step {} (t = {:.6e}, dt = {:.6e}): {solver_err}",
                    solver.name(),
                    problem.name,
                    step + 1,
                    (step + 1) as f64 * dt,
                    dt
                ));
            }
        }
        if let Err(e) = write_row(out.as_mut(), (step + 1) as f64 * dt, &u) {
            return io_failed(e);
        }
    }
    if let Err(e) = out.flush() {
        return io_failed(e);
    }
    EXIT_OK
}

fn parse_ref_mode(s: &str) -> Option<RefMode> {
    match s {
        "auto" => Some(RefMode::Auto),
        "exact" => Some(RefMode::Exact),
        "rk4-refined" => Some(RefMode::Rk4Refined),
        _ => s
            .strip_prefix("file:")
            .filter(|p| !p.is_empty())
            .map(|p| RefMode::File(PathBuf::from(p))),
    }
}

/// `converge`: reference lookup, halved-step study, table emission.
pub fn cmd_converge(args: &ConvergeArgs) -> i32 {
    let problem = match resolve_problem(&args.problem) {
        Ok(p) => p,
        Err(code) => return code,
    };
    let solver = match resolve_solver(&args.solver) {
        Ok(s) => s,
        Err(code) => return code,
    };
    let params = match resolve_scheme(&args.scheme) {
        Ok(p) => p,
        Err(code) => return code,
    };
    let newton = newton_config(&args.scheme);
    let t_end = args.tend.unwrap_or_else(|| problem.default_t_end());
    if let Err(code) = positive_flag(t_end, "--tend") {
        return code;
    }
    if let Err(code) = positive_flag(args.dt0, "--dt0") {
        return code;
    }
    if args.levels == 0 {
        return config_error("--levels must be at least 1");
    }
    let Some(ref_mode) = parse_ref_mode(&args.ref_mode) else {
        return config_error(format!(
            "--ref-mode: '{}' is not auto, exact, rk4-refined, or file:PATH",
            args.ref_mode
        ));
    };
    let cache_dir = resolve_cache_dir(&args.cache_dir);

    let reference = match reference_solution(&problem, t_end, &ref_mode, &cache_dir) {
        Ok(r) => r,
        Err(e @ HarnessError::NoExactSolution { .. }) => {
            return config_error(format!("--ref-mode exact: {e}"));
        }
        Err(e @ HarnessError::CacheCorrupt { .. }) => {
            return config_error(format!("--ref-mode: {e}"));
        }
        Err(e) => return runtime_error(e),
    };

    let cfg = StudyConfig {
        solver,
        t_end,
        dt0: args.dt0,
        levels: args.levels,
        params,
        newton,
    };
    let rows = convergence_study(&problem, &cfg, &reference.values);

    let mut out = match open_out(&args.out) {
        Ok(w) => w,
        Err(code) => return code,
    };
    let cells = study_cells(&rows);
    let written = match args.format {
        TableFormat::Csv => write_csv(out.as_mut(), &STUDY_COLUMNS, &cells),
        TableFormat::Md => write_markdown(out.as_mut(), &STUDY_COLUMNS, &cells),
    }
    .and_then(|_| out.flush());
    if let Err(e) = written {
        return runtime_error(format!("writing table: {e}"));
    }

    let failures: Vec<&_> = rows.iter().filter(|r| r.failure.is_some()).collect();
    if failures.is_empty() {
        EXIT_OK
    } else {
        for row in &failures {
            eprintln!(
                "error: row dt = {}: {}",
                fmt_sci(row.dt, 8),
                row.failure.as_deref().unwrap_or("failed")
            );
        }
        EXIT_RUNTIME
    }
}

/// `scan-stability`: damping sweep CSV plus a human-readable summary.
pub fn cmd_scan_stability(args: &ScanArgs) -> i32 {
    for (value, flag) in [
        (args.cmin, "--cmin"),
        (args.cmax, "--cmax"),
        (args.ymin, "--ymin"),
        (args.ymax, "--ymax"),
    ] {
        if !value.is_finite() {
            return config_error(format!("{flag} must be finite, got {value}"));
        }
    }
    if args.cmin > args.cmax {
        return config_error(format!(
            "--cmin ({}) must not exceed --cmax ({})",
            args.cmin, args.cmax
        ));
    }
    if args.nc == 0 {
        return config_error("--nc must be at least 1");
    }
    if !(args.ymin > 0.0) {
        return config_error(format!("--ymin must be positive, got {}", args.ymin));
    }
    if args.ymin >= args.ymax {
        return config_error(format!(
            "--ymin ({}) must be below --ymax ({})",
            args.ymin, args.ymax
        ));
    }
    if args.ny < 2 {
        return config_error("--ny must be at least 2");
    }

    let grid = ScanGrid {
        c_min: args.cmin,
        c_max: args.cmax,
        n_c: args.nc,
        y_min: args.ymin,
        y_max: args.ymax,
        n_y: args.ny,
    };
    let result = scan_a_stability(&grid);

    let mut out = match open_out(&args.out) {
        Ok(w) => w,
        Err(code) => return code,
    };
    let cells: Vec<Vec<String>> = result
        .rows
        .iter()
        .map(|r| {
            vec![
                fmt_sci(r.c, 12),
                fmt_sci(r.max_abs_g, 12),
                r.valid.to_string(),
            ]
        })
        .collect();
    if let Err(e) = write_csv(out.as_mut(), &["c", "max_abs_g", "valid"], &cells)
        .and_then(|_| out.flush())
    {
        return runtime_error(format!("writing scan table: {e}"));
    }

    match result.valid_interval {
        Some((lo, hi)) => {
            println!(
                "A-stable interval: C in [{}, {}]",
                fmt_sci(lo, 8),
                fmt_sci(hi, 8)
            );
            let inside = (lo..=hi).contains(&DEFAULT_C);
            println!(
                "default C = {} is {} this interval",
                fmt_sci(DEFAULT_C, 8),
                if inside { "inside" } else { "outside" }
            );
        }
        None => {
            println!("A-stable interval: none found on this grid");
            eprintln!("warning: no A-stable damping parameter found; widen or refine the grid");
        }
    }
    EXIT_OK
}

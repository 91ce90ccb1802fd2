//! Convergence-study driver: integer-step time grids, terminal error norms,
//! extrapolation orders, and cached reference solutions.
//!
//! A study runs a fixed-step solver at a ladder of halved step sizes, always
//! landing on `t_end` exactly (see [`effective_dt`]), measures the terminal
//! error of each run against an exact or reference solution, and chains
//! observed convergence orders between consecutive rows. Reference solutions
//! for problems without a closed form come from a highly refined explicit
//! RK4 run (requested step 1e-6) and are persisted to a human-readable,
//! checksummed text cache so repeat studies skip the expensive run.

use crate::baselines::{integrate_rk4_compensated, step_irk4_gauss, step_rk4_explicit, IntegrateError};
use crate::linalg::{norm_l2, norm_linf};
use crate::model::OdeSystem;
use crate::problems::BenchmarkProblem;
use crate::scalar::Scalar;
use crate::tsfo::{step_explicit_tsfo, step_implicit_tsfo, NewtonConfig, SolverError};
use crate::SchemeParams;
use rayon::prelude::*;
use sha2::{Digest, Sha256};
use std::fmt;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};

/// Requested reference step size for problems without an exact solution.
pub const REFERENCE_DT: f64 = 1e-6;

/// Snaps a requested step size onto the integer-step grid: the run takes
/// `n` equal steps of `t_end / n`, with `n` the number of whole requested
/// steps that fit into `[0, t_end]` (at least one). A relative grace of
/// 1e-9 keeps quotients that are integral up to rounding (e.g. `10 / 1e-2`)
/// from being knocked down a step.
///
/// Returns `(dt, n_steps)` with `dt · n_steps = t_end` exactly in real
/// arithmetic.
pub fn effective_dt(t_end: f64, dt_requested: f64) -> (f64, usize) {
    assert!(t_end > 0.0 && dt_requested > 0.0, "positive times required");
    let q = t_end / dt_requested;
    let n = (q * (1.0 + 1e-9)).floor().max(1.0) as usize;
    (t_end / n as f64, n)
}

/// Euclidean and max norms of the componentwise difference at terminal
/// time, reported in `f64` regardless of the working scalar.
pub fn terminal_error<S: Scalar>(u_num: &[S], u_ref: &[S]) -> (f64, f64) {
    assert_eq!(u_num.len(), u_ref.len(), "dimension mismatch");
    let diff: Vec<S> = u_num.iter().zip(u_ref).map(|(&a, &b)| a - b).collect();
    (norm_l2(&diff).to_f64(), norm_linf(&diff).to_f64())
}

/// Observed convergence order `ln(err_coarse/err_fine) / ln(dt_ratio)`.
///
/// Returns `None` when either error is zero or non-finite, when their
/// quotient is not positive, or when `dt_ratio` is not above one — all the
/// cases where the extrapolation formula is meaningless.
pub fn convergence_order(err_coarse: f64, err_fine: f64, dt_ratio: f64) -> Option<f64> {
    if !(dt_ratio > 1.0) || !dt_ratio.is_finite() {
        return None;
    }
    if !err_coarse.is_finite() || !err_fine.is_finite() || err_coarse == 0.0 || err_fine == 0.0 {
        return None;
    }
    let quotient = err_coarse / err_fine;
    if quotient <= 0.0 {
        return None;
    }
    Some(quotient.ln() / dt_ratio.ln())
}

// ---------------------------------------------------------------------------
// Reference solutions and their text cache
// ---------------------------------------------------------------------------

/// Where a reference solution's values came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Provenance {
    /// Evaluated from the problem's closed-form solution.
    Exact,
    /// Computed by the refined explicit RK4 run.
    Rk4Refined,
    /// Loaded from a user-supplied reference file.
    File,
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Provenance::Exact => "exact",
            Provenance::Rk4Refined => "rk4-refined",
            Provenance::File => "file",
        })
    }
}

/// Terminal reference state for one `(problem, t_end)` pair.
#[derive(Clone, Debug)]
pub struct ReferenceSolution {
    pub problem_name: String,
    pub t_end: f64,
    /// Actual reference step (zero when the values are exact and no
    /// integration took place).
    pub dt_ref: f64,
    pub values: Vec<f64>,
    pub provenance: Provenance,
}

/// How [`reference_solution`] obtains its values.
#[derive(Clone, Debug, PartialEq)]
pub enum RefMode {
    /// Exact solution when the problem has one, refined RK4 otherwise.
    Auto,
    /// Require the closed form; error if the problem has none.
    Exact,
    /// Force the refined RK4 run even when a closed form exists.
    Rk4Refined,
    /// Load a previously written reference file verbatim.
    File(PathBuf),
}

/// Failures of the reference pipeline.
#[derive(Debug)]
pub enum HarnessError {
    /// The exact-solution mode was requested for a problem without one.
    NoExactSolution { problem: String },
    /// A reference file failed validation (checksum, structure, or it
    /// describes a different problem than requested).
    CacheCorrupt { path: PathBuf, detail: String },
    /// The refined reference run itself failed (overflow at some step).
    ReferenceRun(IntegrateError),
    /// Filesystem trouble around the cache.
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

impl fmt::Display for HarnessError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            HarnessError::NoExactSolution { problem } => {
                write!(f, "problem '{problem}' has no exact solution")
            }
            HarnessError::CacheCorrupt { path, detail } => {
                write!(f, "reference file {} is invalid: {detail}", path.display())
            }
            HarnessError::ReferenceRun(e) => write!(f, "reference run failed: {e}"),
            HarnessError::Io { path, source } => {
                write!(f, "io error on {}: {source}", path.display())
            }
        }
    }
}

impl std::error::Error for HarnessError {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        match self {
            HarnessError::ReferenceRun(e) => Some(e),
            HarnessError::Io { source, .. } => Some(source),
            _ => None,
        }
    }
}

const REF_FORMAT_TAG: &str = "stiffstep-ref-1";

/// Cache file path for a refined reference, keyed by problem name, end
/// time, and the requested reference step.
pub fn reference_cache_path(cache_dir: &Path, problem_name: &str, t_end: f64) -> PathBuf {
    cache_dir.join(format!("{problem_name}_{t_end}_{REFERENCE_DT:e}.ref"))
}

fn reference_body(r: &ReferenceSolution) -> String {
    use std::fmt::Write as _;
    let mut s = String::new();
    writeln!(s, "format {REF_FORMAT_TAG}").unwrap();
    writeln!(s, "problem {}", r.problem_name).unwrap();
    writeln!(s, "t_end {:e}", r.t_end).unwrap();
    writeln!(s, "dt_ref {:e}", r.dt_ref).unwrap();
    writeln!(s, "provenance {}", r.provenance).unwrap();
    writeln!(s, "precision f64").unwrap();
    writeln!(s, "dim {}", r.values.len()).unwrap();
    for v in &r.values {
        writeln!(s, "v {v:e}").unwrap();
    }
    s
}

fn checksum_hex(body: &str) -> String {
    let digest = Sha256::digest(body.as_bytes());
    let mut hex = String::with_capacity(64);
    use std::fmt::Write as _;
    for byte in digest {
        write!(hex, "{byte:02x}").unwrap();
    }
    hex
}

/// Serializes a reference to its checksummed text form and writes it
/// atomically (unique temporary file, then rename).
pub fn write_reference_file(path: &Path, r: &ReferenceSolution) -> std::io::Result<()> {
    static TMP_COUNTER: AtomicU64 = AtomicU64::new(0);
    let body = reference_body(r);
    let full = format!("{body}checksum {}\n", checksum_hex(&body));
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            std::fs::create_dir_all(dir)?;
        }
    }
    let tmp = path.with_extension(format!(
        "ref.tmp.{}.{}",
        std::process::id(),
        TMP_COUNTER.fetch_add(1, Ordering::Relaxed)
    ));
    std::fs::write(&tmp, full)?;
    std::fs::rename(&tmp, path)
}

fn corrupt(path: &Path, detail: impl Into<String>) -> HarnessError {
    HarnessError::CacheCorrupt {
        path: path.to_path_buf(),
        detail: detail.into(),
    }
}

/// Reads and validates a reference file written by [`write_reference_file`].
pub fn read_reference_file(path: &Path) -> Result<ReferenceSolution, HarnessError> {
    let raw = std::fs::read_to_string(path).map_err(|source| HarnessError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    // The checksum line covers everything before it.
    let split = raw
        .rfind("\nchecksum ")
        .map(|i| i + 1)
        .ok_or_else(|| corrupt(path, "missing checksum line"))?;
    let (body, checksum_line) = raw.split_at(split);
    let declared = checksum_line
        .strip_prefix("checksum ")
        .expect("split at checksum prefix")
        .trim();
    let actual = checksum_hex(body);
    if declared != actual {
        return Err(corrupt(
            path,
            format!("checksum mismatch (declared {declared}, content hashes to {actual})"),
        ));
    }

    let mut problem_name: Option<&str> = None;
    let mut t_end: Option<f64> = None;
    let mut dt_ref: Option<f64> = None;
    let mut provenance: Option<Provenance> = None;
    let mut dim: Option<usize> = None;
    let mut values: Vec<f64> = Vec::new();
    let parse_f64 = |field: &str, text: &str| -> Result<f64, HarnessError> {
        text.trim()
            .parse::<f64>()
            .map_err(|e| corrupt(path, format!("bad {field} value '{text}': {e}")))
    };
    for line in body.lines() {
        if let Some(tag) = line.strip_prefix("format ") {
            if tag.trim() != REF_FORMAT_TAG {
                return Err(corrupt(path, format!("unknown format tag '{tag}'")));
            }
        } else if let Some(v) = line.strip_prefix("problem ") {
            problem_name = Some(v.trim());
        } else if let Some(v) = line.strip_prefix("t_end ") {
            t_end = Some(parse_f64("t_end", v)?);
        } else if let Some(v) = line.strip_prefix("dt_ref ") {
            dt_ref = Some(parse_f64("dt_ref", v)?);
        } else if let Some(v) = line.strip_prefix("provenance ") {
            provenance = Some(match v.trim() {
                "exact" => Provenance::Exact,
                "rk4-refined" => Provenance::Rk4Refined,
                "file" => Provenance::File,
                other => return Err(corrupt(path, format!("unknown provenance '{other}'"))),
            });
        } else if let Some(v) = line.strip_prefix("precision ") {
            if v.trim() != "f64" {
                return Err(corrupt(path, format!("unsupported precision '{}'", v.trim())));
            }
        } else if let Some(v) = line.strip_prefix("dim ") {
            dim = Some(
                v.trim()
                    .parse::<usize>()
                    .map_err(|e| corrupt(path, format!("bad dim '{v}': {e}")))?,
            );
        } else if let Some(v) = line.strip_prefix("v ") {
            values.push(parse_f64("state", v)?);
        } else if !line.trim().is_empty() {
            return Err(corrupt(path, format!("unrecognized line '{line}'")));
        }
    }
    let problem_name = problem_name.ok_or_else(|| corrupt(path, "missing problem line"))?;
    let t_end = t_end.ok_or_else(|| corrupt(path, "missing t_end line"))?;
    let dt_ref = dt_ref.ok_or_else(|| corrupt(path, "missing dt_ref line"))?;
    let provenance = provenance.ok_or_else(|| corrupt(path, "missing provenance line"))?;
    let dim = dim.ok_or_else(|| corrupt(path, "missing dim line"))?;
    if values.len() != dim {
        return Err(corrupt(
            path,
            format!("dim says {dim} but {} values present", values.len()),
        ));
    }
    Ok(ReferenceSolution {
        problem_name: problem_name.to_string(),
        t_end,
        dt_ref,
        values,
        provenance,
    })
}

/// Evaluates the problem's closed form at `t_end` in the working scalar.
pub fn exact_terminal<S: Scalar>(problem: &BenchmarkProblem<S>, t_end: f64) -> Option<Vec<S>> {
    problem
        .exact
        .as_ref()
        .map(|f| f(S::from_f64(t_end)))
}

/// Obtains the terminal reference state for `(problem, t_end)`.
///
/// * Exact path: evaluates the closed form; nothing touches the disk.
/// * Refined path: runs compensated explicit RK4 at the requested step
///   [`REFERENCE_DT`] (snapped by [`effective_dt`]) and persists the result
///   under `cache_dir`; later calls load the cached values bit-identically.
///   A cache file that fails validation is recomputed and overwritten.
/// * File path: loads the named file, requiring that it describe the same
///   problem and end time.
pub fn reference_solution(
    problem: &BenchmarkProblem<f64>,
    t_end: f64,
    mode: &RefMode,
    cache_dir: &Path,
) -> Result<ReferenceSolution, HarnessError> {
    match mode {
        RefMode::Exact => exact_reference(problem, t_end),
        RefMode::Auto => {
            if problem.exact.is_some() {
                exact_reference(problem, t_end)
            } else {
                refined_reference(problem, t_end, cache_dir)
            }
        }
        RefMode::Rk4Refined => refined_reference(problem, t_end, cache_dir),
        RefMode::File(path) => {
            let r = read_reference_file(path)?;
            if r.problem_name != problem.name {
                return Err(corrupt(
                    path,
                    format!(
                        "file is for problem '{}', requested '{}'",
                        r.problem_name, problem.name
                    ),
                ));
            }
            if (r.t_end - t_end).abs() > 1e-12 * t_end.abs().max(1.0) {
                return Err(corrupt(
                    path,
                    format!("file is for t_end {}, requested {}", r.t_end, t_end),
                ));
            }
            if r.values.len() != problem.dim() {
                return Err(corrupt(
                    path,
                    format!(
                        "file holds {} components, problem has {}",
                        r.values.len(),
                        problem.dim()
                    ),
                ));
            }
            Ok(ReferenceSolution {
                provenance: Provenance::File,
                ..r
            })
        }
    }
}

fn exact_reference(
    problem: &BenchmarkProblem<f64>,
    t_end: f64,
) -> Result<ReferenceSolution, HarnessError> {
    let values = exact_terminal(problem, t_end).ok_or_else(|| HarnessError::NoExactSolution {
        problem: problem.name.to_string(),
    })?;
    Ok(ReferenceSolution {
        problem_name: problem.name.to_string(),
        t_end,
        dt_ref: 0.0,
        values,
        provenance: Provenance::Exact,
    })
}

fn refined_reference(
    problem: &BenchmarkProblem<f64>,
    t_end: f64,
    cache_dir: &Path,
) -> Result<ReferenceSolution, HarnessError> {
    let (dt_ref, n_steps) = effective_dt(t_end, REFERENCE_DT);
    let path = reference_cache_path(cache_dir, problem.name, t_end);
    if path.exists() {
        match read_reference_file(&path) {
            Ok(r)
                if r.problem_name == problem.name
                    && (r.t_end - t_end).abs() <= 1e-12 * t_end.abs().max(1.0)
                    && r.values.len() == problem.dim()
                    && r.provenance == Provenance::Rk4Refined =>
            {
                return Ok(r);
            }
            // Wrong key or failed validation: fall through and recompute.
            Ok(_) | Err(HarnessError::CacheCorrupt { .. }) | Err(HarnessError::Io { .. }) => {}
            Err(other) => return Err(other),
        }
    }
    let values = integrate_rk4_compensated(problem.system.as_ref(), &problem.u0, t_end, n_steps)
        .map_err(HarnessError::ReferenceRun)?;
    let r = ReferenceSolution {
        problem_name: problem.name.to_string(),
        t_end,
        dt_ref,
        values,
        provenance: Provenance::Rk4Refined,
    };
    write_reference_file(&path, &r).map_err(|source| HarnessError::Io {
        path: path.clone(),
        source,
    })?;
    Ok(r)
}

// ---------------------------------------------------------------------------
// Convergence studies
// ---------------------------------------------------------------------------

/// Time steppers a study can drive.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SolverKind {
    TsfoImplicit,
    TsfoExplicit,
    Rk4Explicit,
    Irk4Gauss,
}

impl SolverKind {
    /// CLI identifier.
    pub fn name(self) -> &'static str {
        match self {
            SolverKind::TsfoImplicit => "tsfo-implicit",
            SolverKind::TsfoExplicit => "tsfo-explicit",
            SolverKind::Rk4Explicit => "rk4-explicit",
            SolverKind::Irk4Gauss => "irk4-gauss",
        }
    }

    /// Inverse of [`SolverKind::name`].
    pub fn from_name(name: &str) -> Option<Self> {
        SOLVER_KINDS.iter().copied().find(|s| s.name() == name)
    }

    /// Whether stage solves (and hence Newton iteration counts) exist.
    pub fn is_implicit(self) -> bool {
        matches!(self, SolverKind::TsfoImplicit | SolverKind::Irk4Gauss)
    }
}

impl fmt::Display for SolverKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// All solvers, in display order.
pub const SOLVER_KINDS: [SolverKind; 4] = [
    SolverKind::TsfoImplicit,
    SolverKind::TsfoExplicit,
    SolverKind::Rk4Explicit,
    SolverKind::Irk4Gauss,
];

/// Everything a convergence study needs besides the problem and reference.
#[derive(Clone, Debug)]
pub struct StudyConfig {
    pub solver: SolverKind,
    pub t_end: f64,
    /// Requested step of the first row; row k requests `dt0 / 2^k`.
    pub dt0: f64,
    /// Number of rows (halvings plus one). At least 1.
    pub levels: usize,
    pub params: SchemeParams,
    pub newton: NewtonConfig,
}

/// One row of a convergence table.
#[derive(Clone, Debug)]
pub struct ConvergenceRow {
    /// Effective step actually taken (after grid snapping).
    pub dt: f64,
    pub n_steps: usize,
    /// Terminal errors; NaN when the run failed.
    pub error_l2: f64,
    pub error_linf: f64,
    /// Orders chained from the previous row over the *actual* step ratio;
    /// absent on the first row and around failed or degenerate rows.
    pub order_l2: Option<f64>,
    pub order_linf: Option<f64>,
    /// Mean corrective Newton updates per time step, all stage solves
    /// summed; zero for explicit solvers, NaN when the run failed.
    pub avg_newton_iters: f64,
    /// Failure description (`"step 17: …"`) when the run aborted.
    pub failure: Option<String>,
}

impl ConvergenceRow {
    fn failed(dt: f64, n_steps: usize, message: String) -> Self {
        ConvergenceRow {
            dt,
            n_steps,
            error_l2: f64::NAN,
            error_linf: f64::NAN,
            order_l2: None,
            order_linf: None,
            avg_newton_iters: f64::NAN,
            failure: Some(message),
        }
    }
}

fn integrate_counting<S: Scalar>(
    sys: &dyn OdeSystem<S>,
    u0: &[S],
    cfg: &StudyConfig,
    n_steps: usize,
) -> Result<(Vec<S>, f64), (usize, SolverError)> {
    // Divide in the working scalar so extended precision keeps full
    // resolution of the step.
    let dt = S::from_f64(cfg.t_end) / S::from_f64(n_steps as f64);
    let mut u = u0.to_vec();
    let mut newton_total = 0usize;
    for step in 0..n_steps {
        u = match cfg.solver {
            SolverKind::TsfoImplicit => {
                let (next, stats) = step_implicit_tsfo(sys, &u, dt, &cfg.params, &cfg.newton)
                    .map_err(|e| (step, e))?;
                newton_total += stats.stage1_iters + stats.stage2_iters;
                next
            }
            SolverKind::TsfoExplicit => step_explicit_tsfo(sys, &u, dt).map_err(|e| (step, e))?,
            SolverKind::Rk4Explicit => step_rk4_explicit(sys, &u, dt).map_err(|e| (step, e))?,
            SolverKind::Irk4Gauss => {
                let (next, iters) =
                    step_irk4_gauss(sys, &u, dt, &cfg.newton).map_err(|e| (step, e))?;
                newton_total += iters;
                next
            }
        };
    }
    Ok((u, newton_total as f64 / n_steps as f64))
}

/// Runs the study: row k integrates with requested step `dt0 / 2^k` and
/// measures terminal errors against `u_ref`. Rows run in parallel; orders
/// are chained afterwards over actual step ratios. A failed row is recorded
/// with NaN errors and its failure message, and the study continues.
pub fn convergence_study<S: Scalar>(
    problem: &BenchmarkProblem<S>,
    cfg: &StudyConfig,
    u_ref: &[S],
) -> Vec<ConvergenceRow> {
    assert!(cfg.levels >= 1, "at least one level");
    assert_eq!(u_ref.len(), problem.dim(), "reference dimension mismatch");
    let mut rows: Vec<ConvergenceRow> = (0..cfg.levels)
        .into_par_iter()
        .map(|k| {
            let dt_requested = cfg.dt0 / f64::powi(2.0, k as i32);
            let (dt, n_steps) = effective_dt(cfg.t_end, dt_requested);
            match integrate_counting(problem.system.as_ref(), &problem.u0, cfg, n_steps) {
                Ok((u, avg_newton_iters)) => {
                    let (error_l2, error_linf) = terminal_error(&u, u_ref);
                    ConvergenceRow {
                        dt,
                        n_steps,
                        error_l2,
                        error_linf,
                        order_l2: None,
                        order_linf: None,
                        avg_newton_iters,
                        failure: None,
                    }
                }
                Err((step, e)) => ConvergenceRow::failed(dt, n_steps, format!("step {step}: {e}")),
            }
        })
        .collect();
    for k in 1..rows.len() {
        let ratio = rows[k - 1].dt / rows[k].dt;
        rows[k].order_l2 = convergence_order(rows[k - 1].error_l2, rows[k].error_l2, ratio);
        rows[k].order_linf = convergence_order(rows[k - 1].error_linf, rows[k].error_linf, ratio);
    }
    rows
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::{by_name, linear_separated, robertson, van_der_pol};
    use crate::scalar::DoubleDouble;

    fn unique_temp_dir(tag: &str) -> PathBuf {
        static COUNTER: AtomicU64 = AtomicU64::new(0);
        let dir = std::env::temp_dir().join(format!(
            "stiffstep_harness_{tag}_{}_{}",
            std::process::id(),
            COUNTER.fetch_add(1, Ordering::Relaxed)
        ));
        std::fs::create_dir_all(&dir).unwrap();
        dir
    }

    fn default_study(solver: SolverKind, t_end: f64, dt0: f64, levels: usize) -> StudyConfig {
        StudyConfig {
            solver,
            t_end,
            dt0,
            levels,
            params: SchemeParams::default(),
            newton: NewtonConfig::default(),
        }
    }

    #[test]
    fn test_effective_dt_integral_and_fractional() {
        assert_eq!(effective_dt(10.0, 1.0), (1.0, 10));
        assert_eq!(effective_dt(10.0, 1e-2).1, 1000);
        let (dt, n) = effective_dt(1.0, 0.3);
        assert_eq!(n, 3);
        assert!((dt - 1.0 / 3.0).abs() <= 1e-16);
        // Steps larger than the interval clamp to a single step.
        assert_eq!(effective_dt(1.0, 3.0), (1.0, 1));
    }

    #[test]
    fn test_effective_dt_long_horizon_grid() {
        // End time 321.8122 with requested steps 0.5/2^k: whole-step counts
        // truncate the quotient 643.6244·2^k.
        let expect_n = [643usize, 1287, 2574, 5148, 10297, 20595, 41191, 82383];
        for (k, &n_expect) in expect_n.iter().enumerate() {
            let (dt, n) = effective_dt(321.8122, 0.5 / f64::powi(2.0, k as i32));
            assert_eq!(n, n_expect, "level {k}");
            assert!((dt * n as f64 - 321.8122).abs() <= 1e-12);
        }
        let (dt0, _) = effective_dt(321.8122, 0.5);
        assert!((dt0 - 0.500485536547).abs() <= 1e-12, "dt0 = {dt0}");
    }

    #[test]
    fn test_terminal_error_basics() {
        let (l2, linf) = terminal_error(&[1.0, 2.0], &[1.0, 2.0]);
        assert_eq!((l2, linf), (0.0, 0.0));
        let (l2, linf) = terminal_error(&[3.0, 0.0], &[0.0, -4.0]);
        assert_eq!((l2, linf), (5.0, 4.0));
    }

    #[test]
    fn test_convergence_order_values() {
        let o = convergence_order(16e-6, 1e-6, 2.0).unwrap();
        assert!((o - 4.0).abs() <= 1e-12);
        // Published pair from the two coarsest linear-problem rows.
        let o = convergence_order(6.697969115862e-8, 4.145569039958e-9, 2.0).unwrap();
        assert!((o - 4.0140816724).abs() <= 1e-9, "order {o}");
        assert_eq!(convergence_order(1e-9, 1e-9, 2.0), Some(0.0));
    }

    #[test]
    fn test_convergence_order_degenerate_inputs() {
        assert_eq!(convergence_order(0.0, 1e-9, 2.0), None);
        assert_eq!(convergence_order(1e-9, 0.0, 2.0), None);
        assert_eq!(convergence_order(f64::NAN, 1e-9, 2.0), None);
        assert_eq!(convergence_order(1e-9, f64::INFINITY, 2.0), None);
        assert_eq!(convergence_order(1e-8, 1e-9, 1.0), None);
        // Scale invariance: both errors scaled by the same factor.
        let a = convergence_order(4e-5, 2.5e-6, 2.0).unwrap();
        let b = convergence_order(4e-5 * 77.0, 2.5e-6 * 77.0, 2.0).unwrap();
        assert!((a - b).abs() <= 1e-12);
    }

    #[test]
    fn test_exact_terminal_linear_values() {
        let linear = linear_separated::<f64>();
        let v = exact_terminal(&linear, 10.0).unwrap();
        assert_eq!(v[0], 0.001, "fast component fully relaxed");
        assert!((v[1] - (1.0 - (-10.0_f64).exp())).abs() <= 1e-16);
        assert!((v[1] - 0.9999546000702375).abs() <= 1e-15);
        assert!(exact_terminal(&robertson::<f64>(), 10.0).is_none());
    }

    #[test]
    fn test_reference_file_roundtrip_bit_identical() {
        let dir = unique_temp_dir("roundtrip");
        let path = dir.join("sample.ref");
        let original = ReferenceSolution {
            problem_name: "robertson".to_string(),
            t_end: 10.0,
            dt_ref: 1e-6,
            values: vec![0.1 + 0.2, -4.684507049390e-14, 1e-300, 0.0],
            provenance: Provenance::Rk4Refined,
        };
        write_reference_file(&path, &original).unwrap();
        let loaded = read_reference_file(&path).unwrap();
        assert_eq!(loaded.problem_name, original.problem_name);
        assert_eq!(loaded.t_end, original.t_end);
        assert_eq!(loaded.dt_ref, original.dt_ref);
        assert_eq!(loaded.provenance, original.provenance);
        for (a, b) in loaded.values.iter().zip(&original.values) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
        std::fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn test_reference_file_rejects_tampering() {
        let dir = unique_temp_dir("tamper");
        let path = dir.join("sample.ref");
        let original = ReferenceSolution {
            problem_name: "ozone".to_string(),
            t_end: 1.0,
            dt_ref: 1e-6,
            values: vec![0.25; 8],
            provenance: Provenance::Rk4Refined,
        };
        write_reference_file(&path, &original).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let tampered = text.replacen("v 2.5e-1", "v 2.6e-1", 1);
        assert_ne!(text, tampered, "tamper target must exist");
        std::fs::write(&path, tampered).unwrap();
        match read_reference_file(&path) {
            Err(HarnessError::CacheCorrupt { detail, .. }) => {
                assert!(detail.contains("checksum"), "{detail}")
            }
            other => panic!("expected corrupt, got {other:?}"),
        }
        std::fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn test_reference_solution_exact_paths() {
        let dir = unique_temp_dir("exact");
        let linear = linear_separated::<f64>();
        let r = reference_solution(&linear, 10.0, &RefMode::Auto, &dir).unwrap();
        assert_eq!(r.provenance, Provenance::Exact);
        assert_eq!(r.values[0], 0.001);
        // Exact mode on a problem without a closed form is an error.
        let rob = robertson::<f64>();
        match reference_solution(&rob, 10.0, &RefMode::Exact, &dir) {
            Err(HarnessError::NoExactSolution { problem }) => assert_eq!(problem, "robertson"),
            other => panic!("expected NoExactSolution, got {other:?}"),
        }
        // The exact path writes nothing.
        assert_eq!(std::fs::read_dir(&dir).unwrap().count(), 0);
        std::fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn test_reference_solution_prefers_valid_cache() {
        // Seed the cache with synthetic values at the exact key the lookup
        // uses: the call must return them untouched (no integration).
        let dir = unique_temp_dir("cache_hit");
        let rob = robertson::<f64>();
        let path = reference_cache_path(&dir, "robertson", 10.0);
        let seeded = ReferenceSolution {
            problem_name: "robertson".to_string(),
            t_end: 10.0,
            dt_ref: 1e-6,
            values: vec![0.5, 0.25, 0.25],
            provenance: Provenance::Rk4Refined,
        };
        write_reference_file(&path, &seeded).unwrap();
        let r = reference_solution(&rob, 10.0, &RefMode::Rk4Refined, &dir).unwrap();
        assert_eq!(r.values, seeded.values, "cache hit must skip the run");
        std::fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn test_reference_solution_recomputes_corrupt_cache() {
        // A failed checksum must be recomputed and overwritten, and the
        // recomputed values must be physically plausible (mass conserved).
        let dir = unique_temp_dir("cache_corrupt");
        let rob = robertson::<f64>();
        let path = reference_cache_path(&dir, "robertson", 10.0);
        std::fs::write(&path, "format stiffstep-ref-1\ngarbage\nchecksum 00\n").unwrap();
        let r = reference_solution(&rob, 10.0, &RefMode::Rk4Refined, &dir).unwrap();
        assert_eq!(r.provenance, Provenance::Rk4Refined);
        let mass: f64 = r.values.iter().sum();
        assert!((mass - 1.0).abs() <= 1e-12, "mass {mass}");
        assert!(r.values[0] > 0.8 && r.values[0] < 0.9, "u1 = {}", r.values[0]);
        // The rewritten file now validates and round-trips bit-identically.
        let reread = read_reference_file(&path).unwrap();
        for (a, b) in reread.values.iter().zip(&r.values) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
        std::fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn test_reference_file_mode_validates_identity() {
        let dir = unique_temp_dir("file_mode");
        let path = dir.join("mine.ref");
        let reference = ReferenceSolution {
            problem_name: "vdp".to_string(),
            t_end: 100.0,
            dt_ref: 1e-6,
            values: vec![1.5, 0.5],
            provenance: Provenance::Rk4Refined,
        };
        write_reference_file(&path, &reference).unwrap();
        let vdp = van_der_pol::<f64>(100.0);
        let r = reference_solution(&vdp, 100.0, &RefMode::File(path.clone()), &dir).unwrap();
        assert_eq!(r.provenance, Provenance::File);
        assert_eq!(r.values, reference.values);
        // Wrong problem or end time is rejected loudly.
        let rob = robertson::<f64>();
        assert!(matches!(
            reference_solution(&rob, 10.0, &RefMode::File(path.clone()), &dir),
            Err(HarnessError::CacheCorrupt { .. })
        ));
        assert!(matches!(
            reference_solution(&vdp, 50.0, &RefMode::File(path.clone()), &dir),
            Err(HarnessError::CacheCorrupt { .. })
        ));
        std::fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn test_exact_vs_refined_reference_cross_check() {
        // Both reference paths on the problem with a closed form: the
        // refined run must land within 1e-12 of the exact values.
        let dir = unique_temp_dir("cross");
        let linear = linear_separated::<f64>();
        let exact = reference_solution(&linear, 10.0, &RefMode::Exact, &dir).unwrap();
        let refined = reference_solution(&linear, 10.0, &RefMode::Rk4Refined, &dir).unwrap();
        assert_eq!(refined.provenance, Provenance::Rk4Refined);
        for (a, b) in exact.values.iter().zip(&refined.values) {
            assert!((a - b).abs() <= 1e-12, "{a} vs {b}");
        }
        std::fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn test_study_linear_orders_and_first_error() {
        let linear = linear_separated::<f64>();
        let u_ref = exact_terminal(&linear, 10.0).unwrap();
        let cfg = default_study(SolverKind::TsfoImplicit, 10.0, 1.0, 5);
        let rows = convergence_study(&linear, &cfg, &u_ref);
        assert_eq!(rows.len(), 5);
        assert!(rows[0].order_l2.is_none() && rows[0].order_linf.is_none());
        let published = 6.697969115862e-8;
        assert!(
            (rows[0].error_l2 - published).abs() <= 1e-2 * published,
            "first error {:.6e}",
            rows[0].error_l2
        );
        for row in &rows[1..] {
            let o = row.order_l2.expect("order present");
            assert!((3.95..=4.05).contains(&o), "order {o}");
            assert!(row.failure.is_none());
        }
        // Errors shrink monotonically in the asymptotic regime.
        for pair in rows.windows(2) {
            assert!(pair[1].error_l2 < pair[0].error_l2);
        }
        // Implicit rows report Newton work; the affine solve needs at most
        // a couple of updates per stage.
        for row in &rows {
            assert!(row.avg_newton_iters > 0.0 && row.avg_newton_iters <= 4.0);
        }
    }

    #[test]
    fn test_study_single_level_has_no_orders() {
        let linear = linear_separated::<f64>();
        let u_ref = exact_terminal(&linear, 10.0).unwrap();
        let cfg = default_study(SolverKind::Rk4Explicit, 10.0, 1e-3, 1);
        let rows = convergence_study(&linear, &cfg, &u_ref);
        assert_eq!(rows.len(), 1);
        assert!(rows[0].order_l2.is_none());
        assert_eq!(rows[0].avg_newton_iters, 0.0, "explicit solver, no Newton");
    }

    #[test]
    fn test_study_failed_rows_are_marked_and_skipped() {
        // Explicit RK4 on the stiff oscillator at huge steps overflows; the
        // study must keep going and chain no orders through the wreckage.
        let vdp = van_der_pol::<f64>(100.0);
        let u_ref = vec![0.0, 0.0];
        let cfg = default_study(SolverKind::Rk4Explicit, 100.0, 1.0, 2);
        let rows = convergence_study(&vdp, &cfg, &u_ref);
        assert_eq!(rows.len(), 2);
        for row in &rows {
            assert!(row.failure.is_some(), "dt {} should fail", row.dt);
            assert!(row.error_l2.is_nan());
            assert!(row.order_l2.is_none());
            let msg = row.failure.as_ref().unwrap();
            assert!(msg.contains("step "), "{msg}");
        }
    }

    #[test]
    fn test_study_is_deterministic() {
        let linear = linear_separated::<f64>();
        let u_ref = exact_terminal(&linear, 10.0).unwrap();
        let cfg = default_study(SolverKind::TsfoImplicit, 10.0, 0.5, 4);
        let a = convergence_study(&linear, &cfg, &u_ref);
        let b = convergence_study(&linear, &cfg, &u_ref);
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.error_l2.to_bits(), y.error_l2.to_bits());
            assert_eq!(x.error_linf.to_bits(), y.error_linf.to_bits());
            assert_eq!(x.order_l2, y.order_l2);
        }
    }

    #[test]
    fn test_study_double_double_matches_f64_coarse_rows() {
        let linear_dd = linear_separated::<DoubleDouble>();
        let u_ref = exact_terminal(&linear_dd, 10.0).unwrap();
        let cfg = default_study(SolverKind::TsfoImplicit, 10.0, 1.0, 2);
        let rows = convergence_study(&linear_dd, &cfg, &u_ref);
        // Far above the f64 noise floor the extended-precision pipeline
        // reproduces the same errors.
        assert!((rows[0].error_l2 - 6.697969115862e-8).abs() <= 1e-10);
        assert!((rows[1].error_l2 - 4.145569039958e-9).abs() <= 1e-11);
        let o = rows[1].order_l2.unwrap();
        assert!((o - 4.0140816724).abs() <= 1e-4, "order {o}");
    }

    #[test]
    fn test_study_gauss_solver_runs() {
        // Extended precision keeps the fine Gauss errors (1e-13 and below)
        // clear of the f64 noise floor so the asymptotic order is visible.
        let linear = linear_separated::<DoubleDouble>();
        let u_ref = exact_terminal(&linear, 10.0).unwrap();
        let cfg = default_study(SolverKind::Irk4Gauss, 10.0, 1.0 / 32.0, 3);
        let rows = convergence_study(&linear, &cfg, &u_ref);
        for row in &rows {
            assert!(row.failure.is_none());
            assert!(row.avg_newton_iters > 0.0);
        }
        let published = 6.013786673943e-13;
        assert!(
            (rows[0].error_l2 - published).abs() <= 1e-2 * published,
            "coarse error {:.6e}",
            rows[0].error_l2
        );
        let o = rows[1].order_l2.unwrap();
        assert!((o - 4.0002516928).abs() <= 1e-3, "order {o}");
    }

    #[test]
    fn test_solver_kind_names_roundtrip() {
        for kind in SOLVER_KINDS {
            assert_eq!(SolverKind::from_name(kind.name()), Some(kind));
        }
        assert_eq!(SolverKind::from_name("bdf2"), None);
        assert!(SolverKind::TsfoImplicit.is_implicit());
        assert!(!SolverKind::TsfoExplicit.is_implicit());
    }

    #[test]
    fn test_by_name_and_cache_path_shape() {
        assert!(by_name::<f64>("linear").is_some());
        let p = reference_cache_path(Path::new("/tmp/cache"), "ozone", 321.8122);
        assert_eq!(
            p.file_name().unwrap().to_str().unwrap(),
            "ozone_321.8122_1e-6.ref"
        );
    }
}

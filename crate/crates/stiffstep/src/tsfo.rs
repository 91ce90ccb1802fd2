//! The two-stage fourth-order steppers: implicit (Newton-solved) and the
//! explicit variant that doubles as the predictor.
//!
//! A step from `u_n` advances through a half-step state. Writing `L` for the
//! right-hand side and `G = ∂L/∂t = L_u·L` for its temporal derivative, the
//! implicit scheme solves
//!
//! ```text
//!   stage 1:  v = u_n + dt·(L(u_n) + L(v))/4 - dt²·(G(v) - G(u_n))/48
//!   stage 2:  w = u_n + dt·(a3·L(u_n) + a4·L(v) + a5·L(w))
//!                 + dt²·(b3·G(u_n) + b4·G(v) + b5·G(w))
//! ```
//!
//! with the stage-2 weights supplied by [`SchemeParams`]. Both stages are
//! affine in the unknown's `L`/`G` evaluations plus the unknown itself, so
//! full Newton with the exact Jacobian
//!
//! ```text
//!   J = dt·a·L_u + dt²·b·G_u - I
//! ```
//!
//! converges quadratically, and in exactly one iteration when the system
//! itself is affine.

use crate::linalg::{lu_solve, norm_linf, LinalgError, Matrix};
use crate::model::{
    default_fd_step, eval_jac, eval_rhs, temporal_derivative, temporal_derivative_jacobian,
    OdeSystem,
};
use crate::order_conditions::{stage1_coefficients_in, SchemeParams, Stage2Coefficients};
use crate::scalar::Scalar;

/// Where in a step an error arose.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Stage {
    One,
    Two,
    /// An explicit composite step (no Newton iteration involved).
    Explicit,
    /// The stacked stage system of an implicit Runge-Kutta comparator.
    Stacked,
}

impl std::fmt::Display for Stage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Stage::One => write!(f, "stage 1"),
            Stage::Two => write!(f, "stage 2"),
            Stage::Explicit => write!(f, "explicit step"),
            Stage::Stacked => write!(f, "stacked stage system"),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum SolverError {
    /// An iterate, residual, or output stopped being finite.
    NonFinite { stage: Stage },
    /// The Newton matrix could not be factorized.
    Singular { stage: Stage, column: usize },
    /// Newton ran out of iterations or the updates grew instead of shrinking.
    Diverged {
        stage: Stage,
        iters: usize,
        update_norm: f64,
    },
}

impl std::fmt::Display for SolverError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SolverError::NonFinite { stage } => {
                write!(f, "{stage}: state or residual became non-finite")
            }
            SolverError::Singular { stage, column } => {
                write!(f, "{stage}: Newton matrix singular at column {column}")
            }
            SolverError::Diverged {
                stage,
                iters,
                update_norm,
            } => write!(
                f,
                "{stage}: Newton diverged after {iters} iterations (last update norm {update_norm:e})"
            ),
        }
    }
}

impl std::error::Error for SolverError {}

/// Termination controls for the stage solves.
#[derive(Clone, Copy, Debug)]
pub struct NewtonConfig {
    /// Absolute part of the update tolerance. Must be positive.
    pub atol: f64,
    /// Relative part, scaled by the iterate's max-norm. Non-negative.
    pub rtol: f64,
    /// Iteration budget per stage.
    ///
    /// The stage solves use plain full Newton (no damping or line search).
    /// On strongly nonlinear stages inside a fast transient the iteration
    /// can wander for dozens of updates before entering its quadratic
    /// basin — the worst case observed on the bundled benchmarks is 66
    /// (three-species reaction, dt = 1e-2, second step), while typical
    /// steps need 0–5. The default budget of 200 covers that worst case
    /// with margin; it is not a knob to tighten for speed, since converged
    /// steps stop early regardless.
    pub max_iter: usize,
}

impl Default for NewtonConfig {
    fn default() -> Self {
        Self {
            atol: 1e-14,
            rtol: 1e-14,
            max_iter: 200,
        }
    }
}

/// Converged stage solve: the state, how many corrective updates it took,
/// and the size of the final (sub-tolerance) update.
///
/// `iters` counts updates applied *before* the convergence test passed; the
/// final update is still applied (it is free accuracy) but is confirmation,
/// not correction. An affine system therefore reports exactly 1 and a state
/// already at equilibrium reports 0.
#[derive(Clone, Debug)]
pub struct NewtonResult<S> {
    pub u: Vec<S>,
    pub iters: usize,
    pub final_update_norm: f64,
}

/// Per-step iteration diagnostics.
#[derive(Clone, Copy, Debug, Default)]
pub struct StepStats {
    pub stage1_iters: usize,
    pub stage2_iters: usize,
    pub final_update_norm_stage1: f64,
    pub final_update_norm_stage2: f64,
}

/// `u + dt·cl·l + dt²·cg·g`, the shape of every explicit update here.
fn advance<S: Scalar>(u: &[S], l: &[S], g: &[S], dt: S, cl: S, cg: S) -> Vec<S> {
    let dt2 = dt * dt;
    u.iter()
        .zip(l)
        .zip(g)
        .map(|((&ui, &li), &gi)| ui + dt * cl * li + dt2 * cg * gi)
        .collect()
}

fn all_finite<S: Scalar>(v: &[S]) -> bool {
    v.iter().all(|x| x.is_finite())
}

/// Explicit predictor for the half-step state:
/// `u + (dt/2)·L(u) + (dt²/8)·G(u)`.
pub fn predict_stage1<S: Scalar>(
    sys: &dyn OdeSystem<S>,
    u_n: &[S],
    dt: S,
) -> Result<Vec<S>, SolverError> {
    let l = eval_rhs(sys, u_n);
    let g = temporal_derivative(sys, u_n);
    let out = advance(u_n, &l, &g, dt, S::ratio(1, 2), S::ratio(1, 8));
    if all_finite(&out) {
        Ok(out)
    } else {
        Err(SolverError::NonFinite { stage: Stage::One })
    }
}

/// Explicit predictor for the full-step state given a half-step state:
/// `u + dt·L(u) + (dt²/6)·(G(u) + 2·G(u_half))`.
pub fn predict_stage2<S: Scalar>(
    sys: &dyn OdeSystem<S>,
    u_n: &[S],
    u_half: &[S],
    dt: S,
) -> Result<Vec<S>, SolverError> {
    let l_n = eval_rhs(sys, u_n);
    let g_n = temporal_derivative(sys, u_n);
    let g_half = temporal_derivative(sys, u_half);
    let out = full_prediction(u_n, &l_n, &g_n, &g_half, dt);
    if all_finite(&out) {
        Ok(out)
    } else {
        Err(SolverError::NonFinite { stage: Stage::Two })
    }
}

fn full_prediction<S: Scalar>(u_n: &[S], l_n: &[S], g_n: &[S], g_half: &[S], dt: S) -> Vec<S> {
    let dt2 = dt * dt;
    let sixth = S::ratio(1, 6);
    let third = S::ratio(1, 3);
    u_n.iter()
        .zip(l_n)
        .zip(g_n.iter().zip(g_half))
        .map(|((&ui, &li), (&gi, &ghi))| ui + dt * li + dt2 * (sixth * gi + third * ghi))
        .collect()
}

/// Newton driver shared by both stages. The residual has the form
/// `F(v) = base + dt·a·L(v) + dt²·b·G(v) - v`; its exact Jacobian is
/// `J(v) = dt·a·L_u(v) + dt²·b·G_u(v) - I`. Solves `J·Δ = -F`, applies Δ,
/// and stops once `‖Δ‖∞ < atol + rtol·‖v‖∞`.
fn newton_implicit_stage<S: Scalar>(
    sys: &dyn OdeSystem<S>,
    stage: Stage,
    base: &[S],
    a: S,
    b: S,
    dt: S,
    guess: Vec<S>,
    cfg: &NewtonConfig,
) -> Result<NewtonResult<S>, SolverError> {
    let n = base.len();
    let dt2 = dt * dt;
    let fd_step = default_fd_step::<S>();
    let mut v = guess;
    let mut neg_f = vec![S::zero(); n];
    let mut jac = Matrix::zeros(n);

    let mut iters = 0usize;
    let mut first_norm: Option<f64> = None;
    let mut last_norm = f64::NAN;

    for _ in 0..cfg.max_iter {
        if !all_finite(&v) {
            return Err(SolverError::NonFinite { stage });
        }
        let l = eval_rhs(sys, &v);
        let g = temporal_derivative(sys, &v);
        for i in 0..n {
            // Negated residual: the right-hand side of J·Δ = -F.
            neg_f[i] = v[i] - (base[i] + dt * a * l[i] + dt2 * b * g[i]);
        }
        if !all_finite(&neg_f) {
            return Err(SolverError::NonFinite { stage });
        }

        let l_u = eval_jac(sys, &v);
        let g_u = temporal_derivative_jacobian(sys, &v, fd_step);
        for i in 0..n {
            for j in 0..n {
                let mut entry = dt * a * l_u[(i, j)] + dt2 * b * g_u[(i, j)];
                if i == j {
                    entry -= S::one();
                }
                jac[(i, j)] = entry;
            }
        }

        let delta = lu_solve(&jac, &neg_f).map_err(|e| match e {
            LinalgError::SingularMatrix { column } => SolverError::Singular { stage, column },
        })?;
        let norm = norm_linf(&delta).to_f64();
        if !norm.is_finite() {
            return Err(SolverError::NonFinite { stage });
        }
        match first_norm {
            None => first_norm = Some(norm),
            Some(f0) if norm > 1e4 * f0 => {
                return Err(SolverError::Diverged {
                    stage,
                    iters,
                    update_norm: norm,
                })
            }
            _ => {}
        }
        last_norm = norm;

        for (vi, di) in v.iter_mut().zip(&delta) {
            *vi += *di;
        }
        let tol = cfg.atol + cfg.rtol * norm_linf(&v).to_f64();
        if norm < tol {
            return Ok(NewtonResult {
                u: v,
                iters,
                final_update_norm: norm,
            });
        }
        iters += 1;
    }

    Err(SolverError::Diverged {
        stage,
        iters,
        update_norm: last_norm,
    })
}

fn stage1_base_and_guess<S: Scalar>(u_n: &[S], l_n: &[S], g_n: &[S], dt: S) -> (Vec<S>, Vec<S>) {
    let k = stage1_coefficients_in::<S>();
    let base = advance(u_n, l_n, g_n, dt, k.a1, k.b1);
    let guess = advance(u_n, l_n, g_n, dt, S::ratio(1, 2), S::ratio(1, 8));
    (base, guess)
}

/// Solves the half-step stage for `u_half`, starting from the explicit
/// predictor.
pub fn newton_stage1<S: Scalar>(
    sys: &dyn OdeSystem<S>,
    u_n: &[S],
    dt: S,
    cfg: &NewtonConfig,
) -> Result<NewtonResult<S>, SolverError> {
    let l_n = eval_rhs(sys, u_n);
    let g_n = temporal_derivative(sys, u_n);
    let k = stage1_coefficients_in::<S>();
    let (base, guess) = stage1_base_and_guess(u_n, &l_n, &g_n, dt);
    newton_implicit_stage(sys, Stage::One, &base, k.a2, k.b2, dt, guess, cfg)
}

fn stage2_base<S: Scalar>(
    u_n: &[S],
    l_n: &[S],
    l_half: &[S],
    g_n: &[S],
    g_half: &[S],
    dt: S,
    k: &Stage2Coefficients<S>,
) -> Vec<S> {
    let dt2 = dt * dt;
    (0..u_n.len())
        .map(|i| {
            u_n[i]
                + dt * (k.a3 * l_n[i] + k.a4 * l_half[i])
                + dt2 * (k.b3 * g_n[i] + k.b4 * g_half[i])
        })
        .collect()
}

/// Solves the full-step stage for `u_next` given a converged half-step
/// state, starting from the explicit predictor. The half-step `L` and `G`
/// evaluations are computed once and held fixed across iterations.
pub fn newton_stage2<S: Scalar>(
    sys: &dyn OdeSystem<S>,
    u_n: &[S],
    u_half: &[S],
    dt: S,
    params: &SchemeParams,
    cfg: &NewtonConfig,
) -> Result<NewtonResult<S>, SolverError> {
    let l_n = eval_rhs(sys, u_n);
    let g_n = temporal_derivative(sys, u_n);
    newton_stage2_cached(sys, u_n, &l_n, &g_n, u_half, dt, params, cfg)
}

fn newton_stage2_cached<S: Scalar>(
    sys: &dyn OdeSystem<S>,
    u_n: &[S],
    l_n: &[S],
    g_n: &[S],
    u_half: &[S],
    dt: S,
    params: &SchemeParams,
    cfg: &NewtonConfig,
) -> Result<NewtonResult<S>, SolverError> {
    let k: Stage2Coefficients<S> = params.stage2_coefficients();
    let l_half = eval_rhs(sys, u_half);
    let g_half = temporal_derivative(sys, u_half);
    let base = stage2_base(u_n, l_n, &l_half, g_n, &g_half, dt, &k);
    let guess = full_prediction(u_n, l_n, g_n, &g_half, dt);
    newton_implicit_stage(sys, Stage::Two, &base, k.a5, k.b5, dt, guess, cfg)
}

/// One implicit step: predictor → stage-1 Newton → predictor → stage-2
/// Newton. `L(u_n)` and `G(u_n)` are evaluated once and shared by both
/// stages.
pub fn step_implicit_tsfo<S: Scalar>(
    sys: &dyn OdeSystem<S>,
    u_n: &[S],
    dt: S,
    params: &SchemeParams,
    cfg: &NewtonConfig,
) -> Result<(Vec<S>, StepStats), SolverError> {
    let l_n = eval_rhs(sys, u_n);
    let g_n = temporal_derivative(sys, u_n);
    let k1 = stage1_coefficients_in::<S>();
    let (base, guess) = stage1_base_and_guess(u_n, &l_n, &g_n, dt);
    let stage1 = newton_implicit_stage(sys, Stage::One, &base, k1.a2, k1.b2, dt, guess, cfg)?;
    let stage2 = newton_stage2_cached(sys, u_n, &l_n, &g_n, &stage1.u, dt, params, cfg)?;
    let stats = StepStats {
        stage1_iters: stage1.iters,
        stage2_iters: stage2.iters,
        final_update_norm_stage1: stage1.final_update_norm,
        final_update_norm_stage2: stage2.final_update_norm,
    };
    Ok((stage2.u, stats))
}

/// One step of the explicit scheme: both predictors composed, no Newton.
/// Expected to overflow on stiff problems at usable step sizes — that
/// failure mode is reported as [`SolverError::NonFinite`].
pub fn step_explicit_tsfo<S: Scalar>(
    sys: &dyn OdeSystem<S>,
    u_n: &[S],
    dt: S,
) -> Result<Vec<S>, SolverError> {
    let l_n = eval_rhs(sys, u_n);
    let g_n = temporal_derivative(sys, u_n);
    let u_half = advance(u_n, &l_n, &g_n, dt, S::ratio(1, 2), S::ratio(1, 8));
    if !all_finite(&u_half) {
        return Err(SolverError::NonFinite {
            stage: Stage::Explicit,
        });
    }
    let g_half = temporal_derivative(sys, &u_half);
    let out = full_prediction(u_n, &l_n, &g_n, &g_half, dt);
    if all_finite(&out) {
        Ok(out)
    } else {
        Err(SolverError::NonFinite {
            stage: Stage::Explicit,
        })
    }
}

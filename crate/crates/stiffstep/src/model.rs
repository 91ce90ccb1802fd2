//! Autonomous ODE systems and temporal-derivative machinery.
//!
//! The integrators in this crate advance `u' = L(u)` for autonomous
//! right-hand sides `L`. Besides `L` and its Jacobian `L_u`, the two-stage
//! schemes need the temporal derivative of the right-hand side along the
//! flow,
//!
//! ```text
//!     G(u) = d/dt L(u(t)) = L_u(u) · L(u),
//! ```
//!
//! and, inside Newton iterations, the Jacobian of `G`:
//!
//! ```text
//!     G_u(u) = L_uu(u)·L(u) + L_u(u)²,
//! ```
//!
//! where `L_uu·w` is the second-derivative contraction
//! `M(u, w)_ij = Σ_k ∂²L_i/∂u_j∂u_k · w_k`. Systems may supply that
//! contraction analytically; when they do not, `G_u` falls back to one-sided
//! finite differences of `G` column by column.

use crate::linalg::Matrix;
use crate::scalar::Scalar;

/// An autonomous ODE system `u' = L(u)`.
///
/// Implementations must be pure: evaluations may run concurrently from
/// several threads and must depend only on the argument values.
pub trait OdeSystem<S: Scalar>: Send + Sync {
    /// State dimension (positive, fixed for the lifetime of the system).
    fn dim(&self) -> usize;

    /// Writes `L(u)` into `out`. Both slices have length `dim()`.
    fn rhs(&self, u: &[S], out: &mut [S]);

    /// Writes the Jacobian `L_u(u)` into `out` (a `dim()`×`dim()` matrix).
    fn jac(&self, u: &[S], out: &mut Matrix<S>);

    /// Writes the contraction `M(u, w)_ij = Σ_k ∂²L_i/∂u_j∂u_k · w_k` into
    /// `out` and returns `true`, or returns `false` when the system does not
    /// provide second derivatives (callers then fall back to finite
    /// differences).
    fn second_contraction(&self, _u: &[S], _w: &[S], _out: &mut Matrix<S>) -> bool {
        false
    }
}

/// Convenience allocation wrappers used in tests and composition code.
pub fn eval_rhs<S: Scalar>(sys: &dyn OdeSystem<S>, u: &[S]) -> Vec<S> {
    let mut out = vec![S::zero(); sys.dim()];
    sys.rhs(u, &mut out);
    out
}

pub fn eval_jac<S: Scalar>(sys: &dyn OdeSystem<S>, u: &[S]) -> Matrix<S> {
    let mut out = Matrix::zeros(sys.dim());
    sys.jac(u, &mut out);
    out
}

/// Temporal derivative of the right-hand side along the flow:
/// `G(u) = L_u(u) · L(u)`.
pub fn temporal_derivative<S: Scalar>(sys: &dyn OdeSystem<S>, u: &[S]) -> Vec<S> {
    assert_eq!(u.len(), sys.dim(), "state dimension mismatch");
    eval_jac(sys, u).mul_vec(&eval_rhs(sys, u))
}

/// Step factor for the finite-difference fallback of
/// [`temporal_derivative_jacobian`]: square root of the working-precision
/// rounding unit.
pub fn default_fd_step<S: Scalar>() -> f64 {
    S::epsilon().sqrt()
}

/// Jacobian of the temporal derivative, `G_u = L_uu·L + L_u²`.
///
/// Uses the system's analytic second-derivative contraction when available;
/// otherwise approximates column `j` by a forward difference of `G` with
/// step `fd_step · (1 + |u_j|)`.
pub fn temporal_derivative_jacobian<S: Scalar>(
    sys: &dyn OdeSystem<S>,
    u: &[S],
    fd_step: f64,
) -> Matrix<S> {
    assert_eq!(u.len(), sys.dim(), "state dimension mismatch");
    let n = sys.dim();
    let jac = eval_jac(sys, u);

    let mut contraction = Matrix::zeros(n);
    if sys.second_contraction(u, &eval_rhs(sys, u), &mut contraction) {
        let mut g_u = jac.mul_mat(&jac);
        g_u.add_scaled(S::one(), &contraction);
        return g_u;
    }

    // Forward differences of G, one column per state component.
    let g0 = jac.mul_vec(&eval_rhs(sys, u));
    let mut g_u = Matrix::zeros(n);
    let mut up = u.to_vec();
    for j in 0..n {
        let h = S::from_f64(fd_step) * (S::one() + u[j].abs());
        let saved = up[j];
        up[j] += h;
        // Re-derive the actual step; (u_j + h) - u_j absorbs rounding in h.
        let h_actual = up[j] - saved;
        let gj = temporal_derivative(sys, &up);
        for i in 0..n {
            g_u[(i, j)] = (gj[i] - g0[i]) / h_actual;
        }
        up[j] = saved;
    }
    g_u
}

//! Benchmark systems exercised by the convergence harness and the CLI.
//!
//! Four problems of increasing character are bundled with their initial
//! conditions, canonical end times, and closed-form solutions where one
//! exists:
//!
//! * `linear` — two decoupled affine equations with rates −1000 and −1;
//!   the stiffness ratio is visible immediately and the exact solution is
//!   available, so the full error pipeline can be validated end to end.
//! * `robertson` — the three-species autocatalytic reaction with rate
//!   constants spanning nine orders of magnitude; mass is conserved.
//! * `ozone` — an eight-species decomposition network whose only
//!   nonlinearity is one bilinear reaction channel.
//! * `vdp` — the Van der Pol oscillator in a strongly stiff regime
//!   (default damping parameter 100).
//!
//! All systems carry analytic Jacobians and analytic second contractions,
//! so the implicit stepper never falls back to finite differences on them.

use crate::linalg::Matrix;
use crate::model::OdeSystem;
use crate::scalar::Scalar;

/// A named system bundled with everything a convergence study needs.
pub struct BenchmarkProblem<S: Scalar = f64> {
    /// Identifier used by the CLI and the reference-solution cache.
    pub name: &'static str,
    /// The ODE right-hand side with its derivatives.
    pub system: Box<dyn OdeSystem<S>>,
    /// Initial state; its length equals `system.dim()`.
    pub u0: Vec<S>,
    /// End times the published tables use; the first entry is the default.
    pub t_end_options: Vec<f64>,
    /// Closed-form solution, when one exists. `exact(0)` equals `u0`.
    pub exact: Option<Box<dyn Fn(S) -> Vec<S> + Send + Sync>>,
}

impl<S: Scalar> BenchmarkProblem<S> {
    /// Dimension of the state vector.
    pub fn dim(&self) -> usize {
        self.system.dim()
    }

    /// First (canonical) end time.
    pub fn default_t_end(&self) -> f64 {
        self.t_end_options[0]
    }
}

/// Looks a problem up by its CLI identifier.
///
/// Recognized names: `linear`, `robertson`, `ozone`, `vdp`. The Van der Pol
/// problem is returned with its default damping parameter.
pub fn by_name<S: Scalar>(name: &str) -> Option<BenchmarkProblem<S>> {
    match name {
        "linear" => Some(linear_separated()),
        "robertson" => Some(robertson()),
        "ozone" => Some(ozone()),
        "vdp" => Some(van_der_pol(VDP_DEFAULT_NU)),
        _ => None,
    }
}

/// Names accepted by [`by_name`], in display order.
pub const PROBLEM_NAMES: [&str; 4] = ["linear", "robertson", "ozone", "vdp"];

/// Default damping parameter for [`van_der_pol`].
pub const VDP_DEFAULT_NU: f64 = 100.0;

// ---------------------------------------------------------------------------
// linear: u1' = −1000 u1 + 1,  u2' = −u2 + 1
// ---------------------------------------------------------------------------

struct LinearSeparated;

impl<S: Scalar> OdeSystem<S> for LinearSeparated {
    fn dim(&self) -> usize {
        2
    }

    fn rhs(&self, u: &[S], out: &mut [S]) {
        let one = S::one();
        out[0] = one - S::from_f64(1000.0) * u[0];
        out[1] = one - u[1];
    }

    fn jac(&self, _u: &[S], out: &mut Matrix<S>) {
        out.fill(S::zero());
        out[(0, 0)] = S::from_f64(-1000.0);
        out[(1, 1)] = -S::one();
    }

    fn second_contraction(&self, _u: &[S], _w: &[S], out: &mut Matrix<S>) -> bool {
        out.fill(S::zero());
        true
    }
}

/// Two decoupled affine equations with rates −1000 and −1, both relaxing
/// toward their steady states from zero. Exact solution:
/// `u1(t) = (1 − e^{−1000t})/1000`, `u2(t) = 1 − e^{−t}`.
pub fn linear_separated<S: Scalar>() -> BenchmarkProblem<S> {
    BenchmarkProblem {
        name: "linear",
        system: Box::new(LinearSeparated),
        u0: vec![S::zero(), S::zero()],
        t_end_options: vec![10.0],
        exact: Some(Box::new(|t: S| {
            let one = S::one();
            let thousand = S::from_f64(1000.0);
            vec![(one - (-(thousand * t)).exp()) / thousand, one - (-t).exp()]
        })),
    }
}

// ---------------------------------------------------------------------------
// robertson: the classic three-species reaction
// ---------------------------------------------------------------------------

struct Robertson;

const ROB_K1: f64 = 0.04;
const ROB_K2: f64 = 1.0e4;
const ROB_K3: f64 = 3.0e7;

impl<S: Scalar> OdeSystem<S> for Robertson {
    fn dim(&self) -> usize {
        3
    }

    fn rhs(&self, u: &[S], out: &mut [S]) {
        let k1 = S::from_f64(ROB_K1);
        let k2 = S::from_f64(ROB_K2);
        let k3 = S::from_f64(ROB_K3);
        let slow = k1 * u[0];
        let recombine = k2 * u[1] * u[2];
        let quadratic = k3 * u[1] * u[1];
        out[0] = recombine - slow;
        out[1] = slow - recombine - quadratic;
        out[2] = quadratic;
    }

    fn jac(&self, u: &[S], out: &mut Matrix<S>) {
        let k1 = S::from_f64(ROB_K1);
        let k2 = S::from_f64(ROB_K2);
        let two_k3 = S::from_f64(2.0 * ROB_K3);
        out.fill(S::zero());
        out[(0, 0)] = -k1;
        out[(0, 1)] = k2 * u[2];
        out[(0, 2)] = k2 * u[1];
        out[(1, 0)] = k1;
        out[(1, 1)] = -k2 * u[2] - two_k3 * u[1];
        out[(1, 2)] = -k2 * u[1];
        out[(2, 1)] = two_k3 * u[1];
    }

    fn second_contraction(&self, _u: &[S], w: &[S], out: &mut Matrix<S>) -> bool {
        let k2 = S::from_f64(ROB_K2);
        let two_k3 = S::from_f64(2.0 * ROB_K3);
        out.fill(S::zero());
        out[(0, 1)] = k2 * w[2];
        out[(0, 2)] = k2 * w[1];
        out[(1, 1)] = -k2 * w[2] - two_k3 * w[1];
        out[(1, 2)] = -k2 * w[1];
        out[(2, 1)] = two_k3 * w[1];
        true
    }
}

/// Three-species autocatalytic reaction starting from a pure first species.
/// Rate constants 0.04, 1e4 and 3e7 give a stiffness ratio near 1e6, and the
/// total mass `u1 + u2 + u3` is conserved exactly by the dynamics.
pub fn robertson<S: Scalar>() -> BenchmarkProblem<S> {
    BenchmarkProblem {
        name: "robertson",
        system: Box::new(Robertson),
        u0: vec![S::one(), S::zero(), S::zero()],
        t_end_options: vec![10.0],
        exact: None,
    }
}

// ---------------------------------------------------------------------------
// ozone: eight-species decomposition network
// ---------------------------------------------------------------------------

struct Ozone;

/// Rate of the one bilinear channel (species 6 reacting with species 8).
const OZONE_BILINEAR: f64 = 280.0;

impl<S: Scalar> OdeSystem<S> for Ozone {
    fn dim(&self) -> usize {
        8
    }

    fn rhs(&self, u: &[S], out: &mut [S]) {
        let c = S::from_f64;
        let pair = c(OZONE_BILINEAR) * u[5] * u[7];
        out[0] = c(-1.71) * u[0] + c(0.43) * u[1] + c(8.32) * u[2] + c(0.0007);
        out[1] = c(1.71) * u[0] - c(8.75) * u[1];
        out[2] = c(-10.03) * u[2] + c(0.43) * u[3] + c(0.035) * u[4];
        out[3] = c(8.32) * u[1] + c(1.71) * u[2] - c(1.12) * u[3];
        out[4] = c(-1.745) * u[4] + c(0.43) * u[5] + c(0.43) * u[6];
        out[5] = c(0.69) * u[3] + c(1.71) * u[4] - c(0.43) * u[5] + c(0.69) * u[6] - pair;
        out[6] = pair - c(1.81) * u[6];
        out[7] = c(1.81) * u[6] - pair;
    }

    fn jac(&self, u: &[S], out: &mut Matrix<S>) {
        let c = S::from_f64;
        let b6 = c(OZONE_BILINEAR) * u[5];
        let b8 = c(OZONE_BILINEAR) * u[7];
        out.fill(S::zero());
        out[(0, 0)] = c(-1.71);
        out[(0, 1)] = c(0.43);
        out[(0, 2)] = c(8.32);
        out[(1, 0)] = c(1.71);
        out[(1, 1)] = c(-8.75);
        out[(2, 2)] = c(-10.03);
        out[(2, 3)] = c(0.43);
        out[(2, 4)] = c(0.035);
        out[(3, 1)] = c(8.32);
        out[(3, 2)] = c(1.71);
        out[(3, 3)] = c(-1.12);
        out[(4, 4)] = c(-1.745);
        out[(4, 5)] = c(0.43);
        out[(4, 6)] = c(0.43);
        out[(5, 3)] = c(0.69);
        out[(5, 4)] = c(1.71);
        out[(5, 5)] = c(-0.43) - b8;
        out[(5, 6)] = c(0.69);
        out[(5, 7)] = -b6;
        out[(6, 5)] = b8;
        out[(6, 6)] = c(-1.81);
        out[(6, 7)] = b6;
        out[(7, 5)] = -b8;
        out[(7, 6)] = c(1.81);
        out[(7, 7)] = -b6;
    }

    fn second_contraction(&self, _u: &[S], w: &[S], out: &mut Matrix<S>) -> bool {
        // Only the bilinear channel survives a second derivative, so the
        // contraction is constant in the state.
        let r6 = S::from_f64(OZONE_BILINEAR) * w[5];
        let r8 = S::from_f64(OZONE_BILINEAR) * w[7];
        out.fill(S::zero());
        out[(5, 5)] = -r8;
        out[(5, 7)] = -r6;
        out[(6, 5)] = r8;
        out[(6, 7)] = r6;
        out[(7, 5)] = -r8;
        out[(7, 7)] = -r6;
        true
    }
}

/// Eight-species ozone decomposition network. Species 7 and 8 exchange mass
/// through a single bilinear channel, so `rhs7 + rhs8 = 0` identically. End
/// times 1.0, 10.0 and 321.8122 probe the fast transient, the developed
/// phase and the long-time steady approach.
pub fn ozone<S: Scalar>() -> BenchmarkProblem<S> {
    let mut u0 = vec![S::zero(); 8];
    u0[0] = S::one();
    u0[7] = S::from_f64(0.0057);
    BenchmarkProblem {
        name: "ozone",
        system: Box::new(Ozone),
        u0,
        t_end_options: vec![1.0, 10.0, 321.8122],
        exact: None,
    }
}

// ---------------------------------------------------------------------------
// vdp: Van der Pol oscillator
// ---------------------------------------------------------------------------

struct VanDerPol<S> {
    nu: S,
}

impl<S: Scalar> OdeSystem<S> for VanDerPol<S> {
    fn dim(&self) -> usize {
        2
    }

    fn rhs(&self, u: &[S], out: &mut [S]) {
        out[0] = u[1];
        out[1] = self.nu * (S::one() - u[0] * u[0]) * u[1] - u[0];
    }

    fn jac(&self, u: &[S], out: &mut Matrix<S>) {
        let two = S::from_f64(2.0);
        out[(0, 0)] = S::zero();
        out[(0, 1)] = S::one();
        out[(1, 0)] = -two * self.nu * u[0] * u[1] - S::one();
        out[(1, 1)] = self.nu * (S::one() - u[0] * u[0]);
    }

    fn second_contraction(&self, u: &[S], w: &[S], out: &mut Matrix<S>) -> bool {
        let two_nu = S::from_f64(2.0) * self.nu;
        out.fill(S::zero());
        out[(1, 0)] = -two_nu * (u[1] * w[0] + u[0] * w[1]);
        out[(1, 1)] = -two_nu * u[0] * w[0];
        true
    }
}

/// Van der Pol oscillator `u1' = u2`, `u2' = ν(1 − u1²)u2 − u1` started at
/// `(2, 0)`. With the default ν = 100 the Jacobian eigenvalue near the
/// initial state has magnitude ≈ 300 and grows sharply along the relaxation
/// spikes, which is what defeats explicit steppers at moderate step sizes.
pub fn van_der_pol<S: Scalar>(nu: f64) -> BenchmarkProblem<S> {
    BenchmarkProblem {
        name: "vdp",
        system: Box::new(VanDerPol {
            nu: S::from_f64(nu),
        }),
        u0: vec![S::from_f64(2.0), S::zero()],
        t_end_options: vec![100.0],
        exact: None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{eval_jac, eval_rhs};
    use crate::scalar::DoubleDouble;
    use crate::tsfo::{newton_stage1, step_implicit_tsfo, NewtonConfig};
    use crate::SchemeParams;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn all_problems() -> Vec<BenchmarkProblem<f64>> {
        PROBLEM_NAMES
            .iter()
            .map(|n| by_name(n).expect("known name"))
            .collect()
    }

    /// Central-difference check of the analytic Jacobian at a single state.
    fn assert_jacobian_consistent(p: &BenchmarkProblem<f64>, u: &[f64], tol_rel: f64) {
        let n = p.dim();
        let analytic = eval_jac(p.system.as_ref(), u);
        let mut scale = 1.0_f64;
        for i in 0..n {
            for j in 0..n {
                scale = scale.max(analytic[(i, j)].abs());
            }
        }
        for j in 0..n {
            let h = 1e-6 * (1.0 + u[j].abs());
            let mut up = u.to_vec();
            let mut um = u.to_vec();
            up[j] += h;
            um[j] -= h;
            let fp = eval_rhs(p.system.as_ref(), &up);
            let fm = eval_rhs(p.system.as_ref(), &um);
            for i in 0..n {
                let fd = (fp[i] - fm[i]) / (2.0 * h);
                assert!(
                    (fd - analytic[(i, j)]).abs() <= tol_rel * scale,
                    "{}: jac[({i},{j})] analytic {} vs fd {}",
                    p.name,
                    analytic[(i, j)],
                    fd
                );
            }
        }
    }

    /// Central-difference check of the directional Jacobian derivative
    /// claimed by `second_contraction`.
    fn assert_contraction_consistent(p: &BenchmarkProblem<f64>, u: &[f64], w: &[f64]) {
        let n = p.dim();
        let mut analytic = Matrix::zeros(n);
        assert!(
            p.system.second_contraction(u, w, &mut analytic),
            "{}: expected an analytic contraction",
            p.name
        );
        let h = 1e-5;
        let up: Vec<f64> = u.iter().zip(w).map(|(&x, &d)| x + h * d).collect();
        let um: Vec<f64> = u.iter().zip(w).map(|(&x, &d)| x - h * d).collect();
        let jp = eval_jac(p.system.as_ref(), &up);
        let jm = eval_jac(p.system.as_ref(), &um);
        let mut scale = 1.0_f64;
        for i in 0..n {
            for j in 0..n {
                scale = scale.max(analytic[(i, j)].abs());
            }
        }
        for i in 0..n {
            for j in 0..n {
                let fd = (jp[(i, j)] - jm[(i, j)]) / (2.0 * h);
                assert!(
                    (fd - analytic[(i, j)]).abs() <= 1e-6 * scale,
                    "{}: contraction[({i},{j})] analytic {} vs fd {}",
                    p.name,
                    analytic[(i, j)],
                    fd
                );
            }
        }
    }

    #[test]
    fn test_catalog_shapes() {
        for p in all_problems() {
            assert_eq!(p.u0.len(), p.dim(), "{}", p.name);
            assert!(!p.t_end_options.is_empty(), "{}", p.name);
            assert!(p.default_t_end() > 0.0, "{}", p.name);
            if let Some(exact) = &p.exact {
                let at_zero = exact(0.0);
                assert_eq!(at_zero.len(), p.dim());
                for (a, b) in at_zero.iter().zip(&p.u0) {
                    assert_eq!(a, b, "{}: exact(0) must equal u0", p.name);
                }
            }
        }
        assert!(by_name::<f64>("brusselator").is_none());
        assert_eq!(by_name::<f64>("ozone").unwrap().dim(), 8);
    }

    #[test]
    fn test_rhs_spot_values() {
        let linear = linear_separated::<f64>();
        assert_eq!(eval_rhs(linear.system.as_ref(), &[0.0, 0.0]), vec![1.0, 1.0]);
        assert_eq!(
            eval_rhs(linear.system.as_ref(), &[0.001, 1.0]),
            vec![0.0, 0.0],
            "steady state"
        );

        let rob = robertson::<f64>();
        assert_eq!(
            eval_rhs(rob.system.as_ref(), &rob.u0),
            vec![-0.04, 0.04, 0.0]
        );

        let oz = ozone::<f64>();
        let r = eval_rhs(oz.system.as_ref(), &oz.u0);
        assert!((r[0] - (-1.7093)).abs() <= 1e-15, "row 1: {}", r[0]);
        assert!((r[1] - 1.71).abs() <= 1e-15, "row 2: {}", r[1]);
        for (i, &v) in r.iter().enumerate().skip(2) {
            assert_eq!(v, 0.0, "row {} should vanish at the initial state", i + 1);
        }

        let vdp = van_der_pol::<f64>(VDP_DEFAULT_NU);
        assert_eq!(eval_rhs(vdp.system.as_ref(), &vdp.u0), vec![0.0, -2.0]);
    }

    #[test]
    fn test_vdp_jacobian_at_initial_state() {
        let vdp = van_der_pol::<f64>(100.0);
        let j = eval_jac(vdp.system.as_ref(), &[2.0, 0.0]);
        assert_eq!(j[(0, 0)], 0.0);
        assert_eq!(j[(0, 1)], 1.0);
        assert_eq!(j[(1, 0)], -1.0);
        assert_eq!(j[(1, 1)], -300.0);
    }

    #[test]
    fn test_linear_jacobian_eigenvalues() {
        let linear = linear_separated::<f64>();
        let j = eval_jac(linear.system.as_ref(), &[0.3, 0.7]);
        // Diagonal system: the eigenvalues are the diagonal entries.
        assert_eq!(j[(0, 0)], -1000.0);
        assert_eq!(j[(1, 1)], -1.0);
        assert_eq!(j[(0, 1)], 0.0);
        assert_eq!(j[(1, 0)], 0.0);
    }

    #[test]
    fn test_jacobians_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(61);
        for p in all_problems() {
            // Sample states in a plausible neighborhood of the trajectory:
            // nonneg and O(1) for the reaction networks, O(2) for the rest.
            for _ in 0..20 {
                let u: Vec<f64> = (0..p.dim()).map(|_| rng.gen_range(0.0..2.0)).collect();
                assert_jacobian_consistent(&p, &u, 1e-7);
            }
        }
    }

    #[test]
    fn test_contractions_match_jacobian_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(62);
        for p in all_problems() {
            for _ in 0..20 {
                let u: Vec<f64> = (0..p.dim()).map(|_| rng.gen_range(-1.0..2.0)).collect();
                let w: Vec<f64> = (0..p.dim()).map(|_| rng.gen_range(-1.0..1.0)).collect();
                assert_contraction_consistent(&p, &u, &w);
            }
        }
    }

    #[test]
    fn test_robertson_mass_is_conserved_pointwise() {
        let rob = robertson::<f64>();
        let mut rng = ChaCha8Rng::seed_from_u64(63);
        for _ in 0..50 {
            let u: Vec<f64> = (0..3).map(|_| rng.gen_range(0.0..1.5)).collect();
            let r = eval_rhs(rob.system.as_ref(), &u);
            let total: f64 = r.iter().sum();
            // Large individual terms (up to ~7e7) cancel; allow rounding.
            assert!(total.abs() <= 1e-8, "sum of rates {total} at {u:?}");
        }
    }

    #[test]
    fn test_ozone_exchange_pair_is_conserved() {
        let oz = ozone::<f64>();
        let mut rng = ChaCha8Rng::seed_from_u64(64);
        for _ in 0..50 {
            let u: Vec<f64> = (0..8).map(|_| rng.gen_range(-1.0..2.0)).collect();
            let r = eval_rhs(oz.system.as_ref(), &u);
            assert!(
                (r[6] + r[7]).abs() <= 1e-12,
                "rows 7+8 should cancel: {} + {}",
                r[6],
                r[7]
            );
        }
    }

    #[test]
    fn test_robertson_mass_drift_along_trajectory() {
        let rob = robertson::<f64>();
        let params = SchemeParams::default();
        let cfg = NewtonConfig::default();
        let dt = 1e-2;
        let mut u = rob.u0.clone();
        for _ in 0..1000 {
            let (next, _) = step_implicit_tsfo(rob.system.as_ref(), &u, dt, &params, &cfg)
                .expect("step converges");
            u = next;
        }
        let total: f64 = u.iter().sum();
        assert!(
            (total - 1.0).abs() <= 1e-10,
            "mass drift after 1000 steps: {}",
            total - 1.0
        );
        // Sanity: the first species has visibly decayed by t=10.
        assert!(u[0] < 1.0 && u[0] > 0.8, "u1(10) = {}", u[0]);
    }

    #[test]
    fn test_linear_exact_solution_satisfies_the_ode() {
        let linear = linear_separated::<f64>();
        let exact = linear.exact.as_ref().unwrap();
        for &t in &[0.0005, 0.001, 0.01, 0.1, 1.0] {
            let u = exact(t);
            let r = eval_rhs(linear.system.as_ref(), &u);
            // Analytic derivative of the closed form.
            let expect = [(-1000.0 * t).exp(), (-t).exp()];
            assert!((r[0] - expect[0]).abs() <= 1e-12, "t={t}: {} vs {}", r[0], expect[0]);
            assert!((r[1] - expect[1]).abs() <= 1e-14, "t={t}: {} vs {}", r[1], expect[1]);
        }
        // Long-time limit approaches the steady state (0.001, 1).
        let tail = exact(50.0);
        assert!((tail[0] - 0.001).abs() <= 1e-18);
        assert!((tail[1] - 1.0).abs() <= 1e-18);
    }

    #[test]
    fn test_robertson_half_step_prediction_wiring() {
        // One explicit half-step prediction from the initial state: the
        // predictor is u + (dt/2)·L + (dt²/8)·J·L with L = (−0.04, 0.04, 0)
        // and J·L = (0.0016, −0.0016, 0).
        let rob = robertson::<f64>();
        let dt = 0.1;
        let predicted = crate::tsfo::predict_stage1(rob.system.as_ref(), &rob.u0, dt).unwrap();
        let expect = [
            1.0 + 0.05 * (-0.04) + (dt * dt / 8.0) * 0.0016,
            0.05 * 0.04 + (dt * dt / 8.0) * (-0.0016),
            0.0,
        ];
        for (a, b) in predicted.iter().zip(&expect) {
            assert!((a - b).abs() <= 1e-16, "{a} vs {b}");
        }
    }

    #[test]
    fn test_robertson_stage_one_newton_converges_quickly() {
        // The initial state sits in the fast transient (the second species
        // rushes toward its quasi-equilibrium ~3.6e-5 within ~5e-4 s), so
        // the explicit predictor overshoots and Newton needs a few extra
        // corrections: 8 measured, bounded at 10 for headroom.
        let rob = robertson::<f64>();
        let res = newton_stage1(
            rob.system.as_ref(),
            &rob.u0,
            1e-2,
            &NewtonConfig::default(),
        )
        .expect("stage-1 solve at the initial state");
        assert!(res.iters <= 10, "iters = {}", res.iters);
        let total: f64 = res.u.iter().sum();
        assert!((total - 1.0).abs() <= 1e-13);
    }

    #[test]
    fn test_double_double_instantiation_matches_f64() {
        let p64 = linear_separated::<f64>();
        let pdd = linear_separated::<DoubleDouble>();
        let t = 0.25;
        let e64 = (p64.exact.as_ref().unwrap())(t);
        let edd = (pdd.exact.as_ref().unwrap())(DoubleDouble::from_f64(t));
        for (a, b) in e64.iter().zip(&edd) {
            assert!((a - b.to_f64()).abs() <= 1e-15);
        }
        // The extended-precision right-hand side agrees with the analytic
        // derivative far below f64 resolution.
        let r = eval_rhs(pdd.system.as_ref(), &edd);
        let expect = (-DoubleDouble::from_f64(t)).exp();
        assert!(((r[1] - expect) / expect).abs().to_f64() <= 1e-28);
    }

    #[test]
    fn test_vdp_parameter_is_respected() {
        let gentle = van_der_pol::<f64>(0.5);
        let j = eval_jac(gentle.system.as_ref(), &[2.0, 0.0]);
        assert_eq!(j[(1, 1)], -1.5);
    }
}

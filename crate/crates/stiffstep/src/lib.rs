//! Two-stage fourth-order implicit time integration for stiff ODE systems.
//!
//! The crate implements an A-stable, L-stable two-stage scheme that augments
//! the usual right-hand side evaluations with temporal derivatives
//! `G = L_u·L`, together with:
//!
//! * the order-condition algebra that pins the stage weights
//!   ([`order_conditions`]),
//! * an amplification-factor analysis on the imaginary axis that locates the
//!   A-stable parameter range ([`stability`]),
//! * Newton-based steppers for the implicit stages and explicit companions
//!   ([`tsfo`]),
//! * classical fourth-order baselines for comparison ([`baselines`]),
//! * a small suite of stiff benchmark problems ([`problems`]), and
//! * a convergence-study harness with cached reference solutions
//!   ([`harness`]).
//!
//! Everything numeric is generic over [`scalar::Scalar`]; `f64` is the
//! default working precision and [`scalar::DoubleDouble`] is available when
//! terminal errors below the double-precision roundoff floor must be
//! resolved.

pub mod baselines;
pub mod harness;
pub mod linalg;
pub mod model;
pub mod order_conditions;
pub mod problems;
pub mod scalar;
pub mod stability;
pub mod tsfo;

pub use order_conditions::SchemeParams;
pub use scalar::{DoubleDouble, Scalar};

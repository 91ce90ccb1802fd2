//! Order conditions and coefficient families for the two-stage scheme.
//!
//! The integrator advances `u' = L(u)` in two implicit stages that combine
//! right-hand side values `L` and temporal derivatives `G = L_u·L`:
//!
//! ```text
//! stage 1 (half step):  v = u + dt·(a1·L(u) + a2·L(v)) + dt²·(b1·G(u) + b2·G(v))
//! stage 2 (full step):  w = u + dt·(a3·L(u) + a4·L(v) + a5·L(w))
//!                             + dt²·(b3·G(u) + b4·G(v) + b5·G(w))
//! ```
//!
//! Fourth-order accuracy pins the half-step weights uniquely and leaves a
//! two-parameter family `(c, d)` for the full step. This module exposes the
//! closed forms, the residuals of the defining order conditions (so tests
//! can verify them independently), and the validated parameter set used by
//! the steppers.

use crate::scalar::Scalar;

/// Weights of the implicit half step. `solve_stage1` returns the unique
/// fourth-order choice.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Stage1Coefficients<S = f64> {
    pub a1: S,
    pub a2: S,
    pub b1: S,
    pub b2: S,
}

/// Weights of the implicit full step; one member of the two-parameter
/// fourth-order family produced by [`stage2_family`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Stage2Coefficients<S = f64> {
    pub a3: S,
    pub a4: S,
    pub a5: S,
    pub b3: S,
    pub b4: S,
    pub b5: S,
}

/// The unique fourth-order half-step weights:
/// `a1 = a2 = 1/4`, `b1 = 1/48`, `b2 = -1/48`.
pub fn solve_stage1() -> Stage1Coefficients {
    Stage1Coefficients {
        a1: 0.25,
        a2: 0.25,
        b1: 1.0 / 48.0,
        b2: -1.0 / 48.0,
    }
}

/// Half-step weights in an arbitrary working precision, built from exact
/// integer ratios.
pub fn stage1_coefficients_in<S: Scalar>() -> Stage1Coefficients<S> {
    Stage1Coefficients {
        a1: S::ratio(1, 4),
        a2: S::ratio(1, 4),
        b1: S::ratio(1, 48),
        b2: S::ratio(-1, 48),
    }
}

/// The two-parameter family of fourth-order full-step weights:
///
/// ```text
/// a3 = 1/6 + 4c + d/2     b3 = c
/// a4 = 2/3 - 8c + 2d      b4 = d
/// a5 = 1/6 + 4c - 5d/2    b5 = d/2 - c
/// ```
///
/// `(c, d) = (0, 0)` degenerates to Simpson weights `(1/6, 2/3, 1/6)` with
/// no temporal-derivative terms.
pub fn stage2_family(c: f64, d: f64) -> Stage2Coefficients {
    stage2_family_in::<f64>(c, d)
}

/// [`stage2_family`] in an arbitrary working precision.
pub fn stage2_family_in<S: Scalar>(c: S, d: S) -> Stage2Coefficients<S> {
    let four = S::from_i64(4);
    let two = S::from_i64(2);
    Stage2Coefficients {
        a3: S::ratio(1, 6) + four * c + d / two,
        a4: S::ratio(2, 3) - S::from_i64(8) * c + two * d,
        a5: S::ratio(1, 6) + four * c - S::ratio(5, 2) * d,
        b3: c,
        b4: d,
        b5: d / two - c,
    }
}

/// Residuals of the four half-step order conditions. All four vanish (to
/// rounding) exactly for the weights of [`solve_stage1`].
pub fn stage1_residuals(k: &Stage1Coefficients) -> [f64; 4] {
    [
        k.a1 + k.a2 - 0.5,
        k.a2 / 2.0 + k.b1 + k.b2 - 1.0 / 8.0,
        k.a2 / 8.0 + k.b2 / 2.0 - 1.0 / 48.0,
        k.a2 / 48.0 + k.b2 / 8.0 - 1.0 / 384.0,
    ]
}

/// Residuals of the four full-step order conditions (the half-step value is
/// assumed fourth-order accurate). All four vanish for every member of
/// [`stage2_family`].
pub fn stage2_residuals(k: &Stage2Coefficients) -> [f64; 4] {
    [
        k.a3 + k.a4 + k.a5 - 1.0,
        k.a4 / 2.0 + k.a5 + k.b3 + k.b4 + k.b5 - 0.5,
        k.a4 / 8.0 + k.a5 / 2.0 + k.b4 / 2.0 + k.b5 - 1.0 / 6.0,
        k.a4 / 48.0 + k.a5 / 6.0 + k.b4 / 8.0 + k.b5 / 2.0 - 1.0 / 24.0,
    ]
}

/// Lower end of the parameter range where the full scheme is A-stable
/// (with `d = -c`).
pub const A_STABLE_C_MIN: f64 = 0.018824;
/// Upper end of the A-stable parameter range.
pub const A_STABLE_C_MAX: f64 = 0.045589;
/// Default damping parameter: interior of the A-stable range, chosen for
/// the smallest high-order defect.
pub const DEFAULT_C: f64 = 0.018924;

#[derive(Clone, Debug, PartialEq)]
pub enum ParamError {
    /// `c` lies outside the verified A-stable range.
    OutsideStableRange { c: f64 },
}

impl std::fmt::Display for ParamError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ParamError::OutsideStableRange { c } => write!(
                f,
                "c = {c} is outside the A-stable range [{A_STABLE_C_MIN}, {A_STABLE_C_MAX}]"
            ),
        }
    }
}

impl std::error::Error for ParamError {}

/// Scheme parameters handed to the steppers and the stability analysis.
///
/// `a_stable_mode` records whether the parameters were constructed through
/// the validated [`SchemeParams::a_stable`] path (`d = -c`, `c` inside the
/// verified range). [`SchemeParams::general`] accepts any `(c, d)` pair and
/// leaves the flag off; such schemes are still fourth-order but carry no
/// stability guarantee.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SchemeParams {
    c: f64,
    d: f64,
    a_stable_mode: bool,
}

impl SchemeParams {
    /// Damped A-stable scheme with `d = -c`; rejects `c` outside the
    /// verified range.
    pub fn a_stable(c: f64) -> Result<Self, ParamError> {
        if !(A_STABLE_C_MIN..=A_STABLE_C_MAX).contains(&c) {
            return Err(ParamError::OutsideStableRange { c });
        }
        Ok(Self {
            c,
            d: -c,
            a_stable_mode: true,
        })
    }

    /// Arbitrary member of the fourth-order family; no stability claim.
    pub fn general(c: f64, d: f64) -> Self {
        Self {
            c,
            d,
            a_stable_mode: false,
        }
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn d(&self) -> f64 {
        self.d
    }

    pub fn a_stable_mode(&self) -> bool {
        self.a_stable_mode
    }

    pub fn stage2_coefficients<S: Scalar>(&self) -> Stage2Coefficients<S> {
        stage2_family_in(S::from_f64(self.c), S::from_f64(self.d))
    }
}

impl Default for SchemeParams {
    fn default() -> Self {
        Self::a_stable(DEFAULT_C).expect("default damping parameter is in range")
    }
}

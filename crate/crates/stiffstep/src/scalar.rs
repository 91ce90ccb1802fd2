//! Scalar abstraction over the working precision.
//!
//! All numerical kernels (linear algebra, steppers, benchmark problems,
//! error measurement) are generic over [`Scalar`]. The default instantiation
//! is `f64`. A compensated double-double type, [`DoubleDouble`], is provided
//! for runs whose terminal errors sit at or below the `f64` roundoff floor
//! (roughly 1e-14 for unit-scale states): convergence tables on problems with
//! an exact solution can then be resolved down to ~1e-19 instead of drowning
//! in accumulated rounding noise.
//!
//! The trait is deliberately small: arithmetic, ordering, a handful of
//! elementary functions, and conversions. Tolerances and reporting stay in
//! plain `f64` throughout the crate; only state vectors, matrices and step
//! arithmetic use `S`.

use std::fmt;
use std::ops::{Add, AddAssign, Div, DivAssign, Mul, MulAssign, Neg, Sub, SubAssign};

/// Real scalar of at least IEEE-754 double precision.
pub trait Scalar:
    Copy
    + PartialEq
    + PartialOrd
    + fmt::Debug
    + fmt::Display
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + AddAssign
    + SubAssign
    + MulAssign
    + DivAssign
    + Send
    + Sync
    + 'static
{
    fn zero() -> Self;
    fn one() -> Self;

    /// Embeds an `f64` exactly (the low-order part, if any, is zero).
    fn from_f64(x: f64) -> Self;

    /// Nearest `f64`; used for reporting, never inside step arithmetic.
    fn to_f64(self) -> f64;

    fn abs(self) -> Self;
    fn sqrt(self) -> Self;
    fn exp(self) -> Self;
    fn is_finite(self) -> bool;

    /// Larger of the two operands (either one if equal; `other` if unordered).
    fn max(self, other: Self) -> Self {
        if self > other {
            self
        } else {
            other
        }
    }

    /// Unit roundoff of this representation.
    fn epsilon() -> f64;

    /// Exact embedding of a small integer.
    fn from_i64(n: i64) -> Self {
        debug_assert!(n.abs() < (1 << 53));
        Self::from_f64(n as f64)
    }

    /// The rational n/d to full working precision.
    fn ratio(n: i64, d: i64) -> Self {
        Self::from_i64(n) / Self::from_i64(d)
    }
}

impl Scalar for f64 {
    fn zero() -> Self {
        0.0
    }
    fn one() -> Self {
        1.0
    }
    fn from_f64(x: f64) -> Self {
        x
    }
    fn to_f64(self) -> f64 {
        self
    }
    fn abs(self) -> Self {
        f64::abs(self)
    }
    fn sqrt(self) -> Self {
        f64::sqrt(self)
    }
    fn exp(self) -> Self {
        f64::exp(self)
    }
    fn is_finite(self) -> bool {
        f64::is_finite(self)
    }
    fn max(self, other: Self) -> Self {
        f64::max(self, other)
    }
    fn epsilon() -> f64 {
        f64::EPSILON
    }
}

// ---------------------------------------------------------------------------
// Double-double arithmetic
// ---------------------------------------------------------------------------

/// Unevaluated sum `hi + lo` of two doubles with `|lo| <= ulp(hi)/2`,
/// giving roughly 106 bits (~32 decimal digits) of significand.
///
/// The error-free transformations below are the classical ones (Knuth's
/// two-sum, FMA-based two-product); add/mul/div/sqrt follow the standard
/// accurate double-double algorithms.
#[derive(Clone, Copy, Debug, Default, PartialEq, PartialOrd)]
pub struct DoubleDouble {
    pub hi: f64,
    pub lo: f64,
}

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    let err = (a - (s - bb)) + (b - bb);
    (s, err)
}

/// Requires |a| >= |b| (or a == 0).
#[inline]
fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let err = b - (s - a);
    (s, err)
}

#[inline]
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    let err = a.mul_add(b, -p);
    (p, err)
}

impl DoubleDouble {
    pub const ZERO: Self = Self { hi: 0.0, lo: 0.0 };
    pub const ONE: Self = Self { hi: 1.0, lo: 0.0 };

    /// ln(2) to double-double precision.
    const LN_2: Self = Self {
        hi: 0.693_147_180_559_945_3,
        lo: 2.319_046_813_846_299_6e-17,
    };

    pub fn new(hi: f64, lo: f64) -> Self {
        let (hi, lo) = quick_two_sum(hi, lo);
        Self { hi, lo }
    }
}

impl From<f64> for DoubleDouble {
    fn from(x: f64) -> Self {
        Self { hi: x, lo: 0.0 }
    }
}

impl fmt::Display for DoubleDouble {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        // Shown at f64 resolution; the low part is diagnostic only.
        write!(f, "{}", self.hi)
    }
}

impl Neg for DoubleDouble {
    type Output = Self;
    fn neg(self) -> Self {
        Self {
            hi: -self.hi,
            lo: -self.lo,
        }
    }
}

impl Add for DoubleDouble {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        let (s1, s2) = two_sum(self.hi, o.hi);
        let (t1, t2) = two_sum(self.lo, o.lo);
        let s2 = s2 + t1;
        let (s1, s2) = quick_two_sum(s1, s2);
        let s2 = s2 + t2;
        let (hi, lo) = quick_two_sum(s1, s2);
        Self { hi, lo }
    }
}

impl Sub for DoubleDouble {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        self + (-o)
    }
}

impl Mul for DoubleDouble {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        let (p1, p2) = two_prod(self.hi, o.hi);
        let p2 = p2 + (self.hi * o.lo + self.lo * o.hi);
        let (hi, lo) = quick_two_sum(p1, p2);
        Self { hi, lo }
    }
}

impl Div for DoubleDouble {
    type Output = Self;
    fn div(self, o: Self) -> Self {
        // Three rounds of long division; accurate to the last few ulps.
        let q1 = self.hi / o.hi;
        if !q1.is_finite() {
            return Self { hi: q1, lo: 0.0 };
        }
        let r = self - o * Self::from(q1);
        let q2 = r.hi / o.hi;
        let r = r - o * Self::from(q2);
        let q3 = r.hi / o.hi;
        let (s, e) = quick_two_sum(q1, q2);
        Self { hi: s, lo: e } + Self::from(q3)
    }
}

impl AddAssign for DoubleDouble {
    fn add_assign(&mut self, o: Self) {
        *self = *self + o;
    }
}
impl SubAssign for DoubleDouble {
    fn sub_assign(&mut self, o: Self) {
        *self = *self - o;
    }
}
impl MulAssign for DoubleDouble {
    fn mul_assign(&mut self, o: Self) {
        *self = *self * o;
    }
}
impl DivAssign for DoubleDouble {
    fn div_assign(&mut self, o: Self) {
        *self = *self / o;
    }
}

impl Scalar for DoubleDouble {
    fn zero() -> Self {
        Self::ZERO
    }
    fn one() -> Self {
        Self::ONE
    }
    fn from_f64(x: f64) -> Self {
        Self::from(x)
    }
    fn to_f64(self) -> f64 {
        self.hi
    }

    fn abs(self) -> Self {
        if self.hi < 0.0 || (self.hi == 0.0 && self.lo < 0.0) {
            -self
        } else {
            self
        }
    }

    fn sqrt(self) -> Self {
        if self.hi == 0.0 && self.lo == 0.0 {
            return Self::ZERO;
        }
        if self.hi < 0.0 {
            return Self {
                hi: f64::NAN,
                lo: f64::NAN,
            };
        }
        // One Newton correction on top of the f64 square root doubles the
        // number of correct digits, which is all double-double can hold.
        let inv = 1.0 / self.hi.sqrt();
        let approx = self.hi * inv;
        let approx_dd = Self::from(approx);
        let resid = self - approx_dd * approx_dd;
        let corr = resid.hi * (inv * 0.5);
        let (hi, lo) = quick_two_sum(approx, corr);
        Self { hi, lo }
    }

    fn exp(self) -> Self {
        if !self.hi.is_finite() {
            return Self::from(self.hi.exp());
        }
        if self.hi > 709.0 {
            return Self::from(f64::INFINITY);
        }
        if self.hi < -745.0 {
            return Self::ZERO;
        }
        // x = k ln 2 + r with |r| <= ln(2)/2, then exp(r) by Taylor series.
        let k = (self.hi / Self::LN_2.hi).round();
        let r = self - Self::LN_2 * Self::from(k);
        let mut term = Self::ONE;
        let mut sum = Self::ONE;
        for n in 1..64 {
            term = term * r / Self::from(n as f64);
            sum += term;
            if term.hi.abs() <= 1e-35 * sum.hi.abs() {
                break;
            }
        }
        // Scaling by 2^k is exact.
        let scale = 2f64.powi(k as i32);
        Self {
            hi: sum.hi * scale,
            lo: sum.lo * scale,
        }
    }

    fn is_finite(self) -> bool {
        self.hi.is_finite() && self.lo.is_finite()
    }

    fn epsilon() -> f64 {
        // 2^-104: relative rounding unit of a normalised double-double.
        4.930_380_657_631_324e-32
    }
}

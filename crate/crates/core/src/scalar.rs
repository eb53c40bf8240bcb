//! Scalar abstraction: every construction in this crate is ordinary field
//! arithmetic plus comparisons, so the core is generic over the number type.
//! Two instantiations are supported: `f64` for throughput and
//! arbitrary-precision rationals for exact identities.

use std::fmt::{Debug, Display};

use num_rational::BigRational;
use num_traits::{FromPrimitive, Num, Signed, ToPrimitive, Zero};

/// Field scalar with order, signs, and conversions from/to primitives.
pub trait Scalar:
    Clone + PartialOrd + Num + Signed + FromPrimitive + ToPrimitive + Debug + Display + 'static
{
    /// Exact small rational `num/den`; `den` must be nonzero.
    fn from_ratio(num: i64, den: i64) -> Self;

    /// Lossy view for logging, log-space work, and plotting.
    fn to_f64_lossy(&self) -> f64;

    fn half(&self) -> Self {
        self.clone() / Self::from_ratio(2, 1)
    }

    /// Nonnegative integer power by repeated squaring.
    fn powu(&self, mut exp: u32) -> Self {
        let mut base = self.clone();
        let mut acc = Self::one();
        while exp > 0 {
            if exp & 1 == 1 {
                acc = acc * base.clone();
            }
            base = base.clone() * base;
            exp >>= 1;
        }
        acc
    }

    /// Natural log of a positive scalar, `-inf` for zero.
    fn ln_lossy(&self) -> f64;

    /// Largest integer `<= self`; callers keep values within i64 range.
    fn floor_i64(&self) -> i64;

    /// Smallest integer `>= self`.
    fn ceil_i64(&self) -> i64;
}

impl Scalar for f64 {
    fn from_ratio(num: i64, den: i64) -> Self {
        num as f64 / den as f64
    }

    fn to_f64_lossy(&self) -> f64 {
        *self
    }

    fn ln_lossy(&self) -> f64 {
        self.ln()
    }

    fn floor_i64(&self) -> i64 {
        self.floor() as i64
    }

    fn ceil_i64(&self) -> i64 {
        self.ceil() as i64
    }
}

impl Scalar for BigRational {
    fn from_ratio(num: i64, den: i64) -> Self {
        BigRational::new(num.into(), den.into())
    }

    fn to_f64_lossy(&self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// Exact up to f64 rounding even when the value itself underflows f64:
    /// ln(n) - ln(d) stays finite as long as each part converts.
    fn ln_lossy(&self) -> f64 {
        if self.is_zero() {
            return f64::NEG_INFINITY;
        }
        ln_big(self.numer()) - ln_big(self.denom())
    }

    fn floor_i64(&self) -> i64 {
        self.floor().to_integer().to_i64().expect("floor fits in i64")
    }

    fn ceil_i64(&self) -> i64 {
        self.ceil().to_integer().to_i64().expect("ceil fits in i64")
    }
}

fn ln_big(n: &num_bigint::BigInt) -> f64 {
    let bits = n.bits();
    if bits <= 1020 {
        return n.to_f64().expect("small BigInt converts").abs().ln();
    }
    // Shift down so the mantissa fits in f64 range, then add back the scale.
    let shift = bits - 900;
    let reduced = n >> shift;
    reduced.to_f64().expect("shifted BigInt converts").abs().ln()
        + shift as f64 * std::f64::consts::LN_2
}

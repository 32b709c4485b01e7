//! Scalar abstraction shared by the coefficient maps and polynomial fields.
//!
//! Two arithmetic modes are supported and never mixed inside one evaluation:
//! exact rationals (`Rat`) for identities that must hold exactly, and complex
//! floats (`Complex64`) for oscillatory coefficients. `f64` is provided for
//! the plain numerical integrators.

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::str::FromStr;

/// Exact rational scalar.
pub type Rat = BigRational;

/// Ring operations needed by coefficient maps, polynomials and series
/// evaluation. `EXACT` distinguishes the rational mode, where `approx_eq`
/// ignores the tolerance and compares exactly.
pub trait Scalar:
    Clone
    + PartialEq
    + fmt::Debug
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Neg<Output = Self>
    + Zero
    + One
{
    const EXACT: bool;

    fn from_rat(r: &Rat) -> Self;

    fn from_int(n: i64) -> Self {
        Self::from_rat(&rat(n, 1))
    }

    /// Magnitude, used for diagnostics and tolerance floors.
    fn norm(&self) -> f64;

    /// Mode-appropriate equality: exact for rationals, `tol`-relative with an
    /// absolute floor for floating scalars.
    fn approx_eq(&self, other: &Self, tol: f64) -> bool;

    fn powu(&self, n: u32) -> Self {
        let mut acc = Self::one();
        for _ in 0..n {
            acc = acc * self.clone();
        }
        acc
    }
}

impl Scalar for Rat {
    const EXACT: bool = true;

    fn from_rat(r: &Rat) -> Self {
        r.clone()
    }

    fn norm(&self) -> f64 {
        self.abs().to_f64().unwrap_or(f64::INFINITY)
    }

    fn approx_eq(&self, other: &Self, _tol: f64) -> bool {
        self == other
    }
}

impl Scalar for Complex64 {
    const EXACT: bool = false;

    fn from_rat(r: &Rat) -> Self {
        Complex64::new(rat_to_f64(r), 0.0)
    }

    fn norm(&self) -> f64 {
        num_complex::Complex::norm(*self)
    }

    fn approx_eq(&self, other: &Self, tol: f64) -> bool {
        let scale = 1.0_f64.max(self.norm()).max(other.norm());
        (self - other).norm() <= tol * scale
    }
}

impl Scalar for f64 {
    const EXACT: bool = false;

    fn from_rat(r: &Rat) -> Self {
        rat_to_f64(r)
    }

    fn norm(&self) -> f64 {
        self.abs()
    }

    fn approx_eq(&self, other: &Self, tol: f64) -> bool {
        let scale = 1.0_f64.max(self.abs()).max(other.abs());
        (self - other).abs() <= tol * scale
    }
}

/// Shorthand rational constructor.
pub fn rat(num: i64, den: i64) -> Rat {
    Rat::new(BigInt::from(num), BigInt::from(den))
}

pub fn rat_to_f64(r: &Rat) -> f64 {
    r.to_f64().unwrap_or_else(|| {
        let n = r.numer().to_f64().unwrap_or(f64::NAN);
        let d = r.denom().to_f64().unwrap_or(f64::NAN);
        n / d
    })
}

/// Exact rational value of a float (every finite f64 is rational).
pub fn rat_from_f64(x: f64) -> Rat {
    Rat::from_float(x).expect("finite float expected")
}

/// Parses `"p/q"` or an integer string into an exact rational.
pub fn parse_rat(s: &str) -> Result<Rat, String> {
    let s = s.trim();
    match s.split_once('/') {
        Some((num, den)) => {
            let n = BigInt::from_str(num.trim()).map_err(|e| format!("bad numerator {num:?}: {e}"))?;
            let d = BigInt::from_str(den.trim()).map_err(|e| format!("bad denominator {den:?}: {e}"))?;
            if d.is_zero() {
                return Err(format!("zero denominator in {s:?}"));
            }
            Ok(Rat::new(n, d))
        }
        None => {
            let n = BigInt::from_str(s).map_err(|e| format!("bad rational {s:?}: {e}"))?;
            Ok(Rat::from_integer(n))
        }
    }
}

/// Formats a rational as `"p"` or `"p/q"`, the interchange form used in JSON.
pub fn format_rat(r: &Rat) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// n! as a rational.
pub fn factorial(n: u32) -> Rat {
    let mut acc = BigInt::one();
    for k in 2..=n as u64 {
        acc *= BigInt::from(k);
    }
    Rat::from_integer(acc)
}

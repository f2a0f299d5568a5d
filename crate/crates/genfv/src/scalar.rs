//! A minimal field abstraction so the moment recursion and obstruction
//! formulas are written once and run both in floating point and in exact
//! symbolic arithmetic.

use crate::ratfun::RatFun;
use std::ops::{Add, Div, Mul, Neg, Sub};

pub trait Scalar:
    Clone
    + PartialEq
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    fn zero() -> Self;
    fn one() -> Self;
    fn from_ratio(n: i64, d: i64) -> Self;
    fn is_zero(&self) -> bool;
    /// Best-effort float view, used only for reporting and sign checks.
    fn to_f64(&self) -> f64;

    fn from_int(n: i64) -> Self {
        Self::from_ratio(n, 1)
    }
}

impl Scalar for f64 {
    fn zero() -> Self {
        0.0
    }
    fn one() -> Self {
        1.0
    }
    fn from_ratio(n: i64, d: i64) -> Self {
        n as f64 / d as f64
    }
    fn is_zero(&self) -> bool {
        *self == 0.0
    }
    fn to_f64(&self) -> f64 {
        *self
    }
}

impl Scalar for RatFun {
    fn zero() -> Self {
        RatFun::zero()
    }
    fn one() -> Self {
        RatFun::one()
    }
    fn from_ratio(n: i64, d: i64) -> Self {
        RatFun::from_ratio(n, d)
    }
    fn is_zero(&self) -> bool {
        RatFun::is_zero(self)
    }
    fn to_f64(&self) -> f64 {
        // Meaningful only for constants; callers needing a value at a
        // parameter point use `eval` instead.
        self.eval_f64(0.0)
    }
}

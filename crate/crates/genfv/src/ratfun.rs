//! Rational functions in one symbolic parameter over exact rationals.
//!
//! Canonical form: numerator and denominator coprime, denominator monic.
//! Equality on canonical forms is exact, so "this obstruction is the zero
//! rational function" is a decidable statement rather than a numeric check.

use crate::error::{Error, Result};
use crate::poly::{rat, Poly, Rat};
use num_traits::Zero;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

#[derive(Clone, PartialEq, Eq)]
pub struct RatFun {
    num: Poly,
    den: Poly,
}

impl RatFun {
    pub fn new(num: Poly, den: Poly) -> Result<Self> {
        if den.is_zero() {
            return Err(Error::DivisionByZero);
        }
        Ok(Self::canonical(num, den))
    }

    fn canonical(num: Poly, den: Poly) -> Self {
        if num.is_zero() {
            return RatFun {
                num: Poly::zero(),
                den: Poly::one(),
            };
        }
        let g = num.gcd(&den);
        let (num, den) = if g.degree().unwrap_or(0) > 0 {
            (num.div_rem(&g).0, den.div_rem(&g).0)
        } else {
            (num, den)
        };
        let lc = den.leading_coeff();
        RatFun {
            num: num.scale(&lc.recip()),
            den: den.monic(),
        }
    }

    pub fn zero() -> Self {
        RatFun {
            num: Poly::zero(),
            den: Poly::one(),
        }
    }

    pub fn one() -> Self {
        RatFun::from_poly(Poly::one())
    }

    pub fn from_poly(p: Poly) -> Self {
        RatFun {
            num: p,
            den: Poly::one(),
        }
    }

    pub fn constant(c: Rat) -> Self {
        RatFun::from_poly(Poly::constant(c))
    }

    pub fn from_ratio(n: i64, d: i64) -> Self {
        RatFun::constant(rat(n, d))
    }

    /// The symbolic parameter itself.
    pub fn symbol() -> Self {
        RatFun::from_poly(Poly::x())
    }

    pub fn numerator(&self) -> &Poly {
        &self.num
    }

    pub fn denominator(&self) -> &Poly {
        &self.den
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    /// Exact evaluation at a rational parameter value.
    pub fn eval(&self, x: &Rat) -> Result<Rat> {
        let d = self.den.eval(x);
        if d.is_zero() {
            return Err(Error::VanishingDenominator);
        }
        Ok(self.num.eval(x) / d)
    }

    pub fn eval_f64(&self, x: f64) -> f64 {
        self.num.eval_f64(x) / self.den.eval_f64(x)
    }

    pub fn recip(&self) -> Result<RatFun> {
        if self.is_zero() {
            return Err(Error::DivisionByZero);
        }
        Ok(Self::canonical(self.den.clone(), self.num.clone()))
    }

    /// If `self == c * other` for a nonzero rational constant `c`, return `c`.
    pub fn proportionality_constant(&self, other: &RatFun) -> Option<Rat> {
        if self.is_zero() || other.is_zero() {
            return None;
        }
        // Cross-multiplied forms must agree up to a constant; in canonical
        // form that reduces to identical denominators and proportional
        // numerators.
        let cross_a = &self.num * &other.den;
        let cross_b = &other.num * &self.den;
        let ca = cross_a.leading_coeff();
        let cb = cross_b.leading_coeff();
        let c = ca / cb;
        if cross_a == cross_b.scale(&c) {
            Some(c)
        } else {
            None
        }
    }

    /// Substitute another rational function for the parameter.
    pub fn compose(&self, inner: &RatFun) -> Result<RatFun> {
        let mut num_acc = RatFun::zero();
        for (k, c) in self.num.coeffs().iter().enumerate() {
            num_acc = num_acc + RatFun::constant(c.clone()) * inner.pow(k as u32);
        }
        let mut den_acc = RatFun::zero();
        for (k, c) in self.den.coeffs().iter().enumerate() {
            den_acc = den_acc + RatFun::constant(c.clone()) * inner.pow(k as u32);
        }
        if den_acc.is_zero() {
            return Err(Error::VanishingDenominator);
        }
        Ok(num_acc / den_acc)
    }

    pub fn pow(&self, mut n: u32) -> RatFun {
        let mut base = self.clone();
        let mut acc = RatFun::one();
        while n > 0 {
            if n & 1 == 1 {
                acc = &acc * &base;
            }
            base = &base * &base;
            n >>= 1;
        }
        acc
    }
}

impl fmt::Debug for RatFun {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for RatFun {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.den == Poly::one() {
            write!(f, "{}", self.num)
        } else {
            write!(f, "({}) / ({})", self.num, self.den)
        }
    }
}

impl Add for &RatFun {
    type Output = RatFun;
    fn add(self, rhs: &RatFun) -> RatFun {
        RatFun::canonical(
            &(&self.num * &rhs.den) + &(&rhs.num * &self.den),
            &self.den * &rhs.den,
        )
    }
}

impl Sub for &RatFun {
    type Output = RatFun;
    fn sub(self, rhs: &RatFun) -> RatFun {
        RatFun::canonical(
            &(&self.num * &rhs.den) - &(&rhs.num * &self.den),
            &self.den * &rhs.den,
        )
    }
}

impl Mul for &RatFun {
    type Output = RatFun;
    fn mul(self, rhs: &RatFun) -> RatFun {
        RatFun::canonical(&self.num * &rhs.num, &self.den * &rhs.den)
    }
}

impl Div for &RatFun {
    type Output = RatFun;
    fn div(self, rhs: &RatFun) -> RatFun {
        assert!(!rhs.is_zero(), "rational function division by zero");
        RatFun::canonical(&self.num * &rhs.den, &self.den * &rhs.num)
    }
}

impl Neg for &RatFun {
    type Output = RatFun;
    fn neg(self) -> RatFun {
        RatFun {
            num: -&self.num,
            den: self.den.clone(),
        }
    }
}

macro_rules! forward_owned {
    ($trait:ident, $method:ident) => {
        impl $trait for RatFun {
            type Output = RatFun;
            fn $method(self, rhs: RatFun) -> RatFun {
                (&self).$method(&rhs)
            }
        }
    };
}
forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);
forward_owned!(Div, div);

impl Neg for RatFun {
    type Output = RatFun;
    fn neg(self) -> RatFun {
        -&self
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::rat_to_f64;

    fn x() -> RatFun {
        RatFun::symbol()
    }

    #[test]
    fn cancellation_is_exact() {
        // (x^2 - 1)/(x - 1) == x + 1
        let a = RatFun::new(Poly::from_ints(&[-1, 0, 1]), Poly::from_ints(&[-1, 1])).unwrap();
        let b = RatFun::from_poly(Poly::from_ints(&[1, 1]));
        assert_eq!(a, b);
    }

    #[test]
    fn field_identities() {
        let f = (x() + RatFun::from_ratio(1, 2)) / (x() * x() - RatFun::one());
        let g = &f - &f;
        assert!(g.is_zero());
        let h = &f / &f;
        assert_eq!(h, RatFun::one());
    }

    #[test]
    fn proportionality() {
        let f = (x() + RatFun::one()) / (x() + RatFun::from_ratio(2, 1));
        let g = (&f) * &RatFun::from_ratio(3, 7);
        let c = g.proportionality_constant(&f).unwrap();
        assert_eq!(c, rat(3, 7));
        let unrelated = x() / (x() + RatFun::one());
        assert!(g.proportionality_constant(&unrelated).is_none());
    }

    #[test]
    fn eval_matches_f64() {
        let f = (x() * x() + RatFun::from_ratio(1, 3)) / (x() - RatFun::from_ratio(5, 1));
        let exact = f.eval(&rat(1, 2)).unwrap();
        assert!((rat_to_f64(&exact) - f.eval_f64(0.5)).abs() < 1e-14);
        assert!(f.eval(&rat(5, 1)).is_err());
    }
}

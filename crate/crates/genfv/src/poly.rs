//! Univariate polynomials with exact rational coefficients.
//!
//! Coefficients are stored lowest degree first with no trailing zeros, so the
//! zero polynomial is the empty coefficient vector. Degrees stay small (the
//! reversibility obstructions need at most degree ~20), so plain Euclidean
//! arithmetic over `BigRational` is fast enough and no modular tricks are
//! needed.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

pub type Rat = BigRational;

/// Build an exact rational from an integer pair.
pub fn rat(n: i64, d: i64) -> Rat {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

#[derive(Clone, PartialEq, Eq)]
pub struct Poly {
    coeffs: Vec<Rat>,
}

impl Poly {
    pub fn zero() -> Self {
        Poly { coeffs: Vec::new() }
    }

    pub fn one() -> Self {
        Poly::constant(Rat::one())
    }

    pub fn constant(c: Rat) -> Self {
        let mut p = Poly { coeffs: vec![c] };
        p.trim();
        p
    }

    /// The indeterminate `x`.
    pub fn x() -> Self {
        Poly {
            coeffs: vec![Rat::zero(), Rat::one()],
        }
    }

    /// From coefficients, lowest degree first.
    pub fn from_coeffs(coeffs: Vec<Rat>) -> Self {
        let mut p = Poly { coeffs };
        p.trim();
        p
    }

    /// Convenience constructor from integer coefficients, lowest degree first.
    pub fn from_ints(coeffs: &[i64]) -> Self {
        Poly::from_coeffs(coeffs.iter().map(|&c| rat(c, 1)).collect())
    }

    fn trim(&mut self) {
        while matches!(self.coeffs.last(), Some(c) if c.is_zero()) {
            self.coeffs.pop();
        }
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Degree, or `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn coeffs(&self) -> &[Rat] {
        &self.coeffs
    }

    pub fn coeff(&self, k: usize) -> Rat {
        self.coeffs.get(k).cloned().unwrap_or_else(Rat::zero)
    }

    pub fn leading_coeff(&self) -> Rat {
        self.coeffs.last().cloned().unwrap_or_else(Rat::zero)
    }

    pub fn eval(&self, x: &Rat) -> Rat {
        let mut acc = Rat::zero();
        for c in self.coeffs.iter().rev() {
            acc = acc * x + c;
        }
        acc
    }

    pub fn eval_f64(&self, x: f64) -> f64 {
        let mut acc = 0.0;
        for c in self.coeffs.iter().rev() {
            acc = acc * x + rat_to_f64(c);
        }
        acc
    }

    pub fn scale(&self, c: &Rat) -> Poly {
        if c.is_zero() {
            return Poly::zero();
        }
        Poly {
            coeffs: self.coeffs.iter().map(|a| a * c).collect(),
        }
    }

    /// Make the leading coefficient 1 (no-op on the zero polynomial).
    pub fn monic(&self) -> Poly {
        if self.is_zero() {
            return Poly::zero();
        }
        let lc = self.leading_coeff();
        self.scale(&lc.recip())
    }

    pub fn derivative(&self) -> Poly {
        if self.coeffs.len() <= 1 {
            return Poly::zero();
        }
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .skip(1)
            .map(|(k, c)| c * Rat::from(BigInt::from(k)))
            .collect();
        Poly::from_coeffs(coeffs)
    }

    /// Euclidean division: returns `(quotient, remainder)`.
    pub fn div_rem(&self, divisor: &Poly) -> (Poly, Poly) {
        assert!(!divisor.is_zero(), "polynomial division by zero");
        let dd = divisor.degree().unwrap();
        let mut rem = self.clone();
        let mut quot = vec![Rat::zero(); self.coeffs.len().saturating_sub(dd)];
        let lc = divisor.leading_coeff();
        while let Some(rd) = rem.degree() {
            if rd < dd {
                break;
            }
            let factor = rem.leading_coeff() / &lc;
            let shift = rd - dd;
            for (k, c) in divisor.coeffs.iter().enumerate() {
                let cur = rem.coeff(shift + k) - c * &factor;
                rem.set_coeff(shift + k, cur);
            }
            rem.trim();
            quot[shift] = factor;
        }
        (Poly::from_coeffs(quot), rem)
    }

    fn set_coeff(&mut self, k: usize, v: Rat) {
        if k >= self.coeffs.len() {
            self.coeffs.resize(k + 1, Rat::zero());
        }
        self.coeffs[k] = v;
    }

    /// Monic greatest common divisor by the Euclidean algorithm.
    pub fn gcd(&self, other: &Poly) -> Poly {
        let mut a = self.monic();
        let mut b = other.monic();
        while !b.is_zero() {
            let (_, r) = a.div_rem(&b);
            a = b;
            b = r.monic();
        }
        if a.is_zero() {
            Poly::zero()
        } else {
            a
        }
    }

    pub fn pow(&self, mut n: u32) -> Poly {
        let mut base = self.clone();
        let mut acc = Poly::one();
        while n > 0 {
            if n & 1 == 1 {
                acc = &acc * &base;
            }
            base = &base * &base;
            n >>= 1;
        }
        acc
    }

    /// Number of distinct real roots in the open interval `(lo, hi)`,
    /// counted exactly via a Sturm chain.
    pub fn count_roots_in(&self, lo: &Rat, hi: &Rat) -> usize {
        if self.is_zero() {
            return 0;
        }
        // Square-free part so repeated roots count once.
        let sf = {
            let d = self.derivative();
            if d.is_zero() {
                return 0; // nonzero constant
            }
            let g = self.gcd(&d);
            self.div_rem(&g).0
        };
        let mut chain = vec![sf.clone(), sf.derivative()];
        while !chain.last().unwrap().is_zero() {
            let n = chain.len();
            let (_, r) = chain[n - 2].div_rem(&chain[n - 1]);
            chain.push(-r);
        }
        chain.pop();
        let variations = |x: &Rat| {
            let mut count = 0usize;
            let mut prev: Option<bool> = None;
            for p in &chain {
                let v = p.eval(x);
                if v.is_zero() {
                    continue;
                }
                let sign = v.is_positive();
                if let Some(ps) = prev {
                    if ps != sign {
                        count += 1;
                    }
                }
                prev = Some(sign);
            }
            count
        };
        // Sturm counts roots in (lo, hi]; subtract a root at hi if present.
        let mut n = variations(lo).saturating_sub(variations(hi));
        if sf.eval(hi).is_zero() {
            n = n.saturating_sub(1);
        }
        n
    }

    /// Locate real roots in the open interval `(lo, hi)` to roughly `tol`
    /// accuracy. Root count comes from the exact Sturm chain; positions from
    /// recursive interval splitting.
    pub fn roots_in(&self, lo: &Rat, hi: &Rat, tol: f64) -> Vec<f64> {
        let total = self.count_roots_in(lo, hi);
        if total == 0 {
            return Vec::new();
        }
        let mut out = Vec::new();
        let mut stack = vec![(lo.clone(), hi.clone(), total)];
        while let Some((a, b, n)) = stack.pop() {
            let fa = rat_to_f64(&a);
            let fb = rat_to_f64(&b);
            if fb - fa < tol {
                for _ in 0..n {
                    out.push(0.5 * (fa + fb));
                }
                continue;
            }
            let mid: Rat = (&a + &b) / rat(2, 1);
            if self.eval(&mid).is_zero() {
                out.push(rat_to_f64(&mid));
                let left = self.count_roots_in(&a, &mid);
                let right = n - left - 1;
                if left > 0 {
                    stack.push((a, mid.clone(), left));
                }
                if right > 0 {
                    stack.push((mid, b, right));
                }
            } else {
                let left = self.count_roots_in(&a, &mid);
                let right = n - left;
                if left > 0 {
                    stack.push((a, mid.clone(), left));
                }
                if right > 0 {
                    stack.push((mid, b, right));
                }
            }
        }
        out.sort_by(|x, y| x.partial_cmp(y).unwrap());
        out
    }
}

pub fn rat_to_f64(r: &Rat) -> f64 {
    let numer = r.numer();
    let denom = r.denom();
    // Exact for the magnitudes used here; falls back to a ratio of
    // f64-rounded big integers otherwise.
    num_to_f64(numer) / num_to_f64(denom)
}

fn num_to_f64(n: &BigInt) -> f64 {
    use num_traits::ToPrimitive;
    n.to_f64().unwrap_or(f64::NAN)
}

impl fmt::Debug for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (k, c) in self.coeffs.iter().enumerate().rev() {
            if c.is_zero() {
                continue;
            }
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            match k {
                0 => write!(f, "{c}")?,
                1 => write!(f, "({c})*x")?,
                _ => write!(f, "({c})*x^{k}")?,
            }
        }
        Ok(())
    }
}

impl Add for &Poly {
    type Output = Poly;
    fn add(self, rhs: &Poly) -> Poly {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        let mut coeffs = Vec::with_capacity(n);
        for k in 0..n {
            coeffs.push(self.coeff(k) + rhs.coeff(k));
        }
        Poly::from_coeffs(coeffs)
    }
}

impl Sub for &Poly {
    type Output = Poly;
    fn sub(self, rhs: &Poly) -> Poly {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        let mut coeffs = Vec::with_capacity(n);
        for k in 0..n {
            coeffs.push(self.coeff(k) - rhs.coeff(k));
        }
        Poly::from_coeffs(coeffs)
    }
}

impl Mul for &Poly {
    type Output = Poly;
    fn mul(self, rhs: &Poly) -> Poly {
        if self.is_zero() || rhs.is_zero() {
            return Poly::zero();
        }
        let mut coeffs = vec![Rat::zero(); self.coeffs.len() + rhs.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in rhs.coeffs.iter().enumerate() {
                coeffs[i + j] += a * b;
            }
        }
        Poly::from_coeffs(coeffs)
    }
}

impl Neg for &Poly {
    type Output = Poly;
    fn neg(self) -> Poly {
        Poly {
            coeffs: self.coeffs.iter().map(|c| -c).collect(),
        }
    }
}

impl Neg for Poly {
    type Output = Poly;
    fn neg(self) -> Poly {
        -&self
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn div_rem_roundtrip() {
        let a = Poly::from_ints(&[2, 0, -3, 1, 4]);
        let b = Poly::from_ints(&[1, 2, 1]);
        let (q, r) = a.div_rem(&b);
        let back = &(&q * &b) + &r;
        assert_eq!(back, a);
        assert!(r.degree().unwrap() < b.degree().unwrap());
    }

    #[test]
    fn gcd_of_common_factor() {
        let f = Poly::from_ints(&[-1, 1]); // x - 1
        let a = &f * &Poly::from_ints(&[3, 1]);
        let b = &f * &Poly::from_ints(&[0, 0, 5]);
        assert_eq!(a.gcd(&b), f.monic());
    }

    #[test]
    fn sturm_counts_roots() {
        // (x-1)(x-2)(x+3)
        let p = &(&Poly::from_ints(&[-1, 1]) * &Poly::from_ints(&[-2, 1]))
            * &Poly::from_ints(&[3, 1]);
        assert_eq!(p.count_roots_in(&rat(0, 1), &rat(5, 1)), 2);
        assert_eq!(p.count_roots_in(&rat(-5, 1), &rat(0, 1)), 1);
        // open interval: root at the endpoint is excluded
        assert_eq!(p.count_roots_in(&rat(1, 1), &rat(2, 1)), 0);
        let roots = p.roots_in(&rat(0, 1), &rat(5, 1), 1e-9);
        assert_eq!(roots.len(), 2);
        assert!((roots[0] - 1.0).abs() < 1e-8);
        assert!((roots[1] - 2.0).abs() < 1e-8);
    }

    #[test]
    fn repeated_roots_counted_once() {
        // (x-1)^2 (x+1)
        let p = &Poly::from_ints(&[-1, 1]).pow(2) * &Poly::from_ints(&[1, 1]);
        assert_eq!(p.count_roots_in(&rat(0, 1), &rat(2, 1)), 1);
    }
}

//! Resampling measures on the simplex and their collision rates.
//!
//! A measure splits into a Kingman part `sigma2 * delta_0` and a
//! simultaneous-collision part `Xi_0`. Supported `Xi_0` kinds:
//!
//! * a density on [0,1] (named Beta / power-law / point-mass families, or an
//!   arbitrary density integrated by quadrature), optionally truncated away
//!   from 0 for forward simulation of infinite-activity measures;
//! * a finite list of atoms on the simplex;
//! * the Poisson-Dirichlet family, whose rates have a closed form.

use crate::error::{Error, Result};
use crate::poly::{Poly, Rat};
use crate::quad;
use crate::ratfun::RatFun;
use num_bigint::BigInt;
use num_traits::{One, Zero};
use serde::Serialize;
use std::fmt;
use std::sync::Arc;

/// Absolute tolerance for rate quadrature; the Appendix verdicts are
/// sensitive rational functions of the rates.
pub const QUAD_TOL: f64 = 1e-12;

/// A `(b; k_1,...,k_r; s)`-collision: `b` blocks merge into `r + s`, where
/// `r` groups of sizes `k_1 >= ... >= k_r >= 2` merge and `s` blocks stay.
#[derive(Clone, PartialEq, Eq, Hash, Serialize)]
pub struct CollisionSignature {
    pub b: usize,
    pub ks: Vec<usize>,
    pub s: usize,
}

impl CollisionSignature {
    pub fn new(b: usize, mut ks: Vec<usize>, s: usize) -> Result<Self> {
        if ks.is_empty() {
            return Err(Error::InvalidSignature(
                "at least one merging group is required".into(),
            ));
        }
        if ks.iter().any(|&k| k < 2) {
            return Err(Error::InvalidSignature(
                "every merging group must have size >= 2".into(),
            ));
        }
        ks.sort_unstable_by(|a, b| b.cmp(a));
        let total: usize = ks.iter().sum::<usize>() + s;
        if total != b {
            return Err(Error::InvalidSignature(format!(
                "b = {b} but s + sum(ks) = {total}"
            )));
        }
        Ok(CollisionSignature { b, ks, s })
    }

    pub fn r(&self) -> usize {
        self.ks.len()
    }

    /// True for the single binary merger `(b; 2; b-2)` that carries the
    /// Kingman term.
    pub fn is_binary(&self) -> bool {
        self.ks == [2]
    }

    /// Appendix-style name: group sizes followed by one `1` per spectator,
    /// e.g. `(4; 2; 2)` is `a211`.
    pub fn name(&self) -> String {
        let mut out = String::from("a");
        for k in &self.ks {
            out.push_str(&k.to_string());
        }
        for _ in 0..self.s {
            out.push('1');
        }
        out
    }
}

impl fmt::Debug for CollisionSignature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for CollisionSignature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let ks: Vec<String> = self.ks.iter().map(|k| k.to_string()).collect();
        write!(f, "({};{};{})", self.b, ks.join(","), self.s)
    }
}

/// Named density families on [0,1].
#[derive(Clone)]
pub enum LambdaFamily {
    /// `Beta(2-beta, beta)` with `beta` in (0,2).
    Beta { beta: f64 },
    /// `x^{-gamma} dx` with `gamma` in (0,1).
    PowerLaw { gamma: f64 },
    /// Point mass at 1.
    PointMassOne,
    /// Arbitrary density on [0,1]; rates go through quadrature.
    Density(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

impl fmt::Debug for LambdaFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LambdaFamily::Beta { beta } => write!(f, "Beta(2-{beta}, {beta})"),
            LambdaFamily::PowerLaw { gamma } => write!(f, "x^-{gamma} dx"),
            LambdaFamily::PointMassOne => write!(f, "delta_1"),
            LambdaFamily::Density(_) => write!(f, "custom density"),
        }
    }
}

#[derive(Clone, Debug)]
pub enum Xi0 {
    /// A measure supported on [0,1]. `truncation = Some(eps)` restricts the
    /// measure to `(eps, 1]`, which makes the forward jump rate finite.
    Lambda {
        family: LambdaFamily,
        truncation: Option<f64>,
    },
    /// Finitely many atoms `(weight, point)` with nonincreasing coordinates.
    SimplexAtoms(Vec<(f64, Vec<f64>)>),
    /// Poisson-Dirichlet coalescent with parameter `epsilon > 0`.
    PoissonDirichlet { epsilon: f64 },
}

/// A resampling measure `Xi = Xi_0 + sigma2 * delta_0`.
#[derive(Clone, Debug)]
pub struct XiMeasure {
    pub sigma2: f64,
    pub xi0: Option<Xi0>,
}

impl XiMeasure {
    pub fn kingman(sigma2: f64) -> Result<Self> {
        if sigma2 < 0.0 {
            return Err(Error::InvalidMeasure("sigma2 must be >= 0".into()));
        }
        if sigma2 == 0.0 {
            return Err(Error::InvalidMeasure("measure must be nonzero".into()));
        }
        Ok(XiMeasure { sigma2, xi0: None })
    }

    pub fn beta(beta: f64) -> Result<Self> {
        if !(0.0 < beta && beta < 2.0) {
            return Err(Error::ParameterOutOfRange(format!(
                "Beta family requires beta in (0,2), got {beta}"
            )));
        }
        Ok(XiMeasure {
            sigma2: 0.0,
            xi0: Some(Xi0::Lambda {
                family: LambdaFamily::Beta { beta },
                truncation: None,
            }),
        })
    }

    pub fn power_law(gamma: f64) -> Result<Self> {
        if !(0.0 < gamma && gamma < 1.0) {
            return Err(Error::ParameterOutOfRange(format!(
                "power-law family requires gamma in (0,1), got {gamma}"
            )));
        }
        Ok(XiMeasure {
            sigma2: 0.0,
            xi0: Some(Xi0::Lambda {
                family: LambdaFamily::PowerLaw { gamma },
                truncation: None,
            }),
        })
    }

    pub fn delta_one() -> Self {
        XiMeasure {
            sigma2: 0.0,
            xi0: Some(Xi0::Lambda {
                family: LambdaFamily::PointMassOne,
                truncation: None,
            }),
        }
    }

    pub fn poisson_dirichlet(epsilon: f64) -> Result<Self> {
        if epsilon <= 0.0 {
            return Err(Error::ParameterOutOfRange(format!(
                "Poisson-Dirichlet requires epsilon > 0, got {epsilon}"
            )));
        }
        Ok(XiMeasure {
            sigma2: 0.0,
            xi0: Some(Xi0::PoissonDirichlet { epsilon }),
        })
    }

    pub fn simplex_atoms(atoms: Vec<(f64, Vec<f64>)>) -> Result<Self> {
        for (w, x) in &atoms {
            if *w <= 0.0 {
                return Err(Error::InvalidMeasure("atom weights must be > 0".into()));
            }
            let mut prev = f64::INFINITY;
            let mut sum = 0.0;
            for &xi in x {
                if xi < 0.0 || xi > prev {
                    return Err(Error::InvalidMeasure(
                        "atom coordinates must be nonincreasing and >= 0".into(),
                    ));
                }
                prev = xi;
                sum += xi;
            }
            if sum > 1.0 + 1e-12 {
                return Err(Error::InvalidMeasure("atom coordinates must sum to <= 1".into()));
            }
            if sum == 0.0 {
                return Err(Error::InvalidMeasure("Xi_0 may not have an atom at 0".into()));
            }
        }
        Ok(XiMeasure {
            sigma2: 0.0,
            xi0: Some(Xi0::SimplexAtoms(atoms)),
        })
    }

    pub fn with_sigma2(mut self, sigma2: f64) -> Result<Self> {
        if sigma2 < 0.0 {
            return Err(Error::InvalidMeasure("sigma2 must be >= 0".into()));
        }
        self.sigma2 = sigma2;
        Ok(self)
    }

    /// Restrict the density part to `(eps, 1]`.
    pub fn truncated(mut self, eps: f64) -> Result<Self> {
        match &mut self.xi0 {
            Some(Xi0::Lambda { truncation, .. }) => {
                if !(0.0 < eps && eps < 1.0) {
                    return Err(Error::ParameterOutOfRange(
                        "truncation level must lie in (0,1)".into(),
                    ));
                }
                *truncation = Some(eps);
                Ok(self)
            }
            _ => Err(Error::Unsupported(
                "truncation applies to density measures on [0,1]".into(),
            )),
        }
    }
}

/// Raw moment `M_n = int x^n Xi(dx)` of a density measure on [0,1]
/// (delta_0 contributes nothing for n >= 1; for n = 0 the convention here
/// excludes the Kingman mass, matching the Appendix usage `a_2 = M_0 + sigma2`).
pub fn raw_moment(m: &XiMeasure, n: usize) -> Result<f64> {
    match &m.xi0 {
        None => Ok(0.0),
        Some(Xi0::Lambda { family, truncation }) => match (family, truncation) {
            (LambdaFamily::Beta { beta }, None) => {
                // prod_{j=0}^{n-1} (2 - beta + j) / (n+1)!
                let mut v = 1.0;
                for j in 0..n {
                    v *= 2.0 - beta + j as f64;
                }
                Ok(v / factorial(n + 1))
            }
            (LambdaFamily::PowerLaw { gamma }, None) => Ok(1.0 / (n as f64 + 1.0 - gamma)),
            (LambdaFamily::PointMassOne, _) => Ok(1.0),
            (family, trunc) => {
                let lo = trunc.unwrap_or(0.0);
                let dens = density_fn(family);
                let (v, _) = quad::integrate(|x| x.powi(n as i32) * dens(x), lo, 1.0, QUAD_TOL)?;
                Ok(v)
            }
        },
        Some(Xi0::SimplexAtoms(_)) | Some(Xi0::PoissonDirichlet { .. }) => Err(Error::Unsupported(
            "raw moments are defined for measures on [0,1]".into(),
        )),
    }
}

/// Symbolic raw moment in the family parameter (Beta: beta, power law: gamma).
pub fn raw_moment_sym(m: &XiMeasure, n: usize) -> Result<RatFun> {
    match &m.xi0 {
        None => Ok(RatFun::zero()),
        Some(Xi0::Lambda {
            family,
            truncation: None,
        }) => match family {
            LambdaFamily::Beta { .. } => {
                // prod_{j=0}^{n-1} (2 - x + j) / (n+1)!
                let mut p = Poly::one();
                for j in 0..n {
                    p = &p * &Poly::from_ints(&[2 + j as i64, -1]);
                }
                let fact = Rat::from(BigInt::from(factorial_exact(n + 1)));
                Ok(RatFun::from_poly(p.scale(&fact.recip())))
            }
            LambdaFamily::PowerLaw { .. } => {
                // 1 / (n + 1 - x)
                RatFun::new(Poly::one(), Poly::from_ints(&[n as i64 + 1, -1]))
            }
            LambdaFamily::PointMassOne => Ok(RatFun::one()),
            LambdaFamily::Density(_) => Err(Error::Unsupported(
                "no symbolic form for a custom density".into(),
            )),
        },
        _ => Err(Error::Unsupported(
            "symbolic raw moments are defined for untruncated measures on [0,1]".into(),
        )),
    }
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

fn factorial_exact(n: usize) -> u64 {
    (1..=n as u64).product()
}

fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let mut v = 1.0;
    for j in 0..k {
        v *= (n - j) as f64 / (k - j) as f64;
    }
    v
}

pub(crate) fn density_fn(family: &LambdaFamily) -> Arc<dyn Fn(f64) -> f64 + Send + Sync> {
    match family {
        LambdaFamily::Beta { beta } => {
            let b = *beta;
            // Gamma(2) / (Gamma(2-b) Gamma(b)) * x^{1-b} (1-x)^{b-1}
            let norm = 1.0 / (gamma_fn(2.0 - b) * gamma_fn(b));
            Arc::new(move |x: f64| {
                if x <= 0.0 || x >= 1.0 {
                    0.0
                } else {
                    norm * x.powf(1.0 - b) * (1.0 - x).powf(b - 1.0)
                }
            })
        }
        LambdaFamily::PowerLaw { gamma } => {
            let g = *gamma;
            Arc::new(move |x: f64| if x <= 0.0 { 0.0 } else { x.powf(-g) })
        }
        LambdaFamily::PointMassOne => {
            // Not a density; callers treat the point mass separately.
            Arc::new(|_| f64::NAN)
        }
        LambdaFamily::Density(f) => f.clone(),
    }
}

/// Lanczos approximation of the Gamma function, good to ~1e-13 here.
pub(crate) fn gamma_fn(x: f64) -> f64 {
    const G: f64 = 7.0;
    const C: [f64; 9] = [
        0.99999999999980993,
        676.5203681218851,
        -1259.1392167224028,
        771.32342877765313,
        -176.61502916214059,
        12.507343278686905,
        -0.13857109526572012,
        9.9843695780195716e-6,
        1.5056327351493116e-7,
    ];
    if x < 0.5 {
        std::f64::consts::PI / ((std::f64::consts::PI * x).sin() * gamma_fn(1.0 - x))
    } else {
        let x = x - 1.0;
        let mut a = C[0];
        let t = x + G + 0.5;
        for (i, &c) in C.iter().enumerate().skip(1) {
            a += c / (x + i as f64);
        }
        (2.0 * std::f64::consts::PI).sqrt() * t.powf(x + 0.5) * (-t).exp() * a
    }
}

/// `beta_{b; k_1..k_r; s}` of Eq-style integral form, without the Kingman term.
fn beta_rate(xi0: &Xi0, sig: &CollisionSignature) -> Result<f64> {
    match xi0 {
        Xi0::Lambda { family, truncation } => {
            if sig.r() >= 2 {
                // A measure on [0,1] has a single nonzero coordinate, so
                // simultaneous multiple collisions never happen.
                return Ok(0.0);
            }
            let k = sig.ks[0];
            let s = sig.s;
            match (family, truncation) {
                (LambdaFamily::PointMassOne, _) => {
                    // All mass at x = 1: (1-x)^s kills every spectator term.
                    Ok(if s == 0 { 1.0 } else { 0.0 })
                }
                (LambdaFamily::Beta { .. }, None) | (LambdaFamily::PowerLaw { .. }, None) => {
                    // int x^{k-2} (1-x)^s Lambda(dx), expanded in raw moments.
                    let mut v = 0.0;
                    for j in 0..=s {
                        let m = raw_moment(
                            &XiMeasure {
                                sigma2: 0.0,
                                xi0: Some(xi0.clone()),
                            },
                            k - 2 + j,
                        )?;
                        v += binomial(s, j) * if j % 2 == 0 { m } else { -m };
                    }
                    Ok(v)
                }
                (family, trunc) => {
                    let lo = trunc.unwrap_or(0.0);
                    let dens = density_fn(family);
                    let (v, _) = quad::integrate(
                        |x| x.powi(k as i32 - 2) * (1.0 - x).powi(s as i32) * dens(x),
                        lo,
                        1.0,
                        QUAD_TOL,
                    )?;
                    Ok(v)
                }
            }
        }
        Xi0::SimplexAtoms(atoms) => Ok(atoms
            .iter()
            .map(|(w, x)| w * atom_collision_factor(x, sig))
            .sum()),
        Xi0::PoissonDirichlet { epsilon } => Ok(poisson_dirichlet_rate_f64(*epsilon, sig)),
    }
}

/// The Eq. (be) integrand evaluated at a single simplex point, including the
/// `1 / sum x_i^2` normalization: a finite sum over injective index tuples.
fn atom_collision_factor(x: &[f64], sig: &CollisionSignature) -> f64 {
    let support: Vec<f64> = x.iter().copied().filter(|&v| v > 0.0).collect();
    let sum_x: f64 = support.iter().sum();
    let sum_x2: f64 = support.iter().map(|v| v * v).sum();
    let r = sig.r();
    let s = sig.s;
    let mut total = 0.0;
    for l in 0..=s {
        if r + l > support.len() {
            break;
        }
        let dust = 1.0 - sum_x;
        let dust_pow = if s - l == 0 {
            1.0
        } else if dust <= 0.0 {
            // (1 - sum x)^{s-l} with zero dust mass
            if dust.abs() < 1e-15 { 0.0 } else { dust.powi((s - l) as i32) }
        } else {
            dust.powi((s - l) as i32)
        };
        if dust_pow == 0.0 {
            continue;
        }
        let mut tuple_sum = 0.0;
        let mut idx: Vec<usize> = Vec::with_capacity(r + l);
        injective_tuples(support.len(), r + l, &mut idx, &mut |tuple| {
            let mut prod = 1.0;
            for (pos, &i) in tuple.iter().enumerate() {
                let power = if pos < r { sig.ks[pos] } else { 1 };
                prod *= support[i].powi(power as i32);
            }
            tuple_sum += prod;
        });
        total += binomial(s, l) * tuple_sum * dust_pow;
    }
    total / sum_x2
}

fn injective_tuples(n: usize, len: usize, current: &mut Vec<usize>, visit: &mut impl FnMut(&[usize])) {
    if current.len() == len {
        visit(current);
        return;
    }
    for i in 0..n {
        if !current.contains(&i) {
            current.push(i);
            injective_tuples(n, len, current, visit);
            current.pop();
        }
    }
}

/// Closed-form Poisson-Dirichlet rate:
/// `eps^{r+s} / eps^{[b]} * prod (k_i - 1)!`.
fn poisson_dirichlet_rate_f64(eps: f64, sig: &CollisionSignature) -> f64 {
    let mut v = eps.powi((sig.r() + sig.s) as i32);
    for &k in &sig.ks {
        v *= factorial(k - 1);
    }
    let mut asc = 1.0;
    for j in 0..sig.b {
        asc *= eps + j as f64;
    }
    v / asc
}

fn poisson_dirichlet_rate_sym(sig: &CollisionSignature) -> RatFun {
    // numerator: x^{r+s} * prod (k_i - 1)!
    let mut fact = Rat::one();
    for &k in &sig.ks {
        fact *= Rat::from(BigInt::from(factorial_exact(k - 1)));
    }
    let mut num = vec![Rat::zero(); sig.r() + sig.s];
    num.push(fact);
    // denominator: x (x+1) ... (x+b-1)
    let mut den = Poly::one();
    for j in 0..sig.b {
        den = &den * &Poly::from_ints(&[j as i64, 1]);
    }
    RatFun::new(Poly::from_coeffs(num), den).expect("nonzero denominator")
}

/// Total collision rate `lambda = sigma2 * 1_{(b;2;b-2)} + beta_{b;ks;s}`.
pub fn lambda_rate(m: &XiMeasure, sig: &CollisionSignature) -> Result<f64> {
    let kingman = if sig.is_binary() { m.sigma2 } else { 0.0 };
    let beta = match &m.xi0 {
        None => 0.0,
        Some(xi0) => beta_rate(xi0, sig)?,
    };
    Ok(kingman + beta)
}

/// Symbolic collision rate in the family parameter, for closed-form kinds.
pub fn lambda_rate_sym(m: &XiMeasure, sig: &CollisionSignature) -> Result<RatFun> {
    let kingman = if sig.is_binary() {
        f64_to_ratfun(m.sigma2)?
    } else {
        RatFun::zero()
    };
    let beta = match &m.xi0 {
        None => RatFun::zero(),
        Some(Xi0::Lambda {
            family,
            truncation: None,
        }) => {
            if sig.r() >= 2 {
                RatFun::zero()
            } else {
                match family {
                    LambdaFamily::PointMassOne => {
                        if sig.s == 0 {
                            RatFun::one()
                        } else {
                            RatFun::zero()
                        }
                    }
                    LambdaFamily::Beta { .. } | LambdaFamily::PowerLaw { .. } => {
                        let k = sig.ks[0];
                        let mut v = RatFun::zero();
                        for j in 0..=sig.s {
                            let mj = raw_moment_sym(m, k - 2 + j)?;
                            let c = binom_exact(sig.s, j);
                            let term = mj * RatFun::constant(Rat::from(BigInt::from(c)));
                            v = if j % 2 == 0 { v + term } else { v - term };
                        }
                        v
                    }
                    LambdaFamily::Density(_) => {
                        return Err(Error::Unsupported(
                            "no symbolic rates for a custom density".into(),
                        ))
                    }
                }
            }
        }
        Some(Xi0::PoissonDirichlet { .. }) => poisson_dirichlet_rate_sym(sig),
        _ => {
            return Err(Error::Unsupported(
                "symbolic rates require a closed-form measure family".into(),
            ))
        }
    };
    Ok(kingman + beta)
}

pub(crate) fn f64_to_ratfun(v: f64) -> Result<RatFun> {
    let r = BigRational_from_f64(v)
        .ok_or_else(|| Error::InvalidMeasure(format!("{v} is not a finite number")))?;
    Ok(RatFun::constant(r))
}

#[allow(non_snake_case)]
fn BigRational_from_f64(v: f64) -> Option<Rat> {
    Rat::from_float(v)
}

fn binom_exact(n: usize, k: usize) -> u64 {
    if k > n {
        return 0;
    }
    let mut v: u64 = 1;
    for j in 0..k {
        v = v * (n - j) as u64 / (j + 1) as u64;
    }
    v
}

/// Enumerate every collision signature with exactly `b` blocks.
pub fn signatures_for_b(b: usize) -> Vec<CollisionSignature> {
    let mut out = Vec::new();
    let mut ks = Vec::new();
    fn rec(b: usize, remaining: usize, max_k: usize, ks: &mut Vec<usize>, out: &mut Vec<CollisionSignature>) {
        if !ks.is_empty() {
            out.push(CollisionSignature::new(b, ks.clone(), remaining).unwrap());
        }
        for k in (2..=remaining.min(max_k)).rev() {
            ks.push(k);
            rec(b, remaining - k, k, ks, out);
            ks.pop();
        }
    }
    rec(b, b, b, &mut ks, &mut out);
    out
}

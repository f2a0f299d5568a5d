//! The 23 named collision rates for blocks up to 6, the consistency-condition
//! fill-in for the derived entries, and the recursion checker.

use crate::error::{Error, Result};
use crate::measure::{lambda_rate, lambda_rate_sym, signatures_for_b, CollisionSignature, XiMeasure};
use crate::ratfun::RatFun;
use crate::scalar::Scalar;

/// Canonical order of the 23 named signatures (all signatures with
/// 2 <= b <= 6), used for table storage and serialization.
pub fn named_signatures() -> Vec<CollisionSignature> {
    let sig = |b: usize, ks: &[usize], s: usize| CollisionSignature::new(b, ks.to_vec(), s).unwrap();
    vec![
        sig(2, &[2], 0),
        sig(3, &[3], 0),
        sig(3, &[2], 1),
        sig(4, &[4], 0),
        sig(4, &[3], 1),
        sig(4, &[2, 2], 0),
        sig(4, &[2], 2),
        sig(5, &[5], 0),
        sig(5, &[4], 1),
        sig(5, &[3, 2], 0),
        sig(5, &[3], 2),
        sig(5, &[2, 2], 1),
        sig(5, &[2], 3),
        sig(6, &[6], 0),
        sig(6, &[5], 1),
        sig(6, &[4, 2], 0),
        sig(6, &[3, 3], 0),
        sig(6, &[4], 2),
        sig(6, &[3, 2], 1),
        sig(6, &[2, 2, 2], 0),
        sig(6, &[3], 3),
        sig(6, &[2, 2], 2),
        sig(6, &[2], 4),
    ]
}

/// The named Appendix rates for one measure. `a2` includes `sigma2` per the
/// Appendix convention, as do the other pure-binary entries a21, a211, a2111,
/// a21111 (each is the rate of the full collision, Kingman term included).
#[derive(Clone, Debug)]
pub struct RateTable<T> {
    entries: Vec<(CollisionSignature, T)>,
}

impl<T: Clone> RateTable<T> {
    pub fn from_entries(entries: Vec<(CollisionSignature, T)>) -> Self {
        RateTable { entries }
    }

    pub fn get(&self, name: &str) -> Option<&T> {
        self.entries
            .iter()
            .find(|(sig, _)| sig.name() == name)
            .map(|(_, v)| v)
    }

    pub fn entries(&self) -> &[(CollisionSignature, T)] {
        &self.entries
    }

    fn named(&self, name: &str) -> T {
        self.get(name)
            .unwrap_or_else(|| panic!("rate table is missing {name}"))
            .clone()
    }
}

impl<T: Scalar> RateTable<T> {
    pub fn a(&self, name: &str) -> T {
        self.named(name)
    }
}

/// Signatures computed directly from the measure; the rest follow from the
/// consistency condition.
const BASE_NAMES: [&str; 10] = [
    "a2", "a3", "a4", "a5", "a6", "a211", "a2111", "a21111", "a33", "a42",
];

/// Fill the 13 derived entries from the 10 base entries via the consistency
/// system.
fn fill_derived<T: Scalar>(base: &dyn Fn(&str) -> T) -> Vec<(String, T)> {
    let a2 = base("a2");
    let a3 = base("a3");
    let a4 = base("a4");
    let a5 = base("a5");
    let a6 = base("a6");
    let a211 = base("a211");
    let a2111 = base("a2111");
    let a21111 = base("a21111");
    let a33 = base("a33");
    let a42 = base("a42");
    let c = |n: i64, d: i64| T::from_ratio(n, d);

    let a21 = a2.clone() - a3.clone();
    let a22 = a2.clone() - c(2, 1) * a3.clone() + a4.clone() - a211.clone();
    let a31 = a3.clone() - a4.clone();
    let a41 = a4.clone() - a5.clone();
    let a221 = c(1, 5) * a2.clone() - c(4, 5) * a3.clone()
        + a4.clone()
        + c(1, 5) * a211.clone()
        - c(2, 5) * a2111.clone()
        - c(2, 5) * a5.clone();
    let a311 = c(3, 5) * a211.clone() - c(2, 5) * a2.clone() + c(8, 5) * a3.clone()
        - c(2, 1) * a4.clone()
        - c(1, 5) * a2111.clone()
        + c(4, 5) * a5.clone();
    let a32 = -(c(3, 5) * a3.clone()) + c(1, 5) * a2111.clone() + c(1, 5) * a5.clone()
        - c(3, 5) * a211.clone()
        + c(2, 5) * a2.clone();
    let a2211 = -(c(14, 15) * a3.clone()) + a4.clone() + c(2, 5) * a2.clone()
        - c(4, 5) * a5.clone()
        - c(2, 3) * a33.clone()
        - a42.clone()
        - c(3, 5) * a211.clone()
        + c(8, 15) * a2111.clone()
        - c(1, 3) * a21111.clone()
        + c(1, 3) * a6.clone();
    let a222 = c(2, 1) * a211.clone() - a2.clone()
        + c(4, 3) * a3.clone()
        + c(8, 3) * a33.clone()
        + c(3, 1) * a42.clone()
        - c(4, 3) * a2111.clone()
        + c(1, 3) * a21111.clone()
        - c(1, 3) * a6.clone();
    let a3111 = -(c(3, 5) * a2111.clone()) + c(14, 5) * a3.clone()
        - c(3, 1) * a4.clone()
        - c(6, 5) * a2.clone()
        + c(12, 5) * a5.clone()
        + c(2, 1) * a33.clone()
        + c(3, 1) * a42.clone()
        + c(9, 5) * a211.clone()
        - a6.clone();
    let a321 = c(2, 5) * a2 - c(3, 5) * a3 + c(1, 5) * a5.clone()
        - a33
        - a42.clone()
        - c(3, 5) * a211
        + c(1, 5) * a2111;
    let a411 = a4 - c(2, 1) * a5.clone() - a42 + a6.clone();
    let a51 = a5 - a6;

    vec![
        ("a21".into(), a21),
        ("a22".into(), a22),
        ("a31".into(), a31),
        ("a41".into(), a41),
        ("a221".into(), a221),
        ("a311".into(), a311),
        ("a32".into(), a32),
        ("a2211".into(), a2211),
        ("a222".into(), a222),
        ("a3111".into(), a3111),
        ("a321".into(), a321),
        ("a411".into(), a411),
        ("a51".into(), a51),
    ]
}

fn assemble_table<T: Scalar>(base: &dyn Fn(&str) -> T) -> RateTable<T> {
    let derived = fill_derived(base);
    let entries = named_signatures()
        .into_iter()
        .map(|sig| {
            let name = sig.name();
            let value = if BASE_NAMES.contains(&name.as_str()) {
                base(&name)
            } else {
                derived
                    .iter()
                    .find(|(n, _)| *n == name)
                    .map(|(_, v)| v.clone())
                    .unwrap()
            };
            (sig, value)
        })
        .collect();
    RateTable::from_entries(entries)
}

/// Numeric rate table for a measure: base entries direct, remainder via the
/// consistency system. Fails if a derived entry comes out negative, which
/// signals an inconsistent input.
pub fn named_rates(m: &XiMeasure) -> Result<RateTable<f64>> {
    let sig_by_name: Vec<(String, CollisionSignature)> = named_signatures()
        .into_iter()
        .map(|s| (s.name(), s))
        .collect();
    let mut base_values = Vec::new();
    for name in BASE_NAMES {
        let sig = &sig_by_name.iter().find(|(n, _)| n == name).unwrap().1;
        base_values.push((name.to_string(), lambda_rate(m, sig)?));
    }
    let base = move |name: &str| -> f64 {
        base_values
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, v)| *v)
            .unwrap()
    };
    let table = assemble_table(&base);
    for (sig, v) in table.entries() {
        if *v < -1e-10 {
            return Err(Error::NegativeRate {
                name: sig.name(),
                value: *v,
            });
        }
    }
    Ok(table)
}

/// Symbolic rate table in the measure's family parameter.
pub fn named_rates_sym(m: &XiMeasure) -> Result<RateTable<RatFun>> {
    let sig_by_name: Vec<(String, CollisionSignature)> = named_signatures()
        .into_iter()
        .map(|s| (s.name(), s))
        .collect();
    let mut base_values = Vec::new();
    for name in BASE_NAMES {
        let sig = &sig_by_name.iter().find(|(n, _)| n == name).unwrap().1;
        base_values.push((name.to_string(), lambda_rate_sym(m, sig)?));
    }
    let base = move |name: &str| -> RatFun {
        base_values
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, v)| v.clone())
            .unwrap()
    };
    Ok(assemble_table(&base))
}

/// One failing signature in a consistency report.
#[derive(Clone, Debug, serde::Serialize)]
pub struct ConsistencyFailure {
    pub signature: CollisionSignature,
    pub residual: f64,
}

#[derive(Clone, Debug, serde::Serialize)]
pub struct ConsistencyReport {
    pub b_max: usize,
    pub max_residual: f64,
    pub failures: Vec<ConsistencyFailure>,
}

/// The recursion's right-hand side signatures at level b+1 for a signature at
/// level b: each group grown by one, a spectator pulled into a new pair
/// (with multiplicity s), and a new spectator.
fn recursion_rhs(sig: &CollisionSignature) -> Vec<(CollisionSignature, usize)> {
    let mut rhs = Vec::new();
    for m in 0..sig.ks.len() {
        let mut ks = sig.ks.clone();
        ks[m] += 1;
        rhs.push((CollisionSignature::new(sig.b + 1, ks, sig.s).unwrap(), 1));
    }
    if sig.s > 0 {
        let mut ks = sig.ks.clone();
        ks.push(2);
        rhs.push((
            CollisionSignature::new(sig.b + 1, ks, sig.s - 1).unwrap(),
            sig.s,
        ));
    }
    rhs.push((
        CollisionSignature::new(sig.b + 1, sig.ks.clone(), sig.s + 1).unwrap(),
        1,
    ));
    rhs
}

/// Verify the consistency recursion for every signature with `b <= b_max`
/// (this evaluates rates up to level `b_max + 1`). Numeric mode: residuals
/// against `tol`.
pub fn check_consistency(m: &XiMeasure, b_max: usize, tol: f64) -> Result<ConsistencyReport> {
    if b_max < 2 {
        return Err(Error::ParameterOutOfRange("b_max must be >= 2".into()));
    }
    let mut max_residual: f64 = 0.0;
    let mut failures = Vec::new();
    for b in 2..=b_max {
        for sig in signatures_for_b(b) {
            let lhs = lambda_rate(m, &sig)?;
            let mut rhs = 0.0;
            for (rsig, mult) in recursion_rhs(&sig) {
                rhs += mult as f64 * lambda_rate(m, &rsig)?;
            }
            let residual = (lhs - rhs).abs();
            max_residual = max_residual.max(residual);
            if residual > tol {
                failures.push(ConsistencyFailure {
                    signature: sig,
                    residual,
                });
            }
        }
    }
    Ok(ConsistencyReport {
        b_max,
        max_residual,
        failures,
    })
}

/// Symbolic consistency check: every residual must be the exact zero
/// rational function. Returns the failing signatures.
pub fn check_consistency_sym(m: &XiMeasure, b_max: usize) -> Result<Vec<CollisionSignature>> {
    if b_max < 2 {
        return Err(Error::ParameterOutOfRange("b_max must be >= 2".into()));
    }
    let mut failures = Vec::new();
    for b in 2..=b_max {
        for sig in signatures_for_b(b) {
            let lhs = lambda_rate_sym(m, &sig)?;
            let mut rhs = RatFun::zero();
            for (rsig, mult) in recursion_rhs(&sig) {
                rhs = rhs + RatFun::from_ratio(mult as i64, 1) * lambda_rate_sym(m, &rsig)?;
            }
            if !(lhs - rhs).is_zero() {
                failures.push(sig);
            }
        }
    }
    Ok(failures)
}

//! Stationary moments of the two-type process with symmetric
//! parent-independent mutation, the necessary value of the mutation rate
//! theta implied by reversibility, and the obstruction expressions whose
//! nonvanishing rules reversibility out.

use crate::error::{Error, Result};
use crate::measure::{LambdaFamily, Xi0, XiMeasure};
use crate::partition::{classify_collision, set_partitions, Partition};
use crate::poly::{rat, Poly, Rat};
use crate::ratfun::RatFun;
use crate::rates::{named_rates_sym, RateTable};
use crate::scalar::Scalar;
use num_traits::{Signed, Zero};
use serde::Serialize;

/// Stationary moments `m_0..m_p` of the mass of a reference type, for
/// parent-independent mutation at rate `theta / 2` per lineage and reference
/// mass `alpha` under the mutant distribution. First-step analysis of the
/// lineage dual gives
/// `m_p = (sum_pi lambda_pi m_|pi| + (p/2) theta alpha m_{p-1}) / (sum_pi lambda_pi + (p/2) theta)`.
pub fn stationary_moments<T: Scalar>(
    rates: &RateTable<T>,
    theta: &T,
    alpha: &T,
    p_max: usize,
) -> Result<Vec<T>> {
    if p_max > 6 {
        return Err(Error::Unsupported(
            "named collision rates stop at six blocks".into(),
        ));
    }
    let mut m = vec![T::one()];
    for p in 1..=p_max {
        let mut num = T::zero();
        let mut den = T::zero();
        if p >= 2 {
            let id = Partition::singletons(p);
            for q in set_partitions(p) {
                if q.num_blocks() == p {
                    continue;
                }
                let sig = classify_collision(&id, &q)?;
                let rate = rates
                    .get(&sig.name())
                    .ok_or_else(|| {
                        Error::InvalidSignature(format!("rate table is missing {}", sig.name()))
                    })?
                    .clone();
                num = num + rate.clone() * m[q.num_blocks()].clone();
                den = den + rate;
            }
        }
        let mut_rate = T::from_ratio(p as i64, 2) * theta.clone();
        num = num + mut_rate.clone() * alpha.clone() * m[p - 1].clone();
        den = den + mut_rate;
        if den.is_zero() {
            return Err(Error::DivisionByZero);
        }
        m.push(num / den);
    }
    Ok(m)
}

/// The unique mutation rate compatible with reversibility:
/// `theta = -2 (6 a4 a2 - 11 a3 a2 + 3 a3 a211 - 3 a211 a2 - 4 a4 a3 + 6 a3^2 + 3 a2^2) / (a4 + 3 a22)`.
/// The denominator vanishes exactly when the coalescent degenerates to
/// Kingman's, where no constraint on theta arises.
pub fn theta_necessary<T: Scalar>(rates: &RateTable<T>) -> Result<T> {
    let a2 = rates.a("a2");
    let a3 = rates.a("a3");
    let a4 = rates.a("a4");
    let a211 = rates.a("a211");
    let a22 = rates.a("a22");
    let den = a4.clone() + T::from_int(3) * a22;
    if den.is_zero() {
        return Err(Error::KingmanDegeneracy);
    }
    let num = T::from_int(6) * a4.clone() * a2.clone()
        - T::from_int(11) * a3.clone() * a2.clone()
        + T::from_int(3) * a3.clone() * a211.clone()
        - T::from_int(3) * a211 * a2.clone()
        - T::from_int(4) * a4 * a3.clone()
        + T::from_int(6) * a3.clone() * a3
        + T::from_int(3) * a2.clone() * a2;
    Ok(T::from_int(-2) * num / den)
}

/// Residual of the reversibility identity relating `m_2..m_4`; zero is
/// necessary for a reversible stationary state.
pub fn obstruction_p1q3<T: Scalar>(rates: &RateTable<T>, theta: &T, alpha: &T) -> Result<T> {
    let m = stationary_moments(rates, theta, alpha, 4)?;
    let a3 = rates.a("a3");
    let a21_3 = T::from_int(3) * rates.a("a21");
    Ok(
        (a21_3.clone() + theta.clone() * alpha.clone()) * m[3].clone()
            + a3.clone() * m[2].clone()
            - (a21_3 + a3 + theta.clone()) * m[4].clone(),
    )
}

/// Residual of the reversibility identity relating `m_2..m_6`.
pub fn obstruction_p1q5<T: Scalar>(rates: &RateTable<T>, theta: &T, alpha: &T) -> Result<T> {
    let m = stationary_moments(rates, theta, alpha, 6)?;
    let a5 = rates.a("a5");
    let c3 = T::from_int(10) * rates.a("a32") + T::from_int(5) * rates.a("a41");
    let c4 = T::from_int(10) * rates.a("a311") + T::from_int(15) * rates.a("a221");
    let c5 = T::from_int(10) * rates.a("a2111");
    let two_theta = T::from_int(2) * theta.clone();
    Ok(a5.clone() * m[2].clone()
        + c3.clone() * m[3].clone()
        + c4.clone() * m[4].clone()
        + (c5.clone() + two_theta.clone() * alpha.clone()) * m[5].clone()
        - (a5 + c3 + c4 + c5 + two_theta) * m[6].clone())
}

/// Reversibility analysis of a closed-form measure family.
#[derive(Clone, Debug, Serialize)]
pub struct VerdictReport {
    pub family: String,
    /// Name of the free variable in the reported expressions.
    pub parameter: String,
    /// Open interval of admissible parameters; `None` upper bound is infinity.
    pub interval: (f64, Option<f64>),
    /// The necessary mutation rate as a function of the parameter, when it is
    /// determined; stays `None` when theta itself is the free variable.
    pub theta: Option<String>,
    pub obstruction: String,
    pub obstruction_numerator_roots: usize,
    pub obstruction_denominator_roots: usize,
    pub reversible: bool,
    pub verdict: String,
    #[serde(skip)]
    pub obstruction_ratfun: RatFun,
}

fn count_roots_open(p: &Poly, lo: f64, hi: Option<f64>) -> usize {
    let lo = Rat::from_float(lo).unwrap();
    let hi = match hi {
        Some(h) => Rat::from_float(h).unwrap(),
        None => {
            // Cauchy bound: every real root lies below 1 + max |c_i / c_n|.
            let lead = p.leading_coeff();
            if lead.is_zero() {
                return 0;
            }
            let mut bound = Rat::from_float(1.0).unwrap();
            for c in p.coeffs() {
                let v = (c / &lead).abs() + rat(1, 1);
                if v > bound {
                    bound = v;
                }
            }
            bound
        }
    };
    p.count_roots_in(&lo, &hi)
}

/// Decide reversibility for one of the closed-form families by computing the
/// obstruction symbolically and counting its real roots over the admissible
/// parameter range exactly.
pub fn reversibility_verdict(m: &XiMeasure) -> Result<VerdictReport> {
    let (family, parameter, interval): (&str, &str, (f64, Option<f64>)) = match &m.xi0 {
        Some(Xi0::Lambda {
            family,
            truncation: None,
        }) => match family {
            LambdaFamily::Beta { .. } => ("beta", "beta", (0.0, Some(2.0))),
            LambdaFamily::PowerLaw { .. } => ("power-law", "gamma", (0.0, Some(1.0))),
            LambdaFamily::PointMassOne => ("point-mass-at-one", "theta", (0.0, None)),
            LambdaFamily::Density(_) => {
                return Err(Error::Unsupported(
                    "reversibility analysis needs a closed-form family".into(),
                ))
            }
        },
        Some(Xi0::PoissonDirichlet { .. }) => ("poisson-dirichlet", "epsilon", (0.0, None)),
        _ => {
            return Err(Error::Unsupported(
                "reversibility analysis needs a closed-form family".into(),
            ))
        }
    };
    let rates = named_rates_sym(m)?;
    let alpha = RatFun::from_ratio(1, 2);
    let theta = theta_necessary(&rates)?;
    let (theta_repr, parameter, interval, obstruction) = if theta.is_zero() {
        // The necessary rate is undetermined (the point-mass case): keep
        // theta free and use the lower-order identity, valid for all theta.
        let sym = RatFun::symbol();
        let obs = obstruction_p1q3(&rates, &sym, &alpha)?;
        (None, "theta", (0.0, None), obs)
    } else {
        let obs = obstruction_p1q5(&rates, &theta, &alpha)?;
        (Some(format!("{theta}")), parameter, interval, obs)
    };
    let num_roots = count_roots_open(obstruction.numerator(), interval.0, interval.1);
    let den_roots = count_roots_open(obstruction.denominator(), interval.0, interval.1);
    let reversible = !(num_roots == 0 && den_roots == 0 && !obstruction.is_zero());
    let range = match interval.1 {
        Some(hi) => format!("({}, {})", interval.0, hi),
        None => format!("({}, inf)", interval.0),
    };
    let verdict = if reversible {
        format!("inconclusive: the obstruction vanishes somewhere on {range}")
    } else {
        format!("not reversible for any {parameter} in {range}")
    };
    Ok(VerdictReport {
        family: family.to_string(),
        parameter: parameter.to_string(),
        interval,
        theta: theta_repr,
        obstruction: format!("{obstruction}"),
        obstruction_numerator_roots: num_roots,
        obstruction_denominator_roots: den_roots,
        reversible,
        verdict,
        obstruction_ratfun: obstruction,
    })
}

/// Reference obstruction expressions for the four closed-form families, as
/// ratios of integer polynomials in the family parameter. The computed
/// obstruction matches each up to a nonzero rational constant.
pub fn golden_obstruction(family: &str) -> Option<RatFun> {
    let p = Poly::from_ints;
    match family {
        "beta" => {
            let num = &(&(&p(&[-2, 1]) * &p(&[-3, 1])) * &p(&[1, 1]))
                * &(&p(&[72, 6, -39, 8, 1]) * &p(&[0, 0, 1]));
            let den = &p(&[3, 0, 1]) * &p(&[-72, -126, -1, 6, 1]);
            Some(RatFun::new(num, den).unwrap())
        }
        "power-law" => {
            let num = p(&[-1, 1]);
            let den = &(&p(&[-4, 1]) * &p(&[-6, 1])) * &p(&[-120, 61, -14, 1]);
            Some(RatFun::new(num, den).unwrap())
        }
        "poisson-dirichlet" => {
            let num = &p(&[6, 11, 10]) * &p(&[0, 0, 1]);
            let den = &(&(&p(&[6, 5]) * &p(&[6, 11])) * &p(&[120, 394, 319, 109, 17]))
                * &p(&[1, 1]);
            Some(RatFun::new(num, den).unwrap())
        }
        "point-mass-at-one" => {
            let num = p(&[0, 0, 1]);
            let den = &p(&[1, 1]) * &p(&[1, 2]);
            Some(RatFun::new(num, den).unwrap())
        }
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rates::named_rates;

    #[test]
    fn kingman_moments_closed_form() {
        // Pure Kingman sigma2 = 1, theta = 3:
        // m_2 = (2 a2 + theta) / (4 (a2 + theta)), m_3 = (4 a2 + theta) / (8 (a2 + theta)).
        let m = XiMeasure::kingman(1.0).unwrap();
        let rates = named_rates(&m).unwrap();
        let ms = stationary_moments(&rates, &3.0, &0.5, 3).unwrap();
        assert!((ms[1] - 0.5).abs() < 1e-14);
        assert!((ms[2] - 5.0 / 16.0).abs() < 1e-14);
        assert!((ms[3] - 7.0 / 32.0).abs() < 1e-14);
    }

    #[test]
    fn symbolic_moments_in_theta_match_closed_form() {
        // Same identities as rational functions of theta, exactly.
        let m = XiMeasure::kingman(1.0).unwrap();
        let rates = named_rates_sym(&m).unwrap();
        let theta = RatFun::symbol();
        let ms = stationary_moments(&rates, &theta, &RatFun::from_ratio(1, 2), 3).unwrap();
        let p = Poly::from_ints;
        let want_m2 = RatFun::new(p(&[2, 1]), p(&[4, 4])).unwrap();
        let want_m3 = RatFun::new(p(&[4, 1]), p(&[8, 8])).unwrap();
        assert_eq!(ms[2], want_m2);
        assert_eq!(ms[3], want_m3);
    }

    #[test]
    fn theta_for_uniform_lambda() {
        // Beta family at beta = 1 has a_2 = 1, a_3 = 1/2, a_4 = 1/3,
        // a_211 = 1/3, a_22 = 0; the formula gives theta = 1.
        let m = XiMeasure::beta(1.0).unwrap();
        let rates = named_rates(&m).unwrap();
        let theta = theta_necessary(&rates).unwrap();
        assert!((theta - 1.0).abs() < 1e-12, "theta = {theta}");
    }

    #[test]
    fn kingman_theta_degenerates() {
        let m = XiMeasure::kingman(2.0).unwrap();
        let rates = named_rates(&m).unwrap();
        assert!(matches!(
            theta_necessary(&rates),
            Err(Error::KingmanDegeneracy)
        ));
    }

    #[test]
    fn kingman_obstructions_vanish_identically() {
        // For pure Kingman both identities hold for every theta.
        let m = XiMeasure::kingman(1.0).unwrap();
        let rates = named_rates_sym(&m).unwrap();
        let theta = RatFun::symbol();
        let alpha = RatFun::from_ratio(1, 2);
        assert!(obstruction_p1q3(&rates, &theta, &alpha).unwrap().is_zero());
        assert!(obstruction_p1q5(&rates, &theta, &alpha).unwrap().is_zero());
    }

    fn assert_matches_golden(m: &XiMeasure, family: &str) {
        let report = reversibility_verdict(m).unwrap();
        assert_eq!(report.family, family);
        assert!(!report.reversible, "{}", report.verdict);
        assert_eq!(report.obstruction_numerator_roots, 0);
        let golden = golden_obstruction(family).unwrap();
        let c = report
            .obstruction_ratfun
            .proportionality_constant(&golden)
            .unwrap_or_else(|| {
                panic!(
                    "obstruction {} is not proportional to {}",
                    report.obstruction, golden
                )
            });
        assert!(!c.is_zero());
    }

    #[test]
    fn beta_family_verdict() {
        assert_matches_golden(&XiMeasure::beta(1.5).unwrap(), "beta");
    }

    #[test]
    fn power_law_family_verdict() {
        assert_matches_golden(&XiMeasure::power_law(0.5).unwrap(), "power-law");
    }

    #[test]
    fn poisson_dirichlet_verdict() {
        assert_matches_golden(
            &XiMeasure::poisson_dirichlet(1.0).unwrap(),
            "poisson-dirichlet",
        );
    }

    #[test]
    fn point_mass_verdict() {
        let report = reversibility_verdict(&XiMeasure::delta_one()).unwrap();
        assert_eq!(report.parameter, "theta");
        assert!(report.theta.is_none());
        assert_matches_golden(&XiMeasure::delta_one(), "point-mass-at-one");
    }

    #[test]
    fn sturm_counts_on_unbounded_interval() {
        // (x - 3)(x + 1) has one positive root.
        let p = &Poly::from_ints(&[-3, 1]) * &Poly::from_ints(&[1, 1]);
        assert_eq!(count_roots_open(&p, 0.0, None), 1);
        assert_eq!(count_roots_open(&p, 0.0, Some(2.0)), 0);
    }
}

//! Desk-scale solver for the stochastic PDE satisfied by the distribution
//! function `u(t, x) = X_t((-inf, x])` of the measure-valued process with
//! spatial heat motion: heat drift, resampling white noise shared across
//! space through the sampling level `y`, and reproduction jumps.

use crate::error::{Error, Result};
use crate::fv::{jump_sampler, JumpSampler};
use crate::measure::{lambda_rate, CollisionSignature, XiMeasure};
use crate::quad;
use crate::stats::{path_rng, z_score, Welford};
use rand::Rng;
use rand_distr::StandardNormal;

/// A monotone grid function on `[-l, l]` with `k` cells, pinned to 0 and 1
/// at the boundary.
#[derive(Clone, Debug)]
pub struct GridField {
    pub l: f64,
    pub u: Vec<f64>,
}

impl GridField {
    pub fn from_cdf<F: Fn(f64) -> f64>(l: f64, k: usize, cdf: F) -> Result<Self> {
        if l <= 0.0 || k < 2 {
            return Err(Error::ParameterOutOfRange(
                "grid needs l > 0 and at least two cells".into(),
            ));
        }
        let h = 2.0 * l / k as f64;
        let mut u: Vec<f64> = (0..=k).map(|i| cdf(-l + i as f64 * h).clamp(0.0, 1.0)).collect();
        u[0] = 0.0;
        u[k] = 1.0;
        for i in 1..=k {
            if u[i] < u[i - 1] {
                return Err(Error::InvalidMeasure(
                    "initial distribution function must be nondecreasing".into(),
                ));
            }
        }
        Ok(GridField { l, u })
    }

    pub fn cells(&self) -> usize {
        self.u.len() - 1
    }

    pub fn h(&self) -> f64 {
        2.0 * self.l / self.cells() as f64
    }

    pub fn x(&self, i: usize) -> f64 {
        -self.l + i as f64 * self.h()
    }

    /// `int f dX` by a midpoint Stieltjes sum against the increments of `u`.
    pub fn integrate<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        let mut acc = 0.0;
        for i in 0..self.cells() {
            let du = self.u[i + 1] - self.u[i];
            if du != 0.0 {
                acc += f(0.5 * (self.x(i) + self.x(i + 1))) * du;
            }
        }
        acc
    }
}

/// One explicit step of the heat drift alone. `dt` must satisfy the CFL
/// bound `dt <= h^2 / 2`.
pub fn step_heat(field: &mut GridField, dt: f64) -> Result<()> {
    let h = field.h();
    let bound = 0.5 * h * h;
    if dt > bound * (1.0 + 1e-12) {
        return Err(Error::StabilityViolation { dt, bound });
    }
    let k = field.cells();
    let c = 0.5 * dt / (h * h);
    let u = &mut field.u;
    let prev = u.clone();
    for i in 1..k {
        u[i] = prev[i] + c * (prev[i + 1] - 2.0 * prev[i] + prev[i - 1]);
    }
    Ok(())
}

/// One step of drift plus resampling noise. The noise is white in time and
/// in the sampling level `y`, shared by every site: with `S` strata at
/// midlevels `y_j`, the increment at a site is
/// `sigma (sum_{y_j <= u_i} g_j - u_i sum_j g_j)` with `g_j ~ N(0, dt / S)`,
/// which has the resampling variance `sigma^2 u (1 - u) dt` in the limit.
pub fn step_spde<R: Rng>(
    field: &mut GridField,
    sigma2: f64,
    dt: f64,
    strata: usize,
    rng: &mut R,
) -> Result<()> {
    step_heat(field, dt)?;
    if sigma2 > 0.0 {
        let sigma = sigma2.sqrt();
        let sd = (dt / strata as f64).sqrt();
        let mut prefix = vec![0.0; strata + 1];
        for j in 0..strata {
            prefix[j + 1] = prefix[j] + rng.sample::<f64, _>(StandardNormal) * sd;
        }
        let total = prefix[strata];
        let k = field.cells();
        for i in 1..k {
            let u = field.u[i];
            // number of midlevels (j - 1/2) / S at or below u
            let count = ((u * strata as f64 + 0.5).floor() as usize).min(strata);
            field.u[i] += sigma * (prefix[count] - u * total);
        }
    }
    let k = field.cells();
    for v in field.u.iter_mut() {
        *v = v.clamp(0.0, 1.0);
    }
    field.u[0] = 0.0;
    field.u[k] = 1.0;
    // Monotone rearrangement: the drift and shared noise nearly preserve
    // order; sorting removes the residual inversions.
    field.u.sort_by(|a, b| a.partial_cmp(b).unwrap());
    Ok(())
}

/// A reproduction event: levels `y_m ~ U(0,1)` pick the parents, fractions
/// `z_m` of the population adopt the parent position.
pub fn apply_spde_jump<R: Rng>(field: &mut GridField, z: &[f64], rng: &mut R) {
    let keep = 1.0 - z.iter().sum::<f64>();
    let ys: Vec<f64> = z.iter().map(|_| rng.gen::<f64>()).collect();
    for u in field.u.iter_mut() {
        let mut v = keep * *u;
        for (&zm, &y) in z.iter().zip(&ys) {
            if y <= *u {
                v += zm;
            }
        }
        *u = v;
    }
    let k = field.cells();
    field.u[0] = 0.0;
    field.u[k] = 1.0;
}

/// Run the full dynamics to time `t`.
pub fn simulate_spde<R: Rng>(
    m: &XiMeasure,
    u0: &GridField,
    t: f64,
    dt: f64,
    strata: usize,
    rng: &mut R,
) -> Result<GridField> {
    let sampler = jump_sampler(m)?;
    simulate_spde_with(m, sampler.as_ref(), u0, t, dt, strata, rng)
}

/// [`simulate_spde`] with a prebuilt jump sampler for the same measure.
pub fn simulate_spde_with<R: Rng>(
    m: &XiMeasure,
    sampler: Option<&JumpSampler>,
    u0: &GridField,
    t: f64,
    dt: f64,
    strata: usize,
    rng: &mut R,
) -> Result<GridField> {
    let mut field = u0.clone();
    let mut time = 0.0;
    let mut next_jump = match &sampler {
        Some(s) if s.total_rate() > 0.0 => -rng.gen::<f64>().ln() / s.total_rate(),
        _ => f64::INFINITY,
    };
    while time < t {
        let target = t.min(next_jump);
        while time < target {
            let step = dt.min(target - time);
            step_spde(&mut field, m.sigma2, step, strata, rng)?;
            time += step;
        }
        if next_jump < t {
            let sampler = sampler.as_ref().unwrap();
            let z = sampler.sample(rng);
            apply_spde_jump(&mut field, &z, rng);
            next_jump += -rng.gen::<f64>().ln() / sampler.total_rate();
        } else {
            break;
        }
    }
    Ok(field)
}

/// Standard normal distribution function, accurate to ~1e-7.
pub fn normal_cdf(x: f64) -> f64 {
    // Abramowitz-Stegun 7.1.26 for erf.
    let t = 1.0 / (1.0 + 0.3275911 * x.abs() / std::f64::consts::SQRT_2);
    let poly = t
        * (0.254829592
            + t * (-0.284496736 + t * (1.421413741 + t * (-1.453152027 + t * 1.061405429))));
    let erf = 1.0 - poly * (-x * x / 2.0).exp();
    if x >= 0.0 {
        0.5 * (1.0 + erf)
    } else {
        0.5 * (1.0 - erf)
    }
}

/// Max-norm error of the deterministic drift against the heat kernel:
/// starting from `Phi(x / sqrt(s0))` the exact solution at time `t` is
/// `Phi(x / sqrt(s0 + t))`.
pub fn heat_oracle_error(l: f64, k: usize, s0: f64, t: f64, dt: f64) -> Result<f64> {
    let mut field = GridField::from_cdf(l, k, |x| normal_cdf(x / s0.sqrt()))?;
    let steps = (t / dt).round() as usize;
    let dt = t / steps as f64;
    for _ in 0..steps {
        step_heat(&mut field, dt)?;
    }
    let sd = (s0 + t).sqrt();
    let mut err: f64 = 0.0;
    for i in 0..=k {
        err = err.max((field.u[i] - normal_cdf(field.x(i) / sd)).abs());
    }
    Ok(err)
}

#[derive(Clone, Debug, serde::Serialize)]
pub struct SpdeDualityCheck {
    pub n: usize,
    pub t: f64,
    pub paths: u64,
    pub forward_mean: f64,
    pub forward_se: f64,
    pub dual_value: f64,
    pub z: f64,
}

/// Check `E <X_t, f> = <X_0, P_t f>` for `f(x) = cos(omega x)`, whose heat
/// evolution is `exp(-omega^2 t / 2) cos(omega x)`. The right side is
/// deterministic; the left is a Monte Carlo average over solver paths.
#[allow(clippy::too_many_arguments)]
pub fn spde_duality_n1(
    m: &XiMeasure,
    u0: &GridField,
    omega: f64,
    t: f64,
    dt: f64,
    strata: usize,
    paths: u64,
    seed: u64,
) -> Result<SpdeDualityCheck> {
    let sampler = jump_sampler(m)?;
    let mut w = Welford::new();
    for path in 0..paths {
        let mut rng = path_rng(seed, path);
        let field = simulate_spde_with(m, sampler.as_ref(), u0, t, dt, strata, &mut rng)?;
        w.push(field.integrate(|x| (omega * x).cos()));
    }
    let dual = (-0.5 * omega * omega * t).exp() * u0.integrate(|x| (omega * x).cos());
    Ok(SpdeDualityCheck {
        n: 1,
        t,
        paths,
        forward_mean: w.mean(),
        forward_se: w.se(),
        dual_value: dual,
        z: z_score(w.mean(), w.se(), dual, 0.0),
    })
}

/// Check the second moment `E <X_t, f>^2` against the two-particle dual:
/// two independent heat motions whose pair coalesces at the total pair rate
/// of the measure, after which the merged function `f^2` evolves alone. For
/// `f(x) = cos(omega x)` every semigroup image is explicit, leaving a single
/// integral over the coalescence time.
#[allow(clippy::too_many_arguments)]
pub fn spde_duality_n2(
    m: &XiMeasure,
    u0: &GridField,
    omega: f64,
    t: f64,
    dt: f64,
    strata: usize,
    paths: u64,
    seed: u64,
) -> Result<SpdeDualityCheck> {
    let pair = CollisionSignature::new(2, vec![2], 0)?;
    let lambda2 = lambda_rate(m, &pair)?;
    let c1 = u0.integrate(|x| (omega * x).cos());
    let c2 = u0.integrate(|x| (2.0 * omega * x).cos());
    let o2 = omega * omega;
    // No coalescence by t: the pair stays independent.
    let mut dual = (-lambda2 * t).exp() * ((-0.5 * o2 * t).exp() * c1).powi(2);
    // Coalescence at dual time tau: P_{t-tau} ((P_tau cos)^2).
    let merged = |tau: f64| {
        (-o2 * tau).exp() * 0.5 * (1.0 + (-2.0 * o2 * (t - tau)).exp() * c2)
    };
    if lambda2 > 0.0 {
        let (v, _) = quad::integrate(
            |tau| lambda2 * (-lambda2 * tau).exp() * merged(tau),
            0.0,
            t,
            1e-10,
        )?;
        dual += v;
    }
    let sampler = jump_sampler(m)?;
    let mut w = Welford::new();
    for path in 0..paths {
        let mut rng = path_rng(seed, path);
        let field = simulate_spde_with(m, sampler.as_ref(), u0, t, dt, strata, &mut rng)?;
        w.push(field.integrate(|x| (omega * x).cos()).powi(2));
    }
    Ok(SpdeDualityCheck {
        n: 2,
        t,
        paths,
        forward_mean: w.mean(),
        forward_se: w.se(),
        dual_value: dual,
        z: z_score(w.mean(), w.se(), dual, 0.0),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normal_cdf_values() {
        assert!((normal_cdf(0.0) - 0.5).abs() < 1e-9);
        assert!((normal_cdf(1.0) - 0.841344746).abs() < 1e-6);
        assert!((normal_cdf(-1.96) - 0.024997895).abs() < 1e-6);
    }

    #[test]
    fn cfl_enforced() {
        let mut f = GridField::from_cdf(5.0, 64, |x| normal_cdf(x)).unwrap();
        let h = f.h();
        assert!(matches!(
            step_heat(&mut f, h * h),
            Err(Error::StabilityViolation { .. })
        ));
    }

    #[test]
    fn heat_oracle_converges_at_second_order() {
        let e1 = heat_oracle_error(8.0, 64, 1.0, 0.5, 0.0078).unwrap();
        let e2 = heat_oracle_error(8.0, 128, 1.0, 0.5, 0.00195).unwrap();
        let ratio = e1 / e2;
        assert!(
            ratio > 3.0 && ratio < 5.0,
            "e1 = {e1}, e2 = {e2}, ratio = {ratio}"
        );
    }

    #[test]
    fn stieltjes_integration() {
        // Uniform distribution on [0, 1] embedded in [-2, 2].
        let f = GridField::from_cdf(2.0, 400, |x| x.clamp(0.0, 1.0)).unwrap();
        let mean = f.integrate(|x| x);
        assert!((mean - 0.5).abs() < 1e-3);
        let second = f.integrate(|x| x * x);
        assert!((second - 1.0 / 3.0).abs() < 1e-3);
    }

    #[test]
    fn jump_moves_mass_to_parent() {
        let mut f = GridField::from_cdf(2.0, 100, |x| x.clamp(0.0, 1.0)).unwrap();
        let mut rng = path_rng(8, 0);
        apply_spde_jump(&mut f, &[0.5], &mut rng);
        // Mass is conserved and the field stays a distribution function.
        assert_eq!(f.u[0], 0.0);
        assert_eq!(*f.u.last().unwrap(), 1.0);
        for w in f.u.windows(2) {
            assert!(w[1] >= w[0]);
        }
        // Exactly one atom of size 1/2 appears somewhere.
        let max_gap = f
            .u
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(0.0f64, f64::max);
        // One grid cell of slack around the atom.
        assert!((max_gap - 0.5).abs() < 0.05, "max gap {max_gap}");
    }

    #[test]
    fn noise_variance_matches_resampling() {
        // One step at a site with u = 1/2: Var(u) ~ sigma^2 u (1-u) dt.
        let base = GridField::from_cdf(2.0, 8, |x| x.clamp(0.0, 1.0)).unwrap();
        let i = 5;
        let u0 = base.u[i];
        assert_eq!(u0, 0.5);
        let dt = 1e-3;
        let mut w = Welford::new();
        let mut rng = path_rng(9, 0);
        for _ in 0..40_000 {
            let mut f = base.clone();
            step_spde(&mut f, 1.0, dt, 64, &mut rng).unwrap();
            w.push(f.u[i]);
        }
        let want = u0 * (1.0 - u0) * dt;
        assert!(
            (w.variance() - want).abs() < 0.1 * want,
            "var {} want {want}",
            w.variance()
        );
    }
}

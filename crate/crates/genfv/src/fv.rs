//! Forward simulation of the measure-valued process on a finite type space:
//! Wright-Fisher diffusion plus mutation drift between reproduction jumps,
//! and mass reassignment jumps driven by the density part of the measure.

use crate::dual::{simulate_dual_with, FnTable};
use crate::error::{Error, Result};
use crate::measure::{density_fn, LambdaFamily, Xi0, XiMeasure};
use crate::mutation::MutationGenerator;
use crate::quad;
use crate::stats::{path_rng, z_score, Welford};
use rand::Rng;
use rand_distr::StandardNormal;

enum JumpKind {
    /// A single reassignment profile, e.g. the point mass at 1.
    Fixed(Vec<f64>),
    /// Finitely many profiles picked by their rates.
    Atoms { rates: Vec<f64>, zs: Vec<Vec<f64>> },
    /// Single-coordinate jump size drawn by inverse CDF from a tabulated
    /// intensity `x^{-2} Lambda(dx)` on `(eps, 1]`.
    Tabulated { xs: Vec<f64>, cdf: Vec<f64> },
}

/// Sampler for the reproduction-jump part of the process.
pub struct JumpSampler {
    total_rate: f64,
    kind: JumpKind,
}

impl JumpSampler {
    pub fn total_rate(&self) -> f64 {
        self.total_rate
    }

    /// Draw the jump sizes `z_1 >= z_2 >= ...` of one reproduction event.
    pub fn sample<R: Rng>(&self, rng: &mut R) -> Vec<f64> {
        match &self.kind {
            JumpKind::Fixed(z) => z.clone(),
            JumpKind::Atoms { rates, zs } => {
                let mut u = rng.gen::<f64>() * self.total_rate;
                for (rate, z) in rates.iter().zip(zs.iter()) {
                    u -= rate;
                    if u <= 0.0 {
                        return z.clone();
                    }
                }
                zs.last().unwrap().clone()
            }
            JumpKind::Tabulated { xs, cdf } => {
                let u = rng.gen::<f64>() * self.total_rate;
                let i = cdf.partition_point(|&c| c < u).min(xs.len() - 2);
                let lo = if i == 0 { 0.0 } else { cdf[i - 1] };
                let frac = ((u - lo) / (cdf[i] - lo)).clamp(0.0, 1.0);
                vec![xs[i] + frac * (xs[i + 1] - xs[i])]
            }
        }
    }
}

const TABULATION_CELLS: usize = 4096;

/// Build the jump sampler for a measure, or `None` when the measure has no
/// jump part. Infinite-activity densities must be truncated first.
pub fn jump_sampler(m: &XiMeasure) -> Result<Option<JumpSampler>> {
    match &m.xi0 {
        None => Ok(None),
        Some(Xi0::Lambda { family, truncation }) => match (family, truncation) {
            (LambdaFamily::PointMassOne, _) => Ok(Some(JumpSampler {
                total_rate: 1.0,
                kind: JumpKind::Fixed(vec![1.0]),
            })),
            (_, None) => Err(Error::TruncationRequired),
            (family, Some(eps)) => {
                let dens = density_fn(family);
                let k = TABULATION_CELLS;
                let ratio = (1.0 / eps).powf(1.0 / k as f64);
                let mut xs = Vec::with_capacity(k + 1);
                let mut x = *eps;
                for _ in 0..k {
                    xs.push(x);
                    x *= ratio;
                }
                xs.push(1.0);
                let mut cdf = Vec::with_capacity(k);
                let mut acc = 0.0;
                for w in xs.windows(2) {
                    let (mass, _) =
                        quad::integrate(|x| dens(x) / (x * x), w[0], w[1], 1e-10)?;
                    acc += mass;
                    cdf.push(acc);
                }
                Ok(Some(JumpSampler {
                    total_rate: acc,
                    kind: JumpKind::Tabulated { xs, cdf },
                }))
            }
        },
        Some(Xi0::SimplexAtoms(atoms)) => {
            let mut rates = Vec::new();
            let mut zs = Vec::new();
            for (w, z) in atoms {
                let sum2: f64 = z.iter().map(|v| v * v).sum();
                rates.push(w / sum2);
                zs.push(z.iter().copied().filter(|&v| v > 0.0).collect());
            }
            let total_rate = rates.iter().sum();
            Ok(Some(JumpSampler {
                total_rate,
                kind: JumpKind::Atoms { rates, zs },
            }))
        }
        Some(Xi0::PoissonDirichlet { .. }) => Err(Error::Unsupported(
            "no forward sampler for the Poisson-Dirichlet family".into(),
        )),
    }
}

/// One Euler-Maruyama step of the diffusive part: mutation drift plus
/// resampling noise with covariance `sigma2 (x_i d_ij - x_i x_j) dt`.
pub fn step_diffusion<R: Rng>(
    x: &mut [f64],
    mutation: Option<&MutationGenerator>,
    sigma2: f64,
    dt: f64,
    rng: &mut R,
) {
    let d = x.len();
    let mut drift = vec![0.0; d];
    if let Some(gen) = mutation {
        for i in 0..d {
            for j in 0..d {
                drift[i] += x[j] * gen.rate(j, i);
            }
        }
    }
    if sigma2 > 0.0 {
        let sigma = sigma2.sqrt();
        let w: Vec<f64> = (0..d)
            .map(|_| rng.sample::<f64, _>(StandardNormal) * dt.sqrt())
            .collect();
        let proj: f64 = x.iter().zip(&w).map(|(&p, &wi)| p.sqrt() * wi).sum();
        for i in 0..d {
            x[i] += sigma * (x[i].sqrt() * w[i] - x[i] * proj);
        }
    }
    for i in 0..d {
        x[i] += drift[i] * dt;
        if x[i] < 0.0 {
            x[i] = 0.0;
        }
    }
    let total: f64 = x.iter().sum();
    for v in x.iter_mut() {
        *v /= total;
    }
}

/// A reproduction event: fractions `z_k` of the population are reassigned to
/// parents drawn from the current state.
pub fn apply_jump<R: Rng>(x: &mut [f64], z: &[f64], rng: &mut R) {
    let keep = 1.0 - z.iter().sum::<f64>();
    let parents: Vec<usize> = z
        .iter()
        .map(|_| {
            let mut u = rng.gen::<f64>();
            for (i, &p) in x.iter().enumerate() {
                u -= p;
                if u <= 0.0 {
                    return i;
                }
            }
            x.len() - 1
        })
        .collect();
    for v in x.iter_mut() {
        *v *= keep;
    }
    for (&zk, &p) in z.iter().zip(&parents) {
        x[p] += zk;
    }
}

/// Simulate the forward process to time `t` with Euler step `dt`. Builds the
/// jump sampler itself; use [`simulate_fv_with`] to share one across paths
/// (the tabulated samplers are expensive to construct).
pub fn simulate_fv<R: Rng>(
    m: &XiMeasure,
    mutation: Option<&MutationGenerator>,
    x0: &[f64],
    t: f64,
    dt: f64,
    rng: &mut R,
) -> Result<Vec<f64>> {
    let sampler = jump_sampler(m)?;
    simulate_fv_with(m, sampler.as_ref(), mutation, x0, t, dt, rng)
}

/// [`simulate_fv`] with a prebuilt jump sampler for the same measure.
pub fn simulate_fv_with<R: Rng>(
    m: &XiMeasure,
    sampler: Option<&JumpSampler>,
    mutation: Option<&MutationGenerator>,
    x0: &[f64],
    t: f64,
    dt: f64,
    rng: &mut R,
) -> Result<Vec<f64>> {
    let total: f64 = x0.iter().sum();
    if x0.is_empty() || x0.iter().any(|&v| v < 0.0) || (total - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidMeasure(
            "initial state must be a probability vector".into(),
        ));
    }
    if let Some(gen) = mutation {
        if gen.dim() != x0.len() {
            return Err(Error::DimensionMismatch(
                "mutation generator size does not match the state".into(),
            ));
        }
    }
    let mut x = x0.to_vec();
    let mut time = 0.0;
    let mut next_jump = match &sampler {
        Some(s) if s.total_rate() > 0.0 => -rng.gen::<f64>().ln() / s.total_rate(),
        _ => f64::INFINITY,
    };
    while time < t {
        let target = t.min(next_jump);
        while time < target {
            let step = dt.min(target - time);
            step_diffusion(&mut x, mutation, m.sigma2, step, rng);
            time += step;
        }
        if next_jump < t {
            let sampler = sampler.as_ref().unwrap();
            let z = sampler.sample(rng);
            apply_jump(&mut x, &z, rng);
            next_jump += -rng.gen::<f64>().ln() / sampler.total_rate();
        } else {
            break;
        }
    }
    Ok(x)
}

/// Result of comparing the forward moment `E <X_t^n, f>` with its dual
/// representation for `f` the product indicator of type 0.
#[derive(Clone, Debug, serde::Serialize)]
pub struct DualityCheck {
    pub n: usize,
    pub t: f64,
    pub paths: u64,
    pub forward_mean: f64,
    pub forward_se: f64,
    pub dual_mean: f64,
    pub dual_se: f64,
    pub z: f64,
}

/// Monte Carlo duality check at one time point for several moment orders.
/// Forward paths are shared across the orders; the dual is re-run per order.
pub fn moment_duality_check(
    m: &XiMeasure,
    mutation: Option<&MutationGenerator>,
    x0: &[f64],
    orders: &[usize],
    t: f64,
    dt: f64,
    paths: u64,
    seed: u64,
) -> Result<Vec<DualityCheck>> {
    let d = x0.len();
    let sampler = jump_sampler(m)?;
    let mut forward: Vec<Welford> = orders.iter().map(|_| Welford::new()).collect();
    for path in 0..paths {
        let mut rng = path_rng(seed, path);
        let x = simulate_fv_with(m, sampler.as_ref(), mutation, x0, t, dt, &mut rng)?;
        for (w, &n) in forward.iter_mut().zip(orders) {
            w.push(x[0].powi(n as i32));
        }
    }
    let mut catalogs = Vec::new();
    let mut out = Vec::new();
    for (i, &n) in orders.iter().enumerate() {
        let f0 = FnTable::product_indicator(d, n, 0);
        let mut dual = Welford::new();
        for path in 0..paths {
            let mut rng = path_rng(seed, (1 + i as u64) * paths + path);
            let state = simulate_dual_with(m, mutation, &f0, t, &mut catalogs, &mut rng)?;
            dual.push(state.function.integrate_product(x0)?);
        }
        out.push(DualityCheck {
            n,
            t,
            paths,
            forward_mean: forward[i].mean(),
            forward_se: forward[i].se(),
            dual_mean: dual.mean(),
            dual_se: dual.se(),
            z: z_score(forward[i].mean(), forward[i].se(), dual.mean(), dual.se()),
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::{lambda_rate, CollisionSignature};

    #[test]
    fn untruncated_beta_needs_truncation() {
        let m = XiMeasure::beta(1.5).unwrap();
        assert!(matches!(jump_sampler(&m), Err(Error::TruncationRequired)));
    }

    #[test]
    fn tabulated_total_rate_matches_quadrature() {
        let m = XiMeasure::beta(1.5).unwrap().truncated(0.05).unwrap();
        let sampler = jump_sampler(&m).unwrap().unwrap();
        let dens = density_fn(&LambdaFamily::Beta { beta: 1.5 });
        let (want, _) = quad::integrate(|x| dens(x) / (x * x), 0.05, 1.0, 1e-10).unwrap();
        assert!((sampler.total_rate() - want).abs() < 1e-7 * want);
    }

    #[test]
    fn tabulated_samples_match_pair_rate() {
        // E[x^2 * rate] over jump sizes equals the pair collision rate of the
        // truncated measure.
        let m = XiMeasure::power_law(0.5).unwrap().truncated(0.02).unwrap();
        let sampler = jump_sampler(&m).unwrap().unwrap();
        let mut rng = path_rng(17, 0);
        let mut w = Welford::new();
        for _ in 0..200_000 {
            let z = sampler.sample(&mut rng);
            w.push(z[0] * z[0] * sampler.total_rate());
        }
        let sig = CollisionSignature::new(2, vec![2], 0).unwrap();
        let want = lambda_rate(&m, &sig).unwrap();
        assert!(
            (w.mean() - want).abs() < 4.0 * w.se() + 1e-6,
            "mean {} want {want}",
            w.mean()
        );
    }

    #[test]
    fn diffusion_preserves_simplex_and_mean() {
        let mut rng = path_rng(3, 0);
        let mut w = Welford::new();
        for _ in 0..20_000 {
            let mut x = vec![0.3, 0.7];
            for _ in 0..10 {
                step_diffusion(&mut x, None, 1.0, 0.01, &mut rng);
            }
            assert!((x.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            assert!(x.iter().all(|&v| v >= 0.0));
            w.push(x[0]);
        }
        // Resampling noise is driftless.
        assert!((w.mean() - 0.3).abs() < 4.0 * w.se());
    }

    #[test]
    fn jump_reassigns_mass() {
        let mut rng = path_rng(4, 0);
        let mut x = vec![1.0, 0.0];
        apply_jump(&mut x, &[0.4], &mut rng);
        // The parent is type 0 almost surely.
        assert!((x[0] - 1.0).abs() < 1e-12);

        let mut hits = 0;
        for _ in 0..10_000 {
            let mut x = vec![0.25, 0.75];
            apply_jump(&mut x, &[0.5], &mut rng);
            if x[0] > 0.5 {
                hits += 1;
            }
        }
        // Parent is type 0 with probability 1/4.
        assert!((hits as f64 / 10_000.0 - 0.25).abs() < 0.02);
    }

    #[test]
    fn star_process_absorbs_in_pure_states() {
        // With the point mass at 1 every jump sends the state to a vertex.
        let m = XiMeasure::delta_one();
        let mut rng = path_rng(5, 0);
        let x = simulate_fv(&m, None, &[0.6, 0.4], 50.0, 0.01, &mut rng).unwrap();
        assert!(x[0] == 1.0 || x[1] == 1.0);
    }

    #[test]
    fn kingman_duality_small() {
        let m = XiMeasure::kingman(1.0).unwrap();
        let checks =
            moment_duality_check(&m, None, &[0.3, 0.7], &[2], 0.5, 5e-4, 4000, 21).unwrap();
        assert!(checks[0].z.abs() < 4.0, "z = {}", checks[0].z);
    }
}

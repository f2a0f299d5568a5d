//! Small statistics helpers for Monte Carlo diagnostics.

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

/// Streaming mean and variance (Welford).
#[derive(Clone, Debug, Default)]
pub struct Welford {
    n: u64,
    mean: f64,
    m2: f64,
}

impl Welford {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, x: f64) {
        self.n += 1;
        let delta = x - self.mean;
        self.mean += delta / self.n as f64;
        self.m2 += delta * (x - self.mean);
    }

    pub fn count(&self) -> u64 {
        self.n
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn variance(&self) -> f64 {
        if self.n < 2 {
            0.0
        } else {
            self.m2 / (self.n - 1) as f64
        }
    }

    /// Standard error of the mean.
    pub fn se(&self) -> f64 {
        (self.variance() / self.n.max(1) as f64).sqrt()
    }
}

/// Two-sample z score for the difference of two Monte Carlo means.
pub fn z_score(mean_a: f64, se_a: f64, mean_b: f64, se_b: f64) -> f64 {
    let denom = (se_a * se_a + se_b * se_b).sqrt();
    if denom == 0.0 {
        if mean_a == mean_b {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        (mean_a - mean_b) / denom
    }
}

/// One-sample Kolmogorov-Smirnov statistic against `cdf`, together with the
/// 1% critical value `1.628 / sqrt(n)`.
pub fn ks_test<F: Fn(f64) -> f64>(samples: &mut [f64], cdf: F) -> (f64, f64) {
    samples.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = samples.len();
    let mut d: f64 = 0.0;
    for (i, &x) in samples.iter().enumerate() {
        let f = cdf(x);
        let lo = i as f64 / n as f64;
        let hi = (i + 1) as f64 / n as f64;
        d = d.max((f - lo).abs()).max((hi - f).abs());
    }
    (d, 1.628 / (n as f64).sqrt())
}

/// Deterministic per-path generator: one seed, one ChaCha stream per path.
pub fn path_rng(seed: u64, stream: u64) -> ChaCha12Rng {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn welford_matches_direct() {
        let xs = [1.0, 2.0, 4.0, 8.0, 16.0];
        let mut w = Welford::new();
        for &x in &xs {
            w.push(x);
        }
        let mean: f64 = xs.iter().sum::<f64>() / 5.0;
        let var: f64 = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / 4.0;
        assert!((w.mean() - mean).abs() < 1e-12);
        assert!((w.variance() - var).abs() < 1e-12);
    }

    #[test]
    fn ks_accepts_uniform() {
        let mut rng = path_rng(7, 0);
        let mut xs: Vec<f64> = (0..2000).map(|_| rng.gen::<f64>()).collect();
        let (d, crit) = ks_test(&mut xs, |x| x.clamp(0.0, 1.0));
        assert!(d < crit, "d = {d}, crit = {crit}");
    }

    #[test]
    fn ks_rejects_wrong_law() {
        let mut rng = path_rng(7, 1);
        let mut xs: Vec<f64> = (0..2000).map(|_| rng.gen::<f64>().powi(2)).collect();
        let (d, crit) = ks_test(&mut xs, |x| x.clamp(0.0, 1.0));
        assert!(d > crit);
    }

    #[test]
    fn streams_are_independent_and_reproducible() {
        let a: Vec<u64> = {
            let mut r = path_rng(1, 0);
            (0..4).map(|_| r.gen()).collect()
        };
        let a2: Vec<u64> = {
            let mut r = path_rng(1, 0);
            (0..4).map(|_| r.gen()).collect()
        };
        let b: Vec<u64> = {
            let mut r = path_rng(1, 1);
            (0..4).map(|_| r.gen()).collect()
        };
        assert_eq!(a, a2);
        assert_ne!(a, b);
    }
}

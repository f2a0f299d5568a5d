//! Exact simulation of the coalescent as a continuous-time Markov chain on
//! partitions. Jumps are grouped by collision signature: within a class every
//! directive partition is equally likely, so sampling picks a class by its
//! aggregate rate and then a uniform directive.

use crate::error::{Error, Result};
use crate::measure::{lambda_rate, signatures_for_b, CollisionSignature, XiMeasure};
use crate::partition::Partition;
use rand::seq::SliceRandom;
use rand::Rng;

/// One collision class available from a state with `b` blocks.
#[derive(Clone, Debug)]
pub struct JumpClass {
    pub sig: CollisionSignature,
    /// Rate of a single directive in this class.
    pub rate: f64,
    /// Number of directive partitions with this signature.
    pub multiplicity: f64,
}

impl JumpClass {
    pub fn class_rate(&self) -> f64 {
        self.rate * self.multiplicity
    }
}

/// All collision classes from `b` blocks, with the total jump rate.
#[derive(Clone, Debug)]
pub struct JumpCatalog {
    pub b: usize,
    pub classes: Vec<JumpClass>,
    pub total_rate: f64,
}

/// Number of set partitions of `b` labeled blocks realizing a signature:
/// `b! / (prod k_i! * prod_m mult(m)!)`, with singletons counted as size-1
/// groups.
pub fn signature_multiplicity(sig: &CollisionSignature) -> f64 {
    let factorial = |n: usize| (1..=n).map(|i| i as f64).product::<f64>();
    let mut count = factorial(sig.b);
    let mut size_mult: Vec<(usize, usize)> = Vec::new();
    for &k in sig.ks.iter().chain(std::iter::repeat(&1).take(sig.s)) {
        count /= factorial(k);
        match size_mult.iter_mut().find(|(sz, _)| *sz == k) {
            Some((_, c)) => *c += 1,
            None => size_mult.push((k, 1)),
        }
    }
    for (_, c) in size_mult {
        count /= factorial(c);
    }
    count
}

pub fn jump_catalog(m: &XiMeasure, b: usize) -> Result<JumpCatalog> {
    if b < 2 {
        return Err(Error::InvalidSignature(
            "a jump requires at least two blocks".into(),
        ));
    }
    let mut classes = Vec::new();
    let mut total_rate = 0.0;
    for sig in signatures_for_b(b) {
        let rate = lambda_rate(m, &sig)?;
        if rate == 0.0 {
            continue;
        }
        let class = JumpClass {
            multiplicity: signature_multiplicity(&sig),
            sig,
            rate,
        };
        total_rate += class.class_rate();
        classes.push(class);
    }
    Ok(JumpCatalog {
        b,
        classes,
        total_rate,
    })
}

/// Uniform directive partition of `{1..b}` with the group sizes of `sig`.
pub fn sample_directive<R: Rng>(sig: &CollisionSignature, rng: &mut R) -> Partition {
    let mut labels: Vec<usize> = (1..=sig.b).collect();
    labels.shuffle(rng);
    let mut blocks = Vec::with_capacity(sig.r() + sig.s);
    let mut pos = 0;
    for &k in &sig.ks {
        blocks.push(labels[pos..pos + k].to_vec());
        pos += k;
    }
    for &l in &labels[pos..] {
        blocks.push(vec![l]);
    }
    Partition::new(blocks).expect("directive built from a permutation is valid")
}

#[derive(Clone, Debug)]
pub struct CoalescentEvent {
    pub time: f64,
    pub state: Partition,
    /// Signature of the collision that produced this state; `None` for the
    /// initial state.
    pub signature: Option<CollisionSignature>,
}

#[derive(Clone, Debug)]
pub struct CoalescentPath {
    pub events: Vec<CoalescentEvent>,
}

impl CoalescentPath {
    pub fn final_state(&self) -> &Partition {
        &self.events.last().unwrap().state
    }

    /// Absorption time into a single block, if reached.
    pub fn absorption_time(&self) -> Option<f64> {
        let last = self.events.last().unwrap();
        (last.state.num_blocks() == 1).then_some(last.time)
    }
}

/// Run the coalescent started from `n` singleton blocks until a single block
/// remains or `t_max` elapses. Builds its own catalog cache; use
/// [`simulate_coalescent_with`] to share one across paths.
pub fn simulate_coalescent<R: Rng>(
    m: &XiMeasure,
    n: usize,
    t_max: Option<f64>,
    rng: &mut R,
) -> Result<CoalescentPath> {
    let mut catalogs = Vec::new();
    simulate_coalescent_with(m, n, t_max, &mut catalogs, rng)
}

/// [`simulate_coalescent`] with a caller-held catalog cache, so repeated
/// paths do not redo the rate quadrature. The cache must come from runs of
/// the same measure.
pub fn simulate_coalescent_with<R: Rng>(
    m: &XiMeasure,
    n: usize,
    t_max: Option<f64>,
    catalogs: &mut Vec<Option<JumpCatalog>>,
    rng: &mut R,
) -> Result<CoalescentPath> {
    if n == 0 {
        return Err(Error::InvalidPartition("need at least one block".into()));
    }
    if catalogs.len() < n + 1 {
        catalogs.resize(n + 1, None);
    }
    let mut state = Partition::singletons(n);
    let mut time = 0.0;
    let mut events = vec![CoalescentEvent {
        time,
        state: state.clone(),
        signature: None,
    }];
    while state.num_blocks() > 1 {
        let b = state.num_blocks();
        if catalogs[b].is_none() {
            catalogs[b] = Some(jump_catalog(m, b)?);
        }
        let catalog = catalogs[b].as_ref().unwrap();
        if catalog.total_rate <= 0.0 {
            break;
        }
        time += -rng.gen::<f64>().ln() / catalog.total_rate;
        if let Some(t_max) = t_max {
            if time > t_max {
                break;
            }
        }
        let mut u = rng.gen::<f64>() * catalog.total_rate;
        let mut chosen = catalog.classes.last().unwrap();
        for class in &catalog.classes {
            u -= class.class_rate();
            if u <= 0.0 {
                chosen = class;
                break;
            }
        }
        let directive = sample_directive(&chosen.sig, rng);
        state = state.coag(&directive)?;
        events.push(CoalescentEvent {
            time,
            state: state.clone(),
            signature: Some(chosen.sig.clone()),
        });
    }
    Ok(CoalescentPath { events })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::{path_rng, Welford};

    #[test]
    fn multiplicities() {
        let sig = |b, ks: &[usize], s| CollisionSignature::new(b, ks.to_vec(), s).unwrap();
        // pairs of 4: C(4,2) = 6
        assert_eq!(signature_multiplicity(&sig(4, &[2], 2)), 6.0);
        // {2,2} of 4: 3 pairings
        assert_eq!(signature_multiplicity(&sig(4, &[2, 2], 0)), 3.0);
        // triple of 5: C(5,3) = 10
        assert_eq!(signature_multiplicity(&sig(5, &[3], 2)), 10.0);
        // {3,2} of 5: C(5,3) = 10
        assert_eq!(signature_multiplicity(&sig(5, &[3, 2], 0)), 10.0);
        // {2,2,2} of 6: 15
        assert_eq!(signature_multiplicity(&sig(6, &[2, 2, 2], 0)), 15.0);
        // total merge
        assert_eq!(signature_multiplicity(&sig(6, &[6], 0)), 1.0);
    }

    #[test]
    fn multiplicities_sum_to_bell_excess() {
        // Classes with their multiplicities cover every non-identity
        // partition of b blocks exactly once.
        use crate::partition::set_partitions;
        for b in 2..=7 {
            let total: f64 = signatures_for_b(b)
                .iter()
                .map(signature_multiplicity)
                .sum();
            assert_eq!(total as usize, set_partitions(b).len() - 1);
        }
    }

    #[test]
    fn kingman_catalog() {
        let m = XiMeasure::kingman(1.0).unwrap();
        let c = jump_catalog(&m, 5).unwrap();
        assert_eq!(c.classes.len(), 1);
        assert!((c.total_rate - 10.0).abs() < 1e-12);
    }

    #[test]
    fn delta_one_always_total_merge() {
        let m = XiMeasure::delta_one();
        let mut rng = path_rng(3, 0);
        for _ in 0..20 {
            let path = simulate_coalescent(&m, 6, None, &mut rng).unwrap();
            assert_eq!(path.events.len(), 2);
            assert_eq!(path.final_state().num_blocks(), 1);
        }
    }

    #[test]
    fn kingman_pair_absorption_time_mean() {
        // From 2 blocks absorption is Exp(sigma2); mean 1/sigma2.
        let m = XiMeasure::kingman(2.0).unwrap();
        let mut rng = path_rng(11, 0);
        let mut w = Welford::new();
        for _ in 0..20_000 {
            let path = simulate_coalescent(&m, 2, None, &mut rng).unwrap();
            w.push(path.absorption_time().unwrap());
        }
        assert!((w.mean() - 0.5).abs() < 4.0 * w.se(), "mean {}", w.mean());
    }

    #[test]
    fn block_counts_strictly_decrease() {
        let m = XiMeasure::beta(1.2).unwrap();
        let mut rng = path_rng(5, 0);
        let path = simulate_coalescent(&m, 8, None, &mut rng).unwrap();
        for w in path.events.windows(2) {
            assert!(w[1].state.num_blocks() < w[0].state.num_blocks());
            assert!(w[1].time > w[0].time);
        }
    }
}

//! The function-valued dual process: a coalescing partition together with a
//! function on type tuples, evolved by the mutation semigroup between
//! collisions and collapsed along blocks at collisions.

use crate::coalescent::{jump_catalog, sample_directive, JumpCatalog};
use crate::error::{Error, Result};
use crate::measure::XiMeasure;
use crate::mutation::MutationGenerator;
use crate::partition::Partition;
use crate::stats::{path_rng, Welford};
use rand::Rng;

/// A function `{0..d-1}^m -> R` tabulated densely. The value at
/// `(x_1,...,x_m)` sits at index `sum_i x_i d^(i-1)`.
#[derive(Clone, Debug, PartialEq)]
pub struct FnTable {
    pub d: usize,
    pub m: usize,
    values: Vec<f64>,
}

impl FnTable {
    pub fn new(d: usize, m: usize, values: Vec<f64>) -> Result<Self> {
        if d == 0 {
            return Err(Error::DimensionMismatch("need at least one type".into()));
        }
        let expect = d.pow(m as u32);
        if values.len() != expect {
            return Err(Error::DimensionMismatch(format!(
                "table for {m} arguments over {d} types needs {expect} values, got {}",
                values.len()
            )));
        }
        Ok(FnTable { d, m, values })
    }

    pub fn from_fn<F: FnMut(&[usize]) -> f64>(d: usize, m: usize, mut f: F) -> Self {
        let mut values = vec![0.0; d.pow(m as u32)];
        let mut idx = vec![0usize; m];
        for (flat, v) in values.iter_mut().enumerate() {
            let mut rem = flat;
            for x in idx.iter_mut() {
                *x = rem % d;
                rem /= d;
            }
            *v = f(&idx);
        }
        FnTable { d, m, values }
    }

    /// `f(x_1,...,x_m) = prod_i 1{x_i = type_index}`, the moment observable.
    pub fn product_indicator(d: usize, m: usize, type_index: usize) -> Self {
        Self::from_fn(d, m, |idx| {
            if idx.iter().all(|&x| x == type_index) {
                1.0
            } else {
                0.0
            }
        })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, idx: &[usize]) -> f64 {
        debug_assert_eq!(idx.len(), self.m);
        let mut flat = 0usize;
        for &x in idx.iter().rev() {
            flat = flat * self.d + x;
        }
        self.values[flat]
    }

    /// Collapse along the blocks of `pi`: the result `g` has one argument per
    /// block and `g(x_1..x_k) = f(y_1..y_m)` with `y_i = x_{block(i)}`.
    pub fn collapse(&self, pi: &Partition) -> Result<FnTable> {
        if pi.ground_size() != self.m {
            return Err(Error::DimensionMismatch(format!(
                "partition of {{1..{}}} applied to a {}-argument table",
                pi.ground_size(),
                self.m
            )));
        }
        let k = pi.num_blocks();
        let block_of = pi.block_index_of();
        let mut y = vec![0usize; self.m];
        let out = FnTable::from_fn(self.d, k, |x| {
            for i in 0..self.m {
                y[i] = x[block_of[i + 1]];
            }
            self.get(&y)
        });
        Ok(out)
    }

    /// Contract each argument with the row-stochastic matrix `p` (row-major
    /// `d x d`): `g(x) = sum_y prod_i p[x_i][y_i] f(y)`, the action of a
    /// product semigroup.
    pub fn contract_all_axes(&self, p: &[f64]) -> Result<FnTable> {
        if p.len() != self.d * self.d {
            return Err(Error::DimensionMismatch("matrix size mismatch".into()));
        }
        let d = self.d;
        let mut values = self.values.clone();
        let mut scratch = vec![0.0; values.len()];
        for axis in 0..self.m {
            let stride = d.pow(axis as u32);
            let outer = values.len() / (stride * d);
            for o in 0..outer {
                for inner in 0..stride {
                    let base = o * stride * d + inner;
                    for x in 0..d {
                        let mut acc = 0.0;
                        for y in 0..d {
                            acc += p[x * d + y] * values[base + y * stride];
                        }
                        scratch[base + x * stride] = acc;
                    }
                }
            }
            std::mem::swap(&mut values, &mut scratch);
        }
        Ok(FnTable {
            d,
            m: self.m,
            values,
        })
    }

    /// `<mu^m, f>` for the product of the probability vector `mu`.
    pub fn integrate_product(&self, mu: &[f64]) -> Result<f64> {
        if mu.len() != self.d {
            return Err(Error::DimensionMismatch("measure dimension mismatch".into()));
        }
        let d = self.d;
        let mut acc = 0.0;
        for (flat, &v) in self.values.iter().enumerate() {
            if v == 0.0 {
                continue;
            }
            let mut w = 1.0;
            let mut rem = flat;
            for _ in 0..self.m {
                w *= mu[rem % d];
                rem /= d;
            }
            acc += v * w;
        }
        Ok(acc)
    }
}

/// Terminal state of one dual run.
#[derive(Clone, Debug)]
pub struct DualState {
    pub partition: Partition,
    pub function: FnTable,
}

/// Run the dual `(M_t, Z_t)` up to time `t`, starting from the singleton
/// partition on `f0.m` lineages and `Z_0 = f0`. Builds its own catalog
/// cache; use [`simulate_dual_with`] to share one across paths.
pub fn simulate_dual<R: Rng>(
    m: &XiMeasure,
    mutation: Option<&MutationGenerator>,
    f0: &FnTable,
    t: f64,
    rng: &mut R,
) -> Result<DualState> {
    let mut catalogs = Vec::new();
    simulate_dual_with(m, mutation, f0, t, &mut catalogs, rng)
}

/// [`simulate_dual`] with a caller-held catalog cache, so repeated paths do
/// not redo the rate quadrature. The cache is grown on demand and must come
/// from runs of the same measure.
pub fn simulate_dual_with<R: Rng>(
    m: &XiMeasure,
    mutation: Option<&MutationGenerator>,
    f0: &FnTable,
    t: f64,
    catalogs: &mut Vec<Option<JumpCatalog>>,
    rng: &mut R,
) -> Result<DualState> {
    if let Some(gen) = mutation {
        if gen.dim() != f0.d {
            return Err(Error::DimensionMismatch(
                "mutation generator and table type counts differ".into(),
            ));
        }
    }
    let n = f0.m;
    let mut partition = Partition::singletons(n);
    let mut function = f0.clone();
    let mut time = 0.0;
    if catalogs.len() < n + 1 {
        catalogs.resize(n + 1, None);
    }

    let evolve = |f: &FnTable, dt: f64| -> Result<FnTable> {
        match mutation {
            Some(gen) if dt > 0.0 => f.contract_all_axes(&gen.transition_matrix(dt)),
            _ => Ok(f.clone()),
        }
    };

    loop {
        let b = partition.num_blocks();
        let total_rate = if b >= 2 {
            if catalogs[b].is_none() {
                catalogs[b] = Some(jump_catalog(m, b)?);
            }
            catalogs[b].as_ref().unwrap().total_rate
        } else {
            0.0
        };
        let hold = if total_rate > 0.0 {
            -rng.gen::<f64>().ln() / total_rate
        } else {
            f64::INFINITY
        };
        if time + hold >= t {
            function = evolve(&function, t - time)?;
            break;
        }
        time += hold;
        function = evolve(&function, hold)?;
        let catalog = catalogs[b].as_ref().unwrap();
        let mut u = rng.gen::<f64>() * total_rate;
        let mut chosen = catalog.classes.last().unwrap();
        for class in &catalog.classes {
            u -= class.class_rate();
            if u <= 0.0 {
                chosen = class;
                break;
            }
        }
        let directive = sample_directive(&chosen.sig, rng);
        function = function.collapse(&directive)?;
        partition = partition.coag(&directive)?;
    }
    Ok(DualState {
        partition,
        function,
    })
}

/// One absorption run of the lineage-counting dual under parent-independent
/// mutation: lineages coalesce by the collision classes and are killed by
/// mutation at rate `theta / 2` each, picking up a factor `alpha` per kill.
/// The returned product is an unbiased draw for the stationary moment.
pub fn absorption_sample<R: Rng>(
    m: &XiMeasure,
    theta: f64,
    alpha: f64,
    n: usize,
    catalogs: &mut Vec<Option<JumpCatalog>>,
    rng: &mut R,
) -> Result<f64> {
    if theta <= 0.0 {
        return Err(Error::ParameterOutOfRange(
            "absorption requires theta > 0".into(),
        ));
    }
    if catalogs.len() < n + 1 {
        catalogs.resize(n + 1, None);
    }
    let mut p = n;
    let mut factor = 1.0;
    while p >= 1 {
        let coll_rate = if p >= 2 {
            if catalogs[p].is_none() {
                catalogs[p] = Some(jump_catalog(m, p)?);
            }
            catalogs[p].as_ref().unwrap().total_rate
        } else {
            0.0
        };
        let mut_rate = p as f64 * theta / 2.0;
        if rng.gen::<f64>() * (coll_rate + mut_rate) < mut_rate {
            factor *= alpha;
            p -= 1;
        } else {
            let catalog = catalogs[p].as_ref().unwrap();
            let mut u = rng.gen::<f64>() * coll_rate;
            let mut chosen = catalog.classes.last().unwrap();
            for class in &catalog.classes {
                u -= class.class_rate();
                if u <= 0.0 {
                    chosen = class;
                    break;
                }
            }
            p = chosen.sig.r() + chosen.sig.s;
        }
    }
    Ok(factor)
}

/// Monte Carlo estimate of the stationary moment `m_n` by dual absorption.
pub fn stationary_moment_by_absorption(
    m: &XiMeasure,
    theta: f64,
    alpha: f64,
    n: usize,
    paths: u64,
    seed: u64,
) -> Result<Welford> {
    let mut catalogs = Vec::new();
    let mut w = Welford::new();
    for path in 0..paths {
        let mut rng = path_rng(seed, path);
        w.push(absorption_sample(m, theta, alpha, n, &mut catalogs, &mut rng)?);
    }
    Ok(w)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::path_rng;

    #[test]
    fn table_indexing_roundtrip() {
        let f = FnTable::from_fn(3, 2, |idx| (idx[0] * 10 + idx[1]) as f64);
        assert_eq!(f.get(&[2, 1]), 21.0);
        assert_eq!(f.get(&[0, 2]), 2.0);
    }

    #[test]
    fn collapse_merges_arguments() {
        let f = FnTable::from_fn(2, 3, |idx| (4 * idx[0] + 2 * idx[1] + idx[2]) as f64);
        let pi = Partition::new(vec![vec![1, 3], vec![2]]).unwrap();
        let g = f.collapse(&pi).unwrap();
        assert_eq!(g.m, 2);
        // g(x1, x2) = f(x1, x2, x1)
        assert_eq!(g.get(&[1, 0]), f.get(&[1, 0, 1]));
        assert_eq!(g.get(&[0, 1]), f.get(&[0, 1, 0]));
    }

    #[test]
    fn contract_matches_direct_sum() {
        let f = FnTable::from_fn(2, 2, |idx| (1 + idx[0] + 3 * idx[1]) as f64);
        let p = [0.7, 0.3, 0.2, 0.8];
        let g = f.contract_all_axes(&p).unwrap();
        for x0 in 0..2 {
            for x1 in 0..2 {
                let mut want = 0.0;
                for y0 in 0..2 {
                    for y1 in 0..2 {
                        want += p[x0 * 2 + y0] * p[x1 * 2 + y1] * f.get(&[y0, y1]);
                    }
                }
                assert!((g.get(&[x0, x1]) - want).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn integrate_product_indicator() {
        let f = FnTable::product_indicator(3, 2, 1);
        let mu = [0.5, 0.3, 0.2];
        assert!((f.integrate_product(&mu).unwrap() - 0.09).abs() < 1e-14);
    }

    #[test]
    fn dual_without_collisions_is_the_semigroup() {
        // theta > 0 but no coalescence possible from one lineage.
        let gen = MutationGenerator::parent_independent(1.0, &[0.5, 0.5]).unwrap();
        let m = XiMeasure::kingman(1.0).unwrap();
        let f0 = FnTable::product_indicator(2, 1, 0);
        let mut rng = path_rng(2, 0);
        let out = simulate_dual(&m, Some(&gen), &f0, 0.7, &mut rng).unwrap();
        let expect = f0.contract_all_axes(&gen.transition_matrix(0.7)).unwrap();
        for (a, b) in out.function.values().iter().zip(expect.values()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn absorption_matches_kingman_m2() {
        // Pure Kingman with sigma2 = 1: m_2 = (2 + theta) / (4 (1 + theta)).
        let m = XiMeasure::kingman(1.0).unwrap();
        let theta = 1.5;
        let w = stationary_moment_by_absorption(&m, theta, 0.5, 2, 40_000, 9).unwrap();
        let want = (2.0 + theta) / (4.0 * (1.0 + theta));
        assert!(
            (w.mean() - want).abs() < 4.0 * w.se(),
            "mean {} want {want}",
            w.mean()
        );
    }

    #[test]
    fn absorption_m1_is_alpha() {
        let m = XiMeasure::delta_one();
        let w = stationary_moment_by_absorption(&m, 2.0, 0.5, 1, 100, 1).unwrap();
        assert!((w.mean() - 0.5).abs() < 1e-12);
        assert_eq!(w.se(), 0.0);
    }
}

//! Ordered-block partitions of {1..n}, coagulation, collision classification
//! and set-partition enumeration.

use crate::error::{Error, Result};
use crate::measure::CollisionSignature;
use serde::Serialize;
use std::fmt;

/// A partition of {1..n} into disjoint blocks, each sorted, ordered by least
/// element.
#[derive(Clone, PartialEq, Eq, Hash, Serialize)]
pub struct Partition {
    blocks: Vec<Vec<usize>>,
}

impl Partition {
    /// Build from arbitrary blocks; sorts within and across blocks and
    /// validates that the blocks form a partition of {1..n}.
    pub fn new(mut blocks: Vec<Vec<usize>>) -> Result<Self> {
        for b in &mut blocks {
            if b.is_empty() {
                return Err(Error::InvalidPartition("empty block".into()));
            }
            b.sort_unstable();
        }
        blocks.sort_by_key(|b| b[0]);
        let p = Partition { blocks };
        let n = p.ground_size();
        let mut seen = vec![false; n + 1];
        let mut count = 0usize;
        for b in &p.blocks {
            for &e in b {
                if e == 0 || e > n || seen[e] {
                    return Err(Error::InvalidPartition(format!(
                        "elements must cover 1..{n} exactly once"
                    )));
                }
                seen[e] = true;
                count += 1;
            }
        }
        if count != n {
            return Err(Error::InvalidPartition(format!(
                "elements must cover 1..{n} exactly once"
            )));
        }
        Ok(p)
    }

    pub fn singletons(n: usize) -> Self {
        Partition {
            blocks: (1..=n).map(|i| vec![i]).collect(),
        }
    }

    pub fn blocks(&self) -> &[Vec<usize>] {
        &self.blocks
    }

    pub fn num_blocks(&self) -> usize {
        self.blocks.len()
    }

    /// Size of the ground set (largest element).
    pub fn ground_size(&self) -> usize {
        self.blocks
            .iter()
            .flat_map(|b| b.iter())
            .copied()
            .max()
            .unwrap_or(0)
    }

    /// For each element of {1..n}, the (0-based) index of its block.
    pub fn block_index_of(&self) -> Vec<usize> {
        let n = self.ground_size();
        let mut idx = vec![0usize; n + 1];
        for (k, b) in self.blocks.iter().enumerate() {
            for &e in b {
                idx[e] = k;
            }
        }
        idx
    }

    /// Coagulation directed by `q`: block `j` of the result is the union of
    /// the blocks of `self` indexed by `q_j`. `q` must cover
    /// {1..num_blocks}; directive indices beyond the block count are ignored,
    /// matching the usual convention for directives on a larger index set.
    pub fn coag(&self, q: &Partition) -> Result<Partition> {
        if q.ground_size() < self.num_blocks() {
            return Err(Error::InvalidPartition(format!(
                "coagulation directive covers {{1..{}}} but there are {} blocks",
                q.ground_size(),
                self.num_blocks()
            )));
        }
        let blocks: Vec<Vec<usize>> = q
            .blocks
            .iter()
            .filter_map(|group| {
                let mut merged: Vec<usize> = group
                    .iter()
                    .filter(|&&i| i <= self.num_blocks())
                    .flat_map(|&i| self.blocks[i - 1].iter().copied())
                    .collect();
                if merged.is_empty() {
                    return None;
                }
                merged.sort_unstable();
                Some(merged)
            })
            .collect();
        Partition::new(blocks)
    }
}

impl fmt::Debug for Partition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for Partition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, b) in self.blocks.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            let elems: Vec<String> = b.iter().map(|e| e.to_string()).collect();
            write!(f, "{{{}}}", elems.join(","))?;
        }
        write!(f, "}}")
    }
}

/// Classify `after` as a `(b; k_1..k_r; s)`-collision of `before`.
/// Fails if `after` is not a coagulation of `before`.
pub fn classify_collision(before: &Partition, after: &Partition) -> Result<CollisionSignature> {
    let idx = before.block_index_of();
    let mut group_sizes = Vec::new();
    let mut used = vec![false; before.num_blocks()];
    for b in after.blocks() {
        // Which blocks of `before` does this block consume?
        let mut members: Vec<usize> = b.iter().map(|&e| idx[e]).collect();
        members.sort_unstable();
        members.dedup();
        let merged_size: usize = members.iter().map(|&i| before.blocks()[i].len()).sum();
        if merged_size != b.len() {
            return Err(Error::InvalidPartition(
                "not a coagulation: a block splits".into(),
            ));
        }
        for &i in &members {
            if used[i] {
                return Err(Error::InvalidPartition(
                    "not a coagulation: a block is consumed twice".into(),
                ));
            }
            used[i] = true;
        }
        group_sizes.push(members.len());
    }
    if used.iter().any(|u| !u) {
        return Err(Error::InvalidPartition(
            "not a coagulation: a block disappears".into(),
        ));
    }
    let s = group_sizes.iter().filter(|&&g| g == 1).count();
    let ks: Vec<usize> = group_sizes.into_iter().filter(|&g| g >= 2).collect();
    if ks.is_empty() {
        return Err(Error::InvalidSignature(
            "identity coagulation has no collision signature".into(),
        ));
    }
    CollisionSignature::new(before.num_blocks(), ks, s)
}

/// All set partitions of {1..n}, enumerated via restricted growth strings.
pub fn set_partitions(n: usize) -> Vec<Partition> {
    let mut out = Vec::new();
    let mut assignment = vec![0usize; n];
    fn rec(assignment: &mut Vec<usize>, pos: usize, max_used: usize, out: &mut Vec<Partition>) {
        let n = assignment.len();
        if pos == n {
            let num_blocks = max_used + 1;
            let mut blocks = vec![Vec::new(); num_blocks];
            for (i, &b) in assignment.iter().enumerate() {
                blocks[b].push(i + 1);
            }
            out.push(Partition { blocks });
            return;
        }
        for b in 0..=max_used + 1 {
            assignment[pos] = b;
            rec(assignment, pos + 1, max_used.max(b), out);
        }
    }
    if n == 0 {
        return out;
    }
    rec(&mut assignment, 1, 0, &mut out);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(blocks: &[&[usize]]) -> Partition {
        Partition::new(blocks.iter().map(|b| b.to_vec()).collect()).unwrap()
    }

    #[test]
    fn worked_coagulation_example() {
        let a = p(&[&[1, 3], &[2], &[4, 5, 9], &[6, 8], &[7]]);
        let q = p(&[&[1, 5, 6], &[2, 3, 4]]);
        let result = a.coag(&q).unwrap();
        assert_eq!(result, p(&[&[1, 3, 7], &[2, 4, 5, 6, 8, 9]]));
    }

    #[test]
    fn identity_coagulation() {
        let a = p(&[&[1, 4], &[2], &[3, 5]]);
        let id = Partition::singletons(3);
        assert_eq!(a.coag(&id).unwrap(), a);
    }

    #[test]
    fn small_coagulation() {
        let a = Partition::singletons(3);
        let q = p(&[&[1, 2], &[3]]);
        assert_eq!(a.coag(&q).unwrap(), p(&[&[1, 2], &[3]]));
    }

    #[test]
    fn coag_rejects_short_directive() {
        let a = Partition::singletons(3);
        let q = Partition::singletons(2);
        assert!(a.coag(&q).is_err());
    }

    #[test]
    fn coag_ignores_excess_directive_indices() {
        let a = Partition::singletons(3);
        let q = p(&[&[1, 2, 5], &[3, 4]]);
        assert_eq!(a.coag(&q).unwrap(), p(&[&[1, 2], &[3]]));
    }

    #[test]
    fn classify_pair_merge() {
        let before = Partition::singletons(4);
        let after = p(&[&[1, 2], &[3], &[4]]);
        let sig = classify_collision(&before, &after).unwrap();
        assert_eq!((sig.b, sig.ks.clone(), sig.s), (4, vec![2], 2));
    }

    #[test]
    fn classify_simultaneous_merge() {
        let before = Partition::singletons(6);
        let after = p(&[&[1, 2, 3], &[4, 5], &[6]]);
        let sig = classify_collision(&before, &after).unwrap();
        assert_eq!((sig.b, sig.ks.clone(), sig.s), (6, vec![3, 2], 1));
    }

    #[test]
    fn classify_total_merge() {
        let before = Partition::singletons(3);
        let after = p(&[&[1, 2, 3]]);
        let sig = classify_collision(&before, &after).unwrap();
        assert_eq!((sig.b, sig.ks.clone(), sig.s), (3, vec![3], 0));
    }

    #[test]
    fn classify_rejects_non_coagulation() {
        let before = p(&[&[1, 2], &[3]]);
        let after = p(&[&[1], &[2, 3]]);
        assert!(classify_collision(&before, &after).is_err());
    }

    #[test]
    fn bell_numbers() {
        let bell = [1usize, 1, 2, 5, 15, 52, 203, 877, 4140];
        for n in 1..=8 {
            assert_eq!(set_partitions(n).len(), bell[n]);
        }
    }

    #[test]
    fn classify_composed_with_coag_recovers_group_sizes() {
        // randomized-ish sweep over all directives for a fixed partition
        let base = p(&[&[1, 6], &[2], &[3, 4], &[5], &[7]]);
        for q in set_partitions(base.num_blocks()) {
            if q.num_blocks() == base.num_blocks() {
                continue; // identity: no collision
            }
            let after = base.coag(&q).unwrap();
            let sig = classify_collision(&base, &after).unwrap();
            let mut expected: Vec<usize> = q
                .blocks()
                .iter()
                .map(|b| b.len())
                .filter(|&l| l >= 2)
                .collect();
            expected.sort_unstable_by(|a, b| b.cmp(a));
            assert_eq!(sig.ks, expected);
            assert_eq!(sig.s, q.blocks().iter().filter(|b| b.len() == 1).count());
        }
    }
}

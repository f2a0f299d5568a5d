//! Mutation generators on a finite type space and their semigroups.

use crate::error::{Error, Result};

/// A conservative rate matrix `Q` on `d` types, stored row-major.
#[derive(Clone, Debug)]
pub struct MutationGenerator {
    d: usize,
    q: Vec<f64>,
}

impl MutationGenerator {
    pub fn new(d: usize, q: Vec<f64>) -> Result<Self> {
        if d == 0 || q.len() != d * d {
            return Err(Error::DimensionMismatch(format!(
                "expected a {d}x{d} matrix, got {} entries",
                q.len()
            )));
        }
        for i in 0..d {
            let mut row_sum = 0.0;
            for j in 0..d {
                let v = q[i * d + j];
                if i != j && v < 0.0 {
                    return Err(Error::InvalidMeasure(
                        "off-diagonal mutation rates must be >= 0".into(),
                    ));
                }
                row_sum += v;
            }
            if row_sum.abs() > 1e-10 {
                return Err(Error::InvalidMeasure(format!(
                    "generator row {i} sums to {row_sum}, expected 0"
                )));
            }
        }
        Ok(MutationGenerator { d, q })
    }

    /// Parent-independent mutation: each lineage jumps at rate `theta / 2`
    /// to a type drawn from `nu0`.
    pub fn parent_independent(theta: f64, nu0: &[f64]) -> Result<Self> {
        if theta < 0.0 {
            return Err(Error::ParameterOutOfRange("theta must be >= 0".into()));
        }
        let d = nu0.len();
        let total: f64 = nu0.iter().sum();
        if d == 0 || nu0.iter().any(|&p| p < 0.0) || (total - 1.0).abs() > 1e-10 {
            return Err(Error::InvalidMeasure(
                "nu0 must be a probability vector".into(),
            ));
        }
        let mut q = vec![0.0; d * d];
        for i in 0..d {
            for j in 0..d {
                q[i * d + j] = 0.5 * theta * (nu0[j] - if i == j { 1.0 } else { 0.0 });
            }
        }
        Ok(MutationGenerator { d, q })
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn rate(&self, i: usize, j: usize) -> f64 {
        self.q[i * self.d + j]
    }

    /// `exp(t Q)` by scaling and squaring with a Taylor series, truncated at
    /// 1e-16 term norm. Rows are renormalized to sum to one.
    pub fn transition_matrix(&self, t: f64) -> Vec<f64> {
        let d = self.d;
        let norm: f64 = (0..d)
            .map(|i| (0..d).map(|j| (t * self.q[i * d + j]).abs()).sum())
            .fold(0.0, f64::max);
        let s = if norm > 0.5 {
            (norm / 0.5).log2().ceil() as u32
        } else {
            0
        };
        let scale = t / 2f64.powi(s as i32);
        let a: Vec<f64> = self.q.iter().map(|&v| v * scale).collect();

        let mut result = identity(d);
        let mut term = identity(d);
        for k in 1..200 {
            term = mat_mul(&term, &a, d);
            for v in term.iter_mut() {
                *v /= k as f64;
            }
            for (r, &v) in result.iter_mut().zip(term.iter()) {
                *r += v;
            }
            if term.iter().map(|v| v.abs()).fold(0.0, f64::max) < 1e-16 {
                break;
            }
        }
        for _ in 0..s {
            result = mat_mul(&result, &result, d);
        }
        for i in 0..d {
            let row = &mut result[i * d..(i + 1) * d];
            for v in row.iter_mut() {
                if *v < 0.0 {
                    *v = 0.0;
                }
            }
            let sum: f64 = row.iter().sum();
            for v in row.iter_mut() {
                *v /= sum;
            }
        }
        result
    }

    /// Unique stationary distribution `pi Q = 0`, `sum pi = 1`.
    pub fn invariant_distribution(&self) -> Result<Vec<f64>> {
        let d = self.d;
        // Solve Q^T pi = 0 with the last equation replaced by sum = 1.
        let mut a = vec![0.0; d * (d + 1)];
        for i in 0..d {
            for j in 0..d {
                a[i * (d + 1) + j] = self.q[j * d + i];
            }
        }
        for j in 0..d {
            a[(d - 1) * (d + 1) + j] = 1.0;
        }
        a[(d - 1) * (d + 1) + d] = 1.0;

        for col in 0..d {
            let pivot = (col..d)
                .max_by(|&i, &j| {
                    a[i * (d + 1) + col]
                        .abs()
                        .partial_cmp(&a[j * (d + 1) + col].abs())
                        .unwrap()
                })
                .unwrap();
            if a[pivot * (d + 1) + col].abs() < 1e-12 {
                return Err(Error::NonErgodicMutation);
            }
            for k in 0..=d {
                a.swap(col * (d + 1) + k, pivot * (d + 1) + k);
            }
            for row in 0..d {
                if row == col {
                    continue;
                }
                let factor = a[row * (d + 1) + col] / a[col * (d + 1) + col];
                for k in col..=d {
                    a[row * (d + 1) + k] -= factor * a[col * (d + 1) + k];
                }
            }
        }
        let mut pi = vec![0.0; d];
        for i in 0..d {
            pi[i] = a[i * (d + 1) + d] / a[i * (d + 1) + i];
            if pi[i] < -1e-9 {
                return Err(Error::NonErgodicMutation);
            }
            pi[i] = pi[i].max(0.0);
        }
        Ok(pi)
    }
}

fn identity(d: usize) -> Vec<f64> {
    let mut m = vec![0.0; d * d];
    for i in 0..d {
        m[i * d + i] = 1.0;
    }
    m
}

fn mat_mul(a: &[f64], b: &[f64], d: usize) -> Vec<f64> {
    let mut c = vec![0.0; d * d];
    for i in 0..d {
        for k in 0..d {
            let aik = a[i * d + k];
            if aik == 0.0 {
                continue;
            }
            for j in 0..d {
                c[i * d + j] += aik * b[k * d + j];
            }
        }
    }
    c
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_generator() {
        assert!(MutationGenerator::new(2, vec![-1.0, 1.0, 2.0, -1.0]).is_err());
        assert!(MutationGenerator::new(2, vec![-1.0, 1.0, 1.0, -2.0]).is_err());
    }

    #[test]
    fn two_state_transition_matrix_closed_form() {
        // Q = [[-a, a], [b, -b]]: P_t = pi + exp(-(a+b) t) (I - pi)
        let (a, b) = (0.7, 0.3);
        let gen = MutationGenerator::new(2, vec![-a, a, b, -b]).unwrap();
        let t = 1.3;
        let p = gen.transition_matrix(t);
        let e = (-(a + b) * t).exp();
        let expect = [
            (b + a * e) / (a + b),
            (a - a * e) / (a + b),
            (b - b * e) / (a + b),
            (a + b * e) / (a + b),
        ];
        for (got, want) in p.iter().zip(expect.iter()) {
            assert!((got - want).abs() < 1e-12, "{got} vs {want}");
        }
    }

    #[test]
    fn parent_independent_invariant_is_nu0() {
        let nu0 = [0.2, 0.3, 0.5];
        let gen = MutationGenerator::parent_independent(1.7, &nu0).unwrap();
        let pi = gen.invariant_distribution().unwrap();
        for (got, want) in pi.iter().zip(nu0.iter()) {
            assert!((got - want).abs() < 1e-10);
        }
        // Semigroup converges to the invariant distribution.
        let p = gen.transition_matrix(60.0);
        for i in 0..3 {
            for j in 0..3 {
                assert!((p[i * 3 + j] - nu0[j]).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn semigroup_property() {
        let gen =
            MutationGenerator::new(3, vec![-1.0, 0.4, 0.6, 0.2, -0.5, 0.3, 0.9, 0.1, -1.0])
                .unwrap();
        let p1 = gen.transition_matrix(0.4);
        let p2 = gen.transition_matrix(0.9);
        let p3 = gen.transition_matrix(1.3);
        let prod = mat_mul(&p1, &p2, 3);
        for (got, want) in prod.iter().zip(p3.iter()) {
            assert!((got - want).abs() < 1e-12);
        }
    }

    #[test]
    fn non_ergodic_detected() {
        // Two absorbing states: invariant distribution not unique.
        let gen = MutationGenerator::new(2, vec![0.0, 0.0, 0.0, 0.0]).unwrap();
        assert!(matches!(
            gen.invariant_distribution(),
            Err(Error::NonErgodicMutation)
        ));
    }
}

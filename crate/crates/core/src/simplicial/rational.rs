//! Exact linear algebra over the rationals.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

pub type Q = BigRational;

pub fn q(x: i64) -> Q {
    BigRational::from_integer(BigInt::from(x))
}

pub fn from_int_rows(rows: &[Vec<i64>]) -> Vec<Vec<Q>> {
    rows.iter().map(|r| r.iter().map(|&x| q(x)).collect()).collect()
}

/// Reduced row echelon form in place; returns the pivot columns.
pub fn rref(m: &mut [Vec<Q>]) -> Vec<usize> {
    let rows = m.len();
    let cols = m.first().map_or(0, Vec::len);
    let mut pivots = Vec::new();
    let mut r = 0;
    for col in 0..cols {
        if r == rows {
            break;
        }
        let Some(piv) = (r..rows).find(|&i| !m[i][col].is_zero()) else {
            continue;
        };
        m.swap(r, piv);
        let inv = m[r][col].recip();
        for x in m[r].iter_mut() {
            *x *= &inv;
        }
        let pivot_row = m[r].clone();
        for (i, row) in m.iter_mut().enumerate() {
            if i == r || row[col].is_zero() {
                continue;
            }
            let factor = row[col].clone();
            for (x, p) in row.iter_mut().zip(&pivot_row) {
                if !p.is_zero() {
                    *x -= &factor * p;
                }
            }
        }
        pivots.push(col);
        r += 1;
    }
    pivots
}

pub fn rank(m: &[Vec<Q>]) -> usize {
    let mut work = m.to_vec();
    rref(&mut work).len()
}

/// Basis of `{x : M x = 0}` for an `r × c` matrix, as vectors of length `c`.
pub fn nullspace(m: &[Vec<Q>], cols: usize) -> Vec<Vec<Q>> {
    let mut work = m.to_vec();
    let pivots = rref(&mut work);
    let free: Vec<usize> = (0..cols).filter(|c| !pivots.contains(c)).collect();
    free.iter()
        .map(|&f| {
            let mut v = vec![Q::zero(); cols];
            v[f] = Q::one();
            for (row, &p) in pivots.iter().enumerate() {
                v[p] = -work[row][f].clone();
            }
            v
        })
        .collect()
}

/// Incrementally grown echelon basis of a subspace of `Q^dim`.
#[derive(Clone, Debug, Default)]
pub struct EchelonBasis {
    rows: Vec<(usize, Vec<Q>)>,
}

impl EchelonBasis {
    pub fn dim(&self) -> usize {
        self.rows.len()
    }

    /// Adds `v` if it is independent of the current span; reports whether it was.
    pub fn insert(&mut self, v: &[Q]) -> bool {
        let mut w = v.to_vec();
        for (p, row) in &self.rows {
            if !w[*p].is_zero() {
                let f = w[*p].clone();
                for (x, y) in w.iter_mut().zip(row) {
                    if !y.is_zero() {
                        *x -= &f * y;
                    }
                }
            }
        }
        let Some(p) = w.iter().position(|x| !x.is_zero()) else {
            return false;
        };
        let inv = w[p].recip();
        for x in w.iter_mut() {
            *x *= &inv;
        }
        self.rows.push((p, w));
        true
    }
}

/// `(positive, negative, zero)` eigenvalue counts of a symmetric rational
/// matrix, by congruence elimination.
pub fn inertia(m: &[Vec<Q>]) -> (usize, usize, usize) {
    let mut a = m.to_vec();
    let mut alive: Vec<usize> = (0..a.len()).collect();
    let (mut pos, mut neg) = (0, 0);
    while !alive.is_empty() {
        let pivot = alive.iter().copied().find(|&i| !a[i][i].is_zero());
        let pivot = match pivot {
            Some(i) => i,
            None => {
                let pair = alive.iter().find_map(|&i| {
                    alive
                        .iter()
                        .find(|&&j| j != i && !a[i][j].is_zero())
                        .map(|&j| (i, j))
                });
                let Some((i, j)) = pair else { break };
                // row/col i += row/col j makes a_ii = 2 a_ij ≠ 0
                let n = a.len();
                for k in 0..n {
                    let v = a[j][k].clone();
                    a[i][k] += v;
                }
                for k in 0..n {
                    let v = a[k][j].clone();
                    a[k][i] += v;
                }
                i
            }
        };
        let d = a[pivot][pivot].clone();
        if d.is_positive() {
            pos += 1;
        } else {
            neg += 1;
        }
        alive.retain(|&k| k != pivot);
        let prow = a[pivot].clone();
        for &i in &alive {
            if prow[i].is_zero() {
                continue;
            }
            let f = &prow[i] / &d;
            for &j in &alive {
                let delta = &f * &prow[j];
                a[i][j] -= delta;
            }
        }
    }
    (pos, neg, alive.len())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rank_and_nullspace() {
        let m = from_int_rows(&[vec![1, 2, 3], vec![2, 4, 6], vec![1, 0, 1]]);
        assert_eq!(rank(&m), 2);
        let ns = nullspace(&m, 3);
        assert_eq!(ns.len(), 1);
        for row in &m {
            let dot: Q = row.iter().zip(&ns[0]).map(|(a, b)| a * b).sum();
            assert!(dot.is_zero());
        }
    }

    #[test]
    fn echelon_basis_detects_dependence() {
        let mut b = EchelonBasis::default();
        assert!(b.insert(&[q(1), q(1), q(0)]));
        assert!(b.insert(&[q(0), q(1), q(1)]));
        assert!(!b.insert(&[q(1), q(2), q(1)]));
        assert!(!b.insert(&[q(0), q(0), q(0)]));
        assert_eq!(b.dim(), 2);
    }

    #[test]
    fn inertia_examples() {
        assert_eq!(inertia(&from_int_rows(&[vec![1]])), (1, 0, 0));
        assert_eq!(inertia(&from_int_rows(&[vec![0, 1], vec![1, 0]])), (1, 1, 0));
        assert_eq!(
            inertia(&from_int_rows(&[vec![2, 1, 0], vec![1, 2, 0], vec![0, 0, -3]])),
            (2, 1, 0)
        );
        assert_eq!(inertia(&from_int_rows(&[vec![0, 0], vec![0, 0]])), (0, 0, 2));
        // E8-free sanity: diag(1,-1) conjugated by [[1,1],[0,1]]
        assert_eq!(inertia(&from_int_rows(&[vec![1, 1], vec![1, 0]])), (1, 1, 0));
    }
}

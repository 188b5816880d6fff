//! Cup-product intersection form, computed exactly.

use num_traits::Zero;
use serde::Serialize;

use super::rational::{self, from_int_rows, q, EchelonBasis, Q};
use super::SimplicialManifold;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IntersectionForm {
    pub degree: usize,
    /// Cocycle representatives of a basis of middle cohomology.
    #[serde(serialize_with = "ser_rows")]
    pub basis: Vec<Vec<Q>>,
    #[serde(serialize_with = "ser_rows")]
    pub matrix: Vec<Vec<Q>>,
    pub symmetric: bool,
    pub rank: usize,
    pub signature: i64,
}

fn ser_rows<S: serde::Serializer>(rows: &[Vec<Q>], s: S) -> std::result::Result<S::Ok, S::Error> {
    use serde::ser::SerializeSeq;
    let mut seq = s.serialize_seq(Some(rows.len()))?;
    for r in rows {
        seq.serialize_element(&r.iter().map(|x| x.to_string()).collect::<Vec<_>>())?;
    }
    seq.end()
}

/// Evaluates `⟨a ∪ b, [M]⟩` on a basis of `H^{n/2}` and takes its signature.
pub fn intersection_form_oracle(sm: &SimplicialManifold) -> Result<IntersectionForm> {
    if sm.n % 2 != 0 {
        return Err(Error::Domain(format!(
            "intersection form needs even dimension, got {}",
            sm.n
        )));
    }
    let m = sm.n / 2;
    let dims = sm.dims();
    let cob = sm.coboundaries();

    let cocycles = if m < sm.n {
        rational::nullspace(&from_int_rows(&cob[m]), dims[m])
    } else {
        (0..dims[m])
            .map(|i| (0..dims[m]).map(|j| q(i64::from(i == j))).collect())
            .collect()
    };
    let mut span = EchelonBasis::default();
    if m > 0 {
        // columns of d_{m-1} span the coboundaries
        let d = &cob[m - 1];
        for col in 0..dims[m - 1] {
            let v: Vec<Q> = d.iter().map(|row| q(row[col])).collect();
            span.insert(&v);
        }
    }
    let mut basis = Vec::new();
    for z in cocycles {
        if span.insert(&z) {
            basis.push(z);
        }
    }

    let t = &sm.cap_matrices()[m];
    let k = basis.len();
    let ta: Vec<Vec<Q>> = basis
        .iter()
        .map(|a| {
            t.iter()
                .map(|row| {
                    row.iter()
                        .zip(a)
                        .filter(|(x, _)| **x != 0)
                        .map(|(x, y)| q(*x) * y)
                        .sum()
                })
                .collect()
        })
        .collect();
    let matrix: Vec<Vec<Q>> = (0..k)
        .map(|i| {
            (0..k)
                .map(|j| {
                    basis[i]
                        .iter()
                        .zip(&ta[j])
                        .filter(|(x, _)| !x.is_zero())
                        .map(|(x, y)| x * y)
                        .sum()
                })
                .collect()
        })
        .collect();
    let rank = rational::rank(&matrix);
    if rank != k {
        return Err(Error::DegeneratePairing { rank, dim: k });
    }
    let symmetric = m % 2 == 0;
    let signature = if symmetric {
        let (pos, neg, _) = rational::inertia(&matrix);
        pos as i64 - neg as i64
    } else {
        0
    };
    Ok(IntersectionForm {
        degree: m,
        basis,
        matrix,
        symmetric,
        rank,
        signature,
    })
}

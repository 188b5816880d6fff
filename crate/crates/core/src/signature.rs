//! Index representatives of the signature operator.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::hpc::{rescale_inner_products, HPComplex};
use crate::linalg::{fro, inverse, submatrix, CMat, I};
use crate::spectral::{
    eig_hermitian, invertibility_certificate, positive_projection, InvertibilityCertificate,
};
use crate::tolerance::Tolerances;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct EvenIndex {
    pub signature: i64,
    /// `rank P₊(D+S)`, `rank P₊(D−S)`.
    pub ranks: [usize; 2],
    pub min_singular: [f64; 2],
}

fn degenerate(e: Error) -> Error {
    match e {
        Error::NoSpectralGap { min_abs, bound } => Error::DualityDegenerate(format!(
            "D±S has eigenvalue {min_abs:.3e} within the gap bound {bound:.3e}"
        )),
        other => other,
    }
}

fn positive_count(b: &CMat, tol: &Tolerances) -> Result<(usize, f64)> {
    let es = eig_hermitian(b, tol)?;
    let norm = es.spectral_norm();
    let min_abs = es.min_abs();
    let bound = tol.inv * norm;
    if !es.values.is_empty() && min_abs <= bound {
        return Err(degenerate(Error::NoSpectralGap { min_abs, bound }));
    }
    Ok((es.values.iter().filter(|&&x| x > 0.0).count(), min_abs))
}

/// `rank P₊(D+S) − rank P₊(D−S)` together with the ranks.
pub fn even_index(c: &HPComplex, tol: &Tolerances) -> Result<EvenIndex> {
    if c.n() % 2 != 0 {
        return Err(Error::Domain(format!("even index needs even n, got {}", c.n())));
    }
    let (rp, sp) = positive_count(&c.hermitian_b(1.0)?, tol)?;
    let (rm, sm) = positive_count(&c.hermitian_b(-1.0)?, tol)?;
    Ok(EvenIndex {
        signature: rp as i64 - rm as i64,
        ranks: [rp, rm],
        min_singular: [sp, sm],
    })
}

pub fn signature_even(c: &HPComplex, tol: &Tolerances) -> Result<i64> {
    Ok(even_index(c, tol)?.signature)
}

/// Signature with the convention that odd-dimensional complexes give 0 once
/// their odd representative is certified.
pub fn signature(c: &HPComplex, tol: &Tolerances) -> Result<i64> {
    if c.n() % 2 == 0 {
        signature_even(c, tol)
    } else {
        odd_index_representative(c, tol)?;
        Ok(0)
    }
}

#[derive(Clone, Debug, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct OddIndexRepresentative {
    /// `(D+S)(D−S)⁻¹` on the even-degree part, orthonormal basis.
    #[serde(skip)]
    pub u: CMat,
    pub certificate: InvertibilityCertificate,
    /// `‖X − X*‖_F` for `X = iDS` on the even part.
    pub ids_residual: f64,
    pub ids_self_adjoint: bool,
    pub min_singular: [f64; 2],
}

pub fn odd_index_representative(c: &HPComplex, tol: &Tolerances) -> Result<OddIndexRepresentative> {
    if c.n() % 2 == 0 {
        return Err(Error::Domain(format!("odd representative needs odd n, got {}", c.n())));
    }
    let on = c.orthonormalized()?;
    let dirac = on.dirac();
    let bp = &dirac + &on.s;
    let bm = &dirac - &on.s;
    let cp = invertibility_certificate(&bp, tol);
    let cm = invertibility_certificate(&bm, tol);
    if !(cp.pass && cm.pass) {
        return Err(Error::DualityDegenerate(format!(
            "D±S not invertible (min singular values {:.3e}, {:.3e})",
            cp.min_singular, cm.min_singular
        )));
    }
    let even = on.space.even_indices();
    let full = &bp * inverse(&bm).expect("certified invertible");
    let u = submatrix(&full, &even, &even);
    let certificate = invertibility_certificate(&u, tol);
    if !certificate.pass {
        return Err(Error::DualityDegenerate(
            "even part of (D+S)(D−S)⁻¹ is singular".into(),
        ));
    }
    let ids = submatrix(&(&dirac * &on.s * I), &even, &even);
    let ids_residual = fro(&(&ids - ids.adjoint()));
    Ok(OddIndexRepresentative {
        u,
        certificate,
        ids_residual,
        ids_self_adjoint: ids_residual <= tol.sym_bound(fro(&ids)),
        min_singular: [cp.min_singular, cm.min_singular],
    })
}

#[derive(Clone, Debug, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct ScheduleSample {
    pub t: f64,
    pub lambda: f64,
    /// Even case only.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub signature: Option<i64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ranks: Option<[usize; 2]>,
    pub min_singular: [f64; 2],
    /// Distance to the previous sample's representative.
    pub step: f64,
    #[serde(skip)]
    pub representative: Vec<CMat>,
}

#[derive(Clone, Debug, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct LocalizationSchedule {
    pub kind: &'static str,
    pub samples: Vec<ScheduleSample>,
    pub constant: bool,
    /// Largest observed `step / Δt`.
    pub lipschitz: f64,
    pub max_norm: f64,
}

/// `K` uniform samples of `[1, T]`.
pub fn uniform_grid(t_max: f64, k: usize) -> Vec<f64> {
    match k {
        0 => Vec::new(),
        1 => vec![1.0],
        _ => (0..k)
            .map(|i| 1.0 + (t_max - 1.0) * i as f64 / (k - 1) as f64)
            .collect(),
    }
}

/// Representatives of `c` with its inner products rescaled by `t`.
pub fn localized_signature_path(
    c: &HPComplex,
    t_max: f64,
    k: usize,
    tol: &Tolerances,
) -> Result<LocalizationSchedule> {
    if !(t_max >= 1.0) {
        return Err(Error::Domain(format!("schedule end {t_max} must be at least 1")));
    }
    let even = c.n() % 2 == 0;
    let grid = uniform_grid(t_max, k);
    let mut samples: Vec<ScheduleSample> = grid
        .par_iter()
        .map(|&t| {
            let fail = |e: Error| Error::DualityDegenerate(format!("sample t = {t}: {e}"));
            let rc = rescale_inner_products(c, t).map_err(fail)?;
            if even {
                let idx = even_index(&rc, tol).map_err(fail)?;
                let on = rc.orthonormalized().map_err(fail)?;
                let d = on.dirac();
                let pp = positive_projection(&(&d + &on.s), tol).map_err(fail)?;
                let pm = positive_projection(&(&d - &on.s), tol).map_err(fail)?;
                Ok(ScheduleSample {
                    t,
                    lambda: t,
                    signature: Some(idx.signature),
                    ranks: Some(idx.ranks),
                    min_singular: idx.min_singular,
                    step: 0.0,
                    representative: vec![pp, pm],
                })
            } else {
                let odd = odd_index_representative(&rc, tol).map_err(fail)?;
                Ok(ScheduleSample {
                    t,
                    lambda: t,
                    signature: None,
                    ranks: None,
                    min_singular: odd.min_singular,
                    step: 0.0,
                    representative: vec![odd.u],
                })
            }
        })
        .collect::<Result<Vec<_>>>()?;

    let mut lipschitz: f64 = 0.0;
    for i in 1..samples.len() {
        let step = samples[i]
            .representative
            .iter()
            .zip(&samples[i - 1].representative)
            .map(|(a, b)| fro(&(a - b)))
            .fold(0.0, f64::max);
        samples[i].step = step;
        let dt = samples[i].t - samples[i - 1].t;
        if dt > 0.0 {
            lipschitz = lipschitz.max(step / dt);
        }
    }
    let constant = samples
        .windows(2)
        .all(|w| w[0].signature == w[1].signature && w[0].ranks == w[1].ranks);
    let max_norm = samples
        .iter()
        .flat_map(|s| s.representative.iter().map(fro))
        .fold(0.0, f64::max);
    Ok(LocalizationSchedule {
        kind: if even { "even" } else { "odd" },
        samples,
        constant,
        lipschitz,
        max_norm,
    })
}

#[derive(Clone, Debug, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct SignatureReport {
    pub kind: &'static str,
    pub signature: i64,
    pub ranks: [usize; 2],
    pub min_singular: [f64; 2],
    pub schedule: Vec<ScheduleSample>,
}

/// Full report: index data plus a localization schedule with `k` samples on `[1, t_max]`.
pub fn signature_report(c: &HPComplex, t_max: f64, k: usize, tol: &Tolerances) -> Result<SignatureReport> {
    let schedule = localized_signature_path(c, t_max, k, tol)?;
    if c.n() % 2 == 0 {
        let idx = even_index(c, tol)?;
        Ok(SignatureReport {
            kind: "even",
            signature: idx.signature,
            ranks: idx.ranks,
            min_singular: idx.min_singular,
            schedule: schedule.samples,
        })
    } else {
        let odd = odd_index_representative(c, tol)?;
        let even_dim = c.space.even_indices().len();
        Ok(SignatureReport {
            kind: "odd",
            signature: 0,
            ranks: [even_dim, even_dim],
            min_singular: odd.min_singular,
            schedule: schedule.samples,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::hpc::{direct_sum, reverse_orientation, GradedSpace, Tier};
    use crate::linalg::{re, zeros};

    fn minus_identity(k: usize) -> CMat {
        CMat::identity(k, k) * re(-1.0)
    }

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    #[test]
    fn model_signatures() {
        assert_eq!(signature_even(&fixtures::point(), &tol()).unwrap(), 1);
        assert_eq!(signature_even(&fixtures::s2_model(), &tol()).unwrap(), 0);
        assert_eq!(signature_even(&fixtures::t2_model(), &tol()).unwrap(), 0);
        let cp2 = even_index(&fixtures::cp2_model(), &tol()).unwrap();
        assert_eq!(cp2.signature, 1);
        assert_eq!(cp2.ranks, [2, 1]);
    }

    #[test]
    fn reversal_negates() {
        for c in [fixtures::point(), fixtures::cp2_model()] {
            let s = signature_even(&c, &tol()).unwrap();
            assert_eq!(signature_even(&reverse_orientation(&c), &tol()).unwrap(), -s);
        }
    }

    #[test]
    fn ranks_are_complementary() {
        for c in [fixtures::cp2_model(), fixtures::probe(4), fixtures::probe(2)] {
            let idx = even_index(&c, &tol()).unwrap();
            assert_eq!(idx.ranks[0] + idx.ranks[1], c.total_dim());
        }
    }

    #[test]
    fn zero_duality_is_degenerate() {
        let space = GradedSpace::new(vec![1], None).unwrap();
        let c = HPComplex::new(space, vec![], zeros(1, 1), Tier::Weak).unwrap();
        assert!(matches!(signature_even(&c, &tol()), Err(Error::DualityDegenerate(_))));
        let space = GradedSpace::new(vec![1, 1], None).unwrap();
        let c = HPComplex::new(space, vec![zeros(1, 1)], zeros(2, 2), Tier::Weak).unwrap();
        assert!(matches!(odd_index_representative(&c, &tol()), Err(Error::DualityDegenerate(_))));
    }

    #[test]
    fn circle_representative_is_minus_one() {
        let r = odd_index_representative(&fixtures::s1_model(), &tol()).unwrap();
        assert_eq!(r.u, minus_identity(1));
        assert!(r.ids_self_adjoint);
        let two = direct_sum(&fixtures::s1_model(), &fixtures::s1_model()).unwrap();
        let r = odd_index_representative(&two, &tol()).unwrap();
        assert_eq!(r.u, minus_identity(2));
    }

    #[test]
    fn odd_probe_is_certified() {
        for n in [1, 3, 5] {
            let r = odd_index_representative(&fixtures::probe(n), &tol()).unwrap();
            assert!(r.certificate.pass && r.ids_self_adjoint, "n={n}: {r:?}");
        }
    }

    #[test]
    fn schedules_are_constant() {
        let s = localized_signature_path(&fixtures::point(), 10.0, 10, &tol()).unwrap();
        assert!(s.constant);
        assert!(s.samples.iter().all(|x| x.signature == Some(1)));
        let s = localized_signature_path(&fixtures::cp2_model(), 10.0, 10, &tol()).unwrap();
        assert!(s.samples.iter().all(|x| x.signature == Some(1)));
        let s = localized_signature_path(&fixtures::probe(4), 10.0, 10, &tol()).unwrap();
        assert!(s.constant && s.lipschitz.is_finite());
        let s = localized_signature_path(&fixtures::s1_model(), 10.0, 10, &tol()).unwrap();
        assert_eq!(s.kind, "odd");
        assert!(s.samples.iter().all(|x| x.min_singular[0] > 0.0));
    }

    #[test]
    fn report_shape() {
        let r = signature_report(&fixtures::cp2_model(), 10.0, 3, &tol()).unwrap();
        let v = serde_json::to_value(&r).unwrap();
        for key in ["kind", "signature", "ranks", "minSingular", "schedule"] {
            assert!(v.get(key).is_some(), "missing {key}");
        }
    }
}

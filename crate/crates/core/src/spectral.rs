//! Hermitian spectral toolkit.
//!
//! Eigenpairs come from nalgebra's Hermitian solver, sorted ascending with
//! phase-normalized eigenvectors so the output is deterministic. Everything else (projections, functional calculus,
//! invertibility certificates) is derived from [`eig_hermitian`].

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{fro, hermitian_residual, zeros, CMat, C64, ZERO};
use crate::tolerance::Tolerances;

#[derive(Clone, Debug)]
pub struct HermitianEigensystem {
    /// Ascending.
    pub values: Vec<f64>,
    /// Orthonormal eigenvectors as columns, in the order of `values`.
    pub vectors: CMat,
    /// `‖A V − V Λ‖_F`.
    pub residual: f64,
}

impl HermitianEigensystem {
    pub fn spectral_norm(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    pub fn min_abs(&self) -> f64 {
        self.values.iter().fold(f64::INFINITY, |m, v| m.min(v.abs()))
    }

    /// `V h(Λ) V*`.
    pub fn apply<F: Fn(f64) -> f64>(&self, h: F) -> CMat {
        let n = self.values.len();
        let mut scaled = self.vectors.clone();
        for (j, &lambda) in self.values.iter().enumerate() {
            let w = h(lambda);
            for i in 0..n {
                scaled[(i, j)] *= w;
            }
        }
        scaled * self.vectors.adjoint()
    }

    fn gap_check(&self, tol: &Tolerances) -> Result<()> {
        if self.values.is_empty() {
            return Ok(());
        }
        let bound = tol.inv * self.spectral_norm();
        let min_abs = self.min_abs();
        if min_abs > bound {
            Ok(())
        } else {
            Err(Error::NoSpectralGap { min_abs, bound })
        }
    }
}

/// Eigendecomposition of a Hermitian matrix.
///
/// Eigenvalues are sorted ascending; every eigenvector is phase-normalized so
/// its first non-negligible component is a positive real.
pub fn eig_hermitian(a: &CMat, tol: &Tolerances) -> Result<HermitianEigensystem> {
    if !a.is_square() {
        return Err(Error::Structural(format!(
            "eigendecomposition of a {}x{} matrix",
            a.nrows(),
            a.ncols()
        )));
    }
    let scale = fro(a);
    let residual = hermitian_residual(a);
    let bound = tol.sym_bound(scale);
    if residual > bound {
        return Err(Error::NotHermitian { residual, bound });
    }
    Ok(decompose(a))
}

fn decompose(a: &CMat) -> HermitianEigensystem {
    let n = a.nrows();
    if n == 0 {
        return HermitianEigensystem {
            values: Vec::new(),
            vectors: zeros(0, 0),
            residual: 0.0,
        };
    }
    let herm = (a + a.adjoint()) * C64::new(0.5, 0.0);
    let eig = herm.symmetric_eigen();

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| eig.eigenvalues[x].total_cmp(&eig.eigenvalues[y]));

    let values: Vec<f64> = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let mut vectors = zeros(n, n);
    for (col, &k) in order.iter().enumerate() {
        let lead = (0..n)
            .map(|i| eig.eigenvectors[(i, k)])
            .find(|z| z.norm() > 1e-12)
            .unwrap_or(C64::new(1.0, 0.0));
        let phase = lead.conj() / lead.norm();
        for i in 0..n {
            vectors[(i, col)] = eig.eigenvectors[(i, k)] * phase;
        }
    }

    let lambda = CMat::from_fn(n, n, |i, j| {
        if i == j {
            C64::new(values[i], 0.0)
        } else {
            ZERO
        }
    });
    let residual = fro(&(a * &vectors - &vectors * lambda));
    HermitianEigensystem {
        values,
        vectors,
        residual,
    }
}

/// Projection onto the span of eigenvectors with positive eigenvalues.
pub fn positive_projection(a: &CMat, tol: &Tolerances) -> Result<CMat> {
    let es = eig_hermitian(a, tol)?;
    es.gap_check(tol)?;
    Ok(es.apply(|x| if x > 0.0 { 1.0 } else { 0.0 }))
}

/// Number of positive eigenvalues of a Hermitian matrix with a certified gap.
pub fn positive_rank(a: &CMat, tol: &Tolerances) -> Result<usize> {
    let es = eig_hermitian(a, tol)?;
    es.gap_check(tol)?;
    Ok(es.values.iter().filter(|&&x| x > 0.0).count())
}

/// Rank of an (almost) orthogonal projection: its eigenvalues must cluster
/// at 0 and 1 within `tol.id`.
pub fn projection_rank(p: &CMat, tol: &Tolerances) -> Result<usize> {
    let es = eig_hermitian(p, tol)?;
    let bound = tol.id_bound(fro(p));
    let mut rank = 0;
    for &x in &es.values {
        if (x - 1.0).abs() <= bound {
            rank += 1;
        } else if x.abs() > bound {
            return Err(Error::Domain(format!(
                "eigenvalue {x} of a projection is neither 0 nor 1"
            )));
        }
    }
    Ok(rank)
}

/// Scalar functions admitted by [`functional_calculus`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum SpectralFunction {
    /// `x ↦ x / √(1 + x²)`
    Normalizing,
    /// `x ↦ 1 / √(1 + x²)`
    Damping,
    /// `x ↦ x |x|^{-s}`, `s ∈ [0, 1]`; needs a spectral gap when `s > 0`.
    SignPower(f64),
    /// `x ↦ |x|^t`; needs a spectral gap when `t < 0`.
    AbsPower(f64),
}

impl SpectralFunction {
    pub fn eval(&self, x: f64) -> f64 {
        match *self {
            SpectralFunction::Normalizing => x / (1.0 + x * x).sqrt(),
            SpectralFunction::Damping => 1.0 / (1.0 + x * x).sqrt(),
            SpectralFunction::SignPower(s) => {
                if s == 0.0 {
                    x
                } else {
                    x * x.abs().powf(-s)
                }
            }
            SpectralFunction::AbsPower(t) => {
                if t == 0.0 {
                    1.0
                } else {
                    x.abs().powf(t)
                }
            }
        }
    }

    fn needs_gap(&self) -> bool {
        match *self {
            SpectralFunction::SignPower(s) => s > 0.0,
            SpectralFunction::AbsPower(t) => t < 0.0,
            _ => false,
        }
    }
}

/// `h(A) = V h(Λ) V*`.
pub fn functional_calculus(a: &CMat, h: SpectralFunction, tol: &Tolerances) -> Result<CMat> {
    if let SpectralFunction::SignPower(s) = h {
        if !(0.0..=1.0).contains(&s) {
            return Err(Error::Domain(format!("sign power exponent {s} outside [0, 1]")));
        }
    }
    let es = eig_hermitian(a, tol)?;
    if h.needs_gap() {
        es.gap_check(tol)?;
    }
    Ok(es.apply(|x| h.eval(x)))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct InvertibilityCertificate {
    pub min_singular: f64,
    pub max_singular: f64,
    pub condition: f64,
    pub pass: bool,
}

/// Smallest and largest singular value of an arbitrary square matrix.
///
/// Hermitian inputs use their eigenvalues directly; other inputs use an SVD.
pub fn invertibility_certificate(a: &CMat, tol: &Tolerances) -> InvertibilityCertificate {
    let n = a.nrows();
    if n == 0 || !a.is_square() {
        return InvertibilityCertificate {
            min_singular: 0.0,
            max_singular: 0.0,
            condition: f64::INFINITY,
            pass: n == 0 && a.is_square(),
        };
    }
    let singular: Vec<f64> = if hermitian_residual(a) <= 1e-14 * fro(a).max(1e-300) {
        decompose(a).values.iter().map(|x| x.abs()).collect()
    } else {
        a.clone().svd(false, false).singular_values.iter().copied().collect()
    };
    let min_singular = singular.iter().cloned().fold(f64::INFINITY, f64::min);
    let max_singular = singular.iter().cloned().fold(0.0, f64::max);
    let condition = if min_singular > 0.0 {
        max_singular / min_singular
    } else {
        f64::INFINITY
    };
    InvertibilityCertificate {
        min_singular,
        max_singular,
        condition,
        pass: min_singular > tol.inv * max_singular,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{c, identity, re};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_hermitian(n: usize, seed: u64) -> CMat {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = CMat::from_fn(n, n, |_, _| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
        (&m + m.adjoint()) * re(0.5)
    }

    fn diag(xs: &[f64]) -> CMat {
        CMat::from_fn(xs.len(), xs.len(), |i, j| if i == j { re(xs[i]) } else { ZERO })
    }

    #[test]
    fn identity_eigenvalues() {
        let es = eig_hermitian(&identity(3), &Tolerances::default()).unwrap();
        assert_eq!(es.values, vec![1.0, 1.0, 1.0]);
    }

    #[test]
    fn diagonal_eigenvalues_sorted() {
        let es = eig_hermitian(&diag(&[5.0, -2.0, 0.0]), &Tolerances::default()).unwrap();
        assert_eq!(es.values, vec![-2.0, 0.0, 5.0]);
    }

    #[test]
    fn random_hermitian_reconstructs() {
        let a = random_hermitian(50, 7);
        let es = eig_hermitian(&a, &Tolerances::default()).unwrap();
        assert!(es.residual <= 1e-10 * fro(&a), "residual {}", es.residual);
        let v = &es.vectors;
        let ortho = fro(&(v.adjoint() * v - identity(50)));
        assert!(ortho <= 1e-10, "orthonormality {ortho}");
        assert!(es.values.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn eig_is_bitwise_deterministic() {
        let a = random_hermitian(20, 3);
        let x = eig_hermitian(&a, &Tolerances::default()).unwrap();
        let y = eig_hermitian(&a, &Tolerances::default()).unwrap();
        let bits = |e: &HermitianEigensystem| -> Vec<u64> {
            e.values
                .iter()
                .map(|v| v.to_bits())
                .chain(e.vectors.iter().flat_map(|z| [z.re.to_bits(), z.im.to_bits()]))
                .collect()
        };
        assert_eq!(bits(&x), bits(&y));
    }

    #[test]
    fn non_hermitian_rejected() {
        let mut a = identity(2);
        a[(0, 1)] = re(1.0);
        assert!(matches!(
            eig_hermitian(&a, &Tolerances::default()),
            Err(Error::NotHermitian { .. })
        ));
    }

    #[test]
    fn positive_projection_examples() {
        let tol = Tolerances::default();
        let p = positive_projection(&diag(&[1.0]), &tol).unwrap();
        assert!((p[(0, 0)] - re(1.0)).norm() < 1e-15);
        let p = positive_projection(&diag(&[3.0, -1.0]), &tol).unwrap();
        assert!(fro(&(p - diag(&[1.0, 0.0]))) < 1e-15);
        assert!(matches!(
            positive_projection(&diag(&[1.0, 0.0]), &tol),
            Err(Error::NoSpectralGap { .. })
        ));
    }

    #[test]
    fn functional_calculus_examples() {
        let tol = Tolerances::default();
        let z = zeros(3, 3);
        let g = functional_calculus(&z, SpectralFunction::Normalizing, &tol).unwrap();
        let f = functional_calculus(&z, SpectralFunction::Damping, &tol).unwrap();
        assert!(fro(&g) < 1e-15);
        assert!(fro(&(f - identity(3))) < 1e-15);
        let s = functional_calculus(&diag(&[3.0, -4.0]), SpectralFunction::SignPower(1.0), &tol).unwrap();
        assert!(fro(&(s - diag(&[1.0, -1.0]))) < 1e-14);
        assert!(functional_calculus(&z, SpectralFunction::SignPower(0.5), &tol).is_err());
        assert!(functional_calculus(&z, SpectralFunction::SignPower(1.5), &tol).is_err());
    }

    #[test]
    fn damping_normalizing_pythagoras() {
        let tol = Tolerances::default();
        for seed in 0..5 {
            let a = random_hermitian(12, seed) * re(4.0);
            let f = functional_calculus(&a, SpectralFunction::Damping, &tol).unwrap();
            let g = functional_calculus(&a, SpectralFunction::Normalizing, &tol).unwrap();
            let r = fro(&(&f * &f + &g * &g - identity(12)));
            assert!(r < 1e-12, "residual {r}");
            // g(A) A is positive semidefinite
            let ga = &g * &a;
            let es = eig_hermitian(&((&ga + ga.adjoint()) * re(0.5)), &tol).unwrap();
            assert!(es.values[0] > -1e-10);
        }
    }

    #[test]
    fn certificates() {
        let tol = Tolerances::default();
        let c1 = invertibility_certificate(&identity(4), &tol);
        assert!(c1.pass);
        assert!((c1.min_singular - 1.0).abs() < 1e-15);
        let c2 = invertibility_certificate(&diag(&[1.0, 1.0, 0.0]), &tol);
        assert!(!c2.pass);
        assert_eq!(c2.min_singular, 0.0);
        // non-Hermitian route: upper triangular [[1, 1], [0, 1]]
        let mut a = identity(2);
        a[(0, 1)] = re(1.0);
        let c3 = invertibility_certificate(&a, &tol);
        let golden = (5.0_f64.sqrt() - 1.0) / 2.0;
        assert!((c3.min_singular - golden).abs() < 1e-12);
        assert!(c3.pass);
    }

    #[test]
    fn projection_rank_counts_unit_eigenvalues() {
        let tol = Tolerances::default();
        assert_eq!(projection_rank(&diag(&[1.0, 0.0, 1.0]), &tol).unwrap(), 2);
        assert!(projection_rank(&diag(&[0.5]), &tol).is_err());
    }
}

//! Finite Hodge decomposition and the harmonic minimal model.

use crate::error::Result;
use crate::hpc::{validate, GradedSpace, HPComplex, Tier};
use crate::linalg::{block_diag, zeros, CMat};
use crate::rho::HomotopyEquivalence;
use crate::spectral::eig_hermitian;
use crate::tolerance::Tolerances;

#[derive(Clone, Debug)]
pub struct HarmonicReduction {
    /// `d = 0` on the harmonic cochains, identity metric.
    pub minimal: HPComplex,
    /// Source is the input complex, target the minimal model.
    pub equivalence: HomotopyEquivalence,
}

struct Hodge {
    /// `G_p^{-1/2} V̂_p`: a G-orthonormal basis of harmonic cochains per degree.
    basis: Vec<CMat>,
    /// `V̂_p^H G_p^{1/2}`.
    coords: Vec<CMat>,
    /// Pseudo-inverse of the Laplacian per degree, in the original basis.
    green: Vec<CMat>,
}

fn hodge(c: &HPComplex, tol: &Tolerances) -> Result<Hodge> {
    let on = c.orthonormalized()?;
    let (roots, inv_roots) = c.space.metric_roots()?;
    let n = c.n();
    let mut basis = Vec::with_capacity(n + 1);
    let mut coords = Vec::with_capacity(n + 1);
    let mut green = Vec::with_capacity(n + 1);
    for p in 0..=n {
        let k = c.dims()[p];
        let mut lap = zeros(k, k);
        if p < n {
            lap += on.d[p].adjoint() * &on.d[p];
        }
        if p > 0 {
            lap += &on.d[p - 1] * on.d[p - 1].adjoint();
        }
        let es = eig_hermitian(&lap, tol)?;
        let thr = tol.inv * es.spectral_norm().max(1.0);
        let kernel: Vec<usize> = (0..k).filter(|&i| es.values[i].abs() <= thr).collect();
        let v = CMat::from_fn(k, kernel.len(), |i, j| es.vectors[(i, kernel[j])]);
        green.push(&inv_roots[p] * es.apply(|x| if x.abs() > thr { 1.0 / x } else { 0.0 }) * &roots[p]);
        coords.push(v.adjoint() * &roots[p]);
        basis.push(&inv_roots[p] * v);
    }
    Ok(Hodge {
        basis,
        coords,
        green,
    })
}

/// Orthogonal projection onto the harmonic cochains, `Π = Σ_p V_p V_p^H G_p`.
pub fn harmonic_projector(c: &HPComplex, tol: &Tolerances) -> Result<CMat> {
    let h = hodge(c, tol)?;
    let blocks: Vec<CMat> = h.basis.iter().zip(&h.coords).map(|(v, f)| v * f).collect();
    Ok(block_diag(&blocks.iter().collect::<Vec<_>>()))
}

/// Minimal model on harmonic cochains with projection, inclusion and the
/// Green-operator homotopy `h′ = d* Δ⁺`.
pub fn harmonic_reduction(c: &HPComplex, tol: &Tolerances) -> Result<HarmonicReduction> {
    let h = hodge(c, tol)?;
    let n = c.n();
    let f = block_diag(&h.coords.iter().collect::<Vec<_>>());
    let g = block_diag(&h.basis.iter().collect::<Vec<_>>());
    let green = block_diag(&h.green.iter().collect::<Vec<_>>());
    let dims: Vec<usize> = h.basis.iter().map(|b| b.ncols()).collect();
    let d = (0..n).map(|p| zeros(dims[p + 1], dims[p])).collect();
    let space = GradedSpace::new(dims, None)?;
    let s = &f * &c.s * &g;
    let mut minimal = HPComplex::new(space, d, s, Tier::Weak)?;
    if validate(&minimal, tol)?.tier_achieved == Some(Tier::Strict) {
        minimal.tier = Tier::Strict;
    }
    let h_prime = c.d_star_total() * green;
    let k = minimal.total_dim();
    let equivalence = HomotopyEquivalence {
        source: c.clone(),
        target: minimal.clone(),
        f,
        g,
        h: zeros(k, k),
        h_prime,
    };
    Ok(HarmonicReduction {
        minimal,
        equivalence,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::linalg::{fro, identity};
    use crate::rho::validate_homotopy_equivalence;
    use crate::signature::signature_even;
    use crate::simplicial::cap_duality;

    #[test]
    fn minimal_input_gives_identity() {
        let tol = Tolerances::default();
        let c = fixtures::cp2_model();
        let r = harmonic_reduction(&c, &tol).unwrap();
        assert_eq!(r.minimal, c);
        assert_eq!(r.equivalence.f, identity(3));
        assert_eq!(r.equivalence.g, identity(3));
    }

    #[test]
    fn sphere_and_torus_models() {
        let tol = Tolerances::default();
        for (sm, dims) in [
            (fixtures::tri_s2(), vec![1, 0, 1]),
            (fixtures::tri_torus7(), vec![1, 2, 1]),
        ] {
            let c = cap_duality(&sm, &tol).unwrap().complex;
            let r = harmonic_reduction(&c, &tol).unwrap();
            assert_eq!(r.minimal.dims(), dims.as_slice());
            let report = validate_homotopy_equivalence(&r.equivalence, &tol).unwrap();
            assert!(report.pass, "{report:?}");
            let fg = &r.equivalence.f * &r.equivalence.g;
            assert!(fro(&(fg - identity(r.minimal.total_dim()))) < 1e-10);
            assert_eq!(
                signature_even(&r.minimal, &tol).unwrap(),
                signature_even(&c, &tol).unwrap()
            );
        }
    }
}

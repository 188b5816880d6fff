//! Oriented closed triangulations and their cochain complexes.

mod harmonic;
mod oracle;
pub mod rational;

use std::collections::{BTreeMap, HashMap, VecDeque};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hpc::{validate, AxiomReport, GradedSpace, HPComplex, Tier};
use crate::linalg::{i_pow, re, zeros, CMat};
use crate::tolerance::Tolerances;

pub use harmonic::{harmonic_reduction, HarmonicReduction};
pub use oracle::{intersection_form_oracle, IntersectionForm};

/// Triangulation document as read from JSON.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TriangulationDoc {
    pub n: usize,
    pub vertices: usize,
    pub facets: Vec<Vec<usize>>,
    /// Orientation of each facet relative to the listed vertex order; computed
    /// when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub orientations: Option<Vec<i8>>,
}

/// A closed, oriented pseudomanifold.
///
/// Facets are stored with sorted vertices and in lexicographic order;
/// `orientations[k]` is the sign of facet `k` relative to its sorted order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SimplicialManifold {
    pub n: usize,
    pub vertices: usize,
    pub facets: Vec<Vec<usize>>,
    pub orientations: Vec<i8>,
    /// `simplices[p]` lists the `p`-simplices in lexicographic order.
    pub simplices: Vec<Vec<Vec<usize>>>,
}

fn permutation_sign(v: &[usize]) -> i8 {
    let mut sign = 1;
    for i in 0..v.len() {
        for j in i + 1..v.len() {
            if v[i] > v[j] {
                sign = -sign;
            }
        }
    }
    sign
}

fn drop_vertex(s: &[usize], i: usize) -> Vec<usize> {
    let mut f = s.to_vec();
    f.remove(i);
    f
}

fn check_facets(n: usize, vertices: usize, facets: &[Vec<usize>]) -> Result<()> {
    if facets.is_empty() {
        return Err(Error::Structural("triangulation has no facets".into()));
    }
    let mut used = vec![false; vertices];
    for f in facets {
        if f.len() != n + 1 {
            return Err(Error::Structural(format!(
                "facet {f:?} has {} vertices, expected {}",
                f.len(),
                n + 1
            )));
        }
        for &v in f {
            if v >= vertices {
                return Err(Error::Structural(format!("facet {f:?} uses vertex {v} >= {vertices}")));
            }
            used[v] = true;
        }
        let mut s = f.clone();
        s.sort_unstable();
        s.dedup();
        if s.len() != f.len() {
            return Err(Error::Structural(format!("facet {f:?} repeats a vertex")));
        }
    }
    if let Some(v) = used.iter().position(|u| !u) {
        return Err(Error::Structural(format!("vertex {v} lies in no facet")));
    }
    Ok(())
}

/// Codimension-one faces and the `(facet, position)` pairs containing them.
fn ridges(facets: &[Vec<usize>]) -> BTreeMap<Vec<usize>, Vec<(usize, usize)>> {
    let mut map: BTreeMap<Vec<usize>, Vec<(usize, usize)>> = BTreeMap::new();
    for (k, f) in facets.iter().enumerate() {
        for i in 0..f.len() {
            map.entry(drop_vertex(f, i)).or_default().push((k, i));
        }
    }
    map
}

fn sign_of(i: usize) -> i8 {
    if i % 2 == 0 {
        1
    } else {
        -1
    }
}

/// Consistent orientations for sorted facets, by breadth-first propagation
/// across shared faces.
pub fn orient(n: usize, vertices: usize, facets: &[Vec<usize>]) -> Result<Vec<i8>> {
    check_facets(n, vertices, facets)?;
    let sorted: Vec<Vec<usize>> = facets
        .iter()
        .map(|f| {
            let mut s = f.clone();
            s.sort_unstable();
            s
        })
        .collect();
    if n == 0 {
        return Ok(facets.iter().map(|f| permutation_sign(f)).collect());
    }
    let ridge_map = ridges(&sorted);
    for (face, holders) in &ridge_map {
        if holders.len() != 2 {
            return Err(Error::DanglingFace {
                face: face.clone(),
                count: holders.len(),
            });
        }
    }
    let mut neighbours: Vec<Vec<(usize, usize, usize)>> = vec![Vec::new(); sorted.len()];
    for holders in ridge_map.values() {
        let (a, i) = holders[0];
        let (b, j) = holders[1];
        neighbours[a].push((b, i, j));
        neighbours[b].push((a, j, i));
    }
    let mut sign: Vec<Option<i8>> = vec![None; sorted.len()];
    for start in 0..sorted.len() {
        if sign[start].is_some() {
            continue;
        }
        sign[start] = Some(1);
        let mut queue = VecDeque::from([start]);
        while let Some(a) = queue.pop_front() {
            let sa = sign[a].unwrap();
            for &(b, i, j) in &neighbours[a] {
                let want = -sa * sign_of(i) * sign_of(j);
                match sign[b] {
                    None => {
                        sign[b] = Some(want);
                        queue.push_back(b);
                    }
                    Some(s) if s != want => return Err(Error::NonOrientable),
                    _ => {}
                }
            }
        }
    }
    // relative to the listed vertex order
    Ok(facets
        .iter()
        .zip(&sign)
        .map(|(f, s)| s.unwrap() * permutation_sign(f))
        .collect())
}

/// Validates closedness and orientation and canonicalizes the facet list.
pub fn load_simplicial(doc: &TriangulationDoc) -> Result<SimplicialManifold> {
    let TriangulationDoc {
        n,
        vertices,
        ref facets,
        ref orientations,
    } = *doc;
    check_facets(n, vertices, facets)?;
    let orientations = match orientations {
        Some(o) => {
            if o.len() != facets.len() || o.iter().any(|&x| x != 1 && x != -1) {
                return Err(Error::Structural(
                    "orientations must be one ±1 per facet".into(),
                ));
            }
            o.clone()
        }
        None => orient(n, vertices, facets)?,
    };

    let mut canon: Vec<(Vec<usize>, i8)> = facets
        .iter()
        .zip(&orientations)
        .map(|(f, &o)| {
            let mut s = f.clone();
            s.sort_unstable();
            (s, o * permutation_sign(f))
        })
        .collect();
    canon.sort();
    for w in canon.windows(2) {
        if w[0].0 == w[1].0 {
            return Err(Error::DuplicateFacet(w[0].0.clone()));
        }
    }
    let (facets, orientations): (Vec<_>, Vec<_>) = canon.into_iter().unzip();

    if n > 0 {
        let ridge_map = ridges(&facets);
        let mut conflicts = Vec::new();
        for (face, holders) in &ridge_map {
            if holders.len() != 2 {
                return Err(Error::DanglingFace {
                    face: face.clone(),
                    count: holders.len(),
                });
            }
            let induced: Vec<i8> = holders
                .iter()
                .map(|&(k, i)| orientations[k] * sign_of(i))
                .collect();
            if induced[0] + induced[1] != 0 {
                conflicts.push(face.clone());
            }
        }
        if !conflicts.is_empty() {
            return Err(Error::OrientationConflict { faces: conflicts });
        }
    }

    let mut simplices = Vec::with_capacity(n + 1);
    for p in 0..=n {
        let mut set = std::collections::BTreeSet::new();
        for f in &facets {
            for sub in subsets(f, p + 1) {
                set.insert(sub);
            }
        }
        simplices.push(set.into_iter().collect());
    }

    Ok(SimplicialManifold {
        n,
        vertices,
        facets,
        orientations,
        simplices,
    })
}

fn subsets(v: &[usize], k: usize) -> Vec<Vec<usize>> {
    fn rec(v: &[usize], k: usize, start: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..v.len() {
            cur.push(v[i]);
            rec(v, k, i + 1, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(v, k, 0, &mut Vec::new(), &mut out);
    out
}

impl SimplicialManifold {
    /// Orients an unoriented facet list and loads it.
    pub fn from_facets(n: usize, vertices: usize, facets: Vec<Vec<usize>>) -> Result<Self> {
        let orientations = orient(n, vertices, &facets)?;
        load_simplicial(&TriangulationDoc {
            n,
            vertices,
            facets,
            orientations: Some(orientations),
        })
    }

    pub fn to_doc(&self) -> TriangulationDoc {
        TriangulationDoc {
            n: self.n,
            vertices: self.vertices,
            facets: self.facets.clone(),
            orientations: Some(self.orientations.clone()),
        }
    }

    pub fn dims(&self) -> Vec<usize> {
        self.simplices.iter().map(Vec::len).collect()
    }

    pub fn reversed(&self) -> SimplicialManifold {
        SimplicialManifold {
            orientations: self.orientations.iter().map(|o| -o).collect(),
            ..self.clone()
        }
    }

    fn index(&self, p: usize) -> HashMap<&[usize], usize> {
        self.simplices[p]
            .iter()
            .enumerate()
            .map(|(i, s)| (s.as_slice(), i))
            .collect()
    }

    /// Integer coboundary matrices; `d[p]` has shape `#(p+1)-simplices × #p-simplices`.
    pub fn coboundaries(&self) -> Vec<Vec<Vec<i64>>> {
        (0..self.n)
            .map(|p| {
                let lower = self.index(p);
                self.simplices[p + 1]
                    .iter()
                    .map(|tau| {
                        let mut row = vec![0i64; self.simplices[p].len()];
                        for i in 0..tau.len() {
                            let face = drop_vertex(tau, i);
                            row[lower[face.as_slice()]] += i64::from(sign_of(i));
                        }
                        row
                    })
                    .collect()
            })
            .collect()
    }

    /// Rational Betti numbers.
    pub fn betti(&self) -> Vec<usize> {
        let dims = self.dims();
        let ranks: Vec<usize> = self
            .coboundaries()
            .iter()
            .map(|m| rational::rank(&rational::from_int_rows(m)))
            .collect();
        (0..=self.n)
            .map(|p| {
                let out = if p < self.n { ranks[p] } else { 0 };
                let inc = if p > 0 { ranks[p - 1] } else { 0 };
                dims[p] - out - inc
            })
            .collect()
    }

    /// Signed sum of facets.
    pub fn fundamental_cycle(&self) -> Vec<i64> {
        self.orientations.iter().map(|&o| i64::from(o)).collect()
    }

    /// Boundary of a top-degree chain.
    pub fn boundary_of_top(&self, chain: &[i64]) -> Vec<i64> {
        if self.n == 0 {
            return Vec::new();
        }
        let ridges = self.index(self.n - 1);
        let mut out = vec![0i64; self.simplices[self.n - 1].len()];
        for (f, &c) in self.facets.iter().zip(chain) {
            for i in 0..f.len() {
                out[ridges[drop_vertex(f, i).as_slice()]] += c * i64::from(sign_of(i));
            }
        }
        out
    }

    /// Cap product with the fundamental cycle, `T_p : C^p → C^{n−p}`, so that
    /// `⟨a ∪ b, [M]⟩ = bᵀ T_p a`.
    pub fn cap_matrices(&self) -> Vec<Vec<Vec<i64>>> {
        let n = self.n;
        let idx: Vec<_> = (0..=n).map(|p| self.index(p)).collect();
        (0..=n)
            .map(|p| {
                let mut t = vec![vec![0i64; self.simplices[p].len()]; self.simplices[n - p].len()];
                for (f, &o) in self.facets.iter().zip(&self.orientations) {
                    let front = &f[..=p];
                    let back = &f[p..];
                    t[idx[n - p][back]][idx[p][front]] += i64::from(o);
                }
                t
            })
            .collect()
    }

    /// Cochain complex with identity inner products and zero duality.
    pub fn cochain_complex(&self) -> HPComplex {
        let space = GradedSpace::new(self.dims(), None).expect("dims are consistent");
        let d = self.coboundaries().iter().map(|m| int_matrix(m)).collect();
        HPComplex::without_duality(space, d).expect("coboundaries conform")
    }
}

pub fn int_matrix(rows: &[Vec<i64>]) -> CMat {
    let r = rows.len();
    let c = rows.first().map_or(0, Vec::len);
    CMat::from_fn(r, c, |i, j| re(rows[i][j] as f64))
}

pub fn cochain_complex(sm: &SimplicialManifold) -> HPComplex {
    sm.cochain_complex()
}

pub fn fundamental_cycle(sm: &SimplicialManifold) -> Result<Vec<i64>> {
    let z = sm.fundamental_cycle();
    if sm.boundary_of_top(&z).iter().any(|&x| x != 0) {
        return Err(Error::Structural("fundamental cycle has nonzero boundary".into()));
    }
    Ok(z)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum DualityConstruction {
    /// Phase-normalized symmetrized cap product.
    SymmetrizedCap,
    /// The symmetrized cap product compressed to harmonic cochains.
    HarmonicFallback,
}

#[derive(Clone, Debug)]
pub struct CapDuality {
    pub complex: HPComplex,
    pub construction: DualityConstruction,
    pub report: AxiomReport,
}

/// Symmetrized cap duality `S_p = i^{p(p−1)+[n/2]} · ½(T_p + (−1)^{p(n−p)} T_{n−p}ᵀ)`.
pub fn symmetrized_cap(sm: &SimplicialManifold) -> CMat {
    let n = sm.n;
    let t = sm.cap_matrices();
    let dims = sm.dims();
    let mut off = vec![0];
    for k in &dims {
        off.push(off.last().unwrap() + k);
    }
    let total = off[n + 1];
    let mut s = zeros(total, total);
    for p in 0..=n {
        let q = n - p;
        let eps = if (p * q) % 2 == 0 { 1.0 } else { -1.0 };
        let phase = i_pow((p * (p.max(1) - 1) + n / 2) as i64);
        for r in 0..dims[q] {
            for col in 0..dims[p] {
                let sym = 0.5 * (t[p][r][col] as f64 + eps * t[q][col][r] as f64);
                if sym != 0.0 {
                    s[(off[q] + r, off[p] + col)] = phase * sym;
                }
            }
        }
    }
    s
}

/// Cochain complex with the symmetrized cap duality, falling back to its
/// harmonic compression when `D ± S` is singular.
pub fn cap_duality(sm: &SimplicialManifold, tol: &Tolerances) -> Result<CapDuality> {
    fundamental_cycle(sm)?;
    let base = sm.cochain_complex();
    let s = symmetrized_cap(sm);
    let mut complex = HPComplex::new(base.space.clone(), base.d.clone(), s.clone(), Tier::Weak)?;
    let mut report = validate(&complex, tol)?;
    let mut construction = DualityConstruction::SymmetrizedCap;
    if !report.poincare {
        let pi = harmonic::harmonic_projector(&base, tol)?;
        let fallback = &pi * &s * &pi;
        complex = HPComplex::new(base.space.clone(), base.d.clone(), fallback, Tier::Weak)?;
        report = validate(&complex, tol)?;
        construction = DualityConstruction::HarmonicFallback;
        if !report.poincare {
            return Err(Error::DualityDegenerate(format!(
                "symmetrized cap product and its harmonic compression both leave D±S singular \
                 (min singular values {:.3e}, {:.3e}); the input is not a chain-level Poincaré complex",
                report.b_plus.min_singular, report.b_minus.min_singular
            )));
        }
    }
    if report.tier_achieved == Some(Tier::Strict) {
        complex.tier = Tier::Strict;
        report = validate(&complex, tol)?;
    }
    Ok(CapDuality {
        complex,
        construction,
        report,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::linalg::fro;

    #[test]
    fn sphere_loads() {
        let sm = fixtures::tri_s2();
        assert_eq!(sm.dims(), vec![4, 6, 4]);
        assert_eq!(sm.betti(), vec![1, 0, 1]);
    }

    #[test]
    fn point_triangulation() {
        let sm = fixtures::tri_point();
        assert_eq!(sm.dims(), vec![1]);
        let cd = cap_duality(&sm, &Tolerances::default()).unwrap();
        assert_eq!(cd.complex.s, CMat::from_element(1, 1, re(1.0)));
        assert_eq!(cd.complex.tier, Tier::Strict);
    }

    #[test]
    fn torus_counts_by_brute_force() {
        let sm = fixtures::tri_torus7();
        assert_eq!(sm.dims(), vec![7, 21, 14]);
        // every edge in exactly two triangles
        for e in &sm.simplices[1] {
            let count = sm
                .facets
                .iter()
                .filter(|f| e.iter().all(|v| f.contains(v)))
                .count();
            assert_eq!(count, 2, "edge {e:?}");
        }
        assert_eq!(sm.betti(), vec![1, 2, 1]);
    }

    #[test]
    fn coboundaries_square_to_zero() {
        for sm in [fixtures::tri_s1(), fixtures::tri_s2(), fixtures::tri_torus7()] {
            let d = sm.coboundaries();
            for w in d.windows(2) {
                for row in &w[1] {
                    for col in 0..w[0][0].len() {
                        let v: i64 = row.iter().zip(&w[0]).map(|(a, r)| a * r[col]).sum();
                        assert_eq!(v, 0);
                    }
                }
            }
        }
    }

    #[test]
    fn fundamental_cycles_close() {
        for sm in [fixtures::tri_s1(), fixtures::tri_s2(), fixtures::tri_torus7()] {
            let z = fundamental_cycle(&sm).unwrap();
            assert_eq!(z.len(), sm.facets.len());
            let r = fundamental_cycle(&sm.reversed()).unwrap();
            assert_eq!(r, z.iter().map(|x| -x).collect::<Vec<_>>());
        }
    }

    #[test]
    fn non_orientable_rejected() {
        let doc = fixtures::rp2_6_doc();
        assert!(matches!(
            orient(doc.n, doc.vertices, &doc.facets),
            Err(Error::NonOrientable)
        ));
        let forced = TriangulationDoc {
            orientations: Some(vec![1; doc.facets.len()]),
            ..doc
        };
        assert!(matches!(
            load_simplicial(&forced),
            Err(Error::OrientationConflict { .. })
        ));
    }

    #[test]
    fn dangling_and_duplicate_rejected() {
        let open = TriangulationDoc {
            n: 2,
            vertices: 3,
            facets: vec![vec![0, 1, 2]],
            orientations: Some(vec![1]),
        };
        assert!(matches!(load_simplicial(&open), Err(Error::DanglingFace { count: 1, .. })));
        let dup = TriangulationDoc {
            n: 1,
            vertices: 2,
            facets: vec![vec![0, 1], vec![1, 0]],
            orientations: Some(vec![1, 1]),
        };
        assert!(matches!(load_simplicial(&dup), Err(Error::DuplicateFacet(_))));
    }

    #[test]
    fn unsorted_facets_canonicalize() {
        let a = SimplicialManifold::from_facets(1, 3, vec![vec![1, 0], vec![1, 2], vec![2, 0]]).unwrap();
        let b = fixtures::tri_s1();
        assert_eq!(a.facets, b.facets);
        assert!(a.orientations == b.orientations || a.reversed().orientations == b.orientations);
    }

    #[test]
    fn cap_duality_is_self_adjoint_and_weak() {
        let tol = Tolerances::default();
        for sm in [fixtures::tri_s1(), fixtures::tri_s2(), fixtures::tri_torus7()] {
            let cd = cap_duality(&sm, &tol).unwrap();
            assert!(cd.report.pass, "{:?}", cd.report);
            assert_eq!(cd.construction, DualityConstruction::SymmetrizedCap);
            let s = &cd.complex.s;
            assert!(fro(&(s - s.adjoint())) < 1e-14);
        }
    }

    #[test]
    fn cap_relation_with_coboundary() {
        // S d = −d* S holds exactly for the symmetrized cap duality
        for sm in [fixtures::tri_s2(), fixtures::tri_torus7()] {
            let cd = cap_duality(&sm, &Tolerances::default()).unwrap();
            let c = &cd.complex;
            let lhs = &c.s * c.d_total() + c.d_star_total() * &c.s;
            assert!(fro(&lhs) < 1e-13);
        }
    }
}

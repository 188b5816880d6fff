//! Built-in fixture corpus: harmonic models, acyclic pairs and triangulations.

use crate::hpc::{GradedSpace, HPComplex, Tier};
use crate::linalg::{c, i_pow, re, zeros, CMat, C64};
use crate::simplicial::{SimplicialManifold, TriangulationDoc};

fn model(dims: Vec<usize>, entries: &[(usize, usize, C64)]) -> HPComplex {
    let space = GradedSpace::new(dims, None).expect("fixture dims");
    let total = space.total_dim();
    let d = (0..space.n)
        .map(|p| zeros(space.dims[p + 1], space.dims[p]))
        .collect();
    let mut s = zeros(total, total);
    for &(i, j, v) in entries {
        s[(i, j)] = v;
    }
    HPComplex::new(space, d, s, Tier::Strict).expect("fixture duality")
}

/// `n = 0`, `S = [1]`.
pub fn point() -> HPComplex {
    model(vec![1], &[(0, 0, re(1.0))])
}

/// Harmonic circle: dims (1, 1), `S` swaps the generators.
pub fn s1_model() -> HPComplex {
    model(vec![1, 1], &[(0, 1, re(1.0)), (1, 0, re(1.0))])
}

/// Harmonic 2-sphere: `S e₀ = i e₂`, `S e₂ = −i e₀`.
pub fn s2_model() -> HPComplex {
    model(vec![1, 0, 1], &[(1, 0, c(0.0, 1.0)), (0, 1, c(0.0, -1.0))])
}

/// Harmonic torus with basis `e₀, a, b, e₂`.
pub fn t2_model() -> HPComplex {
    model(
        vec![1, 2, 1],
        &[
            (3, 0, c(0.0, 1.0)),
            (0, 3, c(0.0, -1.0)),
            (2, 1, c(0.0, 1.0)),
            (1, 2, c(0.0, -1.0)),
        ],
    )
}

/// Harmonic CP²: `S e₀ = −e₄`, `S e₄ = −e₀`, `S e₂ = e₂`.
pub fn cp2_model() -> HPComplex {
    model(
        vec![1, 0, 1, 0, 1],
        &[(2, 0, re(-1.0)), (0, 2, re(-1.0)), (1, 1, re(1.0))],
    )
}

/// Harmonic sphere of dimension `n`: `S e₀ = i^{[n/2]} e_n`.
pub fn sphere_model(n: usize) -> HPComplex {
    if n == 0 {
        return point();
    }
    let mut dims = vec![0; n + 1];
    dims[0] = 1;
    dims[n] = 1;
    let a = i_pow((n / 2) as i64);
    model(dims, &[(1, 0, a), (0, 1, a.conj())])
}

/// Strict acyclic complex in top degree `n`: `x ↦ y = dx` in degrees
/// `(p, p+1)` and its dual pair `u ↦ w = du` in degrees `(n−p−1, n−p)`.
/// When `n = 2p+1` the two pairs coincide.
pub fn hyperbolic(n: usize, p: usize) -> HPComplex {
    assert!(p < n, "hyperbolic pair needs p < n");
    let mut dims = vec![0; n + 1];
    let self_dual = n == 2 * p + 1;
    // basis order is degree-major; record (degree, label)
    let mut labels: Vec<(usize, char)> = vec![(p, 'x'), (p + 1, 'y')];
    if !self_dual {
        labels.push((n - p - 1, 'u'));
        labels.push((n - p, 'w'));
    }
    labels.sort();
    for &(deg, _) in &labels {
        dims[deg] += 1;
    }
    let pos = |ch: char| labels.iter().position(|&(_, l)| l == ch).unwrap();
    let space = GradedSpace::new(dims, None).unwrap();
    let off = space.offsets();
    let total = space.total_dim();
    let mut dt = zeros(total, total);
    let mut s = zeros(total, total);
    dt[(pos('y'), pos('x'))] = re(1.0);
    if self_dual {
        let a = c(0.0, 1.0);
        s[(pos('y'), pos('x'))] = a;
        s[(pos('x'), pos('y'))] = a.conj();
    } else {
        dt[(pos('w'), pos('u'))] = re(1.0);
        let a = i_pow((p * p.saturating_sub(1) + n / 2) as i64);
        let (x, y, u, w) = (pos('x'), pos('y'), pos('u'), pos('w'));
        s[(w, x)] = a;
        s[(x, w)] = a.conj();
        s[(u, y)] = -a;
        s[(y, u)] = -a.conj();
    }
    let d = (0..n)
        .map(|q| {
            CMat::from_fn(space.dims[q + 1], space.dims[q], |i, j| {
                dt[(off[q + 1] + i, off[q] + j)]
            })
        })
        .collect();
    HPComplex::new(space, d, s, Tier::Strict).unwrap()
}

/// `sphere_model(n)` plus hyperbolic pairs in every admissible degree, so
/// that `d ≠ 0` whenever `n ≥ 1`.
pub fn probe(n: usize) -> HPComplex {
    let mut out = sphere_model(n);
    for p in 0..n {
        if 2 * p + 1 <= n {
            out = crate::hpc::direct_sum(&out, &hyperbolic(n, p)).unwrap();
        }
    }
    out
}

/// Every harmonic model of the product grid.
pub fn model_grid() -> Vec<(&'static str, HPComplex)> {
    vec![
        ("point", point()),
        ("s1", s1_model()),
        ("s2", s2_model()),
        ("t2", t2_model()),
        ("cp2", cp2_model()),
    ]
}

pub fn tri_point() -> SimplicialManifold {
    SimplicialManifold::from_facets(0, 1, vec![vec![0]]).unwrap()
}

/// Boundary of a triangle.
pub fn tri_s1() -> SimplicialManifold {
    SimplicialManifold::from_facets(1, 3, vec![vec![0, 1], vec![1, 2], vec![0, 2]]).unwrap()
}

/// Boundary of the 3-simplex.
pub fn tri_s2() -> SimplicialManifold {
    SimplicialManifold::from_facets(
        2,
        4,
        vec![vec![0, 1, 2], vec![0, 1, 3], vec![0, 2, 3], vec![1, 2, 3]],
    )
    .unwrap()
}

/// Boundary of the 4-simplex.
pub fn tri_s3() -> SimplicialManifold {
    let facets = (0..5)
        .map(|skip| (0..5).filter(|&v| v != skip).collect())
        .collect();
    SimplicialManifold::from_facets(3, 5, facets).unwrap()
}

/// Möbius's 7-vertex torus: triangles `{i, i+1, i+3}` and `{i, i+2, i+3}` mod 7.
pub fn tri_torus7() -> SimplicialManifold {
    let mut facets = Vec::new();
    for i in 0..7 {
        facets.push(vec![i, (i + 1) % 7, (i + 3) % 7]);
        facets.push(vec![i, (i + 2) % 7, (i + 3) % 7]);
    }
    SimplicialManifold::from_facets(2, 7, facets).unwrap()
}

/// 9-vertex triangulation of the complex projective plane, oriented so the
/// intersection form is positive definite.
pub fn tri_cp2_9() -> SimplicialManifold {
    const FACETS: [[usize; 5]; 36] = [
        [0, 1, 2, 3, 4], [0, 1, 2, 3, 5], [0, 1, 2, 4, 5], [0, 1, 3, 4, 6],
        [0, 1, 3, 5, 7], [0, 1, 3, 6, 7], [0, 1, 4, 5, 6], [0, 1, 5, 6, 8],
        [0, 1, 5, 7, 8], [0, 1, 6, 7, 8], [0, 2, 3, 4, 8], [0, 2, 3, 5, 8],
        [0, 2, 4, 5, 6], [0, 2, 4, 6, 7], [0, 2, 4, 7, 8], [0, 2, 5, 6, 8],
        [0, 2, 6, 7, 8], [0, 3, 4, 6, 7], [0, 3, 4, 7, 8], [0, 3, 5, 7, 8],
        [1, 2, 3, 4, 8], [1, 2, 3, 5, 7], [1, 2, 3, 6, 7], [1, 2, 3, 6, 8],
        [1, 2, 4, 5, 7], [1, 2, 4, 7, 8], [1, 2, 6, 7, 8], [1, 3, 4, 6, 8],
        [1, 4, 5, 6, 8], [1, 4, 5, 7, 8], [2, 3, 5, 6, 7], [2, 3, 5, 6, 8],
        [2, 4, 5, 6, 7], [3, 4, 5, 6, 7], [3, 4, 5, 6, 8], [3, 4, 5, 7, 8],
    ];
    SimplicialManifold::from_facets(4, 9, FACETS.iter().map(|f| f.to_vec()).collect())
        .unwrap()
        .reversed()
}

/// 6-vertex real projective plane (closed, not orientable).
pub fn rp2_6_doc() -> TriangulationDoc {
    TriangulationDoc {
        n: 2,
        vertices: 6,
        facets: vec![
            vec![0, 1, 2],
            vec![0, 2, 3],
            vec![0, 3, 4],
            vec![0, 4, 5],
            vec![0, 1, 5],
            vec![1, 2, 4],
            vec![2, 3, 5],
            vec![1, 3, 4],
            vec![2, 4, 5],
            vec![1, 3, 5],
        ],
        orientations: None,
    }
}

/// Torus automorphism exchanging `a` and `b` (reverses orientation).
pub fn t2_swap() -> CMat {
    let mut m = zeros(4, 4);
    m[(0, 0)] = re(1.0);
    m[(3, 3)] = -re(1.0);
    m[(2, 1)] = re(1.0);
    m[(1, 2)] = re(1.0);
    m
}

/// Quarter rotation `a ↦ b`, `b ↦ −a` (preserves orientation).
pub fn t2_rotation() -> CMat {
    let mut m = zeros(4, 4);
    m[(0, 0)] = re(1.0);
    m[(3, 3)] = re(1.0);
    m[(2, 1)] = re(1.0);
    m[(1, 2)] = re(-1.0);
    m
}

pub fn t2_swap_bundle() -> crate::family::FiberedComplex {
    crate::family::FiberedComplex::mapping_torus(t2_model(), t2_swap())
}

pub fn t2_rotation_bundle() -> crate::family::FiberedComplex {
    crate::family::FiberedComplex::mapping_torus(t2_model(), t2_rotation())
}

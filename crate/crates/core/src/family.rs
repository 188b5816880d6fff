//! Flat fiber bundles over a triangulated base.
//!
//! The cover is by vertex stars, so overlaps are edges and triple overlaps
//! are triangles. A transition `ψ_ij` (for an edge `i < j`) maps the fiber
//! over `i` to the fiber over `j`; `ψ_ji = ψ_ij⁻¹`. Twisted cochains take
//! values in the fiber over the first vertex of each simplex.

use std::collections::{BTreeMap, HashMap, VecDeque};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::hpc::{GradedSpace, HPComplex, Tier};
use crate::linalg::{fro, i_pow, identity, inverse, is_exact_identity, kron, re, zeros, CMat, ZERO};
use crate::products::{assemble, SignRule};
use crate::signature::signature;
use crate::simplicial::{cap_duality, harmonic_reduction, SimplicialManifold};
use crate::tolerance::Tolerances;

#[derive(Clone, Debug, PartialEq)]
pub struct FiberedComplex {
    pub base: SimplicialManifold,
    pub fiber: HPComplex,
    /// Keyed by edges `(i, j)` with `i < j`; absent edges carry the identity.
    pub transitions: BTreeMap<(usize, usize), CMat>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct FiberedReport {
    pub cocycle_residual: f64,
    pub chain_map_residual: f64,
    pub invertible: bool,
    pub cocycle: bool,
    pub chain_maps: bool,
    /// `ψ* S_F ψ = S_F` and `ψ` unitary for every transition.
    pub duality_compatible: bool,
    pub duality_residual: f64,
}

impl FiberedComplex {
    pub fn trivial(base: SimplicialManifold, fiber: HPComplex) -> Self {
        FiberedComplex {
            base,
            fiber,
            transitions: BTreeMap::new(),
        }
    }

    /// Mapping torus over the 3-vertex circle with monodromy `phi` on edge (0, 2).
    pub fn mapping_torus(fiber: HPComplex, phi: CMat) -> Self {
        let base = crate::fixtures::tri_s1();
        let mut transitions = BTreeMap::new();
        transitions.insert((0, 2), phi);
        FiberedComplex {
            base,
            fiber,
            transitions,
        }
    }

    /// `ψ` transporting the fiber over `from` to the fiber over `to`.
    pub fn transport(&self, from: usize, to: usize) -> CMat {
        if from == to {
            return identity(self.fiber.total_dim());
        }
        let key = (from.min(to), from.max(to));
        match self.transitions.get(&key) {
            None => identity(self.fiber.total_dim()),
            Some(m) if from < to => m.clone(),
            Some(m) => inverse(m).unwrap_or_else(|| zeros(m.nrows(), m.ncols())),
        }
    }

    fn edges(&self) -> &[Vec<usize>] {
        if self.base.n == 0 {
            &[]
        } else {
            &self.base.simplices[1]
        }
    }

    pub fn check(&self, tol: &Tolerances) -> Result<FiberedReport> {
        let k = self.fiber.total_dim();
        let edge_set: Vec<(usize, usize)> = self.edges().iter().map(|e| (e[0], e[1])).collect();
        for (key, m) in &self.transitions {
            if !edge_set.contains(key) {
                return Err(Error::Structural(format!("transition on non-edge {key:?}")));
            }
            if m.nrows() != k || m.ncols() != k {
                return Err(Error::Structural(format!(
                    "transition {key:?} is {}x{}, fiber has dimension {k}",
                    m.nrows(),
                    m.ncols()
                )));
            }
        }
        let invertible = self.transitions.values().all(|m| inverse(m).is_some());
        if !invertible {
            return Err(Error::Structural("a transition is not invertible".into()));
        }

        let mut cocycle_residual: f64 = 0.0;
        if self.base.n >= 2 {
            for t in &self.base.simplices[2] {
                let (i, j, l) = (t[0], t[1], t[2]);
                let lhs = self.transport(j, l) * self.transport(i, j);
                cocycle_residual = cocycle_residual.max(fro(&(lhs - self.transport(i, l))));
            }
        }

        let d = self.fiber.d_total();
        let s = &self.fiber.s;
        let g = self.fiber.space.gram();
        let g_inv = inverse(&g).expect("positive definite");
        let deg = self.fiber.space.degree_of();
        let mut chain_map_residual: f64 = 0.0;
        let mut duality_residual: f64 = 0.0;
        for psi in self.transitions.values() {
            let mut r = fro(&(psi * &d - &d * psi));
            for i in 0..k {
                for j in 0..k {
                    if deg[i] != deg[j] {
                        r = r.max(psi[(i, j)].norm());
                    }
                }
            }
            chain_map_residual = chain_map_residual.max(r);
            let adj = &g_inv * psi.adjoint() * &g;
            let unitary = fro(&(&adj * psi - identity(k)));
            let dual = fro(&(&adj * s * psi - s));
            duality_residual = duality_residual.max(unitary).max(dual);
        }
        let scale = |x: f64| tol.sym_bound(x.max(k as f64));
        Ok(FiberedReport {
            cocycle_residual,
            chain_map_residual,
            invertible,
            cocycle: cocycle_residual <= scale(0.0),
            chain_maps: chain_map_residual <= scale(fro(&d)),
            duality_compatible: duality_residual <= scale(fro(s)),
            duality_residual,
        })
    }

    fn require_valid(&self, tol: &Tolerances) -> Result<FiberedReport> {
        let r = self.check(tol)?;
        if !r.cocycle {
            return Err(Error::Structural(format!(
                "cocycle condition fails (residual {:.3e})",
                r.cocycle_residual
            )));
        }
        if !r.chain_maps {
            return Err(Error::Structural(format!(
                "a transition is not a chain map of the fiber (residual {:.3e})",
                r.chain_map_residual
            )));
        }
        Ok(r)
    }
}

fn base_offsets(base: &SimplicialManifold) -> Vec<usize> {
    let mut off = vec![0];
    for k in base.dims() {
        off.push(off.last().unwrap() + k);
    }
    off
}

fn simplex_index(base: &SimplicialManifold) -> Vec<HashMap<&[usize], usize>> {
    base.simplices
        .iter()
        .map(|list| list.iter().enumerate().map(|(i, s)| (s.as_slice(), i)).collect())
        .collect()
}

fn put_block(m: &mut CMat, row: usize, col: usize, k: usize, block: &CMat, coef: f64) {
    for x in 0..k {
        for y in 0..k {
            let v = block[(x, y)];
            if v != ZERO {
                m[(row * k + x, col * k + y)] += v * coef;
            }
        }
    }
}

/// Twisted coboundary plus `E_B ⊗ d_F`, in Kronecker order (base index major).
fn twisted_differential(fc: &FiberedComplex) -> CMat {
    let base = &fc.base;
    let k = fc.fiber.total_dim();
    let off = base_offsets(base);
    let idx = simplex_index(base);
    let nb = off[base.n + 1];
    let mut d = zeros(nb * k, nb * k);
    for p in 0..base.n {
        for (ti, tau) in base.simplices[p + 1].iter().enumerate() {
            for i in 0..tau.len() {
                let mut face = tau.clone();
                face.remove(i);
                let col = off[p] + idx[p][face.as_slice()];
                let row = off[p + 1] + ti;
                let coef = if i % 2 == 0 { 1.0 } else { -1.0 };
                // the 0-th face lives over tau[1]; carry it back to tau[0]
                let psi = if i == 0 {
                    fc.transport(tau[1], tau[0])
                } else {
                    identity(k)
                };
                put_block(&mut d, row, col, k, &psi, coef);
            }
        }
    }
    let e = CMat::from_fn(nb, nb, |i, j| {
        if i != j {
            ZERO
        } else {
            let p = (0..=base.n).find(|&p| i < off[p + 1]).unwrap();
            re(if p % 2 == 0 { 1.0 } else { -1.0 })
        }
    });
    d + kron(&e, &fc.fiber.d_total())
}

/// Total complex without duality (the local-system cochain complex).
pub fn twisted_cochain_complex(fc: &FiberedComplex, tol: &Tolerances) -> Result<HPComplex> {
    fc.require_valid(tol)?;
    let nb = fc.base.dims().iter().sum::<usize>();
    let d = twisted_differential(fc);
    let g = kron(&identity(nb), &fc.fiber.space.gram());
    let s = zeros(d.nrows(), d.ncols());
    assemble(&fc.base.dims(), fc.fiber.dims(), &d, &g, &s, Tier::Weak)
}

/// Twisted graded tensor of the base cochain complex (with cap duality) and
/// the fiber.
pub fn total_complex(fc: &FiberedComplex, tol: &Tolerances) -> Result<HPComplex> {
    let report = fc.require_valid(tol)?;
    if !report.duality_compatible {
        return Err(Error::NoFiberwiseDuality(format!(
            "transitions do not preserve the fiber duality (residual {:.3e})",
            report.duality_residual
        )));
    }
    let base_dual = cap_duality(&fc.base, tol)?;
    let base = &fc.base;
    let m = base.n;
    let k = fc.fiber.total_dim();
    let off = base_offsets(base);
    let idx = simplex_index(base);
    let nb = off[m + 1];

    // twisted cap products T_p : C^p ⊗ F → C^{m−p} ⊗ F, entrywise fiber maps
    let mut cap: Vec<BTreeMap<(usize, usize), CMat>> = vec![BTreeMap::new(); m + 1];
    for (f, &o) in base.facets.iter().zip(&base.orientations) {
        for p in 0..=m {
            let key = (idx[m - p][&f[p..]], idx[p][&f[..=p]]);
            let psi = fc.transport(f[0], f[p]) * re(f64::from(o));
            cap[p]
                .entry(key)
                .and_modify(|acc| *acc += &psi)
                .or_insert(psi);
        }
    }

    let s_f = &fc.fiber.s;
    let mut s_base = zeros(nb * k, nb * k);
    for p in 0..=m {
        let q = m - p;
        let eps = if (p * q) % 2 == 0 { 1.0 } else { -1.0 };
        let phase = i_pow((p * p.saturating_sub(1) + m / 2) as i64);
        let mut blocks: BTreeMap<(usize, usize), CMat> = BTreeMap::new();
        for (&(r, c), t) in &cap[p] {
            blocks
                .entry((r, c))
                .and_modify(|acc| *acc += t * re(0.5))
                .or_insert_with(|| t * re(0.5));
        }
        for (&(c, r), t) in &cap[q] {
            let adj = t.adjoint() * re(0.5 * eps);
            blocks
                .entry((r, c))
                .and_modify(|acc| *acc += &adj)
                .or_insert(adj);
        }
        for ((r, c), blk) in blocks {
            let fiber_map = if is_exact_identity(&(&blk * re(2.0))) {
                s_f.clone() * re(0.5)
            } else {
                &blk * s_f
            };
            let row = off[q] + r;
            let col = off[p] + c;
            for x in 0..k {
                for y in 0..k {
                    s_base[(row * k + x, col * k + y)] = phase * fiber_map[(x, y)];
                }
            }
        }
    }

    let untwisted = fc.transitions.values().all(is_exact_identity);
    let s_kron = if untwisted {
        kron(&base_dual.complex.s, s_f)
    } else {
        s_base
    };
    let rule = SignRule::canonical(m, fc.fiber.n());
    let deg_b = {
        let mut v = Vec::with_capacity(nb);
        for p in 0..=m {
            v.extend(std::iter::repeat_n(p, base.dims()[p]));
        }
        v
    };
    let deg_f = fc.fiber.space.degree_of();
    let mut s_kron = s_kron;
    for j in 0..s_kron.ncols() {
        let sigma = rule.sigma(deg_b[j / k], deg_f[j % k]);
        for i in 0..s_kron.nrows() {
            s_kron[(i, j)] *= sigma;
        }
    }
    let d = if untwisted {
        kron(&base_dual.complex.d_total(), &identity(k)) + kron(&base_dual.complex.space.grading(), &fc.fiber.d_total())
    } else {
        twisted_differential(fc)
    };
    let g = kron(&base_dual.complex.space.gram(), &fc.fiber.space.gram());
    let tier = base_dual.complex.tier.min(fc.fiber.tier);
    assemble(&base.dims(), fc.fiber.dims(), &d, &g, &s_kron, tier)
}

#[derive(Clone, Debug, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct MonodromyGenerator {
    pub edge: (usize, usize),
    /// Induced map on harmonic fiber cohomology, one block per degree.
    #[serde(skip)]
    pub blocks: Vec<CMat>,
    pub deviation: f64,
}

#[derive(Clone, Debug, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct MonodromyAction {
    pub fiber_betti: Vec<usize>,
    pub generators: Vec<MonodromyGenerator>,
    pub trivial: bool,
}

/// Edge-loop generators from a breadth-first spanning tree rooted at vertex 0
/// and their action on fiber cohomology.
pub fn monodromy_homology_action(fc: &FiberedComplex, tol: &Tolerances) -> Result<MonodromyAction> {
    fc.require_valid(tol)?;
    let nv = fc.base.vertices;
    let k = fc.fiber.total_dim();
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); nv];
    for e in fc.edges() {
        adj[e[0]].push(e[1]);
        adj[e[1]].push(e[0]);
    }
    let mut to_vertex: Vec<Option<CMat>> = vec![None; nv];
    let mut tree = Vec::new();
    for root in 0..nv {
        if to_vertex[root].is_some() {
            continue;
        }
        to_vertex[root] = Some(identity(k));
        let mut queue = VecDeque::from([root]);
        while let Some(v) = queue.pop_front() {
            for &w in &adj[v] {
                if to_vertex[w].is_none() {
                    to_vertex[w] = Some(fc.transport(v, w) * to_vertex[v].as_ref().unwrap());
                    tree.push((v.min(w), v.max(w)));
                    queue.push_back(w);
                }
            }
        }
    }

    let red = harmonic_reduction(&fc.fiber, tol)?;
    let (f, g) = (&red.equivalence.f, &red.equivalence.g);
    let hdims = red.minimal.dims().to_vec();
    let hoff = red.minimal.space.offsets();
    let mut generators = Vec::new();
    for e in fc.edges() {
        let (i, j) = (e[0], e[1]);
        if tree.contains(&(i, j)) {
            continue;
        }
        let pi = to_vertex[i].as_ref().unwrap();
        let pj = to_vertex[j].as_ref().unwrap();
        let loop_map = inverse(pj).expect("transitions are invertible") * fc.transport(i, j) * pi;
        let induced = f * loop_map * g;
        let blocks: Vec<CMat> = (0..hdims.len())
            .map(|p| induced.view((hoff[p], hoff[p]), (hdims[p], hdims[p])).into_owned())
            .collect();
        let deviation = fro(&(&induced - identity(induced.nrows())));
        generators.push(MonodromyGenerator {
            edge: (i, j),
            blocks,
            deviation,
        });
    }
    let trivial = generators
        .iter()
        .all(|g| g.deviation <= tol.sym_bound(hdims.iter().sum::<usize>() as f64));
    Ok(MonodromyAction {
        fiber_betti: hdims,
        generators,
        trivial,
    })
}

#[derive(Clone, Debug, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct SignatureSection {
    pub values: Vec<i64>,
    pub constant: bool,
}

/// Fiber signature at every base vertex, with the fiber transported from
/// vertex 0 along the spanning tree.
pub fn family_signature_section(fc: &FiberedComplex, tol: &Tolerances) -> Result<SignatureSection> {
    if fc.fiber.n() % 2 != 0 {
        return Err(Error::Domain(format!(
            "signature section needs an even-dimensional fiber, got {}",
            fc.fiber.n()
        )));
    }
    let report = fc.require_valid(tol)?;
    if !report.duality_compatible {
        return Err(Error::NoFiberwiseDuality(
            "transitions do not preserve the fiber duality".into(),
        ));
    }
    let mut values = Vec::with_capacity(fc.base.vertices);
    for v in 0..fc.base.vertices {
        let p = path_transport(fc, v);
        let pi = inverse(&p).expect("transitions are invertible");
        let fiber = &fc.fiber;
        let d = fiber.d.iter().enumerate().map(|(q, dq)| {
            let blk = |m: &CMat, r: usize, c: usize| {
                let off = fiber.space.offsets();
                m.view((off[r], off[c]), (fiber.dims()[r], fiber.dims()[c])).into_owned()
            };
            blk(&p, q + 1, q + 1) * dq * blk(&pi, q, q)
        });
        let g: Vec<CMat> = {
            let off = fiber.space.offsets();
            let gt = pi.adjoint() * fiber.space.gram() * &pi;
            (0..=fiber.n())
                .map(|q| gt.view((off[q], off[q]), (fiber.dims()[q], fiber.dims()[q])).into_owned())
                .collect()
        };
        let space = GradedSpace::new(fiber.dims().to_vec(), Some(g))?;
        let conj = HPComplex::new(space, d.collect(), &p * &fiber.s * &pi, fiber.tier)?;
        let sgn = signature(&conj, tol)
            .map_err(|e| Error::DualityDegenerate(format!("fiber over vertex {v}: {e}")))?;
        values.push(sgn);
    }
    let constant = values.windows(2).all(|w| w[0] == w[1]);
    Ok(SignatureSection { values, constant })
}

fn path_transport(fc: &FiberedComplex, target: usize) -> CMat {
    let k = fc.fiber.total_dim();
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); fc.base.vertices];
    for e in fc.edges() {
        adj[e[0]].push(e[1]);
        adj[e[1]].push(e[0]);
    }
    let mut map: Vec<Option<CMat>> = vec![None; fc.base.vertices];
    map[0] = Some(identity(k));
    let mut queue = VecDeque::from([0]);
    while let Some(v) = queue.pop_front() {
        for &w in &adj[v] {
            if map[w].is_none() {
                map[w] = Some(fc.transport(v, w) * map[v].as_ref().unwrap());
                queue.push_back(w);
            }
        }
    }
    map[target].clone().unwrap_or_else(|| identity(k))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ChsOutcome {
    Pass,
    Fail,
    HypothesisNotMet,
}

#[derive(Clone, Debug, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct ChsReport {
    pub outcome: ChsOutcome,
    pub base_dim: usize,
    pub fiber_dim: usize,
    pub trivial_action: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub signature_base: Option<i64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub signature_fiber: Option<i64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub signature_total: Option<i64>,
    /// `sgn(B) · (constant section value)`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pairing: Option<i64>,
    pub note: String,
}

/// `sgn(E) = sgn(B) · sgn(F)` for bundles with trivial monodromy on fiber
/// cohomology; odd-dimensional signatures count as 0.
pub fn chs_check(fc: &FiberedComplex, tol: &Tolerances) -> Result<ChsReport> {
    let action = monodromy_homology_action(fc, tol)?;
    let (m, n) = (fc.base.n, fc.fiber.n());
    if !action.trivial {
        return Ok(ChsReport {
            outcome: ChsOutcome::HypothesisNotMet,
            base_dim: m,
            fiber_dim: n,
            trivial_action: false,
            signature_base: None,
            signature_fiber: None,
            signature_total: None,
            pairing: None,
            note: "hypothesis not met: monodromy acts nontrivially on fiber cohomology".into(),
        });
    }
    let base = cap_duality(&fc.base, tol)?.complex;
    let sb = signature(&base, tol)?;
    let sf = signature(&fc.fiber, tol)?;
    let total = total_complex(fc, tol)?;
    let se = signature(&total, tol)?;
    let section = if n % 2 == 0 {
        let s = family_signature_section(fc, tol)?;
        if !s.constant {
            return Err(Error::Structural("signature section is not constant".into()));
        }
        s.values[0]
    } else {
        0
    };
    let pairing = sb * section;
    let note = if (m + n) % 2 == 1 {
        "odd total dimension: both sides vanish by convention".to_string()
    } else {
        String::new()
    };
    let pass = se == sb * sf && pairing == se;
    Ok(ChsReport {
        outcome: if pass { ChsOutcome::Pass } else { ChsOutcome::Fail },
        base_dim: m,
        fiber_dim: n,
        trivial_action: true,
        signature_base: Some(sb),
        signature_fiber: Some(sf),
        signature_total: Some(se),
        pairing: Some(pairing),
        note,
    })
}

/// Betti numbers of the mapping torus of `φ` predicted by the Wang sequence:
/// `b_k = dim ker(φ* − 1 | H^k) + dim coker(φ* − 1 | H^{k−1})`.
pub fn wang_betti(action_blocks: &[CMat]) -> Vec<usize> {
    let n = action_blocks.len();
    let rank = |m: &CMat| -> usize {
        if m.nrows() == 0 {
            return 0;
        }
        let sv = m.clone().svd(false, false).singular_values;
        let top = sv.iter().cloned().fold(0.0, f64::max).max(1.0);
        sv.iter().filter(|&&x| x > 1e-9 * top).count()
    };
    let dims: Vec<usize> = action_blocks.iter().map(|b| b.nrows()).collect();
    let ranks: Vec<usize> = action_blocks
        .iter()
        .map(|b| rank(&(b - identity(b.nrows()))))
        .collect();
    (0..=n)
        .map(|k| {
            let ker = if k < n { dims[k] - ranks[k] } else { 0 };
            let coker = if k > 0 { dims[k - 1] - ranks[k - 1] } else { 0 };
            ker + coker
        })
        .collect()
}

/// Dimensions of the Laplacian kernels of a complex.
pub fn betti_numbers(c: &HPComplex, tol: &Tolerances) -> Result<Vec<usize>> {
    Ok(harmonic_reduction(c, tol)?.minimal.dims().to_vec())
}

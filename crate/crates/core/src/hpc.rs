//! Finite-dimensional Hilbert–Poincaré complexes.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{block_diag, fro, identity, inverse, is_exact_identity, max_abs, re, zeros, CMat, ZERO};
use crate::spectral::{eig_hermitian, invertibility_certificate, InvertibilityCertificate};
use crate::tolerance::Tolerances;

/// The adjoint convention reported by [`validate`].
pub const ADJOINT_CONVENTION: &str = "metric adjoint: d*_p = G_p^-1 d_p^H G_(p+1)";

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Tier {
    Weak,
    Strict,
}

/// Graded inner-product space `Λ^0 ⊕ … ⊕ Λ^n`.
#[derive(Clone, Debug, PartialEq)]
pub struct GradedSpace {
    pub n: usize,
    pub dims: Vec<usize>,
    /// One Hermitian positive-definite Gram matrix per degree.
    pub g: Vec<CMat>,
}

impl GradedSpace {
    pub fn new(dims: Vec<usize>, g: Option<Vec<CMat>>) -> Result<Self> {
        if dims.is_empty() {
            return Err(Error::Structural("graded space needs at least one degree".into()));
        }
        let n = dims.len() - 1;
        let g = match g {
            Some(g) => g,
            None => dims.iter().map(|&k| identity(k)).collect(),
        };
        if g.len() != dims.len() {
            return Err(Error::Structural(format!(
                "{} inner products for {} degrees",
                g.len(),
                dims.len()
            )));
        }
        for (p, (gp, &k)) in g.iter().zip(&dims).enumerate() {
            if gp.nrows() != k || gp.ncols() != k {
                return Err(Error::Structural(format!(
                    "G_{p} is {}x{}, expected {k}x{k}",
                    gp.nrows(),
                    gp.ncols()
                )));
            }
        }
        Ok(GradedSpace { n, dims, g })
    }

    pub fn total_dim(&self) -> usize {
        self.dims.iter().sum()
    }

    /// Start index of each degree in the degree-major total basis.
    pub fn offsets(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.dims.len() + 1);
        let mut acc = 0;
        out.push(0);
        for &k in &self.dims {
            acc += k;
            out.push(acc);
        }
        out
    }

    pub fn degree_of(&self) -> Vec<usize> {
        self.dims
            .iter()
            .enumerate()
            .flat_map(|(p, &k)| std::iter::repeat_n(p, k))
            .collect()
    }

    pub fn even_indices(&self) -> Vec<usize> {
        self.indices_with_parity(0)
    }

    pub fn odd_indices(&self) -> Vec<usize> {
        self.indices_with_parity(1)
    }

    fn indices_with_parity(&self, parity: usize) -> Vec<usize> {
        self.degree_of()
            .into_iter()
            .enumerate()
            .filter(|&(_, p)| p % 2 == parity)
            .map(|(i, _)| i)
            .collect()
    }

    /// Even-odd grading `E = (−1)^p`.
    pub fn grading(&self) -> CMat {
        let deg = self.degree_of();
        CMat::from_fn(deg.len(), deg.len(), |i, j| {
            if i != j {
                ZERO
            } else if deg[i] % 2 == 0 {
                re(1.0)
            } else {
                re(-1.0)
            }
        })
    }

    pub fn gram(&self) -> CMat {
        let refs: Vec<&CMat> = self.g.iter().collect();
        block_diag(&refs)
    }

    /// Per-degree `G_p^{1/2}` and `G_p^{-1/2}`.
    pub fn metric_roots(&self) -> Result<(Vec<CMat>, Vec<CMat>)> {
        let tol = Tolerances::default();
        let mut roots = Vec::new();
        let mut inv_roots = Vec::new();
        for gp in &self.g {
            if is_exact_identity(gp) {
                roots.push(gp.clone());
                inv_roots.push(gp.clone());
                continue;
            }
            let es = eig_hermitian(gp, &tol)?;
            if es.values.first().is_some_and(|&x| x <= 0.0) {
                return Err(Error::Structural("inner product is not positive definite".into()));
            }
            roots.push(es.apply(f64::sqrt));
            inv_roots.push(es.apply(|x| 1.0 / x.sqrt()));
        }
        Ok((roots, inv_roots))
    }

    pub fn has_identity_metric(&self) -> bool {
        self.g.iter().all(is_exact_identity)
    }
}

/// A cochain complex of inner-product spaces with a degree-reversing duality.
#[derive(Clone, Debug, PartialEq)]
pub struct HPComplex {
    pub space: GradedSpace,
    /// `d[p]` maps degree `p` to degree `p+1` (shape `dims[p+1] × dims[p]`).
    pub d: Vec<CMat>,
    /// Duality on the total space.
    pub s: CMat,
    pub tier: Tier,
}

impl HPComplex {
    /// Checks shapes and the degree-reversal pattern of `s`.
    pub fn new(space: GradedSpace, d: Vec<CMat>, s: CMat, tier: Tier) -> Result<Self> {
        if space.total_dim() == 0 {
            return Err(Error::Structural("total dimension is zero".into()));
        }
        if d.len() != space.n {
            return Err(Error::Structural(format!(
                "{} differentials for top degree {}",
                d.len(),
                space.n
            )));
        }
        for (p, dp) in d.iter().enumerate() {
            if dp.nrows() != space.dims[p + 1] || dp.ncols() != space.dims[p] {
                return Err(Error::Structural(format!(
                    "d_{p} is {}x{}, expected {}x{}",
                    dp.nrows(),
                    dp.ncols(),
                    space.dims[p + 1],
                    space.dims[p]
                )));
            }
        }
        let total = space.total_dim();
        if s.nrows() != total || s.ncols() != total {
            return Err(Error::Structural(format!(
                "S is {}x{}, expected {total}x{total}",
                s.nrows(),
                s.ncols()
            )));
        }
        let mut c = HPComplex { space, d, s, tier };
        let off = c.degree_reversal_residual();
        if off > 1e-12 * fro(&c.s).max(1.0) {
            return Err(Error::Structural(format!(
                "S has entries of size {off:.3e} outside the degree-reversing blocks"
            )));
        }
        if off > 0.0 {
            // round-off only: enforce the block pattern
            let deg = c.space.degree_of();
            let n = c.space.n;
            for i in 0..total {
                for j in 0..total {
                    if deg[i] + deg[j] != n {
                        c.s[(i, j)] = ZERO;
                    }
                }
            }
        }
        Ok(c)
    }

    /// Complex with zero duality, used for bare cochain complexes.
    pub fn without_duality(space: GradedSpace, d: Vec<CMat>) -> Result<Self> {
        let total = space.total_dim();
        HPComplex::new(space, d, zeros(total, total), Tier::Weak)
    }

    pub fn n(&self) -> usize {
        self.space.n
    }

    pub fn dims(&self) -> &[usize] {
        &self.space.dims
    }

    pub fn total_dim(&self) -> usize {
        self.space.total_dim()
    }

    /// Block of `s` mapping degree `q` to degree `p`.
    pub fn s_block(&self, p: usize, q: usize) -> CMat {
        let off = self.space.offsets();
        self.s
            .view((off[p], off[q]), (self.space.dims[p], self.space.dims[q]))
            .into_owned()
    }

    /// `d` on the total space.
    pub fn d_total(&self) -> CMat {
        let off = self.space.offsets();
        let total = self.total_dim();
        let mut out = zeros(total, total);
        for (p, dp) in self.d.iter().enumerate() {
            out.view_mut((off[p + 1], off[p]), (dp.nrows(), dp.ncols()))
                .copy_from(dp);
        }
        out
    }

    /// Metric adjoint of `d` on the total space.
    pub fn d_star_total(&self) -> CMat {
        let off = self.space.offsets();
        let total = self.total_dim();
        let mut out = zeros(total, total);
        for (p, dp) in self.d.iter().enumerate() {
            let block = self.metric_adjoint_block(p, dp);
            out.view_mut((off[p], off[p + 1]), (block.nrows(), block.ncols()))
                .copy_from(&block);
        }
        out
    }

    fn metric_adjoint_block(&self, p: usize, dp: &CMat) -> CMat {
        let gp = &self.space.g[p];
        let gq = &self.space.g[p + 1];
        if is_exact_identity(gp) && is_exact_identity(gq) {
            dp.adjoint()
        } else {
            let gpi = inverse(gp).expect("inner products are positive definite");
            gpi * dp.adjoint() * gq
        }
    }

    /// `D = d + d*`.
    pub fn dirac(&self) -> CMat {
        self.d_total() + self.d_star_total()
    }

    pub fn b_plus(&self) -> CMat {
        self.dirac() + &self.s
    }

    pub fn b_minus(&self) -> CMat {
        self.dirac() - &self.s
    }

    fn degree_reversal_residual(&self) -> f64 {
        let off = self.space.offsets();
        let n = self.space.n;
        let mut worst: f64 = 0.0;
        for p in 0..=n {
            for q in 0..=n {
                if p + q == n {
                    continue;
                }
                for i in off[p]..off[p + 1] {
                    for j in off[q]..off[q + 1] {
                        worst = worst.max(self.s[(i, j)].norm());
                    }
                }
            }
        }
        worst
    }

    /// Same complex written in an orthonormal basis (`G = I`).
    ///
    /// Conjugates by the Hermitian square root `G^{1/2}`; complexes that
    /// already carry the identity metric are returned unchanged.
    pub fn orthonormalized(&self) -> Result<HPComplex> {
        if self.space.has_identity_metric() {
            return Ok(self.clone());
        }
        let (roots, inv_roots) = self.space.metric_roots()?;
        let d = self
            .d
            .iter()
            .enumerate()
            .map(|(p, dp)| &roots[p + 1] * dp * &inv_roots[p])
            .collect();
        let l = block_diag(&roots.iter().collect::<Vec<_>>());
        let li = block_diag(&inv_roots.iter().collect::<Vec<_>>());
        let s = &l * &self.s * &li;
        let space = GradedSpace::new(self.space.dims.clone(), None)?;
        Ok(HPComplex {
            space,
            d,
            s,
            tier: self.tier,
        })
    }

    /// `D ± S` in an orthonormal basis, hence Hermitian.
    pub fn hermitian_b(&self, sign: f64) -> Result<CMat> {
        let c = self.orthonormalized()?;
        Ok(c.dirac() + &c.s * re(sign))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AxiomCheck {
    pub name: String,
    pub residual: f64,
    pub bound: f64,
    pub pass: bool,
}

impl AxiomCheck {
    fn new(name: &str, residual: f64, bound: f64) -> Self {
        AxiomCheck {
            name: name.into(),
            residual,
            bound,
            pass: residual <= bound,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct AxiomReport {
    pub n: usize,
    pub dims: Vec<usize>,
    pub adjoint_convention: String,
    pub declared_tier: Tier,
    pub d_squared_exact: bool,
    pub checks: Vec<AxiomCheck>,
    pub b_plus: InvertibilityCertificate,
    pub b_minus: InvertibilityCertificate,
    /// Both `D + S` and `D − S` are invertible.
    pub poincare: bool,
    pub tier_achieved: Option<Tier>,
    /// The achieved tier meets the declared one.
    pub pass: bool,
}

impl AxiomReport {
    pub fn check(&self, name: &str) -> Option<&AxiomCheck> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn min_singular(&self) -> [f64; 2] {
        [self.b_plus.min_singular, self.b_minus.min_singular]
    }
}

/// Checks every axiom and certifies invertibility of `D ± S`.
pub fn validate(c: &HPComplex, tol: &Tolerances) -> Result<AxiomReport> {
    let space = &c.space;
    for (p, gp) in space.g.iter().enumerate() {
        if gp.nrows() == 0 {
            continue;
        }
        let es = eig_hermitian(gp, tol)
            .map_err(|e| Error::Structural(format!("G_{p} is not Hermitian: {e}")))?;
        if es.values[0] <= tol.pd {
            return Err(Error::Structural(format!(
                "G_{p} is not positive definite (min eigenvalue {:.3e})",
                es.values[0]
            )));
        }
    }

    let mut checks = Vec::new();

    let mut chain = 0.0_f64;
    let mut exact = true;
    let mut d_scale = 0.0_f64;
    for dp in &c.d {
        d_scale = d_scale.max(fro(dp));
        exact &= dp.iter().all(|z| z.re.fract() == 0.0 && z.im.fract() == 0.0);
    }
    for w in c.d.windows(2) {
        let prod = &w[1] * &w[0];
        chain = chain.max(max_abs(&prod));
        exact &= prod.iter().all(|z| *z == ZERO);
    }
    checks.push(AxiomCheck::new(
        "d_squared",
        chain,
        tol.chain_bound(d_scale * d_scale),
    ));

    let s_scale = fro(&c.s);
    let g = space.gram();
    let gs = &g * &c.s;
    checks.push(AxiomCheck::new(
        "s_self_adjoint",
        fro(&(&gs - gs.adjoint())),
        tol.sym_bound(s_scale * fro(&g)),
    ));
    checks.push(AxiomCheck::new(
        "s_degree_reversal",
        c.degree_reversal_residual(),
        tol.sym_bound(s_scale),
    ));

    let on = c.orthonormalized()?;
    let dirac = on.dirac();
    let s = &on.s;
    let total = c.total_dim();
    let sq = fro(&(s * s - identity(total)));
    let anti = fro(&(s * &dirac + &dirac * s));
    let d_norm = fro(&dirac);
    checks.push(AxiomCheck::new("s_squared", sq, tol.sym_bound(s_scale * s_scale)));
    checks.push(AxiomCheck::new(
        "sd_anticommute",
        anti,
        tol.sym_bound(fro(s) * d_norm),
    ));

    let b_plus = invertibility_certificate(&(&dirac + s), tol);
    let b_minus = invertibility_certificate(&(&dirac - s), tol);
    let poincare = b_plus.pass && b_minus.pass;

    let base_ok = checks[..3].iter().all(|k| k.pass);
    let strict_ok = checks[3..].iter().all(|k| k.pass);
    let tier_achieved = match (base_ok && poincare, strict_ok) {
        (true, true) => Some(Tier::Strict),
        (true, false) => Some(Tier::Weak),
        _ => None,
    };
    let pass = tier_achieved.is_some_and(|t| t >= c.tier);

    Ok(AxiomReport {
        n: space.n,
        dims: space.dims.clone(),
        adjoint_convention: ADJOINT_CONVENTION.into(),
        declared_tier: c.tier,
        d_squared_exact: exact,
        checks,
        b_plus,
        b_minus,
        poincare,
        tier_achieved,
        pass,
    })
}

/// Block-diagonal sum with degrees interleaved: degree `p` of the result is
/// `A_p ⊕ B_p`.
pub fn direct_sum(a: &HPComplex, b: &HPComplex) -> Result<HPComplex> {
    if a.n() != b.n() {
        return Err(Error::Structural(format!(
            "direct sum of complexes of top degree {} and {}",
            a.n(),
            b.n()
        )));
    }
    let n = a.n();
    let dims: Vec<usize> = (0..=n).map(|p| a.dims()[p] + b.dims()[p]).collect();
    let g: Vec<CMat> = (0..=n)
        .map(|p| block_diag(&[&a.space.g[p], &b.space.g[p]]))
        .collect();
    let d: Vec<CMat> = (0..n).map(|p| block_diag(&[&a.d[p], &b.d[p]])).collect();
    let space = GradedSpace::new(dims, Some(g))?;

    let (ia, ib) = direct_sum_embeddings(a, b);
    let total = space.total_dim();
    let mut s = zeros(total, total);
    for (x, map) in [(a, &ia), (b, &ib)] {
        for i in 0..x.total_dim() {
            for j in 0..x.total_dim() {
                s[(map[i], map[j])] = x.s[(i, j)];
            }
        }
    }
    HPComplex::new(space, d, s, a.tier.min(b.tier))
}

/// Positions of the basis vectors of `a` and `b` inside `direct_sum(a, b)`.
pub fn direct_sum_embeddings(a: &HPComplex, b: &HPComplex) -> (Vec<usize>, Vec<usize>) {
    let mut ia = Vec::new();
    let mut ib = Vec::new();
    let mut pos = 0;
    for p in 0..=a.n() {
        for _ in 0..a.dims()[p] {
            ia.push(pos);
            pos += 1;
        }
        for _ in 0..b.dims()[p] {
            ib.push(pos);
            pos += 1;
        }
    }
    (ia, ib)
}

/// `G_p ↦ λ^{n/2−p} G_p`, with `S` rescaled blockwise to stay self-adjoint.
pub fn rescale_inner_products(c: &HPComplex, lambda: f64) -> Result<HPComplex> {
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(Error::Domain(format!("rescale factor {lambda} must be positive")));
    }
    if lambda == 1.0 {
        return Ok(c.clone());
    }
    let n = c.n() as f64;
    let factor = |p: usize| lambda.powf(n / 2.0 - p as f64);
    let g = c
        .space
        .g
        .iter()
        .enumerate()
        .map(|(p, gp)| gp * re(factor(p)))
        .collect();
    let space = GradedSpace::new(c.dims().to_vec(), Some(g))?;
    let deg = c.space.degree_of();
    let s = CMat::from_fn(c.total_dim(), c.total_dim(), |i, j| {
        c.s[(i, j)] * factor(deg[j])
    });
    HPComplex::new(space, c.d.clone(), s, c.tier)
}

/// `S ↦ −S`.
pub fn reverse_orientation(c: &HPComplex) -> HPComplex {
    HPComplex {
        s: -c.s.clone(),
        ..c.clone()
    }
}

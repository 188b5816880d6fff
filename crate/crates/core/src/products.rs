//! Graded tensor products and the product witnesses.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fixtures::probe;
use crate::hpc::{validate, GradedSpace, HPComplex, Tier};
use crate::linalg::{fro, i_pow, identity, kron, re, submatrix, zeros, CMat, C64};
use crate::signature::{even_index, odd_index_representative, signature};
use crate::spectral::{
    functional_calculus, invertibility_certificate, projection_rank, InvertibilityCertificate,
    SpectralFunction,
};
use crate::tolerance::Tolerances;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ParityCase {
    EvenEven,
    EvenOdd,
    OddEven,
    OddOdd,
}

impl ParityCase {
    pub fn of(m: usize, n: usize) -> Self {
        match (m % 2, n % 2) {
            (0, 0) => ParityCase::EvenEven,
            (0, _) => ParityCase::EvenOdd,
            (_, 0) => ParityCase::OddEven,
            _ => ParityCase::OddOdd,
        }
    }
}

/// `σ(p, q) = i^δ · (−1)^{αpq + βp + γq}` for `S = σ(p,q) · S_A ⊗ S_B` on
/// `Λ^p(A) ⊗ Λ^q(B)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct SignRule {
    pub m: usize,
    pub n: usize,
    pub delta: u8,
    pub alpha: u8,
    pub beta: u8,
    pub gamma: u8,
    pub case: ParityCase,
}

impl SignRule {
    fn with(m: usize, n: usize, delta: u8, alpha: u8, beta: u8, gamma: u8) -> Self {
        SignRule {
            m,
            n,
            delta,
            alpha,
            beta,
            gamma,
            case: ParityCase::of(m, n),
        }
    }

    /// `σ(p, q) = i^{mn mod 2} (−1)^{mq}`.
    pub fn canonical(m: usize, n: usize) -> Self {
        SignRule::with(m, n, ((m * n) % 2) as u8, 0, 0, (m % 2) as u8)
    }

    pub fn sigma(&self, p: usize, q: usize) -> C64 {
        let e = self.alpha as usize * p * q + self.beta as usize * p + self.gamma as usize * q;
        let sign = if e % 2 == 0 { 1.0 } else { -1.0 };
        i_pow(self.delta as i64) * sign
    }
}

/// Degree-major positions of `A_p ⊗ B_q` inside the product: degree `r`
/// lists the pieces with `p` ascending, each in Kronecker order.
fn product_layout(da: &[usize], db: &[usize]) -> (Vec<usize>, Vec<usize>) {
    let (m, n) = (da.len() - 1, db.len() - 1);
    let dims: Vec<usize> = (0..=m + n)
        .map(|r| {
            (0..=m)
                .filter(|&p| r >= p && r - p <= n)
                .map(|p| da[p] * db[r - p])
                .sum()
        })
        .collect();
    let off_a: Vec<usize> = std::iter::once(0).chain(da.iter().scan(0, |s, &k| { *s += k; Some(*s) })).collect();
    let off_b: Vec<usize> = std::iter::once(0).chain(db.iter().scan(0, |s, &k| { *s += k; Some(*s) })).collect();
    let nb = off_b[n + 1];
    let total = off_a[m + 1] * nb;
    let mut perm = vec![0; total];
    let mut pos = 0;
    for r in 0..=m + n {
        for p in 0..=m {
            if r < p || r - p > n {
                continue;
            }
            let q = r - p;
            for ia in off_a[p]..off_a[p + 1] {
                for ib in off_b[q]..off_b[q + 1] {
                    perm[ia * nb + ib] = pos;
                    pos += 1;
                }
            }
        }
    }
    (dims, perm)
}

fn permute(m: &CMat, perm: &[usize]) -> CMat {
    let mut out = zeros(m.nrows(), m.ncols());
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            let v = m[(i, j)];
            if v != C64::new(0.0, 0.0) {
                out[(perm[i], perm[j])] = v;
            }
        }
    }
    out
}

fn split_differential(total: &CMat, dims: &[usize]) -> Vec<CMat> {
    let mut off = vec![0];
    for k in dims {
        off.push(off.last().unwrap() + k);
    }
    (0..dims.len() - 1)
        .map(|r| {
            total
                .view((off[r + 1], off[r]), (dims[r + 1], dims[r]))
                .into_owned()
        })
        .collect()
}

fn split_gram(total: &CMat, dims: &[usize]) -> Vec<CMat> {
    let mut off = vec![0];
    for k in dims {
        off.push(off.last().unwrap() + k);
    }
    (0..dims.len())
        .map(|r| total.view((off[r], off[r]), (dims[r], dims[r])).into_owned())
        .collect()
}

/// Assembles a product complex from total-space operators given in Kronecker
/// order.
pub(crate) fn assemble(
    da: &[usize],
    db: &[usize],
    d_kron: &CMat,
    g_kron: &CMat,
    s_kron: &CMat,
    tier: Tier,
) -> Result<HPComplex> {
    let (dims, perm) = product_layout(da, db);
    let d = split_differential(&permute(d_kron, &perm), &dims);
    let g = split_gram(&permute(g_kron, &perm), &dims);
    let space = GradedSpace::new(dims, Some(g))?;
    HPComplex::new(space, d, permute(s_kron, &perm), tier)
}

/// Position of the Kronecker basis vector `(ia, ib)` in the product basis.
pub fn product_index(a: &HPComplex, b: &HPComplex) -> impl Fn(usize, usize) -> usize {
    let (_, perm) = product_layout(a.dims(), b.dims());
    let nb = b.total_dim();
    move |ia, ib| perm[ia * nb + ib]
}

pub fn graded_tensor_with_rule(a: &HPComplex, b: &HPComplex, rule: &SignRule) -> Result<HPComplex> {
    let deg_a = a.space.degree_of();
    let deg_b = b.space.degree_of();
    let nb = b.total_dim();
    let d_kron = kron(&a.d_total(), &identity(nb)) + kron(&a.space.grading(), &b.d_total());
    let g_kron = kron(&a.space.gram(), &b.space.gram());
    let mut s_kron = kron(&a.s, &b.s);
    for j in 0..s_kron.ncols() {
        let sigma = rule.sigma(deg_a[j / nb], deg_b[j % nb]);
        for i in 0..s_kron.nrows() {
            s_kron[(i, j)] *= sigma;
        }
    }
    assemble(a.dims(), b.dims(), &d_kron, &g_kron, &s_kron, a.tier.min(b.tier))
}

/// Product complex `d = d_A ⊗ 1 + E_A ⊗ d_B`, `G = G_A ⊗ G_B`,
/// `S = σ(p,q) S_A ⊗ S_B` with the canonical sign rule.
pub fn graded_tensor(a: &HPComplex, b: &HPComplex) -> Result<HPComplex> {
    let rule = SignRule::canonical(a.n(), b.n());
    let out = graded_tensor_with_rule(a, b, &rule)?;
    let gs = out.space.gram() * &out.s;
    let residual = fro(&(&gs - gs.adjoint()));
    let bound = Tolerances::default().sym_bound(fro(&gs));
    if residual > bound {
        return Err(Error::Structural(format!(
            "sign rule produced a non-self-adjoint duality (residual {residual:.3e})"
        )));
    }
    Ok(out)
}

/// Searches `σ = i^δ (−1)^{αpq+βp+γq}` in the order `δ`, then `(α, β, γ)`
/// lexicographically, accepting the first rule whose product of strict
/// probe complexes validates at strict tier.
pub fn derive_sign_rule(m: usize, n: usize, tol: &Tolerances) -> Result<SignRule> {
    let a = probe(m);
    let b = probe(n);
    for delta in 0..4u8 {
        for bits in 0..8u8 {
            let rule = SignRule::with(m, n, delta, bits >> 2, (bits >> 1) & 1, bits & 1);
            let c = graded_tensor_with_rule(&a, &b, &rule)?;
            if validate(&c, tol)?.tier_achieved == Some(Tier::Strict) {
                return Ok(rule);
            }
        }
    }
    Err(Error::Structural(format!(
        "no sign rule makes the ({m}, {n}) product strict"
    )))
}

#[derive(Clone, Debug, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct ProductCheck {
    pub case: ParityCase,
    /// 1 when `mn` is even, 2 otherwise; metadata only.
    pub k_mn: u8,
    pub rule: SignRule,
    pub signature_a: i64,
    pub signature_b: i64,
    pub signature_product: i64,
    pub product_tier: Option<Tier>,
    pub pass: bool,
}

/// Checks `sgn(a ⊗ b) = sgn(a) · sgn(b)`, odd dimensions counting as 0.
pub fn product_signature_check(a: &HPComplex, b: &HPComplex, tol: &Tolerances) -> Result<ProductCheck> {
    let sa = signature(a, tol)?;
    let sb = signature(b, tol)?;
    let prod = graded_tensor(a, b)?;
    let report = validate(&prod, tol)?;
    let sp = signature(&prod, tol)?;
    Ok(ProductCheck {
        case: ParityCase::of(a.n(), b.n()),
        k_mn: if (a.n() * b.n()) % 2 == 0 { 1 } else { 2 },
        rule: SignRule::canonical(a.n(), b.n()),
        signature_a: sa,
        signature_b: sb,
        signature_product: sp,
        product_tier: report.tier_achieved,
        pass: sp == sa * sb && report.poincare,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IdentityCheck {
    pub name: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub s: Option<f64>,
    pub residual: f64,
    pub bound: f64,
    pub pass: bool,
}

impl IdentityCheck {
    fn new(name: &str, s: Option<f64>, residual: f64, scale: f64, tol: &Tolerances) -> Self {
        let bound = tol.id_bound(scale);
        IdentityCheck {
            name: name.into(),
            s,
            residual,
            bound,
            pass: residual <= bound,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SampleCertificates {
    pub s: f64,
    pub plus: InvertibilityCertificate,
    pub minus: InvertibilityCertificate,
}

#[derive(Clone, Debug, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct RankIdentity {
    pub rank_p: usize,
    pub rank_reference: usize,
    pub rank_plus: usize,
    pub rank_minus: usize,
    pub lhs: i64,
    pub rhs: i64,
}

#[derive(Clone, Debug, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct ProductWitnessReport {
    pub kind: &'static str,
    pub identities: Vec<IdentityCheck>,
    pub samples: Vec<SampleCertificates>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rank_identity: Option<RankIdentity>,
    pub pass: bool,
}

impl ProductWitnessReport {
    pub fn failures(&self) -> Vec<&IdentityCheck> {
        self.identities.iter().filter(|c| !c.pass).collect()
    }
}

fn require_strict(b: &HPComplex, tol: &Tolerances, role: &str) -> Result<HPComplex> {
    let report = validate(b, tol)?;
    if report.tier_achieved != Some(Tier::Strict) {
        return Err(Error::Domain(format!(
            "{role} factor must be a strict-tier Poincaré complex (achieved {:?})",
            report.tier_achieved
        )));
    }
    b.orthonormalized()
}

/// `W_{±,s} = B^±|B^±|^{−s} ⊗ 1 + 1 ⊗ S_b D_b` on `Λ(a) ⊗ Λ^even(b)`, with
/// `W*W = (B^±)^{2(1−s)} ⊗ 1 + 1 ⊗ D_b²` checked at `k` uniform values of `s`.
pub fn witness_even_odd(a: &HPComplex, b: &HPComplex, k: usize, tol: &Tolerances) -> Result<ProductWitnessReport> {
    if a.n() % 2 != 0 || b.n() % 2 != 1 {
        return Err(Error::Domain(format!(
            "even-odd witness needs (even, odd) dimensions, got ({}, {})",
            a.n(),
            b.n()
        )));
    }
    let ra = validate(a, tol)?;
    if !ra.poincare {
        return Err(Error::Domain("even factor has singular D±S".into()));
    }
    let bo = require_strict(b, tol, "odd")?;
    let ao = a.orthonormalized()?;

    let even_b = bo.space.even_indices();
    let db = bo.dirac();
    let sd = submatrix(&(&bo.s * &db), &even_b, &even_b);
    let d2 = submatrix(&(&db * &db), &even_b, &even_b);
    let ia = identity(ao.total_dim());
    let ib = identity(even_b.len());
    let tail = kron(&ia, &sd);
    let tail_sq = kron(&ia, &d2);

    let grid: Vec<f64> = (0..k)
        .map(|i| if k == 1 { 0.0 } else { i as f64 / (k - 1) as f64 })
        .collect();
    let signs = [1.0, -1.0];
    let bmat: Vec<CMat> = signs
        .iter()
        .map(|&sg| ao.dirac() + &ao.s * re(sg))
        .collect();

    let per_sample: Vec<(Vec<IdentityCheck>, SampleCertificates)> = grid
        .par_iter()
        .map(|&s| {
            let mut checks = Vec::new();
            let mut certs = Vec::new();
            for (bm, label) in bmat.iter().zip(["+", "-"]) {
                let f = functional_calculus(bm, SpectralFunction::SignPower(s), tol)?;
                let abs2 = functional_calculus(bm, SpectralFunction::AbsPower(2.0 * (1.0 - s)), tol)?;
                let w = kron(&f, &ib) + &tail;
                let rhs = kron(&abs2, &ib) + &tail_sq;
                let lhs = w.adjoint() * &w;
                checks.push(IdentityCheck::new(
                    &format!("W{label}*W{label} positivity"),
                    Some(s),
                    fro(&(&lhs - &rhs)),
                    fro(&rhs),
                    tol,
                ));
                certs.push(invertibility_certificate(&w, tol));
            }
            Ok((
                checks,
                SampleCertificates {
                    s,
                    plus: certs[0],
                    minus: certs[1],
                },
            ))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut identities = Vec::new();
    let mut samples = Vec::new();
    for (c, s) in per_sample {
        identities.extend(c);
        samples.push(s);
    }

    for (bm, label) in bmat.iter().zip(["+", "-"]) {
        let w0 = kron(&functional_calculus(bm, SpectralFunction::SignPower(0.0), tol)?, &ib) + &tail;
        let expect0 = kron(bm, &ib) + &tail;
        identities.push(IdentityCheck::new(
            &format!("W{label} at s=0"),
            Some(0.0),
            fro(&(&w0 - &expect0)),
            fro(&expect0),
            tol,
        ));
        let w1 = kron(&functional_calculus(bm, SpectralFunction::SignPower(1.0), tol)?, &ib) + &tail;
        let es = crate::spectral::eig_hermitian(bm, tol)?;
        let pp = es.apply(|x| if x > 0.0 { 1.0 } else { 0.0 });
        let pm = es.apply(|x| if x < 0.0 { 1.0 } else { 0.0 });
        let expect1 = kron(&(pp - pm), &ib) + &tail;
        identities.push(IdentityCheck::new(
            &format!("W{label} at s=1"),
            Some(1.0),
            fro(&(&w1 - &expect1)),
            fro(&expect1),
            tol,
        ));
    }

    let pass = identities.iter().all(|c| c.pass) && samples.iter().all(|s| s.plus.pass && s.minus.pass);
    Ok(ProductWitnessReport {
        kind: "even-odd",
        identities,
        samples,
        rank_identity: None,
        pass,
    })
}

/// `S₁ = S_b`, `S₂ = g(D_b) + S_b f(D_b)`, `P = (S₂S₁S₂ + 1)/2` with
/// `g(x) = x/√(1+x²)`, `f(x) = 1/√(1+x²)`, and the rank identity
/// `rank P − rank (1−S₁)/2 = rank P₊(D_b+S_b) − rank P₊(D_b−S_b)`.
pub fn witness_odd_even(a: &HPComplex, b: &HPComplex, tol: &Tolerances) -> Result<ProductWitnessReport> {
    if a.n() % 2 != 1 || b.n() % 2 != 0 {
        return Err(Error::Domain(format!(
            "odd-even witness needs (odd, even) dimensions, got ({}, {})",
            a.n(),
            b.n()
        )));
    }
    odd_index_representative(a, tol)?;
    let bo = require_strict(b, tol, "even")?;
    let dim = bo.total_dim();
    let one = identity(dim);
    let db = bo.dirac();
    let s1 = bo.s.clone();
    let g = functional_calculus(&db, SpectralFunction::Normalizing, tol)?;
    let f = functional_calculus(&db, SpectralFunction::Damping, tol)?;
    let s2 = &g + &s1 * &f;
    let t = &s2 * &s1 * &s2;
    let p = (&t + &one) * re(0.5);
    let scale = dim as f64;

    let identities = vec![
        IdentityCheck::new("S2^2 = 1", None, fro(&(&s2 * &s2 - &one)), scale, tol),
        IdentityCheck::new("(S2 S1 S2)^2 = 1", None, fro(&(&t * &t - &one)), scale, tol),
        IdentityCheck::new("P^2 = P", None, fro(&(&p * &p - &p)), fro(&p), tol),
        IdentityCheck::new("P* = P", None, fro(&(&p - p.adjoint())), fro(&p), tol),
    ];

    let reference = (&one - &s1) * re(0.5);
    let rank_p = projection_rank(&p, tol)?;
    let rank_reference = projection_rank(&reference, tol)?;
    let idx = even_index(b, tol)?;
    let lhs = rank_p as i64 - rank_reference as i64;
    let rank_identity = RankIdentity {
        rank_p,
        rank_reference,
        rank_plus: idx.ranks[0],
        rank_minus: idx.ranks[1],
        lhs,
        rhs: idx.signature,
    };
    let pass = identities.iter().all(|c| c.pass) && lhs == idx.signature;
    Ok(ProductWitnessReport {
        kind: "odd-even",
        identities,
        samples: Vec::new(),
        rank_identity: Some(rank_identity),
        pass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{self, cp2_model, hyperbolic, point, s1_model, s2_model, t2_model};
    use crate::signature::signature_even;

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    #[test]
    fn canonical_rule_reproduces_odd_even_case() {
        let r = SignRule::canonical(1, 2);
        assert_eq!(r.sigma(0, 0), re(1.0));
        assert_eq!(r.sigma(1, 2), re(1.0));
        assert_eq!(r.sigma(0, 1), re(-1.0));
        assert_eq!(r.sigma(1, 1), re(-1.0));
        for q in 0..4 {
            assert_eq!(SignRule::canonical(0, 3).sigma(0, q), re(1.0));
        }
    }

    #[test]
    fn derived_rule_is_canonical() {
        for m in 0..=4 {
            for n in 0..=4 {
                let r = derive_sign_rule(m, n, &tol()).unwrap();
                let canon = SignRule::canonical(m, n);
                for p in 0..=m {
                    for q in 0..=n {
                        assert_eq!(r.sigma(p, q), canon.sigma(p, q), "(m, n) = ({m}, {n}) at ({p}, {q})");
                    }
                }
            }
        }
    }

    #[test]
    fn point_is_unit() {
        for (_, c) in fixtures::model_grid() {
            assert_eq!(graded_tensor(&point(), &c).unwrap(), c);
        }
    }

    #[test]
    fn product_signatures() {
        let p = graded_tensor(&s2_model(), &s2_model()).unwrap();
        assert_eq!(p.n(), 4);
        assert_eq!(signature_even(&p, &tol()).unwrap(), 0);
        let p = graded_tensor(&cp2_model(), &cp2_model()).unwrap();
        assert_eq!(p.n(), 8);
        assert_eq!(signature_even(&p, &tol()).unwrap(), 1);
        let chk = product_signature_check(&point(), &cp2_model(), &tol()).unwrap();
        assert!(chk.pass);
        assert_eq!(chk.k_mn, 1);
        assert_eq!(product_signature_check(&s1_model(), &s1_model(), &tol()).unwrap().k_mn, 2);
    }

    #[test]
    fn circle_squared_is_torus_model() {
        let p = graded_tensor(&s1_model(), &s1_model()).unwrap();
        // swap the two degree-1 basis vectors
        let perm = [0usize, 2, 1, 3];
        let t = t2_model();
        let permuted = CMat::from_fn(4, 4, |i, j| p.s[(perm[i], perm[j])]);
        assert_eq!(permuted, t.s);
        assert_eq!(p.dims(), t.dims());
    }

    #[test]
    fn tensor_is_associative_up_to_regrading() {
        let (a, b, c) = (s1_model(), hyperbolic(2, 0), s2_model());
        let left = graded_tensor(&graded_tensor(&a, &b).unwrap(), &c).unwrap();
        let right = graded_tensor(&a, &graded_tensor(&b, &c).unwrap()).unwrap();
        assert_eq!(left.dims(), right.dims());
        // regrading isometry: Kronecker index (ia, ib, ic) in both layouts
        let ab = graded_tensor(&a, &b).unwrap();
        let bc = graded_tensor(&b, &c).unwrap();
        let i_ab = product_index(&a, &b);
        let i_l = product_index(&ab, &c);
        let i_bc = product_index(&b, &c);
        let i_r = product_index(&a, &bc);
        let (na, nb, nc) = (a.total_dim(), b.total_dim(), c.total_dim());
        let mut map = vec![0; na * nb * nc];
        for x in 0..na {
            for y in 0..nb {
                for z in 0..nc {
                    map[i_l(i_ab(x, y), z)] = i_r(x, i_bc(y, z));
                }
            }
        }
        let total = left.total_dim();
        let mut q = zeros(total, total);
        for (l, &r) in map.iter().enumerate() {
            q[(r, l)] = re(1.0);
        }
        let qt = q.transpose();
        assert_eq!(&q * left.d_total() * &qt, right.d_total());
        assert_eq!(&q * &left.s * &qt, right.s);
    }

    #[test]
    fn grading_identities() {
        for c in [fixtures::probe(3), fixtures::probe(4)] {
            let e = c.space.grading();
            let d = c.d_total();
            assert_eq!(&e * &d + &d * &e, zeros(c.total_dim(), c.total_dim()));
            assert_eq!(&e * &e, identity(c.total_dim()));
        }
    }

    #[test]
    fn even_odd_witness() {
        let r = witness_even_odd(&point(), &s1_model(), 11, &tol()).unwrap();
        assert!(r.pass);
        assert!(r.identities.iter().all(|c| c.residual <= 1e-12));
        let r = witness_even_odd(&s2_model(), &s1_model(), 11, &tol()).unwrap();
        assert!(r.pass);
        assert_eq!(r.samples.len(), 11);
        let r = witness_even_odd(&fixtures::probe(2), &fixtures::probe(3), 11, &tol()).unwrap();
        assert!(r.pass, "{:?}", r.failures());
    }

    #[test]
    fn even_odd_witness_rejects_zero_duality() {
        let mut b = s1_model();
        b.s = zeros(2, 2);
        assert!(matches!(witness_even_odd(&point(), &b, 11, &tol()), Err(Error::Domain(_))));
    }

    #[test]
    fn odd_even_witness() {
        let a = s1_model();
        let r = witness_odd_even(&a, &point(), &tol()).unwrap();
        assert!(r.pass);
        let ri = r.rank_identity.as_ref().unwrap();
        assert_eq!((ri.lhs, ri.rhs), (1, 1));
        for (b, want) in [(s2_model(), 0), (cp2_model(), 1), (fixtures::probe(4), 0), (fixtures::probe(2), 0)] {
            let r = witness_odd_even(&a, &b, &tol()).unwrap();
            assert!(r.pass, "{:?}", r.failures());
            assert_eq!(r.rank_identity.unwrap().lhs, want);
        }
    }
}

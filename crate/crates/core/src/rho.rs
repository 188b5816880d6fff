//! Homotopy equivalences, the duality path `S_f(t)` and rho certificates.
//!
//! All path computations run on `A′ ⊕ A` written as
//! `direct_sum(A′, reverse_orientation(A))`, so that the duality at `t = 0` is
//! `diag(S′, −S)` and the localization tail is the schedule of that sum.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::hpc::{
    direct_sum, direct_sum_embeddings, reverse_orientation, validate, AxiomCheck, HPComplex,
};
use crate::linalg::{c, fro, identity, inverse, re, submatrix, zeros, CMat};
use crate::signature::localized_signature_path;
use crate::spectral::{eig_hermitian, invertibility_certificate, projection_rank};
use crate::tolerance::Tolerances;

/// Chain homotopy equivalence `f : A′ → A`, `g : A → A′` with
/// `1 − gf = d′h′ + h′d′` and `1 − fg = dh + hd`.
#[derive(Clone, Debug, PartialEq)]
pub struct HomotopyEquivalence {
    pub source: HPComplex,
    pub target: HPComplex,
    pub f: CMat,
    pub g: CMat,
    pub h: CMat,
    pub h_prime: CMat,
}

impl HomotopyEquivalence {
    pub fn identity(c: &HPComplex) -> Self {
        let k = c.total_dim();
        HomotopyEquivalence {
            source: c.clone(),
            target: c.clone(),
            f: identity(k),
            g: identity(k),
            h: zeros(k, k),
            h_prime: zeros(k, k),
        }
    }
}

/// `A′ = A ⊕ P → A` collapsing an acyclic complex `P`; `h′` is the
/// contraction `d*Δ⁻¹` of `P`.
pub fn collapse_equivalence(a: &HPComplex, acyclic: &HPComplex) -> Result<HomotopyEquivalence> {
    let source = direct_sum(a, acyclic)?;
    let dirac = acyclic.dirac();
    let lap = &dirac * &dirac;
    let lap_inv = inverse(&lap).ok_or_else(|| Error::Domain("collapsed complex is not acyclic".into()))?;
    let k = acyclic.d_star_total() * lap_inv;
    let (ia, ip) = direct_sum_embeddings(a, acyclic);
    let (na, ns) = (a.total_dim(), source.total_dim());
    let mut f = zeros(na, ns);
    for (i, &pos) in ia.iter().enumerate() {
        f[(i, pos)] = re(1.0);
    }
    let g = f.transpose();
    let mut h_prime = zeros(ns, ns);
    for (i, &pi) in ip.iter().enumerate() {
        for (j, &pj) in ip.iter().enumerate() {
            h_prime[(pi, pj)] = k[(i, j)];
        }
    }
    Ok(HomotopyEquivalence {
        source,
        target: a.clone(),
        f,
        g,
        h: zeros(na, na),
        h_prime,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct HomotopyReport {
    pub checks: Vec<AxiomCheck>,
    /// Bounded homotopy tracks are automatic in finite dimensions.
    pub control: &'static str,
    pub pass: bool,
}

impl HomotopyReport {
    pub fn failed(&self) -> Vec<&str> {
        self.checks.iter().filter(|c| !c.pass).map(|c| c.name.as_str()).collect()
    }
}

fn check(name: &str, residual: f64, scale: f64, tol: &Tolerances) -> AxiomCheck {
    let bound = tol.sym_bound(scale);
    AxiomCheck {
        name: name.into(),
        residual,
        bound,
        pass: residual <= bound,
    }
}

fn conform(he: &HomotopyEquivalence) -> Result<()> {
    let (n1, n0) = (he.target.total_dim(), he.source.total_dim());
    let shapes = [
        ("f", &he.f, n1, n0),
        ("g", &he.g, n0, n1),
        ("h", &he.h, n1, n1),
        ("h_prime", &he.h_prime, n0, n0),
    ];
    for (name, m, r, c) in shapes {
        if m.nrows() != r || m.ncols() != c {
            return Err(Error::Structural(format!(
                "{name} is {}x{}, expected {r}x{c}",
                m.nrows(),
                m.ncols()
            )));
        }
    }
    if he.source.n() != he.target.n() {
        return Err(Error::Structural(format!(
            "source has top degree {}, target {}",
            he.source.n(),
            he.target.n()
        )));
    }
    Ok(())
}

/// Verifies the four chain identities.
pub fn validate_homotopy_equivalence(he: &HomotopyEquivalence, tol: &Tolerances) -> Result<HomotopyReport> {
    conform(he)?;
    let d0 = he.source.d_total();
    let d1 = he.target.d_total();
    let (f, g, h, hp) = (&he.f, &he.g, &he.h, &he.h_prime);
    let i0 = identity(he.source.total_dim());
    let i1 = identity(he.target.total_dim());
    let scale = |ms: &[&CMat]| ms.iter().map(|m| fro(m)).product::<f64>();
    let checks = vec![
        check("f chain map", fro(&(f * &d0 - &d1 * f)), scale(&[f, &d0]) + scale(&[&d1, f]), tol),
        check("g chain map", fro(&(g * &d1 - &d0 * g)), scale(&[g, &d1]) + scale(&[&d0, g]), tol),
        check(
            "1 - gf = d'h' + h'd'",
            fro(&(&i0 - g * f - (&d0 * hp + hp * &d0))),
            fro(&i0) + scale(&[g, f]) + 2.0 * scale(&[&d0, hp]),
            tol,
        ),
        check(
            "1 - fg = dh + hd",
            fro(&(&i1 - f * g - (&d1 * h + h * &d1))),
            fro(&i1) + scale(&[f, g]) + 2.0 * scale(&[&d1, h]),
            tol,
        ),
    ];
    let pass = checks.iter().all(|c| c.pass);
    Ok(HomotopyReport {
        checks,
        control: "vacuous in finite dimensions",
        pass,
    })
}

/// Path data in an orthonormal basis of `Σ = A′ ⊕ (−A)`.
struct PathData {
    sum: HPComplex,
    dirac: CMat,
    ia: Vec<usize>,
    ib: Vec<usize>,
    sp: CMat,
    s: CMat,
    fsf: CMat,
    fs: CMat,
    sf: CMat,
}

impl PathData {
    fn new(he: &HomotopyEquivalence) -> Result<Self> {
        let src = he.source.orthonormalized()?;
        let tgt = he.target.orthonormalized()?;
        let (l0, l0i) = he.source.space.metric_roots()?;
        let (l1, _) = he.target.space.metric_roots()?;
        let blk = |v: &[CMat]| crate::linalg::block_diag(&v.iter().collect::<Vec<_>>());
        let f = blk(&l1) * &he.f * blk(&l0i);
        let _ = l0;
        let sum = direct_sum(&src, &reverse_orientation(&tgt))?;
        let (ia, ib) = direct_sum_embeddings(&src, &tgt);
        let s = tgt.s.clone();
        let fs = f.adjoint() * &s;
        let sf = &s * &f;
        let fsf = &fs * &f;
        Ok(PathData {
            dirac: sum.dirac(),
            sum,
            ia,
            ib,
            sp: src.s,
            s,
            fsf,
            fs,
            sf,
        })
    }

    fn place(&self, tl: &CMat, tr: &CMat, bl: &CMat, br: &CMat) -> CMat {
        let total = self.sum.total_dim();
        let mut out = zeros(total, total);
        for (i, &pi) in self.ia.iter().enumerate() {
            for (j, &pj) in self.ia.iter().enumerate() {
                out[(pi, pj)] = tl[(i, j)];
            }
            for (j, &pj) in self.ib.iter().enumerate() {
                out[(pi, pj)] = tr[(i, j)];
            }
        }
        for (i, &pi) in self.ib.iter().enumerate() {
            for (j, &pj) in self.ia.iter().enumerate() {
                out[(pi, pj)] = bl[(i, j)];
            }
            for (j, &pj) in self.ib.iter().enumerate() {
                out[(pi, pj)] = br[(i, j)];
            }
        }
        out
    }

    /// Branch `j ∈ 1..=6` of the path evaluated at `t` (any real `t`).
    fn segment(&self, j: usize, t: f64) -> CMat {
        let z_tr = zeros(self.fs.nrows(), self.fs.ncols());
        let z_bl = zeros(self.sf.nrows(), self.sf.ncols());
        let z_tl = zeros(self.sp.nrows(), self.sp.ncols());
        let z_br = zeros(self.s.nrows(), self.s.ncols());
        match j {
            1 => self.place(
                &(&self.sp * re(1.0 - t) + &self.fsf * re(t)),
                &z_tr,
                &z_bl,
                &(-&self.s),
            ),
            2 | 5 => {
                let theta = if j == 2 { PI / 2.0 * (t - 1.0) } else { PI / 2.0 * (5.0 - t) };
                let (sn, cs) = theta.sin_cos();
                let m = self.place(
                    &(&self.fsf * re(cs)),
                    &(&self.fs * re(sn)),
                    &(&self.sf * re(sn)),
                    &(&self.s * re(-cs)),
                );
                if j == 2 {
                    m
                } else {
                    -m
                }
            }
            3 | 4 => {
                // one continuous phase rotation from 0 to π across [2, 4]
                let phi = PI * (t - 2.0) / 2.0;
                let e = c(phi.cos(), phi.sin());
                self.place(&z_tl, &(&self.fs * e), &(&self.sf * e.conj()), &z_br)
            }
            6 => -self.place(
                &(&self.sp * re(t - 5.0) + &self.fsf * re(6.0 - t)),
                &z_tr,
                &z_bl,
                &(-&self.s),
            ),
            _ => unreachable!("segments are numbered 1..=6"),
        }
    }

    fn s_f(&self, t: f64) -> CMat {
        let j = (t.floor() as i64).clamp(0, 5) as usize + 1;
        self.segment(j, t)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct PathSample {
    pub t: f64,
    pub min_singular_plus: f64,
    pub min_singular_minus: f64,
    pub self_adjoint_residual: f64,
    pub pass: bool,
}

impl PathSample {
    pub fn min_singular(&self) -> f64 {
        self.min_singular_plus.min(self.min_singular_minus)
    }
}

#[derive(Clone, Debug, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct RhoPath {
    pub samples: Vec<PathSample>,
    /// Extra points from bisection near the smallest singular value.
    pub refined: Vec<PathSample>,
    pub min_singular: f64,
    /// Location of the smallest singular value; the failure point when `pass` is false.
    pub t_star: f64,
    pub junction_residual: f64,
    pub endpoint_residual: f64,
    /// Bound applied to both continuity residuals.
    pub continuity_bound: f64,
    pub pass: bool,
}

fn evaluate(pd: &PathData, t: f64, tol: &Tolerances) -> PathSample {
    let s = pd.s_f(t);
    let sa = fro(&(&s - s.adjoint()));
    let bp = &pd.dirac + &s;
    let bm = &pd.dirac - &s;
    let cp = invertibility_certificate(&bp, tol);
    let cm = invertibility_certificate(&bm, tol);
    PathSample {
        t,
        min_singular_plus: cp.min_singular,
        min_singular_minus: cm.min_singular,
        self_adjoint_residual: sa,
        pass: cp.pass && cm.pass && sa <= tol.sym_bound(fro(&s)),
    }
}

/// `K` uniform samples of `[0, 6]`.
pub fn path_grid(k: usize) -> Vec<f64> {
    match k {
        0 => Vec::new(),
        1 => vec![0.0],
        _ => (0..k).map(|i| 6.0 * i as f64 / (k - 1) as f64).collect(),
    }
}

fn preconditions(he: &HomotopyEquivalence, tol: &Tolerances) -> Result<()> {
    let report = validate_homotopy_equivalence(he, tol)?;
    if !report.pass {
        return Err(Error::InvalidHomotopy(format!(
            "identities fail: {}",
            report.failed().join(", ")
        )));
    }
    for (role, c) in [("source", &he.source), ("target", &he.target)] {
        if !validate(c, tol)?.poincare {
            return Err(Error::DualityDegenerate(format!("{role} has singular D±S")));
        }
    }
    Ok(())
}

/// Samples `S_f(t)` on `[0, 6]`, certifies `D ± S_f(t)`, and refines by
/// ternary search around the smallest singular value down to width `1e-3`.
pub fn rho_path(he: &HomotopyEquivalence, k: usize, tol: &Tolerances) -> Result<RhoPath> {
    preconditions(he, tol)?;
    let pd = PathData::new(he)?;
    Ok(sample_path(&pd, k, tol))
}

fn sample_path(pd: &PathData, k: usize, tol: &Tolerances) -> RhoPath {
    let grid = path_grid(k);
    let samples: Vec<PathSample> = grid.par_iter().map(|&t| evaluate(pd, t, tol)).collect();

    let mut refined = Vec::new();
    // earliest sample within round-off of the smallest value
    let lowest = samples.iter().map(PathSample::min_singular).fold(f64::INFINITY, f64::min);
    let argmin = samples
        .iter()
        .position(|s| s.min_singular() <= lowest * (1.0 + 1e-9) + 1e-15)
        .unwrap_or(0);
    if samples.len() > 1 {
        let mut lo = grid[argmin.saturating_sub(1)];
        let mut hi = grid[(argmin + 1).min(grid.len() - 1)];
        while hi - lo > 1e-3 {
            let m1 = lo + (hi - lo) / 3.0;
            let m2 = hi - (hi - lo) / 3.0;
            let e1 = evaluate(pd, m1, tol);
            let e2 = evaluate(pd, m2, tol);
            if e1.min_singular() <= e2.min_singular() {
                hi = m2;
            } else {
                lo = m1;
            }
            refined.push(e1);
            refined.push(e2);
        }
    }

    let all = samples.iter().chain(&refined);
    let best = all
        .clone()
        .min_by(|a, b| a.min_singular().total_cmp(&b.min_singular()))
        .copied();
    let (min_singular, t_star) = best.map_or((f64::INFINITY, 0.0), |b| (b.min_singular(), b.t));
    let first_fail = samples.iter().chain(&refined).find(|s| !s.pass).map(|s| s.t);

    let scale = fro(&pd.s).max(fro(&pd.sp)).max(1.0);
    let junction_residual = (1..=5)
        .map(|j| fro(&(pd.segment(j, j as f64) - pd.segment(j + 1, j as f64))))
        .fold(0.0, f64::max);
    let s0 = pd.s_f(0.0);
    let expect0 = pd.place(
        &pd.sp,
        &zeros(pd.fs.nrows(), pd.fs.ncols()),
        &zeros(pd.sf.nrows(), pd.sf.ncols()),
        &(-&pd.s),
    );
    let endpoint_residual = fro(&(&s0 - &expect0)).max(fro(&(pd.s_f(6.0) + &s0)));
    let continuity_bound = 1e-10 * scale;
    let continuity_ok = junction_residual <= continuity_bound && endpoint_residual <= continuity_bound;
    let pass = first_fail.is_none() && continuity_ok;
    RhoPath {
        samples,
        refined,
        min_singular,
        t_star: first_fail.unwrap_or(t_star),
        junction_residual,
        endpoint_residual,
        continuity_bound,
        pass,
    }
}

#[derive(Clone, Debug, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct FamilySample {
    pub t: f64,
    pub min_singular: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct OddRhoCertificate {
    pub path: RhoPath,
    /// `(D+S)(D+S_f(t−1))⁻¹` on even degrees, `t ∈ [1, 7]`.
    pub family: Vec<FamilySample>,
    pub tail: Vec<FamilySample>,
    /// `‖family(7) − tail(7)‖`.
    pub seam_residual: f64,
    pub pass: bool,
}

const TAIL_END: f64 = 10.0;
const TAIL_SAMPLES: usize = 10;

pub fn rho_certificate_odd(he: &HomotopyEquivalence, k: usize, tol: &Tolerances) -> Result<OddRhoCertificate> {
    if he.source.n() % 2 != 1 {
        return Err(Error::Domain(format!("odd certificate needs odd n, got {}", he.source.n())));
    }
    let path = rho_path(he, k, tol)?;
    if !path.pass {
        return Err(Error::DualityDegenerate(format!(
            "S_f path fails at t = {} (min singular value {:.3e})",
            path.t_star, path.min_singular
        )));
    }
    let pd = PathData::new(he)?;
    let even = pd.sum.space.even_indices();
    let b0 = &pd.dirac + pd.s_f(0.0);
    let family_at = |tau: f64| -> CMat {
        let bt = &pd.dirac + pd.s_f(tau);
        let full = &b0 * inverse(&bt).expect("path certified invertible");
        submatrix(&full, &even, &even)
    };
    let family: Vec<FamilySample> = path_grid(k)
        .par_iter()
        .map(|&tau| {
            let cert = invertibility_certificate(&family_at(tau), tol);
            FamilySample {
                t: tau + 1.0,
                min_singular: cert.min_singular,
                pass: cert.pass,
            }
        })
        .collect();

    let schedule = localized_signature_path(&pd.sum, TAIL_END, TAIL_SAMPLES, tol)?;
    let tail: Vec<FamilySample> = schedule
        .samples
        .iter()
        .map(|s| FamilySample {
            t: s.t + 6.0,
            min_singular: s.min_singular[0].min(s.min_singular[1]),
            pass: true,
        })
        .collect();
    let seam_residual = schedule
        .samples
        .first()
        .map_or(0.0, |s| fro(&(&family_at(6.0) - &s.representative[0])));
    let pass = family.iter().all(|s| s.pass) && seam_residual <= tol.id_bound(fro(&b0));
    Ok(OddRhoCertificate {
        path,
        family,
        tail,
        seam_residual,
        pass,
    })
}

#[derive(Clone, Debug, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct ThetaSample {
    pub t: f64,
    pub rank_plus: usize,
    pub rank_minus: usize,
    /// `‖Θ₊(t) − Θ₋(t)‖_F`.
    pub difference_norm: f64,
    pub projection_residual: f64,
}

#[derive(Clone, Debug, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct ThetaPair {
    pub path: RhoPath,
    pub samples: Vec<ThetaSample>,
    pub tail: Vec<ThetaSample>,
    pub ranks_constant: bool,
    pub ranks_equal: bool,
    /// First sample whose ranks differ from the initial ones.
    pub rank_jump_at: Option<f64>,
    pub pass: bool,
}

fn positive_projector(b: &CMat, tol: &Tolerances) -> Result<CMat> {
    let es = eig_hermitian(b, tol)?;
    Ok(es.apply(|x| if x > 0.0 { 1.0 } else { 0.0 }))
}

pub fn rho_certificate_even(he: &HomotopyEquivalence, k: usize, tol: &Tolerances) -> Result<ThetaPair> {
    if he.source.n() % 2 != 0 {
        return Err(Error::Domain(format!("even certificate needs even n, got {}", he.source.n())));
    }
    let path = rho_path(he, k, tol)?;
    if !path.pass {
        return Err(Error::DualityDegenerate(format!(
            "S_f path fails at t = {} (min singular value {:.3e})",
            path.t_star, path.min_singular
        )));
    }
    let pd = PathData::new(he)?;
    let theta_plus = positive_projector(&(&pd.dirac + pd.s_f(0.0)), tol)?;
    let rank_plus = projection_rank(&theta_plus, tol)?;
    let samples: Vec<ThetaSample> = path_grid(k)
        .par_iter()
        .map(|&tau| {
            let theta_minus = positive_projector(&(&pd.dirac + pd.s_f(tau)), tol)?;
            let projection_residual = fro(&(&theta_minus * &theta_minus - &theta_minus));
            Ok(ThetaSample {
                t: tau + 1.0,
                rank_plus,
                rank_minus: projection_rank(&theta_minus, tol)?,
                difference_norm: fro(&(&theta_plus - &theta_minus)),
                projection_residual,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let schedule = localized_signature_path(&pd.sum, TAIL_END, TAIL_SAMPLES, tol)?;
    let tail: Vec<ThetaSample> = schedule
        .samples
        .iter()
        .map(|s| {
            let [p, m] = s.ranks.expect("even schedule carries ranks");
            ThetaSample {
                t: s.t + 6.0,
                rank_plus: p,
                rank_minus: m,
                difference_norm: fro(&(&s.representative[0] - &s.representative[1])),
                projection_residual: 0.0,
            }
        })
        .collect();

    let first = samples.first().map(|s| (s.rank_plus, s.rank_minus));
    let rank_jump_at = samples
        .iter()
        .chain(&tail)
        .find(|s| Some((s.rank_plus, s.rank_minus)) != first)
        .map(|s| s.t);
    let ranks_constant = rank_jump_at.is_none();
    let ranks_equal = samples.iter().chain(&tail).all(|s| s.rank_plus == s.rank_minus);
    Ok(ThetaPair {
        path,
        samples,
        tail,
        ranks_constant,
        ranks_equal,
        rank_jump_at,
        pass: ranks_constant && ranks_equal,
    })
}

/// `f = 1` from `c` to `reverse_orientation(c)`: a chain equivalence that
/// does not respect the duality.
pub fn orientation_mismatch(c: &HPComplex) -> HomotopyEquivalence {
    HomotopyEquivalence {
        target: reverse_orientation(c),
        ..HomotopyEquivalence::identity(c)
    }
}

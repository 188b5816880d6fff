//! Finite metric spaces and operators with controlled support.

use std::sync::Arc;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{c, fro, hermitian_residual, identity, kron, max_abs, zeros, CMat, ZERO};
use crate::signature::LocalizationSchedule;

/// Name of the seeded generator behind every random instance.
pub const GENERATOR: &str = "chacha8";

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProductMetric {
    #[default]
    L2,
    Max,
}

impl ProductMetric {
    pub fn combine(self, a: f64, b: f64) -> f64 {
        match self {
            ProductMetric::L2 => a.hypot(b),
            ProductMetric::Max => a.max(b),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Fibration {
    pub labels: Vec<usize>,
    pub base: Arc<FiniteMetricSpace>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FiniteMetricSpace {
    dist: DMatrix<f64>,
    fibration: Option<Fibration>,
}

impl FiniteMetricSpace {
    pub fn new(dist: DMatrix<f64>) -> Result<Self> {
        let n = dist.nrows();
        if dist.ncols() != n {
            return Err(Error::Structural(format!(
                "distance matrix is {}x{}",
                dist.nrows(),
                dist.ncols()
            )));
        }
        let scale = dist.iter().cloned().fold(0.0, f64::max);
        let slack = 1e-12 * scale.max(1.0);
        for x in 0..n {
            if dist[(x, x)] != 0.0 {
                return Err(Error::Structural(format!("d({x}, {x}) = {}", dist[(x, x)])));
            }
            for y in 0..n {
                let v = dist[(x, y)];
                if !v.is_finite() || v < 0.0 || (x != y && v == 0.0) {
                    return Err(Error::Structural(format!("d({x}, {y}) = {v} is not a distance")));
                }
                if v != dist[(y, x)] {
                    return Err(Error::Structural(format!("d({x}, {y}) != d({y}, {x})")));
                }
                for z in 0..n {
                    if dist[(x, z)] > v + dist[(y, z)] + slack {
                        return Err(Error::Structural(format!(
                            "triangle inequality fails at ({x}, {y}, {z})"
                        )));
                    }
                }
            }
        }
        Ok(FiniteMetricSpace {
            dist,
            fibration: None,
        })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::Structural("distance matrix is not square".into()));
        }
        Self::new(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
    }

    /// Points `0..n` on a line with unit spacing.
    pub fn path(n: usize) -> Self {
        FiniteMetricSpace {
            dist: DMatrix::from_fn(n, n, |i, j| i.abs_diff(j) as f64),
            fibration: None,
        }
    }

    pub fn with_fibration(mut self, labels: Vec<usize>, base: Arc<FiniteMetricSpace>) -> Result<Self> {
        if labels.len() != self.points() {
            return Err(Error::Structural(format!(
                "labeling covers {} of {} points",
                labels.len(),
                self.points()
            )));
        }
        if let Some(&bad) = labels.iter().find(|&&l| l >= base.points()) {
            return Err(Error::Structural(format!("label {bad} is not a base point")));
        }
        self.fibration = Some(Fibration { labels, base });
        Ok(self)
    }

    pub fn points(&self) -> usize {
        self.dist.nrows()
    }

    pub fn dist(&self, x: usize, y: usize) -> f64 {
        self.dist[(x, y)]
    }

    pub fn distances(&self) -> &DMatrix<f64> {
        &self.dist
    }

    pub fn fibration(&self) -> Option<&Fibration> {
        self.fibration.as_ref()
    }

    /// `X × Y` with point `(x, y)` at index `x·|Y| + y`, fibered over `X`.
    pub fn product(x: &Arc<FiniteMetricSpace>, y: &FiniteMetricSpace, metric: ProductMetric) -> Self {
        let ny = y.points();
        let n = x.points() * ny;
        let dist = DMatrix::from_fn(n, n, |i, j| {
            metric.combine(x.dist(i / ny, j / ny), y.dist(i % ny, j % ny))
        });
        FiniteMetricSpace {
            dist,
            fibration: Some(Fibration {
                labels: (0..n).map(|i| i / ny).collect(),
                base: Arc::clone(x),
            }),
        }
    }

    /// Every distance multiplied by `s`.
    pub fn rescale(&self, s: f64) -> Result<Self> {
        if !(s > 0.0) || !s.is_finite() {
            return Err(Error::Domain(format!("scale {s} must be positive")));
        }
        if s == 1.0 {
            return Ok(self.clone());
        }
        Ok(FiniteMetricSpace {
            dist: self.dist.map(|d| d * s),
            fibration: self.fibration.clone(),
        })
    }
}

pub fn rescale_metric(x: &FiniteMetricSpace, s: f64) -> Result<FiniteMetricSpace> {
    x.rescale(s)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Threshold {
    /// Support is the set of nonzero entries.
    Exact,
    /// Entries at most `1e-12·‖T‖_F` are dropped.
    Relative,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SupportedOperator {
    space: Arc<FiniteMetricSpace>,
    matrix: CMat,
    threshold: f64,
    support: Vec<(usize, usize)>,
    propagation: f64,
}

impl SupportedOperator {
    pub fn new(space: Arc<FiniteMetricSpace>, matrix: CMat, mode: Threshold) -> Result<Self> {
        let n = space.points();
        if matrix.nrows() != n || matrix.ncols() != n {
            return Err(Error::Structural(format!(
                "operator is {}x{} on a space with {n} points",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        let threshold = match mode {
            Threshold::Exact => 0.0,
            Threshold::Relative => 1e-12 * fro(&matrix),
        };
        let mut support = Vec::new();
        let mut propagation: f64 = 0.0;
        for y in 0..n {
            for x in 0..n {
                if matrix[(x, y)].norm() > threshold {
                    support.push((x, y));
                    propagation = propagation.max(space.dist(x, y));
                }
            }
        }
        Ok(SupportedOperator {
            space,
            matrix,
            threshold,
            support,
            propagation,
        })
    }

    pub fn identity(space: Arc<FiniteMetricSpace>) -> Self {
        let n = space.points();
        Self::new(space, identity(n), Threshold::Exact).expect("square")
    }

    pub fn space(&self) -> &Arc<FiniteMetricSpace> {
        &self.space
    }

    pub fn matrix(&self) -> &CMat {
        &self.matrix
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    pub fn support(&self) -> &[(usize, usize)] {
        &self.support
    }

    pub fn propagation(&self) -> f64 {
        self.propagation
    }

    fn mode(&self, other: &SupportedOperator) -> Threshold {
        if self.threshold == 0.0 && other.threshold == 0.0 {
            Threshold::Exact
        } else {
            Threshold::Relative
        }
    }

    fn same_space(&self, other: &SupportedOperator) -> Result<()> {
        if Arc::ptr_eq(&self.space, &other.space) || self.space == other.space {
            Ok(())
        } else {
            Err(Error::Structural("operators act on different spaces".into()))
        }
    }

    pub fn add(&self, other: &SupportedOperator) -> Result<SupportedOperator> {
        self.same_space(other)?;
        Self::new(Arc::clone(&self.space), &self.matrix + &other.matrix, self.mode(other))
    }

    /// Same matrix on another space with the same points.
    pub fn on_space(&self, space: Arc<FiniteMetricSpace>) -> Result<SupportedOperator> {
        let mode = if self.threshold == 0.0 {
            Threshold::Exact
        } else {
            Threshold::Relative
        };
        Self::new(space, self.matrix.clone(), mode)
    }
}

pub fn propagation(t: &SupportedOperator) -> f64 {
    t.propagation()
}

pub fn compose(a: &SupportedOperator, b: &SupportedOperator) -> Result<SupportedOperator> {
    a.same_space(b)?;
    SupportedOperator::new(Arc::clone(&a.space), &a.matrix * &b.matrix, a.mode(b))
}

/// `A ⊗ B` on `X × Y` with the chosen product metric.
pub fn tensor(a: &SupportedOperator, b: &SupportedOperator, metric: ProductMetric) -> SupportedOperator {
    let space = Arc::new(FiniteMetricSpace::product(&a.space, &b.space, metric));
    SupportedOperator::new(space, kron(&a.matrix, &b.matrix), a.mode(b)).expect("kronecker shape")
}

/// Largest base distance `d(π x, π y)` over the support.
pub fn prop_along_base(t: &SupportedOperator) -> Result<f64> {
    let fib = t
        .space
        .fibration()
        .ok_or_else(|| Error::Structural("space has no fibration labeling".into()))?;
    Ok(t.support
        .iter()
        .map(|&(x, y)| fib.base.dist(fib.labels[x], fib.labels[y]))
        .fold(0.0, f64::max))
}

fn op_norm(m: &CMat) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.clone()
        .svd(false, false)
        .singular_values
        .iter()
        .cloned()
        .fold(0.0, f64::max)
}

/// Sampled path `t ↦ T_t` on `[1, T]` with a sup envelope of propagation.
#[derive(Clone, Debug)]
pub struct LocalizationPath {
    pub times: Vec<f64>,
    pub ops: Vec<SupportedOperator>,
    /// `envelope[k] = max_{j ≥ k} prop(T_j)`.
    pub envelope: Vec<f64>,
    pub norm_bound: f64,
    pub declared_limit: f64,
}

impl LocalizationPath {
    pub fn new(times: Vec<f64>, ops: Vec<SupportedOperator>, declared_limit: f64) -> Result<Self> {
        if times.is_empty() || times.len() != ops.len() {
            return Err(Error::Structural(format!(
                "{} sample times for {} operators",
                times.len(),
                ops.len()
            )));
        }
        if times[0] != 1.0 || times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Structural("sample times must increase from t = 1".into()));
        }
        let n = ops[0].space.points();
        if ops.iter().any(|o| o.space.points() != n) {
            return Err(Error::Structural("path samples act on different point sets".into()));
        }
        let mut envelope = vec![0.0; ops.len()];
        let mut running: f64 = 0.0;
        for k in (0..ops.len()).rev() {
            running = running.max(ops[k].propagation());
            envelope[k] = running;
        }
        let norm_bound = ops.iter().map(|o| op_norm(&o.matrix)).fold(0.0, f64::max);
        Ok(LocalizationPath {
            times,
            ops,
            envelope,
            norm_bound,
            declared_limit,
        })
    }

    pub fn constant(op: SupportedOperator, times: Vec<f64>) -> Result<Self> {
        let limit = op.propagation();
        let ops = vec![op; times.len()];
        Self::new(times, ops, limit)
    }

    /// Imports a signature schedule; points are basis vectors at distance
    /// `|deg x − deg y|`.
    pub fn from_schedule(schedule: &LocalizationSchedule, degrees: &[usize]) -> Result<Self> {
        let n = degrees.len();
        let space = Arc::new(FiniteMetricSpace {
            dist: DMatrix::from_fn(n, n, |i, j| degrees[i].abs_diff(degrees[j]) as f64),
            fibration: None,
        });
        let times = schedule.samples.iter().map(|s| s.t).collect();
        let ops = schedule
            .samples
            .iter()
            .map(|s| {
                let rep = s.representative.first().cloned().unwrap_or_else(|| zeros(0, 0));
                if rep.nrows() == n {
                    SupportedOperator::new(Arc::clone(&space), rep, Threshold::Relative)
                } else {
                    // odd representatives live on the even part only
                    let mut full = zeros(n, n);
                    let even: Vec<usize> = (0..n).filter(|&i| degrees[i] % 2 == 0).collect();
                    for (a, &i) in even.iter().enumerate() {
                        for (b, &j) in even.iter().enumerate() {
                            full[(i, j)] = rep[(a, b)];
                        }
                    }
                    SupportedOperator::new(Arc::clone(&space), full, Threshold::Relative)
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(times, ops, 0.0)
    }

    pub fn envelope_reaches_limit(&self, slack: f64) -> bool {
        self.envelope.last().is_some_and(|&e| e <= self.declared_limit + slack)
    }

    pub fn pointwise_product(&self, other: &LocalizationPath) -> Result<LocalizationPath> {
        if self.times != other.times {
            return Err(Error::Structural("paths are sampled at different times".into()));
        }
        let ops = self
            .ops
            .iter()
            .zip(&other.ops)
            .map(|(a, b)| compose(a, b))
            .collect::<Result<Vec<_>>>()?;
        Self::new(self.times.clone(), ops, self.declared_limit + other.declared_limit)
    }
}

#[derive(Clone, Debug)]
pub struct Evaluation {
    pub value: SupportedOperator,
    pub norm: f64,
    /// `‖T(1)‖ ≤ τ_supp`: the path lies in the kernel of evaluation.
    pub obstruction_type: bool,
}

pub fn evaluation(path: &LocalizationPath) -> Evaluation {
    let value = path.ops[0].clone();
    let norm = op_norm(&value.matrix);
    Evaluation {
        obstruction_type: norm <= value.threshold,
        norm,
        value,
    }
}

/// Same operator on the space rescaled by `1/t` at each sample, so the
/// propagation shrinks like `prop/t`.
pub fn shrinking_schedule(op: &SupportedOperator, times: &[f64]) -> Result<LocalizationPath> {
    let ops = times
        .iter()
        .map(|&t| {
            let space = Arc::new(op.space.rescale(1.0 / t)?);
            op.on_space(space)
        })
        .collect::<Result<Vec<_>>>()?;
    LocalizationPath::new(times.to_vec(), ops, 0.0)
}

#[derive(Clone, Debug, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct AlmostProjectionSample {
    pub t: f64,
    pub defect_f: f64,
    pub defect_g: f64,
    pub defect: f64,
    pub self_adjoint_residual: f64,
    pub propagation: f64,
    pub propagation_bound: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct AlmostProjectionReport {
    pub samples: Vec<AlmostProjectionSample>,
    pub max_defect: f64,
    pub identity_at_one: bool,
    pub pass: bool,
}

pub const INPUT_DEFECT: f64 = 0.1;
pub const OUTPUT_DEFECT: f64 = 0.3;

/// `‖p² − p‖` for a Hermitian `p`.
pub fn projection_defect(p: &CMat) -> f64 {
    op_norm(&(p * p - p))
}

/// `h_t = 1 − (1 − f_t) ⊗ (1 − g_t)` per sample, checked against the 3/10 bound.
pub fn almost_projection_product(
    f_path: &LocalizationPath,
    g_path: &LocalizationPath,
    r: f64,
    metric: ProductMetric,
) -> Result<(LocalizationPath, AlmostProjectionReport)> {
    if f_path.times != g_path.times {
        return Err(Error::Structural("paths are sampled at different times".into()));
    }
    let mut ops = Vec::with_capacity(f_path.ops.len());
    let mut samples = Vec::with_capacity(f_path.ops.len());
    for ((&t, f), g) in f_path.times.iter().zip(&f_path.ops).zip(&g_path.ops) {
        let check = |name: &str, p: &SupportedOperator| -> Result<f64> {
            let m = p.matrix();
            let sa = hermitian_residual(m);
            if sa > 1e-12 * fro(m).max(1.0) {
                return Err(Error::Domain(format!("sample t = {t}: {name} is not self-adjoint")));
            }
            let defect = projection_defect(m);
            if defect > INPUT_DEFECT {
                return Err(Error::Domain(format!(
                    "sample t = {t}: {name} has projection defect {defect:.4} > 1/10"
                )));
            }
            Ok(defect)
        };
        let defect_f = check("f", f)?;
        let defect_g = check("g", g)?;
        if f.propagation() >= r {
            return Err(Error::Domain(format!(
                "sample t = {t}: propagation of f is {} >= {r}",
                f.propagation()
            )));
        }
        let (nf, ng) = (f.matrix().nrows(), g.matrix().nrows());
        let a = identity(nf) - f.matrix();
        let b = identity(ng) - g.matrix();
        let h = identity(nf * ng) - kron(&a, &b);
        let space = Arc::new(FiniteMetricSpace::product(f.space(), g.space(), metric));
        let op = SupportedOperator::new(space, h, f.mode(g))?;
        let defect = projection_defect(op.matrix());
        let self_adjoint_residual = hermitian_residual(op.matrix());
        let propagation_bound = metric.combine(f.propagation(), g.propagation());
        let pass = defect <= OUTPUT_DEFECT
            && self_adjoint_residual <= 1e-12 * fro(op.matrix()).max(1.0)
            && op.propagation() <= propagation_bound;
        samples.push(AlmostProjectionSample {
            t,
            defect_f,
            defect_g,
            defect,
            self_adjoint_residual,
            propagation: op.propagation(),
            propagation_bound,
            pass,
        });
        ops.push(op);
    }
    let identity_at_one = {
        let h1 = ops[0].matrix();
        max_abs(&(h1 - identity(h1.nrows()))) <= 1e-12
    };
    let limit = metric.combine(f_path.declared_limit, g_path.declared_limit);
    let path = LocalizationPath::new(f_path.times.clone(), ops, limit)?;
    let max_defect = samples.iter().map(|s| s.defect).fold(0.0, f64::max);
    let pass = identity_at_one && samples.iter().all(|s| s.pass);
    Ok((
        path,
        AlmostProjectionReport {
            samples,
            max_defect,
            identity_at_one,
            pass,
        },
    ))
}

/// Shortest-path metric of a random connected graph with integer weights in `1..=4`.
pub fn random_metric_space(rng: &mut ChaCha8Rng, n: usize) -> FiniteMetricSpace {
    let inf = f64::INFINITY;
    let mut d = DMatrix::from_element(n, n, inf);
    for i in 0..n {
        d[(i, i)] = 0.0;
        if i > 0 {
            let j = rng.random_range(0..i);
            let w = rng.random_range(1..=4) as f64;
            d[(i, j)] = w;
            d[(j, i)] = w;
        }
    }
    for i in 0..n {
        for j in 0..i {
            if rng.random_bool(0.2) {
                let w = rng.random_range(1..=4) as f64;
                d[(i, j)] = d[(i, j)].min(w);
                d[(j, i)] = d[(i, j)];
            }
        }
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                let via = d[(i, k)] + d[(k, j)];
                if via < d[(i, j)] {
                    d[(i, j)] = via;
                }
            }
        }
    }
    FiniteMetricSpace::new(d).expect("shortest-path metric")
}

/// Random complex operator supported on pairs at distance at most `radius`,
/// with each admissible entry kept with probability 1/2.
pub fn random_operator(rng: &mut ChaCha8Rng, space: &Arc<FiniteMetricSpace>, radius: f64) -> SupportedOperator {
    let n = space.points();
    let m = CMat::from_fn(n, n, |x, y| {
        if space.dist(x, y) <= radius && rng.random_bool(0.5) {
            c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
        } else {
            ZERO
        }
    });
    SupportedOperator::new(Arc::clone(space), m, Threshold::Relative).expect("square")
}

/// Random Hermitian `1/10`-projection: a diagonal 0/1 projection plus a
/// Hermitian perturbation supported within `radius`.
pub fn random_almost_projection(
    rng: &mut ChaCha8Rng,
    space: &Arc<FiniteMetricSpace>,
    radius: f64,
    target_defect: f64,
) -> SupportedOperator {
    let n = space.points();
    let mut p = zeros(n, n);
    for i in 0..n {
        if rng.random_bool(0.5) {
            p[(i, i)] = c(1.0, 0.0);
        }
    }
    let mut e = zeros(n, n);
    for x in 0..n {
        for y in 0..=x {
            if space.dist(x, y) <= radius && rng.random_bool(0.5) {
                let v = if x == y {
                    c(rng.random_range(-1.0..1.0), 0.0)
                } else {
                    c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
                };
                e[(x, y)] = v;
                e[(y, x)] = v.conj();
            }
        }
    }
    let mut scale = 1.0;
    let mut f = &p + &e * c(scale, 0.0);
    while projection_defect(&f) > target_defect {
        scale *= 0.5;
        f = &p + &e * c(scale, 0.0);
    }
    SupportedOperator::new(Arc::clone(space), f, Threshold::Relative).expect("square")
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct PropertyTally {
    pub name: &'static str,
    pub instances: usize,
    pub failures: usize,
    /// Largest `observed − bound` (non-positive when all pass).
    pub worst_margin: f64,
}

impl PropertyTally {
    fn new(name: &'static str) -> Self {
        PropertyTally {
            name,
            instances: 0,
            failures: 0,
            worst_margin: f64::NEG_INFINITY,
        }
    }

    fn record(&mut self, observed: f64, bound: f64) {
        self.instances += 1;
        let margin = observed - bound;
        self.worst_margin = self.worst_margin.max(margin);
        if margin > 0.0 {
            self.failures += 1;
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct CoarseSuiteReport {
    pub seed: u64,
    pub generator: &'static str,
    pub metric: ProductMetric,
    pub properties: Vec<PropertyTally>,
    pub pass: bool,
}

/// Brute-force property suite over `instances` seeded random instances.
pub fn property_suite(seed: u64, instances: usize, metric: ProductMetric) -> CoarseSuiteReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sum = PropertyTally::new("propagation(A+B) <= max");
    let mut comp = PropertyTally::new("propagation(AB) <= sum");
    let mut tens = PropertyTally::new(match metric {
        ProductMetric::L2 => "propagation(A⊗B) <= l2 bound",
        ProductMetric::Max => "propagation(A⊗B) <= max bound",
    });
    let mut base = PropertyTally::new("prop_along_base <= propagation");
    let mut almost = PropertyTally::new("almost projection defect <= 3/10");
    for _ in 0..instances {
        let nx = rng.random_range(3..=7);
        let ny = rng.random_range(2..=5);
        let x = Arc::new(random_metric_space(&mut rng, nx));
        let y = Arc::new(random_metric_space(&mut rng, ny));
        let ra = rng.random_range(0..=4) as f64;
        let rb = rng.random_range(0..=4) as f64;
        let a = random_operator(&mut rng, &x, ra);
        let b = random_operator(&mut rng, &x, rb);
        let s = a.add(&b).expect("same space");
        sum.record(s.propagation(), a.propagation().max(b.propagation()));
        let ab = compose(&a, &b).expect("same space");
        comp.record(ab.propagation(), a.propagation() + b.propagation());
        let by = random_operator(&mut rng, &y, rb);
        let t = tensor(&a, &by, metric);
        tens.record(t.propagation(), metric.combine(a.propagation(), by.propagation()));
        base.record(prop_along_base(&t).expect("product is fibered"), t.propagation());

        let times = vec![1.0, 2.0, 3.0];
        let r = ra + 1.0;
        let fs = times
            .iter()
            .map(|_| random_almost_projection(&mut rng, &x, ra, INPUT_DEFECT))
            .collect();
        let mut gs = vec![SupportedOperator::identity(Arc::clone(&y))];
        gs.extend((1..times.len()).map(|_| random_almost_projection(&mut rng, &y, rb, INPUT_DEFECT)));
        let f_path = LocalizationPath::new(times.clone(), fs, ra).expect("valid path");
        let g_path = LocalizationPath::new(times, gs, rb).expect("valid path");
        match almost_projection_product(&f_path, &g_path, r, metric) {
            Ok((_, rep)) => {
                for smp in &rep.samples {
                    almost.record(smp.defect, OUTPUT_DEFECT);
                }
                if !rep.pass {
                    almost.failures += 1;
                }
            }
            Err(_) => {
                almost.instances += 1;
                almost.failures += 1;
            }
        }
    }
    let properties = vec![sum, comp, tens, base, almost];
    let pass = properties.iter().all(|p| p.failures == 0);
    CoarseSuiteReport {
        seed,
        generator: GENERATOR,
        metric,
        properties,
        pass,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::cp2_model;
    use crate::signature::localized_signature_path;
    use crate::tolerance::Tolerances;
    use crate::linalg::re;

    fn path_space(n: usize) -> Arc<FiniteMetricSpace> {
        Arc::new(FiniteMetricSpace::path(n))
    }

    fn band(n: usize, b: usize) -> CMat {
        CMat::from_fn(n, n, |i, j| if i.abs_diff(j) <= b { re(1.0) } else { ZERO })
    }

    #[test]
    fn metric_validation() {
        assert!(FiniteMetricSpace::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]).is_ok());
        assert!(FiniteMetricSpace::from_rows(&[vec![0.0, 1.0], vec![2.0, 0.0]]).is_err());
        assert!(FiniteMetricSpace::from_rows(&[
            vec![0.0, 1.0, 5.0],
            vec![1.0, 0.0, 1.0],
            vec![5.0, 1.0, 0.0]
        ])
        .is_err());
    }

    #[test]
    fn propagation_examples() {
        let x = path_space(6);
        assert_eq!(SupportedOperator::identity(Arc::clone(&x)).propagation(), 0.0);
        let mut adj = band(6, 1);
        for i in 0..6 {
            adj[(i, i)] = ZERO;
        }
        let a = SupportedOperator::new(Arc::clone(&x), adj, Threshold::Exact).unwrap();
        assert_eq!(a.propagation(), 1.0);
        for b in 0..5 {
            let op = SupportedOperator::new(Arc::clone(&x), band(6, b), Threshold::Exact).unwrap();
            assert_eq!(op.propagation(), b as f64);
        }
        let empty = SupportedOperator::new(Arc::clone(&x), zeros(6, 6), Threshold::Exact).unwrap();
        assert_eq!(empty.propagation(), 0.0);
    }

    #[test]
    fn compose_and_tensor() {
        let x = path_space(5);
        let a = SupportedOperator::new(Arc::clone(&x), band(5, 1), Threshold::Exact).unwrap();
        let id = SupportedOperator::identity(Arc::clone(&x));
        let ai = compose(&a, &id).unwrap();
        assert_eq!(ai.matrix(), a.matrix());
        assert_eq!(ai.propagation(), 1.0);
        assert!(compose(&a, &a).unwrap().propagation() <= 2.0);
        let other = SupportedOperator::identity(path_space(4));
        assert!(compose(&a, &other).is_err());

        assert_eq!(tensor(&id, &id, ProductMetric::L2).propagation(), 0.0);
        assert_eq!(tensor(&a, &id, ProductMetric::L2).propagation(), 1.0);
        let t = tensor(&a, &a, ProductMetric::L2);
        assert_eq!(t.propagation(), 2f64.sqrt());
        assert_eq!(tensor(&a, &a, ProductMetric::Max).propagation(), 1.0);
    }

    #[test]
    fn along_base() {
        let x = path_space(4);
        let y = FiniteMetricSpace::path(3);
        let e = Arc::new(FiniteMetricSpace::product(&x, &y, ProductMetric::L2));
        // fiberwise: support inside {x} × Y
        let mut m = zeros(12, 12);
        m[(0, 2)] = re(1.0);
        m[(4, 5)] = re(1.0);
        let op = SupportedOperator::new(Arc::clone(&e), m, Threshold::Exact).unwrap();
        assert_eq!(prop_along_base(&op).unwrap(), 0.0);
        assert!(op.propagation() > 0.0);
        let mut m = zeros(12, 12);
        m[(1, 7)] = re(1.0);
        let op = SupportedOperator::new(Arc::clone(&e), m, Threshold::Exact).unwrap();
        assert_eq!(prop_along_base(&op).unwrap(), 2.0);
        let plain = SupportedOperator::identity(x);
        assert!(prop_along_base(&plain).is_err());
    }

    #[test]
    fn evaluation_examples() {
        let x = path_space(3);
        let a = SupportedOperator::new(Arc::clone(&x), band(3, 1), Threshold::Exact).unwrap();
        let times = vec![1.0, 2.0, 4.0];
        let p = LocalizationPath::constant(a.clone(), times.clone()).unwrap();
        let ev = evaluation(&p);
        assert_eq!(ev.value, a);
        assert!(!ev.obstruction_type);

        let ops = times
            .iter()
            .map(|&t| {
                SupportedOperator::new(Arc::clone(&x), band(3, 1) * re(1.0 - 1.0 / t), Threshold::Exact).unwrap()
            })
            .collect();
        let q = LocalizationPath::new(times.clone(), ops, 1.0).unwrap();
        let ev = evaluation(&q);
        assert!(ev.obstruction_type);
        assert_eq!(ev.norm, 0.0);

        let prod = p.pointwise_product(&q).unwrap();
        let lhs = evaluation(&prod).value;
        let rhs = compose(&evaluation(&p).value, &evaluation(&q).value).unwrap();
        assert_eq!(lhs, rhs);
    }

    #[test]
    fn schedule_import_is_not_obstruction() {
        let c = cp2_model();
        let sched = localized_signature_path(&c, 4.0, 5, &Tolerances::default()).unwrap();
        let path = LocalizationPath::from_schedule(&sched, &c.space.degree_of()).unwrap();
        assert!(!evaluation(&path).obstruction_type);
        let s1 = crate::fixtures::s1_model();
        let sched = localized_signature_path(&s1, 4.0, 5, &Tolerances::default()).unwrap();
        let path = LocalizationPath::from_schedule(&sched, &s1.space.degree_of()).unwrap();
        assert!(!evaluation(&path).obstruction_type);
    }

    #[test]
    fn envelope_is_suffix_max() {
        let x = path_space(5);
        let ops = [2, 0, 1, 0]
            .iter()
            .map(|&b| SupportedOperator::new(Arc::clone(&x), band(5, b), Threshold::Exact).unwrap())
            .collect();
        let p = LocalizationPath::new(vec![1.0, 2.0, 3.0, 4.0], ops, 0.0).unwrap();
        assert_eq!(p.envelope, vec![2.0, 1.0, 1.0, 0.0]);
        assert!(p.envelope_reaches_limit(0.0));
    }

    #[test]
    fn rescaling() {
        let x = FiniteMetricSpace::path(5);
        assert_eq!(rescale_metric(&x, 1.0).unwrap(), x);
        assert!(rescale_metric(&x, 0.0).is_err());
        assert!(rescale_metric(&x, -2.0).is_err());
        let x3 = Arc::new(rescale_metric(&x, 3.0).unwrap());
        let mut adj = band(5, 1);
        for i in 0..5 {
            adj[(i, i)] = ZERO;
        }
        let op = SupportedOperator::new(x3, adj.clone(), Threshold::Exact).unwrap();
        assert_eq!(op.propagation(), 3.0);

        let base = SupportedOperator::new(Arc::new(x), adj, Threshold::Exact).unwrap();
        let times: Vec<f64> = (1..=8).map(f64::from).collect();
        let path = shrinking_schedule(&base, &times).unwrap();
        for (k, &t) in times.iter().enumerate() {
            assert!((path.ops[k].propagation() - 1.0 / t).abs() < 1e-15);
        }
        assert!((path.envelope[7] - 0.125).abs() < 1e-15);
        assert!(path.envelope.windows(2).all(|w| w[0] >= w[1]));
    }

    fn diag_projection(space: &Arc<FiniteMetricSpace>, bits: &[bool]) -> SupportedOperator {
        let n = bits.len();
        let m = CMat::from_fn(n, n, |i, j| if i == j && bits[i] { re(1.0) } else { ZERO });
        SupportedOperator::new(Arc::clone(space), m, Threshold::Exact).unwrap()
    }

    #[test]
    fn almost_projection_exact_inputs() {
        let x = path_space(3);
        let y = path_space(2);
        let times = vec![1.0, 2.0];
        let f = LocalizationPath::new(
            times.clone(),
            vec![diag_projection(&x, &[true, false, true]), diag_projection(&x, &[false, true, true])],
            0.0,
        )
        .unwrap();
        let g = LocalizationPath::new(
            times,
            vec![SupportedOperator::identity(Arc::clone(&y)), diag_projection(&y, &[true, false])],
            0.0,
        )
        .unwrap();
        let (path, rep) = almost_projection_product(&f, &g, 1.0, ProductMetric::L2).unwrap();
        assert!(rep.pass && rep.identity_at_one);
        assert_eq!(rep.max_defect, 0.0);
        assert_eq!(evaluation(&path).value.matrix(), &identity(6));
    }

    #[test]
    fn almost_projection_saturated_input() {
        // f = diag(λ) with λ² − λ = −1/10 exactly at one entry
        let lam = (1.0 - (1.0f64 - 0.4).sqrt()) / 2.0;
        let x = path_space(2);
        let y = path_space(2);
        let f_op = SupportedOperator::new(
            Arc::clone(&x),
            CMat::from_diagonal(&nalgebra::DVector::from_vec(vec![re(lam), re(1.0)])),
            Threshold::Exact,
        )
        .unwrap();
        assert!((projection_defect(f_op.matrix()) - 0.1).abs() < 1e-12);
        let times = vec![1.0, 2.0];
        let f = LocalizationPath::constant(f_op, times.clone()).unwrap();
        let g = LocalizationPath::new(
            times,
            vec![SupportedOperator::identity(Arc::clone(&y)), diag_projection(&y, &[false, true])],
            0.0,
        )
        .unwrap();
        let (_, rep) = almost_projection_product(&f, &g, 1.0, ProductMetric::L2).unwrap();
        assert!(rep.pass);
        assert!(rep.max_defect <= OUTPUT_DEFECT);
        assert!(rep.max_defect > 0.0);
    }

    #[test]
    fn almost_projection_rejects_wide_f() {
        let x = path_space(3);
        let mut m = zeros(3, 3);
        m[(0, 0)] = re(0.5);
        m[(2, 2)] = re(0.5);
        m[(0, 2)] = re(0.5);
        m[(2, 0)] = re(0.5);
        let f_op = SupportedOperator::new(Arc::clone(&x), m, Threshold::Exact).unwrap();
        assert_eq!(projection_defect(f_op.matrix()), 0.0);
        let times = vec![1.0];
        let f = LocalizationPath::constant(f_op, times.clone()).unwrap();
        let g = LocalizationPath::constant(SupportedOperator::identity(path_space(2)), times).unwrap();
        let err = almost_projection_product(&f, &g, 2.0, ProductMetric::L2).unwrap_err();
        assert!(err.to_string().contains("t = 1"));
    }

    #[test]
    fn suite_passes_and_is_reproducible() {
        let a = property_suite(7, 100, ProductMetric::L2);
        assert!(a.pass, "{a:?}");
        assert!(a.properties.iter().all(|p| p.instances >= 100));
        assert_eq!(a, property_suite(7, 100, ProductMetric::L2));
        assert!(property_suite(7, 30, ProductMetric::Max).pass);
    }
}

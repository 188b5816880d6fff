//! JSON documents for complexes, triangulations, equivalences, fibered
//! complexes and metric spaces.
//!
//! Complex entries are written as `[re, im]`; a bare number is read as a
//! real entry. Matrices are row-major.

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::coarse::{FiniteMetricSpace, SupportedOperator, Threshold};
use crate::error::{Error, Result};
use crate::family::FiberedComplex;
use crate::hpc::{GradedSpace, HPComplex, Tier};
use crate::linalg::{c, zeros, CMat, C64};
use crate::rho::HomotopyEquivalence;
use crate::simplicial::{load_simplicial, TriangulationDoc};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Entry {
    Pair([f64; 2]),
    Real(f64),
}

impl From<Entry> for C64 {
    fn from(e: Entry) -> C64 {
        match e {
            Entry::Pair([a, b]) => c(a, b),
            Entry::Real(a) => c(a, 0.0),
        }
    }
}

pub type MatrixDoc = Vec<Vec<Entry>>;

pub fn encode_matrix(m: &CMat) -> MatrixDoc {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| Entry::Pair([m[(i, j)].re, m[(i, j)].im])).collect())
        .collect()
}

pub fn decode_matrix(doc: &MatrixDoc, rows: usize, cols: usize, what: &str) -> Result<CMat> {
    if doc.len() != rows || doc.iter().any(|r| r.len() != cols) {
        return Err(Error::Structural(format!("{what}: expected a {rows}x{cols} matrix")));
    }
    let mut m = zeros(rows, cols);
    for (i, row) in doc.iter().enumerate() {
        for (j, &e) in row.iter().enumerate() {
            m[(i, j)] = e.into();
        }
    }
    Ok(m)
}

fn decode_square(doc: &MatrixDoc, what: &str) -> Result<CMat> {
    decode_matrix(doc, doc.len(), doc.len(), what)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComplexDoc {
    pub n: usize,
    pub dims: Vec<usize>,
    pub d: Vec<MatrixDoc>,
    #[serde(rename = "S")]
    pub s: MatrixDoc,
    #[serde(rename = "G", default, skip_serializing_if = "Option::is_none")]
    pub g: Option<Vec<MatrixDoc>>,
    #[serde(default = "weak")]
    pub tier: Tier,
}

fn weak() -> Tier {
    Tier::Weak
}

impl ComplexDoc {
    pub fn from_complex(c: &HPComplex) -> Self {
        ComplexDoc {
            n: c.n(),
            dims: c.dims().to_vec(),
            d: c.d.iter().map(encode_matrix).collect(),
            s: encode_matrix(&c.s),
            g: if c.space.has_identity_metric() {
                None
            } else {
                Some(c.space.g.iter().map(encode_matrix).collect())
            },
            tier: c.tier,
        }
    }

    pub fn to_complex(&self) -> Result<HPComplex> {
        if self.dims.len() != self.n + 1 {
            return Err(Error::Structural(format!(
                "n = {} needs {} dims, got {}",
                self.n,
                self.n + 1,
                self.dims.len()
            )));
        }
        if self.d.len() != self.n {
            return Err(Error::Structural(format!(
                "n = {} needs {} differentials, got {}",
                self.n,
                self.n,
                self.d.len()
            )));
        }
        let g = match &self.g {
            None => None,
            Some(gs) => {
                if gs.len() != self.n + 1 {
                    return Err(Error::Structural(format!("expected {} Gram matrices", self.n + 1)));
                }
                Some(
                    gs.iter()
                        .zip(&self.dims)
                        .enumerate()
                        .map(|(p, (m, &k))| decode_matrix(m, k, k, &format!("G[{p}]")))
                        .collect::<Result<Vec<_>>>()?,
                )
            }
        };
        let space = GradedSpace::new(self.dims.clone(), g)?;
        let d = self
            .d
            .iter()
            .enumerate()
            .map(|(p, m)| decode_matrix(m, self.dims[p + 1], self.dims[p], &format!("d[{p}]")))
            .collect::<Result<Vec<_>>>()?;
        let total = space.total_dim();
        let s = decode_matrix(&self.s, total, total, "S")?;
        HPComplex::new(space, d, s, self.tier)
    }
}

pub fn parse_complex(json: &str) -> Result<HPComplex> {
    serde_json::from_str::<ComplexDoc>(json)?.to_complex()
}

pub fn complex_to_json(c: &HPComplex) -> String {
    serde_json::to_string_pretty(&ComplexDoc::from_complex(c)).expect("serializable")
}

pub fn parse_triangulation(json: &str) -> Result<TriangulationDoc> {
    Ok(serde_json::from_str(json)?)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HomotopyDoc {
    pub source: ComplexDoc,
    pub target: ComplexDoc,
    pub f: MatrixDoc,
    pub g: MatrixDoc,
    pub h: MatrixDoc,
    pub h_prime: MatrixDoc,
}

impl HomotopyDoc {
    pub fn from_equivalence(he: &HomotopyEquivalence) -> Self {
        HomotopyDoc {
            source: ComplexDoc::from_complex(&he.source),
            target: ComplexDoc::from_complex(&he.target),
            f: encode_matrix(&he.f),
            g: encode_matrix(&he.g),
            h: encode_matrix(&he.h),
            h_prime: encode_matrix(&he.h_prime),
        }
    }

    pub fn to_equivalence(&self) -> Result<HomotopyEquivalence> {
        let source = self.source.to_complex()?;
        let target = self.target.to_complex()?;
        let (ns, nt) = (source.total_dim(), target.total_dim());
        Ok(HomotopyEquivalence {
            f: decode_matrix(&self.f, nt, ns, "f")?,
            g: decode_matrix(&self.g, ns, nt, "g")?,
            h: decode_matrix(&self.h, nt, nt, "h")?,
            h_prime: decode_matrix(&self.h_prime, ns, ns, "h_prime")?,
            source,
            target,
        })
    }
}

pub fn parse_homotopy(json: &str) -> Result<HomotopyEquivalence> {
    serde_json::from_str::<HomotopyDoc>(json)?.to_equivalence()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FiberedDoc {
    pub base: TriangulationDoc,
    pub fiber: ComplexDoc,
    /// Keys name an edge, e.g. `"0,2"`.
    #[serde(default)]
    pub transitions: BTreeMap<String, MatrixDoc>,
}

fn parse_edge(key: &str) -> Result<(usize, usize)> {
    let nums: Vec<usize> = key
        .split(|ch: char| !ch.is_ascii_digit())
        .filter(|s| !s.is_empty())
        .map(|s| s.parse().expect("digits"))
        .collect();
    match nums[..] {
        [i, j] if i != j => Ok((i, j)),
        _ => Err(Error::Structural(format!("transition key {key:?} does not name an edge"))),
    }
}

impl FiberedDoc {
    pub fn from_fibered(fc: &FiberedComplex) -> Self {
        FiberedDoc {
            base: fc.base.to_doc(),
            fiber: ComplexDoc::from_complex(&fc.fiber),
            transitions: fc
                .transitions
                .iter()
                .map(|(&(i, j), m)| (format!("{i},{j}"), encode_matrix(m)))
                .collect(),
        }
    }

    pub fn to_fibered(&self) -> Result<FiberedComplex> {
        let base = load_simplicial(&self.base)?;
        let fiber = self.fiber.to_complex()?;
        let k = fiber.total_dim();
        let mut transitions = BTreeMap::new();
        for (key, m) in &self.transitions {
            let (i, j) = parse_edge(key)?;
            let m = decode_matrix(m, k, k, &format!("transition {key}"))?;
            let (edge, m) = if i < j {
                ((i, j), m)
            } else {
                let inv = crate::linalg::inverse(&m)
                    .ok_or_else(|| Error::Structural(format!("transition {key} is not invertible")))?;
                ((j, i), inv)
            };
            if transitions.insert(edge, m).is_some() {
                return Err(Error::Structural(format!("edge {edge:?} has two transitions")));
            }
        }
        Ok(FiberedComplex {
            base,
            fiber,
            transitions,
        })
    }
}

pub fn parse_fibered(json: &str) -> Result<FiberedComplex> {
    serde_json::from_str::<FiberedDoc>(json)?.to_fibered()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricDoc {
    pub points: usize,
    pub dist: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pi: Option<Vec<usize>>,
    /// Base space for `pi`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub base: Option<Box<MetricDoc>>,
}

impl MetricDoc {
    pub fn to_space(&self) -> Result<FiniteMetricSpace> {
        if self.dist.len() != self.points {
            return Err(Error::Structural(format!(
                "{} points but {} distance rows",
                self.points,
                self.dist.len()
            )));
        }
        let x = FiniteMetricSpace::from_rows(&self.dist)?;
        match (&self.pi, &self.base) {
            (None, None) => Ok(x),
            (Some(pi), Some(base)) => x.with_fibration(pi.clone(), Arc::new(base.to_space()?)),
            _ => Err(Error::Structural("\"pi\" and \"base\" must be given together".into())),
        }
    }

    pub fn from_space(x: &FiniteMetricSpace) -> Self {
        let n = x.points();
        MetricDoc {
            points: n,
            dist: (0..n).map(|i| (0..n).map(|j| x.dist(i, j)).collect()).collect(),
            pi: x.fibration().map(|f| f.labels.clone()),
            base: x.fibration().map(|f| Box::new(MetricDoc::from_space(&f.base))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OperatorDoc {
    pub space: MetricDoc,
    pub matrix: MatrixDoc,
    /// Use the exact (zero) support threshold.
    #[serde(default)]
    pub exact: bool,
}

impl OperatorDoc {
    pub fn to_operator(&self) -> Result<SupportedOperator> {
        let space = Arc::new(self.space.to_space()?);
        let n = space.points();
        let m = decode_matrix(&self.matrix, n, n, "matrix")?;
        let mode = if self.exact { Threshold::Exact } else { Threshold::Relative };
        SupportedOperator::new(space, m, mode)
    }
}

pub fn parse_operator(json: &str) -> Result<SupportedOperator> {
    serde_json::from_str::<OperatorDoc>(json)?.to_operator()
}

/// Reads a square matrix document without a shape hint.
pub fn parse_square_matrix(json: &str) -> Result<CMat> {
    decode_square(&serde_json::from_str(json)?, "matrix")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn complex_round_trip() {
        for (_, c) in fixtures::model_grid() {
            assert_eq!(parse_complex(&complex_to_json(&c)).unwrap(), c);
        }
        let probe = fixtures::probe(3);
        assert_eq!(parse_complex(&complex_to_json(&probe)).unwrap(), probe);
        let scaled = crate::hpc::rescale_inner_products(&fixtures::probe(2), 4.0).unwrap();
        assert_eq!(parse_complex(&complex_to_json(&scaled)).unwrap(), scaled);
    }

    #[test]
    fn real_entries_are_accepted() {
        let json = r#"{"n": 1, "dims": [1, 1], "d": [[[0]]], "S": [[0, 1], [1, 0]], "tier": "strict"}"#;
        assert_eq!(parse_complex(json).unwrap(), fixtures::s1_model());
    }

    #[test]
    fn malformed_documents() {
        assert!(matches!(parse_complex("{"), Err(Error::Json(_))));
        let json = r#"{"n": 1, "dims": [1, 1], "d": [], "S": [[0, 1], [1, 0]]}"#;
        assert!(matches!(parse_complex(json), Err(Error::Structural(_))));
        let json = r#"{"n": 1, "dims": [1, 1], "d": [[[0]]], "S": [[1, 0], [0, 1]]}"#;
        assert!(parse_complex(json).is_err());
    }

    #[test]
    fn fibered_round_trip() {
        let fc = fixtures::t2_rotation_bundle();
        let json = serde_json::to_string(&FiberedDoc::from_fibered(&fc)).unwrap();
        assert_eq!(parse_fibered(&json).unwrap(), fc);
        assert_eq!(parse_edge("(0, 2)").unwrap(), (0, 2));
        assert!(parse_edge("3").is_err());
    }

    #[test]
    fn homotopy_round_trip() {
        let he = HomotopyEquivalence::identity(&fixtures::t2_model());
        let json = serde_json::to_string(&HomotopyDoc::from_equivalence(&he)).unwrap();
        let back = parse_homotopy(&json).unwrap();
        assert_eq!(back.f, he.f);
        assert_eq!(back.source, he.source);
    }

    #[test]
    fn metric_documents() {
        let json = r#"{"points": 2, "dist": [[0, 1], [1, 0]], "pi": [0, 0], "base": {"points": 1, "dist": [[0]]}}"#;
        let x: MetricDoc = serde_json::from_str(json).unwrap();
        let space = x.to_space().unwrap();
        assert!(space.fibration().is_some());
        assert_eq!(MetricDoc::from_space(&space), x);
        let bad = r#"{"points": 2, "dist": [[0, 1], [1, 0]], "pi": [0, 0]}"#;
        assert!(serde_json::from_str::<MetricDoc>(bad).unwrap().to_space().is_err());
    }
}

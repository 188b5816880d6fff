//! The fixture corpus shipped under `fixtures/`, generated from the in-code
//! fixtures so the two cannot drift apart.

use serde::Serialize;

use hpsig::coarse::FiniteMetricSpace;
use hpsig::family::FiberedComplex;
use hpsig::fixtures;
use hpsig::io::{encode_matrix, ComplexDoc, FiberedDoc, HomotopyDoc, MetricDoc, OperatorDoc};
use hpsig::linalg::identity;
use hpsig::rho::{orientation_mismatch, HomotopyEquivalence};
use hpsig::simplicial::{cap_duality, harmonic_reduction};
use hpsig::Tolerances;

fn pretty(v: &impl Serialize) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serializable");
    s.push('\n');
    s
}

fn he(e: &HomotopyEquivalence) -> String {
    pretty(&HomotopyDoc::from_equivalence(e))
}

/// `(file name, contents)` for every fixture file.
pub fn fixture_corpus() -> Vec<(&'static str, String)> {
    let tol = Tolerances::default();
    let complex = |c| pretty(&ComplexDoc::from_complex(&c));
    let s2_tri = cap_duality(&fixtures::tri_s2(), &tol).expect("boundary of the 3-simplex").complex;
    let harmonic_s2 = harmonic_reduction(&s2_tri, &tol).expect("harmonic reduction").equivalence;
    let path5 = FiniteMetricSpace::path(5);
    vec![
        ("point.json", complex(fixtures::point())),
        ("s1.json", complex(fixtures::s1_model())),
        ("s2.json", complex(fixtures::s2_model())),
        ("t2.json", complex(fixtures::t2_model())),
        ("cp2.json", complex(fixtures::cp2_model())),
        ("probe3.json", complex(fixtures::probe(3))),
        ("tetra_boundary.json", pretty(&fixtures::tri_s2().to_doc())),
        ("circle3.json", pretty(&fixtures::tri_s1().to_doc())),
        ("s3_boundary.json", pretty(&fixtures::tri_s3().to_doc())),
        ("torus7.json", pretty(&fixtures::tri_torus7().to_doc())),
        ("cp2_9.json", pretty(&fixtures::tri_cp2_9().to_doc())),
        ("rp2_6.json", pretty(&fixtures::rp2_6_doc())),
        ("he_identity_s2.json", he(&HomotopyEquivalence::identity(&fixtures::s2_model()))),
        ("he_identity_s1.json", he(&HomotopyEquivalence::identity(&fixtures::s1_model()))),
        ("he_harmonic_s2.json", he(&harmonic_s2)),
        ("he_mismatch_s2.json", he(&orientation_mismatch(&fixtures::s2_model()))),
        (
            "bundle_s2_cp2.json",
            pretty(&FiberedDoc::from_fibered(&FiberedComplex::trivial(
                fixtures::tri_s2(),
                fixtures::cp2_model(),
            ))),
        ),
        (
            "torus_cp2.json",
            pretty(&FiberedDoc::from_fibered(&FiberedComplex::mapping_torus(
                fixtures::cp2_model(),
                identity(3),
            ))),
        ),
        ("bundle_t2_swap.json", pretty(&FiberedDoc::from_fibered(&fixtures::t2_swap_bundle()))),
        (
            "bundle_t2_rotation.json",
            pretty(&FiberedDoc::from_fibered(&fixtures::t2_rotation_bundle())),
        ),
        (
            "op_identity.json",
            pretty(&OperatorDoc {
                space: MetricDoc::from_space(&path5),
                matrix: encode_matrix(&identity(5)),
                exact: true,
            }),
        ),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classify;

    #[test]
    fn every_file_parses_and_is_classified() {
        let corpus = fixture_corpus();
        let mut names: Vec<_> = corpus.iter().map(|(n, _)| *n).collect();
        names.dedup();
        assert_eq!(names.len(), corpus.len());
        for (name, body) in &corpus {
            let v: serde_json::Value = serde_json::from_str(body).unwrap();
            assert_ne!(classify(&v), "unknown", "{name}");
            assert!(body.ends_with('\n'));
        }
    }

    #[test]
    fn corpus_is_reproducible() {
        assert_eq!(fixture_corpus(), fixture_corpus());
    }
}

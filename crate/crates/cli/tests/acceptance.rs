//! Acceptance suite: one pass/fail line per criterion, nonzero exit on failure.

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use hpsig::coarse::{property_suite, ProductMetric};
use hpsig::family::{
    betti_numbers, chs_check, monodromy_homology_action, total_complex, twisted_cochain_complex, wang_betti,
    ChsOutcome, FiberedComplex,
};
use hpsig::fixtures;
use hpsig::hpc::{direct_sum, rescale_inner_products, reverse_orientation};
use hpsig::products::{graded_tensor, product_signature_check, witness_even_odd, witness_odd_even};
use hpsig::rho::{orientation_mismatch, rho_certificate_even, rho_certificate_odd, rho_path, HomotopyEquivalence, RhoPath};
use hpsig::signature::{signature, signature_even};
use hpsig::simplicial::{cap_duality, harmonic_reduction, intersection_form_oracle, SimplicialManifold};
use hpsig::{HPComplex, Tolerances};
use hpsig_cli::{cmd_check, cmd_chs, cmd_coarse, cmd_product, cmd_rho, cmd_sgn, Options};

const SEED: u64 = 7;
const RHO_SAMPLES: usize = 601;
const WITNESS_SAMPLES: usize = 11;

type Outcome = Result<(), String>;

fn tol() -> Tolerances {
    Tolerances::default()
}

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Outcome {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

fn oracle_agreement() -> Outcome {
    let cases: [(&str, SimplicialManifold, i64); 3] = [
        ("tetra boundary", fixtures::tri_s2(), 0),
        ("7-vertex torus", fixtures::tri_torus7(), 0),
        ("9-vertex cp2", fixtures::tri_cp2_9(), 1),
    ];
    for (name, sm, expected) in cases {
        let cx = cap_duality(&sm, &tol()).map_err(err)?.complex;
        let sgn = signature_even(&cx, &tol()).map_err(err)?;
        let oracle = intersection_form_oracle(&sm).map_err(err)?.signature;
        ensure(sgn == oracle && oracle == expected, || {
            format!("{name}: signature {sgn}, oracle {oracle}, expected {expected}")
        })?;
    }
    Ok(())
}

fn product_formula() -> Outcome {
    let grid = fixtures::model_grid();
    for (na, a) in &grid {
        for (nb, b) in &grid {
            let check = product_signature_check(a, b, &tol()).map_err(err)?;
            ensure(check.pass, || {
                format!(
                    "{na} x {nb}: {} * {} != {}",
                    check.signature_a, check.signature_b, check.signature_product
                )
            })?;
        }
    }
    let cp2 = fixtures::cp2_model();
    let sq = signature(&graded_tensor(&cp2, &cp2).map_err(err)?, &tol()).map_err(err)?;
    ensure(sq == 1, || format!("cp2 x cp2 signature {sq}"))
}

fn witnesses() -> Outcome {
    let even = [fixtures::point(), fixtures::s2_model(), fixtures::t2_model(), fixtures::cp2_model()];
    let odd = [fixtures::s1_model(), fixtures::probe(3)];
    for a in &even {
        for b in &odd {
            let r = witness_even_odd(a, b, WITNESS_SAMPLES, &tol()).map_err(err)?;
            ensure(r.pass, || format!("even-odd ({}, {}): {:?}", a.n(), b.n(), r.failures()))?;
        }
    }
    for a in &odd {
        for b in &even {
            let r = witness_odd_even(a, b, &tol()).map_err(err)?;
            let rank = r.rank_identity.as_ref().ok_or("missing rank identity")?;
            ensure(r.pass && rank.lhs == rank.rhs, || {
                format!("odd-even ({}, {}): {:?} rank {} vs {}", a.n(), b.n(), r.failures(), rank.lhs, rank.rhs)
            })?;
        }
    }
    Ok(())
}

fn certify(name: &str, he: &HomotopyEquivalence) -> Outcome {
    let check_path = |path: &RhoPath| {
        ensure(path.pass && path.min_singular > 0.0, || {
            format!("{name}: min singular {:.3e} at t = {}", path.min_singular, path.t_star)
        })?;
        ensure(path.junction_residual <= 1e-10, || {
            format!("{name}: junction residual {:.3e}", path.junction_residual)
        })
    };
    if he.source.n() % 2 == 1 {
        let cert = rho_certificate_odd(he, RHO_SAMPLES, &tol()).map_err(err)?;
        check_path(&cert.path)?;
        ensure(cert.pass, || format!("{name}: odd certificate fails"))
    } else {
        let theta = rho_certificate_even(he, RHO_SAMPLES, &tol()).map_err(err)?;
        check_path(&theta.path)?;
        ensure(theta.ranks_constant && theta.pass, || {
            format!("{name}: theta ranks jump at {:?}", theta.rank_jump_at)
        })
    }
}

fn rho_certificates() -> Outcome {
    let models: [(&str, HPComplex); 4] = [
        ("s1", fixtures::s1_model()),
        ("s2", fixtures::s2_model()),
        ("cp2", fixtures::cp2_model()),
        ("t2", fixtures::t2_model()),
    ];
    for (name, m) in &models {
        certify(&format!("identity {name}"), &HomotopyEquivalence::identity(m))?;
    }
    // cochain complexes with cap duality; CP² is its harmonic model padded
    // with acyclic pairs, since the 9-vertex triangulation exceeds the budget
    let mut padded = fixtures::cp2_model();
    for p in 0..2 {
        padded = direct_sum(&padded, &fixtures::hyperbolic(4, p)).map_err(err)?;
    }
    let complexes = [
        ("s1", cap_duality(&fixtures::tri_s1(), &tol()).map_err(err)?.complex),
        ("s2", cap_duality(&fixtures::tri_s2(), &tol()).map_err(err)?.complex),
        ("cp2", padded),
        ("t2", cap_duality(&fixtures::tri_torus7(), &tol()).map_err(err)?.complex),
    ];
    for (name, cx) in &complexes {
        let he = harmonic_reduction(cx, &tol()).map_err(err)?.equivalence;
        certify(&format!("harmonic {name}"), &he)?;
    }
    let mismatch = rho_path(&orientation_mismatch(&fixtures::s2_model()), RHO_SAMPLES, &tol()).map_err(err)?;
    ensure(!mismatch.pass && mismatch.t_star.is_finite(), || {
        "orientation mismatch was certified".into()
    })
}

fn family() -> Outcome {
    let base = fixtures::tri_s2();
    let b = cap_duality(&base, &tol()).map_err(err)?.complex;
    for (name, fiber) in fixtures::model_grid() {
        let fc = FiberedComplex::trivial(base.clone(), fiber.clone());
        let total = total_complex(&fc, &tol()).map_err(err)?;
        ensure(total == graded_tensor(&b, &fiber).map_err(err)?, || {
            format!("untwisted total over s2 with fiber {name} differs from the graded tensor")
        })?;
        let chs = chs_check(&fc, &tol()).map_err(err)?;
        ensure(chs.outcome == ChsOutcome::Pass, || format!("chs on s2 x {name}: {:?}", chs.outcome))?;
    }
    for (name, fiber) in fixtures::model_grid() {
        let fc = FiberedComplex::trivial(fixtures::tri_s1(), fiber);
        let chs = chs_check(&fc, &tol()).map_err(err)?;
        ensure(chs.outcome == ChsOutcome::Pass, || format!("chs on s1 x {name}: {:?}", chs.outcome))?;
    }
    for (name, fc) in [("swap", fixtures::t2_swap_bundle()), ("rotation", fixtures::t2_rotation_bundle())] {
        let action = monodromy_homology_action(&fc, &tol()).map_err(err)?;
        let betti = betti_numbers(&twisted_cochain_complex(&fc, &tol()).map_err(err)?, &tol()).map_err(err)?;
        let wang = wang_betti(&action.generators[0].blocks);
        ensure(wang == betti, || format!("{name}: wang {wang:?} vs betti {betti:?}"))?;
    }
    Ok(())
}

fn coarse() -> Outcome {
    for metric in [ProductMetric::L2, ProductMetric::Max] {
        let report = property_suite(SEED, 100, metric);
        for p in &report.properties {
            ensure(p.instances >= 100 && p.failures == 0, || {
                format!("{}: {} of {} fail", p.name, p.failures, p.instances)
            })?;
        }
        ensure(report.pass, || "suite reports failure".into())?;
    }
    Ok(())
}

fn structural() -> Outcome {
    let cases = [
        fixtures::cp2_model(),
        fixtures::probe(4),
        cap_duality(&fixtures::tri_torus7(), &tol()).map_err(err)?.complex,
        direct_sum(&fixtures::t2_model(), &fixtures::hyperbolic(2, 0)).map_err(err)?,
    ];
    for cx in &cases {
        let s = signature(cx, &tol()).map_err(err)?;
        for lambda in [0.1, 1.0, 10.0] {
            let r = signature(&rescale_inner_products(cx, lambda).map_err(err)?, &tol()).map_err(err)?;
            ensure(r == s, || format!("rescale by {lambda}: {r} vs {s}"))?;
        }
        let rev = signature(&reverse_orientation(cx), &tol()).map_err(err)?;
        ensure(rev == -s, || format!("reversal: {rev} vs {}", -s))?;
        let twice = signature(&direct_sum(cx, cx).map_err(err)?, &tol()).map_err(err)?;
        ensure(twice == 2 * s, || format!("direct sum: {twice} vs {}", 2 * s))?;
        if cx.n() == 4 {
            let plus = signature(&direct_sum(cx, &fixtures::cp2_model()).map_err(err)?, &tol()).map_err(err)?;
            ensure(plus == s + 1, || format!("direct sum with cp2: {plus} vs {}", s + 1))?;
        }
    }
    Ok(())
}

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name)
}

/// Every command over the shipped fixtures, concatenated.
fn full_run() -> Result<String, String> {
    let opts = Options {
        seed: SEED,
        ..Options::default()
    };
    let mut out = String::new();
    let checks = [
        "point.json", "s1.json", "s2.json", "t2.json", "cp2.json", "probe3.json", "tetra_boundary.json",
        "torus7.json", "cp2_9.json", "bundle_s2_cp2.json", "bundle_t2_swap.json", "he_harmonic_s2.json",
        "op_identity.json",
    ];
    for f in checks {
        out += &cmd_check(&fixture(f), &opts).map_err(err)?.to_json();
    }
    for f in ["point.json", "s1.json", "cp2.json", "probe3.json"] {
        out += &cmd_sgn(&fixture(f), &opts).map_err(err)?.to_json();
    }
    for (a, b) in [("cp2.json", "cp2.json"), ("s2.json", "s1.json"), ("s1.json", "s2.json")] {
        out += &cmd_product(&fixture(a), &fixture(b), &opts).map_err(err)?.to_json();
    }
    for f in ["he_identity_s1.json", "he_harmonic_s2.json", "he_mismatch_s2.json"] {
        out += &cmd_rho(&fixture(f), &opts).map_err(err)?.to_json();
    }
    for f in ["bundle_s2_cp2.json", "torus_cp2.json", "bundle_t2_swap.json", "bundle_t2_rotation.json"] {
        out += &cmd_chs(&fixture(f), &opts).map_err(err)?.to_json();
    }
    out += &cmd_coarse(None, 100, &opts).map_err(err)?.to_json();
    out += &cmd_coarse(Some(&fixture("op_identity.json")), 100, &opts).map_err(err)?.to_json();
    Ok(out)
}

fn determinism() -> Outcome {
    let first = full_run()?;
    let second = full_run()?;
    ensure(first == second, || {
        let at = first.bytes().zip(second.bytes()).position(|(a, b)| a != b).unwrap_or(first.len().min(second.len()));
        format!("reports differ at byte {at}")
    })
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome, Option<u64>); 8] = [
        ("oracle agreement", oracle_agreement, Some(5)),
        ("product formula", product_formula, Some(10)),
        ("product witnesses", witnesses, Some(10)),
        ("rho certificates", rho_certificates, Some(30)),
        ("family and chs", family, Some(10)),
        ("coarse bookkeeping", coarse, Some(10)),
        ("structural invariance", structural, Some(5)),
        ("determinism", determinism, None),
    ];
    // optional criterion numbers as arguments, e.g. `-- 1 4`
    let only: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = 0;
    for (i, (name, run, budget)) in criteria.iter().enumerate() {
        if !only.is_empty() && !only.contains(&(i + 1)) {
            continue;
        }
        let start = Instant::now();
        let outcome = run();
        let elapsed = start.elapsed();
        let outcome = match (outcome, budget) {
            (Ok(()), Some(b)) if elapsed > Duration::from_secs(*b) => {
                Err(format!("over budget: {:.2} s > {b} s", elapsed.as_secs_f64()))
            }
            (o, _) => o,
        };
        let status = if outcome.is_ok() { "PASS" } else { "FAIL" };
        let detail = outcome.err().map(|e| format!(" ({e})")).unwrap_or_default();
        println!("criterion {}: {status} {name} [{:.2} s]{detail}", i + 1, elapsed.as_secs_f64());
        if status == "FAIL" {
            failed += 1;
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}

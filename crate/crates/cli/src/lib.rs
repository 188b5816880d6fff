//! Certification commands behind the `hpsig` binary.
//!
//! Every command returns a [`RunReport`]: a schema-versioned JSON document
//! with input digests, the tolerance set, per-check outcomes and a
//! command-specific result. Reports are byte-stable for fixed inputs, flags
//! and seed; wall time is only included on request.

use std::path::Path;
use std::time::Instant;

use serde::Serialize;
use serde_json::{json, Map, Value};
use sha2::{Digest, Sha256};

use hpsig::coarse::{prop_along_base, property_suite, ProductMetric, GENERATOR};
use hpsig::family::{
    betti_numbers, chs_check, monodromy_homology_action, twisted_cochain_complex, wang_betti, ChsOutcome,
};
use hpsig::hpc::validate;
use hpsig::io::{FiberedDoc, HomotopyDoc, MetricDoc, OperatorDoc};
use hpsig::products::{graded_tensor, product_signature_check, witness_even_odd, witness_odd_even, ProductWitnessReport};
use hpsig::rho::{rho_certificate_even, rho_certificate_odd, rho_path, validate_homotopy_equivalence};
use hpsig::signature::{odd_index_representative, signature_report};
use hpsig::simplicial::{cap_duality, intersection_form_oracle, load_simplicial, TriangulationDoc};
use hpsig::{AxiomReport, Error, HPComplex, Tier, Tolerances};

pub mod corpus;

pub const SCHEMA: &str = "hpsig-report/1";
pub const DEFAULT_RHO_SAMPLES: usize = 601;
pub const DEFAULT_SCHEDULE_SAMPLES: usize = 11;
pub const DEFAULT_INSTANCES: usize = 100;
const SCHEDULE_END: f64 = 10.0;

/// Input problems: unreadable files, malformed documents, structural errors.
#[derive(Debug)]
pub struct InputError(pub String);

impl std::fmt::Display for InputError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for InputError {}

#[derive(Clone, Debug)]
pub struct Options {
    pub tol: Tolerances,
    pub samples: Option<usize>,
    pub seed: u64,
    pub metric: ProductMetric,
    pub timing: bool,
}

impl Default for Options {
    fn default() -> Self {
        Options {
            tol: Tolerances::default(),
            samples: None,
            seed: 0,
            metric: ProductMetric::L2,
            timing: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct InputDigest {
    pub path: String,
    pub kind: &'static str,
    pub sha256: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckOutcome {
    pub name: String,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub residual: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bound: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

#[derive(Clone, Debug, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct RunReport {
    pub schema: &'static str,
    pub command: String,
    pub inputs: Vec<InputDigest>,
    pub tolerances: Tolerances,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub generator: Option<&'static str>,
    pub checks: Vec<CheckOutcome>,
    pub result: Map<String, Value>,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wall_time_ms: Option<f64>,
}

impl RunReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn exit_code(&self) -> i32 {
        if self.pass {
            0
        } else {
            1
        }
    }

    pub fn check(&self, name: &str) -> Option<&CheckOutcome> {
        self.checks.iter().find(|c| c.name == name)
    }
}

/// Errors that mean the input itself is unusable.
fn is_input_error(e: &Error) -> bool {
    matches!(
        e,
        Error::Structural(_)
            | Error::Domain(_)
            | Error::Json(_)
            | Error::DanglingFace { .. }
            | Error::OrientationConflict { .. }
            | Error::DuplicateFacet(_)
            | Error::NonOrientable
            | Error::InvalidHomotopy(_)
    )
}

struct Run {
    command: String,
    opts: Options,
    inputs: Vec<InputDigest>,
    checks: Vec<CheckOutcome>,
    result: Map<String, Value>,
    samples: Option<usize>,
    seeded: bool,
    started: Instant,
}

impl Run {
    fn new(command: &str, opts: &Options) -> Self {
        Run {
            command: command.into(),
            opts: opts.clone(),
            inputs: Vec::new(),
            checks: Vec::new(),
            result: Map::new(),
            samples: None,
            seeded: false,
            started: Instant::now(),
        }
    }

    fn tol(&self) -> &Tolerances {
        &self.opts.tol
    }

    fn check(&mut self, name: &str, pass: bool) -> &mut CheckOutcome {
        self.checks.push(CheckOutcome {
            name: name.into(),
            pass,
            residual: None,
            bound: None,
            detail: None,
        });
        self.checks.last_mut().unwrap()
    }

    fn measured(&mut self, name: &str, residual: f64, bound: f64, pass: bool) {
        let c = self.check(name, pass);
        c.residual = Some(residual);
        c.bound = Some(bound);
    }

    /// Unwraps a core result; check-type failures become a failing check and
    /// `None`, input-type failures abort the command.
    fn attempt<T>(&mut self, name: &str, r: hpsig::Result<T>) -> Result<Option<T>, InputError> {
        match r {
            Ok(v) => Ok(Some(v)),
            Err(e) if is_input_error(&e) => Err(InputError(e.to_string())),
            Err(e) => {
                self.check(name, false).detail = Some(e.to_string());
                Ok(None)
            }
        }
    }

    fn put(&mut self, key: &str, value: impl Serialize) {
        self.result
            .insert(key.into(), serde_json::to_value(value).expect("serializable"));
    }

    fn read(&mut self, path: &Path) -> Result<(Value, String), InputError> {
        let bytes = std::fs::read(path).map_err(|e| InputError(format!("{}: {e}", path.display())))?;
        let text = String::from_utf8(bytes.clone())
            .map_err(|_| InputError(format!("{}: not UTF-8", path.display())))?;
        let value: Value = serde_json::from_str(&text)
            .map_err(|e| InputError(format!("{}: parse error: {e}", path.display())))?;
        let kind = classify(&value);
        self.inputs.push(InputDigest {
            path: path.display().to_string(),
            kind,
            sha256: hex::encode(Sha256::digest(&bytes)),
        });
        Ok((value, text))
    }

    fn finish(self) -> RunReport {
        let pass = self.checks.iter().all(|c| c.pass);
        RunReport {
            schema: SCHEMA,
            command: self.command,
            inputs: self.inputs,
            tolerances: self.opts.tol,
            samples: self.samples,
            seed: self.seeded.then_some(self.opts.seed),
            generator: self.seeded.then_some(GENERATOR),
            checks: self.checks,
            result: self.result,
            pass,
            wall_time_ms: self
                .opts
                .timing
                .then(|| self.started.elapsed().as_secs_f64() * 1e3),
        }
    }
}

/// Document kind from its top-level keys.
pub fn classify(v: &Value) -> &'static str {
    let has = |k: &str| v.get(k).is_some();
    if has("base") && has("fiber") {
        "fibered"
    } else if has("source") && has("target") {
        "homotopy"
    } else if has("facets") {
        "triangulation"
    } else if has("space") && has("matrix") {
        "operator"
    } else if has("dist") {
        "metric"
    } else if has("dims") {
        "complex"
    } else {
        "unknown"
    }
}

fn decode<T: serde::de::DeserializeOwned>(text: &str, path: &Path) -> Result<T, InputError> {
    serde_json::from_str(text).map_err(|e| InputError(format!("{}: {e}", path.display())))
}

fn input<T>(r: hpsig::Result<T>) -> Result<T, InputError> {
    r.map_err(|e| InputError(e.to_string()))
}

fn axiom_checks(run: &mut Run, report: &AxiomReport) {
    let weak = report.declared_tier == Tier::Weak;
    for (i, c) in report.checks.iter().enumerate() {
        // checks past the first three only bind at the strict tier
        if weak && i >= 3 {
            run.measured(&c.name, c.residual, c.bound, true);
            run.checks.last_mut().unwrap().detail = Some(format!("strict tier only; holds: {}", c.pass));
        } else {
            run.measured(&c.name, c.residual, c.bound, c.pass);
        }
    }
    let poincare = run.check("D±S invertible", report.poincare);
    poincare.detail = Some(format!(
        "min singular values {:.6e}, {:.6e}",
        report.b_plus.min_singular, report.b_minus.min_singular
    ));
    run.check("declared tier achieved", report.pass).detail =
        Some(format!("declared {:?}, achieved {:?}", report.declared_tier, report.tier_achieved));
}

/// Loads a complex directly or through the cap duality of a triangulation.
fn load_complex(run: &mut Run, path: &Path) -> Result<Option<HPComplex>, InputError> {
    let (value, text) = run.read(path)?;
    match classify(&value) {
        "complex" => Ok(Some(input(hpsig::io::parse_complex(&text))?)),
        "triangulation" => {
            let doc: TriangulationDoc = decode(&text, path)?;
            let sm = input(load_simplicial(&doc))?;
            let tol = *run.tol();
            Ok(run.attempt("cap duality", cap_duality(&sm, &tol))?.map(|c| c.complex))
        }
        other => Err(InputError(format!(
            "{}: expected a complex or triangulation, found {other}",
            path.display()
        ))),
    }
}

pub fn cmd_check(path: &Path, opts: &Options) -> Result<RunReport, InputError> {
    let mut run = Run::new("check", opts);
    let tol = *run.tol();
    let (value, text) = run.read(path)?;
    match classify(&value) {
        "complex" => {
            let c = input(hpsig::io::parse_complex(&text))?;
            let report = input(validate(&c, &tol))?;
            axiom_checks(&mut run, &report);
            run.put("axioms", &report);
        }
        "triangulation" => {
            let doc: TriangulationDoc = decode(&text, path)?;
            let sm = input(load_simplicial(&doc))?;
            run.put("fVector", sm.dims());
            run.put("betti", sm.betti());
            if let Some(cap) = run.attempt("cap duality", cap_duality(&sm, &tol))? {
                axiom_checks(&mut run, &cap.report);
                run.put("construction", cap.construction);
                if sm.n % 2 == 0 {
                    let sgn = run.attempt("signature", hpsig::signature::signature_even(&cap.complex, &tol))?;
                    let oracle = run.attempt("intersection form", intersection_form_oracle(&sm))?;
                    if let (Some(s), Some(o)) = (sgn, oracle) {
                        run.check("oracle agreement", s == o.signature).detail =
                            Some(format!("signature {s}, oracle {}", o.signature));
                        run.put("signature", s);
                        run.put("oracleSignature", o.signature);
                    }
                }
            }
        }
        "fibered" => {
            let doc: FiberedDoc = decode(&text, path)?;
            let fc = input(doc.to_fibered())?;
            let r = input(fc.check(&tol))?;
            run.measured("cocycle", r.cocycle_residual, tol.sym_bound(0.0), r.cocycle);
            run.check("chain maps", r.chain_maps).residual = Some(r.chain_map_residual);
            run.put("fiberwise", &r);
        }
        "homotopy" => {
            let doc: HomotopyDoc = decode(&text, path)?;
            let he = input(doc.to_equivalence())?;
            let r = input(validate_homotopy_equivalence(&he, &tol))?;
            for c in &r.checks {
                run.measured(&c.name, c.residual, c.bound, c.pass);
            }
        }
        "metric" => {
            let doc: MetricDoc = decode(&text, path)?;
            let x = input(doc.to_space())?;
            run.check("metric axioms", true);
            run.put("points", x.points());
        }
        "operator" => {
            let doc: OperatorDoc = decode(&text, path)?;
            let op = input(doc.to_operator())?;
            run.check("operator shape", true);
            run.put("propagation", op.propagation());
        }
        _ => return Err(InputError(format!("{}: unrecognized document", path.display()))),
    }
    Ok(run.finish())
}

pub fn cmd_sgn(path: &Path, opts: &Options) -> Result<RunReport, InputError> {
    let mut run = Run::new("sgn", opts);
    let tol = *run.tol();
    let Some(c) = load_complex(&mut run, path)? else {
        return Ok(run.finish());
    };
    let k = opts.samples.unwrap_or(DEFAULT_SCHEDULE_SAMPLES);
    run.samples = Some(k);
    if c.n() % 2 == 0 {
        if let Some(r) = run.attempt("even index", signature_report(&c, SCHEDULE_END, k, &tol))? {
            let constant = r
                .schedule
                .windows(2)
                .all(|w| w[0].signature == w[1].signature && w[0].ranks == w[1].ranks);
            run.check("even index", true).detail = Some(format!("signature {}", r.signature));
            run.check("schedule constant", constant);
            run.put("signature", r.signature);
            run.put("report", &r);
        }
    } else if let Some(odd) = run.attempt("odd certificate", odd_index_representative(&c, &tol))? {
        run.measured(
            "odd certificate",
            odd.ids_residual,
            tol.sym_bound(1.0),
            odd.ids_self_adjoint,
        );
        run.put("signature", 0);
        run.put("note", "odd: certificate pass");
        run.put("certificate", &odd);
        if let Some(r) = run.attempt("schedule", signature_report(&c, SCHEDULE_END, k, &tol))? {
            run.put("report", &r);
        }
    }
    Ok(run.finish())
}

fn witness_checks(run: &mut Run, w: &ProductWitnessReport) {
    for id in &w.identities {
        let name = match id.s {
            Some(s) => format!("{} (s = {s})", id.name),
            None => id.name.clone(),
        };
        run.measured(&name, id.residual, id.bound, id.pass);
    }
    if let Some(r) = &w.rank_identity {
        run.check("rank identity", r.lhs == r.rhs).detail = Some(format!("{} = {}", r.lhs, r.rhs));
    }
    let all_invertible = w.samples.iter().all(|s| s.plus.pass && s.minus.pass);
    if !w.samples.is_empty() {
        run.check("witness invertible", all_invertible);
    }
}

pub fn cmd_product(a: &Path, b: &Path, opts: &Options) -> Result<RunReport, InputError> {
    let mut run = Run::new("product", opts);
    let tol = *run.tol();
    let (Some(ca), Some(cb)) = (load_complex(&mut run, a)?, load_complex(&mut run, b)?) else {
        return Ok(run.finish());
    };
    input(graded_tensor(&ca, &cb))?;
    if let Some(p) = run.attempt("product formula", product_signature_check(&ca, &cb, &tol))? {
        run.check("product formula", p.pass).detail = Some(format!(
            "{} = {}·{}",
            p.signature_product, p.signature_a, p.signature_b
        ));
        run.put("product", &p);
    }
    let k = opts.samples.unwrap_or(DEFAULT_SCHEDULE_SAMPLES);
    let witness = match (ca.n() % 2, cb.n() % 2) {
        (0, 1) => {
            run.samples = Some(k);
            Some(witness_even_odd(&ca, &cb, k, &tol))
        }
        (1, 0) => Some(witness_odd_even(&ca, &cb, &tol)),
        _ => None,
    };
    match witness {
        None => run.put("witness", "not applicable for equal parities"),
        Some(Err(e)) if matches!(e, Error::Domain(_)) => run.put("witness", format!("skipped: {e}")),
        Some(r) => {
            if let Some(w) = run.attempt("witness", r)? {
                witness_checks(&mut run, &w);
                run.put("witness", &w);
            }
        }
    }
    Ok(run.finish())
}

pub fn cmd_rho(path: &Path, opts: &Options) -> Result<RunReport, InputError> {
    let mut run = Run::new("rho", opts);
    let tol = *run.tol();
    let (_, text) = run.read(path)?;
    let doc: HomotopyDoc = decode(&text, path)?;
    let he = input(doc.to_equivalence())?;
    let hr = input(validate_homotopy_equivalence(&he, &tol))?;
    for c in &hr.checks {
        run.measured(&c.name, c.residual, c.bound, c.pass);
    }
    if !hr.pass {
        return Ok(run.finish());
    }
    let k = opts.samples.unwrap_or(DEFAULT_RHO_SAMPLES);
    run.samples = Some(k);
    let Some(path_report) = run.attempt("path", rho_path(&he, k, &tol))? else {
        return Ok(run.finish());
    };
    run.check("path invertible", path_report.min_singular > 0.0 && path_report.samples.iter().all(|s| s.pass))
        .detail = Some(format!(
        "min singular {:.6e} at t* = {:.6}",
        path_report.min_singular, path_report.t_star
    ));
    let continuity = path_report.junction_residual.max(path_report.endpoint_residual);
    run.measured(
        "junction continuity",
        continuity,
        path_report.continuity_bound,
        continuity <= path_report.continuity_bound,
    );
    run.put("tStar", path_report.t_star);
    run.put("minSingular", path_report.min_singular);
    if path_report.pass {
        if he.source.n() % 2 == 1 {
            if let Some(cert) = run.attempt("odd certificate", rho_certificate_odd(&he, k, &tol))? {
                run.measured("odd certificate", cert.seam_residual, tol.id_bound(1.0), cert.pass);
                run.put("certificate", &cert);
            }
        } else if let Some(cert) = run.attempt("theta pair", rho_certificate_even(&he, k, &tol))? {
            run.check("theta ranks constant", cert.ranks_constant);
            run.check("theta ranks equal", cert.ranks_equal);
            run.put("certificate", &cert);
        }
    } else {
        run.put("path", &path_report);
    }
    Ok(run.finish())
}

pub fn cmd_chs(path: &Path, opts: &Options) -> Result<RunReport, InputError> {
    let mut run = Run::new("chs", opts);
    let tol = *run.tol();
    let (value, text) = run.read(path)?;
    if classify(&value) != "fibered" {
        return Err(InputError(format!(
            "{}: expected a fibered complex with a simplicial base",
            path.display()
        )));
    }
    let doc: FiberedDoc = decode(&text, path)?;
    let fc = input(doc.to_fibered())?;
    let action = input(monodromy_homology_action(&fc, &tol))?;
    run.put(
        "monodromy",
        json!({
            "fiberBetti": action.fiber_betti,
            "trivial": action.trivial,
            "deviations": action.generators.iter().map(|g| g.deviation).collect::<Vec<_>>(),
        }),
    );
    if let [generator] = action.generators.as_slice() {
        if fc.base.n == 1 {
            let twisted = input(twisted_cochain_complex(&fc, &tol))?;
            if let Some(b) = run.attempt("wang sequence", betti_numbers(&twisted, &tol))? {
                let w = wang_betti(&generator.blocks);
                run.check("wang sequence", b == w).detail = Some(format!("twisted {b:?}, predicted {w:?}"));
                run.put("totalBetti", b);
            }
        }
    }
    if let Some(r) = run.attempt("chs", chs_check(&fc, &tol))? {
        match r.outcome {
            ChsOutcome::HypothesisNotMet => {}
            outcome => {
                run.check("chs", outcome == ChsOutcome::Pass).detail = Some(format!(
                    "sgn(E) = {:?}, sgn(B)·sgn(F) = {:?}·{:?}, pairing {:?}",
                    r.signature_total, r.signature_base, r.signature_fiber, r.pairing
                ));
            }
        }
        run.put("chs", &r);
    }
    Ok(run.finish())
}

pub fn cmd_coarse(path: Option<&Path>, instances: usize, opts: &Options) -> Result<RunReport, InputError> {
    let mut run = Run::new("coarse", opts);
    match path {
        Some(p) => {
            let (_, text) = run.read(p)?;
            let doc: OperatorDoc = decode(&text, p)?;
            let op = input(doc.to_operator())?;
            run.check("operator loaded", true);
            run.put("propagation", op.propagation());
            if op.space().fibration().is_some() {
                let base = input(prop_along_base(&op))?;
                run.check("prop_along_base <= propagation", base <= op.propagation());
                run.put("propAlongBase", base);
            }
        }
        None => {
            run.seeded = true;
            let suite = property_suite(opts.seed, instances, opts.metric);
            for p in &suite.properties {
                let c = run.check(p.name, p.failures == 0);
                c.residual = Some(p.worst_margin);
                c.detail = Some(format!("{} instances, {} failures", p.instances, p.failures));
            }
            run.put("suite", &suite);
        }
    }
    Ok(run.finish())
}

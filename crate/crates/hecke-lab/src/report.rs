//! JSON encodings of the core report types.

use hecke_lab_core::axiom::{AxiomReport, AxiomWitness};
use hecke_lab_core::congruence::{format_mod_matrix, Subgroup};
use hecke_lab_core::galois::{GoursatCertificate, ImageCertificate, LiftingReport};
use hecke_lab_core::hecke::{CosetDecomposition, ModularPolynomial};
use hecke_lab_core::types::TypeCountReport;
use hecke_lab_core::{CMPoint, Cx};
use serde_json::{json, Map, Value};

/// Non-finite floats become `null`.
pub fn num(x: f64) -> Value {
    serde_json::Number::from_f64(x).map_or(Value::Null, Value::Number)
}

pub fn cx(z: &Cx) -> Value {
    let (re, im) = z.to_f64_pair();
    json!([num(re), num(im)])
}

pub fn cm_point(tau: &CMPoint) -> Value {
    json!({
        "D": tau.discriminant().to_string(),
        "x": hecke_lab_core::linear::format_rational(tau.x()),
        "y": hecke_lab_core::linear::format_rational(tau.y()),
        "display": tau.to_string(),
    })
}

fn witness(w: &AxiomWitness) -> Value {
    let mut m = Map::new();
    m.insert("label".into(), json!(w.label));
    m.insert("residual".into(), num(w.residual));
    for (k, v) in &w.fields {
        m.insert(k.clone(), json!(v));
    }
    Value::Object(m)
}

pub fn axiom(r: &AxiomReport) -> Map<String, Value> {
    let params: Map<String, Value> = r.params.iter().map(|(k, v)| (k.clone(), json!(v))).collect();
    let mut m = Map::new();
    m.insert("axiom".into(), json!(r.axiom.name()));
    m.insert("params".into(), Value::Object(params));
    m.insert("seed".into(), json!(r.seed));
    m.insert("trials".into(), json!(r.trials));
    m.insert("max_residual".into(), num(r.max_residual));
    m.insert("tol".into(), num(r.tol));
    m.insert("verdict".into(), json!(r.verdict.name()));
    m.insert("witnesses".into(), r.witnesses.iter().map(witness).collect());
    m.insert("note".into(), json!(r.note));
    m
}

pub fn cosets(c: &CosetDecomposition, expected: u64) -> Map<String, Value> {
    let reps: Vec<Value> = c.reps().iter().map(|g| json!(g.to_string())).collect();
    let mut m = Map::new();
    m.insert("n".into(), json!(c.n()));
    m.insert("count".into(), json!(c.len()));
    m.insert("expected".into(), json!(expected));
    m.insert("disjoint".into(), json!(c.verify_disjoint()));
    m.insert("representatives".into(), Value::Array(reps));
    m
}

pub fn modpoly(phi: &ModularPolynomial, with_coefficients: bool) -> Map<String, Value> {
    let mut m = Map::new();
    m.insert("n".into(), json!(phi.n()));
    m.insert("deg_x".into(), json!(phi.deg_x()));
    m.insert("deg_y".into(), json!(phi.deg_y()));
    m.insert("symmetric".into(), json!(phi.is_symmetric()));
    m.insert("terms".into(), json!(phi.terms().count()));
    if with_coefficients {
        let cs: Vec<Value> = phi.terms().map(|(&(i, j), c)| json!([i, j, c.to_string()])).collect();
        m.insert("coefficients".into(), Value::Array(cs));
    }
    m
}

pub fn image(c: &ImageCertificate) -> Map<String, Value> {
    let witnesses: Vec<Value> = c
        .witnesses
        .iter()
        .map(|w| json!({"class": w.class.name(), "ell": w.ell, "a_ell": w.a_ell}))
        .collect();
    let mut m = Map::new();
    m.insert("p".into(), json!(c.p));
    m.insert("bound".into(), json!(c.bound));
    m.insert("verdict".into(), json!(c.verdict.name()));
    m.insert("witnesses".into(), Value::Array(witnesses));
    m.insert(
        "remaining".into(),
        c.remaining.iter().map(|k| json!(k.name())).collect(),
    );
    m.insert("borel_pattern".into(), json!(c.borel_pattern));
    m.insert("sampled".into(), json!(c.sampled));
    m.insert("witnesses_valid".into(), json!(c.witnesses_valid()));
    m.insert("note".into(), json!(c.note));
    m
}

pub fn goursat(c: &GoursatCertificate) -> Map<String, Value> {
    let mut m = Map::new();
    m.insert("p".into(), json!(c.p));
    m.insert("verdict".into(), json!(c.verdict.name()));
    m.insert(
        "witness".into(),
        c.witness.map_or(
            Value::Null,
            |(ell, a1, a2)| json!({"ell": ell, "a_ell_1": a1, "a_ell_2": a2}),
        ),
    );
    m.insert("first".into(), Value::Object(image(&c.first)));
    m.insert("second".into(), Value::Object(image(&c.second)));
    m
}

pub fn lifting(r: &LiftingReport) -> Map<String, Value> {
    let mut m = Map::new();
    m.insert("p".into(), json!(r.p));
    m.insert("modulus".into(), json!(r.p * r.p));
    m.insert("order".into(), json!(r.order));
    m.insert("expected".into(), json!(r.expected));
    m.insert("full".into(), json!(r.full));
    m
}

pub fn types(r: &TypeCountReport) -> Map<String, Value> {
    let seq: Vec<Value> = r.orbit_counts_by_level.iter().map(|&(l, c)| json!([l, c])).collect();
    let mut m = Map::new();
    m.insert("level".into(), json!(r.level));
    m.insert("m".into(), json!(r.m));
    m.insert("ambient_order".into(), json!(r.ambient_order));
    m.insert("subgroup_order".into(), json!(r.subgroup_order));
    m.insert("index".into(), json!(r.index));
    m.insert("lower_bound".into(), json!(r.lower_bound));
    m.insert("conservative_lower_bound".into(), json!(r.conservative_lower_bound));
    m.insert("orbit_counts_by_level".into(), Value::Array(seq));
    m.insert("strict_growth".into(), json!(r.strict_growth));
    m.insert("bound_only".into(), json!(r.index.is_none()));
    m
}

pub fn subgroup(h: &Subgroup<'_>) -> Map<String, Value> {
    let mut m = Map::new();
    m.insert("level".into(), json!(h.parent().modulus()));
    m.insert("order".into(), json!(h.order()));
    m.insert("index".into(), json!(h.index()));
    m.insert("normal".into(), json!(h.is_normal()));
    m.insert("normal_core_order".into(), json!(h.normal_core().order()));
    m.insert(
        "generators".into(),
        h.generators().iter().map(|g| json!(format_mod_matrix(g))).collect(),
    );
    m
}

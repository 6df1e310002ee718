//! Command-line frontend. Every invocation prints exactly one JSON document on
//! standard output; diagnostics go to standard error.

use std::ffi::OsString;
use std::path::PathBuf;
use std::str::FromStr;

use clap::{Parser, Subcommand};
use serde_json::{json, Map, Value};

use hecke_lab_core::analytic::{invert_j, j, reduce_fundamental, AnalyticError, QSeriesContext};
use hecke_lab_core::arith::dedekind_psi;
use hecke_lab_core::axiom::{self, AxiomError, AxiomReport, AxiomWitness, Verdict};
use hecke_lab_core::congruence::{
    image_at_level, reduce_mod, CongruenceError, GroupDescriptor, ModMatrix, DEFAULT_LEVEL_LIMIT,
};
use hecke_lab_core::galois::groups::LIFTING_PRIMES;
use hecke_lab_core::galois::{
    certify_goursat_pair_with, certify_mod_p_image_with, frobenius_sample, lifting_check, standard_lifts,
    EllipticCurve, GaloisError, GoursatVerdict, ImageVerdict,
};
use hecke_lab_core::hecke::{double_coset_reps, HeckeError, ModularPolynomial};
use hecke_lab_core::linear::format_rational;
use hecke_lab_core::types::{report_for_certificate, report_for_descriptor, report_for_pair, TypesError};
use hecke_lab_core::{CMPoint, Cx, LinearError, NumericPoint, RatMatrix};

use crate::cache;
use crate::exec::RayonExecutor;
use crate::report;

#[derive(Parser, Debug)]
#[command(
    name = "hecke-lab",
    version,
    about = "Exact and certified computations on modular curves"
)]
pub struct Cli {
    /// Seed for every randomised trial.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Worker threads (default: one per hardware thread). Never affects output.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Working precision in bits.
    #[arg(long, global = true, default_value_t = 128)]
    pub prec: usize,
    /// Acceptance tolerance; each command has its own default.
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    /// Also write the JSON document to this file.
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Elliptic witness of a CM point, or the fixed point of a matrix.
    Special {
        #[command(subcommand)]
        what: SpecialCmd,
    },
    /// Representatives of the determinant-n double coset.
    HeckeCosets { n: u64 },
    /// The modular polynomial of level n (cached under HECKE_LAB_CACHE).
    Modpoly {
        n: u64,
        /// Omit the coefficient list.
        #[arg(long)]
        summary: bool,
    },
    /// j(tau) for tau given as "re,im"; with --invert, solves j(tau) = x0.
    J {
        #[arg(allow_hyphen_values = true)]
        value: String,
        #[arg(long)]
        invert: bool,
        /// q-series terms.
        #[arg(long, default_value_t = 32)]
        terms: usize,
    },
    /// Checks of the axiom schemes.
    Axiom {
        #[command(subcommand)]
        which: AxiomCmd,
    },
    /// Frobenius traces at good primes up to a bound.
    Frobenius {
        curve: String,
        #[arg(long, default_value_t = 100)]
        upto: u64,
    },
    /// Certificate for the mod-p image of a curve.
    Image {
        curve: String,
        #[arg(long)]
        p: u64,
        #[arg(long, default_value_t = 1000)]
        upto: u64,
    },
    /// Whether two curves have independent mod-p images.
    Goursat {
        curve1: String,
        curve2: String,
        #[arg(long)]
        p: u64,
        #[arg(long, default_value_t = 1000)]
        upto: u64,
    },
    /// Order of the subgroup of SL_2(Z/p^2) generated by lifts.
    Lifting {
        #[arg(long)]
        p: u64,
        /// Generator "[[a,b],[c,d]]"; repeatable. Defaults to the standard lifts.
        #[arg(long = "gen", allow_hyphen_values = true)]
        gens: Vec<String>,
    },
    /// Type counts: orbit counts and index bounds.
    Types {
        #[command(subcommand)]
        source: TypesCmd,
    },
    /// Image of a congruence subgroup at a finite level.
    Subgroup {
        group: String,
        #[arg(long)]
        level: Option<u64>,
    },
    /// The index [containing : group].
    Index { group: String, containing: String },
}

#[derive(Subcommand, Debug)]
pub enum SpecialCmd {
    /// The CM point x + y sqrt(D).
    Point {
        #[arg(long = "D", allow_hyphen_values = true)]
        d: i64,
        #[arg(long, allow_hyphen_values = true)]
        x: String,
        #[arg(long, allow_hyphen_values = true)]
        y: String,
    },
    /// A matrix "[[a,b],[c,d]]" of positive determinant.
    Matrix {
        #[arg(allow_hyphen_values = true)]
        matrix: String,
    },
}

#[derive(Subcommand, Debug)]
pub enum AxiomCmd {
    /// Phi_n(j(tau), j(n tau)) = 0 on seeded random tau.
    Mod1 {
        #[arg(long)]
        n: u64,
        #[arg(long, default_value_t = 20)]
        trials: usize,
        /// Add delta to one coefficient: "i,j,delta".
        #[arg(long, allow_hyphen_values = true)]
        perturb: Option<String>,
    },
    /// Roots of Phi_n(x0, Y) against j of the Hecke images.
    Mod2 {
        #[arg(long)]
        n: u64,
        /// Base value "re,im"; repeatable. Without it, seeded samples are used.
        #[arg(long, allow_hyphen_values = true)]
        x0: Vec<String>,
        #[arg(long, default_value_t = 10)]
        samples: usize,
        #[arg(long, default_value_t = 5000.0)]
        radius: f64,
        #[arg(long, allow_hyphen_values = true)]
        perturb: Option<String>,
    },
    /// The CM point x + y sqrt(D) is the unique fixed point of its witness.
    Sp {
        #[arg(long = "D", allow_hyphen_values = true)]
        d: i64,
        #[arg(long, allow_hyphen_values = true)]
        x: String,
        #[arg(long, allow_hyphen_values = true)]
        y: String,
    },
    /// Transitivity on SL_2(Z)/Gamma(N).
    Sf {
        #[arg(long)]
        level: u64,
    },
}

#[derive(Subcommand, Debug)]
pub enum TypesCmd {
    /// Exact indices of a congruence subgroup at several levels.
    Group {
        group: String,
        #[arg(long, value_delimiter = ',')]
        levels: Vec<u64>,
    },
    /// Index bounds from a mod-p image certificate.
    Curve {
        curve: String,
        #[arg(long)]
        p: u64,
        #[arg(long, default_value_t = 1000)]
        upto: u64,
    },
    /// Index bounds for a pair of curves.
    Pair {
        curve1: String,
        curve2: String,
        #[arg(long)]
        p: u64,
        #[arg(long, default_value_t = 1000)]
        upto: u64,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    Pass,
    Fail,
    Usage,
    Inconclusive,
}

impl Status {
    pub fn code(self) -> i32 {
        match self {
            Status::Pass => 0,
            Status::Fail => 1,
            Status::Usage => 2,
            Status::Inconclusive => 3,
        }
    }

    fn name(self) -> &'static str {
        match self {
            Status::Pass => "pass",
            Status::Fail => "fail",
            Status::Usage => "usage",
            Status::Inconclusive => "inconclusive",
        }
    }
}

impl From<Verdict> for Status {
    fn from(v: Verdict) -> Self {
        match v {
            Verdict::Pass => Status::Pass,
            Verdict::Fail => Status::Fail,
            Verdict::Inconclusive => Status::Inconclusive,
        }
    }
}

#[derive(Debug)]
pub struct CliError {
    status: Status,
    message: String,
}

impl CliError {
    fn usage(message: impl Into<String>) -> Self {
        CliError {
            status: Status::Usage,
            message: message.into(),
        }
    }
}

macro_rules! usage_errors {
    ($($t:ty),*) => {$(
        impl From<$t> for CliError {
            fn from(e: $t) -> Self {
                CliError::usage(e.to_string())
            }
        }
    )*};
}
usage_errors!(LinearError, CongruenceError);

impl From<HeckeError> for CliError {
    fn from(e: HeckeError) -> Self {
        let status = match e {
            HeckeError::NotComputable(_)
            | HeckeError::PrecisionExhausted { .. }
            | HeckeError::RecognitionFailed { .. }
            | HeckeError::IllConditioned { .. } => Status::Inconclusive,
            _ => Status::Usage,
        };
        CliError {
            status,
            message: e.to_string(),
        }
    }
}

impl From<AnalyticError> for CliError {
    fn from(e: AnalyticError) -> Self {
        let status = match e {
            AnalyticError::BadContext { .. } => Status::Usage,
            _ => Status::Inconclusive,
        };
        CliError {
            status,
            message: e.to_string(),
        }
    }
}

impl From<GaloisError> for CliError {
    fn from(e: GaloisError) -> Self {
        CliError::usage(e.to_string())
    }
}

impl From<AxiomError> for CliError {
    fn from(e: AxiomError) -> Self {
        match e {
            AxiomError::Hecke(h) => h.into(),
            AxiomError::Level(l) => l.into(),
        }
    }
}

impl From<TypesError> for CliError {
    fn from(e: TypesError) -> Self {
        let status = match e {
            TypesError::EvidenceInsufficient => Status::Inconclusive,
            _ => Status::Usage,
        };
        CliError {
            status,
            message: e.to_string(),
        }
    }
}

struct Outcome {
    status: Status,
    body: Map<String, Value>,
}

fn outcome(status: Status, body: Map<String, Value>) -> Outcome {
    Outcome { status, body }
}

/// Everything that determines a report. Thread count is deliberately absent.
#[derive(Clone, Debug)]
pub struct RunConfig {
    pub seed: u64,
    pub precision: usize,
    pub tol: Option<f64>,
    pub output: Option<PathBuf>,
    pub command: String,
    pub params: Map<String, Value>,
}

impl RunConfig {
    fn to_json(&self) -> Value {
        json!({
            "seed": self.seed,
            "precision": self.precision,
            "tol": self.tol.map_or(Value::Null, report::num),
            "output": self.output.as_ref().map(|p| p.display().to_string()),
            "command": self.command,
            "params": self.params,
        })
    }
}

fn parse_pair(s: &str) -> Result<(f64, f64), CliError> {
    let err = || CliError::usage(format!("expected \"re,im\", got {s:?}"));
    let (a, b) = s.split_once(',').ok_or_else(err)?;
    let re = a.trim().parse::<f64>().map_err(|_| err())?;
    let im = b.trim().parse::<f64>().map_err(|_| err())?;
    if !re.is_finite() || !im.is_finite() {
        return Err(err());
    }
    Ok((re, im))
}

fn parse_perturb(s: &str) -> Result<(u32, u32, i64), CliError> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    let err = || CliError::usage(format!("--perturb expects \"i,j,delta\", got {s:?}"));
    match parts.as_slice() {
        [i, j, d] => Ok((
            i.parse().map_err(|_| err())?,
            j.parse().map_err(|_| err())?,
            d.parse().map_err(|_| err())?,
        )),
        _ => Err(err()),
    }
}

fn parse_curve(s: &str) -> Result<EllipticCurve, CliError> {
    EllipticCurve::from_str(s).map_err(CliError::from)
}

fn parse_group(s: &str) -> Result<GroupDescriptor, CliError> {
    GroupDescriptor::from_str(s).map_err(CliError::from)
}

fn load_phi(n: u64, perturb: &Option<String>) -> Result<ModularPolynomial, CliError> {
    let (phi, source) = cache::load_or_compute(n)?;
    eprintln!("modular polynomial {n}: {source:?}");
    Ok(match perturb {
        Some(s) => {
            let (i, j, d) = parse_perturb(s)?;
            phi.perturbed(i, j, d)
        }
        None => phi,
    })
}

struct Env {
    seed: u64,
    prec: usize,
    tol: Option<f64>,
    exec: RayonExecutor,
}

impl Env {
    fn ctx(&self, terms: usize) -> Result<QSeriesContext, CliError> {
        Ok(QSeriesContext::new(terms, self.prec)?)
    }

    fn tol(&self, default: f64) -> f64 {
        self.tol.unwrap_or(default)
    }
}

fn params(pairs: &[(&str, Value)]) -> Map<String, Value> {
    pairs.iter().map(|(k, v)| (k.to_string(), v.clone())).collect()
}

fn describe(cmd: &Command, env: &Env) -> (String, Map<String, Value>, Option<f64>) {
    use Command::*;
    match cmd {
        Special {
            what: SpecialCmd::Point { d, x, y },
        } => (
            "special point".into(),
            params(&[("D", json!(d)), ("x", json!(x)), ("y", json!(y))]),
            None,
        ),
        Special {
            what: SpecialCmd::Matrix { matrix },
        } => ("special matrix".into(), params(&[("matrix", json!(matrix))]), None),
        HeckeCosets { n } => ("hecke-cosets".into(), params(&[("n", json!(n))]), None),
        Modpoly { n, summary } => (
            "modpoly".into(),
            params(&[("n", json!(n)), ("summary", json!(summary))]),
            None,
        ),
        J { value, invert, terms } => (
            "j".into(),
            params(&[
                ("value", json!(value)),
                ("invert", json!(invert)),
                ("terms", json!(terms)),
            ]),
            invert.then_some(hecke_lab_core::analytic::INVERT_TOLERANCE),
        ),
        Axiom { which } => match which {
            AxiomCmd::Mod1 { n, trials, perturb } => (
                "axiom mod1".into(),
                params(&[("n", json!(n)), ("trials", json!(trials)), ("perturb", json!(perturb))]),
                Some(env.tol(1e-6)),
            ),
            AxiomCmd::Mod2 {
                n,
                x0,
                samples,
                radius,
                perturb,
            } => (
                "axiom mod2".into(),
                params(&[
                    ("n", json!(n)),
                    ("x0", json!(x0)),
                    ("samples", json!(samples)),
                    ("radius", report::num(*radius)),
                    ("perturb", json!(perturb)),
                ]),
                Some(env.tol(1e-4)),
            ),
            AxiomCmd::Sp { d, x, y } => (
                "axiom sp".into(),
                params(&[("D", json!(d)), ("x", json!(x)), ("y", json!(y))]),
                Some(env.tol(1e-8)),
            ),
            AxiomCmd::Sf { level } => ("axiom sf".into(), params(&[("level", json!(level))]), None),
        },
        Frobenius { curve, upto } => (
            "frobenius".into(),
            params(&[("curve", json!(curve)), ("upto", json!(upto))]),
            None,
        ),
        Image { curve, p, upto } => (
            "image".into(),
            params(&[("curve", json!(curve)), ("p", json!(p)), ("upto", json!(upto))]),
            None,
        ),
        Goursat {
            curve1,
            curve2,
            p,
            upto,
        } => (
            "goursat".into(),
            params(&[
                ("curve1", json!(curve1)),
                ("curve2", json!(curve2)),
                ("p", json!(p)),
                ("upto", json!(upto)),
            ]),
            None,
        ),
        Lifting { p, gens } => (
            "lifting".into(),
            params(&[("p", json!(p)), ("gens", json!(gens))]),
            None,
        ),
        Types { source } => match source {
            TypesCmd::Group { group, levels } => (
                "types group".into(),
                params(&[("group", json!(group)), ("levels", json!(levels))]),
                None,
            ),
            TypesCmd::Curve { curve, p, upto } => (
                "types curve".into(),
                params(&[("curve", json!(curve)), ("p", json!(p)), ("upto", json!(upto))]),
                None,
            ),
            TypesCmd::Pair {
                curve1,
                curve2,
                p,
                upto,
            } => (
                "types pair".into(),
                params(&[
                    ("curve1", json!(curve1)),
                    ("curve2", json!(curve2)),
                    ("p", json!(p)),
                    ("upto", json!(upto)),
                ]),
                None,
            ),
        },
        Subgroup { group, level } => (
            "subgroup".into(),
            params(&[("group", json!(group)), ("level", json!(level))]),
            None,
        ),
        Index { group, containing } => (
            "index".into(),
            params(&[("group", json!(group)), ("containing", json!(containing))]),
            None,
        ),
    }
}

fn special_point(d: i64, x: &str, y: &str) -> Result<Outcome, CliError> {
    let tau = CMPoint::parse(d, x, y)?;
    let g = tau.special_witness();
    let fp = g.fixed_point()?;
    let ok = fp == tau;
    let mut m = Map::new();
    m.insert("point".into(), report::cm_point(&tau));
    m.insert("witness".into(), json!(g.to_string()));
    m.insert("class".into(), json!(g.classify().name()));
    m.insert("discriminant".into(), json!(format_rational(&g.discriminant())));
    m.insert("fixed_point".into(), report::cm_point(&fp));
    m.insert("round_trip".into(), json!(ok));
    Ok(outcome(if ok { Status::Pass } else { Status::Fail }, m))
}

fn special_matrix(s: &str) -> Result<Outcome, CliError> {
    let g = RatMatrix::from_str(s)?;
    let mut m = Map::new();
    m.insert("matrix".into(), json!(g.to_string()));
    m.insert("class".into(), json!(g.classify().name()));
    m.insert("discriminant".into(), json!(format_rational(&g.discriminant())));
    match g.fixed_point() {
        Ok(fp) => {
            m.insert("fixed_point".into(), report::cm_point(&fp));
            Ok(outcome(Status::Pass, m))
        }
        Err(e) => {
            m.insert("fixed_point".into(), Value::Null);
            m.insert("error".into(), json!(e.to_string()));
            Ok(outcome(Status::Fail, m))
        }
    }
}

fn j_command(env: &Env, value: &str, invert: bool, terms: usize) -> Result<Outcome, CliError> {
    let ctx = env.ctx(terms)?;
    let (re, im) = parse_pair(value)?;
    let mut m = Map::new();
    if invert {
        let x0 = Cx::from_f64(re, im, env.prec);
        let tau = invert_j(&x0, &ctx)?;
        let back = j(&tau, &ctx)?;
        m.insert("x0".into(), report::cx(&x0));
        m.insert("tau".into(), report::cx(tau.value()));
        m.insert("value".into(), report::cx(&back.value));
        m.insert("abs_err".into(), report::num(back.abs_err));
    } else {
        let tau = NumericPoint::from_f64(re, im, env.prec).map_err(|e| CliError::usage(e.to_string()))?;
        let (g, reduced) = reduce_fundamental(&tau);
        let v = j(&tau, &ctx)?;
        m.insert("tau".into(), report::cx(tau.value()));
        m.insert("reduction".into(), json!(g.to_string()));
        m.insert("reduced".into(), report::cx(reduced.value()));
        m.insert("value".into(), report::cx(&v.value));
        m.insert("abs_err".into(), report::num(v.abs_err));
    }
    Ok(outcome(Status::Pass, m))
}

fn axiom_outcome(r: &AxiomReport) -> Outcome {
    outcome(r.verdict.into(), report::axiom(r))
}

/// Folds several single-point MOD2 reports into one.
fn merge_mod2(reports: Vec<AxiomReport>, tol: f64) -> AxiomReport {
    let verdict = if reports.iter().any(|r| r.verdict == Verdict::Fail) {
        Verdict::Fail
    } else if reports.is_empty() || reports.iter().any(|r| r.verdict == Verdict::Inconclusive) {
        Verdict::Inconclusive
    } else {
        Verdict::Pass
    };
    let mut witnesses = Vec::new();
    let mut notes = Vec::new();
    let mut max_residual = 0.0f64;
    for (k, r) in reports.iter().enumerate() {
        max_residual = if r.max_residual.is_finite() {
            max_residual.max(r.max_residual)
        } else {
            f64::INFINITY
        };
        if let Some(note) = &r.note {
            notes.push(format!("sample {k}: {note}"));
        }
        let mut fields = vec![
            ("sample".to_string(), k.to_string()),
            ("verdict".to_string(), r.verdict.name().to_string()),
        ];
        fields.extend(r.params.iter().filter(|(key, _)| key.starts_with("x0")).cloned());
        witnesses.push(AxiomWitness {
            label: "fiber".to_string(),
            residual: r.max_residual,
            fields,
        });
        for w in &r.witnesses {
            let mut w = w.clone();
            w.fields.insert(0, ("sample".to_string(), k.to_string()));
            witnesses.push(w);
        }
    }
    let n = reports.first().and_then(|r| r.params.first().cloned());
    AxiomReport {
        axiom: hecke_lab_core::axiom::AxiomId::Mod2,
        params: n.into_iter().collect(),
        seed: None,
        trials: reports.len(),
        max_residual,
        tol,
        verdict,
        witnesses,
        note: (!notes.is_empty()).then(|| notes.join("; ")),
    }
}

fn axiom_command(env: &Env, which: &AxiomCmd) -> Result<Outcome, CliError> {
    match which {
        AxiomCmd::Mod1 { n, trials, perturb } => {
            let phi = load_phi(*n, perturb)?;
            let r = axiom::check_mod1(&phi, *trials, env.tol(1e-6), env.seed, &env.ctx(32)?, &env.exec);
            Ok(axiom_outcome(&r))
        }
        AxiomCmd::Mod2 {
            n,
            x0,
            samples,
            radius,
            perturb,
        } => {
            let phi = load_phi(*n, perturb)?;
            let ctx = env.ctx(32)?;
            let tol = env.tol(1e-4);
            let (points, seeded) = if x0.is_empty() {
                if !(radius.is_finite() && *radius > 0.0) {
                    return Err(CliError::usage("--radius must be positive"));
                }
                (axiom::sample_disc(*samples, *radius, env.seed, env.prec), true)
            } else {
                let pts = x0
                    .iter()
                    .map(|s| parse_pair(s).map(|(re, im)| Cx::from_f64(re, im, env.prec)))
                    .collect::<Result<Vec<_>, _>>()?;
                (pts, false)
            };
            let results =
                hecke_lab_core::exec::Executor::map(&env.exec, &points, |x| axiom::check_mod2(&phi, x, tol, &ctx));
            let reports = results.into_iter().collect::<Result<Vec<_>, _>>()?;
            let mut r = merge_mod2(reports, tol);
            if seeded {
                r.seed = Some(env.seed);
            }
            Ok(axiom_outcome(&r))
        }
        AxiomCmd::Sp { d, x, y } => {
            let tau = CMPoint::parse(*d, x, y)?;
            let r = axiom::check_sp(&tau, env.tol(1e-8), &env.ctx(32)?);
            Ok(axiom_outcome(&r))
        }
        AxiomCmd::Sf { level } => Ok(axiom_outcome(&axiom::check_sf(*level)?)),
    }
}

fn frobenius_command(env: &Env, curve: &str, upto: u64) -> Result<Outcome, CliError> {
    let e = parse_curve(curve)?;
    if upto > hecke_lab_core::galois::curve::BSGS_LIMIT {
        return Err(CliError::usage(format!(
            "--upto {upto} exceeds the point-counting range"
        )));
    }
    let sample = frobenius_sample(&e, upto, &env.exec);
    let mut m = Map::new();
    m.insert("curve".into(), json!(e.to_string()));
    m.insert("discriminant".into(), json!(format_rational(e.discriminant())));
    m.insert("bound".into(), json!(sample.bound));
    m.insert("count".into(), json!(sample.entries.len()));
    m.insert(
        "traces".into(),
        sample.entries.iter().map(|&(l, a)| json!([l, a])).collect(),
    );
    Ok(outcome(Status::Pass, m))
}

fn image_status(v: ImageVerdict) -> Status {
    if v == ImageVerdict::Inconclusive {
        Status::Inconclusive
    } else {
        Status::Pass
    }
}

fn goursat_status(v: GoursatVerdict) -> Status {
    if v == GoursatVerdict::Inconclusive {
        Status::Inconclusive
    } else {
        Status::Pass
    }
}

fn parse_lift(s: &str, modulus: u16) -> Result<ModMatrix, CliError> {
    let g = RatMatrix::from_str(s)?;
    reduce_mod(&g, modulus).ok_or_else(|| CliError::usage(format!("{s} has no reduction mod {modulus}")))
}

fn lifting_command(p: u64, gens: &[String]) -> Result<Outcome, CliError> {
    if !LIFTING_PRIMES.contains(&p) {
        return Err(GaloisError::UnsupportedPrime(p).into());
    }
    let modulus = (p * p) as u16;
    let gens: Vec<ModMatrix> = if gens.is_empty() {
        standard_lifts(p).to_vec()
    } else {
        gens.iter().map(|s| parse_lift(s, modulus)).collect::<Result<_, _>>()?
    };
    let mut m = Map::new();
    m.insert(
        "generators".into(),
        gens.iter()
            .map(|g| json!(hecke_lab_core::congruence::format_mod_matrix(g)))
            .collect(),
    );
    match lifting_check(p, &gens) {
        Ok(r) => {
            m.extend(report::lifting(&r));
            Ok(outcome(if r.full { Status::Pass } else { Status::Fail }, m))
        }
        Err(GaloisError::NotGeneratingModP { mod_p_order }) => {
            m.insert("p".into(), json!(p));
            m.insert("full".into(), json!(false));
            m.insert("mod_p_order".into(), json!(mod_p_order));
            m.insert(
                "error".into(),
                json!(GaloisError::NotGeneratingModP { mod_p_order }.to_string()),
            );
            Ok(outcome(Status::Fail, m))
        }
        Err(e) => Err(e.into()),
    }
}

fn types_command(env: &Env, source: &TypesCmd) -> Result<Outcome, CliError> {
    match source {
        TypesCmd::Group { group, levels } => {
            let g = parse_group(group)?;
            let levels = if levels.is_empty() {
                vec![g.required_level()]
            } else {
                levels.clone()
            };
            let r = report_for_descriptor(&g, &levels, DEFAULT_LEVEL_LIMIT)?;
            let mut m = Map::new();
            m.insert("group".into(), json!(g.to_string()));
            m.extend(report::types(&r));
            Ok(outcome(Status::Pass, m))
        }
        TypesCmd::Curve { curve, p, upto } => {
            let e = parse_curve(curve)?;
            let cert = certify_mod_p_image_with(&e, *p, *upto, &env.exec)?;
            let r = report_for_certificate(&cert)?;
            let mut m = Map::new();
            m.insert("curve".into(), json!(e.to_string()));
            m.insert("verdict".into(), json!(cert.verdict.name()));
            m.extend(report::types(&r));
            Ok(outcome(Status::Pass, m))
        }
        TypesCmd::Pair {
            curve1,
            curve2,
            p,
            upto,
        } => {
            let (e1, e2) = (parse_curve(curve1)?, parse_curve(curve2)?);
            let cert = certify_goursat_pair_with(&e1, &e2, *p, *upto, &env.exec)?;
            let r = report_for_pair(&cert)?;
            let mut m = Map::new();
            m.insert("curves".into(), json!([e1.to_string(), e2.to_string()]));
            m.insert("verdict".into(), json!(cert.verdict.name()));
            m.extend(report::types(&r));
            Ok(outcome(Status::Pass, m))
        }
    }
}

fn execute(env: &Env, cmd: &Command) -> Result<Outcome, CliError> {
    match cmd {
        Command::Special {
            what: SpecialCmd::Point { d, x, y },
        } => special_point(*d, x, y),
        Command::Special {
            what: SpecialCmd::Matrix { matrix },
        } => special_matrix(matrix),
        Command::HeckeCosets { n } => {
            let c = double_coset_reps(*n)?;
            let expected = dedekind_psi(*n);
            let ok = c.len() as u64 == expected && c.verify_disjoint();
            Ok(outcome(
                if ok { Status::Pass } else { Status::Fail },
                report::cosets(&c, expected),
            ))
        }
        Command::Modpoly { n, summary } => {
            let phi = load_phi(*n, &None)?;
            Ok(outcome(Status::Pass, report::modpoly(&phi, !summary)))
        }
        Command::J { value, invert, terms } => j_command(env, value, *invert, *terms),
        Command::Axiom { which } => axiom_command(env, which),
        Command::Frobenius { curve, upto } => frobenius_command(env, curve, *upto),
        Command::Image { curve, p, upto } => {
            let e = parse_curve(curve)?;
            let cert = certify_mod_p_image_with(&e, *p, *upto, &env.exec)?;
            let mut m = Map::new();
            m.insert("curve".into(), json!(e.to_string()));
            m.extend(report::image(&cert));
            Ok(outcome(image_status(cert.verdict), m))
        }
        Command::Goursat {
            curve1,
            curve2,
            p,
            upto,
        } => {
            let (e1, e2) = (parse_curve(curve1)?, parse_curve(curve2)?);
            let cert = certify_goursat_pair_with(&e1, &e2, *p, *upto, &env.exec)?;
            let mut m = Map::new();
            m.insert("curves".into(), json!([e1.to_string(), e2.to_string()]));
            m.extend(report::goursat(&cert));
            Ok(outcome(goursat_status(cert.verdict), m))
        }
        Command::Lifting { p, gens } => lifting_command(*p, gens),
        Command::Types { source } => types_command(env, source),
        Command::Subgroup { group, level } => {
            let g = parse_group(group)?;
            let level = level.unwrap_or_else(|| g.required_level());
            let parent = hecke_lab_core::congruence::enumerate_sl2_with_limit(level, DEFAULT_LEVEL_LIMIT)?;
            let h = image_at_level(&g, &parent)?;
            let mut m = Map::new();
            m.insert("group".into(), json!(g.to_string()));
            m.insert("ambient_order".into(), json!(parent.order()));
            m.extend(report::subgroup(&h));
            Ok(outcome(Status::Pass, m))
        }
        Command::Index { group, containing } => {
            let (g, inn) = (parse_group(group)?, parse_group(containing)?);
            let idx = hecke_lab_core::congruence::index(&g, &inn, DEFAULT_LEVEL_LIMIT)?;
            let mut m = Map::new();
            m.insert("group".into(), json!(g.to_string()));
            m.insert("containing".into(), json!(inn.to_string()));
            m.insert("index".into(), json!(idx));
            Ok(outcome(Status::Pass, m))
        }
    }
}

/// Runs a parsed invocation, returning the exit code and the JSON document.
pub fn run(cli: &Cli) -> (i32, String) {
    let exec = match RayonExecutor::new(cli.threads) {
        Ok(e) => e,
        Err(e) => return error_document(None, Status::Usage, &format!("--threads: {e}")),
    };
    let env = Env {
        seed: cli.seed,
        prec: cli.prec,
        tol: cli.tol,
        exec,
    };
    let (command, params, tol) = describe(&cli.command, &env);
    let config = RunConfig {
        seed: cli.seed,
        precision: cli.prec,
        tol,
        output: cli.output.clone(),
        command,
        params,
    };
    let (status, mut doc) = match execute(&env, &cli.command) {
        Ok(o) => (o.status, o.body),
        Err(e) => {
            eprintln!("error: {}", e.message);
            let mut m = Map::new();
            m.insert("error".into(), json!(e.message));
            (e.status, m)
        }
    };
    let mut full = Map::new();
    full.insert("config".into(), config.to_json());
    full.insert("status".into(), json!(status.name()));
    full.append(&mut doc);
    let text = serde_json::to_string_pretty(&Value::Object(full)).expect("serialisable") + "\n";
    if let Some(path) = &cli.output {
        if let Err(e) = std::fs::write(path, &text) {
            eprintln!("error: cannot write {}: {e}", path.display());
            return (Status::Usage.code(), text);
        }
    }
    (status.code(), text)
}

fn error_document(command: Option<&str>, status: Status, message: &str) -> (i32, String) {
    let doc = json!({"config": {"command": command}, "status": status.name(), "error": message});
    (
        status.code(),
        serde_json::to_string_pretty(&doc).expect("serialisable") + "\n",
    )
}

/// Parses `args` (including the program name) and runs. Help and version
/// requests print their text and exit 0.
pub fn run_args<I, T>(args: I) -> (i32, String)
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    match Cli::try_parse_from(args) {
        Ok(cli) => run(&cli),
        Err(e) => {
            if e.use_stderr() {
                let msg = e.to_string();
                eprint!("{msg}");
                // the paragraph before the usage line names the offending flag
                let summary: Vec<&str> = msg.lines().map(str::trim).take_while(|l| !l.is_empty()).collect();
                let summary = summary.join(" ");
                error_document(None, Status::Usage, summary.trim_start_matches("error: "))
            } else {
                (0, e.to_string())
            }
        }
    }
}

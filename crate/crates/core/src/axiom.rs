//! Numeric and combinatorial checks of the modular-curve axiom schemes:
//! vanishing of `Phi_n` on graph points, fibers as Hecke images, special
//! points as unique fixed points, and transitivity on finite coset spaces.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::analytic::{invert_j, j, j_cm, sample_fundamental_domain, QSeriesContext};
use crate::congruence::{enumerate_sl2_with_limit, image_at_level, CongruenceError, GroupDescriptor};
use crate::exec::Executor;
use crate::hecke::{correspondence_fiber, double_coset_reps, hecke_images, HeckeError, ModularPolynomial};
use crate::linear::CMPoint;
use crate::numeric::{Cx, NumericPoint, Real};
use crate::types::count_orbits;

/// Largest level accepted by [`check_sf`].
pub const SF_LEVEL_LIMIT: u64 = 12;
/// Upper end of `Im tau` when sampling graph points.
pub const SAMPLE_MAX_IM: f64 = 1.5;

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum AxiomError {
    #[error(transparent)]
    Hecke(#[from] HeckeError),
    #[error(transparent)]
    Level(#[from] CongruenceError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AxiomId {
    Mod1,
    Mod2,
    Sp,
    Sf,
}

impl AxiomId {
    pub fn name(self) -> &'static str {
        match self {
            AxiomId::Mod1 => "MOD1",
            AxiomId::Mod2 => "MOD2",
            AxiomId::Sp => "SP",
            AxiomId::Sf => "SF",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    Pass,
    Fail,
    Inconclusive,
}

impl Verdict {
    pub fn name(self) -> &'static str {
        match self {
            Verdict::Pass => "pass",
            Verdict::Fail => "fail",
            Verdict::Inconclusive => "inconclusive",
        }
    }
}

/// A labelled record backing a verdict, with string-valued fields.
#[derive(Clone, Debug, PartialEq)]
pub struct AxiomWitness {
    pub label: String,
    pub residual: f64,
    pub fields: Vec<(String, String)>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AxiomReport {
    pub axiom: AxiomId,
    pub params: Vec<(String, String)>,
    pub seed: Option<u64>,
    pub trials: usize,
    pub max_residual: f64,
    pub tol: f64,
    pub verdict: Verdict,
    pub witnesses: Vec<AxiomWitness>,
    pub note: Option<String>,
}

fn cx_fields(prefix: &str, z: &Cx) -> [(String, String); 2] {
    let (re, im) = z.to_f64_pair();
    [
        (format!("{prefix}_re"), format!("{re:e}")),
        (format!("{prefix}_im"), format!("{im:e}")),
    ]
}

enum Trial {
    Residual(f64),
    Failed(String),
}

/// `Phi_n(j(tau), j(n tau))` for `trials` seeded points of the fundamental
/// domain. Passes when every relative residual is below `tol`.
pub fn check_mod1<E: Executor>(
    phi: &ModularPolynomial,
    trials: usize,
    tol: f64,
    seed: u64,
    ctx: &QSeriesContext,
    exec: &E,
) -> AxiomReport {
    let n = phi.n();
    let p = ctx.precision();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let points = sample_fundamental_domain(&mut rng, trials, SAMPLE_MAX_IM, p);
    let scale = Real::from_i64(n as i64, p);
    let results = exec.map(&points, |tau| {
        let ntau = NumericPoint::new(tau.value().scale(&scale), p).expect("upper half-plane");
        match (j(tau, ctx), j(&ntau, ctx)) {
            (Ok(x), Ok(y)) => Trial::Residual(phi.relative_residual(&x.value, &y.value)),
            (Err(e), _) | (_, Err(e)) => Trial::Failed(e.to_string()),
        }
    });

    let mut max_residual = 0.0f64;
    let mut worst = 0;
    let mut failures = Vec::new();
    let mut unevaluated = Vec::new();
    for (k, r) in results.iter().enumerate() {
        match r {
            Trial::Residual(v) => {
                if *v > max_residual || !v.is_finite() {
                    max_residual = if v.is_finite() { *v } else { f64::INFINITY };
                    worst = k;
                }
                if v.is_nan() || *v >= tol {
                    failures.push((k, *v));
                }
            }
            Trial::Failed(msg) => unevaluated.push((k, msg.clone())),
        }
    }
    let witness = |k: usize, residual: f64| {
        let mut fields = vec![("trial".to_string(), k.to_string())];
        fields.extend(cx_fields("tau", points[k].value()));
        AxiomWitness {
            label: "graph point".to_string(),
            residual,
            fields,
        }
    };
    let (verdict, witnesses, note) = if !failures.is_empty() {
        (
            Verdict::Fail,
            failures.iter().map(|&(k, v)| witness(k, v)).collect(),
            None,
        )
    } else if !unevaluated.is_empty() {
        let (k, msg) = &unevaluated[0];
        (Verdict::Inconclusive, Vec::new(), Some(format!("trial {k}: {msg}")))
    } else if trials == 0 {
        (Verdict::Inconclusive, Vec::new(), Some("no trials".to_string()))
    } else {
        (Verdict::Pass, vec![witness(worst, max_residual)], None)
    };
    AxiomReport {
        axiom: AxiomId::Mod1,
        params: vec![("n".to_string(), n.to_string())],
        seed: Some(seed),
        trials,
        max_residual,
        tol,
        verdict,
        witnesses,
        note,
    }
}

/// Smallest `t` such that a perfect matching uses only entries `<= t`,
/// together with the matching (`row -> column`).
pub fn bottleneck_assignment(cost: &[Vec<f64>]) -> Option<(f64, Vec<usize>)> {
    let n = cost.len();
    if n == 0 {
        return Some((0.0, Vec::new()));
    }
    if cost.iter().any(|r| r.len() != n) {
        return None;
    }
    let mut values: Vec<f64> = cost.iter().flatten().copied().filter(|v| v.is_finite()).collect();
    values.sort_by(|a, b| a.total_cmp(b));
    values.dedup();
    let try_match = |t: f64| -> Option<Vec<usize>> {
        let mut col_of_row = vec![usize::MAX; n];
        let mut row_of_col = vec![usize::MAX; n];
        fn augment(
            r: usize,
            t: f64,
            cost: &[Vec<f64>],
            seen: &mut [bool],
            col_of_row: &mut [usize],
            row_of_col: &mut [usize],
        ) -> bool {
            for c in 0..cost.len() {
                if cost[r][c] <= t && !seen[c] {
                    seen[c] = true;
                    if row_of_col[c] == usize::MAX || augment(row_of_col[c], t, cost, seen, col_of_row, row_of_col) {
                        row_of_col[c] = r;
                        col_of_row[r] = c;
                        return true;
                    }
                }
            }
            false
        }
        for r in 0..n {
            let mut seen = vec![false; n];
            if !augment(r, t, cost, &mut seen, &mut col_of_row, &mut row_of_col) {
                return None;
            }
        }
        Some(col_of_row)
    };
    let (mut lo, mut hi) = (0usize, values.len());
    if hi == 0 || try_match(values[hi - 1]).is_none() {
        return None;
    }
    hi -= 1;
    while lo < hi {
        let mid = (lo + hi) / 2;
        if try_match(values[mid]).is_some() {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    try_match(values[lo]).map(|m| (values[lo], m))
}

/// Compares the roots of `Phi_n(x0, Y)` with `j(h tau0)` over the coset
/// representatives `h`, where `j(tau0) = x0`. Distances are relative to
/// `max(1, |j(h tau0)|)` and matched by bottleneck assignment.
pub fn check_mod2(phi: &ModularPolynomial, x0: &Cx, tol: f64, ctx: &QSeriesContext) -> Result<AxiomReport, AxiomError> {
    let n = phi.n();
    let p = ctx.precision();
    let reps = double_coset_reps(n)?;
    let mut report = AxiomReport {
        axiom: AxiomId::Mod2,
        params: {
            let (re, im) = x0.to_f64_pair();
            vec![
                ("n".to_string(), n.to_string()),
                ("x0_re".to_string(), format!("{re:e}")),
                ("x0_im".to_string(), format!("{im:e}")),
            ]
        },
        seed: None,
        trials: 1,
        max_residual: 0.0,
        tol,
        verdict: Verdict::Inconclusive,
        witnesses: Vec::new(),
        note: None,
    };
    let tau0 = match invert_j(x0, ctx) {
        Ok(t) => t,
        Err(e) => {
            report.note = Some(format!("inversion: {e}"));
            return Ok(report);
        }
    };
    let roots = match correspondence_fiber(phi, x0, p) {
        Ok(r) => r,
        Err(HeckeError::IllConditioned { residual }) => {
            report.note = Some(format!("fiber ill-conditioned, residual {residual:e}"));
            return Ok(report);
        }
        Err(e) => return Err(e.into()),
    };
    let mut images = Vec::with_capacity(reps.len());
    for h in hecke_images(&reps, &tau0) {
        match j(&h, ctx) {
            Ok(v) => images.push(v.value),
            Err(e) => {
                report.note = Some(format!("image: {e}"));
                return Ok(report);
            }
        }
    }
    if roots.len() != images.len() {
        report.verdict = Verdict::Fail;
        report.max_residual = f64::INFINITY;
        report.note = Some(format!("{} roots against {} cosets", roots.len(), images.len()));
        return Ok(report);
    }
    let one = Real::one(p);
    let cost: Vec<Vec<f64>> = roots
        .iter()
        .map(|r| {
            images
                .iter()
                .map(|im| {
                    let d = (r - im).abs();
                    let s = im.abs().max(one.clone());
                    (&d / &s).to_f64()
                })
                .collect()
        })
        .collect();
    let (bottleneck, matching) = bottleneck_assignment(&cost).expect("square finite matrix");
    report.max_residual = bottleneck;
    report.verdict = if bottleneck < tol { Verdict::Pass } else { Verdict::Fail };
    for (ri, &ci) in matching.iter().enumerate() {
        let mut fields = vec![("coset".to_string(), reps.reps()[ci].to_string())];
        fields.extend(cx_fields("root", &roots[ri]));
        fields.extend(cx_fields("image", &images[ci]));
        report.witnesses.push(AxiomWitness {
            label: "matched pair".to_string(),
            residual: cost[ri][ci],
            fields,
        });
    }
    Ok(report)
}

/// The special witness of `tau` must have `tau` as its exact unique fixed
/// point, and `j(tau)` must be evaluable with error below `tol` (relative to
/// `max(1, |j|)`).
pub fn check_sp(point: &CMPoint, tol: f64, ctx: &QSeriesContext) -> AxiomReport {
    let g = point.special_witness();
    let mut report = AxiomReport {
        axiom: AxiomId::Sp,
        params: vec![("tau".to_string(), point.to_string())],
        seed: None,
        trials: 1,
        max_residual: 0.0,
        tol,
        verdict: Verdict::Inconclusive,
        witnesses: Vec::new(),
        note: None,
    };
    let mut fields = vec![
        ("witness".to_string(), g.to_string()),
        ("class".to_string(), g.classify().name().to_string()),
    ];
    match g.fixed_point() {
        Ok(fp) if fp == *point => fields.push(("fixed_point".to_string(), fp.to_string())),
        Ok(fp) => {
            fields.push(("fixed_point".to_string(), fp.to_string()));
            report.verdict = Verdict::Fail;
            report.max_residual = f64::INFINITY;
            report.witnesses.push(AxiomWitness {
                label: "fixed point mismatch".to_string(),
                residual: f64::INFINITY,
                fields,
            });
            return report;
        }
        Err(e) => {
            report.verdict = Verdict::Fail;
            report.max_residual = f64::INFINITY;
            report.note = Some(e.to_string());
            return report;
        }
    }
    match j_cm(point, ctx) {
        Ok(v) => {
            let scale = v.value.abs().to_f64().max(1.0);
            let rel = v.abs_err / scale;
            fields.extend(cx_fields("j", &v.value));
            fields.push(("j_abs_err".to_string(), format!("{:e}", v.abs_err)));
            report.max_residual = rel;
            report.verdict = if rel < tol {
                Verdict::Pass
            } else {
                Verdict::Inconclusive
            };
            report.witnesses.push(AxiomWitness {
                label: "unique fixed point".to_string(),
                residual: rel,
                fields,
            });
        }
        Err(e) => {
            report.note = Some(format!("j: {e}"));
            report.witnesses.push(AxiomWitness {
                label: "unique fixed point".to_string(),
                residual: 0.0,
                fields,
            });
        }
    }
    report
}

/// `SL_2(Z)` acts transitively on `SL_2(Z) / Gamma(N)`, checked by counting
/// orbits of its image on the cosets of the image of `Gamma(N)`.
pub fn check_sf(level: u64) -> Result<AxiomReport, AxiomError> {
    let parent = enumerate_sl2_with_limit(level, SF_LEVEL_LIMIT)?;
    let h = image_at_level(&GroupDescriptor::Full, &parent)?;
    let k = image_at_level(&GroupDescriptor::Principal(level), &parent)?;
    let orbits = count_orbits(&h, &k).expect("same ambient group");
    let cosets = parent.order() / k.order();
    let verdict = if orbits == 1 { Verdict::Pass } else { Verdict::Fail };
    Ok(AxiomReport {
        axiom: AxiomId::Sf,
        params: vec![("level".to_string(), level.to_string())],
        seed: None,
        trials: 1,
        max_residual: if orbits == 1 { 0.0 } else { 1.0 },
        tol: 0.0,
        verdict,
        witnesses: vec![AxiomWitness {
            label: "orbit count".to_string(),
            residual: 0.0,
            fields: vec![
                ("cosets".to_string(), cosets.to_string()),
                ("orbits".to_string(), orbits.to_string()),
            ],
        }],
        note: None,
    })
}

/// Uniform sample of `count` points in the disc `|x0| <= radius`.
pub fn sample_disc(count: usize, radius: f64, seed: u64, precision: usize) -> Vec<Cx> {
    use rand::Rng;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let re: f64 = rng.gen_range(-radius..radius);
        let im: f64 = rng.gen_range(-radius..radius);
        if re * re + im * im <= radius * radius {
            out.push(Cx::from_f64(re, im, precision));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exec::Sequential;
    use crate::hecke::modular_polynomial;
    use num_rational::BigRational;

    fn rational(p: i64, q: i64) -> BigRational {
        BigRational::new(p.into(), q.into())
    }

    #[test]
    fn mod1_passes_and_corruption_fails() {
        let ctx = QSeriesContext::default();
        let phi2 = modular_polynomial(2).unwrap();
        let r = check_mod1(&phi2, 12, 1e-20, 42, &ctx, &Sequential);
        assert_eq!(r.verdict, Verdict::Pass, "{r:?}");
        assert!(r.max_residual < 1e-20);
        let bad = phi2.perturbed(2, 2, 1);
        let r = check_mod1(&bad, 12, 1e-6, 42, &ctx, &Sequential);
        assert_eq!(r.verdict, Verdict::Fail);
        assert_eq!(r.witnesses.len(), 12);
        let phi1 = modular_polynomial(1).unwrap();
        let r = check_mod1(&phi1, 4, 1e-20, 3, &ctx, &Sequential);
        assert_eq!(r.verdict, Verdict::Pass);
    }

    #[test]
    fn mod1_at_level_seven() {
        let ctx = QSeriesContext::default();
        let phi = modular_polynomial(7).unwrap();
        let r = check_mod1(&phi, 4, 1e-15, 1, &ctx, &Sequential);
        assert_eq!(r.verdict, Verdict::Pass, "{r:?}");
    }

    #[test]
    fn mod1_is_seed_deterministic() {
        let ctx = QSeriesContext::default();
        let phi = modular_polynomial(3).unwrap();
        let a = check_mod1(&phi, 5, 1e-6, 9, &ctx, &Sequential);
        let b = check_mod1(&phi, 5, 1e-6, 9, &ctx, &Sequential);
        assert_eq!(a, b);
    }

    fn brute_bottleneck(cost: &[Vec<f64>]) -> f64 {
        fn rec(row: usize, used: &mut Vec<bool>, cost: &[Vec<f64>], cur: f64, best: &mut f64) {
            if row == cost.len() {
                *best = best.min(cur);
                return;
            }
            for c in 0..cost.len() {
                if !used[c] {
                    used[c] = true;
                    rec(row + 1, used, cost, cur.max(cost[row][c]), best);
                    used[c] = false;
                }
            }
        }
        let mut best = f64::INFINITY;
        rec(0, &mut vec![false; cost.len()], cost, 0.0, &mut best);
        best
    }

    #[test]
    fn bottleneck_matches_permutation_search() {
        use rand::Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for n in 1..=6 {
            for _ in 0..10 {
                let cost: Vec<Vec<f64>> = (0..n).map(|_| (0..n).map(|_| rng.gen::<f64>()).collect()).collect();
                let (t, m) = bottleneck_assignment(&cost).unwrap();
                assert_eq!(t, brute_bottleneck(&cost));
                assert!(m.iter().enumerate().all(|(r, &c)| cost[r][c] <= t));
            }
        }
    }

    #[test]
    fn mod2_random_fibers() {
        let ctx = QSeriesContext::default();
        let phi = modular_polynomial(2).unwrap();
        for x0 in sample_disc(4, 5000.0, 11, ctx.precision()) {
            let r = check_mod2(&phi, &x0, 1e-4, &ctx).unwrap();
            assert_eq!(r.verdict, Verdict::Pass, "{r:?}");
            assert_eq!(r.witnesses.len(), 3);
        }
        // the corrupted polynomial has the wrong fibers
        let x0 = Cx::from_f64(1000.0, 250.0, ctx.precision());
        let r = check_mod2(&phi.perturbed(2, 2, 1), &x0, 1e-4, &ctx).unwrap();
        assert_eq!(r.verdict, Verdict::Fail);
    }

    #[test]
    fn mod2_with_double_root() {
        let ctx = QSeriesContext::default();
        let phi = modular_polynomial(2).unwrap();
        let r = check_mod2(&phi, &Cx::from_f64(1728.0, 0.0, ctx.precision()), 1e-4, &ctx).unwrap();
        assert_eq!(r.verdict, Verdict::Pass, "{r:?}");
    }

    #[test]
    fn special_points() {
        let ctx = QSeriesContext::default();
        let cases = [
            (CMPoint::i(), 1728.0),
            (CMPoint::rho(), 0.0),
            (
                CMPoint::new((-7).into(), rational(1, 2), rational(1, 2)).unwrap(),
                -3375.0,
            ),
        ];
        for (tau, want) in cases {
            let r = check_sp(&tau, 1e-10, &ctx);
            assert_eq!(r.verdict, Verdict::Pass, "{r:?}");
            let re: f64 = r.witnesses[0]
                .fields
                .iter()
                .find(|(k, _)| k == "j_re")
                .unwrap()
                .1
                .parse()
                .unwrap();
            assert!((re - want).abs() < 1e-8, "{re}");
        }
    }

    #[test]
    fn transitivity_on_finite_levels() {
        for n in 1..=12 {
            let r = check_sf(n).unwrap();
            assert_eq!(r.verdict, Verdict::Pass);
        }
        assert!(matches!(
            check_sf(13),
            Err(AxiomError::Level(CongruenceError::LevelTooLarge { .. }))
        ));
    }
}

//! Acceptance suite: one PASS/FAIL line per criterion, each with its runtime
//! budget. Run with `cargo test -p hecke-lab --test acceptance`.

use std::path::PathBuf;
use std::process::Command;
use std::time::{Duration, Instant};

use hecke_lab_core::analytic::{j, j_cm, QSeriesContext};
use hecke_lab_core::axiom::{check_mod1, check_mod2, check_sf, check_sp, sample_disc, Verdict};
use hecke_lab_core::congruence::{enumerate_sl2, image_at_level, GroupDescriptor, ModMatrix, Subgroup};
use hecke_lab_core::exec::Sequential;
use hecke_lab_core::galois::{
    certify_goursat_pair, certify_mod_p_image, count_points_exhaustive, lifting_check, standard_lifts, EllipticCurve,
    GaloisError, GoursatVerdict, ImageVerdict,
};
use hecke_lab_core::hecke::{double_coset_reps, modular_polynomial};
use hecke_lab_core::types::{count_orbits, report_for_certificate};
use hecke_lab_core::{CMPoint, NumericPoint, RatMatrix};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Check = Result<String, String>;
type Criterion = (u32, &'static str, u64, fn() -> Check);

fn ensure(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn small_primes(n: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut m = n;
    let mut p = 2;
    while p * p <= m {
        if m.is_multiple_of(p) {
            out.push(p);
            while m.is_multiple_of(p) {
                m /= p;
            }
        }
        p += 1;
    }
    if m > 1 {
        out.push(m);
    }
    out
}

fn squarefree(n: u64) -> bool {
    (2..=n).take_while(|p| p * p <= n).all(|p| !n.is_multiple_of(p * p))
}

fn c1_special_round_trip() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let discs: Vec<i64> = (1..=50).filter(|d| squarefree(*d as u64)).map(|d: i64| -d).collect();
    let mut done = 0;
    while done < 200 {
        let d = discs[rng.gen_range(0..discs.len())];
        let x = (rng.gen_range(-20..=20), rng.gen_range(1..=20));
        let y = (rng.gen_range(1..=20), rng.gen_range(1..=20));
        let tau = CMPoint::from_parts(d, x, y).map_err(|e| e.to_string())?;
        let g = tau.special_witness();
        let fp = g.fixed_point().map_err(|e| format!("{tau}: {e}"))?;
        ensure(fp == tau, format!("{tau} came back as {fp}"))?;
        done += 1;
    }
    let mut rejected = 0;
    while rejected < 200 {
        let g = if rejected % 2 == 0 {
            // hyperbolic: trace^2 > 4 det
            let m = [
                rng.gen_range(-20..=20),
                rng.gen_range(-20..=20),
                rng.gen_range(-20..=20),
                rng.gen_range(-20..=20),
            ];
            let (tr, det) = (m[0] + m[3], m[0] * m[3] - m[1] * m[2]);
            if det <= 0 || tr * tr <= 4 * det {
                continue;
            }
            RatMatrix::from_ints(m[0], m[1], m[2], m[3]).unwrap()
        } else {
            // parabolic: a conjugate of a translation
            let h = [
                rng.gen_range(-9..=9),
                rng.gen_range(-9..=9),
                rng.gen_range(-9..=9),
                rng.gen_range(-9..=9),
            ];
            if h[0] * h[3] - h[1] * h[2] <= 0 {
                continue;
            }
            let h = RatMatrix::from_ints(h[0], h[1], h[2], h[3]).unwrap();
            let t = RatMatrix::translation(rng.gen_range(1..=20));
            &(&h * &t) * &h.inverse()
        };
        ensure(g.fixed_point().is_err(), format!("{g} reported a fixed point"))?;
        rejected += 1;
    }
    Ok("200 CM points round-trip; 200 hyperbolic/parabolic rejected".into())
}

fn c2_group_orders() -> Check {
    for n in 2..=30u64 {
        let want = small_primes(n)
            .iter()
            .fold(n * n * n, |acc, p| acc / (p * p) * (p * p - 1));
        let got = enumerate_sl2(n).map_err(|e| e.to_string())?.order() as u64;
        ensure(got == want, format!("N={n}: enumerated {got}, formula {want}"))?;
    }
    Ok("2 <= N <= 30 match".into())
}

fn c3_hecke_cosets() -> Check {
    let mut count = 0;
    for n in (1..=50u64).filter(|n| squarefree(*n)) {
        let want = small_primes(n).iter().fold(n, |acc, p| acc / p * (p + 1));
        let c = double_coset_reps(n).map_err(|e| e.to_string())?;
        ensure(c.len() as u64 == want, format!("n={n}: {} reps, want {want}", c.len()))?;
        ensure(c.verify_disjoint(), format!("n={n}: cosets overlap"))?;
        count += 1;
    }
    Ok(format!("{count} squarefree n <= 50"))
}

fn c4_modular_correspondence() -> Check {
    let phi = modular_polynomial(2).map_err(|e| e.to_string())?;
    ensure(phi.is_symmetric(), "Phi_2 not symmetric")?;
    ensure(
        phi.coeff(2, 2) == (-1).into(),
        format!("X^2Y^2 coefficient {}", phi.coeff(2, 2)),
    )?;
    let ctx = QSeriesContext::default();
    let r = check_mod1(&phi, 20, 1e-6, 2024, &ctx, &Sequential);
    ensure(
        r.verdict == Verdict::Pass && r.trials == 20,
        format!("MOD1 {:?}, max {}", r.verdict, r.max_residual),
    )?;
    let x = j(&NumericPoint::from_f64(0.0, 1.0, 128).unwrap(), &ctx).map_err(|e| e.to_string())?;
    let y = j(&NumericPoint::from_f64(0.0, 2.0, 128).unwrap(), &ctx).map_err(|e| e.to_string())?;
    ensure((x.value.re.to_f64() - 1728.0).abs() < 1e-8, "j(i)")?;
    let res = phi.relative_residual(&hecke_lab_core::Cx::from_f64(1728.0, 0.0, 128), &y.value);
    ensure(res < 1e-6, format!("Phi_2(1728, j(2i)) residual {res:e}"))?;
    Ok(format!(
        "seeded max residual {:.2e}; Phi_2(1728, j(2i)) residual {res:.2e}",
        r.max_residual
    ))
}

fn c5_fiber_match() -> Check {
    let phi = modular_polynomial(2).map_err(|e| e.to_string())?;
    let ctx = QSeriesContext::default();
    let mut worst = 0.0f64;
    for (k, x0) in sample_disc(10, 5000.0, 7, ctx.precision()).iter().enumerate() {
        let r = check_mod2(&phi, x0, 1e-4, &ctx).map_err(|e| e.to_string())?;
        ensure(
            r.verdict == Verdict::Pass,
            format!("sample {k}: {:?} {:?}", r.verdict, r.note),
        )?;
        worst = worst.max(r.max_residual);
    }
    Ok(format!("10 fibers, worst relative mismatch {worst:.2e}"))
}

fn c6_special_values() -> Check {
    let ctx = QSeriesContext::default();
    for (tau, want) in [(CMPoint::i(), 1728.0), (CMPoint::rho(), 0.0)] {
        let r = check_sp(&tau, 1e-8, &ctx);
        ensure(r.verdict == Verdict::Pass, format!("{tau}: {:?}", r.verdict))?;
        let w = tau.special_witness();
        ensure(w.fixed_point().ok().as_ref() == Some(&tau), "witness")?;
        let v = j_cm(&tau, &ctx).map_err(|e| e.to_string())?;
        let (re, im) = v.value.to_f64_pair();
        ensure(
            (re - want).abs() <= 1e-8 && im.abs() <= 1e-8,
            format!("j({tau}) = {re} + {im}i"),
        )?;
    }
    Ok("j(i) = 1728, j(rho) = 0 within 1e-8".into())
}

fn c7_transitivity() -> Check {
    for n in 2..=12 {
        let r = check_sf(n).map_err(|e| e.to_string())?;
        ensure(r.verdict == Verdict::Pass, format!("N={n}"))?;
    }
    Ok("N = 2..12 single orbit".into())
}

fn naive_trace(a: [i64; 5], ell: i64) -> i64 {
    let [a1, a2, a3, a4, a6] = a.map(|v| v.rem_euclid(ell));
    let mut count = 1;
    for x in 0..ell {
        for y in 0..ell {
            let lhs = (y * y + a1 * x * y + a3 * y) % ell;
            let rhs = (x * x % ell * x + a2 * x % ell * x + a4 * x + a6) % ell;
            if lhs == rhs {
                count += 1;
            }
        }
    }
    ell + 1 - count
}

const E11: [i64; 5] = [0, -1, 1, 0, 0];
const E37: [i64; 5] = [0, 0, 1, -1, 0];

fn c8_image_dichotomy() -> Check {
    let e = EllipticCurve::from_ints(E11).map_err(|e| e.to_string())?;
    let c5 = certify_mod_p_image(&e, 5, 1000).map_err(|e| e.to_string())?;
    ensure(c5.verdict != ImageVerdict::Surjective, "mod 5 reported surjective")?;
    ensure(
        c5.verdict == ImageVerdict::ContainedInBorel && c5.borel_pattern,
        format!("mod 5: {:?}", c5.verdict),
    )?;
    ensure(c5.witnesses_valid(), "mod 5 witnesses")?;
    // the Borel evidence, from the curve directly
    let mut good = 0;
    for ell in (2..=1000u64).filter(|l| small_primes(*l) == [*l]) {
        if ell == 11 || ell == 5 {
            continue;
        }
        let a = count_points_exhaustive(&e, ell).map_err(|e| e.to_string())?;
        if ell < 200 {
            ensure(a == naive_trace(E11, ell as i64), format!("a_{ell}"))?;
        }
        ensure(
            (a - 1 - ell as i64).rem_euclid(5) == 0,
            format!("a_{ell} = {a} breaks the Borel pattern"),
        )?;
        good += 1;
    }
    let c7 = certify_mod_p_image(&e, 7, 1000).map_err(|e| e.to_string())?;
    ensure(
        c7.verdict == ImageVerdict::Surjective,
        format!("mod 7: {:?}", c7.verdict),
    )?;
    ensure(!c7.witnesses.is_empty() && c7.witnesses_valid(), "mod 7 witnesses")?;
    let ws: Vec<String> = c7
        .witnesses
        .iter()
        .map(|w| format!("{}:a_{}={}", w.class.name(), w.ell, w.a_ell))
        .collect();
    Ok(format!(
        "mod 5 Borel on {good} primes; mod 7 surjective via {}",
        ws.join(", ")
    ))
}

fn c9_goursat() -> Check {
    let e1 = EllipticCurve::from_ints(E11).map_err(|e| e.to_string())?;
    let e2 = EllipticCurve::from_ints(E37).map_err(|e| e.to_string())?;
    let c = certify_goursat_pair(&e1, &e2, 7, 1000).map_err(|e| e.to_string())?;
    ensure(c.verdict == GoursatVerdict::FullProduct, format!("{:?}", c.verdict))?;
    let (ell, a1, a2) = c.witness.ok_or("no witness")?;
    ensure(ell <= 1000, "witness prime too large")?;
    ensure(
        a1 == naive_trace(E11, ell as i64) && a2 == naive_trace(E37, ell as i64),
        "witness traces",
    )?;
    ensure(
        (a1 - a2).rem_euclid(7) != 0 && (a1 + a2).rem_euclid(7) != 0,
        "witness does not separate",
    )?;
    let d = certify_goursat_pair(&e1, &e1, 7, 1000).map_err(|e| e.to_string())?;
    ensure(
        d.verdict == GoursatVerdict::GraphPossible,
        format!("diagonal: {:?}", d.verdict),
    )?;
    Ok(format!(
        "FullProduct via ell={ell} (a={a1} vs {a2}); diagonal GraphPossible"
    ))
}

fn c10_lifting() -> Check {
    let r = lifting_check(5, &standard_lifts(5)).map_err(|e| e.to_string())?;
    ensure(r.order == 15000 && r.full, format!("order {}", r.order))?;
    let kernel: [ModMatrix; 2] = [[6, 5, 0, 21], [1, 0, 5, 1]];
    match lifting_check(5, &kernel) {
        Err(GaloisError::NotGeneratingModP { .. }) => {}
        other => return Err(format!("kernel generators gave {other:?}")),
    }
    Ok("order 15000; kernel-only generators rejected".into())
}

fn c11_types() -> Check {
    let g = enumerate_sl2(5).map_err(|e| e.to_string())?;
    let trivial = Subgroup::trivial(&g);
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..20 {
        let k = rng.gen_range(1..=3);
        let gens: Vec<ModMatrix> = (0..k).map(|_| g.element(rng.gen_range(0..g.order()))).collect();
        let h = Subgroup::generated(&g, &gens);
        let orbits = count_orbits(&h, &trivial).map_err(|e| e.to_string())?;
        ensure(
            orbits == g.order() / h.order(),
            format!("|H| = {}: {orbits} orbits", h.order()),
        )?;
    }
    let borel = image_at_level(&GroupDescriptor::Gamma0(5), &g).map_err(|e| e.to_string())?;
    let on_p1 = count_orbits(&borel, &borel).map_err(|e| e.to_string())?;
    ensure(on_p1 == 2, format!("Borel on P^1: {on_p1} orbits"))?;
    let e = EllipticCurve::from_ints(E11).map_err(|e| e.to_string())?;
    let cert = certify_mod_p_image(&e, 5, 1000).map_err(|e| e.to_string())?;
    let r = report_for_certificate(&cert).map_err(|e| e.to_string())?;
    ensure(r.lower_bound == Some(6), format!("lower bound {:?}", r.lower_bound))?;
    Ok(format!(
        "20 subgroups; Borel on P^1 = 2 orbits; lower bound 6 (conservative {:?})",
        r.conservative_lower_bound.unwrap_or(0)
    ))
}

fn c12_determinism() -> Check {
    let bin = env!("CARGO_BIN_EXE_hecke-lab");
    let cache: PathBuf = std::env::temp_dir().join(format!("hecke-lab-acceptance-{}", std::process::id()));
    let commands: Vec<Vec<&str>> = vec![
        vec!["special", "point", "--D", "-1", "--x", "0", "--y", "1"],
        vec!["special", "matrix", "[[1,1],[1,2]]"],
        vec!["hecke-cosets", "6"],
        vec!["modpoly", "3"],
        vec!["j", "0.1,1.1"],
        vec!["j", "--invert", "-3375,0"],
        vec!["axiom", "mod1", "--n", "2", "--trials", "6"],
        vec!["axiom", "mod2", "--n", "2", "--samples", "3"],
        vec!["axiom", "sp", "--D", "-7", "--x", "1/2", "--y", "1/2"],
        vec!["axiom", "sf", "--level", "6"],
        vec!["frobenius", "[0,-1,1,0,0]", "--upto", "200"],
        vec!["image", "[0,-1,1,0,0]", "--p", "5", "--upto", "1000"],
        vec!["goursat", "[0,-1,1,0,0]", "[0,0,1,-1,0]", "--p", "7", "--upto", "1000"],
        vec!["lifting", "--p", "5"],
        vec!["types", "group", "Gamma0(2)", "--levels", "2,4,8"],
        vec!["types", "curve", "[0,-1,1,0,0]", "--p", "5"],
        vec!["types", "pair", "[0,-1,1,0,0]", "[0,0,1,-1,0]", "--p", "7"],
        vec!["subgroup", "Gamma0(5)"],
        vec!["index", "Gamma0(3)", "Gamma"],
    ];
    let run = |args: &[&str], threads: &str| -> Result<(Option<i32>, Vec<u8>), String> {
        let out = Command::new(bin)
            .args(args)
            .args(["--seed", "17", "--threads", threads])
            .env("HECKE_LAB_CACHE", &cache)
            .output()
            .map_err(|e| e.to_string())?;
        Ok((out.status.code(), out.stdout))
    };
    for args in &commands {
        let a = run(args, "1")?;
        let b = run(args, "4")?;
        let c = run(args, "4")?;
        ensure(a == b && b == c, format!("{} differs across runs", args.join(" ")))?;
        ensure(
            matches!(a.0, Some(0) | Some(1)),
            format!("{}: exit {:?}", args.join(" "), a.0),
        )?;
    }
    let _ = std::fs::remove_dir_all(&cache);
    Ok(format!(
        "{} commands byte-identical across runs and 1/4 threads",
        commands.len()
    ))
}

fn main() {
    let criteria: [Criterion; 12] = [
        (1, "special-point round trip", 5, c1_special_round_trip),
        (2, "group-order law", 60, c2_group_orders),
        (3, "Hecke coset law", 10, c3_hecke_cosets),
        (4, "modular correspondence", 30, c4_modular_correspondence),
        (5, "fiber match", 30, c5_fiber_match),
        (6, "special values", 5, c6_special_values),
        (7, "finite-level transitivity", 30, c7_transitivity),
        (8, "image dichotomy", 60, c8_image_dichotomy),
        (9, "Goursat pair", 60, c9_goursat),
        (10, "lifting", 30, c10_lifting),
        (11, "type counting", 30, c11_types),
        (12, "determinism", 600, c12_determinism),
    ];
    let mut failed = 0;
    for (id, name, budget, f) in criteria {
        let start = Instant::now();
        let result = f();
        let took = start.elapsed();
        let result = match result {
            Ok(msg) if took > Duration::from_secs(budget) => Err(format!("{msg}; over the {budget} s budget")),
            r => r,
        };
        match result {
            Ok(msg) => println!("criterion {id:>2} PASS [{:>6.2} s] {name}: {msg}", took.as_secs_f64()),
            Err(msg) => {
                failed += 1;
                println!("criterion {id:>2} FAIL [{:>6.2} s] {name}: {msg}", took.as_secs_f64());
            }
        }
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
    println!("all 12 criteria passed");
}

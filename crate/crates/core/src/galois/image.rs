//! Certificates about the image of the mod-`p` representation from traces of
//! Frobenius. A maximal-subgroup class is excluded once some `ell` has a
//! characteristic polynomial `X^2 - a_ell X + ell` that no element of the
//! class can have.

use alloc::string::String;
use alloc::vec::Vec;

use crate::arith::{legendre, mod_inv};

use super::curve::{frobenius_sample, EllipticCurve, FrobeniusSample};
use super::GaloisError;
use crate::exec::Executor;

pub const SUPPORTED_PRIMES: [u64; 4] = [5, 7, 11, 13];
pub const MIN_BOUND: u64 = 1000;

/// Maximal subgroups of `GL_2(F_p)` not containing `SL_2(F_p)`, up to conjugacy.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ObstructionClass {
    Borel,
    SplitCartanNormalizer,
    NonsplitCartanNormalizer,
    Exceptional,
}

impl ObstructionClass {
    pub const ALL: [ObstructionClass; 4] = [
        ObstructionClass::Borel,
        ObstructionClass::SplitCartanNormalizer,
        ObstructionClass::NonsplitCartanNormalizer,
        ObstructionClass::Exceptional,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            ObstructionClass::Borel => "Borel",
            ObstructionClass::SplitCartanNormalizer => "SplitCartanNormalizer",
            ObstructionClass::NonsplitCartanNormalizer => "NonsplitCartanNormalizer",
            ObstructionClass::Exceptional => "Exceptional",
        }
    }

    /// Order of the intersection with `SL_2(F_p)` of the largest group in the class.
    pub fn order_in_sl2(&self, p: u64) -> u64 {
        match self {
            ObstructionClass::Borel => p * (p - 1),
            ObstructionClass::SplitCartanNormalizer => 2 * (p - 1),
            ObstructionClass::NonsplitCartanNormalizer => 2 * (p + 1),
            // preimages of A4 / S4 / A5 in SL_2, whichever is largest for p
            ObstructionClass::Exceptional => match p {
                5 => 24,
                7 => 48,
                11 => 120,
                13 => 24,
                _ => 120,
            },
        }
    }
}

/// Values of `t^2 / d` attained by elements whose image in `PGL_2(F_p)` has
/// order 1, 2, 3, 4 (and 5 when `PGL_2(F_p)` contains `A_5` as an obstruction).
pub fn exceptional_ratios(p: u64) -> &'static [u64] {
    match p {
        5 => &[0, 1, 2, 4],
        7 => &[0, 1, 2, 4],
        11 => &[0, 1, 2, 4, 5, 9],
        13 => &[0, 1, 2, 4],
        _ => &[],
    }
}

/// True when an element with trace `t` and determinant `d` (mod `p`) lies in
/// no group of the class, i.e. the pair is a witness excluding it.
pub fn excludes(class: ObstructionClass, p: u64, t: i64, d: i64) -> bool {
    let pi = p as i64;
    let t = t.rem_euclid(pi);
    let d = d.rem_euclid(pi);
    let disc = (t * t - 4 * d).rem_euclid(pi);
    let chi = legendre(disc, p);
    match class {
        ObstructionClass::Borel => chi == -1,
        ObstructionClass::SplitCartanNormalizer => chi == -1 && t != 0,
        ObstructionClass::NonsplitCartanNormalizer => chi == 1 && t != 0,
        ObstructionClass::Exceptional => {
            let Some(dinv) = mod_inv(d as u64, p) else {
                return false;
            };
            let u = (t * t).rem_euclid(pi) as u64 * dinv % p;
            !exceptional_ratios(p).contains(&u)
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CartanKind {
    Split,
    Nonsplit,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ImageVerdict {
    Surjective,
    ContainedInBorel,
    ContainedInNormalizerCartan(CartanKind),
    ExceptionalPossible,
    Inconclusive,
}

impl ImageVerdict {
    pub fn name(&self) -> &'static str {
        match self {
            ImageVerdict::Surjective => "Surjective",
            ImageVerdict::ContainedInBorel => "ContainedInBorel",
            ImageVerdict::ContainedInNormalizerCartan(CartanKind::Split) => "ContainedInNormalizerSplitCartan",
            ImageVerdict::ContainedInNormalizerCartan(CartanKind::Nonsplit) => "ContainedInNormalizerNonsplitCartan",
            ImageVerdict::ExceptionalPossible => "ExceptionalPossible",
            ImageVerdict::Inconclusive => "Inconclusive",
        }
    }

    /// The class whose containment the verdict asserts, if any.
    pub fn class(&self) -> Option<ObstructionClass> {
        match self {
            ImageVerdict::ContainedInBorel => Some(ObstructionClass::Borel),
            ImageVerdict::ContainedInNormalizerCartan(CartanKind::Split) => {
                Some(ObstructionClass::SplitCartanNormalizer)
            }
            ImageVerdict::ContainedInNormalizerCartan(CartanKind::Nonsplit) => {
                Some(ObstructionClass::NonsplitCartanNormalizer)
            }
            ImageVerdict::ExceptionalPossible => Some(ObstructionClass::Exceptional),
            _ => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Witness {
    pub class: ObstructionClass,
    pub ell: u64,
    pub a_ell: i64,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ImageCertificate {
    pub p: u64,
    pub bound: u64,
    pub verdict: ImageVerdict,
    /// First witness found for every excluded class.
    pub witnesses: Vec<Witness>,
    /// Classes no sampled prime excluded.
    pub remaining: Vec<ObstructionClass>,
    /// Every sampled `a_ell` is `1 + ell` mod `p`.
    pub borel_pattern: bool,
    pub sampled: usize,
    pub note: Option<String>,
}

impl ImageCertificate {
    /// Re-checks every witness against [`excludes`].
    pub fn witnesses_valid(&self) -> bool {
        self.witnesses
            .iter()
            .all(|w| excludes(w.class, self.p, w.a_ell, w.ell as i64))
    }
}

fn check_prime(p: u64, bound: u64) -> Result<(), GaloisError> {
    if !SUPPORTED_PRIMES.contains(&p) {
        return Err(GaloisError::UnsupportedPrime(p));
    }
    if bound < MIN_BOUND {
        return Err(GaloisError::BoundTooSmall(bound));
    }
    Ok(())
}

fn inconclusive(p: u64, bound: u64, note: &str) -> ImageCertificate {
    ImageCertificate {
        p,
        bound,
        verdict: ImageVerdict::Inconclusive,
        witnesses: Vec::new(),
        remaining: ObstructionClass::ALL.to_vec(),
        borel_pattern: false,
        sampled: 0,
        note: Some(String::from(note)),
    }
}

/// Certificate from an existing sample; `disc_divisible` marks `p | disc`.
pub fn certify_from_sample(
    sample: &FrobeniusSample,
    p: u64,
    disc_divisible: bool,
) -> Result<ImageCertificate, GaloisError> {
    check_prime(p, sample.bound)?;
    if disc_divisible {
        return Ok(inconclusive(p, sample.bound, "p divides the discriminant"));
    }
    let mut witnesses: Vec<Witness> = Vec::new();
    let mut sampled = 0;
    let mut borel_pattern = true;
    for &(ell, a) in sample.entries.iter().filter(|e| e.0 != p) {
        sampled += 1;
        if (a - 1 - ell as i64).rem_euclid(p as i64) != 0 {
            borel_pattern = false;
        }
        for class in ObstructionClass::ALL {
            if !witnesses.iter().any(|w| w.class == class) && excludes(class, p, a, ell as i64) {
                witnesses.push(Witness { class, ell, a_ell: a });
            }
        }
    }
    if sampled == 0 {
        return Ok(inconclusive(p, sample.bound, "no primes sampled"));
    }
    witnesses.sort_by_key(|w| w.class);
    let remaining: Vec<ObstructionClass> = ObstructionClass::ALL
        .into_iter()
        .filter(|c| !witnesses.iter().any(|w| w.class == *c))
        .collect();
    let verdict = match remaining.first() {
        None => ImageVerdict::Surjective,
        Some(ObstructionClass::Borel) => ImageVerdict::ContainedInBorel,
        Some(ObstructionClass::SplitCartanNormalizer) => ImageVerdict::ContainedInNormalizerCartan(CartanKind::Split),
        Some(ObstructionClass::NonsplitCartanNormalizer) => {
            ImageVerdict::ContainedInNormalizerCartan(CartanKind::Nonsplit)
        }
        Some(ObstructionClass::Exceptional) => ImageVerdict::ExceptionalPossible,
    };
    Ok(ImageCertificate {
        p,
        bound: sample.bound,
        verdict,
        witnesses,
        remaining,
        borel_pattern,
        sampled,
        note: None,
    })
}

fn disc_divisible(e: &EllipticCurve, p: u64) -> bool {
    let pb = num_bigint::BigInt::from(p);
    use num_traits::Zero;
    (e.discriminant().numer() % &pb).is_zero() || (e.discriminant().denom() % &pb).is_zero()
}

pub fn certify_mod_p_image_with<X: Executor>(
    e: &EllipticCurve,
    p: u64,
    bound: u64,
    exec: &X,
) -> Result<ImageCertificate, GaloisError> {
    check_prime(p, bound)?;
    if disc_divisible(e, p) {
        return Ok(inconclusive(p, bound, "p divides the discriminant"));
    }
    let sample = frobenius_sample(e, bound, exec);
    certify_from_sample(&sample, p, false)
}

pub fn certify_mod_p_image(e: &EllipticCurve, p: u64, bound: u64) -> Result<ImageCertificate, GaloisError> {
    certify_mod_p_image_with(e, p, bound, &crate::exec::Sequential)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GoursatVerdict {
    FullProduct,
    GraphPossible,
    Inconclusive,
}

impl GoursatVerdict {
    pub fn name(&self) -> &'static str {
        match self {
            GoursatVerdict::FullProduct => "FullProduct",
            GoursatVerdict::GraphPossible => "GraphPossible",
            GoursatVerdict::Inconclusive => "Inconclusive",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GoursatCertificate {
    pub p: u64,
    pub verdict: GoursatVerdict,
    /// `(ell, a_ell(E1), a_ell(E2))` with `a_ell(E1) != +-a_ell(E2)` mod `p`.
    pub witness: Option<(u64, i64, i64)>,
    pub first: ImageCertificate,
    pub second: ImageCertificate,
}

/// True when `a1 != +-a2` modulo `p`.
pub fn separates(p: u64, a1: i64, a2: i64) -> bool {
    let pi = p as i64;
    (a1 - a2).rem_euclid(pi) != 0 && (a1 + a2).rem_euclid(pi) != 0
}

pub fn certify_goursat_pair_with<X: Executor>(
    e1: &EllipticCurve,
    e2: &EllipticCurve,
    p: u64,
    bound: u64,
    exec: &X,
) -> Result<GoursatCertificate, GaloisError> {
    check_prime(p, bound)?;
    let s1 = frobenius_sample(e1, bound, exec);
    let s2 = frobenius_sample(e2, bound, exec);
    let first = certify_from_sample(&s1, p, disc_divisible(e1, p))?;
    let second = certify_from_sample(&s2, p, disc_divisible(e2, p))?;
    let both = first.verdict == ImageVerdict::Surjective && second.verdict == ImageVerdict::Surjective;
    if !both {
        return Ok(GoursatCertificate {
            p,
            verdict: GoursatVerdict::Inconclusive,
            witness: None,
            first,
            second,
        });
    }
    let witness = s1.entries.iter().filter(|e| e.0 != p).find_map(|&(ell, a1)| {
        let a2 = s2.trace(ell)?;
        separates(p, a1, a2).then_some((ell, a1, a2))
    });
    let verdict = if witness.is_some() {
        GoursatVerdict::FullProduct
    } else {
        GoursatVerdict::GraphPossible
    };
    Ok(GoursatCertificate {
        p,
        verdict,
        witness,
        first,
        second,
    })
}

pub fn certify_goursat_pair(
    e1: &EllipticCurve,
    e2: &EllipticCurve,
    p: u64,
    bound: u64,
) -> Result<GoursatCertificate, GaloisError> {
    certify_goursat_pair_with(e1, e2, p, bound, &crate::exec::Sequential)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn curve(s: &str) -> EllipticCurve {
        s.parse().unwrap()
    }

    #[test]
    fn eleven_a3_mod_5_and_7() {
        let e = curve("[0,-1,1,0,0]");
        let c5 = certify_mod_p_image(&e, 5, 1000).unwrap();
        assert_eq!(c5.verdict, ImageVerdict::ContainedInBorel);
        assert!(c5.borel_pattern);
        assert!(c5.witnesses_valid());
        let c7 = certify_mod_p_image(&e, 7, 1000).unwrap();
        assert_eq!(c7.verdict, ImageVerdict::Surjective);
        assert_eq!(c7.witnesses.len(), 4);
        assert!(c7.witnesses_valid());
        assert!(!c7.borel_pattern);
    }

    #[test]
    fn guards() {
        let e = curve("[0,-1,1,0,0]");
        assert_eq!(certify_mod_p_image(&e, 3, 1000), Err(GaloisError::UnsupportedPrime(3)));
        assert_eq!(certify_mod_p_image(&e, 5, 999), Err(GaloisError::BoundTooSmall(999)));
        assert_eq!(
            certify_mod_p_image(&e, 11, 1000).unwrap().verdict,
            ImageVerdict::Inconclusive
        );
    }

    #[test]
    fn goursat_pairs() {
        let e1 = curve("[0,-1,1,0,0]");
        let e2 = curve("[0,0,1,-1,0]");
        let g = certify_goursat_pair(&e1, &e2, 7, 1000).unwrap();
        assert_eq!(g.verdict, GoursatVerdict::FullProduct);
        let (ell, a1, a2) = g.witness.unwrap();
        assert!(ell <= 1000 && separates(7, a1, a2));
        let d = certify_goursat_pair(&e1, &e1, 7, 1000).unwrap();
        assert_eq!(d.verdict, GoursatVerdict::GraphPossible);
        let t = certify_goursat_pair(&e1, &e1.quadratic_twist(-1).unwrap(), 7, 1000).unwrap();
        assert_eq!(t.verdict, GoursatVerdict::GraphPossible);
    }
    type M = [i64; 4];

    fn gl2(p: i64) -> Vec<M> {
        let mut out = Vec::new();
        for a in 0..p {
            for b in 0..p {
                for c in 0..p {
                    for d in 0..p {
                        if (a * d - b * c).rem_euclid(p) != 0 {
                            out.push([a, b, c, d]);
                        }
                    }
                }
            }
        }
        out
    }

    fn mul(x: &M, y: &M, p: i64) -> M {
        [
            (x[0] * y[0] + x[1] * y[2]).rem_euclid(p),
            (x[0] * y[1] + x[1] * y[3]).rem_euclid(p),
            (x[2] * y[0] + x[3] * y[2]).rem_euclid(p),
            (x[2] * y[1] + x[3] * y[3]).rem_euclid(p),
        ]
    }

    fn tr_det(x: &M, p: i64) -> (i64, i64) {
        ((x[0] + x[3]).rem_euclid(p), (x[0] * x[3] - x[1] * x[2]).rem_euclid(p))
    }

    fn is_scalar(x: &M) -> bool {
        x[1] == 0 && x[2] == 0 && x[0] == x[3]
    }

    fn projective_order(x: &M, p: i64) -> u64 {
        let mut y = *x;
        let mut k = 1;
        while !is_scalar(&y) {
            y = mul(&y, x, p);
            k += 1;
        }
        k
    }

    fn nonsquare(p: i64) -> i64 {
        (2..p).find(|&e| legendre(e, p as u64) == -1).unwrap()
    }

    fn members(class: ObstructionClass, p: i64) -> Vec<M> {
        let eps = nonsquare(p);
        gl2(p)
            .into_iter()
            .filter(|m| match class {
                ObstructionClass::Borel => m[2] == 0,
                ObstructionClass::SplitCartanNormalizer => (m[1] == 0 && m[2] == 0) || (m[0] == 0 && m[3] == 0),
                ObstructionClass::NonsplitCartanNormalizer => {
                    let cartan = m[0] == m[3] && m[1] == (eps * m[2]).rem_euclid(p);
                    let twisted = m[0] == (-m[3]).rem_euclid(p) && m[1] == (-eps * m[2]).rem_euclid(p);
                    cartan || twisted
                }
                ObstructionClass::Exceptional => unreachable!(),
            })
            .collect()
    }

    #[test]
    fn no_class_member_is_a_witness_against_its_class() {
        for p in [5i64, 7, 11, 13] {
            for class in [
                ObstructionClass::Borel,
                ObstructionClass::SplitCartanNormalizer,
                ObstructionClass::NonsplitCartanNormalizer,
            ] {
                let ms = members(class, p);
                assert!(!ms.is_empty());
                for m in &ms {
                    let (t, d) = tr_det(m, p);
                    assert!(!excludes(class, p as u64, t, d), "p={p} {class:?} {m:?}");
                }
                // and the class is excludable by some element of GL_2
                assert!(gl2(p).iter().any(|m| {
                    let (t, d) = tr_det(m, p);
                    excludes(class, p as u64, t, d)
                }));
            }
        }
    }

    #[test]
    fn exceptional_ratios_match_projective_orders() {
        for p in [5i64, 7, 11, 13] {
            let allowed: &[u64] = if p % 5 == 1 || p % 5 == 4 {
                &[1, 2, 3, 4, 5]
            } else {
                &[1, 2, 3, 4]
            };
            for m in gl2(p) {
                let ord = projective_order(&m, p);
                let (t, d) = tr_det(&m, p);
                if allowed.contains(&ord) {
                    assert!(!excludes(ObstructionClass::Exceptional, p as u64, t, d), "p={p} {m:?}");
                } else if ord != p as u64 {
                    assert!(excludes(ObstructionClass::Exceptional, p as u64, t, d), "p={p} {m:?}");
                }
            }
        }
    }

    fn closure_capped(gens: &[M], p: i64, cap: usize) -> Option<Vec<M>> {
        let mut seen = alloc::collections::BTreeSet::new();
        let e = [1, 0, 0, 1];
        seen.insert(e);
        let mut queue = alloc::collections::VecDeque::from([e]);
        while let Some(x) = queue.pop_front() {
            for g in gens {
                let y = mul(&x, g, p);
                if seen.insert(y) {
                    if seen.len() > cap {
                        return None;
                    }
                    queue.push_back(y);
                }
            }
        }
        Some(seen.into_iter().collect())
    }

    #[test]
    fn octahedral_subgroup_mod_5_has_no_witness() {
        // the preimage in GL_2(F_5) of an S4 in PGL_2(F_5) has order 96 = 24 * 4
        let p = 5;
        let all = gl2(p);
        let scalar = [2, 0, 0, 2];
        let mut found = None;
        'search: for (i, x) in all.iter().enumerate() {
            if projective_order(x, p) != 4 {
                continue;
            }
            for y in &all[i + 1..] {
                if projective_order(y, p) != 3 {
                    continue;
                }
                if let Some(h) = closure_capped(&[*x, *y, scalar], p, 96) {
                    if h.len() == 96 {
                        found = Some(h);
                        break 'search;
                    }
                }
            }
        }
        let h = found.expect("S4 preimage exists");
        for m in &h {
            let (t, d) = tr_det(m, p);
            assert!(!excludes(ObstructionClass::Exceptional, 5, t, d));
        }
        let in_sl2 = h.iter().filter(|m| tr_det(m, p).1 == 1).count() as u64;
        assert_eq!(in_sl2, ObstructionClass::Exceptional.order_in_sl2(5));
        for class in [
            ObstructionClass::Borel,
            ObstructionClass::SplitCartanNormalizer,
            ObstructionClass::NonsplitCartanNormalizer,
        ] {
            let in_sl2 = members(class, p).iter().filter(|m| tr_det(m, p).1 == 1).count() as u64;
            assert_eq!(in_sl2, class.order_in_sl2(5), "{class:?}");
        }
    }
}

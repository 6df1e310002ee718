//! Elliptic curves over `Q` in long Weierstrass form and their Frobenius traces.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};

use crate::arith::{factor_u64, is_prime, legendre, mod_inv, primes_up_to, sqrt_mod};
use crate::exec::Executor;
use crate::linear::{format_rational, parse_rational};

use super::GaloisError;

/// Largest prime handled by exhaustive counting in [`count_points`].
pub const EXHAUSTIVE_LIMIT: u64 = 100_000;
/// Largest prime handled at all.
pub const BSGS_LIMIT: u64 = 10_000_000;

/// `y^2 + a1 xy + a3 y = x^3 + a2 x^2 + a4 x + a6`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EllipticCurve {
    a: [BigRational; 5],
    disc: BigRational,
}

fn q(v: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(v))
}

impl EllipticCurve {
    pub fn new(a: [BigRational; 5]) -> Result<Self, GaloisError> {
        let disc = Self::discriminant_of(&a);
        if disc.is_zero() {
            return Err(GaloisError::Singular);
        }
        Ok(EllipticCurve { a, disc })
    }

    pub fn from_ints(a: [i64; 5]) -> Result<Self, GaloisError> {
        Self::new(a.map(q))
    }

    fn b_invariants(a: &[BigRational; 5]) -> [BigRational; 4] {
        let [a1, a2, a3, a4, a6] = a;
        let b2 = a1 * a1 + q(4) * a2;
        let b4 = q(2) * a4 + a1 * a3;
        let b6 = a3 * a3 + q(4) * a6;
        let b8 = a1 * a1 * a6 + q(4) * a2 * a6 - a1 * a3 * a4 + a2 * a3 * a3 - a4 * a4;
        [b2, b4, b6, b8]
    }

    fn discriminant_of(a: &[BigRational; 5]) -> BigRational {
        let [b2, b4, b6, b8] = Self::b_invariants(a);
        -(&b2 * &b2 * &b8) - q(8) * &b4 * &b4 * &b4 - q(27) * &b6 * &b6 + q(9) * &b2 * &b4 * &b6
    }

    pub fn coefficients(&self) -> &[BigRational; 5] {
        &self.a
    }

    pub fn discriminant(&self) -> &BigRational {
        &self.disc
    }

    /// `(c4, c6)`.
    pub fn c_invariants(&self) -> (BigRational, BigRational) {
        let [b2, b4, b6, _] = Self::b_invariants(&self.a);
        let c4 = &b2 * &b2 - q(24) * &b4;
        let c6 = -(&b2 * &b2 * &b2) + q(36) * &b2 * &b4 - q(216) * &b6;
        (c4, c6)
    }

    /// `y^2 = x^3 - 27 c4 D^2 x - 54 c6 D^3`, the twist by `Q(sqrt D)`.
    pub fn quadratic_twist(&self, d: i64) -> Result<Self, GaloisError> {
        let (c4, c6) = self.c_invariants();
        let d = q(d);
        let a4 = -(q(27) * c4 * &d * &d);
        let a6 = -(q(54) * c6 * &d * &d * &d);
        Self::new([q(0), q(0), q(0), a4, a6])
    }

    /// True when `ell` divides a coefficient denominator or the discriminant.
    /// The model is used as given, so a non-minimal model can report primes
    /// of good reduction as bad.
    pub fn is_bad_prime(&self, ell: u64) -> bool {
        self.reduce(ell).is_none()
    }

    /// Coefficients modulo `ell`, if the model has good reduction there.
    fn reduce(&self, ell: u64) -> Option<[u64; 5]> {
        let m = BigInt::from(ell);
        let mut out = [0u64; 5];
        for (o, c) in out.iter_mut().zip(&self.a) {
            let den = c.denom().mod_floor(&m).to_u64()?;
            let inv = mod_inv(den, ell)?;
            let num = c.numer().mod_floor(&m).to_u64()?;
            *o = (num as u128 * inv as u128 % ell as u128) as u64;
        }
        let disc_num = self.disc.numer().mod_floor(&m);
        let disc_den = self.disc.denom().mod_floor(&m);
        if disc_num.is_zero() || disc_den.is_zero() {
            return None;
        }
        Some(out)
    }
}

impl fmt::Display for EllipticCurve {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for (i, c) in self.a.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{}", format_rational(c))?;
        }
        write!(f, "]")
    }
}

impl FromStr for EllipticCurve {
    type Err = GaloisError;

    /// Parses `[a1,a2,a3,a4,a6]` with integer or `p/q` entries.
    fn from_str(s: &str) -> Result<Self, GaloisError> {
        let compact: String = s.chars().filter(|c| !c.is_whitespace()).collect();
        let err = || GaloisError::Parse(s.to_string());
        let inner = compact
            .strip_prefix('[')
            .and_then(|r| r.strip_suffix(']'))
            .ok_or_else(err)?;
        let parts: Vec<&str> = inner.split(',').collect();
        if parts.len() != 5 {
            return Err(err());
        }
        let mut a: [BigRational; 5] = Default::default();
        for (slot, p) in a.iter_mut().zip(parts) {
            *slot = parse_rational(p).map_err(|_| err())?;
        }
        Self::new(a)
    }
}

fn mulm(x: u64, y: u64, m: u64) -> u64 {
    (x as u128 * y as u128 % m as u128) as u64
}

fn addm(x: u64, y: u64, m: u64) -> u64 {
    ((x as u128 + y as u128) % m as u128) as u64
}

/// `a_ell` by summing Legendre symbols over all `x` (brute force over `F_2`).
pub fn count_points_exhaustive(e: &EllipticCurve, ell: u64) -> Result<i64, GaloisError> {
    if !is_prime(ell) {
        return Err(GaloisError::NotPrime(ell));
    }
    let [a1, a2, a3, a4, a6] = e.reduce(ell).ok_or(GaloisError::BadReduction(ell))?;
    if ell == 2 {
        let mut count = 1i64;
        for x in 0..2u64 {
            for y in 0..2u64 {
                let lhs = (y * y + a1 * x * y + a3 * y) % 2;
                let rhs = (x * x * x + a2 * x * x + a4 * x + a6) % 2;
                if lhs == rhs {
                    count += 1;
                }
            }
        }
        return Ok(3 - count);
    }
    // (2y + a1 x + a3)^2 = 4x^3 + b2 x^2 + 2 b4 x + b6
    let b2 = addm(mulm(a1, a1, ell), mulm(4, a2, ell), ell);
    let b4 = addm(mulm(2, a4, ell), mulm(a1, a3, ell), ell);
    let b6 = addm(mulm(a3, a3, ell), mulm(4, a6, ell), ell);
    let mut sum = 0i64;
    for x in 0..ell {
        let mut f = mulm(4, x, ell);
        f = addm(f, b2, ell);
        f = mulm(f, x, ell);
        f = addm(f, mulm(2, b4, ell), ell);
        f = mulm(f, x, ell);
        f = addm(f, b6, ell);
        sum += legendre(f as i64, ell) as i64;
    }
    Ok(-sum)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Pt {
    Inf,
    Affine(u64, u64),
}

struct Short {
    a: u64,
    b: u64,
    p: u64,
}

impl Short {
    fn neg(&self, pt: Pt) -> Pt {
        match pt {
            Pt::Inf => Pt::Inf,
            Pt::Affine(x, y) => Pt::Affine(x, (self.p - y) % self.p),
        }
    }

    fn add(&self, u: Pt, v: Pt) -> Pt {
        let p = self.p;
        match (u, v) {
            (Pt::Inf, w) | (w, Pt::Inf) => w,
            (Pt::Affine(x1, y1), Pt::Affine(x2, y2)) => {
                let lambda = if x1 == x2 {
                    if addm(y1, y2, p) == 0 {
                        return Pt::Inf;
                    }
                    let num = addm(mulm(3, mulm(x1, x1, p), p), self.a, p);
                    mulm(num, mod_inv(mulm(2, y1, p), p).expect("nonzero"), p)
                } else {
                    let num = addm(y2, p - y1, p);
                    let den = addm(x2, p - x1, p);
                    mulm(num, mod_inv(den, p).expect("nonzero"), p)
                };
                let x3 = addm(mulm(lambda, lambda, p), 2 * p - x1 - x2, p);
                let y3 = addm(mulm(lambda, addm(x1, p - x3, p), p), p - y1, p);
                Pt::Affine(x3, y3)
            }
        }
    }

    fn mul(&self, mut k: u64, pt: Pt) -> Pt {
        let mut acc = Pt::Inf;
        let mut base = pt;
        while k > 0 {
            if k & 1 == 1 {
                acc = self.add(acc, base);
            }
            base = self.add(base, base);
            k >>= 1;
        }
        acc
    }

    fn point_with_x(&self, x: u64) -> Option<Pt> {
        let p = self.p;
        let rhs = addm(addm(mulm(mulm(x, x, p), x, p), mulm(self.a, x, p), p), self.b, p);
        sqrt_mod(rhs, p).map(|y| Pt::Affine(x, y))
    }

    /// Order of `pt`, knowing it divides some integer in `[lo, hi]`.
    fn order(&self, pt: Pt, lo: u64, hi: u64) -> Option<u64> {
        let width = hi - lo + 1;
        let m = (width as f64).sqrt() as u64 + 1;
        let mut table = BTreeMap::new();
        let mut jp = Pt::Inf;
        for j in 0..m {
            if j > 0 && jp == Pt::Inf {
                return Some(j);
            }
            table.entry(jp).or_insert(j);
            jp = self.add(jp, pt);
        }
        let step = self.mul(m, pt);
        let mut r = self.mul(lo, pt);
        for i in 0..=m {
            if let Some(&j) = table.get(&self.neg(r)) {
                let mut ord = lo + i * m + j;
                for (qf, _) in factor_u64(ord) {
                    while ord.is_multiple_of(qf) && self.mul(ord / qf, pt) == Pt::Inf {
                        ord /= qf;
                    }
                }
                return Some(ord);
            }
            r = self.add(r, step);
        }
        None
    }
}

impl PartialOrd for Pt {
    fn partial_cmp(&self, other: &Self) -> Option<core::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Pt {
    fn cmp(&self, other: &Self) -> core::cmp::Ordering {
        let key = |p: &Pt| match p {
            Pt::Inf => (0u8, 0u64, 0u64),
            Pt::Affine(x, y) => (1, *x, *y),
        };
        key(self).cmp(&key(other))
    }
}

/// `a_ell` by baby-step giant-step on point orders (Mestre's approach), for
/// `ell >= 5`; falls back to exhaustive counting if the group order stays
/// ambiguous.
pub fn count_points_bsgs(e: &EllipticCurve, ell: u64) -> Result<i64, GaloisError> {
    if !is_prime(ell) {
        return Err(GaloisError::NotPrime(ell));
    }
    if e.is_bad_prime(ell) {
        return Err(GaloisError::BadReduction(ell));
    }
    if ell < 5 {
        return count_points_exhaustive(e, ell);
    }
    let (c4, c6) = e.c_invariants();
    let m = BigInt::from(ell);
    let red = |c: &BigRational| -> u64 {
        let num = c.numer().mod_floor(&m).to_u64().expect("residue");
        let den = c.denom().mod_floor(&m).to_u64().expect("residue");
        mulm(num, mod_inv(den, ell).expect("good prime"), ell)
    };
    let a = mulm(ell - 27 % ell, red(&c4), ell);
    let b = mulm(ell - 54 % ell, red(&c6), ell);
    let curve = Short { a, b, p: ell };
    let s = (4 * ell as u128).isqrt_u64();
    let (lo, hi) = (ell + 1 - s, ell + 1 + s);
    let mut l = 1u64;
    let mut tried = 0;
    for x in 0..ell {
        let Some(pt) = curve.point_with_x(x) else { continue };
        let Some(ord) = curve.order(pt, lo, hi) else { continue };
        l = l.lcm(&ord);
        let first = lo.div_ceil(l) * l;
        if first <= hi && first + l > hi {
            return Ok(ell as i64 + 1 - first as i64);
        }
        tried += 1;
        if tried >= 24 {
            break;
        }
    }
    count_points_exhaustive(e, ell)
}

trait IsqrtU64 {
    fn isqrt_u64(self) -> u64;
}

impl IsqrtU64 for u128 {
    fn isqrt_u64(self) -> u64 {
        let mut r = libm::sqrt(self as f64) as u128;
        while r * r > self {
            r -= 1;
        }
        while (r + 1) * (r + 1) <= self {
            r += 1;
        }
        r as u64
    }
}

/// `a_ell = ell + 1 - #E(F_ell)`, exhaustively up to [`EXHAUSTIVE_LIMIT`] and
/// by BSGS up to [`BSGS_LIMIT`].
pub fn count_points(e: &EllipticCurve, ell: u64) -> Result<i64, GaloisError> {
    if ell > BSGS_LIMIT {
        return Err(GaloisError::PrimeTooLarge(ell));
    }
    if ell <= EXHAUSTIVE_LIMIT {
        count_points_exhaustive(e, ell)
    } else {
        count_points_bsgs(e, ell)
    }
}

/// Traces of Frobenius at all primes of good reduction up to `bound`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FrobeniusSample {
    pub bound: u64,
    pub entries: Vec<(u64, i64)>,
}

impl FrobeniusSample {
    pub fn trace(&self, ell: u64) -> Option<i64> {
        self.entries
            .binary_search_by_key(&ell, |e| e.0)
            .ok()
            .map(|i| self.entries[i].1)
    }
}

pub fn frobenius_sample<X: Executor>(e: &EllipticCurve, bound: u64, exec: &X) -> FrobeniusSample {
    let primes: Vec<u64> = primes_up_to(bound.min(BSGS_LIMIT))
        .into_iter()
        .filter(|&l| !e.is_bad_prime(l))
        .collect();
    let traces = exec.map(&primes, |&l| count_points(e, l).expect("good prime in range"));
    FrobeniusSample {
        bound,
        entries: primes.into_iter().zip(traces).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exec::Sequential;

    fn curve(s: &str) -> EllipticCurve {
        s.parse().unwrap()
    }

    #[test]
    fn discriminants() {
        assert_eq!(curve("[0,-1,1,0,0]").discriminant(), &q(-11));
        assert_eq!(curve("[0,0,1,-1,0]").discriminant(), &q(37));
        assert_eq!(curve("[0,0,0,1,1]").discriminant(), &q(-496));
        assert_eq!("[0,0,0,0,0]".parse::<EllipticCurve>(), Err(GaloisError::Singular));
        assert_eq!(curve("[0,-1,1,0,0]").to_string(), "[0,-1,1,0,0]");
        assert_eq!(curve("[0, 1/2, 0, 0, 3]").to_string(), "[0,1/2,0,0,3]");
    }

    #[test]
    fn small_counts() {
        let e = curve("[0,0,0,1,1]");
        assert_eq!(count_points(&e, 5), Ok(-3));
        assert_eq!(count_points(&e, 2), Err(GaloisError::BadReduction(2)));
        assert_eq!(count_points(&e, 31), Err(GaloisError::BadReduction(31)));
        let e11 = curve("[0,-1,1,0,0]");
        assert_eq!(count_points(&e11, 11), Err(GaloisError::BadReduction(11)));
        // brute-force points on the long model at a few primes
        for ell in [2u64, 3, 5, 7, 13] {
            let mut n = 1i64;
            for x in 0..ell {
                for y in 0..ell {
                    let lhs = (y * y + y) % ell;
                    let rhs = (x * x * x + ell * ell - x * x) % ell;
                    if lhs == rhs {
                        n += 1;
                    }
                }
            }
            assert_eq!(count_points(&e11, ell), Ok(ell as i64 + 1 - n));
        }
    }

    #[test]
    fn bsgs_agrees_with_exhaustive() {
        for s in ["[0,-1,1,0,0]", "[0,0,1,-1,0]", "[1,0,0,-1/4,3]"] {
            let e = curve(s);
            for ell in primes_up_to(3000).into_iter().filter(|&l| l >= 5 && !e.is_bad_prime(l)) {
                assert_eq!(
                    count_points_bsgs(&e, ell),
                    count_points_exhaustive(&e, ell),
                    "{s} ell={ell}"
                );
            }
        }
        let e = curve("[0,-1,1,0,0]");
        for ell in [100_003u64, 100_019, 1_000_003] {
            let a = count_points(&e, ell).unwrap();
            assert!((a * a) as u64 <= 4 * ell);
            assert_eq!(Ok(a), count_points_exhaustive(&e, ell));
        }
    }

    #[test]
    fn twist_flips_traces() {
        let e = curve("[0,-1,1,0,0]");
        let t = e.quadratic_twist(-1).unwrap();
        for ell in primes_up_to(300).into_iter().filter(|&l| l > 3 && !e.is_bad_prime(l)) {
            let a = count_points(&e, ell).unwrap();
            let b = count_points(&t, ell).unwrap();
            assert_eq!(b, legendre(-1, ell) as i64 * a, "ell={ell}");
        }
    }

    #[test]
    fn sample_skips_bad_primes() {
        let e = curve("[0,-1,1,0,0]");
        let s = frobenius_sample(&e, 50, &Sequential);
        assert!(s.trace(11).is_none());
        assert_eq!(s.trace(5), Some(1));
        assert_eq!(s.entries.len(), 14);
    }
}

//! Exact arithmetic for `GL_2(Q)^+` acting on the upper half-plane.
//!
//! Matrices have exact rational entries and positive determinant. Imaginary
//! quadratic points `x + y*sqrt(D)` are acted on exactly; floating points are
//! acted on at their working precision. Elliptic elements have a unique fixed
//! point in the upper half-plane and every CM point arises that way.

use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;
use core::ops::Mul;
use core::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::arith::squarefree_split;
use crate::numeric::{Cx, NumericPoint, Real};

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum LinearError {
    #[error("determinant must be positive")]
    NonPositiveDeterminant,
    #[error("element is not elliptic ({0:?}); it has no unique fixed point in the upper half-plane")]
    NotElliptic(ElementClass),
    #[error("discriminant must be a negative squarefree integer, got {0}")]
    BadDiscriminant(BigInt),
    #[error("imaginary coefficient must be positive")]
    NotInUpperHalfPlane,
    #[error("squarefree part of {0} is out of reach of trial division")]
    FactorisationTooLarge(BigInt),
    #[error("|g*tau - tau| = {distance:e} is within a decade of the tolerance {tol:e}")]
    PrecisionInsufficient { distance: f64, tol: f64 },
    #[error("cannot parse {0:?}")]
    Parse(String),
}

pub fn parse_rational(s: &str) -> Result<BigRational, LinearError> {
    let s = s.trim();
    let err = || LinearError::Parse(s.to_string());
    match s.split_once('/') {
        Some((n, d)) => {
            let n: BigInt = n.trim().parse().map_err(|_| err())?;
            let d: BigInt = d.trim().parse().map_err(|_| err())?;
            if d.is_zero() {
                return Err(err());
            }
            Ok(BigRational::new(n, d))
        }
        None => Ok(BigRational::from_integer(s.parse().map_err(|_| err())?)),
    }
}

/// `p/q`, or just `p` for integers.
pub fn format_rational(q: &BigRational) -> String {
    if q.denom().is_one() {
        q.numer().to_string()
    } else {
        alloc::format!("{}/{}", q.numer(), q.denom())
    }
}

fn rat(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

/// A 2x2 rational matrix `[[a, b], [c, d]]` with `ad - bc > 0`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct RatMatrix {
    a: BigRational,
    b: BigRational,
    c: BigRational,
    d: BigRational,
}

impl RatMatrix {
    pub fn new(a: BigRational, b: BigRational, c: BigRational, d: BigRational) -> Result<Self, LinearError> {
        let m = RatMatrix { a, b, c, d };
        if m.det().is_positive() {
            Ok(m)
        } else {
            Err(LinearError::NonPositiveDeterminant)
        }
    }

    pub fn from_ints(a: i64, b: i64, c: i64, d: i64) -> Result<Self, LinearError> {
        Self::new(rat(a), rat(b), rat(c), rat(d))
    }

    pub fn identity() -> Self {
        RatMatrix {
            a: rat(1),
            b: rat(0),
            c: rat(0),
            d: rat(1),
        }
    }

    /// `S = [[0,-1],[1,0]]`.
    pub fn s() -> Self {
        RatMatrix {
            a: rat(0),
            b: rat(-1),
            c: rat(1),
            d: rat(0),
        }
    }

    /// `T = [[1,1],[0,1]]`.
    pub fn t() -> Self {
        RatMatrix {
            a: rat(1),
            b: rat(1),
            c: rat(0),
            d: rat(1),
        }
    }

    pub fn translation(n: i64) -> Self {
        RatMatrix {
            a: rat(1),
            b: rat(n),
            c: rat(0),
            d: rat(1),
        }
    }

    pub fn diag(a: i64, d: i64) -> Result<Self, LinearError> {
        Self::from_ints(a, 0, 0, d)
    }

    pub fn entries(&self) -> [&BigRational; 4] {
        [&self.a, &self.b, &self.c, &self.d]
    }

    pub fn a(&self) -> &BigRational {
        &self.a
    }
    pub fn b(&self) -> &BigRational {
        &self.b
    }
    pub fn c(&self) -> &BigRational {
        &self.c
    }
    pub fn d(&self) -> &BigRational {
        &self.d
    }

    pub fn det(&self) -> BigRational {
        &self.a * &self.d - &self.b * &self.c
    }

    pub fn trace(&self) -> BigRational {
        &self.a + &self.d
    }

    /// `tr^2 - 4 det`.
    pub fn discriminant(&self) -> BigRational {
        let t = self.trace();
        &t * &t - self.det() * rat(4)
    }

    pub fn inverse(&self) -> Self {
        let det = self.det();
        RatMatrix {
            a: &self.d / &det,
            b: -(&self.b / &det),
            c: -(&self.c / &det),
            d: &self.a / &det,
        }
    }

    /// Multiplies by a positive rational scalar.
    pub fn scale(&self, lambda: &BigRational) -> Result<Self, LinearError> {
        if !lambda.is_positive() {
            return Err(LinearError::NonPositiveDeterminant);
        }
        Ok(RatMatrix {
            a: &self.a * lambda,
            b: &self.b * lambda,
            c: &self.c * lambda,
            d: &self.d * lambda,
        })
    }

    pub fn is_scalar(&self) -> bool {
        self.b.is_zero() && self.c.is_zero() && self.a == self.d
    }

    pub fn is_integral(&self) -> bool {
        self.entries().iter().all(|e| e.is_integer())
    }

    pub fn is_identity(&self) -> bool {
        *self == Self::identity()
    }

    /// Integer entries, if integral.
    pub fn to_integers(&self) -> Option<[BigInt; 4]> {
        self.is_integral().then(|| {
            [
                self.a.to_integer(),
                self.b.to_integer(),
                self.c.to_integer(),
                self.d.to_integer(),
            ]
        })
    }

    pub fn to_i64s(&self) -> Option<[i64; 4]> {
        use num_traits::ToPrimitive;
        let [a, b, c, d] = self.to_integers()?;
        Some([a.to_i64()?, b.to_i64()?, c.to_i64()?, d.to_i64()?])
    }

    /// Positive rescaling to coprime integer entries (the projective representative).
    pub fn normalized(&self) -> Self {
        let den = self.entries().iter().fold(BigInt::one(), |acc, e| acc.lcm(e.denom()));
        let ints: Vec<BigInt> = self
            .entries()
            .iter()
            .map(|e| (*e * BigRational::from_integer(den.clone())).to_integer())
            .collect();
        let g = ints.iter().fold(BigInt::zero(), |acc, e| acc.gcd(e));
        let f = |e: &BigInt| BigRational::from_integer(e / &g);
        RatMatrix {
            a: f(&ints[0]),
            b: f(&ints[1]),
            c: f(&ints[2]),
            d: f(&ints[3]),
        }
    }

    pub fn classify(&self) -> ElementClass {
        let disc = self.discriminant();
        if self.is_scalar() {
            return ElementClass::Scalar { discriminant: disc };
        }
        if disc.is_negative() {
            ElementClass::Elliptic { discriminant: disc }
        } else if disc.is_zero() {
            ElementClass::Parabolic { discriminant: disc }
        } else {
            ElementClass::Hyperbolic { discriminant: disc }
        }
    }

    /// Acts on an exact CM point; the discriminant is preserved.
    pub fn act_cm(&self, tau: &CMPoint) -> CMPoint {
        let dd = BigRational::from_integer(tau.d.clone());
        // numerator (a x + b) + a y sqrt D, denominator (c x + d) + c y sqrt D
        let nu = &self.a * &tau.x + &self.b;
        let nv = &self.a * &tau.y;
        let mu = &self.c * &tau.x + &self.d;
        let mv = &self.c * &tau.y;
        let norm = &mu * &mu - &dd * &mv * &mv;
        let x = (&nu * &mu - &dd * &nv * &mv) / &norm;
        let y = (&tau.y * self.det()) / &norm;
        CMPoint { d: tau.d.clone(), x, y }
    }

    /// Acts on a floating point at its working precision.
    pub fn act_numeric(&self, tau: &NumericPoint) -> NumericPoint {
        let p = tau.precision();
        let z = self.act_cx(tau.value(), p);
        // |c tau + d|^2 > 0 and det > 0, so Im(g tau) = det Im(tau) / |c tau + d|^2 > 0
        NumericPoint::new(z, p).expect("Mobius action preserves the upper half-plane")
    }

    pub(crate) fn act_cx(&self, z: &Cx, p: usize) -> Cx {
        let [a, b, c, d] = self.real_entries(p);
        let num = Cx::new(&a * &z.re + b, &a * &z.im);
        let den = Cx::new(&c * &z.re + d, &c * &z.im);
        &num / &den
    }

    pub(crate) fn real_entries(&self, p: usize) -> [Real; 4] {
        [
            Real::from_rational(&self.a, p),
            Real::from_rational(&self.b, p),
            Real::from_rational(&self.c, p),
            Real::from_rational(&self.d, p),
        ]
    }

    /// The unique fixed point in the upper half-plane of an elliptic element.
    pub fn fixed_point(&self) -> Result<CMPoint, LinearError> {
        let class = self.classify();
        let disc = match &class {
            ElementClass::Elliptic { discriminant } => discriminant.clone(),
            _ => return Err(LinearError::NotElliptic(class)),
        };
        // g tau = tau  <=>  c tau^2 + (d - a) tau - b = 0, and c != 0 since bc < 0
        let two_c = &self.c * rat(2);
        let x = (&self.a - &self.d) / &two_c;
        // sqrt(disc) for disc = n/m: sqrt(n m)/m = s sqrt(D)/m
        let nm = disc.numer() * disc.denom();
        let split = squarefree_split(&nm).ok_or(LinearError::FactorisationTooLarge(nm.clone()))?;
        let y = BigRational::new(split.square_root, disc.denom().clone()) / two_c.abs();
        Ok(CMPoint {
            d: split.squarefree,
            x,
            y,
        })
    }
}

impl Mul for &RatMatrix {
    type Output = RatMatrix;
    fn mul(self, o: &RatMatrix) -> RatMatrix {
        RatMatrix {
            a: &self.a * &o.a + &self.b * &o.c,
            b: &self.a * &o.b + &self.b * &o.d,
            c: &self.c * &o.a + &self.d * &o.c,
            d: &self.c * &o.b + &self.d * &o.d,
        }
    }
}

impl Mul for RatMatrix {
    type Output = RatMatrix;
    fn mul(self, o: RatMatrix) -> RatMatrix {
        &self * &o
    }
}

impl fmt::Display for RatMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "[[{},{}],[{},{}]]",
            format_rational(&self.a),
            format_rational(&self.b),
            format_rational(&self.c),
            format_rational(&self.d)
        )
    }
}

impl FromStr for RatMatrix {
    type Err = LinearError;

    /// Parses `[[a,b],[c,d]]` with entries integers or `p/q`.
    fn from_str(s: &str) -> Result<Self, LinearError> {
        let compact: String = s.chars().filter(|c| !c.is_whitespace()).collect();
        let err = || LinearError::Parse(s.to_string());
        let inner = compact
            .strip_prefix("[[")
            .and_then(|r| r.strip_suffix("]]"))
            .ok_or_else(err)?;
        let (row1, row2) = inner.split_once("],[").ok_or_else(err)?;
        let parse_row = |r: &str| -> Result<(BigRational, BigRational), LinearError> {
            let (x, y) = r.split_once(',').ok_or_else(err)?;
            Ok((parse_rational(x)?, parse_rational(y)?))
        };
        let (a, b) = parse_row(row1)?;
        let (c, d) = parse_row(row2)?;
        RatMatrix::new(a, b, c, d)
    }
}

/// Conjugacy data of `g`: the sign of `tr^2 - 4 det` decides the class.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum ElementClass {
    Elliptic { discriminant: BigRational },
    Parabolic { discriminant: BigRational },
    Hyperbolic { discriminant: BigRational },
    Scalar { discriminant: BigRational },
}

impl ElementClass {
    pub fn discriminant(&self) -> &BigRational {
        match self {
            ElementClass::Elliptic { discriminant }
            | ElementClass::Parabolic { discriminant }
            | ElementClass::Hyperbolic { discriminant }
            | ElementClass::Scalar { discriminant } => discriminant,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            ElementClass::Elliptic { .. } => "Elliptic",
            ElementClass::Parabolic { .. } => "Parabolic",
            ElementClass::Hyperbolic { .. } => "Hyperbolic",
            ElementClass::Scalar { .. } => "Scalar",
        }
    }
}

/// An imaginary quadratic point `x + y*sqrt(D)` with `D < 0` squarefree and
/// `y > 0`, where `sqrt(D) = i*sqrt(|D|)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct CMPoint {
    d: BigInt,
    x: BigRational,
    y: BigRational,
}

impl CMPoint {
    pub fn new(d: BigInt, x: BigRational, y: BigRational) -> Result<Self, LinearError> {
        if !d.is_negative() {
            return Err(LinearError::BadDiscriminant(d));
        }
        match squarefree_split(&d) {
            Some(sp) if sp.square_root.is_one() => {}
            _ => return Err(LinearError::BadDiscriminant(d)),
        }
        if !y.is_positive() {
            return Err(LinearError::NotInUpperHalfPlane);
        }
        Ok(CMPoint { d, x, y })
    }

    pub fn from_parts(d: i64, x: (i64, i64), y: (i64, i64)) -> Result<Self, LinearError> {
        Self::new(
            BigInt::from(d),
            BigRational::new(x.0.into(), x.1.into()),
            BigRational::new(y.0.into(), y.1.into()),
        )
    }

    /// `x + y sqrt(d)` with `x`, `y` given as rational literals such as `-3/4`.
    pub fn parse(d: i64, x: &str, y: &str) -> Result<Self, LinearError> {
        Self::new(BigInt::from(d), parse_rational(x)?, parse_rational(y)?)
    }

    /// `i`.
    pub fn i() -> Self {
        CMPoint {
            d: BigInt::from(-1),
            x: rat(0),
            y: rat(1),
        }
    }

    /// `(1 + sqrt(-3))/2`.
    pub fn rho() -> Self {
        let half = BigRational::new(1.into(), 2.into());
        CMPoint {
            d: BigInt::from(-3),
            x: half.clone(),
            y: half,
        }
    }

    pub fn discriminant(&self) -> &BigInt {
        &self.d
    }
    pub fn x(&self) -> &BigRational {
        &self.x
    }
    pub fn y(&self) -> &BigRational {
        &self.y
    }

    /// Monic minimal polynomial `z^2 + B z + C` over Q, returned as `(B, C)`.
    pub fn minimal_polynomial(&self) -> (BigRational, BigRational) {
        let dd = BigRational::from_integer(self.d.clone());
        let b = -(&self.x * rat(2));
        let c = &self.x * &self.x - dd * &self.y * &self.y;
        (b, c)
    }

    /// An elliptic element with this point as its unique fixed point, built
    /// from the companion matrix `[[0, -C], [1, B]]` of the minimal polynomial
    /// and normalised to coprime integer entries.
    pub fn special_witness(&self) -> RatMatrix {
        let (b, c) = self.minimal_polynomial();
        // det = C = |tau|^2 > 0
        RatMatrix {
            a: rat(0),
            b: -c,
            c: rat(1),
            d: b,
        }
        .normalized()
    }

    pub fn to_numeric(&self, precision: usize) -> NumericPoint {
        let p = precision;
        let root = Real::from_bigint(&(-&self.d), p).sqrt();
        let z = Cx::new(Real::from_rational(&self.x, p), Real::from_rational(&self.y, p) * root);
        NumericPoint::new(z, p).expect("CM points lie in the upper half-plane")
    }
}

impl fmt::Display for CMPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} + {}*sqrt({})",
            format_rational(&self.x),
            format_rational(&self.y),
            self.d
        )
    }
}

/// Outcome for one candidate in [`stabilizer_is_trivial`].
#[derive(Clone, Debug, PartialEq)]
pub enum StabilizerEntry {
    /// Scalars act trivially and are not informative.
    SkippedScalar,
    Moved {
        distance: f64,
    },
    Fixed {
        distance: f64,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub struct StabilizerReport {
    pub entries: Vec<(RatMatrix, StabilizerEntry)>,
    pub tol: f64,
}

impl StabilizerReport {
    /// True when every non-scalar candidate moves the point.
    pub fn trivial(&self) -> bool {
        self.entries
            .iter()
            .all(|(_, e)| !matches!(e, StabilizerEntry::Fixed { .. }))
    }
}

/// Numeric Hodge-genericity probe: records which non-scalar candidates move
/// `tau` by more than `tol`. Distances in `[tol/10, tol]` are refused.
pub fn stabilizer_is_trivial(tau: &NumericPoint, gs: &[RatMatrix], tol: f64) -> Result<StabilizerReport, LinearError> {
    let mut entries = Vec::with_capacity(gs.len());
    for g in gs {
        if g.is_scalar() {
            entries.push((g.clone(), StabilizerEntry::SkippedScalar));
            continue;
        }
        let moved = g.act_numeric(tau);
        let distance = (moved.value() - tau.value()).abs().to_f64();
        if distance >= tol / 10.0 && distance <= tol {
            return Err(LinearError::PrecisionInsufficient { distance, tol });
        }
        let entry = if distance > tol {
            StabilizerEntry::Moved { distance }
        } else {
            StabilizerEntry::Fixed { distance }
        };
        entries.push((g.clone(), entry));
    }
    Ok(StabilizerReport { entries, tol })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(a: i64, b: i64, c: i64, d: i64) -> RatMatrix {
        RatMatrix::from_ints(a, b, c, d).unwrap()
    }

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    #[test]
    fn act_examples() {
        let i = CMPoint::i();
        assert_eq!(
            m(1, 1, 0, 1).act_cm(&i),
            CMPoint::from_parts(-1, (1, 1), (1, 1)).unwrap()
        );
        assert_eq!(m(0, -1, 1, 0).act_cm(&i), i);
        // 2 * (1 + sqrt(-3))/2 = 1 + sqrt(-3)
        let doubled = m(2, 0, 0, 1).act_cm(&CMPoint::rho());
        assert_eq!(doubled, CMPoint::from_parts(-3, (1, 1), (1, 1)).unwrap());
    }

    #[test]
    fn classify_examples() {
        assert_eq!(
            m(0, -1, 1, 0).classify(),
            ElementClass::Elliptic { discriminant: q(-4, 1) }
        );
        assert_eq!(
            m(1, 1, 0, 1).classify(),
            ElementClass::Parabolic { discriminant: q(0, 1) }
        );
        assert_eq!(
            m(2, 0, 0, 1).classify(),
            ElementClass::Hyperbolic { discriminant: q(1, 1) }
        );
        assert_eq!(m(3, 0, 0, 3).classify().name(), "Scalar");
    }

    #[test]
    fn fixed_point_examples() {
        assert_eq!(m(0, -1, 1, 0).fixed_point().unwrap(), CMPoint::i());
        assert_eq!(m(0, -1, 1, -1).fixed_point().unwrap(), CMPoint::rho());
        assert!(matches!(
            m(2, 0, 0, 1).fixed_point(),
            Err(LinearError::NotElliptic(ElementClass::Hyperbolic { .. }))
        ));
        // negative lower-left entry picks the other root
        assert_eq!(m(0, 1, -1, 0).fixed_point().unwrap(), CMPoint::i());
    }

    #[test]
    fn witness_examples() {
        assert_eq!(CMPoint::i().special_witness(), m(0, -1, 1, 0));
        assert_eq!(CMPoint::rho().special_witness(), m(0, -1, 1, -1));
        let tau = CMPoint::from_parts(-5, (2, 1), (1, 1)).unwrap();
        let g = tau.special_witness();
        assert_eq!(g, m(0, -9, 1, -4));
        assert_eq!(g.fixed_point().unwrap(), tau);
    }

    #[test]
    fn witness_normalisation_clears_denominators() {
        let tau = CMPoint::from_parts(-7, (1, 3), (2, 5)).unwrap();
        let g = tau.special_witness();
        assert!(g.is_integral());
        let [a, b, c, d] = g.to_integers().unwrap();
        let content = a.gcd(&b).gcd(&c).gcd(&d);
        assert!(content.is_one());
        assert_eq!(g.fixed_point().unwrap(), tau);
    }

    #[test]
    fn cm_point_validation() {
        assert!(CMPoint::from_parts(-4, (0, 1), (1, 1)).is_err());
        assert!(CMPoint::from_parts(3, (0, 1), (1, 1)).is_err());
        assert_eq!(
            CMPoint::from_parts(-3, (0, 1), (-1, 1)).unwrap_err(),
            LinearError::NotInUpperHalfPlane
        );
    }

    #[test]
    fn matrix_text_round_trip() {
        let g: RatMatrix = "[[1, -1/2],[0, 3]]".parse().unwrap();
        assert_eq!(g.to_string(), "[[1,-1/2],[0,3]]");
        assert_eq!(g.to_string().parse::<RatMatrix>().unwrap(), g);
        assert_eq!(
            "[[0,1],[1,0]]".parse::<RatMatrix>().unwrap_err(),
            LinearError::NonPositiveDeterminant
        );
        assert!(matches!("[[0,1],[1]]".parse::<RatMatrix>(), Err(LinearError::Parse(_))));
    }

    #[test]
    fn stabilizer_probe() {
        let tau = NumericPoint::from_f64(0.3, 1.7, 128).unwrap();
        let gens = [RatMatrix::s(), RatMatrix::t(), RatMatrix::t().inverse()];
        let rep = stabilizer_is_trivial(&tau, &gens, 1e-20).unwrap();
        assert!(rep.trivial());

        let i = CMPoint::i().to_numeric(128);
        let rep = stabilizer_is_trivial(&i, &[RatMatrix::s()], 1e-20).unwrap();
        assert!(!rep.trivial());

        let rep = stabilizer_is_trivial(&tau, &[RatMatrix::identity()], 1e-20).unwrap();
        assert_eq!(rep.entries[0].1, StabilizerEntry::SkippedScalar);
        assert!(rep.trivial());
    }

    #[test]
    fn stabilizer_refuses_borderline_distance() {
        let tau = NumericPoint::from_f64(0.0, 1.0, 128).unwrap();
        // T^(1/10^6)-ish move: a translation by 1e-6 sits inside [tol/10, tol] for tol = 2e-6
        let g = RatMatrix::new(q(1, 1), q(1, 1_000_000), q(0, 1), q(1, 1)).unwrap();
        assert!(matches!(
            stabilizer_is_trivial(&tau, &[g], 2e-6),
            Err(LinearError::PrecisionInsufficient { .. })
        ));
    }
}

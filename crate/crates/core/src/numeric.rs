//! Arbitrary-precision real and complex scalars.
//!
//! `Real` wraps an `astro_float::BigFloat` and carries its working precision;
//! binary operations run at the larger of the two operand precisions.

use core::cmp::Ordering;
use core::fmt;
use core::ops::{Add, Div, Mul, Neg, Sub};

use astro_float::{BigFloat, Consts, RoundingMode, Sign};
use num_bigint::{BigInt, Sign as BigSign};
use num_rational::BigRational;

const RM: RoundingMode = RoundingMode::ToEven;

/// Smallest precision accepted anywhere in the numeric layer.
pub const MIN_PRECISION: usize = 64;

pub(crate) fn consts() -> Consts {
    Consts::new().expect("astro-float constant cache")
}

#[derive(Clone)]
pub struct Real {
    v: BigFloat,
    p: usize,
}

impl fmt::Debug for Real {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:e}", self.to_f64())
    }
}

impl Real {
    pub fn from_f64(x: f64, p: usize) -> Self {
        Real {
            v: BigFloat::from_f64(x, p),
            p,
        }
    }

    pub fn from_i64(x: i64, p: usize) -> Self {
        Real {
            v: BigFloat::from_i64(x, p),
            p,
        }
    }

    pub fn zero(p: usize) -> Self {
        Self::from_i64(0, p)
    }

    pub fn one(p: usize) -> Self {
        Self::from_i64(1, p)
    }

    pub fn from_bigint(n: &BigInt, p: usize) -> Self {
        let (sign, digits) = n.to_u64_digits();
        let base = Real::from_f64(18446744073709551616.0, p);
        let mut acc = Self::zero(p);
        for d in digits.iter().rev() {
            acc = acc * base.clone()
                + Real {
                    v: BigFloat::from_u64(*d, p),
                    p,
                };
        }
        if sign == BigSign::Minus {
            -acc
        } else {
            acc
        }
    }

    pub fn from_rational(q: &BigRational, p: usize) -> Self {
        Self::from_bigint(q.numer(), p) / Self::from_bigint(q.denom(), p)
    }

    pub fn precision(&self) -> usize {
        self.p
    }

    /// Re-rounds to precision `p`.
    pub fn with_precision(&self, p: usize) -> Self {
        let mut v = self.v.clone();
        let _ = v.set_precision(p, RM);
        Real { v, p }
    }

    pub fn pi(p: usize) -> Self {
        let mut cc = consts();
        Real { v: cc.pi(p, RM), p }
    }

    pub fn abs(&self) -> Self {
        Real {
            v: self.v.abs(),
            p: self.p,
        }
    }

    pub fn sqrt(&self) -> Self {
        Real {
            v: self.v.sqrt(self.p, RM),
            p: self.p,
        }
    }

    pub fn exp(&self) -> Self {
        let mut cc = consts();
        Real {
            v: self.v.exp(self.p, RM, &mut cc),
            p: self.p,
        }
    }

    pub fn ln(&self) -> Self {
        let mut cc = consts();
        Real {
            v: self.v.ln(self.p, RM, &mut cc),
            p: self.p,
        }
    }

    pub fn sin_cos(&self) -> (Self, Self) {
        let mut cc = consts();
        let s = self.v.sin(self.p, RM, &mut cc);
        let c = self.v.cos(self.p, RM, &mut cc);
        (Real { v: s, p: self.p }, Real { v: c, p: self.p })
    }

    pub fn atan2(y: &Real, x: &Real) -> Real {
        let p = y.p.max(x.p);
        let pi = Real::pi(p);
        if x.is_zero() {
            let half = pi / Real::from_i64(2, p);
            return if y.is_negative() { -half } else { half };
        }
        let mut cc = consts();
        let ratio = (y.clone() / x.clone()).v;
        let base = Real {
            v: ratio.atan(p, RM, &mut cc),
            p,
        };
        if x.is_positive() {
            base
        } else if y.is_negative() {
            base - pi
        } else {
            base + pi
        }
    }

    /// Nearest integer, ties away from zero.
    pub fn round_to_i64(&self) -> i64 {
        libm::round(self.to_f64()) as i64
    }

    pub fn floor_to_i64(&self) -> i64 {
        let f = libm::floor(self.to_f64()) as i64;
        // f64 rounding can be off by one right at an integer boundary
        let fi = Real::from_i64(f, self.p);
        if fi > *self {
            f - 1
        } else if Real::from_i64(f + 1, self.p) <= *self {
            f + 1
        } else {
            f
        }
    }

    pub fn is_zero(&self) -> bool {
        self.v.is_zero()
    }

    pub fn is_positive(&self) -> bool {
        !self.v.is_zero() && self.v.is_positive()
    }

    pub fn is_negative(&self) -> bool {
        !self.v.is_zero() && self.v.is_negative()
    }

    pub fn is_finite(&self) -> bool {
        !self.v.is_nan() && !self.v.is_inf()
    }

    /// Nearest `f64` (truncated mantissa; adequate for reporting and tolerances).
    pub fn to_f64(&self) -> f64 {
        if self.v.is_nan() {
            return f64::NAN;
        }
        if self.v.is_inf_pos() {
            return f64::INFINITY;
        }
        if self.v.is_inf_neg() {
            return f64::NEG_INFINITY;
        }
        match self.v.as_raw_parts() {
            None => 0.0,
            Some((words, _, sign, exp, _)) => {
                if words.iter().all(|&w| w == 0) {
                    return 0.0;
                }
                let n = words.len();
                let hi = words[n - 1] as f64;
                let lo = if n >= 2 { words[n - 2] as f64 } else { 0.0 };
                // value = 0.m * 2^exp with m the full mantissa
                let m = hi * libm::ldexp(1.0, -64) + lo * libm::ldexp(1.0, -128);
                let x = libm::ldexp(m, exp);
                if sign == Sign::Neg {
                    -x
                } else {
                    x
                }
            }
        }
    }

    pub fn max(self, other: Self) -> Self {
        if self >= other {
            self
        } else {
            other
        }
    }
}

impl PartialEq for Real {
    fn eq(&self, other: &Self) -> bool {
        self.partial_cmp(other) == Some(Ordering::Equal)
    }
}

impl PartialOrd for Real {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        self.v.cmp(&other.v).map(|s| s.cmp(&0))
    }
}

macro_rules! real_binop {
    ($tr:ident, $m:ident) => {
        impl $tr for Real {
            type Output = Real;
            fn $m(self, o: Real) -> Real {
                let p = self.p.max(o.p);
                Real {
                    v: self.v.$m(&o.v, p, RM),
                    p,
                }
            }
        }
        impl<'a> $tr<&'a Real> for &'a Real {
            type Output = Real;
            fn $m(self, o: &'a Real) -> Real {
                let p = self.p.max(o.p);
                Real {
                    v: self.v.$m(&o.v, p, RM),
                    p,
                }
            }
        }
    };
}

real_binop!(Add, add);
real_binop!(Sub, sub);
real_binop!(Mul, mul);
real_binop!(Div, div);

impl Neg for Real {
    type Output = Real;
    fn neg(self) -> Real {
        Real {
            v: self.v.neg(),
            p: self.p,
        }
    }
}

/// Complex number over [`Real`].
#[derive(Clone, Debug, PartialEq)]
pub struct Cx {
    pub re: Real,
    pub im: Real,
}

impl Cx {
    pub fn new(re: Real, im: Real) -> Self {
        Cx { re, im }
    }

    pub fn from_f64(re: f64, im: f64, p: usize) -> Self {
        Cx::new(Real::from_f64(re, p), Real::from_f64(im, p))
    }

    pub fn real(re: Real) -> Self {
        let p = re.precision();
        Cx::new(re, Real::zero(p))
    }

    pub fn zero(p: usize) -> Self {
        Cx::from_f64(0.0, 0.0, p)
    }

    pub fn one(p: usize) -> Self {
        Cx::from_f64(1.0, 0.0, p)
    }

    pub fn precision(&self) -> usize {
        self.re.precision().max(self.im.precision())
    }

    pub fn with_precision(&self, p: usize) -> Self {
        Cx::new(self.re.with_precision(p), self.im.with_precision(p))
    }

    pub fn conj(&self) -> Self {
        Cx::new(self.re.clone(), -self.im.clone())
    }

    pub fn norm_sqr(&self) -> Real {
        &self.re * &self.re + &self.im * &self.im
    }

    pub fn abs(&self) -> Real {
        self.norm_sqr().sqrt()
    }

    pub fn scale(&self, s: &Real) -> Self {
        Cx::new(&self.re * s, &self.im * s)
    }

    pub fn inv(&self) -> Self {
        let n = self.norm_sqr();
        Cx::new(&self.re / &n, -(&self.im / &n))
    }

    pub fn exp(&self) -> Self {
        let r = self.re.exp();
        let (s, c) = self.im.sin_cos();
        Cx::new(&r * &c, &r * &s)
    }

    /// Principal logarithm.
    pub fn ln(&self) -> Self {
        Cx::new(self.abs().ln(), Real::atan2(&self.im, &self.re))
    }

    pub fn powi(&self, mut n: u32) -> Self {
        let mut base = self.clone();
        let mut acc = Cx::one(self.precision());
        while n > 0 {
            if n & 1 == 1 {
                acc = &acc * &base;
            }
            base = &base * &base;
            n >>= 1;
        }
        acc
    }

    pub fn to_f64_pair(&self) -> (f64, f64) {
        (self.re.to_f64(), self.im.to_f64())
    }

    pub fn is_finite(&self) -> bool {
        self.re.is_finite() && self.im.is_finite()
    }
}

impl<'a> Add<&'a Cx> for &'a Cx {
    type Output = Cx;
    fn add(self, o: &'a Cx) -> Cx {
        Cx::new(&self.re + &o.re, &self.im + &o.im)
    }
}

impl<'a> Sub<&'a Cx> for &'a Cx {
    type Output = Cx;
    fn sub(self, o: &'a Cx) -> Cx {
        Cx::new(&self.re - &o.re, &self.im - &o.im)
    }
}

impl<'a> Mul<&'a Cx> for &'a Cx {
    type Output = Cx;
    fn mul(self, o: &'a Cx) -> Cx {
        Cx::new(&self.re * &o.re - &self.im * &o.im, &self.re * &o.im + &self.im * &o.re)
    }
}

impl<'a> Div<&'a Cx> for &'a Cx {
    type Output = Cx;
    fn div(self, o: &'a Cx) -> Cx {
        let n = o.norm_sqr();
        let re = &self.re * &o.re + &self.im * &o.im;
        let im = &self.im * &o.re - &self.re * &o.im;
        Cx::new(&re / &n, &im / &n)
    }
}

macro_rules! cx_owned_binop {
    ($tr:ident, $m:ident) => {
        impl $tr for Cx {
            type Output = Cx;
            fn $m(self, o: Cx) -> Cx {
                (&self).$m(&o)
            }
        }
    };
}

cx_owned_binop!(Add, add);
cx_owned_binop!(Sub, sub);
cx_owned_binop!(Mul, mul);
cx_owned_binop!(Div, div);

impl Neg for Cx {
    type Output = Cx;
    fn neg(self) -> Cx {
        Cx::new(-self.re, -self.im)
    }
}

/// A floating point of the upper half-plane with an explicit working precision.
#[derive(Clone, Debug, PartialEq)]
pub struct NumericPoint {
    z: Cx,
    precision: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, thiserror::Error)]
pub enum PointError {
    #[error("imaginary part must be positive")]
    NotInUpperHalfPlane,
    #[error("precision {0} bits is below the minimum of 64")]
    PrecisionTooLow(usize),
}

impl NumericPoint {
    pub fn new(z: Cx, precision: usize) -> Result<Self, PointError> {
        if precision < MIN_PRECISION {
            return Err(PointError::PrecisionTooLow(precision));
        }
        if !z.im.is_positive() {
            return Err(PointError::NotInUpperHalfPlane);
        }
        Ok(NumericPoint {
            z: z.with_precision(precision),
            precision,
        })
    }

    pub fn from_f64(re: f64, im: f64, precision: usize) -> Result<Self, PointError> {
        Self::new(Cx::from_f64(re, im, precision.max(MIN_PRECISION)), precision)
    }

    pub fn value(&self) -> &Cx {
        &self.z
    }

    pub fn re(&self) -> &Real {
        &self.z.re
    }

    pub fn im(&self) -> &Real {
        &self.z.im
    }

    pub fn precision(&self) -> usize {
        self.precision
    }

    pub fn into_value(self) -> Cx {
        self.z
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bigint_round_trip_through_real() {
        let n: BigInt = "157464000000000".parse().unwrap();
        assert_eq!(Real::from_bigint(&n, 128).to_f64(), 157464000000000.0);
        let m: BigInt = "-340282366920938463463374607431768211456".parse().unwrap();
        assert_eq!(Real::from_bigint(&m, 128).to_f64(), -3.402823669209385e38);
    }

    #[test]
    fn exp_is_accurate_beyond_double() {
        let p = 192;
        let e = Real::one(p).exp();
        let digits: BigInt = "2718281828459045235360287471352662497757".parse().unwrap();
        let scale: BigInt = BigInt::from(10).pow(39);
        let exact = Real::from_bigint(&digits, p) / Real::from_bigint(&scale, p);
        let err = (e - exact).abs().to_f64();
        assert!(err < 1e-38, "err {err}");
    }

    #[test]
    fn complex_division_inverts_multiplication() {
        let p = 128;
        let a = Cx::from_f64(1.0, 2.0, p);
        let b = Cx::from_f64(-0.3, 0.7, p);
        let back = &(&a * &b) / &b;
        assert!((&back - &a).abs().to_f64() < 1e-35);
    }

    #[test]
    fn atan2_quadrants() {
        let p = 64;
        let cases = [(1.0, 1.0), (1.0, -1.0), (-1.0, -1.0), (-1.0, 1.0), (1.0, 0.0)];
        for (y, x) in cases {
            let got = Real::atan2(&Real::from_f64(y, p), &Real::from_f64(x, p)).to_f64();
            assert!((got - libm::atan2(y, x)).abs() < 1e-15);
        }
    }

    #[test]
    fn floor_handles_integers_and_negatives() {
        assert_eq!(Real::from_f64(2.0, 64).floor_to_i64(), 2);
        assert_eq!(Real::from_f64(-0.5, 64).floor_to_i64(), -1);
        assert_eq!(Real::from_f64(3.999, 64).floor_to_i64(), 3);
    }

    #[test]
    fn point_rejects_lower_half_plane_and_low_precision() {
        assert_eq!(
            NumericPoint::from_f64(0.0, -1.0, 64).unwrap_err(),
            PointError::NotInUpperHalfPlane
        );
        assert_eq!(
            NumericPoint::from_f64(0.0, 1.0, 53).unwrap_err(),
            PointError::PrecisionTooLow(53)
        );
    }
}

//! Exact integer Laurent series in `q` with tracked truncation, and the
//! expansion of `j`.

use alloc::vec;
use alloc::vec::Vec;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Zero};

/// A Laurent series known exactly for exponents in `val..top`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Laurent {
    val: i64,
    top: i64,
    coeffs: Vec<BigInt>,
}

/// Stands in for "no truncation" on exact finite series.
pub const EXACT: i64 = i64::MAX / 4;

impl Laurent {
    pub fn new(val: i64, coeffs: Vec<BigInt>, top: i64) -> Self {
        let mut s = Laurent { val, top, coeffs };
        s.trim();
        s
    }

    pub fn constant(c: BigInt) -> Self {
        Laurent::new(0, vec![c], EXACT)
    }

    pub fn zero(top: i64) -> Self {
        Laurent {
            val: top,
            top,
            coeffs: Vec::new(),
        }
    }

    fn trim(&mut self) {
        let keep = (self.top - self.val).max(0) as usize;
        if self.coeffs.len() > keep {
            self.coeffs.truncate(keep);
        }
        let lead = self.coeffs.iter().take_while(|c| c.is_zero()).count();
        if lead > 0 {
            self.coeffs.drain(..lead);
            self.val += lead as i64;
        }
        while self.coeffs.last().is_some_and(|c| c.is_zero()) {
            self.coeffs.pop();
        }
        if self.coeffs.is_empty() {
            self.val = self.top;
        }
    }

    /// Lowest exponent with a nonzero coefficient (`top` for the zero series).
    pub fn valuation(&self) -> i64 {
        self.val
    }

    /// Coefficients are exact below this exponent.
    pub fn top(&self) -> i64 {
        self.top
    }

    pub fn coeff(&self, e: i64) -> BigInt {
        debug_assert!(e < self.top, "coefficient beyond truncation");
        if e < self.val {
            return BigInt::zero();
        }
        self.coeffs.get((e - self.val) as usize).cloned().unwrap_or_default()
    }

    /// True when every known coefficient vanishes.
    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn truncate(&self, top: i64) -> Self {
        Laurent::new(self.val, self.coeffs.clone(), top.min(self.top))
    }

    pub fn add(&self, other: &Laurent) -> Laurent {
        let top = self.top.min(other.top);
        let val = self.val.min(other.val).min(top);
        let end = (self.val + self.coeffs.len() as i64)
            .max(other.val + other.coeffs.len() as i64)
            .min(top);
        let mut out = vec![BigInt::zero(); (end - val).max(0) as usize];
        for (src, sv) in [(&self.coeffs, self.val), (&other.coeffs, other.val)] {
            for (i, c) in src.iter().enumerate() {
                let idx = (sv + i as i64 - val) as usize;
                if idx < out.len() {
                    out[idx] += c;
                }
            }
        }
        Laurent::new(val, out, top)
    }

    pub fn neg(&self) -> Laurent {
        Laurent {
            val: self.val,
            top: self.top,
            coeffs: self.coeffs.iter().map(|c| -c).collect(),
        }
    }

    pub fn sub(&self, other: &Laurent) -> Laurent {
        self.add(&other.neg())
    }

    pub fn scale(&self, k: &BigInt) -> Laurent {
        Laurent::new(self.val, self.coeffs.iter().map(|c| c * k).collect(), self.top)
    }

    /// Divides every coefficient by `k`, which must divide all of them.
    pub fn div_exact(&self, k: &BigInt) -> Option<Laurent> {
        let mut out = Vec::with_capacity(self.coeffs.len());
        for c in &self.coeffs {
            let (q, r) = c.div_rem(k);
            if !r.is_zero() {
                return None;
            }
            out.push(q);
        }
        Some(Laurent {
            val: self.val,
            top: self.top,
            coeffs: out,
        })
    }

    pub fn mul(&self, other: &Laurent) -> Laurent {
        let top = (self.top + other.val).min(other.top + self.val).min(EXACT);
        let val = self.val + other.val;
        if self.is_zero() || other.is_zero() || val >= top {
            return Laurent::zero(top);
        }
        let len = ((top - val) as usize).min(self.coeffs.len() + other.coeffs.len() - 1);
        let mut out = vec![BigInt::zero(); len];
        for (i, a) in self.coeffs.iter().enumerate() {
            if i >= len {
                break;
            }
            for (k, b) in other.coeffs.iter().enumerate() {
                if i + k >= len {
                    break;
                }
                out[i + k] += a * b;
            }
        }
        Laurent::new(val, out, top)
    }

    /// Substitutes `q -> q^a`.
    pub fn dilate(&self, a: i64) -> Laurent {
        let mut out = vec![BigInt::zero(); (self.coeffs.len().max(1) - 1) * a as usize + 1];
        for (i, c) in self.coeffs.iter().enumerate() {
            out[i * a as usize] = c.clone();
        }
        let top = if self.top >= EXACT { EXACT } else { self.top * a };
        Laurent::new(self.val * a, out, top)
    }
}

/// Power series `f mod q^len` (increasing degree) helpers.
fn series_mul(a: &[BigInt], b: &[BigInt], len: usize) -> Vec<BigInt> {
    let mut out = vec![BigInt::zero(); len];
    for (i, x) in a.iter().enumerate().take(len) {
        if x.is_zero() {
            continue;
        }
        for (k, y) in b.iter().enumerate().take(len - i) {
            out[i + k] += x * y;
        }
    }
    out
}

/// Inverse of a power series with constant term 1.
fn series_inv_unit(a: &[BigInt], len: usize) -> Vec<BigInt> {
    debug_assert!(a[0].is_one());
    let mut out = vec![BigInt::zero(); len];
    out[0] = BigInt::one();
    for n in 1..len {
        let mut s = BigInt::zero();
        for k in 1..=n.min(a.len() - 1) {
            s += &a[k] * &out[n - k];
        }
        out[n] = -s;
    }
    out
}

fn sigma(n: usize, k: u32) -> BigInt {
    let mut s = BigInt::zero();
    for d in 1..=n {
        if n.is_multiple_of(d) {
            s += BigInt::from(d).pow(k);
        }
    }
    s
}

/// `q * j(q) mod q^len`, i.e. the coefficients of `j` shifted by one.
pub fn q_times_j(len: usize) -> Vec<BigInt> {
    let mut e4 = vec![BigInt::zero(); len];
    e4[0] = BigInt::one();
    for (n, c) in e4.iter_mut().enumerate().skip(1) {
        *c = sigma(n, 3) * 240;
    }
    // prod (1 - q^n) by the pentagonal number theorem, then its 24th power
    let mut eta = vec![BigInt::zero(); len];
    for k in 0i64.. {
        let mut any = false;
        for g in [k * (3 * k - 1) / 2, k * (3 * k + 1) / 2] {
            if (g as usize) < len {
                any = true;
                if k == 0 && g == 0 && !eta[0].is_zero() {
                    continue;
                }
                eta[g as usize] = if k % 2 == 0 { BigInt::one() } else { -BigInt::one() };
            }
        }
        if !any {
            break;
        }
    }
    let e2 = series_mul(&eta, &eta, len);
    let e3 = series_mul(&e2, &eta, len);
    let e6 = series_mul(&e3, &e3, len);
    let e12 = series_mul(&e6, &e6, len);
    let prod = series_mul(&e12, &e12, len);
    let e4sq = series_mul(&e4, &e4, len);
    let e4cube = series_mul(&e4sq, &e4, len);
    series_mul(&e4cube, &series_inv_unit(&prod, len), len)
}

/// Coefficients `c(-1), c(0), ..., c(count-2)` of `j = sum c(m) q^m`.
pub fn j_coefficients(count: usize) -> Vec<BigInt> {
    q_times_j(count)
}

/// `j^k` for `k = 0..=kmax` as Laurent series known below exponent `top`.
pub fn j_powers(kmax: usize, top: i64) -> Vec<Laurent> {
    let len = (top + kmax as i64).max(1) as usize;
    let f = q_times_j(len);
    let mut out = Vec::with_capacity(kmax + 1);
    let mut pow = vec![BigInt::zero(); len];
    pow[0] = BigInt::one();
    out.push(Laurent::constant(BigInt::one()));
    for k in 1..=kmax {
        pow = series_mul(&pow, &f, len);
        // q^-k * pow, exact below exponent len - k
        out.push(Laurent::new(-(k as i64), pow.clone(), len as i64 - k as i64));
    }
    out
}

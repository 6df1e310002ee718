//! Hecke double cosets of determinant `n` and the classical modular
//! polynomials `Phi_n(X, Y)` relating `j(tau)` and `j(n tau)`.
//!
//! `Phi_n` is built exactly: the power sums `sum_h j(h tau)^k` over the coset
//! representatives are integer Laurent series in `q`, Newton's identities give
//! the elementary symmetric functions, and each of those is recognised as a
//! polynomial in `j` by peeling off leading terms. No rounding is involved.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt::Write as _;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};

use crate::arith::{dedekind_psi, is_squarefree};
use crate::linear::RatMatrix;
use crate::numeric::{Cx, Real};
use crate::qseries::{j_powers, Laurent};

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum HeckeError {
    #[error("n = {0} is not squarefree")]
    NotSquarefree(u64),
    #[error("n = {0} is outside the supported range")]
    OutOfRange(u64),
    #[error("q-series depth {depth} is insufficient")]
    PrecisionExhausted { depth: usize },
    #[error("elementary symmetric function {k} is not a polynomial in j")]
    RecognitionFailed { k: usize },
    #[error("Phi_{0} is not computed here; load it from a cache file")]
    NotComputable(u64),
    #[error("root residual {residual:e} above tolerance")]
    IllConditioned { residual: f64 },
    #[error("cache format: {0}")]
    Cache(String),
}

/// Largest `n` accepted by [`double_coset_reps`].
pub const MAX_COSET_N: u64 = 50;
/// Largest `n` for which [`modular_polynomial`] computes from scratch.
pub const MAX_COMPUTE_N: u64 = 7;
/// Number of coefficients beyond the constant term that must vanish after
/// recognition.
pub const VERIFY_DEPTH: i64 = 16;
pub const DEFAULT_DEPTH: usize = 64;

/// Representatives `(a, b; 0, d)` with `ad = n`, `0 <= b < d` of the left
/// cosets `SL_2(Z) h` making up the integral matrices of determinant `n`.
#[derive(Clone, Debug, PartialEq)]
pub struct CosetDecomposition {
    n: u64,
    reps: Vec<RatMatrix>,
}

impl CosetDecomposition {
    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn reps(&self) -> &[RatMatrix] {
        &self.reps
    }

    pub fn len(&self) -> usize {
        self.reps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.reps.is_empty()
    }

    /// Exact pairwise check that `h_i h_j^-1`, scaled to coprime integers, is
    /// never in `SL_2(Z)` for `i != j`.
    pub fn verify_disjoint(&self) -> bool {
        for (i, hi) in self.reps.iter().enumerate() {
            for hj in &self.reps[i + 1..] {
                let q = (hi * &hj.inverse()).normalized();
                if q.det().is_one() {
                    return false;
                }
            }
        }
        true
    }

    /// Index of the representative `h` with `m h^-1` in `SL_2(Z)`, if any.
    pub fn locate(&self, m: &RatMatrix) -> Option<usize> {
        self.reps.iter().position(|h| {
            let q = m * &h.inverse();
            q.is_integral() && q.det().is_one()
        })
    }
}

pub fn double_coset_reps(n: u64) -> Result<CosetDecomposition, HeckeError> {
    if n == 0 || n > MAX_COSET_N {
        return Err(HeckeError::OutOfRange(n));
    }
    if !is_squarefree(n) {
        return Err(HeckeError::NotSquarefree(n));
    }
    let mut reps = Vec::new();
    for a in 1..=n {
        if !n.is_multiple_of(a) {
            continue;
        }
        let d = n / a;
        for b in 0..d {
            // gcd(a, b, d) = 1 holds automatically for squarefree n
            reps.push(RatMatrix::from_ints(a as i64, b as i64, 0, d as i64).expect("positive det"));
        }
    }
    Ok(CosetDecomposition { n, reps })
}

/// `Phi_n` as a sparse map `(i, j) -> c` meaning `c X^i Y^j`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ModularPolynomial {
    n: u64,
    deg_x: u32,
    deg_y: u32,
    coeffs: BTreeMap<(u32, u32), BigInt>,
}

impl ModularPolynomial {
    pub fn from_terms(n: u64, terms: impl IntoIterator<Item = ((u32, u32), BigInt)>) -> Self {
        let mut coeffs = BTreeMap::new();
        for (k, c) in terms {
            if !c.is_zero() {
                *coeffs.entry(k).or_insert_with(BigInt::zero) += c;
            }
        }
        coeffs.retain(|_, c: &mut BigInt| !c.is_zero());
        let deg_x = coeffs.keys().map(|k| k.0).max().unwrap_or(0);
        let deg_y = coeffs.keys().map(|k| k.1).max().unwrap_or(0);
        ModularPolynomial {
            n,
            deg_x,
            deg_y,
            coeffs,
        }
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn deg_x(&self) -> u32 {
        self.deg_x
    }

    pub fn deg_y(&self) -> u32 {
        self.deg_y
    }

    pub fn coeff(&self, i: u32, j: u32) -> BigInt {
        self.coeffs.get(&(i, j)).cloned().unwrap_or_default()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&(u32, u32), &BigInt)> {
        self.coeffs.iter()
    }

    pub fn is_symmetric(&self) -> bool {
        self.coeffs
            .iter()
            .all(|(&(i, j), c)| self.coeffs.get(&(j, i)) == Some(c))
    }

    /// A copy with `delta` added to the coefficient of `X^i Y^j`.
    pub fn perturbed(&self, i: u32, j: u32, delta: i64) -> Self {
        let terms = self
            .coeffs
            .iter()
            .map(|(k, c)| (*k, c.clone()))
            .chain(core::iter::once(((i, j), BigInt::from(delta))));
        ModularPolynomial::from_terms(self.n, terms)
    }

    fn powers(z: &Cx, deg: u32) -> Vec<Cx> {
        let mut out = Vec::with_capacity(deg as usize + 1);
        out.push(Cx::one(z.precision()));
        for k in 1..=deg as usize {
            let next = &out[k - 1] * z;
            out.push(next);
        }
        out
    }

    pub fn eval(&self, x: &Cx, y: &Cx) -> Cx {
        let p = x.precision().max(y.precision());
        let xs = Self::powers(&x.with_precision(p), self.deg_x);
        let ys = Self::powers(&y.with_precision(p), self.deg_y);
        let mut acc = Cx::zero(p);
        for (&(i, j), c) in &self.coeffs {
            let term = (&xs[i as usize] * &ys[j as usize]).scale(&Real::from_bigint(c, p));
            acc = &acc + &term;
        }
        acc
    }

    /// `|Phi(x, y)| / (1 + max_{i,j} |c_ij| |x|^i |y|^j)`.
    pub fn relative_residual(&self, x: &Cx, y: &Cx) -> f64 {
        let p = x.precision().max(y.precision());
        let real_powers = |r: Real, deg: u32| {
            let mut out = vec![Real::one(p)];
            for k in 1..=deg as usize {
                let next = &out[k - 1] * &r;
                out.push(next);
            }
            out
        };
        let ax = real_powers(x.with_precision(p).abs(), self.deg_x);
        let ay = real_powers(y.with_precision(p).abs(), self.deg_y);
        let mut biggest = Real::zero(p);
        for (&(i, j), c) in &self.coeffs {
            let m = &(&Real::from_bigint(c, p).abs() * &ax[i as usize]) * &ay[j as usize];
            biggest = biggest.max(m);
        }
        let denom = &Real::one(p) + &biggest;
        (&self.eval(x, y).abs() / &denom).to_f64()
    }

    /// Coefficients (increasing degree in `Y`) of `Phi(x0, Y)`.
    pub fn fiber_coefficients(&self, x0: &Cx) -> Vec<Cx> {
        let p = x0.precision();
        let xs = Self::powers(x0, self.deg_x);
        let mut out = vec![Cx::zero(p); self.deg_y as usize + 1];
        for (&(i, j), c) in &self.coeffs {
            let term = xs[i as usize].scale(&Real::from_bigint(c, p));
            out[j as usize] = &out[j as usize] + &term;
        }
        out
    }

    /// Exact `Phi(x0, Y)` for integer `x0`, increasing degree in `Y`.
    pub fn fiber_exact(&self, x0: &BigInt) -> Vec<BigInt> {
        let mut out = vec![BigInt::zero(); self.deg_y as usize + 1];
        for (&(i, j), c) in &self.coeffs {
            out[j as usize] += c * x0.pow(i);
        }
        out
    }

    /// Text cache format: a `MODPOLY n degX degY` header, then one
    /// `i j coefficient` line per nonzero term in increasing `(i, j)`.
    pub fn to_cache_string(&self) -> String {
        let mut s = format!("MODPOLY {} {} {}\n", self.n, self.deg_x, self.deg_y);
        for (&(i, j), c) in &self.coeffs {
            let _ = writeln!(s, "{i} {j} {c}");
        }
        s
    }

    pub fn from_cache_str(text: &str) -> Result<Self, HeckeError> {
        let bad = |m: &str| HeckeError::Cache(String::from(m));
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines.next().ok_or_else(|| bad("empty file"))?;
        let h: Vec<&str> = header.split_whitespace().collect();
        if h.len() != 4 || h[0] != "MODPOLY" {
            return Err(bad("missing MODPOLY header"));
        }
        let n: u64 = h[1].parse().map_err(|_| bad("bad n"))?;
        let dx: u32 = h[2].parse().map_err(|_| bad("bad degX"))?;
        let dy: u32 = h[3].parse().map_err(|_| bad("bad degY"))?;
        let mut terms = Vec::new();
        for line in lines {
            let f: Vec<&str> = line.split_whitespace().collect();
            if f.len() != 3 {
                return Err(HeckeError::Cache(format!("bad line: {line}")));
            }
            let i: u32 = f[0].parse().map_err(|_| bad("bad exponent"))?;
            let j: u32 = f[1].parse().map_err(|_| bad("bad exponent"))?;
            let c: BigInt = f[2].parse().map_err(|_| bad("bad coefficient"))?;
            terms.push(((i, j), c));
        }
        let phi = ModularPolynomial::from_terms(n, terms);
        if phi.deg_x != dx || phi.deg_y != dy {
            return Err(bad("header degrees disagree with terms"));
        }
        Ok(phi)
    }
}

/// `Phi_n` for squarefree `n <= MAX_COMPUTE_N`, doubling the q-series depth
/// from [`DEFAULT_DEPTH`] until recognition succeeds.
pub fn modular_polynomial(n: u64) -> Result<ModularPolynomial, HeckeError> {
    let mut depth = DEFAULT_DEPTH;
    loop {
        match modular_polynomial_with_depth(n, depth) {
            Err(HeckeError::PrecisionExhausted { .. }) if depth < 4096 => depth *= 2,
            other => return other,
        }
    }
}

/// One attempt at `Phi_n` working with power sums known below `q^depth`.
pub fn modular_polynomial_with_depth(n: u64, depth: usize) -> Result<ModularPolynomial, HeckeError> {
    if n == 0 {
        return Err(HeckeError::OutOfRange(n));
    }
    if !is_squarefree(n) {
        return Err(HeckeError::NotSquarefree(n));
    }
    if n > MAX_COMPUTE_N {
        return Err(HeckeError::NotComputable(n));
    }
    let psi = dedekind_psi(n) as usize;
    let top = depth as i64;
    let pw = j_powers(psi, n as i64 * top);

    // p_k = sum over a d = n of d * sum_m [j^k]_{d m} q^{a m}
    let mut power_sums = Vec::with_capacity(psi + 1);
    power_sums.push(Laurent::constant(BigInt::from(psi)));
    for k in 1..=psi {
        let mut acc = Laurent::zero(top);
        for a in (1..=n).filter(|a| n.is_multiple_of(*a)) {
            let d = (n / a) as i64;
            let a = a as i64;
            let m0 = (-(k as i64)).div_euclid(d);
            let m_end = (top + a - 1) / a;
            let coeffs: Vec<BigInt> = (m0..m_end).map(|m| pw[k].coeff(d * m) * BigInt::from(d)).collect();
            let part = Laurent::new(m0, coeffs, m_end).dilate(a).truncate(top);
            acc = acc.add(&part);
        }
        power_sums.push(acc);
    }

    // Newton: k e_k = sum_{i=1..k} (-1)^(i-1) e_{k-i} p_i
    let mut elem: Vec<Laurent> = vec![Laurent::constant(BigInt::one())];
    for k in 1..=psi {
        let mut s = Laurent::zero(top);
        for i in 1..=k {
            let t = elem[k - i].mul(&power_sums[i]);
            s = if i % 2 == 1 { s.add(&t) } else { s.sub(&t) };
        }
        let e = s
            .div_exact(&BigInt::from(k))
            .ok_or(HeckeError::RecognitionFailed { k })?;
        elem.push(e);
    }

    let mut terms = Vec::new();
    for (k, e) in elem.iter().enumerate() {
        if e.top() <= VERIFY_DEPTH {
            return Err(HeckeError::PrecisionExhausted { depth });
        }
        let poly = recognise(e, &pw, psi).ok_or(HeckeError::RecognitionFailed { k })?;
        let sign = if k % 2 == 0 { BigInt::one() } else { -BigInt::one() };
        for (i, c) in poly.into_iter().enumerate() {
            terms.push(((i as u32, (psi - k) as u32), c * &sign));
        }
    }
    let mut phi = ModularPolynomial::from_terms(n, terms);
    if phi.coeff(psi as u32, 0).is_negative() {
        phi = ModularPolynomial::from_terms(n, phi.coeffs.into_iter().map(|(k, c)| (k, -c)));
    }
    Ok(phi)
}

/// Writes `e` as `sum c_m j^m`, `m <= max_deg`, insisting the remainder vanishes
/// on every known coefficient.
fn recognise(e: &Laurent, pw: &[Laurent], max_deg: usize) -> Option<Vec<BigInt>> {
    let pole = (-e.valuation()).max(0) as usize;
    if pole > max_deg {
        return None;
    }
    let mut coeffs = vec![BigInt::zero(); pole + 1];
    let mut r = e.clone();
    for m in (1..=pole).rev() {
        let c = r.coeff(-(m as i64));
        if !c.is_zero() {
            r = r.sub(&pw[m].scale(&c));
        }
        coeffs[m] = c;
    }
    let c0 = r.coeff(0);
    r = r.sub(&Laurent::constant(c0.clone()));
    coeffs[0] = c0;
    if !r.is_zero() {
        return None;
    }
    while coeffs.len() > 1 && coeffs.last().is_some_and(|c| c.is_zero()) {
        coeffs.pop();
    }
    Some(coeffs)
}

/// The `deg_y` roots of `Phi(x0, Y)` with multiplicity, sorted by real then
/// imaginary part. Fails when some root's relative residual exceeds
/// `2^(-precision/2)`.
pub fn correspondence_fiber(phi: &ModularPolynomial, x0: &Cx, precision: usize) -> Result<Vec<Cx>, HeckeError> {
    let coeffs = phi.fiber_coefficients(&x0.with_precision(precision));
    let (mut roots, residual) = crate::roots::aberth(&coeffs, precision);
    let tol = libm::ldexp(1.0, -(precision as i32) / 2);
    if residual.is_nan() || residual > tol {
        return Err(HeckeError::IllConditioned { residual });
    }
    roots.sort_by(|a, b| {
        let (ar, ai) = a.to_f64_pair();
        let (br, bi) = b.to_f64_pair();
        ar.partial_cmp(&br)
            .unwrap_or(core::cmp::Ordering::Equal)
            .then(ai.partial_cmp(&bi).unwrap_or(core::cmp::Ordering::Equal))
    });
    Ok(roots)
}

/// `h tau` for every representative `h` of determinant `n`: the points whose
/// `j`-values form the fiber of `Phi_n` over `j(tau)`.
pub fn hecke_images(
    reps: &CosetDecomposition,
    tau: &crate::numeric::NumericPoint,
) -> Vec<crate::numeric::NumericPoint> {
    reps.reps().iter().map(|h| h.act_numeric(tau)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytic::{j, sample_fundamental_domain, QSeriesContext};
    use crate::numeric::NumericPoint;
    use rand::SeedableRng;

    fn big(v: i64) -> BigInt {
        BigInt::from(v)
    }

    #[test]
    fn coset_examples() {
        let r1 = double_coset_reps(1).unwrap();
        assert_eq!(r1.reps(), &[RatMatrix::identity()]);
        let r2 = double_coset_reps(2).unwrap();
        let want = [
            RatMatrix::from_ints(1, 0, 0, 2).unwrap(),
            RatMatrix::from_ints(1, 1, 0, 2).unwrap(),
            RatMatrix::from_ints(2, 0, 0, 1).unwrap(),
        ];
        assert_eq!(r2.reps(), &want);
        assert!(r2.verify_disjoint());
        assert_eq!(double_coset_reps(6).unwrap().len(), 12);
        assert_eq!(double_coset_reps(4), Err(HeckeError::NotSquarefree(4)));
        assert_eq!(double_coset_reps(51), Err(HeckeError::OutOfRange(51)));
    }

    #[test]
    fn cosets_cover_all_small_matrices() {
        // every integral matrix of determinant n lies in exactly one coset
        for n in [2i64, 3, 5, 6] {
            let reps = double_coset_reps(n as u64).unwrap();
            let mut seen = 0;
            for a in -4i64..=4 {
                for b in -4i64..=4 {
                    for c in -4i64..=4 {
                        for d in -4i64..=4 {
                            if a * d - b * c != n {
                                continue;
                            }
                            let m = RatMatrix::from_ints(a, b, c, d).unwrap();
                            let hits = reps
                                .reps()
                                .iter()
                                .filter(|h| {
                                    let q = &m * &h.inverse();
                                    q.is_integral()
                                })
                                .count();
                            assert_eq!(hits, 1, "{m}");
                            seen += 1;
                        }
                    }
                }
            }
            assert!(seen > 0);
        }
    }

    #[test]
    fn phi1_is_identity_correspondence() {
        let phi = modular_polynomial(1).unwrap();
        let want = ModularPolynomial::from_terms(1, [((1, 0), big(1)), ((0, 1), big(-1))]);
        assert_eq!(phi, want);
    }

    #[test]
    fn phi2_coefficients() {
        let phi = modular_polynomial(2).unwrap();
        let want = ModularPolynomial::from_terms(
            2,
            [
                ((3, 0), big(1)),
                ((0, 3), big(1)),
                ((2, 2), big(-1)),
                ((2, 1), big(1488)),
                ((1, 2), big(1488)),
                ((2, 0), big(-162000)),
                ((0, 2), big(-162000)),
                ((1, 1), big(40773375)),
                ((1, 0), big(8748000000)),
                ((0, 1), big(8748000000)),
                ((0, 0), big(-157464000000000)),
            ],
        );
        assert_eq!(phi, want);
        // Phi_2(0, Y) = (Y - 54000)^3
        let f = phi.fiber_exact(&BigInt::zero());
        assert_eq!(f, [big(-157464000000000), big(8748000000), big(-162000), big(1)]);
    }

    #[test]
    fn phi3_shape() {
        let phi = modular_polynomial(3).unwrap();
        assert!(phi.is_symmetric());
        assert_eq!((phi.deg_x(), phi.deg_y()), (4, 4));
        assert_eq!(phi.coeff(3, 3), big(-1));
        assert_eq!(phi.coeff(3, 2), big(2232));
        assert_eq!(phi.coeff(3, 0), big(36864000));
    }

    #[test]
    fn phi5_symmetric() {
        let phi = modular_polynomial(5).unwrap();
        assert!(phi.is_symmetric());
        assert_eq!(phi.deg_x(), 6);
        assert_eq!(phi.coeff(5, 5), big(-1));
    }

    #[test]
    fn shallow_depth_requests_more() {
        assert_eq!(
            modular_polynomial_with_depth(2, 16),
            Err(HeckeError::PrecisionExhausted { depth: 16 })
        );
        assert_eq!(modular_polynomial(4), Err(HeckeError::NotSquarefree(4)));
        assert_eq!(modular_polynomial(11), Err(HeckeError::NotComputable(11)));
    }

    #[test]
    fn cache_round_trip() {
        let phi = modular_polynomial(3).unwrap();
        let text = phi.to_cache_string();
        assert!(text.starts_with("MODPOLY 3 4 4\n"));
        let back = ModularPolynomial::from_cache_str(&text).unwrap();
        assert_eq!(back, phi);
        assert_eq!(back.to_cache_string(), text);
        assert!(ModularPolynomial::from_cache_str("MODPOLY 3 9 4\n0 0 1\n").is_err());
    }

    #[test]
    fn vanishing_on_hecke_pairs() {
        let ctx = QSeriesContext::default();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2);
        for n in [2u64, 3] {
            let phi = modular_polynomial(n).unwrap();
            for tau in sample_fundamental_domain(&mut rng, 10, 2.0, 128) {
                let ntau = RatMatrix::diag(n as i64, 1).unwrap().act_numeric(&tau);
                let x = j(&tau, &ctx).unwrap().value;
                let y = j(&ntau, &ctx).unwrap().value;
                assert!(phi.relative_residual(&x, &y) < 1e-20);
            }
        }
    }

    #[test]
    fn fiber_matches_hecke_images() {
        let ctx = QSeriesContext::default();
        let phi = modular_polynomial(2).unwrap();
        let reps = double_coset_reps(2).unwrap();
        let tau = NumericPoint::from_f64(0.21, 1.13, 128).unwrap();
        let x0 = j(&tau, &ctx).unwrap().value;
        let roots = correspondence_fiber(&phi, &x0, 128).unwrap();
        assert_eq!(roots.len(), 3);
        for img in hecke_images(&reps, &tau) {
            let y = j(&img, &ctx).unwrap().value;
            let best = roots
                .iter()
                .map(|r| (r - &y).abs().to_f64() / y.abs().to_f64().max(1.0))
                .fold(f64::INFINITY, f64::min);
            assert!(best < 1e-10, "{best}");
        }
        let phi1 = modular_polynomial(1).unwrap();
        let r = correspondence_fiber(&phi1, &Cx::from_f64(5.0, 0.0, 128), 128).unwrap();
        assert!((r[0].to_f64_pair().0 - 5.0).abs() < 1e-30);
    }

    #[test]
    fn fiber_over_1728_has_double_root() {
        let phi = modular_polynomial(2).unwrap();
        let roots = correspondence_fiber(&phi, &Cx::from_f64(1728.0, 0.0, 128), 128).unwrap();
        let re: Vec<f64> = roots.iter().map(|r| r.to_f64_pair().0).collect();
        assert!((re[0] - 1728.0).abs() < 1e-8);
        assert!((re[1] - 287496.0).abs() < 1e-6);
        assert!((re[2] - 287496.0).abs() < 1e-6);
    }
}

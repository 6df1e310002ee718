//! The level-one uniformiser: `j(tau) = E4(tau)^3 / Delta(tau)`, evaluated from
//! q-expansions after reduction to the standard fundamental domain, with an
//! explicit error bound; plus numeric inversion of `j`.

use alloc::vec::Vec;

use crate::linear::RatMatrix;
use crate::numeric::{Cx, NumericPoint, Real, MIN_PRECISION};

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum AnalyticError {
    #[error("q-series context needs at least 16 terms and 64 bits (got {terms} terms, {precision} bits)")]
    BadContext { terms: usize, precision: usize },
    #[error("q-series evaluation lost all accuracy (bound {abs_err:e})")]
    PrecisionExhausted { abs_err: f64 },
    #[error("Newton iteration for j^-1 did not converge (relative residual {residual:e})")]
    NoConvergence { residual: f64 },
}

/// Truncation depth and working precision for q-series evaluation.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct QSeriesContext {
    terms: usize,
    precision: usize,
}

impl Default for QSeriesContext {
    fn default() -> Self {
        QSeriesContext {
            terms: 32,
            precision: 128,
        }
    }
}

impl QSeriesContext {
    pub const MIN_TERMS: usize = 16;

    pub fn new(terms: usize, precision: usize) -> Result<Self, AnalyticError> {
        if terms < Self::MIN_TERMS || precision < MIN_PRECISION {
            return Err(AnalyticError::BadContext { terms, precision });
        }
        Ok(QSeriesContext { terms, precision })
    }

    pub fn terms(&self) -> usize {
        self.terms
    }

    pub fn precision(&self) -> usize {
        self.precision
    }

    /// Twice the terms and twice the bits.
    pub fn refined(&self) -> Self {
        QSeriesContext {
            terms: self.terms * 2,
            precision: self.precision * 2,
        }
    }
}

/// A value together with a bound on its absolute error.
#[derive(Clone, Debug, PartialEq)]
pub struct JValue {
    pub value: Cx,
    pub abs_err: f64,
}

/// Reduces `tau` into `|Re| <= 1/2, |tau| >= 1` by the usual translate-and-invert
/// loop, returning the accumulated `gamma` in `SL_2(Z)` with `gamma * tau = tau'`.
pub fn reduce_fundamental(tau: &NumericPoint) -> (RatMatrix, NumericPoint) {
    let p = tau.precision();
    let mut z = tau.value().clone();
    let mut gamma = RatMatrix::identity();
    let one = Real::one(p);
    for _ in 0..10_000 {
        let n = z.re.round_to_i64();
        if n != 0 {
            z = Cx::new(&z.re - &Real::from_i64(n, p), z.im.clone());
            gamma = &RatMatrix::translation(-n) * &gamma;
        }
        if z.norm_sqr() < one {
            // -1/z
            z = -z.inv();
            gamma = &RatMatrix::s() * &gamma;
        } else {
            break;
        }
    }
    let reduced = NumericPoint::new(z, p).expect("reduction stays in the upper half-plane");
    (gamma, reduced)
}

fn sigma(n: usize, k: u32) -> i64 {
    (1..=n)
        .filter(|d| n.is_multiple_of(*d))
        .map(|d| (d as i64).pow(k))
        .sum()
}

struct Expansions {
    j: Cx,
    e4: Cx,
    e6: Cx,
    delta: Cx,
    abs_err: f64,
}

fn expansions(tau: &NumericPoint, ctx: &QSeriesContext) -> Expansions {
    let p = ctx.precision.max(tau.precision());
    let k = ctx.terms;
    let tau = tau.value().with_precision(p);
    let two_pi = Real::pi(p) * Real::from_i64(2, p);
    // q = exp(2 pi i tau)
    let q = Cx::new(-(&two_pi * &tau.im), &two_pi * &tau.re).exp();
    let one = Cx::one(p);

    let mut e4 = one.clone();
    let mut e6 = one.clone();
    let mut prod = one.clone();
    let mut qn = one.clone();
    let r = q.abs().to_f64();
    let mut e4_major = 1.0f64;
    let mut prod_major = 1.0f64;
    for n in 1..=k {
        qn = &qn * &q;
        let s3 = Real::from_i64(240 * sigma(n, 3), p);
        let s5 = Real::from_i64(504 * sigma(n, 5), p);
        e4 = &e4 + &qn.scale(&s3);
        e6 = &e6 - &qn.scale(&s5);
        prod = &prod * &(&one - &qn);
        let rn = libm::pow(r, n as f64);
        e4_major += 240.0 * sigma(n, 3) as f64 * rn;
        prod_major *= 1.0 + rn;
    }
    let p2 = &prod * &prod;
    let p4 = &p2 * &p2;
    let p8 = &p4 * &p4;
    let p16 = &p8 * &p8;
    let delta = &q * &(&p16 * &p8);
    let e4_cubed = &(&e4 * &e4) * &e4;
    let j = &e4_cubed / &delta;

    // Truncation: sigma_3(n) <= zeta(3) n^3 < 1.21 n^3 and a geometric majorant for n > K.
    let kf = k as f64;
    let ratio = libm::pow((kf + 2.0) / (kf + 1.0), 3.0) * r;
    let e4_tail = 240.0 * 1.21 * libm::pow(kf + 1.0, 3.0) * libm::pow(r, kf + 1.0) / (1.0 - ratio);
    let log_tail = 24.0 * libm::pow(r, kf + 1.0) / ((1.0 - r) * (1.0 - libm::pow(r, kf + 1.0)));
    let eps_r = log_tail * libm::exp(log_tail);
    let delta_abs = delta.abs().to_f64();
    let e4_abs = e4.abs().to_f64();
    let j_abs = j.abs().to_f64();
    let trunc = (libm::pow(e4_abs + e4_tail, 3.0) - libm::pow(e4_abs, 3.0)) / (delta_abs * (1.0 - eps_r))
        + j_abs * eps_r / (1.0 - eps_r);
    // Rounding: a generous multiple of the unit roundoff times the size of the
    // largest intermediate, including the rounding of the reduced argument.
    let unit = libm::ldexp(1.0, 1 - p as i32);
    let major = libm::pow(e4_major, 3.0) * libm::pow(prod_major, 24.0) * r / delta_abs.max(f64::MIN_POSITIVE);
    let arg = 1.0 + tau.abs().to_f64();
    let rounding = 64.0 * (kf + 32.0) * unit * major.max(j_abs) * arg * 2.0 * core::f64::consts::PI;
    Expansions {
        j,
        e4,
        e6,
        delta,
        abs_err: trunc + rounding,
    }
}

/// `j(tau)` with an absolute error bound.
pub fn j(tau: &NumericPoint, ctx: &QSeriesContext) -> Result<JValue, AnalyticError> {
    let (_, reduced) = reduce_fundamental(tau);
    let ex = expansions(&reduced, ctx);
    let magnitude = ex.j.abs().to_f64();
    if !ex.j.is_finite() || !ex.abs_err.is_finite() || ex.abs_err > magnitude.max(1.0) {
        return Err(AnalyticError::PrecisionExhausted { abs_err: ex.abs_err });
    }
    Ok(JValue {
        value: ex.j,
        abs_err: ex.abs_err,
    })
}

/// `j` at an exact CM point, evaluated at the context precision.
pub fn j_cm(tau: &crate::linear::CMPoint, ctx: &QSeriesContext) -> Result<JValue, AnalyticError> {
    j(&tau.to_numeric(ctx.precision), ctx)
}

/// `(E4, E6)` at the reduced point, for cross-checks (`j = 1728 E4^3/(E4^3 - E6^2)`).
pub fn eisenstein_pair(tau: &NumericPoint, ctx: &QSeriesContext) -> (Cx, Cx) {
    let (_, reduced) = reduce_fundamental(tau);
    let ex = expansions(&reduced, ctx);
    (ex.e4, ex.e6)
}

/// `j(tau)` and `dj/dtau = -2 pi i E4^2 E6 / Delta` at an already reduced point.
fn j_and_derivative(tau: &NumericPoint, ctx: &QSeriesContext) -> (Cx, Cx) {
    let ex = expansions(tau, ctx);
    let p = ctx.precision.max(tau.precision());
    let two_pi = Real::pi(p) * Real::from_i64(2, p);
    let q_dj_dq = -(&(&(&ex.e4 * &ex.e4) * &ex.e6) / &ex.delta);
    let dj = &Cx::new(Real::zero(p), two_pi) * &q_dj_dq;
    (ex.j, dj)
}

fn relative_gap(value: &Cx, target: &Cx) -> f64 {
    (value - target).abs().to_f64() / target.abs().to_f64().max(1.0)
}

/// Relative residual accepted by [`invert_j`].
pub const INVERT_TOLERANCE: f64 = 1e-6;

/// Finds `tau` in the fundamental domain with `j(tau) = x0` (relative residual
/// below `1e-6`): a 40x40 grid over `|Re| <= 1/2, 0.5 <= Im <= 4` supplies
/// the start for a damped Newton iteration.
pub fn invert_j(x0: &Cx, ctx: &QSeriesContext) -> Result<NumericPoint, AnalyticError> {
    let p = ctx.precision;
    let target = x0.with_precision(p);
    let coarse = QSeriesContext {
        terms: QSeriesContext::MIN_TERMS,
        precision: MIN_PRECISION,
    };
    let mut best: Option<(f64, NumericPoint)> = None;
    const GRID: usize = 40;
    let grid_target = target.with_precision(MIN_PRECISION);
    for ix in 0..GRID {
        for iy in 0..GRID {
            let re = -0.5 + (ix as f64 + 0.5) / GRID as f64;
            let im = 0.5 + 3.5 * (iy as f64 + 0.5) / GRID as f64;
            let z = NumericPoint::from_f64(re, im, MIN_PRECISION).expect("grid point");
            let (_, z) = reduce_fundamental(&z);
            let val = expansions(&z, &coarse).j;
            let gap = relative_gap(&val, &grid_target);
            if best.as_ref().is_none_or(|(g, _)| gap < *g) {
                best = Some((gap, z));
            }
        }
    }
    let start = best.expect("non-empty grid").1;
    let mut tau = NumericPoint::new(start.value().with_precision(p), p).expect("start point");

    // the starting point can sit far away when x0 is huge, where j ~ 1/q
    let (val, _) = j_and_derivative(&tau, ctx);
    let mut residual = relative_gap(&val, &target);
    if target.abs().to_f64() > 1e10 {
        let two_pi = Real::pi(p) * Real::from_i64(2, p);
        // q ~ 1/(x0 - 744), tau = log(q) / (2 pi i)
        let q = (&target - &Cx::from_f64(744.0, 0.0, p)).inv();
        let l = q.ln();
        let guess = Cx::new(&l.im / &two_pi, -(&l.re / &two_pi));
        if let Ok(g) = NumericPoint::new(guess, p) {
            let (_, g) = reduce_fundamental(&g);
            let (gv, _) = j_and_derivative(&g, ctx);
            let r = relative_gap(&gv, &target);
            if r < residual {
                tau = g;
                residual = r;
            }
        }
    }

    let floor = libm::ldexp(1.0, -(p as i32) / 2).max(1e-30);
    for _ in 0..400 {
        if residual < floor {
            break;
        }
        let (val, dj) = j_and_derivative(&tau, ctx);
        let f = &val - &target;
        if dj.abs().is_zero() {
            break;
        }
        let mut step = &f / &dj;
        let mut improved = false;
        for _ in 0..30 {
            let cand = tau.value() - &step;
            if let Ok(cand) = NumericPoint::new(cand, p) {
                let (_, cand) = reduce_fundamental(&cand);
                let (cv, _) = j_and_derivative(&cand, ctx);
                let r = relative_gap(&cv, &target);
                if r < residual {
                    tau = cand;
                    residual = r;
                    improved = true;
                    break;
                }
            }
            step = step.scale(&Real::from_f64(0.5, p));
        }
        if !improved {
            break;
        }
    }
    if residual < INVERT_TOLERANCE {
        Ok(tau)
    } else {
        Err(AnalyticError::NoConvergence { residual })
    }
}

/// Samples `count` points of the fundamental domain, `|Re| <= 1/2`, `|tau| >= 1`,
/// `Im <= max_im`, from the given RNG.
pub fn sample_fundamental_domain<R: rand::Rng>(
    rng: &mut R,
    count: usize,
    max_im: f64,
    precision: usize,
) -> Vec<NumericPoint> {
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let re: f64 = rng.gen_range(-0.5..0.5);
        let im: f64 = rng.gen_range(0.866..max_im);
        if re * re + im * im > 1.0 {
            out.push(NumericPoint::from_f64(re, im, precision).expect("sampled point"));
        }
    }
    out
}

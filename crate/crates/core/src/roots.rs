//! Simultaneous polynomial root finding (Aberth-Ehrlich) in working precision.

use alloc::vec::Vec;

use crate::numeric::{Cx, Real};

/// Evaluates `sum c_k z^k` (coefficients in increasing degree) by Horner.
pub fn horner(coeffs: &[Cx], z: &Cx) -> Cx {
    let p = z.precision();
    let mut acc = Cx::zero(p);
    for c in coeffs.iter().rev() {
        acc = &(&acc * z) + c;
    }
    acc
}

fn derivative(coeffs: &[Cx]) -> Vec<Cx> {
    coeffs
        .iter()
        .enumerate()
        .skip(1)
        .map(|(k, c)| c.scale(&Real::from_i64(k as i64, c.precision())))
        .collect()
}

/// `|P(z)| / sum |c_k| |z|^k`, the backward-error style residual.
pub fn relative_residual(coeffs: &[Cx], z: &Cx) -> f64 {
    let p = z.precision();
    let r = z.abs();
    let mut scale = Real::zero(p);
    let mut rk = Real::one(p);
    for c in coeffs {
        scale = &scale + &(&c.abs() * &rk);
        rk = &rk * &r;
    }
    let v = horner(coeffs, z).abs();
    if scale.is_zero() {
        return 0.0;
    }
    (&v / &scale).to_f64()
}

/// All roots of the polynomial with the given coefficients (increasing degree,
/// nonzero leading coefficient), with multiplicity. Returns the roots together
/// with the worst relative residual.
pub fn aberth(coeffs: &[Cx], precision: usize) -> (Vec<Cx>, f64) {
    let deg = coeffs.len() - 1;
    if deg == 0 {
        return (Vec::new(), 0.0);
    }
    let lead = coeffs[deg].clone();
    let monic: Vec<Cx> = coeffs.iter().map(|c| &c.with_precision(precision) / &lead).collect();
    let dmonic = derivative(&monic);

    // Cauchy bound for the starting circle
    let mut radius = 0.0f64;
    for c in &monic[..deg] {
        radius = radius.max(c.abs().to_f64());
    }
    let radius = (1.0 + radius).min(1e300);
    let mut z: Vec<Cx> = (0..deg)
        .map(|k| {
            let theta = 2.0 * core::f64::consts::PI * (k as f64) / (deg as f64) + 0.4;
            let rho = radius * (0.5 + 0.5 * (k as f64 + 1.0) / deg as f64);
            Cx::from_f64(rho * libm::cos(theta), rho * libm::sin(theta), precision)
        })
        .collect();

    let eps = libm::ldexp(1.0, -(precision as i32) + 8);
    for _ in 0..2000 {
        let mut max_step = 0.0f64;
        for i in 0..deg {
            let pz = horner(&monic, &z[i]);
            if pz.abs().is_zero() {
                continue;
            }
            let dz = horner(&dmonic, &z[i]);
            let ratio = &pz / &dz;
            let mut sum = Cx::zero(precision);
            for (k, zk) in z.iter().enumerate() {
                if k != i {
                    sum = &sum + &(&z[i] - zk).inv();
                }
            }
            let denom = &Cx::one(precision) - &(&ratio * &sum);
            let w = &ratio / &denom;
            if !w.is_finite() {
                continue;
            }
            let rel = w.abs().to_f64() / z[i].abs().to_f64().max(1.0);
            max_step = max_step.max(rel);
            z[i] = &z[i] - &w;
        }
        if max_step < eps {
            break;
        }
    }
    // Newton polish, keeping a step only if the residual improves
    for zi in z.iter_mut() {
        for _ in 0..4 {
            let pz = horner(&monic, zi);
            let dz = horner(&dmonic, zi);
            if dz.abs().is_zero() {
                break;
            }
            let cand = &*zi - &(&pz / &dz);
            if cand.is_finite() && horner(&monic, &cand).abs() < pz.abs() {
                *zi = cand;
            } else {
                break;
            }
        }
    }
    let worst = z.iter().map(|zi| relative_residual(&monic, zi)).fold(0.0f64, f64::max);
    (z, worst)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Cx {
        Cx::from_f64(re, 0.0, 128)
    }

    #[test]
    fn roots_of_cubic() {
        // (z-1)(z-2)(z+3) = z^3 - 7z + 6
        let (roots, res) = aberth(&[c(6.0), c(-7.0), c(0.0), c(1.0)], 128);
        assert!(res < 1e-30);
        let mut re: Vec<f64> = roots.iter().map(|r| r.to_f64_pair().0).collect();
        re.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for (got, want) in re.iter().zip([-3.0, 1.0, 2.0]) {
            assert!((got - want).abs() < 1e-20);
        }
    }

    #[test]
    fn double_root_residual_small() {
        // (z-5)^2 (z+1)
        let (roots, res) = aberth(&[c(25.0), c(15.0), c(-9.0), c(1.0)], 128);
        assert!(res < 1e-25, "{res}");
        let near5 = roots.iter().filter(|r| (r.to_f64_pair().0 - 5.0).abs() < 1e-10).count();
        assert_eq!(near5, 2);
    }

    #[test]
    fn complex_roots() {
        // z^2 + 1
        let (roots, _) = aberth(&[c(1.0), c(0.0), c(1.0)], 128);
        for r in roots {
            let (re, im) = r.to_f64_pair();
            assert!(re.abs() < 1e-25 && (im.abs() - 1.0).abs() < 1e-25);
        }
    }
}

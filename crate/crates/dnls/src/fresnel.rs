//! Gaussian constant and the Fresnel boundary function.

use crate::error::{Error, Result};
use num_complex::Complex64 as C64;
use std::f64::consts::{FRAC_1_SQRT_2, PI};

/// Integral of e^{-i x^2 / 2} over the real line: sqrt(2 pi / i) = sqrt(pi) (1 - i).
pub fn gauss_constant() -> C64 {
    PI.sqrt() * C64::new(1.0, -1.0)
}

fn erf_series(z: C64) -> C64 {
    let z2 = z * z;
    let mut term = z;
    let mut sum = z;
    let mut n = 0.0;
    loop {
        n += 1.0;
        term *= -z2 / n;
        let add = term / (2.0 * n + 1.0);
        sum += add;
        if add.norm() <= 1e-17 * sum.norm() {
            break;
        }
    }
    sum * (2.0 / PI.sqrt())
}

/// Faddeeva w(zeta) for Im zeta > 0 by its Laplace continued fraction.
fn faddeeva_cf(zeta: C64) -> C64 {
    let depth = 20 + (1200.0 / zeta.norm_sqr()).ceil() as usize;
    let mut tail = zeta;
    for k in (1..=depth).rev() {
        tail = zeta - (k as f64 * 0.5) / tail;
    }
    C64::new(0.0, 1.0 / PI.sqrt()) / tail
}

/// erf and erfc on the ray arg z = pi/4, which is all the Fresnel functions need.
fn erf_erfc_diag(r: f64) -> (C64, C64) {
    let z = C64::from_polar(r, PI / 4.0);
    if r <= 2.5 {
        let e = erf_series(z);
        (e, 1.0 - e)
    } else {
        let ec = (-z * z).exp() * faddeeva_cf(C64::new(0.0, 1.0) * z);
        (1.0 - ec, ec)
    }
}

/// Standard Fresnel integrals C(x) = int_0^x cos(pi s^2/2) ds, S(x) = int_0^x sin(pi s^2/2) ds.
pub fn fresnel_cs(x: f64) -> (f64, f64) {
    let sign = x.signum();
    let (e, _) = erf_erfc_diag((PI / 2.0).sqrt() * x.abs());
    // C - iS = e^{-i pi/4} erf(...) / sqrt 2
    let v = C64::from_polar(FRAC_1_SQRT_2, -PI / 4.0) * e;
    (sign * v.re, -sign * v.im)
}

/// Fr(y) = sqrt(i / 2 pi) int_{-inf}^{-y} e^{-i x^2 / 2} dx for y >= 0.
pub fn fresnel_fr(y: f64) -> Result<C64> {
    if !(y >= 0.0) || !y.is_finite() {
        return Err(Error::Domain(format!("Fr needs y >= 0, got {y}")));
    }
    let sp = PI.sqrt();
    let (c, s) = fresnel_cs(y / sp);
    let root_i = C64::from_polar(1.0, PI / 4.0);
    Ok(0.5 - root_i / (2.0 * PI).sqrt() * sp * C64::new(c, -s))
}

/// Same function through erfc directly; used where y is already known to be >= 0.
pub(crate) fn fr_unchecked(y: f64) -> C64 {
    0.5 * erf_erfc_diag(y * FRAC_1_SQRT_2).1
}

#[cfg(test)]
mod tests {
    use super::*;

    // 40-digit erfc evaluations, rounded
    const FR_REF: [(f64, f64, f64); 9] = [
        (0.0, 0.5, 0.0),
        (0.5, 0.35330241233849272, -0.1349567497315707),
        (1.0, 0.17869354257258974, -0.228_940_697_217_596_1),
        (2.0, -0.15807564084897382, -0.095_226_734_618_917_34),
        (3.3, 0.11769601316376649, 0.016_326_699_884_960_13),
        (5.0, 0.061818402324789337, -0.049_964_386_895_798_73),
        (10.0, 0.034810198128452442, -0.019468095447560689),
        (50.0, 0.0072487578599152523, -0.003_334_281_901_069_736),
        (1000.0, -0.00032776396780974721, 0.00022743290108669536),
    ];

    const CS_REF: [(f64, f64, f64); 5] = [
        (0.3, 0.2994009760520472, 0.014116998006576584),
        (1.0, 0.779_893_400_376_822_9, 0.43825914739035477),
        (2.5, 0.45741300964177705, 0.619_181_755_819_592_9),
        (4.0, 0.498_426_033_038_177_6, 0.42051575424692842),
        (7.7, 0.46278209682263246, 0.482_014_168_075_984_9),
    ];

    #[test]
    fn reference_values() {
        for (y, re, im) in FR_REF {
            let v = fresnel_fr(y).unwrap();
            assert!((v - C64::new(re, im)).norm() < 1e-12, "y={y} {v}");
            assert!((fr_unchecked(y) - C64::new(re, im)).norm() < 1e-12);
        }
        for (x, c, s) in CS_REF {
            let (cc, ss) = fresnel_cs(x);
            assert!((cc - c).abs() < 1e-13 && (ss - s).abs() < 1e-13, "x={x}");
            let (cn, sn) = fresnel_cs(-x);
            assert_eq!((cn, sn), (-cc, -ss));
        }
    }

    #[test]
    fn gauss_constant_value() {
        let g = gauss_constant();
        assert!((g - C64::new(1.7724538509055159, -1.7724538509055159)).norm() < 1e-15);
        assert!((g.norm() - 2.0 * (PI / 2.0).sqrt()).abs() < 1e-15);
        // half the constant times sqrt(i / 2 pi) is Fr(0)
        let root_i = C64::from_polar(1.0, PI / 4.0);
        assert!((0.5 * g * root_i / (2.0 * PI).sqrt() - 0.5).norm() < 1e-15);
    }

    #[test]
    fn domain_and_bounds() {
        assert!(fresnel_fr(-0.1).is_err());
        assert!(fresnel_fr(f64::NAN).is_err());
        assert_eq!(fresnel_fr(0.0).unwrap(), C64::new(0.5, 0.0));
        assert!(fresnel_fr(1e3).unwrap().norm() < 2e-3);
        for y in [0.0, 0.5, 1.0, 2.0, 5.0, 10.0, 100.0] {
            let v = fresnel_fr(y).unwrap();
            assert!(v.norm() * (1.0 + y * y).sqrt() <= 1.1);
            assert!(v.norm() <= 1.01);
        }
    }

    #[test]
    fn envelope_decreases_by_block() {
        let mut prev = f64::INFINITY;
        for k in 1..9 {
            let lo = 2f64.powi(k);
            let sup = (0..=2000)
                .map(|i| fresnel_fr(lo + lo * i as f64 / 2000.0).unwrap().norm())
                .fold(0.0, f64::max);
            assert!(sup < prev);
            prev = sup;
        }
    }

    #[test]
    fn branch_seam_is_continuous() {
        // series below r = 2.5, continued fraction above
        let y0 = 2.5 * 2f64.sqrt();
        let a = fr_unchecked(y0 * (1.0 - 1e-15));
        let b = fr_unchecked(y0 * (1.0 + 1e-15));
        assert!((a - b).norm() < 1e-13);
    }
}

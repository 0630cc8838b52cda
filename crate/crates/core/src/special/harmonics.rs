//! Real spherical harmonics, orthonormal on the unit sphere.
//!
//! `Y_{l,0} = P̄_l^0(cos θ)`, `Y_{l,m} = √2 P̄_l^m(cos θ) cos(mφ)` for `m > 0` and
//! `Y_{l,m} = √2 P̄_l^{|m|}(cos θ) sin(|m|φ)` for `m < 0`, where `P̄` are
//! associated Legendre functions normalised to include `1/√(4π)` and carrying
//! no Condon–Shortley phase.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Normalised associated Legendre values `P̄_l^m(cos θ)` for `0 <= m <= l <= lmax`.
///
/// Stored row-major by `l`, index `l * (l + 1) / 2 + m`.
pub fn normalized_legendre_table<T: Scalar>(lmax: usize, theta: T) -> Vec<T> {
    let x = theta.cos();
    let s = theta.sin().abs();
    let idx = |l: usize, m: usize| l * (l + 1) / 2 + m;
    let mut p = vec![T::zero(); idx(lmax, lmax) + 1];
    p[0] = T::one() / (T::lit(4.0) * T::PI()).sqrt();
    for m in 1..=lmax {
        let f = (T::of(2 * m + 1) / T::of(2 * m)).sqrt();
        p[idx(m, m)] = f * s * p[idx(m - 1, m - 1)];
    }
    for m in 0..lmax {
        p[idx(m + 1, m)] = T::of(2 * m + 3).sqrt() * x * p[idx(m, m)];
    }
    for m in 0..=lmax {
        for l in (m + 2)..=lmax {
            let (lf, mf) = (T::of(l), T::of(m));
            let a = ((T::lit(4.0) * lf * lf - T::one()) / (lf * lf - mf * mf)).sqrt();
            let lm1 = lf - T::one();
            let b = ((lm1 * lm1 - mf * mf) / (T::lit(4.0) * lm1 * lm1 - T::one())).sqrt();
            p[idx(l, m)] = a * (x * p[idx(l - 1, m)] - b * p[idx(l - 2, m)]);
        }
    }
    p
}

/// Angular factor for order `m` given `P̄_l^{|m|}`.
#[inline]
pub(crate) fn azimuthal<T: Scalar>(m: i64, phi: T, legendre: T) -> T {
    if m == 0 {
        legendre
    } else if m > 0 {
        T::SQRT_2() * legendre * (T::lit(m as f64) * phi).cos()
    } else {
        T::SQRT_2() * legendre * (T::lit((-m) as f64) * phi).sin()
    }
}

/// Real spherical harmonic `Y_{l,m}(θ, φ)` with polar angle `θ ∈ [0, π]`.
pub fn real_spherical_harmonic<T: Scalar>(l: usize, m: i64, theta: T, phi: T) -> Result<T> {
    if m.unsigned_abs() as usize > l {
        return Err(Error::InvalidHarmonicOrder { l, m });
    }
    let table = normalized_legendre_table(l, theta);
    let am = m.unsigned_abs() as usize;
    Ok(azimuthal(m, phi, table[l * (l + 1) / 2 + am]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::special::quadrature::{gauss_legendre, periodic_trapezoid};
    use std::f64::consts::PI;

    fn sphere_inner(a: (usize, i64), b: (usize, i64)) -> f64 {
        let ct = gauss_legendre::<f64>(24, (-1.0, 1.0));
        let ph = periodic_trapezoid::<f64>(32, (0.0, 2.0 * PI));
        let mut s = 0.0;
        for (x, wx) in ct.iter() {
            let theta = x.acos();
            for (p, wp) in ph.iter() {
                let ya = real_spherical_harmonic(a.0, a.1, theta, p).unwrap();
                let yb = real_spherical_harmonic(b.0, b.1, theta, p).unwrap();
                s += wx * wp * ya * yb;
            }
        }
        s
    }

    #[test]
    fn constant_harmonic() {
        let y = real_spherical_harmonic(0, 0, 0.3_f64, 1.1).unwrap();
        assert!((y - 1.0 / (4.0 * PI).sqrt()).abs() < 1e-15);
        assert!((y - 0.28209479177).abs() < 1e-11);
    }

    #[test]
    fn low_degree_closed_forms() {
        let (t, p) = (0.7_f64, 2.1_f64);
        let y10 = (3.0 / (4.0 * PI)).sqrt() * t.cos();
        let y11 = (3.0 / (4.0 * PI)).sqrt() * t.sin() * p.cos();
        let y1m1 = (3.0 / (4.0 * PI)).sqrt() * t.sin() * p.sin();
        assert!((real_spherical_harmonic(1, 0, t, p).unwrap() - y10).abs() < 1e-15);
        assert!((real_spherical_harmonic(1, 1, t, p).unwrap() - y11).abs() < 1e-15);
        assert!((real_spherical_harmonic(1, -1, t, p).unwrap() - y1m1).abs() < 1e-15);
    }

    #[test]
    fn invalid_order() {
        assert!(matches!(real_spherical_harmonic(1, 2, 0.1_f64, 0.0), Err(Error::InvalidHarmonicOrder { l: 1, m: 2 })));
    }

    #[test]
    fn orthonormal_up_to_degree_six() {
        assert!((sphere_inner((1, 0), (1, 0)) - 1.0).abs() < 1e-10);
        assert!(sphere_inner((1, 0), (1, 1)).abs() < 1e-10);
        let lm: Vec<(usize, i64)> = (0..=6usize).flat_map(|l| (-(l as i64)..=l as i64).map(move |m| (l, m))).collect();
        let mut worst: f64 = 0.0;
        for &a in &lm {
            for &b in &lm {
                let g = sphere_inner(a, b);
                let want = if a == b { 1.0 } else { 0.0 };
                worst = worst.max((g - want).abs());
            }
        }
        assert!(worst < 1e-9, "max |G - I| = {worst}");
    }
}

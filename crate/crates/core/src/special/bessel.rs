//! Cylindrical and spherical Bessel functions of the first kind.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Highest order/degree accepted by the evaluators.
pub const MAX_ORDER: usize = 60;

fn check_order(order: usize) -> Result<()> {
    if order > MAX_ORDER {
        Err(Error::UnsupportedOrder { order, cap: MAX_ORDER })
    } else {
        Ok(())
    }
}

/// Cylindrical Bessel function `J_order(x)` for `x >= 0`.
pub fn bessel_j<T: Scalar>(order: usize, x: T) -> Result<T> {
    check_order(order)?;
    Ok(bessel_j_unchecked(order, x))
}

/// `J_order'(x)`, from `J_m' = (J_{m-1} - J_{m+1}) / 2`.
pub fn bessel_j_prime<T: Scalar>(order: usize, x: T) -> Result<T> {
    check_order(order)?;
    let next = bessel_j_unchecked(order + 1, x);
    if order == 0 {
        return Ok(-next);
    }
    let prev = bessel_j_unchecked(order - 1, x);
    Ok((prev - next) * T::lit(0.5))
}

pub(crate) fn bessel_j_unchecked<T: Scalar>(order: usize, x: T) -> T {
    let x = x.abs();
    if x == T::zero() {
        return if order == 0 { T::one() } else { T::zero() };
    }
    // Alternating series with monotonically shrinking terms: no cancellation.
    if x * x * T::lit(0.25) <= T::of(order + 1) {
        bessel_j_series(order, x)
    } else {
        bessel_j_miller(order, x)
    }
}

fn bessel_j_series<T: Scalar>(order: usize, x: T) -> T {
    let half = x * T::lit(0.5);
    let mut lead = T::one();
    for k in 1..=order {
        lead = lead * half / T::of(k);
    }
    let q = -half * half;
    let mut term = T::one();
    let mut sum = T::one();
    for k in 1..200 {
        term = term * q / (T::of(k) * T::of(order + k));
        sum = sum + term;
        if term.abs() <= T::epsilon() * sum.abs() {
            break;
        }
    }
    lead * sum
}

/// Miller backward recurrence normalised with `J_0 + 2 sum J_{2k} = 1`.
fn bessel_j_miller<T: Scalar>(order: usize, x: T) -> T {
    let xf = x.to_f64().unwrap_or(0.0);
    let top = (order as f64).max(xf);
    let mut start = (top + 20.0 + (40.0 * top).sqrt()).ceil() as usize;
    if start % 2 == 1 {
        start += 1;
    }
    let big = T::lit(1e200);
    let two_over_x = T::lit(2.0) / x;

    let mut above = T::zero();
    let mut current = T::lit(1e-30);
    let mut result = T::zero();
    let mut norm = T::zero();
    let mut k = start;
    loop {
        // `current` holds J_k (unnormalised), `above` holds J_{k+1}.
        if k == order {
            result = current;
        }
        if k == 0 {
            norm = norm + current;
            break;
        }
        if k.is_multiple_of(2) {
            norm = norm + T::lit(2.0) * current;
        }
        let below = T::of(k) * two_over_x * current - above;
        above = current;
        current = below;
        k -= 1;
        if current.abs() > big {
            let s = T::one() / big;
            current = current * s;
            above = above * s;
            result = result * s;
            norm = norm * s;
        }
    }
    result / norm
}

/// Spherical Bessel function `j_degree(x)` for `x >= 0`, with `j_0(0) = 1`.
pub fn spherical_bessel_j<T: Scalar>(degree: usize, x: T) -> Result<T> {
    check_order(degree)?;
    Ok(spherical_bessel_j_unchecked(degree, x))
}

/// `j_l'(x)`; uses `j_0' = -j_1` and `j_l' = j_{l-1} - (l+1)/x j_l`.
pub fn spherical_bessel_j_prime<T: Scalar>(degree: usize, x: T) -> Result<T> {
    check_order(degree)?;
    if degree == 0 {
        return Ok(-spherical_bessel_j_unchecked(1, x));
    }
    if x == T::zero() {
        return Ok(if degree == 1 { T::one() / T::lit(3.0) } else { T::zero() });
    }
    let prev = spherical_bessel_j_unchecked(degree - 1, x);
    let cur = spherical_bessel_j_unchecked(degree, x);
    Ok(prev - T::of(degree + 1) / x * cur)
}

pub(crate) fn spherical_bessel_j_unchecked<T: Scalar>(degree: usize, x: T) -> T {
    let x = x.abs();
    if x == T::zero() {
        return if degree == 0 { T::one() } else { T::zero() };
    }
    if x * x * T::lit(0.5) <= T::of(2 * degree + 3) {
        spherical_series(degree, x)
    } else if x >= T::of(degree + 1) {
        spherical_forward(degree, x)
    } else {
        spherical_miller(degree, x)
    }
}

fn spherical_series<T: Scalar>(degree: usize, x: T) -> T {
    let mut lead = T::one();
    for k in 1..=degree {
        lead = lead * x / T::of(2 * k + 1);
    }
    let q = -x * x * T::lit(0.5);
    let mut term = T::one();
    let mut sum = T::one();
    for k in 1..200 {
        term = term * q / (T::of(k) * T::of(2 * degree + 2 * k + 1));
        sum = sum + term;
        if term.abs() <= T::epsilon() * sum.abs() {
            break;
        }
    }
    lead * sum
}

fn spherical_forward<T: Scalar>(degree: usize, x: T) -> T {
    let (s, c) = (x.sin(), x.cos());
    let j0 = s / x;
    if degree == 0 {
        return j0;
    }
    let mut prev = j0;
    let mut cur = s / (x * x) - c / x;
    for k in 1..degree {
        let next = T::of(2 * k + 1) / x * cur - prev;
        prev = cur;
        cur = next;
    }
    cur
}

/// Backward recurrence, normalised against whichever of `j_0`, `j_1` is larger.
fn spherical_miller<T: Scalar>(degree: usize, x: T) -> T {
    let xf = x.to_f64().unwrap_or(0.0);
    let top = (degree as f64).max(xf);
    let start = (top + 20.0 + (40.0 * top).sqrt()).ceil() as usize;
    let big = T::lit(1e200);

    let mut above = T::zero();
    let mut current = T::lit(1e-30);
    let mut result = T::zero();
    let mut j1_raw = T::zero();
    let mut k = start;
    loop {
        if k == degree {
            result = current;
        }
        if k == 1 {
            j1_raw = current;
        }
        if k == 0 {
            break;
        }
        let below = T::of(2 * k + 1) / x * current - above;
        above = current;
        current = below;
        k -= 1;
        if current.abs() > big {
            let s = T::one() / big;
            current = current * s;
            above = above * s;
            result = result * s;
            j1_raw = j1_raw * s;
        }
    }
    let j0_raw = current;
    let (s, c) = (x.sin(), x.cos());
    let j0 = s / x;
    let j1 = s / (x * x) - c / x;
    if j0.abs() >= j1.abs() {
        result * (j0 / j0_raw)
    } else {
        result * (j1 / j1_raw)
    }
}

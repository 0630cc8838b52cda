//! Positive zeros of `J_m` and `j_l`.
//!
//! Zeros of order 0 come from McMahon's expansion (cylindrical) or are exact
//! (`k pi`, spherical). Higher orders follow from interlacing,
//! `z_{m-1,k} < z_{m,k} < z_{m-1,k+1}`, which brackets every root; inside the
//! bracket a safeguarded Newton iteration polishes it to round-off.

use crate::error::Result;
use crate::scalar::Scalar;
use crate::special::bessel::{bessel_j_unchecked, spherical_bessel_j_unchecked, MAX_ORDER};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Family {
    Cylindrical,
    Spherical,
}

impl Family {
    fn value<T: Scalar>(self, order: usize, x: T) -> T {
        match self {
            Family::Cylindrical => bessel_j_unchecked(order, x),
            Family::Spherical => spherical_bessel_j_unchecked(order, x),
        }
    }

    fn derivative<T: Scalar>(self, order: usize, x: T) -> T {
        match self {
            Family::Cylindrical => {
                let next = bessel_j_unchecked(order + 1, x);
                if order == 0 {
                    -next
                } else {
                    (bessel_j_unchecked(order - 1, x) - next) * T::lit(0.5)
                }
            }
            Family::Spherical => {
                // At a zero of j_l, j_l' = -j_{l+1}; use the general identity elsewhere.
                let next = spherical_bessel_j_unchecked(order + 1, x);
                T::of(order) / x * spherical_bessel_j_unchecked(order, x) - next
            }
        }
    }
}

/// Root of `f` in `[lo, hi]` given a sign change, starting Newton from `guess`.
pub(crate) fn safeguarded_newton<T, F>(f: F, mut lo: T, mut hi: T, guess: T) -> T
where
    T: Scalar,
    F: Fn(T) -> (T, T),
{
    let (flo, _) = f(lo);
    let lo_negative = flo < T::zero();
    let mut x = if guess > lo && guess < hi { guess } else { (lo + hi) * T::lit(0.5) };
    let tol = T::epsilon() * T::lit(4.0);
    for _ in 0..200 {
        let (fx, dfx) = f(x);
        if fx == T::zero() {
            return x;
        }
        if (fx < T::zero()) == lo_negative {
            lo = x;
        } else {
            hi = x;
        }
        let newton = x - fx / dfx;
        let next = if dfx != T::zero() && newton > lo && newton < hi { newton } else { (lo + hi) * T::lit(0.5) };
        let step = (next - x).abs();
        x = next;
        if step <= tol * x.abs() || (hi - lo) <= tol * x.abs() {
            break;
        }
    }
    x
}

fn mcmahon<T: Scalar>(order: usize, k: usize) -> T {
    let mu = T::of(4 * order * order);
    let beta = (T::of(k) + T::of(order) * T::lit(0.5) - T::lit(0.25)) * T::PI();
    let b8 = T::lit(8.0) * beta;
    beta - (mu - T::one()) / b8
        - T::lit(4.0) * (mu - T::one()) * (T::lit(7.0) * mu - T::lit(31.0)) / (T::lit(3.0) * b8 * b8 * b8)
}

fn refine<T: Scalar>(family: Family, order: usize, lo: T, hi: T, guess: T) -> T {
    safeguarded_newton(|x| (family.value(order, x), family.derivative(order, x)), lo, hi, guess)
}

fn order_zero_zeros<T: Scalar>(family: Family, count: usize) -> Vec<T> {
    (1..=count)
        .map(|k| match family {
            Family::Spherical => T::of(k) * T::PI(),
            Family::Cylindrical => {
                let guess = mcmahon::<T>(0, k);
                refine(family, 0, guess - T::lit(0.5), guess + T::lit(0.5), guess)
            }
        })
        .collect()
}

/// Zeros of the next order from those of the previous one (which must hold
/// at least `count + 1` entries).
fn next_order_zeros<T: Scalar>(family: Family, order: usize, prev: &[T], count: usize) -> Vec<T> {
    debug_assert!(prev.len() > count);
    (0..count)
        .map(|i| {
            let (lo, hi) = (prev[i], prev[i + 1]);
            let guess =
                if family == Family::Cylindrical { mcmahon::<T>(order, i + 1) } else { (lo + hi) * T::lit(0.5) };
            refine(family, order, lo, hi, guess)
        })
        .collect()
}

/// First `count` zeros of the given order.
pub(crate) fn zeros<T: Scalar>(family: Family, order: usize, count: usize) -> Vec<T> {
    let mut current = order_zero_zeros::<T>(family, count + order);
    for m in 1..=order {
        let len = count + order - m;
        current = next_order_zeros(family, m, &current, len);
    }
    current.truncate(count);
    current
}

/// For every order `0..`, all zeros strictly below `limit`, plus one more
/// beyond it. Orders stop at the first one whose leading zero exceeds `limit`.
/// Returns `None` when that would require an order above [`MAX_ORDER`].
pub(crate) fn zeros_below(family: Family, limit: f64) -> Option<Vec<Vec<f64>>> {
    let mut table: Vec<Vec<f64>> = Vec::new();
    // Each order consumes one bracket, so start with enough order-0 zeros to
    // stay past the limit up to the order cap.
    let count0 = (limit / std::f64::consts::PI).ceil() as usize + MAX_ORDER + 4;
    let mut current = order_zero_zeros::<f64>(family, count0);
    let mut order = 0;
    loop {
        let keep = current.iter().take_while(|&&z| z < limit).count();
        if keep == 0 {
            break;
        }
        if keep + 1 >= current.len() {
            return None;
        }
        table.push(current[..=keep].to_vec());
        order += 1;
        if order > MAX_ORDER {
            return None;
        }
        current = next_order_zeros(family, order, &current, current.len() - 1);
    }
    Some(table)
}

/// `k`-th positive zero (`k >= 1`) of `J_order`.
pub fn bessel_j_zero<T: Scalar>(order: usize, k: usize) -> Result<T> {
    assert!(k >= 1, "zero index is 1-based");
    check(order)?;
    Ok(zeros::<T>(Family::Cylindrical, order, k)[k - 1])
}

/// `k`-th positive zero (`k >= 1`) of `j_degree`.
pub fn spherical_bessel_zero<T: Scalar>(degree: usize, k: usize) -> Result<T> {
    assert!(k >= 1, "zero index is 1-based");
    check(degree)?;
    Ok(zeros::<T>(Family::Spherical, degree, k)[k - 1])
}

fn check(order: usize) -> Result<()> {
    if order > MAX_ORDER {
        Err(crate::error::Error::UnsupportedOrder { order, cap: MAX_ORDER })
    } else {
        Ok(())
    }
}

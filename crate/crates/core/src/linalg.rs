//! Dense helpers: matrix exponential, norms, eigenvalue margins.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

const PADE13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];
const THETA13: f64 = 5.371920351148152;

pub fn norm_one(a: &DMatrix<f64>) -> f64 {
    a.column_iter().map(|c| c.iter().map(|v| v.abs()).sum::<f64>()).fold(0.0, f64::max)
}

pub fn norm_inf(a: &DMatrix<f64>) -> f64 {
    a.row_iter().map(|r| r.iter().map(|v| v.abs()).sum::<f64>()).fold(0.0, f64::max)
}

/// `e^A` by degree-13 Padé approximation with scaling and squaring.
pub fn expm(a: &DMatrix<f64>) -> DMatrix<f64> {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "expm needs a square matrix");
    if n == 0 {
        return DMatrix::zeros(0, 0);
    }
    let norm = norm_one(a);
    let s = if norm > THETA13 { (norm / THETA13).log2().ceil() as i32 } else { 0 };
    let a = a * 2f64.powi(-s);
    let b = &PADE13;
    let id = DMatrix::<f64>::identity(n, n);
    let a2 = &a * &a;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;

    let inner_u = &a6 * (&a6 * b[13] + &a4 * b[11] + &a2 * b[9]);
    let u = &a * (inner_u + &a6 * b[7] + &a4 * b[5] + &a2 * b[3] + &id * b[1]);
    let inner_v = &a6 * (&a6 * b[12] + &a4 * b[10] + &a2 * b[8]);
    let v = inner_v + &a6 * b[6] + &a4 * b[4] + &a2 * b[2] + &id * b[0];

    let p = &v + &u;
    let q = &v - &u;
    let mut r = q.lu().solve(&p).expect("Padé denominator is nonsingular");
    for _ in 0..s {
        r = &r * &r;
    }
    r
}

/// Largest real part over the eigenvalues; `-inf` for an empty matrix.
pub fn max_real_eigenvalue(a: &DMatrix<f64>) -> Result<f64> {
    if a.nrows() == 0 {
        return Ok(f64::NEG_INFINITY);
    }
    if a.iter().any(|v| !v.is_finite()) {
        return Err(Error::Eigensolver);
    }
    let schur = a.clone().try_schur(1e-14, 10_000).ok_or(Error::Eigensolver)?;
    let eig = schur.complex_eigenvalues();
    Ok(eig.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max))
}

pub fn spectral_norm(a: &DMatrix<f64>) -> f64 {
    if a.is_empty() {
        return 0.0;
    }
    a.singular_values().max()
}

/// 2-norm condition number, `inf` when singular.
pub fn condition_number(a: &DMatrix<f64>) -> f64 {
    if a.is_empty() {
        return 1.0;
    }
    let sv = a.singular_values();
    let (lo, hi) = (sv.min(), sv.max());
    if lo == 0.0 {
        f64::INFINITY
    } else {
        hi / lo
    }
}

pub fn max_abs_diff(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a - b).amax()
}

pub fn vector(v: &[f64]) -> DVector<f64> {
    DVector::from_column_slice(v)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_of_diagonal_and_nilpotent() {
        let d = DMatrix::from_diagonal(&DVector::from_vec(vec![-1.0, 0.5, -30.0]));
        let e = expm(&d);
        for (i, x) in [-1.0f64, 0.5, -30.0].iter().enumerate() {
            assert!((e[(i, i)] - x.exp()).abs() <= 1e-14 * x.exp().max(1.0));
        }
        let n = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 0.0]);
        let e = expm(&n);
        assert_eq!(e, DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 0.0, 1.0]));
    }

    #[test]
    fn rotation_generator() {
        let t = 7.3;
        let a = DMatrix::from_row_slice(2, 2, &[0.0, t, -t, 0.0]);
        let e = expm(&a);
        let want = DMatrix::from_row_slice(2, 2, &[t.cos(), t.sin(), -t.sin(), t.cos()]);
        assert!(max_abs_diff(&e, &want) < 1e-13);
    }

    #[test]
    fn semigroup_on_random_matrix() {
        let a = DMatrix::from_fn(6, 6, |i, j| ((i * 7 + j * 3) % 11) as f64 / 5.0 - 1.0);
        let full = expm(&a);
        let half = expm(&(&a * 0.5));
        assert!(max_abs_diff(&full, &(&half * &half)) < 1e-12 * norm_one(&full));
    }

    #[test]
    fn margins() {
        let d = DMatrix::from_diagonal(&DVector::from_vec(vec![-1.0, -2.0]));
        assert_eq!(max_real_eigenvalue(&d).unwrap(), -1.0);
        let r = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0]);
        assert!(max_real_eigenvalue(&r).unwrap().abs() < 1e-15);
        let bad = DMatrix::from_row_slice(1, 1, &[f64::NAN]);
        assert_eq!(max_real_eigenvalue(&bad), Err(Error::Eigensolver));
    }

    #[test]
    fn conditioning() {
        let d = DMatrix::from_diagonal(&DVector::from_vec(vec![4.0, 0.5]));
        assert!((condition_number(&d) - 8.0).abs() < 1e-12);
        assert!((spectral_norm(&d) - 4.0).abs() < 1e-12);
        assert_eq!(condition_number(&DMatrix::zeros(2, 2)), f64::INFINITY);
    }
}

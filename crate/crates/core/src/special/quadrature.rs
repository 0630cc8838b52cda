use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RuleKind {
    GaussLegendre,
    PeriodicTrapezoid,
}

/// Nodes and positive weights on a given interval.
#[derive(Clone, Debug, PartialEq)]
pub struct QuadratureRule<T> {
    pub nodes: Vec<T>,
    pub weights: Vec<T>,
}

impl<T: Scalar> QuadratureRule<T> {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (T, T)> + '_ {
        self.nodes.iter().copied().zip(self.weights.iter().copied())
    }

    pub fn integrate<F: Fn(T) -> T>(&self, f: F) -> T {
        self.iter().fold(T::zero(), |acc, (x, w)| acc + w * f(x))
    }
}

pub fn quadrature_rule<T: Scalar>(kind: RuleKind, n: usize, interval: (T, T)) -> QuadratureRule<T> {
    match kind {
        RuleKind::GaussLegendre => gauss_legendre(n, interval),
        RuleKind::PeriodicTrapezoid => periodic_trapezoid(n, interval),
    }
}

/// `n`-point Gauss–Legendre rule, exact for polynomials of degree `2n - 1`.
pub fn gauss_legendre<T: Scalar>(n: usize, interval: (T, T)) -> QuadratureRule<T> {
    assert!(n >= 1);
    let (a, b) = interval;
    let half = (b - a) * T::lit(0.5);
    let mid = (a + b) * T::lit(0.5);
    let mut nodes = vec![T::zero(); n];
    let mut weights = vec![T::zero(); n];
    // Roots are computed in f64 and converted; the rule is symmetric.
    for i in 0..n.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        // x is descending in i; fill ascending from both ends.
        nodes[i] = mid - half * T::lit(x);
        nodes[n - 1 - i] = mid + half * T::lit(x);
        weights[i] = half * T::lit(w);
        weights[n - 1 - i] = half * T::lit(w);
    }
    QuadratureRule { nodes, weights }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// `n`-point trapezoid rule for periodic integrands on `[a, b)`; exact for
/// trigonometric polynomials of degree below `n`.
pub fn periodic_trapezoid<T: Scalar>(n: usize, interval: (T, T)) -> QuadratureRule<T> {
    assert!(n >= 1);
    let (a, b) = interval;
    let h = (b - a) / T::of(n);
    QuadratureRule { nodes: (0..n).map(|i| a + h * T::of(i)).collect(), weights: vec![h; n] }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::special::{bessel::bessel_j, zeros::bessel_j_zero};
    use std::f64::consts::PI;

    #[test]
    fn invariants() {
        for n in [1usize, 2, 5, 17, 64, 200] {
            let r = gauss_legendre::<f64>(n, (-1.0, 1.0));
            assert!(r.nodes.windows(2).all(|w| w[0] < w[1]));
            assert!(r.weights.iter().all(|&w| w > 0.0));
            assert!((r.weights.iter().sum::<f64>() - 2.0).abs() < 1e-13);
            let t = periodic_trapezoid::<f64>(n, (0.0, 2.0 * PI));
            assert!((t.weights.iter().sum::<f64>() - 2.0 * PI).abs() < 1e-13);
        }
    }

    #[test]
    fn exactness() {
        let r = gauss_legendre::<f64>(5, (-1.0, 1.0));
        assert!(r.integrate(|x| x.powi(9)).abs() < 1e-15);
        assert!((r.integrate(|x| x.powi(8)) - 2.0 / 9.0).abs() < 1e-15);
        let t = periodic_trapezoid::<f64>(16, (0.0, 2.0 * PI));
        assert!((t.integrate(|x| (3.0 * x).cos().powi(2)) - PI).abs() < 1e-13);
    }

    #[test]
    fn bessel_norm_identity() {
        // int_0^2 J0(j01 r / 2)^2 r dr = 2 J1(j01)^2
        let j01: f64 = bessel_j_zero(0, 1).unwrap();
        let r = gauss_legendre::<f64>(64, (0.0, 2.0));
        let got = r.integrate(|x| bessel_j(0, j01 * x / 2.0).unwrap().powi(2) * x);
        let want = 2.0 * bessel_j(1, j01).unwrap().powi(2);
        assert!((got - want).abs() < 1e-10);
        assert!((want - 0.539030).abs() < 5e-6);
    }

    #[test]
    fn convergence_is_monotone_until_roundoff() {
        let exact = (3.0_f64.exp() - (-3.0_f64).exp()) / 3.0;
        let mut last = f64::INFINITY;
        for n in [1usize, 2, 4, 8] {
            let r = gauss_legendre::<f64>(n, (-1.0, 1.0));
            let err = (r.integrate(|x| (3.0 * x).exp()) - exact).abs();
            assert!(err < last || err < 1e-13);
            last = err;
        }
    }

    #[test]
    fn single_precision_rule() {
        let r = gauss_legendre::<f32>(4, (0.0, 1.0));
        assert!((r.integrate(|x| x * x) - 1.0 / 3.0).abs() < 1e-6);
    }
}

use std::collections::HashMap;
use std::f64::consts::PI;

use super::{Angular, Domain, EigenMode, ModeTable, Parity, Shape};
use crate::error::{Error, Result};
use crate::special::bessel::{bessel_j_unchecked, spherical_bessel_j_unchecked};
use crate::special::harmonics::{azimuthal, normalized_legendre_table};
use crate::special::quadrature::{gauss_legendre, periodic_trapezoid};

const BOUNDARY_TOL: f64 = 1e-9;

pub(crate) struct Polar {
    pub r: f64,
    /// Azimuth on the disk, polar angle on the ball.
    pub theta: f64,
    pub phi: f64,
}

pub(crate) fn to_polar(shape: Shape, point: &[f64]) -> Polar {
    match shape {
        Shape::Disk => {
            let (x, y) = (point[0], point[1]);
            Polar { r: x.hypot(y), theta: y.atan2(x), phi: 0.0 }
        }
        Shape::Ball => {
            let (x, y, z) = (point[0], point[1], point[2]);
            let r = (x * x + y * y + z * z).sqrt();
            let theta = if r > 0.0 { (z / r).clamp(-1.0, 1.0).acos() } else { 0.0 };
            Polar { r, theta, phi: y.atan2(x) }
        }
    }
}

fn check_dimension(domain: &Domain, point: &[f64]) {
    assert_eq!(point.len(), domain.dimension(), "point dimension does not match the domain");
}

fn radial_factor(shape: Shape, order: usize, x: f64) -> f64 {
    match shape {
        Shape::Disk => bessel_j_unchecked(order, x),
        Shape::Ball => spherical_bessel_j_unchecked(order, x),
    }
}

fn angular_factor(angular: &Angular, p: &Polar) -> f64 {
    match *angular {
        Angular::Disk { m: 0, .. } => 1.0,
        Angular::Disk { m, parity: Parity::Cos } => (m as f64 * p.theta).cos(),
        Angular::Disk { m, parity: Parity::Sin } => (m as f64 * p.theta).sin(),
        Angular::Ball { l, m } => {
            let table = normalized_legendre_table(l, p.theta);
            let am = m.unsigned_abs() as usize;
            azimuthal(m, p.phi, table[l * (l + 1) / 2 + am])
        }
    }
}

/// Value of the L²-normalised eigenfunction at a point of the closed domain.
pub fn eval_mode(mode: &EigenMode, domain: &Domain, point: &[f64]) -> Result<f64> {
    check_dimension(domain, point);
    let p = to_polar(domain.shape, point);
    if p.r > domain.radius * (1.0 + 1e-12) {
        return Err(Error::OutsideDomain { radius: p.r, domain_radius: domain.radius });
    }
    let radial = mode.norm_const * radial_factor(domain.shape, mode.angular.order(), mode.alpha * p.r / domain.radius);
    Ok(radial * angular_factor(&mode.angular, &p))
}

/// Outward normal derivative of the eigenfunction at a boundary point.
pub fn normal_trace(mode: &EigenMode, domain: &Domain, point: &[f64]) -> Result<f64> {
    check_dimension(domain, point);
    let p = to_polar(domain.shape, point);
    if (p.r - domain.radius).abs() > BOUNDARY_TOL * domain.radius {
        return Err(Error::NotOnBoundary { radius: p.r, domain_radius: domain.radius });
    }
    Ok(mode.trace_amp * angular_factor(&mode.angular, &p))
}

/// `<T_n φ_i, T_n φ_j>` over the boundary, in closed form.
///
/// Angular factors are orthogonal on the circle/sphere, so only matching
/// indices contribute `amp_i amp_j R^{d-1} ∫Θ²`, which reduces to
/// `±2 α_i α_j / R³` on both domains.
pub fn boundary_inner(a: &EigenMode, b: &EigenMode, domain: &Domain) -> f64 {
    if a.angular != b.angular {
        return 0.0;
    }
    let r = domain.radius;
    let measure = match a.angular {
        Angular::Disk { m: 0, .. } => 2.0 * PI * r,
        Angular::Disk { .. } => PI * r,
        Angular::Ball { .. } => r * r,
    };
    a.trace_amp * b.trace_amp * measure
}

/// Same inner product by surface quadrature of pointwise traces.
pub fn boundary_inner_quadrature(a: &EigenMode, b: &EigenMode, domain: &Domain) -> f64 {
    let r = domain.radius;
    let order = a.angular.order().max(b.angular.order());
    let n = 4 * order + 16;
    match domain.shape {
        Shape::Disk => {
            let rule = periodic_trapezoid(n, (0.0, 2.0 * PI));
            rule.iter()
                .map(|(t, w)| {
                    let pt = [r * t.cos(), r * t.sin()];
                    w * r * normal_trace(a, domain, &pt).unwrap() * normal_trace(b, domain, &pt).unwrap()
                })
                .sum()
        }
        Shape::Ball => {
            let polar = gauss_legendre::<f64>(n, (-1.0, 1.0));
            let azim = periodic_trapezoid::<f64>(n, (0.0, 2.0 * PI));
            let mut s = 0.0;
            for (ct, wt) in polar.iter() {
                let st = (1.0 - ct * ct).sqrt();
                for (ph, wp) in azim.iter() {
                    let pt = [r * st * ph.cos(), r * st * ph.sin(), r * ct];
                    s +=
                        wt * wp * r * r * normal_trace(a, domain, &pt).unwrap() * normal_trace(b, domain, &pt).unwrap();
                }
            }
            s
        }
    }
}

/// Evaluates every mode of a table at a point, sharing radial and angular work.
pub struct BasisEvaluator<'a> {
    table: &'a ModeTable,
    /// Distinct radial factors: (order, alpha, norm).
    radial: Vec<(usize, f64, f64)>,
    slot: Vec<usize>,
    max_order: usize,
}

impl<'a> BasisEvaluator<'a> {
    pub fn new(table: &'a ModeTable) -> Self {
        let mut index: HashMap<(usize, usize), usize> = HashMap::new();
        let mut radial = Vec::new();
        let mut slot = Vec::with_capacity(table.len());
        for m in &table.modes {
            let key = (m.angular.order(), m.radial_rank);
            let next = radial.len();
            let s = *index.entry(key).or_insert_with(|| {
                radial.push((key.0, m.alpha, m.norm_const));
                next
            });
            slot.push(s);
        }
        Self { table, radial, slot, max_order: table.max_order() }
    }

    /// Writes `φ_n(point)` for every mode into `out` (length = table size).
    /// Points outside the domain are evaluated by continuation.
    pub fn values_into(&self, point: &[f64], out: &mut [f64], scratch: &mut Vec<f64>) {
        let domain = &self.table.domain;
        let shape = domain.shape;
        let p = to_polar(shape, point);
        let scale = p.r / domain.radius;
        scratch.clear();
        scratch
            .extend(self.radial.iter().map(|&(order, alpha, norm)| norm * radial_factor(shape, order, alpha * scale)));
        match shape {
            Shape::Disk => {
                for ((o, m), &s) in out.iter_mut().zip(&self.table.modes).zip(&self.slot) {
                    *o = scratch[s] * angular_factor(&m.angular, &p);
                }
            }
            Shape::Ball => {
                let legendre = normalized_legendre_table(self.max_order, p.theta);
                for ((o, m), &s) in out.iter_mut().zip(&self.table.modes).zip(&self.slot) {
                    if let Angular::Ball { l, m } = m.angular {
                        let am = m.unsigned_abs() as usize;
                        *o = scratch[s] * azimuthal(m, p.phi, legendre[l * (l + 1) / 2 + am]);
                    }
                }
            }
        }
    }

    pub fn values(&self, point: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.table.len()];
        let mut scratch = Vec::new();
        self.values_into(point, &mut out, &mut scratch);
        out
    }
}

use std::f64::consts::PI;

use nalgebra::DMatrix;
use rayon::prelude::*;

use super::{Angular, BasisEvaluator, Domain, ModeTable, Parity, Shape};
use crate::special::bessel::{bessel_j_unchecked, spherical_bessel_j_unchecked};
use crate::special::harmonics::normalized_legendre_table;
use crate::special::quadrature::{gauss_legendre, periodic_trapezoid, QuadratureRule};

/// Tensor-product quadrature over the disk (r, θ) or ball (r, cos θ, φ).
#[derive(Clone, Debug)]
pub struct ProjectionGrid {
    pub domain: Domain,
    pub radial: QuadratureRule<f64>,
    /// Gauss–Legendre in `cos θ`; ball only.
    pub polar: Option<QuadratureRule<f64>>,
    pub azimuth: QuadratureRule<f64>,
}

impl ProjectionGrid {
    /// Radial size `2·k_max·4 + 32`, angular size `4·order_max + 16`, both
    /// multiplied by `refine`.
    pub fn for_table(table: &ModeTable, refine: usize) -> Self {
        let refine = refine.max(1);
        let n_r = (2 * table.max_radial_rank() * 4 + 32) * refine;
        let n_a = (4 * table.max_order() + 16) * refine;
        Self::with_sizes(table.domain, n_r, n_a)
    }

    pub fn with_sizes(domain: Domain, n_radial: usize, n_angular: usize) -> Self {
        let radial = gauss_legendre(n_radial, (0.0, domain.radius));
        let azimuth = periodic_trapezoid(n_angular, (0.0, 2.0 * PI));
        let polar = match domain.shape {
            Shape::Disk => None,
            Shape::Ball => Some(gauss_legendre(n_angular, (-1.0, 1.0))),
        };
        Self { domain, radial, polar, azimuth }
    }

    fn point(&self, r: f64, ct: f64, ph: f64) -> Vec<f64> {
        match self.domain.shape {
            Shape::Disk => vec![r * ph.cos(), r * ph.sin()],
            Shape::Ball => {
                let st = (1.0 - ct * ct).max(0.0).sqrt();
                vec![r * st * ph.cos(), r * st * ph.sin(), r * ct]
            }
        }
    }

    /// `∫_Ω f dx`.
    pub fn integrate<F: Fn(&[f64]) -> f64 + Sync>(&self, f: F) -> f64 {
        let d = self.domain.dimension() as i32;
        let per_radius: Vec<f64> = self
            .radial
            .nodes
            .par_iter()
            .map(|&r| {
                let mut s = 0.0;
                match &self.polar {
                    None => {
                        for (ph, wp) in self.azimuth.iter() {
                            s += wp * f(&self.point(r, 0.0, ph));
                        }
                    }
                    Some(polar) => {
                        for (ct, wt) in polar.iter() {
                            for (ph, wp) in self.azimuth.iter() {
                                s += wt * wp * f(&self.point(r, ct, ph));
                            }
                        }
                    }
                }
                s
            })
            .collect();
        per_radius.iter().zip(self.radial.iter()).map(|(s, (r, w))| w * r.powi(d - 1) * s).sum()
    }
}

/// `<f, φ_n>` for every mode of the table by separable product quadrature.
pub fn project_function<F: Fn(&[f64]) -> f64 + Sync>(table: &ModeTable, f: F) -> Vec<f64> {
    project_function_refined(table, f, 1)
}

/// As [`project_function`] with every quadrature size multiplied by `refine`.
pub fn project_function_refined<F: Fn(&[f64]) -> f64 + Sync>(table: &ModeTable, f: F, refine: usize) -> Vec<f64> {
    let grid = ProjectionGrid::for_table(table, refine);
    project_on_grid(table, &grid, f)
}

pub(crate) fn project_on_grid<F: Fn(&[f64]) -> f64 + Sync>(table: &ModeTable, grid: &ProjectionGrid, f: F) -> Vec<f64> {
    let max_order = table.max_order();
    let shape = table.domain.shape;
    let radius = table.domain.radius;
    let az = &grid.azimuth;
    // trig[m][j] = (cos mφ_j, sin mφ_j)
    let trig: Vec<Vec<(f64, f64)>> = (0..=max_order)
        .map(|m| az.nodes.iter().map(|&p| ((m as f64 * p).cos(), (m as f64 * p).sin())).collect())
        .collect();
    let fourier = |values: &[f64]| -> Vec<(f64, f64)> {
        trig.iter()
            .map(|row| {
                row.iter()
                    .zip(values)
                    .zip(&az.weights)
                    .fold((0.0, 0.0), |(c, s), ((&(ct, st), v), w)| (c + w * v * ct, s + w * v * st))
            })
            .collect()
    };
    let legendre: Vec<Vec<f64>> = match &grid.polar {
        Some(polar) => polar.nodes.iter().map(|&ct| normalized_legendre_table(max_order, ct.acos())).collect(),
        None => Vec::new(),
    };

    let partials: Vec<Vec<f64>> = grid
        .radial
        .nodes
        .par_iter()
        .zip(grid.radial.weights.par_iter())
        .map(|(&r, &w)| {
            let mut out = vec![0.0; table.len()];
            match shape {
                Shape::Disk => {
                    let values: Vec<f64> = az.nodes.iter().map(|&ph| f(&grid.point(r, 0.0, ph))).collect();
                    let proj = fourier(&values);
                    for (o, mode) in out.iter_mut().zip(&table.modes) {
                        if let Angular::Disk { m, parity } = mode.angular {
                            let ang = match parity {
                                Parity::Cos => proj[m].0,
                                Parity::Sin => proj[m].1,
                            };
                            let rad = mode.norm_const * bessel_j_unchecked(m, mode.alpha * r / radius);
                            *o = w * r * rad * ang;
                        }
                    }
                }
                Shape::Ball => {
                    let polar = grid.polar.as_ref().expect("ball grid has a polar rule");
                    // angular[l, m] accumulated over polar nodes
                    let mut ang = vec![0.0; (max_order + 1) * (2 * max_order + 1)];
                    let at = |l: usize, m: i64| l * (2 * max_order + 1) + (m + max_order as i64) as usize;
                    for ((&ct, &wt), leg) in polar.nodes.iter().zip(&polar.weights).zip(&legendre) {
                        let values: Vec<f64> = az.nodes.iter().map(|&ph| f(&grid.point(r, ct, ph))).collect();
                        let proj = fourier(&values);
                        for l in 0..=max_order {
                            for m in -(l as i64)..=(l as i64) {
                                let am = m.unsigned_abs() as usize;
                                let p = leg[l * (l + 1) / 2 + am];
                                let a = match m.cmp(&0) {
                                    std::cmp::Ordering::Equal => proj[0].0,
                                    std::cmp::Ordering::Greater => std::f64::consts::SQRT_2 * proj[am].0,
                                    std::cmp::Ordering::Less => std::f64::consts::SQRT_2 * proj[am].1,
                                };
                                ang[at(l, m)] += wt * p * a;
                            }
                        }
                    }
                    for (o, mode) in out.iter_mut().zip(&table.modes) {
                        if let Angular::Ball { l, m } = mode.angular {
                            let rad = mode.norm_const * spherical_bessel_j_unchecked(l, mode.alpha * r / radius);
                            *o = w * r * r * rad * ang[at(l, m)];
                        }
                    }
                }
            }
            out
        })
        .collect();

    let mut coeffs = vec![0.0; table.len()];
    for p in &partials {
        for (c, v) in coeffs.iter_mut().zip(p) {
            *c += v;
        }
    }
    coeffs
}

/// Uniform grid with `resolution` points per axis on `[-R, R]^d`, restricted
/// to the closed domain.
pub fn grid_points(domain: &Domain, resolution: usize) -> Vec<Vec<f64>> {
    assert!(resolution >= 2, "grid resolution must be at least 2");
    let r = domain.radius;
    let axis: Vec<f64> = (0..resolution).map(|i| -r + 2.0 * r * i as f64 / (resolution - 1) as f64).collect();
    let inside = |p: &[f64]| p.iter().map(|x| x * x).sum::<f64>().sqrt() <= r * (1.0 + 1e-12);
    let mut pts = Vec::new();
    match domain.shape {
        Shape::Disk => {
            for &x in &axis {
                for &y in &axis {
                    let p = vec![x, y];
                    if inside(&p) {
                        pts.push(p);
                    }
                }
            }
        }
        Shape::Ball => {
            for &x in &axis {
                for &y in &axis {
                    for &z in &axis {
                        let p = vec![x, y, z];
                        if inside(&p) {
                            pts.push(p);
                        }
                    }
                }
            }
        }
    }
    pts
}

/// For each coefficient vector, `max_x |Σ_n c_n φ_n(x)|` over the given points.
pub fn grid_reconstruction_max(table: &ModeTable, points: &[Vec<f64>], states: &[Vec<f64>]) -> Vec<f64> {
    if states.is_empty() {
        return Vec::new();
    }
    let n = table.len();
    let coeffs = DMatrix::from_fn(n, states.len(), |i, j| states[j][i]);
    let evaluator = BasisEvaluator::new(table);
    const CHUNK: usize = 256;
    points
        .par_chunks(CHUNK)
        .map(|chunk| {
            let mut block = DMatrix::<f64>::zeros(chunk.len(), n);
            let mut row = vec![0.0; n];
            let mut scratch = Vec::new();
            for (i, p) in chunk.iter().enumerate() {
                evaluator.values_into(p, &mut row, &mut scratch);
                for (j, v) in row.iter().enumerate() {
                    block[(i, j)] = *v;
                }
            }
            let values = block * &coeffs;
            (0..states.len())
                .map(|t| values.column(t).iter().fold(0.0_f64, |m, v| m.max(v.abs())))
                .collect::<Vec<f64>>()
        })
        .reduce(|| vec![0.0; states.len()], |a, b| a.iter().zip(&b).map(|(x, y)| x.max(*y)).collect())
}

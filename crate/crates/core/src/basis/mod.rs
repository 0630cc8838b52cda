//! Dirichlet eigenpairs of `Δ + λ` on the disk and ball of radius `R`.
//!
//! Disk modes are `N J_m(α r / R) Θ(θ)` with `Θ ∈ {1, cos mθ, sin mθ}` and
//! `α` a zero of `J_m`; ball modes are `N j_l(α r / R) Y_{l,m}(θ, φ)` with `α`
//! a zero of `j_l` and `Y` the real spherical harmonics. Both have Dirichlet
//! eigenvalue `κ = (α / R)²` and `μ = λ - κ`.

mod eval;
mod project;

pub use eval::{boundary_inner, boundary_inner_quadrature, eval_mode, normal_trace, BasisEvaluator};
pub use project::{grid_points, grid_reconstruction_max, project_function, project_function_refined, ProjectionGrid};

use std::cmp::Ordering;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::special::bessel::{bessel_j_unchecked, spherical_bessel_j_unchecked, MAX_ORDER};
use crate::special::zeros::{zeros_below, Family};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Shape {
    Disk,
    Ball,
}

impl Shape {
    pub fn dimension(self) -> usize {
        match self {
            Shape::Disk => 2,
            Shape::Ball => 3,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Shape::Disk => "disk",
            Shape::Ball => "ball",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Domain {
    pub shape: Shape,
    pub radius: f64,
}

impl Domain {
    pub fn new(shape: Shape, radius: f64) -> Self {
        assert!(radius > 0.0, "domain radius must be positive");
        Self { shape, radius }
    }

    pub fn disk(radius: f64) -> Self {
        Self::new(Shape::Disk, radius)
    }

    pub fn ball(radius: f64) -> Self {
        Self::new(Shape::Ball, radius)
    }

    pub fn dimension(&self) -> usize {
        self.shape.dimension()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Parity {
    Cos,
    Sin,
}

/// Angular indices of a mode.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Angular {
    Disk { m: usize, parity: Parity },
    Ball { l: usize, m: i64 },
}

impl Angular {
    /// Bessel order of the radial factor (`m` on the disk, `l` on the ball).
    pub fn order(&self) -> usize {
        match *self {
            Angular::Disk { m, .. } => m,
            Angular::Ball { l, .. } => l,
        }
    }

    fn tie_key(&self) -> (usize, i64) {
        match *self {
            Angular::Disk { m, parity } => (m, if parity == Parity::Cos { 0 } else { 1 }),
            Angular::Ball { l, m } => (l, m),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EigenMode {
    /// 1-based rank in the table.
    pub index: usize,
    pub angular: Angular,
    pub radial_rank: usize,
    /// `radial_rank`-th positive zero of `J_m` or `j_l`.
    pub alpha: f64,
    /// Dirichlet Laplacian eigenvalue `(alpha / R)^2`.
    pub kappa: f64,
    pub mu: f64,
    /// L² normalisation of the radial factor.
    pub norm_const: f64,
    /// Normal derivative on the boundary divided by the angular factor.
    pub trace_amp: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SpectrumSummary {
    /// Count of nonnegative `mu`.
    pub unstable: usize,
    pub n_sim: usize,
    pub eigenvalues: Vec<f64>,
}

/// Immutable table of the leading `n_sim` modes.
#[derive(Clone, Debug)]
pub struct ModeTable {
    pub domain: Domain,
    pub lambda: f64,
    pub modes: Vec<EigenMode>,
    pub summary: SpectrumSummary,
}

impl ModeTable {
    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    /// Number of nonnegative eigenvalues.
    pub fn unstable(&self) -> usize {
        self.summary.unstable
    }

    pub fn mus(&self) -> Vec<f64> {
        self.modes.iter().map(|m| m.mu).collect()
    }

    pub fn kappas(&self) -> Vec<f64> {
        self.modes.iter().map(|m| m.kappa).collect()
    }

    pub fn max_order(&self) -> usize {
        self.modes.iter().map(|m| m.angular.order()).max().unwrap_or(0)
    }

    pub fn max_radial_rank(&self) -> usize {
        self.modes.iter().map(|m| m.radial_rank).max().unwrap_or(1)
    }

    /// Leading `count` modes as a standalone table sharing domain and `lambda`.
    pub fn truncated(&self, count: usize) -> ModeTable {
        let modes: Vec<_> = self.modes.iter().take(count).cloned().collect();
        let eigenvalues: Vec<f64> = modes.iter().map(|m| m.mu).collect();
        ModeTable {
            domain: self.domain,
            lambda: self.lambda,
            summary: SpectrumSummary {
                unstable: eigenvalues.iter().filter(|&&mu| mu >= 0.0).count(),
                n_sim: modes.len(),
                eigenvalues,
            },
            modes,
        }
    }
}

fn family(shape: Shape) -> Family {
    match shape {
        Shape::Disk => Family::Cylindrical,
        Shape::Ball => Family::Spherical,
    }
}

fn multiplicity(shape: Shape, order: usize) -> usize {
    match shape {
        Shape::Disk if order == 0 => 1,
        Shape::Disk => 2,
        Shape::Ball => 2 * order + 1,
    }
}

/// Builds a fully described mode from its angular indices and radial zero.
pub fn make_mode(domain: &Domain, lambda: f64, angular: Angular, radial_rank: usize, alpha: f64) -> EigenMode {
    let r = domain.radius;
    let order = angular.order();
    let kappa = (alpha / r).powi(2);
    let (norm_const, trace_amp) = match domain.shape {
        Shape::Disk => {
            let c = if order == 0 { 1.0 / PI.sqrt() } else { (2.0 / PI).sqrt() };
            let next = bessel_j_unchecked(order + 1, alpha);
            let norm = c / (r * next.abs());
            // J_m'(α) = -J_{m+1}(α) at a zero of J_m.
            (norm, -norm * alpha / r * next)
        }
        Shape::Ball => {
            let next = spherical_bessel_j_unchecked(order + 1, alpha);
            let norm = 2f64.sqrt() / (r.powf(1.5) * next.abs());
            (norm, -norm * alpha / r * next)
        }
    };
    EigenMode { index: 0, angular, radial_rank, alpha, kappa, mu: lambda - kappa, norm_const, trace_amp }
}

fn compare_modes(a: &EigenMode, b: &EigenMode) -> Ordering {
    b.mu.total_cmp(&a.mu)
        .then_with(|| a.angular.tie_key().cmp(&b.angular.tie_key()))
        .then_with(|| a.radial_rank.cmp(&b.radial_rank))
}

/// The `n_sim` modes with largest `mu`, ordered by descending `mu` with ties
/// broken by angular order, then parity (cos first) or `m` ascending, then
/// radial rank.
pub fn enumerate_modes(domain: &Domain, lambda: f64, n_sim: usize) -> Result<ModeTable> {
    assert!(n_sim >= 1, "n_sim must be positive");
    assert!(lambda >= 0.0, "lambda must be nonnegative");
    let fam = family(domain.shape);

    // Grow the zero cutoff until enough modes sit below it; every excluded
    // candidate then has a larger zero than every retained one.
    let mut limit = 8.0_f64;
    let table = loop {
        let table = zeros_below(fam, limit).ok_or(Error::Capacity { n_sim, needed: MAX_ORDER + 1, cap: MAX_ORDER })?;
        let count: usize = table
            .iter()
            .enumerate()
            .map(|(order, zs)| multiplicity(domain.shape, order) * zs.iter().filter(|&&z| z < limit).count())
            .sum();
        if count >= n_sim {
            break table;
        }
        limit *= 1.25;
    };

    let mut modes = Vec::new();
    for (order, zs) in table.iter().enumerate() {
        for (i, &alpha) in zs.iter().enumerate().filter(|(_, &z)| z < limit) {
            let k = i + 1;
            let angulars: Vec<Angular> = match domain.shape {
                Shape::Disk if order == 0 => vec![Angular::Disk { m: 0, parity: Parity::Cos }],
                Shape::Disk => vec![
                    Angular::Disk { m: order, parity: Parity::Cos },
                    Angular::Disk { m: order, parity: Parity::Sin },
                ],
                Shape::Ball => (-(order as i64)..=order as i64).map(|m| Angular::Ball { l: order, m }).collect(),
            };
            for angular in angulars {
                modes.push(make_mode(domain, lambda, angular, k, alpha));
            }
        }
    }
    modes.sort_by(compare_modes);
    modes.truncate(n_sim);
    for (i, m) in modes.iter_mut().enumerate() {
        m.index = i + 1;
    }
    let eigenvalues: Vec<f64> = modes.iter().map(|m| m.mu).collect();
    let unstable = eigenvalues.iter().filter(|&&mu| mu >= 0.0).count();
    Ok(ModeTable { domain: *domain, lambda, summary: SpectrumSummary { unstable, n_sim, eigenvalues }, modes })
}

//! Norm series, decay fits and the decay-claim report.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::basis::{grid_points, grid_reconstruction_max, Domain, ModeTable, Shape};
use crate::controller::GainSet;
use crate::error::{Error, Result};
use crate::lifting::{lifting_h2_surrogate, Lifting};
use crate::scalar::Scalar;
use crate::simulator::{ClosedLoopSystem, Trajectory};

pub const DEFAULT_WINDOW: (f64, f64) = (0.5, 3.5);
/// Slack on the exponential envelope.
pub const BOUND_SLACK: f64 = 0.05;

#[derive(Clone, Debug, Default, PartialEq)]
pub struct NormSeries {
    pub times: Vec<f64>,
    pub h2_surrogate: Vec<f64>,
    pub h2_full: Vec<f64>,
    pub linf: Vec<f64>,
    pub laplacian_l2: Vec<f64>,
    pub l2: Vec<f64>,
    pub u_norm: Vec<f64>,
    pub dudt_l2: Vec<f64>,
    /// One series per control component.
    pub xi: Vec<Vec<f64>>,
}

/// `(Σ (1 + μ_n²) u_n²)^{1/2}`.
pub fn h2_surrogate(coeffs: &[f64], table: &ModeTable) -> f64 {
    coeffs.iter().zip(&table.modes).map(|(u, m)| (1.0 + m.mu * m.mu) * u * u).sum::<f64>().sqrt()
}

/// `(Σ (1 + κ_n + κ_n²) u_n²)^{1/2}`.
pub fn h2_full(coeffs: &[f64], table: &ModeTable) -> f64 {
    coeffs.iter().zip(&table.modes).map(|(u, m)| (1.0 + m.kappa + m.kappa * m.kappa) * u * u).sum::<f64>().sqrt()
}

pub fn l2_norm(coeffs: &[f64]) -> f64 {
    coeffs.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// `‖Δu‖` from `<Δu, φ_n> = (μ_n - λ) u_n - (β v)_n`.
pub fn laplacian_l2(coeffs: &[f64], boundary: &[f64], beta: &DMatrix<f64>, table: &ModeTable) -> f64 {
    let bv =
        if boundary.is_empty() { DVector::zeros(coeffs.len()) } else { beta * DVector::from_column_slice(boundary) };
    coeffs
        .iter()
        .zip(&table.modes)
        .enumerate()
        .map(|(n, (u, m))| {
            let v = (m.mu - table.lambda) * u - bv[n];
            v * v
        })
        .sum::<f64>()
        .sqrt()
}

pub fn linf_on_grid(coeffs: &[f64], table: &ModeTable, resolution: usize) -> f64 {
    let pts = grid_points(&table.domain, resolution);
    grid_reconstruction_max(table, &pts, &[coeffs.to_vec()])[0]
}

/// `‖u̇‖` per sample by second-order differences of the coefficients.
pub fn dudt_central(traj: &Trajectory) -> Vec<f64> {
    let k = traj.len();
    if k < 3 {
        return vec![f64::NAN; k];
    }
    let dt = traj.dt();
    let s = &traj.states;
    let diff = |f: &dyn Fn(usize) -> f64, len: usize| (0..len).map(f).map(|x| x * x).sum::<f64>().sqrt();
    let n = s[0].len();
    (0..k)
        .map(|t| {
            if t == 0 {
                diff(&|i| (-3.0 * s[0][i] + 4.0 * s[1][i] - s[2][i]) / (2.0 * dt), n)
            } else if t == k - 1 {
                diff(&|i| (3.0 * s[t][i] - 4.0 * s[t - 1][i] + s[t - 2][i]) / (2.0 * dt), n)
            } else {
                diff(&|i| (s[t + 1][i] - s[t - 1][i]) / (2.0 * dt), n)
            }
        })
        .collect()
}

/// `‖M u‖` per sample.
pub fn dudt_generator(traj: &Trajectory, system: &ClosedLoopSystem) -> Vec<f64> {
    traj.states.iter().map(|s| (&system.generator * DVector::from_column_slice(s)).norm()).collect()
}

pub fn norm_series(
    traj: &Trajectory,
    table: &ModeTable,
    system: &ClosedLoopSystem,
    gains: Option<&GainSet>,
    grid: &[Vec<f64>],
) -> Result<NormSeries> {
    let linf = grid_reconstruction_max(table, grid, &traj.states);
    let mut xi = Vec::new();
    if let Some(g) = gains {
        let lifting = Lifting::new(table, g.n());
        for i in 0..g.n() {
            let series = (0..traj.len())
                .map(|k| lifting.xi(g, traj.leading(k), i).map(|c| lifting_h2_surrogate(&c, table)))
                .collect::<Result<Vec<f64>>>()?;
            xi.push(series);
        }
    }
    Ok(NormSeries {
        times: traj.times.clone(),
        h2_surrogate: traj.states.iter().map(|s| h2_surrogate(s, table)).collect(),
        h2_full: traj.states.iter().map(|s| h2_full(s, table)).collect(),
        linf,
        laplacian_l2: traj
            .states
            .iter()
            .zip(&traj.boundary)
            .map(|(s, b)| laplacian_l2(s, b, &system.beta, table))
            .collect(),
        l2: traj.states.iter().map(|s| l2_norm(s)).collect(),
        u_norm: (0..traj.len()).map(|k| l2_norm(traj.leading(k))).collect(),
        dudt_l2: dudt_central(traj),
        xi,
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DecayFit<T> {
    pub amplitude: T,
    pub rate: T,
    /// RMS deviation of `log v` from the fitted line.
    pub residual: T,
}

/// Least-squares line through `(t, log v)` on the window: `log v ≈ log Γ̂ - σ̂ t`.
pub fn decay_rate_fit<T: Scalar>(times: &[T], values: &[T], window: (T, T)) -> Result<DecayFit<T>> {
    let tol = T::lit(1e-9);
    let picked: Vec<(T, T)> = times
        .iter()
        .zip(values)
        .filter(|(t, _)| **t >= window.0 - tol && **t <= window.1 + tol)
        .map(|(t, v)| (*t, *v))
        .collect();
    if picked.len() < 5 {
        return Err(Error::InsufficientData(format!(
            "decay fit needs at least 5 samples in the window, got {}",
            picked.len()
        )));
    }
    if let Some((t, v)) = picked.iter().find(|(_, v)| !(*v > T::zero())) {
        return Err(Error::NonPositive { t: t.to_f64().unwrap_or(f64::NAN), value: v.to_f64().unwrap_or(f64::NAN) });
    }
    let n = T::of(picked.len());
    let mean_t = picked.iter().fold(T::zero(), |a, (t, _)| a + *t) / n;
    let mean_y = picked.iter().fold(T::zero(), |a, (_, v)| a + v.ln()) / n;
    let (mut sxy, mut sxx) = (T::zero(), T::zero());
    for (t, v) in &picked {
        let dt = *t - mean_t;
        sxy = sxy + dt * (v.ln() - mean_y);
        sxx = sxx + dt * dt;
    }
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_t;
    let ss = picked.iter().fold(T::zero(), |a, (t, v)| {
        let e = v.ln() - (intercept + slope * *t);
        a + e * e
    });
    Ok(DecayFit { amplitude: intercept.exp(), rate: -slope, residual: (ss / n).sqrt() })
}

pub fn gn_exponents(shape: Shape) -> (f64, f64) {
    match shape {
        Shape::Disk => (0.5, 0.5),
        Shape::Ball => (0.25, 0.75),
    }
}

/// `sup_t ‖u‖_∞ / (‖u‖ + ‖u‖^p ‖Δu‖^q)`.
pub fn gn_ratio(linf: &[f64], l2: &[f64], laplacian: &[f64], exponents: (f64, f64)) -> Result<f64> {
    let (p, q) = exponents;
    let mut sup: f64 = 0.0;
    for ((m, a), d) in linf.iter().zip(l2).zip(laplacian) {
        let denom = a + a.powf(p) * d.powf(q);
        if !(denom > 1e-14) {
            return Err(Error::UndefinedRatio(format!("denominator {denom:e} at a sample")));
        }
        sup = sup.max(m / denom);
    }
    if linf.is_empty() {
        return Err(Error::UndefinedRatio("empty series".into()));
    }
    Ok(sup)
}

pub fn gn_ratio_series(series: &NormSeries, domain: &Domain) -> Result<f64> {
    gn_ratio(&series.linf, &series.l2, &series.laplacian_l2, gn_exponents(domain.shape))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Claim {
    pub metric: String,
    pub gamma_hat: Option<f64>,
    pub sigma_hat: Option<f64>,
    pub residual: Option<f64>,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClaimsReport {
    pub window: (f64, f64),
    pub degenerate: bool,
    pub claims: Vec<Claim>,
}

impl ClaimsReport {
    pub fn all_pass(&self) -> bool {
        self.claims.iter().all(|c| c.pass)
    }

    pub fn claim(&self, metric: &str) -> Option<&Claim> {
        self.claims.iter().find(|c| c.metric == metric)
    }
}

/// Fits `v` on the window and checks the envelope `v(t) ≤ (1 + slack) Γ̂ v(0) e^{-σ̂ t}`
/// on `[t_a, T]`, with `Γ̂` the smallest constant covering the window.
pub fn check_claim(metric: &str, times: &[f64], values: &[f64], window: (f64, f64)) -> Result<Claim> {
    let fit = decay_rate_fit(times, values, window)?;
    let v0 = values[0];
    let sigma = fit.rate;
    let in_window = |t: f64| t >= window.0 - 1e-9 && t <= window.1 + 1e-9;
    let gamma = times
        .iter()
        .zip(values)
        .filter(|(t, _)| in_window(**t))
        .map(|(t, v)| v * (sigma * t).exp() / v0)
        .fold(0.0, f64::max);
    let bounded = times
        .iter()
        .zip(values)
        .filter(|(t, _)| in_window(**t))
        .all(|(t, v)| *v <= (1.0 + BOUND_SLACK) * gamma * v0 * (-sigma * t).exp());
    Ok(Claim {
        metric: metric.into(),
        gamma_hat: Some(gamma),
        sigma_hat: Some(sigma),
        residual: Some(fit.residual),
        pass: sigma > 0.0 && bounded,
    })
}

pub fn claim_series(series: &NormSeries) -> Vec<(String, &[f64])> {
    let mut out: Vec<(String, &[f64])> = vec![
        ("u_norm".into(), &series.u_norm),
        ("h2_surrogate".into(), &series.h2_surrogate),
        ("h2_full".into(), &series.h2_full),
        ("linf".into(), &series.linf),
        ("laplacian_l2".into(), &series.laplacian_l2),
        ("dudt_l2".into(), &series.dudt_l2),
    ];
    for (i, xi) in series.xi.iter().enumerate() {
        out.push((format!("xi_{}", i + 1), xi));
    }
    out
}

pub fn verify_claims(series: &NormSeries, window: (f64, f64)) -> Result<ClaimsReport> {
    let metrics = claim_series(series);
    let degenerate = metrics.iter().all(|(_, v)| v.iter().all(|&x| x == 0.0));
    let claims = if degenerate {
        metrics
            .iter()
            .map(|(m, _)| Claim { metric: m.clone(), gamma_hat: None, sigma_hat: None, residual: None, pass: true })
            .collect()
    } else {
        metrics.iter().map(|(m, v)| check_claim(m, &series.times, v, window)).collect::<Result<Vec<_>>>()?
    };
    Ok(ClaimsReport { window, degenerate, claims })
}

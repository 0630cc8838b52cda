//! Finite-dimensional controller objects built on the unstable modes.

use log::{info, warn};
use nalgebra::{DMatrix, DVector};

use crate::basis::{boundary_inner, normal_trace, Domain, EigenMode, ModeTable};
use crate::error::{Error, Result};
use crate::linalg::{condition_number, expm, max_real_eigenvalue, spectral_norm};

pub const RESONANCE_TOL: f64 = 1e-8;
pub const SINGULAR_CONDITION: f64 = 1e12;
const NUDGE: f64 = 1e-6;

#[derive(Clone, Debug)]
pub struct GainSet {
    pub gammas: Vec<f64>,
    /// Unstable eigenvalues `μ_1..μ_N`, the diagonal of `A_o`.
    pub mus: Vec<f64>,
    pub a_o: DMatrix<f64>,
    /// Boundary Gram matrix of the unstable normal traces.
    pub b: DMatrix<f64>,
    /// Diagonals of `M_i = diag(1/(γ_i - μ_n))`.
    pub m: Vec<DVector<f64>>,
    pub bi: Vec<DMatrix<f64>>,
    pub a: DMatrix<f64>,
    pub s_paper: DMatrix<f64>,
    pub a_cl_direct: DMatrix<f64>,
    /// `Σ_i M_i A`: maps `U` to the trace coefficients of the control.
    pub c: DMatrix<f64>,
    /// Condition number of `Σ_i B_i`.
    pub condition: f64,
}

impl GainSet {
    pub fn n(&self) -> usize {
        self.mus.len()
    }

    /// `M_i A U`, the trace coefficients of the `i`-th control component.
    pub fn component_coefficients(&self, i: usize, u: &[f64]) -> Vec<f64> {
        let au = &self.a * DVector::from_column_slice(u);
        au.component_mul(&self.m[i]).iter().copied().collect()
    }

    /// `Σ_i M_i A U`.
    pub fn control_coefficients(&self, u: &[f64]) -> Vec<f64> {
        (&self.c * DVector::from_column_slice(u)).iter().copied().collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct StabilityReport {
    pub margin_paper: f64,
    pub margin_direct: f64,
    pub hurwitz_paper: bool,
    pub hurwitz_direct: bool,
    pub c1_hat: f64,
    pub sigma_hat: f64,
}

pub fn build_gram(modes: &[EigenMode], domain: &Domain) -> DMatrix<f64> {
    let n = modes.len();
    let mut b = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let v = boundary_inner(&modes[i], &modes[j], domain);
            b[(i, j)] = v;
            b[(j, i)] = v;
        }
    }
    b
}

fn check_gammas(mus: &[f64], gammas: &[f64]) -> Result<()> {
    if gammas.len() != mus.len() {
        return Err(Error::InvalidGains(format!("expected {} gammas, got {}", mus.len(), gammas.len())));
    }
    if let Some(g) = gammas.iter().find(|g| !(g.is_finite() && **g > 0.0)) {
        return Err(Error::InvalidGains(format!("gamma {g} is not a positive number")));
    }
    if gammas.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidGains("gammas must be strictly increasing".into()));
    }
    for &gamma in gammas {
        for (n, &mu) in mus.iter().enumerate() {
            if (gamma - mu).abs() <= RESONANCE_TOL {
                return Err(Error::Resonance { n: n + 1, gamma, mu });
            }
        }
    }
    Ok(())
}

/// Moves each gamma up by `1e-6` steps until it clears every `μ_n`.
pub fn nudge_gammas(mus: &[f64], gammas: &[f64]) -> (Vec<f64>, bool) {
    let mut moved = false;
    let out = gammas
        .iter()
        .map(|&g| {
            let mut g = g;
            while mus.iter().any(|mu| (g - mu).abs() <= RESONANCE_TOL) {
                g += NUDGE;
                moved = true;
            }
            g
        })
        .collect();
    (out, moved)
}

/// `β_{n,j} = <T_n φ_j, T_n φ_n>` for every mode `n` of the table and `j < cols`.
pub fn extended_gram(table: &ModeTable, cols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(table.len(), cols, |n, j| boundary_inner(&table.modes[n], &table.modes[j], &table.domain))
}

/// Synthesis over the unstable block of a mode table.
pub fn synthesize(table: &ModeTable, gammas: &[f64]) -> Result<GainSet> {
    let modes = &table.modes[..table.unstable()];
    let b = build_gram(modes, &table.domain);
    let mus: Vec<f64> = modes.iter().map(|m| m.mu).collect();
    synthesize_from_gram(&mus, b, gammas)
}

/// Synthesis from explicit eigenvalues and Gram matrix.
pub fn synthesize_from_gram(mus: &[f64], b: DMatrix<f64>, gammas: &[f64]) -> Result<GainSet> {
    check_gammas(mus, gammas)?;
    let n = mus.len();
    if b.nrows() != n || b.ncols() != n {
        return Err(Error::Consistency(format!("Gram matrix is {}x{}, expected {n}x{n}", b.nrows(), b.ncols())));
    }
    let a_o = DMatrix::from_diagonal(&DVector::from_column_slice(mus));
    let m: Vec<DVector<f64>> =
        gammas.iter().map(|g| DVector::from_iterator(n, mus.iter().map(|mu| 1.0 / (g - mu)))).collect();
    let bi: Vec<DMatrix<f64>> = m.iter().map(|d| DMatrix::from_fn(n, n, |r, c| d[r] * b[(r, c)] * d[c])).collect();
    let sum = bi.iter().fold(DMatrix::zeros(n, n), |acc, x| acc + x);
    let condition = condition_number(&sum);
    if !(condition <= SINGULAR_CONDITION) {
        return Err(Error::SingularSynthesis { condition });
    }
    let a = sum.clone().lu().try_inverse().ok_or(Error::SingularSynthesis { condition })?;
    let s_paper = bi.iter().zip(gammas).fold(DMatrix::zeros(n, n), |acc, (x, g)| acc + x * *g) * &a;
    let c = m.iter().fold(DMatrix::zeros(n, n), |acc, d| acc + DMatrix::from_diagonal(d) * &a);
    let a_cl_direct = &a_o - &b * &c;
    Ok(GainSet { gammas: gammas.to_vec(), mus: mus.to_vec(), a_o, b, m, bi, a, s_paper, a_cl_direct, c, condition })
}

pub fn hurwitz_margin(m: &DMatrix<f64>) -> Result<f64> {
    max_real_eigenvalue(m)
}

/// Margins of both reduced generators and transient constants of the direct one
/// sampled on `[0, horizon]`.
pub fn validate_gains(gains: &GainSet, horizon: f64) -> Result<StabilityReport> {
    let margin_paper = hurwitz_margin(&(-&gains.s_paper))?;
    let margin_direct = hurwitz_margin(&gains.a_cl_direct)?;
    let sigma_hat = -0.95 * margin_direct;
    let samples = 400;
    let mut c1_hat: f64 = 1.0;
    if gains.n() > 0 && sigma_hat.is_finite() {
        let step = expm(&(&gains.a_cl_direct * (horizon / samples as f64)));
        let mut prop = DMatrix::identity(gains.n(), gains.n());
        for k in 1..=samples {
            prop = &step * &prop;
            let t = horizon * k as f64 / samples as f64;
            c1_hat = c1_hat.max(spectral_norm(&prop) * (sigma_hat * t).exp());
        }
    }
    Ok(StabilityReport {
        margin_paper,
        margin_direct,
        hurwitz_paper: margin_paper < 0.0,
        hurwitz_direct: margin_direct < 0.0,
        c1_hat,
        sigma_hat,
    })
}

#[derive(Clone, Debug)]
pub struct AutoScale {
    pub gammas: Vec<f64>,
    pub kappa: f64,
    pub margin_direct: f64,
    pub nudged: bool,
}

/// Doubling search for the smallest `κ ∈ {1, 2, …, 2^10}` whose scaled gains
/// give a direct margin at or below `target_margin`.
pub fn auto_scale_gains(table: &ModeTable, gammas0: &[f64], target_margin: f64) -> Result<AutoScale> {
    let modes = &table.modes[..table.unstable()];
    let b = build_gram(modes, &table.domain);
    let mus: Vec<f64> = modes.iter().map(|m| m.mu).collect();
    auto_scale_from_gram(&mus, &b, gammas0, target_margin)
}

pub fn auto_scale_from_gram(mus: &[f64], b: &DMatrix<f64>, gammas0: &[f64], target_margin: f64) -> Result<AutoScale> {
    if !(target_margin < 0.0) {
        return Err(Error::InvalidGains(format!("target margin {target_margin} must be negative")));
    }
    let mut margins = Vec::new();
    for p in 0..=10 {
        let kappa = f64::from(1u32 << p);
        let scaled: Vec<f64> = gammas0.iter().map(|g| g * kappa).collect();
        let (gammas, nudged) = nudge_gammas(mus, &scaled);
        if nudged {
            warn!("gammas nudged off the spectrum at scale {kappa}");
        }
        let margin = match synthesize_from_gram(mus, b.clone(), &gammas) {
            Ok(g) => hurwitz_margin(&g.a_cl_direct)?,
            Err(Error::SingularSynthesis { .. }) => f64::INFINITY,
            Err(e) => return Err(e),
        };
        margins.push(margin);
        if margin <= target_margin {
            info!("auto-scaled gains with factor {kappa}: margin {margin}");
            return Ok(AutoScale { gammas, kappa, margin_direct: margin, nudged });
        }
    }
    Err(Error::AutoScaleFailed { target: target_margin, margins })
}

/// Value of the feedback control `Σ_j (Σ_i M_i A U)_j T_n φ_j` at a boundary point.
pub fn boundary_control_eval(
    gains: &GainSet,
    u: &[f64],
    modes: &[EigenMode],
    domain: &Domain,
    point: &[f64],
) -> Result<f64> {
    let coeffs = gains.control_coefficients(u);
    let mut v = 0.0;
    for (c, mode) in coeffs.iter().zip(modes) {
        v += c * normal_trace(mode, domain, point)?;
    }
    Ok(v)
}

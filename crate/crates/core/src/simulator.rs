//! Galerkin closed-loop system on the retained modes and its time integration.
//!
//! Green's identity turns the boundary-controlled heat equation into
//! `u̇_n = μ_n u_n - <v, T_n φ_n>`; with `v = Σ_j (C U)_j T_n φ_j` the
//! generator is `diag(μ) - β C` acting on the first `N` columns only.

use log::warn;
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::basis::{boundary_inner_quadrature, project_function, ModeTable, Shape};
use crate::controller::{extended_gram, GainSet};
use crate::error::{Error, Result};
use crate::linalg::{expm, norm_inf, spectral_norm};
use crate::rng::Lcg;

pub const OVERFLOW_LIMIT: f64 = 1e12;
const CROSS_CHECK_SEED: u64 = 0x6d6f_6461_6c73_7462;
const CROSS_CHECK_TOL: f64 = 1e-9;
/// Largest `h‖M‖_∞` allowed for an rk4 substep.
const RK4_STEP_NORM: f64 = 0.02;

#[derive(Clone, Debug)]
pub struct ClosedLoopSystem {
    pub generator: DMatrix<f64>,
    /// Number of controlled leading modes.
    pub n_unstable: usize,
    /// `N_sim × N` boundary Gram columns.
    pub beta: DMatrix<f64>,
    /// `Σ_i M_i A`, or zero for the open loop.
    pub c: DMatrix<f64>,
}

impl ClosedLoopSystem {
    pub fn n_sim(&self) -> usize {
        self.generator.nrows()
    }

    pub fn control_coefficients(&self, state: &[f64]) -> Vec<f64> {
        let u = DVector::from_column_slice(&state[..self.n_unstable]);
        (&self.c * u).iter().copied().collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    ExpmStep,
    Rk4,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    /// Trace coefficients of the control at each sample.
    pub boundary: Vec<Vec<f64>>,
    pub n_unstable: usize,
    /// Set when integration stopped early on overflow.
    pub truncated: bool,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn dt(&self) -> f64 {
        if self.times.len() < 2 {
            0.0
        } else {
            self.times[1] - self.times[0]
        }
    }

    pub fn leading(&self, k: usize) -> &[f64] {
        &self.states[k][..self.n_unstable]
    }

    pub fn tail_energy(&self, k: usize) -> f64 {
        self.states[k][self.n_unstable..].iter().map(|x| x * x).sum()
    }
}

fn cross_check_beta(table: &ModeTable, beta: &DMatrix<f64>) -> Result<()> {
    let total = beta.nrows() * beta.ncols();
    if total == 0 {
        return Ok(());
    }
    let samples = total.div_ceil(20);
    let mut rng = Lcg::new(CROSS_CHECK_SEED);
    for _ in 0..samples {
        let idx = rng.below(total);
        let (n, j) = (idx / beta.ncols(), idx % beta.ncols());
        let quad = boundary_inner_quadrature(&table.modes[n], &table.modes[j], &table.domain);
        let closed = beta[(n, j)];
        if (quad - closed).abs() > CROSS_CHECK_TOL * closed.abs().max(1.0) {
            return Err(Error::Consistency(format!(
                "boundary Gram entry ({n}, {j}): closed form {closed} vs quadrature {quad}"
            )));
        }
    }
    Ok(())
}

pub fn assemble_closed_loop(table: &ModeTable, gains: &GainSet) -> Result<ClosedLoopSystem> {
    let n = gains.n();
    if n != table.unstable() || table.mus()[..n] != gains.mus[..] {
        return Err(Error::Consistency(format!(
            "gain set over {n} modes does not match the table's {} unstable modes",
            table.unstable()
        )));
    }
    let beta = extended_gram(table, n);
    cross_check_beta(table, &beta)?;
    let mut generator = DMatrix::from_diagonal(&DVector::from_vec(table.mus()));
    let coupling = &beta * &gains.c;
    let mut lead = generator.columns_mut(0, n);
    lead -= &coupling;
    Ok(ClosedLoopSystem { generator, n_unstable: n, beta, c: gains.c.clone() })
}

/// Uncontrolled system: `diag(μ)`.
pub fn open_loop_system(table: &ModeTable) -> ClosedLoopSystem {
    let n = table.unstable();
    ClosedLoopSystem {
        generator: DMatrix::from_diagonal(&DVector::from_vec(table.mus())),
        n_unstable: n,
        beta: extended_gram(table, n),
        c: DMatrix::zeros(n, n),
    }
}

fn step_count(dt: f64, horizon: f64) -> Result<usize> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::Config { field: "dt".into(), message: format!("must be positive, got {dt}") });
    }
    if !(horizon >= dt) {
        return Err(Error::Config {
            field: "horizon".into(),
            message: format!("must be at least dt = {dt}, got {horizon}"),
        });
    }
    Ok((horizon / dt).round() as usize)
}

fn overflowed(v: &DVector<f64>) -> bool {
    v.iter().any(|x| !x.is_finite() || x.abs() > OVERFLOW_LIMIT)
}

type Stepper<'a> = Box<dyn Fn(&DVector<f64>) -> DVector<f64> + 'a>;

pub fn integrate(system: &ClosedLoopSystem, u0: &[f64], dt: f64, horizon: f64, method: Method) -> Result<Trajectory> {
    let steps = step_count(dt, horizon)?;
    if u0.len() != system.n_sim() {
        return Err(Error::Consistency(format!(
            "initial state has {} coefficients, system has {}",
            u0.len(),
            system.n_sim()
        )));
    }
    let m = &system.generator;
    let advance: Stepper<'_> = match method {
        Method::ExpmStep => {
            let e = expm(&(m * dt));
            Box::new(move |u| &e * u)
        }
        Method::Rk4 => {
            let sub = ((dt * norm_inf(m) / RK4_STEP_NORM).ceil() as usize).max(1);
            let h = dt / sub as f64;
            Box::new(move |u| {
                let mut y = u.clone();
                for _ in 0..sub {
                    let k1 = m * &y;
                    let k2 = m * (&y + &k1 * (h / 2.0));
                    let k3 = m * (&y + &k2 * (h / 2.0));
                    let k4 = m * (&y + &k3 * h);
                    y += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
                }
                y
            })
        }
    };
    let mut state = DVector::from_column_slice(u0);
    let mut traj = Trajectory {
        times: vec![0.0],
        states: vec![u0.to_vec()],
        boundary: vec![system.control_coefficients(u0)],
        n_unstable: system.n_unstable,
        truncated: false,
    };
    for k in 1..=steps {
        state = advance(&state);
        if overflowed(&state) {
            warn!("state exceeded {OVERFLOW_LIMIT:e} at step {k}; trajectory truncated");
            traj.truncated = true;
            break;
        }
        let s: Vec<f64> = state.iter().copied().collect();
        traj.times.push(k as f64 * dt);
        traj.boundary.push(system.control_coefficients(&s));
        traj.states.push(s);
    }
    Ok(traj)
}

/// Exact uncontrolled evolution `u_n(t) = u_n(0) e^{μ_n t}`.
pub fn open_loop(table: &ModeTable, u0: &[f64], dt: f64, horizon: f64) -> Result<Trajectory> {
    let steps = step_count(dt, horizon)?;
    let n = table.unstable();
    let mus = table.mus();
    let mut traj = Trajectory {
        times: vec![0.0],
        states: vec![u0.to_vec()],
        boundary: vec![vec![0.0; n]],
        n_unstable: n,
        truncated: false,
    };
    for k in 1..=steps {
        let t = k as f64 * dt;
        let s: Vec<f64> = u0.iter().zip(&mus).map(|(u, mu)| u * (mu * t).exp()).collect();
        if s.iter().any(|x| !x.is_finite() || x.abs() > OVERFLOW_LIMIT) {
            warn!("open-loop state exceeded {OVERFLOW_LIMIT:e} at t = {t}; trajectory truncated");
            traj.truncated = true;
            break;
        }
        traj.times.push(t);
        traj.states.push(s);
        traj.boundary.push(vec![0.0; n]);
    }
    Ok(traj)
}

/// Largest one-step discrepancy between the simulated `U(t_{k+1})` and the
/// leading-block system restarted from `U(t_k)`, relative to `max_k |U(t_k)|`.
pub fn restart_consistency(gains: &GainSet, traj: &Trajectory) -> f64 {
    let n = gains.n();
    if n == 0 || traj.len() < 2 {
        return 0.0;
    }
    let e = expm(&(&gains.a_cl_direct * traj.dt()));
    let mut worst: f64 = 0.0;
    let mut scale: f64 = 0.0;
    for k in 0..traj.len() - 1 {
        let u = DVector::from_column_slice(traj.leading(k));
        scale = scale.max(u.amax());
        let next = DVector::from_column_slice(traj.leading(k + 1));
        worst = worst.max((&e * u - next).amax());
    }
    if scale == 0.0 {
        0.0
    } else {
        worst / scale
    }
}

#[derive(Clone, Debug)]
pub struct ReducedFit {
    pub generator: DMatrix<f64>,
    /// `‖Y - G X‖_F / ‖Y‖_F` over the central-difference samples.
    pub residual: f64,
    /// Dimension of the subspace visited by `U(t)`.
    pub rank: usize,
    pub distance_direct: f64,
    pub distance_paper: f64,
    /// Distances restricted to the visited subspace, where the fit is identifiable.
    pub distance_direct_visited: f64,
    pub distance_paper_visited: f64,
}

/// Least-squares generator for the leading coordinates from central differences.
pub fn reduced_dynamics_fit(traj: &Trajectory, gains: &GainSet) -> Result<ReducedFit> {
    let n = traj.n_unstable;
    if traj.len() < 10 {
        return Err(Error::InsufficientData(format!("need at least 10 samples, got {}", traj.len())));
    }
    let peak = (0..traj.len()).map(|k| traj.leading(k).iter().fold(0.0_f64, |m, x| m.max(x.abs()))).fold(0.0, f64::max);
    if peak < 1e-12 {
        return Err(Error::InsufficientExcitation("leading coordinates stay below 1e-12".into()));
    }
    let dt = traj.dt();
    let cols = traj.len() - 2;
    let x = DMatrix::from_fn(n, cols, |i, k| traj.states[k + 1][i]);
    let y = DMatrix::from_fn(n, cols, |i, k| (traj.states[k + 2][i] - traj.states[k][i]) / (2.0 * dt));
    // Degenerate eigenpairs keep U(t) in a proper subspace; the minimum-norm
    // solution is exact there and zero on its complement.
    let svd = x.clone().svd(true, true);
    let (u, vt) = (svd.u.expect("requested"), svd.v_t.expect("requested"));
    let sv = &svd.singular_values;
    let cut = 1e-10 * sv.max();
    let kept: Vec<usize> = (0..sv.len()).filter(|&j| sv[j] > cut).collect();
    let rank = kept.len();
    let mut g = DMatrix::zeros(n, n);
    let mut proj = DMatrix::zeros(n, n);
    for &j in &kept {
        g += (&y * vt.row(j).transpose()) * u.column(j).transpose() / sv[j];
        proj += u.column(j) * u.column(j).transpose();
    }
    let residual = (&y - &g * &x).norm() / y.norm();
    Ok(ReducedFit {
        distance_direct: spectral_norm(&(&g - &gains.a_cl_direct)),
        distance_paper: spectral_norm(&(&g + &gains.s_paper)),
        distance_direct_visited: spectral_norm(&((&g - &gains.a_cl_direct) * &proj)),
        distance_paper_visited: spectral_norm(&((&g + &gains.s_paper) * &proj)),
        generator: g,
        residual,
        rank,
    })
}

/// Cubic polynomial in graded lexicographic monomial order
/// (`1, x, y, x², xy, y², …` in 2-D; `1, x, y, z, x², xy, xz, …` in 3-D).
#[derive(Clone, Debug, PartialEq)]
pub struct Cubic {
    pub dimension: usize,
    pub coefficients: Vec<f64>,
}

impl Cubic {
    pub fn exponents(dimension: usize) -> Vec<Vec<u32>> {
        let mut out = Vec::new();
        for degree in 0..=3u32 {
            match dimension {
                2 => {
                    for a in (0..=degree).rev() {
                        out.push(vec![a, degree - a]);
                    }
                }
                3 => {
                    for a in (0..=degree).rev() {
                        for b in (0..=degree - a).rev() {
                            out.push(vec![a, b, degree - a - b]);
                        }
                    }
                }
                _ => panic!("cubic polynomials are defined in 2 or 3 dimensions"),
            }
        }
        out
    }

    pub fn zero(dimension: usize) -> Self {
        Self { dimension, coefficients: vec![0.0; Self::exponents(dimension).len()] }
    }

    pub fn constant(dimension: usize, c: f64) -> Self {
        let mut p = Self::zero(dimension);
        p.coefficients[0] = c;
        p
    }

    /// Coefficients drawn uniformly from `[-1, 1]` in monomial order.
    pub fn random(dimension: usize, seed: u64) -> Self {
        let mut rng = Lcg::new(seed);
        let n = Self::exponents(dimension).len();
        Self { dimension, coefficients: (0..n).map(|_| rng.uniform(-1.0, 1.0)).collect() }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        Self::exponents(self.dimension)
            .iter()
            .zip(&self.coefficients)
            .map(|(e, c)| c * e.iter().zip(x).map(|(&p, &xi)| xi.powi(p as i32)).product::<f64>())
            .sum()
    }
}

/// Coefficients of `(R² - |x|²) p(x)`.
pub fn project_initial_condition(table: &ModeTable, p: &Cubic) -> Vec<f64> {
    let expected = match table.domain.shape {
        Shape::Disk => 2,
        Shape::Ball => 3,
    };
    assert_eq!(p.dimension, expected, "polynomial dimension must match the domain");
    let r2 = table.domain.radius * table.domain.radius;
    let exps = Cubic::exponents(p.dimension);
    project_function(table, |x| {
        let bump = r2 - x.iter().map(|v| v * v).sum::<f64>();
        let val: f64 = exps
            .iter()
            .zip(&p.coefficients)
            .map(|(e, c)| c * e.iter().zip(x).map(|(&k, &xi)| xi.powi(k as i32)).product::<f64>())
            .sum();
        bump * val
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::{enumerate_modes, project_function_refined, Domain};
    use crate::controller::{auto_scale_gains, synthesize};
    use crate::linalg::max_abs_diff;

    fn disk(n: usize) -> ModeTable {
        enumerate_modes(&Domain::disk(2.0), 6.61, n).unwrap()
    }

    const GAMMAS: [f64; 5] = [6.17, 7.17, 8.17, 9.17, 10.17];

    fn stable_gains(t: &ModeTable) -> GainSet {
        let s = auto_scale_gains(t, &GAMMAS, -0.5).unwrap();
        synthesize(t, &s.gammas).unwrap()
    }

    #[test]
    fn scalar_and_nilpotent_generators() {
        let sys = ClosedLoopSystem {
            generator: DMatrix::from_element(1, 1, -1.0),
            n_unstable: 0,
            beta: DMatrix::zeros(1, 0),
            c: DMatrix::zeros(0, 0),
        };
        let tr = integrate(&sys, &[1.0], 0.05, 1.0, Method::ExpmStep).unwrap();
        assert_eq!(tr.len(), 21);
        assert!((tr.states[20][0] - (-1.0f64).exp()).abs() < 1e-9);
        let tr = integrate(&sys, &[1.0], 0.05, 1.0, Method::Rk4).unwrap();
        assert!((tr.states[20][0] - (-1.0f64).exp()).abs() < 1e-9);

        let nil = ClosedLoopSystem {
            generator: DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 0.0]),
            n_unstable: 0,
            beta: DMatrix::zeros(2, 0),
            c: DMatrix::zeros(0, 0),
        };
        let tr = integrate(&nil, &[0.0, 1.0], 1.0, 1.0, Method::ExpmStep).unwrap();
        assert_eq!(tr.states[1], vec![1.0, 1.0]);
    }

    #[test]
    fn generator_structure() {
        let t = disk(120);
        let g = stable_gains(&t);
        let sys = assemble_closed_loop(&t, &g).unwrap();
        let n = g.n();
        let lead = sys.generator.view((0, 0), (n, n)).clone_owned();
        assert!(max_abs_diff(&lead, &g.a_cl_direct) < 1e-12);
        let open = DMatrix::from_diagonal(&DVector::from_vec(t.mus()));
        let diff = &sys.generator - &open;
        assert!(diff.columns(n, t.len() - n).iter().all(|&v| v == 0.0));
        for row in n..t.len() {
            let shares = t.modes[..n].iter().any(|m| m.angular == t.modes[row].angular);
            if !shares {
                assert!(diff.row(row).iter().all(|&v| v == 0.0));
            }
        }
        let open_sys = open_loop_system(&t);
        assert_eq!(open_sys.generator, open);
    }

    #[test]
    fn mismatched_gains_are_rejected() {
        let t = disk(60);
        let ball = enumerate_modes(&Domain::ball(2.0), 6.61, 60).unwrap();
        let g = synthesize(&ball, &[5.147, 6.147, 7.147, 8.147]).unwrap();
        assert!(matches!(assemble_closed_loop(&t, &g), Err(Error::Consistency(_))));
    }

    #[test]
    fn open_loop_growth_and_truncation() {
        let t = disk(40);
        let mut u0 = vec![0.0; 40];
        u0[0] = 1.0;
        let tr = open_loop(&t, &u0, 0.05, 4.0).unwrap();
        let (a, b) = (tr.states[10][0].ln(), tr.states[70][0].ln());
        let slope = (b - a) / (tr.times[70] - tr.times[10]);
        assert!((slope - t.modes[0].mu).abs() < 1e-10);
        assert!(!tr.truncated);
        let tr = open_loop(&t, &u0, 0.05, 10.0).unwrap();
        assert!(tr.truncated);
        assert!(tr.states.iter().all(|s| s[0] <= OVERFLOW_LIMIT));
        let zero = open_loop(&t, &vec![0.0; 40], 0.05, 4.0).unwrap();
        assert!(zero.states.iter().all(|s| s.iter().all(|&x| x == 0.0)));
        let mut tail = vec![0.0; 40];
        tail[30] = 1.0;
        let tr = open_loop(&t, &tail, 0.05, 1.0).unwrap();
        assert!(tr.states.windows(2).all(|w| w[1][30] < w[0][30]));
    }

    #[test]
    fn closed_loop_semigroup_and_dt_refinement() {
        let t = disk(80);
        let g = stable_gains(&t);
        let sys = assemble_closed_loop(&t, &g).unwrap();
        let u0 = project_initial_condition(&t, &Cubic::random(2, 7));
        let full = integrate(&sys, &u0, 0.05, 4.0, Method::ExpmStep).unwrap();
        let half = integrate(&sys, &u0, 0.05, 2.0, Method::ExpmStep).unwrap();
        let rest = integrate(&sys, half.states.last().unwrap(), 0.05, 2.0, Method::ExpmStep).unwrap();
        let a = DVector::from_column_slice(full.states.last().unwrap());
        let b = DVector::from_column_slice(rest.states.last().unwrap());
        assert!((&a - &b).norm() <= 1e-9 * a.norm());
        let fine = integrate(&sys, &u0, 0.025, 4.0, Method::ExpmStep).unwrap();
        let c = DVector::from_column_slice(fine.states.last().unwrap());
        assert!((&a - &c).norm() <= 1e-8 * a.norm());
        let rk = integrate(&sys, &u0, 0.05, 4.0, Method::Rk4).unwrap();
        let d = DVector::from_column_slice(rk.states.last().unwrap());
        assert!((&a - &d).norm() <= 1e-6 * a.norm());
        assert!(restart_consistency(&g, &full) < 1e-8);
        assert!(full.tail_energy(full.len() - 1) < full.tail_energy(0));
    }

    #[test]
    fn fit_recovers_known_generator() {
        let m = DMatrix::from_row_slice(2, 2, &[-0.5, 0.3, -0.2, -0.8]);
        let g = crate::controller::synthesize_from_gram(
            &[0.5, 0.1],
            DMatrix::from_row_slice(2, 2, &[1.0, 0.2, 0.2, 1.0]),
            &[2.0, 3.0],
        )
        .unwrap();
        let sys = ClosedLoopSystem {
            generator: m.clone(),
            n_unstable: 2,
            beta: DMatrix::zeros(2, 2),
            c: DMatrix::zeros(2, 2),
        };
        let tr = integrate(&sys, &[1.0, -0.4], 0.01, 4.0, Method::ExpmStep).unwrap();
        let fit = reduced_dynamics_fit(&tr, &g).unwrap();
        assert!(max_abs_diff(&fit.generator, &m) < 1e-4);
        assert!(fit.residual < 1e-4);
        let zero = integrate(&sys, &[0.0, 0.0], 0.01, 1.0, Method::ExpmStep).unwrap();
        assert!(matches!(reduced_dynamics_fit(&zero, &g), Err(Error::InsufficientExcitation(_))));
    }

    #[test]
    fn fit_on_degenerate_pair_is_exact_on_visited_subspace() {
        let g = crate::controller::synthesize_from_gram(&[0.5, 0.5], DMatrix::identity(2, 2), &[2.0, 3.0]).unwrap();
        let sys = ClosedLoopSystem {
            generator: g.a_cl_direct.clone(),
            n_unstable: 2,
            beta: DMatrix::zeros(2, 2),
            c: DMatrix::zeros(2, 2),
        };
        let tr = integrate(&sys, &[1.0, 2.0], 0.01, 2.0, Method::ExpmStep).unwrap();
        let fit = reduced_dynamics_fit(&tr, &g).unwrap();
        assert_eq!(fit.rank, 1);
        assert!(fit.residual < 1e-10);
        assert!(fit.distance_direct_visited < 1e-3);
        assert!((fit.distance_paper_visited - 1.0).abs() < 1e-3);
    }

    #[test]
    fn initial_condition_projection() {
        let t = disk(60);
        assert!(project_initial_condition(&t, &Cubic::zero(2)).iter().all(|&c| c == 0.0));
        let one = project_initial_condition(&t, &Cubic::constant(2, 1.0));
        for (m, c) in t.modes.iter().zip(&one) {
            if m.angular.order() > 0 {
                assert!(c.abs() < 1e-12);
            }
        }
        let fine = project_function_refined(&t, |x| 4.0 - x[0] * x[0] - x[1] * x[1], 2);
        assert!((one[0] - fine[0]).abs() < 1e-8);
        assert_eq!(Cubic::random(2, 3), Cubic::random(2, 3));
        assert_eq!(Cubic::exponents(2).len(), 10);
        assert_eq!(Cubic::exponents(3).len(), 20);
        assert_eq!(Cubic::exponents(3)[4], vec![2, 0, 0]);
        let p = Cubic { dimension: 2, coefficients: (0..10).map(|i| i as f64).collect() };
        let (x, y) = (0.3f64, -0.7f64);
        let want = x
            + 2.0 * y
            + 3.0 * x * x
            + 4.0 * x * y
            + 5.0 * y * y
            + 6.0 * x.powi(3)
            + 7.0 * x * x * y
            + 8.0 * x * y * y
            + 9.0 * y.powi(3);
        assert!((p.eval(&[x, y]) - want).abs() < 1e-14);
    }
}

//! End-to-end commands: spectrum, synthesis, simulation, verification.
//!
//! Each command returns its artifacts in memory; writing them to disk is a
//! separate step so that callers can compare outputs byte for byte.

use std::fs;
use std::path::Path;

use log::{info, warn};
use serde_json::{json, Value};

use super::config::{Gammas, Initial, RunConfig, RunMode};
use crate::basis::{enumerate_modes, grid_points, ModeTable};
use crate::controller::{
    auto_scale_gains, nudge_gammas, synthesize, validate_gains, AutoScale, GainSet, StabilityReport,
};
use crate::diagnostics::{gn_ratio_series, norm_series, verify_claims, ClaimsReport, NormSeries, DEFAULT_WINDOW};
use crate::error::{Error, Result};
use crate::io::{
    gains_json, json_f64, mode_table_csv, norm_series_csv, snapshot_bytes, spectrum_json, stability_json,
    trajectory_csv,
};
use crate::lifting::{commutation_check, Lifting};
use crate::simulator::{
    assemble_closed_loop, integrate, open_loop, open_loop_system, project_initial_condition, reduced_dynamics_fit,
    restart_consistency, ClosedLoopSystem, Cubic, ReducedFit, Trajectory,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Outcome {
    Ok,
    VerificationFailed,
    GainsNotValidated,
}

impl Outcome {
    pub fn exit_code(self) -> i32 {
        match self {
            Outcome::Ok => 0,
            Outcome::VerificationFailed => 1,
            Outcome::GainsNotValidated => 3,
        }
    }
}

/// Exit code for a failed command.
pub fn error_exit_code(e: &Error) -> i32 {
    match e {
        Error::SingularSynthesis { .. }
        | Error::AutoScaleFailed { .. }
        | Error::Resonance { .. }
        | Error::InvalidGains(_)
        | Error::Eigensolver => 4,
        _ => 2,
    }
}

#[derive(Clone, Debug)]
pub struct Artifacts {
    pub files: Vec<(String, Vec<u8>)>,
    pub outcome: Outcome,
}

impl Artifacts {
    pub fn write(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        for (name, bytes) in &self.files {
            fs::write(dir.join(name), bytes)?;
        }
        Ok(())
    }

    pub fn file(&self, name: &str) -> Option<&[u8]> {
        self.files.iter().find(|(n, _)| n == name).map(|(_, b)| b.as_slice())
    }
}

fn json_bytes(v: &Value) -> Vec<u8> {
    let mut s = serde_json::to_string_pretty(v).expect("JSON values always serialize");
    s.push('\n');
    s.into_bytes()
}

/// Mode table for the config, rejecting truncations that cut into the unstable set.
pub fn build_table(cfg: &RunConfig) -> Result<ModeTable> {
    let table = enumerate_modes(&cfg.domain(), cfg.lambda, cfg.n_sim)?;
    if table.modes.last().is_some_and(|m| m.mu >= 0.0) {
        return Err(Error::Config {
            field: "n_sim".into(),
            message: format!("{} modes do not cover every nonnegative eigenvalue", cfg.n_sim),
        });
    }
    Ok(table)
}

pub struct SpectrumRun {
    pub table: ModeTable,
    pub artifacts: Artifacts,
}

pub fn cmd_spectrum(cfg: &RunConfig) -> Result<SpectrumRun> {
    let table = build_table(cfg)?;
    let summary = spectrum_json(&table, 10);
    info!("N = {} nonnegative eigenvalues: {:?}", table.unstable(), &table.mus()[..table.unstable()]);
    let files = vec![
        ("modes.csv".to_string(), mode_table_csv(&table).into_bytes()),
        ("spectrum.json".to_string(), json_bytes(&summary)),
    ];
    Ok(SpectrumRun { table, artifacts: Artifacts { files, outcome: Outcome::Ok } })
}

#[derive(Clone, Debug, PartialEq)]
pub enum GainSource {
    Explicit,
    AutoScaled { kappa: f64 },
}

impl GainSource {
    pub fn label(&self) -> &'static str {
        match self {
            GainSource::Explicit => "explicit",
            GainSource::AutoScaled { .. } => "auto_scaled",
        }
    }
}

#[derive(Clone, Debug)]
pub struct Synthesis {
    pub gains: GainSet,
    pub report: StabilityReport,
    pub source: GainSource,
    pub nudged: bool,
    /// Auto-scaled alternative when explicit gains fail validation.
    pub suggestion: Option<AutoScale>,
}

impl Synthesis {
    pub fn validated(&self) -> bool {
        self.report.hurwitz_direct
    }

    fn json(&self) -> Value {
        let mut v = gains_json(&self.gains, &self.report);
        v["source"] = json!(self.source.label());
        if let GainSource::AutoScaled { kappa } = self.source {
            v["kappa"] = json!(kappa);
        }
        v["nudged"] = json!(self.nudged);
        v["validated"] = json!(self.validated());
        if let Some(s) = &self.suggestion {
            v["suggestion"] = json!({ "gammas": s.gammas, "kappa": s.kappa, "margin_direct": s.margin_direct });
        }
        v
    }
}

fn auto_scaled(cfg: &RunConfig, table: &ModeTable, base: &[f64]) -> Result<Synthesis> {
    let s = auto_scale_gains(table, base, cfg.target_margin)?;
    let gains = synthesize(table, &s.gammas)?;
    let report = validate_gains(&gains, cfg.horizon)?;
    Ok(Synthesis {
        gains,
        report,
        source: GainSource::AutoScaled { kappa: s.kappa },
        nudged: s.nudged,
        suggestion: None,
    })
}

/// Gains as configured; explicit gains are reported even when they fail validation.
pub fn synthesize_configured(cfg: &RunConfig, table: &ModeTable) -> Result<Synthesis> {
    match &cfg.gammas {
        Gammas::Auto => auto_scaled(cfg, table, &cfg.base_gammas()),
        Gammas::Explicit(g) => {
            let mus = &table.mus()[..table.unstable()];
            let (gammas, nudged) = nudge_gammas(mus, g);
            if nudged {
                warn!("gammas nudged off the unstable spectrum: {gammas:?}");
            }
            let gains = synthesize(table, &gammas)?;
            let report = validate_gains(&gains, cfg.horizon)?;
            let suggestion =
                if report.hurwitz_direct { None } else { auto_scale_gains(table, &gammas, cfg.target_margin).ok() };
            Ok(Synthesis { gains, report, source: GainSource::Explicit, nudged, suggestion })
        }
    }
}

/// Gains for a closed-loop run: the configured ones if they validate,
/// otherwise the doubling search started from them.
pub fn synthesize_for_simulation(cfg: &RunConfig, table: &ModeTable) -> Result<Synthesis> {
    let configured = synthesize_configured(cfg, table)?;
    if configured.validated() {
        return Ok(configured);
    }
    warn!(
        "configured gains are not Hurwitz on the direct generator (margin {}); auto-scaling",
        configured.report.margin_direct
    );
    auto_scaled(cfg, table, &configured.gains.gammas)
}

pub struct SynthesisRun {
    pub table: ModeTable,
    pub synthesis: Synthesis,
    pub artifacts: Artifacts,
}

pub fn cmd_synthesize(cfg: &RunConfig) -> Result<SynthesisRun> {
    let table = build_table(cfg)?;
    let synthesis = synthesize_configured(cfg, &table)?;
    let r = &synthesis.report;
    info!("margins: direct {}, -S_paper {}", r.margin_direct, r.margin_paper);
    let outcome = if synthesis.validated() { Outcome::Ok } else { Outcome::GainsNotValidated };
    let files = vec![("gains.json".to_string(), json_bytes(&synthesis.json()))];
    Ok(SynthesisRun { table, synthesis, artifacts: Artifacts { files, outcome } })
}

pub fn initial_coefficients(cfg: &RunConfig, table: &ModeTable) -> Vec<f64> {
    let dim = cfg.shape.dimension();
    let p = match cfg.initial {
        Initial::RandomCubic => Cubic::random(dim, cfg.seed),
        Initial::Zero => Cubic::zero(dim),
    };
    project_initial_condition(table, &p)
}

pub struct SimulationRun {
    pub table: ModeTable,
    pub synthesis: Option<Synthesis>,
    pub system: ClosedLoopSystem,
    pub trajectory: Trajectory,
    pub series: NormSeries,
    pub diverged: bool,
    pub artifacts: Artifacts,
}

pub fn cmd_simulate(cfg: &RunConfig) -> Result<SimulationRun> {
    let table = build_table(cfg)?;
    let u0 = initial_coefficients(cfg, &table);
    let (synthesis, system, trajectory) = match cfg.mode {
        RunMode::ClosedLoop => {
            let s = synthesize_for_simulation(cfg, &table)?;
            let system = assemble_closed_loop(&table, &s.gains)?;
            let traj = integrate(&system, &u0, cfg.dt, cfg.horizon, cfg.integrator)?;
            (Some(s), system, traj)
        }
        RunMode::OpenLoop => {
            let system = open_loop_system(&table);
            let traj = open_loop(&table, &u0, cfg.dt, cfg.horizon)?;
            (None, system, traj)
        }
    };
    let grid = grid_points(&table.domain, cfg.grid);
    let series = norm_series(&trajectory, &table, &system, synthesis.as_ref().map(|s| &s.gains), &grid)?;
    let last = series.h2_surrogate.len() - 1;
    let diverged = trajectory.truncated || series.h2_surrogate[last] > series.h2_surrogate[0];
    if diverged {
        warn!("H2 surrogate grew from {} to {}", series.h2_surrogate[0], series.h2_surrogate[last]);
    }
    let mut summary = json!({
        "mode": match cfg.mode { RunMode::ClosedLoop => "closed_loop", RunMode::OpenLoop => "open_loop" },
        "shape": cfg.shape.name(),
        "N": table.unstable(),
        "n_sim": table.len(),
        "samples": trajectory.len(),
        "diverged": diverged,
        "truncated": trajectory.truncated,
        "initial_h2_surrogate": json_f64(series.h2_surrogate[0]),
        "final_h2_surrogate": json_f64(series.h2_surrogate[last]),
        "initial_linf": json_f64(series.linf[0]),
        "final_linf": json_f64(series.linf[last]),
    });
    if let Some(s) = &synthesis {
        summary["gain_source"] = json!(s.source.label());
        summary["gammas"] = json!(s.gains.gammas);
        if let GainSource::AutoScaled { kappa } = s.source {
            summary["kappa"] = json!(kappa);
        }
        summary["stability"] = stability_json(&s.report);
    }
    let files = vec![
        ("trajectory.csv".to_string(), trajectory_csv(&trajectory).into_bytes()),
        ("norms.csv".to_string(), norm_series_csv(&series).into_bytes()),
        ("snapshots.bin".to_string(), snapshot_bytes(&trajectory)),
        ("summary.json".to_string(), json_bytes(&summary)),
    ];
    Ok(SimulationRun {
        table,
        synthesis,
        system,
        trajectory,
        series,
        diverged,
        artifacts: Artifacts { files, outcome: Outcome::Ok },
    })
}

pub struct VerifyRun {
    pub simulation: SimulationRun,
    pub report: ClaimsReport,
    pub reduced_fit: Option<ReducedFit>,
    pub commutation: Option<f64>,
    pub restart: Option<f64>,
    pub gn_ratio: Option<f64>,
    pub artifacts: Artifacts,
}

/// Fit window scaled to short horizons.
pub fn fit_window(horizon: f64) -> (f64, f64) {
    if horizon >= 4.0 {
        DEFAULT_WINDOW
    } else {
        (0.125 * horizon, 0.875 * horizon)
    }
}

pub fn cmd_verify(cfg: &RunConfig) -> Result<VerifyRun> {
    let sim = cmd_simulate(cfg)?;
    let window = fit_window(cfg.horizon);
    let report = verify_claims(&sim.series, window)?;
    let (mut reduced_fit, mut commutation, mut restart) = (None, None, None);
    if let Some(s) = &sim.synthesis {
        match reduced_dynamics_fit(&sim.trajectory, &s.gains) {
            Ok(fit) => {
                let closer =
                    if fit.distance_direct_visited <= fit.distance_paper_visited { "direct" } else { "-S_paper" };
                info!(
                    "fitted reduced generator (rank {}): distance {} to direct, {} to -S_paper; closer: {closer}",
                    fit.rank, fit.distance_direct_visited, fit.distance_paper_visited
                );
                reduced_fit = Some(fit);
            }
            Err(Error::InsufficientExcitation(m)) => warn!("reduced-dynamics fit skipped: {m}"),
            Err(e) => return Err(e),
        }
        let lifting = Lifting::new(&sim.table, s.gains.n());
        let mut worst: f64 = 0.0;
        for i in 0..s.gains.n() {
            worst = worst.max(commutation_check(&s.gains, &lifting, &sim.trajectory.states, i, sim.trajectory.dt())?);
        }
        commutation = Some(worst);
        restart = Some(restart_consistency(&s.gains, &sim.trajectory));
    }
    let gn = gn_ratio_series(&sim.series, &sim.table.domain).ok();
    let pass = report.all_pass();
    for c in report.claims.iter().filter(|c| !c.pass) {
        warn!("claim failed: {} (sigma_hat {:?})", c.metric, c.sigma_hat);
    }
    let fit_json = reduced_fit.as_ref().map(|f| {
        json!({
            "residual": json_f64(f.residual),
            "distance_direct": json_f64(f.distance_direct),
            "distance_paper": json_f64(f.distance_paper),
            "rank": f.rank,
            "distance_direct_visited": json_f64(f.distance_direct_visited),
            "distance_paper_visited": json_f64(f.distance_paper_visited),
            "closer": if f.distance_direct_visited <= f.distance_paper_visited { "direct" } else { "paper" },
        })
    });
    let doc = json!({
        "pass": pass,
        "degenerate": report.degenerate,
        "window": [window.0, window.1],
        "mode": match cfg.mode { RunMode::ClosedLoop => "closed_loop", RunMode::OpenLoop => "open_loop" },
        "gain_source": sim.synthesis.as_ref().map(|s| s.source.label()),
        "claims": report.claims,
        "failed": report.claims.iter().filter(|c| !c.pass).map(|c| c.metric.clone()).collect::<Vec<_>>(),
        "reduced_fit": fit_json,
        "commutation_deviation": commutation.map(json_f64),
        "restart_deviation": restart.map(json_f64),
        "gn_ratio": gn.map(json_f64),
    });
    let mut files = sim.artifacts.files.clone();
    files.push(("claims.json".to_string(), json_bytes(&doc)));
    let outcome = if pass { Outcome::Ok } else { Outcome::VerificationFailed };
    Ok(VerifyRun {
        simulation: sim,
        report,
        reduced_fit,
        commutation,
        restart,
        gn_ratio: gn,
        artifacts: Artifacts { files, outcome },
    })
}

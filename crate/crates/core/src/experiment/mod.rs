mod config;
mod run;

pub use config::{default_gammas, Gammas, Initial, RunConfig, RunMode};
pub use run::{
    build_table, cmd_simulate, cmd_spectrum, cmd_synthesize, cmd_verify, error_exit_code, fit_window,
    initial_coefficients, synthesize_configured, synthesize_for_simulation, Artifacts, GainSource, Outcome,
    SimulationRun, SpectrumRun, Synthesis, SynthesisRun, VerifyRun,
};

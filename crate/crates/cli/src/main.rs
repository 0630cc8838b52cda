use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand, ValueEnum};
use log::error;
use modalstab::experiment::{
    cmd_simulate, cmd_spectrum, cmd_synthesize, cmd_verify, error_exit_code, Artifacts, RunConfig,
};
use modalstab::Error;

#[derive(Parser, Debug)]
#[command(
    name = "modalstab",
    version,
    about = "Modal boundary stabilization of the heat equation on the disk and ball"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Config file (`key = value` lines); defaults describe the disk run.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory, overriding `output_dir`.
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    #[arg(long, global = true)]
    mode: Option<Mode>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Grid points per axis for max-norm reconstruction.
    #[arg(long, global = true)]
    grid: Option<usize>,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Command {
    /// Mode table and count of nonnegative eigenvalues.
    Spectrum,
    /// Controller gains and stability margins.
    Synthesize,
    /// Closed- or open-loop simulation with norm series.
    Simulate,
    /// Simulation plus decay-claim report.
    Verify,
}

#[derive(ValueEnum, Debug, Clone, Copy)]
#[value(rename_all = "snake_case")]
enum Mode {
    ClosedLoop,
    OpenLoop,
}

fn load_config(cli: &Cli) -> Result<RunConfig, Error> {
    let mut cfg = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Error::Config { field: "--config".into(), message: format!("{}: {e}", path.display()) })?;
            RunConfig::parse(&text)?
        }
        None => RunConfig::parse("")?,
    };
    if let Some(m) = cli.mode {
        cfg.set(
            "mode",
            match m {
                Mode::ClosedLoop => "closed_loop",
                Mode::OpenLoop => "open_loop",
            },
        )?;
    }
    if let Some(s) = cli.seed {
        cfg.set("seed", &s.to_string())?;
    }
    if let Some(g) = cli.grid {
        cfg.set("grid", &g.to_string())?;
    }
    if let Some(o) = &cli.output {
        cfg.output_dir = o.clone();
    }
    Ok(cfg)
}

fn configure_threads() -> anyhow::Result<()> {
    if let Ok(v) = std::env::var("MODALSTAB_THREADS") {
        let n: usize = v.trim().parse().context("MODALSTAB_THREADS must be a positive integer")?;
        anyhow::ensure!(n > 0, "MODALSTAB_THREADS must be a positive integer");
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    Ok(())
}

fn run(cli: &Cli) -> Result<i32, Error> {
    let cfg = load_config(cli)?;
    let mut out = std::io::stdout().lock();
    let artifacts: Artifacts = match cli.command {
        Command::Spectrum => {
            let r = cmd_spectrum(&cfg)?;
            let n = r.table.unstable();
            let _ = writeln!(out, "N = {n}");
            for (i, m) in r.table.modes.iter().take(n + 1).enumerate() {
                let _ = writeln!(out, "mu_{} = {:.6}", i + 1, m.mu);
            }
            r.artifacts
        }
        Command::Synthesize => {
            let r = cmd_synthesize(&cfg)?;
            let s = &r.synthesis;
            let _ = writeln!(out, "gammas = {:?}", s.gains.gammas);
            let _ = writeln!(out, "margin_direct = {:.6}", s.report.margin_direct);
            let _ = writeln!(out, "margin_paper = {:.6}", s.report.margin_paper);
            if let Some(sug) = &s.suggestion {
                let _ = writeln!(out, "gains not validated; auto-scaled suggestion x{}: {:?}", sug.kappa, sug.gammas);
            }
            r.artifacts
        }
        Command::Simulate => {
            let r = cmd_simulate(&cfg)?;
            let last = r.series.times.len() - 1;
            if let Some(s) = &r.synthesis {
                let _ = writeln!(out, "gains ({}) = {:?}", s.source.label(), s.gains.gammas);
            }
            let _ =
                writeln!(out, "h2_surrogate: {:.6e} -> {:.6e}", r.series.h2_surrogate[0], r.series.h2_surrogate[last]);
            let _ = writeln!(out, "linf: {:.6e} -> {:.6e}", r.series.linf[0], r.series.linf[last]);
            let _ = writeln!(out, "diverged = {}", r.diverged);
            r.artifacts
        }
        Command::Verify => {
            let r = cmd_verify(&cfg)?;
            for c in &r.report.claims {
                let rate = c.sigma_hat.map_or("-".to_string(), |s| format!("{s:.4}"));
                let _ =
                    writeln!(out, "{:<14} sigma_hat = {rate:>9}  {}", c.metric, if c.pass { "pass" } else { "FAIL" });
            }
            if r.report.degenerate {
                let _ = writeln!(out, "zero trajectory: degenerate pass");
            }
            r.artifacts
        }
    };
    artifacts.write(&cfg.output_dir)?;
    Ok(artifacts.outcome.exit_code())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    if let Err(e) = configure_threads() {
        error!("{e:#}");
        return ExitCode::from(2);
    }
    match run(&cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(error_exit_code(&e) as u8)
        }
    }
}

//! Run configuration in a flat `key = value` text format.
//!
//! ```text
//! # comment
//! domain.shape = disk        # disk | ball
//! domain.radius = 2
//! lambda = 6.61
//! gammas = 6.17, 7.17, 8.17, 9.17, 10.17   # or: auto
//! target_margin = -0.5
//! n_sim = 300
//! dt = 0.05
//! horizon = 4
//! grid = 50
//! seed = 1
//! mode = closed_loop         # closed_loop | open_loop
//! initial = random_cubic     # random_cubic | zero
//! integrator = expm_step     # expm_step | rk4
//! output_dir = out
//! ```

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use crate::basis::{Domain, Shape};
use crate::error::{Error, Result};
use crate::simulator::Method;

#[derive(Clone, Debug, PartialEq)]
pub enum Gammas {
    Auto,
    Explicit(Vec<f64>),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RunMode {
    ClosedLoop,
    OpenLoop,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Initial {
    RandomCubic,
    Zero,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub shape: Shape,
    pub radius: f64,
    pub lambda: f64,
    pub gammas: Gammas,
    pub target_margin: f64,
    pub n_sim: usize,
    pub dt: f64,
    pub horizon: f64,
    pub grid: usize,
    pub seed: u64,
    pub mode: RunMode,
    pub initial: Initial,
    pub integrator: Method,
    pub output_dir: PathBuf,
}

pub fn default_gammas(shape: Shape) -> Vec<f64> {
    match shape {
        Shape::Disk => vec![6.17, 7.17, 8.17, 9.17, 10.17],
        Shape::Ball => vec![5.147, 6.147, 7.147, 8.147],
    }
}

impl RunConfig {
    pub fn new(shape: Shape) -> Self {
        Self {
            shape,
            radius: 2.0,
            lambda: 6.61,
            gammas: Gammas::Explicit(default_gammas(shape)),
            target_margin: -0.5,
            n_sim: 300,
            dt: 0.05,
            horizon: 4.0,
            grid: 50,
            seed: 1,
            mode: RunMode::ClosedLoop,
            initial: Initial::RandomCubic,
            integrator: Method::ExpmStep,
            output_dir: PathBuf::from("out"),
        }
    }

    pub fn domain(&self) -> Domain {
        Domain::new(self.shape, self.radius)
    }

    /// Starting gains for synthesis or the doubling search.
    pub fn base_gammas(&self) -> Vec<f64> {
        match &self.gammas {
            Gammas::Auto => default_gammas(self.shape),
            Gammas::Explicit(g) => g.clone(),
        }
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| Error::Config {
                field: format!("line {}", lineno + 1),
                message: format!("expected `key = value`, got `{line}`"),
            })?;
            entries.push((key.trim().to_string(), value.trim().to_string()));
        }
        let shape = match entries.iter().find(|(k, _)| k == "domain.shape") {
            Some((_, v)) => parse_shape(v)?,
            None => Shape::Disk,
        };
        let mut cfg = Self::new(shape);
        let mut seen = std::collections::HashSet::new();
        for (key, value) in &entries {
            if !seen.insert(key.clone()) {
                return Err(bad(key, "given more than once"));
            }
            match key.as_str() {
                "domain.shape" => {}
                "domain.radius" => cfg.radius = num(key, value)?,
                "lambda" => cfg.lambda = num(key, value)?,
                "gammas" => cfg.gammas = parse_gammas(value)?,
                "target_margin" => cfg.target_margin = num(key, value)?,
                "n_sim" => cfg.n_sim = num(key, value)?,
                "dt" => cfg.dt = num(key, value)?,
                "horizon" => cfg.horizon = num(key, value)?,
                "grid" => cfg.grid = num(key, value)?,
                "seed" => cfg.seed = num(key, value)?,
                "mode" => cfg.mode = parse_mode(value)?,
                "initial" => {
                    cfg.initial = match value.as_str() {
                        "random_cubic" => Initial::RandomCubic,
                        "zero" => Initial::Zero,
                        _ => return Err(bad(key, "expected random_cubic or zero")),
                    }
                }
                "integrator" => {
                    cfg.integrator = match value.as_str() {
                        "expm_step" => Method::ExpmStep,
                        "rk4" => Method::Rk4,
                        _ => return Err(bad(key, "expected expm_step or rk4")),
                    }
                }
                "output_dir" => cfg.output_dir = PathBuf::from(value),
                _ => return Err(bad(key, "unknown key")),
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.radius > 0.0 && self.radius.is_finite()) {
            return Err(bad("domain.radius", "must be positive"));
        }
        if !self.lambda.is_finite() {
            return Err(bad("lambda", "must be finite"));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(bad("dt", "must be positive"));
        }
        if !(self.horizon >= self.dt && self.horizon.is_finite()) {
            return Err(bad("horizon", "must be at least dt"));
        }
        if self.n_sim == 0 {
            return Err(bad("n_sim", "must be at least 1"));
        }
        if self.grid < 2 {
            return Err(bad("grid", "must be at least 2"));
        }
        if !(self.target_margin < 0.0) {
            return Err(bad("target_margin", "must be negative"));
        }
        if let Gammas::Explicit(g) = &self.gammas {
            if g.iter().any(|x| !(x.is_finite() && *x > 0.0)) {
                return Err(bad("gammas", "must be positive numbers"));
            }
            if g.windows(2).any(|w| w[0] >= w[1]) {
                return Err(bad("gammas", "must be strictly increasing"));
            }
        }
        Ok(())
    }

    /// Replaces one key as if it had been written in the config file.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let text = self.to_string();
        let mut lines: Vec<&str> = text.lines().filter(|l| l.split('=').next().map(str::trim) != Some(key)).collect();
        let line = format!("{key} = {value}");
        lines.push(&line);
        *self = Self::parse(&lines.join("\n"))?;
        Ok(())
    }
}

fn bad(field: &str, message: &str) -> Error {
    Error::Config { field: field.into(), message: message.into() }
}

fn num<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value.parse().map_err(|_| bad(key, &format!("cannot parse `{value}`")))
}

fn parse_shape(v: &str) -> Result<Shape> {
    match v {
        "disk" => Ok(Shape::Disk),
        "ball" => Ok(Shape::Ball),
        _ => Err(bad("domain.shape", "expected disk or ball")),
    }
}

fn parse_mode(v: &str) -> Result<RunMode> {
    match v {
        "closed_loop" => Ok(RunMode::ClosedLoop),
        "open_loop" => Ok(RunMode::OpenLoop),
        _ => Err(bad("mode", "expected closed_loop or open_loop")),
    }
}

fn parse_gammas(v: &str) -> Result<Gammas> {
    if v == "auto" {
        return Ok(Gammas::Auto);
    }
    let inner = v.trim_start_matches('[').trim_end_matches(']');
    inner.split(',').map(|x| num::<f64>("gammas", x.trim())).collect::<Result<Vec<_>>>().map(Gammas::Explicit)
}

impl fmt::Display for RunConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "domain.shape = {}", self.shape.name())?;
        writeln!(f, "domain.radius = {}", self.radius)?;
        writeln!(f, "lambda = {}", self.lambda)?;
        match &self.gammas {
            Gammas::Auto => writeln!(f, "gammas = auto")?,
            Gammas::Explicit(g) => {
                let s: Vec<String> = g.iter().map(|x| x.to_string()).collect();
                writeln!(f, "gammas = {}", s.join(", "))?
            }
        }
        writeln!(f, "target_margin = {}", self.target_margin)?;
        writeln!(f, "n_sim = {}", self.n_sim)?;
        writeln!(f, "dt = {}", self.dt)?;
        writeln!(f, "horizon = {}", self.horizon)?;
        writeln!(f, "grid = {}", self.grid)?;
        writeln!(f, "seed = {}", self.seed)?;
        let mode = match self.mode {
            RunMode::ClosedLoop => "closed_loop",
            RunMode::OpenLoop => "open_loop",
        };
        writeln!(f, "mode = {mode}")?;
        let initial = match self.initial {
            Initial::RandomCubic => "random_cubic",
            Initial::Zero => "zero",
        };
        writeln!(f, "initial = {initial}")?;
        let integrator = match self.integrator {
            Method::ExpmStep => "expm_step",
            Method::Rk4 => "rk4",
        };
        writeln!(f, "integrator = {integrator}")?;
        writeln!(f, "output_dir = {}", self.output_dir.display())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn defaults_and_comments() {
        let c = RunConfig::parse("# nothing but a comment\n\ndomain.shape = ball # trailing\n").unwrap();
        assert_eq!(c.shape, Shape::Ball);
        assert_eq!(c.gammas, Gammas::Explicit(vec![5.147, 6.147, 7.147, 8.147]));
        assert_eq!((c.radius, c.lambda, c.n_sim, c.dt, c.horizon, c.grid), (2.0, 6.61, 300, 0.05, 4.0, 50));
        let d = RunConfig::parse("").unwrap();
        assert_eq!(d, RunConfig::new(Shape::Disk));
    }

    #[test]
    fn errors_name_the_field() {
        for (text, field) in [
            ("dt = 0", "dt"),
            ("dt = 0.1\nhorizon = 0.05", "horizon"),
            ("gammas = 3, 2", "gammas"),
            ("domain.shape = cube", "domain.shape"),
            ("colour = red", "colour"),
            ("lambda = x", "lambda"),
            ("grid = 1", "grid"),
            ("seed = 1\nseed = 2", "seed"),
        ] {
            match RunConfig::parse(text) {
                Err(Error::Config { field: f, .. }) => assert_eq!(f, field, "{text}"),
                other => panic!("{text}: {other:?}"),
            }
        }
    }

    #[test]
    fn set_overrides_one_key() {
        let mut c = RunConfig::new(Shape::Disk);
        c.set("seed", "17").unwrap();
        c.set("gammas", "auto").unwrap();
        assert_eq!(c.seed, 17);
        assert_eq!(c.gammas, Gammas::Auto);
        assert!(c.set("dt", "-1").is_err());
    }

    proptest! {
        #[test]
        fn round_trip(
            ball in any::<bool>(),
            radius in 0.1f64..10.0,
            lambda in -5.0f64..50.0,
            auto in any::<bool>(),
            g0 in 0.1f64..20.0,
            n_sim in 1usize..1000,
            dt in 1e-4f64..0.5,
            seed in any::<u64>(),
            open in any::<bool>(),
        ) {
            let mut c = RunConfig::new(if ball { Shape::Ball } else { Shape::Disk });
            c.radius = radius;
            c.lambda = lambda;
            c.gammas = if auto { Gammas::Auto } else { Gammas::Explicit(vec![g0, g0 + 0.37, g0 * 3.0 + 1.0]) };
            c.n_sim = n_sim;
            c.dt = dt;
            c.horizon = dt * 40.0;
            c.seed = seed;
            c.mode = if open { RunMode::OpenLoop } else { RunMode::ClosedLoop };
            let again = RunConfig::parse(&c.to_string()).unwrap();
            prop_assert_eq!(again, c);
        }
    }
}

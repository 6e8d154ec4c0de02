//! `key = value` experiment files.
//!
//! ```text
//! # Cox design at desk scale
//! preset = table4
//! n = 500
//! estimators = nai, man, ren
//! ```
//!
//! A `preset` line is applied first wherever it appears; other keys override
//! it in file order.

use std::path::Path;

use serde::Serialize;

use super::experiment::Estimator;
use crate::error::{Error, Result};
use crate::npmle::NpmleOptions;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Cox,
    BootstrapSe,
}

#[derive(Debug, Clone, Serialize)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub n: usize,
    pub trials: usize,
    pub seed: u64,
    pub sigma: f64,
    /// Defaults to `1 / sigma`.
    pub beta: Option<f64>,
    pub rho: f64,
    pub tau: f64,
    pub estimators: Vec<Estimator>,
    /// Bootstrap resamples per trial (bootstrap-SE design).
    pub b: usize,
    pub oracle_trials: usize,
    pub points: Vec<f64>,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            kind: ExperimentKind::Cox,
            n: 250,
            trials: 100,
            seed: 0,
            sigma: 0.1,
            beta: None,
            rho: 0.5,
            tau: 0.25,
            estimators: vec![Estimator::Ben, Estimator::Nai, Estimator::Man, Estimator::Ren],
            b: 99,
            oracle_trials: 1000,
            points: vec![0.25, 0.5, 0.75],
            tol: 1e-6,
            max_iter: 10_000,
        }
    }
}

impl ExperimentConfig {
    /// `table4` (Cox design) or `table3` (bootstrap standard errors).
    pub fn preset(name: &str) -> Result<Self> {
        match name.trim() {
            "table4" => Ok(Self::default()),
            "table3" => Ok(Self {
                kind: ExperimentKind::BootstrapSe,
                ..Self::default()
            }),
            other => Err(Error::Config(format!("unknown preset `{other}` (table3, table4)"))),
        }
    }

    /// Trial count of the full-size study.
    pub fn full_scale(mut self) -> Self {
        self.trials = 250;
        self
    }

    pub fn beta(&self) -> f64 {
        self.beta.unwrap_or(1.0 / self.sigma)
    }

    pub fn npmle(&self) -> NpmleOptions {
        NpmleOptions {
            tol: self.tol,
            max_iter: self.max_iter,
        }
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let value = value.trim();
        let bad = |what: &str| Error::Config(format!("`{key}`: cannot parse `{value}` as {what}"));
        let num = || value.parse::<f64>().map_err(|_| bad("a number"));
        let count = || value.parse::<usize>().map_err(|_| bad("a count"));
        match key.trim() {
            "kind" | "design" => {
                self.kind = match value {
                    "cox" => ExperimentKind::Cox,
                    "bootstrap_se" | "bootstrap-se" => ExperimentKind::BootstrapSe,
                    _ => return Err(bad("cox or bootstrap_se")),
                }
            }
            "n" => self.n = count()?,
            "trials" | "M" => self.trials = count()?,
            "seed" => self.seed = value.parse().map_err(|_| bad("a 64-bit seed"))?,
            "sigma" => self.sigma = num()?,
            "beta" => self.beta = Some(num()?),
            "rho" => self.rho = num()?,
            "tau" => self.tau = num()?,
            "B" | "b" => self.b = count()?,
            "oracle_trials" => self.oracle_trials = count()?,
            "tol" => self.tol = num()?,
            "max_iter" => self.max_iter = count()?,
            "estimators" => {
                self.estimators = value
                    .split(',')
                    .filter(|s| !s.trim().is_empty())
                    .map(Estimator::parse)
                    .collect::<Result<_>>()?
            }
            "points" => {
                self.points = value
                    .split(',')
                    .map(|s| s.trim().parse::<f64>().map_err(|_| bad("a list of numbers")))
                    .collect::<Result<_>>()?
            }
            "preset" => *self = Self::preset(value)?,
            other => return Err(Error::Config(format!("unknown key `{other}`"))),
        }
        Ok(())
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        cfg.apply_text(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Applies a config file on top of `self`.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        let mut pairs = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected `key = value`", lineno + 1)))?;
            pairs.push((lineno + 1, k.trim().to_string(), v.trim().to_string()));
        }
        if let Some(p) = pairs.iter().find(|p| p.1 == "preset") {
            *self = Self::preset(&p.2)?;
        }
        for (lineno, k, v) in pairs.iter().filter(|p| p.1 != "preset") {
            self.set(k, v).map_err(|e| Error::Config(format!("line {lineno}: {e}")))?;
        }
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
        Self::parse(&text)
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Config(m));
        if self.n < 1 {
            return fail("n must be at least 1".into());
        }
        if self.trials < 1 {
            return fail("trials must be at least 1".into());
        }
        if !(self.sigma > 0.0) || !(self.rho > 0.0) || !(self.tau > 0.0) {
            return fail("sigma, rho and tau must be positive".into());
        }
        if self.kind == ExperimentKind::Cox && self.estimators.is_empty() {
            return fail("no estimators requested".into());
        }
        if self.kind == ExperimentKind::BootstrapSe {
            if self.b < 2 {
                return fail("B must be at least 2".into());
            }
            if self.oracle_trials < 2 {
                return fail("oracle_trials must be at least 2".into());
            }
            if self.points.is_empty() {
                return fail("no evaluation points".into());
            }
        }
        if !(self.tol > 0.0) || self.max_iter == 0 {
            return fail("tol must be positive and max_iter at least 1".into());
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_with_preset_and_overrides() {
        let cfg = ExperimentConfig::parse(
            "# comment\nn = 500\npreset = table3\nB = 49  # inline\npoints = 0.1, 0.9\n",
        )
        .unwrap();
        assert_eq!(cfg.kind, ExperimentKind::BootstrapSe);
        assert_eq!(cfg.n, 500);
        assert_eq!(cfg.b, 49);
        assert_eq!(cfg.points, vec![0.1, 0.9]);
    }

    #[test]
    fn beta_defaults_to_inverse_sigma() {
        let cfg = ExperimentConfig::parse("sigma = 0.2").unwrap();
        assert!((cfg.beta() - 5.0).abs() < 1e-12);
        let cfg = ExperimentConfig::parse("beta = 0").unwrap();
        assert_eq!(cfg.beta(), 0.0);
    }

    #[test]
    fn errors_name_the_line() {
        let err = ExperimentConfig::parse("n = 10\nbogus = 1\n").unwrap_err();
        assert!(err.to_string().contains("line 2"), "{err}");
        assert!(ExperimentConfig::parse("n 10").is_err());
        assert!(ExperimentConfig::parse("estimators = ben, foo").is_err());
        assert!(ExperimentConfig::parse("trials = 0").is_err());
    }
}

use rayon::prelude::*;
use serde::Serialize;

use super::config::{ExperimentConfig, ExperimentKind};
use super::{gen_truncated, CoxScenario, TruncationDesign, XLaw};
use crate::bootstrap::{simple_bootstrap, BootstrapOptions, CiMethod};
use crate::cox::{cox_estimate, NewtonOptions, Scheme};
use crate::error::{Error, Result};
use crate::npmle::npmle_joint;
use crate::rng::child_seed;
use crate::stats;

/// Seeds for the truth oracle live in their own branch of the seed tree.
const ORACLE_BRANCH: u64 = u64::MAX;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Estimator {
    /// Naive Cox fit on the first `n` untruncated candidates.
    Ben,
    /// Cox fit ignoring truncation.
    Nai,
    Man,
    Ren,
}

impl Estimator {
    pub fn name(&self) -> &'static str {
        match self {
            Estimator::Ben => "ben",
            Estimator::Nai => "nai",
            Estimator::Man => "man",
            Estimator::Ren => "ren",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.trim() {
            "ben" => Ok(Estimator::Ben),
            "nai" => Ok(Estimator::Nai),
            "man" => Ok(Estimator::Man),
            "ren" => Ok(Estimator::Ren),
            other => Err(Error::Config(format!("unknown estimator `{other}` (ben, nai, man, ren)"))),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SummaryRow {
    /// Estimator name, or `se@<x>` in the bootstrap-SE design.
    pub name: String,
    pub truth: f64,
    pub mean: f64,
    pub bias: f64,
    pub sd: f64,
    /// Mean squared error about the truth.
    pub mse: f64,
    pub ok: usize,
    pub failures: usize,
}

impl SummaryRow {
    fn new(name: String, truth: f64, values: &[f64], failures: usize) -> Self {
        let mean = stats::mean(values);
        let mse = values.iter().map(|v| (v - truth).powi(2)).sum::<f64>() / values.len() as f64;
        Self {
            name,
            truth,
            mean,
            bias: mean - truth,
            sd: stats::sd(values),
            mse,
            ok: values.len(),
            failures,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ExperimentReport {
    pub kind: ExperimentKind,
    pub n: usize,
    pub trials: usize,
    pub seed: u64,
    pub mean_acceptance_rate: f64,
    /// Fewer than two usable trials in some row: SD is undefined.
    pub insufficient_trials: bool,
    pub rows: Vec<SummaryRow>,
    pub config: ExperimentConfig,
}

impl ExperimentReport {
    pub fn row(&self, name: &str) -> Option<&SummaryRow> {
        self.rows.iter().find(|r| r.name == name)
    }

    pub fn to_csv_string(&self) -> String {
        let mut out = String::from("estimator,truth,mean,bias,sd,mse,ok,failures\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{}\n",
                r.name, r.truth, r.mean, r.bias, r.sd, r.mse, r.ok, r.failures
            ));
        }
        out
    }
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    match cfg.kind {
        ExperimentKind::Cox => run_cox(cfg),
        ExperimentKind::BootstrapSe => run_bootstrap_se(cfg),
    }
}

fn run_cox(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let scenario = CoxScenario::with_beta(cfg.sigma, cfg.beta())?;
    let law = XLaw::Cox(scenario);
    let design = TruncationDesign::new(cfg.rho, cfg.tau)?;
    let newton = NewtonOptions::default();
    let npmle = cfg.npmle();

    // Per trial: acceptance rate (None if generation failed) and one
    // estimate per requested estimator.
    let trials: Vec<(Option<f64>, Vec<Option<f64>>)> = (0..cfg.trials)
        .into_par_iter()
        .map(|t| {
            let Ok(gen) = gen_truncated(cfg.n, &law, &design, child_seed(cfg.seed, t as u64)) else {
                return (None, vec![None; cfg.estimators.len()]);
            };
            let g = npmle_joint(&gen.sample, &npmle).ok().filter(|f| f.converged).map(|f| f.g);
            let est = cfg
                .estimators
                .iter()
                .map(|e| {
                    let r = match e {
                        Estimator::Ben => gen
                            .pre_truncation
                            .head(cfg.n)
                            .and_then(|s| cox_estimate(&s, None, Scheme::Naive, &newton)),
                        Estimator::Nai => cox_estimate(&gen.sample, None, Scheme::Naive, &newton),
                        Estimator::Man | Estimator::Ren => {
                            let scheme = if *e == Estimator::Man { Scheme::Mandel } else { Scheme::Rennert };
                            match &g {
                                Some(g) => cox_estimate(&gen.sample, Some(g), scheme, &newton),
                                None => Err(Error::NotConverged("sampling probabilities")),
                            }
                        }
                    };
                    r.ok().map(|c| c.beta[0])
                })
                .collect();
            (Some(gen.acceptance_rate), est)
        })
        .collect();

    let truth = cfg.beta();
    let rows = cfg
        .estimators
        .iter()
        .enumerate()
        .map(|(k, e)| {
            let vals: Vec<f64> = trials.iter().filter_map(|t| t.1[k]).collect();
            SummaryRow::new(e.name().into(), truth, &vals, cfg.trials - vals.len())
        })
        .collect();
    Ok(finish(cfg, &trials.iter().filter_map(|t| t.0).collect::<Vec<_>>(), rows))
}

fn bootstrap_opts(cfg: &ExperimentConfig, seed: u64) -> BootstrapOptions {
    BootstrapOptions {
        b: cfg.b,
        level: 0.95,
        seed,
        method: CiMethod::Percentile,
        npmle: cfg.npmle(),
        eval_points: Some(cfg.points.clone()),
    }
}

/// Monte Carlo SD of `F_n` at `points`, from `trials` independent samples.
pub(crate) fn oracle_sd(cfg: &ExperimentConfig, trials: usize) -> Result<Vec<f64>> {
    let design = TruncationDesign::new(cfg.rho, cfg.tau)?;
    let branch = child_seed(cfg.seed, ORACLE_BRANCH);
    let values: Vec<Option<Vec<f64>>> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let gen = gen_truncated(cfg.n, &XLaw::Uniform01, &design, child_seed(branch, t as u64)).ok()?;
            let fit = npmle_joint(&gen.sample, &cfg.npmle()).ok().filter(|f| f.converged)?;
            Some(cfg.points.iter().map(|&x| fit.f.cdf(x)).collect())
        })
        .collect();
    let ok: Vec<Vec<f64>> = values.into_iter().flatten().collect();
    if ok.len() < 2 {
        return Err(Error::Config("truth oracle produced fewer than two usable trials".into()));
    }
    Ok((0..cfg.points.len())
        .map(|p| stats::sd(&ok.iter().map(|r| r[p]).collect::<Vec<_>>()))
        .collect())
}

fn run_bootstrap_se(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let design = TruncationDesign::new(cfg.rho, cfg.tau)?;
    let truth = oracle_sd(cfg, cfg.oracle_trials)?;
    let trials: Vec<(Option<f64>, Option<Vec<f64>>)> = (0..cfg.trials)
        .into_par_iter()
        .map(|t| {
            let seed = child_seed(cfg.seed, t as u64);
            let Ok(gen) = gen_truncated(cfg.n, &XLaw::Uniform01, &design, seed) else {
                return (None, None);
            };
            let se = simple_bootstrap(&gen.sample, &bootstrap_opts(cfg, child_seed(seed, 1)))
                .ok()
                .map(|r| r.se);
            (Some(gen.acceptance_rate), se)
        })
        .collect();
    let rows = cfg
        .points
        .iter()
        .enumerate()
        .map(|(p, x)| {
            let vals: Vec<f64> = trials.iter().filter_map(|t| t.1.as_ref().map(|se| se[p])).collect();
            SummaryRow::new(format!("se@{x}"), truth[p], &vals, cfg.trials - vals.len())
        })
        .collect();
    Ok(finish(cfg, &trials.iter().filter_map(|t| t.0).collect::<Vec<_>>(), rows))
}

fn finish(cfg: &ExperimentConfig, rates: &[f64], rows: Vec<SummaryRow>) -> ExperimentReport {
    let insufficient_trials = rows.iter().any(|r: &SummaryRow| r.ok < 2);
    ExperimentReport {
        kind: cfg.kind,
        n: cfg.n,
        trials: cfg.trials,
        seed: cfg.seed,
        mean_acceptance_rate: if rates.is_empty() { f64::NAN } else { stats::mean(rates) },
        insufficient_trials,
        rows,
        config: cfg.clone(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mse_decomposes() {
        let vals = [1.0, 2.5, 0.5, 3.0];
        let r = SummaryRow::new("x".into(), 1.2, &vals, 0);
        let m = vals.len() as f64;
        assert!((r.mse - (r.bias * r.bias + r.sd * r.sd * (m - 1.0) / m)).abs() < 1e-12);
    }

    #[test]
    fn single_trial_flags_insufficient() {
        let mut cfg = ExperimentConfig::preset("table4").unwrap();
        cfg.n = 60;
        cfg.trials = 1;
        let rep = run_experiment(&cfg).unwrap();
        assert!(rep.insufficient_trials);
        assert!(rep.rows.iter().all(|r| r.sd.is_nan()));
    }
}

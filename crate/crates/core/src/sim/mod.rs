//! Generators for interval-sampling designs and a Monte Carlo runner.
//!
//! Truncation limits follow `U = (1 + tau) xi^rho - tau`, `V = U + tau` with
//! `xi ~ U(0,1)`, drawn independently of `(X, Z)`. Candidates are kept while
//! `U <= X <= V`.

mod config;
mod experiment;

pub use config::{ExperimentConfig, ExperimentKind};
pub use experiment::{run_experiment, Estimator, ExperimentReport, SummaryRow};

use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::rng::{stream, Stream};
use crate::sample::{Covariates, TruncatedSample};

const MIN_ACCEPTANCE: f64 = 1e-4;
const RATE_CHECK_AFTER: usize = 100_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TruncationDesign {
    pub rho: f64,
    pub tau: f64,
}

impl TruncationDesign {
    pub fn new(rho: f64, tau: f64) -> Result<Self> {
        if !(rho > 0.0 && rho.is_finite() && tau > 0.0 && tau.is_finite()) {
            return Err(Error::Config(format!("rho and tau must be positive, got rho={rho}, tau={tau}")));
        }
        Ok(Self { rho, tau })
    }

    pub fn draw(&self, rng: &mut Stream) -> (f64, f64) {
        let xi: f64 = rng.random();
        let u = (1.0 + self.tau) * xi.powf(self.rho) - self.tau;
        (u, u + self.tau)
    }
}

/// `X | Z = z` Weibull with shape `1/sigma`, hazard multiplier `exp(beta z)`,
/// and `Z ~ Exp(1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CoxScenario {
    pub sigma: f64,
    pub beta: f64,
}

impl CoxScenario {
    /// `beta = 1/sigma`, so the scale of `X | Z = z` is `exp(-z)`.
    pub fn new(sigma: f64) -> Result<Self> {
        Self::with_beta(sigma, 1.0 / sigma)
    }

    pub fn with_beta(sigma: f64, beta: f64) -> Result<Self> {
        if !(sigma > 0.0 && sigma.is_finite() && beta.is_finite()) {
            return Err(Error::Config(format!("invalid Cox scenario sigma={sigma}, beta={beta}")));
        }
        Ok(Self { sigma, beta })
    }

    /// Draws `(x, z)`.
    pub fn draw(&self, rng: &mut Stream) -> (f64, f64) {
        let z = exp1(rng);
        let e = exp1(rng);
        ((e * (-self.beta * z).exp()).powf(self.sigma), z)
    }
}

fn exp1(rng: &mut Stream) -> f64 {
    // 1 - U lies in (0, 1]: never log(0).
    -(1.0 - rng.random::<f64>()).ln()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "law", rename_all = "lowercase")]
pub enum XLaw {
    Uniform01,
    Cox(CoxScenario),
}

impl XLaw {
    fn draw(&self, rng: &mut Stream) -> (f64, Option<f64>) {
        match self {
            XLaw::Uniform01 => (rng.random(), None),
            XLaw::Cox(c) => {
                let (x, z) = c.draw(rng);
                (x, Some(z))
            }
        }
    }
}

/// Untruncated candidates in draw order.
#[derive(Debug, Clone, Default)]
pub struct PreTruncation {
    pub x: Vec<f64>,
    pub z: Vec<f64>,
}

impl PreTruncation {
    /// The first `n` candidates as a sample with trivially covering windows.
    pub fn head(&self, n: usize) -> Result<TruncatedSample> {
        let n = n.min(self.x.len());
        let x = self.x[..n].to_vec();
        let s = TruncatedSample::new(x.clone(), x.clone(), x)?;
        if self.z.is_empty() {
            return Ok(s);
        }
        let rows = self.z[..n].iter().map(|&z| vec![z]).collect();
        s.with_covariates(Covariates::new(vec!["z".into()], rows)?)
    }
}

#[derive(Debug, Clone)]
pub struct Generated {
    pub sample: TruncatedSample,
    pub acceptance_rate: f64,
    pub candidates: usize,
    pub pre_truncation: PreTruncation,
}

/// Draws candidates until `n` satisfy `u <= x <= v`.
pub fn gen_truncated(n: usize, law: &XLaw, design: &TruncationDesign, seed: u64) -> Result<Generated> {
    if n == 0 {
        return Err(Error::Config("n must be at least 1".into()));
    }
    let mut rng = stream(seed, 0);
    let covariate = matches!(law, XLaw::Cox(_));
    let (mut x, mut u, mut v, mut z) = (Vec::with_capacity(n), Vec::with_capacity(n), Vec::with_capacity(n), Vec::new());
    let mut pre = PreTruncation::default();
    let mut candidates = 0usize;
    while x.len() < n {
        let (xi, zi) = law.draw(&mut rng);
        let (ui, vi) = design.draw(&mut rng);
        candidates += 1;
        pre.x.push(xi);
        if let Some(zi) = zi {
            pre.z.push(zi);
        }
        if ui <= xi && xi <= vi {
            x.push(xi);
            u.push(ui);
            v.push(vi);
            if let Some(zi) = zi {
                z.push(vec![zi]);
            }
        }
        if candidates >= RATE_CHECK_AFTER && (x.len() as f64) < MIN_ACCEPTANCE * candidates as f64 {
            return Err(Error::Config(format!(
                "acceptance rate {} after {candidates} candidates is below {MIN_ACCEPTANCE}",
                x.len() as f64 / candidates as f64
            )));
        }
    }
    let mut sample = TruncatedSample::new(x, u, v)?;
    if covariate {
        sample = sample.with_covariates(Covariates::new(vec!["z".into()], z)?)?;
    }
    Ok(Generated {
        sample,
        acceptance_rate: n as f64 / candidates as f64,
        candidates,
        pre_truncation: pre,
    })
}

/// Fraction of `candidates` draws that fall inside their window.
pub fn acceptance_rate(law: &XLaw, design: &TruncationDesign, candidates: usize, seed: u64) -> f64 {
    let mut rng = stream(seed, 0);
    let mut kept = 0usize;
    for _ in 0..candidates {
        let (x, _) = law.draw(&mut rng);
        let (u, v) = design.draw(&mut rng);
        if u <= x && x <= v {
            kept += 1;
        }
    }
    kept as f64 / candidates as f64
}

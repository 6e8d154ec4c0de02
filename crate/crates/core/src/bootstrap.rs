//! Bootstrap standard errors and pointwise confidence limits for the NPMLE.
//!
//! Replicate `r` draws from its own generator `rng::stream(seed, r)`, so the
//! output is identical whatever the size of the rayon pool. A replicate whose
//! resample fails (existence pre-check, non-convergence, numerical
//! degeneracy) is redrawn from the same stream and counted as a failure.

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::npmle::{npmle_joint, shen_k, NpmleOptions};
use crate::rng::{stream, Stream};
use crate::sample::{existence_check, TruncatedSample};
use crate::stats;

pub const DEFAULT_B: usize = 500;
const MIN_ACCEPTANCE: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CiMethod {
    Percentile,
    Normal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum BootstrapKind {
    Simple,
    Obvious,
}

#[derive(Debug, Clone)]
pub struct BootstrapOptions {
    pub b: usize,
    pub level: f64,
    pub seed: u64,
    pub method: CiMethod,
    pub npmle: NpmleOptions,
    /// Points at which `F` is summarised; defaults to the distinct observed
    /// event values.
    pub eval_points: Option<Vec<f64>>,
}

impl Default for BootstrapOptions {
    fn default() -> Self {
        Self {
            b: DEFAULT_B,
            level: 0.95,
            seed: 0,
            method: CiMethod::Percentile,
            npmle: NpmleOptions::default(),
            eval_points: None,
        }
    }
}

impl BootstrapOptions {
    pub(crate) fn validate(&self) -> Result<()> {
        if self.b < 2 {
            return Err(Error::InvalidArgument(format!("B must be at least 2, got {}", self.b)));
        }
        if !(self.level > 0.0 && self.level < 1.0) {
            return Err(Error::InvalidArgument(format!("level must lie in (0,1), got {}", self.level)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct BootstrapResult {
    pub kind: BootstrapKind,
    pub method: CiMethod,
    pub eval_points: Vec<f64>,
    pub estimate: Vec<f64>,
    pub se: Vec<f64>,
    pub ci_low: Vec<f64>,
    pub ci_high: Vec<f64>,
    pub level: f64,
    pub b: usize,
    pub failures: usize,
    pub seed: u64,
    /// Probability that an obvious-bootstrap candidate is kept.
    pub acceptance: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct BootstrapSummary {
    pub kind: BootstrapKind,
    pub method: CiMethod,
    pub level: f64,
    pub b: usize,
    pub failures: usize,
    pub seed: u64,
    pub acceptance: Option<f64>,
}

impl BootstrapResult {
    /// `time,cdf,se,ci_low,ci_high`.
    pub fn to_csv_string(&self) -> String {
        let mut out = String::from("time,cdf,se,ci_low,ci_high\n");
        for k in 0..self.eval_points.len() {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                self.eval_points[k], self.estimate[k], self.se[k], self.ci_low[k], self.ci_high[k]
            ));
        }
        out
    }

    pub fn summary(&self) -> BootstrapSummary {
        BootstrapSummary {
            kind: self.kind,
            method: self.method,
            level: self.level,
            b: self.b,
            failures: self.failures,
            seed: self.seed,
            acceptance: self.acceptance,
        }
    }
}

/// Runs `b` replicates of `draw`; `None` from `draw` means "redraw".
///
/// Returns the replicate values in index order and the total failure count.
/// Aborts when failures reach `b`.
pub(crate) fn replicate<T, F>(b: usize, seed: u64, draw: F) -> Result<(Vec<T>, usize)>
where
    T: Send,
    F: Fn(&mut Stream) -> Option<T> + Sync,
{
    let outcomes: Vec<(Option<T>, usize)> = (0..b)
        .into_par_iter()
        .map(|r| {
            let mut rng = stream(seed, r as u64);
            let mut failures = 0;
            loop {
                if let Some(t) = draw(&mut rng) {
                    return (Some(t), failures);
                }
                failures += 1;
                if failures >= b {
                    return (None, failures);
                }
            }
        })
        .collect();
    let failures: usize = outcomes.iter().map(|o| o.1).sum();
    if failures >= b || outcomes.iter().any(|o| o.0.is_none()) {
        return Err(Error::ResampleFailure { failures, b });
    }
    Ok((outcomes.into_iter().map(|o| o.0.unwrap()).collect(), failures))
}

/// Index vector for a with-replacement resample of size `n`.
pub(crate) fn resample_indices(rng: &mut Stream, n: usize) -> Vec<usize> {
    (0..n).map(|_| rng.random_range(0..n)).collect()
}

/// Pointwise summary of replicate vectors: standard errors and limits.
pub(crate) struct Bands {
    pub se: Vec<f64>,
    pub low: Vec<f64>,
    pub high: Vec<f64>,
}

pub(crate) fn bands(
    estimate: &[f64],
    replicates: &[Vec<f64>],
    level: f64,
    method: CiMethod,
    clamp01: bool,
) -> Bands {
    let k = estimate.len();
    let alpha = 1.0 - level;
    let z = stats::norm_quantile(1.0 - alpha / 2.0);
    let mut out = Bands {
        se: Vec::with_capacity(k),
        low: Vec::with_capacity(k),
        high: Vec::with_capacity(k),
    };
    for p in 0..k {
        let column: Vec<f64> = replicates.iter().map(|r| r[p]).collect();
        let se = stats::sd(&column);
        let (mut lo, mut hi) = match method {
            CiMethod::Percentile => {
                let mut sorted = column;
                sorted.sort_by(f64::total_cmp);
                (
                    stats::quantile_sorted(&sorted, alpha / 2.0),
                    stats::quantile_sorted(&sorted, 1.0 - alpha / 2.0),
                )
            }
            CiMethod::Normal => (estimate[p] - z * se, estimate[p] + z * se),
        };
        if clamp01 {
            lo = lo.clamp(0.0, 1.0);
            hi = hi.clamp(0.0, 1.0);
        }
        out.se.push(se);
        out.low.push(lo);
        out.high.push(hi);
    }
    out
}

/// Fits the NPMLE on a resample; `None` when the resample is unusable.
fn refit_cdf(s: &TruncatedSample, opts: &NpmleOptions, points: &[f64]) -> Option<Vec<f64>> {
    if !existence_check(s).ok {
        return None;
    }
    let fit = npmle_joint(s, opts).ok()?;
    if !fit.converged {
        return None;
    }
    Some(points.iter().map(|&t| fit.f.cdf(t)).collect())
}

/// Resamples the observed triplets with replacement.
pub fn simple_bootstrap(s: &TruncatedSample, opts: &BootstrapOptions) -> Result<BootstrapResult> {
    opts.validate()?;
    let fit = npmle_joint(s, &opts.npmle)?;
    let points = opts
        .eval_points
        .clone()
        .unwrap_or_else(|| fit.f.support().to_vec());
    let estimate: Vec<f64> = points.iter().map(|&t| fit.f.cdf(t)).collect();
    let n = s.len();
    let (reps, failures) = replicate(opts.b, opts.seed, |rng| {
        let idx = resample_indices(rng, n);
        refit_cdf(&s.subset(&idx), &opts.npmle, &points)
    })?;
    Ok(finish(BootstrapKind::Simple, opts, points, estimate, &reps, failures, None))
}

/// Draws `x*` from the fitted `F` and `(u*, v*)` from the fitted `K`
/// independently, keeping triplets with `u* <= x* <= v*`.
pub fn obvious_bootstrap(s: &TruncatedSample, opts: &BootstrapOptions) -> Result<BootstrapResult> {
    opts.validate()?;
    let fit = npmle_joint(s, &opts.npmle)?;
    let k = shen_k(s, &fit)?;
    let acceptance: f64 = k
        .pairs
        .iter()
        .zip(&k.mass)
        .map(|(&(u, v), m)| m * fit.f.window(u, v))
        .sum();
    if acceptance < MIN_ACCEPTANCE {
        return Err(Error::LowAcceptance(acceptance));
    }
    let points = opts
        .eval_points
        .clone()
        .unwrap_or_else(|| fit.f.support().to_vec());
    let estimate: Vec<f64> = points.iter().map(|&t| fit.f.cdf(t)).collect();
    let support = fit.f.support();
    let f_cum = fit.f.cumulative();
    let mut k_cum = Vec::with_capacity(k.mass.len());
    let mut acc = 0.0;
    for m in &k.mass {
        acc += m;
        k_cum.push(acc);
    }
    let pick = |cum: &[f64], r: f64| cum.partition_point(|&c| c <= r * cum[cum.len() - 1]).min(cum.len() - 1);
    let n = s.len();

    let (reps, failures) = replicate(opts.b, opts.seed, |rng| {
        let (mut x, mut u, mut v) = (Vec::with_capacity(n), Vec::with_capacity(n), Vec::with_capacity(n));
        while x.len() < n {
            let xs = support[pick(f_cum, rng.random())];
            let (us, vs) = k.pairs[pick(&k_cum, rng.random())];
            if us <= xs && xs <= vs {
                x.push(xs);
                u.push(us);
                v.push(vs);
            }
        }
        let star = TruncatedSample::new(x, u, v).ok()?;
        refit_cdf(&star, &opts.npmle, &points)
    })?;
    Ok(finish(BootstrapKind::Obvious, opts, points, estimate, &reps, failures, Some(acceptance)))
}

fn finish(
    kind: BootstrapKind,
    opts: &BootstrapOptions,
    eval_points: Vec<f64>,
    estimate: Vec<f64>,
    reps: &[Vec<f64>],
    failures: usize,
    acceptance: Option<f64>,
) -> BootstrapResult {
    let Bands { se, low, high } = bands(&estimate, reps, opts.level, opts.method, true);
    BootstrapResult {
        kind,
        method: opts.method,
        eval_points,
        estimate,
        se,
        ci_low: low,
        ci_high: high,
        level: opts.level,
        b: opts.b,
        failures,
        seed: opts.seed,
        acceptance,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn replicate_counts_failures_deterministically() {
        let (vals, fails) = replicate(10, 3, |rng| {
            let x: f64 = rng.random();
            (x > 0.3).then_some(x)
        })
        .unwrap();
        let (vals2, fails2) = replicate(10, 3, |rng| {
            let x: f64 = rng.random();
            (x > 0.3).then_some(x)
        })
        .unwrap();
        assert_eq!(vals, vals2);
        assert_eq!(fails, fails2);
        assert_eq!(vals.len(), 10);
    }

    #[test]
    fn replicate_aborts_when_everything_fails() {
        let err = replicate::<f64, _>(5, 1, |_| None).unwrap_err();
        assert!(matches!(err, Error::ResampleFailure { .. }));
    }

    #[test]
    fn rejects_small_b_and_bad_level() {
        let s = TruncatedSample::new(vec![1.0, 2.0], vec![0.0, 0.0], vec![3.0, 3.0]).unwrap();
        let mut o = BootstrapOptions { b: 1, ..Default::default() };
        assert!(simple_bootstrap(&s, &o).is_err());
        o.b = 10;
        o.level = 1.0;
        assert!(simple_bootstrap(&s, &o).is_err());
    }
}

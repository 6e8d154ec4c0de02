//! Conditional Kendall's tau for quasi-independence of `X` and `U`.
//!
//! A pair `(i, j)` is comparable when both event values lie in
//! `[max(u_i, u_j), min(v_i, v_j)]`. The p-value is a normal approximation on
//! the bootstrap standard deviation of the statistic, not an asymptotic
//! variance formula.

use rayon::prelude::*;
use serde::Serialize;

use crate::bootstrap::{replicate, resample_indices};
use crate::error::{Error, Result};
use crate::sample::TruncatedSample;
use crate::stats;

pub const DEFAULT_B: usize = 200;

#[derive(Debug, Clone, Serialize)]
pub struct TauTest {
    pub tau: f64,
    pub n_comparable: u64,
    #[serde(rename = "p")]
    pub pvalue: f64,
    /// Bootstrap standard deviation of `tau`.
    pub se: f64,
    #[serde(rename = "B")]
    pub b: usize,
    pub failures: usize,
    pub seed: u64,
}

/// Sign sum, comparable count and count of comparable pairs with `x_i != x_j`.
fn scan(x: &[f64], u: &[f64], v: &[f64]) -> (i64, u64, u64) {
    let n = x.len();
    (0..n)
        .into_par_iter()
        .map(|i| {
            let mut acc = (0i64, 0u64, 0u64);
            for j in (i + 1)..n {
                let lo = u[i].max(u[j]);
                let hi = v[i].min(v[j]);
                if lo <= x[i] && x[i] <= hi && lo <= x[j] && x[j] <= hi {
                    acc.1 += 1;
                    if x[i] != x[j] {
                        acc.2 += 1;
                    }
                    let p = (x[i] - x[j]) * (u[i] - u[j]);
                    acc.0 += if p > 0.0 {
                        1
                    } else if p < 0.0 {
                        -1
                    } else {
                        0
                    };
                }
            }
            acc
        })
        .reduce(|| (0, 0, 0), |a, b| (a.0 + b.0, a.1 + b.1, a.2 + b.2))
}

/// Point statistic: `(tau, n_comparable)`.
pub fn conditional_tau(s: &TruncatedSample) -> Result<(f64, u64)> {
    let (sum, count, untied) = scan(s.x(), s.u(), s.v());
    if count == 0 {
        return Err(Error::Undefined("no comparable pairs".into()));
    }
    if untied == 0 {
        return Err(Error::ZeroVariance("event values tied within every comparable pair".into()));
    }
    Ok((sum as f64 / count as f64, count))
}

pub fn kendall_tau_test(s: &TruncatedSample, b: usize, seed: u64) -> Result<TauTest> {
    if b < 2 {
        return Err(Error::InvalidArgument(format!("B must be at least 2, got {b}")));
    }
    let (tau, n_comparable) = conditional_tau(s)?;
    let n = s.len();
    let (reps, failures) = replicate(b, seed, |rng| {
        let idx = resample_indices(rng, n);
        conditional_tau(&s.subset(&idx)).ok().map(|t| t.0)
    })?;
    let se = stats::sd(&reps);
    let pvalue = if se > 0.0 {
        stats::two_sided_p(tau / se)
    } else if tau == 0.0 {
        1.0
    } else {
        0.0
    };
    Ok(TauTest {
        tau,
        n_comparable,
        pvalue,
        se,
        b,
        failures,
        seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_concordant_records() {
        let s = TruncatedSample::new(vec![1.0, 2.0], vec![0.0, 0.5], vec![3.0, 3.0]).unwrap();
        assert_eq!(conditional_tau(&s).unwrap(), (1.0, 1));
    }

    #[test]
    fn d3_pairs() {
        let s = TruncatedSample::new(vec![1.0, 2.0, 3.0], vec![0.0, 0.5, 1.5], vec![2.5, 3.0, 4.0]).unwrap();
        assert_eq!(conditional_tau(&s).unwrap(), (1.0, 2));
    }

    #[test]
    fn errors() {
        let s = TruncatedSample::new(vec![1.0, 5.0], vec![0.0, 4.0], vec![2.0, 6.0]).unwrap();
        assert!(matches!(conditional_tau(&s), Err(Error::Undefined(_))));
        let s = TruncatedSample::new(vec![1.0, 1.0], vec![0.0, 0.5], vec![2.0, 2.0]).unwrap();
        assert!(matches!(conditional_tau(&s), Err(Error::ZeroVariance(_))));
    }
}

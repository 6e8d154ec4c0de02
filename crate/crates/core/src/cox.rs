//! Cox regression for doubly truncated responses by inverse weighting with
//! the estimated sampling probabilities `G(x_i)`.
//!
//! The weighted score is
//!
//! ```text
//! U(b) = sum_i c_i [ z_i - sum_j r_j e^{b z_j} z_j / sum_j r_j e^{b z_j} ],  j over {x_j >= x_i}
//! ```
//!
//! with `r_j = 1 / G(x_j)` inside the risk sets and `c_i` equal to one
//! ([`Scheme::Mandel`]) or `1 / G(x_i)` ([`Scheme::Rennert`]). The naive
//! scheme sets `G = 1`. Tied event values share one risk set that includes
//! all of them (Breslow).

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::bootstrap::{replicate, resample_indices};
use crate::error::{Error, Result};
use crate::npmle::{npmle_joint, shen_k, JointTruncationFit, NpmleOptions, SamplingProbability};
use crate::sample::{existence_check, indices_by_label, TruncatedSample};
use crate::stats;

pub const DEFAULT_B: usize = 199;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    Mandel,
    Rennert,
    Naive,
}

#[derive(Debug, Clone, Copy)]
pub struct NewtonOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub max_halvings: usize,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_iter: 50,
            max_halvings: 20,
        }
    }
}

/// Point estimate without standard errors.
#[derive(Debug, Clone, Serialize)]
pub struct CoxEstimate {
    pub beta: Vec<f64>,
    pub iterations: usize,
    pub score_norm: f64,
}

struct Terms {
    loglik: f64,
    score: DVector<f64>,
    info: DMatrix<f64>,
}

/// Records sorted by decreasing event value with their weights.
struct Prepared {
    x: Vec<f64>,
    z: Vec<DVector<f64>>,
    risk_w: Vec<f64>,
    term_w: Vec<f64>,
}

impl Prepared {
    fn new(s: &TruncatedSample, g: Option<&SamplingProbability>, scheme: Scheme) -> Result<Self> {
        let cov = s
            .covariates()
            .ok_or_else(|| Error::InvalidArgument("Cox regression needs covariates".into()))?;
        let n = s.len();
        let inv_g: Vec<f64> = match (scheme, g) {
            (Scheme::Naive, _) => vec![1.0; n],
            (_, None) => return Err(Error::InvalidArgument("sampling probabilities required".into())),
            (_, Some(g)) => (0..n)
                .map(|i| {
                    let gi = g.get(s.x()[i]).ok_or_else(|| {
                        Error::InvalidArgument(format!("no sampling probability at x = {}", s.x()[i]))
                    })?;
                    if !(gi > 0.0) {
                        return Err(Error::Weight { record: i });
                    }
                    Ok(1.0 / gi)
                })
                .collect::<Result<_>>()?,
        };
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| s.x()[b].total_cmp(&s.x()[a]));
        Ok(Self {
            x: order.iter().map(|&i| s.x()[i]).collect(),
            z: order
                .iter()
                .map(|&i| DVector::from_column_slice(&cov.rows()[i]))
                .collect(),
            risk_w: order.iter().map(|&i| inv_g[i]).collect(),
            term_w: order
                .iter()
                .map(|&i| if scheme == Scheme::Rennert { inv_g[i] } else { 1.0 })
                .collect(),
        })
    }

    fn p(&self) -> usize {
        self.z[0].len()
    }

    fn terms(&self, beta: &DVector<f64>) -> Terms {
        let p = self.p();
        let n = self.x.len();
        let eta: Vec<f64> = self.z.iter().map(|z| z.dot(beta)).collect();
        let shift = eta.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut s0 = 0.0;
        let mut s1 = DVector::zeros(p);
        let mut s2 = DMatrix::zeros(p, p);
        let mut out = Terms {
            loglik: 0.0,
            score: DVector::zeros(p),
            info: DMatrix::zeros(p, p),
        };
        let mut start = 0;
        while start < n {
            let mut end = start;
            while end < n && self.x[end] == self.x[start] {
                let r = self.risk_w[end] * (eta[end] - shift).exp();
                s0 += r;
                s1.axpy(r, &self.z[end], 1.0);
                s2.ger(r, &self.z[end], &self.z[end], 1.0);
                end += 1;
            }
            let zbar = &s1 / s0;
            let cov = &s2 / s0 - &zbar * zbar.transpose();
            let log_s0 = s0.ln() + shift;
            for i in start..end {
                let c = self.term_w[i];
                out.loglik += c * (eta[i] - log_s0);
                out.score.axpy(c, &(&self.z[i] - &zbar), 1.0);
                out.info += c * &cov;
            }
            start = end;
        }
        out
    }
}

/// Weighted score `U(beta)`.
pub fn cox_score(
    beta: &[f64],
    s: &TruncatedSample,
    g: &SamplingProbability,
    scheme: Scheme,
) -> Result<Vec<f64>> {
    let prep = Prepared::new(s, Some(g), scheme)?;
    if beta.len() != prep.p() {
        return Err(Error::InvalidArgument(format!(
            "beta has {} entries for {} covariates",
            beta.len(),
            prep.p()
        )));
    }
    Ok(prep.terms(&DVector::from_column_slice(beta)).score.iter().copied().collect())
}

/// Weighted log partial likelihood (up to terms constant in `beta`).
pub fn cox_loglik(
    beta: &[f64],
    s: &TruncatedSample,
    g: &SamplingProbability,
    scheme: Scheme,
) -> Result<f64> {
    let prep = Prepared::new(s, Some(g), scheme)?;
    Ok(prep.terms(&DVector::from_column_slice(beta)).loglik)
}

/// Solves `U(beta) = 0` by Newton's method with step halving, from `beta = 0`.
pub fn cox_estimate(
    s: &TruncatedSample,
    g: Option<&SamplingProbability>,
    scheme: Scheme,
    opts: &NewtonOptions,
) -> Result<CoxEstimate> {
    let prep = Prepared::new(s, g, scheme)?;
    let p = prep.p();
    if s.len() <= p {
        return Err(Error::InvalidArgument(format!(
            "need more records ({}) than covariates ({p})",
            s.len()
        )));
    }
    let cov = s.covariates().expect("checked in Prepared");
    for k in 0..p {
        let col = cov.column(k);
        if col.iter().all(|&z| z == col[0]) {
            return Err(Error::NonIdentifiable(format!(
                "covariate `{}` is constant; the score is flat",
                cov.names()[k]
            )));
        }
    }

    let mut beta = DVector::zeros(p);
    let mut cur = prep.terms(&beta);
    for iter in 0..=opts.max_iter {
        let norm = cur.score.amax();
        let step = match cur.info.clone().cholesky() {
            Some(chol) => chol.solve(&cur.score),
            None if iter == 0 => {
                return Err(Error::NonIdentifiable(
                    "information matrix is singular; the score is flat".into(),
                ))
            }
            None => break,
        };
        // Under monotone likelihood the score vanishes while the Newton step
        // stays of order one: the estimate is running off to infinity.
        if norm <= opts.tol && step.amax() <= 1e-4 * (1.0 + beta.amax()) {
            return Ok(CoxEstimate {
                beta: beta.iter().copied().collect(),
                iterations: iter,
                score_norm: norm,
            });
        }
        if iter == opts.max_iter {
            break;
        }
        let mut scale = 1.0;
        let mut accepted = None;
        for _ in 0..=opts.max_halvings {
            let trial = &beta + scale * &step;
            let t = prep.terms(&trial);
            if t.loglik.is_finite() && t.loglik >= cur.loglik - 1e-12 * cur.loglik.abs().max(1.0) {
                accepted = Some((trial, t));
                break;
            }
            scale *= 0.5;
        }
        match accepted {
            Some((b, t)) => {
                beta = b;
                cur = t;
            }
            None => break,
        }
    }
    Err(Error::Divergence {
        iterations: opts.max_iter,
        score_norm: cur.score.amax(),
        beta: beta.iter().copied().collect(),
    })
}

#[derive(Debug, Clone)]
pub struct CoxFitOptions {
    pub b: usize,
    pub seed: u64,
    pub npmle: NpmleOptions,
    pub newton: NewtonOptions,
}

impl Default for CoxFitOptions {
    fn default() -> Self {
        Self {
            b: DEFAULT_B,
            seed: 0,
            npmle: NpmleOptions::default(),
            newton: NewtonOptions::default(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CoxFit {
    pub names: Vec<String>,
    pub beta: Vec<f64>,
    pub se: Vec<f64>,
    pub pvalue: Vec<f64>,
    pub scheme: Scheme,
    pub iterations: usize,
    pub converged: bool,
    pub b: usize,
    pub failures: usize,
    pub seed: u64,
    #[serde(skip)]
    pub replicates: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Serialize)]
pub struct CoxTerm {
    pub name: String,
    pub estimate: f64,
    pub se: f64,
    pub p: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct CoxReport {
    pub scheme: Scheme,
    pub covariates: Vec<CoxTerm>,
    pub iterations: usize,
    pub converged: bool,
    pub b: usize,
    pub failures: usize,
    pub seed: u64,
}

impl CoxFit {
    pub fn report(&self) -> CoxReport {
        CoxReport {
            scheme: self.scheme,
            covariates: (0..self.beta.len())
                .map(|k| CoxTerm {
                    name: self.names[k].clone(),
                    estimate: self.beta[k],
                    se: self.se[k],
                    p: self.pvalue[k],
                })
                .collect(),
            iterations: self.iterations,
            converged: self.converged,
            b: self.b,
            failures: self.failures,
            seed: self.seed,
        }
    }

    /// One row per bootstrap replicate, one column per covariate.
    pub fn replicates_csv(&self) -> String {
        let mut out = self.names.join(",");
        out.push('\n');
        for r in &self.replicates {
            let row: Vec<String> = r.iter().map(|b| b.to_string()).collect();
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }
}

/// Sampling probabilities for the scheme: the NPMLE's `G`, or ones.
fn weights_for(s: &TruncatedSample, scheme: Scheme, opts: &NpmleOptions) -> Result<SamplingProbability> {
    if scheme == Scheme::Naive {
        let mut at = s.x().to_vec();
        at.sort_by(f64::total_cmp);
        at.dedup();
        return Ok(SamplingProbability::ones(at));
    }
    let fit = npmle_joint(s, opts)?;
    if !fit.converged {
        return Err(Error::NotConverged("sampling probabilities"));
    }
    Ok(fit.g)
}

/// Point estimate plus bootstrap standard errors and Wald p-values.
///
/// Each replicate resamples records, re-estimates `G` on the resample and
/// refits the model.
pub fn cox_fit(s: &TruncatedSample, scheme: Scheme, opts: &CoxFitOptions) -> Result<CoxFit> {
    if opts.b < 2 {
        return Err(Error::InvalidArgument(format!("B must be at least 2, got {}", opts.b)));
    }
    let g = weights_for(s, scheme, &opts.npmle)?;
    let est = cox_estimate(s, Some(&g), scheme, &opts.newton)?;
    let n = s.len();
    let (replicates, failures) = replicate(opts.b, opts.seed, |rng| {
        let star = s.subset(&resample_indices(rng, n));
        if scheme != Scheme::Naive && !existence_check(&star).ok {
            return None;
        }
        let g = weights_for(&star, scheme, &opts.npmle).ok()?;
        cox_estimate(&star, Some(&g), scheme, &opts.newton).ok().map(|e| e.beta)
    })?;
    let p = est.beta.len();
    let se: Vec<f64> = (0..p)
        .map(|k| stats::sd(&replicates.iter().map(|r| r[k]).collect::<Vec<_>>()))
        .collect();
    let pvalue = est
        .beta
        .iter()
        .zip(&se)
        .map(|(b, s)| if *s > 0.0 { stats::two_sided_p(b / s) } else { f64::NAN })
        .collect();
    Ok(CoxFit {
        names: s.covariates().expect("checked").names().to_vec(),
        beta: est.beta,
        se,
        pvalue,
        scheme,
        iterations: est.iterations,
        converged: true,
        b: opts.b,
        failures,
        seed: opts.seed,
        replicates,
    })
}

/// Within-group sampling probability, for checking that `G` does not
/// depend on the covariates.
#[derive(Debug, Clone, Serialize)]
pub struct GroupCurve {
    pub label: i64,
    pub n: usize,
    pub g: SamplingProbability,
    #[serde(skip)]
    pub k: JointTruncationFit,
}

#[derive(Debug, Clone, Serialize)]
pub struct GroupDiagnostic {
    pub curves: Vec<GroupCurve>,
    /// Groups left out, with the reason.
    pub skipped: Vec<(i64, String)>,
}

impl GroupDiagnostic {
    /// Largest vertical distance between any two group curves over `grid`.
    pub fn max_gap(&self, grid: &[f64]) -> f64 {
        let mut gap = 0.0f64;
        for a in 0..self.curves.len() {
            for b in a + 1..self.curves.len() {
                for &x in grid {
                    let d = self.curves[a].k.sampling_probability(x) - self.curves[b].k.sampling_probability(x);
                    gap = gap.max(d.abs());
                }
            }
        }
        gap
    }

    /// Tidy `group,time,g` table.
    pub fn to_csv_string(&self) -> String {
        let mut out = String::from("group,time,g\n");
        for c in &self.curves {
            for (t, g) in c.g.at().iter().zip(c.g.values()) {
                out.push_str(&format!("{},{},{}\n", c.label, t, g));
            }
        }
        out
    }
}

pub fn g_by_group(s: &TruncatedSample, grouping: &[i64], opts: &NpmleOptions) -> Result<GroupDiagnostic> {
    if grouping.len() != s.len() {
        return Err(Error::InvalidArgument(format!(
            "{} group labels for {} records",
            grouping.len(),
            s.len()
        )));
    }
    let mut curves = Vec::new();
    let mut skipped = Vec::new();
    for (label, idx) in indices_by_label(grouping) {
        if idx.len() < 2 {
            skipped.push((label, "fewer than two records".to_string()));
            continue;
        }
        let sub = s.subset(&idx);
        if !existence_check(&sub).ok {
            skipped.push((label, "existence condition violated".to_string()));
            continue;
        }
        let fit = npmle_joint(&sub, opts)?;
        if !fit.converged {
            skipped.push((label, "NPMLE did not converge".to_string()));
            continue;
        }
        let k = shen_k(&sub, &fit)?;
        curves.push(GroupCurve {
            label,
            n: idx.len(),
            g: fit.g,
            k,
        });
    }
    Ok(GroupDiagnostic { curves, skipped })
}

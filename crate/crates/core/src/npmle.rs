//! Nonparametric maximum-likelihood estimation under double truncation.
//!
//! The estimator of the event-time distribution `F` places mass `f_j` on each
//! distinct observed event value `t_j`. With `J_ij = I(u_i <= t_j <= v_i)`,
//! `F_i = sum_j J_ij f_j` (the probability of record i's window) and `d_j`
//! the number of records tied at `t_j`, the NPMLE is the fixed point of
//!
//! ```text
//! f_j ∝ d_j / sum_i (J_ij / F_i)
//! ```
//!
//! Two routes reach it:
//!
//! * [`npmle_selfconsistency`] iterates the display above directly, summing
//!   over each record's window.
//! * [`npmle_joint`] alternates between the sampling probabilities
//!   `G(x) = sum_i w_i I(u_i <= x <= v_i) / sum_i w_i` with `w_i = 1 / F_i`,
//!   and `F` from the inverse-`G` weights, using prefix sums so that each
//!   sweep is linear in `n`.
//!
//! Both start from uniform masses over the distinct event values and stop
//! when the sup-norm change of the cdf over the support falls to `tol`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::sample::{existence_check, TruncatedSample};
use crate::step::StepDistribution;

const TINY: f64 = 1e-300;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    SelfConsistency,
    Joint,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct NpmleOptions {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for NpmleOptions {
    fn default() -> Self {
        Self {
            tol: 1e-6,
            max_iter: 10_000,
        }
    }
}

impl NpmleOptions {
    fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) {
            return Err(Error::InvalidArgument(format!("tol must be positive, got {}", self.tol)));
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidArgument("max_iter must be at least 1".into()));
        }
        Ok(())
    }
}

/// `G(x) = P(u <= x <= v)` stored at the distinct observed event values.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SamplingProbability {
    at: Vec<f64>,
    value: Vec<f64>,
}

impl SamplingProbability {
    pub fn new(at: Vec<f64>, value: Vec<f64>) -> Result<Self> {
        if at.len() != value.len() {
            return Err(Error::InvalidArgument("at/value length mismatch".into()));
        }
        Ok(Self { at, value })
    }

    pub fn at(&self) -> &[f64] {
        &self.at
    }

    pub fn values(&self) -> &[f64] {
        &self.value
    }

    /// Value at an observed event value, `None` when `x` is not one.
    pub fn get(&self, x: f64) -> Option<f64> {
        self.at
            .binary_search_by(|a| a.total_cmp(&x))
            .ok()
            .map(|k| self.value[k])
    }

    /// The constant function one on the given points (no truncation).
    pub fn ones(at: Vec<f64>) -> Self {
        let value = vec![1.0; at.len()];
        Self { at, value }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct NpmleFit {
    pub f: StepDistribution,
    pub g: SamplingProbability,
    pub iterations: usize,
    pub final_change: f64,
    pub converged: bool,
    pub tol: f64,
    pub algorithm: Algorithm,
    /// Set when the sample fails the existence/uniqueness pre-check.
    pub existence_warning: bool,
    #[serde(skip)]
    window_mass: Vec<f64>,
    #[serde(skip)]
    record_support: Vec<usize>,
}

impl NpmleFit {
    /// `F(v_i) - F(u_i-)` for each record, from the distribution that
    /// produced `g`.
    pub fn window_mass(&self) -> &[f64] {
        &self.window_mass
    }

    /// `G(x_i)` for each record in sample order.
    pub fn g_at_records(&self) -> Vec<f64> {
        self.record_support.iter().map(|&j| self.g.value[j]).collect()
    }

    /// Index into the support for each record's event value.
    pub fn record_support(&self) -> &[usize] {
        &self.record_support
    }

    /// Tidy table: `time,jump,cdf,g`, ordered by time.
    pub fn to_csv_string(&self) -> String {
        let mut out = String::from("time,jump,cdf,g\n");
        for (k, &t) in self.f.support().iter().enumerate() {
            out.push_str(&format!(
                "{},{},{},{}\n",
                t,
                self.f.mass()[k],
                self.f.cumulative()[k],
                self.g.value[k]
            ));
        }
        out
    }
}

/// Support points, tie counts and each record's window as an index range.
#[derive(Debug, Clone)]
pub(crate) struct Layout {
    pub support: Vec<f64>,
    pub ties: Vec<f64>,
    pub pos: Vec<usize>,
    pub lo: Vec<usize>,
    pub hi: Vec<usize>,
}

impl Layout {
    pub fn new(s: &TruncatedSample) -> Self {
        let mut support = s.x().to_vec();
        support.sort_by(f64::total_cmp);
        support.dedup();
        let m = support.len();
        let mut ties = vec![0.0; m];
        let pos: Vec<usize> = s
            .x()
            .iter()
            .map(|x| support.binary_search_by(|a| a.total_cmp(x)).expect("x in support"))
            .collect();
        for &j in &pos {
            ties[j] += 1.0;
        }
        // Each window contains its own event value, so lo <= pos <= hi.
        let lo = s.u().iter().map(|&u| support.partition_point(|&t| t < u)).collect();
        let hi = s
            .v()
            .iter()
            .map(|&v| support.partition_point(|&t| t <= v) - 1)
            .collect();
        Self {
            support,
            ties,
            pos,
            lo,
            hi,
        }
    }

    pub fn m(&self) -> usize {
        self.support.len()
    }

    pub fn n(&self) -> usize {
        self.pos.len()
    }

    /// `sum_i w_i I(u_i <= t_j <= v_i) / sum_i w_i` at every support point.
    fn sampling_probability(&self, w: &[f64]) -> Vec<f64> {
        let m = self.m();
        let mut diff = vec![0.0; m + 1];
        let mut total = 0.0;
        for i in 0..self.n() {
            diff[self.lo[i]] += w[i];
            diff[self.hi[i] + 1] -= w[i];
            total += w[i];
        }
        let mut acc = 0.0;
        diff[..m]
            .iter()
            .map(|d| {
                acc += d;
                (acc / total).min(1.0)
            })
            .collect()
    }
}

fn sup_change(old: &[f64], new: &[f64]) -> f64 {
    let (mut a, mut b, mut sup) = (0.0, 0.0, 0.0f64);
    for (o, n) in old.iter().zip(new) {
        a += o;
        b += n;
        sup = sup.max((a - b).abs());
    }
    sup
}

fn normalize(v: &mut [f64]) {
    let total: f64 = v.iter().sum();
    for x in v.iter_mut() {
        *x /= total;
    }
}

/// Self-consistency iteration on `f_j ∝ d_j / sum_i J_ij / F_i`.
///
/// `g` is computed afterwards from the final `f`. Returns a fit with
/// `converged = false` when `max_iter` is exhausted.
pub fn npmle_selfconsistency(s: &TruncatedSample, opts: &NpmleOptions) -> Result<NpmleFit> {
    opts.validate()?;
    let lay = Layout::new(s);
    let (m, n) = (lay.m(), lay.n());
    let mut f = vec![1.0 / m as f64; m];
    let mut risk = vec![0.0; n];
    let mut score = vec![0.0; m];
    let mut iterations = 0;
    let mut change = f64::INFINITY;

    while iterations < opts.max_iter {
        iterations += 1;
        for i in 0..n {
            risk[i] = f[lay.lo[i]..=lay.hi[i]].iter().sum();
            if risk[i] < TINY {
                return Err(Error::DegenerateRisk { record: i });
            }
        }
        score.iter_mut().for_each(|x| *x = 0.0);
        for i in 0..n {
            let inv = 1.0 / risk[i];
            for sj in &mut score[lay.lo[i]..=lay.hi[i]] {
                *sj += inv;
            }
        }
        let mut next: Vec<f64> = lay.ties.iter().zip(&score).map(|(d, sj)| d / sj).collect();
        normalize(&mut next);
        change = sup_change(&f, &next);
        f = next;
        if change <= opts.tol {
            break;
        }
    }

    let window_mass: Vec<f64> = (0..n).map(|i| f[lay.lo[i]..=lay.hi[i]].iter().sum()).collect();
    if let Some(i) = window_mass.iter().position(|&w| w < TINY) {
        return Err(Error::DegenerateWindow { record: i });
    }
    let w: Vec<f64> = window_mass.iter().map(|x| 1.0 / x).collect();
    let g = lay.sampling_probability(&w);
    Ok(assemble(s, lay, f, g, window_mass, iterations, change, opts, Algorithm::SelfConsistency))
}

/// Alternates `G` from the current `F` and `F` from the inverse-`G` weights.
///
/// The returned `f` is computed from the returned `g`, so
/// `f_j ∝ d_j / g_j` holds to rounding.
pub fn npmle_joint(s: &TruncatedSample, opts: &NpmleOptions) -> Result<NpmleFit> {
    opts.validate()?;
    let lay = Layout::new(s);
    let (m, n) = (lay.m(), lay.n());
    let mut f = vec![1.0 / m as f64; m];
    let mut cum = vec![0.0; m + 1];
    let mut window_mass = vec![0.0; n];
    let mut w = vec![0.0; n];
    let mut g = vec![0.0; m];
    let mut iterations = 0;
    let mut change = f64::INFINITY;

    while iterations < opts.max_iter {
        iterations += 1;
        for j in 0..m {
            cum[j + 1] = cum[j] + f[j];
        }
        for i in 0..n {
            let fi = cum[lay.hi[i] + 1] - cum[lay.lo[i]];
            if fi < TINY {
                return Err(Error::DegenerateWindow { record: i });
            }
            window_mass[i] = fi;
            w[i] = 1.0 / fi;
        }
        g = lay.sampling_probability(&w);
        if let Some(j) = g.iter().position(|&x| x < TINY) {
            return Err(Error::DegenerateSampling { at: lay.support[j] });
        }
        let mut next: Vec<f64> = lay.ties.iter().zip(&g).map(|(d, gj)| d / gj).collect();
        normalize(&mut next);
        change = sup_change(&f, &next);
        f = next;
        if change <= opts.tol {
            break;
        }
    }
    Ok(assemble(s, lay, f, g, window_mass, iterations, change, opts, Algorithm::Joint))
}

pub fn fit_npmle(s: &TruncatedSample, algo: Algorithm, opts: &NpmleOptions) -> Result<NpmleFit> {
    match algo {
        Algorithm::SelfConsistency => npmle_selfconsistency(s, opts),
        Algorithm::Joint => npmle_joint(s, opts),
    }
}

#[allow(clippy::too_many_arguments)]
fn assemble(
    s: &TruncatedSample,
    lay: Layout,
    f: Vec<f64>,
    g: Vec<f64>,
    window_mass: Vec<f64>,
    iterations: usize,
    change: f64,
    opts: &NpmleOptions,
    algorithm: Algorithm,
) -> NpmleFit {
    let Layout { support, pos, .. } = lay;
    NpmleFit {
        f: StepDistribution::from_parts(support.clone(), f),
        g: SamplingProbability { at: support, value: g },
        iterations,
        final_change: change,
        converged: change <= opts.tol,
        tol: opts.tol,
        algorithm,
        existence_warning: !existence_check(s).ok,
        window_mass,
        record_support: pos,
    }
}

/// Conditional log-likelihood `sum_i log f(x_i) - sum_i log F_i` of a
/// distribution supported on the sample's event values.
pub fn conditional_loglik(s: &TruncatedSample, f: &StepDistribution) -> f64 {
    let mut ll = 0.0;
    for i in 0..s.len() {
        ll += f.window(s.x()[i], s.x()[i]).ln() - f.window(s.u()[i], s.v()[i]).ln();
    }
    ll
}

/// Estimated joint distribution `K` of the truncation limits: mass
/// proportional to `1 / (F(v_i) - F(u_i-))` on each observed pair.
#[derive(Debug, Clone, Serialize)]
pub struct JointTruncationFit {
    pub pairs: Vec<(f64, f64)>,
    pub mass: Vec<f64>,
}

pub fn shen_k(s: &TruncatedSample, fit: &NpmleFit) -> Result<JointTruncationFit> {
    if !fit.converged {
        return Err(Error::NotConverged("the truncation distribution"));
    }
    if fit.window_mass.len() != s.len() {
        return Err(Error::InvalidArgument("fit does not belong to this sample".into()));
    }
    let mut mass: Vec<f64> = fit.window_mass.iter().map(|w| 1.0 / w).collect();
    normalize(&mut mass);
    let pairs = s.u().iter().copied().zip(s.v().iter().copied()).collect();
    Ok(JointTruncationFit { pairs, mass })
}

impl JointTruncationFit {
    /// `K(u, v) = P(U <= u, V <= v)`.
    pub fn cdf(&self, u: f64, v: f64) -> f64 {
        self.pairs
            .iter()
            .zip(&self.mass)
            .filter(|((pu, pv), _)| *pu <= u && *pv <= v)
            .map(|(_, m)| m)
            .sum()
    }

    /// `K(u, v-) = P(U <= u, V < v)`.
    pub fn cdf_left_v(&self, u: f64, v: f64) -> f64 {
        self.pairs
            .iter()
            .zip(&self.mass)
            .filter(|((pu, pv), _)| *pu <= u && *pv < v)
            .map(|(_, m)| m)
            .sum()
    }

    /// `G(x) = K(x, ∞) - K(x, x-)`.
    pub fn sampling_probability(&self, x: f64) -> f64 {
        self.cdf(x, f64::INFINITY) - self.cdf_left_v(x, x)
    }

    pub fn marginal_u(&self) -> StepDistribution {
        marginal(self.pairs.iter().map(|p| p.0), &self.mass)
    }

    pub fn marginal_v(&self) -> StepDistribution {
        marginal(self.pairs.iter().map(|p| p.1), &self.mass)
    }
}

fn marginal(points: impl Iterator<Item = f64>, mass: &[f64]) -> StepDistribution {
    let mut pm: Vec<(f64, f64)> = points.zip(mass.iter().copied()).collect();
    pm.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut support: Vec<f64> = Vec::new();
    let mut out: Vec<f64> = Vec::new();
    for (p, m) in pm {
        if support.last() == Some(&p) {
            *out.last_mut().unwrap() += m;
        } else {
            support.push(p);
            out.push(m);
        }
    }
    StepDistribution::from_parts(support, out)
}

//! Cumulative incidence functions for competing risks under double truncation.
//!
//! `Indep` weights every record by `1 / G(x_i)` from the pooled NPMLE, which
//! is valid when the truncation limits do not depend on the event type:
//!
//! ```text
//! CIF_j(x) = sum_i G(x_i)^-1 I(x_i <= x, type_i = j) / sum_i G(x_i)^-1
//! ```
//!
//! `Dep` fits each event type separately, `CIF_j = p_j F^(j)` with
//! `p_j ∝ sum_{i in j} G_j(x_i)^-1`. The per-type normalisation is a
//! reconstruction: it makes the curves add up to one at infinity.

use serde::Serialize;

use crate::bootstrap::{bands, replicate, resample_indices, CiMethod};
use crate::error::{Error, Result};
use crate::npmle::{npmle_joint, Layout, NpmleOptions};
use crate::sample::{existence_check, indices_by_label, TruncatedSample};

pub const DEFAULT_B: usize = 300;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CifMethod {
    Indep,
    Dep,
}

#[derive(Debug, Clone)]
pub struct CifOptions {
    pub method: CifMethod,
    /// Bootstrap resamples for the bands; below 2 means no bands.
    pub b: usize,
    pub seed: u64,
    pub level: f64,
    pub npmle: NpmleOptions,
}

impl Default for CifOptions {
    fn default() -> Self {
        Self {
            method: CifMethod::Indep,
            b: DEFAULT_B,
            seed: 0,
            level: 0.95,
            npmle: NpmleOptions::default(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CifCurve {
    pub label: i64,
    pub n: usize,
    pub cif: Vec<f64>,
    pub se: Option<Vec<f64>>,
    pub ci_low: Option<Vec<f64>>,
    pub ci_high: Option<Vec<f64>>,
}

impl CifCurve {
    /// Value at `t` (right-continuous step function over `times`).
    pub fn at(&self, times: &[f64], t: f64) -> f64 {
        let k = times.partition_point(|&s| s <= t);
        if k == 0 {
            0.0
        } else {
            self.cif[k - 1]
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CifFit {
    pub method: CifMethod,
    /// Pooled distinct event values; every curve is evaluated here.
    pub times: Vec<f64>,
    pub curves: Vec<CifCurve>,
    pub b: usize,
    pub failures: usize,
    pub seed: u64,
}

impl CifFit {
    pub fn curve(&self, label: i64) -> Option<&CifCurve> {
        self.curves.iter().find(|c| c.label == label)
    }

    /// `time,cif,se,ci_low,ci_high` for one event type.
    pub fn curve_csv(&self, label: i64) -> Option<String> {
        let c = self.curve(label)?;
        let mut out = String::from("time,cif,se,ci_low,ci_high\n");
        for (k, t) in self.times.iter().enumerate() {
            out.push_str(&format!("{},{},{}\n", t, c.cif[k], band_cells(c, k)));
        }
        Some(out)
    }

    /// Long format with a `type` column.
    pub fn to_long_csv(&self) -> String {
        let mut out = String::from("type,time,cif,se,ci_low,ci_high\n");
        for c in &self.curves {
            for (k, t) in self.times.iter().enumerate() {
                out.push_str(&format!("{},{},{},{}\n", c.label, t, c.cif[k], band_cells(c, k)));
            }
        }
        out
    }
}

fn band_cells(c: &CifCurve, k: usize) -> String {
    match (&c.se, &c.ci_low, &c.ci_high) {
        (Some(se), Some(lo), Some(hi)) => format!("{},{},{}", se[k], lo[k], hi[k]),
        _ => ",,".to_string(),
    }
}

/// Point estimates: one cumulative curve per label over the pooled times.
fn estimate(
    s: &TruncatedSample,
    labels: &[i64],
    method: CifMethod,
    opts: &NpmleOptions,
) -> Result<(Vec<f64>, Vec<(i64, usize, Vec<f64>)>)> {
    let groups = indices_by_label(labels);
    let lay = Layout::new(s);
    let times = lay.support.clone();
    let mut out = Vec::with_capacity(groups.len());
    match method {
        CifMethod::Indep => {
            let fit = npmle_joint(s, opts)?;
            if !fit.converged {
                return Err(Error::NotConverged("pooled sampling probabilities"));
            }
            let g = fit.g.values();
            // Same arithmetic as the NPMLE update so that a single event
            // type reproduces F exactly.
            let total: f64 = lay.ties.iter().zip(g).map(|(d, gj)| d / gj).sum();
            for (label, idx) in groups {
                let mut counts = vec![0.0; times.len()];
                for &i in &idx {
                    counts[lay.pos[i]] += 1.0;
                }
                let mut acc = 0.0;
                let cif = counts
                    .iter()
                    .zip(g)
                    .map(|(c, gj)| {
                        acc += c / gj / total;
                        acc
                    })
                    .collect();
                out.push((label, idx.len(), cif));
            }
        }
        CifMethod::Dep => {
            let mut fits = Vec::with_capacity(groups.len());
            for (label, idx) in &groups {
                let sub = s.subset(idx);
                let report = existence_check(&sub);
                if !report.ok {
                    return Err(Error::Group {
                        label: *label,
                        reason: format!(
                            "existence condition fails (min S1 = {}, min S2 = {})",
                            report.s1.iter().min().unwrap(),
                            report.s2.iter().min().unwrap()
                        ),
                    });
                }
                let fit = npmle_joint(&sub, opts).map_err(|e| Error::Group {
                    label: *label,
                    reason: e.to_string(),
                })?;
                if !fit.converged {
                    return Err(Error::Group {
                        label: *label,
                        reason: "NPMLE did not converge".into(),
                    });
                }
                let weight: f64 = fit.g_at_records().iter().map(|g| 1.0 / g).sum();
                fits.push((*label, idx.len(), fit, weight));
            }
            let total: f64 = fits.iter().map(|f| f.3).sum();
            for (label, n, fit, weight) in fits {
                let p = weight / total;
                let cif = times.iter().map(|&t| p * fit.f.cdf(t)).collect();
                out.push((label, n, cif));
            }
        }
    }
    Ok((times, out))
}

pub fn cif(s: &TruncatedSample, opts: &CifOptions) -> Result<CifFit> {
    let labels = s
        .events()
        .ok_or_else(|| Error::InvalidArgument("cumulative incidences need event labels".into()))?;
    let (times, point) = estimate(s, labels, opts.method, &opts.npmle)?;
    let mut curves: Vec<CifCurve> = point
        .into_iter()
        .map(|(label, n, cif)| CifCurve {
            label,
            n,
            cif,
            se: None,
            ci_low: None,
            ci_high: None,
        })
        .collect();

    let mut failures = 0;
    if opts.b >= 2 {
        if !(opts.level > 0.0 && opts.level < 1.0) {
            return Err(Error::InvalidArgument(format!("level must lie in (0,1), got {}", opts.level)));
        }
        let n = s.len();
        let label_set: Vec<i64> = curves.iter().map(|c| c.label).collect();
        let (reps, fails) = replicate(opts.b, opts.seed, |rng| {
            let star = s.subset(&resample_indices(rng, n));
            if !existence_check(&star).ok {
                return None;
            }
            let star_labels = star.events().expect("labels carried by subset");
            let (star_times, star_curves) = estimate(&star, star_labels, opts.method, &opts.npmle).ok()?;
            let mut row = Vec::with_capacity(label_set.len() * times.len());
            for label in &label_set {
                match star_curves.iter().find(|c| c.0 == *label) {
                    Some((_, _, cif)) => {
                        let curve = CifCurve {
                            label: *label,
                            n: 0,
                            cif: cif.clone(),
                            se: None,
                            ci_low: None,
                            ci_high: None,
                        };
                        row.extend(times.iter().map(|&t| curve.at(&star_times, t)));
                    }
                    None if opts.method == CifMethod::Indep => row.extend(std::iter::repeat_n(0.0, times.len())),
                    None => return None,
                }
            }
            Some(row)
        })?;
        failures = fails;
        let m = times.len();
        for (k, c) in curves.iter_mut().enumerate() {
            let slice: Vec<Vec<f64>> = reps.iter().map(|r| r[k * m..(k + 1) * m].to_vec()).collect();
            let bd = bands(&c.cif, &slice, opts.level, CiMethod::Percentile, true);
            c.se = Some(bd.se);
            c.ci_low = Some(bd.low);
            c.ci_high = Some(bd.high);
        }
    }

    Ok(CifFit {
        method: opts.method,
        times,
        curves,
        b: if opts.b >= 2 { opts.b } else { 0 },
        failures,
        seed: opts.seed,
    })
}

use serde::Serialize;

use crate::error::{Error, Result};

/// Discrete distribution on strictly increasing support points.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StepDistribution {
    support: Vec<f64>,
    mass: Vec<f64>,
    #[serde(skip)]
    cumulative: Vec<f64>,
}

impl StepDistribution {
    /// Masses must be non-negative and sum to one within 1e-12.
    pub fn new(support: Vec<f64>, mass: Vec<f64>) -> Result<Self> {
        if support.len() != mass.len() || support.is_empty() {
            return Err(Error::InvalidArgument(
                "support and mass must be non-empty and of equal length".into(),
            ));
        }
        if support.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::InvalidArgument("support must be strictly increasing".into()));
        }
        if mass.iter().any(|&m| !(m >= 0.0) || !m.is_finite()) {
            return Err(Error::InvalidArgument("masses must be finite and non-negative".into()));
        }
        let total: f64 = mass.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidArgument(format!("masses sum to {total}, not 1")));
        }
        Ok(Self::from_parts(support, mass))
    }

    pub(crate) fn from_parts(support: Vec<f64>, mass: Vec<f64>) -> Self {
        let mut cumulative = Vec::with_capacity(mass.len());
        let mut acc = 0.0;
        for &m in &mass {
            acc += m;
            cumulative.push(acc);
        }
        Self {
            support,
            mass,
            cumulative,
        }
    }

    pub fn support(&self) -> &[f64] {
        &self.support
    }

    pub fn mass(&self) -> &[f64] {
        &self.mass
    }

    /// Cumulative probabilities at each support point.
    pub fn cumulative(&self) -> &[f64] {
        &self.cumulative
    }

    /// `F(t) = P(X <= t)`.
    pub fn cdf(&self, t: f64) -> f64 {
        let k = self.support.partition_point(|&s| s <= t);
        if k == 0 {
            0.0
        } else {
            self.cumulative[k - 1]
        }
    }

    /// `F(t-) = P(X < t)`.
    pub fn cdf_left_limit(&self, t: f64) -> f64 {
        let k = self.support.partition_point(|&s| s < t);
        if k == 0 {
            0.0
        } else {
            self.cumulative[k - 1]
        }
    }

    /// `P(a <= X <= b)`.
    pub fn window(&self, a: f64, b: f64) -> f64 {
        if b < a {
            return 0.0;
        }
        let lo = self.support.partition_point(|&s| s < a);
        let hi = self.support.partition_point(|&s| s <= b);
        self.mass[lo..hi].iter().sum()
    }

    /// Smallest support point with `F >= p`.
    pub fn quantile(&self, p: f64) -> f64 {
        let k = self.cumulative.partition_point(|&c| c < p - 1e-12);
        self.support[k.min(self.support.len() - 1)]
    }
}

pub fn eval_cdf(f: &StepDistribution, t: f64) -> f64 {
    f.cdf(t)
}

pub fn eval_cdf_leftlimit(f: &StepDistribution, t: f64) -> f64 {
    f.cdf_left_limit(t)
}

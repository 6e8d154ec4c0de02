//! One-parameter exponential tilt of the uniform law on `[a, b]`.
//!
//! `f(x; eta) = eta e^{eta x} / (e^{eta b} - e^{eta a})`, uniform at `eta = 0`,
//! with `a` and `b` fixed at the sample extremes. Everything is computed in
//! terms of `c = eta (b - a)` and rescaled positions so that large `|c|`
//! neither overflows nor cancels.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::sample::TruncatedSample;

const SERIES: f64 = 1e-6;
const BRACKET: f64 = 50.0;
const TOL: f64 = 1e-10;
const MAX_EXPANSIONS: usize = 12;

#[derive(Debug, Clone, Copy, Serialize)]
pub struct SefFit {
    pub eta: f64,
    pub a: f64,
    pub b: f64,
    pub loglik: f64,
    pub aic: f64,
}

impl SefFit {
    pub fn cdf(&self, t: f64) -> f64 {
        sef_cdf(self, t)
    }

    /// `t,cdf` on `points + 1` equally spaced points over `[a, b]`.
    pub fn curve_csv(&self, points: usize) -> String {
        let points = points.max(1);
        let mut out = String::from("t,cdf\n");
        for k in 0..=points {
            let t = self.a + (self.b - self.a) * k as f64 / points as f64;
            out.push_str(&format!("{},{}\n", t, self.cdf(t)));
        }
        out
    }
}

/// `F(t)` with `t` clamped into `[a, b]`.
pub fn sef_cdf(fit: &SefFit, t: f64) -> f64 {
    let l = fit.b - fit.a;
    if t <= fit.a {
        return 0.0;
    }
    if t >= fit.b {
        return 1.0;
    }
    unit_cdf(fit.eta * l, (t - fit.a) / l)
}

/// cdf of the tilt on `[0, 1]` with parameter `c`.
fn unit_cdf(c: f64, s: f64) -> f64 {
    let s = s.clamp(0.0, 1.0);
    let f = if c.abs() < SERIES {
        s + 0.5 * c * s * (s - 1.0)
    } else if c > 0.0 {
        ((c * (s - 1.0)).exp() - (-c).exp()) / -(-c).exp_m1()
    } else {
        (c * s).exp_m1() / c.exp_m1()
    };
    f.clamp(0.0, 1.0)
}

/// `log f` on `[0, 1]`, before the `-log(b - a)` Jacobian.
fn unit_log_density(c: f64, s: f64) -> f64 {
    if c.abs() < SERIES {
        c * (s - 0.5) - c * c / 24.0
    } else if c > 0.0 {
        c.ln() + c * (s - 1.0) - (-(-c).exp_m1()).ln()
    } else {
        (-c).ln() + c * s - (-c.exp_m1()).ln()
    }
}

/// `log (F(t) - F(r))` on `[0, 1]` for `r < t`.
fn unit_log_window(c: f64, r: f64, t: f64) -> f64 {
    let d = t - r;
    if c.abs() < SERIES {
        (d + 0.5 * c * (t * t - r * r - d)).ln()
    } else if c > 0.0 {
        c * (t - 1.0) + (-(-c * d).exp_m1()).ln() - (-(-c).exp_m1()).ln()
    } else {
        c * r + (-(c * d).exp_m1()).ln() - (-c.exp_m1()).ln()
    }
}

struct Scaled {
    x: Vec<f64>,
    lo: Vec<f64>,
    hi: Vec<f64>,
    len: f64,
}

impl Scaled {
    fn new(s: &TruncatedSample, a: f64, b: f64) -> Self {
        let len = b - a;
        let mut out = Scaled {
            x: Vec::new(),
            lo: Vec::new(),
            hi: Vec::new(),
            len,
        };
        for i in 0..s.len() {
            let lo = (s.u()[i].max(a) - a) / len;
            let hi = (s.v()[i].min(b) - a) / len;
            out.x.push((s.x()[i] - a) / len);
            out.lo.push(lo);
            out.hi.push(hi);
        }
        out
    }

    /// Conditional log-likelihood as a function of `c = eta (b - a)`.
    fn loglik(&self, c: f64) -> f64 {
        let mut ll = 0.0;
        for i in 0..self.x.len() {
            // A point window carries no information about the tilt.
            if self.hi[i] <= self.lo[i] {
                continue;
            }
            ll += unit_log_density(c, self.x[i]) - self.len.ln() - unit_log_window(c, self.lo[i], self.hi[i]);
        }
        ll
    }
}

fn golden<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let mut c1 = hi - r * (hi - lo);
    let mut c2 = lo + r * (hi - lo);
    let (mut f1, mut f2) = (f(c1), f(c2));
    while hi - lo > tol {
        if f1 >= f2 {
            hi = c2;
            c2 = c1;
            f2 = f1;
            c1 = hi - r * (hi - lo);
            f1 = f(c1);
        } else {
            lo = c1;
            c1 = c2;
            f1 = f2;
            c2 = lo + r * (hi - lo);
            f2 = f(c2);
        }
    }
    0.5 * (lo + hi)
}

/// Conditional log-likelihood at `eta` with `a`, `b` at the sample extremes.
pub fn sef_loglik(s: &TruncatedSample, eta: f64) -> Result<f64> {
    let (a, b) = extremes(s)?;
    Ok(Scaled::new(s, a, b).loglik(eta * (b - a)))
}

fn extremes(s: &TruncatedSample) -> Result<(f64, f64)> {
    if s.len() < 2 {
        return Err(Error::InvalidArgument("SEF fit needs at least two records".into()));
    }
    let a = s.x().iter().copied().fold(f64::INFINITY, f64::min);
    let b = s.x().iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if a >= b {
        return Err(Error::InvalidArgument("SEF fit needs min(x) < max(x)".into()));
    }
    Ok((a, b))
}

/// Maximum conditional likelihood fit with `a = min x`, `b = max x`.
pub fn sef_fit(s: &TruncatedSample) -> Result<SefFit> {
    let (a, b) = extremes(s)?;
    let sc = Scaled::new(s, a, b);
    let ll = |c: f64| sc.loglik(c);
    let l0 = ll(0.0);
    let mut half = BRACKET;
    let flat = |h: f64| {
        let scale = 1e-12 * (1.0 + l0.abs());
        (ll(-h) - l0).abs() <= scale && (ll(h) - l0).abs() <= scale
    };
    if flat(half) {
        return Err(Error::NonIdentifiable("SEF likelihood is flat in the tilt".into()));
    }
    for _ in 0..=MAX_EXPANSIONS {
        let c = golden(ll, -half, half, TOL);
        if c.abs() < half - 1e3 * TOL {
            let loglik = ll(c);
            return Ok(SefFit {
                eta: c / (b - a),
                a,
                b,
                loglik,
                aic: 2.0 - 2.0 * loglik,
            });
        }
        half *= 2.0;
    }
    Err(Error::NotConverged("SEF tilt left the search bracket"))
}

#![allow(dead_code)]

use dtrunc::TruncatedSample;

pub fn sample(rows: &[(f64, f64, f64)]) -> TruncatedSample {
    TruncatedSample::new(
        rows.iter().map(|r| r.0).collect(),
        rows.iter().map(|r| r.1).collect(),
        rows.iter().map(|r| r.2).collect(),
    )
    .unwrap()
}

/// Three overlapping windows with a closed-form NPMLE.
pub fn d3() -> TruncatedSample {
    sample(&[(1.0, 0.0, 2.5), (2.0, 0.5, 3.0), (3.0, 1.5, 4.0)])
}

/// Violates the existence condition.
pub fn dv() -> TruncatedSample {
    sample(&[(1.0, 0.0, 1.5), (2.0, 1.0, 3.0), (3.0, 2.5, 3.5)])
}

pub fn golden() -> f64 {
    (3.0 - 5f64.sqrt()) / 2.0
}

/// Dense indicator matrix `J[i][j] = I(u_i <= t_j <= v_i)` over sorted
/// distinct event values `t`.
pub fn indicator(s: &TruncatedSample) -> (Vec<f64>, Vec<Vec<bool>>) {
    let mut t = s.x().to_vec();
    t.sort_by(f64::total_cmp);
    t.dedup();
    let j = (0..s.len())
        .map(|i| t.iter().map(|&tj| s.u()[i] <= tj && tj <= s.v()[i]).collect())
        .collect();
    (t, j)
}

/// Independent fixed-point solver on the dense indicator matrix, iterated
/// to machine precision.
pub fn dense_fixed_point(s: &TruncatedSample, iters: usize) -> Vec<f64> {
    let (t, j) = indicator(s);
    let m = t.len();
    let d: Vec<f64> = t
        .iter()
        .map(|&tj| s.x().iter().filter(|&&x| x == tj).count() as f64)
        .collect();
    let mut f = vec![1.0 / m as f64; m];
    for _ in 0..iters {
        let big_f: Vec<f64> = j
            .iter()
            .map(|row| (0..m).filter(|&k| row[k]).map(|k| f[k]).sum())
            .collect();
        let mut next: Vec<f64> = (0..m)
            .map(|k| {
                let denom: f64 = (0..s.len()).filter(|&i| j[i][k]).map(|i| 1.0 / big_f[i]).sum();
                d[k] / denom
            })
            .collect();
        let tot: f64 = next.iter().sum();
        next.iter_mut().for_each(|x| *x /= tot);
        f = next;
    }
    f
}

/// `max_j |1 - f_j sum_i J_ij / F_i / d_j|` for masses on the sorted
/// distinct event values.
pub fn fixed_point_residual(s: &TruncatedSample, f: &[f64]) -> f64 {
    let (t, j) = indicator(s);
    let m = t.len();
    let big_f: Vec<f64> = j
        .iter()
        .map(|row| (0..m).filter(|&k| row[k]).map(|k| f[k]).sum())
        .collect();
    (0..m)
        .map(|k| {
            let d = s.x().iter().filter(|&&x| x == t[k]).count() as f64;
            let sk: f64 = (0..s.len()).filter(|&i| j[i][k]).map(|i| 1.0 / big_f[i]).sum();
            (1.0 - f[k] * sk / d).abs()
        })
        .fold(0.0, f64::max)
}

pub fn sup_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Interval-sampling draws `u = (1 + tau) xi^rho - tau`, `v = u + tau`,
/// with `x ~ U(0,1)`, kept when `u <= x <= v`. Written independently of the
/// library's generator.
pub fn uniform_design(n: usize, rho: f64, tau: f64, seed: u64) -> TruncatedSample {
    use rand::{Rng, SeedableRng};
    let mut rng = rand::rngs::StdRng::seed_from_u64(seed);
    let (mut x, mut u, mut v) = (Vec::new(), Vec::new(), Vec::new());
    while x.len() < n {
        let xi: f64 = rng.random();
        let ui = (1.0 + tau) * rng.random::<f64>().powf(rho) - tau;
        if ui <= xi && xi <= ui + tau {
            x.push(xi);
            u.push(ui);
            v.push(ui + tau);
        }
    }
    TruncatedSample::new(x, u, v).unwrap()
}

/// Attaches one covariate column `z`.
pub fn with_z(s: TruncatedSample, z: &[f64]) -> TruncatedSample {
    let rows = z.iter().map(|&v| vec![v]).collect();
    s.with_covariates(dtrunc::sample::Covariates::new(vec!["z".into()], rows).unwrap())
        .unwrap()
}

/// Windows `[min x, max x]` for every record: no truncation at all.
pub fn covering(x: &[f64]) -> TruncatedSample {
    let lo = x.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    TruncatedSample::new(x.to_vec(), vec![lo; x.len()], vec![hi; x.len()]).unwrap()
}

/// Uniform design plus a covariate drawn independently of everything else.
pub fn uniform_design_with_z(n: usize, seed: u64) -> TruncatedSample {
    use rand::{Rng, SeedableRng};
    let s = uniform_design(n, 0.5, 0.25, seed);
    let mut rng = rand::rngs::StdRng::seed_from_u64(seed ^ 0xfeed);
    let z: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
    with_z(s, &z)
}

/// Kolmogorov-Smirnov distance between a sample and a continuous cdf.
pub fn ks_distance(mut xs: Vec<f64>, cdf: impl Fn(f64) -> f64) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    xs.iter()
        .enumerate()
        .map(|(i, &x)| {
            let c = cdf(x);
            (c - i as f64 / n).abs().max(((i + 1) as f64 / n - c).abs())
        })
        .fold(0.0, f64::max)
}

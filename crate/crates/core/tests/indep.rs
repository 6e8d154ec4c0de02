mod common;

use common::*;
use dtrunc::indep::{conditional_tau, kendall_tau_test};
use dtrunc::{Error, TruncatedSample};
use proptest::prelude::*;

/// Pair enumeration written out in full.
fn brute_tau(s: &TruncatedSample) -> Option<(f64, u64)> {
    let (x, u, v) = (s.x(), s.u(), s.v());
    let (mut sum, mut count) = (0.0, 0u64);
    for i in 0..s.len() {
        for j in 0..i {
            let lo = u[i].max(u[j]);
            let hi = v[i].min(v[j]);
            if (lo..=hi).contains(&x[i]) && (lo..=hi).contains(&x[j]) {
                count += 1;
                let p = (x[i] - x[j]) * (u[i] - u[j]);
                // f64::signum maps zero to one, so spell it out.
                sum += if p > 0.0 { 1.0 } else if p < 0.0 { -1.0 } else { 0.0 };
            }
        }
    }
    (count > 0).then(|| (sum / count as f64, count))
}

#[test]
fn d3_has_two_concordant_pairs() {
    assert_eq!(conditional_tau(&d3()).unwrap(), (1.0, 2));
    let t = kendall_tau_test(&d3(), 50, 1).unwrap();
    assert_eq!((t.tau, t.n_comparable, t.b), (1.0, 2, 50));
    assert!((0.0..=1.0).contains(&t.pvalue));
}

#[test]
fn undefined_and_zero_variance() {
    let apart = sample(&[(1.0, 0.0, 2.0), (5.0, 4.0, 6.0)]);
    let err = kendall_tau_test(&apart, 20, 0).unwrap_err();
    assert!(matches!(err, Error::Undefined(_)));
    let tied = sample(&[(1.0, 0.0, 2.0), (1.0, 0.5, 2.0), (1.0, 0.2, 1.5)]);
    assert!(matches!(conditional_tau(&tied), Err(Error::ZeroVariance(_))));
}

#[test]
fn increasing_transform_changes_nothing() {
    let s = uniform_design(150, 0.5, 0.25, 8);
    let h = |t: f64| (3.0 * t).exp() + t.powi(3);
    let t = TruncatedSample::new(
        s.x().iter().map(|&x| h(x)).collect(),
        s.u().iter().map(|&x| h(x)).collect(),
        s.v().iter().map(|&x| h(x)).collect(),
    )
    .unwrap();
    assert_eq!(conditional_tau(&s).unwrap(), conditional_tau(&t).unwrap());
    let a = kendall_tau_test(&s, 60, 4).unwrap();
    let b = kendall_tau_test(&t, 60, 4).unwrap();
    assert_eq!(a.pvalue, b.pvalue);
}

#[test]
fn test_is_reproducible_and_reports_its_seed() {
    let s = uniform_design(100, 0.5, 0.25, 2);
    let a = kendall_tau_test(&s, 80, 11).unwrap();
    let b = kendall_tau_test(&s, 80, 11).unwrap();
    assert_eq!(a.pvalue, b.pvalue);
    let json = serde_json::to_value(&a).unwrap();
    assert_eq!(json["seed"], 11);
    assert_eq!(json["B"], 80);
    assert!(json["p"].is_number());
}

#[test]
fn dependent_truncation_is_detected() {
    // Windows centred on x: u rises with x, so comparable pairs are concordant.
    use rand::{Rng, SeedableRng};
    let mut rng = rand::rngs::StdRng::seed_from_u64(5);
    let rows: Vec<(f64, f64, f64)> = (0..150)
        .map(|_| {
            let x: f64 = rng.random();
            let u = x - 0.1 * rng.random::<f64>();
            (x, u, u + 0.3)
        })
        .collect();
    let t = kendall_tau_test(&sample(&rows), 100, 3).unwrap();
    assert!(t.tau > 0.3 && t.pvalue < 0.01, "{t:?}");
}

#[test]
fn quasi_independent_samples_rarely_reject() {
    let rejections = (0..30)
        .filter(|&k| kendall_tau_test(&uniform_design(100, 0.5, 0.25, 900 + k), 100, k).unwrap().pvalue < 0.05)
        .count();
    assert!(rejections <= 5, "{rejections} of 30");
}

fn arb_sample() -> impl Strategy<Value = TruncatedSample> {
    proptest::collection::vec((0i32..10, 0i32..5, 0i32..5), 2..30).prop_map(|rows| {
        let x: Vec<f64> = rows.iter().map(|r| r.0 as f64).collect();
        let u = rows.iter().zip(&x).map(|(r, x)| x - r.1 as f64).collect();
        let v = rows.iter().zip(&x).map(|(r, x)| x + r.2 as f64).collect();
        TruncatedSample::new(x, u, v).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn matches_pair_enumeration(s in arb_sample()) {
        let n = s.len() as u64;
        match (conditional_tau(&s), brute_tau(&s)) {
            (Ok((tau, c)), Some((bt, bc))) => {
                prop_assert_eq!(c, bc);
                prop_assert!((tau - bt).abs() < 1e-12);
                prop_assert!(tau.abs() <= 1.0 && c <= n * (n - 1) / 2);
            }
            (Err(Error::Undefined(_)), None) => {}
            (Err(Error::ZeroVariance(_)), Some((bt, _))) => prop_assert_eq!(bt, 0.0),
            other => prop_assert!(false, "{:?}", other),
        }
    }
}

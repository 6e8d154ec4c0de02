//! Conditional Kendall's tau on data that satisfy quasi-independence and on
//! data whose windows move with the event time.

use dtrunc::indep::kendall_tau_test;
use dtrunc::sim::{gen_truncated, TruncationDesign, XLaw};
use dtrunc::TruncatedSample;
use rand::{Rng, SeedableRng};

fn main() -> dtrunc::Result<()> {
    let ok = gen_truncated(200, &XLaw::Uniform01, &TruncationDesign::new(0.5, 0.25)?, 5)?.sample;
    let t = kendall_tau_test(&ok, 200, 5)?;
    println!("independent: tau {:+.3} over {} pairs, p = {:.3}", t.tau, t.n_comparable, t.pvalue);

    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
    let (mut x, mut u, mut v) = (Vec::new(), Vec::new(), Vec::new());
    for _ in 0..200 {
        let xi: f64 = rng.random();
        let ui = xi - 0.1 * rng.random::<f64>();
        x.push(xi);
        u.push(ui);
        v.push(ui + 0.3);
    }
    let t = kendall_tau_test(&TruncatedSample::new(x, u, v)?, 200, 5)?;
    println!("dependent:   tau {:+.3} over {} pairs, p = {:.3}", t.tau, t.n_comparable, t.pvalue);
    Ok(())
}

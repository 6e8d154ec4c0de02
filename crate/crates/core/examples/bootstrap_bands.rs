//! Pointwise confidence limits for F by the simple and obvious bootstraps.
//!
//! ```bash
//! cargo run --release --example bootstrap_bands
//! ```

use dtrunc::bootstrap::{obvious_bootstrap, simple_bootstrap, BootstrapOptions, CiMethod};
use dtrunc::sim::{gen_truncated, TruncationDesign, XLaw};

fn main() -> dtrunc::Result<()> {
    let s = gen_truncated(250, &XLaw::Uniform01, &TruncationDesign::new(0.5, 0.25)?, 3)?.sample;
    let points = vec![0.1, 0.25, 0.5, 0.75, 0.9];
    let base = BootstrapOptions {
        b: 199,
        seed: 11,
        eval_points: Some(points),
        ..Default::default()
    };

    let simple = simple_bootstrap(&s, &base)?;
    let normal = simple_bootstrap(
        &s,
        &BootstrapOptions {
            method: CiMethod::Normal,
            ..base.clone()
        },
    )?;
    let obvious = obvious_bootstrap(&s, &base)?;

    println!("t      F_n    se(simple) se(obvious) percentile        normal");
    for k in 0..simple.eval_points.len() {
        println!(
            "{:.2}  {:.3}  {:.4}     {:.4}      [{:.3}, {:.3}]  [{:.3}, {:.3}]",
            simple.eval_points[k],
            simple.estimate[k],
            simple.se[k],
            obvious.se[k],
            simple.ci_low[k],
            simple.ci_high[k],
            normal.ci_low[k],
            normal.ci_high[k],
        );
    }
    println!(
        "redrawn resamples: simple {}, obvious {}; obvious acceptance {:.3}",
        simple.failures,
        obvious.failures,
        obvious.acceptance.unwrap_or(f64::NAN)
    );
    Ok(())
}

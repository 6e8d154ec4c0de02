//! NPMLE of the event-time distribution and of the sampling probabilities.
//!
//! ```bash
//! cargo run --example estimate_cdf -- crates/core/examples/data/d3.csv
//! ```
//! Without an argument a sample is simulated from the uniform design.

use dtrunc::sim::{gen_truncated, TruncationDesign, XLaw};
use dtrunc::{existence_check, fit_npmle, load_sample, Algorithm, LoadOptions, NpmleOptions};

fn main() -> dtrunc::Result<()> {
    let s = match std::env::args().nth(1) {
        Some(path) => load_sample(path, &LoadOptions::default())?,
        None => gen_truncated(200, &XLaw::Uniform01, &TruncationDesign::new(0.5, 0.25)?, 1)?.sample,
    };
    let check = existence_check(&s);
    if !check.ok {
        eprintln!("warning: {} record(s) break the existence condition", check.violating_indices.len());
    }

    let opts = NpmleOptions::default();
    let joint = fit_npmle(&s, Algorithm::Joint, &opts)?;
    let sc = fit_npmle(&s, Algorithm::SelfConsistency, &opts)?;
    println!(
        "joint: {} iterations, self-consistency: {} iterations",
        joint.iterations, sc.iterations
    );
    let gap = joint
        .f
        .cumulative()
        .iter()
        .zip(sc.f.cumulative())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    println!("sup distance between the two fits: {gap:.2e}");

    // First rows of the tidy output; `dtrunc estimate` writes all of it.
    for line in joint.to_csv_string().lines().take(8) {
        println!("{line}");
    }
    for q in [0.25, 0.5, 0.75] {
        println!("F^-1({q}) = {:.4}", joint.f.quantile(q));
    }
    Ok(())
}

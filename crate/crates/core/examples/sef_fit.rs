//! One-parameter exponential-tilt fit, compared with the NPMLE.

use dtrunc::sef::sef_fit;
use dtrunc::sim::{gen_truncated, TruncationDesign, XLaw};
use dtrunc::{npmle_joint, NpmleOptions};

fn main() -> dtrunc::Result<()> {
    let s = gen_truncated(400, &XLaw::Uniform01, &TruncationDesign::new(0.5, 0.25)?, 2)?.sample;
    let fit = sef_fit(&s)?;
    println!(
        "eta = {:.4} on [{:.4}, {:.4}], loglik {:.3}, AIC {:.3}",
        fit.eta, fit.a, fit.b, fit.loglik, fit.aic
    );
    let np = npmle_joint(&s, &NpmleOptions::default())?;
    println!("t     SEF    NPMLE");
    for t in [0.1, 0.25, 0.5, 0.75, 0.9] {
        println!("{t:.2}  {:.3}  {:.3}", fit.cdf(t), np.f.cdf(t));
    }
    Ok(())
}

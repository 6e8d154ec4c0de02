//! Cumulative incidence for two event types, assuming the truncation limits
//! do not depend on the type (`indep`) and allowing them to (`dep`).
//!
//! ```bash
//! cargo run --release --example competing_risks
//! ```

use dtrunc::cif::{cif, CifMethod, CifOptions};
use dtrunc::sim::{gen_truncated, TruncationDesign, XLaw};

fn main() -> dtrunc::Result<()> {
    let gen = gen_truncated(300, &XLaw::Uniform01, &TruncationDesign::new(1.0, 0.5)?, 8)?;
    // Early events are more often of type 1.
    let labels = gen.sample.x().iter().map(|&x| if x < 0.4 { 1 } else { 2 }).collect();
    let s = gen.sample.with_events(labels)?;

    for method in [CifMethod::Indep, CifMethod::Dep] {
        let opts = CifOptions {
            method,
            b: 100,
            seed: 8,
            ..Default::default()
        };
        match cif(&s, &opts) {
            Ok(fit) => {
                for c in &fit.curves {
                    let k = fit.times.partition_point(|&t| t <= 0.5);
                    let se = c.se.as_ref().map_or(f64::NAN, |se| se[k.saturating_sub(1)]);
                    println!(
                        "{method:?} type {}: CIF(0.5) = {:.3} (se {:.3}), CIF(inf) = {:.3}",
                        c.label,
                        c.at(&fit.times, 0.5),
                        se,
                        c.cif.last().unwrap()
                    );
                }
            }
            // Each type needs its own unique NPMLE under `dep`.
            Err(e) => println!("{method:?}: {e}"),
        }
    }
    Ok(())
}

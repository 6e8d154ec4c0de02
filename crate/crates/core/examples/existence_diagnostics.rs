//! The existence pre-check on a sample that fails it and on one that passes.

use dtrunc::{existence_check, npmle_joint, NpmleOptions, TruncatedSample};

fn main() -> dtrunc::Result<()> {
    // The middle event is covered by its own window only.
    let bad = TruncatedSample::new(vec![1.0, 2.0, 3.0], vec![0.0, 1.0, 2.5], vec![1.5, 3.0, 3.5])?;
    let good = TruncatedSample::new(vec![1.0, 2.0, 3.0], vec![0.0, 0.5, 1.5], vec![2.5, 3.0, 4.0])?;
    for (name, s) in [("bad", &bad), ("good", &good)] {
        let r = existence_check(s);
        println!("{name}: ok={} S1={:?} S2={:?} violating={:?}", r.ok, r.s1, r.s2, r.violating_indices);
        // The fit still runs; the flag travels with it.
        let fit = npmle_joint(s, &NpmleOptions::default())?;
        println!("  masses {:?}, warning {}", fit.f.mass(), fit.existence_warning);
    }
    Ok(())
}

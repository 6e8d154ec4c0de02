//! Accuracy of simple-bootstrap standard errors of `F_n` at the quartiles of
//! a uniform variable, against a Monte Carlo SD from independent samples.
//!
//! ```bash
//! cargo run --release --example bootstrap_se_study -- 250 100 99
//! ```
//! Arguments: sample size, trials, bootstrap resamples.

use dtrunc::sim::{run_experiment, ExperimentConfig};

fn main() -> dtrunc::Result<()> {
    let args: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut cfg = ExperimentConfig::preset("table3")?;
    cfg.n = args.first().copied().unwrap_or(250);
    cfg.trials = args.get(1).copied().unwrap_or(100);
    cfg.b = args.get(2).copied().unwrap_or(99);
    cfg.seed = 3;

    let t = std::time::Instant::now();
    let report = run_experiment(&cfg)?;
    println!(
        "n = {}, M = {}, B = {}, oracle trials = {}, mean acceptance {:.3}",
        cfg.n, cfg.trials, cfg.b, cfg.oracle_trials, report.mean_acceptance_rate
    );
    print!("{}", report.to_csv_string());
    eprintln!("elapsed {:.1?}", t.elapsed());
    Ok(())
}

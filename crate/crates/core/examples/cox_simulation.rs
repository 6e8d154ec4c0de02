//! Monte Carlo comparison of the Cox estimators under interval sampling.
//!
//! ```bash
//! cargo run --release --example cox_simulation -- 250 100 7
//! ```
//! Arguments: sample size, trials, seed.

use dtrunc::sim::{acceptance_rate, run_experiment, CoxScenario, ExperimentConfig, TruncationDesign, XLaw};

fn main() -> dtrunc::Result<()> {
    let args: Vec<u64> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut cfg = ExperimentConfig::preset("table4")?;
    cfg.n = args.first().copied().unwrap_or(250) as usize;
    cfg.trials = args.get(1).copied().unwrap_or(100) as usize;
    cfg.seed = args.get(2).copied().unwrap_or(7);

    let law = XLaw::Cox(CoxScenario::new(cfg.sigma)?);
    let design = TruncationDesign::new(cfg.rho, cfg.tau)?;
    let rate = acceptance_rate(&law, &design, 100_000, cfg.seed);
    println!("truncation rate over 1e5 candidates: {:.3}", 1.0 - rate);

    let t = std::time::Instant::now();
    let report = run_experiment(&cfg)?;
    println!("beta = {}, n = {}, M = {}", cfg.beta(), cfg.n, cfg.trials);
    print!("{}", report.to_csv_string());
    eprintln!("elapsed {:.1?}", t.elapsed());
    Ok(())
}

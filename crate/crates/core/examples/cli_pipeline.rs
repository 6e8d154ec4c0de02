//! Drives the command-line entry point in-process: writes a sample, then
//! runs `diagnose`, `estimate` and `bootstrap` on it.
//!
//! Same as
//! ```bash
//! dtrunc diagnose --input sample.csv --out-dir out
//! dtrunc estimate --input sample.csv --out-dir out
//! dtrunc bootstrap --input sample.csv --out-dir out --B 99 --seed 1
//! ```

use dtrunc::sample::write_sample;
use dtrunc::sim::{gen_truncated, TruncationDesign, XLaw};

fn main() -> dtrunc::Result<()> {
    let dir = std::env::temp_dir().join("dtrunc_cli_pipeline");
    std::fs::create_dir_all(&dir).map_err(|e| dtrunc::Error::Config(e.to_string()))?;
    let input = dir.join("sample.csv");
    let s = gen_truncated(150, &XLaw::Uniform01, &TruncationDesign::new(0.5, 0.25)?, 4)?.sample;
    write_sample(&s, &input)?;

    let input = input.to_string_lossy().into_owned();
    let out = dir.join("out").to_string_lossy().into_owned();
    for args in [
        vec!["diagnose", "--input", &input, "--out-dir", &out],
        vec!["estimate", "--input", &input, "--out-dir", &out],
        vec!["bootstrap", "--input", &input, "--out-dir", &out, "--B", "99", "--seed", "1"],
    ] {
        let code = dtrunc::cli::run(std::iter::once("dtrunc").chain(args.iter().copied()));
        println!("dtrunc {} -> exit {code}", args[0]);
    }
    let mut files: Vec<_> = std::fs::read_dir(&out)
        .map_err(|e| dtrunc::Error::Config(e.to_string()))?
        .filter_map(|e| e.ok().map(|e| e.file_name().to_string_lossy().into_owned()))
        .collect();
    files.sort();
    println!("outputs in {out}: {}", files.join(", "));
    Ok(())
}

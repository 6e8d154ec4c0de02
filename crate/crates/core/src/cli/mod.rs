//! The `dtrunc` command line: one subcommand per analysis, CSV/JSON outputs
//! and a `manifest.json` next to them.
//!
//! Every flag can also be set through a `DTRUNC_*` environment variable
//! (`DTRUNC_SEED`, `DTRUNC_TOL`, ...); the command line wins.
//!
//! Exit codes: 0 ok, 1 I/O, 2 usage or parse error, 3 validation,
//! 4 non-convergence, 5 numerical degeneracy and other analysis failures.

mod manifest;

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

pub use manifest::RunManifest;

use crate::bootstrap::{obvious_bootstrap, simple_bootstrap, BootstrapOptions, CiMethod};
use crate::cif::{cif, CifMethod, CifOptions};
use crate::cox::{cox_fit, g_by_group, CoxFitOptions, NewtonOptions, Scheme};
use crate::error::{Error, Result};
use crate::indep::kendall_tau_test;
use crate::npmle::{fit_npmle, Algorithm, NpmleOptions};
use crate::sample::{existence_check, load_sample_with_report, ColumnMap, LoadOptions, TruncatedSample};
use crate::sef::sef_fit;
use crate::sim::{run_experiment, ExperimentConfig};

#[derive(Debug, Parser)]
#[command(name = "dtrunc", version, about = "Inference for randomly doubly truncated data")]
struct Cli {
    /// Worker threads for resampling and simulation (0 = all cores).
    #[arg(long, global = true, default_value_t = 0, env = "DTRUNC_THREADS")]
    threads: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// NPMLE of F and the sampling probabilities G.
    Estimate(EstimateArgs),
    /// Bootstrap standard errors and confidence limits for F.
    Bootstrap(BootstrapArgs),
    /// Cox regression with inverse-probability weights.
    Cox(CoxArgs),
    /// Cumulative incidence functions for competing risks.
    Cif(CifArgs),
    /// Conditional Kendall's tau test of quasi-independence.
    Indeptest(IndepArgs),
    /// One-parameter exponential-tilt fit.
    Sef(SefArgs),
    /// Existence pre-check, and G by event group when labels are present.
    Diagnose(DiagnoseArgs),
    /// Monte Carlo experiments.
    Simulate(SimulateArgs),
}

#[derive(Debug, Args, Serialize)]
struct InputArgs {
    /// Delimited data file with a header row.
    #[arg(long, env = "DTRUNC_INPUT")]
    input: PathBuf,
    /// Column mapping, e.g. `x=age,u=lo,v=hi,z=z1;z2,event=group`.
    #[arg(long, env = "DTRUNC_COLUMNS")]
    columns: Option<String>,
    /// Drop rows violating u <= x <= v instead of failing.
    #[arg(long, env = "DTRUNC_DROP_INVALID")]
    drop_invalid: bool,
}

#[derive(Debug, Args, Serialize)]
struct OutArgs {
    #[arg(long, default_value = ".", env = "DTRUNC_OUT_DIR")]
    out_dir: PathBuf,
}

#[derive(Debug, Args, Serialize)]
struct NpmleArgs {
    #[arg(long, default_value_t = 1e-6, env = "DTRUNC_TOL")]
    tol: f64,
    #[arg(long, default_value_t = 10_000, env = "DTRUNC_MAX_ITER")]
    max_iter: usize,
}

impl NpmleArgs {
    fn options(&self) -> NpmleOptions {
        NpmleOptions {
            tol: self.tol,
            max_iter: self.max_iter,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum AlgoArg {
    Selfconsistency,
    Joint,
}

#[derive(Debug, Args, Serialize)]
struct EstimateArgs {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    out: OutArgs,
    #[command(flatten)]
    npmle: NpmleArgs,
    #[arg(long, value_enum, default_value_t = AlgoArg::Joint, env = "DTRUNC_ALGO")]
    algo: AlgoArg,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum BootMethodArg {
    Simple,
    Obvious,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum CiArg {
    Percentile,
    Normal,
}

#[derive(Debug, Args, Serialize)]
struct BootstrapArgs {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    out: OutArgs,
    #[command(flatten)]
    npmle: NpmleArgs,
    #[arg(long = "B", default_value_t = crate::bootstrap::DEFAULT_B, env = "DTRUNC_B")]
    b: usize,
    #[arg(long, default_value_t = 0.95, env = "DTRUNC_LEVEL")]
    level: f64,
    #[arg(long, env = "DTRUNC_SEED")]
    seed: Option<u64>,
    /// Resampling scheme.
    #[arg(long, value_enum, default_value_t = BootMethodArg::Simple, env = "DTRUNC_METHOD")]
    method: BootMethodArg,
    /// Confidence limit construction.
    #[arg(long, value_enum, default_value_t = CiArg::Percentile, env = "DTRUNC_CI")]
    ci: CiArg,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum SchemeArg {
    Mandel,
    Rennert,
    Naive,
}

#[derive(Debug, Args, Serialize)]
struct CoxArgs {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    out: OutArgs,
    #[command(flatten)]
    npmle: NpmleArgs,
    #[arg(long, value_enum, default_value_t = SchemeArg::Mandel, env = "DTRUNC_SCHEME")]
    scheme: SchemeArg,
    #[arg(long = "B", default_value_t = crate::cox::DEFAULT_B, env = "DTRUNC_B")]
    b: usize,
    #[arg(long, env = "DTRUNC_SEED")]
    seed: Option<u64>,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum CifMethodArg {
    Indep,
    Dep,
}

#[derive(Debug, Args, Serialize)]
struct CifArgs {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    out: OutArgs,
    #[command(flatten)]
    npmle: NpmleArgs,
    #[arg(long, value_enum, default_value_t = CifMethodArg::Indep, env = "DTRUNC_METHOD")]
    method: CifMethodArg,
    /// Bootstrap resamples for the bands; 0 disables them.
    #[arg(long = "B", default_value_t = crate::cif::DEFAULT_B, env = "DTRUNC_B")]
    b: usize,
    #[arg(long, default_value_t = 0.95, env = "DTRUNC_LEVEL")]
    level: f64,
    #[arg(long, env = "DTRUNC_SEED")]
    seed: Option<u64>,
}

#[derive(Debug, Args, Serialize)]
struct IndepArgs {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    out: OutArgs,
    #[arg(long = "B", default_value_t = crate::indep::DEFAULT_B, env = "DTRUNC_B")]
    b: usize,
    #[arg(long, env = "DTRUNC_SEED")]
    seed: Option<u64>,
}

#[derive(Debug, Args, Serialize)]
struct SefArgs {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    out: OutArgs,
    /// Intervals in the exported cdf curve.
    #[arg(long, default_value_t = 200)]
    points: usize,
}

#[derive(Debug, Args, Serialize)]
struct DiagnoseArgs {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    out: OutArgs,
    #[command(flatten)]
    npmle: NpmleArgs,
}

#[derive(Debug, Args, Serialize)]
struct SimulateArgs {
    #[command(flatten)]
    out: OutArgs,
    /// `table4` (Cox estimators) or `table3` (bootstrap standard errors).
    #[arg(long, env = "DTRUNC_PRESET")]
    preset: Option<String>,
    /// `key = value` experiment file, applied after the preset.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long = "B")]
    b: Option<usize>,
    #[arg(long, env = "DTRUNC_SEED")]
    seed: Option<u64>,
    /// Use the full-size trial count.
    #[arg(long)]
    full: bool,
}

/// Parses `args` (including the program name), runs, and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(cli.threads).build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: cannot start thread pool: {e}");
            return 1;
        }
    };
    match pool.install(|| dispatch(cli.command)) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn dispatch(cmd: Command) -> Result<i32> {
    match cmd {
        Command::Estimate(a) => estimate(a),
        Command::Bootstrap(a) => bootstrap(a),
        Command::Cox(a) => cox(a),
        Command::Cif(a) => cif_cmd(a),
        Command::Indeptest(a) => indeptest(a),
        Command::Sef(a) => sef(a),
        Command::Diagnose(a) => diagnose(a),
        Command::Simulate(a) => simulate(a),
    }
}

struct Loaded {
    sample: TruncatedSample,
    digest: String,
    notes: Vec<String>,
}

fn load(a: &InputArgs) -> Result<Loaded> {
    let columns = match &a.columns {
        Some(spec) => ColumnMap::parse(spec)?,
        None => ColumnMap::default(),
    };
    let opts = LoadOptions {
        columns,
        drop_invalid: a.drop_invalid,
    };
    let digest = manifest::sha256_file(&a.input)?;
    let (sample, report) = load_sample_with_report(&a.input, &opts)?;
    let mut notes = Vec::new();
    if !report.dropped_lines.is_empty() {
        notes.push(report.summary());
    }
    Ok(Loaded { sample, digest, notes })
}

fn write(dir: &Path, name: &str, contents: &str) -> Result<()> {
    let path = dir.join(name);
    std::fs::write(&path, contents).map_err(|e| Error::io(path.display().to_string(), e))
}

fn write_json<T: Serialize>(dir: &Path, name: &str, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).expect("serializable");
    text.push('\n');
    write(dir, name, &text)
}

fn prepare(out: &OutArgs) -> Result<()> {
    std::fs::create_dir_all(&out.out_dir).map_err(|e| Error::io(out.out_dir.display().to_string(), e))
}

fn seed_or_fresh(seed: Option<u64>) -> u64 {
    seed.unwrap_or_else(rand::random)
}

fn estimate(a: EstimateArgs) -> Result<i32> {
    let data = load(&a.input)?;
    prepare(&a.out)?;
    let algo = match a.algo {
        AlgoArg::Selfconsistency => Algorithm::SelfConsistency,
        AlgoArg::Joint => Algorithm::Joint,
    };
    let fit = fit_npmle(&data.sample, algo, &a.npmle.options())?;
    write(&a.out.out_dir, "cdf.csv", &fit.to_csv_string())?;
    write_json(&a.out.out_dir, "fit.json", &fit_summary(&data.sample, &fit))?;
    let mut warnings = data.notes;
    if fit.existence_warning {
        warnings.push("existence condition violated: the NPMLE may not exist or be unique".into());
    }
    if !fit.converged {
        warnings.push(format!("not converged after {} iterations", fit.iterations));
    }
    RunManifest::new("estimate", &a, Some(data.digest), None, warnings).write(&a.out.out_dir)?;
    if fit.converged {
        Ok(0)
    } else {
        eprintln!("error: NPMLE did not converge in {} iterations", fit.iterations);
        Ok(4)
    }
}

#[derive(Serialize)]
struct FitSummary {
    n: usize,
    support_points: usize,
    algorithm: Algorithm,
    iterations: usize,
    final_change: f64,
    tol: f64,
    converged: bool,
    existence_warning: bool,
}

fn fit_summary(s: &TruncatedSample, fit: &crate::npmle::NpmleFit) -> FitSummary {
    FitSummary {
        n: s.len(),
        support_points: fit.f.support().len(),
        algorithm: fit.algorithm,
        iterations: fit.iterations,
        final_change: fit.final_change,
        tol: fit.tol,
        converged: fit.converged,
        existence_warning: fit.existence_warning,
    }
}

fn bootstrap(mut a: BootstrapArgs) -> Result<i32> {
    let data = load(&a.input)?;
    prepare(&a.out)?;
    let seed = seed_or_fresh(a.seed);
    a.seed = Some(seed);
    let opts = BootstrapOptions {
        b: a.b,
        level: a.level,
        seed,
        method: match a.ci {
            CiArg::Percentile => CiMethod::Percentile,
            CiArg::Normal => CiMethod::Normal,
        },
        npmle: a.npmle.options(),
        eval_points: None,
    };
    let res = match a.method {
        BootMethodArg::Simple => simple_bootstrap(&data.sample, &opts)?,
        BootMethodArg::Obvious => obvious_bootstrap(&data.sample, &opts)?,
    };
    write(&a.out.out_dir, "bootstrap.csv", &res.to_csv_string())?;
    write_json(&a.out.out_dir, "bootstrap.json", &res.summary())?;
    RunManifest::new("bootstrap", &a, Some(data.digest), Some(seed), data.notes).write(&a.out.out_dir)?;
    Ok(0)
}

fn cox(mut a: CoxArgs) -> Result<i32> {
    let data = load(&a.input)?;
    prepare(&a.out)?;
    let seed = seed_or_fresh(a.seed);
    a.seed = Some(seed);
    let scheme = match a.scheme {
        SchemeArg::Mandel => Scheme::Mandel,
        SchemeArg::Rennert => Scheme::Rennert,
        SchemeArg::Naive => Scheme::Naive,
    };
    let opts = CoxFitOptions {
        b: a.b,
        seed,
        npmle: a.npmle.options(),
        newton: NewtonOptions::default(),
    };
    let fit = cox_fit(&data.sample, scheme, &opts)?;
    write_json(&a.out.out_dir, "cox.json", &fit.report())?;
    write(&a.out.out_dir, "cox_replicates.csv", &fit.replicates_csv())?;
    RunManifest::new("cox", &a, Some(data.digest), Some(seed), data.notes).write(&a.out.out_dir)?;
    Ok(0)
}

#[derive(Serialize)]
struct CifSummary {
    method: CifMethod,
    b: usize,
    failures: usize,
    seed: u64,
    types: Vec<CifTypeSummary>,
}

#[derive(Serialize)]
struct CifTypeSummary {
    label: i64,
    n: usize,
    total: f64,
}

fn cif_cmd(mut a: CifArgs) -> Result<i32> {
    let data = load(&a.input)?;
    prepare(&a.out)?;
    let seed = seed_or_fresh(a.seed);
    a.seed = Some(seed);
    let opts = CifOptions {
        method: match a.method {
            CifMethodArg::Indep => CifMethod::Indep,
            CifMethodArg::Dep => CifMethod::Dep,
        },
        b: a.b,
        seed,
        level: a.level,
        npmle: a.npmle.options(),
    };
    let fit = cif(&data.sample, &opts)?;
    write(&a.out.out_dir, "cif.csv", &fit.to_long_csv())?;
    for c in &fit.curves {
        let csv = fit.curve_csv(c.label).expect("label from fit");
        write(&a.out.out_dir, &format!("cif_type_{}.csv", c.label), &csv)?;
    }
    let summary = CifSummary {
        method: fit.method,
        b: fit.b,
        failures: fit.failures,
        seed,
        types: fit
            .curves
            .iter()
            .map(|c| CifTypeSummary {
                label: c.label,
                n: c.n,
                total: c.cif.last().copied().unwrap_or(0.0),
            })
            .collect(),
    };
    write_json(&a.out.out_dir, "cif.json", &summary)?;
    RunManifest::new("cif", &a, Some(data.digest), Some(seed), data.notes).write(&a.out.out_dir)?;
    Ok(0)
}

fn indeptest(mut a: IndepArgs) -> Result<i32> {
    let data = load(&a.input)?;
    prepare(&a.out)?;
    let seed = seed_or_fresh(a.seed);
    a.seed = Some(seed);
    let test = kendall_tau_test(&data.sample, a.b, seed)?;
    write_json(&a.out.out_dir, "indeptest.json", &test)?;
    RunManifest::new("indeptest", &a, Some(data.digest), Some(seed), data.notes).write(&a.out.out_dir)?;
    Ok(0)
}

fn sef(a: SefArgs) -> Result<i32> {
    let data = load(&a.input)?;
    prepare(&a.out)?;
    let fit = sef_fit(&data.sample)?;
    write_json(&a.out.out_dir, "sef.json", &fit)?;
    write(&a.out.out_dir, "sef_curve.csv", &fit.curve_csv(a.points))?;
    RunManifest::new("sef", &a, Some(data.digest), None, data.notes).write(&a.out.out_dir)?;
    Ok(0)
}

#[derive(Serialize)]
struct Diagnosis {
    n: usize,
    ok: bool,
    s1: Vec<usize>,
    s2: Vec<usize>,
    /// Zero-based record indices.
    violating_indices: Vec<usize>,
    min_s1: usize,
    min_s2: usize,
    /// Largest gap between per-group `G` curves, when event labels exist.
    group_g_max_gap: Option<f64>,
    groups_skipped: Vec<(i64, String)>,
}

fn diagnose(a: DiagnoseArgs) -> Result<i32> {
    let data = load(&a.input)?;
    prepare(&a.out)?;
    let s = &data.sample;
    let r = existence_check(s);
    let mut out = Diagnosis {
        n: s.len(),
        ok: r.ok,
        min_s1: r.s1.iter().copied().min().unwrap_or(0),
        min_s2: r.s2.iter().copied().min().unwrap_or(0),
        s1: r.s1,
        s2: r.s2,
        violating_indices: r.violating_indices,
        group_g_max_gap: None,
        groups_skipped: Vec::new(),
    };
    if let Some(labels) = s.events() {
        let diag = g_by_group(s, labels, &a.npmle.options())?;
        let mut grid = s.x().to_vec();
        grid.sort_by(f64::total_cmp);
        grid.dedup();
        out.group_g_max_gap = Some(diag.max_gap(&grid));
        out.groups_skipped = diag.skipped.clone();
        write(&a.out.out_dir, "g_by_group.csv", &diag.to_csv_string())?;
    }
    write_json(&a.out.out_dir, "diagnose.json", &out)?;
    RunManifest::new("diagnose", &a, Some(data.digest), None, data.notes).write(&a.out.out_dir)?;
    Ok(0)
}

fn simulate(mut a: SimulateArgs) -> Result<i32> {
    prepare(&a.out)?;
    let mut cfg = match &a.preset {
        Some(p) => ExperimentConfig::preset(p)?,
        None => ExperimentConfig::default(),
    };
    let mut digest = None;
    if let Some(path) = &a.config {
        digest = Some(manifest::sha256_file(path)?);
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
        cfg.apply_text(&text)?;
    }
    if a.full {
        cfg = cfg.full_scale();
    }
    if let Some(n) = a.n {
        cfg.n = n;
    }
    if let Some(t) = a.trials {
        cfg.trials = t;
    }
    if let Some(b) = a.b {
        cfg.b = b;
    }
    cfg.seed = match a.seed {
        Some(s) => s,
        None if a.config.is_some() => cfg.seed,
        None => rand::random(),
    };
    a.seed = Some(cfg.seed);
    let report = run_experiment(&cfg)?;
    write(&a.out.out_dir, "simulation.csv", &report.to_csv_string())?;
    write_json(&a.out.out_dir, "simulation.json", &report)?;
    let mut notes = Vec::new();
    if report.insufficient_trials {
        notes.push("fewer than two usable trials: SD undefined".into());
    }
    RunManifest::new("simulate", &a, digest, Some(cfg.seed), notes).write(&a.out.out_dir)?;
    Ok(0)
}

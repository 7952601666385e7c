//! Command-line front end.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical failure.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::baselines::{rank1_oracle, vanilla_nmf, BaselineConfig};
use crate::data::{gen_synthetic, preset, SyntheticSpec, PRESETS};
use crate::error::Error;
use crate::io::{load_matrix, save_matrix, Format};
use crate::matrix::Matrix;
use crate::rank::{extract_rank, min_edges_lower_bound, reduction_factor, RankReport, DEFAULT_ENERGY_FLOOR};
use crate::solver::{solve, SolveResult, SolverConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "sonnmf", version, about = "Sum-of-norms regularized NMF with rank estimation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate the synthetic 4 x n data set.
    Gen(GenArgs),
    /// Factorize a data matrix and write W, H, the cost trace and a report.
    Solve(SolveArgs),
    /// Cluster the columns of a factorization and estimate its rank.
    Rank(RankArgs),
    /// Run unregularized NMF or the rank-one eigenvector oracle.
    Baseline(BaselineArgs),
    /// Print the pairwise-term lower bound and the reduction factor.
    Bound(BoundArgs),
}

#[derive(Debug, Args)]
struct GenArgs {
    /// exp1 or exp2.
    #[arg(long)]
    preset: String,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 500)]
    n: usize,
    #[arg(long, default_value_t = 0.01)]
    noise: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Also write W_true.csv and H_true.csv into this directory.
    #[arg(long)]
    truth_dir: Option<PathBuf>,
    /// csv or dense_f64; inferred from the extension when omitted.
    #[arg(long)]
    format: Option<String>,
}

#[derive(Debug, Args)]
struct InputArgs {
    #[arg(long)]
    input: PathBuf,
    /// csv or dense_f64; inferred from the extension when omitted.
    #[arg(long)]
    format: Option<String>,
    /// Skip one header line of a CSV input.
    #[arg(long)]
    header: bool,
}

#[derive(Debug, Args)]
struct SolveArgs {
    #[command(flatten)]
    input: InputArgs,
    /// Table row supplying r, lambda, gamma and max-iter when those are omitted.
    #[arg(long)]
    preset: Option<String>,
    #[arg(short = 'r', long = "rank")]
    r: Option<usize>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    max_iter: Option<usize>,
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
    #[arg(long, default_value_t = 10)]
    w_sweeps: usize,
    #[arg(long, default_value_t = 1)]
    h_inner: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Merging tolerance for the rank report (default 0.02 max column norm).
    #[arg(long)]
    tau: Option<f64>,
    #[arg(long, default_value_t = DEFAULT_ENERGY_FLOOR)]
    energy_floor: f64,
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Debug, Args)]
struct RankArgs {
    #[arg(long)]
    w: PathBuf,
    #[arg(long)]
    h: PathBuf,
    #[arg(long)]
    tau: Option<f64>,
    #[arg(long, default_value_t = DEFAULT_ENERGY_FLOOR)]
    energy_floor: f64,
    /// Write the report here as well as to stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    header: bool,
}

#[derive(Debug, Args)]
struct BaselineArgs {
    #[command(flatten)]
    input: InputArgs,
    /// vanilla or rank1.
    #[arg(long, default_value = "vanilla")]
    method: String,
    #[arg(short = 'r', long = "rank", default_value_t = 1)]
    r: usize,
    #[arg(long, default_value_t = 1000)]
    max_iter: usize,
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Debug, Args)]
struct BoundArgs {
    #[arg(long)]
    r: u64,
    #[arg(long)]
    rstar: u64,
}

/// Failure tagged with the exit code it maps to.
struct Failure {
    code: i32,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Failure { code: EXIT_USAGE, message: message.into() }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Numerical(_) => EXIT_NUMERICAL,
            _ => EXIT_DATA,
        };
        Failure { code, message: e.to_string() }
    }
}

type CliResult<T> = std::result::Result<T, Failure>;

pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).try_init();
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let outcome = match cli.command {
        Command::Gen(a) => cmd_gen(a),
        Command::Solve(a) => cmd_solve(a),
        Command::Rank(a) => cmd_rank(a),
        Command::Baseline(a) => cmd_baseline(a),
        Command::Bound(a) => cmd_bound(a),
    };
    match outcome {
        Ok(()) => EXIT_OK,
        Err(f) => {
            eprintln!("error: {}", f.message);
            f.code
        }
    }
}

fn parse_format(explicit: Option<&str>, path: &Path) -> CliResult<Format> {
    match explicit {
        Some(s) => s.parse().map_err(|e: Error| Failure::usage(e.to_string())),
        None => Ok(Format::from_path(path)),
    }
}

fn load_input(input: &InputArgs) -> CliResult<Matrix> {
    let format = parse_format(input.format.as_deref(), &input.input)?;
    Ok(load_matrix(&input.input, format, input.header)?)
}

fn prepare_dir(dir: &Path) -> CliResult<()> {
    fs::create_dir_all(dir).map_err(|e| Failure::from(Error::Io(e)))
}

fn cmd_gen(a: GenArgs) -> CliResult<()> {
    let p = match a.preset.as_str() {
        "exp1" | "exp2" => preset(&a.preset).expect("synthetic presets exist"),
        other => return Err(Failure::usage(format!("unknown preset `{other}`, expected exp1 or exp2"))),
    };
    let spec = SyntheticSpec {
        n_samples: a.n,
        noise_scale: a.noise,
        seed: a.seed,
        ..SyntheticSpec::default()
    };
    spec.validate().map_err(|e| Failure::usage(e.to_string()))?;
    let data = gen_synthetic(&spec)?;
    let format = parse_format(a.format.as_deref(), &a.out)?;
    if let Some(parent) = a.out.parent().filter(|p| !p.as_os_str().is_empty()) {
        prepare_dir(parent)?;
    }
    save_matrix(&a.out, &data.m, format)?;
    if let Some(dir) = &a.truth_dir {
        prepare_dir(dir)?;
        save_matrix(&dir.join("W_true.csv"), &data.w_true, Format::Csv)?;
        save_matrix(&dir.join("H_true.csv"), &data.h_true, Format::Csv)?;
    }
    println!(
        "wrote {}x{} matrix to {}; preset {}: -r {} --lambda {:e} --gamma {} --max-iter {}",
        data.m.rows(),
        data.m.cols(),
        a.out.display(),
        p.name,
        p.r,
        p.lambda,
        p.gamma,
        p.max_iter
    );
    Ok(())
}

#[derive(Serialize)]
struct SolveReport<'a> {
    command: &'static str,
    input: String,
    shape: (usize, usize),
    config: &'a SolverConfig,
    seed: u64,
    status: crate::solver::Status,
    iterations: usize,
    wall_time: f64,
    final_objective: &'a crate::objective::ObjectiveBreakdown,
    tau: Option<f64>,
    energy_floor: f64,
    rank: Option<&'a RankReport>,
    rank_error: Option<String>,
}

fn solver_config(a: &SolveArgs) -> CliResult<SolverConfig> {
    let table = match &a.preset {
        Some(name) => Some(preset(name).ok_or_else(|| {
            let names: Vec<&str> = PRESETS.iter().map(|p| p.name).collect();
            Failure::usage(format!("unknown preset `{name}`, expected one of {}", names.join(", ")))
        })?),
        None => None,
    };
    let pick = |given: Option<f64>, from_table: Option<f64>, name: &str| {
        given
            .or(from_table)
            .ok_or_else(|| Failure::usage(format!("--{name} is required without --preset")))
    };
    let r = a
        .r
        .or(table.map(|p| p.r))
        .ok_or_else(|| Failure::usage("-r is required without --preset"))?;
    let cfg = SolverConfig {
        r,
        lambda: pick(a.lambda, table.map(|p| p.lambda), "lambda")?,
        gamma: pick(a.gamma, table.map(|p| p.gamma), "gamma")?,
        max_iter: a.max_iter.or(table.map(|p| p.max_iter)).unwrap_or(1000),
        tol: a.tol,
        w_sweeps: a.w_sweeps,
        h_inner: a.h_inner,
        seed: a.seed,
        ..SolverConfig::default()
    };
    cfg.validate().map_err(|e| Failure::usage(e.to_string()))?;
    if let Some(tau) = a.tau {
        if !(tau >= 0.0) {
            return Err(Failure::usage("--tau must be nonnegative"));
        }
    }
    if !(a.energy_floor >= 0.0) {
        return Err(Failure::usage("--energy-floor must be nonnegative"));
    }
    Ok(cfg)
}

fn write_factors(dir: &Path, res: &SolveResult) -> CliResult<()> {
    save_matrix(&dir.join("W.csv"), &res.w, Format::Csv)?;
    save_matrix(&dir.join("H.csv"), &res.h, Format::Csv)?;
    fs::write(dir.join("trace.csv"), trace_csv(res)).map_err(|e| Failure::from(Error::Io(e)))
}

/// `iter,fit,son,hinge,total,wall_time`, one row per recorded iterate.
pub fn trace_csv(res: &SolveResult) -> String {
    let mut out = String::from("iter,fit,son,hinge,total,wall_time\n");
    for (k, (t, s)) in res.trace.iter().zip(&res.elapsed).enumerate() {
        out.push_str(&format!("{k},{:?},{:?},{:?},{:?},{:?}\n", t.fit, t.son, t.hinge, t.total, s));
    }
    out
}

fn write_json(path: &Path, value: &impl Serialize) -> CliResult<()> {
    let text = serde_json::to_string_pretty(value).map_err(Error::from)?;
    let mut file = fs::File::create(path).map_err(Error::from)?;
    file.write_all(text.as_bytes()).map_err(Error::from)?;
    file.write_all(b"\n").map_err(Error::from)?;
    Ok(())
}

fn cmd_solve(a: SolveArgs) -> CliResult<()> {
    let cfg = solver_config(&a)?;
    let m = load_input(&a.input)?;
    prepare_dir(&a.out_dir)?;
    let res = solve(&m, &cfg, None)?;
    write_factors(&a.out_dir, &res)?;
    let (rank, rank_error) = match extract_rank(&res.w, &res.h, a.tau, a.energy_floor) {
        Ok(rep) => (Some(rep), None),
        Err(e) => (None, Some(e.to_string())),
    };
    let report = SolveReport {
        command: "solve",
        input: a.input.input.display().to_string(),
        shape: m.shape(),
        config: &cfg,
        seed: cfg.seed,
        status: res.status,
        iterations: res.iterations,
        wall_time: res.wall_time,
        final_objective: res.final_objective(),
        tau: rank.as_ref().and_then(|r| r.tau_used),
        energy_floor: a.energy_floor,
        rank: rank.as_ref(),
        rank_error,
    };
    write_json(&a.out_dir.join("report.json"), &report)?;
    let f = res.final_objective();
    println!(
        "status {:?} after {} iterations; total {:e} (fit {:e}, son {:e}, hinge {:e}); estimated rank {}",
        res.status,
        res.iterations,
        f.total,
        f.fit,
        f.son,
        f.hinge,
        rank.map(|r| r.estimated_rank.to_string()).unwrap_or_else(|| "n/a".into())
    );
    Ok(())
}

fn cmd_rank(a: RankArgs) -> CliResult<()> {
    if !(a.energy_floor >= 0.0) || a.tau.is_some_and(|t| !(t >= 0.0)) {
        return Err(Failure::usage("--tau and --energy-floor must be nonnegative"));
    }
    let w = load_matrix(&a.w, Format::from_path(&a.w), a.header)?;
    let h = load_matrix(&a.h, Format::from_path(&a.h), a.header)?;
    let report = extract_rank(&w, &h, a.tau, a.energy_floor)?;
    let text = serde_json::to_string_pretty(&report).map_err(Error::from)?;
    if let Some(path) = &a.out {
        write_json(path, &report)?;
    }
    println!("{text}");
    Ok(())
}

#[derive(Serialize)]
struct BaselineReport<'a> {
    command: &'static str,
    method: &'a str,
    input: String,
    config: &'a BaselineConfig,
    seed: u64,
    status: crate::solver::Status,
    iterations: usize,
    wall_time: f64,
    final_objective: &'a crate::objective::ObjectiveBreakdown,
}

fn cmd_baseline(a: BaselineArgs) -> CliResult<()> {
    let cfg = BaselineConfig {
        r: a.r,
        max_iter: a.max_iter,
        tol: a.tol,
        seed: a.seed,
    };
    if !matches!(a.method.as_str(), "vanilla" | "rank1") {
        return Err(Failure::usage(format!("unknown method `{}`, expected vanilla or rank1", a.method)));
    }
    if cfg.r == 0 || cfg.max_iter == 0 || !(cfg.tol > 0.0) {
        return Err(Failure::usage("r, max-iter and tol must be positive"));
    }
    let m = load_input(&a.input)?;
    prepare_dir(&a.out_dir)?;
    if a.method == "rank1" {
        let v = rank1_oracle(&m)?;
        save_matrix(&a.out_dir.join("oracle.csv"), &Matrix::from_vec(v.len(), 1, v)?, Format::Csv)?;
        println!("wrote {}", a.out_dir.join("oracle.csv").display());
        return Ok(());
    }
    let res = vanilla_nmf(&m, &cfg)?;
    write_factors(&a.out_dir, &res)?;
    let report = BaselineReport {
        command: "baseline",
        method: &a.method,
        input: a.input.input.display().to_string(),
        config: &cfg,
        seed: cfg.seed,
        status: res.status,
        iterations: res.iterations,
        wall_time: res.wall_time,
        final_objective: res.final_objective(),
    };
    write_json(&a.out_dir.join("report.json"), &report)?;
    println!("status {:?} after {} iterations; fit {:e}", res.status, res.iterations, res.final_objective().fit);
    Ok(())
}

fn cmd_bound(a: BoundArgs) -> CliResult<()> {
    let edges = min_edges_lower_bound(a.r, a.rstar).map_err(|e| Failure::usage(e.to_string()))?;
    println!("{edges}");
    if a.r >= 2 {
        let rf = reduction_factor(a.r, a.rstar).map_err(|e| Failure::usage(e.to_string()))?;
        println!("reduction_factor {rf}");
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn usage_errors_exit_one() {
        assert_eq!(run(["sonnmf"]), EXIT_USAGE);
        assert_eq!(run(["sonnmf", "bound", "--r", "3"]), EXIT_USAGE);
        assert_eq!(run(["sonnmf", "bound", "--r", "3", "--rstar", "5"]), EXIT_USAGE);
        assert_eq!(run(["sonnmf", "gen", "--preset", "swimmer", "--out", "x.csv"]), EXIT_USAGE);
    }

    #[test]
    fn bound_succeeds() {
        assert_eq!(run(["sonnmf", "bound", "--r", "1000", "--rstar", "25"]), EXIT_OK);
        assert_eq!(run(["sonnmf", "bound", "--r", "1", "--rstar", "1"]), EXIT_OK);
    }

    #[test]
    fn help_exits_zero() {
        assert_eq!(run(["sonnmf", "--help"]), EXIT_OK);
    }
}

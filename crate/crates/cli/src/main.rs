//! `saa`: generate synthetic data, fit sparse archetypes, evaluate fits.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::info;
use serde::{Deserialize, Serialize};
use serde_json::json;

use saa_core::eval::{cluster_assign, cluster_metrics, robustness_report, synth_instance};
use saa_core::io::{read_json, read_labels, read_matrix, write_json, write_labels, write_matrix, write_table, SCHEMA};
use saa_core::local_search::SwapRecord;
use saa_core::mip::MipConfig;
use saa_core::pipeline::{fit, run_sweep, sweep_means, FitOptions, InitKind, SweepRow, SweepSpec};
use saa_core::solver::SolveTrace;
use saa_core::{LambdaSpec, Matrix, SaaConfig, SaaError};

#[derive(Parser)]
#[command(name = "saa", version, about = "Sparse archetypal analysis")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Draw a synthetic instance and write it to a directory.
    Synth(SynthArgs),
    /// Fit archetypes to a data matrix.
    Fit(FitArgs),
    /// Score a fit against ground truth, or run a synthetic sweep.
    #[command(subcommand)]
    Eval(EvalCommand),
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long)]
    m: usize,
    #[arg(long)]
    n: usize,
    #[arg(long)]
    k: usize,
    #[arg(long, default_value_t = 0.1)]
    sigma_z: f64,
    #[arg(long, default_value_t = 0.2)]
    zero_frac: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

/// Flags named after the fields of `SaaConfig`. Unset flags keep the value
/// from `--config` or the defaults.
#[derive(Args, Clone)]
struct ConfigArgs {
    /// JSON file with a full or partial solver config.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    ell: Option<usize>,
    /// A value, a comma list, or `log:hi:lo:n`.
    #[arg(long, default_value = "log:30:1:8")]
    lambda: String,
    #[arg(long)]
    eps_safeguard: Option<f64>,
    #[arg(long)]
    tol_objective: Option<f64>,
    #[arg(long)]
    tol_stationary: Option<f64>,
    #[arg(long)]
    max_iter: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args, Clone)]
struct StageArgs {
    #[arg(long, default_value = "mip")]
    init: InitKind,
    #[arg(long, default_value = "on", value_parser = ["on", "off"])]
    ls: String,
    #[arg(long, default_value_t = 1000)]
    max_swaps: usize,
    #[arg(long, default_value_t = 1e-4)]
    tol_gap: f64,
    #[arg(long, default_value_t = 100)]
    max_rounds: usize,
    /// Branch-and-bound nodes per MILP; unlimited when unset.
    #[arg(long)]
    node_limit: Option<usize>,
    /// Seconds allowed for the outer-approximation loop.
    #[arg(long)]
    time_budget: Option<f64>,
}

#[derive(Args)]
struct FitArgs {
    /// Data matrix, headerless CSV.
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    cfg: ConfigArgs,
    #[command(flatten)]
    stages: StageArgs,
}

#[derive(Subcommand)]
enum EvalCommand {
    /// Robustness of one fit against a `synth` directory.
    Report(ReportArgs),
    /// Synthetic grid over noise levels, budgets and seeds.
    Sweep(SweepArgs),
}

#[derive(Args)]
struct ReportArgs {
    /// Directory written by `saa synth`.
    #[arg(long)]
    truth: PathBuf,
    /// Directory written by `saa fit`.
    #[arg(long)]
    fit: PathBuf,
    /// Reference labels; defaults to labels.csv in the truth directory if present.
    #[arg(long)]
    labels: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long)]
    m: usize,
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 0.2)]
    zero_frac: f64,
    #[arg(long, value_delimiter = ',', default_value = "0.05,0.2,0.5")]
    sigmas: Vec<f64>,
    /// Budgets as fractions of n·k.
    #[arg(long, value_delimiter = ',', default_value = "0.5")]
    ell_fracs: Vec<f64>,
    /// Seed list, or `a..b` for a half-open range.
    #[arg(long, default_value = "0..5")]
    seeds: String,
    #[command(flatten)]
    cfg: ConfigArgs,
    #[command(flatten)]
    stages: StageArgs,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Serialize, Deserialize)]
struct Manifest {
    schema: String,
    m: usize,
    n: usize,
    k: usize,
    sigma_z: f64,
    zero_frac: f64,
    seed: u64,
    nnz_h0: usize,
}

#[derive(Serialize, Deserialize)]
struct Summary {
    schema: String,
    psi: f64,
    fit: f64,
    reg: f64,
    lambda: f64,
    nnz: usize,
    psi_before_search: f64,
    swaps_accepted: usize,
    converged: bool,
    stationarity_residual: f64,
    tie_at_budget: bool,
    config: SaaConfig,
    options: FitOptions,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Synth(a) => cmd_synth(&a),
        Command::Fit(a) => cmd_fit(&a),
        Command::Eval(EvalCommand::Report(a)) => cmd_report(&a),
        Command::Eval(EvalCommand::Sweep(a)) => cmd_sweep(&a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("saa: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &SaaError) -> u8 {
    match e {
        SaaError::InvalidInput(_) | SaaError::ShapeMismatch { .. } | SaaError::Parse { .. } => 2,
        SaaError::Io { .. } => 3,
        SaaError::Numerical(_) => 4,
    }
}

fn create_dir(path: &Path) -> Result<(), SaaError> {
    std::fs::create_dir_all(path).map_err(|source| SaaError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn cmd_synth(a: &SynthArgs) -> Result<(), SaaError> {
    let inst = synth_instance::<f64>(a.m, a.n, a.k, a.sigma_z, a.zero_frac, a.seed)?;
    create_dir(&a.out)?;
    write_matrix(&a.out.join("X.csv"), &inst.x)?;
    write_matrix(&a.out.join("X0.csv"), &inst.x0)?;
    write_matrix(&a.out.join("H0.csv"), &inst.h0)?;
    write_matrix(&a.out.join("W0.csv"), &inst.w0)?;
    write_matrix(&a.out.join("Z.csv"), &inst.z)?;
    write_labels(&a.out.join("labels.csv"), &inst.labels())?;
    let manifest = Manifest {
        schema: SCHEMA.into(),
        m: a.m,
        n: a.n,
        k: a.k,
        sigma_z: a.sigma_z,
        zero_frac: a.zero_frac,
        seed: a.seed,
        nnz_h0: inst.h0.nnz(0.0),
    };
    write_json(&a.out.join("manifest.json"), &manifest)
}

impl ConfigArgs {
    fn resolve(&self) -> Result<SaaConfig, SaaError> {
        let mut cfg: SaaConfig = match &self.config {
            Some(p) => read_json(p)?,
            None => SaaConfig::default(),
        };
        if self.config.is_none() || self.lambda != "log:30:1:8" {
            cfg.lambda = self.lambda.parse::<LambdaSpec>()?;
        }
        macro_rules! set {
            ($($f:ident),*) => { $(if let Some(v) = self.$f { cfg.$f = v; })* };
        }
        set!(k, ell, eps_safeguard, tol_objective, tol_stationary, max_iter, seed);
        Ok(cfg)
    }
}

impl StageArgs {
    fn options(&self) -> Result<FitOptions, SaaError> {
        if !(self.tol_gap > 0.0) {
            return Err(SaaError::InvalidInput("--tol-gap must be positive".into()));
        }
        Ok(FitOptions {
            init: self.init,
            local_search: self.ls == "on",
            max_swaps: self.max_swaps,
            mip: MipConfig {
                tol_gap: self.tol_gap,
                max_rounds: self.max_rounds,
                node_limit: self.node_limit,
                time_budget: self.time_budget,
                ..MipConfig::default()
            },
            ..FitOptions::default()
        })
    }
}

fn trace_rows(traces: &[(f64, SolveTrace<f64>)]) -> Vec<Vec<String>> {
    let mut rows = Vec::new();
    for (lambda, t) in traces {
        for mut r in t.csv_rows() {
            r.insert(1, saa_core::io::fmt_f64(*lambda));
            rows.push(r);
        }
    }
    rows
}

fn cmd_fit(a: &FitArgs) -> Result<(), SaaError> {
    let x: Matrix = read_matrix(&a.input)?;
    let cfg = a.cfg.resolve()?;
    let opts = a.stages.options()?;
    let out = fit(&x, &cfg, &opts)?;
    create_dir(&a.out)?;
    write_matrix(&a.out.join("H.csv"), &out.fac.h)?;
    write_matrix(&a.out.join("W.csv"), &out.fac.w)?;
    write_matrix(&a.out.join("Wt.csv"), &out.fac.wt)?;

    let mut header = SolveTrace::<f64>::CSV_HEADER.to_vec();
    header.insert(1, "lambda");
    write_table(&a.out.join("trace.csv"), &header, &trace_rows(&out.traces))?;
    let swaps: Vec<Vec<String>> = out
        .swaps
        .iter()
        .enumerate()
        .map(|(i, s)| s.csv_row(i))
        .collect();
    write_table(&a.out.join("swaps.csv"), &SwapRecord::CSV_HEADER, &swaps)?;
    if let Some(cuts) = &out.cuts {
        write_json(&a.out.join("cuts.json"), cuts)?;
    }
    let last = &out.traces.last().expect("at least one solve").1;
    let summary = Summary {
        schema: SCHEMA.into(),
        psi: out.objective.total,
        fit: out.objective.fit,
        reg: out.objective.reg,
        lambda: cfg.lambda.final_value(),
        nnz: out.fac.h.nnz(0.0),
        psi_before_search: out.objective_before_search,
        swaps_accepted: out.swaps_accepted,
        converged: last.converged,
        stationarity_residual: last.stationarity_residual,
        tie_at_budget: last.tie_at_budget,
        config: cfg,
        options: opts,
    };
    write_json(&a.out.join("summary.json"), &summary)?;
    write_json(
        &a.out.join("timings.json"),
        &json!({ "schema": SCHEMA, "seconds": out.timings }),
    )?;
    info!("fit done: Ψ = {}", out.objective.total);
    Ok(())
}

fn cmd_report(a: &ReportArgs) -> Result<(), SaaError> {
    let h0: Matrix = read_matrix(&a.truth.join("H0.csv"))?;
    let x0: Matrix = read_matrix(&a.truth.join("X0.csv"))?;
    let z: Matrix = read_matrix(&a.truth.join("Z.csv"))?;
    let h: Matrix = read_matrix(&a.fit.join("H.csv"))?;
    let summary: Summary = read_json(&a.fit.join("summary.json"))?;
    if h.shape() != h0.shape() {
        return Err(SaaError::ShapeMismatch {
            context: "eval report",
            expected: format!("Ĥ shaped like H₀ {:?}", h0.shape()),
            got: format!("{:?}", h.shape()),
        });
    }
    let report = robustness_report(&h0, &h, &x0, &z, summary.config.ell)?;
    let default_labels = a.truth.join("labels.csv");
    let labels_path = match &a.labels {
        Some(p) => Some(p.clone()),
        None => default_labels.exists().then_some(default_labels),
    };
    let clustering = match labels_path {
        Some(p) => {
            let truth = read_labels(&p)?;
            let x: Matrix = read_matrix(&a.truth.join("X.csv"))?;
            let est = cluster_assign(&x, &h)?;
            Some(cluster_metrics(&truth, &est, h.rows())?)
        }
        None => None,
    };
    write_json(
        &a.out,
        &json!({
            "schema": SCHEMA,
            "psi": summary.psi,
            "robustness": report,
            "clustering": clustering,
        }),
    )
}

fn parse_seeds(s: &str) -> Result<Vec<u64>, SaaError> {
    let bad = || SaaError::InvalidInput(format!("bad seed list {s:?}"));
    let seeds: Vec<u64> = match s.split_once("..") {
        Some((a, b)) => {
            let a: u64 = a.trim().parse().map_err(|_| bad())?;
            let b: u64 = b.trim().parse().map_err(|_| bad())?;
            (a..b).collect()
        }
        None => s
            .split(',')
            .map(|p| p.trim().parse())
            .collect::<Result<_, _>>()
            .map_err(|_| bad())?,
    };
    if seeds.is_empty() {
        return Err(bad());
    }
    Ok(seeds)
}

fn cmd_sweep(a: &SweepArgs) -> Result<(), SaaError> {
    // `--k` comes from the shared config flags; `--ell` and `--seed` are set per grid point.
    let k = a.cfg.k.ok_or_else(|| SaaError::InvalidInput("eval sweep needs --k".into()))?;
    let spec = SweepSpec {
        m: a.m,
        n: a.n,
        k,
        zero_frac: a.zero_frac,
        sigmas: a.sigmas.clone(),
        ell_fracs: a.ell_fracs.clone(),
        seeds: parse_seeds(&a.seeds)?,
        cfg: a.cfg.resolve()?,
        fit: a.stages.options()?,
    };
    let rows = run_sweep(&spec)?;
    create_dir(&a.out)?;
    let table: Vec<Vec<String>> = rows.iter().map(SweepRow::csv_row).collect();
    write_table(&a.out.join("sweep.csv"), &SweepRow::CSV_HEADER, &table)?;
    write_json(
        &a.out.join("means.json"),
        &json!({ "schema": SCHEMA, "spec": spec, "means": sweep_means(&rows) }),
    )
}

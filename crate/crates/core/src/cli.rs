//! The `spca` command line.
//!
//! ```text
//! spca solve            --input A.mtx --variance l2 --sparsity l0 --mode constraint --s 5
//! spca variance-sweep   --input A.mtx ... --grid 1,2,4,8
//! spca bench-strategies --input A.mtx ... --strategies nai,sfa,bat:16,otf:16
//! ```
//!
//! Exit codes: 0 on success, 2 for bad input (flags, files, parameters), 3
//! when no start produced a nonzero loading. `SPCA_THREADS` sets the worker
//! pool width.

use std::ffi::OsString;
use std::fs::File;
use std::io::{self, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::error::SpcaError;
use crate::formulations::{Formulation, SparsityNorm, Usage, VarianceNorm};
use crate::matrix::{load_matrix, DataMatrix, MatrixFormat};
use crate::multistart::{run_multistart, sweep_stats, MultiStartPlan, MultiStartReport, Strategy};
use crate::solver::{RunStatus, SolverConfig, StartScheme};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_DEGENERATE: i32 = 3;

pub const THREADS_ENV: &str = "SPCA_THREADS";

#[derive(Debug, Parser)]
#[command(name = "spca", version, about = "Sparse PCA by alternating maximization")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a multi-start campaign and write a JSON report.
    Solve(CampaignArgs),
    /// Run one campaign per parameter value and write per-start CSV rows.
    VarianceSweep {
        #[command(flatten)]
        campaign: CampaignArgs,
        /// Comma-separated values of s (constraint mode) or gamma (penalty mode).
        /// Defaults to s = 1, 2, 4, ... up to p in constraint mode.
        #[arg(long, value_delimiter = ',')]
        grid: Vec<f64>,
    },
    /// Run the same campaign under several schedules and write a CSV comparison.
    BenchStrategies {
        #[command(flatten)]
        campaign: CampaignArgs,
        /// Comma-separated schedules; `bat:R` and `otf:R` override --batch.
        #[arg(long, value_delimiter = ',', default_value = "nai,sfa,bat,otf")]
        strategies: Vec<String>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FormatArg {
    Mtx,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum VarianceArg {
    L1,
    L2,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SparsityArg {
    L0,
    L1,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Constraint,
    Penalty,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum StrategyArg {
    Nai,
    Sfa,
    Bat,
    Otf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SchemeArg {
    Gaussian,
    Column,
}

#[derive(Debug, Clone, Args)]
pub struct CampaignArgs {
    /// Data matrix, rows are observations.
    #[arg(long)]
    pub input: PathBuf,
    /// File format; inferred from the extension when omitted.
    #[arg(long, value_enum)]
    pub format: Option<FormatArg>,
    /// The CSV file starts with a header row.
    #[arg(long)]
    pub csv_header: bool,
    /// Subtract column means before solving.
    #[arg(long)]
    pub center: bool,
    #[arg(long, value_enum, default_value = "l2")]
    pub variance: VarianceArg,
    #[arg(long, value_enum, default_value = "l0")]
    pub sparsity: SparsityArg,
    #[arg(long, value_enum, default_value = "constraint")]
    pub mode: ModeArg,
    /// Sparsity level for constraint mode.
    #[arg(long)]
    pub s: Option<usize>,
    /// Penalty weight for penalty mode.
    #[arg(long)]
    pub gamma: Option<f64>,
    /// Number of starting points.
    #[arg(long, default_value_t = 64)]
    pub starts: usize,
    #[arg(long, value_enum, default_value = "otf")]
    pub strategy: StrategyArg,
    /// Block width for bat and otf; defaults to min(16, starts).
    #[arg(long)]
    pub batch: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 1e-6)]
    pub tol: f64,
    #[arg(long, default_value_t = 200)]
    pub max_iterations: usize,
    #[arg(long, value_enum, default_value = "gaussian")]
    pub start_scheme: SchemeArg,
    /// Output file; standard output when omitted.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug)]
enum CliError {
    Input(String),
    Degenerate(String),
}

impl From<SpcaError> for CliError {
    fn from(e: SpcaError) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Input(e.to_string())
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

impl From<StrategyArg> for Strategy {
    fn from(s: StrategyArg) -> Self {
        match s {
            StrategyArg::Nai => Strategy::Nai,
            StrategyArg::Sfa => Strategy::Sfa,
            StrategyArg::Bat => Strategy::Bat,
            StrategyArg::Otf => Strategy::Otf,
        }
    }
}

impl CampaignArgs {
    fn load(&self) -> CliResult<DataMatrix> {
        let format = match self.format {
            Some(FormatArg::Mtx) => MatrixFormat::MatrixMarket,
            Some(FormatArg::Csv) => MatrixFormat::Csv {
                has_header: self.csv_header,
            },
            None => match MatrixFormat::from_path(&self.input) {
                Some(MatrixFormat::Csv { .. }) => MatrixFormat::Csv {
                    has_header: self.csv_header,
                },
                Some(f) => f,
                None => {
                    return Err(CliError::Input(format!(
                        "cannot infer the format of {}; pass --format",
                        self.input.display()
                    )))
                }
            },
        };
        let a =
            load_matrix(&self.input, format).map_err(|e| CliError::Input(format!("{}: {e}", self.input.display())))?;
        Ok(if self.center { a.center_columns() } else { a })
    }

    fn variance(&self) -> VarianceNorm {
        match self.variance {
            VarianceArg::L1 => VarianceNorm::L1,
            VarianceArg::L2 => VarianceNorm::L2,
        }
    }

    fn sparsity(&self) -> SparsityNorm {
        match self.sparsity {
            SparsityArg::L0 => SparsityNorm::L0,
            SparsityArg::L1 => SparsityNorm::L1,
        }
    }

    /// Formulation with the parameter taken from `param`, or from --s/--gamma.
    fn formulation(&self, p: usize, param: Option<f64>) -> CliResult<Formulation> {
        let form = match self.mode {
            ModeArg::Constraint => {
                let s = match param {
                    Some(v) => {
                        if v.fract() != 0.0 || v < 0.0 {
                            return Err(CliError::Input(format!("s must be a whole number, got {v}")));
                        }
                        v as usize
                    }
                    None => self
                        .s
                        .ok_or_else(|| CliError::Input("--s is required with --mode constraint".into()))?,
                };
                if s == 0 || s > p {
                    return Err(CliError::Input(format!("s must be in [1, {p}], got {s}")));
                }
                Formulation::constrained(self.variance(), self.sparsity(), s)
            }
            ModeArg::Penalty => {
                let gamma = param
                    .or(self.gamma)
                    .ok_or_else(|| CliError::Input("--gamma is required with --mode penalty".into()))?;
                Formulation::penalized(self.variance(), self.sparsity(), gamma)
            }
        };
        form.validate(p)?;
        Ok(form)
    }

    fn batch(&self) -> usize {
        self.batch.unwrap_or(self.starts.clamp(1, 16))
    }

    fn plan(&self, strategy: Strategy, r: usize) -> CliResult<MultiStartPlan> {
        let scheme = match self.start_scheme {
            SchemeArg::Gaussian => StartScheme::GaussianSphere,
            SchemeArg::Column => StartScheme::Column,
        };
        let plan = MultiStartPlan::new(self.starts, strategy, r, self.seed).with_scheme(scheme);
        plan.validate()?;
        Ok(plan)
    }

    fn config(&self) -> CliResult<SolverConfig> {
        let cfg = SolverConfig {
            max_iterations: self.max_iterations,
            tol: self.tol,
            seed: self.seed,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn output(&self) -> CliResult<Box<dyn Write>> {
        Ok(match &self.output {
            Some(path) => Box::new(io::BufWriter::new(
                File::create(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?,
            )),
            None => Box::new(io::BufWriter::new(io::stdout().lock())),
        })
    }
}

#[derive(Debug, Serialize)]
struct FormulationEcho {
    index: usize,
    variance: &'static str,
    sparsity: &'static str,
    mode: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    s: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    gamma: Option<f64>,
}

impl From<&Formulation> for FormulationEcho {
    fn from(f: &Formulation) -> Self {
        let (mode, s, gamma) = match f.usage {
            Usage::Constraint { s } => ("constraint", Some(s), None),
            Usage::Penalty { gamma } => ("penalty", None, Some(gamma)),
        };
        FormulationEcho {
            index: f.index(),
            variance: match f.variance {
                VarianceNorm::L2 => "l2",
                VarianceNorm::L1 => "l1",
            },
            sparsity: match f.sparsity {
                SparsityNorm::L0 => "l0",
                SparsityNorm::L1 => "l1",
            },
            mode,
            s,
            gamma,
        }
    }
}

#[derive(Debug, Serialize)]
struct InputEcho {
    path: String,
    n: usize,
    p: usize,
    nnz: usize,
    centered: bool,
}

#[derive(Debug, Serialize)]
struct PlanEcho {
    starts: usize,
    strategy: Strategy,
    batch: usize,
    seed: u64,
    start_scheme: StartScheme,
    tol: f64,
    max_iterations: usize,
}

#[derive(Debug, Serialize)]
struct LoadingEntry {
    index: usize,
    value: f64,
}

#[derive(Debug, Serialize)]
struct BestEcho {
    start_index: usize,
    objective: f64,
    cardinality: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    explained_variance_ratio: Option<f64>,
    iterations: usize,
    status: RunStatus,
    dimension: usize,
    loading: Vec<LoadingEntry>,
}

#[derive(Debug, Serialize)]
struct StartEcho {
    index: usize,
    objective: f64,
    iterations: usize,
    status: RunStatus,
}

/// The JSON document written by `spca solve`.
#[derive(Debug, Serialize)]
struct SolveReport {
    formulation: FormulationEcho,
    input: InputEcho,
    plan: PlanEcho,
    best: BestEcho,
    starts: Vec<StartEcho>,
    total_sweeps: usize,
    column_iterations: usize,
    wall_time: f64,
}

fn explained_variance_ratio(a: &DataMatrix, x: &[f64]) -> CliResult<f64> {
    let ax = a.matvec(x)?;
    let total = a.frobenius_norm_sq();
    Ok(if total > 0.0 {
        ax.iter().map(|v| v * v).sum::<f64>() / total
    } else {
        0.0
    })
}

fn solve_report(
    args: &CampaignArgs,
    a: &DataMatrix,
    form: &Formulation,
    plan: &MultiStartPlan,
    cfg: &SolverConfig,
    report: &MultiStartReport,
) -> CliResult<SolveReport> {
    let best = &report.best;
    let loading: Vec<LoadingEntry> = best
        .loading
        .iter()
        .enumerate()
        .filter(|(_, v)| **v != 0.0)
        .map(|(index, &value)| LoadingEntry { index, value })
        .collect();
    let evr = match form.variance {
        VarianceNorm::L2 => Some(explained_variance_ratio(a, &best.loading)?),
        VarianceNorm::L1 => None,
    };
    Ok(SolveReport {
        formulation: form.into(),
        input: InputEcho {
            path: args.input.display().to_string(),
            n: a.n(),
            p: a.p(),
            nnz: a.nnz(),
            centered: args.center,
        },
        plan: PlanEcho {
            starts: plan.l,
            strategy: plan.strategy,
            batch: plan.width(),
            seed: plan.seed,
            start_scheme: plan.scheme,
            tol: cfg.tol,
            max_iterations: cfg.max_iterations,
        },
        best: BestEcho {
            start_index: best.start_index,
            objective: best.objective,
            cardinality: loading.len(),
            explained_variance_ratio: evr,
            iterations: best.iterations,
            status: best.status,
            dimension: a.p(),
            loading,
        },
        starts: report
            .all_results
            .iter()
            .map(|r| StartEcho {
                index: r.start_index,
                objective: r.objective,
                iterations: r.iterations,
                status: r.status,
            })
            .collect(),
        total_sweeps: report.total_sweeps,
        column_iterations: report.column_iterations,
        wall_time: report.wall_time,
    })
}

fn all_degenerate(report: &MultiStartReport) -> bool {
    report
        .all_results
        .iter()
        .all(|r| matches!(r.status, RunStatus::Degenerate | RunStatus::ZeroLoading))
}

fn cmd_solve(args: &CampaignArgs) -> CliResult<()> {
    let a = args.load()?;
    let form = args.formulation(a.p(), None)?;
    let plan = args.plan(args.strategy.into(), args.batch())?;
    let cfg = args.config()?;
    let report = run_multistart(&form, &a, &plan, &cfg)?;
    let doc = solve_report(args, &a, &form, &plan, &cfg, &report)?;
    let mut out = args.output()?;
    serde_json::to_writer_pretty(&mut out, &doc)?;
    writeln!(out)?;
    out.flush()?;
    if all_degenerate(&report) {
        return Err(CliError::Degenerate(format!(
            "no start produced a nonzero loading ({} starts)",
            report.all_results.len()
        )));
    }
    Ok(())
}

/// Full-precision scientific notation; shortest form that round-trips.
fn sci(v: f64) -> String {
    format!("{v:e}")
}

fn default_grid(p: usize) -> Vec<f64> {
    let mut grid = Vec::new();
    let mut s = 1;
    while s < p {
        grid.push(s as f64);
        s *= 2;
    }
    grid.push(p as f64);
    grid
}

fn cmd_variance_sweep(args: &CampaignArgs, grid: &[f64]) -> CliResult<()> {
    let a = args.load()?;
    let grid = if grid.is_empty() {
        match args.mode {
            ModeArg::Constraint => default_grid(a.p()),
            ModeArg::Penalty => return Err(CliError::Input("--grid is required with --mode penalty".into())),
        }
    } else {
        grid.to_vec()
    };
    let plan = args.plan(args.strategy.into(), args.batch())?;
    let cfg = args.config()?;
    let forms = grid
        .iter()
        .map(|&v| args.formulation(a.p(), Some(v)))
        .collect::<CliResult<Vec<_>>>()?;

    let mut w = csv::Writer::from_writer(args.output()?);
    w.write_record([
        "param",
        "start",
        "objective",
        "best_objective",
        "fraction_of_best",
        "iterations",
        "status",
    ])?;
    for (form, &param) in forms.iter().zip(&grid) {
        let report = run_multistart(form, &a, &plan, &cfg)?;
        let best = report.best.objective;
        for r in &report.all_results {
            let fraction = if best > 0.0 {
                r.objective / best
            } else if r.objective == best {
                1.0
            } else {
                0.0
            };
            w.write_record([
                sci(param),
                r.start_index.to_string(),
                sci(r.objective),
                sci(best),
                sci(fraction),
                r.iterations.to_string(),
                status_name(r.status).to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

fn status_name(s: RunStatus) -> &'static str {
    match s {
        RunStatus::Running => "running",
        RunStatus::Converged => "converged",
        RunStatus::MaxIterations => "max-iterations",
        RunStatus::Degenerate => "degenerate",
        RunStatus::ZeroLoading => "zero-loading",
    }
}

/// Parses `nai`, `sfa`, `bat`, `otf`, optionally suffixed `:r`.
fn parse_strategy_item(item: &str, default_r: usize) -> CliResult<(Strategy, usize)> {
    let (name, r) = match item.split_once(':') {
        Some((name, r)) => {
            let r = r
                .trim()
                .parse::<usize>()
                .map_err(|_| CliError::Input(format!("bad batch width in '{item}'")))?;
            (name, r)
        }
        None => (item, default_r),
    };
    let strategy: Strategy = name.trim().parse()?;
    Ok((strategy, r))
}

fn cmd_bench(args: &CampaignArgs, strategies: &[String]) -> CliResult<()> {
    let a = args.load()?;
    let form = args.formulation(a.p(), None)?;
    let cfg = args.config()?;
    let entries = strategies
        .iter()
        .map(|s| {
            let (strategy, r) = parse_strategy_item(s, args.batch())?;
            Ok((strategy, args.plan(strategy, r)?))
        })
        .collect::<CliResult<Vec<_>>>()?;

    let baseline = run_multistart(&form, &a, &args.plan(Strategy::Nai, 1)?, &cfg)?;
    let mut w = csv::Writer::from_writer(args.output()?);
    w.write_record([
        "strategy",
        "r",
        "starts",
        "total_sweeps",
        "column_iterations",
        "mean_iterations",
        "wall_time",
        "speedup",
        "sweep_ratio",
        "best_objective",
    ])?;
    for (strategy, plan) in entries {
        let report = if strategy == Strategy::Nai {
            baseline.clone()
        } else {
            run_multistart(&form, &a, &plan, &cfg)?
        };
        let st = sweep_stats(&report, Some(&baseline));
        w.write_record([
            strategy.name().to_string(),
            st.width.to_string(),
            st.starts.to_string(),
            st.total_sweeps.to_string(),
            st.column_iterations.to_string(),
            sci(st.mean_iterations),
            sci(st.wall_time),
            sci(st.speedup),
            sci(st.sweep_ratio),
            sci(report.best.objective),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn configure_threads() -> CliResult<()> {
    let Some(raw) = std::env::var_os(THREADS_ENV) else {
        return Ok(());
    };
    let n = raw
        .to_str()
        .and_then(|s| s.trim().parse::<usize>().ok())
        .filter(|n| *n >= 1)
        .ok_or_else(|| CliError::Input(format!("{THREADS_ENV} must be a positive integer, got {raw:?}")))?;
    // A pool that already exists (repeated in-process calls) is kept.
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}

/// Parses `args` (including the program name) and runs the command.
/// Returns the process exit code; diagnostics go to standard error.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
        }
    };
    let outcome = configure_threads().and_then(|_| match &cli.command {
        Command::Solve(args) => cmd_solve(args),
        Command::VarianceSweep { campaign, grid } => cmd_variance_sweep(campaign, grid),
        Command::BenchStrategies { campaign, strategies } => cmd_bench(campaign, strategies),
    });
    match outcome {
        Ok(()) => EXIT_OK,
        Err(CliError::Input(msg)) => {
            eprintln!("error: {msg}");
            EXIT_INPUT
        }
        Err(CliError::Degenerate(msg)) => {
            eprintln!("error: {msg}");
            EXIT_DEGENERATE
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn strategy_items() {
        assert_eq!(parse_strategy_item("bat:4", 16).unwrap(), (Strategy::Bat, 4));
        assert_eq!(parse_strategy_item("otf", 16).unwrap(), (Strategy::Otf, 16));
        assert!(parse_strategy_item("bat:x", 16).is_err());
        assert!(parse_strategy_item("slow", 16).is_err());
    }

    #[test]
    fn grid_defaults_to_powers_of_two() {
        assert_eq!(default_grid(1), vec![1.0]);
        assert_eq!(default_grid(8), vec![1.0, 2.0, 4.0, 8.0]);
        assert_eq!(default_grid(10), vec![1.0, 2.0, 4.0, 8.0, 10.0]);
    }

    #[test]
    fn scientific_round_trip() {
        for v in [0.1, 1.0 / 3.0, 1e-300, 12345.678, 0.0] {
            assert_eq!(sci(v).parse::<f64>().unwrap(), v);
            assert!(!sci(v).contains(','));
        }
    }

    #[test]
    fn cli_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}

//! The `qudit-bell` command-line front end.
//!
//! Exit codes: 0 on success, 1 for bad input (arguments, files, tables),
//! 2 when an enumeration budget or size limit is exceeded.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use crate::bounds::{
    block_setting_label, hlnhv_bound, lhv_bound, ratio_string, Bipartition, EnumerationOptions,
    DEFAULT_BUDGET,
};
use crate::optimize::{
    critical_visibility, max_violation, optimize_with_restarts, prescribed_angles, AnglesMode,
    RestartOptions, SearchMode, SearchOptions, ViolationReport,
};
use crate::quantum::{
    ghz_bell_value, ghz_state, joint_probabilities, mix_with_noise, noisy_ghz_bell_value, noisy_ghz_table,
    PhaseConfiguration, DENSE_LIMIT,
};
use crate::scenario::{bell_value, correlation_values, BellScenario, JointProbabilityTable};
use crate::Error;

/// Values above the hybrid bound by less than this do not fire the witness.
pub const WITNESS_MARGIN: f64 = 1e-9;

/// Grid points accepted by `scan`.
const SCAN_LIMIT: usize = 1_000_000;

#[derive(Debug, Parser)]
#[command(
    name = "qudit-bell",
    version,
    about = "N-qudit Bell inequalities for full multipartite entanglement"
)]
pub struct Cli {
    #[arg(long, value_enum, default_value_t = Format::Json, global = true)]
    pub format: Format,

    /// Write the report to this file (atomically) instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    /// Worker threads for enumeration and search; defaults to all cores.
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Exhaustive hidden-variable bound.
    Bound(BoundArgs),
    /// GHZ Bell value at given or optimized angles.
    Violation(ViolationArgs),
    /// Violation ratio and critical visibility.
    Visibility(VisibilityArgs),
    /// Ratio and critical visibility over a grid of (n, d).
    Scan(ScanArgs),
    /// Bell value of a probability-table file.
    Eval(EvalArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Model {
    Hlnhv,
    Lhv,
}

#[derive(Debug, Args)]
pub struct BoundArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub d: usize,
    #[arg(long, value_enum, default_value_t = Model::Hlnhv)]
    pub model: Model,
    /// Block split such as "1,2/3"; defaults to the first n/2 parties.
    #[arg(long)]
    pub partition: Option<String>,
    #[arg(long, env = "QUDIT_BELL_BUDGET", default_value_t = DEFAULT_BUDGET)]
    pub budget: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Angles {
    #[value(alias = "paper")]
    Prescribed,
    Zero,
    OptimizedSymmetric,
    OptimizedFree,
}

#[derive(Debug, Args)]
pub struct SearchArgs {
    #[arg(long, default_value_t = 20)]
    pub restarts: usize,
    #[arg(long, default_value_t = 0x5eed)]
    pub seed: u64,
    /// Objective evaluations per restart.
    #[arg(long, default_value_t = 200_000)]
    pub max_evaluations: usize,
}

#[derive(Debug, Args)]
pub struct ViolationArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub d: usize,
    #[arg(long, value_enum, default_value_t = Angles::Prescribed, conflicts_with = "phases_file")]
    pub angles: Angles,
    /// Phase configuration JSON to evaluate instead of a preset.
    #[arg(long)]
    pub phases_file: Option<PathBuf>,
    /// Mix the GHZ state with white noise at this visibility.
    #[arg(long, default_value_t = 1.0)]
    pub visibility: f64,
    /// Also write the joint probability table to this file.
    #[arg(long)]
    pub emit_table: Option<PathBuf>,
    #[command(flatten)]
    pub search: SearchArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum VisibilityAngles {
    #[value(alias = "paper")]
    Prescribed,
    OptimizedSymmetric,
    OptimizedFree,
}

#[derive(Debug, Args)]
pub struct VisibilityArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub d: usize,
    #[arg(long, value_enum, default_value_t = VisibilityAngles::Prescribed)]
    pub angles: VisibilityAngles,
    #[command(flatten)]
    pub search: SearchArgs,
}

#[derive(Debug, Args)]
pub struct ScanArgs {
    /// Party counts, "lo..hi" (inclusive) or a single value.
    #[arg(long, default_value = "2")]
    pub n: String,
    /// Dimensions, "lo..hi" (inclusive) or a single value.
    #[arg(long, default_value = "2..3")]
    pub d: String,
    /// Replace the analytic bound by exhaustive enumeration over every
    /// bipartition.
    #[arg(long)]
    pub certify: bool,
    #[arg(long, env = "QUDIT_BELL_BUDGET", default_value_t = DEFAULT_BUDGET)]
    pub budget: u64,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Probability-table JSON.
    pub file: PathBuf,
}

/// A failed command with its exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl Failure {
    fn input(message: impl Into<String>) -> Self {
        Self { code: 1, message: message.into() }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::BudgetExceeded { .. } | Error::TooLarge { .. } => 2,
            _ => 1,
        };
        Self { code, message: e.to_string() }
    }
}

type CmdResult<T> = std::result::Result<T, Failure>;

/// A rendered command result.
pub struct Report {
    pub json: Value,
    /// Header and rows for CSV output.
    pub csv: (Vec<String>, Vec<Vec<String>>),
}

/// Parses `args` (including the program name), runs the command and returns
/// the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match execute(&cli) {
        Ok(()) => 0,
        Err(f) => {
            eprintln!("error: {}", f.message);
            f.code
        }
    }
}

fn execute(cli: &Cli) -> CmdResult<()> {
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(t) = cli.threads {
        if t == 0 {
            return Err(Failure::input("--threads must be positive"));
        }
        pool = pool.num_threads(t);
    }
    let pool = pool.build().map_err(|e| Failure { code: 2, message: e.to_string() })?;
    let report = pool.install(|| dispatch(&cli.command))?;
    let text = match cli.format {
        Format::Json => {
            let mut s = serde_json::to_string_pretty(&report.json).map_err(Error::from)?;
            s.push('\n');
            s
        }
        Format::Csv => render_csv(&report.csv.0, &report.csv.1)?,
    };
    match &cli.out {
        Some(path) => write_atomic(path, text.as_bytes()),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(text.as_bytes())
                .and_then(|_| stdout.flush())
                .map_err(|e| Failure::input(format!("writing output: {e}")))
        }
    }
}

pub fn dispatch(command: &Command) -> CmdResult<Report> {
    match command {
        Command::Bound(a) => cmd_bound(a),
        Command::Violation(a) => cmd_violation(a),
        Command::Visibility(a) => cmd_visibility(a),
        Command::Scan(a) => cmd_scan(a),
        Command::Eval(a) => cmd_eval(a),
    }
}

pub fn cmd_bound(args: &BoundArgs) -> CmdResult<Report> {
    let scenario = BellScenario::new(args.n, args.d)?;
    let options = EnumerationOptions { budget: args.budget };
    let (partition, bound, witness, enumerated, elapsed) = match args.model {
        Model::Hlnhv => {
            let partition = match &args.partition {
                Some(text) => Bipartition::parse(text, args.n)?,
                None => Bipartition::leading(args.n, args.n / 2)?,
            };
            let r = hlnhv_bound(&scenario, &partition, options)?;
            let block = |values: &[usize], len: usize| -> Value {
                values
                    .iter()
                    .enumerate()
                    .map(|(i, &v)| (block_setting_label(i, len), json!(v)))
                    .collect::<serde_json::Map<_, _>>()
                    .into()
            };
            let witness = json!({
                "block_a": block(r.witness.xi(), partition.block_a().len()),
                "block_b": block(r.witness.zeta(), partition.block_b().len()),
            });
            (Some(partition), r.value, witness, r.strategies_enumerated, r.elapsed_ms)
        }
        Model::Lhv => {
            if args.partition.is_some() {
                return Err(Failure::input("--partition applies to the hlnhv model only"));
            }
            let r = lhv_bound(&scenario, options)?;
            let witness: serde_json::Map<_, _> = r
                .witness
                .outcomes
                .iter()
                .enumerate()
                .map(|(p, o)| ((p + 1).to_string(), json!({"1": o[0], "2": o[1]})))
                .collect();
            (None, r.value, witness.into(), r.strategies_enumerated, r.elapsed_ms)
        }
    };
    let model = match args.model {
        Model::Hlnhv => "hlnhv",
        Model::Lhv => "lhv",
    };
    let exact = ratio_string(&bound);
    let value = *bound.numer() as f64 / *bound.denom() as f64;
    let json = json!({
        "n": args.n,
        "d": args.d,
        "model": model,
        "partition": partition.as_ref().map(|p| p.one_based()),
        "bound": {"exact": exact, "value": value},
        "witness": witness,
        "strategies_enumerated": enumerated,
        "elapsed_ms": elapsed as u64,
    });
    let header =
        ["n", "d", "model", "partition", "bound", "bound_value", "strategies_enumerated", "elapsed_ms"];
    let row = vec![
        args.n.to_string(),
        args.d.to_string(),
        model.to_string(),
        partition.map(|p| p.to_string()).unwrap_or_default(),
        exact,
        sig10(value),
        enumerated.to_string(),
        elapsed.to_string(),
    ];
    Ok(Report { json, csv: (strings(&header), vec![row]) })
}

fn search_options(args: &SearchArgs, mode: SearchMode) -> RestartOptions {
    RestartOptions {
        restarts: args.restarts,
        seed: args.seed,
        search: SearchOptions { mode, max_evaluations: args.max_evaluations, ..Default::default() },
    }
}

/// Optimizer summary included in reports.
#[derive(Debug, Serialize)]
struct SearchSummary {
    restarts: usize,
    seed: u64,
    best_restart: usize,
    evaluations: usize,
    exceeds_closed_form: bool,
}

fn optimized(
    scenario: &BellScenario,
    args: &SearchArgs,
    mode: SearchMode,
) -> CmdResult<(PhaseConfiguration, SearchSummary)> {
    let out = optimize_with_restarts(scenario, search_options(args, mode))?;
    if out.best.exceeds_closed_form {
        eprintln!(
            "warning: optimized value {} exceeds the closed-form maximum {}",
            out.best.value,
            max_violation(scenario)
        );
    }
    let summary = SearchSummary {
        restarts: args.restarts,
        seed: args.seed,
        best_restart: out.best_restart,
        evaluations: out.best.evaluations,
        exceeds_closed_form: out.best.exceeds_closed_form,
    };
    Ok((out.best.config, summary))
}

fn read_file(path: &Path) -> CmdResult<String> {
    std::fs::read_to_string(path).map_err(|e| Failure::input(format!("{}: {e}", path.display())))
}

pub fn cmd_violation(args: &ViolationArgs) -> CmdResult<Report> {
    let scenario = BellScenario::new(args.n, args.d)?;
    let (config, label, search) = match &args.phases_file {
        Some(path) => {
            let config = PhaseConfiguration::from_json(&read_file(path)?)
                .map_err(|e| Failure::input(format!("{}: {e}", path.display())))?;
            if config.scenario() != &scenario {
                return Err(Failure::input(format!(
                    "{}: phases are for {}, expected {scenario}",
                    path.display(),
                    config.scenario()
                )));
            }
            (config, "file", None)
        }
        None => match args.angles {
            Angles::Prescribed => (prescribed_angles(&scenario), "prescribed", None),
            Angles::Zero => (PhaseConfiguration::zeros(scenario), "zero", None),
            Angles::OptimizedSymmetric => {
                let (c, s) = optimized(&scenario, &args.search, SearchMode::Symmetric)?;
                (c, "optimized-symmetric", Some(s))
            }
            Angles::OptimizedFree => {
                let (c, s) = optimized(&scenario, &args.search, SearchMode::Free)?;
                (c, "optimized-free", Some(s))
            }
        },
    };

    let dense = scenario.hilbert_dimension() <= DENSE_LIMIT as u128;
    let (value, table) = if dense {
        let rho = mix_with_noise(&ghz_state(scenario)?, args.visibility)?;
        let table = joint_probabilities(&rho, &config)?;
        (bell_value(&table), Some(table))
    } else {
        let value = noisy_ghz_bell_value(&config, args.visibility)?;
        (value, None)
    };
    if let Some(path) = &args.emit_table {
        let table = match table {
            Some(t) => t,
            None => noisy_ghz_table(&config, args.visibility)?,
        };
        write_atomic(path, table.to_json()?.as_bytes())?;
    }

    let max = max_violation(&scenario);
    let bound = scenario.hlnhv_bound() as f64;
    let path = if dense { "dense" } else { "closed-form" };
    let json = json!({
        "n": args.n,
        "d": args.d,
        "angles_mode": label,
        "evaluation": path,
        "visibility": args.visibility,
        "bell_value": value,
        "closed_form_max": max,
        "difference": value - max,
        "hlnhv_bound": scenario.hlnhv_bound(),
        "witness_fired": value > bound + WITNESS_MARGIN,
        "phases": config.to_file(),
        "search": search,
    });
    let header = [
        "n",
        "d",
        "angles_mode",
        "evaluation",
        "visibility",
        "bell_value",
        "closed_form_max",
        "difference",
        "hlnhv_bound",
    ];
    let row = vec![
        args.n.to_string(),
        args.d.to_string(),
        label.to_string(),
        path.to_string(),
        sig10(args.visibility),
        sig10(value),
        sig10(max),
        sig10(value - max),
        scenario.hlnhv_bound().to_string(),
    ];
    Ok(Report { json, csv: (strings(&header), vec![row]) })
}

pub fn cmd_visibility(args: &VisibilityArgs) -> CmdResult<Report> {
    let scenario = BellScenario::new(args.n, args.d)?;
    let (report, search) = match args.angles {
        VisibilityAngles::Prescribed => (critical_visibility(&scenario), None),
        VisibilityAngles::OptimizedSymmetric | VisibilityAngles::OptimizedFree => {
            let (mode, angles) = if args.angles == VisibilityAngles::OptimizedFree {
                (SearchMode::Free, AnglesMode::OptimizedFree)
            } else {
                (SearchMode::Symmetric, AnglesMode::OptimizedSymmetric)
            };
            let (config, summary) = optimized(&scenario, &args.search, mode)?;
            let value = ghz_bell_value(&config);
            (ViolationReport::new(&scenario, value, &config, angles), Some(summary))
        }
    };
    let mut json = serde_json::to_value(&report).map_err(Error::from)?;
    json["search"] = serde_json::to_value(search).map_err(Error::from)?;
    let header = [
        "n",
        "d",
        "max_value",
        "ratio",
        "critical_visibility",
        "svetlichny_visibility",
        "more_noise_resistant_than_svetlichny",
    ];
    let row = vec![
        report.n.to_string(),
        report.d.to_string(),
        sig10(report.max_value),
        sig10(report.ratio),
        sig10(report.critical_visibility),
        sig10(report.svetlichny_visibility),
        report.more_noise_resistant_than_svetlichny.to_string(),
    ];
    Ok(Report { json, csv: (strings(&header), vec![row]) })
}

/// Parses `"lo..hi"` (inclusive; empty when `lo > hi`) or a single integer.
pub fn parse_range(text: &str) -> Result<std::ops::RangeInclusive<usize>, String> {
    let num = |s: &str| s.trim().parse::<usize>().map_err(|_| format!("invalid range {text:?}"));
    match text.split_once("..") {
        Some((lo, hi)) => {
            let hi = hi.strip_prefix('=').unwrap_or(hi);
            Ok(num(lo)?..=num(hi)?)
        }
        None => {
            let v = num(text)?;
            Ok(v..=v)
        }
    }
}

#[derive(Debug, Serialize)]
struct ScanRow {
    n: usize,
    d: usize,
    hlnhv_bound: f64,
    max_violation: f64,
    ratio: f64,
    v_cr: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    certified_bound: Option<String>,
}

pub fn cmd_scan(args: &ScanArgs) -> CmdResult<Report> {
    let ns = parse_range(&args.n).map_err(Failure::input)?;
    let ds = parse_range(&args.d).map_err(Failure::input)?;
    let count = ns.clone().count().saturating_mul(ds.clone().count());
    if count > SCAN_LIMIT {
        return Err(Failure {
            code: 2,
            message: format!("scan grid has {count} points, limit is {SCAN_LIMIT}"),
        });
    }
    let mut rows = Vec::with_capacity(count);
    for n in ns {
        for d in ds.clone() {
            let scenario = BellScenario::new(n, d)?;
            let certified_bound = if args.certify { Some(certify(&scenario, args.budget)?) } else { None };
            let report = critical_visibility(&scenario);
            rows.push(ScanRow {
                n,
                d,
                hlnhv_bound: scenario.hlnhv_bound() as f64,
                max_violation: report.max_value,
                ratio: report.ratio,
                v_cr: report.critical_visibility,
                certified_bound,
            });
        }
    }
    let mut header = strings(&["n", "d", "hlnhv_bound", "max_violation", "ratio", "v_cr"]);
    if args.certify {
        header.push("certified_bound".into());
    }
    let csv_rows = rows
        .iter()
        .map(|r| {
            let mut row = vec![
                r.n.to_string(),
                r.d.to_string(),
                sig10(r.hlnhv_bound),
                sig10(r.max_violation),
                sig10(r.ratio),
                sig10(r.v_cr),
            ];
            row.extend(r.certified_bound.clone());
            row
        })
        .collect();
    let json = serde_json::to_value(&rows).map_err(Error::from)?;
    Ok(Report { json, csv: (header, csv_rows) })
}

/// Enumerated bound over every bipartition; they must all agree.
fn certify(scenario: &BellScenario, budget: u64) -> CmdResult<String> {
    let mut value = None;
    for p in Bipartition::all(scenario.n_parties()) {
        let r = hlnhv_bound(scenario, &p, EnumerationOptions { budget })?;
        match value {
            None => value = Some(r.value),
            Some(v) if v != r.value => {
                return Err(Failure::input(format!(
                    "{scenario}: partition {p} gives {}, others {}",
                    ratio_string(&r.value),
                    ratio_string(&v)
                )))
            }
            Some(_) => {}
        }
    }
    Ok(value.map(|v| ratio_string(&v)).unwrap_or_default())
}

pub fn cmd_eval(args: &EvalArgs) -> CmdResult<Report> {
    let started = Instant::now();
    let text = read_file(&args.file)?;
    let table = JointProbabilityTable::from_json(&text)
        .map_err(|e| Failure::input(format!("{}: {e}", args.file.display())))?;
    let scenario = *table.scenario();
    let value = bell_value(&table);
    let q = correlation_values(&table);
    let bound = scenario.hlnhv_bound();
    let fired = value > bound as f64 + WITNESS_MARGIN;
    let json = json!({
        "n": scenario.n_parties(),
        "d": scenario.dimension(),
        "bell_value": value,
        "correlations": q.iter().map(|(s, v)| (s.to_string(), json!(v))).collect::<serde_json::Map<_, _>>(),
        "hlnhv_bound": bound,
        "witness_fired": fired,
        "elapsed_ms": started.elapsed().as_millis() as u64,
    });
    let header = strings(&["setting", "q"]);
    let mut rows: Vec<Vec<String>> = q.iter().map(|(s, v)| vec![s.to_string(), sig10(*v)]).collect();
    rows.push(vec!["bell_value".into(), sig10(value)]);
    rows.push(vec!["hlnhv_bound".into(), bound.to_string()]);
    rows.push(vec!["witness_fired".into(), fired.to_string()]);
    Ok(Report { json, csv: (header, rows) })
}

fn strings(items: &[&str]) -> Vec<String> {
    items.iter().map(|s| s.to_string()).collect()
}

/// Ten significant digits in positional notation.
pub fn sig10(x: f64) -> String {
    if !x.is_finite() {
        return x.to_string();
    }
    if x == 0.0 {
        return "0".into();
    }
    let magnitude = x.abs().log10().floor() as i32;
    if !(-6..=15).contains(&magnitude) {
        return format!("{x:.9e}");
    }
    let decimals = (9 - magnitude).max(0) as usize;
    let mut s = String::new();
    let _ = write!(s, "{x:.decimals$}");
    s
}

fn render_csv(header: &[String], rows: &[Vec<String>]) -> CmdResult<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| Failure::input(format!("csv: {e}"));
    w.write_record(header).map_err(io)?;
    for r in rows {
        w.write_record(r).map_err(io)?;
    }
    let bytes = w.into_inner().map_err(|e| Failure::input(format!("csv: {e}")))?;
    String::from_utf8(bytes).map_err(|e| Failure::input(e.to_string()))
}

/// Writes to a temporary file next to `path`, then renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> CmdResult<()> {
    let fail = |e: std::io::Error| Failure::input(format!("{}: {e}", path.display()));
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(fail)?;
    tmp.write_all(bytes).map_err(fail)?;
    tmp.flush().map_err(fail)?;
    tmp.persist(path).map_err(|e| fail(e.error))?;
    Ok(())
}

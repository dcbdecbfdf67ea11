//! Command-line front end: `gen`, `solve`, `bench` and `viz`.

use crate::instance::{generate_instance, load_instance, Instance};
use crate::monotone::{solve_monotone, Deadline, PlanError};
use crate::nonmonotone::{informed_search, one_buffer_search, with_candidate_buffers, SearchConfig};
use crate::oracles::{brute_force_optimal, random_ablation_search, OracleOutcome};
use crate::region_graph::{GraphOptions, RegionGraph};
use crate::replay::replay;
use crate::solution::{Solution, SolutionFile};
use crate::svg::{render, SvgLayers};
use crate::Workspace;
use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::time::Instant;

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_GENERATION_FAILURE: i32 = 2;
pub const EXIT_TIMEOUT: i32 = 3;
pub const EXIT_INFEASIBLE: i32 = 4;
pub const EXIT_MISMATCH: i32 = 5;

#[derive(Parser, Debug)]
#[command(name = "disc-rearrange", version, about = "Rearrangement planning for uniform discs")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Generate a random instance.
    Gen(GenArgs),
    /// Solve one instance.
    Solve(SolveArgs),
    /// Solve every instance in a directory and tabulate the results.
    Bench(BenchArgs),
    /// Render an instance and optionally a solution as SVG.
    Viz(VizArgs),
}

#[derive(Args, Debug)]
pub struct GenArgs {
    #[arg(short = 'n', long = "objects")]
    pub n: usize,
    #[arg(short = 'd', long)]
    pub density: f64,
    #[arg(long, default_value_t = 10.0)]
    pub width: f64,
    #[arg(long, default_value_t = 10.0)]
    pub height: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(short = 'o', long = "out")]
    pub out: PathBuf,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Monotone,
    Informed,
    Random,
    Edfs,
    Oracle,
}

impl Mode {
    /// Wall-clock budget used when none is given.
    pub fn default_time_limit(self) -> f64 {
        match self {
            Mode::Monotone => 500.0,
            _ => 300.0,
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Mode::Monotone => "monotone",
            Mode::Informed => "informed",
            Mode::Random => "random",
            Mode::Edfs => "edfs",
            Mode::Oracle => "oracle",
        };
        f.write_str(s)
    }
}

/// Options shared by `solve` and `bench`.
#[derive(Args, Debug, Clone)]
pub struct SolverArgs {
    /// Seconds per query; defaults to 500 for monotone and 300 otherwise.
    #[arg(long)]
    pub time_limit: Option<f64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Try every object and buffer at each node in informed mode.
    #[arg(long)]
    pub exhaustive: bool,
    /// Grid cell size; defaults to a tenth of the radius.
    #[arg(long)]
    pub cell_size: Option<f64>,
    /// Candidate buffers generated for instances without any (default n).
    #[arg(long)]
    pub buffers: Option<usize>,
    /// Buffer-visit bound for oracle mode.
    #[arg(long, default_value_t = 2)]
    pub max_buffer_visits: usize,
    /// Record time_s as 0 so repeated runs write identical files.
    #[arg(long)]
    pub no_timing: bool,
}

#[derive(Args, Debug)]
pub struct SolveArgs {
    pub instance: PathBuf,
    #[arg(long, value_enum, default_value_t = Mode::Informed)]
    pub mode: Mode,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[arg(short = 'o', long = "out")]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct BenchArgs {
    pub corpus: PathBuf,
    #[arg(long, value_enum, value_delimiter = ',', default_values_t = [Mode::Informed, Mode::Random])]
    pub modes: Vec<Mode>,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    #[arg(short = 'o', long = "out")]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct VizArgs {
    pub instance: PathBuf,
    #[arg(long)]
    pub solution: Option<PathBuf>,
    #[arg(long)]
    pub cell_size: Option<f64>,
    #[arg(long)]
    pub no_regions: bool,
    #[arg(long)]
    pub no_poses: bool,
    #[arg(long)]
    pub no_paths: bool,
    #[arg(short = 'o', long = "out")]
    pub out: PathBuf,
}

/// Failure carrying the process exit code.
#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    fn new(code: i32, message: impl Into<String>) -> Self {
        Self {
            code,
            message: message.into(),
        }
    }
}

impl From<PlanError> for CliError {
    fn from(e: PlanError) -> Self {
        CliError::new(EXIT_ERROR, e.to_string())
    }
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    std::fs::write(path, contents)
        .map_err(|e| CliError::new(EXIT_ERROR, format!("{}: {e}", path.display())))
}

fn read_instance(path: &Path) -> Result<Instance, CliError> {
    load_instance(path).map_err(|e| CliError::new(EXIT_MISMATCH, format!("{}: {e}", path.display())))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    Solved,
    Timeout,
    Infeasible,
}

/// Result of one solver query.
#[derive(Debug)]
pub struct Outcome {
    pub verdict: Verdict,
    pub solution: Option<Solution>,
    pub time_s: f64,
}

impl Outcome {
    pub fn summary(&self) -> String {
        let (k, b) = self
            .solution
            .as_ref()
            .map_or((0, 0), |s| (s.num_actions, s.num_buffers));
        format!(
            "solved={} actions={k} buffers={b} time_s={}",
            self.verdict == Verdict::Solved,
            self.time_s
        )
    }

    pub fn exit_code(&self) -> i32 {
        match self.verdict {
            Verdict::Solved => EXIT_OK,
            Verdict::Timeout => EXIT_TIMEOUT,
            Verdict::Infeasible => EXIT_INFEASIBLE,
        }
    }
}

fn plan(
    inst: &Instance,
    g: &RegionGraph,
    mode: Mode,
    args: &SolverArgs,
    deadline: Deadline,
) -> Result<(Verdict, Option<Solution>), PlanError> {
    let verdict = |sol: Option<Solution>, timed_out: bool| {
        let v = match (&sol, timed_out) {
            (Some(_), _) => Verdict::Solved,
            (None, true) => Verdict::Timeout,
            (None, false) => Verdict::Infeasible,
        };
        (v, sol)
    };
    Ok(match mode {
        Mode::Monotone => {
            let (tree, sol) = solve_monotone(inst, g, deadline)?;
            verdict(
                sol,
                tree.status == crate::monotone::PlannerStatus::DeadlineExceeded,
            )
        }
        Mode::Informed | Mode::Random => {
            let config = SearchConfig {
                exhaustive: args.exhaustive,
                seed: args.seed,
                ..SearchConfig::default()
            };
            let res = if mode == Mode::Informed {
                informed_search(inst, g, deadline, &config)?
            } else {
                random_ablation_search(inst, g, deadline, args.seed)?
            };
            match res {
                crate::nonmonotone::SearchResult::Solved { solution, .. } => {
                    verdict(Some(solution), false)
                }
                crate::nonmonotone::SearchResult::Failed {
                    deadline_exceeded, ..
                } => verdict(None, deadline_exceeded),
            }
        }
        Mode::Edfs => {
            let res = one_buffer_search(inst, g, deadline)?;
            verdict(res.solution, res.deadline_exceeded)
        }
        Mode::Oracle => match brute_force_optimal(inst, g, args.max_buffer_visits, deadline)? {
            OracleOutcome::Solved(s) => verdict(Some(s), false),
            OracleOutcome::Infeasible => verdict(None, false),
            OracleOutcome::DeadlineExceeded => verdict(None, true),
        },
    })
}

/// Runs one query: attaches candidate buffers when needed, builds the
/// region graph and dispatches to the chosen solver.
pub fn solve_instance(inst: &Instance, mode: Mode, args: &SolverArgs) -> Result<Outcome, CliError> {
    let started = Instant::now();
    let limit = args.time_limit.unwrap_or(mode.default_time_limit());
    let deadline = Deadline::after_secs(limit);
    let inst = match mode {
        Mode::Monotone => inst.clone(),
        _ => with_candidate_buffers(inst, args.buffers, args.seed),
    };
    let opts = GraphOptions {
        cell_size: args.cell_size,
        ..GraphOptions::default()
    };
    let g = RegionGraph::from_instance(&inst, opts)
        .map_err(|e| CliError::new(EXIT_ERROR, e.to_string()))?;
    let (verdict, mut solution) = plan(&inst, &g, mode, args, deadline)?;
    let time_s = if args.no_timing {
        0.0
    } else {
        started.elapsed().as_secs_f64()
    };
    if let Some(s) = solution.as_mut() {
        s.time_s = time_s;
        s.seed = args.seed;
    }
    Ok(Outcome {
        verdict,
        solution,
        time_s,
    })
}

fn cmd_gen(a: &GenArgs) -> Result<i32, CliError> {
    let ws = Workspace::new(a.width, a.height);
    match generate_instance(a.n, a.density, ws, a.seed) {
        Ok(inst) => {
            write_file(&a.out, &inst.to_json())?;
            Ok(EXIT_OK)
        }
        Err(e) => Err(CliError::new(EXIT_GENERATION_FAILURE, e.to_string())),
    }
}

fn cmd_solve(a: &SolveArgs) -> Result<i32, CliError> {
    let inst = read_instance(&a.instance)?;
    let outcome = solve_instance(&inst, a.mode, &a.solver)?;
    println!("{}", outcome.summary());
    if let (Some(path), Some(sol)) = (&a.out, &outcome.solution) {
        write_file(path, &sol.to_json())?;
    }
    Ok(outcome.exit_code())
}

/// One data row of the benchmark table.
#[derive(Clone, Debug, PartialEq)]
pub struct BenchRow {
    pub instance: String,
    pub n: usize,
    pub mode: Mode,
    pub solved: bool,
    pub actions: usize,
    pub buffers: usize,
    pub time_s: f64,
    pub seed: u64,
}

/// Aggregate statistics of one `(mode, n)` group.
#[derive(Clone, Debug, PartialEq)]
pub struct BenchAggregate {
    pub mode: Mode,
    pub n: usize,
    pub count: usize,
    pub success_rate: f64,
    /// Mean over solved rows; 0 when none solved.
    pub mean_buffers: f64,
    /// Mean over all rows.
    pub mean_time: f64,
}

pub fn aggregate(rows: &[BenchRow]) -> Vec<BenchAggregate> {
    let mut groups: BTreeMap<(String, usize), (Mode, Vec<&BenchRow>)> = BTreeMap::new();
    for r in rows {
        groups
            .entry((r.mode.to_string(), r.n))
            .or_insert_with(|| (r.mode, Vec::new()))
            .1
            .push(r);
    }
    groups
        .into_iter()
        .map(|((_, n), (mode, rs))| {
            let solved: Vec<&&BenchRow> = rs.iter().filter(|r| r.solved).collect();
            let count = rs.len();
            BenchAggregate {
                mode,
                n,
                count,
                success_rate: solved.len() as f64 / count as f64,
                mean_buffers: if solved.is_empty() {
                    0.0
                } else {
                    solved.iter().map(|r| r.buffers as f64).sum::<f64>() / solved.len() as f64
                },
                mean_time: rs.iter().map(|r| r.time_s).sum::<f64>() / count as f64,
            }
        })
        .collect()
}

fn csv_error(e: impl fmt::Display) -> CliError {
    CliError::new(EXIT_ERROR, format!("csv: {e}"))
}

/// Data rows, then a blank line and the aggregate block when any rows exist.
pub fn render_bench_csv(rows: &[BenchRow]) -> Result<String, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["instance", "mode", "solved", "actions", "buffers", "time_s", "seed"])
        .map_err(csv_error)?;
    for r in rows {
        w.write_record([
            r.instance.clone(),
            r.mode.to_string(),
            r.solved.to_string(),
            r.actions.to_string(),
            r.buffers.to_string(),
            r.time_s.to_string(),
            r.seed.to_string(),
        ])
        .map_err(csv_error)?;
    }
    let mut out = String::from_utf8(w.into_inner().map_err(csv_error)?).map_err(csv_error)?;
    if rows.is_empty() {
        return Ok(out);
    }
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["mode", "n", "count", "success_rate", "mean_buffers", "mean_time"])
        .map_err(csv_error)?;
    for a in aggregate(rows) {
        w.write_record([
            a.mode.to_string(),
            a.n.to_string(),
            a.count.to_string(),
            a.success_rate.to_string(),
            a.mean_buffers.to_string(),
            a.mean_time.to_string(),
        ])
        .map_err(csv_error)?;
    }
    out.push('\n');
    out.push_str(&String::from_utf8(w.into_inner().map_err(csv_error)?).map_err(csv_error)?);
    Ok(out)
}

fn corpus_files(dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    let entries = std::fs::read_dir(dir)
        .map_err(|e| CliError::new(EXIT_ERROR, format!("{}: {e}", dir.display())))?;
    let mut files: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    files.sort();
    Ok(files)
}

fn bench_query(path: &Path, mode: Mode, args: &SolverArgs) -> BenchRow {
    let name = path
        .file_name()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let failed = |n: usize| BenchRow {
        instance: name.clone(),
        n,
        mode,
        solved: false,
        actions: 0,
        buffers: 0,
        time_s: 0.0,
        seed: args.seed,
    };
    let Ok(inst) = load_instance(path) else {
        return failed(0);
    };
    match solve_instance(&inst, mode, args) {
        Ok(o) => {
            let (actions, buffers) = o
                .solution
                .as_ref()
                .map_or((0, 0), |s| (s.num_actions, s.num_buffers));
            BenchRow {
                instance: name,
                n: inst.n(),
                mode,
                solved: o.verdict == Verdict::Solved,
                actions,
                buffers,
                time_s: o.time_s,
                seed: args.seed,
            }
        }
        Err(_) => failed(inst.n()),
    }
}

/// Solves every `(instance, mode)` pair with up to `jobs` parallel queries.
pub fn run_bench(
    files: &[PathBuf],
    modes: &[Mode],
    args: &SolverArgs,
    jobs: usize,
) -> Result<Vec<BenchRow>, CliError> {
    let queries: Vec<(&PathBuf, Mode)> = files
        .iter()
        .flat_map(|f| modes.iter().map(move |&m| (f, m)))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| CliError::new(EXIT_ERROR, e.to_string()))?;
    Ok(pool.install(|| {
        queries
            .par_iter()
            .map(|(f, m)| bench_query(f, *m, args))
            .collect()
    }))
}

fn cmd_bench(a: &BenchArgs) -> Result<i32, CliError> {
    let files = corpus_files(&a.corpus)?;
    let rows = run_bench(&files, &a.modes, &a.solver, a.jobs)?;
    write_file(&a.out, &render_bench_csv(&rows)?)?;
    Ok(EXIT_OK)
}

fn cmd_viz(a: &VizArgs) -> Result<i32, CliError> {
    let inst = read_instance(&a.instance)?;
    let solution = match &a.solution {
        Some(path) => Some(
            SolutionFile::load(path)
                .map_err(|e| CliError::new(EXIT_MISMATCH, format!("{}: {e}", path.display())))?,
        ),
        None => None,
    };
    let opts = GraphOptions {
        cell_size: a.cell_size,
        ..GraphOptions::default()
    };
    let g = RegionGraph::from_instance(&inst, opts)
        .map_err(|e| CliError::new(EXIT_ERROR, e.to_string()))?;
    if let Some(sol) = &solution {
        replay(&inst, &g, sol).map_err(|e| {
            CliError::new(EXIT_MISMATCH, format!("solution does not match instance: {e}"))
        })?;
    }
    let layers = SvgLayers {
        regions: !a.no_regions,
        poses: !a.no_poses,
        paths: !a.no_paths,
    };
    write_file(&a.out, &render(&inst, Some(&g), solution.as_ref(), layers))?;
    Ok(EXIT_OK)
}

/// Executes a parsed command and returns the process exit code.
pub fn run(cli: Cli) -> i32 {
    let res = match &cli.command {
        Command::Gen(a) => cmd_gen(a),
        Command::Solve(a) => cmd_solve(a),
        Command::Bench(a) => cmd_bench(a),
        Command::Viz(a) => cmd_viz(a),
    };
    match res {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {}", e.message);
            e.code
        }
    }
}

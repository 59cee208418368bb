//! Command-line surface and the file writers behind it. Everything here is
//! orchestration over the solver modules, kept as plain functions so tests
//! can call them without spawning the binary.
//!
//! Exit codes: 0 success, 2 usage (from the argument parser), 3 invalid
//! instance or configuration, 4 I/O or parse failure, 5 numerical failure,
//! 6 internal solver error.

use std::collections::VecDeque;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Mutex;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::bcg::{run_bcg, BoundsRecord};
use crate::model::{generate_instance, load_instance, save_instance, Instance, SolverConfig};
use crate::oracle::solve_exact;
use crate::pcg::run_pcg;
use crate::rounding::{round_joint, round_two_stage, IntegralSolution};
use crate::Error;

/// Overrides the number of bench workers when set to a positive integer.
pub const THREADS_ENV: &str = "BENDERS_TTF_THREADS";

#[derive(Parser, Debug)]
#[command(
    name = "benders-ttf",
    version,
    about = "Group part detections into poses by LP decomposition"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Check an instance file and report violations.
    Validate { instance: PathBuf },
    /// Write randomly generated instances into a directory.
    Gen {
        /// Number of parts; part 0 is the major star root.
        #[arg(long, default_value_t = 3)]
        parts: usize,
        /// Detections per part.
        #[arg(long, default_value_t = 3)]
        dets: usize,
        /// Cost magnitude scale.
        #[arg(long, default_value_t = 1.0)]
        scale: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Instances to write, with seeds seed..seed+count.
        #[arg(long, default_value_t = 1)]
        count: usize,
        #[arg(long = "out-dir")]
        out_dir: PathBuf,
    },
    /// Solve one instance; the solution JSON goes to stdout unless --out.
    Solve {
        instance: PathBuf,
        #[arg(long, value_enum, default_value_t = SolverKind::Bcg)]
        solver: SolverKind,
        /// Wall-clock cap in seconds for the LP phase.
        #[arg(long = "time-cap", default_value_t = 300.0)]
        time_cap: f64,
        /// Cap on local detections per local assignment.
        #[arg(long = "max-locals")]
        max_locals: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Write the per-iteration bounds table (CSV) here.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Solve every .json instance in a directory and write a results table
    /// plus cumulative gap/time histograms next to it.
    Bench {
        dir: PathBuf,
        #[arg(long, value_enum, default_value_t = SolverKind::Bcg)]
        solver: SolverKind,
        #[arg(long = "time-cap", default_value_t = 300.0)]
        time_cap: f64,
        #[arg(long)]
        csv: PathBuf,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum SolverKind {
    Bcg,
    Pcg,
    Oracle,
}

impl SolverKind {
    pub fn name(self) -> &'static str {
        match self {
            SolverKind::Bcg => "bcg",
            SolverKind::Pcg => "pcg",
            SolverKind::Oracle => "oracle",
        }
    }
}

#[derive(Debug)]
pub struct SolveStats {
    pub solver: SolverKind,
    pub iterations: usize,
    pub time_s: f64,
    pub n_columns: usize,
    pub n_rows: usize,
    pub timed_out: bool,
    pub lp_objective: Option<f64>,
    /// Master ILP value with row-bounded part values, where applicable.
    pub row_based_objective: Option<f64>,
}

#[derive(Debug)]
pub struct SolveResult {
    pub solution: IntegralSolution,
    pub lower_bound: f64,
    pub trace: Vec<BoundsRecord>,
    pub stats: SolveStats,
}

/// Best bound seen along the way; once the relaxation has converged its
/// objective itself is the bound to report.
fn best_lower(trace: &[BoundsRecord], lp_objective: f64, converged: bool) -> f64 {
    let anytime = trace
        .iter()
        .map(|r| r.lower_bound)
        .fold(f64::NEG_INFINITY, f64::max);
    if converged {
        anytime.max(lp_objective)
    } else {
        anytime
    }
}

/// Runs the chosen solver to a rounded integral solution plus the best
/// lower bound seen.
pub fn solve_instance(
    inst: &Instance,
    solver: SolverKind,
    config: &SolverConfig,
) -> Result<SolveResult, Error> {
    let start = Instant::now();
    match solver {
        SolverKind::Bcg => {
            let out = run_bcg(inst, config)?;
            let rounded = round_two_stage(inst, &out.pool, &out.rows, config)?;
            Ok(SolveResult {
                lower_bound: best_lower(&out.trace, out.master.objective, !out.timed_out),
                stats: SolveStats {
                    solver,
                    iterations: out.iterations,
                    time_s: start.elapsed().as_secs_f64(),
                    n_columns: out.pool.n_skeletons() + out.pool.n_locals(),
                    n_rows: out.rows.len(),
                    timed_out: out.timed_out,
                    lp_objective: Some(out.master.objective),
                    row_based_objective: Some(rounded.row_based_objective),
                },
                solution: rounded.solution,
                trace: out.trace,
            })
        }
        SolverKind::Pcg => {
            let out = run_pcg(inst, config)?;
            let solution = round_joint(inst, &out.pool, config)?;
            Ok(SolveResult {
                lower_bound: best_lower(&out.trace, out.objective, !out.timed_out),
                stats: SolveStats {
                    solver,
                    iterations: out.iterations,
                    time_s: start.elapsed().as_secs_f64(),
                    n_columns: out.pool.n_skeletons() + out.pool.n_locals(),
                    n_rows: 3 * inst.n_detections(),
                    timed_out: out.timed_out,
                    lp_objective: Some(out.objective),
                    row_based_objective: None,
                },
                solution,
                trace: out.trace,
            })
        }
        SolverKind::Oracle => {
            let solution = solve_exact(inst, config)?;
            Ok(SolveResult {
                lower_bound: solution.objective,
                stats: SolveStats {
                    solver,
                    iterations: 0,
                    time_s: start.elapsed().as_secs_f64(),
                    n_columns: 0,
                    n_rows: 0,
                    timed_out: false,
                    lp_objective: None,
                    row_based_objective: None,
                },
                solution,
                trace: Vec::new(),
            })
        }
    }
}

#[derive(Serialize)]
struct LocalOut {
    global: usize,
    locals: Vec<usize>,
}

#[derive(Serialize)]
struct PoseOut {
    skeleton: Vec<usize>,
    locals: Vec<LocalOut>,
}

#[derive(Serialize)]
struct StatsOut<'a> {
    solver: &'a str,
    iterations: usize,
    time_s: f64,
    n_columns: usize,
    n_rows: usize,
    timed_out: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    lp_objective: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    row_based_objective: Option<f64>,
}

#[derive(Serialize)]
struct SolutionOut<'a> {
    poses: Vec<PoseOut>,
    objective: f64,
    lower_bound: f64,
    stats: StatsOut<'a>,
}

pub fn solution_to_json(result: &SolveResult) -> String {
    let poses = result
        .solution
        .poses()
        .into_iter()
        .map(|p| PoseOut {
            skeleton: p.skeleton.iter().map(|d| d.0).collect(),
            locals: p
                .locals
                .into_iter()
                .map(|(g, ls)| LocalOut {
                    global: g.0,
                    locals: ls.iter().map(|d| d.0).collect(),
                })
                .collect(),
        })
        .collect();
    let out = SolutionOut {
        poses,
        objective: result.solution.objective,
        lower_bound: result.lower_bound,
        stats: StatsOut {
            solver: result.stats.solver.name(),
            iterations: result.stats.iterations,
            time_s: result.stats.time_s,
            n_columns: result.stats.n_columns,
            n_rows: result.stats.n_rows,
            timed_out: result.stats.timed_out,
            lp_objective: result.stats.lp_objective,
            row_based_objective: result.stats.row_based_objective,
        },
    };
    let mut s = serde_json::to_string_pretty(&out).expect("solution serializes");
    s.push('\n');
    s
}

pub fn trace_to_csv(trace: &[BoundsRecord]) -> String {
    let mut s = String::from("iter,objective,lower_bound,time_s\n");
    for r in trace {
        s.push_str(&format!(
            "{},{},{},{:.6}\n",
            r.iter, r.objective, r.lower_bound, r.wall_time
        ));
    }
    s
}

/// `(ub - lb) / (-lb)`; undefined when the bound sits at zero.
pub fn normalized_gap(ub: f64, lb: f64, tol: f64) -> Option<f64> {
    if lb.abs() <= tol {
        None
    } else {
        Some((ub - lb) / (-lb))
    }
}

#[derive(Clone, Debug)]
pub struct BenchRow {
    pub name: String,
    pub n_detections: usize,
    pub n_parts: usize,
    pub solver: String,
    pub ub: f64,
    pub lb: f64,
    pub normalized_gap: Option<f64>,
    pub time_s: f64,
    pub iters: usize,
    pub n_cols: usize,
    pub n_rows: usize,
}

pub fn bench_one(
    path: &Path,
    solver: SolverKind,
    config: &SolverConfig,
) -> Result<BenchRow, Error> {
    let inst = load_instance(path)?;
    let started = Instant::now();
    let result = solve_instance(&inst, solver, config)?;
    let name = if inst.name.is_empty() {
        path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
    } else {
        inst.name.clone()
    };
    let ub = result.solution.objective;
    let lb = result.lower_bound;
    Ok(BenchRow {
        name,
        n_detections: inst.n_detections(),
        n_parts: inst.n_parts(),
        solver: solver.name().to_string(),
        ub,
        lb,
        normalized_gap: normalized_gap(ub, lb, config.lp_tolerance),
        time_s: started.elapsed().as_secs_f64(),
        iters: result.stats.iterations,
        n_cols: result.stats.n_columns,
        n_rows: result.stats.n_rows,
    })
}

/// Number of bench workers: the environment override, else the available
/// parallelism capped at eight.
pub fn worker_count() -> usize {
    std::env::var(THREADS_ENV)
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .filter(|&v| v >= 1)
        .unwrap_or_else(|| {
            std::thread::available_parallelism().map(|n| n.get().min(8)).unwrap_or(1)
        })
}

/// Solves every `.json` file in the directory, skipping unreadable ones
/// with a warning. Rows come back sorted by name regardless of worker
/// interleaving.
pub fn bench_dir(
    dir: &Path,
    solver: SolverKind,
    config: &SolverConfig,
    workers: usize,
) -> Result<Vec<BenchRow>, Error> {
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| Error::Io(format!("{}: {e}", dir.display())))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    paths.sort();

    let queue: Mutex<VecDeque<PathBuf>> = Mutex::new(paths.into());
    let rows: Mutex<Vec<BenchRow>> = Mutex::new(Vec::new());
    std::thread::scope(|scope| {
        for _ in 0..workers.max(1) {
            scope.spawn(|| loop {
                let next = queue.lock().expect("queue lock").pop_front();
                let Some(path) = next else { break };
                match bench_one(&path, solver, config) {
                    Ok(row) => rows.lock().expect("rows lock").push(row),
                    Err(e) => eprintln!("warning: skipping {}: {e}", path.display()),
                }
            });
        }
    });
    let mut rows = rows.into_inner().expect("rows lock");
    rows.sort_by(|a, b| a.name.cmp(&b.name));
    Ok(rows)
}

fn write_text(path: &Path, text: &str) -> Result<(), Error> {
    fs::write(path, text).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

fn cumulative_csv(values: &mut Vec<f64>) -> String {
    values.sort_by(|a, b| a.partial_cmp(b).expect("finite metric"));
    let n = values.len();
    let mut s = String::from("value,cum_fraction\n");
    for (i, v) in values.iter().enumerate() {
        s.push_str(&format!("{},{}\n", v, (i + 1) as f64 / n as f64));
    }
    s
}

/// Writes the results table, then `<stem>_gap_hist.csv` and
/// `<stem>_time_hist.csv` beside it, each a cumulative distribution.
pub fn write_bench_csv(path: &Path, rows: &[BenchRow]) -> Result<(), Error> {
    let mut s =
        String::from("name,n_detections,n_parts,solver,ub,lb,normalized_gap,time_s,iters,n_cols,n_rows\n");
    for r in rows {
        let gap = r.normalized_gap.map(|g| g.to_string()).unwrap_or_default();
        s.push_str(&format!(
            "{},{},{},{},{},{},{},{:.6},{},{},{}\n",
            r.name, r.n_detections, r.n_parts, r.solver, r.ub, r.lb, gap, r.time_s, r.iters,
            r.n_cols, r.n_rows
        ));
    }
    write_text(path, &s)?;

    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let dir = path.parent().unwrap_or_else(|| Path::new("."));
    let mut gaps: Vec<f64> = rows.iter().filter_map(|r| r.normalized_gap).collect();
    if !gaps.is_empty() {
        write_text(&dir.join(format!("{stem}_gap_hist.csv")), &cumulative_csv(&mut gaps))?;
    }
    let mut times: Vec<f64> = rows.iter().map(|r| r.time_s).collect();
    if !times.is_empty() {
        write_text(&dir.join(format!("{stem}_time_hist.csv")), &cumulative_csv(&mut times))?;
    }
    Ok(())
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::InvalidInstance(_) | Error::Config(_) => 3,
        Error::Io(_) | Error::Format(_) => 4,
        Error::Numerical(_) => 5,
        Error::Solver(_) | Error::SizeGuard(_) => 6,
    }
}

pub fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Validate { instance } => {
            let inst = load_instance(&instance)?;
            for w in inst.warnings() {
                eprintln!("warning: {w}");
            }
            println!(
                "{}: ok ({} parts, {} detections)",
                instance.display(),
                inst.n_parts(),
                inst.n_detections()
            );
            Ok(())
        }
        Command::Gen { parts, dets, scale, seed, count, out_dir } => {
            if parts < 1 || dets < 1 {
                return Err(Error::Config("--parts and --dets must be at least 1".into()));
            }
            if !scale.is_finite() || scale <= 0.0 {
                return Err(Error::Config("--scale must be positive".into()));
            }
            fs::create_dir_all(&out_dir)
                .map_err(|e| Error::Io(format!("{}: {e}", out_dir.display())))?;
            for i in 0..count {
                let inst = generate_instance(parts, dets, scale, seed + i as u64);
                let path = out_dir.join(format!("{}.json", inst.name));
                save_instance(&inst, &path)?;
                println!("{}", path.display());
            }
            Ok(())
        }
        Command::Solve { instance, solver, time_cap, max_locals, out, trace } => {
            let inst = load_instance(&instance)?;
            let mut config = SolverConfig { time_cap_seconds: time_cap, ..Default::default() };
            if let Some(k) = max_locals {
                config.max_locals_per_assignment = k;
            }
            config.check()?;
            let result = solve_instance(&inst, solver, &config)?;
            let json = solution_to_json(&result);
            match out {
                Some(path) => {
                    write_text(&path, &json)?;
                    println!(
                        "{}: objective {} lower_bound {} in {:.3}s",
                        inst.name,
                        result.solution.objective,
                        result.lower_bound,
                        result.stats.time_s
                    );
                }
                None => print!("{json}"),
            }
            if let Some(path) = trace {
                write_text(&path, &trace_to_csv(&result.trace))?;
            }
            Ok(())
        }
        Command::Bench { dir, solver, time_cap, csv } => {
            let config = SolverConfig { time_cap_seconds: time_cap, ..Default::default() };
            config.check()?;
            let rows = bench_dir(&dir, solver, &config, worker_count())?;
            write_bench_csv(&csv, &rows)?;
            println!("{} instances -> {}", rows.len(), csv.display());
            Ok(())
        }
    }
}

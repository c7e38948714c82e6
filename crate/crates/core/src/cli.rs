//! Experiment runner: `run`, `make-reference` and `report` subcommands, and
//! the library functions behind them.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;

use crate::bench::{art, budget_grid, ecdf, make_targets, target_factors, RunRecord};
use crate::error::{Error, Result};
use crate::hybrid::{run_algo, Algo, HybridConfig};
use crate::pareto::{fmt_f64, FrontEntry, ParetoArchive, SearchPoint, Solution};
use crate::problems::{
    group_label, pair_of, read_reference_file, reference_data, reference_path, write_reference_file, ProblemKey,
    NUM_PROBLEMS,
};

#[derive(Parser, Debug)]
#[command(name = "hmocma", version, about = "Hybrid multi-objective CMA-ES experiments")]
#[command(args_override_self = true)]
pub struct Cli {
    /// key=value file whose entries act as default flags
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Run an optimizer and write one record per (problem, instance, seed)
    Run(RunArgs),
    /// Build reference fronts by merging long hybrid runs
    MakeReference(MakeRefArgs),
    /// ECDF and aRT tables from record files
    Report(ReportArgs),
}

#[derive(Args, Debug, Clone)]
pub struct Selection {
    /// Problem indices, e.g. `1,4,10-12`
    #[arg(long, conflicts_with = "suite")]
    pub problem: Option<String>,
    /// `all` for every problem of the suite
    #[arg(long)]
    pub suite: Option<String>,
    /// Dimensions, e.g. `2,5`
    #[arg(long, default_value = "5")]
    pub dim: String,
    /// Instances, e.g. `1-5`
    #[arg(long, alias = "instance", default_value = "1-5")]
    pub instances: String,
    /// Number of seeds; runs use seeds 0..N
    #[arg(long, conflicts_with = "seed")]
    pub seeds: Option<u64>,
    /// A single seed
    #[arg(long)]
    pub seed: Option<u64>,
    /// Budget in evaluations per dimension
    #[arg(long)]
    pub budget_mult: Option<u64>,
    /// Parallel runs
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
}

#[derive(Args, Debug, Clone)]
pub struct RunArgs {
    #[command(flatten)]
    pub sel: Selection,
    #[arg(long, default_value = "hybrid")]
    pub algo: String,
    #[arg(long, default_value = "results")]
    pub out: PathBuf,
    /// Directory of reference files for problems without a closed-form front
    #[arg(long)]
    pub ref_dir: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
pub struct MakeRefArgs {
    #[command(flatten)]
    pub sel: Selection,
    #[arg(long, default_value = "refs")]
    pub ref_dir: PathBuf,
}

#[derive(Args, Debug, Clone)]
pub struct ReportArgs {
    /// Output directory of a previous `run`
    #[arg(long, default_value = "results")]
    pub records: PathBuf,
    /// Where to write the tables; `<records>/report` by default
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub bootstrap_seed: u64,
}

pub const DEFAULT_BUDGET_MULT: u64 = 1000;
pub const DEFAULT_REF_BUDGET_MULT: u64 = 10_000;
pub const DEFAULT_REF_SEEDS: u64 = 3;

/// Parses `1,3,5-7` into a sorted list without duplicates.
pub fn parse_list(s: &str) -> Result<Vec<usize>> {
    let mut out = Vec::new();
    for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let bad = || Error::InvalidArgument(format!("bad list item '{part}'"));
        match part.split_once('-') {
            Some((a, b)) => {
                let a: usize = a.trim().parse().map_err(|_| bad())?;
                let b: usize = b.trim().parse().map_err(|_| bad())?;
                if a > b {
                    return Err(bad());
                }
                out.extend(a..=b);
            }
            None => out.push(part.parse().map_err(|_| bad())?),
        }
    }
    if out.is_empty() {
        return Err(Error::InvalidArgument(format!("empty list '{s}'")));
    }
    out.sort_unstable();
    out.dedup();
    Ok(out)
}

/// Expanded run set of a [`Selection`].
#[derive(Clone, Debug, PartialEq)]
pub struct Plan {
    pub keys: Vec<ProblemKey>,
    pub seeds: Vec<u64>,
    pub budget_mult: u64,
}

impl Plan {
    pub fn from_selection(sel: &Selection, default_seeds: u64, default_mult: u64) -> Result<Self> {
        let problems = match (&sel.problem, &sel.suite) {
            (Some(p), None) => parse_list(p)?,
            (None, Some(s)) if s == "all" => (1..=NUM_PROBLEMS).collect(),
            (None, Some(s)) => return Err(Error::InvalidArgument(format!("unknown suite '{s}'"))),
            (None, None) => (1..=NUM_PROBLEMS).collect(),
            (Some(_), Some(_)) => return Err(Error::InvalidArgument("--problem and --suite are exclusive".into())),
        };
        if let Some(k) = problems.iter().find(|k| **k == 0 || **k > NUM_PROBLEMS) {
            return Err(Error::InvalidArgument(format!("problem {k} outside 1..={NUM_PROBLEMS}")));
        }
        let dims = parse_list(&sel.dim)?;
        if dims.contains(&0) {
            return Err(Error::InvalidArgument("dimension must be positive".into()));
        }
        let instances = parse_list(&sel.instances)?;
        if instances.contains(&0) {
            return Err(Error::InvalidArgument("instances start at 1".into()));
        }
        let seeds = match (sel.seed, sel.seeds) {
            (Some(s), None) => vec![s],
            (None, Some(n)) => (0..n).collect(),
            (None, None) => (0..default_seeds).collect(),
            (Some(_), Some(_)) => return Err(Error::InvalidArgument("--seed and --seeds are exclusive".into())),
        };
        let budget_mult = sel.budget_mult.unwrap_or(default_mult);
        if budget_mult == 0 {
            return Err(Error::InvalidArgument("--budget-mult must be positive".into()));
        }
        let mut keys = Vec::new();
        for &n in &dims {
            for &k in &problems {
                for &instance in &instances {
                    keys.push(ProblemKey { k, n, instance });
                }
            }
        }
        Ok(Plan { keys, seeds, budget_mult })
    }
}

/// File name of a record inside `<out>/records`.
pub fn record_file_name(algo: Algo, key: &ProblemKey, seed: u64) -> String {
    format!("{}_k{}_n{}_i{}_s{}.jsonl", algo, key.k, key.n, key.instance, seed)
}

/// One scored run. Problems without reference data get a record without
/// hypervolume differences.
pub fn run_record(key: ProblemKey, algo: Algo, budget: u64, seed: u64, cfg: HybridConfig, ref_dir: Option<&Path>) -> Result<RunRecord> {
    let p = key.build()?;
    let reference = match reference_data(&p, ref_dir) {
        Ok(r) => Some(r),
        Err(Error::NoReference { .. }) => None,
        Err(e) => return Err(e),
    };
    let out = run_algo(algo, &p, budget, seed, cfg)?;
    Ok(RunRecord::from_output(key, seed, algo, budget, &out, reference.as_ref()))
}

fn thread_pool(jobs: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| Error::InvalidArgument(e.to_string()))
}

/// Runs the plan, writes `<out>/records/*.jsonl` and `<out>/summary.csv`, and
/// returns the records in plan order.
pub fn execute_runs(plan: &Plan, algo: Algo, out: &Path, ref_dir: Option<&Path>, jobs: usize) -> Result<Vec<RunRecord>> {
    let tasks: Vec<(ProblemKey, u64)> = plan.keys.iter().flat_map(|k| plan.seeds.iter().map(move |s| (*k, *s))).collect();
    let dir = out.join("records");
    fs::create_dir_all(&dir)?;
    let records: Vec<RunRecord> = thread_pool(jobs)?.install(|| {
        tasks
            .par_iter()
            .map(|&(key, seed)| {
                let rec = run_record(key, algo, plan.budget_mult * key.n as u64, seed, HybridConfig::default(), ref_dir)?;
                rec.save(&dir.join(record_file_name(algo, &key, seed)))?;
                Ok(rec)
            })
            .collect::<Result<_>>()
    })?;
    fs::write(out.join("summary.csv"), summary_csv(&records))?;
    Ok(records)
}

pub fn summary_csv(records: &[RunRecord]) -> String {
    let mut s = String::from("algo,k,n,instance,seed,budget,total_evals,warmstart,ss,restart_cma,ipop,final_hv,final_hv_diff,targets_reached\n");
    for r in records {
        let diff = r.anytime_trace().last().map_or(String::new(), |(_, d)| fmt_f64(*d));
        let reached = r.targets().map_or(0, |t| r.hits(&t).iter().filter(|h| h.is_some()).count());
        let l = &r.ledger;
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            r.algo,
            r.key.k,
            r.key.n,
            r.key.instance,
            r.seed,
            r.budget,
            r.total_evals,
            l.warmstart,
            l.ss,
            l.restart_cma,
            l.ipop,
            fmt_f64(r.final_hv()),
            diff,
            reached
        );
    }
    s
}

/// Runs the hybrid on each selected problem for every seed, merges the
/// archives with any existing reference file and writes the result. Returns
/// the written paths with their reference hypervolumes.
pub fn make_reference(plan: &Plan, ref_dir: &Path, jobs: usize) -> Result<Vec<(PathBuf, f64)>> {
    fs::create_dir_all(ref_dir)?;
    thread_pool(jobs)?.install(|| {
        plan.keys
            .par_iter()
            .map(|key| {
                let p = key.build()?;
                let budget = plan.budget_mult * key.n as u64;
                let runs: Vec<ParetoArchive> = plan
                    .seeds
                    .iter()
                    .map(|&s| Ok(run_algo(Algo::Hybrid, &p, budget, s, HybridConfig::default())?.archive))
                    .collect::<Result<_>>()?;
                let mut merged = ParetoArchive::new(p.ref_point());
                for a in &runs {
                    for m in a.members() {
                        merged.insert(m.clone());
                    }
                }
                let path = reference_path(ref_dir, key);
                if path.is_file() {
                    let (old_ref, front) = read_reference_file(&path)?;
                    if old_ref == p.ref_point() {
                        for e in front {
                            merged.insert(Solution {
                                point: SearchPoint::zeros(key.n),
                                value: e.value,
                                eval_index: e.eval_index,
                            });
                        }
                    }
                }
                let entries: Vec<FrontEntry> = merged
                    .members()
                    .iter()
                    .map(|m| FrontEntry {
                        value: m.value,
                        eval_index: m.eval_index,
                    })
                    .collect();
                write_reference_file(&path, &p.ref_point(), &entries)?;
                Ok((path, merged.hv()))
            })
            .collect()
    })
}

/// Loads every `*.jsonl` record below `dir`, sorted by file name.
pub fn load_records(dir: &Path) -> Result<Vec<RunRecord>> {
    let mut paths = Vec::new();
    for sub in [dir.join("records"), dir.to_path_buf()] {
        if sub.is_dir() {
            for e in fs::read_dir(&sub)? {
                let path = e?.path();
                if path.extension().is_some_and(|x| x == "jsonl") {
                    paths.push(path);
                }
            }
        }
    }
    paths.sort();
    paths.dedup();
    paths
        .iter()
        .map(|p| {
            RunRecord::load(p).map_err(|e| match e {
                Error::Parse { line, message } => Error::Parse {
                    line,
                    message: format!("{}: {message}", p.display()),
                },
                e => e,
            })
        })
        .collect()
}

fn ecdf_tsv(curves: &BTreeMap<Algo, Vec<(f64, f64)>>) -> String {
    let mut s = String::from("algo\tbudget_per_n\tfraction\n");
    for (algo, curve) in curves {
        for (b, f) in curve {
            let _ = writeln!(s, "{algo}\t{}\t{}", fmt_f64(*b), fmt_f64(*f));
        }
    }
    s
}

/// Writes ECDF tables over all problems, per problem group and per problem
/// (one file per dimension), and the aRT table. Returns the written files.
pub fn write_report(records: &[RunRecord], out: &Path, bootstrap_seed: u64) -> Result<Vec<PathBuf>> {
    if records.is_empty() {
        return Err(Error::Empty("records"));
    }
    let ecdf_dir = out.join("ecdf");
    fs::create_dir_all(&ecdf_dir)?;
    let mut written = Vec::new();
    let grid = budget_grid();

    // (file stem, dimension) -> algo -> records
    let mut sets: BTreeMap<(String, usize), BTreeMap<Algo, Vec<RunRecord>>> = BTreeMap::new();
    for r in records {
        let (a, b) = pair_of(r.key.k)?;
        let group = group_label(a.category(), b.category());
        for stem in ["all".to_string(), format!("group_{group}"), format!("f{:02}", r.key.k)] {
            sets.entry((stem, r.key.n)).or_default().entry(r.algo).or_default().push(r.clone());
        }
    }
    for ((stem, n), by_algo) in &sets {
        let curves = by_algo
            .iter()
            .map(|(a, recs)| Ok((*a, ecdf(recs, &grid, bootstrap_seed)?)))
            .collect::<Result<BTreeMap<_, _>>>()?;
        let path = ecdf_dir.join(format!("{stem}_n{n}.tsv"));
        fs::write(&path, ecdf_tsv(&curves))?;
        written.push(path);
    }

    let mut per_problem: BTreeMap<(Algo, usize, usize), Vec<RunRecord>> = BTreeMap::new();
    for r in records {
        per_problem.entry((r.algo, r.key.k, r.key.n)).or_default().push(r.clone());
    }
    let factors = target_factors();
    let mut csv = String::from("algo,k,n,target_factor,art,successes,runs\n");
    for ((algo, k, n), recs) in &per_problem {
        for (j, f) in factors.iter().enumerate() {
            // each run is scored against its own instance reference
            let with_ref: Vec<RunRecord> = recs.iter().filter(|r| r.reference.is_some()).cloned().collect();
            let successes = with_ref
                .iter()
                .filter(|r| {
                    let t = make_targets(r.reference.unwrap().ref_hv).unwrap();
                    r.hits(&t)[j].is_some()
                })
                .count();
            let value = if with_ref.is_empty() {
                f64::INFINITY
            } else {
                art_by_factor(&with_ref, j)?
            };
            let _ = writeln!(csv, "{algo},{k},{n},{},{},{successes},{}", fmt_f64(*f), fmt_art(value), recs.len());
        }
    }
    let path = out.join("art.csv");
    fs::write(&path, csv)?;
    written.push(path);
    Ok(written)
}

fn fmt_art(v: f64) -> String {
    if v.is_finite() {
        fmt_f64(v)
    } else {
        "inf".into()
    }
}

/// aRT for target index `j` when the runs have different reference values.
fn art_by_factor(records: &[RunRecord], j: usize) -> Result<f64> {
    // rescale every trace to its own reference so one absolute threshold fits all
    let scaled: Vec<RunRecord> = records
        .iter()
        .map(|r| {
            let mut r = r.clone();
            let hv = r.reference.unwrap().ref_hv;
            for e in &mut r.trace {
                e.hv_diff = e.hv_diff.map(|d| d / hv);
            }
            if let Some(rf) = &mut r.reference {
                rf.ref_hv = 1.0;
            }
            r
        })
        .collect();
    art(&scaled, target_factors()[j])
}

fn split_config_line(line: &str, line_no: usize) -> Result<Option<(String, String)>> {
    let line = line.split('#').next().unwrap_or("").trim();
    if line.is_empty() {
        return Ok(None);
    }
    let (k, v) = line
        .split_once('=')
        .ok_or_else(|| Error::parse(line_no, format!("expected key = value, got '{line}'")))?;
    let key = k.trim().trim_start_matches("--").replace('_', "-");
    let value = v.trim().trim_matches('"').to_string();
    Ok(Some((key, value)))
}

/// Reads a `key = value` config file into flag pairs.
pub fn read_config(path: &Path) -> Result<Vec<(String, String)>> {
    let text = fs::read_to_string(path)?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if let Some(kv) = split_config_line(line, i + 1)? {
            out.push(kv);
        }
    }
    Ok(out)
}

/// Inserts config entries right after the subcommand, skipping keys that
/// the command line already sets (directly or through an exclusive partner).
fn merge_config(args: &[String], config: &[(String, String)]) -> Vec<String> {
    let names = |k: &str| -> Vec<String> {
        match k {
            "seed" | "seeds" => vec!["seed".into(), "seeds".into()],
            "problem" | "suite" => vec!["problem".into(), "suite".into()],
            "instance" | "instances" => vec!["instance".into(), "instances".into()],
            _ => vec![k.to_string()],
        }
    };
    let given = |k: &str| {
        names(k)
            .iter()
            .any(|n| args.iter().any(|a| *a == format!("--{n}") || a.starts_with(&format!("--{n}="))))
    };
    let Some(pos) = args.iter().position(|a| matches!(a.as_str(), "run" | "make-reference" | "report")) else {
        return args.to_vec();
    };
    let mut merged: Vec<String> = args[..=pos].to_vec();
    for (k, v) in config {
        if k == "config" || given(k) {
            continue;
        }
        merged.push(format!("--{k}"));
        merged.push(v.clone());
    }
    merged.extend_from_slice(&args[pos + 1..]);
    merged
}

fn config_path(args: &[String]) -> Option<PathBuf> {
    let mut it = args.iter();
    while let Some(a) = it.next() {
        if a == "--config" {
            return it.next().map(PathBuf::from);
        }
        if let Some(v) = a.strip_prefix("--config=") {
            return Some(PathBuf::from(v));
        }
    }
    None
}

/// Exit status: 0 on success, 1 on runtime failure, 2 on usage errors.
pub fn run_cli(args: Vec<String>) -> i32 {
    let args = match config_path(&args) {
        Some(path) => match read_config(&path) {
            Ok(cfg) => merge_config(&args, &cfg),
            Err(e) => {
                eprintln!("error: config {}: {e}", path.display());
                return 2;
            }
        },
        None => args,
    };
    let cli = match Cli::try_parse_from(&args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let usage = |e: Error| {
        eprintln!("error: {e}");
        2
    };
    let failure = |e: Error| {
        eprintln!("error: {e}");
        1
    };
    match cli.command {
        Command::Run(a) => {
            let algo: Algo = match a.algo.parse() {
                Ok(x) => x,
                Err(e) => return usage(e),
            };
            let plan = match Plan::from_selection(&a.sel, 1, DEFAULT_BUDGET_MULT) {
                Ok(p) => p,
                Err(e) => return usage(e),
            };
            match execute_runs(&plan, algo, &a.out, a.ref_dir.as_deref(), a.sel.jobs) {
                Ok(recs) => {
                    let missing = recs.iter().filter(|r| r.reference.is_none()).count();
                    if missing > 0 {
                        eprintln!("note: {missing} run(s) have no reference data; hv differences left empty");
                    }
                    println!("wrote {} records to {}", recs.len(), a.out.join("records").display());
                    0
                }
                Err(e) => failure(e),
            }
        }
        Command::MakeReference(a) => {
            let plan = match Plan::from_selection(&a.sel, DEFAULT_REF_SEEDS, DEFAULT_REF_BUDGET_MULT) {
                Ok(p) => p,
                Err(e) => return usage(e),
            };
            match make_reference(&plan, &a.ref_dir, a.sel.jobs) {
                Ok(written) => {
                    for (p, hv) in written {
                        println!("{}\t{}", p.display(), fmt_f64(hv));
                    }
                    0
                }
                Err(e) => failure(e),
            }
        }
        Command::Report(a) => {
            let records = match load_records(&a.records) {
                Ok(r) => r,
                Err(e) => return failure(e),
            };
            if records.is_empty() {
                eprintln!("error: no records found in {}", a.records.display());
                return 2;
            }
            let out = a.out.unwrap_or_else(|| a.records.join("report"));
            match write_report(&records, &out, a.bootstrap_seed) {
                Ok(files) => {
                    println!("wrote {} files to {}", files.len(), out.display());
                    0
                }
                Err(e) => failure(e),
            }
        }
    }
}

pub fn main_from_env() -> i32 {
    run_cli(std::env::args().collect())
}

//! Command-line front end: solve problem files, run the benchmark families,
//! print expansions and sparsity graphs.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use lrpop::polyrep::{bernstein_instance, monomial_instance};
use lrpop::solver::Backend;
use lrpop::sparsity::{build_lr_graph, lr_clique_tree};
use lrpop::{
    solve_dense, solve_low_rank, Basis, CpPoly, Error, InstanceDescriptor, LiftedVar,
    PipelineOptions, RunReport, SolveStatus, SolverOptions,
};

pub const EXIT_SCHEMA: i32 = 2;
pub const EXIT_ORDER: i32 = 3;
pub const EXIT_SOLVER: i32 = 4;

#[derive(Debug, Parser)]
#[command(
    name = "lrpop",
    version,
    about = "Low-rank moment relaxations for CP-form polynomials"
)]
pub struct Cli {
    /// Log level: -v info, -vv debug.
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve the relaxation of a problem file.
    Solve(SolveArgs),
    /// Run a benchmark table.
    Bench(BenchArgs),
    /// Write a generated instance as problem JSON.
    Generate(GenerateArgs),
    /// Print the dense expansion of a problem file.
    Expand { input: PathBuf },
    /// Print the lifted sparsity graph or its clique tree in DOT format.
    Graph(GraphArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BasisArg {
    Monomial,
    Bernstein,
}

impl From<BasisArg> for Basis {
    fn from(b: BasisArg) -> Self {
        match b {
            BasisArg::Monomial => Basis::Monomial,
            BasisArg::Bernstein => Basis::Bernstein,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct RelaxationFlags {
    /// Relaxation order k.
    #[arg(short = 'k', long, default_value_t = 2)]
    pub order: usize,
    /// Add bounds on the lifting variables.
    #[arg(long)]
    pub t_bounds: bool,
    /// Keep only products whose degree is strictly below 2k.
    #[arg(long)]
    pub strict_degree: bool,
    #[arg(long, default_value_t = 1e-8)]
    pub tol: f64,
    /// Per-solve time limit in seconds.
    #[arg(long)]
    pub timeout: Option<f64>,
    /// `embedded`, or `external:<command>` where the command may use
    /// `{input}` and `{output}`.
    #[arg(long, default_value = "embedded", value_parser = parse_backend)]
    pub backend: Backend,
}

impl RelaxationFlags {
    pub fn pipeline_options(&self) -> PipelineOptions {
        PipelineOptions {
            order: self.order,
            t_bounds: self.t_bounds,
            strict_degree: self.strict_degree,
            solver: SolverOptions {
                tol: self.tol,
                backend: self.backend.clone(),
                time_limit: self.timeout.map(Duration::from_secs_f64),
                ..Default::default()
            },
            ..Default::default()
        }
    }
}

fn parse_backend(s: &str) -> Result<Backend, String> {
    match s.split_once(':') {
        None if s == "embedded" => Ok(Backend::Embedded),
        Some(("external", cmd)) if !cmd.trim().is_empty() => Ok(Backend::External(cmd.into())),
        _ => Err(format!(
            "unknown backend `{s}`; use `embedded` or `external:<command>`"
        )),
    }
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    pub input: PathBuf,
    #[command(flatten)]
    pub flags: RelaxationFlags,
    /// Convert the factors to this basis before lifting.
    #[arg(long, value_enum)]
    pub basis: Option<BasisArg>,
    /// Generator seed of the input, recorded in the report.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Write the report as JSON.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
pub enum Family {
    /// Random factors with normally distributed monomial coefficients.
    Monomial,
    /// Bernstein factors whose minimum over the box is the rank.
    Bernstein,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(value_enum)]
    pub family: Family,
    #[arg(short, long, default_value_t = 2)]
    pub rank: usize,
    #[arg(short, long, default_value_t = 2)]
    pub degree: usize,
    /// Coefficient spread of the Bernstein family.
    #[arg(long, default_value_t = 1.0)]
    pub delta: f64,
    /// Variable counts, one column each.
    #[arg(short, long, value_delimiter = ',', default_values_t = [10, 50, 200])]
    pub n: Vec<usize>,
    /// Relaxation orders, one row each.
    #[arg(short = 'k', long = "order", value_delimiter = ',', default_values_t = [2])]
    pub orders: Vec<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Per-cell time limit in seconds.
    #[arg(long, default_value_t = 300.0)]
    pub timeout: f64,
    /// Also solve the dense relaxation of order ⌈nd/2⌉ (monomial family).
    #[arg(long)]
    pub dense: bool,
    /// Dense cells whose moment matrix would exceed this size are skipped.
    #[arg(long, default_value_t = 400)]
    pub dense_max_size: usize,
    #[arg(long)]
    pub t_bounds: bool,
    #[arg(long)]
    pub strict_degree: bool,
    #[arg(long, default_value_t = 1e-8)]
    pub tol: f64,
    #[arg(long, default_value = "embedded", value_parser = parse_backend)]
    pub backend: Backend,
    /// Cells solved concurrently.
    #[arg(short, long, default_value_t = 1)]
    pub jobs: usize,
    /// Write the archive as JSON.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[arg(value_enum)]
    pub family: Family,
    #[arg(short, long)]
    pub n: usize,
    #[arg(short, long, default_value_t = 2)]
    pub rank: usize,
    #[arg(short, long, default_value_t = 2)]
    pub degree: usize,
    #[arg(long, default_value_t = 1.0)]
    pub delta: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output path; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct GraphArgs {
    /// Problem file; only its rank and variable count are used.
    #[arg(required_unless_present_all = ["rank", "n"], conflicts_with_all = ["rank", "n"])]
    pub input: Option<PathBuf>,
    #[arg(short, long)]
    pub rank: Option<usize>,
    #[arg(short, long)]
    pub n: Option<usize>,
    /// Print the clique tree instead of the graph.
    #[arg(long)]
    pub tree: bool,
}

/// A failure with the process exit code it maps to.
#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub error: anyhow::Error,
}

impl CliError {
    fn new(code: i32, error: impl Into<anyhow::Error>) -> Self {
        Self {
            code,
            error: error.into(),
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{:#}", self.error)
    }
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::OrderTooSmall { .. } => EXIT_ORDER,
        Error::MalformedSdp(_) | Error::ExternalSolver(_) => EXIT_SOLVER,
        _ => EXIT_SCHEMA,
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        Self::new(exit_code(&e), e)
    }
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Solve(args) => cmd_solve(&args).map(|_| ()),
        Command::Bench(args) => cmd_bench(&args).map(|_| ()),
        Command::Generate(args) => cmd_generate(&args),
        Command::Expand { input } => {
            print!("{}", cmd_expand(&input)?);
            Ok(())
        }
        Command::Graph(args) => {
            print!("{}", cmd_graph(&args)?);
            Ok(())
        }
    }
}

fn load_problem(path: &Path) -> Result<CpPoly, CliError> {
    CpPoly::load(path).map_err(|e| {
        CliError::new(
            EXIT_SCHEMA,
            anyhow::Error::new(e).context(format!("reading {}", path.display())),
        )
    })
}

pub fn cmd_solve(args: &SolveArgs) -> Result<RunReport, CliError> {
    let mut f = load_problem(&args.input)?;
    if let Some(b) = args.basis {
        f = f.to_basis(b.into());
    }
    let out = solve_low_rank(&f, &args.flags.pipeline_options())?;
    let report = RunReport::from_output(&out, args.seed);
    print!("{}", report_table(&report));
    if let Some(path) = &args.out {
        write_file(path, &report.to_json())?;
    }
    match report.status {
        SolveStatus::Optimal => Ok(report),
        SolveStatus::NumericalLimit => {
            log::warn!(
                "solver stopped at its attainable accuracy (residuals {:.1e}/{:.1e}/{:.1e})",
                out.result.residuals.primal,
                out.result.residuals.dual,
                out.result.residuals.gap
            );
            Ok(report)
        }
        status => Err(CliError::new(
            EXIT_SOLVER,
            anyhow::anyhow!("solver finished with status {status:?}"),
        )),
    }
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    std::fs::write(path, contents).map_err(|e| {
        CliError::new(
            1,
            anyhow::Error::new(e).context(format!("writing {}", path.display())),
        )
    })
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "-".into(), |v| format!("{v:.9}"))
}

/// Human-readable summary of one report.
pub fn report_table(r: &RunReport) -> String {
    let mut s = String::new();
    let i = &r.instance;
    let rows: Vec<(&str, String)> = vec![
        (
            "instance",
            format!("r={} n={} d={} basis={:?}", i.r, i.n, i.d, i.basis).to_lowercase(),
        ),
        ("order", r.order.to_string()),
        ("status", format!("{:?}", r.status)),
        ("lower bound", fmt_opt(r.lower_bound)),
        ("upper bound", fmt_opt(r.upper_bound)),
        ("time [s]", format!("{:.3}", r.wall_time_seconds)),
    ];
    for (k, v) in rows {
        let _ = writeln!(s, "{k:<12} {v}");
    }
    if let Some(c) = &r.complexity {
        let _ = writeln!(
            s,
            "{:<12} {} (max size {}), {} moments, {} lifting equalities",
            "blocks", c.n_blocks, c.max_block_size, c.y_count, c.n_lifting_equalities
        );
    }
    s
}

/// One grid cell of a benchmark. `report` is absent when the relaxation could
/// not be built.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchCell {
    pub n: usize,
    pub order: usize,
    pub dense: bool,
    pub report: Option<RunReport>,
    pub error: Option<String>,
}

impl BenchCell {
    /// The bound shown in the table; blank unless the solve produced one.
    pub fn bound(&self) -> Option<f64> {
        self.report.as_ref().and_then(|r| r.lower_bound)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchArchive {
    pub family: Family,
    pub rank: usize,
    pub degree: usize,
    pub delta: f64,
    pub seed: u64,
    pub timeout_seconds: f64,
    pub cells: Vec<BenchCell>,
}

fn instance(family: Family, n: usize, d: usize, r: usize, delta: f64, seed: u64) -> CpPoly {
    match family {
        Family::Monomial => monomial_instance(n, d, r, seed),
        Family::Bernstein => bernstein_instance(n, d, r, delta, seed),
    }
}

struct Job {
    n: usize,
    order: usize,
    dense: bool,
}

fn run_cell(args: &BenchArgs, job: &Job) -> BenchCell {
    let f = instance(
        args.family,
        job.n,
        args.degree,
        args.rank,
        args.delta,
        args.seed,
    );
    let order = if job.dense {
        (job.n * f.max_degree()).div_ceil(2)
    } else {
        job.order
    };
    let opts = PipelineOptions {
        order,
        t_bounds: args.t_bounds,
        strict_degree: args.strict_degree,
        solver: SolverOptions {
            tol: args.tol,
            backend: args.backend.clone(),
            time_limit: Some(Duration::from_secs_f64(args.timeout.max(0.0))),
            ..Default::default()
        },
        ..Default::default()
    };
    let dense_size = binomial(job.n + order, order);
    let report = if job.dense && dense_size > args.dense_max_size {
        Err(format!(
            "dense moment matrix of size {dense_size} exceeds the limit of {}",
            args.dense_max_size
        ))
    } else if job.dense {
        solve_dense(&f, &opts)
            .map(|out| RunReport {
                instance: InstanceDescriptor::of(&f, Some(args.seed)),
                order,
                lower_bound: out
                    .result
                    .status
                    .has_solution()
                    .then_some(out.result.lower_bound)
                    .filter(|v| v.is_finite()),
                upper_bound: out.candidate.map(|c| c.1).filter(|v| v.is_finite()),
                wall_time_seconds: out.wall_time_seconds,
                complexity: None,
                status: out.result.status,
            })
            .map_err(|e| e.to_string())
    } else {
        solve_low_rank(&f, &opts)
            .map(|out| RunReport::from_output(&out, Some(args.seed)))
            .map_err(|e| e.to_string())
    };
    let (report, error) = match report {
        Ok(r) => {
            log::info!(
                "n={} k={}{}: {:?} {}",
                job.n,
                order,
                if job.dense { " dense" } else { "" },
                r.status,
                fmt_opt(r.lower_bound)
            );
            (Some(r), None)
        }
        Err(e) => {
            log::warn!("n={} k={}: {e}", job.n, order);
            (None, Some(e))
        }
    };
    BenchCell {
        n: job.n,
        order,
        dense: job.dense,
        report,
        error,
    }
}

fn binomial(n: usize, k: usize) -> usize {
    (0..k.min(n - k)).fold(1usize, |acc, i| acc.saturating_mul(n - i) / (i + 1))
}

pub fn cmd_bench(args: &BenchArgs) -> Result<BenchArchive, CliError> {
    if args.n.is_empty() || args.orders.is_empty() {
        return Err(CliError::new(
            EXIT_SCHEMA,
            anyhow::anyhow!("the parameter grid is empty"),
        ));
    }
    let mut jobs: Vec<Job> = Vec::new();
    for &order in &args.orders {
        for &n in &args.n {
            jobs.push(Job {
                n,
                order,
                dense: false,
            });
        }
    }
    if args.dense {
        for &n in &args.n {
            jobs.push(Job {
                n,
                order: 0,
                dense: true,
            });
        }
    }
    let slots: Vec<Mutex<Option<BenchCell>>> = jobs.iter().map(|_| Mutex::new(None)).collect();
    let next = AtomicUsize::new(0);
    std::thread::scope(|s| {
        for _ in 0..args.jobs.clamp(1, jobs.len()) {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(job) = jobs.get(i) else { break };
                let cell = run_cell(args, job);
                *slots[i].lock().expect("slot lock") = Some(cell);
            });
        }
    });
    let archive = BenchArchive {
        family: args.family,
        rank: args.rank,
        degree: args.degree,
        delta: args.delta,
        seed: args.seed,
        timeout_seconds: args.timeout,
        cells: slots
            .into_iter()
            .map(|m| m.into_inner().expect("slot lock").expect("every job ran"))
            .collect(),
    };
    print!("{}", bench_table(&archive));
    if let Some(path) = &args.out {
        let json = serde_json::to_string_pretty(&archive).expect("archive serializes");
        write_file(path, &json)?;
    }
    Ok(archive)
}

/// Aligned table: one column per `n`, a bound row and a time row per order.
pub fn bench_table(a: &BenchArchive) -> String {
    let mut ns: Vec<usize> = a.cells.iter().map(|c| c.n).collect();
    ns.sort_unstable();
    ns.dedup();
    let mut rows: Vec<(String, bool, usize)> = Vec::new();
    for c in &a.cells {
        let key = if c.dense {
            "dense".to_string()
        } else {
            format!("k={}", c.order)
        };
        if !rows.iter().any(|(k, _, _)| *k == key) {
            rows.push((key, c.dense, c.order));
        }
    }
    let cell_at = |dense: bool, order: usize, n: usize| {
        a.cells
            .iter()
            .find(|c| c.n == n && c.dense == dense && (dense || c.order == order))
    };

    let width = 14;
    let mut s = String::new();
    let family = match a.family {
        Family::Monomial => "monomial",
        Family::Bernstein => "bernstein",
    };
    let _ = write!(s, "{family} r={} d={}", a.rank, a.degree);
    if a.family == Family::Bernstein {
        let _ = write!(s, " delta={}", a.delta);
    }
    let _ = writeln!(s, " seed={}", a.seed);
    let _ = write!(s, "{:<10}", "");
    for n in &ns {
        let _ = write!(s, "{:>width$}", format!("n={n}"));
    }
    s.push('\n');
    for (key, dense, order) in &rows {
        let _ = write!(s, "{key:<10}");
        for &n in &ns {
            let v = cell_at(*dense, *order, n)
                .and_then(BenchCell::bound)
                .map_or(String::new(), |v| format!("{v:.6}"));
            let _ = write!(s, "{v:>width$}");
        }
        s.push('\n');
        let _ = write!(s, "{:<10}", "  time[s]");
        for &n in &ns {
            let v = cell_at(*dense, *order, n)
                .filter(|c| c.bound().is_some())
                .and_then(|c| c.report.as_ref())
                .map_or(String::new(), |r| format!("{:.2}", r.wall_time_seconds));
            let _ = write!(s, "{v:>width$}");
        }
        s.push('\n');
    }
    s
}

pub fn cmd_generate(args: &GenerateArgs) -> Result<(), CliError> {
    if args.n == 0 || args.rank == 0 || args.degree == 0 || !(args.delta > 0.0) {
        return Err(CliError::new(
            EXIT_SCHEMA,
            anyhow::anyhow!("n, rank, degree and delta must be positive"),
        ));
    }
    let f = instance(
        args.family,
        args.n,
        args.degree,
        args.rank,
        args.delta,
        args.seed,
    );
    let json = serde_json::to_string_pretty(&f.to_json()).expect("polynomial serializes");
    match &args.out {
        Some(path) => write_file(path, &json),
        None => {
            println!("{json}");
            Ok(())
        }
    }
}

/// Nonzero terms of the expansion, one `coefficient  monomial` line each,
/// with variables written `x1 … xn`.
pub fn cmd_expand(input: &Path) -> Result<String, CliError> {
    let f = load_problem(input)?.to_basis(Basis::Monomial);
    let dense = f.expand()?;
    let mut s = String::new();
    for (m, c) in dense.terms() {
        let name = if m.is_one() {
            "1".to_string()
        } else {
            m.pairs()
                .iter()
                .map(|&(v, e)| match e {
                    1 => format!("x{}", v + 1),
                    _ => format!("x{}^{e}", v + 1),
                })
                .collect::<Vec<_>>()
                .join("*")
        };
        let _ = writeln!(s, "{c:>16.10} {name}");
    }
    Ok(s)
}

pub fn cmd_graph(args: &GraphArgs) -> Result<String, CliError> {
    let (r, n) = match &args.input {
        Some(path) => {
            let f = load_problem(path)?;
            (f.rank(), f.n())
        }
        None => (args.rank.unwrap_or(1), args.n.unwrap_or(1)),
    };
    if r == 0 || n == 0 {
        return Err(CliError::new(
            EXIT_SCHEMA,
            anyhow::anyhow!("rank and n must be positive"),
        ));
    }
    Ok(if args.tree {
        lr_clique_tree(r, n).to_dot(&LiftedVar::all(r, n))
    } else {
        build_lr_graph(r, n).to_dot()
    })
}

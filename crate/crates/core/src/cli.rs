//! The `hegemm` command line.

use std::io::{IsTerminal, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::algos::{
    block_schedule, blocked_mm, multiply, select_strategy_with, Algorithm, BlockPlan, Preprocess, RunOptions,
};
use crate::backend::{BackendConfig, HeBackend, OpStats, SimdEmulator, DEFAULT_SLOTS};
use crate::bench::{
    emit_report, estimate_cost, run_emulated_campaign, CampaignConfig, CostEstimate, CostModel, ReportFormat,
};
use crate::error::{Error, Result};
use crate::io::{read_block_plan, read_matrix, write_matrix, write_matrix_text};
use crate::lintrans::{build_permutation, diagonal_bounds, extract_diagonals, Transform, TransformKind};
use crate::matrix::{FlattenOrder, Matrix};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_SHAPE: i32 = 2;
pub const EXIT_PARSE: i32 = 3;
pub const EXIT_IO: i32 = 4;
pub const EXIT_OVERFLOW: i32 = 5;

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::InvalidConfig(_) => EXIT_USAGE,
        Error::Capacity { .. }
        | Error::DimensionMismatch(_)
        | Error::InvalidShape(_)
        | Error::SegmentMismatch { .. } => EXIT_SHAPE,
        Error::Parse(_) | Error::Json(_) => EXIT_PARSE,
        Error::Io(_) | Error::Csv(_) => EXIT_IO,
        Error::Overflow(_) => EXIT_OVERFLOW,
    }
}

#[derive(Debug, Parser)]
#[command(name = "hegemm", version, about = "Encrypted general matrix multiplication on an emulated SIMD backend")]
#[command(arg_required_else_help = true)]
pub struct Cli {
    /// Slots per ciphertext (power of two).
    #[arg(long, global = true, env = "HEGEMM_SLOTS", default_value_t = DEFAULT_SLOTS)]
    pub slots: usize,

    /// Plaintext modulus; omit for exact integer arithmetic.
    #[arg(long, global = true)]
    pub modulus: Option<i64>,

    /// Seed for random operands and campaigns.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,

    /// Print strategy and schedule details to stderr.
    #[arg(short, long, global = true)]
    pub verbose: bool,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Multiply two matrices under encryption.
    Multiply(MultiplyArgs),
    /// Show the diagonal decomposition of a transform.
    Diagonals(DiagonalsArgs),
    /// Run a randomized comparison campaign.
    Bench(BenchArgs),
    /// Multiply large matrices block by block.
    BlockMultiply(BlockArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum AlgoArg {
    Hegmm,
    HegmmEn,
    SquarePad,
}

impl From<AlgoArg> for Algorithm {
    fn from(a: AlgoArg) -> Self {
        match a {
            AlgoArg::Hegmm => Algorithm::Hegmm,
            AlgoArg::HegmmEn => Algorithm::HegmmEn,
            AlgoArg::SquarePad => Algorithm::SquarePad,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum OrderArg {
    Auto,
    Col,
    Row,
}

impl OrderArg {
    fn resolve(self) -> Option<FlattenOrder> {
        match self {
            OrderArg::Auto => None,
            OrderArg::Col => Some(FlattenOrder::ColumnMajor),
            OrderArg::Row => Some(FlattenOrder::RowMajor),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum PreprocessArg {
    Plaintext,
    Encrypted,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum StatsArg {
    Auto,
    Json,
    Table,
    None,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[arg(long, value_enum, default_value = "hegmm-en")]
    pub algo: AlgoArg,

    #[arg(long, value_enum, default_value = "auto")]
    pub order: OrderArg,

    /// Where sigma/tau run: on client cleartext or on cloud ciphertexts.
    #[arg(long, value_enum, default_value = "plaintext")]
    pub preprocess: PreprocessArg,

    /// Stats format on stderr; auto is a table on a terminal, JSON otherwise.
    #[arg(long, value_enum, default_value = "auto")]
    pub stats: StatsArg,

    /// Write stats JSON to this file instead of stderr.
    #[arg(long)]
    pub stats_out: Option<PathBuf>,

    /// Write the product here (`.json` for JSON) instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,

    /// Generate random operands of shape MxLxN instead of reading files.
    #[arg(long, value_parser = parse_triple, conflicts_with_all = ["a", "b"])]
    pub random: Option<(usize, usize, usize)>,

    /// Left operand file.
    #[arg(required_unless_present = "random")]
    pub a: Option<PathBuf>,

    /// Right operand file.
    #[arg(required_unless_present = "random")]
    pub b: Option<PathBuf>,
}

impl RunArgs {
    fn options(&self) -> RunOptions {
        RunOptions {
            order: self.order.resolve(),
            preprocess: match self.preprocess {
                PreprocessArg::Plaintext => Preprocess::Plaintext,
                PreprocessArg::Encrypted => Preprocess::Encrypted,
            },
        }
    }
}

#[derive(Debug, Args)]
pub struct MultiplyArgs {
    #[command(flatten)]
    pub run: RunArgs,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum TransformArg {
    Sigma,
    Tau,
    Eps,
    Omega,
}

#[derive(Debug, Args)]
pub struct DiagonalsArgs {
    #[arg(long, value_enum)]
    pub transform: TransformArg,

    /// Shift for eps/omega.
    #[arg(long, default_value_t = 0)]
    pub k: usize,

    /// Source matrix shape, RxC.
    #[arg(long, value_parser = parse_pair)]
    pub dims: (usize, usize),

    /// Output shape for eps/omega, RxC; defaults to the source shape.
    #[arg(long, value_parser = parse_pair)]
    pub target: Option<(usize, usize)>,

    #[arg(long, value_enum, default_value = "col")]
    pub order: OrderArg,

    /// Print JSON instead of text.
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(long, default_value_t = 200)]
    pub cases: usize,

    #[arg(long, default_value_t = 1)]
    pub dim_lo: usize,

    #[arg(long, default_value_t = 16)]
    pub dim_hi: usize,

    /// Comma-separated algorithms.
    #[arg(long, value_enum, value_delimiter = ',', default_value = "square-pad,hegmm,hegmm-en")]
    pub algos: Vec<AlgoArg>,

    #[arg(long, value_enum, default_value = "csv")]
    pub format: FormatArg,

    #[arg(long)]
    pub out: Option<PathBuf>,

    /// JSON file with cost weights; missing fields keep their defaults.
    #[arg(long)]
    pub cost_model: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum FormatArg {
    Csv,
    Json,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum PlanArg {
    P1,
    P2,
    Custom,
}

#[derive(Debug, Args)]
pub struct BlockArgs {
    #[arg(long, value_enum, default_value = "p2")]
    pub plan: PlanArg,

    /// Cuts file for `--plan custom`.
    #[arg(long, required_if_eq("plan", "custom"))]
    pub cuts: Option<PathBuf>,

    #[command(flatten)]
    pub run: RunArgs,
}

fn parse_dims(s: &str, parts: usize) -> std::result::Result<Vec<usize>, String> {
    let v: Vec<usize> = s
        .split(['x', 'X', ','])
        .map(|p| p.trim().parse::<usize>().map_err(|_| format!("bad dimension {p:?} in {s:?}")))
        .collect::<std::result::Result<_, _>>()?;
    if v.len() != parts || v.contains(&0) {
        return Err(format!("expected {parts} positive dimensions separated by 'x', got {s:?}"));
    }
    Ok(v)
}

fn parse_pair(s: &str) -> std::result::Result<(usize, usize), String> {
    let v = parse_dims(s, 2)?;
    Ok((v[0], v[1]))
}

fn parse_triple(s: &str) -> std::result::Result<(usize, usize, usize), String> {
    let v = parse_dims(s, 3)?;
    Ok((v[0], v[1], v[2]))
}

struct Ctx<'a> {
    cli: &'a Cli,
    out: &'a mut dyn Write,
    err: &'a mut dyn Write,
    stderr_is_tty: bool,
}

/// Parses `args` and runs the command, returning the process exit status.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write, stderr_is_tty: bool) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let _ = write!(err, "{}", e.render());
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_USAGE,
            };
        }
    };
    let mut ctx = Ctx { cli: &cli, out, err, stderr_is_tty };
    match dispatch(&mut ctx) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(ctx.err, "error: {e}");
            exit_code(&e)
        }
    }
}

/// Entry point for the binary.
pub fn main_entry() -> i32 {
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    let tty = stderr.is_terminal();
    run(std::env::args_os(), &mut stdout.lock(), &mut stderr.lock(), tty)
}

fn dispatch(ctx: &mut Ctx<'_>) -> Result<()> {
    match &ctx.cli.command {
        Command::Multiply(args) => cmd_multiply(ctx, args),
        Command::Diagonals(args) => cmd_diagonals(ctx, args),
        Command::Bench(args) => cmd_bench(ctx, args),
        Command::BlockMultiply(args) => cmd_block(ctx, args),
    }
}

fn backend(cli: &Cli) -> Result<SimdEmulator> {
    SimdEmulator::new(BackendConfig { slot_count: cli.slots, plaintext_modulus: cli.modulus })
}

fn operands(cli: &Cli, run: &RunArgs) -> Result<(Matrix, Matrix)> {
    if let Some((m, l, n)) = run.random {
        let mut rng = ChaCha8Rng::seed_from_u64(cli.seed);
        let (lo, hi) = match cli.modulus {
            Some(q) => (0, q - 1),
            None => (-100, 100),
        };
        return Ok((Matrix::random(m, l, lo, hi, &mut rng), Matrix::random(l, n, lo, hi, &mut rng)));
    }
    let a = read_matrix(run.a.as_ref().expect("clap enforces operand a"))?;
    let b = read_matrix(run.b.as_ref().expect("clap enforces operand b"))?;
    if let Some(q) = cli.modulus {
        let arith = crate::matrix::Arithmetic::modular(q)?;
        return Ok((a.map(|x| arith.reduce(x)), b.map(|x| arith.reduce(x))));
    }
    Ok((a, b))
}

#[derive(Serialize)]
struct StatsReport {
    algorithm: String,
    dims: (usize, usize, usize),
    slots: usize,
    stats: OpStats,
    cost: CostEstimate,
    peak_ciphertexts: usize,
}

fn emit_stats(ctx: &mut Ctx<'_>, run: &RunArgs, report: &StatsReport) -> Result<()> {
    if let Some(path) = &run.stats_out {
        std::fs::write(path, serde_json::to_string_pretty(report)? + "\n")?;
        return Ok(());
    }
    let table = match run.stats {
        StatsArg::None => return Ok(()),
        StatsArg::Json => false,
        StatsArg::Table => true,
        StatsArg::Auto => ctx.stderr_is_tty,
    };
    if !table {
        writeln!(ctx.err, "{}", serde_json::to_string(report)?)?;
        return Ok(());
    }
    let (m, l, n) = report.dims;
    writeln!(ctx.err, "{} on ({m},{l},{n}), {} slots", report.algorithm, report.slots)?;
    writeln!(
        ctx.err,
        "{:<8}{:>8}{:>9}{:>9}{:>8}{:>9}{:>9}",
        "phase", "add", "mult_cc", "mult_cp", "rot", "encrypt", "decrypt"
    )?;
    for (name, c) in [("client", &report.stats.client), ("cloud", &report.stats.cloud)] {
        writeln!(
            ctx.err,
            "{name:<8}{:>8}{:>9}{:>9}{:>8}{:>9}{:>9}",
            c.add, c.mult_cc, c.mult_cp, c.rot, c.encrypt, c.decrypt
        )?;
    }
    let cost = &report.cost;
    writeln!(
        ctx.err,
        "predicted ms: client {:.3}, cloud {:.3}, total {:.3}; peak ciphertexts {}",
        cost.client_ms, cost.cloud_ms, cost.total_ms, report.peak_ciphertexts
    )?;
    Ok(())
}

fn emit_product(ctx: &mut Ctx<'_>, run: &RunArgs, c: &Matrix) -> Result<()> {
    match &run.out {
        Some(path) => write_matrix(c, path),
        None => write_matrix_text(c, &mut *ctx.out),
    }
}

fn cmd_multiply(ctx: &mut Ctx<'_>, args: &MultiplyArgs) -> Result<()> {
    let run = &args.run;
    let (a, b) = operands(ctx.cli, run)?;
    let be = backend(ctx.cli)?;
    let algo: Algorithm = run.algo.into();
    let opts = run.options();
    if ctx.cli.verbose && algo == Algorithm::HegmmEn && a.cols() == b.rows() {
        let s = select_strategy_with(a.rows(), a.cols(), b.cols(), &opts)?;
        writeln!(
            ctx.err,
            "strategy: p={} t={} duplicate={:?} order={} canvas={}x{} slots={}",
            s.p, s.t, s.duplicated, s.order, s.canvas.0, s.canvas.1, s.slots
        )?;
        for it in &s.schedule {
            writeln!(ctx.err, "  k={} partials={:?} redundant={:?}", it.k, it.partials, it.redundant)?;
        }
    }
    let c = multiply(algo, &a, &b, &opts, &be)?;
    emit_product(ctx, run, &c)?;
    let stats = be.stats();
    let report = StatsReport {
        algorithm: algo.to_string(),
        dims: (a.rows(), a.cols(), b.cols()),
        slots: ctx.cli.slots,
        stats,
        cost: estimate_cost(&stats, &CostModel::default()),
        peak_ciphertexts: be.peak_live_ciphertexts(),
    };
    emit_stats(ctx, run, &report)
}

fn cmd_block(ctx: &mut Ctx<'_>, args: &BlockArgs) -> Result<()> {
    let run = &args.run;
    let (a, b) = operands(ctx.cli, run)?;
    let (m, l, n) = (a.rows(), a.cols(), b.cols());
    let plan = match args.plan {
        PlanArg::P1 => BlockPlan::p1(m, l, n),
        PlanArg::P2 => BlockPlan::p2(m, l, n),
        PlanArg::Custom => read_block_plan(args.cuts.as_ref().expect("clap enforces --cuts"))?,
    };
    let algo: Algorithm = run.algo.into();
    if ctx.cli.verbose {
        writeln!(ctx.err, "cuts: rows {:?} inner {:?} cols {:?}", plan.row_cuts, plan.inner_cuts, plan.col_cuts)?;
        for t in block_schedule(&plan, algo, ctx.cli.slots)? {
            writeln!(
                ctx.err,
                "  block ({},{},{}) dims {:?} -> {}",
                t.row_block, t.inner_block, t.col_block, t.dims, t.algorithm
            )?;
        }
    }
    let be = backend(ctx.cli)?;
    let c = blocked_mm(&a, &b, &plan, algo, &run.options(), &be)?;
    emit_product(ctx, run, &c)?;
    let stats = be.stats();
    let report = StatsReport {
        algorithm: format!("blocked {algo}"),
        dims: (m, l, n),
        slots: ctx.cli.slots,
        stats,
        cost: estimate_cost(&stats, &CostModel::default()),
        peak_ciphertexts: be.peak_live_ciphertexts(),
    };
    emit_stats(ctx, run, &report)
}

#[derive(Serialize)]
struct DiagonalReport {
    transform: TransformKind,
    order: FlattenOrder,
    diagonals: usize,
    classic_bound: usize,
    sharp_bound: usize,
    entries: Vec<(i64, usize)>,
}

fn cmd_diagonals(ctx: &mut Ctx<'_>, args: &DiagonalsArgs) -> Result<()> {
    let (r, c) = args.dims;
    let (tr, tc) = args.target.unwrap_or(args.dims);
    let kind = match args.transform {
        TransformArg::Sigma => TransformKind::Sigma { m: r, l: c },
        TransformArg::Tau => TransformKind::Tau { l: r, n: c },
        TransformArg::Eps => {
            if tr != r {
                return Err(Error::DimensionMismatch(format!("eps keeps the row count: {r}x{c} -> {tr}x{tc}")));
            }
            TransformKind::Eps { k: args.k, m: r, l: c, n: tc }
        }
        TransformArg::Omega => {
            if tc != c {
                return Err(Error::DimensionMismatch(format!("omega keeps the column count: {r}x{c} -> {tr}x{tc}")));
            }
            TransformKind::Omega { k: args.k, l: r, m: tr, n: c }
        }
    };
    if args.target.is_some() && matches!(args.transform, TransformArg::Sigma | TransformArg::Tau) && (tr, tc) != (r, c)
    {
        return Err(Error::DimensionMismatch(format!("{} keeps the shape", kind.name())));
    }
    let order = args.order.resolve().unwrap_or(FlattenOrder::ColumnMajor);
    let t = Transform::new(kind, order);
    let plan = extract_diagonals(&build_permutation(&t)?);
    let bounds = diagonal_bounds(&t);
    let mut entries: Vec<(i64, usize)> = plan.entries().iter().map(|e| (e.offset, e.weight())).collect();
    entries.sort_by_key(|&(z, w)| (std::cmp::Reverse(w), z));
    let report = DiagonalReport {
        transform: kind,
        order,
        diagonals: plan.len(),
        classic_bound: bounds.classic,
        sharp_bound: bounds.sharp,
        entries,
    };
    if args.json {
        writeln!(ctx.out, "{}", serde_json::to_string_pretty(&report)?)?;
        return Ok(());
    }
    let (ir, ic) = kind.input_shape();
    let (or, oc) = kind.output_shape();
    let k = match kind {
        TransformKind::Eps { k, .. } | TransformKind::Omega { k, .. } => format!(" k={k}"),
        _ => String::new(),
    };
    writeln!(ctx.out, "{}{k} {ir}x{ic} -> {or}x{oc} {order}", kind.name())?;
    writeln!(
        ctx.out,
        "diagonals: {} (classic bound {}, sharp bound {})",
        report.diagonals, bounds.classic, bounds.sharp
    )?;
    let offsets: Vec<String> = report.entries.iter().map(|(z, _)| format!("{z:+}")).collect();
    writeln!(ctx.out, "offsets: {}", offsets.join(","))?;
    for (z, w) in &report.entries {
        writeln!(ctx.out, "  offset {z:+} weight {w}")?;
    }
    Ok(())
}

fn cmd_bench(ctx: &mut Ctx<'_>, args: &BenchArgs) -> Result<()> {
    let cost_model = match &args.cost_model {
        Some(p) => CostModel::from_json_file(p)?,
        None => CostModel::default(),
    };
    let mut algorithms: Vec<Algorithm> = args.algos.iter().map(|&a| a.into()).collect();
    algorithms.dedup();
    let cfg = CampaignConfig {
        cases: args.cases,
        dim_lo: args.dim_lo,
        dim_hi: args.dim_hi,
        seed: ctx.cli.seed,
        algorithms,
        slot_count: ctx.cli.slots,
        plaintext_modulus: ctx.cli.modulus,
        value_range: match ctx.cli.modulus {
            Some(q) => (0, q - 1),
            None => (-100, 100),
        },
        cost_model,
    };
    let campaign = run_emulated_campaign(&cfg)?;
    let format = match args.format {
        FormatArg::Csv => ReportFormat::Csv,
        FormatArg::Json => ReportFormat::Json,
    };
    match &args.out {
        Some(path) => emit_report(&campaign, format, std::io::BufWriter::new(std::fs::File::create(path)?))?,
        None => emit_report(&campaign, format, &mut *ctx.out)?,
    }
    let s = &campaign.summary;
    writeln!(ctx.err, "cases {} (resampled {}), all exact: {}", s.cases, s.resampled, s.all_exact)?;
    for r in s.ratios.iter().filter(|r| ctx.cli.verbose || r.group == "all") {
        writeln!(
            ctx.err,
            "  {} / {} [{}]: n={} mean {:.3} median {:.3} max {:.3}",
            r.baseline, r.candidate, r.group, r.cases, r.mean, r.median, r.max
        )?;
    }
    Ok(())
}

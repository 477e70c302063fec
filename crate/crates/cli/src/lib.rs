//! Command-line front end: `generate`, `join`, `verify` and `bench`.

pub mod report;

use std::fmt::Write as _;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use tilejoin::dataset::{read_dataset, write_dataset, Format};
use tilejoin::join::{run_join, CountSink, UNBOUNDED};
use tilejoin::oracle::{direct_sq_dist, ORACLE_GUARD};
use tilejoin::verify::verify_join;
use tilejoin::{generate, Dataset, Error, GenSpec, JoinConfig, KernelRegistry};

use report::{
    aggregate_runs, attach_speedups, BenchReport, DatasetSummary, ResultSummary, RunReport,
    REPORT_FORMAT_VERSION,
};

pub mod exit {
    pub const SUCCESS: u8 = 0;
    pub const USAGE: u8 = 2;
    pub const VALIDATION: u8 = 3;
    pub const IO: u8 = 4;
    pub const RESOURCE: u8 = 5;
    pub const MISMATCH: u8 = 6;
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Engine(#[from] Error),
    #[error("usage: {0}")]
    Usage(String),
    #[error("engine and oracle disagree on {0} pairs")]
    Mismatch(u64),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => exit::USAGE,
            CliError::Mismatch(_) => exit::MISMATCH,
            CliError::Engine(e) => match e {
                Error::Validation(_) | Error::Bounds { .. } => exit::VALIDATION,
                Error::Io(_) | Error::Parse { .. } => exit::IO,
                Error::Resource(_) => exit::RESOURCE,
            },
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Engine(Error::Io(e))
    }
}

#[derive(Debug, Parser)]
#[command(name = "tilejoin", version, about = "Epsilon self-join with tile-based distance kernels")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic dataset on [0, 1)^d.
    Generate(GenerateArgs),
    /// Run the self-join and write a report.
    Join(JoinArgs),
    /// Compare the self-join against the brute-force oracle.
    Verify(VerifyArgs),
    /// Time an epsilon sweep over one or more kernels.
    Bench(BenchArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum DistArg {
    Uniform,
    #[value(alias = "exponential")]
    Expo,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum FormatArg {
    Csv,
    Binary,
}

impl From<FormatArg> for Format {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Csv => Format::Csv,
            FormatArg::Binary => Format::Binary,
        }
    }
}

fn resolve_format(path: &Path, arg: Option<FormatArg>) -> Format {
    arg.map(Format::from).unwrap_or_else(|| Format::from_path(path))
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[arg(long, value_enum)]
    pub dist: DistArg,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub n: u64,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub d: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Rate of the truncated exponential distribution.
    #[arg(long, default_value_t = tilejoin::dataset::DEFAULT_EXPO_RATE)]
    pub rate: f64,
    #[arg(long)]
    pub out: PathBuf,
    /// Defaults to csv for .csv/.txt paths and binary otherwise.
    #[arg(long, value_enum)]
    pub format: Option<FormatArg>,
}

#[derive(Debug, Args, Clone)]
pub struct EngineArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, value_enum)]
    pub format: Option<FormatArg>,
    /// Indexed dimensions (default min(d, 6)).
    #[arg(long = "k-idx")]
    pub k_idx: Option<usize>,
    /// Target estimated pairs per batch (default unbounded).
    #[arg(long = "batch-size")]
    pub batch_size: Option<u64>,
    #[arg(long, env = "TILEJOIN_THREADS", default_value_t = 1)]
    pub threads: usize,
    /// Sort dimensions by descending variance before indexing.
    #[arg(long = "reorder-dims")]
    pub reorder_dims: bool,
    #[arg(long = "no-short-circuit")]
    pub no_short_circuit: bool,
}

impl EngineArgs {
    fn config(&self, epsilon: f64, kernel: &str) -> JoinConfig {
        JoinConfig {
            short_circuit: !self.no_short_circuit,
            k_idx: self.k_idx,
            batch_size: self.batch_size.unwrap_or(UNBOUNDED),
            thread_count: self.threads,
            reorder_dims: self.reorder_dims,
            ..JoinConfig::new(epsilon).with_kernel(kernel)
        }
    }

    fn load(&self) -> Result<(Dataset, DatasetSummary), CliError> {
        let ds = read_dataset(&self.input, resolve_format(&self.input, self.format))?;
        let summary = DatasetSummary {
            n: ds.len(),
            d: ds.dims(),
            source: self.input.display().to_string(),
            checksum: ds.checksum(),
        };
        Ok((ds, summary))
    }
}

#[derive(Debug, Args)]
pub struct JoinArgs {
    #[command(flatten)]
    pub engine: EngineArgs,
    #[arg(long)]
    pub epsilon: f64,
    #[arg(long, default_value = "tile")]
    pub kernel: String,
    /// Write canonical "i j sq_dist" lines.
    #[arg(long = "emit-pairs")]
    pub emit_pairs: Option<PathBuf>,
    /// Write the JSON report here instead of stdout.
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub engine: EngineArgs,
    #[arg(long)]
    pub epsilon: f64,
    #[arg(long, default_value = "tile")]
    pub kernel: String,
    /// Allow the quadratic oracle beyond its size guard.
    #[arg(long)]
    pub force: bool,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[command(flatten)]
    pub engine: EngineArgs,
    #[arg(long, value_delimiter = ',', required = true)]
    pub epsilons: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_value = "tile,scalar")]
    pub kernels: Vec<String>,
    #[arg(long, default_value_t = 3, value_parser = clap::value_parser!(u64).range(1..))]
    pub repeats: u64,
    /// Write the JSON report here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

/// Executes a parsed command, writing human/JSON output to `stdout`.
pub fn run(cli: Cli, stdout: &mut dyn Write) -> Result<(), CliError> {
    let registry = KernelRegistry::with_builtins();
    match cli.command {
        Command::Generate(args) => cmd_generate(&args, stdout),
        Command::Join(args) => cmd_join(&args, &registry, stdout).map(|_| ()),
        Command::Verify(args) => cmd_verify(&args, &registry, stdout),
        Command::Bench(args) => cmd_bench(&args, &registry, stdout).map(|_| ()),
    }
}

pub fn cmd_generate(args: &GenerateArgs, stdout: &mut dyn Write) -> Result<(), CliError> {
    let spec = match args.dist {
        DistArg::Uniform => GenSpec::uniform(args.n as usize, args.d as usize, args.seed),
        DistArg::Expo => {
            GenSpec::exponential(args.n as usize, args.d as usize, args.seed).with_rate(args.rate)
        }
    };
    let ds = generate(&spec)?;
    write_dataset(&ds, &args.out, resolve_format(&args.out, args.format))?;
    writeln!(stdout, "{}", ds.checksum())?;
    Ok(())
}

pub fn cmd_join(
    args: &JoinArgs,
    registry: &KernelRegistry,
    stdout: &mut dyn Write,
) -> Result<RunReport, CliError> {
    let (ds, summary) = args.engine.load()?;
    let config = args.engine.config(args.epsilon, &args.kernel);
    let result = tilejoin::self_join_with(&ds, &config, registry)?;
    if let Some(path) = &args.emit_pairs {
        write_pairs(&ds, result.pair_ids().into_iter(), path)?;
    }
    let report = RunReport {
        format_version: REPORT_FORMAT_VERSION,
        config,
        dataset: summary,
        result: ResultSummary {
            total_pairs: result.total_pairs(),
            selectivity: result.selectivity(),
        },
        stats: result.stats,
    };
    emit_json(&report.to_json(), args.report.as_deref(), stdout)?;
    Ok(report)
}

/// Pair lines carry the directly computed squared distance (ascending
/// dimension sum), so files from different kernels compare byte for byte.
fn write_pairs(
    ds: &Dataset,
    pairs: impl Iterator<Item = (u32, u32)>,
    path: &Path,
) -> Result<(), CliError> {
    let mut out = BufWriter::new(fs::File::create(path)?);
    for (i, j) in pairs {
        let sq = direct_sq_dist(ds.point(i as usize), ds.point(j as usize));
        writeln!(out, "{i} {j} {sq:.16e}")?;
    }
    out.flush()?;
    Ok(())
}

fn emit_json(json: &str, path: Option<&Path>, stdout: &mut dyn Write) -> Result<(), CliError> {
    match path {
        Some(p) => fs::write(p, json)?,
        None => writeln!(stdout, "{json}")?,
    }
    Ok(())
}

pub fn cmd_verify(
    args: &VerifyArgs,
    registry: &KernelRegistry,
    stdout: &mut dyn Write,
) -> Result<(), CliError> {
    let (ds, _) = args.engine.load()?;
    if ds.len() > ORACLE_GUARD && !args.force {
        return Err(Error::Resource(format!(
            "{} points exceed the verification guard of {ORACLE_GUARD}; pass --force",
            ds.len()
        ))
        .into());
    }
    let config = args.engine.config(args.epsilon, &args.kernel);
    let report = verify_join(&ds, &config, registry, args.force)?;
    if report.matches() {
        writeln!(stdout, "ok: {} pairs match the oracle", report.engine_pairs)?;
        return Ok(());
    }
    let mut msg = format!(
        "MISMATCH: engine {} pairs, oracle {} pairs, {} differences\n",
        report.engine_pairs, report.oracle_pairs, report.total_differences
    );
    for (i, j) in &report.missing {
        let _ = writeln!(msg, "- {i} {j}");
    }
    for (i, j) in &report.extra {
        let _ = writeln!(msg, "+ {i} {j}");
    }
    write!(stdout, "{msg}")?;
    Err(CliError::Mismatch(report.total_differences))
}

pub fn cmd_bench(
    args: &BenchArgs,
    registry: &KernelRegistry,
    stdout: &mut dyn Write,
) -> Result<BenchReport, CliError> {
    let (ds, summary) = args.engine.load()?;
    let report = bench_dataset(&ds, summary, &args.engine, &args.epsilons, &args.kernels, args.repeats as usize, registry)?;
    emit_json(
        &serde_json::to_string_pretty(&report).expect("bench report serializes"),
        args.out.as_deref(),
        stdout,
    )?;
    if let Some(path) = &args.csv {
        fs::write(path, report.to_csv())?;
    }
    Ok(report)
}

/// Times every `(epsilon, kernel)` combination `repeats` times. Pairs are
/// counted, not stored.
pub fn bench_dataset(
    ds: &Dataset,
    summary: DatasetSummary,
    engine: &EngineArgs,
    epsilons: &[f64],
    kernels: &[String],
    repeats: usize,
    registry: &KernelRegistry,
) -> Result<BenchReport, CliError> {
    if epsilons.is_empty() || kernels.is_empty() {
        return Err(CliError::Usage("need at least one epsilon and one kernel".into()));
    }
    let mut rows = Vec::new();
    for &eps in epsilons {
        for kernel in kernels {
            let config = engine.config(eps, kernel);
            let mut runs = Vec::with_capacity(repeats);
            for _ in 0..repeats.max(1) {
                let mut sink = CountSink::default();
                let run = run_join(ds, &config, registry, &mut sink)?;
                runs.push(RunReport {
                    format_version: REPORT_FORMAT_VERSION,
                    config: config.clone(),
                    dataset: summary.clone(),
                    result: ResultSummary {
                        total_pairs: run.total_pairs,
                        selectivity: tilejoin::selectivity(run.total_pairs, ds.len()),
                    },
                    stats: run.stats,
                });
            }
            rows.push(
                aggregate_runs(&runs)
                    .map_err(|e| CliError::Engine(Error::Validation(e.to_string())))?,
            );
        }
    }
    attach_speedups(&mut rows);
    Ok(BenchReport {
        format_version: REPORT_FORMAT_VERSION,
        dataset: summary,
        repeats: repeats.max(1),
        rows,
    })
}

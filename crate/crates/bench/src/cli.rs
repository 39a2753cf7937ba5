//! Subcommands of the `whd-bench` binary.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, ensure, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use whd_core::encode::{GaussianMixture, BASE_STREAM, DEFAULT_COMPONENTS, QUERY_STREAM};
use whd_core::io::{BvecsReader, CodeReader, CodeWriter, FvecsReader};
use whd_core::{brute_force_knn, read_codes, read_ivecs, BinaryCode, LshModel};

use crate::oracle::{oracle_check, Mutation, OracleConfig};
use crate::run::{bench, write_report, Index, Method, Query, ReportFormat, WeightScheme, Workload};

#[derive(Debug, Parser)]
#[command(name = "whd-bench", version, about = "Weighted Hamming distance KNN: encode, index, search, benchmark")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Encode vectors into a code file with random-hyperplane hashing.
    Encode(EncodeArgs),
    /// Build an index over a code file and print its shape.
    Build(BuildArgs),
    /// Run queries against a code file and report timings and precision.
    Search(SearchArgs),
    /// End-to-end benchmark on a synthetic Gaussian mixture.
    Bench(BenchArgs),
    /// Check the enumerator against exhaustive and priority-queue enumeration.
    OracleCheck(OracleArgs),
}

/// Input vector file format.
#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Fvecs,
    Bvecs,
    /// A code file; queries get unit weights.
    Codes,
}

#[derive(Debug, Args)]
pub struct EncodeArgs {
    /// Input vectors (omit to use --synth).
    #[arg(long, conflicts_with = "synth")]
    pub input: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "fvecs")]
    pub format: Format,
    /// Generate this many synthetic vectors instead of reading a file.
    #[arg(long)]
    pub synth: Option<usize>,
    /// Dimension of synthetic vectors.
    #[arg(long, default_value_t = 128)]
    pub dim: usize,
    #[arg(long, default_value_t = 64)]
    pub bits: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Encode with this existing model instead of training one.
    #[arg(long)]
    pub use_model: Option<PathBuf>,
    /// Where to write the trained model (JSON).
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Output code file.
    #[arg(long, short)]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct BuildArgs {
    #[arg(long)]
    pub codes: PathBuf,
    #[arg(long, value_enum, default_value = "cse-multi")]
    pub method: Method,
    /// Table count (default: round(b / log2 n)).
    #[arg(long)]
    pub tables: Option<usize>,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    #[arg(long, value_enum, default_value = "csv")]
    pub report: ReportFormat,
    /// Report destination (default: stdout).
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SearchArgs {
    /// Indexed codes.
    #[arg(long)]
    pub codes: PathBuf,
    /// Model used to encode queries and derive weights.
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Query file (omit to use --synth-queries).
    #[arg(long, conflicts_with = "synth_queries")]
    pub queries: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "fvecs")]
    pub format: Format,
    /// Generate this many synthetic queries from the mixture of --seed.
    #[arg(long)]
    pub synth_queries: Option<usize>,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Use only the first N queries.
    #[arg(long)]
    pub limit: Option<usize>,
    /// Ground-truth neighbor IDs (ivecs), one row per query.
    #[arg(long)]
    pub gt: Option<PathBuf>,
    #[arg(long, value_delimiter = ',', default_value = "1,10,100")]
    pub k: Vec<usize>,
    #[arg(long, value_enum, value_delimiter = ',', default_value = "cse-multi,linear,lookup")]
    pub method: Vec<Method>,
    #[arg(long)]
    pub tables: Option<usize>,
    #[arg(long, value_enum, default_value = "asym")]
    pub weights: WeightScheme,
    #[command(flatten)]
    pub report: ReportArgs,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// Base vectors.
    #[arg(long, default_value_t = 100_000)]
    pub n: usize,
    #[arg(long, default_value_t = 128)]
    pub dim: usize,
    #[arg(long, value_delimiter = ',', default_value = "64")]
    pub bits: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_value = "1,10,100")]
    pub k: Vec<usize>,
    #[arg(long, default_value_t = 1000)]
    pub queries: usize,
    /// Methods (default: every method applicable to the code width).
    #[arg(long, value_enum, value_delimiter = ',')]
    pub method: Vec<Method>,
    #[arg(long)]
    pub tables: Option<usize>,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Euclidean neighbors per query used as ground truth; 0 skips precision.
    #[arg(long, default_value_t = 100)]
    pub gt_k: usize,
    #[arg(long, value_enum, default_value = "asym")]
    pub weights: WeightScheme,
    #[command(flatten)]
    pub report: ReportArgs,
}

#[derive(Debug, Args)]
pub struct OracleArgs {
    #[arg(long, default_value_t = 1)]
    pub min_bits: usize,
    #[arg(long, default_value_t = 16)]
    pub max_bits: usize,
    #[arg(long, default_value_t = 100)]
    pub trials: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 0)]
    pub first_trial: usize,
    /// Prefix length compared against the priority-queue enumerator.
    #[arg(long, default_value_t = 4096)]
    pub length: usize,
    /// Inject a fault into the enumerator.
    #[arg(long, value_enum, default_value = "none")]
    pub mutate: Mutation,
}

/// Runs a parsed command, writing human-readable output to `out`. Returns
/// whether the command succeeded (oracle checks can fail without an error).
pub fn run(cli: Cli, out: &mut dyn Write) -> Result<bool> {
    match cli.command {
        Command::Encode(a) => encode(a, out).map(|_| true),
        Command::Build(a) => build(a, out).map(|_| true),
        Command::Search(a) => search(a, out).map(|_| true),
        Command::Bench(a) => bench_cmd(a, out).map(|_| true),
        Command::OracleCheck(a) => {
            let report = oracle_check(&OracleConfig {
                min_bits: a.min_bits,
                max_bits: a.max_bits,
                trials: a.trials,
                seed: a.seed,
                first_trial: a.first_trial,
                length: a.length,
                mutation: a.mutate,
            })?;
            writeln!(out, "{report}")?;
            Ok(report.passed())
        }
    }
}

pub fn load_model(path: &Path) -> Result<LshModel<f32>> {
    let file = File::open(path).with_context(|| format!("opening model {}", path.display()))?;
    let model: LshModel<f32> = serde_json::from_reader(io::BufReader::new(file))
        .with_context(|| format!("parsing model {}", path.display()))?;
    model.validate()?;
    Ok(model)
}

pub fn save_model(path: &Path, model: &LshModel<f32>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?);
    serde_json::to_writer(&mut w, model)?;
    w.flush()?;
    Ok(())
}

/// Streams vectors from a file as `f32`.
fn vectors(path: &Path, format: Format) -> Result<Box<dyn Iterator<Item = Result<Vec<f32>>>>> {
    let shown = path.display().to_string();
    let ctx = move |r: whd_core::Result<Vec<f32>>| r.with_context(|| format!("reading {shown}"));
    let open_ctx = || format!("opening {}", path.display());
    Ok(match format {
        Format::Fvecs => Box::new(FvecsReader::open(path).with_context(open_ctx)?.map(ctx)),
        Format::Bvecs => Box::new(
            BvecsReader::open(path)
                .with_context(open_ctx)?
                .map(|r| r.map(|v| v.into_iter().map(f32::from).collect()))
                .map(ctx),
        ),
        Format::Codes => bail!("expected a vector file, not a code file"),
    })
}

fn encode(a: EncodeArgs, out: &mut dyn Write) -> Result<()> {
    let start = Instant::now();
    let mixture;
    let (dim, input): (usize, Box<dyn Iterator<Item = Result<Vec<f32>>>>) = match (&a.input, a.synth) {
        (Some(path), _) => {
            let mut it = vectors(path, a.format)?.peekable();
            let dim = match it.peek() {
                Some(Ok(v)) => v.len(),
                Some(Err(_)) => return Err(it.next().expect("peeked").unwrap_err()),
                None => bail!("{} holds no vectors", path.display()),
            };
            (dim, Box::new(it))
        }
        (None, Some(n)) => {
            mixture = GaussianMixture::new(a.dim, DEFAULT_COMPONENTS, a.seed)?;
            (a.dim, Box::new(mixture.samples::<f32>(n, BASE_STREAM).map(Ok)))
        }
        (None, None) => bail!("give --input or --synth"),
    };
    let model = match &a.use_model {
        Some(path) => load_model(path)?,
        None => LshModel::train(dim, a.bits, a.seed)?,
    };
    ensure!(
        model.dim() == dim,
        "input vectors have dimension {dim} but the model expects {}",
        model.dim()
    );
    let mut writer = CodeWriter::create(&a.output, model.bits())?;
    for v in input {
        writer.push(&model.encode(&v?)?)?;
    }
    let count = writer.count();
    writer.finish()?;
    if let Some(path) = &a.model {
        save_model(path, &model)?;
    }
    writeln!(
        out,
        "encoded {count} vectors of dimension {dim} into {}-bit codes in {:.2?}",
        model.bits(),
        start.elapsed()
    )?;
    Ok(())
}

fn build(a: BuildArgs, out: &mut dyn Write) -> Result<()> {
    let file = read_codes(&a.codes).with_context(|| format!("reading {}", a.codes.display()))?;
    let start = Instant::now();
    let index = Index::build(a.method, file.width, &file.codes, a.tables)?;
    let elapsed = start.elapsed();
    write!(out, "{} over {} codes of {} bits", a.method.name(), file.codes.len(), file.width)?;
    match &index {
        Index::Single(t) => write!(out, ", {} non-empty buckets", t.non_empty_buckets())?,
        Index::Multi(x) => {
            let lens: Vec<String> = x.slices().iter().map(|s| s.len.to_string()).collect();
            let buckets: Vec<String> = x.tables().iter().map(|t| t.non_empty_buckets().to_string()).collect();
            write!(
                out,
                ", {} tables of widths [{}], non-empty buckets [{}]",
                lens.len(),
                lens.join(", "),
                buckets.join(", ")
            )?;
        }
        Index::Linear(_) | Index::Lookup(_) => {}
    }
    writeln!(out, ", built in {elapsed:.2?}")?;
    Ok(())
}

fn report(args: &ReportArgs, rows: &[crate::run::BenchRow], out: &mut dyn Write) -> Result<()> {
    match &args.output {
        Some(path) => write_report(BufWriter::new(File::create(path)?), rows, args.report),
        None => write_report(out, rows, args.report),
    }
}

fn search(a: SearchArgs, out: &mut dyn Write) -> Result<()> {
    let file = read_codes(&a.codes).with_context(|| format!("reading {}", a.codes.display()))?;
    let limit = a.limit.unwrap_or(usize::MAX);
    let code_queries = a.queries.as_ref().filter(|_| a.format == Format::Codes);
    let queries: Vec<Query> = if let Some(path) = code_queries {
        let r = CodeReader::open(path).with_context(|| format!("reading {}", path.display()))?;
        ensure!(r.width() == file.width, "query codes have {} bits, index {}", r.width(), file.width);
        r.take(limit)
            .map(|c| Query::unit(c?))
            .collect::<Result<_>>()?
    } else {
        let path = a.model.as_ref().context("--model is needed to encode query vectors")?;
        let model = load_model(path)?;
        ensure!(
            model.bits() == file.width,
            "model produces {} bits, index holds {}",
            model.bits(),
            file.width
        );
        let raw: Vec<Vec<f32>> = match (&a.queries, a.synth_queries) {
            (Some(path), _) => vectors(path, a.format)?.take(limit).collect::<Result<_>>()?,
            (None, Some(n)) => GaussianMixture::new(model.dim(), DEFAULT_COMPONENTS, a.seed)?
                .samples(n.min(limit), QUERY_STREAM)
                .collect(),
            (None, None) => bail!("give --queries or --synth-queries"),
        };
        raw.iter()
            .map(|v| Query::from_vector(&model, v, a.weights))
            .collect::<Result<_>>()?
    };
    ensure!(!queries.is_empty(), "no queries");
    let truth = match &a.gt {
        Some(path) => {
            let rows = read_ivecs(path).with_context(|| format!("reading {}", path.display()))?;
            ensure!(rows.len() >= queries.len(), "{} ground-truth rows for {} queries", rows.len(), queries.len());
            Some(
                rows.into_iter()
                    .take(queries.len())
                    .map(|r| r.into_iter().map(|i| i as u32).collect())
                    .collect::<Vec<Vec<u32>>>(),
            )
        }
        None => None,
    };
    let rows = bench(
        &Workload {
            width: file.width,
            codes: &file.codes,
            queries: &queries,
            truth: truth.as_deref(),
        },
        &a.method,
        &a.k,
        a.tables,
    )?;
    report(&a.report, &rows, out)
}

fn bench_cmd(a: BenchArgs, out: &mut dyn Write) -> Result<()> {
    ensure!(a.n >= 1 && a.queries >= 1, "need at least one vector and one query");
    let mixture = GaussianMixture::new(a.dim, DEFAULT_COMPONENTS, a.seed)?;
    let raw_queries: Vec<Vec<f32>> = mixture.samples(a.queries, QUERY_STREAM).collect();
    let truth = if a.gt_k > 0 {
        let base: Vec<Vec<f32>> = mixture.samples(a.n, BASE_STREAM).collect();
        Some(
            raw_queries
                .iter()
                .map(|q| brute_force_knn(&base, q, a.gt_k))
                .collect::<whd_core::Result<Vec<_>>>()?,
        )
    } else {
        None
    };
    let mut rows = Vec::new();
    for &bits in &a.bits {
        let model = LshModel::<f32>::train(a.dim, bits, a.seed)?;
        let codes: Vec<BinaryCode> = mixture
            .samples::<f32>(a.n, BASE_STREAM)
            .map(|v| model.encode(&v))
            .collect::<whd_core::Result<_>>()?;
        let queries: Vec<Query> = raw_queries
            .iter()
            .map(|v| Query::from_vector(&model, v, a.weights))
            .collect::<Result<_>>()?;
        let methods = if a.method.is_empty() {
            default_methods(bits)
        } else {
            a.method.clone()
        };
        rows.extend(bench(
            &Workload {
                width: bits,
                codes: &codes,
                queries: &queries,
                truth: truth.as_deref(),
            },
            &methods,
            &a.k,
            a.tables,
        )?);
    }
    report(&a.report, &rows, out)
}

/// Every method that accepts codes of `bits` bits.
pub fn default_methods(bits: usize) -> Vec<Method> {
    let mut m = vec![Method::Linear, Method::Lookup, Method::CseMulti];
    if bits <= whd_core::single_table::MAX_TABLE_WIDTH {
        m.push(Method::CseSingle);
    }
    m
}

//! Index construction, timed query runs and report rows.

use std::collections::HashSet;
use std::io::Write;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::ValueEnum;
use serde::{Deserialize, Serialize};
use whd_core::single_table::MAX_TABLE_WIDTH;
use whd_core::{
    choose_m, linear_scan_knn, lookup_scan_knn, BinaryCode, LshModel, MultiIndex, SearchResult, SingleTable,
    WeightVector,
};

/// A search method.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    /// One table addressed by the whole code (at most 32 bits).
    CseSingle,
    /// Substring tables with certified termination.
    CseMulti,
    /// Weighted distance to every item, one set bit at a time.
    Linear,
    /// 8-bit lookup tables, every item.
    Lookup,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::CseSingle => "cse-single",
            Method::CseMulti => "cse-multi",
            Method::Linear => "linear",
            Method::Lookup => "lookup",
        }
    }
}

/// How query weights are derived.
#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum WeightScheme {
    /// `|row_j . q|` per hyperplane.
    Asym,
    /// All ones: plain Hamming distance.
    Unit,
}

/// A query code with its weights.
#[derive(Clone, Debug)]
pub struct Query {
    pub code: BinaryCode,
    pub weights: WeightVector<f64>,
}

impl Query {
    pub fn from_vector(model: &LshModel<f32>, v: &[f32], scheme: WeightScheme) -> Result<Self> {
        let (code, w) = model.asym_weights(v)?;
        let weights = match scheme {
            WeightScheme::Asym => WeightVector::new(w.as_slice().iter().map(|&x| f64::from(x)).collect())?,
            WeightScheme::Unit => WeightVector::uniform(code.width())?,
        };
        Ok(Self { code, weights })
    }

    pub fn unit(code: BinaryCode) -> Result<Self> {
        Ok(Self {
            weights: WeightVector::uniform(code.width())?,
            code,
        })
    }
}

/// A built index for one method.
pub enum Index<'a> {
    Single(SingleTable),
    Multi(MultiIndex),
    Linear(&'a [BinaryCode]),
    Lookup(&'a [BinaryCode]),
}

impl<'a> Index<'a> {
    /// `tables` overrides the multi-index table count.
    pub fn build(method: Method, width: usize, codes: &'a [BinaryCode], tables: Option<usize>) -> Result<Self> {
        Ok(match method {
            Method::CseSingle => {
                if width > MAX_TABLE_WIDTH {
                    bail!("cse-single handles codes of at most {MAX_TABLE_WIDTH} bits, got {width}; use cse-multi");
                }
                Index::Single(SingleTable::build(width, codes)?)
            }
            Method::CseMulti => {
                let m = tables.unwrap_or_else(|| choose_m(width, codes.len().max(2)));
                Index::Multi(MultiIndex::build(width, codes.to_vec(), m)?)
            }
            Method::Linear => Index::Linear(codes),
            Method::Lookup => Index::Lookup(codes),
        })
    }

    pub fn method(&self) -> Method {
        match self {
            Index::Single(_) => Method::CseSingle,
            Index::Multi(_) => Method::CseMulti,
            Index::Linear(_) => Method::Linear,
            Index::Lookup(_) => Method::Lookup,
        }
    }

    /// Table count, for the hashing methods.
    pub fn tables(&self) -> Option<usize> {
        match self {
            Index::Single(_) => Some(1),
            Index::Multi(x) => Some(x.slices().len()),
            _ => None,
        }
    }

    pub fn search(&self, q: &Query, k: usize) -> Result<SearchResult<f64>> {
        Ok(match self {
            Index::Single(t) => t.knn(&q.code, &q.weights, k)?,
            Index::Multi(x) => x.knn(&q.code, &q.weights, k)?,
            Index::Linear(codes) => linear_scan_knn(codes, &q.code, &q.weights, k)?,
            Index::Lookup(codes) => lookup_scan_knn(codes, &q.code, &q.weights, k)?,
        })
    }
}

/// Fraction of the first `k` returned IDs found in `truth`; divides by `k`
/// even when fewer were returned.
pub fn precision_at_k(returned: &[u32], truth: &[u32], k: usize) -> f64 {
    let truth: HashSet<u32> = truth.iter().copied().collect();
    let hits = returned.iter().take(k).filter(|id| truth.contains(id)).count();
    hits as f64 / k as f64
}

/// Linear-scan time over method time.
pub fn speedup(linear_ms: f64, method_ms: f64) -> f64 {
    linear_ms / method_ms
}

/// Results of one method over a query set.
pub struct Run {
    pub mean_ms: f64,
    pub results: Vec<SearchResult<f64>>,
}

/// Number of untimed queries run first to warm caches.
pub const WARMUP_QUERIES: usize = 10;

/// Runs every query single-threaded. Index build is not timed.
pub fn run_queries(index: &Index, queries: &[Query], k: usize) -> Result<Run> {
    for q in queries.iter().take(WARMUP_QUERIES) {
        index.search(q, k)?;
    }
    let mut results = Vec::with_capacity(queries.len());
    let start = Instant::now();
    for q in queries {
        results.push(index.search(q, k)?);
    }
    let elapsed = start.elapsed().as_secs_f64() * 1e3;
    Ok(Run {
        mean_ms: elapsed / queries.len().max(1) as f64,
        results,
    })
}

/// One report line per (method, bits, tables, k).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub method: Method,
    pub bits: usize,
    /// Table count; empty for the scans.
    pub tables: Option<usize>,
    pub k: usize,
    pub queries: usize,
    pub mean_ms: f64,
    /// Linear-scan mean time over this method's; empty without a linear run.
    pub speedup: Option<f64>,
    /// Mean precision@k; empty without ground truth.
    pub precision: Option<f64>,
    pub mean_probes: f64,
    pub mean_distance_computations: f64,
    /// Mean enumerated sequence length per table.
    pub mean_sequence_len: f64,
}

impl BenchRow {
    fn new(index: &Index, bits: usize, k: usize, run: &Run, truth: Option<&[Vec<u32>]>) -> Self {
        let n = run.results.len().max(1) as f64;
        let mean = |f: &dyn Fn(&SearchResult<f64>) -> f64| run.results.iter().map(f).sum::<f64>() / n;
        Self {
            method: index.method(),
            bits,
            tables: index.tables(),
            k,
            queries: run.results.len(),
            mean_ms: run.mean_ms,
            speedup: None,
            precision: truth.map(|gt| {
                run.results
                    .iter()
                    .zip(gt)
                    .map(|(r, t)| precision_at_k(&r.ids(), t, k))
                    .sum::<f64>()
                    / n
            }),
            mean_probes: mean(&|r| r.stats.probes as f64),
            mean_distance_computations: mean(&|r| r.stats.distance_computations as f64),
            mean_sequence_len: mean(&|r| {
                let lens = &r.stats.sequence_lens;
                if lens.is_empty() {
                    0.0
                } else {
                    lens.iter().sum::<usize>() as f64 / lens.len() as f64
                }
            }),
        }
    }
}

/// Codes, queries and optional ground truth for a benchmark.
pub struct Workload<'a> {
    pub width: usize,
    pub codes: &'a [BinaryCode],
    pub queries: &'a [Query],
    /// Per-query ground-truth neighbor IDs.
    pub truth: Option<&'a [Vec<u32>]>,
}

/// Builds each method's index once and runs every `k`. Speed-ups are filled
/// in when `methods` includes the linear scan.
pub fn bench(work: &Workload, methods: &[Method], ks: &[usize], tables: Option<usize>) -> Result<Vec<BenchRow>> {
    if let Some(gt) = work.truth {
        if gt.len() != work.queries.len() {
            bail!("{} ground-truth rows for {} queries", gt.len(), work.queries.len());
        }
    }
    let indexes = methods
        .iter()
        .map(|&m| Index::build(m, work.width, work.codes, tables).with_context(|| format!("building {}", m.name())))
        .collect::<Result<Vec<_>>>()?;
    let mut rows = Vec::new();
    for &k in ks {
        let start = rows.len();
        for index in &indexes {
            let run = run_queries(index, work.queries, k)?;
            rows.push(BenchRow::new(index, work.width, k, &run, work.truth));
        }
        let linear = rows[start..].iter().find(|r| r.method == Method::Linear).map(|r| r.mean_ms);
        if let Some(lin) = linear {
            for r in &mut rows[start..] {
                r.speedup = Some(speedup(lin, r.mean_ms));
            }
        }
    }
    Ok(rows)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ReportFormat {
    Csv,
    Json,
}

pub fn write_report(out: impl Write, rows: &[BenchRow], format: ReportFormat) -> Result<()> {
    match format {
        ReportFormat::Csv => {
            let mut w = csv::Writer::from_writer(out);
            for r in rows {
                w.serialize(r)?;
            }
            w.flush()?;
        }
        ReportFormat::Json => {
            let mut out = out;
            serde_json::to_writer_pretty(&mut out, rows)?;
            writeln!(out)?;
        }
    }
    Ok(())
}

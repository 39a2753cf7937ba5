//! Encoding, indexing and benchmark harness around `whd-core`.

pub mod cli;
pub mod oracle;
pub mod run;

pub use oracle::{oracle_check, OracleConfig, OracleReport};
pub use run::{bench, precision_at_k, speedup, BenchRow, Index, Method, Query, WeightScheme, Workload};

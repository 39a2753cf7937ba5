//! Exact k-nearest-neighbor search over binary codes under the weighted
//! Hamming distance.
//!
//! Hash-table buckets are probed in ascending weighted distance to the query.
//! The probing order comes from [`CseEnumerator`], which extends the sorted
//! sequence of codes by one element with O(b) work regardless of how long the
//! sequence already is. Codes up to 32 bits use one [`SingleTable`]; longer
//! codes use a [`MultiIndex`] over contiguous substrings with a stopping rule
//! that certifies exactness.
//!
//! Everything weight-related is generic over [`Weight`]; `f64`, `f32` and
//! exact rationals all work. The aliases at the crate root pick `f64`.

pub mod baselines;
pub mod bitcode;
pub mod cse;
pub mod encode;
pub mod error;
pub mod io;
pub mod multi_index;
pub mod scalar;
pub mod search;
pub mod single_table;

pub use baselines::{
    brute_force_knn, heap_sequence_oracle, linear_scan_knn, lookup_scan_knn, sorted_enumeration, ChunkTables,
};
pub use bitcode::{
    extract_substring, flip_bit, hamming_distance, weighted_distance, BinaryCode, WeightVector, MAX_WIDTH,
};
pub use cse::{enumerate, CseEnumerator, WeightedQuery};
pub use encode::{asym_weights, lsh_encode, lsh_train, synth_dataset, synth_queries, GaussianMixture, LshModel};
pub use error::{Error, Result};
pub use io::{read_bvecs, read_codes, read_fvecs, read_ivecs, write_codes, CodeFile, CodeReader, CodeWriter};
pub use multi_index::{build_multi, choose_m, knn_multi, KnnHeap, MultiIndex};
pub use scalar::Weight;
pub use search::{Neighbor, SearchResult, SearchStats, Termination};
pub use single_table::{build_single, knn_single, SingleTable};

/// Exact rational weights.
pub use num_rational::Rational64;

pub type Weights = WeightVector<f64>;
pub type Weights32 = WeightVector<f32>;
pub type ExactWeights = WeightVector<Rational64>;
pub type Enumerator = CseEnumerator<f64>;
pub type Enumerator32 = CseEnumerator<f32>;
pub type ExactEnumerator = CseEnumerator<Rational64>;
pub type KnnResult = SearchResult<f64>;
pub type Model = LshModel<f32>;

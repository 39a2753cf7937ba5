//! Search results and per-query instrumentation.

use crate::scalar::Weight;

/// An item ID with its exact weighted distance to the query.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Neighbor<T> {
    pub id: u32,
    pub distance: T,
}

/// Why a search stopped.
#[derive(Clone, Debug, PartialEq)]
pub enum Termination<T> {
    /// Single table: the probed buckets yielded more than `k` items.
    Collected,
    /// Multi-index: the heap is full and its top is no larger than the sum of
    /// the current per-table index distances.
    Certified { heap_top: T, bound: T },
    /// Every indexed item became a candidate, so the result is exact
    /// without a certificate (includes enumerator exhaustion).
    AllItemsSeen,
    /// Exhaustive scan.
    Scan,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SearchStats<T> {
    /// Buckets probed, summed over tables.
    pub probes: u64,
    /// Enumeration steps per table (`L`).
    pub iterations: usize,
    /// Stored enumerator length per table; equals `iterations` for every table.
    pub sequence_lens: Vec<usize>,
    /// Candidate evaluations inside the enumerators.
    pub candidate_evaluations: u64,
    /// Full-code distance evaluations.
    pub distance_computations: u64,
    pub termination: Termination<T>,
}

impl<T> SearchStats<T> {
    pub(crate) fn scan(n: usize) -> Self {
        Self {
            probes: 0,
            iterations: 0,
            sequence_lens: Vec::new(),
            candidate_evaluations: 0,
            distance_computations: n as u64,
            termination: Termination::Scan,
        }
    }
}

/// Neighbors in ascending distance order plus instrumentation.
#[derive(Clone, Debug, PartialEq)]
pub struct SearchResult<T> {
    pub neighbors: Vec<Neighbor<T>>,
    pub stats: SearchStats<T>,
}

impl<T: Weight> SearchResult<T> {
    pub fn ids(&self) -> Vec<u32> {
        self.neighbors.iter().map(|n| n.id).collect()
    }

    pub fn distances(&self) -> Vec<T> {
        self.neighbors.iter().map(|n| n.distance).collect()
    }

    /// The first `k` neighbors (all of them if fewer).
    pub fn top(&self, k: usize) -> &[Neighbor<T>] {
        &self.neighbors[..k.min(self.neighbors.len())]
    }

    pub fn len(&self) -> usize {
        self.neighbors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.neighbors.is_empty()
    }
}

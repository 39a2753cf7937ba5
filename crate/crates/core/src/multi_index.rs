//! Multi-index hashing for long codes: `m` tables over disjoint contiguous
//! substrings, enumerated in lockstep, with candidates re-ranked by their
//! full-code distance in a bounded max-heap.
//!
//! The search stops once the heap holds `k` items and its largest distance
//! is at most the sum of the distances of the current index in every table.
//! Any unseen code has, in some table, a substring distance no larger than
//! its share of that sum, so it would already have been probed.

use std::collections::BinaryHeap;

use rustc_hash::FxHashSet;

use crate::baselines::ChunkTables;
use crate::bitcode::{BinaryCode, WeightVector};
use crate::cse::CseEnumerator;
use crate::error::{Error, Result};
use crate::scalar::{Ordered, Weight};
use crate::search::{Neighbor, SearchResult, SearchStats, Termination};
use crate::single_table::{check_table_width, SingleTable, MAX_TABLE_WIDTH};

/// Table count `round(b / log2 n)`, clamped to `1..=b` and raised so that no
/// substring exceeds 32 bits.
pub fn choose_m(bits: usize, n: usize) -> usize {
    let bits = bits.max(1);
    let min_m = bits.div_ceil(MAX_TABLE_WIDTH);
    let m = if n >= 2 {
        (bits as f64 / (n as f64).log2()).round() as usize
    } else {
        1
    };
    m.clamp(1, bits).max(min_m)
}

/// A contiguous run of bit positions, `start` 1-based.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Slice {
    pub start: usize,
    pub len: usize,
}

/// Splits `bits` positions into `m` contiguous slices; the first `bits % m`
/// slices are one bit longer.
pub fn split(bits: usize, m: usize) -> Result<Vec<Slice>> {
    if m == 0 || m > bits {
        return Err(Error::InvalidTableCount { tables: m, width: bits });
    }
    let mut start = 1;
    let slices: Vec<Slice> = (0..m)
        .map(|k| {
            let len = bits / m + usize::from(k < bits % m);
            let s = Slice { start, len };
            start += len;
            s
        })
        .collect();
    check_table_width(slices[0].len)?;
    Ok(slices)
}

/// Bounded max-heap keeping the `capacity` smallest distances offered.
#[derive(Clone, Debug)]
pub struct KnnHeap<T> {
    capacity: usize,
    heap: BinaryHeap<(Ordered<T>, u32)>,
}

impl<T: Weight> KnnHeap<T> {
    pub fn new(capacity: usize) -> Self {
        Self {
            capacity,
            heap: BinaryHeap::with_capacity(capacity + 1),
        }
    }

    pub fn len(&self) -> usize {
        self.heap.len()
    }

    pub fn is_empty(&self) -> bool {
        self.heap.is_empty()
    }

    pub fn is_full(&self) -> bool {
        self.heap.len() >= self.capacity
    }

    /// Largest retained distance.
    pub fn top(&self) -> Option<T> {
        self.heap.peek().map(|(d, _)| d.0)
    }

    /// Inserts while not full; afterwards only strictly smaller distances
    /// displace the top. Returns whether the item was kept.
    pub fn offer(&mut self, id: u32, distance: T) -> bool {
        if self.heap.len() < self.capacity {
            self.heap.push((Ordered(distance), id));
            return true;
        }
        match self.heap.peek() {
            Some((top, _)) if distance < top.0 => {
                self.heap.pop();
                self.heap.push((Ordered(distance), id));
                true
            }
            _ => false,
        }
    }

    /// Entries in ascending (distance, id) order.
    pub fn into_sorted_vec(self) -> Vec<Neighbor<T>> {
        self.heap
            .into_sorted_vec()
            .into_iter()
            .map(|(d, id)| Neighbor { id, distance: d.0 })
            .collect()
    }
}

/// `m` substring tables plus the full codes for re-ranking.
#[derive(Clone, Debug)]
pub struct MultiIndex {
    width: usize,
    slices: Vec<Slice>,
    tables: Vec<SingleTable>,
    codes: Vec<BinaryCode>,
}

impl MultiIndex {
    pub fn build(width: usize, codes: Vec<BinaryCode>, m: usize) -> Result<Self> {
        if width == 0 || width > crate::bitcode::MAX_WIDTH {
            return Err(Error::UnsupportedWidth(width));
        }
        codes.iter().try_for_each(|c| c.check_width(width))?;
        let slices = split(width, m)?;
        let tables = slices
            .iter()
            .map(|s| {
                let mask = (1u128 << s.len) - 1;
                let keys: Vec<u32> = codes
                    .iter()
                    .map(|c| ((c.bits() >> (s.start - 1)) & mask) as u32)
                    .collect();
                SingleTable::from_keys(s.len, &keys)
            })
            .collect();
        Ok(Self {
            width,
            slices,
            tables,
            codes,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn slices(&self) -> &[Slice] {
        &self.slices
    }

    pub fn tables(&self) -> &[SingleTable] {
        &self.tables
    }

    pub fn codes(&self) -> &[BinaryCode] {
        &self.codes
    }

    pub fn len(&self) -> usize {
        self.codes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.codes.is_empty()
    }

    /// Exact k nearest codes under the full-code weighted distance.
    pub fn knn<T: Weight>(&self, query: &BinaryCode, weights: &WeightVector<T>, k: usize) -> Result<SearchResult<T>> {
        if k == 0 {
            return Err(Error::InvalidK);
        }
        query.check_width(self.width)?;
        let full = ChunkTables::new(query, weights)?;
        let mut enumerators = self
            .slices
            .iter()
            .map(|s| CseEnumerator::new(query.substring(s.start, s.len)?, weights.slice(s.start, s.len)?))
            .collect::<Result<Vec<_>>>()?;

        let mut heap = KnnHeap::new(k);
        let mut seen = FxHashSet::default();
        let mut probes = 0u64;
        let mut distance_computations = 0u64;
        let mut iterations = 0usize;
        let mut termination = Termination::AllItemsSeen;

        'search: while !self.codes.is_empty() {
            iterations += 1;
            let mut bound = T::zero();
            for (table, e) in self.tables.iter().zip(enumerators.iter_mut()) {
                let (code, dist) = if iterations == 1 {
                    e.first()
                } else {
                    match e.extend() {
                        Some(next) => next,
                        // every bucket of this table probed: all items seen
                        None => break 'search,
                    }
                };
                probes += 1;
                bound = bound + dist;
                for &id in table.bucket(code.bits() as u32) {
                    if seen.insert(id) {
                        distance_computations += 1;
                        heap.offer(id, full.distance(&self.codes[id as usize]));
                    }
                }
            }
            if heap.is_full() {
                let top = heap.top().expect("full heap");
                if top <= bound {
                    termination = Termination::Certified { heap_top: top, bound };
                    break;
                }
            }
            if seen.len() == self.codes.len() {
                break;
            }
        }

        Ok(SearchResult {
            neighbors: heap.into_sorted_vec(),
            stats: SearchStats {
                probes,
                iterations,
                sequence_lens: enumerators.iter().map(CseEnumerator::len).collect(),
                candidate_evaluations: enumerators.iter().map(CseEnumerator::total_evaluations).sum(),
                distance_computations,
                termination,
            },
        })
    }
}

pub fn build_multi(width: usize, codes: Vec<BinaryCode>, m: usize) -> Result<MultiIndex> {
    MultiIndex::build(width, codes, m)
}

pub fn knn_multi<T: Weight>(
    index: &MultiIndex,
    query: &BinaryCode,
    weights: &WeightVector<T>,
    k: usize,
) -> Result<SearchResult<T>> {
    index.knn(query, weights, k)
}

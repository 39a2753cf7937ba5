//! Reference search paths: exhaustive scans, the 8-bit lookup-table scan,
//! an independent best-first enumerator, brute-force enumeration, and
//! Euclidean ground truth.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use num_traits::Float;

use crate::bitcode::{BinaryCode, WeightVector};
use crate::error::{Error, Result};
use crate::multi_index::KnnHeap;
use crate::scalar::{Ordered, Weight};
use crate::search::{SearchResult, SearchStats};

fn check_inputs<T: Weight>(codes: &[BinaryCode], query: &BinaryCode, weights: &WeightVector<T>, k: usize) -> Result<()> {
    if k == 0 {
        return Err(Error::InvalidK);
    }
    if weights.width() != query.width() {
        return Err(Error::WidthMismatch {
            expected: query.width(),
            found: weights.width(),
        });
    }
    codes.iter().try_for_each(|c| c.check_width(query.width()))
}

fn select<T: Weight>(n: usize, k: usize, mut distance: impl FnMut(usize) -> T) -> SearchResult<T> {
    let mut heap = KnnHeap::new(k);
    for id in 0..n {
        heap.offer(id as u32, distance(id));
    }
    SearchResult {
        neighbors: heap.into_sorted_vec(),
        stats: SearchStats::scan(n),
    }
}

/// Exact k nearest codes by evaluating the weighted distance of every item.
pub fn linear_scan_knn<T: Weight>(
    codes: &[BinaryCode],
    query: &BinaryCode,
    weights: &WeightVector<T>,
    k: usize,
) -> Result<SearchResult<T>> {
    check_inputs(codes, query, weights, k)?;
    let q = query.bits();
    Ok(select(codes.len(), k, |i| weights.masked_sum(codes[i].bits() ^ q)))
}

/// Per-query tables of partial weighted distances, one 256-entry table per
/// 8-bit chunk of the code.
#[derive(Clone, Debug)]
pub struct ChunkTables<T> {
    query: u128,
    chunks: usize,
    /// `table[c * 256 + v]`: weight of the set bits of `v` within chunk `c`.
    table: Vec<T>,
}

impl<T: Weight> ChunkTables<T> {
    pub fn new(query: &BinaryCode, weights: &WeightVector<T>) -> Result<Self> {
        if weights.width() != query.width() {
            return Err(Error::WidthMismatch {
                expected: query.width(),
                found: weights.width(),
            });
        }
        let w = weights.as_slice();
        let chunks = w.len().div_ceil(8);
        let mut table = vec![T::zero(); chunks * 256];
        for c in 0..chunks {
            let t = &mut table[c * 256..(c + 1) * 256];
            for v in 1..256usize {
                let low = v.trailing_zeros() as usize;
                // padding positions past the code width weigh nothing
                let wb = w.get(c * 8 + low).copied().unwrap_or_else(T::zero);
                t[v] = t[v & (v - 1)] + wb;
            }
        }
        Ok(Self {
            query: query.bits(),
            chunks,
            table,
        })
    }

    pub fn chunks(&self) -> usize {
        self.chunks
    }

    /// Partial distance contributed by chunk `c` when the XOR chunk is `v`.
    pub fn entry(&self, chunk: usize, value: u8) -> T {
        self.table[chunk * 256 + value as usize]
    }

    /// Weighted distance from the query to `code` (width is not checked).
    #[inline]
    pub fn distance(&self, code: &BinaryCode) -> T {
        let x = code.bits() ^ self.query;
        let mut acc = T::zero();
        for (c, t) in self.table.chunks_exact(256).enumerate() {
            acc = acc + t[((x >> (8 * c)) & 0xFF) as usize];
        }
        acc
    }
}

/// Exhaustive scan where each distance is `ceil(b / 8)` table lookups.
pub fn lookup_scan_knn<T: Weight>(
    codes: &[BinaryCode],
    query: &BinaryCode,
    weights: &WeightVector<T>,
    k: usize,
) -> Result<SearchResult<T>> {
    check_inputs(codes, query, weights, k)?;
    let tables = ChunkTables::new(query, weights)?;
    Ok(select(codes.len(), k, |i| tables.distance(&codes[i])))
}

/// Every code of the space with its distance, sorted ascending (stable in
/// code value). Limited to 24 bits.
pub fn sorted_enumeration<T: Weight>(query: &BinaryCode, weights: &WeightVector<T>) -> Result<Vec<(BinaryCode, T)>> {
    let b = query.width();
    if b > 24 {
        return Err(Error::InvalidParameter(format!("full enumeration limited to 24 bits, got {b}")));
    }
    if weights.width() != b {
        return Err(Error::WidthMismatch {
            expected: b,
            found: weights.width(),
        });
    }
    let w = weights.as_slice();
    let mut all: Vec<(BinaryCode, T)> = (0..1u128 << b)
        .map(|bits| {
            let x = bits ^ query.bits();
            let d = (0..b).filter(|&j| (x >> j) & 1 == 1).fold(T::zero(), |acc, j| acc + w[j]);
            (BinaryCode::from_bits(b, bits).expect("in range"), d)
        })
        .collect();
    all.sort_by(|a, c| a.1.partial_cmp(&c.1).expect("validated weights"));
    Ok(all)
}

struct SubsetState<T> {
    dist: Ordered<T>,
    order: u64,
    /// Distance without the last (highest-rank) flipped bit.
    base: Ordered<T>,
    mask: u128,
    last: usize,
}

impl<T: PartialOrd> PartialEq for SubsetState<T> {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == std::cmp::Ordering::Equal
    }
}

impl<T: PartialOrd> Eq for SubsetState<T> {}

impl<T: PartialOrd> PartialOrd for SubsetState<T> {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

/// Distance first, then insertion order.
impl<T: PartialOrd> Ord for SubsetState<T> {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.dist.cmp(&other.dist).then(self.order.cmp(&other.order))
    }
}

/// The first `count` codes in ascending weighted distance, from a priority
/// queue over subsets of flipped bits.
///
/// Bits are ranked by weight; a subset whose highest rank is `r` spawns
/// "append rank r+1" and "replace rank r by r+1", which reaches every subset
/// exactly once. This path shares nothing with [`crate::cse`] and serves as
/// its cross-check.
pub fn heap_sequence_oracle<T: Weight>(
    query: &BinaryCode,
    weights: &WeightVector<T>,
    count: usize,
) -> Result<Vec<(BinaryCode, T)>> {
    let b = query.width();
    if weights.width() != b {
        return Err(Error::WidthMismatch {
            expected: b,
            found: weights.width(),
        });
    }
    let w = weights.as_slice();
    let mut ranks: Vec<usize> = (0..b).collect();
    ranks.sort_by(|&x, &y| w[x].partial_cmp(&w[y]).expect("validated weights"));
    let rank_weight: Vec<T> = ranks.iter().map(|&p| w[p]).collect();
    let rank_bit: Vec<u128> = ranks.iter().map(|&p| 1u128 << p).collect();

    let mut out = Vec::with_capacity(count.min(1 << 20));
    if count == 0 {
        return Ok(out);
    }
    out.push((*query, T::zero()));
    let mut order = 0u64;
    let mut queue = BinaryHeap::new();
    queue.push(Reverse(SubsetState {
        dist: Ordered(rank_weight[0]),
        order,
        base: Ordered(T::zero()),
        mask: rank_bit[0],
        last: 0,
    }));
    while out.len() < count {
        let Some(Reverse(s)) = queue.pop() else { break };
        out.push((
            BinaryCode::from_bits(b, query.bits() ^ s.mask).expect("in range"),
            s.dist.0,
        ));
        let next = s.last + 1;
        if next < b {
            order += 1;
            queue.push(Reverse(SubsetState {
                dist: Ordered(s.dist.0 + rank_weight[next]),
                order,
                base: s.dist,
                mask: s.mask | rank_bit[next],
                last: next,
            }));
            order += 1;
            queue.push(Reverse(SubsetState {
                dist: Ordered(s.base.0 + rank_weight[next]),
                order,
                base: s.base,
                mask: (s.mask ^ rank_bit[s.last]) | rank_bit[next],
                last: next,
            }));
        }
    }
    Ok(out)
}

/// Exact Euclidean k nearest neighbors of `query` among `base`, ties broken
/// by lower ID.
pub fn brute_force_knn<F, V>(base: &[V], query: &[F], k: usize) -> Result<Vec<u32>>
where
    F: Float,
    V: AsRef<[F]>,
{
    if k == 0 {
        return Err(Error::InvalidK);
    }
    let mut heap: BinaryHeap<(Ordered<F>, u32)> = BinaryHeap::with_capacity(k + 1);
    for (id, v) in base.iter().enumerate() {
        let v = v.as_ref();
        if v.len() != query.len() {
            return Err(Error::DimensionMismatch {
                expected: query.len(),
                found: v.len(),
            });
        }
        let d = v
            .iter()
            .zip(query)
            .fold(F::zero(), |acc, (&a, &b)| acc + (a - b) * (a - b));
        let entry = (Ordered(d), id as u32);
        if heap.len() < k {
            heap.push(entry);
        } else if entry < *heap.peek().expect("non-empty") {
            heap.pop();
            heap.push(entry);
        }
    }
    Ok(heap.into_sorted_vec().into_iter().map(|(_, id)| id).collect())
}

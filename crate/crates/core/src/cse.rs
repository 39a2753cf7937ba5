//! Constant sequence extension: enumerate every code of a `b`-bit space in
//! ascending weighted distance to a query, with at most `b` candidate
//! evaluations per emitted element.
//!
//! Bits are ranked by weight (rank 1 = smallest). Let `U^t` be the codes
//! whose XOR with the query touches only ranks `1..=t`. Every code other
//! than the query is `flip(h, t)` for exactly one `h` in `U^{t-1}`, where
//! `t` is the code's highest flipped rank. The emitted sequence restricted to
//! `U^{t-1}` is itself sorted, so for each rank `t` a pointer walks the
//! already-emitted sequence, skipping entries outside `U^{t-1}`, and offers
//! `dist(h) + w_t` as the next candidate from that rank. The smallest of the
//! `b` candidates is the next element of the whole sequence.
//!
//! Each stored entry keeps its XOR mask against the query in original bit
//! order. "Outside `U^{t-1}`" is then a single AND with the mask of original
//! positions whose rank is `>= t`, and emitting a code is one XOR.

use crate::bitcode::{BinaryCode, WeightVector};
use crate::error::{Error, Result};
use crate::scalar::Weight;

/// A query code with its weights and the weight-sorting permutation.
#[derive(Clone, Debug)]
pub struct WeightedQuery<T> {
    query: BinaryCode,
    weights: WeightVector<T>,
    /// `perm[r]` is the 0-based original position of the bit of rank `r + 1`.
    perm: Vec<u8>,
}

impl<T: Weight> WeightedQuery<T> {
    pub fn new(query: BinaryCode, weights: WeightVector<T>) -> Result<Self> {
        if weights.width() != query.width() {
            return Err(Error::WidthMismatch {
                expected: query.width(),
                found: weights.width(),
            });
        }
        let w = weights.as_slice();
        let mut perm: Vec<u8> = (0..w.len() as u8).collect();
        // stable: equal weights keep their original order
        perm.sort_by(|&a, &b| w[a as usize].partial_cmp(&w[b as usize]).expect("validated weights"));
        Ok(Self { query, weights, perm })
    }

    pub fn query(&self) -> &BinaryCode {
        &self.query
    }

    pub fn weights(&self) -> &WeightVector<T> {
        &self.weights
    }

    /// 1-based permutation: `permutation()[r]` is the position holding the
    /// `(r + 1)`-th smallest weight.
    pub fn permutation(&self) -> Vec<usize> {
        self.perm.iter().map(|&p| p as usize + 1).collect()
    }

    /// Weights listed in ascending order.
    pub fn sorted_weights(&self) -> Vec<T> {
        self.perm.iter().map(|&p| self.weights.as_slice()[p as usize]).collect()
    }

    pub fn width(&self) -> usize {
        self.query.width()
    }
}

/// Deliberately broken variants of the enumerator, used to confirm that the
/// oracle checks detect faults.
#[doc(hidden)]
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Fault {
    #[default]
    None,
    /// The skip test treats entries whose highest flipped rank equals `t` as
    /// members of `U^{t-1}`.
    SkipTestOffByOne,
    /// Window limits start at `2^t` instead of `2^(t-1)`.
    DoubledLimits,
}

#[derive(Clone, Copy, Debug)]
struct Entry<T> {
    mask: u128,
    dist: T,
}

/// Lazily extended sequence of codes in ascending weighted distance.
#[derive(Clone, Debug)]
pub struct CseEnumerator<T> {
    wq: WeightedQuery<T>,
    /// Weight of each rank, ascending.
    rank_weight: Vec<T>,
    /// Single-bit mask (original order) of each rank.
    rank_bit: Vec<u128>,
    /// `outside[r]`: original-order mask of ranks `>= r` (0-based); an entry
    /// whose mask meets it is not a member of `U^r`.
    outside: Vec<u128>,
    seq: Vec<Entry<T>>,
    /// Next sequence index (0-based) each rank reads its base state from.
    pointer: Vec<usize>,
    /// Exclusive bound on `pointer`, widened by one per skipped entry.
    limit: Vec<usize>,
    last_evaluations: u32,
    total_evaluations: u64,
}

impl<T: Weight> CseEnumerator<T> {
    /// Starts the sequence at the query itself (distance zero).
    pub fn new(query: BinaryCode, weights: WeightVector<T>) -> Result<Self> {
        Self::with_fault(query, weights, Fault::None)
    }

    pub fn from_query(wq: WeightedQuery<T>) -> Self {
        Self::build(wq, Fault::None)
    }

    #[doc(hidden)]
    pub fn with_fault(query: BinaryCode, weights: WeightVector<T>, fault: Fault) -> Result<Self> {
        Ok(Self::build(WeightedQuery::new(query, weights)?, fault))
    }

    fn build(wq: WeightedQuery<T>, fault: Fault) -> Self {
        let b = wq.width();
        let rank_weight = wq.sorted_weights();
        let rank_bit: Vec<u128> = wq.perm.iter().map(|&p| 1u128 << p).collect();
        let mut outside = vec![0u128; b + 1];
        for r in (0..b).rev() {
            outside[r] = outside[r + 1] | rank_bit[r];
        }
        // rank r (0-based) draws from U^r, which has 2^r members
        let limit = (0..b)
            .map(|r| {
                let exp = if fault == Fault::DoubledLimits { r + 1 } else { r };
                if exp >= usize::BITS as usize - 1 {
                    usize::MAX
                } else {
                    1usize << exp
                }
            })
            .collect();
        if fault == Fault::SkipTestOffByOne {
            outside.remove(0);
        } else {
            outside.truncate(b);
        }
        let mut seq = Vec::with_capacity(64);
        seq.push(Entry {
            mask: 0,
            dist: T::zero(),
        });
        Self {
            wq,
            rank_weight,
            rank_bit,
            outside,
            seq,
            pointer: vec![0; b],
            limit,
            last_evaluations: 0,
            total_evaluations: 0,
        }
    }

    #[inline]
    fn code_of(&self, mask: u128) -> BinaryCode {
        let q = self.wq.query;
        BinaryCode::from_raw(q.width(), q.bits() ^ mask)
    }

    /// Advances `pointer[r]` past emitted entries that are not in `U^r`.
    #[inline]
    fn settle(&mut self, r: usize) {
        let mut p = self.pointer[r];
        let mut l = self.limit[r];
        let outside = self.outside[r];
        while p < l && p < self.seq.len() && self.seq[p].mask & outside != 0 {
            p += 1;
            l = l.saturating_add(1);
        }
        self.pointer[r] = p;
        self.limit[r] = l;
    }

    /// Emits the next code and its distance, or `None` once all `2^b` codes
    /// have been produced.
    pub fn extend(&mut self) -> Option<(BinaryCode, T)> {
        let mut best: Option<(usize, T)> = None;
        let mut evaluations = 0u32;
        for r in 0..self.rank_weight.len() {
            self.settle(r);
            let p = self.pointer[r];
            if p < self.limit[r] && p < self.seq.len() {
                evaluations += 1;
                let v = self.seq[p].dist + self.rank_weight[r];
                if best.map_or(true, |(_, bv)| v < bv) {
                    best = Some((r, v));
                }
            }
        }
        self.last_evaluations = evaluations;
        self.total_evaluations += u64::from(evaluations);
        let (r, dist) = best?;
        let mask = self.seq[self.pointer[r]].mask ^ self.rank_bit[r];
        self.seq.push(Entry { mask, dist });
        self.pointer[r] += 1;
        self.settle(r);
        Some((self.code_of(mask), dist))
    }

    /// The first element: the query at distance zero.
    pub fn first(&self) -> (BinaryCode, T) {
        (self.wq.query, T::zero())
    }

    /// Number of elements produced so far, including the query.
    #[inline]
    pub fn len(&self) -> usize {
        self.seq.len()
    }

    /// Always false: the query itself is the first element.
    pub fn is_empty(&self) -> bool {
        self.seq.is_empty()
    }

    /// Whether all `2^b` codes have been emitted.
    pub fn is_exhausted(&self) -> bool {
        let b = self.wq.width();
        b < usize::BITS as usize && self.seq.len() == 1usize << b
    }

    /// Stored distance of the `i`-th element (1-based).
    pub fn distance_of(&self, i: usize) -> Result<T> {
        self.entry(i).map(|e| e.dist)
    }

    /// Stored code of the `i`-th element (1-based).
    pub fn code_at(&self, i: usize) -> Result<BinaryCode> {
        self.entry(i).map(|e| self.code_of(e.mask))
    }

    fn entry(&self, i: usize) -> Result<&Entry<T>> {
        i.checked_sub(1)
            .and_then(|k| self.seq.get(k))
            .ok_or_else(|| Error::InvalidParameter(format!("sequence index {i} outside 1..={}", self.seq.len())))
    }

    /// Candidate evaluations performed by the latest [`extend`](Self::extend).
    pub fn last_evaluations(&self) -> u32 {
        self.last_evaluations
    }

    pub fn total_evaluations(&self) -> u64 {
        self.total_evaluations
    }

    /// 1-based pointer per rank (rank 1 = smallest weight).
    pub fn pointers(&self) -> Vec<usize> {
        self.pointer.iter().map(|&p| p + 1).collect()
    }

    /// Window limit per rank, 1-based inclusive, saturating.
    pub fn limits(&self) -> Vec<usize> {
        self.limit.clone()
    }

    pub fn weighted_query(&self) -> &WeightedQuery<T> {
        &self.wq
    }

    pub fn width(&self) -> usize {
        self.wq.width()
    }

    /// Iterator over the whole sequence, starting with the query.
    pub fn into_sequence(self) -> Sequence<T> {
        Sequence {
            inner: self,
            started: false,
        }
    }
}

/// Iterator adapter yielding `(code, distance)` from the first element on.
pub struct Sequence<T> {
    inner: CseEnumerator<T>,
    started: bool,
}

impl<T: Weight> Sequence<T> {
    pub fn enumerator(&self) -> &CseEnumerator<T> {
        &self.inner
    }
}

impl<T: Weight> Iterator for Sequence<T> {
    type Item = (BinaryCode, T);

    fn next(&mut self) -> Option<Self::Item> {
        if !self.started {
            self.started = true;
            return Some(self.inner.first());
        }
        self.inner.extend()
    }
}

/// Convenience: the first `count` elements (fewer if the space is smaller).
pub fn enumerate<T: Weight>(query: BinaryCode, weights: WeightVector<T>, count: usize) -> Result<Vec<(BinaryCode, T)>> {
    Ok(CseEnumerator::new(query, weights)?.into_sequence().take(count).collect())
}

//! One hash table addressed directly by the code, probed in ascending
//! weighted distance.

use rustc_hash::FxHashMap;

use crate::bitcode::{BinaryCode, WeightVector};
use crate::cse::CseEnumerator;
use crate::error::{Error, Result};
use crate::scalar::Weight;
use crate::search::{Neighbor, SearchResult, SearchStats, Termination};

/// Widest code a single table accepts.
pub const MAX_TABLE_WIDTH: usize = 32;

/// Widest code stored with one slot per possible address.
pub const DENSE_MAX_WIDTH: usize = 24;

#[derive(Clone, Debug)]
enum Buckets {
    /// `ids[offsets[key]..offsets[key + 1]]` for every key in `0..2^width`.
    Dense { offsets: Vec<u32>, ids: Vec<u32> },
    /// Only non-empty buckets, `key -> (start, len)` into `ids`.
    Sparse {
        slots: FxHashMap<u32, (u32, u32)>,
        ids: Vec<u32>,
    },
}

/// Code → item-ID buckets for codes of at most 32 bits.
#[derive(Clone, Debug)]
pub struct SingleTable {
    width: usize,
    len: usize,
    buckets: Buckets,
}

impl SingleTable {
    /// Places item `i` in the bucket addressed by `codes[i]`.
    pub fn build(width: usize, codes: &[BinaryCode]) -> Result<Self> {
        check_table_width(width)?;
        let keys = codes
            .iter()
            .map(|c| {
                c.check_width(width)?;
                Ok(c.bits() as u32)
            })
            .collect::<Result<Vec<u32>>>()?;
        Ok(Self::from_keys(width, &keys))
    }

    /// Builds from pre-validated keys; `keys[i]` is the address of item `i`.
    pub(crate) fn from_keys(width: usize, keys: &[u32]) -> Self {
        debug_assert!(width <= MAX_TABLE_WIDTH);
        assert!(keys.len() <= u32::MAX as usize, "item IDs are 32-bit");
        let buckets = if width <= DENSE_MAX_WIDTH {
            let slots = 1usize << width;
            let mut offsets = vec![0u32; slots + 1];
            for &k in keys {
                offsets[k as usize + 1] += 1;
            }
            for i in 0..slots {
                offsets[i + 1] += offsets[i];
            }
            let mut fill = offsets.clone();
            let mut ids = vec![0u32; keys.len()];
            for (id, &k) in keys.iter().enumerate() {
                let at = &mut fill[k as usize];
                ids[*at as usize] = id as u32;
                *at += 1;
            }
            Buckets::Dense { offsets, ids }
        } else {
            let mut order: Vec<u32> = (0..keys.len() as u32).collect();
            order.sort_by_key(|&id| (keys[id as usize], id));
            let mut slots = FxHashMap::default();
            let mut start = 0usize;
            while start < order.len() {
                let key = keys[order[start] as usize];
                let mut end = start + 1;
                while end < order.len() && keys[order[end] as usize] == key {
                    end += 1;
                }
                slots.insert(key, (start as u32, (end - start) as u32));
                start = end;
            }
            Buckets::Sparse { slots, ids: order }
        };
        Self {
            width,
            len: keys.len(),
            buckets,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    /// Number of indexed items.
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn is_dense(&self) -> bool {
        matches!(self.buckets, Buckets::Dense { .. })
    }

    /// Item IDs stored under address `key` (ascending).
    #[inline]
    pub fn bucket(&self, key: u32) -> &[u32] {
        match &self.buckets {
            Buckets::Dense { offsets, ids } => {
                let k = key as usize;
                match (offsets.get(k), offsets.get(k + 1)) {
                    (Some(&a), Some(&b)) => &ids[a as usize..b as usize],
                    _ => &[],
                }
            }
            Buckets::Sparse { slots, ids } => match slots.get(&key) {
                Some(&(start, len)) => &ids[start as usize..(start + len) as usize],
                None => &[],
            },
        }
    }

    pub fn bucket_for(&self, code: &BinaryCode) -> Result<&[u32]> {
        code.check_width(self.width)?;
        Ok(self.bucket(code.bits() as u32))
    }

    pub fn non_empty_buckets(&self) -> usize {
        match &self.buckets {
            Buckets::Dense { offsets, .. } => offsets.windows(2).filter(|w| w[1] > w[0]).count(),
            Buckets::Sparse { slots, .. } => slots.len(),
        }
    }

    /// Exact k-nearest-neighbor search by probing buckets in ascending
    /// weighted distance.
    ///
    /// Probing continues while at most `k` items have been collected, so the
    /// result normally holds more than `k` items: the whole final bucket is
    /// kept. Items come out sorted by distance; every item's distance is the
    /// distance of the bucket it was found in.
    pub fn knn<T: Weight>(&self, query: &BinaryCode, weights: &WeightVector<T>, k: usize) -> Result<SearchResult<T>> {
        if k == 0 {
            return Err(Error::InvalidK);
        }
        query.check_width(self.width)?;
        let mut e = CseEnumerator::new(*query, weights.clone())?;
        let mut neighbors = Vec::with_capacity(k + 1);
        let mut probes = 0u64;
        let mut termination = Termination::AllItemsSeen;
        if !self.is_empty() {
            let (mut code, mut dist) = e.first();
            loop {
                probes += 1;
                neighbors.extend(self.bucket(code.bits() as u32).iter().map(|&id| Neighbor { id, distance: dist }));
                if neighbors.len() > k {
                    termination = Termination::Collected;
                    break;
                }
                if neighbors.len() == self.len {
                    break;
                }
                match e.extend() {
                    Some(next) => (code, dist) = next,
                    None => break,
                }
            }
        }
        Ok(SearchResult {
            neighbors,
            stats: SearchStats {
                probes,
                iterations: probes as usize,
                sequence_lens: vec![e.len()],
                candidate_evaluations: e.total_evaluations(),
                distance_computations: 0,
                termination,
            },
        })
    }
}

pub(crate) fn check_table_width(width: usize) -> Result<()> {
    if width > MAX_TABLE_WIDTH {
        return Err(Error::TableTooWide(width));
    }
    if width == 0 {
        return Err(Error::UnsupportedWidth(0));
    }
    Ok(())
}

/// Builds a single table over `codes`, all of width `width <= 32`.
pub fn build_single(width: usize, codes: &[BinaryCode]) -> Result<SingleTable> {
    SingleTable::build(width, codes)
}

/// Free-function form of [`SingleTable::knn`].
pub fn knn_single<T: Weight>(
    table: &SingleTable,
    query: &BinaryCode,
    weights: &WeightVector<T>,
    k: usize,
) -> Result<SearchResult<T>> {
    table.knn(query, weights, k)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bitcode::weighted_distance;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn code(s: &str) -> BinaryCode {
        s.parse().unwrap()
    }

    #[test]
    fn direct_placement() {
        let t = SingleTable::build(3, &[code("000"), code("011"), code("000")]).unwrap();
        assert_eq!(t.bucket_for(&code("000")).unwrap(), &[0, 2]);
        assert_eq!(t.bucket_for(&code("011")).unwrap(), &[1]);
        assert!(t.bucket_for(&code("111")).unwrap().is_empty());
        assert_eq!(t.len(), 3);
        assert_eq!(t.non_empty_buckets(), 2);
    }

    #[test]
    fn empty_table() {
        let t = SingleTable::build(8, &[]).unwrap();
        assert!(t.is_empty());
        let r = t.knn(&BinaryCode::zeros(8).unwrap(), &WeightVector::<f64>::uniform(8).unwrap(), 3).unwrap();
        assert!(r.is_empty());
    }

    #[test]
    fn width_errors() {
        assert!(matches!(SingleTable::build(33, &[]), Err(Error::TableTooWide(33))));
        assert!(matches!(
            SingleTable::build(4, &[code("000")]),
            Err(Error::WidthMismatch { .. })
        ));
    }

    #[test]
    fn dense_and_sparse_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for width in [16usize, 24, 25, 32] {
            let mask = if width == 32 { u32::MAX } else { (1u32 << width) - 1 };
            let codes: Vec<_> = (0..5000)
                .map(|_| BinaryCode::from_bits(width, u128::from(rng.random::<u32>() & mask & 0xFFF0_0FFF)).unwrap())
                .collect();
            let t = SingleTable::build(width, &codes).unwrap();
            assert_eq!(t.is_dense(), width <= DENSE_MAX_WIDTH);
            let mut total = 0;
            for (id, c) in codes.iter().enumerate() {
                let bucket = t.bucket_for(c).unwrap();
                assert!(bucket.contains(&(id as u32)));
                assert!(bucket.windows(2).all(|p| p[0] < p[1]));
            }
            let mut seen: Vec<u128> = codes.iter().map(|c| c.bits()).collect();
            seen.sort_unstable();
            seen.dedup();
            for bits in seen {
                total += t.bucket(bits as u32).len();
            }
            assert_eq!(total, codes.len());
        }
    }

    #[test]
    fn knn_small_example() {
        let t = SingleTable::build(3, &[code("000"), code("011"), code("111")]).unwrap();
        let w = WeightVector::new(vec![1.0, 2.0, 4.0]).unwrap();
        let r = t.knn(&code("000"), &w, 2).unwrap();
        assert!(r.len() >= 2);
        assert_eq!(r.top(2).iter().map(|n| (n.id, n.distance)).collect::<Vec<_>>(), [(0, 0.0), (1, 6.0)]);
        assert_eq!(r.stats.sequence_lens, [r.stats.probes as usize]);
    }

    #[test]
    fn self_match_and_k_beyond_n() {
        let t = SingleTable::build(3, &[code("000"), code("011"), code("111")]).unwrap();
        let w = WeightVector::new(vec![1.0, 2.0, 4.0]).unwrap();
        let r = t.knn(&code("011"), &w, 1).unwrap();
        assert_eq!((r.neighbors[0].id, r.neighbors[0].distance), (1, 0.0));
        let r = t.knn(&code("000"), &w, 10).unwrap();
        assert_eq!(r.len(), 3);
        assert_eq!(r.stats.termination, Termination::AllItemsSeen);
        assert!(t.knn(&code("000"), &w, 0).is_err());
    }

    #[test]
    fn matches_exhaustive_distances() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let width = 12;
        let codes: Vec<_> = (0..800)
            .map(|_| BinaryCode::from_bits(width, rng.random_range(0..1u128 << width)).unwrap())
            .collect();
        let t = SingleTable::build(width, &codes).unwrap();
        for _ in 0..50 {
            let q = BinaryCode::from_bits(width, rng.random_range(0..1u128 << width)).unwrap();
            let w = WeightVector::new((0..width).map(|_| rng.random::<f64>()).collect()).unwrap();
            let k = rng.random_range(1..40);
            let r = t.knn(&q, &w, k).unwrap();
            let mut all: Vec<f64> = codes.iter().map(|c| weighted_distance(&q, c, &w).unwrap()).collect();
            all.sort_by(|a, b| a.partial_cmp(b).unwrap());
            for (got, want) in r.distances().iter().zip(&all).take(k) {
                assert!((got - want).abs() < 1e-9);
            }
            for n in &r.neighbors {
                assert!((weighted_distance(&q, &codes[n.id as usize], &w).unwrap() - n.distance).abs() < 1e-9);
            }
            assert!(r.distances().windows(2).all(|p| p[0] <= p[1]));
            assert_eq!(r.stats.sequence_lens[0] as u64, r.stats.probes);
        }
    }
}

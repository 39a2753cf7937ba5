//! Scalar types usable as bit weights and weighted distances.

use std::cmp::Ordering;
use std::fmt::Debug;

use num_traits::{Num, ToPrimitive};

/// A weight/distance scalar.
///
/// Implemented for every copyable, partially ordered numeric type, which
/// covers `f32`, `f64`, unsigned integers and `num_rational::Ratio`. Integer
/// and rational weights make distance ties exact, which is what the tie
/// handling tests rely on.
pub trait Weight: Num + Copy + PartialOrd + ToPrimitive + Debug + Send + Sync + 'static {
    /// Lossy conversion used for tolerance checks and reporting.
    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl<T> Weight for T where T: Num + Copy + PartialOrd + ToPrimitive + Debug + Send + Sync + 'static {}

/// Total order over validated weights, for heap keys.
///
/// Weight vectors reject NaN at construction, so every distance reaching a
/// heap is comparable; incomparable pairs fall back to `Equal`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub(crate) struct Ordered<T>(pub T);

impl<T: PartialOrd> Eq for Ordered<T> {}

impl<T: PartialOrd> PartialOrd for Ordered<T> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<T: PartialOrd> Ord for Ordered<T> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.partial_cmp(&other.0).unwrap_or(Ordering::Equal)
    }
}

//! Random-hyperplane hashing, query-adaptive bit weights, and a seeded
//! synthetic dataset.

use num_traits::Float;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::bitcode::{BinaryCode, WeightVector, MAX_WIDTH};
use crate::error::{Error, Result};
use crate::scalar::Weight;

/// `bits` random hyperplanes through the origin in `dim` dimensions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LshModel<F> {
    dim: usize,
    bits: usize,
    /// Row-major `bits x dim`.
    projections: Vec<F>,
    seed: u64,
}

impl<F: Float> LshModel<F> {
    /// Draws every projection entry from a standard normal generator seeded
    /// by `seed`. A row that comes out all zero is redrawn.
    pub fn train(dim: usize, bits: usize, seed: u64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidParameter("dimension must be at least 1".into()));
        }
        if bits == 0 || bits > MAX_WIDTH {
            return Err(Error::UnsupportedWidth(bits));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut projections = Vec::with_capacity(bits * dim);
        for _ in 0..bits {
            loop {
                let row: Vec<F> = (0..dim).map(|_| cast(rng.sample::<f64, _>(StandardNormal))).collect();
                if row.iter().any(|x| !x.is_zero()) {
                    projections.extend(row);
                    break;
                }
            }
        }
        Ok(Self {
            dim,
            bits,
            projections,
            seed,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn bits(&self) -> usize {
        self.bits
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Row `j` (0-based) of the projection matrix.
    pub fn row(&self, j: usize) -> &[F] {
        &self.projections[j * self.dim..(j + 1) * self.dim]
    }

    /// Checks the deserialized shape.
    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 || self.bits == 0 || self.bits > MAX_WIDTH || self.projections.len() != self.dim * self.bits {
            return Err(Error::InvalidParameter(format!(
                "model shape {}x{} does not match {} projection entries",
                self.bits,
                self.dim,
                self.projections.len()
            )));
        }
        Ok(())
    }

    fn projections_of<'a>(&'a self, v: &'a [F]) -> Result<impl Iterator<Item = F> + 'a> {
        if v.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: v.len(),
            });
        }
        Ok(self
            .projections
            .chunks_exact(self.dim)
            .map(move |row| row.iter().zip(v).fold(F::zero(), |acc, (&a, &b)| acc + a * b)))
    }

    /// Bit `j` is 1 iff `row_j . v >= 0`.
    pub fn encode(&self, v: &[F]) -> Result<BinaryCode> {
        let bits = self
            .projections_of(v)?
            .enumerate()
            .fold(0u128, |acc, (j, p)| acc | (u128::from(p >= F::zero()) << j));
        BinaryCode::from_bits(self.bits, bits)
    }

    /// The code of `v` plus weights `w_j = |row_j . v|`, the unnormalized
    /// distance of `v` to hyperplane `j`.
    pub fn asym_weights(&self, v: &[F]) -> Result<(BinaryCode, WeightVector<F>)>
    where
        F: Weight,
    {
        let mut bits = 0u128;
        let mut weights = Vec::with_capacity(self.bits);
        for (j, p) in self.projections_of(v)?.enumerate() {
            bits |= u128::from(p >= F::zero()) << j;
            weights.push(p.abs());
        }
        Ok((BinaryCode::from_bits(self.bits, bits)?, WeightVector::new(weights)?))
    }
}

fn cast<F: Float>(x: f64) -> F {
    F::from(x).expect("float conversion")
}

pub fn lsh_train<F: Float>(dim: usize, bits: usize, seed: u64) -> Result<LshModel<F>> {
    LshModel::train(dim, bits, seed)
}

pub fn lsh_encode<F: Float>(model: &LshModel<F>, v: &[F]) -> Result<BinaryCode> {
    model.encode(v)
}

pub fn asym_weights<F: Float + Weight>(model: &LshModel<F>, v: &[F]) -> Result<(BinaryCode, WeightVector<F>)> {
    model.asym_weights(v)
}

/// Default number of mixture components.
pub const DEFAULT_COMPONENTS: usize = 16;

/// Standard deviation of the component means around the origin; points
/// scatter around their mean with unit variance.
pub const MEAN_SPREAD: f64 = 1.5;

/// A seeded isotropic Gaussian mixture with equally likely components.
#[derive(Clone, Debug)]
pub struct GaussianMixture {
    dim: usize,
    seed: u64,
    means: Vec<Vec<f64>>,
}

impl GaussianMixture {
    pub fn new(dim: usize, components: usize, seed: u64) -> Result<Self> {
        if dim == 0 || components == 0 {
            return Err(Error::InvalidParameter("dimension and component count must be at least 1".into()));
        }
        // a stream of its own, so a model trained from the same seed is
        // unrelated to the means
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(MEANS_STREAM);
        let means = (0..components)
            .map(|_| {
                (0..dim)
                    .map(|_| MEAN_SPREAD * rng.sample::<f64, _>(StandardNormal))
                    .collect()
            })
            .collect();
        Ok(Self { dim, seed, means })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn means(&self) -> &[Vec<f64>] {
        &self.means
    }

    /// Lazily generated `(component, vector)` pairs. Distinct `stream`
    /// values give independent sequences from the same mixture, so base and
    /// query sets never share points.
    pub fn labeled_samples<F: Float>(&self, n: usize, stream: u64) -> impl Iterator<Item = (usize, Vec<F>)> + '_ {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(stream + 1);
        (0..n).map(move |_| {
            let c = rng.random_range(0..self.means.len());
            let v = self.means[c]
                .iter()
                .map(|&mu| cast(mu + rng.sample::<f64, _>(StandardNormal)))
                .collect();
            (c, v)
        })
    }

    pub fn samples<F: Float>(&self, n: usize, stream: u64) -> impl Iterator<Item = Vec<F>> + '_ {
        self.labeled_samples(n, stream).map(|(_, v)| v)
    }
}

const MEANS_STREAM: u64 = u64::MAX;

/// Stream index for base vectors.
pub const BASE_STREAM: u64 = 0;
/// Stream index for query vectors.
pub const QUERY_STREAM: u64 = 1;

/// `n` base vectors from the default mixture.
pub fn synth_dataset<F: Float>(n: usize, dim: usize, seed: u64) -> Result<Vec<Vec<F>>> {
    if n == 0 {
        return Err(Error::InvalidParameter("dataset size must be at least 1".into()));
    }
    Ok(GaussianMixture::new(dim, DEFAULT_COMPONENTS, seed)?
        .samples(n, BASE_STREAM)
        .collect())
}

/// `n` query vectors from the same mixture as [`synth_dataset`].
pub fn synth_queries<F: Float>(n: usize, dim: usize, seed: u64) -> Result<Vec<Vec<F>>> {
    Ok(GaussianMixture::new(dim, DEFAULT_COMPONENTS, seed)?
        .samples(n, QUERY_STREAM)
        .collect())
}

//! Randomized agreement checks between the enumerator, exhaustive
//! enumeration and the priority-queue enumerator.

use std::fmt;

use anyhow::{ensure, Result};
use clap::ValueEnum;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use whd_core::cse::Fault;
use whd_core::{heap_sequence_oracle, sorted_enumeration, BinaryCode, CseEnumerator, WeightVector};

/// Widest code checked against exhaustive enumeration; wider codes are
/// checked against the priority-queue enumerator only.
pub const EXHAUSTIVE_MAX_BITS: usize = 16;
/// Widest code accepted by the check.
pub const MAX_BITS: usize = 24;
const TOLERANCE: f64 = 1e-9;

/// Fault injected into the enumerator under test.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, ValueEnum)]
pub enum Mutation {
    #[default]
    None,
    SkipOffByOne,
    DoubledLimits,
}

impl From<Mutation> for Fault {
    fn from(m: Mutation) -> Self {
        match m {
            Mutation::None => Fault::None,
            Mutation::SkipOffByOne => Fault::SkipTestOffByOne,
            Mutation::DoubledLimits => Fault::DoubledLimits,
        }
    }
}

#[derive(Clone, Debug)]
pub struct OracleConfig {
    pub min_bits: usize,
    pub max_bits: usize,
    pub trials: usize,
    pub seed: u64,
    /// Index of the first trial; trial `t` draws from stream `t` of `seed`.
    pub first_trial: usize,
    /// Prefix length compared against the priority-queue enumerator.
    pub length: usize,
    pub mutation: Mutation,
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self {
            min_bits: 1,
            max_bits: 16,
            trials: 100,
            seed: 0,
            first_trial: 0,
            length: 4096,
            mutation: Mutation::None,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Mismatch {
    pub trial: usize,
    pub bits: usize,
    pub reference: &'static str,
    pub detail: String,
}

#[derive(Clone, Debug)]
pub struct OracleReport {
    pub config: OracleConfig,
    pub mismatches: Vec<Mismatch>,
}

impl OracleReport {
    pub fn passed(&self) -> bool {
        self.mismatches.is_empty()
    }
}

impl fmt::Display for OracleReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let c = &self.config;
        for m in &self.mismatches {
            writeln!(
                f,
                "mismatch vs {} at b={}: {} (reproduce: oracle-check --seed {} --first-trial {} --trials 1 --min-bits {} --max-bits {} --length {} --mutate {})",
                m.reference,
                m.bits,
                m.detail,
                c.seed,
                m.trial,
                c.min_bits,
                c.max_bits,
                c.length,
                c.mutation.to_possible_value().expect("no skipped variants").get_name()
            )?;
        }
        write!(
            f,
            "{}: {} trials, b in {}..={}, {} mismatches",
            if self.passed() { "PASS" } else { "FAIL" },
            c.trials,
            c.min_bits,
            c.max_bits,
            self.mismatches.len()
        )
    }
}

/// Random weights with deliberate ties and zeros: half are small integers
/// (including 0), half uniform in [0, 1).
pub fn random_weights(rng: &mut impl Rng, bits: usize) -> Vec<f64> {
    (0..bits)
        .map(|_| {
            if rng.random_bool(0.5) {
                f64::from(rng.random_range(0..4u8))
            } else {
                rng.random::<f64>()
            }
        })
        .collect()
}

/// Compares two sequences position by position on distance and, for every
/// run of equal distances, on the set of codes. With `prefix` set, the final
/// run may be cut off differently in each sequence and is skipped.
pub fn compare_sequences(got: &[(BinaryCode, f64)], want: &[(BinaryCode, f64)], prefix: bool) -> Result<(), String> {
    if got.len() != want.len() {
        return Err(format!("length {} vs {}", got.len(), want.len()));
    }
    if let Some(i) = (0..got.len()).find(|&i| (got[i].1 - want[i].1).abs() > TOLERANCE) {
        return Err(format!("distance at index {} is {} vs {}", i + 1, got[i].1, want[i].1));
    }
    let mut start = 0;
    while start < got.len() {
        let mut end = start + 1;
        while end < got.len() && (got[end].1 - got[start].1).abs() <= TOLERANCE {
            end += 1;
        }
        if prefix && end == got.len() {
            break;
        }
        let mut a: Vec<u128> = got[start..end].iter().map(|e| e.0.bits()).collect();
        let mut b: Vec<u128> = want[start..end].iter().map(|e| e.0.bits()).collect();
        a.sort_unstable();
        b.sort_unstable();
        if a != b {
            return Err(format!("code sets differ at distance {}", got[start].1));
        }
        start = end;
    }
    Ok(())
}

fn enumerate(q: BinaryCode, w: WeightVector<f64>, count: usize, fault: Fault) -> Result<Vec<(BinaryCode, f64)>> {
    let mut e = CseEnumerator::with_fault(q, w, fault)?;
    let mut out = vec![e.first()];
    while out.len() < count {
        match e.extend() {
            Some(next) => out.push(next),
            None => break,
        }
    }
    Ok(out)
}

pub fn oracle_check(config: &OracleConfig) -> Result<OracleReport> {
    ensure!(
        1 <= config.min_bits && config.min_bits <= config.max_bits && config.max_bits <= MAX_BITS,
        "bit range must satisfy 1 <= min <= max <= {MAX_BITS}"
    );
    ensure!(config.length >= 1, "length must be at least 1");
    let mut mismatches = Vec::new();
    for trial in config.first_trial..config.first_trial + config.trials {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        rng.set_stream(trial as u64);
        let bits = rng.random_range(config.min_bits..=config.max_bits);
        let q = BinaryCode::from_bits(bits, rng.random::<u128>() & ((1u128 << bits) - 1))?;
        let w = WeightVector::new(random_weights(&mut rng, bits))?;
        let mut fail = |reference, detail| {
            mismatches.push(Mismatch {
                trial,
                bits,
                reference,
                detail,
            })
        };
        if bits <= EXHAUSTIVE_MAX_BITS {
            let want = sorted_enumeration(&q, &w)?;
            let got = enumerate(q, w.clone(), usize::MAX, config.mutation.into())?;
            if let Err(e) = compare_sequences(&got, &want, false) {
                fail("exhaustive enumeration", e);
            }
        }
        let len = config.length.min(1 << bits.min(62));
        let want = heap_sequence_oracle(&q, &w, len)?;
        let got = enumerate(q, w, len, config.mutation.into())?;
        if let Err(e) = compare_sequences(&got, &want, len < 1 << bits) {
            fail("priority-queue enumeration", e);
        }
    }
    Ok(OracleReport {
        config: config.clone(),
        mismatches,
    })
}

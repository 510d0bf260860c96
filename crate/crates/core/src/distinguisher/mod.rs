//! Single-pass streaming distinguishers.
//!
//! A distinguisher is fed samples one at a time, never sees a sample twice,
//! and finally `decide`s: `true` means "planted", `false` means "null".
//!
//! Memory accounting counts the data a distinguisher retains between `feed`
//! calls: stored samples at their encoded size, the random test vector of the
//! orthogonal tester, and every counter at its bit width. Code and the program
//! counter are free. Each implementation reports three figures:
//!
//! * `memory_bits`: high-water mark of retained bits observed so far;
//! * `memory_bound`: the bound implied by the construction parameters, which
//!   `memory_bits` never exceeds;
//! * `paper_width_bits`: `log2` of the branching-program width under the
//!   convention where fixed randomness is hard-wired into the program and
//!   the layer index carries the sample counter.

mod harness;
mod local;
mod params;
mod sparse;
mod subspace;

use thiserror::Error;

use crate::gf2::Gf2Error;
use crate::source::{Family, Sample};

pub use harness::{Blind, CoinFlip};
pub use local::{default_max_samples as local_default_max_samples, window_probability, LocalPrefix, MAX_WINDOW};
pub use params::{build_factory, Factory, ParamMap, DISTINGUISHER_NAMES};
pub use sparse::{
    default_max_samples as fixed_query_default_max_samples, unit_hit_probability, SparseFixedQuery, SparseSat,
};
pub use subspace::{tester_vectors, OrthogonalTester, RankThreshold, SubspaceRank};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DistinguisherError {
    #[error("{name} expects {expected} samples, got {got}")]
    WrongFamily {
        name: &'static str,
        expected: Family,
        got: Family,
    },
    #[error("sample has dimension {got}, expected {expected}")]
    SampleDimension { expected: usize, got: usize },
    #[error("insufficient samples: needed {needed}, saw {seen}")]
    InsufficientSamples { needed: u64, seen: u64 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error(transparent)]
    Gf2(#[from] Gf2Error),
}

/// Whether a distinguisher wants further samples.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Feed {
    Continue,
    Done,
}

pub trait Distinguisher: Send {
    fn name(&self) -> &'static str;

    /// Consumes the next stream element.
    fn feed(&mut self, sample: &Sample) -> Result<Feed, DistinguisherError>;

    /// `true` once no further sample can change the decision.
    fn is_done(&self) -> bool;

    /// The decision; idempotent.
    fn decide(&self) -> Result<bool, DistinguisherError>;

    fn samples_seen(&self) -> u64;

    /// Longest stream this distinguisher will read.
    fn stream_length(&self) -> u64;

    fn memory_bits(&self) -> u64;

    fn memory_bound(&self) -> u64;

    fn paper_width_bits(&self) -> u64;
}

/// Bits needed to hold any counter value in `0..=max`.
pub fn counter_bits(max: u64) -> u64 {
    (u64::BITS - max.leading_zeros()) as u64
}

/// `ceil(log2(n))` for `n >= 1`: bits of one index into `0..n`.
pub fn index_bits(n: u64) -> u64 {
    if n <= 1 {
        0
    } else {
        counter_bits(n - 1)
    }
}

/// High-water mark of retained bits.
#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct HighWater(u64);

impl HighWater {
    pub(crate) fn observe(&mut self, bits: u64) {
        self.0 = self.0.max(bits);
    }

    pub(crate) fn get(self) -> u64 {
        self.0
    }
}

/// Result of running a distinguisher over a stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Outcome {
    pub decision: bool,
    pub samples_consumed: u64,
    pub memory_bits: u64,
}

/// Feeds `stream` until the distinguisher is done or the stream ends, then
/// asks for the decision. Samples are pulled only while the distinguisher
/// still wants them.
pub fn run<I>(d: &mut dyn Distinguisher, stream: I) -> Result<Outcome, DistinguisherError>
where
    I: IntoIterator<Item = Sample>,
{
    let mut it = stream.into_iter();
    while !d.is_done() {
        let Some(s) = it.next() else { break };
        d.feed(&s)?;
    }
    Ok(Outcome {
        decision: d.decide()?,
        samples_consumed: d.samples_seen(),
        memory_bits: d.memory_bits(),
    })
}

pub(crate) fn wrong_family(name: &'static str, expected: Family, got: &Sample) -> DistinguisherError {
    DistinguisherError::WrongFamily {
        name,
        expected,
        got: got.family(),
    }
}

use rand::Rng;

use super::{Distinguisher, DistinguisherError, Feed};
use crate::rng::rng_from_seed;
use crate::source::Sample;

/// Reads nothing and always answers `output`.
#[derive(Debug, Clone, Copy)]
pub struct Blind {
    output: bool,
}

impl Blind {
    pub fn new(output: bool) -> Self {
        Self { output }
    }
}

impl Distinguisher for Blind {
    fn name(&self) -> &'static str {
        "blind"
    }

    fn feed(&mut self, _sample: &Sample) -> Result<Feed, DistinguisherError> {
        Ok(Feed::Done)
    }

    fn is_done(&self) -> bool {
        true
    }

    fn decide(&self) -> Result<bool, DistinguisherError> {
        Ok(self.output)
    }

    fn samples_seen(&self) -> u64 {
        0
    }

    fn stream_length(&self) -> u64 {
        0
    }

    fn memory_bits(&self) -> u64 {
        0
    }

    fn memory_bound(&self) -> u64 {
        0
    }

    fn paper_width_bits(&self) -> u64 {
        0
    }
}

/// Reads nothing and answers a fair coin drawn from its seed.
#[derive(Debug, Clone, Copy)]
pub struct CoinFlip {
    output: bool,
}

impl CoinFlip {
    pub fn new(seed: u64) -> Self {
        Self {
            output: rng_from_seed(seed).gen(),
        }
    }
}

impl Distinguisher for CoinFlip {
    fn name(&self) -> &'static str {
        "coin"
    }

    fn feed(&mut self, _sample: &Sample) -> Result<Feed, DistinguisherError> {
        Ok(Feed::Done)
    }

    fn is_done(&self) -> bool {
        true
    }

    fn decide(&self) -> Result<bool, DistinguisherError> {
        Ok(self.output)
    }

    fn samples_seen(&self) -> u64 {
        0
    }

    fn stream_length(&self) -> u64 {
        0
    }

    fn memory_bits(&self) -> u64 {
        1
    }

    fn memory_bound(&self) -> u64 {
        1
    }

    fn paper_width_bits(&self) -> u64 {
        1
    }
}

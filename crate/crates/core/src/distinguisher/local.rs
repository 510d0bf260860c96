use std::sync::Arc;

use super::{counter_bits, index_bits, wrong_family, Distinguisher, DistinguisherError, Feed, HighWater};
use crate::gf2::OrderedTuple;
use crate::predicate::Predicate;
use crate::source::{Family, Sample};

/// Largest window the brute-force seed search accepts.
pub const MAX_WINDOW: usize = 24;

/// Keeps the first `count` local-PRG samples whose indices all fall inside
/// the window `0..w`, then searches all `2^w` window seeds for one that
/// explains every stored output bit.
///
/// With fewer than `count` in-window samples after `max_samples` samples the
/// answer is "planted". A planted stream always passes since the true seed's
/// prefix explains it; a null stream passes with probability at most
/// `2^w / 2^count`.
#[derive(Debug, Clone)]
pub struct LocalPrefix {
    n: usize,
    w: usize,
    count: usize,
    max_samples: u64,
    predicate: Arc<Predicate>,
    stored: Vec<(Vec<usize>, bool)>,
    seen: u64,
    verdict: Option<bool>,
    hw: HighWater,
}

impl LocalPrefix {
    pub fn new(
        n: usize,
        w: usize,
        count: usize,
        predicate: Arc<Predicate>,
        max_samples: u64,
    ) -> Result<Self, DistinguisherError> {
        let k = predicate.arity();
        if w < k || w > n || w > MAX_WINDOW {
            return Err(DistinguisherError::InvalidParameter(format!(
                "local_prefix needs k <= w <= min(n, {MAX_WINDOW}), got k={k}, w={w}, n={n}"
            )));
        }
        if count == 0 || max_samples == 0 {
            return Err(DistinguisherError::InvalidParameter(
                "local_prefix needs count, max_samples >= 1".into(),
            ));
        }
        Ok(Self {
            n,
            w,
            count,
            max_samples,
            predicate,
            stored: Vec::with_capacity(count),
            seen: 0,
            verdict: None,
            hw: HighWater::default(),
        })
    }

    /// `count = 2w` and the default stream budget from [`default_max_samples`].
    pub fn with_defaults(n: usize, w: usize, predicate: Arc<Predicate>) -> Result<Self, DistinguisherError> {
        let k = predicate.arity();
        let count = 2 * w;
        Self::new(n, w, count, predicate, default_max_samples(n, k, w, count))
    }

    pub fn in_window(&self) -> usize {
        self.stored.len()
    }

    fn bits(&self, stored: usize) -> u64 {
        let k = self.predicate.arity();
        stored as u64 * (k as u64 * index_bits(self.n as u64) + 1)
            + self.w as u64
            + counter_bits(self.count as u64)
            + counter_bits(self.max_samples)
    }

    fn search(&self) -> bool {
        let w = self.w;
        (0u64..1 << w).any(|y| {
            self.stored.iter().all(|(idx, b)| {
                let input = idx
                    .iter()
                    .fold(0usize, |acc, &i| (acc << 1) | ((y >> (w - 1 - i)) & 1) as usize);
                self.predicate.eval_index(input) == *b
            })
        })
    }
}

/// Stream budget: with `s = w - k` playing the role of the free window part,
/// `4 (n/s)^k w` samples; when `w = k` the budget is twice the expected wait
/// for `count` in-window samples.
pub fn default_max_samples(n: usize, k: usize, w: usize, count: usize) -> u64 {
    if w > k {
        let s = (w - k) as f64;
        (4.0 * (n as f64 / s).powi(k as i32) * w as f64).ceil() as u64
    } else {
        (2.0 * count as f64 / window_probability(n, k, w)).ceil() as u64
    }
}

/// Probability that a uniform ordered `k`-tuple from `0..n` lies in `0..w`.
pub fn window_probability(n: usize, k: usize, w: usize) -> f64 {
    (0..k).map(|i| (w.saturating_sub(i)) as f64 / (n - i) as f64).product()
}

fn in_window(a: &OrderedTuple, w: usize) -> bool {
    a.indices().iter().all(|&i| i < w)
}

impl Distinguisher for LocalPrefix {
    fn name(&self) -> &'static str {
        "local_prefix"
    }

    fn feed(&mut self, sample: &Sample) -> Result<Feed, DistinguisherError> {
        if self.is_done() {
            return Ok(Feed::Done);
        }
        let Sample::Local { a, b } = sample else {
            return Err(wrong_family("local_prefix", Family::LocalPrg, sample));
        };
        if a.n() != self.n || a.k() != self.predicate.arity() {
            return Err(DistinguisherError::SampleDimension {
                expected: self.n,
                got: a.n(),
            });
        }
        self.seen += 1;
        if in_window(a, self.w) {
            self.stored.push((a.indices().to_vec(), *b));
        }
        self.hw.observe(self.bits(self.stored.len()));
        if self.stored.len() == self.count {
            self.verdict = Some(self.search());
        } else if self.seen == self.max_samples {
            self.verdict = Some(true);
        }
        Ok(if self.is_done() { Feed::Done } else { Feed::Continue })
    }

    fn is_done(&self) -> bool {
        self.verdict.is_some()
    }

    /// "Planted" before the window fills, by the timeout convention.
    fn decide(&self) -> Result<bool, DistinguisherError> {
        Ok(self.verdict.unwrap_or(true))
    }

    fn samples_seen(&self) -> u64 {
        self.seen
    }

    fn stream_length(&self) -> u64 {
        self.max_samples
    }

    fn memory_bits(&self) -> u64 {
        self.hw.get()
    }

    fn memory_bound(&self) -> u64 {
        self.bits(self.count)
    }

    fn paper_width_bits(&self) -> u64 {
        self.bits(self.count) - counter_bits(self.max_samples)
    }
}

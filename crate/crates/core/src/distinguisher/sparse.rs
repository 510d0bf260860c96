use super::{counter_bits, wrong_family, Distinguisher, DistinguisherError, Feed, HighWater};
use crate::gf2::{solve_consistent, BitString, Gf2Matrix};
use crate::source::{Family, Sample};

fn equation<'s>(name: &'static str, n: usize, sample: &'s Sample) -> Result<(&'s BitString, bool), DistinguisherError> {
    let Sample::Equation { a, b } = sample else {
        return Err(wrong_family(name, Family::SparseParity, sample));
    };
    if a.len() != n {
        return Err(DistinguisherError::SampleDimension {
            expected: n,
            got: a.len(),
        });
    }
    Ok((a, *b))
}

/// Stores the first `m0` equations and answers "planted" iff the system
/// `<a_i, x> = b_i` has a solution.
///
/// `m0` defaults to `4n`: with that many random equations a uniform right-hand
/// side is consistent with probability `2^{-Ω(n)}`, and memory stays linear.
#[derive(Debug, Clone)]
pub struct SparseSat {
    n: usize,
    m0: usize,
    rows: Vec<BitString>,
    rhs: Vec<bool>,
    hw: HighWater,
}

impl SparseSat {
    pub fn new(n: usize, m0: usize) -> Result<Self, DistinguisherError> {
        if n == 0 || m0 == 0 {
            return Err(DistinguisherError::InvalidParameter(format!(
                "sparse_sat needs n, m0 >= 1, got n={n}, m0={m0}"
            )));
        }
        Ok(Self {
            n,
            m0,
            rows: Vec::with_capacity(m0),
            rhs: Vec::with_capacity(m0),
            hw: HighWater::default(),
        })
    }

    pub fn with_default_window(n: usize) -> Result<Self, DistinguisherError> {
        Self::new(n, 4 * n)
    }

    fn bits(&self, stored: usize) -> u64 {
        (stored * (self.n + 1)) as u64 + counter_bits(self.m0 as u64)
    }
}

impl Distinguisher for SparseSat {
    fn name(&self) -> &'static str {
        "sparse_sat"
    }

    fn feed(&mut self, sample: &Sample) -> Result<Feed, DistinguisherError> {
        if self.is_done() {
            return Ok(Feed::Done);
        }
        let (a, b) = equation("sparse_sat", self.n, sample)?;
        self.rows.push(a.clone());
        self.rhs.push(b);
        self.hw.observe(self.bits(self.rows.len()));
        Ok(if self.is_done() { Feed::Done } else { Feed::Continue })
    }

    fn is_done(&self) -> bool {
        self.rows.len() == self.m0
    }

    fn decide(&self) -> Result<bool, DistinguisherError> {
        if !self.is_done() {
            return Err(DistinguisherError::InsufficientSamples {
                needed: self.m0 as u64,
                seen: self.rows.len() as u64,
            });
        }
        let m = Gf2Matrix::new(self.rows.clone(), self.n)?;
        let rhs = BitString::from_bools(&self.rhs);
        Ok(solve_consistent(&m, &rhs)?.consistent)
    }

    fn samples_seen(&self) -> u64 {
        self.rows.len() as u64
    }

    fn stream_length(&self) -> u64 {
        self.m0 as u64
    }

    fn memory_bits(&self) -> u64 {
        self.hw.get()
    }

    fn memory_bound(&self) -> u64 {
        self.bits(self.m0)
    }

    fn paper_width_bits(&self) -> u64 {
        self.memory_bound()
    }
}

/// Watches for equations whose left side is exactly the first unit vector
/// and answers "planted" iff the first `quota` such right-hand sides agree.
///
/// If the quota is not met within `max_samples` samples the answer is
/// "planted": a planted stream almost always fills the quota, so the rare
/// timeout costs little on the null side.
#[derive(Debug, Clone)]
pub struct SparseFixedQuery {
    n: usize,
    quota: u64,
    max_samples: u64,
    first: Option<bool>,
    mismatch: bool,
    hits: u64,
    seen: u64,
    hw: HighWater,
}

impl SparseFixedQuery {
    pub fn new(n: usize, quota: u64, max_samples: u64) -> Result<Self, DistinguisherError> {
        if n == 0 || quota == 0 || max_samples == 0 {
            return Err(DistinguisherError::InvalidParameter(format!(
                "sparse_fixed_query needs n, quota, max_samples >= 1, got n={n}, quota={quota}, max_samples={max_samples}"
            )));
        }
        Ok(Self {
            n,
            quota,
            max_samples,
            first: None,
            mismatch: false,
            hits: 0,
            seen: 0,
            hw: HighWater::default(),
        })
    }

    /// `max_samples` defaults to four times the expected wait for `quota` hits.
    pub fn with_defaults(n: usize, k: usize, quota: u64) -> Result<Self, DistinguisherError> {
        Self::new(n, quota, default_max_samples(n, k, quota)?)
    }

    pub fn hits(&self) -> u64 {
        self.hits
    }

    pub fn quota_reached(&self) -> bool {
        self.hits == self.quota
    }

    fn bits(&self) -> u64 {
        // first bit, mismatch flag, hit counter, sample counter
        2 + counter_bits(self.quota) + counter_bits(self.max_samples)
    }
}

/// Probability that one sparse-parity sample has `a = e_1` exactly.
pub fn unit_hit_probability(n: usize, k: usize) -> f64 {
    let p = k as f64 / n as f64;
    p * (1.0 - p).powi(n as i32 - 1)
}

pub fn default_max_samples(n: usize, k: usize, quota: u64) -> Result<u64, DistinguisherError> {
    if k == 0 || k >= n {
        return Err(DistinguisherError::InvalidParameter(format!(
            "sparse_fixed_query needs 1 <= k < n, got k={k}, n={n}"
        )));
    }
    let wait = quota as f64 / unit_hit_probability(n, k);
    if !wait.is_finite() || wait > 1e15 {
        return Err(DistinguisherError::InvalidParameter(format!(
            "expected wait {wait:.3e} samples is out of reach"
        )));
    }
    Ok((4.0 * wait).ceil() as u64)
}

impl Distinguisher for SparseFixedQuery {
    fn name(&self) -> &'static str {
        "sparse_fixed_query"
    }

    fn feed(&mut self, sample: &Sample) -> Result<Feed, DistinguisherError> {
        if self.is_done() {
            return Ok(Feed::Done);
        }
        let (a, b) = equation("sparse_fixed_query", self.n, sample)?;
        self.seen += 1;
        if a.count_ones() == 1 && a.get(0) {
            self.hits += 1;
            match self.first {
                None => self.first = Some(b),
                Some(f) if f != b => self.mismatch = true,
                Some(_) => {}
            }
        }
        self.hw.observe(self.bits());
        Ok(if self.is_done() { Feed::Done } else { Feed::Continue })
    }

    fn is_done(&self) -> bool {
        self.quota_reached() || self.seen == self.max_samples
    }

    fn decide(&self) -> Result<bool, DistinguisherError> {
        Ok(!self.quota_reached() || !self.mismatch)
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
        self.bits()
    }

    /// The sample counter lives in the layer index; only the hit state is
    /// program width.
    fn paper_width_bits(&self) -> u64 {
        2 + counter_bits(self.quota)
    }
}

#[cfg(test)]
mod tests {
    use super::super::run;
    use super::*;
    use crate::rng::rng_from_seed;
    use crate::source::{Instance, SourceSpec};

    #[test]
    fn zero_equations_are_satisfiable() {
        let n = 6;
        let s: Vec<_> = (0..24)
            .map(|_| Sample::Equation {
                a: BitString::zeros(n),
                b: false,
            })
            .collect();
        let mut d = SparseSat::with_default_window(n).unwrap();
        assert!(run(&mut d, s).unwrap().decision);
        assert_eq!(d.memory_bound(), 24 * 7 + 5);
    }

    #[test]
    fn contradiction_is_rejected() {
        let n = 3;
        let e = BitString::unit(n, 1);
        let s = vec![
            Sample::Equation { a: e.clone(), b: true },
            Sample::Equation { a: e, b: false },
        ];
        let mut d = SparseSat::new(n, 2).unwrap();
        assert!(!run(&mut d, s).unwrap().decision);
    }

    #[test]
    fn sat_planted_always_accepts() {
        let spec = SourceSpec::sparse_parity(16, 4).unwrap();
        let mut rng = rng_from_seed(3);
        for t in 0..100 {
            let inst = Instance::planted_random(&spec, &mut rng).unwrap();
            let mut d = SparseSat::with_default_window(16).unwrap();
            assert!(run(&mut d, inst.stream(rng_from_seed(t))).unwrap().decision);
        }
    }

    #[test]
    fn sat_insufficient() {
        let mut d = SparseSat::new(4, 3).unwrap();
        let s = vec![Sample::Equation {
            a: BitString::zeros(4),
            b: false,
        }];
        assert!(matches!(
            run(&mut d, s),
            Err(DistinguisherError::InsufficientSamples { .. })
        ));
    }

    #[test]
    fn fixed_query_counts_only_exact_unit() {
        let n = 4;
        let mut d = SparseFixedQuery::new(n, 2, 100).unwrap();
        let e1 = BitString::unit(n, 0);
        let mut not_e1 = e1.clone();
        not_e1.set(2, true);
        d.feed(&Sample::Equation { a: not_e1, b: true }).unwrap();
        d.feed(&Sample::Equation {
            a: BitString::unit(n, 1),
            b: true,
        })
        .unwrap();
        assert_eq!(d.hits(), 0);
        d.feed(&Sample::Equation { a: e1.clone(), b: true }).unwrap();
        assert_eq!(d.feed(&Sample::Equation { a: e1, b: false }).unwrap(), Feed::Done);
        assert!(!d.decide().unwrap());
    }

    #[test]
    fn fixed_query_timeout_decides_planted() {
        let mut d = SparseFixedQuery::new(5, 5, 3).unwrap();
        let s: Vec<_> = (0..10)
            .map(|_| Sample::Equation {
                a: BitString::zeros(5),
                b: true,
            })
            .collect();
        let out = run(&mut d, s).unwrap();
        assert!(out.decision);
        assert_eq!(out.samples_consumed, 3);
    }

    #[test]
    fn fixed_query_planted_bits_agree() {
        let spec = SourceSpec::sparse_parity(8, 2).unwrap();
        let mut rng = rng_from_seed(8);
        for t in 0..50 {
            let inst = Instance::planted_random(&spec, &mut rng).unwrap();
            let mut d = SparseFixedQuery::with_defaults(8, 2, 5).unwrap();
            assert!(run(&mut d, inst.stream(rng_from_seed(t))).unwrap().decision);
            assert!(d.memory_bits() <= d.memory_bound());
        }
    }

    #[test]
    fn hit_probability_lower_bound() {
        for (n, k) in [(32, 3), (16, 2), (100, 10)] {
            let p = unit_hit_probability(n, k);
            assert!(p >= k as f64 / n as f64 * (-2.0 * k as f64).exp());
        }
    }
}

use super::{counter_bits, wrong_family, Distinguisher, DistinguisherError, Feed, HighWater};
use crate::gf2::{BitString, Gf2Matrix};
use crate::rng::{rng_from_seed, StreamRng};
use crate::source::{Family, Sample};

/// Shared storage for the two rank-based testers: keeps the first `window`
/// samples projected onto their first `cols` coordinates.
#[derive(Debug, Clone)]
struct ProjectedWindow {
    n: usize,
    cols: usize,
    window: usize,
    stored: Vec<BitString>,
    seen: u64,
    hw: HighWater,
}

impl ProjectedWindow {
    fn new(n: usize, cols: usize, window: usize) -> Self {
        Self {
            n,
            cols,
            window,
            stored: Vec::with_capacity(window),
            seen: 0,
            hw: HighWater::default(),
        }
    }

    fn bits(&self, stored: usize) -> u64 {
        (stored * self.cols) as u64 + counter_bits(self.window as u64)
    }

    fn feed(&mut self, name: &'static str, sample: &Sample) -> Result<Feed, DistinguisherError> {
        if self.stored.len() == self.window {
            return Ok(Feed::Done);
        }
        let Sample::Vector(u) = sample else {
            return Err(wrong_family(name, Family::Subspace, sample));
        };
        if u.len() != self.n {
            return Err(DistinguisherError::SampleDimension {
                expected: self.n,
                got: u.len(),
            });
        }
        self.seen += 1;
        self.stored.push(u.prefix(self.cols));
        self.hw.observe(self.bits(self.stored.len()));
        Ok(if self.stored.len() == self.window {
            Feed::Done
        } else {
            Feed::Continue
        })
    }

    fn rank(&self) -> Result<usize, DistinguisherError> {
        if self.stored.len() < self.window {
            return Err(DistinguisherError::InsufficientSamples {
                needed: self.window as u64,
                seen: self.seen,
            });
        }
        Ok(Gf2Matrix::new(self.stored.clone(), self.cols)?.rank())
    }
}

/// Stores the first `min(8k, n)` coordinates of the first `8k` samples and
/// answers "planted" iff they span at most `k` dimensions.
///
/// Planted streams always pass. A uniform stream passes only if at least `7k`
/// of the `8k` samples fall into the span of their predecessors, which has
/// probability below `2^{-2k}`.
#[derive(Debug, Clone)]
pub struct SubspaceRank {
    k: usize,
    win: ProjectedWindow,
}

impl SubspaceRank {
    pub fn new(k: usize, n: usize) -> Result<Self, DistinguisherError> {
        if k == 0 || k >= n {
            return Err(DistinguisherError::InvalidParameter(format!(
                "subspace_rank needs 1 <= k <= n-1, got k={k}, n={n}"
            )));
        }
        Self::with_window(k, n, 8 * k)
    }

    /// Same test over the first `window` samples, projected to
    /// `min(window, n)` coordinates.
    pub fn with_window(k: usize, n: usize, window: usize) -> Result<Self, DistinguisherError> {
        if k == 0 || k > n || window == 0 {
            return Err(DistinguisherError::InvalidParameter(format!(
                "subspace_rank window needs k in 1..=n and window >= 1, got k={k}, n={n}, window={window}"
            )));
        }
        Ok(Self {
            k,
            win: ProjectedWindow::new(n, window.min(n), window),
        })
    }

    pub fn window(&self) -> usize {
        self.win.window
    }
}

impl Distinguisher for SubspaceRank {
    fn name(&self) -> &'static str {
        "subspace_rank"
    }

    fn feed(&mut self, sample: &Sample) -> Result<Feed, DistinguisherError> {
        self.win.feed("subspace_rank", sample)
    }

    fn is_done(&self) -> bool {
        self.win.stored.len() == self.win.window
    }

    fn decide(&self) -> Result<bool, DistinguisherError> {
        Ok(self.win.rank()? <= self.k)
    }

    fn samples_seen(&self) -> u64 {
        self.win.seen
    }

    fn stream_length(&self) -> u64 {
        self.win.window as u64
    }

    fn memory_bits(&self) -> u64 {
        self.win.hw.get()
    }

    fn memory_bound(&self) -> u64 {
        self.win.bits(self.win.window)
    }

    fn paper_width_bits(&self) -> u64 {
        self.memory_bound()
    }
}

/// Rank test with an explicit threshold: decides `false` (low rank) iff the
/// first `window` samples, projected onto `n_eff` coordinates, have rank at
/// most `r`.
///
/// The orientation is the opposite of [`SubspaceRank`]: here `false` signals
/// the lower-dimensional source. The parity learner takes the orientation as
/// an explicit argument.
#[derive(Debug, Clone)]
pub struct RankThreshold {
    r: usize,
    win: ProjectedWindow,
}

impl RankThreshold {
    pub fn new(r: usize, window: usize, n: usize, n_eff: usize) -> Result<Self, DistinguisherError> {
        if window == 0 || n_eff == 0 || n_eff > n {
            return Err(DistinguisherError::InvalidParameter(format!(
                "rank_threshold needs window >= 1 and 1 <= n_eff <= n, got window={window}, n_eff={n_eff}, n={n}"
            )));
        }
        Ok(Self {
            r,
            win: ProjectedWindow::new(n, n_eff, window),
        })
    }
}

impl Distinguisher for RankThreshold {
    fn name(&self) -> &'static str {
        "rank_threshold"
    }

    fn feed(&mut self, sample: &Sample) -> Result<Feed, DistinguisherError> {
        self.win.feed("rank_threshold", sample)
    }

    fn is_done(&self) -> bool {
        self.win.stored.len() == self.win.window
    }

    fn decide(&self) -> Result<bool, DistinguisherError> {
        Ok(self.win.rank()? > self.r)
    }

    fn samples_seen(&self) -> u64 {
        self.win.seen
    }

    fn stream_length(&self) -> u64 {
        self.win.window as u64
    }

    fn memory_bits(&self) -> u64 {
        self.win.hw.get()
    }

    fn memory_bound(&self) -> u64 {
        self.win.bits(self.win.window)
    }

    fn paper_width_bits(&self) -> u64 {
        self.memory_bound()
    }
}

#[derive(Debug, Clone)]
enum TestVectors {
    Random(StreamRng),
    Fixed(Vec<BitString>),
}

/// Repeatedly picks a nonzero test vector `v` and checks whether the next
/// `per_iter` samples are all orthogonal to it; answers "planted" at the
/// first iteration that passes and "null" after `iterations` failures.
///
/// Under the null each iteration passes with probability `2^{-per_iter}`.
/// Under a planted `k`-dimensional source, `v` lands in the orthogonal
/// complement with probability above `2^{-(k+1)}`.
#[derive(Debug, Clone)]
pub struct OrthogonalTester {
    n: usize,
    iterations: usize,
    per_iter: usize,
    vectors: TestVectors,
    current: Option<BitString>,
    iter: usize,
    pos: usize,
    failed: bool,
    decided: Option<bool>,
    seen: u64,
    hw: HighWater,
}

impl OrthogonalTester {
    /// Defaults: `10 * 2^k` iterations of `2k` samples each.
    pub fn new(k: usize, n: usize, seed: u64) -> Result<Self, DistinguisherError> {
        if k == 0 || k >= 40 {
            return Err(DistinguisherError::InvalidParameter(format!(
                "orthogonal tester needs 1 <= k < 40, got {k}"
            )));
        }
        Self::with_params(n, 10 << k, 2 * k, seed)
    }

    pub fn with_params(n: usize, iterations: usize, per_iter: usize, seed: u64) -> Result<Self, DistinguisherError> {
        if n == 0 || iterations == 0 || per_iter == 0 {
            return Err(DistinguisherError::InvalidParameter(
                "orthogonal tester needs n, iterations, per_iter >= 1".into(),
            ));
        }
        Ok(Self::build(
            n,
            iterations,
            per_iter,
            TestVectors::Random(rng_from_seed(seed)),
        ))
    }

    /// Uses the given test vectors, one per iteration, in order.
    pub fn with_vectors(vectors: Vec<BitString>, per_iter: usize) -> Result<Self, DistinguisherError> {
        let n = vectors
            .first()
            .map(BitString::len)
            .ok_or_else(|| DistinguisherError::InvalidParameter("need at least one test vector".into()))?;
        if per_iter == 0 {
            return Err(DistinguisherError::InvalidParameter("per_iter must be positive".into()));
        }
        for v in &vectors {
            if v.len() != n {
                return Err(DistinguisherError::SampleDimension {
                    expected: n,
                    got: v.len(),
                });
            }
            if v.is_zero() {
                return Err(DistinguisherError::InvalidParameter("zero test vector".into()));
            }
        }
        Ok(Self::build(n, vectors.len(), per_iter, TestVectors::Fixed(vectors)))
    }

    fn build(n: usize, iterations: usize, per_iter: usize, vectors: TestVectors) -> Self {
        Self {
            n,
            iterations,
            per_iter,
            vectors,
            current: None,
            iter: 0,
            pos: 0,
            failed: false,
            decided: None,
            seen: 0,
            hw: HighWater::default(),
        }
    }

    pub fn iterations(&self) -> usize {
        self.iterations
    }

    pub fn per_iter(&self) -> usize {
        self.per_iter
    }

    fn next_vector(&mut self) -> BitString {
        match &mut self.vectors {
            TestVectors::Fixed(vs) => vs[self.iter].clone(),
            TestVectors::Random(rng) => loop {
                let v = BitString::random(self.n, rng);
                if !v.is_zero() {
                    break v;
                }
            },
        }
    }

    fn bits(&self) -> u64 {
        self.n as u64 + counter_bits(self.per_iter as u64) + counter_bits(self.iterations as u64) + 1
    }
}

impl Distinguisher for OrthogonalTester {
    fn name(&self) -> &'static str {
        "orthogonal_tester"
    }

    fn feed(&mut self, sample: &Sample) -> Result<Feed, DistinguisherError> {
        if self.decided.is_some() {
            return Ok(Feed::Done);
        }
        let Sample::Vector(a) = sample else {
            return Err(wrong_family("orthogonal_tester", Family::Subspace, sample));
        };
        if a.len() != self.n {
            return Err(DistinguisherError::SampleDimension {
                expected: self.n,
                got: a.len(),
            });
        }
        if self.pos == 0 {
            let v = self.next_vector();
            self.current = Some(v);
            self.failed = false;
        }
        self.seen += 1;
        let v = self.current.as_ref().expect("vector drawn at iteration start");
        if a.dot(v) {
            self.failed = true;
        }
        self.hw.observe(self.bits());
        self.pos += 1;
        if self.pos == self.per_iter {
            if !self.failed {
                self.decided = Some(true);
                return Ok(Feed::Done);
            }
            self.pos = 0;
            self.iter += 1;
            if self.iter == self.iterations {
                self.decided = Some(false);
                return Ok(Feed::Done);
            }
        }
        Ok(Feed::Continue)
    }

    fn is_done(&self) -> bool {
        self.decided.is_some()
    }

    fn decide(&self) -> Result<bool, DistinguisherError> {
        self.decided.ok_or(DistinguisherError::InsufficientSamples {
            needed: (self.iterations * self.per_iter) as u64,
            seen: self.seen,
        })
    }

    fn samples_seen(&self) -> u64 {
        self.seen
    }

    fn stream_length(&self) -> u64 {
        (self.iterations * self.per_iter) as u64
    }

    fn memory_bits(&self) -> u64 {
        self.hw.get()
    }

    fn memory_bound(&self) -> u64 {
        self.bits()
    }

    /// Three live states per layer (passing, failed, accepted).
    fn paper_width_bits(&self) -> u64 {
        2
    }
}

/// Used by tests and the branching-program compiler: draws the vectors a
/// randomly seeded tester would use, in order.
pub fn tester_vectors(n: usize, iterations: usize, seed: u64) -> Vec<BitString> {
    let mut rng = rng_from_seed(seed);
    (0..iterations)
        .map(|_| loop {
            let v = BitString::random(n, &mut rng);
            if !v.is_zero() {
                break v;
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::super::run;
    use super::*;
    use crate::rng::rng_from_seed;
    use crate::source::{Hidden, Instance, SourceSpec};

    fn vec_stream(vs: &[BitString]) -> Vec<Sample> {
        vs.iter().cloned().map(Sample::Vector).collect()
    }

    #[test]
    fn rank_on_repeated_basis_vectors() {
        let (n, k) = (12, 3);
        let basis: Vec<_> = (0..k).map(|i| BitString::unit(n, i)).collect();
        let stream: Vec<_> = basis.iter().cycle().take(8 * k).cloned().collect();
        let mut d = SubspaceRank::new(k, n).unwrap();
        let out = run(&mut d, vec_stream(&stream)).unwrap();
        assert!(out.decision);
        assert_eq!(out.samples_consumed, 24);
        assert_eq!(d.memory_bits(), d.memory_bound());
        assert_eq!(d.memory_bound(), 12 * 24 + 5);
    }

    #[test]
    fn rank_planted_always_accepts() {
        let spec = SourceSpec::subspace(24, 4).unwrap();
        let mut rng = rng_from_seed(11);
        for t in 0..200 {
            let inst = Instance::planted_random(&spec, &mut rng).unwrap();
            let mut d = SubspaceRank::new(4, 24).unwrap();
            assert!(run(&mut d, inst.stream(rng_from_seed(t))).unwrap().decision);
        }
    }

    #[test]
    fn rank_short_stream_is_an_error() {
        let mut d = SubspaceRank::new(2, 8).unwrap();
        let out = run(&mut d, vec_stream(&[BitString::unit(8, 0)]));
        assert_eq!(
            out,
            Err(DistinguisherError::InsufficientSamples { needed: 16, seen: 1 })
        );
    }

    #[test]
    fn rank_rejects_bad_parameters_and_samples() {
        assert!(SubspaceRank::new(0, 8).is_err());
        assert!(SubspaceRank::new(8, 8).is_err());
        let mut d = SubspaceRank::new(2, 8).unwrap();
        assert!(d.feed(&Sample::Vector(BitString::zeros(7))).is_err());
        let e = Sample::Equation {
            a: BitString::zeros(8),
            b: false,
        };
        assert!(matches!(d.feed(&e), Err(DistinguisherError::WrongFamily { .. })));
    }

    #[test]
    fn threshold_orientation() {
        let n = 10;
        let r = 3;
        let basis: Vec<_> = (0..r).map(|i| BitString::unit(n, i)).collect();
        let stream: Vec<_> = basis.iter().cycle().take(12).cloned().collect();
        let mut d = RankThreshold::new(r, 12, n, n).unwrap();
        assert!(!run(&mut d, vec_stream(&stream)).unwrap().decision);
        let mut d = RankThreshold::new(r - 1, 12, n, n).unwrap();
        assert!(run(&mut d, vec_stream(&stream)).unwrap().decision);
    }

    #[test]
    fn threshold_dim_r_planted_is_low_rank() {
        let (n, r) = (20, 5);
        let spec = SourceSpec::subspace(n, r).unwrap();
        let mut rng = rng_from_seed(12);
        for t in 0..100 {
            let inst = Instance::planted_random(&spec, &mut rng).unwrap();
            let mut d = RankThreshold::new(r, 8 * r, n, n).unwrap();
            assert!(!run(&mut d, inst.stream(rng_from_seed(t))).unwrap().decision);
        }
    }

    #[test]
    fn tester_with_fixed_vectors_matches_direct_check() {
        let v = BitString::unit(3, 0);
        // accepts iff both samples have bit 1 equal to 0
        for code in 0..64u64 {
            let a1 = BitString::from_u64(code >> 3, 3);
            let a2 = BitString::from_u64(code & 7, 3);
            let mut d = OrthogonalTester::with_vectors(vec![v.clone()], 2).unwrap();
            let out = run(&mut d, vec_stream(&[a1.clone(), a2.clone()])).unwrap();
            assert_eq!(out.decision, !a1.get(0) && !a2.get(0));
        }
    }

    #[test]
    fn tester_rejects_zero_vector() {
        assert!(OrthogonalTester::with_vectors(vec![BitString::zeros(4)], 2).is_err());
    }

    #[test]
    fn tester_accepts_planted_when_vector_is_orthogonal() {
        let n = 6;
        let spec = SourceSpec::subspace(n, 2).unwrap();
        let basis = vec![BitString::unit(n, 0), BitString::unit(n, 1)];
        let inst = Instance::planted(&spec, Hidden::Basis(basis)).unwrap();
        let v = BitString::unit(n, 5);
        let mut d = OrthogonalTester::with_vectors(vec![v], 4).unwrap();
        assert!(run(&mut d, inst.stream(rng_from_seed(0))).unwrap().decision);
        assert_eq!(d.samples_seen(), 4);
    }

    #[test]
    fn tester_memory_within_bound() {
        let mut d = OrthogonalTester::new(3, 10, 5).unwrap();
        let spec = SourceSpec::subspace(10, 3).unwrap();
        let inst = Instance::null(&spec);
        run(&mut d, inst.stream(rng_from_seed(1))).unwrap();
        assert!(d.memory_bits() <= d.memory_bound());
        assert!(d.memory_bound() <= 10 + 2 * 8);
        assert_eq!(d.paper_width_bits(), 2);
    }

    #[test]
    fn seeded_tester_uses_tester_vectors() {
        let vs = tester_vectors(5, 4, 99);
        let spec = SourceSpec::subspace(5, 2).unwrap();
        let inst = Instance::null(&spec);
        let stream: Vec<_> = inst.stream(rng_from_seed(2)).take(4 * 3).collect();
        let mut a = OrthogonalTester::with_params(5, 4, 3, 99).unwrap();
        let mut b = OrthogonalTester::with_vectors(vs, 3).unwrap();
        let ra = run(&mut a, stream.clone()).unwrap();
        let rb = run(&mut b, stream).unwrap();
        assert_eq!(ra, rb);
    }
}

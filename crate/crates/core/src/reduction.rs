//! Learners built from distinguishers.
//!
//! Both learners recover a secret `x` one coordinate at a time. For
//! coordinate `i` they repeatedly guess a bit `g`, re-randomize the incoming
//! equations so that the result looks planted exactly when `x^i = g`, run a
//! fresh distinguisher on the transformed stream and vote. The majority of
//! votes fixes the coordinate; ties go to 1.
//!
//! Votes are read under an explicit [`Orientation`]. With
//! [`Orientation::ZeroMeansMismatch`], an output of 0 is a vote for
//! `x^i = 1 - g` and an output of 1 a vote for `x^i = g`.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use rand::Rng;
use thiserror::Error;

use crate::distinguisher::{DistinguisherError, Factory};
use crate::gf2::{sample_full_rank_map, sample_sparse_vector, BitString, Gf2Error, Gf2Matrix};
use crate::source::Sample;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ReductionError {
    #[error("oracle exhausted after {consumed} samples")]
    OracleExhausted { consumed: u64 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("inner distinguisher: {0}")]
    Distinguisher(#[from] DistinguisherError),
    #[error(transparent)]
    Gf2(#[from] Gf2Error),
}

/// How a distinguisher's output bit maps to a vote.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Orientation {
    /// Output 0 votes for `x^i = 1 - g`. Suits distinguishers that answer 1
    /// on the lower-dimensional (or satisfiable) stream.
    ZeroMeansMismatch,
    /// Output 0 votes for `x^i = g`. Suits distinguishers such as
    /// `rank_threshold` that answer 0 on the lower-dimensional stream.
    ZeroMeansMatch,
}

impl Orientation {
    /// The output as the paper-convention bit: 1 iff the vote is for `g`.
    fn normalize(self, output: bool) -> bool {
        match self {
            Orientation::ZeroMeansMismatch => output,
            Orientation::ZeroMeansMatch => !output,
        }
    }
}

/// One vote of one repetition.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Vote {
    pub bit: usize,
    pub g: bool,
    /// Raw distinguisher output.
    pub output: bool,
    /// The value of `x^i` this vote supports.
    pub voted_for: bool,
}

/// Step 4 of the learner: which value of `x^i` a (normalized) output
/// supports.
pub fn vote_for(g: bool, normalized_output: bool) -> bool {
    if normalized_output {
        g
    } else {
        !g
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LearnerReport {
    pub estimate: BitString,
    /// `(count0, count1)` per coordinate.
    pub per_bit_votes: Vec<(u64, u64)>,
    pub halted: bool,
    pub samples_consumed: u64,
    pub votes: Vec<Vote>,
}

impl LearnerReport {
    /// `(votes for the true bit, all votes)`.
    pub fn correct_votes(&self, x: &BitString) -> (u64, u64) {
        let good = self.votes.iter().filter(|v| v.voted_for == x.get(v.bit)).count() as u64;
        (good, self.votes.len() as u64)
    }
}

fn majority(count0: u64, count1: u64) -> bool {
    count0 <= count1
}

fn finish(
    n_bits: usize,
    reps: usize,
    orientation: Orientation,
    mut vote_fn: impl FnMut(usize) -> Result<Option<(bool, bool)>, ReductionError>,
    consumed: impl Fn() -> u64,
) -> Result<LearnerReport, ReductionError> {
    let mut estimate = BitString::zeros(n_bits);
    let mut per_bit_votes = Vec::with_capacity(n_bits);
    let mut votes = Vec::with_capacity(n_bits * reps);
    for i in 0..n_bits {
        let (mut c0, mut c1) = (0u64, 0u64);
        for _ in 0..reps {
            let Some((g, output)) = vote_fn(i)? else {
                return Ok(LearnerReport {
                    estimate: BitString::zeros(n_bits),
                    per_bit_votes,
                    halted: true,
                    samples_consumed: consumed(),
                    votes,
                });
            };
            let v = vote_for(g, orientation.normalize(output));
            if v {
                c1 += 1;
            } else {
                c0 += 1;
            }
            votes.push(Vote {
                bit: i,
                g,
                output,
                voted_for: v,
            });
        }
        estimate.set(i, majority(c0, c1));
        per_bit_votes.push((c0, c1));
    }
    Ok(LearnerReport {
        estimate,
        per_bit_votes,
        halted: false,
        samples_consumed: consumed(),
        votes,
    })
}

/// The transform `f_M(a, b) = M (a^{-i}, b + g a^i, 0, ..., 0)`.
pub fn parity_transform(m: &Gf2Matrix, a: &BitString, b: bool, i: usize, g: bool) -> Result<BitString, Gf2Error> {
    let n = m.n_cols();
    let k = a.len();
    if k > n {
        return Err(Gf2Error::DimensionMismatch { left: k, right: n });
    }
    let mut v = a.without(i).padded(n);
    v.set(k - 1, b ^ (g & a.get(i)));
    m.mul_vec(&v)
}

/// Recovers `x ∈ {0,1}^{k'}` from equations `(a, <a, x>)` with `a` uniform
/// in `{0,1}^{k'}`, using a distinguisher for subspaces of `{0,1}^n` of
/// dimension `k' - 1` versus `k'`.
///
/// Each vote draws a uniform `g` and a uniform invertible `M`, then feeds
/// exactly `inner_m` transformed equations to a fresh distinguisher. In
/// total `reps * k' * inner_m` equations are read.
#[allow(clippy::too_many_arguments)]
pub fn learn_parity<I, R>(
    factory: &Factory,
    orientation: Orientation,
    n: usize,
    k_prime: usize,
    reps: usize,
    inner_m: usize,
    oracle: I,
    rng: &mut R,
) -> Result<LearnerReport, ReductionError>
where
    I: IntoIterator<Item = (BitString, bool)>,
    R: Rng + ?Sized,
{
    if k_prime == 0 || k_prime > n || reps == 0 || inner_m == 0 {
        return Err(ReductionError::InvalidParameter(format!(
            "need 1 <= k' <= n, reps >= 1, inner_m >= 1; got k'={k_prime}, n={n}, reps={reps}, inner_m={inner_m}"
        )));
    }
    let mut oracle = oracle.into_iter();
    let consumed = std::cell::Cell::new(0u64);
    finish(
        k_prime,
        reps,
        orientation,
        |i| {
            let g: bool = rng.gen();
            let m = sample_full_rank_map(n, rng)?;
            let mut d = factory(rng.gen());
            for _ in 0..inner_m {
                let (a, b) = oracle.next().ok_or(ReductionError::OracleExhausted {
                    consumed: consumed.get(),
                })?;
                consumed.set(consumed.get() + 1);
                if a.len() != k_prime {
                    return Err(ReductionError::InvalidParameter(format!(
                        "oracle sample has length {}, expected {k_prime}",
                        a.len()
                    )));
                }
                if !d.is_done() {
                    d.feed(&Sample::Vector(parity_transform(&m, &a, b, i, g)?))?;
                }
            }
            let out = d.decide()?;
            Ok(Some((g, out)))
        },
        || consumed.get(),
    )
}

/// Uniform equations `(a, <a, x>)` over `{0,1}^{|x|}`.
pub fn parity_oracle<R: Rng>(x: BitString, mut rng: R) -> impl Iterator<Item = (BitString, bool)> {
    std::iter::from_fn(move || {
        let a = BitString::random(x.len(), &mut rng);
        let b = a.dot(&x);
        Some((a, b))
    })
}

/// Sparse equations over `{0,1}^{n+1}` with `Ber(k/n)` coefficients, where
/// `n + 1 = |x|`.
pub fn sparse_oracle<R: Rng>(
    x: BitString,
    k: usize,
    mut rng: R,
) -> Result<impl Iterator<Item = (BitString, bool)>, ReductionError> {
    let n = x
        .len()
        .checked_sub(1)
        .filter(|&n| n > 0)
        .ok_or_else(|| ReductionError::InvalidParameter("secret needs at least 2 bits".into()))?;
    if k == 0 || k > n {
        return Err(ReductionError::InvalidParameter(format!(
            "need 1 <= k <= n, got k={k}, n={n}"
        )));
    }
    let p = k as f64 / n as f64;
    Ok(std::iter::from_fn(move || {
        let a = sample_sparse_vector(x.len(), p, &mut rng).expect("p in [0, 1]");
        let b = a.dot(&x);
        Some((a, b))
    }))
}

/// The transform `f_y(a, b) = (a^{-i}, b + g a^i + <a^{-i}, y>)`.
pub fn sparse_transform(a: &BitString, b: bool, i: usize, g: bool, y: &BitString) -> (BitString, bool) {
    let rest = a.without(i);
    let bit = b ^ (g & a.get(i)) ^ rest.dot(y);
    (rest, bit)
}

/// Default scan budget per vote: `ceil((n/k) (inner_m + 16 log2(n / s)))`.
pub fn default_feed_budget(n: usize, k: usize, inner_m: usize, s_assumed: f64) -> u64 {
    let slack = 16.0 * (n as f64 / s_assumed).log2();
    ((n as f64 / k as f64) * (inner_m as f64 + slack)).ceil() as u64
}

/// Assumed distinguishing advantage behind [`default_feed_budget`].
pub const DEFAULT_S_ASSUMED: f64 = 0.25;

/// Recovers `x ∈ {0,1}^{n+1}` from sparse equations with `Ber(k/n)`
/// coefficients, using a distinguisher between satisfiable and random sparse
/// equations over `{0,1}^n`.
///
/// For each vote the learner scans at most `feed_budget` equations, passing
/// on those with `a^i = 1` and, independently with probability `k/(n-k)`,
/// those with `a^i = 0`. A vote that cannot collect `inner_m` equations
/// within its budget halts the learner, which then reports `0^{n+1}`.
#[allow(clippy::too_many_arguments)]
pub fn learn_sparse_parity<I, R>(
    factory: &Factory,
    orientation: Orientation,
    n: usize,
    k: usize,
    reps: usize,
    inner_m: usize,
    feed_budget: u64,
    oracle: I,
    rng: &mut R,
) -> Result<LearnerReport, ReductionError>
where
    I: IntoIterator<Item = (BitString, bool)>,
    R: Rng + ?Sized,
{
    if k == 0 || 2 * k > n || reps == 0 || inner_m == 0 {
        return Err(ReductionError::InvalidParameter(format!(
            "need 1 <= k <= n/2, reps >= 1, inner_m >= 1; got k={k}, n={n}, reps={reps}, inner_m={inner_m}"
        )));
    }
    let q = k as f64 / (n - k) as f64;
    let mut oracle = oracle.into_iter();
    let consumed = std::cell::Cell::new(0u64);
    finish(
        n + 1,
        reps,
        orientation,
        |i| {
            let g: bool = rng.gen();
            let y = BitString::random(n, rng);
            let mut d = factory(rng.gen());
            let mut fed = 0usize;
            let mut scanned = 0u64;
            while fed < inner_m {
                if scanned == feed_budget {
                    return Ok(None);
                }
                let (a, b) = oracle.next().ok_or(ReductionError::OracleExhausted {
                    consumed: consumed.get(),
                })?;
                consumed.set(consumed.get() + 1);
                scanned += 1;
                if a.len() != n + 1 {
                    return Err(ReductionError::InvalidParameter(format!(
                        "oracle sample has length {}, expected {}",
                        a.len(),
                        n + 1
                    )));
                }
                if a.get(i) || rng.gen_bool(q) {
                    let (a2, b2) = sparse_transform(&a, b, i, g, &y);
                    if !d.is_done() {
                        d.feed(&Sample::Equation { a: a2, b: b2 })?;
                    }
                    fed += 1;
                }
            }
            let out = d.decide()?;
            Ok(Some((g, out)))
        },
        || consumed.get(),
    )
}

/// Exact probability that one scanned equation is passed on: `2k/n`.
pub fn feed_probability(n: usize, k: usize) -> BigRational {
    let nn = BigInt::from(n);
    let kk = BigInt::from(k);
    let p1 = BigRational::new(kk.clone(), nn.clone());
    let q = BigRational::new(kk, BigInt::from(n - k));
    &p1 + q * (BigRational::one() - &p1)
}

fn ber_weight(a: u64, bits: usize, p: &BigRational) -> BigRational {
    let w = a.count_ones() as usize;
    num_traits::pow(p.clone(), w) * num_traits::pow(BigRational::one() - p, bits - w)
}

/// Exact distribution of one passed-on equation, indexed by
/// `2 * value(a') + b'` over `{0,1}^n x {0,1}`, for secret `x ∈ {0,1}^{n+1}`,
/// coordinate `i`, guess `g` and mask `y`.
pub fn fed_sample_distribution(
    n: usize,
    k: usize,
    x: &BitString,
    i: usize,
    g: bool,
    y: &BitString,
) -> Vec<BigRational> {
    assert!(n <= 16 && x.len() == n + 1 && y.len() == n && i <= n && 2 * k <= n);
    let p = BigRational::new(BigInt::from(k), BigInt::from(n));
    let q = BigRational::new(BigInt::from(k), BigInt::from(n - k));
    let mut out = vec![BigRational::zero(); 1 << (n + 1)];
    for av in 0..1u64 << (n + 1) {
        let a = BitString::from_u64(av, n + 1);
        let b = a.dot(x);
        let pass = if a.get(i) { BigRational::one() } else { q.clone() };
        let (a2, b2) = sparse_transform(&a, b, i, g, y);
        out[((a2.to_u64() << 1) | b2 as u64) as usize] += ber_weight(av, n + 1, &p) * pass;
    }
    let total: BigRational = out.iter().sum();
    out.into_iter().map(|w| w / &total).collect()
}

/// Exact sparse-equation distribution over `{0,1}^n x {0,1}`: planted under
/// `seed` or, with `None`, with a uniform right-hand side.
pub fn sparse_equation_distribution(n: usize, k: usize, seed: Option<&BitString>) -> Vec<BigRational> {
    let p = BigRational::new(BigInt::from(k), BigInt::from(n));
    let half = BigRational::new(BigInt::one(), BigInt::from(2));
    let mut out = vec![BigRational::zero(); 1 << (n + 1)];
    for av in 0..1u64 << n {
        let w = ber_weight(av, n, &p);
        match seed {
            Some(s) => {
                let b = BitString::from_u64(av, n).dot(s);
                out[((av << 1) | b as u64) as usize] = w;
            }
            None => {
                out[(av << 1) as usize] = &w * &half;
                out[((av << 1) | 1) as usize] = w * &half;
            }
        }
    }
    out
}

/// Total variation distance between two distributions on the same support.
pub fn total_variation(p: &[BigRational], q: &[BigRational]) -> BigRational {
    let s: BigRational = p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum();
    s / BigRational::from_integer(2.into())
}

/// Repetitions for per-coordinate majority error at most `1/n^2` (and so
/// overall failure at most `1/n`) when each vote is correct with probability
/// `1/2 + advantage`: `ceil(8 log2(n) / advantage^2)`, at least 1.
pub fn auto_reps(n: usize, advantage: f64) -> Result<u64, ReductionError> {
    if !(advantage > 0.0 && advantage <= 0.5) {
        return Err(ReductionError::InvalidParameter(format!(
            "vote advantage {advantage} must lie in (0, 1/2]; the pilot found no signal"
        )));
    }
    Ok(((8.0 * (n.max(2) as f64).log2()) / (advantage * advantage))
        .ceil()
        .max(1.0) as u64)
}

//! Exact oracles for Hamming-shell character sums, seed distributions and
//! their Fourier biases, plus Monte Carlo estimation of distinguishing
//! success.
//!
//! The shell `T_l` is the set of weight-`l` vectors in `{0,1}^n`. For a
//! weight-`w` vector `alpha`, the shell bias `E_{x in T_l} (-1)^{<alpha,x>}`
//! equals `K_l(w; n) / C(n, l)`, where `K_l` is the Krawtchouk polynomial.

mod estimate;
mod seed;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

pub use estimate::{
    estimate_success, hybrid_deltas, newcombe_difference, wilson, AdvantageEstimate, DeltaEstimate, HybridReport,
    SuccessEstimate, Z99,
};
pub use seed::{
    claim_check, lemma_chain_check, predicate_source_bias, predicate_source_bias_fourier, shell_bias_chain,
    squared_shell_bias, squared_shell_bias_brute, squared_shell_bias_wht, ChainPoint, ClaimCheck, ClaimVerdict,
    LemmaChain, PredicateBias, SeedDistribution, MAX_SEED_BITS,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpectralError {
    #[error("parameter out of range: {0}")]
    OutOfRange(String),
    #[error("computation needs {needed} steps, budget is {budget}")]
    BudgetExceeded { needed: u64, budget: u64 },
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),
    #[error("{0}")]
    Distinguisher(#[from] crate::distinguisher::DistinguisherError),
    #[error("{0}")]
    Source(#[from] crate::source::SourceError),
}

/// `C(n, k)` exactly; zero when `k > n`.
pub fn binomial(n: u64, k: u64) -> BigInt {
    if k > n {
        return BigInt::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigInt::one();
    for i in 0..k {
        acc = acc * (n - i) / (i + 1);
    }
    acc
}

/// `K_l(w; n) = sum_j (-1)^j C(w, j) C(n - w, l - j)`.
pub fn krawtchouk(n: u64, l: u64, w: u64) -> Result<BigInt, SpectralError> {
    if l > n || w > n {
        return Err(SpectralError::OutOfRange(format!(
            "need l, w <= n, got n={n}, l={l}, w={w}"
        )));
    }
    let mut acc = BigInt::zero();
    for j in 0..=l.min(w) {
        let term = binomial(w, j) * binomial(n - w, l - j);
        if j % 2 == 0 {
            acc += term;
        } else {
            acc -= term;
        }
    }
    Ok(acc)
}

/// Shell bias of a weight-`w` vector as a float.
pub fn shell_bias(n: u64, l: u64, w: u64) -> Result<f64, SpectralError> {
    let r = BigRational::new(krawtchouk(n, l, w)?, binomial(n, l));
    Ok(r.to_f64().unwrap_or(f64::NAN))
}

fn exact_delta(delta: f64) -> Result<BigRational, SpectralError> {
    BigRational::from_float(delta)
        .filter(|d| d.is_positive())
        .ok_or_else(|| SpectralError::OutOfRange(format!("delta must be a positive number, got {delta}")))
}

/// Weights `w` whose shell bias exceeds `delta` in absolute value.
pub fn bias_weights(n: u64, l: u64, delta: f64) -> Result<Vec<u64>, SpectralError> {
    let d = exact_delta(delta)?;
    let c = binomial(n, l);
    let threshold = BigRational::from_integer(c) * d;
    (0..=n)
        .map(|w| krawtchouk(n, l, w).map(|k| (w, k)))
        .filter_map(|r| match r {
            Ok((w, k)) => (BigRational::from_integer(k.abs()) > threshold).then_some(Ok(w)),
            Err(e) => Some(Err(e)),
        })
        .collect()
}

/// `|B_{T_l}(delta)|`: the number of `alpha ∈ {0,1}^n` with
/// `|E_{x in T_l} (-1)^{<alpha,x>}| > delta`, computed exactly.
pub fn bias_set_size(n: u64, l: u64, delta: f64) -> Result<BigInt, SpectralError> {
    Ok(bias_weights(n, l, delta)?.into_iter().map(|w| binomial(n, w)).sum())
}

/// Smallest `delta` at which the set-size bound applies: `(8l/n)^{l/2}`.
pub fn lemma_delta_min(n: u64, l: u64) -> f64 {
    (8.0 * l as f64 / n as f64).powf(l as f64 / 2.0)
}

/// `log2` of the set-size bound `2 e^{-delta^{2/l} n / 8} 2^n`.
pub fn lemma_bound_log2(n: u64, l: u64, delta: f64) -> f64 {
    1.0 + n as f64 - delta.powf(2.0 / l as f64) * n as f64 / 8.0 / std::f64::consts::LN_2
}

/// One point of the set-size bound check.
#[derive(Debug, Clone, PartialEq)]
pub struct LemmaPoint {
    pub n: u64,
    pub l: u64,
    pub delta: f64,
    pub set_size: BigInt,
    pub bound_log2: f64,
    /// `log2(|B|) - log2(bound)`; `-inf` for an empty set.
    pub margin_log2: f64,
    pub pass: bool,
}

/// `points` values of `delta` spaced geometrically from
/// [`lemma_delta_min`] to 1, or nothing if the minimum exceeds 1.
pub fn delta_grid(n: u64, l: u64, points: usize) -> Vec<f64> {
    let lo = lemma_delta_min(n, l);
    if lo > 1.0 || points == 0 {
        return Vec::new();
    }
    if points == 1 {
        return vec![lo];
    }
    (0..points)
        .map(|i| {
            let t = i as f64 / (points - 1) as f64;
            if i + 1 == points {
                1.0
            } else {
                lo * (1.0 / lo).powf(t)
            }
        })
        .collect()
}

fn log2_big(x: &BigInt) -> f64 {
    if x.is_zero() {
        return f64::NEG_INFINITY;
    }
    let bits = x.bits();
    let shift = bits.saturating_sub(60);
    let top: BigInt = x >> shift;
    top.to_f64().unwrap_or(f64::NAN).log2() + shift as f64
}

/// Checks `|B_{T_l}(delta)| <= 2 e^{-delta^{2/l} n/8} 2^n` at one point.
/// The left side is exact; the comparison is made in `log2` with `1e-12`
/// slack for the transcendental right side.
pub fn lemma_check(n: u64, l: u64, delta: f64) -> Result<LemmaPoint, SpectralError> {
    if l == 0 || l > n || !(delta > 0.0 && delta <= 1.0) {
        return Err(SpectralError::OutOfRange(format!(
            "need 1 <= l <= n and delta in (0, 1], got n={n}, l={l}, delta={delta}"
        )));
    }
    let set_size = bias_set_size(n, l, delta)?;
    let bound_log2 = lemma_bound_log2(n, l, delta);
    let margin_log2 = log2_big(&set_size) - bound_log2;
    Ok(LemmaPoint {
        n,
        l,
        delta,
        pass: margin_log2 <= 1e-12,
        set_size,
        bound_log2,
        margin_log2,
    })
}

/// The analysis parameter `d_t = (n/t)^t`.
pub fn d_t(n: usize, t: usize) -> f64 {
    (n as f64 / t as f64).powi(t as i32)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn krawtchouk_basics() {
        for n in 1..=30u64 {
            for l in 0..=n {
                assert_eq!(krawtchouk(n, l, 0).unwrap(), binomial(n, l));
            }
            for w in 0..=n {
                assert_eq!(krawtchouk(n, 1, w).unwrap(), BigInt::from(n as i64 - 2 * w as i64));
            }
        }
        assert!(krawtchouk(4, 5, 0).is_err());
    }

    #[test]
    fn binomial_values() {
        assert_eq!(binomial(12, 3), BigInt::from(220));
        assert_eq!(binomial(3, 5), BigInt::zero());
        assert_eq!(binomial(64, 32).to_string(), "1832624140942590534");
    }

    #[test]
    fn bias_set_extremes() {
        assert_eq!(bias_set_size(10, 3, 1.0).unwrap(), BigInt::zero());
        assert_eq!(bias_set_size(10, 1, 0.999).unwrap(), BigInt::from(2));
        assert!(bias_set_size(10, 1, 0.0).is_err());
    }

    #[test]
    fn grid_shape() {
        let g = delta_grid(64, 4, 20);
        assert_eq!(g.len(), 20);
        assert!((g[0] - 0.25).abs() < 1e-15);
        assert_eq!(g[19], 1.0);
        assert!(g.windows(2).all(|w| w[0] < w[1]));
        assert!(delta_grid(16, 4, 20).is_empty());
    }

    #[test]
    fn lemma_point_sample() {
        let p = lemma_check(64, 2, 0.5).unwrap();
        assert!(p.pass, "{p:?}");
    }
}

use rand::seq::index::sample as sample_indices;
use rand::Rng;

use super::{bias_set_size, binomial, krawtchouk, lemma_bound_log2, lemma_delta_min, SpectralError};
use crate::gf2::OrderedTuple;
use crate::predicate::{fwht_f64, Predicate};
use crate::robp::compensated_sum;
use num_traits::ToPrimitive;

/// Largest seed length for dense distributions.
pub const MAX_SEED_BITS: usize = 22;

const BRUTE_BUDGET: u64 = 4_000_000_000;

/// A probability distribution over `{0,1}^n`, stored densely and indexed by
/// the big-endian value of the seed.
#[derive(Debug, Clone, PartialEq)]
pub struct SeedDistribution {
    n: usize,
    weights: Vec<f64>,
}

impl SeedDistribution {
    /// Validates nonnegativity and total mass `1 ± 2^{-30}`.
    pub fn from_weights(n: usize, weights: Vec<f64>) -> Result<Self, SpectralError> {
        if n == 0 || n > MAX_SEED_BITS {
            return Err(SpectralError::OutOfRange(format!(
                "seed length {n} outside 1..={MAX_SEED_BITS}"
            )));
        }
        if weights.len() != 1 << n {
            return Err(SpectralError::InvalidDistribution(format!(
                "expected {} weights, got {}",
                1u64 << n,
                weights.len()
            )));
        }
        if let Some(w) = weights.iter().find(|w| !w.is_finite() || **w < 0.0) {
            return Err(SpectralError::InvalidDistribution(format!(
                "weight {w} is not a probability"
            )));
        }
        let total = compensated_sum(weights.iter().copied());
        if (total - 1.0).abs() > 2f64.powi(-30) {
            return Err(SpectralError::InvalidDistribution(format!("weights sum to {total}")));
        }
        Ok(Self { n, weights })
    }

    /// Rescales nonnegative weights to total mass 1.
    pub fn normalized(n: usize, mut weights: Vec<f64>) -> Result<Self, SpectralError> {
        let total = compensated_sum(weights.iter().copied());
        if total.is_nan() || total <= 0.0 {
            return Err(SpectralError::InvalidDistribution("no positive weight".into()));
        }
        for w in &mut weights {
            *w /= total;
        }
        Self::from_weights(n, weights)
    }

    pub fn point_mass(n: usize, x: u64) -> Result<Self, SpectralError> {
        if n == 0 || n > MAX_SEED_BITS || x >= 1 << n {
            return Err(SpectralError::OutOfRange(format!("seed {x} not in {{0,1}}^{n}")));
        }
        let mut w = vec![0.0; 1 << n];
        w[x as usize] = 1.0;
        Self::from_weights(n, w)
    }

    pub fn uniform(n: usize) -> Result<Self, SpectralError> {
        Self::uniform_on(n, &(0..1u64 << n.min(MAX_SEED_BITS + 1)).collect::<Vec<_>>())
    }

    /// Uniform on the given distinct seeds.
    pub fn uniform_on(n: usize, support: &[u64]) -> Result<Self, SpectralError> {
        if n == 0 || n > MAX_SEED_BITS {
            return Err(SpectralError::OutOfRange(format!(
                "seed length {n} outside 1..={MAX_SEED_BITS}"
            )));
        }
        let mut w = vec![0.0; 1 << n];
        for &x in support {
            let slot = w
                .get_mut(x as usize)
                .ok_or_else(|| SpectralError::OutOfRange(format!("seed {x} not in {{0,1}}^{n}")))?;
            *slot = 1.0;
        }
        Self::normalized(n, w)
    }

    /// Uniform on a random subset of the given size.
    pub fn random_subset<R: Rng + ?Sized>(n: usize, size: usize, rng: &mut R) -> Result<Self, SpectralError> {
        if n == 0 || n > MAX_SEED_BITS || size == 0 || size > 1 << n {
            return Err(SpectralError::OutOfRange(format!("cannot pick {size} of 2^{n} seeds")));
        }
        let support: Vec<u64> = sample_indices(rng, 1 << n, size)
            .into_iter()
            .map(|i| i as u64)
            .collect();
        Self::uniform_on(n, &support)
    }

    /// A random distribution whose largest weight is at most `max_weight`:
    /// weights uniform in `[1, 2]` on a random support of size
    /// `ceil(2 / max_weight)`.
    pub fn random_bounded<R: Rng + ?Sized>(n: usize, max_weight: f64, rng: &mut R) -> Result<Self, SpectralError> {
        if n == 0 || n > MAX_SEED_BITS {
            return Err(SpectralError::OutOfRange(format!(
                "seed length {n} outside 1..={MAX_SEED_BITS}"
            )));
        }
        let size = (2.0 / max_weight).ceil();
        if max_weight.is_nan() || max_weight <= 0.0 || size > (1u64 << n) as f64 {
            return Err(SpectralError::OutOfRange(format!(
                "max weight {max_weight} needs a support larger than 2^{n}"
            )));
        }
        let size = size as usize;
        let mut w = vec![0.0; 1 << n];
        for i in sample_indices(rng, 1 << n, size) {
            w[i] = rng.gen_range(1.0..=2.0);
        }
        Self::normalized(n, w)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn weight(&self, x: u64) -> f64 {
        self.weights[x as usize]
    }

    pub fn support(&self) -> impl Iterator<Item = (u64, f64)> + '_ {
        self.weights
            .iter()
            .enumerate()
            .filter(|(_, &w)| w > 0.0)
            .map(|(x, &w)| (x as u64, w))
    }

    pub fn support_size(&self) -> usize {
        self.weights.iter().filter(|&&w| w > 0.0).count()
    }

    pub fn max_weight(&self) -> f64 {
        self.weights.iter().copied().fold(0.0, f64::max)
    }

    /// `-log2` of the largest weight.
    pub fn min_entropy(&self) -> f64 {
        -self.max_weight().log2()
    }

    /// `sum_x w(x) (-1)^{<alpha,x>}` for every `alpha`.
    pub fn fourier_biases(&self) -> Vec<f64> {
        let mut v = self.weights.clone();
        fwht_f64(&mut v);
        v
    }
}

fn check_shell(dist: &SeedDistribution, l: usize) -> Result<(), SpectralError> {
    if l > dist.n {
        return Err(SpectralError::OutOfRange(format!(
            "shell weight {l} exceeds n = {}",
            dist.n
        )));
    }
    Ok(())
}

/// `E_{alpha in T_l} (sum_x w(x) (-1)^{<alpha,x>})^2` through the
/// autocorrelation `R(z) = sum_x w(x) w(x+z)`: the expectation equals
/// `sum_z R(z) K_l(|z|; n) / C(n, l)`.
pub fn squared_shell_bias(dist: &SeedDistribution, l: usize) -> Result<f64, SpectralError> {
    check_shell(dist, l)?;
    let n = dist.n;
    // R = H(ŵ^2) / 2^n
    let mut r = dist.fourier_biases();
    for v in &mut r {
        *v *= *v;
    }
    fwht_f64(&mut r);
    let scale = (1u64 << n) as f64;
    let c = binomial(n as u64, l as u64);
    let kw: Vec<f64> = (0..=n as u64)
        .map(|w| {
            let k = krawtchouk(n as u64, l as u64, w).expect("w <= n");
            num_rational::BigRational::new(k, c.clone())
                .to_f64()
                .unwrap_or(f64::NAN)
        })
        .collect();
    Ok(compensated_sum(
        r.iter()
            .enumerate()
            .map(|(z, rz)| rz / scale * kw[(z as u64).count_ones() as usize]),
    ))
}

/// Same expectation by averaging the Fourier bias over the weight-`l`
/// vectors.
pub fn squared_shell_bias_wht(dist: &SeedDistribution, l: usize) -> Result<f64, SpectralError> {
    check_shell(dist, l)?;
    let b = dist.fourier_biases();
    let sel: Vec<f64> = b
        .iter()
        .enumerate()
        .filter(|(a, _)| a.count_ones() as usize == l)
        .map(|(_, v)| v * v)
        .collect();
    Ok(compensated_sum(sel.iter().copied()) / sel.len() as f64)
}

/// Same expectation by direct enumeration of the shell and the support.
pub fn squared_shell_bias_brute(dist: &SeedDistribution, l: usize) -> Result<f64, SpectralError> {
    check_shell(dist, l)?;
    let shell: Vec<u64> = (0..1u64 << dist.n).filter(|a| a.count_ones() as usize == l).collect();
    let support: Vec<(u64, f64)> = dist.support().collect();
    let needed = shell.len() as u64 * support.len() as u64;
    if needed > BRUTE_BUDGET {
        return Err(SpectralError::BudgetExceeded {
            needed,
            budget: BRUTE_BUDGET,
        });
    }
    let squares = shell.iter().map(|&a| {
        let bias = compensated_sum(
            support
                .iter()
                .map(|&(x, w)| if (a & x).count_ones() % 2 == 0 { w } else { -w }),
        );
        bias * bias
    });
    Ok(compensated_sum(squares) / shell.len() as f64)
}

/// Biases `sum_x w(x) (-1)^{P(x^a)}` for every ordered tuple `a`.
#[derive(Debug, Clone, PartialEq)]
pub struct PredicateBias {
    /// Indexed by lexicographic tuple rank.
    pub per_tuple: Vec<f64>,
    pub mean_square: f64,
}

impl PredicateBias {
    /// Fraction of tuples whose bias exceeds `threshold` in absolute value.
    pub fn fraction_above(&self, threshold: f64) -> f64 {
        self.per_tuple.iter().filter(|b| b.abs() > threshold).count() as f64 / self.per_tuple.len() as f64
    }
}

fn all_tuples(n: usize, k: usize) -> Result<Vec<OrderedTuple>, SpectralError> {
    let count = OrderedTuple::count(n, k);
    if count == 0 || count > 10_000_000 {
        return Err(SpectralError::OutOfRange(format!(
            "{count} ordered {k}-tuples of [{n}] is out of range"
        )));
    }
    Ok((0..count)
        .map(|r| OrderedTuple::unrank(r, n, k).expect("rank in range"))
        .collect())
}

/// Exhaustive `E_{a ∈ [n]^(k)} (sum_x w(x) (-1)^{P(x^a)})^2` with per-tuple
/// biases, by summing over the support for each tuple.
pub fn predicate_source_bias(dist: &SeedDistribution, p: &Predicate) -> Result<PredicateBias, SpectralError> {
    let n = dist.n;
    let k = p.arity();
    let tuples = all_tuples(n, k)?;
    let support: Vec<(u64, f64)> = dist.support().collect();
    let needed = tuples.len() as u64 * support.len() as u64;
    if needed > BRUTE_BUDGET {
        return Err(SpectralError::BudgetExceeded {
            needed,
            budget: BRUTE_BUDGET,
        });
    }
    use rayon::prelude::*;
    let per_tuple: Vec<f64> = tuples
        .par_iter()
        .map(|a| {
            let shifts: Vec<usize> = a.indices().iter().map(|&i| n - 1 - i).collect();
            compensated_sum(support.iter().map(|&(x, w)| {
                let idx = shifts
                    .iter()
                    .fold(0usize, |acc, &s| (acc << 1) | ((x >> s) & 1) as usize);
                if p.eval_index(idx) {
                    -w
                } else {
                    w
                }
            }))
        })
        .collect();
    let mean_square = compensated_sum(per_tuple.iter().map(|b| b * b)) / per_tuple.len() as f64;
    Ok(PredicateBias { per_tuple, mean_square })
}

/// The same biases from the predicate's spectrum: the bias at `a` is
/// `sum_alpha P̂(alpha) ŵ(v(a, alpha))`, where `v(a, alpha)` places the bits
/// of `alpha` at the positions `a`.
pub fn predicate_source_bias_fourier(dist: &SeedDistribution, p: &Predicate) -> Result<PredicateBias, SpectralError> {
    let n = dist.n;
    let k = p.arity();
    let tuples = all_tuples(n, k)?;
    let w_hat = dist.fourier_biases();
    let spec = p.spectrum();
    let coeffs: Vec<(usize, f64)> = (0..1usize << k)
        .map(|alpha| (alpha, spec.coefficient(alpha)))
        .filter(|(_, c)| *c != 0.0)
        .collect();
    let per_tuple: Vec<f64> = tuples
        .iter()
        .map(|a| {
            compensated_sum(coeffs.iter().map(|&(alpha, c)| {
                // alpha bit j (big-endian over the k inputs) sits at seed position a[j]
                let v = a
                    .indices()
                    .iter()
                    .enumerate()
                    .filter(|(j, _)| alpha >> (k - 1 - j) & 1 == 1)
                    .fold(0usize, |acc, (_, &i)| acc | 1 << (n - 1 - i));
                c * w_hat[v]
            }))
        })
        .collect();
    let mean_square = compensated_sum(per_tuple.iter().map(|b| b * b)) / per_tuple.len() as f64;
    Ok(PredicateBias { per_tuple, mean_square })
}

/// One `delta` of the constant-free bound
/// `E_{T_l} bias^2 <= max_w |B_{T_l}(delta)| + delta`, and the same bound
/// with the set size replaced by its estimate `2 e^{-delta^{2/l} n/8} 2^n`
/// (valid for `delta >= (8l/n)^{l/2}`).
#[derive(Debug, Clone, PartialEq)]
pub struct ChainPoint {
    pub l: usize,
    pub delta: f64,
    pub lhs: f64,
    pub set_size_bound: f64,
    pub lemma_form: Option<f64>,
    pub pass: bool,
}

pub fn shell_bias_chain(dist: &SeedDistribution, l: usize, delta: f64) -> Result<ChainPoint, SpectralError> {
    let lhs = squared_shell_bias(dist, l)?;
    let n = dist.n as u64;
    let size = bias_set_size(n, l as u64, delta)?.to_f64().unwrap_or(f64::INFINITY);
    let mw = dist.max_weight();
    let set_size_bound = mw * size + delta;
    let lemma_form =
        (delta >= lemma_delta_min(n, l as u64)).then(|| mw * lemma_bound_log2(n, l as u64, delta).exp2() + delta);
    let slack = 2f64.powi(-30);
    let pass = lhs <= set_size_bound + slack && lemma_form.map_or(true, |b| lhs <= b + slack);
    Ok(ChainPoint {
        l,
        delta,
        lhs,
        set_size_bound,
        lemma_form,
        pass,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub enum ClaimVerdict {
    Pass,
    Fail,
    /// The preconditions cannot hold at this size; nothing is asserted.
    Skipped(String),
}

/// The final shell-bias bound `2 (n/l)^{-((1-eps)/3) l}` for a
/// distribution with largest weight at most `2^{n^eps - n} (n/l)^l`.
#[derive(Debug, Clone, PartialEq)]
pub struct ClaimCheck {
    pub n: usize,
    pub l: usize,
    pub eps: f64,
    pub lhs: f64,
    pub bound: f64,
    pub verdict: ClaimVerdict,
}

/// Evaluates the final bound when its preconditions hold:
/// `0 < eps < 1 - 3 log 24 / log n`, `(n/l)^{1/3} > 36 log(n/l)` (which
/// stands in for `l < n/c`), and the min-entropy condition on `dist`.
/// Otherwise reports which precondition fails.
pub fn claim_check(dist: &SeedDistribution, l: usize, eps: f64) -> Result<ClaimCheck, SpectralError> {
    let n = dist.n;
    if l == 0 || l > n {
        return Err(SpectralError::OutOfRange(format!("need 1 <= l <= n, got l={l}, n={n}")));
    }
    let lhs = squared_shell_bias(dist, l)?;
    let nf = n as f64;
    let ratio = nf / l as f64;
    let bound = 2.0 * ratio.powf(-((1.0 - eps) / 3.0) * l as f64);
    let eps_max = 1.0 - 3.0 * 24f64.log2() / nf.log2();
    let verdict = if !(eps > 0.0 && eps < eps_max) {
        ClaimVerdict::Skipped(format!(
            "no admissible eps at n={n}: need 0 < eps < 1 - 3 log 24 / log n = {eps_max:.4}"
        ))
    } else if ratio.cbrt() <= 36.0 * ratio.log2() {
        ClaimVerdict::Skipped(format!(
            "(n/l)^(1/3) = {:.3} does not exceed 36 log(n/l) = {:.3}",
            ratio.cbrt(),
            36.0 * ratio.log2()
        ))
    } else if dist.max_weight().log2() > nf.powf(eps) - nf + l as f64 * ratio.log2() {
        ClaimVerdict::Skipped("distribution violates the min-entropy precondition".into())
    } else if lhs <= bound {
        ClaimVerdict::Pass
    } else {
        ClaimVerdict::Fail
    };
    Ok(ClaimCheck {
        n,
        l,
        eps,
        lhs,
        bound,
        verdict,
    })
}

/// The Fourier step behind the predicate bound:
/// `E_a bias_P(a)^2 <= sum_{j >= t} C(k, j) E_{T_j} bias^2`, where `t` is the
/// resilience of `P`.
#[derive(Debug, Clone, PartialEq)]
pub struct LemmaChain {
    pub resilience: usize,
    pub lhs: f64,
    pub rhs: f64,
    pub pass: bool,
}

pub fn lemma_chain_check(dist: &SeedDistribution, p: &Predicate) -> Result<LemmaChain, SpectralError> {
    let k = p.arity();
    let t = p.resilience();
    let lhs = predicate_source_bias(dist, p)?.mean_square;
    let mut terms = Vec::new();
    for j in t.max(1)..=k {
        let c = binomial(k as u64, j as u64).to_f64().unwrap_or(f64::NAN);
        terms.push(c * squared_shell_bias(dist, j)?);
    }
    if t == 0 {
        // level 0 contributes the constant term, whose squared bias is 1
        terms.push(1.0);
    }
    let rhs = compensated_sum(terms);
    Ok(LemmaChain {
        resilience: t,
        lhs,
        rhs,
        pass: lhs <= rhs + 2f64.powi(-30),
    })
}

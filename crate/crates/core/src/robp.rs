//! Layered read-once branching programs over an integer sample alphabet.
//!
//! A program of length `m` has layers `0..=m`. Every vertex of layers
//! `0..m` is an inner vertex with one edge per alphabet symbol into the next
//! layer; every vertex of layer `m` is a leaf carrying a label. The start
//! vertex is vertex 0 of layer 0. Samples are keyed by their canonical code
//! (see [`Sample::encode`](crate::source::Sample::encode)).
//!
//! Exact success probabilities are computed by pushing probability mass
//! forward layer by layer, once under the null distribution and once per
//! seed under the planted distributions.

use std::fmt::Write as _;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use rand::Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::gf2::{BitString, OrderedTuple};
use crate::predicate::Predicate;

/// Elementary updates `exact_success` is willing to perform.
pub const DEFAULT_BUDGET: u64 = 1_000_000_000;

/// Largest `|X| * |A|` accepted by the exact-rational and learning paths.
pub const EXACT_LIMIT: u64 = 1 << 16;

/// Largest `|X| * |A|` a dense problem table may hold.
const TABLE_LIMIT: u64 = 1 << 26;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RobpError {
    #[error("malformed program: {0}")]
    Malformed(String),
    #[error("sample {symbol} outside alphabet of size {alphabet}")]
    SymbolOutOfRange { symbol: u64, alphabet: usize },
    #[error("stream of length {got} is shorter than the program length {needed}")]
    StreamTooShort { needed: usize, got: usize },
    #[error("computation needs {needed} updates, budget is {budget}")]
    BudgetExceeded { needed: u64, budget: u64 },
    #[error("leaf label {0} is not a bit")]
    NonBinaryLabel(u64),
    #[error("invalid problem: {0}")]
    InvalidProblem(String),
    #[error("test vector {0} is zero")]
    ZeroVector(usize),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Vertex {
    /// Edge targets in the next layer, indexed by symbol.
    Inner(Vec<u32>),
    Leaf(u64),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Robp {
    alphabet: usize,
    layers: Vec<Vec<Vertex>>,
}

impl Robp {
    pub fn new(alphabet: usize, layers: Vec<Vec<Vertex>>) -> Result<Self, RobpError> {
        let bad = |m: String| Err(RobpError::Malformed(m));
        if alphabet == 0 {
            return bad("empty alphabet".into());
        }
        if layers.is_empty() || layers[0].is_empty() {
            return bad("program needs a start vertex".into());
        }
        let m = layers.len() - 1;
        for (j, layer) in layers.iter().enumerate() {
            if layer.is_empty() {
                return bad(format!("layer {j} is empty"));
            }
            for (i, v) in layer.iter().enumerate() {
                match v {
                    Vertex::Leaf(_) if j < m => {
                        return bad(format!("leaf at vertex {i} of inner layer {j}"));
                    }
                    Vertex::Inner(_) if j == m => {
                        return bad(format!("inner vertex {i} in final layer {j}"));
                    }
                    Vertex::Inner(edges) => {
                        if edges.len() != alphabet {
                            return bad(format!(
                                "vertex {i} of layer {j} has {} edges, alphabet has {alphabet}",
                                edges.len()
                            ));
                        }
                        let next = layers[j + 1].len();
                        if let Some(t) = edges.iter().find(|&&t| t as usize >= next) {
                            return bad(format!("edge from layer {j} vertex {i} to missing vertex {t}"));
                        }
                    }
                    Vertex::Leaf(_) => {}
                }
            }
        }
        Ok(Self { alphabet, layers })
    }

    /// Program of length 0 that outputs `label`.
    pub fn constant(alphabet: usize, label: u64) -> Self {
        Self {
            alphabet,
            layers: vec![vec![Vertex::Leaf(label)]],
        }
    }

    /// A uniformly random program with the given layer widths; leaf labels
    /// are uniform in `0..labels`.
    pub fn random<R: Rng + ?Sized>(
        widths: &[usize],
        alphabet: usize,
        labels: u64,
        rng: &mut R,
    ) -> Result<Self, RobpError> {
        if widths.is_empty() || labels == 0 {
            return Err(RobpError::Malformed("need at least one layer and one label".into()));
        }
        let m = widths.len() - 1;
        let layers = widths
            .iter()
            .enumerate()
            .map(|(j, &w)| {
                (0..w)
                    .map(|_| {
                        if j == m {
                            Vertex::Leaf(rng.gen_range(0..labels))
                        } else {
                            Vertex::Inner((0..alphabet).map(|_| rng.gen_range(0..widths[j + 1] as u32)).collect())
                        }
                    })
                    .collect()
            })
            .collect();
        Self::new(alphabet, layers)
    }

    pub fn alphabet(&self) -> usize {
        self.alphabet
    }

    /// Number of samples read.
    pub fn length(&self) -> usize {
        self.layers.len() - 1
    }

    pub fn width(&self) -> usize {
        self.layers.iter().map(Vec::len).max().unwrap_or(0)
    }

    pub fn widths(&self) -> Vec<usize> {
        self.layers.iter().map(Vec::len).collect()
    }

    pub fn layer(&self, j: usize) -> &[Vertex] {
        &self.layers[j]
    }

    /// Labels of the final layer.
    pub fn leaf_labels(&self) -> Vec<u64> {
        self.layers[self.length()]
            .iter()
            .map(|v| match v {
                Vertex::Leaf(l) => *l,
                Vertex::Inner(_) => unreachable!("validated"),
            })
            .collect()
    }

    /// The same program with every leaf label `l` replaced by `1 - l`.
    pub fn flipped(&self) -> Result<Self, RobpError> {
        let mut out = self.clone();
        let m = out.length();
        for v in &mut out.layers[m] {
            if let Vertex::Leaf(l) = v {
                if *l > 1 {
                    return Err(RobpError::NonBinaryLabel(*l));
                }
                *l = 1 - *l;
            }
        }
        Ok(out)
    }

    /// Follows the computation path; reads exactly `length()` symbols.
    pub fn run(&self, samples: &[u64]) -> Result<u64, RobpError> {
        let m = self.length();
        if samples.len() < m {
            return Err(RobpError::StreamTooShort {
                needed: m,
                got: samples.len(),
            });
        }
        let mut v = 0usize;
        for (j, &s) in samples[..m].iter().enumerate() {
            if s >= self.alphabet as u64 {
                return Err(RobpError::SymbolOutOfRange {
                    symbol: s,
                    alphabet: self.alphabet,
                });
            }
            let Vertex::Inner(edges) = &self.layers[j][v] else {
                unreachable!("validated")
            };
            v = edges[s as usize] as usize;
        }
        match self.layers[m][v] {
            Vertex::Leaf(l) => Ok(l),
            Vertex::Inner(_) => unreachable!("validated"),
        }
    }

    pub fn to_text(&self) -> String {
        let mut s = format!("robp {} {}\nwidths", self.length(), self.alphabet);
        for w in self.widths() {
            let _ = write!(s, " {w}");
        }
        s.push('\n');
        for layer in &self.layers {
            for v in layer {
                match v {
                    Vertex::Leaf(l) => {
                        let _ = writeln!(s, "leaf {l}");
                    }
                    Vertex::Inner(edges) => {
                        let line: Vec<String> = edges.iter().map(u32::to_string).collect();
                        s.push_str(&line.join(" "));
                        s.push('\n');
                    }
                }
            }
        }
        s
    }

    pub fn parse_text(text: &str) -> Result<Self, RobpError> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
        let err = |line: usize, message: String| RobpError::Parse { line, message };
        let num = |line: usize, tok: &str| -> Result<u64, RobpError> {
            tok.parse()
                .map_err(|_| err(line, format!("expected a number, got `{tok}`")))
        };

        let (ln, header) = lines.next().ok_or_else(|| err(0, "empty input".into()))?;
        let h: Vec<&str> = header.split_whitespace().collect();
        if h.len() != 3 || h[0] != "robp" {
            return Err(err(ln, "expected `robp <length> <alphabet>`".into()));
        }
        let m = num(ln, h[1])? as usize;
        let alphabet = num(ln, h[2])? as usize;

        let (ln, wl) = lines.next().ok_or_else(|| err(ln + 1, "missing widths line".into()))?;
        let mut wt = wl.split_whitespace();
        if wt.next() != Some("widths") {
            return Err(err(ln, "expected `widths ...`".into()));
        }
        let widths = wt
            .map(|t| num(ln, t).map(|w| w as usize))
            .collect::<Result<Vec<_>, _>>()?;
        if widths.len() != m + 1 {
            return Err(err(ln, format!("expected {} widths, got {}", m + 1, widths.len())));
        }

        let mut layers = Vec::with_capacity(m + 1);
        let mut last = ln;
        for &w in &widths {
            let mut layer = Vec::with_capacity(w);
            for _ in 0..w {
                let (ln, l) = lines
                    .next()
                    .ok_or_else(|| err(last + 1, "missing vertex line".into()))?;
                last = ln;
                let vertex = if let Some(rest) = l.strip_prefix("leaf") {
                    Vertex::Leaf(num(ln, rest.trim())?)
                } else {
                    let edges = l
                        .split_whitespace()
                        .map(|t| {
                            num(ln, t).and_then(|v| {
                                u32::try_from(v).map_err(|_| err(ln, format!("edge target {v} too large")))
                            })
                        })
                        .collect::<Result<Vec<_>, _>>()?;
                    Vertex::Inner(edges)
                };
                layer.push(vertex);
            }
            layers.push(layer);
        }
        if let Some((ln, _)) = lines.next() {
            return Err(err(ln, "trailing content after the last vertex".into()));
        }
        Self::new(alphabet, layers).map_err(|e| err(0, e.to_string()))
    }
}

/// A distribution over the alphabet with integer weights summing exactly to
/// `den`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dist {
    weights: Vec<u64>,
    den: u64,
}

impl Dist {
    pub fn new(weights: Vec<u64>) -> Result<Self, RobpError> {
        let den = weights
            .iter()
            .try_fold(0u64, |acc, &w| acc.checked_add(w))
            .ok_or_else(|| RobpError::InvalidProblem("weights overflow".into()))?;
        if den == 0 {
            return Err(RobpError::InvalidProblem("all weights are zero".into()));
        }
        Ok(Self { weights, den })
    }

    pub fn uniform(size: usize) -> Self {
        Self {
            weights: vec![1; size],
            den: size as u64,
        }
    }

    pub fn weights(&self) -> &[u64] {
        &self.weights
    }

    pub fn den(&self) -> u64 {
        self.den
    }

    pub fn prob(&self, a: usize) -> f64 {
        self.weights[a] as f64 / self.den as f64
    }

    fn support(&self) -> Vec<(usize, f64)> {
        self.weights
            .iter()
            .enumerate()
            .filter(|(_, &w)| w > 0)
            .map(|(a, &w)| (a, w as f64 / self.den as f64))
            .collect()
    }
}

/// Seeds `X = 0..|X|`, a null distribution and one planted distribution per
/// seed, all over the alphabet `0..|A|`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FiniteDistinguishingProblem {
    alphabet: usize,
    null: Dist,
    planted: Vec<Dist>,
}

impl FiniteDistinguishingProblem {
    pub fn new(null: Dist, planted: Vec<Dist>) -> Result<Self, RobpError> {
        let alphabet = null.weights.len();
        if planted.is_empty() {
            return Err(RobpError::InvalidProblem("no seeds".into()));
        }
        if let Some(x) = planted.iter().position(|d| d.weights.len() != alphabet) {
            return Err(RobpError::InvalidProblem(format!(
                "planted distribution of seed {x} has the wrong alphabet size"
            )));
        }
        Ok(Self {
            alphabet,
            null,
            planted,
        })
    }

    fn check_table(seeds: u64, alphabet: u64) -> Result<(), RobpError> {
        match seeds.checked_mul(alphabet) {
            Some(c) if c <= TABLE_LIMIT => Ok(()),
            _ => Err(RobpError::BudgetExceeded {
                needed: seeds.saturating_mul(alphabet),
                budget: TABLE_LIMIT,
            }),
        }
    }

    /// Local-PRG problem: seeds are `x ∈ {0,1}^n` by big-endian value;
    /// symbols are `2 * rank(a) + b`.
    pub fn local_prg(n: usize, predicate: &Predicate) -> Result<Self, RobpError> {
        let k = predicate.arity();
        if k == 0 || k > n || n > 24 {
            return Err(RobpError::InvalidProblem(format!(
                "need 1 <= k <= n <= 24, got k={k}, n={n}"
            )));
        }
        let tuples = OrderedTuple::count(n, k);
        let alphabet = u64::try_from(2 * tuples).map_err(|_| RobpError::InvalidProblem("alphabet too large".into()))?;
        Self::check_table(1 << n, alphabet)?;
        let all: Vec<OrderedTuple> = (0..tuples)
            .map(|r| OrderedTuple::unrank(r, n, k).expect("rank in range"))
            .collect();
        let planted = (0..1u64 << n)
            .into_par_iter()
            .map(|xv| {
                let mut w = vec![0u64; alphabet as usize];
                for (r, a) in all.iter().enumerate() {
                    let idx = a
                        .indices()
                        .iter()
                        .fold(0usize, |acc, &i| (acc << 1) | ((xv >> (n - 1 - i)) & 1) as usize);
                    w[2 * r + predicate.eval_index(idx) as usize] = 2;
                }
                Dist {
                    weights: w,
                    den: alphabet,
                }
            })
            .collect();
        Self::new(Dist::uniform(alphabet as usize), planted)
    }

    /// Subspace problem: seeds are the `k`-dimensional subspaces of
    /// `{0,1}^n` in the order of [`enumerate_subspaces`]; symbols are vector
    /// values.
    pub fn subspace(n: usize, k: usize) -> Result<Self, RobpError> {
        if k > n || n > 20 {
            return Err(RobpError::InvalidProblem(format!(
                "need k <= n <= 20, got k={k}, n={n}"
            )));
        }
        let alphabet = 1usize << n;
        let count = gaussian_binomial(n, k).ok_or_else(|| RobpError::InvalidProblem("too many subspaces".into()))?;
        Self::check_table(count, alphabet as u64)?;
        let planted = enumerate_subspaces(n, k)
            .into_iter()
            .map(|basis| {
                let mut w = vec![0u64; alphabet];
                for c in 0..1u64 << k {
                    let v = basis
                        .iter()
                        .enumerate()
                        .filter(|(i, _)| c >> i & 1 == 1)
                        .fold(0u64, |acc, (_, b)| acc ^ b.to_u64());
                    w[v as usize] = 1;
                }
                Dist {
                    weights: w,
                    den: 1 << k,
                }
            })
            .collect();
        Self::new(Dist::uniform(alphabet), planted)
    }

    /// Sparse-parity problem: seeds `x ∈ {0,1}^n`, symbols `2 * value(a) + b`
    /// with `a ~ Ber(k/n)^n`.
    pub fn sparse_parity(n: usize, k: usize) -> Result<Self, RobpError> {
        if k == 0 || k >= n || n > 12 {
            return Err(RobpError::InvalidProblem(format!(
                "need 1 <= k < n <= 12, got k={k}, n={n}"
            )));
        }
        let alphabet = 1usize << (n + 1);
        Self::check_table(1 << n, alphabet as u64)?;
        let nn = (n as u64).pow(n as u32);
        let aw = |a: u64| {
            let w = a.count_ones();
            (k as u64).pow(w) * ((n - k) as u64).pow(n as u32 - w)
        };
        let null = Dist {
            weights: (0..alphabet as u64).map(|c| aw(c >> 1)).collect(),
            den: 2 * nn,
        };
        let planted = (0..1u64 << n)
            .map(|x| {
                let mut w = vec![0u64; alphabet];
                for a in 0..1u64 << n {
                    let b = (a & x).count_ones() as u64 & 1;
                    w[(2 * a + b) as usize] = aw(a);
                }
                Dist { weights: w, den: nn }
            })
            .collect();
        Self::new(null, planted)
    }

    pub fn alphabet(&self) -> usize {
        self.alphabet
    }

    pub fn seeds(&self) -> usize {
        self.planted.len()
    }

    pub fn null(&self) -> &Dist {
        &self.null
    }

    pub fn planted(&self, x: usize) -> &Dist {
        &self.planted[x]
    }
}

/// Number of `k`-dimensional subspaces of `GF(2)^n`, if it fits in `u64`.
pub fn gaussian_binomial(n: usize, k: usize) -> Option<u64> {
    if k > n {
        return Some(0);
    }
    let mut num: u128 = 1;
    let mut den: u128 = 1;
    for i in 0..k {
        num = num.checked_mul((1u128 << (n - i)) - 1)?;
        den = den.checked_mul((1u128 << (i + 1)) - 1)?;
    }
    u64::try_from(num / den).ok()
}

/// All `k`-dimensional subspaces of `GF(2)^n`, each given by its reduced
/// row echelon basis. Ordered by pivot set (lexicographic), then by the
/// free entries read as a binary counter.
pub fn enumerate_subspaces(n: usize, k: usize) -> Vec<Vec<BitString>> {
    let mut out = Vec::new();
    let mut pivots: Vec<usize> = (0..k).collect();
    loop {
        // free cells: (row, col) with col > pivot[row] and col not a pivot
        let free: Vec<(usize, usize)> = (0..k)
            .flat_map(|r| {
                let pivots = &pivots;
                (pivots[r] + 1..n)
                    .filter(move |c| !pivots.contains(c))
                    .map(move |c| (r, c))
            })
            .collect();
        for fill in 0..1u64 << free.len() {
            let mut rows: Vec<BitString> = pivots.iter().map(|&p| BitString::unit(n, p)).collect();
            for (bit, &(r, c)) in free.iter().enumerate() {
                if fill >> bit & 1 == 1 {
                    rows[r].set(c, true);
                }
            }
            out.push(rows);
        }
        // next combination
        let Some(i) = (0..k).rev().find(|&i| pivots[i] < n - k + i) else {
            break;
        };
        pivots[i] += 1;
        for j in i + 1..k {
            pivots[j] = pivots[j - 1] + 1;
        }
    }
    out
}

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(self) -> f64 {
        self.sum + self.comp
    }
}

pub fn compensated_sum(xs: impl IntoIterator<Item = f64>) -> f64 {
    let mut s = CompensatedSum::default();
    for x in xs {
        s.add(x);
    }
    s.value()
}

/// Mass reaching each vertex of layer `j` under i.i.d. samples from `dist`.
fn push_forward(p: &Robp, support: &[(usize, f64)], upto: usize) -> Vec<f64> {
    let mut cur = vec![0.0; p.layers[0].len()];
    cur[0] = 1.0;
    for j in 0..upto {
        let mut next = vec![CompensatedSum::default(); p.layers[j + 1].len()];
        for (v, &mass) in cur.iter().enumerate() {
            if mass == 0.0 {
                continue;
            }
            let Vertex::Inner(edges) = &p.layers[j][v] else {
                unreachable!("validated")
            };
            for &(a, pa) in support {
                next[edges[a] as usize].add(mass * pa);
            }
        }
        cur = next.into_iter().map(CompensatedSum::value).collect();
    }
    cur
}

fn check_alphabet(p: &Robp, prob: &FiniteDistinguishingProblem) -> Result<(), RobpError> {
    if p.alphabet != prob.alphabet {
        return Err(RobpError::InvalidProblem(format!(
            "program alphabet {} differs from problem alphabet {}",
            p.alphabet, prob.alphabet
        )));
    }
    Ok(())
}

fn check_budget(p: &Robp, seeds: usize, budget: u64) -> Result<(), RobpError> {
    let needed = (seeds as u64 + 1)
        .saturating_mul(p.width() as u64)
        .saturating_mul(p.alphabet as u64)
        .saturating_mul(p.length().max(1) as u64);
    if needed > budget {
        return Err(RobpError::BudgetExceeded { needed, budget });
    }
    Ok(())
}

fn binary_labels(p: &Robp) -> Result<Vec<u64>, RobpError> {
    let labels = p.leaf_labels();
    if let Some(&l) = labels.iter().find(|&&l| l > 1) {
        return Err(RobpError::NonBinaryLabel(l));
    }
    Ok(labels)
}

/// Exact success probability of a distinguishing program, split by branch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Success {
    /// `Pr[output = b]` with `b` and `x` uniform.
    pub success: f64,
    /// `Pr[output = 1 | b = 0]`.
    pub null_accept: f64,
    /// `Pr[output = 1 | b = 1]`.
    pub planted_accept: f64,
}

pub fn exact_success(p: &Robp, prob: &FiniteDistinguishingProblem) -> Result<Success, RobpError> {
    exact_success_with_budget(p, prob, DEFAULT_BUDGET)
}

pub fn exact_success_with_budget(
    p: &Robp,
    prob: &FiniteDistinguishingProblem,
    budget: u64,
) -> Result<Success, RobpError> {
    check_alphabet(p, prob)?;
    check_budget(p, prob.seeds(), budget)?;
    let labels = binary_labels(p)?;
    let m = p.length();
    let accept =
        |leaves: Vec<f64>| compensated_sum(leaves.into_iter().zip(&labels).filter(|(_, &l)| l == 1).map(|(x, _)| x));
    let null_accept = accept(push_forward(p, &prob.null.support(), m));
    let per_seed: Vec<f64> = prob
        .planted
        .par_iter()
        .map(|d| accept(push_forward(p, &d.support(), m)))
        .collect();
    let planted_accept = compensated_sum(per_seed) / prob.seeds() as f64;
    Ok(Success {
        success: 0.5 * (1.0 - null_accept) + 0.5 * planted_accept,
        null_accept,
        planted_accept,
    })
}

/// Integer mass per final-layer vertex, scaled by `den^m`.
fn push_forward_exact(p: &Robp, d: &Dist) -> Vec<BigInt> {
    let support: Vec<(usize, BigInt)> = d
        .weights
        .iter()
        .enumerate()
        .filter(|(_, &w)| w > 0)
        .map(|(a, &w)| (a, BigInt::from(w)))
        .collect();
    let mut cur = vec![BigInt::zero(); p.layers[0].len()];
    cur[0] = BigInt::one();
    for j in 0..p.length() {
        let mut next = vec![BigInt::zero(); p.layers[j + 1].len()];
        for (v, mass) in cur.iter().enumerate() {
            if mass.is_zero() {
                continue;
            }
            let Vertex::Inner(edges) = &p.layers[j][v] else {
                unreachable!("validated")
            };
            for (a, w) in &support {
                next[edges[*a] as usize] += mass * w;
            }
        }
        cur = next;
    }
    cur
}

/// [`exact_success`] in exact rational arithmetic; only for
/// `|X| * |A| <= 2^16`.
pub fn exact_success_rational(p: &Robp, prob: &FiniteDistinguishingProblem) -> Result<BigRational, RobpError> {
    check_alphabet(p, prob)?;
    let size = prob.seeds() as u64 * prob.alphabet as u64;
    if size > EXACT_LIMIT {
        return Err(RobpError::BudgetExceeded {
            needed: size,
            budget: EXACT_LIMIT,
        });
    }
    let labels = binary_labels(p)?;
    let m = p.length() as u32;
    let accept = |d: &Dist| {
        let num: BigInt = push_forward_exact(p, d)
            .into_iter()
            .zip(&labels)
            .filter(|(_, &l)| l == 1)
            .map(|(x, _)| x)
            .sum();
        BigRational::new(num, num_traits::pow(BigInt::from(d.den), m as usize))
    };
    let half = BigRational::new(1.into(), 2.into());
    let null_accept = accept(&prob.null);
    let planted: BigRational =
        prob.planted.iter().map(accept).sum::<BigRational>() / BigRational::from_integer(BigInt::from(prob.seeds()));
    Ok(&half * (BigRational::one() - null_accept) + &half * planted)
}

/// Exact success of a learning program: `Pr_x[label = x]` with samples
/// from the planted distribution of `x`. Only for `|X| * |A| <= 2^16`.
pub fn exact_learning_success(p: &Robp, prob: &FiniteDistinguishingProblem) -> Result<f64, RobpError> {
    check_alphabet(p, prob)?;
    let size = prob.seeds() as u64 * prob.alphabet as u64;
    if size > EXACT_LIMIT {
        return Err(RobpError::BudgetExceeded {
            needed: size,
            budget: EXACT_LIMIT,
        });
    }
    let labels = p.leaf_labels();
    let m = p.length();
    let per_seed: Vec<f64> = prob
        .planted
        .par_iter()
        .enumerate()
        .map(|(x, d)| {
            compensated_sum(
                push_forward(p, &d.support(), m)
                    .into_iter()
                    .zip(&labels)
                    .filter(|(_, &l)| l == x as u64)
                    .map(|(v, _)| v),
            )
        })
        .collect();
    Ok(compensated_sum(per_seed) / prob.seeds() as f64)
}

/// Reach probability of a vertex under the planted branch and the
/// posterior over seeds given that the vertex was reached.
#[derive(Debug, Clone, PartialEq)]
pub struct Conditional {
    pub reach: f64,
    /// `None` when the vertex is unreachable.
    pub dist: Option<Vec<f64>>,
}

impl Conditional {
    pub fn max_weight(&self) -> Option<f64> {
        self.dist.as_ref().map(|d| d.iter().copied().fold(0.0, f64::max))
    }
}

/// Per-seed reach probabilities of layer `j`: `out[x][v]`.
pub fn layer_reach(p: &Robp, j: usize, prob: &FiniteDistinguishingProblem) -> Result<Vec<Vec<f64>>, RobpError> {
    check_alphabet(p, prob)?;
    if j > p.length() {
        return Err(RobpError::Malformed(format!("layer {j} beyond length {}", p.length())));
    }
    check_budget(p, prob.seeds(), DEFAULT_BUDGET)?;
    Ok(prob
        .planted
        .par_iter()
        .map(|d| push_forward(p, &d.support(), j))
        .collect())
}

/// Conditionals of every vertex of layer `j`.
pub fn layer_conditionals(
    p: &Robp,
    j: usize,
    prob: &FiniteDistinguishingProblem,
) -> Result<Vec<Conditional>, RobpError> {
    let reach = layer_reach(p, j, prob)?;
    let seeds = prob.seeds() as f64;
    Ok((0..p.layers[j].len())
        .map(|v| {
            let total = compensated_sum(reach.iter().map(|r| r[v])) / seeds;
            let dist = (total > 0.0).then(|| reach.iter().map(|r| r[v] / seeds / total).collect());
            Conditional { reach: total, dist }
        })
        .collect())
}

pub fn conditional_seed_dist(
    p: &Robp,
    j: usize,
    v: usize,
    prob: &FiniteDistinguishingProblem,
) -> Result<Conditional, RobpError> {
    let mut all = layer_conditionals(p, j, prob)?;
    if v >= all.len() {
        return Err(RobpError::Malformed(format!("vertex {v} not in layer {j}")));
    }
    Ok(all.swap_remove(v))
}

/// Outcome of the min-entropy check over all layers.
#[derive(Debug, Clone, PartialEq)]
pub struct MinEntropyReport {
    /// Vertices with reach at least `1 / (d * d_t)`.
    pub heavy_vertices: usize,
    /// Largest `max_x P_{x|v}(x) / (d * d_t / |X|)` over heavy vertices.
    pub worst_ratio: f64,
    pub violations: usize,
    /// Largest `|Σ_v P_{x|v}(x') P_j(v) - 1/|X||` over layers and seeds.
    pub total_probability_error: f64,
    /// Largest `|Σ_v P_j(v) - 1|` over layers.
    pub reach_sum_error: f64,
}

/// Checks, at every layer, that heavy vertices leave the seed with high
/// min-entropy, plus the law of total probability. `d` is the program width.
pub fn min_entropy_check(
    p: &Robp,
    prob: &FiniteDistinguishingProblem,
    d_t: f64,
) -> Result<MinEntropyReport, RobpError> {
    let d = p.width() as f64;
    let seeds = prob.seeds() as f64;
    let threshold = 1.0 / (d * d_t);
    let bound = d * d_t / seeds;
    let mut report = MinEntropyReport {
        heavy_vertices: 0,
        worst_ratio: 0.0,
        violations: 0,
        total_probability_error: 0.0,
        reach_sum_error: 0.0,
    };
    for j in 0..=p.length() {
        let conds = layer_conditionals(p, j, prob)?;
        let reach_sum = compensated_sum(conds.iter().map(|c| c.reach));
        report.reach_sum_error = report.reach_sum_error.max((reach_sum - 1.0).abs());
        for x in 0..prob.seeds() {
            let tot = compensated_sum(conds.iter().filter_map(|c| c.dist.as_ref().map(|dd| dd[x] * c.reach)));
            report.total_probability_error = report.total_probability_error.max((tot - 1.0 / seeds).abs());
        }
        for c in conds.iter().filter(|c| c.reach >= threshold) {
            report.heavy_vertices += 1;
            let w = c.max_weight().expect("heavy vertices are reachable");
            report.worst_ratio = report.worst_ratio.max(w / bound);
            if w > bound {
                report.violations += 1;
            }
        }
    }
    Ok(report)
}

/// Compiles the orthogonal tester with fixed test vectors into an explicit
/// program over vector values.
///
/// Within an iteration the working states are "all orthogonal so far" and
/// "failed"; an absorbing "accepted" state carries an early acceptance to
/// the end. Layer `m` holds two leaves: accept (label 1) then reject
/// (label 0). The width is at most 3 and the length `|vectors| * per_iter`.
pub fn compile_orthogonal_tester(vectors: &[BitString], per_iter: usize) -> Result<Robp, RobpError> {
    let n = vectors
        .first()
        .map(BitString::len)
        .ok_or_else(|| RobpError::Malformed("need at least one test vector".into()))?;
    if per_iter == 0 || n > 20 {
        return Err(RobpError::Malformed(format!(
            "need per_iter >= 1 and n <= 20, got {per_iter}, {n}"
        )));
    }
    if let Some(i) = vectors.iter().position(|v| v.len() != n) {
        return Err(RobpError::Malformed(format!("test vector {i} has the wrong length")));
    }
    if let Some(i) = vectors.iter().position(BitString::is_zero) {
        return Err(RobpError::ZeroVector(i));
    }
    let iters = vectors.len();
    let m = iters * per_iter;
    let alphabet = 1usize << n;

    // (has_failed, has_accepted) per inner layer; ok is always index 0
    let shape = |layer: usize| {
        let (t, pos) = (layer / per_iter, layer % per_iter);
        (pos > 0, t > 0)
    };
    let index = |layer: usize, state: u8| -> u32 {
        // state: 0 ok, 1 failed, 2 accepted, 3 rejected (final layer only)
        if layer == m {
            return if state == 2 { 0 } else { 1 };
        }
        let (has_failed, _) = shape(layer);
        match state {
            0 => 0,
            1 => 1,
            _ => 1 + has_failed as u32,
        }
    };

    let mut layers = Vec::with_capacity(m + 1);
    for layer in 0..m {
        let (t, pos) = (layer / per_iter, layer % per_iter);
        let v = vectors[t].to_u64();
        let orth: Vec<bool> = (0..alphabet as u64).map(|a| (a & v).count_ones() % 2 == 0).collect();
        let end = pos + 1 == per_iter;
        let last_iter = t + 1 == iters;
        let step = |state: u8, o: bool| -> u8 {
            match (state, end) {
                (2, _) => 2,
                (0, false) if o => 0,
                (_, false) => 1,
                (0, true) if o => 2,
                (_, true) if last_iter => 3,
                (_, true) => 0,
            }
        };
        let (has_failed, has_acc) = shape(layer);
        let mut states = vec![0u8];
        if has_failed {
            states.push(1);
        }
        if has_acc {
            states.push(2);
        }
        let row = states
            .into_iter()
            .map(|s| Vertex::Inner(orth.iter().map(|&o| index(layer + 1, step(s, o))).collect()))
            .collect();
        layers.push(row);
    }
    layers.push(vec![Vertex::Leaf(1), Vertex::Leaf(0)]);
    Robp::new(alphabet, layers)
}

/// Conversion helper for reports.
pub fn rational_to_f64(r: &BigRational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;

    /// Reads one bit symbol and outputs it.
    fn echo() -> Robp {
        Robp::new(
            2,
            vec![vec![Vertex::Inner(vec![0, 1])], vec![Vertex::Leaf(0), Vertex::Leaf(1)]],
        )
        .unwrap()
    }

    #[test]
    fn constant_program() {
        let p = Robp::constant(5, 1);
        assert_eq!(p.run(&[]).unwrap(), 1);
        assert_eq!(p.run(&[3, 4]).unwrap(), 1);
        assert_eq!(p.length(), 0);
    }

    #[test]
    fn two_layer_routing() {
        let p = echo();
        assert_eq!(p.run(&[0]).unwrap(), 0);
        assert_eq!(p.run(&[1]).unwrap(), 1);
        assert!(matches!(p.run(&[2]), Err(RobpError::SymbolOutOfRange { .. })));
        assert!(matches!(p.run(&[]), Err(RobpError::StreamTooShort { .. })));
    }

    #[test]
    fn validation() {
        assert!(Robp::new(2, vec![vec![Vertex::Inner(vec![0, 3])], vec![Vertex::Leaf(0)]]).is_err());
        assert!(Robp::new(2, vec![vec![Vertex::Leaf(0)], vec![Vertex::Leaf(0)]]).is_err());
        assert!(Robp::new(2, vec![vec![Vertex::Inner(vec![0])], vec![Vertex::Leaf(0)]]).is_err());
        assert!(Robp::new(2, vec![vec![Vertex::Inner(vec![0, 0])]]).is_err());
    }

    #[test]
    fn blind_program_scores_half() {
        let prob = FiniteDistinguishingProblem::local_prg(4, &Predicate::builtin("xor", 2).unwrap()).unwrap();
        let p = Robp::constant(prob.alphabet(), 0);
        assert_eq!(exact_success(&p, &prob).unwrap().success, 0.5);
        let r = exact_success_rational(&p, &prob).unwrap();
        assert_eq!(r, BigRational::new(1.into(), 2.into()));
    }

    #[test]
    fn subspace_enumeration_counts() {
        for (n, k) in [(3, 1), (4, 2), (5, 2), (5, 0), (4, 4)] {
            let all = enumerate_subspaces(n, k);
            assert_eq!(all.len() as u64, gaussian_binomial(n, k).unwrap(), "n={n} k={k}");
            let mut keys: Vec<Vec<u64>> = all
                .iter()
                .map(|b| {
                    let mut span: Vec<u64> = (0..1u64 << k)
                        .map(|c| {
                            b.iter()
                                .enumerate()
                                .filter(|(i, _)| c >> i & 1 == 1)
                                .fold(0, |a, (_, v)| a ^ v.to_u64())
                        })
                        .collect();
                    span.sort_unstable();
                    span.dedup();
                    assert_eq!(span.len(), 1 << k);
                    span
                })
                .collect();
            keys.sort();
            keys.dedup();
            assert_eq!(keys.len(), all.len());
        }
    }

    #[test]
    fn distributions_sum_exactly() {
        let prob = FiniteDistinguishingProblem::sparse_parity(5, 2).unwrap();
        let s: u64 = prob.null().weights().iter().sum();
        assert_eq!(s, prob.null().den());
        for x in 0..prob.seeds() {
            let s: u64 = prob.planted(x).weights().iter().sum();
            assert_eq!(s, prob.planted(x).den());
        }
    }

    #[test]
    fn text_round_trip() {
        let mut rng = rng_from_seed(1);
        let p = Robp::random(&[1, 3, 4, 2], 6, 2, &mut rng).unwrap();
        let q = Robp::parse_text(&p.to_text()).unwrap();
        assert_eq!(p, q);
        let e = Robp::parse_text("robp 1 2\nwidths 1 1\n0 1\nleaf 0\n").unwrap_err();
        assert!(matches!(e, RobpError::Parse { .. }));
        let e = Robp::parse_text("robp 1 2\nwidths 1 2\n0 x\n").unwrap_err();
        assert_eq!(
            e,
            RobpError::Parse {
                line: 3,
                message: "expected a number, got `x`".into()
            }
        );
    }

    #[test]
    fn compiled_tester_single_vector() {
        let v = BitString::from_u64(0b101, 3);
        let p = compile_orthogonal_tester(std::slice::from_ref(&v), 1).unwrap();
        assert_eq!(p.widths(), vec![1, 2]);
        for a in 0..8u64 {
            let want = (a & 0b101).count_ones() % 2 == 0;
            assert_eq!(p.run(&[a]).unwrap(), want as u64);
        }
    }

    #[test]
    fn compiled_tester_rejects_zero_vector() {
        assert_eq!(
            compile_orthogonal_tester(&[BitString::unit(3, 0), BitString::zeros(3)], 2),
            Err(RobpError::ZeroVector(1))
        );
    }

    #[test]
    fn compiled_tester_width_and_length() {
        let vs: Vec<_> = (0..4).map(|i| BitString::unit(5, i)).collect();
        let p = compile_orthogonal_tester(&vs, 3).unwrap();
        assert_eq!(p.length(), 12);
        assert!(p.width() <= 3);
    }

    #[test]
    fn flipped_success_complements() {
        let prob = FiniteDistinguishingProblem::subspace(3, 1).unwrap();
        let mut rng = rng_from_seed(3);
        let p = Robp::random(&[1, 4, 4, 2], 8, 2, &mut rng).unwrap();
        let a = exact_success(&p, &prob).unwrap().success;
        let b = exact_success(&p.flipped().unwrap(), &prob).unwrap().success;
        assert!((a + b - 1.0).abs() < 1e-12);
        let r = rational_to_f64(&exact_success_rational(&p, &prob).unwrap());
        assert!((a - r).abs() < 1e-12);
    }

    #[test]
    fn budget_refusal() {
        let prob = FiniteDistinguishingProblem::subspace(3, 1).unwrap();
        let p = compile_orthogonal_tester(&[BitString::unit(3, 0)], 2).unwrap();
        assert!(matches!(
            exact_success_with_budget(&p, &prob, 10),
            Err(RobpError::BudgetExceeded { .. })
        ));
    }

    #[test]
    fn start_conditional_is_uniform() {
        let prob = FiniteDistinguishingProblem::local_prg(5, &Predicate::builtin("xor", 2).unwrap()).unwrap();
        let p = Robp::constant(prob.alphabet(), 0);
        let c = conditional_seed_dist(&p, 0, 0, &prob).unwrap();
        assert_eq!(c.reach, 1.0);
        assert!(c.dist.unwrap().iter().all(|&w| w == 1.0 / 32.0));
    }

    #[test]
    fn unreachable_vertex_is_flagged() {
        let p = Robp::new(
            2,
            vec![vec![Vertex::Inner(vec![0, 0])], vec![Vertex::Leaf(0), Vertex::Leaf(1)]],
        )
        .unwrap();
        let prob = FiniteDistinguishingProblem::new(Dist::uniform(2), vec![Dist::uniform(2)]).unwrap();
        let c = conditional_seed_dist(&p, 1, 1, &prob).unwrap();
        assert_eq!(c.reach, 0.0);
        assert!(c.dist.is_none());
    }
}

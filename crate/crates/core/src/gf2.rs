//! Linear algebra over GF(2) and the samplers built on it.
//!
//! Bits are packed 64 per word, least significant bit first inside a word.
//! The packing never leaks: every operation is defined on logical bit
//! positions `0..len`, and unused high bits of the last word are kept zero so
//! that derived `Eq`/`Hash` compare logical contents.

use std::fmt;
use std::ops::{BitXor, BitXorAssign};
use std::str::FromStr;

use rand::Rng;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Gf2Error {
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("index {index} out of range for length {len}")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("parse error: {0}")]
    Parse(String),
}

const WORD: usize = 64;

#[inline]
fn words_for(len: usize) -> usize {
    len.div_ceil(WORD)
}

/// A fixed-length vector over GF(2).
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BitString {
    len: usize,
    words: Vec<u64>,
}

impl BitString {
    pub fn zeros(len: usize) -> Self {
        Self {
            len,
            words: vec![0; words_for(len)],
        }
    }

    pub fn ones(len: usize) -> Self {
        let mut s = Self {
            len,
            words: vec![u64::MAX; words_for(len)],
        };
        s.clear_tail();
        s
    }

    /// The standard basis vector with a single one at position `i`.
    pub fn unit(len: usize, i: usize) -> Self {
        let mut s = Self::zeros(len);
        s.set(i, true);
        s
    }

    pub fn from_bools(bits: &[bool]) -> Self {
        let mut s = Self::zeros(bits.len());
        for (i, &b) in bits.iter().enumerate() {
            if b {
                s.words[i / WORD] |= 1 << (i % WORD);
            }
        }
        s
    }

    /// Reads `len` bits from an integer, most significant bit first: position
    /// 0 is bit `len - 1` of `value`.
    pub fn from_u64(value: u64, len: usize) -> Self {
        assert!(len <= 64, "from_u64 supports at most 64 bits");
        let mut s = Self::zeros(len);
        for i in 0..len {
            if (value >> (len - 1 - i)) & 1 == 1 {
                s.words[i / WORD] |= 1 << (i % WORD);
            }
        }
        s
    }

    /// Inverse of [`BitString::from_u64`].
    pub fn to_u64(&self) -> u64 {
        assert!(self.len <= 64, "to_u64 supports at most 64 bits");
        let mut v = 0u64;
        for i in 0..self.len {
            v = (v << 1) | self.get(i) as u64;
        }
        v
    }

    pub fn random<R: Rng + ?Sized>(len: usize, rng: &mut R) -> Self {
        let mut s = Self {
            len,
            words: (0..words_for(len)).map(|_| rng.gen::<u64>()).collect(),
        };
        s.clear_tail();
        s
    }

    fn clear_tail(&mut self) {
        let rem = self.len % WORD;
        if rem != 0 {
            if let Some(last) = self.words.last_mut() {
                *last &= (1u64 << rem) - 1;
            }
        }
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.len
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Bit at position `i`. Panics when `i >= len`; see [`BitString::try_get`].
    #[inline]
    pub fn get(&self, i: usize) -> bool {
        assert!(i < self.len, "bit index {i} out of range for length {}", self.len);
        (self.words[i / WORD] >> (i % WORD)) & 1 == 1
    }

    pub fn try_get(&self, i: usize) -> Result<bool, Gf2Error> {
        if i < self.len {
            Ok(self.get(i))
        } else {
            Err(Gf2Error::IndexOutOfRange {
                index: i,
                len: self.len,
            })
        }
    }

    #[inline]
    pub fn set(&mut self, i: usize, value: bool) {
        assert!(i < self.len, "bit index {i} out of range for length {}", self.len);
        let mask = 1u64 << (i % WORD);
        if value {
            self.words[i / WORD] |= mask;
        } else {
            self.words[i / WORD] &= !mask;
        }
    }

    #[inline]
    pub fn flip(&mut self, i: usize) {
        assert!(i < self.len, "bit index {i} out of range for length {}", self.len);
        self.words[i / WORD] ^= 1u64 << (i % WORD);
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    /// Lowest set position, if any.
    pub fn first_one(&self) -> Option<usize> {
        self.words
            .iter()
            .enumerate()
            .find(|(_, &w)| w != 0)
            .map(|(wi, w)| wi * WORD + w.trailing_zeros() as usize)
    }

    pub fn iter(&self) -> impl Iterator<Item = bool> + '_ {
        (0..self.len).map(move |i| self.get(i))
    }

    /// Positions of the set bits in increasing order.
    pub fn ones_positions(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(wi, &w)| {
            let mut w = w;
            std::iter::from_fn(move || {
                if w == 0 {
                    None
                } else {
                    let t = w.trailing_zeros() as usize;
                    w &= w - 1;
                    Some(wi * WORD + t)
                }
            })
        })
    }

    /// Inner product modulo 2.
    pub fn inner(&self, other: &BitString) -> Result<bool, Gf2Error> {
        self.check_len(other)?;
        Ok(self.dot(other))
    }

    /// Inner product without the length check; lengths must already agree.
    #[inline]
    pub fn dot(&self, other: &BitString) -> bool {
        debug_assert_eq!(self.len, other.len);
        let mut acc = 0u64;
        for (a, b) in self.words.iter().zip(&other.words) {
            acc ^= a & b;
        }
        acc.count_ones() & 1 == 1
    }

    pub fn checked_xor(&self, other: &BitString) -> Result<BitString, Gf2Error> {
        self.check_len(other)?;
        let mut out = self.clone();
        out.xor_in_place(other);
        Ok(out)
    }

    #[inline]
    fn xor_in_place(&mut self, other: &BitString) {
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a ^= b;
        }
    }

    fn check_len(&self, other: &BitString) -> Result<(), Gf2Error> {
        if self.len == other.len {
            Ok(())
        } else {
            Err(Gf2Error::DimensionMismatch {
                left: self.len,
                right: other.len,
            })
        }
    }

    /// The first `n` bits.
    pub fn prefix(&self, n: usize) -> BitString {
        let n = n.min(self.len);
        let mut out = BitString {
            len: n,
            words: self.words[..words_for(n)].to_vec(),
        };
        out.clear_tail();
        out
    }

    /// This vector with position `i` deleted (length `len - 1`).
    pub fn without(&self, i: usize) -> BitString {
        assert!(i < self.len, "bit index {i} out of range for length {}", self.len);
        let mut out = BitString::zeros(self.len - 1);
        let mut j = 0;
        for p in 0..self.len {
            if p != i {
                if self.get(p) {
                    out.set(j, true);
                }
                j += 1;
            }
        }
        out
    }

    /// Copies this vector into a longer zero vector of length `len`.
    pub fn padded(&self, len: usize) -> BitString {
        assert!(len >= self.len);
        let mut out = BitString::zeros(len);
        out.words[..self.words.len()].copy_from_slice(&self.words);
        out
    }

    /// Hex encoding: bits taken four at a time from position 0, each nibble
    /// most significant bit first, zero-padded on the right.
    pub fn to_hex(&self) -> String {
        let mut s = String::with_capacity(self.len.div_ceil(4));
        for chunk in 0..self.len.div_ceil(4) {
            let mut nib = 0u32;
            for t in 0..4 {
                let p = chunk * 4 + t;
                nib <<= 1;
                if p < self.len && self.get(p) {
                    nib |= 1;
                }
            }
            s.push(char::from_digit(nib, 16).expect("nibble"));
        }
        s
    }

    pub fn from_hex(hex: &str, len: usize) -> Result<BitString, Gf2Error> {
        if hex.len() != len.div_ceil(4) {
            return Err(Gf2Error::Parse(format!(
                "hex string of {} digits cannot hold exactly {len} bits",
                hex.len()
            )));
        }
        let mut out = BitString::zeros(len);
        for (chunk, c) in hex.chars().enumerate() {
            let nib = c
                .to_digit(16)
                .ok_or_else(|| Gf2Error::Parse(format!("invalid hex digit {c:?}")))?;
            for t in 0..4 {
                let p = chunk * 4 + t;
                let bit = (nib >> (3 - t)) & 1 == 1;
                if p < len {
                    out.set(p, bit);
                } else if bit {
                    return Err(Gf2Error::Parse("nonzero padding bits".into()));
                }
            }
        }
        Ok(out)
    }
}

impl BitXor for &BitString {
    type Output = BitString;

    fn bitxor(self, rhs: &BitString) -> BitString {
        self.checked_xor(rhs)
            .expect("xor of bit strings with different lengths")
    }
}

impl BitXorAssign<&BitString> for BitString {
    fn bitxor_assign(&mut self, rhs: &BitString) {
        assert_eq!(self.len, rhs.len, "xor of bit strings with different lengths");
        self.xor_in_place(rhs);
    }
}

impl fmt::Display for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in self.iter() {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl fmt::Debug for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BitString({self})")
    }
}

impl FromStr for BitString {
    type Err = Gf2Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if s.is_empty() {
            return Err(Gf2Error::Parse("empty bit string".into()));
        }
        let bits = s
            .chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(Gf2Error::Parse(format!("invalid bit character {other:?}"))),
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(BitString::from_bools(&bits))
    }
}

/// Inner product of two vectors of equal length.
pub fn inner_product(u: &BitString, v: &BitString) -> Result<bool, Gf2Error> {
    u.inner(v)
}

/// Row echelon basis that grows one vector at a time.
///
/// Each stored row has a distinct pivot (its lowest set position), and a row
/// is zero at the pivots of every row inserted before it.
#[derive(Debug, Clone)]
pub struct EchelonBasis {
    len: usize,
    rows: Vec<BitString>,
    pivots: Vec<usize>,
}

impl EchelonBasis {
    pub fn new(len: usize) -> Self {
        Self {
            len,
            rows: Vec::new(),
            pivots: Vec::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.rows.len()
    }

    pub fn ambient(&self) -> usize {
        self.len
    }

    /// Reduces `v` against the basis; zero iff `v` lies in the span.
    pub fn reduce(&self, v: &BitString) -> BitString {
        let mut r = v.clone();
        for (row, &p) in self.rows.iter().zip(&self.pivots) {
            if r.get(p) {
                r.xor_in_place(row);
            }
        }
        r
    }

    pub fn contains(&self, v: &BitString) -> bool {
        self.reduce(v).is_zero()
    }

    /// Adds `v`; returns `false` (and leaves the basis unchanged) when `v` is
    /// already in the span.
    pub fn insert(&mut self, v: &BitString) -> bool {
        assert_eq!(v.len(), self.len, "vector length does not match basis");
        let r = self.reduce(v);
        match r.first_one() {
            None => false,
            Some(p) => {
                self.rows.push(r);
                self.pivots.push(p);
                true
            }
        }
    }
}

/// A dense matrix over GF(2), stored by rows.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Gf2Matrix {
    n_cols: usize,
    rows: Vec<BitString>,
}

/// Result of solving `M x = rhs`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Solution {
    pub consistent: bool,
    /// A solution with every free variable set to zero, when one exists.
    pub witness: Option<BitString>,
}

impl Gf2Matrix {
    pub fn new(rows: Vec<BitString>, n_cols: usize) -> Result<Self, Gf2Error> {
        if let Some(bad) = rows.iter().find(|r| r.len() != n_cols) {
            return Err(Gf2Error::DimensionMismatch {
                left: bad.len(),
                right: n_cols,
            });
        }
        Ok(Self { n_cols, rows })
    }

    /// Builds a matrix from rows; all rows must share a length.
    pub fn from_rows(rows: Vec<BitString>) -> Result<Self, Gf2Error> {
        let n_cols = rows
            .first()
            .map(BitString::len)
            .ok_or_else(|| Gf2Error::InvalidParameter("matrix needs at least one row".into()))?;
        Self::new(rows, n_cols)
    }

    pub fn identity(n: usize) -> Self {
        Self {
            n_cols: n,
            rows: (0..n).map(|i| BitString::unit(n, i)).collect(),
        }
    }

    pub fn zeros(n_rows: usize, n_cols: usize) -> Self {
        Self {
            n_cols,
            rows: vec![BitString::zeros(n_cols); n_rows],
        }
    }

    pub fn random<R: Rng + ?Sized>(n_rows: usize, n_cols: usize, rng: &mut R) -> Self {
        Self {
            n_cols,
            rows: (0..n_rows).map(|_| BitString::random(n_cols, rng)).collect(),
        }
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn rows(&self) -> &[BitString] {
        &self.rows
    }

    pub fn row(&self, i: usize) -> &BitString {
        &self.rows[i]
    }

    pub fn into_rows(self) -> Vec<BitString> {
        self.rows
    }

    /// Row rank by Gaussian elimination on a private copy.
    pub fn rank(&self) -> usize {
        let mut basis = EchelonBasis::new(self.n_cols);
        for row in &self.rows {
            basis.insert(row);
            if basis.dim() == self.n_cols {
                break;
            }
        }
        basis.dim()
    }

    /// Matrix-vector product `M v`.
    pub fn mul_vec(&self, v: &BitString) -> Result<BitString, Gf2Error> {
        if v.len() != self.n_cols {
            return Err(Gf2Error::DimensionMismatch {
                left: self.n_cols,
                right: v.len(),
            });
        }
        let mut out = BitString::zeros(self.rows.len());
        for (i, row) in self.rows.iter().enumerate() {
            if row.dot(v) {
                out.set(i, true);
            }
        }
        Ok(out)
    }

    /// Decides whether `M x = rhs` has a solution and returns one.
    ///
    /// Gauss-Jordan elimination on the augmented matrix, pivoting on the lowest
    /// column index with a nonzero entry and, within it, the lowest remaining
    /// row, so the witness is deterministic.
    pub fn solve(&self, rhs: &BitString) -> Result<Solution, Gf2Error> {
        if rhs.len() != self.rows.len() {
            return Err(Gf2Error::DimensionMismatch {
                left: self.rows.len(),
                right: rhs.len(),
            });
        }
        let width = self.n_cols + 1;
        let mut aug: Vec<BitString> = self
            .rows
            .iter()
            .enumerate()
            .map(|(i, row)| {
                let mut r = row.padded(width);
                if rhs.get(i) {
                    r.set(self.n_cols, true);
                }
                r
            })
            .collect();

        let mut pivot_cols = Vec::new();
        let mut next = 0;
        for col in 0..self.n_cols {
            if next == aug.len() {
                break;
            }
            let Some(p) = (next..aug.len()).find(|&r| aug[r].get(col)) else {
                continue;
            };
            aug.swap(next, p);
            let pivot = aug[next].clone();
            for (r, row) in aug.iter_mut().enumerate() {
                if r != next && row.get(col) {
                    row.xor_in_place(&pivot);
                }
            }
            pivot_cols.push(col);
            next += 1;
        }

        // Rows below the pivots have zero coefficients; a one in the rhs
        // column there is the contradiction 0 = 1.
        if aug[next..].iter().any(|r| r.get(self.n_cols)) {
            return Ok(Solution {
                consistent: false,
                witness: None,
            });
        }
        let mut x = BitString::zeros(self.n_cols);
        for (r, &c) in pivot_cols.iter().enumerate() {
            if aug[r].get(self.n_cols) {
                x.set(c, true);
            }
        }
        Ok(Solution {
            consistent: true,
            witness: Some(x),
        })
    }
}

impl fmt::Debug for Gf2Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.rows.iter().map(|r| r.to_string())).finish()
    }
}

/// Solves `m x = rhs`; see [`Gf2Matrix::solve`].
pub fn solve_consistent(m: &Gf2Matrix, rhs: &BitString) -> Result<Solution, Gf2Error> {
    m.solve(rhs)
}

/// An ordered tuple of `k` distinct indices into `0..n`.
///
/// Stored zero-based. The text formats print one-based positions.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct OrderedTuple {
    n: usize,
    indices: Vec<usize>,
}

impl OrderedTuple {
    pub fn new(indices: Vec<usize>, n: usize) -> Result<Self, Gf2Error> {
        if indices.is_empty() {
            return Err(Gf2Error::InvalidParameter("tuple must be nonempty".into()));
        }
        for (pos, &i) in indices.iter().enumerate() {
            if i >= n {
                return Err(Gf2Error::IndexOutOfRange { index: i, len: n });
            }
            if indices[..pos].contains(&i) {
                return Err(Gf2Error::InvalidParameter(format!("repeated index {}", i + 1)));
            }
        }
        Ok(Self { n, indices })
    }

    pub fn from_one_based(indices: &[usize], n: usize) -> Result<Self, Gf2Error> {
        let zero_based = indices
            .iter()
            .map(|&i| i.checked_sub(1).ok_or(Gf2Error::IndexOutOfRange { index: 0, len: n }))
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(zero_based, n)
    }

    pub fn k(&self) -> usize {
        self.indices.len()
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn one_based(&self) -> Vec<usize> {
        self.indices.iter().map(|i| i + 1).collect()
    }

    /// Largest index, zero-based.
    pub fn max_index(&self) -> usize {
        *self.indices.iter().max().expect("nonempty tuple")
    }

    /// Number of ordered `k`-tuples of distinct elements of `0..n`.
    pub fn count(n: usize, k: usize) -> u128 {
        if k > n {
            return 0;
        }
        (0..k).map(|i| (n - i) as u128).product()
    }

    /// Position of this tuple in the lexicographic order of all ordered
    /// tuples with the same `n` and `k` (mixed radix `n, n-1, ..., n-k+1`).
    pub fn rank(&self) -> u128 {
        let mut r: u128 = 0;
        for (pos, &i) in self.indices.iter().enumerate() {
            let smaller_used = self.indices[..pos].iter().filter(|&&u| u < i).count();
            let digit = (i - smaller_used) as u128;
            r = r * (self.n - pos) as u128 + digit;
        }
        r
    }

    /// Inverse of [`OrderedTuple::rank`].
    pub fn unrank(mut r: u128, n: usize, k: usize) -> Result<Self, Gf2Error> {
        if k == 0 || k > n || r >= Self::count(n, k) {
            return Err(Gf2Error::InvalidParameter(format!(
                "rank {r} out of range for ordered {k}-tuples of {n}"
            )));
        }
        let mut digits = vec![0usize; k];
        for pos in (0..k).rev() {
            let radix = (n - pos) as u128;
            digits[pos] = (r % radix) as usize;
            r /= radix;
        }
        let mut used: Vec<usize> = Vec::with_capacity(k);
        let mut indices = Vec::with_capacity(k);
        for &d in &digits {
            // the d-th smallest element of 0..n not yet used
            let mut candidate = d;
            let mut sorted = used.clone();
            sorted.sort_unstable();
            for &u in &sorted {
                if u <= candidate {
                    candidate += 1;
                }
            }
            used.push(candidate);
            indices.push(candidate);
        }
        Self::new(indices, n)
    }
}

impl fmt::Display for OrderedTuple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.one_based().iter().map(|i| i.to_string()).collect();
        write!(f, "{}", parts.join(","))
    }
}

/// `x^a`: component `i` is bit `a[i]` of `x`.
pub fn project(x: &BitString, a: &OrderedTuple) -> Result<BitString, Gf2Error> {
    let mut out = BitString::zeros(a.k());
    for (pos, &i) in a.indices().iter().enumerate() {
        if x.try_get(i)? {
            out.set(pos, true);
        }
    }
    Ok(out)
}

/// `k` linearly independent vectors whose span is uniform over the
/// `k`-dimensional subspaces of GF(2)^n.
///
/// Each vector is drawn uniformly and redrawn while it lies in the span of the
/// earlier ones; every subspace has the same number of ordered bases, so the
/// span is uniform.
pub fn sample_subspace_basis<R: Rng + ?Sized>(n: usize, k: usize, rng: &mut R) -> Result<Vec<BitString>, Gf2Error> {
    if k > n {
        return Err(Gf2Error::InvalidParameter(format!(
            "subspace dimension {k} exceeds {n}"
        )));
    }
    let mut echelon = EchelonBasis::new(n);
    let mut basis = Vec::with_capacity(k);
    while basis.len() < k {
        let v = BitString::random(n, rng);
        if echelon.insert(&v) {
            basis.push(v);
        }
    }
    Ok(basis)
}

/// A uniformly random invertible `n x n` matrix (rejection sampling; the
/// acceptance probability exceeds 0.288 for every `n`).
pub fn sample_full_rank_map<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<Gf2Matrix, Gf2Error> {
    if n == 0 {
        return Err(Gf2Error::InvalidParameter("matrix dimension must be positive".into()));
    }
    loop {
        let m = Gf2Matrix::random(n, n, rng);
        if m.rank() == n {
            return Ok(m);
        }
    }
}

/// `n` independent Bernoulli(`p`) bits.
pub fn sample_sparse_vector<R: Rng + ?Sized>(n: usize, p: f64, rng: &mut R) -> Result<BitString, Gf2Error> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Gf2Error::InvalidParameter(format!("probability {p} outside [0, 1]")));
    }
    let mut v = BitString::zeros(n);
    for i in 0..n {
        if rng.gen_bool(p) {
            v.set(i, true);
        }
    }
    Ok(v)
}

/// A uniformly random ordered `k`-tuple of distinct indices in `0..n`, by a
/// partial Fisher-Yates shuffle over a virtual identity permutation.
pub fn sample_ordered_tuple<R: Rng + ?Sized>(n: usize, k: usize, rng: &mut R) -> Result<OrderedTuple, Gf2Error> {
    if k == 0 || k > n {
        return Err(Gf2Error::InvalidParameter(format!(
            "need 1 <= k <= n for ordered tuples, got k={k}, n={n}"
        )));
    }
    // positions of the virtual array that have been swapped away from identity
    let mut moved: Vec<(usize, usize)> = Vec::with_capacity(2 * k);
    let lookup =
        |moved: &[(usize, usize)], p: usize| moved.iter().rev().find(|(pos, _)| *pos == p).map_or(p, |&(_, v)| v);
    let mut out = Vec::with_capacity(k);
    for i in 0..k {
        let j = rng.gen_range(i..n);
        let vi = lookup(&moved, i);
        let vj = lookup(&moved, j);
        moved.push((j, vi));
        moved.push((i, vj));
        out.push(vj);
    }
    Ok(OrderedTuple { n, indices: out })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;
    use std::collections::HashMap;

    fn bs(s: &str) -> BitString {
        s.parse().unwrap()
    }

    #[test]
    fn inner_product_examples() {
        assert!(!inner_product(&bs("0000"), &bs("1011")).unwrap());
        assert!(inner_product(&bs("1100"), &bs("1010")).unwrap());
        assert_eq!(
            inner_product(&bs("10"), &bs("101")),
            Err(Gf2Error::DimensionMismatch { left: 2, right: 3 })
        );
    }

    #[test]
    fn self_inner_product_is_popcount_parity() {
        let mut rng = rng_from_seed(1);
        for _ in 0..1000 {
            let v = BitString::random(64, &mut rng);
            let naive = v.iter().filter(|&b| b).count() % 2 == 1;
            assert_eq!(v.inner(&v).unwrap(), naive);
        }
    }

    #[test]
    fn rank_examples() {
        assert_eq!(Gf2Matrix::identity(4).rank(), 4);
        assert_eq!(Gf2Matrix::zeros(3, 5).rank(), 0);
        let m = Gf2Matrix::from_rows(vec![bs("1100"), bs("0110"), bs("1010")]).unwrap();
        assert_eq!(m.rank(), 2);
    }

    #[test]
    fn rank_three_rows_matches_span_enumeration() {
        // exhaustive span of {1100, 0110, 1010}: the size is 2^rank
        let rows = [bs("1100"), bs("0110"), bs("1010")];
        let mut span = std::collections::HashSet::new();
        for mask in 0..8u32 {
            let mut v = BitString::zeros(4);
            for (i, r) in rows.iter().enumerate() {
                if mask >> i & 1 == 1 {
                    v ^= r;
                }
            }
            span.insert(v);
        }
        assert_eq!(span.len(), 4);
    }

    #[test]
    fn solve_identity_returns_rhs() {
        let rhs = bs("10110");
        let s = Gf2Matrix::identity(5).solve(&rhs).unwrap();
        assert!(s.consistent);
        assert_eq!(s.witness.unwrap(), rhs);
    }

    #[test]
    fn solve_detects_contradiction() {
        let m = Gf2Matrix::from_rows(vec![bs("10"), bs("10")]).unwrap();
        let s = m.solve(&bs("01")).unwrap();
        assert!(!s.consistent);
        assert!(s.witness.is_none());
    }

    #[test]
    fn solve_planted_system() {
        let mut rng = rng_from_seed(2);
        for _ in 0..200 {
            let m = Gf2Matrix::random(12, 8, &mut rng);
            let x0 = BitString::random(8, &mut rng);
            let rhs = m.mul_vec(&x0).unwrap();
            let s = m.solve(&rhs).unwrap();
            assert!(s.consistent);
            assert_eq!(m.mul_vec(&s.witness.unwrap()).unwrap(), rhs);
        }
    }

    #[test]
    fn solve_rejects_bad_rhs_length() {
        let m = Gf2Matrix::identity(3);
        assert!(m.solve(&bs("10")).is_err());
    }

    #[test]
    fn subspace_basis_edge_cases() {
        let mut rng = rng_from_seed(3);
        assert!(sample_subspace_basis(5, 0, &mut rng).unwrap().is_empty());
        let full = sample_subspace_basis(6, 6, &mut rng).unwrap();
        assert_eq!(Gf2Matrix::from_rows(full).unwrap().rank(), 6);
        assert!(sample_subspace_basis(3, 4, &mut rng).is_err());
        for k in 1..=7 {
            let b = sample_subspace_basis(7, k, &mut rng).unwrap();
            assert_eq!(Gf2Matrix::from_rows(b).unwrap().rank(), k);
        }
    }

    #[test]
    fn full_rank_map_n1_is_one() {
        let mut rng = rng_from_seed(4);
        let m = sample_full_rank_map(1, &mut rng).unwrap();
        assert_eq!(m.row(0), &bs("1"));
    }

    #[test]
    fn sparse_vector_extremes() {
        let mut rng = rng_from_seed(5);
        assert!(sample_sparse_vector(50, 0.0, &mut rng).unwrap().is_zero());
        assert_eq!(sample_sparse_vector(50, 1.0, &mut rng).unwrap(), BitString::ones(50));
        assert!(sample_sparse_vector(5, 1.5, &mut rng).is_err());
    }

    #[test]
    fn ordered_tuple_edges() {
        let mut rng = rng_from_seed(6);
        let t = sample_ordered_tuple(1, 1, &mut rng).unwrap();
        assert_eq!(t.one_based(), vec![1]);
        assert!(sample_ordered_tuple(3, 4, &mut rng).is_err());
        for _ in 0..1000 {
            let t = sample_ordered_tuple(10, 6, &mut rng).unwrap();
            let mut s = t.indices().to_vec();
            s.sort_unstable();
            s.dedup();
            assert_eq!(s.len(), 6);
            assert!(t.max_index() < 10);
        }
    }

    #[test]
    fn ordered_tuple_validation() {
        assert!(OrderedTuple::from_one_based(&[1, 1], 3).is_err());
        assert!(OrderedTuple::from_one_based(&[4], 3).is_err());
        assert!(OrderedTuple::from_one_based(&[0], 3).is_err());
    }

    #[test]
    fn tuple_rank_is_a_bijection() {
        let (n, k) = (5, 3);
        let total = OrderedTuple::count(n, k);
        assert_eq!(total, 60);
        let mut seen = HashMap::new();
        for r in 0..total {
            let t = OrderedTuple::unrank(r, n, k).unwrap();
            assert_eq!(t.rank(), r);
            assert!(seen.insert(t.indices().to_vec(), r).is_none());
        }
        // lexicographic: rank 0 is (0,1,2), the last is (4,3,2)
        assert_eq!(OrderedTuple::unrank(0, n, k).unwrap().indices(), &[0, 1, 2]);
        assert_eq!(OrderedTuple::unrank(59, n, k).unwrap().indices(), &[4, 3, 2]);
    }

    #[test]
    fn project_examples() {
        let x = bs("10110");
        let a = OrderedTuple::from_one_based(&[1, 3, 5], 5).unwrap();
        assert_eq!(project(&x, &a).unwrap(), bs("110"));
        let id = OrderedTuple::from_one_based(&[1, 2, 3, 4, 5], 5).unwrap();
        assert_eq!(project(&x, &id).unwrap(), x);
        let wide = OrderedTuple::from_one_based(&[6], 6).unwrap();
        assert!(project(&x, &wide).is_err());
    }

    #[test]
    fn project_matches_naive_loop() {
        let mut rng = rng_from_seed(7);
        for _ in 0..500 {
            let x = BitString::random(20, &mut rng);
            let a = sample_ordered_tuple(20, 5, &mut rng).unwrap();
            let naive: Vec<bool> = a.indices().iter().map(|&i| x.get(i)).collect();
            assert_eq!(project(&x, &a).unwrap(), BitString::from_bools(&naive));
        }
    }

    #[test]
    fn hex_and_integer_encodings() {
        let v = bs("101101");
        assert_eq!(v.to_hex(), "b4");
        assert_eq!(BitString::from_hex("b4", 6).unwrap(), v);
        assert!(BitString::from_hex("b5", 6).is_err());
        assert_eq!(v.to_u64(), 0b101101);
        assert_eq!(BitString::from_u64(0b101101, 6), v);
    }

    #[test]
    fn word_boundaries() {
        let mut v = BitString::zeros(130);
        v.set(0, true);
        v.set(64, true);
        v.set(129, true);
        assert_eq!(v.ones_positions().collect::<Vec<_>>(), vec![0, 64, 129]);
        assert_eq!(v.count_ones(), 3);
        assert_eq!(v.without(64).ones_positions().collect::<Vec<_>>(), vec![0, 128]);
        assert_eq!(v.prefix(65).count_ones(), 2);
        assert_eq!(BitString::ones(130).count_ones(), 130);
        assert!(v.try_get(130).is_err());
    }
}

//! k-ary boolean predicates, their exact Fourier spectra and resilience.
//!
//! Input convention: position `i` of an input (equivalently of the tuple `a`
//! in `x^a`) is bit `k - 1 - i` of the truth-table index, i.e. the input is
//! read as a big-endian integer. Fourier subsets `alpha` use the same mapping,
//! so `<alpha, x>` is the parity of `alpha & x` on indices.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::gf2::BitString;

pub const MAX_ARITY: usize = 20;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PredicateError {
    #[error("arity {0} outside 1..={MAX_ARITY}")]
    BadArity(usize),
    #[error("input has {got} bits, predicate arity is {want}")]
    InputLength { got: usize, want: usize },
    #[error("unknown predicate {0:?}")]
    UnknownName(String),
    #[error("predicate {name} does not support arity {k}: {reason}")]
    UnsupportedArity { name: String, k: usize, reason: String },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
}

/// A boolean function on `k` bits stored as its truth table.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Predicate {
    k: usize,
    table: BitString,
}

impl Predicate {
    pub fn from_table(k: usize, table: BitString) -> Result<Self, PredicateError> {
        if k == 0 || k > MAX_ARITY {
            return Err(PredicateError::BadArity(k));
        }
        if table.len() != 1 << k {
            return Err(PredicateError::InputLength {
                got: table.len(),
                want: 1 << k,
            });
        }
        Ok(Self { k, table })
    }

    /// Tabulates `f` over all inputs; `f` receives the input as a big-endian
    /// integer.
    pub fn from_fn(k: usize, f: impl Fn(usize) -> bool) -> Result<Self, PredicateError> {
        if k == 0 || k > MAX_ARITY {
            return Err(PredicateError::BadArity(k));
        }
        let bits: Vec<bool> = (0..1usize << k).map(f).collect();
        Ok(Self {
            k,
            table: BitString::from_bools(&bits),
        })
    }

    pub fn constant(k: usize, value: bool) -> Result<Self, PredicateError> {
        Self::from_fn(k, |_| value)
    }

    /// Named predicates: `xor`, `and`, `or`, `maj` (odd `k`), `tsa` (`k = 5`,
    /// `x1 + x2 + x3 + x4 x5`), `const0`, `const1`.
    pub fn builtin(name: &str, k: usize) -> Result<Self, PredicateError> {
        let unsupported = |reason: &str| PredicateError::UnsupportedArity {
            name: name.to_string(),
            k,
            reason: reason.to_string(),
        };
        if k == 0 || k > MAX_ARITY {
            return Err(PredicateError::BadArity(k));
        }
        let full = (1usize << k) - 1;
        match name {
            "xor" => Self::from_fn(k, |x| x.count_ones() % 2 == 1),
            "and" => Self::from_fn(k, |x| x == full),
            "or" => Self::from_fn(k, |x| x != 0),
            "maj" => {
                if k % 2 == 0 {
                    return Err(unsupported("majority needs odd arity"));
                }
                Self::from_fn(k, |x| x.count_ones() as usize > k / 2)
            }
            "tsa" => {
                if k != 5 {
                    return Err(unsupported("tsa is defined for k = 5 only"));
                }
                // bit 4 is x1, bit 0 is x5
                Self::from_fn(5, |x| {
                    let b = |i: usize| (x >> (4 - i)) & 1 == 1;
                    b(0) ^ b(1) ^ b(2) ^ (b(3) & b(4))
                })
            }
            "const0" => Self::constant(k, false),
            "const1" => Self::constant(k, true),
            other => Err(PredicateError::UnknownName(other.to_string())),
        }
    }

    pub fn arity(&self) -> usize {
        self.k
    }

    pub fn table(&self) -> &BitString {
        &self.table
    }

    /// `P(input)`; the input is read big-endian.
    pub fn evaluate(&self, input: &BitString) -> Result<bool, PredicateError> {
        if input.len() != self.k {
            return Err(PredicateError::InputLength {
                got: input.len(),
                want: self.k,
            });
        }
        Ok(self.table.get(input.to_u64() as usize))
    }

    /// `P` at a truth-table index.
    #[inline]
    pub fn eval_index(&self, index: usize) -> bool {
        self.table.get(index)
    }

    pub fn count_ones(&self) -> usize {
        self.table.count_ones()
    }

    pub fn is_balanced(&self) -> bool {
        2 * self.count_ones() == self.table.len()
    }

    /// The predicate `x -> P(x_{perm[0]}, ..., x_{perm[k-1]})`.
    pub fn permute_inputs(&self, perm: &[usize]) -> Result<Self, PredicateError> {
        let k = self.k;
        let mut seen = vec![false; k];
        if perm.len() != k || perm.iter().any(|&p| p >= k || std::mem::replace(&mut seen[p], true)) {
            return Err(PredicateError::UnsupportedArity {
                name: "permutation".into(),
                k,
                reason: "not a permutation of the inputs".into(),
            });
        }
        Self::from_fn(k, |x| {
            let mut y = 0usize;
            for (i, &p) in perm.iter().enumerate() {
                let bit = (x >> (k - 1 - p)) & 1;
                y |= bit << (k - 1 - i);
            }
            self.table.get(y)
        })
    }

    /// Fourier spectrum of `(-1)^P`; see [`walsh_hadamard`].
    pub fn spectrum(&self) -> Spectrum {
        walsh_hadamard(self)
    }

    pub fn resilience(&self) -> usize {
        self.spectrum().resilience()
    }

    /// Text form: `k` on the first line, the `2^k` table characters on the
    /// second, in input order `0..2^k`.
    pub fn to_text(&self) -> String {
        format!("{}\n{}\n", self.k, self.table)
    }

    pub fn parse_text(text: &str) -> Result<Self, PredicateError> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let (l1, first) = lines.next().ok_or(PredicateError::Parse {
            line: 1,
            message: "missing arity line".into(),
        })?;
        let k: usize = first.trim().parse().map_err(|_| PredicateError::Parse {
            line: l1 + 1,
            message: format!("arity {:?} is not an integer", first.trim()),
        })?;
        if k == 0 || k > MAX_ARITY {
            return Err(PredicateError::Parse {
                line: l1 + 1,
                message: format!("arity {k} outside 1..={MAX_ARITY}"),
            });
        }
        let (l2, second) = lines.next().ok_or(PredicateError::Parse {
            line: l1 + 2,
            message: "missing truth table line".into(),
        })?;
        let second = second.trim();
        if second.len() != 1 << k {
            return Err(PredicateError::Parse {
                line: l2 + 1,
                message: format!("truth table has {} entries, expected {}", second.len(), 1usize << k),
            });
        }
        let table: BitString = second.parse().map_err(|e| PredicateError::Parse {
            line: l2 + 1,
            message: format!("{e}"),
        })?;
        if let Some((l3, _)) = lines.next() {
            return Err(PredicateError::Parse {
                line: l3 + 1,
                message: "unexpected trailing content".into(),
            });
        }
        Self::from_table(k, table)
    }
}

impl fmt::Debug for Predicate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Predicate(k={}, table={})", self.k, self.table)
    }
}

impl FromStr for Predicate {
    type Err = PredicateError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::parse_text(s)
    }
}

/// Exact Fourier spectrum of `(-1)^P`: coefficient `alpha` equals
/// `numerators[alpha] / 2^k`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Spectrum {
    k: usize,
    numerators: Vec<i64>,
}

impl Spectrum {
    pub fn arity(&self) -> usize {
        self.k
    }

    pub fn numerators(&self) -> &[i64] {
        &self.numerators
    }

    pub fn numerator(&self, alpha: usize) -> i64 {
        self.numerators[alpha]
    }

    pub fn denominator(&self) -> i64 {
        1 << self.k
    }

    pub fn coefficient(&self, alpha: usize) -> f64 {
        self.numerators[alpha] as f64 / self.denominator() as f64
    }

    /// Smallest `|alpha|` carrying a nonzero coefficient.
    pub fn resilience(&self) -> usize {
        self.numerators
            .iter()
            .enumerate()
            .filter(|(_, &c)| c != 0)
            .map(|(alpha, _)| alpha.count_ones() as usize)
            .min()
            .expect("Parseval forces a nonzero coefficient")
    }

    /// `sum_alpha numerators[alpha]^2`; equals `4^k` for every predicate.
    pub fn parseval_sum(&self) -> i128 {
        self.numerators.iter().map(|&c| (c as i128) * (c as i128)).sum()
    }

    /// Total squared weight `sum P^(alpha)^2` on each level `|alpha| = 0..=k`,
    /// as numerators over `4^k`.
    pub fn level_weights(&self) -> Vec<i128> {
        let mut w = vec![0i128; self.k + 1];
        for (alpha, &c) in self.numerators.iter().enumerate() {
            w[alpha.count_ones() as usize] += (c as i128) * (c as i128);
        }
        w
    }

    /// Inverts the transform back to a truth table.
    pub fn to_predicate(&self) -> Result<Predicate, PredicateError> {
        let mut v = self.numerators.clone();
        fwht_i64(&mut v);
        // v[x] = 2^k (-1)^{P(x)}
        let scale = 1i64 << self.k;
        Predicate::from_fn(self.k, |x| {
            debug_assert!(v[x] == scale || v[x] == -scale);
            v[x] < 0
        })
    }
}

/// In-place unnormalized Walsh-Hadamard butterfly.
pub fn fwht_i64(v: &mut [i64]) {
    let n = v.len();
    debug_assert!(n.is_power_of_two());
    let mut h = 1;
    while h < n {
        for block in (0..n).step_by(2 * h) {
            for i in block..block + h {
                let (a, b) = (v[i], v[i + h]);
                v[i] = a + b;
                v[i + h] = a - b;
            }
        }
        h *= 2;
    }
}

/// Floating-point version of [`fwht_i64`].
pub fn fwht_f64(v: &mut [f64]) {
    let n = v.len();
    debug_assert!(n.is_power_of_two());
    let mut h = 1;
    while h < n {
        for block in (0..n).step_by(2 * h) {
            for i in block..block + h {
                let (a, b) = (v[i], v[i + h]);
                v[i] = a + b;
                v[i + h] = a - b;
            }
        }
        h *= 2;
    }
}

/// `numerators[alpha] = sum_x (-1)^{P(x)} (-1)^{<alpha,x>}`, exact, in
/// `O(k 2^k)`.
pub fn walsh_hadamard(p: &Predicate) -> Spectrum {
    let mut v: Vec<i64> = (0..1usize << p.k)
        .map(|x| if p.table.get(x) { -1 } else { 1 })
        .collect();
    fwht_i64(&mut v);
    Spectrum { k: p.k, numerators: v }
}

pub fn resilience(p: &Predicate) -> usize {
    p.resilience()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bits(s: &str) -> BitString {
        s.parse().unwrap()
    }

    #[test]
    fn evaluate_examples() {
        let xor3 = Predicate::builtin("xor", 3).unwrap();
        assert!(!xor3.evaluate(&bits("101")).unwrap());
        let and2 = Predicate::builtin("and", 2).unwrap();
        assert!(and2.evaluate(&bits("11")).unwrap());
        let maj3 = Predicate::builtin("maj", 3).unwrap();
        assert!(maj3.evaluate(&bits("110")).unwrap());
        assert!(matches!(
            maj3.evaluate(&bits("11")),
            Err(PredicateError::InputLength { got: 2, want: 3 })
        ));
    }

    #[test]
    fn xor2_spectrum() {
        let s = walsh_hadamard(&Predicate::builtin("xor", 2).unwrap());
        // alpha index: {1} = 0b10, {2} = 0b01, {1,2} = 0b11
        assert_eq!(s.numerators(), &[0, 0, 0, 4]);
        assert_eq!(s.coefficient(3), 1.0);
    }

    #[test]
    fn and2_spectrum_matches_direct_sum() {
        let p = Predicate::builtin("and", 2).unwrap();
        let s = walsh_hadamard(&p);
        // direct 4-point sum
        for alpha in 0..4usize {
            let direct: i64 = (0..4usize)
                .map(|x| {
                    let sign_p = if p.eval_index(x) { -1 } else { 1 };
                    let sign_chi = if (alpha & x).count_ones() % 2 == 1 { -1 } else { 1 };
                    sign_p * sign_chi
                })
                .sum();
            assert_eq!(s.numerator(alpha), direct);
        }
        assert_eq!(s.coefficient(0), 0.5);
        assert_eq!(s.coefficient(0b10), 0.5);
        assert_eq!(s.coefficient(0b01), 0.5);
        assert_eq!(s.coefficient(0b11), -0.5);
    }

    #[test]
    fn constant_zero_spectrum() {
        for k in 1..=6 {
            let s = walsh_hadamard(&Predicate::constant(k, false).unwrap());
            assert_eq!(s.coefficient(0), 1.0);
            assert!(s.numerators()[1..].iter().all(|&c| c == 0));
            assert_eq!(s.resilience(), 0);
        }
    }

    #[test]
    fn resilience_examples() {
        for k in 1..=8 {
            assert_eq!(Predicate::builtin("xor", k).unwrap().resilience(), k);
        }
        assert_eq!(Predicate::builtin("and", 2).unwrap().resilience(), 0);
        assert_eq!(Predicate::builtin("maj", 3).unwrap().resilience(), 1);
        assert_eq!(Predicate::builtin("tsa", 5).unwrap().resilience(), 3);
    }

    #[test]
    fn builtin_errors() {
        assert!(matches!(
            Predicate::builtin("maj", 2),
            Err(PredicateError::UnsupportedArity { .. })
        ));
        assert!(matches!(
            Predicate::builtin("nope", 2),
            Err(PredicateError::UnknownName(_))
        ));
        assert!(Predicate::builtin("tsa", 4).is_err());
        assert!(Predicate::builtin("xor", 0).is_err());
        assert!(Predicate::builtin("xor", 21).is_err());
    }

    #[test]
    fn xor4_table() {
        let p = Predicate::builtin("xor", 4).unwrap();
        assert_eq!(p.table().to_string(), "0110100110010110");
    }

    #[test]
    fn text_round_trip_and_errors() {
        let p = Predicate::builtin("tsa", 5).unwrap();
        assert_eq!(Predicate::parse_text(&p.to_text()).unwrap(), p);
        let err = Predicate::parse_text("2\n0110\n1\n").unwrap_err();
        assert_eq!(
            err,
            PredicateError::Parse {
                line: 3,
                message: "unexpected trailing content".into()
            }
        );
        let err = Predicate::parse_text("2\n011\n").unwrap_err();
        assert!(matches!(err, PredicateError::Parse { line: 2, .. }));
        let err = Predicate::parse_text("x\n0110\n").unwrap_err();
        assert!(matches!(err, PredicateError::Parse { line: 1, .. }));
        let err = Predicate::parse_text("2\n01a0\n").unwrap_err();
        assert!(matches!(err, PredicateError::Parse { line: 2, .. }));
    }

    #[test]
    fn permutation_reorders_inputs() {
        // P(x1, x2) = x1 AND NOT x2 ; swapped: x2 AND NOT x1
        let p = Predicate::from_fn(2, |x| x == 0b10).unwrap();
        let q = p.permute_inputs(&[1, 0]).unwrap();
        assert!(q.eval_index(0b01));
        assert!(!q.eval_index(0b10));
        assert!(p.permute_inputs(&[0, 0]).is_err());
    }
}

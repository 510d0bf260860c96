//! The three distinguishing-problem families and their sample streams.
//!
//! * `Subspace { n, k }`: null samples are uniform in GF(2)^n, planted
//!   samples are uniform on a hidden `k`-dimensional subspace.
//! * `SparseParity { n, k }`: every coefficient is Bernoulli(`k/n`); the
//!   label is a fair coin (null) or `<a, x>` (planted).
//! * `LocalPrg { n, predicate }`: the query is a uniform ordered tuple of
//!   distinct seed positions; the label is a fair coin (null) or `P(x^a)`
//!   (planted).
//!
//! Streams are pulled lazily from an [`Instance`] and a caller-owned rng, so
//! replaying the same seed reproduces the stream bit for bit.

use std::fmt;
use std::sync::Arc;

use rand::Rng;
use thiserror::Error;

use crate::gf2::{
    project, sample_ordered_tuple, sample_sparse_vector, sample_subspace_basis, BitString, Gf2Error, OrderedTuple,
};
use crate::predicate::Predicate;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SourceError {
    #[error("invalid source parameters: {0}")]
    InvalidSpec(String),
    #[error("hybrid split {j} exceeds stream length {m}")]
    HybridSplit { j: usize, m: usize },
    #[error("hidden seed does not match the source family or dimension")]
    HiddenMismatch,
    #[error("sample dump line {line}: {message}")]
    Dump { line: usize, message: String },
    #[error(transparent)]
    Gf2(#[from] Gf2Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Family {
    Subspace,
    SparseParity,
    LocalPrg,
}

impl Family {
    pub fn name(self) -> &'static str {
        match self {
            Family::Subspace => "subspace",
            Family::SparseParity => "sparse_parity",
            Family::LocalPrg => "local_prg",
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SourceSpec {
    Subspace { n: usize, k: usize },
    SparseParity { n: usize, k: usize },
    LocalPrg { n: usize, predicate: Arc<Predicate> },
}

impl SourceSpec {
    pub fn subspace(n: usize, k: usize) -> Result<Self, SourceError> {
        let s = SourceSpec::Subspace { n, k };
        s.validate()?;
        Ok(s)
    }

    pub fn sparse_parity(n: usize, k: usize) -> Result<Self, SourceError> {
        let s = SourceSpec::SparseParity { n, k };
        s.validate()?;
        Ok(s)
    }

    pub fn local_prg(n: usize, predicate: Predicate) -> Result<Self, SourceError> {
        let s = SourceSpec::LocalPrg {
            n,
            predicate: Arc::new(predicate),
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<(), SourceError> {
        match self {
            SourceSpec::Subspace { n, k } if *n >= 1 && k <= n => Ok(()),
            SourceSpec::SparseParity { n, k } if *k > 0 && k < n => Ok(()),
            SourceSpec::LocalPrg { n, predicate } if predicate.arity() <= *n => Ok(()),
            other => Err(SourceError::InvalidSpec(format!("{other:?}"))),
        }
    }

    pub fn family(&self) -> Family {
        match self {
            SourceSpec::Subspace { .. } => Family::Subspace,
            SourceSpec::SparseParity { .. } => Family::SparseParity,
            SourceSpec::LocalPrg { .. } => Family::LocalPrg,
        }
    }

    pub fn n(&self) -> usize {
        match self {
            SourceSpec::Subspace { n, .. } | SourceSpec::SparseParity { n, .. } | SourceSpec::LocalPrg { n, .. } => *n,
        }
    }

    /// Subspace dimension, expected sparsity, or predicate arity.
    pub fn k(&self) -> usize {
        match self {
            SourceSpec::Subspace { k, .. } | SourceSpec::SparseParity { k, .. } => *k,
            SourceSpec::LocalPrg { predicate, .. } => predicate.arity(),
        }
    }

    pub fn predicate(&self) -> Option<&Predicate> {
        match self {
            SourceSpec::LocalPrg { predicate, .. } => Some(predicate),
            _ => None,
        }
    }

    /// Draws a uniformly random hidden seed.
    pub fn draw_hidden<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Hidden, SourceError> {
        Ok(match self {
            SourceSpec::Subspace { n, k } => Hidden::Basis(sample_subspace_basis(*n, *k, rng)?),
            SourceSpec::SparseParity { n, .. } | SourceSpec::LocalPrg { n, .. } => {
                Hidden::Seed(BitString::random(*n, rng))
            }
        })
    }

    /// Number of distinct sample encodings (see [`Sample::encode`]), when it
    /// fits in a `u64`.
    pub fn alphabet_size(&self) -> Option<u64> {
        match self {
            SourceSpec::Subspace { n, .. } => 1u64.checked_shl(*n as u32),
            SourceSpec::SparseParity { n, .. } => 1u64.checked_shl(*n as u32 + 1),
            SourceSpec::LocalPrg { n, predicate } => {
                let c = OrderedTuple::count(*n, predicate.arity()) * 2;
                u64::try_from(c).ok()
            }
        }
    }
}

/// The hidden ground truth of a planted instance.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Hidden {
    /// Basis of the hidden subspace (linearly independent vectors).
    Basis(Vec<BitString>),
    /// The seed `x`.
    Seed(BitString),
}

/// One draw of a distinguishing problem: the truth bit and, when planted,
/// the hidden seed.
#[derive(Debug, Clone)]
pub struct Instance {
    spec: SourceSpec,
    hidden: Option<Hidden>,
}

impl Instance {
    /// `b` uniform; when `b = 1` a uniform hidden seed.
    pub fn draw<R: Rng + ?Sized>(spec: &SourceSpec, rng: &mut R) -> Result<Self, SourceError> {
        spec.validate()?;
        if rng.gen::<bool>() {
            Self::planted_random(spec, rng)
        } else {
            Ok(Self::null(spec))
        }
    }

    pub fn null(spec: &SourceSpec) -> Self {
        Self {
            spec: spec.clone(),
            hidden: None,
        }
    }

    pub fn planted_random<R: Rng + ?Sized>(spec: &SourceSpec, rng: &mut R) -> Result<Self, SourceError> {
        let hidden = spec.draw_hidden(rng)?;
        Ok(Self {
            spec: spec.clone(),
            hidden: Some(hidden),
        })
    }

    pub fn planted(spec: &SourceSpec, hidden: Hidden) -> Result<Self, SourceError> {
        let n = spec.n();
        let ok = match (spec, &hidden) {
            (SourceSpec::Subspace { k, .. }, Hidden::Basis(b)) => b.len() == *k && b.iter().all(|v| v.len() == n),
            (SourceSpec::SparseParity { .. } | SourceSpec::LocalPrg { .. }, Hidden::Seed(x)) => x.len() == n,
            _ => false,
        };
        if !ok {
            return Err(SourceError::HiddenMismatch);
        }
        Ok(Self {
            spec: spec.clone(),
            hidden: Some(hidden),
        })
    }

    pub fn spec(&self) -> &SourceSpec {
        &self.spec
    }

    /// The truth bit: `true` for planted.
    pub fn is_planted(&self) -> bool {
        self.hidden.is_some()
    }

    pub fn truth_bit(&self) -> u8 {
        self.is_planted() as u8
    }

    pub fn hidden(&self) -> Option<&Hidden> {
        self.hidden.as_ref()
    }

    /// One independent sample.
    pub fn next_sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Sample {
        match &self.spec {
            SourceSpec::Subspace { n, .. } => match &self.hidden {
                None => Sample::Vector(BitString::random(*n, rng)),
                Some(Hidden::Basis(basis)) => {
                    let mut u = BitString::zeros(*n);
                    for v in basis {
                        if rng.gen::<bool>() {
                            u ^= v;
                        }
                    }
                    Sample::Vector(u)
                }
                Some(Hidden::Seed(_)) => unreachable!("validated at construction"),
            },
            SourceSpec::SparseParity { n, k } => {
                let a = sample_sparse_vector(*n, *k as f64 / *n as f64, rng).expect("k < n");
                let b = match &self.hidden {
                    None => rng.gen::<bool>(),
                    Some(Hidden::Seed(x)) => a.dot(x),
                    Some(Hidden::Basis(_)) => unreachable!("validated at construction"),
                };
                Sample::Equation { a, b }
            }
            SourceSpec::LocalPrg { n, predicate } => local_sample(*n, predicate, self.seed(), rng),
        }
    }

    fn seed(&self) -> Option<&BitString> {
        match &self.hidden {
            Some(Hidden::Seed(x)) => Some(x),
            _ => None,
        }
    }

    /// A lazy, unbounded stream of samples.
    pub fn stream<R: Rng>(&self, rng: R) -> SampleStream<'_, R> {
        SampleStream { inst: self, rng }
    }
}

fn local_sample<R: Rng + ?Sized>(n: usize, p: &Predicate, seed: Option<&BitString>, rng: &mut R) -> Sample {
    let a = sample_ordered_tuple(n, p.arity(), rng).expect("arity <= n");
    let b = match seed {
        None => rng.gen::<bool>(),
        Some(x) => p.eval_index(project(x, &a).expect("tuple within seed").to_u64() as usize),
    };
    Sample::Local { a, b }
}

/// Unbounded iterator over an instance's samples.
pub struct SampleStream<'a, R> {
    inst: &'a Instance,
    rng: R,
}

impl<R: Rng> Iterator for SampleStream<'_, R> {
    type Item = Sample;

    fn next(&mut self) -> Option<Sample> {
        Some(self.inst.next_sample(&mut self.rng))
    }
}

/// `m` local-PRG samples: the first `j` planted under `x`, the rest null.
pub struct HybridStream<R> {
    n: usize,
    predicate: Arc<Predicate>,
    seed: BitString,
    j: usize,
    m: usize,
    t: usize,
    rng: R,
}

pub fn hybrid_stream<R: Rng>(
    x: &BitString,
    j: usize,
    m: usize,
    spec: &SourceSpec,
    rng: R,
) -> Result<HybridStream<R>, SourceError> {
    let SourceSpec::LocalPrg { n, predicate } = spec else {
        return Err(SourceError::InvalidSpec(
            "hybrid streams need a local_prg source".into(),
        ));
    };
    spec.validate()?;
    if j > m {
        return Err(SourceError::HybridSplit { j, m });
    }
    if x.len() != *n {
        return Err(SourceError::HiddenMismatch);
    }
    Ok(HybridStream {
        n: *n,
        predicate: predicate.clone(),
        seed: x.clone(),
        j,
        m,
        t: 0,
        rng,
    })
}

impl<R: Rng> Iterator for HybridStream<R> {
    type Item = Sample;

    fn next(&mut self) -> Option<Sample> {
        if self.t == self.m {
            return None;
        }
        let planted = self.t < self.j;
        self.t += 1;
        Some(local_sample(
            self.n,
            &self.predicate,
            planted.then_some(&self.seed),
            &mut self.rng,
        ))
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let left = self.m - self.t;
        (left, Some(left))
    }
}

/// One stream element.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Sample {
    Vector(BitString),
    Equation { a: BitString, b: bool },
    Local { a: OrderedTuple, b: bool },
}

impl Sample {
    pub fn family(&self) -> Family {
        match self {
            Sample::Vector(_) => Family::Subspace,
            Sample::Equation { .. } => Family::SparseParity,
            Sample::Local { .. } => Family::LocalPrg,
        }
    }

    /// Canonical integer code used as the branching-program alphabet:
    /// * vector `u`: its big-endian value;
    /// * equation `(a, b)`: `2 * value(a) + b`;
    /// * local `(a, b)`: `2 * rank(a) + b` with the lexicographic tuple rank.
    pub fn encode(&self) -> u64 {
        match self {
            Sample::Vector(u) => u.to_u64(),
            Sample::Equation { a, b } => (a.to_u64() << 1) | *b as u64,
            Sample::Local { a, b } => {
                let r = u64::try_from(a.rank()).expect("tuple rank fits in u64");
                (r << 1) | *b as u64
            }
        }
    }

    /// Inverse of [`Sample::encode`] for a given source.
    pub fn decode(code: u64, spec: &SourceSpec) -> Result<Sample, SourceError> {
        let too_big = || SourceError::InvalidSpec(format!("code {code} outside the alphabet"));
        if let Some(size) = spec.alphabet_size() {
            if code >= size {
                return Err(too_big());
            }
        }
        Ok(match spec {
            SourceSpec::Subspace { n, .. } => Sample::Vector(BitString::from_u64(code, *n)),
            SourceSpec::SparseParity { n, .. } => Sample::Equation {
                a: BitString::from_u64(code >> 1, *n),
                b: code & 1 == 1,
            },
            SourceSpec::LocalPrg { n, predicate } => Sample::Local {
                a: OrderedTuple::unrank((code >> 1) as u128, *n, predicate.arity())?,
                b: code & 1 == 1,
            },
        })
    }

    /// One line of the sample dump format.
    pub fn to_dump_line(&self) -> String {
        match self {
            Sample::Vector(u) => format!("u={}", u.to_hex()),
            Sample::Equation { a, b } => format!("a={} b={}", a.to_hex(), *b as u8),
            Sample::Local { a, b } => format!("a={a} b={}", *b as u8),
        }
    }

    pub fn parse_dump_line(line: &str, family: Family, n: usize) -> Result<Sample, String> {
        let mut fields = line.split_whitespace();
        let mut field = |key: &str| -> Result<&str, String> {
            let f = fields.next().ok_or_else(|| format!("missing field {key}"))?;
            f.strip_prefix(key)
                .and_then(|r| r.strip_prefix('='))
                .ok_or_else(|| format!("expected {key}=..., found {f:?}"))
        };
        let parse_bit = |s: &str| match s {
            "0" => Ok(false),
            "1" => Ok(true),
            other => Err(format!("invalid bit {other:?}")),
        };
        let sample = match family {
            Family::Subspace => Sample::Vector(BitString::from_hex(field("u")?, n).map_err(|e| e.to_string())?),
            Family::SparseParity => {
                let a = BitString::from_hex(field("a")?, n).map_err(|e| e.to_string())?;
                let b = parse_bit(field("b")?)?;
                Sample::Equation { a, b }
            }
            Family::LocalPrg => {
                let idx = field("a")?
                    .split(',')
                    .map(|t| t.parse::<usize>().map_err(|_| format!("invalid index {t:?}")))
                    .collect::<Result<Vec<_>, _>>()?;
                let a = OrderedTuple::from_one_based(&idx, n).map_err(|e| e.to_string())?;
                let b = parse_bit(field("b")?)?;
                Sample::Local { a, b }
            }
        };
        if fields.next().is_some() {
            return Err("unexpected trailing field".into());
        }
        Ok(sample)
    }
}

/// Writes samples in the dump format, one per line.
pub fn write_dump<'a>(samples: impl IntoIterator<Item = &'a Sample>) -> String {
    let mut out = String::new();
    for s in samples {
        out.push_str(&s.to_dump_line());
        out.push('\n');
    }
    out
}

pub fn read_dump(text: &str, family: Family, n: usize) -> Result<Vec<Sample>, SourceError> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            Sample::parse_dump_line(l, family, n).map_err(|message| SourceError::Dump { line: i + 1, message })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;

    #[test]
    fn spec_validation() {
        assert!(SourceSpec::subspace(5, 5).is_ok());
        assert!(SourceSpec::subspace(5, 6).is_err());
        assert!(SourceSpec::sparse_parity(5, 0).is_err());
        assert!(SourceSpec::sparse_parity(5, 5).is_err());
        assert!(SourceSpec::local_prg(2, Predicate::builtin("xor", 3).unwrap()).is_err());
    }

    #[test]
    fn null_has_no_hidden() {
        let spec = SourceSpec::subspace(6, 2).unwrap();
        let inst = Instance::null(&spec);
        assert!(!inst.is_planted());
        assert!(inst.hidden().is_none());
        let mut rng = rng_from_seed(1);
        for _ in 0..200 {
            let i = Instance::draw(&spec, &mut rng).unwrap();
            assert_eq!(i.is_planted(), i.hidden().is_some());
        }
    }

    #[test]
    fn planted_rejects_mismatched_hidden() {
        let spec = SourceSpec::sparse_parity(6, 2).unwrap();
        assert!(Instance::planted(&spec, Hidden::Seed(BitString::zeros(5))).is_err());
        assert!(Instance::planted(&spec, Hidden::Basis(vec![])).is_err());
    }

    #[test]
    fn sparse_planted_zero_seed_gives_zero_labels() {
        let spec = SourceSpec::sparse_parity(12, 3).unwrap();
        let inst = Instance::planted(&spec, Hidden::Seed(BitString::zeros(12))).unwrap();
        for s in inst.stream(rng_from_seed(2)).take(1000) {
            let Sample::Equation { b, .. } = s else { panic!() };
            assert!(!b);
        }
    }

    #[test]
    fn subspace_single_vector_span() {
        let spec = SourceSpec::subspace(8, 1).unwrap();
        let e1 = BitString::unit(8, 0);
        let inst = Instance::planted(&spec, Hidden::Basis(vec![e1.clone()])).unwrap();
        let mut ones = 0;
        for s in inst.stream(rng_from_seed(3)).take(10_000) {
            let Sample::Vector(u) = s else { panic!() };
            assert!(u.is_zero() || u == e1);
            ones += (u == e1) as usize;
        }
        // 5 sigma of Binomial(10^4, 1/2) is 250
        assert!((ones as i64 - 5000).abs() <= 250, "{ones}");
    }

    #[test]
    fn hybrid_split_bounds() {
        let spec = SourceSpec::local_prg(8, Predicate::builtin("xor", 3).unwrap()).unwrap();
        let x = BitString::ones(8);
        assert!(matches!(
            hybrid_stream(&x, 5, 4, &spec, rng_from_seed(0)),
            Err(SourceError::HybridSplit { j: 5, m: 4 })
        ));
        let s: Vec<_> = hybrid_stream(&x, 0, 4, &spec, rng_from_seed(0)).unwrap().collect();
        assert_eq!(s.len(), 4);
    }

    #[test]
    fn hybrid_first_sample_all_ones_seed() {
        // P = XOR_k on 1^k is k mod 2
        for k in 1..=5 {
            let spec = SourceSpec::local_prg(9, Predicate::builtin("xor", k).unwrap()).unwrap();
            let x = BitString::ones(9);
            for seed in 0..20 {
                let first = hybrid_stream(&x, 1, 3, &spec, rng_from_seed(seed))
                    .unwrap()
                    .next()
                    .unwrap();
                let Sample::Local { b, .. } = first else { panic!() };
                assert_eq!(b, k % 2 == 1);
            }
        }
    }

    #[test]
    fn encode_decode_round_trip() {
        let mut rng = rng_from_seed(9);
        let specs = [
            SourceSpec::subspace(10, 3).unwrap(),
            SourceSpec::sparse_parity(10, 3).unwrap(),
            SourceSpec::local_prg(10, Predicate::builtin("maj", 3).unwrap()).unwrap(),
        ];
        for spec in &specs {
            let inst = Instance::draw(spec, &mut rng).unwrap();
            for s in inst.stream(rng_from_seed(4)).take(200) {
                let code = s.encode();
                assert!(code < spec.alphabet_size().unwrap());
                assert_eq!(Sample::decode(code, spec).unwrap(), s);
            }
        }
    }

    #[test]
    fn dump_format() {
        let v = Sample::Vector("1011000001".parse().unwrap());
        assert_eq!(v.to_dump_line(), "u=b04");
        let e = Sample::Equation {
            a: "0100".parse().unwrap(),
            b: true,
        };
        assert_eq!(e.to_dump_line(), "a=4 b=1");
        let l = Sample::Local {
            a: OrderedTuple::from_one_based(&[3, 1, 7], 8).unwrap(),
            b: false,
        };
        assert_eq!(l.to_dump_line(), "a=3,1,7 b=0");
        let text = write_dump([&l, &l]);
        assert_eq!(read_dump(&text, Family::LocalPrg, 8).unwrap(), vec![l.clone(), l]);
        let err = read_dump("a=1,1 b=0\n", Family::LocalPrg, 8).unwrap_err();
        assert!(matches!(err, SourceError::Dump { line: 1, .. }));
        assert!(read_dump("a=4 b=2\n", Family::SparseParity, 4).is_err());
    }
}

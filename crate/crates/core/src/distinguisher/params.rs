use std::collections::BTreeMap;
use std::sync::Arc;

use super::local::{self, LocalPrefix};
use super::sparse::{self, SparseFixedQuery, SparseSat};
use super::{Blind, CoinFlip, Distinguisher, DistinguisherError, OrthogonalTester, RankThreshold, SubspaceRank};
use crate::source::{Family, SourceSpec};

/// Flat numeric parameters, as given on the command line.
pub type ParamMap = BTreeMap<String, f64>;

/// Builds a fresh distinguisher from a per-trial seed (used only by
/// distinguishers with internal randomness).
pub type Factory = Arc<dyn Fn(u64) -> Box<dyn Distinguisher> + Send + Sync>;

pub const DISTINGUISHER_NAMES: &[&str] = &[
    "subspace_rank", "orthogonal_tester", "rank_threshold", "sparse_sat", "sparse_fixed_query", "local_prefix",
    "blind", "coin",
];

struct Params<'a> {
    name: &'a str,
    map: &'a ParamMap,
}

impl Params<'_> {
    fn int(&self, key: &str, default: Option<u64>) -> Result<u64, DistinguisherError> {
        match self.map.get(key) {
            None => default.ok_or_else(|| {
                DistinguisherError::InvalidParameter(format!("{} requires parameter `{key}`", self.name))
            }),
            Some(&v) if v >= 0.0 && v.fract() == 0.0 && v < 2f64.powi(53) => Ok(v as u64),
            Some(&v) => Err(DistinguisherError::InvalidParameter(format!(
                "{}: `{key}` must be a non-negative integer, got {v}",
                self.name
            ))),
        }
    }

    fn usize(&self, key: &str, default: Option<usize>) -> Result<usize, DistinguisherError> {
        Ok(self.int(key, default.map(|d| d as u64))? as usize)
    }

    fn only(&self, allowed: &[&str]) -> Result<(), DistinguisherError> {
        match self.map.keys().find(|k| !allowed.contains(&k.as_str())) {
            Some(k) => Err(DistinguisherError::InvalidParameter(format!(
                "{} does not take parameter `{k}` (accepted: {})",
                self.name,
                allowed.join(", ")
            ))),
            None => Ok(()),
        }
    }
}

fn need_family(name: &'static str, spec: &SourceSpec, family: Family) -> Result<(), DistinguisherError> {
    if spec.family() == family {
        Ok(())
    } else {
        Err(DistinguisherError::WrongFamily {
            name,
            expected: family,
            got: spec.family(),
        })
    }
}

/// Validates `params` against the named distinguisher and `spec`, returning
/// a factory. Parameter defaults follow each constructor's documentation;
/// `k` defaults to the source's `k`.
pub fn build_factory(name: &str, params: &ParamMap, spec: &SourceSpec) -> Result<Factory, DistinguisherError> {
    let p = Params { name, map: params };
    let n = spec.n();
    let factory: Factory = match name {
        "subspace_rank" => {
            need_family("subspace_rank", spec, Family::Subspace)?;
            p.only(&["k", "window"])?;
            let k = p.usize("k", Some(spec.k()))?;
            let window = p.usize("window", Some(8 * k))?;
            SubspaceRank::new(k, n)?;
            let proto = SubspaceRank::with_window(k, n, window)?;
            Arc::new(move |_| Box::new(proto.clone()))
        }
        "orthogonal_tester" => {
            need_family("orthogonal_tester", spec, Family::Subspace)?;
            p.only(&["k", "iterations", "per_iter"])?;
            let k = p.usize("k", Some(spec.k()))?;
            if k >= 40 {
                return Err(DistinguisherError::InvalidParameter(format!("k={k} too large")));
            }
            let iterations = p.usize("iterations", Some(10 << k))?;
            let per_iter = p.usize("per_iter", Some(2 * k))?;
            OrthogonalTester::with_params(n, iterations, per_iter, 0)?;
            Arc::new(move |seed| {
                Box::new(OrthogonalTester::with_params(n, iterations, per_iter, seed).expect("validated"))
            })
        }
        "rank_threshold" => {
            need_family("rank_threshold", spec, Family::Subspace)?;
            p.only(&["r", "window", "n_eff"])?;
            let r = p.usize("r", Some(spec.k()))?;
            let window = p.usize("window", Some(8 * (r + 1)))?;
            let n_eff = p.usize("n_eff", Some(n))?;
            let proto = RankThreshold::new(r, window, n, n_eff)?;
            Arc::new(move |_| Box::new(proto.clone()))
        }
        "sparse_sat" => {
            need_family("sparse_sat", spec, Family::SparseParity)?;
            p.only(&["m0"])?;
            let proto = SparseSat::new(n, p.usize("m0", Some(4 * n))?)?;
            Arc::new(move |_| Box::new(proto.clone()))
        }
        "sparse_fixed_query" => {
            need_family("sparse_fixed_query", spec, Family::SparseParity)?;
            p.only(&["quota", "max_samples"])?;
            let quota = p.int("quota", Some(5))?;
            let default = sparse::default_max_samples(n, spec.k(), quota).ok();
            let proto = SparseFixedQuery::new(n, quota, p.int("max_samples", default)?)?;
            Arc::new(move |_| Box::new(proto.clone()))
        }
        "local_prefix" => {
            need_family("local_prefix", spec, Family::LocalPrg)?;
            p.only(&["w", "count", "max_samples"])?;
            let predicate = Arc::new(spec.predicate().expect("local source").clone());
            let k = predicate.arity();
            let w = p.usize("w", Some((k + 8).min(n).min(local::MAX_WINDOW)))?;
            let count = p.usize("count", Some(2 * w))?;
            let max_samples = p.int("max_samples", Some(local::default_max_samples(n, k, w, count)))?;
            let proto = LocalPrefix::new(n, w, count, predicate, max_samples)?;
            Arc::new(move |_| Box::new(proto.clone()))
        }
        "blind" => {
            p.only(&["output"])?;
            let output = match p.int("output", Some(0))? {
                0 => false,
                1 => true,
                v => {
                    return Err(DistinguisherError::InvalidParameter(format!(
                        "blind output must be 0 or 1, got {v}"
                    )))
                }
            };
            Arc::new(move |_| Box::new(Blind::new(output)))
        }
        "coin" => {
            p.only(&[])?;
            Arc::new(|seed| Box::new(CoinFlip::new(seed)))
        }
        other => {
            return Err(DistinguisherError::InvalidParameter(format!(
                "unknown distinguisher `{other}` (known: {})",
                DISTINGUISHER_NAMES.join(", ")
            )))
        }
    };
    Ok(factory)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::predicate::Predicate;

    fn map(kv: &[(&str, f64)]) -> ParamMap {
        kv.iter().map(|(k, v)| (k.to_string(), *v)).collect()
    }

    #[test]
    fn every_name_builds_for_its_family() {
        let sub = SourceSpec::subspace(16, 3).unwrap();
        let sp = SourceSpec::sparse_parity(16, 2).unwrap();
        let lp = SourceSpec::local_prg(16, Predicate::builtin("xor", 2).unwrap()).unwrap();
        for name in DISTINGUISHER_NAMES {
            let spec = match *name {
                "sparse_sat" | "sparse_fixed_query" => &sp,
                "local_prefix" => &lp,
                _ => &sub,
            };
            let f = build_factory(name, &ParamMap::new(), spec).unwrap();
            assert_eq!(f(1).name(), *name);
        }
    }

    #[test]
    fn parameters_override_defaults() {
        let spec = SourceSpec::subspace(16, 3).unwrap();
        let f = build_factory(
            "orthogonal_tester",
            &map(&[("iterations", 7.0), ("per_iter", 2.0)]),
            &spec,
        )
        .unwrap();
        assert_eq!(f(0).stream_length(), 14);
        let f = build_factory("subspace_rank", &map(&[("window", 10.0)]), &spec).unwrap();
        assert_eq!(f(0).stream_length(), 10);
    }

    #[test]
    fn bad_parameters_are_rejected() {
        let spec = SourceSpec::subspace(16, 3).unwrap();
        assert!(build_factory("subspace_rank", &map(&[("bogus", 1.0)]), &spec).is_err());
        assert!(build_factory("subspace_rank", &map(&[("k", 2.5)]), &spec).is_err());
        assert!(build_factory("sparse_sat", &ParamMap::new(), &spec).is_err());
        assert!(build_factory("nope", &ParamMap::new(), &spec).is_err());
        assert!(build_factory("blind", &map(&[("output", 2.0)]), &spec).is_err());
    }
}

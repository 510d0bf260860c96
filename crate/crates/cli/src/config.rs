use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde_json::Value;
use streamdist::distinguisher::ParamMap;
use streamdist::predicate::Predicate;

use crate::error::CliError;
use crate::output::Format;

/// Flat `key=value` parameters. Values stay as text until a command asks
/// for a number, a list or a string.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Params {
    map: BTreeMap<String, String>,
}

impl Params {
    pub fn insert(&mut self, key: &str, value: &str) {
        self.map.insert(key.to_string(), value.to_string());
    }

    pub fn parse_assignment(&mut self, text: &str) -> Result<(), CliError> {
        let (k, v) = text
            .split_once('=')
            .ok_or_else(|| CliError::usage(format!("parameter {text:?} is not of the form key=value")))?;
        let k = k.trim();
        if k.is_empty() {
            return Err(CliError::usage(format!("parameter {text:?} has an empty key")));
        }
        self.insert(k, v.trim());
        Ok(())
    }

    pub fn contains(&self, key: &str) -> bool {
        self.map.contains_key(key)
    }

    pub fn str(&self, key: &str) -> Option<&str> {
        self.map.get(key).map(String::as_str)
    }

    pub fn f64(&self, key: &str) -> Result<Option<f64>, CliError> {
        self.str(key)
            .map(|v| {
                v.parse::<f64>()
                    .map_err(|_| CliError::usage(format!("parameter `{key}` must be a number, got {v:?}")))
            })
            .transpose()
    }

    pub fn f64_or(&self, key: &str, default: f64) -> Result<f64, CliError> {
        Ok(self.f64(key)?.unwrap_or(default))
    }

    pub fn uint(&self, key: &str) -> Result<Option<u64>, CliError> {
        self.str(key).map(|v| parse_uint(key, v)).transpose()
    }

    pub fn uint_or(&self, key: &str, default: u64) -> Result<u64, CliError> {
        Ok(self.uint(key)?.unwrap_or(default))
    }

    pub fn usize_or(&self, key: &str, default: usize) -> Result<usize, CliError> {
        Ok(self.uint_or(key, default as u64)? as usize)
    }

    /// A comma-separated list of non-negative integers.
    pub fn uint_list_or(&self, key: &str, default: &[u64]) -> Result<Vec<u64>, CliError> {
        match self.str(key) {
            None => Ok(default.to_vec()),
            Some(v) => split_list(v).map(|s| parse_uint(key, s)).collect(),
        }
    }

    pub fn f64_list_or(&self, key: &str, default: &[f64]) -> Result<Vec<f64>, CliError> {
        match self.str(key) {
            None => Ok(default.to_vec()),
            Some(v) => split_list(v)
                .map(|s| {
                    s.parse::<f64>()
                        .map_err(|_| CliError::usage(format!("parameter `{key}` must list numbers, got {s:?}")))
                })
                .collect(),
        }
    }

    pub fn str_list_or<'a>(&'a self, key: &str, default: &'a str) -> Vec<&'a str> {
        split_list(self.str(key).unwrap_or(default)).collect()
    }

    /// Every numeric parameter except `skip`, for a distinguisher factory.
    pub fn numeric_except(&self, skip: &[&str]) -> Result<ParamMap, CliError> {
        self.map
            .iter()
            .filter(|(k, _)| !skip.contains(&k.as_str()))
            .map(|(k, v)| {
                v.parse::<f64>()
                    .map(|x| (k.clone(), x))
                    .map_err(|_| CliError::usage(format!("parameter `{k}` must be a number, got {v:?}")))
            })
            .collect()
    }

    /// Sorted `key=value` pairs joined by `;`.
    pub fn echo(&self) -> String {
        self.map
            .iter()
            .map(|(k, v)| format!("{k}={v}"))
            .collect::<Vec<_>>()
            .join(";")
    }
}

pub fn split_list(v: &str) -> impl Iterator<Item = &str> {
    v.split(',').map(str::trim).filter(|s| !s.is_empty())
}

fn parse_uint(key: &str, v: &str) -> Result<u64, CliError> {
    if let Ok(x) = v.parse::<u64>() {
        return Ok(x);
    }
    // accept integral floats such as "16.0" or "1e3"
    match v.parse::<f64>() {
        Ok(x) if x >= 0.0 && x.fract() == 0.0 && x < 2f64.powi(53) => Ok(x as u64),
        _ => Err(CliError::usage(format!(
            "parameter `{key}` must be a non-negative integer, got {v:?}"
        ))),
    }
}

/// A predicate given as `name`, `name:k` or a path to a text file.
/// `default_k` supplies the arity when a bare name is given.
pub fn resolve_predicate(spec: &str, default_k: Option<usize>) -> Result<Predicate, CliError> {
    let path = Path::new(spec);
    if path.is_file() {
        let text = std::fs::read_to_string(path)?;
        return Predicate::parse_text(&text).map_err(|e| CliError::usage(format!("{}: {e}", path.display())));
    }
    let (name, k) = match spec.split_once(':') {
        Some((name, k)) => {
            let k = k
                .parse()
                .map_err(|_| CliError::usage(format!("predicate arity {k:?} is not an integer")))?;
            (name, k)
        }
        None => (
            spec,
            default_k.ok_or_else(|| CliError::usage(format!("predicate {spec:?} needs an arity, e.g. {spec}:3")))?,
        ),
    };
    Ok(Predicate::builtin(name, k)?)
}

/// Options shared by every subcommand after merging the config file with
/// the command line (the command line wins).
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub seed: u64,
    pub trials: Option<u64>,
    pub format: Format,
    pub out: Option<PathBuf>,
    pub params: Params,
}

impl RunConfig {
    pub fn trials_or(&self, default: u64) -> u64 {
        self.trials.unwrap_or(default)
    }
}

#[derive(Debug, Default)]
pub struct FileConfig {
    pub seed: Option<u64>,
    pub trials: Option<u64>,
    pub format: Option<Format>,
    pub out: Option<PathBuf>,
    pub params: Params,
}

fn json_scalar(key: &str, v: &Value) -> Result<String, CliError> {
    match v {
        Value::Number(x) => Ok(x.to_string()),
        Value::String(s) => Ok(s.clone()),
        Value::Bool(b) => Ok((*b as u8).to_string()),
        Value::Array(items) => Ok(items
            .iter()
            .map(|i| json_scalar(key, i))
            .collect::<Result<Vec<_>, _>>()?
            .join(",")),
        _ => Err(CliError::usage(format!(
            "config parameter `{key}` must be a number, string or list"
        ))),
    }
}

fn json_uint(key: &str, v: &Value) -> Result<u64, CliError> {
    v.as_u64()
        .ok_or_else(|| CliError::usage(format!("config field `{key}` must be a non-negative integer")))
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text).map_err(|e| match e {
            CliError::Usage(m) => CliError::Usage(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        let root: Value = serde_json::from_str(text).map_err(|e| CliError::usage(format!("invalid JSON: {e}")))?;
        let Value::Object(obj) = root else {
            return Err(CliError::usage("config must be a JSON object"));
        };
        let mut cfg = FileConfig::default();
        for (key, v) in &obj {
            match key.as_str() {
                "seed" => cfg.seed = Some(json_uint(key, v)?),
                "trials" => cfg.trials = Some(json_uint(key, v)?),
                "format" => {
                    cfg.format = Some(match v.as_str() {
                        Some("csv") => Format::Csv,
                        Some("json") => Format::Json,
                        _ => return Err(CliError::usage("config field `format` must be \"csv\" or \"json\"")),
                    })
                }
                "out" => {
                    cfg.out = Some(PathBuf::from(
                        v.as_str()
                            .ok_or_else(|| CliError::usage("config field `out` must be a string"))?,
                    ))
                }
                "params" => {
                    let Value::Object(ps) = v else {
                        return Err(CliError::usage("config field `params` must be an object"));
                    };
                    for (k, pv) in ps {
                        cfg.params.insert(k, &json_scalar(k, pv)?);
                    }
                }
                other => return Err(CliError::usage(format!("unknown config field `{other}`"))),
            }
        }
        Ok(cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_and_lists() {
        let mut p = Params::default();
        p.parse_assignment("n=16").unwrap();
        p.parse_assignment("grid = 1,2, 4").unwrap();
        p.parse_assignment("predicate=xor:2").unwrap();
        assert_eq!(p.uint_or("n", 0).unwrap(), 16);
        assert_eq!(p.uint_list_or("grid", &[]).unwrap(), vec![1, 2, 4]);
        assert!(p.uint("predicate").is_err());
        assert_eq!(p.echo(), "grid=1,2, 4;n=16;predicate=xor:2");
        assert!(p.parse_assignment("novalue").is_err());
        let m = p.numeric_except(&["grid", "predicate"]).unwrap();
        assert_eq!(m.get("n"), Some(&16.0));
    }

    #[test]
    fn config_file() {
        let cfg = FileConfig::parse(
            r#"{"seed": 9, "trials": 50, "format": "json", "params": {"n": 12, "l": [2, 3], "p": "maj:3"}}"#,
        )
        .unwrap();
        assert_eq!(cfg.seed, Some(9));
        assert_eq!(cfg.trials, Some(50));
        assert_eq!(cfg.format, Some(Format::Json));
        assert_eq!(cfg.params.str("l"), Some("2,3"));
        assert!(FileConfig::parse(r#"{"sede": 1}"#).is_err());
        assert!(FileConfig::parse("[1]").is_err());
    }

    #[test]
    fn predicates_resolve() {
        assert_eq!(resolve_predicate("xor:3", None).unwrap().arity(), 3);
        assert_eq!(resolve_predicate("maj", Some(5)).unwrap().arity(), 5);
        assert!(resolve_predicate("maj", None).is_err());
        assert!(resolve_predicate("nope:2", None).is_err());
    }
}

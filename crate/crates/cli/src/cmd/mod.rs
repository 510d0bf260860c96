pub mod distinguish;
pub mod predicate;
pub mod reduce;
pub mod sweep;
pub mod verify;

use streamdist::source::SourceSpec;

use crate::config::{resolve_predicate, Params};
use crate::error::CliError;
use crate::output::Table;

/// A rendered table plus the verdict for commands that assert something.
/// `pass: None` means the command only reports.
pub struct Report {
    pub table: Table,
    pub pass: Option<bool>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum SweepAxis {
    Memory,
    Samples,
    Trials,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum VerifyMode {
    Spafour,
    #[value(name = "cl_spafour")]
    ClSpafour,
    #[value(name = "cl_spafourpred")]
    ClSpafourpred,
    Minent,
    Telescope,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum ReduceWhich {
    Parity,
    Sparse,
}

/// Parameters consumed by the source rather than the distinguisher.
pub const SOURCE_KEYS: &[&str] = &["n", "k", "predicate"];

/// Builds the source from `n`, `k` and, for `local_prg`, `predicate`
/// (`name`, `name:k` or a file; a bare name takes its arity from `k`).
pub fn source_spec(source: &str, params: &Params) -> Result<SourceSpec, CliError> {
    let n = params.usize_or("n", 16)?;
    let spec = match source {
        "subspace" => SourceSpec::subspace(n, params.usize_or("k", 4)?)?,
        "sparse_parity" => SourceSpec::sparse_parity(n, params.usize_or("k", 4)?)?,
        "local_prg" => {
            let k = params.usize_or("k", 2)?;
            let p = resolve_predicate(params.str("predicate").unwrap_or("xor"), Some(k))?;
            if params.contains("k") && p.arity() != k {
                return Err(CliError::usage(format!("predicate has arity {}, but k={k}", p.arity())));
            }
            SourceSpec::local_prg(n, p)?
        }
        other => {
            return Err(CliError::usage(format!(
                "unknown source {other:?} (expected subspace, sparse_parity or local_prg)"
            )))
        }
    };
    Ok(spec)
}

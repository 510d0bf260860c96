use streamdist::distinguisher::build_factory;
use streamdist::spectral::{estimate_success, SuccessEstimate};

use super::{source_spec, Report, SOURCE_KEYS};
use crate::config::RunConfig;
use crate::error::CliError;
use crate::output::{Cell, Table};

/// Keys that steer the run instead of configuring the distinguisher.
const CONTROL_KEYS: &[&str] = &["target", "stream_len", "max_null_accept", "min_planted_accept"];

pub const ESTIMATE_COLUMNS: &[&str] = &[
    "trials", "success", "ci_low", "ci_high", "null_accept", "null_ci_low", "null_ci_high", "planted_accept",
    "planted_ci_low", "planted_ci_high", "mean_samples", "max_memory_bits", "memory_bound", "paper_width_bits",
];

pub fn estimate_cells(e: &SuccessEstimate) -> Vec<Cell> {
    vec![
        e.success.trials.into(),
        e.success.point.into(),
        e.success.ci_low.into(),
        e.success.ci_high.into(),
        e.null_accept.point.into(),
        e.null_accept.ci_low.into(),
        e.null_accept.ci_high.into(),
        e.planted_accept.point.into(),
        e.planted_accept.ci_low.into(),
        e.planted_accept.ci_high.into(),
        e.mean_samples.into(),
        e.max_memory_bits.into(),
        e.memory_bound.into(),
        e.paper_width_bits.into(),
    ]
}

/// Runs one estimate. Optional checks: `target` (success CI low at least
/// this), `max_null_accept` (null acceptance CI high at most this) and
/// `min_planted_accept` (planted acceptance rate at least this).
pub fn run(cfg: &RunConfig, name: &str, source: &str) -> Result<Report, CliError> {
    let spec = source_spec(source, &cfg.params)?;
    let skip: Vec<&str> = SOURCE_KEYS.iter().chain(CONTROL_KEYS).copied().collect();
    let factory = build_factory(name, &cfg.params.numeric_except(&skip)?, &spec)?;
    let trials = cfg.trials_or(1000);
    let e = estimate_success(&factory, &spec, cfg.params.uint("stream_len")?, trials, cfg.seed)?;

    let target = cfg.params.f64("target")?;
    let max_null = cfg.params.f64("max_null_accept")?;
    let min_planted = cfg.params.f64("min_planted_accept")?;
    let checks = [
        target.map(|t| e.success.ci_low >= t),
        max_null.map(|m| e.null_accept.ci_high <= m),
        min_planted.map(|m| e.planted_accept.point >= m),
    ];
    let pass = checks
        .iter()
        .any(Option::is_some)
        .then(|| checks.iter().all(|c| c.unwrap_or(true)));

    let mut columns = vec!["distinguisher", "source", "n", "k"];
    columns.extend_from_slice(ESTIMATE_COLUMNS);
    columns.push("pass");
    let mut table = Table::new("distinguish", cfg.seed, &cfg.params.echo(), &columns);
    let mut row: Vec<Cell> = vec![name.into(), source.into(), spec.n().into(), spec.k().into()];
    row.extend(estimate_cells(&e));
    row.push(pass.into());
    table.push(row);
    Ok(Report { table, pass })
}

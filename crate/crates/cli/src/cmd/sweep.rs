use streamdist::distinguisher::build_factory;
use streamdist::spectral::estimate_success;

use super::distinguish::{estimate_cells, ESTIMATE_COLUMNS};
use super::{source_spec, Report, SweepAxis, SOURCE_KEYS};
use crate::config::{split_list, RunConfig};
use crate::error::CliError;
use crate::output::{Cell, Table};

fn default_key(name: &str, axis: SweepAxis) -> Option<&'static str> {
    match (name, axis) {
        ("subspace_rank" | "rank_threshold", _) => Some("window"),
        ("orthogonal_tester", SweepAxis::Memory) => Some("iterations"),
        ("orthogonal_tester", _) => Some("per_iter"),
        ("sparse_sat", _) => Some("m0"),
        ("sparse_fixed_query", SweepAxis::Memory) => Some("quota"),
        ("local_prefix", SweepAxis::Memory) => Some("w"),
        ("sparse_fixed_query" | "local_prefix", _) => Some("max_samples"),
        _ => None,
    }
}

/// One estimate per grid value, all under the same seed so neighbouring
/// points share their random inputs.
///
/// On the memory and samples axes the grid sets the parameter `key`, and
/// `sanity` flags a point whose CI high falls below the previous CI low. On
/// the trials axis the grid sets the trial count, and `sanity` checks that
/// the CI width shrank like `trials^{-1/2}` within a factor of 2.
pub fn run(
    cfg: &RunConfig,
    name: &str,
    source: &str,
    axis: SweepAxis,
    grid: &str,
    key: Option<&str>,
) -> Result<Report, CliError> {
    let grid: Vec<u64> = split_list(grid)
        .map(|v| {
            v.parse::<u64>()
                .map_err(|_| CliError::usage(format!("grid value {v:?} is not a non-negative integer")))
        })
        .collect::<Result<_, _>>()?;
    let key = match axis {
        SweepAxis::Trials => "trials",
        _ => key
            .or_else(|| default_key(name, axis))
            .ok_or_else(|| CliError::usage(format!("{name} has no default sweep key; pass --key")))?,
    };
    let spec = source_spec(source, &cfg.params)?;
    let mut params = cfg.params.numeric_except(SOURCE_KEYS)?;

    let mut columns = vec!["distinguisher", "source", "n", "k", "axis", "key", "value", "ci_width"];
    columns.extend_from_slice(ESTIMATE_COLUMNS);
    columns.push("sanity");
    let mut table = Table::new("sweep", cfg.seed, &cfg.params.echo(), &columns);
    let axis_name = match axis {
        SweepAxis::Memory => "memory",
        SweepAxis::Samples => "samples",
        SweepAxis::Trials => "trials",
    };
    let mut prev: Option<(u64, f64, f64)> = None;
    for &value in &grid {
        let trials = match axis {
            SweepAxis::Trials => value,
            _ => {
                params.insert(key.to_string(), value as f64);
                cfg.trials_or(1000)
            }
        };
        let factory = build_factory(name, &params, &spec)?;
        let e = estimate_success(&factory, &spec, None, trials, cfg.seed)?;
        let width = e.success.ci_high - e.success.ci_low;
        let sanity = match (axis, prev) {
            (_, None) => true,
            (SweepAxis::Trials, Some((t0, _, w0))) => {
                let ratio = (width / w0) / (t0 as f64 / trials as f64).sqrt();
                (0.5..=2.0).contains(&ratio)
            }
            (_, Some((_, low0, _))) => e.success.ci_high >= low0,
        };
        prev = Some((trials, e.success.ci_low, width));
        let mut row: Vec<Cell> = vec![
            name.into(),
            source.into(),
            spec.n().into(),
            spec.k().into(),
            axis_name.into(),
            key.into(),
            value.into(),
            width.into(),
        ];
        row.extend(estimate_cells(&e));
        row.push(sanity.into());
        table.push(row);
    }
    Ok(Report { table, pass: None })
}

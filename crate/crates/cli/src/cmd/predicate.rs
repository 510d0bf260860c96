use crate::config::{resolve_predicate, RunConfig};
use crate::error::CliError;
use crate::output::Table;

use super::Report;

const COLUMNS: &[&str] = &[
    "predicate", "k", "table_size", "resilience", "alpha", "weight", "numerator", "denominator", "coefficient",
];

/// One row per Fourier coefficient. With `expect_resilience` set, the
/// report asserts the computed resilience.
pub fn run(cfg: &RunConfig, name: &str, k: Option<usize>) -> Result<Report, CliError> {
    let k = match k {
        Some(k) => Some(k),
        None => cfg.params.uint("k")?.map(|k| k as usize),
    };
    let p = resolve_predicate(name, k)?;
    let spectrum = p.spectrum();
    let t = spectrum.resilience();
    let k = p.arity();
    let mut table = Table::new("predicate", cfg.seed, &cfg.params.echo(), COLUMNS);
    for (alpha, &num) in spectrum.numerators().iter().enumerate() {
        table.push(vec![
            name.into(),
            k.into(),
            (1usize << k).into(),
            t.into(),
            format!("{alpha:0k$b}").into(),
            alpha.count_ones().into(),
            num.into(),
            spectrum.denominator().into(),
            spectrum.coefficient(alpha).into(),
        ]);
    }
    eprintln!(
        "{name}: k={k}, {} ones of {}, resilience {t}",
        p.count_ones(),
        1usize << k
    );
    let pass = cfg.params.uint("expect_resilience")?.map(|want| want == t as u64);
    Ok(Report { table, pass })
}

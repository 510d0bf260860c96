use rayon::prelude::*;

use super::SpectralError;
use crate::distinguisher::{run, Factory, Outcome};
use crate::gf2::BitString;
use crate::rng::SeedTree;
use crate::source::{hybrid_stream, Instance, SourceSpec};

/// Two-sided 99% standard normal quantile.
pub const Z99: f64 = 2.575_829_303_548_900_4;

/// Wilson score interval for `successes` out of `trials`.
pub fn wilson(successes: u64, trials: u64, z: f64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    ((center - half).max(0.0).min(p), (center + half).min(1.0).max(p))
}

/// A proportion with its 99% Wilson interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdvantageEstimate {
    pub point: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub trials: u64,
}

impl AdvantageEstimate {
    pub fn from_counts(successes: u64, trials: u64) -> Self {
        let (ci_low, ci_high) = wilson(successes, trials, Z99);
        Self {
            point: if trials == 0 {
                0.0
            } else {
                successes as f64 / trials as f64
            },
            ci_low,
            ci_high,
            trials,
        }
    }

    pub fn successes(&self) -> u64 {
        (self.point * self.trials as f64).round() as u64
    }

    /// Agresti-Coull variance of the proportion.
    pub fn variance(&self) -> f64 {
        let n = self.trials as f64 + Z99 * Z99;
        let p = (self.successes() as f64 + Z99 * Z99 / 2.0) / n;
        p * (1.0 - p) / n
    }
}

/// Difference `p1 - p2` of independent proportions with the Newcombe
/// hybrid score interval built from the two Wilson intervals.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeltaEstimate {
    pub point: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

pub fn newcombe_difference(a: &AdvantageEstimate, b: &AdvantageEstimate) -> DeltaEstimate {
    let d = a.point - b.point;
    let lo = ((a.point - a.ci_low).powi(2) + (b.ci_high - b.point).powi(2)).sqrt();
    let hi = ((a.ci_high - a.point).powi(2) + (b.point - b.ci_low).powi(2)).sqrt();
    DeltaEstimate {
        point: d,
        ci_low: d - lo,
        ci_high: d + hi,
    }
}

/// Monte Carlo success of a distinguisher.
#[derive(Debug, Clone, PartialEq)]
pub struct SuccessEstimate {
    /// `(Pr[decide 0 | b=0] + Pr[decide 1 | b=1]) / 2`, stratified.
    pub success: AdvantageEstimate,
    /// `Pr[decide 1 | b = 0]`.
    pub null_accept: AdvantageEstimate,
    /// `Pr[decide 1 | b = 1]`.
    pub planted_accept: AdvantageEstimate,
    pub mean_samples: f64,
    pub max_memory_bits: u64,
    pub memory_bound: u64,
    pub paper_width_bits: u64,
}

/// Runs `trials` independent trials, alternating null (even trials) and
/// planted (odd trials). Trial `t` draws its instance and stream from
/// `SeedTree(seed).rng(t)` and its distinguisher from
/// `SeedTree(seed).child(1).seed(t)`, so results do not depend on the
/// thread count. `stream_len` caps the stream; `None` leaves it unbounded.
pub fn estimate_success(
    factory: &Factory,
    spec: &SourceSpec,
    stream_len: Option<u64>,
    trials: u64,
    seed: u64,
) -> Result<SuccessEstimate, SpectralError> {
    spec.validate()?;
    let tree = SeedTree::new(seed);
    let dtree = tree.child(1);
    let probe = factory(0);
    let outcomes: Vec<(bool, Outcome)> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let planted = t % 2 == 1;
            let mut rng = tree.rng(t);
            let inst = if planted {
                Instance::planted_random(spec, &mut rng)?
            } else {
                Instance::null(spec)
            };
            let mut d = factory(dtree.seed(t));
            let stream = inst.stream(rng).take(stream_len.map_or(usize::MAX, |l| l as usize));
            Ok((planted, run(d.as_mut(), stream)?))
        })
        .collect::<Result<_, SpectralError>>()?;
    let n1 = outcomes.iter().filter(|(p, _)| *p).count() as u64;
    let n0 = outcomes.len() as u64 - n1;
    let acc1 = outcomes.iter().filter(|(p, o)| *p && o.decision).count() as u64;
    let acc0 = outcomes.iter().filter(|(p, o)| !*p && o.decision).count() as u64;
    let correct = acc1 + (n0 - acc0);
    Ok(SuccessEstimate {
        success: AdvantageEstimate::from_counts(correct, trials),
        null_accept: AdvantageEstimate::from_counts(acc0, n0),
        planted_accept: AdvantageEstimate::from_counts(acc1, n1),
        mean_samples: outcomes.iter().map(|(_, o)| o.samples_consumed as f64).sum::<f64>() / trials.max(1) as f64,
        max_memory_bits: outcomes.iter().map(|(_, o)| o.memory_bits).max().unwrap_or(0),
        memory_bound: probe.memory_bound(),
        paper_width_bits: probe.paper_width_bits(),
    })
}

/// Per-hybrid rejection rates and the telescoping comparison.
#[derive(Debug, Clone, PartialEq)]
pub struct HybridReport {
    /// `q[j] = Pr[decide 0 | H_j]` for `j = 0..=m`, where `H_j` has its first
    /// `j` samples planted.
    pub q: Vec<AdvantageEstimate>,
    /// `deltas[j-1] = q[j-1] - q[j]`.
    pub deltas: Vec<DeltaEstimate>,
    pub sum_deltas: f64,
    /// `Pr[decide 0 | all null] - Pr[decide 0 | all planted]` from fresh trials.
    pub end_to_end: DeltaEstimate,
    pub residual: f64,
    /// `Z99` times the standard error of the residual.
    pub tolerance: f64,
    pub within: bool,
}

fn rejection_rate(
    factory: &Factory,
    spec: &SourceSpec,
    j: usize,
    m: usize,
    trials: u64,
    tree: &SeedTree,
) -> Result<AdvantageEstimate, SpectralError> {
    let dtree = tree.child(1);
    let zeros = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = tree.rng(t);
            let x = BitString::random(spec.n(), &mut rng);
            let stream = hybrid_stream(&x, j, m, spec, rng)?;
            let mut d = factory(dtree.seed(t));
            Ok(!run(d.as_mut(), stream)?.decision as u64)
        })
        .collect::<Result<Vec<u64>, SpectralError>>()?
        .into_iter()
        .sum();
    Ok(AdvantageEstimate::from_counts(zeros, trials))
}

/// Estimates `Pr[decide 0 | H_j]` for every hybrid `j = 0..=m` with
/// `trials` trials each and a fresh seed per trial, then compares
/// `sum_j Delta_j` with an independently estimated end-to-end gap.
pub fn hybrid_deltas(
    factory: &Factory,
    spec: &SourceSpec,
    m: usize,
    trials: u64,
    seed: u64,
) -> Result<HybridReport, SpectralError> {
    if !matches!(spec, SourceSpec::LocalPrg { .. }) {
        return Err(SpectralError::OutOfRange(
            "hybrid streams need a local_prg source".into(),
        ));
    }
    if m == 0 {
        return Err(SpectralError::OutOfRange("stream length must be positive".into()));
    }
    let tree = SeedTree::new(seed);
    let hybrids = tree.child(0);
    let q = (0..=m)
        .map(|j| rejection_rate(factory, spec, j, m, trials, &hybrids.child(j as u64)))
        .collect::<Result<Vec<_>, _>>()?;
    let deltas: Vec<DeltaEstimate> = q.windows(2).map(|w| newcombe_difference(&w[0], &w[1])).collect();
    let sum_deltas: f64 = deltas.iter().map(|d| d.point).sum();
    let direct = tree.child(1);
    let all_null = rejection_rate(factory, spec, 0, m, trials, &direct.child(0))?;
    let all_planted = rejection_rate(factory, spec, m, m, trials, &direct.child(1))?;
    let end_to_end = newcombe_difference(&all_null, &all_planted);
    let residual = sum_deltas - end_to_end.point;
    let tolerance = Z99 * (q[0].variance() + q[m].variance() + all_null.variance() + all_planted.variance()).sqrt();
    Ok(HybridReport {
        within: residual.abs() <= tolerance,
        q,
        deltas,
        sum_deltas,
        end_to_end,
        residual,
        tolerance,
    })
}

use rayon::prelude::*;
use streamdist::distinguisher::{build_factory, Factory, ParamMap};
use streamdist::gf2::BitString;
use streamdist::reduction::{
    auto_reps, default_feed_budget, learn_parity, learn_sparse_parity, parity_oracle, sparse_oracle, LearnerReport,
    Orientation, DEFAULT_S_ASSUMED,
};
use streamdist::rng::SeedTree;
use streamdist::source::SourceSpec;
use streamdist::spectral::AdvantageEstimate;

use super::{ReduceWhich, Report};
use crate::config::RunConfig;
use crate::error::CliError;
use crate::output::{Cell, Table};

/// Largest repetition count `reps=auto` may choose before refusing.
const DEFAULT_MAX_REPS: u64 = 1001;

struct Setup {
    which: ReduceWhich,
    factory: Factory,
    orientation: Orientation,
    n: usize,
    k: usize,
    inner_m: usize,
    feed_budget: u64,
}

impl Setup {
    fn from_params(cfg: &RunConfig, which: ReduceWhich) -> Result<Self, CliError> {
        let p = &cfg.params;
        match which {
            ReduceWhich::Parity => {
                // k is the secret length k'; the inner tester separates
                // dimension k' - 1 from k'
                let n = p.usize_or("n", 12)?;
                let k = p.usize_or("k", 6)?;
                if k == 0 || k > n {
                    return Err(CliError::usage(format!("need 1 <= k <= n, got k={k}, n={n}")));
                }
                let inner_m = p.usize_or("inner_m", 8 * k)?;
                let spec = SourceSpec::subspace(n, k)?;
                let params: ParamMap = [
                    ("r".to_string(), (k - 1) as f64),
                    ("window".to_string(), inner_m as f64),
                ]
                .into();
                Ok(Self {
                    which,
                    factory: build_factory("rank_threshold", &params, &spec)?,
                    orientation: Orientation::ZeroMeansMatch,
                    n,
                    k,
                    inner_m,
                    feed_budget: 0,
                })
            }
            ReduceWhich::Sparse => {
                let n = p.usize_or("n", 10)?;
                let k = p.usize_or("k", 2)?;
                let inner_m = p.usize_or("inner_m", 4 * n)?;
                let spec = SourceSpec::sparse_parity(n, k)?;
                let params: ParamMap = [("m0".to_string(), inner_m as f64)].into();
                let default_budget = default_feed_budget(n, k, inner_m, DEFAULT_S_ASSUMED);
                Ok(Self {
                    which,
                    factory: build_factory("sparse_sat", &params, &spec)?,
                    orientation: Orientation::ZeroMeansMismatch,
                    n,
                    k,
                    inner_m,
                    feed_budget: p.uint_or("feed_budget", default_budget)?,
                })
            }
        }
    }

    fn secret_len(&self) -> usize {
        match self.which {
            ReduceWhich::Parity => self.k,
            ReduceWhich::Sparse => self.n + 1,
        }
    }

    /// One learner run on trial `t` of `tree`: the secret and learner
    /// randomness come from `tree.rng(t)`, the oracle from `tree.child(1)`.
    fn trial(&self, reps: usize, tree: &SeedTree, t: u64) -> Result<(BitString, LearnerReport), CliError> {
        let mut rng = tree.rng(t);
        let x = BitString::random(self.secret_len(), &mut rng);
        let oracle_rng = tree.child(1).rng(t);
        let report = match self.which {
            ReduceWhich::Parity => learn_parity(
                &self.factory,
                self.orientation,
                self.n,
                self.k,
                reps,
                self.inner_m,
                parity_oracle(x.clone(), oracle_rng),
                &mut rng,
            )?,
            ReduceWhich::Sparse => learn_sparse_parity(
                &self.factory,
                self.orientation,
                self.n,
                self.k,
                reps,
                self.inner_m,
                self.feed_budget,
                sparse_oracle(x.clone(), self.k, oracle_rng)?,
                &mut rng,
            )?,
        };
        Ok((x, report))
    }

    fn trials(&self, reps: usize, trials: u64, tree: &SeedTree) -> Result<Vec<(BitString, LearnerReport)>, CliError> {
        (0..trials).into_par_iter().map(|t| self.trial(reps, tree, t)).collect()
    }
}

fn vote_estimate(runs: &[(BitString, LearnerReport)]) -> AdvantageEstimate {
    let (good, total) = runs
        .iter()
        .map(|(x, r)| r.correct_votes(x))
        .fold((0, 0), |(g, t), (a, b)| (g + a, t + b));
    AdvantageEstimate::from_counts(good, total)
}

const COLUMNS: &[&str] = &[
    "row", "which", "n", "k", "reps", "inner_m", "trials", "bit", "rate", "ci_low", "ci_high", "vote_rate",
    "vote_ci_low", "vote_ci_high", "halted", "mean_margin", "min_margin", "pass",
];

/// Recovery rate over independent secrets. Per-bit rows give the fraction
/// of trials that recovered the bit and the vote margin
/// `(correct - wrong) / reps`. With `target`, the report asserts
/// `ci_low >= target`; with `vote_target`, `vote_ci_low > vote_target`.
pub fn run(cfg: &RunConfig, which: ReduceWhich) -> Result<Report, CliError> {
    let setup = Setup::from_params(cfg, which)?;
    let tree = SeedTree::new(cfg.seed);
    let trials = cfg.trials_or(100);
    let reps = match cfg.params.str("reps") {
        Some("auto") => {
            let pilot = setup.trials(1, cfg.params.uint_or("pilot_trials", 20)?, &tree.child(2))?;
            let adv = vote_estimate(&pilot).point - 0.5;
            let reps = auto_reps(setup.secret_len(), adv)?;
            let cap = cfg.params.uint_or("max_reps", DEFAULT_MAX_REPS)?;
            if reps > cap {
                return Err(CliError::Budget(format!(
                    "pilot vote advantage {adv:.4} needs {reps} repetitions, above max_reps={cap}"
                )));
            }
            eprintln!("reduce: pilot vote advantage {adv:.4}, using reps={reps}");
            reps as usize
        }
        _ => cfg.params.usize_or("reps", 25)?,
    };
    if reps == 0 {
        return Err(CliError::usage("reps must be positive"));
    }
    let runs = setup.trials(reps, trials, &tree.child(0))?;

    let recovered = runs.iter().filter(|(x, r)| r.estimate == *x).count() as u64;
    let halted = runs.iter().filter(|(_, r)| r.halted).count() as u64;
    let recovery = AdvantageEstimate::from_counts(recovered, trials);
    let votes = vote_estimate(&runs);
    let target = cfg.params.f64("target")?;
    let vote_target = cfg.params.f64("vote_target")?;
    let checks = [
        target.map(|t| recovery.ci_low >= t),
        vote_target.map(|t| votes.ci_low > t),
    ];
    let pass = checks
        .iter()
        .any(Option::is_some)
        .then(|| checks.iter().all(|c| c.unwrap_or(true)));

    let which_name = match which {
        ReduceWhich::Parity => "parity",
        ReduceWhich::Sparse => "sparse",
    };
    let mut table = Table::new("reduce", cfg.seed, &cfg.params.echo(), COLUMNS);
    let head = |row: &str| -> Vec<Cell> {
        vec![
            row.into(),
            which_name.into(),
            setup.n.into(),
            setup.k.into(),
            reps.into(),
            setup.inner_m.into(),
            trials.into(),
        ]
    };
    let e = || Cell::Empty;

    for bit in 0..setup.secret_len() {
        let mut right = 0u64;
        let mut margins = Vec::new();
        for (x, r) in runs.iter().filter(|(_, r)| !r.halted) {
            right += (r.estimate.get(bit) == x.get(bit)) as u64;
            let (c0, c1) = r.per_bit_votes[bit];
            let (good, bad) = if x.get(bit) { (c1, c0) } else { (c0, c1) };
            margins.push((good as f64 - bad as f64) / reps as f64);
        }
        let done = margins.len() as u64;
        let acc = AdvantageEstimate::from_counts(right, done);
        let mean = if done == 0 {
            None
        } else {
            Some(margins.iter().sum::<f64>() / done as f64)
        };
        let min = margins.iter().copied().reduce(f64::min);
        let mut row = head("bit");
        row.extend([
            bit.into(),
            acc.point.into(),
            acc.ci_low.into(),
            acc.ci_high.into(),
            e(),
            e(),
            e(),
            e(),
            mean.into(),
            min.into(),
            e(),
        ]);
        table.push(row);
    }
    let mut row = head("summary");
    row.extend([
        e(),
        recovery.point.into(),
        recovery.ci_low.into(),
        recovery.ci_high.into(),
        votes.point.into(),
        votes.ci_low.into(),
        votes.ci_high.into(),
        halted.into(),
        e(),
        e(),
        pass.into(),
    ]);
    table.push(row);
    Ok(Report { table, pass })
}

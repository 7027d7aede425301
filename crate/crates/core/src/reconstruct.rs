//! Decoding experiment tables into full target estimates.
//!
//! Two decoders run side by side: an independent per-bit majority vote and
//! a correlated filter that scores every trial by its total bitwise
//! agreement with the other trials and weights its votes accordingly. Both
//! are exact integer computations; ties are broken by seeded per-bit coins
//! and surfaced through the unresolved mask so callers can rescore them.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bitstring::Bitstring;
use crate::error::{Error, Result};
use crate::record::{ExperimentTable, ReconstructionResult, TrialEntry};
use crate::rng::{derive_seed, tie_break_coin, StreamDomain};
use crate::trials::{generate_table_seeded, prepare_ensemble, SamplingMode, TrialParams};

/// Bitwise agreement quantifier: +1 when both bits are read equal, -1 when
/// read opposite, 0 when either qubit was lost.
pub fn chi(a: TrialEntry, b: TrialEntry) -> i32 {
    (a.vote() * b.vote()) as i32
}

/// Agreement score C_k of every trial against all others.
pub fn trial_scores(table: &ExperimentTable) -> Result<Vec<i64>> {
    if table.k() < 2 {
        return Err(Error::TooFewTrials {
            required: 2,
            actual: table.k(),
        });
    }
    let n = table.n_bits();
    let column_sums: Vec<i64> = (0..n)
        .map(|i| table.trials().iter().map(|t| t.entry(i).vote()).sum())
        .collect();
    Ok(table
        .trials()
        .iter()
        .map(|t| {
            (0..n)
                .map(|i| {
                    let v = t.entry(i).vote();
                    v * (column_sums[i] - v)
                })
                .sum()
        })
        .collect())
}

fn estimate_from_signs(signs: Vec<i64>, tie_seed: u64, domain: StreamDomain) -> ReconstructionResult {
    let mut bits = Vec::with_capacity(signs.len());
    let mut unresolved = Vec::with_capacity(signs.len());
    for (i, s) in signs.into_iter().enumerate() {
        if s == 0 {
            unresolved.push(true);
            bits.push(tie_break_coin(tie_seed, domain, i));
        } else {
            unresolved.push(false);
            bits.push(s > 0);
        }
    }
    ReconstructionResult {
        estimate: Bitstring::new(bits),
        unresolved,
        n_correct: None,
    }
}

/// Correlated-filter estimate: bit i is the sign of sum_k C_k (b_k_i - 1/2),
/// with lost entries contributing zero. Zero sums are flagged unresolved and
/// tie-broken by a per-bit coin derived from `tie_seed`.
pub fn weighted_estimate(table: &ExperimentTable, tie_seed: u64) -> Result<ReconstructionResult> {
    let scores = trial_scores(table)?;
    let signs = (0..table.n_bits())
        .map(|i| {
            table
                .trials()
                .iter()
                .zip(&scores)
                .map(|(t, &c)| c * t.entry(i).vote())
                .sum()
        })
        .collect();
    Ok(estimate_from_signs(signs, tie_seed, StreamDomain::TieWeighted))
}

/// Per-bit majority vote over the non-lost entries, coin tie-breaks.
pub fn majority_vote(table: &ExperimentTable, tie_seed: u64) -> Result<ReconstructionResult> {
    if table.k() < 1 {
        return Err(Error::TooFewTrials {
            required: 1,
            actual: 0,
        });
    }
    let signs = (0..table.n_bits())
        .map(|i| table.trials().iter().map(|t| t.entry(i).vote()).sum())
        .collect();
    Ok(estimate_from_signs(signs, tie_seed, StreamDomain::TieMajority))
}

/// Number of estimate bits agreeing with the reference target.
pub fn count_correct(result: &ReconstructionResult, target: &Bitstring) -> Result<usize> {
    result.estimate.agreement(target)
}

fn count_correct_strict(result: &ReconstructionResult, target: &Bitstring) -> Result<usize> {
    Ok(result
        .estimate
        .bits()
        .iter()
        .zip(target.bits())
        .zip(&result.unresolved)
        .filter(|((a, b), &tie)| a == b && !tie)
        .count())
}

/// Aggregated decoding outcomes of one method over repeated experiments.
///
/// `strict` figures score tie-broken bits as errors instead of trusting the
/// coin; both conventions are reported.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MethodStats {
    pub histogram: Vec<u64>,
    pub mean_fraction: f64,
    pub p_all_correct: f64,
    pub histogram_strict: Vec<u64>,
    pub mean_fraction_strict: f64,
    pub p_all_correct_strict: f64,
}

impl MethodStats {
    fn from_counts(counts: &[(usize, usize)], n: usize) -> Self {
        let mut histogram = vec![0u64; n + 1];
        let mut histogram_strict = vec![0u64; n + 1];
        let mut total = 0u64;
        let mut total_strict = 0u64;
        for &(nc, nc_strict) in counts {
            histogram[nc] += 1;
            histogram_strict[nc_strict] += 1;
            total += nc as u64;
            total_strict += nc_strict as u64;
        }
        let experiments = counts.len() as f64;
        MethodStats {
            mean_fraction: total as f64 / (experiments * n as f64),
            p_all_correct: histogram[n] as f64 / experiments,
            mean_fraction_strict: total_strict as f64 / (experiments * n as f64),
            p_all_correct_strict: histogram_strict[n] as f64 / experiments,
            histogram,
            histogram_strict,
        }
    }
}

/// Distributions of the correctly-decoded-bit count for both decoders.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentStatistics {
    pub n: usize,
    pub k_trials: usize,
    pub n_experiments: usize,
    pub majority: MethodStats,
    pub weighted: MethodStats,
    /// Fraction of surviving-qubit readouts matching the target bit.
    pub per_bit_marginal: f64,
}

/// Runs `n_experiments` independent experiments of `k_trials` trials each
/// and decodes every table with both methods. Experiments use independent
/// substreams keyed by their index, so results do not depend on the thread
/// count; `threads` pins the pool size (1 forces serial execution).
pub fn experiment_statistics(
    params: &TrialParams,
    k_trials: usize,
    n_experiments: usize,
    threads: Option<usize>,
) -> Result<ExperimentStatistics> {
    if k_trials < 2 {
        return Err(Error::TooFewTrials {
            required: 2,
            actual: k_trials,
        });
    }
    if n_experiments < 1 {
        return Err(Error::InvalidConfig("need at least one experiment".into()));
    }
    params.validate()?;

    let ensemble_state = match params.mode {
        SamplingMode::Ensemble => Some(prepare_ensemble(params)?),
        SamplingMode::Trajectory => None,
    };

    let run = || -> Result<Vec<_>> {
        (0..n_experiments)
            .into_par_iter()
            .map(|e| {
                let exp_seed =
                    derive_seed(params.config.seed, StreamDomain::Experiment, e as u64);
                let table =
                    generate_table_seeded(params, k_trials, exp_seed, ensemble_state.as_ref())?;
                let target = &params.config.target;

                let maj = majority_vote(&table, exp_seed)?;
                let wgt = weighted_estimate(&table, exp_seed)?;
                let surviving: usize = table.trials().iter().map(|t| t.survivors()).sum();
                let matching: usize = table
                    .trials()
                    .iter()
                    .map(|t| {
                        (0..table.n_bits())
                            .filter(|&i| t.entry(i) == TrialEntry::from_bit(target.bit(i)))
                            .count()
                    })
                    .sum();
                Ok((
                    (
                        count_correct(&maj, target)?,
                        count_correct_strict(&maj, target)?,
                    ),
                    (
                        count_correct(&wgt, target)?,
                        count_correct_strict(&wgt, target)?,
                    ),
                    (matching, surviving),
                ))
            })
            .collect()
    };

    let outcomes = match threads {
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build()
            .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))?
            .install(run),
        None => run(),
    }?;

    let maj_counts: Vec<_> = outcomes.iter().map(|o| o.0).collect();
    let wgt_counts: Vec<_> = outcomes.iter().map(|o| o.1).collect();
    let matching: usize = outcomes.iter().map(|o| o.2 .0).sum();
    let surviving: usize = outcomes.iter().map(|o| o.2 .1).sum();

    Ok(ExperimentStatistics {
        n: params.config.n,
        k_trials,
        n_experiments,
        majority: MethodStats::from_counts(&maj_counts, params.config.n),
        weighted: MethodStats::from_counts(&wgt_counts, params.config.n),
        per_bit_marginal: matching as f64 / surviving.max(1) as f64,
    })
}

/// Histogram CSV with columns `n_c,count_majority,count_weighted`
/// (coin-convention counts, matching the decoders' literal output).
pub fn write_histogram_csv<W: Write>(stats: &ExperimentStatistics, out: &mut W) -> Result<()> {
    writeln!(out, "n_c,count_majority,count_weighted")?;
    for nc in 0..=stats.n {
        writeln!(
            out,
            "{nc},{},{}",
            stats.majority.histogram[nc], stats.weighted.histogram[nc]
        )?;
    }
    Ok(())
}

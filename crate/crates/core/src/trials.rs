//! Monte Carlo generation of readout tables.
//!
//! Two cross-validating samplers produce trial records. Ensemble mode reads
//! the integrated ensemble state at the readout time and samples the
//! survivor count from its sector weights; measurement statistics are exact
//! for single readouts because probabilities are linear in the density
//! matrix. Trajectory mode draws explicit per-qubit loss times and evolves
//! one conditional block through exact-angle rotations and loss maps.

use rand::Rng;
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

use crate::bitstring::Bitstring;
use crate::block::{Block, BlockState};
use crate::config::RegisterConfig;
use crate::error::{Error, Result};
use crate::master::{integrate_with, OdeParams, DEFAULT_DT};
use crate::record::{TrialEntry, TrialRecord, ExperimentTable};
use crate::rng::{substream, StreamDomain};
use crate::subspace::{grover_angle, loss_map, rotate_block_by};

/// How trials are sampled.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SamplingMode {
    /// Sample the survivor count and outcome from the ensemble state.
    #[default]
    Ensemble,
    /// Simulate explicit loss times with conditional-state evolution.
    Trajectory,
}

/// Whether the survivor count is sampled or fixed to half the register.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SurvivorConditioning {
    /// Sample the survivor count from the loss law.
    #[default]
    Binomial,
    /// Condition on exactly n/2 survivors.
    ExactHalf,
}

/// Parameters of one table-generation run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialParams {
    pub config: RegisterConfig,
    /// Readout time in search-step units.
    pub readout_time: f64,
    pub mode: SamplingMode,
    pub conditioning: SurvivorConditioning,
}

impl TrialParams {
    pub fn new(config: RegisterConfig, readout_time: f64, mode: SamplingMode) -> Result<Self> {
        let params = TrialParams {
            config,
            readout_time,
            mode,
            conditioning: SurvivorConditioning::Binomial,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn with_conditioning(mut self, conditioning: SurvivorConditioning) -> Result<Self> {
        self.conditioning = conditioning;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        self.config.validate()?;
        if !(self.readout_time >= 0.0 && self.readout_time <= self.config.n_steps as f64) {
            return Err(Error::InvalidConfig(format!(
                "readout time {} outside the step budget 0..={}",
                self.readout_time, self.config.n_steps
            )));
        }
        if self.conditioning == SurvivorConditioning::ExactHalf && self.config.n % 2 != 0 {
            return Err(Error::InvalidConfig(
                "conditioning on half the register requires even n".into(),
            ));
        }
        Ok(())
    }
}

/// Readout time at which half the register survives on average: ln 2 / gamma.
pub fn half_life_readout(gamma: f64) -> Result<f64> {
    if gamma <= 0.0 {
        return Err(Error::InvalidConfig(
            "half-life readout undefined for gamma = 0; give an explicit time".into(),
        ));
    }
    Ok(std::f64::consts::LN_2 / gamma)
}

/// Integrates the ensemble dynamics up to the readout time and returns the
/// state there. Shared across all trials of a run.
pub fn prepare_ensemble(params: &TrialParams) -> Result<BlockState> {
    params.validate()?;
    let ode = OdeParams::new(
        params.config.n,
        params.config.gamma,
        DEFAULT_DT,
        params.readout_time,
    )?;
    integrate_with(&BlockState::symmetric_init(params.config.n), &ode, |_, _| Ok(()))
}

/// Uniformly random m-element subset of {0..n-1}, sorted ascending.
pub fn sample_survivor_set<R: Rng>(n: usize, m: usize, rng: &mut R) -> Vec<usize> {
    debug_assert!(m <= n);
    // partial Fisher-Yates on the label list
    let mut labels: Vec<usize> = (0..n).collect();
    for i in 0..m {
        let j = rng.gen_range(i..n);
        labels.swap(i, j);
    }
    let mut chosen = labels[..m].to_vec();
    chosen.sort_unstable();
    chosen
}

/// Computational-basis readout of a unit-trace sector block: the target
/// substring with probability (1 + w)/2, otherwise one of the other
/// M - 1 strings uniformly. The coherence does not enter because the
/// non-target strings are orthogonal to the target.
pub fn sample_readout<R: Rng>(
    block: &Block,
    m: usize,
    target_sub: &Bitstring,
    rng: &mut R,
) -> Bitstring {
    debug_assert!(m >= 1 && target_sub.len() == m);
    let p_target = (0.5 * (1.0 + block.w / block.p)).clamp(0.0, 1.0);
    if rng.gen::<f64>() < p_target {
        return target_sub.clone();
    }
    let dim = 1u64 << m;
    let draw = rng.gen_range(0..dim - 1);
    let index = if draw >= target_sub.index() { draw + 1 } else { draw };
    Bitstring::from_index(index, m)
}

fn record_from_readout(n: usize, survivors: &[usize], bits: &Bitstring) -> TrialRecord {
    let mut record = TrialRecord::all_lost(n);
    for (pos, &label) in survivors.iter().enumerate() {
        record.set(label, TrialEntry::from_bit(bits.bit(pos)));
    }
    record
}

fn draw_sector<R: Rng>(state: &BlockState, rng: &mut R) -> usize {
    let total: f64 = state.blocks().iter().map(|b| b.p.max(0.0)).sum();
    let mut point = rng.gen::<f64>() * total;
    for (m, block) in state.blocks().iter().enumerate() {
        point -= block.p.max(0.0);
        if point <= 0.0 {
            return m;
        }
    }
    state.n()
}

fn ensemble_trial(
    params: &TrialParams,
    state: &BlockState,
    rng: &mut ChaCha12Rng,
) -> TrialRecord {
    let n = params.config.n;
    let m = match params.conditioning {
        SurvivorConditioning::Binomial => draw_sector(state, rng),
        SurvivorConditioning::ExactHalf => n / 2,
    };
    if m == 0 {
        return TrialRecord::all_lost(n);
    }
    let block = state.block(m);
    let block = if block.p > 1e-300 {
        block.normalized()
    } else {
        Block::new(1.0, 0.0, 0.0)
    };
    let survivors = sample_survivor_set(n, m, rng);
    let target_sub = params.config.target.restrict(&survivors);
    let bits = sample_readout(&block, m, &target_sub, rng);
    record_from_readout(n, &survivors, &bits)
}

fn exponential_loss_time<R: Rng>(gamma: f64, rng: &mut R) -> f64 {
    if gamma == 0.0 {
        return f64::INFINITY;
    }
    loop {
        let x = rng.gen::<f64>();
        if x > 0.0 {
            return -x.ln() / gamma;
        }
    }
}

fn trajectory_trial(params: &TrialParams, rng: &mut ChaCha12Rng) -> TrialRecord {
    let n = params.config.n;
    let t_end = params.readout_time;

    let loss_times: Vec<f64> = loop {
        let times: Vec<f64> = (0..n)
            .map(|_| exponential_loss_time(params.config.gamma, rng))
            .collect();
        match params.conditioning {
            SurvivorConditioning::Binomial => break times,
            SurvivorConditioning::ExactHalf => {
                let alive = times.iter().filter(|&&t| t >= t_end).count();
                if alive == n / 2 {
                    break times;
                }
            }
        }
    };

    let mut events: Vec<(f64, usize)> = loss_times
        .iter()
        .enumerate()
        .filter(|(_, &t)| t < t_end)
        .map(|(label, &t)| (t, label))
        .collect();
    events.sort_by(|a, b| a.0.total_cmp(&b.0));

    let init = BlockState::symmetric_init(n);
    let mut block = *init.block(n);
    let mut m = n;
    let mut cursor = 0.0;
    for &(tau, _) in &events {
        block = rotate_block_by(&block, 2.0 * grover_angle(m) * (tau - cursor));
        block = loss_map(&block, m - 1);
        m -= 1;
        cursor = tau;
        if m == 0 {
            return TrialRecord::all_lost(n);
        }
    }
    block = rotate_block_by(&block, 2.0 * grover_angle(m) * (t_end - cursor));

    let survivors: Vec<usize> = (0..n).filter(|&i| loss_times[i] >= t_end).collect();
    let target_sub = params.config.target.restrict(&survivors);
    let bits = sample_readout(&block, m, &target_sub, rng);
    record_from_readout(n, &survivors, &bits)
}

/// Generates one trial. Ensemble mode needs the precomputed ensemble state
/// at the readout time (see [`prepare_ensemble`]).
pub fn generate_trial(
    params: &TrialParams,
    ensemble_state: Option<&BlockState>,
    rng: &mut ChaCha12Rng,
) -> Result<TrialRecord> {
    match params.mode {
        SamplingMode::Ensemble => {
            let state = ensemble_state.ok_or_else(|| {
                Error::InvalidConfig("ensemble mode needs the precomputed ensemble state".into())
            })?;
            Ok(ensemble_trial(params, state, rng))
        }
        SamplingMode::Trajectory => Ok(trajectory_trial(params, rng)),
    }
}

/// Generates K trials with substreams derived from `table_seed`; the same
/// seed yields a bit-identical table.
pub fn generate_table_seeded(
    params: &TrialParams,
    k: usize,
    table_seed: u64,
    ensemble_state: Option<&BlockState>,
) -> Result<ExperimentTable> {
    if k < 1 {
        return Err(Error::TooFewTrials {
            required: 1,
            actual: 0,
        });
    }
    params.validate()?;
    let owned;
    let state = match (params.mode, ensemble_state) {
        (SamplingMode::Ensemble, None) => {
            owned = prepare_ensemble(params)?;
            Some(&owned)
        }
        (_, s) => s,
    };
    let trials = (0..k)
        .map(|i| {
            let mut rng = substream(table_seed, StreamDomain::Trial, i as u64);
            generate_trial(params, state, &mut rng)
        })
        .collect::<Result<Vec<_>>>()?;
    ExperimentTable::new(trials)
}

/// Generates K trials under the run seed from the configuration.
pub fn generate_table(params: &TrialParams, k: usize) -> Result<ExperimentTable> {
    generate_table_seeded(params, k, params.config.seed, None)
}

/// Sidecar metadata stored next to a table file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TableMetadata {
    pub config: RegisterConfig,
    pub mode: SamplingMode,
    pub conditioning: SurvivorConditioning,
    pub readout_time: f64,
    pub k_trials: usize,
    pub version: String,
}

impl TableMetadata {
    pub fn new(params: &TrialParams, k_trials: usize) -> Self {
        TableMetadata {
            config: params.config.clone(),
            mode: params.mode,
            conditioning: params.conditioning,
            readout_time: params.readout_time,
            k_trials,
            version: env!("CARGO_PKG_VERSION").to_string(),
        }
    }
}

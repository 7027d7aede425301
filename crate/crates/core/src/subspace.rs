//! Exact reduced dynamics on (p, w, u) blocks.
//!
//! Two primitives drive a trial: the search step, a rotation of the sector
//! Bloch vector, and the single-qubit loss map obtained from the partial
//! trace over one qubit. Both act sector-locally, so a trial with a known
//! loss schedule is a sequence of rotations interleaved with loss maps.

use serde::{Deserialize, Serialize};

use crate::block::{Block, BlockState};
use crate::config::RegisterConfig;
use crate::error::{Error, Result};

/// Decomposition coefficients of the complement state over a bipartition,
/// plus the loss-map constants for the surviving-sector size.
///
/// For a split of n qubits into m kept and n - m lost (N = 2^n, M = 2^m):
/// f = sqrt((N-M)(M-1)/(M(N-1))), g = sqrt((N-M)/(M(N-1))),
/// h = sqrt((M-1)/(N-1)). The single-loss constants follow from the
/// n = m + 1 case: A = g^2 = 1/(2M-1), B = h = sqrt((M-1)/(2M-1)).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LossCoefficients {
    pub f: f64,
    pub g: f64,
    pub h: f64,
    pub a: f64,
    pub b: f64,
}

impl LossCoefficients {
    /// Coefficients for losing n_from - m_to qubits at once.
    pub fn for_transition(n_from: usize, m_to: usize) -> Result<Self> {
        let (f, g, h) = basis_coefficients(n_from, m_to)?;
        let (a, b) = single_loss_constants(m_to);
        Ok(LossCoefficients { f, g, h, a, b })
    }

    /// Coefficients for a single lost qubit, m_to + 1 -> m_to.
    pub fn single_loss(m_to: usize) -> Result<Self> {
        Self::for_transition(m_to + 1, m_to)
    }
}

/// Basis-decomposition coefficients (f, g, h) for splitting the n-qubit
/// complement state over kept (m) and lost (n - m) qubits.
pub fn basis_coefficients(n: usize, m: usize) -> Result<(f64, f64, f64)> {
    if m < 1 || m >= n {
        return Err(Error::InvalidSubspace(format!(
            "basis coefficients need 1 <= m < n, got n = {n}, m = {m}"
        )));
    }
    let big_n = (n as f64).exp2();
    let big_m = (m as f64).exp2();
    let f = ((big_n - big_m) * (big_m - 1.0) / (big_m * (big_n - 1.0))).sqrt();
    let g = ((big_n - big_m) / (big_m * (big_n - 1.0))).sqrt();
    let h = ((big_m - 1.0) / (big_n - 1.0)).sqrt();
    Ok((f, g, h))
}

/// Single-loss map constants (A, B) for M = 2^m surviving states.
pub fn single_loss_constants(m_to: usize) -> (f64, f64) {
    let big_m = (m_to as f64).exp2();
    let a = 1.0 / (2.0 * big_m - 1.0);
    let b = ((big_m - 1.0) / (2.0 * big_m - 1.0)).sqrt();
    (a, b)
}

/// The value printed for A in the source derivation differs from the one
/// implied by its own basis decomposition; kept for the self-test report.
pub fn single_loss_constant_a_alternate(m_to: usize) -> f64 {
    let big_m = (m_to as f64).exp2();
    1.0 / (2.0 * big_m + 1.0)
}

/// Rotation angle per search step in an m-qubit sector:
/// theta_m = 2 asin(2^(-m/2)).
pub fn grover_angle(m: usize) -> f64 {
    2.0 * (-0.5 * m as f64).exp2().asin()
}

/// Small-angle rotation rate 2/sqrt(M) used by the continuous-time model.
pub fn grover_rate(m: usize) -> f64 {
    2.0 * (-0.5 * m as f64).exp2()
}

/// Rotates the sector Bloch vector (w, 2u) by `angle`.
pub fn rotate_block_by(block: &Block, angle: f64) -> Block {
    let (sin, cos) = angle.sin_cos();
    let v = 2.0 * block.u;
    Block {
        p: block.p,
        w: cos * block.w + sin * v,
        u: 0.5 * (-sin * block.w + cos * v),
    }
}

/// Applies k search steps within sector m: a rotation by 2 k theta_m.
pub fn rotate_block(block: &Block, m: usize, k: usize) -> Block {
    if m == 0 || k == 0 {
        return *block;
    }
    rotate_block_by(block, 2.0 * k as f64 * grover_angle(m))
}

/// Single-qubit loss map sending a sector-(m_to + 1) block to sector m_to:
/// w' = (1 - A) w + A p, u' = B u + B (p - w) / (2 sqrt(2M - 1)).
/// Losing the last qubit (m_to = 0) collapses the block to its weight.
pub fn loss_map(block: &Block, m_to: usize) -> Block {
    if m_to == 0 {
        return Block::new(block.p, 0.0, 0.0);
    }
    let (a, b) = single_loss_constants(m_to);
    loss_map_with(block, m_to, a, b)
}

/// Loss map with caller-supplied constants; used by self-checks to compare
/// candidate coefficient values against the dense oracle.
pub fn loss_map_with(block: &Block, m_to: usize, a: f64, b: f64) -> Block {
    if m_to == 0 {
        return Block::new(block.p, 0.0, 0.0);
    }
    let big_m = (m_to as f64).exp2();
    let cross = b / (2.0 * (2.0 * big_m - 1.0).sqrt());
    Block {
        p: block.p,
        w: (1.0 - a) * block.w + a * block.p,
        u: b * block.u + cross * (block.p - block.w),
    }
}

/// Direct multi-qubit loss map n_from -> m_to built from the basis
/// decomposition; equals the composition of single losses.
pub fn loss_map_between(block: &Block, n_from: usize, m_to: usize) -> Result<Block> {
    if m_to == 0 {
        return Ok(Block::new(block.p, 0.0, 0.0));
    }
    let (f, g, h) = basis_coefficients(n_from, m_to)?;
    let g2 = g * g;
    Ok(Block {
        p: block.p,
        w: (1.0 - g2) * block.w + g2 * block.p,
        u: h * block.u + 0.5 * f * g * (block.p - block.w),
    })
}

/// One scheduled loss event: qubit `label` disappears before step `step`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LossEvent {
    pub step: usize,
    pub label: usize,
}

/// An ordered list of loss events for reproducible trials.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct LossSchedule(Vec<LossEvent>);

impl LossSchedule {
    pub fn new(events: Vec<LossEvent>) -> Result<Self> {
        for pair in events.windows(2) {
            if pair[1].step < pair[0].step {
                return Err(Error::InvalidSchedule(format!(
                    "events out of order: step {} after step {}",
                    pair[1].step, pair[0].step
                )));
            }
        }
        for (i, e) in events.iter().enumerate() {
            if events[..i].iter().any(|prev| prev.label == e.label) {
                return Err(Error::InvalidSchedule(format!(
                    "qubit {} lost twice",
                    e.label
                )));
            }
        }
        Ok(LossSchedule(events))
    }

    pub fn empty() -> Self {
        LossSchedule(Vec::new())
    }

    pub fn events(&self) -> &[LossEvent] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Parses lines of `step,label` pairs; blank lines and `#` comments are
    /// skipped.
    pub fn parse(text: &str) -> Result<Self> {
        let mut events = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut parts = line.split(',').map(str::trim);
            let (step, label) = match (parts.next(), parts.next(), parts.next()) {
                (Some(s), Some(l), None) => (s, l),
                _ => {
                    return Err(Error::InvalidSchedule(format!(
                        "line {}: expected `step,label`",
                        lineno + 1
                    )))
                }
            };
            let step = step.parse().map_err(|_| {
                Error::InvalidSchedule(format!("line {}: bad step {step:?}", lineno + 1))
            })?;
            let label = label.parse().map_err(|_| {
                Error::InvalidSchedule(format!("line {}: bad label {label:?}", lineno + 1))
            })?;
            events.push(LossEvent { step, label });
        }
        LossSchedule::new(events)
    }

    pub fn to_csv(&self) -> String {
        self.0
            .iter()
            .map(|e| format!("{},{}\n", e.step, e.label))
            .collect()
    }
}

/// State of a lossy trial after a given number of search steps.
#[derive(Clone, Debug, PartialEq)]
pub struct DiscreteSnapshot {
    /// Steps applied so far.
    pub step: usize,
    /// Surviving-qubit count.
    pub m: usize,
    /// Conditional sector state with unit trace.
    pub block: Block,
    /// Tr[rho^2] of the conditional state.
    pub purity: f64,
}

impl DiscreteSnapshot {
    /// Expands the conditional snapshot into a full block-diagonal state.
    pub fn to_block_state(&self, n: usize) -> BlockState {
        let mut blocks = vec![Block::default(); n + 1];
        blocks[self.m] = if self.m == 0 {
            Block::new(self.block.p, 0.0, 0.0)
        } else {
            self.block
        };
        BlockState::from_blocks(blocks)
    }
}

/// Runs a trial with a fixed loss schedule: starting from the symmetric
/// state, losses scheduled at step s are applied before search step s.
/// Returns one snapshot per step count 0..=n_steps.
pub fn evolve_discrete(
    config: &RegisterConfig,
    schedule: &LossSchedule,
) -> Result<Vec<DiscreteSnapshot>> {
    config.validate()?;
    for e in schedule.events() {
        if e.label >= config.n {
            return Err(Error::InvalidSchedule(format!(
                "qubit label {} outside register of size {}",
                e.label, config.n
            )));
        }
        if e.step >= config.n_steps.max(1) {
            return Err(Error::InvalidSchedule(format!(
                "loss at step {} outside budget of {} steps",
                e.step, config.n_steps
            )));
        }
    }

    let init = BlockState::symmetric_init(config.n);
    let mut m = config.n;
    let mut block = *init.block(config.n);
    let mut snapshots = Vec::with_capacity(config.n_steps + 1);
    snapshots.push(DiscreteSnapshot {
        step: 0,
        m,
        block,
        purity: block.purity(),
    });

    let mut pending = schedule.events().iter().peekable();
    for step in 0..config.n_steps {
        while pending.next_if(|e| e.step == step).is_some() {
            if m == 0 {
                return Err(Error::InvalidSchedule(
                    "loss scheduled after register is empty".into(),
                ));
            }
            block = loss_map(&block, m - 1);
            m -= 1;
        }
        block = rotate_block(&block, m, 1);
        snapshots.push(DiscreteSnapshot {
            step: step + 1,
            m,
            block,
            purity: block.purity(),
        });
    }
    Ok(snapshots)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bitstring::Bitstring;

    const TOL: f64 = 1e-12;

    #[test]
    fn coefficients_for_two_to_one() {
        let (f, g, h) = basis_coefficients(2, 1).unwrap();
        let third = (1f64 / 3.0).sqrt();
        assert!((f - third).abs() < TOL);
        assert!((g - third).abs() < TOL);
        assert!((h - third).abs() < TOL);
    }

    #[test]
    fn coefficients_for_three_to_one() {
        let (_, g, _) = basis_coefficients(3, 1).unwrap();
        assert!((g * g - 3.0 / 7.0).abs() < TOL);
    }

    #[test]
    fn coefficients_are_normalized() {
        for n in 2..=12 {
            for m in 1..n {
                let (f, g, h) = basis_coefficients(n, m).unwrap();
                assert!((f * f + g * g + h * h - 1.0).abs() < TOL, "n={n} m={m}");
            }
        }
    }

    #[test]
    fn coefficients_reject_bad_range() {
        assert!(basis_coefficients(3, 0).is_err());
        assert!(basis_coefficients(3, 3).is_err());
    }

    #[test]
    fn loss_constants_are_probability_like() {
        for m in 1..=20 {
            let (a, b) = single_loss_constants(m);
            assert!((0.0..=1.0).contains(&a));
            assert!((0.0..=1.0).contains(&b));
        }
    }

    #[test]
    fn loss_map_fixes_pure_target() {
        let target = Block::new(1.0, 1.0, 0.0);
        for m_to in 1..=6 {
            let out = loss_map(&target, m_to);
            assert!((out.p - 1.0).abs() < TOL);
            assert!((out.w - 1.0).abs() < TOL);
            assert!(out.u.abs() < TOL);
        }
    }

    #[test]
    fn loss_map_on_pure_complement() {
        // dense cross-check pins A = 1/3 and B = sqrt(1/3) at M = 2
        let complement = Block::new(1.0, -1.0, 0.0);
        let out = loss_map(&complement, 1);
        assert!((out.w - (-1.0 / 3.0)).abs() < TOL);
        assert!((out.u - 1.0 / 3.0).abs() < TOL);
    }

    #[test]
    fn loss_map_preserves_trace() {
        let block = Block::new(0.7, 0.2, 0.1);
        for m_to in 0..=5 {
            assert_eq!(loss_map(&block, m_to).p, 0.7);
        }
    }

    #[test]
    fn loss_to_empty_register_collapses() {
        let block = Block::new(0.8, 0.3, 0.1);
        let out = loss_map(&block, 0);
        assert_eq!(out, Block::new(0.8, 0.0, 0.0));
    }

    #[test]
    fn sequential_losses_match_direct_map() {
        let block = Block::new(1.0, -0.4, 0.21);
        for n_from in 3..=8 {
            for m_to in 1..n_from - 1 {
                let mut step = block;
                for m in (m_to..n_from).rev() {
                    step = loss_map(&step, m);
                }
                let direct = loss_map_between(&block, n_from, m_to).unwrap();
                assert!((step.w - direct.w).abs() < TOL, "n={n_from} m={m_to}");
                assert!((step.u - direct.u).abs() < TOL, "n={n_from} m={m_to}");
            }
        }
    }

    #[test]
    fn rotation_identity_at_zero_steps() {
        let block = Block::new(1.0, -0.3, 0.2);
        assert_eq!(rotate_block(&block, 3, 0), block);
    }

    #[test]
    fn rotation_solves_four_element_search() {
        let init = BlockState::symmetric_init(2);
        let out = rotate_block(init.block(2), 2, 1);
        assert!((out.p - 1.0).abs() < TOL);
        assert!((out.w - 1.0).abs() < TOL);
        assert!(out.u.abs() < TOL);
    }

    #[test]
    fn rotation_matches_success_closed_form() {
        let n = 8;
        let k = 12;
        let init = BlockState::symmetric_init(n);
        let out = rotate_block(init.block(n), n, k);
        let theta = grover_angle(n);
        let expected = ((2 * k + 1) as f64 * theta / 2.0).sin().powi(2);
        assert!(((out.p + out.w) / 2.0 - expected).abs() < 1e-12);
    }

    #[test]
    fn rotation_preserves_bloch_length() {
        let block = Block::new(0.9, 0.5, 0.3);
        let before = block.bloch_length_sq();
        for k in [1, 7, 1000] {
            let after = rotate_block(&block, 4, k).bloch_length_sq();
            assert!((after - before).abs() < 1e-12);
        }
    }

    #[test]
    fn schedule_rejects_disorder_and_repeats() {
        assert!(LossSchedule::new(vec![
            LossEvent { step: 3, label: 0 },
            LossEvent { step: 1, label: 1 },
        ])
        .is_err());
        assert!(LossSchedule::new(vec![
            LossEvent { step: 1, label: 0 },
            LossEvent { step: 2, label: 0 },
        ])
        .is_err());
    }

    #[test]
    fn schedule_parses_csv() {
        let s = LossSchedule::parse("# lost qubits\n0,2\n4,0\n").unwrap();
        assert_eq!(
            s.events(),
            &[
                LossEvent { step: 0, label: 2 },
                LossEvent { step: 4, label: 0 },
            ]
        );
        assert_eq!(LossSchedule::parse(&s.to_csv()).unwrap(), s);
        assert!(LossSchedule::parse("0,a").is_err());
        assert!(LossSchedule::parse("0").is_err());
    }

    #[test]
    fn lossless_two_qubit_run_reaches_target() {
        let config =
            RegisterConfig::new(2, Bitstring::ones(2), 0.0, 1, 0).unwrap();
        let snaps = evolve_discrete(&config, &LossSchedule::empty()).unwrap();
        assert_eq!(snaps.len(), 2);
        let last = &snaps[1];
        assert_eq!(last.m, 2);
        assert!((last.block.w - 1.0).abs() < TOL);
        assert!((last.purity - 1.0).abs() < TOL);
    }

    #[test]
    fn losing_every_qubit_leaves_scalar_weight() {
        let config = RegisterConfig::new(3, Bitstring::ones(3), 0.0, 5, 0).unwrap();
        let schedule = LossSchedule::new(
            (0..3).map(|label| LossEvent { step: 1, label }).collect(),
        )
        .unwrap();
        let snaps = evolve_discrete(&config, &schedule).unwrap();
        let last = snaps.last().unwrap();
        assert_eq!(last.m, 0);
        assert!((last.block.p - 1.0).abs() < TOL);
        let state = last.to_block_state(3);
        assert!(state.validate().is_empty());
        assert!((state.block(0).p - 1.0).abs() < TOL);
    }

    #[test]
    fn schedule_rejects_label_outside_register() {
        let config = RegisterConfig::new(2, Bitstring::ones(2), 0.0, 5, 0).unwrap();
        let schedule = LossSchedule::new(vec![
            LossEvent { step: 0, label: 0 },
            LossEvent { step: 0, label: 1 },
            LossEvent { step: 1, label: 2 },
        ])
        .unwrap();
        assert!(evolve_discrete(&config, &schedule).is_err());
    }
}

//! Block-diagonal reduced states.
//!
//! The register state under loss decomposes into one two-dimensional sector
//! per surviving-qubit count m. Each sector is stored as a triple
//! (p, w, u): trace weight, population difference between the target and
//! the symmetric complement, and the real part of their coherence. The
//! m = 0 sector is a scalar and carries only p.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Slack for positivity and normalization checks on individual blocks.
pub const BLOCK_SLACK: f64 = 1e-12;

/// Allowed total-trace drift across an accumulated integration.
pub const TRACE_TOLERANCE: f64 = 1e-9;

/// One two-dimensional sector of the reduced density matrix.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Block {
    /// Trace weight of the sector.
    pub p: f64,
    /// Population difference (target minus complement), scaled by `p`.
    pub w: f64,
    /// Real coherence between target and complement, scaled by `p`.
    pub u: f64,
}

impl Block {
    pub fn new(p: f64, w: f64, u: f64) -> Self {
        Block { p, w, u }
    }

    /// Squared Bloch-vector length w^2 + 4u^2 of the unnormalized sector.
    pub fn bloch_length_sq(&self) -> f64 {
        self.w * self.w + 4.0 * self.u * self.u
    }

    /// Tr[rho^2] of the 2x2 sector matrix with trace `p`.
    pub fn purity(&self) -> f64 {
        0.5 * (self.p * self.p + self.bloch_length_sq())
    }

    /// Target population (p + w)/2 of the sector.
    pub fn target_population(&self) -> f64 {
        0.5 * (self.p + self.w)
    }

    /// Sector rescaled to unit trace.
    pub fn normalized(&self) -> Block {
        Block {
            p: 1.0,
            w: self.w / self.p,
            u: self.u / self.p,
        }
    }

    fn check(&self, m: usize, violations: &mut Vec<Violation>) {
        if self.p < -BLOCK_SLACK {
            violations.push(Violation::NegativeWeight { m, p: self.p });
        }
        if m == 0 {
            if self.w != 0.0 || self.u != 0.0 {
                violations.push(Violation::ScalarSector {
                    m,
                    w: self.w,
                    u: self.u,
                });
            }
            return;
        }
        if self.w.abs() > self.p + BLOCK_SLACK {
            violations.push(Violation::PopulationBound {
                m,
                p: self.p,
                w: self.w,
            });
        }
        let det = 0.25 * (self.p * self.p - self.w * self.w) - self.u * self.u;
        if det < -BLOCK_SLACK {
            violations.push(Violation::Positivity { m, det });
        }
    }
}

/// A failed block-state invariant, reported by [`BlockState::validate`].
#[derive(Clone, Debug, PartialEq)]
pub enum Violation {
    NegativeWeight { m: usize, p: f64 },
    PopulationBound { m: usize, p: f64, w: f64 },
    Positivity { m: usize, det: f64 },
    ScalarSector { m: usize, w: f64, u: f64 },
    TraceSum { sum: f64 },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::NegativeWeight { m, p } => {
                write!(f, "block {m}: weight p = {p:.3e} < 0")
            }
            Violation::PopulationBound { m, p, w } => {
                write!(f, "block {m}: |w| = {:.3e} exceeds p = {p:.3e}", w.abs())
            }
            Violation::Positivity { m, det } => {
                write!(f, "block {m}: (p^2 - w^2)/4 - u^2 = {det:.3e} < 0")
            }
            Violation::ScalarSector { m, w, u } => {
                write!(f, "block {m}: scalar sector has w = {w:.3e}, u = {u:.3e}")
            }
            Violation::TraceSum { sum } => {
                write!(f, "total trace {sum:.12} differs from 1")
            }
        }
    }
}

/// The full block-diagonal state: one [`Block`] per sector m = 0..=n.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlockState {
    blocks: Vec<Block>,
}

impl BlockState {
    /// Builds a state from raw blocks; index m runs 0..=n.
    pub fn from_blocks(blocks: Vec<Block>) -> Self {
        assert!(!blocks.is_empty(), "block state needs at least the m = 0 sector");
        BlockState { blocks }
    }

    /// All weight in the lossless sector m = n, in the even superposition of
    /// every basis state: w = 2/N - 1, u = sqrt(N - 1)/N with N = 2^n.
    pub fn symmetric_init(n: usize) -> Self {
        let big_n = (n as f64).exp2();
        let mut blocks = vec![Block::default(); n + 1];
        blocks[n] = Block::new(1.0, 2.0 / big_n - 1.0, (big_n - 1.0).sqrt() / big_n);
        BlockState { blocks }
    }

    /// Register size n (sector count minus one).
    pub fn n(&self) -> usize {
        self.blocks.len() - 1
    }

    pub fn block(&self, m: usize) -> &Block {
        &self.blocks[m]
    }

    pub fn block_mut(&mut self, m: usize) -> &mut Block {
        &mut self.blocks[m]
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn total_trace(&self) -> f64 {
        self.blocks.iter().map(|b| b.p).sum()
    }

    /// Mean surviving-qubit count sum_m m p_m.
    pub fn mean_survivors(&self) -> f64 {
        self.blocks
            .iter()
            .enumerate()
            .map(|(m, b)| m as f64 * b.p)
            .sum()
    }

    /// Sum of the population differences over all sectors.
    pub fn sum_w(&self) -> f64 {
        self.blocks.iter().map(|b| b.w).sum()
    }

    /// Sum of the real coherences over all sectors.
    pub fn sum_u(&self) -> f64 {
        self.blocks.iter().map(|b| b.u).sum()
    }

    /// Checks every invariant; returns an empty list when the state is valid.
    pub fn validate(&self) -> Vec<Violation> {
        let mut violations = Vec::new();
        for (m, block) in self.blocks.iter().enumerate() {
            block.check(m, &mut violations);
        }
        let sum = self.total_trace();
        if (sum - 1.0).abs() > TRACE_TOLERANCE {
            violations.push(Violation::TraceSum { sum });
        }
        violations
    }

    /// Relative target population F_m = (p_m + w_m)/(2 p_m) of sector m.
    pub fn target_fraction(&self, m: usize) -> Result<f64> {
        let block = &self.blocks[m];
        if block.p <= BLOCK_SLACK {
            return Err(Error::EmptySector { m, p: block.p });
        }
        Ok(block.target_population() / block.p)
    }

    /// Probability that reading out the surviving qubits yields the target
    /// restricted to them: sum over m >= 1 of (p_m + w_m)/2.
    pub fn weighted_target_probability(&self) -> f64 {
        self.blocks
            .iter()
            .skip(1)
            .map(Block::target_population)
            .sum()
    }
}

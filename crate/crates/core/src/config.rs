//! Problem-instance configuration shared by all simulation modes.

use serde::{Deserialize, Serialize};

use crate::bitstring::Bitstring;
use crate::error::{Error, Result};

/// Largest register supported by the block dynamics.
pub const MAX_REGISTER_QUBITS: usize = 30;

/// One search problem instance: register size, target pattern, per-qubit
/// loss probability per Grover step, step budget and RNG seed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegisterConfig {
    pub n: usize,
    pub target: Bitstring,
    pub gamma: f64,
    pub n_steps: usize,
    pub seed: u64,
}

impl RegisterConfig {
    pub fn new(n: usize, target: Bitstring, gamma: f64, n_steps: usize, seed: u64) -> Result<Self> {
        let config = RegisterConfig {
            n,
            target,
            gamma,
            n_steps,
            seed,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 1 || self.n > MAX_REGISTER_QUBITS {
            return Err(Error::InvalidConfig(format!(
                "n = {} outside supported range 1..={MAX_REGISTER_QUBITS}",
                self.n
            )));
        }
        if self.target.len() != self.n {
            return Err(Error::InvalidConfig(format!(
                "target has {} bits, register has {}",
                self.target.len(),
                self.n
            )));
        }
        if !self.gamma.is_finite() || self.gamma < 0.0 {
            return Err(Error::InvalidConfig(format!(
                "loss rate gamma = {} must be finite and >= 0",
                self.gamma
            )));
        }
        Ok(())
    }

    /// Hilbert-space dimension 2^n.
    pub fn dimension(&self) -> f64 {
        (self.n as f64).exp2()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn target(n: usize) -> Bitstring {
        Bitstring::ones(n)
    }

    #[test]
    fn accepts_valid_config() {
        let c = RegisterConfig::new(4, target(4), 1e-3, 100, 7).unwrap();
        assert_eq!(c.dimension(), 16.0);
    }

    #[test]
    fn rejects_target_length_mismatch() {
        assert!(RegisterConfig::new(4, target(3), 0.0, 10, 0).is_err());
    }

    #[test]
    fn rejects_negative_gamma() {
        assert!(RegisterConfig::new(4, target(4), -1e-3, 10, 0).is_err());
    }

    #[test]
    fn rejects_oversized_register() {
        assert!(RegisterConfig::new(31, target(31), 0.0, 10, 0).is_err());
    }
}

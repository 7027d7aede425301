//! Fixed-length bitstrings indexing computational basis states.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A classical bit pattern, e.g. a search target or a decoded estimate.
///
/// Bit 0 is the leftmost character of the textual form and the most
/// significant bit of the basis-state index.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Bitstring(Vec<bool>);

impl Bitstring {
    pub fn new(bits: Vec<bool>) -> Self {
        Bitstring(bits)
    }

    /// All-ones string of length `n`.
    pub fn ones(n: usize) -> Self {
        Bitstring(vec![true; n])
    }

    /// All-zeros string of length `n`.
    pub fn zeros(n: usize) -> Self {
        Bitstring(vec![false; n])
    }

    /// Uniformly random string of length `n`.
    pub fn random<R: Rng>(n: usize, rng: &mut R) -> Self {
        Bitstring((0..n).map(|_| rng.gen::<bool>()).collect())
    }

    /// Decodes a basis-state index back into bits (MSB first).
    pub fn from_index(index: u64, n: usize) -> Self {
        Bitstring((0..n).map(|pos| (index >> (n - 1 - pos)) & 1 == 1).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn bit(&self, pos: usize) -> bool {
        self.0[pos]
    }

    pub fn bits(&self) -> &[bool] {
        &self.0
    }

    /// Basis-state index of this pattern (bit 0 is the MSB).
    pub fn index(&self) -> u64 {
        self.0
            .iter()
            .fold(0u64, |acc, &b| (acc << 1) | u64::from(b))
    }

    /// Keeps only the listed positions, in the order given.
    pub fn restrict(&self, positions: &[usize]) -> Self {
        Bitstring(positions.iter().map(|&p| self.0[p]).collect())
    }

    pub fn flipped(&self, pos: usize) -> Self {
        let mut bits = self.0.clone();
        bits[pos] = !bits[pos];
        Bitstring(bits)
    }

    pub fn complement(&self) -> Self {
        Bitstring(self.0.iter().map(|&b| !b).collect())
    }

    /// Number of positions where `self` and `other` agree.
    pub fn agreement(&self, other: &Bitstring) -> Result<usize> {
        if self.len() != other.len() {
            return Err(Error::LengthMismatch {
                expected: self.len(),
                actual: other.len(),
            });
        }
        Ok(self
            .0
            .iter()
            .zip(&other.0)
            .filter(|(a, b)| a == b)
            .count())
    }
}

impl fmt::Display for Bitstring {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.0 {
            write!(f, "{}", u8::from(b))?;
        }
        Ok(())
    }
}

impl FromStr for Bitstring {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        s.chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                _ => Err(Error::ParseBitstring(s.to_string())),
            })
            .collect::<Result<Vec<_>>>()
            .map(Bitstring)
    }
}

impl TryFrom<String> for Bitstring {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<Bitstring> for String {
    fn from(b: Bitstring) -> String {
        b.to_string()
    }
}

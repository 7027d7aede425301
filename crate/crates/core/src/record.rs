//! Readout records and experiment tables.
//!
//! A trial record holds one entry per register position: the measured bit
//! or a marker for a lost qubit. Lost entries appear as 0.5 in the numeric
//! table format and only there; decoding logic works on the enum.

use std::fmt;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::bitstring::Bitstring;
use crate::error::{Error, Result};

/// One readout position: a measured bit or a lost qubit.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TrialEntry {
    Zero,
    One,
    Lost,
}

impl TrialEntry {
    pub fn from_bit(bit: bool) -> Self {
        if bit {
            TrialEntry::One
        } else {
            TrialEntry::Zero
        }
    }

    /// Numeric table encoding: 0, 1 or 0.5.
    pub fn to_numeric(self) -> f64 {
        match self {
            TrialEntry::Zero => 0.0,
            TrialEntry::One => 1.0,
            TrialEntry::Lost => 0.5,
        }
    }

    fn to_token(self) -> &'static str {
        match self {
            TrialEntry::Zero => "0",
            TrialEntry::One => "1",
            TrialEntry::Lost => "0.5",
        }
    }

    fn from_token(token: &str) -> Option<Self> {
        match token {
            "0" => Some(TrialEntry::Zero),
            "1" => Some(TrialEntry::One),
            "0.5" => Some(TrialEntry::Lost),
            _ => None,
        }
    }

    /// Signed vote used by the decoders: +1, -1 or 0.
    pub fn vote(self) -> i64 {
        match self {
            TrialEntry::One => 1,
            TrialEntry::Zero => -1,
            TrialEntry::Lost => 0,
        }
    }
}

/// The readout string of one trial.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrialRecord(Vec<TrialEntry>);

impl TrialRecord {
    pub fn new(entries: Vec<TrialEntry>) -> Self {
        TrialRecord(entries)
    }

    pub fn all_lost(n: usize) -> Self {
        TrialRecord(vec![TrialEntry::Lost; n])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn entry(&self, pos: usize) -> TrialEntry {
        self.0[pos]
    }

    pub fn entries(&self) -> &[TrialEntry] {
        &self.0
    }

    pub fn set(&mut self, pos: usize, entry: TrialEntry) {
        self.0[pos] = entry;
    }

    pub fn survivors(&self) -> usize {
        self.0.iter().filter(|e| **e != TrialEntry::Lost).count()
    }

    /// One numeric CSV row.
    pub fn to_csv_row(&self) -> String {
        self.0
            .iter()
            .map(|e| e.to_token())
            .collect::<Vec<_>>()
            .join(",")
    }

    /// Parses a numeric CSV row; `row` is used for error reporting only.
    pub fn from_csv_row(line: &str, row: usize) -> Result<Self> {
        line.split(',')
            .enumerate()
            .map(|(col, token)| {
                TrialEntry::from_token(token.trim()).ok_or_else(|| Error::ParseTable {
                    row,
                    col: col + 1,
                    token: token.trim().to_string(),
                })
            })
            .collect::<Result<Vec<_>>>()
            .map(TrialRecord)
    }
}

impl fmt::Display for TrialRecord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_csv_row())
    }
}

/// K trial records of common length.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExperimentTable(Vec<TrialRecord>);

impl ExperimentTable {
    pub fn new(trials: Vec<TrialRecord>) -> Result<Self> {
        let first = trials.first().ok_or(Error::TooFewTrials {
            required: 1,
            actual: 0,
        })?;
        let n = first.len();
        for (i, t) in trials.iter().enumerate() {
            if t.len() != n {
                return Err(Error::RaggedTable {
                    row: i + 1,
                    expected: n,
                    actual: t.len(),
                });
            }
        }
        Ok(ExperimentTable(trials))
    }

    pub fn k(&self) -> usize {
        self.0.len()
    }

    pub fn n_bits(&self) -> usize {
        self.0[0].len()
    }

    pub fn trial(&self, k: usize) -> &TrialRecord {
        &self.0[k]
    }

    pub fn trials(&self) -> &[TrialRecord] {
        &self.0
    }

    pub fn write_csv<W: Write>(&self, out: &mut W) -> Result<()> {
        for t in &self.0 {
            writeln!(out, "{}", t.to_csv_row())?;
        }
        Ok(())
    }

    pub fn read_csv<R: BufRead>(reader: R) -> Result<Self> {
        let mut trials = Vec::new();
        for (i, line) in reader.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            trials.push(TrialRecord::from_csv_row(&line, i + 1)?);
        }
        ExperimentTable::new(trials)
    }

    /// Flips bit `pos` in every trial (lost entries stay lost).
    pub fn with_bit_flipped(&self, pos: usize) -> Self {
        let trials = self
            .0
            .iter()
            .map(|t| {
                let mut t = t.clone();
                t.set(
                    pos,
                    match t.entry(pos) {
                        TrialEntry::Zero => TrialEntry::One,
                        TrialEntry::One => TrialEntry::Zero,
                        TrialEntry::Lost => TrialEntry::Lost,
                    },
                );
                t
            })
            .collect();
        ExperimentTable(trials)
    }

    pub fn with_rows_permuted(&self, order: &[usize]) -> Self {
        ExperimentTable(order.iter().map(|&k| self.0[k].clone()).collect())
    }
}

/// Decoded estimate with the positions where the decoder had no preference
/// before tie-breaking, and optionally the agreement count with a reference.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReconstructionResult {
    pub estimate: Bitstring,
    pub unresolved: Vec<bool>,
    pub n_correct: Option<usize>,
}

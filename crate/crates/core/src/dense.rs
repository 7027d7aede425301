//! Brute-force density-matrix simulator for small registers.
//!
//! Serves as ground truth for the reduced block dynamics: it carries the
//! full 2^n x 2^n density operator, applies the search step as two
//! reflections and implements the loss channel as a literal partial trace.
//! Limited to 10 qubits.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::bitstring::Bitstring;
use crate::error::{Error, Result};

/// Dense-simulator register limit.
pub const MAX_ORACLE_QUBITS: usize = 10;

/// Tolerance for Hermiticity and trace checks on dense states.
pub const DENSE_TOLERANCE: f64 = 1e-12;

/// Projection of a dense state onto the two-dimensional sector spanned by
/// the target and the symmetric complement of the surviving qubits.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BlockProjection {
    /// Weight inside the sector.
    pub p: f64,
    /// Population difference target minus complement.
    pub w: f64,
    /// Real part of the coherence.
    pub u: f64,
    /// Imaginary part of the coherence (stays at rounding level).
    pub u_imag: f64,
    /// Weight outside the two-dimensional span.
    pub leakage: f64,
}

/// Full density operator over the surviving qubits, with their original
/// labels retained so loss schedules can reference physical positions.
#[derive(Clone, Debug)]
pub struct DenseState {
    labels: Vec<usize>,
    mat: DMatrix<Complex64>,
}

impl DenseState {
    /// Product state with every qubit in (|0> + |1>)/sqrt(2); all matrix
    /// entries equal 1/2^n.
    pub fn symmetric(n: usize) -> Result<Self> {
        if n < 1 || n > MAX_ORACLE_QUBITS {
            return Err(Error::DimensionLimit {
                n,
                max: MAX_ORACLE_QUBITS,
            });
        }
        let dim = 1usize << n;
        let amp = Complex64::new(1.0 / dim as f64, 0.0);
        Ok(DenseState {
            labels: (0..n).collect(),
            mat: DMatrix::from_element(dim, dim, amp),
        })
    }

    /// Pure state on the normalized complement of the target: the even
    /// superposition of every basis state except `target`.
    pub fn pure_complement(target: &Bitstring) -> Result<Self> {
        let n = target.len();
        if n < 1 || n > MAX_ORACLE_QUBITS {
            return Err(Error::DimensionLimit {
                n,
                max: MAX_ORACLE_QUBITS,
            });
        }
        let dim = 1usize << n;
        let t = target.index() as usize;
        let amp = Complex64::new(1.0 / (dim as f64 - 1.0), 0.0);
        let mut mat = DMatrix::from_element(dim, dim, amp);
        for i in 0..dim {
            mat[(t, i)] = Complex64::new(0.0, 0.0);
            mat[(i, t)] = Complex64::new(0.0, 0.0);
        }
        Ok(DenseState {
            labels: (0..n).collect(),
            mat,
        })
    }

    pub fn qubits(&self) -> usize {
        self.labels.len()
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    /// Labels of the physical qubits still present, in index order.
    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.mat
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim()).map(|i| self.mat[(i, i)].re).sum()
    }

    /// Tr[rho^2]; for Hermitian rho this is the squared Frobenius norm.
    pub fn purity(&self) -> f64 {
        self.mat.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn hermiticity_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.dim() {
            for j in 0..self.dim() {
                let d = (self.mat[(i, j)] - self.mat[(j, i)].conj()).norm();
                worst = worst.max(d);
            }
        }
        worst
    }

    /// Smallest eigenvalue of the (Hermitian) density operator.
    pub fn min_eigenvalue(&self) -> f64 {
        let eigen = self.mat.clone().symmetric_eigen();
        eigen.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// One search step: sign flip on the target amplitude followed by the
    /// inversion of all amplitudes about their mean.
    pub fn grover_step(&self, target: &Bitstring) -> Result<Self> {
        if target.len() != self.qubits() {
            return Err(Error::LengthMismatch {
                expected: self.qubits(),
                actual: target.len(),
            });
        }
        let dim = self.dim();
        let t = target.index() as usize;
        let mut mat = self.mat.clone();

        // oracle reflection: rho -> O rho O with O = I - 2|t><t|
        for j in 0..dim {
            mat[(t, j)] = -mat[(t, j)];
        }
        for i in 0..dim {
            mat[(i, t)] = -mat[(i, t)];
        }

        // diffusion reflection: rho -> D rho D with D = 2|sym><sym| - I,
        // applied through row sums, column sums and the total sum
        let row: Vec<Complex64> = (0..dim).map(|i| mat.row(i).sum()).collect();
        let col: Vec<Complex64> = (0..dim).map(|j| mat.column(j).sum()).collect();
        let total: Complex64 = row.iter().sum();
        let inv_dim = 1.0 / dim as f64;
        let mean_shift = 4.0 * total * inv_dim * inv_dim;
        for i in 0..dim {
            for j in 0..dim {
                mat[(i, j)] += mean_shift - 2.0 * inv_dim * (row[i] + col[j]);
            }
        }

        Ok(DenseState {
            labels: self.labels.clone(),
            mat,
        })
    }

    /// Traces out the qubits with the given labels. Tracing out every qubit
    /// yields the degenerate scalar state with matrix [1].
    pub fn partial_trace(&self, lost: &[usize]) -> Result<Self> {
        let mut lost_pos = Vec::with_capacity(lost.len());
        for &label in lost {
            let pos = self
                .labels
                .iter()
                .position(|&l| l == label)
                .ok_or(Error::UnknownLabel { label })?;
            if lost_pos.contains(&pos) {
                return Err(Error::UnknownLabel { label });
            }
            lost_pos.push(pos);
        }

        let n = self.qubits();
        let kept_pos: Vec<usize> = (0..n).filter(|p| !lost_pos.contains(p)).collect();
        let kept = kept_pos.len();
        let dim_kept = 1usize << kept;
        let mut out = DMatrix::from_element(dim_kept, dim_kept, Complex64::new(0.0, 0.0));

        // bit of position pos within a full index (MSB first)
        let bit = |index: usize, pos: usize| (index >> (n - 1 - pos)) & 1;
        let dim = self.dim();
        for i in 0..dim {
            for j in 0..dim {
                if lost_pos.iter().any(|&pos| bit(i, pos) != bit(j, pos)) {
                    continue;
                }
                let mut ri = 0usize;
                let mut rj = 0usize;
                for &pos in &kept_pos {
                    ri = (ri << 1) | bit(i, pos);
                    rj = (rj << 1) | bit(j, pos);
                }
                out[(ri, rj)] += self.mat[(i, j)];
            }
        }

        Ok(DenseState {
            labels: kept_pos.iter().map(|&p| self.labels[p]).collect(),
            mat: out,
        })
    }

    /// Components of the state in the sector basis {target, complement} of
    /// the surviving qubits. `target` must already be restricted to the
    /// surviving labels.
    pub fn project_block(&self, target: &Bitstring) -> Result<BlockProjection> {
        if target.len() != self.qubits() {
            return Err(Error::LengthMismatch {
                expected: self.qubits(),
                actual: target.len(),
            });
        }
        if self.qubits() == 0 {
            return Err(Error::InvalidSubspace(
                "projection requires at least one surviving qubit".into(),
            ));
        }
        let dim = self.dim();
        let t = target.index() as usize;
        let norm = 1.0 / (dim as f64 - 1.0);

        let rho_tt = self.mat[(t, t)];
        let row_t: Complex64 = self.mat.row(t).sum();
        let col_t: Complex64 = self.mat.column(t).sum();
        let total: Complex64 = self.mat.iter().sum();

        // <s|rho|s> over the normalized complement of the target
        let rho_ss = (total - row_t - col_t + rho_tt) * norm;
        // <t|rho|s>
        let rho_ts = (row_t - rho_tt) / (dim as f64 - 1.0).sqrt();

        let p = rho_tt.re + rho_ss.re;
        Ok(BlockProjection {
            p,
            w: rho_tt.re - rho_ss.re,
            u: rho_ts.re,
            u_imag: rho_ts.im,
            leakage: 1.0 - p,
        })
    }
}

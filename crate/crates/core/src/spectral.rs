//! Full eigensystem of a sector Hamiltonian and exact propagation in it.

use ndarray::Array2;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fock::{FockState, SectorBasis};
use crate::hamiltonian::SparseSymMatrix;
use crate::linalg::{SymmetricEigen, DEFAULT_QL_ITERATIONS};

pub const DEFAULT_DENSE_CAP: usize = 5000;

/// Gap below which the ground level is flagged as degenerate.
pub const DEGENERACY_GAP: f64 = 1e-10;

#[derive(Clone, Copy, Debug)]
pub struct EighOptions {
    pub dense_cap: usize,
    pub max_iterations: usize,
}

impl Default for EighOptions {
    fn default() -> Self {
        Self {
            dense_cap: DEFAULT_DENSE_CAP,
            max_iterations: DEFAULT_QL_ITERATIONS,
        }
    }
}

/// `H = V diag(E) Vᵀ` with ascending `E`. Each eigenvector's largest-magnitude
/// entry is positive.
#[derive(Clone, Debug)]
pub struct SpectralDecomposition {
    eigenvalues: Vec<f64>,
    /// Column `k` pairs with `eigenvalues[k]`.
    eigenvectors: Array2<f64>,
}

impl SpectralDecomposition {
    pub fn eigh(h: &SparseSymMatrix) -> Result<Self> {
        Self::eigh_with(h, EighOptions::default())
    }

    pub fn eigh_with(h: &SparseSymMatrix, options: EighOptions) -> Result<Self> {
        let n = h.dim();
        if n > options.dense_cap {
            return Err(Error::DenseCapExceeded {
                dim: n,
                cap: options.dense_cap,
            });
        }
        let eig = SymmetricEigen::with_iteration_cap(&h.to_dense(), n, options.max_iterations)?;
        let mut eigenvectors = eig.vectors.reversed_axes().as_standard_layout().into_owned();
        for mut col in eigenvectors.columns_mut() {
            let mut pivot = 0.0f64;
            for &x in col.iter() {
                if x.abs() > pivot.abs() {
                    pivot = x;
                }
            }
            if pivot < 0.0 {
                col.mapv_inplace(|x| -x);
            }
        }
        Ok(Self {
            eigenvalues: eig.values,
            eigenvectors,
        })
    }

    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn eigenvectors(&self) -> &Array2<f64> {
        &self.eigenvectors
    }

    pub fn eigenvector(&self, k: usize) -> Vec<f64> {
        self.eigenvectors.column(k).to_vec()
    }

    /// Overlaps `c_n = ⟨n|ψ⟩`.
    pub fn project(&self, psi: &[Complex64]) -> Result<Vec<Complex64>> {
        self.check_len(psi.len())?;
        let mut c = vec![Complex64::default(); self.dim()];
        for (row, &amp) in self.eigenvectors.rows().into_iter().zip(psi) {
            if amp == Complex64::default() {
                continue;
            }
            for (ck, &v) in c.iter_mut().zip(row.iter()) {
                *ck += amp * v;
            }
        }
        Ok(c)
    }

    /// `ψ = Σ_n c_n |n⟩`.
    pub fn expand(&self, overlaps: &[Complex64]) -> Result<Vec<Complex64>> {
        self.check_len(overlaps.len())?;
        Ok(self
            .eigenvectors
            .rows()
            .into_iter()
            .map(|row| row.iter().zip(overlaps).map(|(&v, c)| c * v).sum())
            .collect())
    }

    /// Row-major dense `V diag(E) Vᵀ`.
    pub fn reconstruct(&self) -> Vec<f64> {
        let n = self.dim();
        let v = &self.eigenvectors;
        let mut m = vec![0.0; n * n];
        for i in 0..n {
            for j in i..n {
                let s: f64 = (0..n).map(|k| v[[i, k]] * self.eigenvalues[k] * v[[j, k]]).sum();
                m[i * n + j] = s;
                m[j * n + i] = s;
            }
        }
        m
    }

    fn check_len(&self, len: usize) -> Result<()> {
        if len != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: len,
            });
        }
        Ok(())
    }
}

/// A pure state with its expansion in the energy eigenbasis kept alongside.
#[derive(Clone, Debug)]
pub struct QuenchState {
    amplitudes: Vec<Complex64>,
    overlaps: Vec<Complex64>,
    time: f64,
}

impl QuenchState {
    pub fn from_amplitudes(decomp: &SpectralDecomposition, amplitudes: Vec<Complex64>) -> Result<Self> {
        let overlaps = decomp.project(&amplitudes)?;
        Ok(Self {
            amplitudes,
            overlaps,
            time: 0.0,
        })
    }

    pub fn from_overlaps(decomp: &SpectralDecomposition, overlaps: Vec<Complex64>, time: f64) -> Result<Self> {
        let amplitudes = decomp.expand(&overlaps)?;
        Ok(Self {
            amplitudes,
            overlaps,
            time,
        })
    }

    /// A single Fock configuration, e.g. the unit-filling Mott state.
    pub fn fock(basis: &SectorBasis, decomp: &SpectralDecomposition, state: &FockState) -> Result<Self> {
        let idx = basis.index_of(state).ok_or_else(|| {
            Error::InvalidArgument(format!(
                "{state} is not in the ({}, {}) sector",
                basis.sites(),
                basis.particles()
            ))
        })?;
        let mut amplitudes = vec![Complex64::default(); basis.len()];
        amplitudes[idx] = Complex64::new(1.0, 0.0);
        Self::from_amplitudes(decomp, amplitudes)
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn overlaps(&self) -> &[Complex64] {
        &self.overlaps
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.iter().map(Complex64::norm_sqr).sum::<f64>().sqrt()
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amplitudes.iter().map(Complex64::norm_sqr).collect()
    }

    /// `⟨ψ|H|ψ⟩` from the eigenbasis weights.
    pub fn energy(&self, decomp: &SpectralDecomposition) -> f64 {
        self.overlaps
            .iter()
            .zip(decomp.eigenvalues())
            .map(|(c, e)| c.norm_sqr() * e)
            .sum()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GroundInfo {
    pub energy: f64,
    pub gap: f64,
    pub degenerate: bool,
}

pub fn ground_state(decomp: &SpectralDecomposition) -> Result<(QuenchState, GroundInfo)> {
    let n = decomp.dim();
    if n == 0 {
        return Err(Error::InvalidArgument("empty spectrum".into()));
    }
    let energies = decomp.eigenvalues();
    let gap = if n > 1 {
        energies[1] - energies[0]
    } else {
        f64::INFINITY
    };
    let mut overlaps = vec![Complex64::default(); n];
    overlaps[0] = Complex64::new(1.0, 0.0);
    let state = QuenchState::from_overlaps(decomp, overlaps, 0.0)?;
    Ok((
        state,
        GroundInfo {
            energy: energies[0],
            gap,
            degenerate: gap < DEGENERACY_GAP,
        },
    ))
}

/// `ψ(t) = Σ_n e^{-i E_n t} c_n |n⟩`, with `t` measured from `psi0`.
pub fn evolve(decomp: &SpectralDecomposition, psi0: &QuenchState, t: f64) -> Result<QuenchState> {
    decomp.check_len(psi0.overlaps.len())?;
    if t == 0.0 {
        return Ok(psi0.clone());
    }
    let overlaps: Vec<Complex64> = psi0
        .overlaps
        .iter()
        .zip(decomp.eigenvalues())
        .map(|(c, &e)| c * Complex64::from_polar(1.0, -e * t))
        .collect();
    QuenchState::from_overlaps(decomp, overlaps, psi0.time + t)
}

pub fn trajectory(decomp: &SpectralDecomposition, psi0: &QuenchState, times: &[f64]) -> Result<Vec<QuenchState>> {
    times.par_iter().map(|&t| evolve(decomp, psi0, t)).collect()
}

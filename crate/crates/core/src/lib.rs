//! Exact numerics for quench thermalization in small Bose-Hubbard chains.
//!
//! The crate covers the whole pipeline from a Fock basis to measurable
//! quantities: sparse Hamiltonian assembly, full diagonalization and exact
//! propagation, reduced density matrices with Rényi-2 entropies, thermal
//! ensembles matched to the quench energy, local observables, and a
//! shot-level simulation of the two-copy beam-splitter purity measurement.

pub mod ensembles;
pub mod entanglement;
pub mod error;
pub mod fock;
pub mod hamiltonian;
pub mod interference;
pub mod linalg;
pub mod observables;
pub mod roots;
pub mod spectral;

pub use ensembles::{EnsembleKind, EnsembleState, Sector};
pub use entanglement::{BlockDensityMatrix, PartitionMode};
pub use error::{Error, Result};
pub use fock::{dimension, FockState, MultiSectorBasis, PartitionMap, SectorBasis};
pub use hamiltonian::{build_hamiltonian, HubbardParams, SparseSymMatrix};
pub use interference::{ShotRecord, TwoCopyState};
pub use observables::{NumberDistribution, StateView};
pub use spectral::{QuenchState, SpectralDecomposition};

pub use num_complex::Complex64;

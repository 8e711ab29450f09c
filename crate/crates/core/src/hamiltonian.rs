//! Open-chain Bose-Hubbard Hamiltonian in a fixed-`N` Fock sector.
//!
//! `H = -J Σ_i (a†_i a_{i+1} + h.c.) + (U/2) Σ_i n_i (n_i - 1)`, with `ħ = 1`
//! so `J` and `U` are angular frequencies and `t·J` is dimensionless.

use std::fmt::Write as _;
use std::ops::{AddAssign, Mul};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fock::SectorBasis;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HubbardParams {
    pub sites: usize,
    pub particles: usize,
    pub tunneling: f64,
    pub interaction: f64,
}

impl HubbardParams {
    pub fn new(sites: usize, particles: usize, tunneling: f64, interaction: f64) -> Result<Self> {
        let p = Self {
            sites,
            particles,
            tunneling,
            interaction,
        };
        p.validate()?;
        Ok(p)
    }

    /// Energies in units of `J`: `J = 1`, `U = 1 / (J/U)`.
    pub fn from_ratio(sites: usize, particles: usize, j_over_u: f64) -> Result<Self> {
        if !(j_over_u.is_finite() && j_over_u > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "J/U must be positive and finite, got {j_over_u}"
            )));
        }
        Self::new(sites, particles, 1.0, 1.0 / j_over_u)
    }

    pub fn validate(&self) -> Result<()> {
        if self.sites == 0 {
            return Err(Error::InvalidArgument("a chain needs at least one site".into()));
        }
        if !(self.tunneling.is_finite() && self.tunneling >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "tunneling must be finite and non-negative, got {}",
                self.tunneling
            )));
        }
        if !self.interaction.is_finite() {
            return Err(Error::InvalidArgument("interaction must be finite".into()));
        }
        Ok(())
    }

    fn check_basis(&self, basis: &SectorBasis) -> Result<()> {
        if basis.sites() != self.sites || basis.particles() != self.particles {
            return Err(Error::BasisMismatch {
                basis_sites: basis.sites(),
                basis_particles: basis.particles(),
                sites: self.sites,
                particles: self.particles,
            });
        }
        Ok(())
    }
}

/// Real symmetric matrix stored as its upper triangle in coordinate form.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseSymMatrix {
    dim: usize,
    entries: Vec<(usize, usize, f64)>,
}

impl SparseSymMatrix {
    /// Entries must satisfy `row <= col < dim`; duplicates are summed.
    pub fn from_triples(dim: usize, mut entries: Vec<(usize, usize, f64)>) -> Result<Self> {
        for &(r, c, v) in &entries {
            if r > c || c >= dim {
                return Err(Error::InvalidArgument(format!(
                    "entry ({r}, {c}) is not in the upper triangle of a {dim}x{dim} matrix"
                )));
            }
            if !v.is_finite() {
                return Err(Error::InvalidArgument(format!("entry ({r}, {c}) is not finite")));
            }
        }
        entries.sort_by_key(|&(r, c, _)| (r, c));
        let mut merged: Vec<(usize, usize, f64)> = Vec::with_capacity(entries.len());
        for (r, c, v) in entries {
            match merged.last_mut() {
                Some(last) if last.0 == r && last.1 == c => last.2 += v,
                _ => merged.push((r, c, v)),
            }
        }
        Ok(Self { dim, entries: merged })
    }

    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            entries: Vec::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entries(&self) -> &[(usize, usize, f64)] {
        &self.entries
    }

    pub fn nnz_upper(&self) -> usize {
        self.entries.len()
    }

    pub fn diagonal(&self) -> Vec<f64> {
        let mut d = vec![0.0; self.dim];
        for &(r, c, v) in &self.entries {
            if r == c {
                d[r] += v;
            }
        }
        d
    }

    /// Row-major dense copy with the lower triangle filled in.
    pub fn to_dense(&self) -> Vec<f64> {
        let n = self.dim;
        let mut m = vec![0.0; n * n];
        for &(r, c, v) in &self.entries {
            m[r * n + c] = v;
            m[c * n + r] = v;
        }
        m
    }

    /// `y = H x` using the symmetric completion.
    pub fn matvec<T>(&self, x: &[T]) -> Result<Vec<T>>
    where
        T: Copy + Default + AddAssign + Mul<f64, Output = T>,
    {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: x.len(),
            });
        }
        let mut y = vec![T::default(); self.dim];
        for &(r, c, v) in &self.entries {
            y[r] += x[c] * v;
            if r != c {
                y[c] += x[r] * v;
            }
        }
        Ok(y)
    }

    /// `⟨ψ|H|ψ⟩` for a complex vector.
    pub fn expectation(&self, psi: &[Complex64]) -> Result<f64> {
        let hpsi = self.matvec(psi)?;
        Ok(psi.iter().zip(&hpsi).map(|(a, b)| (a.conj() * b).re).sum())
    }

    /// One `row col value` line per stored entry, 17 significant digits.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for &(r, c, v) in &self.entries {
            let _ = writeln!(out, "{r} {c} {v:.16e}");
        }
        out
    }
}

pub fn build_hamiltonian(params: &HubbardParams, basis: &SectorBasis) -> Result<SparseSymMatrix> {
    params.validate()?;
    params.check_basis(basis)?;
    let l = params.sites;
    let interaction = build_interaction(basis, params.interaction);

    let mut entries = Vec::with_capacity(basis.len() * l);
    let mut scratch = vec![0; l];
    for (i, occ) in basis.iter().enumerate() {
        if interaction[i] != 0.0 {
            entries.push((i, i, interaction[i]));
        }
        if params.tunneling == 0.0 {
            continue;
        }
        // every bond hop in both directions; keep the upper-triangle copy
        for s in 0..l.saturating_sub(1) {
            for (from, to) in [(s, s + 1), (s + 1, s)] {
                if occ[from] == 0 {
                    continue;
                }
                if basis.cap().is_some_and(|c| occ[to] >= c) {
                    continue;
                }
                scratch.copy_from_slice(occ);
                scratch[from] -= 1;
                scratch[to] += 1;
                let j = basis.ranker().rank(&scratch);
                if i < j {
                    let amp = (occ[from] as f64 * (occ[to] as f64 + 1.0)).sqrt();
                    entries.push((i, j, -params.tunneling * amp));
                }
            }
        }
    }
    SparseSymMatrix::from_triples(basis.len(), entries)
}

/// Tunneling part alone (`U = 0`).
pub fn build_tunneling(params: &HubbardParams, basis: &SectorBasis) -> Result<SparseSymMatrix> {
    let free = HubbardParams {
        interaction: 0.0,
        ..*params
    };
    build_hamiltonian(&free, basis)
}

/// Diagonal of `n_site` in the sector basis.
pub fn build_number_operator(basis: &SectorBasis, site: usize) -> Result<Vec<f64>> {
    if site >= basis.sites() {
        return Err(Error::SiteOutOfRange {
            site,
            sites: basis.sites(),
        });
    }
    Ok(basis.iter().map(|occ| occ[site] as f64).collect())
}

/// Diagonal of `(U/2) Σ_i n_i (n_i - 1)`.
pub fn build_interaction(basis: &SectorBasis, interaction: f64) -> Vec<f64> {
    basis
        .iter()
        .map(|occ| 0.5 * interaction * pair_count(occ) as f64)
        .collect()
}

/// `Σ_i n_i (n_i - 1)`.
pub fn pair_count(occ: &[u8]) -> u64 {
    occ.iter().map(|&n| n as u64 * (n as u64).saturating_sub(1)).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn dense_mul(m: &[f64], n: usize, x: &[Complex64]) -> Vec<Complex64> {
        (0..n).map(|r| (0..n).map(|c| x[c] * m[r * n + c]).sum()).collect()
    }

    fn random_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<Complex64> {
        (0..n)
            .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect()
    }

    #[test]
    fn two_site_free_hopping() {
        let b = SectorBasis::new(2, 2).unwrap();
        let h = build_hamiltonian(&HubbardParams::new(2, 2, 1.0, 0.0).unwrap(), &b).unwrap();
        let d = h.to_dense();
        let s2 = 2f64.sqrt();
        assert_abs_diff_eq!(d[3], -s2, epsilon = 1e-15);
        assert_abs_diff_eq!(d[5], -s2, epsilon = 1e-15);
        // row-major 3x3: (1,0), (1,2) and (0,2)
        assert_eq!(d[2], 0.0);
        assert_eq!(h.diagonal(), vec![0.0; 3]);
    }

    #[test]
    fn two_site_interaction_only() {
        let b = SectorBasis::new(2, 2).unwrap();
        let h = build_hamiltonian(&HubbardParams::new(2, 2, 0.0, 1.0).unwrap(), &b).unwrap();
        assert_eq!(h.diagonal(), vec![1.0, 0.0, 1.0]);
        assert_eq!(h.nnz_upper(), 2);
    }

    #[test]
    fn mott_state_has_zero_diagonal_energy() {
        let b = SectorBasis::new(6, 6).unwrap();
        let h = build_hamiltonian(&HubbardParams::from_ratio(6, 6, 0.64).unwrap(), &b).unwrap();
        let mott = b.rank(&[1; 6]).unwrap();
        assert_eq!(h.diagonal()[mott], 0.0);
    }

    #[test]
    fn interaction_diagonal() {
        let b = SectorBasis::new(2, 2).unwrap();
        assert_eq!(build_interaction(&b, 2.5), vec![2.5, 0.0, 2.5]);
        let b6 = SectorBasis::new(6, 6).unwrap();
        let diag = build_interaction(&b6, 1.0);
        assert_eq!(diag[b6.rank(&[1; 6]).unwrap()], 0.0);
        assert_eq!(diag[b6.rank(&[6, 0, 0, 0, 0, 0]).unwrap()], 15.0);
    }

    #[test]
    fn number_operators() {
        let b = SectorBasis::new(2, 2).unwrap();
        assert_eq!(build_number_operator(&b, 0).unwrap(), vec![2.0, 1.0, 0.0]);
        assert!(build_number_operator(&b, 2).is_err());
        let b6 = SectorBasis::new(6, 6).unwrap();
        let mott = b6.rank(&[1; 6]).unwrap();
        let mut total = vec![0.0; b6.len()];
        for s in 0..6 {
            let n = build_number_operator(&b6, s).unwrap();
            assert_eq!(n[mott], 1.0);
            total.iter_mut().zip(&n).for_each(|(t, x)| *t += x);
        }
        assert!(total.iter().all(|&t| t == 6.0));
    }

    #[test]
    fn basis_mismatch_is_an_error() {
        let b = SectorBasis::new(3, 2).unwrap();
        let p = HubbardParams::new(3, 3, 1.0, 1.0).unwrap();
        assert!(matches!(build_hamiltonian(&p, &b), Err(Error::BasisMismatch { .. })));
        assert!(HubbardParams::new(3, 3, -1.0, 1.0).is_err());
    }

    #[test]
    fn matvec_cases() {
        let zero = SparseSymMatrix::zeros(4);
        let y = zero.matvec(&[1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(y, vec![0.0; 4]);
        assert!(zero.matvec(&[1.0]).is_err());

        let m = SparseSymMatrix::from_triples(2, vec![(0, 1, -1.0)]).unwrap();
        let v = [1.0 / 2f64.sqrt(), 1.0 / 2f64.sqrt()];
        let y = m.matvec(&v).unwrap();
        assert_abs_diff_eq!(y[0], -v[0], epsilon = 1e-15);
        assert_abs_diff_eq!(y[1], -v[1], epsilon = 1e-15);

        let b = SectorBasis::new(4, 4).unwrap();
        let h = build_hamiltonian(&HubbardParams::new(4, 4, 1.0, 1.7).unwrap(), &b).unwrap();
        let dense = h.to_dense();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let x = random_vec(&mut rng, b.len());
        let y = h.matvec(&x).unwrap();
        let y_ref = dense_mul(&dense, b.len(), &x);
        for (a, r) in y.iter().zip(&y_ref) {
            assert!((a - r).norm() < 1e-12);
        }
    }

    #[test]
    fn hermiticity_and_sparsity() {
        let b = SectorBasis::new(6, 6).unwrap();
        let h = build_hamiltonian(&HubbardParams::from_ratio(6, 6, 0.64).unwrap(), &b).unwrap();
        let n = b.len();
        let d = h.to_dense();
        for r in 0..n {
            for c in 0..n {
                assert_eq!(d[r * n + c], d[c * n + r]);
            }
            let nnz = (0..n).filter(|&c| d[r * n + c] != 0.0).count();
            assert!(nnz <= 2 * (6 - 1) + 1);
        }
        assert!(h.entries().iter().all(|&(r, c, _)| r <= c));
        let mut keys: Vec<_> = h.entries().iter().map(|&(r, c, _)| (r, c)).collect();
        keys.dedup();
        assert_eq!(keys.len(), h.nnz_upper());
    }

    #[test]
    fn number_conservation_commutator() {
        let b = SectorBasis::new(4, 4).unwrap();
        let h = build_hamiltonian(&HubbardParams::new(4, 4, 1.0, 0.8).unwrap(), &b).unwrap();
        let ntot: Vec<f64> = (0..4)
            .map(|s| build_number_operator(&b, s).unwrap())
            .fold(vec![0.0; b.len()], |acc, n| {
                acc.iter().zip(&n).map(|(a, x)| a + x).collect()
            });
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..5 {
            let v = random_vec(&mut rng, b.len());
            let nv: Vec<Complex64> = v.iter().zip(&ntot).map(|(a, n)| a * n).collect();
            let hnv = h.matvec(&nv).unwrap();
            let hv = h.matvec(&v).unwrap();
            let nhv: Vec<Complex64> = hv.iter().zip(&ntot).map(|(a, n)| a * n).collect();
            let res = hnv.iter().zip(&nhv).map(|(a, c)| (a - c).norm()).fold(0.0, f64::max);
            assert!(res < 1e-12);
        }
    }

    #[test]
    fn capped_hamiltonian_blocks_overfilled_hops() {
        let b = SectorBasis::with_cap(3, 2, Some(1)).unwrap();
        let h = build_hamiltonian(&HubbardParams::new(3, 2, 1.0, 5.0).unwrap(), &b).unwrap();
        // hard-core bosons never interact
        assert!(h.diagonal().iter().all(|&d| d == 0.0));
        assert!(h.entries().iter().all(|&(_, _, v)| v == -1.0));
    }

    #[test]
    fn dump_format() {
        let m = SparseSymMatrix::from_triples(2, vec![(0, 1, -1.0), (0, 0, 0.5)]).unwrap();
        assert_eq!(m.dump(), "0 0 5.0000000000000000e-1\n0 1 -1.0000000000000000e0\n");
    }
}

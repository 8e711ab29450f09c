//! Number-diagonal observables and distances between reduced states.

use std::collections::BTreeSet;

use ndarray::Array2;
use num_complex::Complex64;

use crate::ensembles::{EnsembleState, Sector};
use crate::entanglement::{BlockDensityMatrix, FamilyStats};
use crate::error::{Error, Result};
use crate::fock::{normalize_sites, SectorBasis};
use crate::hamiltonian::pair_count;
use crate::linalg::{hermitian_eigenvalues, hermitian_function};
use crate::spectral::QuenchState;

/// Fock-basis populations of a pure state or an ensemble, possibly spread
/// over several particle-number sectors. Every observable in this module is
/// diagonal in the Fock basis, so this is all it needs.
#[derive(Clone, Debug)]
pub struct StateView<'a> {
    parts: Vec<(&'a SectorBasis, Vec<f64>)>,
}

impl<'a> StateView<'a> {
    pub fn pure(basis: &'a SectorBasis, state: &QuenchState) -> Result<Self> {
        Self::from_probabilities(basis, state.probabilities())
    }

    pub fn from_amplitudes(basis: &'a SectorBasis, amplitudes: &[Complex64]) -> Result<Self> {
        Self::from_probabilities(basis, amplitudes.iter().map(Complex64::norm_sqr).collect())
    }

    pub fn from_probabilities(basis: &'a SectorBasis, probabilities: Vec<f64>) -> Result<Self> {
        if probabilities.len() != basis.len() {
            return Err(Error::DimensionMismatch {
                expected: basis.len(),
                found: probabilities.len(),
            });
        }
        Ok(Self {
            parts: vec![(basis, probabilities)],
        })
    }

    pub fn ensemble(ensemble: &EnsembleState, sectors: &'a [Sector]) -> Result<Self> {
        let parts = ensemble
            .fock_probabilities(sectors)?
            .into_iter()
            .map(|(n, p)| {
                let s = sectors
                    .iter()
                    .find(|s| s.particles() == n)
                    .expect("sector resolved above");
                (s.basis(), p)
            })
            .collect();
        Ok(Self { parts })
    }

    pub fn sites(&self) -> usize {
        self.parts.first().map_or(0, |(b, _)| b.sites())
    }

    fn max_particles(&self) -> usize {
        self.parts.iter().map(|(b, _)| b.particles()).max().unwrap_or(0)
    }

    fn for_each(&self, mut f: impl FnMut(&[u8], f64)) {
        for (basis, probs) in &self.parts {
            for (occ, &p) in basis.iter().zip(probs) {
                if p != 0.0 {
                    f(occ, p);
                }
            }
        }
    }
}

/// `⟨n_i⟩` for every site.
pub fn site_density(view: &StateView) -> Vec<f64> {
    let mut out = vec![0.0; view.sites()];
    view.for_each(|occ, p| {
        for (d, &n) in out.iter_mut().zip(occ) {
            *d += p * n as f64;
        }
    });
    out
}

/// `P(n)` for the total occupation of a site set.
#[derive(Clone, Debug, PartialEq)]
pub struct NumberDistribution {
    pub sites: Vec<usize>,
    /// Indexed by `n = 0..=N`.
    pub probabilities: Vec<f64>,
}

impl NumberDistribution {
    pub fn mean(&self) -> f64 {
        self.probabilities.iter().enumerate().map(|(n, p)| n as f64 * p).sum()
    }

    pub fn total(&self) -> f64 {
        self.probabilities.iter().sum()
    }

    /// Block weights of a reduced density matrix, padded to `0..=max_n`.
    pub fn from_rdm(rho: &BlockDensityMatrix, max_n: usize) -> Self {
        let mut probabilities = vec![0.0; max_n + 1];
        for (n, w) in rho.block_weights() {
            if n <= max_n {
                probabilities[n] = w;
            }
        }
        Self {
            sites: rho.sites().to_vec(),
            probabilities,
        }
    }
}

pub fn number_distribution(view: &StateView, sites: &[usize]) -> Result<NumberDistribution> {
    let sites = normalize_sites(sites, view.sites())?;
    let mut probabilities = vec![0.0; view.max_particles() + 1];
    view.for_each(|occ, p| {
        let n: usize = sites.iter().map(|&s| occ[s] as usize).sum();
        probabilities[n] += p;
    });
    Ok(NumberDistribution { sites, probabilities })
}

/// `(U/2) Σ_i ⟨n_i (n_i - 1)⟩`.
pub fn interaction_energy(view: &StateView, interaction: f64) -> f64 {
    let mut pairs = 0.0;
    view.for_each(|occ, p| pairs += p * pair_count(occ) as f64);
    0.5 * interaction * pairs
}

type BlockPair<'a> = (Option<&'a Array2<Complex64>>, Option<&'a Array2<Complex64>>);

fn paired_blocks<'a>(rho: &'a BlockDensityMatrix, sigma: &'a BlockDensityMatrix) -> Result<Vec<BlockPair<'a>>> {
    if rho.sites() != sigma.sites() {
        return Err(Error::BlockMismatch);
    }
    let keys: BTreeSet<usize> = rho.blocks().keys().chain(sigma.blocks().keys()).copied().collect();
    keys.into_iter()
        .map(|n| {
            let (a, b) = (rho.block(n), sigma.block(n));
            if let (Some(a), Some(b)) = (a, b) {
                if a.dim() != b.dim() {
                    return Err(Error::BlockMismatch);
                }
            }
            Ok((a, b))
        })
        .collect()
}

/// `½ Tr |ρ - σ|`, block by block.
pub fn trace_distance(rho: &BlockDensityMatrix, sigma: &BlockDensityMatrix) -> Result<f64> {
    let mut total = 0.0;
    for pair in paired_blocks(rho, sigma)? {
        let diff = match pair {
            (Some(a), Some(b)) => a - b,
            (Some(a), None) => a.clone(),
            (None, Some(b)) => -b,
            (None, None) => unreachable!(),
        };
        total += hermitian_eigenvalues(&diff)?.iter().map(|l| l.abs()).sum::<f64>();
    }
    Ok((0.5 * total).clamp(0.0, 1.0))
}

/// Eigenvalues below this are numerically zero; their square roots would
/// otherwise turn `1e-17` noise into `1e-9` errors.
fn roundoff(m: &Array2<Complex64>) -> f64 {
    let scale = m.iter().map(|z| z.norm()).fold(0.0, f64::max);
    64.0 * f64::EPSILON * scale * m.nrows() as f64
}

/// Uhlmann fidelity `Tr √(√ρ σ √ρ)`, block by block.
pub fn fidelity(rho: &BlockDensityMatrix, sigma: &BlockDensityMatrix) -> Result<f64> {
    let mut total = 0.0;
    for pair in paired_blocks(rho, sigma)? {
        if let (Some(a), Some(b)) = pair {
            let cut = roundoff(a);
            let root = hermitian_function(a, |x| if x > cut { x.sqrt() } else { 0.0 })?;
            let m = root.dot(b).dot(&root);
            let cut = roundoff(&m);
            total += hermitian_eigenvalues(&m)?
                .iter()
                .map(|&l| if l > cut { l.sqrt() } else { 0.0 })
                .sum::<f64>();
        }
    }
    Ok(total.clamp(0.0, 1.0))
}

/// Mean and standard deviation over a window of time samples.
pub fn window_stats(values: &[f64]) -> FamilyStats {
    FamilyStats::from_values(values)
}

/// `n` uniformly spaced points covering `[start, end]`.
pub fn uniform_grid(start: f64, end: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![start],
        _ => (0..n)
            .map(|i| start + (end - start) * i as f64 / (n - 1) as f64)
            .collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::entanglement::reduce_on;
    use approx::assert_abs_diff_eq;
    use std::collections::BTreeMap;

    fn basis_state(basis: &SectorBasis, occ: &[u8]) -> Vec<Complex64> {
        let mut psi = vec![Complex64::default(); basis.len()];
        psi[basis.rank(occ).unwrap()] = Complex64::new(1.0, 0.0);
        psi
    }

    #[test]
    fn mott_and_piled_up_states() {
        let b = SectorBasis::new(6, 6).unwrap();
        let mott = basis_state(&b, &[1; 6]);
        let view = StateView::from_amplitudes(&b, &mott).unwrap();
        assert_eq!(site_density(&view), vec![1.0; 6]);
        assert_eq!(interaction_energy(&view, 1.7), 0.0);
        let p = number_distribution(&view, &[2]).unwrap();
        assert_eq!(p.probabilities[1], 1.0);
        let p = number_distribution(&view, &[0, 1, 2, 3, 4, 5]).unwrap();
        assert_eq!(p.probabilities[6], 1.0);

        let piled = basis_state(&b, &[6, 0, 0, 0, 0, 0]);
        let view = StateView::from_amplitudes(&b, &piled).unwrap();
        assert_eq!(interaction_energy(&view, 1.0), 15.0);
    }

    #[test]
    fn distances_on_simple_blocks() {
        let one = |x: f64| Array2::from_elem((1, 1), Complex64::new(x, 0.0));
        let rho = BlockDensityMatrix::new(vec![0], BTreeMap::from([(0, one(1.0))])).unwrap();
        let sigma = BlockDensityMatrix::new(vec![0], BTreeMap::from([(1, one(1.0))])).unwrap();
        assert_eq!(trace_distance(&rho, &rho).unwrap(), 0.0);
        assert_abs_diff_eq!(fidelity(&rho, &rho).unwrap(), 1.0, epsilon = 1e-14);
        assert_eq!(trace_distance(&rho, &sigma).unwrap(), 1.0);
        assert_eq!(fidelity(&rho, &sigma).unwrap(), 0.0);

        // commuting blocks reduce to the classical overlap
        let p = [0.2, 0.5, 0.3];
        let q = [0.4, 0.4, 0.2];
        let a = BlockDensityMatrix::from_number_probabilities(vec![1], &p);
        let b = BlockDensityMatrix::from_number_probabilities(vec![1], &q);
        let bc: f64 = p.iter().zip(&q).map(|(x, y)| (x * y).sqrt()).sum();
        assert_abs_diff_eq!(fidelity(&a, &b).unwrap(), bc, epsilon = 1e-14);
        assert_abs_diff_eq!(trace_distance(&a, &b).unwrap(), 0.2, epsilon = 1e-14);

        let other = BlockDensityMatrix::from_number_probabilities(vec![2], &p);
        assert!(matches!(trace_distance(&a, &other), Err(Error::BlockMismatch)));
    }

    #[test]
    fn pure_state_fidelity_is_overlap() {
        let b = SectorBasis::new(2, 2).unwrap();
        let s = 0.5f64.sqrt();
        let psi = [Complex64::new(s, 0.0), Complex64::default(), Complex64::new(0.0, s)];
        let phi = [Complex64::new(1.0, 0.0), Complex64::default(), Complex64::default()];
        let all = [0, 1];
        let r = reduce_on(&b, &psi, &all).unwrap();
        let q = reduce_on(&b, &phi, &all).unwrap();
        assert_abs_diff_eq!(fidelity(&r, &q).unwrap(), s, epsilon = 1e-12);
        assert_abs_diff_eq!(trace_distance(&r, &q).unwrap(), s, epsilon = 1e-12);
    }

    #[test]
    fn number_distribution_is_rdm_diagonal() {
        let b = SectorBasis::new(4, 4).unwrap();
        let psi: Vec<Complex64> = (0..b.len())
            .map(|i| Complex64::new((i as f64 * 0.37).sin(), (i as f64 * 0.11).cos()))
            .collect();
        let norm = psi.iter().map(Complex64::norm_sqr).sum::<f64>().sqrt();
        let psi: Vec<Complex64> = psi.iter().map(|z| z / norm).collect();
        let view = StateView::from_amplitudes(&b, &psi).unwrap();
        let rho = reduce_on(&b, &psi, &[2]).unwrap();
        let from_rdm = NumberDistribution::from_rdm(&rho, 4);
        let direct = number_distribution(&view, &[2]).unwrap();
        for (a, c) in from_rdm.probabilities.iter().zip(&direct.probabilities) {
            assert_abs_diff_eq!(a, c, epsilon = 1e-14);
        }
        assert_abs_diff_eq!(site_density(&view).iter().sum::<f64>(), 4.0, epsilon = 1e-12);
    }

    #[test]
    fn grid() {
        let g = uniform_grid(4.147, 8.294, 21);
        assert_eq!(g.len(), 21);
        assert_eq!(g[0], 4.147);
        assert_abs_diff_eq!(g[20], 8.294, epsilon = 1e-15);
    }
}

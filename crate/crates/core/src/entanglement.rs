//! Reduced density matrices by spatial bipartition and their entropies.
//!
//! With a fixed total atom number the reduced state of any site set `A`
//! carries no coherences between different `n_A`, so `ρ_A` is stored as one
//! dense Hermitian block per local particle number.

use std::collections::BTreeMap;

use ndarray::Array2;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fock::{normalize_sites, PartitionMap, SectorBasis};
use crate::linalg::hermitian_eigenvalues;

#[derive(Clone, Debug, PartialEq)]
pub struct BlockDensityMatrix {
    sites: Vec<usize>,
    blocks: BTreeMap<usize, Array2<Complex64>>,
}

impl BlockDensityMatrix {
    pub fn new(sites: Vec<usize>, blocks: BTreeMap<usize, Array2<Complex64>>) -> Result<Self> {
        for b in blocks.values() {
            if b.nrows() != b.ncols() {
                return Err(Error::DimensionMismatch {
                    expected: b.nrows(),
                    found: b.ncols(),
                });
            }
        }
        Ok(Self { sites, blocks })
    }

    /// Diagonal density matrix, one `1x1` block per entry.
    pub fn from_number_probabilities(sites: Vec<usize>, probabilities: &[f64]) -> Self {
        let blocks = probabilities
            .iter()
            .enumerate()
            .filter(|(_, &p)| p != 0.0)
            .map(|(n, &p)| (n, Array2::from_elem((1, 1), Complex64::new(p, 0.0))))
            .collect();
        Self { sites, blocks }
    }

    pub fn sites(&self) -> &[usize] {
        &self.sites
    }

    pub fn blocks(&self) -> &BTreeMap<usize, Array2<Complex64>> {
        &self.blocks
    }

    pub fn block(&self, n_a: usize) -> Option<&Array2<Complex64>> {
        self.blocks.get(&n_a)
    }

    /// `w(n_A) = Tr ρ_{n_A}`.
    pub fn block_weights(&self) -> BTreeMap<usize, f64> {
        self.blocks
            .iter()
            .map(|(&n, b)| (n, b.diag().iter().map(|z| z.re).sum()))
            .collect()
    }

    pub fn trace(&self) -> f64 {
        self.block_weights().values().sum()
    }

    /// Unit trace, Hermitian blocks and no eigenvalue below `-tol`.
    pub fn check(&self, tol: f64) -> Result<()> {
        let tr = self.trace();
        if (tr - 1.0).abs() > tol {
            return Err(Error::Invariant(format!("trace {tr} differs from 1")));
        }
        for (n, b) in &self.blocks {
            let asym = b
                .indexed_iter()
                .map(|((i, j), z)| (z - b[[j, i]].conj()).norm())
                .fold(0.0, f64::max);
            if asym > tol {
                return Err(Error::Invariant(format!("block {n} is not Hermitian ({asym:e})")));
            }
            let min = hermitian_eigenvalues(b)?.first().copied().unwrap_or(0.0);
            if min < -tol {
                return Err(Error::Invariant(format!("block {n} has eigenvalue {min:e}")));
            }
        }
        Ok(())
    }
}

/// Builds `Σ_k w_k Tr_B |ψ_k⟩⟨ψ_k|` one state at a time, possibly from
/// different particle-number sectors.
#[derive(Debug)]
pub struct RdmAccumulator {
    sites: Vec<usize>,
    blocks: BTreeMap<usize, Array2<Complex64>>,
}

impl RdmAccumulator {
    pub fn new(sites: &[usize]) -> Self {
        Self {
            sites: sites.to_vec(),
            blocks: BTreeMap::new(),
        }
    }

    pub fn add<T>(&mut self, weight: f64, amplitudes: &[T], pmap: &PartitionMap) -> Result<()>
    where
        T: Copy + Into<Complex64>,
    {
        if pmap.sites() != self.sites.as_slice() {
            return Err(Error::BlockMismatch);
        }
        if amplitudes.len() != pmap.len() {
            return Err(Error::DimensionMismatch {
                expected: pmap.len(),
                found: amplitudes.len(),
            });
        }
        if weight == 0.0 {
            return Ok(());
        }
        // coefficient matrices M[n_A][rank_A, rank_B] = ψ
        let mut coeffs: BTreeMap<usize, Vec<Complex64>> = pmap
            .block_dims()
            .iter()
            .map(|(&n, &(da, db))| (n, vec![Complex64::default(); da * db]))
            .collect();
        for (amp, e) in amplitudes.iter().zip(pmap.entries()) {
            let db = pmap.block_dims()[&e.n_a].1;
            coeffs.get_mut(&e.n_a).expect("feasible block")[e.rank_a * db + e.rank_b] = (*amp).into();
        }
        for (n, m) in coeffs {
            let (da, db) = pmap.block_dims()[&n];
            if m.iter().all(|z| *z == Complex64::default()) {
                continue;
            }
            let block = self.blocks.entry(n).or_insert_with(|| Array2::zeros((da, da)));
            for i in 0..da {
                let ri = &m[i * db..(i + 1) * db];
                for j in i..da {
                    let rj = &m[j * db..(j + 1) * db];
                    let s: Complex64 = ri.iter().zip(rj).map(|(a, b)| a * b.conj()).sum();
                    let s = s * weight;
                    block[[i, j]] += s;
                    if i != j {
                        block[[j, i]] += s.conj();
                    }
                }
            }
        }
        Ok(())
    }

    pub fn finish(self) -> BlockDensityMatrix {
        BlockDensityMatrix {
            sites: self.sites,
            blocks: self.blocks,
        }
    }
}

/// `ρ_A = Tr_B |ψ⟩⟨ψ|`.
pub fn reduce<T>(amplitudes: &[T], pmap: &PartitionMap) -> Result<BlockDensityMatrix>
where
    T: Copy + Into<Complex64>,
{
    let mut acc = RdmAccumulator::new(pmap.sites());
    acc.add(1.0, amplitudes, pmap)?;
    Ok(acc.finish())
}

/// Convenience wrapper that builds the partition map on the fly.
pub fn reduce_on(basis: &SectorBasis, amplitudes: &[Complex64], sites: &[usize]) -> Result<BlockDensityMatrix> {
    reduce(amplitudes, &PartitionMap::new(basis, sites)?)
}

/// `Tr ρ²`.
pub fn purity(rho: &BlockDensityMatrix) -> f64 {
    rho.blocks
        .values()
        .map(|b| b.iter().map(Complex64::norm_sqr).sum::<f64>())
        .sum()
}

/// `S_2 = -ln Tr ρ²`.
pub fn renyi2(rho: &BlockDensityMatrix) -> Result<f64> {
    let p = purity(rho);
    if p <= 0.0 || !p.is_finite() {
        return Err(Error::NonPositivePurity(p));
    }
    Ok(-p.ln())
}

/// `-Σ λ ln λ` over all block eigenvalues.
pub fn von_neumann(rho: &BlockDensityMatrix) -> Result<f64> {
    let mut s = 0.0;
    for b in rho.blocks.values() {
        for lambda in hermitian_eigenvalues(b)? {
            if lambda > 0.0 {
                s -= lambda * lambda.ln();
            }
        }
    }
    Ok(s)
}

/// Rényi-2 entropy of a site set of a pure state.
pub fn subsystem_entropy(basis: &SectorBasis, amplitudes: &[Complex64], sites: &[usize]) -> Result<f64> {
    renyi2(&reduce_on(basis, amplitudes, sites)?)
}

/// `I_AB = S_A + S_B - S_AB`.
pub fn mutual_information(basis: &SectorBasis, amplitudes: &[Complex64], a: &[usize], b: &[usize]) -> Result<f64> {
    let a = normalize_sites(a, basis.sites())?;
    let b = normalize_sites(b, basis.sites())?;
    if let Some(&s) = a.iter().find(|s| b.contains(s)) {
        return Err(Error::OverlappingSubsystems(s));
    }
    let ab: Vec<usize> = a.iter().chain(&b).copied().collect();
    Ok(
        subsystem_entropy(basis, amplitudes, &a)? + subsystem_entropy(basis, amplitudes, &b)?
            - subsystem_entropy(basis, amplitudes, &ab)?,
    )
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum PartitionMode {
    /// Blocks of adjacent sites.
    #[default]
    Contiguous,
    /// Every site set of the given size.
    AllSubsets,
}

/// All site sets of size `volume` in the chosen family.
pub fn partition_family(sites: usize, volume: usize, mode: PartitionMode) -> Vec<Vec<usize>> {
    if volume == 0 || volume > sites {
        return Vec::new();
    }
    match mode {
        PartitionMode::Contiguous => (0..=sites - volume).map(|s| (s..s + volume).collect()).collect(),
        PartitionMode::AllSubsets => {
            let mut out = Vec::new();
            let mut pick: Vec<usize> = (0..volume).collect();
            loop {
                out.push(pick.clone());
                // advance to the next combination in lexicographic order
                let mut i = volume;
                while i > 0 && pick[i - 1] == sites - volume + i - 1 {
                    i -= 1;
                }
                if i == 0 {
                    break;
                }
                pick[i - 1] += 1;
                for k in i..volume {
                    pick[k] = pick[k - 1] + 1;
                }
            }
            out
        }
    }
}

/// Mean and population standard deviation over an exhaustive family.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FamilyStats {
    pub mean: f64,
    pub spread: f64,
    pub count: usize,
}

impl FamilyStats {
    pub fn from_values(values: &[f64]) -> Self {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        Self {
            mean,
            spread: var.sqrt(),
            count: values.len(),
        }
    }
}

pub fn partition_average(
    basis: &SectorBasis,
    amplitudes: &[Complex64],
    volume: usize,
    mode: PartitionMode,
) -> Result<FamilyStats> {
    check_volume(basis, volume, 1)?;
    let values = partition_family(basis.sites(), volume, mode)
        .iter()
        .map(|sites| subsystem_entropy(basis, amplitudes, sites))
        .collect::<Result<Vec<_>>>()?;
    Ok(FamilyStats::from_values(&values))
}

/// Mutual information averaged over every `AB` of the family, with `A` the
/// first `⌊v/2⌋` sites of `AB` and `B` the rest.
pub fn mutual_information_average(
    basis: &SectorBasis,
    amplitudes: &[Complex64],
    volume: usize,
    mode: PartitionMode,
) -> Result<FamilyStats> {
    check_volume(basis, volume, 2)?;
    let values = partition_family(basis.sites(), volume, mode)
        .iter()
        .map(|ab| {
            let (a, b) = ab.split_at(volume / 2);
            mutual_information(basis, amplitudes, a, b)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(FamilyStats::from_values(&values))
}

fn check_volume(basis: &SectorBasis, volume: usize, min: usize) -> Result<()> {
    if volume < min || volume > basis.sites() {
        return Err(Error::InvalidArgument(format!(
            "subsystem volume {volume} outside {min}..={}",
            basis.sites()
        )));
    }
    Ok(())
}

/// `S - v·s₀`: removes an extensive, non-entanglement entropy per site.
pub fn extensive_correction(entropy: f64, volume: usize, per_site: f64) -> f64 {
    entropy - volume as f64 * per_site
}

/// Continuous two-segment fit `S(0) + slope·min(t - t₀, t_b - t₀)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PiecewiseFit {
    pub slope: f64,
    pub breakpoint: f64,
    pub plateau: f64,
    pub residual: f64,
}

/// Least-squares ramp-then-plateau fit anchored at the first sample. For a
/// breakpoint inside `[x_j, x_{j+1}]` the optimum is available in closed form,
/// so every interval is solved exactly.
pub fn piecewise_linear_fit(times: &[f64], values: &[f64]) -> Result<PiecewiseFit> {
    if times.len() != values.len() {
        return Err(Error::DimensionMismatch {
            expected: times.len(),
            found: values.len(),
        });
    }
    if times.len() < 4 {
        return Err(Error::InvalidArgument("a piecewise fit needs at least 4 points".into()));
    }
    if times
        .windows(2)
        .any(|w| w[1].partial_cmp(&w[0]) != Some(std::cmp::Ordering::Greater))
    {
        return Err(Error::InvalidArgument("times must be strictly increasing".into()));
    }
    let (t0, y0) = (times[0], values[0]);
    if values.iter().all(|&v| v == y0) {
        return Ok(PiecewiseFit {
            slope: 0.0,
            breakpoint: t0,
            plateau: y0,
            residual: 0.0,
        });
    }
    let x: Vec<f64> = times.iter().map(|t| t - t0).collect();
    let y: Vec<f64> = values.iter().map(|v| v - y0).collect();
    let n = x.len();

    let evaluate = |b: f64| -> (f64, f64) {
        let (mut num, mut den) = (0.0, 0.0);
        for (&xi, &yi) in x.iter().zip(&y) {
            let m = xi.min(b);
            num += yi * m;
            den += m * m;
        }
        let a = num / den;
        let r = x.iter().zip(&y).map(|(&xi, &yi)| (yi - a * xi.min(b)).powi(2)).sum();
        (a, r)
    };

    let mut best: Option<(f64, f64, f64)> = None; // (residual, slope, breakpoint)
    let mut consider = |b: f64| {
        let (a, r) = evaluate(b);
        if best.is_none_or(|(br, _, _)| r < br) {
            best = Some((r, a, b));
        }
    };
    for j in 1..n - 1 {
        let (lo, hi) = (x[j], x[j + 1]);
        consider(lo);
        let p: f64 = (1..=j).map(|i| y[i] * x[i]).sum();
        let s: f64 = (1..=j).map(|i| x[i] * x[i]).sum();
        let q: f64 = (j + 1..n).map(|i| y[i]).sum();
        let k = (n - 1 - j) as f64;
        if p != 0.0 {
            let b = q * s / (k * p);
            if b > lo && b < hi {
                consider(b);
            }
        }
    }
    consider(x[n - 1]);

    let (residual, slope, b) = best.expect("at least one candidate");
    Ok(PiecewiseFit {
        slope,
        breakpoint: t0 + b,
        plateau: y0 + slope * b,
        residual,
    })
}

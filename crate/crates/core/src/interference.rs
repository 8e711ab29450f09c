//! Two-copy beam-splitter interference and parity-based purity estimation.
//!
//! Two identical chains occupy modes `0..L` (copy 1) and `L..2L` (copy 2).
//! A 50:50 beam splitter on every column `(x, x + L)` maps the swap operator
//! of the copies onto a product of site parities, so the mean parity of a
//! site set measures `Tr ρ_A²`. Because `ρ_A` commutes with `(-1)^{n_A}`, the
//! identity holds for the parity read on either copy; copy 1 is used here.
//! The beam splitter follows `b₁† = (a₁† + a₂†)/√2`, `b₂† = (a₁† − a₂†)/√2`;
//! the parity identity does not depend on this phase choice.

use std::sync::Arc;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fock::{binomial, normalize_sites, SectorBasis};

/// Purity floor applied before taking the logarithm of a shot estimate.
pub const PURITY_FLOOR: f64 = 1e-6;
pub const DEFAULT_BOOTSTRAP: usize = 1000;
/// Two-sided coverage of bootstrap intervals.
pub const CONFIDENCE: f64 = 0.95;

pub const SHOT_CHUNK: usize = 4096;

/// A state of the `2L`-mode, `N₁ + N₂`-particle sector.
#[derive(Clone, Debug)]
pub struct TwoCopyState {
    basis: Arc<SectorBasis>,
    amplitudes: Vec<Complex64>,
}

impl TwoCopyState {
    /// The `2L`-mode basis holding two copies with `total` atoms between them.
    pub fn space(sites: usize, total: usize) -> Result<Arc<SectorBasis>> {
        Ok(Arc::new(SectorBasis::new(2 * sites, total)?))
    }

    pub fn from_amplitudes(basis: Arc<SectorBasis>, amplitudes: Vec<Complex64>) -> Result<Self> {
        if amplitudes.len() != basis.len() || !basis.sites().is_multiple_of(2) {
            return Err(Error::DimensionMismatch {
                expected: basis.len(),
                found: amplitudes.len(),
            });
        }
        Ok(Self { basis, amplitudes })
    }

    /// `|ψ₁⟩ ⊗ |ψ₂⟩` inside a prebuilt two-copy space.
    pub fn product_in(
        space: Arc<SectorBasis>,
        first: (&SectorBasis, &[Complex64]),
        second: (&SectorBasis, &[Complex64]),
    ) -> Result<Self> {
        let (b1, psi1) = first;
        let (b2, psi2) = second;
        let l = b1.sites();
        if b2.sites() != l || space.sites() != 2 * l || space.particles() != b1.particles() + b2.particles() {
            return Err(Error::BasisMismatch {
                basis_sites: space.sites(),
                basis_particles: space.particles(),
                sites: 2 * l,
                particles: b1.particles() + b2.particles(),
            });
        }
        for (b, psi) in [(b1, psi1), (b2, psi2)] {
            if psi.len() != b.len() {
                return Err(Error::DimensionMismatch {
                    expected: b.len(),
                    found: psi.len(),
                });
            }
        }
        let mut amplitudes = vec![Complex64::default(); space.len()];
        let mut occ = vec![0u8; 2 * l];
        for (f1, &a1) in b1.iter().zip(psi1) {
            if a1 == Complex64::default() {
                continue;
            }
            occ[..l].copy_from_slice(f1);
            for (f2, &a2) in b2.iter().zip(psi2) {
                occ[l..].copy_from_slice(f2);
                amplitudes[space.ranker().rank(&occ)] = a1 * a2;
            }
        }
        Ok(Self {
            basis: space,
            amplitudes,
        })
    }

    pub fn basis(&self) -> &SectorBasis {
        &self.basis
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    /// Sites per copy.
    pub fn sites(&self) -> usize {
        self.basis.sites() / 2
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.iter().map(Complex64::norm_sqr).sum::<f64>().sqrt()
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amplitudes.iter().map(Complex64::norm_sqr).collect()
    }
}

/// Two identical copies of `ψ`.
pub fn embed_product(basis: &SectorBasis, psi: &[Complex64]) -> Result<TwoCopyState> {
    let space = TwoCopyState::space(basis.sites(), 2 * basis.particles())?;
    TwoCopyState::product_in(space, (basis, psi), (basis, psi))
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// `⟨m₁, m₂| U_BS |n₁, n₂⟩`; zero unless the totals agree.
pub fn bs_element(n1: usize, n2: usize, m1: usize, m2: usize) -> f64 {
    let s = n1 + n2;
    if m1 + m2 != s {
        return 0.0;
    }
    let mut sum = 0.0;
    for j in m1.saturating_sub(n2)..=n1.min(m1) {
        let k = m1 - j;
        let sign = if (n2 - k).is_multiple_of(2) { 1.0 } else { -1.0 };
        sum += sign
            * binomial(n1 as u64, j as u64).unwrap_or(0) as f64
            * binomial(n2 as u64, k as u64).unwrap_or(0) as f64;
    }
    (factorial(m1) * factorial(m2) / (factorial(n1) * factorial(n2))).sqrt() * 0.5f64.powf(s as f64 / 2.0) * sum
}

/// Beam-splitter block for `s` atoms in a column, row-major with
/// `[m₂][n₂]` indexing (`n₁ = s - n₂`, `m₁ = s - m₂`).
pub fn bs_block(s: usize) -> Vec<f64> {
    let mut out = vec![0.0; (s + 1) * (s + 1)];
    for m2 in 0..=s {
        for n2 in 0..=s {
            out[m2 * (s + 1) + n2] = bs_element(s - n2, n2, s - m2, m2);
        }
    }
    out
}

/// Applies the beam splitter to every column in place.
pub fn apply_beamsplitter(state: &mut TwoCopyState) {
    let l = state.sites();
    let max = state.basis.particles();
    let blocks: Vec<Vec<f64>> = (0..=max).map(bs_block).collect();
    let ranker = state.basis.ranker().clone();
    let mut occ = vec![0u8; 2 * l];
    let mut idx = Vec::with_capacity(max + 1);
    let mut buf = Vec::with_capacity(max + 1);
    for x in 0..l {
        for leader in 0..state.basis.len() {
            let lead = state.basis.state(leader);
            // one group per column configuration with everything in copy 1
            if lead[x + l] != 0 || lead[x] == 0 {
                continue;
            }
            let s = lead[x] as usize;
            occ.copy_from_slice(lead);
            idx.clear();
            for n2 in 0..=s {
                occ[x] = (s - n2) as u8;
                occ[x + l] = n2 as u8;
                idx.push(ranker.rank(&occ));
            }
            if idx.iter().all(|&i| state.amplitudes[i] == Complex64::default()) {
                continue;
            }
            let u = &blocks[s];
            buf.clear();
            for m2 in 0..=s {
                let row = &u[m2 * (s + 1)..(m2 + 1) * (s + 1)];
                buf.push(
                    row.iter()
                        .zip(&idx)
                        .map(|(&c, &i)| state.amplitudes[i] * c)
                        .sum::<Complex64>(),
                );
            }
            for (&i, &v) in idx.iter().zip(&buf) {
                state.amplitudes[i] = v;
            }
        }
    }
}

fn parity_of(occ: &[u8], sites: &[usize]) -> f64 {
    let odd = sites.iter().map(|&s| occ[s] as u32).sum::<u32>() % 2;
    if odd == 0 {
        1.0
    } else {
        -1.0
    }
}

/// `Σ_f |amp_f|² Π_{i ∈ A} (-1)^{n_i}` on copy-1 sites `A`.
pub fn exact_parity(state: &TwoCopyState, sites: &[usize]) -> Result<f64> {
    let sites = if sites.is_empty() {
        Vec::new()
    } else {
        normalize_sites(sites, state.sites())?
    };
    Ok(state
        .basis
        .iter()
        .zip(&state.amplitudes)
        .map(|(occ, a)| a.norm_sqr() * parity_of(occ, &sites))
        .sum())
}

/// One sampled occupation pattern of all `2L` modes.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ShotRecord {
    pub occupations: Vec<u8>,
    /// Bit `i` set means the parity read on mode `i` is flipped.
    pub flips: u64,
}

impl ShotRecord {
    pub fn new(occupations: Vec<u8>) -> Self {
        Self { occupations, flips: 0 }
    }

    /// `Π_{i ∈ A} p_i` on copy-1 sites, `p_i = ±1` for even/odd counts.
    pub fn parity(&self, sites: &[usize]) -> i8 {
        let odd = sites
            .iter()
            .map(|&s| self.occupations[s] as u32 + ((self.flips >> s) & 1) as u32)
            .sum::<u32>()
            % 2;
        if odd == 0 {
            1
        } else {
            -1
        }
    }

    pub fn total(&self) -> usize {
        self.occupations.iter().map(|&n| n as usize).sum()
    }
}

/// Reusable cumulative distribution over a two-copy state.
#[derive(Clone, Debug)]
pub struct ShotSampler {
    basis: Arc<SectorBasis>,
    cdf: Vec<f64>,
}

impl ShotSampler {
    pub fn new(state: &TwoCopyState) -> Self {
        let mut acc = 0.0;
        let cdf = state
            .amplitudes
            .iter()
            .map(|a| {
                acc += a.norm_sqr();
                acc
            })
            .collect();
        Self {
            basis: state.basis.clone(),
            cdf,
        }
    }

    /// `n_shots` independent draws. Chunk `c` uses stream `c` of the seeded
    /// generator, so results do not depend on the thread count.
    pub fn sample(&self, n_shots: usize, seed: u64) -> Vec<ShotRecord> {
        let total = *self.cdf.last().unwrap_or(&0.0);
        let chunks = n_shots.div_ceil(SHOT_CHUNK);
        (0..chunks)
            .into_par_iter()
            .flat_map_iter(|c| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(c as u64);
                let len = SHOT_CHUNK.min(n_shots - c * SHOT_CHUNK);
                (0..len)
                    .map(|_| {
                        let u = rng.random::<f64>() * total;
                        let i = self.cdf.partition_point(|&p| p <= u).min(self.cdf.len() - 1);
                        ShotRecord::new(self.basis.state(i).to_vec())
                    })
                    .collect::<Vec<_>>()
            })
            .collect()
    }
}

pub fn sample_shots(state: &TwoCopyState, n_shots: usize, seed: u64) -> Result<Vec<ShotRecord>> {
    if n_shots == 0 {
        return Err(Error::InvalidArgument("at least one shot is required".into()));
    }
    Ok(ShotSampler::new(state).sample(n_shots, seed))
}

fn parities(shots: &[ShotRecord], sites: &[usize]) -> Vec<i8> {
    shots.iter().map(|s| s.parity(sites)).collect()
}

fn mean_and_error(values: &[i8]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().map(|&v| v as f64).sum::<f64>() / n;
    let var = values.iter().map(|&v| (v as f64 - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

fn check_shots(shots: &[ShotRecord], sites: &[usize]) -> Result<()> {
    if shots.len() < 2 {
        return Err(Error::InvalidArgument("at least two shots are required".into()));
    }
    let modes = shots[0].occupations.len();
    if let Some(&s) = sites.iter().find(|&&s| 2 * s >= modes) {
        return Err(Error::SiteOutOfRange {
            site: s,
            sites: modes / 2,
        });
    }
    Ok(())
}

/// Mean parity on `A` and its standard error.
pub fn purity_estimator(shots: &[ShotRecord], sites: &[usize]) -> Result<(f64, f64)> {
    check_shots(shots, sites)?;
    Ok(mean_and_error(&parities(shots, sites)))
}

/// Rényi-2 entropy from shots with a bootstrap percentile interval.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EntropyEstimate {
    pub entropy: f64,
    pub lower: f64,
    /// `None` when the resampled purity reaches zero or below.
    pub upper: Option<f64>,
    pub purity: f64,
    pub purity_error: f64,
}

fn neg_ln(p: f64) -> f64 {
    -p.max(PURITY_FLOOR).ln() + 0.0
}

pub fn entropy_from_shots(
    shots: &[ShotRecord],
    sites: &[usize],
    n_bootstrap: usize,
    seed: u64,
) -> Result<EntropyEstimate> {
    check_shots(shots, sites)?;
    if n_bootstrap == 0 {
        return Err(Error::InvalidArgument("bootstrap needs at least one resample".into()));
    }
    let p = parities(shots, sites);
    let (purity, purity_error) = mean_and_error(&p);
    let n = p.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut means: Vec<f64> = (0..n_bootstrap)
        .map(|_| {
            let s: i64 = (0..n).map(|_| p[rng.random_range(0..n)] as i64).sum();
            s as f64 / n as f64
        })
        .collect();
    means.sort_by(f64::total_cmp);
    let pick = |q: f64| means[((q * (n_bootstrap - 1) as f64).round() as usize).min(n_bootstrap - 1)];
    let alpha = 0.5 * (1.0 - CONFIDENCE);
    let (p_lo, p_hi) = (pick(alpha), pick(1.0 - alpha));
    Ok(EntropyEstimate {
        entropy: neg_ln(purity),
        lower: neg_ln(p_hi),
        upper: (p_lo > 0.0).then(|| neg_ln(p_lo)),
        purity,
        purity_error,
    })
}

/// Flips each mode's read-out parity independently with probability `ε`.
pub fn apply_parity_noise(shots: &[ShotRecord], epsilon: f64, seed: u64) -> Result<Vec<ShotRecord>> {
    if !(0.0..=1.0).contains(&epsilon) {
        return Err(Error::InvalidArgument(format!(
            "flip probability must lie in [0, 1], got {epsilon}"
        )));
    }
    if epsilon == 0.0 {
        return Ok(shots.to_vec());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(shots
        .iter()
        .map(|s| {
            let mut flips = s.flips;
            for i in 0..s.occupations.len() {
                if rng.random::<f64>() < epsilon {
                    flips ^= 1 << i;
                }
            }
            ShotRecord {
                occupations: s.occupations.clone(),
                flips,
            }
        })
        .collect())
}

/// Per-site entropy offset produced by read-out flips with probability `ε`.
pub fn noise_offset(sites: usize, epsilon: f64) -> f64 {
    -(sites as f64) * (1.0 - 2.0 * epsilon).ln()
}

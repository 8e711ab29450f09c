//! Occupation-number bases for bosons on a chain.
//!
//! States of a fixed-`N` sector are ordered by *descending* lexicographic
//! occupation tuple, so for two sites and two particles the basis reads
//! `[(2,0), (1,1), (0,2)]`. Ranking is combinatorial: a table of
//! composition counts gives the ordinal of any state in `O(L)` lookups and
//! the inverse in `O(L·N)`, without hashing.

use std::collections::BTreeMap;
use std::fmt;

use crate::error::{Error, Result};

/// Atoms on a single site.
pub type Occupation = u8;

/// Exact binomial coefficient, `None` on overflow of `u64`.
pub fn binomial(n: u64, k: u64) -> Option<u64> {
    if k > n {
        return Some(0);
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 1..=k as u128 {
        // acc * (n - k + i) is divisible by i at every step
        acc = acc.checked_mul(n as u128 - k as u128 + i)? / i;
    }
    u64::try_from(acc).ok()
}

/// Number of ways to place `particles` bosons on `sites` sites, `C(N+L-1, L-1)`.
pub fn dimension(sites: usize, particles: usize) -> Result<u64> {
    if sites == 0 {
        return Err(Error::InvalidArgument("a chain needs at least one site".into()));
    }
    let overflow = Error::DimensionOverflow { sites, particles };
    let n = (particles as u64)
        .checked_add(sites as u64 - 1)
        .ok_or_else(|| overflow.clone())?;
    binomial(n, sites as u64 - 1).ok_or(overflow)
}

/// A definite occupation-number configuration.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FockState(Vec<Occupation>);

impl FockState {
    pub fn new(occupations: Vec<Occupation>) -> Self {
        Self(occupations)
    }

    /// One atom on every site.
    pub fn unit_filling(sites: usize) -> Self {
        Self(vec![1; sites])
    }

    pub fn sites(&self) -> usize {
        self.0.len()
    }

    pub fn particles(&self) -> usize {
        self.0.iter().map(|&n| n as usize).sum()
    }

    pub fn occupations(&self) -> &[Occupation] {
        &self.0
    }
}

impl fmt::Display for FockState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "|")?;
        for n in &self.0 {
            write!(f, "{n}")?;
        }
        write!(f, "⟩")
    }
}

/// Combinatorial ranking tables for one `(sites, particles)` sector with an
/// optional per-site occupation cap.
#[derive(Clone, Debug)]
pub struct Ranker {
    sites: usize,
    particles: usize,
    cap: Option<Occupation>,
    /// `ways[k][r]`: configurations of `r` particles on `k` sites.
    ways: Vec<u64>,
    /// `above[k][r][n]`: configurations on `k+1` sites whose first entry
    /// exceeds `n` when `r` particles remain.
    above: Vec<u64>,
}

impl Ranker {
    pub fn new(sites: usize, particles: usize, cap: Option<Occupation>) -> Result<Self> {
        if particles > Occupation::MAX as usize {
            return Err(Error::InvalidArgument(format!(
                "{particles} particles exceed the per-site occupation type"
            )));
        }
        let np = particles + 1;
        let limit = |r: usize| cap.map_or(r, |c| r.min(c as usize));
        let overflow = || Error::DimensionOverflow { sites, particles };

        let mut ways = vec![0u64; (sites + 1) * np];
        ways[0] = 1;
        for k in 1..=sites {
            for r in 0..np {
                let mut total = 0u64;
                for m in 0..=limit(r) {
                    total = total.checked_add(ways[(k - 1) * np + r - m]).ok_or_else(overflow)?;
                }
                ways[k * np + r] = total;
            }
        }

        let mut above = vec![0u64; sites.max(1) * np * np];
        for k in 0..sites {
            for r in 0..np {
                let mut acc = 0u64;
                for n in (0..np).rev() {
                    above[(k * np + r) * np + n] = acc;
                    if n <= limit(r) {
                        acc = acc.checked_add(ways[k * np + r - n]).ok_or_else(overflow)?;
                    }
                }
            }
        }

        Ok(Self {
            sites,
            particles,
            cap,
            ways,
            above,
        })
    }

    pub fn sites(&self) -> usize {
        self.sites
    }

    pub fn particles(&self) -> usize {
        self.particles
    }

    pub fn cap(&self) -> Option<Occupation> {
        self.cap
    }

    pub fn len(&self) -> usize {
        self.ways[self.sites * (self.particles + 1) + self.particles] as usize
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn ways(&self, sites: usize, particles: usize) -> u64 {
        self.ways[sites * (self.particles + 1) + particles]
    }

    fn site_limit(&self, remaining: usize) -> usize {
        self.cap.map_or(remaining, |c| remaining.min(c as usize))
    }

    /// Ordinal of a state known to belong to the sector.
    #[inline]
    pub fn rank(&self, occupations: &[Occupation]) -> usize {
        debug_assert_eq!(occupations.len(), self.sites);
        let np = self.particles + 1;
        let mut remaining = self.particles;
        let mut idx = 0u64;
        for (k, &n) in occupations.iter().enumerate().take(self.sites.saturating_sub(1)) {
            let after = self.sites - k - 1;
            idx += self.above[(after * np + remaining) * np + n as usize];
            remaining -= n as usize;
        }
        idx as usize
    }

    /// Ordinal of an arbitrary configuration, `None` if it is not in the sector.
    pub fn try_rank(&self, occupations: &[Occupation]) -> Option<usize> {
        if occupations.len() != self.sites {
            return None;
        }
        let total: usize = occupations.iter().map(|&n| n as usize).sum();
        if total != self.particles {
            return None;
        }
        if let Some(c) = self.cap {
            if occupations.iter().any(|&n| n > c) {
                return None;
            }
        }
        Some(self.rank(occupations))
    }

    pub fn unrank(&self, mut index: usize, out: &mut [Occupation]) {
        debug_assert!(index < self.len());
        debug_assert_eq!(out.len(), self.sites);
        let mut remaining = self.particles;
        for (k, slot) in out.iter_mut().enumerate() {
            let after = self.sites - k - 1;
            if after == 0 {
                *slot = remaining as Occupation;
                break;
            }
            let mut n = self.site_limit(remaining);
            loop {
                let count = self.ways(after, remaining - n) as usize;
                if index < count {
                    break;
                }
                index -= count;
                n -= 1;
            }
            *slot = n as Occupation;
            remaining -= n;
        }
    }

    /// Lexicographically largest state, or `None` for an empty sector.
    pub fn first(&self) -> Option<Vec<Occupation>> {
        if self.is_empty() {
            return None;
        }
        let mut occ = vec![0; self.sites];
        let mut remaining = self.particles;
        for slot in occ.iter_mut() {
            let n = self.site_limit(remaining);
            *slot = n as Occupation;
            remaining -= n;
        }
        Some(occ)
    }

    /// Step to the next state in descending lexicographic order. Returns
    /// `false` (leaving `occ` untouched) at the last state.
    pub fn advance(&self, occ: &mut [Occupation]) -> bool {
        let l = self.sites;
        if l < 2 {
            return false;
        }
        let mut suffix = occ[l - 1] as usize;
        for k in (0..l - 1).rev() {
            let room = self.cap.map_or(usize::MAX, |c| c as usize * (l - k - 1));
            if occ[k] > 0 && suffix < room {
                occ[k] -= 1;
                let mut remaining = suffix + 1;
                for slot in occ[k + 1..].iter_mut() {
                    let n = self.site_limit(remaining);
                    *slot = n as Occupation;
                    remaining -= n;
                }
                return true;
            }
            suffix += occ[k] as usize;
        }
        false
    }

    /// Visit every state in order together with its ordinal.
    pub fn for_each(&self, mut f: impl FnMut(usize, &[Occupation])) {
        if let Some(mut occ) = self.first() {
            let mut i = 0;
            loop {
                f(i, &occ);
                i += 1;
                if !self.advance(&mut occ) {
                    break;
                }
            }
        }
    }
}

/// All states of `N` bosons on `L` sites, in descending lexicographic order.
#[derive(Clone, Debug)]
pub struct SectorBasis {
    ranker: Ranker,
    states: Vec<Occupation>,
}

impl SectorBasis {
    pub fn new(sites: usize, particles: usize) -> Result<Self> {
        Self::with_cap(sites, particles, None)
    }

    pub fn with_cap(sites: usize, particles: usize, cap: Option<Occupation>) -> Result<Self> {
        if sites == 0 {
            return Err(Error::InvalidArgument("a chain needs at least one site".into()));
        }
        if cap.is_none() {
            dimension(sites, particles)?;
        }
        Self::build(Ranker::new(sites, particles, cap)?)
    }

    /// Sub-bases of a partition may have zero sites; only the vacuum lives there.
    pub(crate) fn build(ranker: Ranker) -> Result<Self> {
        let mut states = Vec::with_capacity(ranker.len() * ranker.sites());
        ranker.for_each(|_, occ| states.extend_from_slice(occ));
        Ok(Self { ranker, states })
    }

    pub fn sites(&self) -> usize {
        self.ranker.sites
    }

    pub fn particles(&self) -> usize {
        self.ranker.particles
    }

    pub fn cap(&self) -> Option<Occupation> {
        self.ranker.cap
    }

    pub fn len(&self) -> usize {
        self.ranker.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn ranker(&self) -> &Ranker {
        &self.ranker
    }

    pub fn state(&self, index: usize) -> &[Occupation] {
        let l = self.sites();
        &self.states[index * l..(index + 1) * l]
    }

    pub fn iter(&self) -> impl ExactSizeIterator<Item = &[Occupation]> + '_ {
        (0..self.len()).map(move |i| self.state(i))
    }

    pub fn rank(&self, occupations: &[Occupation]) -> Option<usize> {
        self.ranker.try_rank(occupations)
    }

    pub fn unrank(&self, index: usize) -> FockState {
        FockState::new(self.state(index).to_vec())
    }

    pub fn index_of(&self, state: &FockState) -> Option<usize> {
        self.rank(state.occupations())
    }
}

/// Every sector `N = 0..=N_max` of a chain, stacked with cumulative offsets.
#[derive(Clone, Debug)]
pub struct MultiSectorBasis {
    sites: usize,
    max_particles: usize,
    sectors: Vec<SectorBasis>,
    offsets: Vec<usize>,
}

impl MultiSectorBasis {
    pub fn new(sites: usize, max_particles: usize) -> Result<Self> {
        let sectors = (0..=max_particles)
            .map(|n| SectorBasis::new(sites, n))
            .collect::<Result<Vec<_>>>()?;
        let mut offsets = Vec::with_capacity(sectors.len());
        let mut acc = 0;
        for s in &sectors {
            offsets.push(acc);
            acc += s.len();
        }
        Ok(Self {
            sites,
            max_particles,
            sectors,
            offsets,
        })
    }

    pub fn sites(&self) -> usize {
        self.sites
    }

    pub fn max_particles(&self) -> usize {
        self.max_particles
    }

    pub fn len(&self) -> usize {
        self.sectors.iter().map(SectorBasis::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn sectors(&self) -> &[SectorBasis] {
        &self.sectors
    }

    pub fn sector(&self, particles: usize) -> Option<&SectorBasis> {
        self.sectors.get(particles)
    }

    pub fn offsets(&self) -> &[usize] {
        &self.offsets
    }

    /// `(particles, local index)` of a global index.
    pub fn locate(&self, index: usize) -> Option<(usize, usize)> {
        if index >= self.len() {
            return None;
        }
        let n = self.offsets.partition_point(|&o| o <= index) - 1;
        Some((n, index - self.offsets[n]))
    }
}

/// Where each full-basis state lands after splitting the chain into `A|B`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct PartitionEntry {
    pub n_a: usize,
    pub rank_a: usize,
    pub rank_b: usize,
}

#[derive(Clone, Debug)]
pub struct PartitionMap {
    sites: Vec<usize>,
    complement: Vec<usize>,
    total_sites: usize,
    particles: usize,
    entries: Vec<PartitionEntry>,
    /// `n_a -> (dim of A sub-basis, dim of B sub-basis)`, feasible `n_a` only.
    block_dims: BTreeMap<usize, (usize, usize)>,
}

impl PartitionMap {
    pub fn new(basis: &SectorBasis, subsystem: &[usize]) -> Result<Self> {
        let l = basis.sites();
        let n = basis.particles();
        let sites = normalize_sites(subsystem, l)?;
        if sites.is_empty() {
            return Err(Error::InvalidArgument(
                "subsystem must contain at least one site".into(),
            ));
        }
        let complement: Vec<usize> = (0..l).filter(|s| !sites.contains(s)).collect();

        let cap = basis.cap();
        let rankers_a = (0..=n)
            .map(|k| Ranker::new(sites.len(), k, cap))
            .collect::<Result<Vec<_>>>()?;
        let rankers_b = (0..=n)
            .map(|k| Ranker::new(complement.len(), k, cap))
            .collect::<Result<Vec<_>>>()?;

        let mut block_dims = BTreeMap::new();
        for n_a in 0..=n {
            let (da, db) = (rankers_a[n_a].len(), rankers_b[n - n_a].len());
            if da > 0 && db > 0 {
                block_dims.insert(n_a, (da, db));
            }
        }

        let mut occ_a = vec![0; sites.len()];
        let mut occ_b = vec![0; complement.len()];
        let entries = basis
            .iter()
            .map(|occ| {
                for (slot, &s) in occ_a.iter_mut().zip(&sites) {
                    *slot = occ[s];
                }
                for (slot, &s) in occ_b.iter_mut().zip(&complement) {
                    *slot = occ[s];
                }
                let n_a: usize = occ_a.iter().map(|&x| x as usize).sum();
                PartitionEntry {
                    n_a,
                    rank_a: rankers_a[n_a].rank(&occ_a),
                    rank_b: rankers_b[n - n_a].rank(&occ_b),
                }
            })
            .collect();

        Ok(Self {
            sites,
            complement,
            total_sites: l,
            particles: n,
            entries,
            block_dims,
        })
    }

    pub fn sites(&self) -> &[usize] {
        &self.sites
    }

    pub fn complement(&self) -> &[usize] {
        &self.complement
    }

    pub fn total_sites(&self) -> usize {
        self.total_sites
    }

    pub fn particles(&self) -> usize {
        self.particles
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entry(&self, index: usize) -> PartitionEntry {
        self.entries[index]
    }

    pub fn entries(&self) -> &[PartitionEntry] {
        &self.entries
    }

    pub fn block_dims(&self) -> &BTreeMap<usize, (usize, usize)> {
        &self.block_dims
    }
}

/// Sorted, deduplicated site list; errors on sites outside `0..sites`.
pub fn normalize_sites(subsystem: &[usize], sites: usize) -> Result<Vec<usize>> {
    let mut out = subsystem.to_vec();
    out.sort_unstable();
    out.dedup();
    if let Some(&bad) = out.iter().find(|&&s| s >= sites) {
        return Err(Error::SiteOutOfRange { site: bad, sites });
    }
    Ok(out)
}

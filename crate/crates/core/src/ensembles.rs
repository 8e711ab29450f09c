//! Statistical ensembles over energy eigenstates and their matching to a
//! quench energy.

use std::fmt;

use num_complex::Complex64;

use crate::entanglement::{partition_family, renyi2, FamilyStats, PartitionMode, RdmAccumulator};
use crate::error::{Error, Result};
use crate::fock::{normalize_sites, PartitionMap, SectorBasis};
use crate::hamiltonian::{build_hamiltonian, HubbardParams};
use crate::roots::brent;
use crate::spectral::SpectralDecomposition;
use crate::BlockDensityMatrix;

/// Microcanonical half-width used when none is given, in units of `J`.
pub const DEFAULT_WINDOW: f64 = 1.0;

pub const TEMPERATURE_RTOL: f64 = 1e-8;
pub const GRAND_CANONICAL_RTOL: f64 = 1e-6;
pub const MAX_ITERATIONS: usize = 200;

/// A fixed-`N` Fock sector together with its diagonalized Hamiltonian.
#[derive(Clone, Debug)]
pub struct Sector {
    basis: SectorBasis,
    spectrum: SpectralDecomposition,
}

impl Sector {
    pub fn new(basis: SectorBasis, spectrum: SpectralDecomposition) -> Result<Self> {
        if basis.len() != spectrum.dim() {
            return Err(Error::DimensionMismatch {
                expected: basis.len(),
                found: spectrum.dim(),
            });
        }
        Ok(Self { basis, spectrum })
    }

    pub fn build(params: &HubbardParams) -> Result<Self> {
        let basis = SectorBasis::new(params.sites, params.particles)?;
        let h = build_hamiltonian(params, &basis)?;
        let spectrum = SpectralDecomposition::eigh(&h)?;
        Ok(Self { basis, spectrum })
    }

    pub fn basis(&self) -> &SectorBasis {
        &self.basis
    }

    pub fn spectrum(&self) -> &SpectralDecomposition {
        &self.spectrum
    }

    pub fn particles(&self) -> usize {
        self.basis.particles()
    }

    pub fn energies(&self) -> &[f64] {
        self.spectrum.eigenvalues()
    }
}

/// Sectors `n = 0..=N` of the chain described by `params`.
pub fn sectors_up_to(params: &HubbardParams) -> Result<Vec<Sector>> {
    (0..=params.particles)
        .map(|n| {
            Sector::build(&HubbardParams {
                particles: n,
                ..*params
            })
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum EnsembleKind {
    Canonical,
    Microcanonical,
    GrandCanonical,
    Diagonal,
    SingleEigenstate,
}

impl EnsembleKind {
    pub const ALL: [EnsembleKind; 5] = [
        EnsembleKind::Diagonal,
        EnsembleKind::SingleEigenstate,
        EnsembleKind::Microcanonical,
        EnsembleKind::Canonical,
        EnsembleKind::GrandCanonical,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            EnsembleKind::Canonical => "canonical",
            EnsembleKind::Microcanonical => "microcanonical",
            EnsembleKind::GrandCanonical => "grand-canonical",
            EnsembleKind::Diagonal => "diagonal",
            EnsembleKind::SingleEigenstate => "single-eigenstate",
        }
    }
}

impl fmt::Display for EnsembleKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Eigenstate weights inside one particle-number sector.
#[derive(Clone, Debug, PartialEq)]
pub struct SectorWeights {
    pub particles: usize,
    pub weights: Vec<f64>,
}

/// A mixture `Σ w_n |n⟩⟨n|` over energy eigenstates, possibly spanning sectors.
#[derive(Clone, Debug, PartialEq)]
pub struct EnsembleState {
    kind: EnsembleKind,
    sectors: Vec<SectorWeights>,
    temperature: Option<f64>,
    chemical_potential: Option<f64>,
    window: Option<f64>,
    eigenstate: Option<usize>,
}

impl EnsembleState {
    fn single(kind: EnsembleKind, particles: usize, weights: Vec<f64>) -> Self {
        Self {
            kind,
            sectors: vec![SectorWeights { particles, weights }],
            temperature: None,
            chemical_potential: None,
            window: None,
            eigenstate: None,
        }
    }

    pub fn kind(&self) -> EnsembleKind {
        self.kind
    }

    pub fn sectors(&self) -> &[SectorWeights] {
        &self.sectors
    }

    pub fn temperature(&self) -> Option<f64> {
        self.temperature
    }

    pub fn chemical_potential(&self) -> Option<f64> {
        self.chemical_potential
    }

    pub fn window(&self) -> Option<f64> {
        self.window
    }

    /// Index of the selected state for a single-eigenstate ensemble.
    pub fn eigenstate(&self) -> Option<usize> {
        self.eigenstate
    }

    pub fn total_weight(&self) -> f64 {
        self.sectors.iter().flat_map(|s| &s.weights).sum()
    }

    /// Non-negative weights summing to one within `tol`.
    pub fn check(&self, tol: f64) -> Result<()> {
        if let Some(w) = self
            .sectors
            .iter()
            .flat_map(|s| &s.weights)
            .find(|w| w.is_nan() || **w < 0.0)
        {
            return Err(Error::Invariant(format!("negative ensemble weight {w}")));
        }
        let total = self.total_weight();
        if (total - 1.0).abs() > tol {
            return Err(Error::Invariant(format!("ensemble weights sum to {total}")));
        }
        Ok(())
    }

    /// `1 / Σ w²`.
    pub fn participation_ratio(&self) -> f64 {
        1.0 / self.sectors.iter().flat_map(|s| &s.weights).map(|w| w * w).sum::<f64>()
    }

    pub fn mean_energy(&self, sectors: &[Sector]) -> Result<f64> {
        let mut e = 0.0;
        for sw in &self.sectors {
            let s = find_sector(sectors, sw.particles)?;
            e += sw.weights.iter().zip(s.energies()).map(|(w, e)| w * e).sum::<f64>();
        }
        Ok(e)
    }

    pub fn mean_particles(&self) -> f64 {
        self.sectors
            .iter()
            .map(|s| s.particles as f64 * s.weights.iter().sum::<f64>())
            .sum()
    }

    /// Diagonal of the density matrix in the Fock basis, one vector per sector.
    pub fn fock_probabilities(&self, sectors: &[Sector]) -> Result<Vec<(usize, Vec<f64>)>> {
        self.sectors
            .iter()
            .map(|sw| {
                let s = find_sector(sectors, sw.particles)?;
                check_weights_len(s, &sw.weights)?;
                let v = s.spectrum().eigenvectors();
                let probs = v
                    .rows()
                    .into_iter()
                    .map(|row| row.iter().zip(&sw.weights).map(|(a, w)| w * a * a).sum())
                    .collect();
                Ok((sw.particles, probs))
            })
            .collect()
    }
}

fn find_sector(sectors: &[Sector], particles: usize) -> Result<&Sector> {
    sectors
        .iter()
        .find(|s| s.particles() == particles)
        .ok_or_else(|| Error::InvalidArgument(format!("no sector with {particles} particles supplied")))
}

fn check_weights_len(sector: &Sector, weights: &[f64]) -> Result<()> {
    if weights.len() != sector.spectrum().dim() {
        return Err(Error::DimensionMismatch {
            expected: sector.spectrum().dim(),
            found: weights.len(),
        });
    }
    Ok(())
}

fn check_temperature(t: f64) -> Result<()> {
    if t.is_nan() || t <= 0.0 {
        return Err(Error::InvalidArgument(format!("temperature must be positive, got {t}")));
    }
    Ok(())
}

/// `exp(x_i) / Σ exp(x)` with the maximum shifted out.
fn softmax(log_weights: &[f64]) -> Vec<f64> {
    let max = log_weights.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut w: Vec<f64> = log_weights.iter().map(|x| (x - max).exp()).collect();
    let z: f64 = w.iter().sum();
    w.iter_mut().for_each(|x| *x /= z);
    w
}

pub fn boltzmann_weights(energies: &[f64], temperature: f64) -> Vec<f64> {
    if temperature.is_infinite() {
        return vec![1.0 / energies.len() as f64; energies.len()];
    }
    let logs: Vec<f64> = energies.iter().map(|e| -e / temperature).collect();
    softmax(&logs)
}

/// `⟨H⟩_T`.
pub fn thermal_energy(energies: &[f64], temperature: f64) -> f64 {
    boltzmann_weights(energies, temperature)
        .iter()
        .zip(energies)
        .map(|(w, e)| w * e)
        .sum()
}

/// `w_n ∝ e^{-E_n/T}`; `T = ∞` gives uniform weights.
pub fn canonical(sector: &Sector, temperature: f64) -> Result<EnsembleState> {
    check_temperature(temperature)?;
    let mut ens = EnsembleState::single(
        EnsembleKind::Canonical,
        sector.particles(),
        boltzmann_weights(sector.energies(), temperature),
    );
    ens.temperature = Some(temperature);
    Ok(ens)
}

/// Solves `⟨H⟩_T = E_target` for `T`.
pub fn match_canonical_temperature(sector: &Sector, target: f64) -> Result<f64> {
    let e = sector.energies();
    let low = e[0];
    let high = e.iter().sum::<f64>() / e.len() as f64;
    if !(target > low && target < high) {
        return Err(Error::TargetOutOfRange { target, low, high });
    }
    let width = e[e.len() - 1] - low;
    let scale = target.abs().max(width);
    // ⟨H⟩ rises monotonically with T, so work in ln T and widen a bracket
    let f = |x: f64| thermal_energy(e, x.exp()) - target;
    let (mut lo, mut hi) = (width.ln(), width.ln());
    let mut steps = 0;
    while f(lo) > 0.0 {
        lo -= 1.0;
        steps += 1;
        if steps > MAX_ITERATIONS {
            return Err(Error::TargetOutOfRange { target, low, high });
        }
    }
    while f(hi) < 0.0 {
        hi += 1.0;
        steps += 1;
        if steps > MAX_ITERATIONS {
            return Err(Error::TargetOutOfRange { target, low, high });
        }
    }
    let x = brent(f, lo, hi, TEMPERATURE_RTOL * scale, MAX_ITERATIONS)?;
    Ok(x.exp())
}

/// Uniform weights on all eigenstates with `|E_n - E| ≤ ΔE`.
pub fn microcanonical(sector: &Sector, target: f64, half_width: f64) -> Result<EnsembleState> {
    if half_width.is_nan() || half_width < 0.0 {
        return Err(Error::InvalidArgument(format!(
            "energy window must be non-negative, got {half_width}"
        )));
    }
    let (low, high) = (target - half_width, target + half_width);
    let inside: Vec<bool> = sector.energies().iter().map(|&e| e >= low && e <= high).collect();
    let count = inside.iter().filter(|&&b| b).count();
    if count == 0 {
        return Err(Error::EmptyWindow { low, high });
    }
    let w = 1.0 / count as f64;
    let weights = inside.iter().map(|&b| if b { w } else { 0.0 }).collect();
    let mut ens = EnsembleState::single(EnsembleKind::Microcanonical, sector.particles(), weights);
    ens.window = Some(half_width);
    Ok(ens)
}

/// `w_n = |c_n|²`, the infinite-time average of a quench.
pub fn diagonal_ensemble(sector: &Sector, overlaps: &[Complex64]) -> Result<EnsembleState> {
    if overlaps.len() != sector.spectrum().dim() {
        return Err(Error::DimensionMismatch {
            expected: sector.spectrum().dim(),
            found: overlaps.len(),
        });
    }
    let mut weights: Vec<f64> = overlaps.iter().map(Complex64::norm_sqr).collect();
    let norm: f64 = weights.iter().sum();
    if (norm - 1.0).abs() > 1e-10 {
        return Err(Error::InvalidArgument(format!(
            "state is not normalized (|c|² sums to {norm})"
        )));
    }
    weights.iter_mut().for_each(|w| *w /= norm);
    Ok(EnsembleState::single(
        EnsembleKind::Diagonal,
        sector.particles(),
        weights,
    ))
}

/// The eigenstate closest in energy to `target`; ties go to the lower index.
pub fn single_eigenstate(sector: &Sector, target: f64) -> Result<EnsembleState> {
    let e = sector.energies();
    if e.is_empty() {
        return Err(Error::InvalidArgument("empty spectrum".into()));
    }
    let mut best = 0;
    for (k, &ek) in e.iter().enumerate() {
        if (ek - target).abs() < (e[best] - target).abs() {
            best = k;
        }
    }
    let mut weights = vec![0.0; e.len()];
    weights[best] = 1.0;
    let mut ens = EnsembleState::single(EnsembleKind::SingleEigenstate, sector.particles(), weights);
    ens.eigenstate = Some(best);
    Ok(ens)
}

fn grand_canonical_logs(sectors: &[Sector], beta: f64, alpha: f64) -> Vec<f64> {
    sectors
        .iter()
        .flat_map(|s| {
            let n = s.particles() as f64;
            s.energies().iter().map(move |e| -beta * e + alpha * n)
        })
        .collect()
}

fn split_by_sector(sectors: &[Sector], flat: Vec<f64>) -> Vec<SectorWeights> {
    let mut out = Vec::with_capacity(sectors.len());
    let mut rest = flat.as_slice();
    for s in sectors {
        let (head, tail) = rest.split_at(s.energies().len());
        out.push(SectorWeights {
            particles: s.particles(),
            weights: head.to_vec(),
        });
        rest = tail;
    }
    out
}

/// `w ∝ e^{-(E - μ n)/T}` over every supplied sector.
pub fn grand_canonical(sectors: &[Sector], temperature: f64, mu: f64) -> Result<EnsembleState> {
    check_temperature(temperature)?;
    if sectors.is_empty() {
        return Err(Error::InvalidArgument(
            "grand-canonical ensemble needs at least one sector".into(),
        ));
    }
    let flat = if temperature.is_infinite() {
        let total: usize = sectors.iter().map(|s| s.energies().len()).sum();
        vec![1.0 / total as f64; total]
    } else {
        softmax(&grand_canonical_logs(sectors, 1.0 / temperature, mu / temperature))
    };
    Ok(EnsembleState {
        kind: EnsembleKind::GrandCanonical,
        sectors: split_by_sector(sectors, flat),
        temperature: Some(temperature),
        chemical_potential: Some(mu),
        window: None,
        eigenstate: None,
    })
}

/// Grand-canonical moments at `(β, α = βμ)`: `(ln Z, ⟨E⟩, ⟨n⟩, Var E, Cov(E, n), Var n)`.
fn grand_moments(sectors: &[Sector], beta: f64, alpha: f64) -> (f64, f64, f64, f64, f64, f64) {
    let logs = grand_canonical_logs(sectors, beta, alpha);
    let max = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let (mut z, mut se, mut sn, mut see, mut sen, mut snn) = (0.0, 0.0, 0.0, 0.0, 0.0, 0.0);
    let mut k = 0;
    for s in sectors {
        let n = s.particles() as f64;
        for &e in s.energies() {
            let w = (logs[k] - max).exp();
            k += 1;
            z += w;
            se += w * e;
            sn += w * n;
            see += w * e * e;
            sen += w * e * n;
            snn += w * n * n;
        }
    }
    let (me, mn) = (se / z, sn / z);
    (
        z.ln() + max,
        me,
        mn,
        see / z - me * me,
        sen / z - me * mn,
        snn / z - mn * mn,
    )
}

/// Solves `⟨H⟩ = E_target`, `⟨n⟩ = N_target` for `(T, μ)`.
///
/// Newton's method on the convex dual `ln Z(β, α) + β E - α N`, whose
/// Hessian is the covariance of `(-E, n)`.
pub fn match_grand_canonical(sectors: &[Sector], e_target: f64, n_target: f64) -> Result<(f64, f64)> {
    let n_max = sectors.iter().map(Sector::particles).max().unwrap_or(0) as f64;
    let n_min = sectors.iter().map(Sector::particles).min().unwrap_or(0) as f64;
    if !(n_target > n_min && n_target < n_max) {
        return Err(Error::TargetOutOfRange {
            target: n_target,
            low: n_min,
            high: n_max,
        });
    }
    let all: Vec<f64> = sectors.iter().flat_map(|s| s.energies().iter().copied()).collect();
    let width =
        all.iter().copied().fold(f64::NEG_INFINITY, f64::max) - all.iter().copied().fold(f64::INFINITY, f64::min);
    let e_scale = e_target.abs().max(width);

    let dual = |b: f64, a: f64| grand_moments(sectors, b, a).0 + b * e_target - a * n_target;
    let (mut beta, mut alpha) = (1.0 / width, 0.0);
    let mut residual = f64::INFINITY;
    for _ in 0..MAX_ITERATIONS {
        let (_, me, mn, vee, ven, vnn) = grand_moments(sectors, beta, alpha);
        let (ge, gn) = (e_target - me, mn - n_target);
        residual = (ge.abs() / e_scale).max(gn.abs() / n_target);
        if residual <= GRAND_CANONICAL_RTOL {
            if beta <= 0.0 {
                return Err(Error::TargetOutOfRange {
                    target: e_target,
                    low: f64::NEG_INFINITY,
                    high: grand_moments(sectors, 0.0, alpha).1,
                });
            }
            return Ok((1.0 / beta, alpha / beta));
        }
        // Hessian [[Var E, -Cov], [-Cov, Var n]]
        let (h11, h12, h22) = (vee, -ven, vnn);
        let det = h11 * h22 - h12 * h12;
        let (db, da) = if det > 0.0 {
            (-(h22 * ge - h12 * gn) / det, -(h11 * gn - h12 * ge) / det)
        } else {
            (-ge / h11.max(f64::MIN_POSITIVE), -gn / h22.max(f64::MIN_POSITIVE))
        };
        let g0 = dual(beta, alpha);
        let slope = ge * db + gn * da;
        let mut step = 1.0;
        while step > 1e-12 && dual(beta + step * db, alpha + step * da) > g0 + 1e-4 * step * slope {
            step *= 0.5;
        }
        beta += step * db;
        alpha += step * da;
    }
    Err(Error::RootNotConverged {
        iterations: MAX_ITERATIONS,
        residual,
    })
}

/// `Σ_n w_n Tr_B |n⟩⟨n|` for the site set `sites`.
pub fn ensemble_rdm(ensemble: &EnsembleState, sectors: &[Sector], sites: &[usize]) -> Result<BlockDensityMatrix> {
    let first = sectors
        .first()
        .ok_or_else(|| Error::InvalidArgument("no sectors supplied".into()))?;
    let sites = normalize_sites(sites, first.basis().sites())?;
    let mut acc = RdmAccumulator::new(&sites);
    for sw in &ensemble.sectors {
        let s = find_sector(sectors, sw.particles)?;
        check_weights_len(s, &sw.weights)?;
        let pmap = PartitionMap::new(s.basis(), &sites)?;
        for (k, &w) in sw.weights.iter().enumerate() {
            if w > 0.0 {
                let v = s.spectrum().eigenvector(k);
                acc.add(w, &v, &pmap)?;
            }
        }
    }
    Ok(acc.finish())
}

/// Rényi-2 entropy of the ensemble averaged over the partition family of size `volume`.
pub fn thermal_renyi(
    ensemble: &EnsembleState,
    sectors: &[Sector],
    volume: usize,
    mode: PartitionMode,
) -> Result<FamilyStats> {
    let sites = sectors.first().map(|s| s.basis().sites()).unwrap_or(0);
    if volume == 0 || volume > sites {
        return Err(Error::InvalidArgument(format!(
            "subsystem volume {volume} outside 1..={sites}"
        )));
    }
    let values = partition_family(sites, volume, mode)
        .iter()
        .map(|a| renyi2(&ensemble_rdm(ensemble, sectors, a)?))
        .collect::<Result<Vec<_>>>()?;
    Ok(FamilyStats::from_values(&values))
}

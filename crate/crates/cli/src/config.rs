//! Experiment configuration, read from TOML.
//!
//! Every field has a default, so an empty file is a valid config describing
//! the six-site, six-atom quench to `J/U = 0.64`. [`ExperimentConfig::resolve`]
//! fills the fields whose defaults depend on other fields, and the resolved
//! value is what gets recorded in the manifest.

use std::path::Path;

use quench_core::{EnsembleKind, PartitionMode};
use serde::{Deserialize, Serialize};

use crate::error::RunError;

/// Dimensionless time `tJ` from a lab time in milliseconds, with `J_hz` the
/// tunneling rate `J/(2π)` in Hz.
pub fn convert_time(t_ms: f64, j_hz: f64) -> f64 {
    2.0 * std::f64::consts::PI * j_hz * t_ms / 1000.0
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum TimeUnit {
    #[serde(rename = "ms")]
    Milliseconds,
    #[serde(rename = "tJ")]
    Dimensionless,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grid {
    pub start: f64,
    pub end: f64,
    pub points: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TimeConfig {
    pub unit: TimeUnit,
    /// Sample times of the trajectory.
    pub grid: Grid,
    /// Saturated window used for time averages and thermal comparisons.
    pub window: Grid,
    /// Grid points up to this time enter the early-growth fit.
    pub fit_end: f64,
}

impl Default for TimeConfig {
    fn default() -> Self {
        Self {
            unit: TimeUnit::Milliseconds,
            grid: Grid {
                start: 0.0,
                end: 20.0,
                points: 81,
            },
            window: Grid {
                start: 10.0,
                end: 20.0,
                points: 21,
            },
            fit_end: 7.5,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PartitionChoice {
    Contiguous,
    AllSubsets,
}

impl From<PartitionChoice> for PartitionMode {
    fn from(p: PartitionChoice) -> Self {
        match p {
            PartitionChoice::Contiguous => PartitionMode::Contiguous,
            PartitionChoice::AllSubsets => PartitionMode::AllSubsets,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SubsystemConfig {
    /// Subsystem volumes to average over; all of `1..=L` when omitted.
    pub volumes: Option<Vec<usize>>,
    /// Explicit site sets for number statistics; a central site and the
    /// left half (up to three sites) when omitted.
    pub sets: Option<Vec<Vec<usize>>>,
    pub partition: PartitionChoice,
}

impl Default for SubsystemConfig {
    fn default() -> Self {
        Self {
            volumes: None,
            sets: None,
            partition: PartitionChoice::Contiguous,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KindName {
    Diagonal,
    SingleEigenstate,
    Microcanonical,
    Canonical,
    GrandCanonical,
}

impl From<KindName> for EnsembleKind {
    fn from(k: KindName) -> Self {
        match k {
            KindName::Diagonal => EnsembleKind::Diagonal,
            KindName::SingleEigenstate => EnsembleKind::SingleEigenstate,
            KindName::Microcanonical => EnsembleKind::Microcanonical,
            KindName::Canonical => EnsembleKind::Canonical,
            KindName::GrandCanonical => EnsembleKind::GrandCanonical,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EnsembleConfig {
    pub kinds: Vec<KindName>,
    /// Microcanonical half-width, in units of `J`.
    pub energy_window: f64,
    /// Energy to match; the quench energy when omitted.
    pub target_energy: Option<f64>,
    /// Mean atom number for the grand-canonical fit; `N - 0.5` when omitted.
    pub grand_canonical_particles: Option<f64>,
}

impl Default for EnsembleConfig {
    fn default() -> Self {
        Self {
            kinds: vec![
                KindName::Diagonal,
                KindName::SingleEigenstate,
                KindName::Microcanonical,
                KindName::Canonical,
                KindName::GrandCanonical,
            ],
            energy_window: quench_core::ensembles::DEFAULT_WINDOW,
            target_energy: None,
            grand_canonical_particles: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InterferenceConfig {
    pub shots: usize,
    /// Required whenever shots are sampled.
    pub seed: Option<u64>,
    /// Per-site parity flip probability.
    pub epsilon: f64,
    pub bootstrap: usize,
    /// Evolution time at which the two copies interfere, in the config's
    /// time unit; the end of the grid when omitted.
    pub time: Option<f64>,
}

impl Default for InterferenceConfig {
    fn default() -> Self {
        Self {
            shots: 10_000,
            seed: None,
            epsilon: 0.0,
            bootstrap: quench_core::interference::DEFAULT_BOOTSTRAP,
            time: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ReproduceConfig {
    /// Quench parameters compared side by side in the density and ensemble
    /// figures.
    pub j_over_u: Vec<f64>,
}

impl Default for ReproduceConfig {
    fn default() -> Self {
        Self {
            j_over_u: vec![0.64, 2.6],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub dir: String,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { dir: "out".into() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub sites: usize,
    pub particles: usize,
    pub j_over_u: f64,
    /// `J/(2π)` in Hz; needed when times are given in milliseconds.
    pub j_hz: Option<f64>,
    /// Initial Fock state; one atom per site when omitted.
    pub initial: Option<Vec<u8>>,
    pub time: TimeConfig,
    pub subsystems: SubsystemConfig,
    pub ensembles: EnsembleConfig,
    pub interference: InterferenceConfig,
    pub reproduce: ReproduceConfig,
    pub output: OutputConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            sites: 6,
            particles: 6,
            j_over_u: 0.64,
            j_hz: Some(66.0),
            initial: None,
            time: TimeConfig::default(),
            subsystems: SubsystemConfig::default(),
            ensembles: EnsembleConfig::default(),
            interference: InterferenceConfig::default(),
            reproduce: ReproduceConfig::default(),
            output: OutputConfig::default(),
        }
    }
}

fn invalid(location: &str, message: impl Into<String>) -> RunError {
    RunError::Config {
        location: location.into(),
        message: message.into(),
    }
}

fn check_grid(location: &str, g: &Grid) -> Result<(), RunError> {
    if g.points == 0 {
        return Err(invalid(&format!("{location}.points"), "must be positive"));
    }
    if !(g.start.is_finite() && g.end.is_finite()) || g.end < g.start {
        return Err(invalid(
            location,
            format!("need finite start <= end, got {} and {}", g.start, g.end),
        ));
    }
    if g.points == 1 && g.end != g.start {
        return Err(invalid(
            &format!("{location}.points"),
            "a single point needs start == end",
        ));
    }
    Ok(())
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, RunError> {
        toml::from_str(text).map_err(|e| {
            let location = match e.span() {
                Some(span) => {
                    let line = text[..span.start].matches('\n').count() + 1;
                    let column = span.start - text[..span.start].rfind('\n').map_or(0, |i| i + 1) + 1;
                    format!("line {line}, column {column}")
                }
                None => "config".into(),
            };
            invalid(&location, e.message())
        })
    }

    pub fn load(path: &Path) -> Result<Self, RunError> {
        let text = std::fs::read_to_string(path).map_err(|e| RunError::io(path, e))?;
        Self::from_toml(&text)
    }

    /// Checks every field and fills defaults that depend on other fields.
    pub fn resolve(mut self) -> Result<Self, RunError> {
        if self.sites == 0 {
            return Err(invalid("sites", "must be positive"));
        }
        if !(self.j_over_u.is_finite() && self.j_over_u > 0.0) {
            return Err(invalid("j_over_u", "must be positive and finite"));
        }
        match (self.time.unit, self.j_hz) {
            (TimeUnit::Milliseconds, None) => {
                return Err(invalid("j_hz", "required when time.unit = \"ms\""));
            }
            (_, Some(j)) if !(j.is_finite() && j > 0.0) => {
                return Err(invalid("j_hz", "must be positive and finite"));
            }
            _ => {}
        }
        check_grid("time.grid", &self.time.grid)?;
        check_grid("time.window", &self.time.window)?;
        if !self.time.fit_end.is_finite() {
            return Err(invalid("time.fit_end", "must be finite"));
        }

        let initial = self.initial.take().unwrap_or_else(|| vec![1; self.sites]);
        if initial.len() != self.sites {
            return Err(invalid(
                "initial",
                format!("has {} entries for {} sites", initial.len(), self.sites),
            ));
        }
        let total: usize = initial.iter().map(|&n| n as usize).sum();
        if total != self.particles {
            return Err(invalid(
                "initial",
                format!("holds {total} atoms, expected {}", self.particles),
            ));
        }
        self.initial = Some(initial);

        let volumes = self
            .subsystems
            .volumes
            .take()
            .unwrap_or_else(|| (1..=self.sites).collect());
        if volumes.is_empty() {
            return Err(invalid("subsystems.volumes", "must not be empty"));
        }
        if let Some(v) = volumes.iter().find(|&&v| v == 0 || v > self.sites) {
            return Err(invalid(
                "subsystems.volumes",
                format!("volume {v} outside 1..={}", self.sites),
            ));
        }
        self.subsystems.volumes = Some(volumes);

        let sets = self.subsystems.sets.take().unwrap_or_else(|| {
            let central = (self.sites - 1) / 2;
            vec![vec![central], (0..self.sites.min(3)).collect()]
        });
        for (i, set) in sets.iter().enumerate() {
            let loc = format!("subsystems.sets[{i}]");
            if set.is_empty() {
                return Err(invalid(&loc, "must not be empty"));
            }
            if let Some(s) = set.iter().find(|&&s| s >= self.sites) {
                return Err(invalid(&loc, format!("site {s} outside 0..{}", self.sites)));
            }
            if set.windows(2).any(|w| w[0] >= w[1]) {
                return Err(invalid(&loc, "sites must be strictly increasing"));
            }
        }
        self.subsystems.sets = Some(sets);

        let ens = &mut self.ensembles;
        if ens.kinds.is_empty() {
            return Err(invalid("ensembles.kinds", "must not be empty"));
        }
        if !(ens.energy_window.is_finite() && ens.energy_window > 0.0) {
            return Err(invalid("ensembles.energy_window", "must be positive"));
        }
        if ens.target_energy.is_some_and(|e| !e.is_finite()) {
            return Err(invalid("ensembles.target_energy", "must be finite"));
        }
        let n_gc = ens.grand_canonical_particles.unwrap_or(self.particles as f64 - 0.5);
        if !(n_gc.is_finite() && n_gc > 0.0 && n_gc < self.particles as f64) {
            return Err(invalid(
                "ensembles.grand_canonical_particles",
                format!("must lie strictly between 0 and {}", self.particles),
            ));
        }
        ens.grand_canonical_particles = Some(n_gc);

        let int = &mut self.interference;
        if int.shots < 2 {
            return Err(invalid("interference.shots", "need at least 2 shots"));
        }
        if int.bootstrap == 0 {
            return Err(invalid("interference.bootstrap", "must be positive"));
        }
        if !(0.0..=1.0).contains(&int.epsilon) {
            return Err(invalid("interference.epsilon", "must lie in [0, 1]"));
        }
        let t = int.time.unwrap_or(self.time.grid.end);
        if !t.is_finite() {
            return Err(invalid("interference.time", "must be finite"));
        }
        int.time = Some(t);

        if self.reproduce.j_over_u.is_empty() {
            return Err(invalid("reproduce.j_over_u", "must not be empty"));
        }
        if self.reproduce.j_over_u.iter().any(|r| !(r.is_finite() && *r > 0.0)) {
            return Err(invalid("reproduce.j_over_u", "entries must be positive and finite"));
        }
        if self.output.dir.is_empty() {
            return Err(invalid("output.dir", "must not be empty"));
        }
        Ok(self)
    }

    /// A time in the configured unit as `tJ`.
    pub fn to_tj(&self, t: f64) -> f64 {
        match self.time.unit {
            TimeUnit::Dimensionless => t,
            TimeUnit::Milliseconds => convert_time(t, self.j_hz.unwrap_or(0.0)),
        }
    }

    fn points(&self, g: &Grid) -> Vec<(f64, f64)> {
        quench_core::observables::uniform_grid(g.start, g.end, g.points)
            .into_iter()
            .map(|t| (t, self.to_tj(t)))
            .collect()
    }

    /// Trajectory times as `(configured unit, tJ)` pairs.
    pub fn grid(&self) -> Vec<(f64, f64)> {
        self.points(&self.time.grid)
    }

    pub fn window(&self) -> Vec<(f64, f64)> {
        self.points(&self.time.window)
    }

    pub fn volumes(&self) -> &[usize] {
        self.subsystems.volumes.as_deref().unwrap_or(&[])
    }

    pub fn sets(&self) -> &[Vec<usize>] {
        self.subsystems.sets.as_deref().unwrap_or(&[])
    }

    pub fn partition(&self) -> PartitionMode {
        self.subsystems.partition.into()
    }

    /// The sampling seed, which must be set before any shots are drawn.
    pub fn seed(&self) -> Result<u64, RunError> {
        self.interference
            .seed
            .ok_or_else(|| invalid("interference.seed", "required for sampling (set it or pass --seed)"))
    }
}

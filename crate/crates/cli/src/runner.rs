//! Orchestration: one function per subcommand, each producing tables and a
//! few scalar results that end up in the manifest.

use std::path::Path;

use quench_core::ensembles::{
    canonical, diagonal_ensemble, grand_canonical, match_canonical_temperature, match_grand_canonical, microcanonical,
    single_eigenstate,
};
use quench_core::entanglement::{
    mutual_information_average, partition_average, partition_family, piecewise_linear_fit, purity, reduce_on, renyi2,
    PiecewiseFit,
};
use quench_core::hamiltonian::build_interaction;
use quench_core::interference::{
    apply_beamsplitter, apply_parity_noise, embed_product, entropy_from_shots, exact_parity, noise_offset,
    purity_estimator, ShotSampler,
};
use quench_core::observables::{fidelity, number_distribution, site_density, trace_distance, window_stats, StateView};
use quench_core::spectral::{evolve, ground_state, trajectory};
use quench_core::{build_hamiltonian, EnsembleState, FockState, HubbardParams, QuenchState, Sector};
use rayon::prelude::*;
use serde_json::{json, Map, Value};

use crate::config::{ExperimentConfig, KindName};
use crate::error::RunError;
use crate::figures;
use crate::output::{blob_hash, label, Cell, Manifest, Table, Writer};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Figure {
    Fig2b,
    Fig3,
    Fig4,
    Fig5,
    Fig6,
}

impl Figure {
    pub fn name(self) -> &'static str {
        match self {
            Figure::Fig2b => "fig2b",
            Figure::Fig3 => "fig3",
            Figure::Fig4 => "fig4",
            Figure::Fig5 => "fig5",
            Figure::Fig6 => "fig6",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    Spectrum,
    Quench,
    Entropy,
    Ensembles,
    Observables,
    Interfere,
    Reproduce(Figure),
}

impl Command {
    pub fn name(self) -> String {
        match self {
            Command::Spectrum => "spectrum".into(),
            Command::Quench => "quench".into(),
            Command::Entropy => "entropy".into(),
            Command::Ensembles => "ensembles".into(),
            Command::Observables => "observables".into(),
            Command::Interfere => "interfere".into(),
            Command::Reproduce(f) => format!("reproduce {}", f.name()),
        }
    }
}

/// Where the config came from: a file's label and raw bytes, or the
/// built-in defaults.
#[derive(Clone, Debug)]
pub struct ConfigSource {
    pub label: String,
    pub bytes: Option<Vec<u8>>,
}

impl ConfigSource {
    pub fn defaults() -> Self {
        Self {
            label: "defaults".into(),
            bytes: None,
        }
    }
}

/// Tables and scalars produced by one command.
#[derive(Debug, Default)]
pub struct Report {
    pub tables: Vec<Table>,
    pub results: Map<String, Value>,
    pub seeds: Map<String, Value>,
}

impl Report {
    pub fn result(&mut self, key: &str, value: impl Into<Value>) {
        self.results.insert(key.into(), value.into());
    }
}

/// A fixed-parameter quench from the configured Fock state.
pub struct Quench {
    pub params: HubbardParams,
    pub sector: Sector,
    pub psi0: QuenchState,
}

impl Quench {
    pub fn build(cfg: &ExperimentConfig, j_over_u: f64) -> Result<Self, RunError> {
        let params = HubbardParams::from_ratio(cfg.sites, cfg.particles, j_over_u)?;
        let sector = Sector::build(&params)?;
        let initial = FockState::new(cfg.initial.clone().unwrap_or_else(|| vec![1; cfg.sites]));
        let psi0 = QuenchState::fock(sector.basis(), sector.spectrum(), &initial)?;
        Ok(Self { params, sector, psi0 })
    }

    pub fn energy(&self) -> f64 {
        self.psi0.energy(self.sector.spectrum())
    }

    pub fn states(&self, times: &[(f64, f64)]) -> Result<Vec<QuenchState>, RunError> {
        let tj: Vec<f64> = times.iter().map(|t| t.1).collect();
        Ok(trajectory(self.sector.spectrum(), &self.psi0, &tj)?)
    }

    pub fn at(&self, tj: f64) -> Result<QuenchState, RunError> {
        Ok(evolve(self.sector.spectrum(), &self.psi0, tj)?)
    }

    pub fn view<'a>(&'a self, state: &QuenchState) -> Result<StateView<'a>, RunError> {
        Ok(StateView::pure(self.sector.basis(), state)?)
    }

    /// Every sector from `0` to `N` atoms, reusing the already solved top one.
    pub fn all_sectors(&self) -> Result<Vec<Sector>, RunError> {
        let mut out = (0..self.params.particles)
            .map(|n| {
                Sector::build(&HubbardParams {
                    particles: n,
                    ..self.params
                })
            })
            .collect::<quench_core::Result<Vec<_>>>()?;
        out.push(self.sector.clone());
        Ok(out)
    }
}

/// The requested ensembles, all matched to `target`, and the sectors they
/// live on (every sector when a grand-canonical ensemble is included).
pub struct Ensembles {
    pub states: Vec<EnsembleState>,
    pub sectors: Vec<Sector>,
}

pub fn build_ensembles(q: &Quench, cfg: &ExperimentConfig, target: f64) -> Result<Ensembles, RunError> {
    let kinds = &cfg.ensembles.kinds;
    let sectors = if kinds.contains(&KindName::GrandCanonical) {
        q.all_sectors()?
    } else {
        vec![q.sector.clone()]
    };
    let s = &q.sector;
    let mut states = Vec::new();
    for &k in kinds {
        let e = match k {
            KindName::Diagonal => diagonal_ensemble(s, q.psi0.overlaps())?,
            KindName::SingleEigenstate => single_eigenstate(s, target)?,
            KindName::Microcanonical => microcanonical(s, target, cfg.ensembles.energy_window)?,
            KindName::Canonical => canonical(s, match_canonical_temperature(s, target)?)?,
            KindName::GrandCanonical => {
                let n = cfg
                    .ensembles
                    .grand_canonical_particles
                    .unwrap_or(q.params.particles as f64 - 0.5);
                let (t, mu) = match_grand_canonical(&sectors, target, n)?;
                grand_canonical(&sectors, t, mu)?
            }
        };
        states.push(e);
    }
    Ok(Ensembles { states, sectors })
}

pub fn matched_canonical(q: &Quench, target: f64) -> Result<EnsembleState, RunError> {
    Ok(canonical(&q.sector, match_canonical_temperature(&q.sector, target)?)?)
}

fn opt(v: Option<f64>) -> Cell {
    v.map_or(Cell::Text(String::new()), Cell::Float)
}

pub(crate) fn time_cells(t: (f64, f64)) -> [Cell; 2] {
    [t.0.into(), t.1.into()]
}

/// Fits the early rise of `values` over the grid points with `tJ <= end`.
pub(crate) fn early_fit(times: &[(f64, f64)], values: &[f64], end: f64) -> Option<PiecewiseFit> {
    let k = times.iter().take_while(|t| t.1 <= end + 1e-12).count();
    let tj: Vec<f64> = times[..k].iter().map(|t| t.1).collect();
    piecewise_linear_fit(&tj, &values[..k]).ok()
}

fn spectrum(cfg: &mut ExperimentConfig, rep: &mut Report) -> Result<(), RunError> {
    let q = Quench::build(cfg, cfg.j_over_u)?;
    let mut t = Table::new("spectrum", &["index", "energy", "weight"]);
    for (k, (e, c)) in q.sector.energies().iter().zip(q.psi0.overlaps()).enumerate() {
        t.push(vec![k.into(), (*e).into(), c.norm_sqr().into()]);
    }
    let (_, ground) = ground_state(q.sector.spectrum())?;
    let target = *cfg.ensembles.target_energy.get_or_insert(q.energy());
    rep.result("dimension", q.sector.basis().len());
    rep.result("ground_energy", ground.energy);
    rep.result("gap", ground.gap);
    rep.result("ground_degenerate", ground.degenerate);
    rep.result("quench_energy", q.energy());
    rep.result("canonical_temperature", match_canonical_temperature(&q.sector, target)?);
    rep.tables.push(t);
    Ok(())
}

fn quench(cfg: &ExperimentConfig, rep: &mut Report) -> Result<(), RunError> {
    let q = Quench::build(cfg, cfg.j_over_u)?;
    let h = build_hamiltonian(&q.params, q.sector.basis())?;
    let diag = build_interaction(q.sector.basis(), q.params.interaction);
    let times = cfg.grid();
    let mut header: Vec<String> = ["t", "tJ", "norm", "energy", "interaction_energy"]
        .map(String::from)
        .to_vec();
    header.extend((0..cfg.sites).map(|s| format!("n_{s}")));
    let mut t = Table::with_header("quench", header);
    for (time, st) in times.iter().zip(q.states(&times)?) {
        let probs = st.probabilities();
        let mut row: Vec<Cell> = time_cells(*time).into();
        row.push(st.norm().into());
        row.push(h.expectation(st.amplitudes())?.into());
        row.push(probs.iter().zip(&diag).map(|(p, d)| p * d).sum::<f64>().into());
        row.extend(site_density(&q.view(&st)?).into_iter().map(Cell::from));
        t.push(row);
    }
    rep.result("quench_energy", q.energy());
    rep.tables.push(t);
    Ok(())
}

fn entropy(cfg: &ExperimentConfig, rep: &mut Report) -> Result<(), RunError> {
    let q = Quench::build(cfg, cfg.j_over_u)?;
    let times = cfg.grid();
    let states = q.states(&times)?;
    let basis = q.sector.basis();
    let mode = cfg.partition();
    let volumes = cfg.volumes();

    type Row = (Vec<[f64; 3]>, Vec<Option<[f64; 3]>>, Vec<f64>);
    let rows: Vec<Row> = states
        .par_iter()
        .map(|st| -> Result<Row, RunError> {
            let amps = st.amplitudes();
            let mut s = Vec::new();
            let mut mi = Vec::new();
            for &v in volumes {
                let f = partition_average(basis, amps, v, mode)?;
                s.push([f.mean, f.spread, f.count as f64]);
                mi.push(if v >= 2 {
                    let f = mutual_information_average(basis, amps, v, mode)?;
                    Some([f.mean, f.spread, f.count as f64])
                } else {
                    None
                });
            }
            let sets = cfg
                .sets()
                .iter()
                .map(|a| Ok(renyi2(&reduce_on(basis, amps, a)?)?))
                .collect::<Result<Vec<_>, RunError>>()?;
            Ok((s, mi, sets))
        })
        .collect::<Result<_, _>>()?;

    let cols = ["t", "tJ", "volume", "mean", "spread", "count"];
    let mut ent = Table::new("entropy", &cols);
    let mut mut_info = Table::new("mutual_information", &cols);
    let mut sets = Table::new("entropy_sets", &["t", "tJ", "subsystem", "entropy"]);
    for (time, (s, mi, se)) in times.iter().zip(&rows) {
        for (k, &v) in volumes.iter().enumerate() {
            let [mean, spread, count] = s[k];
            let mut row: Vec<Cell> = time_cells(*time).into();
            row.extend([v.into(), mean.into(), spread.into(), (count as usize).into()]);
            ent.push(row);
            if let Some([mean, spread, count]) = mi[k] {
                let mut row: Vec<Cell> = time_cells(*time).into();
                row.extend([v.into(), mean.into(), spread.into(), (count as usize).into()]);
                mut_info.push(row);
            }
        }
        for (a, e) in cfg.sets().iter().zip(se) {
            let mut row: Vec<Cell> = time_cells(*time).into();
            row.extend([label(a).into(), (*e).into()]);
            sets.push(row);
        }
    }

    let mut fits = Table::new("entropy_fit", &["volume", "slope", "breakpoint", "plateau", "residual"]);
    let end = cfg.to_tj(cfg.time.fit_end);
    for (k, &v) in volumes.iter().enumerate() {
        let series: Vec<f64> = rows.iter().map(|r| r.0[k][0]).collect();
        if let Some(f) = early_fit(&times, &series, end) {
            fits.push(vec![
                v.into(),
                f.slope.into(),
                f.breakpoint.into(),
                f.plateau.into(),
                f.residual.into(),
            ]);
        }
    }
    rep.result("fit_end_tj", end);
    rep.tables.extend([ent, mut_info, sets]);
    if !fits.is_empty() {
        rep.tables.push(fits);
    }
    Ok(())
}

fn ensembles(cfg: &mut ExperimentConfig, rep: &mut Report) -> Result<(), RunError> {
    let q = Quench::build(cfg, cfg.j_over_u)?;
    let target = *cfg.ensembles.target_energy.get_or_insert(q.energy());
    let ens = build_ensembles(&q, cfg, target)?;
    let mut summary = Table::new(
        "ensembles",
        &[
            "kind",
            "temperature",
            "chemical_potential",
            "window",
            "eigenstate",
            "participation_ratio",
            "mean_energy",
            "mean_particles",
        ],
    );
    let mut dists = Table::new("ensemble_distributions", &["kind", "subsystem", "n", "probability"]);
    let mut ents = Table::new("ensemble_entropy", &["kind", "volume", "mean", "spread", "count"]);
    for e in &ens.states {
        let kind = e.kind().as_str();
        summary.push(vec![
            kind.into(),
            opt(e.temperature()),
            opt(e.chemical_potential()),
            opt(e.window()),
            e.eigenstate().map_or(Cell::Text(String::new()), Cell::from),
            e.participation_ratio().into(),
            e.mean_energy(&ens.sectors)?.into(),
            e.mean_particles().into(),
        ]);
        let view = StateView::ensemble(e, &ens.sectors)?;
        for a in cfg.sets() {
            for (n, p) in number_distribution(&view, a)?.probabilities.iter().enumerate() {
                dists.push(vec![kind.into(), label(a).into(), n.into(), (*p).into()]);
            }
        }
        for &v in cfg.volumes() {
            let f = quench_core::ensembles::thermal_renyi(e, &ens.sectors, v, cfg.partition())?;
            ents.push(vec![
                kind.into(),
                v.into(),
                f.mean.into(),
                f.spread.into(),
                f.count.into(),
            ]);
        }
    }
    rep.result("target_energy", target);
    rep.tables.extend([summary, dists, ents]);
    Ok(())
}

fn observables(cfg: &mut ExperimentConfig, rep: &mut Report) -> Result<(), RunError> {
    let q = Quench::build(cfg, cfg.j_over_u)?;
    let target = *cfg.ensembles.target_energy.get_or_insert(q.energy());
    let can = matched_canonical(&q, target)?;
    let one = std::slice::from_ref(&q.sector);
    let thermal = (0..cfg.sites)
        .map(|s| Ok(quench_core::ensembles::ensemble_rdm(&can, one, &[s])?))
        .collect::<Result<Vec<_>, RunError>>()?;
    let times = cfg.grid();
    let mut density = Table::new("density", &["t", "tJ", "site", "density"]);
    let mut dists = Table::new("distributions", &["t", "tJ", "subsystem", "n", "probability"]);
    let mut metrics = Table::new("local_metrics", &["t", "tJ", "site", "trace_distance", "fidelity"]);
    for (time, st) in times.iter().zip(q.states(&times)?) {
        let view = q.view(&st)?;
        for (s, d) in site_density(&view).into_iter().enumerate() {
            let mut row: Vec<Cell> = time_cells(*time).into();
            row.extend([s.into(), d.into()]);
            density.push(row);
        }
        for a in cfg.sets() {
            for (n, p) in number_distribution(&view, a)?.probabilities.into_iter().enumerate() {
                let mut row: Vec<Cell> = time_cells(*time).into();
                row.extend([label(a).into(), n.into(), p.into()]);
                dists.push(row);
            }
        }
        for (s, th) in thermal.iter().enumerate() {
            let rho = reduce_on(q.sector.basis(), st.amplitudes(), &[s])?;
            let mut row: Vec<Cell> = time_cells(*time).into();
            row.extend([s.into(), trace_distance(&rho, th)?.into(), fidelity(&rho, th)?.into()]);
            metrics.push(row);
        }
    }

    // saturated-window averages with their temporal spread
    let window = q.states(&cfg.window())?;
    let mut win = Table::new("window", &["subsystem", "n", "mean", "std"]);
    for a in cfg.sets() {
        let per_time = window
            .iter()
            .map(|st| Ok(number_distribution(&q.view(st)?, a)?.probabilities))
            .collect::<Result<Vec<_>, RunError>>()?;
        for n in 0..per_time[0].len() {
            let f = window_stats(&per_time.iter().map(|p| p[n]).collect::<Vec<_>>());
            win.push(vec![label(a).into(), n.into(), f.mean.into(), f.spread.into()]);
        }
    }
    rep.result("canonical_temperature", can.temperature().unwrap_or(f64::NAN));
    rep.result("target_energy", target);
    rep.tables.extend([density, dists, metrics, win]);
    Ok(())
}

/// Stream `k` of the base seed, used for the noise and bootstrap generators.
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    seed ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

fn interfere(cfg: &ExperimentConfig, rep: &mut Report) -> Result<(), RunError> {
    let seed = cfg.seed()?;
    let q = Quench::build(cfg, cfg.j_over_u)?;
    let time = cfg.interference.time.unwrap_or(cfg.time.grid.end);
    let tj = cfg.to_tj(time);
    let psi = q.at(tj)?;
    let mut two = embed_product(q.sector.basis(), psi.amplitudes())?;
    apply_beamsplitter(&mut two);
    let mut shots = ShotSampler::new(&two).sample(cfg.interference.shots, seed);
    let eps = cfg.interference.epsilon;
    let noise_seed = derive_seed(seed, 1);
    if eps > 0.0 {
        shots = apply_parity_noise(&shots, eps, noise_seed)?;
    }

    let l = cfg.sites;
    let mut header = vec!["shot_id".to_string()];
    header.extend((1..=2 * l).map(|k| format!("n_{k}")));
    if eps > 0.0 {
        header.push("flips".into());
    }
    let mut shot_table = Table::with_header("shots", header);
    for (i, s) in shots.iter().enumerate() {
        let mut row: Vec<Cell> = vec![i.into()];
        row.extend(s.occupations.iter().map(|&n| Cell::from(n as usize)));
        if eps > 0.0 {
            row.push(Cell::Int(s.flips as i64));
        }
        shot_table.push(row);
    }

    let mut subsystems: Vec<Vec<usize>> = Vec::new();
    for &v in cfg.volumes() {
        subsystems.extend(partition_family(l, v, cfg.partition()));
    }
    for a in cfg.sets() {
        if !subsystems.contains(a) {
            subsystems.push(a.clone());
        }
    }
    let mut table = Table::new(
        "purity",
        &[
            "subsystem",
            "volume",
            "exact_purity",
            "exact_parity",
            "estimate",
            "std_error",
            "exact_entropy",
            "entropy",
            "lower",
            "upper",
        ],
    );
    let mut boot_seeds = Vec::new();
    for (k, a) in subsystems.iter().enumerate() {
        let p = purity(&reduce_on(q.sector.basis(), psi.amplitudes(), a)?);
        let (est, se) = purity_estimator(&shots, a)?;
        let bs = derive_seed(seed, 2 + k as u64);
        boot_seeds.push(bs);
        let e = entropy_from_shots(&shots, a, cfg.interference.bootstrap, bs)?;
        table.push(vec![
            label(a).into(),
            a.len().into(),
            p.into(),
            exact_parity(&two, a)?.into(),
            est.into(),
            se.into(),
            (-p.ln()).into(),
            e.entropy.into(),
            e.lower.into(),
            e.upper.unwrap_or(f64::INFINITY).into(),
        ]);
    }
    rep.seeds.insert("sampling".into(), json!(seed));
    if eps > 0.0 {
        rep.seeds.insert("noise".into(), json!(noise_seed));
    }
    rep.seeds.insert("bootstrap".into(), json!(boot_seeds));
    rep.seeds.insert(
        "derivation".into(),
        json!("seed ^ (stream * 0x9E3779B97F4A7C15); noise stream 1, bootstrap streams 2.."),
    );
    rep.result("time_tj", tj);
    rep.result("two_copy_dimension", two.amplitudes().len());
    rep.result("noise_offset", noise_offset(l, eps));
    rep.tables.extend([shot_table, table]);
    Ok(())
}

/// Runs `command` and returns its report without touching the filesystem.
pub fn compute(cfg: &mut ExperimentConfig, command: Command) -> Result<Report, RunError> {
    let mut rep = Report::default();
    match command {
        Command::Spectrum => spectrum(cfg, &mut rep)?,
        Command::Quench => quench(cfg, &mut rep)?,
        Command::Entropy => entropy(cfg, &mut rep)?,
        Command::Ensembles => ensembles(cfg, &mut rep)?,
        Command::Observables => observables(cfg, &mut rep)?,
        Command::Interfere => interfere(cfg, &mut rep)?,
        Command::Reproduce(f) => figures::reproduce(f, cfg, &mut rep)?,
    }
    Ok(rep)
}

fn tolerances() -> Value {
    use quench_core::{ensembles as e, interference as i, linalg, spectral};
    json!({
        "temperature_rtol": e::TEMPERATURE_RTOL,
        "grand_canonical_rtol": e::GRAND_CANONICAL_RTOL,
        "root_max_iterations": e::MAX_ITERATIONS,
        "degeneracy_gap": spectral::DEGENERACY_GAP,
        "dense_eigensolver_cap": spectral::DEFAULT_DENSE_CAP,
        "ql_max_iterations": linalg::DEFAULT_QL_ITERATIONS,
        "purity_floor": i::PURITY_FLOOR,
        "bootstrap_confidence": i::CONFIDENCE,
        "shot_chunk": i::SHOT_CHUNK,
    })
}

/// Resolves `config`, runs `command`, and writes every table plus
/// `manifest.json` into the configured output directory.
pub fn run_experiment(config: ExperimentConfig, command: Command, source: &ConfigSource) -> Result<Manifest, RunError> {
    let mut cfg = config.resolve()?;
    let rep = compute(&mut cfg, command)?;
    let writer = Writer::create(Path::new(&cfg.output.dir))?;
    let outputs = rep
        .tables
        .iter()
        .map(|t| writer.write_table(t))
        .collect::<Result<Vec<_>, _>>()?;
    let mut seeds = rep.seeds;
    if let Some(s) = cfg.interference.seed {
        seeds.entry("base").or_insert(json!(s));
    }
    let config_json = serde_json::to_value(&cfg).expect("config serializes");
    let input_hash = match &source.bytes {
        Some(b) => blob_hash(b),
        None => blob_hash(toml::to_string(&cfg).expect("config serializes").as_bytes()),
    };
    let manifest = Manifest {
        program: "quench".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        command: command.name(),
        config_source: source.label.clone(),
        input_hash,
        config: config_json,
        seeds: Value::Object(seeds),
        tolerances: tolerances(),
        threads: rayon::current_num_threads(),
        results: Value::Object(rep.results),
        outputs,
    };
    writer.write_manifest(&manifest)?;
    Ok(manifest)
}

//! Figure datasets, one function per panel group.

use quench_core::ensembles::ensemble_rdm;
use quench_core::entanglement::{mutual_information_average, partition_average, purity, reduce_on};
use quench_core::observables::{
    fidelity, interaction_energy, number_distribution, site_density, trace_distance, window_stats, StateView,
};
use quench_core::spectral::ground_state;
use rayon::prelude::*;

use crate::config::ExperimentConfig;
use crate::error::RunError;
use crate::output::{label, Cell, Table};
use crate::runner::{build_ensembles, early_fit, matched_canonical, time_cells, Figure, Quench, Report};

pub fn reproduce(figure: Figure, cfg: &mut ExperimentConfig, rep: &mut Report) -> Result<(), RunError> {
    match figure {
        Figure::Fig2b => fig2b(cfg, rep),
        Figure::Fig3 => fig3(cfg, rep),
        Figure::Fig4 => fig4(cfg, rep),
        Figure::Fig5 => fig5(cfg, rep),
        Figure::Fig6 => fig6(cfg, rep),
    }
}

/// Site-resolved number statistics and the global purity, against the
/// canonical ensemble's global purity.
fn fig2b(cfg: &ExperimentConfig, rep: &mut Report) -> Result<(), RunError> {
    let q = Quench::build(cfg, cfg.j_over_u)?;
    let all: Vec<usize> = (0..cfg.sites).collect();
    let can = matched_canonical(&q, q.energy())?;
    let can_purity = purity(&ensemble_rdm(&can, std::slice::from_ref(&q.sector), &all)?);
    let times = cfg.grid();
    let mut stats = Table::new("fig2b_statistics", &["t", "tJ", "site", "n", "probability"]);
    let mut pur = Table::new("fig2b_purity", &["t", "tJ", "global_purity", "canonical_global_purity"]);
    for (time, st) in times.iter().zip(q.states(&times)?) {
        let view = q.view(&st)?;
        for s in 0..cfg.sites {
            for (n, p) in number_distribution(&view, &[s])?.probabilities.into_iter().enumerate() {
                let mut row: Vec<Cell> = time_cells(*time).into();
                row.extend([s.into(), n.into(), p.into()]);
                stats.push(row);
            }
        }
        let mut row: Vec<Cell> = time_cells(*time).into();
        row.extend([
            purity(&reduce_on(q.sector.basis(), st.amplitudes(), &all)?).into(),
            can_purity.into(),
        ]);
        pur.push(row);
    }
    rep.result("canonical_temperature", can.temperature().unwrap_or(f64::NAN));
    rep.result("canonical_global_purity", can_purity);
    rep.tables.extend([stats, pur]);
    Ok(())
}

/// Entropy growth for the smallest subsystems and the full chain, with the
/// early slopes from a ramp-then-plateau fit.
fn fig3(cfg: &ExperimentConfig, rep: &mut Report) -> Result<(), RunError> {
    let q = Quench::build(cfg, cfg.j_over_u)?;
    let l = cfg.sites;
    let mut volumes: Vec<usize> = (1..=l.saturating_sub(1).min(3)).collect();
    volumes.push(l);
    let times = cfg.grid();
    let states = q.states(&times)?;
    let series: Vec<Vec<f64>> = states
        .par_iter()
        .map(|st| {
            volumes
                .iter()
                .map(|&v| Ok(partition_average(q.sector.basis(), st.amplitudes(), v, cfg.partition())?.mean))
                .collect::<Result<Vec<_>, RunError>>()
        })
        .collect::<Result<_, _>>()?;
    let mut header: Vec<String> = vec!["t".into(), "tJ".into()];
    header.extend(
        volumes
            .iter()
            .map(|&v| if v == l { "S_full".into() } else { format!("S_{v}") }),
    );
    let mut ent = Table::with_header("fig3_entropy", header);
    for (time, s) in times.iter().zip(&series) {
        let mut row: Vec<Cell> = time_cells(*time).into();
        row.extend(s.iter().map(|&x| Cell::from(x)));
        ent.push(row);
    }
    let end = cfg.to_tj(cfg.time.fit_end);
    let mut slopes = Table::new("fig3_slopes", &["volume", "slope", "breakpoint", "plateau", "residual"]);
    let mut fitted = Vec::new();
    for (k, &v) in volumes.iter().enumerate().filter(|(_, &v)| v < l) {
        let y: Vec<f64> = series.iter().map(|s| s[k]).collect();
        let f = early_fit(&times, &y, end).ok_or_else(|| RunError::Config {
            location: "time.fit_end".into(),
            message: "the early-growth fit needs at least 4 grid points up to fit_end".into(),
        })?;
        fitted.push(f.slope);
        slopes.push(vec![
            v.into(),
            f.slope.into(),
            f.breakpoint.into(),
            f.plateau.into(),
            f.residual.into(),
        ]);
    }
    if !fitted.is_empty() {
        let mean = fitted.iter().sum::<f64>() / fitted.len() as f64;
        let dev = fitted.iter().map(|s| (s - mean).abs() / mean).fold(0.0, f64::max);
        rep.result("mean_slope", mean);
        rep.result("max_relative_slope_deviation", dev);
    }
    rep.result("fit_end_tj", end);
    rep.tables.extend([ent, slopes]);
    Ok(())
}

/// Volume law at the last grid time against the ground state and the
/// canonical ensemble, and the mutual information between halves of `A∪B`.
fn fig4(cfg: &ExperimentConfig, rep: &mut Report) -> Result<(), RunError> {
    let q = Quench::build(cfg, cfg.j_over_u)?;
    let tj = cfg.to_tj(cfg.time.grid.end);
    let late = q.at(tj)?;
    let (g, _) = ground_state(q.sector.spectrum())?;
    let can = matched_canonical(&q, q.energy())?;
    let one = std::slice::from_ref(&q.sector);
    let basis = q.sector.basis();
    let mode = cfg.partition();
    let mut vol = Table::new(
        "fig4_volume",
        &["volume", "quench", "quench_spread", "ground", "thermal"],
    );
    let mut mi = Table::new("fig4_mutual", &["volume", "quench", "ground"]);
    for v in 1..=cfg.sites {
        let sq = partition_average(basis, late.amplitudes(), v, mode)?;
        let sg = partition_average(basis, g.amplitudes(), v, mode)?;
        let th = quench_core::ensembles::thermal_renyi(&can, one, v, mode)?;
        vol.push(vec![
            v.into(),
            sq.mean.into(),
            sq.spread.into(),
            sg.mean.into(),
            th.mean.into(),
        ]);
        if v >= 2 {
            let iq = mutual_information_average(basis, late.amplitudes(), v, mode)?;
            let ig = mutual_information_average(basis, g.amplitudes(), v, mode)?;
            mi.push(vec![v.into(), iq.mean.into(), ig.mean.into()]);
        }
    }
    rep.result("time_tj", tj);
    rep.result("canonical_temperature", can.temperature().unwrap_or(f64::NAN));
    rep.tables.extend([vol, mi]);
    Ok(())
}

/// Saturated density profiles against the ground state, and single-site
/// trace distance and fidelity to the canonical ensemble over time.
fn fig5(cfg: &ExperimentConfig, rep: &mut Report) -> Result<(), RunError> {
    let mut density = Table::new(
        "fig5_density",
        &["j_over_u", "site", "quench_mean", "quench_std", "ground"],
    );
    let mut metrics = Table::new(
        "fig5_metrics",
        &["j_over_u", "t", "tJ", "site", "trace_distance", "fidelity"],
    );
    let times = cfg.grid();
    for &ratio in &cfg.reproduce.j_over_u {
        let q = Quench::build(cfg, ratio)?;
        let (g, _) = ground_state(q.sector.spectrum())?;
        let ground = site_density(&q.view(&g)?);
        let per_time = q
            .states(&cfg.window())?
            .iter()
            .map(|st| Ok(site_density(&q.view(st)?)))
            .collect::<Result<Vec<_>, RunError>>()?;
        for s in 0..cfg.sites {
            let f = window_stats(&per_time.iter().map(|d| d[s]).collect::<Vec<_>>());
            density.push(vec![
                ratio.into(),
                s.into(),
                f.mean.into(),
                f.spread.into(),
                ground[s].into(),
            ]);
        }
        let can = matched_canonical(&q, q.energy())?;
        let one = std::slice::from_ref(&q.sector);
        let thermal = (0..cfg.sites)
            .map(|s| Ok(ensemble_rdm(&can, one, &[s])?))
            .collect::<Result<Vec<_>, RunError>>()?;
        for (time, st) in times.iter().zip(q.states(&times)?) {
            for (s, th) in thermal.iter().enumerate() {
                let rho = reduce_on(q.sector.basis(), st.amplitudes(), &[s])?;
                let mut row: Vec<Cell> = vec![ratio.into()];
                row.extend(time_cells(*time));
                row.extend([s.into(), trace_distance(&rho, th)?.into(), fidelity(&rho, th)?.into()]);
                metrics.push(row);
            }
        }
    }
    rep.tables.extend([density, metrics]);
    Ok(())
}

/// Number statistics of the configured subsystems for every ensemble and
/// for the quenched state averaged over the saturated window, plus the
/// interaction energy over time and its ensemble predictions.
fn fig6(cfg: &ExperimentConfig, rep: &mut Report) -> Result<(), RunError> {
    let mut dists = Table::new(
        "fig6_distributions",
        &[
            "j_over_u",
            "temperature",
            "subsystem",
            "source",
            "n",
            "probability",
            "std",
        ],
    );
    let mut energy = Table::new("fig6_interaction", &["j_over_u", "t", "tJ", "interaction_energy"]);
    let mut reference = Table::new(
        "fig6_interaction_reference",
        &["j_over_u", "source", "interaction_energy", "std"],
    );
    let times = cfg.grid();
    let mut temps = serde_json::Map::new();
    for &ratio in &cfg.reproduce.j_over_u {
        let q = Quench::build(cfg, ratio)?;
        let u = q.params.interaction;
        let ens = build_ensembles(&q, cfg, q.energy())?;
        let temp = matched_canonical(&q, q.energy())?.temperature().unwrap_or(f64::NAN);
        temps.insert(format!("{ratio}"), temp.into());
        let window = q.states(&cfg.window())?;
        let views = window.iter().map(|st| q.view(st)).collect::<Result<Vec<_>, _>>()?;
        for a in cfg.sets() {
            let per_time = views
                .iter()
                .map(|v| Ok(number_distribution(v, a)?.probabilities))
                .collect::<Result<Vec<_>, RunError>>()?;
            for n in 0..per_time[0].len() {
                let f = window_stats(&per_time.iter().map(|p| p[n]).collect::<Vec<_>>());
                dists.push(vec![
                    ratio.into(),
                    temp.into(),
                    label(a).into(),
                    "quench".into(),
                    n.into(),
                    f.mean.into(),
                    f.spread.into(),
                ]);
            }
            for e in &ens.states {
                let view = StateView::ensemble(e, &ens.sectors)?;
                for (n, p) in number_distribution(&view, a)?.probabilities.into_iter().enumerate() {
                    dists.push(vec![
                        ratio.into(),
                        temp.into(),
                        label(a).into(),
                        e.kind().as_str().into(),
                        n.into(),
                        p.into(),
                        "".into(),
                    ]);
                }
            }
        }
        for (time, st) in times.iter().zip(q.states(&times)?) {
            let mut row: Vec<Cell> = vec![ratio.into()];
            row.extend(time_cells(*time));
            row.push(interaction_energy(&q.view(&st)?, u).into());
            energy.push(row);
        }
        let w = window_stats(&views.iter().map(|v| interaction_energy(v, u)).collect::<Vec<_>>());
        reference.push(vec![ratio.into(), "quench".into(), w.mean.into(), w.spread.into()]);
        for e in &ens.states {
            let h = interaction_energy(&StateView::ensemble(e, &ens.sectors)?, u);
            reference.push(vec![ratio.into(), e.kind().as_str().into(), h.into(), "".into()]);
        }
        let start = interaction_energy(&q.view(&q.psi0)?, u);
        rep.result(&format!("initial_interaction_energy_{ratio}"), start);
    }
    rep.result("canonical_temperature", serde_json::Value::Object(temps));
    rep.tables.extend([dists, energy, reference]);
    Ok(())
}

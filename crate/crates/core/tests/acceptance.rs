//! Acceptance criteria, one PASS/FAIL line each. Exits non-zero if any fail.

mod common;

use std::time::{Duration, Instant};

use common::{dense_hamiltonian, dense_rdm, expm_minus_i, library_states, matvec, random_state, rng, two_copy_oracle};
use num_complex::Complex64;
use quench_core::ensembles::{
    canonical, diagonal_ensemble, ensemble_rdm, grand_canonical, match_canonical_temperature, match_grand_canonical,
    microcanonical, sectors_up_to, single_eigenstate, thermal_renyi, EnsembleState, Sector,
};
use quench_core::entanglement::{
    mutual_information_average, partition_average, partition_family, piecewise_linear_fit, purity, reduce, reduce_on,
};
use quench_core::fock::dimension;
use quench_core::hamiltonian::build_interaction;
use quench_core::interference::{
    apply_beamsplitter, bs_block, embed_product, exact_parity, purity_estimator, ShotSampler, TwoCopyState,
};
use quench_core::observables::{fidelity, number_distribution, trace_distance, uniform_grid, StateView};
use quench_core::spectral::{evolve, ground_state, trajectory};
use quench_core::{build_hamiltonian, FockState, HubbardParams, PartitionMap, PartitionMode, QuenchState, SectorBasis};
use rand::Rng;

// Pinned tolerances and settings.
const T_LOW_TARGET: (f64, f64) = (3.8, 0.4);
const T_HIGH_TARGET: (f64, f64) = (11.0, 1.5);
const WINDOW: (f64, f64) = (4.147, 8.294);
const WINDOW_POINTS: usize = 21;
const MIN_FIDELITY: f64 = 0.99;
const MAX_TRACE_DISTANCE: f64 = 0.1;
const PARITY_TOL: f64 = 1e-8;
const RANDOM_STATES: usize = 20;
const SHOTS: usize = 10_000;
const SEEDS_PER_CASE: u64 = 5;
const COVERAGE: f64 = 0.99;
const SE_FLOOR: f64 = 1e-8;
const PURE_ENTROPY_TOL: f64 = 1e-10;
const FIT_END: f64 = 3.0;
const FIT_POINTS: usize = 41;
const SLOPE_SPREAD: f64 = 0.2;
const SATURATION_FLUCTUATION: f64 = 0.15;
const THERMAL_GAP: f64 = 0.25;
const INTERACTION_RTOL: f64 = 0.05;
const ORACLE_TOL: f64 = 1e-10;

struct Outcome {
    pass: bool,
    detail: String,
}

fn check(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn run(id: usize, name: &str, limit: Duration, f: impl FnOnce() -> Outcome) -> bool {
    let start = Instant::now();
    let out = std::panic::catch_unwind(std::panic::AssertUnwindSafe(f)).unwrap_or_else(|e| {
        let msg = e
            .downcast_ref::<String>()
            .cloned()
            .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
            .unwrap_or_default();
        check(false, format!("panicked: {msg}"))
    });
    let elapsed = start.elapsed();
    let in_time = elapsed <= limit;
    let pass = out.pass && in_time;
    println!(
        "{} [{id:>2}] {name}: {} ({:.2?}, limit {:.0?}{})",
        if pass { "PASS" } else { "FAIL" },
        out.detail,
        elapsed,
        limit,
        if in_time { "" } else { ", too slow" }
    );
    pass
}

fn chain(ratio: f64) -> (Sector, QuenchState) {
    let s = Sector::build(&HubbardParams::from_ratio(6, 6, ratio).unwrap()).unwrap();
    let psi0 = QuenchState::fock(s.basis(), s.spectrum(), &FockState::unit_filling(6)).unwrap();
    (s, psi0)
}

fn one(s: &Sector) -> &[Sector] {
    std::slice::from_ref(s)
}

fn matched_canonical(s: &Sector) -> EnsembleState {
    canonical(s, match_canonical_temperature(s, 0.0).unwrap()).unwrap()
}

fn criterion_1() -> Outcome {
    let d = dimension(6, 6).unwrap();
    check(d == 462, format!("dimension(6, 6) = {d}"))
}

fn criterion_2() -> Outcome {
    let t_low = match_canonical_temperature(&chain(0.64).0, 0.0).unwrap();
    let t_high = match_canonical_temperature(&chain(2.6).0, 0.0).unwrap();
    let pass = (t_low - T_LOW_TARGET.0).abs() <= T_LOW_TARGET.1 && (t_high - T_HIGH_TARGET.0).abs() <= T_HIGH_TARGET.1;
    check(pass, format!("T/J = {t_low:.4} at J/U=0.64, {t_high:.4} at J/U=2.6"))
}

fn criterion_3() -> Outcome {
    let (s, psi0) = chain(0.64);
    let can = matched_canonical(&s);
    let times = uniform_grid(WINDOW.0, WINDOW.1, WINDOW_POINTS);
    let states = trajectory(s.spectrum(), &psi0, &times).unwrap();
    let mut per_site = Vec::new();
    let mut pass = true;
    let (mut avg_f, mut avg_d) = (vec![0.0; states.len()], vec![0.0; states.len()]);
    for site in 0..6 {
        let thermal = ensemble_rdm(&can, one(&s), &[site]).unwrap();
        let pmap = PartitionMap::new(s.basis(), &[site]).unwrap();
        let (mut f_min, mut d_max) = (f64::INFINITY, 0.0f64);
        for (k, st) in states.iter().enumerate() {
            let rho = reduce(st.amplitudes(), &pmap).unwrap();
            let (f, d) = (
                fidelity(&rho, &thermal).unwrap(),
                trace_distance(&rho, &thermal).unwrap(),
            );
            f_min = f_min.min(f);
            d_max = d_max.max(d);
            avg_f[k] += f / 6.0;
            avg_d[k] += d / 6.0;
        }
        pass &= f_min > MIN_FIDELITY && d_max <= MAX_TRACE_DISTANCE;
        per_site.push(format!("site {site} F_min={f_min:.4} D_max={d_max:.4}"));
    }
    per_site.push(format!(
        "site average F_min={:.4} D_max={:.4}",
        avg_f.iter().copied().fold(f64::INFINITY, f64::min),
        avg_d.iter().copied().fold(0.0, f64::max)
    ));
    check(pass, per_site.join("; "))
}

fn random_evolved(r: &mut impl Rng, l: usize) -> (SectorBasis, Vec<Complex64>) {
    let ratio = r.random_range(0.2..3.0);
    let s = Sector::build(&HubbardParams::from_ratio(l, l, ratio).unwrap()).unwrap();
    let start = r.random_range(0..s.basis().len());
    let psi0 = QuenchState::fock(s.basis(), s.spectrum(), &s.basis().unrank(start)).unwrap();
    let t = r.random_range(0.5..10.0);
    let psi = evolve(s.spectrum(), &psi0, t).unwrap();
    (s.basis().clone(), psi.amplitudes().to_vec())
}

fn criterion_4() -> Outcome {
    let mut r = rng(2024);
    let mut worst = 0.0f64;
    let (mut trials, mut covered, mut states) = (0usize, 0usize, 0usize);
    let mut spaces = std::collections::HashMap::new();
    let sizes: Vec<usize> = (0..RANDOM_STATES).map(|_| 6).chain([2, 3, 4, 5]).collect();
    for l in sizes {
        let (basis, psi) = random_evolved(&mut r, l);
        let space = spaces
            .entry(l)
            .or_insert_with(|| TwoCopyState::space(l, 2 * l).unwrap())
            .clone();
        let mut two = TwoCopyState::product_in(space, (&basis, &psi), (&basis, &psi)).unwrap();
        apply_beamsplitter(&mut two);
        let sampler = ShotSampler::new(&two);
        let subsystems: Vec<Vec<usize>> = (1..=l)
            .flat_map(|v| partition_family(l, v, PartitionMode::Contiguous))
            .collect();
        let exact: Vec<f64> = subsystems
            .iter()
            .map(|a| {
                let p = purity(&reduce_on(&basis, &psi, a).unwrap());
                worst = worst.max((exact_parity(&two, a).unwrap() - p).abs());
                p
            })
            .collect();
        for seed in 0..SEEDS_PER_CASE {
            let shots = sampler.sample(SHOTS, 1000 * states as u64 + seed);
            for (a, &p) in subsystems.iter().zip(&exact) {
                let (est, se) = purity_estimator(&shots, a).unwrap();
                trials += 1;
                if (est - p).abs() <= 3.0 * se + SE_FLOOR {
                    covered += 1;
                }
            }
        }
        states += 1;
    }
    let rate = covered as f64 / trials as f64;
    check(
        worst <= PARITY_TOL && rate >= COVERAGE,
        format!("{states} states, max |parity - purity| = {worst:.2e}, 3σ coverage {covered}/{trials} = {rate:.4}"),
    )
}

fn criterion_5() -> Outcome {
    let (s, psi0) = chain(0.64);
    let all = [0, 1, 2, 3, 4, 5];
    let mut times = uniform_grid(0.0, FIT_END, FIT_POINTS);
    times.extend(uniform_grid(WINDOW.0, WINDOW.1, WINDOW_POINTS));
    let states = trajectory(s.spectrum(), &psi0, &times).unwrap();
    let mut full_max = 0.0f64;
    let mut series = vec![Vec::new(); 3];
    for st in &states {
        full_max = full_max.max(-purity(&reduce_on(s.basis(), st.amplitudes(), &all).unwrap()).ln());
        for (v, out) in series.iter_mut().enumerate() {
            out.push(
                partition_average(s.basis(), st.amplitudes(), v + 1, PartitionMode::Contiguous)
                    .unwrap()
                    .mean,
            );
        }
    }
    let mut pass = full_max < PURE_ENTROPY_TOL;
    let mut slopes = Vec::new();
    let mut notes = Vec::new();
    for (v, y) in series.iter().enumerate() {
        let (early, late) = y.split_at(FIT_POINTS);
        let mean = late.iter().sum::<f64>() / late.len() as f64;
        let sd = (late.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / late.len() as f64).sqrt();
        let rises = early[0].abs() < PURE_ENTROPY_TOL && mean > 0.5;
        let saturates = sd < SATURATION_FLUCTUATION * mean;
        pass &= rises && saturates;
        let fit = piecewise_linear_fit(&times[..FIT_POINTS], early).unwrap();
        slopes.push(fit.slope);
        notes.push(format!(
            "v={} slope={:.3} break={:.2} plateau={:.3} sd/mean={:.3}",
            v + 1,
            fit.slope,
            fit.breakpoint,
            mean,
            sd / mean
        ));
    }
    let mean_slope = slopes.iter().sum::<f64>() / 3.0;
    let spread = slopes
        .iter()
        .map(|x| (x - mean_slope).abs() / mean_slope)
        .fold(0.0, f64::max);
    pass &= spread <= SLOPE_SPREAD;
    check(
        pass,
        format!(
            "max S_full={full_max:.1e}; {}; max slope deviation {:.1}%",
            notes.join("; "),
            100.0 * spread
        ),
    )
}

fn criterion_6() -> Outcome {
    let (s, psi0) = chain(0.64);
    let late = evolve(s.spectrum(), &psi0, WINDOW.1).unwrap();
    let (g, _) = ground_state(s.spectrum()).unwrap();
    let can = matched_canonical(&s);
    let mut pass = true;
    let mut notes = Vec::new();
    for v in 1..=6 {
        let q = partition_average(s.basis(), late.amplitudes(), v, PartitionMode::Contiguous)
            .unwrap()
            .mean;
        if v <= 3 {
            let th = thermal_renyi(&can, one(&s), v, PartitionMode::Contiguous).unwrap().mean;
            let gs = partition_average(s.basis(), g.amplitudes(), v, PartitionMode::Contiguous)
                .unwrap()
                .mean;
            pass &= (q - th).abs() <= THERMAL_GAP && gs < q;
            notes.push(format!("v={v} quench={q:.3} thermal={th:.3} ground={gs:.3}"));
        } else if v == 6 {
            pass &= q < PURE_ENTROPY_TOL;
            notes.push(format!("S(6)={q:.1e}"));
        }
    }
    check(pass, notes.join("; "))
}

fn criterion_7() -> Outcome {
    let (s, psi0) = chain(0.64);
    let late = evolve(s.spectrum(), &psi0, WINDOW.1).unwrap();
    let (g, _) = ground_state(s.spectrum()).unwrap();
    let mi = |amps: &[Complex64], v| {
        mutual_information_average(s.basis(), amps, v, PartitionMode::Contiguous)
            .unwrap()
            .mean
    };
    let (q2, g2) = (mi(late.amplitudes(), 2), mi(g.amplitudes(), 2));
    let (q6, g6) = (mi(late.amplitudes(), 6), mi(g.amplitudes(), 6));
    check(
        q2 < g2 && q6 > g6,
        format!("|AB|=2: quench {q2:.3} vs ground {g2:.3}; |AB|=6: quench {q6:.3} vs ground {g6:.3}"),
    )
}

fn criterion_8() -> Outcome {
    let (s, psi0) = chain(0.64);
    let u = 1.0 / 0.64;
    let diag = build_interaction(s.basis(), u);
    let h_int = |p: &[f64]| p.iter().zip(&diag).map(|(p, d)| p * d).sum::<f64>();
    let start = h_int(&psi0.probabilities());
    let times = uniform_grid(WINDOW.0, WINDOW.1, WINDOW_POINTS);
    let avg = trajectory(s.spectrum(), &psi0, &times)
        .unwrap()
        .iter()
        .map(|st| h_int(&st.probabilities()))
        .sum::<f64>()
        / times.len() as f64;
    let can = matched_canonical(&s);
    let predicted = h_int(&can.fock_probabilities(one(&s)).unwrap()[0].1);
    let rel = (avg - predicted).abs() / predicted.abs();
    check(
        start == 0.0 && rel <= INTERACTION_RTOL,
        format!(
            "H_int(0)={start}, window mean {avg:.4} vs canonical {predicted:.4} ({:.1}%)",
            100.0 * rel
        ),
    )
}

fn criterion_9() -> Outcome {
    let mut r = rng(99);
    let (mut pt, mut ev, mut bs) = (0.0f64, 0.0f64, 0.0f64);
    for l in 2..=4 {
        let params = HubbardParams::from_ratio(l, l, 0.64).unwrap();
        let basis = SectorBasis::new(l, l).unwrap();
        let states = library_states(&basis);
        let dense = dense_hamiltonian(&states, params.tunneling, params.interaction);
        let s = Sector::build(&params).unwrap();
        let psi0 = QuenchState::fock(&basis, s.spectrum(), &FockState::unit_filling(l)).unwrap();
        for &t in &[0.5, 3.0, 8.294] {
            let want = matvec(&expm_minus_i(&dense, t), psi0.amplitudes());
            let got = evolve(s.spectrum(), &psi0, t).unwrap();
            for (a, b) in got.amplitudes().iter().zip(&want) {
                ev = ev.max((a - b).norm());
            }
        }
        let psi = random_state(&mut r, basis.len());
        for v in 1..=l {
            for sites in partition_family(l, v, PartitionMode::AllSubsets) {
                let rho = reduce(&psi, &PartitionMap::new(&basis, &sites).unwrap()).unwrap();
                let oracle = dense_rdm(&states, &psi, &sites);
                for (n, block) in rho.blocks() {
                    let local = SectorBasis::new(v, *n).unwrap();
                    for (i, a) in local.iter().enumerate() {
                        for (j, b) in local.iter().enumerate() {
                            let want = oracle.get(&(a.to_vec(), b.to_vec())).copied().unwrap_or_default();
                            pt = pt.max((block[[i, j]] - want).norm());
                        }
                    }
                }
            }
        }
        let mut two = embed_product(&basis, &psi).unwrap();
        apply_beamsplitter(&mut two);
        let oracle = two_copy_oracle(&states, &psi);
        for (occ, a) in two.basis().iter().zip(two.amplitudes()) {
            bs = bs.max((a - oracle.get(occ).copied().unwrap_or_default()).norm());
        }
    }
    check(
        pt <= ORACLE_TOL && ev <= ORACLE_TOL && bs <= ORACLE_TOL,
        format!("max deviation: partial trace {pt:.1e}, evolution {ev:.1e}, two-copy {bs:.1e}"),
    )
}

fn criterion_10() -> Outcome {
    let mut failures = Vec::new();
    let mut note = |ok: bool, what: String| {
        if !ok {
            failures.push(what);
        }
    };
    for ratio in [0.64, 2.6] {
        let params = HubbardParams::from_ratio(6, 6, ratio).unwrap();
        let (s, psi0) = chain(ratio);
        let h = build_hamiltonian(&params, s.basis()).unwrap();
        let v = s.spectrum().eigenvectors();
        let scale = s.energies().iter().map(|e| e.abs()).fold(1.0, f64::max);
        let mut res = 0.0f64;
        for k in 0..s.basis().len() {
            let col: Vec<f64> = v.column(k).to_vec();
            let hv = h.matvec(&col).unwrap();
            for (a, b) in hv.iter().zip(&col) {
                res = res.max((a - s.energies()[k] * b).abs());
            }
        }
        note(res < 1e-10 * scale, format!("eigen residual {res:.1e} at J/U={ratio}"));
        let e0 = h.expectation(psi0.amplitudes()).unwrap();
        for t in uniform_grid(0.0, 20.0, 11) {
            let st = evolve(s.spectrum(), &psi0, t).unwrap();
            note((st.norm() - 1.0).abs() < 1e-12, format!("norm drift at t={t}"));
            let e = h.expectation(st.amplitudes()).unwrap();
            note(
                (e - e0).abs() < 1e-10 * scale,
                format!("energy drift {:.1e} at t={t}", e - e0),
            );
        }

        // ensembles as distributions, reduced states valid, Fuchs-van de Graaff
        let sectors = sectors_up_to(&params).unwrap();
        let t = match_canonical_temperature(&s, 0.0).unwrap();
        let (tg, mu) = match_grand_canonical(&sectors, 0.0, 5.5).unwrap();
        let ensembles = [
            diagonal_ensemble(&s, psi0.overlaps()).unwrap(),
            single_eigenstate(&s, 0.0).unwrap(),
            microcanonical(&s, 0.0, 1.0).unwrap(),
            canonical(&s, t).unwrap(),
            grand_canonical(&sectors, tg, mu).unwrap(),
        ];
        let late = evolve(s.spectrum(), &psi0, WINDOW.1).unwrap();
        for ens in &ensembles {
            note(ens.check(1e-12).is_ok(), format!("{} weights", ens.kind()));
            let pool: &[Sector] = if ens.sectors().len() > 1 { &sectors } else { one(&s) };
            for sites in [vec![2], vec![1, 2, 3]] {
                let rho = ensemble_rdm(ens, pool, &sites).unwrap();
                note(rho.check(1e-10).is_ok(), format!("{} rdm on {sites:?}", ens.kind()));
                let view = StateView::ensemble(ens, pool).unwrap();
                let p = number_distribution(&view, &sites).unwrap();
                note((p.total() - 1.0).abs() < 1e-12, format!("{} P(n) sum", ens.kind()));
                let q = reduce_on(s.basis(), late.amplitudes(), &sites).unwrap();
                let (f, d) = (fidelity(&q, &rho).unwrap(), trace_distance(&q, &rho).unwrap());
                note(
                    1.0 - f <= d + 1e-9 && d <= (1.0 - f * f).max(0.0).sqrt() + 1e-9,
                    format!("Fuchs-van de Graaff {} on {sites:?}: F={f} D={d}", ens.kind()),
                );
            }
        }
    }
    for s in 0..=12 {
        let u = bs_block(s);
        let d = s + 1;
        for i in 0..d {
            for j in 0..d {
                let dot: f64 = (0..d).map(|k| u[i * d + k] * u[j * d + k]).sum();
                note(
                    (dot - if i == j { 1.0 } else { 0.0 }).abs() < 1e-12,
                    format!("beam splitter block {s}"),
                );
            }
        }
    }
    let (s, psi0) = chain(0.64);
    let mut two = embed_product(s.basis(), evolve(s.spectrum(), &psi0, 2.0).unwrap().amplitudes()).unwrap();
    apply_beamsplitter(&mut two);
    note((two.norm() - 1.0).abs() < 1e-10, "two-copy norm".into());
    let ok = failures.is_empty();
    check(
        ok,
        if ok {
            "eigen residuals, conservation, unitarity, ensemble and RDM invariants, Fuchs-van de Graaff".into()
        } else {
            failures.join("; ")
        },
    )
}

fn main() {
    let mut all = true;
    all &= run(1, "Hilbert-space dimension", Duration::from_millis(1), criterion_1);
    all &= run(2, "effective temperatures", Duration::from_secs(5), criterion_2);
    all &= run(
        3,
        "single-site fidelity and trace distance",
        Duration::from_secs(30),
        criterion_3,
    );
    all &= run(4, "parity equals purity", Duration::from_secs(600), criterion_4);
    all &= run(5, "entropy dynamics shape", Duration::from_secs(60), criterion_5);
    all &= run(
        6,
        "volume law vs thermal entropy",
        Duration::from_secs(120),
        criterion_6,
    );
    all &= run(7, "mutual information ordering", Duration::from_secs(60), criterion_7);
    all &= run(
        8,
        "interaction-energy thermalization",
        Duration::from_secs(60),
        criterion_8,
    );
    all &= run(
        9,
        "oracle equivalence at L = N <= 4",
        Duration::from_secs(60),
        criterion_9,
    );
    all &= run(10, "numerical hygiene", Duration::from_secs(900), criterion_10);
    if !all {
        std::process::exit(1);
    }
}

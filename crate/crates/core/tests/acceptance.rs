//! Acceptance suite: one line per criterion. The process exits non-zero when a
//! criterion outside `DOCUMENTED_GAPS` fails.
//!
//! Run alone with `cargo test -p busytail --test acceptance`.

mod common;

use std::time::Instant;

use busytail::asymptotics::{
    check_simulable, estimate_tail, psbj_diagnostic, random_sum_oracle, McSettings, Prediction,
};
use busytail::fluid::solve_tau;
use busytail::network::expected_visits;
use busytail::sim::auxiliary::{aux_models, run_isolation_on_tape};
use busytail::sim::engine::{Arrivals, Run, SafetyCaps, StopRule};
use busytail::sim::perturb::{
    arrival_non_monotonicity_witness, coupled_perturbation, finite_arrival_service_counts, TapeEdit,
};
use busytail::sim::ubq::{run_ubq_extended, select_group_size};
use busytail::sim::{run_cycle_on_tape, InfrastructureTape};
use busytail::stats::loglog_slope;
use busytail::{DistSpec, Error, NetworkSpec, RandomStream};
use common::*;
use rand::Rng;

const SEED: u64 = 20_240_601;

// Pinned tolerances.
const K1_U_TOL: f64 = 1e-12;
const TWO_STATION_TOL: f64 = 1e-9;
const EULER_STEP: f64 = 1e-5;
const EULER_SUP_TOL: f64 = 1e-3;
const K1_RATIO_BAND: (f64, f64) = (0.7, 1.3);
const K1_SLOPE_TOL: f64 = 0.15;
const GJN_RATIO_BAND: (f64, f64) = (0.6, 1.5);
const RANDOM_SUM_BAND: (f64, f64) = (0.9, 1.2);
const PSBJ_SINGLE_MIN: f64 = 0.85;
const PSBJ_DOUBLE_MAX: f64 = 0.05;
const PSBJ_MIN_EXCEEDANCES: u64 = 100;
const TARGET_RHS: f64 = 1e-3;

/// Criteria whose failure is a documented prelimit gap rather than a
/// defect. They still print FAIL but do not fail the process.
const DOCUMENTED_GAPS: &[usize] = &[10];

const MC_CYCLES: u64 = 10_000_000;
const BOUND_CYCLES: u64 = 10_000;
const PERTURBATIONS: u64 = 1_000;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn k1_exactness() -> Outcome {
    let mut worst: f64 = 0.0;
    for rho in [0.25, 0.5, 0.8] {
        let spec = single(1.0, DistSpec::Exponential { mean: rho });
        let u = solve_tau(&spec, 0).unwrap().u.unwrap();
        worst = worst.max((u - (1.0 - rho)).abs());
    }
    outcome(worst <= K1_U_TOL, format!("max |u_1 - (1 - rho)| = {worst:.2e} (tol {K1_U_TOL:.0e})"))
}

fn two_station_forms() -> Outcome {
    let mut r = rng(SEED);
    let mut counts = [0usize; 2];
    let mut worst: f64 = 0.0;
    while counts.iter().any(|&c| c < 10) {
        let (p01, p12, p21) = (0.1 + 0.8 * r.random::<f64>(), 0.6 * r.random::<f64>(), 0.6 * r.random::<f64>());
        let n = expected_visits(&two_station(p01, p12, p21, 1.0, 1.0, 1.0)).unwrap();
        let (b1, b2) = ((0.2 + 0.6 * r.random::<f64>()) / n[0], (0.2 + 0.6 * r.random::<f64>()) / n[1]);
        let (t1, case) = two_station_tau1(p01, p12, p21, 1.0, b1, b2);
        let slot = (case == TwoStationCase::SecondFills) as usize;
        if counts[slot] >= 10 {
            continue;
        }
        counts[slot] += 1;
        let (t2, _) = two_station_tau2(p01, p12, p21, 1.0, b1, b2);
        let spec = two_station(p01, p12, p21, 1.0, b1, b2);
        worst = worst.max((solve_tau(&spec, 0).unwrap().tau - t1).abs() / t1);
        worst = worst.max((solve_tau(&spec, 1).unwrap().tau - t2).abs() / t2);
    }
    outcome(
        worst <= TWO_STATION_TOL,
        format!("20 specs (10 per regime), max relative tau error {worst:.2e} (tol {TWO_STATION_TOL:.0e})"),
    )
}

fn fluid_vs_euler() -> Outcome {
    let mut r = rng(SEED + 1);
    let mut worst: f64 = 0.0;
    for i in 0..50 {
        let spec = random_network(&mut r, 1 + i % 5, 0.2, 0.8);
        for k in 0..spec.stations() {
            let t = solve_tau(&spec, k).unwrap();
            worst = worst.max(euler_discrepancy(&spec, &t, EULER_STEP).0);
        }
    }
    outcome(worst <= EULER_SUP_TOL, format!("50 specs, K <= 5, sup-norm {worst:.2e} (tol {EULER_SUP_TOL:.0e})"))
}

fn k1_tail() -> Outcome {
    // rho = 0.5, u = 0.5, E nu = 2: RHS(x) = 2 (1 + x)^-1.5
    let g = DistSpec::ShiftedPareto { alpha: 1.5, scale: 0.5 };
    let spec = single(2.0, g);
    let xs = Prediction::new(&spec, &g).unwrap().default_grid(25);
    let r = estimate_tail(&spec, Some(&g), &xs, &McSettings::new(MC_CYCLES), &RandomStream::new(SEED)).unwrap();
    let i = r.index_near_theory(TARGET_RHS).unwrap();
    let ratio = r.ratio.as_ref().unwrap()[i].unwrap();
    let top = *xs.last().unwrap();
    let slope = loglog_slope(&xs, &r.empirical, top / 10.0).unwrap();
    let pass = (K1_RATIO_BAND.0..=K1_RATIO_BAND.1).contains(&ratio) && (slope + 1.5).abs() <= K1_SLOPE_TOL;
    outcome(
        pass,
        format!(
            "x = {:.1}, RHS = {:.2e}, ratio {ratio:.3} (band {:?}); slope over [{:.1}, {top:.1}] {slope:.3} (-1.5 +/- {K1_SLOPE_TOL}), {} exceedances at top",
            xs[i],
            r.theory.as_ref().unwrap()[i],
            K1_RATIO_BAND,
            top / 10.0,
            r.exceedances[xs.len() - 1]
        ),
    )
}

struct GjnRun {
    x: f64,
    u: Vec<Option<f64>>,
}

fn gjn_tail() -> (Outcome, Option<GjnRun>) {
    let spec = heavy_feedback();
    let p = Prediction::new(&spec, &feedback_reference()).unwrap();
    let xs = p.default_grid(25);
    let r = estimate_tail(
        &spec,
        Some(&feedback_reference()),
        &xs,
        &McSettings::new(MC_CYCLES),
        &RandomStream::new(SEED + 5),
    )
    .unwrap();
    let i = r.index_near_theory(TARGET_RHS).unwrap();
    let ratio = r.ratio.as_ref().unwrap()[i].unwrap();
    let pass = (GJN_RATIO_BAND.0..=GJN_RATIO_BAND.1).contains(&ratio);
    let detail = format!(
        "x = {:.1}, RHS = {:.2e}, empirical {:.2e}, ratio {ratio:.3} (band {:?}), E nu = {:.3}",
        xs[i],
        r.theory.as_ref().unwrap()[i],
        r.empirical[i],
        GJN_RATIO_BAND,
        r.e_nu_hat
    );
    (outcome(pass, detail), Some(GjnRun { x: xs[i], u: p.u }))
}

fn bound_suite() -> Outcome {
    let spec = heavy_feedback();
    let root = RandomStream::new(SEED + 6);
    let choice = select_group_size(&spec, &root.child(u64::MAX)).unwrap();
    let (mut upper, mut customers, mut lower) = (0u64, 0u64, 0u64);
    for i in 0..BOUND_CYCLES {
        let mut tape = InfrastructureTape::new(&spec, &root.child(i));
        let c = run_cycle_on_tape(&mut tape, SafetyCaps::default()).unwrap();
        let u = run_ubq_extended(&mut tape, choice.group_size).unwrap();
        upper += (c.busy_period <= u.extended_bound) as u64;
        customers += (c.customers as usize <= u.customer_bound()) as u64;
        let first = &run_isolation_on_tape(&mut tape, 1).unwrap()[0];
        let ok = (0..spec.stations())
            .filter(|&k| first.counts[k] >= 1)
            .all(|k| c.busy_period >= tape.service(k, 0) && c.service_counts[k] >= first.counts[k]);
        lower += ok as u64;
    }

    let mut r = rng(SEED + 7);
    let (mut s35, mut s34) = (0u64, 0u64);
    for i in 0..BOUND_CYCLES {
        let base = random_network(&mut r, 1 + (i as usize % 5), 0.2, 0.8);
        let spec = with_heavy_first(base, 1.5);
        let l = r.random_range(1..=16);
        let mut tape = InfrastructureTape::new(&spec, &root.child(BOUND_CYCLES + i));
        let m = aux_models(&mut tape, l).unwrap();
        let kf = spec.stations() as f64;
        let max_k = m.per_station_service.iter().cloned().fold(0.0, f64::max);
        let eps = 1e-9 * (1.0 + m.total_service + m.arrival_span);
        s35 += (m.total_service / kf <= max_k + eps
            && max_k <= m.saturated + eps
            && m.saturated <= m.total_service + eps) as u64;
        s34 += (m.saturated <= m.constrained + eps && m.constrained <= m.arrival_span + m.saturated + eps) as u64;
    }
    let all = [upper, customers, s35, s34, lower].iter().all(|&c| c == BOUND_CYCLES);
    outcome(
        all,
        format!(
            "of {BOUND_CYCLES} each: B <= U {upper}, nu_B <= N_J L {customers} (L = {}), S/K <= max S_k <= X0 <= S {s35}, X0 <= X <= T_L - T_1 + X0 {s34}, first-service lower bound {lower}",
            choice.group_size
        ),
    )
}

fn monotonicity_suite() -> Outcome {
    let spec = heavy_feedback();
    let root = RandomStream::new(SEED + 8);
    let mut r = rng(SEED + 9);
    let (mut mp1, mut mp2, mut ip) = (0u64, 0u64, 0u64);
    for i in 0..PERTURBATIONS {
        let mut tape = InfrastructureTape::new(&spec, &root.child(i));
        let base = run_cycle_on_tape(&mut tape, SafetyCaps::default()).unwrap();
        let used: Vec<usize> = (0..spec.stations()).filter(|&k| base.service_counts[k] > 0).collect();
        let k = used[r.random_range(0..used.len())];
        let index = r.random_range(0..base.service_counts[k] as usize);
        let by = -spec.services[k].mean() * r.random::<f64>().ln();
        let edit = if i % 2 == 0 {
            TapeEdit::InflateService { station: k, index, by }
        } else {
            TapeEdit::DelayService { station: k, index, delay: by }
        };
        let pair = coupled_perturbation(&tape, &[edit], SafetyCaps::default()).unwrap();
        mp1 += pair.schedule_monotone() as u64;
        mp2 += pair.cycle_monotone() as u64;

        let n = r.random_range(1..=30);
        let original: Vec<f64> = (0..n).map(|c| tape.arrival_time(c)).collect();
        let moved: Vec<f64> = (0..n).map(|_| 50.0 * r.random::<f64>()).collect();
        let mut t1 = tape.clone();
        let mut t2 = tape.clone();
        let a = finite_arrival_service_counts(&mut t1, &original).unwrap();
        let b = finite_arrival_service_counts(&mut t2, &moved).unwrap();
        ip += (a == b) as u64;
    }
    let w = arrival_non_monotonicity_witness().unwrap();
    let witness = w.busy_after < w.busy_before && w.arrival_after > w.arrival_before;
    let pass = [mp1, mp2, ip].iter().all(|&c| c == PERTURBATIONS) && witness;
    outcome(
        pass,
        format!(
            "of {PERTURBATIONS} each: schedule monotone {mp1}, B and nu_B monotone {mp2}, service counts invariant {ip}; witness: arrival {} -> {} changes B {} -> {}",
            w.arrival_before, w.arrival_after, w.busy_before, w.busy_after
        ),
    )
}

fn bounded_arrival_control() -> Outcome {
    let spec = NetworkSpec {
        arrival: DistSpec::Uniform { lo: 1.25, hi: 1.75 },
        services: vec![DistSpec::Deterministic { value: 1.0 }; 2],
        entry: vec![1.0, 0.0],
        routing: vec![vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0]],
    };
    let rejected = matches!(check_simulable(&spec, false), Err(Error::BoundedArrivals(_)));
    let allowed = check_simulable(&spec, true).is_ok();
    let horizon = 1e5;
    let mut tape = InfrastructureTape::new(&spec, &RandomStream::new(SEED + 10));
    let out = Run::new(&mut tape)
        .arrivals(Arrivals::Tape)
        .stop(StopRule::Horizon(horizon))
        .caps(SafetyCaps { max_events: u64::MAX, max_time: f64::INFINITY })
        .execute()
        .unwrap();
    outcome(
        rejected && allowed && !out.emptied,
        format!(
            "rejected without override: {rejected}; {} customers up to t = {horizon:.0e}, network emptied: {}",
            out.customers, out.emptied
        ),
    )
}

fn random_sum() -> Outcome {
    let d = DistSpec::Pareto { alpha: 1.5, xm: 1.0 };
    let x = d.inverse_tail(1e-4);
    let t = random_sum_oracle(&d, 5.0, MC_CYCLES, &[x], 0, &RandomStream::new(SEED + 11)).unwrap();
    let ratio = t.ratio[0];
    outcome(
        (RANDOM_SUM_BAND.0..=RANDOM_SUM_BAND.1).contains(&ratio),
        format!(
            "x = {x:.1}, ratio {ratio:.3} (band {RANDOM_SUM_BAND:?}), CI [{:.3}, {:.3}]",
            t.ratio_lo[0], t.ratio_hi[0]
        ),
    )
}

fn psbj(run: Option<&GjnRun>) -> Outcome {
    let Some(run) = run else {
        return outcome(false, "criterion 5 produced no threshold".into());
    };
    let spec = heavy_feedback();
    let rep =
        psbj_diagnostic(&spec, &run.u, run.x, &McSettings::new(MC_CYCLES), &RandomStream::new(SEED + 12)).unwrap();
    let half = rep.eps.iter().position(|&e| e == 0.5).unwrap();
    let single = rep.single_jump[half];
    let pass =
        rep.exceedances >= PSBJ_MIN_EXCEEDANCES && single >= PSBJ_SINGLE_MIN && rep.double_jump <= PSBJ_DOUBLE_MAX;
    outcome(
        pass,
        format!(
            "x = {:.1}, {} exceedances, single jump >= 0.5 u x: {single:.3} (min {PSBJ_SINGLE_MIN}), double jump above C_U x = {:.1}: {:.3} (max {PSBJ_DOUBLE_MAX})",
            run.x,
            rep.exceedances,
            rep.c_u * run.x,
            rep.double_jump
        ),
    )
}

fn report(n: usize, name: &str, started: Instant, o: &Outcome) {
    let note = if !o.pass && DOCUMENTED_GAPS.contains(&n) { " [documented gap]" } else { "" };
    println!(
        "[{}] criterion {n:>2} {name}: {} ({:.1} s){note}",
        if o.pass { "PASS" } else { "FAIL" },
        o.detail,
        started.elapsed().as_secs_f64()
    );
}

fn main() {
    // libtest passes flags such as `--list`; this target has no sub-tests.
    if std::env::args().any(|a| a == "--list") {
        return;
    }
    let mut results = Vec::new();
    let mut run = |n: usize, name: &str, f: &mut dyn FnMut() -> Outcome| {
        let t = Instant::now();
        let o = f();
        report(n, name, t, &o);
        results.push((n, o.pass));
    };
    run(1, "single-station coefficient", &mut k1_exactness);
    run(2, "two-station closed forms", &mut two_station_forms);
    run(3, "fluid vs Euler", &mut fluid_vs_euler);
    run(4, "single-station tail", &mut k1_tail);
    let mut gjn = None;
    run(5, "feedback-network tail", &mut || {
        let (o, g) = gjn_tail();
        gjn = g;
        o
    });
    run(6, "sample-path bounds", &mut bound_suite);
    run(7, "monotonicity and invariance", &mut monotonicity_suite);
    run(8, "bounded-arrival control", &mut bounded_arrival_control);
    run(9, "random-sum tail", &mut random_sum);
    run(10, "single big jump", &mut || psbj(gjn.as_ref()));
    let failed: Vec<usize> = results.iter().filter(|r| !r.1).map(|r| r.0).collect();
    let unexpected = failed.iter().filter(|n| !DOCUMENTED_GAPS.contains(n)).count();
    println!(
        "acceptance: {} passed, {} failed ({} documented gaps)",
        results.len() - failed.len(),
        failed.len(),
        failed.len() - unexpected
    );
    if unexpected > 0 {
        std::process::exit(1);
    }
}

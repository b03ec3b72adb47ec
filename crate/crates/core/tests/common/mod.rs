#![allow(dead_code)]

use std::collections::HashMap;

use busytail::fluid::FluidTimeline;
use busytail::network::{expected_visits, stability_check};
use busytail::{DistSpec, NetworkSpec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random stable network with `k` stations, exponential services, unit
/// mean inter-arrival time and per-station loads in `[lo, hi]`.
pub fn random_network(r: &mut ChaCha8Rng, k: usize, lo: f64, hi: f64) -> NetworkSpec {
    loop {
        let mut entry: Vec<f64> = (0..k).map(|_| r.random::<f64>() + 0.05).collect();
        let s: f64 = entry.iter().sum();
        entry.iter_mut().for_each(|p| *p /= s);
        let routing: Vec<Vec<f64>> = (0..k)
            .map(|_| {
                let exit = 0.2 + 0.6 * r.random::<f64>();
                let mut w: Vec<f64> =
                    (0..k).map(|_| if r.random::<f64>() < 0.6 { r.random::<f64>() } else { 0.0 }).collect();
                let s: f64 = w.iter().sum();
                if s > 0.0 {
                    w.iter_mut().for_each(|p| *p *= (1.0 - exit) / s);
                    w.push(exit);
                } else {
                    w.push(1.0);
                }
                let total: f64 = w.iter().sum();
                let last = w.len() - 1;
                w[last] += 1.0 - total;
                w
            })
            .collect();
        let mut spec = NetworkSpec {
            arrival: DistSpec::Exponential { mean: 1.0 },
            services: vec![DistSpec::Exponential { mean: 1.0 }; k],
            entry,
            routing,
        };
        let visits = expected_visits(&spec).unwrap();
        spec.services =
            visits.iter().map(|n| DistSpec::Exponential { mean: (lo + (hi - lo) * r.random::<f64>()) / n }).collect();
        if stability_check(&spec).unwrap().0 {
            return spec;
        }
    }
}

/// Two stations without self-loops: entry `(p01, 1 - p01)`, `p12`, `p21`.
pub fn two_station(p01: f64, p12: f64, p21: f64, a: f64, b1: f64, b2: f64) -> NetworkSpec {
    NetworkSpec {
        arrival: DistSpec::Exponential { mean: a },
        services: vec![DistSpec::Exponential { mean: b1 }, DistSpec::Exponential { mean: b2 }],
        entry: vec![p01, 1.0 - p01],
        routing: vec![vec![0.0, p12, 1.0 - p12], vec![p21, 0.0, 1.0 - p21]],
    }
}

/// Which two-station regime applies when station 1 is frozen.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TwoStationCase {
    /// Station 2 stays empty while station 1 drains.
    SecondStaysEmpty,
    /// Station 2 fills up while station 1 drains.
    SecondFills,
}

/// Hand-solved `tau^(1)` for the two-station network; the regime decides
/// which closed form applies.
pub fn two_station_tau1(p01: f64, p12: f64, p21: f64, a: f64, b1: f64, b2: f64) -> (f64, TwoStationCase) {
    let p02 = 1.0 - p01;
    let beta1 = p01 + p02 * p21;
    if 1.0 / b2 >= p02 / a + p12 / b1 {
        let a1 = p01 / a + (p02 / a + p12 / b1) * p21;
        (1.0 + (beta1 / a) / (1.0 / b1 - a1), TwoStationCase::SecondStaysEmpty)
    } else {
        let a1 = p01 / a + p21 / b2;
        let t1 = (beta1 / a) / (1.0 / b1 - a1);
        let gamma21 = p02 / a + p12 / b1 - 1.0 / b2;
        let beta22 = 1.0 / b2 - p02 / a - (p01 / a + p21 / b2) * p12;
        (1.0 + (1.0 + gamma21 / beta22) * t1, TwoStationCase::SecondFills)
    }
}

/// `tau^(2)` by relabelling.
pub fn two_station_tau2(p01: f64, p12: f64, p21: f64, a: f64, b1: f64, b2: f64) -> (f64, TwoStationCase) {
    two_station_tau1(1.0 - p01, p21, p12, a, b2, b1)
}

/// Fixed-step integration of the fluid rate rules. Returns the largest
/// level discrepancy against `timeline` over the run and the time at which
/// the integrated fluid emptied.
pub fn euler_discrepancy(spec: &NetworkSpec, timeline: &FluidTimeline, dt: f64) -> (f64, f64) {
    let k = spec.stations();
    let frozen_station = timeline.frozen_station;
    let c = timeline.frozen_duration;
    let cap: Vec<f64> = spec.service_means().iter().map(|b| 1.0 / b).collect();
    let inflow = 1.0 / spec.arrival_mean();
    let mut memo: HashMap<(bool, u64), Vec<f64>> = HashMap::new();
    let mut net_rates = |frozen: bool, mask: u64| -> Vec<f64> {
        memo.entry((frozen, mask))
            .or_insert_with(|| {
                let mut d = vec![0.0; k];
                let mut a = vec![0.0; k];
                for _ in 0..1_000_000 {
                    for j in 0..k {
                        a[j] = spec.entry[j] * inflow + (0..k).map(|l| spec.p(l, j) * d[l]).sum::<f64>();
                    }
                    let mut change: f64 = 0.0;
                    for j in 0..k {
                        let next = if frozen && j == frozen_station {
                            0.0
                        } else if mask >> j & 1 == 1 {
                            cap[j]
                        } else {
                            a[j].min(cap[j])
                        };
                        change = change.max((next - d[j]).abs());
                        d[j] = next;
                    }
                    if change < 1e-15 {
                        break;
                    }
                }
                (0..k).map(|j| a[j] - d[j]).collect()
            })
            .clone()
    };

    let frozen_steps = (c / dt).round() as u64;
    let horizon = 10.0 * timeline.end() + 10.0;
    let mut level = vec![0.0; k];
    let mut worst: f64 = 0.0;
    let mut step = 0u64;
    loop {
        let frozen = step < frozen_steps;
        let mask = level.iter().enumerate().fold(0u64, |m, (j, &q)| if q > 0.0 { m | 1 << j } else { m });
        let net = net_rates(frozen, mask);
        for j in 0..k {
            level[j] = (level[j] + dt * net[j]).max(0.0);
        }
        step += 1;
        let t = step as f64 * dt;
        for j in 0..k {
            worst = worst.max((level[j] - timeline.level_at(j, t)).abs());
        }
        if !frozen && level.iter().all(|&q| q == 0.0) {
            return (worst, t);
        }
        if t > horizon {
            return (f64::INFINITY, t);
        }
    }
}

/// Feedback pair with a heavy-tailed first station: entry `(0.5, 0.5)`,
/// `p12 = p21 = 0.3`, both loads `0.8 * 5/7`.
pub fn heavy_feedback() -> NetworkSpec {
    NetworkSpec {
        arrival: DistSpec::Exponential { mean: 1.0 },
        services: vec![feedback_reference(), DistSpec::Exponential { mean: 0.8 }],
        entry: vec![0.5, 0.5],
        routing: vec![vec![0.0, 0.3, 0.7], vec![0.3, 0.0, 0.7]],
    }
}

pub fn feedback_reference() -> DistSpec {
    DistSpec::ShiftedPareto { alpha: 1.5, scale: 0.4 }
}

/// Single station with exponential input of mean `a`.
pub fn single(a: f64, service: DistSpec) -> NetworkSpec {
    NetworkSpec {
        arrival: DistSpec::Exponential { mean: a },
        services: vec![service],
        entry: vec![1.0],
        routing: vec![vec![0.0, 1.0]],
    }
}

/// Replaces station 0's service law by a shifted Pareto with the same mean.
pub fn with_heavy_first(mut spec: NetworkSpec, alpha: f64) -> NetworkSpec {
    let m = spec.services[0].mean();
    spec.services[0] = DistSpec::ShiftedPareto { alpha, scale: m * (alpha - 1.0) };
    spec
}

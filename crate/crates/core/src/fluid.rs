//! Piecewise-linear fluid network started by freezing one station.
//!
//! Station `k` is switched off for `c` time units (one unit by default)
//! while fluid enters at rate `1/a`. Afterwards every station works at full
//! rate whenever it holds fluid. The fluid empties at `c tau^(k)`, and the
//! tail coefficient of station `k` is `u_k = 1 / tau^(k)`.
//!
//! The timeline is split into the frozen period, interval 1 (until `k`
//! drains) and interval 2 (until everything drains). Rates are constant on
//! each piece, so the solver jumps from breakpoint to breakpoint.

use std::fmt::Write as _;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::network::{stability_check, NetworkSpec};

/// Levels and rate comparisons below this are zero.
pub const EMPTY_TOL: f64 = 1e-12;

/// Interval-2 pieces allowed per station before giving up.
const PIECES_PER_STATION: usize = 2;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Frozen,
    Interval1,
    Interval2,
}

/// One station on one piece of the timeline.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct StationFlow {
    /// Level at the start of the piece.
    pub level: f64,
    pub arrival: f64,
    pub departure: f64,
    /// `arrival - departure`.
    pub net: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FluidInterval {
    pub phase: Phase,
    pub start: f64,
    pub end: f64,
    pub stations: Vec<StationFlow>,
}

impl FluidInterval {
    fn level_at(&self, j: usize, t: f64) -> f64 {
        let s = &self.stations[j];
        (s.level + s.net * (t - self.start)).max(0.0)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FluidTimeline {
    pub frozen_station: usize,
    pub frozen_duration: f64,
    /// `0, c, c + T_1, ...`, ending at `c tau`.
    pub breakpoints: Vec<f64>,
    pub intervals: Vec<FluidInterval>,
    /// Stations that stay empty throughout interval 1.
    pub free_set: Vec<usize>,
    pub interval1: f64,
    pub interval2: f64,
    /// `tau^(k)`, in units of the frozen duration.
    pub tau: f64,
    /// `1 / tau^(k)`; absent when no fluid ever reaches the frozen station.
    pub u: Option<f64>,
}

impl FluidTimeline {
    pub fn end(&self) -> f64 {
        *self.breakpoints.last().unwrap()
    }

    /// Level of station `j` at time `t` (zero after the end).
    pub fn level_at(&self, j: usize, t: f64) -> f64 {
        match self.intervals.iter().find(|iv| t <= iv.end) {
            Some(iv) if t >= iv.start => iv.level_at(j, t),
            _ => 0.0,
        }
    }

    /// Checks the structural properties of a fluid solution and lists the
    /// ones that fail.
    pub fn check(&self, spec: &NetworkSpec) -> Vec<String> {
        let k = spec.stations();
        let cap: Vec<f64> = spec.service_means().iter().map(|b| 1.0 / b).collect();
        let inflow = 1.0 / spec.arrival_mean();
        let mut out = Vec::new();
        let tol = 1e-10;
        for (m, iv) in self.intervals.iter().enumerate() {
            let total_net: f64 = iv.stations.iter().map(|s| s.net).sum();
            let exits: f64 = iv.stations.iter().enumerate().map(|(j, s)| s.departure * spec.p(j, k)).sum();
            if (total_net - (inflow - exits)).abs() > tol {
                out.push(format!("piece {m}: fluid not conserved ({total_net} vs {})", inflow - exits));
            }
            for (j, s) in iv.stations.iter().enumerate() {
                let frozen = iv.phase == Phase::Frozen && j == self.frozen_station;
                if s.departure < -tol || s.departure > cap[j] + tol {
                    out.push(format!("piece {m}: departure rate of station {} outside [0, 1/b]", j + 1));
                }
                if s.level > EMPTY_TOL && !frozen && (s.departure - cap[j]).abs() > tol {
                    out.push(format!("piece {m}: busy station {} not at full rate", j + 1));
                }
                if s.level <= EMPTY_TOL && s.net < -tol {
                    out.push(format!("piece {m}: empty station {} drains", j + 1));
                }
                if m + 1 < self.intervals.len() {
                    let next = self.intervals[m + 1].stations[j].level;
                    if (iv.level_at(j, iv.end) - next).abs() > 1e-9 {
                        out.push(format!("piece {m}: level of station {} jumps", j + 1));
                    }
                }
            }
        }
        for w in self.intervals.windows(2).filter(|w| w[0].phase != Phase::Frozen) {
            for j in 0..k {
                let (p, q) = (&w[0].stations[j], &w[1].stations[j]);
                if q.arrival > p.arrival + tol || q.departure > p.departure + tol {
                    out.push(format!("rates of station {} increase at t = {}", j + 1, w[1].start));
                }
            }
        }
        let drain_pieces = self.intervals.iter().filter(|iv| iv.phase == Phase::Interval2).count();
        if drain_pieces > k {
            out.push(format!("{drain_pieces} interval-2 pieces for {k} stations"));
        }
        if let Some(last) = self.intervals.last() {
            for j in 0..k {
                if last.level_at(j, last.end) > 1e-9 {
                    out.push(format!("station {} not empty at the end", j + 1));
                }
            }
        }
        out
    }

    /// Plain-text rendering: one line per piece and station.
    pub fn to_report(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "frozen station {} for {}", self.frozen_station + 1, self.frozen_duration);
        let _ = writeln!(s, "tau {:.12e}", self.tau);
        match self.u {
            Some(u) => {
                let _ = writeln!(s, "u {u:.12e}");
            }
            None => {
                let _ = writeln!(s, "u absent (beta_k = 0)");
            }
        }
        for iv in &self.intervals {
            let _ = writeln!(s, "{:?} [{:.12e}, {:.12e}]", iv.phase, iv.start, iv.end);
            for (j, st) in iv.stations.iter().enumerate() {
                let _ = writeln!(
                    s,
                    "  station {} level {:.12e} arrival {:.12e} departure {:.12e} net {:.12e}",
                    j + 1,
                    st.level,
                    st.arrival,
                    st.departure,
                    st.net
                );
            }
        }
        s
    }
}

/// Solves the flow balance where `fixed[j] = Some(d)` pins the departure
/// rate and `None` means `d_j = a_j`. Returns `(arrival, departure)`.
fn solve_rates(spec: &NetworkSpec, fixed: &[Option<f64>]) -> Result<(Vec<f64>, Vec<f64>)> {
    let k = spec.stations();
    let inflow = 1.0 / spec.arrival_mean();
    let free: Vec<usize> = (0..k).filter(|&j| fixed[j].is_none()).collect();
    let mut d: Vec<f64> = fixed.iter().map(|x| x.unwrap_or(0.0)).collect();
    if !free.is_empty() {
        let mut m = Matrix::identity(free.len());
        let mut rhs = vec![0.0; free.len()];
        for (r, &j) in free.iter().enumerate() {
            rhs[r] = spec.entry[j] * inflow + (0..k).filter_map(|l| fixed[l].map(|dl| spec.p(l, j) * dl)).sum::<f64>();
            for (c, &s) in free.iter().enumerate() {
                m[(r, c)] -= spec.p(s, j);
            }
        }
        let x = m.solve(&rhs).map_err(|e| Error::RoutingDegenerate(e.to_string()))?;
        for (&j, v) in free.iter().zip(x) {
            d[j] = v;
        }
    }
    let a = (0..k).map(|j| spec.entry[j] * inflow + (0..k).map(|l| spec.p(l, j) * d[l]).sum::<f64>()).collect();
    Ok((a, d))
}

fn flows(a: &[f64], d: &[f64], levels: &[f64]) -> Vec<StationFlow> {
    (0..a.len()).map(|j| StationFlow { level: levels[j], arrival: a[j], departure: d[j], net: a[j] - d[j] }).collect()
}

fn capacities(spec: &NetworkSpec) -> Vec<f64> {
    spec.service_means().iter().map(|b| 1.0 / b).collect()
}

fn require_stable(spec: &NetworkSpec) -> Result<()> {
    let (stable, margin) = stability_check(spec)?;
    if stable {
        Ok(())
    } else {
        Err(Error::Instability(format!("stability_check failed (margin {margin})")))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FrozenRates {
    pub arrival: Vec<f64>,
    pub departure: Vec<f64>,
    /// Level of the frozen station after one unit, `beta_k / a`.
    pub level_at_1: f64,
}

/// Rates while station `k` is switched off and all others are empty.
pub fn frozen_period_rates(spec: &NetworkSpec, k: usize) -> Result<FrozenRates> {
    let mut fixed = vec![None; spec.stations()];
    fixed[k] = Some(0.0);
    let (a, d) = solve_rates(spec, &fixed)?;
    let cap = capacities(spec);
    if let Some(j) = (0..a.len()).find(|&j| j != k && d[j] > cap[j] + EMPTY_TOL) {
        return Err(Error::Instability(format!("station {} overloaded while station {} is frozen", j + 1, k + 1)));
    }
    Ok(FrozenRates { level_at_1: a[k], arrival: a, departure: d })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FreeSet {
    /// Stations other than `k` that stay empty in interval 1.
    pub free: Vec<usize>,
    pub arrival: Vec<f64>,
    pub departure: Vec<f64>,
    /// `1/b_k - a_k`.
    pub drain_rate: f64,
    /// `a_l - 1/b_l` for growing stations, zero elsewhere.
    pub growth: Vec<f64>,
}

/// Rates while `k` drains at full speed.
pub fn interval1_free_set(spec: &NetworkSpec, k: usize) -> Result<FreeSet> {
    let n = spec.stations();
    let cap = capacities(spec);
    let mut in_free = vec![false; n];
    loop {
        let fixed: Vec<Option<f64>> = (0..n).map(|j| if in_free[j] { None } else { Some(cap[j]) }).collect();
        let (a, d) = solve_rates(spec, &fixed)?;
        let joining: Vec<usize> = (0..n).filter(|&l| l != k && !in_free[l] && a[l] <= cap[l] + EMPTY_TOL).collect();
        if joining.is_empty() {
            let drain_rate = cap[k] - a[k];
            if drain_rate <= 0.0 {
                return Err(Error::Instability(format!(
                    "station {} cannot drain in interval 1 (net rate {drain_rate})",
                    k + 1
                )));
            }
            let growth = (0..n).map(|l| if l == k || in_free[l] { 0.0 } else { a[l] - cap[l] }).collect();
            let free = (0..n).filter(|&l| in_free[l]).collect();
            return Ok(FreeSet { free, arrival: a, departure: d, drain_rate, growth });
        }
        for l in joining {
            in_free[l] = true;
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DrainPhase {
    pub subintervals: Vec<FluidInterval>,
    pub duration: f64,
}

/// Drains the remaining fluid after `k` has emptied, starting at `start`.
/// Stations at level zero (including `k`) stay empty from here on.
pub fn interval2_drain(spec: &NetworkSpec, k: usize, levels_at_start: &[f64], start: f64) -> Result<DrainPhase> {
    let n = spec.stations();
    let cap = capacities(spec);
    let mut levels = levels_at_start.to_vec();
    levels[k] = 0.0;
    let mut empty: Vec<bool> = levels.iter().map(|&q| q <= EMPTY_TOL).collect();
    let mut t = start;
    let mut pieces = Vec::new();
    while empty.iter().any(|e| !e) {
        if pieces.len() >= PIECES_PER_STATION * n {
            return Err(Error::Instability(format!("fluid did not drain within {} pieces", pieces.len())));
        }
        let fixed: Vec<Option<f64>> = (0..n).map(|j| if empty[j] { None } else { Some(cap[j]) }).collect();
        let (a, d) = solve_rates(spec, &fixed)?;
        if let Some(j) = (0..n).find(|&j| empty[j] && d[j] > cap[j] + EMPTY_TOL) {
            return Err(Error::Instability(format!("empty station {} would be overloaded", j + 1)));
        }
        let times: Vec<Option<f64>> = (0..n)
            .map(|j| {
                let drain = cap[j] - a[j];
                (!empty[j] && drain > EMPTY_TOL).then(|| levels[j] / drain)
            })
            .collect();
        let Some(dt) = times.iter().flatten().copied().reduce(f64::min) else {
            return Err(Error::Instability("fluid present but no station drains".into()));
        };
        pieces.push(FluidInterval { phase: Phase::Interval2, start: t, end: t + dt, stations: flows(&a, &d, &levels) });
        for j in 0..n {
            if empty[j] {
                continue;
            }
            if times[j].is_some_and(|tj| tj - dt <= EMPTY_TOL) {
                empty[j] = true;
                levels[j] = 0.0;
            } else {
                levels[j] = (levels[j] + (a[j] - d[j]) * dt).max(0.0);
                if levels[j] <= EMPTY_TOL {
                    empty[j] = true;
                    levels[j] = 0.0;
                }
            }
        }
        t += dt;
    }
    Ok(DrainPhase { subintervals: pieces, duration: t - start })
}

/// Fluid timeline for a unit freeze of station `k`.
pub fn solve_tau(spec: &NetworkSpec, k: usize) -> Result<FluidTimeline> {
    solve_tau_scaled(spec, k, 1.0)
}

/// Fluid timeline for a freeze of length `c`; every breakpoint scales by `c`.
pub fn solve_tau_scaled(spec: &NetworkSpec, k: usize, c: f64) -> Result<FluidTimeline> {
    if k >= spec.stations() {
        return Err(Error::Config(format!("station {} does not exist", k + 1)));
    }
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::Config(format!("frozen duration must be positive, got {c}")));
    }
    require_stable(spec)?;
    let n = spec.stations();
    let frozen = frozen_period_rates(spec, k)?;
    let zero = vec![0.0; n];
    let mut intervals = vec![FluidInterval {
        phase: Phase::Frozen,
        start: 0.0,
        end: c,
        stations: flows(&frozen.arrival, &frozen.departure, &zero),
    }];
    let level_k = frozen.level_at_1 * c;
    if level_k <= EMPTY_TOL {
        return Ok(FluidTimeline {
            frozen_station: k,
            frozen_duration: c,
            breakpoints: vec![0.0, c],
            intervals,
            free_set: Vec::new(),
            interval1: 0.0,
            interval2: 0.0,
            tau: 1.0,
            u: None,
        });
    }

    let fs = interval1_free_set(spec, k)?;
    let t1 = level_k / fs.drain_rate;
    let mut levels = zero;
    levels[k] = level_k;
    intervals.push(FluidInterval {
        phase: Phase::Interval1,
        start: c,
        end: c + t1,
        stations: flows(&fs.arrival, &fs.departure, &levels),
    });
    let after1: Vec<f64> = (0..n).map(|j| if j == k { 0.0 } else { fs.growth[j] * t1 }).collect();
    let drain = interval2_drain(spec, k, &after1, c + t1)?;
    intervals.extend(drain.subintervals);

    let mut breakpoints = vec![0.0];
    breakpoints.extend(intervals.iter().map(|iv| iv.end));
    let tau = (c + t1 + drain.duration) / c;
    Ok(FluidTimeline {
        frozen_station: k,
        frozen_duration: c,
        breakpoints,
        intervals,
        free_set: fs.free,
        interval1: t1 / c,
        interval2: drain.duration / c,
        tau,
        u: Some(1.0 / tau),
    })
}

/// `u_k` for every station; `None` where no fluid reaches `k`.
pub fn all_coefficients(spec: &NetworkSpec) -> Result<Vec<Option<f64>>> {
    (0..spec.stations()).map(|k| solve_tau(spec, k).map(|t| t.u)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::heavytail::DistSpec;
    use crate::network::tests::{tandem, two_station};
    use crate::network::visit_probabilities;

    fn mm1(rho: f64) -> NetworkSpec {
        NetworkSpec {
            arrival: DistSpec::Exponential { mean: 1.0 },
            services: vec![DistSpec::Exponential { mean: rho }],
            entry: vec![1.0],
            routing: vec![vec![0.0, 1.0]],
        }
    }

    #[test]
    fn single_station_closed_form() {
        for rho in [0.25, 0.5, 0.8] {
            let t = solve_tau(&mm1(rho), 0).unwrap();
            assert!((t.u.unwrap() - (1.0 - rho)).abs() < 1e-12);
            assert!(t.free_set.is_empty());
            assert_eq!(t.intervals.len(), 2);
            assert!(t.check(&mm1(rho)).is_empty());
        }
        let f = frozen_period_rates(&mm1(0.5), 0).unwrap();
        assert!((f.level_at_1 - 1.0).abs() < 1e-15);
    }

    #[test]
    fn frozen_level_is_visit_probability_over_a() {
        let spec = two_station(0.6, 0.3, 0.3, 2.0, 0.8, 0.7);
        let beta = visit_probabilities(&spec).unwrap();
        for k in 0..2 {
            let f = frozen_period_rates(&spec, k).unwrap();
            assert!((f.level_at_1 - beta[k] / 2.0).abs() < 1e-14);
        }
        // with p11 = p22 = 0: (p01 + p02 p21) / a
        assert!((frozen_period_rates(&spec, 0).unwrap().level_at_1 - (0.6 + 0.4 * 0.3) / 2.0).abs() < 1e-14);
    }

    #[test]
    fn unreachable_station_has_no_coefficient() {
        let mut spec = tandem(2.0, 1.0, 1.0);
        spec.routing[0] = vec![0.0, 0.0, 1.0];
        let t = solve_tau(&spec, 1).unwrap();
        assert_eq!((t.tau, t.u), (1.0, None));
        assert_eq!(all_coefficients(&spec).unwrap()[0], Some(0.5));
    }

    #[test]
    fn two_station_cases() {
        // station 2 has ample capacity: stays free during interval 1
        let spec = two_station(0.5, 0.3, 0.3, 2.0, 0.8, 0.2);
        let fs = interval1_free_set(&spec, 0).unwrap();
        assert_eq!(fs.free, vec![1]);
        let t = solve_tau(&spec, 0).unwrap();
        assert_eq!(t.interval2, 0.0);

        // station 2 slow: builds up fluid while station 1 drains
        let spec = two_station(0.5, 0.3, 0.3, 2.0, 0.6, 1.6);
        let fs = interval1_free_set(&spec, 0).unwrap();
        assert!(fs.free.is_empty());
        let gamma = 0.5 / 2.0 + 0.3 / 0.6 - 1.0 / 1.6;
        assert!((fs.growth[1] - gamma).abs() < 1e-14);
        let t = solve_tau(&spec, 0).unwrap();
        assert_eq!(t.intervals.iter().filter(|iv| iv.phase == Phase::Interval2).count(), 1);
        assert!(t.check(&spec).is_empty(), "{:?}", t.check(&spec));
    }

    #[test]
    fn scaling_is_linear() {
        let spec = two_station(0.5, 0.3, 0.3, 2.0, 0.6, 1.6);
        let base = solve_tau(&spec, 0).unwrap();
        for c in [0.5, 2.0] {
            let s = solve_tau_scaled(&spec, 0, c).unwrap();
            assert!((s.tau - base.tau).abs() < 1e-12);
            for (x, y) in s.breakpoints.iter().zip(&base.breakpoints) {
                assert!((x / c - y).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn unstable_spec_is_rejected() {
        assert!(matches!(solve_tau(&mm1(1.2), 0), Err(Error::Instability(_))));
    }

    #[test]
    fn report_lists_every_piece() {
        let spec = two_station(0.5, 0.3, 0.3, 2.0, 0.6, 1.6);
        let r = solve_tau(&spec, 0).unwrap().to_report();
        assert!(r.contains("Frozen") && r.contains("Interval1") && r.contains("Interval2"));
        assert_eq!(r.matches("station 2 level").count(), 3);
    }
}

//! Predicted busy-period tail and its regenerative Monte Carlo check.
//!
//! The prediction is
//! `P(B > x) ~ E nu_B * sum_k c_k E N_k G(u_k x)`
//! with `u_k` from the fluid solver and `c_k` from the heavy-tail profile.
//! Busy cycles are i.i.d. because the network regenerates every time it
//! empties, so the estimator simply counts cycles.
//!
//! Cycles are simulated in fixed-size blocks, each replication on its own
//! child stream, and block tallies are merged in block order. Results are
//! therefore bit-identical for any number of workers.

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fluid::all_coefficients;
use crate::heavytail::{hta_constants, DistSpec, HtaProfile};
use crate::network::{expected_visits, stability_check, validate, NetworkSpec};
use crate::rng::RandomStream;
use crate::sim::engine::Jump;
use crate::sim::ubq::{pilot_group_size, select_group_size};
use crate::sim::{run_cycle, SafetyCaps};
use crate::stats::{geometric_grid, wilson, Moments, RatioSums, Z95};

/// Replications per block of work.
pub const BLOCK: u64 = 4096;

/// Largest tolerated fraction of cycles hitting the safety caps.
pub const MAX_OVERFLOW_FRACTION: f64 = 1e-3;

/// Fewest exceedances the single-big-jump diagnostic reports on.
pub const MIN_PSBJ_EXCEEDANCES: u64 = 10;

/// Jump-size fractions tabulated by the diagnostic.
pub const EPS_GRID: [f64; 4] = [0.25, 0.5, 0.75, 0.9];

/// Stream child reserved for the group-size pilot.
const PILOT_CHILD: u64 = u64::MAX;

/// `E nu_B * sum_{c_k > 0} c_k E N_k G(u_k x)`, clamped to `[0, 1]`.
pub fn predicted_tail(spec: &NetworkSpec, profile: &HtaProfile, u: &[Option<f64>], e_nu: f64, x: f64) -> Result<f64> {
    let visits = expected_visits(spec)?;
    Ok((e_nu * prediction_sum(profile, u, &visits, x)?).clamp(0.0, 1.0))
}

fn prediction_sum(profile: &HtaProfile, u: &[Option<f64>], visits: &[f64], x: f64) -> Result<f64> {
    let mut s = 0.0;
    for (k, &c) in profile.c.iter().enumerate() {
        if c > 0.0 {
            let uk = u[k].ok_or_else(|| Error::Config(format!("c_{} > 0 but u_{} is absent", k + 1, k + 1)))?;
            s += c * visits[k] * profile.reference.tail(uk * x);
        }
    }
    Ok(s)
}

/// Everything needed to evaluate the prediction for one network.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Prediction {
    pub profile: HtaProfile,
    pub u: Vec<Option<f64>>,
    pub expected_visits: Vec<f64>,
}

impl Prediction {
    pub fn new(spec: &NetworkSpec, reference: &DistSpec) -> Result<Self> {
        Ok(Self {
            profile: hta_constants(spec, reference)?,
            u: all_coefficients(spec)?,
            expected_visits: expected_visits(spec)?,
        })
    }

    /// `sum_k c_k E N_k G(u_k x)`, without the `E nu_B` factor.
    pub fn per_cycle(&self, x: f64) -> f64 {
        prediction_sum(&self.profile, &self.u, &self.expected_visits, x).expect("u checked at construction")
    }

    pub fn rhs(&self, e_nu: f64, x: f64) -> f64 {
        (e_nu * self.per_cycle(x)).clamp(0.0, 1.0)
    }

    /// Smallest `u_k` over stations with `c_k > 0`.
    pub fn u_min(&self) -> f64 {
        self.profile
            .c
            .iter()
            .zip(&self.u)
            .filter(|(c, _)| **c > 0.0)
            .filter_map(|(_, u)| *u)
            .fold(f64::INFINITY, f64::min)
    }

    /// Geometric grid between the 90th and 99.99th percentiles of
    /// `G(u_min x)`.
    pub fn default_grid(&self, points: usize) -> Vec<f64> {
        let u = self.u_min();
        let g = &self.profile.reference;
        geometric_grid(g.inverse_tail(0.1) / u, g.inverse_tail(1e-4) / u, points)
    }
}

/// Knobs shared by the Monte Carlo drivers.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct McSettings {
    pub cycles: u64,
    pub caps: SafetyCaps,
    /// Thread count; `0` lets the pool decide.
    pub workers: usize,
    pub allow_bounded_arrivals: bool,
    /// Fixed UBQ group size `L`; `None` selects it by pilot.
    pub group_size: Option<usize>,
}

impl McSettings {
    pub fn new(cycles: u64) -> Self {
        Self { cycles, caps: SafetyCaps::default(), workers: 0, allow_bounded_arrivals: false, group_size: None }
    }
}

/// Structural, stability and support checks before any simulation.
pub fn check_simulable(spec: &NetworkSpec, allow_bounded_arrivals: bool) -> Result<()> {
    validate(spec).into_result()?;
    let (stable, margin) = stability_check(spec)?;
    if !stable {
        return Err(Error::Instability(format!("stability_check failed (margin {margin})")));
    }
    if !allow_bounded_arrivals && !spec.arrival.has_unbounded_support() {
        return Err(Error::BoundedArrivals(format!("{:?}", spec.arrival)));
    }
    Ok(())
}

/// Runs `work` on every block `[start, end)` of `0..total` and returns the
/// results in block order.
fn run_blocks<T, F>(total: u64, workers: usize, work: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(u64, u64) -> Result<T> + Sync,
{
    let blocks: Vec<(u64, u64)> =
        (0..total.div_ceil(BLOCK)).map(|b| (b * BLOCK, ((b + 1) * BLOCK).min(total))).collect();
    if workers == 1 {
        return blocks.iter().map(|&(s, e)| work(s, e)).collect();
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?;
    pool.install(|| blocks.par_iter().map(|&(s, e)| work(s, e)).collect())
}

/// Busy period, customer count and the two largest services of one cycle;
/// cycles that hit the caps report the partial values.
struct CycleSummary {
    busy: f64,
    customers: u64,
    largest: Option<Jump>,
    second: Option<Jump>,
    overflowed: bool,
}

fn summarize(spec: &NetworkSpec, stream: &RandomStream, caps: SafetyCaps) -> Result<CycleSummary> {
    match run_cycle(spec, stream, caps) {
        Ok(s) => Ok(CycleSummary {
            busy: s.busy_period,
            customers: s.customers,
            largest: s.max_jump,
            second: s.second_jump,
            overflowed: false,
        }),
        Err(Error::CycleOverflow { time, customers, .. }) => {
            Ok(CycleSummary { busy: time, customers, largest: None, second: None, overflowed: true })
        }
        Err(e) => Err(e),
    }
}

fn check_overflow(overflowed: u64, total: u64) -> Result<()> {
    if overflowed as f64 > MAX_OVERFLOW_FRACTION * total as f64 {
        Err(Error::OverflowRate { overflowed, total })
    } else {
        Ok(())
    }
}

#[derive(Clone, Debug)]
struct TailTally {
    nu: Moments,
    exceed: Vec<u64>,
    nu_exceed: Vec<f64>,
    overflowed: u64,
}

impl TailTally {
    fn new(points: usize) -> Self {
        Self { nu: Moments::default(), exceed: vec![0; points], nu_exceed: vec![0.0; points], overflowed: 0 }
    }

    fn merge(&mut self, o: &TailTally) {
        self.nu.merge(&o.nu);
        self.overflowed += o.overflowed;
        for i in 0..self.exceed.len() {
            self.exceed[i] += o.exceed[i];
            self.nu_exceed[i] += o.nu_exceed[i];
        }
    }
}

/// Empirical and predicted busy-period tail on a grid.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TailReport {
    pub xs: Vec<f64>,
    pub n_cycles: u64,
    pub overflowed: u64,
    pub exceedances: Vec<u64>,
    pub empirical: Vec<f64>,
    pub ci_lo: Vec<f64>,
    pub ci_hi: Vec<f64>,
    pub e_nu_hat: f64,
    pub e_nu_se: f64,
    pub e_nu_ci: (f64, f64),
    /// `None` when no prediction is available (see `theory_note`).
    pub theory: Option<Vec<f64>>,
    pub ratio: Option<Vec<Option<f64>>>,
    pub ratio_lo: Option<Vec<Option<f64>>>,
    pub ratio_hi: Option<Vec<Option<f64>>>,
    pub theory_note: Option<String>,
    pub prediction: Option<Prediction>,
}

fn cell(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

impl TailReport {
    /// Columns `x, empirical, ci_lo, ci_hi, theory, ratio`; missing values
    /// are empty cells.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("x,empirical,ci_lo,ci_hi,theory,ratio\n");
        for i in 0..self.xs.len() {
            let theory = self.theory.as_ref().map(|t| t[i]);
            let ratio = self.ratio.as_ref().and_then(|r| r[i]);
            s.push_str(&format!(
                "{},{},{},{},{},{}\n",
                self.xs[i],
                self.empirical[i],
                self.ci_lo[i],
                self.ci_hi[i],
                cell(theory),
                cell(ratio)
            ));
        }
        s
    }

    /// Grid index closest (in log scale) to where the prediction equals `p`.
    pub fn index_near_theory(&self, p: f64) -> Option<usize> {
        let t = self.theory.as_ref()?;
        (0..t.len()).filter(|&i| t[i] > 0.0).min_by(|&i, &j| {
            let di = (t[i].ln() - p.ln()).abs();
            let dj = (t[j].ln() - p.ln()).abs();
            di.total_cmp(&dj)
        })
    }
}

/// Estimates `P(B > x)` for every `x` in `xs` from `settings.cycles`
/// independent busy cycles and sets it against the prediction.
pub fn estimate_tail(
    spec: &NetworkSpec,
    reference: Option<&DistSpec>,
    xs: &[f64],
    settings: &McSettings,
    stream: &RandomStream,
) -> Result<TailReport> {
    check_simulable(spec, settings.allow_bounded_arrivals)?;
    if xs.windows(2).any(|w| !(w[1] > w[0])) || xs.iter().any(|x| !x.is_finite()) {
        return Err(Error::Config("tail grid must be finite and increasing".into()));
    }
    if settings.cycles < 2 {
        return Err(Error::Config("need at least two cycles".into()));
    }
    let prediction = match reference {
        None => Err("no reference tail given".to_string()),
        Some(r) => Prediction::new(spec, r).map_err(|e| e.to_string()),
    };

    let tallies = run_blocks(settings.cycles, settings.workers, |start, end| {
        let mut t = TailTally::new(xs.len());
        for i in start..end {
            let c = summarize(spec, &stream.child(i), settings.caps)?;
            let nu = c.customers as f64;
            t.nu.push(nu);
            t.overflowed += c.overflowed as u64;
            let above = xs.partition_point(|&x| x < c.busy);
            for j in 0..above {
                t.exceed[j] += 1;
                t.nu_exceed[j] += nu;
            }
        }
        Ok(t)
    })?;
    let mut tally = TailTally::new(xs.len());
    tallies.iter().for_each(|t| tally.merge(t));
    check_overflow(tally.overflowed, settings.cycles)?;

    let n = settings.cycles;
    let empirical: Vec<f64> = tally.exceed.iter().map(|&e| e as f64 / n as f64).collect();
    let (ci_lo, ci_hi): (Vec<f64>, Vec<f64>) = tally.exceed.iter().map(|&e| wilson(e, n, Z95)).unzip();
    let e_nu_hat = tally.nu.mean();
    let e_nu_se = tally.nu.std_error();

    let (mut theory, mut ratio, mut ratio_lo, mut ratio_hi, mut note, mut pred) = (None, None, None, None, None, None);
    match prediction {
        Err(e) => note = Some(e),
        Ok(p) => {
            let per_cycle: Vec<f64> = xs.iter().map(|&x| p.per_cycle(x)).collect();
            theory = Some(per_cycle.iter().map(|g| (e_nu_hat * g).clamp(0.0, 1.0)).collect());
            let mut r = Vec::new();
            let mut lo = Vec::new();
            let mut hi = Vec::new();
            for (j, &g) in per_cycle.iter().enumerate() {
                if !(g > 0.0) {
                    r.push(None);
                    lo.push(None);
                    hi.push(None);
                    continue;
                }
                let sums = RatioSums {
                    n,
                    y: tally.exceed[j] as f64,
                    y_sq: tally.exceed[j] as f64,
                    v: tally.nu.sum,
                    v_sq: tally.nu.sum_sq,
                    yv: tally.nu_exceed[j],
                };
                match sums.interval(Z95) {
                    Some((q, l, h)) => {
                        r.push(Some(q / g));
                        lo.push(Some(l / g));
                        hi.push(Some(h / g));
                    }
                    None => {
                        r.push(Some(0.0));
                        lo.push(Some(0.0));
                        hi.push(Some(ci_hi[j] / (e_nu_hat * g)));
                    }
                }
            }
            ratio = Some(r);
            ratio_lo = Some(lo);
            ratio_hi = Some(hi);
            pred = Some(p);
        }
    }

    Ok(TailReport {
        xs: xs.to_vec(),
        n_cycles: n,
        overflowed: tally.overflowed,
        exceedances: tally.exceed,
        empirical,
        ci_lo,
        ci_hi,
        e_nu_hat,
        e_nu_se,
        e_nu_ci: (e_nu_hat - Z95 * e_nu_se, e_nu_hat + Z95 * e_nu_se),
        theory,
        ratio,
        ratio_lo,
        ratio_hi,
        theory_note: note,
        prediction: pred,
    })
}

/// How often a single huge service explains a long busy period.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PsbjReport {
    pub x: f64,
    pub n_cycles: u64,
    pub exceedances: u64,
    pub eps: Vec<f64>,
    /// Fraction of exceedance cycles whose largest service `s` at station
    /// `k` satisfies `s >= eps u_k x`.
    pub single_jump: Vec<f64>,
    pub single_jump_ci: Vec<(f64, f64)>,
    pub c_u: f64,
    pub group_size: usize,
    /// Fraction of exceedance cycles with two services above `c_u x`.
    pub double_jump: f64,
    pub double_jump_ci: (f64, f64),
    /// Exceedance cycles per station of the largest service.
    pub jump_station: Vec<u64>,
}

impl PsbjReport {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("eps,threshold,single_jump,ci_lo,ci_hi\n");
        for (i, e) in self.eps.iter().enumerate() {
            s.push_str(&format!(
                "{},{},{},{},{}\n",
                e,
                e * self.x,
                self.single_jump[i],
                self.single_jump_ci[i].0,
                self.single_jump_ci[i].1
            ));
        }
        s
    }
}

#[derive(Clone, Debug)]
struct PsbjTally {
    exceed: u64,
    single: Vec<u64>,
    double: u64,
    station: Vec<u64>,
    overflowed: u64,
}

/// Among cycles with `B > x`, tabulates how large the largest service was
/// relative to `u_k x`, and how often two services exceeded `C_U x`.
pub fn psbj_diagnostic(
    spec: &NetworkSpec,
    u: &[Option<f64>],
    x: f64,
    settings: &McSettings,
    stream: &RandomStream,
) -> Result<PsbjReport> {
    check_simulable(spec, settings.allow_bounded_arrivals)?;
    if u.len() != spec.stations() {
        return Err(Error::Dimension { expected: spec.stations(), got: u.len() });
    }
    let choice = match settings.group_size {
        Some(l) if l >= 1 => pilot_group_size(spec, &stream.child(PILOT_CHILD), l)?,
        Some(_) => return Err(Error::Config("group size must be at least 1".into())),
        None => select_group_size(spec, &stream.child(PILOT_CHILD))?,
    };
    let k = spec.stations();
    let tallies = run_blocks(settings.cycles, settings.workers, |start, end| {
        let mut t =
            PsbjTally { exceed: 0, single: vec![0; EPS_GRID.len()], double: 0, station: vec![0; k], overflowed: 0 };
        for i in start..end {
            let c = summarize(spec, &stream.child(i), settings.caps)?;
            t.overflowed += c.overflowed as u64;
            if !(c.busy > x) {
                continue;
            }
            t.exceed += 1;
            if let Some(j) = c.largest {
                t.station[j.station] += 1;
                if let Some(uk) = u[j.station] {
                    for (e, count) in EPS_GRID.iter().zip(t.single.iter_mut()) {
                        *count += (j.value >= e * uk * x) as u64;
                    }
                }
            }
            if c.second.is_some_and(|s| s.value > choice.c_u * x) {
                t.double += 1;
            }
        }
        Ok(t)
    })?;
    let mut total =
        PsbjTally { exceed: 0, single: vec![0; EPS_GRID.len()], double: 0, station: vec![0; k], overflowed: 0 };
    for t in &tallies {
        total.exceed += t.exceed;
        total.double += t.double;
        total.overflowed += t.overflowed;
        for i in 0..EPS_GRID.len() {
            total.single[i] += t.single[i];
        }
        for i in 0..k {
            total.station[i] += t.station[i];
        }
    }
    check_overflow(total.overflowed, settings.cycles)?;
    if total.exceed < MIN_PSBJ_EXCEEDANCES {
        return Err(Error::InsufficientExceedances { observed: total.exceed, required: MIN_PSBJ_EXCEEDANCES });
    }
    let m = total.exceed;
    Ok(PsbjReport {
        x,
        n_cycles: settings.cycles,
        exceedances: m,
        eps: EPS_GRID.to_vec(),
        single_jump: total.single.iter().map(|&s| s as f64 / m as f64).collect(),
        single_jump_ci: total.single.iter().map(|&s| wilson(s, m, Z95)).collect(),
        c_u: choice.c_u,
        group_size: choice.group_size,
        double_jump: total.double as f64 / m as f64,
        double_jump_ci: wilson(total.double, m, Z95),
        jump_station: total.station,
    })
}

/// `P(S_gamma > x) / (E gamma G(x))` for a geometric number of i.i.d.
/// summands.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RandomSumTable {
    pub xs: Vec<f64>,
    pub mean_count: f64,
    pub reps: u64,
    pub probability: Vec<f64>,
    pub ratio: Vec<f64>,
    pub ratio_lo: Vec<f64>,
    pub ratio_hi: Vec<f64>,
}

/// Monte Carlo of the random-sum tail with `gamma` geometric on `{1, 2, ..}`
/// with mean `mean_count`.
pub fn random_sum_oracle(
    dist: &DistSpec,
    mean_count: f64,
    reps: u64,
    xs: &[f64],
    workers: usize,
    stream: &RandomStream,
) -> Result<RandomSumTable> {
    dist.validate()?;
    if !(mean_count >= 1.0 && mean_count.is_finite()) {
        return Err(Error::Config(format!("geometric mean must be at least 1, got {mean_count}")));
    }
    let p = 1.0 / mean_count;
    let log_q = (1.0 - p).ln();
    let counts = run_blocks(reps, workers, |start, end| {
        let mut rng = stream.child(start / BLOCK).generator(0);
        let mut c = vec![0u64; xs.len()];
        for _ in start..end {
            let gamma = if p >= 1.0 { 1 } else { 1 + (rng.random::<f64>().ln() / log_q).floor() as u64 };
            let s: f64 = (0..gamma).map(|_| dist.sample(&mut rng)).sum();
            for (ci, &x) in c.iter_mut().zip(xs) {
                *ci += (s > x) as u64;
            }
        }
        Ok(c)
    })?;
    let mut total = vec![0u64; xs.len()];
    for c in &counts {
        for (t, v) in total.iter_mut().zip(c) {
            *t += v;
        }
    }
    let scale: Vec<f64> = xs.iter().map(|&x| mean_count * dist.tail(x)).collect();
    let probability: Vec<f64> = total.iter().map(|&c| c as f64 / reps as f64).collect();
    let (lo, hi): (Vec<f64>, Vec<f64>) = total.iter().map(|&c| wilson(c, reps, Z95)).unzip();
    Ok(RandomSumTable {
        xs: xs.to_vec(),
        mean_count,
        reps,
        ratio: probability.iter().zip(&scale).map(|(p, s)| p / s).collect(),
        ratio_lo: lo.iter().zip(&scale).map(|(p, s)| p / s).collect(),
        ratio_hi: hi.iter().zip(&scale).map(|(p, s)| p / s).collect(),
        probability,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::tests::two_station;

    fn mg1(a: f64, service: DistSpec) -> NetworkSpec {
        NetworkSpec {
            arrival: DistSpec::Exponential { mean: a },
            services: vec![service],
            entry: vec![1.0],
            routing: vec![vec![0.0, 1.0]],
        }
    }

    #[test]
    fn single_station_rhs() {
        let g = DistSpec::ShiftedPareto { alpha: 1.5, scale: 0.5 };
        let spec = mg1(2.0, g);
        let profile = hta_constants(&spec, &g).unwrap();
        let v = predicted_tail(&spec, &profile, &[Some(0.5)], 2.0, 10.0).unwrap();
        assert!((v - 2.0 * 11f64.powf(-1.5)).abs() < 1e-15);
        assert!(matches!(predicted_tail(&spec, &profile, &[None], 2.0, 10.0), Err(Error::Config(_))));
    }

    #[test]
    fn rhs_is_linear_and_power_law() {
        let mut spec = two_station(0.5, 0.3, 0.3, 1.0, 0.3, 0.3);
        spec.services = vec![DistSpec::Pareto { alpha: 1.5, xm: 0.1 }, DistSpec::Pareto { alpha: 1.5, xm: 0.2 }];
        let g = DistSpec::Pareto { alpha: 1.5, xm: 1.0 };
        let p = Prediction::new(&spec, &g).unwrap();
        let (x, e) = (50.0, 1e-3);
        assert!((p.rhs(2.0 * e, x) - 2.0 * p.rhs(e, x)).abs() < 1e-15);
        let ratio = p.per_cycle(2.0 * x) / p.per_cycle(x);
        assert!((ratio - 2f64.powf(-1.5)).abs() < 1e-12);
    }

    #[test]
    fn zero_constant_station_contributes_nothing() {
        let mut spec = two_station(0.5, 0.3, 0.3, 1.0, 0.3, 0.3);
        spec.services[0] = DistSpec::ShiftedPareto { alpha: 1.5, scale: 0.15 };
        let g = DistSpec::ShiftedPareto { alpha: 1.5, scale: 0.15 };
        let p = Prediction::new(&spec, &g).unwrap();
        assert_eq!(p.profile.c[1], 0.0);
        let only_first = p.profile.c[0] * p.expected_visits[0] * g.tail(p.u[0].unwrap() * 30.0);
        assert_eq!(p.per_cycle(30.0), only_first);
    }

    #[test]
    fn empirical_tail_is_survival_function() {
        let spec = mg1(2.0, DistSpec::ShiftedPareto { alpha: 1.5, scale: 0.5 });
        let g = DistSpec::ShiftedPareto { alpha: 1.5, scale: 0.5 };
        let xs = [0.0, 0.5, 1.0, 5.0, 20.0];
        let r = estimate_tail(&spec, Some(&g), &xs, &McSettings::new(5000), &RandomStream::new(1)).unwrap();
        assert_eq!(r.empirical[0], 1.0);
        assert!(r.empirical.windows(2).all(|w| w[1] <= w[0]));
        assert!(r.theory.as_ref().unwrap().windows(2).all(|w| w[1] <= w[0]));
        assert!(r.to_csv().lines().count() == xs.len() + 1);
    }

    #[test]
    fn results_do_not_depend_on_workers() {
        let spec = mg1(2.0, DistSpec::ShiftedPareto { alpha: 1.5, scale: 0.5 });
        let g = DistSpec::ShiftedPareto { alpha: 1.5, scale: 0.5 };
        let xs = [1.0, 10.0];
        let mut s = McSettings::new(3 * BLOCK + 17);
        s.workers = 1;
        let a = estimate_tail(&spec, Some(&g), &xs, &s, &RandomStream::new(8)).unwrap();
        s.workers = 3;
        let b = estimate_tail(&spec, Some(&g), &xs, &s, &RandomStream::new(8)).unwrap();
        assert_eq!(a.to_csv(), b.to_csv());
        assert_eq!(a.e_nu_hat.to_bits(), b.e_nu_hat.to_bits());
    }

    #[test]
    fn light_tailed_spec_has_no_theory() {
        let spec = mg1(2.0, DistSpec::Deterministic { value: 1.0 });
        let g = DistSpec::Pareto { alpha: 1.5, xm: 1.0 };
        let r = estimate_tail(&spec, Some(&g), &[0.5, 3.0], &McSettings::new(1000), &RandomStream::new(2)).unwrap();
        assert!(r.theory.is_none() && r.theory_note.is_some());
        assert_eq!(r.empirical[0], 1.0);
        assert!(r.to_csv().lines().nth(1).unwrap().ends_with(",,"));
    }

    #[test]
    fn bounded_arrivals_need_override() {
        let mut spec = mg1(2.0, DistSpec::Exponential { mean: 1.0 });
        spec.arrival = DistSpec::Uniform { lo: 1.0, hi: 3.0 };
        let err = estimate_tail(&spec, None, &[1.0], &McSettings::new(100), &RandomStream::new(0)).unwrap_err();
        assert!(matches!(err, Error::BoundedArrivals(_)));
        let mut s = McSettings::new(100);
        s.allow_bounded_arrivals = true;
        assert!(estimate_tail(&spec, None, &[1.0], &s, &RandomStream::new(0)).is_ok());
    }

    #[test]
    fn random_sum_degenerate_rows() {
        let d = DistSpec::Pareto { alpha: 1.5, xm: 1.0 };
        let t = random_sum_oracle(&d, 5.0, 10_000, &[0.0], 1, &RandomStream::new(3)).unwrap();
        assert!((t.ratio[0] - 0.2).abs() < 1e-15);
        let t = random_sum_oracle(&d, 1.0, 20_000, &[2.0, 5.0], 1, &RandomStream::new(3)).unwrap();
        for (i, x) in [2.0f64, 5.0].iter().enumerate() {
            assert!((t.ratio[i] - 1.0).abs() < 4.0 * ((1.0 / d.tail(*x)) / 20_000.0).sqrt(), "{:?}", t.ratio);
        }
    }

    #[test]
    fn psbj_needs_exceedances() {
        let spec = mg1(2.0, DistSpec::ShiftedPareto { alpha: 1.5, scale: 0.5 });
        let err = psbj_diagnostic(&spec, &[Some(0.5)], 1e9, &McSettings::new(500), &RandomStream::new(0)).unwrap_err();
        assert!(matches!(err, Error::InsufficientExceedances { observed: 0, required: 10 }));
    }
}

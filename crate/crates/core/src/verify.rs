//! Sample-path property suite: monotonicity under service edits,
//! invariance of service counts under arrival moves, and the extended
//! busy-period and auxiliary-model bounds, each counted over many coupled
//! trials on one network.

use rand::Rng;
use serde::Serialize;

use crate::asymptotics::check_simulable;
use crate::error::{Error, Result};
use crate::network::NetworkSpec;
use crate::rng::RandomStream;
use crate::sim::auxiliary::{aux_models, run_isolation_on_tape};
use crate::sim::perturb::{coupled_perturbation, finite_arrival_service_counts, TapeEdit};
use crate::sim::ubq::{pilot_group_size, run_ubq_extended, select_group_size};
use crate::sim::{run_cycle_on_tape, InfrastructureTape, SafetyCaps};

/// Property names in report order.
pub const PROPERTIES: [&str; 8] = [
    "inflated_service_schedule_monotone",
    "delayed_service_schedule_monotone",
    "cycle_monotone_under_service_edits",
    "service_counts_invariant_under_arrival_moves",
    "busy_period_below_extended_bound",
    "customers_below_group_bound",
    "saturated_group_sandwich",
    "constrained_group_sandwich",
];

const CHOICE_CHILD: u64 = u64::MAX - 1;
const PILOT_CHILD: u64 = u64::MAX;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PropertyCount {
    pub name: String,
    pub passed: u64,
    pub trials: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VerifyReport {
    pub trials: u64,
    pub group_size: usize,
    pub properties: Vec<PropertyCount>,
}

impl VerifyReport {
    pub fn failures(&self) -> u64 {
        self.properties.iter().map(|p| p.trials - p.passed).sum()
    }
}

/// Runs `trials` coupled trials on `spec`; trial `i` replays the tape of
/// `stream.child(i)`.
pub fn verify_sample_paths(
    spec: &NetworkSpec,
    trials: u64,
    group_size: Option<usize>,
    caps: SafetyCaps,
    allow_bounded_arrivals: bool,
    stream: &RandomStream,
) -> Result<VerifyReport> {
    check_simulable(spec, allow_bounded_arrivals)?;
    if trials == 0 {
        return Err(Error::Config("need at least one trial".into()));
    }
    let l = match group_size {
        Some(0) => return Err(Error::Config("group size must be at least 1".into())),
        Some(l) => pilot_group_size(spec, &stream.child(PILOT_CHILD), l)?.group_size,
        None => select_group_size(spec, &stream.child(PILOT_CHILD))?.group_size,
    };
    let mut r = stream.child(CHOICE_CHILD).generator(0);
    let mut passed = [0u64; PROPERTIES.len()];
    let mut tally = |i: usize, ok: bool| passed[i] += ok as u64;

    for t in 0..trials {
        let mut tape = InfrastructureTape::new(spec, &stream.child(t));
        let base = run_cycle_on_tape(&mut tape, caps)?;

        let used: Vec<usize> = (0..spec.stations()).filter(|&k| base.service_counts[k] > 0).collect();
        let k = used[r.random_range(0..used.len())];
        let index = r.random_range(0..base.service_counts[k] as usize);
        let by = -spec.services[k].mean() * (1.0 - r.random::<f64>()).ln();
        let inflated = coupled_perturbation(&tape, &[TapeEdit::InflateService { station: k, index, by }], caps)?;
        let delayed = coupled_perturbation(&tape, &[TapeEdit::DelayService { station: k, index, delay: by }], caps)?;
        tally(0, inflated.schedule_monotone());
        tally(1, delayed.schedule_monotone());
        tally(2, inflated.cycle_monotone() && delayed.cycle_monotone());

        let n = r.random_range(1..=30);
        let horizon = 2.0 * n as f64 * spec.arrival_mean();
        let original: Vec<f64> = (0..n).map(|c| tape.arrival_time(c)).collect();
        let moved: Vec<f64> = (0..n).map(|_| horizon * r.random::<f64>()).collect();
        let a = finite_arrival_service_counts(&mut tape.clone(), &original)?;
        let b = finite_arrival_service_counts(&mut tape.clone(), &moved)?;
        tally(3, a == b);

        let u = run_ubq_extended(&mut tape, l)?;
        tally(4, base.busy_period <= u.extended_bound);
        tally(5, base.customers as usize <= u.customer_bound());

        let first = &run_isolation_on_tape(&mut tape, 1)?[0];
        let m = aux_models(&mut tape, l)?;
        let kf = spec.stations() as f64;
        let max_k = m.per_station_service.iter().copied().fold(0.0, f64::max);
        let eps = 1e-9 * (1.0 + m.total_service + m.arrival_span);
        let lower = (0..spec.stations())
            .filter(|&j| first.counts[j] >= 1)
            .all(|j| base.busy_period >= tape.service(j, 0) && base.service_counts[j] >= first.counts[j]);
        tally(
            6,
            lower
                && m.total_service / kf <= max_k + eps
                && max_k <= m.saturated + eps
                && m.saturated <= m.total_service + eps,
        );
        tally(7, m.saturated <= m.constrained + eps && m.constrained <= m.arrival_span + m.saturated + eps);
    }

    Ok(VerifyReport {
        trials,
        group_size: l,
        properties: PROPERTIES
            .iter()
            .zip(passed)
            .map(|(name, passed)| PropertyCount { name: name.to_string(), passed, trials })
            .collect(),
    })
}

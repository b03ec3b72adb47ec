//! Coupled re-runs on edited tapes, used to check the sample-path
//! monotonicity and invariance properties.

use super::engine::{Arrivals, Run, RunOutcome, SafetyCaps, ServiceDelay, StopRule};
use super::tape::InfrastructureTape;
use crate::error::Result;
use crate::heavytail::DistSpec;
use crate::network::NetworkSpec;
use crate::rng::RandomStream;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum TapeEdit {
    /// Adds `by >= 0` to service `index` at `station`.
    InflateService { station: usize, index: usize, by: f64 },
    /// Replaces the gap before `customer` (shifts all later arrivals).
    SetGap { customer: usize, gap: f64 },
    /// Holds service `index` at `station` for `delay` before it starts.
    DelayService { station: usize, index: usize, delay: f64 },
}

/// Base and edited busy cycles with full schedules.
#[derive(Clone, Debug)]
pub struct PairedSchedules {
    pub base: RunOutcome,
    pub edited: RunOutcome,
}

impl PairedSchedules {
    /// Every `I_{k,l}` and `D_{k,l}` present in both runs is weakly larger
    /// after the edit.
    pub fn schedule_monotone(&self) -> bool {
        let (a, b) = (self.base.schedule.as_ref().unwrap(), self.edited.schedule.as_ref().unwrap());
        a.iter().zip(b).all(|(sa, sb)| sa.iter().zip(sb).all(|(x, y)| y.start >= x.start && y.finish >= x.finish))
    }

    /// `B` and `nu_B` weakly larger after the edit.
    pub fn cycle_monotone(&self) -> bool {
        let b = |o: &RunOutcome| o.end_time - o.start_time;
        b(&self.edited) >= b(&self.base) && self.edited.customers >= self.base.customers
    }

    pub fn busy_period_change(&self) -> f64 {
        (self.edited.end_time - self.edited.start_time) - (self.base.end_time - self.base.start_time)
    }
}

/// Runs the busy cycle on `tape` and on a copy with `edits` applied.
pub fn coupled_perturbation(
    tape: &InfrastructureTape<'_>,
    edits: &[TapeEdit],
    caps: SafetyCaps,
) -> Result<PairedSchedules> {
    let mut base_tape = tape.clone();
    let base = Run::new(&mut base_tape).stop(StopRule::BusyPeriod).caps(caps).record(true).execute()?;

    let mut edited_tape = tape.clone();
    let mut delays = Vec::new();
    for e in edits {
        match *e {
            TapeEdit::InflateService { station, index, by } => {
                let v = edited_tape.service(station, index);
                edited_tape.set_service(station, index, v + by);
            }
            TapeEdit::SetGap { customer, gap } => edited_tape.set_gap(customer, gap),
            TapeEdit::DelayService { station, index, delay } => delays.push(ServiceDelay { station, index, delay }),
        }
    }
    let edited =
        Run::new(&mut edited_tape).stop(StopRule::BusyPeriod).caps(caps).record(true).delays(delays).execute()?;
    Ok(PairedSchedules { base, edited })
}

/// Per-station service counts when exactly the given customers arrive at
/// the given (finite) times and nobody else ever does.
pub fn finite_arrival_service_counts(tape: &mut InfrastructureTape<'_>, times: &[f64]) -> Result<Vec<u64>> {
    let mut schedule: Vec<(f64, usize)> = times.iter().copied().zip(0..).collect();
    schedule.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)));
    let out = Run::new(tape)
        .arrivals(Arrivals::Schedule(schedule))
        .stop(StopRule::Drain)
        .caps(SafetyCaps { max_events: u64::MAX, max_time: f64::INFINITY })
        .execute()?;
    Ok(out.services)
}

/// A deterministic tandem where moving one arrival later shortens the busy
/// period: `(B before, B after)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NonMonotonicityWitness {
    pub busy_before: f64,
    pub busy_after: f64,
    pub arrival_before: f64,
    pub arrival_after: f64,
}

/// Unit services in tandem; customer 2 arrives at 1.5 (while customer 1
/// is still at station 2) versus at 2.5 (after the network emptied).
pub fn arrival_non_monotonicity_witness() -> Result<NonMonotonicityWitness> {
    let spec = NetworkSpec {
        arrival: DistSpec::Deterministic { value: 1.0 },
        services: vec![DistSpec::Deterministic { value: 1.0 }; 2],
        entry: vec![1.0, 0.0],
        routing: vec![vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0]],
    };
    let busy = |t2: f64| -> Result<f64> {
        let mut tape = InfrastructureTape::new(&spec, &RandomStream::new(0));
        let out = Run::new(&mut tape)
            .arrivals(Arrivals::Schedule(vec![(0.0, 0), (t2, 1)]))
            .stop(StopRule::BusyPeriod)
            .execute()?;
        Ok(out.end_time - out.start_time)
    };
    let (arrival_before, arrival_after) = (1.5, 2.5);
    Ok(NonMonotonicityWitness {
        busy_before: busy(arrival_before)?,
        busy_after: busy(arrival_after)?,
        arrival_before,
        arrival_after,
    })
}

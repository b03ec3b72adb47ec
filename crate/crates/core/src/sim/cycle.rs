use serde::Serialize;

use super::engine::{Arrivals, Jump, Run, RunOutcome, SafetyCaps, StopRule};
use super::tape::InfrastructureTape;
use crate::error::Result;
use crate::network::NetworkSpec;
use crate::rng::RandomStream;

/// One regeneration cycle: from an arrival into an empty network until the
/// network is next empty before the following arrival.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BusyCycleSample {
    /// Busy-period length `B`.
    pub busy_period: f64,
    /// Customers served, `nu_B`.
    pub customers: u64,
    /// Largest single service consumed.
    pub max_jump: Option<Jump>,
    /// Runner-up, for the double-jump diagnostic.
    pub second_jump: Option<Jump>,
    pub service_counts: Vec<u64>,
    /// Extended-busy-period bound `U`, when computed.
    pub extended_bound: Option<f64>,
}

impl BusyCycleSample {
    pub(crate) fn from_outcome(out: &RunOutcome) -> Self {
        Self {
            busy_period: out.end_time - out.start_time,
            customers: out.customers,
            max_jump: out.largest,
            second_jump: out.second_largest,
            service_counts: out.services.clone(),
            extended_bound: None,
        }
    }
}

/// Runs one busy cycle on a fresh tape drawn from `stream`.
pub fn run_cycle(spec: &NetworkSpec, stream: &RandomStream, caps: SafetyCaps) -> Result<BusyCycleSample> {
    let mut tape = InfrastructureTape::new(spec, stream);
    run_cycle_on_tape(&mut tape, caps)
}

pub fn run_cycle_on_tape(tape: &mut InfrastructureTape<'_>, caps: SafetyCaps) -> Result<BusyCycleSample> {
    let out = Run::new(tape).arrivals(Arrivals::Tape).stop(StopRule::BusyPeriod).caps(caps).execute()?;
    Ok(BusyCycleSample::from_outcome(&out))
}

/// Like [`run_cycle_on_tape`] but keeps the full service schedule.
pub fn run_cycle_recorded(tape: &mut InfrastructureTape<'_>, caps: SafetyCaps) -> Result<RunOutcome> {
    Run::new(tape).arrivals(Arrivals::Tape).stop(StopRule::BusyPeriod).caps(caps).record(true).execute()
}

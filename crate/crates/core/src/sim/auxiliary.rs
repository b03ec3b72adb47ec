//! Auxiliary models replayed on the same tape: the isolation model
//! (customer-associated view), saturated group-`L` runs and the
//! `L`-constrained network.

use serde::Serialize;

use super::engine::{Arrivals, Run, SafetyCaps, StopRule};
use super::tape::InfrastructureTape;
use crate::error::{Error, Result};
use crate::network::NetworkSpec;
use crate::rng::RandomStream;

/// Guard on the length of a single routing walk.
pub const MAX_WALK: u64 = 1_000_000_000;

/// Services and links brought by one customer in the isolation model.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CustomerBlock {
    pub entry: usize,
    /// `(station, tape index)` of each service in visiting order.
    pub visits: Vec<(usize, usize)>,
    /// `N_{n,k}`.
    pub counts: Vec<u64>,
    /// Total service content `S~_n`.
    pub total_service: f64,
}

/// Walks customers through the network one at a time, mapping the
/// customer-associated blocks onto tape positions. The cursor after
/// customer `n` is `V_{n,k} = sum_{i<=n} N_{i,k}`.
#[derive(Clone, Debug)]
pub struct IsolationWalker {
    next_customer: usize,
    cursor: Vec<usize>,
}

impl IsolationWalker {
    pub fn new(stations: usize) -> Self {
        Self { next_customer: 0, cursor: vec![0; stations] }
    }

    pub fn cursor(&self) -> &[usize] {
        &self.cursor
    }

    pub fn next_customer(&self) -> usize {
        self.next_customer
    }

    pub fn walk(&mut self, tape: &mut InfrastructureTape<'_>) -> Result<CustomerBlock> {
        let k = tape.spec().stations();
        let entry = tape.entry_station(self.next_customer);
        self.next_customer += 1;
        let mut block = CustomerBlock { entry, visits: Vec::new(), counts: vec![0; k], total_service: 0.0 };
        let mut at = entry;
        let mut steps = 0u64;
        while at < k {
            steps += 1;
            if steps > MAX_WALK {
                return Err(Error::Divergence(format!("routing walk exceeded {MAX_WALK} steps")));
            }
            let idx = self.cursor[at];
            self.cursor[at] += 1;
            block.total_service += tape.service(at, idx);
            block.counts[at] += 1;
            block.visits.push((at, idx));
            at = tape.route(at, idx);
        }
        Ok(block)
    }
}

/// Isolation model for `n` customers on a fresh tape.
pub fn run_isolation(spec: &NetworkSpec, stream: &RandomStream, n: usize) -> Result<Vec<CustomerBlock>> {
    let mut tape = InfrastructureTape::new(spec, stream);
    run_isolation_on_tape(&mut tape, n)
}

pub fn run_isolation_on_tape(tape: &mut InfrastructureTape<'_>, n: usize) -> Result<Vec<CustomerBlock>> {
    let mut walker = IsolationWalker::new(tape.spec().stations());
    (0..n).map(|_| walker.walk(tape)).collect()
}

/// One saturated group: `L` customers released together into an empty
/// network with all later customers held back.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GroupRun {
    /// `X^0` for the group.
    pub time_to_empty: f64,
    /// Per-station service content consumed, `S^{(k)}`.
    pub work: Vec<f64>,
    pub services: Vec<u64>,
    /// Station cursors after the group.
    pub cursor_end: Vec<usize>,
}

impl GroupRun {
    pub fn total_work(&self) -> f64 {
        self.work.iter().sum()
    }
}

/// Runs the saturated group of customers `first..first+size` with station
/// cursors starting at `cursor`.
pub fn saturated_group(
    tape: &mut InfrastructureTape<'_>,
    first: usize,
    size: usize,
    cursor: Vec<usize>,
) -> Result<GroupRun> {
    let schedule = (first..first + size).map(|c| (0.0, c)).collect();
    let out = Run::new(tape)
        .arrivals(Arrivals::Schedule(schedule))
        .stop(StopRule::Drain)
        .caps(SafetyCaps { max_events: u64::MAX, max_time: f64::INFINITY })
        .start_cursor(cursor)
        .execute()?;
    Ok(GroupRun { time_to_empty: out.end_time, work: out.work, services: out.services, cursor_end: out.cursor })
}

/// Consecutive saturated groups `m = 1..=groups` of size `l`.
pub fn run_saturated_group(tape: &mut InfrastructureTape<'_>, l: usize, groups: usize) -> Result<Vec<GroupRun>> {
    assert!(l >= 1, "group size must be positive");
    let mut cursor = vec![0; tape.spec().stations()];
    let mut out = Vec::with_capacity(groups);
    for m in 0..groups {
        let g = saturated_group(tape, m * l, l, cursor)?;
        cursor = g.cursor_end.clone();
        out.push(g);
    }
    Ok(out)
}

/// `X_{1,L}`: customers `0..l` at their tape arrival times, none later.
pub fn l_constrained(tape: &mut InfrastructureTape<'_>, l: usize) -> Result<f64> {
    let out = Run::new(tape)
        .arrivals(Arrivals::TapePrefix(l))
        .stop(StopRule::Drain)
        .caps(SafetyCaps { max_events: u64::MAX, max_time: f64::INFINITY })
        .execute()?;
    Ok(out.end_time - out.start_time)
}

/// Maximal daters and service content for the first `L` customers.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AuxModelResult {
    /// `X^0_{1,L}`.
    pub saturated: f64,
    /// `S_{1,L}`.
    pub total_service: f64,
    /// `S^{(k)}_{1,L}`.
    pub per_station_service: Vec<f64>,
    /// `X_{1,L}`.
    pub constrained: f64,
    /// `T_L - T_1`.
    pub arrival_span: f64,
}

pub fn aux_models(tape: &mut InfrastructureTape<'_>, l: usize) -> Result<AuxModelResult> {
    let k = tape.spec().stations();
    let blocks = run_isolation_on_tape(tape, l)?;
    let mut per_station = vec![0.0; k];
    for b in &blocks {
        for &(st, idx) in &b.visits {
            per_station[st] += tape.service(st, idx);
        }
    }
    let group = saturated_group(tape, 0, l, vec![0; k])?;
    let constrained = l_constrained(tape, l)?;
    Ok(AuxModelResult {
        saturated: group.time_to_empty,
        total_service: blocks.iter().map(|b| b.total_service).sum(),
        per_station_service: per_station,
        constrained,
        arrival_span: tape.arrival_time(l - 1) - tape.arrival_time(0),
    })
}

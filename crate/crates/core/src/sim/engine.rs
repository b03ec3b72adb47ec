//! Event-driven FIFO network engine driven by an [`InfrastructureTape`].
//!
//! Simultaneous events are ordered departures first, then by station, then
//! by sequence number. Every model in this crate (busy cycles, saturated
//! groups, the L-constrained model, perturbed re-runs) is a particular
//! choice of arrival plan, start cursors and stopping rule.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, VecDeque};

use serde::{Deserialize, Serialize};

use super::tape::InfrastructureTape;
use crate::error::{Error, Result};

/// Schema version of [`TraceRecord`] lines.
pub const TRACE_SCHEMA_VERSION: u32 = 1;

/// Per-run guards against runaway cycles.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SafetyCaps {
    pub max_events: u64,
    pub max_time: f64,
}

impl Default for SafetyCaps {
    fn default() -> Self {
        Self { max_events: 10_000_000, max_time: 1e8 }
    }
}

/// Where exogenous customers come from.
#[derive(Clone, Debug)]
pub enum Arrivals {
    /// Customers `0, 1, 2, ...` at their tape arrival times.
    Tape,
    /// Customers `0..n` at their tape arrival times, none afterwards.
    TapePrefix(usize),
    /// Explicit `(time, tape customer index)` pairs in non-decreasing time.
    Schedule(Vec<(f64, usize)>),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum StopRule {
    /// Stop the first time the network empties.
    BusyPeriod,
    /// Stop once every scheduled customer has left.
    Drain,
    /// Run until the given time.
    Horizon(f64),
}

/// Holds service number `index` (0-based, per station) at `station` for
/// `delay` before it may start.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ServiceDelay {
    pub station: usize,
    pub index: usize,
    pub delay: f64,
}

/// One service: start `I_{k,l}` and finish `D_{k,l}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ServiceRecord {
    pub start: f64,
    pub finish: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Jump {
    pub station: usize,
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub v: u32,
    pub time: f64,
    pub kind: String,
    pub station: usize,
    pub queue_lengths: Vec<usize>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct RunOutcome {
    pub start_time: f64,
    /// Busy-period end, drain time, or the horizon.
    pub end_time: f64,
    pub customers: u64,
    pub departed: u64,
    pub events: u64,
    /// Services rendered per station.
    pub services: Vec<u64>,
    /// Sum of service durations consumed per station.
    pub work: Vec<f64>,
    /// Time each server spent between service start and finish.
    pub busy_time: Vec<f64>,
    /// Station cursors after the run.
    pub cursor: Vec<usize>,
    pub largest: Option<Jump>,
    pub second_largest: Option<Jump>,
    /// Under [`StopRule::Horizon`]: whether the network was ever empty
    /// strictly after the first arrival.
    pub emptied: bool,
    /// Per-station service records, when requested; entry `l` is the
    /// service with index `start_cursor[k] + l`.
    pub schedule: Option<Vec<Vec<ServiceRecord>>>,
    /// `(customer, departure time)` in departure order, when requested.
    pub departures: Option<Vec<(usize, f64)>>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
enum Kind {
    Departure = 0,
    Arrival = 1,
}

#[derive(Clone, Copy, Debug)]
struct Event {
    time: f64,
    kind: Kind,
    station: usize,
    seq: u64,
}

impl PartialEq for Event {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Event {}
impl PartialOrd for Event {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Event {
    // reversed so that BinaryHeap pops the earliest event
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .time
            .total_cmp(&self.time)
            .then(other.kind.cmp(&self.kind))
            .then(other.station.cmp(&self.station))
            .then(other.seq.cmp(&self.seq))
    }
}

#[derive(Clone, Copy, Debug)]
struct InService {
    customer: usize,
    index: usize,
    start: f64,
    sigma: f64,
}

/// Builder for one engine run over a tape.
pub struct Run<'t, 'a> {
    tape: &'t mut InfrastructureTape<'a>,
    arrivals: Arrivals,
    stop: StopRule,
    caps: SafetyCaps,
    cursor: Option<Vec<usize>>,
    record: bool,
    delays: Vec<ServiceDelay>,
    trace: Option<&'t mut Vec<TraceRecord>>,
}

impl<'t, 'a> Run<'t, 'a> {
    pub fn new(tape: &'t mut InfrastructureTape<'a>) -> Self {
        Self {
            tape,
            arrivals: Arrivals::Tape,
            stop: StopRule::BusyPeriod,
            caps: SafetyCaps::default(),
            cursor: None,
            record: false,
            delays: Vec::new(),
            trace: None,
        }
    }

    pub fn arrivals(mut self, arrivals: Arrivals) -> Self {
        self.arrivals = arrivals;
        self
    }

    pub fn stop(mut self, stop: StopRule) -> Self {
        self.stop = stop;
        self
    }

    pub fn caps(mut self, caps: SafetyCaps) -> Self {
        self.caps = caps;
        self
    }

    pub fn start_cursor(mut self, cursor: Vec<usize>) -> Self {
        self.cursor = Some(cursor);
        self
    }

    pub fn record(mut self, record: bool) -> Self {
        self.record = record;
        self
    }

    pub fn delays(mut self, delays: Vec<ServiceDelay>) -> Self {
        self.delays = delays;
        self
    }

    pub fn trace(mut self, sink: &'t mut Vec<TraceRecord>) -> Self {
        self.trace = Some(sink);
        self
    }

    pub fn execute(self) -> Result<RunOutcome> {
        Engine::new(self).run()
    }
}

struct Engine<'t, 'a> {
    tape: &'t mut InfrastructureTape<'a>,
    arrivals: Arrivals,
    stop: StopRule,
    caps: SafetyCaps,
    delays: Vec<ServiceDelay>,
    trace: Option<&'t mut Vec<TraceRecord>>,
    k: usize,
    heap: BinaryHeap<Event>,
    queues: Vec<VecDeque<usize>>,
    serving: Vec<Option<InService>>,
    next_arrival: usize,
    seq: u64,
    in_system: u64,
    out: RunOutcome,
    start_cursor: Vec<usize>,
}

impl<'t, 'a> Engine<'t, 'a> {
    fn new(run: Run<'t, 'a>) -> Self {
        let k = run.tape.spec().stations();
        let cursor = run.cursor.unwrap_or_else(|| vec![0; k]);
        let out = RunOutcome {
            services: vec![0; k],
            work: vec![0.0; k],
            busy_time: vec![0.0; k],
            cursor: cursor.clone(),
            schedule: run.record.then(|| vec![Vec::new(); k]),
            departures: run.record.then(Vec::new),
            ..RunOutcome::default()
        };
        Self {
            tape: run.tape,
            arrivals: run.arrivals,
            stop: run.stop,
            caps: run.caps,
            delays: run.delays,
            trace: run.trace,
            k,
            heap: BinaryHeap::new(),
            queues: vec![VecDeque::new(); k],
            serving: vec![None; k],
            next_arrival: 0,
            seq: 0,
            in_system: 0,
            out,
            start_cursor: cursor,
        }
    }

    /// `(time, customer)` of the `i`-th exogenous arrival, if any.
    fn arrival(&mut self, i: usize) -> Option<(f64, usize)> {
        match &self.arrivals {
            Arrivals::Tape => Some((self.tape.arrival_time(i), i)),
            Arrivals::TapePrefix(n) => (i < *n).then(|| (self.tape.arrival_time(i), i)),
            Arrivals::Schedule(list) => list.get(i).copied(),
        }
    }

    fn schedule_next_arrival(&mut self) {
        if let Some((time, customer)) = self.arrival(self.next_arrival) {
            let station = self.tape.entry_station(customer);
            self.heap.push(Event { time, kind: Kind::Arrival, station, seq: customer as u64 });
        }
    }

    fn overflow(&self, time: f64) -> Error {
        Error::CycleOverflow {
            events: self.out.events,
            time: time - self.out.start_time,
            customers: self.out.customers,
            in_system: self.in_system,
        }
    }

    fn run(mut self) -> Result<RunOutcome> {
        match self.arrival(0) {
            Some((t, _)) => self.out.start_time = t,
            None => return Ok(self.out),
        }
        self.schedule_next_arrival();

        while let Some(ev) = self.heap.pop() {
            if let StopRule::Horizon(h) = self.stop {
                if ev.time > h {
                    self.out.end_time = h;
                    break;
                }
            }
            self.out.events += 1;
            self.out.end_time = ev.time;
            if self.out.events > self.caps.max_events || ev.time - self.out.start_time > self.caps.max_time {
                return Err(self.overflow(ev.time));
            }
            match ev.kind {
                Kind::Arrival => {
                    let customer = ev.seq as usize;
                    self.in_system += 1;
                    self.out.customers += 1;
                    self.next_arrival += 1;
                    self.schedule_next_arrival();
                    self.join(ev.station, customer, ev.time);
                }
                Kind::Departure => {
                    if self.depart(ev.station, ev.time) {
                        break;
                    }
                }
            }
            self.emit_trace(&ev);
        }
        Ok(self.out)
    }

    fn emit_trace(&mut self, ev: &Event) {
        if let Some(sink) = self.trace.as_deref_mut() {
            let queue_lengths =
                (0..self.k).map(|j| self.queues[j].len() + usize::from(self.serving[j].is_some())).collect();
            sink.push(TraceRecord {
                v: TRACE_SCHEMA_VERSION,
                time: ev.time,
                kind: match ev.kind {
                    Kind::Arrival => "arrival".into(),
                    Kind::Departure => "departure".into(),
                },
                station: ev.station,
                queue_lengths,
            });
        }
    }

    fn join(&mut self, station: usize, customer: usize, time: f64) {
        if self.serving[station].is_none() {
            self.start_service(station, customer, time);
        } else {
            self.queues[station].push_back(customer);
        }
    }

    fn start_service(&mut self, station: usize, customer: usize, time: f64) {
        let index = self.out.cursor[station];
        self.out.cursor[station] += 1;
        let delay =
            self.delays.iter().filter(|d| d.station == station && d.index == index).map(|d| d.delay).sum::<f64>();
        let sigma = self.tape.service(station, index);
        let start = time + delay;
        self.serving[station] = Some(InService { customer, index, start, sigma });
        self.seq += 1;
        self.heap.push(Event { time: start + sigma, kind: Kind::Departure, station, seq: self.seq });
        self.note_jump(station, sigma);
    }

    fn note_jump(&mut self, station: usize, value: f64) {
        let jump = Jump { station, value };
        match self.out.largest {
            Some(top) if value <= top.value => {
                if self.out.second_largest.map_or(true, |s| value > s.value) {
                    self.out.second_largest = Some(jump);
                }
            }
            _ => {
                self.out.second_largest = self.out.largest;
                self.out.largest = Some(jump);
            }
        }
    }

    /// Processes a completion; returns true when the run should stop.
    fn depart(&mut self, station: usize, time: f64) -> bool {
        let done = self.serving[station].take().expect("departure from idle station");
        self.out.services[station] += 1;
        self.out.work[station] += done.sigma;
        self.out.busy_time[station] += time - done.start;
        if let Some(schedule) = self.out.schedule.as_mut() {
            let slot = done.index - self.start_cursor[station];
            let list = &mut schedule[station];
            if list.len() <= slot {
                list.resize(slot + 1, ServiceRecord { start: f64::NAN, finish: f64::NAN });
            }
            list[slot] = ServiceRecord { start: done.start, finish: time };
        }
        let next = self.tape.route(station, done.index);

        // FIFO: the head of the queue starts before a self-routed customer rejoins.
        if let Some(waiting) = self.queues[station].pop_front() {
            self.start_service(station, waiting, time);
        }
        if next == self.k {
            self.in_system -= 1;
            self.out.departed += 1;
            if let Some(deps) = self.out.departures.as_mut() {
                deps.push((done.customer, time));
            }
        } else {
            self.join(next, done.customer, time);
        }

        if self.in_system == 0 {
            match self.stop {
                StopRule::BusyPeriod => return true,
                StopRule::Drain => {
                    if self.arrival(self.next_arrival).is_none() {
                        return true;
                    }
                }
                StopRule::Horizon(_) => self.out.emptied = true,
            }
        }
        false
    }
}

/// Writes trace records as line-delimited JSON.
pub fn write_trace<W: std::io::Write>(records: &[TraceRecord], mut w: W) -> std::io::Result<()> {
    for r in records {
        serde_json::to_writer(&mut w, r)?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

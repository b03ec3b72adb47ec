//! Upper-bound queue: a single-server queue whose customers are groups of
//! `L` network customers, served for the saturated group time `X^0`.
//! Its extended busy period `U` dominates the network busy period `B` on
//! the same tape.

use serde::Serialize;

use super::auxiliary::{saturated_group, IsolationWalker};
use super::tape::InfrastructureTape;
use crate::error::{Error, Result};
use crate::network::NetworkSpec;
use crate::rng::RandomStream;

/// Divergence guard on group customers processed by one UBQ run.
pub const MAX_GROUP_CUSTOMERS: usize = 10_000_000;

/// Pilot groups used when choosing `L` automatically.
pub const PILOT_GROUPS: usize = 200;

/// Pilot mean of `X^0_{1,L}` must fall below this fraction of `L a`.
pub const PILOT_SLACK: f64 = 0.9;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct UbqBusyPeriod {
    /// Group customers served, `nu^_j`.
    pub groups: usize,
    /// Length `B^_j`.
    pub length: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct UbqResult {
    pub group_size: usize,
    /// `U = (K+1) sum_{j<=J} B^_j`.
    pub extended_bound: f64,
    /// Stopping index `J`.
    pub stopping_index: usize,
    pub busy_periods: Vec<UbqBusyPeriod>,
    /// `N^_J`: group customers in the first `J` busy periods.
    pub groups_served: usize,
}

impl UbqResult {
    /// Upper bound on `nu_B`: `N^_J * L`.
    pub fn customer_bound(&self) -> usize {
        self.groups_served * self.group_size
    }
}

/// Lazily extended sample-path quantities shared by the UBQ run.
struct Paths<'t, 'a> {
    tape: &'t mut InfrastructureTape<'a>,
    l: usize,
    walker: IsolationWalker,
    /// `prefix[i] = S_{1,i}` (1-based customers).
    prefix: Vec<f64>,
    group_cursor: Vec<usize>,
    /// `sigma^_n` for groups `n = 1..`.
    sigma_hat: Vec<f64>,
}

impl<'t, 'a> Paths<'t, 'a> {
    /// `T_i` for 1-based customer `i`.
    fn arrival(&mut self, i: usize) -> f64 {
        self.tape.arrival_time(i - 1)
    }

    /// `S_{1,i}`.
    fn service_prefix(&mut self, i: usize) -> Result<f64> {
        while self.prefix.len() <= i {
            let b = self.walker.walk(self.tape)?;
            let last = *self.prefix.last().unwrap();
            self.prefix.push(last + b.total_service);
        }
        Ok(self.prefix[i])
    }

    /// `sigma^_n` for 1-based group `n`.
    fn group_time(&mut self, n: usize) -> Result<f64> {
        while self.sigma_hat.len() < n {
            let m = self.sigma_hat.len();
            if (m + 1) * self.l > MAX_GROUP_CUSTOMERS {
                return Err(Error::Divergence(format!(
                    "upper-bound queue exceeded {MAX_GROUP_CUSTOMERS} group customers"
                )));
            }
            let g = saturated_group(self.tape, m * self.l, self.l, self.group_cursor.clone())?;
            self.group_cursor = g.cursor_end;
            self.sigma_hat.push(g.time_to_empty);
        }
        Ok(self.sigma_hat[n - 1])
    }

    /// The network surely empties during the first group's arrivals.
    fn empties_in_first_group(&mut self) -> Result<bool> {
        let t1 = self.arrival(1);
        for i in 2..=self.l {
            if self.service_prefix(i - 1)? <= self.arrival(i) - t1 {
                return Ok(true);
            }
        }
        Ok(false)
    }

    /// The network surely empties before group `n + 1` has fully arrived,
    /// given that the UBQ finished group `n` at `done`.
    fn empties_after_group(&mut self, n: usize, done: f64) -> Result<bool> {
        let base = self.service_prefix(n * self.l)?;
        for i in 1..=self.l {
            let pending = self.service_prefix(n * self.l + i - 1)? - base;
            if done + pending <= self.arrival(n * self.l + i) {
                return Ok(true);
            }
        }
        Ok(false)
    }
}

/// Builds the upper-bound queue on `tape` with group size `l` and returns
/// its extended busy period.
pub fn run_ubq_extended(tape: &mut InfrastructureTape<'_>, l: usize) -> Result<UbqResult> {
    assert!(l >= 1, "group size must be positive");
    let k = tape.spec().stations();
    let mut p = Paths {
        tape,
        l,
        walker: IsolationWalker::new(k),
        prefix: vec![0.0],
        group_cursor: vec![0; k],
        sigma_hat: Vec::new(),
    };

    let mut stopping: Option<usize> = p.empties_in_first_group()?.then_some(1);
    let mut busy = Vec::new();
    let mut served = 0usize;
    loop {
        // group `served + 1` arrives into an empty UBQ
        let mut n = served + 1;
        let mut start = p.arrival(n * l);
        let mut length = 0.0;
        let done = loop {
            let sigma = p.group_time(n)?;
            let end = start + sigma;
            length += sigma;
            if end <= p.arrival((n + 1) * l) {
                break end;
            }
            start = end;
            n += 1;
        };
        busy.push(UbqBusyPeriod { groups: n - served, length });
        served = n;
        match stopping {
            Some(j) if busy.len() >= j => break,
            Some(_) => {}
            None => {
                if p.empties_after_group(served, done)? {
                    stopping = Some(busy.len() + 1);
                }
            }
        }
    }
    let j = stopping.expect("loop exits only once J is known");
    Ok(UbqResult {
        group_size: l,
        extended_bound: (k as f64 + 1.0) * busy.iter().map(|b| b.length).sum::<f64>(),
        stopping_index: j,
        busy_periods: busy,
        groups_served: served,
    })
}

/// Pilot-based choice of the UBQ group size.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GroupSizeChoice {
    pub group_size: usize,
    /// Pilot mean of `X^0_{1,L}`.
    pub mean_group_time: f64,
    /// `E sigma^_1 / (L a)`.
    pub rho_hat: f64,
    /// `(1 - rho_hat) / (K + 1)`.
    pub c_u: f64,
}

/// Smallest power of two `L` whose pilot mean of `X^0_{1,L}` is below
/// `0.9 L a`.
pub fn select_group_size(spec: &NetworkSpec, stream: &RandomStream) -> Result<GroupSizeChoice> {
    let a = spec.arrival_mean();
    let k = spec.stations();
    for power in 0..20u32 {
        let l = 1usize << power;
        let choice = pilot_group_size(spec, &stream.child(power as u64), l)?;
        if choice.mean_group_time < PILOT_SLACK * l as f64 * a {
            return Ok(choice);
        }
        if l * PILOT_GROUPS > MAX_GROUP_CUSTOMERS {
            break;
        }
    }
    Err(Error::Instability(format!("no group size up to 2^19 satisfies E X0 < {PILOT_SLACK} L a for K = {k}")))
}

/// Pilot statistics for a fixed `L`.
pub fn pilot_group_size(spec: &NetworkSpec, stream: &RandomStream, l: usize) -> Result<GroupSizeChoice> {
    let a = spec.arrival_mean();
    let mut tape = InfrastructureTape::new(spec, stream);
    let mut cursor = vec![0; spec.stations()];
    let mut sum = 0.0;
    for m in 0..PILOT_GROUPS {
        let g = saturated_group(&mut tape, m * l, l, cursor)?;
        sum += g.time_to_empty;
        cursor = g.cursor_end;
    }
    let mean = sum / PILOT_GROUPS as f64;
    let rho_hat = mean / (l as f64 * a);
    Ok(GroupSizeChoice {
        group_size: l,
        mean_group_time: mean,
        rho_hat,
        c_u: (1.0 - rho_hat) / (spec.stations() as f64 + 1.0),
    })
}

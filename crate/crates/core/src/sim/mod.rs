//! Discrete-event simulation of the network and its auxiliary models.

pub mod auxiliary;
pub mod cycle;
pub mod engine;
pub mod perturb;
pub mod tape;
pub mod ubq;

pub use cycle::{run_cycle, run_cycle_on_tape, run_cycle_recorded, BusyCycleSample};
pub use engine::{Arrivals, Jump, Run, RunOutcome, SafetyCaps, ServiceDelay, ServiceRecord, StopRule, TraceRecord};
pub use tape::InfrastructureTape;

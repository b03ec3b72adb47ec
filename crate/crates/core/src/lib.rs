//! Busy-period tail asymptotics for generalised Jackson networks with
//! heavy-tailed service times.
//!
//! The crate has three layers. [`network`] and [`heavytail`] describe a
//! model. [`sim`] replays a recorded random tape through the network and
//! its auxiliary queues. [`fluid`] and [`asymptotics`] compute the fluid
//! coefficients `u_k` and compare the predicted tail with Monte Carlo
//! estimates.

pub mod asymptotics;
pub mod error;
pub mod fluid;
pub mod heavytail;
pub mod linalg;
pub mod network;
pub mod rng;
pub mod sim;
pub mod stats;
pub mod verify;

pub use error::{Error, Result};
pub use heavytail::DistSpec;
pub use network::NetworkSpec;
pub use rng::RandomStream;

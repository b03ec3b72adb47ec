//! Recorded randomness shared by the network and every auxiliary model.
//!
//! Station `k` owns one generator producing `(sigma_{k,i}, alpha_{k,i})`
//! pairs in service order (the server-associated view); the arrival
//! generator produces `(t_n, alpha_{n,0})` pairs. Values are materialised
//! lazily and never re-sampled, so any model replaying the tape through a
//! cursor sees exactly the same sample path. Every pair consumes exactly two
//! uniforms, which keeps edits local: overwriting one service time leaves
//! all later values untouched.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::network::NetworkSpec;
use crate::rng::RandomStream;

const CHUNK: usize = 4;

/// Generator purpose id for the arrival stream; station `k` uses `k + 1`.
const ARRIVAL_PURPOSE: u64 = 0;

#[derive(Clone, Debug)]
struct StationTape {
    rng: ChaCha8Rng,
    sigma: Vec<f64>,
    alpha: Vec<usize>,
}

#[derive(Clone, Debug)]
struct ArrivalTape {
    rng: ChaCha8Rng,
    /// `times[0] = 0`; later entries add the sampled gaps.
    times: Vec<f64>,
    entry: Vec<usize>,
}

#[derive(Clone, Debug)]
pub struct InfrastructureTape<'a> {
    spec: &'a NetworkSpec,
    arrivals: ArrivalTape,
    stations: Vec<StationTape>,
}

impl<'a> InfrastructureTape<'a> {
    pub fn new(spec: &'a NetworkSpec, stream: &RandomStream) -> Self {
        let stations = (0..spec.stations())
            .map(|k| StationTape { rng: stream.generator(k as u64 + 1), sigma: Vec::new(), alpha: Vec::new() })
            .collect();
        Self {
            spec,
            arrivals: ArrivalTape { rng: stream.generator(ARRIVAL_PURPOSE), times: Vec::new(), entry: Vec::new() },
            stations,
        }
    }

    pub fn spec(&self) -> &'a NetworkSpec {
        self.spec
    }

    fn fill_station(&mut self, k: usize, index: usize) {
        let spec = self.spec;
        let st = &mut self.stations[k];
        while st.sigma.len() <= index {
            for _ in 0..CHUNK {
                let s = spec.services[k].quantile(st.rng.random::<f64>());
                let r = spec.route(k, st.rng.random::<f64>());
                st.sigma.push(s);
                st.alpha.push(r);
            }
        }
    }

    fn fill_arrivals(&mut self, index: usize) {
        let spec = self.spec;
        let arr = &mut self.arrivals;
        while arr.times.len() <= index {
            for _ in 0..CHUNK {
                let gap = spec.arrival.quantile(arr.rng.random::<f64>());
                let entry = spec.enter(arr.rng.random::<f64>());
                let t = match arr.times.last() {
                    None => 0.0,
                    Some(&last) => last + gap,
                };
                arr.times.push(t);
                arr.entry.push(entry);
            }
        }
    }

    /// `sigma_{k, index+1}`: duration of the service with 0-based `index` at station `k`.
    pub fn service(&mut self, k: usize, index: usize) -> f64 {
        self.fill_station(k, index);
        self.stations[k].sigma[index]
    }

    /// Destination after that service (`K` = exit).
    pub fn route(&mut self, k: usize, index: usize) -> usize {
        self.fill_station(k, index);
        self.stations[k].alpha[index]
    }

    /// Arrival time of 0-based customer `n`, measured from the first arrival.
    pub fn arrival_time(&mut self, n: usize) -> f64 {
        self.fill_arrivals(n);
        self.arrivals.times[n]
    }

    pub fn entry_station(&mut self, n: usize) -> usize {
        self.fill_arrivals(n);
        self.arrivals.entry[n]
    }

    /// Number of services already materialised at each station.
    pub fn materialised(&self) -> Vec<usize> {
        self.stations.iter().map(|s| s.sigma.len()).collect()
    }

    pub fn set_service(&mut self, k: usize, index: usize, value: f64) {
        self.fill_station(k, index);
        self.stations[k].sigma[index] = value;
    }

    /// Replaces the gap before customer `n >= 1`, shifting every later arrival.
    pub fn set_gap(&mut self, n: usize, gap: f64) {
        assert!(n >= 1, "customer 0 defines the time origin");
        self.fill_arrivals(n);
        let times = &mut self.arrivals.times;
        let delta = times[n - 1] + gap - times[n];
        for t in &mut times[n..] {
            *t += delta;
        }
    }
}

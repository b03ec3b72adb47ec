//! Network description and routing-chain quantities.
//!
//! Stations are indexed `0..K` in code and `1..=K` in user-facing messages;
//! the exit gate is routing column `K`.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::heavytail::DistSpec;
use crate::linalg::Matrix;

/// Row sums must be 1 within this.
pub const ROW_SUM_TOL: f64 = 1e-12;

/// Open network of `K` single-server FIFO stations with renewal input and
/// Markovian routing.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NetworkSpec {
    /// Law of the exogenous inter-arrival times.
    pub arrival: DistSpec,
    /// Service-time law per station.
    pub services: Vec<DistSpec>,
    /// Entry probabilities `p_{0,k}`.
    pub entry: Vec<f64>,
    /// `K x (K+1)` routing matrix; the last column is the exit.
    pub routing: Vec<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    NoStations,
    Shape { what: String },
    NegativeProbability { row: Option<usize>, column: usize },
    EntryNotStochastic { sum: f64 },
    RowNotStochastic { row: usize, sum: f64 },
    InteriorNotTransient { stations: Vec<usize> },
    Unreachable { station: usize },
    Distribution { what: String, message: String },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::NoStations => write!(f, "network has no stations"),
            Violation::Shape { what } => write!(f, "shape mismatch: {what}"),
            Violation::NegativeProbability { row: None, column } => {
                write!(f, "entry probability for station {} is negative or not finite", column + 1)
            }
            Violation::NegativeProbability { row: Some(r), column } => {
                write!(f, "routing probability ({}, {}) is negative or not finite", r + 1, column + 1)
            }
            Violation::EntryNotStochastic { sum } => write!(f, "entry vector not stochastic (sum {sum})"),
            Violation::RowNotStochastic { row, sum } => {
                write!(f, "row {} not stochastic (sum {sum})", row + 1)
            }
            Violation::InteriorNotTransient { stations } => {
                let names: Vec<String> = stations.iter().map(|s| (s + 1).to_string()).collect();
                write!(
                    f,
                    "interior block spectral radius >= 1: stations {{{}}} cannot reach the exit",
                    names.join(", ")
                )
            }
            Violation::Unreachable { station } => {
                write!(f, "station {} is never visited (beta = 0)", station + 1)
            }
            Violation::Distribution { what, message } => write!(f, "{what}: {message}"),
        }
    }
}

/// Findings of [`validate`]; empty means valid.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    /// Valid apart from stations that are never visited.
    pub fn is_valid_ignoring_unreachable(&self) -> bool {
        self.violations.iter().all(|v| matches!(v, Violation::Unreachable { .. }))
    }

    pub fn into_result(self) -> Result<()> {
        if self.is_valid() {
            Ok(())
        } else {
            let msgs: Vec<String> = self.violations.iter().map(|v| v.to_string()).collect();
            Err(Error::InvalidNetwork(msgs.join("; ")))
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VisitStats {
    /// `E N_k`.
    pub expected_visits: Vec<f64>,
    /// `beta_k = P(N_k > 0)`.
    pub visit_prob: Vec<f64>,
    /// `a - max_k b_k E N_k`.
    pub stability_margin: f64,
}

impl NetworkSpec {
    pub fn stations(&self) -> usize {
        self.services.len()
    }

    pub fn exit(&self) -> usize {
        self.stations()
    }

    /// Mean inter-arrival time `a`.
    pub fn arrival_mean(&self) -> f64 {
        self.arrival.mean()
    }

    /// Mean service times `b_k`.
    pub fn service_means(&self) -> Vec<f64> {
        self.services.iter().map(DistSpec::mean).collect()
    }

    pub fn p(&self, from: usize, to: usize) -> f64 {
        self.routing[from][to]
    }

    /// Inverse-CDF choice of the next destination from `station` (`K` = exit).
    pub fn route(&self, station: usize, u: f64) -> usize {
        pick(&self.routing[station], u)
    }

    /// Inverse-CDF choice of the entry station.
    pub fn enter(&self, u: f64) -> usize {
        pick(&self.entry, u)
    }

    /// Same network with stations relabelled: new station `i` is old
    /// station `perm[i]`.
    pub fn permuted(&self, perm: &[usize]) -> NetworkSpec {
        let k = self.stations();
        let mut inv = vec![0; k];
        for (new, &old) in perm.iter().enumerate() {
            inv[old] = new;
        }
        let routing = perm
            .iter()
            .map(|&old| {
                let mut row = vec![0.0; k + 1];
                for (old_to, &p) in self.routing[old].iter().take(k).enumerate() {
                    row[inv[old_to]] = p;
                }
                row[k] = self.routing[old][k];
                row
            })
            .collect();
        NetworkSpec {
            arrival: self.arrival,
            services: perm.iter().map(|&old| self.services[old]).collect(),
            entry: perm.iter().map(|&old| self.entry[old]).collect(),
            routing,
        }
    }
}

/// Smallest index whose cumulative weight exceeds `u`; falls back to the
/// last positive weight to absorb rounding in the row sum.
fn pick(weights: &[f64], u: f64) -> usize {
    let mut acc = 0.0;
    for (i, &w) in weights.iter().enumerate() {
        acc += w;
        if u < acc {
            return i;
        }
    }
    weights.iter().rposition(|&w| w > 0.0).unwrap_or(weights.len() - 1)
}

/// Checks every structural invariant and reports all violations.
pub fn validate(spec: &NetworkSpec) -> ValidationReport {
    let mut v = Vec::new();
    let k = spec.stations();
    if k == 0 {
        v.push(Violation::NoStations);
        return ValidationReport { violations: v };
    }
    if let Err(e) = spec.arrival.validate() {
        v.push(Violation::Distribution { what: "arrival".into(), message: e.to_string() });
    }
    for (i, d) in spec.services.iter().enumerate() {
        if let Err(e) = d.validate() {
            v.push(Violation::Distribution { what: format!("service at station {}", i + 1), message: e.to_string() });
        }
    }
    if spec.entry.len() != k {
        v.push(Violation::Shape { what: format!("entry has {} entries for {k} stations", spec.entry.len()) });
    }
    if spec.routing.len() != k || spec.routing.iter().any(|r| r.len() != k + 1) {
        v.push(Violation::Shape { what: format!("routing must be {k} x {}", k + 1) });
    }
    if !v.iter().all(|x| matches!(x, Violation::Distribution { .. })) {
        return ValidationReport { violations: v };
    }

    for (c, &p) in spec.entry.iter().enumerate() {
        if !(p.is_finite() && p >= 0.0) {
            v.push(Violation::NegativeProbability { row: None, column: c });
        }
    }
    let s: f64 = spec.entry.iter().sum();
    if (s - 1.0).abs() > ROW_SUM_TOL {
        v.push(Violation::EntryNotStochastic { sum: s });
    }
    for (r, row) in spec.routing.iter().enumerate() {
        for (c, &p) in row.iter().enumerate() {
            if !(p.is_finite() && p >= 0.0) {
                v.push(Violation::NegativeProbability { row: Some(r), column: c });
            }
        }
        let s: f64 = row.iter().sum();
        if (s - 1.0).abs() > ROW_SUM_TOL {
            v.push(Violation::RowNotStochastic { row: r, sum: s });
        }
    }

    // For a substochastic interior block, spectral radius < 1 exactly when
    // every station has a positive-probability path to the exit.
    let trapped = stations_not_reaching_exit(spec);
    if !trapped.is_empty() {
        v.push(Violation::InteriorNotTransient { stations: trapped });
    } else if v.is_empty() {
        if let Ok(beta) = visit_probabilities(spec) {
            for (i, b) in beta.iter().enumerate() {
                if !(*b > 0.0) {
                    v.push(Violation::Unreachable { station: i });
                }
            }
        }
    }
    ValidationReport { violations: v }
}

fn stations_not_reaching_exit(spec: &NetworkSpec) -> Vec<usize> {
    let k = spec.stations();
    let mut reaches = vec![false; k];
    let mut changed = true;
    while changed {
        changed = false;
        for j in 0..k {
            if reaches[j] {
                continue;
            }
            let row = &spec.routing[j];
            if row[k] > 0.0 || (0..k).any(|l| row[l] > 0.0 && reaches[l]) {
                reaches[j] = true;
                changed = true;
            }
        }
    }
    (0..k).filter(|&j| !reaches[j]).collect()
}

/// `E N_k`: solves `n = p0 + P^T n` over interior states.
pub fn expected_visits(spec: &NetworkSpec) -> Result<Vec<f64>> {
    let k = spec.stations();
    let mut m = Matrix::identity(k);
    for j in 0..k {
        for l in 0..k {
            m[(l, j)] -= spec.p(j, l);
        }
    }
    m.solve(&spec.entry).map_err(|_| Error::UnstableRouting)
}

/// `beta_k = P(N_k > 0)`, one first-passage system per target station.
pub fn visit_probabilities(spec: &NetworkSpec) -> Result<Vec<f64>> {
    let k = spec.stations();
    let mut beta = Vec::with_capacity(k);
    for target in 0..k {
        let others: Vec<usize> = (0..k).filter(|&j| j != target).collect();
        let n = others.len();
        // h_j = p_{j,target} + sum_{l != target} p_{j,l} h_l
        let mut m = Matrix::identity(n);
        let mut rhs = vec![0.0; n];
        for (r, &j) in others.iter().enumerate() {
            rhs[r] = spec.p(j, target);
            for (c, &l) in others.iter().enumerate() {
                m[(r, c)] -= spec.p(j, l);
            }
        }
        let h = if n == 0 { Vec::new() } else { m.solve(&rhs).map_err(|_| Error::UnstableRouting)? };
        let b = spec.entry[target] + others.iter().zip(&h).map(|(&j, hj)| spec.entry[j] * hj).sum::<f64>();
        beta.push(b.clamp(0.0, 1.0));
    }
    Ok(beta)
}

/// `(a > max_k b_k E N_k, a - max_k b_k E N_k)`.
pub fn stability_check(spec: &NetworkSpec) -> Result<(bool, f64)> {
    let n = expected_visits(spec)?;
    let load = spec.service_means().iter().zip(&n).map(|(b, n)| b * n).fold(f64::NEG_INFINITY, f64::max);
    let margin = spec.arrival_mean() - load;
    Ok((margin > 0.0, margin))
}

pub fn visit_stats(spec: &NetworkSpec) -> Result<VisitStats> {
    Ok(VisitStats {
        expected_visits: expected_visits(spec)?,
        visit_prob: visit_probabilities(spec)?,
        stability_margin: stability_check(spec)?.1,
    })
}

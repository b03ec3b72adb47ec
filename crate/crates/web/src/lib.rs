//! Browser demo: three operations exported through wasm-bindgen, each
//! returning a JSON string for `www/index.html` to draw.
//!
//! The logic lives in plain functions so it can be tested natively; the
//! `#[wasm_bindgen]` wrappers only turn errors into JS exceptions.

use busytail::asymptotics::{estimate_tail, McSettings, Prediction};
use busytail::fluid::{all_coefficients, solve_tau, Phase};
use busytail::network::{validate, visit_stats};
use busytail::{DistSpec, NetworkSpec, RandomStream};
use serde::Serialize;
use wasm_bindgen::prelude::*;

/// Upper limit on cycles per call so the page stays responsive.
pub const MAX_CYCLES: u64 = 2_000_000;
const TAIL_POINTS: usize = 20;

pub fn two_station(p01: f64, p12: f64, p21: f64, a: f64, b1: f64, b2: f64) -> NetworkSpec {
    NetworkSpec {
        arrival: DistSpec::Exponential { mean: a },
        services: vec![DistSpec::Exponential { mean: b1 }, DistSpec::Exponential { mean: b2 }],
        entry: vec![p01, 1.0 - p01],
        routing: vec![vec![0.0, p12, 1.0 - p12], vec![p21, 0.0, 1.0 - p21]],
    }
}

#[derive(Debug, Serialize)]
pub struct FluidView {
    pub u: Vec<Option<f64>>,
    pub tau: f64,
    /// Knots of the piecewise-linear levels, including `0` and the end.
    pub times: Vec<f64>,
    /// `levels[j][i]`: station `j` at `times[i]`.
    pub levels: Vec<Vec<f64>>,
    /// Phase label of each piece between consecutive knots.
    pub phases: Vec<&'static str>,
}

/// Fluid timeline of the two-station feedback network with station
/// `frozen` (0 or 1) held for one time unit.
pub fn fluid_view(p01: f64, p12: f64, p21: f64, a: f64, b1: f64, b2: f64, frozen: usize) -> Result<FluidView, String> {
    let spec = two_station(p01, p12, p21, a, b1, b2);
    validate(&spec).into_result().map_err(|e| e.to_string())?;
    if frozen > 1 {
        return Err(format!("station must be 1 or 2, got {}", frozen + 1));
    }
    let u = all_coefficients(&spec).map_err(|e| e.to_string())?;
    let t = solve_tau(&spec, frozen).map_err(|e| e.to_string())?;
    let mut times = vec![0.0];
    let mut phases = Vec::new();
    for iv in &t.intervals {
        if iv.end > *times.last().unwrap() {
            times.push(iv.end);
            phases.push(match iv.phase {
                Phase::Frozen => "frozen",
                Phase::Interval1 => "interval1",
                Phase::Interval2 => "interval2",
            });
        }
    }
    let levels = (0..2).map(|j| times.iter().map(|&s| t.level_at(j, s)).collect()).collect();
    Ok(FluidView { u, tau: t.tau, times, levels, phases })
}

#[derive(Debug, Serialize)]
pub struct TailView {
    pub xs: Vec<f64>,
    pub empirical: Vec<f64>,
    pub ci_lo: Vec<f64>,
    pub ci_hi: Vec<f64>,
    pub theory: Vec<f64>,
    pub e_nu: f64,
    pub u: f64,
    pub cycles: u64,
}

/// Single server, Poisson input of rate 1, Lomax service with index
/// `alpha` and mean `rho`: simulated `P(B > x)` against the prediction.
pub fn tail_view(alpha: f64, rho: f64, cycles: u64, seed: u64) -> Result<TailView, String> {
    if !(alpha > 1.0 && alpha.is_finite()) {
        return Err(format!("alpha must exceed 1, got {alpha}"));
    }
    if !(rho > 0.0 && rho < 1.0) {
        return Err(format!("load must lie in (0, 1), got {rho}"));
    }
    let service = DistSpec::ShiftedPareto { alpha, scale: rho * (alpha - 1.0) };
    let spec = NetworkSpec {
        arrival: DistSpec::Exponential { mean: 1.0 },
        services: vec![service],
        entry: vec![1.0],
        routing: vec![vec![0.0, 1.0]],
    };
    let cycles = cycles.clamp(2, MAX_CYCLES);
    let e = |e: busytail::Error| e.to_string();
    let xs = Prediction::new(&spec, &service).map_err(e)?.default_grid(TAIL_POINTS);
    let settings = McSettings { workers: 1, ..McSettings::new(cycles) };
    let r = estimate_tail(&spec, Some(&service), &xs, &settings, &RandomStream::new(seed)).map_err(e)?;
    Ok(TailView {
        theory: r.theory.clone().unwrap_or_default(),
        u: r.prediction.as_ref().map_or(f64::NAN, |p| p.u_min()),
        xs: r.xs,
        empirical: r.empirical,
        ci_lo: r.ci_lo,
        ci_hi: r.ci_hi,
        e_nu: r.e_nu_hat,
        cycles,
    })
}

#[derive(Debug, Serialize)]
pub struct NetworkView {
    pub expected_visits: Vec<f64>,
    pub visit_prob: Vec<f64>,
    pub stability_margin: f64,
    pub u: Option<Vec<Option<f64>>>,
}

/// Visit statistics and, when stable, the fluid coefficients of a network
/// given as JSON in the config syntax.
pub fn network_view(json: &str) -> Result<NetworkView, String> {
    let spec: NetworkSpec = serde_json::from_str(json).map_err(|e| format!("cannot parse network: {e}"))?;
    validate(&spec).into_result().map_err(|e| e.to_string())?;
    let stats = visit_stats(&spec).map_err(|e| e.to_string())?;
    let u = if stats.stability_margin > 0.0 { Some(all_coefficients(&spec).map_err(|e| e.to_string())?) } else { None };
    Ok(NetworkView {
        expected_visits: stats.expected_visits,
        visit_prob: stats.visit_prob,
        stability_margin: stats.stability_margin,
        u,
    })
}

fn to_js<T: Serialize>(r: Result<T, String>) -> Result<String, JsError> {
    r.map(|v| serde_json::to_string(&v).expect("views serialize")).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = fluidTimeline)]
pub fn fluid_timeline(
    p01: f64,
    p12: f64,
    p21: f64,
    a: f64,
    b1: f64,
    b2: f64,
    frozen: usize,
) -> Result<String, JsError> {
    to_js(fluid_view(p01, p12, p21, a, b1, b2, frozen))
}

#[wasm_bindgen(js_name = tailCurve)]
pub fn tail_curve(alpha: f64, rho: f64, cycles: u64, seed: u64) -> Result<String, JsError> {
    to_js(tail_view(alpha, rho, cycles, seed))
}

#[wasm_bindgen(js_name = analyzeNetwork)]
pub fn analyze_network(json: &str) -> Result<String, JsError> {
    to_js(network_view(json))
}

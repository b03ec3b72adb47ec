use std::time::SystemTime;

use busytail::asymptotics::{
    check_simulable, estimate_tail, psbj_diagnostic, McSettings, Prediction, PsbjReport, TailReport,
};
use busytail::fluid::solve_tau;
use busytail::heavytail::{hta_constants, HtaProfile};
use busytail::network::{validate, visit_stats, Violation};
use busytail::verify::{verify_sample_paths, PropertyCount};
use busytail::{Error, RandomStream};
use serde::Serialize;

use crate::config::{Resolved, SCHEMA_VERSION};
use crate::output::OutputDir;
use crate::CliError;

/// Where the default `psbj` threshold sits on the reference tail.
const PSBJ_DEFAULT_TAIL: f64 = 1e-3;

fn settings(r: &Resolved) -> McSettings {
    McSettings {
        cycles: r.cycles,
        caps: r.caps,
        workers: r.workers,
        allow_bounded_arrivals: r.allow_bounded_arrivals,
        group_size: r.config.group_size,
    }
}

/// Structural validation that lets never-visited stations through.
fn check_structure(r: &Resolved) -> Result<Vec<String>, CliError> {
    let report = validate(&r.config.network);
    if !report.is_valid_ignoring_unreachable() {
        return Err(report.into_result().unwrap_err().into());
    }
    Ok(report.violations.iter().filter(|v| matches!(v, Violation::Unreachable { .. })).map(|v| v.to_string()).collect())
}

#[derive(Serialize)]
struct Analysis {
    schema_version: u32,
    stations: usize,
    stable: bool,
    stability_margin: f64,
    expected_visits: Vec<f64>,
    visit_prob: Vec<f64>,
    /// `b_k E N_k / a`.
    loads: Vec<f64>,
    warnings: Vec<String>,
    hta: Option<HtaProfile>,
    #[serde(skip_serializing_if = "Option::is_none")]
    hta_note: Option<String>,
    u: Option<Vec<Option<f64>>>,
}

pub fn analyze(r: &Resolved) -> Result<Vec<String>, CliError> {
    let started = SystemTime::now();
    let spec = &r.config.network;
    let warnings = check_structure(r)?;
    if !r.allow_bounded_arrivals && !spec.arrival.has_unbounded_support() {
        return Err(Error::BoundedArrivals(format!("{:?}", spec.arrival)).into());
    }
    let stats = visit_stats(spec)?;
    let stable = stats.stability_margin > 0.0;
    let (hta, hta_note) = match &r.config.reference {
        Some(g) => (Some(hta_constants(spec, g)?), None),
        None => (None, Some("no reference tail given".to_string())),
    };
    let u = if stable && warnings.is_empty() { Some(busytail::fluid::all_coefficients(spec)?) } else { None };
    let a = spec.arrival_mean();
    let analysis = Analysis {
        schema_version: SCHEMA_VERSION,
        stations: spec.stations(),
        stable,
        stability_margin: stats.stability_margin,
        loads: spec.service_means().iter().zip(&stats.expected_visits).map(|(b, n)| b * n / a).collect(),
        expected_visits: stats.expected_visits.clone(),
        visit_prob: stats.visit_prob.clone(),
        warnings: warnings.clone(),
        hta,
        hta_note,
        u,
    };
    let mut out = OutputDir::create(&r.out)?;
    out.json("analysis.json", &analysis)?;
    out.finish("analyze", r, started)?;

    let mut lines = vec![
        format!("E N_k: {:?}", stats.expected_visits),
        format!("beta_k: {:?}", stats.visit_prob),
        format!("stability margin: {}", stats.stability_margin),
    ];
    lines.extend(warnings.iter().map(|w| format!("warning: {w}")));
    if let Some(h) = &analysis.hta {
        lines.push(format!("c_k: {:?}", h.c));
    }
    if !stable {
        return Err(Error::Instability(format!("stability_check failed (margin {})", stats.stability_margin)).into());
    }
    Ok(lines)
}

#[derive(Serialize)]
struct UEntry {
    station: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    u: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    tau: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    reason: Option<&'static str>,
}

#[derive(Serialize)]
struct USummary {
    schema_version: u32,
    u: Vec<UEntry>,
}

pub fn fluid(r: &Resolved) -> Result<Vec<String>, CliError> {
    let started = SystemTime::now();
    let spec = &r.config.network;
    check_structure(r)?;
    let beta = visit_stats(spec)?.visit_prob;
    let mut out = OutputDir::create(&r.out)?;
    let mut entries = Vec::new();
    let mut lines = Vec::new();
    for k in 0..spec.stations() {
        if beta[k] == 0.0 {
            entries.push(UEntry { station: k + 1, u: None, tau: None, reason: Some("beta_k = 0") });
            lines.push(format!("u_{}: absent (beta_k = 0)", k + 1));
            continue;
        }
        let t = solve_tau(spec, k)?;
        out.json(&format!("timeline_k{}.json", k + 1), &t)?;
        out.text(&format!("timeline_k{}.txt", k + 1), &t.to_report())?;
        lines.push(format!("u_{}: {}", k + 1, t.u.map_or("absent".to_string(), |u| u.to_string())));
        entries.push(UEntry {
            station: k + 1,
            u: t.u,
            tau: Some(t.tau),
            reason: t.u.is_none().then_some("beta_k = 0"),
        });
    }
    out.json("u.json", &USummary { schema_version: SCHEMA_VERSION, u: entries })?;
    out.finish("fluid", r, started)?;
    Ok(lines)
}

#[derive(Serialize)]
struct Versioned<'a, T> {
    schema_version: u32,
    #[serde(flatten)]
    report: &'a T,
}

pub fn tail(r: &Resolved) -> Result<Vec<String>, CliError> {
    let started = SystemTime::now();
    let spec = &r.config.network;
    check_simulable(spec, r.allow_bounded_arrivals)?;
    let reference = r.config.reference.as_ref();
    let xs = match (&r.config.tail.xs, reference) {
        (Some(xs), _) => xs.clone(),
        (None, Some(g)) => Prediction::new(spec, g)?.default_grid(r.grid_points),
        (None, None) => return Err(CliError::Config("tail needs either tail.xs or a reference tail".into())),
    };
    let report: TailReport = estimate_tail(spec, reference, &xs, &settings(r), &RandomStream::new(r.seed))?;
    let mut out = OutputDir::create(&r.out)?;
    out.text("tail.csv", &report.to_csv())?;
    out.json("tail.json", &Versioned { schema_version: SCHEMA_VERSION, report: &report })?;
    out.finish("tail", r, started)?;

    let mut lines = vec![format!(
        "{} cycles, E nu_B = {} (s.e. {}), {} overflowed",
        report.n_cycles, report.e_nu_hat, report.e_nu_se, report.overflowed
    )];
    if let Some(note) = &report.theory_note {
        lines.push(format!("no prediction: {note}"));
    }
    if report.exceedances.first().copied().unwrap_or(0) == 0 {
        return Err(CliError::Insufficient(format!("insufficient exceedances: none above x = {}", xs[0])));
    }
    let last = xs.len() - 1;
    lines.push(format!("P(B > {}) = {} ({} exceedances)", xs[last], report.empirical[last], report.exceedances[last]));
    Ok(lines)
}

pub fn psbj(r: &Resolved) -> Result<Vec<String>, CliError> {
    let started = SystemTime::now();
    let spec = &r.config.network;
    check_simulable(spec, r.allow_bounded_arrivals)?;
    let u = busytail::fluid::all_coefficients(spec)?;
    let x = match (r.config.psbj.x, &r.config.reference) {
        (Some(x), _) => x,
        (None, Some(g)) => {
            let p = Prediction::new(spec, g)?;
            g.inverse_tail(PSBJ_DEFAULT_TAIL) / p.u_min()
        }
        (None, None) => return Err(CliError::Config("psbj needs either psbj.x or a reference tail".into())),
    };
    if !(x.is_finite() && x > 0.0) {
        return Err(CliError::Config(format!("psbj.x must be positive and finite, got {x}")));
    }
    let report: PsbjReport = psbj_diagnostic(spec, &u, x, &settings(r), &RandomStream::new(r.seed))?;
    let mut out = OutputDir::create(&r.out)?;
    out.text("psbj.csv", &report.to_csv())?;
    out.json("psbj.json", &Versioned { schema_version: SCHEMA_VERSION, report: &report })?;
    out.finish("psbj", r, started)?;
    Ok(vec![
        format!(
            "x = {x}: {} exceedances in {} cycles (L = {})",
            report.exceedances, report.n_cycles, report.group_size
        ),
        format!("single jump at eps = {:?}: {:?}", report.eps, report.single_jump),
        format!("double jump above C_U x = {}: {}", report.c_u * x, report.double_jump),
    ])
}

#[derive(Serialize)]
struct VerifySummary<'a> {
    schema_version: u32,
    trials: u64,
    group_size: usize,
    failures: u64,
    properties: &'a [PropertyCount],
}

pub fn verify(r: &Resolved) -> Result<Vec<String>, CliError> {
    let started = SystemTime::now();
    let report = verify_sample_paths(
        &r.config.network,
        r.trials,
        r.config.group_size,
        r.caps,
        r.allow_bounded_arrivals,
        &RandomStream::new(r.seed),
    )?;
    let mut out = OutputDir::create(&r.out)?;
    out.json(
        "verify.json",
        &VerifySummary {
            schema_version: SCHEMA_VERSION,
            trials: report.trials,
            group_size: report.group_size,
            failures: report.failures(),
            properties: &report.properties,
        },
    )?;
    out.finish("verify", r, started)?;
    let lines: Vec<String> =
        report.properties.iter().map(|p| format!("{}: {}/{}", p.name, p.passed, p.trials)).collect();
    if report.failures() > 0 {
        return Err(CliError::Failed(format!("{} property violations\n{}", report.failures(), lines.join("\n"))));
    }
    Ok(lines)
}

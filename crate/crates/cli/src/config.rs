//! Experiment config (`schema_version` 1) and its resolution against
//! command-line flags and environment overrides.

use std::path::{Path, PathBuf};

use busytail::sim::SafetyCaps;
use busytail::{DistSpec, NetworkSpec};
use serde::Deserialize;

use crate::CliError;

pub const SCHEMA_VERSION: u32 = 1;
pub const SEED_ENV: &str = "BUSYTAIL_SEED";
pub const WORKERS_ENV: &str = "BUSYTAIL_WORKERS";

const DEFAULT_CYCLES: u64 = 100_000;
const DEFAULT_GRID_POINTS: usize = 25;
const DEFAULT_TRIALS: u64 = 1_000;
const DEFAULT_OUT: &str = "busytail-out";

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    pub seed: Option<u64>,
    pub network: NetworkSpec,
    /// Reference tail `G` for the prediction.
    pub reference: Option<DistSpec>,
    pub cycles: Option<u64>,
    #[serde(default)]
    pub tail: TailParams,
    #[serde(default)]
    pub psbj: PsbjParams,
    #[serde(default)]
    pub verify: VerifyParams,
    /// UBQ group size `L`; picked by pilot when absent.
    pub group_size: Option<usize>,
    pub caps: Option<SafetyCaps>,
    pub workers: Option<usize>,
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub allow_bounded_arrivals: bool,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TailParams {
    /// Explicit grid; otherwise `grid_points` on the default grid.
    pub xs: Option<Vec<f64>>,
    pub grid_points: Option<usize>,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PsbjParams {
    /// Defaults to `G^-1(1e-3) / u_min` when a reference is given.
    pub x: Option<f64>,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyParams {
    pub trials: Option<u64>,
}

/// Command-line values that take precedence over the config.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub cycles: Option<u64>,
    pub workers: Option<usize>,
    pub out: Option<PathBuf>,
    pub allow_bounded_arrivals: bool,
}

/// Everything a command needs, after precedence is applied.
#[derive(Clone, Debug)]
pub struct Resolved {
    pub config: ExperimentConfig,
    pub config_sha256: String,
    pub seed: u64,
    pub cycles: u64,
    pub workers: usize,
    pub out: PathBuf,
    pub caps: SafetyCaps,
    pub allow_bounded_arrivals: bool,
    pub grid_points: usize,
    pub trials: u64,
}

fn env_value<T: std::str::FromStr>(name: &str) -> Result<Option<T>, CliError> {
    match std::env::var(name) {
        Ok(v) => v.trim().parse().map(Some).map_err(|_| CliError::Config(format!("{name}={v:?} is not a valid value"))),
        Err(_) => Ok(None),
    }
}

pub fn parse(text: &str) -> Result<ExperimentConfig, CliError> {
    let cfg: ExperimentConfig =
        serde_json::from_str(text).map_err(|e| CliError::Config(format!("cannot parse config: {e}")))?;
    if cfg.schema_version != SCHEMA_VERSION {
        return Err(CliError::Config(format!(
            "unsupported schema_version {} (this build reads {SCHEMA_VERSION})",
            cfg.schema_version
        )));
    }
    Ok(cfg)
}

/// Seed and workers resolve as flag, then environment, then config.
pub fn load(path: &Path, o: &Overrides) -> Result<Resolved, CliError> {
    let bytes = std::fs::read(path).map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    let text = String::from_utf8(bytes).map_err(|_| CliError::Config("config is not UTF-8".into()))?;
    let config = parse(&text)?;
    let seed = o
        .seed
        .or(env_value(SEED_ENV)?)
        .or(config.seed)
        .ok_or_else(|| CliError::Config(format!("no seed: set \"seed\" in the config, {SEED_ENV} or --seed")))?;
    let workers = o.workers.or(env_value(WORKERS_ENV)?).or(config.workers).unwrap_or(0);
    let cycles = o.cycles.or(config.cycles).unwrap_or(DEFAULT_CYCLES);
    let out = o.out.clone().or_else(|| config.out.clone()).unwrap_or_else(|| PathBuf::from(DEFAULT_OUT));
    let grid_points = config.tail.grid_points.unwrap_or(DEFAULT_GRID_POINTS);
    if grid_points < 2 {
        return Err(CliError::Config("tail.grid_points must be at least 2".into()));
    }
    let trials = config.verify.trials.unwrap_or(DEFAULT_TRIALS);
    Ok(Resolved {
        config_sha256: crate::output::sha256_hex(text.as_bytes()),
        seed,
        cycles,
        workers,
        out,
        caps: config.caps.unwrap_or_default(),
        allow_bounded_arrivals: o.allow_bounded_arrivals || config.allow_bounded_arrivals,
        grid_points,
        trials,
        config,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "schema_version": 1,
        "network": {
            "arrival": {"kind": "exponential", "mean": 1.0},
            "services": [{"kind": "exponential", "mean": 0.5}],
            "entry": [1.0],
            "routing": [[0.0, 1.0]]
        }
    }"#;

    #[test]
    fn minimal_config_parses_with_defaults() {
        let c = parse(MINIMAL).unwrap();
        assert!(c.seed.is_none() && c.reference.is_none() && !c.allow_bounded_arrivals);
        assert_eq!(c.network.stations(), 1);
    }

    #[test]
    fn wrong_version_and_unknown_fields_are_rejected() {
        assert!(matches!(
            parse(&MINIMAL.replace("\"schema_version\": 1", "\"schema_version\": 2")),
            Err(CliError::Config(_))
        ));
        assert!(matches!(
            parse(&MINIMAL.replace("\"schema_version\"", "\"bogus\": 0, \"schema_version\"")),
            Err(CliError::Config(_))
        ));
    }
}

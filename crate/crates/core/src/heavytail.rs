//! Distribution specifications with exact tails, inverse-CDF samplers and
//! the bookkeeping for heavy-tail reference constants.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::NetworkSpec;

/// Tails below this are treated as numerical underflow by [`irv_ratio_probe`].
pub const TAIL_UNDERFLOW: f64 = 1e-300;

const ALPHA_MATCH_TOL: f64 = 1e-12;

/// A non-negative distribution, written in configs as
/// `{"kind":"pareto","alpha":1.5,"xm":1.0}` and so on.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DistSpec {
    Deterministic {
        value: f64,
    },
    Uniform {
        lo: f64,
        hi: f64,
    },
    Exponential {
        mean: f64,
    },
    /// Classical Pareto on `[xm, inf)`: tail `(xm/x)^alpha`.
    Pareto {
        alpha: f64,
        xm: f64,
    },
    /// Lomax law on `[0, inf)`: tail `(1 + x/scale)^-alpha`.
    ShiftedPareto {
        alpha: f64,
        scale: f64,
    },
}

impl DistSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidDistribution(msg));
        let pos = |v: f64| v.is_finite() && v > 0.0;
        match *self {
            DistSpec::Deterministic { value } if !pos(value) => {
                bad(format!("deterministic value must be positive, got {value}"))
            }
            DistSpec::Uniform { lo, hi } if !(lo.is_finite() && lo >= 0.0 && hi.is_finite() && hi > lo) => {
                bad(format!("uniform needs 0 <= lo < hi, got ({lo}, {hi})"))
            }
            DistSpec::Exponential { mean } if !pos(mean) => {
                bad(format!("exponential mean must be positive, got {mean}"))
            }
            DistSpec::Pareto { alpha, xm } if !(pos(alpha) && alpha > 1.0 && pos(xm)) => {
                bad(format!("pareto needs alpha > 1 and xm > 0, got alpha={alpha}, xm={xm}"))
            }
            DistSpec::ShiftedPareto { alpha, scale } if !(pos(alpha) && alpha > 1.0 && pos(scale)) => {
                bad(format!("shifted pareto needs alpha > 1 and scale > 0, got alpha={alpha}, scale={scale}"))
            }
            _ => Ok(()),
        }
    }

    pub fn mean(&self) -> f64 {
        match *self {
            DistSpec::Deterministic { value } => value,
            DistSpec::Uniform { lo, hi } => 0.5 * (lo + hi),
            DistSpec::Exponential { mean } => mean,
            DistSpec::Pareto { alpha, xm } => alpha * xm / (alpha - 1.0),
            DistSpec::ShiftedPareto { alpha, scale } => scale / (alpha - 1.0),
        }
    }

    /// Exact survival function `P(X > x)`.
    pub fn tail(&self, x: f64) -> f64 {
        match *self {
            DistSpec::Deterministic { value } => {
                if x < value {
                    1.0
                } else {
                    0.0
                }
            }
            DistSpec::Uniform { lo, hi } => {
                if x < lo {
                    1.0
                } else if x >= hi {
                    0.0
                } else {
                    (hi - x) / (hi - lo)
                }
            }
            DistSpec::Exponential { mean } => {
                if x <= 0.0 {
                    1.0
                } else {
                    (-x / mean).exp()
                }
            }
            DistSpec::Pareto { alpha, xm } => {
                if x <= xm {
                    1.0
                } else {
                    (xm / x).powf(alpha)
                }
            }
            DistSpec::ShiftedPareto { alpha, scale } => {
                if x <= 0.0 {
                    1.0
                } else {
                    (1.0 + x / scale).powf(-alpha)
                }
            }
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        1.0 - self.tail(x)
    }

    /// Smallest `x` with `P(X > x) <= p`, computed without forming `1 - p`
    /// so that tiny tail probabilities keep full precision.
    pub fn inverse_tail(&self, p: f64) -> f64 {
        let p = p.clamp(0.0, 1.0);
        match *self {
            DistSpec::Deterministic { value } => {
                if p < 1.0 {
                    value
                } else {
                    0.0
                }
            }
            DistSpec::Uniform { lo, hi } => hi - p * (hi - lo),
            DistSpec::Exponential { mean } => -mean * p.ln(),
            DistSpec::Pareto { alpha, xm } => xm * p.powf(-1.0 / alpha),
            DistSpec::ShiftedPareto { alpha, scale } => scale * (p.powf(-1.0 / alpha) - 1.0),
        }
    }

    /// Inverse CDF at `u` in `[0, 1)`.
    pub fn quantile(&self, u: f64) -> f64 {
        match *self {
            DistSpec::Deterministic { value } => value,
            DistSpec::Uniform { lo, hi } => lo + u * (hi - lo),
            DistSpec::Exponential { mean } => -mean * (-u).ln_1p(),
            _ => self.inverse_tail(1.0 - u),
        }
    }

    /// One variate; consumes exactly one uniform.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.quantile(rng.random::<f64>())
    }

    /// `P(X > x) > 0` for every `x`.
    pub fn has_unbounded_support(&self) -> bool {
        matches!(self, DistSpec::Exponential { .. } | DistSpec::Pareto { .. } | DistSpec::ShiftedPareto { .. })
    }

    /// For power-law tails `P(X > x) ~ scale^alpha * x^-alpha`, returns
    /// `(alpha, scale^alpha)`. `None` for lighter families.
    pub fn power_law(&self) -> Option<(f64, f64)> {
        match *self {
            DistSpec::Pareto { alpha, xm } => Some((alpha, xm.powf(alpha))),
            DistSpec::ShiftedPareto { alpha, scale } => Some((alpha, scale.powf(alpha))),
            _ => None,
        }
    }
}

/// Result of [`irv_ratio_probe`].
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RatioProbe {
    pub xs: Vec<f64>,
    pub ratios: Vec<f64>,
    /// Set when the grid was cut short because a tail underflowed.
    pub truncated: bool,
}

/// Tabulates `tail(y x) / tail(x)` over an increasing grid.
pub fn irv_ratio_probe(d: &DistSpec, y: f64, xs: &[f64]) -> Result<RatioProbe> {
    if !(y > 1.0) {
        return Err(Error::Config(format!("ratio probe needs y > 1, got {y}")));
    }
    if xs.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::Config("ratio probe grid must be increasing".into()));
    }
    let mut out = RatioProbe { xs: Vec::new(), ratios: Vec::new(), truncated: false };
    for &x in xs {
        let (num, den) = (d.tail(y * x), d.tail(x));
        if den < TAIL_UNDERFLOW || num < TAIL_UNDERFLOW {
            out.truncated = true;
            break;
        }
        out.xs.push(x);
        out.ratios.push(num / den);
    }
    Ok(out)
}

/// Reference tail `G` and per-station constants `c_k` with
/// `P(service_k > x) ~ c_k * G(x)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HtaProfile {
    pub reference: DistSpec,
    pub c: Vec<f64>,
}

impl HtaProfile {
    pub fn total(&self) -> f64 {
        self.c.iter().sum()
    }
}

/// Computes `c_k` analytically for power-law services sharing the
/// reference index; lighter services get `c_k = 0`.
pub fn hta_constants(spec: &NetworkSpec, reference: &DistSpec) -> Result<HtaProfile> {
    let (ref_alpha, ref_coef) = reference
        .power_law()
        .ok_or_else(|| Error::NoCommonReference(format!("reference {reference:?} is not a power-law tail")))?;
    let mut c = Vec::with_capacity(spec.stations());
    for (k, service) in spec.services.iter().enumerate() {
        let ck = match service.power_law() {
            None => 0.0,
            Some((alpha, coef)) => {
                if (alpha - ref_alpha).abs() <= ALPHA_MATCH_TOL {
                    coef / ref_coef
                } else if alpha < ref_alpha {
                    return Err(Error::NoCommonReference(format!(
                        "station {} has tail index {alpha}, heavier than reference index {ref_alpha}",
                        k + 1
                    )));
                } else {
                    0.0
                }
            }
        };
        c.push(ck);
    }
    if !(c.iter().sum::<f64>() > 0.0) {
        return Err(Error::NoCommonReference("no station is tail-equivalent to the reference (all c_k = 0)".into()));
    }
    Ok(HtaProfile { reference: *reference, c })
}

//! Infill criteria.
//!
//! Every criterion here is oriented for minimization: smaller is more
//! desirable. Criteria that are naturally maximized (expected improvement,
//! standard error, expected quantile improvement) are returned negated.

use std::fmt;
use std::str::FromStr;

use statrs::distribution::{Continuous, ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::surrogate::Prediction;

/// Standard errors at or below this are treated as zero uncertainty.
pub const MIN_SE: f64 = 1e-12;

fn std_normal() -> Normal {
    Normal::standard()
}

/// Value injected for a pending point in constant-liar batches.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Liar {
    Min,
    Max,
    Mean,
    /// The surrogate's own posterior mean ("kriging believer").
    Believer,
}

impl FromStr for Liar {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "min" => Ok(Liar::Min),
            "max" => Ok(Liar::Max),
            "mean" => Ok(Liar::Mean),
            "believer" | "kb" => Ok(Liar::Believer),
            _ => Err(Error::Parse(format!("unknown liar `{s}`"))),
        }
    }
}

impl fmt::Display for Liar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Liar::Min => "min",
            Liar::Max => "max",
            Liar::Mean => "mean",
            Liar::Believer => "believer",
        })
    }
}

/// Which criterion to optimize, with its parameters.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum CriterionSpec {
    Mean,
    Se,
    Ei,
    Lcb {
        lambda: f64,
    },
    /// `tau` is the noise standard deviation; `None` takes it from the
    /// surrogate's fitted nugget.
    Eqi {
        beta: f64,
        tau: Option<f64>,
    },
    Qlcb {
        lambda: f64,
        m: usize,
    },
    ConstantLiar {
        liar: Liar,
        m: usize,
    },
}

impl CriterionSpec {
    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            CriterionSpec::Lcb { lambda } => lambda > 0.0 && lambda.is_finite(),
            CriterionSpec::Eqi { beta, tau } => {
                beta > 0.5 && beta < 1.0 && tau.is_none_or(|t| t >= 0.0 && t.is_finite())
            }
            CriterionSpec::Qlcb { lambda, m } => lambda > 0.0 && lambda.is_finite() && m >= 1,
            CriterionSpec::ConstantLiar { m, .. } => m >= 1,
            _ => true,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!("invalid criterion parameters: {self}")))
        }
    }

    /// Points proposed per iteration, when the criterion fixes it.
    pub fn batch_size(&self) -> Option<usize> {
        match *self {
            CriterionSpec::Qlcb { m, .. } | CriterionSpec::ConstantLiar { m, .. } => Some(m),
            _ => None,
        }
    }
}

impl FromStr for CriterionSpec {
    type Err = Error;

    /// Parses `ei`, `mean`, `se`, `lcb:1.0`, `eqi:0.75[:tau]`, `qlcb:2.0:4`
    /// and `cl:min:4`.
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.trim().split(':').collect();
        let bad = || Error::Parse(format!("cannot parse criterion `{s}`"));
        let num = |t: &str| t.parse::<f64>().map_err(|_| bad());
        let count = |t: &str| t.parse::<usize>().map_err(|_| bad());
        let spec = match parts.as_slice() {
            ["mean"] => CriterionSpec::Mean,
            ["se"] => CriterionSpec::Se,
            ["ei"] => CriterionSpec::Ei,
            ["lcb"] => CriterionSpec::Lcb { lambda: 1.0 },
            ["lcb", l] => CriterionSpec::Lcb { lambda: num(l)? },
            ["eqi", b] => CriterionSpec::Eqi {
                beta: num(b)?,
                tau: None,
            },
            ["eqi", b, t] => CriterionSpec::Eqi {
                beta: num(b)?,
                tau: Some(num(t)?),
            },
            ["qlcb", l, m] => CriterionSpec::Qlcb {
                lambda: num(l)?,
                m: count(m)?,
            },
            ["cl", liar, m] => CriterionSpec::ConstantLiar {
                liar: liar.parse()?,
                m: count(m)?,
            },
            _ => return Err(bad()),
        };
        spec.validate()?;
        Ok(spec)
    }
}

impl fmt::Display for CriterionSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CriterionSpec::Mean => write!(f, "mean"),
            CriterionSpec::Se => write!(f, "se"),
            CriterionSpec::Ei => write!(f, "ei"),
            CriterionSpec::Lcb { lambda } => write!(f, "lcb:{lambda}"),
            CriterionSpec::Eqi { beta, tau: None } => write!(f, "eqi:{beta}"),
            CriterionSpec::Eqi { beta, tau: Some(t) } => write!(f, "eqi:{beta}:{t}"),
            CriterionSpec::Qlcb { lambda, m } => write!(f, "qlcb:{lambda}:{m}"),
            CriterionSpec::ConstantLiar { liar, m } => write!(f, "cl:{liar}:{m}"),
        }
    }
}

/// Summary of the observed targets a criterion needs.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ArchiveStats {
    pub y_min: f64,
    pub y_max: f64,
    pub y_mean: f64,
    /// Lowest plug-in quantile over evaluated points, for EQI.
    pub q_min: Option<f64>,
}

impl ArchiveStats {
    /// Stats over finite values; `None` if there are none.
    pub fn from_values(y: &[f64]) -> Option<Self> {
        let finite: Vec<f64> = y.iter().copied().filter(|v| v.is_finite()).collect();
        if finite.is_empty() {
            return None;
        }
        Some(Self {
            y_min: finite.iter().copied().fold(f64::INFINITY, f64::min),
            y_max: finite.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            y_mean: finite.iter().sum::<f64>() / finite.len() as f64,
            q_min: None,
        })
    }
}

/// Negated expected improvement over `y_min`.
pub fn expected_improvement(mean: f64, se: f64, y_min: f64) -> f64 {
    if se <= MIN_SE {
        return 0.0;
    }
    let n = std_normal();
    let z = (y_min - mean) / se;
    // far in the lower tail the two terms cancel; the exact value is tiny and positive
    -(se * (z * n.cdf(z) + n.pdf(z))).max(0.0)
}

pub fn lower_confidence_bound(mean: f64, se: f64, lambda: f64) -> f64 {
    mean - lambda * se
}

/// Plug-in `beta`-quantile `mean + Phi^-1(beta) * se`.
pub fn beta_quantile(mean: f64, se: f64, beta: f64) -> f64 {
    mean + std_normal().inverse_cdf(beta) * se
}

/// Negated expected quantile improvement over `q_min`.
///
/// The quantile estimator's spread is `se^2 / sqrt(se^2 + tau^2)`, with `tau`
/// the observation-noise standard deviation.
pub fn expected_quantile_improvement(mean: f64, se: f64, q_min: f64, beta: f64, tau: f64) -> f64 {
    if se <= MIN_SE {
        return 0.0;
    }
    let q = beta_quantile(mean, se, beta);
    let s_q = se * se / (se * se + tau * tau).sqrt();
    if s_q <= MIN_SE {
        return 0.0;
    }
    let n = std_normal();
    let z = (q_min - q) / s_q;
    -(s_q * (z * n.cdf(z) + n.pdf(z))).max(0.0)
}

/// Single-point criterion value. Batch criteria evaluate their base
/// criterion: LCB at the mean `lambda` for qLCB, EI for constant liar.
pub fn evaluate(spec: &CriterionSpec, p: Prediction, stats: &ArchiveStats, tau: f64) -> f64 {
    match *spec {
        CriterionSpec::Mean => p.mean,
        CriterionSpec::Se => -p.se,
        CriterionSpec::Ei | CriterionSpec::ConstantLiar { .. } => expected_improvement(p.mean, p.se, stats.y_min),
        CriterionSpec::Lcb { lambda } | CriterionSpec::Qlcb { lambda, .. } => {
            lower_confidence_bound(p.mean, p.se, lambda)
        }
        CriterionSpec::Eqi { beta, tau: fixed } => expected_quantile_improvement(
            p.mean,
            p.se,
            stats.q_min.unwrap_or(stats.y_min),
            beta,
            fixed.unwrap_or(tau),
        ),
    }
}

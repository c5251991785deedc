//! Regression metrics with explicit accounting for non-finite predictions.
//!
//! RRSE and R² normalize by the evaluated set's own mean: a model that always
//! predicts that mean scores exactly 1 (RRSE) and 0 (R²). This makes 1.0 the
//! natural "no better than averaging" reference line in every table.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Serde adapter for f64 fields that must survive JSON round-trips even when
/// NaN or infinite. serde_json writes NaN as null and refuses to read null
/// back into f64, so non-finite values are encoded as the strings "NaN",
/// "Inf", "-Inf" instead.
pub mod float_repr {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else if v.is_nan() {
            s.serialize_str("NaN")
        } else if *v > 0.0 {
            s.serialize_str("Inf")
        } else {
            s.serialize_str("-Inf")
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Tag(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Num(v) => Ok(v),
            Repr::Tag(t) => match t.as_str() {
                "NaN" => Ok(f64::NAN),
                "Inf" => Ok(f64::INFINITY),
                "-Inf" => Ok(f64::NEG_INFINITY),
                other => Err(serde::de::Error::custom(format!(
                    "unrecognized float tag {other:?}"
                ))),
            },
        }
    }
}

/// What to do with pairs where y or ŷ is NaN/Inf.
///
/// `Propagate` keeps them in the sums, so one bad prediction turns the whole
/// report NaN. `Skip` scores the finite subset only. Either way `nan_count`
/// records how many pairs were affected.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NanPolicy {
    #[default]
    Propagate,
    Skip,
}

impl NanPolicy {
    pub fn name(&self) -> &'static str {
        match self {
            NanPolicy::Propagate => "propagate",
            NanPolicy::Skip => "skip",
        }
    }
}

impl std::str::FromStr for NanPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "propagate" => Ok(NanPolicy::Propagate),
            "skip" => Ok(NanPolicy::Skip),
            other => Err(Error::config(format!("unknown nan policy {other:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    /// Total pairs presented, including non-finite ones.
    pub n: usize,
    /// Pairs where y or ŷ was NaN or infinite.
    pub nan_count: usize,
    #[serde(with = "float_repr")]
    pub mse: f64,
    #[serde(with = "float_repr")]
    pub rrse: f64,
    #[serde(with = "float_repr")]
    pub r2: f64,
    #[serde(with = "float_repr")]
    pub mae: f64,
}

impl MetricsReport {
    pub fn nan(n: usize, nan_count: usize) -> Self {
        MetricsReport {
            n,
            nan_count,
            mse: f64::NAN,
            rrse: f64::NAN,
            r2: f64::NAN,
            mae: f64::NAN,
        }
    }
}

/// Scores predictions against targets.
///
/// MSE and MAE need one usable pair; RRSE and R² additionally need at least
/// two pairs and nonzero target variance, and come back NaN otherwise.
pub fn evaluate(y: &[f64], y_hat: &[f64], policy: NanPolicy) -> Result<MetricsReport> {
    if y.len() != y_hat.len() {
        return Err(Error::shape(
            "evaluate",
            format!("{} predictions", y.len()),
            y_hat.len().to_string(),
        ));
    }
    let n = y.len();
    let nan_count = y
        .iter()
        .zip(y_hat)
        .filter(|(a, b)| !a.is_finite() || !b.is_finite())
        .count();

    let pairs: Vec<(f64, f64)> = match policy {
        NanPolicy::Propagate => y.iter().copied().zip(y_hat.iter().copied()).collect(),
        NanPolicy::Skip => y
            .iter()
            .copied()
            .zip(y_hat.iter().copied())
            .filter(|(a, b)| a.is_finite() && b.is_finite())
            .collect(),
    };
    if pairs.is_empty() {
        return Ok(MetricsReport::nan(n, nan_count));
    }

    let used = pairs.len() as f64;
    let mut abs_sum = 0.0;
    let mut sq_sum = 0.0;
    let mut y_sum = 0.0;
    for &(t, p) in &pairs {
        abs_sum += (p - t).abs();
        sq_sum += (p - t) * (p - t);
        y_sum += t;
    }
    let mse = sq_sum / used;
    let mae = abs_sum / used;

    let y_bar = y_sum / used;
    let ss_tot: f64 = pairs.iter().map(|&(t, _)| (t - y_bar) * (t - y_bar)).sum();
    let (rrse, r2) = if pairs.len() < 2 || ss_tot == 0.0 {
        (f64::NAN, f64::NAN)
    } else {
        (
            (sq_sum / ss_tot).sqrt(),
            1.0 - sq_sum / ss_tot,
        )
    };

    Ok(MetricsReport {
        n,
        nan_count,
        mse,
        rrse,
        r2,
        mae,
    })
}

pub fn rrse(y: &[f64], y_hat: &[f64]) -> f64 {
    evaluate(y, y_hat, NanPolicy::Propagate).map_or(f64::NAN, |m| m.rrse)
}

pub fn r2(y: &[f64], y_hat: &[f64]) -> f64 {
    evaluate(y, y_hat, NanPolicy::Propagate).map_or(f64::NAN, |m| m.r2)
}

pub fn mae(y: &[f64], y_hat: &[f64]) -> f64 {
    evaluate(y, y_hat, NanPolicy::Propagate).map_or(f64::NAN, |m| m.mae)
}

pub fn mse(y: &[f64], y_hat: &[f64]) -> f64 {
    evaluate(y, y_hat, NanPolicy::Propagate).map_or(f64::NAN, |m| m.mse)
}

/// Percentile of an ascending pre-sorted slice, with linear interpolation
/// between the two closest ranks: for rank `h = (n-1) p / 100`, returns
/// `v[floor(h)]` blended with `v[floor(h)+1]` by the fractional part of `h`.
pub fn percentile(sorted: &[f64], p: f64) -> Result<f64> {
    if sorted.is_empty() {
        return Err(Error::contract("percentile of an empty slice"));
    }
    if !(0.0..=100.0).contains(&p) {
        return Err(Error::contract(format!(
            "percentile rank must be in [0, 100], got {p}"
        )));
    }
    let h = (sorted.len() - 1) as f64 * p / 100.0;
    let lo = h.floor() as usize;
    let frac = h - lo as f64;
    if frac == 0.0 {
        return Ok(sorted[lo]);
    }
    Ok(sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]))
}

//! Experiment configuration: a flat `key = value` text format, per-experiment
//! defaults, and the resolved snapshot that gets embedded in every report.
//!
//! The format is deliberately small. Lines are `key = value`, `#` starts a
//! comment, keys may not repeat, and every key must be meaningful for the
//! chosen experiment. `experiment` is the only required key; everything else
//! falls back to the defaults listed on [`ExperimentConfig::defaults`].

use crate::baselines::ScalarBaselineKind;
use crate::error::{Error, Result};
use crate::metrics::NanPolicy;
use crate::mnn::MnnKind;
use crate::poly::{builtin_polynomials, PolynomialExpr};
use crate::synth::{self, BenchmarkFn};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

/// Which study to run.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ExperimentKind {
    /// Single-target extrapolation demo: a feedforward net and one
    /// multiplicative net trained on the same narrow Gaussian, scored on a
    /// shifted one.
    Fig1Demo,
    /// The polynomial suite: every target trained on one Gaussian and scored
    /// on a 3x3 grid of held-out distributions.
    Poly,
    /// Closed-form benchmark functions with a percentile split: interpolation
    /// vs the outer shell of the domain.
    Synth,
    /// Epidemic metamodels swept over simulation duration at a fixed lag.
    SirDuration,
    /// Epidemic metamodels swept over lag at a fixed duration.
    SirLag,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 5] = [
        ExperimentKind::Fig1Demo,
        ExperimentKind::Poly,
        ExperimentKind::Synth,
        ExperimentKind::SirDuration,
        ExperimentKind::SirLag,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            ExperimentKind::Fig1Demo => "fig1_demo",
            ExperimentKind::Poly => "poly",
            ExperimentKind::Synth => "synth",
            ExperimentKind::SirDuration => "sir_duration",
            ExperimentKind::SirLag => "sir_lag",
        }
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ExperimentKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "fig1_demo" => Ok(ExperimentKind::Fig1Demo),
            "poly" => Ok(ExperimentKind::Poly),
            "synth" => Ok(ExperimentKind::Synth),
            "sir_duration" => Ok(ExperimentKind::SirDuration),
            "sir_lag" => Ok(ExperimentKind::SirLag),
            other => Err(Error::config(format!("unknown experiment {other:?}"))),
        }
    }
}

/// Problem sizes. `Desk` finishes on one core in minutes to hours; `Full`
/// reproduces the headline sample counts and is an overnight affair.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Scale {
    Desk,
    Full,
}

impl Scale {
    pub fn name(&self) -> &'static str {
        match self {
            Scale::Desk => "desk",
            Scale::Full => "full",
        }
    }

    /// Training samples per polynomial target.
    pub fn poly_train_samples(self) -> usize {
        match self {
            Scale::Desk => 10_000,
            Scale::Full => 100_000,
        }
    }

    /// Evaluation samples per held-out distribution.
    pub fn poly_eval_samples(self) -> usize {
        match self {
            Scale::Desk => 1_000,
            Scale::Full => 10_000,
        }
    }

    pub fn fig1_train_samples(self) -> usize {
        match self {
            Scale::Desk => 5_000,
            Scale::Full => 50_000,
        }
    }

    pub fn fig1_eval_samples(self) -> usize {
        match self {
            Scale::Desk => 1_000,
            Scale::Full => 10_000,
        }
    }

    /// Samples per benchmark function, split by percentile afterwards.
    pub fn synth_samples(self) -> usize {
        match self {
            Scale::Desk => 20_000,
            Scale::Full => 100_000,
        }
    }

    /// Epidemic runs in the training regime. A fifth as many are drawn from
    /// the held-out rate regime for testing.
    pub fn sir_simulations(self) -> usize {
        match self {
            Scale::Desk => 5_000,
            Scale::Full => 100_000,
        }
    }
}

impl fmt::Display for Scale {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scale {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "desk" => Ok(Scale::Desk),
            "full" => Ok(Scale::Full),
            other => Err(Error::config(format!("unknown scale {other:?}"))),
        }
    }
}

/// Anything that can occupy a model column: a multiplicative net, a scalar
/// baseline, or the ReLU feedforward reference.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ModelKind {
    Mnn(MnnKind),
    Baseline(ScalarBaselineKind),
    FfnnRelu,
}

impl ModelKind {
    pub const ALL: [ModelKind; 9] = [
        ModelKind::Mnn(MnnKind::Pann),
        ModelKind::Mnn(MnnKind::Ccp),
        ModelKind::Mnn(MnnKind::PdcLow),
        ModelKind::Mnn(MnnKind::Pdc),
        ModelKind::Baseline(ScalarBaselineKind::Average),
        ModelKind::Baseline(ScalarBaselineKind::Linear),
        ModelKind::FfnnRelu,
        ModelKind::Baseline(ScalarBaselineKind::RandomForest),
        ModelKind::Baseline(ScalarBaselineKind::GradientBoosting),
    ];

    pub fn name(&self) -> &'static str {
        match self {
            ModelKind::Mnn(kind) => kind.name(),
            ModelKind::Baseline(kind) => kind.name(),
            ModelKind::FfnnRelu => "ffnn_relu",
        }
    }

    pub fn is_mnn(&self) -> bool {
        matches!(self, ModelKind::Mnn(_))
    }

    /// Tree ensembles, the baselines that cannot leave the training range.
    pub fn is_tree(&self) -> bool {
        matches!(
            self,
            ModelKind::Baseline(
                ScalarBaselineKind::RandomForest | ScalarBaselineKind::GradientBoosting
            )
        )
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let lower = s.to_ascii_lowercase();
        if lower == "ffnn_relu" {
            return Ok(ModelKind::FfnnRelu);
        }
        if let Ok(kind) = lower.parse::<MnnKind>() {
            return Ok(ModelKind::Mnn(kind));
        }
        if let Ok(kind) = lower.parse::<ScalarBaselineKind>() {
            return Ok(ModelKind::Baseline(kind));
        }
        Err(Error::config(format!(
            "unknown model {s:?} (expected one of pann, ccp, pdclow, pdc, avg, lr, ffnn_relu, rf, gb)"
        )))
    }
}

/// Fully resolved run description. Construct with [`ExperimentConfig::parse`]
/// or start from [`ExperimentConfig::defaults`] and adjust fields directly.
#[derive(Clone, Debug)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub seed: u64,
    pub scale: Scale,
    pub nan_policy: NanPolicy,
    pub models: Vec<ModelKind>,
    pub epochs: usize,
    /// Targets for the Gaussian experiments. Exactly one for the demo.
    pub polynomials: Vec<PolynomialExpr>,
    pub train_mu: f64,
    pub train_sigma: f64,
    /// Shifted evaluation distribution; demo only. The polynomial suite
    /// always scores on the fixed 3x3 grid instead.
    pub test_mu: f64,
    pub test_sigma: f64,
    pub functions: Vec<BenchmarkFn>,
    pub durations: Vec<usize>,
    pub lags: Vec<usize>,
}

impl ExperimentConfig {
    /// The stock run for each experiment. The demo trains a ReLU net against
    /// one multiplicative net on `a^2 - a`; the polynomial suite covers the
    /// whole builtin manifest with the four multiplicative nets; the
    /// benchmark suite adds every scalar baseline; the epidemic sweeps use
    /// the heavier baselines only and two passes over the pair data.
    pub fn defaults(experiment: ExperimentKind) -> ExperimentConfig {
        let mnns = [
            ModelKind::Mnn(MnnKind::Pann),
            ModelKind::Mnn(MnnKind::Ccp),
            ModelKind::Mnn(MnnKind::PdcLow),
            ModelKind::Mnn(MnnKind::Pdc),
        ];
        let mut cfg = ExperimentConfig {
            experiment,
            seed: 1,
            scale: Scale::Desk,
            nan_policy: NanPolicy::Propagate,
            models: mnns.to_vec(),
            epochs: 30,
            polynomials: Vec::new(),
            train_mu: 0.0,
            train_sigma: 1.0,
            test_mu: 0.0,
            test_sigma: 1.0,
            functions: Vec::new(),
            durations: Vec::new(),
            lags: Vec::new(),
        };
        match experiment {
            ExperimentKind::Fig1Demo => {
                cfg.models = vec![ModelKind::FfnnRelu, ModelKind::Mnn(MnnKind::Ccp)];
                cfg.polynomials = vec!["a^2 - a".parse().expect("builtin demo target")];
                cfg.test_mu = 5.0;
                cfg.test_sigma = 1.0;
            }
            ExperimentKind::Poly => {
                cfg.polynomials = builtin_polynomials();
                cfg.train_sigma = 5.0;
            }
            ExperimentKind::Synth => {
                cfg.models.extend([
                    ModelKind::Baseline(ScalarBaselineKind::Average),
                    ModelKind::Baseline(ScalarBaselineKind::Linear),
                    ModelKind::Baseline(ScalarBaselineKind::RandomForest),
                    ModelKind::Baseline(ScalarBaselineKind::GradientBoosting),
                ]);
                cfg.epochs = 100;
                cfg.functions = BenchmarkFn::ALL.to_vec();
            }
            ExperimentKind::SirDuration => {
                cfg.models.extend([
                    ModelKind::Baseline(ScalarBaselineKind::Linear),
                    ModelKind::Baseline(ScalarBaselineKind::RandomForest),
                    ModelKind::Baseline(ScalarBaselineKind::GradientBoosting),
                ]);
                cfg.epochs = 2;
                cfg.durations = vec![2, 6, 12, 24, 30, 40, 60, 120];
                cfg.lags = vec![1];
            }
            ExperimentKind::SirLag => {
                cfg.models.extend([
                    ModelKind::Baseline(ScalarBaselineKind::Linear),
                    ModelKind::Baseline(ScalarBaselineKind::RandomForest),
                    ModelKind::Baseline(ScalarBaselineKind::GradientBoosting),
                ]);
                cfg.epochs = 2;
                cfg.durations = vec![120];
                cfg.lags = vec![1, 2, 3, 4, 5];
            }
        }
        cfg
    }

    pub fn from_file(path: &Path) -> Result<ExperimentConfig> {
        let text = std::fs::read_to_string(path)?;
        ExperimentConfig::parse(&text)
    }

    /// Parses the flat text format. The `experiment` key picks the defaults;
    /// every other key overrides one field and must belong to that
    /// experiment's vocabulary.
    pub fn parse(text: &str) -> Result<ExperimentConfig> {
        let mut pairs: Vec<(String, String)> = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(Error::config(format!(
                    "line {}: expected `key = value`, got {line:?}",
                    idx + 1
                )));
            };
            let key = key.trim().to_ascii_lowercase();
            let value = value.trim().to_string();
            if key.is_empty() {
                return Err(Error::config(format!("line {}: empty key", idx + 1)));
            }
            if pairs.iter().any(|(k, _)| *k == key) {
                return Err(Error::config(format!("duplicate key {key:?}")));
            }
            pairs.push((key, value));
        }
        let experiment = pairs
            .iter()
            .find(|(k, _)| k == "experiment")
            .ok_or_else(|| Error::config("missing required key `experiment`"))?
            .1
            .parse::<ExperimentKind>()?;
        let mut cfg = ExperimentConfig::defaults(experiment);
        for (key, value) in &pairs {
            if key != "experiment" {
                cfg.apply(key, value)?;
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn apply(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "seed" => self.seed = parse_int(key, value)?,
            "scale" => self.scale = value.parse()?,
            "nan_policy" => self.nan_policy = value.parse()?,
            "epochs" => self.epochs = parse_int(key, value)? as usize,
            "models" => self.models = parse_models(value)?,
            _ => self.apply_specific(key, value)?,
        }
        Ok(())
    }

    fn apply_specific(&mut self, key: &str, value: &str) -> Result<()> {
        use ExperimentKind::*;
        match (self.experiment, key) {
            (Fig1Demo, "polynomial") => self.polynomials = vec![value.parse()?],
            (Poly, "polynomials") => {
                self.polynomials = if value.eq_ignore_ascii_case("all") {
                    builtin_polynomials()
                } else {
                    parse_list(key, value)?
                }
            }
            (Fig1Demo | Poly, "train_mu") => self.train_mu = parse_float(key, value)?,
            (Fig1Demo | Poly, "train_sigma") => self.train_sigma = parse_float(key, value)?,
            (Fig1Demo, "test_mu") => self.test_mu = parse_float(key, value)?,
            (Fig1Demo, "test_sigma") => self.test_sigma = parse_float(key, value)?,
            (Synth, "functions") => {
                self.functions = if value.eq_ignore_ascii_case("all") {
                    BenchmarkFn::ALL.to_vec()
                } else {
                    parse_list(key, value)?
                }
            }
            (SirDuration, "durations") => self.durations = parse_int_list(key, value)?,
            (SirDuration, "lag") => self.lags = vec![parse_int(key, value)? as usize],
            (SirLag, "duration") => self.durations = vec![parse_int(key, value)? as usize],
            (SirLag, "lags") => self.lags = parse_int_list(key, value)?,
            _ => {
                return Err(Error::config(format!(
                    "key {key:?} does not apply to the {} experiment",
                    self.experiment
                )))
            }
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        if self.models.is_empty() {
            return Err(Error::config("at least one model is required"));
        }
        for (i, m) in self.models.iter().enumerate() {
            if self.models[..i].contains(m) {
                return Err(Error::config(format!("model {m} listed twice")));
            }
        }
        if self.epochs == 0 {
            return Err(Error::config("epochs must be at least 1"));
        }
        match self.experiment {
            ExperimentKind::Fig1Demo | ExperimentKind::Poly => {
                if self.polynomials.is_empty() {
                    return Err(Error::config("at least one polynomial target is required"));
                }
                for expr in &self.polynomials {
                    if expr.variables().is_empty() {
                        return Err(Error::config(format!(
                            "target {expr} is constant; it has no inputs to learn from"
                        )));
                    }
                }
                check_sigma("train_sigma", self.train_sigma)?;
                check_finite("train_mu", self.train_mu)?;
                if self.experiment == ExperimentKind::Fig1Demo {
                    check_sigma("test_sigma", self.test_sigma)?;
                    check_finite("test_mu", self.test_mu)?;
                }
            }
            ExperimentKind::Synth => {
                if self.functions.is_empty() {
                    return Err(Error::config("at least one benchmark function is required"));
                }
            }
            ExperimentKind::SirDuration | ExperimentKind::SirLag => {
                if self.durations.is_empty() || self.lags.is_empty() {
                    return Err(Error::config("durations and lags must be nonempty"));
                }
                if self.experiment == ExperimentKind::SirDuration && self.lags.len() != 1 {
                    return Err(Error::config("the duration sweep takes a single lag"));
                }
                if self.experiment == ExperimentKind::SirLag && self.durations.len() != 1 {
                    return Err(Error::config("the lag sweep takes a single duration"));
                }
                for &lag in &self.lags {
                    if lag == 0 {
                        return Err(Error::config("lag must be at least 1"));
                    }
                }
                for &t in &self.durations {
                    for &lag in &self.lags {
                        if t % lag != 0 || t / lag < 2 {
                            return Err(Error::config(format!(
                                "duration {t} must be a multiple of lag {lag} with at least 2 steps"
                            )));
                        }
                    }
                }
            }
        }
        Ok(())
    }

    /// The resolved values a report needs to be reproducible, including the
    /// sample counts implied by the scale.
    pub fn snapshot(&self) -> ConfigSnapshot {
        let mut snap = ConfigSnapshot {
            experiment: self.experiment.name().to_string(),
            scale: self.scale.name().to_string(),
            seed: self.seed,
            nan_policy: self.nan_policy.name().to_string(),
            epochs: self.epochs,
            models: self.models.iter().map(|m| m.name().to_string()).collect(),
            polynomials: None,
            train_mu: None,
            train_sigma: None,
            test_mu: None,
            test_sigma: None,
            functions: None,
            durations: None,
            lags: None,
            train_samples: None,
            eval_samples: None,
            simulations: None,
        };
        match self.experiment {
            ExperimentKind::Fig1Demo => {
                snap.polynomials = Some(self.polynomials.iter().map(|p| p.to_string()).collect());
                snap.train_mu = Some(self.train_mu);
                snap.train_sigma = Some(self.train_sigma);
                snap.test_mu = Some(self.test_mu);
                snap.test_sigma = Some(self.test_sigma);
                snap.train_samples = Some(self.scale.fig1_train_samples());
                snap.eval_samples = Some(self.scale.fig1_eval_samples());
            }
            ExperimentKind::Poly => {
                snap.polynomials = Some(self.polynomials.iter().map(|p| p.to_string()).collect());
                snap.train_mu = Some(self.train_mu);
                snap.train_sigma = Some(self.train_sigma);
                snap.train_samples = Some(self.scale.poly_train_samples());
                snap.eval_samples = Some(self.scale.poly_eval_samples());
            }
            ExperimentKind::Synth => {
                snap.functions = Some(self.functions.iter().map(|f| f.name().to_string()).collect());
                snap.train_samples = Some(self.scale.synth_samples());
            }
            ExperimentKind::SirDuration | ExperimentKind::SirLag => {
                snap.durations = Some(self.durations.clone());
                snap.lags = Some(self.lags.clone());
                snap.simulations = Some(self.scale.sir_simulations());
            }
        }
        snap
    }
}

/// What actually ran, embedded verbatim in the report body. Optional fields
/// are omitted when the experiment does not use them.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConfigSnapshot {
    pub experiment: String,
    pub scale: String,
    pub seed: u64,
    pub nan_policy: String,
    pub epochs: usize,
    pub models: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub polynomials: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub train_mu: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub train_sigma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub test_mu: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub test_sigma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub functions: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub durations: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lags: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub train_samples: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eval_samples: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub simulations: Option<usize>,
}

fn parse_int(key: &str, value: &str) -> Result<u64> {
    value
        .parse::<u64>()
        .map_err(|_| Error::config(format!("key {key}: expected an integer, got {value:?}")))
}

fn parse_float(key: &str, value: &str) -> Result<f64> {
    value
        .parse::<f64>()
        .map_err(|_| Error::config(format!("key {key}: expected a number, got {value:?}")))
}

fn check_sigma(key: &str, sigma: f64) -> Result<()> {
    if !sigma.is_finite() || sigma <= 0.0 {
        return Err(Error::config(format!("{key} must be positive, got {sigma}")));
    }
    Ok(())
}

fn check_finite(key: &str, v: f64) -> Result<()> {
    if !v.is_finite() {
        return Err(Error::config(format!("{key} must be finite, got {v}")));
    }
    Ok(())
}

fn split_items<'a>(key: &str, value: &'a str) -> Result<Vec<&'a str>> {
    let items: Vec<&str> = value.split(',').map(str::trim).collect();
    if items.iter().any(|s| s.is_empty()) {
        return Err(Error::config(format!("key {key}: empty item in list {value:?}")));
    }
    Ok(items)
}

fn parse_list<T>(key: &str, value: &str) -> Result<Vec<T>>
where
    T: FromStr<Err = Error>,
{
    split_items(key, value)?.into_iter().map(str::parse).collect()
}

fn parse_int_list(key: &str, value: &str) -> Result<Vec<usize>> {
    split_items(key, value)?
        .into_iter()
        .map(|s| parse_int(key, s).map(|v| v as usize))
        .collect()
}

fn parse_models(value: &str) -> Result<Vec<ModelKind>> {
    let models: Vec<ModelKind> = parse_list("models", value)?;
    if models.is_empty() {
        return Err(Error::config("models list is empty"));
    }
    Ok(models)
}

/// Human-readable inventory of everything the harness can run: experiments,
/// models, polynomial targets, benchmark functions, sweeps, and scales.
pub fn list_targets() -> String {
    let mut out = String::new();
    out.push_str("experiments:\n");
    for kind in ExperimentKind::ALL {
        out.push_str(&format!("  {kind}\n"));
    }
    out.push_str("\nmodels:\n");
    for model in ModelKind::ALL {
        out.push_str(&format!("  {model}\n"));
    }
    out.push_str("\npolynomial targets (order, interacting variables):\n");
    for expr in builtin_polynomials() {
        out.push_str(&format!(
            "  {expr}  ({}, {})\n",
            expr.order(),
            expr.interactions()
        ));
    }
    out.push_str("\nbenchmark functions (arity, order):\n");
    for meta in synth::metadata_table() {
        out.push_str(&format!(
            "  {}  ({}, {})\n",
            meta.name, meta.arity, meta.polynomial_order
        ));
    }
    out.push_str("\nsweeps:\n");
    let d = ExperimentConfig::defaults(ExperimentKind::SirDuration);
    out.push_str(&format!("  sir_duration: T in {:?}, L = {}\n", d.durations, d.lags[0]));
    let l = ExperimentConfig::defaults(ExperimentKind::SirLag);
    out.push_str(&format!("  sir_lag: T = {}, L in {:?}\n", l.durations[0], l.lags));
    out.push_str("\nscales:\n");
    for scale in [Scale::Desk, Scale::Full] {
        out.push_str(&format!(
            "  {scale}: {} poly samples, {} benchmark samples, {} epidemic runs\n",
            scale.poly_train_samples(),
            scale.synth_samples(),
            scale.sir_simulations()
        ));
    }
    out
}

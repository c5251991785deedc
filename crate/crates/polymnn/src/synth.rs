//! Nine fixed synthetic regression targets with domain-aware sampling and a
//! percentile split that holds out the fringe of the sample cloud.
//!
//! The split is per variable: a sample goes to the train side only when every
//! coordinate sits inside that coordinate's empirical [5th, 95th] percentile
//! interval. The held-out shell is where these functions behave very
//! differently from their interior, so scoring on it probes extrapolation
//! even though both sides were drawn from the same distribution.

use std::fmt;
use std::str::FromStr;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::data::{gather_columns, Dataset};
use crate::error::{Error, Result};
use crate::metrics::percentile;
use crate::rng;
use crate::tensor::Tensor;

/// The benchmark suite, in fixed order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BenchmarkFn {
    Currin,
    Bukin6,
    Price3,
    DettePepelyshev,
    Colville,
    Lim,
    CamelThreeHump,
    Beale,
    GoldsteinPrice,
}

impl BenchmarkFn {
    pub const ALL: [BenchmarkFn; 9] = [
        BenchmarkFn::Currin,
        BenchmarkFn::Bukin6,
        BenchmarkFn::Price3,
        BenchmarkFn::DettePepelyshev,
        BenchmarkFn::Colville,
        BenchmarkFn::Lim,
        BenchmarkFn::CamelThreeHump,
        BenchmarkFn::Beale,
        BenchmarkFn::GoldsteinPrice,
    ];

    pub fn name(self) -> &'static str {
        match self {
            BenchmarkFn::Currin => "currin",
            BenchmarkFn::Bukin6 => "bukin6",
            BenchmarkFn::Price3 => "price3",
            BenchmarkFn::DettePepelyshev => "dette_pepelyshev",
            BenchmarkFn::Colville => "colville",
            BenchmarkFn::Lim => "lim",
            BenchmarkFn::CamelThreeHump => "camel_three_hump",
            BenchmarkFn::Beale => "beale",
            BenchmarkFn::GoldsteinPrice => "goldstein_price",
        }
    }

    /// Number of input variables.
    pub fn arity(self) -> usize {
        self.domains().len()
    }

    /// Sampling interval for each input variable, in variable order.
    pub fn domains(self) -> &'static [(f64, f64)] {
        match self {
            BenchmarkFn::Currin | BenchmarkFn::Lim => &[(0.0, 1.0), (0.0, 1.0)],
            BenchmarkFn::Bukin6 => &[(-15.0, 5.0), (-3.0, 3.0)],
            BenchmarkFn::Price3 => &[(-500.0, 500.0), (-500.0, 500.0)],
            BenchmarkFn::DettePepelyshev => &[(0.0, 1.0), (0.0, 1.0), (0.0, 1.0)],
            BenchmarkFn::Colville => &[
                (-10.0, 10.0),
                (-10.0, 10.0),
                (-10.0, 10.0),
                (-10.0, 10.0),
            ],
            BenchmarkFn::CamelThreeHump => &[(-5.0, 5.0), (-5.0, 5.0)],
            BenchmarkFn::Beale => &[(-4.5, 4.5), (-4.5, 4.5)],
            BenchmarkFn::GoldsteinPrice => &[(-2.0, 2.0), (-2.0, 2.0)],
        }
    }

    /// Reported polynomial order, used to size multiplicative models. Two of
    /// the functions are not actually polynomials (square roots, absolute
    /// values); the reported order treats those factors as if they were not
    /// there.
    pub fn polynomial_order(self) -> u32 {
        match self {
            BenchmarkFn::Currin | BenchmarkFn::Bukin6 => 2,
            BenchmarkFn::Price3 | BenchmarkFn::DettePepelyshev | BenchmarkFn::Colville => 4,
            BenchmarkFn::Lim => 5,
            BenchmarkFn::CamelThreeHump => 6,
            BenchmarkFn::Beale | BenchmarkFn::GoldsteinPrice => 8,
        }
    }

    /// Evaluates the function at `x`. Domain membership is not required;
    /// the whole point of these targets is scoring models outside the
    /// training region. Non-finite inputs flow through to the output.
    pub fn eval(self, x: &[f64]) -> Result<f64> {
        if x.len() != self.arity() {
            return Err(Error::shape(
                "benchmark eval",
                format!("{} inputs", self.arity()),
                x.len().to_string(),
            ));
        }
        Ok(match self {
            BenchmarkFn::Currin => {
                let (x1, x2) = (x[0], x[1]);
                4.9 + 21.15 * x1 - 2.17 * x2 - 15.88 * x1 * x1 - 1.38 * x2 * x2
                    - 5.26 * x1 * x2
            }
            BenchmarkFn::Bukin6 => {
                let (x1, x2) = (x[0], x[1]);
                100.0 * (x2 - 0.01 * x1 * x1).abs().sqrt() + 0.01 * (x1 + 10.0).abs()
            }
            BenchmarkFn::Price3 => {
                let (x1, x2) = (x[0], x[1]);
                100.0 * (x2 - x1 * x1).powi(2) + 6.0 * (6.4 * (x2 - 0.5).powi(2) - x1 - 0.6)
            }
            BenchmarkFn::DettePepelyshev => {
                let (x1, x2, x3) = (x[0], x[1], x[2]);
                if x3 <= -1.0 {
                    return Err(Error::domain(format!(
                        "third input must exceed -1 for the square root, got {x3}"
                    )));
                }
                4.0 * (x1 - 2.0 + 8.0 * x2 - 8.0 * x2 * x2).powi(2)
                    + (3.0 - 4.0 * x2).powi(2)
                    + 16.0 * (x3 + 1.0).sqrt() * (2.0 * x3 - 1.0).powi(2)
            }
            BenchmarkFn::Colville => {
                let (x1, x2, x3, x4) = (x[0], x[1], x[2], x[3]);
                // the lone (1 - x3^2) term is deliberate; do not "repair" it
                // into a squared difference
                100.0 * (x1 - x2 * x2).powi(2)
                    + (1.0 - x1).powi(2)
                    + 90.0 * (x4 - x3 * x3).powi(2)
                    + (1.0 - x3 * x3)
                    + 10.1 * ((x2 - 1.0).powi(2) + (x4 - 1.0).powi(2))
                    + 19.8 * (x2 - 1.0) * (x4 - 1.0)
            }
            BenchmarkFn::Lim => {
                let (x1, x2) = (x[0], x[1]);
                9.0 + 2.5 * x1 - 17.5 * x2 + 2.5 * x1 * x2 + 19.0 * x2 * x2
                    - 7.5 * x1.powi(3)
                    - 2.5 * x1 * x2 * x2
                    - 5.5 * x2.powi(4)
                    + x1.powi(3) * x2 * x2
            }
            BenchmarkFn::CamelThreeHump => {
                let (x1, x2) = (x[0], x[1]);
                2.0 * x1 * x1 - 1.05 * x1.powi(4) + x1.powi(6) / 6.0 + x1 * x2 + x2 * x2
            }
            BenchmarkFn::Beale => {
                let (x1, x2) = (x[0], x[1]);
                (1.5 - x1 + x1 * x2).powi(2)
                    + (2.25 - x1 + x1 * x2 * x2).powi(2)
                    + (2.625 - x1 + x1 * x2.powi(3)).powi(2)
            }
            BenchmarkFn::GoldsteinPrice => {
                let (x1, x2) = (x[0], x[1]);
                // the 48 x2 coefficient is deliberate; some variants of this
                // function use a different cross term
                let a = 1.0
                    + (x1 + x2 + 1.0).powi(2)
                        * (19.0 - 14.0 * x1 + 3.0 * x1 * x1 - 14.0 * x2
                            + 6.0 * x1 * x2
                            + 3.0 * x2 * x2);
                let b = 30.0
                    + (2.0 * x1 - 3.0 * x2).powi(2)
                        * (18.0 - 32.0 * x1 + 12.0 * x1 * x1 + 48.0 * x2 - 36.0 * x1 * x2
                            + 27.0 * x2 * x2);
                a * b
            }
        })
    }
}

impl fmt::Display for BenchmarkFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for BenchmarkFn {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        BenchmarkFn::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| Error::config(format!("unknown benchmark function '{s}'")))
    }
}

/// One row of the exportable function metadata table.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FnMetadata {
    pub name: String,
    pub arity: usize,
    pub polynomial_order: u32,
    pub domains: Vec<(f64, f64)>,
}

/// Metadata for the whole suite, in suite order.
pub fn metadata_table() -> Vec<FnMetadata> {
    BenchmarkFn::ALL
        .iter()
        .map(|f| FnMetadata {
            name: f.name().to_string(),
            arity: f.arity(),
            polynomial_order: f.polynomial_order(),
            domains: f.domains().to_vec(),
        })
        .collect()
}

/// The metadata table as pretty-printed JSON.
pub fn metadata_json() -> Result<String> {
    Ok(serde_json::to_string_pretty(&metadata_table())?)
}

/// Draws `n` samples, one per column, each variable i.i.d. uniform on its
/// own interval. Deterministic per seed.
pub fn sample_domain(func: BenchmarkFn, n: usize, seed: u64) -> Result<Tensor> {
    if n == 0 {
        return Err(Error::contract("need at least one sample"));
    }
    let domains = func.domains();
    let mut r = rng::seeded_rng(seed);
    let mut t = Tensor::zeros(domains.len(), n);
    for j in 0..n {
        for (i, &(lo, hi)) in domains.iter().enumerate() {
            t.set(i, j, r.gen_range(lo..hi));
        }
    }
    Ok(t)
}

/// Index split produced by [`percentile_split`].
#[derive(Clone, Debug)]
pub struct PercentileSplit {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
    /// Per-variable [5th, 95th] percentile intervals used for membership.
    pub intervals: Vec<(f64, f64)>,
}

/// Splits samples (columns) by the empirical percentile rule: a sample is
/// train only when every variable lies inside its own [5th, 95th] interval,
/// endpoints included, so a constant column never excludes anything. The
/// test side is the outer shell of the cloud.
pub fn percentile_split(samples: &Tensor) -> Result<PercentileSplit> {
    let n = samples.cols();
    if n < 100 {
        return Err(Error::contract(format!(
            "percentile split needs at least 100 samples, got {n}"
        )));
    }
    let mut intervals = Vec::with_capacity(samples.rows());
    for r in 0..samples.rows() {
        let mut vals: Vec<f64> = (0..n).map(|c| samples.at(r, c)).collect();
        vals.sort_by(|a, b| a.total_cmp(b));
        intervals.push((percentile(&vals, 5.0)?, percentile(&vals, 95.0)?));
    }
    let mut train = Vec::new();
    let mut test = Vec::new();
    for c in 0..n {
        let inside = intervals.iter().enumerate().all(|(r, &(lo, hi))| {
            let v = samples.at(r, c);
            lo <= v && v <= hi
        });
        if inside {
            train.push(c);
        } else {
            test.push(c);
        }
    }
    Ok(PercentileSplit {
        train,
        test,
        intervals,
    })
}

/// A generated benchmark dataset: inputs, targets, and the percentile split.
#[derive(Clone, Debug)]
pub struct SynthDataset {
    pub func: BenchmarkFn,
    pub x: Tensor,
    pub y: Tensor,
    pub split: PercentileSplit,
}

impl SynthDataset {
    /// Samples `n` points (at least 100), evaluates the target at each, and
    /// splits by percentile membership.
    pub fn generate(func: BenchmarkFn, n: usize, seed: u64) -> Result<Self> {
        let x = sample_domain(func, n, seed)?;
        let mut y = Tensor::zeros(1, n);
        let mut point = vec![0.0; func.arity()];
        for j in 0..n {
            for (i, p) in point.iter_mut().enumerate() {
                *p = x.at(i, j);
            }
            y.set(0, j, func.eval(&point)?);
        }
        let split = percentile_split(&x)?;
        Ok(SynthDataset { func, x, y, split })
    }

    pub fn train(&self) -> Result<Dataset> {
        Dataset::new(
            gather_columns(&self.x, &self.split.train),
            gather_columns(&self.y, &self.split.train),
        )
    }

    pub fn test(&self) -> Result<Dataset> {
        Dataset::new(
            gather_columns(&self.x, &self.split.test),
            gather_columns(&self.y, &self.split.test),
        )
    }

    /// CSV with one row per sample in generation order; the final column
    /// says which side of the split the sample landed on.
    pub fn to_csv(&self) -> String {
        let n = self.x.cols();
        let mut is_train = vec![false; n];
        for &c in &self.split.train {
            is_train[c] = true;
        }
        let mut out = String::new();
        for i in 0..self.x.rows() {
            out.push_str(&format!("x{},", i + 1));
        }
        out.push_str("target,split\n");
        for j in 0..n {
            for i in 0..self.x.rows() {
                out.push_str(&format!("{},", self.x.at(i, j)));
            }
            let side = if is_train[j] { "train" } else { "test" };
            out.push_str(&format!("{},{}\n", self.y.at(0, j), side));
        }
        out
    }
}

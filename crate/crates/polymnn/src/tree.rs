//! Regression trees and the two tree ensembles built from them.
//!
//! A [`DecisionTree`] is an axis-aligned CART regressor: every internal node
//! routes on `feature <= threshold`, every leaf stores the mean target of the
//! training rows that reached it. Splits greedily minimize the summed squared
//! error of the two children, with thresholds placed at midpoints between
//! consecutive distinct feature values. Ties are broken toward the lowest
//! feature index, then the lowest threshold, so fits are deterministic.
//!
//! [`RandomForest`] bags trees over bootstrap resamples and averages them.
//! [`GradientBoosting`] fits shallow trees stagewise on residuals with a
//! fixed shrinkage factor.
//!
//! All three models serialize to JSON. The node encoding is a flat arena:
//! `{"split":{"feature":_,"threshold":_,"left":_,"right":_}}` or
//! `{"leaf":{"value":_}}`, where `left`/`right` index into the arena and the
//! root is node 0. Children always come after their parent, which is also
//! what `from_json_string` enforces when loading.

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::data::gather_columns;
use crate::error::{Error, Result};
use crate::rng::stream_rng;
use crate::tensor::Tensor;

/// One arena slot of a fitted tree.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TreeNode {
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    Leaf {
        value: f64,
    },
}

/// CART regression tree. Fit with [`fit_tree`].
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DecisionTree {
    n_features: usize,
    nodes: Vec<TreeNode>,
}

impl DecisionTree {
    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn nodes(&self) -> &[TreeNode] {
        &self.nodes
    }

    /// Number of leaves, which is also the number of distinct outputs the
    /// tree can produce.
    pub fn n_leaves(&self) -> usize {
        self.nodes
            .iter()
            .filter(|n| matches!(n, TreeNode::Leaf { .. }))
            .count()
    }

    /// Routes one feature vector from the root to a leaf.
    ///
    /// A NaN feature fails every `<=` comparison and therefore always takes
    /// the right branch; the output is still one of the training leaf means.
    pub fn predict_row(&self, features: &[f64]) -> f64 {
        assert_eq!(features.len(), self.n_features, "feature count");
        let mut at = 0;
        loop {
            match &self.nodes[at] {
                TreeNode::Leaf { value } => return *value,
                TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    at = if features[*feature] <= *threshold {
                        *left
                    } else {
                        *right
                    };
                }
            }
        }
    }

    pub fn to_json_string(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json_string(text: &str) -> Result<DecisionTree> {
        let tree: DecisionTree = serde_json::from_str(text)?;
        tree.validate()?;
        Ok(tree)
    }

    // Children must point forward in the arena. That single rule rules out
    // cycles and self references, so the prediction walk always terminates.
    fn validate(&self) -> Result<()> {
        if self.n_features == 0 {
            return Err(Error::contract("tree must use at least one feature"));
        }
        if self.nodes.is_empty() {
            return Err(Error::contract("tree arena is empty"));
        }
        for (i, node) in self.nodes.iter().enumerate() {
            if let TreeNode::Split {
                feature,
                left,
                right,
                ..
            } = node
            {
                if *feature >= self.n_features {
                    return Err(Error::contract(format!(
                        "node {i} splits on feature {feature}, have {}",
                        self.n_features
                    )));
                }
                for child in [*left, *right] {
                    if child <= i || child >= self.nodes.len() {
                        return Err(Error::contract(format!(
                            "node {i} links to invalid child {child}"
                        )));
                    }
                }
            }
        }
        Ok(())
    }
}

struct WorkItem {
    slot: usize,
    depth: usize,
    // Active row ids, one list per feature, each sorted by that feature.
    lists: Vec<Vec<u32>>,
}

struct Candidate {
    feature: usize,
    threshold: f64,
    sse: f64,
}

/// Fits a CART regression tree on column-sample data `x` (features x n) and
/// targets `y` (length n). `max_depth: None` grows until leaves are pure or
/// unsplittable; `Some(0)` forces the single-leaf tree that predicts the
/// global mean.
pub fn fit_tree(x: &Tensor, y: &[f64], max_depth: Option<usize>) -> Result<DecisionTree> {
    let n = x.cols();
    let n_features = x.rows();
    if n == 0 || n_features == 0 {
        return Err(Error::contract("tree fit needs at least one sample and feature"));
    }
    if y.len() != n {
        return Err(Error::shape(
            "fit_tree",
            format!("{n} targets"),
            y.len().to_string(),
        ));
    }
    if x.data().iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::contract("tree fit requires finite inputs and targets"));
    }

    // One sort per feature up front; every split below reuses the order via
    // stable partitions, so no further sorting happens.
    let root_lists: Vec<Vec<u32>> = (0..n_features)
        .map(|f| {
            let mut ids: Vec<u32> = (0..n as u32).collect();
            ids.sort_unstable_by(|&a, &b| {
                x.at(f, a as usize)
                    .total_cmp(&x.at(f, b as usize))
                    .then(a.cmp(&b))
            });
            ids
        })
        .collect();

    let mut nodes = vec![TreeNode::Leaf { value: 0.0 }];
    let mut stack = vec![WorkItem {
        slot: 0,
        depth: 0,
        lists: root_lists,
    }];

    while let Some(item) = stack.pop() {
        let ids = &item.lists[0];
        let count = ids.len() as f64;
        let mut sum = 0.0;
        let mut sumsq = 0.0;
        for &id in ids {
            let v = y[id as usize];
            sum += v;
            sumsq += v * v;
        }
        let mean = sum / count;
        let node_sse = (sumsq - sum * sum / count).max(0.0);

        let depth_ok = max_depth.map_or(true, |d| item.depth < d);
        let best = if depth_ok && ids.len() >= 2 && node_sse > 0.0 {
            best_split(x, y, &item.lists, sum, sumsq)
        } else {
            None
        };

        let Some(cand) = best else {
            nodes[item.slot] = TreeNode::Leaf { value: mean };
            continue;
        };

        let (left_lists, right_lists): (Vec<Vec<u32>>, Vec<Vec<u32>>) = item
            .lists
            .iter()
            .map(|list| {
                list.iter()
                    .partition(|&&id| x.at(cand.feature, id as usize) <= cand.threshold)
            })
            .unzip();

        let left_slot = nodes.len();
        nodes.push(TreeNode::Leaf { value: 0.0 });
        let right_slot = nodes.len();
        nodes.push(TreeNode::Leaf { value: 0.0 });
        nodes[item.slot] = TreeNode::Split {
            feature: cand.feature,
            threshold: cand.threshold,
            left: left_slot,
            right: right_slot,
        };
        stack.push(WorkItem {
            slot: left_slot,
            depth: item.depth + 1,
            lists: left_lists,
        });
        stack.push(WorkItem {
            slot: right_slot,
            depth: item.depth + 1,
            lists: right_lists,
        });
    }

    Ok(DecisionTree { n_features, nodes })
}

fn best_split(
    x: &Tensor,
    y: &[f64],
    lists: &[Vec<u32>],
    total_sum: f64,
    total_sumsq: f64,
) -> Option<Candidate> {
    let n = lists[0].len();
    let mut best: Option<Candidate> = None;
    for (feature, ids) in lists.iter().enumerate() {
        let mut lsum = 0.0;
        let mut lsumsq = 0.0;
        for pos in 0..n - 1 {
            let v = y[ids[pos] as usize];
            lsum += v;
            lsumsq += v * v;
            let a = x.at(feature, ids[pos] as usize);
            let b = x.at(feature, ids[pos + 1] as usize);
            if a == b {
                continue;
            }
            let nl = (pos + 1) as f64;
            let nr = (n - pos - 1) as f64;
            let rsum = total_sum - lsum;
            let rsumsq = total_sumsq - lsumsq;
            let sse =
                (lsumsq - lsum * lsum / nl).max(0.0) + (rsumsq - rsum * rsum / nr).max(0.0);
            // Strict < keeps the first optimum seen, which under this scan
            // order is the lowest feature index then the lowest threshold.
            if best.as_ref().map_or(true, |c| sse < c.sse) {
                // Midpoint of the two adjacent values. When they are so close
                // that the midpoint rounds up to b, fall back to a so the
                // right child keeps b and stays nonempty.
                let mut threshold = a + (b - a) / 2.0;
                if threshold >= b {
                    threshold = a;
                }
                best = Some(Candidate {
                    feature,
                    threshold,
                    sse,
                });
            }
        }
    }
    best
}

/// Bagging settings. The stock configuration is 100 fully grown trees on
/// full-size bootstrap resamples.
#[derive(Clone, Debug)]
pub struct ForestConfig {
    pub n_trees: usize,
    pub max_depth: Option<usize>,
    /// Cap on the bootstrap draw per tree; `None` draws as many rows as the
    /// training set has.
    pub max_samples: Option<usize>,
    pub seed: u64,
}

impl ForestConfig {
    pub fn new(seed: u64) -> ForestConfig {
        ForestConfig {
            n_trees: 100,
            max_depth: None,
            max_samples: None,
            seed,
        }
    }
}

/// Bootstrap-aggregated forest of CART trees; prediction is the plain mean
/// over member trees.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RandomForest {
    trees: Vec<DecisionTree>,
}

impl RandomForest {
    pub fn trees(&self) -> &[DecisionTree] {
        &self.trees
    }

    pub fn predict_row(&self, features: &[f64]) -> f64 {
        let sum: f64 = self.trees.iter().map(|t| t.predict_row(features)).sum();
        sum / self.trees.len() as f64
    }

    pub fn to_json_string(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json_string(text: &str) -> Result<RandomForest> {
        let forest: RandomForest = serde_json::from_str(text)?;
        if forest.trees.is_empty() {
            return Err(Error::contract("forest holds no trees"));
        }
        for tree in &forest.trees {
            tree.validate()?;
        }
        Ok(forest)
    }
}

/// Fits a random forest. Tree `i` draws its bootstrap rows from an rng
/// seeded by `(config.seed, "tree{i}")`, so any single tree can be rebuilt
/// without refitting the rest.
pub fn fit_random_forest(x: &Tensor, y: &[f64], config: &ForestConfig) -> Result<RandomForest> {
    let n = x.cols();
    if config.n_trees == 0 {
        return Err(Error::config("forest needs at least one tree"));
    }
    if y.len() != n {
        return Err(Error::shape(
            "fit_random_forest",
            format!("{n} targets"),
            y.len().to_string(),
        ));
    }
    let draw = config.max_samples.map_or(n, |cap| cap.min(n));
    if draw == 0 {
        return Err(Error::contract("bootstrap draw of zero rows"));
    }
    let mut trees = Vec::with_capacity(config.n_trees);
    for i in 0..config.n_trees {
        let mut rng = stream_rng(config.seed, &format!("tree{i}"));
        let rows: Vec<usize> = (0..draw).map(|_| rng.gen_range(0..n)).collect();
        let bx = gather_columns(x, &rows);
        let by: Vec<f64> = rows.iter().map(|&r| y[r]).collect();
        trees.push(fit_tree(&bx, &by, config.max_depth)?);
    }
    Ok(RandomForest { trees })
}

/// Boosting settings: 100 depth-3 stages with shrinkage 0.1, squared error
/// throughout.
#[derive(Clone, Debug)]
pub struct BoostConfig {
    pub n_stages: usize,
    pub max_depth: usize,
    pub learning_rate: f64,
}

impl BoostConfig {
    pub fn new() -> BoostConfig {
        BoostConfig {
            n_stages: 100,
            max_depth: 3,
            learning_rate: 0.1,
        }
    }
}

impl Default for BoostConfig {
    fn default() -> Self {
        BoostConfig::new()
    }
}

/// Stagewise additive model: global mean plus shrunken residual trees.
/// Fitting is sampling-free, so equal inputs always give equal models.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GradientBoosting {
    base: f64,
    learning_rate: f64,
    trees: Vec<DecisionTree>,
}

impl GradientBoosting {
    pub fn base(&self) -> f64 {
        self.base
    }

    pub fn trees(&self) -> &[DecisionTree] {
        &self.trees
    }

    pub fn predict_row(&self, features: &[f64]) -> f64 {
        let boost: f64 = self.trees.iter().map(|t| t.predict_row(features)).sum();
        self.base + self.learning_rate * boost
    }

    pub fn to_json_string(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json_string(text: &str) -> Result<GradientBoosting> {
        let model: GradientBoosting = serde_json::from_str(text)?;
        if !model.base.is_finite() || !model.learning_rate.is_finite() {
            return Err(Error::contract("boosting constants must be finite"));
        }
        for tree in &model.trees {
            tree.validate()?;
        }
        Ok(model)
    }
}

/// Fits least-squares gradient boosting: each stage fits a depth-capped tree
/// to the current residuals and is added with the configured shrinkage.
pub fn fit_gradient_boosting(
    x: &Tensor,
    y: &[f64],
    config: &BoostConfig,
) -> Result<GradientBoosting> {
    let n = x.cols();
    if y.len() != n {
        return Err(Error::shape(
            "fit_gradient_boosting",
            format!("{n} targets"),
            y.len().to_string(),
        ));
    }
    if n == 0 {
        return Err(Error::contract("boosting needs at least one sample"));
    }
    if !(config.learning_rate.is_finite() && config.learning_rate >= 0.0) {
        return Err(Error::config("learning rate must be finite and nonnegative"));
    }
    let base = y.iter().sum::<f64>() / n as f64;
    let mut pred = vec![base; n];
    let mut trees = Vec::with_capacity(config.n_stages);
    let mut col = vec![0.0; x.rows()];
    for _ in 0..config.n_stages {
        let residual: Vec<f64> = y.iter().zip(&pred).map(|(t, p)| t - p).collect();
        let tree = fit_tree(x, &residual, Some(config.max_depth))?;
        for (j, p) in pred.iter_mut().enumerate() {
            for (f, slot) in col.iter_mut().enumerate() {
                *slot = x.at(f, j);
            }
            *p += config.learning_rate * tree.predict_row(&col);
        }
        trees.push(tree);
    }
    Ok(GradientBoosting {
        base,
        learning_rate: config.learning_rate,
        trees,
    })
}

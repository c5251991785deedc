//! Next-state metamodels for the compartment simulator: one network per
//! compartment, outputs coupled through a softmax so every prediction is a
//! valid state, trained teacher-forced and evaluated by autoregressive
//! rollout.
//!
//! Training feeds ground-truth states as inputs (one supervised transition
//! at a time); evaluation feeds each prediction back as the next input, so
//! single-step errors compound over the rollout exactly as they would when
//! the metamodel replaces the simulator.

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::metrics::{self, MetricsReport, NanPolicy};
use crate::mnn::{MnnKind, MnnModel, DEFAULT_HIDDEN_WIDTH};
use crate::rng::Rng;
use crate::sir::{lagged_pairs, polynomial_order_for_lag, step, Simulation, SirState};
use crate::tensor::Tensor;
use crate::train::{predict_chunked, GradModel};
use crate::autodiff::{Graph, NodeId};

/// Feature order fed to every compartment network.
pub const FEATURES: usize = 5; // s, i, r, beta, gamma
/// Predicted compartments.
pub const COMPARTMENTS: usize = 3;

/// Anything that maps a batch of (state, rates) features to the state one
/// lag step ahead. Implementations must accept arbitrary column counts.
pub trait NextStatePredictor {
    /// `x` is 5 x n (s, i, r, beta, gamma per column); the result is 3 x n.
    fn predict_next_batch(&self, x: &Tensor) -> Result<Tensor>;
}

/// Three same-shaped networks, one per compartment, sized for the polynomial
/// order the lag induces.
#[derive(Clone, Debug)]
pub struct SirMetamodel {
    kind: MnnKind,
    lag: usize,
    order: usize,
    net_s: MnnModel,
    net_i: MnnModel,
    net_r: MnnModel,
}

impl SirMetamodel {
    /// Builds the three networks at the order implied by `lag`, drawing all
    /// initial weights from `rng` in s, i, r order.
    pub fn build(kind: MnnKind, lag: usize, rng: &mut Rng) -> Result<Self> {
        let order = polynomial_order_for_lag(lag)?;
        let mut net = || MnnModel::build(kind, FEATURES, DEFAULT_HIDDEN_WIDTH, 1, order, rng);
        let net_s = net()?;
        let net_i = net()?;
        let net_r = net()?;
        Ok(SirMetamodel {
            kind,
            lag,
            order,
            net_s,
            net_i,
            net_r,
        })
    }

    pub fn kind(&self) -> MnnKind {
        self.kind
    }

    pub fn lag(&self) -> usize {
        self.lag
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn param_count(&self) -> usize {
        self.net_s.param_count() + self.net_i.param_count() + self.net_r.param_count()
    }

    /// The compartment networks in s, i, r order.
    pub fn nets(&self) -> [&MnnModel; 3] {
        [&self.net_s, &self.net_i, &self.net_r]
    }

    pub fn nets_mut(&mut self) -> [&mut MnnModel; 3] {
        [&mut self.net_s, &mut self.net_i, &mut self.net_r]
    }

    /// Emits the softmaxed 3 x n state prediction into a fresh graph,
    /// returning the parameter leaves of all three nets in params() order.
    fn emit_states(&self, x: &Tensor) -> Result<(Graph, NodeId, Vec<NodeId>)> {
        let mut g = Graph::new();
        let xid = g.leaf(x.clone());
        let (out_s, mut pids) = self.net_s.emit_output(&mut g, xid)?;
        let (out_i, pids_i) = self.net_i.emit_output(&mut g, xid)?;
        let (out_r, pids_r) = self.net_r.emit_output(&mut g, xid)?;
        pids.extend(pids_i);
        pids.extend(pids_r);
        let cat = g.concat_rows(&[out_s, out_i, out_r])?;
        let soft = g.softmax(cat);
        Ok((g, soft, pids))
    }

    /// Predicts states for a feature batch of any width, chunking columns to
    /// bound graph memory at high orders.
    pub fn predict_states(&self, x: &Tensor) -> Result<Tensor> {
        predict_chunked(self, x)
    }
}

impl GradModel for SirMetamodel {
    fn input_dim(&self) -> usize {
        FEATURES
    }

    fn output_dim(&self) -> usize {
        COMPARTMENTS
    }

    fn params(&self) -> Vec<&Tensor> {
        let mut ps = self.net_s.params();
        ps.extend(self.net_i.params());
        ps.extend(self.net_r.params());
        ps
    }

    fn params_mut(&mut self) -> Vec<&mut Tensor> {
        let mut ps = self.net_s.params_mut();
        ps.extend(self.net_i.params_mut());
        ps.extend(self.net_r.params_mut());
        ps
    }

    /// Squared error between softmax outputs and target states, averaged
    /// over samples and summed over the three compartments.
    fn build_loss(&self, x: &Tensor, y: &Tensor) -> Result<(Graph, NodeId, Vec<NodeId>)> {
        let (mut g, soft, pids) = self.emit_states(x)?;
        let yid = g.leaf(y.clone());
        let diff = g.sub(soft, yid)?;
        let per_entry = g.mean_sq(diff);
        let loss = g.scale(per_entry, COMPARTMENTS as f64);
        Ok((g, loss, pids))
    }

    fn predict_batch(&self, x: &Tensor) -> Result<Tensor> {
        let (g, soft, _) = self.emit_states(x)?;
        Ok(g.value(soft).clone())
    }
}

impl NextStatePredictor for SirMetamodel {
    fn predict_next_batch(&self, x: &Tensor) -> Result<Tensor> {
        self.predict_states(x)
    }
}

/// Ground-truth passthrough: advances the real map `lag` times per call.
/// Rolling it out must reproduce the simulator exactly, establishing that
/// the evaluation harness adds no error of its own.
#[derive(Clone, Copy, Debug)]
pub struct TrueStepPredictor {
    lag: usize,
}

impl TrueStepPredictor {
    pub fn new(lag: usize) -> Result<Self> {
        if lag == 0 {
            return Err(Error::contract("lag must be at least 1"));
        }
        Ok(TrueStepPredictor { lag })
    }
}

impl NextStatePredictor for TrueStepPredictor {
    fn predict_next_batch(&self, x: &Tensor) -> Result<Tensor> {
        if x.rows() != FEATURES {
            return Err(Error::shape(
                "true-step predict",
                format!("{FEATURES} feature rows"),
                x.rows().to_string(),
            ));
        }
        let mut out = Tensor::zeros(COMPARTMENTS, x.cols());
        for j in 0..x.cols() {
            let mut st = SirState {
                s: x.at(0, j),
                i: x.at(1, j),
                r: x.at(2, j),
            };
            let (beta, gamma) = (x.at(3, j), x.at(4, j));
            for _ in 0..self.lag {
                st = step(st, beta, gamma)?;
            }
            out.set(0, j, st.s);
            out.set(1, j, st.i);
            out.set(2, j, st.r);
        }
        Ok(out)
    }
}

/// Flattens the strided transitions of many runs into one supervised
/// dataset: features (s, i, r, beta, gamma) per column, targets the next
/// strided state. Runs stay contiguous and ordered, so a tail split at the
/// sample level coincides with a tail split at the run level.
pub fn lag_pair_dataset(sims: &[Simulation], lag: usize) -> Result<Dataset> {
    if sims.is_empty() {
        return Err(Error::contract("no simulations to flatten"));
    }
    let mut xs: Vec<f64> = Vec::new();
    let mut ys: Vec<f64> = Vec::new();
    let mut n = 0usize;
    for sim in sims {
        for (from, to) in lagged_pairs(&sim.trajectory, lag)? {
            xs.extend_from_slice(&[from.s, from.i, from.r, sim.beta, sim.gamma]);
            ys.extend_from_slice(&[to.s, to.i, to.r]);
            n += 1;
        }
    }
    // collected sample-major; transpose into the column-per-sample layout
    let mut x = Tensor::zeros(FEATURES, n);
    let mut y = Tensor::zeros(COMPARTMENTS, n);
    for j in 0..n {
        for r in 0..FEATURES {
            x.set(r, j, xs[j * FEATURES + r]);
        }
        for r in 0..COMPARTMENTS {
            y.set(r, j, ys[j * COMPARTMENTS + r]);
        }
    }
    Dataset::new(x, y)
}

/// Predicts one step ahead for a single state.
pub fn predict_next<P: NextStatePredictor + ?Sized>(
    predictor: &P,
    state: SirState,
    beta: f64,
    gamma: f64,
) -> Result<SirState> {
    let x = Tensor::from_vec(FEATURES, 1, vec![state.s, state.i, state.r, beta, gamma])?;
    let y = predictor.predict_next_batch(&x)?;
    Ok(SirState {
        s: y.at(0, 0),
        i: y.at(1, 0),
        r: y.at(2, 0),
    })
}

/// Autoregressive rollout for a batch of runs: each prediction becomes the
/// next input while beta and gamma stay fixed per run. Returns `steps + 1`
/// states per run, the given start first. Non-finite predictions are kept
/// and keep propagating, so a diverged run stays visible in the output.
pub fn rollout_many<P: NextStatePredictor + ?Sized>(
    predictor: &P,
    starts: &[(SirState, f64, f64)],
    steps: usize,
) -> Result<Vec<Vec<SirState>>> {
    if starts.is_empty() {
        return Err(Error::contract("no rollout starts"));
    }
    if steps == 0 {
        return Err(Error::contract("need at least one rollout step"));
    }
    let n = starts.len();
    let mut trajectories: Vec<Vec<SirState>> = starts
        .iter()
        .map(|(st, _, _)| {
            let mut v = Vec::with_capacity(steps + 1);
            v.push(*st);
            v
        })
        .collect();
    let mut x = Tensor::zeros(FEATURES, n);
    for _ in 0..steps {
        for (j, ((_, beta, gamma), traj)) in starts.iter().zip(&trajectories).enumerate() {
            let st = traj.last().expect("nonempty trajectory");
            x.set(0, j, st.s);
            x.set(1, j, st.i);
            x.set(2, j, st.r);
            x.set(3, j, *beta);
            x.set(4, j, *gamma);
        }
        let y = predictor.predict_next_batch(&x)?;
        if y.rows() != COMPARTMENTS || y.cols() != n {
            return Err(Error::shape(
                "rollout",
                format!("{COMPARTMENTS}x{n}"),
                y.shape_str(),
            ));
        }
        for (j, traj) in trajectories.iter_mut().enumerate() {
            traj.push(SirState {
                s: y.at(0, j),
                i: y.at(1, j),
                r: y.at(2, j),
            });
        }
    }
    Ok(trajectories)
}

/// Single-run rollout; `steps = 1` is exactly [`predict_next`].
pub fn rollout<P: NextStatePredictor + ?Sized>(
    predictor: &P,
    state0: SirState,
    beta: f64,
    gamma: f64,
    steps: usize,
) -> Result<Vec<SirState>> {
    Ok(rollout_many(predictor, &[(state0, beta, gamma)], steps)?.remove(0))
}

fn state_is_finite(st: &SirState) -> bool {
    st.s.is_finite() && st.i.is_finite() && st.r.is_finite()
}

/// Scores autoregressive rollouts against the ground-truth trajectories,
/// subsampled at the lag stride. Each run is rolled out from its true
/// initial state for `T/L - 1` predictions; metrics are computed per
/// compartment over all (run, step) pairs and then averaged across the
/// three compartments. `nan_count` is the number of runs whose rollout
/// produced any non-finite state; the skip policy drops those runs, the
/// propagate policy lets them poison the averages.
pub fn evaluate_rollout<P: NextStatePredictor + ?Sized>(
    predictor: &P,
    sims: &[Simulation],
    lag: usize,
    policy: NanPolicy,
) -> Result<MetricsReport> {
    if sims.is_empty() {
        return Err(Error::contract("no simulations to evaluate"));
    }
    let len = sims[0].trajectory.len();
    if sims.iter().any(|s| s.trajectory.len() != len) {
        return Err(Error::contract(
            "simulations have mixed durations; evaluate them in separate calls",
        ));
    }
    if lag == 0 {
        return Err(Error::contract("lag must be at least 1"));
    }
    let steps = (len - 1) / lag;
    if steps < 2 {
        return Err(Error::contract(format!(
            "trajectories model {steps} step(s) at lag {lag}; need more than 1"
        )));
    }
    let horizon = steps - 1;
    let starts: Vec<(SirState, f64, f64)> = sims
        .iter()
        .map(|s| (s.trajectory[0], s.beta, s.gamma))
        .collect();
    let rolled = rollout_many(predictor, &starts, horizon)?;

    let nan_runs: Vec<bool> = rolled
        .iter()
        .map(|traj| traj.iter().any(|st| !state_is_finite(st)))
        .collect();
    let nan_count = nan_runs.iter().filter(|&&b| b).count();

    let mut y_true: [Vec<f64>; 3] = Default::default();
    let mut y_pred: [Vec<f64>; 3] = Default::default();
    for (j, sim) in sims.iter().enumerate() {
        if nan_runs[j] && policy == NanPolicy::Skip {
            continue;
        }
        for k in 1..=horizon {
            let truth = sim.trajectory[k * lag].as_array();
            let pred = rolled[j][k].as_array();
            for c in 0..COMPARTMENTS {
                y_true[c].push(truth[c]);
                y_pred[c].push(pred[c]);
            }
        }
    }

    let n = y_true[0].len();
    let mut sums = [0.0f64; 4]; // mse, rrse, r2, mae
    for c in 0..COMPARTMENTS {
        let m = metrics::evaluate(&y_true[c], &y_pred[c], NanPolicy::Propagate)?;
        sums[0] += m.mse;
        sums[1] += m.rrse;
        sums[2] += m.r2;
        sums[3] += m.mae;
    }
    let k = COMPARTMENTS as f64;
    Ok(MetricsReport {
        n,
        nan_count,
        mse: sums[0] / k,
        rrse: sums[1] / k,
        r2: sums[2] / k,
        mae: sums[3] / k,
    })
}

/// CSV of rollout predictions next to the subsampled ground truth, one row
/// per predicted step: `sim_id,k,s_pred,i_pred,r_pred,s_true,i_true,r_true`.
pub fn rollout_trace_csv<P: NextStatePredictor + ?Sized>(
    predictor: &P,
    sims: &[Simulation],
    lag: usize,
) -> Result<String> {
    if sims.is_empty() {
        return Err(Error::contract("no simulations to trace"));
    }
    let mut out = String::from("sim_id,k,s_pred,i_pred,r_pred,s_true,i_true,r_true\n");
    for sim in sims {
        let steps = (sim.trajectory.len() - 1) / lag;
        if steps < 2 {
            return Err(Error::contract(format!(
                "trajectory models {steps} step(s) at lag {lag}; need more than 1"
            )));
        }
        let horizon = steps - 1;
        let rolled = rollout(predictor, sim.trajectory[0], sim.beta, sim.gamma, horizon)?;
        for k in 1..=horizon {
            let p = rolled[k];
            let t = sim.trajectory[k * lag];
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{}\n",
                sim.id, k, p.s, p.i, p.r, t.s, t.i, t.r
            ));
        }
    }
    Ok(out)
}

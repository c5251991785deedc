//! Mini-batch training with Adam on mean squared error.

use crate::autodiff::{Graph, NodeId};
use crate::data::{gather_columns, Dataset};
use crate::error::{Error, Result};
use crate::metrics::{self, NanPolicy};
use crate::rng::seeded_rng;
use crate::tensor::Tensor;
use rand::seq::SliceRandom;

/// Anything trainable by the mini-batch loop: exposes its parameters and can
/// emit a scalar-loss graph for a batch.
pub trait GradModel {
    fn input_dim(&self) -> usize;
    fn output_dim(&self) -> usize;
    /// Parameter tensors in a fixed order.
    fn params(&self) -> Vec<&Tensor>;
    /// Same tensors, same order, mutable.
    fn params_mut(&mut self) -> Vec<&mut Tensor>;
    /// Loss graph for one batch; the returned leaf ids align with `params()`.
    fn build_loss(&self, x: &Tensor, y: &Tensor) -> Result<(Graph, NodeId, Vec<NodeId>)>;
    fn predict_batch(&self, x: &Tensor) -> Result<Tensor>;
}

#[derive(Clone, Debug)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub seed: u64,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_eps: f64,
    pub validation_fraction: f64,
}

impl TrainConfig {
    pub fn new(epochs: usize, seed: u64) -> Self {
        TrainConfig {
            learning_rate: 0.001,
            batch_size: 32,
            epochs,
            seed,
            adam_beta1: 0.9,
            adam_beta2: 0.999,
            adam_eps: 1e-8,
            validation_fraction: 0.2,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.epochs == 0 || self.batch_size == 0 {
            return Err(Error::contract(
                "epochs and batch_size must be at least 1",
            ));
        }
        if !(self.validation_fraction > 0.0 && self.validation_fraction < 1.0) {
            return Err(Error::contract(format!(
                "validation_fraction must be in (0,1), got {}",
                self.validation_fraction
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_mse: f64,
    pub val_mse: f64,
    pub val_rrse: f64,
    pub val_r2: f64,
}

/// Per-epoch log. Non-finite values are recorded as-is so a run that blew up
/// stays visible in the export.
#[derive(Clone, Debug, Default)]
pub struct TrainHistory {
    pub epochs: Vec<EpochRecord>,
}

impl TrainHistory {
    pub fn last(&self) -> Option<&EpochRecord> {
        self.epochs.last()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("epoch,train_mse,val_mse,val_rrse,val_r2\n");
        for e in &self.epochs {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                e.epoch, e.train_mse, e.val_mse, e.val_rrse, e.val_r2
            ));
        }
        out
    }
}

/// Mean of squared residuals.
pub fn mse_loss(y: &[f64], y_hat: &[f64]) -> Result<f64> {
    if y.len() != y_hat.len() {
        return Err(Error::shape(
            "mse_loss",
            format!("{} predictions", y.len()),
            y_hat.len().to_string(),
        ));
    }
    if y.is_empty() {
        return Err(Error::contract("mse_loss needs at least one pair"));
    }
    let sum: f64 = y
        .iter()
        .zip(y_hat)
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    Ok(sum / y.len() as f64)
}

/// Adam moment estimates, one pair per parameter tensor.
pub struct AdamState {
    m: Vec<Tensor>,
    v: Vec<Tensor>,
    t: u64,
}

impl AdamState {
    pub fn new(params: &[&Tensor]) -> Self {
        AdamState {
            m: params.iter().map(|p| Tensor::zeros(p.rows(), p.cols())).collect(),
            v: params.iter().map(|p| Tensor::zeros(p.rows(), p.cols())).collect(),
            t: 0,
        }
    }

    /// One bias-corrected update across all parameter tensors.
    pub fn apply(
        &mut self,
        params: &mut [&mut Tensor],
        grads: &[Tensor],
        cfg: &TrainConfig,
    ) -> Result<()> {
        if params.len() != self.m.len() || grads.len() != self.m.len() {
            return Err(Error::contract(format!(
                "adam state tracks {} tensors, got {} params / {} grads",
                self.m.len(),
                params.len(),
                grads.len()
            )));
        }
        self.t += 1;
        let b1 = cfg.adam_beta1;
        let b2 = cfg.adam_beta2;
        let corr1 = 1.0 - b1.powi(self.t as i32);
        let corr2 = 1.0 - b2.powi(self.t as i32);
        for ((p, g), (m, v)) in params
            .iter_mut()
            .zip(grads)
            .zip(self.m.iter_mut().zip(self.v.iter_mut()))
        {
            if !p.same_shape(g) {
                return Err(Error::shape("adam", p.shape_str(), g.shape_str()));
            }
            let pd = p.data_mut();
            let md = m.data_mut();
            let vd = v.data_mut();
            let gd = g.data();
            for i in 0..pd.len() {
                md[i] = b1 * md[i] + (1.0 - b1) * gd[i];
                vd[i] = b2 * vd[i] + (1.0 - b2) * gd[i] * gd[i];
                let m_hat = md[i] / corr1;
                let v_hat = vd[i] / corr2;
                pd[i] -= cfg.learning_rate * m_hat / (v_hat.sqrt() + cfg.adam_eps);
            }
        }
        Ok(())
    }
}

/// Computes the loss and parameter gradients for one batch.
pub fn loss_and_grads<M: GradModel + ?Sized>(
    model: &M,
    x: &Tensor,
    y: &Tensor,
) -> Result<(f64, Vec<Tensor>)> {
    let (g, loss_id, pids) = model.build_loss(x, y)?;
    let loss = g.value(loss_id).at(0, 0);
    let mut grads = g.backward(loss_id)?;
    let gts = pids
        .iter()
        .zip(model.params())
        .map(|(id, p)| {
            grads
                .take(*id)
                .unwrap_or_else(|| Tensor::zeros(p.rows(), p.cols()))
        })
        .collect();
    Ok((loss, gts))
}

/// Trains in place. The holdout is the tail of `data` (see
/// [`Dataset::split_tail`]); batches are re-shuffled every epoch from the
/// seed, and the final short batch is kept. Non-finite losses are recorded
/// and training continues, so overflow behavior stays observable.
pub fn train<M: GradModel>(
    model: &mut M,
    data: &Dataset,
    cfg: &TrainConfig,
) -> Result<TrainHistory> {
    cfg.validate()?;
    if data.n_features() != model.input_dim() || data.n_outputs() != model.output_dim() {
        return Err(Error::shape(
            "train",
            format!("{}->{}", model.input_dim(), model.output_dim()),
            format!("{}->{}", data.n_features(), data.n_outputs()),
        ));
    }
    let (train_set, val_set) = data.split_tail(cfg.validation_fraction)?;
    let mut rng = seeded_rng(cfg.seed);
    let mut adam = AdamState::new(&model.params());
    let mut order: Vec<usize> = (0..train_set.n_samples()).collect();
    let mut history = TrainHistory::default();

    for epoch in 1..=cfg.epochs {
        order.shuffle(&mut rng);
        let mut weighted = 0.0;
        let mut seen = 0usize;
        for chunk in order.chunks(cfg.batch_size) {
            let batch = train_set.gather(chunk);
            let (loss, grads) = loss_and_grads(model, &batch.x, &batch.y)?;
            adam.apply(&mut model.params_mut(), &grads, cfg)?;
            weighted += loss * chunk.len() as f64;
            seen += chunk.len();
        }
        let pred = predict_chunked(model, &val_set.x)?;
        let m = metrics::evaluate(val_set.y.data(), pred.data(), NanPolicy::Propagate)?;
        history.epochs.push(EpochRecord {
            epoch,
            train_mse: weighted / seen as f64,
            val_mse: m.mse,
            val_rrse: m.rrse,
            val_r2: m.r2,
        });
    }
    Ok(history)
}

/// Batched prediction over column chunks, bounding peak graph memory on
/// large evaluation sets.
pub fn predict_chunked<M: GradModel + ?Sized>(model: &M, x: &Tensor) -> Result<Tensor> {
    const CHUNK: usize = 256;
    if x.cols() <= CHUNK {
        return model.predict_batch(x);
    }
    let mut out = Tensor::zeros(model.output_dim(), x.cols());
    let mut start = 0;
    while start < x.cols() {
        let end = (start + CHUNK).min(x.cols());
        let idx: Vec<usize> = (start..end).collect();
        let part = model.predict_batch(&gather_columns(x, &idx))?;
        for r in 0..part.rows() {
            for (j, c) in (start..end).enumerate() {
                out.set(r, c, part.at(r, j));
            }
        }
        start = end;
    }
    Ok(out)
}

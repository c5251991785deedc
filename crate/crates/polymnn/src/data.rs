use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// Supervised dataset with one sample per column: features are
/// `n_features x n`, targets `n_outputs x n`.
#[derive(Clone, Debug)]
pub struct Dataset {
    pub x: Tensor,
    pub y: Tensor,
}

impl Dataset {
    pub fn new(x: Tensor, y: Tensor) -> Result<Self> {
        if x.cols() != y.cols() {
            return Err(Error::shape(
                "dataset",
                format!("{} target columns", x.cols()),
                y.cols().to_string(),
            ));
        }
        Ok(Dataset { x, y })
    }

    pub fn n_samples(&self) -> usize {
        self.x.cols()
    }

    pub fn n_features(&self) -> usize {
        self.x.rows()
    }

    pub fn n_outputs(&self) -> usize {
        self.y.rows()
    }

    /// Splits off the last `fraction` of samples, preserving order. The tail
    /// is the natural holdout when the generator has already randomized
    /// sample order: no extra shuffle means the split is reproducible from
    /// the dataset alone.
    pub fn split_tail(&self, fraction: f64) -> Result<(Dataset, Dataset)> {
        if !(fraction > 0.0 && fraction < 1.0) {
            return Err(Error::contract(format!(
                "holdout fraction must be in (0,1), got {fraction}"
            )));
        }
        let n = self.n_samples();
        if n < 2 {
            return Err(Error::contract(
                "need at least 2 samples to split off a holdout",
            ));
        }
        let tail = (((n as f64) * fraction).floor() as usize).clamp(1, n - 1);
        let head = n - tail;
        Ok((self.select_range(0, head), self.select_range(head, n)))
    }

    /// Copies the column range [start, end).
    pub fn select_range(&self, start: usize, end: usize) -> Dataset {
        let idx: Vec<usize> = (start..end).collect();
        self.gather(&idx)
    }

    /// Copies the given columns in the given order.
    pub fn gather(&self, idx: &[usize]) -> Dataset {
        Dataset {
            x: gather_columns(&self.x, idx),
            y: gather_columns(&self.y, idx),
        }
    }
}

pub fn gather_columns(t: &Tensor, idx: &[usize]) -> Tensor {
    let mut out = Tensor::zeros(t.rows(), idx.len());
    for r in 0..t.rows() {
        for (j, &c) in idx.iter().enumerate() {
            out.set(r, j, t.at(r, c));
        }
    }
    out
}

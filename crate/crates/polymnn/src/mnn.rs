//! Multiplicative network architectures.
//!
//! All four kinds map the input through affine layers and combine the results
//! with elementwise products until the output is a polynomial of the inputs
//! of a chosen order. They differ in where products happen and how much
//! weight is shared across orders, which is what spreads their parameter
//! counts apart at high orders.

use crate::autodiff::{Graph, NodeId};
use crate::error::{Error, Result};
use crate::rng::Rng;
use crate::tensor::Tensor;
use rand::Rng as _;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

pub const DEFAULT_HIDDEN_WIDTH: usize = 64;

#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MnnKind {
    /// Affine embedding raised elementwise to the order, then projected.
    Pann,
    /// Shared-input product recursion with skip connections; one affine per
    /// order.
    Ccp,
    /// Per-order products of dedicated affine maps, summed across orders.
    PdcLow,
    /// PdcLow plus one hidden affine per order applied after the product.
    Pdc,
}

impl MnnKind {
    pub const ALL: [MnnKind; 4] = [MnnKind::Pann, MnnKind::Ccp, MnnKind::PdcLow, MnnKind::Pdc];

    pub fn name(&self) -> &'static str {
        match self {
            MnnKind::Pann => "pann",
            MnnKind::Ccp => "ccp",
            MnnKind::PdcLow => "pdclow",
            MnnKind::Pdc => "pdc",
        }
    }
}

impl fmt::Display for MnnKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for MnnKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "pann" => Ok(MnnKind::Pann),
            "ccp" => Ok(MnnKind::Ccp),
            "pdclow" => Ok(MnnKind::PdcLow),
            "pdc" => Ok(MnnKind::Pdc),
            other => Err(Error::config(format!("unknown model kind {other:?}"))),
        }
    }
}

/// One affine layer: weight plus column bias.
#[derive(Clone, Debug)]
pub struct Affine {
    pub w: Tensor,
    pub b: Tensor,
}

impl Affine {
    pub(crate) fn init(rows: usize, cols: usize, rng: &mut Rng) -> Affine {
        // uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)] keeps repeated
        // products of layer outputs from exploding at initialization
        let bound = 1.0 / (cols as f64).sqrt();
        let mut w = Tensor::zeros(rows, cols);
        for v in w.data_mut() {
            *v = rng.gen_range(-bound..bound);
        }
        Affine {
            w,
            b: Tensor::zeros(rows, 1),
        }
    }

    pub fn param_count(&self) -> usize {
        self.w.len() + self.b.len()
    }
}

#[derive(Clone, Debug)]
pub struct MnnModel {
    kind: MnnKind,
    n_i: usize,
    n_h: usize,
    n_o: usize,
    n_order: usize,
    // Product-side maps for order d are stored stacked: one (d*n_h) x n_i
    // matrix whose row block j is the j-th factor map. The forward pass then
    // needs a single affine plus a block product per order instead of d
    // separate layer applications.
    layers: Vec<Affine>,
}

/// Expected (rows, cols) of every affine layer, in storage order.
fn layer_shapes(
    kind: MnnKind,
    n_i: usize,
    n_h: usize,
    n_o: usize,
    n_order: usize,
) -> Vec<(usize, usize)> {
    let out = (n_o, n_h);
    match kind {
        MnnKind::Pann => vec![(n_h, n_i), out],
        MnnKind::Ccp => (0..n_order)
            .map(|_| (n_h, n_i))
            .chain([out])
            .collect(),
        MnnKind::PdcLow => (1..=n_order)
            .map(|d| (d * n_h, n_i))
            .chain([out])
            .collect(),
        MnnKind::Pdc => (1..=n_order)
            .flat_map(|d| [(d * n_h, n_i), (n_h, n_h)])
            .chain([out])
            .collect(),
    }
}

pub fn expected_param_count(
    kind: MnnKind,
    n_i: usize,
    n_h: usize,
    n_o: usize,
    n_order: usize,
) -> usize {
    let input_map = n_i * n_h + n_h;
    let out = n_h * n_o + n_o;
    match kind {
        MnnKind::Pann => input_map + out,
        MnnKind::Ccp => n_order * input_map + out,
        MnnKind::PdcLow => (1..=n_order).map(|d| d * input_map).sum::<usize>() + out,
        MnnKind::Pdc => {
            (1..=n_order)
                .map(|d| d * input_map + n_h * n_h + n_h)
                .sum::<usize>()
                + out
        }
    }
}

impl MnnModel {
    pub fn build(
        kind: MnnKind,
        n_i: usize,
        n_h: usize,
        n_o: usize,
        n_order: usize,
        rng: &mut Rng,
    ) -> Result<Self> {
        if n_i == 0 || n_h == 0 || n_o == 0 || n_order == 0 {
            return Err(Error::contract(format!(
                "model sizes must be positive, got n_i={n_i} n_h={n_h} n_o={n_o} n_order={n_order}"
            )));
        }
        let layers = layer_shapes(kind, n_i, n_h, n_o, n_order)
            .into_iter()
            .map(|(r, c)| Affine::init(r, c, rng))
            .collect();
        Ok(MnnModel {
            kind,
            n_i,
            n_h,
            n_o,
            n_order,
            layers,
        })
    }

    pub fn kind(&self) -> MnnKind {
        self.kind
    }

    pub fn n_inputs(&self) -> usize {
        self.n_i
    }

    pub fn n_hidden(&self) -> usize {
        self.n_h
    }

    pub fn n_outputs(&self) -> usize {
        self.n_o
    }

    pub fn n_order(&self) -> usize {
        self.n_order
    }

    pub fn layers(&self) -> &[Affine] {
        &self.layers
    }

    /// Replaces one layer's weights, keeping its shape.
    pub fn set_layer(&mut self, idx: usize, w: Tensor, b: Tensor) -> Result<()> {
        let cur = self
            .layers
            .get(idx)
            .ok_or_else(|| Error::contract(format!("no layer {idx}")))?;
        if !cur.w.same_shape(&w) || !cur.b.same_shape(&b) {
            return Err(Error::shape(
                "set_layer",
                format!("w {} b {}", cur.w.shape_str(), cur.b.shape_str()),
                format!("w {} b {}", w.shape_str(), b.shape_str()),
            ));
        }
        self.layers[idx] = Affine { w, b };
        Ok(())
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(Affine::param_count).sum()
    }

    /// Emits the forward computation into `g` and returns the output node
    /// plus the parameter leaves in storage order (w then b per layer).
    pub fn emit_output(&self, g: &mut Graph, x: NodeId) -> Result<(NodeId, Vec<NodeId>)> {
        if g.value(x).rows() != self.n_i {
            return Err(Error::shape(
                "emit_output",
                format!("{} input rows", self.n_i),
                g.value(x).shape_str(),
            ));
        }
        let mut pids = Vec::with_capacity(self.layers.len() * 2);
        let next = |g: &mut Graph, a: &Affine, pids: &mut Vec<NodeId>| {
            let w = g.leaf(a.w.clone());
            let b = g.leaf(a.b.clone());
            pids.push(w);
            pids.push(b);
            (w, b)
        };
        let out = match self.kind {
            MnnKind::Pann => {
                let (w, b) = next(g, &self.layers[0], &mut pids);
                let h = g.affine(w, b, x)?;
                let p = g.pow_int(h, self.n_order as u32);
                let (cw, cb) = next(g, &self.layers[1], &mut pids);
                g.affine(cw, cb, p)?
            }
            MnnKind::Ccp => {
                let (w, b) = next(g, &self.layers[0], &mut pids);
                let mut state = g.affine(w, b, x)?;
                for d in 1..self.n_order {
                    let (w, b) = next(g, &self.layers[d], &mut pids);
                    let t = g.affine(w, b, x)?;
                    let prod = g.hadamard(t, state)?;
                    state = g.add(prod, state)?;
                }
                let (cw, cb) = next(g, &self.layers[self.n_order], &mut pids);
                g.affine(cw, cb, state)?
            }
            MnnKind::PdcLow => {
                let mut acc: Option<NodeId> = None;
                for d in 1..=self.n_order {
                    let (w, b) = next(g, &self.layers[d - 1], &mut pids);
                    let stacked = g.affine(w, b, x)?;
                    let term = g.block_prod(stacked, d)?;
                    acc = Some(match acc {
                        Some(a) => g.add(a, term)?,
                        None => term,
                    });
                }
                let (cw, cb) = next(g, &self.layers[self.n_order], &mut pids);
                g.affine(cw, cb, acc.expect("n_order >= 1"))?
            }
            MnnKind::Pdc => {
                let mut acc: Option<NodeId> = None;
                for d in 1..=self.n_order {
                    let (w, b) = next(g, &self.layers[2 * (d - 1)], &mut pids);
                    let stacked = g.affine(w, b, x)?;
                    let prod = g.block_prod(stacked, d)?;
                    let (vw, vb) = next(g, &self.layers[2 * (d - 1) + 1], &mut pids);
                    let term = g.affine(vw, vb, prod)?;
                    acc = Some(match acc {
                        Some(a) => g.add(a, term)?,
                        None => term,
                    });
                }
                let (cw, cb) = next(g, &self.layers[2 * self.n_order], &mut pids);
                g.affine(cw, cb, acc.expect("n_order >= 1"))?
            }
        };
        Ok((out, pids))
    }

    /// Forward pass over a batch, one sample per column.
    pub fn predict_batch(&self, x: &Tensor) -> Result<Tensor> {
        let mut g = Graph::new();
        let xid = g.leaf(x.clone());
        let (out, _) = self.emit_output(&mut g, xid)?;
        Ok(g.value(out).clone())
    }

    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        let col = Tensor::column(x.to_vec());
        Ok(self.predict_batch(&col)?.data().to_vec())
    }

    pub fn to_json_string(&self) -> Result<String> {
        let doc = ModelDoc {
            kind: self.kind,
            n_i: self.n_i,
            n_h: self.n_h,
            n_o: self.n_o,
            n_order: self.n_order,
            layers: self
                .layers
                .iter()
                .map(|a| AffineDoc {
                    rows: a.w.rows(),
                    cols: a.w.cols(),
                    w: a.w.data().iter().map(|v| f64_to_hex(*v)).collect(),
                    b: a.b.data().iter().map(|v| f64_to_hex(*v)).collect(),
                })
                .collect(),
        };
        Ok(serde_json::to_string_pretty(&doc)?)
    }

    pub fn from_json_string(text: &str) -> Result<Self> {
        let doc: ModelDoc = serde_json::from_str(text)?;
        let shapes = layer_shapes(doc.kind, doc.n_i, doc.n_h, doc.n_o, doc.n_order);
        if doc.layers.len() != shapes.len() {
            return Err(Error::contract(format!(
                "{} expects {} layers, document has {}",
                doc.kind,
                shapes.len(),
                doc.layers.len()
            )));
        }
        let mut layers = Vec::with_capacity(shapes.len());
        for (ad, (rows, cols)) in doc.layers.iter().zip(shapes) {
            if ad.rows != rows || ad.cols != cols {
                return Err(Error::shape(
                    "model load",
                    format!("{rows}x{cols}"),
                    format!("{}x{}", ad.rows, ad.cols),
                ));
            }
            let w = decode_hex_tensor(rows, cols, &ad.w)?;
            let b = decode_hex_tensor(rows, 1, &ad.b)?;
            layers.push(Affine { w, b });
        }
        Ok(MnnModel {
            kind: doc.kind,
            n_i: doc.n_i,
            n_h: doc.n_h,
            n_o: doc.n_o,
            n_order: doc.n_order,
            layers,
        })
    }

    pub fn save_json(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json_string()?)?;
        Ok(())
    }

    pub fn load_json(path: &Path) -> Result<Self> {
        Self::from_json_string(&std::fs::read_to_string(path)?)
    }
}

// Weights are stored as hex bit patterns so the round-trip is bit-exact;
// decimal JSON floats would be close but not guaranteed identical.
#[derive(Serialize, Deserialize)]
struct AffineDoc {
    rows: usize,
    cols: usize,
    w: Vec<String>,
    b: Vec<String>,
}

#[derive(Serialize, Deserialize)]
struct ModelDoc {
    kind: MnnKind,
    n_i: usize,
    n_h: usize,
    n_o: usize,
    n_order: usize,
    layers: Vec<AffineDoc>,
}

fn f64_to_hex(v: f64) -> String {
    format!("{:016x}", v.to_bits())
}

fn f64_from_hex(s: &str) -> Result<f64> {
    u64::from_str_radix(s, 16)
        .map(f64::from_bits)
        .map_err(|e| Error::contract(format!("bad float bits {s:?}: {e}")))
}

fn decode_hex_tensor(rows: usize, cols: usize, hex: &[String]) -> Result<Tensor> {
    let data = hex.iter().map(|s| f64_from_hex(s)).collect::<Result<Vec<_>>>()?;
    Tensor::from_vec(rows, cols, data)
}

impl crate::train::GradModel for MnnModel {
    fn input_dim(&self) -> usize {
        self.n_i
    }

    fn output_dim(&self) -> usize {
        self.n_o
    }

    fn params(&self) -> Vec<&Tensor> {
        self.layers.iter().flat_map(|a| [&a.w, &a.b]).collect()
    }

    fn params_mut(&mut self) -> Vec<&mut Tensor> {
        self.layers
            .iter_mut()
            .flat_map(|a| [&mut a.w, &mut a.b])
            .collect()
    }

    fn build_loss(&self, x: &Tensor, y: &Tensor) -> Result<(Graph, NodeId, Vec<NodeId>)> {
        if y.rows() != self.n_o || y.cols() != x.cols() {
            return Err(Error::shape(
                "build_loss",
                format!("targets {}x{}", self.n_o, x.cols()),
                y.shape_str(),
            ));
        }
        let mut g = Graph::new();
        let xid = g.leaf(x.clone());
        let (out, pids) = self.emit_output(&mut g, xid)?;
        let yid = g.leaf(y.clone());
        let diff = g.sub(out, yid)?;
        let loss = g.mean_sq(diff);
        Ok((g, loss, pids))
    }

    fn predict_batch(&self, x: &Tensor) -> Result<Tensor> {
        MnnModel::predict_batch(self, x)
    }
}

/// Human-readable parameter count: truncated (not rounded) toward zero, one
/// decimal under 100K and above 1M, whole thousands in between.
pub fn format_param_count(n: usize) -> String {
    if n < 1000 {
        n.to_string()
    } else if n < 100_000 {
        let tenths = n / 100;
        format!("{}.{}K", tenths / 10, tenths % 10)
    } else if n < 1_000_000 {
        format!("{}K", n / 1000)
    } else {
        let tenths = n / 100_000;
        format!("{}.{}M", tenths / 10, tenths % 10)
    }
}

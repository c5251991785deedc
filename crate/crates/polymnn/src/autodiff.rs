//! Reverse-mode automatic differentiation over a flat expression arena.
//!
//! Graphs are built eagerly (define-by-run): every builder call validates
//! shapes, computes the node's value immediately, and returns a [`NodeId`].
//! [`Graph::backward`] then walks the arena once in reverse creation order,
//! which is a valid topological order because operands always precede their
//! consumers.

use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// Handle to a node inside one [`Graph`]. Ids from different graphs must not
/// be mixed; they are plain arena indices.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub struct NodeId(usize);

enum Op {
    Leaf,
    /// `W·X + b·1ᵀ` with the bias broadcast over columns.
    Affine {
        w: NodeId,
        b: NodeId,
        x: NodeId,
    },
    Hadamard(NodeId, NodeId),
    /// Elementwise product of `blocks` equal row-chunks of the input.
    BlockProd {
        x: NodeId,
        blocks: usize,
    },
    PowInt {
        x: NodeId,
        exponent: u32,
    },
    /// Column-wise softmax.
    Softmax(NodeId),
    Add(NodeId, NodeId),
    Sub(NodeId, NodeId),
    Relu(NodeId),
    Scale {
        x: NodeId,
        factor: f64,
    },
    ConcatRows(Vec<NodeId>),
    /// Mean of squared entries, as a 1x1 scalar.
    MeanSq(NodeId),
    /// Single entry extracted as a 1x1 scalar.
    Pick {
        x: NodeId,
        row: usize,
        col: usize,
    },
}

struct Node {
    op: Op,
    value: Tensor,
}

/// Per-node adjoints produced by [`Graph::backward`].
pub struct Gradients {
    adj: Vec<Option<Tensor>>,
}

impl Gradients {
    /// Adjoint of `id`, or `None` if the root does not depend on it.
    pub fn wrt(&self, id: NodeId) -> Option<&Tensor> {
        self.adj[id.0].as_ref()
    }

    pub fn take(&mut self, id: NodeId) -> Option<Tensor> {
        self.adj[id.0].take()
    }
}

#[derive(Default)]
pub struct Graph {
    nodes: Vec<Node>,
}

impl Graph {
    pub fn new() -> Self {
        Graph { nodes: Vec::new() }
    }

    pub fn value(&self, id: NodeId) -> &Tensor {
        &self.nodes[id.0].value
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn push(&mut self, op: Op, value: Tensor) -> NodeId {
        self.nodes.push(Node { op, value });
        NodeId(self.nodes.len() - 1)
    }

    pub fn leaf(&mut self, value: Tensor) -> NodeId {
        self.push(Op::Leaf, value)
    }

    pub fn affine(&mut self, w: NodeId, b: NodeId, x: NodeId) -> Result<NodeId> {
        let (wt, bt, xt) = (self.value(w), self.value(b), self.value(x));
        if wt.cols() != xt.rows() {
            return Err(Error::shape(
                "affine",
                format!("weight cols == input rows, weight {}", wt.shape_str()),
                xt.shape_str(),
            ));
        }
        if bt.rows() != wt.rows() || bt.cols() != 1 {
            return Err(Error::shape(
                "affine",
                format!("bias {}x1", wt.rows()),
                bt.shape_str(),
            ));
        }
        let mut y = wt.matmul(xt)?;
        let cols = y.cols();
        let bias = self.value(b).data().to_vec();
        for (r, bv) in bias.iter().enumerate() {
            let row = &mut y.data_mut()[r * cols..(r + 1) * cols];
            for v in row {
                *v += bv;
            }
        }
        Ok(self.push(Op::Affine { w, b, x }, y))
    }

    pub fn hadamard(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        let (at, bt) = (self.value(a), self.value(b));
        if !at.same_shape(bt) {
            return Err(Error::shape("hadamard", at.shape_str(), bt.shape_str()));
        }
        let mut y = at.clone();
        for (o, v) in y.data_mut().iter_mut().zip(bt.data()) {
            *o *= v;
        }
        Ok(self.push(Op::Hadamard(a, b), y))
    }

    /// Splits `x` into `blocks` equal row-chunks and multiplies them
    /// elementwise. A (k·h)xB input yields an hxB output.
    pub fn block_prod(&mut self, x: NodeId, blocks: usize) -> Result<NodeId> {
        let xt = self.value(x);
        if blocks == 0 || xt.rows() % blocks != 0 {
            return Err(Error::shape(
                "block_prod",
                format!("rows divisible by {blocks} blocks"),
                xt.shape_str(),
            ));
        }
        let h = xt.rows() / blocks;
        let chunk = h * xt.cols();
        let mut out = xt.data()[..chunk].to_vec();
        for j in 1..blocks {
            let src = &xt.data()[j * chunk..(j + 1) * chunk];
            for (o, v) in out.iter_mut().zip(src) {
                *o *= v;
            }
        }
        let y = Tensor::from_vec(h, xt.cols(), out)?;
        Ok(self.push(Op::BlockProd { x, blocks }, y))
    }

    pub fn pow_int(&mut self, x: NodeId, exponent: u32) -> NodeId {
        let mut y = self.value(x).clone();
        for v in y.data_mut() {
            *v = v.powi(exponent as i32);
        }
        self.push(Op::PowInt { x, exponent }, y)
    }

    pub fn softmax(&mut self, x: NodeId) -> NodeId {
        let xt = self.value(x);
        let (rows, cols) = (xt.rows(), xt.cols());
        let mut y = Tensor::zeros(rows, cols);
        for c in 0..cols {
            let mut m = f64::NEG_INFINITY;
            for r in 0..rows {
                m = if xt.at(r, c) > m { xt.at(r, c) } else { m };
            }
            let mut sum = 0.0;
            for r in 0..rows {
                let e = (xt.at(r, c) - m).exp();
                y.set(r, c, e);
                sum += e;
            }
            for r in 0..rows {
                y.set(r, c, y.at(r, c) / sum);
            }
        }
        self.push(Op::Softmax(x), y)
    }

    pub fn add(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        let (at, bt) = (self.value(a), self.value(b));
        if !at.same_shape(bt) {
            return Err(Error::shape("add", at.shape_str(), bt.shape_str()));
        }
        let mut y = at.clone();
        for (o, v) in y.data_mut().iter_mut().zip(bt.data()) {
            *o += v;
        }
        Ok(self.push(Op::Add(a, b), y))
    }

    pub fn sub(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        let (at, bt) = (self.value(a), self.value(b));
        if !at.same_shape(bt) {
            return Err(Error::shape("sub", at.shape_str(), bt.shape_str()));
        }
        let mut y = at.clone();
        for (o, v) in y.data_mut().iter_mut().zip(bt.data()) {
            *o -= v;
        }
        Ok(self.push(Op::Sub(a, b), y))
    }

    pub fn relu(&mut self, x: NodeId) -> NodeId {
        let mut y = self.value(x).clone();
        for v in y.data_mut() {
            // keep NaN as NaN; f64::max would swallow it
            if !(*v > 0.0) && !v.is_nan() {
                *v = 0.0;
            }
        }
        self.push(Op::Relu(x), y)
    }

    pub fn scale(&mut self, x: NodeId, factor: f64) -> NodeId {
        let mut y = self.value(x).clone();
        for v in y.data_mut() {
            *v *= factor;
        }
        self.push(Op::Scale { x, factor }, y)
    }

    pub fn concat_rows(&mut self, parts: &[NodeId]) -> Result<NodeId> {
        let first = *parts
            .first()
            .ok_or_else(|| Error::contract("concat_rows needs at least one input"))?;
        let cols = self.value(first).cols();
        let mut rows = 0;
        let mut data = Vec::new();
        for &p in parts {
            let t = self.value(p);
            if t.cols() != cols {
                return Err(Error::shape(
                    "concat_rows",
                    format!("{cols} cols"),
                    t.shape_str(),
                ));
            }
            rows += t.rows();
            data.extend_from_slice(t.data());
        }
        let y = Tensor::from_vec(rows, cols, data)?;
        Ok(self.push(Op::ConcatRows(parts.to_vec()), y))
    }

    pub fn mean_sq(&mut self, x: NodeId) -> NodeId {
        let xt = self.value(x);
        let n = xt.len() as f64;
        let sum: f64 = xt.data().iter().map(|v| v * v).sum();
        self.push(Op::MeanSq(x), Tensor::scalar(sum / n))
    }

    pub fn pick(&mut self, x: NodeId, row: usize, col: usize) -> Result<NodeId> {
        let xt = self.value(x);
        if row >= xt.rows() || col >= xt.cols() {
            return Err(Error::shape(
                "pick",
                format!("index within {}", xt.shape_str()),
                format!("({row},{col})"),
            ));
        }
        let v = xt.at(row, col);
        Ok(self.push(Op::Pick { x, row, col }, Tensor::scalar(v)))
    }

    /// Accumulates adjoints of every node the scalar `root` depends on.
    pub fn backward(&self, root: NodeId) -> Result<Gradients> {
        if !self.value(root).is_scalar() {
            return Err(Error::contract(format!(
                "backward root must be scalar, got {}",
                self.value(root).shape_str()
            )));
        }
        let mut adj: Vec<Option<Tensor>> = vec![None; self.nodes.len()];
        adj[root.0] = Some(Tensor::scalar(1.0));
        for i in (0..=root.0).rev() {
            // operands always have smaller ids, so the adjoints they
            // accumulate into live strictly left of position i
            let (kids, rest) = adj.split_at_mut(i);
            let Some(dy) = rest[0].as_ref() else { continue };
            match &self.nodes[i].op {
                Op::Leaf => {}
                Op::Affine { w, b, x } => {
                    let dw = dy.matmul_transpose_other(self.value(*x))?;
                    let dx = self.value(*w).matmul_transpose_self(dy)?;
                    let db = dy.row_sums();
                    accumulate(&mut kids[w.0], dw);
                    accumulate(&mut kids[b.0], db);
                    accumulate(&mut kids[x.0], dx);
                }
                Op::Hadamard(a, b) => {
                    let mut da = dy.clone();
                    for (o, v) in da.data_mut().iter_mut().zip(self.value(*b).data()) {
                        *o *= v;
                    }
                    let mut db = dy.clone();
                    for (o, v) in db.data_mut().iter_mut().zip(self.value(*a).data()) {
                        *o *= v;
                    }
                    accumulate(&mut kids[a.0], da);
                    accumulate(&mut kids[b.0], db);
                }
                Op::BlockProd { x, blocks } => {
                    let xt = self.value(*x);
                    let chunk = dy.len();
                    // prefix[j] = product of chunks 0..j; suffix runs backwards
                    let mut prefix = Vec::with_capacity(*blocks);
                    prefix.push(vec![1.0; chunk]);
                    for j in 0..blocks - 1 {
                        let mut next = prefix[j].clone();
                        let src = &xt.data()[j * chunk..(j + 1) * chunk];
                        for (o, v) in next.iter_mut().zip(src) {
                            *o *= v;
                        }
                        prefix.push(next);
                    }
                    let mut dx = Tensor::zeros(xt.rows(), xt.cols());
                    let mut suffix = vec![1.0; chunk];
                    for j in (0..*blocks).rev() {
                        let dst = &mut dx.data_mut()[j * chunk..(j + 1) * chunk];
                        for k in 0..chunk {
                            dst[k] = dy.data()[k] * prefix[j][k] * suffix[k];
                        }
                        let src = &xt.data()[j * chunk..(j + 1) * chunk];
                        for (o, v) in suffix.iter_mut().zip(src) {
                            *o *= v;
                        }
                    }
                    accumulate(&mut kids[x.0], dx);
                }
                Op::PowInt { x, exponent } => {
                    let xt = self.value(*x);
                    let mut dx = dy.clone();
                    let p = *exponent;
                    if p == 0 {
                        for o in dx.data_mut() {
                            *o = 0.0;
                        }
                    } else {
                        for (o, v) in dx.data_mut().iter_mut().zip(xt.data()) {
                            *o *= p as f64 * v.powi(p as i32 - 1);
                        }
                    }
                    accumulate(&mut kids[x.0], dx);
                }
                Op::Softmax(x) => {
                    let y = &self.nodes[i].value;
                    let (rows, cols) = (y.rows(), y.cols());
                    let mut dx = Tensor::zeros(rows, cols);
                    for c in 0..cols {
                        let mut dot = 0.0;
                        for r in 0..rows {
                            dot += y.at(r, c) * dy.at(r, c);
                        }
                        for r in 0..rows {
                            dx.set(r, c, y.at(r, c) * (dy.at(r, c) - dot));
                        }
                    }
                    accumulate(&mut kids[x.0], dx);
                }
                Op::Add(a, b) => {
                    accumulate(&mut kids[a.0], dy.clone());
                    accumulate(&mut kids[b.0], dy.clone());
                }
                Op::Sub(a, b) => {
                    let mut neg = dy.clone();
                    for v in neg.data_mut() {
                        *v = -*v;
                    }
                    accumulate(&mut kids[a.0], dy.clone());
                    accumulate(&mut kids[b.0], neg);
                }
                Op::Relu(x) => {
                    let xt = self.value(*x);
                    let mut dx = dy.clone();
                    for (o, v) in dx.data_mut().iter_mut().zip(xt.data()) {
                        if !(*v > 0.0) {
                            *o = 0.0;
                        }
                    }
                    accumulate(&mut kids[x.0], dx);
                }
                Op::Scale { x, factor } => {
                    let mut dx = dy.clone();
                    for v in dx.data_mut() {
                        *v *= factor;
                    }
                    accumulate(&mut kids[x.0], dx);
                }
                Op::ConcatRows(parts) => {
                    let cols = dy.cols();
                    let mut offset = 0;
                    for &p in parts {
                        let rows = self.value(p).rows();
                        let slice = dy.data()[offset * cols..(offset + rows) * cols].to_vec();
                        accumulate(&mut kids[p.0], Tensor::from_vec(rows, cols, slice)?);
                        offset += rows;
                    }
                }
                Op::MeanSq(x) => {
                    let xt = self.value(*x);
                    let scale = 2.0 * dy.at(0, 0) / xt.len() as f64;
                    let mut dx = xt.clone();
                    for v in dx.data_mut() {
                        *v *= scale;
                    }
                    accumulate(&mut kids[x.0], dx);
                }
                Op::Pick { x, row, col } => {
                    let xt = self.value(*x);
                    let mut dx = Tensor::zeros(xt.rows(), xt.cols());
                    dx.set(*row, *col, dy.at(0, 0));
                    accumulate(&mut kids[x.0], dx);
                }
            }
        }
        Ok(Gradients { adj })
    }
}

fn accumulate(slot: &mut Option<Tensor>, delta: Tensor) {
    match slot {
        Some(t) => {
            for (o, v) in t.data_mut().iter_mut().zip(delta.data()) {
                *o += v;
            }
        }
        None => *slot = Some(delta),
    }
}

pub const GRAD_STEP: f64 = 1e-5;
pub const GRAD_REL_TOL: f64 = 1e-5;
pub const GRAD_ABS_TOL: f64 = 1e-8;

#[derive(Debug)]
pub struct GradCheck {
    pub checked: usize,
    pub failures: usize,
    pub max_rel: f64,
    pub max_abs: f64,
}

impl GradCheck {
    pub fn ok(&self) -> bool {
        self.failures == 0
    }
}

/// Compares `analytic` against central finite differences of `f` around `x0`.
///
/// Relative error is used where the larger of the two magnitudes exceeds
/// 1e-6 (tolerance [`GRAD_REL_TOL`]), absolute error below that
/// ([`GRAD_ABS_TOL`]): near-zero gradients drown in cancellation noise under
/// a relative test.
pub fn gradient_check(
    mut f: impl FnMut(&[f64]) -> f64,
    x0: &[f64],
    analytic: &[f64],
    h: f64,
) -> GradCheck {
    assert_eq!(x0.len(), analytic.len(), "gradient length mismatch");
    let mut report = GradCheck {
        checked: x0.len(),
        failures: 0,
        max_rel: 0.0,
        max_abs: 0.0,
    };
    let mut x = x0.to_vec();
    for i in 0..x.len() {
        let orig = x[i];
        x[i] = orig + h;
        let up = f(&x);
        x[i] = orig - h;
        let down = f(&x);
        x[i] = orig;
        let fd = (up - down) / (2.0 * h);
        let an = analytic[i];
        let scale = fd.abs().max(an.abs());
        let err = (fd - an).abs();
        if scale > 1e-6 {
            let rel = err / scale;
            report.max_rel = report.max_rel.max(rel);
            if !(rel < GRAD_REL_TOL) {
                report.failures += 1;
            }
        } else {
            report.max_abs = report.max_abs.max(err);
            if !(err < GRAD_ABS_TOL) {
                report.failures += 1;
            }
        }
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn affine_broadcasts_bias_over_columns() {
        let mut g = Graph::new();
        let w = g.leaf(Tensor::from_vec(2, 2, vec![1.0, 2.0, 0.0, 1.0]).unwrap());
        let b = g.leaf(Tensor::column(vec![1.0, 1.0]));
        let x = g.leaf(Tensor::from_vec(2, 2, vec![1.0, 2.0, 1.0, 0.0]).unwrap());
        let y = g.affine(w, b, x).unwrap();
        assert_eq!(g.value(y).data(), &[4.0, 3.0, 2.0, 1.0]);
    }

    #[test]
    fn softmax_matches_hand_computation() {
        let mut g = Graph::new();
        let x = g.leaf(Tensor::column(vec![2.0_f64.ln(), 0.0]));
        let y = g.softmax(x);
        assert!(close(g.value(y).at(0, 0), 2.0 / 3.0, 1e-15));
        assert!(close(g.value(y).at(1, 0), 1.0 / 3.0, 1e-15));
    }

    #[test]
    fn square_gradient_is_two_x() {
        let mut g = Graph::new();
        let x = g.leaf(Tensor::scalar(3.0));
        let y = g.pow_int(x, 2);
        let grads = g.backward(y).unwrap();
        assert_eq!(grads.wrt(x).unwrap().at(0, 0), 6.0);
    }

    #[test]
    fn softmax_entry_gradient_hand_example() {
        let mut g = Graph::new();
        let x = g.leaf(Tensor::column(vec![0.0, 0.0]));
        let s = g.softmax(x);
        let y = g.pick(s, 0, 0).unwrap();
        let grads = g.backward(y).unwrap();
        let dx = grads.wrt(x).unwrap();
        assert!(close(dx.at(0, 0), 0.25, 1e-15));
        assert!(close(dx.at(1, 0), -0.25, 1e-15));
    }

    #[test]
    fn mean_sq_value_and_gradient() {
        let mut g = Graph::new();
        let x = g.leaf(Tensor::column(vec![1.0, 2.0, 3.0]));
        let y = g.mean_sq(x);
        assert!(close(g.value(y).at(0, 0), 14.0 / 3.0, 1e-15));
        let grads = g.backward(y).unwrap();
        let dx = grads.wrt(x).unwrap();
        assert!(close(dx.at(0, 0), 2.0 / 3.0, 1e-15));
        assert!(close(dx.at(1, 0), 4.0 / 3.0, 1e-15));
        assert!(close(dx.at(2, 0), 2.0, 1e-15));
    }

    #[test]
    fn block_prod_hand_example() {
        let mut g = Graph::new();
        let x = g.leaf(Tensor::from_vec(3, 2, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]).unwrap());
        let y = g.block_prod(x, 3).unwrap();
        assert_eq!(g.value(y).data(), &[15.0, 48.0]);
        // chunk gradients are the products of the other chunks
        let p = g.pick(y, 0, 0).unwrap();
        let grads = g.backward(p).unwrap();
        let dx = grads.wrt(x).unwrap();
        assert_eq!(dx.at(0, 0), 15.0);
        assert_eq!(dx.at(1, 0), 5.0);
        assert_eq!(dx.at(2, 0), 3.0);
        assert_eq!(dx.at(0, 1), 0.0);
    }

    /// Finite-difference check for one op: loss = mean_sq(build(leaf)).
    fn fd_check(x0: Tensor, build: impl Fn(&mut Graph, NodeId) -> NodeId) {
        let (rows, cols) = (x0.rows(), x0.cols());
        let run = |vals: &[f64]| -> f64 {
            let mut g = Graph::new();
            let x = g.leaf(Tensor::from_vec(rows, cols, vals.to_vec()).unwrap());
            let out = build(&mut g, x);
            let loss = g.mean_sq(out);
            g.value(loss).at(0, 0)
        };
        let mut g = Graph::new();
        let x = g.leaf(x0.clone());
        let out = build(&mut g, x);
        let loss = g.mean_sq(out);
        let grads = g.backward(loss).unwrap();
        let analytic = grads.wrt(x).unwrap().data().to_vec();
        let report = gradient_check(run, x0.data(), &analytic, GRAD_STEP);
        assert!(report.ok(), "fd mismatch: {report:?}");
    }

    #[test]
    fn finite_differences_agree_per_op() {
        let x23 = Tensor::from_vec(2, 3, vec![0.3, -1.2, 0.7, 1.5, -0.4, 0.9]).unwrap();
        let x43 = Tensor::from_vec(
            4,
            3,
            vec![0.3, -1.2, 0.7, 1.5, -0.4, 0.9, -0.8, 0.2, 1.1, 0.6, -1.4, 0.5],
        )
        .unwrap();

        fd_check(x23.clone(), |g, x| {
            let w = g.leaf(Tensor::from_vec(3, 2, vec![0.5, -0.2, 0.1, 0.8, -0.6, 0.3]).unwrap());
            let b = g.leaf(Tensor::column(vec![0.1, -0.2, 0.3]));
            g.affine(w, b, x).unwrap()
        });
        fd_check(x23.clone(), |g, x| {
            let other =
                g.leaf(Tensor::from_vec(2, 3, vec![1.1, 0.4, -0.5, 0.2, 0.9, -1.3]).unwrap());
            g.hadamard(x, other).unwrap()
        });
        fd_check(x43.clone(), |g, x| g.block_prod(x, 2).unwrap());
        fd_check(x23.clone(), |g, x| g.pow_int(x, 3));
        fd_check(x23.clone(), |g, x| g.softmax(x));
        fd_check(x23.clone(), |g, x| {
            let other =
                g.leaf(Tensor::from_vec(2, 3, vec![1.1, 0.4, -0.5, 0.2, 0.9, -1.3]).unwrap());
            let s = g.sub(x, other).unwrap();
            g.add(s, x).unwrap()
        });
        // inputs kept away from the relu kink where the derivative jumps
        fd_check(x23.clone(), |g, x| g.relu(x));
        fd_check(x23.clone(), |g, x| g.scale(x, -2.5));
        fd_check(x43, |g, x| {
            let p = g.pick(x, 2, 1).unwrap();
            g.concat_rows(&[p, p]).unwrap()
        });
    }

    #[test]
    fn fd_check_weight_and_bias_of_affine() {
        // loss as a function of the weight entries with x fixed
        let x = Tensor::from_vec(2, 3, vec![0.3, -1.2, 0.7, 1.5, -0.4, 0.9]).unwrap();
        let w0 = vec![0.5, -0.2, 0.1, 0.8, -0.6, 0.3];
        let b0 = vec![0.1, -0.2, 0.3];
        let run_w = |vals: &[f64]| -> f64 {
            let mut g = Graph::new();
            let w = g.leaf(Tensor::from_vec(3, 2, vals.to_vec()).unwrap());
            let b = g.leaf(Tensor::column(b0.clone()));
            let xi = g.leaf(x.clone());
            let y = g.affine(w, b, xi).unwrap();
            let loss = g.mean_sq(y);
            g.value(loss).at(0, 0)
        };
        let mut g = Graph::new();
        let w = g.leaf(Tensor::from_vec(3, 2, w0.clone()).unwrap());
        let b = g.leaf(Tensor::column(b0.clone()));
        let xi = g.leaf(x.clone());
        let y = g.affine(w, b, xi).unwrap();
        let loss = g.mean_sq(y);
        let grads = g.backward(loss).unwrap();
        let report = gradient_check(run_w, &w0, grads.wrt(w).unwrap().data(), GRAD_STEP);
        assert!(report.ok(), "weight grad mismatch: {report:?}");
        let run_b = |vals: &[f64]| -> f64 {
            let mut g = Graph::new();
            let wv = g.leaf(Tensor::from_vec(3, 2, w0.clone()).unwrap());
            let bv = g.leaf(Tensor::column(vals.to_vec()));
            let xi = g.leaf(x.clone());
            let yv = g.affine(wv, bv, xi).unwrap();
            let loss = g.mean_sq(yv);
            g.value(loss).at(0, 0)
        };
        let report = gradient_check(run_b, &b0, grads.wrt(b).unwrap().data(), GRAD_STEP);
        assert!(report.ok(), "bias grad mismatch: {report:?}");
    }

    #[test]
    fn reused_node_accumulates_both_paths() {
        // y = x*x + x at x=3: dy/dx = 2x + 1 = 7
        let mut g = Graph::new();
        let x = g.leaf(Tensor::scalar(3.0));
        let sq = g.hadamard(x, x).unwrap();
        let y = g.add(sq, x).unwrap();
        let grads = g.backward(y).unwrap();
        assert_eq!(grads.wrt(x).unwrap().at(0, 0), 7.0);
    }

    #[test]
    fn nan_input_propagates_to_loss() {
        let mut g = Graph::new();
        let x = g.leaf(Tensor::column(vec![f64::NAN, 1.0]));
        let r = g.relu(x);
        let s = g.softmax(r);
        let loss = g.mean_sq(s);
        assert!(g.value(loss).at(0, 0).is_nan());
    }

    #[test]
    fn backward_rejects_non_scalar_root() {
        let mut g = Graph::new();
        let x = g.leaf(Tensor::column(vec![1.0, 2.0]));
        assert!(g.backward(x).is_err());
    }

    #[test]
    fn rebuilding_identical_graph_is_bitwise_deterministic() {
        let build = || {
            let mut g = Graph::new();
            let x = g.leaf(Tensor::column(vec![0.1, 0.2, 0.3]));
            let w = g.leaf(Tensor::from_vec(3, 3, (0..9).map(|v| v as f64 * 0.37).collect()).unwrap());
            let b = g.leaf(Tensor::column(vec![0.01, 0.02, 0.03]));
            let a = g.affine(w, b, x).unwrap();
            let s = g.softmax(a);
            let loss = g.mean_sq(s);
            let grads = g.backward(loss).unwrap();
            (
                g.value(loss).at(0, 0).to_bits(),
                grads.wrt(w).unwrap().data().iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
            )
        };
        assert_eq!(build(), build());
    }
}

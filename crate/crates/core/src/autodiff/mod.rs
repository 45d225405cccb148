//! Minimal reverse-mode automatic differentiation engine.
//!
//! A [`Tape`] records operations as they execute (define-by-run). Nodes are
//! appended in topological order, so [`Tape::backward`] is a single reverse
//! sweep. Every forward op scans its output for non-finite values and fails
//! naming the producing node; silent NaN propagation is an error state here,
//! not a warning.

pub mod conv;
mod reference;
pub mod tensor;

use crate::error::{Error, Result};
pub use tensor::Tensor;

pub type NodeId = usize;

#[derive(Clone, Debug)]
enum OpKind {
    Leaf { param: Option<usize> },
    Conv2d { stride: usize, pad: usize },
    ConvTranspose2d { stride: usize, pad: usize },
    Matmul,
    AddRowBias,
    AddChanBias,
    LeakyRelu { slope: f32 },
    Add,
    Mul,
    Scale { factor: f32 },
    Reshape,
    BlockMix { blocks: Vec<(usize, usize)>, classes: Vec<usize> },
    MeanAbsDiff,
    SoftmaxCrossEntropy { labels: Vec<usize> },
    SumAll,
}

impl OpKind {
    fn name(&self) -> &'static str {
        match self {
            OpKind::Leaf { .. } => "leaf",
            OpKind::Conv2d { .. } => "conv2d",
            OpKind::ConvTranspose2d { .. } => "conv2d_transpose",
            OpKind::Matmul => "matmul",
            OpKind::AddRowBias => "add_row_bias",
            OpKind::AddChanBias => "add_chan_bias",
            OpKind::LeakyRelu { .. } => "leaky_relu",
            OpKind::Add => "add",
            OpKind::Mul => "mul",
            OpKind::Scale { .. } => "scale",
            OpKind::Reshape => "reshape",
            OpKind::BlockMix { .. } => "block_mix",
            OpKind::MeanAbsDiff => "mean_abs_diff",
            OpKind::SoftmaxCrossEntropy { .. } => "softmax_cross_entropy",
            OpKind::SumAll => "sum_all",
        }
    }
}

struct Node {
    op: OpKind,
    inputs: Vec<NodeId>,
    value: Tensor,
    needs_grad: bool,
}

/// Recorded computation graph plus gradient buffers.
#[derive(Default)]
pub struct Tape {
    nodes: Vec<Node>,
    grads: Vec<Option<Vec<f32>>>,
    backward_done: bool,
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn value(&self, id: NodeId) -> &Tensor {
        &self.nodes[id].value
    }

    pub fn grad(&self, id: NodeId) -> Option<&[f32]> {
        self.grads[id].as_deref()
    }

    /// Constant input; gradients do not flow into it.
    pub fn leaf(&mut self, value: Tensor) -> NodeId {
        self.push_unchecked(OpKind::Leaf { param: None }, vec![], value, false)
    }

    /// Differentiable input that is not a named parameter.
    pub fn var(&mut self, value: Tensor) -> NodeId {
        self.push_unchecked(OpKind::Leaf { param: None }, vec![], value, true)
    }

    /// Differentiable input bound to a parameter slot.
    pub fn param(&mut self, value: Tensor, param: usize) -> NodeId {
        self.push_unchecked(OpKind::Leaf { param: Some(param) }, vec![], value, true)
    }

    /// Gradients of parameter-bound leaves, in insertion order.
    pub fn param_grads(&self) -> impl Iterator<Item = (usize, &[f32])> {
        self.nodes.iter().enumerate().filter_map(|(id, n)| match n.op {
            OpKind::Leaf { param: Some(p) } => self.grads[id].as_deref().map(|g| (p, g)),
            _ => None,
        })
    }

    fn push_unchecked(
        &mut self,
        op: OpKind,
        inputs: Vec<NodeId>,
        value: Tensor,
        needs_grad: bool,
    ) -> NodeId {
        let id = self.nodes.len();
        self.nodes.push(Node { op, inputs, value, needs_grad });
        self.grads.push(None);
        id
    }

    fn push(&mut self, op: OpKind, inputs: Vec<NodeId>, value: Tensor) -> Result<NodeId> {
        if !value.all_finite() {
            return Err(Error::NonFinite {
                node: self.nodes.len(),
                op: op.name().to_string(),
            });
        }
        let needs_grad = inputs.iter().any(|&i| self.nodes[i].needs_grad);
        Ok(self.push_unchecked(op, inputs, value, needs_grad))
    }

    pub fn conv2d(&mut self, x: NodeId, w: NodeId, stride: usize, pad: usize) -> Result<NodeId> {
        let y = conv::conv2d_forward(self.value(x), self.value(w), stride, pad)?;
        self.push(OpKind::Conv2d { stride, pad }, vec![x, w], y)
    }

    pub fn conv2d_transpose(
        &mut self,
        x: NodeId,
        w: NodeId,
        stride: usize,
        pad: usize,
    ) -> Result<NodeId> {
        let y = conv::conv2d_transpose_forward(self.value(x), self.value(w), stride, pad)?;
        self.push(OpKind::ConvTranspose2d { stride, pad }, vec![x, w], y)
    }

    pub fn matmul(&mut self, x: NodeId, w: NodeId) -> Result<NodeId> {
        let (xv, wv) = (self.value(x), self.value(w));
        xv.expect_rank(2, "matmul lhs")?;
        wv.expect_rank(2, "matmul rhs")?;
        let (n, i) = (xv.shape()[0], xv.shape()[1]);
        wv.expect_dim(0, i, "matmul inner dims")?;
        let o = wv.shape()[1];
        let mut y = vec![0.0f32; n * o];
        conv::gemm(false, false, n, i, o, 1.0, xv.data(), wv.data(), 0.0, &mut y);
        self.push(OpKind::Matmul, vec![x, w], Tensor::new(vec![n, o], y)?)
    }

    /// `[N,O] + [O]`, bias broadcast across rows.
    pub fn add_row_bias(&mut self, x: NodeId, b: NodeId) -> Result<NodeId> {
        let (xv, bv) = (self.value(x), self.value(b));
        xv.expect_rank(2, "add_row_bias input")?;
        bv.expect_rank(1, "add_row_bias bias")?;
        let o = xv.shape()[1];
        bv.expect_dim(0, o, "add_row_bias bias length")?;
        let mut y = xv.data().to_vec();
        for row in y.chunks_mut(o) {
            for (v, b) in row.iter_mut().zip(bv.data()) {
                *v += b;
            }
        }
        let shape = xv.shape().to_vec();
        self.push(OpKind::AddRowBias, vec![x, b], Tensor::new(shape, y)?)
    }

    /// `[N,C,H,W] + [C]`, bias broadcast across batch and spatial axes.
    pub fn add_chan_bias(&mut self, x: NodeId, b: NodeId) -> Result<NodeId> {
        let (xv, bv) = (self.value(x), self.value(b));
        xv.expect_rank(4, "add_chan_bias input")?;
        bv.expect_rank(1, "add_chan_bias bias")?;
        let c = xv.shape()[1];
        bv.expect_dim(0, c, "add_chan_bias bias length")?;
        let hw = xv.shape()[2] * xv.shape()[3];
        let mut y = xv.data().to_vec();
        for sample in y.chunks_mut(c * hw) {
            for (ci, plane) in sample.chunks_mut(hw).enumerate() {
                let b = bv.data()[ci];
                for v in plane {
                    *v += b;
                }
            }
        }
        let shape = xv.shape().to_vec();
        self.push(OpKind::AddChanBias, vec![x, b], Tensor::new(shape, y)?)
    }

    pub fn leaky_relu(&mut self, x: NodeId, slope: f32) -> Result<NodeId> {
        let xv = self.value(x);
        let y: Vec<f32> = xv
            .data()
            .iter()
            .map(|&v| if v >= 0.0 { v } else { slope * v })
            .collect();
        let shape = xv.shape().to_vec();
        self.push(OpKind::LeakyRelu { slope }, vec![x], Tensor::new(shape, y)?)
    }

    pub fn add(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        let (av, bv) = (self.value(a), self.value(b));
        self.check_same_shape(av, bv, "add")?;
        let y: Vec<f32> = av.data().iter().zip(bv.data()).map(|(x, y)| x + y).collect();
        let shape = av.shape().to_vec();
        self.push(OpKind::Add, vec![a, b], Tensor::new(shape, y)?)
    }

    pub fn mul(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        let (av, bv) = (self.value(a), self.value(b));
        self.check_same_shape(av, bv, "mul")?;
        let y: Vec<f32> = av.data().iter().zip(bv.data()).map(|(x, y)| x * y).collect();
        let shape = av.shape().to_vec();
        self.push(OpKind::Mul, vec![a, b], Tensor::new(shape, y)?)
    }

    pub fn scale(&mut self, x: NodeId, factor: f32) -> Result<NodeId> {
        let xv = self.value(x);
        let y: Vec<f32> = xv.data().iter().map(|v| v * factor).collect();
        let shape = xv.shape().to_vec();
        self.push(OpKind::Scale { factor }, vec![x], Tensor::new(shape, y)?)
    }

    pub fn reshape(&mut self, x: NodeId, shape: &[usize]) -> Result<NodeId> {
        let y = self.value(x).clone().reshaped(shape)?;
        self.push(OpKind::Reshape, vec![x], y)
    }

    /// Row-wise block replacement over `[N,d]` codes: output row `i` equals
    /// `a` row `i` with block `classes[i]` taken from `b` row `i`. A latent
    /// swap is two of these with the arguments flipped.
    pub fn block_mix(
        &mut self,
        a: NodeId,
        b: NodeId,
        blocks: &[(usize, usize)],
        classes: &[usize],
    ) -> Result<NodeId> {
        let (av, bv) = (self.value(a), self.value(b));
        self.check_same_shape(av, bv, "block_mix")?;
        av.expect_rank(2, "block_mix input")?;
        let (n, d) = (av.shape()[0], av.shape()[1]);
        let total: usize = blocks.iter().map(|&(_, s)| s).sum();
        if total != d || blocks.iter().any(|&(o, s)| o + s > d) {
            return Err(Error::Dimension {
                axis: 1,
                expected: d,
                actual: total,
                context: "block_mix partition does not tile the latent".into(),
            });
        }
        if classes.len() != n {
            return Err(Error::Dimension {
                axis: 0,
                expected: n,
                actual: classes.len(),
                context: "block_mix class list length".into(),
            });
        }
        for &c in classes {
            if c >= blocks.len() {
                return Err(Error::ClassRange { j: c, m: blocks.len() });
            }
        }
        let mut y = av.data().to_vec();
        for (i, &c) in classes.iter().enumerate() {
            let (off, size) = blocks[c];
            y[i * d + off..i * d + off + size]
                .copy_from_slice(&bv.data()[i * d + off..i * d + off + size]);
        }
        self.push(
            OpKind::BlockMix { blocks: blocks.to_vec(), classes: classes.to_vec() },
            vec![a, b],
            Tensor::new(vec![n, d], y)?,
        )
    }

    /// Per-element mean of |a - b| (the l1 pixel loss), scalar output.
    pub fn mean_abs_diff(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        let (av, bv) = (self.value(a), self.value(b));
        self.check_same_shape(av, bv, "mean_abs_diff")?;
        let n = av.len() as f64;
        let sum: f64 = av
            .data()
            .iter()
            .zip(bv.data())
            .map(|(x, y)| (x - y).abs() as f64)
            .sum();
        self.push(OpKind::MeanAbsDiff, vec![a, b], Tensor::scalar((sum / n) as f32))
    }

    /// Mean softmax cross-entropy over rows of `[N,K]` logits.
    pub fn softmax_cross_entropy(&mut self, logits: NodeId, labels: &[usize]) -> Result<NodeId> {
        let lv = self.value(logits);
        lv.expect_rank(2, "softmax_cross_entropy logits")?;
        let (n, k) = (lv.shape()[0], lv.shape()[1]);
        if labels.len() != n {
            return Err(Error::Dimension {
                axis: 0,
                expected: n,
                actual: labels.len(),
                context: "softmax_cross_entropy labels".into(),
            });
        }
        let mut total = 0.0f64;
        for (row, &label) in lv.data().chunks(k).zip(labels) {
            if label >= k {
                return Err(Error::LabelRange { label, classes: k });
            }
            let maxv = row.iter().cloned().fold(f32::NEG_INFINITY, f32::max);
            let lse = row.iter().map(|v| ((v - maxv) as f64).exp()).sum::<f64>().ln()
                + maxv as f64;
            total += lse - row[label] as f64;
        }
        self.push(
            OpKind::SoftmaxCrossEntropy { labels: labels.to_vec() },
            vec![logits],
            Tensor::scalar((total / n as f64) as f32),
        )
    }

    pub fn sum_all(&mut self, x: NodeId) -> Result<NodeId> {
        let s: f64 = self.value(x).data().iter().map(|&v| v as f64).sum();
        self.push(OpKind::SumAll, vec![x], Tensor::scalar(s as f32))
    }

    fn check_same_shape(&self, a: &Tensor, b: &Tensor, context: &str) -> Result<()> {
        if a.shape() != b.shape() {
            return Err(Error::Dimension {
                axis: 0,
                expected: a.len(),
                actual: b.len(),
                context: format!("{context}: operand shapes {:?} vs {:?}", a.shape(), b.shape()),
            });
        }
        Ok(())
    }

    /// Branch pattern of every kink-bearing op (leaky_relu inputs and
    /// mean_abs_diff differences). Finite-difference checks compare the
    /// patterns of the two perturbed evaluations and discard coordinates whose
    /// perturbation segment crosses a kink, where the difference quotient does
    /// not approximate the derivative.
    pub fn kink_signature(&self) -> Vec<bool> {
        let mut sig = Vec::new();
        for node in &self.nodes {
            match &node.op {
                OpKind::LeakyRelu { .. } => {
                    sig.extend(self.nodes[node.inputs[0]].value.data().iter().map(|&v| v >= 0.0));
                }
                OpKind::MeanAbsDiff => {
                    let a = self.nodes[node.inputs[0]].value.data();
                    let b = self.nodes[node.inputs[1]].value.data();
                    sig.extend(a.iter().zip(b).map(|(x, y)| x >= y));
                }
                _ => {}
            }
        }
        sig
    }

    /// Reverse sweep populating gradients of every differentiable node
    /// reachable from the scalar `loss`.
    pub fn backward(&mut self, loss: NodeId) -> Result<()> {
        if self.backward_done {
            return Err(Error::BackwardTwice);
        }
        let lv = &self.nodes[loss].value;
        if !lv.is_scalar() {
            return Err(Error::NonScalarLoss { shape: lv.shape().to_vec() });
        }
        self.backward_done = true;
        self.grads[loss] = Some(vec![1.0]);

        for id in (0..=loss).rev() {
            if self.grads[id].is_none() || !self.nodes[id].needs_grad {
                continue;
            }
            let grad = self.grads[id].take().unwrap();
            if grad.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFiniteGrad {
                    node: id,
                    op: self.nodes[id].op.name().to_string(),
                });
            }
            self.propagate(id, &grad)?;
            self.grads[id] = Some(grad);
        }
        Ok(())
    }

    fn ensure_grad(grads: &mut [Option<Vec<f32>>], id: NodeId, len: usize) -> &mut Vec<f32> {
        grads[id].get_or_insert_with(|| vec![0.0; len])
    }

    fn propagate(&mut self, id: NodeId, dy: &[f32]) -> Result<()> {
        let (head, _) = self.grads.split_at_mut(id);
        let node = &self.nodes[id];
        let want = |inputs: &[NodeId], i: usize| self.nodes[inputs[i]].needs_grad;

        match &node.op {
            OpKind::Leaf { .. } => {}
            OpKind::Conv2d { stride, pad } => {
                let (x, w) = (node.inputs[0], node.inputs[1]);
                let xv = &self.nodes[x].value;
                let wv = &self.nodes[w].value;
                let mut dx = vec![0.0f32; xv.len()];
                let mut dw = vec![0.0f32; wv.len()];
                conv::conv2d_backward(xv, wv, dy, *stride, *pad, &mut dx, &mut dw)?;
                if want(&node.inputs, 0) {
                    accumulate(Self::ensure_grad(head, x, xv.len()), &dx);
                }
                if want(&node.inputs, 1) {
                    accumulate(Self::ensure_grad(head, w, wv.len()), &dw);
                }
            }
            OpKind::ConvTranspose2d { stride, pad } => {
                let (x, w) = (node.inputs[0], node.inputs[1]);
                let xv = &self.nodes[x].value;
                let wv = &self.nodes[w].value;
                let mut dx = vec![0.0f32; xv.len()];
                let mut dw = vec![0.0f32; wv.len()];
                conv::conv2d_transpose_backward(xv, wv, dy, *stride, *pad, &mut dx, &mut dw)?;
                if want(&node.inputs, 0) {
                    accumulate(Self::ensure_grad(head, x, xv.len()), &dx);
                }
                if want(&node.inputs, 1) {
                    accumulate(Self::ensure_grad(head, w, wv.len()), &dw);
                }
            }
            OpKind::Matmul => {
                let (x, w) = (node.inputs[0], node.inputs[1]);
                let xv = &self.nodes[x].value;
                let wv = &self.nodes[w].value;
                let (n, i) = (xv.shape()[0], xv.shape()[1]);
                let o = wv.shape()[1];
                if want(&node.inputs, 0) {
                    let mut dx = vec![0.0f32; n * i];
                    conv::gemm(false, true, n, o, i, 1.0, dy, wv.data(), 0.0, &mut dx);
                    accumulate(Self::ensure_grad(head, x, n * i), &dx);
                }
                if want(&node.inputs, 1) {
                    let mut dw = vec![0.0f32; i * o];
                    conv::gemm(true, false, i, n, o, 1.0, xv.data(), dy, 0.0, &mut dw);
                    accumulate(Self::ensure_grad(head, w, i * o), &dw);
                }
            }
            OpKind::AddRowBias => {
                let (x, b) = (node.inputs[0], node.inputs[1]);
                let o = self.nodes[b].value.len();
                if want(&node.inputs, 0) {
                    accumulate(Self::ensure_grad(head, x, dy.len()), dy);
                }
                if want(&node.inputs, 1) {
                    let db = Self::ensure_grad(head, b, o);
                    for row in dy.chunks(o) {
                        for (d, g) in db.iter_mut().zip(row) {
                            *d += g;
                        }
                    }
                }
            }
            OpKind::AddChanBias => {
                let (x, b) = (node.inputs[0], node.inputs[1]);
                let shape = self.nodes[x].value.shape();
                let (c, hw) = (shape[1], shape[2] * shape[3]);
                if want(&node.inputs, 0) {
                    accumulate(Self::ensure_grad(head, x, dy.len()), dy);
                }
                if want(&node.inputs, 1) {
                    let db = Self::ensure_grad(head, b, c);
                    for sample in dy.chunks(c * hw) {
                        for (ci, plane) in sample.chunks(hw).enumerate() {
                            db[ci] += plane.iter().sum::<f32>();
                        }
                    }
                }
            }
            OpKind::LeakyRelu { slope } => {
                let x = node.inputs[0];
                if want(&node.inputs, 0) {
                    let xv = self.nodes[x].value.data();
                    let dx = Self::ensure_grad(head, x, dy.len());
                    for ((d, g), &v) in dx.iter_mut().zip(dy).zip(xv) {
                        *d += if v >= 0.0 { *g } else { slope * g };
                    }
                }
            }
            OpKind::Add => {
                for i in 0..2 {
                    if want(&node.inputs, i) {
                        accumulate(Self::ensure_grad(head, node.inputs[i], dy.len()), dy);
                    }
                }
            }
            OpKind::Mul => {
                let (a, b) = (node.inputs[0], node.inputs[1]);
                if want(&node.inputs, 0) {
                    let bv = self.nodes[b].value.data();
                    let da = Self::ensure_grad(head, a, dy.len());
                    for ((d, g), v) in da.iter_mut().zip(dy).zip(bv) {
                        *d += g * v;
                    }
                }
                if want(&node.inputs, 1) {
                    let av = self.nodes[a].value.data();
                    let db = Self::ensure_grad(head, b, dy.len());
                    for ((d, g), v) in db.iter_mut().zip(dy).zip(av) {
                        *d += g * v;
                    }
                }
            }
            OpKind::Scale { factor } => {
                let x = node.inputs[0];
                if want(&node.inputs, 0) {
                    let dx = Self::ensure_grad(head, x, dy.len());
                    for (d, g) in dx.iter_mut().zip(dy) {
                        *d += factor * g;
                    }
                }
            }
            OpKind::Reshape => {
                let x = node.inputs[0];
                if want(&node.inputs, 0) {
                    accumulate(Self::ensure_grad(head, x, dy.len()), dy);
                }
            }
            OpKind::BlockMix { blocks, classes } => {
                let (a, b) = (node.inputs[0], node.inputs[1]);
                let d = self.nodes[a].value.shape()[1];
                if want(&node.inputs, 0) {
                    let da = Self::ensure_grad(head, a, dy.len());
                    for (i, &c) in classes.iter().enumerate() {
                        let (off, size) = blocks[c];
                        for col in 0..d {
                            if col < off || col >= off + size {
                                da[i * d + col] += dy[i * d + col];
                            }
                        }
                    }
                }
                if want(&node.inputs, 1) {
                    let db = Self::ensure_grad(head, b, dy.len());
                    for (i, &c) in classes.iter().enumerate() {
                        let (off, size) = blocks[c];
                        for col in off..off + size {
                            db[i * d + col] += dy[i * d + col];
                        }
                    }
                }
            }
            OpKind::MeanAbsDiff => {
                let (a, b) = (node.inputs[0], node.inputs[1]);
                let av = self.nodes[a].value.data();
                let bv = self.nodes[b].value.data();
                let g = dy[0] / av.len() as f32;
                if want(&node.inputs, 0) {
                    let da = Self::ensure_grad(head, a, av.len());
                    for ((d, x), y) in da.iter_mut().zip(av).zip(bv) {
                        *d += g * sign(x - y);
                    }
                }
                if want(&node.inputs, 1) {
                    let db = Self::ensure_grad(head, b, bv.len());
                    for ((d, x), y) in db.iter_mut().zip(av).zip(bv) {
                        *d -= g * sign(x - y);
                    }
                }
            }
            OpKind::SoftmaxCrossEntropy { labels } => {
                let x = node.inputs[0];
                if want(&node.inputs, 0) {
                    let xv = self.nodes[x].value.data();
                    let k = self.nodes[x].value.shape()[1];
                    let n = labels.len();
                    let g = dy[0] / n as f32;
                    let dx = Self::ensure_grad(head, x, xv.len());
                    for (row, &label) in (0..n).zip(labels) {
                        let logits = &xv[row * k..(row + 1) * k];
                        let maxv = logits.iter().cloned().fold(f32::NEG_INFINITY, f32::max);
                        let denom: f32 = logits.iter().map(|v| (v - maxv).exp()).sum();
                        for (col, &v) in logits.iter().enumerate() {
                            let p = (v - maxv).exp() / denom;
                            let onehot = if col == label { 1.0 } else { 0.0 };
                            dx[row * k + col] += g * (p - onehot);
                        }
                    }
                }
            }
            OpKind::SumAll => {
                let x = node.inputs[0];
                if want(&node.inputs, 0) {
                    let len = self.nodes[x].value.len();
                    let dx = Self::ensure_grad(head, x, len);
                    for d in dx.iter_mut() {
                        *d += dy[0];
                    }
                }
            }
        }
        Ok(())
    }
}

fn accumulate(dst: &mut [f32], src: &[f32]) {
    for (d, s) in dst.iter_mut().zip(src) {
        *d += s;
    }
}

fn sign(v: f32) -> f32 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sum_of_squares_gradient() {
        let mut t = Tape::new();
        let x = t.var(Tensor::new(vec![3], vec![1.0, 2.0, 3.0]).unwrap());
        let sq = t.mul(x, x).unwrap();
        let loss = t.sum_all(sq).unwrap();
        t.backward(loss).unwrap();
        assert_eq!(t.grad(x).unwrap(), &[2.0, 4.0, 6.0]);
    }

    #[test]
    fn l1_gradient_is_scaled_sign_of_difference() {
        let mut t = Tape::new();
        let x = t.var(Tensor::new(vec![4], vec![1.0, -2.0, 0.5, 0.5]).unwrap());
        let y = t.leaf(Tensor::new(vec![4], vec![0.0, 0.0, 1.5, 0.5]).unwrap());
        let loss = t.mean_abs_diff(x, y).unwrap();
        t.backward(loss).unwrap();
        let g = t.grad(x).unwrap();
        let signs: Vec<f32> = g.iter().map(|v| v * 4.0).collect();
        assert_eq!(signs, vec![1.0, -1.0, -1.0, 0.0]);
    }

    #[test]
    fn double_backward_rejected() {
        let mut t = Tape::new();
        let x = t.var(Tensor::scalar(2.0));
        let loss = t.sum_all(x).unwrap();
        t.backward(loss).unwrap();
        assert!(matches!(t.backward(loss), Err(Error::BackwardTwice)));
    }

    #[test]
    fn non_scalar_loss_rejected() {
        let mut t = Tape::new();
        let x = t.var(Tensor::zeros(&[2]));
        assert!(matches!(
            t.backward(x),
            Err(Error::NonScalarLoss { .. })
        ));
    }

    #[test]
    fn non_finite_forward_names_node() {
        let mut t = Tape::new();
        let x = t.var(Tensor::new(vec![1], vec![3.0e38]).unwrap());
        let doubled = t.scale(x, 2.0);
        match doubled {
            Err(Error::NonFinite { op, .. }) => assert_eq!(op, "scale"),
            other => panic!("expected NonFinite, got {other:?}"),
        }
    }

    #[test]
    fn dense_identity_and_hand_value() {
        let mut t = Tape::new();
        let x = t.var(Tensor::new(vec![2, 2], vec![1.0, 2.0, 3.0, 4.0]).unwrap());
        let eye = t.leaf(Tensor::new(vec![2, 2], vec![1.0, 0.0, 0.0, 1.0]).unwrap());
        let zero = t.leaf(Tensor::zeros(&[2]));
        let y = t.matmul(x, eye).unwrap();
        let y = t.add_row_bias(y, zero).unwrap();
        assert_eq!(t.value(y).data(), t.value(x).data());

        let x2 = t.var(Tensor::new(vec![1, 2], vec![1.0, 2.0]).unwrap());
        let w = t.leaf(Tensor::new(vec![2, 1], vec![1.0, 1.0]).unwrap());
        let b = t.leaf(Tensor::zeros(&[1]));
        let y2 = t.matmul(x2, w).unwrap();
        let y2 = t.add_row_bias(y2, b).unwrap();
        assert_eq!(t.value(y2).data(), &[3.0]);
    }

    #[test]
    fn block_mix_swaps_requested_block_only() {
        let mut t = Tape::new();
        let a = t.var(Tensor::new(vec![1, 4], vec![1.0, 2.0, 3.0, 4.0]).unwrap());
        let b = t.var(Tensor::new(vec![1, 4], vec![5.0, 6.0, 7.0, 8.0]).unwrap());
        let blocks = [(0usize, 2usize), (2, 2)];
        let ab = t.block_mix(a, b, &blocks, &[1]).unwrap();
        let ba = t.block_mix(b, a, &blocks, &[1]).unwrap();
        assert_eq!(t.value(ab).data(), &[1.0, 2.0, 7.0, 8.0]);
        assert_eq!(t.value(ba).data(), &[5.0, 6.0, 3.0, 4.0]);
    }

    #[test]
    fn cross_entropy_at_uniform_logits_is_ln_k() {
        let mut t = Tape::new();
        let logits = t.var(Tensor::zeros(&[2, 5]));
        let loss = t.softmax_cross_entropy(logits, &[0, 3]).unwrap();
        let expected = (5.0f32).ln();
        assert!((t.value(loss).item() - expected).abs() < 1e-6);
    }
}

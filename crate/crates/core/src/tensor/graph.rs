use std::sync::Arc;

use super::{gemm, gemm_at, gemm_bt, ParamId, ParamSet, Tensor};
use crate::error::{Error, Result};

/// Handle to a value recorded on a [`Graph`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct NodeId(usize);

/// Fixed linear operator applied row-major to a whole tensor, with its adjoint.
/// Used to place non-differentiated samples (e.g. a channel realization) in
/// the middle of a training graph.
pub trait LinearMap: Send + Sync {
    fn apply(&self, input: &[f64]) -> Vec<f64>;
    fn adjoint(&self, grad_out: &[f64]) -> Vec<f64>;
}

enum Op {
    Leaf,
    Param(ParamId),
    MatMul(NodeId, NodeId),
    AddBias(NodeId, NodeId),
    Add(NodeId, NodeId),
    Scale(NodeId, f64),
    Relu(NodeId),
    Sigmoid(NodeId),
    Clamp01(NodeId),
    LayerNorm {
        x: NodeId,
        gain: NodeId,
        bias: NodeId,
        xhat: Vec<f64>,
        inv_std: Vec<f64>,
    },
    Attention {
        q: NodeId,
        k: NodeId,
        v: NodeId,
        seq: usize,
        heads: usize,
        probs: Vec<f64>,
    },
    Gather {
        table: NodeId,
        ids: Vec<usize>,
    },
    MeanPool {
        x: NodeId,
        group: usize,
    },
    PowerNormalize {
        x: NodeId,
        group: usize,
        inv_scale: Vec<f64>,
    },
    Linear {
        x: NodeId,
        map: Arc<dyn LinearMap>,
    },
    SoftmaxCrossEntropy {
        logits: NodeId,
        targets: Vec<usize>,
        probs: Vec<f64>,
    },
    BceWithLogits {
        logits: NodeId,
        labels: Vec<f64>,
    },
    Bce {
        probs: NodeId,
        labels: Vec<f64>,
    },
    Mse {
        x: NodeId,
        target: Tensor,
    },
}

struct Node {
    value: Tensor,
    op: Op,
}

/// Reverse-mode tape. Every operation evaluates eagerly and records what the
/// backward pass needs.
#[derive(Default)]
pub struct Graph {
    nodes: Vec<Node>,
}

/// Binary cross-entropy probabilities are clipped into `[EPS, 1 - EPS]`.
pub const BCE_EPS: f64 = 1e-12;

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

impl Graph {
    pub fn new() -> Self {
        Self::default()
    }

    fn push(&mut self, value: Tensor, op: Op) -> NodeId {
        self.nodes.push(Node { value, op });
        NodeId(self.nodes.len() - 1)
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

    pub fn constant(&mut self, value: Tensor) -> NodeId {
        self.push(value, Op::Leaf)
    }

    pub fn param(&mut self, params: &ParamSet, id: ParamId) -> NodeId {
        self.push(params.value(id).clone(), Op::Param(id))
    }

    fn dims2(&self, id: NodeId) -> (usize, usize) {
        let t = self.value(id);
        (t.rows(), t.cols())
    }

    pub fn matmul(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        let (n, k) = self.dims2(a);
        let (kb, m) = self.dims2(b);
        if k != kb || self.value(b).shape().len() != 2 {
            return Err(Error::Dimension(format!(
                "matmul of [{n}x{k}] by {:?}",
                self.value(b).shape()
            )));
        }
        let mut out = vec![0.0; n * m];
        gemm(n, k, m, self.value(a).data(), self.value(b).data(), &mut out, false);
        Ok(self.push(Tensor { shape: vec![n, m], data: out }, Op::MatMul(a, b)))
    }

    pub fn add_bias(&mut self, x: NodeId, bias: NodeId) -> Result<NodeId> {
        let (n, m) = self.dims2(x);
        if self.value(bias).len() != m {
            return Err(Error::Dimension(format!(
                "bias of length {} for {m} columns",
                self.value(bias).len()
            )));
        }
        let mut out = self.value(x).clone();
        let b = self.value(bias).data();
        for r in 0..n {
            for (o, bv) in out.data[r * m..(r + 1) * m].iter_mut().zip(b) {
                *o += bv;
            }
        }
        Ok(self.push(out, Op::AddBias(x, bias)))
    }

    pub fn add(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        if self.value(a).shape() != self.value(b).shape() {
            return Err(Error::Dimension(format!(
                "add of {:?} and {:?}",
                self.value(a).shape(),
                self.value(b).shape()
            )));
        }
        let mut out = self.value(a).clone();
        for (o, v) in out.data.iter_mut().zip(self.value(b).data()) {
            *o += v;
        }
        Ok(self.push(out, Op::Add(a, b)))
    }

    pub fn scale(&mut self, x: NodeId, s: f64) -> NodeId {
        let out = self.value(x).scale(s);
        self.push(out, Op::Scale(x, s))
    }

    pub fn relu(&mut self, x: NodeId) -> NodeId {
        let mut out = self.value(x).clone();
        out.data.iter_mut().for_each(|v| *v = v.max(0.0));
        self.push(out, Op::Relu(x))
    }

    pub fn sigmoid(&mut self, x: NodeId) -> NodeId {
        let mut out = self.value(x).clone();
        out.data.iter_mut().for_each(|v| *v = sigmoid(*v));
        self.push(out, Op::Sigmoid(x))
    }

    pub fn clamp01(&mut self, x: NodeId) -> NodeId {
        let mut out = self.value(x).clone();
        out.data.iter_mut().for_each(|v| *v = v.clamp(0.0, 1.0));
        self.push(out, Op::Clamp01(x))
    }

    /// Row-wise layer normalization with learned gain and bias.
    pub fn layer_norm(&mut self, x: NodeId, gain: NodeId, bias: NodeId, eps: f64) -> Result<NodeId> {
        let (n, m) = self.dims2(x);
        if self.value(gain).len() != m || self.value(bias).len() != m {
            return Err(Error::Dimension("layer norm affine width".into()));
        }
        let xv = self.value(x).data();
        let g = self.value(gain).data();
        let b = self.value(bias).data();
        let mut xhat = vec![0.0; n * m];
        let mut inv_std = vec![0.0; n];
        let mut out = vec![0.0; n * m];
        for r in 0..n {
            let row = &xv[r * m..(r + 1) * m];
            let mean = row.iter().sum::<f64>() / m as f64;
            let var = row.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / m as f64;
            let inv = 1.0 / (var + eps).sqrt();
            inv_std[r] = inv;
            for c in 0..m {
                let h = (row[c] - mean) * inv;
                xhat[r * m + c] = h;
                out[r * m + c] = h * g[c] + b[c];
            }
        }
        let shape = self.value(x).shape().to_vec();
        Ok(self.push(
            Tensor { shape, data: out },
            Op::LayerNorm { x, gain, bias, xhat, inv_std },
        ))
    }

    /// Scaled dot-product attention applied independently to each block of
    /// `seq` consecutive rows, with `heads` column groups.
    pub fn attention(&mut self, q: NodeId, k: NodeId, v: NodeId, seq: usize, heads: usize) -> Result<NodeId> {
        let (n, d) = self.dims2(q);
        if self.dims2(k) != (n, d) || self.dims2(v) != (n, d) {
            return Err(Error::Dimension("attention operands differ in shape".into()));
        }
        if heads == 0 || d % heads != 0 {
            return Err(Error::Config(format!("width {d} is not divisible by {heads} heads")));
        }
        if seq == 0 || n % seq != 0 {
            return Err(Error::Dimension(format!("{n} rows do not split into sequences of {seq}")));
        }
        let dh = d / heads;
        let scale = 1.0 / (dh as f64).sqrt();
        let batches = n / seq;
        let (qv, kv, vv) = (self.value(q).data(), self.value(k).data(), self.value(v).data());
        let mut probs = vec![0.0; batches * heads * seq * seq];
        let mut out = vec![0.0; n * d];
        for b in 0..batches {
            for h in 0..heads {
                let p = &mut probs[(b * heads + h) * seq * seq..(b * heads + h + 1) * seq * seq];
                for i in 0..seq {
                    let qi = &qv[(b * seq + i) * d + h * dh..(b * seq + i) * d + (h + 1) * dh];
                    let row = &mut p[i * seq..(i + 1) * seq];
                    let mut max = f64::NEG_INFINITY;
                    for (j, s) in row.iter_mut().enumerate() {
                        let kj = &kv[(b * seq + j) * d + h * dh..(b * seq + j) * d + (h + 1) * dh];
                        *s = qi.iter().zip(kj).map(|(a, c)| a * c).sum::<f64>() * scale;
                        max = max.max(*s);
                    }
                    let mut sum = 0.0;
                    for s in row.iter_mut() {
                        *s = (*s - max).exp();
                        sum += *s;
                    }
                    for s in row.iter_mut() {
                        *s /= sum;
                    }
                    let oi = &mut out[(b * seq + i) * d + h * dh..(b * seq + i) * d + (h + 1) * dh];
                    for (j, &pj) in row.iter().enumerate() {
                        let vj = &vv[(b * seq + j) * d + h * dh..(b * seq + j) * d + (h + 1) * dh];
                        for (o, x) in oi.iter_mut().zip(vj) {
                            *o += pj * x;
                        }
                    }
                }
            }
        }
        Ok(self.push(
            Tensor { shape: vec![n, d], data: out },
            Op::Attention { q, k, v, seq, heads, probs },
        ))
    }

    /// Row lookup: `out[i] = table[ids[i]]`.
    pub fn gather(&mut self, table: NodeId, ids: &[usize]) -> Result<NodeId> {
        let (w, d) = self.dims2(table);
        if let Some(&bad) = ids.iter().find(|&&i| i >= w) {
            return Err(Error::InvalidId { id: bad, size: w });
        }
        let t = self.value(table).data();
        let mut out = Vec::with_capacity(ids.len() * d);
        for &i in ids {
            out.extend_from_slice(&t[i * d..(i + 1) * d]);
        }
        Ok(self.push(
            Tensor { shape: vec![ids.len(), d], data: out },
            Op::Gather { table, ids: ids.to_vec() },
        ))
    }

    /// Average over each block of `group` consecutive rows.
    pub fn mean_pool(&mut self, x: NodeId, group: usize) -> Result<NodeId> {
        let (n, d) = self.dims2(x);
        if group == 0 || n % group != 0 {
            return Err(Error::Dimension(format!("{n} rows do not pool by {group}")));
        }
        let xv = self.value(x).data();
        let mut out = vec![0.0; (n / group) * d];
        for r in 0..n {
            let o = &mut out[(r / group) * d..(r / group + 1) * d];
            for (a, b) in o.iter_mut().zip(&xv[r * d..(r + 1) * d]) {
                *a += b / group as f64;
            }
        }
        Ok(self.push(
            Tensor { shape: vec![n / group, d], data: out },
            Op::MeanPool { x, group },
        ))
    }

    /// Scales each block of `group` rows to unit mean-square entry.
    pub fn power_normalize(&mut self, x: NodeId, group: usize) -> Result<NodeId> {
        let (n, d) = self.dims2(x);
        if group == 0 || n % group != 0 {
            return Err(Error::Dimension(format!("{n} rows do not split into frames of {group}")));
        }
        let xv = self.value(x).data();
        let per = group * d;
        let mut inv_scale = Vec::with_capacity(n / group);
        let mut out = vec![0.0; n * d];
        for f in 0..n / group {
            let chunk = &xv[f * per..(f + 1) * per];
            let ms = chunk.iter().map(|v| v * v).sum::<f64>() / per as f64;
            if ms <= 0.0 || !ms.is_finite() {
                return Err(Error::Degenerate("frame has zero energy".into()));
            }
            let inv = 1.0 / ms.sqrt();
            inv_scale.push(inv);
            for (o, v) in out[f * per..(f + 1) * per].iter_mut().zip(chunk) {
                *o = v * inv;
            }
        }
        let shape = self.value(x).shape().to_vec();
        Ok(self.push(
            Tensor { shape, data: out },
            Op::PowerNormalize { x, group, inv_scale },
        ))
    }

    pub fn linear_map(&mut self, x: NodeId, map: Arc<dyn LinearMap>) -> Result<NodeId> {
        let out = map.apply(self.value(x).data());
        if out.len() != self.value(x).len() {
            return Err(Error::Dimension("linear map must preserve size".into()));
        }
        let shape = self.value(x).shape().to_vec();
        Ok(self.push(Tensor { shape, data: out }, Op::Linear { x, map }))
    }

    /// Mean token-level cross-entropy of row-wise softmax(logits) against targets.
    pub fn softmax_cross_entropy(&mut self, logits: NodeId, targets: &[usize]) -> Result<NodeId> {
        let (n, w) = self.dims2(logits);
        if targets.len() != n {
            return Err(Error::Dimension(format!("{} targets for {n} rows", targets.len())));
        }
        if let Some(&bad) = targets.iter().find(|&&t| t >= w) {
            return Err(Error::InvalidId { id: bad, size: w });
        }
        let mut probs = self.value(logits).data().to_vec();
        let mut loss = 0.0;
        for (r, &t) in targets.iter().enumerate() {
            let row = &mut probs[r * w..(r + 1) * w];
            softmax_in_place(row);
            loss -= row[t].max(f64::MIN_POSITIVE).ln();
        }
        loss /= n as f64;
        Ok(self.push(
            Tensor::scalar(loss),
            Op::SoftmaxCrossEntropy { logits, targets: targets.to_vec(), probs },
        ))
    }

    /// Mean binary cross-entropy of sigmoid(logits) against 0/1 labels.
    pub fn bce_with_logits(&mut self, logits: NodeId, labels: &[f64]) -> Result<NodeId> {
        let z = self.value(logits).data();
        if z.len() != labels.len() {
            return Err(Error::Dimension(format!("{} labels for {} logits", labels.len(), z.len())));
        }
        let loss = z
            .iter()
            .zip(labels)
            .map(|(&z, &c)| softplus(z) - c * z)
            .sum::<f64>()
            / z.len() as f64;
        Ok(self.push(
            Tensor::scalar(loss),
            Op::BceWithLogits { logits, labels: labels.to_vec() },
        ))
    }

    /// Mean binary cross-entropy on probabilities clipped to `[BCE_EPS, 1 - BCE_EPS]`.
    pub fn bce(&mut self, probs: NodeId, labels: &[f64]) -> Result<NodeId> {
        let p = self.value(probs).data();
        if p.len() != labels.len() {
            return Err(Error::Dimension(format!("{} labels for {} outputs", labels.len(), p.len())));
        }
        let loss = -p
            .iter()
            .zip(labels)
            .map(|(&p, &c)| {
                let p = p.clamp(BCE_EPS, 1.0 - BCE_EPS);
                c * p.ln() + (1.0 - c) * (1.0 - p).ln()
            })
            .sum::<f64>()
            / p.len() as f64;
        Ok(self.push(Tensor::scalar(loss), Op::Bce { probs, labels: labels.to_vec() }))
    }

    /// Mean over rows of the squared Euclidean row distance to `target`.
    pub fn mse(&mut self, x: NodeId, target: Tensor) -> Result<NodeId> {
        if self.value(x).shape() != target.shape() {
            return Err(Error::Dimension(format!(
                "mse of {:?} against {:?}",
                self.value(x).shape(),
                target.shape()
            )));
        }
        let rows = self.value(x).rows() as f64;
        let loss = self
            .value(x)
            .data()
            .iter()
            .zip(target.data())
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            / rows;
        Ok(self.push(Tensor::scalar(loss), Op::Mse { x, target }))
    }

    /// Back-propagates from the scalar `loss`, accumulating `∂loss/∂value`
    /// into the gradient of every parameter that took part.
    pub fn backward(&self, loss: NodeId, params: &mut ParamSet) -> Result<()> {
        if self.nodes.is_empty() || loss.0 >= self.nodes.len() {
            return Err(Error::State("no recorded graph for this loss".into()));
        }
        let lv = self.value(loss);
        if lv.len() != 1 {
            return Err(Error::State(format!("loss must be scalar, got shape {:?}", lv.shape())));
        }
        if !lv.data[0].is_finite() {
            return Err(Error::Numeric(format!("non-finite loss {}", lv.data[0])));
        }
        let mut grads: Vec<Option<Vec<f64>>> = (0..=loss.0).map(|_| None).collect();
        grads[loss.0] = Some(vec![1.0]);

        for idx in (0..=loss.0).rev() {
            let Some(g) = grads[idx].take() else { continue };
            let node = &self.nodes[idx];
            match &node.op {
                Op::Leaf => {}
                Op::Param(pid) => {
                    let pg = params.get_mut(*pid).grad.data_mut();
                    for (a, b) in pg.iter_mut().zip(&g) {
                        *a += b;
                    }
                }
                Op::MatMul(a, b) => {
                    let (n, k) = self.dims2(*a);
                    let m = self.value(*b).cols();
                    let mut ga = vec![0.0; n * k];
                    gemm_bt(n, m, k, &g, self.value(*b).data(), &mut ga, false);
                    let mut gb = vec![0.0; k * m];
                    gemm_at(n, k, m, self.value(*a).data(), &g, &mut gb, false);
                    accumulate(&mut grads, *a, ga);
                    accumulate(&mut grads, *b, gb);
                }
                Op::AddBias(x, b) => {
                    let m = self.value(*b).len();
                    let mut gb = vec![0.0; m];
                    for row in g.chunks(m) {
                        for (a, v) in gb.iter_mut().zip(row) {
                            *a += v;
                        }
                    }
                    accumulate(&mut grads, *b, gb);
                    accumulate(&mut grads, *x, g);
                }
                Op::Add(a, b) => {
                    accumulate(&mut grads, *b, g.clone());
                    accumulate(&mut grads, *a, g);
                }
                Op::Scale(x, s) => {
                    accumulate(&mut grads, *x, g.iter().map(|v| v * s).collect());
                }
                Op::Relu(x) => {
                    let xv = self.value(*x).data();
                    let gx = g.iter().zip(xv).map(|(g, &x)| if x > 0.0 { *g } else { 0.0 }).collect();
                    accumulate(&mut grads, *x, gx);
                }
                Op::Sigmoid(x) => {
                    let y = node.value.data();
                    let gx = g.iter().zip(y).map(|(g, y)| g * y * (1.0 - y)).collect();
                    accumulate(&mut grads, *x, gx);
                }
                Op::Clamp01(x) => {
                    let xv = self.value(*x).data();
                    let gx = g
                        .iter()
                        .zip(xv)
                        .map(|(g, &x)| if x > 0.0 && x < 1.0 { *g } else { 0.0 })
                        .collect();
                    accumulate(&mut grads, *x, gx);
                }
                Op::LayerNorm { x, gain, bias, xhat, inv_std } => {
                    let m = self.value(*gain).len();
                    let gv = self.value(*gain).data();
                    let mut ggain = vec![0.0; m];
                    let mut gbias = vec![0.0; m];
                    let mut gx = vec![0.0; g.len()];
                    for (r, inv) in inv_std.iter().enumerate() {
                        let gr = &g[r * m..(r + 1) * m];
                        let hr = &xhat[r * m..(r + 1) * m];
                        let mut sum_d = 0.0;
                        let mut sum_dh = 0.0;
                        for c in 0..m {
                            ggain[c] += gr[c] * hr[c];
                            gbias[c] += gr[c];
                            let d = gr[c] * gv[c];
                            sum_d += d;
                            sum_dh += d * hr[c];
                        }
                        let mf = m as f64;
                        for c in 0..m {
                            let d = gr[c] * gv[c];
                            gx[r * m + c] = inv / mf * (mf * d - sum_d - hr[c] * sum_dh);
                        }
                    }
                    accumulate(&mut grads, *gain, ggain);
                    accumulate(&mut grads, *bias, gbias);
                    accumulate(&mut grads, *x, gx);
                }
                Op::Attention { q, k, v, seq, heads, probs } => {
                    let (seq, heads) = (*seq, *heads);
                    let (n, d) = self.dims2(*q);
                    let dh = d / heads;
                    let scale = 1.0 / (dh as f64).sqrt();
                    let (qv, kv, vv) = (self.value(*q).data(), self.value(*k).data(), self.value(*v).data());
                    let mut gq = vec![0.0; n * d];
                    let mut gk = vec![0.0; n * d];
                    let mut gv = vec![0.0; n * d];
                    let mut dp = vec![0.0; seq];
                    for b in 0..n / seq {
                        for h in 0..heads {
                            let p = &probs[(b * heads + h) * seq * seq..(b * heads + h + 1) * seq * seq];
                            let col = |row: usize| (b * seq + row) * d + h * dh;
                            for i in 0..seq {
                                let go = &g[col(i)..col(i) + dh];
                                let prow = &p[i * seq..(i + 1) * seq];
                                for j in 0..seq {
                                    let vj = &vv[col(j)..col(j) + dh];
                                    dp[j] = go.iter().zip(vj).map(|(a, b)| a * b).sum();
                                    let gvj = &mut gv[col(j)..col(j) + dh];
                                    for (a, o) in gvj.iter_mut().zip(go) {
                                        *a += prow[j] * o;
                                    }
                                }
                                let dot: f64 = prow.iter().zip(&dp).map(|(a, b)| a * b).sum();
                                for j in 0..seq {
                                    let ds = prow[j] * (dp[j] - dot) * scale;
                                    if ds == 0.0 {
                                        continue;
                                    }
                                    for c in 0..dh {
                                        gq[col(i) + c] += ds * kv[col(j) + c];
                                        gk[col(j) + c] += ds * qv[col(i) + c];
                                    }
                                }
                            }
                        }
                    }
                    accumulate(&mut grads, *q, gq);
                    accumulate(&mut grads, *k, gk);
                    accumulate(&mut grads, *v, gv);
                }
                Op::Gather { table, ids } => {
                    let (w, d) = self.dims2(*table);
                    let mut gt = vec![0.0; w * d];
                    for (r, &i) in ids.iter().enumerate() {
                        for c in 0..d {
                            gt[i * d + c] += g[r * d + c];
                        }
                    }
                    accumulate(&mut grads, *table, gt);
                }
                Op::MeanPool { x, group } => {
                    let (n, d) = self.dims2(*x);
                    let mut gx = vec![0.0; n * d];
                    for r in 0..n {
                        let src = &g[(r / group) * d..(r / group + 1) * d];
                        for (a, b) in gx[r * d..(r + 1) * d].iter_mut().zip(src) {
                            *a = b / *group as f64;
                        }
                    }
                    accumulate(&mut grads, *x, gx);
                }
                Op::PowerNormalize { x, group, inv_scale } => {
                    let d = self.value(*x).cols();
                    let per = group * d;
                    let y = node.value.data();
                    let mut gx = vec![0.0; g.len()];
                    for (f, inv) in inv_scale.iter().enumerate() {
                        let range = f * per..(f + 1) * per;
                        let dot: f64 = g[range.clone()].iter().zip(&y[range.clone()]).map(|(a, b)| a * b).sum();
                        let mean = dot / per as f64;
                        for i in range {
                            gx[i] = (g[i] - y[i] * mean) * inv;
                        }
                    }
                    accumulate(&mut grads, *x, gx);
                }
                Op::Linear { x, map } => {
                    accumulate(&mut grads, *x, map.adjoint(&g));
                }
                Op::SoftmaxCrossEntropy { logits, targets, probs } => {
                    let w = self.value(*logits).cols();
                    let n = targets.len() as f64;
                    let mut gl = probs.clone();
                    for (r, &t) in targets.iter().enumerate() {
                        gl[r * w + t] -= 1.0;
                    }
                    gl.iter_mut().for_each(|v| *v *= g[0] / n);
                    accumulate(&mut grads, *logits, gl);
                }
                Op::BceWithLogits { logits, labels } => {
                    let z = self.value(*logits).data();
                    let n = labels.len() as f64;
                    let gz = z.iter().zip(labels).map(|(&z, &c)| (sigmoid(z) - c) * g[0] / n).collect();
                    accumulate(&mut grads, *logits, gz);
                }
                Op::Bce { probs, labels } => {
                    let p = self.value(*probs).data();
                    let n = labels.len() as f64;
                    let gp = p
                        .iter()
                        .zip(labels)
                        .map(|(&p, &c)| {
                            if !(BCE_EPS..=1.0 - BCE_EPS).contains(&p) {
                                0.0
                            } else {
                                (-c / p + (1.0 - c) / (1.0 - p)) * g[0] / n
                            }
                        })
                        .collect();
                    accumulate(&mut grads, *probs, gp);
                }
                Op::Mse { x, target } => {
                    let rows = self.value(*x).rows() as f64;
                    let gx = self
                        .value(*x)
                        .data()
                        .iter()
                        .zip(target.data())
                        .map(|(a, b)| 2.0 * (a - b) * g[0] / rows)
                        .collect();
                    accumulate(&mut grads, *x, gx);
                }
            }
        }
        Ok(())
    }
}

fn accumulate(grads: &mut [Option<Vec<f64>>], id: NodeId, g: Vec<f64>) {
    match &mut grads[id.0] {
        Some(existing) => {
            for (a, b) in existing.iter_mut().zip(&g) {
                *a += b;
            }
        }
        slot @ None => *slot = Some(g),
    }
}

pub(crate) fn softmax_in_place(row: &mut [f64]) {
    let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for v in row.iter_mut() {
        *v = (*v - max).exp();
        sum += *v;
    }
    for v in row.iter_mut() {
        *v /= sum;
    }
}

use rand::Rng;

use super::graph::softmax_in_place;
use super::{gemm, Graph, NodeId, ParamId, ParamSet, Tensor};
use crate::error::{Error, Result};

/// `input[N×I] · weights[I×O] + bias[O]` without recording a graph.
pub fn dense_forward(input: &Tensor, weights: &Tensor, bias: &Tensor) -> Result<Tensor> {
    let (n, i) = (input.rows(), input.cols());
    if weights.shape().len() != 2 || weights.shape()[0] != i {
        return Err(Error::Dimension(format!(
            "input width {i} against weights {:?}",
            weights.shape()
        )));
    }
    let o = weights.cols();
    if bias.len() != o {
        return Err(Error::Dimension(format!("bias length {} for {o} outputs", bias.len())));
    }
    let mut out = vec![0.0; n * o];
    gemm(n, i, o, input.data(), weights.data(), &mut out, false);
    for row in out.chunks_mut(o) {
        for (v, b) in row.iter_mut().zip(bias.data()) {
            *v += b;
        }
    }
    Tensor::new(vec![n, o], out)
}

/// Softmax over the last axis, stabilized by max subtraction.
pub fn softmax(logits: &Tensor) -> Tensor {
    let mut out = logits.clone();
    let c = out.cols();
    for row in out.data_mut().chunks_mut(c) {
        softmax_in_place(row);
    }
    out
}

/// Scaled dot-product attention over one sequence with `heads` heads,
/// operating on already-projected queries, keys and values. Head outputs are
/// concatenated along the feature axis.
pub fn multi_head_attention(queries: &Tensor, keys: &Tensor, values: &Tensor, heads: usize) -> Result<Tensor> {
    let mut g = Graph::new();
    let seq = queries.rows();
    let q = g.constant(queries.clone());
    let k = g.constant(keys.clone());
    let v = g.constant(values.clone());
    let out = g.attention(q, k, v, seq, heads)?;
    Ok(g.value(out).clone())
}

/// Fixed sinusoidal position codes, `[len × width]`.
pub fn sinusoidal_positions(len: usize, width: usize) -> Tensor {
    let mut data = vec![0.0; len * width];
    for pos in 0..len {
        for i in 0..width {
            let rate = 1.0 / 10000f64.powf((2 * (i / 2)) as f64 / width as f64);
            let angle = pos as f64 * rate;
            data[pos * width + i] = if i % 2 == 0 { angle.sin() } else { angle.cos() };
        }
    }
    Tensor::new(vec![len, width], data).expect("positive dims")
}

/// Fully connected layer.
#[derive(Clone, Debug)]
pub struct Dense {
    pub weight: ParamId,
    pub bias: ParamId,
    pub inputs: usize,
    pub outputs: usize,
}

impl Dense {
    pub fn new<R: Rng + ?Sized>(params: &mut ParamSet, name: &str, inputs: usize, outputs: usize, rng: &mut R) -> Self {
        let weight = params.add(format!("{name}.weight"), Tensor::xavier(inputs, outputs, rng));
        let bias = params.add(format!("{name}.bias"), Tensor::zeros(&[outputs]));
        Self { weight, bias, inputs, outputs }
    }

    pub fn forward(&self, g: &mut Graph, params: &ParamSet, x: NodeId) -> Result<NodeId> {
        let w = g.param(params, self.weight);
        let b = g.param(params, self.bias);
        let h = g.matmul(x, w)?;
        g.add_bias(h, b)
    }
}

#[derive(Clone, Debug)]
pub struct LayerNorm {
    pub gain: ParamId,
    pub bias: ParamId,
}

impl LayerNorm {
    pub const EPS: f64 = 1e-5;

    pub fn new(params: &mut ParamSet, name: &str, width: usize) -> Self {
        let gain = params.add(format!("{name}.gain"), Tensor::filled(&[width], 1.0));
        let bias = params.add(format!("{name}.bias"), Tensor::zeros(&[width]));
        Self { gain, bias }
    }

    pub fn forward(&self, g: &mut Graph, params: &ParamSet, x: NodeId) -> Result<NodeId> {
        let gain = g.param(params, self.gain);
        let bias = g.param(params, self.bias);
        g.layer_norm(x, gain, bias, Self::EPS)
    }
}

/// Pre-norm transformer block: `x + Attn(LN(x))`, then `x + FFN(LN(x))`
/// with a two-layer ReLU feed-forward.
#[derive(Clone, Debug)]
pub struct TransformerLayer {
    pub norm_attn: LayerNorm,
    pub query: Dense,
    pub key: Dense,
    pub value: Dense,
    pub out: Dense,
    pub norm_ff: LayerNorm,
    pub ff_in: Dense,
    pub ff_out: Dense,
    pub heads: usize,
    pub width: usize,
}

impl TransformerLayer {
    pub fn new<R: Rng + ?Sized>(
        params: &mut ParamSet,
        name: &str,
        width: usize,
        heads: usize,
        ff_width: usize,
        rng: &mut R,
    ) -> Result<Self> {
        if heads == 0 || !width.is_multiple_of(heads) {
            return Err(Error::Config(format!("width {width} is not divisible by {heads} heads")));
        }
        Ok(Self {
            norm_attn: LayerNorm::new(params, &format!("{name}.ln_attn"), width),
            query: Dense::new(params, &format!("{name}.q"), width, width, rng),
            key: Dense::new(params, &format!("{name}.k"), width, width, rng),
            value: Dense::new(params, &format!("{name}.v"), width, width, rng),
            out: Dense::new(params, &format!("{name}.o"), width, width, rng),
            norm_ff: LayerNorm::new(params, &format!("{name}.ln_ff"), width),
            ff_in: Dense::new(params, &format!("{name}.ff1"), width, ff_width, rng),
            ff_out: Dense::new(params, &format!("{name}.ff2"), ff_width, width, rng),
            heads,
            width,
        })
    }

    /// `x` holds one or more sequences of `seq` rows each, `width` columns.
    pub fn forward(&self, g: &mut Graph, params: &ParamSet, x: NodeId, seq: usize) -> Result<NodeId> {
        if g.value(x).cols() != self.width {
            return Err(Error::Dimension(format!(
                "transformer of width {} given {} columns",
                self.width,
                g.value(x).cols()
            )));
        }
        let h = self.norm_attn.forward(g, params, x)?;
        let q = self.query.forward(g, params, h)?;
        let k = self.key.forward(g, params, h)?;
        let v = self.value.forward(g, params, h)?;
        let a = g.attention(q, k, v, seq, self.heads)?;
        let a = self.out.forward(g, params, a)?;
        let x = g.add(x, a)?;

        let h = self.norm_ff.forward(g, params, x)?;
        let h = self.ff_in.forward(g, params, h)?;
        let h = g.relu(h);
        let h = self.ff_out.forward(g, params, h)?;
        g.add(x, h)
    }
}

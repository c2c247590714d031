//! Finite-difference checks of every differentiable layer over 50 random
//! shapes each. Each check returns the worst relative error it saw.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use semharq::channel::{sample_channel_with, BatchChannel, ChannelConfig};
use semharq::tensor::{gradient_check, Dense, Graph, LayerNorm, NodeId, ParamId, ParamSet, Tensor, TransformerLayer};
use semharq::Result;

const SHAPES: u64 = 50;
const STEP: f64 = 1e-5;
const TOLERANCE: f64 = 1e-3;

fn random(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> Tensor {
    let data = (0..rows * cols).map(|_| rng.gen_range(-1.0..1.0)).collect();
    Tensor::new(vec![rows, cols], data).unwrap()
}

/// MSE against a random probe, so the loss depends on every output entry.
fn readout(g: &mut Graph, x: NodeId, probe: &Tensor) -> Result<NodeId> {
    g.mse(x, probe.clone())
}

type Outcome = std::result::Result<f64, String>;

fn check<F>(label: &str, seed: u64, params: &mut ParamSet, loss: F) -> Outcome
where
    F: Fn(&ParamSet) -> Result<(Graph, NodeId)>,
{
    let report = gradient_check(params, loss, STEP, TOLERANCE).map_err(|e| format!("{label} seed {seed}: {e}"))?;
    if !report.passed {
        let worst: Vec<String> = report
            .params
            .iter()
            .filter(|p| !p.passed)
            .map(|p| format!("{} {:.2e}", p.name, p.max_rel_error))
            .collect();
        return Err(format!("{label} seed {seed}: {}", worst.join(", ")));
    }
    Ok(report.max_rel_error)
}

fn for_each_shape(mut body: impl FnMut(u64, &mut ChaCha8Rng) -> Outcome) -> Outcome {
    let mut worst = 0.0f64;
    for seed in 0..SHAPES {
        let mut rng = ChaCha8Rng::seed_from_u64(0x9e37_79b9 ^ seed);
        worst = worst.max(body(seed, &mut rng)?);
    }
    Ok(worst)
}

/// Puts a random input in the parameter set so its gradient is checked too.
fn input(params: &mut ParamSet, rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> ParamId {
    let x = random(rows, cols, rng);
    params.add("input", x)
}

pub fn dense() -> Outcome {
    for_each_shape(|seed, rng| {
        let (n, i, o) = (rng.gen_range(1..6), rng.gen_range(1..9), rng.gen_range(1..9));
        let mut ps = ParamSet::new();
        let x = input(&mut ps, n, i, rng);
        let d = Dense::new(&mut ps, "d", i, o, rng);
        ps.get_mut(d.bias).value = random(1, o, rng).reshape(vec![o]).unwrap();
        let probe = random(n, o, rng);
        check("dense", seed, &mut ps, |ps| {
            let mut g = Graph::new();
            let xi = g.param(ps, x);
            let y = d.forward(&mut g, ps, xi)?;
            let l = readout(&mut g, y, &probe)?;
            Ok((g, l))
        })
    })
}

pub fn layer_norm() -> Outcome {
    for_each_shape(|seed, rng| {
        let (n, w) = (rng.gen_range(1..6), rng.gen_range(2..10));
        let mut ps = ParamSet::new();
        let x = input(&mut ps, n, w, rng);
        let ln = LayerNorm::new(&mut ps, "ln", w);
        ps.get_mut(ln.gain).value = random(1, w, rng).reshape(vec![w]).unwrap();
        ps.get_mut(ln.bias).value = random(1, w, rng).reshape(vec![w]).unwrap();
        let probe = random(n, w, rng);
        check("layer_norm", seed, &mut ps, |ps| {
            let mut g = Graph::new();
            let xi = g.param(ps, x);
            let y = ln.forward(&mut g, ps, xi)?;
            let l = readout(&mut g, y, &probe)?;
            Ok((g, l))
        })
    })
}

pub fn multi_head_attention() -> Outcome {
    for_each_shape(|seed, rng| {
        let heads = rng.gen_range(1..4);
        let width = heads * rng.gen_range(1..4);
        let (seq, batch) = (rng.gen_range(1..6), rng.gen_range(1..3));
        let mut ps = ParamSet::new();
        let q = input(&mut ps, seq * batch, width, rng);
        let k = ps.add("k", random(seq * batch, width, rng));
        let v = ps.add("v", random(seq * batch, width, rng));
        let probe = random(seq * batch, width, rng);
        check("attention", seed, &mut ps, |ps| {
            let mut g = Graph::new();
            let (qi, ki, vi) = (g.param(ps, q), g.param(ps, k), g.param(ps, v));
            let y = g.attention(qi, ki, vi, seq, heads)?;
            let l = readout(&mut g, y, &probe)?;
            Ok((g, l))
        })
    })
}

pub fn transformer_layer() -> Outcome {
    for_each_shape(|seed, rng| {
        let heads = rng.gen_range(1..3);
        let width = heads * rng.gen_range(1..4);
        let ff = rng.gen_range(1..8);
        let (seq, batch) = (rng.gen_range(1..5), rng.gen_range(1..3));
        let mut ps = ParamSet::new();
        let x = input(&mut ps, seq * batch, width, rng);
        let layer = TransformerLayer::new(&mut ps, "t", width, heads, ff, rng).unwrap();
        // Zero biases would put width-1 layer norms exactly on the ReLU kink.
        for p in ps.iter_mut().filter(|p| p.name.ends_with(".bias")) {
            for v in p.value.data_mut() {
                *v = rng.gen_range(-0.5..0.5);
            }
        }
        let probe = random(seq * batch, width, rng);
        check("transformer", seed, &mut ps, |ps| {
            let mut g = Graph::new();
            let xi = g.param(ps, x);
            let y = layer.forward(&mut g, ps, xi, seq)?;
            let l = readout(&mut g, y, &probe)?;
            Ok((g, l))
        })
    })
}

pub fn embedding_gather() -> Outcome {
    for_each_shape(|seed, rng| {
        let (vocab, width, n) = (rng.gen_range(1..10), rng.gen_range(1..6), rng.gen_range(1..12));
        let ids: Vec<usize> = (0..n).map(|_| rng.gen_range(0..vocab)).collect();
        let mut ps = ParamSet::new();
        let table = input(&mut ps, vocab, width, rng);
        let probe = random(n, width, rng);
        check("gather", seed, &mut ps, |ps| {
            let mut g = Graph::new();
            let t = g.param(ps, table);
            let y = g.gather(t, &ids)?;
            let l = readout(&mut g, y, &probe)?;
            Ok((g, l))
        })
    })
}

pub fn activations() -> Outcome {
    for_each_shape(|seed, rng| {
        let (n, w) = (rng.gen_range(1..6), rng.gen_range(1..8));
        let mut ps = ParamSet::new();
        let x = input(&mut ps, n, w, rng);
        // Keep inputs off the ReLU and clamp kinks so central differences are exact.
        for v in ps.get_mut(x).value.data_mut() {
            if v.abs() < 0.05 {
                *v += 0.1;
            }
        }
        let probe = random(n, w, rng);
        check("relu/sigmoid/clamp", seed, &mut ps, |ps| {
            let mut g = Graph::new();
            let xi = g.param(ps, x);
            let r = g.relu(xi);
            let s = g.sigmoid(xi);
            let c = g.clamp01(xi);
            let rs = g.add(r, s)?;
            let y = g.add(rs, c)?;
            let l = readout(&mut g, y, &probe)?;
            Ok((g, l))
        })
    })
}

pub fn pooling_and_power_normalization() -> Outcome {
    for_each_shape(|seed, rng| {
        let group = rng.gen_range(1..5);
        let (n, w) = (group * rng.gen_range(1..4), rng.gen_range(1..6));
        let mut ps = ParamSet::new();
        let x = input(&mut ps, n, w, rng);
        let pooled_probe = random(n / group, w, rng);
        let probe = random(n, w, rng);
        let pooled = check("mean_pool", seed, &mut ps, |ps| {
            let mut g = Graph::new();
            let xi = g.param(ps, x);
            let y = g.mean_pool(xi, group)?;
            let l = readout(&mut g, y, &pooled_probe)?;
            Ok((g, l))
        })?;
        check("power_normalize", seed, &mut ps, |ps| {
            let mut g = Graph::new();
            let xi = g.param(ps, x);
            let y = g.power_normalize(xi, group)?;
            let l = readout(&mut g, y, &probe)?;
            Ok((g, l))
        })
        .map(|e| e.max(pooled))
    })
}

pub fn fading_channel_map() -> Outcome {
    for_each_shape(|seed, rng| {
        let frames = rng.gen_range(1..4);
        let symbols = rng.gen_range(1..6);
        let paths = rng.gen_range(1..4);
        let config = ChannelConfig {
            n_paths: paths,
            profile: vec![1.0 / paths as f64; paths],
            ..Default::default()
        };
        let realizations = (0..frames).map(|_| sample_channel_with(&config, symbols, rng).unwrap()).collect();
        let map = Arc::new(BatchChannel { realizations, frame_len: 2 * symbols });
        let mut ps = ParamSet::new();
        let x = input(&mut ps, frames, 2 * symbols, rng);
        let probe = random(frames, 2 * symbols, rng);
        check("channel", seed, &mut ps, |ps| {
            let mut g = Graph::new();
            let xi = g.param(ps, x);
            let y = g.linear_map(xi, map.clone())?;
            let l = readout(&mut g, y, &probe)?;
            Ok((g, l))
        })
    })
}

pub fn losses() -> Outcome {
    for_each_shape(|seed, rng| {
        let (n, w) = (rng.gen_range(1..6), rng.gen_range(2..8));
        let targets: Vec<usize> = (0..n).map(|_| rng.gen_range(0..w)).collect();
        let labels: Vec<f64> = (0..n).map(|_| f64::from(rng.gen_range(0..2u8))).collect();
        let mut ps = ParamSet::new();
        let logits = input(&mut ps, n, w, rng);
        let single = ps.add("single", random(n, 1, rng));
        let ce = check("softmax_cross_entropy", seed, &mut ps, |ps| {
            let mut g = Graph::new();
            let x = g.param(ps, logits);
            let l = g.softmax_cross_entropy(x, &targets)?;
            Ok((g, l))
        })?;
        let logits = check("bce_with_logits", seed, &mut ps, |ps| {
            let mut g = Graph::new();
            let x = g.param(ps, single);
            let l = g.bce_with_logits(x, &labels)?;
            Ok((g, l))
        })?;
        check("bce", seed, &mut ps, |ps| {
            let mut g = Graph::new();
            let x = g.param(ps, single);
            let p = g.sigmoid(x);
            let l = g.bce(p, &labels)?;
            Ok((g, l))
        })
        .map(|e| e.max(ce).max(logits))
    })
}

/// Every layer type with its check, in a fixed order.
pub type Check = fn() -> Outcome;

pub const LAYERS: [(&str, Check); 9] = [
    ("dense", dense),
    ("layer_norm", layer_norm),
    ("multi_head_attention", multi_head_attention),
    ("transformer_layer", transformer_layer),
    ("embedding_gather", embedding_gather),
    ("activations", activations),
    ("pooling_and_power_normalization", pooling_and_power_normalization),
    ("fading_channel_map", fading_channel_map),
    ("losses", losses),
];

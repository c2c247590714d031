//! Transformer semantic encoder and decoder with dense channel adaptation,
//! trained jointly through a sampled channel.

use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::channel::{noise_variance_from_snr, sample_channel_with, BatchChannel, ChannelConfig};
use crate::corpus::{Sentence, SynonymTable, Vocabulary};
use crate::error::{Error, Result};
use crate::tensor::{
    sinusoidal_positions, softmax, Adam, AdamConfig, Dense, Graph, LayerNorm, NodeId, ParamId, ParamSet,
    Tensor, TransformerLayer,
};

/// Channel-input (or channel-output) semantic representation, `L×V` reals.
#[derive(Clone, Debug, PartialEq)]
pub struct SemanticFrame {
    features: Tensor,
}

impl SemanticFrame {
    pub fn new(features: Tensor) -> Result<Self> {
        if features.shape().len() != 2 {
            return Err(Error::Dimension(format!("frame must be 2-D, got {:?}", features.shape())));
        }
        if !features.is_finite() {
            return Err(Error::Numeric("frame has non-finite entries".into()));
        }
        Ok(Self { features })
    }

    pub fn from_data(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        Self::new(Tensor::new(vec![rows, cols], data)?)
    }

    pub fn features(&self) -> &Tensor {
        &self.features
    }

    pub fn into_features(self) -> Tensor {
        self.features
    }

    pub fn positions(&self) -> usize {
        self.features.rows()
    }

    pub fn width(&self) -> usize {
        self.features.cols()
    }

    /// Mean squared entry.
    pub fn power(&self) -> f64 {
        self.features.data().iter().map(|v| v * v).sum::<f64>() / self.features.len() as f64
    }

    pub fn mse(&self, other: &SemanticFrame) -> f64 {
        self.features
            .data()
            .iter()
            .zip(other.features.data())
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            / self.features.len() as f64
    }
}

/// Scales a frame to unit mean-square entry.
pub fn power_normalize(frame: &SemanticFrame) -> Result<SemanticFrame> {
    let p = frame.power();
    if p <= 0.0 {
        return Err(Error::Degenerate("cannot normalize a zero-energy frame".into()));
    }
    SemanticFrame::new(frame.features.scale(1.0 / p.sqrt()))
}

/// Per-position probability vectors over the vocabulary, `L×W`.
#[derive(Clone, Debug, PartialEq)]
pub struct WordDistribution {
    probs: Tensor,
}

impl WordDistribution {
    /// Validates that every row is a probability vector (within 1e-9).
    pub fn new(probs: Tensor) -> Result<Self> {
        if probs.shape().len() != 2 {
            return Err(Error::Dimension(format!("distribution must be 2-D, got {:?}", probs.shape())));
        }
        for r in 0..probs.rows() {
            let row = probs.row(r);
            let sum: f64 = row.iter().sum();
            if row.iter().any(|&p| p.is_nan() || p < 0.0) || (sum - 1.0).abs() > 1e-9 {
                return Err(Error::Input(format!("row {r} is not a probability vector")));
            }
        }
        Ok(Self { probs })
    }

    pub(crate) fn new_unchecked(probs: Tensor) -> Self {
        Self { probs }
    }

    pub fn probs(&self) -> &Tensor {
        &self.probs
    }
}

/// Per-position argmax with ties going to the lowest token id. Trailing
/// padding determines the true length.
pub fn greedy_decode(dist: &WordDistribution) -> Sentence {
    let probs = dist.probs();
    let ids: Vec<usize> = (0..probs.rows())
        .map(|r| {
            let row = probs.row(r);
            let mut best = 0;
            for (i, &p) in row.iter().enumerate().skip(1) {
                if p > row[best] {
                    best = i;
                }
            }
            best
        })
        .collect();
    let true_length = ids
        .iter()
        .rposition(|&id| id != Vocabulary::PAD_ID)
        .map_or(0, |p| p + 1);
    Sentence { ids, true_length }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CodecConfig {
    pub vocab_size: usize,
    /// Maximum sentence length `L`.
    pub max_len: usize,
    /// Word embedding width `D`.
    pub embed_dim: usize,
    /// Channel symbols per position, in reals (`V`, even).
    pub channel_dim: usize,
    pub layers: usize,
    pub heads: usize,
    pub ff_dim: usize,
}

impl CodecConfig {
    pub fn validate(&self) -> Result<()> {
        if self.channel_dim == 0 || !self.channel_dim.is_multiple_of(2) {
            return Err(Error::Config(format!("channel width {} must be even and positive", self.channel_dim)));
        }
        if self.heads == 0 || !self.embed_dim.is_multiple_of(self.heads) {
            return Err(Error::Config(format!(
                "embedding width {} is not divisible by {} heads",
                self.embed_dim, self.heads
            )));
        }
        if self.vocab_size < 4 || self.max_len == 0 || self.layers == 0 || self.ff_dim == 0 {
            return Err(Error::Config(format!("degenerate codec dimensions {self:?}")));
        }
        Ok(())
    }
}

/// Semantic encoder `f_α` and decoder `g_β`.
#[derive(Clone, Debug)]
pub struct CodecModel {
    config: CodecConfig,
    params: ParamSet,
    embedding: ParamId,
    encoder: Vec<TransformerLayer>,
    encoder_norm: LayerNorm,
    encoder_head: Dense,
    decoder_head: Dense,
    decoder: Vec<TransformerLayer>,
    decoder_norm: LayerNorm,
    output: Dense,
    positions: Tensor,
}

impl CodecModel {
    pub fn new(config: CodecConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut params = ParamSet::new();
        let d = config.embed_dim;
        let embedding = params.add("embedding", Tensor::xavier(config.vocab_size, d, &mut rng));
        let encoder = (0..config.layers)
            .map(|i| TransformerLayer::new(&mut params, &format!("enc.{i}"), d, config.heads, config.ff_dim, &mut rng))
            .collect::<Result<Vec<_>>>()?;
        let encoder_norm = LayerNorm::new(&mut params, "enc.ln", d);
        let encoder_head = Dense::new(&mut params, "enc.head", d, config.channel_dim, &mut rng);
        let decoder_head = Dense::new(&mut params, "dec.head", config.channel_dim, d, &mut rng);
        let decoder = (0..config.layers)
            .map(|i| TransformerLayer::new(&mut params, &format!("dec.{i}"), d, config.heads, config.ff_dim, &mut rng))
            .collect::<Result<Vec<_>>>()?;
        let decoder_norm = LayerNorm::new(&mut params, "dec.ln", d);
        let output = Dense::new(&mut params, "dec.out", d, config.vocab_size, &mut rng);
        let positions = sinusoidal_positions(config.max_len, d);
        Ok(Self {
            config,
            params,
            embedding,
            encoder,
            encoder_norm,
            encoder_head,
            decoder_head,
            decoder,
            decoder_norm,
            output,
            positions,
        })
    }

    /// Rebuilds a model from checkpointed parameters.
    pub fn from_params(config: CodecConfig, params: ParamSet) -> Result<Self> {
        let mut model = Self::new(config, 0)?;
        model.params.assign_from(params)?;
        Ok(model)
    }

    pub fn config(&self) -> &CodecConfig {
        &self.config
    }

    pub fn params(&self) -> &ParamSet {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut ParamSet {
        &mut self.params
    }

    fn check_sentence(&self, s: &Sentence) -> Result<()> {
        if s.ids.len() != self.config.max_len {
            return Err(Error::Dimension(format!(
                "sentence has {} positions, codec expects {}",
                s.ids.len(),
                self.config.max_len
            )));
        }
        Ok(())
    }

    /// Encoder stack output before the channel head, `[B·L × D]`.
    fn encoder_states(&self, g: &mut Graph, sentences: &[&Sentence]) -> Result<NodeId> {
        let mut ids = Vec::with_capacity(sentences.len() * self.config.max_len);
        for s in sentences {
            self.check_sentence(s)?;
            ids.extend_from_slice(&s.ids);
        }
        let table = g.param(&self.params, self.embedding);
        let x = g.gather(table, &ids)?;
        let pos = g.constant(tile_rows(&self.positions, sentences.len()));
        let mut x = g.add(x, pos)?;
        for layer in &self.encoder {
            x = layer.forward(g, &self.params, x, self.config.max_len)?;
        }
        self.encoder_norm.forward(g, &self.params, x)
    }

    /// Power-normalized channel input frames, `[B·L × V]`.
    pub fn encode_graph(&self, g: &mut Graph, sentences: &[&Sentence]) -> Result<NodeId> {
        let h = self.encoder_states(g, sentences)?;
        let x = self.encoder_head.forward(g, &self.params, h)?;
        g.power_normalize(x, self.config.max_len)
    }

    /// Vocabulary logits from received frames `[B·L × V]`.
    pub fn decode_graph(&self, g: &mut Graph, frames: NodeId) -> Result<NodeId> {
        if g.value(frames).cols() != self.config.channel_dim {
            return Err(Error::Dimension(format!(
                "frame width {} does not match codec width {}",
                g.value(frames).cols(),
                self.config.channel_dim
            )));
        }
        let mut h = self.decoder_head.forward(g, &self.params, frames)?;
        for layer in &self.decoder {
            h = layer.forward(g, &self.params, h, self.config.max_len)?;
        }
        let h = self.decoder_norm.forward(g, &self.params, h)?;
        self.output.forward(g, &self.params, h)
    }

    pub fn encode(&self, sentence: &Sentence) -> Result<SemanticFrame> {
        Ok(self.encode_batch(&[sentence])?.pop().expect("one frame"))
    }

    pub fn encode_batch(&self, sentences: &[&Sentence]) -> Result<Vec<SemanticFrame>> {
        let mut g = Graph::new();
        let x = self.encode_graph(&mut g, sentences)?;
        split_frames(g.value(x), self.config.max_len)
    }

    pub fn decode_distribution(&self, frame: &SemanticFrame) -> Result<WordDistribution> {
        Ok(self.decode_batch(std::slice::from_ref(frame))?.pop().expect("one distribution"))
    }

    pub fn decode_batch(&self, frames: &[SemanticFrame]) -> Result<Vec<WordDistribution>> {
        let stacked = stack_frames(frames, self.config.max_len, self.config.channel_dim)?;
        let mut g = Graph::new();
        let x = g.constant(stacked);
        let logits = self.decode_graph(&mut g, x)?;
        let probs = softmax(g.value(logits));
        let l = self.config.max_len;
        let w = self.config.vocab_size;
        Ok(probs
            .data()
            .chunks(l * w)
            .map(|c| WordDistribution::new_unchecked(Tensor::new(vec![l, w], c.to_vec()).expect("shape")))
            .collect())
    }

    /// Average-pooled encoder stack representation of a sentence.
    pub fn sentence_embedding(&self, sentence: &Sentence) -> Result<Vec<f64>> {
        let mut g = Graph::new();
        let h = self.encoder_states(&mut g, &[sentence])?;
        let p = g.mean_pool(h, self.config.max_len)?;
        Ok(g.value(p).data().to_vec())
    }
}

fn tile_rows(t: &Tensor, times: usize) -> Tensor {
    let mut data = Vec::with_capacity(t.len() * times);
    for _ in 0..times {
        data.extend_from_slice(t.data());
    }
    Tensor::new(vec![t.rows() * times, t.cols()], data).expect("tiled shape")
}

pub(crate) fn split_frames(t: &Tensor, positions: usize) -> Result<Vec<SemanticFrame>> {
    let v = t.cols();
    t.data()
        .chunks(positions * v)
        .map(|c| SemanticFrame::from_data(positions, v, c.to_vec()))
        .collect()
}

pub(crate) fn stack_frames(frames: &[SemanticFrame], positions: usize, width: usize) -> Result<Tensor> {
    if frames.is_empty() {
        return Err(Error::Input("no frames".into()));
    }
    let mut data = Vec::with_capacity(frames.len() * positions * width);
    for f in frames {
        if f.positions() != positions || f.width() != width {
            return Err(Error::Dimension(format!(
                "frame is {}x{}, expected {positions}x{width}",
                f.positions(),
                f.width()
            )));
        }
        data.extend_from_slice(f.features().data());
    }
    Tensor::new(vec![frames.len() * positions, width], data)
}

/// Channel used while training the codec.
#[derive(Clone, Debug, PartialEq)]
pub enum TrainingChannel {
    /// `y = x`.
    Noiseless,
    /// Fading per `config`, with the SNR drawn uniformly from `snr_db` for each sentence.
    Fading { config: ChannelConfig, snr_db: (f64, f64) },
}

/// What the decoder is trained to emit at each position.
#[derive(Clone, Copy, Debug)]
pub enum DecodeTarget<'a> {
    Tokens,
    /// The synonym-class head of each token.
    Meanings(&'a SynonymTable),
}

#[derive(Clone, Debug, PartialEq)]
pub struct CodecTrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub seed: u64,
    pub channel: TrainingChannel,
}

/// Jointly trains encoder and decoder with token-level cross-entropy. Channel
/// taps and noise are sampled per sentence and held constant in the backward
/// pass. Returns the mean loss of every epoch.
pub fn train_codec(
    model: &mut CodecModel,
    corpus: &[Sentence],
    train: &CodecTrainConfig,
    target: DecodeTarget<'_>,
) -> Result<Vec<f64>> {
    if corpus.is_empty() {
        return Err(Error::Input("cannot train on an empty corpus".into()));
    }
    if train.batch_size == 0 {
        return Err(Error::Config("batch size must be positive".into()));
    }
    if let TrainingChannel::Fading { config, .. } = &train.channel {
        config.validate()?;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(train.seed);
    let mut adam = Adam::new(&model.params, AdamConfig::with_learning_rate(train.learning_rate))?;
    model.params.zero_grad();
    let l = model.config.max_len;
    let v = model.config.channel_dim;
    let mut order: Vec<usize> = (0..corpus.len()).collect();
    let mut history = Vec::with_capacity(train.epochs);

    for epoch in 0..train.epochs {
        order.shuffle(&mut rng);
        let mut total = 0.0;
        let mut batches = 0usize;
        for chunk in order.chunks(train.batch_size) {
            let batch: Vec<&Sentence> = chunk.iter().map(|&i| &corpus[i]).collect();
            let targets: Vec<usize> = batch
                .iter()
                .flat_map(|s| s.ids.iter())
                .map(|&id| match target {
                    DecodeTarget::Tokens => id,
                    DecodeTarget::Meanings(table) => table.meaning(id),
                })
                .collect();

            let mut g = Graph::new();
            let x = model.encode_graph(&mut g, &batch)?;
            let y = match &train.channel {
                TrainingChannel::Noiseless => x,
                TrainingChannel::Fading { config, snr_db } => {
                    let mut realizations = Vec::with_capacity(batch.len());
                    let mut noise = Vec::with_capacity(batch.len() * l * v);
                    for _ in 0..batch.len() {
                        let snr = if snr_db.0 < snr_db.1 { rng.gen_range(snr_db.0..snr_db.1) } else { snr_db.0 };
                        let r = sample_channel_with(config, l * v / 2, &mut rng)?;
                        noise.extend(r.scaled_noise(l * v, noise_variance_from_snr(snr)));
                        realizations.push(r);
                    }
                    let faded = g.linear_map(x, Arc::new(BatchChannel { realizations, frame_len: l * v }))?;
                    let noise = g.constant(Tensor::new(vec![batch.len() * l, v], noise)?);
                    g.add(faded, noise)?
                }
            };
            let logits = model.decode_graph(&mut g, y)?;
            let loss = g.softmax_cross_entropy(logits, &targets)?;
            let value = g.value(loss).data()[0];
            if !value.is_finite() {
                return Err(Error::Training { epoch, reason: format!("loss became {value}") });
            }
            g.backward(loss, &mut model.params)?;
            adam.step(&mut model.params);
            total += value;
            batches += 1;
        }
        history.push(total / batches as f64);
        log::debug!("codec epoch {epoch}: loss {:.5}", total / batches as f64);
    }
    Ok(history)
}

/// Fraction of positions (padding included) whose argmax matches the input
/// after a noiseless pass.
pub fn noiseless_token_accuracy(model: &CodecModel, sentences: &[Sentence]) -> Result<f64> {
    let mut correct = 0usize;
    let mut total = 0usize;
    for chunk in sentences.chunks(64) {
        let refs: Vec<&Sentence> = chunk.iter().collect();
        let frames = model.encode_batch(&refs)?;
        for (s, d) in chunk.iter().zip(model.decode_batch(&frames)?) {
            let out = greedy_decode(&d);
            correct += s.ids.iter().zip(&out.ids).filter(|(a, b)| a == b).count();
            total += s.ids.len();
        }
    }
    Ok(correct as f64 / total as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn tiny_config(vocab: usize) -> CodecConfig {
        CodecConfig {
            vocab_size: vocab,
            max_len: 4,
            embed_dim: 8,
            channel_dim: 8,
            layers: 1,
            heads: 2,
            ff_dim: 16,
        }
    }

    fn sentence(ids: &[usize]) -> Sentence {
        Sentence::from_ids(ids, 4).unwrap()
    }

    #[test]
    fn power_normalize_examples() {
        let f = SemanticFrame::from_data(2, 2, vec![2.0; 4]).unwrap();
        assert_eq!(power_normalize(&f).unwrap().features().data(), &[1.0; 4]);
        let unit = SemanticFrame::from_data(1, 2, vec![1.0, -1.0]).unwrap();
        assert_eq!(power_normalize(&unit).unwrap(), unit);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let r = SemanticFrame::new(Tensor::xavier(12, 32, &mut rng)).unwrap();
        assert!((power_normalize(&r).unwrap().power() - 1.0).abs() < 1e-12);
        let zero = SemanticFrame::from_data(1, 2, vec![0.0, 0.0]).unwrap();
        assert!(matches!(power_normalize(&zero), Err(Error::Degenerate(_))));
    }

    #[test]
    fn greedy_decode_one_hot_and_ties() {
        let one_hot = Tensor::from_rows(&[vec![0.0, 0.0, 1.0], vec![0.0, 1.0, 0.0], vec![1.0, 0.0, 0.0]]).unwrap();
        let s = greedy_decode(&WordDistribution::new(one_hot).unwrap());
        assert_eq!(s.ids, vec![2, 1, 0]);
        assert_eq!(s.true_length, 2);

        let mut row = vec![0.0; 8];
        row[4] = 0.5;
        row[7] = 0.5;
        let tie = WordDistribution::new(Tensor::from_rows(&[row]).unwrap()).unwrap();
        assert_eq!(greedy_decode(&tie).ids, vec![4]);
    }

    #[test]
    fn greedy_decode_matches_brute_force_argmax() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..200 {
            let logits = Tensor::xavier(6, 9, &mut rng);
            let d = WordDistribution::new(softmax(&logits)).unwrap();
            let s = greedy_decode(&d);
            for r in 0..6 {
                let row = d.probs().row(r);
                let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let first = row.iter().position(|&p| p == max).unwrap();
                assert_eq!(s.ids[r], first);
            }
        }
    }

    #[test]
    fn distribution_validation() {
        assert!(WordDistribution::new(Tensor::from_rows(&[vec![0.5, 0.6]]).unwrap()).is_err());
        assert!(WordDistribution::new(Tensor::from_rows(&[vec![1.5, -0.5]]).unwrap()).is_err());
    }

    #[test]
    fn encode_shape_power_and_determinism() {
        let model = CodecModel::new(tiny_config(10), 1).unwrap();
        let s = sentence(&[3, 4, 5]);
        let f = model.encode(&s).unwrap();
        assert_eq!(f.features().shape(), &[4, 8]);
        assert!((f.power() - 1.0).abs() < 1e-9);
        assert_eq!(f, model.encode(&s).unwrap());
    }

    #[test]
    fn decode_rows_sum_to_one_and_repeat() {
        let model = CodecModel::new(tiny_config(10), 2).unwrap();
        let f = model.encode(&sentence(&[6, 7])).unwrap();
        let d = model.decode_distribution(&f).unwrap();
        for r in 0..4 {
            assert!((d.probs().row(r).iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
        assert_eq!(d, model.decode_distribution(&f).unwrap());
    }

    #[test]
    fn batch_and_single_paths_agree() {
        let model = CodecModel::new(tiny_config(10), 3).unwrap();
        let a = sentence(&[3, 4]);
        let b = sentence(&[5, 6, 7, 8]);
        let batch = model.encode_batch(&[&a, &b]).unwrap();
        assert!(batch[1].features().max_abs_diff(model.encode(&b).unwrap().features()) < 1e-12);
    }

    #[test]
    fn odd_channel_width_rejected() {
        let cfg = CodecConfig { channel_dim: 7, ..tiny_config(10) };
        assert!(matches!(CodecModel::new(cfg, 0), Err(Error::Config(_))));
    }

    #[test]
    fn smoke_training_is_finite_and_reproducible() {
        let corpus: Vec<Sentence> = (0..10).map(|i| sentence(&[3 + i % 5, 4 + i % 3])).collect();
        let train = CodecTrainConfig {
            epochs: 1,
            batch_size: 4,
            learning_rate: 1e-3,
            seed: 5,
            channel: TrainingChannel::Fading { config: ChannelConfig::default(), snr_db: (0.0, 10.0) },
        };
        let mut m1 = CodecModel::new(tiny_config(10), 1).unwrap();
        let h1 = train_codec(&mut m1, &corpus, &train, DecodeTarget::Tokens).unwrap();
        assert_eq!(h1.len(), 1);
        assert!(h1[0].is_finite());
        let mut m2 = CodecModel::new(tiny_config(10), 1).unwrap();
        let h2 = train_codec(&mut m2, &corpus, &train, DecodeTarget::Tokens).unwrap();
        assert_eq!(h1, h2);
        assert!(train_codec(&mut m2, &[], &train, DecodeTarget::Tokens).is_err());
    }

    #[test]
    fn learns_a_tiny_corpus_noiselessly() {
        let corpus: Vec<Sentence> = (0..12).map(|i| sentence(&[3 + i % 7, 3 + (i * 3) % 7, 3 + (i * 5) % 7])).collect();
        let mut model = CodecModel::new(tiny_config(10), 4).unwrap();
        let train = CodecTrainConfig {
            epochs: 150,
            batch_size: 6,
            learning_rate: 1e-2,
            seed: 1,
            channel: TrainingChannel::Noiseless,
        };
        let h = train_codec(&mut model, &corpus, &train, DecodeTarget::Tokens).unwrap();
        assert!(h.last().unwrap() < &h[0]);
        assert!(noiseless_token_accuracy(&model, &corpus).unwrap() >= 0.99);
    }
}

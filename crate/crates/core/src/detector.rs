//! Sentence-level semantic error detector producing the confidence `p̂` that
//! drives ACK/NACK feedback.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::corpus::Sentence;
use crate::error::{Error, Result};
use crate::knowledge_base::{KbSampleK3, TrainSchedule};
use crate::metrics::ConfusionCounts;
use crate::reconstructor::Mlp;
use crate::tensor::{sinusoidal_positions, Adam, AdamConfig, Graph, NodeId, ParamId, ParamSet, Tensor, TransformerLayer};

/// Number of transformer layers in the detector.
pub const DETECTOR_DEPTH: usize = 3;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Feedback {
    Ack,
    Nack,
}

/// ACK iff `p̂ > λ`, strictly.
pub fn feedback_decision(p_hat: f64, lambda: f64) -> Feedback {
    if p_hat > lambda {
        Feedback::Ack
    } else {
        Feedback::Nack
    }
}

/// Anything producing a confidence in `[0, 1]` that a decoded sentence is correct.
pub trait ConfidenceDetector: Send + Sync {
    fn confidence(&self, sentence: &Sentence) -> Result<f64>;
}

#[derive(Clone, Debug, PartialEq)]
pub struct DetectorConfig {
    pub vocab_size: usize,
    pub max_len: usize,
    pub embed_dim: usize,
    pub heads: usize,
    pub ff_dim: usize,
}

/// Embedding, three transformer layers, average pooling, then
/// `D → D → D/2 → 1` with a sigmoid output.
#[derive(Clone, Debug)]
pub struct DetectorNet {
    config: DetectorConfig,
    params: ParamSet,
    embedding: ParamId,
    layers: Vec<TransformerLayer>,
    head: Mlp,
    positions: Tensor,
}

impl DetectorNet {
    pub fn new(config: DetectorConfig, seed: u64) -> Result<Self> {
        if config.embed_dim < 2 || config.vocab_size == 0 || config.max_len == 0 {
            return Err(Error::Config(format!("degenerate detector dimensions {config:?}")));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut params = ParamSet::new();
        let d = config.embed_dim;
        let embedding = params.add("det.embedding", Tensor::xavier(config.vocab_size, d, &mut rng));
        let layers = (0..DETECTOR_DEPTH)
            .map(|i| TransformerLayer::new(&mut params, &format!("det.{i}"), d, config.heads, config.ff_dim, &mut rng))
            .collect::<Result<Vec<_>>>()?;
        let head = Mlp::new(&mut params, "det.head", &[d, d, d / 2, 1], &mut rng);
        let positions = sinusoidal_positions(config.max_len, d);
        Ok(Self { config, params, embedding, layers, head, positions })
    }

    pub fn from_params(config: DetectorConfig, params: ParamSet) -> Result<Self> {
        let mut net = Self::new(config, 0)?;
        net.params.assign_from(params)?;
        Ok(net)
    }

    pub fn config(&self) -> &DetectorConfig {
        &self.config
    }

    pub fn params(&self) -> &ParamSet {
        &self.params
    }

    pub fn depth(&self) -> usize {
        self.layers.len()
    }

    fn logits(&self, g: &mut Graph, sentences: &[&Sentence]) -> Result<NodeId> {
        let l = self.config.max_len;
        let mut ids = Vec::with_capacity(sentences.len() * l);
        for s in sentences {
            if s.ids.len() != l {
                return Err(Error::Dimension(format!("sentence has {} positions, detector expects {l}", s.ids.len())));
            }
            if let Some(&bad) = s.ids.iter().find(|&&id| id >= self.config.vocab_size) {
                return Err(Error::InvalidId { id: bad, size: self.config.vocab_size });
            }
            ids.extend_from_slice(&s.ids);
        }
        let table = g.param(&self.params, self.embedding);
        let x = g.gather(table, &ids)?;
        let mut pos = Vec::with_capacity(ids.len() * self.config.embed_dim);
        for _ in 0..sentences.len() {
            pos.extend_from_slice(self.positions.data());
        }
        let pos = g.constant(Tensor::new(vec![ids.len(), self.config.embed_dim], pos)?);
        let mut x = g.add(x, pos)?;
        for layer in &self.layers {
            x = layer.forward(g, &self.params, x, l)?;
        }
        let pooled = g.mean_pool(x, l)?;
        self.head.forward(g, &self.params, pooled)
    }

    pub fn confidences(&self, sentences: &[&Sentence]) -> Result<Vec<f64>> {
        let mut g = Graph::new();
        let z = self.logits(&mut g, sentences)?;
        let p = g.sigmoid(z);
        Ok(g.value(p).data().to_vec())
    }
}

impl ConfidenceDetector for DetectorNet {
    fn confidence(&self, sentence: &Sentence) -> Result<f64> {
        Ok(self.confidences(&[sentence])?[0])
    }
}

/// Minimizes BCE on `(Ŝ, C)` samples. Returns the mean loss of every epoch.
pub fn train_detector(net: &mut DetectorNet, k3: &[KbSampleK3], schedule: &TrainSchedule) -> Result<Vec<f64>> {
    let positives = k3.iter().filter(|s| s.label).count();
    if positives == 0 || positives == k3.len() {
        return Err(Error::Training { epoch: 0, reason: "K3 must contain both labels".into() });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(schedule.seed);
    let mut adam = Adam::new(&net.params, AdamConfig::with_learning_rate(schedule.learning_rate))?;
    net.params.zero_grad();
    let mut history = Vec::with_capacity(schedule.epochs);
    for epoch in 0..schedule.epochs {
        let batches = schedule.batches(k3.len(), &mut rng)?;
        let mut total = 0.0;
        for batch in &batches {
            let sentences: Vec<&Sentence> = batch.iter().map(|&i| &k3[i].decoded).collect();
            let labels: Vec<f64> = batch.iter().map(|&i| if k3[i].label { 1.0 } else { 0.0 }).collect();
            let mut g = Graph::new();
            let z = net.logits(&mut g, &sentences)?;
            let loss = g.bce_with_logits(z, &labels)?;
            let value = g.value(loss).data()[0];
            if !value.is_finite() {
                return Err(Error::Training { epoch, reason: format!("loss became {value}") });
            }
            g.backward(loss, &mut net.params)?;
            adam.step(&mut net.params);
            total += value;
        }
        history.push(total / batches.len() as f64);
    }
    Ok(history)
}

/// Confusion counts of the detector's feedback against the stored labels.
pub fn evaluate_detector(detector: &dyn ConfidenceDetector, samples: &[KbSampleK3], lambda: f64) -> Result<ConfusionCounts> {
    let mut counts = ConfusionCounts::default();
    for s in samples {
        let ack = feedback_decision(detector.confidence(&s.decoded)?, lambda) == Feedback::Ack;
        counts.record(s.label, ack);
    }
    Ok(counts)
}

/// Area under the ROC curve of confidences for positive versus negative samples.
pub fn auc(detector: &dyn ConfidenceDetector, samples: &[KbSampleK3]) -> Result<f64> {
    let mut pos = Vec::new();
    let mut neg = Vec::new();
    for s in samples {
        let p = detector.confidence(&s.decoded)?;
        if s.label {
            pos.push(p);
        } else {
            neg.push(p);
        }
    }
    if pos.is_empty() || neg.is_empty() {
        return Err(Error::Input("AUC needs both labels".into()));
    }
    let mut wins = 0.0;
    for &a in &pos {
        for &b in &neg {
            wins += if a > b {
                1.0
            } else if a == b {
                0.5
            } else {
                0.0
            };
        }
    }
    Ok(wins / (pos.len() * neg.len()) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn config() -> DetectorConfig {
        DetectorConfig { vocab_size: 12, max_len: 5, embed_dim: 8, heads: 2, ff_dim: 16 }
    }

    #[test]
    fn feedback_boundary_and_grid() {
        assert_eq!(feedback_decision(0.99, 0.5), Feedback::Ack);
        assert_eq!(feedback_decision(0.5, 0.5), Feedback::Nack);
        for i in 0..=20 {
            for j in 0..=20 {
                let (p, l) = (i as f64 / 20.0, j as f64 / 20.0);
                assert_eq!(feedback_decision(p, l) == Feedback::Ack, p > l);
            }
        }
    }

    #[test]
    fn bounded_repeatable_and_three_layers_deep() {
        let net = DetectorNet::new(config(), 1).unwrap();
        assert_eq!(net.depth(), 3);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..20 {
            let n = rng.gen_range(1..=5);
            let ids: Vec<usize> = (0..n).map(|_| rng.gen_range(3..12)).collect();
            let s = Sentence::from_ids(&ids, 5).unwrap();
            let p = net.confidence(&s).unwrap();
            assert!((0.0..=1.0).contains(&p));
            assert_eq!(p, net.confidence(&s).unwrap());
        }
        let bad = Sentence { ids: vec![3, 40, 0, 0, 0], true_length: 2 };
        assert!(matches!(net.confidence(&bad), Err(Error::InvalidId { .. })));
    }

    #[test]
    fn learns_to_flag_a_marker_token() {
        // sentences containing token 11 are the corrupted ones
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let k3: Vec<KbSampleK3> = (0..240)
            .map(|i| {
                let label = i % 2 == 0;
                let mut ids: Vec<usize> = (0..4).map(|_| rng.gen_range(3..11)).collect();
                if !label {
                    ids[rng.gen_range(0..4)] = 11;
                }
                KbSampleK3 { decoded: Sentence::from_ids(&ids, 5).unwrap(), label }
            })
            .collect();
        let (train, held) = k3.split_at(200);
        let schedule = TrainSchedule { epochs: 30, batch_size: 20, learning_rate: 3e-3, seed: 4 };
        let mut net = DetectorNet::new(config(), 5).unwrap();
        let h1 = train_detector(&mut net, train, &schedule).unwrap();
        assert!(auc(&net, held).unwrap() > 0.8);
        let mut again = DetectorNet::new(config(), 5).unwrap();
        assert_eq!(train_detector(&mut again, train, &schedule).unwrap(), h1);
        let single: Vec<KbSampleK3> = train.iter().filter(|s| s.label).cloned().collect();
        assert!(matches!(train_detector(&mut net, &single, &schedule), Err(Error::Training { .. })));
    }
}

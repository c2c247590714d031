//! BLEU, sentence similarity, detector confusion statistics, and bootstrap
//! intervals for comparing schemes on paired samples.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::codec::{train_codec, CodecConfig, CodecModel, CodecTrainConfig, DecodeTarget, TrainingChannel};
use crate::corpus::{Sentence, SynonymTable};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct BleuConfig {
    /// Weight `u_n` of the n-gram precision, starting at n = 1.
    pub weights: Vec<f64>,
}

impl Default for BleuConfig {
    fn default() -> Self {
        Self { weights: vec![1.0] }
    }
}

impl BleuConfig {
    pub fn validate(&self) -> Result<()> {
        let sum: f64 = self.weights.iter().sum();
        if self.weights.is_empty() || self.weights.iter().any(|&u| u.is_nan() || u < 0.0) || (sum - 1.0).abs() > 1e-9 {
            return Err(Error::Config(format!("BLEU weights {:?} must be nonnegative and sum to 1", self.weights)));
        }
        Ok(())
    }

    pub fn max_n(&self) -> usize {
        self.weights.len()
    }
}

fn ngram_counts(words: &[usize], n: usize) -> HashMap<&[usize], usize> {
    let mut counts = HashMap::new();
    if words.len() >= n {
        for g in words.windows(n) {
            *counts.entry(g).or_insert(0) += 1;
        }
    }
    counts
}

/// Clipped n-gram precision of `candidate` against `reference`.
pub fn ngram_precision(reference: &[usize], candidate: &[usize], n: usize) -> f64 {
    if candidate.len() < n {
        return 0.0;
    }
    let refs = ngram_counts(reference, n);
    let cand = ngram_counts(candidate, n);
    let clipped: usize = cand
        .iter()
        .map(|(g, &c)| c.min(refs.get(g).copied().unwrap_or(0)))
        .sum();
    clipped as f64 / (candidate.len() + 1 - n) as f64
}

/// BLEU over the unpadded word sequences. The brevity term is
/// `min(1 − l_s/l_ŝ, 0)` with `l_s` the reference length.
pub fn bleu_words(reference: &[usize], candidate: &[usize], config: &BleuConfig) -> f64 {
    if candidate.is_empty() || reference.is_empty() {
        return 0.0;
    }
    let brevity = (1.0 - reference.len() as f64 / candidate.len() as f64).min(0.0);
    let mut log_bleu = brevity;
    for (i, &u) in config.weights.iter().enumerate() {
        if u == 0.0 {
            continue;
        }
        let f = ngram_precision(reference, candidate, i + 1);
        if f == 0.0 {
            return 0.0;
        }
        log_bleu += u * f.ln();
    }
    log_bleu.exp().clamp(0.0, 1.0)
}

/// BLEU with padding stripped from both sentences. Decoded candidates may
/// carry pads inside their span; those are dropped as well.
pub fn bleu(reference: &Sentence, candidate: &Sentence, config: &BleuConfig) -> f64 {
    let r = strip_pads(reference);
    let c = strip_pads(candidate);
    bleu_words(&r, &c, config)
}

fn strip_pads(s: &Sentence) -> Vec<usize> {
    s.ids
        .iter()
        .copied()
        .filter(|&id| id != crate::corpus::Vocabulary::PAD_ID)
        .collect()
}

/// Cosine similarity; zero-norm inputs give 0.
pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        log::warn!("zero-norm embedding in similarity; returning 0");
        return 0.0;
    }
    (dot / (na * nb)).clamp(-1.0, 1.0)
}

/// Frozen sentence embedder: average-pooled encoder output of a codec copy
/// trained on clean text to recover each word's synonym class.
#[derive(Clone, Debug)]
pub struct SimilarityEmbedder {
    model: CodecModel,
    center: Vec<f64>,
}

impl SimilarityEmbedder {
    /// Uncentered embedder: raw average-pooled encoder states.
    pub fn new(model: CodecModel) -> Self {
        let center = vec![0.0; model.config().embed_dim];
        Self { model, center }
    }

    /// Embeddings are shifted by the mean embedding of `corpus`. Pooled
    /// transformer states share a large common component which otherwise
    /// pushes every cosine towards 1.
    pub fn centered(model: CodecModel, corpus: &[Sentence]) -> Result<Self> {
        if corpus.is_empty() {
            return Err(Error::Input("cannot center on an empty corpus".into()));
        }
        let mut center = vec![0.0; model.config().embed_dim];
        for s in corpus {
            for (c, e) in center.iter_mut().zip(model.sentence_embedding(s)?) {
                *c += e;
            }
        }
        center.iter_mut().for_each(|c| *c /= corpus.len() as f64);
        Ok(Self { model, center })
    }

    /// Trains the encoder to recover meaning classes from clean text, then
    /// centers on the same corpus.
    pub fn train(
        config: CodecConfig,
        corpus: &[Sentence],
        synonyms: &SynonymTable,
        epochs: usize,
        learning_rate: f64,
        seed: u64,
    ) -> Result<Self> {
        let mut model = CodecModel::new(config, seed)?;
        let train = CodecTrainConfig {
            epochs,
            batch_size: 32,
            learning_rate,
            seed: seed.wrapping_add(1),
            channel: TrainingChannel::Noiseless,
        };
        train_codec(&mut model, corpus, &train, DecodeTarget::Meanings(synonyms))?;
        Self::centered(model, corpus)
    }

    pub fn model(&self) -> &CodecModel {
        &self.model
    }

    pub fn center(&self) -> &[f64] {
        &self.center
    }

    pub fn embed(&self, sentence: &Sentence) -> Result<Vec<f64>> {
        let mut e = self.model.sentence_embedding(sentence)?;
        e.iter_mut().zip(&self.center).for_each(|(x, c)| *x -= c);
        Ok(e)
    }
}

pub fn sentence_similarity(s: &Sentence, s_hat: &Sentence, embedder: &SimilarityEmbedder) -> Result<f64> {
    Ok(cosine(&embedder.embed(s)?, &embedder.embed(s_hat)?))
}

/// Detector outcomes; positive means the decoded sentence is semantically correct.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ConfusionCounts {
    pub tp: u64,
    pub tn: u64,
    pub fp: u64,
    pub fn_: u64,
}

impl ConfusionCounts {
    pub fn record(&mut self, actual_correct: bool, predicted_ack: bool) {
        match (actual_correct, predicted_ack) {
            (true, true) => self.tp += 1,
            (false, false) => self.tn += 1,
            (false, true) => self.fp += 1,
            (true, false) => self.fn_ += 1,
        }
    }

    pub fn total(&self) -> u64 {
        self.tp + self.tn + self.fp + self.fn_
    }
}

pub fn accuracy(counts: &ConfusionCounts) -> Result<f64> {
    if counts.total() == 0 {
        return Err(Error::Input("accuracy is undefined on an empty evaluation set".into()));
    }
    Ok((counts.tp + counts.tn) as f64 / counts.total() as f64)
}

pub fn recall(counts: &ConfusionCounts) -> Result<f64> {
    if counts.tp + counts.fn_ == 0 {
        return Err(Error::Input("recall is undefined without positive samples".into()));
    }
    Ok(counts.tp as f64 / (counts.tp + counts.fn_) as f64)
}

/// Percentile bootstrap interval of a mean.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BootstrapInterval {
    pub mean: f64,
    pub lower: f64,
    pub upper: f64,
}

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Bootstrap of the mean of `a[i] − b[i]`. `lower` and `upper` are the
/// one-sided bounds at `confidence`: the `(1−c)` and `c` quantiles.
pub fn paired_bootstrap(a: &[f64], b: &[f64], resamples: usize, confidence: f64, seed: u64) -> Result<BootstrapInterval> {
    if a.len() != b.len() || a.is_empty() {
        return Err(Error::Input(format!("paired samples of sizes {} and {}", a.len(), b.len())));
    }
    if !(0.5..1.0).contains(&confidence) || resamples == 0 {
        return Err(Error::Config(format!("bootstrap confidence {confidence} with {resamples} resamples")));
    }
    let diffs: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let n = diffs.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut means: Vec<f64> = (0..resamples)
        .map(|_| (0..n).map(|_| diffs[rng.gen_range(0..n)]).sum::<f64>() / n as f64)
        .collect();
    means.sort_by(f64::total_cmp);
    let q = |p: f64| means[((p * resamples as f64).floor() as usize).min(resamples - 1)];
    Ok(BootstrapInterval { mean: mean(&diffs), lower: q(1.0 - confidence), upper: q(confidence) })
}

//! Semantic HARQ protocols and their combining rules.
//!
//! Every round encodes (SC maps synonyms first), passes the frame through a
//! fresh channel realization and the reconstructor, decodes, and asks the
//! detector for feedback. Schemes differ in what they keep between rounds:
//! nothing (I), reconstructed frames (WC-FC, SC), or word distributions
//! (WC-DC).

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::channel::{apply_channel, sample_channel_with, ChannelConfig};
use crate::codec::{greedy_decode, CodecModel, SemanticFrame, WordDistribution};
use crate::corpus::{Sentence, SynonymTable};
use crate::detector::{feedback_decision, ConfidenceDetector, Feedback};
use crate::error::{Error, Result};
use crate::reconstructor::FrameReconstructor;
use crate::tensor::Tensor;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SchemeVariant {
    NoHarq,
    I,
    WcFc,
    WcDc,
    Sc,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CombineRule {
    Weighted,
    Equal,
}

impl CombineRule {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Weighted => "weighted",
            Self::Equal => "equal",
        }
    }
}

/// A protocol variant plus its combining rule (combining schemes only).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct HarqScheme {
    variant: SchemeVariant,
    rule: Option<CombineRule>,
}

impl HarqScheme {
    pub const NO_HARQ: Self = Self { variant: SchemeVariant::NoHarq, rule: None };
    pub const I: Self = Self { variant: SchemeVariant::I, rule: None };

    pub fn wc_fc(rule: CombineRule) -> Self {
        Self { variant: SchemeVariant::WcFc, rule: Some(rule) }
    }

    pub fn wc_dc(rule: CombineRule) -> Self {
        Self { variant: SchemeVariant::WcDc, rule: Some(rule) }
    }

    pub fn sc(rule: CombineRule) -> Self {
        Self { variant: SchemeVariant::Sc, rule: Some(rule) }
    }

    pub fn variant(&self) -> SchemeVariant {
        self.variant
    }

    pub fn rule(&self) -> Option<CombineRule> {
        self.rule
    }

    /// Name without the rule: `noharq`, `i`, `wc_fc`, `wc_dc`, `sc`.
    pub fn variant_name(&self) -> &'static str {
        match self.variant {
            SchemeVariant::NoHarq => "noharq",
            SchemeVariant::I => "i",
            SchemeVariant::WcFc => "wc_fc",
            SchemeVariant::WcDc => "wc_dc",
            SchemeVariant::Sc => "sc",
        }
    }

    pub fn rule_name(&self) -> &'static str {
        self.rule.map_or("none", CombineRule::as_str)
    }

    /// Parses `noharq`, `i`, or `wc_fc|wc_dc|sc` with an optional
    /// `:weighted` or `:equal` suffix (weighted by default).
    pub fn parse(s: &str) -> Result<Self> {
        let (name, rule) = match s.split_once(':') {
            Some((n, r)) => (n, Some(r)),
            None => (s, None),
        };
        let rule = match rule {
            None | Some("weighted") => CombineRule::Weighted,
            Some("equal") => CombineRule::Equal,
            Some(other) => return Err(Error::Config(format!("unknown combining rule {other:?}"))),
        };
        let plain = |scheme: Self| {
            if s.contains(':') {
                Err(Error::Config(format!("scheme {name:?} takes no combining rule")))
            } else {
                Ok(scheme)
            }
        };
        match name {
            "noharq" => plain(Self::NO_HARQ),
            "i" => plain(Self::I),
            "wc_fc" => Ok(Self::wc_fc(rule)),
            "wc_dc" => Ok(Self::wc_dc(rule)),
            "sc" => Ok(Self::sc(rule)),
            _ => Err(Error::Config(format!("unknown scheme {name:?}"))),
        }
    }
}

impl std::fmt::Display for HarqScheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self.rule {
            Some(r) => write!(f, "{}:{}", self.variant_name(), r.as_str()),
            None => f.write_str(self.variant_name()),
        }
    }
}

/// Combining weights `a_i = p̂_i / Σ p̂_k`. Uniform (including all-zero)
/// confidences give exactly `1/m` each.
pub fn combining_weights(confidences: &[f64]) -> Result<Vec<f64>> {
    let m = confidences.len();
    if m == 0 {
        return Err(Error::Input("nothing to combine".into()));
    }
    if let Some(&bad) = confidences.iter().find(|p| !(**p >= 0.0 && p.is_finite())) {
        return Err(Error::Input(format!("confidence {bad} is not a nonnegative real")));
    }
    let sum: f64 = confidences.iter().sum();
    if sum <= 0.0 || confidences.iter().all(|&p| p == confidences[0]) {
        return Ok(vec![1.0 / m as f64; m]);
    }
    Ok(confidences.iter().map(|p| p / sum).collect())
}

fn weighted_sum(items: &[&Tensor], weights: &[f64]) -> Result<Tensor> {
    let first = items.first().ok_or_else(|| Error::Input("nothing to combine".into()))?;
    let mut out = vec![0.0; first.len()];
    for (item, &a) in items.iter().zip(weights) {
        if item.shape() != first.shape() {
            return Err(Error::Dimension(format!("cannot combine shapes {:?} and {:?}", first.shape(), item.shape())));
        }
        for (o, x) in out.iter_mut().zip(item.data()) {
            *o += a * x;
        }
    }
    Tensor::new(first.shape().to_vec(), out)
}

/// `Σ a_i·item_i` with confidence-proportional weights.
pub fn combine_weighted(items: &[&Tensor], confidences: &[f64]) -> Result<Tensor> {
    if items.len() != confidences.len() {
        return Err(Error::Input(format!("{} items but {} confidences", items.len(), confidences.len())));
    }
    weighted_sum(items, &combining_weights(confidences)?)
}

/// Arithmetic mean.
pub fn combine_equal(items: &[&Tensor]) -> Result<Tensor> {
    if items.is_empty() {
        return Err(Error::Input("nothing to combine".into()));
    }
    weighted_sum(items, &vec![1.0 / items.len() as f64; items.len()])
}

fn combine(items: &[&Tensor], confidences: &[f64], rule: CombineRule) -> Result<Tensor> {
    match rule {
        CombineRule::Weighted => combine_weighted(items, confidences),
        CombineRule::Equal => combine_equal(items),
    }
}

/// Row-wise convex combination of word distributions, renormalized.
pub fn combine_decision(dists: &[&WordDistribution], confidences: &[f64], rule: CombineRule) -> Result<WordDistribution> {
    let items: Vec<&Tensor> = dists.iter().map(|d| d.probs()).collect();
    let mut t = combine(&items, confidences, rule)?;
    let cols = t.cols();
    for row in t.data_mut().chunks_mut(cols) {
        let s: f64 = row.iter().sum();
        if s > 0.0 {
            row.iter_mut().for_each(|p| *p /= s);
        }
    }
    WordDistribution::new(t)
}

/// `ψ`: for retransmission `m` of `total`, replaces the words at 1-based
/// positions `(⌈L'(m−1)/total⌉, ⌈L'm/total⌉]` with their
/// `((m−1) mod J)+1`-th synonym. Words without alternatives are kept.
pub fn synonym_map(sentence: &Sentence, m: usize, total: usize, table: &SynonymTable) -> Result<Sentence> {
    if total == 0 || m == 0 || m > total {
        return Err(Error::Input(format!("round {m} outside 1..={total}")));
    }
    let (start, end) = synonym_segment(sentence.true_length, m, total);
    let mut out = sentence.clone();
    for i in start..end {
        let w = sentence.ids[i];
        let list = table.synonyms_of(w);
        let j = list.len() - 1;
        if j >= 1 {
            out.ids[i] = list[(m - 1) % j + 1];
        }
    }
    Ok(out)
}

/// Zero-based half-open position range substituted in retransmission `m`.
pub fn synonym_segment(true_length: usize, m: usize, total: usize) -> (usize, usize) {
    let ceil = |k: usize| (true_length * k).div_ceil(total);
    (ceil(m - 1), ceil(m))
}

/// Delivers a frame in a given round (1-based).
pub trait RoundChannel: Send + Sync {
    fn transmit(&self, frame: &SemanticFrame, round: usize) -> Result<SemanticFrame>;
}

/// Independent fading realization and noise for every round, drawn from a
/// stream keyed by `(seed, round)` so every scheme sees the same channel.
#[derive(Clone, Debug)]
pub struct FadingRounds {
    pub config: ChannelConfig,
    pub seed: u64,
}

impl RoundChannel for FadingRounds {
    fn transmit(&self, frame: &SemanticFrame, round: usize) -> Result<SemanticFrame> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(round as u64);
        let realization = sample_channel_with(&self.config, frame.positions() * frame.width() / 2, &mut rng)?;
        apply_channel(frame, &realization, self.config.noise_variance())
    }
}

/// `y = x` in every round.
#[derive(Clone, Copy, Debug, Default)]
pub struct Noiseless;

impl RoundChannel for Noiseless {
    fn transmit(&self, frame: &SemanticFrame, _round: usize) -> Result<SemanticFrame> {
        Ok(frame.clone())
    }
}

/// Trained components used by a session.
#[derive(Clone, Copy)]
pub struct HarqModels<'a> {
    pub codec: &'a CodecModel,
    pub reconstructor: &'a dyn FrameReconstructor,
    pub detector: &'a dyn ConfidenceDetector,
    pub synonyms: &'a SynonymTable,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Outcome {
    Pending,
    Ack,
    Exhausted,
    /// Single transmission without feedback (NoHarq).
    NoFeedback,
}

impl Outcome {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Pending => "pending",
            Self::Ack => "ack",
            Self::Exhausted => "exhausted",
            Self::NoFeedback => "nofeedback",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "pending" => Ok(Self::Pending),
            "ack" => Ok(Self::Ack),
            "exhausted" => Ok(Self::Exhausted),
            "nofeedback" => Ok(Self::NoFeedback),
            _ => Err(Error::Input(format!("unknown outcome {s:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RoundTrace {
    pub round: usize,
    /// Confidence of this round's independent decoding.
    pub p_hat_round: Option<f64>,
    /// Confidence of the round's final (combined) decoding, used for feedback.
    pub p_hat: Option<f64>,
    pub decoded: Sentence,
    pub feedback: Option<Feedback>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SessionResult {
    pub decoded: Sentence,
    pub outcome: Outcome,
    pub rounds_used: usize,
    pub p_hat_final: Option<f64>,
    pub trace: Vec<RoundTrace>,
}

/// Receiver and transmitter state of one sentence's exchange.
#[derive(Clone, Debug)]
pub struct HarqSession {
    sentence: Sentence,
    scheme: HarqScheme,
    max_rounds: usize,
    lambda: f64,
    round: usize,
    frames: Vec<SemanticFrame>,
    dists: Vec<WordDistribution>,
    confidences: Vec<f64>,
    encoded: Option<SemanticFrame>,
    outcome: Outcome,
    trace: Vec<RoundTrace>,
}

impl HarqSession {
    pub fn new(sentence: Sentence, scheme: HarqScheme, max_rounds: usize, lambda: f64) -> Result<Self> {
        if max_rounds == 0 {
            return Err(Error::Config("at least one round is required".into()));
        }
        if !(0.0..=1.0).contains(&lambda) {
            return Err(Error::Config(format!("feedback threshold {lambda} outside [0, 1]")));
        }
        Ok(Self {
            sentence,
            scheme,
            max_rounds,
            lambda,
            round: 0,
            frames: Vec::new(),
            dists: Vec::new(),
            confidences: Vec::new(),
            encoded: None,
            outcome: Outcome::Pending,
            trace: Vec::new(),
        })
    }

    pub fn round(&self) -> usize {
        self.round
    }

    pub fn outcome(&self) -> Outcome {
        self.outcome
    }

    /// Items held in the combining buffer.
    pub fn buffered(&self) -> usize {
        self.frames.len() + self.dists.len()
    }

    pub fn trace(&self) -> &[RoundTrace] {
        &self.trace
    }

    fn transmitted(&mut self, models: &HarqModels<'_>) -> Result<SemanticFrame> {
        if self.scheme.variant == SchemeVariant::Sc && self.round >= 2 {
            let mapped = synonym_map(&self.sentence, self.round - 1, self.max_rounds - 1, models.synonyms)?;
            return models.codec.encode(&mapped);
        }
        if self.encoded.is_none() {
            self.encoded = Some(models.codec.encode(&self.sentence)?);
        }
        Ok(self.encoded.clone().expect("encoded above"))
    }

    /// Runs the next round. Returns the feedback, or `None` without feedback.
    pub fn step(&mut self, models: &HarqModels<'_>, channel: &dyn RoundChannel) -> Result<Option<Feedback>> {
        if self.outcome != Outcome::Pending {
            return Err(Error::State(format!("session already finished ({})", self.outcome.as_str())));
        }
        self.round += 1;
        let x = self.transmitted(models)?;
        let y = channel.transmit(&x, self.round)?;
        let y = models.reconstructor.reconstruct(&y)?;

        let variant = self.scheme.variant;
        let rule = self.scheme.rule.unwrap_or(CombineRule::Weighted);
        let (decoded, p_hat_round) = match variant {
            SchemeVariant::NoHarq => {
                let decoded = greedy_decode(&models.codec.decode_distribution(&y)?);
                self.outcome = Outcome::NoFeedback;
                self.trace.push(RoundTrace { round: 1, p_hat_round: None, p_hat: None, decoded, feedback: None });
                return Ok(None);
            }
            SchemeVariant::I => (greedy_decode(&models.codec.decode_distribution(&y)?), None),
            SchemeVariant::WcFc | SchemeVariant::Sc => {
                let own = greedy_decode(&models.codec.decode_distribution(&y)?);
                let p = models.detector.confidence(&own)?;
                self.confidences.push(p);
                self.frames.push(y);
                if self.frames.len() == 1 {
                    (own, Some(p))
                } else {
                    let items: Vec<&Tensor> = self.frames.iter().map(|f| f.features()).collect();
                    let combined = SemanticFrame::new(combine(&items, &self.confidences, rule)?)?;
                    (greedy_decode(&models.codec.decode_distribution(&combined)?), Some(p))
                }
            }
            SchemeVariant::WcDc => {
                let dist = models.codec.decode_distribution(&y)?;
                let own = greedy_decode(&dist);
                let p = models.detector.confidence(&own)?;
                self.confidences.push(p);
                self.dists.push(dist);
                if self.dists.len() == 1 {
                    (own, Some(p))
                } else {
                    let refs: Vec<&WordDistribution> = self.dists.iter().collect();
                    (greedy_decode(&combine_decision(&refs, &self.confidences, rule)?), Some(p))
                }
            }
        };
        let p_hat = match (p_hat_round, self.buffered() <= 1) {
            (Some(p), true) => p,
            _ => models.detector.confidence(&decoded)?,
        };
        let feedback = feedback_decision(p_hat, self.lambda);
        if feedback == Feedback::Ack {
            self.outcome = Outcome::Ack;
        } else if self.round == self.max_rounds {
            self.outcome = Outcome::Exhausted;
        }
        self.trace.push(RoundTrace { round: self.round, p_hat_round, p_hat: Some(p_hat), decoded, feedback: Some(feedback) });
        Ok(Some(feedback))
    }

    pub fn finish(self) -> Result<SessionResult> {
        if self.outcome == Outcome::Pending {
            return Err(Error::State("session is still pending".into()));
        }
        let last = self.trace.last().expect("a finished session ran at least one round");
        Ok(SessionResult {
            decoded: last.decoded.clone(),
            outcome: self.outcome,
            rounds_used: self.round,
            p_hat_final: last.p_hat,
            trace: self.trace,
        })
    }
}

/// Runs rounds until ACK or `max_rounds`, returning the last round's
/// (combined) decoding.
pub fn run_session(
    sentence: &Sentence,
    scheme: HarqScheme,
    models: &HarqModels<'_>,
    channel: &dyn RoundChannel,
    max_rounds: usize,
    lambda: f64,
) -> Result<SessionResult> {
    let mut session = HarqSession::new(sentence.clone(), scheme, max_rounds, lambda)?;
    while session.outcome() == Outcome::Pending {
        session.step(models, channel)?;
    }
    session.finish()
}

//! Combining and protocol invariants checked over seeded random instances.

use std::sync::Mutex;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use semharq::channel::ChannelConfig;
use semharq::codec::{CodecConfig, CodecModel};
use semharq::corpus::{Sentence, SynonymTable};
use semharq::detector::{ConfidenceDetector, Feedback};
use semharq::harq::{
    combine_equal, combine_weighted, combining_weights, synonym_segment, FadingRounds, HarqModels, HarqScheme,
    HarqSession, Noiseless, Outcome, RoundChannel, SchemeVariant,
};
use semharq::reconstructor::PassThrough;
use semharq::tensor::Tensor;

pub const SCHEMES: [&str; 8] =
    ["noharq", "i", "wc_fc:weighted", "wc_fc:equal", "wc_dc:weighted", "wc_dc:equal", "sc:weighted", "sc:equal"];

/// Confidences drawn from a seeded stream; a tenth land exactly on the
/// threshold to exercise the strict comparison.
pub struct RandomDetector {
    pub rng: Mutex<ChaCha8Rng>,
    pub lambda: f64,
}

impl ConfidenceDetector for RandomDetector {
    fn confidence(&self, _: &Sentence) -> semharq::Result<f64> {
        let mut rng = self.rng.lock().unwrap();
        Ok(if rng.gen_bool(0.1) { self.lambda } else { rng.gen_range(0.0..=1.0) })
    }
}

pub fn tiny_codec() -> CodecModel {
    let config = CodecConfig {
        vocab_size: 12,
        max_len: 6,
        embed_dim: 4,
        channel_dim: 2,
        layers: 1,
        heads: 1,
        ff_dim: 4,
    };
    CodecModel::new(config, 5).unwrap()
}

fn confidences(rng: &mut ChaCha8Rng) -> Vec<f64> {
    let m = rng.gen_range(1..8);
    (0..m)
        .map(|_| match rng.gen_range(0..4) {
            0 => 0.0,
            1 => 1.0,
            _ => rng.gen_range(0.0..=1.0),
        })
        .collect()
}

/// Weight sums, scale invariance and uniform-versus-equal agreement.
pub fn combining(instances: usize, seed: u64) -> Result<(), String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for n in 0..instances {
        let p = confidences(&mut rng);
        let a = combining_weights(&p).map_err(|e| e.to_string())?;
        let sum: f64 = a.iter().sum();
        if (sum - 1.0).abs() > 1e-12 {
            return Err(format!("instance {n}: weights of {p:?} sum to {sum}"));
        }
        let c = rng.gen_range(1e-3..1e3);
        let scaled: Vec<f64> = p.iter().map(|x| x * c).collect();
        let b = combining_weights(&scaled).map_err(|e| e.to_string())?;
        if a.iter().zip(&b).any(|(x, y)| (x - y).abs() > 1e-12) {
            return Err(format!("instance {n}: scaling {p:?} by {c} changed the weights"));
        }
        let m = p.len();
        let cols = rng.gen_range(1..10);
        let items: Vec<Tensor> = (0..m)
            .map(|_| Tensor::new(vec![2, cols], (0..2 * cols).map(|_| rng.gen_range(-3.0..3.0)).collect()).unwrap())
            .collect();
        let refs: Vec<&Tensor> = items.iter().collect();
        let q = rng.gen_range(0.0..=1.0);
        let w = combine_weighted(&refs, &vec![q; m]).map_err(|e| e.to_string())?;
        let e = combine_equal(&refs).map_err(|e| e.to_string())?;
        if w.data() != e.data() {
            return Err(format!("instance {n}: uniform weighted combining differs from equal combining"));
        }
    }
    Ok(())
}

/// Round bound, ACK agreement, empty buffer for scheme I.
pub fn sessions(count: usize, seed: u64) -> Result<(), String> {
    let codec = tiny_codec();
    let synonyms = SynonymTable::identity(12);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for n in 0..count {
        let scheme = HarqScheme::parse(SCHEMES[rng.gen_range(0..SCHEMES.len())]).unwrap();
        let max_rounds = rng.gen_range(1..7);
        let lambda = match rng.gen_range(0..4) {
            0 => 0.0,
            1 => 1.0,
            _ => rng.gen_range(0.0..=1.0),
        };
        let words: Vec<usize> = (0..rng.gen_range(1..=6)).map(|_| rng.gen_range(4..12)).collect();
        let sentence = Sentence::from_ids(&words, 6).unwrap();
        let session_seed: u64 = rng.gen();
        let detector = RandomDetector { rng: Mutex::new(ChaCha8Rng::seed_from_u64(session_seed)), lambda };
        let channel: Box<dyn RoundChannel> = if rng.gen_bool(0.5) {
            Box::new(FadingRounds { config: ChannelConfig { snr_db: 0.0, ..Default::default() }, seed: session_seed })
        } else {
            Box::new(Noiseless)
        };
        let models = HarqModels { codec: &codec, reconstructor: &PassThrough, detector: &detector, synonyms: &synonyms };
        let fail = |what: &str| Err(format!("session {n} ({scheme}, M={max_rounds}, λ={lambda}): {what}"));

        let mut session = HarqSession::new(sentence, scheme, max_rounds, lambda).map_err(|e| e.to_string())?;
        let mut last = None;
        while session.outcome() == Outcome::Pending {
            last = session.step(&models, channel.as_ref()).map_err(|e| e.to_string())?;
            if session.round() > max_rounds {
                return fail("exceeded the round limit");
            }
            if scheme.variant() == SchemeVariant::I && session.buffered() != 0 {
                return fail("scheme I buffered a frame");
            }
        }
        let result = session.finish().map_err(|e| e.to_string())?;
        if result.rounds_used > max_rounds {
            return fail("used too many rounds");
        }
        if (result.outcome == Outcome::Ack) != (last == Some(Feedback::Ack)) {
            return fail("outcome disagrees with the last feedback");
        }
        if result.outcome == Outcome::Exhausted && result.rounds_used != max_rounds {
            return fail("gave up before the round limit");
        }
    }
    Ok(())
}

/// Segments of every round tile `[0, L')` for all `(L', M)` in `[1,30]×[1,6]`.
pub fn synonym_partition() -> Result<(), String> {
    for length in 1..=30 {
        for total in 1..=6 {
            let mut next = 0;
            for m in 1..=total {
                let (start, end) = synonym_segment(length, m, total);
                if start != next || end < start {
                    return Err(format!("gap or overlap at L'={length}, m={m}/{total}"));
                }
                next = end;
            }
            if next != length {
                return Err(format!("L'={length}, total={total} does not cover the sentence"));
            }
        }
    }
    Ok(())
}

//! Trains a small transformer codec through fading at random SNRs, then
//! reports noiseless token accuracy and BLEU over the channel at a few SNRs.
//! The trained weights round-trip through a checkpoint file.
//!
//! `cargo run --release --example train_codec -- 40` sets the epoch count (default 80).

use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use semharq::channel::{apply_channel, sample_channel_with, ChannelConfig};
use semharq::codec::{
    greedy_decode, noiseless_token_accuracy, train_codec, CodecConfig, CodecModel, CodecTrainConfig, DecodeTarget,
    TrainingChannel,
};
use semharq::corpus::{build_vocabulary, generate_synthetic_corpus, tokenize_and_pad, Sentence};
use semharq::metrics::{bleu, mean, BleuConfig};
use semharq::tensor::{load_checkpoint, save_checkpoint};
use semharq::Result;

const MAX_LEN: usize = 8;

fn main() -> Result<()> {
    let epochs = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(80);
    let corpus = generate_synthetic_corpus(1, 2200, 4, MAX_LEN)?;
    let vocab = build_vocabulary(&corpus.sentences)?;
    let sentences = corpus.sentences.iter().map(|s| tokenize_and_pad(s, &vocab, MAX_LEN)).collect::<Result<Vec<_>>>()?;
    let (train, test) = sentences.split_at(2000);

    let config = CodecConfig {
        vocab_size: vocab.size(),
        max_len: MAX_LEN,
        embed_dim: 16,
        channel_dim: 32,
        layers: 2,
        heads: 4,
        ff_dim: 64,
    };
    let channel = ChannelConfig { rho: 0.999, ..ChannelConfig::default() };
    let schedule = CodecTrainConfig {
        epochs,
        batch_size: 32,
        learning_rate: 3e-3,
        seed: 2,
        channel: TrainingChannel::Fading { config: channel.clone(), snr_db: (0.0, 30.0) },
    };
    let mut model = CodecModel::new(config, 1)?;
    let start = Instant::now();
    let losses = train_codec(&mut model, train, &schedule, DecodeTarget::Tokens)?;
    println!("{epochs} epochs in {:.1?}, loss {:.3} -> {:.3}", start.elapsed(), losses[0], losses[losses.len() - 1]);
    println!("noiseless token accuracy on held-out sentences {:.4}", noiseless_token_accuracy(&model, test)?);

    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for snr_db in [0.0, 10.0, 20.0, 30.0] {
        let c = channel.with_snr(snr_db);
        let scores = test
            .iter()
            .map(|s| {
                let frame = model.encode(s)?;
                let r = sample_channel_with(&c, frame.positions() * frame.width() / 2, &mut rng)?;
                let decoded: Sentence = greedy_decode(&model.decode_distribution(&apply_channel(&frame, &r, c.noise_variance())?)?);
                Ok(bleu(s, &decoded, &BleuConfig::default()))
            })
            .collect::<Result<Vec<_>>>()?;
        println!("snr {snr_db:>4} dB  mean BLEU {:.3}", mean(&scores));
    }

    let dir = tempfile::tempdir().map_err(|e| semharq::Error::io(std::env::temp_dir(), e))?;
    let path = dir.path().join("codec.ckpt");
    let mut params = model.params().clone();
    params.quantize_f32();
    save_checkpoint(&path, &params)?;
    let reloaded = CodecModel::from_params(model.config().clone(), load_checkpoint(&path)?)?;
    println!("reloaded checkpoint accuracy {:.4}", noiseless_token_accuracy(&reloaded, test)?);
    Ok(())
}

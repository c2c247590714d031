//! Builds local knowledge bases from a trained codec: every transmission is
//! labeled normal when its decoding reaches BLEU 0.9, and abnormal pairs of
//! clean and corrupted frames are kept for the generator.
//!
//! Trains (or reuses) the small codec under `target/example-runs/small`.

use semharq::corpus::detokenize;
use semharq::experiment::build_system_at;
use semharq::knowledge_base::{generate_kb, LocalKnowledgeBase};
use semharq::Result;

mod common;

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let config = common::small_config()?;
    let system = build_system_at(&config, &[])?;
    let channel = config.channel_config();

    for snr_db in [0.0, 5.0, 10.0, 20.0, 30.0] {
        let kb = generate_kb(&system.codec, &channel.with_snr(snr_db), &system.corpus.train, 2000, 17)?;
        println!(
            "snr {snr_db:>4} dB  abnormal fraction {:.3}  K2 pairs {}",
            kb.abnormal_fraction(),
            kb.k2.len()
        );
    }

    let kb = generate_kb(&system.codec, &channel.with_snr(5.0), &system.corpus.train, 500, 18)?;
    for sample in kb.k3.iter().filter(|s| !s.label).take(3) {
        println!("abnormal decoding: {}", detokenize(&sample.decoded, &system.corpus.vocab)?);
    }

    let dir = tempfile::tempdir().map_err(|e| semharq::Error::io(std::env::temp_dir(), e))?;
    let path = dir.path().join("kb.bin");
    kb.save(&path)?;
    let loaded = LocalKnowledgeBase::load(&path)?;
    println!("saved and reloaded {} bytes, identical: {}", std::fs::metadata(&path).map_or(0, |m| m.len()), loaded == kb);
    Ok(())
}

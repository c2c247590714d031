//! Held-out detector accuracy and recall as the K3 training set grows.
//!
//! `cargo run --release --example detector_size -- 10` picks the SNR in dB (default 20).

use semharq::experiment::build_system_at;
use semharq::experiment::pipeline::detector_size_sweep;
use semharq::knowledge_base::generate_kb;
use semharq::Result;

mod common;

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let snr_db: f64 = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(20.0);
    let mut config = common::small_config()?;
    config.detector.epochs = 10;
    let system = build_system_at(&config, &[])?;
    let kb = generate_kb(&system.codec, &config.channel_config().with_snr(snr_db), &system.corpus.train, 6000, 31)?;
    println!("snr {snr_db} dB, abnormal fraction {:.3}", kb.abnormal_fraction());
    let holdout = 1000;
    let largest = kb.k3.len() - holdout;
    let sizes = [largest / 8, largest / 4, largest / 2, largest];
    for p in detector_size_sweep(&config, &kb.k3, system.corpus.vocab.size(), &sizes, holdout)? {
        println!("{:>6} samples  accuracy {:.3}  recall {:.3}", p.size, p.accuracy, p.recall);
    }
    Ok(())
}

//! Scores the trained discriminator and generator of each sweep point on a
//! fresh knowledge base: how well the discriminator separates normal from
//! abnormal frames, how much closer the generator moves corrupted frames to
//! the clean ones, and what each reconstruction mode does to BLEU.

use semharq::codec::greedy_decode;
use semharq::experiment::build_system;
use semharq::harq::{FadingRounds, RoundChannel};
use semharq::knowledge_base::generate_kb;
use semharq::metrics::{bleu, mean};
use semharq::reconstructor::{generator_mse, FrameDiscriminator, ReconstructorMode};
use semharq::Result;

mod common;

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let config = common::small_config()?;
    let system = build_system(&config)?;
    for point in &system.points {
        let channel = config.channel_config().with_snr(point.snr_db);
        let fresh = generate_kb(&system.codec, &channel, &system.corpus.test, 1000, 99)?;
        let r = &point.reconstructor;

        let mut correct = 0;
        for s in &fresh.k1 {
            let p = r.discriminator.probability(&s.received)?;
            correct += usize::from((p >= r.threshold) == s.label);
        }
        println!("snr {:>4} dB  abnormal fraction {:.3}", point.snr_db, fresh.abnormal_fraction());
        println!("  discriminator accuracy {:.3}", correct as f64 / fresh.k1.len() as f64);
        if !fresh.k2.is_empty() {
            let (generated, corrupted) = generator_mse(&r.generator, &fresh.k2)?;
            println!("  generator MSE {generated:.4} against {corrupted:.4} for the corrupted frames");
        }

        let rounds = FadingRounds { config: channel.clone(), seed: 5 };
        let received = system
            .corpus
            .test
            .iter()
            .enumerate()
            .map(|(i, s)| rounds.transmit(&system.codec.encode(s)?, i + 1))
            .collect::<Result<Vec<_>>>()?;
        for mode in [ReconstructorMode::Off, ReconstructorMode::Full, ReconstructorMode::GeneratorOnly] {
            let rec = r.with_mode(mode);
            let scores = system
                .corpus
                .test
                .iter()
                .zip(&received)
                .map(|(s, y)| {
                    let decoded = greedy_decode(&system.codec.decode_distribution(&rec.apply(y)?)?);
                    Ok(bleu(s, &decoded, &config.bleu))
                })
                .collect::<Result<Vec<_>>>()?;
            println!("  {:<14} mean BLEU {:.3}", mode.as_str(), mean(&scores));
        }
    }
    Ok(())
}

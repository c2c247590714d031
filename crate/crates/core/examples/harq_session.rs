//! Traces one sentence through every HARQ scheme at the lowest SNR, round
//! by round, on the same channel realizations.
//!
//! `cargo run --release --example harq_session -- harq.max_rounds=4`

use semharq::corpus::{detokenize, Sentence};
use semharq::experiment::build_system;
use semharq::experiment::pipeline::session_seed;
use semharq::harq::{run_session, FadingRounds, HarqModels, HarqScheme};
use semharq::metrics::bleu;
use semharq::Result;

mod common;

const SCHEMES: [&str; 7] = ["noharq", "i", "wc_fc:weighted", "wc_fc:equal", "wc_dc:weighted", "wc_dc:equal", "sc:weighted"];

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let config = common::small_config()?;
    let system = build_system(&config)?;
    let point = &system.points[0];
    let models = HarqModels {
        codec: &system.codec,
        reconstructor: &point.reconstructor,
        detector: &point.detector,
        synonyms: &system.corpus.synonyms,
    };
    let channel = config.channel_config().with_snr(point.snr_db);
    let text = |s: &Sentence| detokenize(s, &system.corpus.vocab);

    // The first test sentence that a single transmission gets wrong.
    let noharq = HarqScheme::parse("noharq")?;
    let (id, sentence) = system
        .corpus
        .test
        .iter()
        .enumerate()
        .find(|(id, s)| {
            let rounds = FadingRounds { config: channel.clone(), seed: session_seed(config.channel.seed, point.snr_db, *id) };
            run_session(s, noharq, &models, &rounds, 1, config.detector.lambda).is_ok_and(|r| r.decoded != **s)
        })
        .unwrap_or((0, &system.corpus.test[0]));
    println!("snr {} dB, sentence {id}: {}", point.snr_db, text(sentence)?);

    let rounds = FadingRounds { config: channel.clone(), seed: session_seed(config.channel.seed, point.snr_db, id) };
    for name in SCHEMES {
        let scheme = HarqScheme::parse(name)?;
        let result = run_session(sentence, scheme, &models, &rounds, config.harq.max_rounds, config.detector.lambda)?;
        println!("{name}: {} after {} round(s)", result.outcome.as_str(), result.rounds_used);
        for t in &result.trace {
            let p = t.p_hat.map_or("-".to_string(), |p| format!("{p:.3}"));
            let fb = t.feedback.map_or("-".to_string(), |f| format!("{f:?}"));
            println!("  round {} p={p:<5} {fb:<4} {}", t.round, text(&t.decoded)?);
        }
        println!("  BLEU {:.3}", bleu(sentence, &result.decoded, &config.bleu));
    }
    Ok(())
}

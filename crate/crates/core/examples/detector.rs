//! Evaluates the semantic error detector of each sweep point on a fresh
//! knowledge base and shows the ACK/NACK decision for a few decodings.

use semharq::corpus::detokenize;
use semharq::detector::{auc, evaluate_detector, feedback_decision, ConfidenceDetector};
use semharq::experiment::build_system;
use semharq::knowledge_base::generate_kb;
use semharq::metrics::{accuracy, recall};
use semharq::Result;

mod common;

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let config = common::small_config()?;
    let system = build_system(&config)?;
    let lambda = config.detector.lambda;
    for point in &system.points {
        let channel = config.channel_config().with_snr(point.snr_db);
        let fresh = generate_kb(&system.codec, &channel, &system.corpus.test, 1000, 123)?;
        let counts = evaluate_detector(&point.detector, &fresh.k3, lambda)?;
        println!(
            "snr {:>4} dB  accuracy {:.3}  recall {:.3}  AUC {:.3}  (tp {} fp {} tn {} fn {})",
            point.snr_db,
            accuracy(&counts)?,
            recall(&counts)?,
            auc(&point.detector, &fresh.k3)?,
            counts.tp,
            counts.fp,
            counts.tn,
            counts.fn_,
        );
        for sample in fresh.k3.iter().take(4) {
            let p = point.detector.confidence(&sample.decoded)?;
            println!(
                "  p = {p:.3} {:?} (actually {})  {}",
                feedback_decision(p, lambda),
                if sample.label { "correct" } else { "erroneous" },
                detokenize(&sample.decoded, &system.corpus.vocab)?
            );
        }
    }
    Ok(())
}

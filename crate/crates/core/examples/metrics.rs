//! BLEU with different n-gram weights, the paired bootstrap, and the
//! detector confusion metrics.

use semharq::corpus::{build_vocabulary, tokenize_and_pad};
use semharq::metrics::{accuracy, bleu, mean, paired_bootstrap, recall, BleuConfig, ConfusionCounts};
use semharq::Result;

fn main() -> Result<()> {
    let texts = ["the cat sat on the mat", "the cat sat on a mat", "a dog sat on the mat", "the cat"];
    let vocab = build_vocabulary(&texts)?;
    let s: Vec<_> = texts.iter().map(|t| tokenize_and_pad(t, &vocab, 8)).collect::<Result<_>>()?;
    let unigram = BleuConfig::default();
    let bigram = BleuConfig { weights: vec![0.5, 0.5] };
    for (i, text) in texts.iter().enumerate().skip(1) {
        println!(
            "{text:<22} 1-gram {:.4}  1+2-gram {:.4}",
            bleu(&s[0], &s[i], &unigram),
            bleu(&s[0], &s[i], &bigram)
        );
    }

    // Two schemes scored on the same 400 sentences; b is a little better.
    let a: Vec<f64> = (0..400).map(|i| 0.6 + 0.3 * ((i * 37 % 101) as f64 / 100.0)).collect();
    let b: Vec<f64> = a.iter().enumerate().map(|(i, x)| (x + if i % 3 == 0 { 0.05 } else { -0.01 }).min(1.0)).collect();
    for confidence in [0.9, 0.95, 0.99] {
        let ci = paired_bootstrap(&b, &a, 10_000, confidence, 1)?;
        println!("b - a = {:+.4}, one-sided {confidence} bounds [{:+.4}, {:+.4}]", ci.mean, ci.lower, ci.upper);
    }
    println!("means {:.4} and {:.4}", mean(&a), mean(&b));

    let mut counts = ConfusionCounts::default();
    for (correct, ack) in [(true, true), (true, true), (true, false), (false, false), (false, true), (false, false)] {
        counts.record(correct, ack);
    }
    println!("accuracy {:.3}, recall {:.3} on {:?}", accuracy(&counts)?, recall(&counts)?, counts);
    Ok(())
}

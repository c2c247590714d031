//! Runs the whole pipeline on the small configuration, prints the summary
//! table and a paired comparison of each scheme against NoHarq.
//!
//! A second run reuses every artifact on disk; delete one file under
//! `target/example-runs/small` to see only that stage rebuilt.

use semharq::experiment::pipeline::{pipeline, Layout};
use semharq::experiment::results::paired_column;
use semharq::experiment::{summarize, ResultRow};
use semharq::harq::SchemeVariant;
use semharq::metrics::paired_bootstrap;
use semharq::Result;

mod common;

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let config = common::small_config()?;
    let (system, rows) = pipeline(&config)?;
    println!("rebuilt {} artifact(s); results in {}", system.log.built().len(), Layout::new(&config.output_dir).results().display());

    println!("{:<16} {:>5} {:>6} {:>6} {:>6} {:>5}", "scheme", "snr", "bleu", "sim", "rounds", "ack");
    for s in summarize(&rows) {
        let label = if s.combine_rule == "none" { s.scheme.clone() } else { format!("{}:{}", s.scheme, s.combine_rule) };
        println!(
            "{label:<16} {:>5} {:>6.3} {:>6.3} {:>6.2} {:>5.2}",
            s.snr_db, s.mean_bleu, s.mean_similarity, s.mean_rounds, s.ack_rate
        );
    }

    let bleu = |r: &ResultRow| r.bleu;
    for &snr in &config.channel.snr_db {
        let base = paired_column(&rows, "noharq", snr, bleu);
        for scheme in config.harq.schemes.iter().filter(|s| s.variant() != SchemeVariant::NoHarq) {
            let label = scheme.to_string();
            let other = paired_column(&rows, &label, snr, bleu);
            let ci = paired_bootstrap(&other, &base, 2000, 0.95, 1)?;
            println!("snr {snr:>4}  {label:<16} - noharq {:+.3}  (95% lower bound {:+.3})", ci.mean, ci.lower);
        }
    }
    Ok(())
}

//! Profiles, documents and overrides. Prints the effective configuration
//! after applying `key=value` arguments on top of the chosen profile.
//!
//! `cargo run --example config -- profile=paper channel.snr_db=[0,9,18]`

use semharq::experiment::{parse_override, ExperimentConfig};
use semharq::Result;

fn main() -> Result<()> {
    let overrides = std::env::args().skip(1).map(|a| parse_override(&a)).collect::<Result<Vec<_>>>()?;
    let config = ExperimentConfig::from_str_with_overrides("", &overrides)?;
    print!("{}", config.to_document());

    // Documents round-trip, and unknown keys are rejected.
    assert_eq!(ExperimentConfig::parse(&config.to_document())?, config);
    match ExperimentConfig::parse("codec.epoch = 3") {
        Err(e) => eprintln!("rejected as expected: {e}"),
        Ok(_) => unreachable!("a misspelled key was accepted"),
    }
    Ok(())
}

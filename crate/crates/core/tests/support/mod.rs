//! Shared by the integration tests and the acceptance run.
#![allow(dead_code)]

pub mod gradients;
pub mod invariants;

use std::path::Path;

use semharq::experiment::ExperimentConfig;

/// Small enough for the whole pipeline to run in under a minute.
pub fn tiny_config(dir: &Path) -> ExperimentConfig {
    let mut c = ExperimentConfig::desk();
    c.corpus.train_sentences = 300;
    c.corpus.test_sentences = 12;
    c.corpus.max_len = 6;
    c.codec.epochs = 300;
    c.embedder.epochs = 2;
    c.kb.transmissions = 80;
    c.reconstructor.discriminator_epochs = 2;
    c.reconstructor.generator_epochs = 2;
    c.detector.epochs = 2;
    c.detector.embed_dim = 8;
    c.detector.heads = 2;
    c.detector.ff_dim = 8;
    // A codec this undertrained only yields both knowledge-base labels at high SNR.
    c.channel.snr_db = vec![10.0, 30.0];
    c.output_dir = dir.to_path_buf();
    c
}

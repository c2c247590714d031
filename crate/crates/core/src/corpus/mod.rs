//! Vocabulary, tokenization, the synthetic corpus and synonym tables.

mod synonyms;
mod synthetic;
mod vocab;

use std::fs;
use std::path::Path;

pub use synonyms::{SynonymClasses, SynonymTable};
pub use synthetic::{generate_synthetic_corpus, Lexicon, Pos, SyntheticCorpus};
pub use vocab::{build_vocabulary, detokenize, tokenize_and_pad, Sentence, Vocabulary, END, PAD, START};

use crate::error::{Error, Result};

/// Reads a UTF-8 corpus file with one sentence per line. Blank lines are skipped
/// and runs of whitespace collapse to single spaces.
pub fn load_corpus_file(path: &Path) -> Result<Vec<String>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(text
        .lines()
        .map(|l| l.split_whitespace().collect::<Vec<_>>().join(" "))
        .filter(|l| !l.is_empty())
        .collect())
}

pub fn save_corpus_file(path: &Path, sentences: &[String]) -> Result<()> {
    let mut text = String::with_capacity(sentences.iter().map(|s| s.len() + 1).sum());
    for s in sentences {
        text.push_str(s);
        text.push('\n');
    }
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

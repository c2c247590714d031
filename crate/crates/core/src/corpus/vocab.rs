use std::collections::HashMap;

use crate::error::{Error, Result};

pub const PAD: &str = "<pad>";
pub const START: &str = "<start>";
pub const END: &str = "<end>";

/// Token table. Special symbols occupy ids 0..3, corpus words follow in
/// order of decreasing frequency with ties broken lexicographically.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Vocabulary {
    tokens: Vec<String>,
    index: HashMap<String, usize>,
}

impl Vocabulary {
    pub const PAD_ID: usize = 0;
    pub const START_ID: usize = 1;
    pub const END_ID: usize = 2;

    pub fn size(&self) -> usize {
        self.tokens.len()
    }

    pub fn pad(&self) -> usize {
        Self::PAD_ID
    }

    pub fn id(&self, word: &str) -> Option<usize> {
        self.index.get(word).copied()
    }

    pub fn token(&self, id: usize) -> Option<&str> {
        self.tokens.get(id).map(String::as_str)
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn is_special(&self, id: usize) -> bool {
        id < 3
    }
}

/// Builds a deterministic vocabulary from whitespace-tokenized sentences.
pub fn build_vocabulary<S: AsRef<str>>(sentences: &[S]) -> Result<Vocabulary> {
    if sentences.is_empty() {
        return Err(Error::Input("cannot build a vocabulary from an empty corpus".into()));
    }
    let mut counts: HashMap<&str, usize> = HashMap::new();
    for s in sentences {
        for w in s.as_ref().split_whitespace() {
            *counts.entry(w).or_default() += 1;
        }
    }
    if counts.is_empty() {
        return Err(Error::Input("corpus contains no words".into()));
    }
    let mut words: Vec<(&str, usize)> = counts.into_iter().collect();
    words.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));

    let mut tokens: Vec<String> = vec![PAD.into(), START.into(), END.into()];
    for (w, _) in words {
        if w == PAD || w == START || w == END {
            return Err(Error::Input(format!("corpus uses reserved symbol {w}")));
        }
        tokens.push(w.to_string());
    }
    let index = tokens.iter().enumerate().map(|(i, t)| (t.clone(), i)).collect();
    Ok(Vocabulary { tokens, index })
}

/// A padded sequence of exactly `L` token ids.
///
/// `true_length` counts the leading non-padding positions. Decoded output can
/// have `true_length == 0` when every position decodes to padding.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Sentence {
    pub ids: Vec<usize>,
    pub true_length: usize,
}

impl Sentence {
    /// Pads `words` to `max_len` with the padding id.
    pub fn from_ids(words: &[usize], max_len: usize) -> Result<Self> {
        if words.len() > max_len {
            return Err(Error::Input(format!(
                "sentence of {} tokens exceeds maximum length {max_len}",
                words.len()
            )));
        }
        let mut ids = words.to_vec();
        ids.resize(max_len, Vocabulary::PAD_ID);
        Ok(Self {
            ids,
            true_length: words.len(),
        })
    }

    pub fn max_len(&self) -> usize {
        self.ids.len()
    }

    /// The unpadded words.
    pub fn words(&self) -> &[usize] {
        &self.ids[..self.true_length]
    }
}

/// Splits `text` on whitespace, maps words to ids and pads to `max_len`.
pub fn tokenize_and_pad(text: &str, vocab: &Vocabulary, max_len: usize) -> Result<Sentence> {
    let ids = text
        .split_whitespace()
        .map(|w| vocab.id(w).ok_or_else(|| Error::OutOfVocabulary(w.to_string())))
        .collect::<Result<Vec<_>>>()?;
    if ids.is_empty() {
        return Err(Error::Input("empty sentence".into()));
    }
    Sentence::from_ids(&ids, max_len)
}

/// Joins the non-padding tokens with single spaces.
pub fn detokenize(sentence: &Sentence, vocab: &Vocabulary) -> Result<String> {
    let mut words = Vec::with_capacity(sentence.true_length);
    for &id in &sentence.ids {
        if id == Vocabulary::PAD_ID {
            continue;
        }
        let tok = vocab.token(id).ok_or(Error::InvalidId { id, size: vocab.size() })?;
        words.push(tok);
    }
    Ok(words.join(" "))
}

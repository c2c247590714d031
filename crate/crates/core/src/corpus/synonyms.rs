use std::borrow::Cow;
use std::fs;
use std::path::Path;

use super::Vocabulary;
use crate::error::{Error, Result};

/// Word-level synonym classes; the first word of each class is its head.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SynonymClasses {
    pub classes: Vec<Vec<String>>,
}

impl SynonymClasses {
    /// One class per non-empty line, words separated by whitespace.
    pub fn parse(text: &str) -> Self {
        let classes = text
            .lines()
            .map(|l| l.split_whitespace().map(str::to_string).collect::<Vec<_>>())
            .filter(|c| !c.is_empty())
            .collect();
        Self { classes }
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for c in &self.classes {
            out.push_str(&c.join(" "));
            out.push('\n');
        }
        out
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(Self::parse(&text))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }
}

/// Per-token ordered synonym lists `[w, w¹, …, wᴶ]` over vocabulary ids.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SynonymTable {
    lists: Vec<Vec<usize>>,
    class_of: Vec<usize>,
}

impl SynonymTable {
    /// Every token maps to its own singleton list.
    pub fn identity(vocab_size: usize) -> Self {
        Self {
            lists: (0..vocab_size).map(|i| vec![i]).collect(),
            class_of: (0..vocab_size).collect(),
        }
    }

    /// Restricts the word classes to in-vocabulary words. Each word's list
    /// starts with the word itself followed by the rest of its class in class
    /// order. Words outside every class keep singleton lists.
    pub fn build(classes: &SynonymClasses, vocab: &Vocabulary) -> Result<Self> {
        let mut table = Self::identity(vocab.size());
        let mut seen = vec![false; vocab.size()];
        for class in &classes.classes {
            let ids: Vec<usize> = class.iter().filter_map(|w| vocab.id(w)).collect();
            let Some(&head) = ids.first() else { continue };
            for &id in &ids {
                if seen[id] {
                    return Err(Error::Input(format!(
                        "word {:?} appears in more than one synonym class",
                        vocab.token(id).unwrap_or_default()
                    )));
                }
                seen[id] = true;
            }
            for &id in &ids {
                let mut list = vec![id];
                list.extend(ids.iter().copied().filter(|&o| o != id));
                table.lists[id] = list;
                table.class_of[id] = head;
            }
        }
        Ok(table)
    }

    pub fn len(&self) -> usize {
        self.lists.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lists.is_empty()
    }

    /// `W_i`; unknown ids yield `[word_id]` so the list is never empty.
    pub fn synonyms_of(&self, word_id: usize) -> Cow<'_, [usize]> {
        match self.lists.get(word_id) {
            Some(list) => Cow::Borrowed(list),
            None => Cow::Owned(vec![word_id]),
        }
    }

    /// Number of alternatives `J_i` (list length minus one).
    pub fn alternatives(&self, word_id: usize) -> usize {
        self.synonyms_of(word_id).len() - 1
    }

    /// Class head shared by all synonyms of `word_id`; its meaning label.
    pub fn meaning(&self, word_id: usize) -> usize {
        self.class_of.get(word_id).copied().unwrap_or(word_id)
    }
}

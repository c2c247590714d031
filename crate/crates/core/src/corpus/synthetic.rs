//! Synonym-rich synthetic English-like corpus.
//!
//! Sentences follow the part-of-speech pattern
//! `[DET ADJ* NOUN] VERB [DET ADJ* NOUN] (PREP DET ADJ* NOUN)* [ADV]`.
//! Every word belongs to exactly one synonym class and classes never cross
//! parts of speech, so swapping a word for a synonym keeps the sentence in
//! the grammar and keeps its meaning (the sequence of class heads).

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::SynonymClasses;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Pos {
    Det,
    Adj,
    Noun,
    Verb,
    Prep,
    Adv,
}

const DETERMINERS: &[&[&str]] = &[
    &["the"],
    &["a", "one"],
    &["this"],
    &["that"],
    &["every", "each"],
    &["some", "several"],
    &["my", "our"],
];

const ADJECTIVES: &[&[&str]] = &[
    &["big", "large", "huge", "great"],
    &["small", "little", "tiny"],
    &["old", "ancient", "aged"],
    &["new", "fresh", "novel"],
    &["red"],
    &["blue"],
    &["green"],
    &["bright", "shiny", "brilliant"],
    &["dark", "dim", "gloomy"],
    &["happy", "glad", "cheerful", "joyful"],
    &["sad", "unhappy"],
    &["quick", "rapid", "speedy"],
    &["slow", "sluggish"],
    &["clean", "tidy", "neat"],
    &["dirty", "filthy"],
    &["strong", "powerful", "mighty"],
    &["calm", "peaceful", "tranquil"],
    &["smart", "clever", "wise"],
    &["strange", "odd", "weird", "unusual"],
    &["pretty", "beautiful", "lovely"],
];

const NOUNS: &[&[&str]] = &[
    &["car", "automobile", "vehicle"],
    &["truck", "lorry"],
    &["bus", "coach"],
    &["road", "street", "avenue"],
    &["house", "home", "dwelling"],
    &["city", "town"],
    &["dog", "hound", "puppy"],
    &["cat", "kitten"],
    &["bird"],
    &["man", "guy", "fellow"],
    &["woman", "lady"],
    &["child", "kid", "youngster"],
    &["teacher", "tutor", "instructor"],
    &["driver", "chauffeur"],
    &["friend", "pal", "buddy"],
    &["river", "stream", "creek"],
    &["forest", "woods", "woodland"],
    &["garden", "yard"],
    &["station", "depot"],
    &["shop", "store"],
    &["book", "volume", "tome"],
    &["letter", "note", "message"],
    &["signal"],
    &["door", "gate"],
    &["table", "desk"],
    &["ship", "boat", "vessel"],
    &["train"],
    &["plane", "aircraft", "airplane"],
    &["school", "academy"],
    &["map", "chart"],
    &["box", "crate", "case"],
];

const VERBS: &[&[&str]] = &[
    &["sees", "watches", "observes", "views"],
    &["finds", "discovers", "locates"],
    &["takes", "grabs", "seizes"],
    &["makes", "builds", "creates", "constructs"],
    &["likes", "enjoys", "loves"],
    &["needs", "requires"],
    &["helps", "aids", "assists"],
    &["carries", "holds", "bears"],
    &["sends", "transmits", "dispatches"],
    &["follows", "tracks", "chases"],
    &["leaves", "exits", "departs"],
    &["stops", "halts"],
    &["moves", "shifts"],
    &["buys", "purchases"],
    &["passes", "overtakes"],
    &["meets", "greets"],
    &["runs", "sprints", "dashes"],
    &["checks", "inspects", "examines"],
];

const PREPOSITIONS: &[&[&str]] = &[
    &["in", "inside"],
    &["on", "upon"],
    &["near", "beside", "by"],
    &["with"],
    &["under", "below", "beneath"],
    &["behind"],
    &["from"],
    &["over", "above"],
];

const ADVERBS: &[&[&str]] = &[
    &["quickly", "rapidly", "fast", "swiftly"],
    &["slowly"],
    &["quietly", "silently", "softly"],
    &["often", "frequently"],
    &["rarely", "seldom"],
    &["again"],
    &["carefully", "cautiously"],
    &["suddenly", "abruptly"],
];

/// The fixed word inventory of the synthetic grammar.
#[derive(Clone, Debug)]
pub struct Lexicon {
    words: Vec<(Pos, Vec<&'static str>)>,
}

impl Default for Lexicon {
    fn default() -> Self {
        Self::new()
    }
}

impl Lexicon {
    pub fn new() -> Self {
        let groups: [(Pos, &[&[&str]]); 6] = [
            (Pos::Det, DETERMINERS),
            (Pos::Adj, ADJECTIVES),
            (Pos::Noun, NOUNS),
            (Pos::Verb, VERBS),
            (Pos::Prep, PREPOSITIONS),
            (Pos::Adv, ADVERBS),
        ];
        let words = groups
            .iter()
            .map(|(pos, classes)| (*pos, classes.iter().flat_map(|c| c.iter().copied()).collect()))
            .collect();
        Self { words }
    }

    fn words_for(&self, pos: Pos) -> &[&'static str] {
        &self.words.iter().find(|(p, _)| *p == pos).expect("every pos listed").1
    }

    pub fn pos_of(&self, word: &str) -> Option<Pos> {
        self.words
            .iter()
            .find(|(_, ws)| ws.contains(&word))
            .map(|(p, _)| *p)
    }

    pub fn word_count(&self) -> usize {
        self.words.iter().map(|(_, w)| w.len()).sum()
    }

    /// All synonym classes, determiners first.
    pub fn synonym_classes(&self) -> SynonymClasses {
        let classes = [DETERMINERS, ADJECTIVES, NOUNS, VERBS, PREPOSITIONS, ADVERBS]
            .iter()
            .flat_map(|g| g.iter())
            .map(|c| c.iter().map(|w| w.to_string()).collect())
            .collect();
        SynonymClasses { classes }
    }
}

/// Sentences plus the word-level synonym classes they draw from.
#[derive(Clone, Debug)]
pub struct SyntheticCorpus {
    pub sentences: Vec<String>,
    pub synonyms: SynonymClasses,
}

/// Generates `n_sentences` grammar sentences whose word counts are drawn
/// uniformly from `min_len..=max_len`. Pure function of its arguments.
pub fn generate_synthetic_corpus(seed: u64, n_sentences: usize, min_len: usize, max_len: usize) -> Result<SyntheticCorpus> {
    if min_len == 0 || min_len > max_len {
        return Err(Error::Input(format!("invalid length range {min_len}..={max_len}")));
    }
    let lexicon = Lexicon::new();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sentences = (0..n_sentences)
        .map(|_| {
            let n = rng.gen_range(min_len..=max_len);
            sentence_pattern(n, &mut rng)
                .into_iter()
                .map(|pos| *lexicon.words_for(pos).choose(&mut rng).expect("non-empty"))
                .collect::<Vec<_>>()
                .join(" ")
        })
        .collect();
    Ok(SyntheticCorpus {
        sentences,
        synonyms: lexicon.synonym_classes(),
    })
}

/// A part-of-speech sequence of exactly `n` tags.
fn sentence_pattern<R: Rng>(n: usize, rng: &mut R) -> Vec<Pos> {
    match n {
        0 => return Vec::new(),
        1 => return vec![Pos::Verb],
        2 => return vec![Pos::Verb, Pos::Adv],
        _ => {}
    }
    // Adjective counts for subject, object and each prepositional phrase.
    let mut subject_adj = 0usize;
    let mut object: Option<usize> = None;
    let mut phrases: Vec<usize> = Vec::new();
    let mut adverb = false;
    let mut remaining = n - 3;

    while remaining > 0 {
        let mut options = Vec::with_capacity(4);
        if remaining >= 3 {
            options.push(0);
        }
        if remaining >= 2 && object.is_none() {
            options.push(1);
        }
        if !adverb {
            options.push(2);
        }
        options.push(3);
        match *options.choose(rng).expect("adjective option always present") {
            0 => {
                phrases.push(0);
                remaining -= 3;
            }
            1 => {
                object = Some(0);
                remaining -= 2;
            }
            2 => {
                adverb = true;
                remaining -= 1;
            }
            _ => {
                let slots = 1 + usize::from(object.is_some()) + phrases.len();
                match rng.gen_range(0..slots) {
                    0 => subject_adj += 1,
                    1 if object.is_some() => *object.as_mut().expect("checked") += 1,
                    k => phrases[k - 1 - usize::from(object.is_some())] += 1,
                }
                remaining -= 1;
            }
        }
    }

    let noun_phrase = |adj: usize, out: &mut Vec<Pos>| {
        out.push(Pos::Det);
        out.extend(std::iter::repeat_n(Pos::Adj, adj));
        out.push(Pos::Noun);
    };
    let mut out = Vec::with_capacity(n);
    noun_phrase(subject_adj, &mut out);
    out.push(Pos::Verb);
    if let Some(adj) = object {
        noun_phrase(adj, &mut out);
    }
    for adj in phrases {
        out.push(Pos::Prep);
        noun_phrase(adj, &mut out);
    }
    if adverb {
        out.push(Pos::Adv);
    }
    out
}

#[cfg(test)]
mod tests {
    use std::collections::HashSet;

    use super::*;
    use crate::corpus::{build_vocabulary, detokenize, tokenize_and_pad, SynonymTable};

    /// Independent membership check for the corpus grammar.
    fn grammatical(tags: &[Pos]) -> bool {
        fn noun_phrase(t: &[Pos], mut i: usize) -> Option<usize> {
            if t.get(i) != Some(&Pos::Det) {
                return None;
            }
            i += 1;
            while t.get(i) == Some(&Pos::Adj) {
                i += 1;
            }
            (t.get(i) == Some(&Pos::Noun)).then_some(i + 1)
        }
        let mut i = noun_phrase(tags, 0).unwrap_or(0);
        if tags.get(i) != Some(&Pos::Verb) {
            return false;
        }
        i += 1;
        if let Some(j) = noun_phrase(tags, i) {
            i = j;
        }
        while tags.get(i) == Some(&Pos::Prep) {
            match noun_phrase(tags, i + 1) {
                Some(j) => i = j,
                None => return false,
            }
        }
        if tags.get(i) == Some(&Pos::Adv) {
            i += 1;
        }
        i == tags.len()
    }

    fn tags(lex: &Lexicon, sentence: &str) -> Vec<Pos> {
        sentence.split_whitespace().map(|w| lex.pos_of(w).unwrap()).collect()
    }

    #[test]
    fn lexicon_words_are_unique_and_about_two_hundred() {
        let lex = Lexicon::new();
        let all: Vec<String> = lex.synonym_classes().classes.concat();
        let unique: HashSet<&String> = all.iter().collect();
        assert_eq!(all.len(), unique.len());
        assert!((180..=260).contains(&lex.word_count()), "{}", lex.word_count());
        for class in lex.synonym_classes().classes {
            assert!((1..=4).contains(&class.len()));
        }
    }

    #[test]
    fn generation_is_deterministic_and_in_range() {
        let a = generate_synthetic_corpus(7, 10, 4, 12).unwrap();
        let b = generate_synthetic_corpus(7, 10, 4, 12).unwrap();
        assert_eq!(a.sentences, b.sentences);
        let c = generate_synthetic_corpus(8, 10, 4, 12).unwrap();
        assert_ne!(a.sentences, c.sentences);
        let wide = generate_synthetic_corpus(1, 500, 1, 30).unwrap();
        for s in &wide.sentences {
            let n = s.split_whitespace().count();
            assert!((1..=30).contains(&n));
        }
    }

    #[test]
    fn every_length_is_reachable_and_grammatical() {
        let lex = Lexicon::new();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for n in 1..=30 {
            for _ in 0..20 {
                let p = sentence_pattern(n, &mut rng);
                assert_eq!(p.len(), n);
                assert!(grammatical(&p), "{p:?}");
            }
        }
        let corpus = generate_synthetic_corpus(11, 300, 1, 30).unwrap();
        for s in &corpus.sentences {
            assert!(grammatical(&tags(&lex, s)), "{s}");
        }
    }

    #[test]
    fn synonym_substitution_stays_in_grammar() {
        let lex = Lexicon::new();
        let corpus = generate_synthetic_corpus(5, 100, 4, 12).unwrap();
        for s in &corpus.sentences {
            let words: Vec<&str> = s.split_whitespace().collect();
            for (i, w) in words.iter().enumerate() {
                let class = corpus.synonyms.classes.iter().find(|c| c.iter().any(|x| x == w)).unwrap();
                for alt in class {
                    let mut swapped = words.clone();
                    swapped[i] = alt;
                    assert!(grammatical(&tags(&lex, &swapped.join(" "))));
                }
            }
        }
    }

    #[test]
    fn vocabulary_covers_corpus_exactly_once() {
        let corpus = generate_synthetic_corpus(2, 100, 4, 12).unwrap();
        let vocab = build_vocabulary(&corpus.sentences).unwrap();
        let corpus_words: HashSet<&str> = corpus.sentences.iter().flat_map(|s| s.split_whitespace()).collect();
        let vocab_words: Vec<&str> = vocab.tokens()[3..].iter().map(String::as_str).collect();
        assert_eq!(vocab_words.len(), corpus_words.len());
        assert_eq!(vocab_words.iter().copied().collect::<HashSet<_>>(), corpus_words);
    }

    #[test]
    fn round_trip_on_corpus() {
        let corpus = generate_synthetic_corpus(4, 200, 4, 12).unwrap();
        let vocab = build_vocabulary(&corpus.sentences).unwrap();
        for s in &corpus.sentences {
            let t = tokenize_and_pad(s, &vocab, 12).unwrap();
            assert_eq!(&detokenize(&t, &vocab).unwrap(), s);
        }
    }

    #[test]
    fn synonym_table_contract() {
        let corpus = generate_synthetic_corpus(9, 3000, 4, 12).unwrap();
        let vocab = build_vocabulary(&corpus.sentences).unwrap();
        let table = SynonymTable::build(&corpus.synonyms, &vocab).unwrap();
        assert_eq!(table.synonyms_of(Vocabulary::PAD_ID).as_ref(), &[Vocabulary::PAD_ID]);
        assert_eq!(table.synonyms_of(100_000).as_ref(), &[100_000]);
        let big = vocab.id("big").unwrap();
        let list = table.synonyms_of(big);
        assert_eq!(list.len(), 4);
        assert_eq!(list[0], big);
        let sees = vocab.id("finds").unwrap();
        assert_eq!(table.synonyms_of(sees).len(), 3);
        for id in 0..vocab.size() {
            let list = table.synonyms_of(id);
            assert_eq!(list[0], id);
            let set: HashSet<usize> = list.iter().copied().collect();
            for &other in list.iter() {
                // symmetric, reflexive, same class
                let back: HashSet<usize> = table.synonyms_of(other).iter().copied().collect();
                assert_eq!(back, set);
                assert_eq!(table.meaning(other), table.meaning(id));
            }
        }
    }

    #[test]
    fn invalid_range_rejected() {
        assert!(generate_synthetic_corpus(0, 5, 0, 3).is_err());
        assert!(generate_synthetic_corpus(0, 5, 4, 3).is_err());
    }

    use crate::corpus::Vocabulary;
}

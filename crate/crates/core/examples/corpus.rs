//! Generates the synthetic corpus, builds its vocabulary and synonym table,
//! and round-trips a few sentences through token ids.

use semharq::corpus::{
    build_vocabulary, detokenize, generate_synthetic_corpus, tokenize_and_pad, SynonymTable,
};
use semharq::Result;

fn main() -> Result<()> {
    let corpus = generate_synthetic_corpus(7, 500, 4, 12)?;
    let vocab = build_vocabulary(&corpus.sentences)?;
    let synonyms = SynonymTable::build(&corpus.synonyms, &vocab)?;
    println!("{} sentences, {} tokens in the vocabulary", corpus.sentences.len(), vocab.size());

    for text in corpus.sentences.iter().take(4) {
        let s = tokenize_and_pad(text, &vocab, 12)?;
        println!("{text}");
        println!("  ids {:?} (length {})", s.ids, s.true_length);
        let alternatives: Vec<String> = s
            .words()
            .iter()
            .filter(|&&w| synonyms.alternatives(w) > 0)
            .map(|&w| {
                let alts: Vec<&str> = synonyms.synonyms_of(w).iter().filter_map(|&a| vocab.token(a)).collect();
                format!("{}: {}", vocab.token(w).unwrap_or("?"), alts.join("/"))
            })
            .collect();
        println!("  synonyms {}", alternatives.join(", "));
        assert_eq!(&detokenize(&s, &vocab)?, text);
    }
    Ok(())
}

//! Trains skip-gram embeddings on a synthetic corpus and lists the
//! nearest neighbours of a few words.

use sentilex::eval::{generate, SyntheticConfig};
use sentilex::lexicon::tokenize;
use sentilex::nn::{build_vocab, train_embeddings, SkipGramParams};

fn main() -> sentilex::Result<()> {
    let corpus = generate(&SyntheticConfig { mentions: 2000, seed: 4, ..SyntheticConfig::default() })?;
    let sentences: Vec<Vec<String>> = corpus.records.iter().map(|r| tokenize(&r.masked_text())).collect();
    let vocab = build_vocab(&sentences, 500)?;
    let encoded: Vec<Vec<usize>> = sentences.iter().map(|s| s.iter().map(|t| vocab.id(t)).collect()).collect();
    let embedding = train_embeddings(&encoded, vocab.len(), &SkipGramParams { dim: 24, epochs: 10, ..SkipGramParams::default() })?;

    let probes: Vec<&str> = corpus.truth.words().map(|(t, _)| t).take(3).chain(corpus.truth.adverbs().map(|(t, _)| t).take(1)).collect();
    for word in probes {
        let Some(id) = vocab.get(word) else { continue };
        let mut near: Vec<(f64, &str)> = (2..vocab.len())
            .filter(|&j| j != id)
            .map(|j| (embedding.cosine(id, j), vocab.term(j).unwrap_or("?")))
            .collect();
        near.sort_by(|a, b| b.0.total_cmp(&a.0));
        let shown: Vec<String> = near.iter().take(5).map(|(c, t)| format!("{t} {c:.2}")).collect();
        println!("{word:<12} {}", shown.join(", "));
    }
    Ok(())
}

//! Learns word and adverb scores from a synthetic corpus and compares
//! them with the scores it was generated from.

use sentilex::eval::{generate, SyntheticConfig};
use sentilex::learner::{train_iterative, LearningConfig};
use sentilex::lexicon::Mention;

fn main() -> sentilex::Result<()> {
    let corpus = generate(&SyntheticConfig { mentions: 500, class_mix: [0.5, 0.5, 0.0], seed: 1, ..SyntheticConfig::default() })?;
    let mentions: Vec<Mention> = corpus.records.iter().map(|r| r.to_mention(&corpus.seed_lexicon)).collect();
    let config = LearningConfig { max_outer_iterations: 20, ..LearningConfig::default() }.with_lambda(1e-6);
    let trace = train_iterative(&mentions, &corpus.seed_lexicon, &config)?;

    for (i, it) in trace.iterations.iter().enumerate() {
        println!("iteration {:>2}: adverb objective {:.3e}, word objective {:.3e}", i + 1, it.adverb_objective, it.word_objective);
    }
    println!("\n{:<12}{:>8}{:>10}", "term", "true", "learned");
    for (term, entry) in corpus.truth.words() {
        println!("{term:<12}{:>8.3}{:>10.3}", entry.score, trace.lexicon.word(term).map_or(f64::NAN, |w| w.score));
    }
    for (term, score) in corpus.truth.adverbs() {
        println!("{term:<12}{score:>8.3}{:>10.3}", trace.lexicon.adverb_score(term).unwrap_or(f64::NAN));
    }
    Ok(())
}

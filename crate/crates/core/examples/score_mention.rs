//! Scores a few mentions against a hand-written lexicon.

use sentilex::lexicon::{extract_pairs, mask_target, score_mention, tokenize, Lexicon};

fn main() -> sentilex::Result<()> {
    let lexicon = Lexicon::new()
        .with_word("beautiful", 0.75)?
        .with_word("sluggish", -0.6)?
        .with_word("great", 0.9)?
        .with_adverb("very", 1.5)?
        .with_adverb("slightly", 0.5)?;

    for text in [
        "S5 is very beautiful",
        "The camera is great but the S5 is slightly sluggish",
        "Nothing to say about the S5",
    ] {
        let masked = mask_target(text, "S5");
        let pairs = extract_pairs(&tokenize(&masked), &lexicon);
        let score = score_mention(&pairs, &lexicon)?;
        let shown: Vec<String> =
            pairs.iter().map(|p| format!("{}{}", p.adverb.as_deref().map(|a| format!("{a} ")).unwrap_or_default(), p.word)).collect();
        println!("{score:+.3}  [{}]  {masked}", shown.join(", "));
    }
    Ok(())
}

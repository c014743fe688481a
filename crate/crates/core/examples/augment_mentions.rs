//! Generates substitution and polarity-flip variants of a comparative
//! mention.

use sentilex::augment::{augment, AugmentConfig};
use sentilex::label::Label;
use sentilex::lexicon::{mask_target, Lexicon, Mention, Polarity};

fn main() -> sentilex::Result<()> {
    let mut lexicon = Lexicon::new();
    for w in ["horrible", "poor", "terrible"] {
        lexicon.insert_word(w, Polarity::Negative, -1.0)?;
    }
    for w in ["great", "amazing"] {
        lexicon.insert_word(w, Polarity::Positive, 1.0)?;
    }

    let text = mask_target("Company A is better than Company B. Company B is horrible.", "Company B");
    let mention = Mention::new(&text, Label::Negative, None, &lexicon);
    println!("{:<9} {text}", mention.label);
    for v in augment(&mention, &lexicon, &AugmentConfig::default())? {
        println!("{:<9} {}    ({})", v.label, v.text, v.substitution.describe());
    }
    Ok(())
}

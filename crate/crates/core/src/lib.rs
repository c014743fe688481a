//! Sentiment lexicons with learned scores, label-aware augmentation and a
//! small convolutional classifier trained with a penalty-weighted loss.
//!
//! ```
//! use sentilex::lexicon::{extract_pairs, score_mention, tokenize, Lexicon};
//!
//! let lex = Lexicon::new().with_word("beautiful", 0.75)?.with_adverb("very", 1.5)?;
//! let tokens = tokenize("S5 is very beautiful");
//! assert_eq!(score_mention(&extract_pairs(&tokens, &lex), &lex)?, 1.125);
//! # Ok::<(), sentilex::Error>(())
//! ```

pub mod augment;
pub mod cli;
pub mod error;
pub mod eval;
pub mod io;
pub mod label;
pub mod learner;
pub mod lexicon;
pub mod loss;
pub mod nn;
pub mod qp;
pub mod rng;

pub use error::{Error, Result};
pub use label::Label;
pub use lexicon::{Lexicon, Mention};

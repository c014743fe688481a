//! Sentiment dictionary, tokenization, adverb/word pair extraction and
//! mention scoring.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::Range;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::label::Label;

/// Literal replacing the entity under analysis.
pub const TARGET_TOKEN: &str = "TARGET";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Polarity {
    Positive,
    Negative,
}

impl Polarity {
    pub fn sign(self) -> f64 {
        match self {
            Polarity::Positive => 1.0,
            Polarity::Negative => -1.0,
        }
    }

    pub fn opposite(self) -> Polarity {
        match self {
            Polarity::Positive => Polarity::Negative,
            Polarity::Negative => Polarity::Positive,
        }
    }

    pub fn of_score(score: f64) -> Option<Polarity> {
        if score > 0.0 {
            Some(Polarity::Positive)
        } else if score < 0.0 {
            Some(Polarity::Negative)
        } else {
            None
        }
    }

    pub fn label(self) -> Label {
        match self {
            Polarity::Positive => Label::Positive,
            Polarity::Negative => Label::Negative,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Polarity::Positive => "positive",
            Polarity::Negative => "negative",
        }
    }
}

impl fmt::Display for Polarity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Polarity {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "positive" | "pos" | "+" => Ok(Polarity::Positive),
            "negative" | "neg" | "-" => Ok(Polarity::Negative),
            other => Err(Error::InvalidArgument(format!("unknown polarity `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WordEntry {
    pub score: f64,
    pub polarity: Polarity,
}

/// Sentiment words with signed scores and adverbs with non-negative
/// multiplicative scores.
///
/// Every term is a single token as produced by [`tokenize`]. A term lives in
/// at most one of the two maps. Positive words score `> 0`, negative words
/// `< 0`, adverbs `>= 0`; all mutators enforce this.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Lexicon {
    words: BTreeMap<String, WordEntry>,
    adverbs: BTreeMap<String, f64>,
}

impl Lexicon {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert_word(&mut self, term: &str, polarity: Polarity, score: f64) -> Result<()> {
        let term = normalize_term(term)?;
        if self.adverbs.contains_key(&term) {
            return Err(Error::InvalidLexicon(format!("`{term}` is already an adverb")));
        }
        check_word_score(&term, polarity, score)?;
        self.words.insert(term, WordEntry { score, polarity });
        Ok(())
    }

    pub fn insert_adverb(&mut self, term: &str, score: f64) -> Result<()> {
        let term = normalize_term(term)?;
        if self.words.contains_key(&term) {
            return Err(Error::InvalidLexicon(format!("`{term}` is already a sentiment word")));
        }
        check_adverb_score(&term, score)?;
        self.adverbs.insert(term, score);
        Ok(())
    }

    /// Builder-style helper; polarity follows the sign of `score`.
    pub fn with_word(mut self, term: &str, score: f64) -> Result<Self> {
        let polarity = Polarity::of_score(score)
            .ok_or_else(|| Error::InvalidLexicon(format!("word `{term}` has zero score")))?;
        self.insert_word(term, polarity, score)?;
        Ok(self)
    }

    pub fn with_adverb(mut self, term: &str, score: f64) -> Result<Self> {
        self.insert_adverb(term, score)?;
        Ok(self)
    }

    pub fn set_word_score(&mut self, term: &str, score: f64) -> Result<()> {
        let entry = self
            .words
            .get_mut(term)
            .ok_or_else(|| Error::UnknownTerm(term.to_string()))?;
        check_word_score(term, entry.polarity, score)?;
        entry.score = score;
        Ok(())
    }

    pub fn set_adverb_score(&mut self, term: &str, score: f64) -> Result<()> {
        check_adverb_score(term, score)?;
        let slot = self
            .adverbs
            .get_mut(term)
            .ok_or_else(|| Error::UnknownTerm(term.to_string()))?;
        *slot = score;
        Ok(())
    }

    pub fn word(&self, term: &str) -> Option<&WordEntry> {
        self.words.get(term)
    }

    pub fn adverb_score(&self, term: &str) -> Option<f64> {
        self.adverbs.get(term).copied()
    }

    pub fn is_word(&self, term: &str) -> bool {
        self.words.contains_key(term)
    }

    pub fn is_adverb(&self, term: &str) -> bool {
        self.adverbs.contains_key(term)
    }

    /// Words in lexicographic order.
    pub fn words(&self) -> impl Iterator<Item = (&str, &WordEntry)> {
        self.words.iter().map(|(k, v)| (k.as_str(), v))
    }

    /// Adverbs in lexicographic order.
    pub fn adverbs(&self) -> impl Iterator<Item = (&str, f64)> {
        self.adverbs.iter().map(|(k, v)| (k.as_str(), *v))
    }

    pub fn word_count(&self) -> usize {
        self.words.len()
    }

    pub fn adverb_count(&self) -> usize {
        self.adverbs.len()
    }
}

fn normalize_term(term: &str) -> Result<String> {
    let tokens = tokenize(term);
    match tokens.as_slice() {
        [single] => Ok(single.clone()),
        _ => Err(Error::InvalidLexicon(format!(
            "term `{term}` must be exactly one token"
        ))),
    }
}

fn check_word_score(term: &str, polarity: Polarity, score: f64) -> Result<()> {
    let ok = score.is_finite()
        && match polarity {
            Polarity::Positive => score > 0.0,
            Polarity::Negative => score < 0.0,
        };
    if ok {
        Ok(())
    } else {
        Err(Error::InvalidLexicon(format!(
            "{polarity} word `{term}` cannot have score {score}"
        )))
    }
}

fn check_adverb_score(term: &str, score: f64) -> Result<()> {
    if score.is_finite() && score >= 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidLexicon(format!("adverb `{term}` cannot have score {score}")))
    }
}

/// A lowercased token and the byte range it came from in the source text.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub text: String,
    pub span: Range<usize>,
}

/// Splits on every non-alphanumeric character and lowercases.
pub fn tokenize_with_spans(text: &str) -> Vec<Token> {
    let mut tokens = Vec::new();
    let mut start = None;
    for (i, c) in text.char_indices() {
        match (c.is_alphanumeric(), start) {
            (true, None) => start = Some(i),
            (false, Some(s)) => {
                tokens.push(Token { text: text[s..i].to_lowercase(), span: s..i });
                start = None;
            }
            _ => {}
        }
    }
    if let Some(s) = start {
        tokens.push(Token { text: text[s..].to_lowercase(), span: s..text.len() });
    }
    tokens
}

pub fn tokenize(text: &str) -> Vec<String> {
    tokenize_with_spans(text).into_iter().map(|t| t.text).collect()
}

/// One sentiment-word occurrence with its optional modifying adverb.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Pair {
    pub adverb: Option<String>,
    pub word: String,
    /// Token index of `word`.
    pub position: usize,
}

impl Pair {
    pub fn unpaired(word: &str, position: usize) -> Self {
        Pair { adverb: None, word: word.to_string(), position }
    }

    pub fn modified(adverb: &str, word: &str, position: usize) -> Self {
        Pair { adverb: Some(adverb.to_string()), word: word.to_string(), position }
    }
}

/// Emits one pair per sentiment-word token. The adverb slot holds the
/// directly preceding token when that token is an adverb.
pub fn extract_pairs<S: AsRef<str>>(tokens: &[S], lexicon: &Lexicon) -> Vec<Pair> {
    tokens
        .iter()
        .enumerate()
        .filter(|(_, tok)| lexicon.is_word(tok.as_ref()))
        .map(|(i, tok)| {
            let adverb = i
                .checked_sub(1)
                .map(|j| tokens[j].as_ref())
                .filter(|prev| lexicon.is_adverb(prev))
                .map(str::to_string);
            Pair { adverb, word: tok.as_ref().to_string(), position: i }
        })
        .collect()
}

/// Sum over pairs of (adverb score, or 1 when absent) times word score.
pub fn score_mention(pairs: &[Pair], lexicon: &Lexicon) -> Result<f64> {
    pairs.iter().try_fold(0.0, |acc, pair| {
        let word = lexicon
            .word(&pair.word)
            .ok_or_else(|| Error::UnknownTerm(pair.word.clone()))?;
        let scale = match &pair.adverb {
            Some(adverb) => lexicon
                .adverb_score(adverb)
                .ok_or_else(|| Error::UnknownTerm(adverb.clone()))?,
            None => 1.0,
        };
        Ok(acc + scale * word.score)
    })
}

/// Replaces every case-insensitive whole-word occurrence of `entity` with
/// [`TARGET_TOKEN`].
///
/// An occurrence must not be glued to alphanumeric characters on either
/// side, which keeps the operation idempotent.
pub fn mask_target(text: &str, entity: &str) -> String {
    let needle: Vec<char> = entity.chars().flat_map(char::to_lowercase).collect();
    if needle.is_empty() {
        return text.to_string();
    }
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let mut out = String::with_capacity(text.len());
    let mut i = 0;
    let mut copied_to = 0;
    while i < chars.len() {
        let boundary_before = i == 0 || !chars[i - 1].1.is_alphanumeric();
        if boundary_before {
            if let Some(end) = match_at(&chars, i, &needle) {
                let boundary_after = end == chars.len() || !chars[end].1.is_alphanumeric();
                if boundary_after {
                    out.push_str(&text[copied_to..chars[i].0]);
                    out.push_str(TARGET_TOKEN);
                    copied_to = chars.get(end).map_or(text.len(), |c| c.0);
                    i = end;
                    continue;
                }
            }
        }
        i += 1;
    }
    out.push_str(&text[copied_to..]);
    out
}

/// Matches the lowercased needle starting at char index `start`; returns the
/// char index one past the match.
fn match_at(chars: &[(usize, char)], start: usize, needle: &[char]) -> Option<usize> {
    let mut k = 0;
    let mut i = start;
    while k < needle.len() {
        let (_, c) = *chars.get(i)?;
        for lc in c.to_lowercase() {
            if needle.get(k) != Some(&lc) {
                return None;
            }
            k += 1;
        }
        i += 1;
    }
    Some(i)
}

/// A labeled text unit with its extracted sentiment occurrences.
#[derive(Debug, Clone, PartialEq)]
pub struct Mention {
    pub raw_text: String,
    pub tokens: Vec<String>,
    pub pairs: Vec<Pair>,
    pub label: Label,
    /// Supervision score; defaults to the label's +1 / 0 / -1.
    pub target_score: f64,
}

impl Mention {
    pub fn new(text: &str, label: Label, target_score: Option<f64>, lexicon: &Lexicon) -> Self {
        let tokens = tokenize(text);
        let pairs = extract_pairs(&tokens, lexicon);
        Mention {
            raw_text: text.to_string(),
            tokens,
            pairs,
            label,
            target_score: target_score.unwrap_or_else(|| label.default_target()),
        }
    }

    /// Re-extracts pairs against another lexicon with the same terms.
    pub fn reextract(&mut self, lexicon: &Lexicon) {
        self.pairs = extract_pairs(&self.tokens, lexicon);
    }
}

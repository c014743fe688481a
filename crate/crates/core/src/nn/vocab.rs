use std::collections::HashMap;

use crate::error::{Error, Result};

pub const PAD: usize = 0;
pub const UNK: usize = 1;
pub const PAD_TERM: &str = "<pad>";
pub const UNK_TERM: &str = "<unk>";

/// Bijective term ↔ index map. Index 0 is padding, 1 is the unknown word.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocab {
    terms: Vec<String>,
    index: HashMap<String, usize>,
}

impl Vocab {
    /// Builds from terms in index order, after the two reserved entries.
    pub fn from_terms<I, S>(terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut vocab = Vocab { terms: Vec::new(), index: HashMap::new() };
        for t in [PAD_TERM.to_string(), UNK_TERM.to_string()].into_iter().chain(terms.into_iter().map(Into::into)) {
            if vocab.index.insert(t.clone(), vocab.terms.len()).is_some() {
                return Err(Error::InvalidArgument(format!("duplicate vocabulary term `{t}`")));
            }
            vocab.terms.push(t);
        }
        Ok(vocab)
    }

    /// Number of entries including PAD and UNK.
    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn id(&self, term: &str) -> usize {
        self.index.get(term).copied().unwrap_or(UNK)
    }

    pub fn get(&self, term: &str) -> Option<usize> {
        self.index.get(term).copied()
    }

    pub fn term(&self, id: usize) -> Option<&str> {
        self.terms.get(id).map(String::as_str)
    }

    pub fn terms(&self) -> &[String] {
        &self.terms
    }

    /// Maps tokens to ids, truncated or PAD-filled to exactly `length`.
    pub fn encode<S: AsRef<str>>(&self, tokens: &[S], length: usize) -> Vec<usize> {
        let mut ids: Vec<usize> = tokens.iter().take(length).map(|t| self.id(t.as_ref())).collect();
        ids.resize(length, PAD);
        ids
    }
}

/// Keeps the `max_size` most frequent terms (ties broken lexicographically)
/// plus PAD and UNK.
pub fn build_vocab<S: AsRef<str>>(corpus: &[Vec<S>], max_size: usize) -> Result<Vocab> {
    if corpus.is_empty() {
        return Err(Error::InvalidArgument("cannot build a vocabulary from an empty corpus".into()));
    }
    let mut counts: HashMap<&str, usize> = HashMap::new();
    for tokens in corpus {
        for t in tokens {
            *counts.entry(t.as_ref()).or_default() += 1;
        }
    }
    let mut ranked: Vec<(&str, usize)> = counts.into_iter().filter(|(t, _)| *t != PAD_TERM && *t != UNK_TERM).collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    ranked.truncate(max_size);
    Vocab::from_terms(ranked.into_iter().map(|(t, _)| t))
}

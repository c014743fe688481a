//! Label-aware data augmentation by substituting sentiment words with
//! lexicon peers of similar absolute score.
//!
//! A same-sign substitute keeps the label. An opposite-sign substitute flips
//! positive and negative; comparatives such as "better than" are swapped
//! through an explicit antonym map so the flipped sentence stays coherent.

use std::collections::{BTreeMap, HashSet};

use rand::seq::index::sample;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::label::Label;
use crate::lexicon::{tokenize_with_spans, Lexicon, Mention};
use crate::rng;

/// Slack added to the score tolerance to absorb decimal rounding.
const SCORE_SLACK: f64 = 1e-9;

/// Symmetric word-to-antonym map for comparatives. Serializes as `a:b,c:d`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct AntonymMap(BTreeMap<String, String>);

impl AntonymMap {
    pub fn empty() -> Self {
        AntonymMap(BTreeMap::new())
    }

    /// Inserts `a ↔ b`.
    pub fn insert(&mut self, a: &str, b: &str) {
        let (a, b) = (a.to_lowercase(), b.to_lowercase());
        self.0.insert(a.clone(), b.clone());
        self.0.insert(b, a);
    }

    pub fn with(mut self, a: &str, b: &str) -> Self {
        self.insert(a, b);
        self
    }

    pub fn get(&self, word: &str) -> Option<&str> {
        self.0.get(word).map(String::as_str)
    }

    /// Parses `a:b,c:d`.
    pub fn parse(pairs: &str) -> Result<Self> {
        let mut map = AntonymMap::empty();
        for item in pairs.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            match item.split_once(':') {
                Some((a, b)) if !a.trim().is_empty() && !b.trim().is_empty() => map.insert(a.trim(), b.trim()),
                _ => return Err(Error::InvalidArgument(format!("bad antonym pair `{item}`, expected a:b"))),
            }
        }
        Ok(map)
    }

    /// Canonical `a:b` pairs, each pair listed once.
    pub fn pairs(&self) -> Vec<(String, String)> {
        self.0
            .iter()
            .filter(|(a, b)| a < b)
            .map(|(a, b)| (a.clone(), b.clone()))
            .collect()
    }
}

impl TryFrom<String> for AntonymMap {
    type Error = Error;

    fn try_from(pairs: String) -> Result<Self> {
        AntonymMap::parse(&pairs)
    }
}

impl From<AntonymMap> for String {
    fn from(map: AntonymMap) -> String {
        map.pairs().iter().map(|(a, b)| format!("{a}:{b}")).collect::<Vec<_>>().join(",")
    }
}

impl Default for AntonymMap {
    fn default() -> Self {
        AntonymMap::empty().with("better", "worse")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AugmentConfig {
    /// δ: maximum score distance for two words to count as similar.
    pub score_tolerance: f64,
    pub max_variants_per_sample: usize,
    pub include_flips: bool,
    pub rng_seed: u64,
    pub antonyms: AntonymMap,
}

impl Default for AugmentConfig {
    fn default() -> Self {
        AugmentConfig {
            score_tolerance: 0.1,
            max_variants_per_sample: 4,
            include_flips: true,
            rng_seed: 0,
            antonyms: AntonymMap::default(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SimilarTerms {
    pub same_sign: Vec<String>,
    pub opposite_sign: Vec<String>,
}

/// Words whose score lies within `delta` of `word`'s (same polarity) or whose
/// absolute score lies within `delta` of `word`'s absolute score (opposite
/// polarity). Both lists are sorted.
pub fn similar_terms(word: &str, lexicon: &Lexicon, delta: f64) -> Result<SimilarTerms> {
    let entry = lexicon.word(word).ok_or_else(|| Error::UnknownTerm(word.to_string()))?;
    let mut out = SimilarTerms::default();
    for (term, other) in lexicon.words() {
        if term == word {
            continue;
        }
        if other.polarity == entry.polarity {
            if (other.score - entry.score).abs() <= delta + SCORE_SLACK {
                out.same_sign.push(term.to_string());
            }
        } else if (other.score.abs() - entry.score.abs()).abs() <= delta + SCORE_SLACK {
            out.opposite_sign.push(term.to_string());
        }
    }
    // lexicon iteration is already lexicographic
    Ok(out)
}

/// What a variant changed relative to its source.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Substitution {
    /// Token index of the replaced word.
    pub position: usize,
    pub original: String,
    pub replacement: String,
    pub flipped: bool,
}

impl Substitution {
    pub fn describe(&self) -> String {
        let flip = if self.flipped { ":flip" } else { "" };
        format!("{}:{}>{}{flip}", self.position, self.original, self.replacement)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Variant {
    pub text: String,
    pub label: Label,
    pub substitution: Substitution,
}

/// Generates augmented variants of one (already target-masked) mention.
///
/// Every variant replaces exactly one sentiment-word occurrence. Flip
/// variants are produced only for a positive or negative mention with a
/// single sentiment occurrence of matching polarity, and only when every
/// comparative (a token directly before "than") has an antonym.
pub fn augment(mention: &Mention, lexicon: &Lexicon, config: &AugmentConfig) -> Result<Vec<Variant>> {
    let spans = tokenize_with_spans(&mention.raw_text);
    let comparatives: Vec<usize> = spans
        .windows(2)
        .enumerate()
        .filter(|(_, w)| w[1].text == "than")
        .map(|(i, _)| i)
        .collect();

    let flip_eligible = config.include_flips
        && matches!(mention.label, Label::Positive | Label::Negative)
        && mention.pairs.len() == 1
        && lexicon
            .word(&mention.pairs[0].word)
            .is_some_and(|w| w.polarity.label() == mention.label)
        && comparatives.iter().all(|&i| config.antonyms.get(&spans[i].text).is_some());

    let mut candidates = Vec::new();
    for pair in &mention.pairs {
        let peers = similar_terms(&pair.word, lexicon, config.score_tolerance)?;
        let mut push = |replacement: &str, flipped: bool| {
            let mut edits = vec![(pair.position, replacement.to_string())];
            if flipped {
                edits.extend(
                    comparatives
                        .iter()
                        .map(|&i| (i, config.antonyms.get(&spans[i].text).unwrap_or_default().to_string())),
                );
            }
            let label = if flipped { mention.label.flipped() } else { mention.label };
            candidates.push(Variant {
                text: apply_edits(&mention.raw_text, &spans, &mut edits),
                label,
                substitution: Substitution {
                    position: pair.position,
                    original: pair.word.clone(),
                    replacement: replacement.to_string(),
                    flipped,
                },
            });
        };
        for term in &peers.same_sign {
            push(term, false);
        }
        if flip_eligible {
            for term in &peers.opposite_sign {
                push(term, true);
            }
        }
    }

    let mut seen = HashSet::new();
    candidates.retain(|v| v.text != mention.raw_text && seen.insert(v.text.clone()));

    let max = config.max_variants_per_sample;
    if candidates.len() <= max {
        return Ok(candidates);
    }
    let mut rng = rng::rng(config.rng_seed);
    let mut keep = sample(&mut rng, candidates.len(), max).into_vec();
    keep.sort_unstable();
    Ok(keep.into_iter().map(|i| candidates[i].clone()).collect())
}

/// Rewrites the tokens at the given indices, preserving an initial capital.
fn apply_edits(text: &str, spans: &[crate::lexicon::Token], edits: &mut [(usize, String)]) -> String {
    edits.sort_by_key(|(i, _)| *i);
    let mut out = String::with_capacity(text.len() + 16);
    let mut cursor = 0;
    for (i, replacement) in edits.iter() {
        let span = &spans[*i].span;
        out.push_str(&text[cursor..span.start]);
        let original = &text[span.clone()];
        if original.chars().next().is_some_and(char::is_uppercase) {
            let mut chars = replacement.chars();
            if let Some(first) = chars.next() {
                out.extend(first.to_uppercase());
                out.push_str(chars.as_str());
            }
        } else {
            out.push_str(replacement);
        }
        cursor = span.end;
    }
    out.push_str(&text[cursor..]);
    out
}

/// Augments every mention with a per-mention seed derived from
/// `config.rng_seed` and the mention index. Returns `(source index, variant)`
/// in source order.
pub fn augment_corpus(mentions: &[Mention], lexicon: &Lexicon, config: &AugmentConfig) -> Result<Vec<(usize, Variant)>> {
    let per_mention: Vec<Result<Vec<(usize, Variant)>>> = mentions
        .par_iter()
        .enumerate()
        .map(|(i, m)| {
            let cfg = AugmentConfig { rng_seed: rng::derive_seed(config.rng_seed, i as u64), ..config.clone() };
            Ok(augment(m, lexicon, &cfg)?.into_iter().map(|v| (i, v)).collect())
        })
        .collect();
    let mut out = Vec::new();
    for r in per_mention {
        out.extend(r?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lexicon::{extract_pairs, tokenize};
    use proptest::prelude::*;

    fn example_lexicon() -> Lexicon {
        let mut lex = Lexicon::new();
        for w in ["horrible", "poor", "terrible"] {
            lex = lex.with_word(w, -1.0).unwrap();
        }
        for w in ["great", "amazing"] {
            lex = lex.with_word(w, 1.0).unwrap();
        }
        lex
    }

    #[test]
    fn similar_terms_examples() {
        let lex = example_lexicon();
        let s = similar_terms("horrible", &lex, 0.05).unwrap();
        assert_eq!(s.same_sign, ["poor", "terrible"]);
        assert_eq!(s.opposite_sign, ["amazing", "great"]);

        let lone = Lexicon::new().with_word("a", 0.5).unwrap().with_word("b", -0.7).unwrap();
        assert_eq!(similar_terms("a", &lone, 0.0).unwrap(), SimilarTerms::default());

        let abc = Lexicon::new().with_word("a", 0.5).unwrap().with_word("b", 0.6).unwrap().with_word("c", 0.9).unwrap();
        assert_eq!(similar_terms("a", &abc, 0.1).unwrap().same_sign, ["b"]);
        assert!(similar_terms("zzz", &abc, 0.1).is_err());
    }

    #[test]
    fn worked_example_variants() {
        let lex = example_lexicon();
        let m = Mention::new("Company A is better than TARGET. TARGET is horrible", Label::Negative, None, &lex);
        let variants = augment(&m, &lex, &AugmentConfig::default()).unwrap();
        let got: Vec<(&str, Label)> = variants.iter().map(|v| (v.text.as_str(), v.label)).collect();
        assert_eq!(
            got,
            vec![
                ("Company A is better than TARGET. TARGET is poor", Label::Negative),
                ("Company A is better than TARGET. TARGET is terrible", Label::Negative),
                ("Company A is worse than TARGET. TARGET is amazing", Label::Positive),
                ("Company A is worse than TARGET. TARGET is great", Label::Positive),
            ]
        );
    }

    #[test]
    fn flips_disabled_or_unmapped_comparative() {
        let lex = example_lexicon();
        let m = Mention::new("Company A is better than TARGET. TARGET is horrible", Label::Negative, None, &lex);
        let cfg = AugmentConfig { include_flips: false, ..AugmentConfig::default() };
        assert_eq!(augment(&m, &lex, &cfg).unwrap().len(), 2);
        let cfg = AugmentConfig { antonyms: AntonymMap::empty(), ..AugmentConfig::default() };
        assert!(augment(&m, &lex, &cfg).unwrap().iter().all(|v| !v.substitution.flipped));
    }

    #[test]
    fn neutral_without_words_yields_nothing() {
        let lex = example_lexicon();
        let m = Mention::new("TARGET ships on Monday", Label::Neutral, None, &lex);
        assert!(augment(&m, &lex, &AugmentConfig::default()).unwrap().is_empty());
    }

    #[test]
    fn neutral_never_flips() {
        let lex = example_lexicon();
        let m = Mention::new("is TARGET great or not", Label::Neutral, None, &lex);
        let vs = augment(&m, &lex, &AugmentConfig::default()).unwrap();
        assert_eq!(vs.len(), 1);
        assert!(vs.iter().all(|v| v.label == Label::Neutral));
    }

    #[test]
    fn mixed_mentions_do_not_flip() {
        let lex = example_lexicon();
        let m = Mention::new("great screen but terrible battery", Label::Positive, None, &lex);
        let vs = augment(&m, &lex, &AugmentConfig { max_variants_per_sample: 10, ..AugmentConfig::default() }).unwrap();
        assert!(!vs.is_empty());
        assert!(vs.iter().all(|v| v.label == Label::Positive && !v.substitution.flipped));
    }

    #[test]
    fn caps_variant_count_deterministically() {
        let mut lex = Lexicon::new();
        for i in 0..10 {
            lex = lex.with_word(&format!("good{i}"), 0.5).unwrap();
        }
        let m = Mention::new("TARGET is good0", Label::Positive, None, &lex);
        let cfg = AugmentConfig { rng_seed: 42, ..AugmentConfig::default() };
        let a = augment(&m, &lex, &cfg).unwrap();
        assert_eq!(a.len(), 4);
        assert_eq!(a, augment(&m, &lex, &cfg).unwrap());
        let zero = AugmentConfig { max_variants_per_sample: 0, ..cfg };
        assert!(augment(&m, &lex, &zero).unwrap().is_empty());
    }

    #[test]
    fn preserves_capitalization() {
        let lex = example_lexicon();
        let m = Mention::new("Horrible, truly.", Label::Negative, None, &lex);
        let vs = augment(&m, &lex, &AugmentConfig { include_flips: false, ..AugmentConfig::default() }).unwrap();
        assert_eq!(vs[0].text, "Poor, truly.");
    }

    #[test]
    fn antonym_map_parsing() {
        let map = AntonymMap::parse("better:worse, more:less").unwrap();
        assert_eq!(map.get("worse"), Some("better"));
        assert_eq!(map.get("less"), Some("more"));
        assert_eq!(map.pairs().len(), 2);
        assert!(AntonymMap::parse("better").is_err());
    }

    fn random_lexicon() -> Lexicon {
        let mut lex = Lexicon::new();
        let words = [("good", 0.5), ("nice", 0.55), ("fine", 0.45), ("great", 1.0), ("superb", 0.95),
                     ("bad", -0.5), ("poor", -0.52), ("awful", -1.0), ("dire", -0.98)];
        for (w, s) in words {
            lex = lex.with_word(w, s).unwrap();
        }
        lex.with_adverb("very", 1.5).unwrap()
    }

    proptest! {
        #[test]
        fn variant_invariants(
            tokens in prop::collection::vec(prop::sample::select(vec![
                "good", "nice", "great", "bad", "awful", "very", "the", "TARGET", "is", "than", "better"
            ]), 1..10),
            label in prop::sample::select(Label::ALL.to_vec()),
            seed in 0u64..1000,
        ) {
            let lex = random_lexicon();
            let text = tokens.join(" ");
            let m = Mention::new(&text, label, None, &lex);
            let cfg = AugmentConfig { rng_seed: seed, max_variants_per_sample: 6, ..AugmentConfig::default() };
            let vs = augment(&m, &lex, &cfg).unwrap();
            prop_assert_eq!(&vs, &augment(&m, &lex, &cfg).unwrap());
            prop_assert!(vs.len() <= 6);
            for v in &vs {
                let sub = &v.substitution;
                if sub.flipped {
                    prop_assert!(label != Label::Neutral);
                    prop_assert_eq!(v.label, label.flipped());
                } else {
                    prop_assert_eq!(v.label, label);
                }
                let before = tokenize(&m.raw_text);
                let after = tokenize(&v.text);
                prop_assert_eq!(before.len(), after.len());
                for (i, (a, b)) in before.iter().zip(&after).enumerate() {
                    if i == sub.position {
                        prop_assert_eq!(b, &sub.replacement);
                    } else if sub.flipped && before.get(i + 1).is_some_and(|t| t == "than") {
                        prop_assert_eq!(Some(b.as_str()), cfg.antonyms.get(a));
                    } else {
                        prop_assert_eq!(a, b);
                    }
                }
                let pairs = extract_pairs(&after, &lex);
                prop_assert!(pairs.iter().any(|p| p.position == sub.position && p.word == sub.replacement));
            }
        }
    }
}

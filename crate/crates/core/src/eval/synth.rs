//! Templated synthetic corpora over a random ground-truth lexicon.
//!
//! Polar mentions carry one or two (adverb, word) pairs whose total score
//! under the ground truth has the label's sign, optionally preceded by a
//! comparative clause about a rival. Neutral mentions hold filler only.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::seq::{IndexedRandom, SliceRandom};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::Normal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::MentionRecord;
use crate::label::Label;
use crate::learner::four_level_seed;
use crate::lexicon::{extract_pairs, score_mention, tokenize, Lexicon, Polarity};
use crate::rng;

const POSITIVE: &[&str] = &[
    "good", "great", "amazing", "excellent", "nice", "wonderful", "superb", "pleasant", "solid", "fantastic",
    "lovely", "brilliant", "decent", "perfect", "reliable", "smooth", "impressive", "fine", "awesome", "stellar",
];
const NEGATIVE: &[&str] = &[
    "bad", "terrible", "awful", "poor", "horrible", "weak", "buggy", "slow", "ugly", "annoying", "broken",
    "dreadful", "mediocre", "flimsy", "noisy", "laggy", "clunky", "shoddy", "lousy", "disappointing",
];
const ADVERBS: &[&str] =
    &["very", "extremely", "quite", "rather", "really", "slightly", "incredibly", "fairly", "somewhat", "truly"];
const SUBJECTS: &[&str] = &["phone", "battery", "screen", "service", "app", "update", "camera", "price", "store", "design"];
const FILLER: &[&str] = &["the", "today", "it", "this", "my", "new", "just", "got", "with", "for", "after", "week"];
const ENTITIES: &[&str] = &["acme", "globex", "initech", "umbrella", "hooli", "vandelay"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SyntheticConfig {
    pub mentions: usize,
    pub positive_words: usize,
    pub negative_words: usize,
    pub adverbs: usize,
    /// Class proportions in label order: positive, negative, neutral.
    pub class_mix: [f64; 3],
    /// Label-flip probability; also the standard deviation of Gaussian
    /// noise added to target scores.
    pub noise: f64,
    /// Every lexicon term appears in at least this many mentions, and
    /// every word at least once without an adverb.
    pub min_occurrences: usize,
    /// Probability that a polar mention opens with a comparative clause.
    pub comparative_rate: f64,
    /// Probability that a polar mention carries a second pair, of either
    /// sign, that does not overturn the label.
    pub second_pair_rate: f64,
    pub seed: u64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        SyntheticConfig {
            mentions: 1500,
            positive_words: 10,
            negative_words: 10,
            adverbs: 5,
            class_mix: [0.15, 0.25, 0.60],
            noise: 0.0,
            min_occurrences: 3,
            comparative_rate: 0.2,
            second_pair_rate: 0.3,
            seed: 0,
        }
    }
}

impl SyntheticConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::InvalidArgument(m));
        if self.positive_words == 0 || self.negative_words == 0 {
            return fail("need at least one positive and one negative word".into());
        }
        if self.positive_words > POSITIVE.len() || self.negative_words > NEGATIVE.len() || self.adverbs > ADVERBS.len() {
            return fail(format!(
                "at most {} positive words, {} negative words and {} adverbs",
                POSITIVE.len(),
                NEGATIVE.len(),
                ADVERBS.len()
            ));
        }
        if self.class_mix.iter().any(|&p| !(p >= 0.0)) || self.class_mix.iter().sum::<f64>() <= 0.0 {
            return fail("class_mix must be non-negative with a positive sum".into());
        }
        if [self.noise, self.comparative_rate, self.second_pair_rate].iter().any(|p| !(0.0..=1.0).contains(p)) {
            return fail("noise, comparative_rate and second_pair_rate must be in [0, 1]".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticCorpus {
    pub records: Vec<MentionRecord>,
    /// Scores used to generate targets and labels.
    pub truth: Lexicon,
    /// The ground truth rounded onto the four-level scale, adverbs at 1.
    pub seed_lexicon: Lexicon,
}

type Pair = (Option<usize>, usize);

struct Generator<'a> {
    cfg: &'a SyntheticConfig,
    truth: Lexicon,
    rng: ChaCha8Rng,
    zipf: [WeightedIndex<f64>; 2],
}

impl Generator<'_> {
    fn words(&self, p: Polarity) -> &'static [&'static str] {
        match p {
            Polarity::Positive => &POSITIVE[..self.cfg.positive_words],
            Polarity::Negative => &NEGATIVE[..self.cfg.negative_words],
        }
    }

    fn pair_text(&self, p: Polarity, (adverb, word): Pair) -> String {
        match adverb {
            Some(a) => format!("{} {}", ADVERBS[a], self.words(p)[word]),
            None => self.words(p)[word].to_string(),
        }
    }

    fn pair_score(&self, p: Polarity, (adverb, word): Pair) -> f64 {
        let a = adverb.map_or(1.0, |a| self.truth.adverb_score(ADVERBS[a]).expect("generated adverb"));
        a * self.truth.word(self.words(p)[word]).expect("generated word").score
    }

    fn random_pair(&mut self, p: Polarity) -> Pair {
        let word = self.zipf[(p == Polarity::Negative) as usize].sample(&mut self.rng);
        let adverb = (self.cfg.adverbs > 0 && self.rng.random_bool(0.5)).then(|| self.rng.random_range(0..self.cfg.adverbs));
        (adverb, word)
    }

    fn fillers(&mut self, n: usize) -> Vec<&'static str> {
        (0..n).map(|_| *FILLER.choose(&mut self.rng).expect("filler")).collect()
    }

    fn polar(&mut self, p: Polarity, primary: Pair, entity: &str) -> String {
        let mut parts = vec![(p, primary)];
        if self.rng.random_bool(self.cfg.second_pair_rate) {
            for _ in 0..10 {
                let q = if self.rng.random_bool(0.5) { p } else { p.opposite() };
                let extra = self.random_pair(q);
                let total = self.pair_score(p, primary) + self.pair_score(q, extra);
                if Polarity::of_score(total) == Some(p) {
                    parts.push((q, extra));
                    break;
                }
            }
        }
        let subject = *SUBJECTS.choose(&mut self.rng).expect("subject");
        let mut text = String::new();
        if self.rng.random_bool(self.cfg.comparative_rate) {
            let rival = loop {
                let r = *ENTITIES.choose(&mut self.rng).expect("entity");
                if r != entity {
                    break r;
                }
            };
            let comparative = if p == Polarity::Positive { "worse" } else { "better" };
            text.push_str(&format!("{rival} is {comparative} than {entity}. "));
        }
        let n = self.rng.random_range(0..3);
        let lead = self.fillers(n).join(" ");
        text.push_str(&format!("{entity} {subject} is "));
        if !lead.is_empty() {
            text.push_str(&lead);
            text.push(' ');
        }
        let joined: Vec<String> = parts.iter().map(|&(q, pair)| self.pair_text(q, pair)).collect();
        let conj = if parts.len() == 2 && parts[0].0 != parts[1].0 { " but " } else { " and " };
        text.push_str(&joined.join(conj));
        text
    }

    fn neutral(&mut self, entity: &str) -> String {
        let subject = *SUBJECTS.choose(&mut self.rng).expect("subject");
        let n = self.rng.random_range(2..6);
        format!("{entity} {subject} {}", self.fillers(n).join(" "))
    }
}

/// Required primary pairs per polarity so every term meets the
/// minimum occurrence count.
fn coverage_queues(cfg: &SyntheticConfig) -> [Vec<Pair>; 2] {
    let mut queues: [Vec<Pair>; 2] = [Vec::new(), Vec::new()];
    let mut adverb_uses = vec![0usize; cfg.adverbs];
    let mut next_adverb = 0;
    for (q, n) in [cfg.positive_words, cfg.negative_words].into_iter().enumerate() {
        for w in 0..n {
            for k in 0..cfg.min_occurrences {
                if k == 0 || cfg.adverbs == 0 {
                    queues[q].push((None, w));
                } else {
                    queues[q].push((Some(next_adverb), w));
                    adverb_uses[next_adverb] += 1;
                    next_adverb = (next_adverb + 1) % cfg.adverbs;
                }
            }
        }
    }
    let mut side = 0;
    for (a, uses) in adverb_uses.iter().enumerate() {
        for extra in *uses..cfg.min_occurrences {
            let n = if side == 0 { cfg.positive_words } else { cfg.negative_words };
            queues[side].push((Some(a), (a + extra) % n));
            side = 1 - side;
        }
    }
    queues
}

fn class_counts(cfg: &SyntheticConfig) -> [usize; 3] {
    let sum: f64 = cfg.class_mix.iter().sum();
    let pos = (cfg.mentions as f64 * cfg.class_mix[0] / sum).round() as usize;
    let neg = ((cfg.mentions as f64 * cfg.class_mix[1] / sum).round() as usize).min(cfg.mentions - pos.min(cfg.mentions));
    let pos = pos.min(cfg.mentions);
    [pos, neg, cfg.mentions - pos - neg]
}

pub fn generate(cfg: &SyntheticConfig) -> Result<SyntheticCorpus> {
    cfg.validate()?;
    let mut rng = rng::rng(cfg.seed);
    let mut truth = Lexicon::new();
    for w in &POSITIVE[..cfg.positive_words] {
        truth.insert_word(w, Polarity::Positive, rng.random_range(0.3..=1.2))?;
    }
    for w in &NEGATIVE[..cfg.negative_words] {
        truth.insert_word(w, Polarity::Negative, -rng.random_range(0.3..=1.2))?;
    }
    for a in &ADVERBS[..cfg.adverbs] {
        truth.insert_adverb(a, rng.random_range(0.5..=2.0))?;
    }

    let queues = coverage_queues(cfg);
    let counts = class_counts(cfg);
    for (q, queue) in queues.iter().enumerate() {
        if queue.len() > counts[q] {
            return Err(Error::InvalidArgument(format!(
                "{} {} mentions cannot cover every term {} times (need {})",
                counts[q],
                Label::ALL[q],
                cfg.min_occurrences,
                queue.len()
            )));
        }
    }
    let mut labels: Vec<Label> = Label::ALL.iter().zip(counts).flat_map(|(&l, n)| std::iter::repeat_n(l, n)).collect();
    labels.shuffle(&mut rng);

    let zipf = |n: usize| WeightedIndex::new((0..n).map(|r| 1.0 / (r + 1) as f64)).expect("non-empty weights");
    let mut g = Generator {
        cfg,
        truth,
        rng,
        zipf: [zipf(cfg.positive_words), zipf(cfg.negative_words)],
    };
    let noise = Normal::new(0.0, cfg.noise).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    let mut used = [0usize; 2];
    let mut records = Vec::with_capacity(cfg.mentions);
    for label in labels {
        let entity = *ENTITIES.choose(&mut g.rng).expect("entity");
        let text = match label {
            Label::Neutral => g.neutral(entity),
            polar => {
                let p = if polar == Label::Positive { Polarity::Positive } else { Polarity::Negative };
                let q = (p == Polarity::Negative) as usize;
                let primary = match queues[q].get(used[q]) {
                    Some(&pair) => pair,
                    None => g.random_pair(p),
                };
                used[q] += 1;
                g.polar(p, primary, entity)
            }
        };
        let tokens = tokenize(&text);
        let mut target = score_mention(&extract_pairs(&tokens, &g.truth), &g.truth)?;
        let mut label = label;
        if cfg.noise > 0.0 {
            target += noise.sample(&mut g.rng);
            if g.rng.random_bool(cfg.noise) {
                let others: Vec<Label> = Label::ALL.into_iter().filter(|&l| l != label).collect();
                label = *others.choose(&mut g.rng).expect("two other labels");
            }
        }
        let mut record = MentionRecord::new(text, label);
        record.target_score = Some(target);
        record.entity = Some(entity.to_string());
        records.push(record);
    }
    let seed_lexicon = four_level_seed(&g.truth);
    Ok(SyntheticCorpus { records, truth: g.truth, seed_lexicon })
}

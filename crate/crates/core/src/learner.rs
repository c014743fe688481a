//! Alternating learning of adverb and sentiment-word scores.
//!
//! Each outer iteration fixes the word scores and solves a non-negative
//! ridge problem for the adverbs, then fixes the adverbs and solves a
//! sign-constrained ridge problem for the words.

use std::collections::BTreeMap;
use std::io::Write;

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lexicon::{Lexicon, Mention, Polarity};
use crate::qp::{self, ConstrainedLsqProblem, Interval, SolverOptions};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LearningConfig {
    /// Maximum number of outer (adverb step + word step) iterations.
    pub max_outer_iterations: usize,
    pub adverb_lambda: f64,
    pub word_lambda: f64,
    /// Strict sign constraints are relaxed to `s >= ε` / `s <= -ε`.
    pub epsilon_margin: f64,
    /// Solver KKT tolerance; also the early-stopping threshold on the
    /// combined objective change between outer iterations.
    pub tol: f64,
    pub max_solver_sweeps: usize,
}

impl Default for LearningConfig {
    fn default() -> Self {
        LearningConfig {
            max_outer_iterations: 10,
            adverb_lambda: 0.1,
            word_lambda: 0.1,
            epsilon_margin: 1e-6,
            tol: 1e-8,
            max_solver_sweeps: 10_000,
        }
    }
}

impl LearningConfig {
    /// Same λ for both sub-problems.
    pub fn with_lambda(mut self, lambda: f64) -> Self {
        self.adverb_lambda = lambda;
        self.word_lambda = lambda;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_outer_iterations == 0 {
            return Err(Error::InvalidArgument("max_outer_iterations must be >= 1".into()));
        }
        if !(self.adverb_lambda >= 0.0 && self.word_lambda >= 0.0) {
            return Err(Error::InvalidArgument("lambda must be >= 0".into()));
        }
        if !(self.epsilon_margin > 0.0) {
            return Err(Error::InvalidArgument("epsilon_margin must be > 0".into()));
        }
        if !(self.tol > 0.0) {
            return Err(Error::InvalidArgument("tol must be > 0".into()));
        }
        Ok(())
    }

    fn solver(&self) -> SolverOptions {
        SolverOptions { tol: self.tol, max_iter: self.max_solver_sweeps }
    }
}

/// A least-squares problem whose columns are lexicon terms.
#[derive(Debug, Clone)]
pub struct TermProblem {
    pub problem: ConstrainedLsqProblem,
    /// Term for each column, in column order.
    pub terms: Vec<String>,
}

impl TermProblem {
    /// Current lexicon scores of the column terms.
    fn current(&self, score: impl Fn(&str) -> f64) -> Array1<f64> {
        self.terms.iter().map(|t| score(t)).collect()
    }
}

fn check_corpus(mentions: &[Mention]) -> Result<()> {
    if mentions.is_empty() {
        Err(Error::InvalidArgument("empty mention list".into()))
    } else {
        Ok(())
    }
}

fn word_score(lexicon: &Lexicon, term: &str) -> Result<f64> {
    lexicon.word(term).map(|w| w.score).ok_or_else(|| Error::UnknownTerm(term.to_string()))
}

fn adverb_score(lexicon: &Lexicon, term: &str) -> Result<f64> {
    lexicon.adverb_score(term).ok_or_else(|| Error::UnknownTerm(term.to_string()))
}

/// Adverb problem with word scores fixed.
///
/// Row `m` holds, for each adverb observed in the corpus, the summed scores
/// of the words it modifies in mention `m`; the bias is the summed score of
/// unmodified words. Adverbs that never occur are left out of the columns.
pub fn build_adverb_problem(mentions: &[Mention], lexicon: &Lexicon, config: &LearningConfig) -> Result<TermProblem> {
    check_corpus(mentions)?;
    if lexicon.adverb_count() == 0 {
        return Err(Error::InvalidArgument("lexicon has no adverbs".into()));
    }
    let columns = observed(mentions.iter().flat_map(|m| m.pairs.iter().filter_map(|p| p.adverb.as_deref())));
    let mut design = Array2::zeros((mentions.len(), columns.len()));
    let mut bias = Array1::zeros(mentions.len());
    let mut targets = Array1::zeros(mentions.len());
    for (m, mention) in mentions.iter().enumerate() {
        targets[m] = mention.target_score;
        for pair in &mention.pairs {
            let s = word_score(lexicon, &pair.word)?;
            match &pair.adverb {
                Some(adverb) => {
                    adverb_score(lexicon, adverb)?;
                    design[[m, columns[adverb.as_str()]]] += s;
                }
                None => bias[m] += s,
            }
        }
    }
    let bounds = vec![Interval::at_least(0.0); columns.len()];
    let problem = ConstrainedLsqProblem::new(design, bias, targets, config.adverb_lambda, bounds)?;
    Ok(TermProblem { problem, terms: columns.into_keys().map(str::to_string).collect() })
}

/// Word problem with adverb scores fixed.
///
/// Column `i` of row `m` is the sum over occurrences of word `i` of its
/// scale: the paired adverb's score, or 1 when unmodified. Bounds follow
/// polarity with margin ε. Words that never occur are left out.
pub fn build_word_problem(mentions: &[Mention], lexicon: &Lexicon, config: &LearningConfig) -> Result<TermProblem> {
    check_corpus(mentions)?;
    if lexicon.word_count() == 0 {
        return Err(Error::InvalidArgument("lexicon has no sentiment words".into()));
    }
    let columns = observed(mentions.iter().flat_map(|m| m.pairs.iter().map(|p| p.word.as_str())));
    let mut design = Array2::zeros((mentions.len(), columns.len()));
    let mut targets = Array1::zeros(mentions.len());
    for (m, mention) in mentions.iter().enumerate() {
        targets[m] = mention.target_score;
        for pair in &mention.pairs {
            word_score(lexicon, &pair.word)?;
            let theta = match &pair.adverb {
                Some(adverb) => adverb_score(lexicon, adverb)?,
                None => 1.0,
            };
            design[[m, columns[pair.word.as_str()]]] += theta;
        }
    }
    let eps = config.epsilon_margin;
    let bounds = columns
        .keys()
        .map(|term| match lexicon.word(term).map(|w| w.polarity) {
            Some(Polarity::Positive) => Interval::at_least(eps),
            _ => Interval::at_most(-eps),
        })
        .collect();
    let bias = Array1::zeros(mentions.len());
    let problem = ConstrainedLsqProblem::new(design, bias, targets, config.word_lambda, bounds)?;
    Ok(TermProblem { problem, terms: columns.into_keys().map(str::to_string).collect() })
}

/// Sorted distinct terms mapped to their column index.
fn observed<'a>(terms: impl Iterator<Item = &'a str>) -> BTreeMap<&'a str, usize> {
    let mut map: BTreeMap<&str, usize> = terms.map(|t| (t, 0)).collect();
    for (i, slot) in map.values_mut().enumerate() {
        *slot = i;
    }
    map
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationRecord {
    pub adverb_objective: f64,
    pub word_objective: f64,
    pub adverb_converged: bool,
    pub word_converged: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LearningTrace {
    pub iterations: Vec<IterationRecord>,
    pub lexicon: Lexicon,
}

impl LearningTrace {
    /// Whether every sub-problem solve met the KKT tolerance.
    pub fn converged(&self) -> bool {
        self.iterations.iter().all(|r| r.adverb_converged && r.word_converged)
    }

    /// Tab-separated `iteration  adverb_objective  word_objective` lines.
    pub fn write_log(&self, mut out: impl Write) -> std::io::Result<()> {
        writeln!(out, "# iteration\tadverb_objective\tword_objective")?;
        for (k, r) in self.iterations.iter().enumerate() {
            writeln!(out, "{}\t{}\t{}", k + 1, r.adverb_objective, r.word_objective)?;
        }
        Ok(())
    }
}

/// Alternates adverb and word solves starting from `seed`.
///
/// Mentions must have their pairs extracted against a lexicon with the same
/// terms as `seed`. Stops after `max_outer_iterations` or once the combined
/// objective changes by less than `tol` between iterations.
pub fn train_iterative(mentions: &[Mention], seed: &Lexicon, config: &LearningConfig) -> Result<LearningTrace> {
    config.validate()?;
    check_corpus(mentions)?;
    let mut lexicon = seed.clone();
    let mut iterations = Vec::new();
    let mut previous: Option<f64> = None;
    for _ in 0..config.max_outer_iterations {
        let (adverb_objective, adverb_converged) = if lexicon.adverb_count() > 0 {
            let adverbs = build_adverb_problem(mentions, &lexicon, config)?;
            let start = adverbs.current(|t| lexicon.adverb_score(t).unwrap_or(0.0));
            let report = qp::solve_from(&adverbs.problem, start, config.solver())?;
            for (term, &score) in adverbs.terms.iter().zip(report.solution.iter()) {
                lexicon.set_adverb_score(term, score)?;
            }
            (report.objective, report.converged)
        } else {
            (f64::NAN, true)
        };

        let words = build_word_problem(mentions, &lexicon, config)?;
        let start = words.current(|t| lexicon.word(t).map_or(0.0, |w| w.score));
        let report = qp::solve_from(&words.problem, start, config.solver())?;
        for (term, &score) in words.terms.iter().zip(report.solution.iter()) {
            lexicon.set_word_score(term, score)?;
        }
        let word_objective = report.objective;
        iterations.push(IterationRecord {
            adverb_objective,
            word_objective,
            adverb_converged,
            word_converged: report.converged,
        });

        let combined = if adverb_objective.is_nan() { word_objective } else { adverb_objective + word_objective };
        if let Some(prev) = previous {
            if (prev - combined).abs() < config.tol {
                break;
            }
        }
        previous = Some(combined);
    }
    Ok(LearningTrace { iterations, lexicon })
}

/// Rounds word scores onto the four-level dictionary scale
/// {+1, +0.5, −0.5, −1} and resets adverbs to 1.
pub fn four_level_seed(lexicon: &Lexicon) -> Lexicon {
    let mut seed = Lexicon::new();
    for (term, entry) in lexicon.words() {
        let magnitude = if entry.score.abs() >= 0.75 { 1.0 } else { 0.5 };
        seed.insert_word(term, entry.polarity, entry.polarity.sign() * magnitude)
            .expect("quantized score keeps polarity");
    }
    for (term, _) in lexicon.adverbs() {
        seed.insert_adverb(term, 1.0).expect("unit adverb score is valid");
    }
    seed
}

use std::fmt::{self, Write as _};
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::augment::{augment_corpus, AugmentConfig};
use crate::error::{Error, Result};
use crate::eval::folds::{kfold_split, rebalance};
use crate::eval::metrics::{ConfusionMatrix, Metrics, Scores};
use crate::io::MentionRecord;
use crate::label::Label;
use crate::learner::{train_iterative, LearningConfig};
use crate::lexicon::{tokenize, Lexicon, Mention};
use crate::loss::PenaltyMatrix;
use crate::nn::{build_vocab, train_embeddings, CnnConfig, CnnModel, SkipGramParams, Vocab};
use crate::rng::derive_seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Variant {
    /// Plain cross entropy, no score learning.
    #[serde(rename = "cnn")]
    Cnn,
    /// Learned scores drive augmentation; plain cross entropy.
    #[serde(rename = "cnn-quad")]
    CnnQuad,
    /// Weighted cross entropy only.
    #[serde(rename = "cnn-cross")]
    CnnCross,
    /// Learned scores, augmentation and weighted cross entropy.
    #[serde(rename = "cnn-total")]
    CnnTotal,
}

impl Variant {
    pub const ALL: [Variant; 4] = [Variant::Cnn, Variant::CnnQuad, Variant::CnnCross, Variant::CnnTotal];

    pub fn learns_scores(self) -> bool {
        matches!(self, Variant::CnnQuad | Variant::CnnTotal)
    }

    pub fn weighted_loss(self) -> bool {
        matches!(self, Variant::CnnCross | Variant::CnnTotal)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Variant::Cnn => "cnn",
            Variant::CnnQuad => "cnn-quad",
            Variant::CnnCross => "cnn-cross",
            Variant::CnnTotal => "cnn-total",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Variant::ALL
            .into_iter()
            .find(|v| v.as_str() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown variant `{s}` (cnn, cnn-quad, cnn-cross, cnn-total)")))
    }
}

/// Everything one cross-validation run depends on. The nested `rng_seed`
/// fields are ignored: per-fold seeds are derived from `rng_seed`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub variant: Variant,
    /// k.
    pub folds: usize,
    pub rebalance: bool,
    pub rng_seed: u64,
    /// Skip-gram epochs over the training fold before CNN training;
    /// 0 starts from random embeddings.
    pub pretrain_epochs: usize,
    /// Rows predicted, columns expected.
    pub penalty: PenaltyMatrix,
    pub augment: AugmentConfig,
    pub learning: LearningConfig,
    pub cnn: CnnConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            variant: Variant::Cnn,
            folds: 5,
            rebalance: true,
            rng_seed: 0,
            pretrain_epochs: 0,
            penalty: PenaltyMatrix::default(),
            augment: AugmentConfig::default(),
            learning: LearningConfig::default(),
            cnn: CnnConfig::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.folds < 2 {
            return Err(Error::InvalidArgument(format!("folds = {}, need at least 2", self.folds)));
        }
        self.learning.validate()?;
        self.cnn.validate()
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let config: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FoldReport {
    pub fold: usize,
    /// Training examples after augmentation and rebalancing.
    pub train_size: usize,
    pub augmented: usize,
    pub test_size: usize,
    /// Whether every score-learning sub-problem converged, when run.
    pub learner_converged: Option<bool>,
    pub confusion: ConfusionMatrix,
    pub metrics: Metrics,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentReport {
    pub config: ExperimentConfig,
    pub folds: Vec<FoldReport>,
    /// Mean of per-fold macro scores.
    pub mean: Scores,
    /// Sample standard deviation of per-fold macro scores.
    pub std: Scores,
    /// Sum of the fold matrices.
    pub pooled: ConfusionMatrix,
}

fn tokens_of(record: &MentionRecord) -> Vec<String> {
    tokenize(&record.masked_text())
}

/// A classifier trained by the variant's pipeline.
#[derive(Debug, Clone)]
pub struct TrainedModel {
    pub model: CnnModel,
    pub vocab: Vocab,
    /// Training examples after augmentation and rebalancing.
    pub train_size: usize,
    pub augmented: usize,
    pub learner_converged: Option<bool>,
    /// Learned lexicon, for variants that learn scores.
    pub learned_lexicon: Option<Lexicon>,
    pub epoch_losses: Vec<f64>,
}

/// Runs one variant's training pipeline on `train`: score learning and
/// augmentation (quad, total), rebalancing, optional skip-gram
/// pretraining, then CNN training with plain or weighted cross entropy.
/// All randomness is derived from `seed`.
pub fn train_model(
    config: &ExperimentConfig,
    train: &[&MentionRecord],
    lexicon: Option<&Lexicon>,
    seed: u64,
) -> Result<TrainedModel> {
    if train.is_empty() {
        return Err(Error::InvalidArgument("no training mentions".into()));
    }
    let mut examples: Vec<(Vec<String>, Label)> = train.iter().map(|r| (tokens_of(r), r.label)).collect();
    let mut augmented = 0;
    let mut learner_converged = None;
    let mut learned_lexicon = None;
    if config.variant.learns_scores() {
        let lexicon = lexicon.ok_or_else(|| Error::InvalidArgument(format!("{} needs a seed lexicon", config.variant)))?;
        let mentions: Vec<Mention> = train.iter().map(|r| r.to_mention(lexicon)).collect();
        let trace = train_iterative(&mentions, lexicon, &config.learning)?;
        learner_converged = Some(trace.converged());
        let augment = AugmentConfig { rng_seed: derive_seed(seed, 1), ..config.augment.clone() };
        let variants = augment_corpus(&mentions, &trace.lexicon, &augment)?;
        augmented = variants.len();
        examples.extend(variants.into_iter().map(|(_, v)| (tokenize(&v.text), v.label)));
        learned_lexicon = Some(trace.lexicon);
    }
    if config.rebalance {
        examples = rebalance(&examples, derive_seed(seed, 2));
    }

    let token_lists: Vec<Vec<String>> = examples.iter().map(|(t, _)| t.clone()).collect();
    let vocab = build_vocab(&token_lists, config.cnn.max_vocab)?;
    let shape = config.cnn.shape(vocab.len());
    let model_seed = derive_seed(seed, 3);
    let mut model = if config.pretrain_epochs > 0 {
        let corpus: Vec<Vec<usize>> = token_lists.iter().map(|t| t.iter().map(|w| vocab.id(w)).collect()).collect();
        let params = SkipGramParams {
            dim: config.cnn.embedding_dim,
            epochs: config.pretrain_epochs,
            seed: derive_seed(seed, 4),
            ..SkipGramParams::default()
        };
        let embedding = train_embeddings(&corpus, vocab.len(), &params)?.rescaled(CnnModel::embedding_init_rms(params.dim));
        CnnModel::with_embedding(shape, embedding, model_seed)?
    } else {
        CnnModel::new(shape, model_seed)?
    };
    let data: Vec<(Vec<usize>, Label)> =
        examples.iter().map(|(t, l)| (vocab.encode(t, config.cnn.sequence_length), *l)).collect();
    let cnn = CnnConfig { rng_seed: derive_seed(seed, 5), ..config.cnn.clone() };
    let penalty = config.variant.weighted_loss().then_some(&config.penalty);
    let epoch_losses = model.train(&data, &cnn, penalty)?;
    Ok(TrainedModel { model, vocab, train_size: data.len(), augmented, learner_converged, learned_lexicon, epoch_losses })
}

fn run_fold(
    config: &ExperimentConfig,
    records: &[MentionRecord],
    lexicon: Option<&Lexicon>,
    assignment: &[usize],
    fold: usize,
) -> Result<FoldReport> {
    let (mut train, mut test) = (Vec::new(), Vec::new());
    for (r, &f) in records.iter().zip(assignment) {
        if f == fold {
            test.push(r);
        } else {
            train.push(r);
        }
    }
    let trained = train_model(config, &train, lexicon, derive_seed(config.rng_seed, 1 + fold as u64))?;
    let mut confusion = ConfusionMatrix::new();
    for r in &test {
        confusion.record(trained.model.predict(&tokens_of(r), &trained.vocab)?.0, r.label);
    }
    Ok(FoldReport {
        fold,
        train_size: trained.train_size,
        augmented: trained.augmented,
        test_size: test.len(),
        learner_converged: trained.learner_converged,
        metrics: confusion.metrics(),
        confusion,
    })
}

fn summarize(folds: &[FoldReport]) -> (Scores, Scores) {
    let n = folds.len() as f64;
    let get = |f: fn(&Scores) -> f64| -> (f64, f64) {
        let values: Vec<f64> = folds.iter().map(|r| f(&r.metrics.macro_avg)).collect();
        let mean = values.iter().sum::<f64>() / n;
        let var = if folds.len() > 1 { values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0) } else { 0.0 };
        (mean, var.sqrt())
    };
    let (p, r, f) = (get(|s| s.precision), get(|s| s.recall), get(|s| s.f_measure));
    (
        Scores { precision: p.0, recall: r.0, f_measure: f.0 },
        Scores { precision: p.1, recall: r.1, f_measure: f.1 },
    )
}

/// k-fold cross validation of one variant. Score learning, augmentation
/// and rebalancing only ever see the training part of each fold. Folds run
/// in parallel; the report lists them in fold order.
pub fn run_experiment(
    config: &ExperimentConfig,
    records: &[MentionRecord],
    lexicon: Option<&Lexicon>,
) -> Result<ExperimentReport> {
    config.validate()?;
    if config.variant.learns_scores() && lexicon.is_none() {
        return Err(Error::InvalidArgument(format!("{} needs a seed lexicon", config.variant)));
    }
    let labels: Vec<Label> = records.iter().map(|r| r.label).collect();
    let assignment = kfold_split(&labels, config.folds, derive_seed(config.rng_seed, 0))?;
    let folds: Vec<FoldReport> = (0..config.folds)
        .into_par_iter()
        .map(|f| run_fold(config, records, lexicon, &assignment, f))
        .collect::<Result<_>>()?;
    let mut pooled = ConfusionMatrix::new();
    for f in &folds {
        pooled.merge(&f.confusion);
    }
    let (mean, std) = summarize(&folds);
    Ok(ExperimentReport { config: config.clone(), folds, mean, std, pooled })
}

fn write_scores(out: &mut String, metrics: &Metrics) {
    writeln!(out, "{:<10}{:>11}{:>11}{:>11}", "class", "precision", "recall", "f_measure").unwrap();
    for label in Label::ALL {
        let s = metrics.per_class[label.index()];
        writeln!(out, "{:<10}{:>11.4}{:>11.4}{:>11.4}", label.as_str(), s.precision, s.recall, s.f_measure).unwrap();
    }
    let s = metrics.macro_avg;
    writeln!(out, "{:<10}{:>11.4}{:>11.4}{:>11.4}", "macro", s.precision, s.recall, s.f_measure).unwrap();
}

impl ExperimentReport {
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        writeln!(out, "# experiment report").unwrap();
        writeln!(out, "variant = {}", self.config.variant).unwrap();
        writeln!(out, "folds = {}", self.folds.len()).unwrap();
        for f in &self.folds {
            writeln!(out, "\n[fold {}]", f.fold + 1).unwrap();
            writeln!(out, "train = {} (augmented {})", f.train_size, f.augmented).unwrap();
            writeln!(out, "test = {}", f.test_size).unwrap();
            if let Some(ok) = f.learner_converged {
                writeln!(out, "score learning converged = {ok}").unwrap();
            }
            writeln!(out, "confusion (rows predicted, columns expected)").unwrap();
            out.push_str(&f.confusion.to_string());
            write_scores(&mut out, &f.metrics);
        }
        writeln!(out, "\n[summary]").unwrap();
        for (name, mean, std) in [
            ("precision", self.mean.precision, self.std.precision),
            ("recall", self.mean.recall, self.std.recall),
            ("f_measure", self.mean.f_measure, self.std.f_measure),
        ] {
            writeln!(out, "macro {name} = {mean:.4} ± {std:.4}").unwrap();
        }
        writeln!(out, "pooled confusion (rows predicted, columns expected)").unwrap();
        out.push_str(&self.pooled.to_string());
        writeln!(out, "\n[config]").unwrap();
        out.push_str(&self.config.to_toml());
        out
    }
}

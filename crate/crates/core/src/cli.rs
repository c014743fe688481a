//! `sentilex` command line.
//!
//! Exit status: 0 on success, 1 for unreadable or malformed input and bad
//! flags, 2 when a computation fails or does not converge.

use std::ffi::OsString;
use std::fs;
use std::io::{self, BufRead, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::augment::{augment_corpus, AntonymMap, AugmentConfig};
use crate::error::{Error, Result};
use crate::eval::{generate, run_experiment, train_model, ExperimentConfig, SyntheticConfig, Variant};
use crate::io::{read_lexicon, read_mentions, write_lexicon, write_mentions, MentionRecord};
use crate::learner::{train_iterative, LearningConfig};
use crate::lexicon::{mask_target, tokenize, Mention};
use crate::nn::checkpoint::{load_checkpoint, save_checkpoint};

const PENALTY_HELP: &str = "\
Weighted cross entropy multiplies the loss by a penalty chosen by the
predicted (row) and expected (column) label. Default table:

  predicted/expected  positive  negative  neutral
  positive                   1         4        3
  negative                   4         1        3
  neutral                    2         2        1

Override it with a `penalty = [[..], [..], [..]]` line in --config.";

#[derive(Debug, Parser)]
#[command(name = "sentilex", version, about = "Sentiment lexicon learning, augmentation and CNN classification")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Learn adverb and sentiment-word scores from scored mentions.
    LearnScores(LearnScoresArgs),
    /// Write a corpus extended with label-aware substitution variants.
    Augment(AugmentArgs),
    /// Train a classifier on a whole corpus and save a checkpoint.
    #[command(after_help = PENALTY_HELP)]
    Train(TrainArgs),
    /// Cross-validate one variant and write a report.
    #[command(after_help = PENALTY_HELP)]
    Evaluate(EvaluateArgs),
    /// Classify one text per input line.
    Predict(PredictArgs),
    /// Generate a synthetic labeled corpus and its ground-truth lexicon.
    GenCorpus(GenCorpusArgs),
}

#[derive(Debug, Args)]
struct LearnScoresArgs {
    /// Mention file (TSV: text, label, [target score], [entity], [provenance]).
    #[arg(long)]
    mentions: PathBuf,
    /// Seed lexicon (TSV: term, word|adverb, polarity, score).
    #[arg(long)]
    lexicon: PathBuf,
    /// Learned lexicon output.
    #[arg(long)]
    out: PathBuf,
    /// Per-iteration objective log [default: <out>.trace].
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Ridge weight shared by the adverb and word problems.
    #[arg(long, default_value_t = 0.1)]
    lambda: f64,
    /// Maximum outer iterations.
    #[arg(long, default_value_t = 10)]
    iters: usize,
    /// Solver tolerance on the KKT residual; also the early-stopping threshold.
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
    /// Accepted for uniformity; score learning is deterministic.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Debug, Args)]
struct AugmentArgs {
    #[arg(long)]
    mentions: PathBuf,
    /// Lexicon whose scores define similar words.
    #[arg(long)]
    lexicon: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Score tolerance δ for similar words.
    #[arg(long, default_value_t = 0.1)]
    delta: f64,
    #[arg(long, default_value_t = 4)]
    max_variants: usize,
    /// Disable polarity-flipping substitutions.
    #[arg(long)]
    no_flips: bool,
    /// Comparative antonyms swapped by flips, as a:b,c:d.
    #[arg(long, default_value = "better:worse")]
    antonyms: String,
    /// Write only the variants, not the original mentions.
    #[arg(long)]
    variants_only: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Debug, Args)]
struct PipelineArgs {
    /// Experiment config (TOML); flags below override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Seed lexicon, required by cnn-quad and cnn-total.
    #[arg(long)]
    lexicon: Option<PathBuf>,
    /// cnn, cnn-quad, cnn-cross or cnn-total [default: cnn].
    #[arg(long)]
    variant: Option<Variant>,
    /// Training epochs [default: 30].
    #[arg(long)]
    epochs: Option<usize>,
    /// Dropout rate on pooled features [default: 0.5].
    #[arg(long)]
    dropout: Option<f64>,
    /// Learning rate [default: 0.05].
    #[arg(long)]
    learning_rate: Option<f64>,
    /// Ridge weight λ for score learning [default: 0.1].
    #[arg(long)]
    lambda: Option<f64>,
    /// Augmentation score tolerance δ [default: 0.1].
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Debug, Args)]
struct TrainArgs {
    #[arg(long)]
    mentions: PathBuf,
    /// Checkpoint output.
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    pipeline: PipelineArgs,
}

#[derive(Debug, Args)]
struct EvaluateArgs {
    #[arg(long)]
    mentions: PathBuf,
    /// Report output [default: stdout].
    #[arg(long)]
    out: Option<PathBuf>,
    /// Number of folds k [default: 5].
    #[arg(long)]
    folds: Option<usize>,
    #[command(flatten)]
    pipeline: PipelineArgs,
}

#[derive(Debug, Args)]
struct PredictArgs {
    #[arg(long)]
    model: PathBuf,
    /// Text file, one mention per line [default: stdin].
    #[arg(long)]
    input: Option<PathBuf>,
    /// Entity to mask as TARGET before classification.
    #[arg(long)]
    entity: Option<String>,
}

#[derive(Debug, Args)]
struct GenCorpusArgs {
    /// Mention file output.
    #[arg(long)]
    out: PathBuf,
    /// Ground-truth lexicon output.
    #[arg(long)]
    lexicon_out: PathBuf,
    /// Four-level seed lexicon output.
    #[arg(long)]
    seed_lexicon_out: Option<PathBuf>,
    #[arg(long, default_value_t = 1500)]
    mentions: usize,
    #[arg(long, default_value_t = 10)]
    positive_words: usize,
    #[arg(long, default_value_t = 10)]
    negative_words: usize,
    #[arg(long, default_value_t = 5)]
    adverbs: usize,
    /// Class proportions positive,negative,neutral.
    #[arg(long, default_value = "0.15,0.25,0.6")]
    class_mix: String,
    /// Label-flip probability and target-score noise level.
    #[arg(long, default_value_t = 0.0)]
    noise: f64,
    #[arg(long, default_value_t = 3)]
    min_occurrences: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

/// Failures that reach the exit status.
enum Failure {
    Input(String),
    Runtime(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Diverged(_) | Error::Infeasible { .. } => Failure::Runtime(e.to_string()),
            _ => Failure::Input(e.to_string()),
        }
    }
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn learn_scores(args: LearnScoresArgs) -> std::result::Result<(), Failure> {
    let seed = read_lexicon(&args.lexicon)?;
    let records = read_mentions(&args.mentions)?;
    let mentions: Vec<Mention> = records.iter().map(|r| r.to_mention(&seed)).collect();
    let config = LearningConfig { max_outer_iterations: args.iters, tol: args.tol, ..LearningConfig::default() }
        .with_lambda(args.lambda);
    let trace = train_iterative(&mentions, &seed, &config)?;
    write_lexicon(&trace.lexicon, &args.out)?;
    let trace_path = args.trace.unwrap_or_else(|| {
        let mut p = args.out.clone().into_os_string();
        p.push(".trace");
        PathBuf::from(p)
    });
    let mut log = Vec::new();
    trace.write_log(&mut log).expect("in-memory write");
    write_file(&trace_path, &String::from_utf8(log).expect("utf-8 log"))?;
    if !trace.converged() {
        return Err(Failure::Runtime(format!(
            "score learning did not converge; lexicon written to {} anyway",
            args.out.display()
        )));
    }
    Ok(())
}

fn augment_cmd(args: AugmentArgs) -> std::result::Result<(), Failure> {
    let lexicon = read_lexicon(&args.lexicon)?;
    let records = read_mentions(&args.mentions)?;
    let config = AugmentConfig {
        score_tolerance: args.delta,
        max_variants_per_sample: args.max_variants,
        include_flips: !args.no_flips,
        rng_seed: args.seed,
        antonyms: AntonymMap::parse(&args.antonyms)?,
    };
    let mentions: Vec<Mention> = records.iter().map(|r| r.to_mention(&lexicon)).collect();
    let variants = augment_corpus(&mentions, &lexicon, &config)?;
    let mut out = if args.variants_only { Vec::new() } else { records.clone() };
    out.extend(variants.into_iter().map(|(i, v)| {
        let mut r = MentionRecord::new(v.text, v.label);
        r.provenance = Some(format!("{}:{}", i + 1, v.substitution.describe()));
        r
    }));
    write_mentions(&out, &args.out)?;
    Ok(())
}

fn experiment_config(p: &PipelineArgs) -> Result<ExperimentConfig> {
    let mut config = match &p.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    config.rng_seed = p.seed;
    if let Some(v) = p.variant {
        config.variant = v;
    }
    if let Some(e) = p.epochs {
        config.cnn.epochs = e;
    }
    if let Some(d) = p.dropout {
        config.cnn.dropout_rate = d;
    }
    if let Some(lr) = p.learning_rate {
        config.cnn.learning_rate = lr;
    }
    if let Some(l) = p.lambda {
        config.learning = config.learning.with_lambda(l);
    }
    if let Some(d) = p.delta {
        config.augment.score_tolerance = d;
    }
    config.validate()?;
    Ok(config)
}

fn optional_lexicon(p: &PipelineArgs) -> Result<Option<crate::lexicon::Lexicon>> {
    p.lexicon.as_ref().map(read_lexicon).transpose()
}

fn train_cmd(args: TrainArgs) -> std::result::Result<(), Failure> {
    let config = experiment_config(&args.pipeline)?;
    let records = read_mentions(&args.mentions)?;
    let lexicon = optional_lexicon(&args.pipeline)?;
    let refs: Vec<&MentionRecord> = records.iter().collect();
    let trained = train_model(&config, &refs, lexicon.as_ref(), config.rng_seed)?;
    save_checkpoint(&trained.model, &trained.vocab, &args.out)?;
    if let Some(loss) = trained.epoch_losses.last() {
        eprintln!("trained on {} examples, final epoch loss {loss:.4}", trained.train_size);
    }
    Ok(())
}

fn evaluate_cmd(args: EvaluateArgs) -> std::result::Result<(), Failure> {
    let mut config = experiment_config(&args.pipeline)?;
    if let Some(k) = args.folds {
        config.folds = k;
    }
    let records = read_mentions(&args.mentions)?;
    let lexicon = optional_lexicon(&args.pipeline)?;
    let report = run_experiment(&config, &records, lexicon.as_ref())?;
    let text = report.to_text();
    match &args.out {
        Some(path) => write_file(path, &text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn predict_cmd(args: PredictArgs) -> std::result::Result<(), Failure> {
    let (model, vocab) = load_checkpoint(&args.model)?;
    let lines: Vec<String> = match &args.input {
        Some(path) => fs::read_to_string(path).map_err(|e| Error::io(path, e))?.lines().map(String::from).collect(),
        None => io::stdin().lock().lines().collect::<io::Result<_>>().map_err(|e| Error::io("<stdin>", e))?,
    };
    let stdout = io::stdout();
    let mut out = stdout.lock();
    for line in lines {
        let text = match &args.entity {
            Some(entity) => mask_target(&line, entity),
            None => line,
        };
        let (label, dist) = model.predict(&tokenize(&text), &vocab)?;
        let p = dist.probs();
        writeln!(out, "{label}\t{:.6} {:.6} {:.6}", p[0], p[1], p[2]).map_err(|e| Error::io("<stdout>", e))?;
    }
    Ok(())
}

fn gen_corpus(args: GenCorpusArgs) -> std::result::Result<(), Failure> {
    let mix: Vec<f64> = args
        .class_mix
        .split(',')
        .map(|s| s.trim().parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| Failure::Input(format!("bad --class-mix `{}`", args.class_mix)))?;
    let class_mix: [f64; 3] =
        mix.try_into().map_err(|_| Failure::Input("--class-mix needs three comma-separated values".into()))?;
    let corpus = generate(&SyntheticConfig {
        mentions: args.mentions,
        positive_words: args.positive_words,
        negative_words: args.negative_words,
        adverbs: args.adverbs,
        class_mix,
        noise: args.noise,
        min_occurrences: args.min_occurrences,
        seed: args.seed,
        ..SyntheticConfig::default()
    })?;
    write_mentions(&corpus.records, &args.out)?;
    write_lexicon(&corpus.truth, &args.lexicon_out)?;
    if let Some(path) = &args.seed_lexicon_out {
        write_lexicon(&corpus.seed_lexicon, path)?;
    }
    Ok(())
}

/// Parses `args` (including the program name), runs the command and
/// returns the process exit status.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let result = match cli.command {
        Command::LearnScores(a) => learn_scores(a),
        Command::Augment(a) => augment_cmd(a),
        Command::Train(a) => train_cmd(a),
        Command::Evaluate(a) => evaluate_cmd(a),
        Command::Predict(a) => predict_cmd(a),
        Command::GenCorpus(a) => gen_corpus(a),
    };
    match result {
        Ok(()) => 0,
        Err(Failure::Input(msg)) => {
            eprintln!("error: {msg}");
            1
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            2
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn command_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn help_lists_defaults() {
        let mut cmd = Cli::command();
        let learn = cmd.find_subcommand_mut("learn-scores").unwrap().render_long_help().to_string();
        assert!(learn.contains("[default: 0.1]"));
        let train = cmd.find_subcommand_mut("train").unwrap().render_long_help().to_string();
        assert!(train.contains("[default: 0.5]"));
        assert!(train.contains("positive                   1         4        3"));
        let augment = cmd.find_subcommand_mut("augment").unwrap().render_long_help().to_string();
        assert!(augment.contains("[default: 0.1]"));
    }

    #[test]
    fn bad_flags_exit_1() {
        assert_eq!(run(["sentilex", "frobnicate"]), 1);
        assert_eq!(run(["sentilex", "evaluate", "--mentions", "x", "--variant", "svm"]), 1);
        assert_eq!(run(["sentilex", "--help"]), 0);
    }
}

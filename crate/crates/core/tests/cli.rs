use std::fs;
use std::io::Write;
use std::path::Path;
use std::process::{Command, Output, Stdio};

use sentilex::io::{read_lexicon, read_mentions};

fn sentilex(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sentilex")).args(args).output().expect("binary runs")
}

fn path(dir: &Path, name: &str) -> String {
    dir.join(name).display().to_string()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

#[test]
fn gen_corpus_then_learn_scores() {
    let dir = tempfile::tempdir().unwrap();
    let (corpus, truth, seed, learned) =
        (path(dir.path(), "c.tsv"), path(dir.path(), "truth.tsv"), path(dir.path(), "seed.tsv"), path(dir.path(), "learned.tsv"));
    let out = sentilex(&[
        "gen-corpus", "--out", &corpus, "--lexicon-out", &truth, "--seed-lexicon-out", &seed,
        "--mentions", "400", "--class-mix", "0.5,0.5,0", "--seed", "5",
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert_eq!(read_mentions(&corpus).unwrap().len(), 400);

    let out = sentilex(&[
        "learn-scores", "--mentions", &corpus, "--lexicon", &seed, "--out", &learned,
        "--lambda", "1e-6", "--iters", "20", "--tol", "1e-12",
    ]);
    let truth = read_lexicon(&truth).unwrap();
    let learned = read_lexicon(&learned).unwrap();
    for (term, entry) in truth.words() {
        let got = learned.word(term).unwrap().score;
        assert!((got - entry.score).abs() < 1e-2, "{term}: {got} vs {}", entry.score);
    }
    assert!(Path::new(&format!("{}.trace", dir.path().join("learned.tsv").display())).exists());
    // exit 2 only signals a non-converged run; the lexicon is written either way
    assert!(matches!(out.status.code(), Some(0 | 2)), "{}", stderr(&out));
}

#[test]
fn missing_input_is_named() {
    let dir = tempfile::tempdir().unwrap();
    let missing = path(dir.path(), "nope.tsv");
    let out = sentilex(&["learn-scores", "--mentions", &missing, "--lexicon", &missing, "--out", &path(dir.path(), "o")]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("nope.tsv"), "{}", stderr(&out));
}

#[test]
fn unknown_subcommand_fails() {
    assert_eq!(sentilex(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(sentilex(&["--help"]).status.code(), Some(0));
}

#[test]
fn augment_writes_provenance() {
    let dir = tempfile::tempdir().unwrap();
    let lexicon = path(dir.path(), "lex.tsv");
    let mentions = path(dir.path(), "m.tsv");
    let out_path = path(dir.path(), "aug.tsv");
    fs::write(
        &lexicon,
        "horrible\tword\tnegative\t-1\npoor\tword\tnegative\t-1\nterrible\tword\tnegative\t-1\n\
         great\tword\tpositive\t1\namazing\tword\tpositive\t1\n",
    )
    .unwrap();
    fs::write(&mentions, "Company A is better than Company B. Company B is horrible.\tnegative\t\tCompany B\n").unwrap();
    let out = sentilex(&["augment", "--mentions", &mentions, "--lexicon", &lexicon, "--out", &out_path]);
    assert!(out.status.success(), "{}", stderr(&out));
    let records = read_mentions(&out_path).unwrap();
    assert_eq!(records.len(), 5);
    assert!(records[0].provenance.is_none());
    assert!(records[1..].iter().all(|r| r.provenance.as_deref().is_some_and(|p| p.starts_with("1:"))));
    let flipped = records.iter().filter(|r| r.text.contains("worse")).count();
    assert_eq!(flipped, 2);

    let out = sentilex(&["augment", "--mentions", &mentions, "--lexicon", &lexicon, "--out", &out_path, "--no-flips", "--variants-only"]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert_eq!(read_mentions(&out_path).unwrap().len(), 2);
}

fn toy_corpus(dir: &Path) -> String {
    let mut text = String::new();
    for i in 0..8 {
        text.push_str(&format!("the phone {i} is great\tpositive\n"));
        text.push_str(&format!("the phone {i} is awful\tnegative\n"));
        text.push_str(&format!("the phone {i} is here\tneutral\n"));
    }
    let p = path(dir, "toy.tsv");
    fs::write(&p, text).unwrap();
    p
}

#[test]
fn train_then_predict() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = toy_corpus(dir.path());
    let config = path(dir.path(), "exp.toml");
    fs::write(&config, "[cnn]\nsequence_length = 8\nembedding_dim = 8\nfilters = 8\npool_window = 4\nepochs = 80\nbatch_size = 4\ndropout_rate = 0.0\n").unwrap();
    let model = path(dir.path(), "model.bin");
    let out = sentilex(&["train", "--mentions", &corpus, "--out", &model, "--config", &config]);
    assert!(out.status.success(), "{}", stderr(&out));

    let mut child = Command::new(env!("CARGO_BIN_EXE_sentilex"))
        .args(["predict", "--model", &model])
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .spawn()
        .unwrap();
    child.stdin.take().unwrap().write_all(b"the phone 3 is great\nthe phone 5 is awful\nthe phone 1 is here\n").unwrap();
    let out = child.wait_with_output().unwrap();
    assert!(out.status.success());
    let stdout = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = stdout.lines().collect();
    assert_eq!(lines.len(), 3);
    for (line, want) in lines.iter().zip(["positive", "negative", "neutral"]) {
        let (label, probs) = line.split_once('\t').unwrap();
        assert_eq!(label, want, "{line}");
        let p: Vec<f64> = probs.split(' ').map(|x| x.parse().unwrap()).collect();
        assert_eq!(p.len(), 3);
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-5);
    }
}

#[test]
fn evaluate_reports_every_fold() {
    let dir = tempfile::tempdir().unwrap();
    let (corpus, truth, seed) = (path(dir.path(), "c.tsv"), path(dir.path(), "t.tsv"), path(dir.path(), "s.tsv"));
    let out = sentilex(&[
        "gen-corpus", "--out", &corpus, "--lexicon-out", &truth, "--seed-lexicon-out", &seed,
        "--mentions", "150", "--min-occurrences", "1", "--seed", "2",
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let report = path(dir.path(), "report.txt");
    let out = sentilex(&[
        "evaluate", "--mentions", &corpus, "--lexicon", &seed, "--variant", "cnn-total",
        "--folds", "3", "--epochs", "2", "--out", &report,
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let text = fs::read_to_string(&report).unwrap();
    for f in 1..=3 {
        assert!(text.contains(&format!("[fold {f}]")), "{text}");
    }
    assert_eq!(text.matches("pred\\exp").count(), 4, "{text}");
    assert!(text.contains("macro precision"));

    let out = sentilex(&["evaluate", "--mentions", &corpus, "--variant", "cnn-total", "--folds", "3"]);
    assert_eq!(out.status.code(), Some(1), "cnn-total without a lexicon must be rejected");
}

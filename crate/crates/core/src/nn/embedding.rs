//! Word embedding matrix, sequence lookup, text import and a small
//! skip-gram-with-negative-sampling trainer.

use std::io::{BufRead, BufReader, Read};

use ndarray::{Array1, Array2, ArrayView1};
use rand::distr::weighted::WeightedIndex;
use rand::distr::{Distribution, Uniform};
use rand::Rng;

use crate::error::{Error, Result};
use crate::nn::vocab::{Vocab, PAD};
use crate::rng;

/// `M × K` matrix; row `i` embeds vocabulary entry `i`. The PAD row is zero.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingMatrix {
    weights: Array2<f64>,
}

impl EmbeddingMatrix {
    pub fn new(mut weights: Array2<f64>) -> Result<Self> {
        if weights.ncols() == 0 || weights.nrows() == 0 {
            return Err(Error::InvalidArgument("embedding matrix needs K >= 1 and a PAD row".into()));
        }
        if weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::InvalidArgument("embedding weights must be finite".into()));
        }
        weights.row_mut(PAD).fill(0.0);
        Ok(EmbeddingMatrix { weights })
    }

    /// Uniform in `±limit`, seeded; PAD row zero.
    pub fn random(vocab_size: usize, dim: usize, limit: f64, seed: u64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidArgument("embedding dimension must be >= 1".into()));
        }
        let mut rng = rng::rng(seed);
        let dist = Uniform::new_inclusive(-limit, limit).map_err(|e| Error::InvalidArgument(e.to_string()))?;
        let weights = Array2::from_shape_simple_fn((vocab_size, dim), || dist.sample(&mut rng));
        Self::new(weights)
    }

    pub fn vocab_size(&self) -> usize {
        self.weights.nrows()
    }

    pub fn dim(&self) -> usize {
        self.weights.ncols()
    }

    pub fn weights(&self) -> &Array2<f64> {
        &self.weights
    }

    /// Callers must keep the PAD row at zero.
    pub(crate) fn weights_mut(&mut self) -> &mut Array2<f64> {
        &mut self.weights
    }

    pub fn row(&self, id: usize) -> ArrayView1<'_, f64> {
        self.weights.row(id)
    }

    /// Looks up already-encoded ids: the `N × K` matrix `D × W`.
    pub fn embed_ids(&self, ids: &[usize]) -> Array2<f64> {
        let mut e = Array2::zeros((ids.len(), self.dim()));
        for (mut row, &id) in e.rows_mut().into_iter().zip(ids) {
            row.assign(&self.weights.row(id));
        }
        e
    }

    /// Uniformly scaled copy whose non-PAD entries have root-mean-square
    /// `rms`. Directions, and hence cosines, are unchanged.
    pub fn rescaled(&self, rms: f64) -> Self {
        let rows = self.vocab_size() - 1;
        let sum_sq: f64 = self.weights.iter().map(|w| w * w).sum();
        let current = (sum_sq / (rows * self.dim()).max(1) as f64).sqrt();
        if current == 0.0 {
            return self.clone();
        }
        EmbeddingMatrix { weights: &self.weights * (rms / current) }
    }

    pub fn cosine(&self, a: usize, b: usize) -> f64 {
        let (x, y) = (self.weights.row(a), self.weights.row(b));
        let denom = x.dot(&x).sqrt() * y.dot(&y).sqrt();
        if denom == 0.0 {
            0.0
        } else {
            x.dot(&y) / denom
        }
    }
}

/// Embeds a token sequence, padded or truncated to `length` rows.
pub fn embed_sequence<S: AsRef<str>>(tokens: &[S], vocab: &Vocab, embedding: &EmbeddingMatrix, length: usize) -> Array2<f64> {
    embedding.embed_ids(&vocab.encode(tokens, length))
}

/// Reads `term v1 … vK` lines. Vocabulary entries missing from the file keep
/// a seeded random row; file terms outside the vocabulary are ignored.
pub fn load_text_embeddings(input: impl Read, vocab: &Vocab, seed: u64) -> Result<EmbeddingMatrix> {
    let mut rows: Vec<(usize, Vec<f64>)> = Vec::new();
    let mut dim = None;
    for (n, line) in BufReader::new(input).lines().enumerate() {
        let line = line.map_err(|e| Error::io("embeddings", e))?;
        let mut fields = line.split_whitespace();
        let Some(term) = fields.next() else { continue };
        let values = fields
            .map(|f| f.parse::<f64>().map_err(|_| Error::parse("embeddings", n + 1, format!("bad value `{f}`"))))
            .collect::<Result<Vec<_>>>()?;
        match dim {
            None => dim = Some(values.len()),
            Some(k) if k != values.len() => {
                return Err(Error::parse("embeddings", n + 1, format!("expected {k} values, found {}", values.len())))
            }
            _ => {}
        }
        if let Some(id) = vocab.get(term) {
            rows.push((id, values));
        }
    }
    let dim = dim.filter(|&k| k > 0).ok_or_else(|| Error::InvalidArgument("no embedding vectors found".into()))?;
    let mut matrix = EmbeddingMatrix::random(vocab.len(), dim, 0.5 / dim as f64, seed)?;
    for (id, values) in rows {
        if id != PAD {
            matrix.weights.row_mut(id).assign(&Array1::from(values));
        }
    }
    Ok(matrix)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SkipGramParams {
    pub dim: usize,
    pub window: usize,
    pub negatives: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub seed: u64,
}

impl Default for SkipGramParams {
    fn default() -> Self {
        SkipGramParams { dim: 32, window: 2, negatives: 5, epochs: 5, learning_rate: 0.025, seed: 0 }
    }
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Skip-gram with negative sampling over encoded sentences (PAD ids are
/// skipped). With zero epochs the seeded initialization is returned.
pub fn train_embeddings(corpus: &[Vec<usize>], vocab_size: usize, params: &SkipGramParams) -> Result<EmbeddingMatrix> {
    if params.dim == 0 {
        return Err(Error::InvalidArgument("embedding dimension must be >= 1".into()));
    }
    let mut input = EmbeddingMatrix::random(vocab_size, params.dim, 0.5 / params.dim as f64, params.seed)?;
    if params.epochs == 0 {
        return Ok(input);
    }
    if let Some(&bad) = corpus.iter().flatten().find(|&&id| id >= vocab_size) {
        return Err(Error::InvalidArgument(format!("token id {bad} outside vocabulary of {vocab_size}")));
    }
    let mut counts = vec![0.0f64; vocab_size];
    for &id in corpus.iter().flatten().filter(|&&id| id != PAD) {
        counts[id] += 1.0;
    }
    let weights: Vec<f64> = counts.iter().map(|c| c.powf(0.75)).collect();
    let Ok(noise) = WeightedIndex::new(&weights) else {
        return Ok(input);
    };
    let total_tokens: usize = corpus.iter().map(|s| s.iter().filter(|&&id| id != PAD).count()).sum();
    let total_steps = (total_tokens * params.epochs).max(1) as f64;

    let mut output = Array2::<f64>::zeros((vocab_size, params.dim));
    let mut rng = rng::sub_rng(params.seed, 1);
    let mut grad_in = Array1::<f64>::zeros(params.dim);
    let mut processed = 0usize;
    for _ in 0..params.epochs {
        for sentence in corpus {
            let ids: Vec<usize> = sentence.iter().copied().filter(|&id| id != PAD).collect();
            for (pos, &center) in ids.iter().enumerate() {
                let lr = params.learning_rate * (1.0 - processed as f64 / total_steps).max(1e-4);
                processed += 1;
                let reach = rng.random_range(1..=params.window.max(1));
                let lo = pos.saturating_sub(reach);
                let hi = (pos + reach).min(ids.len() - 1);
                for ctx_pos in lo..=hi {
                    if ctx_pos == pos {
                        continue;
                    }
                    grad_in.fill(0.0);
                    let context = ids[ctx_pos];
                    for k in 0..=params.negatives {
                        let (target, label) = if k == 0 {
                            (context, 1.0)
                        } else {
                            let t = noise.sample(&mut rng);
                            if t == context {
                                continue;
                            }
                            (t, 0.0)
                        };
                        let score = input.weights.row(center).dot(&output.row(target));
                        let g = lr * (label - sigmoid(score));
                        grad_in.scaled_add(g, &output.row(target));
                        let center_row = input.weights.row(center).to_owned();
                        output.row_mut(target).scaled_add(g, &center_row);
                    }
                    input.weights.row_mut(center).scaled_add(1.0, &grad_in);
                }
            }
        }
    }
    input.weights.row_mut(PAD).fill(0.0);
    Ok(input)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::seq::IndexedRandom;
    use crate::nn::vocab::{build_vocab, UNK};
    use ndarray::array;
    use rand::seq::SliceRandom;

    #[test]
    fn single_token_lookup() {
        let vocab = Vocab::from_terms(["a"]).unwrap();
        let w = EmbeddingMatrix::new(array![[9.0, 9.0], [1.0, 2.0], [3.0, 4.0]]).unwrap();
        assert_eq!(embed_sequence(&["a"], &vocab, &w, 1), array![[3.0, 4.0]]);
        assert_eq!(embed_sequence(&["zzz"], &vocab, &w, 1), array![[1.0, 2.0]]);
    }

    #[test]
    fn empty_sequence_is_padding() {
        let vocab = Vocab::from_terms(["a"]).unwrap();
        let w = EmbeddingMatrix::random(vocab.len(), 3, 1.0, 5).unwrap();
        assert_eq!(embed_sequence::<&str>(&[], &vocab, &w, 4), Array2::<f64>::zeros((4, 3)));
    }

    #[test]
    fn lookup_equals_one_hot_product() {
        let vocab = Vocab::from_terms(["a", "b", "c"]).unwrap();
        let w = EmbeddingMatrix::random(vocab.len(), 4, 1.0, 11).unwrap();
        let tokens = ["c", "a", "q"];
        let ids = vocab.encode(&tokens, 3);
        let mut d = Array2::<f64>::zeros((3, vocab.len()));
        for (i, &id) in ids.iter().enumerate() {
            d[[i, id]] = 1.0;
        }
        assert_eq!(d.dot(w.weights()), embed_sequence(&tokens, &vocab, &w, 3));
        assert_eq!(ids[2], UNK);
    }

    #[test]
    fn rescaling_keeps_directions() {
        let w = EmbeddingMatrix::random(6, 4, 0.01, 2).unwrap();
        let r = w.rescaled(0.5);
        let rms = (r.weights().iter().map(|x| x * x).sum::<f64>() / 20.0).sqrt();
        assert!((rms - 0.5).abs() < 1e-12);
        assert!((r.cosine(2, 3) - w.cosine(2, 3)).abs() < 1e-12);
        assert!(r.row(PAD).iter().all(|&x| x == 0.0));
    }

    #[test]
    fn zero_epochs_returns_initialization() {
        let params = SkipGramParams { epochs: 0, dim: 4, seed: 3, ..SkipGramParams::default() };
        let trained = train_embeddings(&[vec![2, 3, 4]], 5, &params).unwrap();
        assert_eq!(trained, EmbeddingMatrix::random(5, 4, 0.125, 3).unwrap());
        assert!(train_embeddings(&[], 5, &SkipGramParams { dim: 0, ..params }).is_err());
    }

    fn cooccurrence_corpus() -> (Vocab, Vec<Vec<usize>>) {
        // "alpha" and "beta" always share a sentence with the same contexts;
        // "gamma" only ever appears with a disjoint set.
        let mut rng = rng::rng(99);
        let left = ["red", "green", "blue", "cyan"];
        let right = ["one", "two", "three", "four"];
        let mut sentences = Vec::new();
        for i in 0..200 {
            let mut s: Vec<&str> = if i % 2 == 0 {
                let mut s = vec!["alpha", "beta"];
                s.extend(left.choose_multiple(&mut rng, 3));
                s
            } else {
                let mut s = vec!["gamma"];
                s.extend(right.choose_multiple(&mut rng, 4));
                s
            };
            s.shuffle(&mut rng);
            sentences.push(s.into_iter().map(String::from).collect::<Vec<_>>());
        }
        let vocab = build_vocab(&sentences, 100).unwrap();
        let encoded = sentences.iter().map(|s| vocab.encode(s, s.len())).collect();
        (vocab, encoded)
    }

    #[test]
    fn cooccurring_words_end_up_closer() {
        let (vocab, corpus) = cooccurrence_corpus();
        let params = SkipGramParams { dim: 16, window: 3, negatives: 4, epochs: 20, learning_rate: 0.05, seed: 1 };
        let w = train_embeddings(&corpus, vocab.len(), &params).unwrap();
        let (a, b, c) = (vocab.id("alpha"), vocab.id("beta"), vocab.id("gamma"));
        assert!(w.cosine(a, b) > w.cosine(a, c), "{} vs {}", w.cosine(a, b), w.cosine(a, c));
    }

    #[test]
    fn training_is_deterministic() {
        let (vocab, corpus) = cooccurrence_corpus();
        let params = SkipGramParams { dim: 8, epochs: 2, seed: 5, ..SkipGramParams::default() };
        let a = train_embeddings(&corpus, vocab.len(), &params).unwrap();
        let b = train_embeddings(&corpus, vocab.len(), &params).unwrap();
        assert_eq!(a, b);
        assert!(a.row(PAD).iter().all(|&x| x == 0.0));
    }

    #[test]
    fn loads_text_vectors() {
        let vocab = Vocab::from_terms(["good", "bad"]).unwrap();
        let text = "good 1 2 3\nother 0 0 0\nbad -1 -2 -3\n";
        let w = load_text_embeddings(text.as_bytes(), &vocab, 0).unwrap();
        assert_eq!(w.dim(), 3);
        assert_eq!(w.row(vocab.id("good")).to_vec(), vec![1.0, 2.0, 3.0]);
        assert_eq!(w.row(vocab.id("bad")).to_vec(), vec![-1.0, -2.0, -3.0]);
        assert!(load_text_embeddings("good 1 2\nbad 1\n".as_bytes(), &vocab, 0).is_err());
    }
}

//! Single-width convolutional sentence classifier.
//!
//! ```text
//! ids ──lookup──▶ E (N×K) ──conv d×K, f filters──▶ C (N×f)
//!     ──pool──▶ Q (q×f) ──dropout──▶ dense (3 × q·f) ──▶ logits
//! ```
//!
//! Convolution runs over the `N − d + 1` full windows; the remaining rows of
//! `C` are padding and never win a max. Chunked pooling takes the max over
//! disjoint runs of `p` rows, giving `q = ⌈N/p⌉` rows; max-over-time pooling
//! keeps one value per filter.

use ndarray::{s, Array1, Array2, ArrayView2, Axis};
use rand::distr::{Distribution, Uniform};
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::label::Label;
use crate::loss::{cross_entropy, weighted_cross_entropy, LabelDistribution, PenaltyMatrix};
use crate::nn::embedding::EmbeddingMatrix;
use crate::nn::vocab::{Vocab, PAD};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Pooling {
    /// Max over disjoint chunks of `pool_window` positions.
    Chunked,
    /// One max per filter over all positions.
    MaxOverTime,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Relu,
    Tanh,
}

impl Activation {
    fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Relu => x.max(0.0),
            Activation::Tanh => x.tanh(),
        }
    }

    /// Derivative expressed through the pre-activation and the output.
    fn derivative(self, pre: f64, out: f64) -> f64 {
        match self {
            Activation::Relu => {
                if pre > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Tanh => 1.0 - out * out,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CnnConfig {
    /// N: tokens per document after padding/truncation.
    pub sequence_length: usize,
    /// K: embedding width.
    pub embedding_dim: usize,
    /// d: convolution window in tokens.
    pub window: usize,
    /// f: number of filters.
    pub filters: usize,
    /// p: rows per pooling chunk.
    pub pool_window: usize,
    pub pooling: Pooling,
    pub activation: Activation,
    pub dropout_rate: f64,
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    /// Most frequent terms kept, excluding PAD and UNK.
    pub max_vocab: usize,
    pub fine_tune_embeddings: bool,
    pub rng_seed: u64,
}

impl Default for CnnConfig {
    fn default() -> Self {
        CnnConfig {
            sequence_length: 32,
            embedding_dim: 32,
            window: 3,
            filters: 16,
            pool_window: 8,
            pooling: Pooling::Chunked,
            activation: Activation::Relu,
            dropout_rate: 0.5,
            learning_rate: 0.05,
            epochs: 30,
            batch_size: 32,
            max_vocab: 2000,
            fine_tune_embeddings: true,
            rng_seed: 0,
        }
    }
}

impl CnnConfig {
    /// Full-scale dimensions: 65 000-word vocabulary, 320-wide embeddings,
    /// 128 filters.
    pub fn large_preset() -> Self {
        CnnConfig { max_vocab: 65_000, embedding_dim: 320, filters: 128, ..CnnConfig::default() }
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::InvalidArgument(msg));
        if self.sequence_length == 0 || self.embedding_dim == 0 || self.filters == 0 {
            return fail("sequence_length, embedding_dim and filters must be >= 1".into());
        }
        if self.window == 0 || self.window > self.sequence_length {
            return fail(format!("window {} must be in 1..={}", self.window, self.sequence_length));
        }
        if self.pool_window == 0 {
            return fail("pool_window must be >= 1".into());
        }
        if !(0.0..1.0).contains(&self.dropout_rate) {
            return fail(format!("dropout_rate {} must be in [0, 1)", self.dropout_rate));
        }
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return fail(format!("learning_rate {} must be >= 0", self.learning_rate));
        }
        if self.batch_size == 0 {
            return fail("batch_size must be >= 1".into());
        }
        Ok(())
    }

    pub fn shape(&self, vocab_size: usize) -> CnnShape {
        CnnShape {
            vocab_size,
            sequence_length: self.sequence_length,
            embedding_dim: self.embedding_dim,
            window: self.window,
            filters: self.filters,
            pool_window: self.pool_window,
            pooling: self.pooling,
            activation: self.activation,
        }
    }
}

/// Architecture hyperparameters fixed at model creation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CnnShape {
    pub vocab_size: usize,
    pub sequence_length: usize,
    pub embedding_dim: usize,
    pub window: usize,
    pub filters: usize,
    pub pool_window: usize,
    pub pooling: Pooling,
    pub activation: Activation,
}

impl CnnShape {
    /// Valid convolution positions, `N − d + 1`.
    pub fn conv_positions(&self) -> usize {
        self.sequence_length + 1 - self.window
    }

    /// q: pooled rows per filter.
    pub fn pooled_rows(&self) -> usize {
        match self.pooling {
            Pooling::Chunked => self.sequence_length.div_ceil(self.pool_window),
            Pooling::MaxOverTime => 1,
        }
    }

    pub fn dense_inputs(&self) -> usize {
        self.pooled_rows() * self.filters
    }

    fn chunk(&self, c: usize) -> std::ops::Range<usize> {
        match self.pooling {
            Pooling::Chunked => {
                let start = c * self.pool_window;
                let end = ((c + 1) * self.pool_window).min(self.conv_positions());
                start.min(end)..end
            }
            Pooling::MaxOverTime => 0..self.conv_positions(),
        }
    }
}

/// Intermediates of one forward pass, consumed by [`CnnModel::backward`].
#[derive(Debug, Clone)]
pub struct ForwardCache {
    /// Input windows, one row of `d·K` values per conv position.
    pub windows: Array2<f64>,
    /// Pre-activation conv outputs, `(N − d + 1) × f`.
    pub pre: Array2<f64>,
    /// Activated conv outputs; rows beyond `N − d + 1` of `C` are implicit zeros.
    pub conv: Array2<f64>,
    /// Pooled features `Q`, flattened chunk-major (`q × f`).
    pub pooled: Array1<f64>,
    argmax: Vec<Option<usize>>,
    /// Dropout multipliers (0 or 1/(1−rate)), if dropout was active.
    pub mask: Option<Array1<f64>>,
    pub dense_input: Array1<f64>,
    pub logits: [f64; 3],
}

impl ForwardCache {
    /// Pooled features as the `q × f` matrix `Q`.
    pub fn pooled_matrix(&self, shape: &CnnShape) -> Array2<f64> {
        self.pooled.clone().into_shape_with_order((shape.pooled_rows(), shape.filters)).expect("q·f entries")
    }

    /// Full `N × f` conv matrix `C` including the zero padding rows.
    pub fn conv_matrix(&self, shape: &CnnShape) -> Array2<f64> {
        let mut c = Array2::zeros((shape.sequence_length, shape.filters));
        c.slice_mut(s![..self.conv.nrows(), ..]).assign(&self.conv);
        c
    }
}

/// Parameter gradients, same shapes as the model tensors.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub embedding: Array2<f64>,
    pub filters: Array2<f64>,
    pub filter_bias: Array1<f64>,
    pub dense: Array2<f64>,
    pub dense_bias: Array1<f64>,
}

impl Gradients {
    fn zeros(shape: &CnnShape) -> Self {
        Gradients {
            embedding: Array2::zeros((shape.vocab_size, shape.embedding_dim)),
            filters: Array2::zeros((shape.filters, shape.window * shape.embedding_dim)),
            filter_bias: Array1::zeros(shape.filters),
            dense: Array2::zeros((3, shape.dense_inputs())),
            dense_bias: Array1::zeros(3),
        }
    }

    fn scale(&mut self, factor: f64) {
        self.embedding *= factor;
        self.filters *= factor;
        self.filter_bias *= factor;
        self.dense *= factor;
        self.dense_bias *= factor;
    }

    /// Flat views in the order of [`CnnModel::parameters_mut`].
    pub fn tensors(&self) -> [(&'static str, &[f64]); 5] {
        [
            ("embedding", self.embedding.as_slice().expect("standard layout")),
            ("filters", self.filters.as_slice().expect("standard layout")),
            ("filter_bias", self.filter_bias.as_slice().expect("standard layout")),
            ("dense", self.dense.as_slice().expect("standard layout")),
            ("dense_bias", self.dense_bias.as_slice().expect("standard layout")),
        ]
    }
}

/// Embedding, filter bank and dense softmax layer.
#[derive(Debug, Clone, PartialEq)]
pub struct CnnModel {
    shape: CnnShape,
    embedding: EmbeddingMatrix,
    /// `f × (d·K)`; row `j` is filter `F_j` flattened row-major.
    filters: Array2<f64>,
    filter_bias: Array1<f64>,
    /// `3 × (q·f)`.
    dense: Array2<f64>,
    dense_bias: Array1<f64>,
}

fn glorot(rows: usize, cols: usize, fan_in: usize, fan_out: usize, rng: &mut impl Rng) -> Array2<f64> {
    let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
    let dist = Uniform::new_inclusive(-limit, limit).expect("finite limit");
    Array2::from_shape_simple_fn((rows, cols), || dist.sample(rng))
}

impl CnnModel {
    /// Randomly initialized model. Embedding rows use a one-hot fan-in of 1.
    pub fn new(shape: CnnShape, seed: u64) -> Result<Self> {
        let limit = Self::embedding_init_rms(shape.embedding_dim) * 3f64.sqrt();
        let embedding = EmbeddingMatrix::random(shape.vocab_size, shape.embedding_dim, limit, rng::derive_seed(seed, 0))?;
        Self::with_embedding(shape, embedding, seed)
    }

    /// Root-mean-square of the random embedding initialization, the
    /// scale pretrained embeddings are brought to before training.
    pub fn embedding_init_rms(embedding_dim: usize) -> f64 {
        (2.0 / (1 + embedding_dim) as f64).sqrt()
    }

    /// Random filters and dense layer around a given embedding matrix.
    pub fn with_embedding(shape: CnnShape, embedding: EmbeddingMatrix, seed: u64) -> Result<Self> {
        if embedding.vocab_size() != shape.vocab_size || embedding.dim() != shape.embedding_dim {
            return Err(Error::DimensionMismatch(format!(
                "embedding is {}×{}, shape wants {}×{}",
                embedding.vocab_size(),
                embedding.dim(),
                shape.vocab_size,
                shape.embedding_dim
            )));
        }
        if shape.window == 0 || shape.window > shape.sequence_length || shape.pool_window == 0 || shape.filters == 0 {
            return Err(Error::InvalidArgument(format!("inconsistent shape {shape:?}")));
        }
        let mut rng = rng::sub_rng(seed, 1);
        let conv_in = shape.window * shape.embedding_dim;
        let filters = glorot(shape.filters, conv_in, conv_in, shape.filters, &mut rng);
        let dense = glorot(3, shape.dense_inputs(), shape.dense_inputs(), 3, &mut rng);
        Ok(CnnModel {
            shape,
            embedding,
            filters,
            filter_bias: Array1::zeros(shape.filters),
            dense,
            dense_bias: Array1::zeros(3),
        })
    }

    /// Assembles a model from explicit tensors.
    pub fn from_parts(
        shape: CnnShape,
        embedding: EmbeddingMatrix,
        filters: Array2<f64>,
        filter_bias: Array1<f64>,
        dense: Array2<f64>,
        dense_bias: Array1<f64>,
    ) -> Result<Self> {
        let mut model = Self::with_embedding(shape, embedding, 0)?;
        let expect = |what: &str, got: &[usize], want: &[usize]| {
            if got == want {
                Ok(())
            } else {
                Err(Error::DimensionMismatch(format!("{what} is {got:?}, expected {want:?}")))
            }
        };
        expect("filters", filters.shape(), model.filters.shape())?;
        expect("filter_bias", filter_bias.shape(), model.filter_bias.shape())?;
        expect("dense", dense.shape(), model.dense.shape())?;
        expect("dense_bias", dense_bias.shape(), model.dense_bias.shape())?;
        let finite = filters.iter().chain(&filter_bias).chain(&dense).chain(&dense_bias).all(|x| x.is_finite());
        if !finite {
            return Err(Error::InvalidArgument("model parameters must be finite".into()));
        }
        model.filters = filters;
        model.filter_bias = filter_bias;
        model.dense = dense;
        model.dense_bias = dense_bias;
        Ok(model)
    }

    pub fn shape(&self) -> &CnnShape {
        &self.shape
    }

    pub fn embedding(&self) -> &EmbeddingMatrix {
        &self.embedding
    }

    pub fn filters(&self) -> &Array2<f64> {
        &self.filters
    }

    pub fn filter_bias(&self) -> &Array1<f64> {
        &self.filter_bias
    }

    pub fn dense(&self) -> &Array2<f64> {
        &self.dense
    }

    pub fn dense_bias(&self) -> &Array1<f64> {
        &self.dense_bias
    }

    /// Mutable flat views of every trainable tensor. The PAD embedding row
    /// (the first `K` values of `embedding`) must stay zero.
    pub fn parameters_mut(&mut self) -> [(&'static str, &mut [f64]); 5] {
        [
            ("embedding", self.embedding.weights_mut().as_slice_mut().expect("standard layout")),
            ("filters", self.filters.as_slice_mut().expect("standard layout")),
            ("filter_bias", self.filter_bias.as_slice_mut().expect("standard layout")),
            ("dense", self.dense.as_slice_mut().expect("standard layout")),
            ("dense_bias", self.dense_bias.as_slice_mut().expect("standard layout")),
        ]
    }

    /// Embeds exactly `N` ids.
    pub fn embed(&self, ids: &[usize]) -> Result<Array2<f64>> {
        if ids.len() != self.shape.sequence_length {
            return Err(Error::DimensionMismatch(format!("expected {} ids, got {}", self.shape.sequence_length, ids.len())));
        }
        if let Some(&bad) = ids.iter().find(|&&id| id >= self.shape.vocab_size) {
            return Err(Error::InvalidArgument(format!("token id {bad} outside vocabulary")));
        }
        Ok(self.embedding.embed_ids(ids))
    }

    /// Forward pass over an `N × K` input. `dropout` is `(rate, seed)`.
    pub fn forward(&self, e: &Array2<f64>, dropout: Option<(f64, u64)>) -> Result<ForwardCache> {
        let shape = &self.shape;
        if e.dim() != (shape.sequence_length, shape.embedding_dim) {
            return Err(Error::DimensionMismatch(format!(
                "input is {:?}, expected ({}, {})",
                e.dim(),
                shape.sequence_length,
                shape.embedding_dim
            )));
        }
        let positions = shape.conv_positions();
        let width = shape.window * shape.embedding_dim;
        let e = e.as_standard_layout();
        let flat = e.as_slice().expect("standard layout");
        let mut windows = Array2::zeros((positions, width));
        for (i, mut row) in windows.rows_mut().into_iter().enumerate() {
            let start = i * shape.embedding_dim;
            row.assign(&ArrayView2::from_shape((1, width), &flat[start..start + width]).expect("window").row(0));
        }
        let pre = windows.dot(&self.filters.t()) + &self.filter_bias;
        let conv = pre.mapv(|x| shape.activation.apply(x));

        let q = shape.pooled_rows();
        let mut pooled = Array1::zeros(q * shape.filters);
        let mut argmax = vec![None; q * shape.filters];
        for c in 0..q {
            let range = shape.chunk(c);
            for j in 0..shape.filters {
                let mut best: Option<usize> = None;
                for i in range.clone() {
                    if best.is_none_or(|b| conv[[i, j]] > conv[[b, j]]) {
                        best = Some(i);
                    }
                }
                if let Some(b) = best {
                    pooled[c * shape.filters + j] = conv[[b, j]];
                }
                argmax[c * shape.filters + j] = best;
            }
        }

        let mask = match dropout {
            Some((rate, seed)) if rate > 0.0 => {
                let mut rng = rng::rng(seed);
                let keep = 1.0 / (1.0 - rate);
                Some(Array1::from_shape_simple_fn(pooled.len(), || if rng.random::<f64>() < rate { 0.0 } else { keep }))
            }
            _ => None,
        };
        let dense_input = match &mask {
            Some(m) => &pooled * m,
            None => pooled.clone(),
        };
        let out = self.dense.dot(&dense_input) + &self.dense_bias;
        let logits = [out[0], out[1], out[2]];
        Ok(ForwardCache { windows, pre, conv, pooled, argmax, mask, dense_input, logits })
    }

    /// Backpropagates `dloss/dlogits`. Returns parameter gradients except
    /// the embedding, plus `dloss/dE` (`N × K`).
    pub fn backward(&self, cache: &ForwardCache, dlogits: &[f64; 3]) -> (Gradients, Array2<f64>) {
        let shape = &self.shape;
        let mut grads = Gradients::zeros(shape);
        let dl = Array1::from(dlogits.to_vec());
        for r in 0..3 {
            grads.dense.row_mut(r).scaled_add(dl[r], &cache.dense_input);
        }
        grads.dense_bias.assign(&dl);

        let mut dpooled = self.dense.t().dot(&dl);
        if let Some(mask) = &cache.mask {
            dpooled *= mask;
        }
        let mut dpre = Array2::<f64>::zeros(cache.pre.dim());
        for (k, best) in cache.argmax.iter().enumerate() {
            if let Some(i) = *best {
                let j = k % shape.filters;
                dpre[[i, j]] += dpooled[k];
            }
        }
        for ((d, &p), &o) in dpre.iter_mut().zip(cache.pre.iter()).zip(cache.conv.iter()) {
            *d *= shape.activation.derivative(p, o);
        }
        grads.filters = dpre.t().dot(&cache.windows);
        grads.filter_bias = dpre.sum_axis(Axis(0));

        let dwindows = dpre.dot(&self.filters);
        let mut de = Array2::zeros((shape.sequence_length, shape.embedding_dim));
        for (i, row) in dwindows.rows().into_iter().enumerate() {
            for r in 0..shape.window {
                let part = row.slice(s![r * shape.embedding_dim..(r + 1) * shape.embedding_dim]);
                de.row_mut(i + r).scaled_add(1.0, &part);
            }
        }
        (grads, de)
    }

    /// Loss and gradients for one encoded example.
    pub fn example_gradients(
        &self,
        ids: &[usize],
        label: Label,
        penalty: Option<&PenaltyMatrix>,
        dropout: Option<(f64, u64)>,
    ) -> Result<(f64, Gradients)> {
        let e = self.embed(ids)?;
        let cache = self.forward(&e, dropout)?;
        let probs = LabelDistribution::from_logits(&cache.logits);
        let y = label.one_hot();
        let (loss, weight) = match penalty {
            Some(p) => (weighted_cross_entropy(&y, &probs, p)?, p.weight(probs.predicted(), label)),
            None => (cross_entropy(&y, &probs)?, 1.0),
        };
        let p = probs.probs();
        let dlogits = [0, 1, 2].map(|i| weight * (p[i] - y[i]));
        let (mut grads, de) = self.backward(&cache, &dlogits);
        for (t, &id) in ids.iter().enumerate() {
            if id != PAD {
                grads.embedding.row_mut(id).scaled_add(1.0, &de.row(t));
            }
        }
        Ok((loss, grads))
    }

    /// Mean loss and mean gradients over a batch. Example `i` draws its
    /// dropout mask from `derive_seed(dropout_seed, i)`.
    pub fn batch_gradients(
        &self,
        batch: &[(Vec<usize>, Label)],
        penalty: Option<&PenaltyMatrix>,
        dropout_rate: f64,
        dropout_seed: u64,
    ) -> Result<(f64, Gradients)> {
        if batch.is_empty() {
            return Err(Error::InvalidArgument("empty batch".into()));
        }
        let mut total = Gradients::zeros(&self.shape);
        let mut loss = 0.0;
        for (i, (ids, label)) in batch.iter().enumerate() {
            let dropout = (dropout_rate > 0.0).then(|| (dropout_rate, rng::derive_seed(dropout_seed, i as u64)));
            let (l, g) = self.example_gradients(ids, *label, penalty, dropout)?;
            loss += l;
            total.embedding += &g.embedding;
            total.filters += &g.filters;
            total.filter_bias += &g.filter_bias;
            total.dense += &g.dense;
            total.dense_bias += &g.dense_bias;
        }
        let n = batch.len() as f64;
        total.scale(1.0 / n);
        Ok((loss / n, total))
    }

    /// One gradient-descent update on a batch; returns the pre-update mean
    /// loss. Cross entropy when `penalty` is `None`, weighted otherwise.
    pub fn train_step(
        &mut self,
        batch: &[(Vec<usize>, Label)],
        config: &CnnConfig,
        penalty: Option<&PenaltyMatrix>,
        dropout_seed: u64,
    ) -> Result<f64> {
        let (loss, grads) = self.batch_gradients(batch, penalty, config.dropout_rate, dropout_seed)?;
        if !loss.is_finite() {
            return Err(Error::Diverged(format!("batch loss is {loss}")));
        }
        let lr = config.learning_rate;
        if lr != 0.0 {
            self.filters.scaled_add(-lr, &grads.filters);
            self.filter_bias.scaled_add(-lr, &grads.filter_bias);
            self.dense.scaled_add(-lr, &grads.dense);
            self.dense_bias.scaled_add(-lr, &grads.dense_bias);
            if config.fine_tune_embeddings {
                let w = self.embedding.weights_mut();
                w.scaled_add(-lr, &grads.embedding);
                w.row_mut(PAD).fill(0.0);
            }
        }
        let finite = self.filters.iter().chain(&self.dense).all(|x| x.is_finite());
        if !finite {
            return Err(Error::Diverged("parameters became non-finite".into()));
        }
        Ok(loss)
    }

    /// Mini-batch training for `config.epochs` epochs with a seeded shuffle
    /// per epoch. Returns the mean loss of each epoch.
    pub fn train(
        &mut self,
        data: &[(Vec<usize>, Label)],
        config: &CnnConfig,
        penalty: Option<&PenaltyMatrix>,
    ) -> Result<Vec<f64>> {
        config.validate()?;
        if data.is_empty() {
            return Err(Error::InvalidArgument("no training examples".into()));
        }
        let mut order: Vec<usize> = (0..data.len()).collect();
        let mut epoch_losses = Vec::with_capacity(config.epochs);
        let mut step = 0u64;
        for epoch in 0..config.epochs {
            order.shuffle(&mut rng::sub_rng(config.rng_seed, epoch as u64));
            let mut sum = 0.0;
            for chunk in order.chunks(config.batch_size) {
                let batch: Vec<(Vec<usize>, Label)> = chunk.iter().map(|&i| data[i].clone()).collect();
                let loss = self.train_step(&batch, config, penalty, rng::derive_seed(config.rng_seed ^ 0x5eed, step))?;
                sum += loss * batch.len() as f64;
                step += 1;
            }
            epoch_losses.push(sum / data.len() as f64);
        }
        Ok(epoch_losses)
    }

    /// Class distribution for `N` encoded ids, dropout off.
    pub fn predict_ids(&self, ids: &[usize]) -> Result<LabelDistribution> {
        let cache = self.forward(&self.embed(ids)?, None)?;
        Ok(LabelDistribution::from_logits(&cache.logits))
    }

    /// Predicted label (lowest index on ties) and distribution for tokens.
    pub fn predict<S: AsRef<str>>(&self, tokens: &[S], vocab: &Vocab) -> Result<(Label, LabelDistribution)> {
        let dist = self.predict_ids(&vocab.encode(tokens, self.shape.sequence_length))?;
        Ok((dist.predicted(), dist))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn shape(n: usize, k: usize, d: usize, f: usize, p: usize, pooling: Pooling, activation: Activation) -> CnnShape {
        CnnShape {
            vocab_size: 6,
            sequence_length: n,
            embedding_dim: k,
            window: d,
            filters: f,
            pool_window: p,
            pooling,
            activation,
        }
    }

    #[test]
    fn zero_filters_give_bias_logits() {
        let sh = shape(4, 2, 2, 1, 2, Pooling::Chunked, Activation::Relu);
        let emb = EmbeddingMatrix::random(6, 2, 1.0, 0).unwrap();
        let model = CnnModel::from_parts(
            sh,
            emb,
            Array2::zeros((1, 4)),
            Array1::zeros(1),
            Array2::ones((3, 2)),
            array![0.5, -1.0, 2.0],
        )
        .unwrap();
        let cache = model.forward(&model.embed(&[2, 3, 4, 5]).unwrap(), None).unwrap();
        assert!(cache.pooled.iter().all(|&x| x == 0.0));
        assert_eq!(cache.logits, [0.5, -1.0, 2.0]);
    }

    #[test]
    fn max_over_time_by_hand() {
        let sh = shape(2, 1, 1, 1, 1, Pooling::MaxOverTime, Activation::Relu);
        let emb = EmbeddingMatrix::new(Array2::zeros((6, 1))).unwrap();
        let model = CnnModel::from_parts(sh, emb, array![[1.0]], array![0.0], Array2::zeros((3, 1)), Array1::zeros(3)).unwrap();
        let cache = model.forward(&array![[3.0], [-5.0]], None).unwrap();
        assert_eq!(cache.pooled.to_vec(), vec![3.0]);
    }

    #[test]
    fn chunked_pooling_by_hand() {
        // d = 1, identity filter: per-position features equal the inputs
        let sh = shape(4, 1, 1, 1, 2, Pooling::Chunked, Activation::Relu);
        let emb = EmbeddingMatrix::new(Array2::zeros((6, 1))).unwrap();
        let model = CnnModel::from_parts(sh, emb, array![[1.0]], array![0.0], Array2::zeros((3, 2)), Array1::zeros(3)).unwrap();
        let cache = model.forward(&array![[1.0], [4.0], [2.0], [3.0]], None).unwrap();
        assert_eq!(cache.pooled_matrix(&sh), array![[4.0], [3.0]]);
    }

    #[test]
    fn short_final_chunk_and_padding_rows() {
        // N = 5, d = 2 → 4 valid positions, p = 2 → q = 3; last chunk holds only padding
        let sh = shape(5, 1, 2, 1, 2, Pooling::Chunked, Activation::Tanh);
        let emb = EmbeddingMatrix::new(Array2::zeros((6, 1))).unwrap();
        let model =
            CnnModel::from_parts(sh, emb, array![[1.0, 0.0]], array![0.0], Array2::zeros((3, 3)), Array1::zeros(3)).unwrap();
        let e = array![[-1.0], [-2.0], [-3.0], [-0.5], [9.0]];
        let cache = model.forward(&e, None).unwrap();
        let q = cache.pooled_matrix(&sh);
        assert_eq!(q.dim(), (3, 1));
        assert!((q[[0, 0]] - (-1.0f64).tanh()).abs() < 1e-15);
        assert!((q[[1, 0]] - (-0.5f64).tanh()).abs() < 1e-15);
        assert_eq!(q[[2, 0]], 0.0);
        assert_eq!(cache.conv_matrix(&sh).dim(), (5, 1));
    }

    #[test]
    fn shapes_chain() {
        for (n, d, p) in [(6, 3, 2), (7, 2, 3), (5, 5, 1), (9, 1, 4), (4, 2, 8)] {
            for pooling in [Pooling::Chunked, Pooling::MaxOverTime] {
                let sh = shape(n, 3, d, 2, p, pooling, Activation::Relu);
                let model = CnnModel::new(sh, 1).unwrap();
                let cache = model.forward(&Array2::ones((n, 3)), None).unwrap();
                let q = if pooling == Pooling::Chunked { n.div_ceil(p) } else { 1 };
                assert_eq!(cache.conv_matrix(&sh).dim(), (n, 2));
                assert_eq!(cache.pooled_matrix(&sh).dim(), (q, 2));
                assert_eq!(model.dense().dim(), (3, q * 2));
            }
        }
    }

    #[test]
    fn biased_dense_predicts_positive() {
        let sh = shape(3, 2, 2, 2, 2, Pooling::Chunked, Activation::Relu);
        let emb = EmbeddingMatrix::random(6, 2, 1.0, 3).unwrap();
        let model = CnnModel::with_embedding(sh, emb.clone(), 0).unwrap();
        let model = CnnModel::from_parts(
            sh,
            emb,
            model.filters().clone(),
            model.filter_bias().clone(),
            Array2::zeros((3, 4)),
            array![1.0, 0.0, 0.0],
        )
        .unwrap();
        let vocab = Vocab::from_terms(["a", "b", "c", "d"]).unwrap();
        for tokens in [vec!["a"], vec!["b", "c", "d"], vec![]] {
            assert_eq!(model.predict(&tokens, &vocab).unwrap().0, Label::Positive);
        }
    }

    #[test]
    fn dropout_is_seeded_and_inverted() {
        let sh = shape(6, 2, 2, 4, 2, Pooling::Chunked, Activation::Relu);
        let model = CnnModel::new(sh, 2).unwrap();
        let e = model.embed(&[2, 3, 4, 5, 2, 3]).unwrap();
        let a = model.forward(&e, Some((0.5, 9))).unwrap();
        let b = model.forward(&e, Some((0.5, 9))).unwrap();
        assert_eq!(a.mask, b.mask);
        assert!(a.mask.unwrap().iter().all(|&m| m == 0.0 || m == 2.0));
        assert!(model.forward(&e, Some((0.0, 9))).unwrap().mask.is_none());
    }

    #[test]
    fn zero_learning_rate_leaves_model_unchanged() {
        let config = CnnConfig { learning_rate: 0.0, sequence_length: 4, embedding_dim: 3, window: 2, filters: 2, pool_window: 2, ..CnnConfig::default() };
        let mut model = CnnModel::new(config.shape(6), 4).unwrap();
        let before = model.clone();
        let loss = model.train_step(&[(vec![2, 3, 0, 0], Label::Negative)], &config, None, 1).unwrap();
        assert!(loss > 0.0);
        assert_eq!(model, before);
    }

    #[test]
    fn rejects_bad_inputs() {
        let sh = shape(4, 2, 2, 1, 2, Pooling::Chunked, Activation::Relu);
        let model = CnnModel::new(sh, 0).unwrap();
        assert!(model.embed(&[1, 2]).is_err());
        assert!(model.embed(&[1, 2, 3, 99]).is_err());
        assert!(model.forward(&Array2::zeros((3, 2)), None).is_err());
        assert!(model.batch_gradients(&[], None, 0.0, 0).is_err());
        assert!(CnnConfig { window: 40, ..CnnConfig::default() }.validate().is_err());
        assert!(CnnConfig { dropout_rate: 1.0, ..CnnConfig::default() }.validate().is_err());
    }

    fn fd_check(pooling: Pooling, activation: Activation, penalty: Option<&PenaltyMatrix>, seed: u64) {
        let sh = CnnShape { vocab_size: 7, sequence_length: 6, embedding_dim: 3, window: 2, filters: 3, pool_window: 2, pooling, activation };
        let mut model = CnnModel::new(sh, seed).unwrap();
        let batch = vec![(vec![2, 3, 4, 5, 0, 0], Label::Negative), (vec![6, 2, 1, 3, 4, 0], Label::Neutral)];
        let (_, grads) = model.batch_gradients(&batch, penalty, 0.0, 0).unwrap();
        let analytic: Vec<(String, Vec<f64>)> = grads.tensors().iter().map(|(n, t)| (n.to_string(), t.to_vec())).collect();
        let h = 1e-5;
        for (t, (name, g)) in analytic.iter().enumerate() {
            // the padding row is fixed at zero and has no gradient
            let skip = if name == "embedding" { sh.embedding_dim } else { 0 };
            for i in skip..g.len() {
                let loss_at = |model: &mut CnnModel, x: f64| {
                    model.parameters_mut()[t].1[i] = x;
                    model.batch_gradients(&batch, penalty, 0.0, 0).unwrap().0
                };
                let x0 = model.parameters_mut()[t].1[i];
                let plus = loss_at(&mut model, x0 + h);
                let minus = loss_at(&mut model, x0 - h);
                loss_at(&mut model, x0);
                let numeric = (plus - minus) / (2.0 * h);
                let rel = (g[i] - numeric).abs() / (g[i].abs() + numeric.abs()).max(1e-6);
                assert!(rel < 1e-4, "{name}[{i}] seed {seed}: analytic {} numeric {numeric}", g[i]);
            }
        }
    }

    #[test]
    fn gradients_match_finite_differences() {
        let penalty = PenaltyMatrix::default();
        for seed in 0..3 {
            for pooling in [Pooling::Chunked, Pooling::MaxOverTime] {
                fd_check(pooling, Activation::Tanh, None, seed);
                fd_check(pooling, Activation::Tanh, Some(&penalty), seed);
            }
        }
    }

    fn toy_data() -> Vec<(Vec<usize>, Label)> {
        let labels = [Label::Positive, Label::Negative, Label::Neutral];
        (0..10).map(|i| (vec![2 + i % 3, 5 + i % 4, 2 + (i * 7) % 9, 0, 0], labels[i % 3])).collect()
    }

    fn toy_config() -> CnnConfig {
        CnnConfig {
            sequence_length: 5,
            embedding_dim: 4,
            window: 2,
            filters: 6,
            pool_window: 2,
            dropout_rate: 0.0,
            learning_rate: 0.1,
            batch_size: 10,
            ..CnnConfig::default()
        }
    }

    #[test]
    fn training_reduces_loss() {
        let config = toy_config();
        let data = toy_data();
        let mut model = CnnModel::new(config.shape(11), 5).unwrap();
        let first = model.train_step(&data, &config, None, 0).unwrap();
        let mut last = first;
        for step in 1..200 {
            last = model.train_step(&data, &config, None, step).unwrap();
        }
        assert!(last < first, "{last} !< {first}");
    }

    #[test]
    fn overfits_ten_examples() {
        let config = CnnConfig { epochs: 300, learning_rate: 0.2, ..toy_config() };
        let data = toy_data();
        let mut model = CnnModel::new(config.shape(11), 6).unwrap();
        model.train(&data, &config, Some(&PenaltyMatrix::default())).unwrap();
        for (ids, label) in &data {
            assert_eq!(model.predict_ids(ids).unwrap().predicted(), *label);
        }
    }

    #[test]
    fn training_is_deterministic() {
        let config = CnnConfig { epochs: 3, dropout_rate: 0.5, batch_size: 3, ..toy_config() };
        let run = || {
            let mut m = CnnModel::new(config.shape(11), 8).unwrap();
            let losses = m.train(&toy_data(), &config, None).unwrap();
            (m, losses)
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn frozen_embeddings_stay_fixed() {
        let config = CnnConfig { fine_tune_embeddings: false, ..toy_config() };
        let mut model = CnnModel::new(config.shape(11), 9).unwrap();
        let before = model.embedding().clone();
        model.train_step(&toy_data(), &config, None, 0).unwrap();
        assert_eq!(model.embedding(), &before);
    }

    proptest::proptest! {
        #[test]
        fn predictions_are_distributions(seed in 0u64..1000, ids in proptest::collection::vec(0usize..11, 5)) {
            let model = CnnModel::new(toy_config().shape(11), seed).unwrap();
            let p = model.predict_ids(&ids).unwrap();
            proptest::prop_assert!((p.probs().iter().sum::<f64>() - 1.0).abs() < 1e-9);
            proptest::prop_assert!(p.probs().iter().all(|&x| (0.0..=1.0).contains(&x)));
        }
    }
}

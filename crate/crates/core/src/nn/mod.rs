//! Word embeddings and the convolutional sentence classifier.

pub mod checkpoint;
pub mod cnn;
pub mod embedding;
pub mod vocab;

pub use cnn::{Activation, CnnConfig, CnnModel, CnnShape, ForwardCache, Gradients, Pooling};
pub use embedding::{embed_sequence, train_embeddings, EmbeddingMatrix, SkipGramParams};
pub use vocab::{build_vocab, Vocab};

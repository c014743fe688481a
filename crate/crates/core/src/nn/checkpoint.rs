//! Binary model checkpoints.
//!
//! Layout, all integers little-endian:
//!
//! ```text
//! magic "SNTXCNN\0" | u32 version
//! u64 × 6: vocab, N, K, d, f, p | u8 pooling | u8 activation
//! u64 term count, then per term: u32 byte length + UTF-8
//! f64 tensors, row-major: embedding, filters, filter bias, dense, dense bias
//! ```

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use ndarray::{Array1, Array2};

use crate::error::{Error, Result};
use crate::nn::cnn::{Activation, CnnModel, CnnShape, Pooling};
use crate::nn::embedding::EmbeddingMatrix;
use crate::nn::vocab::Vocab;

const MAGIC: &[u8; 8] = b"SNTXCNN\0";
const VERSION: u32 = 1;

fn corrupt(e: std::io::Error) -> Error {
    Error::Checkpoint(format!("truncated or unreadable checkpoint: {e}"))
}

pub fn write_checkpoint(model: &CnnModel, vocab: &Vocab, mut out: impl Write) -> std::io::Result<()> {
    let sh = model.shape();
    out.write_all(MAGIC)?;
    out.write_all(&VERSION.to_le_bytes())?;
    for v in [sh.vocab_size, sh.sequence_length, sh.embedding_dim, sh.window, sh.filters, sh.pool_window] {
        out.write_all(&(v as u64).to_le_bytes())?;
    }
    out.write_all(&[sh.pooling as u8, sh.activation as u8])?;
    out.write_all(&(vocab.len() as u64).to_le_bytes())?;
    for term in vocab.terms() {
        out.write_all(&(term.len() as u32).to_le_bytes())?;
        out.write_all(term.as_bytes())?;
    }
    let tensors = [
        model.embedding().weights().iter().copied().collect::<Vec<_>>(),
        model.filters().iter().copied().collect(),
        model.filter_bias().to_vec(),
        model.dense().iter().copied().collect(),
        model.dense_bias().to_vec(),
    ];
    for t in &tensors {
        for x in t {
            out.write_all(&x.to_le_bytes())?;
        }
    }
    Ok(())
}

struct Cursor<R> {
    inner: R,
}

impl<R: Read> Cursor<R> {
    fn bytes<const N: usize>(&mut self) -> Result<[u8; N]> {
        let mut buf = [0u8; N];
        self.inner.read_exact(&mut buf).map_err(corrupt)?;
        Ok(buf)
    }

    fn u64(&mut self) -> Result<usize> {
        usize::try_from(u64::from_le_bytes(self.bytes()?)).map_err(|_| Error::Checkpoint("size overflows usize".into()))
    }

    fn f64s(&mut self, n: usize) -> Result<Vec<f64>> {
        (0..n).map(|_| Ok(f64::from_le_bytes(self.bytes()?))).collect()
    }
}

pub fn parse_checkpoint(input: impl Read) -> Result<(CnnModel, Vocab)> {
    let mut r = Cursor { inner: input };
    if &r.bytes::<8>()? != MAGIC {
        return Err(Error::Checkpoint("not a model checkpoint (bad magic)".into()));
    }
    let version = u32::from_le_bytes(r.bytes()?);
    if version != VERSION {
        return Err(Error::Checkpoint(format!("unsupported checkpoint version {version}")));
    }
    let dims: Vec<usize> = (0..6).map(|_| r.u64()).collect::<Result<_>>()?;
    let [pooling, activation] = r.bytes::<2>()?;
    let pooling = match pooling {
        0 => Pooling::Chunked,
        1 => Pooling::MaxOverTime,
        other => return Err(Error::Checkpoint(format!("unknown pooling tag {other}"))),
    };
    let activation = match activation {
        0 => Activation::Relu,
        1 => Activation::Tanh,
        other => return Err(Error::Checkpoint(format!("unknown activation tag {other}"))),
    };
    let shape = CnnShape {
        vocab_size: dims[0],
        sequence_length: dims[1],
        embedding_dim: dims[2],
        window: dims[3],
        filters: dims[4],
        pool_window: dims[5],
        pooling,
        activation,
    };
    if shape.window == 0 || shape.window > shape.sequence_length || shape.pool_window == 0 || shape.filters == 0 {
        return Err(Error::Checkpoint(format!("inconsistent shape {shape:?}")));
    }

    let count = r.u64()?;
    if count != shape.vocab_size || count < 2 {
        return Err(Error::Checkpoint(format!("vocabulary has {count} terms, shape says {}", shape.vocab_size)));
    }
    let mut terms = Vec::with_capacity(count);
    for _ in 0..count {
        let len = u32::from_le_bytes(r.bytes()?) as usize;
        let mut buf = vec![0u8; len];
        r.inner.read_exact(&mut buf).map_err(corrupt)?;
        terms.push(String::from_utf8(buf).map_err(|_| Error::Checkpoint("vocabulary term is not UTF-8".into()))?);
    }
    let vocab = Vocab::from_terms(terms.into_iter().skip(2)).map_err(|e| Error::Checkpoint(e.to_string()))?;

    let (m, k, f) = (shape.vocab_size, shape.embedding_dim, shape.filters);
    let conv_in = shape.window * k;
    let h = shape.dense_inputs();
    let matrix = |rows: usize, cols: usize, v: Vec<f64>| Array2::from_shape_vec((rows, cols), v).expect("sized read");
    let embedding = matrix(m, k, r.f64s(m * k)?);
    let filters = matrix(f, conv_in, r.f64s(f * conv_in)?);
    let filter_bias = Array1::from(r.f64s(f)?);
    let dense = matrix(3, h, r.f64s(3 * h)?);
    let dense_bias = Array1::from(r.f64s(3)?);
    let mut trailing = [0u8; 1];
    if r.inner.read(&mut trailing).map_err(corrupt)? != 0 {
        return Err(Error::Checkpoint("trailing bytes after tensors".into()));
    }
    if embedding.row(0).iter().any(|&x| x != 0.0) {
        return Err(Error::Checkpoint("padding embedding row is not zero".into()));
    }
    let embedding = EmbeddingMatrix::new(embedding).map_err(|e| Error::Checkpoint(e.to_string()))?;
    let model = CnnModel::from_parts(shape, embedding, filters, filter_bias, dense, dense_bias)
        .map_err(|e| Error::Checkpoint(e.to_string()))?;
    Ok((model, vocab))
}

pub fn save_checkpoint(model: &CnnModel, vocab: &Vocab, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut out = BufWriter::new(File::create(path).map_err(|e| Error::io(path, e))?);
    write_checkpoint(model, vocab, &mut out).and_then(|_| out.flush()).map_err(|e| Error::io(path, e))
}

pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<(CnnModel, Vocab)> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    parse_checkpoint(BufReader::new(file)).map_err(|e| match e {
        Error::Checkpoint(msg) => Error::Checkpoint(format!("{}: {msg}", path.display())),
        other => other,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::cnn::CnnConfig;

    fn model() -> (CnnModel, Vocab) {
        let vocab = Vocab::from_terms(["good", "bad", "very"]).unwrap();
        let config = CnnConfig {
            sequence_length: 5,
            embedding_dim: 3,
            window: 2,
            filters: 4,
            pool_window: 2,
            activation: Activation::Tanh,
            ..CnnConfig::default()
        };
        (CnnModel::new(config.shape(vocab.len()), 7).unwrap(), vocab)
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let (m, v) = model();
        let mut buf = Vec::new();
        write_checkpoint(&m, &v, &mut buf).unwrap();
        let (m2, v2) = parse_checkpoint(&buf[..]).unwrap();
        assert_eq!(m, m2);
        assert_eq!(v, v2);
        let ids = v.encode(&["very", "good"], 5);
        assert_eq!(m.predict_ids(&ids).unwrap(), m2.predict_ids(&ids).unwrap());
    }

    #[test]
    fn file_round_trip() {
        let (m, v) = model();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.bin");
        save_checkpoint(&m, &v, &path).unwrap();
        assert_eq!(load_checkpoint(&path).unwrap().0, m);
    }

    #[test]
    fn rejects_damage() {
        let (m, v) = model();
        let mut buf = Vec::new();
        write_checkpoint(&m, &v, &mut buf).unwrap();
        assert!(parse_checkpoint(&buf[..buf.len() - 1]).is_err());
        let mut extra = buf.clone();
        extra.push(0);
        assert!(parse_checkpoint(&extra[..]).is_err());
        let mut bad = buf.clone();
        bad[0] = b'X';
        assert!(matches!(parse_checkpoint(&bad[..]), Err(Error::Checkpoint(_))));
        assert!(matches!(load_checkpoint("/nonexistent/model.bin"), Err(Error::Io { .. })));
    }
}

//! Cross entropy and penalty-weighted cross entropy over the three
//! sentiment labels.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::label::{argmax, Label};

/// Probabilities are clamped to this floor before taking the log.
pub const PROB_FLOOR: f64 = 1e-12;

/// Misclassification weights indexed `[predicted][expected]` in label order
/// (positive, negative, neutral).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[[f64; 3]; 3]", into = "[[f64; 3]; 3]")]
pub struct PenaltyMatrix([[f64; 3]; 3]);

impl PenaltyMatrix {
    /// Diagonal must be 1 and every weight at least 1.
    pub fn new(weights: [[f64; 3]; 3]) -> Result<Self> {
        for (p, row) in weights.iter().enumerate() {
            for (e, &w) in row.iter().enumerate() {
                if !w.is_finite() || w < 1.0 {
                    return Err(Error::InvalidArgument(format!("penalty weight [{p}][{e}] = {w} is below 1")));
                }
                if p == e && w != 1.0 {
                    return Err(Error::InvalidArgument(format!("diagonal penalty weight [{p}][{p}] = {w} must be 1")));
                }
            }
        }
        Ok(PenaltyMatrix(weights))
    }

    /// All weights 1: weighted cross entropy reduces to cross entropy.
    pub fn uniform() -> Self {
        PenaltyMatrix([[1.0; 3]; 3])
    }

    pub fn weight(&self, predicted: Label, expected: Label) -> f64 {
        self.0[predicted.index()][expected.index()]
    }

    pub fn weights(&self) -> &[[f64; 3]; 3] {
        &self.0
    }
}

impl Default for PenaltyMatrix {
    /// Opposite-polarity mistakes cost 4, calling a neutral mention
    /// polar costs 3, calling a polar mention neutral costs 2.
    fn default() -> Self {
        PenaltyMatrix([[1.0, 4.0, 3.0], [4.0, 1.0, 3.0], [2.0, 2.0, 1.0]])
    }
}

impl TryFrom<[[f64; 3]; 3]> for PenaltyMatrix {
    type Error = Error;

    fn try_from(value: [[f64; 3]; 3]) -> Result<Self> {
        PenaltyMatrix::new(value)
    }
}

impl From<PenaltyMatrix> for [[f64; 3]; 3] {
    fn from(value: PenaltyMatrix) -> Self {
        value.0
    }
}

/// A probability vector over the three labels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LabelDistribution([f64; 3]);

impl LabelDistribution {
    pub fn new(probs: [f64; 3]) -> Result<Self> {
        let in_range = probs.iter().all(|p| (0.0..=1.0).contains(p));
        let sum: f64 = probs.iter().sum();
        if !in_range || (sum - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidArgument(format!("{probs:?} is not a probability distribution")));
        }
        Ok(LabelDistribution(probs))
    }

    pub fn from_logits(logits: &[f64; 3]) -> Self {
        LabelDistribution(softmax(logits))
    }

    pub fn probs(&self) -> &[f64; 3] {
        &self.0
    }

    pub fn get(&self, label: Label) -> f64 {
        self.0[label.index()]
    }

    /// Most probable label, lowest index on ties.
    pub fn predicted(&self) -> Label {
        Label::from_index(argmax(&self.0)).expect("three entries")
    }
}

pub fn softmax(logits: &[f64; 3]) -> [f64; 3] {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps = logits.map(|z| (z - max).exp());
    let sum: f64 = exps.iter().sum();
    exps.map(|e| e / sum)
}

fn expected_label(y: &[f64; 3]) -> Result<Label> {
    let ones = y.iter().filter(|&&v| v == 1.0).count();
    let zeros = y.iter().filter(|&&v| v == 0.0).count();
    if ones != 1 || zeros != 2 {
        return Err(Error::InvalidArgument(format!("{y:?} is not one-hot")));
    }
    Ok(Label::from_index(argmax(y)).expect("three entries"))
}

/// `−ln ŷ[true]` with ŷ clamped to `[PROB_FLOOR, 1]`.
pub fn cross_entropy(y: &[f64; 3], predicted: &LabelDistribution) -> Result<f64> {
    let expected = expected_label(y)?;
    Ok(-predicted.get(expected).clamp(PROB_FLOOR, 1.0).ln())
}

/// Cross entropy scaled by `P[argmax ŷ][argmax y]`.
pub fn weighted_cross_entropy(y: &[f64; 3], predicted: &LabelDistribution, penalty: &PenaltyMatrix) -> Result<f64> {
    let expected = expected_label(y)?;
    let weight = penalty.weight(predicted.predicted(), expected);
    Ok(weight * cross_entropy(y, predicted)?)
}

/// Gradient of weighted cross entropy w.r.t. pre-softmax logits, holding the
/// selected penalty weight constant: `w · (softmax(z) − y)`.
pub fn weighted_ce_grad_logits(expected: Label, logits: &[f64; 3], penalty: &PenaltyMatrix) -> [f64; 3] {
    let probs = LabelDistribution::from_logits(logits);
    let weight = penalty.weight(probs.predicted(), expected);
    let y = expected.one_hot();
    let p = probs.probs();
    [0, 1, 2].map(|i| weight * (p[i] - y[i]))
}

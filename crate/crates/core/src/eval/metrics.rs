use std::fmt;

use crate::label::Label;

/// Counts indexed `[predicted][expected]`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ConfusionMatrix {
    pub counts: [[u64; 3]; 3],
}

impl ConfusionMatrix {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_pairs(pairs: impl IntoIterator<Item = (Label, Label)>) -> Self {
        let mut cm = Self::new();
        for (predicted, expected) in pairs {
            cm.record(predicted, expected);
        }
        cm
    }

    pub fn record(&mut self, predicted: Label, expected: Label) {
        self.counts[predicted.index()][expected.index()] += 1;
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn merge(&mut self, other: &ConfusionMatrix) {
        for p in 0..3 {
            for e in 0..3 {
                self.counts[p][e] += other.counts[p][e];
            }
        }
    }

    pub fn accuracy(&self) -> f64 {
        let total = self.total();
        if total == 0 {
            0.0
        } else {
            (0..3).map(|c| self.counts[c][c]).sum::<u64>() as f64 / total as f64
        }
    }

    pub fn metrics(&self) -> Metrics {
        let per_class = [0, 1, 2].map(|c| {
            let hit = self.counts[c][c] as f64;
            let predicted: u64 = self.counts[c].iter().sum();
            let expected: u64 = (0..3).map(|p| self.counts[p][c]).sum();
            let ratio = |n: f64, d: u64| if d == 0 { 0.0 } else { n / d as f64 };
            let precision = ratio(hit, predicted);
            let recall = ratio(hit, expected);
            let f_measure = if precision + recall == 0.0 { 0.0 } else { 2.0 * precision * recall / (precision + recall) };
            Scores { precision, recall, f_measure }
        });
        let mean = |get: fn(&Scores) -> f64| per_class.iter().map(get).sum::<f64>() / 3.0;
        Metrics {
            per_class,
            macro_avg: Scores {
                precision: mean(|s| s.precision),
                recall: mean(|s| s.recall),
                f_measure: mean(|s| s.f_measure),
            },
        }
    }
}

impl fmt::Display for ConfusionMatrix {
    /// One row per predicted label, columns in label order.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{:<10}{:>10}{:>10}{:>10}", "pred\\exp", "positive", "negative", "neutral")?;
        for label in Label::ALL {
            let row = self.counts[label.index()];
            writeln!(f, "{:<10}{:>10}{:>10}{:>10}", label.as_str(), row[0], row[1], row[2])?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Scores {
    pub precision: f64,
    pub recall: f64,
    pub f_measure: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Metrics {
    /// Indexed by [`Label::index`].
    pub per_class: [Scores; 3],
    pub macro_avg: Scores,
}

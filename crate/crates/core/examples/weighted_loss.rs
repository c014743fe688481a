//! Compares plain and penalty-weighted cross entropy on a few predictions.

use sentilex::label::Label;
use sentilex::loss::{cross_entropy, weighted_cross_entropy, LabelDistribution, PenaltyMatrix};

fn main() -> sentilex::Result<()> {
    let penalty = PenaltyMatrix::default();
    println!("penalty (rows predicted, columns expected):");
    for (label, row) in Label::ALL.iter().zip(penalty.weights()) {
        println!("  {label:<9} {row:?}");
    }
    println!();
    for (expected, probs) in [
        (Label::Negative, [0.2, 0.3, 0.5]),
        (Label::Positive, [0.2, 0.7, 0.1]),
        (Label::Neutral, [0.1, 0.1, 0.8]),
    ] {
        let p = LabelDistribution::new(probs)?;
        let y = expected.one_hot();
        println!(
            "expected {expected:<9} predicted {:<9} CE {:.4}  weighted {:.4}",
            p.predicted(),
            cross_entropy(&y, &p)?,
            weighted_cross_entropy(&y, &p, &penalty)?
        );
    }
    Ok(())
}

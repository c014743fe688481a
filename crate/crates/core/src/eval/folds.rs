use rand::seq::{IndexedRandom, SliceRandom};

use crate::error::{Error, Result};
use crate::label::Label;
use crate::rng;

/// Stratified fold assignment: `folds[i]` is the fold of example `i`.
///
/// Each class is shuffled and dealt round-robin; the dealing position
/// carries over from one class to the next so overall fold sizes also
/// differ by at most one.
pub fn kfold_split(labels: &[Label], k: usize, seed: u64) -> Result<Vec<usize>> {
    if k < 2 {
        return Err(Error::InvalidArgument(format!("k = {k}, need at least 2 folds")));
    }
    if k > labels.len() {
        return Err(Error::InvalidArgument(format!("k = {k} exceeds {} examples", labels.len())));
    }
    let mut folds = vec![0; labels.len()];
    let mut next = 0;
    for (c, label) in Label::ALL.iter().enumerate() {
        let mut members: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == *label).collect();
        members.shuffle(&mut rng::sub_rng(seed, c as u64));
        for i in members {
            folds[i] = next;
            next = (next + 1) % k;
        }
    }
    Ok(folds)
}

/// Oversamples minority classes with seeded random duplicates until every
/// class present matches the largest one. Originals come first, in order.
pub fn rebalance<T: Clone>(data: &[(T, Label)], seed: u64) -> Vec<(T, Label)> {
    let by_class: Vec<Vec<usize>> =
        Label::ALL.iter().map(|l| (0..data.len()).filter(|&i| data[i].1 == *l).collect()).collect();
    let majority = by_class.iter().map(Vec::len).max().unwrap_or(0);
    let mut rng = rng::rng(seed);
    let mut out = data.to_vec();
    for members in &by_class {
        if members.is_empty() {
            continue;
        }
        for _ in members.len()..majority {
            let &i = members.choose(&mut rng).expect("non-empty class");
            out.push(data[i].clone());
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn counts(labels: impl IntoIterator<Item = Label>) -> [usize; 3] {
        let mut c = [0; 3];
        for l in labels {
            c[l.index()] += 1;
        }
        c
    }

    fn fold_sizes(folds: &[usize], k: usize) -> Vec<usize> {
        (0..k).map(|f| folds.iter().filter(|&&x| x == f).count()).collect()
    }

    #[test]
    fn even_folds() {
        let labels: Vec<Label> = (0..10).map(|i| Label::ALL[i % 3]).collect();
        assert_eq!(fold_sizes(&kfold_split(&labels, 5, 1).unwrap(), 5), [2; 5]);
        let one_class = vec![Label::Neutral; 9];
        assert_eq!(fold_sizes(&kfold_split(&one_class, 3, 1).unwrap(), 3), [3; 3]);
    }

    #[test]
    fn stratified_folds() {
        let labels: Vec<Label> = (0..30).map(|i| Label::ALL[i % 3]).collect();
        let folds = kfold_split(&labels, 5, 7).unwrap();
        for f in 0..5 {
            let c = counts((0..30).filter(|&i| folds[i] == f).map(|i| labels[i]));
            assert_eq!(c, [2, 2, 2]);
        }
    }

    #[test]
    fn too_many_folds() {
        assert!(kfold_split(&[Label::Positive; 3], 4, 0).is_err());
        assert!(kfold_split(&[Label::Positive; 3], 1, 0).is_err());
    }

    #[test]
    fn rebalance_examples() {
        let balanced: Vec<(usize, Label)> = (0..30).map(|i| (i, Label::ALL[i % 3])).collect();
        assert_eq!(rebalance(&balanced, 3), balanced);

        let mut data: Vec<(usize, Label)> = (0..2).map(|i| (i, Label::Positive)).collect();
        data.extend((2..7).map(|i| (i, Label::Negative)));
        data.extend((7..12).map(|i| (i, Label::Neutral)));
        let out = rebalance(&data, 3);
        assert_eq!(counts(out.iter().map(|d| d.1)), [5, 5, 5]);
        assert_eq!(&out[..12], &data[..]);
        assert!(out[12..].iter().all(|(i, l)| *l == Label::Positive && *i < 2));
        assert_eq!(out, rebalance(&data, 3));
    }

    proptest! {
        #[test]
        fn folds_partition_and_stratify(raw in prop::collection::vec(0usize..3, 6..80), k in 2usize..6, seed in any::<u64>()) {
            let labels: Vec<Label> = raw.iter().map(|&i| Label::ALL[i]).collect();
            prop_assume!(k <= labels.len());
            let folds = kfold_split(&labels, k, seed).unwrap();
            prop_assert_eq!(&folds, &kfold_split(&labels, k, seed).unwrap());
            let sizes = fold_sizes(&folds, k);
            prop_assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
            prop_assert_eq!(sizes.iter().sum::<usize>(), labels.len());
            for l in Label::ALL {
                let per: Vec<usize> = (0..k).map(|f| (0..labels.len()).filter(|&i| folds[i] == f && labels[i] == l).count()).collect();
                prop_assert!(per.iter().max().unwrap() - per.iter().min().unwrap() <= 1);
            }
        }

        #[test]
        fn rebalanced_counts_are_equal(raw in prop::collection::vec(0usize..3, 1..60), seed in any::<u64>()) {
            let data: Vec<(usize, Label)> = raw.iter().enumerate().map(|(i, &c)| (i, Label::ALL[c])).collect();
            let before = counts(data.iter().map(|d| d.1));
            let after = counts(rebalance(&data, seed).iter().map(|d| d.1));
            let max = *before.iter().max().unwrap();
            for c in 0..3 {
                prop_assert_eq!(after[c], if before[c] == 0 { 0 } else { max });
            }
        }
    }
}

use std::collections::HashSet;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Label, NewsRecord};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SplitScheme {
    Ratio { train: f64, val: f64, test: f64 },
    KFold { k: usize },
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct DatasetSplit {
    pub train: Vec<NewsRecord>,
    pub validation: Vec<NewsRecord>,
    pub test: Vec<NewsRecord>,
    pub fold_id: Option<usize>,
}

/// Stratified, seeded splitting. `Ratio` yields one split; `KFold { k }`
/// yields `k` splits whose test sets partition the records. In fold `i` the
/// validation set is fold `i + 1 (mod k)` when `k >= 3` and empty otherwise.
pub fn make_splits(
    records: &[NewsRecord],
    scheme: SplitScheme,
    seed: u64,
) -> Result<Vec<DatasetSplit>> {
    let mut seen = HashSet::new();
    for r in records {
        if r.label.is_none() {
            return Err(Error::Invalid(format!("record {} is unlabeled", r.id)));
        }
        if !seen.insert(r.id.as_str()) {
            return Err(Error::Invalid(format!("duplicate record id {}", r.id)));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // Per-class shuffled index lists, class order fixed.
    let mut by_class: Vec<Vec<usize>> = [Label::True, Label::Fake]
        .iter()
        .map(|&l| {
            let mut idx: Vec<usize> = (0..records.len())
                .filter(|&i| records[i].label == Some(l))
                .collect();
            idx.shuffle(&mut rng);
            idx
        })
        .collect();

    let pick = |mut idx: Vec<usize>| -> Vec<NewsRecord> {
        idx.sort_unstable();
        idx.into_iter().map(|i| records[i].clone()).collect()
    };

    match scheme {
        SplitScheme::Ratio { train, val, test } => {
            if [train, val, test].iter().any(|r| !(0.0..=1.0).contains(r))
                || ((train + val + test) - 1.0).abs() > 1e-9
            {
                return Err(Error::Config(format!(
                    "split ratios must be in [0,1] and sum to 1, got ({train}, {val}, {test})"
                )));
            }
            let (mut tr, mut va, mut te) = (Vec::new(), Vec::new(), Vec::new());
            for idx in by_class.iter_mut() {
                let n = idx.len() as f64;
                let n_train = (n * train).round() as usize;
                let n_val = ((n * val).round() as usize).min(idx.len() - n_train.min(idx.len()));
                let n_train = n_train.min(idx.len());
                tr.extend_from_slice(&idx[..n_train]);
                va.extend_from_slice(&idx[n_train..n_train + n_val]);
                te.extend_from_slice(&idx[n_train + n_val..]);
            }
            Ok(vec![DatasetSplit {
                train: pick(tr),
                validation: pick(va),
                test: pick(te),
                fold_id: None,
            }])
        }
        SplitScheme::KFold { k } => {
            if k < 2 {
                return Err(Error::Config(format!("k-fold needs k >= 2, got {k}")));
            }
            if records.len() < k {
                return Err(Error::Invalid(format!(
                    "{} records cannot fill {k} folds",
                    records.len()
                )));
            }
            let mut folds: Vec<Vec<usize>> = vec![Vec::new(); k];
            // Deal classes round-robin with a shared counter so fold sizes
            // differ by at most one.
            let mut slot = 0usize;
            for idx in &by_class {
                for &i in idx {
                    folds[slot % k].push(i);
                    slot += 1;
                }
            }
            Ok((0..k)
                .map(|f| {
                    let val_fold = (k >= 3).then_some((f + 1) % k);
                    let train: Vec<usize> = (0..k)
                        .filter(|&g| g != f && Some(g) != val_fold)
                        .flat_map(|g| folds[g].iter().copied())
                        .collect();
                    DatasetSplit {
                        train: pick(train),
                        validation: val_fold.map(|g| pick(folds[g].clone())).unwrap_or_default(),
                        test: pick(folds[f].clone()),
                        fold_id: Some(f),
                    }
                })
                .collect())
        }
    }
}

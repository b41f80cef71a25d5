//! Confidence-gated pseudo-labels for augmented variants.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::augment::{augment_corpus, AugmentPlan, AugmentedRecord, RetryPolicy, Substituter, Translator};
use crate::corpus::{Label, NewsRecord};
use crate::error::{Error, Result};
use crate::network::model::supervised_loss;
use crate::network::{Featurizer, Model};

/// Candidate values for threshold tuning.
pub const THRESHOLD_GRID: [f64; 4] = [0.8, 0.85, 0.9, 0.95];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    pub tau_p: f64,
    pub tau_n: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds { tau_p: 0.9, tau_n: 0.9 }
    }
}

impl Thresholds {
    pub fn new(tau_p: f64, tau_n: f64) -> Result<Self> {
        let t = Thresholds { tau_p, tau_n };
        t.validate()?;
        Ok(t)
    }

    /// A single confidence threshold used for both classes.
    pub fn single(gamma: f64) -> Result<Self> {
        Thresholds::new(gamma, gamma)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("tau_p", self.tau_p), ("tau_n", self.tau_n)] {
            if !(v > 0.5 && v <= 1.0) {
                return Err(Error::Config(format!("{name} = {v} must lie in (0.5, 1]")));
            }
        }
        Ok(())
    }

    /// Pseudo-label for class-1 probability `p`, if confident enough.
    pub fn admit(&self, p: f64) -> Option<Label> {
        if p >= self.tau_p {
            Some(Label::Fake)
        } else if 1.0 - p >= self.tau_n {
            Some(Label::True)
        } else {
            None
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PseudoExample {
    pub variant: AugmentedRecord,
    pub p: f64,
    pub y_tilde: Label,
    pub gate: bool,
}

/// Class-1 probability for each variant, in order. Variants that fail to
/// encode are dropped and counted.
pub fn score_variants(
    variants: Vec<AugmentedRecord>,
    model: &Model,
    featurizer: &Featurizer<'_>,
) -> (Vec<(AugmentedRecord, f64)>, usize) {
    let mut out = Vec::with_capacity(variants.len());
    let mut skipped = 0;
    for v in variants {
        let scored = featurizer
            .prepare(&v.record)
            .and_then(|input| model.predict(&input, &featurizer.resources.embeddings));
        match scored {
            Ok(p) => out.push((v, p[1])),
            Err(e) => {
                log::warn!("variant {} not scored: {e}", v.record.id);
                skipped += 1;
            }
        }
    }
    (out, skipped)
}

/// Keeps confidently scored variants with their pseudo-labels.
pub fn select(scored: Vec<(AugmentedRecord, f64)>, thresholds: Thresholds) -> Result<Vec<PseudoExample>> {
    thresholds.validate()?;
    Ok(scored
        .into_iter()
        .filter_map(|(variant, p)| {
            thresholds.admit(p).map(|y_tilde| PseudoExample {
                variant,
                p,
                y_tilde,
                gate: true,
            })
        })
        .collect())
}

/// Gated cross-entropy averaged over the gated examples. `y_hat[i]` is the
/// current class-1 probability of `examples[i]`.
pub fn pseudo_loss(examples: &[PseudoExample], y_hat: &[f64]) -> Result<f64> {
    if examples.len() != y_hat.len() {
        return Err(Error::Shape(format!("{} examples but {} probabilities", examples.len(), y_hat.len())));
    }
    let s = examples.iter().filter(|e| e.gate).count();
    if s == 0 {
        log::warn!("pseudo-label loss over a batch with no gated examples");
        return Ok(0.0);
    }
    let total: f64 = examples
        .iter()
        .zip(y_hat)
        .filter(|(e, _)| e.gate)
        .map(|(e, &p)| supervised_loss(e.y_tilde, p))
        .sum();
    Ok(total / s as f64)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StrategyCounts {
    pub variants: usize,
    pub selected_pos: usize,
    pub selected_neg: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundReport {
    pub round: usize,
    pub variants: usize,
    pub selected_pos: usize,
    pub selected_neg: usize,
    pub tau_p: f64,
    pub tau_n: f64,
    /// Scored but below both thresholds.
    pub dropped: usize,
    /// Lost to translation or encoding failures before scoring.
    pub skipped: usize,
    pub per_strategy: BTreeMap<String, StrategyCounts>,
}

/// Labeled originals plus gated pseudo-labeled variants.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpandedSet {
    pub labeled: Vec<NewsRecord>,
    pub pseudo: Vec<PseudoExample>,
}

/// Everything an enhancement round needs besides the data and the model.
#[derive(Clone, Copy)]
pub struct EnhanceContext<'a> {
    pub featurizer: &'a Featurizer<'a>,
    pub substituter: &'a Substituter<'a>,
    pub translator: Option<&'a dyn Translator>,
    pub retry: RetryPolicy,
}

/// Augments `labeled`, scores the variants with `model` and keeps the
/// confident ones.
pub fn enhancement_round(
    labeled: &[NewsRecord],
    model: &Model,
    plan: &AugmentPlan,
    thresholds: Thresholds,
    ctx: EnhanceContext<'_>,
    seed: u64,
    round: usize,
) -> Result<(ExpandedSet, RoundReport)> {
    thresholds.validate()?;
    let aug = augment_corpus(labeled, plan, seed, ctx.substituter, ctx.translator, ctx.retry)?;
    let (scored, encode_skips) = score_variants(aug.variants, model, ctx.featurizer);
    let mut per_strategy: BTreeMap<String, StrategyCounts> = BTreeMap::new();
    for (v, _) in &scored {
        per_strategy.entry(strategy_name(v)).or_default().variants += 1;
    }
    let n_scored = scored.len();
    let pseudo = select(scored, thresholds)?;
    let (mut pos, mut neg) = (0, 0);
    for e in &pseudo {
        let c = per_strategy.entry(strategy_name(&e.variant)).or_default();
        match e.y_tilde {
            Label::Fake => {
                pos += 1;
                c.selected_pos += 1;
            }
            Label::True => {
                neg += 1;
                c.selected_neg += 1;
            }
        }
    }
    if pseudo.is_empty() {
        log::warn!("enhancement round {round}: no variant passed the thresholds");
    }
    let report = RoundReport {
        round,
        variants: n_scored,
        selected_pos: pos,
        selected_neg: neg,
        tau_p: thresholds.tau_p,
        tau_n: thresholds.tau_n,
        dropped: n_scored - pos - neg,
        skipped: aug.skipped + encode_skips,
        per_strategy,
    };
    Ok((
        ExpandedSet {
            labeled: labeled.to_vec(),
            pseudo,
        },
        report,
    ))
}

fn strategy_name(v: &AugmentedRecord) -> String {
    serde_json::to_value(v.strategy)
        .ok()
        .and_then(|s| s.as_str().map(str::to_string))
        .unwrap_or_default()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::augment::Strategy;

    fn variant(i: usize) -> AugmentedRecord {
        AugmentedRecord {
            parent_id: format!("p{i}"),
            record: NewsRecord::new(format!("p{i}#0-0"), "x", vec![], None),
            strategy: Strategy::Synonym,
            edit_count: 0,
            pivot: None,
        }
    }

    #[test]
    fn boundaries_are_inclusive() {
        let t = Thresholds::new(0.9, 0.8).unwrap();
        assert_eq!(t.admit(0.95), Some(Label::Fake));
        assert_eq!(t.admit(0.90), Some(Label::Fake));
        assert_eq!(t.admit(0.15), Some(Label::True));
        assert_eq!(t.admit(0.3), None);
    }

    #[test]
    fn thresholds_must_exceed_half() {
        assert!(Thresholds::new(0.4, 0.9).is_err());
        assert!(Thresholds::new(0.9, 0.5).is_err());
        assert!(Thresholds::new(1.0, 1.0).is_ok());
        assert!(Thresholds::new(1.01, 0.9).is_err());
    }

    #[test]
    fn half_probability_never_selected_at_one() {
        let scored = (0..5).map(|i| (variant(i), 0.5)).collect();
        assert!(select(scored, Thresholds::new(1.0, 1.0).unwrap()).unwrap().is_empty());
    }

    #[test]
    fn pseudo_loss_closed_forms() {
        let ex = |y, gate| PseudoExample {
            variant: variant(0),
            p: 0.5,
            y_tilde: y,
            gate,
        };
        assert!(pseudo_loss(&[ex(Label::Fake, true)], &[1.0 - 1e-7]).unwrap() < 1e-6);
        assert_eq!(pseudo_loss(&[ex(Label::Fake, false)], &[0.2]).unwrap(), 0.0);
        let two = [ex(Label::Fake, true), ex(Label::True, true)];
        assert!((pseudo_loss(&two, &[0.5, 0.5]).unwrap() - 2f64.ln()).abs() < 1e-12);
    }
}

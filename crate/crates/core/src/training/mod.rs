//! Optimization, model selection, enhancement phases and cross-validation.

mod metrics;
mod optim;

use std::collections::{HashMap, HashSet};
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use metrics::{compute_metrics, f1, mean_report, MetricReport, MetricsFile};
pub use optim::Adam;

use crate::augment::{default_stopwords, AugmentPlan, RetryPolicy, Substituter, SynonymDictionary, Translator};
use crate::corpus::{make_splits, DatasetSplit, Label, NewsRecord, SplitScheme};
use crate::emotion::EmotionConfig;
use crate::error::{Error, Result};
use crate::network::{Featurizer, Model, ModelConfig, RecordInput, WeightedExample};
use crate::pseudolabel::{enhancement_round, EnhanceContext, RoundReport, Thresholds, THRESHOLD_GRID};
use crate::resources::Resources;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    /// Mean pooling instead of co-attention; keeps the temporal feature.
    DidaT,
    /// Adds co-attention.
    DidaD,
    /// Adds augmentation with labels copied from the parent record.
    DidaA,
    /// Adds confidence-gated pseudo-labeled augmentation.
    Dida,
}

impl Variant {
    pub const ALL: [Variant; 4] = [Variant::DidaT, Variant::DidaD, Variant::DidaA, Variant::Dida];

    pub fn name(self) -> &'static str {
        match self {
            Variant::DidaT => "dida_t",
            Variant::DidaD => "dida_d",
            Variant::DidaA => "dida_a",
            Variant::Dida => "dida",
        }
    }

    pub fn co_attention(self) -> bool {
        self != Variant::DidaT
    }

    pub fn augments(self) -> bool {
        matches!(self, Variant::DidaA | Variant::Dida)
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Variant::ALL
            .into_iter()
            .find(|v| v.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown variant `{s}` (expected dida_t, dida_d, dida_a or dida)")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DatasetPreset {
    Rumoureval19,
    Weibo16,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub l2: f64,
    pub max_text_len: usize,
    pub max_comments: usize,
    pub embedding_dim: usize,
    pub hidden_dim: usize,
    pub seed: u64,
    pub variant: Variant,
    /// Drop the temporal comment-emotion feature.
    pub ablate_temporal: bool,
    /// Epochs of training on the expanded set; defaults to `epochs`.
    pub enhance_epochs: Option<usize>,
    pub emotion: EmotionConfig,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig::preset(DatasetPreset::Rumoureval19)
    }
}

impl TrainConfig {
    pub fn preset(dataset: DatasetPreset) -> Self {
        let (max_text_len, max_comments, embedding_dim) = match dataset {
            DatasetPreset::Rumoureval19 => (50, 345, 200),
            DatasetPreset::Weibo16 => (100, 100, 300),
        };
        TrainConfig {
            learning_rate: 1e-3,
            epochs: 50,
            batch_size: 32,
            l2: 0.01,
            max_text_len,
            max_comments,
            embedding_dim,
            hidden_dim: 32,
            seed: 0,
            variant: Variant::Dida,
            ablate_temporal: false,
            enhance_epochs: None,
            emotion: EmotionConfig::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Config(format!("learning rate {} must be positive", self.learning_rate)));
        }
        if self.batch_size == 0 || self.max_text_len == 0 || self.hidden_dim == 0 {
            return Err(Error::Config("batch_size, max_text_len and hidden_dim must be positive".into()));
        }
        if !(self.l2 >= 0.0) {
            return Err(Error::Config(format!("l2 {} must be non-negative", self.l2)));
        }
        Ok(())
    }

    pub fn model_config(&self, resources: &Resources, emotion_dim: usize) -> ModelConfig {
        ModelConfig {
            vocab_size: resources.embeddings.len(),
            embedding_dim: resources.embeddings.dim(),
            hidden_dim: self.hidden_dim,
            emotion_dim,
            co_attention: self.variant.co_attention(),
            temporal: !self.ablate_temporal,
        }
    }

    pub fn featurizer<'a>(&self, resources: &'a Resources) -> Featurizer<'a> {
        Featurizer::new(resources, self.emotion, self.max_text_len, self.max_comments)
    }
}

/// Enhancement settings: what to generate and how to admit it.
pub struct EnhanceSetup {
    pub plan: AugmentPlan,
    pub thresholds: Thresholds,
    /// Pick thresholds from the grid by validation macro F1.
    pub tune_thresholds: bool,
    pub synonyms: Option<SynonymDictionary>,
    pub stopwords: HashSet<String>,
    pub translator: Option<Box<dyn Translator>>,
    pub retry: RetryPolicy,
}

impl Default for EnhanceSetup {
    fn default() -> Self {
        EnhanceSetup {
            plan: AugmentPlan::default(),
            thresholds: Thresholds::default(),
            tune_thresholds: false,
            synonyms: None,
            stopwords: default_stopwords(),
            translator: None,
            retry: RetryPolicy::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HistoryRow {
    /// Counted across phases.
    pub epoch: usize,
    pub phase: u8,
    pub train_loss: f64,
    /// NaN without a validation set.
    pub val_macro_f1: f64,
    pub val_accuracy: f64,
}

pub fn write_history(rows: &[HistoryRow], path: &Path) -> Result<()> {
    let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut text = String::from("epoch,train_loss,val_macro_f1,val_accuracy,phase\n");
    for r in rows {
        text.push_str(&format!(
            "{},{},{},{},{}\n",
            r.epoch, r.train_loss, r.val_macro_f1, r.val_accuracy, r.phase
        ));
    }
    f.write_all(text.as_bytes()).map_err(|e| Error::io(path, e))
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub model: Model,
    pub history: Vec<HistoryRow>,
    /// Epoch of the kept checkpoint (1-based).
    pub best_epoch: usize,
    pub best_val_macro_f1: Option<f64>,
    pub round: Option<RoundReport>,
}

/// Featurized records with labels.
pub struct Prepared {
    pub inputs: Vec<RecordInput>,
    pub labels: Vec<Label>,
}

impl Prepared {
    pub fn new(records: &[NewsRecord], featurizer: &Featurizer<'_>) -> Result<Self> {
        let mut labels = Vec::with_capacity(records.len());
        for r in records {
            labels.push(r.label.ok_or_else(|| Error::Invalid(format!("record {} has no label", r.id)))?);
        }
        Ok(Prepared {
            inputs: featurizer.prepare_all(records)?,
            labels,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

pub fn evaluate_prepared(model: &Model, data: &Prepared, resources: &Resources) -> Result<MetricReport> {
    let probs = data
        .inputs
        .iter()
        .map(|i| model.predict(i, &resources.embeddings).map(|p| p[1]))
        .collect::<Result<Vec<_>>>()?;
    compute_metrics(&data.labels, &probs)
}

pub fn evaluate(
    model: &Model,
    records: &[NewsRecord],
    config: &TrainConfig,
    resources: &Resources,
) -> Result<MetricReport> {
    if records.is_empty() {
        return Err(Error::Invalid("cannot evaluate an empty record set".into()));
    }
    evaluate_prepared(model, &Prepared::new(records, &config.featurizer(resources))?, resources)
}

fn derive_seed(seed: u64, stream: u64) -> u64 {
    seed ^ stream.wrapping_mul(0x9e37_79b9_7f4a_7c15)
}

/// Optimizer state plus best-checkpoint bookkeeping shared by all phases.
struct Trainer<'a> {
    config: &'a TrainConfig,
    resources: &'a Resources,
    model: Model,
    adam: Adam,
    best: Option<(f64, Model, usize)>,
    history: Vec<HistoryRow>,
    epoch: usize,
}

impl<'a> Trainer<'a> {
    fn new(model: Model, config: &'a TrainConfig, resources: &'a Resources) -> Self {
        let adam = Adam::new(&model.params, config.learning_rate);
        Trainer {
            config,
            resources,
            model,
            adam,
            best: None,
            history: Vec::new(),
            epoch: 0,
        }
    }

    /// Runs `epochs` epochs. Each batch minimizes the mean supervised loss
    /// plus the mean loss over the extra (pseudo-labeled) examples in it.
    fn run(
        &mut self,
        supervised: &Prepared,
        extra: &[(RecordInput, Label)],
        validation: Option<&Prepared>,
        epochs: usize,
        phase: u8,
        rng: &mut ChaCha8Rng,
    ) -> Result<()> {
        let mut order: Vec<(bool, usize)> = (0..supervised.len())
            .map(|i| (false, i))
            .chain((0..extra.len()).map(|i| (true, i)))
            .collect();
        for _ in 0..epochs {
            self.epoch += 1;
            order.shuffle(rng);
            let mut loss_sum = 0.0;
            let mut n_batches = 0;
            for (bi, chunk) in order.chunks(self.config.batch_size).enumerate() {
                let n_sup = chunk.iter().filter(|(x, _)| !x).count();
                let n_extra = chunk.len() - n_sup;
                let batch: Vec<WeightedExample<'_>> = chunk
                    .iter()
                    .map(|&(is_extra, i)| {
                        if is_extra {
                            WeightedExample {
                                input: &extra[i].0,
                                label: extra[i].1,
                                weight: 1.0 / n_extra as f64,
                            }
                        } else {
                            WeightedExample {
                                input: &supervised.inputs[i],
                                label: supervised.labels[i],
                                weight: 1.0 / n_sup as f64,
                            }
                        }
                    })
                    .collect();
                let (loss, grad) = self
                    .model
                    .loss_and_grad(&batch, &self.resources.embeddings, self.config.l2)
                    .map_err(|e| Error::NonFinite(format!("epoch {}, batch {bi}: {e}", self.epoch)))?;
                if !loss.is_finite() {
                    return Err(Error::NonFinite(format!("loss diverged at epoch {}, batch {bi}", self.epoch)));
                }
                self.adam.step(&mut self.model.params, &grad);
                loss_sum += loss;
                n_batches += 1;
            }
            let val = match validation {
                Some(v) if !v.is_empty() => Some(evaluate_prepared(&self.model, v, self.resources)?),
                _ => None,
            };
            let val_f1 = val.map(|r| r.macro_f1);
            let train_loss = if n_batches == 0 { 0.0 } else { loss_sum / n_batches as f64 };
            log::info!(
                "phase {phase} epoch {}: loss {train_loss:.5} val macro F1 {}",
                self.epoch,
                val_f1.map_or("-".into(), |f| format!("{f:.4}"))
            );
            self.history.push(HistoryRow {
                epoch: self.epoch,
                phase,
                train_loss,
                val_macro_f1: val_f1.unwrap_or(f64::NAN),
                val_accuracy: val.map_or(f64::NAN, |r| r.accuracy),
            });
            let score = val_f1.unwrap_or(f64::NEG_INFINITY);
            let better = match &self.best {
                None => true,
                Some((best, _, _)) => score > *best || (val_f1.is_none() && score == *best),
            };
            if better {
                self.best = Some((score, self.model.clone(), self.epoch));
            }
        }
        Ok(())
    }

    fn outcome(self, round: Option<RoundReport>) -> TrainOutcome {
        let (score, model, best_epoch) = self.best.unwrap_or((f64::NEG_INFINITY, self.model.clone(), 0));
        TrainOutcome {
            model,
            history: self.history,
            best_epoch,
            best_val_macro_f1: score.is_finite().then_some(score),
            round,
        }
    }
}

fn phase_one<'a>(
    split: &DatasetSplit,
    config: &'a TrainConfig,
    resources: &'a Resources,
) -> Result<(Trainer<'a>, Prepared, Option<Prepared>)> {
    config.validate()?;
    if split.train.is_empty() {
        return Err(Error::Invalid("training split is empty".into()));
    }
    let featurizer = config.featurizer(resources);
    let model_config = config.model_config(resources, featurizer.emotion_dim());
    let model = Model::new(model_config, config.seed)?;
    let train = Prepared::new(&split.train, &featurizer)?;
    let validation = if split.validation.is_empty() {
        None
    } else {
        Some(Prepared::new(&split.validation, &featurizer)?)
    };
    let mut trainer = Trainer::new(model, config, resources);
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(config.seed, 1));
    trainer.run(&train, &[], validation.as_ref(), config.epochs, 1, &mut rng)?;
    Ok((trainer, train, validation))
}

/// Trains on `split.train` and keeps the epoch with the best validation
/// macro F1 (earliest on ties, last epoch without validation data).
pub fn train(split: &DatasetSplit, config: &TrainConfig, resources: &Resources) -> Result<TrainOutcome> {
    let (trainer, _, _) = phase_one(split, config, resources)?;
    Ok(trainer.outcome(None))
}

/// Plain training, then one enhancement round, then further training on the
/// expanded set. `dida` admits variants by confidence; `dida_a` admits every
/// variant with its parent's label. Other variants train plainly.
pub fn train_with_enhancement(
    split: &DatasetSplit,
    config: &TrainConfig,
    resources: &Resources,
    setup: &EnhanceSetup,
) -> Result<TrainOutcome> {
    if !config.variant.augments() {
        return train(split, config, resources);
    }
    setup.thresholds.validate()?;
    let (trainer, train_data, validation) = phase_one(split, config, resources)?;
    let featurizer = config.featurizer(resources);
    let substituter = Substituter {
        tokenizer: &resources.tokenizer,
        lexicon: &resources.lexicon,
        stopwords: &setup.stopwords,
        synonyms: setup.synonyms.as_ref(),
        embeddings: Some(&resources.embeddings),
        masked_lm: None,
    };
    let ctx = EnhanceContext {
        featurizer: &featurizer,
        substituter: &substituter,
        translator: setup.translator.as_deref(),
        retry: setup.retry,
    };
    let aug_seed = derive_seed(config.seed, 2);
    let epochs = config.enhance_epochs.unwrap_or(config.epochs);

    if config.variant == Variant::DidaA {
        // Thresholds are irrelevant here: score nothing, copy parent labels.
        let aug = crate::augment::augment_corpus(
            &split.train,
            &setup.plan,
            aug_seed,
            &substituter,
            ctx.translator,
            ctx.retry,
        )?;
        let parents: HashMap<&str, Label> = split
            .train
            .iter()
            .filter_map(|r| r.label.map(|l| (r.id.as_str(), l)))
            .collect();
        let mut extra = Vec::with_capacity(aug.variants.len());
        for v in &aug.variants {
            extra.push((featurizer.prepare(&v.record)?, parents[v.parent_id.as_str()]));
        }
        let mut trainer = trainer;
        if !extra.is_empty() {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(config.seed, 3));
            trainer.run(&train_data, &extra, validation.as_ref(), epochs, 3, &mut rng)?;
        }
        return Ok(trainer.outcome(None));
    }

    let phase1_model = trainer.model.clone();
    let grid: Vec<Thresholds> = if setup.tune_thresholds && validation.is_some() {
        THRESHOLD_GRID
            .iter()
            .flat_map(|&p| THRESHOLD_GRID.iter().map(move |&n| Thresholds { tau_p: p, tau_n: n }))
            .collect()
    } else {
        vec![setup.thresholds]
    };
    let mut chosen: Option<(f64, TrainOutcome)> = None;
    for th in grid {
        let (expanded, report) = enhancement_round(&split.train, &phase1_model, &setup.plan, th, ctx, aug_seed, 1)?;
        let mut t = Trainer {
            config,
            resources,
            model: trainer.model.clone(),
            adam: trainer.adam.clone(),
            best: trainer.best.clone(),
            history: trainer.history.clone(),
            epoch: trainer.epoch,
        };
        if !expanded.pseudo.is_empty() {
            let extra = expanded
                .pseudo
                .iter()
                .map(|e| Ok((featurizer.prepare(&e.variant.record)?, e.y_tilde)))
                .collect::<Result<Vec<_>>>()?;
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(config.seed, 3));
            t.run(&train_data, &extra, validation.as_ref(), epochs, 3, &mut rng)?;
        }
        let outcome = t.outcome(Some(report));
        let score = outcome.best_val_macro_f1.unwrap_or(f64::NEG_INFINITY);
        if chosen.as_ref().map_or(true, |(s, _)| score > *s) {
            chosen = Some((score, outcome));
        }
    }
    Ok(chosen.expect("grid is non-empty").1)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossValidation {
    pub metrics: MetricsFile,
    pub best_epochs: Vec<usize>,
}

/// Stratified k-fold: each fold tests on one part and validates on the next.
pub fn crossvalidate(
    records: &[NewsRecord],
    k: usize,
    config: &TrainConfig,
    resources: &Resources,
    setup: Option<&EnhanceSetup>,
) -> Result<CrossValidation> {
    let splits = make_splits(records, SplitScheme::KFold { k }, config.seed)?;
    let mut folds = Vec::with_capacity(k);
    let mut best_epochs = Vec::with_capacity(k);
    for split in &splits {
        let outcome = match setup {
            Some(s) => train_with_enhancement(split, config, resources, s)?,
            None => train(split, config, resources)?,
        };
        let report = evaluate(&outcome.model, &split.test, config, resources)?;
        log::info!(
            "fold {}: accuracy {:.4} macro F1 {:.4} rmse {:.4}",
            split.fold_id.unwrap_or(0),
            report.accuracy,
            report.macro_f1,
            report.rmse
        );
        folds.push(report);
        best_epochs.push(outcome.best_epoch);
    }
    Ok(CrossValidation {
        metrics: MetricsFile::new(folds)?,
        best_epochs,
    })
}

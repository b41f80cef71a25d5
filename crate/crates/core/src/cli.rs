//! `dida` command line: config resolution and one function per subcommand.
//!
//! Settings come from built-in defaults, then an optional TOML file, then
//! command-line flags. Every command writes the resolved config next to its
//! outputs.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::augment::{AugmentPlan, HttpTranslator, StubTranslator, SynonymDictionary, Translator};
use crate::corpus::synthetic::{synthetic_embeddings, synthetic_lexicon, synthetic_synonyms};
use crate::corpus::{
    generate_synthetic, load_dataset, make_splits, write_jsonl, DatasetFormat, DatasetSplit, NewsRecord, SplitScheme,
    SyntheticParams,
};
use crate::emotion::EmotionExtractor;
use crate::error::{Error, Result};
use crate::network::{load_checkpoint, save_checkpoint, Model};
use crate::pseudolabel::{enhancement_round, EnhanceContext, Thresholds};
use crate::resources::Resources;
use crate::training::{
    crossvalidate, evaluate, train_with_enhancement, write_history, EnhanceSetup, MetricsFile, TrainConfig,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DataConfig {
    /// Whole dataset, split on the fly.
    pub path: Option<PathBuf>,
    pub format: String,
    pub max_records: Option<usize>,
    /// Pre-split files; take precedence over `path`.
    pub train: Option<PathBuf>,
    pub validation: Option<PathBuf>,
    pub test: Option<PathBuf>,
    /// train, validation, test
    pub split_ratios: [f64; 3],
    pub folds: usize,
}

impl Default for DataConfig {
    fn default() -> Self {
        DataConfig {
            path: None,
            format: "jsonl".into(),
            max_records: None,
            train: None,
            validation: None,
            test: None,
            split_ratios: [0.7, 0.2, 0.1],
            folds: 5,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ResourceConfig {
    pub embeddings: Option<PathBuf>,
    pub lexicon: Option<PathBuf>,
    pub synonyms: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ThresholdConfig {
    pub tau_p: f64,
    pub tau_n: f64,
    /// Single threshold for both classes; overrides `tau_p`/`tau_n`.
    pub gamma: Option<f64>,
    pub tune: bool,
}

impl Default for ThresholdConfig {
    fn default() -> Self {
        let t = Thresholds::default();
        ThresholdConfig {
            tau_p: t.tau_p,
            tau_n: t.tau_n,
            gamma: None,
            tune: false,
        }
    }
}

impl ThresholdConfig {
    pub fn resolve(&self) -> Result<Thresholds> {
        match self.gamma {
            Some(g) => Thresholds::single(g),
            None => Thresholds::new(self.tau_p, self.tau_n),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TranslatorConfig {
    /// `none`, `stub` or `http`.
    pub kind: String,
    pub endpoint: Option<String>,
}

impl Default for TranslatorConfig {
    fn default() -> Self {
        TranslatorConfig {
            kind: "none".into(),
            endpoint: None,
        }
    }
}

impl TranslatorConfig {
    pub fn build(&self) -> Result<Option<Box<dyn Translator>>> {
        match self.kind.as_str() {
            "none" => Ok(None),
            "stub" => Ok(Some(Box::new(StubTranslator))),
            "http" => {
                let endpoint = self
                    .endpoint
                    .clone()
                    .ok_or_else(|| Error::Config("http translator needs an endpoint".into()))?;
                Ok(Some(Box::new(HttpTranslator::from_env(endpoint))))
            }
            other => Err(Error::Config(format!("unknown translator `{other}` (none, stub, http)"))),
        }
    }
}

/// Everything a run depends on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub output: PathBuf,
    pub data: DataConfig,
    pub resources: ResourceConfig,
    pub train: TrainConfig,
    pub augment: AugmentPlan,
    pub thresholds: ThresholdConfig,
    pub translator: TranslatorConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            output: PathBuf::from("runs/latest"),
            data: DataConfig::default(),
            resources: ResourceConfig::default(),
            train: TrainConfig::default(),
            augment: AugmentPlan::default(),
            thresholds: ThresholdConfig::default(),
            translator: TranslatorConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    pub fn save(&self, dir: &Path) -> Result<()> {
        let path = dir.join("config.toml");
        fs::write(&path, self.to_toml()).map_err(|e| Error::io(&path, e))
    }

    pub fn load_resources(&self) -> Result<Resources> {
        let emb = self
            .resources
            .embeddings
            .as_deref()
            .ok_or_else(|| Error::Config("no embeddings path configured".into()))?;
        let lex = self
            .resources
            .lexicon
            .as_deref()
            .ok_or_else(|| Error::Config("no lexicon directory configured".into()))?;
        Resources::load(emb, lex)
    }

    pub fn load_synonyms(&self) -> Result<Option<SynonymDictionary>> {
        self.resources.synonyms.as_deref().map(SynonymDictionary::load).transpose()
    }

    fn format(&self) -> Result<DatasetFormat> {
        self.data.format.parse()
    }

    fn load_records(&self, path: &Path) -> Result<Vec<NewsRecord>> {
        let report = load_dataset(path, self.format()?, self.data.max_records)?;
        if report.skipped_records > 0 {
            log::warn!("{}: skipped {} malformed records", path.display(), report.skipped_records);
        }
        Ok(report.records)
    }

    /// Pre-split files if configured, else a ratio split of `data.path`.
    pub fn load_split(&self) -> Result<DatasetSplit> {
        if let Some(train) = &self.data.train {
            let opt = |p: &Option<PathBuf>| -> Result<Vec<NewsRecord>> {
                p.as_deref().map(|p| self.load_records(p)).transpose().map(Option::unwrap_or_default)
            };
            return Ok(DatasetSplit {
                train: self.load_records(train)?,
                validation: opt(&self.data.validation)?,
                test: opt(&self.data.test)?,
                fold_id: None,
            });
        }
        let records = self.load_all()?;
        let [train, val, test] = self.data.split_ratios;
        let mut splits = make_splits(&records, SplitScheme::Ratio { train, val, test }, self.train.seed)?;
        Ok(splits.remove(0))
    }

    pub fn load_all(&self) -> Result<Vec<NewsRecord>> {
        let path = self
            .data
            .path
            .as_deref()
            .ok_or_else(|| Error::Config("no dataset path configured (data.path or --data)".into()))?;
        self.load_records(path)
    }

    pub fn enhance_setup(&self) -> Result<EnhanceSetup> {
        Ok(EnhanceSetup {
            plan: self.augment.clone(),
            thresholds: self.thresholds.resolve()?,
            tune_thresholds: self.thresholds.tune,
            synonyms: self.load_synonyms()?,
            translator: self.translator.build()?,
            ..EnhanceSetup::default()
        })
    }
}

#[derive(Debug, Parser)]
#[command(name = "dida", version, about = "Emotion-aware fake news detection")]
pub struct Cli {
    /// Repeat for more log output.
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Convert a raw dataset to JSONL and write split manifests.
    Prepare(PrepareArgs),
    /// Train a model and write its checkpoint and metrics.
    Train(RunArgs),
    /// Augment, pseudo-label and write the expanded set.
    Enhance(EnhanceArgs),
    /// Score a checkpoint on labeled data.
    Evaluate(EvalArgs),
    /// Per-record probabilities, optionally with comment emotion series.
    Predict(PredictArgs),
    /// Stratified k-fold cross-validation.
    Crossval(RunArgs),
    /// Write a synthetic corpus with matching resources.
    Synth(SynthArgs),
}

/// Overrides shared by commands that read a run config.
#[derive(Debug, Clone, Default, Args)]
pub struct RunArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Dataset file (split on the fly).
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[arg(long)]
    pub format: Option<String>,
    #[arg(long)]
    pub max_records: Option<usize>,
    #[arg(long)]
    pub train_file: Option<PathBuf>,
    #[arg(long)]
    pub validation_file: Option<PathBuf>,
    #[arg(long)]
    pub test_file: Option<PathBuf>,
    #[arg(long)]
    pub embeddings: Option<PathBuf>,
    #[arg(long)]
    pub lexicon: Option<PathBuf>,
    #[arg(long)]
    pub synonyms: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub variant: Option<String>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub learning_rate: Option<f64>,
    #[arg(long)]
    pub l2: Option<f64>,
    #[arg(long)]
    pub hidden_dim: Option<usize>,
    #[arg(long)]
    pub max_text_len: Option<usize>,
    #[arg(long)]
    pub max_comments: Option<usize>,
    #[arg(long)]
    pub ablate_temporal: bool,
    #[arg(long)]
    pub folds: Option<usize>,
    #[arg(long)]
    pub tau_p: Option<f64>,
    #[arg(long)]
    pub tau_n: Option<f64>,
    #[arg(long)]
    pub tune_thresholds: bool,
    /// `none`, `stub` or `http`.
    #[arg(long)]
    pub translator: Option<String>,
    #[arg(long)]
    pub translator_endpoint: Option<String>,
}

impl RunArgs {
    /// Defaults, then the config file, then flags.
    pub fn resolve(&self) -> Result<RunConfig> {
        let mut c = match &self.config {
            Some(p) => RunConfig::from_file(p)?,
            None => RunConfig::default(),
        };
        macro_rules! set {
            ($field:expr, $value:expr) => {
                if let Some(v) = $value.clone() {
                    $field = v;
                }
            };
        }
        if self.data.is_some() {
            c.data.path = self.data.clone();
        }
        set!(c.data.format, self.format);
        if self.max_records.is_some() {
            c.data.max_records = self.max_records;
        }
        if self.train_file.is_some() {
            c.data.train = self.train_file.clone();
        }
        if self.validation_file.is_some() {
            c.data.validation = self.validation_file.clone();
        }
        if self.test_file.is_some() {
            c.data.test = self.test_file.clone();
        }
        if self.embeddings.is_some() {
            c.resources.embeddings = self.embeddings.clone();
        }
        if self.lexicon.is_some() {
            c.resources.lexicon = self.lexicon.clone();
        }
        if self.synonyms.is_some() {
            c.resources.synonyms = self.synonyms.clone();
        }
        set!(c.output, self.out);
        set!(c.train.seed, self.seed);
        if let Some(v) = &self.variant {
            c.train.variant = v.parse()?;
        }
        set!(c.train.epochs, self.epochs);
        set!(c.train.batch_size, self.batch_size);
        set!(c.train.learning_rate, self.learning_rate);
        set!(c.train.l2, self.l2);
        set!(c.train.hidden_dim, self.hidden_dim);
        set!(c.train.max_text_len, self.max_text_len);
        set!(c.train.max_comments, self.max_comments);
        c.train.ablate_temporal |= self.ablate_temporal;
        set!(c.data.folds, self.folds);
        if self.tau_p.is_some() || self.tau_n.is_some() {
            c.thresholds.gamma = None;
        }
        set!(c.thresholds.tau_p, self.tau_p);
        set!(c.thresholds.tau_n, self.tau_n);
        c.thresholds.tune |= self.tune_thresholds;
        set!(c.translator.kind, self.translator);
        if self.translator_endpoint.is_some() {
            c.translator.endpoint = self.translator_endpoint.clone();
        }
        c.train.validate()?;
        c.thresholds.resolve()?;
        Ok(c)
    }
}

#[derive(Debug, Clone, Args)]
pub struct PrepareArgs {
    #[arg(long)]
    pub format: String,
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub max_records: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Comma separated train,validation,test fractions.
    #[arg(long, default_value = "0.7,0.2,0.1")]
    pub ratios: String,
    #[arg(long, default_value_t = 5)]
    pub folds: usize,
}

#[derive(Debug, Clone, Args)]
pub struct EnhanceArgs {
    #[command(flatten)]
    pub run: RunArgs,
    #[arg(long)]
    pub checkpoint: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct EvalArgs {
    #[command(flatten)]
    pub run: RunArgs,
    #[arg(long)]
    pub checkpoint: PathBuf,
    /// Which split of the configured data to score.
    #[arg(long, default_value = "test")]
    pub split: String,
}

#[derive(Debug, Clone, Args)]
pub struct PredictArgs {
    #[command(flatten)]
    pub run: RunArgs,
    #[arg(long)]
    pub checkpoint: PathBuf,
    /// CSV of (record_id, ts, score), one row per comment.
    #[arg(long)]
    pub export_emotion_series: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct SynthArgs {
    #[arg(long, default_value_t = 200)]
    pub n: usize,
    #[arg(long, default_value_t = 13)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub interaction_fraction: Option<f64>,
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let text = serde_json::to_string_pretty(value).expect("serializable") + "\n";
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

#[derive(Serialize)]
struct SplitManifest<'a> {
    fold_id: Option<usize>,
    train: Vec<&'a str>,
    validation: Vec<&'a str>,
    test: Vec<&'a str>,
}

fn ids(records: &[NewsRecord]) -> Vec<&str> {
    records.iter().map(|r| r.id.as_str()).collect()
}

fn manifest(split: &DatasetSplit) -> SplitManifest<'_> {
    SplitManifest {
        fold_id: split.fold_id,
        train: ids(&split.train),
        validation: ids(&split.validation),
        test: ids(&split.test),
    }
}

pub fn cmd_prepare(args: &PrepareArgs) -> Result<()> {
    let format: DatasetFormat = args.format.parse()?;
    let ratios: Vec<f64> = args
        .ratios
        .split(',')
        .map(|s| s.trim().parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| Error::Config(format!("bad --ratios `{}`: {e}", args.ratios)))?;
    let [train, val, test] = ratios[..] else {
        return Err(Error::Config("--ratios needs three values".into()));
    };
    let report = load_dataset(&args.input, format, args.max_records)?;
    log::info!(
        "loaded {} records ({} skipped, {} comments dropped)",
        report.records.len(),
        report.skipped_records,
        report.dropped_comments
    );
    create_dir(&args.out)?;
    write_jsonl(&args.out.join("all.jsonl"), &report.records)?;
    let labeled: Vec<NewsRecord> = report.records.into_iter().filter(|r| r.label.is_some()).collect();
    let ratio = make_splits(&labeled, SplitScheme::Ratio { train, val, test }, args.seed)?.remove(0);
    write_jsonl(&args.out.join("train.jsonl"), &ratio.train)?;
    write_jsonl(&args.out.join("validation.jsonl"), &ratio.validation)?;
    write_jsonl(&args.out.join("test.jsonl"), &ratio.test)?;
    write_json(&args.out.join("split.json"), &manifest(&ratio))?;
    let folds = make_splits(&labeled, SplitScheme::KFold { k: args.folds }, args.seed)?;
    let manifests: Vec<_> = folds.iter().map(manifest).collect();
    write_json(&args.out.join("folds.json"), &manifests)
}

pub fn cmd_train(args: &RunArgs) -> Result<()> {
    let config = args.resolve()?;
    let resources = config.load_resources()?;
    let split = config.load_split()?;
    let setup = config.enhance_setup()?;
    create_dir(&config.output)?;
    config.save(&config.output)?;
    let outcome = train_with_enhancement(&split, &config.train, &resources, &setup)?;
    save_checkpoint(&outcome.model, &config.output.join("model.ckpt"))?;
    write_history(&outcome.history, &config.output.join("history.csv"))?;
    if let Some(report) = &outcome.round {
        write_json(&config.output.join("report.json"), report)?;
    }
    let eval_on = if split.test.is_empty() { &split.validation } else { &split.test };
    if eval_on.is_empty() {
        log::warn!("no validation or test records; metrics.json not written");
        return Ok(());
    }
    let report = evaluate(&outcome.model, eval_on, &config.train, &resources)?;
    println!(
        "best epoch {}: accuracy {:.4} macro F1 {:.4} RMSE {:.4} ({:.1})",
        outcome.best_epoch,
        report.accuracy,
        report.macro_f1,
        report.rmse,
        report.rmse_pct()
    );
    MetricsFile::new(vec![report])?.write(&config.output.join("metrics.json"))
}

/// Loads a checkpoint, refusing one trained under a different model config.
fn load_model(path: &Path, config: &RunConfig, resources: &Resources) -> Result<Model> {
    let emotion_dim = config.train.featurizer(resources).emotion_dim();
    load_checkpoint(path, Some(&config.train.model_config(resources, emotion_dim)))
}

pub fn cmd_enhance(args: &EnhanceArgs) -> Result<()> {
    let config = args.run.resolve()?;
    let resources = config.load_resources()?;
    let model = load_model(&args.checkpoint, &config, &resources)?;
    let split = config.load_split()?;
    let setup = config.enhance_setup()?;
    let featurizer = config.train.featurizer(&resources);
    let substituter = crate::augment::Substituter {
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
    let (expanded, report) =
        enhancement_round(&split.train, &model, &config.augment, setup.thresholds, ctx, config.train.seed, 1)?;
    create_dir(&config.output)?;
    config.save(&config.output)?;
    let mut records = expanded.labeled;
    records.extend(expanded.pseudo.into_iter().map(|e| {
        let mut r = e.variant.record;
        r.label = Some(e.y_tilde);
        r
    }));
    write_jsonl(&config.output.join("expanded.jsonl"), &records)?;
    write_json(&config.output.join("report.json"), &report)?;
    println!("{}", serde_json::to_string(&report).expect("report serializes"));
    Ok(())
}

pub fn cmd_evaluate(args: &EvalArgs) -> Result<()> {
    let config = args.run.resolve()?;
    let resources = config.load_resources()?;
    let model = load_model(&args.checkpoint, &config, &resources)?;
    let split = config.load_split()?;
    let records = match args.split.as_str() {
        "train" => &split.train,
        "validation" => &split.validation,
        "test" => &split.test,
        other => return Err(Error::Config(format!("unknown split `{other}` (train, validation, test)"))),
    };
    let report = evaluate(&model, records, &config.train, &resources)?;
    create_dir(&config.output)?;
    config.save(&config.output)?;
    println!(
        "accuracy {:.4} macro F1 {:.4} RMSE {:.4} ({:.1})",
        report.accuracy,
        report.macro_f1,
        report.rmse,
        report.rmse_pct()
    );
    MetricsFile::new(vec![report])?.write(&config.output.join("metrics.json"))
}

pub fn cmd_predict(args: &PredictArgs) -> Result<()> {
    let config = args.run.resolve()?;
    let resources = config.load_resources()?;
    let model = load_model(&args.checkpoint, &config, &resources)?;
    let records = config.load_all()?;
    let featurizer = config.train.featurizer(&resources);
    create_dir(&config.output)?;
    config.save(&config.output)?;
    let mut lines = String::new();
    for r in &records {
        let p = model.predict(&featurizer.prepare(r)?, &resources.embeddings)?;
        let row = serde_json::json!({"id": r.id, "p_true": p[0], "p_fake": p[1], "pred": usize::from(p[1] > 0.5)});
        lines.push_str(&row.to_string());
        lines.push('\n');
    }
    let path = config.output.join("predictions.jsonl");
    fs::write(&path, lines).map_err(|e| Error::io(&path, e))?;
    if let Some(csv) = &args.export_emotion_series {
        export_emotion_series(&records, &featurizer.extractor(), csv)?;
    }
    Ok(())
}

/// One row per comment: record id, timestamp, emotion score.
pub fn export_emotion_series(records: &[NewsRecord], extractor: &EmotionExtractor<'_>, path: &Path) -> Result<()> {
    let mut text = String::from("record_id,ts,score\n");
    for r in records {
        for c in &r.comments {
            let id = if r.id.contains([',', '"', '\n']) {
                format!("\"{}\"", r.id.replace('"', "\"\""))
            } else {
                r.id.clone()
            };
            text.push_str(&format!("{id},{},{}\n", c.timestamp, extractor.vector(&c.text).score()));
        }
    }
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn cmd_crossval(args: &RunArgs) -> Result<()> {
    let config = args.resolve()?;
    let resources = config.load_resources()?;
    let records = config.load_all()?;
    let setup = config.enhance_setup()?;
    create_dir(&config.output)?;
    config.save(&config.output)?;
    let cv = crossvalidate(&records, config.data.folds, &config.train, &resources, Some(&setup))?;
    let m = &cv.metrics.mean;
    println!(
        "{} folds, variant {}: accuracy {:.4} macro F1 {:.4} RMSE {:.4} ({:.1})",
        cv.metrics.folds.len(),
        config.train.variant.name(),
        m.accuracy,
        m.macro_f1,
        m.rmse,
        m.rmse_pct()
    );
    cv.metrics.write(&config.output.join("metrics.json"))
}

pub fn cmd_synth(args: &SynthArgs) -> Result<()> {
    let mut params = SyntheticParams::default();
    if let Some(f) = args.interaction_fraction {
        params.interaction_fraction = f;
    }
    let records = generate_synthetic(args.n, args.seed, &params)?;
    create_dir(&args.out)?;
    write_jsonl(&args.out.join("all.jsonl"), &records)?;
    let emb_path = args.out.join("embeddings.txt");
    synthetic_embeddings(&params, args.seed).write(&emb_path)?;
    let lex_dir = args.out.join("lexicon");
    create_dir(&lex_dir)?;
    synthetic_lexicon().write_dir(&lex_dir)?;
    let syn_path = args.out.join("synonyms.tsv");
    synthetic_synonyms(&params).write(&syn_path)?;

    let mut config = RunConfig::default();
    config.output = args.out.join("run");
    config.data.path = Some(args.out.join("all.jsonl"));
    config.data.split_ratios = [0.6, 0.2, 0.2];
    config.resources = ResourceConfig {
        embeddings: Some(emb_path),
        lexicon: Some(lex_dir),
        synonyms: Some(syn_path),
    };
    config.train.seed = args.seed;
    config.train.embedding_dim = params.embedding_dim;
    config.train.hidden_dim = 16;
    config.train.l2 = 1e-4;
    config.train.max_text_len = 32;
    config.train.max_comments = params.comments_per_record;
    config.augment.entries.truncate(1);
    let path = args.out.join("config.toml");
    fs::write(&path, config.to_toml()).map_err(|e| Error::io(&path, e))?;
    println!("wrote {} records to {}", records.len(), args.out.display());
    Ok(())
}

pub fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Prepare(a) => cmd_prepare(a),
        Command::Train(a) => cmd_train(a),
        Command::Enhance(a) => cmd_enhance(a),
        Command::Evaluate(a) => cmd_evaluate(a),
        Command::Predict(a) => cmd_predict(a),
        Command::Crossval(a) => cmd_crossval(a),
        Command::Synth(a) => cmd_synth(a),
    }
}

/// Exit status for an outcome: 0 ok, 1 runtime failure, 2 usage error.
pub fn exit_code(result: &Result<()>) -> i32 {
    match result {
        Ok(()) => 0,
        Err(e) if e.is_usage() => 2,
        Err(_) => 1,
    }
}

/// Parses `std::env::args`, runs, and returns the process exit code.
pub fn main() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).try_init();
    let result = run(&cli);
    if let Err(e) = &result {
        eprintln!("error: {e}");
    }
    exit_code(&result)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_config_round_trips_through_toml() {
        let c = RunConfig::default();
        let back: RunConfig = toml::from_str(&c.to_toml()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn flags_override_file_values() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cfg.toml");
        fs::write(&path, "[train]\nepochs = 7\nhidden_dim = 8\n").unwrap();
        let args = RunArgs {
            config: Some(path),
            epochs: Some(3),
            ..RunArgs::default()
        };
        let c = args.resolve().unwrap();
        assert_eq!(c.train.epochs, 3);
        assert_eq!(c.train.hidden_dim, 8);
        assert_eq!(c.train.batch_size, 32);
    }

    #[test]
    fn low_threshold_is_a_usage_error() {
        let args = RunArgs {
            tau_p: Some(0.4),
            ..RunArgs::default()
        };
        let r = args.resolve().map(|_| ());
        assert_eq!(exit_code(&r), 2);
    }
}

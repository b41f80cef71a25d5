//! News records with time-stamped comments, dataset loaders, splits, and a
//! synthetic corpus generator.

mod formats;
mod split;
pub mod synthetic;

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use split::{make_splits, DatasetSplit, SplitScheme};
pub use synthetic::{generate_synthetic, SyntheticParams};

/// Binary verdict for a news item.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Label {
    True = 0,
    Fake = 1,
}

impl Label {
    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(index: usize) -> Option<Label> {
        match index {
            0 => Some(Label::True),
            1 => Some(Label::Fake),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Comment {
    pub text: String,
    /// Epoch seconds.
    pub timestamp: i64,
    /// Position of the comment in the raw source, used to break timestamp ties.
    pub source_order: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NewsRecord {
    pub id: String,
    pub news_text: String,
    /// Sorted ascending by `(timestamp, source_order)`.
    pub comments: Vec<Comment>,
    pub label: Option<Label>,
}

impl NewsRecord {
    /// Builds a record, dropping blank comments and restoring time order.
    pub fn new(
        id: impl Into<String>,
        news_text: impl Into<String>,
        comments: Vec<Comment>,
        label: Option<Label>,
    ) -> Self {
        let mut record = NewsRecord {
            id: id.into(),
            news_text: news_text.into(),
            comments,
            label,
        };
        record.normalize_comments();
        record
    }

    pub fn normalize_comments(&mut self) {
        self.comments.retain(|c| !c.text.trim().is_empty());
        self.comments
            .sort_by_key(|c| (c.timestamp, c.source_order));
    }
}

/// Supported on-disk dataset layouts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DatasetFormat {
    Jsonl,
    Rumoureval19,
    Weibo16,
}

impl FromStr for DatasetFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "jsonl" => Ok(DatasetFormat::Jsonl),
            "rumoureval19" => Ok(DatasetFormat::Rumoureval19),
            "weibo16" => Ok(DatasetFormat::Weibo16),
            other => Err(Error::Config(format!("unknown dataset format `{other}`"))),
        }
    }
}

/// Records plus counts of what the loader had to discard.
#[derive(Debug, Clone, Default)]
pub struct LoadReport {
    pub records: Vec<NewsRecord>,
    pub skipped_records: usize,
    pub dropped_comments: usize,
}

#[derive(Debug, Serialize, Deserialize)]
struct JsonComment {
    text: String,
    ts: i64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    order: Option<usize>,
}

#[derive(Debug, Serialize, Deserialize)]
struct JsonRecord {
    id: String,
    news: String,
    label: Option<u8>,
    #[serde(default)]
    comments: Vec<JsonComment>,
}

/// Loads a dataset in `format`, keeping at most `max_records` usable records.
pub fn load_dataset(
    path: &Path,
    format: DatasetFormat,
    max_records: Option<usize>,
) -> Result<LoadReport> {
    let mut report = match format {
        DatasetFormat::Jsonl => load_jsonl(path)?,
        DatasetFormat::Rumoureval19 => formats::load_rumoureval19(path)?,
        DatasetFormat::Weibo16 => formats::load_weibo16(path)?,
    };
    if let Some(max) = max_records {
        report.records.truncate(max);
    }
    if report.skipped_records > 0 {
        log::warn!(
            "{}: skipped {} malformed record(s)",
            path.display(),
            report.skipped_records
        );
    }
    if report.records.is_empty() {
        return Err(Error::EmptyDataset(path.to_path_buf()));
    }
    Ok(report)
}

fn load_jsonl(path: &Path) -> Result<LoadReport> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut report = LoadReport::default();
    for (line_no, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        let line = line.trim_start_matches('\u{feff}');
        if line.trim().is_empty() {
            continue;
        }
        let parsed: JsonRecord = match serde_json::from_str(line) {
            Ok(r) => r,
            Err(e) => {
                log::warn!("{}:{}: {e}", path.display(), line_no + 1);
                report.skipped_records += 1;
                continue;
            }
        };
        match record_from_json(parsed) {
            Some((record, dropped)) => {
                report.dropped_comments += dropped;
                report.records.push(record);
            }
            None => {
                log::warn!("{}:{}: unusable record", path.display(), line_no + 1);
                report.skipped_records += 1;
            }
        }
    }
    Ok(report)
}

fn record_from_json(json: JsonRecord) -> Option<(NewsRecord, usize)> {
    if json.news.trim().is_empty() {
        return None;
    }
    let label = match json.label {
        None => None,
        Some(v) => Some(Label::from_index(v as usize)?),
    };
    let total = json.comments.len();
    let comments = json
        .comments
        .into_iter()
        .enumerate()
        .map(|(i, c)| Comment {
            text: c.text,
            timestamp: c.ts,
            source_order: c.order.unwrap_or(i),
        })
        .collect();
    let record = NewsRecord::new(json.id, json.news, comments, label);
    let dropped = total - record.comments.len();
    Some((record, dropped))
}

/// Parses one canonical JSONL line.
pub fn record_from_json_line(line: &str) -> Result<NewsRecord> {
    let parsed: JsonRecord =
        serde_json::from_str(line.trim_start_matches('\u{feff}')).map_err(|e| Error::Invalid(format!("record json: {e}")))?;
    record_from_json(parsed)
        .map(|(r, _)| r)
        .ok_or_else(|| Error::Invalid("record has empty news text or a bad label".into()))
}

/// Serializes one record as a canonical JSONL line (without newline).
pub fn record_to_json_line(record: &NewsRecord) -> String {
    let json = JsonRecord {
        id: record.id.clone(),
        news: record.news_text.clone(),
        label: record.label.map(|l| l.index() as u8),
        comments: record
            .comments
            .iter()
            .enumerate()
            .map(|(i, c)| JsonComment {
                text: c.text.clone(),
                ts: c.timestamp,
                // Only needed when the sorted position differs from the raw one.
                order: (c.source_order != i).then_some(c.source_order),
            })
            .collect(),
    };
    serde_json::to_string(&json).expect("record serialization cannot fail")
}

pub fn write_jsonl(path: &Path, records: &[NewsRecord]) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
    }
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    for record in records {
        writeln!(out, "{}", record_to_json_line(record)).map_err(|e| Error::io(path, e))?;
    }
    out.flush().map_err(|e| Error::io(path, e))
}
